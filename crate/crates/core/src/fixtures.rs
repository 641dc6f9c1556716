//! Bundled reference games. The same files ship under `fixtures/games/`.

use crate::game::Game;

macro_rules! games {
    ($($fn_name:ident => $file:literal),* $(,)?) => {
        /// `(file stem, JSON text)` for every bundled game.
        pub const GAME_FILES: &[(&str, &str)] = &[
            $(($file, include_str!(concat!("../fixtures/games/", $file, ".game")))),*
        ];

        $(
            pub fn $fn_name() -> Game {
                by_name($file).expect("bundled game parses")
            }
        )*
    };
}

games! {
    opening => "opening",
    add_222 => "add_222",
    pne_not_l => "pne_not_l",
    x_ne_l => "x_ne_l",
    budget_additive_pair => "budget_additive_pair",
    two_l => "two_l",
    budget_is_bad => "budget_is_bad",
    xos_no_equi => "xos_no_equi",
}

/// Loads a bundled game by file stem.
pub fn by_name(name: &str) -> Option<Game> {
    GAME_FILES
        .iter()
        .find(|(stem, _)| *stem == name)
        .map(|(_, text)| Game::from_json(text).expect("bundled game parses"))
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_bundled_game_loads() {
        for (name, _) in super::GAME_FILES {
            assert!(super::by_name(name).is_some(), "{name}");
        }
    }
}
