use pricegame::equilibrium::{base_set, check_constraint, equal_utility_prices};
use pricegame::oracle::oracle_demand;
use pricegame::verifier::{best_response, verify_pne};
use pricegame::{demand, Game, GameFile, ItemSet, PriceVector, Rational, TableClass, Valuation};
use proptest::prelude::*;

fn twelfths(range: std::ops::RangeInclusive<i128>) -> impl Strategy<Value = Rational> {
    range.prop_map(|k| Rational::new(k, 12))
}

fn additive_game(max_n: usize) -> impl Strategy<Value = Game> {
    (prop::collection::vec(twelfths(0..=36), 1..=max_n), twelfths(1..=24))
        .prop_map(|(values, budget)| Game::new(Valuation::Additive { values }, budget).unwrap())
}

/// Coverage functions over a small universe, as tables.
fn coverage_game(max_n: usize) -> impl Strategy<Value = Game> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..64, n),
                prop::collection::vec(twelfths(1..=12), 6),
                twelfths(1..=24),
            )
        })
        .prop_map(|(covers, weights, budget)| {
            let n = covers.len();
            let table = ItemSet::all(n)
                .map(|s| {
                    let union = s.iter().fold(0u8, |acc, i| acc | covers[i]);
                    (0..6).filter(|e| union & (1 << e) != 0).map(|e| weights[e]).sum()
                })
                .collect();
            Game::new(Valuation::Table { n, values: table, class: TableClass::Submodular }, budget).unwrap()
        })
}

fn xos_game(max_n: usize) -> impl Strategy<Value = Game> {
    (1..=max_n)
        .prop_flat_map(|n| (prop::collection::vec(prop::collection::vec(twelfths(0..=24), n), 1..=3), twelfths(1..=24)))
        .prop_map(|(clauses, budget)| {
            let n = clauses[0].len();
            Game::new(Valuation::Xos { n, clauses }, budget).unwrap()
        })
}

fn any_game(max_n: usize) -> impl Strategy<Value = Game> {
    prop_oneof![additive_game(max_n), coverage_game(max_n), xos_game(max_n)]
}

fn with_prices(game: impl Strategy<Value = Game>) -> impl Strategy<Value = (Game, PriceVector)> {
    game.prop_flat_map(|g| {
        let n = g.n();
        (Just(g), prop::collection::vec(twelfths(0..=18), n))
    })
    .prop_map(|(g, p)| (g, PriceVector::new(p).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn demand_matches_oracle((game, prices) in with_prices(any_game(5))) {
        prop_assert_eq!(demand(&game, &prices), oracle_demand(&game, &prices));
    }

    #[test]
    fn free_items_are_always_taken((game, prices) in with_prices(any_game(5))) {
        let out = demand(&game, &prices);
        prop_assert!(prices.free_items().is_subset(out.chosen));
        prop_assert!(out.cost <= game.budget());
        prop_assert!(out.num_max_size_optima >= 1 && out.num_max_size_optima <= out.num_optima);
    }

    #[test]
    fn valuations_are_monotone(game in any_game(5)) {
        let v = game.valuation();
        prop_assert!(v.validate().passes());
        for s in ItemSet::all(game.n()) {
            for i in 0..game.n() {
                prop_assert!(v.value(s.with(i)) >= v.value(s));
            }
        }
    }

    #[test]
    fn additive_marginals_are_item_values(game in additive_game(6)) {
        let v = game.valuation();
        prop_assert_eq!(v.item_marginals(), v.singleton_values());
        for s in ItemSet::all(game.n()) {
            let direct: Rational = s.iter().map(|i| v.value(ItemSet::singleton(i))).sum();
            prop_assert_eq!(v.value(s), direct);
        }
    }

    #[test]
    fn equal_utility_prices_are_equilibria(game in additive_game(5)) {
        let values = game.valuation().singleton_values();
        if let Ok(prices) = equal_utility_prices(&game, game.items(), &values) {
            let total: Rational = prices.as_slice().iter().sum();
            prop_assert_eq!(total, game.budget());
            let surplus = values[0] - prices[0];
            for i in 0..game.n() {
                prop_assert!(prices[i].is_positive());
                prop_assert_eq!(values[i] - prices[i], surplus);
            }
            let report = verify_pne(&game, &prices);
            prop_assert!(report.is_pne);
            prop_assert_eq!(report.outcome.chosen, game.items());
        }
    }

    #[test]
    fn constraint_moves_into_subsets(game in additive_game(6)) {
        let values = game.valuation().singleton_values();
        let full = game.items();
        for u in full.subsets().filter(|u| !u.is_empty()) {
            if !check_constraint(&game, u, &values).unwrap().holds {
                continue;
            }
            for a in u.subsets().filter(|a| !a.is_empty() && *a != u) {
                let sum: Rational = a.iter().map(|j| values[j]).sum();
                let threshold = (sum - game.budget()) / Rational::from(a.len());
                for i in u.difference(a) {
                    prop_assert!(values[i] > threshold, "U={} A={} i={}", u, a, i);
                }
            }
        }
    }

    #[test]
    fn base_set_is_maximal_and_priced_stably(game in additive_game(6)) {
        let Ok(base) = base_set(&game) else { return Ok(()) };
        let values = game.valuation().singleton_values();
        prop_assert!(check_constraint(&game, base.items, &values).unwrap().holds);
        for extra in game.items().difference(base.items).subsets().filter(|s| !s.is_empty()) {
            let bigger = base.items.union(extra);
            prop_assert!(!check_constraint(&game, bigger, &values).unwrap().holds);
        }
        let prices = equal_utility_prices(&game, base.items, &values).unwrap();
        prop_assert!(verify_pne(&game, &prices).is_pne);
    }

    #[test]
    fn best_response_dominates_grid_deviations((game, prices) in with_prices(any_game(4)), vendor in 0usize..4) {
        let vendor = vendor % game.n();
        let best = best_response(&game, &prices, vendor);
        let top = (game.budget() * Rational::from(48)).floor();
        for k in 0..=top {
            let x = Rational::new(k, 48);
            let out = demand(&game, &prices.with_price(vendor, x));
            if out.chosen.contains(vendor) {
                prop_assert!(x <= best.sup_deviation_utility);
                if x > best.current_utility {
                    prop_assert!(best.witness.is_some());
                }
            }
        }
        if let Some(w) = &best.witness {
            prop_assert!(w.outcome.chosen.contains(vendor));
            prop_assert!(w.price > best.current_utility);
            prop_assert_eq!(&w.outcome, &demand(&game, &prices.with_price(vendor, w.price)));
        }
    }

    #[test]
    fn equilibrium_welfare_covers_best_single_item((game, prices) in with_prices(any_game(4))) {
        let report = verify_pne(&game, &prices);
        if report.is_pne && !report.outcome.positively_priced.is_empty() {
            let best_single = game.valuation().singleton_values().into_iter().max().unwrap();
            prop_assert!(game.value(report.outcome.positively_priced) >= best_single);
        }
    }

    #[test]
    fn game_files_round_trip(game in any_game(5)) {
        let text = game.to_json();
        let back = Game::from_json(&text).unwrap();
        prop_assert_eq!(&back, &game);
        let file: GameFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(file.n, game.n());
    }

    #[test]
    fn rationals_round_trip(n in -10_000i128..10_000, d in 1i128..10_000) {
        let x = Rational::new(n, d);
        prop_assert_eq!(x.to_string().parse::<Rational>().unwrap(), x);
    }
}
