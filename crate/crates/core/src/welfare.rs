//! Social welfare of an outcome, the best-to-worst equilibrium ratio, and a
//! family of additive games where that ratio grows linearly in `n`.

use serde::Serialize;

use crate::demand::{demand, PriceVector};
use crate::game::Game;
use crate::items::ItemSet;
use crate::rational::Rational;
use crate::valuation::Valuation;
use crate::verifier::verify_pne;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WelfareReport {
    /// `v(X+)`: items bought at price zero do not count.
    pub welfare: Rational,
    pub chosen: ItemSet,
    pub excluded_free_items: ItemSet,
    pub market_clearing: bool,
}

pub fn social_welfare(game: &Game, prices: &PriceVector) -> WelfareReport {
    let outcome = demand(game, prices);
    let sold = outcome.positively_priced;
    WelfareReport {
        welfare: game.value(sold),
        chosen: outcome.chosen,
        excluded_free_items: outcome.chosen.difference(sold),
        market_clearing: sold == game.items(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatedEquilibrium {
    pub prices: PriceVector,
    pub welfare: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatioReport {
    /// Candidates that passed exact verification, in input order.
    pub equilibria: Vec<RatedEquilibrium>,
    /// Candidates that did not.
    pub rejected: Vec<PriceVector>,
    pub best: Rational,
    pub worst: Rational,
    pub ratio: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WelfareError {
    #[error("no candidate price vectors given")]
    NoCandidates,
    #[error("none of the {0} candidates is an equilibrium")]
    NoEquilibrium(usize),
    #[error("the worst verified equilibrium has zero welfare")]
    ZeroWorstWelfare,
    #[error("the family needs n >= {min}, got {n}")]
    FamilyTooSmall { n: usize, min: usize },
    #[error("the family needs scale > 1, got {0}")]
    FamilyScale(Rational),
    #[error("the constructed {which} prices are not an equilibrium for n = {n}")]
    FamilyNotEquilibrium { n: usize, which: &'static str },
}

/// Best over worst welfare among the candidates that are exact equilibria.
pub fn equilibrium_ratio(game: &Game, candidates: &[PriceVector]) -> Result<RatioReport, WelfareError> {
    if candidates.is_empty() {
        return Err(WelfareError::NoCandidates);
    }
    let mut equilibria = Vec::new();
    let mut rejected = Vec::new();
    for prices in candidates {
        if verify_pne(game, prices).is_pne {
            let welfare = social_welfare(game, prices).welfare;
            equilibria.push(RatedEquilibrium { prices: prices.clone(), welfare });
        } else {
            rejected.push(prices.clone());
        }
    }
    let best = equilibria.iter().map(|e| e.welfare).max().ok_or(WelfareError::NoEquilibrium(candidates.len()))?;
    let worst = equilibria.iter().map(|e| e.welfare).min().unwrap();
    if worst.is_zero() {
        return Err(WelfareError::ZeroWorstWelfare);
    }
    Ok(RatioReport { equilibria, rejected, best, worst, ratio: best / worst })
}

/// Smallest `n` for which both constructed price vectors verify.
pub const POA_FAMILY_MIN_N: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoaFamily {
    pub game: Game,
    pub worst: PriceVector,
    pub best: PriceVector,
}

/// The family at top value 2; see [`poa_family_scaled`].
pub fn poa_family(n: usize) -> Result<PoaFamily, WelfareError> {
    poa_family_scaled(n, Rational::from(2))
}

/// Additive values `(k, k-1 repeated n-3 times, 0.55, 0.55)` with budget 1.
///
/// In the bad equilibrium item 0 takes the whole budget and nothing else
/// is sold at a positive price. In the good one item 0 and the middle items
/// share the budget evenly between them and the two small items are priced
/// out. Both vectors are verified before returning.
pub fn poa_family_scaled(n: usize, scale: Rational) -> Result<PoaFamily, WelfareError> {
    if n < POA_FAMILY_MIN_N {
        return Err(WelfareError::FamilyTooSmall { n, min: POA_FAMILY_MIN_N });
    }
    if scale <= Rational::ONE {
        return Err(WelfareError::FamilyScale(scale));
    }
    let family = poa_family_unchecked(n, scale);
    for (which, prices) in [("worst", &family.worst), ("best", &family.best)] {
        if !verify_pne(&family.game, prices).is_pne {
            return Err(WelfareError::FamilyNotEquilibrium { n, which });
        }
    }
    Ok(family)
}

/// The same construction without the size check or verification, for
/// `n >= 4`. Below [`POA_FAMILY_MIN_N`] the good vector is not an
/// equilibrium.
pub fn poa_family_unchecked(n: usize, scale: Rational) -> PoaFamily {
    assert!(n >= 4, "the family needs at least four items");
    let middle = n - 3;
    let small = Rational::new(55, 100);
    let mut values = vec![scale];
    values.extend(std::iter::repeat(scale - Rational::ONE).take(middle));
    values.extend([small, small]);
    let game = Game::new(Valuation::Additive { values }, Rational::ONE).expect("family values are valid");

    let mut worst = vec![Rational::ZERO; n];
    worst[0] = Rational::ONE;
    let half = Rational::new(1, 2);
    let mut best = vec![half];
    best.extend(std::iter::repeat(half / Rational::from(middle)).take(middle));
    best.extend([Rational::new(1, 4), Rational::new(1, 4)]);

    PoaFamily {
        game,
        worst: PriceVector::new(worst).expect("nonnegative"),
        best: PriceVector::new(best).expect("nonnegative"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{base_set, equal_utility_prices};
    use crate::fixtures;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn family_welfare_and_ratio() {
        let f = poa_family(9).unwrap();
        assert_eq!(social_welfare(&f.game, &f.worst).welfare, r("2"));
        assert_eq!(social_welfare(&f.game, &f.best).welfare, r("8"));
        let report = equilibrium_ratio(&f.game, &[f.worst.clone(), f.best.clone()]).unwrap();
        assert_eq!(report.ratio, r("4"));
        assert!(report.rejected.is_empty());

        let f = poa_family(10).unwrap();
        let report = equilibrium_ratio(&f.game, &[f.worst, f.best]).unwrap();
        assert_eq!(report.ratio, r("9/2"));
    }

    #[test]
    fn family_worst_is_base_set_pricing() {
        let f = poa_family(9).unwrap();
        let base = base_set(&f.game).unwrap();
        assert_eq!(base.items, ItemSet::singleton(0));
        assert_eq!(base.stop.unwrap().threshold, Rational::ONE);
        assert_eq!(equal_utility_prices(&f.game, base.items, &f.game.valuation().singleton_values()).unwrap(), f.worst);
    }

    #[test]
    fn family_breaks_for_small_n() {
        assert_eq!(poa_family(8).unwrap_err(), WelfareError::FamilyTooSmall { n: 8, min: 9 });
        let f = poa_family_unchecked(6, r("2"));
        assert!(verify_pne(&f.game, &f.worst).is_pne);
        assert!(!verify_pne(&f.game, &f.best).is_pne);
    }

    #[test]
    fn scaled_family() {
        let f = poa_family_scaled(9, r("3")).unwrap();
        let report = equilibrium_ratio(&f.game, &[f.worst, f.best]).unwrap();
        assert_eq!(report.worst, r("3"));
    }

    #[test]
    fn free_items_are_excluded() {
        let g = fixtures::add_222();
        let all_free = social_welfare(&g, &"0,0,0".parse().unwrap());
        assert_eq!(all_free.welfare, Rational::ZERO);
        assert_eq!(all_free.excluded_free_items, g.items());
        assert!(!all_free.market_clearing);

        let cleared = social_welfare(&g, &"1/3,1/3,1/3".parse().unwrap());
        assert!(cleared.market_clearing);
        assert_eq!(cleared.welfare, g.value(g.items()));
    }

    #[test]
    fn ratio_edge_cases() {
        let g = fixtures::add_222();
        let eq: PriceVector = "1/3,1/3,1/3".parse().unwrap();
        assert_eq!(equilibrium_ratio(&g, &[eq.clone()]).unwrap().ratio, Rational::ONE);
        assert_eq!(equilibrium_ratio(&g, &[]), Err(WelfareError::NoCandidates));
        let bad: PriceVector = "1/4,1/3,1/3".parse().unwrap();
        assert_eq!(equilibrium_ratio(&g, &[bad.clone()]), Err(WelfareError::NoEquilibrium(1)));
        let report = equilibrium_ratio(&g, &[bad, eq]).unwrap();
        assert_eq!(report.rejected.len(), 1);
    }
}
