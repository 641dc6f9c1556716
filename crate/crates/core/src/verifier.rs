//! Exact pure-Nash verification.
//!
//! Fix every price but vendor `i`'s. For a set `S` containing `i` the buyer's
//! utility is `a_S - p_i` with `a_S = v(S) - p(S \ {i})`, affordable while
//! `p_i <= c_S = B - p(S \ {i})`; sets without `i` have constant utility. All
//! the lines `a_S - p_i` are parallel, so the demanded set can only change at
//! a budget boundary `c_S` or where some `a_S - p_i` meets some constant
//! `g_T`. Between consecutive critical prices the demand is constant, and a
//! sold vendor's payoff is its own price. Checking every critical price plus
//! one interior point per open interval therefore decides the best response
//! exactly.

use std::cmp::Ordering;

use serde::Serialize;

use crate::demand::{demand, prefer, DemandOutcome, PriceVector};
use crate::game::Game;
use crate::items::ItemSet;
use crate::rational::Rational;

/// Sorted, distinct prices at which vendor `vendor`'s demand can change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalPriceSet {
    pub vendor: usize,
    pub breakpoints: Vec<Rational>,
}

/// A price that strictly improves on the vendor's current payoff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub price: Rational,
    pub outcome: DemandOutcome,
    pub gain: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BestResponse {
    pub vendor: usize,
    pub current_utility: Rational,
    /// Supremum of the vendor's payoff over all of its own prices. Zero if it
    /// is never sold.
    pub sup_deviation_utility: Rational,
    /// Whether some price actually achieves the supremum.
    pub sup_attained: bool,
    pub witness: Option<Deviation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub is_pne: bool,
    pub outcome: DemandOutcome,
    pub per_vendor: Vec<BestResponse>,
}

impl VerifyReport {
    /// Vendors holding a profitable deviation.
    pub fn deviators(&self) -> impl Iterator<Item = &BestResponse> {
        self.per_vendor.iter().filter(|b| b.witness.is_some())
    }
}

/// One vendor's view with everyone else's price fixed.
struct VendorView {
    vendor: usize,
    current: Rational,
    /// Sets containing the vendor as `(S, a_S, c_S)`, best-first under the
    /// buyer's preference at any common price.
    with: Vec<(ItemSet, Rational, Rational)>,
    /// Affordable sets without the vendor as `(T, g_T)`.
    without: Vec<(ItemSet, Rational)>,
    best_without: (Rational, ItemSet),
}

impl VendorView {
    fn new(game: &Game, prices: &PriceVector, vendor: usize) -> Self {
        assert!(vendor < game.n(), "vendor {vendor} out of range");
        game.check_prices(prices).expect("price vector matches the game");
        let budget = game.budget();
        let others = prices.with_price(vendor, Rational::ZERO);

        let mut with = Vec::new();
        let mut without = Vec::new();
        for set in ItemSet::all(game.n()) {
            let rest = others.cost(set);
            if set.contains(vendor) {
                with.push((set, game.value(set) - rest, budget - rest));
            } else if rest <= budget {
                without.push((set, game.value(set) - rest));
            }
        }
        with.sort_by(|a, b| prefer((b.1, b.0), (a.1, a.0)));
        let best_without = without
            .iter()
            .map(|&(t, g)| (g, t))
            .max_by(|&a, &b| prefer(a, b))
            .expect("the empty set is always affordable");

        VendorView { vendor, current: prices[vendor], with, without, best_without }
    }

    /// Whether the buyer takes the vendor's item at price `x`.
    fn sold_at(&self, x: Rational) -> bool {
        self.with
            .iter()
            .find(|(_, _, limit)| x <= *limit)
            .is_some_and(|&(s, a, _)| prefer((a - x, s), self.best_without) == Ordering::Greater)
    }

    fn critical_prices(&self) -> Vec<Rational> {
        let mut points = vec![Rational::ZERO, self.current];
        for &(_, a, limit) in &self.with {
            if limit.is_negative() {
                continue;
            }
            points.push(limit);
            for &(_, g) in &self.without {
                let x = a - g;
                if !x.is_negative() && x <= limit {
                    points.push(x);
                }
            }
        }
        points.sort();
        points.dedup();
        points
    }

    /// Breakpoints and interior midpoints in descending order, tagged with
    /// the index of the open interval's upper breakpoint for midpoints.
    fn descending_trials(points: &[Rational]) -> impl Iterator<Item = (Rational, Option<usize>)> + '_ {
        (0..points.len()).rev().flat_map(move |k| {
            let mid = (k + 1 < points.len()).then(|| (points[k].midpoint(points[k + 1]), Some(k + 1)));
            mid.into_iter().chain(std::iter::once((points[k], None)))
        })
    }
}

pub fn critical_prices(game: &Game, prices: &PriceVector, vendor: usize) -> CriticalPriceSet {
    let view = VendorView::new(game, prices, vendor);
    CriticalPriceSet { vendor, breakpoints: view.critical_prices() }
}

/// Supremum of vendor `vendor`'s payoff over its own price, and a profitable
/// deviation if one exists.
pub fn best_response(game: &Game, prices: &PriceVector, vendor: usize) -> BestResponse {
    let view = VendorView::new(game, prices, vendor);
    let points = view.critical_prices();
    let current_utility = if view.sold_at(view.current) { view.current } else { Rational::ZERO };

    // Nothing above the largest breakpoint is affordable with the vendor in.
    debug_assert!(!view.sold_at(points[points.len() - 1] + Rational::ONE));

    let mut sup = Rational::ZERO;
    let mut sup_attained = false;
    let mut witness_price = None;
    for (x, upper) in VendorView::descending_trials(&points) {
        if !view.sold_at(x) {
            continue;
        }
        match upper {
            None => {
                sup = x;
                sup_attained = true;
                witness_price = Some(x);
            }
            Some(k) => {
                sup = points[k];
                witness_price = Some(x);
            }
        }
        break;
    }

    let witness = witness_price.filter(|_| sup > current_utility).map(|price| {
        let deviated = prices.with_price(vendor, price);
        let outcome = demand(game, &deviated);
        debug_assert!(outcome.chosen.contains(vendor));
        Deviation { price, outcome, gain: price - current_utility }
    });

    BestResponse {
        vendor: view.vendor,
        current_utility,
        sup_deviation_utility: sup,
        sup_attained,
        witness,
    }
}

/// Decides exactly whether `prices` is a pure Nash equilibrium.
pub fn verify_pne(game: &Game, prices: &PriceVector) -> VerifyReport {
    let outcome = demand(game, prices);
    let per_vendor: Vec<_> = (0..game.n()).map(|i| best_response(game, prices, i)).collect();
    VerifyReport {
        is_pne: per_vendor.iter().all(|b| b.witness.is_none()),
        outcome,
        per_vendor,
    }
}

/// Where a vendor is sold as a function of its own price.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeviationProfile {
    pub vendor: usize,
    pub breakpoints: Vec<Rational>,
    /// Every breakpoint and one interior point per gap, ascending, plus one
    /// point past the last breakpoint.
    pub samples: Vec<ProfileSample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileSample {
    pub price: Rational,
    pub is_breakpoint: bool,
    pub sold: bool,
}

pub fn deviation_profile(game: &Game, prices: &PriceVector, vendor: usize) -> DeviationProfile {
    let view = VendorView::new(game, prices, vendor);
    let breakpoints = view.critical_prices();
    let mut samples = Vec::with_capacity(2 * breakpoints.len());
    for (k, &b) in breakpoints.iter().enumerate() {
        samples.push(ProfileSample { price: b, is_breakpoint: true, sold: view.sold_at(b) });
        let next = breakpoints.get(k + 1).copied().unwrap_or(b + Rational::ONE);
        let mid = b.midpoint(next);
        samples.push(ProfileSample { price: mid, is_breakpoint: false, sold: view.sold_at(mid) });
    }
    DeviationProfile { vendor, breakpoints, samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{equal_utility_prices, is_market_clearing};
    use crate::fixtures;
    use crate::valuation::Valuation;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn p(s: &str) -> PriceVector {
        s.parse().unwrap()
    }

    fn set(items: &[usize]) -> ItemSet {
        items.iter().copied().collect()
    }

    #[test]
    fn critical_prices_two_items() {
        let g = fixtures::opening();
        let cps = critical_prices(&g, &p("1,0.3"), 1);
        assert_eq!(cps.breakpoints, vec![r("0"), r("0.3"), r("1/2"), r("1")]);
        assert!(cps.breakpoints.iter().all(|b| !b.is_negative()));
    }

    #[test]
    fn critical_prices_single_item() {
        let g = Game::new(Valuation::additive(vec![r("5")]).unwrap(), r("1")).unwrap();
        let cps = critical_prices(&g, &p("0.5"), 0);
        assert_eq!(cps.breakpoints, vec![r("0"), r("0.5"), r("1")]);
    }

    #[test]
    fn critical_prices_include_budget_boundary() {
        let g = fixtures::x_ne_l();
        let cps = critical_prices(&g, &p("0.9,0.1,0.9"), 2);
        assert!(cps.breakpoints.contains(&r("0.1")));
    }

    #[test]
    fn excluded_vendor_cannot_sell() {
        let g = fixtures::opening();
        let br = best_response(&g, &p("1,0.3"), 1);
        assert_eq!(br.current_utility, Rational::ZERO);
        assert_eq!(br.sup_deviation_utility, Rational::ZERO);
        assert!(br.sup_attained);
        assert!(br.witness.is_none());
    }

    #[test]
    fn xos_equal_utility_is_not_stable() {
        let g = fixtures::xos_no_equi();
        let prices = p("7/6,1/6,1/6");
        let br = best_response(&g, &prices, 0);
        // Sold alone up to 4/3, where {b,c} ties and wins on size.
        assert_eq!(br.sup_deviation_utility, r("4/3"));
        assert!(!br.sup_attained);
        let witness = br.witness.unwrap();
        assert!(witness.gain.is_positive());
        assert_eq!(witness.outcome.chosen, set(&[0]));

        let at = demand(&g, &prices.with_price(0, r("13/10")));
        assert_eq!(at.chosen, set(&[0]));
        assert_eq!(at.buyer_utility, r("17/10"));
        let at = demand(&g, &prices.with_price(0, r("4/3")));
        assert_eq!(at.chosen, set(&[1, 2]));

        assert!(!verify_pne(&g, &prices).is_pne);
    }

    #[test]
    fn reference_equilibria_verify() {
        let report = verify_pne(&fixtures::x_ne_l(), &p("0.9,0.1,0.9"));
        assert!(report.is_pne);
        assert_eq!(report.outcome.chosen, set(&[0, 1]));

        assert!(verify_pne(&fixtures::pne_not_l(), &p("0.6,0.4,0.3,0.3")).is_pne);

        let report = verify_pne(&fixtures::budget_is_bad(), &p("1/2,1/2,1/4,1/4"));
        assert!(report.is_pne);
        assert_eq!(report.outcome.chosen, set(&[0, 1]));

        let g = fixtures::add_222();
        let prices = equal_utility_prices(&g, g.items(), &g.valuation().singleton_values()).unwrap();
        assert!(verify_pne(&g, &prices).is_pne);
        assert!(is_market_clearing(&g, &prices));
    }

    #[test]
    fn underpricing_is_caught() {
        let g = fixtures::add_222();
        let report = verify_pne(&g, &p("1/4,1/3,1/3"));
        assert!(!report.is_pne);
        let dev = report.per_vendor[0].witness.as_ref().unwrap();
        assert!(dev.price > r("1/4"));
        assert!(dev.outcome.chosen.contains(0));
    }

    #[test]
    fn sweep_agrees_with_demand() {
        let g = fixtures::two_l();
        let prices = p("0.1,0.05,0.1,0.02");
        for vendor in 0..4 {
            let profile = deviation_profile(&g, &prices, vendor);
            for s in &profile.samples {
                let chosen = demand(&g, &prices.with_price(vendor, s.price)).chosen;
                assert_eq!(s.sold, chosen.contains(vendor), "vendor {vendor} at {}", s.price);
            }
        }
    }
}
