//! Constructive side: the relative valuation constraint, equal-utility prices,
//! the base set of additive games, the unbudgeted marginal-price profile and
//! the market-clearing predicate.

use serde::Serialize;

use crate::demand::{demand, PriceVector};
use crate::game::Game;
use crate::items::ItemSet;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EquilibriumError {
    #[error("the constraint needs a nonempty set")]
    EmptySet,
    #[error("{got} weights for {n} items")]
    WeightLength { n: usize, got: usize },
    #[error("set {set} is not within the game's {n} items")]
    OutOfRange { set: ItemSet, n: usize },
    #[error("relative valuation constraint fails at item {item}: weight {weight} <= threshold {threshold}")]
    ConstraintViolated {
        item: usize,
        weight: Rational,
        threshold: Rational,
    },
    #[error("total weight {total} does not exceed the budget {budget}; use the marginal (bnl) prices instead")]
    NotAboveBudget { total: Rational, budget: Rational },
    #[error("base sets are defined for additive valuations only, got {0}")]
    NotAdditive(&'static str),
}

/// One item's row of a [`ConstraintReport`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintEntry {
    pub item: usize,
    pub weight: Rational,
    /// `(sum of the other weights in S - B) / (|S| - 1)`; zero for a singleton.
    pub threshold: Rational,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintReport {
    pub set: ItemSet,
    pub entries: Vec<ConstraintEntry>,
    pub holds: bool,
}

impl ConstraintReport {
    pub fn failing_items(&self) -> ItemSet {
        self.entries.iter().filter(|e| !e.holds).map(|e| e.item).collect()
    }
}

fn check_inputs(game: &Game, set: ItemSet, weights: &[Rational]) -> Result<(), EquilibriumError> {
    if weights.len() != game.n() {
        return Err(EquilibriumError::WeightLength { n: game.n(), got: weights.len() });
    }
    if !set.is_subset(game.items()) {
        return Err(EquilibriumError::OutOfRange { set, n: game.n() });
    }
    if set.is_empty() {
        return Err(EquilibriumError::EmptySet);
    }
    Ok(())
}

/// The relative valuation constraint for `set`: every member's weight
/// strictly exceeds `(sum of the other weights - B) / (|S| - 1)`.
///
/// `weights` is indexed by item over the whole game; pass additive values,
/// [`Valuation::item_marginals`](crate::Valuation::item_marginals) or
/// [`Valuation::set_marginals`](crate::Valuation::set_marginals). A singleton
/// holds iff its weight is positive.
pub fn check_constraint(game: &Game, set: ItemSet, weights: &[Rational]) -> Result<ConstraintReport, EquilibriumError> {
    check_inputs(game, set, weights)?;
    let total: Rational = set.iter().map(|i| weights[i]).sum();
    let others = Rational::from(set.len() - 1);
    let entries: Vec<_> = set
        .iter()
        .map(|item| {
            let weight = weights[item];
            let threshold = if set.len() == 1 {
                Rational::ZERO
            } else {
                (total - weight - game.budget()) / others
            };
            ConstraintEntry { item, weight, threshold, holds: weight > threshold }
        })
        .collect();
    let holds = entries.iter().all(|e| e.holds);
    Ok(ConstraintReport { set, entries, holds })
}

/// Prices on `set` that exhaust the budget and leave the buyer the same
/// surplus `w_i - p_i = (sum of weights - B) / |S|` from every member:
///
/// `p_i = (B + (|S| - 1) w_i - sum of the other weights) / |S|`, zero off `set`.
pub fn equal_utility_prices(game: &Game, set: ItemSet, weights: &[Rational]) -> Result<PriceVector, EquilibriumError> {
    let report = check_constraint(game, set, weights)?;
    if let Some(bad) = report.entries.iter().find(|e| !e.holds) {
        return Err(EquilibriumError::ConstraintViolated {
            item: bad.item,
            weight: bad.weight,
            threshold: bad.threshold,
        });
    }
    let total: Rational = set.iter().map(|i| weights[i]).sum();
    let budget = game.budget();
    if total <= budget {
        return Err(EquilibriumError::NotAboveBudget { total, budget });
    }
    let size = Rational::from(set.len());
    let surplus = (total - budget) / size;
    let mut prices = vec![Rational::ZERO; game.n()];
    for i in set {
        prices[i] = weights[i] - surplus;
    }
    Ok(PriceVector::new(prices).expect("constraint makes every price positive"))
}

/// Why the base-set greedy stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StopWitness {
    pub item: usize,
    pub value: Rational,
    /// `(sum of values in L - B) / |L|`, which `value` fails to exceed.
    pub threshold: Rational,
}

/// The base set `L` of an additive game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaseSet {
    pub items: ItemSet,
    /// Items by non-increasing value, ties by index.
    pub order: Vec<usize>,
    pub stop: Option<StopWitness>,
}

/// Greedy base set: walk items by non-increasing value and keep adding while
/// the next value exceeds `(sum of values in L - B) / |L|`.
///
/// Requires an additive valuation with `v(N) > B`.
pub fn base_set(game: &Game) -> Result<BaseSet, EquilibriumError> {
    let crate::Valuation::Additive { values } = game.valuation() else {
        return Err(EquilibriumError::NotAdditive(game.valuation().kind_name()));
    };
    let total: Rational = values.iter().sum();
    if total <= game.budget() {
        return Err(EquilibriumError::NotAboveBudget { total, budget: game.budget() });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));

    let mut items = ItemSet::singleton(order[0]);
    let mut sum = values[order[0]];
    let mut stop = None;
    for &i in &order[1..] {
        let threshold = (sum - game.budget()) / Rational::from(items.len());
        if values[i] <= threshold {
            stop = Some(StopWitness { item: i, value: values[i], threshold });
            break;
        }
        items = items.with(i);
        sum += values[i];
    }
    debug_assert!(sum > game.budget());
    Ok(BaseSet { items, order, stop })
}

/// `p_i = v(N) - v(N \ {i})`, the equilibrium of the unbudgeted game.
pub fn bnl_prices(game: &Game) -> PriceVector {
    PriceVector::new(game.valuation().item_marginals()).expect("monotone valuations have nonnegative marginals")
}

/// Every item is bought and every price is positive.
pub fn is_market_clearing(game: &Game, prices: &PriceVector) -> bool {
    prices.as_slice().iter().all(Rational::is_positive) && demand(game, prices).chosen == game.items()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::valuation::Valuation;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn rs(s: &str) -> Vec<Rational> {
        s.split(',').map(r).collect()
    }

    fn set(items: &[usize]) -> ItemSet {
        items.iter().copied().collect()
    }

    fn additive(values: &str, budget: &str) -> Game {
        Game::new(Valuation::additive(rs(values)).unwrap(), r(budget)).unwrap()
    }

    #[test]
    fn constraint_on_equal_items_holds() {
        let g = fixtures::add_222();
        let report = check_constraint(&g, g.items(), &rs("2,2,2")).unwrap();
        assert!(report.holds);
        assert!(report.entries.iter().all(|e| e.threshold == r("3/2")));
    }

    #[test]
    fn constraint_fails_on_small_items() {
        let g = fixtures::pne_not_l();
        let values = g.valuation().singleton_values();
        let report = check_constraint(&g, g.items(), &values).unwrap();
        assert!(!report.holds);
        assert_eq!(report.entries[2].threshold, r("31/30"));
        assert_eq!(report.failing_items(), set(&[2, 3]));
    }

    #[test]
    fn singleton_convention() {
        let g = additive("0.5,0", "1");
        assert!(check_constraint(&g, set(&[0]), &rs("0.5,0")).unwrap().holds);
        assert!(!check_constraint(&g, set(&[1]), &rs("0.5,0")).unwrap().holds);
        assert_eq!(check_constraint(&g, ItemSet::EMPTY, &rs("0.5,0")), Err(EquilibriumError::EmptySet));
    }

    #[test]
    fn equal_utility_examples() {
        let g = fixtures::add_222();
        assert_eq!(equal_utility_prices(&g, g.items(), &rs("2,2,2")).unwrap().into_vec(), rs("1/3,1/3,1/3"));

        let g = fixtures::pne_not_l();
        let values = g.valuation().singleton_values();
        let prices = equal_utility_prices(&g, set(&[0, 1]), &values).unwrap();
        assert_eq!(prices.into_vec(), rs("3/4,1/4,0,0"));

        let g = fixtures::xos_no_equi();
        let marginals = g.valuation().item_marginals();
        assert_eq!(equal_utility_prices(&g, g.items(), &marginals).unwrap().into_vec(), rs("7/6,1/6,1/6"));
    }

    #[test]
    fn equal_utility_rejects_bad_preconditions() {
        let g = fixtures::pne_not_l();
        let values = g.valuation().singleton_values();
        assert!(matches!(
            equal_utility_prices(&g, g.items(), &values),
            Err(EquilibriumError::ConstraintViolated { item: 2, .. })
        ));
        // Marginals sum to 1.29 > 1 here, but at budget 2 they don't.
        let g = fixtures::budget_is_bad().with_budget(r("2")).unwrap();
        let marginals = g.valuation().item_marginals();
        assert!(matches!(
            equal_utility_prices(&g, g.items(), &marginals),
            Err(EquilibriumError::NotAboveBudget { .. })
        ));
    }

    #[test]
    fn base_set_examples() {
        assert_eq!(base_set(&fixtures::pne_not_l()).unwrap().items, set(&[0, 1]));
        assert_eq!(base_set(&fixtures::x_ne_l()).unwrap().items, set(&[0]));
        let full = base_set(&fixtures::add_222()).unwrap();
        assert_eq!(full.items, ItemSet::full(3));
        assert_eq!(full.stop, None);

        let witness = base_set(&fixtures::pne_not_l()).unwrap().stop.unwrap();
        assert_eq!(witness.item, 2);
        assert_eq!(witness.threshold, r("5/4"));
    }

    #[test]
    fn base_set_order_ties_by_index() {
        let g = additive("1,3,3,1", "2");
        let base = base_set(&g).unwrap();
        assert_eq!(base.order, vec![1, 2, 0, 3]);
        assert_eq!(base.items, set(&[1, 2]));
        assert_eq!(base.stop.unwrap().threshold, r("2"));
    }

    #[test]
    fn base_set_preconditions() {
        assert_eq!(
            base_set(&fixtures::two_l()),
            Err(EquilibriumError::NotAdditive("table"))
        );
        assert!(matches!(base_set(&additive("0.2,0.3", "1")), Err(EquilibriumError::NotAboveBudget { .. })));
    }

    #[test]
    fn bnl_examples() {
        let g = fixtures::pne_not_l();
        assert_eq!(bnl_prices(&g).into_vec(), g.valuation().singleton_values());
        assert_eq!(bnl_prices(&fixtures::xos_no_equi()).into_vec(), rs("2,1,1"));
        let bad = bnl_prices(&fixtures::budget_is_bad());
        assert_eq!(bad.as_slice().iter().sum::<Rational>(), r("1.29"));
    }

    #[test]
    fn market_clearing_examples() {
        let g = fixtures::add_222();
        assert!(is_market_clearing(&g, &"1/3,1/3,1/3".parse().unwrap()));
        assert!(!is_market_clearing(&fixtures::pne_not_l(), &"0.6,0.4,0.3,0.3".parse().unwrap()));
        assert!(!is_market_clearing(&g, &"0,1/3,1/3".parse().unwrap()));
    }
}
