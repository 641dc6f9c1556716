//! The buyer: budget-bounded quasi-linear utility and the exact demand
//! correspondence under the maximal tie-break.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::Game;
use crate::items::ItemSet;
use crate::rational::{ParseRationalError, Rational};

/// The vendors' strategy profile: one nonnegative price per item.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct PriceVector(Vec<Rational>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PriceError {
    #[error("price of item {item} is negative ({price})")]
    Negative { item: usize, price: Rational },
    #[error("price {index}: {source}")]
    Parse {
        index: usize,
        #[source]
        source: ParseRationalError,
    },
}

impl PriceVector {
    pub fn new(prices: Vec<Rational>) -> Result<Self, PriceError> {
        if let Some((item, &price)) = prices.iter().enumerate().find(|(_, p)| p.is_negative()) {
            return Err(PriceError::Negative { item, price });
        }
        Ok(PriceVector(prices))
    }

    pub fn zeros(n: usize) -> Self {
        PriceVector(vec![Rational::ZERO; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Rational> {
        self.0
    }

    /// `p(S)`.
    pub fn cost(&self, set: ItemSet) -> Rational {
        set.iter().map(|i| self.0[i]).sum()
    }

    /// The same profile with `item` repriced.
    ///
    /// Panics on a negative price.
    pub fn with_price(&self, item: usize, price: Rational) -> Self {
        assert!(!price.is_negative(), "negative price");
        let mut prices = self.0.clone();
        prices[item] = price;
        PriceVector(prices)
    }

    /// Items priced at zero.
    pub fn free_items(&self) -> ItemSet {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_zero())
            .map(|(i, _)| i)
            .collect()
    }
}

impl Index<usize> for PriceVector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.0[i]
    }
}

impl fmt::Display for PriceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, p) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for PriceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Comma-separated decimals or fractions: `"0.6,0.4,1/3"`.
impl FromStr for PriceVector {
    type Err = PriceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
        if s.trim().is_empty() {
            return Ok(PriceVector(Vec::new()));
        }
        let prices = s
            .split(',')
            .enumerate()
            .map(|(index, p)| p.trim().trim_matches('"').parse().map_err(|source| PriceError::Parse { index, source }))
            .collect::<Result<Vec<_>, _>>()?;
        PriceVector::new(prices)
    }
}

impl<'de> Deserialize<'de> for PriceVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let prices = Vec::<Rational>::deserialize(deserializer)?;
        PriceVector::new(prices).map_err(serde::de::Error::custom)
    }
}

/// `u_b(S, p)`: `v(S) - p(S)` when affordable. Infeasible orders below every
/// feasible utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BuyerUtility {
    Infeasible,
    Feasible(Rational),
}

impl BuyerUtility {
    pub fn feasible(self) -> Option<Rational> {
        match self {
            BuyerUtility::Feasible(u) => Some(u),
            BuyerUtility::Infeasible => None,
        }
    }
}

impl fmt::Display for BuyerUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuyerUtility::Feasible(u) => write!(f, "{u}"),
            BuyerUtility::Infeasible => f.write_str("-inf (over budget)"),
        }
    }
}

/// The set the buyer consumes at some price vector, with tie diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DemandOutcome {
    /// `X(v, p)`: a utility maximizer of maximum cardinality, lowest bitmask
    /// among those.
    pub chosen: ItemSet,
    pub cost: Rational,
    pub buyer_utility: Rational,
    /// `X+`: chosen items with a positive price.
    pub positively_priced: ItemSet,
    /// Number of feasible sets attaining the maximum utility.
    pub num_optima: usize,
    /// Number of those with maximum cardinality.
    pub num_max_size_optima: usize,
}

impl DemandOutcome {
    /// Whether the lowest-bitmask rule decided between several candidates.
    pub fn tie_broken_lexicographically(&self) -> bool {
        self.num_max_size_optima > 1
    }
}

pub fn buyer_utility(game: &Game, set: ItemSet, prices: &PriceVector) -> BuyerUtility {
    let cost = prices.cost(set);
    if cost > game.budget() {
        BuyerUtility::Infeasible
    } else {
        BuyerUtility::Feasible(game.value(set) - cost)
    }
}

/// Preference between two feasible candidates: higher utility, then more
/// items, then the lower bitmask.
pub(crate) fn prefer(a: (Rational, ItemSet), b: (Rational, ItemSet)) -> Ordering {
    a.0.cmp(&b.0)
        .then(a.1.len().cmp(&b.1.len()))
        .then(b.1.cmp(&a.1))
}

/// `X(v, p)` by exhaustive scan over all `2^n` subsets.
///
/// Panics if `prices` does not have one entry per item.
pub fn demand(game: &Game, prices: &PriceVector) -> DemandOutcome {
    let n = game.n();
    assert_eq!(prices.len(), n, "price vector length must match item count");
    let budget = game.budget();
    let table = game.table();

    let mut costs = vec![Rational::ZERO; 1 << n];
    for mask in 1..costs.len() {
        let low = mask.trailing_zeros() as usize;
        costs[mask] = costs[mask & (mask - 1)] + prices[low];
    }

    // The empty set is always feasible, so seed with it.
    let mut chosen = ItemSet::EMPTY;
    let mut best = Rational::ZERO;
    let mut best_len = 0;
    let mut num_optima = 1;
    let mut num_max_size_optima = 1;
    for (mask, &cost) in costs.iter().enumerate().skip(1) {
        if cost > budget {
            continue;
        }
        let utility = table[mask] - cost;
        let set = ItemSet::from_bits(mask as u32);
        match utility.cmp(&best) {
            Ordering::Less => {}
            Ordering::Greater => {
                best = utility;
                chosen = set;
                best_len = set.len();
                num_optima = 1;
                num_max_size_optima = 1;
            }
            Ordering::Equal => {
                num_optima += 1;
                match set.len().cmp(&best_len) {
                    Ordering::Greater => {
                        chosen = set;
                        best_len = set.len();
                        num_max_size_optima = 1;
                    }
                    Ordering::Equal => num_max_size_optima += 1,
                    Ordering::Less => {}
                }
            }
        }
    }

    DemandOutcome {
        chosen,
        cost: costs[chosen.index()],
        buyer_utility: best,
        positively_priced: chosen.difference(prices.free_items()),
        num_optima,
        num_max_size_optima,
    }
}

/// `u_i`: the price of each sold item, zero otherwise.
pub fn vendor_utilities(outcome: &DemandOutcome, prices: &PriceVector) -> Vec<Rational> {
    (0..prices.len())
        .map(|i| if outcome.chosen.contains(i) { prices[i] } else { Rational::ZERO })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
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

    fn additive(values: &str, budget: &str) -> Game {
        let values = p(values).into_vec();
        Game::new(Valuation::additive(values).unwrap(), r(budget)).unwrap()
    }

    #[test]
    fn utility_respects_budget() {
        let g = additive("2,0.5", "1");
        assert_eq!(buyer_utility(&g, set(&[0, 1]), &p("1,0.2")), BuyerUtility::Infeasible);
        assert_eq!(buyer_utility(&g, ItemSet::EMPTY, &p("1,0.2")), BuyerUtility::Feasible(Rational::ZERO));

        let x_ne_l = additive("2.5,1.5,1.4", "1");
        assert_eq!(
            buyer_utility(&x_ne_l, set(&[0, 1]), &p("0.9,0.1,0.9")),
            BuyerUtility::Feasible(r("3"))
        );
        assert!(BuyerUtility::Infeasible < BuyerUtility::Feasible(r("-100")));
    }

    #[test]
    fn base_set_is_demanded() {
        let g = fixtures::pne_not_l();
        let out = demand(&g, &p("0.6,0.4,0.3,0.3"));
        assert_eq!(out.chosen, set(&[0, 1]));
        assert_eq!(out.buyer_utility, r("2.5"));
        assert_eq!(out.cost, Rational::ONE);
        assert_eq!(out.num_optima, 1);
    }

    #[test]
    fn free_goods_all_taken() {
        let g = fixtures::budget_is_bad();
        let out = demand(&g, &PriceVector::zeros(4));
        assert_eq!(out.chosen, ItemSet::full(4));
        assert_eq!(out.positively_priced, ItemSet::EMPTY);
    }

    #[test]
    fn budget_forces_a_lexicographic_tie() {
        let g = additive("2,2,2", "1");
        let out = demand(&g, &p("0.3,0.4,0.4"));
        assert_eq!(out.chosen, set(&[0, 1]));
        assert_eq!(out.buyer_utility, r("3.3"));
        assert_eq!(out.num_optima, 2);
        assert_eq!(out.num_max_size_optima, 2);
        assert!(out.tie_broken_lexicographically());

        assert_eq!(demand(&g, &p("0.2,0.4,0.4")).chosen, ItemSet::full(3));
    }

    #[test]
    fn budget_additive_pair() {
        let g = fixtures::budget_additive_pair();
        let out = demand(&g, &p("1,1/2,1"));
        assert_eq!(out.chosen, set(&[2]));
        assert_eq!(out.buyer_utility, Rational::ONE);
        assert_eq!(demand(&g, &p("0,1/2,1")).chosen, set(&[0, 1]));
    }

    #[test]
    fn maximal_rule_prefers_larger_sets() {
        // {0} and {0,1} both give utility 1; the larger wins.
        let g = additive("2,1", "2");
        let out = demand(&g, &p("1,1"));
        assert_eq!(out.chosen, set(&[0, 1]));
        assert_eq!(out.num_optima, 2);
        assert_eq!(out.num_max_size_optima, 1);
    }

    #[test]
    fn vendor_payments() {
        let g = fixtures::pne_not_l();
        let prices = p("0.6,0.4,0.3,0.3");
        let out = demand(&g, &prices);
        assert_eq!(vendor_utilities(&out, &prices), p("0.6,0.4,0,0").into_vec());

        let g = additive("2.5,1.5,1.4", "1");
        let prices = p("0.9,0.1,0.9");
        let out = demand(&g, &prices);
        assert_eq!(vendor_utilities(&out, &prices), p("0.9,0.1,0").into_vec());

        let empty = DemandOutcome {
            chosen: ItemSet::EMPTY,
            cost: Rational::ZERO,
            buyer_utility: Rational::ZERO,
            positively_priced: ItemSet::EMPTY,
            num_optima: 1,
            num_max_size_optima: 1,
        };
        assert_eq!(vendor_utilities(&empty, &prices), vec![Rational::ZERO; 3]);
    }

    #[test]
    fn price_parsing() {
        assert_eq!(p("(1/3, 0.5)").into_vec(), vec![r("1/3"), r("1/2")]);
        assert!(matches!("1,-2".parse::<PriceVector>(), Err(PriceError::Negative { item: 1, .. })));
        assert!(matches!("1,x".parse::<PriceVector>(), Err(PriceError::Parse { index: 1, .. })));
        let q: PriceVector = serde_json::from_str(r#"["1/2", "3"]"#).unwrap();
        assert_eq!(q, p("0.5,3"));
    }
}
