//! Buyer valuations: additive, budget-additive, explicit tables and XOS.

use serde::Serialize;

use crate::items::{ItemSet, MAX_REPRESENTABLE_ITEMS};
use crate::rational::Rational;

/// Default cap on the number of items. Demand and validation are exhaustive
/// over all `2^n` subsets.
pub const DEFAULT_ITEM_CAP: usize = 12;

/// What a [`Valuation::Table`] claims to be. A submodular claim is checked by
/// [`Valuation::validate`], never assumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableClass {
    Submodular,
    Monotone,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Valuation {
    /// `v(S) = sum of values[i] for i in S`.
    Additive { values: Vec<Rational> },
    /// `v(S) = min(cap, sum of values[i] for i in S)`.
    BudgetAdditive { cap: Rational, values: Vec<Rational> },
    /// One value per subset, indexed by bitmask.
    Table {
        n: usize,
        values: Vec<Rational>,
        class: TableClass,
    },
    /// Pointwise maximum of additive clauses.
    Xos { n: usize, clauses: Vec<Vec<Rational>> },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValuationError {
    #[error("{n} items exceeds the cap of {cap}")]
    TooManyItems { n: usize, cap: usize },
    #[error("table needs {expected} entries for {n} items, got {got}")]
    TableSize { n: usize, expected: usize, got: usize },
    #[error("xos clause {clause} has {got} entries, expected {n}")]
    ClauseSize { clause: usize, n: usize, got: usize },
    #[error("set {subset} is not contained in {superset}")]
    NotSubset { subset: ItemSet, superset: ItemSet },
}

/// Outcome of [`Valuation::validate`]. Failures are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub normalized: bool,
    pub nonnegative: bool,
    pub monotone: bool,
    /// `None` unless the valuation is a table declared submodular.
    pub submodular: Option<bool>,
    /// `(S, i)` with `v(S) > v(S + i)`.
    pub monotonicity_violations: Vec<(ItemSet, usize)>,
    pub submodularity_violations: Vec<SubmodularityViolation>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.normalized && self.nonnegative && self.monotone && self.submodular != Some(false)
    }
}

/// `v(S + x) - v(S) < v(T + x) - v(T)` with `S ⊆ T`, `x ∉ T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubmodularityViolation {
    pub smaller: ItemSet,
    pub larger: ItemSet,
    pub item: usize,
    pub smaller_gain: Rational,
    pub larger_gain: Rational,
}

fn check_items(n: usize, cap: usize) -> Result<(), ValuationError> {
    if n > cap || n > MAX_REPRESENTABLE_ITEMS {
        Err(ValuationError::TooManyItems { n, cap: cap.min(MAX_REPRESENTABLE_ITEMS) })
    } else {
        Ok(())
    }
}

impl Valuation {
    pub fn additive(values: Vec<Rational>) -> Result<Self, ValuationError> {
        check_items(values.len(), DEFAULT_ITEM_CAP)?;
        Ok(Valuation::Additive { values })
    }

    pub fn budget_additive(cap: Rational, values: Vec<Rational>) -> Result<Self, ValuationError> {
        check_items(values.len(), DEFAULT_ITEM_CAP)?;
        Ok(Valuation::BudgetAdditive { cap, values })
    }

    pub fn table(n: usize, values: Vec<Rational>, class: TableClass) -> Result<Self, ValuationError> {
        Self::table_with_cap(n, values, class, DEFAULT_ITEM_CAP)
    }

    pub fn table_with_cap(
        n: usize,
        values: Vec<Rational>,
        class: TableClass,
        cap: usize,
    ) -> Result<Self, ValuationError> {
        check_items(n, cap)?;
        let expected = 1usize << n;
        if values.len() != expected {
            return Err(ValuationError::TableSize { n, expected, got: values.len() });
        }
        Ok(Valuation::Table { n, values, class })
    }

    pub fn xos(n: usize, clauses: Vec<Vec<Rational>>) -> Result<Self, ValuationError> {
        check_items(n, DEFAULT_ITEM_CAP)?;
        if let Some((clause, c)) = clauses.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(ValuationError::ClauseSize { clause, n, got: c.len() });
        }
        Ok(Valuation::Xos { n, clauses })
    }

    /// Re-checks the item count against a caller-chosen cap.
    pub fn check_cap(&self, cap: usize) -> Result<(), ValuationError> {
        check_items(self.n(), cap)
    }

    pub fn n(&self) -> usize {
        match self {
            Valuation::Additive { values } | Valuation::BudgetAdditive { values, .. } => values.len(),
            Valuation::Table { n, .. } | Valuation::Xos { n, .. } => *n,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Valuation::Additive { .. } => "additive",
            Valuation::BudgetAdditive { .. } => "budget_additive",
            Valuation::Table { .. } => "table",
            Valuation::Xos { .. } => "xos",
        }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, Valuation::Additive { .. })
    }

    /// Whether the class guarantees submodularity (additive, budget-additive,
    /// or a table declared submodular).
    pub fn is_declared_submodular(&self) -> bool {
        match self {
            Valuation::Additive { .. } | Valuation::BudgetAdditive { .. } => true,
            Valuation::Table { class, .. } => *class == TableClass::Submodular,
            Valuation::Xos { .. } => false,
        }
    }

    /// `v(S)`. Items of `set` outside `0..n` are ignored.
    pub fn value(&self, set: ItemSet) -> Rational {
        match self {
            Valuation::Additive { values } => sum_over(values, set),
            Valuation::BudgetAdditive { cap, values } => sum_over(values, set).min(*cap),
            Valuation::Table { n, values, .. } => values[set.intersection(ItemSet::full(*n)).index()],
            Valuation::Xos { clauses, .. } => clauses
                .iter()
                .map(|c| sum_over(c, set))
                .max()
                .unwrap_or(Rational::ZERO),
        }
    }

    /// `v(T) - v(T \ S)`: what `subset` contributes to completing `set`.
    pub fn marginal(&self, set: ItemSet, subset: ItemSet) -> Result<Rational, ValuationError> {
        if !subset.is_subset(set) {
            return Err(ValuationError::NotSubset { subset, superset: set });
        }
        Ok(self.value(set) - self.value(set.difference(subset)))
    }

    /// `v(N) - v(N \ {i})` for every item.
    pub fn item_marginals(&self) -> Vec<Rational> {
        self.set_marginals(ItemSet::full(self.n()))
    }

    /// `v(S) - v(S \ {i})` for every item; zero for items outside `set`.
    pub fn set_marginals(&self, set: ItemSet) -> Vec<Rational> {
        let total = self.value(set);
        (0..self.n())
            .map(|i| {
                if set.contains(i) {
                    total - self.value(set.without(i))
                } else {
                    Rational::ZERO
                }
            })
            .collect()
    }

    /// Singleton values `v({i})`.
    pub fn singleton_values(&self) -> Vec<Rational> {
        (0..self.n()).map(|i| self.value(ItemSet::singleton(i))).collect()
    }

    /// The full table `v(S)` for every subset, by bitmask.
    pub fn tabulate(&self) -> Vec<Rational> {
        let n = self.n();
        match self {
            Valuation::Table { values, .. } => values.clone(),
            Valuation::Additive { values } => {
                let mut table = vec![Rational::ZERO; 1 << n];
                for mask in 1..table.len() {
                    let low = mask.trailing_zeros() as usize;
                    table[mask] = table[mask & (mask - 1)] + values[low];
                }
                table
            }
            _ => ItemSet::all(n).map(|s| self.value(s)).collect(),
        }
    }

    /// Exhaustive normalization, nonnegativity, monotonicity and (for tables
    /// declared submodular) diminishing-returns checks.
    pub fn validate(&self) -> ValidationReport {
        let n = self.n();
        let table = self.tabulate();
        let normalized = table[0].is_zero();
        let nonnegative = match self {
            Valuation::Additive { values } => values.iter().all(|v| !v.is_negative()),
            Valuation::BudgetAdditive { cap, values } => {
                !cap.is_negative() && values.iter().all(|v| !v.is_negative())
            }
            Valuation::Xos { clauses, .. } => clauses.iter().flatten().all(|v| !v.is_negative()),
            Valuation::Table { .. } => table.iter().all(|v| !v.is_negative()),
        };

        let mut monotonicity_violations = Vec::new();
        for set in ItemSet::all(n) {
            for i in 0..n {
                if !set.contains(i) && table[set.index()] > table[set.with(i).index()] {
                    monotonicity_violations.push((set, i));
                }
            }
        }

        let submodular = match self {
            Valuation::Table { class: TableClass::Submodular, .. } => Some(()),
            _ => None,
        };
        let mut submodularity_violations = Vec::new();
        if submodular.is_some() {
            let full = ItemSet::full(n);
            for larger in ItemSet::all(n) {
                for item in full.difference(larger) {
                    let larger_gain = table[larger.with(item).index()] - table[larger.index()];
                    for smaller in larger.subsets() {
                        let smaller_gain = table[smaller.with(item).index()] - table[smaller.index()];
                        if smaller_gain < larger_gain {
                            submodularity_violations.push(SubmodularityViolation {
                                smaller,
                                larger,
                                item,
                                smaller_gain,
                                larger_gain,
                            });
                        }
                    }
                }
            }
        }

        ValidationReport {
            normalized,
            nonnegative,
            monotone: monotonicity_violations.is_empty(),
            submodular: submodular.map(|_| submodularity_violations.is_empty()),
            monotonicity_violations,
            submodularity_violations,
        }
    }
}

fn sum_over(values: &[Rational], set: ItemSet) -> Rational {
    set.iter().filter(|&i| i < values.len()).map(|i| values[i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn set(items: &[usize]) -> ItemSet {
        items.iter().copied().collect()
    }

    #[test]
    fn additive_value() {
        let v = Valuation::additive(vec![r("2"), r("1/2")]).unwrap();
        assert_eq!(v.value(set(&[0, 1])), r("5/2"));
        assert_eq!(v.value(ItemSet::EMPTY), Rational::ZERO);
    }

    #[test]
    fn xos_takes_best_clause() {
        let v = fixtures::xos_no_equi().valuation().clone();
        assert_eq!(v.value(set(&[0])), r("3"));
        assert_eq!(v.value(set(&[1, 2])), r("2"));
        assert_eq!(v.value(ItemSet::EMPTY), Rational::ZERO);
    }

    #[test]
    fn budget_additive_caps() {
        let v = Valuation::budget_additive(r("2"), vec![r("1"), r("1"), r("2")]).unwrap();
        assert_eq!(v.value(set(&[0, 2])), r("2"));
        assert_eq!(v.value(set(&[0])), r("1"));
    }

    #[test]
    fn marginal_values() {
        let xos = fixtures::xos_no_equi().valuation().clone();
        let n = ItemSet::full(3);
        assert_eq!(xos.marginal(n, set(&[0])).unwrap(), r("2"));
        assert_eq!(xos.marginal(n, ItemSet::EMPTY).unwrap(), Rational::ZERO);

        let two_l = fixtures::two_l().valuation().clone();
        assert_eq!(two_l.marginal(ItemSet::full(4), set(&[2])).unwrap(), r("0.01"));

        assert_eq!(
            xos.marginal(set(&[0]), set(&[1])),
            Err(ValuationError::NotSubset { subset: set(&[1]), superset: set(&[0]) })
        );
    }

    #[test]
    fn item_marginals_per_kind() {
        let add = Valuation::additive(vec![r("2"), r("1.5"), r("0.6"), r("0.6")]).unwrap();
        assert_eq!(add.item_marginals(), vec![r("2"), r("1.5"), r("0.6"), r("0.6")]);
        assert_eq!(fixtures::xos_no_equi().valuation().item_marginals(), vec![r("2"), r("1"), r("1")]);
        assert_eq!(
            fixtures::budget_is_bad().valuation().item_marginals(),
            vec![r("0.635"), r("0.635"), r("0.01"), r("0.01")]
        );
    }

    #[test]
    fn reference_tables_are_submodular() {
        for game in [fixtures::two_l(), fixtures::budget_is_bad()] {
            let report = game.valuation().validate();
            assert!(report.passes(), "{report:?}");
            assert_eq!(report.submodular, Some(true));
        }
    }

    #[test]
    fn monotonicity_violation_reported() {
        let v = Valuation::table(2, vec![r("0"), r("1"), r("0"), r("0.5")], TableClass::Monotone).unwrap();
        let report = v.validate();
        assert!(!report.monotone);
        assert!(!report.passes());
        assert!(report.monotonicity_violations.contains(&(set(&[0]), 1)));
    }

    #[test]
    fn supermodular_table_flagged() {
        // v({0,1}) = 3 > v({0}) + v({1}): complements.
        let v = Valuation::table(2, vec![r("0"), r("1"), r("1"), r("3")], TableClass::Submodular).unwrap();
        let report = v.validate();
        assert!(report.monotone);
        assert_eq!(report.submodular, Some(false));
        assert_eq!(report.submodularity_violations.len(), 2);
    }

    #[test]
    fn unnormalized_and_negative() {
        let v = Valuation::table(1, vec![r("1"), r("2")], TableClass::Monotone).unwrap();
        assert!(!v.validate().normalized);
        let w = Valuation::additive(vec![r("-1")]).unwrap();
        let report = w.validate();
        assert!(!report.nonnegative);
        assert!(!report.passes());
    }

    #[test]
    fn shape_errors() {
        assert_eq!(
            Valuation::table(2, vec![Rational::ZERO; 3], TableClass::Monotone),
            Err(ValuationError::TableSize { n: 2, expected: 4, got: 3 })
        );
        assert!(matches!(
            Valuation::xos(2, vec![vec![Rational::ONE]]),
            Err(ValuationError::ClauseSize { .. })
        ));
        assert!(matches!(
            Valuation::additive(vec![Rational::ONE; 13]),
            Err(ValuationError::TooManyItems { n: 13, cap: 12 })
        ));
    }
}
