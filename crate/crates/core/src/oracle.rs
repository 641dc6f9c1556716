//! Independent brute force: a second demand implementation, an on-grid
//! ε-equilibrium enumerator, and seeded random game generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demand::{DemandOutcome, PriceVector};
use crate::equilibrium::check_constraint;
use crate::game::{Game, GameError};
use crate::items::ItemSet;
use crate::rational::{common_denominator, Rational};
use crate::valuation::{TableClass, Valuation};
use crate::verifier::verify_pne;

/// Reference demand: evaluates the valuation directly on every subset and
/// applies the maximal rule in a separate pass. Must agree with
/// [`demand`](crate::demand::demand) exactly.
pub fn oracle_demand(game: &Game, prices: &PriceVector) -> DemandOutcome {
    let n = game.n();
    let valuation = game.valuation();
    let mut feasible = Vec::new();
    for bits in 0..(1u32 << n) {
        let set = ItemSet::from_bits(bits);
        let mut cost = Rational::ZERO;
        for i in 0..n {
            if bits & (1 << i) != 0 {
                cost += prices[i];
            }
        }
        if cost <= game.budget() {
            feasible.push((set, cost, valuation.value(set) - cost));
        }
    }
    let best = feasible.iter().map(|f| f.2).max().expect("empty set is feasible");
    let optima: Vec<_> = feasible.iter().filter(|f| f.2 == best).collect();
    let largest = optima.iter().map(|f| f.0.len()).max().unwrap();
    let widest: Vec<_> = optima.iter().filter(|f| f.0.len() == largest).collect();
    let &&&(chosen, cost, buyer_utility) = widest.iter().min_by_key(|f| f.0.bits()).unwrap();

    let mut positively_priced = ItemSet::EMPTY;
    for i in chosen.iter() {
        if prices[i] > Rational::ZERO {
            positively_priced = positively_priced.with(i);
        }
    }
    DemandOutcome {
        chosen,
        cost,
        buyer_utility,
        positively_priced,
        num_optima: optima.len(),
        num_max_size_optima: widest.len(),
    }
}

/// Price grid `{0, step, 2 step, .., ceil(B / step) step}` and the
/// improvement a deviation needs before it disqualifies a grid point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: Rational,
    pub epsilon: Rational,
    /// Upper bound on demand evaluations; see [`GridSpec::evaluations`].
    pub max_evals: u64,
}

impl GridSpec {
    pub const DEFAULT_MAX_EVALS: u64 = 20_000_000;

    pub fn new(step: Rational) -> Self {
        GridSpec { step, epsilon: Rational::ZERO, max_evals: Self::DEFAULT_MAX_EVALS }
    }

    /// 1/24 for up to three items, 1/8 beyond.
    pub fn default_for(n: usize) -> Self {
        Self::new(if n <= 3 { Rational::new(1, 24) } else { Rational::new(1, 8) })
    }

    pub fn points(&self, budget: Rational) -> usize {
        (budget / self.step).ceil() as usize + 1
    }

    /// Demand evaluations needed for an `n`-item game.
    pub fn evaluations(&self, n: usize, budget: Rational) -> u64 {
        let m = self.points(budget) as u64;
        m.checked_pow(n as u32)
            .and_then(|total| total.checked_mul(n as u64 + 1))
            .unwrap_or(u64::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("grid step must be positive, got {0}")]
    NonPositiveStep(Rational),
    #[error("epsilon must be nonnegative, got {0}")]
    NegativeEpsilon(Rational),
    #[error("grid needs {needed} demand evaluations, over the limit of {limit}")]
    TooManyEvaluations { needed: u64, limit: u64 },
    #[error("no instance satisfied the {rule:?} budget rule after {attempts} attempts")]
    AttemptsExhausted { rule: BudgetRule, attempts: u32 },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridSurvivor {
    pub prices: PriceVector,
    pub outcome: DemandOutcome,
    pub exact_pne: bool,
}

/// All on-grid price vectors where no vendor gains more than `epsilon` by an
/// on-grid unilateral deviation, each then checked exactly by
/// [`verify_pne`]. Survivors come in lexicographic price order.
///
/// Runs in scaled integer arithmetic: every value, the budget and the step
/// are multiplied by their common denominator.
pub fn grid_enumerate(game: &Game, grid: &GridSpec) -> Result<Vec<GridSurvivor>, OracleError> {
    if !grid.step.is_positive() {
        return Err(OracleError::NonPositiveStep(grid.step));
    }
    if grid.epsilon.is_negative() {
        return Err(OracleError::NegativeEpsilon(grid.epsilon));
    }
    let n = game.n();
    let needed = grid.evaluations(n, game.budget());
    if needed > grid.max_evals {
        return Err(OracleError::TooManyEvaluations { needed, limit: grid.max_evals });
    }

    let scaled = ScaledGame::new(game, grid);
    let m = scaled.points;
    let total = m.pow(n as u32);
    let stride: Vec<usize> = (0..n).map(|i| m.pow(i as u32)).collect();

    // best[i][rest]: vendor i's best on-grid payoff against the others'
    // grid indices, with vendor i's own digit zeroed out of `rest`.
    let mut best = vec![vec![0i128; total]; n];
    let mut idx = vec![0usize; n];
    for i in 0..n {
        for flat in 0..total {
            if (flat / stride[i]) % m != 0 {
                continue;
            }
            decode(flat, m, &mut idx);
            let mut payoff = 0;
            for k in (1..m).rev() {
                idx[i] = k;
                if scaled.demand(&idx) & (1 << i) != 0 {
                    payoff = k as i128 * scaled.step;
                    break;
                }
            }
            best[i][flat] = payoff;
        }
    }

    let mut survivors = Vec::new();
    for flat in 0..total {
        decode(flat, m, &mut idx);
        let chosen = scaled.demand(&idx);
        let stable = (0..n).all(|i| {
            let own = if chosen & (1 << i) != 0 { idx[i] as i128 * scaled.step } else { 0 };
            best[i][flat - idx[i] * stride[i]] - own <= scaled.epsilon
        });
        if stable {
            // Lexicographic order puts vendor 0 most significant.
            let prices = PriceVector::new(idx.iter().map(|&k| grid.step * Rational::from(k)).collect())
                .expect("grid prices are nonnegative");
            survivors.push(prices);
        }
    }
    survivors.sort();

    Ok(survivors
        .into_iter()
        .map(|prices| {
            let report = verify_pne(game, &prices);
            GridSurvivor { outcome: report.outcome, exact_pne: report.is_pne, prices }
        })
        .collect())
}

fn decode(mut flat: usize, m: usize, idx: &mut [usize]) {
    for d in idx.iter_mut() {
        *d = flat % m;
        flat /= m;
    }
}

/// A game with every quantity scaled to an integer.
struct ScaledGame {
    n: usize,
    values: Vec<i128>,
    budget: i128,
    step: i128,
    epsilon: i128,
    points: usize,
}

impl ScaledGame {
    fn new(game: &Game, grid: &GridSpec) -> Self {
        let table = game.table();
        let budget = game.budget();
        let scale = common_denominator(table.iter().chain([&budget, &grid.step, &grid.epsilon]));
        let lift = |x: Rational| {
            let y = x * Rational::from_integer(scale);
            debug_assert!(y.is_integer());
            y.numer()
        };
        ScaledGame {
            n: game.n(),
            values: table.iter().map(|&v| lift(v)).collect(),
            budget: lift(budget),
            step: lift(grid.step),
            epsilon: lift(grid.epsilon),
            points: grid.points(budget),
        }
    }

    /// Chosen set, as a bitmask, when item `i` is priced at `idx[i]` steps.
    fn demand(&self, idx: &[usize]) -> u32 {
        let mut chosen = 0u32;
        let mut best: i128 = 0;
        let mut best_len = 0;
        for bits in 1u32..(1 << self.n) {
            let mut cost = 0;
            for (i, &k) in idx.iter().enumerate() {
                if bits & (1 << i) != 0 {
                    cost += k as i128 * self.step;
                }
            }
            if cost > self.budget {
                continue;
            }
            let utility = self.values[bits as usize] - cost;
            let len = bits.count_ones();
            if utility > best || (utility == best && len > best_len) {
                best = utility;
                best_len = len;
                chosen = bits;
            }
        }
        chosen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorClass {
    Additive,
    BudgetAdditive,
    SubmodularCoverage,
    Xos,
}

/// How the budget is drawn, relative to the weights `w` (additive values,
/// otherwise the item marginals `v(N) - v(N \ {i})`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetRule {
    /// `0 < B < v(N)`.
    BelowTotal,
    /// The relative valuation constraint holds on all items and
    /// `B < sum of w`.
    ConstraintHolds,
    /// The constraint fails on all items and `B < sum of w`.
    ConstraintFails,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub class: GeneratorClass,
    /// Item values (and coverage weights, clause entries) are drawn
    /// uniformly from multiples of `1 / value_denominator` in this range.
    pub min_value: Rational,
    pub max_value: Rational,
    pub value_denominator: i64,
    pub budget_rule: BudgetRule,
    /// Budgets are multiples of `1 / budget_denominator`.
    pub budget_denominator: i64,
    pub budget_cap: Option<Rational>,
    pub seed: u64,
    pub max_attempts: u32,
}

impl GeneratorSpec {
    pub fn new(n: usize, class: GeneratorClass, budget_rule: BudgetRule, seed: u64) -> Self {
        GeneratorSpec {
            n,
            class,
            min_value: Rational::new(1, 10),
            max_value: Rational::from_integer(2),
            value_denominator: 20,
            budget_rule,
            budget_denominator: 24,
            budget_cap: None,
            seed,
            max_attempts: 10_000,
        }
    }

    pub fn values(mut self, min: Rational, max: Rational, denominator: i64) -> Self {
        self.min_value = min;
        self.max_value = max;
        self.value_denominator = denominator;
        self
    }

    pub fn budget_cap(mut self, cap: Rational) -> Self {
        self.budget_cap = Some(cap);
        self
    }
}

/// Draws a game from `spec`; the same spec always yields the same game.
pub fn generate(spec: &GeneratorSpec) -> Result<Game, OracleError> {
    if spec.n == 0 || spec.n > crate::DEFAULT_ITEM_CAP {
        return Err(OracleError::InvalidSpec(format!("n = {} outside 1..={}", spec.n, crate::DEFAULT_ITEM_CAP)));
    }
    if spec.value_denominator <= 0 || spec.budget_denominator <= 0 {
        return Err(OracleError::InvalidSpec("denominators must be positive".into()));
    }
    let lo = (spec.min_value * Rational::from(spec.value_denominator)).ceil();
    let hi = (spec.max_value * Rational::from(spec.value_denominator)).floor();
    if spec.min_value.is_negative() || lo > hi {
        return Err(OracleError::InvalidSpec(format!(
            "value range [{}, {}] has no multiple of 1/{}",
            spec.min_value, spec.max_value, spec.value_denominator
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draw = |rng: &mut ChaCha8Rng| Rational::new(rng.gen_range(lo..=hi), spec.value_denominator as i128);

    for _ in 0..spec.max_attempts {
        let valuation = draw_valuation(spec, &mut rng, &draw)?;
        let weights = if valuation.is_additive() {
            valuation.singleton_values()
        } else {
            valuation.item_marginals()
        };
        let total_weight: Rational = weights.iter().sum();
        let total_value = valuation.value(ItemSet::full(spec.n));
        let spread: Rational = weights.iter().map(|&w| w - *weights.iter().min().unwrap()).sum();

        // Open interval (low, high), optionally closed at high.
        let (low, high, high_inclusive) = match spec.budget_rule {
            BudgetRule::BelowTotal => (Rational::ZERO, total_value, false),
            BudgetRule::ConstraintHolds => (spread, total_weight, false),
            BudgetRule::ConstraintFails => (Rational::ZERO, spread.min(total_weight), spread < total_weight),
        };
        let den = Rational::from(spec.budget_denominator);
        let first = (low * den).floor() + 1;
        let mut last = if high_inclusive { (high * den).floor() } else { (high * den).ceil() - 1 };
        if let Some(cap) = spec.budget_cap {
            last = last.min((cap * den).floor());
        }
        if first > last {
            continue;
        }
        let budget = Rational::new(rng.gen_range(first..=last), spec.budget_denominator as i128);
        let game = Game::new(valuation, budget)?;

        let holds = check_constraint(&game, game.items(), &weights).map(|r| r.holds).unwrap_or(false);
        let accepted = match spec.budget_rule {
            BudgetRule::BelowTotal => true,
            BudgetRule::ConstraintHolds => holds,
            BudgetRule::ConstraintFails => !holds,
        };
        if accepted {
            return Ok(game);
        }
    }
    Err(OracleError::AttemptsExhausted { rule: spec.budget_rule, attempts: spec.max_attempts })
}

fn draw_valuation(
    spec: &GeneratorSpec,
    rng: &mut ChaCha8Rng,
    draw: &impl Fn(&mut ChaCha8Rng) -> Rational,
) -> Result<Valuation, OracleError> {
    let n = spec.n;
    let valuation = match spec.class {
        GeneratorClass::Additive => Valuation::Additive { values: (0..n).map(|_| draw(rng)).collect() },
        GeneratorClass::BudgetAdditive => {
            let values: Vec<Rational> = (0..n).map(|_| draw(rng)).collect();
            let largest = *values.iter().max().unwrap();
            let total: Rational = values.iter().sum();
            // Cap somewhere between the largest value and the total.
            let t = Rational::new(rng.gen_range(0..=8), 8);
            Valuation::BudgetAdditive { cap: largest + (total - largest) * t, values }
        }
        GeneratorClass::SubmodularCoverage => {
            // n private elements plus n shared ones covered at random.
            let weights: Vec<Rational> = (0..2 * n).map(|_| draw(rng)).collect();
            let mut covers = vec![0u64; n];
            for (i, c) in covers.iter_mut().enumerate() {
                *c |= 1 << i;
            }
            for e in n..2 * n {
                for c in covers.iter_mut() {
                    if rng.gen_bool(0.5) {
                        *c |= 1 << e;
                    }
                }
            }
            let table = ItemSet::all(n)
                .map(|s| {
                    let covered = s.iter().fold(0u64, |acc, i| acc | covers[i]);
                    (0..2 * n).filter(|&e| covered & (1 << e) != 0).map(|e| weights[e]).sum()
                })
                .collect();
            Valuation::Table { n, values: table, class: TableClass::Submodular }
        }
        GeneratorClass::Xos => {
            let clauses = rng.gen_range(1..=3);
            let clauses = (0..clauses)
                .map(|_| {
                    (0..n)
                        .map(|_| if rng.gen_bool(0.25) { Rational::ZERO } else { draw(rng) })
                        .collect()
                })
                .collect();
            Valuation::Xos { n, clauses }
        }
    };
    Ok(valuation)
}

/// Random prices on multiples of `1 / denominator` in `[0, B]`, with zero
/// drawn more often than uniform.
pub fn random_prices(game: &Game, denominator: i64, seed: u64) -> PriceVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = (game.budget() * Rational::from(denominator)).floor();
    let prices: Vec<Rational> = (0..game.n())
        .map(|_| {
            if rng.gen_bool(0.15) {
                Rational::ZERO
            } else {
                Rational::new(rng.gen_range(0..=top), denominator as i128)
            }
        })
        .collect();
    PriceVector::new(prices).expect("nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::demand;
    use crate::equilibrium::equal_utility_prices;
    use crate::fixtures;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn p(s: &str) -> PriceVector {
        s.parse().unwrap()
    }

    #[test]
    fn oracle_matches_reference_demands() {
        let cases = [
            (fixtures::pne_not_l(), "0.6,0.4,0.3,0.3"),
            (fixtures::add_222(), "0.3,0.4,0.4"),
            (fixtures::budget_additive_pair(), "1,1/2,1"),
            (fixtures::budget_additive_pair(), "0,1/2,1"),
            (fixtures::budget_is_bad(), "0,0,0,0"),
            (fixtures::xos_no_equi(), "4/3,1/6,1/6"),
        ];
        for (g, prices) in cases {
            let prices = p(prices);
            assert_eq!(oracle_demand(&g, &prices), demand(&g, &prices));
        }
        let out = oracle_demand(&fixtures::budget_additive_pair(), &p("0,1/2,1"));
        assert_eq!(out.chosen, [0, 1].into_iter().collect());
        assert_eq!(out.positively_priced, [1].into_iter().collect());
    }

    #[test]
    fn grid_finds_the_opening_family() {
        let g = fixtures::opening();
        let survivors = grid_enumerate(&g, &GridSpec::new(r("1/4"))).unwrap();
        assert!(!survivors.is_empty());
        for s in &survivors {
            assert_eq!(s.prices[0], Rational::ONE, "{:?}", s.prices);
            assert!(!s.outcome.positively_priced.contains(1));
            assert!(s.exact_pne);
        }
        assert_eq!(survivors.len(), 5);
    }

    #[test]
    fn grid_contains_equal_utility_point() {
        let g = fixtures::add_222();
        let survivors = grid_enumerate(&g, &GridSpec::new(r("1/12"))).unwrap();
        let target = equal_utility_prices(&g, g.items(), &g.valuation().singleton_values()).unwrap();
        let hit = survivors.iter().find(|s| s.prices == target).expect("1/3 is on the grid");
        assert!(hit.exact_pne);
    }

    #[test]
    fn single_vendor_takes_the_budget() {
        let g = Game::new(Valuation::additive(vec![r("5")]).unwrap(), r("1")).unwrap();
        let survivors = grid_enumerate(&g, &GridSpec::new(r("1/2"))).unwrap();
        assert_eq!(survivors.len(), 1);
        assert_eq!(survivors[0].prices, p("1"));
        assert!(survivors[0].exact_pne);
    }

    #[test]
    fn grid_limits() {
        let g = fixtures::pne_not_l();
        let mut grid = GridSpec::new(r("1/1000"));
        grid.max_evals = 1000;
        assert!(matches!(grid_enumerate(&g, &grid), Err(OracleError::TooManyEvaluations { .. })));
        assert!(matches!(
            grid_enumerate(&g, &GridSpec::new(Rational::ZERO)),
            Err(OracleError::NonPositiveStep(_))
        ));
    }

    #[test]
    fn generators_are_deterministic() {
        let spec = GeneratorSpec::new(3, GeneratorClass::Additive, BudgetRule::ConstraintHolds, 7);
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        let report = check_constraint(&a, a.items(), &a.valuation().singleton_values()).unwrap();
        assert!(report.holds);
        assert!(a.value(a.items()) > a.budget());
    }

    #[test]
    fn coverage_is_submodular() {
        for seed in 0..20 {
            let spec = GeneratorSpec::new(4, GeneratorClass::SubmodularCoverage, BudgetRule::BelowTotal, seed);
            let g = generate(&spec).unwrap();
            assert_eq!(g.valuation().validate().submodular, Some(true));
        }
    }

    #[test]
    fn constraint_fails_rule() {
        for seed in 0..20 {
            let spec = GeneratorSpec::new(3, GeneratorClass::Additive, BudgetRule::ConstraintFails, seed)
                .budget_cap(Rational::ONE);
            let g = generate(&spec).unwrap();
            let report = check_constraint(&g, g.items(), &g.valuation().singleton_values()).unwrap();
            assert!(!report.holds);
            assert!(g.budget() <= Rational::ONE);
        }
    }

    #[test]
    fn impossible_specs_error() {
        let spec = GeneratorSpec::new(1, GeneratorClass::Additive, BudgetRule::ConstraintFails, 0);
        assert!(matches!(generate(&spec), Err(OracleError::AttemptsExhausted { .. })));
        let spec = GeneratorSpec::new(0, GeneratorClass::Additive, BudgetRule::BelowTotal, 0);
        assert!(matches!(generate(&spec), Err(OracleError::InvalidSpec(_))));
    }
}
