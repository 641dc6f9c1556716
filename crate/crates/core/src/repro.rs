//! Data-driven reproduction cases for the worked examples.
//!
//! Each case names a game and a list of checks. A check runs one engine
//! operation, renders the result as JSON and compares it against `expect`;
//! only the keys present in `expect` are compared, and strings that parse as
//! rationals compare by value. An optional `claimed` block records what the
//! original worked example states; when the engine disagrees with it but
//! matches `expect`, the case is confirmed with a discrepancy rather than
//! failed.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::demand::{buyer_utility, demand, BuyerUtility, PriceVector};
use crate::equilibrium::{base_set, bnl_prices, check_constraint, equal_utility_prices, is_market_clearing};
use crate::game::{Game, GameFile};
use crate::items::ItemSet;
use crate::oracle::{grid_enumerate, GridSpec};
use crate::rational::Rational;
use crate::verifier::{best_response, critical_prices, verify_pne};
use crate::welfare::{equilibrium_ratio, poa_family_unchecked, social_welfare};

macro_rules! cases {
    ($($file:literal),* $(,)?) => {
        /// `(file stem, JSON text)` for every bundled case.
        pub const CASE_FILES: &[(&str, &str)] = &[
            $(($file, include_str!(concat!("../fixtures/repro/", $file, ".json")))),*
        ];
    };
}

cases! {
    "opening",
    "gross_substitutes",
    "budget_additive_pair",
    "equal_split",
    "pne_not_l",
    "x_ne_l",
    "two_l",
    "budget_is_bad",
    "xos_no_equi",
    "welfare_family",
    "welfare_family_small",
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproCase {
    pub id: String,
    pub title: String,
    /// Name of a bundled game, see [`crate::fixtures`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    /// Inline game, used when no fixture is named.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<GameFile>,
    pub checks: Vec<Check>,
}

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Stated in the worked example.
    WorkedExample,
    /// Follows from the example's data by direct computation.
    Computed,
    /// True by definition.
    Definition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub action: Action,
    #[serde(default)]
    pub args: Args,
    pub expect: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed: Option<Value>,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Validate,
    Value,
    Marginal,
    ItemMarginals,
    SetMarginals,
    Demand,
    Utility,
    Constraint,
    Prices,
    BaseSet,
    BnlPrices,
    MarketClearing,
    Verify,
    BestResponse,
    CriticalPrices,
    Grid,
    Welfare,
    Ratio,
    Family,
}

/// Which per-item weights the constraint and price actions use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    /// Singleton values for additive games, item marginals otherwise.
    Auto,
    Values,
    Marginals,
    /// Marginals within the check's `set`.
    SetMarginals,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Args {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PriceVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<ItemSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within: Option<ItemSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Weights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vendor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<PriceVector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Confirmed,
    ConfirmedWithPaperDiscrepancy,
    Failed,
}

impl Status {
    pub fn passed(self) -> bool {
        self != Status::Failed
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Confirmed => "confirmed",
            Status::ConfirmedWithPaperDiscrepancy => "confirmed-with-paper-discrepancy",
            Status::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub action: Action,
    pub source: Source,
    pub status: Status,
    pub actual: Value,
    /// Paths where `actual` differs from `expect`, with both values.
    pub mismatches: Vec<String>,
    /// Paths where `actual` differs from `claimed`.
    pub discrepancies: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub id: String,
    pub title: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReproError {
    #[error("case file {file}: {reason}")]
    Parse { file: String, reason: String },
    #[error("no case with id {0}")]
    UnknownCase(String),
}

pub fn bundled_cases() -> Result<Vec<ReproCase>, ReproError> {
    CASE_FILES
        .iter()
        .map(|(file, text)| {
            serde_json::from_str(text).map_err(|e| ReproError::Parse { file: file.to_string(), reason: e.to_string() })
        })
        .collect()
}

/// Runs every bundled case, or only the one with the given id.
pub fn run_bundled(only: Option<&str>) -> Result<Vec<CaseResult>, ReproError> {
    let cases = bundled_cases()?;
    let selected: Vec<_> = match only {
        Some(id) => {
            let case = cases.into_iter().find(|c| c.id == id).ok_or_else(|| ReproError::UnknownCase(id.to_string()))?;
            vec![case]
        }
        None => cases,
    };
    Ok(selected.iter().map(run_case).collect())
}

pub fn case_ids() -> Result<Vec<String>, ReproError> {
    Ok(bundled_cases()?.into_iter().map(|c| c.id).collect())
}

fn load_game(case: &ReproCase) -> Result<Option<Game>, String> {
    match (&case.fixture, &case.game) {
        (Some(_), Some(_)) => Err("both `fixture` and `game` given".into()),
        (Some(name), None) => crate::fixtures::by_name(name).map(Some).ok_or_else(|| format!("unknown fixture {name}")),
        (None, Some(file)) => file.clone().into_game(crate::DEFAULT_ITEM_CAP).map(Some).map_err(|e| e.to_string()),
        (None, None) => Ok(None),
    }
}

pub fn run_case(case: &ReproCase) -> CaseResult {
    let mut result = CaseResult {
        id: case.id.clone(),
        title: case.title.clone(),
        status: Status::Failed,
        error: None,
        checks: Vec::new(),
    };
    let game = match load_game(case) {
        Ok(game) => game,
        Err(e) => {
            result.error = Some(e);
            return result;
        }
    };
    result.checks = case.checks.iter().map(|check| run_check(game.as_ref(), check)).collect();
    result.status = result.checks.iter().map(|c| c.status).max_by_key(|s| *s as u8).unwrap_or(Status::Confirmed);
    result
}

pub fn run_check(game: Option<&Game>, check: &Check) -> CheckResult {
    let actual = match perform(game, check.action, &check.args) {
        Ok(value) => value,
        Err(e) => json!({ "error": e }),
    };
    let mut mismatches = Vec::new();
    compare(&check.expect, &actual, "", &mut mismatches);
    let mut discrepancies = Vec::new();
    if let Some(claimed) = &check.claimed {
        compare(claimed, &actual, "", &mut discrepancies);
    }
    let status = if !mismatches.is_empty() {
        Status::Failed
    } else if !discrepancies.is_empty() {
        Status::ConfirmedWithPaperDiscrepancy
    } else {
        Status::Confirmed
    };
    CheckResult {
        action: check.action,
        source: check.source,
        status,
        actual,
        mismatches,
        discrepancies,
        note: check.note.clone(),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn require<T: Clone>(x: &Option<T>, name: &str) -> Result<T, String> {
    x.clone().ok_or_else(|| format!("missing argument `{name}`"))
}

fn weights_for(game: &Game, weights: Weights, set: ItemSet) -> Vec<Rational> {
    let valuation = game.valuation();
    match weights {
        Weights::Auto if valuation.is_additive() => valuation.singleton_values(),
        Weights::Auto | Weights::Marginals => valuation.item_marginals(),
        Weights::Values => valuation.singleton_values(),
        Weights::SetMarginals => valuation.set_marginals(set),
    }
}

fn perform(game: Option<&Game>, action: Action, args: &Args) -> Result<Value, String> {
    if action == Action::Family {
        return Ok(family(require(&args.n, "n")?, args.scale.unwrap_or(Rational::from(2))));
    }
    let game = game.ok_or("this action needs a game")?;
    if let Some(prices) = &args.prices {
        game.check_prices(prices).map_err(|e| e.to_string())?;
    }
    let prices = || require(&args.prices, "prices");
    let set = args.set.unwrap_or(game.items());
    let weights = || weights_for(game, args.weights.unwrap_or(Weights::Auto), set);

    let value = match action {
        Action::Validate => {
            let report = game.valuation().validate();
            let mut v = to_value(&report);
            v["passes"] = json!(report.passes());
            v
        }
        Action::Value => json!({ "value": game.value(require(&args.set, "set")?) }),
        Action::Marginal => {
            let within = args.within.unwrap_or(game.items());
            let m = game.valuation().marginal(within, require(&args.set, "set")?).map_err(|e| e.to_string())?;
            json!({ "value": m })
        }
        Action::ItemMarginals => json!({ "values": game.valuation().item_marginals() }),
        Action::SetMarginals => json!({ "values": game.valuation().set_marginals(require(&args.set, "set")?) }),
        Action::Demand => {
            let outcome = demand(game, &prices()?);
            let mut v = to_value(&outcome);
            v["tie_broken_lexicographically"] = json!(outcome.tie_broken_lexicographically());
            v
        }
        Action::Utility => match buyer_utility(game, require(&args.set, "set")?, &prices()?) {
            BuyerUtility::Feasible(u) => json!({ "utility": u }),
            BuyerUtility::Infeasible => json!({ "utility": "infeasible" }),
        },
        Action::Constraint => {
            let report = check_constraint(game, set, &weights()).map_err(|e| e.to_string())?;
            let mut v = to_value(&report);
            v["failing"] = to_value(&report.failing_items());
            v["weights"] = to_value(&report.entries.iter().map(|e| e.weight).collect::<Vec<_>>());
            v["thresholds"] = to_value(&report.entries.iter().map(|e| e.threshold).collect::<Vec<_>>());
            v
        }
        Action::Prices => match equal_utility_prices(game, set, &weights()) {
            Ok(p) => json!({ "prices": p }),
            Err(e) => json!({ "error": e.to_string() }),
        },
        Action::BaseSet => to_value(&base_set(game).map_err(|e| e.to_string())?),
        Action::BnlPrices => json!({ "prices": bnl_prices(game) }),
        Action::MarketClearing => json!({ "market_clearing": is_market_clearing(game, &prices()?) }),
        Action::Verify => {
            let report = verify_pne(game, &prices()?);
            let witnesses: Vec<Value> = report
                .deviators()
                .map(|b| {
                    let w = b.witness.as_ref().unwrap();
                    json!({ "vendor": b.vendor, "price": w.price, "chosen": w.outcome.chosen, "gain": w.gain })
                })
                .collect();
            json!({
                "is_pne": report.is_pne,
                "chosen": report.outcome.chosen,
                "positively_priced": report.outcome.positively_priced,
                "deviators": report.deviators().map(|b| b.vendor).collect::<Vec<_>>(),
                "sup": report.per_vendor.iter().map(|b| b.sup_deviation_utility).collect::<Vec<_>>(),
                "witnesses": witnesses,
            })
        }
        Action::BestResponse => {
            let b = best_response(game, &prices()?, require(&args.vendor, "vendor")?);
            json!({
                "current": b.current_utility,
                "sup": b.sup_deviation_utility,
                "attained": b.sup_attained,
                "witness_price": b.witness.as_ref().map(|w| w.price),
                "witness_chosen": b.witness.as_ref().map(|w| w.outcome.chosen),
            })
        }
        Action::CriticalPrices => {
            to_value(&critical_prices(game, &prices()?, require(&args.vendor, "vendor")?))
        }
        Action::Grid => {
            let mut grid = GridSpec::new(require(&args.step, "step")?);
            grid.epsilon = args.epsilon.unwrap_or(Rational::ZERO);
            let survivors = grid_enumerate(game, &grid).map_err(|e| e.to_string())?;
            let mut vendor_prices = vec![BTreeSet::new(); game.n()];
            let mut sold = ItemSet::EMPTY;
            for s in &survivors {
                for (i, &p) in s.prices.as_slice().iter().enumerate() {
                    vendor_prices[i].insert(p);
                }
                sold = sold.union(s.outcome.positively_priced);
            }
            let clearing: Vec<&PriceVector> = survivors
                .iter()
                .filter(|s| s.exact_pne && s.outcome.positively_priced == game.items())
                .map(|s| &s.prices)
                .collect();
            json!({
                "survivors": survivors.len(),
                "exact": survivors.iter().filter(|s| s.exact_pne).count(),
                "vendor_prices": vendor_prices,
                "sold_union": sold,
                "market_clearing": clearing,
            })
        }
        Action::Welfare => to_value(&social_welfare(game, &prices()?)),
        Action::Ratio => {
            let report = equilibrium_ratio(game, &require(&args.candidates, "candidates")?).map_err(|e| e.to_string())?;
            json!({
                "best": report.best,
                "worst": report.worst,
                "ratio": report.ratio,
                "verified": report.equilibria.len(),
                "rejected": report.rejected,
            })
        }
        Action::Family => unreachable!(),
    };
    Ok(value)
}

fn family(n: usize, scale: Rational) -> Value {
    if n < 4 {
        return json!({ "error": "the family needs at least four items" });
    }
    let f = poa_family_unchecked(n, scale);
    let worst = verify_pne(&f.game, &f.worst);
    let best = verify_pne(&f.game, &f.best);
    let worst_welfare = social_welfare(&f.game, &f.worst).welfare;
    let best_welfare = social_welfare(&f.game, &f.best).welfare;
    let mut v = json!({
        "worst_prices": f.worst,
        "best_prices": f.best,
        "worst_pne": worst.is_pne,
        "best_pne": best.is_pne,
        "worst_welfare": worst_welfare,
        "best_welfare": best_welfare,
        "base_set": base_set(&f.game).map(|b| b.items).ok(),
        "best_deviators": best.deviators().map(|b| b.vendor).collect::<Vec<_>>(),
    });
    if worst.is_pne && best.is_pne {
        v["ratio"] = json!(best_welfare / worst_welfare);
    }
    v
}

/// Compares only what `expected` mentions. Records `path: expected vs actual`.
fn compare(expected: &Value, actual: &Value, path: &str, out: &mut Vec<String>) {
    let mut differ = || out.push(format!("{}: expected {expected}, got {actual}", if path.is_empty() { "." } else { path }));
    match (expected, actual) {
        (Value::Object(e), Value::Object(a)) => compare_objects(e, a, path, out),
        (Value::Array(e), Value::Array(a)) => {
            if e.len() != a.len() {
                differ();
                return;
            }
            for (k, (ev, av)) in e.iter().zip(a).enumerate() {
                compare(ev, av, &format!("{path}[{k}]"), out);
            }
        }
        _ => match (as_rational(expected), as_rational(actual)) {
            (Some(e), Some(a)) if e == a => {}
            (Some(_), Some(_)) => differ(),
            _ if expected == actual => {}
            _ => differ(),
        },
    }
}

fn compare_objects(expected: &Map<String, Value>, actual: &Map<String, Value>, path: &str, out: &mut Vec<String>) {
    for (key, ev) in expected {
        let sub = format!("{path}.{key}");
        match actual.get(key) {
            Some(av) => compare(ev, av, &sub, out),
            None => out.push(format!("{sub}: expected {ev}, missing")),
        }
    }
}

fn as_rational(v: &Value) -> Option<Rational> {
    match v {
        Value::String(s) => s.parse().ok(),
        Value::Number(n) => n.as_i64().map(Rational::from),
        _ => None,
    }
}
