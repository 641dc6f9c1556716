//! Game instances and the JSON game file format.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::PriceVector;
use crate::items::ItemSet;
use crate::rational::Rational;
use crate::valuation::{TableClass, ValidationReport, Valuation, ValuationError, DEFAULT_ITEM_CAP};

/// A budgeted pricing game: one buyer with valuation `v` and budget `B`,
/// and one vendor per item.
///
/// Construction validates the valuation and caches its full subset table.
#[derive(Clone, PartialEq, Eq)]
pub struct Game {
    valuation: Valuation,
    budget: Rational,
    table: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("budget must be positive, got {0}")]
    NonPositiveBudget(Rational),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error("invalid valuation: {}", describe_failures(.0))]
    Invalid(Box<ValidationReport>),
    #[error("price vector has {got} entries for {n} items")]
    PriceLength { n: usize, got: usize },
}

fn describe_failures(report: &ValidationReport) -> String {
    let mut parts = Vec::new();
    if !report.normalized {
        parts.push("v(empty set) is not 0".to_string());
    }
    if !report.nonnegative {
        parts.push("negative entries".to_string());
    }
    if let Some((set, i)) = report.monotonicity_violations.first() {
        parts.push(format!(
            "not monotone ({} violations, first: adding {i} to {set})",
            report.monotonicity_violations.len()
        ));
    }
    if let Some(v) = report.submodularity_violations.first() {
        parts.push(format!(
            "declared submodular but {} violations (first: item {} gains {} on {} but {} on {})",
            report.submodularity_violations.len(),
            v.item,
            v.smaller_gain,
            v.smaller,
            v.larger_gain,
            v.larger
        ));
    }
    parts.join("; ")
}

impl Game {
    pub fn new(valuation: Valuation, budget: Rational) -> Result<Self, GameError> {
        if !budget.is_positive() {
            return Err(GameError::NonPositiveBudget(budget));
        }
        let report = valuation.validate();
        if !report.passes() {
            return Err(GameError::Invalid(Box::new(report)));
        }
        let table = valuation.tabulate();
        Ok(Game { valuation, budget, table })
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    pub fn budget(&self) -> Rational {
        self.budget
    }

    pub fn n(&self) -> usize {
        self.valuation.n()
    }

    pub fn items(&self) -> ItemSet {
        ItemSet::full(self.n())
    }

    /// `v(S)` from the cached table.
    pub fn value(&self, set: ItemSet) -> Rational {
        self.table[set.index()]
    }

    /// The cached table, indexed by subset bitmask.
    pub fn table(&self) -> &[Rational] {
        &self.table
    }

    pub fn check_prices(&self, prices: &PriceVector) -> Result<(), GameError> {
        if prices.len() != self.n() {
            return Err(GameError::PriceLength { n: self.n(), got: prices.len() });
        }
        Ok(())
    }

    /// Same valuation, different budget.
    pub fn with_budget(&self, budget: Rational) -> Result<Self, GameError> {
        if !budget.is_positive() {
            return Err(GameError::NonPositiveBudget(budget));
        }
        Ok(Game { budget, ..self.clone() })
    }

    pub fn to_file(&self) -> GameFile {
        GameFile::from(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("game serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GameFileError> {
        Self::from_json_with_cap(text, DEFAULT_ITEM_CAP)
    }

    pub fn from_json_with_cap(text: &str, cap: usize) -> Result<Self, GameFileError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: GameFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let (field, reason) = (e.path().to_string(), e.inner().to_string());
            let (field, reason) = if field == "valuation" {
                serde_json::from_str::<serde_json::Value>(text)
                    .ok()
                    .and_then(|v| locate_valuation_error(&v["valuation"]))
                    .unwrap_or((field, reason))
            } else {
                (field, reason)
            };
            GameFileError::Syntax { field, reason }
        })?;
        file.into_game(cap)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GameFileError> {
        Self::load_with_cap(path, DEFAULT_ITEM_CAP)
    }

    pub fn load_with_cap(path: impl AsRef<Path>, cap: usize) -> Result<Self, GameFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GameFileError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json_with_cap(&text, cap)
    }
}

impl fmt::Debug for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Game")
            .field("valuation", &self.valuation)
            .field("budget", &self.budget)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameFileError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("malformed game file at `{field}`: {reason}")]
    Syntax { field: String, reason: String },
    #[error("invalid game file field `{field}`: {reason}")]
    Field { field: String, reason: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// On-disk form of a [`Game`].
///
/// ```json
/// { "n": 3, "budget": "1",
///   "valuation": { "kind": "additive", "values": ["2", "2", "2"] } }
/// ```
///
/// Tables list `2^n` values in subset-bitmask order (bit `i` is item `i`) and
/// may carry `"class": "submodular"` to have that property validated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub n: usize,
    pub budget: Rational,
    pub valuation: ValuationFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValuationFile {
    Additive {
        values: Vec<Rational>,
    },
    BudgetAdditive {
        cap: Rational,
        values: Vec<Rational>,
    },
    Table {
        table: Vec<Rational>,
        #[serde(default = "default_table_class")]
        class: TableClass,
    },
    Xos {
        clauses: Vec<Vec<Rational>>,
    },
}

fn default_table_class() -> TableClass {
    TableClass::Monotone
}

/// The tagged valuation enum buffers its content, so errors inside it lose
/// their path. Re-parse the untagged fields to find the offending one.
fn locate_valuation_error(valuation: &serde_json::Value) -> Option<(String, String)> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct Additive {
        values: Vec<Rational>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct BudgetAdditive {
        cap: Rational,
        values: Vec<Rational>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct Table {
        table: Vec<Rational>,
        class: Option<TableClass>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct Xos {
        clauses: Vec<Vec<Rational>>,
    }

    fn probe<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Option<(String, String)> {
        serde_path_to_error::deserialize::<_, T>(v)
            .err()
            .map(|e| (format!("valuation.{}", e.path()), e.inner().to_string()))
    }

    let mut fields = valuation.as_object()?.clone();
    let kind = fields.remove("kind")?;
    let fields = serde_json::Value::Object(fields);
    match kind.as_str()? {
        "additive" => probe::<Additive>(fields),
        "budget_additive" => probe::<BudgetAdditive>(fields),
        "table" => probe::<Table>(fields),
        "xos" => probe::<Xos>(fields),
        _ => None,
    }
}

impl GameFile {
    pub fn into_game(self, cap: usize) -> Result<Game, GameFileError> {
        let n = self.n;
        let field = |field: &str, reason: String| GameFileError::Field { field: field.to_string(), reason };
        if n > cap {
            return Err(field("n", format!("{n} items exceeds the cap of {cap}")));
        }
        let valuation = match self.valuation {
            ValuationFile::Additive { values } => {
                if values.len() != n {
                    return Err(field("valuation.values", format!("expected {n} entries, got {}", values.len())));
                }
                Valuation::Additive { values }
            }
            ValuationFile::BudgetAdditive { cap: limit, values } => {
                if values.len() != n {
                    return Err(field("valuation.values", format!("expected {n} entries, got {}", values.len())));
                }
                Valuation::BudgetAdditive { cap: limit, values }
            }
            ValuationFile::Table { table, class } => {
                if table.len() != 1 << n {
                    return Err(field(
                        "valuation.table",
                        format!("expected {} entries, got {}", 1usize << n, table.len()),
                    ));
                }
                Valuation::table_with_cap(n, table, class, cap).map_err(GameError::from)?
            }
            ValuationFile::Xos { clauses } => {
                if let Some((k, c)) = clauses.iter().enumerate().find(|(_, c)| c.len() != n) {
                    return Err(field(
                        &format!("valuation.clauses[{k}]"),
                        format!("expected {n} entries, got {}", c.len()),
                    ));
                }
                Valuation::Xos { n, clauses }
            }
        };
        valuation.check_cap(cap).map_err(GameError::from)?;
        Ok(Game::new(valuation, self.budget)?)
    }
}

impl From<&Game> for GameFile {
    fn from(game: &Game) -> Self {
        let valuation = match game.valuation.clone() {
            Valuation::Additive { values } => ValuationFile::Additive { values },
            Valuation::BudgetAdditive { cap, values } => ValuationFile::BudgetAdditive { cap, values },
            Valuation::Table { values, class, .. } => ValuationFile::Table { table: values, class },
            Valuation::Xos { clauses, .. } => ValuationFile::Xos { clauses },
        };
        GameFile { n: game.n(), budget: game.budget, valuation, description: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        let add = Game::from_json(r#"{"n":2,"budget":"1","valuation":{"kind":"additive","values":["2","0.5"]}}"#)
            .unwrap();
        assert_eq!(add.value(ItemSet::full(2)), "5/2".parse().unwrap());

        let ba = Game::from_json(
            r#"{"n":3,"budget":"2","valuation":{"kind":"budget_additive","cap":"2","values":["1","1","2"]}}"#,
        )
        .unwrap();
        assert_eq!(ba.value(ItemSet::full(3)), Rational::from_integer(2));

        let table = Game::from_json(
            r#"{"n":1,"budget":"1","valuation":{"kind":"table","table":["0","3/2"],"class":"submodular"}}"#,
        )
        .unwrap();
        assert!(table.valuation().is_declared_submodular());

        let xos = Game::from_json(
            r#"{"n":2,"budget":"1","valuation":{"kind":"xos","clauses":[["1","0"],["0","1"]]}}"#,
        )
        .unwrap();
        assert_eq!(xos.value(ItemSet::full(2)), Rational::ONE);
    }

    #[test]
    fn malformed_files_name_the_field() {
        let err = Game::from_json(r#"{"n":2,"budget":"x","valuation":{"kind":"additive","values":["1","1"]}}"#)
            .unwrap_err();
        assert!(matches!(&err, GameFileError::Syntax { field, .. } if field == "budget"), "{err}");

        let err = Game::from_json(r#"{"n":3,"budget":"1","valuation":{"kind":"additive","values":["1","1"]}}"#)
            .unwrap_err();
        assert!(matches!(&err, GameFileError::Field { field, .. } if field == "valuation.values"), "{err}");

        let err = Game::from_json(r#"{"n":1,"budget":"1","valuation":{"kind":"cubic","values":["1"]}}"#)
            .unwrap_err();
        assert!(matches!(err, GameFileError::Syntax { .. }));

        let err = Game::from_json(r#"{"n":2,"budget":"1","valuation":{"kind":"xos","clauses":[["1","0"],["0",0.5]]}}"#)
            .unwrap_err();
        assert!(matches!(&err, GameFileError::Syntax { field, .. } if field == "valuation.clauses[1][1]"), "{err}");

        let err = Game::from_json(r#"{"n":1,"budget":"1","valuation":{"kind":"table","table":["0","1"],"klass":"x"}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("klass"), "{err}");

        let err = Game::from_json(r#"{"n":1,"budget":"0","valuation":{"kind":"additive","values":["1"]}}"#)
            .unwrap_err();
        assert_eq!(err, GameFileError::Game(GameError::NonPositiveBudget(Rational::ZERO)));
    }

    #[test]
    fn item_cap_is_enforced() {
        let values = vec!["\"1\""; 13].join(",");
        let text = format!(r#"{{"n":13,"budget":"1","valuation":{{"kind":"additive","values":[{values}]}}}}"#);
        assert!(matches!(Game::from_json(&text), Err(GameFileError::Field { .. })));
        assert!(Game::from_json_with_cap(&text, 14).is_ok());
    }

    #[test]
    fn non_monotone_table_rejected() {
        let err = Game::from_json(r#"{"n":2,"budget":"1","valuation":{"kind":"table","table":["0","1","0","0.5"]}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("not monotone"), "{err}");
    }
}
