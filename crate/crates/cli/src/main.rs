use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use pricegame::equilibrium::{
    base_set, bnl_prices, check_constraint, equal_utility_prices, is_market_clearing, EquilibriumError,
};
use pricegame::oracle::{generate, grid_enumerate, BudgetRule, GeneratorClass, GeneratorSpec, GridSpec};
use pricegame::repro::{self, Status};
use pricegame::verifier::verify_pne;
use pricegame::welfare::{equilibrium_ratio, poa_family_scaled, social_welfare};
use pricegame::{demand, vendor_utilities, Game, ItemSet, PriceVector, Rational, DEFAULT_ITEM_CAP};

mod render;

#[derive(Parser)]
#[command(name = "pricegame", version, about = "Equilibria of budgeted single-buyer pricing games")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Largest item count accepted from game files.
    #[arg(long, global = true, default_value_t = DEFAULT_ITEM_CAP)]
    cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a game file: monotonicity, and submodularity for declared tables.
    Validate(GameArg),
    /// The set the buyer consumes at given prices.
    Demand(Priced),
    /// The relative valuation constraint on a set of items.
    Constraint(Constrained),
    /// Equal-utility prices that exhaust the budget.
    Prices(Constrained),
    /// Greedy base set of an additive game, with its equal-utility prices.
    BaseSet(GameArg),
    /// Item marginals as prices, the unbudgeted equilibrium.
    BnlPrices(GameArg),
    /// Exact pure Nash verification.
    Verify(Priced),
    /// On-grid equilibrium search, each survivor verified exactly.
    Enumerate(Enumerate),
    /// Welfare of the positively priced consumed set.
    Welfare(Priced),
    /// Best over worst welfare among candidate equilibria.
    Ratio(Ratio),
    /// The additive family whose two equilibria differ in welfare by about n/2.
    Family(Family),
    /// Draw a random game.
    Generate(Generate),
    /// Run the bundled reproduction cases.
    Repro(Repro),
}

#[derive(Args)]
struct GameArg {
    /// Game file (JSON).
    #[arg(long)]
    game: PathBuf,
}

#[derive(Args)]
struct Priced {
    #[command(flatten)]
    game: GameArg,
    /// Comma-separated prices; decimals and fractions are exact, e.g. 0.6,1/3.
    #[arg(long, allow_hyphen_values = true)]
    prices: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightKind {
    /// Item values for additive games, item marginals otherwise.
    Auto,
    /// Singleton values v({i}).
    Values,
    /// v(N) - v(N - i).
    Marginals,
    /// v(S) - v(S - i) within the chosen set.
    SetMarginals,
}

#[derive(Args)]
struct Constrained {
    #[command(flatten)]
    game: GameArg,
    /// Items to use, e.g. 0,1,3. Defaults to all items.
    #[arg(long)]
    set: Option<String>,
    #[arg(long, value_enum, default_value_t = WeightKind::Auto)]
    weights: WeightKind,
}

#[derive(Args)]
struct Enumerate {
    #[command(flatten)]
    game: GameArg,
    /// Grid spacing; defaults to 1/24 up to three items and 1/8 beyond.
    #[arg(long)]
    grid_step: Option<Rational>,
    /// Improvement a grid deviation needs to disqualify a point.
    #[arg(long, default_value = "0")]
    epsilon: Rational,
    #[arg(long, default_value_t = GridSpec::DEFAULT_MAX_EVALS)]
    max_evals: u64,
}

#[derive(Args)]
struct Ratio {
    #[command(flatten)]
    game: GameArg,
    /// JSON file holding an array of price vectors.
    #[arg(long)]
    candidates: PathBuf,
}

#[derive(Args)]
struct Family {
    /// Number of items, at least 9.
    #[arg(long)]
    n: usize,
    /// Value of the top item; the middle items are worth one less.
    #[arg(long, default_value = "2")]
    scale: Rational,
    /// Write the game file here as well.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassArg {
    Additive,
    BudgetAdditive,
    SubmodularCoverage,
    Xos,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    BelowTotal,
    ConstraintHolds,
    ConstraintFails,
}

#[derive(Args)]
struct Generate {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = ClassArg::Additive)]
    class: ClassArg,
    #[arg(long, value_enum, default_value_t = RuleArg::BelowTotal)]
    budget_rule: RuleArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "1/10")]
    min_value: Rational,
    #[arg(long, default_value = "2")]
    max_value: Rational,
    /// Values are multiples of 1/this.
    #[arg(long, default_value_t = 20)]
    value_denominator: i64,
    #[arg(long)]
    budget_cap: Option<Rational>,
    /// Write the game file here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Repro {
    /// Run a single case by id.
    #[arg(long)]
    case: Option<String>,
}

/// What a successful run concluded.
enum Verdict {
    Positive,
    Negative,
}

struct Output {
    verdict: Verdict,
    json: Value,
    text: String,
}

impl Output {
    fn new(verdict: Verdict, json: Value, text: String) -> Self {
        Output { verdict, json, text }
    }

    fn ok(json: Value, text: String) -> Self {
        Self::new(Verdict::Positive, json, text)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let text = match cli.format {
                Format::Text => out.text,
                Format::Json => serde_json::to_string_pretty(&out.json).unwrap() + "\n",
            };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            match out.verdict {
                Verdict::Positive => ExitCode::SUCCESS,
                Verdict::Negative => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(arg: &GameArg, cap: usize) -> Result<Game> {
    Game::load_with_cap(&arg.game, cap).with_context(|| format!("loading {}", arg.game.display()))
}

fn parse_prices(text: &str, game: &Game) -> Result<PriceVector> {
    let prices: PriceVector = text.parse().with_context(|| format!("parsing --prices {text:?}"))?;
    game.check_prices(&prices)?;
    Ok(prices)
}

fn parse_set(text: &str, n: usize) -> Result<ItemSet> {
    let inner = text.trim().trim_start_matches(['{', '[']).trim_end_matches(['}', ']']);
    let mut set = ItemSet::EMPTY;
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let item: usize = part.parse().with_context(|| format!("item {part:?} in --set"))?;
        if item >= n {
            bail!("item {item} in --set is out of range for {n} items");
        }
        set = set.with(item);
    }
    Ok(set)
}

fn weights(game: &Game, kind: WeightKind, set: ItemSet) -> Vec<Rational> {
    let v = game.valuation();
    match kind {
        WeightKind::Auto if v.is_additive() => v.singleton_values(),
        WeightKind::Auto | WeightKind::Marginals => v.item_marginals(),
        WeightKind::Values => v.singleton_values(),
        WeightKind::SetMarginals => v.set_marginals(set),
    }
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> Result<Output> {
    let cap = cli.cap;
    Ok(match &cli.command {
        Command::Validate(arg) => {
            let game = load(arg, cap)?;
            let report = game.valuation().validate();
            let verdict = if report.passes() { Verdict::Positive } else { Verdict::Negative };
            let mut json = to_json(&report);
            json["passes"] = json!(report.passes());
            json["kind"] = json!(game.valuation().kind_name());
            json["n"] = json!(game.n());
            json["budget"] = json!(game.budget());
            Output::new(verdict, json, render::validation(&game, &report))
        }
        Command::Demand(args) => {
            let game = load(&args.game, cap)?;
            let prices = parse_prices(&args.prices, &game)?;
            let outcome = demand(&game, &prices);
            let mut json = to_json(&outcome);
            json["vendor_utilities"] = to_json(&vendor_utilities(&outcome, &prices));
            json["tie_broken_lexicographically"] = json!(outcome.tie_broken_lexicographically());
            Output::ok(json, render::demand(&outcome, &prices))
        }
        Command::Constraint(args) => {
            let game = load(&args.game, cap)?;
            let set = args.set.as_deref().map(|s| parse_set(s, game.n())).transpose()?.unwrap_or(game.items());
            let report = check_constraint(&game, set, &weights(&game, args.weights, set))?;
            let verdict = if report.holds { Verdict::Positive } else { Verdict::Negative };
            let mut json = to_json(&report);
            json["failing"] = to_json(&report.failing_items());
            Output::new(verdict, json, render::constraint(&report))
        }
        Command::Prices(args) => {
            let game = load(&args.game, cap)?;
            let set = args.set.as_deref().map(|s| parse_set(s, game.n())).transpose()?.unwrap_or(game.items());
            match equal_utility_prices(&game, set, &weights(&game, args.weights, set)) {
                Ok(prices) => {
                    let text = format!("{prices}\n");
                    Output::ok(json!({ "set": set, "prices": prices }), text)
                }
                Err(e @ (EquilibriumError::ConstraintViolated { .. } | EquilibriumError::NotAboveBudget { .. })) => {
                    let text = format!("no equal-utility prices: {e}\n");
                    Output::new(Verdict::Negative, json!({ "set": set, "error": e.to_string() }), text)
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::BaseSet(arg) => {
            let game = load(arg, cap)?;
            let base = base_set(&game)?;
            let prices = equal_utility_prices(&game, base.items, &game.valuation().singleton_values())?;
            let mut json = to_json(&base);
            json["prices"] = to_json(&prices);
            Output::ok(json, render::base_set(&base, &prices))
        }
        Command::BnlPrices(arg) => {
            let game = load(arg, cap)?;
            let prices = bnl_prices(&game);
            let total: Rational = prices.as_slice().iter().sum();
            let within = total <= game.budget();
            let mut text = format!("{prices}\n");
            if !within {
                let _ = writeln!(text, "note: these sum to {total}, above the budget {}", game.budget());
            }
            Output::ok(json!({ "prices": prices, "total": total, "within_budget": within }), text)
        }
        Command::Verify(args) => {
            let game = load(&args.game, cap)?;
            let prices = parse_prices(&args.prices, &game)?;
            let report = verify_pne(&game, &prices);
            let verdict = if report.is_pne { Verdict::Positive } else { Verdict::Negative };
            let mut json = to_json(&report);
            json["market_clearing"] = json!(is_market_clearing(&game, &prices));
            Output::new(verdict, json, render::verify(&report))
        }
        Command::Enumerate(args) => {
            let game = load(&args.game, cap)?;
            let mut grid = GridSpec::default_for(game.n());
            if let Some(step) = args.grid_step {
                grid.step = step;
            }
            grid.epsilon = args.epsilon;
            grid.max_evals = args.max_evals;
            let survivors = grid_enumerate(&game, &grid)?;
            let json = json!({ "grid": grid, "survivors": survivors });
            Output::ok(json, render::survivors(&grid, &survivors))
        }
        Command::Welfare(args) => {
            let game = load(&args.game, cap)?;
            let prices = parse_prices(&args.prices, &game)?;
            let report = social_welfare(&game, &prices);
            Output::ok(to_json(&report), render::welfare(&report))
        }
        Command::Ratio(args) => {
            let game = load(&args.game, cap)?;
            let text = std::fs::read_to_string(&args.candidates)
                .with_context(|| format!("reading {}", args.candidates.display()))?;
            let candidates: Vec<PriceVector> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", args.candidates.display()))?;
            for (k, c) in candidates.iter().enumerate() {
                game.check_prices(c).with_context(|| format!("candidate {k}"))?;
            }
            let report = equilibrium_ratio(&game, &candidates)?;
            Output::ok(to_json(&report), render::ratio(&report))
        }
        Command::Family(args) => {
            let family = poa_family_scaled(args.n, args.scale)?;
            let file = family.game.to_file();
            if let Some(path) = &args.output {
                write_file(path, &family.game.to_json())?;
            }
            let json = json!({ "game": file, "worst": family.worst, "best": family.best });
            let text = format!(
                "{}\nworst {}\nbest  {}\n",
                family.game.to_json(),
                family.worst,
                family.best
            );
            Output::ok(json, text)
        }
        Command::Generate(args) => {
            let class = match args.class {
                ClassArg::Additive => GeneratorClass::Additive,
                ClassArg::BudgetAdditive => GeneratorClass::BudgetAdditive,
                ClassArg::SubmodularCoverage => GeneratorClass::SubmodularCoverage,
                ClassArg::Xos => GeneratorClass::Xos,
            };
            let rule = match args.budget_rule {
                RuleArg::BelowTotal => BudgetRule::BelowTotal,
                RuleArg::ConstraintHolds => BudgetRule::ConstraintHolds,
                RuleArg::ConstraintFails => BudgetRule::ConstraintFails,
            };
            let mut spec = GeneratorSpec::new(args.n, class, rule, args.seed).values(
                args.min_value,
                args.max_value,
                args.value_denominator,
            );
            spec.budget_cap = args.budget_cap;
            let game = generate(&spec)?;
            let text = game.to_json();
            match &args.output {
                Some(path) => {
                    write_file(path, &text)?;
                    Output::ok(json!({ "written": path, "game": game.to_file() }), format!("wrote {}\n", path.display()))
                }
                None => Output::ok(to_json(&game.to_file()), format!("{text}\n")),
            }
        }
        Command::Repro(args) => {
            let results = repro::run_bundled(args.case.as_deref())?;
            let failed = results.iter().any(|c| c.status == Status::Failed);
            let verdict = if failed { Verdict::Negative } else { Verdict::Positive };
            Output::new(verdict, to_json(&results), render::repro(&results))
        }
    })
}
