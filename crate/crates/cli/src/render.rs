//! Plain-text reports.

use std::fmt::Write;

use pricegame::equilibrium::{BaseSet, ConstraintReport};
use pricegame::oracle::{GridSpec, GridSurvivor};
use pricegame::repro::{CaseResult, Status};
use pricegame::valuation::ValidationReport;
use pricegame::verifier::VerifyReport;
use pricegame::welfare::{RatioReport, WelfareReport};
use pricegame::{DemandOutcome, Game, PriceVector};

pub fn validation(game: &Game, report: &ValidationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} valuation over {} items, budget {}", game.valuation().kind_name(), game.n(), game.budget());
    let yes = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(s, "normalized   {}", yes(report.normalized));
    let _ = writeln!(s, "nonnegative  {}", yes(report.nonnegative));
    let _ = writeln!(s, "monotone     {}", yes(report.monotone));
    if let Some(sub) = report.submodular {
        let _ = writeln!(s, "submodular   {}", yes(sub));
    }
    for (set, item) in report.monotonicity_violations.iter().take(5) {
        let _ = writeln!(s, "  adding {item} to {set} lowers the value");
    }
    for v in report.submodularity_violations.iter().take(5) {
        let _ = writeln!(
            s,
            "  item {} adds {} to {} but {} to {}",
            v.item, v.smaller_gain, v.smaller, v.larger_gain, v.larger
        );
    }
    let _ = writeln!(s, "{}", if report.passes() { "valid" } else { "invalid" });
    s
}

pub fn demand(outcome: &DemandOutcome, prices: &PriceVector) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "chosen {} at cost {}, buyer utility {}", outcome.chosen, outcome.cost, outcome.buyer_utility);
    let _ = writeln!(s, "paid items {}", outcome.positively_priced);
    if outcome.num_optima > 1 {
        let _ = writeln!(
            s,
            "{} optimal sets, {} of maximum size{}",
            outcome.num_optima,
            outcome.num_max_size_optima,
            if outcome.tie_broken_lexicographically() { "; lowest bitmask taken" } else { "" }
        );
    }
    let _ = writeln!(s, "prices {prices}");
    s
}

pub fn constraint(report: &ConstraintReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "item  weight  threshold  holds");
    for e in &report.entries {
        let _ = writeln!(s, "{:<5} {:<7} {:<10} {}", e.item, e.weight, e.threshold, if e.holds { "yes" } else { "no" });
    }
    if report.holds {
        let _ = writeln!(s, "constraint holds on {}", report.set);
    } else {
        let _ = writeln!(s, "constraint fails on {} at {}", report.set, report.failing_items());
    }
    s
}

pub fn base_set(base: &BaseSet, prices: &PriceVector) -> String {
    let mut s = String::new();
    let order: Vec<String> = base.order.iter().map(ToString::to_string).collect();
    let _ = writeln!(s, "order {}", order.join(" "));
    let _ = writeln!(s, "base set {}", base.items);
    if let Some(stop) = &base.stop {
        let _ = writeln!(s, "stopped at item {}: value {} <= {}", stop.item, stop.value, stop.threshold);
    }
    let _ = writeln!(s, "prices {prices}");
    s
}

pub fn verify(report: &VerifyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}; chosen {}", if report.is_pne { "PNE" } else { "not a PNE" }, report.outcome.chosen);
    for b in &report.per_vendor {
        let _ = write!(
            s,
            "vendor {}: earns {}, best deviation {}{}",
            b.vendor,
            b.current_utility,
            b.sup_deviation_utility,
            if b.sup_attained { "" } else { " (not attained)" }
        );
        match &b.witness {
            Some(w) => {
                let _ = writeln!(s, "; price {} sells {} for a gain of {}", w.price, w.outcome.chosen, w.gain);
            }
            None => s.push('\n'),
        }
    }
    s
}

pub fn survivors(grid: &GridSpec, survivors: &[GridSurvivor]) -> String {
    let mut s = String::new();
    let exact = survivors.iter().filter(|x| x.exact_pne).count();
    let _ = writeln!(
        s,
        "grid step {}, epsilon {}: {} survivors, {exact} exact",
        grid.step,
        grid.epsilon,
        survivors.len()
    );
    for x in survivors {
        let _ = writeln!(
            s,
            "{}  chosen {}  {}",
            x.prices,
            x.outcome.chosen,
            if x.exact_pne { "PNE" } else { "approximate" }
        );
    }
    s
}

pub fn welfare(report: &WelfareReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "welfare {}", report.welfare);
    let _ = writeln!(s, "chosen {}, free items excluded {}", report.chosen, report.excluded_free_items);
    if report.market_clearing {
        let _ = writeln!(s, "market clearing");
    }
    s
}

pub fn ratio(report: &RatioReport) -> String {
    let mut s = String::new();
    for e in &report.equilibria {
        let _ = writeln!(s, "{}  welfare {}", e.prices, e.welfare);
    }
    for p in &report.rejected {
        let _ = writeln!(s, "{}  not an equilibrium", p);
    }
    let _ = writeln!(s, "best {}, worst {}, ratio {}", report.best, report.worst, report.ratio);
    s
}

pub fn repro(results: &[CaseResult]) -> String {
    let mut s = String::new();
    let width = results.iter().map(|c| c.id.len()).max().unwrap_or(0);
    for case in results {
        let _ = writeln!(s, "{:<width$}  {:<32}  {}", case.id, case.status.to_string(), case.title);
        if let Some(e) = &case.error {
            let _ = writeln!(s, "{:width$}  error: {e}", "");
        }
        for check in &case.checks {
            for m in &check.mismatches {
                let _ = writeln!(s, "{:width$}  {:?} {m}", "", check.action);
            }
            for d in &check.discrepancies {
                let _ = writeln!(s, "{:width$}  {:?} differs from the example: {d}", "", check.action);
            }
        }
    }
    let failed = results.iter().filter(|c| c.status == Status::Failed).count();
    let _ = writeln!(s, "{} cases, {failed} failed", results.len());
    s
}
