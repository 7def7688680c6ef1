use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{ExperimentResult, ScenarioSetup};
use crate::error::{Error, Result};
use crate::kernel::write_vat;
use crate::model::{FeatureVector, Metrics};
use crate::stats::Direction;

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct RunRow<'a> {
    scenario: &'a str,
    repetition: usize,
    seed: u64,
    train_fitness: f64,
    rules: usize,
    instances: usize,
    failures: usize,
    sr: f64,
    acc: u64,
    cc: u64,
    objective: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    scenario: &'a str,
    metric: &'a str,
    n: usize,
    mean: f64,
    sd: f64,
    median: f64,
    lower_quartile: f64,
    upper_quartile: f64,
    min: f64,
    max: f64,
    mild_outliers: usize,
    extreme_outliers: usize,
}

#[derive(Serialize)]
struct PValueRow<'a> {
    scenario: &'a str,
    baseline: &'a str,
    metric: &'a str,
    tail: &'a str,
    statistic: f64,
    z: f64,
    p_value: f64,
    degenerate: bool,
}

#[derive(Serialize)]
struct BaselineCsvRow<'a> {
    name: &'a str,
    instances: usize,
    sr: f64,
    acc: u64,
    cc: u64,
    objective: f64,
}

fn baseline_row<'a>(name: &'a str, m: &Metrics) -> BaselineCsvRow<'a> {
    BaselineCsvRow {
        name,
        instances: m.instances,
        sr: m.success_rate,
        acc: m.adjusted_cost,
        cc: m.total_cost,
        objective: m.objective_total,
    }
}

fn tail(d: Direction) -> &'static str {
    match d {
        Direction::Greater => "greater",
        Direction::Less => "less",
    }
}

fn markdown(result: &ExperimentResult) -> String {
    let c = &result.config;
    let mut md = String::new();
    let _ = writeln!(md, "# Experiment report\n");
    let _ = writeln!(md, "- domain: {}", result.domain);
    let _ = writeln!(
        md,
        "- instances: {} training, {} test",
        result.split.train.len(),
        result.split.test.len()
    );
    let _ = writeln!(md, "- repetitions per scenario: {}", c.repetitions);
    let _ = writeln!(md, "- master seed: {} ({:?} seeding)", c.seed, c.seeding);
    let _ = writeln!(md, "- budget per solve: {}", c.budget());
    let _ = writeln!(
        md,
        "- GA: population {}, crossover {}, mutation {}, {} cycles, {}..{} rules\n",
        c.ga.population_size,
        c.ga.crossover_rate,
        c.ga.mutation_rate,
        c.ga.cycles,
        c.ga.min_rules,
        c.ga.max_rules
    );

    let _ = writeln!(md, "## Baselines on the test set\n");
    let _ = writeln!(md, "| heuristic | SR | ACC | CC | objective |");
    let _ = writeln!(md, "|---|---|---|---|---|");
    let rows = result
        .baselines
        .heuristics
        .iter()
        .chain(std::iter::once(&result.baselines.oracle));
    for row in rows {
        let m = &row.metrics;
        let _ = writeln!(
            md,
            "| {} | {:.4} | {} | {} | {} |",
            row.name, m.success_rate, m.adjusted_cost, m.total_cost, m.objective_total
        );
    }

    let _ = writeln!(md, "\n## Scenario summaries\n");
    let _ = writeln!(md, "| scenario | metric | mean | sd | median | LQ | UQ |");
    let _ = writeln!(md, "|---|---|---|---|---|---|---|");
    for s in &result.summaries {
        let q = &s.summary;
        let _ = writeln!(
            md,
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
            s.scenario,
            s.metric.label(),
            q.mean,
            q.sd,
            q.median,
            q.lower_quartile,
            q.upper_quartile
        );
    }

    if !result.comparisons.is_empty() {
        let test = if c.paired_test { "signed-rank" } else { "rank-sum" };
        let _ = writeln!(md, "\n## One-tailed Wilcoxon {test} tests against O\n");
        let _ = writeln!(md, "| scenario | metric | tail | p-value |");
        let _ = writeln!(md, "|---|---|---|---|");
        for cmp in &result.comparisons {
            let flag = if cmp.test.degenerate { " (degenerate)" } else { "" };
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.4}{flag} |",
                cmp.scenario,
                cmp.metric.label(),
                tail(cmp.direction),
                cmp.test.p_value
            );
        }
    }
    md
}

/// Writes one VAT image and matrix per scenario, applying each scenario's
/// transform and metric to `points`.
pub fn write_vat_set(
    points: &[FeatureVector],
    groups: &[usize],
    setups: &[ScenarioSetup],
    dir: &Path,
) -> Result<()> {
    for setup in setups {
        let mapped: Vec<FeatureVector> = match setup.transform() {
            Some(t) => points.iter().map(|p| t.apply(p)).collect::<Result<_>>()?,
            None => points.to_vec(),
        };
        write_vat(&mapped, groups, &setup.metric, dir, setup.scenario.slug())?;
    }
    Ok(())
}

/// Writes CSV tables, selectors, training logs, scenario setups, the
/// Markdown report and (when enabled) VAT images under `dir`.
pub fn write_experiment(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let runs = result.runs.iter().map(|r| RunRow {
        scenario: r.scenario.label(),
        repetition: r.repetition,
        seed: r.seed,
        train_fitness: r.train_fitness,
        rules: r.selector.len(),
        instances: r.metrics.instances,
        failures: r.failures,
        sr: r.metrics.success_rate,
        acc: r.metrics.adjusted_cost,
        cc: r.metrics.total_cost,
        objective: r.metrics.objective_total,
    });
    write(&dir.join("runs.csv"), csv_string(runs)?)?;

    let summaries = result.summaries.iter().map(|s| SummaryRow {
        scenario: s.scenario.label(),
        metric: s.metric.label(),
        n: s.summary.n,
        mean: s.summary.mean,
        sd: s.summary.sd,
        median: s.summary.median,
        lower_quartile: s.summary.lower_quartile,
        upper_quartile: s.summary.upper_quartile,
        min: s.summary.min,
        max: s.summary.max,
        mild_outliers: s.summary.mild_outliers.len(),
        extreme_outliers: s.summary.extreme_outliers.len(),
    });
    write(&dir.join("summary.csv"), csv_string(summaries)?)?;

    let pvalues = result.comparisons.iter().map(|c| PValueRow {
        scenario: c.scenario.label(),
        baseline: "O",
        metric: c.metric.label(),
        tail: tail(c.direction),
        statistic: c.test.statistic,
        z: c.test.z,
        p_value: c.test.p_value,
        degenerate: c.test.degenerate,
    });
    write(&dir.join("pvalues.csv"), csv_string(pvalues)?)?;

    let baselines = result
        .baselines
        .heuristics
        .iter()
        .chain(std::iter::once(&result.baselines.oracle))
        .map(|b| baseline_row(&b.name, &b.metrics));
    write(&dir.join("baselines.csv"), csv_string(baselines)?)?;

    for r in &result.runs {
        let stem = format!("{}_{:02}", r.scenario.slug(), r.repetition);
        write(
            &dir.join("selectors").join(format!("{stem}.json")),
            r.selector.to_json()?,
        )?;
        write(
            &dir.join("logs").join(format!("{stem}.csv")),
            csv_string(&r.history)?,
        )?;
    }
    for setup in &result.setups {
        write(
            &dir.join("scenarios").join(format!("{}.json", setup.scenario.slug())),
            serde_json::to_string_pretty(setup)?,
        )?;
    }
    write(&dir.join("report.md"), markdown(result))?;

    if result.vat_points.len() >= 2 {
        write_vat_set(
            &result.vat_points,
            &result.vat_groups,
            &result.setups,
            &dir.join("vat"),
        )?;
    }
    Ok(())
}
