use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperselect::domains::csp::{generate_csp_set, CspDomain};
use hyperselect::domains::knapsack::{generate_knapsack, KnapsackClass, KnapsackDomain};
use hyperselect::domains::partition::PartitionDomain;
use hyperselect::ga::{solve_all, train, GaConfig};
use hyperselect::harness::{
    build_scenario, compute_baselines, load_instances, run_loaded, training_rows,
    write_experiment, write_vat_set, DomainKind, ExperimentConfig, InstanceSet, Scenario,
    ScenarioSetup,
};
use hyperselect::{Domain, Metrics, Selector, SolveOutcome};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] hyperselect::Error),
    #[error("{0}")]
    Usage(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "hsel", version, about = "Train and benchmark rule-based heuristic selectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one selector and write it with its scenario setup and GA log
    Train(TrainArgs),
    /// Run a trained selector over instances and report metrics
    Evaluate(EvaluateArgs),
    /// Run a full scenario x repetition experiment from a TOML config
    Experiment(ExperimentArgs),
    /// Standalone heuristic baselines and the synthetic oracle
    Oracle(OracleArgs),
    /// VAT images of initial-state features per scenario
    Vat(VatArgs),
    /// Generate seeded knapsack instances
    GenKnapsack(GenKnapsackArgs),
    /// Generate seeded random binary CSP instances
    GenCsp(GenCspArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Problem domain: csp, knapsack or partition
    #[arg(long)]
    domain: DomainKind,
    /// Instance files or directories
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    /// Cost limit per solve
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    set: InstanceArgs,
    /// Scenario: O, L, E, S, K, K+L or K+S
    #[arg(long, default_value = "O")]
    scenario: Scenario,
    /// Experiment config whose [ga] section and budget are used as defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    set: InstanceArgs,
    /// Selector JSON written by `train` or `experiment`
    #[arg(long)]
    selector: PathBuf,
    /// Scenario setup JSON; defaults to raw features with Euclidean distance
    #[arg(long)]
    setup: Option<PathBuf>,
    /// Per-instance results CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated scenario list overriding the config
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<Scenario>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    set: InstanceArgs,
    /// Baseline CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VatArgs {
    #[command(flatten)]
    set: InstanceArgs,
    #[arg(long, value_delimiter = ',', default_value = "O,K")]
    scenarios: Vec<Scenario>,
    #[arg(long, default_value = "out/vat")]
    out: PathBuf,
}

#[derive(Args)]
struct GenKnapsackArgs {
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 50)]
    items: usize,
    /// uncorrelated, weakly_correlated or strongly_correlated
    #[arg(long, default_value = "uncorrelated")]
    class: KnapsackClass,
    /// Largest profit and weight coefficient
    #[arg(long, default_value_t = 1000)]
    range: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenCspArgs {
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 20)]
    variables: usize,
    #[arg(long, default_value_t = 10)]
    domain_size: usize,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 0.3)]
    tightness: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

macro_rules! dispatch {
    ($set:expr, |$domain:ident, $insts:ident| $body:expr) => {
        match $set {
            InstanceSet::Csp($insts) => {
                let $domain = &CspDomain;
                $body
            }
            InstanceSet::Knapsack($insts) => {
                let $domain = &KnapsackDomain;
                $body
            }
            InstanceSet::Partition($insts) => {
                let $domain = &PartitionDomain;
                $body
            }
        }
    };
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn describe(m: &Metrics) -> String {
    format!(
        "instances={} sr={:.4} acc={} cc={} objective={}",
        m.instances, m.success_rate, m.adjusted_cost, m.total_cost, m.objective_total
    )
}

fn train_one<D: Domain>(
    domain: &D,
    instances: &[D::Instance],
    scenario: Scenario,
    ga: &GaConfig,
    out: &Path,
) -> Result<()> {
    let rows = training_rows(domain, instances, ga.budget)?;
    let setup = build_scenario(scenario, &rows, domain.feature_count())?;
    let trained = train(ga, domain, instances, setup.transform(), &setup.metric)?;
    write_file(&out.join("selector.json"), trained.best.to_json()?)?;
    write_file(&out.join("setup.json"), setup.to_json()?)?;
    write_file(&out.join("history.csv"), trained.history_csv()?)?;
    println!(
        "trained {} selector on {} instances: {} rules, fitness {} ({} solved)",
        scenario,
        instances.len(),
        trained.best.len(),
        trained.best_fitness.total,
        trained.best_fitness.solved
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut ga = match &a.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            GaConfig {
                budget: c.budget(),
                ..c.ga
            }
        }
        None => GaConfig::default(),
    };
    if let Some(v) = a.seed {
        ga.seed = v;
    }
    if let Some(v) = a.cycles {
        ga.cycles = v;
    }
    if let Some(v) = a.population {
        ga.population_size = v;
    }
    if let Some(v) = a.set.budget {
        ga.budget = v;
    }
    ga.validate()?;
    let set = load_instances(a.set.domain, &a.set.instances)?;
    dispatch!(&set, |d, insts| train_one(d, insts, a.scenario, &ga, &a.out))
}

fn evaluate_one<D: Domain>(
    domain: &D,
    instances: &[D::Instance],
    selector: &Selector,
    setup: &ScenarioSetup,
    budget: u64,
    out: Option<&Path>,
) -> Result<()> {
    selector.validate(domain.feature_count(), domain.heuristic_count())?;
    let results = solve_all(selector, instances, domain, setup.transform(), &setup.metric, budget);
    let mut csv = String::from("instance,solved,timed_out,cost,objective,error\n");
    let mut outcomes: Vec<SolveOutcome> = Vec::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(o) => {
                csv.push_str(&format!(
                    "{i},{},{},{},{},\n",
                    o.solved, o.timed_out, o.cost, o.objective
                ));
                outcomes.push(*o);
            }
            Err(e) => csv.push_str(&format!("{i},false,false,,,\"{}\"\n", e.to_string().replace('"', "'"))),
        }
    }
    let failures = results.len() - outcomes.len();
    println!("{}", describe(&Metrics::from_outcomes(&outcomes)));
    if failures > 0 {
        println!("{failures} instance(s) failed and are excluded from the metrics");
    }
    if let Some(path) = out {
        write_file(path, csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let selector = Selector::from_json(&read_file(&a.selector)?)?;
    let setup = match &a.setup {
        Some(p) => ScenarioSetup::from_json(&read_file(p)?)?,
        None => build_scenario(Scenario::O, &[], 1)?,
    };
    let budget = a.set.budget.unwrap_or(GaConfig::default().budget);
    let set = load_instances(a.set.domain, &a.set.instances)?;
    dispatch!(&set, |d, insts| evaluate_one(
        d,
        insts,
        &selector,
        &setup,
        budget,
        a.out.as_deref()
    ))
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.scenarios {
        config.scenarios = s;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.budget {
        config.budget = Some(v);
    }
    if let Some(v) = a.repetitions {
        config.repetitions = v;
    }
    config.validate()?;
    if config.instances.is_empty() {
        return Err(CliError::Usage("the config lists no instance paths".into()));
    }
    let set = load_instances(config.domain, &config.instances)?;
    let result = run_loaded(&config, &set)?;
    write_experiment(&result, &a.out)?;
    for s in &result.summaries {
        println!(
            "{:<4} {:<10} mean {:>14.4} sd {:>12.4} median {:>14.4}",
            s.scenario.label(),
            s.metric.label(),
            s.summary.mean,
            s.summary.sd,
            s.summary.median
        );
    }
    for c in &result.comparisons {
        println!(
            "{} vs O on {}: p = {:.4}{}",
            c.scenario,
            c.metric.label(),
            c.test.p_value,
            if c.test.degenerate { " (degenerate)" } else { "" }
        );
    }
    let failures: usize = result.runs.iter().map(|r| r.failures).sum();
    if failures > 0 {
        println!("{failures} per-instance solve failure(s) recorded in runs.csv");
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn oracle_one<D: Domain>(
    domain: &D,
    instances: &[D::Instance],
    budget: u64,
    out: Option<&Path>,
) -> Result<()> {
    let b = compute_baselines(domain, instances, budget)?;
    let mut csv = String::from("name,instances,sr,acc,cc,objective\n");
    for row in b.heuristics.iter().chain(std::iter::once(&b.oracle)) {
        println!("{:<14} {}", row.name, describe(&row.metrics));
        let m = &row.metrics;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.name, m.instances, m.success_rate, m.adjusted_cost, m.total_cost, m.objective_total
        ));
    }
    let mut counts = vec![0usize; domain.heuristic_count()];
    for &c in &b.oracle_choices {
        counts[c] += 1;
    }
    let picks: Vec<String> = domain
        .heuristic_names()
        .iter()
        .zip(&counts)
        .map(|(n, c)| format!("{n}={c}"))
        .collect();
    println!("oracle picks: {}", picks.join(" "));
    if let Some(path) = out {
        write_file(path, csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let budget = a.set.budget.unwrap_or(GaConfig::default().budget);
    let set = load_instances(a.set.domain, &a.set.instances)?;
    dispatch!(&set, |d, insts| oracle_one(d, insts, budget, a.out.as_deref()))
}

fn vat_one<D: Domain>(
    domain: &D,
    instances: &[D::Instance],
    scenarios: &[Scenario],
    budget: u64,
    out: &Path,
) -> Result<()> {
    if instances.len() < 2 {
        return Err(CliError::Usage("VAT needs at least two instances".into()));
    }
    let rows = training_rows(domain, instances, budget)?;
    let setups: Vec<ScenarioSetup> = scenarios
        .iter()
        .map(|&s| build_scenario(s, &rows, domain.feature_count()))
        .collect::<hyperselect::Result<_>>()?;
    let points: Vec<_> = instances
        .iter()
        .map(|inst| domain.features(inst, &domain.initial_state(inst)))
        .collect();
    let groups = compute_baselines(domain, instances, budget)?.oracle_choices;
    write_vat_set(&points, &groups, &setups, out)?;
    println!("wrote {} VAT image(s) to {}", setups.len(), out.display());
    Ok(())
}

fn cmd_vat(a: VatArgs) -> Result<()> {
    let budget = a.set.budget.unwrap_or(GaConfig::default().budget);
    let set = load_instances(a.set.domain, &a.set.instances)?;
    dispatch!(&set, |d, insts| vat_one(d, insts, &a.scenarios, budget, &a.out))
}

fn cmd_gen_knapsack(a: GenKnapsackArgs) -> Result<()> {
    if a.count == 0 || a.items == 0 || a.range == 0 {
        return Err(CliError::Usage("count, items and range must be positive".into()));
    }
    let set = generate_knapsack(a.count, a.items, a.class, a.range, a.seed);
    for (i, inst) in set.iter().enumerate() {
        write_file(&a.out.join(format!("kp_{i:04}.txt")), inst.to_text())?;
    }
    println!("wrote {} instances to {}", set.len(), a.out.display());
    Ok(())
}

fn cmd_gen_csp(a: GenCspArgs) -> Result<()> {
    if a.count == 0 || a.variables == 0 || a.domain_size == 0 {
        return Err(CliError::Usage("count, variables and domain size must be positive".into()));
    }
    let probability = 0.0..=1.0;
    if !probability.contains(&a.density) || !probability.contains(&a.tightness) {
        return Err(CliError::Usage("density and tightness must lie in [0, 1]".into()));
    }
    let set = generate_csp_set(a.count, a.variables, a.domain_size, a.density, a.tightness, a.seed);
    for (i, inst) in set.iter().enumerate() {
        write_file(&a.out.join(format!("csp_{i:04}.json")), inst.to_json()?)?;
    }
    println!("wrote {} instances to {}", set.len(), a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Vat(a) => cmd_vat(a),
        Command::GenKnapsack(a) => cmd_gen_knapsack(a),
        Command::GenCsp(a) => cmd_gen_csp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
