use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::GaConfig;

/// Problem domain of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Csp,
    Knapsack,
    Partition,
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csp" => Ok(DomainKind::Csp),
            "knapsack" => Ok(DomainKind::Knapsack),
            "partition" => Ok(DomainKind::Partition),
            other => Err(Error::Config(format!("unknown domain `{other}`"))),
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Csp => "csp",
            DomainKind::Knapsack => "knapsack",
            DomainKind::Partition => "partition",
        })
    }
}

/// Feature-space treatment of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scenario {
    /// Raw features, Euclidean distance.
    O,
    L,
    E,
    S,
    /// Raw features, RBF kernel distance.
    K,
    KL,
    KS,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::O,
        Scenario::L,
        Scenario::E,
        Scenario::S,
        Scenario::K,
        Scenario::KL,
        Scenario::KS,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scenario::O => "O",
            Scenario::L => "L",
            Scenario::E => "E",
            Scenario::S => "S",
            Scenario::K => "K",
            Scenario::KL => "K+L",
            Scenario::KS => "K+S",
        }
    }

    /// File-name friendly label.
    pub fn slug(self) -> &'static str {
        match self {
            Scenario::KL => "K_L",
            Scenario::KS => "K_S",
            other => other.label(),
        }
    }

    /// Stable numeric code used in seed derivation.
    pub fn code(self) -> u64 {
        self as u64
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace(['_', ' '], "+");
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.label() == key)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl TryFrom<String> for Scenario {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Scenario> for String {
    fn from(s: Scenario) -> Self {
        s.label().to_string()
    }
}

/// How per-run seeds relate across scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    /// Each scenario has its own seed stream.
    #[default]
    Independent,
    /// Repetition `r` uses the same seed in every scenario.
    Paired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    /// Instance files or directories; relative paths resolve against the config file.
    #[serde(default)]
    pub instances: Vec<PathBuf>,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    /// Absolute training-set size; overrides `train_fraction`.
    #[serde(default)]
    pub train_count: Option<usize>,
    /// Evaluate on the training instances instead of a held-out split.
    #[serde(default)]
    pub evaluate_on_training: bool,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub seeding: Seeding,
    /// Cost limit per solve; defaults to `ga.budget`.
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub vat: bool,
    /// Test paired runs with the signed-rank test instead of the rank-sum test.
    #[serde(default)]
    pub paired_test: bool,
    #[serde(default)]
    pub ga: GaConfig,
}

fn default_fraction() -> f64 {
    0.05
}

fn default_scenarios() -> Vec<Scenario> {
    Scenario::ALL.to_vec()
}

fn default_repetitions() -> usize {
    15
}

impl ExperimentConfig {
    pub fn new(domain: DomainKind) -> Self {
        ExperimentConfig {
            domain,
            instances: Vec::new(),
            train_fraction: default_fraction(),
            train_count: None,
            evaluate_on_training: false,
            scenarios: default_scenarios(),
            repetitions: default_repetitions(),
            seed: 0,
            seeding: Seeding::Independent,
            budget: None,
            vat: false,
            paired_test: false,
            ga: GaConfig::default(),
        }
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or(self.ga.budget)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.train_count == Some(0) {
            return Err(Error::Config("train_count must be positive".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("at least one scenario is required".into()));
        }
        if self.budget() == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        self.ga.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a TOML file, resolving relative instance paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut config.instances {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_labels_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.label().parse::<Scenario>().unwrap(), s);
            assert_eq!(s.slug().parse::<Scenario>().unwrap(), s);
        }
        assert_eq!("k+s".parse::<Scenario>().unwrap(), Scenario::KS);
        assert!("X".parse::<Scenario>().is_err());
    }

    #[test]
    fn toml_defaults() {
        let c = ExperimentConfig::from_toml(
            r#"
domain = "knapsack"
scenarios = ["O", "K", "K+S"]
seed = 4

[ga]
cycles = 10
"#,
        )
        .unwrap();
        assert_eq!(c.train_fraction, 0.05);
        assert_eq!(c.repetitions, 15);
        assert_eq!(c.scenarios, vec![Scenario::O, Scenario::K, Scenario::KS]);
        assert_eq!(c.ga.cycles, 10);
        assert_eq!(c.ga.population_size, 20);
        assert_eq!(c.seeding, Seeding::Independent);
        assert!(ExperimentConfig::from_toml("domain = \"knapsack\"\nrepetitions = 0").is_err());
        assert!(ExperimentConfig::from_toml("domain = \"chess\"").is_err());
        assert!(ExperimentConfig::from_toml("domain = \"csp\"\nscenarios = []").is_err());
    }
}
