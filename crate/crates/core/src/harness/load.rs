use std::fs;
use std::path::{Path, PathBuf};

use super::config::DomainKind;
use crate::domains::csp::{parse_csp, CspInstance};
use crate::domains::knapsack::{parse_knapsack_any, KnapsackInstance};
use crate::domains::partition::{parse_partition_json, PartitionInstance};
use crate::error::{Error, Result};

/// Instances of one domain, in load order.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSet {
    Csp(Vec<CspInstance>),
    Knapsack(Vec<KnapsackInstance>),
    Partition(Vec<PartitionInstance>),
}

impl InstanceSet {
    pub fn len(&self) -> usize {
        match self {
            InstanceSet::Csp(v) => v.len(),
            InstanceSet::Knapsack(v) => v.len(),
            InstanceSet::Partition(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> DomainKind {
        match self {
            InstanceSet::Csp(_) => DomainKind::Csp,
            InstanceSet::Knapsack(_) => DomainKind::Knapsack,
            InstanceSet::Partition(_) => DomainKind::Partition,
        }
    }
}

/// Files of a directory in name order, or the path itself.
fn expand(path: &Path) -> Result<Vec<PathBuf>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if !meta.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let p = entry.path();
        let hidden = p
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if p.is_file() && !hidden {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn with_path(path: &Path, err: Error) -> Error {
    match err {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
        Error::Json(e) => Error::Parse {
            location: format!("{}: line {}", path.display(), e.line()),
            message: e.to_string(),
        },
        other => other,
    }
}

pub fn load_instances(kind: DomainKind, paths: &[PathBuf]) -> Result<InstanceSet> {
    let mut files = Vec::new();
    for p in paths {
        files.extend(expand(p)?);
    }
    if files.is_empty() {
        return Err(Error::Config("no instance files given".into()));
    }
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let set = match kind {
        DomainKind::Csp => InstanceSet::Csp(
            files
                .iter()
                .map(|p| parse_csp(&read(p)?).map_err(|e| with_path(p, e)))
                .collect::<Result<_>>()?,
        ),
        DomainKind::Knapsack => {
            let mut all = Vec::new();
            for p in &files {
                all.extend(parse_knapsack_any(&read(p)?).map_err(|e| with_path(p, e))?);
            }
            InstanceSet::Knapsack(all)
        }
        DomainKind::Partition => {
            let mut all = Vec::new();
            for p in &files {
                all.extend(parse_partition_json(&read(p)?).map_err(|e| with_path(p, e))?);
            }
            InstanceSet::Partition(all)
        }
    };
    if set.is_empty() {
        return Err(Error::Config("instance files contain no instances".into()));
    }
    Ok(set)
}
