//! TOML configuration: one file with `[problem]`, `[solve]`, `[table]`, and
//! `[compare]` sections, all optional, plus `--set section.key=value`
//! overrides applied on top before validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use chaos_fem::TestCase;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub problem: ProblemSection,
    pub solve: SolveSection,
    pub table: TableSection,
    pub compare: CompareSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    /// "case1" (one variable) or "case2" (two variables).
    pub case: String,
    pub n_elements: usize,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            case: "case1".into(),
            n_elements: 100,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub degree: usize,
    pub samples: usize,
    pub seed: u64,
    pub orthonormal: bool,
    pub tol: f64,
    /// 0 means the solver's own default cap.
    pub max_iter: usize,
    pub low_memory: bool,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            degree: 2,
            samples: 1000,
            seed: 1,
            orthonormal: false,
            tol: 1e-10,
            max_iter: 0,
            low_memory: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableSection {
    /// None keeps the library's study grid for the missing list.
    pub degrees: Option<Vec<usize>>,
    pub sample_counts: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub orthonormal: bool,
    pub with_mc_baseline: bool,
    /// "both", "h1", or "l2".
    pub norms: String,
    pub svg: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub low_memory: bool,
}

impl Default for TableSection {
    fn default() -> Self {
        Self {
            degrees: None,
            sample_counts: None,
            seeds: None,
            orthonormal: false,
            with_mc_baseline: true,
            norms: "both".into(),
            svg: false,
            tol: 1e-10,
            max_iter: 0,
            low_memory: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub collocation_nodes: usize,
    pub mc_samples: usize,
    pub degree: usize,
    pub samples: usize,
    pub seed: u64,
    pub orthonormal: bool,
    /// "hermite" for the polynomial expansion, "lagrange" for the cardinal
    /// basis at the drawn sample points (identity coupling).
    pub chaos_basis: String,
    pub tol: f64,
    pub max_iter: usize,
    pub low_memory: bool,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            collocation_nodes: 5,
            mc_samples: 100,
            degree: 2,
            samples: 1000,
            seed: 1,
            orthonormal: false,
            chaos_basis: "hermite".into(),
            tol: 1e-10,
            max_iter: 0,
            low_memory: false,
        }
    }
}

impl FileConfig {
    pub fn case(&self) -> Result<TestCase, CliError> {
        match self.problem.case.as_str() {
            "case1" => Ok(TestCase::Case1),
            "case2" => Ok(TestCase::Case2),
            other => Err(CliError::Config(format!(
                "problem.case must be \"case1\" or \"case2\", got {other:?}"
            ))),
        }
    }
}

/// Read the optional config file, apply `--set` overrides, then deserialize.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<FileConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(one_line(&e.to_string())))?
        }
        None => toml::Table::new(),
    };
    for spec in overrides {
        apply_override(&mut table, spec).map_err(CliError::Config)?;
    }
    toml::Value::Table(table)
        .try_into::<FileConfig>()
        .map_err(|e| CliError::Config(one_line(&e.to_string())))
}

/// Set `section.key = value` in the raw table. The value reuses the TOML
/// scalar/array grammar and falls back to a plain string, so
/// `--set problem.case=case2` and `--set table.degrees=[0,1,2]` both work.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), String> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override {spec:?} must look like section.key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(|part| part.is_empty()) {
        return Err(format!("override {spec:?} has an empty key segment"));
    }
    let parts: Vec<&str> = key.split('.').collect();
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| format!("override key {key:?} descends into a non-table value"))?;
    }
    current.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Collapse a multi-line parser diagnostic to one machine-parsable line.
pub fn one_line(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ")
}
