use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dqrom_core::{FomConfig, InnerProduct};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Snapshot set (with or without difference quotients) and POD space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Framework {
    #[serde(rename = "noDQ-L2")]
    NoDqL2,
    #[serde(rename = "noDQ-H01")]
    NoDqH01,
    #[serde(rename = "DQ-L2")]
    DqL2,
    #[serde(rename = "DQ-H01")]
    DqH01,
}

impl Framework {
    pub const ALL: [Framework; 4] = [Framework::NoDqL2, Framework::NoDqH01, Framework::DqL2, Framework::DqH01];

    pub fn name(self) -> &'static str {
        match self {
            Framework::NoDqL2 => "noDQ-L2",
            Framework::NoDqH01 => "noDQ-H01",
            Framework::DqL2 => "DQ-L2",
            Framework::DqH01 => "DQ-H01",
        }
    }

    pub fn use_dq(self) -> bool {
        matches!(self, Framework::DqL2 | Framework::DqH01)
    }

    pub fn inner_product(self) -> InnerProduct {
        match self {
            Framework::NoDqL2 | Framework::DqL2 => InnerProduct::L2,
            Framework::NoDqH01 | Framework::DqH01 => InnerProduct::H01,
        }
    }

    pub fn of(use_dq: bool, inner_product: InnerProduct) -> Self {
        match (use_dq, inner_product) {
            (false, InnerProduct::L2) => Framework::NoDqL2,
            (false, InnerProduct::H01) => Framework::NoDqH01,
            (true, InnerProduct::L2) => Framework::DqL2,
            (true, InnerProduct::H01) => Framework::DqH01,
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Framework {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Framework::ALL
            .into_iter()
            .find(|fw| fw.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown framework `{s}` (expected noDQ-L2, noDQ-H01, DQ-L2 or DQ-H01)"))
    }
}

/// Either an explicit list of ROM dimensions or an inclusive range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ranks {
    List(Vec<usize>),
    Range { min: usize, max: usize },
}

impl Ranks {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Ranks::List(v) => v.clone(),
            Ranks::Range { min, max } => (*min..=*max).collect(),
        }
    }

    /// Sorted, deduplicated values clamped to `1..=d`. The second element
    /// lists the requested values that were clamped.
    pub fn resolve(&self, d: usize) -> (Vec<usize>, Vec<usize>) {
        let mut clamped = Vec::new();
        let mut out: Vec<usize> = self
            .values()
            .into_iter()
            .map(|r| {
                if r > d {
                    clamped.push(r);
                    d
                } else {
                    r
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        (out, clamped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Abscissa {
    /// `Σ_{i>r} λ_i`
    Tail,
    /// The first bound term of the framework's family.
    Rhs,
}

impl FromStr for Abscissa {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tail" => Ok(Abscissa::Tail),
            "rhs" => Ok(Abscissa::Rhs),
            _ => Err(format!("unknown abscissa `{s}` (expected tail or rhs)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionOptions {
    pub abscissa: Abscissa,
    /// Overrides for the fitted `r` window; unset bounds fall back to the
    /// saturation-aware default.
    pub r_min: Option<usize>,
    pub r_max: Option<usize>,
}

impl Default for RegressionOptions {
    fn default() -> Self {
        Self {
            abscissa: Abscissa::Tail,
            r_min: None,
            r_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolutionOptions {
    pub ranks: Vec<usize>,
    /// Output times; each is rounded to the nearest time step.
    pub times: Vec<f64>,
}

impl Default for SolutionOptions {
    fn default() -> Self {
        Self {
            ranks: vec![5, 13, 28],
            times: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_cells: usize,
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub frameworks: Vec<Framework>,
    pub ranks: Ranks,
    pub i_u_constant: f64,
    /// Relative eigenvalue cutoff `λ_i > ε λ_1` defining the kept modes.
    pub pod_cutoff: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub regression: RegressionOptions,
    pub solutions: SolutionOptions,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let fom = FomConfig::burgers_step();
        Self {
            n_cells: 512,
            nu: fom.nu,
            dt: fom.dt,
            t_final: fom.t_final,
            frameworks: Framework::ALL.to_vec(),
            ranks: Ranks::Range { min: 2, max: 40 },
            i_u_constant: 0.0,
            pod_cutoff: 1e-12,
            newton_tol: fom.newton_tol,
            newton_max_iter: fom.newton_max_iter,
            regression: RegressionOptions::default(),
            solutions: SolutionOptions::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            LabError::Config(msg) => LabError::format(path, msg),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        if self.n_cells < 2 {
            return bad(format!("n_cells must be at least 2, got {}", self.n_cells));
        }
        for (name, v) in [("nu", self.nu), ("dt", self.dt), ("t_final", self.t_final), ("newton_tol", self.newton_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.pod_cutoff > 0.0 && self.pod_cutoff < 1.0) {
            return bad(format!("pod_cutoff must lie in (0, 1), got {}", self.pod_cutoff));
        }
        if !(self.i_u_constant >= 0.0 && self.i_u_constant.is_finite()) {
            return bad(format!("i_u_constant must be non-negative, got {}", self.i_u_constant));
        }
        if self.newton_max_iter == 0 {
            return bad("newton_max_iter must be positive".into());
        }
        if self.frameworks.is_empty() {
            return bad("at least one framework is required".into());
        }
        let ranks = self.ranks.values();
        if ranks.is_empty() || ranks.contains(&0) {
            return bad("ranks must be a non-empty set of positive integers".into());
        }
        if let Some(bad_t) = self.solutions.times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_final)) {
            return bad(format!("solution time {bad_t} outside [0, {}]", self.t_final));
        }
        if self.solutions.ranks.contains(&0) {
            return bad("solution ranks must be positive".into());
        }
        self.fom_config().n_steps().map_err(|e| LabError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn fom_config(&self) -> FomConfig {
        FomConfig {
            nu: self.nu,
            dt: self.dt,
            t_final: self.t_final,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            ..FomConfig::burgers_step()
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_steps(), 1000);
        assert_eq!(cfg.ranks.values().len(), 39);
    }

    #[test]
    fn framework_names_round_trip() {
        for fw in Framework::ALL {
            assert_eq!(fw.name().parse::<Framework>().unwrap(), fw);
            assert_eq!(Framework::of(fw.use_dq(), fw.inner_product()), fw);
            let json = serde_json::to_string(&fw).unwrap();
            assert_eq!(json, format!("\"{}\"", fw.name()));
        }
        assert!("DQ-H1".parse::<Framework>().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"n_cells": 64, "ranks": [3, 1, 3], "frameworks": ["DQ-H01"]}"#).unwrap();
        assert_eq!(cfg.n_cells, 64);
        assert_eq!(cfg.nu, 1e-2);
        assert_eq!(cfg.ranks, Ranks::List(vec![3, 1, 3]));
        assert_eq!(cfg.frameworks, vec![Framework::DqH01]);
        let cfg = ExperimentConfig::from_json(r#"{"ranks": {"min": 4, "max": 6}}"#).unwrap();
        assert_eq!(cfg.ranks.values(), vec![4, 5, 6]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            r#"{"nu": -1}"#,
            r#"{"n_cells": 1}"#,
            r#"{"dt": 0.3}"#,
            r#"{"frameworks": []}"#,
            r#"{"ranks": [0, 2]}"#,
            r#"{"unknown": 1}"#,
            r#"{"solutions": {"times": [2.0]}}"#,
            r#"{"pod_cutoff": 1.5}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn ranks_clamp_to_d() {
        let (r, clamped) = Ranks::Range { min: 2, max: 6 }.resolve(4);
        assert_eq!(r, vec![2, 3, 4]);
        assert_eq!(clamped, vec![5, 6]);
    }
}
