//! Experiment configuration read from `--config <json>`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use jmf::synthgen::SyntheticSpec;
use jmf::{Algorithm, Hyperparameters, SolverConfig, StopRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Regenerated for every seed, with the run seed as the data seed.
    Synthetic(SyntheticSpec),
    /// A manifest as written by `generate`; data are the same for every seed.
    Manifest(PathBuf),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Candidate values per weight; an empty list keeps the base weight.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamGrid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
}

impl ParamGrid {
    /// Seven decades for the network and L1 weights, five for γ1.
    pub fn full() -> Self {
        let wide = vec![0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0];
        Self {
            lambda1: wide.clone(),
            lambda2: wide.clone(),
            gamma1: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2],
            gamma2: wide,
        }
    }

    pub fn cells(&self, base: Weights) -> Vec<Weights> {
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let mut out = Vec::new();
        for &lambda1 in &or(&self.lambda1, base.lambda1) {
            for &lambda2 in &or(&self.lambda2, base.lambda2) {
                for &gamma1 in &or(&self.gamma1, base.gamma1) {
                    for &gamma2 in &or(&self.gamma2, base.gamma2) {
                        out.push(Weights {
                            lambda1,
                            lambda2,
                            gamma1,
                            gamma2,
                        });
                    }
                }
            }
        }
        out
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: Source,
    /// Defaults to the synthetic dataset's planted rank.
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default)]
    pub weights: Weights,
    /// Attach the network constraints of the source.
    #[serde(default)]
    pub constrained: bool,
    pub solvers: Vec<SolverConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub grid: Option<ParamGrid>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).with_context(|| format!("bad config {}", path.display()))?;
        // manifest paths are relative to the config file
        if let Source::Manifest(p) = &mut cfg.source {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn hyperparameters(&self, rank: usize, w: Weights) -> Hyperparameters {
        Hyperparameters::new(self.rank.unwrap_or(rank)).with_weights(w.lambda1, w.lambda2, w.gamma1, w.gamma2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            bail!("config lists no solvers");
        }
        if self.seeds.is_empty() {
            bail!("config lists no seeds");
        }
        for s in &self.solvers {
            s.validate()?;
            if s.algorithm == Algorithm::MUR && s.stop_rule == StopRule::GradientRatio {
                bail!("MUR is only run with the objective-ratio stopping rule (Stop1)");
            }
        }
        self.hyperparameters(1, self.weights).validate()?;
        if self.rank == Some(0) {
            bail!("rank must be at least 1");
        }
        Ok(())
    }
}
