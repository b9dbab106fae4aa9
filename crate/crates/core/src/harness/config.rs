use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::checks::CHECK_IDS;
use crate::error::{Error, Result};
use crate::geometry::Norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Simulate,
    NcSweep,
    LemmaCheck,
    Branching,
    Renorm,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::Simulate => "simulate",
            RunMode::NcSweep => "nc-sweep",
            RunMode::LemmaCheck => "lemma-check",
            RunMode::Branching => "branching",
            RunMode::Renorm => "renorm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BranchingSection {
    pub eta: f64,
    pub cap: u64,
    pub horizon: u64,
    pub runs: usize,
    /// Also compare the spatial event probability at `R/r = 20` and `40`
    /// (round annulus, `eps = 0.5`).
    pub spatial: bool,
    /// Surviving runs per size and root height in units of `R`.
    pub surviving: u64,
    pub z0: f64,
}

impl Default for BranchingSection {
    fn default() -> Self {
        Self {
            eta: 0.1,
            cap: 100,
            horizon: 734,
            runs: 10_000,
            spatial: false,
            surviving: 500,
            z0: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormSection {
    pub eps: f64,
    pub area: f64,
    pub n: u64,
    pub ratio: f64,
    pub cap: u64,
    pub depth: u64,
    /// Number of independent lattice runs; run `k` uses master seed `seed + k`.
    pub seeds: u64,
    /// Refuse to run unless every sufficient condition holds.
    pub strict: bool,
}

impl Default for RenormSection {
    fn default() -> Self {
        Self {
            eps: 1.0,
            area: 10.0,
            n: 3,
            ratio: 6.0,
            cap: 20,
            depth: 3,
            seeds: 5,
            strict: false,
        }
    }
}

/// Everything a run depends on. Identical configurations produce
/// byte-identical output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    pub seed: u64,
    /// Fields per crossing estimate (per probe for threshold sweeps).
    pub trials: usize,
    pub norm: Norm,
    pub eps: Vec<f64>,
    /// Box side in units of `r`.
    pub l_over_r: f64,
    /// Annulus areas of the simulated crossing curve.
    pub areas: Vec<f64>,
    /// Threshold bracket; defaults to `[1 + eps/(pi sqrt 3), 8]`.
    pub bracket: Option<[f64; 2]>,
    pub tol: f64,
    pub bootstrap: usize,
    /// Repeat every threshold estimate at twice the box side.
    pub two_size: bool,
    pub lemmas: Vec<String>,
    /// Monte Carlo scale for the named checks, 1.0 is full size.
    pub budget: f64,
    pub out: PathBuf,
    pub branching: BranchingSection,
    pub renorm: RenormSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: RunMode::Simulate,
            seed: 1,
            trials: 200,
            norm: Norm::Round,
            eps: vec![1.0],
            l_over_r: 30.0,
            areas: vec![3.5, 4.0, 4.5, 5.0, 5.5],
            bracket: None,
            tol: 0.02,
            bootstrap: 1000,
            two_size: false,
            lemmas: CHECK_IDS.iter().map(|s| s.to_string()).collect(),
            budget: 1.0,
            out: PathBuf::from("out"),
            branching: BranchingSection::default(),
            renorm: RenormSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad =
            |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return bad(
                "eps",
                format!("need a non-empty list in (0, 1], got {:?}", self.eps),
            );
        }
        if !(self.l_over_r >= 10.0) {
            return bad("L/r", format!("must be at least 10, got {}", self.l_over_r));
        }
        if self.areas.iter().any(|a| !(*a > 0.0)) {
            return bad("areas", format!("must be positive, got {:?}", self.areas));
        }
        if !(self.tol > 0.0) {
            return bad("tol", format!("must be positive, got {}", self.tol));
        }
        if !(self.budget > 0.0) {
            return bad("budget", format!("must be positive, got {}", self.budget));
        }
        if let Some(id) = self
            .lemmas
            .iter()
            .find(|id| !CHECK_IDS.contains(&id.as_str()))
        {
            return Err(Error::UnknownLemma(id.clone()));
        }
        Ok(())
    }
}
