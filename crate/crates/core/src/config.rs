//! Experiment configurations read from TOML, one record per subcommand.
//!
//! Every field has a default, so a file only lists what it changes. Unknown keys are
//! rejected. `validate` runs before any computation.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::binomial;
use crate::invariants::Thresholds;
use crate::kernels::Kernel;

/// Shale suites refuse Fock spaces larger than this many basis states.
pub const MAX_FOCK_DIM: usize = 3000;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn to_toml<T: Serialize>(config: &T) -> String {
    toml::to_string(config).expect("configs serialize")
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

fn check_grid(name: &str, h: f64) -> Result<()> {
    let n = (1.0 / h).round();
    check(h > 0.0 && n >= 1.0 && (n * h - 1.0).abs() < 1e-9, || format!("{name} = {h} must divide 1"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    StandardL2,
    Tsirelson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    pub variant: KernelChoice,
    pub alpha: f64,
    /// Defaults to `e^{−(α+1)}`.
    pub eps: Option<f64>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { variant: KernelChoice::Tsirelson, alpha: 2.0, eps: None }
    }
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel> {
        match self.variant {
            KernelChoice::StandardL2 => Ok(Kernel::StandardL2),
            KernelChoice::Tsirelson => match self.eps {
                Some(eps) => Kernel::tsirelson_with_eps(self.alpha, eps),
                None => Kernel::tsirelson(self.alpha),
            },
        }
        .map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShaleConfig {
    /// Mandatory: the random maps are drawn from it.
    pub seed: Option<u64>,
    /// Pair `p` lives in dimension `dims[p % dims.len()]`.
    pub dims: Vec<usize>,
    pub pairs: usize,
    pub cutoffs: Vec<usize>,
    pub singular_min: f64,
    pub singular_max: f64,
    /// Largest norm of the Weyl vectors `u`.
    pub u_norm: f64,
    pub vacuum_lambdas: Vec<f64>,
    pub vacuum_diagonals: Vec<Vec<f64>>,
    pub vacuum_cutoff: usize,
    pub weak_lambda: f64,
    pub weak_steps: usize,
    /// Exit with a quality failure when the final-cutoff functoriality residual exceeds it.
    pub hard_limit: Option<f64>,
}

impl Default for ShaleConfig {
    fn default() -> Self {
        ShaleConfig {
            seed: None,
            dims: vec![1, 2, 3],
            pairs: 10,
            cutoffs: vec![8, 12, 16],
            singular_min: 0.6,
            singular_max: 1.6,
            u_norm: 1.0,
            vacuum_lambdas: vec![0.5, 2.0, 3.0],
            vacuum_diagonals: vec![vec![2.0, 0.5]],
            vacuum_cutoff: 40,
            weak_lambda: 1.5,
            weak_steps: 8,
            hard_limit: None,
        }
    }
}

impl ShaleConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.seed.is_some(), || "shale needs a seed".into())?;
        check(!self.dims.is_empty() && self.dims.iter().all(|&d| (1..=4).contains(&d)), || {
            format!("dims {:?} must lie in 1..=4", self.dims)
        })?;
        check(!self.cutoffs.is_empty() && self.cutoffs.iter().all(|&n| (2..=24).contains(&n)), || {
            format!("cutoffs {:?} must lie in 2..=24", self.cutoffs)
        })?;
        let max_n = *self.cutoffs.iter().max().unwrap();
        for &d in &self.dims {
            let dim = binomial(max_n + d, d);
            check(dim <= MAX_FOCK_DIM, || {
                format!("{d} modes at cutoff {max_n} give {dim} basis states, above {MAX_FOCK_DIM}")
            })?;
        }
        check(0.0 < self.singular_min && self.singular_min <= self.singular_max, || {
            format!("singular range [{}, {}] is invalid", self.singular_min, self.singular_max)
        })?;
        check(self.u_norm > 0.0, || "u_norm must be positive".into())?;
        check(self.vacuum_lambdas.iter().all(|&l| l > 0.0), || "dilation factors must be positive".into())?;
        for diag in &self.vacuum_diagonals {
            check(!diag.is_empty() && diag.len() <= 4 && diag.iter().all(|&l| l > 0.0), || {
                format!("diagonal {diag:?} needs 1 to 4 positive entries")
            })?;
            let dim = binomial(self.vacuum_cutoff + diag.len(), diag.len());
            check(dim <= MAX_FOCK_DIM, || format!("diagonal {diag:?} at cutoff {} is too large", self.vacuum_cutoff))?;
        }
        check(self.vacuum_cutoff >= 2 && self.vacuum_cutoff <= 200, || "vacuum_cutoff must lie in 2..=200".into())?;
        check(self.weak_lambda > 0.0 && self.weak_steps >= 2, || "weak continuity needs lambda > 0 and 2+ steps".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub seed: Option<u64>,
    pub alpha: f64,
    pub eps: Option<f64>,
    pub gram_h: f64,
    pub defect_hs: Vec<f64>,
    pub defect_s: f64,
    pub defect_t: f64,
    pub fourier_ns: Vec<u64>,
    /// Frequencies over which the `ln^{α−1}`-compensated coefficients are compared.
    pub trend_ns: Vec<u64>,
    pub drift_limit: f64,
    pub n_max: u64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            seed: None,
            alpha: 2.0,
            eps: None,
            gram_h: 1.0 / 64.0,
            defect_hs: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            defect_s: 0.25,
            defect_t: 0.5,
            fourier_ns: vec![0, 1, 4, 16, 64, 256, 1024, 4096],
            trend_ns: vec![256, 1024, 4096],
            drift_limit: 0.25,
            n_max: 1 << 14,
        }
    }
}

impl KernelConfig {
    pub fn kernel(&self) -> Result<Kernel> {
        KernelSpec { variant: KernelChoice::Tsirelson, alpha: self.alpha, eps: self.eps }.build()
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel()?;
        check_grid("gram_h", self.gram_h)?;
        check(!self.defect_hs.is_empty(), || "defect_hs is empty".into())?;
        for &h in &self.defect_hs {
            check(h > 0.0 && ((self.defect_s + self.defect_t) / h - ((self.defect_s + self.defect_t) / h).round()).abs() < 1e-9, || {
                format!("defect grid h = {h} does not tile (0, s + t)")
            })?;
        }
        check(!self.trend_ns.is_empty() && self.trend_ns.iter().all(|&n| n > 1), || "trend_ns need n > 1".into())?;
        check(self.n_max.is_power_of_two() && self.n_max <= 1 << 20, || {
            format!("n_max = {} must be a power of two up to 2^20", self.n_max)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsConfig {
    pub seed: Option<u64>,
    pub kernel: KernelSpec,
    pub h: f64,
    pub ts: Vec<f64>,
    /// Grids for the imaginary additivity refinement study at `(s, t)`.
    pub additivity_hs: Vec<f64>,
    pub additivity_s: f64,
    pub additivity_t: f64,
    /// Complements of a Cantor-type sequence of this depth feed the boundedness probe.
    pub probe_depth: usize,
    pub probe_keep: f64,
    pub n_max: u64,
    /// Exit with a quality failure when a pairing residual exceeds it.
    pub hard_limit: Option<f64>,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        UnitsConfig {
            seed: None,
            kernel: KernelSpec::default(),
            h: 1.0 / 128.0,
            ts: vec![0.25, 0.5, 0.75, 1.0],
            additivity_hs: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            additivity_s: 0.25,
            additivity_t: 0.5,
            probe_depth: 4,
            probe_keep: 0.5,
            n_max: 1 << 12,
            hard_limit: Some(1e-6),
        }
    }
}

impl UnitsConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.build()?;
        check_grid("h", self.h)?;
        check(self.ts.iter().all(|&t| (0.0..=1.0).contains(&t)), || "ts must lie in [0, 1]".into())?;
        for &h in &self.additivity_hs {
            check_grid("additivity h", h)?;
        }
        check(self.additivity_s > 0.0 && self.additivity_t > 0.0 && self.additivity_s + self.additivity_t <= 1.0, || {
            "additivity s, t must be positive with s + t <= 1".into()
        })?;
        check(self.probe_keep > 0.0 && self.probe_keep < 1.0, || "probe_keep must lie in (0, 1)".into())?;
        check(self.n_max.is_power_of_two() && self.n_max <= 1 << 20, || {
            format!("n_max = {} must be a power of two up to 2^20", self.n_max)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvariantsConfig {
    pub seed: Option<u64>,
    /// Tsirelson exponents contrasted against the standard `L²` product.
    pub alphas: Vec<f64>,
    pub h: f64,
    pub depth: usize,
    pub keep: f64,
    /// Explicit sequence of elementary sets replacing the Cantor-type one.
    pub sets: Option<Vec<Vec<[f64; 2]>>>,
    pub thresholds: Thresholds,
    /// Target for the final-step contrast ratio; reported, never enforced.
    pub contrast_target: f64,
}

impl Default for InvariantsConfig {
    fn default() -> Self {
        InvariantsConfig {
            seed: None,
            alphas: vec![2.0],
            h: 1.0 / 256.0,
            depth: 6,
            keep: 0.5,
            sets: None,
            thresholds: Thresholds::default(),
            contrast_target: 2.0,
        }
    }
}

impl InvariantsConfig {
    pub fn validate(&self) -> Result<()> {
        for &a in &self.alphas {
            Kernel::tsirelson(a).map_err(|e| Error::Config(e.to_string()))?;
        }
        check_grid("h", self.h)?;
        check(self.h >= 1.0 / 2048.0, || "h below 1/2048 makes the dense Gram too large".into())?;
        check(self.keep > 0.0 && self.keep < 1.0, || "keep must lie in (0, 1)".into())?;
        let t = self.thresholds;
        check(t.liminf_tol > 0.0 && t.decay_ratio > 0.0 && t.plateau_tol > 0.0, || "thresholds must be positive".into())
    }
}

/// Where a suite writes its report bundle; not part of the echoed configuration.
pub fn default_out(command: &str) -> PathBuf {
    PathBuf::from("reports").join(command)
}
