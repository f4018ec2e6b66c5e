//! Conditional two-mode states after the dual-homodyne swap.
//!
//! Three device layouts are supported. Each has a closed-form builder in
//! [`closed_form`] and an independent brute-force construction in
//! [`oracle`] that works directly with tensors, beam-splitter amplitudes and
//! displacement matrices. The two must agree elementwise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{qs_success_probability, HalfChannelParams};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, max_abs, trace, ComplexMatrix, ModeDims};

pub mod closed_form;
pub mod oracle;
pub mod truncation;

pub use closed_form::{build_asymmetric, build_state, build_symmetric_scissors, build_symmetric_sources, outcome_weight};
pub use oracle::oracle_state;
pub use truncation::truncation_level;

/// Default fraction of the extrapolated trace a truncation must retain.
pub const DEFAULT_TRACE_TARGET: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// TMSV at Alice, scissor at Bob, one of each at the hub.
    AsymmetricSourceScissor,
    /// TMSV at both ends; scissors and the swap at the hub.
    SymmetricSources,
    /// Both TMSVs and the swap at the hub; scissors at both ends.
    SymmetricScissors,
}

impl Orientation {
    pub const ALL: [Orientation; 3] =
        [Orientation::AsymmetricSourceScissor, Orientation::SymmetricSources, Orientation::SymmetricScissors];

    pub fn name(&self) -> &'static str {
        match self {
            Orientation::AsymmetricSourceScissor => "asymmetric",
            Orientation::SymmetricSources => "symmetric-sources",
            Orientation::SymmetricScissors => "symmetric-scissors",
        }
    }

    /// Whether the conditional state depends on the swap outcome.
    pub fn outcome_dependent(&self) -> bool {
        !matches!(self, Orientation::SymmetricScissors)
    }
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asymmetric" | "asym" | "asymmetric-source-scissor" => Ok(Orientation::AsymmetricSourceScissor),
            "symmetric-sources" | "sources" => Ok(Orientation::SymmetricSources),
            "symmetric-scissors" | "scissors" => Ok(Orientation::SymmetricScissors),
            other => Err(Error::InvalidParameter(format!("unknown orientation '{other}'"))),
        }
    }
}

/// How the scissors of a link pair are heralded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Heralding {
    /// Each link heralds on its own, with these probabilities.
    PerLink(f64, f64),
    /// Both end scissors act on one shared hub state and must succeed on the
    /// same copy.
    Joint(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPairConfig {
    /// Alice's side.
    pub link1: HalfChannelParams,
    /// Bob's side.
    pub link2: HalfChannelParams,
    pub orientation: Orientation,
    /// Fock cutoff of every truncated mode.
    pub n_max: usize,
    pub trace_target: f64,
}

impl LinkPairConfig {
    pub fn new(link1: HalfChannelParams, link2: HalfChannelParams, orientation: Orientation, n_max: usize) -> Result<Self> {
        let cfg = Self { link1, link2, orientation, n_max, trace_target: DEFAULT_TRACE_TARGET };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same links with the cutoff chosen by [`truncation_level`].
    pub fn auto(link1: HalfChannelParams, link2: HalfChannelParams, orientation: Orientation) -> Result<Self> {
        let mut cfg = Self::new(link1, link2, orientation, 1)?;
        cfg.n_max = truncation_level(&cfg)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.link1.validate()?;
        self.link2.validate()?;
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if !(self.trace_target > 0.9 && self.trace_target < 1.0) {
            return Err(Error::InvalidParameter(format!("trace_target must lie in (0.9, 1), got {}", self.trace_target)));
        }
        Ok(())
    }

    pub fn with_gains(mut self, g1: f64, g2: f64) -> Self {
        self.link1.g = g1;
        self.link2.g = g2;
        self
    }

    pub fn mode_dims(&self) -> ModeDims {
        match self.orientation {
            Orientation::AsymmetricSourceScissor => ModeDims::new(self.n_max + 1, 2),
            Orientation::SymmetricSources => ModeDims::new(self.n_max + 1, self.n_max + 1),
            Orientation::SymmetricScissors => ModeDims::new(2, 2),
        }
    }

    /// Effective squeezing of the hub-swapped source pair.
    pub fn chi_prime(&self) -> f64 {
        self.link1.chi * self.link2.chi
    }

    pub fn heralding(&self) -> Heralding {
        match self.orientation {
            Orientation::SymmetricScissors => Heralding::Joint(closed_form::joint_scissor_probability(self)),
            _ => Heralding::PerLink(qs_success_probability(&self.link1), qs_success_probability(&self.link2)),
        }
    }

    /// Integral of the outcome weight over the whole outcome plane.
    pub fn total_outcome_mass(&self) -> f64 {
        match self.orientation {
            Orientation::SymmetricScissors => closed_form::symmetric_scissors_matrix(self).trace().re,
            _ => qs_success_probability(&self.link1) * qs_success_probability(&self.link2),
        }
    }
}

/// Unnormalized (or normalized) density operator of modes A and B.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFockState {
    pub matrix: ComplexMatrix,
    pub dims: ModeDims,
    pub normalized: bool,
    /// Trace before normalization; the outcome density for swap-conditioned states.
    pub weight: f64,
}

impl TwoModeFockState {
    pub fn from_unnormalized(matrix: ComplexMatrix, dims: ModeDims) -> Result<Self> {
        if matrix.nrows() != dims.joint() || matrix.ncols() != dims.joint() {
            return Err(crate::error::LinalgError::DimensionMismatch {
                expected: dims.joint(),
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            }
            .into());
        }
        let weight = trace(&matrix).re;
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("state weight must be positive, got {weight:e}")));
        }
        Ok(Self { matrix, dims, normalized: false, weight })
    }

    pub fn normalize(&self) -> Self {
        if self.normalized {
            return self.clone();
        }
        let trace = trace(&self.matrix).re;
        Self { matrix: self.matrix.unscale(trace), dims: self.dims, normalized: true, weight: self.weight }
    }

    /// Scale of the stored matrix: `weight` when unnormalized, 1 otherwise.
    pub fn scale(&self) -> f64 {
        if self.normalized {
            1.0
        } else {
            self.weight
        }
    }

    /// Hermiticity and positivity within `tol` relative to the state scale.
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let scale = self.scale();
        let defect = hermiticity_defect(&self.matrix);
        if defect > tol * scale {
            return Err(Error::NonPhysicalResult(format!("hermiticity defect {defect:e} at scale {scale:e}")));
        }
        let eigs = hermitian_eigenvalues(&self.matrix)?;
        let min = eigs.last().copied().unwrap_or(0.0);
        if min < -tol * scale {
            return Err(Error::NonPhysicalResult(format!("eigenvalue {min:e} at scale {scale:e}")));
        }
        Ok(())
    }

    /// Largest elementwise deviation from `other`, relative to this state's scale.
    pub fn relative_deviation(&self, other: &Self) -> f64 {
        if self.dims != other.dims {
            return f64::INFINITY;
        }
        max_abs(&(&self.matrix - &other.matrix)) / self.scale()
    }

    /// Debug dump: `{dims, entries: [[re, im], ...] row-major, weight}`.
    pub fn to_json(&self) -> serde_json::Value {
        let n = self.matrix.nrows();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z: Complex64 = self.matrix[(i, j)];
                entries.push(serde_json::json!([z.re, z.im]));
            }
        }
        serde_json::json!({
            "dims": [self.dims.dim_a, self.dims.dim_b],
            "entries": entries,
            "weight": self.weight,
            "normalized": self.normalized,
        })
    }
}
