use crate::accountant::KlConvention;
use crate::error::{Error, Result};
use crate::network::{InitScheme, LossKind, NetArch};

/// Gradient norm above which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Noisy gradient descent settings shared by every run of an estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Step size `η`.
    pub eta: f64,
    /// Number of full-batch steps `K`; continuous time is `T = η·K`.
    pub steps: usize,
    /// Noise variance `σ²` used in the KL accumulation.
    pub sigma2: f64,
    pub loss: LossKind,
    pub seed: u64,
    pub runs: usize,
    pub kl_constant: KlConvention,
    /// Record cumulative values every this many steps (and at the end).
    pub record_every: usize,
    /// Noise variance that drives the trajectory, if different from
    /// `sigma2`. Fixing it replays identical trajectories while the KL
    /// accumulation constant changes.
    pub trajectory_sigma2: Option<f64>,
}

impl TrainConfig {
    pub fn new(loss: LossKind) -> Self {
        Self {
            eta: 0.01,
            steps: 100,
            sigma2: 0.01,
            loss,
            seed: 0,
            runs: 6,
            kl_constant: KlConvention::PaperHalfSigma2,
            record_every: 1,
            trajectory_sigma2: None,
        }
    }

    /// Continuous training time `η·K`.
    pub fn time(&self) -> f64 {
        self.eta * self.steps as f64
    }

    pub fn noise_sigma2(&self) -> f64 {
        self.trajectory_sigma2.unwrap_or(self.sigma2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if let Some(s) = self.trajectory_sigma2 {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("trajectory sigma2 must be non-negative, got {s}"));
            }
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        Ok(())
    }
}

/// Model trained in an estimate. Each run draws its own initialization.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Dnn {
        arch: NetArch,
        scheme: InitScheme,
    },
    /// The network linearized at each run's initialization.
    Linearized {
        arch: NetArch,
        scheme: InitScheme,
    },
}

impl Model {
    pub fn arch(&self) -> &NetArch {
        match self {
            Model::Dnn { arch, .. } | Model::Linearized { arch, .. } => arch,
        }
    }

    pub fn scheme(&self) -> &InitScheme {
        match self {
            Model::Dnn { scheme, .. } | Model::Linearized { scheme, .. } => scheme,
        }
    }
}
