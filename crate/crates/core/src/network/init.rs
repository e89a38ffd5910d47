use std::fmt;
use std::str::FromStr;

use super::{NetArch, ParamVector};
use crate::error::{Error, Result};
use crate::numerics::{fill_gaussian, RngStream};

/// Per-layer Gaussian initialization variance rule.
#[derive(Debug, Clone, PartialEq)]
pub enum InitScheme {
    /// `1/m_{l-1}`.
    LeCun,
    /// `2/m_{l-1}`.
    He,
    /// `2/m_l` for hidden layers and `1/o` for the last layer.
    Ntk,
    /// `2/(m_{l-1} + m_l)`.
    Xavier,
    /// Explicit variances, one per layer.
    Custom(Vec<f64>),
}

impl InitScheme {
    /// The four named schemes, in a stable order.
    pub const NAMED: [InitScheme; 4] = [InitScheme::LeCun, InitScheme::He, InitScheme::Ntk, InitScheme::Xavier];

    pub fn name(&self) -> &'static str {
        match self {
            InitScheme::LeCun => "lecun",
            InitScheme::He => "he",
            InitScheme::Ntk => "ntk",
            InitScheme::Xavier => "xavier",
            InitScheme::Custom(_) => "custom",
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitScheme::Custom(b) => {
                let parts: Vec<String> = b.iter().map(|v| v.to_string()).collect();
                write!(f, "custom:{}", parts.join(":"))
            }
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for InitScheme {
    type Err = Error;

    /// Accepts `lecun`, `he`, `ntk`, `xavier`, or `custom:b1:b2:...`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "lecun" => Ok(InitScheme::LeCun),
            "he" => Ok(InitScheme::He),
            "ntk" => Ok(InitScheme::Ntk),
            "xavier" | "glorot" => Ok(InitScheme::Xavier),
            _ => {
                let rest = lower
                    .strip_prefix("custom:")
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown init scheme '{s}'")))?;
                let betas = rest
                    .split(':')
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::InvalidParameter(format!("bad variance '{t}' in '{s}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(InitScheme::Custom(betas))
            }
        }
    }
}

/// Per-layer variances `β_1..β_L` of `scheme` on `arch`.
///
/// Named schemes always give positive variances. Custom variances may be zero
/// (a degenerate but useful test case) but not negative.
pub fn init_betas(scheme: &InitScheme, arch: &NetArch) -> Result<Vec<f64>> {
    let m = arch.widths();
    let depth = arch.depth();
    let betas = match scheme {
        InitScheme::LeCun => (1..=depth).map(|l| 1.0 / m[l - 1] as f64).collect(),
        InitScheme::He => (1..=depth).map(|l| 2.0 / m[l - 1] as f64).collect(),
        InitScheme::Ntk => (1..=depth)
            .map(|l| {
                if l < depth {
                    2.0 / m[l] as f64
                } else {
                    1.0 / arch.output_dim() as f64
                }
            })
            .collect(),
        InitScheme::Xavier => (1..=depth).map(|l| 2.0 / (m[l - 1] + m[l]) as f64).collect(),
        InitScheme::Custom(b) => {
            check_betas(arch, b)?;
            b.clone()
        }
    };
    Ok(betas)
}

fn check_betas(arch: &NetArch, betas: &[f64]) -> Result<()> {
    if betas.len() != arch.depth() {
        return Err(Error::DimensionMismatch {
            what: "layer variances",
            expected: arch.depth(),
            found: betas.len(),
        });
    }
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "layer variance must be finite and non-negative, got {b}"
        )));
    }
    Ok(())
}

/// Draws `W_l ~ N(0, β_l)` entrywise, layer `l` from `stream.child(l)`.
pub fn sample_init(arch: &NetArch, betas: &[f64], stream: &RngStream) -> Result<ParamVector> {
    check_betas(arch, betas)?;
    let mut params = ParamVector::zeros(arch);
    for (l, &beta) in betas.iter().enumerate() {
        if beta > 0.0 {
            let mut rng = stream.child(l as u64).generator();
            fill_gaussian(&mut rng, params.layer_mut(l), beta.sqrt());
        }
    }
    Ok(params)
}
