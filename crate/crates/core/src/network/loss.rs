use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Training loss on the network output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// Softmax cross-entropy against a class index (`o ≥ 2`).
    CrossEntropyMulti,
    /// `log(1 + exp(-y·f))` with `y = ±1` (`o = 1`).
    LogisticSingle,
}

/// Target of one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    /// `±1` for the single-output logistic loss.
    Sign(f64),
    /// Class index; the one-hot vector `e_class` is the target distribution.
    Class(usize),
}

impl Label {
    pub fn sign(y: f64) -> Result<Self> {
        if y == 1.0 || y == -1.0 {
            Ok(Label::Sign(y))
        } else {
            Err(Error::InvalidLabel(format!("expected +1 or -1, got {y}")))
        }
    }

    /// The label as an `o`-dimensional target vector.
    pub fn to_vector(&self, outputs: usize) -> Vec<f64> {
        match *self {
            Label::Sign(y) => vec![y; outputs],
            Label::Class(c) => {
                let mut v = vec![0.0; outputs];
                if c < outputs {
                    v[c] = 1.0;
                }
                v
            }
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Sign(y) => write!(f, "{y}"),
            Label::Class(c) => write!(f, "{c}"),
        }
    }
}

impl LossKind {
    /// Default loss for a network with `outputs` outputs.
    pub fn for_outputs(outputs: usize) -> Self {
        if outputs == 1 {
            LossKind::LogisticSingle
        } else {
            LossKind::CrossEntropyMulti
        }
    }

    pub fn check_outputs(&self, outputs: usize) -> Result<()> {
        match self {
            LossKind::LogisticSingle if outputs != 1 => Err(Error::InvalidArch(format!(
                "logistic loss needs one output, got {outputs}"
            ))),
            LossKind::CrossEntropyMulti if outputs < 2 => Err(Error::InvalidArch(format!(
                "cross-entropy loss needs at least two outputs, got {outputs}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn check_label(&self, label: &Label, outputs: usize) -> Result<()> {
        match (self, label) {
            (LossKind::LogisticSingle, Label::Sign(y)) if *y == 1.0 || *y == -1.0 => Ok(()),
            (LossKind::CrossEntropyMulti, Label::Class(c)) if *c < outputs => Ok(()),
            _ => Err(Error::InvalidLabel(format!(
                "label {label} does not fit {self} with {outputs} outputs"
            ))),
        }
    }

    /// Loss value at prediction `f`.
    pub fn value(&self, f: &[f64], label: &Label) -> f64 {
        match (self, label) {
            (LossKind::LogisticSingle, Label::Sign(y)) => softplus(-y * f[0]),
            (LossKind::CrossEntropyMulti, Label::Class(c)) => log_sum_exp(f) - f[*c],
            _ => f64::NAN,
        }
    }

    /// Derivative of the loss with respect to the prediction, written to `out`.
    pub fn residual(&self, f: &[f64], label: &Label, out: &mut [f64]) {
        match (self, label) {
            (LossKind::LogisticSingle, Label::Sign(y)) => {
                out[0] = -y * sigmoid(-y * f[0]);
            }
            (LossKind::CrossEntropyMulti, Label::Class(c)) => {
                let lse = log_sum_exp(f);
                for (o, v) in out.iter_mut().zip(f) {
                    *o = (v - lse).exp();
                }
                out[*c] -= 1.0;
            }
            _ => out.iter_mut().for_each(|o| *o = f64::NAN),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::CrossEntropyMulti => "cross-entropy",
            LossKind::LogisticSingle => "logistic",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cross-entropy" | "ce" | "xent" => Ok(LossKind::CrossEntropyMulti),
            "logistic" | "logit" => Ok(LossKind::LogisticSingle),
            _ => Err(Error::InvalidParameter(format!("unknown loss '{s}'"))),
        }
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn log_sum_exp(f: &[f64]) -> f64 {
    let max = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + f.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
