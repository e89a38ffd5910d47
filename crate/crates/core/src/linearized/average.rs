use crate::error::{Error, Result};
use crate::network::ParamVector;

/// Streaming arithmetic mean of parameter vectors.
#[derive(Debug, Clone)]
pub struct RunningAverage {
    sum: Option<ParamVector>,
    count: usize,
}

impl RunningAverage {
    pub fn new() -> Self {
        Self { sum: None, count: 0 }
    }

    pub fn push(&mut self, w: &ParamVector) -> Result<()> {
        match &mut self.sum {
            Some(s) => s.add_scaled(1.0, w)?,
            None => self.sum = Some(w.clone()),
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Result<ParamVector> {
        let mut m = self.sum.clone().ok_or(Error::EmptySequence)?;
        m.scale(1.0 / self.count as f64);
        Ok(m)
    }
}

impl Default for RunningAverage {
    fn default() -> Self {
        Self::new()
    }
}

/// Arithmetic mean of the iterates.
pub fn running_average(iterates: &[ParamVector]) -> Result<ParamVector> {
    let mut avg = RunningAverage::new();
    for w in iterates {
        avg.push(w)?;
    }
    avg.mean()
}
