//! Running sums for means and standard errors.

use serde::{Deserialize, Serialize};

/// Elementwise running sum and sum of squares over equally weighted samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Accum {
    pub n: u64,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
}

impl Accum {
    pub fn new(len: usize) -> Self {
        Self { n: 0, sum: vec![0.0; len], sumsq: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sum.is_empty()
    }

    pub fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.sum.len());
        self.n += 1;
        for ((s, q), x) in self.sum.iter_mut().zip(&mut self.sumsq).zip(v) {
            *s += x;
            *q += x * x;
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Standard error of the mean; NaN with fewer than two samples.
    pub fn se(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![f64::NAN; self.len()];
        }
        let n = self.n as f64;
        self.sum
            .iter()
            .zip(&self.sumsq)
            .map(|(s, q)| {
                let m = s / n;
                ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()
            })
            .collect()
    }
}

/// Ensemble statistics: trajectory means pooled across trajectories.
///
/// With a single trajectory the standard error falls back to its block-to-block scatter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStat {
    pub across: Accum,
    pub single: Option<Accum>,
}

impl EnsembleStat {
    pub fn new(len: usize) -> Self {
        Self { across: Accum::new(len), single: None }
    }

    /// Add one trajectory's block accumulator. Empty trajectories are skipped.
    pub fn absorb(&mut self, traj: Accum) {
        if traj.n == 0 {
            return;
        }
        self.across.push(&traj.mean());
        self.single = (self.across.n == 1).then_some(traj);
    }

    pub fn trajectories(&self) -> u64 {
        self.across.n
    }

    pub fn blocks(&self) -> u64 {
        match &self.single {
            Some(a) if self.across.n == 1 => a.n,
            _ => 0,
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.across.mean()
    }

    pub fn se(&self) -> Vec<f64> {
        match (&self.single, self.across.n) {
            (Some(a), 1) => a.se(),
            _ => self.across.se(),
        }
    }
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Self { value, se }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self { value: self.value * k, se: self.se * k.abs() }
    }

    pub fn shifted(self, c: f64) -> Self {
        Self { value: self.value + c, se: self.se }
    }

    /// |value − target| measured in standard errors.
    pub fn z(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.se
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let mut a = Accum::new(1);
        for x in [1.0, 2.0, 3.0, 4.0] {
            a.push(&[x]);
        }
        assert_eq!(a.mean(), vec![2.5]);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((a.se()[0] - sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_trajectory_uses_blocks() {
        let mut t = Accum::new(1);
        t.push(&[1.0]);
        t.push(&[3.0]);
        let mut e = EnsembleStat::new(1);
        e.absorb(t.clone());
        assert_eq!(e.mean(), vec![2.0]);
        assert_eq!(e.se(), t.se());
        e.absorb(t);
        assert_eq!(e.se(), vec![0.0]);
    }
}
