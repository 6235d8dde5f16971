use crate::trajectory::Trajectory;

/// Streaming mean and variance (parallel-merge form).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningMeanStd {
    pub mean: f64,
    pub var: f64,
    pub count: f64,
}

impl Default for RunningMeanStd {
    fn default() -> Self {
        RunningMeanStd { mean: 0.0, var: 1.0, count: 1e-4 }
    }
}

impl RunningMeanStd {
    pub fn update(&mut self, xs: &[f64]) {
        if xs.is_empty() {
            return;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let delta = mean - self.mean;
        let total = self.count + n;
        let m2 = self.var * self.count + var * n + delta * delta * self.count * n / total;
        self.mean += delta * n / total;
        self.var = m2 / total;
        self.count = total;
    }
}

/// Scales rewards by the running standard deviation of the discounted return.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnNormalizer {
    pub gamma: f64,
    pub stats: RunningMeanStd,
}

impl ReturnNormalizer {
    pub fn new(gamma: f64) -> Self {
        ReturnNormalizer { gamma, stats: RunningMeanStd::default() }
    }

    pub fn scale(&self) -> f64 {
        1.0 / (self.stats.var + 1e-8).sqrt()
    }

    pub fn observe(&mut self, traj: &Trajectory) {
        let mut running = 0.0;
        let mut seen = Vec::with_capacity(traj.len());
        for (r, &done) in traj.rewards.iter().zip(&traj.dones) {
            running = running * self.gamma + r;
            seen.push(running);
            if done {
                running = 0.0;
            }
        }
        self.stats.update(&seen);
    }

    pub fn apply(&self, traj: &mut Trajectory) {
        let s = self.scale();
        traj.rewards.iter_mut().for_each(|r| *r *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_batch_statistics() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 3.0 + 1.0).collect();
        let mut rms = RunningMeanStd { mean: 0.0, var: 0.0, count: 0.0 };
        for chunk in xs.chunks(7) {
            rms.update(chunk);
        }
        let mean = xs.iter().sum::<f64>() / 100.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 100.0;
        assert!((rms.mean - mean).abs() < 1e-12);
        assert!((rms.var - var).abs() < 1e-12);
    }
}
