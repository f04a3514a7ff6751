use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Adam with bias correction (PyTorch semantics, no weight decay).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Moments shaped like the given parameter buffers.
    pub fn new(shapes: &[usize], lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of every buffer in `params` using the matching `grads`.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.m.len(), "parameter buffer count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient buffer count mismatch");
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - libm::pow(self.beta1, t as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, t as f64);
        let step_size = self.lr / bc1;
        let bc2_sqrt = libm::sqrt(bc2);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            assert_eq!(p.len(), g.len());
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let denom = libm::sqrt(v[i]) / bc2_sqrt + self.eps;
                p[i] -= step_size * m[i] / denom;
            }
        }
    }
}

/// Multiplies the learning rate by `factor` once the monitored loss has
/// failed to improve by more than `threshold` for `patience` consecutive
/// epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauScheduler {
    pub patience: usize,
    pub factor: f64,
    pub threshold: f64,
    pub min_lr: f64,
    lr: f64,
    best: f64,
    stalled: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, patience: usize, factor: f64, threshold: f64, min_lr: f64) -> Self {
        assert!(factor > 0.0 && factor < 1.0, "plateau factor must lie in (0, 1)");
        PlateauScheduler {
            patience,
            factor,
            threshold,
            min_lr,
            lr: lr.max(min_lr),
            best: f64::INFINITY,
            stalled: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Records one epoch's loss and returns the learning rate for the next.
    pub fn observe(&mut self, loss: f64) -> f64 {
        if loss < self.best - self.threshold {
            self.best = loss;
            self.stalled = 0;
        } else {
            self.stalled += 1;
            if self.stalled >= self.patience {
                self.lr = (self.lr * self.factor).max(self.min_lr);
                self.stalled = 0;
            }
        }
        self.lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let lr = 0.01;
        let mut adam = AdamState::new(&[3], lr);
        let mut p = [1.0, 1.0, 1.0];
        let g = [0.3, -2.0, 1e-3];
        adam.step(&mut [&mut p[..]], &[&g[..]]);
        for (pi, gi) in p.iter().zip(g) {
            let delta = pi - 1.0;
            assert_eq!(delta.signum(), -gi.signum());
            assert!(delta.abs() <= lr && delta.abs() >= lr * (1.0 - 1e-4), "{delta}");
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut adam = AdamState::new(&[2], 0.1);
        let mut p = [0.25, -7.0];
        for _ in 0..5 {
            adam.step(&mut [&mut p[..]], &[&[0.0, 0.0][..]]);
        }
        assert_eq!(p, [0.25, -7.0]);
    }

    #[test]
    fn three_step_trace_on_quadratic() {
        // f(p) = p^2, g = 2p, p0 = 1, lr = 0.1; hand-expanded Adam recursion.
        let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8f64, 0.1f64);
        let mut expected = [0.0f64; 3];
        let (mut p, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        let mut t = 1;
        while t <= 3 {
            let g = 2.0 * p;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mhat = m / (1.0 - b1.powi(t));
            let vhat = v / (1.0 - b2.powi(t));
            p -= lr * mhat / (vhat.sqrt() + eps);
            expected[(t - 1) as usize] = p;
            t += 1;
        }
        // first step: p1 = 1 - 0.1 = 0.9 (up to eps)
        assert!((expected[0] - 0.9).abs() < 1e-8);

        let mut adam = AdamState::new(&[1], lr);
        let mut q = [1.0];
        for want in expected {
            let g = [2.0 * q[0]];
            adam.step(&mut [&mut q[..]], &[&g[..]]);
            assert!((q[0] - want).abs() < 1e-12, "{} vs {want}", q[0]);
        }
        assert_eq!(adam.step_count(), 3);
    }

    #[test]
    fn plateau_halves_after_patience() {
        let mut s = PlateauScheduler::new(1.0, 2, 0.5, 1e-5, 1e-6);
        assert_eq!(s.observe(1.0), 1.0);
        assert_eq!(s.observe(1.0), 1.0);
        assert_eq!(s.observe(1.0), 0.5);
        assert_eq!(s.observe(0.5), 0.5);
        assert_eq!(s.observe(0.5 - 1e-6), 0.5);
        assert_eq!(s.observe(0.6), 0.25);
    }

    #[test]
    fn plateau_respects_floor() {
        let mut s = PlateauScheduler::new(1e-3, 1, 0.1, 0.0, 1e-5);
        let mut last = s.lr();
        for _ in 0..10 {
            let lr = s.observe(5.0);
            assert!(lr <= last && lr >= 1e-5);
            last = lr;
        }
        assert_eq!(last, 1e-5);
    }
}
