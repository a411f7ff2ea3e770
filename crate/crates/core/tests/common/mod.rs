//! Naive floating-point oracles and random-system generators for
//! integration tests. Nothing here uses the library's log-domain code.

#![allow(dead_code)]

use powinst::{System, SystemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative tolerance matching the library's log margin.
pub const REL: f64 = 1e-9;

pub fn random_log_steps(seed: u64, horizon: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..horizon).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub fn scalar_table_system(log_steps: &[f64]) -> System {
    System::new(SystemSpec::ScalarTable {
        log_steps: log_steps.to_vec(),
        horizon: log_steps.len(),
    })
    .unwrap()
}

/// Plain products of `e^{g_k}`.
pub struct ScalarOracle {
    steps: Vec<f64>,
}

impl ScalarOracle {
    pub fn new(log_steps: &[f64]) -> Self {
        ScalarOracle {
            steps: log_steps.iter().map(|g| g.exp()).collect(),
        }
    }

    /// `A(m-1) ... A(n)`.
    pub fn transition(&self, m: usize, n: usize) -> f64 {
        self.steps[n..m].iter().product()
    }

    fn holds(lhs: f64, rhs: f64) -> bool {
        lhs <= rhs * (1.0 + REL)
    }

    /// First `(m, n, p)` violating `|𝒜(n,p)| <= coef(m,n) |𝒜(m,p)|`.
    pub fn triple_witness(
        &self,
        window: usize,
        coef: impl Fn(usize, usize) -> f64,
    ) -> Option<(usize, usize, usize)> {
        for m in 0..=window {
            for n in 0..=m {
                for p in 0..=n {
                    let lhs = self.transition(n, p);
                    let rhs = coef(m, n) * self.transition(m, p);
                    if !Self::holds(lhs, rhs) {
                        return Some((m, n, p));
                    }
                }
            }
        }
        None
    }

    /// First `(m, n)` violating
    /// `Σ_{k=n}^{m} d^{p(m-k)} |𝒜(k,n)|^p <= θ(m)^p |𝒜(m,n)|^p`.
    pub fn sum_witness(
        &self,
        window: usize,
        p: f64,
        d: f64,
        theta: impl Fn(usize) -> f64,
    ) -> Option<(usize, usize)> {
        for m in 0..=window {
            for n in 0..=m {
                let lhs: f64 = (n..=m)
                    .map(|k| d.powf(p * (m - k) as f64) * self.transition(k, n).powf(p))
                    .sum();
                let rhs = theta(m).powf(p) * self.transition(m, n).powf(p);
                if !Self::holds(lhs, rhs) {
                    return Some((m, n));
                }
            }
        }
        None
    }

    /// `Σ_{k=n}^{m} d^{m-k} |𝒜(k,n)|`.
    pub fn canonical_lyapunov(&self, d: f64, m: usize, n: usize) -> f64 {
        (n..=m)
            .map(|k| d.powi((m - k) as i32) * self.transition(k, n))
            .sum()
    }

    /// First `(m, n)` violating `L(m) >= a L(m-1) + |𝒜(m,n)|` for the
    /// canonical sequence with rate d.
    pub fn lyapunov_witness(&self, window: usize, d: f64, a: f64) -> Option<(usize, usize)> {
        for m in 0..=window {
            for n in 0..m {
                let lhs = a * self.canonical_lyapunov(d, m - 1, n) + self.transition(m, n);
                if !Self::holds(lhs, self.canonical_lyapunov(d, m, n)) {
                    return Some((m, n));
                }
            }
        }
        None
    }
}
