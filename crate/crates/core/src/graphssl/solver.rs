//! Fixed-point solver for p-Laplacian label diffusion.
//!
//! Starting from `f = y`, each Jacobi sweep recomputes the edge coefficients
//! `m_ij = 1/2 w_ij (||d_i f||^{p-2} + ||d_j f||^{p-2})` from the previous
//! iterate and updates every node synchronously:
//!
//! `f_j <- (sum_{i ~ j} m_ij f_i + mu y_j) / (sum_{i ~ j} m_ij + mu)`
//!
//! Each update is a convex combination of neighbor values and the node's
//! label, so iterates stay within `[min(y), max(y)]`. At convergence the
//! iterate satisfies `L_p f + mu (f - y) = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::graph::SimilarityGraph;
use super::operators::local_variation;

/// Diffusion seed labels: +1 fraud, -1 normal, 0 unlabeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    y: Vec<i8>,
}

impl LabelVector {
    /// Validates entries are in `{-1, 0, +1}` with at least one nonzero.
    pub fn new(y: Vec<i8>) -> Result<Self> {
        if y.iter().any(|&v| v < -1 || v > 1) {
            return Err(Error::InvalidParam(
                "labels must be -1, 0, or +1".into(),
            ));
        }
        if y.iter().all(|&v| v == 0) {
            return Err(Error::EmptyInput("label vector with no seeds"));
        }
        Ok(Self { y })
    }

    /// Builds seeds from binary labels: rows in `labeled` get +1/-1, all
    /// others 0.
    pub fn from_binary_seeds(n: usize, labels: &[u8], labeled: &[usize]) -> Result<Self> {
        let mut y = vec![0i8; n];
        for &i in labeled {
            if i >= n || i >= labels.len() {
                return Err(Error::InvalidParam(format!("seed index {i} out of range")));
            }
            y[i] = if labels[i] == 1 { 1 } else { -1 };
        }
        Self::new(y)
    }

    pub fn values(&self) -> &[i8] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Solver configuration. Defaults: `mu = 1`, `epsilon = 1e-10`,
/// `tol = 1e-6` on the max-norm of successive iterates, 1000 sweeps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub p: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl SolverConfig {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            mu: 1.0,
            epsilon: 1e-10,
            max_iters: 1000,
            tol: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidParam(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParam(format!(
                "mu must be > 0, got {}",
                self.mu
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParam(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParam(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParam("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Solver output. `converged = false` means the sweep budget ran out; the
/// final iterate and its residual are still returned.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// Diffused score per node.
    pub f: Vec<f64>,
    /// `sign(f_i)` with `sign(0) = -1` (no evidence means normal).
    pub classes: Vec<i8>,
    /// Sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm difference of the last two iterates.
    pub residual: f64,
}

/// Runs the Jacobi fixed-point diffusion until the max-norm step is below
/// `cfg.tol` or `cfg.max_iters` sweeps elapse.
pub fn solve_ssl(g: &SimilarityGraph, y: &LabelVector, cfg: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let n = g.n_nodes();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            what: "graph nodes vs labels",
            left: n,
            right: y.len(),
        });
    }
    let y_f: Vec<f64> = y.values().iter().map(|&v| v as f64).collect();
    let mut f: Vec<f64> = y_f.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    while iterations < cfg.max_iters {
        let variation = local_variation(g, &f, cfg.epsilon)?;
        let exponent: Vec<f64> = if cfg.p == 2.0 {
            vec![1.0; n]
        } else {
            variation.iter().map(|v| v.powf(cfg.p - 2.0)).collect()
        };

        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut m_sum = 0.0;
                let mut weighted = 0.0;
                for e in g.neighbors(j) {
                    let m = 0.5 * e.weight * (exponent[e.to] + exponent[j]);
                    m_sum += m;
                    weighted += m * f[e.to];
                }
                (weighted + cfg.mu * y_f[j]) / (m_sum + cfg.mu)
            })
            .collect();

        residual = f
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        f = next;
        iterations += 1;
        if residual < cfg.tol {
            converged = true;
            break;
        }
    }

    let classes = f.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).collect();
    Ok(SolveOutcome {
        f,
        classes,
        iterations,
        converged,
        residual,
    })
}
