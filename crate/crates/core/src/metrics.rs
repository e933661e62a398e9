//! KKT residuals and the summability bound for EXTRA-type methods.
//!
//! For a `d × n` stack `X` (column `i` = agent `i`), the two residuals are
//!
//! - consensus: `tr(X (I - W̃) Xᵀ)`, zero iff all agents agree;
//! - stationarity: `‖∇f(X) + Q*‖²_F` with `Q* = -∇f(X*)`.
//!
//! Under `α ≤ λ_min(W̃)/L` the weighted running sum
//! `Σ_{t=1..k} (1/α)·consensus_t + (1/L)·stationarity_t` stays below
//! `(1/α)‖X⁰ - X*‖²_W̃ + α‖Q⁰ + ∇f(X*)‖²_{(I - W̃)†}` for every `k`.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::mixing::MixingPair;
use crate::problem::Problem;

/// Eigenvalues of `I - W̃` at or below this fraction of the largest are
/// treated as zero in the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationMetrics {
    pub k: usize,
    pub consensus_residual: f64,
    pub grad_residual: f64,
    pub rel_error: f64,
    /// `‖Σ_i q_i‖`, zero when the dual stays in `Range(I - W̃)`.
    pub dual_mean_norm: f64,
    /// Running left-hand side of the summability bound, over `t = 1..=k`.
    pub cumulative_kkt_sum: f64,
    /// Inner subsolver iterations summed over agents (bundle EXTRA only).
    pub inner_iters_total: usize,
    /// Agents whose subsolver hit its iteration budget this round.
    pub inner_warnings: usize,
}

/// `tr(X M Xᵀ)` for symmetric `M`, evaluated as
/// `Σ_{i<j} -M_ij ‖x_i - x_j‖² + Σ_i (Σ_j M_ij) ‖x_i‖²`.
/// For `M = I - W̃` the second sum vanishes and the first avoids the
/// cancellation a direct product suffers near consensus.
pub fn quadratic_form_pairwise(x: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let row_sum: f64 = m.row(i).sum();
        if row_sum != 0.0 {
            total += row_sum * x.column(i).norm_squared();
        }
        for j in i + 1..n {
            let w = m[(i, j)];
            if w != 0.0 {
                total -= w * (x.column(i) - x.column(j)).norm_squared();
            }
        }
    }
    total
}

/// Reference quantities shared by every metric of a run.
#[derive(Clone, Debug)]
pub struct KktReference {
    pub x_star: DVector<f64>,
    /// `X*`, every column equal to `x*`.
    pub x_star_stack: DMatrix<f64>,
    /// `Q* = -∇f(X*)`.
    pub q_star: DMatrix<f64>,
    i_minus_wt: DMatrix<f64>,
    pub smoothness: f64,
}

impl KktReference {
    pub fn new(problem: &Problem, mixing: &MixingPair, x_star: DVector<f64>) -> Self {
        let x_star_stack = problem.consensus_stack(&x_star);
        let q_star = -problem.stacked_gradient(&x_star_stack);
        KktReference {
            x_star,
            x_star_stack,
            q_star,
            i_minus_wt: mixing.i_minus_wt(),
            smoothness: problem.smoothness(),
        }
    }

    pub fn i_minus_wt(&self) -> &DMatrix<f64> {
        &self.i_minus_wt
    }

    /// `(consensus, stationarity)` given `∇f(X)`.
    pub fn residuals(&self, x: &DMatrix<f64>, grad: &DMatrix<f64>) -> (f64, f64) {
        let consensus = quadratic_form_pairwise(x, &self.i_minus_wt).max(0.0);
        let stationarity = (grad + &self.q_star).norm_squared();
        (consensus, stationarity)
    }

    pub fn rel_error(&self, x: &DMatrix<f64>) -> f64 {
        let denom = self.x_star_stack.norm();
        let num = (x - &self.x_star_stack).norm();
        if denom > 0.0 {
            num / denom
        } else {
            num
        }
    }

    /// Summand of the bound's left-hand side at one iterate.
    pub fn kkt_term(&self, consensus: f64, stationarity: f64, alpha: f64) -> f64 {
        consensus / alpha
            + if self.smoothness > 0.0 {
                stationarity / self.smoothness
            } else {
                0.0
            }
    }
}

/// `(tr(X (I - W̃) Xᵀ), ‖∇f(X) + Q*‖²_F)`.
pub fn kkt_residuals(
    x: &DMatrix<f64>,
    q_star: &DMatrix<f64>,
    mixing: &MixingPair,
    problem: &Problem,
) -> (f64, f64) {
    let grad = problem.stacked_gradient(x);
    let consensus = quadratic_form_pairwise(x, &mixing.i_minus_wt()).max(0.0);
    (consensus, (grad + q_star).norm_squared())
}

/// `(1/α)‖X⁰ - X*‖²_W̃ + α‖Q⁰ + ∇f(X*)‖²_{(I - W̃)†}`.
pub fn theorem1_bound(
    x0: &DMatrix<f64>,
    q0: &DMatrix<f64>,
    x_star: &DVector<f64>,
    mixing: &MixingPair,
    alpha: f64,
    problem: &Problem,
) -> f64 {
    let x_star_stack = problem.consensus_stack(x_star);
    let grad_star = problem.stacked_gradient(&x_star_stack);
    let dx = x0 - &x_star_stack;
    let primal = (&dx * mixing.wt()).dot(&dx) / alpha;
    let v = q0 + grad_star;
    let pinv = linalg::sym_pinv(&mixing.i_minus_wt(), PINV_CUTOFF);
    let dual = alpha * (&v * pinv).dot(&v);
    primal.max(0.0) + dual.max(0.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RateRow {
    pub k: usize,
    pub min_consensus: f64,
    pub min_grad: f64,
    pub avg_consensus: f64,
    pub avg_grad: f64,
    pub k_min_consensus: f64,
    pub k_min_grad: f64,
    pub k_avg_consensus: f64,
    pub k_avg_grad: f64,
}

/// Prefix minima and running averages of both residuals over `t = 1..=k`,
/// along with the same quantities scaled by `k`. Row `k = 0` carries the
/// initial residuals and zero scaled values.
pub fn rate_statistics(trajectory: &[IterationMetrics]) -> Vec<RateRow> {
    let mut rows = Vec::with_capacity(trajectory.len());
    let mut min_c = f64::INFINITY;
    let mut min_g = f64::INFINITY;
    let mut sum_c = 0.0;
    let mut sum_g = 0.0;
    let mut count = 0usize;
    for m in trajectory {
        if m.k == 0 {
            rows.push(RateRow {
                k: 0,
                min_consensus: m.consensus_residual,
                min_grad: m.grad_residual,
                avg_consensus: m.consensus_residual,
                avg_grad: m.grad_residual,
                ..RateRow::default()
            });
            continue;
        }
        count += 1;
        min_c = min_c.min(m.consensus_residual);
        min_g = min_g.min(m.grad_residual);
        sum_c += m.consensus_residual;
        sum_g += m.grad_residual;
        let k = m.k as f64;
        let (avg_c, avg_g) = (sum_c / count as f64, sum_g / count as f64);
        rows.push(RateRow {
            k: m.k,
            min_consensus: min_c,
            min_grad: min_g,
            avg_consensus: avg_c,
            avg_grad: avg_g,
            k_min_consensus: k * min_c,
            k_min_grad: k * min_g,
            k_avg_consensus: k * avg_c,
            k_avg_grad: k * avg_g,
        });
    }
    rows
}
