//! Per-agent objectives and the stacked consensus problem.
//!
//! Agent `i` holds a smooth convex `f_i`, reachable only through an
//! [`ObjectiveOracle`]. Stacked quantities use a `d × n` matrix whose column
//! `i` is agent `i`'s vector.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg;

pub trait ObjectiveOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.value(x), self.gradient(x))
    }

    /// Lipschitz constant of the gradient.
    fn smoothness(&self) -> f64;

    /// A lower bound on `min f_i`, or `None` when none is known.
    fn lower_bound(&self) -> Option<f64>;

    /// `(H, g)` with `∇f(x) = H x - g` when the objective is quadratic.
    fn quadratic_form(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        None
    }
}

/// `f(x) = (s/2) ‖P x - q‖²` where `s` is the per-agent weight (`1/n` in the
/// decentralized least-squares workload).
#[derive(Clone, Debug)]
pub struct LeastSquares {
    p: DMatrix<f64>,
    q: DVector<f64>,
    weight: f64,
    smoothness: f64,
}

impl LeastSquares {
    pub fn new(p: DMatrix<f64>, q: DVector<f64>, weight: f64) -> Result<Self> {
        if p.nrows() != q.len() {
            return Err(Error::Dimension(format!(
                "P has {} rows but q has length {}",
                p.nrows(),
                q.len()
            )));
        }
        if !(weight > 0.0) {
            return Err(Error::param("weight", "must be positive"));
        }
        if p.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("least-squares data"));
        }
        // λ_max(PᵀP) = λ_max(PPᵀ); the latter is the smaller matrix when rows < cols.
        let gram = if p.nrows() <= p.ncols() {
            &p * p.transpose()
        } else {
            p.transpose() * &p
        };
        let smoothness = weight * linalg::lambda_max(&gram).max(0.0);
        Ok(LeastSquares {
            p,
            q,
            weight,
            smoothness,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.q
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.p * x - &self.q
    }
}

impl ObjectiveOracle for LeastSquares {
    fn dim(&self) -> usize {
        self.p.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.weight * self.residual(x).norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.p.tr_mul(&self.residual(x)) * self.weight
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let r = self.residual(x);
        (
            0.5 * self.weight * r.norm_squared(),
            self.p.tr_mul(&r) * self.weight,
        )
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn quadratic_form(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        Some((
            self.p.tr_mul(&self.p) * self.weight,
            self.p.tr_mul(&self.q) * self.weight,
        ))
    }
}

/// `f(x) = ½ xᵀ H x - gᵀ x + c` with `H` symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct Quadratic {
    h: DMatrix<f64>,
    g: DVector<f64>,
    constant: f64,
    lower_bound: Option<f64>,
    smoothness: f64,
}

impl Quadratic {
    pub fn new(h: DMatrix<f64>, g: DVector<f64>, constant: f64) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() != g.len() {
            return Err(Error::Dimension("H must be square and match g".into()));
        }
        let eig = linalg::sym_eigenvalues(&h);
        let lmin = eig.first().copied().unwrap_or(0.0);
        if lmin < -1e-12 * eig.last().copied().unwrap_or(1.0).abs().max(1.0) {
            return Err(Error::param("h", "must be positive semidefinite"));
        }
        let smoothness = eig.last().copied().unwrap_or(0.0).max(0.0);
        // The minimum is attained only when g ∈ Range(H); otherwise f is unbounded below.
        let x = linalg::sym_solve(&h, &g);
        let lower_bound = ((&h * &x - &g).norm() <= 1e-9 * (1.0 + g.norm()))
            .then(|| -0.5 * g.dot(&x) + constant);
        Ok(Quadratic {
            h,
            g,
            constant,
            lower_bound,
            smoothness,
        })
    }

    /// `f(x) = (w/2) ‖x - c‖²`.
    pub fn isotropic(center: DVector<f64>, weight: f64) -> Result<Self> {
        let d = center.len();
        let constant = 0.5 * weight * center.norm_squared();
        Quadratic::new(DMatrix::identity(d, d) * weight, center * weight, constant)
    }

    pub fn zero(d: usize) -> Self {
        Quadratic::new(DMatrix::zeros(d, d), DVector::zeros(d), 0.0).unwrap()
    }
}

impl ObjectiveOracle for Quadratic {
    fn dim(&self) -> usize {
        self.g.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) - self.g.dot(x) + self.constant
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.h * x - &self.g
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn lower_bound(&self) -> Option<f64> {
        self.lower_bound
    }

    fn quadratic_form(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        Some((self.h.clone(), self.g.clone()))
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    oracles: Vec<Arc<dyn ObjectiveOracle>>,
    dim: usize,
    smoothness: f64,
    reference_optimum: Option<DVector<f64>>,
}

impl Problem {
    pub fn new(oracles: Vec<Arc<dyn ObjectiveOracle>>) -> Result<Self> {
        let dim = oracles
            .first()
            .ok_or_else(|| Error::param("oracles", "need at least one agent"))?
            .dim();
        if let Some(bad) = oracles.iter().position(|o| o.dim() != dim) {
            return Err(Error::Dimension(format!(
                "agent {bad} has dimension {}, expected {dim}",
                oracles[bad].dim()
            )));
        }
        let smoothness = oracles.iter().map(|o| o.smoothness()).fold(0.0, f64::max);
        Ok(Problem {
            oracles,
            dim,
            smoothness,
            reference_optimum: None,
        })
    }

    pub fn with_reference_optimum(mut self, x: DVector<f64>) -> Result<Self> {
        if x.len() != self.dim {
            return Err(Error::Dimension("reference optimum length".into()));
        }
        self.reference_optimum = Some(x);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.oracles.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn oracle(&self, i: usize) -> &dyn ObjectiveOracle {
        self.oracles[i].as_ref()
    }

    pub fn oracles(&self) -> &[Arc<dyn ObjectiveOracle>] {
        &self.oracles
    }

    /// Global smoothness `L = max_i L_i`.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn reference_optimum(&self) -> Option<&DVector<f64>> {
        self.reference_optimum.as_ref()
    }

    /// `f(x) = Σ f_i(x_i)` for a `d × n` stack.
    pub fn stacked_value(&self, x: &DMatrix<f64>) -> f64 {
        self.oracles
            .iter()
            .enumerate()
            .map(|(i, o)| o.value(&x.column(i).into_owned()))
            .sum()
    }

    /// Column `i` holds `∇f_i(x_i)`.
    pub fn stacked_gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim, self.n());
        for (i, o) in self.oracles.iter().enumerate() {
            g.set_column(i, &o.gradient(&x.column(i).into_owned()));
        }
        g
    }

    /// Stack with every column equal to `x`.
    pub fn consensus_stack(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.n(), |r, _| x[r])
    }

    /// SHA-256 over everything that identifies the instance as seen through
    /// its oracles: dimensions, constants, quadratic data when available,
    /// and value/gradient at a fixed probe point.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let mut feed = |v: f64| h.update(v.to_le_bytes());
        feed(self.n() as f64);
        feed(self.dim as f64);
        let probe = DVector::from_fn(self.dim, |r, _| 1.0 + r as f64 * 1e-3);
        for o in &self.oracles {
            feed(o.smoothness());
            feed(o.lower_bound().unwrap_or(f64::NEG_INFINITY));
            if let Some((hm, g)) = o.quadratic_form() {
                hm.iter().chain(g.iter()).for_each(|&v| feed(v));
            }
            let (v, g) = o.value_and_gradient(&probe);
            feed(v);
            g.iter().for_each(|&v| feed(v));
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Largest per-agent smoothness constant.
pub fn smoothness_constant(p: &Problem) -> f64 {
    p.smoothness()
}

/// The decentralized least-squares workload: agent `i` holds
/// `f_i(x) = (1/2n) ‖P_i x - q_i‖²` with `P_i ∈ R^{eta×d}` entries drawn from
/// a Gaussian with mean 2 and variance 2, and `q_i` entries with mean 1 and
/// variance 0.5. The reference optimum is attached.
pub fn least_squares_instance(n: usize, d: usize, eta: usize, seed: u64) -> Result<Problem> {
    for (name, v) in [("n", n), ("d", d), ("eta", eta)] {
        if v == 0 {
            return Err(Error::param(name, "must be at least 1"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_dist = Normal::new(2.0, 2.0f64.sqrt()).unwrap();
    let q_dist = Normal::new(1.0, 0.5f64.sqrt()).unwrap();
    let weight = 1.0 / n as f64;
    let mut oracles: Vec<Arc<dyn ObjectiveOracle>> = Vec::with_capacity(n);
    for _ in 0..n {
        let p = DMatrix::from_fn(eta, d, |_, _| p_dist.sample(&mut rng));
        let q = DVector::from_fn(eta, |_, _| q_dist.sample(&mut rng));
        oracles.push(Arc::new(LeastSquares::new(p, q, weight)?));
    }
    let problem = Problem::new(oracles)?;
    let x_star = global_optimum_least_squares(&problem)?;
    problem.with_reference_optimum(x_star)
}

/// Minimizer of `Σ f_i` for quadratic agents, from the normal equations
/// `(Σ H_i) x = Σ g_i`. Singular systems go through the pseudoinverse.
pub fn global_optimum_least_squares(p: &Problem) -> Result<DVector<f64>> {
    let d = p.dim();
    let mut h_sum = DMatrix::zeros(d, d);
    let mut g_sum = DVector::zeros(d);
    for (i, o) in p.oracles().iter().enumerate() {
        let (h, g) = o.quadratic_form().ok_or_else(|| {
            Error::param("problem", format!("agent {i} has no quadratic form"))
        })?;
        h_sum += h;
        g_sum += g;
    }
    let mut x = linalg::sym_solve(&h_sum, &g_sum);
    // One step of iterative refinement tightens the stationarity residual.
    let r = &g_sum - &h_sum * &x;
    x += linalg::sym_solve(&h_sum, &r);
    Ok(x)
}
