//! Mixing matrices `W` and `W̃ = (W + I)/2`.
//!
//! Both weight rules produce a symmetric, row-stochastic `W` supported on the
//! graph's edges plus the diagonal. [`validate_assumption4`] checks the
//! conditions the convergence analysis places on the pair: sparsity,
//! symmetry, the null spaces of `W - W̃` and `I - W̃`, and the ordering
//! `(I + W̃)/2 ⪰ W̃ ⪰ W` with `W̃ ≻ 0`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Metropolis weights: `w_ij = 1 / (1 + max(d_i, d_j))` on edges and the
/// diagonal absorbs the remainder of each row.
pub fn metropolis_weights(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        let v = 1.0 / (1.0 + g.degree(i).max(g.degree(j)) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    w
}

pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        l[(i, j)] = -1.0;
        l[(j, i)] = -1.0;
    }
    for i in 0..n {
        l[(i, i)] = g.degree(i) as f64;
    }
    l
}

/// `W = I - τ L` for `0 < τ < 2 / λ_max(L)`.
pub fn laplacian_weights(g: &Graph, tau: f64) -> Result<DMatrix<f64>> {
    let l = laplacian(g);
    let lmax = linalg::lambda_max(&l);
    if !(tau > 0.0) || (lmax > 0.0 && tau >= 2.0 / lmax) {
        return Err(Error::param(
            "tau",
            format!("{tau} outside (0, {}) for this graph", 2.0 / lmax),
        ));
    }
    Ok(DMatrix::identity(g.n(), g.n()) - l * tau)
}

#[derive(Clone, Debug)]
pub struct MixingPair {
    w: DMatrix<f64>,
    wt: DMatrix<f64>,
    lambda_min_wt: f64,
}

impl MixingPair {
    /// Forms `W̃ = (W + I)/2` without any validation.
    pub fn from_weights(w: DMatrix<f64>) -> Self {
        let n = w.nrows();
        let wt = (&w + DMatrix::identity(n, n)) * 0.5;
        let lambda_min_wt = linalg::lambda_min(&wt);
        MixingPair {
            w,
            wt,
            lambda_min_wt,
        }
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn wt(&self) -> &DMatrix<f64> {
        &self.wt
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn lambda_min_wt(&self) -> f64 {
        self.lambda_min_wt
    }

    /// `I - W̃`, the matrix whose quadratic form measures consensus violation.
    pub fn i_minus_wt(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n(), self.n()) - &self.wt
    }
}

/// Builds the pair from `W` and rejects it unless every check passes at
/// [`DEFAULT_TOL`].
pub fn make_pair(w: DMatrix<f64>, g: &Graph) -> Result<MixingPair> {
    if w.nrows() != g.n() || w.ncols() != g.n() {
        return Err(Error::Dimension(format!(
            "weight matrix is {}x{}, graph has {} nodes",
            w.nrows(),
            w.ncols(),
            g.n()
        )));
    }
    let pair = MixingPair::from_weights(w);
    let report = validate_assumption4(&pair, g, DEFAULT_TOL);
    if !report.all_passed() {
        return Err(Error::Mixing(report.to_string()));
    }
    Ok(pair)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// The measured quantity the check compared against its tolerance.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "ok" } else { "FAILED" };
            writeln!(f, "{:<24} {:>6}  ({:.3e})", c.name, tag, c.value)?;
        }
        Ok(())
    }
}

pub fn validate_assumption4(p: &MixingPair, g: &Graph, tol: f64) -> ValidationReport {
    let n = p.n();
    let (w, wt) = (&p.w, &p.wt);
    let mut checks = Vec::new();
    let mut push = |name, passed, value| checks.push(Check { name, passed, value });

    let mut off_pattern = 0.0f64;
    if g.n() == n {
        for i in 0..n {
            for j in 0..n {
                if i != j && !g.has_edge(i, j) {
                    off_pattern = off_pattern.max(w[(i, j)].abs()).max(wt[(i, j)].abs());
                }
            }
        }
        push("decentralized", off_pattern <= tol, off_pattern);
    } else {
        push("decentralized", false, f64::INFINITY);
    }

    let asym = linalg::max_abs_asymmetry(w).max(linalg::max_abs_asymmetry(wt));
    push("symmetry", asym <= tol, asym);

    let ones = DVector::from_element(n, 1.0);
    let row_err = (wt * &ones - &ones).amax();
    push("row_sums", row_err <= tol, row_err);

    let diff = w - wt;
    let diff_ones = (&diff * &ones).amax();
    let rank = linalg::sym_eigenvalues(&diff)
        .iter()
        .filter(|v| v.abs() > tol)
        .count();
    push(
        "null_space_w_minus_wt",
        diff_ones <= tol && rank + 1 == n,
        rank as f64,
    );

    let i_minus_wt = p.i_minus_wt();
    let null_err = (&i_minus_wt * &ones).amax();
    push("null_space_i_minus_wt", null_err <= tol, null_err);

    push("wt_positive_definite", p.lambda_min_wt > tol, p.lambda_min_wt);

    let upper = linalg::lambda_min(&(i_minus_wt * 0.5));
    push("spectral_upper", upper >= -tol, upper);

    let lower = linalg::lambda_min(&(wt - w));
    push("spectral_lower", lower >= -tol, lower);

    ValidationReport { checks }
}

/// A graph together with its mixing pair, plus per-agent weight lists over
/// `N_i ∪ {i}` so agent updates touch only neighborhood rows.
#[derive(Clone, Debug)]
pub struct Network {
    graph: Graph,
    mixing: MixingPair,
    neighborhoods: Vec<Vec<(usize, f64)>>,
}

impl Network {
    pub fn new(graph: Graph, mixing: MixingPair) -> Result<Self> {
        if graph.n() != mixing.n() {
            return Err(Error::Dimension(format!(
                "graph has {} nodes, mixing matrix is {}x{}",
                graph.n(),
                mixing.n(),
                mixing.n()
            )));
        }
        let neighborhoods = (0..graph.n())
            .map(|i| {
                let mut hood: Vec<usize> = graph.neighbors(i).unwrap().to_vec();
                hood.push(i);
                hood.sort_unstable();
                hood.into_iter().map(|j| (j, mixing.wt[(i, j)])).collect()
            })
            .collect();
        Ok(Network {
            graph,
            mixing,
            neighborhoods,
        })
    }

    /// Metropolis weights on a connected graph, validated.
    pub fn metropolis(graph: Graph) -> Result<Self> {
        if !graph.is_connected() {
            return Err(Error::param("graph", "must be connected"));
        }
        let pair = make_pair(metropolis_weights(&graph), &graph)?;
        Network::new(graph, pair)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn mixing(&self) -> &MixingPair {
        &self.mixing
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// `(j, w̃_ij)` for every `j ∈ N_i ∪ {i}`, ascending in `j`.
    pub fn neighborhood(&self, i: usize) -> &[(usize, f64)] {
        &self.neighborhoods[i]
    }
}
