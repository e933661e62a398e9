//! EXTRA and bundle EXTRA as synchronous rounds over a network.
//!
//! Both methods share the primal-dual form
//!
//! ```text
//! x_i^{k+1} = argmin_x  model_i^k(x) + ⟨q_i^k, x⟩ + (1/2α) ‖x - Σ_j w̃_ij x_j^k‖²
//! q_i^{k+1} = q_i^k + (1/α) (x_i^{k+1} - Σ_j w̃_ij x_j^{k+1})
//! ```
//!
//! with `q^0 = (1/α)(I - W̃) x^0`. EXTRA uses the linearization of `f_i` at
//! `x_i^k` as the model, which gives the closed form
//! `x_i^{k+1} = Σ_j w̃_ij x_j^k - α (∇f_i(x_i^k) + q_i^k)`. Bundle EXTRA uses
//! a [`CutSet`] and calls the subsolver.
//!
//! Inside a round every agent update is a pure function of the published
//! previous round and the agent's own state, so agents run in parallel with
//! a barrier between the primal and the dual phase. Results do not depend on
//! the number of threads.

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bundle::{CutSet, ModelKind};
use crate::error::{Error, Result};
use crate::metrics::{theorem1_bound, IterationMetrics, KktReference};
use crate::mixing::Network;
use crate::problem::Problem;
use crate::subsolver::{self, SolveStatus, SolverOptions};

/// `‖x^k‖_F` beyond this multiple of the initial scale counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Extra,
    BundleExtra(ModelKind),
}

impl Algorithm {
    /// `extra` or `bundle:<model label>`.
    pub fn label(&self) -> String {
        match self {
            Algorithm::Extra => "extra".into(),
            Algorithm::BundleExtra(kind) => format!("bundle:{}", kind.label()),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "extra" {
            return Ok(Algorithm::Extra);
        }
        match s.strip_prefix("bundle:") {
            Some(model) => Ok(Algorithm::BundleExtra(ModelKind::parse(model)?)),
            None => Err(Error::param("algorithm", format!("unknown arm `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialPoint {
    Zeros,
    /// Entries uniform in `[-scale, scale]`.
    Random { seed: u64, scale: f64 },
    Given(DMatrix<f64>),
}

impl InitialPoint {
    pub fn build(&self, d: usize, n: usize) -> Result<DMatrix<f64>> {
        match self {
            InitialPoint::Zeros => Ok(DMatrix::zeros(d, n)),
            InitialPoint::Random { seed, scale } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(DMatrix::from_fn(d, n, |_, _| rng.random_range(-*scale..=*scale)))
            }
            InitialPoint::Given(x) => {
                if x.shape() != (d, n) {
                    return Err(Error::Dimension(format!(
                        "initial point is {:?}, expected ({d}, {n})",
                        x.shape()
                    )));
                }
                Ok(x.clone())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub max_iters: usize,
    pub inner: SolverOptions,
    pub x0: InitialPoint,
    /// Size of a dedicated thread pool; `None` runs in the caller's pool.
    pub threads: Option<usize>,
    /// Stop as soon as `rel_error` drops to this level.
    pub stop_at_rel_error: Option<f64>,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, alpha: f64, max_iters: usize) -> Self {
        RunConfig {
            algorithm,
            alpha,
            max_iters,
            inner: SolverOptions::default(),
            x0: InitialPoint::Zeros,
            threads: None,
            stop_at_rel_error: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.inner.tol > 0.0) {
            return Err(Error::param("inner_tol", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::param("threads", "must be at least 1"));
        }
        Ok(())
    }
}

/// Receives every cross-agent read made during a round: `agent` read the
/// published row of `read`.
pub trait AccessAudit: Sync {
    fn record(&self, agent: usize, read: usize);
}

pub struct NoAudit;

impl AccessAudit for NoAudit {
    fn record(&self, _: usize, _: usize) {}
}

/// The iterate one round published, seen from a single agent.
struct Published<'a> {
    x: &'a DMatrix<f64>,
    agent: usize,
    audit: &'a dyn AccessAudit,
}

impl<'a> Published<'a> {
    fn row(&self, j: usize) -> DVectorView<'a, f64> {
        self.audit.record(self.agent, j);
        self.x.column(j)
    }

    /// `Σ_{j ∈ N_i ∪ {i}} w̃_ij x_j`.
    fn mix(&self, network: &Network) -> DVector<f64> {
        let mut acc = DVector::zeros(self.x.nrows());
        for &(j, w) in network.neighborhood(self.agent) {
            acc.axpy(w, &self.row(j), 1.0);
        }
        acc
    }
}

fn published<'a>(x: &'a DMatrix<f64>, agent: usize, audit: &'a dyn AccessAudit) -> Published<'a> {
    Published { x, agent, audit }
}

fn stack_columns(d: usize, cols: Vec<DVector<f64>>) -> DMatrix<f64> {
    let n = cols.len();
    let mut out = DMatrix::zeros(d, n);
    for (i, c) in cols.into_iter().enumerate() {
        out.set_column(i, &c);
    }
    out
}

/// Per-agent bundle state carried between rounds.
#[derive(Clone, Debug)]
pub struct AgentBundle {
    pub model: CutSet,
    /// Multipliers of the last subproblem keyed by piece id.
    warm: Vec<(u64, f64)>,
}

#[derive(Clone, Debug)]
pub struct RunState {
    pub k: usize,
    /// `d × n`, column `i` is `x_i^k`.
    pub x: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// `∇f_i(x_i^k)` by column.
    pub grad: DMatrix<f64>,
    pub values: Vec<f64>,
    /// One entry per agent for bundle EXTRA, empty for EXTRA.
    pub agents: Vec<AgentBundle>,
}

/// Outcome of one round beyond the new state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepReport {
    pub inner_iters_total: usize,
    pub inner_warnings: usize,
}

fn evaluate_all(problem: &Problem, x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let pairs: Vec<(f64, DVector<f64>)> = (0..problem.n())
        .into_par_iter()
        .map(|i| problem.oracle(i).value_and_gradient(&x.column(i).into_owned()))
        .collect();
    let mut grad = DMatrix::zeros(problem.dim(), problem.n());
    let mut values = Vec::with_capacity(pairs.len());
    for (i, (v, g)) in pairs.into_iter().enumerate() {
        values.push(v);
        grad.set_column(i, &g);
    }
    (values, grad)
}

/// `q_i = q_i^prev + (1/α)(x_i - Σ_j w̃_ij x_j)` for every agent, reading only
/// the freshly published `x`.
fn dual_update(
    network: &Network,
    x: &DMatrix<f64>,
    q_prev: Option<&DMatrix<f64>>,
    alpha: f64,
    audit: &dyn AccessAudit,
) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..network.n())
        .into_par_iter()
        .map(|i| {
            let view = published(x, i, audit);
            let mixed = view.mix(network);
            let mut q = (view.row(i) - mixed) / alpha;
            if let Some(prev) = q_prev {
                q += prev.column(i);
            }
            q
        })
        .collect();
    stack_columns(x.nrows(), cols)
}

impl RunState {
    /// `x^0`, `q^0 = (1/α)(I - W̃) x^0`, gradients at `x^0` and, for bundle
    /// EXTRA, each agent's model at `x_i^0`.
    pub fn initialize(
        problem: &Problem,
        network: &Network,
        algorithm: Algorithm,
        alpha: f64,
        x0: DMatrix<f64>,
    ) -> Result<Self> {
        if x0.shape() != (problem.dim(), problem.n()) || network.n() != problem.n() {
            return Err(Error::Dimension(format!(
                "x0 {:?}, problem d={} n={}, network n={}",
                x0.shape(),
                problem.dim(),
                problem.n(),
                network.n()
            )));
        }
        let q = dual_update(network, &x0, None, alpha, &NoAudit);
        let (values, grad) = evaluate_all(problem, &x0);
        let agents = match algorithm {
            Algorithm::Extra => Vec::new(),
            Algorithm::BundleExtra(kind) => (0..problem.n())
                .map(|i| {
                    let model = CutSet::new(
                        kind,
                        problem.oracle(i).lower_bound(),
                        &x0.column(i).into_owned(),
                        values[i],
                        &grad.column(i).into_owned(),
                    )?;
                    Ok(AgentBundle {
                        model,
                        warm: Vec::new(),
                    })
                })
                .collect::<Result<_>>()?,
        };
        Ok(RunState {
            k: 0,
            x: x0,
            q,
            grad,
            values,
            agents,
        })
    }

    /// `Σ_i q_i`, which stays zero along any run.
    pub fn dual_sum(&self) -> DVector<f64> {
        self.q.column_sum()
    }
}

/// One EXTRA round in primal-dual form.
pub fn extra_primal_dual_step(
    state: &mut RunState,
    network: &Network,
    problem: &Problem,
    alpha: f64,
    audit: &dyn AccessAudit,
) -> Result<StepReport> {
    let x_prev = &state.x;
    let cols: Vec<DVector<f64>> = (0..network.n())
        .into_par_iter()
        .map(|i| {
            let view = published(x_prev, i, audit);
            let own = state.grad.column(i) + state.q.column(i);
            view.mix(network) - own * alpha
        })
        .collect();
    let x_next = stack_columns(problem.dim(), cols);
    finish_round(state, network, problem, alpha, x_next, audit)
}

/// One bundle EXTRA round: each agent solves its prox subproblem around
/// `c_i = Σ_j w̃_ij x_j^k - α q_i^k`, then duals are updated, then each model
/// absorbs the cut at the new iterate.
pub fn bundle_extra_step(
    state: &mut RunState,
    network: &Network,
    problem: &Problem,
    alpha: f64,
    inner: &SolverOptions,
    audit: &dyn AccessAudit,
) -> Result<StepReport> {
    if state.agents.len() != network.n() {
        return Err(Error::param("state", "bundle EXTRA needs per-agent models"));
    }
    let x_prev = &state.x;
    let solved: Vec<Result<(DVector<f64>, Vec<(u64, f64)>, usize, bool)>> = (0..network.n())
        .into_par_iter()
        .map(|i| {
            let agent = &state.agents[i];
            let view = published(x_prev, i, audit);
            let center = view.mix(network) - state.q.column(i) * alpha;
            let inst = agent.model.to_instance(center, alpha)?;
            let ids = agent.model.piece_ids();
            let warm = warm_start(&ids, &agent.warm);
            let sol = subsolver::solve_warm(&inst, inner, warm.as_ref())?;
            let keyed = ids.into_iter().zip(sol.lambda.iter().copied()).collect();
            Ok((sol.x, keyed, sol.inner_iters, sol.status != SolveStatus::Converged))
        })
        .collect();

    let mut report = StepReport::default();
    let mut cols = Vec::with_capacity(solved.len());
    for (agent, item) in state.agents.iter_mut().zip(solved) {
        let (x, keyed, iters, warned) = item?;
        agent.warm = keyed;
        report.inner_iters_total += iters;
        report.inner_warnings += usize::from(warned);
        cols.push(x);
    }
    let x_next = stack_columns(problem.dim(), cols);
    finish_round(state, network, problem, alpha, x_next, audit)?;

    let updates: Vec<Result<()>> = state
        .agents
        .par_iter_mut()
        .enumerate()
        .map(|(i, agent)| {
            agent.model.update_model(
                &state.x.column(i).into_owned(),
                state.values[i],
                &state.grad.column(i).into_owned(),
            )
        })
        .collect();
    updates.into_iter().collect::<Result<Vec<()>>>()?;
    Ok(report)
}

fn warm_start(ids: &[u64], prev: &[(u64, f64)]) -> Option<DVector<f64>> {
    if prev.is_empty() {
        return None;
    }
    let v = DVector::from_iterator(
        ids.len(),
        ids.iter()
            .map(|id| prev.iter().find(|(p, _)| p == id).map_or(0.0, |&(_, l)| l)),
    );
    (v.max() > 0.0).then_some(v)
}

/// Publishes `x^{k+1}`, runs the dual phase and refreshes gradients.
fn finish_round(
    state: &mut RunState,
    network: &Network,
    problem: &Problem,
    alpha: f64,
    x_next: DMatrix<f64>,
    audit: &dyn AccessAudit,
) -> Result<StepReport> {
    if x_next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("iterate"));
    }
    state.q = dual_update(network, &x_next, Some(&state.q), alpha, audit);
    let (values, grad) = evaluate_all(problem, &x_next);
    state.x = x_next;
    state.values = values;
    state.grad = grad;
    state.k += 1;
    Ok(StepReport::default())
}

/// State of the two-step recursion
/// `x^{k+2} = 2W̃ x^{k+1} - W̃ x^k - α (∇f(x^{k+1}) - ∇f(x^k))`.
#[derive(Clone, Debug)]
pub struct RecursionState {
    pub k: usize,
    pub x: DMatrix<f64>,
    pub grad: DMatrix<f64>,
    prev: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl RecursionState {
    pub fn new(problem: &Problem, x0: DMatrix<f64>) -> Self {
        let grad = problem.stacked_gradient(&x0);
        RecursionState {
            k: 0,
            x: x0,
            grad,
            prev: None,
        }
    }
}

/// One step of the EXTRA recursion. The first step is
/// `x^1 = W x^0 - α ∇f(x^0)` with `W = 2W̃ - I`.
pub fn extra_recursion_step(
    state: &mut RecursionState,
    network: &Network,
    problem: &Problem,
    alpha: f64,
) {
    let cols: Vec<DVector<f64>> = (0..network.n())
        .into_par_iter()
        .map(|i| {
            let now = published(&state.x, i, &NoAudit);
            let mixed_now = now.mix(network);
            match &state.prev {
                None => mixed_now * 2.0 - now.row(i) - state.grad.column(i) * alpha,
                Some((x_prev, g_prev)) => {
                    let before = published(x_prev, i, &NoAudit);
                    mixed_now * 2.0
                        - before.mix(network)
                        - (state.grad.column(i) - g_prev.column(i)) * alpha
                }
            }
        })
        .collect();
    let x_next = stack_columns(problem.dim(), cols);
    let grad_next = problem.stacked_gradient(&x_next);
    let x_old = std::mem::replace(&mut state.x, x_next);
    let g_old = std::mem::replace(&mut state.grad, grad_next);
    state.prev = Some((x_old, g_old));
    state.k += 1;
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// One row per completed iterate, starting with `k = 0`.
    pub trajectory: Vec<IterationMetrics>,
    pub state: RunState,
    pub diverged: bool,
    /// First `k` at which `rel_error` reached the configured stop level.
    pub reached_tol_at: Option<usize>,
    /// Right-hand side of the summability bound for this run's `x^0, q^0`.
    pub bound: f64,
}

impl RunOutput {
    pub fn final_metrics(&self) -> &IterationMetrics {
        self.trajectory.last().expect("trajectory always holds k = 0")
    }
}

pub fn run(problem: &Problem, network: &Network, config: &RunConfig) -> Result<RunOutput> {
    run_with_audit(problem, network, config, &NoAudit)
}

/// [`run`] with every cross-agent read reported to `audit`.
pub fn run_with_audit(
    problem: &Problem,
    network: &Network,
    config: &RunConfig,
    audit: &dyn AccessAudit,
) -> Result<RunOutput> {
    config.validate()?;
    match config.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::param("threads", e.to_string()))?;
            pool.install(|| run_inner(problem, network, config, audit))
        }
        None => run_inner(problem, network, config, audit),
    }
}

fn run_inner(
    problem: &Problem,
    network: &Network,
    config: &RunConfig,
    audit: &dyn AccessAudit,
) -> Result<RunOutput> {
    let x_star = problem
        .reference_optimum()
        .ok_or_else(|| Error::param("problem", "metrics need a reference optimum"))?
        .clone();
    let alpha = config.alpha;
    let x0 = config.x0.build(problem.dim(), problem.n())?;
    let scale = x0.norm().max(1.0);
    let mut state = RunState::initialize(problem, network, config.algorithm, alpha, x0)?;
    let reference = KktReference::new(problem, network.mixing(), x_star);
    let bound = theorem1_bound(
        &state.x,
        &state.q,
        &reference.x_star,
        network.mixing(),
        alpha,
        problem,
    );

    let mut cumulative = 0.0;
    let mut trajectory = Vec::with_capacity(config.max_iters + 1);
    let record = |state: &RunState, cumulative: &mut f64, report: StepReport| {
        let (consensus, grad_res) = reference.residuals(&state.x, &state.grad);
        if state.k > 0 {
            *cumulative += reference.kkt_term(consensus, grad_res, alpha);
        }
        IterationMetrics {
            k: state.k,
            consensus_residual: consensus,
            grad_residual: grad_res,
            rel_error: reference.rel_error(&state.x),
            dual_mean_norm: state.dual_sum().norm(),
            cumulative_kkt_sum: *cumulative,
            inner_iters_total: report.inner_iters_total,
            inner_warnings: report.inner_warnings,
        }
    };
    trajectory.push(record(&state, &mut cumulative, StepReport::default()));

    let reached = |m: &IterationMetrics| config.stop_at_rel_error.is_some_and(|t| m.rel_error <= t);
    let mut reached_tol_at = reached(&trajectory[0]).then_some(0);
    let mut diverged = false;

    while reached_tol_at.is_none() && state.k < config.max_iters {
        let mut next = state.clone();
        let step = match config.algorithm {
            Algorithm::Extra => extra_primal_dual_step(&mut next, network, problem, alpha, audit),
            Algorithm::BundleExtra(_) => {
                bundle_extra_step(&mut next, network, problem, alpha, &config.inner, audit)
            }
        };
        let report = match step {
            Ok(r) => r,
            Err(Error::NonFinite(_)) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let blown_up = next.x.norm() > DIVERGENCE_FACTOR * scale
            || next.q.iter().chain(next.grad.iter()).any(|v| !v.is_finite());
        if blown_up {
            diverged = true;
            break;
        }
        state = next;
        let m = record(&state, &mut cumulative, report);
        if reached(&m) {
            reached_tol_at = Some(m.k);
        }
        trajectory.push(m);
    }

    Ok(RunOutput {
        trajectory,
        state,
        diverged,
        reached_tol_at,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{random_connected_graph, Graph};
    use crate::mixing::{make_pair, Network};
    use crate::problem::{least_squares_instance, ObjectiveOracle, Quadratic};
    use std::sync::Arc;

    fn single_agent(f: Quadratic) -> (Problem, Network) {
        let problem = Problem::new(vec![Arc::new(f) as Arc<dyn ObjectiveOracle>]).unwrap();
        let g = Graph::new(1, []).unwrap();
        let pair = make_pair(DMatrix::identity(1, 1), &g).unwrap();
        (problem, Network::new(g, pair).unwrap())
    }

    #[test]
    fn one_agent_extra_is_gradient_descent() {
        let f = Quadratic::isotropic(DVector::from_vec(vec![1.0, -2.0]), 3.0).unwrap();
        let (problem, network) = single_agent(f.clone());
        let alpha = 0.1;
        let mut state =
            RunState::initialize(&problem, &network, Algorithm::Extra, alpha, DMatrix::zeros(2, 1)).unwrap();
        let mut x = DVector::zeros(2);
        for _ in 0..20 {
            extra_primal_dual_step(&mut state, &network, &problem, alpha, &NoAudit).unwrap();
            x = &x - f.gradient(&x) * alpha;
            assert!((state.x.column(0) - &x).norm() < 1e-14);
            assert_eq!(state.q.norm(), 0.0);
        }
    }

    #[test]
    fn recursion_with_zero_objective_is_pure_mixing() {
        let g = random_connected_graph(6, 8, 2).unwrap();
        let network = Network::metropolis(g).unwrap();
        let oracles: Vec<Arc<dyn ObjectiveOracle>> =
            (0..6).map(|_| Arc::new(Quadratic::zero(2)) as Arc<dyn ObjectiveOracle>).collect();
        let problem = Problem::new(oracles).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x0 = DMatrix::from_fn(2, 6, |_, _| rng.random_range(-1.0..1.0));
        let mut state = RecursionState::new(&problem, x0.clone());
        // With f ≡ 0 the rows follow x^{k+2} = 2W̃x^{k+1} - W̃x^k from
        // x^1 = W x^0: an independent dense matrix recursion.
        let wt = network.mixing().wt();
        let w = network.mixing().w();
        let mut prev = x0.clone();
        let mut cur = &x0 * w;
        for k in 0..400 {
            extra_recursion_step(&mut state, &network, &problem, 0.3);
            if k > 0 {
                let next = &cur * wt * 2.0 - &prev * wt;
                prev = std::mem::replace(&mut cur, next);
            }
            assert!((&state.x - &cur).norm() < 1e-12, "step {k}");
        }
        let mean = x0.column_mean();
        for i in 0..6 {
            assert!((state.x.column(i) - &mean).norm() < 1e-6);
        }
    }

    #[test]
    fn kkt_pair_is_a_fixed_point() {
        let g = random_connected_graph(5, 7, 3).unwrap();
        let network = Network::metropolis(g).unwrap();
        let problem = least_squares_instance(5, 3, 4, 8).unwrap();
        let x_star = problem.reference_optimum().unwrap().clone();
        let stack = problem.consensus_stack(&x_star);
        let alpha = 0.01;
        let mut state =
            RunState::initialize(&problem, &network, Algorithm::Extra, alpha, stack.clone()).unwrap();
        state.q = -problem.stacked_gradient(&stack);
        for _ in 0..10 {
            extra_primal_dual_step(&mut state, &network, &problem, alpha, &NoAudit).unwrap();
        }
        assert!((&state.x - &stack).norm() < 1e-12);
    }

    #[test]
    fn polyak_one_dimensional_prox() {
        let f = Quadratic::isotropic(DVector::zeros(1), 1.0).unwrap();
        assert_eq!(f.lower_bound(), Some(0.0));
        let (problem, network) = single_agent(f);
        let x0 = DMatrix::from_element(1, 1, 1.0);
        let mut state =
            RunState::initialize(&problem, &network, Algorithm::BundleExtra(ModelKind::Polyak), 1.0, x0).unwrap();
        bundle_extra_step(&mut state, &network, &problem, 1.0, &SolverOptions::default(), &NoAudit).unwrap();
        assert!((state.x[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dual_columns_sum_to_zero() {
        let g = random_connected_graph(8, 12, 5).unwrap();
        let network = Network::metropolis(g).unwrap();
        let problem = least_squares_instance(8, 4, 3, 1).unwrap();
        for algorithm in [Algorithm::Extra, Algorithm::BundleExtra(ModelKind::CuttingPlane { window: 3 })] {
            let mut cfg = RunConfig::new(algorithm, 0.02, 50);
            cfg.x0 = InitialPoint::Random { seed: 4, scale: 1.0 };
            let out = run(&problem, &network, &cfg).unwrap();
            for m in &out.trajectory {
                assert!(m.dual_mean_norm <= 1e-8 * (1.0 + out.state.q.norm()), "{algorithm:?} k={}", m.k);
            }
        }
    }

    #[test]
    fn huge_step_diverges() {
        let g = random_connected_graph(6, 9, 1).unwrap();
        let network = Network::metropolis(g).unwrap();
        let problem = least_squares_instance(6, 5, 4, 2).unwrap();
        let alpha = 1e3 * network.mixing().lambda_min_wt() / problem.smoothness();
        let out = run(&problem, &network, &RunConfig::new(Algorithm::Extra, alpha, 500)).unwrap();
        assert!(out.diverged);
        assert!(out.trajectory.len() < 501);
    }

    #[test]
    fn zero_budget_keeps_initial_row() {
        let network = Network::metropolis(Graph::path(3).unwrap()).unwrap();
        let problem = least_squares_instance(3, 2, 2, 0).unwrap();
        let out = run(&problem, &network, &RunConfig::new(Algorithm::Extra, 0.01, 0)).unwrap();
        assert_eq!(out.trajectory.len(), 1);
        assert_eq!(out.trajectory[0].k, 0);
    }

    #[test]
    fn algorithm_labels_parse_back() {
        for a in [
            Algorithm::Extra,
            Algorithm::BundleExtra(ModelKind::TwoCut),
            Algorithm::BundleExtra(ModelKind::CuttingPlane { window: 10 }),
        ] {
            assert_eq!(Algorithm::parse(&a.label()).unwrap(), a);
        }
        assert!(Algorithm::parse("dgd").is_err());
    }
}
