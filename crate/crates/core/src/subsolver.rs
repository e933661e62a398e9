//! Proximal step on a max of affine functions.
//!
//! Solves
//!
//! ```text
//! minimize_x  max_j (a_jᵀ x + b_j) + (1/2α) ‖x - c‖²
//! ```
//!
//! through its dual over the probability simplex,
//!
//! ```text
//! maximize_λ  h(λ) = -(α/2) ‖Aᵀλ‖² + λᵀ(A c + b)   s.t. λ ≥ 0, 1ᵀλ = 1,
//! ```
//!
//! and recovers the primal point as `x = c - α Aᵀλ`. The dual has `m`
//! variables (the number of cuts), independent of `d`.
//!
//! The solver works on a reduced form. On the simplex `Aᵀλ = ā + Dᵀλ`
//! where `ā` is the mean slope and `D` the centered slopes, and the
//! projection onto the simplex ignores shifts along `1`. So the iteration
//! only needs the `m × m` Gram matrix `K = D Dᵀ` and the vector
//! `r' = A c + b - α D ā`. Centering keeps `K` accurate when the cuts are
//! nearly parallel, which is the usual situation close to convergence.
//!
//! The primal-dual gap at the recovered point equals the Frank-Wolfe gap
//! `max_j g_j - λᵀg` with `g = ∇h(λ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

#[derive(Clone, Debug)]
pub struct ProxPwlInstance {
    /// `m × d`, row `j` is the slope `a_jᵀ`.
    pub slopes: DMatrix<f64>,
    pub intercepts: DVector<f64>,
    pub center: DVector<f64>,
    pub alpha: f64,
}

impl ProxPwlInstance {
    pub fn new(
        slopes: DMatrix<f64>,
        intercepts: DVector<f64>,
        center: DVector<f64>,
        alpha: f64,
    ) -> Result<Self> {
        let inst = ProxPwlInstance {
            slopes,
            intercepts,
            center,
            alpha,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn num_cuts(&self) -> usize {
        self.slopes.nrows()
    }

    pub fn dim(&self) -> usize {
        self.slopes.ncols()
    }

    fn validate(&self) -> Result<()> {
        if self.num_cuts() == 0 {
            return Err(Error::param("slopes", "need at least one affine piece"));
        }
        if self.intercepts.len() != self.num_cuts() || self.center.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "slopes {}x{}, intercepts {}, center {}",
                self.num_cuts(),
                self.dim(),
                self.intercepts.len(),
                self.center.len()
            )));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::param("alpha", "must be positive and finite"));
        }
        let finite = [self.slopes.as_slice(), self.intercepts.as_slice(), self.center.as_slice()]
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::NonFinite("subproblem data"));
        }
        Ok(())
    }

    /// `max_j (a_jᵀ x + b_j) + (1/2α) ‖x - c‖²`.
    pub fn primal_value(&self, x: &DVector<f64>) -> f64 {
        let pieces = &self.slopes * x + &self.intercepts;
        pieces.max() + (x - &self.center).norm_squared() / (2.0 * self.alpha)
    }

    /// `x = c - α Aᵀλ`.
    pub fn recover_primal(&self, lambda: &DVector<f64>) -> DVector<f64> {
        &self.center - self.slopes.tr_mul(lambda) * self.alpha
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative duality-gap target: stop once `gap ≤ tol · (1 + |h(λ)|)`.
    pub tol: f64,
    pub max_iters: usize,
    /// After the iteration stops, solve the KKT system restricted to the
    /// support of `λ` and keep the result if it lowers the gap.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            polish: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// The iteration budget ran out before the gap target was met. The
    /// returned point is still primal-dual consistent.
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct ProxPwlSolution {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub gap: f64,
    pub dual_value: f64,
    pub inner_iters: usize,
    pub status: SolveStatus,
}

/// `h(λ) = -(α/2) ‖Aᵀλ‖² + λᵀ(A c + b)`.
pub fn dual_value(inst: &ProxPwlInstance, lambda: &DVector<f64>) -> f64 {
    let at_lambda = inst.slopes.tr_mul(lambda);
    let r = &inst.slopes * &inst.center + &inst.intercepts;
    -0.5 * inst.alpha * at_lambda.norm_squared() + lambda.dot(&r)
}

/// `∇h(λ) = -α A (Aᵀλ) + A c + b`.
pub fn dual_gradient(inst: &ProxPwlInstance, lambda: &DVector<f64>) -> DVector<f64> {
    let at_lambda = inst.slopes.tr_mul(lambda);
    &inst.slopes * (&inst.center - at_lambda * inst.alpha) + &inst.intercepts
}

/// Euclidean projection onto `{λ ≥ 0, 1ᵀλ = 1}`.
///
/// Condat's linear-time threshold search: a running estimate `ρ` of the
/// threshold is refined while scanning, candidates set aside early are
/// revisited once, and a final cleanup drops entries that fall below `ρ`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut active: Vec<f64> = Vec::with_capacity(v.len());
    let mut parked: Vec<f64> = Vec::new();
    active.push(v[0]);
    let mut rho = v[0] - 1.0;
    for &y in &v[1..] {
        if y > rho {
            rho += (y - rho) / (active.len() + 1) as f64;
            if rho > y - 1.0 {
                active.push(y);
            } else {
                parked.append(&mut active);
                active.push(y);
                rho = y - 1.0;
            }
        }
    }
    for &y in &parked {
        if y > rho {
            active.push(y);
            rho += (y - rho) / active.len() as f64;
        }
    }
    loop {
        let before = active.len();
        let mut k = 0;
        while k < active.len() {
            let y = active[k];
            if y <= rho {
                active.swap_remove(k);
                rho += (rho - y) / active.len() as f64;
            } else {
                k += 1;
            }
        }
        if active.len() == before {
            break;
        }
    }
    v.iter().map(|&y| (y - rho).max(0.0)).collect()
}

fn project(v: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(project_simplex(v.as_slice()))
}

/// Reduced dual: `h(λ) = const - (α/2) λᵀKλ + λᵀr'` on the simplex.
struct ReducedDual {
    k: DMatrix<f64>,
    r: DVector<f64>,
    alpha: f64,
    constant: f64,
}

impl ReducedDual {
    fn new(inst: &ProxPwlInstance) -> Self {
        let m = inst.num_cuts();
        let mean = inst.slopes.row_mean().transpose();
        let mut centered = inst.slopes.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let k = &centered * centered.transpose();
        let raw = &inst.slopes * &inst.center + &inst.intercepts;
        let r = raw - (&centered * &mean) * inst.alpha;
        debug_assert_eq!(r.len(), m);
        ReducedDual {
            k,
            r,
            alpha: inst.alpha,
            constant: -0.5 * inst.alpha * mean.norm_squared(),
        }
    }

    /// Gradient up to a multiple of `1`, which the simplex ignores.
    fn gradient(&self, lambda: &DVector<f64>) -> DVector<f64> {
        &self.r - (&self.k * lambda) * self.alpha
    }

    #[cfg(test)]
    fn value(&self, lambda: &DVector<f64>) -> f64 {
        let kl = &self.k * lambda;
        self.constant - 0.5 * self.alpha * lambda.dot(&kl) + lambda.dot(&self.r)
    }

    fn gap(&self, lambda: &DVector<f64>) -> f64 {
        let g = self.gradient(lambda);
        (g.max() - lambda.dot(&g)).max(0.0)
    }

    fn converged(&self, lambda: &DVector<f64>, tol: f64) -> (bool, f64, f64) {
        let (h, gap) = self.value_and_gap(lambda);
        (gap <= tol * (1.0 + h.abs()), gap, h)
    }

    /// `h(λ)` and the gap from a single product with `K`.
    fn value_and_gap(&self, lambda: &DVector<f64>) -> (f64, f64) {
        let kl = &self.k * lambda;
        let lr = lambda.dot(&self.r);
        let lkl = lambda.dot(&kl);
        let h = self.constant - 0.5 * self.alpha * lkl + lr;
        let g_max = self
            .r
            .iter()
            .zip(kl.iter())
            .map(|(r, k)| r - self.alpha * k)
            .fold(f64::NEG_INFINITY, f64::max);
        (h, (g_max - (lr - self.alpha * lkl)).max(0.0))
    }

    /// Exact maximizer over the face spanned by the support of `λ`.
    fn polish(&self, lambda: &DVector<f64>) -> Option<DVector<f64>> {
        let support: Vec<usize> = (0..lambda.len()).filter(|&j| lambda[j] > 0.0).collect();
        let s = support.len();
        if s < 2 {
            return None;
        }
        // [αK_SS 1; 1ᵀ 0] [λ_S; -t] = [r_S; 1] makes the gradient constant on S.
        let mut sys = DMatrix::zeros(s + 1, s + 1);
        let mut rhs = DVector::zeros(s + 1);
        for (a, &ja) in support.iter().enumerate() {
            for (b, &jb) in support.iter().enumerate() {
                sys[(a, b)] = self.alpha * self.k[(ja, jb)];
            }
            sys[(a, s)] = 1.0;
            sys[(s, a)] = 1.0;
            rhs[a] = self.r[ja];
        }
        rhs[s] = 1.0;
        let sol = match sys.clone().lu().solve(&rhs) {
            Some(sol) if sol.iter().all(|v| v.is_finite()) => sol,
            _ => sys.svd(true, true).solve(&rhs, 1e-14).ok()?,
        };
        let mut out = DVector::zeros(lambda.len());
        for (a, &j) in support.iter().enumerate() {
            out[j] = sol[a].max(0.0);
        }
        let total = out.sum();
        if !(total > 0.0) || !total.is_finite() {
            return None;
        }
        Some(out / total)
    }
}

/// Cold-start solve.
pub fn solve(inst: &ProxPwlInstance, opts: &SolverOptions) -> Result<ProxPwlSolution> {
    solve_warm(inst, opts, None)
}

/// Solve starting from `warm` (projected onto the simplex first). A warm
/// start of the wrong length or with no positive mass falls back to the
/// best simplex vertex.
pub fn solve_warm(
    inst: &ProxPwlInstance,
    opts: &SolverOptions,
    warm: Option<&DVector<f64>>,
) -> Result<ProxPwlSolution> {
    inst.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let m = inst.num_cuts();
    if m == 1 {
        let lambda = DVector::from_element(1, 1.0);
        return Ok(finish(inst, lambda, 0.0, 0, SolveStatus::Converged));
    }

    let dual = ReducedDual::new(inst);
    if m == 2 {
        let lambda = two_piece(inst, &dual);
        let gap = dual.gap(&lambda);
        return Ok(finish(inst, lambda, gap, 0, SolveStatus::Converged));
    }

    let mut lambda = match warm {
        Some(w) if w.len() == m && w.iter().all(|v| v.is_finite()) && w.max() > 0.0 => project(w),
        _ => best_vertex(&dual),
    };

    let (mut done, mut gap, mut h) = dual.converged(&lambda, opts.tol);
    let mut iters = 0;
    let lipschitz = if done {
        0.0
    } else {
        inst.alpha * linalg::lambda_max(&dual.k)
    };
    if !done && !(lipschitz > 0.0 && lipschitz.is_finite()) {
        // K = 0: all slopes coincide and h is linear on the simplex.
        lambda = best_vertex(&dual);
        (done, gap, h) = dual.converged(&lambda, opts.tol);
    }

    let step = 1.0 / lipschitz;
    let mut y = lambda.clone();
    let mut t = 1.0f64;
    while !done && iters < opts.max_iters {
        iters += 1;
        let candidate = project(&(&y + dual.gradient(&y) * step));
        let (h_candidate, gap_candidate) = dual.value_and_gap(&candidate);
        if h_candidate < h {
            if t == 1.0 {
                // A plain projected-gradient step failed to ascend: the
                // remaining progress is below round-off.
                break;
            }
            // Momentum overshot: restart from the last accepted point.
            t = 1.0;
            y.copy_from(&lambda);
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &candidate + (&candidate - &lambda) * ((t - 1.0) / t_next);
        t = t_next;
        lambda = candidate;
        (gap, h) = (gap_candidate, h_candidate);
        done = gap <= opts.tol * (1.0 + h.abs());
    }

    if opts.polish {
        if let Some(polished) = dual.polish(&lambda) {
            let polished_gap = dual.gap(&polished);
            if polished_gap < gap {
                lambda = polished;
                gap = polished_gap;
                done = done || dual.converged(&lambda, opts.tol).0;
            }
        }
    }

    let status = if done {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterations
    };
    Ok(finish(inst, lambda, gap, iters, status))
}

fn finish(
    inst: &ProxPwlInstance,
    lambda: DVector<f64>,
    gap: f64,
    inner_iters: usize,
    status: SolveStatus,
) -> ProxPwlSolution {
    let x = inst.recover_primal(&lambda);
    let dual_value = dual_value(inst, &lambda);
    ProxPwlSolution {
        x,
        lambda,
        gap,
        dual_value,
        inner_iters,
        status,
    }
}

fn best_vertex(dual: &ReducedDual) -> DVector<f64> {
    let m = dual.r.len();
    let score = |j: usize| dual.r[j] - 0.5 * dual.alpha * dual.k[(j, j)];
    let best = (0..m).fold(0, |b, j| if score(j) >= score(b) { j } else { b });
    let mut e = DVector::zeros(m);
    e[best] = 1.0;
    e
}

/// Closed form for two pieces: maximize the concave quadratic in
/// `λ = (s, 1 - s)` over `s ∈ [0, 1]`.
fn two_piece(inst: &ProxPwlInstance, dual: &ReducedDual) -> DVector<f64> {
    let diff = inst.slopes.row(0) - inst.slopes.row(1);
    let curvature = dual.alpha * diff.norm_squared();
    // dh/ds at s = 0, using the reduced gradient (shift-invariant difference).
    let g0 = dual.gradient(&DVector::from_vec(vec![0.0, 1.0]));
    let slope0 = g0[0] - g0[1];
    let s = if curvature > 0.0 {
        (slope0 / curvature).clamp(0.0, 1.0)
    } else if slope0 > 0.0 {
        1.0
    } else {
        0.0
    };
    DVector::from_vec(vec![s, 1.0 - s])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inst(rows: &[&[f64]], b: &[f64], c: &[f64], alpha: f64) -> ProxPwlInstance {
        let d = c.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        ProxPwlInstance::new(
            DMatrix::from_row_slice(rows.len(), d, &flat),
            DVector::from_row_slice(b),
            DVector::from_row_slice(c),
            alpha,
        )
        .unwrap()
    }

    fn random_instance(rng: &mut ChaCha8Rng, m: usize, d: usize) -> ProxPwlInstance {
        ProxPwlInstance::new(
            DMatrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0)),
            DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)),
            DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
            rng.random_range(0.1..2.0),
        )
        .unwrap()
    }

    #[test]
    fn single_piece_closed_form() {
        let p = inst(&[&[1.0, -2.0]], &[0.3], &[0.5, 0.5], 0.5);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.lambda.as_slice(), &[1.0]);
        assert_eq!(s.x.as_slice(), &[0.0, 1.5]);
        assert_eq!(s.inner_iters, 0);
    }

    #[test]
    fn symmetric_abs_value() {
        let p = inst(&[&[1.0], &[-1.0]], &[0.0, 0.0], &[0.0], 1.0);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert!(s.x[0].abs() < 1e-15);
        assert!((s.lambda[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(project_simplex(&[1.0, 1.0]), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[-3.0]), vec![1.0]);
    }

    #[test]
    fn dual_value_at_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_instance(&mut rng, 4, 3);
        for j in 0..4 {
            let mut e = DVector::zeros(4);
            e[j] = 1.0;
            let a = p.slopes.row(j).transpose();
            let expect = -0.5 * p.alpha * a.norm_squared() + a.dot(&p.center) + p.intercepts[j];
            assert!((dual_value(&p, &e) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn dual_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_instance(&mut rng, 5, 4);
        let lambda = DVector::from_vec(project_simplex(&[0.3, 0.1, 0.4, 0.2, 0.05]));
        let g = dual_gradient(&p, &lambda);
        let h = 1e-6;
        for j in 0..5 {
            let mut lp = lambda.clone();
            let mut lm = lambda.clone();
            lp[j] += h;
            lm[j] -= h;
            let fd = (dual_value(&p, &lp) - dual_value(&p, &lm)) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0));
        }
    }

    #[test]
    fn zero_slopes_pick_largest_intercept() {
        let p = inst(&[&[0.0], &[0.0], &[0.0]], &[0.1, 0.7, 0.3], &[2.0], 1.0);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.lambda.as_slice(), &[0.0, 1.0, 0.0]);
        assert!((dual_value(&p, &s.lambda) - 0.7).abs() < 1e-15);
        assert_eq!(s.x[0], 2.0);
    }

    #[test]
    fn reduced_form_agrees_with_direct_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let p = random_instance(&mut rng, 6, 5);
            let reduced = ReducedDual::new(&p);
            let raw: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
            let lambda = DVector::from_vec(project_simplex(&raw));
            assert!((reduced.value(&lambda) - dual_value(&p, &lambda)).abs() < 1e-12);
            let x = p.recover_primal(&lambda);
            let gap = p.primal_value(&x) - dual_value(&p, &lambda);
            assert!((reduced.gap(&lambda) - gap).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_duality_and_slackness() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let m = rng.random_range(3..8);
            let p = random_instance(&mut rng, m, 4);
            let s = solve(&p, &SolverOptions::default()).unwrap();
            assert_eq!(s.status, SolveStatus::Converged);
            let primal = p.primal_value(&s.x);
            assert!(primal >= s.dual_value - 1e-12 * (1.0 + primal.abs()));
            assert!((s.lambda.sum() - 1.0).abs() < 1e-12);
            assert!(s.lambda.iter().all(|&l| l >= 0.0));
            assert_eq!(s.x, p.recover_primal(&s.lambda));
            let pieces = &p.slopes * &s.x + &p.intercepts;
            let xi = pieces.max();
            for j in 0..m {
                assert!(s.lambda[j] * (xi - pieces[j]) <= 1e-9);
            }
        }
    }

    #[test]
    fn max_iterations_status_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_instance(&mut rng, 8, 3);
        let opts = SolverOptions {
            tol: 1e-300,
            max_iters: 1,
            polish: false,
        };
        let s = solve(&p, &opts).unwrap();
        assert_eq!(s.status, SolveStatus::MaxIterations);
        assert_eq!(s.inner_iters, 1);
    }

    #[test]
    fn invalid_instances_rejected() {
        let bad = ProxPwlInstance::new(
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
            DVector::zeros(2),
            1.0,
        );
        assert!(bad.is_err());
        let nan = ProxPwlInstance::new(
            DMatrix::from_element(1, 1, f64::NAN),
            DVector::zeros(1),
            DVector::zeros(1),
            1.0,
        );
        assert!(matches!(nan, Err(Error::NonFinite(_))));
        assert!(ProxPwlInstance::new(
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            DVector::zeros(1),
            0.0
        )
        .is_err());
    }

    #[test]
    fn warm_start_at_optimum_needs_no_iterations() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = random_instance(&mut rng, 5, 3);
        let cold = solve(&p, &SolverOptions::default()).unwrap();
        let warm = solve_warm(&p, &SolverOptions::default(), Some(&cold.lambda)).unwrap();
        assert_eq!(warm.inner_iters, 0);
        assert!((warm.x - cold.x).norm() < 1e-12);
    }
}
