//! Bundle models: convex piecewise-linear minorants of an agent objective.
//!
//! A [`CutSet`] is a list of affine cuts `x ↦ aᵀx + b`, optionally clamped
//! from below by a scalar floor. Every model kind keeps three properties at
//! the current iterate `x^k`: the model is convex, it dominates the
//! linearization of `f` at `x^k`, and it never exceeds `f`. Together these
//! make it exact at `x^k`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::ObjectiveOracle;
use crate::subsolver::ProxPwlInstance;

/// Cuts closer than this in `‖Δa‖₁ + |Δb|` count as the same cut.
pub const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Cut {
    pub slope: DVector<f64>,
    pub intercept: f64,
}

impl Cut {
    /// Linearization of `f` at `x`: slope `∇f(x)`, intercept `f(x) - ⟨∇f(x), x⟩`.
    pub fn linearization(x: &DVector<f64>, f_val: f64, grad: &DVector<f64>) -> Self {
        Cut {
            intercept: f_val - grad.dot(x),
            slope: grad.clone(),
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.slope.dot(x) + self.intercept
    }

    fn distance(&self, other: &Cut) -> f64 {
        (&self.slope - &other.slope).lp_norm(1) + (self.intercept - other.intercept).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Only the newest linearization. Bundle EXTRA with this model is EXTRA.
    SingleCut,
    /// Newest linearization, floored at a lower bound of `min f`.
    Polyak,
    /// The linearizations at iterates `max(0, k - window) ..= k`.
    CuttingPlane { window: usize },
    /// Cutting-plane model plus the floor.
    PolyakCuttingPlane { window: usize },
    /// The newest linearization and one aggregated cut of the previous model.
    TwoCut,
}

impl ModelKind {
    pub fn uses_floor(self) -> bool {
        matches!(self, ModelKind::Polyak | ModelKind::PolyakCuttingPlane { .. })
    }

    fn max_cuts(self) -> usize {
        match self {
            ModelKind::SingleCut | ModelKind::Polyak => 1,
            ModelKind::CuttingPlane { window } | ModelKind::PolyakCuttingPlane { window } => {
                window + 1
            }
            ModelKind::TwoCut => 2,
        }
    }

    /// Short stable name: `single_cut`, `polyak`, `cutting_plane:m`,
    /// `polyak_cutting_plane:m`, `two_cut`.
    pub fn label(self) -> String {
        match self {
            ModelKind::SingleCut => "single_cut".into(),
            ModelKind::Polyak => "polyak".into(),
            ModelKind::CuttingPlane { window } => format!("cutting_plane:{window}"),
            ModelKind::PolyakCuttingPlane { window } => format!("polyak_cutting_plane:{window}"),
            ModelKind::TwoCut => "two_cut".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (name, window) = match s.split_once(':') {
            Some((name, w)) => {
                let w = w
                    .trim()
                    .parse()
                    .map_err(|_| Error::param("model", format!("bad window in `{s}`")))?;
                (name.trim(), Some(w))
            }
            None => (s.trim(), None),
        };
        let need_window = || window.ok_or_else(|| Error::param("model", format!("`{name}` needs a window, e.g. `{name}:5`")));
        let kind = match name {
            "single_cut" => ModelKind::SingleCut,
            "polyak" => ModelKind::Polyak,
            "two_cut" => ModelKind::TwoCut,
            "cutting_plane" => ModelKind::CuttingPlane { window: need_window()? },
            "polyak_cutting_plane" => ModelKind::PolyakCuttingPlane { window: need_window()? },
            other => return Err(Error::param("model", format!("unknown model `{other}`"))),
        };
        if window.is_some() && !matches!(kind, ModelKind::CuttingPlane { .. } | ModelKind::PolyakCuttingPlane { .. }) {
            return Err(Error::param("model", format!("`{name}` takes no window")));
        }
        Ok(kind)
    }
}

/// Identifies the floor in [`CutSet::piece_ids`].
pub const FLOOR_ID: u64 = u64::MAX;

#[derive(Clone, Debug)]
pub struct CutSet {
    kind: ModelKind,
    cuts: Vec<Cut>,
    ids: Vec<u64>,
    next_id: u64,
    floor: Option<f64>,
}

impl CutSet {
    /// The model at the first iterate: the single cut at `x0`, plus the
    /// floor for Polyak-type kinds.
    pub fn new(
        kind: ModelKind,
        floor: Option<f64>,
        x0: &DVector<f64>,
        f_val: f64,
        grad: &DVector<f64>,
    ) -> Result<Self> {
        check_finite(x0, f_val, grad)?;
        let floor = if kind.uses_floor() {
            let gamma = floor.ok_or_else(|| {
                Error::param("floor", format!("model `{}` needs a lower bound of f", kind.label()))
            })?;
            if !gamma.is_finite() {
                return Err(Error::NonFinite("floor"));
            }
            Some(gamma)
        } else {
            None
        };
        Ok(CutSet {
            kind,
            cuts: vec![Cut::linearization(x0, f_val, grad)],
            ids: vec![0],
            next_id: 1,
            floor,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn floor(&self) -> Option<f64> {
        self.floor
    }

    pub fn dim(&self) -> usize {
        self.cuts[0].slope.len()
    }

    /// Number of affine pieces handed to the subsolver (cuts plus floor).
    pub fn num_pieces(&self) -> usize {
        self.cuts.len() + usize::from(self.floor.is_some())
    }

    /// Stable identifiers for the pieces in subsolver row order, used to
    /// carry dual multipliers across model updates.
    pub fn piece_ids(&self) -> Vec<u64> {
        let mut ids = self.ids.clone();
        if self.floor.is_some() {
            ids.push(FLOOR_ID);
        }
        ids
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> f64 {
        let best = self
            .cuts
            .iter()
            .map(|c| c.eval(x))
            .fold(f64::NEG_INFINITY, f64::max);
        match self.floor {
            Some(gamma) => best.max(gamma),
            None => best,
        }
    }

    /// Slope of a maximizing cut at `x`; among tied cuts the most recent
    /// one wins. Zero when the floor is strictly above every cut.
    pub fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (k, c) in self.cuts.iter().enumerate() {
            let v = c.eval(x);
            if v >= best_val {
                best = k;
                best_val = v;
            }
        }
        match self.floor {
            Some(gamma) if gamma > best_val => DVector::zeros(self.dim()),
            _ => self.cuts[best].slope.clone(),
        }
    }

    /// Rebuilds the model at a new iterate from `f(x_new)` and `∇f(x_new)`.
    pub fn update_model(&mut self, x_new: &DVector<f64>, f_val: f64, grad: &DVector<f64>) -> Result<()> {
        check_finite(x_new, f_val, grad)?;
        if x_new.len() != self.dim() || grad.len() != self.dim() {
            return Err(Error::Dimension("cut dimension changed".into()));
        }
        let fresh = Cut::linearization(x_new, f_val, grad);
        match self.kind {
            ModelKind::SingleCut | ModelKind::Polyak => {
                self.cuts.clear();
                self.ids.clear();
                self.push(fresh);
            }
            ModelKind::CuttingPlane { .. } | ModelKind::PolyakCuttingPlane { .. } => {
                self.push(fresh);
            }
            ModelKind::TwoCut => {
                let v = self.subgradient(x_new);
                let aggregated = Cut {
                    intercept: self.evaluate(x_new) - v.dot(x_new),
                    slope: v,
                };
                // The aggregate inherits the id of the cut it was taken from
                // so warm starts keep that cut's multiplier.
                let source = self
                    .cuts
                    .iter()
                    .rposition(|c| c.slope == aggregated.slope)
                    .map(|k| self.ids[k]);
                self.cuts.clear();
                self.ids.clear();
                let id = source.unwrap_or_else(|| self.take_id());
                self.cuts.push(aggregated);
                self.ids.push(id);
                self.push(fresh);
            }
        }
        Ok(())
    }

    /// Appends a cut, replacing a duplicate if present, and evicts the
    /// oldest cuts beyond the model's capacity.
    fn push(&mut self, cut: Cut) {
        let id = match self.cuts.iter().position(|c| c.distance(&cut) <= DUPLICATE_TOL) {
            Some(k) => {
                self.cuts.remove(k);
                self.ids.remove(k)
            }
            None => self.take_id(),
        };
        self.cuts.push(cut);
        self.ids.push(id);
        let cap = self.kind.max_cuts();
        if self.cuts.len() > cap {
            let excess = self.cuts.len() - cap;
            self.cuts.drain(..excess);
            self.ids.drain(..excess);
        }
    }

    fn take_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// The subproblem `min_x model(x) + (1/2α) ‖x - c‖²`. The floor, if
    /// any, becomes a last row with zero slope.
    pub fn to_instance(&self, center: DVector<f64>, alpha: f64) -> Result<ProxPwlInstance> {
        let m = self.num_pieces();
        let d = self.dim();
        let mut slopes = DMatrix::zeros(m, d);
        let mut intercepts = DVector::zeros(m);
        for (j, c) in self.cuts.iter().enumerate() {
            slopes.set_row(j, &c.slope.transpose());
            intercepts[j] = c.intercept;
        }
        if let Some(gamma) = self.floor {
            intercepts[m - 1] = gamma;
        }
        ProxPwlInstance::new(slopes, intercepts, center, alpha)
    }
}

fn check_finite(x: &DVector<f64>, f_val: f64, grad: &DVector<f64>) -> Result<()> {
    if !f_val.is_finite() {
        return Err(Error::NonFinite("function value"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("iterate"));
    }
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(())
}

/// Worst violations of the bundle-model properties found by
/// [`check_model`]. All fields are `≤ 0` (up to tolerance) for a legal model.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModelCheck {
    /// `|model(x^k) - f(x^k)| - 1e-9·(1 + |f(x^k)|)`.
    pub exactness: f64,
    /// `max over probes of model(x) - f(x) - 1e-9·(1 + |f(x)|)`.
    pub minorant: f64,
    /// `max over probes of lin_k(x) - model(x) - 1e-9`.
    pub domination: f64,
}

impl ModelCheck {
    pub fn passed(&self) -> bool {
        self.exactness <= 0.0 && self.minorant <= 0.0 && self.domination <= 0.0
    }
}

/// Samples `probes` points in a box of half-width `radius` around `x_k` and
/// measures how far the model is from being exact at `x_k`, below `f`, and
/// above the linearization at `x_k`.
pub fn check_model(
    cs: &CutSet,
    oracle: &dyn ObjectiveOracle,
    x_k: &DVector<f64>,
    probes: usize,
    radius: f64,
    seed: u64,
) -> ModelCheck {
    let (f_k, g_k) = oracle.value_and_gradient(x_k);
    let lin = Cut::linearization(x_k, f_k, &g_k);
    let mut out = ModelCheck {
        exactness: (cs.evaluate(x_k) - f_k).abs() - 1e-9 * (1.0 + f_k.abs()),
        minorant: f64::NEG_INFINITY,
        domination: f64::NEG_INFINITY,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes {
        let x = DVector::from_fn(x_k.len(), |r, _| x_k[r] + rng.random_range(-radius..=radius));
        let f = oracle.value(&x);
        let model = cs.evaluate(&x);
        out.minorant = out.minorant.max(model - f - 1e-9 * (1.0 + f.abs()));
        out.domination = out.domination.max(lin.eval(&x) - model - 1e-9);
    }
    out
}
