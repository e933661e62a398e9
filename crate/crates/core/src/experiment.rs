//! Experiment specs, the `run` and `sweep` drivers, and their CSV output.
//!
//! A spec is a flat `key = value` text file. Blank lines and lines starting
//! with `#` are ignored. Every key is optional:
//!
//! | key               | default        | meaning                                              |
//! |-------------------|----------------|------------------------------------------------------|
//! | `n`               | 20             | number of agents                                     |
//! | `d`               | 100            | dimension                                            |
//! | `eta`             | 6              | rows of each agent's least-squares block             |
//! | `edges`           | 32             | edges of the random connected graph                  |
//! | `seed`            | 0              | seeds the graph and the instance                     |
//! | `weights`         | `metropolis`   | `metropolis` or `laplacian:<tau>`                    |
//! | `alpha`           | `bound`        | a number, `bound` (= λ_min(W̃)/L) or `bound*<c>`      |
//! | `arms`            | `extra`        | comma list of `extra`, `bundle:<model>`              |
//! | `sweep_alphas`    | `grid:0.003:2:9` | comma list, or `grid:<start>:<ratio>:<count>`      |
//! | `max_iters`       | 1000           | iteration budget                                     |
//! | `tol`             | 1e-6           | `rel_error` level that counts as converged           |
//! | `inner_tol`       | 1e-10          | subsolver gap tolerance                              |
//! | `inner_max_iters` | 10000          | subsolver iteration cap                              |
//! | `inner_polish`    | `true`         | active-set refinement after the subsolver            |
//! | `x0`              | `zeros`        | `zeros` or `random:<seed>:<scale>`                   |
//! | `threads`         | `auto`         | worker threads, or `auto`                            |
//! | `output`          | `out`          | output directory                                     |
//!
//! Model names are `single_cut`, `polyak`, `two_cut`, `cutting_plane:<m>`
//! and `polyak_cutting_plane:<m>`.
//!
//! CSV bytes depend only on the spec and the thread count. The creation time
//! is written to the snapshot sidecar only.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::algorithms::{run, Algorithm, InitialPoint, RunConfig, RunOutput};
use crate::error::{Error, Result};
use crate::graph::random_connected_graph;
use crate::mixing::{laplacian_weights, make_pair, Network};
use crate::problem::{least_squares_instance, Problem};
use crate::subsolver::SolverOptions;

pub const RUN_HEADER: &str = "k,consensus_residual,grad_residual,rel_error,cumulative_kkt_sum,inner_iters_total";
pub const SWEEP_HEADER: &str = "arm,alpha,final_rel_error,iters_to_tol,diverged";
pub const SNAPSHOT_FILE: &str = "snapshot.cfg";
pub const SWEEP_FILE: &str = "sweep.csv";

/// Offsets the graph stream from the instance stream under one `seed`.
const GRAPH_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightScheme {
    Metropolis,
    Laplacian { tau: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// `scale · λ_min(W̃) / L`.
    Bound { scale: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub n: usize,
    pub d: usize,
    pub eta: usize,
    pub edges: usize,
    pub seed: u64,
    pub weights: WeightScheme,
    pub alpha: StepSize,
    pub arms: Vec<Algorithm>,
    pub sweep_alphas: Vec<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub inner: SolverOptions,
    pub x0: InitialPoint,
    pub threads: Option<usize>,
    pub output: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            n: 20,
            d: 100,
            eta: 6,
            edges: 32,
            seed: 0,
            weights: WeightScheme::Metropolis,
            alpha: StepSize::Bound { scale: 1.0 },
            arms: vec![Algorithm::Extra],
            sweep_alphas: geometric_grid(0.003, 2.0, 9),
            max_iters: 1000,
            tol: 1e-6,
            inner: SolverOptions::default(),
            x0: InitialPoint::Zeros,
            threads: None,
            output: PathBuf::from("out"),
        }
    }
}

pub fn geometric_grid(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|t| start * ratio.powi(t as i32)).collect()
}

fn parse_num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| Error::config(key, format!("`{v}`: {e}")))
}

fn parse_bool(key: &'static str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("`{v}` is not a boolean"))),
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            spec.set(key.trim(), value.trim())?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Assigns one key. Values are checked for syntax here and for
    /// consistency in [`ExperimentSpec::validate`].
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "n" => self.n = parse_num("n", v)?,
            "d" => self.d = parse_num("d", v)?,
            "eta" => self.eta = parse_num("eta", v)?,
            "edges" => self.edges = parse_num("edges", v)?,
            "seed" => self.seed = parse_num("seed", v)?,
            "weights" => {
                self.weights = match v.split_once(':') {
                    None if v == "metropolis" => WeightScheme::Metropolis,
                    Some(("laplacian", tau)) => WeightScheme::Laplacian {
                        tau: parse_num("weights", tau)?,
                    },
                    _ => return Err(Error::config("weights", format!("unknown scheme `{v}`"))),
                }
            }
            "alpha" => {
                self.alpha = if v == "bound" {
                    StepSize::Bound { scale: 1.0 }
                } else if let Some(c) = v.strip_prefix("bound*") {
                    StepSize::Bound {
                        scale: parse_num("alpha", c)?,
                    }
                } else {
                    StepSize::Fixed(parse_num("alpha", v)?)
                }
            }
            "arms" => {
                self.arms = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| Algorithm::parse(s).map_err(|e| Error::config("arms", e.to_string())))
                    .collect::<Result<_>>()?
            }
            "sweep_alphas" => {
                self.sweep_alphas = if let Some(g) = v.strip_prefix("grid:") {
                    let parts: Vec<&str> = g.split(':').collect();
                    if parts.len() != 3 {
                        return Err(Error::config("sweep_alphas", "grid needs start:ratio:count"));
                    }
                    geometric_grid(
                        parse_num("sweep_alphas", parts[0])?,
                        parse_num("sweep_alphas", parts[1])?,
                        parse_num("sweep_alphas", parts[2])?,
                    )
                } else {
                    v.split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse_num("sweep_alphas", s.trim()))
                        .collect::<Result<_>>()?
                }
            }
            "max_iters" => self.max_iters = parse_num("max_iters", v)?,
            "tol" => self.tol = parse_num("tol", v)?,
            "inner_tol" => self.inner.tol = parse_num("inner_tol", v)?,
            "inner_max_iters" => self.inner.max_iters = parse_num("inner_max_iters", v)?,
            "inner_polish" => self.inner.polish = parse_bool("inner_polish", v)?,
            "x0" => {
                self.x0 = if v == "zeros" {
                    InitialPoint::Zeros
                } else if let Some(rest) = v.strip_prefix("random:") {
                    let (seed, scale) = rest
                        .split_once(':')
                        .ok_or_else(|| Error::config("x0", "expected random:<seed>:<scale>"))?;
                    InitialPoint::Random {
                        seed: parse_num("x0", seed)?,
                        scale: parse_num("x0", scale)?,
                    }
                } else {
                    return Err(Error::config("x0", format!("unknown initial point `{v}`")));
                }
            }
            "threads" => {
                self.threads = if v == "auto" {
                    None
                } else {
                    Some(parse_num("threads", v)?)
                }
            }
            "output" => self.output = PathBuf::from(v),
            other => return Err(Error::Config {
                key: other.to_string(),
                reason: "unknown key".into(),
            }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &'static str, v: usize| {
            if v == 0 {
                Err(Error::config(key, "must be at least 1"))
            } else {
                Ok(())
            }
        };
        positive("n", self.n)?;
        positive("d", self.d)?;
        positive("eta", self.eta)?;
        if self.edges + 1 < self.n || self.edges > self.n * (self.n - 1) / 2 {
            return Err(Error::config(
                "edges",
                format!("{} edges cannot form a connected simple graph on {} nodes", self.edges, self.n),
            ));
        }
        if let WeightScheme::Laplacian { tau } = self.weights {
            if !(tau > 0.0) {
                return Err(Error::config("weights", "tau must be positive"));
            }
        }
        match self.alpha {
            StepSize::Fixed(a) | StepSize::Bound { scale: a } if !(a > 0.0 && a.is_finite()) => {
                return Err(Error::config("alpha", "must be positive"));
            }
            _ => {}
        }
        if self.arms.is_empty() {
            return Err(Error::config("arms", "at least one arm is required"));
        }
        if self.sweep_alphas.is_empty() {
            return Err(Error::config("sweep_alphas", "sweep list is empty"));
        }
        if let Some(a) = self.sweep_alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::config("sweep_alphas", format!("step size {a} is not positive")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", "must be positive"));
        }
        if !(self.inner.tol > 0.0) {
            return Err(Error::config("inner_tol", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        Ok(())
    }

    /// The spec as a config file that parses back to an equal spec.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("n", self.n.to_string());
        kv("d", self.d.to_string());
        kv("eta", self.eta.to_string());
        kv("edges", self.edges.to_string());
        kv("seed", self.seed.to_string());
        kv(
            "weights",
            match self.weights {
                WeightScheme::Metropolis => "metropolis".into(),
                WeightScheme::Laplacian { tau } => format!("laplacian:{tau:e}"),
            },
        );
        kv(
            "alpha",
            match self.alpha {
                StepSize::Fixed(a) => format!("{a:e}"),
                StepSize::Bound { scale: 1.0 } => "bound".into(),
                StepSize::Bound { scale } => format!("bound*{scale:e}"),
            },
        );
        kv("arms", self.arms.iter().map(Algorithm::label).collect::<Vec<_>>().join(","));
        kv(
            "sweep_alphas",
            self.sweep_alphas.iter().map(|a| format!("{a:e}")).collect::<Vec<_>>().join(","),
        );
        kv("max_iters", self.max_iters.to_string());
        kv("tol", format!("{:e}", self.tol));
        kv("inner_tol", format!("{:e}", self.inner.tol));
        kv("inner_max_iters", self.inner.max_iters.to_string());
        kv("inner_polish", self.inner.polish.to_string());
        kv(
            "x0",
            match &self.x0 {
                InitialPoint::Random { seed, scale } => format!("random:{seed}:{scale:e}"),
                _ => "zeros".into(),
            },
        );
        kv("threads", self.threads.map_or("auto".into(), |t| t.to_string()));
        kv("output", self.output.display().to_string());
        s
    }

    /// The network and least-squares instance this spec describes.
    pub fn build(&self) -> Result<(Problem, Network)> {
        self.validate()?;
        let graph = random_connected_graph(self.n, self.edges, self.seed.wrapping_add(GRAPH_SEED_OFFSET))?;
        let network = match self.weights {
            WeightScheme::Metropolis => Network::metropolis(graph)?,
            WeightScheme::Laplacian { tau } => {
                let pair = make_pair(laplacian_weights(&graph, tau)?, &graph)?;
                Network::new(graph, pair)?
            }
        };
        let problem = least_squares_instance(self.n, self.d, self.eta, self.seed)?;
        Ok((problem, network))
    }

    pub fn resolve_alpha(&self, problem: &Problem, network: &Network) -> f64 {
        match self.alpha {
            StepSize::Fixed(a) => a,
            StepSize::Bound { scale } => scale * network.mixing().lambda_min_wt() / problem.smoothness(),
        }
    }

    pub fn run_config(&self, algorithm: Algorithm, alpha: f64) -> RunConfig {
        RunConfig {
            algorithm,
            alpha,
            max_iters: self.max_iters,
            inner: self.inner,
            x0: self.x0.clone(),
            threads: None,
            stop_at_rel_error: None,
        }
    }

    fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::config("threads", e.to_string()))?;
                Ok(pool.install(f))
            }
            None => Ok(f()),
        }
    }
}

/// File-name stem of an arm, e.g. `bundle_cutting_plane_10`.
pub fn arm_file_stem(algorithm: &Algorithm) -> String {
    algorithm.label().replace(':', "_")
}

pub fn trajectory_csv(out: &RunOutput) -> String {
    let mut s = String::with_capacity(80 * (out.trajectory.len() + 1));
    s.push_str(RUN_HEADER);
    s.push('\n');
    for m in &out.trajectory {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{}",
            m.k, m.consensus_residual, m.grad_residual, m.rel_error, m.cumulative_kkt_sum, m.inner_iters_total
        );
    }
    s
}

fn snapshot(spec: &ExperimentSpec, problem: &Problem, network: &Network, extra: &[(&str, String)]) -> String {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut s = String::new();
    let _ = writeln!(s, "# created_unix = {created}");
    let _ = writeln!(s, "# instance_sha256 = {}", problem.fingerprint());
    let _ = writeln!(s, "# graph_edges = {}", network.graph().num_edges());
    let _ = writeln!(s, "# lambda_min_wt = {:e}", network.mixing().lambda_min_wt());
    let _ = writeln!(s, "# smoothness = {:e}", problem.smoothness());
    for (k, v) in extra {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s.push_str(&spec.to_config_string());
    s
}

fn prepare_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ArmResult {
    pub algorithm: Algorithm,
    pub path: PathBuf,
    pub output: RunOutput,
}

/// Runs every arm at the spec's step size and writes `<arm>.csv` per arm
/// plus the snapshot sidecar.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<Vec<ArmResult>> {
    let (problem, network) = spec.build()?;
    let alpha = spec.resolve_alpha(&problem, &network);
    prepare_output(&spec.output)?;
    let outputs = spec.in_pool(|| {
        spec.arms
            .par_iter()
            .map(|arm| run(&problem, &network, &spec.run_config(*arm, alpha)))
            .collect::<Vec<_>>()
    })?;
    let mut results = Vec::with_capacity(outputs.len());
    for (arm, output) in spec.arms.iter().zip(outputs) {
        let output = output?;
        let path = spec.output.join(format!("{}.csv", arm_file_stem(arm)));
        fs::write(&path, trajectory_csv(&output))?;
        results.push(ArmResult {
            algorithm: *arm,
            path,
            output,
        });
    }
    let extra = [("alpha_resolved", format!("{alpha:e}"))];
    fs::write(spec.output.join(SNAPSHOT_FILE), snapshot(spec, &problem, &network, &extra))?;
    Ok(results)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub final_rel_error: f64,
    pub iters_to_tol: Option<usize>,
    pub diverged: bool,
}

/// Runs every `(arm, α)` pair until `rel_error ≤ tol`, divergence or the
/// budget, in parallel, and returns rows in arm-major order.
pub fn sweep(spec: &ExperimentSpec, problem: &Problem, network: &Network) -> Result<Vec<SweepRow>> {
    let points: Vec<(Algorithm, f64)> = spec
        .arms
        .iter()
        .flat_map(|arm| spec.sweep_alphas.iter().map(move |a| (*arm, *a)))
        .collect();
    let rows = spec.in_pool(|| {
        points
            .par_iter()
            .map(|&(algorithm, alpha)| {
                let mut cfg = spec.run_config(algorithm, alpha);
                cfg.stop_at_rel_error = Some(spec.tol);
                let out = run(problem, network, &cfg)?;
                Ok(SweepRow {
                    algorithm,
                    alpha,
                    final_rel_error: out.final_metrics().rel_error,
                    iters_to_tol: out.reached_tol_at,
                    diverged: out.diverged,
                })
            })
            .collect::<Vec<Result<SweepRow>>>()
    })?;
    rows.into_iter().collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let iters = r.iters_to_tol.map_or("not reached".to_string(), |k| k.to_string());
        let _ = writeln!(
            s,
            "{},{:e},{:e},{},{}",
            r.algorithm.label(),
            r.alpha,
            r.final_rel_error,
            iters,
            r.diverged
        );
    }
    s
}

/// Writes `sweep.csv` and the snapshot sidecar.
pub fn cmd_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    let (problem, network) = spec.build()?;
    prepare_output(&spec.output)?;
    let rows = sweep(spec, &problem, &network)?;
    fs::write(spec.output.join(SWEEP_FILE), sweep_csv(&rows))?;
    let extra = [(
        "converged_when",
        format!("rel_error <= {:e} within {} iterations", spec.tol, spec.max_iters),
    )];
    fs::write(spec.output.join(SNAPSHOT_FILE), snapshot(spec, &problem, &network, &extra))?;
    Ok(rows)
}
