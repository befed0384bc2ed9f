//! Refinement sweeps: curvature error and critical-term norms per level,
//! estimated orders and CSV output.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functionals::{assemble_distributional_curvature, assemble_exact_curvature, critical_term_functional, default_exactness, Assembler};
use crate::hhj::{neg2_norm, SolverKind};
use crate::lagrange::LagrangeSpace;
use crate::mesh::SimplicialMesh;
use crate::metric::AnalyticMetric;
use crate::regge::{count_dofs, interpolate_average, interpolate_canonical, ReggeField, ReggeSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolant {
    Average,
    Canonical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Curvature,
    Critical,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub dim: usize,
    pub degree: usize,
    pub interpolant: Interpolant,
    pub kmin: u32,
    pub kmax: u32,
    pub seed: u64,
    pub mode: Mode,
    /// Extra exactness of metric-dependent quadrature.
    pub quad_bump: usize,
    pub solver: SolverKind,
    /// Regge DOF count above which a level triggers a warning.
    pub dof_budget: usize,
}

impl RunConfig {
    pub fn new(dim: usize, degree: usize, interpolant: Interpolant, kmin: u32, kmax: u32) -> Self {
        RunConfig {
            dim,
            degree,
            interpolant,
            kmin,
            kmax,
            seed: 0,
            mode: Mode::Curvature,
            quad_bump: 0,
            solver: SolverKind::Direct,
            dof_budget: 2_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::InvalidDimension(self.dim));
        }
        if self.kmax < self.kmin {
            return Err(Error::InvalidArgument(format!("kmax {} < kmin {}", self.kmax, self.kmin)));
        }
        if self.mode == Mode::Critical && self.dim != 3 {
            return Err(Error::InvalidArgument("the critical term is defined in 3D only".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub k: u32,
    /// Max cell diameter after perturbation.
    pub h: f64,
    /// Global Regge DOFs of `g_h`.
    pub ndof: usize,
    pub error: f64,
    pub order: Option<f64>,
}

/// Outcome of a sweep: the rows completed before any failure.
#[derive(Debug)]
pub struct Sweep {
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
    pub failure: Option<(u32, Error)>,
}

impl Sweep {
    pub fn into_result(self) -> Result<Vec<ConvergenceRow>> {
        match self.failure {
            None => Ok(self.rows),
            Some((k, e)) => Err(Error::Solver(format!("level {k}: {e}"))),
        }
    }
}

/// Mesh of level `k`: structured, interior vertices perturbed with the
/// per-level stream `k`.
pub fn level_mesh(dim: usize, k: u32, seed: u64) -> Result<Arc<SimplicialMesh>> {
    Ok(Arc::new(SimplicialMesh::build_structured(dim, k)?.perturb_interior(seed, k as u64)?))
}

pub fn interpolate(metric: &AnalyticMetric, space: &Arc<ReggeSpace>, kind: Interpolant) -> Result<ReggeField> {
    match kind {
        Interpolant::Average => interpolate_average(metric, space),
        Interpolant::Canonical => interpolate_canonical(metric, space),
    }
}

struct Level {
    h: f64,
    ndof: usize,
    value: f64,
}

fn run_level(config: &RunConfig, metric: &AnalyticMetric, k: u32) -> Result<Level> {
    let mesh = level_mesh(config.dim, k, config.seed)?;
    let r = config.degree;
    let q = r + 2;
    let space = ReggeSpace::new(mesh.clone(), r)?;
    let gh = interpolate(metric, &space, config.interpolant)?;
    let lagrange = LagrangeSpace::new(mesh.clone(), q)?;
    let asm = Assembler::new(lagrange.clone(), default_exactness(r, q, config.quad_bump))?;
    let functional = match config.mode {
        Mode::Curvature => {
            let dist = assemble_distributional_curvature(&asm, &gh)?;
            let exact = assemble_exact_curvature(&asm, metric)?;
            dist.axpy(-1.0, &exact)
        }
        Mode::Critical => critical_term_functional(&asm, metric, &gh)?,
    };
    let value = neg2_norm(&functional, &lagrange, config.solver)?;
    Ok(Level { h: mesh.max_diameter(), ndof: space.ndof(), value })
}

fn sweep(config: &RunConfig) -> Sweep {
    let mut out = Sweep { rows: Vec::new(), warnings: Vec::new(), failure: None };
    if let Err(e) = config.validate() {
        out.failure = Some((config.kmin, e));
        return out;
    }
    let metric = AnalyticMetric::graph_example(config.dim);
    for k in config.kmin..=config.kmax {
        if let Ok(m) = SimplicialMesh::build_structured(config.dim, k) {
            let n = count_dofs(&m, config.degree);
            if n > config.dof_budget {
                out.warnings.push(format!("level {k}: {n} Regge DOFs exceed the budget of {}", config.dof_budget));
            }
        }
        match run_level(config, &metric, k) {
            Ok(level) => {
                let order = out.rows.last().and_then(|prev: &ConvergenceRow| order_between(prev.error, level.value, prev.h, level.h));
                out.rows.push(ConvergenceRow { k, h: level.h, ndof: level.ndof, error: level.value, order });
            }
            Err(e) => {
                out.failure = Some((k, e));
                break;
            }
        }
    }
    out
}

/// Curvature error sweep: `‖(Rω)_dist(g_h) − (Rω)(g)‖` per level.
pub fn run_convergence(config: &RunConfig) -> Sweep {
    let mut c = config.clone();
    c.mode = Mode::Curvature;
    sweep(&c)
}

/// Critical-term sweep (3D): norm of the critical-term functional per level.
pub fn run_critical_term(config: &RunConfig) -> Sweep {
    let mut c = config.clone();
    c.mode = Mode::Critical;
    sweep(&c)
}

pub fn run(config: &RunConfig) -> Sweep {
    sweep(config)
}

fn order_between(e0: f64, e1: f64, h0: f64, h1: f64) -> Option<f64> {
    if e0 > 0.0 && e1 > 0.0 && h0 > 0.0 && h1 > 0.0 && h0 != h1 {
        Some((e0 / e1).ln() / (h0 / h1).ln())
    } else {
        None
    }
}

/// `orderₖ = log(eₖ₋₁/eₖ) / log(hₖ₋₁/hₖ)`; `None` for the first row and for
/// non-positive entries.
pub fn estimate_order(errors: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| if i == 0 { None } else { order_between(errors[i - 1], errors[i], hs[i - 1], hs[i]) })
        .collect()
}

pub const CSV_HEADER: &str = "k,h,ndof,error,order";

pub fn csv_string(rows: &[ConvergenceRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CSV_HEADER}");
    for r in rows {
        let order = r.order.map(|o| format!("{o:e}")).unwrap_or_default();
        let _ = writeln!(s, "{},{:e},{},{:e},{}", r.k, r.h, r.ndof, r.error, order);
    }
    s
}

pub fn emit_csv(rows: &[ConvergenceRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, csv_string(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Parse("missing CSV header".into()));
    }
    let bad = |l: &str| Error::Parse(format!("bad CSV row {l:?}"));
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(bad(l));
            }
            Ok(ConvergenceRow {
                k: f[0].parse().map_err(|_| bad(l))?,
                h: f[1].parse().map_err(|_| bad(l))?,
                ndof: f[2].parse().map_err(|_| bad(l))?,
                error: f[3].parse().map_err(|_| bad(l))?,
                order: if f[4].is_empty() { None } else { Some(f[4].parse().map_err(|_| bad(l))?) },
            })
        })
        .collect()
}
