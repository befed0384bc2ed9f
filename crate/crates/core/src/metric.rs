//! Metric jets, metric sources, and analytic metrics.

use std::sync::Arc;

use crate::linalg::{self, Mat3, Vec3, ZERO3};
use crate::mesh::CellGeometry;

/// Value and Cartesian derivatives of a symmetric (0,2)-tensor field at a
/// point. `dg[k] = ∂_k g`, `d2g[k][l] = ∂_k ∂_l g`. Entries beyond `dim` and
/// derivatives beyond the requested order are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricJet {
    pub dim: usize,
    pub point: Vec3,
    pub g: Mat3,
    pub dg: [Mat3; 3],
    pub d2g: [[Mat3; 3]; 3],
}

impl MetricJet {
    pub fn constant(dim: usize, point: Vec3, g: Mat3) -> Self {
        MetricJet { dim, point, g, dg: [ZERO3; 3], d2g: [[ZERO3; 3]; 3] }
    }

    pub fn euclidean(dim: usize, point: Vec3) -> Self {
        Self::constant(dim, point, linalg::identity(dim))
    }

    /// `a·self + b·other`, componentwise.
    pub fn combine(&self, a: f64, other: &MetricJet, b: f64) -> MetricJet {
        let mut out = *self;
        let lin = |x: &Mat3, y: &Mat3| -> Mat3 {
            let mut m = ZERO3;
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = a * x[i][j] + b * y[i][j];
                }
            }
            m
        };
        out.g = lin(&self.g, &other.g);
        for k in 0..3 {
            out.dg[k] = lin(&self.dg[k], &other.dg[k]);
            for l in 0..3 {
                out.d2g[k][l] = lin(&self.d2g[k][l], &other.d2g[k][l]);
            }
        }
        out
    }

    /// Product with a scalar field given by its value, gradient and Hessian.
    pub fn times_scalar(&self, v: f64, dv: &Vec3, d2v: &Mat3) -> MetricJet {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.g[i][j] = v * self.g[i][j];
                for k in 0..3 {
                    out.dg[k][i][j] = v * self.dg[k][i][j] + dv[k] * self.g[i][j];
                    for l in 0..3 {
                        out.d2g[k][l][i][j] = v * self.d2g[k][l][i][j]
                            + dv[k] * self.dg[l][i][j]
                            + dv[l] * self.dg[k][i][j]
                            + d2v[k][l] * self.g[i][j];
                    }
                }
            }
        }
        out
    }
}

/// Anything that yields a metric jet at a reference point of a mesh cell.
/// Jets are in physical Cartesian coordinates; `order` is the highest
/// derivative order required (0, 1 or 2).
pub trait MetricSource: Sync {
    fn dim(&self) -> usize;
    fn jet(&self, cell: usize, geom: &CellGeometry, xi: &Vec3, order: usize) -> MetricJet;
    /// Highest polynomial degree of the source on a cell, `None` if not
    /// polynomial. Used only to skip identically vanishing terms.
    fn cell_degree(&self) -> Option<usize> {
        None
    }
}

type JetFn = dyn Fn(&Vec3, usize) -> MetricJet + Send + Sync;
type ScalarFn = dyn Fn(&Vec3) -> f64 + Send + Sync;

/// A smooth metric given in closed form with its derivatives.
#[derive(Clone)]
pub struct AnalyticMetric {
    dim: usize,
    jet: Arc<JetFn>,
    exact_curvature: Option<Arc<ScalarFn>>,
    degree: Option<usize>,
}

impl std::fmt::Debug for AnalyticMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticMetric")
            .field("dim", &self.dim)
            .field("has_exact_curvature", &self.exact_curvature.is_some())
            .field("degree", &self.degree)
            .finish()
    }
}

impl AnalyticMetric {
    pub fn new(dim: usize, jet: impl Fn(&Vec3, usize) -> MetricJet + Send + Sync + 'static) -> Self {
        AnalyticMetric { dim, jet: Arc::new(jet), exact_curvature: None, degree: None }
    }

    pub fn with_exact_curvature(mut self, r: impl Fn(&Vec3) -> f64 + Send + Sync + 'static) -> Self {
        self.exact_curvature = Some(Arc::new(r));
        self
    }

    /// Declares the metric polynomial of the given total degree.
    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = Some(degree);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree
    }

    pub fn eval(&self, x: &Vec3, order: usize) -> MetricJet {
        (self.jet)(x, order)
    }

    pub fn exact_curvature(&self, x: &Vec3) -> Option<f64> {
        self.exact_curvature.as_ref().map(|r| r(x))
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(dim, move |x, _| MetricJet::euclidean(dim, *x)).with_exact_curvature(|_| 0.0).with_degree(0)
    }

    /// Constant metric.
    pub fn constant(dim: usize, g: Mat3) -> Self {
        Self::new(dim, move |x, _| MetricJet::constant(dim, *x, g)).with_exact_curvature(|_| 0.0).with_degree(0)
    }

    /// `g(x) = g₀ + Σ_k x_k A_k`.
    pub fn affine(dim: usize, g0: Mat3, a: [Mat3; 3]) -> Self {
        Self::new(dim, move |x, _| {
            let mut jet = MetricJet::constant(dim, *x, g0);
            for k in 0..dim {
                for i in 0..dim {
                    for j in 0..dim {
                        jet.g[i][j] += x[k] * a[k][i][j];
                    }
                }
                jet.dg[k] = a[k];
            }
            jet
        })
        .with_degree(1)
    }

    /// Metric induced by the graph `x ↦ (x, f(x))` with
    /// `f(x) = Σ_i (x_i²/2 − x_i⁴/12)` on `(−1,1)^N`: `g = I + s sᵀ` with
    /// `s_i = x_i − x_i³/3`.
    pub fn graph_example(dim: usize) -> Self {
        let jet = move |x: &Vec3, order: usize| {
            let mut s = [0.0; 3];
            let mut ds = [0.0; 3];
            let mut d2s = [0.0; 3];
            for i in 0..dim {
                s[i] = x[i] - x[i].powi(3) / 3.0;
                ds[i] = 1.0 - x[i] * x[i];
                d2s[i] = -2.0 * x[i];
            }
            let mut out = MetricJet::euclidean(dim, *x);
            for i in 0..dim {
                for j in 0..dim {
                    out.g[i][j] += s[i] * s[j];
                }
            }
            let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            if order >= 1 {
                for k in 0..dim {
                    for i in 0..dim {
                        for j in 0..dim {
                            out.dg[k][i][j] = ds[k] * (delta(i, k) * s[j] + delta(j, k) * s[i]);
                        }
                    }
                }
            }
            if order >= 2 {
                for k in 0..dim {
                    for l in 0..dim {
                        for i in 0..dim {
                            for j in 0..dim {
                                out.d2g[k][l][i][j] = delta(k, l) * d2s[k] * (delta(i, k) * s[j] + delta(j, k) * s[i])
                                    + ds[k] * ds[l] * (delta(i, k) * delta(j, l) + delta(j, k) * delta(i, l));
                            }
                        }
                    }
                }
            }
            out
        };
        let q = |t: f64| t * t * (t * t - 3.0).powi(2);
        let exact = move |x: &Vec3| -> f64 {
            if dim == 2 {
                let den = 9.0 + q(x[0]) + q(x[1]);
                162.0 * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) / (den * den)
            } else {
                let (a, b, c) = (1.0 - x[0] * x[0], 1.0 - x[1] * x[1], 1.0 - x[2] * x[2]);
                let den = 9.0 + q(x[0]) + q(x[1]) + q(x[2]);
                18.0 * (a * b * (9.0 + q(x[2])) + b * c * (9.0 + q(x[0])) + c * a * (9.0 + q(x[1]))) / (den * den)
            }
        };
        Self::new(dim, jet).with_exact_curvature(exact).with_degree(6)
    }
}

/// An analytic metric viewed cellwise on a mesh.
impl MetricSource for AnalyticMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, _cell: usize, geom: &CellGeometry, xi: &Vec3, order: usize) -> MetricJet {
        self.eval(&geom.map(xi), order)
    }

    fn cell_degree(&self) -> Option<usize> {
        self.degree
    }
}

/// `(1 − t)·a + t·b`.
pub struct Blend<'a> {
    pub a: &'a dyn MetricSource,
    pub b: &'a dyn MetricSource,
    pub t: f64,
}

impl MetricSource for Blend<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn jet(&self, cell: usize, geom: &CellGeometry, xi: &Vec3, order: usize) -> MetricJet {
        let ja = self.a.jet(cell, geom, xi, order);
        let jb = self.b.jet(cell, geom, xi, order);
        ja.combine(1.0 - self.t, &jb, self.t)
    }

    fn cell_degree(&self) -> Option<usize> {
        match (self.a.cell_degree(), self.b.cell_degree()) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        }
    }
}

/// `b − a`, the velocity of the linear path from `a` to `b`.
pub struct Difference<'a> {
    pub a: &'a dyn MetricSource,
    pub b: &'a dyn MetricSource,
}

impl MetricSource for Difference<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn jet(&self, cell: usize, geom: &CellGeometry, xi: &Vec3, order: usize) -> MetricJet {
        let ja = self.a.jet(cell, geom, xi, order);
        let jb = self.b.jet(cell, geom, xi, order);
        jb.combine(1.0, &ja, -1.0)
    }

    fn cell_degree(&self) -> Option<usize> {
        match (self.a.cell_degree(), self.b.cell_degree()) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        }
    }
}

/// Linear path `g̃(t) = (1 − t) g + t g_h` with velocity `σ = g_h − g`.
pub struct MetricPath<'a> {
    pub start: &'a dyn MetricSource,
    pub end: &'a dyn MetricSource,
}

impl<'a> MetricPath<'a> {
    pub fn new(start: &'a dyn MetricSource, end: &'a dyn MetricSource) -> Self {
        MetricPath { start, end }
    }

    pub fn at(&self, t: f64) -> Blend<'a> {
        Blend { a: self.start, b: self.end, t }
    }

    pub fn velocity(&self) -> Difference<'a> {
        Difference { a: self.start, b: self.end }
    }
}
