//! Assembly of curvature functionals against a Lagrange test space.
//!
//! Every assembly produces full vectors over all Lagrange DOFs, boundary DOFs
//! included, so that pairings with `v ≡ 1` are plain sums. A
//! [`FunctionalVector`] keeps the entries of the DOFs vanishing on `∂Ω`.
//!
//! Per-cell, per-face and per-ridge contributions are computed in parallel
//! and scattered sequentially in index order, so results do not depend on
//! the thread count.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    dihedral_from_covectors, einstein_tensor, inverse_metric, ridge_face_locals, ridge_locals, scalar_curvature,
    second_fundamental_form, tensor_inner, FaceFrame,
};
use crate::lagrange::LagrangeSpace;
use crate::linalg::{self, Mat3, Vec3, ZERO3};
use crate::mesh::{local_edges, CellGeometry};
use crate::metric::{AnalyticMetric, MetricJet, MetricPath, MetricSource};
use crate::polynomial::BasisJets;
use crate::quadrature::{gauss_legendre, simplex_quadrature, QuadratureRule, MAX_EXACTNESS};
use crate::regge::{subsimplex_point, subsimplex_tangents, ReggeField};

/// A functional on the Lagrange test space with zero boundary values,
/// stored as its values on the interior basis functions.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalVector {
    pub q: usize,
    pub entries: Vec<f64>,
}

impl FunctionalVector {
    pub fn zeros(q: usize, n: usize) -> Self {
        FunctionalVector { q, entries: vec![0.0; n] }
    }

    pub fn from_full(space: &LagrangeSpace, full: &[f64]) -> Self {
        FunctionalVector { q: space.degree(), entries: space.restrict(full) }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        FunctionalVector { q: self.q, entries: self.entries.iter().map(|v| c * v).collect() }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &FunctionalVector) -> Self {
        debug_assert_eq!(self.len(), other.len());
        FunctionalVector { q: self.q, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + c * b).collect() }
    }

    /// Value on the test function with interior coefficients `v`.
    pub fn pair(&self, v: &[f64]) -> f64 {
        self.entries.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Text form: header `q ndof`, then one entry per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.q, self.len());
        for v in &self.entries {
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty functional".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        if h.len() != 2 {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let entries: Vec<f64> = lines
            .map(|l| l.trim().parse().map_err(|_| Error::Parse(format!("bad entry {l:?}"))))
            .collect::<Result<_>>()?;
        if entries.len() != h[1] {
            return Err(Error::Parse(format!("{} entries, header says {}", entries.len(), h[1])));
        }
        Ok(FunctionalVector { q: h[0], entries })
    }
}

/// Full vectors of the cell, face and ridge contributions of a functional.
#[derive(Clone, Debug)]
pub struct Terms {
    pub cell: Vec<f64>,
    pub face: Vec<f64>,
    pub ridge: Vec<f64>,
}

impl Terms {
    pub fn total(&self) -> Vec<f64> {
        self.cell.iter().zip(&self.face).zip(&self.ridge).map(|((a, b), c)| a + b + c).collect()
    }

    /// Pairing with `v ≡ 1`.
    pub fn sum(&self) -> f64 {
        self.total().iter().sum()
    }

    pub fn functional(&self, space: &LagrangeSpace) -> FunctionalVector {
        FunctionalVector::from_full(space, &self.total())
    }
}

/// Coefficients of one quadrature point's contribution to every test
/// function: `a·v + b·∇v + C:∇²v`, in physical coordinates.
#[derive(Clone, Copy, Debug, Default)]
struct TestWeights {
    a: f64,
    b: Vec3,
    c: Mat3,
}

fn add_context(e: Error, what: impl FnOnce() -> String) -> Error {
    match e {
        Error::NotPositiveDefinite { context } => Error::NotPositiveDefinite { context: format!("{}: {context}", what()) },
        Error::AngleOutOfRange { cos, context } => Error::AngleOutOfRange { cos, context: format!("{}: {context}", what()) },
        other => other,
    }
}

/// Default exactness of metric-dependent integrals.
pub fn default_exactness(r: usize, q: usize, bump: usize) -> usize {
    (2 * r + 2 * q + 4 + bump).min(MAX_EXACTNESS)
}

/// Quadrature rules and reference tabulations shared by all assemblies on
/// one test space.
pub struct Assembler {
    pub space: Arc<LagrangeSpace>,
    pub exactness: usize,
    cell_rule: QuadratureRule,
    face_rule: QuadratureRule,
    ridge_rule: QuadratureRule,
    cell_tab: Vec<BasisJets>,
    /// `[local face][point]`
    face_tab: Vec<Vec<BasisJets>>,
    /// `[local ridge][point]`, local ridges as in [`local_ridges`].
    ridge_tab: Vec<Vec<BasisJets>>,
}

/// Local ridges of a cell: vertices in 2D, edges in 3D.
pub fn local_ridges(dim: usize) -> Vec<Vec<usize>> {
    if dim == 2 {
        (0..3).map(|v| vec![v]).collect()
    } else {
        local_edges(3).iter().map(|e| e.to_vec()).collect()
    }
}

impl Assembler {
    pub fn new(space: Arc<LagrangeSpace>, exactness: usize) -> Result<Self> {
        let dim = space.mesh.dim();
        let exactness = exactness.min(MAX_EXACTNESS);
        let cell_rule = simplex_quadrature(dim, exactness)?;
        let face_rule = simplex_quadrature(dim - 1, exactness)?;
        let ridge_rule = simplex_quadrature(dim - 2, exactness)?;
        let basis = &space.basis;
        let cell_tab = cell_rule.points.iter().map(|p| basis.tabulate(p, 2)).collect();
        let face_tab = (0..=dim)
            .map(|l| {
                let locals: Vec<usize> = (0..=dim).filter(|&m| m != l).collect();
                face_rule.points.iter().map(|p| basis.tabulate(&subsimplex_point(&locals, p), 1)).collect()
            })
            .collect();
        let ridge_tab = local_ridges(dim)
            .iter()
            .map(|locals| ridge_rule.points.iter().map(|p| basis.tabulate(&subsimplex_point(locals, p), 0)).collect())
            .collect();
        Ok(Assembler { space, exactness, cell_rule, face_rule, ridge_rule, cell_tab, face_tab, ridge_tab })
    }

    pub fn dim(&self) -> usize {
        self.space.mesh.dim()
    }

    fn ndof(&self) -> usize {
        self.space.ndof()
    }

    fn scatter(&self, parts: Vec<Result<Vec<(usize, Vec<f64>)>>>) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.ndof()];
        for part in parts {
            for (cell, local) in part? {
                for (i, &d) in self.space.cell_dofs(cell).iter().enumerate() {
                    out[d] += local[i];
                }
            }
        }
        Ok(out)
    }

    fn apply(local: &mut [f64], tab: &BasisJets, w: &TestWeights, geom: &CellGeometry) {
        let dim = geom.dim;
        let ji = &geom.jac_inv;
        // b·∇v = (J⁻¹b)·∇̂v, C:∇²v = (J⁻¹ C J⁻ᵀ):∇̂²v
        let mut bh = [0.0; 3];
        let mut ch = ZERO3;
        let has_b = w.b.iter().any(|&v| v != 0.0);
        let has_c = w.c.iter().flatten().any(|&v| v != 0.0);
        if has_b {
            bh = linalg::matvec(ji, &w.b, dim);
        }
        if has_c {
            ch = linalg::matmul(&linalg::matmul(ji, &w.c, dim), &linalg::transpose(ji), dim);
        }
        for (i, li) in local.iter_mut().enumerate() {
            let mut s = w.a * tab.val[i];
            if has_b {
                s += linalg::dot(&bh, &tab.grad[i], dim);
            }
            if has_c {
                s += linalg::contract(&ch, &tab.hess[i], dim);
            }
            *li += s;
        }
    }

    /// Sum over cells of `∫_T kernel · dξ |det J|`.
    fn cell_pass<F>(&self, kernel: F) -> Result<Vec<f64>>
    where
        F: Fn(usize, &CellGeometry, &Vec3) -> Result<TestWeights> + Sync,
    {
        let mesh = &self.space.mesh;
        let nloc = self.space.basis.len();
        let parts: Vec<Result<Vec<(usize, Vec<f64>)>>> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let geom = mesh.geometry(c);
                let mut local = vec![0.0; nloc];
                for (k, (p, w)) in self.cell_rule.points.iter().zip(&self.cell_rule.weights).enumerate() {
                    let mut tw = kernel(c, &geom, p).map_err(|e| add_context(e, || format!("cell {c}")))?;
                    let s = w * geom.det.abs();
                    tw.a *= s;
                    for d in 0..3 {
                        tw.b[d] *= s;
                        for e in 0..3 {
                            tw.c[d][e] *= s;
                        }
                    }
                    Self::apply(&mut local, &self.cell_tab[k], &tw, &geom);
                }
                Ok(vec![(c, local)])
            })
            .collect();
        self.scatter(parts)
    }

    /// Sum over faces (interior only unless `boundary`) and their sides of
    /// `∫ kernel dη`; the kernel sees the side's outward frame and its own
    /// metric. Kernels include the face measure themselves.
    fn face_pass<F>(&self, boundary: bool, kernel: F) -> Result<Vec<f64>>
    where
        F: Fn(usize, &CellGeometry, &Vec3, &Vec3, &[Vec3]) -> Result<TestWeights> + Sync,
    {
        let mesh = &self.space.mesh;
        let dim = mesh.dim();
        let nloc = self.space.basis.len();
        let parts: Vec<Result<Vec<(usize, Vec<f64>)>>> = (0..mesh.faces().len())
            .into_par_iter()
            .map(|f| {
                let face = &mesh.faces()[f];
                if !face.interior && !boundary {
                    return Ok(Vec::new());
                }
                let tangents = subsimplex_tangents(mesh.vertices(), &face.vertices);
                let mut out = Vec::with_capacity(2);
                for inc in &face.cells {
                    let geom = mesh.geometry(inc.cell);
                    let locals: Vec<usize> = (0..=dim).filter(|&m| m != inc.local).collect();
                    let nu = geom.outward_normal(inc.local);
                    let mut local = vec![0.0; nloc];
                    for (k, (p, w)) in self.face_rule.points.iter().zip(&self.face_rule.weights).enumerate() {
                        let xi = subsimplex_point(&locals, p);
                        let mut tw = kernel(inc.cell, &geom, &xi, &nu, &tangents)
                            .map_err(|e| add_context(e, || format!("face {f} in cell {}", inc.cell)))?;
                        tw.a *= w;
                        for d in 0..3 {
                            tw.b[d] *= w;
                        }
                        Self::apply(&mut local, &self.face_tab[inc.local][k], &tw, &geom);
                    }
                    out.push((inc.cell, local));
                }
                Ok(out)
            })
            .collect();
        self.scatter(parts)
    }

    /// Sum over interior ridges of `∫_S kernel(Θ_S, g_S, σ_S) v dt`, where
    /// `g_S`, `σ_S` are the ridge restrictions `τᵀgτ`, `τᵀστ` (unity in 2D)
    /// and the test function and restrictions come from the first ring cell.
    fn ridge_pass<F>(&self, g: &dyn MetricSource, sigma: Option<&dyn MetricSource>, kernel: F) -> Result<Vec<f64>>
    where
        F: Fn(f64, f64, f64) -> f64 + Sync,
    {
        let mesh = &self.space.mesh;
        let dim = mesh.dim();
        let nloc = self.space.basis.len();
        let ridges = local_ridges(dim);
        let parts: Vec<Result<Vec<(usize, Vec<f64>)>>> = (0..mesh.ridges().len())
            .into_par_iter()
            .map(|s| {
                let ridge = &mesh.ridges()[s];
                if !ridge.interior {
                    return Ok(Vec::new());
                }
                let first = ridge.ring[0].cell;
                let geom0 = mesh.geometry(first);
                let locals0 = ridge_locals(&geom0.sorted[..=dim], &ridge.vertices);
                let ridx = ridges.iter().position(|r| *r == locals0).expect("local ridge");
                let tau = if dim == 3 { subsimplex_tangents(mesh.vertices(), &ridge.vertices)[0] } else { [0.0; 3] };
                let geoms: Vec<CellGeometry> = ridge.ring.iter().map(|e| mesh.geometry(e.cell)).collect();
                let mut local = vec![0.0; nloc];
                for (k, (p, w)) in self.ridge_rule.points.iter().zip(&self.ridge_rule.weights).enumerate() {
                    let mut angle_sum = 0.0;
                    for (entry, geom) in ridge.ring.iter().zip(&geoms) {
                        let sorted = &geom.sorted[..=dim];
                        let xi = subsimplex_point(&ridge_locals(sorted, &ridge.vertices), p);
                        let gj = g.jet(entry.cell, geom, &xi, 0);
                        let ginv = inverse_metric(&gj.g, dim)
                            .map_err(|e| add_context(e, || format!("ridge {s} in cell {}", entry.cell)))?;
                        let [a, b] = ridge_face_locals(sorted, &ridge.vertices);
                        angle_sum += dihedral_from_covectors(&ginv, &geom.barycentric_gradient(a), &geom.barycentric_gradient(b), dim)
                            .map_err(|e| add_context(e, || format!("ridge {s} in cell {}", entry.cell)))?;
                    }
                    let theta = 2.0 * PI - angle_sum;
                    let xi0 = subsimplex_point(&locals0, p);
                    let (gs, ss) = if dim == 3 {
                        let gs = linalg::bilinear(&g.jet(first, &geom0, &xi0, 0).g, &tau, &tau, 3);
                        let ss = match sigma {
                            Some(sig) => linalg::bilinear(&sig.jet(first, &geom0, &xi0, 0).g, &tau, &tau, 3),
                            None => 0.0,
                        };
                        (gs, ss)
                    } else {
                        (1.0, 0.0)
                    };
                    let tw = TestWeights { a: w * kernel(theta, gs, ss), ..Default::default() };
                    Self::apply(&mut local, &self.ridge_tab[ridx][k], &tw, &geom0);
                }
                Ok(vec![(first, local)])
            })
            .collect();
        self.scatter(parts)
    }

    /// `Σ_T ∫ R v ω + 2 Σ̊_F ∫ ⟦H⟧ v ω_F + 2 Σ̊_S ∫ Θ v ω_S`.
    pub fn distributional_curvature(&self, g: &dyn MetricSource) -> Result<Terms> {
        let dim = self.dim();
        let flat_cells = g.cell_degree() == Some(0);
        let cell = if flat_cells {
            vec![0.0; self.ndof()]
        } else {
            self.cell_pass(|c, geom, xi| {
                let jet = g.jet(c, geom, xi, 2);
                let r = scalar_curvature(&jet)?;
                Ok(TestWeights { a: r * linalg::det(&jet.g, dim).sqrt(), ..Default::default() })
            })?
        };
        let face = if flat_cells {
            vec![0.0; self.ndof()]
        } else {
            self.face_pass(false, |c, geom, xi, nu, tangents| {
                let jet = g.jet(c, geom, xi, 1);
                let frame = FaceFrame::new(&jet.g, *nu, tangents.to_vec(), dim)?;
                let sff = second_fundamental_form(&jet, &frame)?;
                let area = linalg::det(&sff.face_metric, dim - 1).sqrt();
                Ok(TestWeights { a: 2.0 * sff.mean * area, ..Default::default() })
            })?
        };
        let ridge = self.ridge_pass(g, None, |theta, gs, _| 2.0 * theta * gs.sqrt())?;
        Ok(Terms { cell, face, ridge })
    }

    /// `∫_Ω R(g) v ω` for a smooth metric. When the metric carries an exact
    /// curvature formula it is used and cross-checked once per cell.
    pub fn exact_curvature(&self, metric: &AnalyticMetric) -> Result<Vec<f64>> {
        let dim = self.dim();
        let centroid = [1.0 / (dim + 1) as f64; 3];
        let check = |c: usize, geom: &CellGeometry| -> Result<()> {
            let x = geom.map(&centroid);
            if let Some(exact) = metric.exact_curvature(&x) {
                let computed = scalar_curvature(&metric.eval(&x, 2))?;
                if (exact - computed).abs() > 1e-8 * exact.abs().max(1.0) {
                    return Err(Error::CurvatureMismatch { cell: c, exact, computed });
                }
            }
            Ok(())
        };
        let first_point = self.cell_rule.points[0];
        self.cell_pass(|c, geom, xi| {
            if *xi == first_point {
                check(c, geom)?;
            }
            let x = geom.map(xi);
            let (r, g) = match metric.exact_curvature(&x) {
                Some(r) => (r, metric.eval(&x, 0).g),
                None => {
                    let jet = metric.eval(&x, 2);
                    (scalar_curvature(&jet)?, jet.g)
                }
            };
            Ok(TestWeights { a: r * linalg::det(&g, dim).sqrt(), ..Default::default() })
        })
    }

    /// `b_h(g; σ, v) = Σ_T ∫_T ⟨𝕊σ, ∇∇v⟩ ω − Σ_T ∫_{∂T} 𝕊σ(n, n) ∇_n v ω_F`
    /// over all faces, boundary faces included.
    pub fn bh(&self, g: &dyn MetricSource, sigma: &dyn MetricSource) -> Result<Vec<f64>> {
        let dim = self.dim();
        let cell = self.cell_pass(|c, geom, xi| {
            let jet = g.jet(c, geom, xi, 1);
            let s = sigma.jet(c, geom, xi, 0).g;
            let ginv = inverse_metric(&jet.g, dim)?;
            let gamma = crate::geometry::christoffel(&jet)?;
            let tr = linalg::contract(&ginv, &s, dim);
            let mut ss = s;
            for i in 0..dim {
                for j in 0..dim {
                    ss[i][j] -= jet.g[i][j] * tr;
                }
            }
            let up = linalg::matmul(&linalg::matmul(&ginv, &ss, dim), &ginv, dim);
            let vol = linalg::det(&jet.g, dim).sqrt();
            let mut b = [0.0; 3];
            for (k, bk) in b.iter_mut().enumerate().take(dim) {
                *bk = -vol * linalg::contract(&up, &gamma[k], dim);
            }
            let mut cm = up;
            for row in cm.iter_mut() {
                for v in row.iter_mut() {
                    *v *= vol;
                }
            }
            Ok(TestWeights { a: 0.0, b, c: cm })
        })?;
        let face = self.face_pass(true, |c, geom, xi, nu, tangents| {
            let jet = g.jet(c, geom, xi, 0);
            let s = sigma.jet(c, geom, xi, 0).g;
            let ginv = inverse_metric(&jet.g, dim)?;
            let frame = FaceFrame::new(&jet.g, *nu, tangents.to_vec(), dim)?;
            let n = frame.metric_normal;
            let snn = linalg::bilinear(&s, &n, &n, dim) - linalg::contract(&ginv, &s, dim);
            let area = linalg::det(&linalg::congruence(&jet.g, tangents, dim), dim - 1).sqrt();
            let mut b = [0.0; 3];
            for d in 0..dim {
                b[d] = -snn * n[d] * area;
            }
            Ok(TestWeights { a: 0.0, b, c: ZERO3 })
        })?;
        Ok(cell.iter().zip(&face).map(|(a, b)| a + b).collect())
    }

    /// `a_h(g; σ, v) = Σ_T ∫ ⟨G, σ⟩ v ω + Σ̊_F ∫ ⟨⟦IĪ⟧, σ|_F⟩ v ω_F
    /// − Σ̊_S ∫ Θ_S tr_{g|_S} σ|_S v ω_S`; identically zero in 2D.
    pub fn ah(&self, g: &dyn MetricSource, sigma: &dyn MetricSource) -> Result<Terms> {
        let dim = self.dim();
        if dim == 2 {
            let z = vec![0.0; self.ndof()];
            return Ok(Terms { cell: z.clone(), face: z.clone(), ridge: z });
        }
        let flat_cells = g.cell_degree() == Some(0);
        let cell = if flat_cells {
            vec![0.0; self.ndof()]
        } else {
            self.cell_pass(|c, geom, xi| {
                let jet = g.jet(c, geom, xi, 2);
                let s = sigma.jet(c, geom, xi, 0).g;
                let ginv = inverse_metric(&jet.g, dim)?;
                let ein = einstein_tensor(&jet)?;
                let vol = linalg::det(&jet.g, dim).sqrt();
                Ok(TestWeights { a: tensor_inner(&ginv, &ein, &s, dim) * vol, ..Default::default() })
            })?
        };
        let face = if flat_cells {
            vec![0.0; self.ndof()]
        } else {
            self.face_pass(false, |c, geom, xi, nu, tangents| {
                let jet = g.jet(c, geom, xi, 1);
                let s = sigma.jet(c, geom, xi, 0).g;
                let frame = FaceFrame::new(&jet.g, *nu, tangents.to_vec(), dim)?;
                let sff = second_fundamental_form(&jet, &frame)?;
                let k = dim - 1;
                let gfinv = linalg::inverse(&sff.face_metric, k)
                    .ok_or_else(|| Error::NotPositiveDefinite { context: "face metric".into() })?;
                let sf = linalg::congruence(&s, tangents, dim);
                let area = linalg::det(&sff.face_metric, k).sqrt();
                Ok(TestWeights { a: tensor_inner(&gfinv, &sff.iibar, &sf, k) * area, ..Default::default() })
            })?
        };
        let ridge = self.ridge_pass(g, Some(sigma), |theta, gs, ss| -theta * ss / gs * gs.sqrt())?;
        Ok(Terms { cell, face, ridge })
    }

    /// `∫₀¹ Σ̊_S ∫_S ⟨Θ_S(g̃(t)) g̃(t)|_S, σ|_S⟩ v ω_S(g̃(t)) dt` along the
    /// linear path from `g` to `g_h`, with an `n_t`-point Gauss rule in `t`.
    pub fn critical_term(&self, g: &dyn MetricSource, gh: &dyn MetricSource, n_t: usize) -> Result<Vec<f64>> {
        let path = MetricPath::new(g, gh);
        let sigma = path.velocity();
        let rule = gauss_legendre(n_t)?;
        let mut out = vec![0.0; self.ndof()];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let gt = path.at(p[0]);
            let part = self
                .ridge_pass(&gt, Some(&sigma), |theta, gs, ss| theta * ss / gs * gs.sqrt())
                .map_err(|e| add_context(e, || format!("path parameter t = {}", p[0])))?;
            for (o, v) in out.iter_mut().zip(part) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// `∫₀¹ (b_h − a_h)(g̃(t); σ, ·) dt` with an `n_t`-point Gauss rule.
    pub fn integrated_variation(&self, path: &MetricPath, n_t: usize) -> Result<Vec<f64>> {
        let sigma = path.velocity();
        let rule = gauss_legendre(n_t)?;
        let mut out = vec![0.0; self.ndof()];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let gt = path.at(p[0]);
            let b = self.bh(&gt, &sigma)?;
            let a = self.ah(&gt, &sigma)?.total();
            for i in 0..out.len() {
                out[i] += w * (b[i] - a[i]);
            }
        }
        Ok(out)
    }
}

/// Distributional densitized scalar curvature as a functional.
pub fn assemble_distributional_curvature(asm: &Assembler, g: &dyn MetricSource) -> Result<FunctionalVector> {
    Ok(asm.distributional_curvature(g)?.functional(&asm.space))
}

pub fn assemble_exact_curvature(asm: &Assembler, metric: &AnalyticMetric) -> Result<FunctionalVector> {
    Ok(FunctionalVector::from_full(&asm.space, &asm.exact_curvature(metric)?))
}

pub fn assemble_bh(asm: &Assembler, g: &dyn MetricSource, sigma: &dyn MetricSource) -> Result<FunctionalVector> {
    Ok(FunctionalVector::from_full(&asm.space, &asm.bh(g, sigma)?))
}

pub fn assemble_ah(asm: &Assembler, g: &dyn MetricSource, sigma: &dyn MetricSource) -> Result<FunctionalVector> {
    Ok(asm.ah(g, sigma)?.functional(&asm.space))
}

/// `⟨(Gω)_dist(g), σ⟩ = a_h(g; σ, 1)`.
pub fn einstein_functional(asm: &Assembler, g: &dyn MetricSource, sigma: &dyn MetricSource) -> Result<f64> {
    Ok(asm.ah(g, sigma)?.sum())
}

pub fn critical_term_functional(asm: &Assembler, g: &AnalyticMetric, gh: &ReggeField) -> Result<FunctionalVector> {
    if asm.dim() != 3 {
        return Err(Error::InvalidDimension(asm.dim()));
    }
    Ok(FunctionalVector::from_full(&asm.space, &asm.critical_term(g, gh, 4)?))
}

/// `2 Σ̊_S Θ_S |S|_{g_h}` for a piecewise constant Regge metric.
pub fn regge_action(gh: &ReggeField) -> Result<f64> {
    if gh.degree() != 0 {
        return Err(Error::DegreeMismatch(format!("Regge action needs r = 0, got r = {}", gh.degree())));
    }
    let mesh = gh.mesh();
    let dim = mesh.dim();
    let mut total = 0.0;
    for (s, ridge) in mesh.ridges().iter().enumerate() {
        if !ridge.interior {
            continue;
        }
        let theta = crate::geometry::angle_defect(mesh, gh, s, &[0.5, 0.0, 0.0])?;
        let measure = if dim == 3 {
            let tau = subsimplex_tangents(mesh.vertices(), &ridge.vertices)[0];
            let g = gh.jet(ridge.ring[0].cell, &mesh.geometry(ridge.ring[0].cell), &[0.0; 3], 0).g;
            linalg::bilinear(&g, &tau, &tau, 3).sqrt()
        } else {
            1.0
        };
        total += 2.0 * theta * measure;
    }
    Ok(total)
}

/// Max over interior test functions of the mismatch between the central
/// difference in `t` of the distributional curvature along `path` and
/// `(b_h − a_h)(g̃(t); σ, ·)`.
pub fn evolution_identity_residual(asm: &Assembler, path: &MetricPath, t: f64, dt: f64) -> Result<f64> {
    let plus = asm.distributional_curvature(&path.at(t + dt))?.total();
    let minus = asm.distributional_curvature(&path.at(t - dt))?.total();
    let gt = path.at(t);
    let sigma = path.velocity();
    let b = asm.bh(&gt, &sigma)?;
    let a = asm.ah(&gt, &sigma)?.total();
    let mut worst: f64 = 0.0;
    for &d in asm.space.interior_dofs() {
        let fd = (plus[d] - minus[d]) / (2.0 * dt);
        worst = worst.max((fd - (b[d] - a[d])).abs());
    }
    Ok(worst)
}

/// `base · v` for a Lagrange function `v` given by full coefficients.
pub struct ScaledSource<'a> {
    pub base: &'a dyn MetricSource,
    pub space: &'a LagrangeSpace,
    pub coeffs: &'a [f64],
}

impl MetricSource for ScaledSource<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn jet(&self, cell: usize, geom: &CellGeometry, xi: &Vec3, order: usize) -> MetricJet {
        let (v, dv, hv) = self.space.evaluate(self.coeffs, cell, xi);
        self.base.jet(cell, geom, xi, order).times_scalar(v, &dv, &hv)
    }
}
