//! Regge finite elements: piecewise polynomial symmetric (0,2)-tensor fields
//! with single-valued tangential-tangential traces on faces.
//!
//! Degrees of freedom of degree `r` live on every `k`-subsimplex `D`,
//! `1 ≤ k ≤ N`: with `t_1..t_k` the edge vectors of `D` from its lowest-id
//! vertex and `η` the matching barycentric parameter of `D`,
//!
//! ```text
//! ℓ(g) = ∫_D̂ t_mᵀ g(x(η)) t_n p(η) dη,   1 ≤ m ≤ n ≤ k,   deg p ≤ r − k + 1.
//! ```
//!
//! The parametrization depends only on the sorted global vertex ids of `D`,
//! so the moment of a shared subsimplex is the same from every cell. In the
//! sorted local frame of a cell the physical tangents are `J t̂`, hence the
//! physical moment equals the reference moment of the pullback `Jᵀ g J`.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3, ZERO3};
use crate::mesh::{local_edges, CellGeometry, SimplicialMesh};
use crate::metric::{AnalyticMetric, MetricJet, MetricSource};
use crate::polynomial::{dim_poly, LagrangeBasis, Monomials};
use crate::quadrature::{simplex_quadrature, MAX_EXACTNESS};

/// Symmetric index pairs `(a, b)`, `a ≤ b`, in row-major order.
pub fn sym_components(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        1 => &[(0, 0)],
        2 => &[(0, 0), (0, 1), (1, 1)],
        3 => &[(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)],
        _ => &[],
    }
}

/// Symmetric unit tensor of component `(a, b)`.
pub fn sym_unit(a: usize, b: usize) -> Mat3 {
    let mut e = ZERO3;
    e[a][b] = 1.0;
    e[b][a] = 1.0;
    e
}

/// Sub-simplex of the reference cell carrying degrees of freedom.
#[derive(Clone, Debug)]
pub struct RefEntity {
    /// Dimension of the sub-simplex.
    pub k: usize,
    /// Sorted-local vertex indices.
    pub vertices: Vec<usize>,
    pub offset: usize,
    pub count: usize,
}

/// Reference point of the sub-simplex spanned by `local` (sorted-local cell
/// vertices) at parameter `eta`.
pub fn subsimplex_point(local: &[usize], eta: &Vec3) -> Vec3 {
    let vertex = |v: usize| -> Vec3 {
        let mut x = [0.0; 3];
        if v > 0 {
            x[v - 1] = 1.0;
        }
        x
    };
    let mut x = vertex(local[0]);
    let x0 = x;
    for (m, &v) in local.iter().enumerate().skip(1) {
        let xv = vertex(v);
        for d in 0..3 {
            x[d] += eta[m - 1] * (xv[d] - x0[d]);
        }
    }
    x
}

/// Raw edge vectors of the sub-simplex `ids` of `vertices` from its first
/// vertex.
pub fn subsimplex_tangents(vertices: &[Vec3], ids: &[usize]) -> Vec<Vec3> {
    ids[1..].iter().map(|&v| linalg::sub(&vertices[v], &vertices[ids[0]])).collect()
}

/// All tt-moments of `g` over a `k`-simplex with tangents `t` (in the same
/// coordinates as `g`), ordered pair-major then monomial. `point(η)` yields
/// the tensor at parameter `η`.
fn entity_moments(r: usize, t: &[Vec3], dim: usize, exactness: usize, g: impl Fn(&Vec3) -> Mat3) -> Result<Vec<f64>> {
    let k = t.len();
    let pdeg = r as isize - k as isize + 1;
    if pdeg < 0 {
        return Ok(Vec::new());
    }
    let mono = Monomials::new(k, pdeg as usize);
    let rule = simplex_quadrature(k, exactness.min(MAX_EXACTNESS))?;
    let npairs = k * (k + 1) / 2;
    let mut out = vec![0.0; npairs * mono.len()];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let gv = g(p);
        let mv = mono.values(p);
        let mut idx = 0;
        for m in 0..k {
            for n in m..k {
                let tt = linalg::bilinear(&gv, &t[m], &t[n], dim);
                for (j, v) in mv.iter().enumerate() {
                    out[idx * mono.len() + j] += w * tt * v;
                }
                idx += 1;
            }
        }
    }
    Ok(out)
}

fn dofs_on_entity(k: usize, r: usize) -> usize {
    k * (k + 1) / 2 * dim_poly(k, r as isize - k as isize + 1)
}

/// Reference Regge element with its dual (nodal) basis.
#[derive(Clone, Debug)]
pub struct ReggeElement {
    pub dim: usize,
    pub degree: usize,
    pub monomials: Monomials,
    pub entities: Vec<RefEntity>,
    /// `ndof × ncomp`: DOF functionals applied to `E_c ξ^α`, column
    /// `c·nmono + α`.
    pub dof_matrix: DMatrix<f64>,
    /// `ncomp × ndof`: coefficient vectors of the dual basis functions.
    pub basis: DMatrix<f64>,
    mass_inv: DMatrix<f64>,
}

impl ReggeElement {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidDimension(dim));
        }
        let r = degree;
        let monomials = Monomials::new(dim, r);
        let nmono = monomials.len();
        let comps = sym_components(dim);
        let ncomp = comps.len() * nmono;

        let mut entities = Vec::new();
        let mut offset = 0;
        let mut push = |k: usize, vertices: Vec<usize>| {
            let count = dofs_on_entity(k, r);
            entities.push(RefEntity { k, vertices, offset, count });
            offset += count;
        };
        for e in local_edges(dim) {
            push(1, e.to_vec());
        }
        if dim == 3 {
            for l in 0..4 {
                push(2, (0..4).filter(|&m| m != l).collect());
            }
        }
        push(dim, (0..=dim).collect());
        let ndof = offset;
        if ndof != ncomp {
            return Err(Error::SingularDofMatrix { element: format!("Regge r={r} in {dim}D: {ndof} DOFs for {ncomp} functions"), sigma_min: 0.0 });
        }

        let mut dof_matrix = DMatrix::zeros(ndof, ncomp);
        for ent in &entities {
            let t = reference_tangents(&ent.vertices);
            for (c, &(a, b)) in comps.iter().enumerate() {
                let e = sym_unit(a, b);
                for (j, exp) in monomials.exps.iter().enumerate() {
                    let vals = entity_moments(r, &t, dim, 2 * r + 2, |eta| {
                        let x = subsimplex_point(&ent.vertices, eta);
                        let m: f64 = (0..dim).map(|d| x[d].powi(exp[d] as i32)).product();
                        let mut out = e;
                        for row in out.iter_mut() {
                            for v in row.iter_mut() {
                                *v *= m;
                            }
                        }
                        out
                    })?;
                    for (i, v) in vals.into_iter().enumerate() {
                        dof_matrix[(ent.offset + i, c * nmono + j)] = v;
                    }
                }
            }
        }
        let sv = dof_matrix.clone().svd(false, false).singular_values;
        let (smin, smax) = (sv.min(), sv.max());
        if smin <= 1e-12 * smax {
            return Err(Error::SingularDofMatrix { element: format!("Regge r={r} in {dim}D"), sigma_min: smin });
        }
        let basis = dof_matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularDofMatrix { element: format!("Regge r={r} in {dim}D"), sigma_min: smin })?;

        let rule = simplex_quadrature(dim, 2 * r)?;
        let mut mass = DMatrix::zeros(nmono, nmono);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let v = monomials.values(p);
            for i in 0..nmono {
                for j in 0..nmono {
                    mass[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        let mass_inv = mass
            .try_inverse()
            .ok_or_else(|| Error::SingularDofMatrix { element: format!("monomial mass P{r} in {dim}D"), sigma_min: 0.0 })?;
        Ok(ReggeElement { dim, degree, monomials, entities, dof_matrix, basis, mass_inv })
    }

    pub fn ndof(&self) -> usize {
        self.dof_matrix.nrows()
    }

    pub fn ncomp(&self) -> usize {
        self.dof_matrix.ncols()
    }

    /// Reference tensor of the polynomial with coefficients `coef` (length
    /// `ncomp`) and its ξ-derivatives.
    pub fn eval_reference(&self, coef: &[f64], xi: &Vec3, order: usize) -> (Mat3, [Mat3; 3], [[Mat3; 3]; 3]) {
        let nmono = self.monomials.len();
        let mj = self.monomials.jets(xi, order.min(2));
        let mut g = ZERO3;
        let mut dg = [ZERO3; 3];
        let mut d2g = [[ZERO3; 3]; 3];
        let dim = self.dim;
        for (c, &(a, b)) in sym_components(dim).iter().enumerate() {
            let cs = &coef[c * nmono..(c + 1) * nmono];
            let mut v = 0.0;
            let mut dv = [0.0; 3];
            let mut d2v = ZERO3;
            for (m, &cm) in cs.iter().enumerate() {
                if cm == 0.0 {
                    continue;
                }
                v += cm * mj.val[m];
                if order >= 1 && self.degree >= 1 {
                    for k in 0..dim {
                        dv[k] += cm * mj.grad[m][k];
                    }
                }
                if order >= 2 && self.degree >= 2 {
                    for k in 0..dim {
                        for l in 0..dim {
                            d2v[k][l] += cm * mj.hess[m][k][l];
                        }
                    }
                }
            }
            g[a][b] = v;
            g[b][a] = v;
            for k in 0..dim {
                dg[k][a][b] = dv[k];
                dg[k][b][a] = dv[k];
                for l in 0..dim {
                    d2g[k][l][a][b] = d2v[k][l];
                    d2g[k][l][b][a] = d2v[k][l];
                }
            }
        }
        (g, dg, d2g)
    }

    /// Componentwise L² projection onto `P_r(T̂; Sym)` of a reference tensor
    /// field sampled by `rule_values` at the points of `rule`.
    fn project(&self, rule: &crate::quadrature::QuadratureRule, values: &[Mat3]) -> Vec<f64> {
        let nmono = self.monomials.len();
        let comps = sym_components(self.dim);
        let mut rhs = DMatrix::zeros(nmono, comps.len());
        for ((p, w), g) in rule.points.iter().zip(&rule.weights).zip(values) {
            let mv = self.monomials.values(p);
            for (c, &(a, b)) in comps.iter().enumerate() {
                for m in 0..nmono {
                    rhs[(m, c)] += w * g[a][b] * mv[m];
                }
            }
        }
        let sol = &self.mass_inv * rhs;
        let mut out = vec![0.0; comps.len() * nmono];
        for c in 0..comps.len() {
            for m in 0..nmono {
                out[c * nmono + m] = sol[(m, c)];
            }
        }
        out
    }
}

fn reference_tangents(local: &[usize]) -> Vec<Vec3> {
    let vertex = |v: usize| -> Vec3 {
        let mut x = [0.0; 3];
        if v > 0 {
            x[v - 1] = 1.0;
        }
        x
    };
    local[1..].iter().map(|&v| linalg::sub(&vertex(v), &vertex(local[0]))).collect()
}

/// Local-to-global DOF map of a Regge space on a mesh.
#[derive(Clone, Debug)]
pub struct DofTable {
    pub ndof: usize,
    nloc: usize,
    cell_dofs: Vec<usize>,
    share_count: Vec<u32>,
    share_offsets: Vec<usize>,
    share_entries: Vec<(usize, usize)>,
}

impl DofTable {
    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c * self.nloc..(c + 1) * self.nloc]
    }

    /// Number of cells sharing global DOF `i`.
    pub fn share_count(&self, i: usize) -> usize {
        self.share_count[i] as usize
    }

    /// The sharing set: every `(cell, local DOF)` mapped to global DOF `i`.
    pub fn sharing_set(&self, i: usize) -> &[(usize, usize)] {
        &self.share_entries[self.share_offsets[i]..self.share_offsets[i + 1]]
    }
}

/// Regge space of degree `r` on a mesh.
#[derive(Debug)]
pub struct ReggeSpace {
    pub mesh: Arc<SimplicialMesh>,
    pub element: ReggeElement,
    pub dofs: DofTable,
}

impl ReggeSpace {
    pub fn new(mesh: Arc<SimplicialMesh>, r: usize) -> Result<Arc<Self>> {
        let dim = mesh.dim();
        let element = ReggeElement::new(dim, r)?;
        let n_edge = dofs_on_entity(1, r);
        let n_face = dofs_on_entity(2, r);
        let n_cell = dofs_on_entity(dim, r);
        let base_face = mesh.edges().len() * n_edge;
        let base_cell = if dim == 3 { base_face + mesh.faces().len() * n_face } else { base_face };
        let ndof = base_cell + mesh.num_cells() * n_cell;
        let nloc = element.ndof();
        let mut cell_dofs = vec![0usize; mesh.num_cells() * nloc];
        for c in 0..mesh.num_cells() {
            let edges = mesh.cell_edges(c);
            let faces = mesh.cell_faces(c);
            let mut edge_i = 0;
            for ent in &element.entities {
                let base = if ent.k == 1 {
                    let e = edges[edge_i];
                    edge_i += 1;
                    e * n_edge
                } else if ent.k == dim {
                    base_cell + c * n_cell
                } else {
                    let l = (0..4).find(|m| !ent.vertices.contains(m)).expect("opposite vertex");
                    base_face + faces[l] * n_face
                };
                for j in 0..ent.count {
                    cell_dofs[c * nloc + ent.offset + j] = base + j;
                }
            }
        }
        let mut share_count = vec![0u32; ndof];
        for &d in &cell_dofs {
            share_count[d] += 1;
        }
        let mut share_offsets = vec![0usize; ndof + 1];
        for i in 0..ndof {
            share_offsets[i + 1] = share_offsets[i] + share_count[i] as usize;
        }
        let mut fill = share_offsets.clone();
        let mut share_entries = vec![(0, 0); cell_dofs.len()];
        for c in 0..mesh.num_cells() {
            for l in 0..nloc {
                let d = cell_dofs[c * nloc + l];
                share_entries[fill[d]] = (c, l);
                fill[d] += 1;
            }
        }
        let dofs = DofTable { ndof, nloc, cell_dofs, share_count, share_offsets, share_entries };
        Ok(Arc::new(ReggeSpace { mesh, element, dofs }))
    }

    pub fn ndof(&self) -> usize {
        self.dofs.ndof
    }

    pub fn degree(&self) -> usize {
        self.element.degree
    }

    pub fn dim(&self) -> usize {
        self.element.dim
    }
}

/// Number of global Regge DOFs of degree `r` on `mesh`.
pub fn count_dofs(mesh: &SimplicialMesh, r: usize) -> usize {
    let dim = mesh.dim();
    let mut n = mesh.edges().len() * dofs_on_entity(1, r) + mesh.num_cells() * dofs_on_entity(dim, r);
    if dim == 3 {
        n += mesh.faces().len() * dofs_on_entity(2, r);
    }
    n
}

/// A Regge field: global coefficients plus cached per-cell reference
/// polynomial coefficients of `Ĝ = Jᵀ g J`.
#[derive(Clone, Debug)]
pub struct ReggeField {
    pub space: Arc<ReggeSpace>,
    coeffs: Vec<f64>,
    cell_poly: Vec<f64>,
}

impl ReggeField {
    pub fn from_coefficients(space: Arc<ReggeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.ndof() {
            return Err(Error::InvalidArgument(format!("{} coefficients for {} DOFs", coeffs.len(), space.ndof())));
        }
        let el = &space.element;
        let nloc = el.ndof();
        let ncomp = el.ncomp();
        let mut cell_poly = vec![0.0; space.mesh.num_cells() * ncomp];
        cell_poly.par_chunks_mut(ncomp).enumerate().for_each(|(c, out)| {
            let local = DVector::from_iterator(nloc, space.dofs.cell_dofs(c).iter().map(|&d| coeffs[d]));
            let p = &el.basis * local;
            out.copy_from_slice(p.as_slice());
        });
        Ok(ReggeField { space, coeffs, cell_poly })
    }

    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    pub fn ndof(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mesh(&self) -> &SimplicialMesh {
        &self.space.mesh
    }

    /// Reference polynomial coefficients of `Ĝ` on cell `c`.
    pub fn cell_coefficients(&self, c: usize) -> &[f64] {
        let n = self.space.element.ncomp();
        &self.cell_poly[c * n..(c + 1) * n]
    }

    /// Physical jet of the field at the reference point `xi` of `cell`.
    pub fn evaluate_jet(&self, cell: usize, xi: &Vec3, order: usize) -> Result<MetricJet> {
        if cell >= self.mesh().num_cells() {
            return Err(Error::InvalidArgument(format!("cell {cell} out of range")));
        }
        let geom = self.mesh().geometry(cell);
        Ok(self.jet_with_geometry(cell, &geom, xi, order))
    }

    fn jet_with_geometry(&self, cell: usize, geom: &CellGeometry, xi: &Vec3, order: usize) -> MetricJet {
        let dim = geom.dim;
        let (gh, dgh, d2gh) = self.space.element.eval_reference(self.cell_coefficients(cell), xi, order);
        let ji = &geom.jac_inv;
        let push = |m: &Mat3| -> Mat3 {
            let mut out = ZERO3;
            for i in 0..dim {
                for j in 0..dim {
                    let mut s = 0.0;
                    for a in 0..dim {
                        for b in 0..dim {
                            s += ji[a][i] * m[a][b] * ji[b][j];
                        }
                    }
                    out[i][j] = s;
                }
            }
            out
        };
        let mut jet = MetricJet::constant(dim, geom.map(xi), push(&gh));
        let r = self.degree();
        if order >= 1 && r >= 1 {
            let pd: Vec<Mat3> = (0..dim).map(|a| push(&dgh[a])).collect();
            for k in 0..dim {
                for a in 0..dim {
                    let f = ji[a][k];
                    for i in 0..dim {
                        for j in 0..dim {
                            jet.dg[k][i][j] += f * pd[a][i][j];
                        }
                    }
                }
            }
        }
        if order >= 2 && r >= 2 {
            for a in 0..dim {
                for b in 0..dim {
                    let p = push(&d2gh[a][b]);
                    for k in 0..dim {
                        for l in 0..dim {
                            let f = ji[a][k] * ji[b][l];
                            for i in 0..dim {
                                for j in 0..dim {
                                    jet.d2g[k][l][i][j] += f * p[i][j];
                                }
                            }
                        }
                    }
                }
            }
        }
        jet
    }

    /// Text form: header `dim r ndof`, then one coefficient per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.space.dim(), self.degree(), self.ndof());
        for c in &self.coeffs {
            let _ = writeln!(s, "{c:e}");
        }
        s
    }

    pub fn from_text(space: Arc<ReggeSpace>, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty Regge field".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        if h.len() != 3 || h[0] != space.dim() || h[1] != space.degree() || h[2] != space.ndof() {
            return Err(Error::Parse(format!("header {header:?} does not match the space")));
        }
        let coeffs: Vec<f64> = lines
            .map(|l| l.trim().parse().map_err(|_| Error::Parse(format!("bad coefficient {l:?}"))))
            .collect::<Result<_>>()?;
        Self::from_coefficients(space, coeffs)
    }
}

impl MetricSource for ReggeField {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn jet(&self, cell: usize, geom: &CellGeometry, xi: &Vec3, order: usize) -> MetricJet {
        self.jet_with_geometry(cell, geom, xi, order)
    }

    fn cell_degree(&self) -> Option<usize> {
        Some(self.degree())
    }
}

/// Pointwise covariant pullback `Jᵀ g J`.
pub fn pullback(jac: &Mat3, g: &Mat3, dim: usize) -> Mat3 {
    let cols: Vec<Vec3> = (0..dim).map(|m| [jac[0][m], jac[1][m], jac[2][m]]).collect();
    linalg::congruence(g, &cols, dim)
}

/// Reference coefficients (component-major, as in [`ReggeElement`]) of the
/// pullback `ĝ(ξ) = Jᵀ g(x₀ + Jξ) J` of a tensor polynomial of degree
/// `≤ degree`, recovered by interpolation on the principal lattice.
pub fn tensor_pullback(geom: &CellGeometry, degree: usize, g: impl Fn(&Vec3) -> Mat3) -> Result<Vec<f64>> {
    let dim = geom.dim;
    if geom.det == 0.0 || !geom.det.is_finite() {
        return Err(Error::DegenerateCell { cell: usize::MAX, volume: geom.det });
    }
    let comps = sym_components(dim);
    let nmono = dim_poly(dim, degree as isize);
    let mut out = vec![0.0; comps.len() * nmono];
    if degree == 0 {
        let c = [1.0 / (dim + 1) as f64; 3];
        let gh = pullback(&geom.jac, &g(&geom.map(&c)), dim);
        for (ci, &(a, b)) in comps.iter().enumerate() {
            out[ci] = gh[a][b];
        }
        return Ok(out);
    }
    let basis = LagrangeBasis::new(dim, degree)?;
    for i in 0..basis.len() {
        let gh = pullback(&geom.jac, &g(&geom.map(&basis.node(i))), dim);
        for (ci, &(a, b)) in comps.iter().enumerate() {
            for m in 0..nmono {
                out[ci * nmono + m] += gh[a][b] * basis.coeffs[i][m];
            }
        }
    }
    Ok(out)
}

fn interpolation_exactness(r: usize) -> usize {
    (2 * r + 10).min(MAX_EXACTNESS)
}

/// Elementwise componentwise L² projection followed by averaging of shared
/// DOFs over their sharing sets.
pub fn interpolate_average(metric: &AnalyticMetric, space: &Arc<ReggeSpace>) -> Result<ReggeField> {
    let mesh = &space.mesh;
    let el = &space.element;
    let dim = mesh.dim();
    let rule = simplex_quadrature(dim, interpolation_exactness(el.degree))?;
    let local: Vec<Result<Vec<f64>>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.geometry(c);
            let mut values = Vec::with_capacity(rule.len());
            for p in &rule.points {
                let g = metric.eval(&geom.map(p), 0).g;
                if !g.iter().flatten().all(|v| v.is_finite()) {
                    return Err(Error::NotPositiveDefinite { context: format!("non-finite metric sample in cell {c}") });
                }
                values.push(pullback(&geom.jac, &g, dim));
            }
            let coef = DVector::from_vec(el.project(&rule, &values));
            Ok((&el.dof_matrix * coef).as_slice().to_vec())
        })
        .collect();
    let mut sum = vec![0.0; space.ndof()];
    for (c, vals) in local.into_iter().enumerate() {
        let vals = vals?;
        for (l, &d) in space.dofs.cell_dofs(c).iter().enumerate() {
            sum[d] += vals[l];
        }
    }
    for (i, s) in sum.iter_mut().enumerate() {
        *s /= space.dofs.share_count(i) as f64;
    }
    ReggeField::from_coefficients(space.clone(), sum)
}

/// Canonical interpolant: every DOF evaluated on the exact metric over its
/// own sub-simplex.
pub fn interpolate_canonical(metric: &AnalyticMetric, space: &Arc<ReggeSpace>) -> Result<ReggeField> {
    let mesh = &space.mesh;
    let dim = mesh.dim();
    let r = space.degree();
    let ex = interpolation_exactness(r);
    let verts = mesh.vertices();
    let moments = |ids: &[usize]| -> Result<Vec<f64>> {
        let t = subsimplex_tangents(verts, ids);
        let x0 = verts[ids[0]];
        entity_moments(r, &t, dim, ex, |eta| {
            let mut x = x0;
            for (m, tm) in t.iter().enumerate() {
                for d in 0..3 {
                    x[d] += eta[m] * tm[d];
                }
            }
            metric.eval(&x, 0).g
        })
    };
    let mut coeffs = Vec::with_capacity(space.ndof());
    let edge_vals: Vec<Result<Vec<f64>>> = mesh.edges().par_iter().map(|e| moments(e)).collect();
    for v in edge_vals {
        coeffs.extend(v?);
    }
    if dim == 3 && r >= 1 {
        let face_vals: Vec<Result<Vec<f64>>> = mesh.faces().par_iter().map(|f| moments(&f.vertices)).collect();
        for v in face_vals {
            coeffs.extend(v?);
        }
    }
    if dofs_on_entity(dim, r) > 0 {
        let cell_vals: Vec<Result<Vec<f64>>> =
            (0..mesh.num_cells()).into_par_iter().map(|c| moments(mesh.cell_sorted(c))).collect();
        for v in cell_vals {
            coeffs.extend(v?);
        }
    }
    ReggeField::from_coefficients(space.clone(), coeffs)
}

/// Elementwise L² (Frobenius) and sampled L∞ errors `‖g_h − g‖`.
pub fn interpolation_errors(field: &ReggeField, metric: &AnalyticMetric, exactness: usize) -> Result<(f64, f64)> {
    let mesh = field.mesh();
    let dim = mesh.dim();
    let rule = simplex_quadrature(dim, exactness)?;
    let per_cell: Vec<(f64, f64)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.geometry(c);
            let mut l2 = 0.0;
            let mut linf: f64 = 0.0;
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let gh = field.jet_with_geometry(c, &geom, p, 0).g;
                let g = metric.eval(&geom.map(p), 0).g;
                let mut e2 = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        let d = gh[i][j] - g[i][j];
                        e2 += d * d;
                        linf = linf.max(d.abs());
                    }
                }
                l2 += w * geom.det.abs() * e2;
            }
            (l2, linf)
        })
        .collect();
    let l2 = per_cell.iter().map(|x| x.0).sum::<f64>().sqrt();
    let linf = per_cell.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok((l2, linf))
}

/// Minimum eigenvalue of the field over the points of a rule of the given
/// exactness in every cell.
pub fn min_eigenvalue(field: &ReggeField, exactness: usize) -> Result<f64> {
    let mesh = field.mesh();
    let dim = mesh.dim();
    let rule = simplex_quadrature(dim, exactness)?;
    Ok((0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.geometry(c);
            rule.points
                .iter()
                .map(|p| linalg::min_eigenvalue(&field.jet_with_geometry(c, &geom, p, 0).g, dim))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min))
}
