//! H⁻²-equivalent norm of functionals via the clamped biharmonic problem,
//! discretized with the Euclidean Hellan–Herrmann–Johnson mixed method.
//!
//! With `σ ≈ −∇²u` the mixed system reads
//!
//! ```text
//! [ A  Bᵀ ] [σ]   [  0 ]
//! [ B  0  ] [u] = [ −f ]
//! ```
//!
//! where `A` is the L² mass of σ and
//! `B(σ, v) = Σ_T ∫_T σ:∇²v − Σ_T ∫_{∂T} σ_nn ∂_n v`. The clamped condition
//! `∂_n u = 0` is natural: boundary nn-DOFs stay unknowns.
//!
//! The default solver breaks nn-continuity, enforces it with face
//! multipliers (approximating `∂_n u`), eliminates σ cell by cell and
//! factors the resulting SPD system. Every solve is checked against the
//! residual of the conforming mixed system.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, SparseColMatRef, SymbolicSparseColMatRef, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::FunctionalVector;
use crate::lagrange::{LagrangeSpace, BOUNDARY};
use crate::linalg::{self, Mat3, Vec3, ZERO3};
use crate::mesh::{factorial, CellGeometry, SimplicialMesh};
use crate::polynomial::{push_forward, BasisJets, Monomials};
use crate::quadrature::simplex_quadrature;
use crate::regge::{subsimplex_point, sym_components, sym_unit};

/// Relative singular-value threshold of local DOF matrices.
const UNISOLVENCE_TOL: f64 = 1e-10;

/// Polynomials of degree `≤ k` on the reference `dim`-simplex, orthonormal
/// in `L²(T̂)`: Gram–Schmidt of the graded monomials, so `p₀` is constant.
#[derive(Clone, Debug)]
pub struct OrthoBasis {
    pub monomials: Monomials,
    coeffs: DMatrix<f64>,
}

impl OrthoBasis {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        let monomials = Monomials::new(dim, degree);
        let n = monomials.len();
        let rule = simplex_quadrature(dim, 2 * degree)?;
        let mut mass = DMatrix::zeros(n, n);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let v = DVector::from_vec(monomials.values(p));
            mass += &v * v.transpose() * *w;
        }
        let l = mass
            .cholesky()
            .ok_or_else(|| Error::SingularDofMatrix { element: format!("monomial mass P{degree}"), sigma_min: 0.0 })?
            .l();
        let coeffs = l.try_inverse().expect("triangular factor is invertible");
        Ok(OrthoBasis { monomials, coeffs })
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn values(&self, x: &Vec3) -> Vec<f64> {
        (&self.coeffs * DVector::from_vec(self.monomials.values(x))).as_slice().to_vec()
    }
}

/// Per-point data on one local face of the reference cell.
#[derive(Debug)]
struct FacePoint {
    weight: f64,
    mono: Vec<f64>,
    mu: Vec<f64>,
}

/// Symmetric-matrix-valued piecewise polynomials of degree `k` with
/// single-valued normal-normal trace.
///
/// Local basis on a cell: `pᵢ(ξ) E_c` with the reference orthonormal
/// polynomials `pᵢ` and the symmetric units `E_c` of [`sym_components`],
/// coefficient `c·np + i`.
/// Global DOFs: moments `∫_F σ_nn μ dη` against orthonormal polynomials `μ` in the
/// face parameter of the sorted face vertices (block `nmu` per face), then
/// `nbubble` interior DOFs per cell.
#[derive(Debug)]
pub struct HhjSpace {
    pub mesh: Arc<SimplicialMesh>,
    pub degree: usize,
    pub basis: OrthoBasis,
    nlocal: usize,
    nmu: usize,
    nbubble: usize,
    ndof: usize,
    face_points: Vec<Vec<FacePoint>>,
}

/// Conforming local basis of one cell: columns of `psi` are the local basis
/// functions in local coefficients; `psi_inv = [F; Nᵀ]` maps monomial
/// coefficients to local DOFs.
#[derive(Clone, Debug)]
pub struct CellBasis {
    pub psi: DMatrix<f64>,
    pub psi_inv: DMatrix<f64>,
}

fn reference_geometry(dim: usize) -> CellGeometry {
    CellGeometry {
        dim,
        sorted: [0, 1, 2, 3],
        origin: [0.0; 3],
        jac: linalg::identity(dim),
        jac_inv: linalg::identity(dim),
        det: 1.0,
    }
}

fn normal_normal(c: usize, n: &Vec3, dim: usize) -> f64 {
    let (a, b) = sym_components(dim)[c];
    let e = sym_unit(a, b);
    linalg::bilinear(&e, n, n, dim)
}

/// `E_c : H` for the symmetric unit `E_c`.
fn unit_contract(c: usize, h: &Mat3, dim: usize) -> f64 {
    let (a, b) = sym_components(dim)[c];
    linalg::contract(&sym_unit(a, b), h, dim)
}

impl HhjSpace {
    pub fn new(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<Arc<Self>> {
        let dim = mesh.dim();
        let basis = OrthoBasis::new(dim, degree)?;
        let face_basis = OrthoBasis::new(dim - 1, degree)?;
        let ncomp = sym_components(dim).len();
        let nlocal = ncomp * basis.len();
        let nmu = face_basis.len();
        if (dim + 1) * nmu > nlocal {
            return Err(Error::InvalidArgument(format!("HHJ degree {degree} has too few local functions")));
        }
        let nbubble = nlocal - (dim + 1) * nmu;
        let rule = simplex_quadrature(dim - 1, 2 * degree)?;
        let face_points = (0..=dim)
            .map(|l| {
                let locals: Vec<usize> = (0..=dim).filter(|&m| m != l).collect();
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(eta, &weight)| {
                        let xi = subsimplex_point(&locals, eta);
                        FacePoint { weight, mono: basis.values(&xi), mu: face_basis.values(eta) }
                    })
                    .collect()
            })
            .collect();
        let ndof = mesh.faces().len() * nmu + mesh.num_cells() * nbubble;
        let space = HhjSpace { mesh, degree, basis, nlocal, nmu, nbubble, ndof, face_points };
        let f = space.face_moments(&reference_geometry(dim));
        let sv = f.singular_values();
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if lo <= UNISOLVENCE_TOL * hi {
            return Err(Error::SingularDofMatrix { element: format!("HHJ reference k={degree}"), sigma_min: lo / hi });
        }
        Ok(Arc::new(space))
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    /// `dim P_k(T; Sym_N)`.
    pub fn local_dim(&self) -> usize {
        self.nlocal
    }

    pub fn face_block(&self) -> usize {
        self.nmu
    }

    pub fn bubbles(&self) -> usize {
        self.nbubble
    }

    pub fn cell_dofs(&self, c: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nlocal);
        for &f in self.mesh.cell_faces(c) {
            out.extend((0..self.nmu).map(|j| f * self.nmu + j));
        }
        let base = self.mesh.faces().len() * self.nmu + c * self.nbubble;
        out.extend(base..base + self.nbubble);
        out
    }

    /// Unsigned face moments `∫_{F_l} σ_nn μ_j dη` of the monomial basis,
    /// rows `l·nmu + j`.
    fn face_moments(&self, geom: &CellGeometry) -> DMatrix<f64> {
        let dim = self.dim();
        let nm = self.basis.len();
        let ncomp = sym_components(dim).len();
        let mut f = DMatrix::zeros((dim + 1) * self.nmu, self.nlocal);
        for l in 0..=dim {
            let n = geom.outward_normal(l);
            let nn: Vec<f64> = (0..ncomp).map(|c| normal_normal(c, &n, dim)).collect();
            for p in &self.face_points[l] {
                for j in 0..self.nmu {
                    let wm = p.weight * p.mu[j];
                    for (c, &nnc) in nn.iter().enumerate() {
                        for m in 0..nm {
                            f[(l * self.nmu + j, c * nm + m)] += wm * nnc * p.mono[m];
                        }
                    }
                }
            }
        }
        f
    }

    pub fn cell_basis(&self, c: usize) -> Result<CellBasis> {
        self.basis_for(c, &self.mesh.geometry(c))
    }

    fn basis_for(&self, c: usize, geom: &CellGeometry) -> Result<CellBasis> {
        let f = self.face_moments(geom);
        let n = self.nlocal;
        let nr = f.nrows();
        // SVD of F padded to a square matrix yields both F⁺ and a complete
        // orthonormal basis of null(F)
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (nr, n)).copy_from(&f);
        let svd = padded.svd(true, true);
        let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let smax = svd.singular_values[order[0]];
        let smin = svd.singular_values[order[nr - 1]];
        if smin <= UNISOLVENCE_TOL * smax {
            return Err(Error::SingularDofMatrix { element: format!("HHJ cell {c}"), sigma_min: smin / smax });
        }
        let mut psi = DMatrix::zeros(n, n);
        for &i in &order[..nr] {
            let v = vt.row(i).transpose();
            let ur = u.column(i).rows(0, nr).transpose();
            let mut block = psi.view_mut((0, 0), (n, nr));
            block += v * ur / svd.singular_values[i];
        }
        let mut psi_inv = DMatrix::zeros(n, n);
        psi_inv.view_mut((0, 0), (nr, n)).copy_from(&f);
        for (b, &i) in order[nr..].iter().enumerate() {
            let v = vt.row(i);
            psi.column_mut(nr + b).copy_from(&v.transpose());
            psi_inv.row_mut(nr + b).copy_from(&v);
        }
        Ok(CellBasis { psi, psi_inv })
    }

    /// Value at reference point `xi` of cell `c` of the local monomial
    /// coefficient vector `coef`.
    pub fn eval_monomial(&self, coef: &[f64], xi: &Vec3) -> Mat3 {
        let dim = self.dim();
        let vals = self.basis.values(xi);
        let nm = vals.len();
        let mut s = ZERO3;
        for (c, &(a, b)) in sym_components(dim).iter().enumerate() {
            let v: f64 = (0..nm).map(|m| coef[c * nm + m] * vals[m]).sum();
            s[a][b] += v;
            if a != b {
                s[b][a] += v;
            }
        }
        s
    }

    /// Value of the global field `coeffs` in cell `c` at `xi`.
    pub fn evaluate(&self, coeffs: &[f64], c: usize, xi: &Vec3) -> Result<Mat3> {
        let basis = self.cell_basis(c)?;
        let local = DVector::from_iterator(self.nlocal, self.cell_dofs(c).iter().map(|&d| coeffs[d]));
        let mono = &basis.psi * local;
        Ok(self.eval_monomial(mono.as_slice(), xi))
    }
}

pub fn build_hhj_space(mesh: Arc<SimplicialMesh>, k: usize) -> Result<Arc<HhjSpace>> {
    HhjSpace::new(mesh, k)
}

/// Local blocks in the local orthonormal basis.
struct CellBlocks {
    /// σ mass, `nlocal × nlocal`.
    a: DMatrix<f64>,
    /// `B(σ_m, φ_i)`, `nlag × nlocal`.
    b: DMatrix<f64>,
    /// Face moments, `(N+1)·nmu × nlocal`.
    f: DMatrix<f64>,
}

/// Reference tabulations for the local blocks.
struct Tables {
    cell_weights: Vec<f64>,
    cell_mono: Vec<Vec<f64>>,
    cell_lag: Vec<BasisJets>,
    /// `[local face][point]`: weight, monomials, Lagrange jets.
    face: Vec<Vec<(f64, Vec<f64>, BasisJets)>>,
}

/// The HHJ discretization of `Δ²u = f`, `u ∈ H²₀(Ω)`, with `u` of Lagrange
/// degree `q` and σ of degree `q − 1`.
pub struct MixedSystem {
    pub hhj: Arc<HhjSpace>,
    pub lagrange: Arc<LagrangeSpace>,
    /// Load on interior Lagrange DOFs.
    pub f: Vec<f64>,
    tables: Tables,
}

/// Solver choice for [`sparse_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Hybridized, statically condensed sparse Cholesky.
    Direct,
    /// Sparse LU of the full mixed matrix.
    MixedLu,
    /// Jacobi-preconditioned MINRES on the condensed system.
    Minres,
}

#[derive(Clone, Debug)]
pub struct HhjSolution {
    /// Conforming σ coefficients.
    pub sigma: Vec<f64>,
    /// Interior Lagrange coefficients of `u`.
    pub u: Vec<f64>,
    /// Per-cell local coefficients of σ, `nlocal` per cell.
    pub sigma_cells: Vec<f64>,
    /// `‖Mx − b‖₂ / ‖b‖₂` of the conforming mixed system (0 for `b = 0`).
    pub residual: f64,
}

pub fn assemble_biharmonic(lagrange: &Arc<LagrangeSpace>, f: &FunctionalVector) -> Result<MixedSystem> {
    let q = lagrange.degree();
    if f.q != q {
        return Err(Error::DegreeMismatch(format!("functional of degree {} for u-space of degree {q}", f.q)));
    }
    if f.len() != lagrange.n_interior() {
        return Err(Error::DegreeMismatch(format!("functional has {} entries, u-space {} interior DOFs", f.len(), lagrange.n_interior())));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("u-degree must be at least 1".into()));
    }
    let hhj = HhjSpace::new(lagrange.mesh.clone(), q - 1)?;
    let dim = lagrange.mesh.dim();
    let k = q - 1;
    let cell_rule = simplex_quadrature(dim, 2 * k.max(q))?;
    let face_rule = simplex_quadrature(dim - 1, k + q)?;
    let tables = Tables {
        cell_weights: cell_rule.weights.clone(),
        cell_mono: cell_rule.points.iter().map(|p| hhj.basis.values(p)).collect(),
        cell_lag: cell_rule.points.iter().map(|p| lagrange.basis.tabulate(p, 2)).collect(),
        face: (0..=dim)
            .map(|l| {
                let locals: Vec<usize> = (0..=dim).filter(|&m| m != l).collect();
                face_rule
                    .points
                    .iter()
                    .zip(&face_rule.weights)
                    .map(|(eta, &w)| {
                        let xi = subsimplex_point(&locals, eta);
                        (w, hhj.basis.values(&xi), lagrange.basis.tabulate(&xi, 1))
                    })
                    .collect()
            })
            .collect(),
    };
    Ok(MixedSystem { hhj, lagrange: lagrange.clone(), f: f.entries.clone(), tables })
}

impl MixedSystem {
    pub fn n_sigma(&self) -> usize {
        self.hhj.ndof()
    }

    pub fn n_u(&self) -> usize {
        self.lagrange.n_interior()
    }

    pub fn size(&self) -> usize {
        self.n_sigma() + self.n_u()
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n_sigma()];
        b.extend(self.f.iter().map(|v| -v));
        b
    }

    fn blocks(&self, c: usize) -> CellBlocks {
        let mesh = &self.hhj.mesh;
        let dim = mesh.dim();
        let geom = mesh.geometry(c);
        let nm = self.hhj.basis.len();
        let ncomp = sym_components(dim).len();
        let nl = self.hhj.local_dim();
        let nlag = self.lagrange.basis.len();
        let vol = geom.det.abs();
        let mut a = DMatrix::zeros(nl, nl);
        let mut b = DMatrix::zeros(nlag, nl);
        let unit_norm: Vec<f64> = (0..ncomp)
            .map(|c| {
                let (p, q) = sym_components(dim)[c];
                let e = sym_unit(p, q);
                linalg::contract(&e, &e, dim)
            })
            .collect();
        for (p, &w) in self.tables.cell_weights.iter().enumerate() {
            let mono = &self.tables.cell_mono[p];
            let jets = push_forward(&self.tables.cell_lag[p], &geom.jac_inv, dim);
            let wv = w * vol;
            for m in 0..nm {
                for m2 in 0..nm {
                    let v = wv * mono[m] * mono[m2];
                    for (c, &un) in unit_norm.iter().enumerate() {
                        a[(c * nm + m, c * nm + m2)] += un * v;
                    }
                }
            }
            for i in 0..nlag {
                for c in 0..ncomp {
                    let h = unit_contract(c, &jets.hess[i], dim) * wv;
                    for m in 0..nm {
                        b[(i, c * nm + m)] += h * mono[m];
                    }
                }
            }
        }
        let fscale = factorial(dim - 1);
        for l in 0..=dim {
            let face = mesh.cell_faces(c)[l];
            let measure = mesh.face_measure(face) * fscale;
            let n = geom.outward_normal(l);
            let nn: Vec<f64> = (0..ncomp).map(|c| normal_normal(c, &n, dim)).collect();
            for (w, mono, ref_jets) in &self.tables.face[l] {
                let jets = push_forward(ref_jets, &geom.jac_inv, dim);
                for i in 0..nlag {
                    let dn = linalg::dot(&jets.grad[i], &n, dim) * w * measure;
                    for (c, &nnc) in nn.iter().enumerate() {
                        for m in 0..nm {
                            b[(i, c * nm + m)] -= dn * nnc * mono[m];
                        }
                    }
                }
            }
        }
        CellBlocks { a, b, f: self.hhj.face_moments(&geom) }
    }

    /// Conforming local blocks `Ψᵀ A Ψ`, `B Ψ` with σ and interior-u indices
    /// (`BOUNDARY` for eliminated u DOFs).
    fn conforming_blocks(&self, c: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, CellBasis, CellBlocks)> {
        let blocks = self.blocks(c);
        let basis = self.hhj.cell_basis(c)?;
        let a = basis.psi.transpose() * &blocks.a * &basis.psi;
        let b = &blocks.b * &basis.psi;
        Ok((a, b, basis, blocks))
    }

    fn u_indices(&self, c: usize) -> Vec<usize> {
        self.lagrange.cell_dofs(c).iter().map(|&d| self.lagrange.interior_index(d)).collect()
    }

    /// Entries of the full mixed matrix (duplicates summed by consumers).
    pub fn triplets(&self) -> Result<Vec<(usize, usize, f64)>> {
        let ns = self.n_sigma();
        let mut out = Vec::new();
        for c in 0..self.hhj.mesh.num_cells() {
            let (a, b, _, _) = self.conforming_blocks(c)?;
            let sd = self.hhj.cell_dofs(c);
            let ud = self.u_indices(c);
            for (i, &gi) in sd.iter().enumerate() {
                for (j, &gj) in sd.iter().enumerate() {
                    out.push((gi, gj, a[(i, j)]));
                }
            }
            for (i, &gu) in ud.iter().enumerate() {
                if gu == BOUNDARY {
                    continue;
                }
                for (j, &gs) in sd.iter().enumerate() {
                    let v = b[(i, j)];
                    out.push((ns + gu, gs, v));
                    out.push((gs, ns + gu, v));
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product with the full mixed matrix, cell by cell.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let ns = self.n_sigma();
        let cells: Vec<Result<(Vec<usize>, Vec<usize>, Vec<f64>, Vec<f64>)>> = (0..self.hhj.mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let (a, b, _, _) = self.conforming_blocks(c)?;
                let sd = self.hhj.cell_dofs(c);
                let ud = self.u_indices(c);
                let xs = DVector::from_iterator(sd.len(), sd.iter().map(|&d| x[d]));
                let xu = DVector::from_iterator(ud.len(), ud.iter().map(|&d| if d == BOUNDARY { 0.0 } else { x[ns + d] }));
                let ys = &a * &xs + b.transpose() * xu;
                let yu = &b * xs;
                Ok((sd, ud, ys.as_slice().to_vec(), yu.as_slice().to_vec()))
            })
            .collect();
        let mut y = vec![0.0; self.size()];
        for cell in cells {
            let (sd, ud, ys, yu) = cell?;
            for (d, v) in sd.iter().zip(ys) {
                y[*d] += v;
            }
            for (d, v) in ud.iter().zip(yu) {
                if *d != BOUNDARY {
                    y[ns + d] += v;
                }
            }
        }
        Ok(y)
    }

    /// Coordinate-format text dump `row col value`, one entry per line,
    /// duplicates summed and entries sorted.
    pub fn write_coo(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut t = self.triplets()?;
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.size(), self.size());
        let mut k = 0;
        while k < t.len() {
            let (r, c, mut v) = t[k];
            k += 1;
            while k < t.len() && t[k].0 == r && t[k].1 == c {
                v += t[k].2;
                k += 1;
            }
            let _ = writeln!(s, "{r} {c} {v:e}");
        }
        std::fs::write(path, s)?;
        Ok(())
    }

    fn residual(&self, sigma: &[f64], u: &[f64]) -> Result<f64> {
        let mut x = sigma.to_vec();
        x.extend_from_slice(u);
        let y = self.apply(&x)?;
        let b = self.rhs();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rn = y.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Ok(if bn == 0.0 { rn } else { rn / bn })
    }
}

/// Lower triangle of a symmetric sparse matrix in CSC form.
struct LowerCsc {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    val: Vec<f64>,
}

impl LowerCsc {
    fn from_pattern(n: usize, cells: &[Vec<usize>]) -> Self {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for idx in cells {
            for &j in idx {
                for &i in idx {
                    if i >= j {
                        cols[j].push(i);
                    }
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for col in cols.iter_mut() {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        let val = vec![0.0; row_idx.len()];
        LowerCsc { n, col_ptr, row_idx, val }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let rows = &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]];
        let k = rows.binary_search(&i).expect("entry in pattern");
        self.val[self.col_ptr[j] + k] += v;
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let v = self.val[k];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                let rows = &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]];
                rows.binary_search(&j).map(|k| self.val[self.col_ptr[j] + k]).unwrap_or(0.0)
            })
            .collect()
    }

    fn cholesky_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx);
        let mat = SparseColMatRef::new(sym, &self.val);
        let llt = mat.sp_cholesky(Side::Lower).map_err(|e| Error::Solver(format!("sparse Cholesky failed: {e:?}")))?;
        let solve = |b: &[f64]| -> Vec<f64> {
            let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
            llt.solve_in_place(x.as_mut());
            (0..self.n).map(|i| x[(i, 0)]).collect()
        };
        let mut x = solve(rhs);
        // a few steps of iterative refinement against the assembled matrix
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut res: Vec<f64> = self.matvec(&x).iter().zip(rhs).map(|(a, b)| b - a).collect();
        let mut rn = norm(&res);
        for _ in 0..3 {
            if rn <= 1e-14 * norm(rhs) {
                break;
            }
            let dx = solve(&res);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let tres: Vec<f64> = self.matvec(&trial).iter().zip(rhs).map(|(a, b)| b - a).collect();
            let tn = norm(&tres);
            if tn >= rn {
                break;
            }
            x = trial;
            res = tres;
            rn = tn;
        }
        Ok(x)
    }
}

/// Hybridized system: unknowns are interior u DOFs followed by face
/// multipliers on interior faces.
struct Hybrid {
    matrix: LowerCsc,
    rhs: Vec<f64>,
}

struct CellHybrid {
    /// Global hybrid indices of the rows of `g`.
    idx: Vec<usize>,
    /// `G = [B_int; ±F_int]`.
    g: DMatrix<f64>,
}

impl MixedSystem {
    fn face_offsets(&self) -> (Vec<usize>, usize) {
        let nu = self.n_u();
        let nmu = self.hhj.face_block();
        let mut off = vec![BOUNDARY; self.hhj.mesh.faces().len()];
        let mut next = nu;
        for (f, face) in self.hhj.mesh.faces().iter().enumerate() {
            if face.interior {
                off[f] = next;
                next += nmu;
            }
        }
        (off, next)
    }

    fn cell_hybrid(&self, c: usize, offsets: &[usize], blocks: &CellBlocks) -> CellHybrid {
        let mesh = &self.hhj.mesh;
        let dim = mesh.dim();
        let nmu = self.hhj.face_block();
        let ud = self.u_indices(c);
        let mut rows: Vec<(usize, DVector<f64>)> = Vec::new();
        for (i, &gu) in ud.iter().enumerate() {
            if gu != BOUNDARY {
                rows.push((gu, blocks.b.row(i).transpose()));
            }
        }
        for l in 0..=dim {
            let face = mesh.cell_faces(c)[l];
            if offsets[face] == BOUNDARY {
                continue;
            }
            let sign = if mesh.faces()[face].cells[0].cell == c { 1.0 } else { -1.0 };
            for j in 0..nmu {
                rows.push((offsets[face] + j, blocks.f.row(l * nmu + j).transpose() * sign));
            }
        }
        let nl = self.hhj.local_dim();
        let mut g = DMatrix::zeros(rows.len(), nl);
        for (r, (_, row)) in rows.iter().enumerate() {
            g.row_mut(r).copy_from(&row.transpose());
        }
        CellHybrid { idx: rows.into_iter().map(|(i, _)| i).collect(), g }
    }

    fn hybrid(&self) -> Result<Hybrid> {
        let ncells = self.hhj.mesh.num_cells();
        let (offsets, n) = self.face_offsets();
        let patterns: Vec<Vec<usize>> = (0..ncells)
            .map(|c| {
                let blocks = CellBlocksShape::of(self, c, &offsets);
                blocks.0
            })
            .collect();
        let mut matrix = LowerCsc::from_pattern(n, &patterns);
        drop(patterns);
        const CHUNK: usize = 2048;
        for start in (0..ncells).step_by(CHUNK) {
            let end = (start + CHUNK).min(ncells);
            let locals: Vec<Result<(Vec<usize>, DMatrix<f64>)>> = (start..end)
                .into_par_iter()
                .map(|c| {
                    let blocks = self.blocks(c);
                    let h = self.cell_hybrid(c, &offsets, &blocks);
                    let chol = blocks
                        .a
                        .clone()
                        .cholesky()
                        .ok_or_else(|| Error::Solver(format!("σ mass of cell {c} not positive definite")))?;
                    let x = chol.solve(&h.g.transpose());
                    Ok((h.idx, &h.g * x))
                })
                .collect();
            for local in locals {
                let (idx, l) = local?;
                for (a, &i) in idx.iter().enumerate() {
                    for (b, &j) in idx.iter().enumerate() {
                        if i >= j {
                            matrix.add(i, j, l[(a, b)]);
                        }
                    }
                }
            }
        }
        let mut rhs = vec![0.0; n];
        rhs[..self.n_u()].copy_from_slice(&self.f);
        Ok(Hybrid { matrix, rhs })
    }

    /// σ and u from the hybrid solution: per cell `σ_T = −A⁻¹Gᵀx_T`.
    fn recover(&self, x: &[f64]) -> Result<HhjSolution> {
        let (offsets, _) = self.face_offsets();
        let ncells = self.hhj.mesh.num_cells();
        let nl = self.hhj.local_dim();
        let cells: Vec<Result<(DVector<f64>, DVector<f64>)>> = (0..ncells)
            .into_par_iter()
            .map(|c| {
                let blocks = self.blocks(c);
                let h = self.cell_hybrid(c, &offsets, &blocks);
                let xt = DVector::from_iterator(h.idx.len(), h.idx.iter().map(|&i| x[i]));
                let chol = blocks.a.clone().cholesky().ok_or_else(|| Error::Solver(format!("σ mass of cell {c}")))?;
                let s = -chol.solve(&(h.g.transpose() * xt));
                let basis = self.hhj.cell_basis(c)?;
                Ok((basis.psi_inv * &s, s))
            })
            .collect();
        let mut sigma = vec![0.0; self.n_sigma()];
        let mut count = vec![0u8; self.n_sigma()];
        let mut sigma_cells = vec![0.0; ncells * nl];
        for (c, cell) in cells.into_iter().enumerate() {
            let (dofs, mono) = cell?;
            // shared face DOFs agree up to round-off and are averaged
            for (d, v) in self.hhj.cell_dofs(c).iter().zip(dofs.iter()) {
                sigma[*d] += *v;
                count[*d] += 1;
            }
            sigma_cells[c * nl..(c + 1) * nl].copy_from_slice(mono.as_slice());
        }
        for (s, &n) in sigma.iter_mut().zip(&count) {
            *s /= n.max(1) as f64;
        }
        let u = x[..self.n_u()].to_vec();
        let residual = self.residual(&sigma, &u)?;
        Ok(HhjSolution { sigma, u, sigma_cells, residual })
    }
}

/// Sparsity pattern of one cell's hybrid block.
struct CellBlocksShape(Vec<usize>);

impl CellBlocksShape {
    fn of(sys: &MixedSystem, c: usize, offsets: &[usize]) -> Self {
        let mesh = &sys.hhj.mesh;
        let nmu = sys.hhj.face_block();
        let mut idx: Vec<usize> = sys.u_indices(c).into_iter().filter(|&d| d != BOUNDARY).collect();
        for &f in mesh.cell_faces(c) {
            if offsets[f] != BOUNDARY {
                idx.extend(offsets[f]..offsets[f] + nmu);
            }
        }
        CellBlocksShape(idx)
    }
}

/// Jacobi-preconditioned MINRES for a symmetric system.
fn minres(a: &LowerCsc, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let diag = a.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Solver("MINRES preconditioner needs a positive diagonal".into()));
    }
    let prec = |v: &[f64]| -> Vec<f64> { v.iter().zip(&diag).map(|(x, d)| x / d).collect() };
    let dotp = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let mut x = vec![0.0; n];
    let mut v_old = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = prec(&v);
    let mut gamma = dotp(&z, &v).sqrt();
    if gamma == 0.0 {
        return Ok(x);
    }
    let mut gamma_old = 1.0;
    let mut eta = gamma;
    let eta0 = gamma;
    let (mut s_old, mut s, mut c_old, mut c) = (0.0, 0.0, 1.0, 1.0);
    let mut w_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    for _ in 0..max_iter {
        for zi in z.iter_mut() {
            *zi /= gamma;
        }
        let az = a.matvec(&z);
        let delta = dotp(&az, &z);
        let v_new: Vec<f64> = (0..n).map(|i| az[i] - delta / gamma * v[i] - gamma / gamma_old * v_old[i]).collect();
        let z_new = prec(&v_new);
        let gamma_new = dotp(&z_new, &v_new).max(0.0).sqrt();
        let alpha0 = c * delta - c_old * s * gamma;
        let alpha1 = (alpha0 * alpha0 + gamma_new * gamma_new).sqrt();
        let alpha2 = s * delta + c_old * c * gamma;
        let alpha3 = s_old * gamma;
        let c_new = alpha0 / alpha1;
        let s_new = gamma_new / alpha1;
        let w_new: Vec<f64> = (0..n).map(|i| (z[i] - alpha3 * w_old[i] - alpha2 * w[i]) / alpha1).collect();
        for i in 0..n {
            x[i] += c_new * eta * w_new[i];
        }
        eta = -s_new * eta;
        v_old = v;
        v = v_new;
        z = z_new;
        gamma_old = gamma;
        gamma = gamma_new;
        w_old = w;
        w = w_new;
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
        if eta.abs() <= tol * eta0 || gamma == 0.0 {
            return Ok(x);
        }
    }
    Err(Error::Solver(format!("MINRES did not converge in {max_iter} iterations (|η|/η₀ = {:e})", eta.abs() / eta0)))
}

/// Relative residual bound every solve must meet.
pub const RESIDUAL_TOL: f64 = 1e-9;

pub fn sparse_solve(system: &MixedSystem, kind: SolverKind) -> Result<HhjSolution> {
    let solution = match kind {
        SolverKind::Direct => {
            let h = system.hybrid()?;
            let x = h.matrix.cholesky_solve(&h.rhs)?;
            system.recover(&x)?
        }
        SolverKind::Minres => {
            let h = system.hybrid()?;
            let x = minres(&h.matrix, &h.rhs, 1e-14, 50 * h.rhs.len().max(100))?;
            system.recover(&x)?
        }
        SolverKind::MixedLu => {
            let n = system.size();
            let trip: Vec<Triplet<usize, usize, f64>> =
                system.triplets()?.into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
                .map_err(|e| Error::Solver(format!("mixed matrix: {e:?}")))?;
            let lu = mat.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
            let b = system.rhs();
            let mut x = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
            lu.solve_in_place(x.as_mut());
            let ns = system.n_sigma();
            let sigma: Vec<f64> = (0..ns).map(|i| x[(i, 0)]).collect();
            let u: Vec<f64> = (ns..n).map(|i| x[(i, 0)]).collect();
            let nl = system.hhj.local_dim();
            let mut sigma_cells = vec![0.0; system.hhj.mesh.num_cells() * nl];
            for c in 0..system.hhj.mesh.num_cells() {
                let basis = system.hhj.cell_basis(c)?;
                let local = DVector::from_iterator(nl, system.hhj.cell_dofs(c).iter().map(|&d| sigma[d]));
                sigma_cells[c * nl..(c + 1) * nl].copy_from_slice((basis.psi * local).as_slice());
            }
            let residual = system.residual(&sigma, &u)?;
            HhjSolution { sigma, u, sigma_cells, residual }
        }
    };
    if !solution.residual.is_finite() || solution.residual > RESIDUAL_TOL {
        return Err(Error::Solver(format!("relative residual {:e} exceeds {RESIDUAL_TOL:e}", solution.residual)));
    }
    Ok(solution)
}

/// `(‖u‖² + |u|²_{H¹} + ‖σ‖²)^{1/2}`, each term optionally measured
/// against an exact solution `(u, ∇u, −∇²u)`.
pub fn solution_norm(
    system: &MixedSystem,
    sol: &HhjSolution,
    exact: Option<&(dyn Fn(&Vec3) -> (f64, Vec3, Mat3) + Sync)>,
) -> Result<f64> {
    let mesh = &system.hhj.mesh;
    let dim = mesh.dim();
    let q = system.lagrange.degree();
    let rule = simplex_quadrature(dim, (2 * q + 8).min(crate::quadrature::MAX_EXACTNESS))?;
    let tab: Vec<BasisJets> = rule.points.iter().map(|p| system.lagrange.basis.tabulate(p, 1)).collect();
    let nl = system.hhj.local_dim();
    let full = system.lagrange.extend(&sol.u);
    let parts: Vec<f64> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.geometry(c);
            let dofs = system.lagrange.cell_dofs(c);
            let coef = &sol.sigma_cells[c * nl..(c + 1) * nl];
            let mut total = 0.0;
            for (k, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let jets = push_forward(&tab[k], &geom.jac_inv, dim);
                let mut u = 0.0;
                let mut du = [0.0; 3];
                for (i, &d) in dofs.iter().enumerate() {
                    u += full[d] * jets.val[i];
                    for e in 0..dim {
                        du[e] += full[d] * jets.grad[i][e];
                    }
                }
                let mut s = system.hhj.eval_monomial(coef, p);
                if let Some(ex) = exact {
                    let (ue, due, se) = ex(&geom.map(p));
                    u -= ue;
                    for e in 0..dim {
                        du[e] -= due[e];
                        for f in 0..dim {
                            s[e][f] -= se[e][f];
                        }
                    }
                }
                total += w * geom.det.abs() * (u * u + linalg::dot(&du, &du, dim) + linalg::contract(&s, &s, dim));
            }
            total
        })
        .collect();
    Ok(parts.iter().sum::<f64>().sqrt())
}

/// Discrete H⁻²-equivalent norm of `f`: the H²-equivalent norm of the HHJ
/// solution of `Δ²u = f`.
pub fn neg2_norm(f: &FunctionalVector, lagrange: &Arc<LagrangeSpace>, kind: SolverKind) -> Result<f64> {
    if lagrange.degree() < 2 {
        return Err(Error::InvalidArgument("the H⁻² norm needs u-degree ≥ 2".into()));
    }
    if f.entries.iter().all(|&v| v == 0.0) {
        if f.q != lagrange.degree() || f.len() != lagrange.n_interior() {
            return Err(Error::DegreeMismatch("functional does not match the u-space".into()));
        }
        return Ok(0.0);
    }
    let system = assemble_biharmonic(lagrange, f)?;
    let sol = sparse_solve(&system, kind)?;
    solution_norm(&system, &sol, None)
}

/// Load functional `v ↦ ∫ f v dx` on interior Lagrange DOFs.
pub fn load_vector(lagrange: &LagrangeSpace, f: impl Fn(&Vec3) -> f64 + Sync) -> Result<FunctionalVector> {
    let mesh = &lagrange.mesh;
    let dim = mesh.dim();
    let rule = simplex_quadrature(dim, (2 * lagrange.degree() + 8).min(crate::quadrature::MAX_EXACTNESS))?;
    let tab: Vec<BasisJets> = rule.points.iter().map(|p| lagrange.basis.tabulate(p, 0)).collect();
    let mut full = vec![0.0; lagrange.ndof()];
    for c in 0..mesh.num_cells() {
        let geom = mesh.geometry(c);
        for (k, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = w * geom.det.abs() * f(&geom.map(p));
            for (i, &d) in lagrange.cell_dofs(c).iter().enumerate() {
                full[d] += v * tab[k].val[i];
            }
        }
    }
    Ok(FunctionalVector::from_full(lagrange, &full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::dim_poly;
    use rand_chacha::rand_core::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn mesh(dim: usize, k: u32) -> Arc<SimplicialMesh> {
        Arc::new(SimplicialMesh::build_structured(dim, k).unwrap().perturb_interior(0, k as u64).unwrap())
    }

    #[test]
    fn local_dimensions() {
        let s = build_hhj_space(mesh(2, 1), 0).unwrap();
        assert_eq!(s.local_dim(), 3);
        assert_eq!(s.bubbles(), 0);
        assert_eq!(s.cell_dofs(0).len(), 3);
        let s3 = build_hhj_space(mesh(3, 0), 1).unwrap();
        assert_eq!(s3.local_dim(), 24);
        assert_eq!(s3.bubbles(), 24 - 4 * 3);
        for k in 0..4 {
            let s = build_hhj_space(mesh(2, 1), k).unwrap();
            assert_eq!(s.local_dim(), 3 * dim_poly(2, k as isize));
        }
    }

    #[test]
    fn basis_is_dual_to_dofs() {
        let s = build_hhj_space(mesh(3, 1), 2).unwrap();
        let b = s.cell_basis(7).unwrap();
        let id = &b.psi_inv * &b.psi;
        let err = (id - DMatrix::identity(s.local_dim(), s.local_dim())).amax();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn nn_continuity_at_random_face_points() {
        for (dim, k) in [(2usize, 2usize), (3, 1)] {
            let m = mesh(dim, 1);
            let s = build_hhj_space(m.clone(), k).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let coeffs: Vec<f64> = (0..s.ndof()).map(|_| uniform(&mut rng) - 0.5).collect();
            let interior: Vec<usize> = (0..m.faces().len()).filter(|&f| m.faces()[f].interior).collect();
            for t in 0..50 {
                let f = interior[(rng.next_u64() as usize) % interior.len()];
                let face = &m.faces()[f];
                let mut eta = [uniform(&mut rng), uniform(&mut rng), 0.0];
                if dim == 2 {
                    eta[1] = 0.0;
                } else if eta[0] + eta[1] > 1.0 {
                    eta = [1.0 - eta[0], 1.0 - eta[1], 0.0];
                }
                let mut vals = Vec::new();
                for inc in &face.cells {
                    let geom = m.geometry(inc.cell);
                    let locals: Vec<usize> = (0..=dim).filter(|&l| l != inc.local).collect();
                    let xi = subsimplex_point(&locals, &eta);
                    let sig = s.evaluate(&coeffs, inc.cell, &xi).unwrap();
                    let n = geom.outward_normal(inc.local);
                    vals.push((linalg::bilinear(&sig, &n, &n, dim), geom.map(&xi)));
                }
                assert!(linalg::norm(&linalg::sub(&vals[0].1, &vals[1].1), 3) < 1e-12);
                assert!((vals[0].0 - vals[1].0).abs() < 1e-10, "dim {dim} sample {t}: {} vs {}", vals[0].0, vals[1].0);
            }
        }
    }

    fn symmetric_check(sys: &MixedSystem) {
        let n = sys.size();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for (i, j, v) in sys.triplets().unwrap() {
            dense[(i, j)] += v;
        }
        assert!((&dense - dense.transpose()).amax() <= 1e-12);
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        let m = mesh(2, 1);
        let lag = LagrangeSpace::new(m, 2).unwrap();
        let f = FunctionalVector::zeros(2, lag.n_interior());
        let sys = assemble_biharmonic(&lag, &f).unwrap();
        symmetric_check(&sys);
        for kind in [SolverKind::Direct, SolverKind::MixedLu, SolverKind::Minres] {
            let sol = sparse_solve(&sys, kind).unwrap();
            assert!(sol.u.iter().chain(&sol.sigma).all(|&v| v == 0.0));
        }
        assert_eq!(neg2_norm(&f, &lag, SolverKind::Direct).unwrap(), 0.0);
    }

    #[test]
    fn degree_mismatch_rejected() {
        let lag = LagrangeSpace::new(mesh(2, 1), 3).unwrap();
        let f = FunctionalVector::zeros(2, lag.n_interior());
        assert!(matches!(assemble_biharmonic(&lag, &f), Err(Error::DegreeMismatch(_))));
    }

    #[test]
    fn solvers_agree_with_dense_reference() {
        let m = mesh(2, 1);
        let lag = LagrangeSpace::new(m, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = FunctionalVector { q: 2, entries: (0..lag.n_interior()).map(|_| uniform(&mut rng) - 0.5).collect() };
        let sys = assemble_biharmonic(&lag, &f).unwrap();
        assert!(sys.size() <= 200);
        symmetric_check(&sys);
        let n = sys.size();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for (i, j, v) in sys.triplets().unwrap() {
            dense[(i, j)] += v;
        }
        let x = dense.lu().solve(&DVector::from_vec(sys.rhs())).unwrap();
        for kind in [SolverKind::Direct, SolverKind::MixedLu, SolverKind::Minres] {
            let sol = sparse_solve(&sys, kind).unwrap();
            assert!(sol.residual <= RESIDUAL_TOL);
            let ns = sys.n_sigma();
            for i in 0..sys.n_u() {
                assert!((sol.u[i] - x[ns + i]).abs() <= 1e-10 * x.amax(), "{kind:?}");
            }
            for i in 0..ns {
                assert!((sol.sigma[i] - x[i]).abs() <= 1e-10 * x.amax(), "{kind:?}");
            }
        }
    }

    #[test]
    fn single_hat_residual() {
        let lag = LagrangeSpace::new(Arc::new(SimplicialMesh::build_structured(2, 2).unwrap()), 1).unwrap();
        let mut f = FunctionalVector::zeros(1, lag.n_interior());
        f.entries[lag.n_interior() / 2] = 1.0;
        let sys = assemble_biharmonic(&lag, &f).unwrap();
        let sol = sparse_solve(&sys, SolverKind::Direct).unwrap();
        assert!(sol.residual <= 1e-9);
    }

    #[test]
    fn hessian_pairing_for_quadratics() {
        // B(σ, u) = ∫ σ:∇²u for globally smooth quadratic u (face terms cancel
        // in the interior and are kept on the boundary, so compare with the
        // full-DOF pairing minus the boundary flux)
        let m = mesh(2, 1);
        let lag = LagrangeSpace::new(m.clone(), 2).unwrap();
        let f = FunctionalVector::zeros(2, lag.n_interior());
        let sys = assemble_biharmonic(&lag, &f).unwrap();
        let u = lag.interpolate(|x| 0.5 * x[0] * x[0] - x[0] * x[1] + 2.0 * x[1] * x[1]);
        let h = [[1.0, -1.0, 0.0], [-1.0, 4.0, 0.0], [0.0; 3]];
        // σ = constant tensor S in every cell
        let s = [[0.3, 0.7, 0.0], [0.7, -1.1, 0.0], [0.0; 3]];
        let mut total = 0.0;
        let mut boundary = 0.0;
        for c in 0..m.num_cells() {
            let blocks = sys.blocks(c);
            let nm = sys.hhj.basis.len();
            let mut coef = DVector::zeros(sys.hhj.local_dim());
            // p₀ is the only constant basis polynomial
            let p0 = sys.hhj.basis.values(&[0.2, 0.3, 0.0])[0];
            coef[0] = s[0][0] / p0;
            coef[nm] = s[0][1] / p0;
            coef[2 * nm] = s[1][1] / p0;
            let ul = DVector::from_iterator(lag.basis.len(), lag.cell_dofs(c).iter().map(|&d| u[d]));
            total += (ul.transpose() * &blocks.b * coef)[(0, 0)];
            let geom = m.geometry(c);
            for l in 0..3 {
                let face = m.cell_faces(c)[l];
                if !m.faces()[face].interior {
                    let n = geom.outward_normal(l);
                    let x = m.vertices();
                    let fv = &m.faces()[face].vertices;
                    let mid = [(x[fv[0]][0] + x[fv[1]][0]) / 2.0, (x[fv[0]][1] + x[fv[1]][1]) / 2.0, 0.0];
                    let grad = [mid[0] - mid[1], -mid[0] + 4.0 * mid[1], 0.0];
                    // ∂_n u is linear along the face: midpoint rule is exact
                    boundary += linalg::bilinear(&s, &n, &n, 2) * linalg::dot(&grad, &n, 2) * m.face_measure(face);
                }
            }
        }
        let area = 4.0;
        let exact = area * linalg::contract(&s, &h, 2) - boundary;
        assert!((total - exact).abs() < 1e-10 * exact.abs().max(1.0), "{total} vs {exact}");
    }

    fn manufactured(x: &Vec3) -> (f64, Vec3, Mat3) {
        let (a, b) = ((1.0 - x[0] * x[0]).powi(2), (1.0 - x[1] * x[1]).powi(2));
        let (da, db) = (-4.0 * x[0] * (1.0 - x[0] * x[0]), -4.0 * x[1] * (1.0 - x[1] * x[1]));
        let (d2a, d2b) = (12.0 * x[0] * x[0] - 4.0, 12.0 * x[1] * x[1] - 4.0);
        let u = a * b / 16.0;
        let g = [da * b / 16.0, a * db / 16.0, 0.0];
        let h = [[d2a * b / 16.0, da * db / 16.0, 0.0], [da * db / 16.0, a * d2b / 16.0, 0.0], [0.0; 3]];
        (u, g, h)
    }

    fn bilaplacian(x: &Vec3) -> f64 {
        let (a, b) = ((1.0 - x[0] * x[0]).powi(2), (1.0 - x[1] * x[1]).powi(2));
        (24.0 * b + 2.0 * (12.0 * x[0] * x[0] - 4.0) * (12.0 * x[1] * x[1] - 4.0) + 24.0 * a) / 16.0
    }

    #[test]
    fn bilaplacian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = |x: f64, y: f64| manufactured(&[x, y, 0.0]).0;
        let h = 1e-2;
        for _ in 0..20 {
            let (x, y) = (1.6 * uniform(&mut rng) - 0.8, 1.6 * uniform(&mut rng) - 0.8);
            let lap = |x: f64, y: f64| (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * u(x, y)) / (h * h);
            let fd = (lap(x + h, y) + lap(x - h, y) + lap(x, y + h) + lap(x, y - h) - 4.0 * lap(x, y)) / (h * h);
            assert!((fd - bilaplacian(&[x, y, 0.0])).abs() < 1e-2, "{fd}");
        }
    }

    #[test]
    fn manufactured_solution_converges() {
        let mut errors = Vec::new();
        for k in 1..=4 {
            let lag = LagrangeSpace::new(mesh(2, k), 2).unwrap();
            let f = load_vector(&lag, bilaplacian).unwrap();
            let sys = assemble_biharmonic(&lag, &f).unwrap();
            let sol = sparse_solve(&sys, SolverKind::Direct).unwrap();
            assert!(sol.residual <= 1e-9);
            let exact = |x: &Vec3| {
                let (u, g, h) = manufactured(x);
                let mut s = h;
                for row in s.iter_mut() {
                    for v in row.iter_mut() {
                        *v = -*v;
                    }
                }
                (u, g, s)
            };
            errors.push(solution_norm(&sys, &sol, Some(&exact)).unwrap());
        }
        for w in errors.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.0, "{errors:?}");
        }
    }

    #[test]
    fn norm_is_homogeneous_and_subadditive() {
        let lag = LagrangeSpace::new(mesh(2, 2), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            let f = FunctionalVector { q: 2, entries: (0..lag.n_interior()).map(|_| uniform(&mut rng) - 0.5).collect() };
            let g = FunctionalVector { q: 2, entries: (0..lag.n_interior()).map(|_| uniform(&mut rng) - 0.5).collect() };
            let nf = neg2_norm(&f, &lag, SolverKind::Direct).unwrap();
            let ng = neg2_norm(&g, &lag, SolverKind::Direct).unwrap();
            let nfg = neg2_norm(&f.axpy(1.0, &g), &lag, SolverKind::Direct).unwrap();
            assert!(nfg <= nf + ng + 1e-9 * (nf + ng));
            let c = -3.7;
            let nc = neg2_norm(&f.scaled(c), &lag, SolverKind::Direct).unwrap();
            assert!((nc - c.abs() * nf).abs() <= 1e-10 * nc);
        }
    }

    #[test]
    fn norm_stabilizes_under_refinement() {
        let mut norms = Vec::new();
        for k in 2..=5 {
            let lag = LagrangeSpace::new(mesh(2, k), 2).unwrap();
            norms.push(neg2_norm(&load_vector(&lag, bilaplacian).unwrap(), &lag, SolverKind::Direct).unwrap());
        }
        let n = norms.len();
        assert!((norms[n - 1] - norms[n - 2]).abs() <= 0.05 * norms[n - 1], "{norms:?}");
    }

    #[test]
    fn three_d_solve() {
        let lag = LagrangeSpace::new(mesh(3, 1), 2).unwrap();
        let f = load_vector(&lag, |x| 1.0 + x[0] * x[1]).unwrap();
        let sys = assemble_biharmonic(&lag, &f).unwrap();
        let direct = sparse_solve(&sys, SolverKind::Direct).unwrap();
        let lu = sparse_solve(&sys, SolverKind::MixedLu).unwrap();
        let scale = direct.u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in direct.u.iter().zip(&lu.u) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn coo_export() {
        let lag = LagrangeSpace::new(mesh(2, 0), 2).unwrap();
        let f = FunctionalVector::zeros(2, lag.n_interior());
        let sys = assemble_biharmonic(&lag, &f).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.coo");
        sys.write_coo(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let header: Vec<usize> = text.lines().next().unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(header, vec![sys.size(), sys.size()]);
    }
}
