//! Monomial bases on reference simplices and the nodal Lagrange basis.

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3, ZERO3};

/// Monomials `ξ^α`, `|α| ≤ degree`, in graded order.
#[derive(Clone, Debug)]
pub struct Monomials {
    pub dim: usize,
    pub degree: usize,
    pub exps: Vec<[u32; 3]>,
}

/// Number of monomials of total degree `≤ p` in `dim` variables.
pub fn dim_poly(dim: usize, p: isize) -> usize {
    if p < 0 {
        return 0;
    }
    let p = p as usize;
    match dim {
        0 => 1,
        1 => p + 1,
        2 => (p + 1) * (p + 2) / 2,
        3 => (p + 1) * (p + 2) * (p + 3) / 6,
        _ => unreachable!("dimension {dim}"),
    }
}

impl Monomials {
    pub fn new(dim: usize, degree: usize) -> Self {
        let mut exps = Vec::new();
        for total in 0..=degree as u32 {
            match dim {
                0 => {
                    if total == 0 {
                        exps.push([0, 0, 0]);
                    }
                }
                1 => exps.push([total, 0, 0]),
                2 => {
                    for a in (0..=total).rev() {
                        exps.push([a, total - a, 0]);
                    }
                }
                3 => {
                    for a in (0..=total).rev() {
                        for b in (0..=total - a).rev() {
                            exps.push([a, b, total - a - b]);
                        }
                    }
                }
                _ => unreachable!("dimension {dim}"),
            }
        }
        Monomials { dim, degree, exps }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn values(&self, x: &Vec3) -> Vec<f64> {
        let pw = powers(x, self.degree);
        self.exps
            .iter()
            .map(|e| pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize])
            .collect()
    }

    /// Values, gradients and Hessians of every monomial at `x`.
    pub fn jets(&self, x: &Vec3, order: usize) -> MonomialJets {
        let pw = powers(x, self.degree);
        let n = self.len();
        let mut val = Vec::with_capacity(n);
        let mut grad = Vec::with_capacity(if order >= 1 { n } else { 0 });
        let mut hess = Vec::with_capacity(if order >= 2 { n } else { 0 });
        // d^k/dx^k x^a = a(a−1)…(a−k+1) x^{a−k}
        let deriv = |d: usize, a: u32, k: u32| -> f64 {
            if a < k {
                return 0.0;
            }
            let c: f64 = (0..k).map(|m| (a - m) as f64).product();
            c * pw[d][(a - k) as usize]
        };
        for e in &self.exps {
            val.push(deriv(0, e[0], 0) * deriv(1, e[1], 0) * deriv(2, e[2], 0));
            if order >= 1 {
                let mut g = [0.0; 3];
                for (k, gk) in g.iter_mut().enumerate().take(self.dim) {
                    let mut p = 1.0;
                    for d in 0..3 {
                        p *= deriv(d, e[d], u32::from(d == k));
                    }
                    *gk = p;
                }
                grad.push(g);
            }
            if order >= 2 {
                let mut h = ZERO3;
                for k in 0..self.dim {
                    for l in k..self.dim {
                        let mut p = 1.0;
                        for d in 0..3 {
                            p *= deriv(d, e[d], u32::from(d == k) + u32::from(d == l));
                        }
                        h[k][l] = p;
                        h[l][k] = p;
                    }
                }
                hess.push(h);
            }
        }
        MonomialJets { val, grad, hess }
    }
}

fn powers(x: &Vec3, degree: usize) -> [Vec<f64>; 3] {
    let mut out: [Vec<f64>; 3] = Default::default();
    for d in 0..3 {
        let mut p = Vec::with_capacity(degree + 1);
        let mut v = 1.0;
        for _ in 0..=degree {
            p.push(v);
            v *= x[d];
        }
        out[d] = p;
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct MonomialJets {
    pub val: Vec<f64>,
    pub grad: Vec<Vec3>,
    pub hess: Vec<Mat3>,
}

/// Nodal Lagrange basis of degree `q` on the reference `dim`-simplex.
///
/// Nodes are the principal lattice points `ξ = (α₁,…,α_N)/q` for barycentric
/// multi-indices `α` with `|α| = q`; `α₀` belongs to the origin vertex.
#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    pub dim: usize,
    pub degree: usize,
    pub monomials: Monomials,
    /// Barycentric multi-index of every node (first `dim + 1` entries used).
    pub nodes: Vec<[u32; 4]>,
    /// `coeffs[i][m]`: coefficient of monomial `m` in basis function `i`.
    pub coeffs: Vec<Vec<f64>>,
}

impl LagrangeBasis {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidArgument(format!("Lagrange degree {degree} < 1")));
        }
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidDimension(dim));
        }
        let monomials = Monomials::new(dim, degree);
        let q = degree as u32;
        let mut nodes = Vec::new();
        for alpha in Monomials::new(dim, degree).exps {
            let s: u32 = alpha.iter().sum();
            nodes.push([q - s, alpha[0], alpha[1], alpha[2]]);
        }
        let n = nodes.len();
        let vandermonde = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            let x = node_point(&nodes[i], degree);
            monomials.values(&x)[j]
        });
        let inv = vandermonde
            .try_inverse()
            .ok_or_else(|| Error::SingularDofMatrix { element: format!("Lagrange P{degree} in {dim}D"), sigma_min: 0.0 })?;
        let coeffs = (0..n).map(|i| (0..n).map(|m| inv[(m, i)]).collect()).collect();
        Ok(LagrangeBasis { dim, degree, monomials, nodes, coeffs })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> Vec3 {
        node_point(&self.nodes[i], self.degree)
    }

    /// Values, reference gradients and reference Hessians of all basis
    /// functions at `x`.
    pub fn tabulate(&self, x: &Vec3, order: usize) -> BasisJets {
        let mj = self.monomials.jets(x, order);
        let n = self.len();
        let mut out = BasisJets {
            val: vec![0.0; n],
            grad: if order >= 1 { vec![[0.0; 3]; n] } else { Vec::new() },
            hess: if order >= 2 { vec![ZERO3; n] } else { Vec::new() },
        };
        for (i, c) in self.coeffs.iter().enumerate() {
            for (m, &cm) in c.iter().enumerate() {
                if cm == 0.0 {
                    continue;
                }
                out.val[i] += cm * mj.val[m];
                if order >= 1 {
                    for k in 0..3 {
                        out.grad[i][k] += cm * mj.grad[m][k];
                    }
                }
                if order >= 2 {
                    for k in 0..3 {
                        for l in 0..3 {
                            out.hess[i][k][l] += cm * mj.hess[m][k][l];
                        }
                    }
                }
            }
        }
        out
    }
}

fn node_point(alpha: &[u32; 4], degree: usize) -> Vec3 {
    let q = degree as f64;
    [alpha[1] as f64 / q, alpha[2] as f64 / q, alpha[3] as f64 / q]
}

#[derive(Clone, Debug, Default)]
pub struct BasisJets {
    pub val: Vec<f64>,
    pub grad: Vec<Vec3>,
    pub hess: Vec<Mat3>,
}

/// Maps reference gradients and Hessians to physical ones for an affine cell
/// with inverse Jacobian `jinv` (`ξ = J⁻¹(x − x₀)`).
pub fn push_forward(jets: &BasisJets, jinv: &Mat3, dim: usize) -> BasisJets {
    let mut out = BasisJets { val: jets.val.clone(), grad: Vec::new(), hess: Vec::new() };
    // ∂_x = J^{-T} ∂_ξ
    out.grad = jets
        .grad
        .iter()
        .map(|g| {
            let mut p = [0.0; 3];
            for (k, pk) in p.iter_mut().enumerate().take(dim) {
                *pk = (0..dim).map(|m| jinv[m][k] * g[m]).sum();
            }
            p
        })
        .collect();
    out.hess = jets
        .hess
        .iter()
        .map(|h| {
            let mut p = ZERO3;
            for k in 0..dim {
                for l in 0..dim {
                    let mut s = 0.0;
                    for m in 0..dim {
                        for n in 0..dim {
                            s += jinv[m][k] * h[m][n] * jinv[n][l];
                        }
                    }
                    p[k][l] = s;
                }
            }
            p
        })
        .collect();
    out
}
