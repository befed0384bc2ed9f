//! Pointwise Riemannian geometry of metric jets: Christoffel symbols,
//! curvature, metric normals, second fundamental forms and dihedral angles.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3, ZERO3};
use crate::mesh::SimplicialMesh;
use crate::metric::{MetricJet, MetricSource};
use crate::regge::subsimplex_point;

/// `Γ[l][i][j] = Γˡᵢⱼ`.
pub type Christoffel = [[[f64; 3]; 3]; 3];

/// Tolerance on `|cos θ| − 1` before an angle is considered inconsistent.
pub const ARCCOS_TOLERANCE: f64 = 1e-10;

pub fn inverse_metric(g: &Mat3, dim: usize) -> Result<Mat3> {
    if !linalg::is_spd(g, dim) {
        return Err(Error::NotPositiveDefinite { context: format!("metric {:?}", &g[..dim]) });
    }
    linalg::inverse(g, dim).ok_or_else(|| Error::NotPositiveDefinite { context: "singular metric".into() })
}

/// Christoffel symbols of the first kind, `Γ_{m,ij} = ½(∂ᵢg_jm + ∂ⱼg_im − ∂ₘg_ij)`.
pub fn christoffel_first_kind(jet: &MetricJet) -> Christoffel {
    let dim = jet.dim;
    let mut c = [[[0.0; 3]; 3]; 3];
    for m in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                c[m][i][j] = 0.5 * (jet.dg[i][j][m] + jet.dg[j][i][m] - jet.dg[m][i][j]);
            }
        }
    }
    c
}

/// Christoffel symbols of the second kind, `Γˡᵢⱼ = gˡᵐ Γ_{m,ij}`.
pub fn christoffel(jet: &MetricJet) -> Result<Christoffel> {
    let dim = jet.dim;
    let ginv = inverse_metric(&jet.g, dim)?;
    Ok(raise(&ginv, &christoffel_first_kind(jet), dim))
}

fn raise(ginv: &Mat3, first: &Christoffel, dim: usize) -> Christoffel {
    let mut c = [[[0.0; 3]; 3]; 3];
    for l in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                c[l][i][j] = (0..dim).map(|m| ginv[l][m] * first[m][i][j]).sum();
            }
        }
    }
    c
}

/// Ricci tensor `Ric_ij = ∂ₗΓˡᵢⱼ − ∂ⱼΓˡᵢₗ + ΓˡₗₘΓᵐᵢⱼ − ΓˡⱼₘΓᵐᵢₗ`.
pub fn ricci(jet: &MetricJet) -> Result<Mat3> {
    let dim = jet.dim;
    let ginv = inverse_metric(&jet.g, dim)?;
    let first = christoffel_first_kind(jet);
    let gamma = raise(&ginv, &first, dim);
    // ∂ₖΓˡᵢⱼ = ∂ₖgˡᵐ Γ_{m,ij} + gˡᵐ ∂ₖΓ_{m,ij}, with ∂ₖg⁻¹ = −g⁻¹ ∂ₖg g⁻¹
    let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3];
    for k in 0..dim {
        let dginv = {
            let t = linalg::matmul(&ginv, &jet.dg[k], dim);
            let mut m = linalg::matmul(&t, &ginv, dim);
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
            m
        };
        for l in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    let mut s = 0.0;
                    for m in 0..dim {
                        let dfirst = 0.5 * (jet.d2g[k][i][j][m] + jet.d2g[k][j][i][m] - jet.d2g[k][m][i][j]);
                        s += dginv[l][m] * first[m][i][j] + ginv[l][m] * dfirst;
                    }
                    dgamma[k][l][i][j] = s;
                }
            }
        }
    }
    let mut ric = ZERO3;
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for l in 0..dim {
                s += dgamma[l][l][i][j] - dgamma[j][l][i][l];
                for m in 0..dim {
                    s += gamma[l][l][m] * gamma[m][i][j] - gamma[l][j][m] * gamma[m][i][l];
                }
            }
            ric[i][j] = s;
        }
    }
    Ok(ric)
}

pub fn scalar_curvature(jet: &MetricJet) -> Result<f64> {
    let ginv = inverse_metric(&jet.g, jet.dim)?;
    Ok(linalg::contract(&ginv, &ricci(jet)?, jet.dim))
}

/// `G = Ric − ½ R g`.
pub fn einstein_tensor(jet: &MetricJet) -> Result<Mat3> {
    let dim = jet.dim;
    let ric = ricci(jet)?;
    let ginv = inverse_metric(&jet.g, dim)?;
    let r = linalg::contract(&ginv, &ric, dim);
    let mut g = ric;
    for i in 0..dim {
        for j in 0..dim {
            g[i][j] -= 0.5 * r * jet.g[i][j];
        }
    }
    Ok(g)
}

/// `g`-unit normal `g⁻¹ν / √(νᵀ g⁻¹ ν)` for the covector `ν` (a Euclidean
/// normal). It is `g`-orthogonal to every vector annihilated by `ν`.
pub fn metric_normal(g: &Mat3, nu: &Vec3, dim: usize) -> Result<Vec3> {
    let ginv = inverse_metric(g, dim)?;
    Ok(metric_normal_with_inverse(&ginv, nu, dim))
}

pub(crate) fn metric_normal_with_inverse(ginv: &Mat3, nu: &Vec3, dim: usize) -> Vec3 {
    let v = linalg::matvec(ginv, nu, dim);
    let s = linalg::dot(nu, &v, dim).sqrt();
    [v[0] / s, v[1] / s, v[2] / s]
}

/// Face data seen from one side: outward Euclidean unit normal, face
/// tangents and the outward `g`-unit normal.
#[derive(Clone, Debug)]
pub struct FaceFrame {
    pub normal: Vec3,
    pub tangents: Vec<Vec3>,
    pub metric_normal: Vec3,
}

impl FaceFrame {
    pub fn new(g: &Mat3, normal: Vec3, tangents: Vec<Vec3>, dim: usize) -> Result<Self> {
        let metric_normal = metric_normal(g, &normal, dim)?;
        Ok(FaceFrame { normal, tangents, metric_normal })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SecondFundamentalForm {
    /// `II_mn` in the tangent frame (leading `(N−1)×(N−1)` block).
    pub ii: Mat3,
    /// Mean curvature `H = tr_{g|F} II`.
    pub mean: f64,
    /// `IĪ = II − H g|_F`.
    pub iibar: Mat3,
    /// Induced metric `g|_F` in the tangent frame.
    pub face_metric: Mat3,
}

/// `II(τ_m, τ_n) = g(∇_{τ_m} n_g, τ_n) = −n_g^p Γ_{p,ab} τ_m^a τ_n^b`.
/// Positive mean curvature for a sphere with outward normal.
pub fn second_fundamental_form(jet: &MetricJet, frame: &FaceFrame) -> Result<SecondFundamentalForm> {
    let dim = jet.dim;
    inverse_metric(&jet.g, dim)?;
    let first = christoffel_first_kind(jet);
    let k = frame.tangents.len();
    let n = &frame.metric_normal;
    let mut ii = ZERO3;
    for m in 0..k {
        for q in m..k {
            let (tm, tq) = (&frame.tangents[m], &frame.tangents[q]);
            let mut s = 0.0;
            for p in 0..dim {
                for a in 0..dim {
                    for b in 0..dim {
                        s += n[p] * first[p][a][b] * tm[a] * tq[b];
                    }
                }
            }
            ii[m][q] = -s;
            ii[q][m] = -s;
        }
    }
    let face_metric = linalg::congruence(&jet.g, &frame.tangents, dim);
    let gfinv = linalg::inverse(&face_metric, k)
        .ok_or_else(|| Error::NotPositiveDefinite { context: "degenerate face metric".into() })?;
    let mean = linalg::contract(&gfinv, &ii, k);
    let mut iibar = ii;
    for m in 0..k {
        for q in 0..k {
            iibar[m][q] -= mean * face_metric[m][q];
        }
    }
    Ok(SecondFundamentalForm { ii, mean, iibar, face_metric })
}

/// Dihedral angle `θ = arccos(−g(n_a, n_b))` between two faces of one cell,
/// both frames outward.
pub fn dihedral_angle(g: &Mat3, a: &FaceFrame, b: &FaceFrame, dim: usize) -> Result<f64> {
    checked_acos(-linalg::bilinear(g, &a.metric_normal, &b.metric_normal, dim), "dihedral angle")
}

/// Dihedral angle from the two outward Euclidean covectors (any length).
pub fn dihedral_from_covectors(ginv: &Mat3, nu_a: &Vec3, nu_b: &Vec3, dim: usize) -> Result<f64> {
    let ab = linalg::bilinear(ginv, nu_a, nu_b, dim);
    let aa = linalg::bilinear(ginv, nu_a, nu_a, dim);
    let bb = linalg::bilinear(ginv, nu_b, nu_b, dim);
    checked_acos(-ab / (aa * bb).sqrt(), "dihedral angle")
}

fn checked_acos(c: f64, context: &str) -> Result<f64> {
    if !c.is_finite() || c.abs() > 1.0 + ARCCOS_TOLERANCE {
        return Err(Error::AngleOutOfRange { cos: c, context: context.into() });
    }
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Sorted-local indices of the two faces of the cell that contain the ridge,
/// i.e. the local vertices not on the ridge.
pub(crate) fn ridge_face_locals(sorted: &[usize], ridge: &[usize]) -> [usize; 2] {
    let mut out = [0; 2];
    let mut n = 0;
    for (l, v) in sorted.iter().enumerate() {
        if !ridge.contains(v) {
            out[n] = l;
            n += 1;
        }
    }
    debug_assert_eq!(n, 2);
    out
}

/// Sorted-local indices of the ridge vertices inside a cell.
pub(crate) fn ridge_locals(sorted: &[usize], ridge: &[usize]) -> Vec<usize> {
    ridge.iter().map(|v| sorted.iter().position(|s| s == v).expect("ridge vertex in cell")).collect()
}

/// Angle defect `Θ_S = 2π − Σ_T θ_ST` at the ridge parameter `eta`, each
/// angle measured with the metric trace of its own cell.
pub fn angle_defect(mesh: &SimplicialMesh, source: &dyn MetricSource, ridge: usize, eta: &Vec3) -> Result<f64> {
    let r = &mesh.ridges()[ridge];
    if !r.interior {
        return Err(Error::InvalidArgument(format!("ridge {ridge} lies on the boundary")));
    }
    let dim = mesh.dim();
    let mut total = 0.0;
    for entry in &r.ring {
        let geom = mesh.geometry(entry.cell);
        let sorted = &geom.sorted[..=dim];
        let xi = subsimplex_point(&ridge_locals(sorted, &r.vertices), eta);
        let [a, b] = ridge_face_locals(sorted, &r.vertices);
        let g = source.jet(entry.cell, &geom, &xi, 0).g;
        let ginv = inverse_metric(&g, dim)?;
        let na = geom.barycentric_gradient(a);
        let nb = geom.barycentric_gradient(b);
        total += dihedral_from_covectors(&ginv, &na, &nb, dim).map_err(|e| match e {
            Error::AngleOutOfRange { cos, .. } => {
                Error::AngleOutOfRange { cos, context: format!("cell {} at ridge {ridge}", entry.cell) }
            }
            other => other,
        })?;
    }
    Ok(2.0 * PI - total)
}

/// Second-order forward-mode jet: value, gradient and Hessian.
#[derive(Clone, Copy, Debug, Default)]
struct Dual2 {
    v: f64,
    d: Vec3,
    h: Mat3,
}

impl Dual2 {
    fn constant(v: f64) -> Self {
        Dual2 { v, ..Default::default() }
    }

    fn add(self, o: Dual2) -> Dual2 {
        let mut r = self;
        r.v += o.v;
        for k in 0..3 {
            r.d[k] += o.d[k];
            for l in 0..3 {
                r.h[k][l] += o.h[k][l];
            }
        }
        r
    }

    fn scale(self, s: f64) -> Dual2 {
        let mut r = self;
        r.v *= s;
        for k in 0..3 {
            r.d[k] *= s;
            for l in 0..3 {
                r.h[k][l] *= s;
            }
        }
        r
    }

    fn mul(self, o: Dual2) -> Dual2 {
        let mut r = Dual2 { v: self.v * o.v, ..Default::default() };
        for k in 0..3 {
            r.d[k] = self.d[k] * o.v + self.v * o.d[k];
            for l in 0..3 {
                r.h[k][l] = self.h[k][l] * o.v + self.d[k] * o.d[l] + self.d[l] * o.d[k] + self.v * o.h[k][l];
            }
        }
        r
    }

    /// Composition with a scalar function given by `f, f', f''` at `self.v`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Dual2 {
        let mut r = Dual2 { v: f, ..Default::default() };
        for k in 0..3 {
            r.d[k] = df * self.d[k];
            for l in 0..3 {
                r.h[k][l] = df * self.h[k][l] + d2f * self.d[k] * self.d[l];
            }
        }
        r
    }

    fn recip(self) -> Dual2 {
        let v = self.v;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    fn sqrt(self) -> Dual2 {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    /// `∂_k` of the jet; the Hessian of the result is not available.
    fn partial(self, k: usize) -> Dual2 {
        Dual2 { v: self.d[k], d: self.h[k], h: ZERO3 }
    }
}

fn dual_tensor(jet: &MetricJet) -> [[Dual2; 3]; 3] {
    let mut t = [[Dual2::default(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j].v = jet.g[i][j];
            for k in 0..3 {
                t[i][j].d[k] = jet.dg[k][i][j];
                for l in 0..3 {
                    t[i][j].h[k][l] = jet.d2g[k][l][i][j];
                }
            }
        }
    }
    t
}

fn dual_det_inv(g: &[[Dual2; 3]; 3], dim: usize) -> (Dual2, [[Dual2; 3]; 3]) {
    let mut inv = [[Dual2::default(); 3]; 3];
    match dim {
        2 => {
            let det = g[0][0].mul(g[1][1]).add(g[0][1].mul(g[1][0]).scale(-1.0));
            let r = det.recip();
            inv[0][0] = g[1][1].mul(r);
            inv[1][1] = g[0][0].mul(r);
            inv[0][1] = g[0][1].mul(r).scale(-1.0);
            inv[1][0] = g[1][0].mul(r).scale(-1.0);
            (det, inv)
        }
        3 => {
            let cof = |i: usize, j: usize| -> Dual2 {
                let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                g[i1][j1].mul(g[i2][j2]).add(g[i1][j2].mul(g[i2][j1]).scale(-1.0))
            };
            let det = (0..3).fold(Dual2::default(), |acc, j| acc.add(g[0][j].mul(cof(0, j))));
            let r = det.recip();
            for i in 0..3 {
                for j in 0..3 {
                    inv[i][j] = cof(j, i).mul(r);
                }
            }
            (det, inv)
        }
        _ => unreachable!("dimension {dim}"),
    }
}

/// `div div 𝕊σ` with `𝕊σ = σ − g tr_g σ`, computed by forward-mode
/// differentiation of `(1/√g) ∂ᵢ[√g (∂ⱼ(√g Tⁱʲ)/√g + Γⁱⱼₖ Tʲᵏ)]` where `T` is
/// `𝕊σ` with both indices raised.
pub fn div_div_s(g: &MetricJet, sigma: &MetricJet) -> Result<f64> {
    let dim = g.dim;
    inverse_metric(&g.g, dim)?;
    let gd = dual_tensor(g);
    let sd = dual_tensor(sigma);
    let (det, ginv) = dual_det_inv(&gd, dim);
    let vol = det.sqrt();
    let mut tr = Dual2::default();
    for i in 0..dim {
        for j in 0..dim {
            tr = tr.add(ginv[i][j].mul(sd[i][j]));
        }
    }
    let mut s = [[Dual2::default(); 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            s[i][j] = sd[i][j].add(gd[i][j].mul(tr).scale(-1.0));
        }
    }
    let mut t = [[Dual2::default(); 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Dual2::default();
            for a in 0..dim {
                for b in 0..dim {
                    acc = acc.add(ginv[i][a].mul(s[a][b]).mul(ginv[j][b]));
                }
            }
            t[i][j] = acc;
        }
    }
    // first-order quantities: Γ from ∂g with its first derivatives
    let mut gamma_first = [[[Dual2::default(); 3]; 3]; 3];
    for m in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                gamma_first[m][i][j] =
                    gd[j][m].partial(i).add(gd[i][m].partial(j)).add(gd[i][j].partial(m).scale(-1.0)).scale(0.5);
            }
        }
    }
    let inv_vol = vol.recip();
    let mut div_vol_v = 0.0;
    for i in 0..dim {
        // V^i = (1/√g) ∂ⱼ(√g Tⁱʲ) + Γⁱⱼₖ Tʲᵏ, first-order accurate jet
        let mut vi = Dual2::default();
        for j in 0..dim {
            vi = vi.add(vol.mul(t[i][j]).partial(j).mul(inv_vol));
            for k in 0..dim {
                let mut gamma = Dual2::default();
                for m in 0..dim {
                    gamma = gamma.add(ginv[i][m].mul(gamma_first[m][j][k]));
                }
                vi = vi.add(gamma.mul(t[j][k]));
            }
        }
        div_vol_v += vol.mul(vi).d[i];
    }
    Ok(div_vol_v / vol.v)
}

/// `⟨A, B⟩_g = g^{ia} g^{jb} A_ij B_ab`.
pub fn tensor_inner(ginv: &Mat3, a: &Mat3, b: &Mat3, dim: usize) -> f64 {
    let ga = linalg::matmul(&linalg::matmul(ginv, a, dim), ginv, dim);
    linalg::contract(&ga, b, dim)
}

/// `(div div 𝕊σ − ⟨G, σ⟩) √det g · v`, the density of the first variation
/// of `R ω` in direction `σ`, tested against `v`.
pub fn smooth_rdot_density(g: &MetricJet, sigma: &MetricJet, v: f64) -> Result<f64> {
    let dim = g.dim;
    let ginv = inverse_metric(&g.g, dim)?;
    let ein = einstein_tensor(g)?;
    let dd = div_div_s(g, sigma)?;
    let vol = linalg::det(&g.g, dim).sqrt();
    Ok((dd - tensor_inner(&ginv, &ein, &sigma.g, dim)) * vol * v)
}

/// `Dual2` constant kept for completeness of the arithmetic.
#[allow(dead_code)]
fn dual_one() -> Dual2 {
    Dual2::constant(1.0)
}
