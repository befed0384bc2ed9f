//! Gauss–Legendre rules on [0,1] and conical-product (Duffy) rules on the
//! reference simplices `{ξ_i ≥ 0, Σ ξ_i ≤ 1}`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::Vec3;

/// Largest supported point count of the 1D rule.
pub const MAX_GAUSS_POINTS: usize = 16;
/// Largest supported exactness degree of the simplex rules in any dimension.
pub const MAX_EXACTNESS: usize = 28;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    /// Reference coordinates (first `dim` entries used).
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// `n`-point Gauss–Legendre rule on [0,1], exact to degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_GAUSS_POINTS {
        return Err(Error::Quadrature(format!("Gauss–Legendre point count {n} outside 1..={MAX_GAUSS_POINTS}")));
    }
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points.push([(1.0 - x) / 2.0, 0.0, 0.0]);
        weights.push(w / 2.0);
    }
    Ok(QuadratureRule { dim: 1, points, weights })
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn points_for(degree: usize) -> usize {
    degree / 2 + 1
}

/// Rule on the reference `dim`-simplex exact for polynomials of total degree
/// `≤ exactness`. Dimension 0 yields the unit point rule.
pub fn simplex_quadrature(dim: usize, exactness: usize) -> Result<QuadratureRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::Quadrature(format!("exactness {exactness} exceeds {MAX_EXACTNESS}")));
    }
    match dim {
        0 => Ok(QuadratureRule { dim: 0, points: vec![[0.0; 3]], weights: vec![1.0] }),
        1 => gauss_legendre(points_for(exactness)),
        2 => {
            if exactness <= 1 {
                return Ok(QuadratureRule { dim: 2, points: vec![[1.0 / 3.0, 1.0 / 3.0, 0.0]], weights: vec![0.5] });
            }
            let gu = gauss_legendre(points_for(exactness + 1))?;
            let gv = gauss_legendre(points_for(exactness))?;
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (pu, wu) in gu.points.iter().zip(&gu.weights) {
                let u = pu[0];
                for (pv, wv) in gv.points.iter().zip(&gv.weights) {
                    let v = pv[0];
                    points.push([u, v * (1.0 - u), 0.0]);
                    weights.push(wu * wv * (1.0 - u));
                }
            }
            Ok(QuadratureRule { dim: 2, points, weights })
        }
        3 => {
            if exactness <= 1 {
                return Ok(QuadratureRule { dim: 3, points: vec![[0.25; 3]], weights: vec![1.0 / 6.0] });
            }
            let gu = gauss_legendre(points_for(exactness + 2))?;
            let gv = gauss_legendre(points_for(exactness + 1))?;
            let gw = gauss_legendre(points_for(exactness))?;
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (pu, wu) in gu.points.iter().zip(&gu.weights) {
                let u = pu[0];
                for (pv, wv) in gv.points.iter().zip(&gv.weights) {
                    let v = pv[0];
                    for (pw, ww) in gw.points.iter().zip(&gw.weights) {
                        let w = pw[0];
                        points.push([u, v * (1.0 - u), w * (1.0 - u) * (1.0 - v)]);
                        weights.push(wu * wv * ww * (1.0 - u) * (1.0 - u) * (1.0 - v));
                    }
                }
            }
            Ok(QuadratureRule { dim: 3, points, weights })
        }
        _ => Err(Error::InvalidDimension(dim)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// `∫ ξ^α` over the reference simplex: `α! / (|α| + dim)!`.
    fn monomial_integral(alpha: &[u32]) -> f64 {
        let s: u32 = alpha.iter().sum();
        alpha.iter().map(|&a| factorial(a)).product::<f64>() / factorial(s + alpha.len() as u32)
    }

    #[test]
    fn gauss_examples() {
        let g1 = gauss_legendre(1).unwrap();
        assert_eq!(g1.points[0][0], 0.5);
        assert_eq!(g1.weights[0], 1.0);
        let g2 = gauss_legendre(2).unwrap();
        let mut p: Vec<f64> = g2.points.iter().map(|p| p[0]).collect();
        p.sort_by(f64::total_cmp);
        let s = 1.0 / 3f64.sqrt();
        assert!((p[0] - (1.0 - s) / 2.0).abs() < 1e-15);
        assert!((p[1] - (1.0 + s) / 2.0).abs() < 1e-15);
        let g4 = gauss_legendre(4).unwrap();
        assert!((g4.integrate(|x| x[0].powi(7)) - 0.125).abs() < 1e-15);
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(17).is_err());
    }

    #[test]
    fn gauss_exactness_all_counts() {
        for n in 1..=MAX_GAUSS_POINTS {
            let g = gauss_legendre(n).unwrap();
            for d in 0..2 * n {
                let exact = 1.0 / (d + 1) as f64;
                let got = g.integrate(|x| x[0].powi(d as i32));
                assert!((got - exact).abs() <= 1e-13 * exact, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn simplex_examples() {
        let r = simplex_quadrature(2, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.weights[0], 0.5);
        for e in [0, 3, 9] {
            let r = simplex_quadrature(3, e).unwrap();
            assert!((r.weights.iter().sum::<f64>() - 1.0 / 6.0).abs() < 1e-15);
        }
        let r = simplex_quadrature(2, 8).unwrap();
        let got = r.integrate(|x| x[0].powi(3) * x[1].powi(5));
        assert!((got - 1.0 / 5040.0).abs() < 1e-13 / 5040.0);
        assert!(simplex_quadrature(4, 2).is_err());
        assert!(simplex_quadrature(2, MAX_EXACTNESS + 1).is_err());
    }

    #[test]
    fn monomial_exactness_exhaustive() {
        for dim in 1..=3usize {
            for e in [0, 1, 2, 5, 8, 14] {
                let rule = simplex_quadrature(dim, e).unwrap();
                for a in 0..=e as u32 {
                    for b in 0..=(e as u32 - a) {
                        for c in 0..=(e as u32 - a - b) {
                            let alpha = [a, b, c];
                            if alpha[dim..].iter().any(|&x| x > 0) {
                                continue;
                            }
                            let exact = monomial_integral(&alpha[..dim]);
                            let got = rule.integrate(|x| {
                                (0..dim).map(|d| x[d].powi(alpha[d] as i32)).product::<f64>()
                            });
                            assert!((got - exact).abs() <= 1e-12 * exact, "dim={dim} e={e} {alpha:?}");
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn points_inside_and_weights_positive(dim in 1usize..=3, e in 0usize..=MAX_EXACTNESS) {
            let rule = simplex_quadrature(dim, e).unwrap();
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                prop_assert!(*w > 0.0 && w.is_finite());
                prop_assert!(p[..dim].iter().all(|&x| x >= 0.0));
                prop_assert!(p[..dim].iter().sum::<f64>() <= 1.0 + 1e-15);
            }
        }
    }
}
