//! Tiny fixed-capacity dense helpers for dimension 2 and 3.
//!
//! Matrices are stored as `[[f64; 3]; 3]`; only the leading `dim × dim`
//! block is meaningful and the rest is kept at zero.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const ZERO3: Mat3 = [[0.0; 3]; 3];

pub fn identity(dim: usize) -> Mat3 {
    let mut m = ZERO3;
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    m
}

pub fn det(m: &Mat3, dim: usize) -> f64 {
    match dim {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("dimension {dim}"),
    }
}

/// Inverse of the leading `dim × dim` block, or `None` when singular.
pub fn inverse(m: &Mat3, dim: usize) -> Option<Mat3> {
    let d = det(m, dim);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = ZERO3;
    match dim {
        1 => inv[0][0] = 1.0 / d,
        2 => {
            inv[0][0] = m[1][1] / d;
            inv[0][1] = -m[0][1] / d;
            inv[1][0] = -m[1][0] / d;
            inv[1][1] = m[0][0] / d;
        }
        3 => {
            inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
            inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
            inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
            inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
            inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
            inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
            inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
            inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
            inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
        }
        _ => unreachable!("dimension {dim}"),
    }
    Some(inv)
}

pub fn matmul(a: &Mat3, b: &Mat3, dim: usize) -> Mat3 {
    let mut c = ZERO3;
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn matvec(a: &Mat3, x: &Vec3, dim: usize) -> Vec3 {
    let mut y = [0.0; 3];
    for i in 0..dim {
        for k in 0..dim {
            y[i] += a[i][k] * x[k];
        }
    }
    y
}

/// `aᵀ M b`.
pub fn bilinear(m: &Mat3, a: &Vec3, b: &Vec3, dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += a[i] * m[i][j] * b[j];
        }
    }
    s
}

pub fn dot(a: &Vec3, b: &Vec3, dim: usize) -> f64 {
    (0..dim).map(|i| a[i] * b[i]).sum()
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm(a: &Vec3, dim: usize) -> f64 {
    dot(a, a, dim).sqrt()
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `Tᵀ M T` where the columns of `t` (first `k` of them) are vectors in ℝ^dim.
pub fn congruence(m: &Mat3, t: &[Vec3], dim: usize) -> Mat3 {
    let k = t.len();
    let mut out = ZERO3;
    for a in 0..k {
        for b in a..k {
            let v = bilinear(m, &t[a], &t[b], dim);
            out[a][b] = v;
            out[b][a] = v;
        }
    }
    out
}

/// Frobenius-type contraction `Σ a_ij b_ij` over the leading block.
pub fn contract(a: &Mat3, b: &Mat3, dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

/// Cholesky test for positive definiteness of the leading block.
pub fn is_spd(m: &Mat3, dim: usize) -> bool {
    match dim {
        1 => m[0][0] > 0.0,
        2 => m[0][0] > 0.0 && det(m, 2) > 0.0,
        3 => {
            let d2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            m[0][0] > 0.0 && d2 > 0.0 && det(m, 3) > 0.0
        }
        _ => false,
    }
}

/// Smallest eigenvalue of a symmetric 2×2 or 3×3 block.
pub fn min_eigenvalue(m: &Mat3, dim: usize) -> f64 {
    let mat = nalgebra::DMatrix::from_fn(dim, dim, |i, j| m[i][j]);
    mat.symmetric_eigenvalues().min()
}
