//! Continuous Lagrange spaces of degree `q` on a mesh, used as test spaces
//! for curvature functionals and as displacement space of the HHJ solve.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::Result;
use crate::linalg::Vec3;
use crate::mesh::SimplicialMesh;
use crate::polynomial::{push_forward, BasisJets, LagrangeBasis};

/// Sentinel in [`LagrangeSpace::interior_index`] for boundary DOFs.
pub const BOUNDARY: usize = usize::MAX;

#[derive(Debug)]
pub struct LagrangeSpace {
    pub mesh: Arc<SimplicialMesh>,
    pub basis: LagrangeBasis,
    ndof: usize,
    cell_dofs: Vec<usize>,
    boundary: Vec<bool>,
    interior_index: Vec<usize>,
    interior_dofs: Vec<usize>,
}

impl LagrangeSpace {
    /// Nodes are identified globally by the multiset of global vertex ids
    /// weighted by their barycentric multi-index, so they are shared by all
    /// cells containing the node's support sub-simplex. A node is a boundary
    /// node when its support lies in a boundary face.
    pub fn new(mesh: Arc<SimplicialMesh>, q: usize) -> Result<Arc<Self>> {
        let dim = mesh.dim();
        let basis = LagrangeBasis::new(dim, q)?;
        let nloc = basis.len();
        let mut index: HashMap<Vec<(usize, u32)>, usize> = HashMap::new();
        let mut cell_dofs = vec![0usize; mesh.num_cells() * nloc];
        let mut boundary = Vec::new();
        for c in 0..mesh.num_cells() {
            let sorted = mesh.cell_sorted(c);
            let faces = mesh.cell_faces(c);
            for (i, alpha) in basis.nodes.iter().enumerate() {
                let key: Vec<(usize, u32)> =
                    (0..=dim).filter(|&l| alpha[l] > 0).map(|l| (sorted[l], alpha[l])).collect();
                let id = *index.entry(key).or_insert_with(|| {
                    boundary.push(false);
                    boundary.len() - 1
                });
                // support inside local face l iff α_l = 0
                if (0..=dim).any(|l| alpha[l] == 0 && !mesh.faces()[faces[l]].interior) {
                    boundary[id] = true;
                }
                cell_dofs[c * nloc + i] = id;
            }
        }
        let ndof = boundary.len();
        let mut interior_index = vec![BOUNDARY; ndof];
        let mut interior_dofs = Vec::new();
        for (i, &b) in boundary.iter().enumerate() {
            if !b {
                interior_index[i] = interior_dofs.len();
                interior_dofs.push(i);
            }
        }
        Ok(Arc::new(LagrangeSpace { mesh, basis, ndof, cell_dofs, boundary, interior_index, interior_dofs }))
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    pub fn n_interior(&self) -> usize {
        self.interior_dofs.len()
    }

    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        let n = self.basis.len();
        &self.cell_dofs[c * n..(c + 1) * n]
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.boundary[dof]
    }

    /// Position of `dof` among interior DOFs, or [`BOUNDARY`].
    pub fn interior_index(&self, dof: usize) -> usize {
        self.interior_index[dof]
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior_dofs
    }

    /// Restriction of a full DOF vector to interior DOFs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior_dofs.iter().map(|&d| full[d]).collect()
    }

    /// Extension by zero of an interior vector.
    pub fn extend(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.ndof];
        for (k, &d) in self.interior_dofs.iter().enumerate() {
            full[d] = interior[k];
        }
        full
    }

    /// Physical jets of all local basis functions of cell `c` at `xi`.
    pub fn cell_jets(&self, c: usize, xi: &Vec3, order: usize) -> BasisJets {
        let geom = self.mesh.geometry(c);
        push_forward(&self.basis.tabulate(xi, order), &geom.jac_inv, geom.dim)
    }

    /// Value, gradient and Hessian at reference point `xi` of cell `c` of the
    /// function with full coefficient vector `coeffs`.
    pub fn evaluate(&self, coeffs: &[f64], c: usize, xi: &Vec3) -> (f64, Vec3, [[f64; 3]; 3]) {
        let jets = self.cell_jets(c, xi, 2);
        let mut v = 0.0;
        let mut dv = [0.0; 3];
        let mut hv = [[0.0; 3]; 3];
        for (i, &d) in self.cell_dofs(c).iter().enumerate() {
            let a = coeffs[d];
            v += a * jets.val[i];
            for k in 0..3 {
                dv[k] += a * jets.grad[i][k];
                for l in 0..3 {
                    hv[k][l] += a * jets.hess[i][k][l];
                }
            }
        }
        (v, dv, hv)
    }

    /// Nodal interpolant of `f` (full coefficient vector).
    pub fn interpolate(&self, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.ndof];
        for c in 0..self.mesh.num_cells() {
            let geom = self.mesh.geometry(c);
            for (i, &d) in self.cell_dofs(c).iter().enumerate() {
                out[d] = f(&geom.map(&self.basis.node(i)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_counts() {
        let m = Arc::new(SimplicialMesh::build_structured(2, 1).unwrap());
        let v1 = LagrangeSpace::new(m.clone(), 1).unwrap();
        assert_eq!(v1.ndof(), 9);
        assert_eq!(v1.n_interior(), 1);
        let v2 = LagrangeSpace::new(m.clone(), 2).unwrap();
        assert_eq!(v2.ndof(), 9 + 16);
        // interior: 1 vertex + 8 interior edges
        assert_eq!(v2.n_interior(), 1 + 8);
        let m3 = Arc::new(SimplicialMesh::build_structured(3, 1).unwrap());
        let v = LagrangeSpace::new(m3.clone(), 3).unwrap();
        let n = 3 * 2 + 1;
        assert_eq!(v.ndof(), n * n * n);
        assert_eq!(v.n_interior(), 5 * 5 * 5);
    }

    #[test]
    fn interpolation_continuous_and_exact() {
        let m = Arc::new(SimplicialMesh::build_structured(3, 1).unwrap().perturb_interior(1, 1).unwrap());
        let v = LagrangeSpace::new(m.clone(), 3).unwrap();
        let f = |x: &Vec3| x[0] * x[0] * x[1] - 2.0 * x[2] * x[2] * x[2] + x[1];
        let c = v.interpolate(f);
        for cell in [0, 11, 40] {
            let xi = [0.2, 0.1, 0.3];
            let x = m.geometry(cell).map(&xi);
            let (val, grad, hess) = v.evaluate(&c, cell, &xi);
            assert!((val - f(&x)).abs() < 1e-12);
            assert!((grad[0] - 2.0 * x[0] * x[1]).abs() < 1e-10);
            assert!((hess[2][2] + 12.0 * x[2]).abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_flags_follow_geometry() {
        let m = Arc::new(SimplicialMesh::build_structured(2, 2).unwrap());
        let v = LagrangeSpace::new(m.clone(), 3).unwrap();
        let x = v.interpolate(|x| x[0]);
        let y = v.interpolate(|x| x[1]);
        for d in 0..v.ndof() {
            let on = (x[d].abs() - 1.0).abs() < 1e-12 || (y[d].abs() - 1.0).abs() < 1e-12;
            assert_eq!(on, v.is_boundary(d));
        }
    }
}
