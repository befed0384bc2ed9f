//! Simplicial meshes of polyhedral domains in ℝ² and ℝ³.
//!
//! Besides the cells, the mesh carries its full codimension-1 ("face") and
//! codimension-2 ("ridge") skeleton. In 2D the ridges are the vertices, in 3D
//! they are the edges. Every sub-simplex is identified by its sorted global
//! vertex tuple.
//!
//! Internally each cell is also described in its *sorted* local frame, that is
//! with its vertices listed by increasing global id. Because sorting is a
//! global convention, any sub-simplex shared by two cells appears with the
//! same vertex order in both, which is what the finite element spaces rely on
//! to identify shared degrees of freedom. Local faces are numbered by the
//! sorted-local index of the opposite vertex.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3};

/// A cell incident to a face, with the sorted-local index of the vertex
/// opposite to the face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceIncidence {
    pub cell: usize,
    pub local: usize,
}

#[derive(Clone, Debug)]
pub struct Face {
    /// Sorted global vertex ids (N of them).
    pub vertices: Vec<usize>,
    pub interior: bool,
    /// One incidence for boundary faces, two for interior faces.
    pub cells: Vec<FaceIncidence>,
}

/// A cell of a ridge ring together with its two faces containing the ridge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RingEntry {
    pub cell: usize,
    pub faces: [usize; 2],
}

#[derive(Clone, Debug)]
pub struct Ridge {
    /// Sorted global vertex ids (N − 1 of them).
    pub vertices: Vec<usize>,
    pub interior: bool,
    /// Cells around the ridge, ordered by walking across shared faces. For an
    /// interior ridge the walk closes; for a boundary ridge it starts and ends
    /// at boundary faces.
    pub ring: Vec<RingEntry>,
}

/// Affine description of one cell in its sorted-local frame.
///
/// The reference point `ξ ∈ {ξ_i ≥ 0, Σ ξ_i ≤ 1}` maps to
/// `x = x₀ + J ξ`, where the columns of `J` are `x_i − x₀` for the sorted
/// vertices. `det` may be negative.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub dim: usize,
    pub sorted: [usize; 4],
    pub origin: Vec3,
    pub jac: Mat3,
    pub jac_inv: Mat3,
    pub det: f64,
}

impl CellGeometry {
    pub fn map(&self, xi: &Vec3) -> Vec3 {
        let mut x = self.origin;
        let jx = linalg::matvec(&self.jac, xi, self.dim);
        for d in 0..self.dim {
            x[d] += jx[d];
        }
        x
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / factorial(self.dim)
    }

    /// Gradient (as a covector in physical coordinates) of the barycentric
    /// coordinate of sorted-local vertex `i`.
    pub fn barycentric_gradient(&self, i: usize) -> Vec3 {
        // ∇λ = J^{-T} ∇̂λ
        let mut g = [0.0; 3];
        for (d, gd) in g.iter_mut().enumerate().take(self.dim) {
            *gd = if i == 0 {
                -(0..self.dim).map(|m| self.jac_inv[m][d]).sum::<f64>()
            } else {
                self.jac_inv[i - 1][d]
            };
        }
        g
    }

    /// Outward Euclidean unit normal of the local face opposite vertex `i`.
    pub fn outward_normal(&self, i: usize) -> Vec3 {
        let g = self.barycentric_gradient(i);
        let n = linalg::norm(&g, self.dim);
        [-g[0] / n, -g[1] / n, -g[2] / n]
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Vec3>,
    /// Positively oriented vertex tuples (first `dim + 1` entries used).
    cells: Vec<[usize; 4]>,
    sorted: Vec<[usize; 4]>,
    faces: Vec<Face>,
    ridges: Vec<Ridge>,
    edges: Vec<[usize; 2]>,
    cell_faces: Vec<[usize; 4]>,
    cell_edges: Vec<[usize; 6]>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
    nominal_h: f64,
}

/// Local edges of a cell in the sorted-local frame, lexicographic.
pub fn local_edges(dim: usize) -> &'static [[usize; 2]] {
    match dim {
        2 => &[[0, 1], [0, 2], [1, 2]],
        3 => &[[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]],
        _ => &[],
    }
}

impl SimplicialMesh {
    /// Builds a mesh from vertices and cells (any vertex order per cell).
    /// Cells are re-oriented to positive volume; degenerate cells and
    /// non-manifold faces are rejected.
    pub fn from_cells(dim: usize, vertices: Vec<Vec3>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidDimension(dim));
        }
        let mut oriented = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != dim + 1 {
                return Err(Error::InvalidArgument(format!(
                    "cell {c} has {} vertices, expected {}",
                    cell.len(),
                    dim + 1
                )));
            }
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("cell {c} references vertex {v}")));
            }
            let mut t = [usize::MAX; 4];
            t[..=dim].copy_from_slice(cell);
            let vol = signed_volume(dim, &vertices, &t);
            if vol == 0.0 || !vol.is_finite() {
                return Err(Error::DegenerateCell { cell: c, volume: vol });
            }
            if vol < 0.0 {
                t.swap(dim - 1, dim);
            }
            oriented.push(t);
        }
        let mut mesh = SimplicialMesh {
            dim,
            vertices,
            cells: oriented,
            sorted: Vec::new(),
            faces: Vec::new(),
            ridges: Vec::new(),
            edges: Vec::new(),
            cell_faces: Vec::new(),
            cell_edges: Vec::new(),
            boundary_vertex: Vec::new(),
            boundary_edge: Vec::new(),
            nominal_h: 0.0,
        };
        mesh.enumerate_skeleton()?;
        mesh.nominal_h = mesh.max_diameter();
        Ok(mesh)
    }

    /// Structured mesh of (−1,1)^N with 2·2^{2k} triangles or 6·2^{3k}
    /// tetrahedra. Squares are split along the (+,+) diagonal, cubes by the
    /// Kuhn (Freudenthal) split into six tetrahedra around the main diagonal.
    pub fn build_structured(dim: usize, level: u32) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidDimension(dim));
        }
        let n = 1usize << level;
        let coord = |i: usize| -1.0 + 2.0 * i as f64 / n as f64;
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        if dim == 2 {
            let id = |i: usize, j: usize| i + (n + 1) * j;
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push([coord(i), coord(j), 0.0]);
                }
            }
            for j in 0..n {
                for i in 0..n {
                    let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                    cells.push(vec![a, b, d]);
                    cells.push(vec![a, d, c]);
                }
            }
        } else {
            let id = |i: usize, j: usize, k: usize| i + (n + 1) * (j + (n + 1) * k);
            for k in 0..=n {
                for j in 0..=n {
                    for i in 0..=n {
                        vertices.push([coord(i), coord(j), coord(k)]);
                    }
                }
            }
            const PERMS: [[usize; 3]; 6] =
                [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        for perm in PERMS {
                            let mut p = [i, j, k];
                            let mut tet = vec![id(p[0], p[1], p[2])];
                            for axis in perm {
                                p[axis] += 1;
                                tet.push(id(p[0], p[1], p[2]));
                            }
                            cells.push(tet);
                        }
                    }
                }
            }
        }
        let mut mesh = Self::from_cells(dim, vertices, cells)?;
        mesh.nominal_h = (dim as f64).sqrt() * 2f64.powi(1 - level as i32);
        Ok(mesh)
    }

    /// Shifts every coordinate of every interior vertex by an independent
    /// uniform sample in `[−a, a)` with `a = h̃·2^{−(2N+1)/2}`, `h̃` the nominal
    /// mesh size. Samples come from ChaCha8 seeded with `seed` on stream
    /// `stream`, drawn vertex-major and coordinate-minor over interior
    /// vertices only; each sample is `(next_u64 >> 11)·2⁻⁵³` mapped affinely.
    pub fn perturb_interior(&self, seed: u64, stream: u64) -> Result<Self> {
        let dim = self.dim;
        let amplitude = self.nominal_h * 2f64.powf(-((2 * dim + 1) as f64) / 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut vertices = self.vertices.clone();
        for (v, x) in vertices.iter_mut().enumerate() {
            if self.boundary_vertex[v] {
                continue;
            }
            for xd in x.iter_mut().take(dim) {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                *xd += amplitude * (2.0 * u - 1.0);
            }
        }
        for (c, cell) in self.cells.iter().enumerate() {
            let vol = signed_volume(dim, &vertices, cell);
            if vol <= 0.0 || !vol.is_finite() {
                return Err(Error::DegenerateCell { cell: c, volume: vol });
            }
        }
        let mut mesh = self.clone();
        mesh.vertices = vertices;
        Ok(mesh)
    }

    /// Perturbation amplitude bound used by [`Self::perturb_interior`].
    pub fn perturbation_amplitude(&self) -> f64 {
        self.nominal_h * 2f64.powf(-((2 * self.dim + 1) as f64) / 2.0)
    }

    fn enumerate_skeleton(&mut self) -> Result<()> {
        let dim = self.dim;
        let nc = self.cells.len();
        self.sorted = self
            .cells
            .iter()
            .map(|c| {
                let mut s = *c;
                s[..=dim].sort_unstable();
                s
            })
            .collect();

        // faces
        let mut face_index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        let mut cell_faces = vec![[usize::MAX; 4]; nc];
        for c in 0..nc {
            let s = self.sorted[c];
            for local in 0..=dim {
                let key: Vec<usize> = (0..=dim).filter(|&m| m != local).map(|m| s[m]).collect();
                let id = *face_index.entry(key.clone()).or_insert_with(|| {
                    faces.push(Face { vertices: key, interior: false, cells: Vec::new() });
                    faces.len() - 1
                });
                faces[id].cells.push(FaceIncidence { cell: c, local });
                cell_faces[c][local] = id;
            }
        }
        for f in faces.iter_mut() {
            match f.cells.len() {
                1 => f.interior = false,
                2 => f.interior = true,
                count => return Err(Error::NonManifold { face: f.vertices.clone(), count }),
            }
        }

        // boundary vertices and edges
        let mut boundary_vertex = vec![false; self.vertices.len()];
        for f in faces.iter().filter(|f| !f.interior) {
            for &v in &f.vertices {
                boundary_vertex[v] = true;
            }
        }
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut cell_edges = vec![[usize::MAX; 6]; nc];
        for c in 0..nc {
            let s = self.sorted[c];
            for (le, &[a, b]) in local_edges(dim).iter().enumerate() {
                let key = [s[a], s[b]];
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
                cell_edges[c][le] = id;
            }
        }
        let mut boundary_edge = vec![false; edges.len()];
        for f in faces.iter().filter(|f| !f.interior) {
            for a in 0..f.vertices.len() {
                for b in a + 1..f.vertices.len() {
                    boundary_edge[edge_index[&[f.vertices[a], f.vertices[b]]]] = true;
                }
            }
        }
        // In 2D the edges are the faces: renumber faces in edge order.
        if dim == 2 {
            let mut reordered: Vec<Option<Face>> = vec![None; faces.len()];
            let mut old_to_new = vec![0; faces.len()];
            for (old, f) in faces.into_iter().enumerate() {
                let new = edge_index[&[f.vertices[0], f.vertices[1]]];
                old_to_new[old] = new;
                reordered[new] = Some(f);
            }
            faces = reordered.into_iter().map(|f| f.expect("face per edge")).collect();
            for cf in cell_faces.iter_mut() {
                for f in cf.iter_mut().take(dim + 1) {
                    *f = old_to_new[*f];
                }
            }
        }

        // ridges with their cell rings
        let mut ridge_cells: Vec<Vec<(usize, [usize; 2])>>;
        let ridge_vertices: Vec<Vec<usize>>;
        let ridge_boundary: Vec<bool>;
        if dim == 2 {
            ridge_vertices = (0..self.vertices.len()).map(|v| vec![v]).collect();
            ridge_boundary = boundary_vertex.clone();
            ridge_cells = vec![Vec::new(); self.vertices.len()];
            for c in 0..nc {
                let s = self.sorted[c];
                for local in 0..3 {
                    let others: Vec<usize> = (0..3).filter(|&m| m != local).collect();
                    ridge_cells[s[local]].push((c, [cell_faces[c][others[0]], cell_faces[c][others[1]]]));
                }
            }
        } else {
            ridge_vertices = edges.iter().map(|e| e.to_vec()).collect();
            ridge_boundary = boundary_edge.clone();
            ridge_cells = vec![Vec::new(); edges.len()];
            for c in 0..nc {
                for (le, &[a, b]) in local_edges(3).iter().enumerate() {
                    let others: Vec<usize> = (0..4).filter(|&m| m != a && m != b).collect();
                    ridge_cells[cell_edges[c][le]]
                        .push((c, [cell_faces[c][others[0]], cell_faces[c][others[1]]]));
                }
            }
        }
        let mut ridges = Vec::with_capacity(ridge_vertices.len());
        for (r, verts) in ridge_vertices.into_iter().enumerate() {
            let interior = !ridge_boundary[r];
            let ring = order_ring(&mut ridge_cells[r], &faces, interior)
                .ok_or_else(|| Error::NonManifold { face: verts.clone(), count: ridge_cells[r].len() })?;
            ridges.push(Ridge { vertices: verts, interior, ring });
        }

        self.faces = faces;
        self.ridges = ridges;
        self.edges = edges;
        self.cell_faces = cell_faces;
        self.cell_edges = cell_edges;
        self.boundary_vertex = boundary_vertex;
        self.boundary_edge = boundary_edge;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }
    /// Positively oriented vertex tuple of cell `c`.
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c][..=self.dim]
    }
    /// Vertex tuple of cell `c` sorted by global id.
    pub fn cell_sorted(&self, c: usize) -> &[usize] {
        &self.sorted[c][..=self.dim]
    }
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }
    pub fn ridges(&self) -> &[Ridge] {
        &self.ridges
    }
    /// All edges (sorted vertex pairs). In 2D edge `i` is face `i`, in 3D
    /// edge `i` is ridge `i`.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    /// Face ids of cell `c`, indexed by the sorted-local opposite vertex.
    pub fn cell_faces(&self, c: usize) -> &[usize] {
        &self.cell_faces[c][..=self.dim]
    }
    /// Edge ids of cell `c` in [`local_edges`] order.
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c][..local_edges(self.dim).len()]
    }
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }
    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }
    /// Nominal mesh size `h̃` (the unperturbed maximal diameter for
    /// structured meshes).
    pub fn nominal_h(&self) -> f64 {
        self.nominal_h
    }

    pub fn geometry(&self, c: usize) -> CellGeometry {
        let dim = self.dim;
        let sorted = self.sorted[c];
        let origin = self.vertices[sorted[0]];
        let mut jac = linalg::ZERO3;
        for m in 1..=dim {
            let x = self.vertices[sorted[m]];
            for d in 0..dim {
                jac[d][m - 1] = x[d] - origin[d];
            }
        }
        let det = linalg::det(&jac, dim);
        let jac_inv = linalg::inverse(&jac, dim).unwrap_or(linalg::ZERO3);
        CellGeometry { dim, sorted, origin, jac, jac_inv, det }
    }

    pub fn signed_volume(&self, c: usize) -> f64 {
        signed_volume(self.dim, &self.vertices, &self.cells[c])
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        let s = self.cell_sorted(c);
        let mut h: f64 = 0.0;
        for &[a, b] in local_edges(self.dim) {
            h = h.max(linalg::norm(&linalg::sub(&self.vertices[s[a]], &self.vertices[s[b]]), self.dim));
        }
        h
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_diameter(c)).fold(0.0, f64::max)
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| linalg::norm(&linalg::sub(&self.vertices[a], &self.vertices[b]), self.dim))
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean (N−1)-volume of face `f`.
    pub fn face_measure(&self, f: usize) -> f64 {
        simplex_measure(self.dim, &self.vertices, &self.faces[f].vertices)
    }

    /// Plain-text dump: `dim nv nc`, vertex rows, cell rows.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.dim, self.num_vertices(), self.num_cells());
        for x in &self.vertices {
            let row: Vec<String> = x[..self.dim].iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        for c in 0..self.num_cells() {
            let row: Vec<String> = self.cell(c).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        if h.len() != 3 {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let (dim, nv, nc) = (h[0], h[1], h[2]);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines.next().ok_or_else(|| Error::Parse("missing vertex row".into()))?;
            let mut x = [0.0; 3];
            for (d, tok) in line.split_whitespace().enumerate().take(3) {
                x[d] = tok.parse().map_err(|_| Error::Parse(format!("bad coordinate {tok:?}")))?;
            }
            vertices.push(x);
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let line = lines.next().ok_or_else(|| Error::Parse("missing cell row".into()))?;
            let cell: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad vertex id {t:?}"))))
                .collect::<Result<_>>()?;
            cells.push(cell);
        }
        Self::from_cells(dim, vertices, cells)
    }

    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Orders the cells around a ridge by walking across shared faces.
fn order_ring(cells: &mut [(usize, [usize; 2])], faces: &[Face], interior: bool) -> Option<Vec<RingEntry>> {
    let n = cells.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut used = vec![false; n];
    // start cell: for a boundary ridge, one whose first face is a boundary face
    let mut start = 0;
    let mut entry_face = cells[0].1[0];
    if !interior {
        let found = cells.iter().enumerate().find_map(|(i, (_, fs))| {
            fs.iter().position(|&f| !faces[f].interior).map(|p| (i, fs[p]))
        })?;
        start = found.0;
        entry_face = found.1;
    }
    let mut ring = Vec::with_capacity(n);
    let mut current = start;
    let mut incoming = entry_face;
    loop {
        used[current] = true;
        let (cell, fs) = cells[current];
        let outgoing = if fs[0] == incoming { fs[1] } else { fs[0] };
        ring.push(RingEntry { cell, faces: [incoming, outgoing] });
        let f = &faces[outgoing];
        if !f.interior {
            break;
        }
        let next_cell = f.cells.iter().map(|i| i.cell).find(|&c| c != cell)?;
        match cells.iter().position(|&(c, _)| c == next_cell) {
            Some(next) if !used[next] => {
                current = next;
                incoming = outgoing;
            }
            Some(next) if next == start && interior => break,
            _ => return None,
        }
    }
    if ring.len() != n {
        return None;
    }
    Some(ring)
}

fn signed_volume(dim: usize, vertices: &[Vec3], cell: &[usize; 4]) -> f64 {
    let x0 = vertices[cell[0]];
    let mut m = linalg::ZERO3;
    for k in 1..=dim {
        let x = vertices[cell[k]];
        for d in 0..dim {
            m[d][k - 1] = x[d] - x0[d];
        }
    }
    linalg::det(&m, dim) / factorial(dim)
}

/// Euclidean measure of the simplex spanned by `ids` (1 to 3 vertices span
/// point, segment, triangle).
pub fn simplex_measure(dim: usize, vertices: &[Vec3], ids: &[usize]) -> f64 {
    match ids.len() {
        1 => 1.0,
        2 => linalg::norm(&linalg::sub(&vertices[ids[1]], &vertices[ids[0]]), dim),
        3 => {
            let a = linalg::sub(&vertices[ids[1]], &vertices[ids[0]]);
            let b = linalg::sub(&vertices[ids[2]], &vertices[ids[0]]);
            0.5 * linalg::norm(&linalg::cross(&a, &b), 3)
        }
        _ => unreachable!(),
    }
}

/// Per-cell shape measures and the extreme Euclidean dihedral angles.
#[derive(Clone, Debug)]
pub struct ShapeStats {
    pub diameters: Vec<f64>,
    pub inradii: Vec<f64>,
    pub min_dihedral: f64,
    pub max_dihedral: f64,
}

impl ShapeStats {
    pub fn min_ratio(&self) -> f64 {
        self.inradii
            .iter()
            .zip(&self.diameters)
            .map(|(r, h)| r / h)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Euclidean dihedral angle of cell `geom` between the faces opposite the
/// sorted-local vertices `a` and `b`.
pub(crate) fn euclidean_dihedral(geom: &CellGeometry, a: usize, b: usize) -> f64 {
    let na = geom.outward_normal(a);
    let nb = geom.outward_normal(b);
    (-linalg::dot(&na, &nb, geom.dim)).clamp(-1.0, 1.0).acos()
}

/// Diameters, inradii (`N·|T| / |∂T|`) and dihedral extrema. Checks
/// `sin θ ≥ 2ρ_T/h_T` for every cell and every pair of its faces.
pub fn shape_stats(mesh: &SimplicialMesh) -> Result<ShapeStats> {
    let dim = mesh.dim();
    let mut diameters = Vec::with_capacity(mesh.num_cells());
    let mut inradii = Vec::with_capacity(mesh.num_cells());
    let mut min_dihedral = f64::INFINITY;
    let mut max_dihedral: f64 = 0.0;
    for c in 0..mesh.num_cells() {
        let geom = mesh.geometry(c);
        let vol = geom.volume();
        if vol <= 0.0 || !vol.is_finite() {
            return Err(Error::DegenerateCell { cell: c, volume: vol });
        }
        let surface: f64 = mesh.cell_faces(c).iter().map(|&f| mesh.face_measure(f)).sum();
        let h = mesh.cell_diameter(c);
        let rho = dim as f64 * vol / surface;
        for a in 0..=dim {
            for b in a + 1..=dim {
                let theta = euclidean_dihedral(&geom, a, b);
                if theta.sin() < 2.0 * rho / h * (1.0 - 1e-12) {
                    return Err(Error::InvalidArgument(format!(
                        "dihedral bound violated on cell {c}: sin θ = {} < 2ρ/h = {}",
                        theta.sin(),
                        2.0 * rho / h
                    )));
                }
                min_dihedral = min_dihedral.min(theta);
                max_dihedral = max_dihedral.max(theta);
            }
        }
        diameters.push(h);
        inradii.push(rho);
    }
    Ok(ShapeStats { diameters, inradii, min_dihedral, max_dihedral })
}
