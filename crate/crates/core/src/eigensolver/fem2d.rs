//! Piecewise-linear conforming elements on a triangle mesh.

use rayon::prelude::*;

use super::descent::Discretization;
use super::mesh::Mesh;
use super::sparse::SparseCholesky;
use crate::error::{Error, Result};
use crate::geometry::Point;

const NO_DOF: usize = usize::MAX;

/// P1 discretization with homogeneous Dirichlet data on boundary vertices.
/// Gradients are exact per triangle, the `L^p` norm uses vertex quadrature
/// with lumped masses `m_i = sum |T| / 3`.
pub struct P1 {
    n_vertices: usize,
    dof_vertex: Vec<usize>,
    tri_dofs: Vec<[usize; 3]>,
    grads: Vec<[Point; 3]>,
    areas: Vec<f64>,
    mass: Vec<f64>,
    chol: SparseCholesky,
}

impl P1 {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let mut vertex_dof = vec![NO_DOF; mesh.vertices.len()];
        let mut dof_vertex = Vec::new();
        for (v, &b) in mesh.boundary.iter().enumerate() {
            if !b {
                vertex_dof[v] = dof_vertex.len();
                dof_vertex.push(v);
            }
        }
        let n = dof_vertex.len();
        if n == 0 {
            return Err(Error::Mesh("mesh has no interior vertices".into()));
        }
        let mut tri_dofs = Vec::with_capacity(mesh.triangles.len());
        let mut grads = Vec::with_capacity(mesh.triangles.len());
        let mut areas = Vec::with_capacity(mesh.triangles.len());
        let mut mass = vec![0.0; n];
        let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
        for t in &mesh.triangles {
            let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
            let a2 = (p[1] - p[0]).cross(p[2] - p[0]);
            let area = 0.5 * a2;
            // grad of the hat at vertex k: perpendicular of the opposite edge
            let g = [
                (p[1] - p[2]).perp() * (1.0 / a2),
                (p[2] - p[0]).perp() * (1.0 / a2),
                (p[0] - p[1]).perp() * (1.0 / a2),
            ];
            let d = [vertex_dof[t[0]], vertex_dof[t[1]], vertex_dof[t[2]]];
            for k in 0..3 {
                if d[k] == NO_DOF {
                    continue;
                }
                mass[d[k]] += area / 3.0;
                for l in 0..3 {
                    if d[l] != NO_DOF {
                        triplets.push((d[k], d[l], area * g[k].dot(g[l])));
                    }
                }
            }
            tri_dofs.push(d);
            grads.push(g);
            areas.push(area);
        }
        let chol = SparseCholesky::from_triplets(n, &triplets)?;
        Ok(Self {
            n_vertices: mesh.vertices.len(),
            dof_vertex,
            tri_dofs,
            grads,
            areas,
            mass,
            chol,
        })
    }

    /// Expands dof values to all mesh vertices (zero on the boundary).
    pub fn to_nodal(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vertices];
        for (d, &v) in self.dof_vertex.iter().enumerate() {
            out[v] = u[d];
        }
        out
    }

    /// Restricts nodal values to the dofs.
    pub fn from_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_vertex.iter().map(|&v| nodal[v]).collect()
    }

    fn tri_gradient(&self, t: usize, u: &[f64]) -> Point {
        let mut g = Point::default();
        for k in 0..3 {
            let d = self.tri_dofs[t][k];
            if d != NO_DOF {
                g = g + self.grads[t][k] * u[d];
            }
        }
        g
    }
}

const PAR_CHUNK: usize = 4096;

impl Discretization for P1 {
    fn dofs(&self) -> usize {
        self.dof_vertex.len()
    }

    fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn energy(&self, p: f64, u: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let nt = self.areas.len();
        match grad {
            // fixed chunks summed in order, so the result does not depend
            // on thread scheduling
            None => {
                let partial: Vec<f64> = (0..nt.div_ceil(PAR_CHUNK))
                    .into_par_iter()
                    .map(|c| {
                        (c * PAR_CHUNK..((c + 1) * PAR_CHUNK).min(nt))
                            .map(|t| self.areas[t] * self.tri_gradient(t, u).norm().powf(p))
                            .sum::<f64>()
                    })
                    .collect();
                partial.iter().sum()
            }
            Some(out) => {
                out.iter_mut().for_each(|x| *x = 0.0);
                let mut total = 0.0;
                let mut chunk = 0.0;
                for t in 0..nt {
                    if t % PAR_CHUNK == 0 && t > 0 {
                        total += chunk;
                        chunk = 0.0;
                    }
                    let g = self.tri_gradient(t, u);
                    let gn = g.norm();
                    if gn == 0.0 {
                        continue;
                    }
                    let e = self.areas[t] * gn.powf(p);
                    chunk += e;
                    // d/du_k of A |g|^p = p A |g|^{p-2} g . grad_k
                    let coef = p * e / (gn * gn);
                    for k in 0..3 {
                        let d = self.tri_dofs[t][k];
                        if d != NO_DOF {
                            out[d] += coef * g.dot(self.grads[t][k]);
                        }
                    }
                }
                total + chunk
            }
        }
    }

    fn solve_stiffness(&self, rhs: &[f64], out: &mut [f64]) {
        self.chol.solve(rhs, out);
    }
}
