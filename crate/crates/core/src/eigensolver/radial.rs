//! Piecewise-linear elements for radial functions in dimension `d`:
//! `\int |u'|^p t^{d-1} dt / \int |u|^p t^{d-1} dt` on a 1-D grid.

use super::descent::Discretization;
use super::sparse::Tridiagonal;
use crate::error::{Error, Result};

/// Radial profile of a ball or of a mixed annulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialShape {
    /// Unit ball: `u(1) = 0`, free at the center.
    Ball,
    /// `u(inner) = 0`, free at `outer`.
    Annulus { inner: f64, outer: f64 },
}

/// The ball grid starts where the weight `t^{d-1}` drops to `exp(-300)`;
/// the cut end carries a natural boundary condition.
const BALL_CUTOFF: f64 = 300.0;

const GAUSS5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

pub struct Radial {
    pub nodes: Vec<f64>,
    /// Index of the Dirichlet node.
    dirichlet: usize,
    /// `\int_e t^{d-1}` per element.
    weights: Vec<f64>,
    lengths: Vec<f64>,
    mass: Vec<f64>,
    stiffness: Tridiagonal,
}

/// Grid of `n` elements for the given shape in dimension `d`.
pub fn radial_grid(d: usize, shape: RadialShape, n: usize) -> Vec<f64> {
    match shape {
        RadialShape::Ball => {
            let cut = if d > 1 {
                (-BALL_CUTOFF / (d as f64 - 1.0)).exp()
            } else {
                0.0
            };
            let cut = if cut < 1e-100 { 0.0 } else { cut };
            (0..=n).map(|i| cut + (1.0 - cut) * i as f64 / n as f64).collect()
        }
        RadialShape::Annulus { inner, outer } => {
            let ratio = outer / inner;
            (0..=n)
                .map(|i| {
                    if i == n {
                        outer
                    } else {
                        inner * ratio.powf(i as f64 / n as f64)
                    }
                })
                .collect()
        }
    }
}

impl Radial {
    pub fn new(d: usize, shape: RadialShape, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if let RadialShape::Annulus { inner, outer } = shape {
            if !(inner > 0.0 && inner < outer && outer.is_finite()) {
                return Err(Error::InvalidDomain(format!(
                    "annulus needs 0 < r < R (r={inner}, R={outer})"
                )));
            }
        }
        let nodes = radial_grid(d, shape, n);
        let dirichlet = match shape {
            RadialShape::Ball => n,
            RadialShape::Annulus { .. } => 0,
        };
        let df = d as f64;
        let weights: Vec<f64> = (0..n)
            .map(|e| {
                let (a, b) = (nodes[e], nodes[e + 1]);
                if a == 0.0 {
                    b.powf(df) / df
                } else {
                    // (b^d - a^d) / d without cancellation
                    -b.powf(df) * (df * (a / b).ln()).exp_m1() / df
                }
            })
            .collect();
        let lengths: Vec<f64> = (0..n).map(|e| nodes[e + 1] - nodes[e]).collect();

        let mut node_mass = vec![0.0; n + 1];
        for e in 0..n {
            let (a, b) = (nodes[e], nodes[e + 1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in GAUSS5 {
                let t = mid + half * x;
                let wt = if d == 1 {
                    1.0
                } else {
                    (((df - 1.0) * t.ln()).exp()).max(0.0)
                };
                let phi_b = (t - a) / (b - a);
                node_mass[e] += half * w * wt * (1.0 - phi_b);
                node_mass[e + 1] += half * w * wt * phi_b;
            }
        }
        let dof_of = |i: usize| -> Option<usize> {
            match i.cmp(&dirichlet) {
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Less => Some(i),
                std::cmp::Ordering::Greater => Some(i - 1),
            }
        };
        let mut mass = vec![0.0; n];
        for (i, &m) in node_mass.iter().enumerate() {
            if let Some(k) = dof_of(i) {
                mass[k] = m;
            }
        }
        let coef: Vec<f64> = (0..n).map(|e| weights[e] / (lengths[e] * lengths[e])).collect();
        let stiffness = assemble(dirichlet, &coef);
        Ok(Self {
            nodes,
            dirichlet,
            weights,
            lengths,
            mass,
            stiffness,
        })
    }

    pub fn elements(&self) -> usize {
        self.lengths.len()
    }

    /// Largest element length.
    pub fn h(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_nodal(&self, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(u.len() + 1);
        out.extend_from_slice(&u[..self.dirichlet]);
        out.push(0.0);
        out.extend_from_slice(&u[self.dirichlet..]);
        out
    }

    pub fn from_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        nodal
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.dirichlet)
            .map(|(_, &v)| v)
            .collect()
    }

    /// Linear interpolation of nodal values given on another grid.
    pub fn interpolate_from(&self, grid: &[f64], values: &[f64]) -> Vec<f64> {
        let mut j = 0;
        self.nodes
            .iter()
            .map(|&t| {
                while j + 2 < grid.len() && grid[j + 1] < t {
                    j += 1;
                }
                let (a, b) = (grid[j], grid[j + 1]);
                let s = ((t - a) / (b - a)).clamp(0.0, 1.0);
                values[j] * (1.0 - s) + values[j + 1] * s
            })
            .collect()
    }

    fn value(&self, u: &[f64], i: usize) -> f64 {
        match i.cmp(&self.dirichlet) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => u[i],
            std::cmp::Ordering::Greater => u[i - 1],
        }
    }

    fn slope(&self, u: &[f64], e: usize) -> f64 {
        (self.value(u, e + 1) - self.value(u, e)) / self.lengths[e]
    }
}

/// Tridiagonal matrix over the free nodes from per-element coefficients.
fn assemble(dirichlet: usize, coef: &[f64]) -> Tridiagonal {
    let n = coef.len();
    let dof_of = |i: usize| -> Option<usize> {
        match i.cmp(&dirichlet) {
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Less => Some(i),
            std::cmp::Ordering::Greater => Some(i - 1),
        }
    };
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (e, &k) in coef.iter().enumerate() {
        let (da, db) = (dof_of(e), dof_of(e + 1));
        if let Some(a) = da {
            diag[a] += k;
        }
        if let Some(b) = db {
            diag[b] += k;
        }
        if let (Some(a), Some(_)) = (da, db) {
            off[a] = -k;
        }
    }
    Tridiagonal { diag, off }
}

impl Discretization for Radial {
    fn dofs(&self) -> usize {
        self.mass.len()
    }

    fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn energy(&self, p: f64, u: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let n = self.elements();
        match grad {
            None => (0..n).map(|e| self.weights[e] * self.slope(u, e).abs().powf(p)).sum(),
            Some(g) => {
                g.iter_mut().for_each(|x| *x = 0.0);
                let mut total = 0.0;
                for e in 0..n {
                    let s = self.slope(u, e);
                    if s == 0.0 {
                        continue;
                    }
                    let en = self.weights[e] * s.abs().powf(p);
                    total += en;
                    let ds = p * en / s / self.lengths[e];
                    if e != self.dirichlet {
                        let k = if e < self.dirichlet { e } else { e - 1 };
                        g[k] -= ds;
                    }
                    if e + 1 != self.dirichlet {
                        let k = if e + 1 < self.dirichlet { e + 1 } else { e };
                        g[k] += ds;
                    }
                }
                total
            }
        }
    }

    fn solve_stiffness(&self, rhs: &[f64], out: &mut [f64]) {
        self.stiffness.solve(rhs, out);
    }

    // The energy Hessian at u, (p-1) W |u'|^{p-2} per element. In high
    // dimension u spans hundreds of orders of magnitude, and the p = 2
    // stiffness would let the lightly weighted inner values run away.
    fn precondition(&self, p: f64, u: &[f64], rhs: &[f64], out: &mut [f64]) {
        if p == 2.0 {
            return self.stiffness.solve(rhs, out);
        }
        let coef: Vec<f64> = (0..self.elements())
            .map(|e| {
                let floor = 1e-3 * self.value(u, e).abs().max(self.value(u, e + 1).abs());
                let s = self.slope(u, e).abs().max(floor);
                let c = (p - 1.0) * self.weights[e] * s.powf(p - 2.0) / (self.lengths[e] * self.lengths[e]);
                if c.is_finite() && c > 0.0 {
                    c
                } else {
                    self.weights[e] / (self.lengths[e] * self.lengths[e])
                }
            })
            .collect();
        assemble(self.dirichlet, &coef).solve(rhs, out);
    }
}
