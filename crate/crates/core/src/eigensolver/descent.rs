//! Minimization of the discrete p-Rayleigh quotient `N(u) / D(u)` with
//! `N(u) = \int |grad u|^p` and `D(u) = sum_i m_i |u_i|^p`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// A discretized space of functions vanishing on the Dirichlet boundary.
pub trait Discretization: Sync {
    /// Number of unknowns.
    fn dofs(&self) -> usize;

    /// Lumped masses, one per unknown.
    fn mass(&self) -> &[f64];

    /// `N(u)`; when `grad` is given it receives `dN/du`.
    fn energy(&self, p: f64, u: &[f64], grad: Option<&mut [f64]>) -> f64;

    /// Solves with the p = 2 stiffness matrix.
    fn solve_stiffness(&self, rhs: &[f64], out: &mut [f64]);

    /// Applies the preconditioner for exponent `p` at the iterate `u`.
    fn precondition(&self, _p: f64, _u: &[f64], rhs: &[f64], out: &mut [f64]) {
        self.solve_stiffness(rhs, out);
    }
}

/// `D(u) = sum m_i |u_i|^p` and optionally its gradient.
pub fn lp_mass(mass: &[f64], p: f64, u: &[f64], grad: Option<&mut [f64]>) -> f64 {
    match grad {
        None => mass.iter().zip(u).map(|(m, x)| m * x.abs().powf(p)).sum(),
        Some(g) => {
            let mut total = 0.0;
            for i in 0..u.len() {
                let a = u[i].abs();
                if a == 0.0 {
                    g[i] = 0.0;
                    continue;
                }
                let e = mass[i] * a.powf(p);
                total += e;
                g[i] = p * e / u[i];
            }
            total
        }
    }
}

/// Rayleigh quotient and optionally its gradient `(dN - R dD) / D`.
pub fn quotient<D: Discretization + ?Sized>(disc: &D, p: f64, u: &[f64], grad: Option<&mut [f64]>) -> f64 {
    match grad {
        None => {
            let d = lp_mass(disc.mass(), p, u, None);
            disc.energy(p, u, None) / d
        }
        Some(g) => {
            let mut gd = vec![0.0; u.len()];
            let n = disc.energy(p, u, Some(g));
            let d = lp_mass(disc.mass(), p, u, Some(&mut gd));
            let r = n / d;
            for i in 0..u.len() {
                g[i] = (g[i] - r * gd[i]) / d;
            }
            r
        }
    }
}

/// Scales `u` to `D(u) = 1`.
pub fn normalize<D: Discretization + ?Sized>(disc: &D, p: f64, u: &mut [f64]) {
    let d = lp_mass(disc.mass(), p, u, None);
    let s = d.powf(-1.0 / p);
    u.iter_mut().for_each(|x| *x *= s);
}

#[derive(Clone, Copy, Debug)]
pub struct DescentOptions {
    pub max_iter: usize,
    /// Stop once the relative decrease per iteration stays below this for
    /// three consecutive iterations.
    pub tol: f64,
    pub memory: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            tol: 1e-10,
            memory: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimizer {
    pub u: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inverse power iteration `u <- K^{-1} M u` for the linear case p = 2.
pub fn inverse_iteration<D: Discretization + ?Sized>(disc: &D, u0: &[f64], opts: &DescentOptions) -> Result<Minimizer> {
    let n = disc.dofs();
    let mass = disc.mass();
    let mut u: Vec<f64> = u0.iter().map(|x| x.abs()).collect();
    if u.iter().all(|&x| x == 0.0) {
        u.iter_mut().for_each(|x| *x = 1.0);
    }
    normalize(disc, 2.0, &mut u);
    let mut r = quotient(disc, 2.0, &u, None);
    let mut rhs = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut small = 0;
    for it in 1..=opts.max_iter {
        for i in 0..n {
            rhs[i] = mass[i] * u[i];
        }
        disc.solve_stiffness(&rhs, &mut next);
        std::mem::swap(&mut u, &mut next);
        normalize(disc, 2.0, &mut u);
        let r_new = quotient(disc, 2.0, &u, None);
        let rel = (r - r_new).abs() / r_new;
        r = r_new;
        if rel < opts.tol {
            small += 1;
            if small >= 2 {
                u.iter_mut().for_each(|x| *x = x.abs());
                return Ok(Minimizer {
                    u,
                    value: r,
                    iterations: it,
                });
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        best_quotient: r,
    })
}

/// Preconditioned L-BFGS on the quotient with Armijo backtracking, starting
/// from `|u0|`. The discretization's preconditioner serves as the initial
/// Hessian.
pub fn minimize_quotient<D: Discretization + ?Sized>(
    disc: &D,
    p: f64,
    u0: &[f64],
    opts: &DescentOptions,
) -> Result<Minimizer> {
    let n = disc.dofs();
    let mut u: Vec<f64> = u0.iter().map(|x| x.abs()).collect();
    if u.iter().all(|&x| x == 0.0) {
        u.iter_mut().for_each(|x| *x = 1.0);
    }
    normalize(disc, p, &mut u);
    let mut g = vec![0.0; n];
    let mut r = quotient(disc, p, &u, Some(&mut g));

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut gamma = 1.0 / p;
    let mut small = 0;
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut alphas = vec![0.0; opts.memory];
    let mut iterations = 0;

    for it in 1..=opts.max_iter {
        iterations = it;
        // two-loop recursion
        q.copy_from_slice(&g);
        for (k, (s, y, rho)) in memory.iter().enumerate().rev() {
            let a = rho * dot(s, &q);
            alphas[k] = a;
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        }
        disc.precondition(p, &u, &q, &mut d);
        d.iter_mut().for_each(|x| *x *= gamma);
        for (k, (s, y, rho)) in memory.iter().enumerate() {
            let b = rho * dot(y, &d);
            let c = alphas[k] - b;
            d.iter_mut().zip(s).for_each(|(di, si)| *di += c * si);
        }
        d.iter_mut().for_each(|x| *x = -*x);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            memory.clear();
            disc.precondition(p, &u, &g, &mut d);
            d.iter_mut().for_each(|x| *x *= -1.0 / p);
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                break; // stationary to working precision
            }
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            for i in 0..n {
                trial[i] = u[i] + alpha * d[i];
            }
            let rt = quotient(disc, p, &trial, None);
            if rt.is_finite() && rt <= r + 1e-4 * alpha * slope {
                accepted = Some(rt);
                break;
            }
            alpha *= 0.5;
        }
        let Some(_) = accepted else {
            if memory.is_empty() {
                break; // no descent left at working precision
            }
            memory.clear();
            gamma = 1.0 / p;
            continue;
        };
        let r_new = quotient(disc, p, &trial, Some(&mut g_trial));
        let s: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_trial.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 && sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            disc.precondition(p, &trial, &y, &mut q);
            gamma = sy / dot(&y, &q);
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let rel = (r - r_new) / r_new;
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        r = r_new;

        let dm = lp_mass(disc.mass(), p, &u, None);
        if !(0.5..=2.0).contains(&dm) {
            let t = dm.powf(-1.0 / p);
            u.iter_mut().for_each(|x| *x *= t);
            g.iter_mut().for_each(|x| *x /= t);
            memory.clear();
        }

        if rel < opts.tol {
            small += 1;
            if small >= 3 {
                return Ok(finish(disc, p, u, it));
            }
        } else {
            small = 0;
        }
        if it == opts.max_iter {
            return Err(Error::NonConvergence {
                iterations: it,
                best_quotient: r,
            });
        }
    }
    Ok(finish(disc, p, u, iterations))
}

fn finish<D: Discretization + ?Sized>(disc: &D, p: f64, mut u: Vec<f64>, iterations: usize) -> Minimizer {
    u.iter_mut().for_each(|x| *x = x.abs());
    normalize(disc, p, &mut u);
    let value = quotient(disc, p, &u, None);
    Minimizer { u, value, iterations }
}
