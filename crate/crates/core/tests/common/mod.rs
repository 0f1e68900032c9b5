//! Independent reference values shared by the integration tests.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_shape::geometry::ConvexPolygon;

/// `J_0(x)` by its power series (fine for x < 10).
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= q / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

/// First positive zero of `J_0` by bisection.
pub fn j01() -> f64 {
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if bessel_j0(a) * bessel_j0(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// `lambda_p` of the unit ball in dimension `d` by shooting on the radial
/// equation `(t^{d-1} phi(u'))' + lambda t^{d-1} phi(u) = 0`, `phi(s) = |s|^{p-2} s`.
///
/// With `lambda = 1` the first zero `t1` of the profile gives
/// `lambda_p(B_1) = t1^p`. The Riccati variable `z = phi(u'/u)` is followed in
/// `ln t` until `u'/u < -1`, then `eta = u/u'` is followed in `t` until it
/// vanishes.
pub fn shooting_ball(d: usize, p: f64) -> f64 {
    let dm = d as f64 - 1.0;
    let pc = p / (p - 1.0);
    // dz/ds with s = ln t
    let fz = |s: f64, z: f64| -> f64 {
        let t = s.exp();
        t * (-1.0 - dm * z / t - (p - 1.0) * z.abs().powf(pc))
    };
    let mut s = (1e-9f64).ln();
    let mut z = -s.exp() / d as f64;
    let ds = 2e-5;
    while z > -1.0 {
        let k1 = fz(s, z);
        let k2 = fz(s + 0.5 * ds, z + 0.5 * ds * k1);
        let k3 = fz(s + 0.5 * ds, z + 0.5 * ds * k2);
        let k4 = fz(s + ds, z + ds * k3);
        z += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += ds;
    }
    let feta = |t: f64, eta: f64| -> f64 { 1.0 + dm * eta / ((p - 1.0) * t) + eta.abs().powf(p) / (p - 1.0) };
    let mut t = s.exp();
    let mut eta = -1.0 / z.abs().powf(1.0 / (p - 1.0));
    let dt = 1e-6 * t.max(1.0);
    loop {
        let k1 = feta(t, eta);
        let k2 = feta(t + 0.5 * dt, eta + 0.5 * dt * k1);
        let k3 = feta(t + 0.5 * dt, eta + 0.5 * dt * k2);
        let k4 = feta(t + dt, eta + dt * k3);
        let next = eta + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if next >= 0.0 {
            let t1 = t + dt * (-eta) / (next - eta);
            return t1.powf(p);
        }
        eta = next;
        t += dt;
    }
}

/// A few random convex polygons with a fixed seed.
pub fn random_polygons(seed: u64, count: usize) -> Vec<ConvexPolygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| ConvexPolygon::random_hull(&mut rng, 12)).collect()
}
