//! Cheeger constants. For a planar convex set the Cheeger set is the union
//! of discs of radius `r` inside it, where `r` solves
//! `|inner parallel set at r| = pi r^2`; then `h = 1 / r`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigensolver::{eigen_2d, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Domain};
use crate::spectral_exact::ball_cheeger;

/// Default bisection tolerance on the Cheeger radius.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Exponent of the eigenvalue used for the upper bound on perforated domains.
const UPPER_BOUND_P: f64 = 1.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheegerMethod {
    ConvexBisection,
    BallFormula,
    BoundsOnly { lower: f64, upper: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerResult {
    pub h: f64,
    pub cheeger_radius: f64,
    /// Bound on `|h - h_exact|`.
    pub h_error: f64,
    pub method: CheegerMethod,
}

impl CheegerResult {
    fn from_radius(r: f64, h_error: f64, method: CheegerMethod) -> Self {
        let (h, r) = reciprocal_pair(r);
        Self {
            h,
            cheeger_radius: r,
            h_error,
            method,
        }
    }

    pub fn dilated(&self, t: f64) -> Self {
        let method = match self.method {
            CheegerMethod::BoundsOnly { lower, upper } => CheegerMethod::BoundsOnly {
                lower: lower / t,
                upper: upper / t,
            },
            m => m,
        };
        let mut out = Self::from_radius(self.cheeger_radius * t, self.h_error / t, method);
        if let CheegerMethod::BoundsOnly { .. } = method {
            out.h = self.h / t;
        }
        out
    }
}

/// `(1 / r, r')` with `r'` within a few ulps of `r` such that `r' * (1 / r') == 1`.
fn reciprocal_pair(r: f64) -> (f64, f64) {
    let mut x = r;
    for _ in 0..64 {
        let h = 1.0 / x;
        if h * x == 1.0 {
            return (h, x);
        }
        x = x.next_up();
    }
    (1.0 / r, r)
}

/// Cheeger constant of a convex polygon by bisection on the Cheeger radius.
pub fn cheeger_convex(poly: &ConvexPolygon, tol: f64) -> Result<CheegerResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let rho = poly.inradius();
    let g = |r: f64| poly.inner_parallel_area(r) - PI * r * r;
    let (mut lo, mut hi) = (0.0, rho);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let result = CheegerResult::from_radius(r, tol / (r * r), CheegerMethod::ConvexBisection);
    debug_assert!(result.cheeger_radius < rho);
    Ok(result)
}

/// Cheeger constant of any supported domain. Perforated squares only get
/// bounds: the outer square from below, `p lambda_p^{1/p}` at `p = 1.1`
/// from above.
pub fn cheeger_extended(domain: &Domain, tol: f64, cfg: &SolverConfig) -> Result<CheegerResult> {
    domain.validate()?;
    match domain {
        Domain::Polygon { polygon } => cheeger_convex(polygon, tol),
        Domain::Rectangle { width, height } => cheeger_convex(&ConvexPolygon::rectangle(*width, *height)?, tol),
        Domain::Ball { dim, radius } => {
            let h = ball_cheeger(*dim, *radius)?;
            Ok(CheegerResult::from_radius(1.0 / h, 0.0, CheegerMethod::BallFormula))
        }
        Domain::PerforatedSquare(sq) => {
            let lower = cheeger_convex(&sq.outer(), tol)?;
            let lower = lower.h - lower.h_error;
            let e = eigen_2d(domain, UPPER_BOUND_P, cfg).map_err(|e| e.in_leg("cheeger upper bound"))?;
            let lam = e.extrapolated + e.error_indicator;
            let upper = UPPER_BOUND_P * lam.powf(1.0 / UPPER_BOUND_P);
            let h = 0.5 * (lower + upper);
            let mut out = CheegerResult::from_radius(
                1.0 / h,
                0.5 * (upper - lower),
                CheegerMethod::BoundsOnly { lower, upper },
            );
            out.h = h;
            Ok(out)
        }
        Domain::Annulus { .. } => Err(Error::Unsupported(
            "Cheeger constant of an annulus is not computed".into(),
        )),
    }
}
