use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ConvexPolygon, Point};
use crate::error::{Error, Result};

/// Vertices used to approximate each circular hole when meshing.
pub const HOLE_VERTICES: usize = 32;

/// Square `[0, side]^2` with circular holes of radius `radius` centered on a
/// lattice of spacing `2 eps` anchored at the square's center. Only lattice
/// cells lying strictly inside the square carry a hole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerforatedSquare {
    pub side: f64,
    pub eps: f64,
    pub radius: f64,
    pub centers: Vec<Point>,
}

/// Input domain of the eigensolvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Polygon {
        polygon: ConvexPolygon,
    },
    PerforatedSquare(PerforatedSquare),
    Ball {
        dim: usize,
        radius: f64,
    },
    /// Inner radius carries the Dirichlet condition, the outer sphere is free.
    Annulus {
        dim: usize,
        inner: f64,
        outer: f64,
    },
    /// `[0, width] x [0, height]`.
    Rectangle {
        width: f64,
        height: f64,
    },
}

pub fn make_perforated_square(side: f64, eps: f64, radius: f64) -> Result<Domain> {
    if !(side > 0.0 && eps > 0.0 && radius > 0.0) {
        return Err(Error::InvalidDomain(
            "perforated square needs positive side, eps and radius".into(),
        ));
    }
    if radius >= eps {
        return Err(Error::InvalidDomain(format!(
            "hole radius {radius} must be smaller than the half-spacing {eps}"
        )));
    }
    if eps >= side / 2.0 {
        return Err(Error::InvalidDomain(format!(
            "half-spacing {eps} must be below side/2 = {}",
            side / 2.0
        )));
    }
    let c = side / 2.0;
    let tol = 1e-12 * side;
    // cell [x - eps, x + eps] strictly inside (0, side)
    let fits = |x: f64| x - eps > tol && x + eps < side - tol;
    let kmax = (c / (2.0 * eps)).ceil() as i64 + 1;
    let offsets: Vec<f64> = (-kmax..=kmax)
        .map(|k| c + 2.0 * eps * k as f64)
        .filter(|&x| fits(x))
        .collect();
    let mut centers = Vec::with_capacity(offsets.len() * offsets.len());
    for &y in &offsets {
        for &x in &offsets {
            centers.push(Point::new(x, y));
        }
    }
    Ok(Domain::PerforatedSquare(PerforatedSquare {
        side,
        eps,
        radius,
        centers,
    }))
}

impl PerforatedSquare {
    pub fn outer(&self) -> ConvexPolygon {
        ConvexPolygon::rectangle(self.side, self.side).expect("positive side")
    }

    /// Polygon circumscribing hole `i`, so the meshed region stays inside the
    /// true perforated domain.
    pub fn hole_polygon(&self, i: usize) -> Vec<Point> {
        let c = self.centers[i];
        let rr = self.radius / (PI / HOLE_VERTICES as f64).cos();
        (0..HOLE_VERTICES)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 + 0.5) / HOLE_VERTICES as f64;
                c + Point::new(rr * a.cos(), rr * a.sin())
            })
            .collect()
    }

    /// Distance from `x` to the boundary (outer square and hole circles).
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        let mut d = x.x.min(x.y).min(self.side - x.x).min(self.side - x.y);
        for &c in &self.centers {
            d = d.min(x.dist(c) - self.radius);
        }
        d
    }

    /// Inradius by a grid search followed by a shrinking pattern search.
    pub fn inradius(&self) -> f64 {
        let n = 400;
        let h = self.side / n as f64;
        let mut best = (Point::new(self.side / 2.0, self.side / 2.0), f64::NEG_INFINITY);
        for i in 0..=n {
            for j in 0..=n {
                let x = Point::new(i as f64 * h, j as f64 * h);
                let d = self.distance_to_boundary(x);
                if d > best.1 {
                    best = (x, d);
                }
            }
        }
        let (mut x, mut d) = best;
        let mut step = h;
        while step > 1e-13 * self.side {
            let mut moved = false;
            for dir in [
                (1.0, 0.0),
                (-1.0, 0.0),
                (0.0, 1.0),
                (0.0, -1.0),
                (1.0, 1.0),
                (1.0, -1.0),
                (-1.0, 1.0),
                (-1.0, -1.0),
            ] {
                let y = x + Point::new(dir.0, dir.1) * step;
                let dy = self.distance_to_boundary(y);
                if dy > d {
                    x = y;
                    d = dy;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        d
    }
}

impl Domain {
    pub fn polygon(polygon: ConvexPolygon) -> Self {
        Domain::Polygon { polygon }
    }

    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidDomain("rectangle sides must be positive".into()));
        }
        Ok(Domain::Rectangle { width, height })
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidDomain("ball needs dim >= 1 and positive radius".into()));
        }
        Ok(Domain::Ball { dim, radius })
    }

    pub fn annulus(dim: usize, inner: f64, outer: f64) -> Result<Self> {
        if dim == 0 || !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "annulus needs dim >= 1 and 0 < r < R (got r={inner}, R={outer})"
            )));
        }
        Ok(Domain::Annulus { dim, inner, outer })
    }

    /// Checks the invariants of a domain that came from deserialization.
    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Polygon { .. } => Ok(()),
            Domain::PerforatedSquare(ps) => {
                let rebuilt = make_perforated_square(ps.side, ps.eps, ps.radius)?;
                if &rebuilt != self {
                    return Err(Error::InvalidDomain("hole centers do not match the lattice".into()));
                }
                Ok(())
            }
            Domain::Ball { dim, radius } => Self::ball(*dim, *radius).map(|_| ()),
            Domain::Annulus { dim, inner, outer } => Self::annulus(*dim, *inner, *outer).map(|_| ()),
            Domain::Rectangle { width, height } => Self::rectangle(*width, *height).map(|_| ()),
        }
    }

    /// The domain as a convex polygon, when it is one.
    pub fn as_convex_polygon(&self) -> Option<ConvexPolygon> {
        match self {
            Domain::Polygon { polygon } => Some(polygon.clone()),
            Domain::Rectangle { width, height } => ConvexPolygon::rectangle(*width, *height).ok(),
            _ => None,
        }
    }

    /// True for the domains the convex-only inequalities apply to.
    pub fn is_convex(&self) -> bool {
        matches!(
            self,
            Domain::Polygon { .. } | Domain::Rectangle { .. } | Domain::Ball { .. }
        )
    }

    pub fn dimension(&self) -> usize {
        match self {
            Domain::Ball { dim, .. } | Domain::Annulus { dim, .. } => *dim,
            _ => 2,
        }
    }

    pub fn inradius(&self) -> f64 {
        match self {
            Domain::Polygon { polygon } => polygon.inradius(),
            Domain::Rectangle { width, height } => 0.5 * width.min(*height),
            Domain::Ball { radius, .. } => *radius,
            Domain::Annulus { inner, outer, .. } => 0.5 * (outer - inner),
            Domain::PerforatedSquare(ps) => ps.inradius(),
        }
    }

    /// Dilation `t * Omega`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {t}"
            )));
        }
        Ok(match self {
            Domain::Polygon { polygon } => Domain::Polygon {
                polygon: polygon.scaled(t),
            },
            Domain::Rectangle { width, height } => Domain::Rectangle {
                width: width * t,
                height: height * t,
            },
            Domain::Ball { dim, radius } => Domain::Ball {
                dim: *dim,
                radius: radius * t,
            },
            Domain::Annulus { dim, inner, outer } => Domain::Annulus {
                dim: *dim,
                inner: inner * t,
                outer: outer * t,
            },
            Domain::PerforatedSquare(ps) => Domain::PerforatedSquare(PerforatedSquare {
                side: ps.side * t,
                eps: ps.eps * t,
                radius: ps.radius * t,
                centers: ps.centers.iter().map(|&c| c * t).collect(),
            }),
        })
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            Domain::Polygon { polygon } => format!("polygon({} vertices)", polygon.len()),
            Domain::Rectangle { width, height } => format!("rect({width}x{height})"),
            Domain::Ball { dim, radius } => format!("ball(d={dim}, r={radius})"),
            Domain::Annulus { dim, inner, outer } => format!("annulus(d={dim}, r={inner}, R={outer})"),
            Domain::PerforatedSquare(ps) => format!(
                "perforated(side={}, eps={}, r={}, holes={})",
                ps.side,
                ps.eps,
                ps.radius,
                ps.centers.len()
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn holes(side: f64, eps: f64, r: f64) -> usize {
        match make_perforated_square(side, eps, r).unwrap() {
            Domain::PerforatedSquare(ps) => ps.centers.len(),
            _ => unreachable!(),
        }
    }

    // direct enumeration over a generous index range
    fn enumerate(side: f64, eps: f64) -> usize {
        let c = side / 2.0;
        let mut n1 = 0;
        for k in -1000i64..=1000 {
            let x = c + 2.0 * eps * k as f64;
            if x - eps > 1e-9 && x + eps < side - 1e-9 {
                n1 += 1;
            }
        }
        n1 * n1
    }

    #[test]
    fn hole_counts() {
        assert_eq!(holes(1.0, 0.25, 1.0 / 16.0), 1);
        assert_eq!(holes(1.0, 0.125, 1.0 / 64.0), 9);
        for (eps, want) in [(0.2, 1), (0.1, 9), (0.05, 81)] {
            assert_eq!(holes(1.0, eps, eps * eps * eps), want);
            assert_eq!(holes(1.0, eps, eps * eps * eps), enumerate(1.0, eps));
        }
        for eps in [0.3, 0.15, 0.07, 0.033] {
            assert_eq!(holes(1.0, eps, eps / 10.0), enumerate(1.0, eps), "eps={eps}");
        }
    }

    #[test]
    fn hole_radius_must_be_below_eps() {
        assert!(make_perforated_square(1.0, 0.25, 0.25).is_err());
        assert!(make_perforated_square(1.0, 0.25, 0.3).is_err());
        assert!(make_perforated_square(1.0, 0.6, 0.1).is_err());
    }

    #[test]
    fn perforated_inradius() {
        // one central hole: the best point is the middle of a half-diagonal
        let Domain::PerforatedSquare(ps) = make_perforated_square(1.0, 0.25, 0.05).unwrap() else {
            unreachable!()
        };
        let s = 2f64.sqrt();
        // solve t = (0.5 - t) * sqrt(2) - 0.05 on the diagonal through (t, t)
        let t = (0.5 * s - 0.05) / (1.0 + s);
        assert!((ps.inradius() - t).abs() < 1e-9, "{} vs {t}", ps.inradius());
    }

    #[test]
    fn serde_roundtrip() {
        let d = make_perforated_square(1.0, 0.125, 0.01).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        let back: Domain = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        back.validate().unwrap();
        let p = Domain::polygon(ConvexPolygon::unit_square());
        let back: Domain = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
