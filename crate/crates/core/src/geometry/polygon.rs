use std::f64::consts::PI;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Error, Result};

/// Relative tolerance for vertex merging and convexity tests.
const GEOM_TOL: f64 = 1e-12;

/// Number of vertices used when a disc has to be represented as a polygon.
pub const DISC_VERTICES: usize = 256;

/// A strictly convex planar polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for ConvexPolygon {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Self> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

/// Outward unit normal `normal` and offset `offset` of an edge line, so that
/// the polygon is `{x : normal . x <= offset}` over all edges.
#[derive(Clone, Copy, Debug)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

impl ConvexPolygon {
    /// Validates and normalizes a vertex list: near-duplicate and collinear
    /// vertices are merged, clockwise input is reversed, and anything that
    /// is not strictly convex afterwards is rejected.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite coordinate".into()));
        }
        let diam = all_pairs_diameter(&vertices).0;
        if diam <= 0.0 {
            return Err(Error::InvalidPolygon("all vertices coincide".into()));
        }
        let dup_tol = GEOM_TOL * diam;
        let cross_tol = GEOM_TOL * diam * diam;

        let mut pts: Vec<Point> = Vec::with_capacity(vertices.len());
        for &p in &vertices {
            if pts.last().is_none_or(|&q: &Point| q.dist(p) > dup_tol) {
                pts.push(p);
            }
        }
        while pts.len() > 1 && pts[0].dist(pts[pts.len() - 1]) <= dup_tol {
            pts.pop();
        }
        if signed_area(&pts) < 0.0 {
            pts.reverse();
        }

        // collinear merging
        loop {
            let n = pts.len();
            if n < 3 {
                return Err(Error::InvalidPolygon("degenerate (collinear) vertex list".into()));
            }
            let mut removed = false;
            for i in 0..n {
                let prev = pts[(i + n - 1) % n];
                let next = pts[(i + 1) % n];
                let c = (pts[i] - prev).cross(next - pts[i]);
                if c.abs() <= cross_tol {
                    pts.remove(i);
                    removed = true;
                    break;
                }
            }
            if !removed {
                break;
            }
        }

        let n = pts.len();
        for i in 0..n {
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            let c = (pts[i] - prev).cross(next - pts[i]);
            if c <= cross_tol {
                return Err(Error::InvalidPolygon(format!(
                    "vertex {i} ({}, {}) is reflex; polygon is not convex",
                    pts[i].x, pts[i].y
                )));
            }
        }
        // a star-shaped but self-overlapping vertex order would pass the local
        // test; the turning angle must be exactly one full turn
        let turn: f64 = (0..n)
            .map(|i| {
                let a = pts[(i + 1) % n] - pts[i];
                let b = pts[(i + 2) % n] - pts[(i + 1) % n];
                a.cross(b).atan2(a.dot(b))
            })
            .sum();
        if (turn - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::InvalidPolygon("vertex order winds more than once".into()));
        }
        Ok(Self { vertices: pts })
    }

    /// Convex hull of a point cloud (Andrew's monotone chain).
    pub fn hull(points: &[Point]) -> Result<Self> {
        let mut pts: Vec<Point> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::InvalidPolygon("hull needs at least 3 distinct points".into()));
        }
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2
                && (lower[lower.len() - 1] - lower[lower.len() - 2]).cross(p - lower[lower.len() - 1]) <= 0.0
            {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2
                && (upper[upper.len() - 1] - upper[upper.len() - 2]).cross(p - upper[upper.len() - 1]) <= 0.0
            {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self::new(lower)
    }

    /// Regular `n`-gon with the given circumradius, centered at the origin,
    /// with a vertex on the positive x-axis.
    pub fn regular(n: usize, circumradius: f64) -> Result<Self> {
        if n < 3 || circumradius <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "regular polygon needs n >= 3 and positive radius (n={n}, r={circumradius})"
            )));
        }
        let verts = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                Point::new(circumradius * a.cos(), circumradius * a.sin())
            })
            .collect();
        Self::new(verts)
    }

    /// A disc of the given radius as an inscribed regular 256-gon.
    pub fn disc(radius: f64) -> Result<Self> {
        Self::regular(DISC_VERTICES, radius)
    }

    /// Axis-aligned rectangle `[0, width] x [0, height]`.
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::InvalidParameter("rectangle sides must be positive".into()));
        }
        Self::new(vec![
            Point::new(0.0, 0.0),
            Point::new(width, 0.0),
            Point::new(width, height),
            Point::new(0.0, height),
        ])
    }

    pub fn unit_square() -> Self {
        Self::rectangle(1.0, 1.0).expect("unit square is valid")
    }

    /// Convex hull of `points` uniform samples in the unit square. Retries
    /// until the hull is non-degenerate.
    pub fn random_hull<R: Rng + ?Sized>(rng: &mut R, points: usize) -> Self {
        let points = points.max(3);
        loop {
            let pts: Vec<Point> = (0..points)
                .map(|_| Point::new(rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            if let Ok(p) = Self::hull(&pts) {
                if p.area() > 1e-3 {
                    return p;
                }
            }
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn halfplanes(&self) -> Vec<HalfPlane> {
        self.edges()
            .map(|(a, b)| {
                let e = b - a;
                let normal = Point::new(e.y, -e.x) * (1.0 / e.norm());
                HalfPlane {
                    normal,
                    offset: normal.dot(a),
                }
            })
            .collect()
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn centroid(&self) -> Point {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a2 = 0.0;
        let o = self.vertices[0];
        for (p, q) in self.edges() {
            let (p, q) = (p - o, q - o);
            let c = p.cross(q);
            a2 += c;
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        o + Point::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    pub fn diameter(&self) -> f64 {
        all_pairs_diameter(&self.vertices).0
    }

    /// Indices `(i, j)`, `i < j`, of a vertex pair realizing the diameter.
    /// On ties the lexicographically smallest pair wins.
    pub fn diameter_pair(&self) -> (usize, usize) {
        all_pairs_diameter(&self.vertices).1
    }

    /// Largest inscribed disc `(center, radius)`: the Chebyshev center of the
    /// edge half-planes, found by linear programming and then polished on
    /// the active constraint set.
    pub fn chebyshev_center(&self) -> Result<(Point, f64)> {
        let origin = self.centroid();
        let hps: Vec<HalfPlane> = self
            .halfplanes()
            .into_iter()
            .map(|h| HalfPlane {
                normal: h.normal,
                offset: h.offset - h.normal.dot(origin),
            })
            .collect();

        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let cx = lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY));
        let cy = lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY));
        let r = lp.add_var(1.0, (0.0, f64::INFINITY));
        for h in &hps {
            lp.add_constraint(
                [(cx, h.normal.x), (cy, h.normal.y), (r, 1.0)],
                ComparisonOp::Le,
                h.offset,
            );
        }
        let sol = lp
            .solve()
            .map_err(|e| Error::InvalidPolygon(format!("inradius LP failed: {e}")))?;
        let mut center = Point::new(*sol.var_value(cx), *sol.var_value(cy));
        let mut radius = hps
            .iter()
            .map(|h| h.offset - h.normal.dot(center))
            .fold(f64::INFINITY, f64::min);

        // polish on the (at most 8) tightest constraints
        let scale = self.diameter();
        let mut order: Vec<usize> = (0..hps.len()).collect();
        let slack = |i: usize, c: Point, r: f64| hps[i].offset - hps[i].normal.dot(c) - r;
        order.sort_by(|&a, &b| slack(a, center, radius).total_cmp(&slack(b, center, radius)));
        let active: Vec<usize> = order
            .into_iter()
            .take(8)
            .filter(|&i| slack(i, center, radius) <= 1e-6 * scale)
            .collect();
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                for c in b + 1..active.len() {
                    let idx = [active[a], active[b], active[c]];
                    if let Some((pc, pr)) = solve_three(&hps, idx) {
                        let feasible = hps.iter().all(|h| h.offset - h.normal.dot(pc) - pr >= -1e-13 * scale);
                        if feasible && pr > radius {
                            center = pc;
                            radius = pr;
                        }
                    }
                }
            }
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidPolygon(
                "inradius LP returned a non-positive radius".into(),
            ));
        }
        Ok((center + origin, radius))
    }

    pub fn inradius(&self) -> f64 {
        self.chebyshev_center()
            .map(|(_, r)| r)
            .expect("valid convex polygon has a positive inradius")
    }

    /// Vertices of the inner parallel set `{x : d(x, boundary) >= t}`.
    /// Empty when `t` reaches the inradius.
    pub fn inner_parallel_set(&self, t: f64) -> Vec<Point> {
        if t <= 0.0 {
            return self.vertices.clone();
        }
        let mut poly = self.vertices.clone();
        for h in self.halfplanes() {
            poly = clip_halfplane(&poly, h.normal, h.offset - t);
            if poly.len() < 3 {
                return Vec::new();
            }
        }
        poly
    }

    pub fn inner_parallel_area(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.area();
        }
        let p = self.inner_parallel_set(t);
        if p.len() < 3 {
            0.0
        } else {
            signed_area(&p).max(0.0)
        }
    }

    /// Vertices in the frame where the diameter pair sits at `(0, 0)` and
    /// `(0, diameter)`.
    pub fn diameter_aligned(&self) -> Vec<Point> {
        let (i, j) = self.diameter_pair();
        let a = self.vertices[i];
        let d = self.vertices[j] - a;
        let angle = PI / 2.0 - d.y.atan2(d.x);
        self.vertices.iter().map(|&v| (v - a).rotate(angle)).collect()
    }

    /// Length of the chord `{y = t}` of a convex vertex list.
    pub fn chord_length(vertices: &[Point], t: f64) -> f64 {
        let n = vertices.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let p = vertices[i];
            let q = vertices[(i + 1) % n];
            let (ymin, ymax) = (p.y.min(q.y), p.y.max(q.y));
            if t < ymin || t > ymax {
                continue;
            }
            if (q.y - p.y).abs() <= f64::EPSILON * (ymax.abs() + 1.0) {
                lo = lo.min(p.x.min(q.x));
                hi = hi.max(p.x.max(q.x));
            } else {
                let x = p.x + (t - p.y) * (q.x - p.x) / (q.y - p.y);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        if hi > lo {
            hi - lo
        } else {
            0.0
        }
    }

    /// Longest section perpendicular to the diameter direction. Chord length
    /// is concave and piecewise linear in the height, so the maximum sits at
    /// a vertex height.
    pub fn max_section_length(&self) -> f64 {
        let aligned = self.diameter_aligned();
        aligned
            .iter()
            .map(|v| Self::chord_length(&aligned, v.y))
            .fold(0.0, f64::max)
    }

    /// Minimal width over all directions (attained orthogonal to an edge).
    pub fn min_width(&self) -> f64 {
        self.halfplanes()
            .iter()
            .map(|h| {
                self.vertices
                    .iter()
                    .map(|&v| h.offset - h.normal.dot(v))
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = GEOM_TOL * self.diameter();
        self.halfplanes().iter().all(|h| h.normal.dot(p) <= h.offset + tol)
    }

    /// Distance from an interior point to the boundary.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.halfplanes()
            .iter()
            .map(|h| h.offset - h.normal.dot(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v * t).collect(),
        }
    }

    pub fn translated(&self, by: Point) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v + by).collect(),
        }
    }

    pub fn rotated(&self, angle: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v.rotate(angle)).collect(),
        }
    }

    /// Rescaled about the centroid to the requested area.
    pub fn with_area(&self, target: f64) -> Self {
        let c = self.centroid();
        let t = (target / self.area()).sqrt();
        Self {
            vertices: self.vertices.iter().map(|&v| c + (v - c) * t).collect(),
        }
    }
}

fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let o = pts[0];
    let mut s = 0.0;
    for i in 1..n - 1 {
        s += (pts[i] - o).cross(pts[i + 1] - o);
    }
    0.5 * s
}

fn all_pairs_diameter(pts: &[Point]) -> (f64, (usize, usize)) {
    let mut best = 0.0;
    let mut pair = (0, 0);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].dist(pts[j]);
            if d > best * (1.0 + GEOM_TOL) {
                best = d;
                pair = (i, j);
            }
        }
    }
    (best, pair)
}

/// Sutherland-Hodgman clip of a convex polygon by `{normal . x <= offset}`.
fn clip_halfplane(poly: &[Point], normal: Point, offset: f64) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let dp = normal.dot(p) - offset;
        let dq = normal.dot(q) - offset;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            out.push(p.lerp(q, dp / (dp - dq)));
        }
    }
    out
}

fn solve_three(hps: &[HalfPlane], idx: [usize; 3]) -> Option<(Point, f64)> {
    let m = nalgebra::Matrix3::from_fn(|r, c| {
        let h = hps[idx[r]];
        match c {
            0 => h.normal.x,
            1 => h.normal.y,
            _ => 1.0,
        }
    });
    let rhs = nalgebra::Vector3::new(hps[idx[0]].offset, hps[idx[1]].offset, hps[idx[2]].offset);
    if m.determinant().abs() < 1e-10 {
        return None;
    }
    let x = m.lu().solve(&rhs)?;
    Some((Point::new(x[0], x[1]), x[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn equilateral() -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 3f64.sqrt() / 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn areas() {
        assert!(close(ConvexPolygon::unit_square().area(), 1.0, 1e-15));
        assert!(close(ConvexPolygon::unit_square().scaled(2.0).area(), 4.0, 1e-15));
        let hex = ConvexPolygon::regular(6, 1.0).unwrap();
        assert!(close(hex.area(), 3.0 * 3f64.sqrt() / 2.0, 1e-14));
    }

    #[test]
    fn inradius_examples() {
        assert!(close(ConvexPolygon::unit_square().inradius(), 0.5, 1e-12));
        for l in [1.0, 1.5, 4.0, 16.0] {
            let r = ConvexPolygon::rectangle(1.0, l).unwrap().inradius();
            assert!(close(r, 0.5, 1e-12), "L={l}: {r}");
        }
        // r = area / semi-perimeter
        let tri = equilateral();
        let expected = tri.area() / (tri.perimeter() / 2.0);
        assert!(close(tri.inradius(), expected, 1e-12));
        assert!(close(expected, 1.0 / (2.0 * 3f64.sqrt()), 1e-14));
    }

    #[test]
    fn diameter_examples() {
        assert!(close(ConvexPolygon::unit_square().diameter(), 2f64.sqrt(), 1e-15));
        let l = 3.0;
        assert!(close(
            ConvexPolygon::rectangle(1.0, l).unwrap().diameter(),
            (1.0f64 + l * l).sqrt(),
            1e-15
        ));
        assert!(close(ConvexPolygon::regular(6, 1.0).unwrap().diameter(), 2.0, 1e-15));
    }

    #[test]
    fn diameter_tie_breaks_lexicographically() {
        // both diagonals of the square tie; pair (0, 2) comes first
        assert_eq!(ConvexPolygon::unit_square().diameter_pair(), (0, 2));
    }

    #[test]
    fn inner_parallel_square() {
        let sq = ConvexPolygon::unit_square();
        assert!(close(sq.inner_parallel_area(0.1), 0.64, 1e-14));
        assert_eq!(sq.inner_parallel_area(0.5), 0.0);
        assert_eq!(sq.inner_parallel_area(0.7), 0.0);
    }

    #[test]
    fn inner_parallel_triangle_is_similar() {
        let tri = equilateral();
        let rho = tri.inradius();
        let t = 0.1;
        let expected = tri.area() * ((rho - t) / rho).powi(2);
        assert!(close(tri.inner_parallel_area(t), expected, 1e-12));

        // Monte Carlo cross-check of the distance-function superlevel set
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut hits, mut total) = (0usize, 0usize);
        let h = 3f64.sqrt() / 2.0;
        while total < 200_000 {
            let p = Point::new(rng.random::<f64>(), rng.random::<f64>() * h);
            if !tri.contains(p) {
                continue;
            }
            total += 1;
            if tri.distance_to_boundary(p) >= t {
                hits += 1;
            }
        }
        let mc = tri.area() * hits as f64 / total as f64;
        assert!((mc - expected).abs() < 0.01 * tri.area(), "mc {mc} vs {expected}");
    }

    fn dense_section_scan(p: &ConvexPolygon, samples: usize) -> f64 {
        let aligned = p.diameter_aligned();
        let d = p.diameter();
        (0..=samples)
            .map(|k| ConvexPolygon::chord_length(&aligned, d * k as f64 / samples as f64))
            .fold(0.0, f64::max)
    }

    #[test]
    fn max_section_examples() {
        let sq = ConvexPolygon::unit_square();
        assert!(close(sq.max_section_length(), 2f64.sqrt(), 1e-12));
        for l in [2.0, 3.0, 8.0] {
            let rect = ConvexPolygon::rectangle(1.0, l).unwrap();
            let oracle = dense_section_scan(&rect, 10_000);
            let got = rect.max_section_length();
            assert!(got >= oracle - 1e-12, "L={l}: {got} < scan {oracle}");
            assert!(close(got, oracle, 1e-3), "L={l}: {got} vs scan {oracle}");
            // chord through the far corner, perpendicular to the diagonal
            assert!(close(got, (1.0 + l * l).sqrt() / l, 1e-12), "L={l}: {got}");
        }
        let disc = ConvexPolygon::disc(1.0).unwrap();
        assert!(close(disc.max_section_length(), 2.0, 1e-3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]).is_err());
        let reflex = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        assert!(ConvexPolygon::new(reflex).is_err());
    }

    #[test]
    fn merges_collinear_and_duplicates_and_orients() {
        let p = ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.5),
            Point::new(1.0, 0.0),
        ])
        .unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.area() > 0.0);
    }

    #[test]
    fn hull_of_points() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 0.2),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(0.5, 1.0),
        ];
        let h = ConvexPolygon::hull(&pts).unwrap();
        assert_eq!(h.len(), 4);
        assert!(close(h.area(), 1.0, 1e-15));
    }
}
