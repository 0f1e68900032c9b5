//! Triangle meshes: structured rectangles, refined fans for convex polygons,
//! constrained Delaunay meshes for everything else, and uniform red
//! refinement to build nested level hierarchies.

use std::collections::HashMap;
use std::fmt::Write as _;

use spade::{ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Domain, Point};

/// Smallest interior angle tolerated anywhere in a mesh, in degrees.
pub const MIN_ANGLE_DEG: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    /// Longest edge length.
    pub h: f64,
}

/// Nested meshes from coarse to fine. `parents[k]` lists, for every vertex
/// of level `k + 1` that is new, the edge it bisects.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    pub levels: Vec<Mesh>,
    pub parents: Vec<Vec<[usize; 2]>>,
}

fn signed_area2(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

impl Mesh {
    /// Orients triangles counterclockwise and marks boundary vertices as the
    /// endpoints of edges used by a single triangle.
    pub fn new(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        for t in &mut triangles {
            let a2 = signed_area2(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if a2 < 0.0 {
                t.swap(1, 2);
            } else if a2 == 0.0 {
                return Err(Error::Mesh("degenerate triangle".into()));
            }
        }
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut boundary = vec![false; vertices.len()];
        let mut h: f64 = 0.0;
        for (&(a, b), &c) in &edge_count {
            if c == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
            h = h.max(vertices[a].dist(vertices[b]));
        }
        Ok(Self {
            vertices,
            triangles,
            boundary,
            h,
        })
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| 0.5 * signed_area2(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]))
            .sum()
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut best = 180.0f64;
        for t in &self.triangles {
            for k in 0..3 {
                let p = self.vertices[t[k]];
                let a = self.vertices[t[(k + 1) % 3]] - p;
                let b = self.vertices[t[(k + 2) % 3]] - p;
                best = best.min(a.cross(b).abs().atan2(a.dot(b)).to_degrees());
            }
        }
        best
    }

    pub fn interior_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| !b).count()
    }

    /// Uniform red refinement: every triangle splits into four similar ones.
    /// Existing vertices keep their indices; new vertices follow in order of
    /// first appearance.
    pub fn refine(&self) -> (Mesh, Vec<[usize; 2]>) {
        let mut vertices = self.vertices.clone();
        let mut parents = Vec::new();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.triangles.len() * 2);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                vertices.push(vertices[a].lerp(vertices[b], 0.5));
                parents.push([key.0, key.1]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mesh = Mesh::new(vertices, triangles).expect("refinement of a valid mesh is valid");
        (mesh, parents)
    }

    /// Structured mesh of `[0, w] x [0, h]` with alternating diagonals.
    pub fn structured_rectangle(w: f64, h: f64, nx: usize, ny: usize) -> Result<Mesh> {
        if nx == 0 || ny == 0 {
            return Err(Error::Mesh("rectangle mesh needs at least one cell per side".into()));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Point::new(w * i as f64 / nx as f64, h * j as f64 / ny as f64));
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if (i + j) % 2 == 0 {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                } else {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
        Mesh::new(vertices, triangles)
    }

    /// Fan of triangles from the centroid to every edge. The map from the
    /// polygon's vertices to this mesh (and its refinements) is smooth.
    pub fn fan(poly: &ConvexPolygon) -> Result<Mesh> {
        let n = poly.len();
        let mut vertices = vec![poly.centroid()];
        vertices.extend_from_slice(poly.vertices());
        let triangles = (0..n).map(|i| [0, 1 + i, 1 + (i + 1) % n]).collect();
        Mesh::new(vertices, triangles)
    }

    /// Constrained Delaunay mesh of a polygon with polygonal holes, refined
    /// to a 25 degree angle bound and the given maximum triangle area.
    pub fn delaunay(outer: &[Point], holes: &[Vec<Point>], max_area: f64) -> Result<Mesh> {
        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
        let to2 = |p: &Point| Point2::new(p.x, p.y);
        cdt.add_constraint_edges(outer.iter().map(to2), true)
            .map_err(|e| Error::Mesh(format!("boundary insertion failed: {e:?}")))?;
        for hole in holes {
            cdt.add_constraint_edges(hole.iter().map(to2), true)
                .map_err(|e| Error::Mesh(format!("hole insertion failed: {e:?}")))?;
        }
        let budget = ((outer_area(outer) / max_area) as usize * 4 + 20 * cdt.num_vertices()).max(10_000);
        let result = cdt.refine(
            RefinementParameters::<f64>::new()
                .with_angle_limit(spade::AngleLimit::from_deg(25.0))
                .with_max_allowed_area(max_area)
                .with_max_additional_vertices(budget)
                .exclude_outer_faces(true),
        );
        if !result.refinement_complete {
            return Err(Error::Mesh("Delaunay refinement ran out of vertices".into()));
        }
        let excluded: std::collections::HashSet<_> = result.excluded_faces.into_iter().collect();
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for face in cdt.inner_faces() {
            if excluded.contains(&face.fix()) {
                continue;
            }
            let mut tri = [0usize; 3];
            for (k, v) in face.vertices().iter().enumerate() {
                let key = v.fix().index();
                tri[k] = *index.entry(key).or_insert_with(|| {
                    let p = v.position();
                    vertices.push(Point::new(p.x, p.y));
                    vertices.len() - 1
                });
            }
            triangles.push(tri);
        }
        if triangles.is_empty() {
            return Err(Error::Mesh("empty triangulation".into()));
        }
        Mesh::new(vertices, triangles)
    }

    /// Debug dump: a vertex table and a triangle table as CSV.
    pub fn to_csv(&self) -> (String, String) {
        let mut v = String::from("index,x,y,boundary\n");
        for (i, p) in self.vertices.iter().enumerate() {
            let _ = writeln!(v, "{i},{:?},{:?},{}", p.x, p.y, self.boundary[i] as u8);
        }
        let mut t = String::from("index,a,b,c\n");
        for (i, tri) in self.triangles.iter().enumerate() {
            let _ = writeln!(t, "{i},{},{},{}", tri[0], tri[1], tri[2]);
        }
        (v, t)
    }
}

fn outer_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>().abs() / 2.0
}

/// How the coarsest mesh of a domain is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    Structured,
    Fan,
    Delaunay,
}

/// Builds `levels` nested meshes. `coarse_cells` sets the coarse mesh size
/// to `2 rho / coarse_cells` (`rho` the inradius); `fan_refinements`, when
/// given, pins the number of refinements of a fan mesh so that nearby
/// polygons share one topology.
pub fn build_hierarchy(
    domain: &Domain,
    levels: usize,
    coarse_cells: usize,
    fan_refinements: Option<usize>,
) -> Result<(MeshHierarchy, MeshKind)> {
    if levels == 0 {
        return Err(Error::InvalidParameter("at least one mesh level is required".into()));
    }
    let coarse_cells = coarse_cells.max(2);
    let (coarse, kind) = match domain {
        Domain::Rectangle { width, height } => {
            let short = width.min(*height);
            let nx = ((width / short) * coarse_cells as f64).round().max(1.0) as usize;
            let ny = ((height / short) * coarse_cells as f64).round().max(1.0) as usize;
            (
                Mesh::structured_rectangle(*width, *height, nx, ny)?,
                MeshKind::Structured,
            )
        }
        Domain::Polygon { polygon } => {
            let h0 = 2.0 * polygon.inradius() / coarse_cells as f64;
            let fan = Mesh::fan(polygon)?;
            if polygon.len() <= 32 && fan.min_angle_deg() >= MIN_ANGLE_DEG {
                let mut m = fan;
                let times = fan_refinements.unwrap_or_else(|| {
                    let ratio = (m.h / h0).max(1.0);
                    ratio.log2().ceil() as usize
                });
                for _ in 0..times {
                    m = m.refine().0;
                }
                (m, MeshKind::Fan)
            } else {
                let max_area = h0 * h0 * 3f64.sqrt() / 4.0;
                (Mesh::delaunay(polygon.vertices(), &[], max_area)?, MeshKind::Delaunay)
            }
        }
        Domain::PerforatedSquare(ps) => {
            let outer = ps.outer();
            let h0 = ps.side / coarse_cells as f64;
            let holes: Vec<Vec<Point>> = (0..ps.centers.len()).map(|i| ps.hole_polygon(i)).collect();
            let max_area = h0 * h0 * 3f64.sqrt() / 4.0;
            (Mesh::delaunay(outer.vertices(), &holes, max_area)?, MeshKind::Delaunay)
        }
        other => {
            return Err(Error::Unsupported(format!("2-D meshing of {}", other.label())));
        }
    };
    if coarse.min_angle_deg() < MIN_ANGLE_DEG - 1e-9 {
        return Err(Error::Mesh(format!(
            "coarse mesh has a {:.2} degree angle, below the {MIN_ANGLE_DEG} degree limit",
            coarse.min_angle_deg()
        )));
    }
    let mut meshes = vec![coarse];
    let mut parents = Vec::new();
    for _ in 1..levels {
        let (m, p) = meshes.last().expect("nonempty").refine();
        meshes.push(m);
        parents.push(p);
    }
    Ok((
        MeshHierarchy {
            levels: meshes,
            parents,
        },
        kind,
    ))
}

impl MeshHierarchy {
    /// Interpolates nodal values from level `k` to level `k + 1`.
    pub fn prolong(&self, k: usize, coarse: &[f64]) -> Vec<f64> {
        let mut fine = coarse.to_vec();
        fine.extend(self.parents[k].iter().map(|&[a, b]| 0.5 * (coarse[a] + coarse[b])));
        fine
    }
}
