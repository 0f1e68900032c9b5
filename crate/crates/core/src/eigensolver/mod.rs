//! Principal eigenvalue of the Dirichlet p-Laplacian: P1 finite elements on
//! planar domains, weighted 1-D elements for balls and annuli.

pub mod descent;
pub mod fem2d;
pub mod mesh;
pub mod radial;
pub mod sparse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::spectral_exact::Exponent;
use descent::{inverse_iteration, minimize_quotient, DescentOptions, Discretization, Minimizer};
pub use mesh::{build_hierarchy, Mesh, MeshHierarchy, MeshKind};
pub use radial::RadialShape;

/// Operating range of the planar solver.
pub const P_MIN_2D: f64 = 1.1;
pub const P_MAX_2D: f64 = 16.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Number of nested mesh (or grid) levels.
    pub levels: usize,
    /// Iteration cap of a single descent.
    pub max_iter: usize,
    /// Relative decrease per iteration below which a descent stops.
    pub tol: f64,
    /// Continuation factor: `p_{k+1} = p_k^{s}` upward, `p_k^{1/s}` downward.
    pub p_schedule: f64,
    /// Coarse mesh cells across twice the inradius.
    pub coarse_cells: usize,
    /// Radial elements on the finest grid.
    pub radial_points: usize,
    /// Fixed number of refinements for fan meshes.
    pub fan_refinements: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            max_iter: 50_000,
            tol: 1e-10,
            p_schedule: 1.25,
            coarse_cells: 8,
            radial_points: 4096,
            fan_refinements: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::InvalidParameter(
                "at least two levels are needed for extrapolation".into(),
            ));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("max_iter and tol must be positive".into()));
        }
        if !(self.p_schedule > 1.0) {
            return Err(Error::InvalidParameter("p_schedule must exceed 1".into()));
        }
        if self.coarse_cells < 2 {
            return Err(Error::InvalidParameter("coarse_cells must be at least 2".into()));
        }
        Ok(())
    }

    fn descent(&self) -> DescentOptions {
        DescentOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            ..DescentOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelValue {
    pub h: f64,
    pub dofs: usize,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Fem2d,
    Radial,
    Union,
}

/// Eigenvalue estimate across mesh levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    pub p: Exponent,
    pub method: EigenMethod,
    pub level_values: Vec<LevelValue>,
    pub extrapolated: f64,
    pub error_indicator: f64,
    /// Nodal values on the finest mesh, `sum m_i |u_i|^p = 1`.
    #[serde(skip)]
    pub eigenfunction: Vec<f64>,
}

impl EigenEstimate {
    pub fn finest(&self) -> f64 {
        self.level_values.last().map_or(f64::NAN, |l| l.value)
    }

    /// `lambda^{1/p}` and its propagated error.
    pub fn scale(&self) -> (f64, f64) {
        let p = self.p.value();
        let s = self.extrapolated.powf(1.0 / p);
        (s, s * self.error_indicator / (p * self.extrapolated))
    }

    /// The estimate for the dilated domain `t * Omega`.
    pub fn dilated(&self, t: f64) -> Self {
        let f = t.powf(-self.p.value());
        let mut out = self.clone();
        for l in &mut out.level_values {
            l.value *= f;
            l.h *= t;
        }
        out.extrapolated *= f;
        out.error_indicator *= f;
        out
    }
}

/// First-order Richardson extrapolation over the two finest levels:
/// `(value, indicator)`, the indicator being twice the last level gap.
pub fn richardson(levels: &[(f64, f64)]) -> (f64, f64) {
    match levels {
        [] => (f64::NAN, f64::INFINITY),
        [(_, v)] => (*v, f64::INFINITY),
        [.., (hc, lc), (hf, lf)] => {
            let gap = lf - lc;
            (lf + gap / (hc / hf - 1.0), 2.0 * gap.abs())
        }
    }
}

/// Exponents visited when continuing from p = 2 to `target`.
pub fn continuation_path(target: f64, factor: f64) -> Vec<f64> {
    let mut path = Vec::new();
    let mut p = 2.0f64;
    if target > 2.0 {
        while p < target {
            p = p.powf(factor).min(target);
            path.push(p);
        }
    } else if target < 2.0 {
        while p > target {
            p = p.powf(1.0 / factor).max(target);
            path.push(p);
        }
    }
    path
}

fn solve_level<D: Discretization>(disc: &D, p: f64, start: &[f64], opts: &DescentOptions) -> Result<Minimizer> {
    if p == 2.0 {
        inverse_iteration(disc, start, opts)
    } else {
        minimize_quotient(disc, p, start, opts)
    }
}

/// Solves on the coarsest discretization by continuation in p, then on each
/// finer level from the interpolated previous solution. Returns the level
/// values and the finest solution in dof form.
fn solve_levels<D, B, P>(
    n_levels: usize,
    build: B,
    prolong: P,
    p: f64,
    cfg: &SolverConfig,
) -> Result<(Vec<LevelValue>, Vec<f64>)>
where
    D: Discretization,
    B: Fn(usize) -> Result<(D, f64)>,
    P: Fn(usize, &D, &[f64], &D) -> Vec<f64>,
{
    let opts = cfg.descent();
    let loose = DescentOptions {
        tol: (cfg.tol * 100.0).max(1e-9),
        ..opts
    };
    let (mut disc, h0) = build(0)?;
    let ones = vec![1.0; disc.dofs()];
    let mut sol = inverse_iteration(&disc, &ones, &opts)?;
    let mut iterations = sol.iterations;
    for &pk in &continuation_path(p, cfg.p_schedule) {
        let o = if pk == p { &opts } else { &loose };
        match minimize_quotient(&disc, pk, &sol.u, o) {
            Ok(s) => {
                iterations += s.iterations;
                sol = s;
            }
            Err(e) if pk != p && matches!(e, Error::NonConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let mut values = vec![LevelValue {
        h: h0,
        dofs: disc.dofs(),
        value: sol.value,
        iterations,
    }];
    for k in 1..n_levels {
        let (fine, h) = build(k)?;
        let start = prolong(k - 1, &disc, &sol.u, &fine);
        sol = solve_level(&fine, p, &start, &opts)?;
        values.push(LevelValue {
            h,
            dofs: fine.dofs(),
            value: sol.value,
            iterations: sol.iterations,
        });
        disc = fine;
    }
    Ok((values, sol.u))
}

fn estimate(p: f64, method: EigenMethod, values: Vec<LevelValue>, eigenfunction: Vec<f64>) -> EigenEstimate {
    let pairs: Vec<(f64, f64)> = values.iter().map(|l| (l.h, l.value)).collect();
    let (extrapolated, error_indicator) = richardson(&pairs);
    EigenEstimate {
        p: Exponent::from_value(p).unwrap_or(Exponent::Finite(p)),
        method,
        level_values: values,
        extrapolated,
        error_indicator,
        eigenfunction,
    }
}

/// Planar solve on a polygon, rectangle or perforated square.
pub fn eigen_2d(domain: &Domain, p: f64, cfg: &SolverConfig) -> Result<EigenEstimate> {
    cfg.validate()?;
    if !(P_MIN_2D..=P_MAX_2D).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "planar solver covers p in [{P_MIN_2D}, {P_MAX_2D}], got {p}"
        )));
    }
    let (hier, _) = build_hierarchy(domain, cfg.levels, cfg.coarse_cells, cfg.fan_refinements)?;
    eigen_on_hierarchy(&hier, p, cfg)
}

/// Planar solve on a prebuilt mesh hierarchy.
pub fn eigen_on_hierarchy(hier: &MeshHierarchy, p: f64, cfg: &SolverConfig) -> Result<EigenEstimate> {
    let build = |k: usize| -> Result<(fem2d::P1, f64)> {
        let m = &hier.levels[k];
        Ok((fem2d::P1::new(m)?, m.h))
    };
    let prolong = |k: usize, coarse: &fem2d::P1, u: &[f64], fine: &fem2d::P1| {
        fine.from_nodal(&hier.prolong(k, &coarse.to_nodal(u)))
    };
    let (values, u) = solve_levels(hier.levels.len(), build, prolong, p, cfg)?;
    let finest = fem2d::P1::new(hier.levels.last().expect("nonempty hierarchy"))?;
    Ok(estimate(p, EigenMethod::Fem2d, values, finest.to_nodal(&u)))
}

/// Radial solve in dimension `d` with `n` elements on the finest grid.
pub fn eigen_radial(d: usize, p: f64, shape: RadialShape, n: usize, cfg: &SolverConfig) -> Result<EigenEstimate> {
    cfg.validate()?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radial solver needs 1 < p < inf, got {p}"
        )));
    }
    if n < 256 {
        return Err(Error::InvalidParameter(format!(
            "radial grid needs at least 256 elements, got {n}"
        )));
    }
    let coarsest = n >> (cfg.levels - 1);
    if coarsest < 16 {
        return Err(Error::InvalidParameter(format!(
            "{} levels leave too few radial elements",
            cfg.levels
        )));
    }
    let build = |k: usize| -> Result<(radial::Radial, f64)> {
        let r = radial::Radial::new(d, shape, n >> (cfg.levels - 1 - k))?;
        let h = r.h();
        Ok((r, h))
    };
    let prolong = |_k: usize, coarse: &radial::Radial, u: &[f64], fine: &radial::Radial| {
        fine.from_nodal(&fine.interpolate_from(&coarse.nodes, &coarse.to_nodal(u)))
    };
    let (values, u) = solve_levels(cfg.levels, build, prolong, p, cfg)?;
    let finest = radial::Radial::new(d, shape, n)?;
    Ok(estimate(p, EigenMethod::Radial, values, finest.to_nodal(&u)))
}

/// Dispatches a domain to the planar or radial solver.
pub fn eigen(domain: &Domain, p: f64, cfg: &SolverConfig) -> Result<EigenEstimate> {
    match domain {
        Domain::Ball { dim, radius } => {
            Ok(eigen_radial(*dim, p, RadialShape::Ball, cfg.radial_points, cfg)?.dilated(*radius))
        }
        Domain::Annulus { dim, inner, outer } => eigen_radial(
            *dim,
            p,
            RadialShape::Annulus {
                inner: *inner,
                outer: *outer,
            },
            cfg.radial_points,
            cfg,
        ),
        _ => eigen_2d(domain, p, cfg),
    }
}

/// Eigenvalue of a disjoint union: the smallest component value. The
/// indicator covers the minimum of the component error intervals.
pub fn eigen_disjoint_union(values: &[EigenEstimate]) -> Result<EigenEstimate> {
    let first = values
        .first()
        .ok_or_else(|| Error::InvalidParameter("disjoint union of no components".into()))?;
    if values.iter().any(|v| v.p != first.p) {
        return Err(Error::InvalidParameter("components have different exponents".into()));
    }
    let best = values
        .iter()
        .min_by(|a, b| a.extrapolated.total_cmp(&b.extrapolated))
        .expect("nonempty");
    let lo = values
        .iter()
        .map(|v| v.extrapolated - v.error_indicator)
        .fold(f64::INFINITY, f64::min);
    let hi = values
        .iter()
        .map(|v| v.extrapolated + v.error_indicator)
        .fold(f64::INFINITY, f64::min);
    let mut out = best.clone();
    out.method = if values.len() == 1 {
        best.method
    } else {
        EigenMethod::Union
    };
    out.error_indicator = (best.extrapolated - lo).max(hi - best.extrapolated);
    Ok(out)
}
