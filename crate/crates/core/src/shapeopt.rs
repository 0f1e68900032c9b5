//! Stochastic local search for extremal `F_{p,q}` over convex polygons of
//! unit area with at most `n` vertices.
//!
//! One vertex moves per trial by a Gaussian step of `step_scale * diameter`;
//! the convex hull of the moved vertex set is the projection back to
//! convexity, and the result is rescaled to unit area. Candidates are
//! screened with one mesh level fewer than the confirmation solve. A step is
//! accepted when its confirmed value improves on the current one. The square
//! counts as a local minimum when its restart gains no more than the
//! combined error indicator of its first and last values.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::eigensolver::SolverConfig;
use crate::error::{Error, Result};
use crate::functional::{csv_error, format_number, ratio, RatioResult};
use crate::geometry::{format_polygon, ConvexPolygon, Domain, Point};
use crate::spectral_exact::Exponent;

/// Consecutive rejections before the step is halved.
const PATIENCE: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub p: Exponent,
    pub q: Exponent,
    pub n_vertices: usize,
    pub direction: Direction,
    /// Trials per restart.
    pub budget: usize,
    pub seed: u64,
    /// Largest diameter / width allowed; maximization stops when reaching it.
    pub aspect_cap: f64,
    /// Restarts from random hulls, after the square and the regular n-gon.
    pub random_restarts: usize,
    /// Step scale at the start, relative to the diameter.
    pub initial_step: f64,
    /// Below this the step scale goes back to `initial_step`.
    pub min_step: f64,
    pub solver: SolverConfig,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            p: Exponent::Finite(2.0),
            q: Exponent::One,
            n_vertices: 8,
            direction: Direction::Min,
            budget: 2000,
            seed: 0,
            aspect_cap: 64.0,
            random_restarts: 1,
            initial_step: 0.1,
            min_step: 1e-5,
            // fixed fan refinement keeps the mesh topology, hence the
            // discretization error, continuous under small vertex moves
            solver: SolverConfig {
                fan_refinements: Some(3),
                ..SolverConfig::default()
            },
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q < self.p) {
            return Err(Error::InvalidParameter(format!(
                "the ratio needs q < p, got p = {}, q = {}",
                self.p, self.q
            )));
        }
        if !(3..=64).contains(&self.n_vertices) {
            return Err(Error::InvalidParameter(format!(
                "n_vertices must lie in [3, 64], got {}",
                self.n_vertices
            )));
        }
        if !(self.aspect_cap > 1.0) {
            return Err(Error::InvalidParameter("aspect_cap must exceed 1".into()));
        }
        if !(self.initial_step > 0.0 && self.min_step > 0.0 && self.min_step < self.initial_step) {
            return Err(Error::InvalidParameter("need 0 < min_step < initial_step".into()));
        }
        if self.solver.levels < 3 {
            return Err(Error::InvalidParameter(
                "screening uses one level fewer than the solve, so at least 3 levels are needed".into(),
            ));
        }
        self.solver.validate()
    }

    /// Outside `q <= 2 <= p`, or when maximizing, results are exploratory.
    pub fn exploratory(&self) -> bool {
        self.direction == Direction::Max || !(self.q.value() <= 2.0 && 2.0 <= self.p.value())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Square,
    Regular,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Budget,
    AspectCap,
}

/// One trial. Trial 0 of each restart records the start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub restart: usize,
    pub trial: usize,
    pub step_scale: f64,
    /// Screened candidate value, NaN when the candidate was infeasible.
    pub candidate: f64,
    pub accepted: bool,
    /// Current value after the trial.
    pub value: f64,
    /// Best value over all restarts so far.
    pub best: f64,
    pub diameter: f64,
    pub width: f64,
    pub vertices: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub start: StartKind,
    pub initial_value: f64,
    pub final_value: f64,
    /// Combined error indicator of the first and last values.
    pub margin: f64,
    pub trials: usize,
    pub accepted: usize,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeState {
    /// Best polygon found, unit area.
    pub polygon: ConvexPolygon,
    pub value: RatioResult,
    pub step_scale: f64,
    pub history: Vec<HistoryEntry>,
    pub restarts: Vec<RestartSummary>,
    pub best_restart: usize,
    /// Whether the square restart improved by no more than its margin; `None` without that start.
    pub square_local_minimum: Option<bool>,
    pub exploratory: bool,
}

fn improvement(direction: Direction, new: f64, old: f64) -> f64 {
    match direction {
        Direction::Min => old - new,
        Direction::Max => new - old,
    }
}

fn aspect(poly: &ConvexPolygon) -> f64 {
    poly.diameter() / poly.min_width()
}

struct Evaluator<'a> {
    cfg: &'a OptimizeConfig,
    screen: SolverConfig,
}

impl Evaluator<'_> {
    fn run(&self, poly: &ConvexPolygon, solver: &SolverConfig) -> Result<Option<RatioResult>> {
        match ratio(&Domain::polygon(poly.clone()), self.cfg.p, self.cfg.q, solver) {
            Ok(r) => Ok(Some(r)),
            // geometry the mesher cannot handle is infeasible, not fatal
            Err(e) if is_infeasible(&e) => Ok(None),
            Err(e) => Err(Error::Candidate {
                polygon: format_polygon(poly),
                source: Box::new(e),
            }),
        }
    }

    fn screen(&self, poly: &ConvexPolygon) -> Result<Option<RatioResult>> {
        self.run(poly, &self.screen)
    }

    fn confirm(&self, poly: &ConvexPolygon) -> Result<Option<RatioResult>> {
        self.run(poly, &self.cfg.solver)
    }
}

fn is_infeasible(e: &Error) -> bool {
    match e {
        Error::Mesh(_) | Error::InvalidPolygon(_) => true,
        Error::Leg { source, .. } => is_infeasible(source),
        _ => false,
    }
}

fn start_polygon(kind: StartKind, n: usize, rng: &mut ChaCha8Rng) -> Result<ConvexPolygon> {
    let poly = match kind {
        StartKind::Square => ConvexPolygon::unit_square(),
        StartKind::Regular => ConvexPolygon::regular(n, 1.0)?,
        StartKind::Random => ConvexPolygon::random_hull(rng, n),
    };
    Ok(poly.with_area(1.0))
}

/// Moves vertex `i` by `delta`, takes the hull and rescales to unit area.
fn perturb(poly: &ConvexPolygon, i: usize, delta: Point) -> Option<ConvexPolygon> {
    let mut pts = poly.vertices().to_vec();
    pts[i] = pts[i] + delta;
    let hull = ConvexPolygon::hull(&pts).ok()?;
    if !(hull.area() > 0.0) {
        return None;
    }
    Some(hull.with_area(1.0))
}

pub fn optimize(cfg: &OptimizeConfig) -> Result<ShapeState> {
    cfg.validate()?;
    let eval = Evaluator {
        cfg,
        screen: SolverConfig {
            levels: cfg.solver.levels - 1,
            ..cfg.solver.clone()
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = Vec::new();
    if cfg.n_vertices >= 4 {
        starts.push(StartKind::Square);
    }
    starts.push(StartKind::Regular);
    starts.extend(std::iter::repeat_n(StartKind::Random, cfg.random_restarts));

    let mut history = Vec::new();
    let mut restarts = Vec::new();
    let mut best: Option<(ConvexPolygon, RatioResult, f64, usize)> = None;
    let mut iteration = 0;

    for (ri, &kind) in starts.iter().enumerate() {
        let mut poly = start_polygon(kind, cfg.n_vertices, &mut rng)?;
        let Some(mut value) = eval.confirm(&poly)? else {
            return Err(Error::Mesh(format!("start polygon ({kind:?}) could not be meshed")));
        };
        let Some(mut screened) = eval.screen(&poly)? else {
            return Err(Error::Mesh(format!("start polygon ({kind:?}) could not be meshed")));
        };
        let initial_value = value.ratio;
        let initial_error = value.error_indicator;
        let mut step = cfg.initial_step;
        let mut rejections = 0;
        let mut accepted = 0;
        let mut termination = Termination::Budget;
        let best_value = |v: f64, best: &Option<(ConvexPolygon, RatioResult, f64, usize)>| match best {
            Some((_, b, _, _)) if improvement(cfg.direction, v, b.ratio) <= 0.0 => b.ratio,
            _ => v,
        };
        history.push(HistoryEntry {
            iteration,
            restart: ri,
            trial: 0,
            step_scale: step,
            candidate: screened.ratio,
            accepted: true,
            value: value.ratio,
            best: best_value(value.ratio, &best),
            diameter: poly.diameter(),
            width: poly.min_width(),
            vertices: poly.len(),
        });
        if best
            .as_ref()
            .is_none_or(|b| improvement(cfg.direction, value.ratio, b.1.ratio) > 0.0)
        {
            best = Some((poly.clone(), value, step, ri));
        }

        let mut trials = 0;
        for trial in 1..=cfg.budget {
            iteration += 1;
            trials = trial;
            let i = rng.random_range(0..poly.len());
            let normal = Normal::new(0.0, step * poly.diameter()).expect("positive deviation");
            let delta = Point::new(normal.sample(&mut rng), normal.sample(&mut rng));
            let mut candidate_value = f64::NAN;
            let mut took = false;
            if let Some(cand) = perturb(&poly, i, delta) {
                let capped = aspect(&cand) > cfg.aspect_cap;
                if !(capped && cfg.direction == Direction::Min) {
                    if let Some(s) = eval.screen(&cand)? {
                        candidate_value = s.ratio;
                        if improvement(cfg.direction, s.ratio, screened.ratio) > 0.0 {
                            if let Some(c) = eval.confirm(&cand)? {
                                if improvement(cfg.direction, c.ratio, value.ratio) > 0.0 {
                                    poly = cand;
                                    value = c;
                                    screened = s;
                                    took = true;
                                    if capped {
                                        termination = Termination::AspectCap;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            if took {
                accepted += 1;
                rejections = 0;
                if best
                    .as_ref()
                    .is_none_or(|b| improvement(cfg.direction, value.ratio, b.1.ratio) > 0.0)
                {
                    best = Some((poly.clone(), value, step, ri));
                }
            } else {
                rejections += 1;
                if rejections >= PATIENCE {
                    rejections = 0;
                    step *= 0.5;
                    if step < cfg.min_step {
                        step = cfg.initial_step;
                    }
                }
            }
            history.push(HistoryEntry {
                iteration,
                restart: ri,
                trial,
                step_scale: step,
                candidate: candidate_value,
                accepted: took,
                value: value.ratio,
                best: best.as_ref().map_or(value.ratio, |b| b.1.ratio),
                diameter: poly.diameter(),
                width: poly.min_width(),
                vertices: poly.len(),
            });
            if termination == Termination::AspectCap {
                break;
            }
        }
        restarts.push(RestartSummary {
            start: kind,
            initial_value,
            final_value: value.ratio,
            margin: initial_error.hypot(value.error_indicator),
            trials,
            accepted,
            termination,
        });
    }

    let (polygon, value, step_scale, best_restart) = best.expect("at least one restart");
    let square_local_minimum = starts.iter().position(|&k| k == StartKind::Square).map(|i| {
        let r = &restarts[i];
        improvement(cfg.direction, r.final_value, r.initial_value) <= r.margin
    });
    Ok(ShapeState {
        polygon,
        value,
        step_scale,
        history,
        restarts,
        best_restart,
        square_local_minimum,
        exploratory: cfg.exploratory(),
    })
}

pub fn write_history_csv<W: Write>(history: &[HistoryEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "restart",
        "trial",
        "step_scale",
        "candidate",
        "accepted",
        "value",
        "best",
        "diameter",
        "width",
        "vertices",
    ])
    .map_err(csv_error)?;
    for h in history {
        w.write_record([
            h.iteration.to_string(),
            h.restart.to_string(),
            h.trial.to_string(),
            format_number(h.step_scale),
            format_number(h.candidate),
            h.accepted.to_string(),
            format_number(h.value),
            format_number(h.best),
            format_number(h.diameter),
            format_number(h.width),
            h.vertices.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeVerdict {
    InsufficientData,
    /// Accepted diameters stay within 25% of the start.
    Bounded,
    /// The last accepted diameter exceeds the start by more than 25%.
    Increasing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartEscape {
    pub restart: usize,
    pub accepted_iterates: usize,
    pub first_diameter: f64,
    pub last_diameter: f64,
    pub max_diameter: f64,
    pub verdict: EscapeVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    /// `Increasing` if any restart escapes, otherwise `Bounded` if any
    /// restart has data.
    pub verdict: EscapeVerdict,
    pub restarts: Vec<RestartEscape>,
}

/// Summarizes the diameters of accepted iterates, restart by restart.
pub fn diameter_escape_monitor(history: &[HistoryEntry]) -> EscapeReport {
    let n_restarts = history.iter().map(|h| h.restart + 1).max().unwrap_or(0);
    let mut restarts = Vec::new();
    for r in 0..n_restarts {
        let d: Vec<f64> = history
            .iter()
            .filter(|h| h.restart == r && h.accepted)
            .map(|h| h.diameter)
            .collect();
        let (first, last) = match (d.first(), d.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => (f64::NAN, f64::NAN),
        };
        let verdict = if d.len() < 2 {
            EscapeVerdict::InsufficientData
        } else if last > 1.25 * first {
            EscapeVerdict::Increasing
        } else {
            EscapeVerdict::Bounded
        };
        restarts.push(RestartEscape {
            restart: r,
            accepted_iterates: d.len(),
            first_diameter: first,
            last_diameter: last,
            max_diameter: d.iter().copied().fold(f64::NAN, f64::max),
            verdict,
        });
    }
    let verdict = if restarts.iter().any(|r| r.verdict == EscapeVerdict::Increasing) {
        EscapeVerdict::Increasing
    } else if restarts.iter().any(|r| r.verdict == EscapeVerdict::Bounded) {
        EscapeVerdict::Bounded
    } else {
        EscapeVerdict::InsufficientData
    };
    EscapeReport { verdict, restarts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(direction: Direction, seed: u64) -> OptimizeConfig {
        OptimizeConfig {
            n_vertices: 5,
            direction,
            budget: 25,
            seed,
            random_restarts: 1,
            solver: SolverConfig {
                coarse_cells: 4,
                fan_refinements: Some(2),
                ..SolverConfig::default()
            },
            ..OptimizeConfig::default()
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = quick(Direction::Min, 0);
        c.q = Exponent::Finite(3.0);
        assert!(optimize(&c).is_err());
        let c = OptimizeConfig {
            n_vertices: 2,
            ..quick(Direction::Min, 0)
        };
        assert!(optimize(&c).is_err());
        let c = OptimizeConfig {
            n_vertices: 65,
            ..quick(Direction::Min, 0)
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let c: OptimizeConfig = serde_json::from_str(
            r#"{"p": "inf", "q": 2, "n_vertices": 16, "direction": "min", "budget": 10, "seed": 3, "aspect_cap": 32}"#,
        )
        .unwrap();
        assert_eq!(c.p, Exponent::Infinity);
        assert_eq!(c.q, Exponent::Finite(2.0));
        assert_eq!(c.random_restarts, 1);
        let back: OptimizeConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<OptimizeConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn history_invariants_and_determinism() {
        let cfg = quick(Direction::Min, 42);
        let a = optimize(&cfg).unwrap();
        let b = optimize(&cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.polygon, b.polygon);
        for w in a.history.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
        assert!((a.polygon.area() - 1.0).abs() < 1e-9);
        assert_eq!(a.restarts.len(), 3);
        assert!(a.square_local_minimum.is_some());
        assert!(!a.exploratory);
        let best = a.restarts.iter().map(|r| r.final_value).fold(f64::INFINITY, f64::min);
        assert_eq!(best, a.value.ratio);
    }

    #[test]
    fn maximization_is_exploratory_and_monotone() {
        let a = optimize(&quick(Direction::Max, 1)).unwrap();
        assert!(a.exploratory);
        for w in a.history.windows(2) {
            assert!(w[1].best >= w[0].best);
        }
    }

    #[test]
    fn escape_monitor() {
        assert_eq!(diameter_escape_monitor(&[]).verdict, EscapeVerdict::InsufficientData);
        let entry = |restart, diameter| HistoryEntry {
            iteration: 0,
            restart,
            trial: 0,
            step_scale: 0.1,
            candidate: 1.0,
            accepted: true,
            value: 1.0,
            best: 1.0,
            diameter,
            width: 1.0,
            vertices: 4,
        };
        let growing = [entry(0, 1.0), entry(0, 1.5), entry(0, 3.0)];
        assert_eq!(diameter_escape_monitor(&growing).verdict, EscapeVerdict::Increasing);
        let flat = [entry(0, 1.4), entry(0, 1.45), entry(1, 1.4)];
        let r = diameter_escape_monitor(&flat);
        assert_eq!(r.verdict, EscapeVerdict::Bounded);
        assert_eq!(r.restarts[1].verdict, EscapeVerdict::InsufficientData);
    }

    #[test]
    fn history_csv_header() {
        let mut buf = Vec::new();
        write_history_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            "iteration,restart,trial,step_scale,candidate,accepted,value,best,diameter,width,vertices"
        );
    }
}
