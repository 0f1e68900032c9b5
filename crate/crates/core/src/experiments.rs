//! Scripted sweeps: balls in growing dimension, perforated squares, and
//! long rectangles. Records are computed in parallel and sorted by their
//! parameters before they are returned, so output order never depends on
//! scheduling.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `experiment` | `balls`, `perforation` or `cylinder` |
//! | `d` | dimension |
//! | `p`, `q` | exponents (`q` only for balls) |
//! | `eps`, `r_eps` | lattice half-spacing and hole radius |
//! | `length` | rectangle length `L` (the cross-section is `(0, 1)`) |
//! | `a_eps` | critical ratio `eps^{-d} r^{d-p}` |
//! | `scale_p`, `scale_q` | `Lambda_p`, `Lambda_q` of the unit ball |
//! | `ratio`, `ratio_error` | `F_{p,q}` of the unit ball |
//! | `scaled_ratio` | `(p/q) F_{p,q}`, bounded below by 1 |
//! | `mu`, `mu_error` | annulus eigenvalue on `eps > |x| > r_eps` |
//! | `mu_lower` | explicit lower bound for `mu` |
//! | `lambda`, `lambda_error` | `lambda_p` of the perforated square or rectangle |
//! | `baseline`, `baseline_error` | `lambda_p` of the unperforated unit square |
//! | `lower`, `upper` | interval the flag checks |
//! | `margin` | absolute error margin used for the flag |
//! | `flag` | `satisfied`, `inconclusive`, `failed` or `skipped` |
//! | `note` | why a record was skipped or partially computed |
//!
//! Empty cells mean "not applicable". Numbers carry 12 significant digits.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolver::{eigen_2d, eigen_radial, EigenEstimate, RadialShape, SolverConfig};
use crate::error::{Error, Result};
use crate::functional::{csv_error, format_number, lambda_scale, ratio_from_scales};
use crate::geometry::{make_perforated_square, Domain};
use crate::plot::{line_chart_svg, Series};
use crate::spectral_exact::{
    annulus_mu_lower_bound, ball_upper_bound, critical_ratio, pi_p_value, BoundInterval, BoundReport, BoundStatus,
    Exponent,
};

pub const CSV_COLUMNS: [&str; 25] = [
    "experiment",
    "d",
    "p",
    "q",
    "eps",
    "r_eps",
    "length",
    "a_eps",
    "scale_p",
    "scale_q",
    "ratio",
    "ratio_error",
    "scaled_ratio",
    "mu",
    "mu_error",
    "mu_lower",
    "lambda",
    "lambda_error",
    "baseline",
    "baseline_error",
    "lower",
    "upper",
    "margin",
    "flag",
    "note",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Balls,
    Perforation,
    Cylinder,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Balls => "balls",
            Experiment::Perforation => "perforation",
            Experiment::Cylinder => "cylinder",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub experiment: Experiment,
    pub d: usize,
    pub p: f64,
    pub q: Option<f64>,
    pub eps: Option<f64>,
    pub r_eps: Option<f64>,
    pub length: Option<f64>,
    pub a_eps: Option<f64>,
    pub scale_p: Option<f64>,
    pub scale_q: Option<f64>,
    pub ratio: Option<f64>,
    pub ratio_error: Option<f64>,
    pub scaled_ratio: Option<f64>,
    pub mu: Option<f64>,
    pub mu_error: Option<f64>,
    pub mu_lower: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_error: Option<f64>,
    pub baseline: Option<f64>,
    pub baseline_error: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub margin: Option<f64>,
    pub flag: BoundStatus,
    pub note: Option<String>,
}

impl SweepRecord {
    fn new(experiment: Experiment, d: usize, p: f64) -> Self {
        Self {
            experiment,
            d,
            p,
            q: None,
            eps: None,
            r_eps: None,
            length: None,
            a_eps: None,
            scale_p: None,
            scale_q: None,
            ratio: None,
            ratio_error: None,
            scaled_ratio: None,
            mu: None,
            mu_error: None,
            mu_lower: None,
            lambda: None,
            lambda_error: None,
            baseline: None,
            baseline_error: None,
            lower: None,
            upper: None,
            margin: None,
            flag: BoundStatus::Skipped,
            note: None,
        }
    }

    fn apply(&mut self, report: &BoundReport) {
        self.lower = report.lower;
        self.upper = report.upper;
        self.margin = Some(report.margin);
        self.flag = report.status;
    }

    fn add_note(&mut self, note: String) {
        self.note = Some(match self.note.take() {
            Some(n) => format!("{n}; {note}"),
            None => note,
        });
    }

    fn fields(&self) -> Vec<String> {
        let o = |v: Option<f64>| v.map_or(String::new(), format_number);
        vec![
            self.experiment.name().to_string(),
            self.d.to_string(),
            format_number(self.p),
            o(self.q),
            o(self.eps),
            o(self.r_eps),
            o(self.length),
            o(self.a_eps),
            o(self.scale_p),
            o(self.scale_q),
            o(self.ratio),
            o(self.ratio_error),
            o(self.scaled_ratio),
            o(self.mu),
            o(self.mu_error),
            o(self.mu_lower),
            o(self.lambda),
            o(self.lambda_error),
            o(self.baseline),
            o(self.baseline_error),
            o(self.lower),
            o(self.upper),
            o(self.margin),
            format!("{:?}", self.flag).to_lowercase(),
            self.note.clone().unwrap_or_default(),
        ]
    }
}

/// `F_{p,q}` of the unit ball for each dimension. The flag checks
/// `(p/q) F_{p,q} >= 1`, and for `q = 1` also the analytic ceiling
/// `p (bound at s = sqrt d)^{1/p} / d`.
pub fn ball_dimension_sweep(p: f64, q: Exponent, dims: &[usize], cfg: &SolverConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ball sweep needs 1 < p < inf, got {p}"
        )));
    }
    if q == Exponent::Infinity || q.value() >= p {
        return Err(Error::InvalidParameter(format!("ball sweep needs q < p, got q={q}")));
    }
    if let Some(&d) = dims.iter().find(|&&d| d == 0 || d > 10_000) {
        return Err(Error::InvalidParameter(format!(
            "dimensions must lie in [1, 10000], got {d}"
        )));
    }
    let pe = Exponent::finite(p)?;
    let qv = q.value();
    let mut out: Vec<SweepRecord> = dims
        .par_iter()
        .map(|&d| {
            let mut rec = SweepRecord::new(Experiment::Balls, d, p);
            rec.q = Some(qv);
            let ball = Domain::ball(d, 1.0).expect("unit ball");
            let scales = lambda_scale(&ball, pe, cfg).and_then(|lp| Ok((lp, lambda_scale(&ball, q, cfg)?)));
            let (lp, lq) = match scales {
                Ok(s) => s,
                Err(e) => {
                    rec.add_note(e.to_string());
                    return rec;
                }
            };
            let r = match ratio_from_scales(&lp, &lq) {
                Ok(r) => r,
                Err(e) => {
                    rec.add_note(e.to_string());
                    return rec;
                }
            };
            rec.scale_p = Some(lp.value);
            rec.scale_q = Some(lq.value);
            rec.ratio = Some(r.ratio);
            rec.ratio_error = Some(r.error_indicator);
            let scaled = p / qv * r.ratio;
            rec.scaled_ratio = Some(scaled);
            let upper = if q == Exponent::One {
                match ball_upper_bound(d, p, (d as f64).sqrt()) {
                    Ok(b) => Some(p * b.powf(1.0 / p) / d as f64),
                    Err(e) => {
                        rec.add_note(format!("analytic ceiling: {e}"));
                        None
                    }
                }
            } else {
                None
            };
            let interval = BoundInterval {
                lower: Some(1.0),
                upper,
                strict_lower: false,
                strict_upper: false,
            };
            rec.apply(&interval.evaluate("ball", scaled, p / qv * r.error_indicator));
            rec
        })
        .collect();
    out.sort_by_key(|r| r.d);
    Ok(out)
}

/// Holes of radius below `eps^3` are not meshed; those records carry the
/// annulus eigenvalue and its bound only.
pub fn resolvable(eps: f64, r: f64) -> bool {
    r >= eps.powi(3)
}

/// Perforated unit squares in the plane. Per `(eps, r_eps)`: the critical
/// ratio, the annulus eigenvalue `mu` on `eps > |x| > r_eps` with its
/// explicit lower bound, and, when resolvable, `lambda_p` of the perforated
/// square against the unperforated one. The flag checks `mu >= mu_lower`
/// and `lambda >= baseline`.
pub fn perforation_sweep(p: f64, scalings: &[(f64, f64)], cfg: &SolverConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "perforation sweep needs 1 < p <= 2, got {p}"
        )));
    }
    for &(eps, r) in scalings {
        if !(r > 0.0 && r < eps && eps < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "scalings need 0 < r_eps < eps < 1/2, got ({eps}, {r})"
            )));
        }
    }
    let needs_baseline = scalings.iter().any(|&(e, r)| resolvable(e, r));
    let baseline = if needs_baseline {
        let square = Domain::rectangle(1.0, 1.0)?;
        Some(eigen_2d(&square, p, cfg).map_err(|e| e.in_leg("unperforated square")))
    } else {
        None
    };

    let mut out: Vec<SweepRecord> = scalings
        .par_iter()
        .map(|&(eps, r)| {
            let mut rec = SweepRecord::new(Experiment::Perforation, 2, p);
            rec.eps = Some(eps);
            rec.r_eps = Some(r);
            match critical_ratio(2, p, eps, r) {
                Ok(a) => rec.a_eps = Some(a),
                Err(e) => rec.add_note(e.to_string()),
            }
            let shape = RadialShape::Annulus { inner: r, outer: eps };
            let mu = eigen_radial(2, p, shape, cfg.radial_points, cfg);
            let bound = annulus_mu_lower_bound(2, p, r, eps);
            let mut report = None;
            match (&mu, &bound) {
                (Ok(m), Ok(b)) => {
                    rec.mu = Some(m.extrapolated);
                    rec.mu_error = Some(m.error_indicator);
                    rec.mu_lower = Some(*b);
                    report = Some(BoundInterval::at_least(*b, false).evaluate("mu", m.extrapolated, m.error_indicator));
                }
                _ => {
                    if let Err(e) = &mu {
                        rec.add_note(format!("mu: {e}"));
                    }
                    if let Err(e) = &bound {
                        rec.add_note(format!("mu bound: {e}"));
                    }
                }
            }
            if resolvable(eps, r) {
                match (perforated(eps, r, p, cfg), &baseline) {
                    (Ok(l), Some(Ok(b))) => {
                        rec.lambda = Some(l.extrapolated);
                        rec.lambda_error = Some(l.error_indicator);
                        rec.baseline = Some(b.extrapolated);
                        rec.baseline_error = Some(b.error_indicator);
                        let margin = l.error_indicator.hypot(b.error_indicator);
                        let inclusion = BoundInterval::at_least(b.extrapolated, false).evaluate(
                            "inclusion",
                            l.extrapolated,
                            margin,
                        );
                        report = Some(match report {
                            Some(m) => merge(m, inclusion),
                            None => inclusion,
                        });
                    }
                    (Err(e), _) => rec.add_note(format!("perforated square: {e}")),
                    (_, Some(Err(e))) => rec.add_note(e.to_string()),
                    (_, None) => unreachable!("baseline computed whenever a record is resolvable"),
                }
            } else {
                rec.add_note("hole below eps^3, not meshed".into());
            }
            if let Some(r) = report {
                rec.apply(&r);
            }
            rec
        })
        .collect();
    out.sort_by(|a, b| {
        a.eps
            .partial_cmp(&b.eps)
            .expect("finite")
            .then(a.r_eps.partial_cmp(&b.r_eps).expect("finite"))
    });
    Ok(out)
}

fn perforated(eps: f64, r: f64, p: f64, cfg: &SolverConfig) -> Result<EigenEstimate> {
    eigen_2d(&make_perforated_square(1.0, eps, r)?, p, cfg)
}

// The mu report carries the bounds; the inclusion check only adds its status.
fn merge(mu: BoundReport, inclusion: BoundReport) -> BoundReport {
    BoundReport {
        status: mu.status.worst(inclusion.status),
        satisfied: mu.satisfied && inclusion.satisfied,
        margin: mu.margin.max(inclusion.margin),
        ..mu
    }
}

/// The sandwich for `lambda_p((0,1) x (0,L))` with `lambda_p((0,1)) = pi_p^p`:
/// `[pi_p^p (1 + L^{-p}), (pi_p^2 (1 + L^{-2}))^{p/2}]` for `p >= 2`, the
/// same pair in reverse order for `p <= 2`.
pub fn cylinder_interval(p: f64, length: f64) -> (f64, f64) {
    let a = pi_p_value(p).powf(p);
    let additive = a * (1.0 + length.powf(-p));
    let euclidean = (pi_p_value(p).powi(2) * (1.0 + length.powi(-2))).powf(p / 2.0);
    if p >= 2.0 {
        (additive, euclidean)
    } else {
        (euclidean, additive)
    }
}

pub fn cylinder_sweep(p: f64, lengths: &[f64], cfg: &SolverConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    if !(1.1..=16.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "cylinder sweep needs p in [1.1, 16], got {p}"
        )));
    }
    if let Some(l) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(format!("lengths must be positive, got {l}")));
    }
    let mut out: Vec<SweepRecord> = lengths
        .par_iter()
        .map(|&length| {
            let mut rec = SweepRecord::new(Experiment::Cylinder, 2, p);
            rec.length = Some(length);
            let (lo, hi) = cylinder_interval(p, length);
            rec.lower = Some(lo);
            rec.upper = Some(hi);
            match Domain::rectangle(1.0, length).and_then(|d| eigen_2d(&d, p, cfg)) {
                Ok(e) => {
                    rec.lambda = Some(e.extrapolated);
                    rec.lambda_error = Some(e.error_indicator);
                    rec.apply(&BoundInterval::closed(lo, hi).evaluate("cylinder", e.extrapolated, e.error_indicator));
                }
                Err(e) => rec.add_note(e.to_string()),
            }
            rec
        })
        .collect();
    out.sort_by(|a, b| a.length.partial_cmp(&b.length).expect("finite"));
    Ok(out)
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for r in records {
        w.write_record(r.fields()).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Chart of a sweep: `(p/q) F` against `d`, `mu` against `eps`, or
/// `lambda` against `L`, each with its bounds.
pub fn sweep_svg(records: &[SweepRecord]) -> String {
    let Some(first) = records.first() else {
        return line_chart_svg("empty sweep", "", "", &[], false);
    };
    let series = |name: &'static str, x: fn(&SweepRecord) -> Option<f64>, y: fn(&SweepRecord) -> Option<f64>| Series {
        name,
        points: records.iter().filter_map(|r| Some((x(r)?, y(r)?))).collect(),
    };
    match first.experiment {
        Experiment::Balls => line_chart_svg(
            &format!("unit balls, p = {}", first.p),
            "dimension d",
            "(p/q) F_{p,q}",
            &[
                series("(p/q) F", |r| Some(r.d as f64), |r| r.scaled_ratio),
                series("analytic ceiling", |r| Some(r.d as f64), |r| r.upper),
                series("lower bound 1", |r| Some(r.d as f64), |r| r.lower),
            ],
            true,
        ),
        Experiment::Perforation => line_chart_svg(
            &format!("perforated square, p = {}", first.p),
            "eps",
            "log10 eigenvalue",
            &[
                series("mu", |r| r.eps, |r| r.mu.map(f64::log10)),
                series("mu lower bound", |r| r.eps, |r| r.mu_lower.map(f64::log10)),
                series("lambda perforated", |r| r.eps, |r| r.lambda.map(f64::log10)),
                series("lambda square", |r| r.eps, |r| r.baseline.map(f64::log10)),
            ],
            true,
        ),
        Experiment::Cylinder => line_chart_svg(
            &format!("rectangles (0,1) x (0,L), p = {}", first.p),
            "L",
            "lambda_p",
            &[
                series("lambda_p", |r| r.length, |r| r.lambda),
                series("lower", |r| r.length, |r| r.lower),
                series("upper", |r| r.length, |r| r.upper),
            ],
            true,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn quick() -> SolverConfig {
        SolverConfig {
            radial_points: 1024,
            ..Default::default()
        }
    }

    #[test]
    fn cylinder_interval_collapses_at_two() {
        let (lo, hi) = cylinder_interval(2.0, 3.0);
        let exact = PI * PI * (1.0 + 1.0 / 9.0);
        assert!((lo - exact).abs() < 1e-12 && (hi - exact).abs() < 1e-12);
        let (lo, hi) = cylinder_interval(3.0, 4.0);
        let a = pi_p_value(3.0);
        assert!((lo - a.powi(3) * (1.0 + 1.0 / 64.0)).abs() < 1e-12);
        assert!((hi - (a * a * (1.0 + 1.0 / 16.0)).powf(1.5)).abs() < 1e-12);
        let (lo, hi) = cylinder_interval(1.5, 4.0);
        assert!(lo <= hi);
    }

    #[test]
    fn balls_sorted_and_bounded() {
        let recs = ball_dimension_sweep(3.0, Exponent::One, &[32, 2, 8], &quick()).unwrap();
        assert_eq!(recs.iter().map(|r| r.d).collect::<Vec<_>>(), vec![2, 8, 32]);
        for r in &recs {
            assert_eq!(r.flag, BoundStatus::Satisfied, "{r:?}");
            assert_eq!(r.scale_q, Some(r.d as f64));
        }
        assert!(ball_dimension_sweep(2.0, Exponent::Finite(2.0), &[2], &quick()).is_err());
        assert!(ball_dimension_sweep(2.0, Exponent::One, &[0], &quick()).is_err());
    }

    #[test]
    fn unresolvable_holes_get_mu_only() {
        let recs = perforation_sweep(1.5, &[(0.25, 0.25f64.powi(5)), (0.125, 0.125f64.powi(5))], &quick()).unwrap();
        assert_eq!(recs[0].eps, Some(0.125));
        for r in &recs {
            assert!(r.lambda.is_none());
            assert!(r.mu.unwrap() >= r.mu_lower.unwrap() - r.mu_error.unwrap());
            assert_eq!(r.flag, BoundStatus::Satisfied);
            assert!(r.note.as_deref().unwrap().contains("not meshed"));
        }
        assert!(perforation_sweep(2.5, &[(0.2, 0.01)], &quick()).is_err());
        assert!(perforation_sweep(1.5, &[(0.2, 0.3)], &quick()).is_err());
    }

    #[test]
    fn csv_has_fixed_columns() {
        let mut rec = SweepRecord::new(Experiment::Cylinder, 2, 2.0);
        rec.length = Some(2.0);
        rec.add_note("a, b".into());
        let mut buf = Vec::new();
        write_sweep_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rdr.headers().unwrap().len(), CSV_COLUMNS.len());
        let row = rdr.records().next().unwrap().unwrap();
        assert_eq!(row.len(), CSV_COLUMNS.len());
        assert_eq!(&row[0], "cylinder");
        assert_eq!(&row[6], "2.00000000000e0");
        assert_eq!(&row[23], "skipped");
        assert_eq!(&row[24], "a, b");
        assert!(sweep_svg(&[]).starts_with("<svg"));
    }
}
