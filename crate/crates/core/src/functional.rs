//! The extended scale `Lambda_p = lambda_p^{1/p}` for `p` in `[1, inf]`, the
//! ratio `F_{p,q} = Lambda_p / Lambda_q` and the inequalities relating them.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cheeger::{cheeger_extended, DEFAULT_TOL};
use crate::eigensolver::{eigen, EigenMethod, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::spectral_exact::{ball_cheeger, pi_p, BoundInterval, BoundReport, Exponent};

/// Which computation produced a scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Fem,
    Radial,
    Cheeger,
    Inradius,
    ClosedForm,
}

/// `Lambda_p` with an absolute error indicator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub p: Exponent,
    pub value: f64,
    pub error: f64,
    pub backend: Backend,
}

impl Scale {
    fn relative_error(&self) -> f64 {
        self.error / self.value
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub p: Backend,
    pub q: Backend,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub p: Exponent,
    pub q: Exponent,
    pub lambda_p_scale: f64,
    pub lambda_q_scale: f64,
    pub ratio: f64,
    pub provenance: Provenance,
    pub error_indicator: f64,
}

/// `Lambda_p(domain)`: the Cheeger constant at `p = 1`, the inverse inradius
/// at `p = inf`, the eigenvalue to the power `1/p` in between.
pub fn lambda_scale(domain: &Domain, p: Exponent, cfg: &SolverConfig) -> Result<Scale> {
    domain.validate()?;
    let leg = format!("Lambda_{p}");
    let scale = match (p, domain) {
        (Exponent::One, Domain::Ball { dim, radius }) => Scale {
            p,
            value: ball_cheeger(*dim, *radius)?,
            error: 0.0,
            backend: Backend::ClosedForm,
        },
        (Exponent::One, _) => {
            let c = cheeger_extended(domain, DEFAULT_TOL, cfg).map_err(|e| e.in_leg(leg))?;
            Scale {
                p,
                value: c.h,
                error: c.h_error,
                backend: Backend::Cheeger,
            }
        }
        (Exponent::Infinity, Domain::Ball { radius, .. }) => Scale {
            p,
            value: 1.0 / radius,
            error: 0.0,
            backend: Backend::ClosedForm,
        },
        (Exponent::Infinity, Domain::Annulus { .. }) => {
            return Err(Error::Unsupported("Lambda_inf of the mixed annulus problem".into()).in_leg(leg))
        }
        (Exponent::Infinity, _) => {
            let v = 1.0 / domain.inradius();
            Scale {
                p,
                value: v,
                error: 1e-10 * v,
                backend: Backend::Inradius,
            }
        }
        (Exponent::Finite(pv), _) => {
            let e = eigen(domain, pv, cfg).map_err(|e| e.in_leg(leg))?;
            let (value, error) = e.scale();
            Scale {
                p,
                value,
                error,
                backend: match e.method {
                    EigenMethod::Radial => Backend::Radial,
                    _ => Backend::Fem,
                },
            }
        }
    };
    Ok(scale)
}

/// Combines two scales into `F_{p,q}`; relative errors add in quadrature.
pub fn ratio_from_scales(lp: &Scale, lq: &Scale) -> Result<RatioResult> {
    if !(lq.p < lp.p) {
        return Err(Error::InvalidParameter(format!(
            "the ratio needs q < p, got p = {}, q = {}",
            lp.p, lq.p
        )));
    }
    let ratio = lp.value / lq.value;
    Ok(RatioResult {
        p: lp.p,
        q: lq.p,
        lambda_p_scale: lp.value,
        lambda_q_scale: lq.value,
        ratio,
        provenance: Provenance {
            p: lp.backend,
            q: lq.backend,
        },
        error_indicator: ratio * lp.relative_error().hypot(lq.relative_error()),
    })
}

pub fn ratio(domain: &Domain, p: Exponent, q: Exponent, cfg: &SolverConfig) -> Result<RatioResult> {
    if !(q < p) {
        return Err(Error::InvalidParameter(format!(
            "the ratio needs q < p, got p = {p}, q = {q}"
        )));
    }
    let lp = lambda_scale(domain, p, cfg)?;
    let lq = lambda_scale(domain, q, cfg)?;
    ratio_from_scales(&lp, &lq)
}

fn key(p: Exponent) -> u64 {
    p.value().to_bits()
}

/// Evaluates, for the given exponents:
/// - `F_{p,q} >= q/p` for every pair `q < p`,
/// - `max{q/p, pi_p/(d pi_q)} <= F_{p,q} <= pi_p min{q/2, d/pi_q}` (convex),
/// - `rho Lambda_p > pi_p/2` for `p < inf` (convex),
/// - `Lambda_p / h < pi_p/2` for `p > 1` (convex),
/// - `lambda_2 / h^2 >= 1/4` when `p = 2` is among the exponents.
///
/// A report whose inputs could not be computed is marked skipped with the
/// reason attached.
pub fn inequality_suite(domain: &Domain, ps: &[Exponent], cfg: &SolverConfig) -> Vec<BoundReport> {
    let mut ps: Vec<Exponent> = ps.to_vec();
    ps.sort_by(|a, b| a.partial_cmp(b).expect("exponents are ordered"));
    ps.dedup();
    let mut scales: HashMap<u64, std::result::Result<Scale, String>> = HashMap::new();
    let mut get = |p: Exponent| -> std::result::Result<Scale, String> {
        scales
            .entry(key(p))
            .or_insert_with(|| lambda_scale(domain, p, cfg).map_err(|e| e.to_string()))
            .clone()
    };
    let convex = domain.is_convex();
    let d = domain.dimension() as f64;
    let mut reports = Vec::new();

    for (i, &p) in ps.iter().enumerate() {
        for &q in &ps[..i] {
            let names = [
                format!("generalized_cheeger(p={p},q={q})"),
                format!("convex_sandwich(p={p},q={q})"),
            ];
            let r = get(p).and_then(|lp| {
                let lq = get(q)?;
                ratio_from_scales(&lp, &lq).map_err(|e| e.to_string())
            });
            let r = match r {
                Ok(r) => r,
                Err(e) => {
                    reports.extend(names.into_iter().map(|n| BoundReport::skipped(n).with_note(e.clone())));
                    continue;
                }
            };
            let qp = q.value() / p.value();
            let [cheeger_name, sandwich_name] = names;
            reports.push(BoundInterval::at_least(qp, false).evaluate(cheeger_name, r.ratio, r.error_indicator));
            if convex {
                let lower = qp.max(pi_p(p) / (d * pi_p(q)));
                let upper = pi_p(p) * (q.value() / 2.0).min(d / pi_p(q));
                reports.push(BoundInterval::closed(lower, upper).evaluate(sandwich_name, r.ratio, r.error_indicator));
            } else {
                reports.push(BoundReport::skipped(sandwich_name).with_note("domain is not convex"));
            }
        }
    }

    let rho = match domain {
        Domain::Annulus { .. } => None,
        _ => Some(domain.inradius()),
    };
    for &p in &ps {
        if p == Exponent::Infinity {
            continue;
        }
        let name = format!("hersch_protter(p={p})");
        let report = match (convex, rho, get(p)) {
            (false, _, _) | (_, None, _) => BoundReport::skipped(name).with_note("domain is not convex"),
            (_, _, Err(e)) => BoundReport::skipped(name).with_note(e),
            (true, Some(rho), Ok(lp)) => {
                BoundInterval::at_least(pi_p(p) / 2.0, true).evaluate(name, rho * lp.value, rho * lp.error)
            }
        };
        reports.push(report);
    }

    for &p in &ps {
        if p == Exponent::One {
            continue;
        }
        let name = format!("buser(p={p})");
        if !convex {
            reports.push(BoundReport::skipped(name).with_note("domain is not convex"));
            continue;
        }
        let report = match get(p).and_then(|lp| Ok((lp, get(Exponent::One)?))) {
            Err(e) => BoundReport::skipped(name).with_note(e),
            Ok((lp, h)) => {
                let v = lp.value / h.value;
                let err = v * lp.relative_error().hypot(h.relative_error());
                BoundInterval::at_most(pi_p(p) / 2.0, true).evaluate(name, v, err)
            }
        };
        reports.push(report);
    }

    let two = Exponent::Finite(2.0);
    if ps.contains(&two) {
        let name = "cheeger_inequality(p=2)";
        let report = match get(two).and_then(|l2| Ok((l2, get(Exponent::One)?))) {
            Err(e) => BoundReport::skipped(name).with_note(e),
            Ok((l2, h)) => {
                let v = (l2.value / h.value).powi(2);
                let err = 2.0 * v * l2.relative_error().hypot(h.relative_error());
                BoundInterval::at_least(0.25, false).evaluate(name, v, err)
            }
        };
        reports.push(report);
    }
    reports
}

/// The suite restricted to the given `(p, q)` pairs: pair reports for other
/// combinations of the same exponents are dropped.
pub fn inequality_suite_pairs(domain: &Domain, pairs: &[(Exponent, Exponent)], cfg: &SolverConfig) -> Vec<BoundReport> {
    let ps: Vec<Exponent> = pairs.iter().flat_map(|&(p, q)| [p, q]).collect();
    let wanted: Vec<String> = pairs.iter().map(|(p, q)| format!("(p={p},q={q})")).collect();
    inequality_suite(domain, &ps, cfg)
        .into_iter()
        .filter(|r| !r.name.contains(",q=") || wanted.iter().any(|w| r.name.ends_with(w.as_str())))
        .collect()
}

pub fn reports_to_json(reports: &[BoundReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

/// One row per report with a fixed header.
pub fn write_reports_csv<W: Write>(reports: &[BoundReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "name",
        "status",
        "value",
        "lower",
        "upper",
        "strict_lower",
        "strict_upper",
        "margin",
        "note",
    ])
    .map_err(csv_error)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), format_number);
    for r in reports {
        w.write_record([
            r.name.clone(),
            format!("{:?}", r.status).to_lowercase(),
            format_number(r.value),
            opt(r.lower),
            opt(r.upper),
            r.strict_lower.to_string(),
            r.strict_upper.to_string(),
            format_number(r.margin),
            r.note.clone().unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Scientific notation with 12 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.11e}")
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexPolygon;
    use crate::spectral_exact::BoundStatus;
    use std::f64::consts::PI;

    fn square() -> Domain {
        Domain::polygon(ConvexPolygon::unit_square())
    }

    #[test]
    fn endpoint_scales() {
        let cfg = SolverConfig::default();
        let inf = lambda_scale(&square(), Exponent::Infinity, &cfg).unwrap();
        assert!((inf.value - 2.0).abs() < 1e-9);
        assert_eq!(inf.backend, Backend::Inradius);
        let one = lambda_scale(&square(), Exponent::One, &cfg).unwrap();
        assert!((one.value - (2.0 + PI.sqrt())).abs() < 1e-8);
        assert_eq!(one.backend, Backend::Cheeger);
        let ball = lambda_scale(&Domain::ball(3, 2.0).unwrap(), Exponent::One, &cfg).unwrap();
        assert_eq!((ball.value, ball.backend), (1.5, Backend::ClosedForm));
    }

    #[test]
    fn square_ratio_two_one() {
        let r = ratio(
            &square(),
            Exponent::Finite(2.0),
            Exponent::One,
            &SolverConfig::default(),
        )
        .unwrap();
        let exact = 2f64.sqrt() * PI / (2.0 + PI.sqrt());
        assert!((r.ratio - exact).abs() < 5e-3 * exact, "{}", r.ratio);
        assert_eq!(
            r.provenance,
            Provenance {
                p: Backend::Fem,
                q: Backend::Cheeger
            }
        );
        assert!((r.ratio - r.lambda_p_scale / r.lambda_q_scale).abs() < 1e-15);
    }

    #[test]
    fn ratio_requires_q_below_p() {
        let cfg = SolverConfig::default();
        let two = Exponent::Finite(2.0);
        assert!(ratio(&square(), two, two, &cfg).is_err());
        assert!(ratio(&square(), Exponent::One, two, &cfg).is_err());
    }

    #[test]
    fn square_suite() {
        let ps = [Exponent::One, Exponent::Finite(2.0), Exponent::Infinity];
        let reports = inequality_suite(&square(), &ps, &SolverConfig::default());
        for r in &reports {
            assert_eq!(r.status, BoundStatus::Satisfied, "{r:?}");
        }
        let sandwich = reports.iter().find(|r| r.name == "convex_sandwich(p=2,q=1)").unwrap();
        assert!((sandwich.lower.unwrap() - PI / 4.0).abs() < 1e-12);
        assert!((sandwich.upper.unwrap() - PI / 2.0).abs() < 1e-12);
        let hp = reports.iter().find(|r| r.name == "hersch_protter(p=2)").unwrap();
        assert!((hp.value - 0.5 * 2f64.sqrt() * PI).abs() < 1e-2);
        // 3 pairs x 2, HP at 1 and 2, Buser at 2 and inf, the Cheeger inequality
        assert_eq!(reports.len(), 11);
    }

    #[test]
    fn failing_leg_is_skipped_with_reason() {
        let annulus = Domain::annulus(2, 0.1, 1.0).unwrap();
        let reports = inequality_suite(
            &annulus,
            &[Exponent::One, Exponent::Finite(2.0)],
            &SolverConfig::default(),
        );
        let g = reports
            .iter()
            .find(|r| r.name.starts_with("generalized_cheeger"))
            .unwrap();
        assert_eq!(g.status, BoundStatus::Skipped);
        assert!(g.note.as_deref().unwrap().contains("Lambda_1"));
    }

    #[test]
    fn csv_has_fixed_header_and_quotes_names() {
        let r = BoundInterval::at_least(0.5, false).evaluate("generalized_cheeger(p=2,q=1)", 1.0, 0.0);
        let mut buf = Vec::new();
        write_reports_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "name,status,value,lower,upper,strict_lower,strict_upper,margin,note"
        );
        assert!(lines
            .next()
            .unwrap()
            .starts_with("\"generalized_cheeger(p=2,q=1)\",satisfied,"));
    }
}
