//! Closed-form constants and analytic bounds.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// An exponent in `[1, +inf]`; the endpoints are symbolic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    One,
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// Finite exponent, validated to lie in `(1, inf)`.
    pub fn finite(p: f64) -> Result<Self> {
        if p > 1.0 && p.is_finite() {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidParameter(format!(
                "finite exponent must lie in (1, inf), got {p}"
            )))
        }
    }

    /// Maps `1` and `inf` to the symbolic variants.
    pub fn from_value(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(Exponent::One)
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else {
            Self::finite(p)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(p),
            _ => None,
        }
    }

    /// Hoelder conjugate `p / (p - 1)`.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::One => Exponent::Infinity,
            Exponent::Infinity => Exponent::One,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::One => write!(f, "1"),
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "inf" | "infinity" | "+inf" | "∞" => Ok(Exponent::Infinity),
            _ => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse exponent {s:?}")))?;
                Self::from_value(v)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Infinity => s.serialize_str("inf"),
            other => s.serialize_f64(other.value()),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(v) => Exponent::from_value(v),
            Raw::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// `pi_p`, the first eigenvalue scale of the unit interval:
/// `2 pi (p-1)^{1/p} / (p sin(pi/p))`, and 2 at both endpoints.
pub fn pi_p(p: Exponent) -> f64 {
    match p {
        Exponent::One | Exponent::Infinity => 2.0,
        Exponent::Finite(p) => pi_p_value(p),
    }
}

/// Closed form of [`pi_p`] for a finite `p > 1`.
pub fn pi_p_value(p: f64) -> f64 {
    // sin(pi/p) = sin(pi (p-1)/p); the second form keeps full relative
    // accuracy as p -> 1
    let s = if p < 2.0 {
        (PI * (p - 1.0) / p).sin()
    } else {
        (PI / p).sin()
    };
    2.0 * PI * ((p - 1.0).ln() / p).exp() / (p * s)
}

/// Right-hand side of the Gamma-ratio upper bound for `lambda_p` of the unit
/// ball, evaluated in log space:
/// `s^p Gamma(sp+d+1) Gamma(sp-p+1) / (Gamma(sp+1) Gamma(sp+d-p+1))`.
pub fn ball_upper_bound(d: usize, p: f64, s: f64) -> Result<f64> {
    if d == 0 || !(p > 1.0 && p.is_finite()) || !(s >= 1.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ball bound needs d >= 1, 1 < p < inf, s >= 1 (d={d}, p={p}, s={s})"
        )));
    }
    let d = d as f64;
    let sp = s * p;
    let args = [sp + d + 1.0, sp - p + 1.0, sp + 1.0, sp + d - p + 1.0];
    if args.iter().any(|a| !(a.is_finite() && *a < 1e300)) {
        return Err(Error::Overflow("log-Gamma argument out of range".into()));
    }
    let log_value = p * s.ln() + ln_gamma(args[0]) + ln_gamma(args[1]) - ln_gamma(args[2]) - ln_gamma(args[3]);
    if !log_value.is_finite() || log_value > f64::MAX.ln() {
        return Err(Error::Overflow(format!(
            "ball bound exp({log_value}) is not representable"
        )));
    }
    Ok(log_value.exp())
}

/// Interval `[lower, upper]` with per-side strictness. `None` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInterval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub strict_lower: bool,
    pub strict_upper: bool,
}

/// Outcome of checking a value against a bound, honest about error bars.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Satisfied,
    /// A strict side holds only within the error margin.
    Inconclusive,
    Failed,
    Skipped,
}

impl BoundStatus {
    fn severity(self) -> u8 {
        match self {
            BoundStatus::Skipped => 0,
            BoundStatus::Satisfied => 1,
            BoundStatus::Inconclusive => 2,
            BoundStatus::Failed => 3,
        }
    }

    pub fn worst(self, other: Self) -> Self {
        if other.severity() > self.severity() {
            other
        } else {
            self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub value: f64,
    pub strict_lower: bool,
    pub strict_upper: bool,
    /// Absolute error margin folded into the comparison.
    pub margin: f64,
    pub status: BoundStatus,
    pub satisfied: bool,
    /// Why a report was skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundReport {
    pub fn skipped(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            lower: None,
            upper: None,
            value: f64::NAN,
            strict_lower: false,
            strict_upper: false,
            margin: 0.0,
            status: BoundStatus::Skipped,
            satisfied: false,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

impl BoundInterval {
    pub fn closed(lower: f64, upper: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
            strict_lower: false,
            strict_upper: false,
        }
    }

    pub fn at_least(lower: f64, strict: bool) -> Self {
        Self {
            lower: Some(lower),
            upper: None,
            strict_lower: strict,
            strict_upper: false,
        }
    }

    pub fn at_most(upper: f64, strict: bool) -> Self {
        Self {
            lower: None,
            upper: Some(upper),
            strict_lower: false,
            strict_upper: strict,
        }
    }

    /// Exact membership test, no error margin.
    pub fn contains(&self, v: f64) -> bool {
        let lo = match self.lower {
            None => true,
            Some(l) if self.strict_lower => v > l,
            Some(l) => v >= l,
        };
        let hi = match self.upper {
            None => true,
            Some(u) if self.strict_upper => v < u,
            Some(u) => v <= u,
        };
        lo && hi
    }

    /// Compares `value` (with absolute error `margin`) against the interval.
    /// A non-strict side fails only when violated by more than the margin; a
    /// strict side holds when it survives the margin, is inconclusive when
    /// the boundary lies within the margin, and fails otherwise.
    pub fn evaluate(&self, name: impl Into<String>, value: f64, margin: f64) -> BoundReport {
        let e = margin.abs();
        let mut status = if value.is_finite() {
            BoundStatus::Satisfied
        } else {
            BoundStatus::Failed
        };
        if let Some(l) = self.lower {
            status = status.worst(side_status(value - l, e, self.strict_lower));
        }
        if let Some(u) = self.upper {
            status = status.worst(side_status(u - value, e, self.strict_upper));
        }
        BoundReport {
            name: name.into(),
            lower: self.lower,
            upper: self.upper,
            value,
            strict_lower: self.strict_lower,
            strict_upper: self.strict_upper,
            margin: e,
            status,
            satisfied: status == BoundStatus::Satisfied,
            note: None,
        }
    }
}

// `gap` is the signed distance by which the side holds
fn side_status(gap: f64, e: f64, strict: bool) -> BoundStatus {
    if strict {
        if gap > e {
            BoundStatus::Satisfied
        } else if gap > -e {
            BoundStatus::Inconclusive
        } else {
            BoundStatus::Failed
        }
    } else if gap >= -e {
        BoundStatus::Satisfied
    } else {
        BoundStatus::Failed
    }
}

/// Bounds for `lambda_p^{1/p}` of the unit cube in dimension `d`:
/// `[d^{1/p} pi_p, d^{1/2} pi_p)` for `p > 2`, the reversed sandwich
/// `(d^{1/2} pi_p, d^{1/p} pi_p]` for `p < 2`, equality at `p = 2`.
pub fn cube_bounds(d: usize, p: f64) -> Result<BoundInterval> {
    if d < 2 || !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cube bounds need d >= 2 and 1 < p < inf (d={d}, p={p})"
        )));
    }
    let pp = pi_p_value(p);
    let dd = d as f64;
    let a = dd.powf(1.0 / p) * pp;
    let b = dd.sqrt() * pp;
    Ok(if p > 2.0 {
        BoundInterval {
            lower: Some(a),
            upper: Some(b),
            strict_lower: false,
            strict_upper: true,
        }
    } else if p < 2.0 {
        BoundInterval {
            lower: Some(b),
            upper: Some(a),
            strict_lower: true,
            strict_upper: false,
        }
    } else {
        BoundInterval::closed(b, b)
    })
}

/// Cheeger constant of a `d`-ball of radius `r`: `d / r`.
pub fn ball_cheeger(d: usize, r: f64) -> Result<f64> {
    if d == 0 || !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ball Cheeger needs d >= 1, r > 0 (d={d}, r={r})"
        )));
    }
    Ok(d as f64 / r)
}

/// Surface area of the unit sphere in `R^d`, `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(d: usize) -> f64 {
    let d = d as f64;
    (2f64.ln() + 0.5 * d * PI.ln() - ln_gamma(0.5 * d)).exp()
}

// \int_r^R t^{-(d-1)/(p-1)} dt
fn radial_flux_integral(d: usize, p: f64, r: f64, big_r: f64) -> f64 {
    let a = (p - d as f64) / (p - 1.0);
    if a.abs() < 1e-12 {
        (big_r / r).ln()
    } else {
        (big_r.powf(a) - r.powf(a)) / a
    }
}

/// Relative p-capacity of the closed ball `B_r` in `B_R` (`1 < p <= d`):
/// `|S^{d-1}| ((d-p)/(p-1))^{p-1} (r^{(p-d)/(p-1)} - R^{(p-d)/(p-1)})^{1-p}`,
/// and `|S^{d-1}| ln(R/r)^{1-d}` at `p = d`.
pub fn ball_capacity(d: usize, p: f64, r: f64, big_r: f64) -> Result<f64> {
    if d < 2 || !(p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "capacity needs d >= 2 and p > 1 (d={d}, p={p})"
        )));
    }
    if p > d as f64 {
        return Err(Error::Unsupported(format!("capacity for p > d (p={p}, d={d})")));
    }
    if !(r > 0.0 && r < big_r && big_r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "capacity needs 0 < r < R (r={r}, R={big_r})"
        )));
    }
    Ok(unit_sphere_area(d) * radial_flux_integral(d, p, r, big_r).powf(1.0 - p))
}

/// Critical ratio `a_eps = eps^{-d} r^{d-p}` (`p < d`) or
/// `eps^{-d} (-ln r)^{1-d}` (`p = d`).
pub fn critical_ratio(d: usize, p: f64, eps: f64, r: f64) -> Result<f64> {
    if d < 2 || !(p > 1.0 && p <= d as f64) {
        return Err(Error::InvalidParameter(format!(
            "critical ratio needs d >= 2, 1 < p <= d (d={d}, p={p})"
        )));
    }
    if !(r > 0.0 && r < eps && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "critical ratio needs 0 < r < eps < 1 (r={r}, eps={eps})"
        )));
    }
    let df = d as f64;
    Ok(if p < df {
        eps.powf(-df) * r.powf(df - p)
    } else {
        eps.powf(-df) * (-r.ln()).powf(1.0 - df)
    })
}

/// Lower bound for the mixed annulus eigenvalue `mu_{R,r}` (Dirichlet on the
/// inner sphere, free on the outer):
/// `(\int_r^R t^{d-1})^{-1} (\int_r^R t^{-(d-1)/(p-1)})^{1-p}`, which for
/// `p < d` reads `d/(R^d - r^d) ((d-p)/(p-1))^{p-1} (r^a - R^a)^{1-p}`.
pub fn annulus_mu_lower_bound(d: usize, p: f64, r: f64, big_r: f64) -> Result<f64> {
    if d == 0 || !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mu bound needs d >= 1, 1 < p < inf (d={d}, p={p})"
        )));
    }
    if !(r > 0.0 && r < big_r && big_r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mu bound needs 0 < r < R (r={r}, R={big_r})"
        )));
    }
    let df = d as f64;
    let shell = big_r.powf(df) * (1.0 - (r / big_r).powf(df)) / df;
    Ok(radial_flux_integral(d, p, r, big_r).powf(1.0 - p) / shell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pi_p_closed_forms() {
        assert!((pi_p(Exponent::Finite(2.0)) - PI).abs() < 1e-12);
        assert_eq!(pi_p(Exponent::One), 2.0);
        assert_eq!(pi_p(Exponent::Infinity), 2.0);
        let a = pi_p(Exponent::Finite(4.0));
        let b = pi_p(Exponent::Finite(4.0 / 3.0));
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn pi_p_continuity_at_endpoints() {
        // pi_p(1 + d) = 2 d^{-d} (1 + O(d)), so the gap is about 2 d |ln d|
        for delta in [1e-3f64, 1e-4, 1e-5, 1e-6] {
            let envelope = 2.0 * (delta * delta.ln().abs() + delta);
            let near_one = pi_p_value(1.0 + delta);
            let near_inf = pi_p_value(1.0 / delta);
            assert!((near_one - 2.0).abs() < envelope, "p=1+{delta}: {near_one}");
            assert!((near_inf - 2.0).abs() < envelope, "p=1/{delta}: {near_inf}");
        }
        assert!((pi_p_value(1.0 + 1e-5) - 2.0).abs() < 1e-3);
        assert!((pi_p_value(1e5) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn p_times_pi_p_nondecreasing() {
        let mut prev = pi_p(Exponent::One);
        for k in 1..=60 {
            let p = 1.0 + 0.25 * k as f64;
            let v = p * pi_p_value(p);
            assert!(v >= prev, "p={p}");
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn pi_p_symmetric_under_conjugation(p in 1.0001f64..20.0) {
            let a = pi_p(Exponent::Finite(p));
            let b = pi_p(Exponent::Finite(p).conjugate());
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn cube_bounds_ordered(p in 1.01f64..30.0, d in 2usize..12) {
            let b = cube_bounds(d, p).unwrap();
            prop_assert!(b.lower.unwrap() <= b.upper.unwrap());
        }
    }

    #[test]
    fn exponent_parsing_and_order() {
        assert_eq!("1".parse::<Exponent>().unwrap(), Exponent::One);
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("1.5".parse::<Exponent>().unwrap(), Exponent::Finite(1.5));
        assert!("0.5".parse::<Exponent>().is_err());
        assert!("abc".parse::<Exponent>().is_err());
        assert!(Exponent::One < Exponent::Finite(1.5));
        assert!(Exponent::Finite(1.5) < Exponent::Finite(3.0));
        assert!(Exponent::Finite(1e9) < Exponent::Infinity);
        let json = serde_json::to_string(&[Exponent::One, Exponent::Finite(2.5), Exponent::Infinity]).unwrap();
        assert_eq!(json, "[1.0,2.5,\"inf\"]");
        let back: Vec<Exponent> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Exponent::One, Exponent::Finite(2.5), Exponent::Infinity]);
    }

    #[test]
    fn ball_bound_examples() {
        assert!((ball_upper_bound(2, 2.0, 1.0).unwrap() - 6.0).abs() < 1e-12);
        assert!((ball_upper_bound(1, 2.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(ball_upper_bound(1, 2.0, 1.0).unwrap() >= (PI / 2.0).powi(2));
        // with s = sqrt d: bound^{1/p} / d = (1/sqrt d) (Gamma ratio)^{1/p} -> 1/p
        let p = 3.0;
        let mut prev_gap = f64::INFINITY;
        for d in [100usize, 10_000, 1_000_000] {
            let s = (d as f64).sqrt();
            let v = ball_upper_bound(d, p, s).unwrap().powf(1.0 / p) / d as f64;
            let gap = v - 1.0 / p;
            assert!(gap > 0.0);
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-2);
        assert!(matches!(ball_upper_bound(10, 200.0, 1e6), Err(Error::Overflow(_))));
    }

    #[test]
    fn cube_bound_examples() {
        let b = cube_bounds(2, 4.0).unwrap();
        let p4 = pi_p_value(4.0);
        assert!((b.lower.unwrap() - 2f64.powf(0.25) * p4).abs() < 1e-14);
        assert!((b.upper.unwrap() - 2f64.sqrt() * p4).abs() < 1e-14);
        assert!(!b.strict_lower && b.strict_upper);
        let b = cube_bounds(2, 1.5).unwrap();
        let p15 = pi_p_value(1.5);
        assert!((b.lower.unwrap() - 2f64.sqrt() * p15).abs() < 1e-14);
        assert!((b.upper.unwrap() - 2f64.powf(2.0 / 3.0) * p15).abs() < 1e-14);
        assert!(b.strict_lower && !b.strict_upper);
        let b = cube_bounds(2, 2.0).unwrap();
        assert_eq!(b.lower, b.upper);
        assert!((b.lower.unwrap() - 2f64.sqrt() * PI).abs() < 1e-14);
    }

    #[test]
    fn ball_cheeger_examples() {
        assert_eq!(ball_cheeger(2, 1.0).unwrap(), 2.0);
        assert_eq!(ball_cheeger(3, 3.0).unwrap(), 1.0);
        assert!((ball_cheeger(5, 0.7 * 3.0).unwrap() - ball_cheeger(5, 0.7).unwrap() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn critical_ratio_examples() {
        let a = critical_ratio(2, 1.5, 0.1, 1e-3).unwrap();
        assert!((a - 100.0 * 1e-3f64.sqrt()).abs() < 1e-12);
        for eps in [0.1f64, 0.02, 0.005] {
            let a = critical_ratio(2, 1.5, eps, eps.powi(5)).unwrap();
            assert!((a - eps.sqrt()).abs() < 1e-12 * eps.sqrt().max(1.0));
            let a = critical_ratio(2, 2.0, eps, (-1.0 / eps).exp()).unwrap();
            assert!((a - 1.0 / eps).abs() < 1e-9 / eps);
        }
    }

    #[test]
    fn bound_status_logic() {
        let strict = BoundInterval::at_least(1.0, true);
        assert_eq!(strict.evaluate("s", 1.2, 0.1).status, BoundStatus::Satisfied);
        assert_eq!(strict.evaluate("s", 1.05, 0.1).status, BoundStatus::Inconclusive);
        assert_eq!(strict.evaluate("s", 0.8, 0.1).status, BoundStatus::Failed);
        let loose = BoundInterval::at_least(1.0, false);
        assert_eq!(loose.evaluate("n", 0.95, 0.1).status, BoundStatus::Satisfied);
        assert_eq!(loose.evaluate("n", 0.85, 0.1).status, BoundStatus::Failed);
        assert!(BoundInterval::closed(1.0, 2.0).contains(1.0));
        assert!(!BoundInterval::at_most(1.0, true).contains(1.0));
    }

    /// Independent oracle: Newton minimization of the discretized radial
    /// energy `\int |u'|^p t^{d-1}` with `u(r) = 1`, `u(R) = 0` on a
    /// geometric grid, exact element weights.
    fn capacity_oracle(d: usize, p: f64, r: f64, big_r: f64) -> f64 {
        let n = 4000;
        let q = (big_r / r).powf(1.0 / n as f64);
        let t: Vec<f64> = (0..=n).map(|i| r * q.powi(i as i32)).collect();
        let w: Vec<f64> = (0..n)
            .map(|e| (t[e + 1].powi(d as i32) - t[e].powi(d as i32)) / d as f64)
            .collect();
        let h: Vec<f64> = (0..n).map(|e| t[e + 1] - t[e]).collect();
        let mut u: Vec<f64> = t.iter().map(|&x| (big_r / x).ln() / (big_r / r).ln()).collect();
        let energy = |u: &[f64]| -> f64 { (0..n).map(|e| w[e] * ((u[e + 1] - u[e]) / h[e]).abs().powf(p)).sum() };
        for _ in 0..100 {
            // gradient and tridiagonal Hessian in the interior unknowns
            let mut g = vec![0.0; n + 1];
            let mut diag = vec![0.0; n + 1];
            let mut off = vec![0.0; n + 1];
            for e in 0..n {
                let s = (u[e + 1] - u[e]) / h[e];
                let ge = w[e] * p * s.abs().powf(p - 2.0) * s / h[e];
                let he = w[e] * p * (p - 1.0) * s.abs().powf(p - 2.0) / (h[e] * h[e]);
                g[e] -= ge;
                g[e + 1] += ge;
                diag[e] += he;
                diag[e + 1] += he;
                off[e] -= he;
            }
            let gnorm: f64 = g[1..n].iter().map(|x| x * x).sum::<f64>().sqrt();
            if gnorm < 1e-13 {
                break;
            }
            // Thomas solve on nodes 1..n-1
            let m = n - 1;
            let mut c = vec![0.0; m];
            let mut dvec = vec![0.0; m];
            for k in 0..m {
                let i = k + 1;
                let a = if k > 0 { off[i - 1] } else { 0.0 };
                let denom = diag[i] - if k > 0 { a * c[k - 1] } else { 0.0 };
                c[k] = off[i] / denom;
                dvec[k] = (-g[i] - if k > 0 { a * dvec[k - 1] } else { 0.0 }) / denom;
            }
            let mut step = vec![0.0; m];
            for k in (0..m).rev() {
                step[k] = dvec[k] - if k + 1 < m { c[k] * step[k + 1] } else { 0.0 };
            }
            let e0 = energy(&u);
            let mut alpha = 1.0;
            loop {
                let trial: Vec<f64> = (0..=n)
                    .map(|i| {
                        if i == 0 || i == n {
                            u[i]
                        } else {
                            u[i] + alpha * step[i - 1]
                        }
                    })
                    .collect();
                if energy(&trial) <= e0 || alpha < 1e-8 {
                    u = trial;
                    break;
                }
                alpha *= 0.5;
            }
        }
        unit_sphere_area(d) * energy(&u)
    }

    #[test]
    fn capacity_matches_radial_minimizer() {
        for (d, p, r, big_r) in [
            (2, 2.0, 0.01, 1.0),
            (2, 1.5, 1e-3, 0.1),
            (3, 2.0, 0.2, 1.0),
            (3, 2.5, 0.05, 2.0),
            (3, 3.0, 0.1, 1.0),
            (4, 1.7, 0.3, 0.9),
        ] {
            let exact = ball_capacity(d, p, r, big_r).unwrap();
            let oracle = capacity_oracle(d, p, r, big_r);
            assert!(
                (exact - oracle).abs() < 1e-4 * exact,
                "d={d} p={p}: formula {exact} vs oracle {oracle}"
            );
        }
        let c = ball_capacity(2, 2.0, 0.1, 1.0).unwrap();
        assert!((c - 2.0 * PI / 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn capacity_blows_up_as_annulus_thins() {
        let mut prev = 0.0;
        for gap in [0.5, 0.1, 0.01, 1e-4] {
            let c = ball_capacity(3, 2.0, 1.0 - gap, 1.0).unwrap();
            assert!(c > prev);
            prev = c;
        }
        assert!(prev > 1e4);
        assert!(ball_capacity(2, 2.5, 0.1, 1.0).is_err());
    }

    #[test]
    fn mu_bound_matches_explicit_form() {
        let (d, p, r, big_r) = (2usize, 1.5f64, 1e-3f64, 0.1f64);
        let df = d as f64;
        let a = (p - df) / (p - 1.0);
        let explicit = df / (big_r.powf(df) - r.powf(df))
            * ((df - p) / (p - 1.0)).powf(p - 1.0)
            * (r.powf(a) - big_r.powf(a)).powf(1.0 - p);
        let got = annulus_mu_lower_bound(d, p, r, big_r).unwrap();
        assert!((got - explicit).abs() < 1e-12 * explicit);
        let explicit_log = 2.0 / (1.0 - 0.01f64.powi(2)) / (1.0f64 / 0.01).ln();
        let got = annulus_mu_lower_bound(2, 2.0, 0.01, 1.0).unwrap();
        assert!((got - explicit_log).abs() < 1e-12 * got);
    }
}
