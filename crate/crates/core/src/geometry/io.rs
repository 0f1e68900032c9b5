use std::fmt::Write as _;
use std::path::Path;

use super::{make_perforated_square, ConvexPolygon, Domain, Point};
use crate::error::{Error, Result};

/// Parses the polygon text format: one `x y` pair per line, counterclockwise,
/// `#` starts a comment. Convexity is validated.
pub fn parse_polygon(text: &str) -> Result<ConvexPolygon> {
    let mut pts = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        last_line = line_no;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two coordinates, found {} fields in {line:?}", fields.len()),
            });
        }
        let mut xy = [0.0; 2];
        for (k, f) in fields.iter().enumerate() {
            xy[k] = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("not a finite number: {f:?}"),
                })?;
        }
        pts.push(Point::new(xy[0], xy[1]));
    }
    ConvexPolygon::new(pts).map_err(|e| Error::Parse {
        line: last_line,
        message: e.to_string(),
    })
}

pub fn read_polygon(path: impl AsRef<Path>) -> Result<ConvexPolygon> {
    parse_polygon(&std::fs::read_to_string(path)?)
}

/// A domain from a short inline spec or a file. Inline forms:
/// `square`, `disc` (the 256-gon of circumradius 1), `regular:N`,
/// `rectangle:W:H`, `ball:D[:R]`, `annulus:D:r:R` and `perforated:EPS:R`
/// (the unit square with holes). Anything else is a path: `.json` files hold
/// a serialized domain, other files the polygon text format.
pub fn parse_domain_spec(spec: &str) -> Result<Domain> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let num = |i: usize| -> Result<f64> {
        let s = parts
            .get(i)
            .ok_or_else(|| Error::InvalidDomain(format!("{spec:?} is missing field {i}")))?;
        s.parse()
            .map_err(|_| Error::InvalidDomain(format!("{spec:?}: field {i} ({s:?}) is not a number")))
    };
    let int = |i: usize| -> Result<usize> {
        let s = parts
            .get(i)
            .ok_or_else(|| Error::InvalidDomain(format!("{spec:?} is missing field {i}")))?;
        s.parse()
            .map_err(|_| Error::InvalidDomain(format!("{spec:?}: field {i} ({s:?}) is not an integer")))
    };
    let arity = |n: &[usize]| -> Result<()> {
        if n.contains(&parts.len()) {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("{spec:?} has the wrong number of fields")))
        }
    };
    match parts[0] {
        "square" => {
            arity(&[1])?;
            Ok(Domain::polygon(ConvexPolygon::unit_square()))
        }
        "disc" => {
            arity(&[1])?;
            Ok(Domain::polygon(ConvexPolygon::disc(1.0)?))
        }
        "regular" => {
            arity(&[2])?;
            Ok(Domain::polygon(ConvexPolygon::regular(int(1)?, 1.0)?))
        }
        "rectangle" => {
            arity(&[3])?;
            Domain::rectangle(num(1)?, num(2)?)
        }
        "ball" => {
            arity(&[2, 3])?;
            let r = if parts.len() == 3 { num(2)? } else { 1.0 };
            Domain::ball(int(1)?, r)
        }
        "annulus" => {
            arity(&[4])?;
            Domain::annulus(int(1)?, num(2)?, num(3)?)
        }
        "perforated" => {
            arity(&[3])?;
            make_perforated_square(1.0, num(1)?, num(2)?)
        }
        _ => read_domain(spec),
    }
}

pub fn read_domain(path: impl AsRef<Path>) -> Result<Domain> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let d: Domain = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        d.validate()?;
        Ok(d)
    } else {
        Ok(Domain::polygon(parse_polygon(&text)?))
    }
}

/// Writes the polygon text format with round-trip exact coordinates.
pub fn format_polygon(poly: &ConvexPolygon) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} vertices, counterclockwise", poly.len());
    for v in poly.vertices() {
        let _ = writeln!(s, "{:?} {:?}", v.x, v.y);
    }
    s
}
