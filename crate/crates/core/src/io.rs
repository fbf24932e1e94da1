//! JSON decoders for domains, matrices and points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{BallDomain, Domain, PlanarDomain, QuadricDomain};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::projective::{ProjectiveMap, ProjectivePoint};

/// Largest dimension accepted from external input.
pub const MAX_DIM: usize = 512;
/// Largest planar sample count accepted from external input.
pub const MAX_SAMPLES: usize = 1 << 16;

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn json_err(e: serde_json::Error) -> Error {
    parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string())
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| parse_err(name, "missing field"))
}

fn complex_pair(v: &Value, loc: &str) -> Result<Complex64> {
    let arr = v.as_array().ok_or_else(|| parse_err(loc, "expected [re, im]"))?;
    if arr.len() != 2 {
        return Err(parse_err(loc, format!("expected 2 numbers, got {}", arr.len())));
    }
    let re = arr[0].as_f64().ok_or_else(|| parse_err(format!("{loc}[0]"), "not a number"))?;
    let im = arr[1].as_f64().ok_or_else(|| parse_err(format!("{loc}[1]"), "not a number"))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(parse_err(loc, "non-finite value"));
    }
    Ok(Complex64::new(re, im))
}

fn complex_object(v: &Value, loc: &str) -> Result<Complex64> {
    if v.is_array() {
        return complex_pair(v, loc);
    }
    if let Some(x) = v.as_f64() {
        return Ok(Complex64::new(x, 0.0));
    }
    let obj = v.as_object().ok_or_else(|| parse_err(loc, "expected {\"re\":..,\"im\":..}"))?;
    let get = |k: &str| -> Result<f64> {
        match obj.get(k) {
            None => Ok(0.0),
            Some(x) => x
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(format!("{loc}.{k}"), "not a finite number")),
        }
    };
    if !obj.contains_key("re") && !obj.contains_key("im") {
        return Err(parse_err(loc, "expected keys re/im"));
    }
    Ok(Complex64::new(get("re")?, get("im")?))
}

fn complex_list(v: &Value, name: &str) -> Result<Vec<Complex64>> {
    let arr = v.as_array().ok_or_else(|| parse_err(name, "expected an array of [re, im] pairs"))?;
    arr.iter().enumerate().map(|(i, x)| complex_pair(x, &format!("{name}[{i}]"))).collect()
}

fn square_from_flat(entries: Vec<Complex64>, name: &str) -> Result<CMat> {
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n * n != entries.len() {
        return Err(parse_err(name, format!("{} entries is not a perfect square", entries.len())));
    }
    if n > MAX_DIM {
        return Err(parse_err(name, "matrix too large"));
    }
    Ok(CMat::from_row_slice(n, n, &entries))
}

/// Decodes a domain description.
///
/// ```json
/// {"type": "ball", "dim": 2}
/// {"type": "planar", "boundary": [[1,0],[0,1],...], "tangents": [[0,1],...]}
/// {"type": "quadric", "L": [[1,0]], "Q": [[0.3,0]]}
/// ```
///
/// Quadric matrices are flat row-major lists. Planar tangents are optional
/// and estimated from the samples when absent.
pub fn parse_domain(text: &str) -> Result<Domain> {
    let v: Value = serde_json::from_str(text).map_err(json_err)?;
    domain_from_value(&v)
}

pub fn domain_from_value(v: &Value) -> Result<Domain> {
    let obj = v.as_object().ok_or_else(|| parse_err("$", "expected an object"))?;
    let kind = field(obj, "type")?.as_str().ok_or_else(|| parse_err("type", "expected a string"))?;
    match kind {
        "ball" => {
            let dim = field(obj, "dim")?
                .as_u64()
                .ok_or_else(|| parse_err("dim", "expected a positive integer"))?;
            if dim == 0 || dim as usize > MAX_DIM {
                return Err(parse_err("dim", format!("must be in 1..={MAX_DIM}")));
            }
            Ok(Domain::Ball(BallDomain::new(dim as usize)?))
        }
        "planar" => {
            let boundary = complex_list(field(obj, "boundary")?, "boundary")?;
            if boundary.len() > MAX_SAMPLES {
                return Err(parse_err("boundary", "too many samples"));
            }
            let domain = match obj.get("tangents") {
                Some(t) => {
                    let tangents = complex_list(t, "tangents")?;
                    if tangents.len() != boundary.len() {
                        return Err(parse_err(
                            "tangents",
                            format!("length {} differs from boundary length {}", tangents.len(), boundary.len()),
                        ));
                    }
                    PlanarDomain::new(boundary, tangents)
                }
                None => PlanarDomain::from_points(boundary),
            }
            .map_err(|e| parse_err("boundary", e.to_string()))?;
            domain.check_simple().map_err(|e| parse_err("boundary", e.to_string()))?;
            Ok(Domain::Planar(domain))
        }
        "quadric" => {
            let l = square_from_flat(complex_list(field(obj, "L")?, "L")?, "L")?;
            let q = square_from_flat(complex_list(field(obj, "Q")?, "Q")?, "Q")?;
            if l.nrows() != q.nrows() {
                return Err(parse_err("Q", "size differs from L"));
            }
            QuadricDomain::new(l, q).map(Domain::Quadric).map_err(|e| parse_err("L/Q", e.to_string()))
        }
        other => Err(parse_err("type", format!("unknown domain type `{other}`"))),
    }
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum DomainOut {
    Ball { dim: usize },
    Planar { boundary: Vec<[f64; 2]>, tangents: Vec<[f64; 2]> },
    Quadric {
        #[serde(rename = "L")]
        l: Vec<[f64; 2]>,
        #[serde(rename = "Q")]
        q: Vec<[f64; 2]>,
    },
}

fn pairs<'a>(it: impl IntoIterator<Item = &'a Complex64>) -> Vec<[f64; 2]> {
    it.into_iter().map(|z| [z.re, z.im]).collect()
}

fn row_major(m: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

/// Inverse of [`parse_domain`].
pub fn domain_to_json(domain: &Domain) -> String {
    let out = match domain {
        Domain::Ball(b) => DomainOut::Ball { dim: b.dim() },
        Domain::Planar(p) => DomainOut::Planar { boundary: pairs(p.points()), tangents: pairs(p.tangents()) },
        Domain::Quadric(q) => DomainOut::Quadric { l: row_major(q.l_matrix()), q: row_major(q.q_matrix()) },
    };
    serde_json::to_string(&out).expect("plain data serializes")
}

/// A matrix request: `{"matrix": [[{"re":..,"im":..}, ...], ...], "tol": 1e-8}`.
#[derive(Clone, Debug)]
pub struct MatrixInput {
    pub matrix: CMat,
    pub tol: Option<f64>,
}

pub fn parse_matrix(text: &str) -> Result<MatrixInput> {
    let v: Value = serde_json::from_str(text).map_err(json_err)?;
    let obj = v.as_object().ok_or_else(|| parse_err("$", "expected an object"))?;
    let rows = field(obj, "matrix")?.as_array().ok_or_else(|| parse_err("matrix", "expected an array of rows"))?;
    let n = rows.len();
    if n == 0 || n > MAX_DIM {
        return Err(parse_err("matrix", format!("row count must be in 1..={MAX_DIM}")));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| parse_err(format!("matrix[{i}]"), "expected an array"))?;
        if row.len() != n {
            return Err(parse_err(format!("matrix[{i}]"), format!("expected {n} entries, got {}", row.len())));
        }
        for (j, x) in row.iter().enumerate() {
            entries.push(complex_object(x, &format!("matrix[{i}][{j}]"))?);
        }
    }
    let tol = match obj.get("tol") {
        None | Some(Value::Null) => None,
        Some(t) => {
            let t = t.as_f64().ok_or_else(|| parse_err("tol", "expected a number"))?;
            if !(t > 0.0 && t < 1.0) {
                return Err(parse_err("tol", "must lie in (0, 1)"));
            }
            Some(t)
        }
    };
    Ok(MatrixInput { matrix: CMat::from_row_slice(n, n, &entries), tol })
}

impl MatrixInput {
    pub fn to_map(&self) -> Result<ProjectiveMap> {
        ProjectiveMap::new(self.matrix.clone())
    }
}

/// Parses homogeneous coordinates `[[re, im], ...]`.
pub fn parse_point(text: &str) -> Result<ProjectivePoint> {
    let v: Value = serde_json::from_str(text).map_err(json_err)?;
    point_from_value(&v, "point")
}

pub fn point_from_value(v: &Value, name: &str) -> Result<ProjectivePoint> {
    let coords = complex_list(v, name)?;
    if coords.is_empty() || coords.len() > MAX_DIM + 1 {
        return Err(parse_err(name, "coordinate count out of range"));
    }
    ProjectivePoint::from_slice(&coords).map_err(|e| parse_err(name, e.to_string()))
}

/// Parses a whitespace/comma separated complex number list such as
/// `"1, 0.5+0.2i, -i"` into chart coordinates.
pub fn parse_chart_coords(text: &str) -> Result<Vec<Complex64>> {
    text.split(|c: char| c == ',' || c == ';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, s)| parse_complex(s).ok_or_else(|| parse_err(format!("coordinate {i}"), format!("cannot parse `{s}`"))))
        .collect()
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let finite = |z: Complex64| (z.re.is_finite() && z.im.is_finite()).then_some(z);
    if let Some(body) = s.strip_suffix(['i', 'j']) {
        // Split at the last sign that is not an exponent sign or the leading one.
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let imag = |t: &str| -> Option<f64> {
            match t {
                "" | "+" => Some(1.0),
                "-" => Some(-1.0),
                _ => t.parse().ok(),
            }
        };
        return match split {
            Some(k) => finite(Complex64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
            None => finite(Complex64::new(0.0, imag(body)?)),
        };
    }
    finite(Complex64::new(s.parse().ok()?, 0.0))
}

/// Partial deserialization helper used by report/config code.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(json_err)
}
