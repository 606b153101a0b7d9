//! JSON body files: `{"dim": n, "type": ..., "data": ...}`.

use crate::body::{ConvexBody, Primary, Shape};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Serialize, Deserialize)]
struct Halfspace {
    a: Vec<f64>,
    b: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EllipsoidData {
    center: Vec<f64>,
    shape: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CylinderData {
    k: usize,
    half_height: f64,
    map: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BodyFile {
    dim: usize,
    #[serde(rename = "type")]
    kind: String,
    data: Value,
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], n: usize) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("expected a {n}x{n} matrix")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(v: &[f64], n: usize) -> Result<Vector> {
    if v.len() != n {
        return Err(Error::Parse(format!("expected a vector of length {n}, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse("non-finite coordinate".into()));
    }
    Ok(Vector::from_column_slice(v))
}

pub fn to_value(body: &ConvexBody) -> Value {
    let data = match body.shape() {
        Shape::Polytope(p) => match p.primary() {
            Primary::Vertices => json!(p.vertices().iter().map(|v| v.as_slice().to_vec()).collect::<Vec<_>>()),
            Primary::Halfspaces => json!(p
                .normals()
                .iter()
                .zip(p.offsets())
                .map(|(a, &b)| Halfspace { a: a.as_slice().to_vec(), b })
                .collect::<Vec<_>>()),
        },
        Shape::Ellipsoid(e) => json!(EllipsoidData { center: e.center().as_slice().to_vec(), shape: rows(e.shape()) }),
        Shape::Cylinder(c) => json!(CylinderData { k: c.k(), half_height: c.half_height(), map: rows(c.map()) }),
    };
    json!(BodyFile { dim: body.dim(), kind: body.kind().to_string(), data })
}

pub fn to_string(body: &ConvexBody) -> String {
    serde_json::to_string_pretty(&to_value(body)).expect("body serializes")
}

pub fn from_value(v: Value) -> Result<ConvexBody> {
    let f: BodyFile = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
    let n = f.dim;
    if n == 0 {
        return Err(Error::Parse("dim must be positive".into()));
    }
    let parse = |e: serde_json::Error| Error::Parse(e.to_string());
    match f.kind.as_str() {
        "vpolytope" => {
            let pts: Vec<Vec<f64>> = serde_json::from_value(f.data).map_err(parse)?;
            let pts = pts.iter().map(|p| vector(p, n)).collect::<Result<Vec<_>>>()?;
            ConvexBody::from_vertices(&pts)
        }
        "hpolytope" => {
            let hs: Vec<Halfspace> = serde_json::from_value(f.data).map_err(parse)?;
            let normals = hs.iter().map(|h| vector(&h.a, n)).collect::<Result<Vec<_>>>()?;
            let offsets: Vec<f64> = hs.iter().map(|h| h.b).collect();
            ConvexBody::from_halfspaces(&normals, &offsets)
        }
        "ellipsoid" => {
            let e: EllipsoidData = serde_json::from_value(f.data).map_err(parse)?;
            ConvexBody::ellipsoid(vector(&e.center, n)?, matrix(&e.shape, n)?)
        }
        "cylinder" => {
            let c: CylinderData = serde_json::from_value(f.data).map_err(parse)?;
            if c.k + 1 != n {
                return Err(Error::Parse("cylinder needs dim = k + 1".into()));
            }
            ConvexBody::cylinder(c.k, c.half_height)?.linear_image(&matrix(&c.map, n)?)
        }
        other => Err(Error::Parse(format!("unknown body type {other:?}"))),
    }
}

pub fn from_str(s: &str) -> Result<ConvexBody> {
    let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    from_value(v)
}

pub fn read_body(path: &std::path::Path) -> Result<ConvexBody> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    from_str(&s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_byte_stable() {
        let s = r#"{"dim":2,"type":"vpolytope","data":[[1,0],[0,1],[0,0],[0.2,0.2]]}"#;
        let b = from_str(s).unwrap();
        let out = to_string(&b);
        assert_eq!(to_string(&from_str(&out).unwrap()), out);
        assert!(out.contains("vpolytope"));
        let h = r#"{"dim":2,"type":"hpolytope","data":[{"a":[1,0],"b":1},{"a":[-1,0],"b":1},{"a":[0,1],"b":1},{"a":[0,-1],"b":1}]}"#;
        let c = from_str(h).unwrap();
        assert_eq!(c.as_polytope().unwrap().n_vertices(), 4);
        let e = r#"{"dim":2,"type":"ellipsoid","data":{"center":[0,0],"shape":[[4,0],[0,1]]}}"#;
        assert!((from_str(e).unwrap().volume().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(from_str("{"), Err(Error::Parse(_))));
        assert!(matches!(from_str(r#"{"dim":2,"type":"blob","data":[]}"#), Err(Error::Parse(_))));
        assert!(matches!(from_str(r#"{"dim":2,"type":"vpolytope","data":[[1,2,3]]}"#), Err(Error::Parse(_))));
    }
}
