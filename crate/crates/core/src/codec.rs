//! Canonical JSON encodings shared between the library and the CLI.
//!
//! Schemas:
//! - polygon: `{"slopes": [[num, den, mult], ...]}` with `num/den` coprime,
//!   `den > 0`, slopes strictly increasing;
//! - ring header: `{"p", "m", "precision", "defining_poly": [c0..cm]}`;
//! - element: array of `m` integers (power-basis coefficients mod `p^N`);
//! - matrix: `{"entries": [elem, ...]}` row-major, plus `{"twist": a}` when
//!   it carries a Frobenius twist;
//! - crystal: `{"p","r","m","precision","a","defining_poly","d","blocks"}`;
//! - group data: `{"nu": [[num,den],...], "mu": [...], "j", "r"}`;
//! - deformation type: `{"d","r","f","K"}` plus optional ring header fields.
//!
//! Integers are emitted as JSON numbers (arbitrary precision); decimal
//! strings are also accepted on input.

use crate::crystal::{ObCrystal, TypeDF};
use crate::error::{Error, Result};
use crate::hodge_newton::{HNDecomposition, VerificationReport};
use crate::kottwitz::GroupData;
use crate::polygon::{LatticePoint, Polygon, Rat};
use crate::semilinear::{Mat, SigmaMatrix};
use crate::witt::{WittElem, WittRing};
use num::bigint::BigInt;
use num::ToPrimitive;
use serde_json::{json, Map, Number, Value};
use std::str::FromStr;
use std::sync::Arc;

fn bigint_to_value(x: &BigInt) -> Value {
    if let Some(i) = x.to_i64() {
        Value::from(i)
    } else {
        Value::Number(Number::from_string_unchecked(x.to_string()))
    }
}

fn value_to_bigint(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => {
            BigInt::from_str(&n.to_string()).map_err(|e| Error::parse(format!("bad integer: {e}")))
        }
        Value::String(s) => {
            BigInt::from_str(s).map_err(|e| Error::parse(format!("bad integer string: {e}")))
        }
        _ => Err(Error::parse("expected an integer")),
    }
}

fn value_to_u64(v: &Value) -> Result<u64> {
    value_to_bigint(v)?
        .to_u64()
        .ok_or_else(|| Error::parse("expected a small nonnegative integer"))
}

fn value_to_usize(v: &Value) -> Result<usize> {
    Ok(value_to_u64(v)? as usize)
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::parse(format!("missing field `{key}`")))
}

fn as_object(v: &Value) -> Result<&Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::parse("expected a JSON object"))
}

fn as_array(v: &Value) -> Result<&Vec<Value>> {
    v.as_array().ok_or_else(|| Error::parse("expected a JSON array"))
}

// ---- rationals and polygons ----

pub fn rational_to_json(r: &Rat) -> Value {
    Value::Array(vec![bigint_to_value(r.numer()), bigint_to_value(r.denom())])
}

pub fn rational_from_json(v: &Value) -> Result<Rat> {
    let arr = as_array(v)?;
    if arr.len() != 2 {
        return Err(Error::parse("rational must be [num, den]"));
    }
    let num = value_to_bigint(&arr[0])?;
    let den = value_to_bigint(&arr[1])?;
    if den.to_u64() == Some(0) || den == BigInt::from(0) {
        return Err(Error::parse("rational denominator must be nonzero"));
    }
    Ok(Rat::new(num, den))
}

pub fn polygon_to_json(p: &Polygon) -> Value {
    let slopes: Vec<Value> = p
        .segments()
        .iter()
        .map(|(s, m)| {
            Value::Array(vec![
                bigint_to_value(s.numer()),
                bigint_to_value(s.denom()),
                Value::from(*m),
            ])
        })
        .collect();
    json!({ "slopes": slopes })
}

pub fn polygon_from_json(v: &Value) -> Result<Polygon> {
    let obj = as_object(v)?;
    let slopes = as_array(get(obj, "slopes")?)?;
    let mut pairs = Vec::with_capacity(slopes.len());
    for entry in slopes {
        let arr = as_array(entry)?;
        if arr.len() != 3 {
            return Err(Error::parse("slope entry must be [num, den, mult]"));
        }
        let num = value_to_bigint(&arr[0])?;
        let den = value_to_bigint(&arr[1])?;
        let mult = value_to_u64(&arr[2])?;
        if den == BigInt::from(0) {
            return Err(Error::parse("slope denominator must be nonzero"));
        }
        pairs.push((Rat::new(num, den), mult));
    }
    Polygon::from_segments(pairs)
}

pub fn lattice_point_to_json(x: &LatticePoint) -> Value {
    json!({ "x1": x.x1, "x2": rational_to_json(&x.x2) })
}

// ---- rings, elements, matrices ----

pub fn ring_header_to_json(r: &WittRing) -> Value {
    json!({
        "p": r.p(),
        "m": r.degree(),
        "precision": r.precision(),
        "defining_poly": r.defining_poly().iter().map(bigint_to_value).collect::<Vec<_>>(),
    })
}

pub fn ring_from_json(v: &Value) -> Result<Arc<WittRing>> {
    let obj = as_object(v)?;
    let p = value_to_u64(get(obj, "p")?)?;
    let m = value_to_usize(get(obj, "m")?)?;
    let precision = value_to_u64(get(obj, "precision")?)? as u32;
    let poly = as_array(get(obj, "defining_poly")?)?
        .iter()
        .map(value_to_bigint)
        .collect::<Result<Vec<_>>>()?;
    WittRing::new(p, m, precision, poly)
}

pub fn elem_to_json(e: &WittElem) -> Value {
    Value::Array(e.coeffs().iter().map(bigint_to_value).collect())
}

pub fn elem_from_json(ring: &Arc<WittRing>, v: &Value) -> Result<WittElem> {
    let arr = as_array(v)?;
    let coeffs = arr.iter().map(value_to_bigint).collect::<Result<Vec<_>>>()?;
    ring.from_coeffs(coeffs)
}

pub fn mat_to_json(m: &Mat) -> Value {
    let entries: Vec<Value> = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| elem_to_json(m.get(i, j))))
        .collect();
    json!({ "rows": m.nrows(), "cols": m.ncols(), "entries": entries })
}

pub fn sigma_matrix_to_json(f: &SigmaMatrix) -> Value {
    let mut v = mat_to_json(&f.mat);
    v.as_object_mut()
        .unwrap()
        .insert("twist".into(), Value::from(f.twist));
    v
}

pub fn mat_from_json(ring: &Arc<WittRing>, v: &Value, nrows: usize, ncols: usize) -> Result<Mat> {
    let obj = as_object(v)?;
    let entries = as_array(get(obj, "entries")?)?;
    if entries.len() != nrows * ncols {
        return Err(Error::parse(format!(
            "matrix needs {} entries, found {}",
            nrows * ncols,
            entries.len()
        )));
    }
    let mut m = Mat::zero(ring.clone(), nrows, ncols);
    for i in 0..nrows {
        for j in 0..ncols {
            m.set(i, j, elem_from_json(ring, &entries[i * ncols + j])?);
        }
    }
    Ok(m)
}

// ---- crystals ----

pub fn crystal_to_json(c: &ObCrystal) -> Value {
    let ring = c.ring();
    json!({
        "p": ring.p(),
        "r": c.block_count(),
        "m": ring.degree(),
        "precision": ring.precision(),
        "a": c.twist(),
        "defining_poly": ring.defining_poly().iter().map(bigint_to_value).collect::<Vec<_>>(),
        "d": c.block_rank(),
        "blocks": c.blocks().iter().map(mat_to_json).collect::<Vec<_>>(),
    })
}

pub fn crystal_from_json(v: &Value) -> Result<ObCrystal> {
    let obj = as_object(v)?;
    let p = value_to_u64(get(obj, "p")?)?;
    let r = value_to_usize(get(obj, "r")?)?;
    let m = value_to_usize(get(obj, "m")?)?;
    let precision = value_to_u64(get(obj, "precision")?)? as u32;
    let twist = match obj.get("a") {
        Some(a) => value_to_u64(a)? as u32,
        None => 1,
    };
    let d = value_to_usize(get(obj, "d")?)?;
    let poly = as_array(get(obj, "defining_poly")?)?
        .iter()
        .map(value_to_bigint)
        .collect::<Result<Vec<_>>>()?;
    let ring = WittRing::new(p, m, precision, poly)?;
    let blocks_json = as_array(get(obj, "blocks")?)?;
    if blocks_json.len() != r {
        return Err(Error::parse(format!(
            "crystal declares r={r} but has {} blocks",
            blocks_json.len()
        )));
    }
    let blocks = blocks_json
        .iter()
        .map(|b| mat_from_json(&ring, b, d, d))
        .collect::<Result<Vec<_>>>()?;
    ObCrystal::new(ring, twist, blocks)
}

// ---- group data ----

pub fn group_data_to_json(g: &GroupData) -> Value {
    json!({
        "nu": g.nu.iter().map(rational_to_json).collect::<Vec<_>>(),
        "mu": g.mu.iter().map(rational_to_json).collect::<Vec<_>>(),
        "j": g.j,
        "r": g.res_degree,
    })
}

pub fn group_data_from_json(v: &Value) -> Result<GroupData> {
    let obj = as_object(v)?;
    let nu = as_array(get(obj, "nu")?)?
        .iter()
        .map(rational_from_json)
        .collect::<Result<Vec<_>>>()?;
    let mu = as_array(get(obj, "mu")?)?
        .iter()
        .map(rational_from_json)
        .collect::<Result<Vec<_>>>()?;
    let j = value_to_usize(get(obj, "j")?)?;
    let r = match obj.get("r") {
        Some(v) => value_to_usize(v)?,
        None => 1,
    };
    GroupData::new(nu, mu, j, r)
}

// ---- deformation input ----

pub struct DeformJob {
    pub type_df: TypeDF,
    pub max_degree: u32,
    pub p: u64,
    pub m: usize,
    pub precision: u32,
    pub defining_poly: Option<Vec<BigInt>>,
}

pub fn deform_job_from_json(v: &Value) -> Result<DeformJob> {
    let obj = as_object(v)?;
    let d = value_to_usize(get(obj, "d")?)?;
    let r = value_to_usize(get(obj, "r")?)?;
    let f = as_array(get(obj, "f")?)?
        .iter()
        .map(value_to_usize)
        .collect::<Result<Vec<_>>>()?;
    let type_df = TypeDF::new(d, r, f)?;
    let max_degree = match obj.get("K") {
        Some(v) => value_to_u64(v)? as u32,
        None => 3,
    };
    let p = match obj.get("p") {
        Some(v) => value_to_u64(v)?,
        None => 3,
    };
    let m = match obj.get("m") {
        Some(v) => value_to_usize(v)?,
        None => r,
    };
    let precision = match obj.get("precision") {
        Some(v) => value_to_u64(v)? as u32,
        None => 16,
    };
    let defining_poly = match obj.get("defining_poly") {
        Some(v) => Some(
            as_array(v)?
                .iter()
                .map(value_to_bigint)
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    Ok(DeformJob {
        type_df,
        max_degree,
        p,
        m,
        precision,
        defining_poly,
    })
}

// ---- reports ----

pub fn report_to_json(r: &VerificationReport) -> Value {
    Value::Array(
        r.checks
            .iter()
            .map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail }))
            .collect(),
    )
}

pub fn decomposition_to_json(d: &HNDecomposition) -> Result<Value> {
    Ok(json!({
        "point": lattice_point_to_json(&d.point),
        "sub_bases": d.sub_bases.iter().map(mat_to_json).collect::<Vec<_>>(),
        "quotient_bases": d.quotient_bases.iter().map(mat_to_json).collect::<Vec<_>>(),
        "low": {
            "crystal": crystal_to_json(&d.c1),
            "newton": polygon_to_json(&d.c1.newton()?),
            "sigma_hodge": polygon_to_json(&d.c1.sigma_hodge()?),
        },
        "high": {
            "crystal": crystal_to_json(&d.c2),
            "newton": polygon_to_json(&d.c2.newton()?),
            "sigma_hodge": polygon_to_json(&d.c2.sigma_hodge()?),
        },
        "verification": report_to_json(&d.report),
    }))
}
