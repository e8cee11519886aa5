//! JSON ingestion for space descriptions.
//!
//! ```json
//! {"dim": 2,
//!  "metric": {"kind": "euclidean"},
//!  "domain": {"kind": "full-space", "params": {}},
//!  "measures": [{"id": "w", "kind": "radial-log-singular", "params": {}}],
//!  "e": {"points": [[0, 0]]}}
//! ```
//!
//! Unknown keys and kinds are rejected with the path of the offending field.

use std::collections::HashSet;
use std::sync::Arc;

use serde_json::{Map, Value};

use super::{CantorSet, ESpec, KochGeometry, MeasureKind, MeasureSpec, Metric, Region, SpaceModel};
use crate::error::{Error, Result};

type Obj = Map<String, Value>;

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Obj> {
    v.as_object().ok_or_else(|| Error::schema(path, "expected an object"))
}

fn allow_keys(o: &Obj, path: &str, keys: &[&str]) -> Result<()> {
    for k in o.keys() {
        if !keys.contains(&k.as_str()) {
            return Err(Error::schema(
                format!("{path}.{k}"),
                format!("unknown field (expected one of: {})", keys.join(", ")),
            ));
        }
    }
    Ok(())
}

fn number(o: &Obj, key: &str, path: &str) -> Result<f64> {
    match o.get(key) {
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::schema(format!("{path}.{key}"), "expected a finite number")),
        None => Err(Error::schema(format!("{path}.{key}"), "missing required field")),
    }
}

fn number_or(o: &Obj, key: &str, path: &str, default: f64) -> Result<f64> {
    if o.contains_key(key) {
        number(o, key, path)
    } else {
        Ok(default)
    }
}

fn count_or(o: &Obj, key: &str, path: &str, default: u64) -> Result<u64> {
    match o.get(key) {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Error::schema(format!("{path}.{key}"), "expected a non-negative integer")),
        None => Ok(default),
    }
}

fn point(v: &Value, path: &str, dim: usize) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::schema(path, "expected an array of numbers"))?;
    if arr.len() != dim {
        return Err(Error::schema(path, format!("expected {dim} coordinates, got {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::schema(format!("{path}[{i}]"), "expected a finite number"))
        })
        .collect()
}

fn point_field(o: &Obj, key: &str, path: &str, dim: usize) -> Result<Vec<f64>> {
    let v = o
        .get(key)
        .ok_or_else(|| Error::schema(format!("{path}.{key}"), "missing required field"))?;
    point(v, &format!("{path}.{key}"), dim)
}

fn kind_and_params<'a>(v: &'a Value, path: &str) -> Result<(&'a str, Obj)> {
    let o = object(v, path)?;
    let kind = o
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::schema(format!("{path}.kind"), "missing or not a string"))?;
    let params = match o.get("params") {
        Some(p) => object(p, &format!("{path}.params"))?.clone(),
        None => Obj::new(),
    };
    Ok((kind, params))
}

/// Parses a region descriptor `{kind, params}` for ambient dimension `dim`.
pub fn parse_region(v: &Value, path: &str, dim: usize) -> Result<Region> {
    let o = object(v, path)?;
    allow_keys(o, path, &["kind", "params"])?;
    let (kind, p) = kind_and_params(v, path)?;
    let pp = format!("{path}.params");
    let need_dim = |want: usize| -> Result<()> {
        if dim != want {
            return Err(Error::schema(
                format!("{path}.kind"),
                format!("`{kind}` needs dim = {want}, model has dim = {dim}"),
            ));
        }
        Ok(())
    };
    let region = match kind {
        "full-space" => {
            allow_keys(&p, &pp, &[])?;
            Region::FullSpace
        }
        "box" | "box-boundary" => {
            allow_keys(&p, &pp, &["lo", "hi"])?;
            let lo = point_field(&p, "lo", &pp, dim)?;
            let hi = point_field(&p, "hi", &pp, dim)?;
            if kind == "box" {
                Region::Box { lo, hi }
            } else {
                if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                    return Err(Error::schema(format!("{pp}.hi"), "box-boundary needs lo < hi on every axis"));
                }
                Region::BoxBoundary { lo, hi }
            }
        }
        "ball" => {
            allow_keys(&p, &pp, &["center", "radius"])?;
            let center = point_field(&p, "center", &pp, dim)?;
            let radius = number(&p, "radius", &pp)?;
            if radius <= 0.0 {
                return Err(Error::schema(format!("{pp}.radius"), "must be positive"));
            }
            Region::Ball { center, radius }
        }
        "cusp" => {
            allow_keys(&p, &pp, &["gamma"])?;
            let gamma = number(&p, "gamma", &pp)?;
            if gamma <= 1.0 {
                return Err(Error::schema(format!("{pp}.gamma"), "cusp needs gamma > 1"));
            }
            if dim < 2 {
                return Err(Error::schema(format!("{path}.kind"), "cusp needs dim >= 2"));
            }
            Region::Cusp { gamma }
        }
        "koch-snowflake" | "koch-curve" => {
            need_dim(2)?;
            allow_keys(&p, &pp, &["side", "depth"])?;
            let side = number_or(&p, "side", &pp, 1.0)?;
            let depth = count_or(&p, "depth", &pp, 7)?;
            if side <= 0.0 {
                return Err(Error::schema(format!("{pp}.side"), "must be positive"));
            }
            if depth > 10 {
                return Err(Error::schema(format!("{pp}.depth"), "depth above 10 is not supported"));
            }
            let geom = Arc::new(KochGeometry::new(side, depth as u32));
            if kind == "koch-snowflake" {
                Region::KochSnowflake(geom)
            } else {
                Region::KochCurve(geom)
            }
        }
        "cantor" => {
            need_dim(1)?;
            allow_keys(&p, &pp, &["ratio", "parts", "depth"])?;
            let ratio = number_or(&p, "ratio", &pp, 1.0 / 3.0)?;
            let parts = count_or(&p, "parts", &pp, 2)? as usize;
            let depth = count_or(&p, "depth", &pp, 12)? as u32;
            check_cantor(ratio, parts, &pp)?;
            Region::Cantor(CantorSet { ratio, parts, depth })
        }
        other => {
            return Err(Error::schema(
                format!("{path}.kind"),
                format!(
                    "unknown region kind `{other}` (expected full-space, box, ball, cusp, \
                     koch-snowflake, koch-curve, cantor, box-boundary)"
                ),
            ))
        }
    };
    Ok(region)
}

fn check_cantor(ratio: f64, parts: usize, path: &str) -> Result<()> {
    if parts < 2 {
        return Err(Error::schema(format!("{path}.parts"), "needs at least 2 parts"));
    }
    if !(ratio > 0.0 && ratio * parts as f64 <= 1.0) {
        return Err(Error::schema(format!("{path}.ratio"), "needs 0 < ratio <= 1/parts"));
    }
    Ok(())
}

fn parse_measure(v: &Value, path: &str, dim: usize) -> Result<MeasureSpec> {
    let o = object(v, path)?;
    allow_keys(o, path, &["id", "kind", "params"])?;
    let id = o
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::schema(format!("{path}.id"), "missing or not a string"))?
        .to_string();
    let (kind, p) = kind_and_params(v, path)?;
    let pp = format!("{path}.params");
    let center = |p: &Obj| -> Result<Option<Vec<f64>>> {
        p.get("center").map(|c| point(c, &format!("{pp}.center"), dim)).transpose()
    };
    let axis = |p: &Obj| -> Result<usize> {
        let a = count_or(p, "axis", &pp, 0)? as usize;
        if a >= dim {
            return Err(Error::schema(format!("{pp}.axis"), format!("axis must be < {dim}")));
        }
        Ok(a)
    };
    let kind = match kind {
        "lebesgue" => {
            allow_keys(&p, &pp, &[])?;
            MeasureKind::Lebesgue
        }
        "radial-power" => {
            allow_keys(&p, &pp, &["theta", "center"])?;
            MeasureKind::RadialPower {
                theta: number(&p, "theta", &pp)?,
                center: center(&p)?,
            }
        }
        "radial-log-singular" => {
            allow_keys(&p, &pp, &["center"])?;
            MeasureKind::RadialLogSingular { center: center(&p)? }
        }
        "radial-reciprocal-log" => {
            allow_keys(&p, &pp, &["center"])?;
            MeasureKind::RadialReciprocalLog { center: center(&p)? }
        }
        "hyperplane-weight" => {
            allow_keys(&p, &pp, &["theta", "axis"])?;
            MeasureKind::HyperplaneWeight {
                theta: number(&p, "theta", &pp)?,
                axis: axis(&p)?,
            }
        }
        "axis-power" => {
            allow_keys(&p, &pp, &["exponent", "axis"])?;
            MeasureKind::AxisPower {
                exponent: number(&p, "exponent", &pp)?,
                axis: axis(&p)?,
            }
        }
        "distance-weight" => {
            allow_keys(&p, &pp, &["alpha", "alpha0"])?;
            MeasureKind::DistanceWeight {
                alpha: number(&p, "alpha", &pp)?,
                alpha0: number_or(&p, "alpha0", &pp, 0.0)?,
            }
        }
        "self-similar" => {
            allow_keys(&p, &pp, &["ratio", "parts"])?;
            let ratio = number_or(&p, "ratio", &pp, 1.0 / 3.0)?;
            let parts = count_or(&p, "parts", &pp, 2)? as usize;
            check_cantor(ratio, parts, &pp)?;
            MeasureKind::SelfSimilar { ratio, parts }
        }
        "hausdorff" => {
            allow_keys(&p, &pp, &["support"])?;
            let s = p
                .get("support")
                .ok_or_else(|| Error::schema(format!("{pp}.support"), "missing required field"))?;
            MeasureKind::Hausdorff {
                support: parse_region(s, &format!("{pp}.support"), dim)?,
            }
        }
        other => {
            return Err(Error::schema(
                format!("{path}.kind"),
                format!(
                    "unknown measure kind `{other}` (expected lebesgue, radial-power, radial-log-singular, \
                     radial-reciprocal-log, hyperplane-weight, axis-power, distance-weight, \
                     self-similar, hausdorff)"
                ),
            ))
        }
    };
    Ok(MeasureSpec { id, kind })
}

pub(crate) fn parse_space(v: &Value) -> Result<SpaceModel> {
    let o = object(v, "$")?;
    allow_keys(o, "$", &["dim", "metric", "domain", "measures", "e"])?;
    let dim = o
        .get("dim")
        .and_then(Value::as_u64)
        .filter(|d| *d >= 1)
        .ok_or_else(|| Error::schema("dim", "expected an integer >= 1"))? as usize;

    let metric = match o.get("metric") {
        None => Metric::Euclidean,
        Some(m) => {
            let mo = object(m, "metric")?;
            allow_keys(mo, "metric", &["kind", "exponent"])?;
            match mo.get("kind").and_then(Value::as_str) {
                Some("euclidean") => Metric::Euclidean,
                Some("snowflake") | Some("snowflaked") => Metric::Snowflake {
                    exponent: number(mo, "exponent", "metric")?,
                },
                Some(other) => {
                    return Err(Error::schema(
                        "metric.kind",
                        format!("unknown metric kind `{other}` (expected euclidean, snowflake)"),
                    ))
                }
                None => return Err(Error::schema("metric.kind", "missing or not a string")),
            }
        }
    };

    let domain = match o.get("domain") {
        Some(d) => parse_region(d, "domain", dim)?,
        None => Region::FullSpace,
    };

    let measures = o
        .get("measures")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::schema("measures", "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, m)| parse_measure(m, &format!("measures[{i}]"), dim))
        .collect::<Result<Vec<_>>>()?;

    let e = match o.get("e") {
        None => None,
        Some(ev) => {
            let eo = object(ev, "e")?;
            if let Some(pts) = eo.get("points") {
                allow_keys(eo, "e", &["points"])?;
                let arr = pts.as_array().ok_or_else(|| Error::schema("e.points", "expected an array"))?;
                if arr.is_empty() {
                    return Err(Error::schema("e.points", "must not be empty"));
                }
                let pts = arr
                    .iter()
                    .enumerate()
                    .map(|(i, p)| point(p, &format!("e.points[{i}]"), dim))
                    .collect::<Result<Vec<_>>>()?;
                Some(ESpec::Points(pts))
            } else {
                allow_keys(eo, "e", &["region", "n", "seed"])?;
                let region = parse_region(
                    eo.get("region")
                        .ok_or_else(|| Error::schema("e.region", "expected `points` or `region`"))?,
                    "e.region",
                    dim,
                )?;
                let n = count_or(eo, "n", "e", 32)? as usize;
                if n == 0 {
                    return Err(Error::schema("e.n", "must be at least 1"));
                }
                Some(ESpec::Sampled {
                    region,
                    n,
                    seed: count_or(eo, "seed", "e", 0)?,
                })
            }
        }
    };

    let model = SpaceModel {
        dim,
        metric,
        domain,
        measures,
        e,
    };
    validate_model(&model)?;
    Ok(model)
}

/// Invariants shared by JSON-built and programmatically built models.
pub(crate) fn validate_model(m: &SpaceModel) -> Result<()> {
    if m.dim == 0 {
        return Err(Error::schema("dim", "must be at least 1"));
    }
    if let Metric::Snowflake { exponent } = m.metric {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::schema("metric.exponent", "snowflake exponent must lie in (0, 1]"));
        }
    }
    if let Region::Cusp { gamma } = m.domain {
        if gamma <= 1.0 {
            return Err(Error::schema("domain.params.gamma", "cusp needs gamma > 1"));
        }
    }
    let mut seen = HashSet::new();
    for (i, spec) in m.measures.iter().enumerate() {
        let path = format!("measures[{i}]");
        if !seen.insert(spec.id.as_str()) {
            return Err(Error::schema(format!("{path}.id"), format!("duplicate measure id `{}`", spec.id)));
        }
        let pp = format!("{path}.params");
        match &spec.kind {
            MeasureKind::HyperplaneWeight { theta, .. } if !(*theta > 0.0 && *theta < 1.0) => {
                return Err(Error::schema(format!("{pp}.theta"), "hyperplane weight needs 0 < theta < 1"));
            }
            MeasureKind::RadialPower { theta, .. } if *theta <= -(m.dim as f64) => {
                return Err(Error::schema(
                    format!("{pp}.theta"),
                    "radial power must satisfy theta > -dim to be locally integrable",
                ));
            }
            MeasureKind::RadialReciprocalLog { .. } if m.dim < 2 => {
                return Err(Error::schema(format!("{path}.kind"), "radial-reciprocal-log needs dim >= 2"));
            }
            MeasureKind::DistanceWeight { alpha, alpha0 } => {
                if *alpha <= *alpha0 {
                    return Err(Error::schema(
                        format!("{pp}.alpha"),
                        format!("distance weight needs alpha > alpha0 = {alpha0}"),
                    ));
                }
                if matches!(m.domain, Region::FullSpace) {
                    return Err(Error::schema(format!("{path}.kind"), "distance weight needs a bounded domain"));
                }
            }
            MeasureKind::SelfSimilar { .. } if m.dim != 1 => {
                return Err(Error::schema(format!("{path}.kind"), "self-similar measure needs dim = 1"));
            }
            _ => {}
        }
    }
    Ok(())
}
