//! Doubling constants and the dimension exponents s, sigma, delta fitted from
//! ball measures centred in E.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::log_grid;
use crate::space::{ball_measure_with, BallSpec, EstimateOptions, MeasureEstimate, Metric, Point, SpaceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitDirection {
    /// mu(B(x, r)) >= C' r^s
    LowerBound,
    /// nu(B(x, r)) <= C'' r^sigma
    UpperBound,
    /// nu(B(x, r')) / nu(B(x, r)) <= C (r'/r)^delta
    Decay,
}

impl std::str::FromStr for FitDirection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s" | "lower" | "lower-bound" => Ok(FitDirection::LowerBound),
            "sigma" | "upper" | "upper-bound" => Ok(FitDirection::UpperBound),
            "delta" | "decay" => Ok(FitDirection::Decay),
            other => Err(Error::param("direction", format!("unknown direction `{other}` (s, sigma, delta)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionFit {
    pub direction: FitDirection,
    pub exponent: f64,
    /// Range of per-centre slopes.
    pub exponent_band: [f64; 2],
    /// Range of the constant C in the fitted inequality over the sampled balls.
    pub constant_band: [f64; 2],
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub radius_range: [f64; 2],
    pub centers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    pub constant_estimate: f64,
    /// Propagated absolute uncertainty of the worst ratio.
    pub uncertainty: f64,
    pub worst_ball: BallSpec,
    pub radius_range: [f64; 2],
}

/// One row of the measure table behind a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureRow {
    pub center: Point,
    pub radius: f64,
    pub estimate: MeasureEstimate,
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::param("radii", "must not be empty"));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::param("radii", "every radius must be positive and finite"));
    }
    Ok(())
}

/// mu(B(x, r)) for every (x, r) pair, in centre-major order.
pub fn measure_table(
    space: &SpaceModel,
    measure_id: &str,
    e_sample: &[Point],
    radii: &[f64],
    opts: &EstimateOptions,
) -> Result<Vec<MeasureRow>> {
    check_radii(radii)?;
    if e_sample.is_empty() {
        return Err(Error::param("e_sample", "must not be empty"));
    }
    space.measure(measure_id)?;
    let pairs: Vec<(usize, usize)> = (0..e_sample.len())
        .flat_map(|i| (0..radii.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let ball = BallSpec::new(e_sample[i].clone(), radii[j]);
            let estimate = ball_measure_with(space, measure_id, &ball, opts)?;
            Ok(MeasureRow {
                center: ball.center,
                radius: ball.radius,
                estimate,
            })
        })
        .collect()
}

pub fn write_measure_csv<W: Write>(rows: &[MeasureRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let dim = rows.first().map_or(0, |r| r.center.len());
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.extend(["r", "measure", "error"].map(String::from));
    out.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = row.center.iter().map(|x| format!("{x:.17e}")).collect();
        rec.push(format!("{:.17e}", row.radius));
        rec.push(format!("{:.17e}", row.estimate.value));
        rec.push(format!("{:.17e}", row.estimate.error));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// C = max over sampled (x, r) of mu(B(x, 2r)) / mu(B(x, r)), at least 1.
pub fn doubling_constant(
    space: &SpaceModel,
    measure_id: &str,
    e_sample: &[Point],
    radii: &[f64],
    opts: &EstimateOptions,
) -> Result<DoublingReport> {
    check_radii(radii)?;
    let mut both: Vec<f64> = radii.to_vec();
    both.extend(radii.iter().map(|r| 2.0 * r));
    let rows = measure_table(space, measure_id, e_sample, &both, opts)?;
    let k = both.len();
    let mut best: Option<(f64, f64, BallSpec)> = None;
    for (i, x) in e_sample.iter().enumerate() {
        for j in 0..radii.len() {
            let m1 = &rows[i * k + j].estimate;
            let m2 = &rows[i * k + radii.len() + j].estimate;
            if m1.value <= 0.0 {
                return Err(Error::DegenerateMeasure {
                    center: x.clone(),
                    radius: radii[j],
                });
            }
            let ratio = m2.value / m1.value;
            let unc = ratio * (m1.rel_error() + m2.rel_error());
            if best.as_ref().is_none_or(|b| ratio > b.0) {
                best = Some((ratio, unc, BallSpec::new(x.clone(), radii[j])));
            }
        }
    }
    let (ratio, unc, ball) = best.expect("nonempty sample and radii");
    Ok(DoublingReport {
        constant_estimate: ratio.max(1.0),
        uncertainty: unc,
        worst_ball: ball,
        radius_range: range(radii),
    })
}

fn range(radii: &[f64]) -> [f64; 2] {
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    [lo, hi]
}

/// Least-squares fit of log measure against log r over all centres.
///
/// For s and sigma the fit has one intercept per centre and a shared slope.
/// For delta the slope is fitted through the origin on every radius pair
/// r' < r of the same centre.
pub fn fit_exponents(
    space: &SpaceModel,
    measure_id: &str,
    e_sample: &[Point],
    radii: &[f64],
    direction: FitDirection,
    opts: &EstimateOptions,
) -> Result<DimensionFit> {
    check_radii(radii)?;
    if radii.len() < 8 {
        return Err(Error::param("radii", "need at least 8 radii"));
    }
    let [rmin, rmax] = range(radii);
    if rmax / rmin < 100.0 * (1.0 - 1e-9) {
        return Err(Error::param("radii", "radii must span at least two decades"));
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let rows = measure_table(space, measure_id, e_sample, &sorted, opts)?;
    let k = sorted.len();
    let lr: Vec<f64> = sorted.iter().map(|r| r.ln()).collect();
    let mut curves: Vec<Vec<f64>> = Vec::with_capacity(e_sample.len());
    for (i, x) in e_sample.iter().enumerate() {
        let est: Vec<&MeasureEstimate> = rows[i * k..(i + 1) * k].iter().map(|r| &r.estimate).collect();
        for j in 0..k {
            if est[j].value <= 0.0 {
                return Err(Error::DegenerateMeasure {
                    center: x.clone(),
                    radius: sorted[j],
                });
            }
            if j + 1 < k {
                let slack = est[j].error + est[j + 1].error + 1e-12 * est[j].value;
                if est[j].value > est[j + 1].value + slack {
                    return Err(Error::FitFailure(format!(
                        "measure decreases with radius at centre {x:?}: {:e} at r = {:e} but {:e} at r = {:e}",
                        est[j].value,
                        sorted[j],
                        est[j + 1].value,
                        sorted[j + 1]
                    )));
                }
            }
        }
        curves.push(est.iter().map(|e| e.value.ln()).collect());
    }

    let fit = match direction {
        FitDirection::LowerBound | FitDirection::UpperBound => fixed_effects(&lr, &curves),
        FitDirection::Decay => through_origin(&lr, &curves),
    }
    .ok_or_else(|| Error::FitFailure("degenerate radius grid".into()))?;

    Ok(DimensionFit {
        direction,
        exponent: fit.slope,
        exponent_band: fit.slope_band,
        constant_band: fit.constant_band,
        residual: fit.residual,
        radius_range: [rmin, rmax],
        centers: e_sample.len(),
    })
}

struct Fit {
    slope: f64,
    slope_band: [f64; 2],
    constant_band: [f64; 2],
    residual: f64,
}

fn fixed_effects(lr: &[f64], curves: &[Vec<f64>]) -> Option<Fit> {
    let k = lr.len() as f64;
    let mx = lr.iter().sum::<f64>() / k;
    let sxx: f64 = lr.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let mut sxy = 0.0;
    let mut band = [f64::INFINITY, f64::NEG_INFINITY];
    for c in curves {
        let my = c.iter().sum::<f64>() / k;
        let s: f64 = lr.iter().zip(c).map(|(x, y)| (x - mx) * (y - my)).sum();
        sxy += s;
        band = [band[0].min(s / sxx), band[1].max(s / sxx)];
    }
    let slope = sxy / (sxx * curves.len() as f64);
    let mut ss = 0.0;
    let mut cband = [f64::INFINITY, f64::NEG_INFINITY];
    for c in curves {
        let my = c.iter().sum::<f64>() / k;
        let icpt = my - slope * mx;
        for (x, y) in lr.iter().zip(c) {
            ss += (y - icpt - slope * x).powi(2);
            let cst = (y - slope * x).exp();
            cband = [cband[0].min(cst), cband[1].max(cst)];
        }
    }
    Some(Fit {
        slope,
        slope_band: band,
        constant_band: cband,
        residual: (ss / (k * curves.len() as f64)).sqrt(),
    })
}

fn through_origin(lr: &[f64], curves: &[Vec<f64>]) -> Option<Fit> {
    let mut sxx_all = 0.0;
    let mut sxy_all = 0.0;
    let mut band = [f64::INFINITY, f64::NEG_INFINITY];
    for c in curves {
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for a in 0..lr.len() {
            for b in a + 1..lr.len() {
                let x = lr[a] - lr[b];
                let y = c[a] - c[b];
                sxx += x * x;
                sxy += x * y;
            }
        }
        if sxx <= 0.0 {
            return None;
        }
        band = [band[0].min(sxy / sxx), band[1].max(sxy / sxx)];
        sxx_all += sxx;
        sxy_all += sxy;
    }
    let slope = sxy_all / sxx_all;
    let mut ss = 0.0;
    let mut n = 0.0;
    let mut cband = [f64::INFINITY, f64::NEG_INFINITY];
    for c in curves {
        for a in 0..lr.len() {
            for b in a + 1..lr.len() {
                let x = lr[a] - lr[b];
                let y = c[a] - c[b];
                ss += (y - slope * x).powi(2);
                n += 1.0;
                let cst = (y - slope * x).exp();
                cband = [cband[0].min(cst), cband[1].max(cst)];
            }
        }
    }
    Some(Fit {
        slope,
        slope_band: band,
        constant_band: cband,
        residual: (ss / n).sqrt(),
    })
}

/// Largest pairwise distance; falls back to the bounding-box diagonal for
/// large samples.
pub fn diameter(points: &[Point], metric: Metric) -> f64 {
    if points.len() <= 4096 {
        let mut d: f64 = 0.0;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                d = d.max(metric.distance(a, b));
            }
        }
        return d;
    }
    let dim = points[0].len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points {
        for i in 0..dim {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    metric.distance(&lo, &hi)
}

/// 16 radii from diam/10 down to diam/10^4; a single-point E uses diam = 1.
pub fn default_radii(e_sample: &[Point], metric: Metric) -> Vec<f64> {
    let d = diameter(e_sample, metric);
    let d = if d > 0.0 { d } else { 1.0 };
    log_grid(1e-1 * d, 1e-4 * d, 16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{MeasureKind, MeasureSpec};

    fn lebesgue(dim: usize) -> SpaceModel {
        SpaceModel::euclidean(
            dim,
            vec![MeasureSpec {
                id: "m".into(),
                kind: MeasureKind::Lebesgue,
            }],
        )
        .unwrap()
    }

    #[test]
    fn lebesgue_plane_doubles_by_four() {
        let s = lebesgue(2);
        let e = vec![vec![0.1, 0.2], vec![0.5, 0.5]];
        let rep = doubling_constant(&s, "m", &e, &[0.01, 0.1], &EstimateOptions::default()).unwrap();
        assert!((rep.constant_estimate - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_measure_ball_is_degenerate() {
        let s = SpaceModel::from_json_str(
            r#"{"dim":1,"measures":[{"id":"c","kind":"self-similar"}]}"#,
        )
        .unwrap();
        // (0.4, 0.6) lies in the middle gap
        let err = doubling_constant(&s, "c", &[vec![0.5]], &[0.1], &EstimateOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateMeasure { .. }));
    }

    #[test]
    fn fit_needs_two_decades() {
        let s = lebesgue(1);
        let radii = log_grid(0.1, 0.01, 10);
        let err = fit_exponents(&s, "m", &[vec![0.0]], &radii, FitDirection::LowerBound, &Default::default());
        assert!(matches!(err, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn exact_power_law_has_zero_residual() {
        let s = lebesgue(3);
        let radii = log_grid(1e-1, 1e-4, 12);
        let f = fit_exponents(&s, "m", &[vec![0.0; 3]], &radii, FitDirection::UpperBound, &Default::default())
            .unwrap();
        assert!((f.exponent - 3.0).abs() < 1e-10);
        assert!(f.residual < 1e-10);
        let v = 4.0 * std::f64::consts::PI / 3.0;
        assert!((f.constant_band[0] - v).abs() < 1e-9 && (f.constant_band[1] - v).abs() < 1e-9);
    }
}
