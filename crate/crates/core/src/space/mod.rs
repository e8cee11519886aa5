//! Metric measure spaces: a metric on R^n, a domain region and a catalogue
//! of named measures with ball-measure oracles.

mod boundary;
pub mod koch;
mod measure;
mod montecarlo;
mod sampling;
pub mod schema;
pub mod selfsimilar;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::euclid;

pub use boundary::distance_to_boundary;
pub use koch::KochGeometry;
pub use measure::{ball_measure, ball_measure_with, cusp_chunk_measure, cusp_slab_measure};
pub use sampling::sample_region;
pub use selfsimilar::{koch_dimension, CantorSet, KochCurveMeasure};

pub type Point = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    /// |x - y|^exponent with exponent in (0, 1].
    Snowflake { exponent: f64 },
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.from_euclidean(euclid(a, b))
    }

    pub fn from_euclidean(&self, d: f64) -> f64 {
        match *self {
            Metric::Euclidean => d,
            Metric::Snowflake { exponent } => d.powf(exponent),
        }
    }

    /// Euclidean radius of a metric ball of radius `r`.
    pub fn euclidean_radius(&self, r: f64) -> f64 {
        match *self {
            Metric::Euclidean => r,
            Metric::Snowflake { exponent } => r.powf(1.0 / exponent),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Region {
    FullSpace,
    /// Closed box; `lo[i] == hi[i]` gives a flat box of lower dimension.
    Box { lo: Point, hi: Point },
    Ball { center: Point, radius: f64 },
    /// {(x', t) : |x'| < t^gamma < 1}.
    Cusp { gamma: f64 },
    KochSnowflake(Arc<KochGeometry>),
    /// The boundary curve of the snowflake.
    KochCurve(Arc<KochGeometry>),
    Cantor(CantorSet),
    BoxBoundary { lo: Point, hi: Point },
}

impl Region {
    pub fn kind(&self) -> &'static str {
        match self {
            Region::FullSpace => "full-space",
            Region::Box { .. } => "box",
            Region::Ball { .. } => "ball",
            Region::Cusp { .. } => "cusp",
            Region::KochSnowflake(_) => "koch-snowflake",
            Region::KochCurve(_) => "koch-curve",
            Region::Cantor(_) => "cantor",
            Region::BoxBoundary { .. } => "box-boundary",
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::FullSpace => true,
            Region::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b),
            Region::Ball { center, radius } => euclid(x, center) < *radius,
            Region::Cusp { gamma } => {
                let n = x.len();
                let t = x[n - 1];
                if t <= 0.0 {
                    return false;
                }
                let h = t.powf(*gamma);
                crate::numerics::norm(&x[..n - 1]) < h && h < 1.0
            }
            Region::KochSnowflake(k) => k.contains([x[0], x[1]]),
            Region::KochCurve(k) => k.distance_to_polyline([x[0], x[1]]) <= k.approximation_error(),
            Region::Cantor(c) => c.contains(x[0]),
            Region::BoxBoundary { lo, hi } => {
                let scale = 1e-12 * (1.0 + crate::numerics::norm(hi));
                let inside = x
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(v, (a, b))| *a - scale <= *v && *v <= *b + scale);
                let on_face = x
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .any(|(v, (a, b))| (*v - *a).abs() <= scale || (*v - *b).abs() <= scale);
                inside && on_face
            }
        }
    }

    /// Axis-aligned box containing the region, or `None` if unbounded.
    pub fn bounding_box(&self, dim: usize) -> Option<(Point, Point)> {
        match self {
            Region::FullSpace => None,
            Region::Box { lo, hi } | Region::BoxBoundary { lo, hi } => Some((lo.clone(), hi.clone())),
            Region::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Region::Cusp { .. } => {
                let mut lo = vec![-1.0; dim];
                let mut hi = vec![1.0; dim];
                lo[dim - 1] = 0.0;
                hi[dim - 1] = 1.0;
                Some((lo, hi))
            }
            Region::KochSnowflake(k) | Region::KochCurve(k) => {
                let r = k.circumradius();
                Some((vec![-r, -r], vec![r, r]))
            }
            Region::Cantor(_) => Some((vec![0.0], vec![1.0])),
        }
    }

    /// True when the open ball B(c, r) (Euclidean) lies inside the region.
    pub(crate) fn contains_ball(&self, c: &[f64], r: f64) -> bool {
        match self {
            Region::FullSpace => true,
            Region::Box { lo, hi } => c
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v - r >= *a && *v + r <= *b),
            Region::Ball { center, radius } => euclid(c, center) + r <= *radius,
            _ => false,
        }
    }

    /// Hausdorff dimension of the region as a subset of R^dim.
    pub fn dimension(&self, dim: usize) -> f64 {
        match self {
            Region::Box { lo, hi } => lo.iter().zip(hi).filter(|(a, b)| b > a).count() as f64,
            Region::KochCurve(_) => koch_dimension(),
            Region::Cantor(c) => c.dimension(),
            Region::BoxBoundary { .. } => dim as f64 - 1.0,
            _ => dim as f64,
        }
    }
}

/// The non-negative weight or support defining a measure.
#[derive(Debug, Clone)]
pub enum MeasureKind {
    Lebesgue,
    /// |x - c|^theta.
    RadialPower { theta: f64, center: Option<Point> },
    /// w(rho) = rho log(1/rho) for rho < 1/2, (1/2) log 2 beyond.
    RadialLogSingular { center: Option<Point> },
    /// 1 / w(rho) with w as above.
    RadialReciprocalLog { center: Option<Point> },
    /// |x_axis|^(-theta), 0 < theta < 1.
    HyperplaneWeight { theta: f64, axis: usize },
    /// |x_axis|^exponent.
    AxisPower { exponent: f64, axis: usize },
    /// dist(x, complement of the domain)^alpha restricted to the domain.
    DistanceWeight { alpha: f64, alpha0: f64 },
    /// Natural probability measure of a Cantor set on [0, 1].
    SelfSimilar { ratio: f64, parts: usize },
    /// Hausdorff measure of the support's own dimension.
    Hausdorff { support: Region },
}

impl MeasureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::Lebesgue => "lebesgue",
            MeasureKind::RadialPower { .. } => "radial-power",
            MeasureKind::RadialLogSingular { .. } => "radial-log-singular",
            MeasureKind::RadialReciprocalLog { .. } => "radial-reciprocal-log",
            MeasureKind::HyperplaneWeight { .. } => "hyperplane-weight",
            MeasureKind::AxisPower { .. } => "axis-power",
            MeasureKind::DistanceWeight { .. } => "distance-weight",
            MeasureKind::SelfSimilar { .. } => "self-similar",
            MeasureKind::Hausdorff { .. } => "hausdorff",
        }
    }

    /// Density with respect to Lebesgue measure, for absolutely continuous
    /// kinds. Does not apply the domain indicator.
    pub(crate) fn density(&self, space: &SpaceModel, x: &[f64]) -> Option<f64> {
        let origin = |c: &Option<Point>| match c {
            Some(c) => euclid(x, c),
            None => crate::numerics::norm(x),
        };
        Some(match self {
            MeasureKind::Lebesgue => 1.0,
            MeasureKind::RadialPower { theta, center } => origin(center).powf(*theta),
            MeasureKind::RadialLogSingular { center } => RadialProfile::LogSingular.weight(origin(center)),
            MeasureKind::RadialReciprocalLog { center } => RadialProfile::ReciprocalLog.weight(origin(center)),
            MeasureKind::HyperplaneWeight { theta, axis } => x[*axis].abs().powf(-theta),
            MeasureKind::AxisPower { exponent, axis } => x[*axis].abs().powf(*exponent),
            MeasureKind::DistanceWeight { alpha, .. } => match distance_to_boundary(space, x) {
                Ok(d) => d.powf(*alpha),
                Err(_) => 0.0,
            },
            MeasureKind::SelfSimilar { .. } | MeasureKind::Hausdorff { .. } => return None,
        })
    }
}

/// Radial weight profiles with closed-form masses of centred balls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RadialProfile {
    Power(f64),
    LogSingular,
    ReciprocalLog,
}

impl RadialProfile {
    pub(crate) fn weight(&self, rho: f64) -> f64 {
        match *self {
            RadialProfile::Power(theta) => rho.powf(theta),
            RadialProfile::LogSingular => {
                if rho < 0.5 {
                    rho * (1.0 / rho).ln()
                } else {
                    0.5 * 2f64.ln()
                }
            }
            RadialProfile::ReciprocalLog => {
                if rho < 0.5 {
                    1.0 / (rho * (1.0 / rho).ln())
                } else {
                    2.0 / 2f64.ln()
                }
            }
        }
    }

    /// Mass of the centred ball of radius `r` in R^n.
    pub(crate) fn centered_mass(&self, n: usize, r: f64) -> f64 {
        use crate::numerics::{exp_integral_e1, unit_sphere_area};
        let sigma = unit_sphere_area(n);
        let nf = n as f64;
        match *self {
            RadialProfile::Power(theta) => sigma * r.powf(nf + theta) / (nf + theta),
            RadialProfile::LogSingular => {
                let inner = |r: f64| {
                    let m = nf + 1.0;
                    sigma * r.powf(m) / m * ((1.0 / r).ln() + 1.0 / m)
                };
                if r <= 0.5 {
                    inner(r)
                } else {
                    inner(0.5) + sigma * 0.5 * 2f64.ln() * (r.powf(nf) - 0.5f64.powf(nf)) / nf
                }
            }
            RadialProfile::ReciprocalLog => {
                let inner = |r: f64| sigma * exp_integral_e1((nf - 1.0) * (1.0 / r).ln());
                if r <= 0.5 {
                    inner(r)
                } else {
                    inner(0.5) + sigma * 2.0 / 2f64.ln() * (r.powf(nf) - 0.5f64.powf(nf)) / nf
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeasureSpec {
    pub id: String,
    pub kind: MeasureKind,
}

/// How the set E of ball centres is specified.
#[derive(Debug, Clone)]
pub enum ESpec {
    Points(Vec<Point>),
    Sampled { region: Region, n: usize, seed: u64 },
}

/// A metric measure space. Immutable once built; share freely.
#[derive(Debug, Clone)]
pub struct SpaceModel {
    pub dim: usize,
    pub metric: Metric,
    pub domain: Region,
    pub measures: Vec<MeasureSpec>,
    pub e: Option<ESpec>,
}

impl SpaceModel {
    /// Euclidean space with the given measures and no declared E.
    pub fn euclidean(dim: usize, measures: Vec<MeasureSpec>) -> Result<Self> {
        let s = SpaceModel {
            dim,
            metric: Metric::Euclidean,
            domain: Region::FullSpace,
            measures,
            e: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        schema::parse_space(&v)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        schema::parse_space(v)
    }

    pub fn measure(&self, id: &str) -> Result<&MeasureSpec> {
        self.measures
            .iter()
            .find(|m| m.id == id)
            .ok_or_else(|| Error::UnknownMeasure(id.to_string()))
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.metric.distance(a, b)
    }

    /// The declared sample of E, or the origin for full-space models.
    pub fn e_points(&self, default_n: usize) -> Result<Vec<Point>> {
        match &self.e {
            Some(ESpec::Points(p)) => Ok(p.clone()),
            Some(ESpec::Sampled { region, n, seed }) => sample_region(self, region, *n, *seed),
            None => match self.domain {
                Region::FullSpace => Ok(vec![vec![0.0; self.dim]]),
                _ => sample_region(self, &self.domain.clone(), default_n, 0),
            },
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        schema::validate_model(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Point, radius: f64) -> Self {
        BallSpec { center, radius }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo { n_samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub value: f64,
    /// Absolute error bound; 0 for exact values.
    pub error: f64,
    pub method: Method,
    /// Set when sampling found no mass: the ball misses the support.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub region_disjoint: bool,
}

impl MeasureEstimate {
    pub fn exact(value: f64) -> Self {
        MeasureEstimate {
            value,
            error: 0.0,
            method: Method::ClosedForm,
            region_disjoint: false,
        }
    }

    pub fn rel_error(&self) -> f64 {
        if self.value > 0.0 {
            self.error / self.value
        } else if self.error == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Knobs for [`ball_measure_with`].
#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub target_rel_error: f64,
    pub seed: u64,
    /// Monte Carlo sample budget.
    pub budget: u64,
    /// Skip closed forms and quadrature and draw exactly this many samples.
    pub force_monte_carlo: Option<u64>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            target_rel_error: 0.01,
            seed: 0,
            budget: 10_000_000,
            force_monte_carlo: None,
        }
    }
}
