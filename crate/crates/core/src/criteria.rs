//! The local Poincaré constant Theta_{q,lambda}(r), the embedding
//! classification built on it, and the closed-form exponent criteria.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::linear_fit;
use crate::space::{ball_measure_with, BallSpec, EstimateOptions, Point, SpaceModel};

/// Minimum fitted log-log slope accepted as decay of Theta.
pub const SLOPE_MIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingQuery {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub mu: String,
    pub nu: String,
    /// The gradient-type space admits truncation (false for Hajlasz spaces).
    pub truncation_supported: bool,
    /// nu(B(x, r) ∩ E) >= c nu(B(x, r)) holds.
    pub measure_density: bool,
}

impl EmbeddingQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::param("p", "must be >= 1"));
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(Error::param("q", "must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", "must be > 0"));
        }
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", "must be >= 1"));
        }
        Ok(())
    }

    fn fingerprint(&self) -> String {
        format!(
            "p={:e};q={:e};alpha={:e};lambda={:e};mu={};nu={}",
            self.p, self.q, self.alpha, self.lambda, self.mu, self.nu
        )
    }
}

/// JSON has no infinities; they are written as null and read back here.
fn nullable<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let v: Vec<Option<f64>> = Vec::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
}

fn nullable_one<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaScan {
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    /// Theta(r) = max of `profile` over radii <= r; nondecreasing in r.
    #[serde(deserialize_with = "nullable")]
    pub theta_values: Vec<f64>,
    /// max over sampled x of rho^alpha nu(B(x,rho))^(1/q) / mu(B(x,lambda rho))^(1/p).
    #[serde(deserialize_with = "nullable")]
    pub profile: Vec<f64>,
    /// Centre attaining `profile` at each radius.
    pub argmax_centers: Vec<Point>,
    /// Propagated relative uncertainty of each profile value.
    #[serde(deserialize_with = "nullable")]
    pub rel_uncertainty: Vec<f64>,
    /// Slope of log Theta against log r over the whole grid.
    #[serde(deserialize_with = "nullable_one")]
    pub fitted_log_slope: f64,
    #[serde(deserialize_with = "nullable_one")]
    pub sup_over_range: f64,
    pub query: String,
}

impl ThetaScan {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "theta", "profile", "rel_uncertainty"])?;
        for i in 0..self.radii.len() {
            out.write_record([
                format!("{:.17e}", self.radii[i]),
                format!("{:.17e}", self.theta_values[i]),
                format!("{:.17e}", self.profile[i]),
                format!("{:.6e}", self.rel_uncertainty[i]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn check_decreasing(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::param("radii", "must not be empty"));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::param("radii", "every radius must be positive and finite"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("radii", "grid must be strictly decreasing"));
    }
    Ok(())
}

/// Evaluates Theta_{q,lambda} on a decreasing grid. The inner sup over
/// rho <= r runs over the grid itself.
pub fn theta_scan(
    space: &SpaceModel,
    query: &EmbeddingQuery,
    e_sample: &[Point],
    radii: &[f64],
    opts: &EstimateOptions,
) -> Result<ThetaScan> {
    query.validate()?;
    check_decreasing(radii)?;
    if e_sample.is_empty() {
        return Err(Error::param("e_sample", "must not be empty"));
    }
    space.measure(&query.mu)?;
    space.measure(&query.nu)?;
    let opts = EstimateOptions {
        target_rel_error: opts.target_rel_error.min(0.01),
        ..*opts
    };
    let pairs: Vec<(usize, usize)> = (0..radii.len())
        .flat_map(|j| (0..e_sample.len()).map(move |i| (j, i)))
        .collect();
    let values: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(j, i)| {
            let x = &e_sample[i];
            let rho = radii[j];
            let nu = ball_measure_with(space, &query.nu, &BallSpec::new(x.clone(), rho), &opts)?;
            let mu = ball_measure_with(space, &query.mu, &BallSpec::new(x.clone(), query.lambda * rho), &opts)?;
            if mu.value <= 0.0 {
                return Err(Error::DegenerateMeasure {
                    center: x.clone(),
                    radius: query.lambda * rho,
                });
            }
            // in log space: mu ~ r^3 underflows long before the ratio does
            let ln_ratio = query.alpha * rho.ln() + nu.value.ln() / query.q - mu.value.ln() / query.p;
            let ratio = if nu.value > 0.0 { ln_ratio.exp() } else { 0.0 };
            let unc = nu.rel_error() / query.q + mu.rel_error() / query.p;
            Ok((ratio, unc))
        })
        .collect::<Result<_>>()?;

    let m = e_sample.len();
    let mut profile = Vec::with_capacity(radii.len());
    let mut argmax = Vec::with_capacity(radii.len());
    let mut unc = Vec::with_capacity(radii.len());
    for j in 0..radii.len() {
        let row = &values[j * m..(j + 1) * m];
        let (best, _) = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v.0 > acc.1 { (i, v.0) } else { acc });
        profile.push(row[best].0);
        unc.push(row[best].1);
        argmax.push(e_sample[best].clone());
    }
    // suffix max: Theta(r_j) = max over i >= j
    let mut theta = profile.clone();
    for j in (0..theta.len().saturating_sub(1)).rev() {
        theta[j] = theta[j].max(theta[j + 1]);
    }
    let sup = theta.first().copied().unwrap_or(0.0);
    Ok(ThetaScan {
        radii: radii.to_vec(),
        fitted_log_slope: log_slope(radii, &theta),
        theta_values: theta,
        profile,
        argmax_centers: argmax,
        rel_uncertainty: unc,
        sup_over_range: sup,
        query: query.fingerprint(),
    })
}

/// Slope of log y against log r over entries with y > 0; 0 if fewer than 2.
fn log_slope(radii: &[f64], y: &[f64]) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(y)
        .filter(|(_, v)| **v > 0.0)
        .map(|(r, v)| (r.ln(), v.ln()))
        .unzip();
    linear_fit(&xs, &ys).map_or(0.0, |(s, _)| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Compact,
    Bounded,
    NotCompact,
    NotBounded,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictScope {
    /// The verdict is for the exponent q itself.
    AtQ,
    /// Compactness holds into L^{q'} for every q' < q.
    BelowQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// The ratio keeps growing at the finest radii.
    Divergence,
    /// The ratio neither decays nor grows at the finest radii.
    Stagnation,
}

/// The ball on which a bump function witnesses failure of the embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub ball: BallSpec,
    pub ratio: f64,
    /// Log-log slope of the profile over the finest two decades.
    pub tail_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingVerdict {
    pub verdict: Verdict,
    pub scope: VerdictScope,
    /// Whether boundedness is established (true for Compact and NotCompact).
    pub bounded: bool,
    pub basis: String,
    pub certificate: Option<Certificate>,
    pub diagnostics: Vec<String>,
}

/// Profile slope over the radii within two decades of the finest one
/// (at least the last three grid points).
fn tail_slope(scan: &ThetaScan) -> f64 {
    let n = scan.radii.len();
    let finest = scan.radii[n - 1];
    let mut start = scan.radii.iter().position(|&r| r <= finest * 100.0).unwrap_or(0);
    start = start.min(n.saturating_sub(3));
    log_slope(&scan.radii[start..], &scan.profile[start..])
}

/// Decision rules on a finished scan.
///
/// Divergence: the profile attains its max at the finest radius and its
/// tail slope is <= -SLOPE_MIN. Decay: fitted slope >= SLOPE_MIN and the last
/// Theta below half the first. Necessity verdicts need `measure_density`.
pub fn classify(scan: &ThetaScan, query: &EmbeddingQuery) -> Result<EmbeddingVerdict> {
    query.validate()?;
    if scan.query != query.fingerprint() {
        return Err(Error::Mismatch(format!(
            "scan was produced for `{}` but the query is `{}`",
            scan.query,
            query.fingerprint()
        )));
    }
    let n = scan.radii.len();
    let mut diagnostics = Vec::new();
    let verdict = |v: Verdict, scope, bounded, basis: &str, cert, diagnostics| EmbeddingVerdict {
        verdict: v,
        scope,
        bounded,
        basis: basis.to_string(),
        certificate: cert,
        diagnostics,
    };
    if n == 0 || scan.theta_values.iter().all(|&t| t == 0.0) {
        diagnostics.push("nu vanishes on every sampled ball centred in E; Theta is identically 0".into());
        return Ok(verdict(
            Verdict::Inconclusive,
            VerdictScope::AtQ,
            false,
            "degenerate target measure",
            None,
            diagnostics,
        ));
    }
    let finest = n - 1;
    let max_at = scan
        .profile
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > scan.profile[best] { i } else { best });
    let tail = tail_slope(scan);
    let cert = |kind| Certificate {
        kind,
        ball: BallSpec::new(scan.argmax_centers[max_at].clone(), scan.radii[max_at]),
        ratio: scan.profile[max_at],
        tail_slope: tail,
    };

    if max_at == finest && tail <= -SLOPE_MIN && n >= 3 {
        if query.measure_density {
            return Ok(verdict(
                Verdict::NotBounded,
                VerdictScope::AtQ,
                false,
                "Theta diverges as r -> 0 under the measure density condition: bump functions on \
                 shrinking balls have bounded Sobolev norm and unbounded target norm",
                Some(cert(CertificateKind::Divergence)),
            diagnostics,
        ));
        }
        diagnostics.push("Theta appears to diverge but measure density is not declared".into());
        return Ok(verdict(
            Verdict::Inconclusive,
            VerdictScope::AtQ,
            false,
            "divergent Theta without the measure density condition",
            Some(cert(CertificateKind::Divergence)),
            diagnostics,
        ));
    }

    if !query.truncation_supported {
        return Ok(verdict(
            Verdict::Compact,
            VerdictScope::BelowQ,
            true,
            "Theta bounded near 0: compact embedding into L^{q'} for every q' < q",
            None,
            diagnostics,
        ));
    }

    let span = scan.radii[0] / scan.radii[finest];
    let decays = span >= 100.0 * (1.0 - 1e-9)
        && scan.fitted_log_slope >= SLOPE_MIN
        && scan.theta_values[finest] < scan.theta_values[0] / 2.0;
    if decays {
        return Ok(verdict(
            Verdict::Compact,
            VerdictScope::AtQ,
            true,
            "Theta(r) -> 0 as r -> 0 with the truncation property: compact embedding",
            None,
            diagnostics,
        ));
    }
    if span < 100.0 * (1.0 - 1e-9) {
        diagnostics.push("radius grid spans fewer than two decades; decay not assessed".into());
    }
    if query.measure_density && tail.abs() < SLOPE_MIN {
        return Ok(verdict(
            Verdict::NotCompact,
            VerdictScope::AtQ,
            true,
            "Theta bounded but not decaying under the measure density condition: bounded, \
             and bump functions on shrinking balls rule out compactness",
            Some(cert(CertificateKind::Stagnation)),
            diagnostics,
        ));
    }
    Ok(verdict(
        Verdict::Bounded,
        VerdictScope::AtQ,
        true,
        "Theta bounded near 0 with the truncation property: bounded embedding",
        None,
            diagnostics,
        ))
}

fn ser_threshold<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("inf"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalExponents {
    /// Supremum of admissible q for compactness; `None` means every finite q.
    #[serde(serialize_with = "ser_threshold")]
    pub q_compact_sup: Option<f64>,
    /// Same threshold, attained for boundedness.
    #[serde(serialize_with = "ser_threshold")]
    pub q_bounded_sup: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::param(name, "must be positive and finite"));
    }
    Ok(())
}

fn check_dimension_inputs(s: f64, sigma: f64, alpha: f64, p: f64) -> Result<()> {
    positive("s", s)?;
    positive("sigma", sigma)?;
    positive("alpha", alpha)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", "must be >= 1"));
    }
    Ok(())
}

/// Thresholds of q(s - alpha p) < sigma p (compact) and <= (bounded).
pub fn critical_exponents(s: f64, sigma: f64, alpha: f64, p: f64) -> Result<CriticalExponents> {
    check_dimension_inputs(s, sigma, alpha, p)?;
    let gap = s - alpha * p;
    let q = if gap > 0.0 { Some(sigma * p / gap) } else { None };
    Ok(CriticalExponents {
        q_compact_sup: q,
        q_bounded_sup: q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub compact: bool,
    pub bounded: bool,
}

/// The dimension criterion evaluated at a given q, in product form.
pub fn dimension_decision(s: f64, sigma: f64, alpha: f64, p: f64, q: f64) -> Result<Decision> {
    check_dimension_inputs(s, sigma, alpha, p)?;
    positive("q", q)?;
    let lhs = q * (s - alpha * p);
    let rhs = sigma * p;
    Ok(Decision {
        compact: lhs < rhs,
        bounded: lhs <= rhs,
    })
}

/// Criterion for W^{1,p}(Omega, d^alpha mu) into L^q(boundary, d^beta nu).
///
/// For q > p: q(s - p) < sigma p + min{beta p - alpha q, 0} (strict for
/// compactness). For q <= p: s - p < sigma + beta - alpha.
pub fn distance_weight_criterion(s: f64, sigma: f64, alpha: f64, beta: f64, p: f64, q: f64) -> Result<Decision> {
    for (name, v) in [("s", s), ("sigma", sigma), ("alpha", alpha), ("beta", beta), ("p", p), ("q", q)] {
        if !v.is_finite() {
            return Err(Error::param(name, "must be finite"));
        }
    }
    if p < 1.0 {
        return Err(Error::param("p", "must be >= 1"));
    }
    positive("q", q)?;
    if sigma <= s - p {
        return Err(Error::HypothesisViolation(format!(
            "need sigma > s - p, got sigma = {sigma}, s - p = {}",
            s - p
        )));
    }
    if q > p {
        let lhs = q * (s - p);
        let rhs = sigma * p + (beta * p - alpha * q).min(0.0);
        Ok(Decision {
            compact: lhs < rhs,
            bounded: lhs <= rhs,
        })
    } else {
        let ok = s - p < sigma + beta - alpha;
        Ok(Decision {
            compact: ok,
            bounded: ok,
        })
    }
}

/// theta = gamma + (beta + n gamma)/q - (alpha + n gamma)/p for the cusp
/// {|x'| < x_n^gamma < 1} with weights x_n^alpha, x_n^beta.
///
/// q is limited by the Sobolev exponent np/(n - p) when p < n; for p >= n
/// every finite q is allowed.
pub fn cusp_exponent(n: usize, gamma: f64, alpha: f64, beta: f64, p: f64, q: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("n", "cusp needs n >= 2"));
    }
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", "cusp needs gamma > 1"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", "must be >= 1"));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::param("q", "must be >= 1"));
    }
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::param("alpha", "weight exponents must be finite"));
    }
    let nf = n as f64;
    if p < nf {
        let p_star = nf * p / (nf - p);
        if q > p_star {
            return Err(Error::param(
                "q",
                format!("q = {q} exceeds the Sobolev exponent np/(n-p) = {p_star}"),
            ));
        }
    }
    Ok(gamma + (beta + nf * gamma) / q - (alpha + nf * gamma) / p)
}
