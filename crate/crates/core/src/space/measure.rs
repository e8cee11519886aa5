//! Ball-measure dispatch: closed forms, 1-D quadrature, self-similar
//! recursion, and stratified Monte Carlo for everything else.

use super::montecarlo::stratified;
use super::selfsimilar::KochCurveMeasure;
use super::{
    BallSpec, EstimateOptions, MeasureEstimate, MeasureKind, Method, RadialProfile, Region, SpaceModel,
};
use crate::error::{Error, Result};
use crate::numerics::{
    euclid, integrate, norm, sphere_fraction_in_ball, unit_ball_volume, unit_sphere_area,
};

/// Measure of `ball` under measure `measure_id`, with default seed and budget.
pub fn ball_measure(
    space: &SpaceModel,
    measure_id: &str,
    ball: &BallSpec,
    target_rel_error: f64,
) -> Result<MeasureEstimate> {
    ball_measure_with(
        space,
        measure_id,
        ball,
        &EstimateOptions {
            target_rel_error,
            ..EstimateOptions::default()
        },
    )
}

pub fn ball_measure_with(
    space: &SpaceModel,
    measure_id: &str,
    ball: &BallSpec,
    opts: &EstimateOptions,
) -> Result<MeasureEstimate> {
    let spec = space.measure(measure_id)?;
    if ball.center.len() != space.dim {
        return Err(Error::param(
            "ball.center",
            format!("expected {} coordinates, got {}", space.dim, ball.center.len()),
        ));
    }
    if !(ball.radius > 0.0 && ball.radius.is_finite()) {
        return Err(Error::param("ball.radius", "must be positive and finite"));
    }
    if !(opts.target_rel_error > 0.0 && opts.target_rel_error < 1.0) {
        return Err(Error::param("target_rel_error", "must lie in (0, 1)"));
    }
    let r = space.metric.euclidean_radius(ball.radius);
    let c = &ball.center[..];
    if let Some(n) = opts.force_monte_carlo {
        return monte_carlo(space, &spec.kind, c, r, opts, Some(n));
    }
    let n = space.dim;
    let whole = space.domain.contains_ball(c, r);
    let tol = opts.target_rel_error;
    match &spec.kind {
        MeasureKind::Lebesgue if whole => Ok(MeasureEstimate::exact(unit_ball_volume(n) * r.powi(n as i32))),
        MeasureKind::Lebesgue if n == 1 => {
            if let Some((lo, hi)) = space.domain.bounding_box(1) {
                if matches!(space.domain, Region::Box { .. } | Region::Ball { .. }) {
                    let len = ((c[0] + r).min(hi[0]) - (c[0] - r).max(lo[0])).max(0.0);
                    let mut est = MeasureEstimate::exact(len);
                    est.region_disjoint = len == 0.0;
                    return Ok(est);
                }
            }
            monte_carlo(space, &spec.kind, c, r, opts, None)
        }
        MeasureKind::RadialPower { center, .. }
        | MeasureKind::RadialLogSingular { center }
        | MeasureKind::RadialReciprocalLog { center }
            if whole =>
        {
            let profile = match &spec.kind {
                MeasureKind::RadialPower { theta, .. } => RadialProfile::Power(*theta),
                MeasureKind::RadialLogSingular { .. } => RadialProfile::LogSingular,
                _ => RadialProfile::ReciprocalLog,
            };
            let origin = center.clone().unwrap_or_else(|| vec![0.0; n]);
            Ok(radial_ball(profile, n, euclid(c, &origin), r, tol))
        }
        MeasureKind::HyperplaneWeight { theta, axis } if whole => Ok(hyperplane_ball(*theta, n, c[*axis], r, tol)),
        MeasureKind::SelfSimilar { ratio, parts } => {
            let set = super::CantorSet {
                ratio: *ratio,
                parts: *parts,
                depth: 0,
            };
            let (v, e) = set.interval_measure(c[0], r, tol / 2.0);
            Ok(recursion_estimate(v, e))
        }
        MeasureKind::Hausdorff { support } => hausdorff_ball(space, support, c, r, opts),
        _ => monte_carlo(space, &spec.kind, c, r, opts, None),
    }
}

fn recursion_estimate(v: f64, e: f64) -> MeasureEstimate {
    MeasureEstimate {
        value: v,
        error: e,
        method: if e == 0.0 { Method::ClosedForm } else { Method::Quadrature },
        region_disjoint: v == 0.0,
    }
}

/// Radial weight w(|y - o|) over B(x, r) with |x - o| = dist, in R^n.
pub(crate) fn radial_ball(profile: RadialProfile, n: usize, dist: f64, r: f64, tol: f64) -> MeasureEstimate {
    if dist == 0.0 {
        return MeasureEstimate::exact(profile.centered_mass(n, r));
    }
    if n == 1 {
        // signed primitive F(t) = sign(t) M(|t|) / 2 around the weight centre
        let f = |t: f64| t.signum() * profile.centered_mass(1, t.abs()) / 2.0;
        return MeasureEstimate::exact(f(dist + r) - f(dist - r));
    }
    let inner = (r - dist).max(0.0);
    let base = if inner > 0.0 { profile.centered_mass(n, inner) } else { 0.0 };
    let sigma = unit_sphere_area(n);
    let integrand =
        |rho: f64| sigma * profile.weight(rho) * rho.powi(n as i32 - 1) * sphere_fraction_in_ball(n, rho, dist, r);
    let (a, b) = ((r - dist).abs(), dist + r);
    let mut cuts = vec![a, b];
    // the log profiles switch formula at 1/2
    if !matches!(profile, RadialProfile::Power(_)) && a < 0.5 && 0.5 < b {
        cuts.insert(1, 0.5);
    }
    let mut value = base;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let (v, e) = integrate(integrand, w[0], w[1], 1e-300, tol * 1e-3, 400);
        value += v;
        err += e;
    }
    MeasureEstimate {
        value,
        error: err,
        method: Method::Quadrature,
        region_disjoint: false,
    }
}

/// |y_axis|^(-theta) over B(x, r) where x_axis = t0.
pub(crate) fn hyperplane_ball(theta: f64, n: usize, t0: f64, r: f64, tol: f64) -> MeasureEstimate {
    let omega = unit_ball_volume(n - 1);
    if t0 == 0.0 {
        let b = statrs::function::beta::beta((1.0 - theta) / 2.0, (n as f64 + 1.0) / 2.0);
        return MeasureEstimate::exact(omega * r.powf(n as f64 - theta) * b);
    }
    // slice volume at height t: omega_{n-1} (r^2 - (t - t0)^2)^((n-1)/2)
    let slice = |t: f64| omega * (r * r - (t - t0) * (t - t0)).max(0.0).powf((n as f64 - 1.0) / 2.0);
    let k = 1.0 / (1.0 - theta);
    // integral of |t|^-theta f(t) over 0 <= u0 < t < u1 via t = s^k
    let half = |f: &dyn Fn(f64) -> f64, u0: f64, u1: f64| {
        if u1 <= u0 {
            return (0.0, 0.0);
        }
        integrate(
            |s: f64| k * f(s.powf(k)),
            u0.powf(1.0 - theta),
            u1.powf(1.0 - theta),
            1e-300,
            tol * 1e-3,
            400,
        )
    };
    let (a, b) = (t0 - r, t0 + r);
    let pos = half(&slice, a.max(0.0), b.max(0.0));
    let neg = half(&|t: f64| slice(-t), (-b).max(0.0), (-a).max(0.0));
    MeasureEstimate {
        value: pos.0 + neg.0,
        error: pos.1 + neg.1,
        method: Method::Quadrature,
        region_disjoint: false,
    }
}

/// Length of the segment p -> q inside the open ball B(c, r).
fn segment_in_ball(p: &[f64], q: &[f64], c: &[f64], r: f64) -> f64 {
    let d: Vec<f64> = p.iter().zip(q).map(|(a, b)| b - a).collect();
    let len = norm(&d);
    if len == 0.0 {
        return 0.0;
    }
    let u: Vec<f64> = d.iter().map(|x| x / len).collect();
    let w: Vec<f64> = c.iter().zip(p).map(|(a, b)| a - b).collect();
    let proj: f64 = w.iter().zip(&u).map(|(a, b)| a * b).sum();
    let perp2 = (norm(&w).powi(2) - proj * proj).max(0.0);
    if perp2 >= r * r {
        return 0.0;
    }
    let h = (r * r - perp2).sqrt();
    ((proj + h).min(len) - (proj - h).max(0.0)).max(0.0)
}

fn hausdorff_ball(
    space: &SpaceModel,
    support: &Region,
    c: &[f64],
    r: f64,
    opts: &EstimateOptions,
) -> Result<MeasureEstimate> {
    let tol = opts.target_rel_error;
    match support {
        Region::Cantor(set) => {
            let (v, e) = set.interval_measure(c[0], r, tol / 2.0);
            Ok(recursion_estimate(v, e))
        }
        Region::KochCurve(k) | Region::KochSnowflake(k) => {
            let (v, e) = KochCurveMeasure::snowflake(k.side).disc_measure([c[0], c[1]], r, tol / 2.0);
            Ok(recursion_estimate(v, e))
        }
        Region::Box { lo, hi } => {
            let free: Vec<usize> = (0..lo.len()).filter(|&i| hi[i] > lo[i]).collect();
            let k = free.len();
            // squared distance from c to the affine span of the box
            let off: f64 = (0..lo.len())
                .filter(|i| !free.contains(i))
                .map(|i| (c[i] - lo[i]).powi(2))
                .sum();
            if off >= r * r {
                return Ok(recursion_estimate(0.0, 0.0));
            }
            let rho = (r * r - off).sqrt();
            if k == 0 {
                return Ok(MeasureEstimate::exact(1.0));
            }
            if k == 1 {
                let i = free[0];
                let len = ((c[i] + rho).min(hi[i]) - (c[i] - rho).max(lo[i])).max(0.0);
                return Ok(recursion_estimate(len, 0.0));
            }
            if free.iter().all(|&i| c[i] - rho >= lo[i] && c[i] + rho <= hi[i]) {
                return Ok(MeasureEstimate::exact(unit_ball_volume(k) * rho.powi(k as i32)));
            }
            face_monte_carlo(vec![(lo.clone(), hi.clone())], c, r, opts)
        }
        Region::BoxBoundary { lo, hi } => {
            let n = lo.len();
            if n == 2 {
                let corners = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
                let total: f64 = (0..4)
                    .map(|i| segment_in_ball(&corners[i], &corners[(i + 1) % 4], c, r))
                    .sum();
                return Ok(recursion_estimate(total, 0.0));
            }
            let mut faces = Vec::new();
            for axis in 0..n {
                for v in [lo[axis], hi[axis]] {
                    let (mut flo, mut fhi) = (lo.clone(), hi.clone());
                    flo[axis] = v;
                    fhi[axis] = v;
                    faces.push((flo, fhi));
                }
            }
            face_monte_carlo(faces, c, r, opts)
        }
        Region::FullSpace => {
            let spec = MeasureKind::Lebesgue;
            monte_carlo(space, &spec, c, r, opts, None)
        }
        other => Err(Error::param(
            "support",
            format!("no Hausdorff measure available on a {} region", other.kind()),
        )),
    }
}

/// Surface measure of B(c, r) on a union of flat boxes, sampled per box.
fn face_monte_carlo(
    faces: Vec<(Vec<f64>, Vec<f64>)>,
    c: &[f64],
    r: f64,
    opts: &EstimateOptions,
) -> Result<MeasureEstimate> {
    let mut value = 0.0;
    let mut var = 0.0;
    let mut samples = 0;
    let mut disjoint = true;
    for (i, (lo, hi)) in faces.into_iter().enumerate() {
        // clip each face to the ball's bounding box
        let clo: Vec<f64> = lo.iter().zip(c).map(|(a, x)| a.max(x - r)).collect();
        let chi: Vec<f64> = hi.iter().zip(c).map(|(b, x)| b.min(x + r)).collect();
        if clo.iter().zip(&chi).any(|(a, b)| a > b) {
            continue;
        }
        let f = |y: &[f64]| if euclid(y, c) < r { 1.0 } else { 0.0 };
        let sub = EstimateOptions {
            seed: crate::numerics::derive_seed(opts.seed, i as u64),
            ..*opts
        };
        let est = stratified(&clo, &chi, &f, &sub, None)?;
        value += est.value;
        var += (est.error / 2.576).powi(2);
        if let Method::MonteCarlo { n_samples, .. } = est.method {
            samples += n_samples;
        }
        disjoint &= est.region_disjoint;
    }
    Ok(MeasureEstimate {
        value,
        error: 2.576 * var.sqrt(),
        method: Method::MonteCarlo {
            n_samples: samples,
            seed: opts.seed,
        },
        region_disjoint: disjoint && value == 0.0,
    })
}

fn monte_carlo(
    space: &SpaceModel,
    kind: &MeasureKind,
    c: &[f64],
    r: f64,
    opts: &EstimateOptions,
    fixed: Option<u64>,
) -> Result<MeasureEstimate> {
    if let MeasureKind::SelfSimilar { ratio, parts } = kind {
        let set = super::CantorSet {
            ratio: *ratio,
            parts: *parts,
            depth: 40,
        };
        let support = Region::Cantor(set);
        return sampled_singular(space, &support, c, r, opts, fixed);
    }
    if let MeasureKind::Hausdorff { support } = kind {
        return sampled_singular(space, support, c, r, opts, fixed);
    }
    let n = space.dim;
    let mut lo: Vec<f64> = c.iter().map(|x| x - r).collect();
    let mut hi: Vec<f64> = c.iter().map(|x| x + r).collect();
    if let Some((dlo, dhi)) = space.domain.bounding_box(n) {
        for i in 0..n {
            lo[i] = lo[i].max(dlo[i]);
            hi[i] = hi[i].min(dhi[i]);
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Ok(MeasureEstimate {
                value: 0.0,
                error: 0.0,
                method: Method::ClosedForm,
                region_disjoint: true,
            });
        }
    }
    let domain = &space.domain;
    let f = |y: &[f64]| {
        if euclid(y, c) >= r || !domain.contains(y) {
            return 0.0;
        }
        kind.density(space, y).unwrap_or(0.0)
    };
    stratified(&lo, &hi, &f, opts, fixed)
}

/// Monte Carlo for singular measures: draws from the measure itself and
/// counts hits, so the estimate is total mass times the hit fraction.
fn sampled_singular(
    space: &SpaceModel,
    support: &Region,
    c: &[f64],
    r: f64,
    opts: &EstimateOptions,
    fixed: Option<u64>,
) -> Result<MeasureEstimate> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let total = match support {
        Region::Cantor(_) => 1.0,
        Region::KochCurve(k) | Region::KochSnowflake(k) => KochCurveMeasure::snowflake(k.side).total_mass(),
        _ => {
            return Err(Error::param(
                "support",
                format!("forced sampling is not available on a {} region", support.kind()),
            ))
        }
    };
    let n = fixed.unwrap_or(opts.budget.min(1_000_000));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut hits = 0u64;
    for _ in 0..n {
        let y = super::sampling::draw(space, support, &mut rng)?;
        if euclid(&y, c) < r {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok(MeasureEstimate {
        value: total * p,
        error: 2.576 * total * se,
        method: Method::MonteCarlo { n_samples: n, seed: opts.seed },
        region_disjoint: hits == 0,
    })
}

/// Exact measure of the cusp chunk {2^-k + (j-1) 2^-k gamma < x_n < 2^-k + j 2^-k gamma}
/// under x_n^exponent dx in R^n (the chunk is clipped at x_n = 1).
pub fn cusp_chunk_measure(n: usize, gamma: f64, exponent: f64, k: u32, j: u64) -> f64 {
    let step = 2f64.powf(-(k as f64) * gamma);
    let a = 2f64.powi(-(k as i32)) + (j as f64 - 1.0) * step;
    cusp_slab_measure(n, gamma, exponent, a, (a + step).min(1.0))
}

/// Measure of the cusp slab {a < x_n < b} under x_n^exponent dx in R^n.
pub fn cusp_slab_measure(n: usize, gamma: f64, exponent: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // cross-section is an (n-1)-ball of radius t^gamma
    let m = gamma * (n as f64 - 1.0) + exponent + 1.0;
    let omega = unit_ball_volume(n - 1);
    if m.abs() < 1e-14 {
        omega * (b / a).ln()
    } else {
        omega * (b.powf(m) - a.powf(m)) / m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn segment_chord_length() {
        assert_relative_eq!(segment_in_ball(&[-2.0, 0.0], &[2.0, 0.0], &[0.0, 0.0], 1.0), 2.0);
        assert_relative_eq!(segment_in_ball(&[0.0, 0.0], &[2.0, 0.0], &[0.0, 0.0], 1.0), 1.0);
        assert_eq!(segment_in_ball(&[-2.0, 2.0], &[2.0, 2.0], &[0.0, 0.0], 1.0), 0.0);
    }

    #[test]
    fn off_centre_radial_quadrature_in_one_dimension_agrees() {
        let p = RadialProfile::Power(0.5);
        // integral of |t|^0.5 over (0.2, 1.0)
        let exact = (1.0f64.powf(1.5) - 0.2f64.powf(1.5)) / 1.5;
        assert_relative_eq!(radial_ball(p, 1, 0.6, 0.4, 1e-8).value, exact, max_relative = 1e-13);
    }

    #[test]
    fn radial_quadrature_reduces_to_centred_form() {
        for profile in [RadialProfile::Power(-0.5), RadialProfile::LogSingular, RadialProfile::ReciprocalLog] {
            let centred = profile.centered_mass(2, 0.3);
            let shifted = radial_ball(profile, 2, 1e-9, 0.3, 1e-8).value;
            assert_relative_eq!(centred, shifted, max_relative = 1e-6);
        }
    }

    #[test]
    fn hyperplane_quadrature_approaches_closed_form() {
        let exact = hyperplane_ball(0.5, 2, 0.0, 0.2, 1e-8).value;
        let near = hyperplane_ball(0.5, 2, 1e-10, 0.2, 1e-8).value;
        assert_relative_eq!(exact, near, max_relative = 1e-4);
    }

    #[test]
    fn cusp_chunks_tile_the_band() {
        // chunks j = 1..j_k cover [2^-k, 2^-k + j_k 2^-k gamma) which is at least [2^-k, 2^(1-k))
        let (n, gamma, k) = (2, 2.0, 3);
        let jk = 2f64.powf(k as f64 * (gamma - 1.0)).ceil() as u64;
        let sum: f64 = (1..=jk).map(|j| cusp_chunk_measure(n, gamma, 0.0, k, j)).sum();
        let a: f64 = 0.125;
        let b: f64 = 0.125 + jk as f64 * 2f64.powf(-3.0 * gamma);
        assert_relative_eq!(sum, 2.0 * (b.powi(3) - a.powi(3)) / 3.0, max_relative = 1e-12);
    }
}
