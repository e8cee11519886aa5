use super::{Region, SpaceModel};
use crate::error::{Error, Result};
use crate::numerics::{euclid, norm};

/// dist(x, X \ Omega) in the space's metric, for x inside the domain.
///
/// Exact for boxes, balls and cusps (the cusp case is a 1-D minimisation
/// in the meridian plane). For the Koch snowflake the distance is taken to
/// the depth polyline and is within `side * 3^-depth` of the true value.
/// Domains with empty interior give 0.
pub fn distance_to_boundary(space: &SpaceModel, x: &[f64]) -> Result<f64> {
    if x.len() != space.dim {
        return Err(Error::param("x", format!("expected {} coordinates", space.dim)));
    }
    if !space.domain.contains(x) {
        return Err(Error::OutsideDomain { point: x.to_vec() });
    }
    let d = match &space.domain {
        Region::FullSpace => f64::INFINITY,
        Region::Box { lo, hi } => x
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min),
        Region::Ball { center, radius } => radius - euclid(x, center),
        Region::Cusp { gamma } => {
            let n = x.len();
            cusp_distance(norm(&x[..n - 1]), x[n - 1], *gamma)
        }
        Region::KochSnowflake(k) => k.distance_to_polyline([x[0], x[1]]),
        Region::KochCurve(_) | Region::Cantor(_) | Region::BoxBoundary { .. } => 0.0,
    };
    Ok(space.metric.from_euclidean(d))
}

/// Distance from (rho, t), rho = |x'|, to the boundary of the cusp
/// {rho < t^gamma < 1}: the lateral surface rho = s^gamma or the top t = 1.
pub(crate) fn cusp_distance(rho: f64, t: f64, gamma: f64) -> f64 {
    let f = |s: f64| ((rho - s.powf(gamma)).powi(2) + (t - s).powi(2)).sqrt();
    // coarse scan then golden-section refinement around the best node
    let nodes = 256;
    let mut best = (f(0.0), 0usize);
    for i in 1..=nodes {
        let v = f(i as f64 / nodes as f64);
        if v < best.0 {
            best = (v, i);
        }
    }
    let mut lo = (best.1.saturating_sub(1)) as f64 / nodes as f64;
    let mut hi = ((best.1 + 1).min(nodes)) as f64 / nodes as f64;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..80 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    let lateral = best.0.min(fa).min(fb).min(f(lo)).min(f(hi));
    // the top disc {|x'| <= 1, t = 1}
    let top = 1.0 - t;
    lateral.min(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cusp_distance_matches_dense_brute_force() {
        for &(rho, t, gamma) in &[(0.0, 0.5, 2.0), (0.1, 0.6, 2.0), (0.0, 0.3, 3.0), (0.2, 0.9, 1.5)] {
            let brute = (0..=200_000)
                .map(|i| {
                    let s = i as f64 / 200_000.0;
                    ((rho - s.powf(gamma)).powi(2) + (t - s).powi(2)).sqrt()
                })
                .fold(1.0 - t, f64::min);
            let d = cusp_distance(rho, t, gamma);
            assert!(d <= brute + 1e-12 && brute - d < 1e-9, "{rho} {t}: {d} vs {brute}");
        }
    }
}
