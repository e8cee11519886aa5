use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::koch::koch_children;
use super::selfsimilar::KochCurveMeasure;
use super::{Point, Region, SpaceModel};
use crate::error::{Error, Result};
use crate::numerics::norm;

/// `n` points of `region`, deterministic in `seed`. Fractal regions are
/// sampled through random IFS addresses.
pub fn sample_region(space: &SpaceModel, region: &Region, n: usize, seed: u64) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| draw(space, region, &mut rng)).collect()
}

pub(crate) fn draw<R: Rng>(space: &SpaceModel, region: &Region, rng: &mut R) -> Result<Point> {
    let dim = space.dim;
    match region {
        Region::FullSpace => Err(Error::EmptyRegion("full space is unbounded".into())),
        Region::Box { lo, hi } => {
            if lo.iter().zip(hi).any(|(a, b)| a > b) {
                return Err(Error::EmptyRegion(format!("box with lo {lo:?} > hi {hi:?}")));
            }
            Ok(lo
                .iter()
                .zip(hi)
                .map(|(a, b)| if b > a { rng.gen_range(*a..*b) } else { *a })
                .collect())
        }
        Region::Ball { center, radius } => {
            if *radius <= 0.0 {
                return Err(Error::EmptyRegion("ball of non-positive radius".into()));
            }
            let u = uniform_in_unit_ball(dim, rng);
            Ok(center.iter().zip(u).map(|(c, v)| c + radius * v).collect())
        }
        Region::Cusp { gamma } => {
            // height has density proportional to t^(gamma (n-1)) on (0, 1)
            let m = gamma * (dim as f64 - 1.0) + 1.0;
            let t: f64 = loop {
                let t = rng.gen::<f64>().powf(1.0 / m);
                if t > 0.0 && t < 1.0 {
                    break t;
                }
            };
            let h = t.powf(*gamma);
            let mut x: Vec<f64> = uniform_in_unit_ball(dim - 1, rng).into_iter().map(|v| v * h).collect();
            x.push(t);
            Ok(x)
        }
        Region::KochSnowflake(k) => {
            let r = k.circumradius();
            loop {
                let x = [rng.gen_range(-r..r), rng.gen_range(-r..r)];
                if k.contains(x) {
                    return Ok(x.to_vec());
                }
            }
        }
        Region::KochCurve(k) => {
            // edge chosen uniformly: the three edges carry equal mass
            let edges = KochCurveMeasure::snowflake(k.side).edges;
            let (mut p, mut q) = edges[rng.gen_range(0..3)];
            for _ in 0..k.depth {
                let kids = koch_children(p, q);
                (p, q) = kids[rng.gen_range(0..4)];
            }
            let t: f64 = rng.gen();
            Ok(vec![p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])])
        }
        Region::Cantor(c) => Ok(vec![c.sample(rng)]),
        Region::BoxBoundary { lo, hi } => {
            let n = lo.len();
            let mut faces = Vec::new();
            for axis in 0..n {
                let area: f64 = (0..n).filter(|&i| i != axis).map(|i| hi[i] - lo[i]).product();
                faces.push((axis, area));
            }
            let total: f64 = faces.iter().map(|f| 2.0 * f.1).sum();
            if !(total > 0.0) {
                return Err(Error::EmptyRegion("box boundary has zero surface measure".into()));
            }
            let mut pick = rng.gen::<f64>() * total;
            let mut chosen = (n - 1, false);
            'outer: for &(axis, area) in &faces {
                for side in [false, true] {
                    if pick < area {
                        chosen = (axis, side);
                        break 'outer;
                    }
                    pick -= area;
                }
            }
            let mut x: Vec<f64> = lo
                .iter()
                .zip(hi)
                .map(|(a, b)| if b > a { rng.gen_range(*a..*b) } else { *a })
                .collect();
            x[chosen.0] = if chosen.1 { hi[chosen.0] } else { lo[chosen.0] };
            Ok(x)
        }
    }
}

fn uniform_in_unit_ball<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if norm(&v) < 1.0 {
            return v;
        }
    }
}
