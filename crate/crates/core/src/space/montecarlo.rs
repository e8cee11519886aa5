//! Stratified Monte Carlo over an axis-aligned box.
//!
//! Each stratum owns a ChaCha stream seeded from (seed, stratum index) and
//! keeps it across refinement rounds, so results do not depend on how rayon
//! schedules the strata.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EstimateOptions, MeasureEstimate, Method};
use crate::error::{Error, Result};
use crate::numerics::derive_seed;

const Z99: f64 = 2.576;
/// Samples after which an all-zero estimate is reported as disjoint.
const ZERO_CUTOFF: u64 = 1 << 14;

struct Stratum {
    lo: Vec<f64>,
    hi: Vec<f64>,
    rng: ChaCha8Rng,
    n: u64,
    sum: f64,
    sumsq: f64,
}

impl Stratum {
    fn draw<F: Fn(&[f64]) -> f64>(&mut self, f: &F, count: u64) {
        let mut y = vec![0.0; self.lo.len()];
        for _ in 0..count {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = if self.hi[i] > self.lo[i] {
                    self.rng.gen_range(self.lo[i]..self.hi[i])
                } else {
                    self.lo[i]
                };
            }
            let v = f(&y);
            self.sum += v;
            self.sumsq += v * v;
        }
        self.n += count;
    }
}

fn strata_per_axis(active: usize) -> usize {
    match active {
        0 => 1,
        1 | 2 => 4,
        3 => 3,
        4..=6 => 2,
        _ => 1,
    }
}

/// Integral of `f` over the box [lo, hi] (Lebesgue measure on the axes with
/// positive width). `fixed` draws exactly that many samples and skips the
/// stopping rule.
pub(crate) fn stratified<F>(
    lo: &[f64],
    hi: &[f64],
    f: &F,
    opts: &EstimateOptions,
    fixed: Option<u64>,
) -> Result<MeasureEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let active: Vec<usize> = (0..lo.len()).filter(|&i| hi[i] > lo[i]).collect();
    let k = strata_per_axis(active.len());
    let count = k.pow(active.len() as u32);
    let mut strata: Vec<Stratum> = (0..count)
        .map(|s| {
            let (mut slo, mut shi) = (lo.to_vec(), hi.to_vec());
            let mut rest = s;
            for &ax in &active {
                let cell = rest % k;
                rest /= k;
                let w = (hi[ax] - lo[ax]) / k as f64;
                slo[ax] = lo[ax] + w * cell as f64;
                shi[ax] = if cell + 1 == k { hi[ax] } else { lo[ax] + w * (cell + 1) as f64 };
            }
            Stratum {
                lo: slo,
                hi: shi,
                rng: ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, s as u64)),
                n: 0,
                sum: 0.0,
                sumsq: 0.0,
            }
        })
        .collect();
    let volume = |s: &Stratum| {
        active
            .iter()
            .map(|&i| s.hi[i] - s.lo[i])
            .product::<f64>()
    };

    let summarize = |strata: &[Stratum]| {
        let mut value = 0.0;
        let mut var = 0.0;
        let mut n = 0;
        for s in strata {
            let v = volume(s);
            let mean = s.sum / s.n as f64;
            let s2 = if s.n > 1 {
                ((s.sumsq - s.n as f64 * mean * mean) / (s.n as f64 - 1.0)).max(0.0)
            } else {
                0.0
            };
            value += v * mean;
            var += v * v * s2 / s.n as f64;
            n += s.n;
        }
        (value, Z99 * var.sqrt(), n)
    };

    let mut per = match fixed {
        Some(total) => total.div_ceil(count as u64).max(1),
        None => (256 / count as u64).max(16),
    };
    loop {
        strata.par_iter_mut().for_each(|s| s.draw(f, per));
        let (value, error, n) = summarize(&strata);
        let est = MeasureEstimate {
            value,
            error,
            method: Method::MonteCarlo {
                n_samples: n,
                seed: opts.seed,
            },
            region_disjoint: false,
        };
        if fixed.is_some() {
            return Ok(MeasureEstimate {
                region_disjoint: value == 0.0,
                ..est
            });
        }
        if value > 0.0 && error <= opts.target_rel_error * value {
            return Ok(est);
        }
        if value == 0.0 && n >= ZERO_CUTOFF {
            return Ok(MeasureEstimate {
                region_disjoint: true,
                ..est
            });
        }
        if n >= opts.budget {
            return Err(Error::BudgetExceeded {
                budget: opts.budget,
                best: Box::new(est),
            });
        }
        // double the total, without overshooting the budget by much
        let room = (opts.budget - n).div_ceil(count as u64).max(1);
        per = (n / count as u64).max(1).min(room);
    }
}
