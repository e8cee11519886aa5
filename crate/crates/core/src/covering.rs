//! Greedy maximal r-separated coverings and overlap certificates.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{Metric, Point};

/// Above this many points the greedy scan uses a uniform grid index.
const GRID_THRESHOLD: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedyOrder {
    Input,
    #[default]
    Lexicographic,
}

/// Centres drawn from a sample such that the balls B(x_i, r) cover the
/// sample and the centres are pairwise at distance >= r.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverFamily {
    pub centers: Vec<Point>,
    pub radius: f64,
    pub dilation: f64,
    pub source_sample_size: usize,
    pub metric: Metric,
}

#[derive(Serialize)]
struct CoverJson<'a> {
    r: f64,
    lambda: f64,
    centers: &'a [Point],
}

impl CoverFamily {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(CoverJson {
            r: self.radius,
            lambda: self.dilation,
            centers: &self.centers,
        })
        .expect("cover serialises")
    }

    pub fn with_dilation(mut self, lambda: f64) -> Result<Self> {
        check_dilation(lambda)?;
        self.dilation = lambda;
        Ok(self)
    }

    /// Smallest pairwise centre distance (infinite for fewer than 2 centres).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.centers.iter().enumerate() {
            for b in &self.centers[i + 1..] {
                best = best.min(self.metric.distance(a, b));
            }
        }
        best
    }

    /// True when every point is at distance < r from some centre.
    pub fn covers(&self, sample: &[Point]) -> bool {
        sample.par_iter().all(|p| {
            self.centers
                .iter()
                .any(|c| self.metric.distance(p, c) < self.radius)
        })
    }
}

fn check_dilation(lambda: f64) -> Result<()> {
    if !(lambda >= 0.5 && lambda.is_finite()) {
        return Err(Error::param("lambda", "dilation must be >= 1/2"));
    }
    Ok(())
}

/// Greedy scan: a point becomes a centre iff it is at distance >= r from
/// every centre accepted so far.
pub fn build_cover(sample: &[Point], r: f64, metric: Metric, order: GreedyOrder) -> Result<CoverFamily> {
    if sample.is_empty() {
        return Err(Error::param("sample", "must not be empty"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("r", "must be positive and finite"));
    }
    let dim = sample[0].len();
    if sample.iter().any(|p| p.len() != dim) {
        return Err(Error::param("sample", "points have mixed dimensions"));
    }
    let mut idx: Vec<usize> = (0..sample.len()).collect();
    if order == GreedyOrder::Lexicographic {
        idx.sort_by(|&a, &b| {
            sample[a]
                .iter()
                .zip(&sample[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
    }
    let centers = if sample.len() > GRID_THRESHOLD && dim <= 3 {
        greedy_grid(sample, &idx, r, metric)
    } else {
        greedy_naive(sample, &idx, r, metric)
    };
    Ok(CoverFamily {
        centers,
        radius: r,
        dilation: 1.0,
        source_sample_size: sample.len(),
        metric,
    })
}

fn greedy_naive(sample: &[Point], idx: &[usize], r: f64, metric: Metric) -> Vec<Point> {
    let mut centers: Vec<Point> = Vec::new();
    for &i in idx {
        let p = &sample[i];
        if centers.iter().all(|c| metric.distance(p, c) >= r) {
            centers.push(p.clone());
        }
    }
    centers
}

fn cell_of(p: &[f64], h: f64) -> Vec<i64> {
    p.iter().map(|x| (x / h).floor() as i64).collect()
}

/// Same decisions as [`greedy_naive`]; only centres in neighbouring cells
/// of side r (Euclidean) are compared.
fn greedy_grid(sample: &[Point], idx: &[usize], r: f64, metric: Metric) -> Vec<Point> {
    let h = metric.euclidean_radius(r);
    let dim = sample[0].len();
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut centers: Vec<Point> = Vec::new();
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(dim as u32))
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let o = (k % 3) as i64 - 1;
                    k /= 3;
                    o
                })
                .collect()
        })
        .collect();
    for &i in idx {
        let p = &sample[i];
        let cell = cell_of(p, h);
        let clash = offsets.iter().any(|off| {
            let key: Vec<i64> = cell.iter().zip(off).map(|(a, b)| a + b).collect();
            grid.get(&key)
                .is_some_and(|list| list.iter().any(|&c| metric.distance(p, &centers[c]) < r))
        });
        if !clash {
            grid.entry(cell).or_default().push(centers.len());
            centers.push(p.clone());
        }
    }
    centers
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub max_overlap: u64,
    pub probe_count: usize,
    pub guaranteed_bound: Option<u64>,
    pub lambda: f64,
    /// A probe attaining the maximum.
    pub argmax: Option<Point>,
    #[serde(skip)]
    pub counts: Vec<(Point, u64)>,
}

impl OverlapReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let dim = self.counts.first().map_or(0, |c| c.0.len());
        let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        header.push("overlap".into());
        out.write_record(&header)?;
        for (p, n) in &self.counts {
            let mut row: Vec<String> = p.iter().map(|x| format!("{x:.17e}")).collect();
            row.push(n.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// max over probes of #{i : probe in B(x_i, lambda r)}.
///
/// The centres themselves are always probed as well, so the maximum is at
/// least 1 whenever the cover is nonempty.
pub fn measure_overlap(cover: &CoverFamily, lambda: f64, probes: &[Point]) -> Result<OverlapReport> {
    check_dilation(lambda)?;
    if probes.is_empty() {
        return Err(Error::param("probes", "must not be empty"));
    }
    let radius = lambda * cover.radius;
    let all: Vec<&Point> = probes.iter().chain(cover.centers.iter()).collect();
    let counts: Vec<(Point, u64)> = all
        .par_iter()
        .map(|p| {
            let n = cover
                .centers
                .iter()
                .filter(|c| cover.metric.distance(p, c) < radius)
                .count() as u64;
            ((*p).clone(), n)
        })
        .collect();
    // first probe attaining the max, independent of scheduling
    let (argmax, max_overlap) = counts
        .iter()
        .fold((None, 0u64), |(arg, best), (p, n)| if *n > best { (Some(p.clone()), *n) } else { (arg, best) });
    Ok(OverlapReport {
        max_overlap,
        probe_count: counts.len(),
        guaranteed_bound: None,
        lambda,
        argmax,
        counts,
    })
}

/// Data from which an overlap bound can be derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DoublingModel {
    /// A known covering number M.
    Geometric { m: u64 },
    /// A doubling constant of the measure, applied `iterations` times to go
    /// from radius r/2 to (4 lambda + 1) r/2; defaults to ceil(log2(4 lambda + 1)).
    Measure { c_mu: f64, iterations: Option<u32> },
    /// Lebesgue measure on R^dim, for which the ratio is exact.
    Lebesgue { dim: usize },
}

/// Upper bound on the overlap of the dilated balls lambda B_i.
pub fn guaranteed_overlap_bound(model: DoublingModel, lambda: f64) -> Result<u64> {
    check_dilation(lambda)?;
    let ratio = 4.0 * lambda + 1.0;
    let bound = match model {
        DoublingModel::Geometric { m } => return Ok(m),
        DoublingModel::Lebesgue { dim } => ratio.powi(dim as i32),
        DoublingModel::Measure { c_mu, iterations } => {
            if !(c_mu >= 1.0 && c_mu.is_finite()) {
                return Err(Error::param("c_mu", "doubling constant must be >= 1"));
            }
            let k = iterations.unwrap_or_else(|| ratio.log2().ceil() as u32);
            c_mu.powi(k as i32)
        }
    };
    if bound > u64::MAX as f64 {
        return Ok(u64::MAX);
    }
    Ok((bound + 1e-9).floor() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn greedy_on_the_line() {
        let s = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let c = build_cover(&s, 0.3, Metric::Euclidean, GreedyOrder::Input).unwrap();
        assert_eq!(c.centers, line(&[0.0, 0.5, 1.0]));
        let c = build_cover(&line(&[0.0, 1.0]), 0.5, Metric::Euclidean, GreedyOrder::Input).unwrap();
        assert_eq!(c.centers.len(), 2);
    }

    #[test]
    fn overlap_at_a_probe() {
        let s = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let c = build_cover(&s, 0.3, Metric::Euclidean, GreedyOrder::Input).unwrap();
        let rep = measure_overlap(&c, 2.0, &line(&[0.5])).unwrap();
        assert_eq!(rep.counts[0].1, 3);
        let grid: Vec<Point> = (0..200).map(|i| vec![i as f64 / 199.0]).collect();
        assert_eq!(measure_overlap(&c, 0.5, &grid).unwrap().max_overlap, 1);
    }

    #[test]
    fn lebesgue_bounds() {
        assert_eq!(guaranteed_overlap_bound(DoublingModel::Lebesgue { dim: 1 }, 1.0).unwrap(), 5);
        assert_eq!(guaranteed_overlap_bound(DoublingModel::Lebesgue { dim: 2 }, 2.0).unwrap(), 81);
        assert_eq!(guaranteed_overlap_bound(DoublingModel::Lebesgue { dim: 1 }, 0.5).unwrap(), 3);
        assert!(guaranteed_overlap_bound(DoublingModel::Measure { c_mu: 0.5, iterations: None }, 1.0).is_err());
        // 2^n applied ceil(log2 5) = 3 times in R^1
        assert_eq!(
            guaranteed_overlap_bound(DoublingModel::Measure { c_mu: 2.0, iterations: None }, 1.0).unwrap(),
            8
        );
    }

    #[test]
    fn grid_index_matches_naive_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let s: Vec<Point> = (0..3000).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let idx: Vec<usize> = (0..s.len()).collect();
        for metric in [Metric::Euclidean, Metric::Snowflake { exponent: 0.5 }] {
            assert_eq!(greedy_grid(&s, &idx, 0.07, metric), greedy_naive(&s, &idx, 0.07, metric));
        }
    }
}
