//! Cantor-type sets on [0, 1] and the natural self-similar measures on
//! Cantor sets and Koch curves.

use rand::Rng;

use super::koch::{base_triangle, koch_children};

/// Attractor of `parts` contractions of ratio `ratio`, evenly spread over
/// [0, 1] with the first cell at 0 and the last ending at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorSet {
    pub ratio: f64,
    pub parts: usize,
    /// Depth used for membership tests and sampling.
    pub depth: u32,
}

impl CantorSet {
    pub fn ternary(depth: u32) -> Self {
        CantorSet {
            ratio: 1.0 / 3.0,
            parts: 2,
            depth,
        }
    }

    pub fn dimension(&self) -> f64 {
        (self.parts as f64).ln() / (1.0 / self.ratio).ln()
    }

    /// Left end of child `i` of the cell [a, a + len].
    fn child(&self, a: f64, len: f64, i: usize) -> f64 {
        let gap = (1.0 - self.ratio * self.parts as f64) / (self.parts - 1) as f64;
        a + len * i as f64 * (self.ratio + gap)
    }

    pub fn contains(&self, x: f64) -> bool {
        if !(0.0..=1.0).contains(&x) {
            return false;
        }
        let (mut a, mut len) = (0.0, 1.0);
        let tol = 1e-12;
        'level: for _ in 0..self.depth {
            let clen = len * self.ratio;
            for i in 0..self.parts {
                let c = self.child(a, len, i);
                if x >= c - tol && x <= c + clen + tol {
                    a = c;
                    len = clen;
                    continue 'level;
                }
            }
            return false;
        }
        true
    }

    /// A point of the depth-`depth` cell with a uniformly random address.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let (mut a, mut len) = (0.0, 1.0);
        for _ in 0..self.depth {
            let i = rng.gen_range(0..self.parts);
            a = self.child(a, len, i);
            len *= self.ratio;
        }
        a + len * rng.gen::<f64>()
    }

    /// Natural measure of the open interval (c - r, c + r), normalised to
    /// total mass 1. Cells are refined only where they straddle an endpoint.
    pub fn interval_measure(&self, c: f64, r: f64, rel_tol: f64) -> (f64, f64) {
        let (lo, hi) = (c - r, c + r);
        let eps = 1e-12 * (1.0 + c.abs() + r);
        let mass_step = 1.0 / self.parts as f64;
        let mut full = 0.0;
        let mut frontier = vec![(0.0f64, 1.0f64, 1.0f64)];
        for _ in 0..200 {
            let mut next = Vec::new();
            for &(a, len, mass) in &frontier {
                let b = a + len;
                if b <= lo + eps || a >= hi - eps {
                    continue;
                }
                // boundary points carry no mass, so touching counts as inside
                if a >= lo - eps && b <= hi + eps {
                    full += mass;
                    continue;
                }
                for i in 0..self.parts {
                    next.push((self.child(a, len, i), len * self.ratio, mass * mass_step));
                }
            }
            frontier = next;
            let partial: f64 = frontier.iter().map(|f| f.2).sum();
            if partial <= rel_tol * full || frontier.is_empty() || partial < 1e-300 {
                return (full + partial / 2.0, partial / 2.0);
            }
        }
        let partial: f64 = frontier.iter().map(|f| f.2).sum();
        (full + partial / 2.0, partial / 2.0)
    }
}

/// Natural measure on a union of Koch curves: a sub-curve over a chord of
/// length `l` carries mass `l^d`, d = log 4 / log 3.
#[derive(Debug, Clone)]
pub struct KochCurveMeasure {
    pub edges: Vec<([f64; 2], [f64; 2])>,
}

pub fn koch_dimension() -> f64 {
    4f64.ln() / 3f64.ln()
}

impl KochCurveMeasure {
    /// The three edges of the snowflake with side `side` centred at the origin.
    pub fn snowflake(side: f64) -> Self {
        let t = base_triangle(side);
        KochCurveMeasure {
            edges: (0..3).map(|i| (t[i], t[(i + 1) % 3])).collect(),
        }
    }

    /// Measure of the open disc B(c, r), refining straddling pieces until
    /// their total mass is below `rel_tol` times the settled mass.
    pub fn disc_measure(&self, c: [f64; 2], r: f64, rel_tol: f64) -> (f64, f64) {
        let d = koch_dimension();
        let mut full = 0.0;
        let mut frontier = self.edges.clone();
        for _ in 0..40 {
            let mut next = Vec::new();
            let mut partial = 0.0;
            for &(p, q) in &frontier {
                let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
                let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                let dc = ((mid[0] - c[0]).powi(2) + (mid[1] - c[1]).powi(2)).sqrt();
                // the sub-curve stays in the closed disc of radius len/2 at mid
                if dc - len / 2.0 >= r {
                    continue;
                }
                if dc + len / 2.0 <= r {
                    full += len.powf(d);
                    continue;
                }
                partial += len.powf(d);
                next.extend(koch_children(p, q));
            }
            frontier = next;
            if partial <= rel_tol * full || frontier.is_empty() || frontier.len() > 4_000_000 {
                return (full + partial / 2.0, partial / 2.0);
            }
        }
        let partial: f64 = frontier
            .iter()
            .map(|(p, q)| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt().powf(d))
            .sum();
        (full + partial / 2.0, partial / 2.0)
    }

    pub fn total_mass(&self) -> f64 {
        let d = koch_dimension();
        self.edges
            .iter()
            .map(|(p, q)| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt().powf(d))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ternary_interval_measures() {
        let c = CantorSet::ternary(12);
        let (v, e) = c.interval_measure(0.0, 1.0 / 9.0, 1e-9);
        assert_eq!(e, 0.0);
        assert!((v - 0.25).abs() < 1e-15);
        let (v, _) = c.interval_measure(0.5, 0.5, 1e-9);
        assert!((v - 1.0).abs() < 1e-15);
        // (1/3, 2/3) is a gap
        let (v, _) = c.interval_measure(0.5, 1.0 / 6.0, 1e-9);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn interval_measure_matches_mass_counting() {
        // count depth-10 cells whose midpoints fall in the interval
        let c = CantorSet::ternary(10);
        let (centre, r): (f64, f64) = (0.3, 0.21);
        let mut count = 0usize;
        for addr in 0..(1usize << 10) {
            let mut a = 0.0;
            let mut len = 1.0;
            for bit in (0..10).rev() {
                len /= 3.0;
                if addr >> bit & 1 == 1 {
                    a += 2.0 * len;
                }
            }
            let mid = a + len / 2.0;
            if (mid - centre).abs() < r {
                count += 1;
            }
        }
        let oracle = count as f64 / 1024.0;
        let (v, e) = c.interval_measure(centre, r, 1e-6);
        assert!((v - oracle).abs() <= e + 2.0 / 1024.0, "{v} vs {oracle}");
    }

    #[test]
    fn samples_are_members() {
        let c = CantorSet {
            ratio: 0.25,
            parts: 3,
            depth: 8,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            assert!(c.contains(c.sample(&mut rng)));
        }
    }

    #[test]
    fn koch_disc_containing_everything_has_total_mass() {
        let m = KochCurveMeasure::snowflake(1.0);
        let (v, e) = m.disc_measure([0.0, 0.0], 1.0, 1e-9);
        assert_eq!(e, 0.0);
        assert!((v - 3.0).abs() < 1e-12);
        assert!((m.total_mass() - 3.0).abs() < 1e-12);
    }
}
