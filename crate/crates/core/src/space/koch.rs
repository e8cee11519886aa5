//! Finite-depth von Koch snowflake: the closed boundary polyline, an
//! inside test and a nearest-segment search.

use std::collections::HashMap;

type P2 = [f64; 2];

/// Snowflake built on an equilateral triangle of side `side` centred at the
/// origin, with every edge replaced by its depth-`depth` Koch polyline.
#[derive(Debug)]
pub struct KochGeometry {
    pub side: f64,
    pub depth: u32,
    /// Closed polygon, counter-clockwise; the last vertex is not repeated.
    pub vertices: Vec<P2>,
    rows: RowIndex,
    cells: SegmentGrid,
}

/// Apex of the Koch bump on segment p -> q, on the right-hand side.
pub(crate) fn koch_children(p: P2, q: P2) -> [(P2, P2); 4] {
    let d = [(q[0] - p[0]) / 3.0, (q[1] - p[1]) / 3.0];
    let a = [p[0] + d[0], p[1] + d[1]];
    let b = [p[0] + 2.0 * d[0], p[1] + 2.0 * d[1]];
    // rotate d by -60 degrees
    let (s, c) = (-(60f64.to_radians()).sin(), 60f64.to_radians().cos());
    let apex = [a[0] + c * d[0] - s * d[1], a[1] + s * d[0] + c * d[1]];
    [(p, a), (a, apex), (apex, b), (b, q)]
}

/// Triangle vertices (counter-clockwise) of the depth-0 snowflake.
pub(crate) fn base_triangle(side: f64) -> [P2; 3] {
    let r = side / 3f64.sqrt();
    let ang = |deg: f64| [r * deg.to_radians().cos(), r * deg.to_radians().sin()];
    [ang(90.0), ang(210.0), ang(330.0)]
}

impl KochGeometry {
    pub fn new(side: f64, depth: u32) -> Self {
        let tri = base_triangle(side);
        let mut edges: Vec<(P2, P2)> = (0..3).map(|i| (tri[i], tri[(i + 1) % 3])).collect();
        for _ in 0..depth {
            edges = edges
                .iter()
                .flat_map(|&(p, q)| koch_children(p, q))
                .collect();
        }
        let vertices: Vec<P2> = edges.iter().map(|e| e.0).collect();
        let rows = RowIndex::new(&vertices);
        let cells = SegmentGrid::new(&vertices, side * 3f64.powi(-(depth as i32)));
        KochGeometry {
            side,
            depth,
            vertices,
            rows,
            cells,
        }
    }

    /// Radius of the smallest origin-centred disc containing the snowflake.
    pub fn circumradius(&self) -> f64 {
        self.side / 3f64.sqrt()
    }

    /// Hausdorff distance bound between this polyline and the limit curve.
    pub fn approximation_error(&self) -> f64 {
        self.side * 3f64.powi(-(self.depth as i32))
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn segment(&self, i: usize) -> (P2, P2) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    /// Even-odd crossing test against the depth polygon.
    pub fn contains(&self, x: P2) -> bool {
        if x[0] * x[0] + x[1] * x[1] >= self.circumradius().powi(2) {
            return false;
        }
        // the inscribed disc of the base triangle is always inside
        let inr = self.side / (2.0 * 3f64.sqrt());
        if x[0] * x[0] + x[1] * x[1] < inr * inr * 0.999 {
            return true;
        }
        let mut inside = false;
        for &i in self.rows.candidates(x[1]) {
            let (p, q) = self.segment(i);
            if (p[1] > x[1]) != (q[1] > x[1]) {
                let t = (x[1] - p[1]) / (q[1] - p[1]);
                if p[0] + t * (q[0] - p[0]) > x[0] {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `x` to the depth polyline.
    pub fn distance_to_polyline(&self, x: P2) -> f64 {
        self.cells.nearest(x, |i| seg_dist(x, self.segment(i)))
    }
}

pub(crate) fn seg_dist(x: P2, (p, q): (P2, P2)) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((x[0] - p[0]) * d[0] + (x[1] - p[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = [p[0] + t * d[0], p[1] + t * d[1]];
    ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt()
}

/// Segments bucketed by the horizontal rows their y-range touches.
#[derive(Debug)]
struct RowIndex {
    y0: f64,
    h: f64,
    rows: Vec<Vec<usize>>,
}

impl RowIndex {
    fn new(v: &[P2]) -> Self {
        let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));
        let nrows = (v.len() / 4).clamp(1, 8192);
        let h = ((hi - lo) / nrows as f64).max(f64::MIN_POSITIVE);
        let mut rows = vec![Vec::new(); nrows];
        for i in 0..v.len() {
            let (p, q) = (v[i], v[(i + 1) % v.len()]);
            let a = (((p[1].min(q[1]) - lo) / h).floor() as isize).clamp(0, nrows as isize - 1) as usize;
            let b = (((p[1].max(q[1]) - lo) / h).floor() as isize).clamp(0, nrows as isize - 1) as usize;
            for row in &mut rows[a..=b] {
                row.push(i);
            }
        }
        RowIndex { y0: lo, h, rows }
    }

    fn candidates(&self, y: f64) -> &[usize] {
        let k = ((y - self.y0) / self.h).floor();
        if k < 0.0 || k as usize >= self.rows.len() {
            return &[];
        }
        &self.rows[k as usize]
    }
}

/// Uniform grid over segment bounding boxes for nearest-segment queries.
#[derive(Debug)]
struct SegmentGrid {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
    extent: i64,
}

impl SegmentGrid {
    fn new(v: &[P2], seg_len: f64) -> Self {
        let cell = (seg_len * 4.0).max(1e-9);
        let mut map: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut extent = 0i64;
        for i in 0..v.len() {
            let (p, q) = (v[i], v[(i + 1) % v.len()]);
            let ix0 = (p[0].min(q[0]) / cell).floor() as i64;
            let ix1 = (p[0].max(q[0]) / cell).floor() as i64;
            let iy0 = (p[1].min(q[1]) / cell).floor() as i64;
            let iy1 = (p[1].max(q[1]) / cell).floor() as i64;
            for ix in ix0..=ix1 {
                for iy in iy0..=iy1 {
                    map.entry((ix, iy)).or_default().push(i);
                    extent = extent.max(ix.abs()).max(iy.abs());
                }
            }
        }
        SegmentGrid { cell, map, extent }
    }

    /// Ring search outward from the query cell; stops once the ring is
    /// farther than the best distance found.
    fn nearest(&self, x: P2, dist: impl Fn(usize) -> f64) -> f64 {
        let cx = (x[0] / self.cell).floor() as i64;
        let cy = (x[1] / self.cell).floor() as i64;
        let mut best = f64::INFINITY;
        let max_ring = self.extent + cx.abs().max(cy.abs()) + 2;
        for ring in 0..=max_ring {
            if best.is_finite() && (ring as f64 - 1.0) * self.cell > best {
                break;
            }
            for ix in (cx - ring)..=(cx + ring) {
                for iy in (cy - ring)..=(cy + ring) {
                    if (ix - cx).abs() != ring && (iy - cy).abs() != ring {
                        continue;
                    }
                    if let Some(list) = self.map.get(&(ix, iy)) {
                        for &i in list {
                            best = best.min(dist(i));
                        }
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_count_grows_by_four() {
        for depth in 0..5 {
            let k = KochGeometry::new(1.0, depth);
            assert_eq!(k.segment_count(), 3 * 4usize.pow(depth));
        }
    }

    #[test]
    fn polygon_is_counter_clockwise_with_growing_area() {
        let area = |k: &KochGeometry| {
            let n = k.vertices.len();
            (0..n)
                .map(|i| {
                    let (p, q) = k.segment(i);
                    p[0] * q[1] - q[0] * p[1]
                })
                .sum::<f64>()
                / 2.0
        };
        let a0 = area(&KochGeometry::new(1.0, 0));
        let a1 = area(&KochGeometry::new(1.0, 1));
        let a6 = area(&KochGeometry::new(1.0, 6));
        assert!(a0 > 0.0 && a1 > a0 && a6 > a1);
        // each level adds 3 * 4^(j-1) triangles of area a0 / 9^j
        let expected = 1.0 + (0..6).map(|j| 4f64.powi(j) / 9f64.powi(j)).sum::<f64>() / 3.0;
        assert!((a6 / a0 - expected).abs() < 1e-12);
    }

    #[test]
    fn grid_nearest_matches_brute_force() {
        let k = KochGeometry::new(1.0, 4);
        for &x in &[[0.0, 0.0], [0.3, 0.1], [-0.2, -0.25], [0.9, 0.9], [0.1, 0.55]] {
            let brute = (0..k.segment_count())
                .map(|i| seg_dist(x, k.segment(i)))
                .fold(f64::INFINITY, f64::min);
            assert!((k.distance_to_polyline(x) - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn inside_test_matches_brute_force_crossings() {
        let k = KochGeometry::new(1.0, 3);
        let brute = |x: P2| {
            let mut inside = false;
            for i in 0..k.segment_count() {
                let (p, q) = k.segment(i);
                if (p[1] > x[1]) != (q[1] > x[1]) {
                    let t = (x[1] - p[1]) / (q[1] - p[1]);
                    if p[0] + t * (q[0] - p[0]) > x[0] {
                        inside = !inside;
                    }
                }
            }
            inside
        };
        for i in 0..40 {
            for j in 0..40 {
                let x = [-0.6 + 1.2 * i as f64 / 39.0 + 1e-7, -0.6 + 1.2 * j as f64 / 39.0 + 1e-7];
                assert_eq!(k.contains(x), brute(x), "{x:?}");
            }
        }
    }
}
