//! Discrete fields (u, g) on regular grids and numerical checks of
//! Poincaré-type inequalities, truncation, the Hajlasz pointwise
//! inequality and bump-function certificates.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{euclid, integrate, unit_ball_volume};
use crate::space::{
    ball_measure_with, BallSpec, EstimateOptions, MeasureKind, Metric, Point, RadialProfile, SpaceModel,
};

/// Cell-centred lattice: node i sits at lo + (i + 1/2) h on every axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub h: f64,
    pub shape: Vec<usize>,
}

impl Grid {
    /// `n` cells on [a, b].
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || n == 0 {
            return Err(Error::param("grid", "need a < b and at least one node"));
        }
        Ok(Grid {
            lo: vec![a],
            h: (b - a) / n as f64,
            shape: vec![n],
        })
    }

    /// Cells of side h covering the box [lo, hi]; every side must be a
    /// multiple of h up to rounding.
    pub fn cube(lo: Vec<f64>, hi: &[f64], h: f64) -> Result<Self> {
        if !(h > 0.0) || lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::param("grid", "need h > 0 and matching corners"));
        }
        let mut shape = Vec::with_capacity(lo.len());
        for (a, b) in lo.iter().zip(hi) {
            let k = ((b - a) / h).round();
            if k < 1.0 || ((b - a) / h - k).abs() > 1e-6 {
                return Err(Error::param("grid", "box sides must be positive multiples of h"));
            }
            shape.push(k as usize);
        }
        Ok(Grid { lo, h, shape })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (ax, n) in self.shape.iter().enumerate().rev() {
            idx[ax] = i % n;
            i /= n;
        }
        idx
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn node(&self, i: usize) -> Point {
        self.multi_index(i)
            .iter()
            .zip(&self.lo)
            .map(|(k, a)| a + (*k as f64 + 0.5) * self.h)
            .collect()
    }

    fn neighbor(&self, i: usize, axis: usize, forward: bool) -> Option<usize> {
        let mut idx = self.multi_index(i);
        if forward {
            if idx[axis] + 1 >= self.shape[axis] {
                return None;
            }
            idx[axis] += 1;
        } else {
            if idx[axis] == 0 {
                return None;
            }
            idx[axis] -= 1;
        }
        Some(self.flat(&idx))
    }
}

/// Sampled function u with a nonnegative gradient surrogate g on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub g: Vec<f64>,
    pub mask: Vec<bool>,
}

impl DiscreteField {
    /// u sampled from `f` on every node, g by finite differences.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn_masked(grid, f, |_| true)
    }

    pub fn from_fn_masked(grid: Grid, f: impl Fn(&[f64]) -> f64, inside: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let nodes: Vec<Point> = (0..grid.len()).map(|i| grid.node(i)).collect();
        let mask: Vec<bool> = nodes.iter().map(|x| inside(x)).collect();
        let u: Vec<f64> = nodes.iter().map(|x| f(x)).collect();
        Self::from_values(grid, u, None, mask)
    }

    /// u (and optionally g) given per node; g defaults to finite differences.
    pub fn from_values(grid: Grid, u: Vec<f64>, g: Option<Vec<f64>>, mask: Vec<bool>) -> Result<Self> {
        let n = grid.len();
        if u.len() != n || mask.len() != n || g.as_ref().is_some_and(|g| g.len() != n) {
            return Err(Error::param("field", format!("expected {n} node values")));
        }
        if u.iter().zip(&mask).any(|(v, m)| *m && !v.is_finite()) {
            return Err(Error::param("u", "must be finite on masked nodes"));
        }
        let g = match g {
            Some(g) => {
                if g.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::param("g", "must be nonnegative"));
                }
                g
            }
            None => finite_difference_gradient(&grid, &u, &mask),
        };
        Ok(DiscreteField { grid, u, g, mask })
    }

    pub fn with_gradient(mut self, g: Vec<f64>) -> Result<Self> {
        if g.len() != self.u.len() || g.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::param("g", "need one nonnegative value per node"));
        }
        self.g = g;
        Ok(self)
    }

    pub fn with_gradient_fn(self, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let g = (0..self.grid.len()).map(|i| f(&self.grid.node(i))).collect();
        self.with_gradient(g)
    }

    /// Reads columns x0..x{d-1}, u and optionally g; the nodes must form a
    /// complete cell-centred grid with equal spacing on every axis.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let ucol = col("u").ok_or_else(|| Error::schema("csv.u", "missing column `u`"))?;
        let gcol = col("g");
        let xcols: Vec<usize> = (0..).map_while(|i| col(&format!("x{i}"))).collect();
        if xcols.is_empty() {
            return Err(Error::schema("csv.x0", "missing coordinate column `x0`"));
        }
        let mut rows: Vec<(Point, f64, Option<f64>)> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |c: usize| -> Result<f64> {
                rec.get(c)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::schema(format!("csv row {}", line + 2), format!("bad number in column {c}")))
            };
            let x = xcols.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?;
            let g = gcol.map(num).transpose()?;
            rows.push((x, num(ucol)?, g));
        }
        if rows.is_empty() {
            return Err(Error::schema("csv", "no rows"));
        }
        let dim = xcols.len();
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); dim];
        for (x, _, _) in &rows {
            for (ax, v) in x.iter().enumerate() {
                axes[ax].push(*v);
            }
        }
        for a in &mut axes {
            a.sort_by(f64::total_cmp);
            a.dedup_by(|p, q| (*p - *q).abs() < 1e-9 * (1.0 + q.abs()));
        }
        let h = if axes[0].len() > 1 { axes[0][1] - axes[0][0] } else { 1.0 };
        for a in &axes {
            if a.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
                return Err(Error::schema("csv", "nodes are not equally spaced with a common step"));
            }
        }
        let grid = Grid {
            lo: axes.iter().map(|a| a[0] - h / 2.0).collect(),
            h,
            shape: axes.iter().map(Vec::len).collect(),
        };
        let n = grid.len();
        let mut u = vec![0.0; n];
        let mut g = vec![0.0; n];
        let mut mask = vec![false; n];
        for (x, uv, gv) in &rows {
            let idx: Vec<usize> = x
                .iter()
                .zip(&grid.lo)
                .map(|(v, a)| ((v - a) / h - 0.5).round() as usize)
                .collect();
            let i = grid.flat(&idx);
            u[i] = *uv;
            g[i] = gv.unwrap_or(0.0);
            mask[i] = true;
        }
        let g = if gcol.is_some() { Some(g) } else { None };
        Self::from_values(grid, u, g, mask)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.grid.dim()).map(|i| format!("x{i}")).collect();
        header.extend(["u", "g"].map(String::from));
        out.write_record(&header)?;
        for i in 0..self.grid.len() {
            if !self.mask[i] {
                continue;
            }
            let mut rec: Vec<String> = self.grid.node(i).iter().map(|x| format!("{x:.17e}")).collect();
            rec.push(format!("{:.17e}", self.u[i]));
            rec.push(format!("{:.17e}", self.g[i]));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// |grad u| by central differences, one-sided where a neighbour is masked
/// out or missing.
pub fn finite_difference_gradient(grid: &Grid, u: &[f64], mask: &[bool]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            if !mask[i] {
                return 0.0;
            }
            let mut sq = 0.0;
            for ax in 0..grid.dim() {
                let fwd = grid.neighbor(i, ax, true).filter(|&j| mask[j]);
                let bwd = grid.neighbor(i, ax, false).filter(|&j| mask[j]);
                let d = match (bwd, fwd) {
                    (Some(b), Some(f)) => (u[f] - u[b]) / (2.0 * grid.h),
                    (None, Some(f)) => (u[f] - u[i]) / grid.h,
                    (Some(b), None) => (u[i] - u[b]) / grid.h,
                    (None, None) => 0.0,
                };
                sq += d * d;
            }
            sq.sqrt()
        })
        .collect()
}

/// mu mass attached to each node: density at the node times h^n. A node
/// whose cell holds the singular centre of a radial weight gets the mass of
/// the centred ball with the cell's volume.
pub fn node_weights(space: &SpaceModel, measure_id: &str, grid: &Grid) -> Result<Vec<f64>> {
    let spec = space.measure(measure_id)?;
    if grid.dim() != space.dim {
        return Err(Error::param("grid", format!("grid has dim {}, space has dim {}", grid.dim(), space.dim)));
    }
    let n = space.dim;
    let vol = grid.h.powi(n as i32);
    let singular: Option<(RadialProfile, Point)> = match &spec.kind {
        MeasureKind::RadialPower { theta, center } => Some((RadialProfile::Power(*theta), center.clone().unwrap_or(vec![0.0; n]))),
        MeasureKind::RadialLogSingular { center } => Some((RadialProfile::LogSingular, center.clone().unwrap_or(vec![0.0; n]))),
        MeasureKind::RadialReciprocalLog { center } => Some((RadialProfile::ReciprocalLog, center.clone().unwrap_or(vec![0.0; n]))),
        _ => None,
    };
    let rho_eq = (vol / unit_ball_volume(n)).powf(1.0 / n as f64);
    (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            if !space.domain.contains(&x) {
                return Ok(0.0);
            }
            if let Some((profile, c)) = &singular {
                let in_cell = x.iter().zip(c).all(|(a, b)| (a - b).abs() <= grid.h / 2.0);
                if in_cell {
                    return Ok(profile.centered_mass(n, rho_eq));
                }
            }
            spec.kind
                .density(space, &x)
                .map(|d| d * vol)
                .ok_or_else(|| Error::param("measure", format!("`{measure_id}` has no density; grid quadrature needs one")))
        })
        .collect()
}

fn ser_ratio<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PIReport {
    pub lhs: f64,
    pub rhs: f64,
    /// lhs / rhs; infinite when rhs = 0 < lhs, 0 when both vanish.
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: f64,
    pub ball: BallSpec,
    pub p: f64,
    pub q: Option<f64>,
    pub q_prime: Option<f64>,
    pub alpha: f64,
    pub lambda: f64,
    /// Set when rhs = 0 < lhs: (u, g) cannot satisfy any such inequality.
    pub inadmissible: bool,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn nodes_in(field: &DiscreteField, metric: Metric, c: &[f64], r: f64) -> Vec<usize> {
    (0..field.grid.len())
        .filter(|&i| field.mask[i] && metric.distance(&field.grid.node(i), c) < r)
        .collect()
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", "must be >= 1"));
    }
    Ok(())
}

/// mu-average of |u - u_B| over B against diam(B)^alpha times the p-mean of
/// g over lambda B. Nodes outside the grid are absent, so the integrals run
/// over the parts of B and lambda B covered by the grid.
pub fn check_pi(
    field: &DiscreteField,
    space: &SpaceModel,
    ball: &BallSpec,
    mu_id: &str,
    p: f64,
    alpha: f64,
    lambda: f64,
) -> Result<PIReport> {
    check_p(p)?;
    if !(lambda >= 1.0) {
        return Err(Error::param("lambda", "must be >= 1"));
    }
    let w = node_weights(space, mu_id, &field.grid)?;
    let inner = nodes_in(field, space.metric, &ball.center, ball.radius);
    let outer = nodes_in(field, space.metric, &ball.center, lambda * ball.radius);
    let mb: f64 = inner.iter().map(|&i| w[i]).sum();
    let mlb: f64 = outer.iter().map(|&i| w[i]).sum();
    if inner.is_empty() || mb <= 0.0 || mlb <= 0.0 {
        return Err(Error::EmptyBall {
            center: ball.center.clone(),
            radius: ball.radius,
        });
    }
    let ub = inner.iter().map(|&i| w[i] * field.u[i]).sum::<f64>() / mb;
    let lhs = inner.iter().map(|&i| w[i] * (field.u[i] - ub).abs()).sum::<f64>() / mb;
    let gp = (outer.iter().map(|&i| w[i] * field.g[i].powf(p)).sum::<f64>() / mlb).powf(1.0 / p);
    let rhs = (2.0 * ball.radius).powf(alpha) * gp;
    let ratio = ratio(lhs, rhs);
    Ok(PIReport {
        lhs,
        rhs,
        ratio,
        ball: ball.clone(),
        p,
        q: None,
        q_prime: None,
        alpha,
        lambda,
        inadmissible: ratio.is_infinite(),
    })
}

/// Parameters of a two-weight check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoWeightParams {
    pub p: f64,
    pub q_prime: f64,
    pub q: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// Theta_{q,lambda} at the ball's radius.
    pub theta_at_r: f64,
    /// The field family is closed under truncation, allowing q' = q.
    pub truncation: bool,
}

/// lhs = (int over B ∩ E of |u - u_{B,mu}|^{q'} dnu)^{1/q'};
/// rhs = Theta(r) nu(B ∩ E)^{1/q' - 1/q} K (int over 2 lambda B of g^p dmu)^{1/p},
/// with K = 1/(q - q') for q' < q and K = 1 in the truncation case q' = q.
pub fn two_weight_pi_check(
    field: &DiscreteField,
    space: &SpaceModel,
    ball: &BallSpec,
    e_mask: Option<&[bool]>,
    mu_id: &str,
    nu_id: &str,
    params: &TwoWeightParams,
) -> Result<PIReport> {
    let TwoWeightParams {
        p,
        q_prime,
        q,
        alpha,
        lambda,
        theta_at_r,
        truncation,
    } = *params;
    check_p(p)?;
    if !(q > p) {
        return Err(Error::param("q", "two-weight check needs q > p"));
    }
    if !(q_prime > 0.0) {
        return Err(Error::param("q_prime", "must be positive"));
    }
    if q_prime > q || (q_prime == q && !truncation) {
        return Err(Error::param("q_prime", "need q' < q, or q' = q for truncation-closed families"));
    }
    if let Some(m) = e_mask {
        if m.len() != field.grid.len() {
            return Err(Error::param("e_mask", "one flag per node"));
        }
    }
    let wm = node_weights(space, mu_id, &field.grid)?;
    let wn = node_weights(space, nu_id, &field.grid)?;
    let inner = nodes_in(field, space.metric, &ball.center, ball.radius);
    let mb: f64 = inner.iter().map(|&i| wm[i]).sum();
    if inner.is_empty() || mb <= 0.0 {
        return Err(Error::EmptyBall {
            center: ball.center.clone(),
            radius: ball.radius,
        });
    }
    let ub = inner.iter().map(|&i| wm[i] * field.u[i]).sum::<f64>() / mb;
    let in_e = |i: usize| e_mask.is_none_or(|m| m[i]);
    let be: Vec<usize> = inner.iter().copied().filter(|&i| in_e(i)).collect();
    let nu_be: f64 = be.iter().map(|&i| wn[i]).sum();
    let lhs = be
        .iter()
        .map(|&i| wn[i] * (field.u[i] - ub).abs().powf(q_prime))
        .sum::<f64>()
        .powf(1.0 / q_prime);
    let outer = nodes_in(field, space.metric, &ball.center, 2.0 * lambda * ball.radius);
    let gint = outer.iter().map(|&i| wm[i] * field.g[i].powf(p)).sum::<f64>().powf(1.0 / p);
    let k = if q_prime < q { 1.0 / (q - q_prime) } else { 1.0 };
    let rhs = theta_at_r * nu_be.powf(1.0 / q_prime - 1.0 / q) * k * gint;
    let ratio = ratio(lhs, rhs);
    Ok(PIReport {
        lhs,
        rhs,
        ratio,
        ball: ball.clone(),
        p,
        q: Some(q),
        q_prime: Some(q_prime),
        alpha,
        lambda,
        inadmissible: ratio.is_infinite(),
    })
}

/// u_{l,k} = max{l, min{u, k}} and g_{l,k} = g on {l < u < k}, 0 elsewhere.
pub fn truncate(field: &DiscreteField, l: f64, k: f64) -> Result<DiscreteField> {
    if !(l < k) {
        return Err(Error::param("l", "truncation needs l < k"));
    }
    let u = field.u.iter().map(|v| v.clamp(l, k)).collect();
    let g = field
        .u
        .iter()
        .zip(&field.g)
        .map(|(v, g)| if l < *v && *v < k { *g } else { 0.0 })
        .collect();
    Ok(DiscreteField {
        grid: field.grid.clone(),
        u,
        g,
        mask: field.mask.clone(),
    })
}

/// max over node pairs of |u(x) - u(y)| - d(x, y)^alpha (g(x) + g(y)).
/// All pairs are visited when `pair_sample` covers them; otherwise
/// `pair_sample` random pairs are drawn from `seed`.
pub fn hajlasz_check(field: &DiscreteField, metric: Metric, alpha: f64, pair_sample: u64, seed: u64) -> Result<f64> {
    if pair_sample == 0 {
        return Err(Error::param("pair_sample", "must be at least 1"));
    }
    let nodes: Vec<usize> = (0..field.grid.len()).filter(|&i| field.mask[i]).collect();
    let pts: Vec<Point> = nodes.iter().map(|&i| field.grid.node(i)).collect();
    let m = nodes.len();
    if m < 2 {
        return Ok(f64::NEG_INFINITY);
    }
    let violation = |a: usize, b: usize| {
        let (i, j) = (nodes[a], nodes[b]);
        (field.u[i] - field.u[j]).abs() - metric.distance(&pts[a], &pts[b]).powf(alpha) * (field.g[i] + field.g[j])
    };
    let total = (m as u64) * (m as u64 - 1) / 2;
    if pair_sample >= total {
        return Ok((0..m)
            .into_par_iter()
            .map(|a| ((a + 1)..m).map(|b| violation(a, b)).fold(f64::NEG_INFINITY, f64::max))
            .reduce(|| f64::NEG_INFINITY, f64::max));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..pair_sample {
        let a = rng.gen_range(0..m);
        let mut b = rng.gen_range(0..m - 1);
        if b >= a {
            b += 1;
        }
        best = best.max(violation(a, b));
    }
    Ok(best)
}

/// int_B |u - u_B|^p dmu against 2^(alpha p + p) r^(alpha p) int_B g^p dmu,
/// the averaged form of the Hajlasz inequality on B.
pub fn hajlasz_integral_check(
    field: &DiscreteField,
    space: &SpaceModel,
    ball: &BallSpec,
    mu_id: &str,
    p: f64,
    alpha: f64,
) -> Result<PIReport> {
    check_p(p)?;
    let w = node_weights(space, mu_id, &field.grid)?;
    let inner = nodes_in(field, space.metric, &ball.center, ball.radius);
    let mb: f64 = inner.iter().map(|&i| w[i]).sum();
    if inner.is_empty() || mb <= 0.0 {
        return Err(Error::EmptyBall {
            center: ball.center.clone(),
            radius: ball.radius,
        });
    }
    let ub = inner.iter().map(|&i| w[i] * field.u[i]).sum::<f64>() / mb;
    let lhs = inner.iter().map(|&i| w[i] * (field.u[i] - ub).abs().powf(p)).sum::<f64>();
    let gint = inner.iter().map(|&i| w[i] * field.g[i].powf(p)).sum::<f64>();
    let rhs = 2f64.powf(alpha * p + p) * ball.radius.powf(alpha * p) * gint;
    let ratio = ratio(lhs, rhs);
    Ok(PIReport {
        lhs,
        rhs,
        ratio,
        ball: ball.clone(),
        p,
        q: None,
        q_prime: None,
        alpha,
        lambda: 1.0,
        inadmissible: ratio.is_infinite(),
    })
}

pub fn write_reports_csv<W: Write>(reports: &[PIReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["lhs", "rhs", "ratio", "radius", "p", "q", "q_prime", "alpha", "lambda"])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
    for r in reports {
        out.write_record([
            format!("{:.17e}", r.lhs),
            format!("{:.17e}", r.rhs),
            format!("{:.17e}", r.ratio),
            format!("{:.17e}", r.ball.radius),
            format!("{}", r.p),
            opt(r.q),
            opt(r.q_prime),
            format!("{}", r.alpha),
            format!("{}", r.lambda),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Plateau function a (1 - dist(x, B)/((lambda - 1) r))_+ with its
/// gradient surrogate chi_{lambda B} / mu(lambda B)^{1/p}.
#[derive(Debug, Clone, Serialize)]
pub struct BumpCertificate {
    pub ball: BallSpec,
    pub lambda: f64,
    pub p: f64,
    /// a = (lambda - 1) r / mu(lambda B)^{1/p}.
    pub a: f64,
    /// Value of u on B.
    pub u_on_b: f64,
    pub mu_lambda_b: f64,
    pub g_norm_p: f64,
    /// ||u||_{L^p(mu)} by the layer-cake formula.
    pub u_norm_p: f64,
    /// Error bound on `u_norm_p` from quadrature and ball measures.
    pub u_norm_error: f64,
    #[serde(skip)]
    pub field: Option<DiscreteField>,
}

impl BumpCertificate {
    /// u at a point.
    pub fn value_at(&self, metric: Metric, x: &[f64]) -> f64 {
        let r = self.ball.radius;
        let dist = (metric.distance(x, &self.ball.center) - r).max(0.0);
        self.a * (1.0 - dist / ((self.lambda - 1.0) * r)).max(0.0)
    }
}

/// Builds the bump certificate on B(x, r). `grid_nodes` > 0 also samples the
/// bump on a grid of that many nodes per axis over lambda B (dimension <= 3).
pub fn bump_certificate(
    space: &SpaceModel,
    mu_id: &str,
    ball: &BallSpec,
    lambda: f64,
    p: f64,
    grid_nodes: usize,
    opts: &EstimateOptions,
) -> Result<BumpCertificate> {
    check_p(p)?;
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "bump needs lambda > 1"));
    }
    let r = ball.radius;
    let big = BallSpec::new(ball.center.clone(), lambda * r);
    let m = ball_measure_with(space, mu_id, &big, opts)?;
    if m.value <= 0.0 {
        return Err(Error::DegenerateMeasure {
            center: ball.center.clone(),
            radius: lambda * r,
        });
    }
    let a = (lambda - 1.0) * r / m.value.powf(1.0 / p);
    // g = mu(lambda B)^(-1/p) on lambda B, so ||g||_p = 1
    let g_norm_p = 1.0;

    // layer cake: int u^p = int_0^a p s^(p-1) mu({u > s}) ds, with
    // {u > s} = B(x, r + (lambda - 1) r (1 - s/a))
    let sub = EstimateOptions {
        target_rel_error: opts.target_rel_error.min(1e-3),
        ..*opts
    };
    let meas_err = std::cell::Cell::new(0.0f64);
    let failure = std::cell::RefCell::new(None);
    let level = |s: f64| {
        let rad = r + (lambda - 1.0) * r * (1.0 - s / a);
        match ball_measure_with(space, mu_id, &BallSpec::new(ball.center.clone(), rad), &sub) {
            Ok(est) => {
                meas_err.set(meas_err.get().max(est.rel_error()));
                p * s.powf(p - 1.0) * est.value
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let (int, qerr) = integrate(level, 0.0, a, 0.0, 1e-10, 200);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let u_pp = int.max(0.0);
    let u_norm_p = u_pp.powf(1.0 / p);
    let pp_err = qerr + meas_err.get() * u_pp;
    let u_norm_error = if u_pp > 0.0 { u_norm_p * pp_err / (p * u_pp) } else { 0.0 };

    let mut cert = BumpCertificate {
        ball: ball.clone(),
        lambda,
        p,
        a,
        u_on_b: a,
        mu_lambda_b: m.value,
        g_norm_p,
        u_norm_p,
        u_norm_error,
        field: None,
    };
    if grid_nodes > 0 && space.dim <= 3 {
        let h = 2.0 * lambda * r / grid_nodes as f64;
        let lo: Vec<f64> = ball.center.iter().map(|c| c - lambda * r).collect();
        let hi: Vec<f64> = ball.center.iter().map(|c| c + lambda * r).collect();
        let grid = Grid::cube(lo, &hi, h)?;
        let gval = 1.0 / m.value.powf(1.0 / p);
        let nodes: Vec<Point> = (0..grid.len()).map(|i| grid.node(i)).collect();
        let u = nodes.iter().map(|x| cert.value_at(space.metric, x)).collect();
        let g = nodes
            .iter()
            .map(|x| if space.metric.distance(x, &ball.center) < lambda * r { gval } else { 0.0 })
            .collect();
        let mask = vec![true; nodes.len()];
        cert.field = Some(DiscreteField::from_values(grid, u, Some(g), mask)?);
    }
    Ok(cert)
}

/// r^alpha nu(B)^{1/q} / mu(lambda B)^{1/p}, the quantity a bump on B
/// certifies: ||u||_{L^q(nu)} >= (lambda - 1) times this ratio while
/// ||g||_{L^p(mu)} = 1.
#[allow(clippy::too_many_arguments)]
pub fn certificate_ratio(
    space: &SpaceModel,
    mu_id: &str,
    nu_id: &str,
    ball: &BallSpec,
    lambda: f64,
    p: f64,
    q: f64,
    alpha: f64,
    opts: &EstimateOptions,
) -> Result<(f64, f64)> {
    let nu = ball_measure_with(space, nu_id, ball, opts)?;
    let mu = ball_measure_with(space, mu_id, &BallSpec::new(ball.center.clone(), lambda * ball.radius), opts)?;
    if mu.value <= 0.0 {
        return Err(Error::DegenerateMeasure {
            center: ball.center.clone(),
            radius: lambda * ball.radius,
        });
    }
    let v = ball.radius.powf(alpha) * nu.value.powf(1.0 / q) / mu.value.powf(1.0 / p);
    Ok((v, v * (nu.rel_error() / q + mu.rel_error() / p)))
}

/// Distance between two grid nodes; exposed for tests of exhaustive search.
pub fn node_distance(field: &DiscreteField, i: usize, j: usize) -> f64 {
    euclid(&field.grid.node(i), &field.grid.node(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MeasureSpec;

    fn line() -> SpaceModel {
        SpaceModel::euclidean(
            1,
            vec![MeasureSpec {
                id: "m".into(),
                kind: MeasureKind::Lebesgue,
            }],
        )
        .unwrap()
    }

    #[test]
    fn central_differences_are_exact_on_linear_functions() {
        let grid = Grid::cube(vec![0.0, 0.0], &[1.0, 1.0], 0.1).unwrap();
        let f = DiscreteField::from_fn(grid, |x| 3.0 * x[0] - 4.0 * x[1]).unwrap();
        assert!(f.g.iter().all(|g| (g - 5.0).abs() < 1e-12));
    }

    #[test]
    fn linear_function_on_unit_interval() {
        let f = DiscreteField::from_fn(Grid::interval(0.0, 1.0, 1000).unwrap(), |x| x[0]).unwrap();
        let rep = check_pi(&f, &line(), &BallSpec::new(vec![0.5], 0.5), "m", 1.0, 1.0, 1.0).unwrap();
        assert!((rep.lhs - 0.25).abs() < 1e-12);
        assert!((rep.rhs - 1.0).abs() < 1e-12);
        let flat = f.clone().with_gradient(vec![0.0; 1000]).unwrap();
        let rep = check_pi(&flat, &line(), &BallSpec::new(vec![0.5], 0.5), "m", 1.0, 1.0, 1.0).unwrap();
        assert!(rep.ratio.is_infinite() && rep.inadmissible);
    }

    #[test]
    fn truncation_formula() {
        let f = DiscreteField::from_fn(Grid::interval(0.0, 1.0, 100).unwrap(), |x| x[0]).unwrap();
        let t = truncate(&f, 0.2, 0.7).unwrap();
        for i in 0..100 {
            let x = f.grid.node(i)[0];
            assert_eq!(t.u[i], x.clamp(0.2, 0.7));
            assert_eq!(t.g[i] > 0.0, 0.2 < x && x < 0.7);
        }
        let id = truncate(&f, -1.0, 2.0).unwrap();
        assert_eq!(id, f);
        assert!(truncate(&f, 0.5, 0.5).is_err());
    }

    #[test]
    fn random_pair_search_never_exceeds_exhaustive() {
        let f = DiscreteField::from_fn(Grid::interval(0.0, 1.0, 50).unwrap(), |x| (7.0 * x[0]).sin())
            .unwrap()
            .with_gradient(vec![0.3; 50])
            .unwrap();
        let all = hajlasz_check(&f, Metric::Euclidean, 1.0, u64::MAX, 0).unwrap();
        let some = hajlasz_check(&f, Metric::Euclidean, 1.0, 300, 9).unwrap();
        assert!(some <= all);
    }

    #[test]
    fn bump_in_one_dimension() {
        let c = bump_certificate(&line(), "m", &BallSpec::new(vec![0.0], 0.1), 2.0, 2.0, 0, &Default::default())
            .unwrap();
        assert!((c.a - 0.1 / 0.4f64.sqrt()).abs() < 1e-15);
        assert!((c.g_norm_p - 1.0).abs() < 1e-15);
        // ||u||_2^2 = a^2 (2 r + 2 * (lambda-1) r / 3)
        let exact = (c.a * c.a * (0.2 + 0.2 / 3.0)).sqrt();
        assert!((c.u_norm_p - exact).abs() < 1e-9);
        assert!(c.u_norm_p <= 0.1);
    }
}
