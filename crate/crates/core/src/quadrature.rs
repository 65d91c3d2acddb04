//! Composite Gauss-Legendre quadrature over band interiors.
//!
//! Each integration segment `[p, q]` is mapped to `t ∈ [0, π]` through
//! `E = (p + q)/2 - (q - p)/2 cos t`. Square-root behaviour at band and lead
//! edges becomes smooth in `t`, so the panels converge geometrically.
//! Panels are halved locally until the two-level estimates agree.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::BandSpectrum;

/// Maximum number of successive halvings of an initial panel.
pub const MAX_HALVINGS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub panels_per_band: usize,
    pub points_per_panel: usize,
    /// Fraction of each band's width excluded at both of its edges.
    pub edge_margin: f64,
    pub abs_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels_per_band: 4,
            points_per_panel: 10,
            edge_margin: 1e-10,
            abs_tol: 1e-8,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels_per_band == 0 || self.points_per_panel == 0 {
            return Err(Error::Domain("panel and point counts must be positive".into()));
        }
        if !(self.edge_margin > 0.0 && self.edge_margin < 0.5) {
            return Err(Error::Domain(format!(
                "edge_margin {} must lie in (0, 0.5)",
                self.edge_margin
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::Domain(format!("abs_tol {} must be positive", self.abs_tol)));
        }
        Ok(())
    }

    /// Same rule with the initial panel count multiplied by `factor`.
    pub fn with_panel_factor(&self, factor: usize) -> Self {
        Self {
            panels_per_band: self.panels_per_band * factor.max(1),
            ..*self
        }
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Value and error estimate of a vector-valued integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureEstimate<const K: usize> {
    pub value: [f64; K],
    pub error_estimate: f64,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    mid: f64,
    half: f64,
    t_lo: f64,
    t_hi: f64,
}

impl Segment {
    fn energy(&self, t: f64) -> f64 {
        self.mid - self.half * t.cos()
    }

    fn jacobian(&self, t: f64) -> f64 {
        self.half * t.sin()
    }
}

/// Splits the shrunk bands at the breakpoints and returns the mapped segments
/// together with the excluded measure.
fn segments(spectrum: &BandSpectrum, breakpoints: &[f64], edge_margin: f64) -> (Vec<Segment>, f64) {
    let mut out = Vec::new();
    let mut excluded = 0.0;
    for band in spectrum.bands() {
        let width = band.width();
        if width <= 0.0 {
            continue;
        }
        let lo = band.lo + edge_margin * width;
        let hi = band.hi - edge_margin * width;
        excluded += 2.0 * edge_margin * width;
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > lo && b < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut points = Vec::with_capacity(cuts.len() + 2);
        points.push(lo);
        points.extend(cuts);
        points.push(hi);
        for w in points.windows(2) {
            let (p, q) = (w[0], w[1]);
            if q - p <= 1e-15 * (1.0 + p.abs()) {
                continue;
            }
            out.push(Segment {
                mid: 0.5 * (p + q),
                half: 0.5 * (q - p),
                t_lo: 0.0,
                t_hi: PI,
            });
        }
    }
    (out, excluded)
}

struct PanelOutcome<const K: usize> {
    value: [f64; K],
    error: f64,
    sup: f64,
    converged: bool,
}

fn panel_rule<const K: usize, F>(
    rule: &GaussLegendre,
    seg: &Segment,
    a: f64,
    b: f64,
    f: &F,
    sup: &mut f64,
) -> Result<[f64; K]>
where
    F: Fn(f64) -> Result<[f64; K]>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = [0.0; K];
    for (x, w) in rule.nodes().iter().zip(rule.weights()) {
        let t = c + h * x;
        let values = f(seg.energy(t))?;
        let jac = seg.jacobian(t);
        for k in 0..K {
            *sup = sup.max(values[k].abs());
            acc[k] += w * h * jac * values[k];
        }
    }
    Ok(acc)
}

fn adaptive_panel<const K: usize, F>(
    rule: &GaussLegendre,
    seg: &Segment,
    a: f64,
    b: f64,
    tol_density: f64,
    f: &F,
) -> Result<PanelOutcome<K>>
where
    F: Fn(f64) -> Result<[f64; K]>,
{
    let mut sup = 0.0;
    let mut value = [0.0; K];
    let mut error = 0.0;
    let mut converged = true;
    let coarse = panel_rule(rule, seg, a, b, f, &mut sup)?;
    let mut stack = vec![(a, b, coarse, 0u32)];
    while let Some((a, b, coarse, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let left = panel_rule(rule, seg, a, m, f, &mut sup)?;
        let right = panel_rule(rule, seg, m, b, f, &mut sup)?;
        let diff = (0..K)
            .map(|k| (left[k] + right[k] - coarse[k]).abs())
            .fold(0.0, f64::max);
        if diff <= tol_density * (b - a) || depth + 1 >= MAX_HALVINGS {
            if diff > tol_density * (b - a) {
                converged = false;
            }
            for k in 0..K {
                value[k] += left[k] + right[k];
            }
            error += diff;
        } else {
            stack.push((m, b, right, depth + 1));
            stack.push((a, m, left, depth + 1));
        }
    }
    Ok(PanelOutcome {
        value,
        error,
        sup,
        converged,
    })
}

/// Integrates a vector-valued function over the band interiors.
///
/// `breakpoints` split the bands without excluding any measure (used for
/// jumps of the integrand, e.g. zero-temperature Fermi edges).
pub fn integrate_bands_vec<const K: usize, F>(
    spectrum: &BandSpectrum,
    breakpoints: &[f64],
    quad: &QuadratureConfig,
    integrand: F,
) -> Result<QuadratureEstimate<K>>
where
    F: Fn(f64) -> Result<[f64; K]> + Sync,
{
    quad.validate()?;
    let (segs, excluded) = segments(spectrum, breakpoints, quad.edge_margin);
    if segs.is_empty() {
        return Ok(QuadratureEstimate {
            value: [0.0; K],
            error_estimate: 0.0,
        });
    }
    let rule = GaussLegendre::new(quad.points_per_panel);
    let panels_per_seg = quad.panels_per_band;
    let total_t: f64 = segs.iter().map(|s| s.t_hi - s.t_lo).sum();
    let tol_density = quad.abs_tol / total_t;
    let tasks: Vec<(usize, f64, f64)> = segs
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            let step = (s.t_hi - s.t_lo) / panels_per_seg as f64;
            (0..panels_per_seg).map(move |p| {
                let a = s.t_lo + step * p as f64;
                let b = if p + 1 == panels_per_seg { s.t_hi } else { a + step };
                (i, a, b)
            })
        })
        .collect();
    let outcomes: Vec<Result<PanelOutcome<K>>> = tasks
        .par_iter()
        .map(|&(i, a, b)| adaptive_panel(&rule, &segs[i], a, b, tol_density, &integrand))
        .collect();

    let mut value = [0.0; K];
    let mut error = 0.0;
    let mut sup: f64 = 0.0;
    let mut converged = true;
    for outcome in outcomes {
        let outcome = outcome?;
        for (acc, v) in value.iter_mut().zip(outcome.value) {
            *acc += v;
        }
        error += outcome.error;
        sup = sup.max(outcome.sup);
        converged &= outcome.converged;
    }
    let error_estimate = error + sup * excluded;
    if !converged && error > quad.abs_tol {
        return Err(Error::Quadrature {
            partial: value.to_vec(),
            error_estimate,
        });
    }
    Ok(QuadratureEstimate {
        value,
        error_estimate,
    })
}

/// Scalar form of [`integrate_bands_vec`].
pub fn integrate_bands<F>(
    spectrum: &BandSpectrum,
    breakpoints: &[f64],
    quad: &QuadratureConfig,
    integrand: F,
) -> Result<QuadratureEstimate<1>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    integrate_bands_vec(spectrum, breakpoints, quad, |e| integrand(e).map(|v| [v]))
}
