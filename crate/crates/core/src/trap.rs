//! Trapping regions for balanced TECs in the `(H, E)` plane.
//!
//! A balanced TEC is the point `(x, y) = (H, E)`. The analytic curves bound
//! regions that are closed under taking children; [`iterate_bound`]
//! computes the numerical inner bound φ and outer bound χ as fixed points of
//! `c ↦ min/max(e_p ∘ h_p⁻¹, e_s ∘ h_s⁻¹)`, where `h_•(x) = h_•(x, c(x))`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{max_edge_mass, BalancedPoint, EDGE_HEAVY_THRESHOLD};
use crate::error::{Error, Result};
use crate::kernel::{parallel_edge_mass, parallel_entropy, serial_edge_mass, serial_entropy};
use crate::sampling::{open_unit, stream_rng};
use crate::spline::{Extremum, LinearSpline};

/// Default floor for invariance margins.
pub const DEFAULT_MARGIN_TOL: f64 = 1e-9;

/// Half-width of the near-curve sampling stratum.
const NEAR_CURVE_BAND: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnalyticCurve {
    /// `α x(1 − x)`, the edge-heavy threshold.
    AlphaParabola,
    /// `2x(1 − x)`, where both bound iterations start.
    OuterParabola,
    /// `f(x) = x(1 − x)(1.66 − 0.38 x(1 − x))`.
    PolyInner,
    /// `g(x) = x(1 − x)(2 − 2x(1 − x)/3)`.
    PolyOuter,
}

impl AnalyticCurve {
    pub const ALL: [AnalyticCurve; 4] = [
        AnalyticCurve::AlphaParabola,
        AnalyticCurve::OuterParabola,
        AnalyticCurve::PolyInner,
        AnalyticCurve::PolyOuter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalyticCurve::AlphaParabola => "alpha_parabola",
            AnalyticCurve::OuterParabola => "outer_parabola",
            AnalyticCurve::PolyInner => "poly_inner",
            AnalyticCurve::PolyOuter => "poly_outer",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        let v = x * (1.0 - x);
        match self {
            AnalyticCurve::AlphaParabola => EDGE_HEAVY_THRESHOLD * v,
            AnalyticCurve::OuterParabola => 2.0 * v,
            AnalyticCurve::PolyInner => v * (1.66 - 0.38 * v),
            AnalyticCurve::PolyOuter => v * (2.0 - 2.0 * v / 3.0),
        }
    }

    pub fn spline(self, nodes: usize) -> Result<LinearSpline> {
        LinearSpline::from_fn(nodes, |x| self.eval(x))
    }
}

impl fmt::Display for AnalyticCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnalyticCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnalyticCurve::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCurve(s.to_string()))
    }
}

/// Evaluates a named curve at `x ∈ [0, 1]`.
pub fn analytic_curve(name: &str, x: f64) -> Result<f64> {
    let curve: AnalyticCurve = name.parse()?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            expected: "[0, 1]",
        });
    }
    Ok(curve.eval(x))
}

/// An edge-mass curve `x ↦ y` over balanced TECs.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCurve {
    /// `c x(1 − x)`.
    Parabola(f64),
    Analytic(AnalyticCurve),
    Spline(LinearSpline),
}

impl EdgeCurve {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            EdgeCurve::Parabola(c) => c * x * (1.0 - x),
            EdgeCurve::Analytic(c) => c.eval(x),
            EdgeCurve::Spline(s) => s.eval(x),
        }
    }
}

impl From<AnalyticCurve> for EdgeCurve {
    fn from(c: AnalyticCurve) -> Self {
        EdgeCurve::Analytic(c)
    }
}

impl From<LinearSpline> for EdgeCurve {
    fn from(s: LinearSpline) -> Self {
        EdgeCurve::Spline(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// φ: node-wise min of the two branches.
    Inner,
    /// χ: node-wise max.
    Outer,
}

impl BoundMode {
    fn extremum(self) -> Extremum {
        match self {
            BoundMode::Inner => Extremum::Min,
            BoundMode::Outer => Extremum::Max,
        }
    }
}

impl FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner" => Ok(BoundMode::Inner),
            "outer" => Ok(BoundMode::Outer),
            _ => Err(Error::InvalidParameter {
                name: "mode",
                reason: format!("expected inner or outer, got {s:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundIteration {
    pub curve: LinearSpline,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-distance between the last two iterates.
    pub last_delta: f64,
    /// Largest node-wise increase between consecutive iterates; positive
    /// values break the expected monotone descent.
    pub max_increase: f64,
}

impl BoundIteration {
    pub fn into_converged(self) -> Result<LinearSpline> {
        if self.converged {
            Ok(self.curve)
        } else {
            Err(Error::NoConvergence {
                iterations: self.iterations,
                last_delta: self.last_delta,
            })
        }
    }
}

/// `e ∘ h⁻¹` on the grid of `curve`, with `h(x) = h(x, curve(x))`.
fn branch(
    curve: &LinearSpline,
    entropy: fn(f64, f64) -> f64,
    edge_mass: fn(f64, f64) -> f64,
) -> Result<LinearSpline> {
    let grid = curve.nodes();
    let h: Vec<f64> = grid
        .par_iter()
        .zip(curve.values().par_iter())
        .map(|(&x, &y)| entropy(x, y))
        .collect();
    let inverse = LinearSpline::new(grid.to_vec(), h)?.inverse()?;
    let values = grid
        .par_iter()
        .map(|&x| {
            let u = inverse.eval(x);
            edge_mass(u, curve.eval(u))
        })
        .collect();
    LinearSpline::new(grid.to_vec(), values)
}

/// One application of the inner or outer update.
pub fn bound_step(curve: &LinearSpline, mode: BoundMode) -> Result<LinearSpline> {
    let parallel = branch(curve, parallel_entropy, parallel_edge_mass)?;
    let serial = branch(curve, serial_entropy, serial_edge_mass)?;
    let next = parallel.pointwise_extremum(&serial, mode.extremum())?;
    let mut values = next.values().to_vec();
    let last = values.len() - 1;
    values[0] = 0.0;
    values[last] = 0.0;
    LinearSpline::new(next.nodes().to_vec(), values)
}

/// Iterates from `2x(1 − x)` until consecutive iterates are within `tol`.
///
/// Hitting `max_iters` is not an error: the last iterate is returned with
/// `converged == false`.
pub fn iterate_bound(
    mode: BoundMode,
    nodes: usize,
    tol: f64,
    max_iters: usize,
) -> Result<BoundIteration> {
    if nodes < 100 {
        return Err(Error::InvalidParameter {
            name: "nodes",
            reason: format!("need at least 100, got {nodes}"),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    let mut curve = AnalyticCurve::OuterParabola.spline(nodes)?;
    let mut last_delta = f64::INFINITY;
    let mut max_increase = f64::NEG_INFINITY;
    for k in 1..=max_iters {
        let next = bound_step(&curve, mode)?;
        last_delta = next.sup_distance(&curve)?;
        let increase = next
            .values()
            .iter()
            .zip(curve.values())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        max_increase = max_increase.max(increase);
        curve = next;
        if last_delta < tol {
            return Ok(BoundIteration {
                curve,
                iterations: k,
                converged: true,
                last_delta,
                max_increase,
            });
        }
    }
    Ok(BoundIteration {
        curve,
        iterations: max_iters,
        converged: false,
        last_delta,
        max_increase,
    })
}

/// Sup-distance between `curve` and its image under one update.
pub fn fixed_point_residual(curve: &LinearSpline, mode: BoundMode) -> Result<f64> {
    bound_step(curve, mode)?.sup_distance(curve)
}

/// Converged inner and outer bounds on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapBounds {
    pub inner: LinearSpline,
    pub outer: LinearSpline,
    pub inner_iters: usize,
    pub outer_iters: usize,
    pub tol: f64,
}

impl TrapBounds {
    pub fn compute(nodes: usize, tol: f64, max_iters: usize) -> Result<Self> {
        let inner = iterate_bound(BoundMode::Inner, nodes, tol, max_iters)?;
        let outer = iterate_bound(BoundMode::Outer, nodes, tol, max_iters)?;
        let (inner_iters, outer_iters) = (inner.iterations, outer.iterations);
        Ok(TrapBounds {
            inner: inner.into_converged()?,
            outer: outer.into_converged()?,
            inner_iters,
            outer_iters,
            tol,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `curve(x) ≤ y ≤ 2 min(x, 1 − x)`.
    Above,
    /// `0 ≤ y ≤ curve(x)`.
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub samples: usize,
    /// Smallest signed distance of a child to the curve, positive on the
    /// claimed side.
    pub worst_margin: f64,
    pub witness: Option<BalancedPoint>,
    pub margin_tol: f64,
    pub pass: bool,
}

fn sample_on_side<R: Rng>(rng: &mut R, curve: &EdgeCurve, side: Side, near: bool) -> BalancedPoint {
    let x = open_unit(rng);
    let cap = max_edge_mass(x);
    let c = curve.value(x).clamp(0.0, cap);
    let u = rng.random::<f64>();
    let y = match (side, near) {
        (Side::Above, false) => c + u * (cap - c),
        (Side::Above, true) => c + u * (cap - c).min(NEAR_CURVE_BAND),
        (Side::Below, false) => u * c,
        (Side::Below, true) => c - u * c.min(NEAR_CURVE_BAND),
    };
    BalancedPoint {
        x,
        y: y.clamp(0.0, cap),
    }
}

/// Worst margin of the two children of `point` relative to `curve`.
pub fn child_margin(curve: &EdgeCurve, side: Side, point: BalancedPoint) -> f64 {
    let BalancedPoint { x, y } = point;
    [
        (parallel_entropy(x, y), parallel_edge_mass(x, y)),
        (serial_entropy(x, y), serial_edge_mass(x, y)),
    ]
    .into_iter()
    .map(|(h, e)| match side {
        Side::Above => e - curve.value(h),
        Side::Below => curve.value(h) - e,
    })
    .fold(f64::INFINITY, f64::min)
}

/// Samples balanced points on `side` of `curve` and checks that both
/// children stay there. Odd-indexed samples lie within `1e-3` of the curve.
pub fn invariance_check(
    curve: &EdgeCurve,
    side: Side,
    samples: usize,
    seed: u64,
    margin_tol: f64,
) -> InvarianceReport {
    let worst = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let point = sample_on_side(&mut rng, curve, side, i % 2 == 1);
            (child_margin(curve, side, point), i, point)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (worst_margin, witness) = match worst {
        Some((m, _, p)) => (m, Some(p)),
        None => (f64::INFINITY, None),
    };
    InvarianceReport {
        samples,
        worst_margin,
        witness,
        margin_tol,
        pass: worst_margin >= -margin_tol,
    }
}
