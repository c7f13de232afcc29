//! Eigenfunctions of the averaged child operator and scaling exponents.
//!
//! For a pair of child-entropy maps `x ↦ (H_s(x), H_p(x))` the operator
//! `ψ ↦ (ψ ∘ H_s + ψ ∘ H_p) / 2` has a leading eigenvalue `λ < 1`; the
//! scaling exponent is `μ = −1 / log2 λ`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::max_edge_mass;
use crate::error::{Error, Result};
use crate::kernel::{parallel_entropy, serial_entropy};
use crate::sampling::stream_rng;
use crate::spline::LinearSpline;
use crate::trap::EdgeCurve;

/// The bound certified by the closed-form potential.
pub const LEMMA_BOUND: f64 = 0.818;

/// Nodes with `ψ` at or below this fraction of `max ψ` are left out of the
/// Rayleigh ratio.
pub const DEFAULT_RATIO_THRESHOLD: f64 = 1e-9;

/// Second differences above this are reported as a concavity failure.
pub const CONCAVITY_TOL: f64 = 1e-12;

/// Concavity is judged on a subgrid with this many intervals; at the full
/// grid spacing, interpolation noise of order `h² |ψ''|` produces spurious
/// positive second differences.
pub const CONCAVITY_INTERVALS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum ChildEntropyMap {
    /// `(2x − x², x²)`.
    BinaryBec,
    /// Balanced twist children of the TEC at `(x, curve(x))`.
    TwistOnCurve(EdgeCurve),
}

impl ChildEntropyMap {
    /// `(H_s(x), H_p(x))`, clamped to `[0, 1]`.
    pub fn images(&self, x: f64) -> (f64, f64) {
        let (hs, hp) = match self {
            ChildEntropyMap::BinaryBec => (2.0 * x - x * x, x * x),
            ChildEntropyMap::TwistOnCurve(curve) => {
                let y = curve.value(x).clamp(0.0, max_edge_mass(x));
                (serial_entropy(x, y), parallel_entropy(x, y))
            }
        };
        (hs.clamp(0.0, 1.0), hp.clamp(0.0, 1.0))
    }
}

/// `[ψ(H_s(x)) + ψ(H_p(x))] / (2 ψ(x))`.
pub fn one_step_ratio(psi: &LinearSpline, map: &ChildEntropyMap, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            expected: "(0, 1)",
        });
    }
    let base = psi.eval(x);
    if !(base > 0.0) {
        return Err(Error::DegeneratePoint { x });
    }
    let (hs, hp) = map.images(x);
    Ok((psi.eval(hs) + psi.eval(hp)) / (2.0 * base))
}

/// `(x(1 − x))^0.697 (5 − √(x(1 − x)))`.
pub fn lemma_psi(x: f64) -> f64 {
    let v = (x * (1.0 - x)).max(0.0);
    v.powf(0.697) * (5.0 - v.sqrt())
}

/// One-step ratio of [`lemma_psi`] at the balanced TEC `(x, y)`.
pub fn lemma_ratio_at(x: f64, y: f64) -> f64 {
    let (hs, hp) = (serial_entropy(x, y), parallel_entropy(x, y));
    (lemma_psi(hs) + lemma_psi(hp)) / (2.0 * lemma_psi(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaReport {
    pub grid_size: usize,
    pub max_ratio: f64,
    pub argmax_x: f64,
    pub pass: bool,
}

/// Maximizes the one-step ratio of [`lemma_psi`] on the curve
/// `y = 9x(1 − x)/7` over the interior grid `i / (N + 1)`, `i = 1..=N`.
///
/// Child entropies use the quartic closed form
/// `H_p = (169x² + 54x³ − 27x⁴)/196`, `H_s = 2x − H_p`.
pub fn verify_lemma_eigen(grid_size: usize) -> Result<LemmaReport> {
    if grid_size < 1000 {
        return Err(Error::InvalidParameter {
            name: "grid_size",
            reason: format!("need at least 1000, got {grid_size}"),
        });
    }
    let step = 1.0 / (grid_size + 1) as f64;
    let (max_ratio, argmax_x) = (1..=grid_size)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * step;
            let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
            let hp = (169.0 * x2 + 54.0 * x3 - 27.0 * x4) / 196.0;
            let hs = 2.0 * x - hp;
            ((lemma_psi(hs) + lemma_psi(hp)) / (2.0 * lemma_psi(x)), x)
        })
        .reduce(
            || (f64::NEG_INFINITY, f64::NAN),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(LemmaReport {
        grid_size,
        max_ratio,
        argmax_x,
        pass: max_ratio < LEMMA_BOUND,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterationResult {
    pub lambda: f64,
    pub mu: f64,
    /// Normalized to `max ψ = 1`.
    pub eigenfunction: LinearSpline,
    pub iterations: usize,
    /// Sup-distance between the last two normalized iterates.
    pub residual: f64,
    /// Smallest Rayleigh ratio over the same nodes as `lambda`.
    pub lambda_lower: f64,
    /// See [`concavity_defect`].
    pub concavity_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSummary {
    pub lambda: f64,
    pub mu: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl PowerIterationResult {
    pub fn is_concave(&self) -> bool {
        self.concavity_defect <= CONCAVITY_TOL
    }

    pub fn summary(&self) -> PowerSummary {
        PowerSummary {
            lambda: self.lambda,
            mu: self.mu,
            iterations: self.iterations,
            residual: self.residual,
        }
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        let line = serde_json::to_string(&self.summary()).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
        Ok(())
    }
}

/// `(max, min)` of the node-wise Rayleigh ratio over nodes where
/// `ψ > threshold · max ψ`.
pub fn rayleigh_factor(psi: &LinearSpline, map: &ChildEntropyMap, threshold: f64) -> (f64, f64) {
    let cutoff = threshold * psi.max_value();
    psi.nodes()
        .par_iter()
        .zip(psi.values().par_iter())
        .filter(|(_, &v)| v > cutoff)
        .map(|(&x, &v)| {
            let (hs, hp) = map.images(x);
            (psi.eval(hs) + psi.eval(hp)) / (2.0 * v)
        })
        .fold(
            || (f64::NEG_INFINITY, f64::INFINITY),
            |(hi, lo), r| (hi.max(r), lo.min(r)),
        )
        .reduce(
            || (f64::NEG_INFINITY, f64::INFINITY),
            |a, b| (a.0.max(b.0), a.1.min(b.1)),
        )
}

/// Largest `(ψ(x − h) + ψ(x + h))/2 − ψ(x)` over a subgrid of about
/// [`CONCAVITY_INTERVALS`] intervals; positive means convexity somewhere.
pub fn concavity_defect(psi: &LinearSpline) -> f64 {
    let stride = ((psi.len() - 1) / CONCAVITY_INTERVALS).max(1);
    let coarse: Vec<f64> = psi.values().iter().step_by(stride).copied().collect();
    coarse
        .windows(3)
        .map(|w| (w[0] + w[2]) / 2.0 - w[1])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Iterates `ψ_{k+1} = (ψ_k ∘ H_s + ψ_k ∘ H_p) / (2 max ψ_k)` from
/// `(x(1 − x))^psi0_exponent` until normalized iterates move by less than
/// `tol`.
pub fn power_iterate(
    map: &ChildEntropyMap,
    psi0_exponent: f64,
    nodes: usize,
    tol: f64,
    max_iters: usize,
) -> Result<PowerIterationResult> {
    if nodes < 1000 {
        return Err(Error::InvalidParameter {
            name: "nodes",
            reason: format!("need at least 1000, got {nodes}"),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    let grid = LinearSpline::uniform_grid(nodes);
    let images: Vec<(f64, f64)> = grid.par_iter().map(|&x| map.images(x)).collect();
    let mut psi = LinearSpline::from_fn(nodes, |x| (x * (1.0 - x)).max(0.0).powf(psi0_exponent))?;
    let mut residual = f64::INFINITY;
    for k in 1..=max_iters {
        let scale = psi.max_value();
        let mut values: Vec<f64> = images
            .par_iter()
            .map(|&(hs, hp)| (psi.eval(hs) + psi.eval(hp)) / (2.0 * scale))
            .collect();
        values[0] = 0.0;
        values[nodes - 1] = 0.0;
        let next = LinearSpline::new(grid.clone(), values)?;
        residual = next
            .scaled(next.max_value())
            .sup_distance(&psi.scaled(scale))?;
        psi = next;
        if residual < tol {
            let eigenfunction = psi.scaled(psi.max_value());
            let (lambda, lambda_lower) =
                rayleigh_factor(&eigenfunction, map, DEFAULT_RATIO_THRESHOLD);
            return Ok(PowerIterationResult {
                lambda,
                mu: mu_from_lambda(lambda)?,
                concavity_defect: concavity_defect(&eigenfunction),
                eigenfunction,
                iterations: k,
                residual,
                lambda_lower,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        last_delta: residual,
    })
}

/// `−1 / log2 λ`.
pub fn mu_from_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
            expected: "(0, 1)",
        });
    }
    Ok(-1.0 / lambda.log2())
}

/// Largest increase of `ψ(H_s) + ψ(H_p)` when `y` is raised to `y' > y` at
/// fixed `x`, over `samples` random triples.
pub fn separation_defect(psi: &LinearSpline, samples: usize, seed: u64) -> f64 {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let x = rng.random::<f64>();
            let cap = max_edge_mass(x);
            let (a, b) = (rng.random::<f64>() * cap, rng.random::<f64>() * cap);
            let (y, y_raised) = (a.min(b), a.max(b));
            let total = |y: f64| psi.eval(serial_entropy(x, y)) + psi.eval(parallel_entropy(x, y));
            total(y_raised) - total(y)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trap::AnalyticCurve;
    use approx::assert_abs_diff_eq;

    fn psi07(nodes: usize) -> LinearSpline {
        LinearSpline::from_fn(nodes, |x| (x * (1.0 - x)).powf(0.7)).unwrap()
    }

    #[test]
    fn twist_images_sum_to_twice_x() {
        let map = ChildEntropyMap::TwistOnCurve(AnalyticCurve::AlphaParabola.into());
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let (hs, hp) = map.images(x);
            assert_abs_diff_eq!(hs + hp, 2.0 * x, epsilon = 1e-15);
            assert!(hp <= x && x <= hs);
        }
    }

    #[test]
    fn bec_one_step_ratio() {
        let psi = psi07(100_001);
        let r = one_step_ratio(&psi, &ChildEntropyMap::BinaryBec, 0.55).unwrap();
        let f = |x: f64| (x * (1.0 - x)).powf(0.7);
        let direct = (f(0.7975) + f(0.3025)) / (2.0 * f(0.55));
        assert_abs_diff_eq!(r, direct, epsilon = 1e-6);
        assert_abs_diff_eq!(r, 0.8180, epsilon = 0.001);
        // matches the first untwisted generation of the BEC(0.55) process
        assert_abs_diff_eq!(-r.log2(), 0.2898, epsilon = 0.001);
    }

    #[test]
    fn one_step_ratio_errors() {
        let psi = psi07(1001);
        assert!(matches!(
            one_step_ratio(&psi, &ChildEntropyMap::BinaryBec, 0.0),
            Err(Error::OutOfRange { .. })
        ));
        let flat = LinearSpline::from_fn(1001, |_| 0.0).unwrap();
        assert!(matches!(
            one_step_ratio(&flat, &ChildEntropyMap::BinaryBec, 0.5),
            Err(Error::DegeneratePoint { .. })
        ));
    }

    #[test]
    fn lemma_quartic_matches_balanced_maps() {
        let curve = ChildEntropyMap::TwistOnCurve(EdgeCurve::Parabola(9.0 / 7.0));
        let psi = LinearSpline::from_fn(200_001, lemma_psi).unwrap();
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let via_map = one_step_ratio(&psi, &curve, x).unwrap();
            // spline interpolation error dominates near the endpoints
            assert_abs_diff_eq!(
                via_map,
                lemma_ratio_at(x, 9.0 / 7.0 * x * (1.0 - x)),
                epsilon = 1e-5
            );
            assert!(via_map < LEMMA_BOUND);
        }
    }

    #[test]
    fn lemma_bound_holds() {
        let report = verify_lemma_eigen(10_000).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.max_ratio > 0.8);
        assert!(verify_lemma_eigen(10).is_err());
    }

    #[test]
    fn raising_edge_mass_does_not_raise_lemma_ratio() {
        let mut rng = stream_rng(17, 0);
        for _ in 0..100 {
            let x = 0.001 + 0.998 * rng.random::<f64>();
            let base = 9.0 / 7.0 * x * (1.0 - x);
            let y = base + rng.random::<f64>() * (max_edge_mass(x) - base);
            assert!(lemma_ratio_at(x, y) <= lemma_ratio_at(x, base) + 1e-12);
        }
    }

    #[test]
    fn mu_examples() {
        assert_abs_diff_eq!(mu_from_lambda(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            mu_from_lambda((-1.0 / 3.627f64).exp2()).unwrap(),
            3.627,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(mu_from_lambda(0.818).unwrap(), 3.4503, epsilon = 0.0005);
        for bad in [0.0, 1.0, -0.2, f64::NAN] {
            assert!(mu_from_lambda(bad).is_err());
        }
    }

    #[test]
    fn bec_power_iteration() {
        let result = power_iterate(&ChildEntropyMap::BinaryBec, 0.7, 100_001, 1e-9, 1000).unwrap();
        assert_abs_diff_eq!(result.mu, 3.627, epsilon = 0.01);
        assert!(result.lambda - result.lambda_lower < 1e-6);
        assert!(result.is_concave(), "defect {}", result.concavity_defect);
        let ef = &result.eigenfunction;
        assert_eq!(ef.values()[0], 0.0);
        assert_abs_diff_eq!(ef.max_value(), 1.0, epsilon = 1e-15);
        assert!(ef.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn twist_eigenfunction_is_symmetric() {
        let tol = 1e-9;
        let map = ChildEntropyMap::TwistOnCurve(AnalyticCurve::AlphaParabola.into());
        let result = power_iterate(&map, 0.7, 10_001, tol, 1000).unwrap();
        let v = result.eigenfunction.values();
        let n = v.len();
        for i in 0..n / 2 {
            assert_abs_diff_eq!(v[i], v[n - 1 - i], epsilon = 10.0 * tol);
        }
        assert!(result.mu < 3.451);
    }

    #[test]
    fn lambda_is_insensitive_to_threshold() {
        let map = ChildEntropyMap::TwistOnCurve(AnalyticCurve::AlphaParabola.into());
        let result = power_iterate(&map, 0.7, 10_001, 1e-9, 1000).unwrap();
        for threshold in [1e-12, 1e-10, 1e-8, 1e-6] {
            let (lambda, _) = rayleigh_factor(&result.eigenfunction, &map, threshold);
            assert_abs_diff_eq!(lambda, result.lambda, epsilon = 1e-4);
        }
    }

    #[test]
    fn raising_edge_mass_does_not_raise_child_sum() {
        let map = ChildEntropyMap::TwistOnCurve(AnalyticCurve::AlphaParabola.into());
        let result = power_iterate(&map, 0.7, 100_001, 1e-9, 1000).unwrap();
        assert!(result.is_concave(), "defect {}", result.concavity_defect);
        assert!(separation_defect(&result.eigenfunction, 1000, 4) <= 1e-12);
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        assert!(matches!(
            power_iterate(&ChildEntropyMap::BinaryBec, 0.7, 1001, 1e-15, 2),
            Err(Error::NoConvergence { iterations: 2, .. })
        ));
        assert!(power_iterate(&ChildEntropyMap::BinaryBec, 0.7, 10, 1e-6, 5).is_err());
    }

    #[test]
    fn summary_json_has_four_fields() {
        let result = power_iterate(&ChildEntropyMap::BinaryBec, 0.7, 2001, 1e-8, 1000).unwrap();
        let mut buf = Vec::new();
        result.write_json(&mut buf).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let obj = value.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["iterations", "lambda", "mu", "residual"]);
    }
}
