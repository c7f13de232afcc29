//! Tetrahedral erasure channels and their functionals.
//!
//! A TEC takes a pair of bits `(x1, x2)` and reveals, with probabilities
//! `p, q, r, s, t`, either the whole pair, only `x1`, only `x1 + x2`, only
//! `x2`, or nothing.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Component, Error, Result};

/// Absolute tolerance for membership in the probability simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Quetelet index above which a TEC is edge-heavy: `2√7 − 4`.
pub const EDGE_HEAVY_THRESHOLD: f64 = 1.2915026221291814;

/// A TEC given by its five subspace erasure probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TecChannel {
    p: f64,
    q: f64,
    r: f64,
    s: f64,
    t: f64,
}

impl TecChannel {
    pub const PERFECT: TecChannel = TecChannel {
        p: 1.0,
        q: 0.0,
        r: 0.0,
        s: 0.0,
        t: 0.0,
    };

    pub const USELESS: TecChannel = TecChannel {
        p: 0.0,
        q: 0.0,
        r: 0.0,
        s: 0.0,
        t: 1.0,
    };

    /// Validates five probabilities.
    ///
    /// Components within [`SIMPLEX_TOL`] of the simplex are snapped onto it
    /// (tiny negatives become zero, the sum is renormalized); anything
    /// further out is rejected.
    pub fn new(p: f64, q: f64, r: f64, s: f64, t: f64) -> Result<Self> {
        let mut comps = [p, q, r, s, t];
        for (&c, component) in comps.iter().zip(Component::ALL) {
            if !c.is_finite() {
                return Err(Error::NonFinite { component });
            }
            if c < -SIMPLEX_TOL {
                return Err(Error::NegativeComponent {
                    component,
                    value: c,
                });
            }
            if c > 1.0 + SIMPLEX_TOL {
                return Err(Error::ComponentAboveOne {
                    component,
                    value: c,
                });
            }
        }
        let sum: f64 = comps.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            let largest = comps
                .iter()
                .zip(Component::ALL)
                .fold((f64::NEG_INFINITY, Component::P), |best, (&c, k)| {
                    if c > best.0 {
                        (c, k)
                    } else {
                        best
                    }
                })
                .1;
            return Err(Error::SumNotOne { sum, largest });
        }
        for c in comps.iter_mut() {
            *c = c.max(0.0);
        }
        let sum: f64 = comps.iter().sum();
        if sum != 1.0 {
            for c in comps.iter_mut() {
                *c /= sum;
            }
        }
        Ok(Self::from_array_unchecked(comps))
    }

    /// Builds a channel from non-negative masses that sum to 1 up to
    /// rounding, dividing by their total. Combination formulas map an
    /// input sum of `1 + δ` to roughly `1 + 2δ`, so without this step
    /// rounding error doubles with every generation.
    pub(crate) fn from_masses(c: [f64; 5]) -> Self {
        let total: f64 = c.iter().sum();
        Self::from_array_unchecked(c.map(|v| v / total))
    }

    /// Builds a channel from values already known to lie on the simplex.
    pub(crate) fn from_array_unchecked(c: [f64; 5]) -> Self {
        debug_assert!(c.iter().all(|v| *v >= -SIMPLEX_TOL));
        TecChannel {
            p: c[0],
            q: c[1],
            r: c[2],
            s: c[3],
            t: c[4],
        }
    }

    /// Two bits sent through `BEC(delta)` and `BEC(eps)` respectively.
    pub fn from_bec_pair(delta: f64, eps: f64) -> Result<Self> {
        check_probability("delta", delta)?;
        check_probability("eps", eps)?;
        Ok(Self::from_array_unchecked([
            (1.0 - delta) * (1.0 - eps),
            (1.0 - delta) * eps,
            0.0,
            delta * (1.0 - eps),
            delta * eps,
        ]))
    }

    /// The 4-ary erasure channel with erasure probability `eps`.
    pub fn from_qary_erasure(eps: f64) -> Result<Self> {
        check_probability("eps", eps)?;
        Ok(Self::from_array_unchecked([1.0 - eps, 0.0, 0.0, 0.0, eps]))
    }

    /// The unique balanced TEC with entropy `x` and edge mass `y`.
    pub fn from_balanced(point: BalancedPoint) -> Self {
        let BalancedPoint { x, y } = point;
        let edge = y / 3.0;
        Self::from_array_unchecked([
            (1.0 - x - y / 2.0).max(0.0),
            edge,
            edge,
            edge,
            (x - y / 2.0).max(0.0),
        ])
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.p, self.q, self.r, self.s, self.t]
    }

    pub fn edge_mass(&self) -> f64 {
        self.q + self.r + self.s
    }

    pub fn entropy(&self) -> f64 {
        self.edge_mass() / 2.0 + self.t
    }

    /// `1 − H`, evaluated as `E/2 + p` so it keeps full relative precision
    /// near the noisy pole.
    pub fn complement_entropy(&self) -> f64 {
        self.edge_mass() / 2.0 + self.p
    }

    pub fn inertia(&self) -> f64 {
        let (a, b, c) = (self.q - self.r, self.r - self.s, self.s - self.q);
        a * a + b * b + c * c
    }

    /// `E / (H (1 − H))`, or `None` when the channel is fully polarized.
    pub fn quetelet(&self) -> Option<f64> {
        let h = self.entropy();
        let hc = self.complement_entropy();
        if h == 0.0 || hc == 0.0 {
            None
        } else {
            Some(self.edge_mass() / (h * hc))
        }
    }

    pub fn functionals(&self) -> ChannelFunctionals {
        ChannelFunctionals {
            entropy: self.entropy(),
            edge_mass: self.edge_mass(),
            inertia: self.inertia(),
            quetelet: self.quetelet(),
        }
    }

    pub fn is_balanced(&self, tol: f64) -> bool {
        self.inertia() <= tol
    }

    /// Premultiplies the input by ω: cycles `(q, r, s) -> (s, q, r)`.
    pub fn rotate(&self) -> Self {
        TecChannel {
            p: self.p,
            q: self.s,
            r: self.q,
            s: self.r,
            t: self.t,
        }
    }

    /// `(p, q, r, s, t) -> (t, s, r, q, p)`; exchanges serial and parallel.
    pub fn dual(&self) -> Self {
        TecChannel {
            p: self.t,
            q: self.s,
            r: self.r,
            s: self.q,
            t: self.p,
        }
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &TecChannel) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: "[0, 1]",
        })
    }
}

impl fmt::Display for TecChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{},{}", self.p, self.q, self.r, self.s, self.t)
    }
}

impl FromStr for TecChannel {
    type Err = Error;

    /// Parses the `p,q,r,s,t` text form.
    fn from_str(input: &str) -> Result<Self> {
        let parse_err = |reason: String| Error::ParseChannel {
            input: input.to_string(),
            reason,
        };
        let fields: Vec<&str> = input.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(parse_err(format!(
                "expected 5 comma-separated values, found {}",
                fields.len()
            )));
        }
        let mut comps = [0.0; 5];
        for ((slot, field), component) in comps.iter_mut().zip(&fields).zip(Component::ALL) {
            *slot = field.parse().map_err(|_| {
                parse_err(format!("component {component} = {field:?} is not a number"))
            })?;
        }
        TecChannel::new(comps[0], comps[1], comps[2], comps[3], comps[4])
    }
}

/// Entropy, edge mass, moment of inertia and Quetelet index of a TEC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelFunctionals {
    pub entropy: f64,
    pub edge_mass: f64,
    pub inertia: f64,
    pub quetelet: Option<f64>,
}

impl ChannelFunctionals {
    pub fn is_edge_heavy(&self) -> bool {
        self.quetelet.is_some_and(|q| q >= EDGE_HEAVY_THRESHOLD)
    }
}

/// `(entropy, edge mass)` coordinates of a balanced TEC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalancedPoint {
    pub x: f64,
    pub y: f64,
}

impl BalancedPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let infeasible = || Error::InfeasiblePoint { x, y };
        if !x.is_finite() || !y.is_finite() {
            return Err(infeasible());
        }
        if !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&x) || y < -SIMPLEX_TOL {
            return Err(infeasible());
        }
        let x = x.clamp(0.0, 1.0);
        let cap = max_edge_mass(x);
        if y > cap + SIMPLEX_TOL {
            return Err(infeasible());
        }
        Ok(BalancedPoint {
            x,
            y: y.clamp(0.0, cap),
        })
    }

    /// Reads `(H, E)` off a channel, ignoring any imbalance.
    pub fn of(channel: &TecChannel) -> Self {
        BalancedPoint {
            x: channel.entropy(),
            y: channel.edge_mass(),
        }
    }

    pub fn quetelet(&self) -> Option<f64> {
        if self.x <= 0.0 || self.x >= 1.0 {
            None
        } else {
            Some(self.y / (self.x * (1.0 - self.x)))
        }
    }
}

/// Feasibility cap `2 min(x, 1 − x)` on the edge mass at entropy `x`.
pub fn max_edge_mass(x: f64) -> f64 {
    2.0 * x.min(1.0 - x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tec(c: [f64; 5]) -> TecChannel {
        TecChannel::new(c[0], c[1], c[2], c[3], c[4]).unwrap()
    }

    fn assert_tuple(w: &TecChannel, expected: [f64; 5]) {
        for (a, b) in w.to_array().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn threshold_constant() {
        assert_eq!(EDGE_HEAVY_THRESHOLD, 2.0 * 7f64.sqrt() - 4.0);
    }

    #[test]
    fn perfect_and_useless() {
        assert_eq!(tec([1.0, 0.0, 0.0, 0.0, 0.0]).entropy(), 0.0);
        assert_eq!(tec([0.0, 0.0, 0.0, 0.0, 1.0]).entropy(), 1.0);
        assert_eq!(TecChannel::PERFECT.quetelet(), None);
        assert_eq!(TecChannel::USELESS.quetelet(), None);
    }

    #[test]
    fn sum_not_one_rejected() {
        let err = TecChannel::new(0.2, 0.2, 0.2, 0.2, 0.3).unwrap_err();
        assert!(matches!(err, Error::SumNotOne { .. }), "{err}");
    }

    #[test]
    fn negative_component_named() {
        let err = TecChannel::new(0.5, -0.1, 0.3, 0.2, 0.1).unwrap_err();
        assert_eq!(
            err,
            Error::NegativeComponent {
                component: Component::Q,
                value: -0.1
            }
        );
        assert!(err.to_string().contains("component q"));
    }

    #[test]
    fn non_finite_rejected() {
        let err = TecChannel::new(f64::NAN, 0.0, 0.0, 0.0, 1.0).unwrap_err();
        assert!(matches!(
            err,
            Error::NonFinite {
                component: Component::P
            }
        ));
    }

    #[test]
    fn tiny_drift_is_renormalized() {
        let w = TecChannel::new(0.5 + 4e-13, 0.5, 0.0, 0.0, -1e-13).unwrap();
        assert_eq!(w.t(), 0.0);
        assert_abs_diff_eq!(w.to_array().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bec_pair_examples() {
        assert_tuple(
            &TecChannel::from_bec_pair(0.0, 0.0).unwrap(),
            [1.0, 0.0, 0.0, 0.0, 0.0],
        );
        assert_tuple(
            &TecChannel::from_bec_pair(0.5, 0.5).unwrap(),
            [0.25, 0.25, 0.0, 0.25, 0.25],
        );
        assert_tuple(
            &TecChannel::from_bec_pair(0.55, 0.55).unwrap(),
            [0.2025, 0.2475, 0.0, 0.2475, 0.3025],
        );
        assert!(matches!(
            TecChannel::from_bec_pair(1.5, 0.0),
            Err(Error::OutOfRange { name: "delta", .. })
        ));
    }

    /// Enumerates the four joint erasure events of two independent BECs and
    /// classifies which subspace of (x1, x2) the receiver learns.
    #[test]
    fn bec_pair_matches_event_enumeration() {
        for &(delta, eps) in &[(0.5, 0.5), (0.55, 0.55), (0.1, 0.7), (0.9, 0.3)] {
            let mut mass = [0.0; 5];
            for first_erased in [false, true] {
                for second_erased in [false, true] {
                    let prob = if first_erased { delta } else { 1.0 - delta }
                        * if second_erased { eps } else { 1.0 - eps };
                    let class = match (first_erased, second_erased) {
                        (false, false) => 0,
                        (false, true) => 1,
                        (true, false) => 3,
                        (true, true) => 4,
                    };
                    mass[class] += prob;
                }
            }
            assert_tuple(&TecChannel::from_bec_pair(delta, eps).unwrap(), mass);
        }
    }

    #[test]
    fn qary_examples() {
        assert_tuple(
            &TecChannel::from_qary_erasure(0.0).unwrap(),
            [1.0, 0.0, 0.0, 0.0, 0.0],
        );
        assert_tuple(
            &TecChannel::from_qary_erasure(1.0).unwrap(),
            [0.0, 0.0, 0.0, 0.0, 1.0],
        );
        assert_tuple(
            &TecChannel::from_qary_erasure(0.3).unwrap(),
            [0.7, 0.0, 0.0, 0.0, 0.3],
        );
        assert!(TecChannel::from_qary_erasure(-0.1).is_err());
    }

    #[test]
    fn balanced_examples() {
        let w = TecChannel::from_balanced(BalancedPoint::new(0.5, 0.0).unwrap());
        assert_tuple(&w, [0.5, 0.0, 0.0, 0.0, 0.5]);
        let w = TecChannel::from_balanced(BalancedPoint::new(0.5, 0.3).unwrap());
        assert_tuple(&w, [0.35, 0.1, 0.1, 0.1, 0.35]);
        assert!(matches!(
            BalancedPoint::new(0.1, 0.5),
            Err(Error::InfeasiblePoint { .. })
        ));
    }

    #[test]
    fn functionals_examples() {
        let f = tec([0.25, 0.25, 0.0, 0.25, 0.25]).functionals();
        assert_abs_diff_eq!(f.entropy, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.edge_mass, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.inertia, 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(f.quetelet.unwrap(), 2.0, epsilon = 1e-12);

        let f = tec([0.2025, 0.2475, 0.0, 0.2475, 0.3025]).functionals();
        assert_abs_diff_eq!(f.entropy, 0.55, epsilon = 1e-12);
        assert_abs_diff_eq!(f.edge_mass, 0.495, epsilon = 1e-12);
        assert_abs_diff_eq!(f.quetelet.unwrap(), 2.0, epsilon = 1e-12);
        assert!(f.is_edge_heavy());

        let f = tec([0.35, 0.1, 0.1, 0.1, 0.35]).functionals();
        assert_eq!(f.inertia, 0.0);
    }

    #[test]
    fn rotation_examples() {
        let w = tec([0.1, 0.2, 0.3, 0.4, 0.0]);
        assert_eq!(w.rotate().to_array(), [0.1, 0.4, 0.2, 0.3, 0.0]);
        assert_eq!(w.rotate().rotate().rotate(), w);
        let b = tec([0.35, 0.1, 0.1, 0.1, 0.35]);
        assert_eq!(b.rotate(), b);
    }

    #[test]
    fn dual_examples() {
        assert_eq!(TecChannel::PERFECT.dual(), TecChannel::USELESS);
        let w = tec([0.2025, 0.2475, 0.0, 0.2475, 0.3025]);
        assert_tuple(&w.dual(), [0.3025, 0.2475, 0.0, 0.2475, 0.2025]);
        assert_abs_diff_eq!(w.dual().entropy(), 0.45, epsilon = 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let w = tec([0.2025, 0.2475, 0.0, 0.2475, 0.3025]);
        let back: TecChannel = w.to_string().parse().unwrap();
        assert_eq!(back, w);
        assert!("0.5,0.5".parse::<TecChannel>().is_err());
        assert!("0.5,x,0,0,0.5".parse::<TecChannel>().is_err());
        assert!(" 1, 0 ,0,0,0".parse::<TecChannel>().is_ok());
    }

    #[test]
    fn edge_mass_bounded_by_entropy() {
        let w = tec([0.1, 0.3, 0.2, 0.25, 0.15]);
        let f = w.functionals();
        assert!(f.edge_mass <= 2.0 * f.entropy.min(1.0 - f.entropy) + 1e-12);
        assert!(f.quetelet.unwrap() <= 4.0);
    }
}
