//! Serial and parallel combination of TECs and the twisted children.

mod oracle;

pub use oracle::{brute_force_combine, CombineMode};

use crate::channel::{BalancedPoint, TecChannel};
use crate::error::{Error, Result};

/// Probability that the two channels reveal different one-dimensional
/// subspaces: `E E' − qq' − rr' − ss'`, kept as a sum of products.
fn mismatched_edges(u: &TecChannel, v: &TecChannel) -> f64 {
    u.q() * (v.r() + v.s()) + u.r() * (v.q() + v.s()) + u.s() * (v.q() + v.r())
}

/// `U Ｓ V`: guess `(u1 + v1, u2 + v2)` from the outputs of `U` and `V`.
pub fn serial_combine(u: &TecChannel, v: &TecChannel) -> TecChannel {
    let (p, q, r, s, t) = (u.p(), u.q(), u.r(), u.s(), u.t());
    let (p2, q2, r2, s2, t2) = (v.p(), v.q(), v.r(), v.s(), v.t());
    // nothing learned: mismatched edges, or either side erased completely
    let erased = mismatched_edges(u, v) + t + t2 * (p + q + r + s);
    TecChannel::from_masses([
        p * p2,
        p * q2 + q * q2 + q * p2,
        p * r2 + r * r2 + r * p2,
        p * s2 + s * s2 + s * p2,
        erased,
    ])
}

/// `U Ｐ V`: guess `(u1, u2)` given the outputs of `U`, `V` and the pair
/// `(u1 + v1, u2 + v2)`.
pub fn parallel_combine(u: &TecChannel, v: &TecChannel) -> TecChannel {
    let (p, q, r, s, t) = (u.p(), u.q(), u.r(), u.s(), u.t());
    let (p2, q2, r2, s2, t2) = (v.p(), v.q(), v.r(), v.s(), v.t());
    // full recovery: mismatched edges, or either side reveals everything
    let recovered = mismatched_edges(u, v) + p + p2 * (q + r + s + t);
    TecChannel::from_masses([
        recovered,
        t * q2 + q * q2 + q * t2,
        t * r2 + r * r2 + r * t2,
        t * s2 + s * s2 + s * t2,
        t * t2,
    ])
}

/// The serial and parallel child of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChildPair {
    pub serial: TecChannel,
    pub parallel: TecChannel,
}

impl ChildPair {
    pub fn as_array(&self) -> [TecChannel; 2] {
        [self.serial, self.parallel]
    }
}

/// Children under the twist kernel `[1 0; ω 1]`: `W Ｓ (Wω)` and `W Ｐ (Wω)`.
pub fn twisted_children(w: &TecChannel) -> ChildPair {
    let (p, q, r, s, t) = (w.p(), w.q(), w.r(), w.s(), w.t());
    // W and Wω expose different edges
    let mismatched = q * (q + r) + r * (r + s) + s * (s + q);
    let serial = TecChannel::from_masses([
        p * p,
        p * s + s * q + q * p,
        p * q + q * r + r * p,
        p * r + r * s + s * p,
        mismatched + t + t * (p + q + r + s),
    ]);
    let parallel = TecChannel::from_masses([
        mismatched + p + p * (q + r + s + t),
        t * s + s * q + q * t,
        t * q + q * r + r * t,
        t * r + r * s + s * t,
        t * t,
    ]);
    ChildPair { serial, parallel }
}

/// Children under the untwisted binary kernel `[1 0; 1 1]` applied to both
/// coordinates: `W Ｓ W` and `W Ｐ W`.
pub fn untwisted_children(w: &TecChannel) -> ChildPair {
    ChildPair {
        serial: serial_combine(w, w),
        parallel: parallel_combine(w, w),
    }
}

/// Entropy and edge mass of the twisted children of the balanced TEC at
/// `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancedChildMaps {
    pub h_p: f64,
    pub e_p: f64,
    pub h_s: f64,
    pub e_s: f64,
}

pub fn parallel_entropy(x: f64, y: f64) -> f64 {
    x * x - y * y / 12.0
}

pub fn parallel_edge_mass(x: f64, y: f64) -> f64 {
    2.0 * x * y - 2.0 * y * y / 3.0
}

pub fn serial_entropy(x: f64, y: f64) -> f64 {
    2.0 * x - x * x + y * y / 12.0
}

pub fn serial_edge_mass(x: f64, y: f64) -> f64 {
    2.0 * y - 2.0 * x * y - 2.0 * y * y / 3.0
}

pub fn balanced_child_maps(point: BalancedPoint) -> BalancedChildMaps {
    let BalancedPoint { x, y } = point;
    BalancedChildMaps {
        h_p: parallel_entropy(x, y),
        e_p: parallel_edge_mass(x, y),
        h_s: serial_entropy(x, y),
        e_s: serial_edge_mass(x, y),
    }
}

/// Closed-form inertias `(A(W^s), A(W^p))` of the twisted children.
pub fn children_inertia_closed_form(w: &TecChannel) -> (f64, f64) {
    let (p, q, r, s, t) = (w.p(), w.q(), w.r(), w.s(), w.t());
    let (qr, rs, sq) = ((q - r).powi(2), (r - s).powi(2), (s - q).powi(2));
    let serial = qr * (s + p).powi(2) + rs * (q + p).powi(2) + sq * (r + p).powi(2);
    let parallel = qr * (s + t).powi(2) + rs * (q + t).powi(2) + sq * (r + t).powi(2);
    (serial, parallel)
}

/// Erasure probabilities `(2ε − ε², ε²)` of the BEC children under the
/// binary kernel.
pub fn bec_children(eps: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            expected: "[0, 1]",
        });
    }
    Ok((eps * (2.0 - eps), eps * eps))
}
