//! Random channels for property checks.
//!
//! Every sampler draws from a caller-supplied RNG; [`stream_rng`] gives each
//! sample index its own ChaCha stream so results do not depend on the order
//! in which samples are evaluated.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::channel::{max_edge_mass, BalancedPoint, TecChannel};

/// Independent generator for sample `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform on the probability simplex (normalized exponentials).
pub fn uniform_tec<R: Rng + ?Sized>(rng: &mut R) -> TecChannel {
    let mut c = [0.0; 5];
    for v in c.iter_mut() {
        *v = rng.sample::<f64, _>(Exp1);
    }
    normalized(c)
}

/// Squares uniform-simplex components before normalizing, pushing mass
/// towards the edges and corners of the simplex.
pub fn edge_concentrated_tec<R: Rng + ?Sized>(rng: &mut R) -> TecChannel {
    let mut c = uniform_tec(rng).to_array();
    for v in c.iter_mut() {
        *v *= *v;
    }
    normalized(c)
}

/// A channel whose edge mass is a small random fraction of what the
/// simplex allows.
pub fn low_edge_mass_tec<R: Rng + ?Sized>(rng: &mut R) -> TecChannel {
    let mut c = uniform_tec(rng).to_array();
    let scale = 10f64.powf(-rng.random_range(1.0..8.0));
    for v in &mut c[1..4] {
        *v *= scale;
    }
    normalized(c)
}

/// One of the five corners, optionally blurred by a tiny perturbation.
pub fn corner_tec<R: Rng + ?Sized>(rng: &mut R) -> TecChannel {
    let corner = rng.random_range(0..5);
    let mut c = [0.0; 5];
    c[corner] = 1.0;
    if rng.random_bool(0.5) {
        let blur = 10f64.powf(-rng.random_range(3.0..12.0));
        let noise = uniform_tec(rng).to_array();
        for (v, n) in c.iter_mut().zip(noise) {
            *v = (1.0 - blur) * *v + blur * n;
        }
    }
    normalized(c)
}

pub fn bec_pair_tec<R: Rng + ?Sized>(rng: &mut R) -> TecChannel {
    let delta = rng.random::<f64>();
    let eps = rng.random::<f64>();
    TecChannel::from_bec_pair(delta, eps).expect("probabilities drawn from [0, 1)")
}

/// Balanced point with `x` uniform on `(0, 1)` and `y` uniform on the
/// feasible band.
pub fn balanced_point<R: Rng + ?Sized>(rng: &mut R) -> BalancedPoint {
    let x = open_unit(rng);
    let y = rng.random::<f64>() * max_edge_mass(x);
    BalancedPoint { x, y }
}

pub fn balanced_tec<R: Rng + ?Sized>(rng: &mut R) -> TecChannel {
    TecChannel::from_balanced(balanced_point(rng))
}

/// Cycles through uniform, edge-concentrated, low-edge-mass, corner,
/// balanced and BEC-pair strata by sample index.
pub fn stratified_tec<R: Rng + ?Sized>(rng: &mut R, index: u64) -> TecChannel {
    match index % 6 {
        0 => uniform_tec(rng),
        1 => edge_concentrated_tec(rng),
        2 => low_edge_mass_tec(rng),
        3 => corner_tec(rng),
        4 => balanced_tec(rng),
        _ => bec_pair_tec(rng),
    }
}

/// Uniform on the open interval `(0, 1)`.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x = rng.random::<f64>();
        if x > 0.0 {
            return x;
        }
    }
}

fn normalized(mut c: [f64; 5]) -> TecChannel {
    let sum: f64 = c.iter().sum();
    for v in c.iter_mut() {
        *v /= sum;
    }
    TecChannel::new(c[0], c[1], c[2], c[3], c[4]).expect("normalized sample lies on the simplex")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samplers_stay_on_simplex() {
        let mut rng = stream_rng(7, 0);
        for i in 0..6000 {
            let w = stratified_tec(&mut rng, i);
            let sum: f64 = w.to_array().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            assert!(w.to_array().iter().all(|c| *c >= 0.0));
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = uniform_tec(&mut stream_rng(3, 10));
        let b = uniform_tec(&mut stream_rng(3, 10));
        let c = uniform_tec(&mut stream_rng(3, 11));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn balanced_points_are_feasible() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..1000 {
            let pt = balanced_point(&mut rng);
            assert!(BalancedPoint::new(pt.x, pt.y).is_ok());
        }
    }
}
