//! Brute-force reconstruction of the combination rules.
//!
//! Each of the 5×5 erasure-pattern pairs is turned into the set of linear
//! functionals of `(u1, u2, v1, v2)` that the receiver observes. A target
//! functional is known exactly when adjoining it does not raise the rank of
//! the observed set over GF(2). The five knowledge classes of the target
//! pair then give the subspace erasure probabilities of the combined
//! channel, independently of the closed-form formulas.

use crate::channel::TecChannel;

/// Linear functional on `(u1, u2, v1, v2)`, one bit per coordinate.
type Functional = u8;

const U1: Functional = 0b0001;
const U2: Functional = 0b0010;
const V1: Functional = 0b0100;
const V2: Functional = 0b1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Serial,
    Parallel,
}

/// Appends what one channel use reveals about its input pair `(a1, a2)`
/// under erasure pattern `pattern` (ordered `p, q, r, s, t`).
fn push_revealed(observed: &mut Vec<Functional>, pattern: usize, a1: Functional, a2: Functional) {
    match pattern {
        0 => observed.extend([a1, a2]),
        1 => observed.push(a1),
        2 => observed.push(a1 ^ a2),
        3 => observed.push(a2),
        _ => {}
    }
}

/// Rank over GF(2) of a set of 4-bit vectors.
fn rank(vectors: &[Functional]) -> usize {
    let mut basis: [Functional; 4] = [0; 4];
    let mut rank = 0;
    for &v in vectors {
        let mut v = v;
        for bit in (0..4).rev() {
            if v & (1 << bit) == 0 {
                continue;
            }
            if basis[bit] == 0 {
                basis[bit] = v;
                rank += 1;
                break;
            }
            v ^= basis[bit];
        }
    }
    rank
}

fn is_known(observed: &[Functional], target: Functional) -> bool {
    let mut extended = observed.to_vec();
    extended.push(target);
    rank(&extended) == rank(observed)
}

/// Knowledge class of the target pair `(x1, x2)`: index into `p, q, r, s, t`.
fn knowledge_class(observed: &[Functional], x1: Functional, x2: Functional) -> usize {
    let first = is_known(observed, x1);
    let second = is_known(observed, x2);
    let sum = is_known(observed, x1 ^ x2);
    match (first, sum, second) {
        (true, _, true) => 0,
        (true, false, false) => 1,
        (false, true, false) => 2,
        (false, false, true) => 3,
        (false, false, false) => 4,
        // two known functionals of a pair determine the third
        _ => unreachable!("inconsistent knowledge state"),
    }
}

/// Combines `u` and `v` by enumerating all 25 erasure-pattern pairs.
///
/// Serial mode targets `(u1 + v1, u2 + v2)`; parallel mode additionally
/// observes that pair and targets `(u1, u2)`.
pub fn brute_force_combine(u: &TecChannel, v: &TecChannel, mode: CombineMode) -> TecChannel {
    let (u_probs, v_probs) = (u.to_array(), v.to_array());
    let mut mass = [0.0; 5];
    for (i, &pu) in u_probs.iter().enumerate() {
        for (j, &pv) in v_probs.iter().enumerate() {
            let mut observed: Vec<Functional> = Vec::with_capacity(6);
            push_revealed(&mut observed, i, U1, U2);
            push_revealed(&mut observed, j, V1, V2);
            let class = match mode {
                CombineMode::Serial => knowledge_class(&observed, U1 | V1, U2 | V2),
                CombineMode::Parallel => {
                    observed.push(U1 | V1);
                    observed.push(U2 | V2);
                    knowledge_class(&observed, U1, U2)
                }
            };
            mass[class] += pu * pv;
        }
    }
    TecChannel::from_array_unchecked(mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{parallel_combine, serial_combine, twisted_children};
    use crate::sampling::{stratified_tec, stream_rng};

    fn pattern(index: usize) -> TecChannel {
        let mut c = [0.0; 5];
        c[index] = 1.0;
        TecChannel::new(c[0], c[1], c[2], c[3], c[4]).unwrap()
    }

    #[test]
    fn rank_basics() {
        assert_eq!(rank(&[]), 0);
        assert_eq!(rank(&[U1, U2, U1 ^ U2]), 2);
        assert_eq!(rank(&[U1, U2, V1, V2]), 4);
        assert_eq!(rank(&[0]), 0);
    }

    #[test]
    fn uniform_pair_matches_serial_formula() {
        let w = TecChannel::new(0.2, 0.2, 0.2, 0.2, 0.2).unwrap();
        let oracle = brute_force_combine(&w, &w, CombineMode::Serial);
        assert!(oracle.max_abs_diff(&serial_combine(&w, &w)) <= 1e-12);
    }

    #[test]
    fn first_bit_and_sum_recover_everything_in_parallel_mode() {
        // U reveals u1, V reveals v1 + v2.
        let got = brute_force_combine(&pattern(1), &pattern(2), CombineMode::Parallel);
        assert_eq!(got, TecChannel::PERFECT);
    }

    #[test]
    fn perfect_channels_stay_perfect() {
        let perfect = TecChannel::PERFECT;
        for mode in [CombineMode::Serial, CombineMode::Parallel] {
            assert_eq!(brute_force_combine(&perfect, &perfect, mode), perfect);
        }
    }

    #[test]
    fn deterministic_patterns_match_closed_forms() {
        for i in 0..5 {
            for j in 0..5 {
                let (u, v) = (pattern(i), pattern(j));
                assert_eq!(
                    brute_force_combine(&u, &v, CombineMode::Serial),
                    serial_combine(&u, &v),
                    "serial pattern ({i}, {j})"
                );
                assert_eq!(
                    brute_force_combine(&u, &v, CombineMode::Parallel),
                    parallel_combine(&u, &v),
                    "parallel pattern ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn random_pairs_match_closed_forms() {
        let mut rng = stream_rng(21, 0);
        for i in 0..2000 {
            let u = stratified_tec(&mut rng, i);
            let v = stratified_tec(&mut rng, i + 1);
            let serial = brute_force_combine(&u, &v, CombineMode::Serial);
            let parallel = brute_force_combine(&u, &v, CombineMode::Parallel);
            assert!(serial.max_abs_diff(&serial_combine(&u, &v)) <= 1e-12);
            assert!(parallel.max_abs_diff(&parallel_combine(&u, &v)) <= 1e-12);

            let kids = twisted_children(&u);
            let rotated = u.rotate();
            assert!(
                kids.serial
                    .max_abs_diff(&brute_force_combine(&u, &rotated, CombineMode::Serial))
                    <= 1e-12
            );
            assert!(
                kids.parallel.max_abs_diff(&brute_force_combine(
                    &u,
                    &rotated,
                    CombineMode::Parallel
                )) <= 1e-12
            );
        }
    }
}
