//! The channel process: each generation replaces a channel by a uniformly
//! chosen child.
//!
//! Expectations over generation `n` are computed exactly by walking the full
//! binary tree of `2^n` descendants. Children are always ordered serial
//! before parallel, so descendants come out in lexicographic path order
//! (`s < p`).

use std::fmt;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{ChannelFunctionals, TecChannel};
use crate::error::{Error, Result};
use crate::kernel::{twisted_children, untwisted_children, ChildPair};
use crate::output::sig6;
use crate::sampling::stream_rng;

/// Deepest tree that is enumerated exactly.
pub const MAX_EXACT_DEPTH: usize = 24;

/// Exponent of the default potential `ψ(x) = (x(1 − x))^0.7`.
pub const DEFAULT_PSI_EXPONENT: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `[1 0; ω 1]` over GF(4).
    QuaternaryTwist,
    /// `[1 0; 1 1]` applied to both coordinates.
    UntwistedBaseline,
}

impl KernelKind {
    pub fn children(self, w: &TecChannel) -> ChildPair {
        match self {
            KernelKind::QuaternaryTwist => twisted_children(w),
            KernelKind::UntwistedBaseline => untwisted_children(w),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::QuaternaryTwist => "twist",
            KernelKind::UntwistedBaseline => "untwisted",
        }
    }
}

/// Sequence of serial (`s`) / parallel (`p`) choices from the root, packed
/// most-significant choice first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    bits: u64,
    len: u8,
}

impl Path {
    pub const ROOT: Path = Path { bits: 0, len: 0 };

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn serial(self) -> Path {
        self.push(false)
    }

    pub fn parallel(self) -> Path {
        self.push(true)
    }

    fn push(self, parallel: bool) -> Path {
        assert!(self.len < 64, "path longer than 64 generations");
        Path {
            bits: (self.bits << 1) | parallel as u64,
            len: self.len + 1,
        }
    }

    /// `true` for each parallel step, from the root down.
    pub fn steps(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).rev().map(move |i| self.bits >> i & 1 == 1)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for parallel in self.steps() {
            f.write_str(if parallel { "p" } else { "s" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescendantRecord {
    pub path: Path,
    pub channel: TecChannel,
    pub functionals: ChannelFunctionals,
}

impl DescendantRecord {
    fn new(path: Path, channel: TecChannel) -> Self {
        DescendantRecord {
            path,
            channel,
            functionals: channel.functionals(),
        }
    }
}

/// Exact expectations over the `2^n` descendants of generation `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub mean_psi: f64,
    /// `−log2(mean_psi / ψ(H(W_0)))`.
    pub neg_log2_ratio: f64,
    pub mean_inertia: f64,
    pub mean_entropy: f64,
}

/// `ψ(x) = (x(1 − x))^exponent`.
pub fn psi(x: f64, exponent: f64) -> f64 {
    (x * (1.0 - x)).max(0.0).powf(exponent)
}

/// Replaces every channel by its serial child followed by its parallel child.
pub fn evolve_generation(channels: &[TecChannel], kernel: KernelKind) -> Vec<TecChannel> {
    channels
        .par_iter()
        .flat_map_iter(|w| kernel.children(w).as_array())
        .collect()
}

fn check_depth(depth: usize) -> Result<()> {
    if depth > MAX_EXACT_DEPTH {
        Err(Error::DepthTooLarge {
            depth,
            limit: MAX_EXACT_DEPTH,
        })
    } else {
        Ok(())
    }
}

/// All `2^depth` descendants at generation `depth`, in lexicographic path
/// order.
pub fn enumerate_descendants(
    root: &TecChannel,
    depth: usize,
    kernel: KernelKind,
) -> Result<Vec<DescendantRecord>> {
    check_depth(depth)?;
    let mut generation = vec![*root];
    for _ in 0..depth {
        generation = evolve_generation(&generation, kernel);
    }
    Ok(generation
        .into_iter()
        .enumerate()
        .map(|(index, channel)| {
            let path = Path {
                bits: index as u64,
                len: depth as u8,
            };
            DescendantRecord::new(path, channel)
        })
        .collect())
}

/// Per-generation sums over a subtree, generation 0 being the subtree root.
#[derive(Debug, Clone)]
struct TreeSums {
    psi: Vec<f64>,
    inertia: Vec<f64>,
    entropy: Vec<f64>,
}

impl TreeSums {
    fn leaf(w: &TecChannel, exponent: f64, levels: usize) -> Self {
        let mut sums = TreeSums {
            psi: vec![0.0; levels],
            inertia: vec![0.0; levels],
            entropy: vec![0.0; levels],
        };
        let h = w.entropy();
        sums.psi[0] = psi(h, exponent);
        sums.inertia[0] = w.inertia();
        sums.entropy[0] = h;
        sums
    }

    /// Adds the sums of two child subtrees, one generation down.
    fn absorb_children(&mut self, left: &TreeSums, right: &TreeSums) {
        for g in 1..self.psi.len() {
            self.psi[g] = left.psi[g - 1] + right.psi[g - 1];
            self.inertia[g] = left.inertia[g - 1] + right.inertia[g - 1];
            self.entropy[g] = left.entropy[g - 1] + right.entropy[g - 1];
        }
    }
}

/// Depth-first pairwise summation over the subtree rooted at `w`.
fn subtree_sums(w: &TecChannel, remaining: usize, kernel: KernelKind, exponent: f64) -> TreeSums {
    let mut sums = TreeSums::leaf(w, exponent, remaining + 1);
    if remaining > 0 {
        let kids = kernel.children(w);
        let (left, right) = if remaining >= 12 {
            rayon::join(
                || subtree_sums(&kids.serial, remaining - 1, kernel, exponent),
                || subtree_sums(&kids.parallel, remaining - 1, kernel, exponent),
            )
        } else {
            (
                subtree_sums(&kids.serial, remaining - 1, kernel, exponent),
                subtree_sums(&kids.parallel, remaining - 1, kernel, exponent),
            )
        };
        sums.absorb_children(&left, &right);
    }
    sums
}

/// Exact `E[ψ(H(W_n))]` and `E[A(W_n)]` for `n = 1..=depth`.
pub fn psi_expectation_series(
    root: &TecChannel,
    depth: usize,
    kernel: KernelKind,
    psi_exponent: f64,
) -> Result<Vec<GenerationStats>> {
    check_depth(depth)?;
    let base = psi(root.entropy(), psi_exponent);
    if !(base > 0.0) {
        return Err(Error::DegenerateRoot {
            entropy: root.entropy(),
        });
    }
    let sums = subtree_sums(root, depth, kernel, psi_exponent);
    Ok((1..=depth)
        .map(|n| {
            let weight = (-(n as f64)).exp2();
            let mean_psi = sums.psi[n] * weight;
            GenerationStats {
                generation: n,
                mean_psi,
                neg_log2_ratio: -(mean_psi / base).log2(),
                mean_inertia: sums.inertia[n] * weight,
                mean_entropy: sums.entropy[n] * weight,
            }
        })
        .collect())
}

/// Exact `E[A(W_n)]` under the twist kernel for `n = 0..=depth`.
pub fn inertia_series(root: &TecChannel, depth: usize) -> Result<Vec<f64>> {
    check_depth(depth)?;
    let sums = subtree_sums(
        root,
        depth,
        KernelKind::QuaternaryTwist,
        DEFAULT_PSI_EXPONENT,
    );
    Ok(sums
        .inertia
        .iter()
        .enumerate()
        .map(|(n, total)| total * (-(n as f64)).exp2())
        .collect())
}

/// `count` independent uniformly random paths of length `depth`.
///
/// Path `i` draws its choices from its own ChaCha stream, so the output is a
/// pure function of `(root, depth, count, seed, kernel)`.
pub fn sample_paths(
    root: &TecChannel,
    depth: usize,
    count: usize,
    seed: u64,
    kernel: KernelKind,
) -> Vec<DescendantRecord> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut path = Path::ROOT;
            let mut channel = *root;
            for _ in 0..depth {
                let kids = kernel.children(&channel);
                if rng.random::<bool>() {
                    path = path.parallel();
                    channel = kids.parallel;
                } else {
                    path = path.serial();
                    channel = kids.serial;
                }
            }
            DescendantRecord::new(path, channel)
        })
        .collect()
}

/// CSV with header `path,H,E,A`, one row per descendant.
pub fn write_scatter_csv<W: Write>(records: &[DescendantRecord], mut out: W) -> Result<()> {
    writeln!(out, "path,H,E,A")?;
    for rec in records {
        let f = &rec.functionals;
        writeln!(
            out,
            "{},{},{},{}",
            rec.path,
            sig6(f.entropy),
            sig6(f.edge_mass),
            sig6(f.inertia)
        )?;
    }
    Ok(())
}

/// CSV with header `n,mean_psi,neg_log2_ratio,mean_inertia`.
pub fn write_series_csv<W: Write>(series: &[GenerationStats], mut out: W) -> Result<()> {
    writeln!(out, "n,mean_psi,neg_log2_ratio,mean_inertia")?;
    for g in series {
        writeln!(
            out,
            "{},{},{},{}",
            g.generation,
            sig6(g.mean_psi),
            sig6(g.neg_log2_ratio),
            sig6(g.mean_inertia)
        )?;
    }
    Ok(())
}
