//! Piecewise-linear functions on `[0, 1]`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Default node count for function-space iterations.
pub const DEFAULT_NODES: usize = 100_000;

/// Monotonicity violations up to this size are treated as rounding noise
/// and pooled away before inversion.
pub const ISOTONIC_NOISE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

/// Linear interpolant through `(nodes[i], values[i])`, clamped outside the
/// node range.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSpline {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl LinearSpline {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::LengthMismatch {
                nodes: nodes.len(),
                values: values.len(),
            });
        }
        if nodes.len() < 2 {
            return Err(Error::TooFewNodes(nodes.len()));
        }
        for (index, (x, y)) in nodes.iter().zip(&values).enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::NonFiniteSpline { index });
            }
        }
        if let Some(index) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NodesNotIncreasing { index: index + 1 });
        }
        Ok(LinearSpline { nodes, values })
    }

    /// `count` equally spaced nodes on `[0, 1]`, endpoints exact.
    pub fn uniform_grid(count: usize) -> Vec<f64> {
        let last = (count - 1) as f64;
        (0..count).map(|i| i as f64 / last).collect()
    }

    /// Samples `f` on a uniform grid of `count` nodes.
    pub fn from_fn(count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::TooFewNodes(count));
        }
        let nodes = Self::uniform_grid(count);
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values)
    }

    /// Samples `f` on the nodes of this spline.
    pub fn map_nodes(&self, f: impl Fn(f64) -> f64) -> Self {
        LinearSpline {
            nodes: self.nodes.clone(),
            values: self.nodes.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return self.values[0];
        }
        if x >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        // first node strictly greater than x; lies in 1..n
        let hi = self.nodes.partition_point(|&node| node <= x);
        let lo = hi - 1;
        let (x0, x1) = (self.nodes[lo], self.nodes[hi]);
        let (y0, y1) = (self.values[lo], self.values[hi]);
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }

    /// Resamples onto `grid`.
    pub fn resample(&self, grid: &[f64]) -> Result<Self> {
        Self::new(grid.to_vec(), grid.iter().map(|&x| self.eval(x)).collect())
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Divides every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        LinearSpline {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| v / factor).collect(),
        }
    }

    /// Inverse of a strictly monotone spline: nodes and values swap roles.
    ///
    /// Ordering violations no larger than [`ISOTONIC_NOISE`] are pooled
    /// with their neighbours (pool-adjacent-violators); each pooled block
    /// becomes a single node at its mean value and mean abscissa. A larger
    /// violation is reported as [`Error::NotMonotone`].
    pub fn inverse(&self) -> Result<Self> {
        let n = self.values.len();
        let increasing = self.values[n - 1] >= self.values[0];
        let oriented = |v: f64| if increasing { v } else { -v };

        for i in 1..n {
            let drop = oriented(self.values[i - 1]) - oriented(self.values[i]);
            if drop > ISOTONIC_NOISE {
                return Err(Error::NotMonotone {
                    index: i,
                    violation: drop,
                });
            }
        }

        // blocks of (sum of oriented values, sum of abscissae, count)
        let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(n);
        for (&x, &y) in self.nodes.iter().zip(&self.values) {
            let mut block = (oriented(y), x, 1usize);
            while let Some(&(sum, xs, count)) = blocks.last() {
                if sum / count as f64 >= block.0 / block.2 as f64 {
                    blocks.pop();
                    block = (sum + block.0, xs + block.1, count + block.2);
                } else {
                    break;
                }
            }
            blocks.push(block);
        }

        let mut nodes = Vec::with_capacity(blocks.len());
        let mut values = Vec::with_capacity(blocks.len());
        for (sum, xs, count) in blocks {
            let mean = sum / count as f64;
            nodes.push(oriented(mean));
            values.push(xs / count as f64);
        }
        if !increasing {
            nodes.reverse();
            values.reverse();
        }
        Self::new(nodes, values)
    }

    fn check_same_grid(&self, other: &LinearSpline) -> Result<()> {
        if self.nodes == other.nodes {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Node-wise minimum or maximum of two splines on a common grid.
    pub fn pointwise_extremum(&self, other: &LinearSpline, mode: Extremum) -> Result<Self> {
        self.check_same_grid(other)?;
        let pick = match mode {
            Extremum::Min => f64::min,
            Extremum::Max => f64::max,
        };
        Ok(LinearSpline {
            nodes: self.nodes.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| pick(a, b))
                .collect(),
        })
    }

    /// `max_i |f(x_i) − g(x_i)|` over a common grid.
    pub fn sup_distance(&self, other: &LinearSpline) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Writes the `x,y` CSV form with round-trip precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y")?;
        for (x, y) in self.nodes.iter().zip(&self.values) {
            writeln!(out, "{x},{y}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "x,y" {
            return Err(Error::SplineFormat {
                line: 1,
                reason: format!("expected header \"x,y\", found {header:?}"),
            });
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (offset, line) in lines.enumerate() {
            let line = line?;
            let line_no = offset + 2;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| Error::SplineFormat {
                line: line_no,
                reason,
            };
            let (x, y) = line
                .split_once(',')
                .ok_or_else(|| bad("expected two comma-separated fields".into()))?;
            nodes.push(x.trim().parse().map_err(|_| bad(format!("bad x {x:?}")))?);
            values.push(y.trim().parse().map_err(|_| bad(format!("bad y {y:?}")))?);
        }
        Self::new(nodes, values)
    }
}
