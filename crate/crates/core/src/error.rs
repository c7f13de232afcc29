use std::fmt;

use thiserror::Error;

/// Names one of the five subspace erasure probabilities of a TEC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    P,
    Q,
    R,
    S,
    T,
}

impl Component {
    pub const ALL: [Component; 5] = [
        Component::P,
        Component::Q,
        Component::R,
        Component::S,
        Component::T,
    ];
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Component::P => "p",
            Component::Q => "q",
            Component::R => "r",
            Component::S => "s",
            Component::T => "t",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("component {component} is not finite")]
    NonFinite { component: Component },

    #[error("component {component} = {value} is negative")]
    NegativeComponent { component: Component, value: f64 },

    #[error("component {component} = {value} exceeds 1")]
    ComponentAboveOne { component: Component, value: f64 },

    #[error("components sum to {sum}, not 1 (largest component {largest})")]
    SumNotOne { sum: f64, largest: Component },

    #[error("{name} = {value} is outside {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error(
        "balanced point (x={x}, y={y}) is infeasible: need 0 <= x <= 1 and 0 <= y <= 2 min(x, 1-x)"
    )]
    InfeasiblePoint { x: f64, y: f64 },

    #[error("cannot parse channel {input:?}: {reason}")]
    ParseChannel { input: String, reason: String },

    #[error("spline needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("spline has {nodes} nodes but {values} values")]
    LengthMismatch { nodes: usize, values: usize },

    #[error("spline nodes are not strictly increasing at index {index}")]
    NodesNotIncreasing { index: usize },

    #[error("spline entry at index {index} is not finite")]
    NonFiniteSpline { index: usize },

    #[error("spline values are not monotone at index {index} (violation {violation:e})")]
    NotMonotone { index: usize, violation: f64 },

    #[error("splines are not defined on a common node grid")]
    GridMismatch,

    #[error("malformed spline file at line {line}: {reason}")]
    SplineFormat { line: usize, reason: String },

    #[error("depth {depth} exceeds the exact-enumeration limit {limit}")]
    DepthTooLarge { depth: usize, limit: usize },

    #[error("root entropy {entropy} is degenerate (psi vanishes there)")]
    DegenerateRoot { entropy: f64 },

    #[error("psi vanishes at x = {x}; the one-step ratio is undefined")]
    DegeneratePoint { x: f64 },

    #[error("no convergence after {iterations} iterations (last change {last_delta:e})")]
    NoConvergence { iterations: usize, last_delta: f64 },

    #[error(
        "unknown curve {0:?}; expected alpha_parabola, outer_parabola, poly_inner or poly_outer"
    )]
    UnknownCurve(String),

    #[error("unknown check {0:?}")]
    UnknownCheck(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
