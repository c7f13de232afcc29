//! Polarization dynamics of tetrahedral erasure channels (TECs) under the
//! 2×2 twist kernel `[1 0; ω 1]` over GF(4).
//!
//! The crate covers the exact channel algebra ([`channel`], [`kernel`]),
//! the channel process ([`process`]), piecewise-linear function machinery
//! ([`spline`]), trapping-region fixed points ([`trap`]), eigenfunction
//! and scaling-exponent estimation ([`eigen`]) and a numerical
//! verification suite for the inequalities that drive the analysis
//! ([`verify`]).

pub mod channel;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod kernel;
pub mod output;
pub mod process;
pub mod sampling;
pub mod spline;
pub mod trap;
pub mod verify;

pub use channel::{BalancedPoint, ChannelFunctionals, TecChannel, EDGE_HEAVY_THRESHOLD};
pub use error::{Error, Result};
pub use kernel::{twisted_children, ChildPair};
pub use spline::LinearSpline;
