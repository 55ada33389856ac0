//! Compile labeled, pairwise-separated datasets into explicit ReLU networks
//! that memorize them exactly, then audit the result.
//!
//! The construction projects the points to a line, packs the rounded
//! projections and their labels into the bits of a few large integer weights,
//! and extracts the right bits again with a deep, narrow network built from
//! triangle-function gadgets. All weights are dyadic rationals and every
//! evaluation used for verification is exact.
//!
//! Module map:
//!
//! - [`exactnum`]: dyadic rationals, bit lengths, bit slicing and packing.
//! - [`netir`]: layered networks, evaluators, combinators, JSON format.
//! - [`gadgets`]: triangle, indicator, distance gate, bit extraction.
//! - [`pipeline`]: datasets, projection, code crafting, the three stages.
//! - [`variants`]: depth-bounded and bit-bounded constructions.
//! - [`bounds`]: closed-form bounds and the audit engine.
//! - [`oracle`]: exhaustive gadget checks against closed forms.
//! - [`synth`]: seeded synthetic datasets.
//! - [`cli`]: the `memnet` command line.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod exactnum;
pub mod gadgets;
pub mod netir;
pub mod oracle;
pub mod par;
pub mod pipeline;
pub mod synth;
pub mod variants;

pub use error::{Error, Result};
pub use exactnum::{BigNat, Dyadic};
pub use netir::{LayeredNet, NetMetrics};
