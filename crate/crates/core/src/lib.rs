//! Flow snapshots, POD, tensor-train compression, circuit cost model and shot-noise readout.

// Negated float comparisons below reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod binio;
pub mod circuit;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod mps;
pub mod pod;
pub mod readout;
pub mod rng;

pub use circuit::CircuitCost;
pub use error::{Error, Result};
pub use flow::{Field2D, FlowCase, FlowKind};
pub use mps::{BondPlan, MpsVector};
pub use pod::{PodBasisSet, SnapshotMatrix};
pub use readout::{Method, ReadoutReport, Sampling};
