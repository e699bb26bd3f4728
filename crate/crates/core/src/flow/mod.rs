//! Flow snapshot sources: the cavity solver, the periodic transient generator and file ingestion.

pub mod cavity;
pub mod field;
pub mod io;
pub mod transient;

pub use cavity::{solve_cavity, solve_cavity_sweep, CavityParams, CavitySolution};
pub use field::{ensure_finite, max_interior_divergence, Field2D, FlowCase, FlowKind};
pub use io::{read_snapshot_csv, read_snapshot_file, write_snapshot_file};
pub use transient::{generate_transient, TransientGenerator};
