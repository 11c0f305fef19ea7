//! Classical simulation of block-encoding based linear algebra for
//! non-interacting electrons on disordered lattices.
// `!(x > 0.0)` is deliberate throughout: NaN must fail range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod bqp;
pub mod chebyshev;
pub mod encoding;
pub mod error;
pub mod estimation;
pub mod lattice;
pub mod linalg;
pub mod observables;

pub use baseline::{exact_diagonalize, kpm_lightcone_element, EigenDecomposition};
pub use bqp::{clock_construction, ldos_decision, GateCircuit};
pub use chebyshev::{fermi_dirac_expansion, greens_expansion, ChebyshevExpansion};
pub use encoding::{assemble_full_encoding, extract_block, BlockEncoding, EncodingOptions};
pub use error::{Error, Result};
pub use estimation::EstimateRecord;
pub use lattice::{
    assemble_hopping_matrix, assemble_velocity_operator, keyed_random, Boundary, DisorderKind,
    DisorderSpec, DisorderedLattice, HoppingMatrix, LatticeSpec, ModelConfig, RandomnessMode,
    KEYED_HASH_ID,
};
pub use linalg::{CMatrix, SparseMatrix, C64};
pub use observables::{ObservableRecord, QuadratureGrid};

/// Version of the algorithm crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
