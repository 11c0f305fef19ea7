//! Lattice geometry, disorder ensembles and hopping-matrix assembly.

pub mod disorder;
pub mod geometry;
pub mod hopping;
pub mod keyed;

pub use disorder::{
    atom_types, comparator, displaced_positions, sample_atom_type, sample_displacement,
    sample_peierls_phase, DisorderKind, DisorderSpec,
};
pub use geometry::{Boundary, LatticeSpec, Site};
pub use hopping::{
    assemble_hopping_matrix, assemble_velocity_operator, Bond, DisorderedLattice, HoppingMatrix,
    ModelConfig,
};
pub use keyed::{keyed_random, KeyedFunction, RandomnessMode, KEYED_HASH_ID};
