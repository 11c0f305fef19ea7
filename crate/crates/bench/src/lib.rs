//! Fixtures shared by the benchmarks.

use qla_disorder::{Boundary, DisorderSpec, DisorderedLattice, LatticeSpec};

/// Binary alloy on a periodic lattice with the given extents.
pub fn alloy(extents: &[usize], key: u64) -> DisorderedLattice {
    let mut spec = DisorderSpec::binary_alloy(
        0.4,
        [[-1.0, -0.5], [-0.5, -1.5]],
        [[0.2, 0.3], [0.3, 0.1]],
        key,
    )
    .with_onsite([-0.5, 0.5]);
    spec.bits = 4;
    DisorderedLattice::new(&LatticeSpec::new(extents, Boundary::Periodic), &spec)
        .expect("fixture lattice is valid")
}
