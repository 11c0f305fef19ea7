use super::ChebyshevExpansion;
use crate::encoding::{extract_block, BlockEncoding};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, C64};

/// Largest system register handled by the dense QSVT simulation.
const MAX_SYSTEM_QUBITS: usize = 10;

/// Idealized QSVT: a block-encoding of `p(A)` with `A = block(be)/α`.
///
/// The polynomial is applied exactly and embedded by a Halmos dilation on
/// one extra ancilla. If `sup_{[-1,1]} |p| > 1` the polynomial is divided by
/// that supremum and the factor is reported as the sub-normalization of the
/// result. The query count is the degree of `p`.
pub fn qsvt_simulate(be: &BlockEncoding, exp: &ChebyshevExpansion) -> Result<BlockEncoding> {
    if be.system_qubits > MAX_SYSTEM_QUBITS {
        return Err(Error::Size(format!(
            "{} system qubits exceed the QSVT cap",
            be.system_qubits
        )));
    }
    let a = extract_block(be)? / C64::new(be.alpha, 0.0);
    let sup = exp.sup_on_grid(20_001.max(20 * exp.degree()));
    let scale = sup.max(1.0);
    let p = exp.apply_dense(&a)?;
    let norm = spectral_norm(&p) / scale;
    if norm > 1.0 + 1e-10 {
        return Err(Error::Contract(format!(
            "‖p(A)‖ = {norm} exceeds one after rescaling"
        )));
    }
    let mut out = BlockEncoding::dilation(&p, scale.max(norm))?;
    out.queries = exp.degree();
    Ok(out)
}
