//! Conditional and unconditional extraction of two-qubit entanglement by
//! collective operations on qubits B and C.
//!
//! Both procedures start with a CNOT (control B, target C). The
//! conditional branch then projects qubit C onto |0> and postselects; the
//! unconditional branch applies a trace-preserving Kraus map on (B, C)
//! and discards C.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{partial_trace, tensor, ComplexMatrix, DensityMatrix};
use crate::states::{apply_unitary, cnot_unitary, FamilyParams};

/// Trace-preserving set of Kraus operators on a fixed dimension.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    operators: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validates the trace-preservation condition sum K^dagger K = I.
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = operators
            .first()
            .ok_or_else(|| Error::InvalidState("channel needs at least one operator".into()))?
            .dim();
        let mut sum = ComplexMatrix::zeros(dim);
        for op in &operators {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: op.dim(),
                });
            }
            sum.add_scaled(&op.dagger().matmul(op), Complex64::new(1.0, 0.0));
        }
        let defect = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if defect > 1e-12 {
            return Err(Error::InvalidState(format!(
                "Kraus operators are not trace preserving: |sum K\u{2020}K - I| = {defect:.3e}"
            )));
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// sum_j K_j m K_j^dagger
    pub fn apply(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(m.dim());
        for k in &self.operators {
            let km = k.matmul(m);
            out.add_scaled(&km.matmul(&k.dagger()), Complex64::new(1.0, 0.0));
        }
        out
    }
}

fn check_three_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.n_qubits() != 3 {
        return Err(Error::WrongQubitCount {
            expected: 3,
            actual: rho.n_qubits(),
        });
    }
    Ok(())
}

/// Conjugate by the CNOT with control B and target C.
pub fn apply_cnot_bc(rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_three_qubits(rho)?;
    let u = cnot_unitary(1, 2, 3).expect("fixed valid indices");
    apply_unitary(rho, &u)
}

/// CNOT on (B, C), then project qubit C onto |outcome> and renormalize.
/// Returns the two-qubit state of (A, B) and the outcome probability.
pub fn conditional_localize_outcome(
    rho: &DensityMatrix,
    outcome: usize,
) -> Result<(DensityMatrix, f64)> {
    if outcome > 1 {
        return Err(Error::ParamOutOfRange {
            name: "outcome",
            value: outcome as f64,
        });
    }
    let transformed = apply_cnot_bc(rho)?;
    // qubit C is the least significant bit
    let mut mat = ComplexMatrix::from_fn(4, |r, c| {
        transformed
            .mat()
            .get((r << 1) | outcome, (c << 1) | outcome)
    });
    let probability = mat.trace().re;
    if probability < 1e-12 {
        return Err(Error::NoSupport { probability });
    }
    mat.scale(1.0 / probability);
    Ok((DensityMatrix::new_unchecked(2, mat), probability))
}

/// Postselect on outcome 0, the branch that concentrates the Bell
/// component. For family inputs the probability is [p (4 mu - 1) + 3] / 6.
pub fn conditional_localize(rho: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    conditional_localize_outcome(rho, 0)
}

/// The trace-preserving localization map on qubits (B, C):
/// O1 = I_B (x) |0><0|_C, O2 = |0><0|_B (x) |1><1|_C,
/// O3 = |0><1|_B (x) |1><1|_C.
pub fn localization_channel() -> KrausChannel {
    let one = Complex64::new(1.0, 0.0);
    // basis order |00>, |01>, |10>, |11> on (B, C)
    let mut o1 = ComplexMatrix::zeros(4);
    o1.set(0, 0, one);
    o1.set(2, 2, one);
    let mut o2 = ComplexMatrix::zeros(4);
    o2.set(1, 1, one);
    let mut o3 = ComplexMatrix::zeros(4);
    o3.set(1, 3, one);
    KrausChannel::new(vec![o1, o2, o3]).expect("trace preserving by construction")
}

/// CNOT on (B, C), localization channel on (B, C), then trace out C.
/// Trace preserving for every input.
pub fn unconditional_localize(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let transformed = apply_cnot_bc(rho)?;
    let channel = localization_channel();
    let id_a = ComplexMatrix::identity(2);
    let mut mapped = ComplexMatrix::zeros(8);
    for op in channel.operators() {
        let k = tensor(&id_a, op);
        let km = k.matmul(transformed.mat());
        mapped.add_scaled(&km.matmul(&k.dagger()), Complex64::new(1.0, 0.0));
    }
    let three = DensityMatrix::new_unchecked(3, mapped.symmetrized());
    partial_trace(&three, 2)
}

/// Sign-carrying eigenvalue of the partial transpose after unconditional
/// localization:
/// (1/24) [6 - 2p - 4 p mu - sqrt((3 + p - 4 p mu)^2 + 144 p^2 mu^2)].
pub fn gamma_closed_form(params: &FamilyParams) -> f64 {
    let (p, mu) = (params.p(), params.mu());
    let a = 3.0 + p - 4.0 * p * mu;
    (6.0 - 2.0 * p - 4.0 * p * mu - (a * a + 144.0 * p * p * mu * mu).sqrt()) / 24.0
}
