//! Separability certificates and the closed-form thresholds of the
//! (p, mu) state family.
//!
//! A negative eigenvalue of a partial transpose certifies entanglement
//! across that cut. Certificate sign decisions treat values in
//! [-1e-10, 0) as zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{min_eig, partial_transpose, DensityMatrix};
use crate::states::FamilyParams;

/// Eigenvalues and determinants in [-NEG_TOL, 0) count as zero.
pub const NEG_TOL: f64 = 1e-10;

/// Lowest partial-transpose eigenvalue for one qubit cut.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PtCertificate {
    pub qubit: usize,
    pub min_eigenvalue: f64,
    pub is_npt: bool,
}

/// Certificates for all three single-qubit cuts of a three-qubit state.
#[derive(Debug, Clone, Serialize)]
pub struct InseparabilityReport {
    pub certificates: [PtCertificate; 3],
    /// True iff every cut has a negative partial-transpose eigenvalue.
    pub fully_inseparable: bool,
}

/// Lowest eigenvalue of the partial transpose with respect to `qubit`.
pub fn pt_certificate(rho: &DensityMatrix, qubit: usize) -> Result<PtCertificate> {
    if rho.n_qubits() < 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            actual: rho.n_qubits(),
        });
    }
    let pt = partial_transpose(rho, qubit)?;
    let min_eigenvalue = min_eig(&pt)?;
    Ok(PtCertificate {
        qubit,
        min_eigenvalue,
        is_npt: min_eigenvalue < -NEG_TOL,
    })
}

/// Partial-transpose certificates for all three qubits of a 3-qubit state.
pub fn full_inseparability_report(rho: &DensityMatrix) -> Result<InseparabilityReport> {
    if rho.n_qubits() != 3 {
        return Err(Error::WrongQubitCount {
            expected: 3,
            actual: rho.n_qubits(),
        });
    }
    let certificates = [
        pt_certificate(rho, 0)?,
        pt_certificate(rho, 1)?,
        pt_certificate(rho, 2)?,
    ];
    let fully_inseparable = certificates.iter().all(|c| c.is_npt);
    Ok(InseparabilityReport {
        certificates,
        fully_inseparable,
    })
}

/// The single sign-carrying eigenvalue of the family's partial transpose:
/// (1/24) [3 + p - 4 p mu - 4 p sqrt(1 + 2 mu (5 mu - 1))].
pub fn alpha_closed_form(params: &FamilyParams) -> f64 {
    let (p, mu) = (params.p(), params.mu());
    (3.0 + p - 4.0 * p * mu - 4.0 * p * (1.0 + 2.0 * mu * (5.0 * mu - 1.0)).sqrt()) / 24.0
}

fn check_mu(mu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) || !mu.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: "mu",
            value: mu,
        });
    }
    Ok(mu)
}

/// Mixing threshold above which the family is (fully) inseparable:
/// 3 / (4 mu - 1 + 4 sqrt(1 + 2 mu (5 mu - 1))).
pub fn p_ppt_threshold(mu: f64) -> Result<f64> {
    let mu = check_mu(mu)?;
    Ok(3.0 / (4.0 * mu - 1.0 + 4.0 * (1.0 + 2.0 * mu * (5.0 * mu - 1.0)).sqrt()))
}

/// Threshold below which no projective measurement on any qubit leaves the
/// other two entangled: 3 / (4 mu - 1 + 2 sqrt(4 + mu (13 mu - 8))).
pub fn p_nloc_threshold(mu: f64) -> Result<f64> {
    let mu = check_mu(mu)?;
    Ok(3.0 / (4.0 * mu - 1.0 + 2.0 * (4.0 + mu * (13.0 * mu - 8.0)).sqrt()))
}

/// Threshold above which the trace-preserving collective operation leaves
/// qubits A and B entangled: 9 / (5 + 4 mu + 4 sqrt(1 + 2 mu (14 mu - 1))).
pub fn p_col_threshold(mu: f64) -> Result<f64> {
    let mu = check_mu(mu)?;
    Ok(9.0 / (5.0 + 4.0 * mu + 4.0 * (1.0 + 2.0 * mu * (14.0 * mu - 1.0)).sqrt()))
}

/// Two-qubit separability by the determinant criterion: a two-qubit state
/// is separable iff det of its partial transpose is non-negative.
/// Returns (separable, det value); the determinant is taken with respect
/// to the first qubit.
pub fn two_qubit_separable(rho: &DensityMatrix) -> Result<(bool, f64)> {
    if rho.n_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            actual: rho.n_qubits(),
        });
    }
    let pt = partial_transpose(rho, 0)?;
    let det = crate::linalg::det_hermitian(&pt)?;
    Ok((det >= -1e-12, det))
}

/// Determinant of the partial transpose of the conditional two-qubit state
/// of the mu = 1 family after projecting one qubit along polar angle theta:
/// -(p^4/16) sin^4(theta) - (p^3 (1-p)/16) sin^2(theta)
/// + ((1-p)/4)^3 (3p+1)/4. Independent of the azimuth.
pub fn det_pt_bound(p: f64, theta: f64) -> f64 {
    let s2 = theta.sin() * theta.sin();
    let p3 = p * p * p;
    -(p3 * p / 16.0) * s2 * s2 - (p3 * (1.0 - p) / 16.0) * s2
        + ((1.0 - p) / 4.0).powi(3) * (3.0 * p + 1.0) / 4.0
}

/// Lower bound saturated at theta = pi/2: ((1+p)/4)^3 (1-3p)/4.
pub fn det_pt_lower_bound(p: f64) -> f64 {
    ((1.0 + p) / 4.0).powi(3) * (1.0 - 3.0 * p) / 4.0
}

/// Biseparability of the GHZ/white-noise mixture (mu = 1 only): the state
/// is biseparable iff p <= 3/7.
pub fn biseparable_family(params: &FamilyParams) -> Result<bool> {
    if params.mu() != 1.0 {
        return Err(Error::ParamOutOfRange {
            name: "mu",
            value: params.mu(),
        });
    }
    Ok(params.p() <= 3.0 / 7.0)
}
