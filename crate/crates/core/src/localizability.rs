//! Conditional states after a projective measurement on one qubit, and
//! certification that no measurement direction localizes entanglement
//! between the remaining pair.
//!
//! The certificate for measured qubit j is the global minimum over the
//! Bloch sphere of the lowest partial-transpose eigenvalue of the
//! normalized conditional two-qubit state. The partial transpose is taken
//! with respect to the first remaining qubit; for two-qubit states the
//! spectra with respect to either qubit coincide (they are transposes of
//! one another), so the choice is immaterial.

use serde::Serialize;

use crate::entanglement::NEG_TOL;
use crate::error::{Error, Result};
use crate::linalg::{
    bit_shift, insert_bit, min_eig, partial_transpose, ComplexMatrix, DensityMatrix,
};
use crate::states::{bloch_state, BlochDirection, FamilyParams};

/// Result of minimizing the conditional partial-transpose eigenvalue over
/// all measurement directions on one qubit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalizabilityCertificate {
    pub measured_qubit: usize,
    /// Global minimum of the lowest PT eigenvalue of the normalized
    /// conditional state.
    pub beta_min: f64,
    pub arg_theta: f64,
    pub arg_phi: f64,
    /// True iff no direction yields an NPT conditional state.
    pub nonlocalizable: bool,
}

/// Certificates for measurements on each of the three qubits.
#[derive(Debug, Clone, Serialize)]
pub struct NonlocalizabilityReport {
    pub certificates: [LocalizabilityCertificate; 3],
    /// True iff no measurement on any qubit localizes entanglement.
    pub nonlocalizable: bool,
}

/// Project `qubit` onto the Bloch direction and return the normalized
/// conditional state of the remaining two qubits with its probability.
pub fn conditional_state(
    rho: &DensityMatrix,
    qubit: usize,
    d: &BlochDirection,
) -> Result<(DensityMatrix, f64)> {
    if rho.n_qubits() != 3 {
        return Err(Error::WrongQubitCount {
            expected: 3,
            actual: rho.n_qubits(),
        });
    }
    if qubit >= 3 {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            n_qubits: 3,
        });
    }
    let psi = bloch_state(d);
    let (state, probability) = project_qubit(rho, qubit, psi.amplitudes())?;
    Ok((state, probability))
}

/// Sandwich <psi|_q rho |psi>_q, normalized; errors if the projection
/// annihilates the state.
fn project_qubit(
    rho: &DensityMatrix,
    qubit: usize,
    psi: &[num_complex::Complex64],
) -> Result<(DensityMatrix, f64)> {
    let shift = bit_shift(rho.n_qubits(), qubit);
    let dim_out = rho.dim() / 2;
    let mut mat = ComplexMatrix::from_fn(dim_out, |r, c| {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for (b, amp_b) in psi.iter().enumerate() {
            for (b2, amp_b2) in psi.iter().enumerate() {
                acc += amp_b.conj()
                    * rho
                        .mat()
                        .get(insert_bit(r, shift, b), insert_bit(c, shift, b2))
                    * amp_b2;
            }
        }
        acc
    });
    let probability = mat.trace().re;
    if probability < 1e-12 {
        return Err(Error::NoSupport { probability });
    }
    mat.scale(1.0 / probability);
    Ok((
        DensityMatrix::new_unchecked(rho.n_qubits() - 1, mat.symmetrized()),
        probability,
    ))
}

/// Probability of detecting the measurement state on one qubit of the
/// family: (1/2) [1 + p (1-mu)/3 cos(theta)]. Strictly positive.
pub fn detection_probability(params: &FamilyParams, theta: f64) -> f64 {
    0.5 * (1.0 + params.p() * (1.0 - params.mu()) / 3.0 * theta.cos())
}

/// Sign-carrying eigenvalue of the unnormalized conditional partial
/// transpose of the family:
/// (1/24) {3 + p - 4 p mu + 2 p [2 (1-mu) cos(theta) - 3 mu sin(theta)]}.
///
/// This is the eigenvalue of p(theta) * sigma^{T_A}, i.e. of the
/// unnormalized state; its sign equals the sign of the normalized one.
pub fn beta_closed_form(params: &FamilyParams, theta: f64) -> f64 {
    let (p, mu) = (params.p(), params.mu());
    (3.0 + p - 4.0 * p * mu + 2.0 * p * (2.0 * (1.0 - mu) * theta.cos() - 3.0 * mu * theta.sin()))
        / 24.0
}

/// Minimizing polar angle of the unnormalized eigenvalue:
/// pi - arctan[(3/2) mu/(1-mu)], with the mu -> 1 limit pi/2.
pub fn theta_opt_closed_form(mu: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&mu));
    if mu >= 1.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    std::f64::consts::PI - (1.5 * mu / (1.0 - mu)).atan()
}

/// Global minimum over theta of the unnormalized eigenvalue:
/// (1/24) [3 + p - 4 p mu - 2 p sqrt(4 + mu (13 mu - 8))].
pub fn beta_opt_closed_form(params: &FamilyParams) -> f64 {
    let (p, mu) = (params.p(), params.mu());
    (3.0 + p - 4.0 * p * mu - 2.0 * p * (4.0 + mu * (13.0 * mu - 8.0)).sqrt()) / 24.0
}

/// Number of polar grid points (inclusive of both poles).
const THETA_GRID: usize = 91;
/// Number of azimuthal grid points over [0, 2 pi).
const PHI_GRID: usize = 72;
/// Rounds of alternating golden-section refinement.
const REFINE_ROUNDS: usize = 50;
/// Golden-section interval tolerance per round.
const REFINE_TOL: f64 = 1e-12;

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Minimize the lowest PT eigenvalue of the normalized conditional state
/// over all measurement directions on `measured_qubit`.
///
/// Deterministic: a coarse 91 x 72 grid scan (ties broken toward smaller
/// theta, then smaller phi) followed by alternating golden-section
/// refinement on each coordinate; refinements are only accepted when they
/// strictly improve the objective.
pub fn minimize_pt_eig(
    rho: &DensityMatrix,
    measured_qubit: usize,
) -> Result<LocalizabilityCertificate> {
    if rho.n_qubits() != 3 {
        return Err(Error::WrongQubitCount {
            expected: 3,
            actual: rho.n_qubits(),
        });
    }
    if measured_qubit >= 3 {
        return Err(Error::QubitOutOfRange {
            index: measured_qubit,
            n_qubits: 3,
        });
    }

    let objective = |theta: f64, phi: f64| -> f64 {
        let half = theta / 2.0;
        let psi = [
            num_complex::Complex64::new(half.cos(), 0.0),
            num_complex::Complex64::from_polar(half.sin(), phi),
        ];
        match project_qubit(rho, measured_qubit, &psi) {
            Ok((state, _)) => {
                let pt = partial_transpose(&state, 0).expect("two-qubit state");
                min_eig(&pt).expect("Hermitian by construction")
            }
            Err(_) => f64::INFINITY, // no support along this direction
        }
    };

    let theta_step = std::f64::consts::PI / (THETA_GRID - 1) as f64;
    let phi_step = 2.0 * std::f64::consts::PI / PHI_GRID as f64;

    let mut best_theta = 0.0;
    let mut best_phi = 0.0;
    let mut best = f64::INFINITY;
    for i in 0..THETA_GRID {
        let theta = std::f64::consts::PI * i as f64 / (THETA_GRID - 1) as f64;
        for j in 0..PHI_GRID {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / PHI_GRID as f64;
            let value = objective(theta, phi);
            if value < best {
                best = value;
                best_theta = theta;
                best_phi = phi;
            }
        }
    }
    if best.is_infinite() {
        // cannot happen for a valid state: some direction always has support
        return Err(Error::NoSupport { probability: 0.0 });
    }

    let mut bracket_theta = theta_step;
    let mut bracket_phi = phi_step;
    for _ in 0..REFINE_ROUNDS {
        let (t, v) = golden_section(
            |x| objective(x, best_phi),
            (best_theta - bracket_theta).max(0.0),
            (best_theta + bracket_theta).min(std::f64::consts::PI),
        );
        if v < best {
            best = v;
            best_theta = t;
        }
        let (f, v) = golden_section(
            |x| objective(best_theta, x),
            (best_phi - bracket_phi).max(0.0),
            (best_phi + bracket_phi).min(2.0 * std::f64::consts::PI),
        );
        if v < best {
            best = v;
            best_phi = f;
        }
        bracket_theta *= 0.5;
        bracket_phi *= 0.5;
    }

    Ok(LocalizabilityCertificate {
        measured_qubit,
        beta_min: best,
        arg_theta: best_theta,
        arg_phi: best_phi,
        nonlocalizable: best >= -NEG_TOL,
    })
}

/// Golden-section minimization on [a, b]; returns (arg, value).
fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    if b - a < REFINE_TOL {
        let m = 0.5 * (a + b);
        return (m, f(m));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > REFINE_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    (m, f(m))
}

/// Run the minimization for each measured qubit; the state carries
/// nonlocalizable entanglement iff every certificate is non-negative.
pub fn certify_nonlocalizable(rho: &DensityMatrix) -> Result<NonlocalizabilityReport> {
    if rho.n_qubits() != 3 {
        return Err(Error::WrongQubitCount {
            expected: 3,
            actual: rho.n_qubits(),
        });
    }
    let certificates = [
        minimize_pt_eig(rho, 0)?,
        minimize_pt_eig(rho, 1)?,
        minimize_pt_eig(rho, 2)?,
    ];
    let nonlocalizable = certificates.iter().all(|c| c.nonlocalizable);
    Ok(NonlocalizabilityReport {
        certificates,
        nonlocalizable,
    })
}
