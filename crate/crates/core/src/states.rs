//! Constructors for the states, gates and circuits under study.
//!
//! The state family is a convex mixture of the GHZ state, a classically
//! correlated separable part, and white noise, controlled by two
//! parameters (p, mu). Qubit A is index 0 and the most significant bit
//! of a basis label, so |011> means A=0, B=1, C=1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, PureState};

/// Mixing parameters (p, mu), both in the closed unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    p: f64,
    mu: f64,
}

impl FamilyParams {
    pub fn new(p: f64, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::ParamOutOfRange {
                name: "p",
                value: p,
            });
        }
        if !(0.0..=1.0).contains(&mu) || !mu.is_finite() {
            return Err(Error::ParamOutOfRange {
                name: "mu",
                value: mu,
            });
        }
        Ok(Self { p, mu })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Measurement direction on the Bloch sphere: polar angle theta in [0, pi],
/// azimuth phi in [0, 2 pi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochDirection {
    theta: f64,
    phi: f64,
}

impl BlochDirection {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) || !theta.is_finite() {
            return Err(Error::ParamOutOfRange {
                name: "theta",
                value: theta,
            });
        }
        if !(0.0..2.0 * std::f64::consts::PI).contains(&phi) || !phi.is_finite() {
            return Err(Error::ParamOutOfRange {
                name: "phi",
                value: phi,
            });
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// (|000> + |111>)/sqrt(2)
pub fn ghz() -> PureState {
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[7] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PureState::new(amps).expect("normalized")
}

/// Two-qubit Bell state (|00> + |11>)/sqrt(2).
pub fn bell_phi_plus() -> PureState {
    let mut amps = vec![Complex64::new(0.0, 0.0); 4];
    amps[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[3] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PureState::new(amps).expect("normalized")
}

/// cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>
pub fn bloch_state(d: &BlochDirection) -> PureState {
    let half = d.theta() / 2.0;
    let amps = vec![
        Complex64::new(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), d.phi()),
    ];
    PureState::new(amps).expect("normalized")
}

/// GHZ state mixed with white noise: p |GHZ><GHZ| + (1-p)/8 * I.
pub fn rho_p(p: f64) -> Result<DensityMatrix> {
    let params = FamilyParams::new(p, 1.0)?;
    Ok(rho_p_mu(&params))
}

/// GHZ state mixed with the classically correlated separable part:
/// mu |GHZ><GHZ| + (1-mu)/3 (|001><001| + |010><010| + |100><100|).
pub fn rho_mu(mu: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&mu) || !mu.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: "mu",
            value: mu,
        });
    }
    // the GHZ projector has exact dyadic entries 1/2 at the four corners;
    // building it that way keeps the family matrices exact for dyadic mu
    let mut mat = ComplexMatrix::zeros(8);
    for (r, c) in [(0usize, 0usize), (0, 7), (7, 0), (7, 7)] {
        mat.set(r, c, Complex64::new(0.5 * mu, 0.0));
    }
    let w = (1.0 - mu) / 3.0;
    for idx in [1usize, 2, 4] {
        mat.set(idx, idx, Complex64::new(w, 0.0));
    }
    Ok(DensityMatrix::new_unchecked(3, mat))
}

/// The two-parameter family p * rho_mu + (1-p)/8 * I.
pub fn rho_p_mu(params: &FamilyParams) -> DensityMatrix {
    let mut mat = rho_mu(params.mu()).expect("mu validated").into_mat();
    mat.scale(params.p());
    let noise = (1.0 - params.p()) / 8.0;
    mat.add_scaled(&ComplexMatrix::identity(8), Complex64::new(noise, 0.0));
    DensityMatrix::new_unchecked(3, mat)
}

/// CNOT as a permutation matrix on `n_qubits` qubits: flips the target bit
/// whenever the control bit is set.
pub fn cnot_unitary(control: usize, target: usize, n_qubits: usize) -> Result<ComplexMatrix> {
    if control == target {
        return Err(Error::EqualQubits { index: control });
    }
    for &q in &[control, target] {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
    }
    let dim = 1usize << n_qubits;
    let control_mask = 1usize << (n_qubits - 1 - control);
    let target_mask = 1usize << (n_qubits - 1 - target);
    let mut u = ComplexMatrix::zeros(dim);
    for col in 0..dim {
        let row = if col & control_mask != 0 {
            col ^ target_mask
        } else {
            col
        };
        u.set(row, col, Complex64::new(1.0, 0.0));
    }
    Ok(u)
}

/// Toffoli gate on three qubits: flips qubit A iff qubits B and C are |1>.
pub fn toffoli_unitary() -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(8);
    // |011> <-> |111>
    u.set(3, 3, Complex64::new(0.0, 0.0));
    u.set(7, 7, Complex64::new(0.0, 0.0));
    u.set(3, 7, Complex64::new(1.0, 0.0));
    u.set(7, 3, Complex64::new(1.0, 0.0));
    u
}

/// GHZ preparation as run in the lab: start from |0>_A |+>_B |0>_C, entangle
/// B and C with a CNOT, then fold qubit A in with a Toffoli.
pub fn prepare_ghz_circuit() -> PureState {
    let plus = bloch_state(&BlochDirection::new(std::f64::consts::FRAC_PI_2, 0.0).expect("valid"));
    let input = PureState::basis(1, 0)
        .tensor(&plus)
        .tensor(&PureState::basis(1, 0));
    let cnot_bc = cnot_unitary(1, 2, 3).expect("valid indices");
    let after_cnot = PureState::new(cnot_bc.mul_vec(input.amplitudes())).expect("unitary");
    let toffoli = toffoli_unitary();
    PureState::new(toffoli.mul_vec(after_cnot.amplitudes())).expect("unitary")
}

/// U rho U^dagger.
pub fn apply_unitary(rho: &DensityMatrix, u: &ComplexMatrix) -> Result<DensityMatrix> {
    if u.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: u.dim(),
        });
    }
    let mat = (&(u * rho.mat()) * &u.dagger()).symmetrized();
    Ok(DensityMatrix::new_unchecked(rho.n_qubits(), mat))
}

/// Relabel qubits: output qubit `i` carries what input qubit `perm[i]` carried.
pub fn permute_qubits(rho: &DensityMatrix, perm: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if perm.len() != n || {
        let mut seen = vec![false; n];
        perm.iter()
            .any(|&q| q >= n || std::mem::replace(&mut seen[q], true))
    } {
        return Err(Error::InvalidState(format!(
            "permutation {perm:?} is not a permutation of 0..{n}"
        )));
    }
    let dim = rho.dim();
    let map_index = |i: usize| -> usize {
        let mut out = 0usize;
        for (pos, &src) in perm.iter().enumerate() {
            let bit = (i >> (n - 1 - src)) & 1;
            out |= bit << (n - 1 - pos);
        }
        out
    };
    let mut mat = ComplexMatrix::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            mat.set(map_index(r), map_index(c), rho.mat().get(r, c));
        }
    }
    Ok(DensityMatrix::new_unchecked(n, mat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fidelity, partial_trace};
    use approx::assert_relative_eq;

    #[test]
    fn ghz_amplitudes() {
        let g = ghz();
        let amps = g.amplitudes();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(amps[0].re, r, epsilon = 1e-15);
        assert_relative_eq!(amps[7].re, r, epsilon = 1e-15);
        for i in 1..7 {
            assert_eq!(amps[i], Complex64::new(0.0, 0.0));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ghz_reduced_state_is_classical_mixture() {
        let rho = DensityMatrix::from_pure(&ghz()).unwrap();
        let reduced = partial_trace(&rho, 2).unwrap();
        // (|00><00| + |11><11|)/2
        let expected = ComplexMatrix::diag(&[0.5, 0.0, 0.0, 0.5]);
        assert!(reduced.mat().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn bloch_state_poles_and_equator() {
        let zero = bloch_state(&BlochDirection::new(0.0, 0.0).unwrap());
        assert_relative_eq!(zero.amplitudes()[0].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(zero.amplitudes()[1].norm(), 0.0, epsilon = 1e-15);

        let one = bloch_state(&BlochDirection::new(std::f64::consts::PI, 0.0).unwrap());
        assert!(one.amplitudes()[0].norm() < 1e-15);
        assert_relative_eq!(one.amplitudes()[1].re, 1.0, epsilon = 1e-15);

        let plus = bloch_state(&BlochDirection::new(std::f64::consts::FRAC_PI_2, 0.0).unwrap());
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(plus.amplitudes()[0].re, r, epsilon = 1e-15);
        assert_relative_eq!(plus.amplitudes()[1].re, r, epsilon = 1e-15);
    }

    #[test]
    fn rho_p_limits() {
        let mixed = rho_p(0.0).unwrap();
        assert!(
            mixed
                .mat()
                .max_abs_diff(DensityMatrix::maximally_mixed(3).mat())
                < 1e-15
        );

        let pure = rho_p(1.0).unwrap();
        assert!(pure.mat().max_abs_diff(&ghz().projector()) < 1e-15);

        assert!(rho_p(1.5).is_err());
        assert!(rho_p(-0.1).is_err());
    }

    #[test]
    fn rho_p_equals_family_at_mu_one() {
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let a = rho_p(p).unwrap();
            let b = rho_p_mu(&FamilyParams::new(p, 1.0).unwrap());
            assert!(a.mat().max_abs_diff(b.mat()) == 0.0, "p = {p}");
        }
    }

    #[test]
    fn rho_mu_limits_and_half() {
        let pure = rho_mu(1.0).unwrap();
        assert!(pure.mat().max_abs_diff(&ghz().projector()) < 1e-15);

        let classical = rho_mu(0.0).unwrap();
        let third = 1.0 / 3.0;
        let expected = ComplexMatrix::diag(&[0.0, third, third, 0.0, third, 0.0, 0.0, 0.0]);
        assert!(classical.mat().max_abs_diff(&expected) < 1e-15);
        assert_relative_eq!(classical.mat().trace().re, 1.0, epsilon = 1e-15);

        // mu = 1/2: diagonal (1/4, 1/6, 1/6, 0, 1/6, 0, 0, 1/4), corners 1/4
        let half = rho_mu(0.5).unwrap();
        let expect_diag = [0.25, 1.0 / 6.0, 1.0 / 6.0, 0.0, 1.0 / 6.0, 0.0, 0.0, 0.25];
        for (i, &d) in expect_diag.iter().enumerate() {
            assert_relative_eq!(half.mat().get(i, i).re, d, epsilon = 1e-15);
        }
        assert_relative_eq!(half.mat().get(0, 7).re, 0.25, epsilon = 1e-15);
        assert_relative_eq!(half.mat().get(7, 0).re, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn family_is_permutation_invariant() {
        let perms: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for i in 0..=10 {
            for j in 0..=10 {
                let params = FamilyParams::new(i as f64 / 10.0, j as f64 / 10.0).unwrap();
                let rho = rho_p_mu(&params);
                for perm in &perms {
                    let permuted = permute_qubits(&rho, perm).unwrap();
                    assert!(
                        permuted.mat().max_abs_diff(rho.mat()) < 1e-14,
                        "p={} mu={} perm={perm:?}",
                        params.p(),
                        params.mu()
                    );
                }
            }
        }
    }

    #[test]
    fn family_constructors_are_positive() {
        for i in 0..=5 {
            for j in 0..=5 {
                let params = FamilyParams::new(i as f64 / 5.0, j as f64 / 5.0).unwrap();
                let rho = rho_p_mu(&params);
                let lowest = crate::linalg::min_eig(rho.mat()).unwrap();
                assert!(lowest >= -1e-12, "p={} mu={}", params.p(), params.mu());
                assert_relative_eq!(rho.mat().trace().re, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cnot_maps_basis_states() {
        let u = cnot_unitary(0, 1, 2).unwrap();
        // |00> -> |00>, |01> -> |01>, |10> -> |11>, |11> -> |10>
        let expectations = [(0usize, 0usize), (1, 1), (2, 3), (3, 2)];
        for &(input, output) in &expectations {
            let v = u.mul_vec(PureState::basis(2, input).amplitudes());
            assert_relative_eq!(v[output].re, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn cnot_and_toffoli_are_self_inverse_unitaries() {
        let cnot = cnot_unitary(1, 2, 3).unwrap();
        let toffoli = toffoli_unitary();
        for u in [&cnot, &toffoli] {
            let gram = u.dagger().matmul(u);
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-14);
            let twice = u.matmul(u);
            assert!(twice.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-14);
        }
    }

    #[test]
    fn cnot_rejects_bad_indices() {
        assert!(matches!(
            cnot_unitary(1, 1, 3),
            Err(Error::EqualQubits { .. })
        ));
        assert!(matches!(
            cnot_unitary(0, 3, 3),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn cnot_bc_on_ghz_gives_bell_times_zero() {
        let u = cnot_unitary(1, 2, 3).unwrap();
        let out = u.mul_vec(ghz().amplitudes());
        // (|000> + |110>)/sqrt(2) = |Phi+>_AB (x) |0>_C
        let expected = bell_phi_plus().tensor(&PureState::basis(1, 0));
        let overlap: Complex64 = expected
            .amplitudes()
            .iter()
            .zip(&out)
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert_relative_eq!(overlap.norm_sqr(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn toffoli_basis_action() {
        let u = toffoli_unitary();
        let v = u.mul_vec(PureState::basis(3, 0b011).amplitudes());
        assert_relative_eq!(v[0b111].re, 1.0, epsilon = 1e-15);
        let v = u.mul_vec(PureState::basis(3, 0b000).amplitudes());
        assert_relative_eq!(v[0b000].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ghz_circuit_prepares_ghz() {
        let out = prepare_ghz_circuit();
        let target = DensityMatrix::from_pure(&ghz()).unwrap();
        let prepared = DensityMatrix::from_pure(&out).unwrap();
        let f = fidelity(&prepared, &target).unwrap();
        assert!(f >= 1.0 - 1e-12, "fidelity {f}");

        // intermediate state after the CNOT is |0>_A (x) |Phi+>_BC
        let plus = bloch_state(&BlochDirection::new(std::f64::consts::FRAC_PI_2, 0.0).unwrap());
        let input = PureState::basis(1, 0)
            .tensor(&plus)
            .tensor(&PureState::basis(1, 0));
        let cnot_bc = cnot_unitary(1, 2, 3).unwrap();
        let mid = PureState::new(cnot_bc.mul_vec(input.amplitudes())).unwrap();
        let expected = PureState::basis(1, 0).tensor(&bell_phi_plus());
        assert_relative_eq!(mid.inner(&expected).norm_sqr(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn bloch_direction_validation() {
        assert!(BlochDirection::new(-0.1, 0.0).is_err());
        assert!(BlochDirection::new(0.0, 7.0).is_err());
        assert!(BlochDirection::new(std::f64::consts::PI, 0.0).is_ok());
    }
}
