//! The experimental pipeline: 216-setting projective tomography, count
//! simulation, frequency mixing, maximum-likelihood reconstruction and
//! Monte Carlo error propagation.
//!
//! Each qubit is measured along six projectors (two per Pauli basis), so a
//! full three-qubit set has 6^3 = 216 product settings. Counts normalized
//! by the grand total give relative frequencies; the frequencies of a
//! mixture are convex combinations of component frequencies.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::pt_certificate;
use crate::error::{Error, Result};
use crate::linalg::{fidelity, ComplexMatrix, DensityMatrix};
use crate::localizability::minimize_pt_eig;
use crate::rng::{sub_seeds, DeterministicRng};

pub const N_SETTINGS: usize = 216;

/// MaxLik stops when successive iterates are closer than this in trace
/// distance, or errors out at the iteration cap.
const MAXLIK_TOL: f64 = 1e-10;
/// Boundary-adjacent states converge linearly with a small rate; the worst
/// observed over random-state sweeps is ~7.5e4 iterations.
const MAXLIK_MAX_ITER: usize = 200_000;
/// Born probabilities below this are clamped in the R operator when the
/// observed frequency is positive.
const PROB_FLOOR: f64 = 1e-14;

// ---------------------------------------------------------------------------
// Settings
// ---------------------------------------------------------------------------

/// Single-qubit projector labels, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProjectorLabel {
    Z0,
    Z1,
    Xp,
    Xm,
    Yp,
    Ym,
}

impl ProjectorLabel {
    pub const ALL: [ProjectorLabel; 6] = [
        ProjectorLabel::Z0,
        ProjectorLabel::Z1,
        ProjectorLabel::Xp,
        ProjectorLabel::Xm,
        ProjectorLabel::Yp,
        ProjectorLabel::Ym,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProjectorLabel::Z0 => "Z0",
            ProjectorLabel::Z1 => "Z1",
            ProjectorLabel::Xp => "X+",
            ProjectorLabel::Xm => "X-",
            ProjectorLabel::Yp => "Y+",
            ProjectorLabel::Ym => "Y-",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|l| l.as_str() == s)
    }

    fn rank(&self) -> usize {
        Self::ALL.iter().position(|l| l == self).expect("listed")
    }

    /// The projected single-qubit state.
    pub fn state(&self) -> [Complex64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            ProjectorLabel::Z0 => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            ProjectorLabel::Z1 => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ProjectorLabel::Xp => [Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
            ProjectorLabel::Xm => [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)],
            ProjectorLabel::Yp => [Complex64::new(r, 0.0), Complex64::new(0.0, r)],
            ProjectorLabel::Ym => [Complex64::new(r, 0.0), Complex64::new(0.0, -r)],
        }
    }
}

/// One product setting: a projector label per qubit (A, B, C).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub labels: [ProjectorLabel; 3],
}

impl MeasurementSetting {
    /// Canonical index, lexicographic with qubit A slowest.
    pub fn index(&self) -> usize {
        self.labels[0].rank() * 36 + self.labels[1].rank() * 6 + self.labels[2].rank()
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < N_SETTINGS);
        Self {
            labels: [
                ProjectorLabel::ALL[index / 36],
                ProjectorLabel::ALL[(index / 6) % 6],
                ProjectorLabel::ALL[index % 6],
            ],
        }
    }

    /// The product ket |a> (x) |b> (x) |c|>.
    fn ket(&self) -> [Complex64; 8] {
        let a = self.labels[0].state();
        let b = self.labels[1].state();
        let c = self.labels[2].state();
        let mut out = [Complex64::new(0.0, 0.0); 8];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = a[(i >> 2) & 1] * b[(i >> 1) & 1] * c[i & 1];
        }
        out
    }
}

impl std::fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{},{},{}",
            self.labels[0].as_str(),
            self.labels[1].as_str(),
            self.labels[2].as_str()
        )
    }
}

/// All 216 settings in canonical order.
pub fn full_setting_set() -> Vec<MeasurementSetting> {
    (0..N_SETTINGS)
        .map(MeasurementSetting::from_index)
        .collect()
}

/// Tr[rho (Pi_a (x) Pi_b (x) Pi_c)] = <psi_s| rho |psi_s>.
pub fn born_probability(rho: &DensityMatrix, s: &MeasurementSetting) -> Result<f64> {
    if rho.n_qubits() != 3 {
        return Err(Error::WrongQubitCount {
            expected: 3,
            actual: rho.n_qubits(),
        });
    }
    Ok(ket_expectation(rho.mat(), &s.ket()))
}

#[inline]
fn ket_expectation(m: &ComplexMatrix, ket: &[Complex64; 8]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..8 {
        let mut row = Complex64::new(0.0, 0.0);
        for c in 0..8 {
            row += m.get(r, c) * ket[c];
        }
        acc += ket[r].conj() * row;
    }
    acc.re
}

// ---------------------------------------------------------------------------
// Count tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableKind {
    Counts,
    Frequencies,
}

/// Values for all 216 settings in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    kind: TableKind,
    values: Vec<f64>,
}

impl CountTable {
    pub fn counts(values: Vec<f64>) -> Result<Self> {
        Self::build(TableKind::Counts, values)
    }

    pub fn frequencies(values: Vec<f64>) -> Result<Self> {
        Self::build(TableKind::Frequencies, values)
    }

    fn build(kind: TableKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != N_SETTINGS {
            return Err(Error::CountTable(format!(
                "expected {N_SETTINGS} entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::CountTable(
                "entries must be finite and non-negative".into(),
            ));
        }
        Ok(Self { kind, values })
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, s: &MeasurementSetting) -> f64 {
        self.values[s.index()]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Normalize by the sum of all entries.
    pub fn to_frequencies(&self) -> Result<CountTable> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::CountTable("table has no positive entries".into()));
        }
        Ok(CountTable {
            kind: TableKind::Frequencies,
            values: self.values.iter().map(|v| v / total).collect(),
        })
    }

    /// CSV with header `setting_a,setting_b,setting_c,count`, one row per
    /// setting in canonical order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("setting_a,setting_b,setting_c,count\n");
        for (i, v) in self.values.iter().enumerate() {
            let s = MeasurementSetting::from_index(i);
            out.push_str(&format!("{s},{v}\n"));
        }
        out
    }

    /// Parse the CSV format; every setting must appear exactly once.
    pub fn from_csv(text: &str) -> Result<CountTable> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::CountTable("empty file".into()))?;
        if header.trim() != "setting_a,setting_b,setting_c,count" {
            return Err(Error::CountTable(format!(
                "bad header {header:?}, expected setting_a,setting_b,setting_c,count"
            )));
        }
        let mut values = vec![None::<f64>; N_SETTINGS];
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::CountTable(format!(
                    "line {}: expected 4 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let mut labels = [ProjectorLabel::Z0; 3];
            for (slot, field) in labels.iter_mut().zip(&fields[..3]) {
                *slot = ProjectorLabel::parse(field).ok_or_else(|| {
                    Error::CountTable(format!("line {}: unknown label {field:?}", lineno + 1))
                })?;
            }
            let setting = MeasurementSetting { labels };
            let count: f64 = fields[3].parse().map_err(|_| {
                Error::CountTable(format!("line {}: bad count {:?}", lineno + 1, fields[3]))
            })?;
            if !count.is_finite() || count < 0.0 {
                return Err(Error::CountTable(format!(
                    "line {}: count must be finite and non-negative",
                    lineno + 1
                )));
            }
            let slot = &mut values[setting.index()];
            if slot.is_some() {
                return Err(Error::CountTable(format!(
                    "line {}: duplicate setting {setting}",
                    lineno + 1
                )));
            }
            *slot = Some(count);
        }
        let missing = values.iter().filter(|v| v.is_none()).count();
        if missing > 0 {
            return Err(Error::CountTable(format!("{missing} settings missing")));
        }
        CountTable::counts(values.into_iter().map(|v| v.expect("checked")).collect())
    }
}

/// Noiseless relative frequencies of a state: Born probabilities normalized
/// by their sum over the full setting set (which is 27, one per product
/// basis).
pub fn exact_frequencies(rho: &DensityMatrix) -> Result<CountTable> {
    let values: Vec<f64> = full_setting_set()
        .iter()
        .map(|s| born_probability(rho, s))
        .collect::<Result<_>>()?;
    CountTable::counts(values)?.to_frequencies()
}

/// Draw Poisson counts with mean `mean_total_per_setting` x Born
/// probability for every setting. Reproducible for a fixed seed.
pub fn simulate_counts(
    rho: &DensityMatrix,
    mean_total_per_setting: f64,
    seed: u64,
) -> Result<CountTable> {
    if !(mean_total_per_setting > 0.0) || !mean_total_per_setting.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: "mean_total_per_setting",
            value: mean_total_per_setting,
        });
    }
    let mut rng = DeterministicRng::from_seed(seed);
    let values = full_setting_set()
        .iter()
        .map(|s| {
            let p = born_probability(rho, s)?;
            Ok(rng.poisson(mean_total_per_setting * p) as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    CountTable::counts(values)
}

/// Convex combination of relative frequencies. Count tables are first
/// normalized by their own totals.
pub fn mix_frequencies(tables: &[CountTable], weights: &[f64]) -> Result<CountTable> {
    if tables.is_empty() || tables.len() != weights.len() {
        return Err(Error::CountTable(format!(
            "{} tables vs {} weights",
            tables.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::CountTable("weights must be non-negative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::CountTable(format!(
            "weights sum to {sum}, expected 1"
        )));
    }
    let mut values = vec![0.0f64; N_SETTINGS];
    for (table, &w) in tables.iter().zip(weights) {
        let freqs = table.to_frequencies()?;
        for (acc, v) in values.iter_mut().zip(freqs.values()) {
            *acc += w * v;
        }
    }
    CountTable::frequencies(values)
}

// ---------------------------------------------------------------------------
// Maximum-likelihood reconstruction
// ---------------------------------------------------------------------------

/// Convergence diagnostics of a reconstruction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaxlikStats {
    pub iterations: usize,
    /// Trace distance between the last two iterates.
    pub final_delta: f64,
    /// Most negative log-likelihood increment observed (>= -1e-10 when the
    /// iteration is healthy).
    pub min_loglik_step: f64,
}

/// Fixed-point iteration rho <- N[R(rho) rho R(rho)] with
/// R(rho) = sum_s (f_s / Tr[rho Pi_s]) Pi_s, started from the maximally
/// mixed state.
pub fn maxlik_reconstruct(counts: &CountTable) -> Result<DensityMatrix> {
    maxlik_reconstruct_detailed(counts).map(|(rho, _)| rho)
}

pub fn maxlik_reconstruct_detailed(counts: &CountTable) -> Result<(DensityMatrix, MaxlikStats)> {
    let freqs = counts.to_frequencies()?;
    let kets: Vec<[Complex64; 8]> = full_setting_set().iter().map(|s| s.ket()).collect();
    let f = freqs.values();

    let mut rho = DensityMatrix::maximally_mixed(3).into_mat();
    let mut last_loglik = f64::NEG_INFINITY;
    let mut min_loglik_step = f64::INFINITY;
    let mut delta = f64::INFINITY;

    for iteration in 1..=MAXLIK_MAX_ITER {
        let mut r = ComplexMatrix::zeros(8);
        let mut loglik = 0.0;
        for (fs, ket) in f.iter().zip(&kets) {
            if *fs == 0.0 {
                continue;
            }
            let p = ket_expectation(&rho, ket).max(PROB_FLOOR);
            loglik += fs * p.ln();
            let w = fs / p;
            for row in 0..8 {
                let kr = ket[row] * w;
                for col in 0..8 {
                    let v = r.get(row, col) + kr * ket[col].conj();
                    r.set(row, col, v);
                }
            }
        }
        if last_loglik.is_finite() {
            min_loglik_step = min_loglik_step.min(loglik - last_loglik);
        }
        last_loglik = loglik;

        let mut next = r.matmul(&rho).matmul(&r);
        let tr = next.trace().re;
        next.scale(1.0 / tr);
        let next = next.symmetrized();

        // The Frobenius norm bounds the trace norm from below, so the exact
        // eigenvalue-based trace distance only needs computing once the
        // cheap bound drops under the tolerance.
        let fro = frobenius_distance(&next, &rho);
        delta = if fro < MAXLIK_TOL {
            trace_distance(&next, &rho)?
        } else {
            fro
        };
        rho = next;
        if delta < MAXLIK_TOL {
            let stats = MaxlikStats {
                iterations: iteration,
                final_delta: delta,
                min_loglik_step: if min_loglik_step.is_finite() {
                    min_loglik_step
                } else {
                    0.0
                },
            };
            let state = DensityMatrix::new_unchecked(3, rho);
            return Ok((state, stats));
        }
    }
    Err(Error::NonConvergence {
        iterations: MAXLIK_MAX_ITER,
        last_delta: delta,
    })
}

/// (1/2) sum |eig(a - b)|.
fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let mut diff = a.clone();
    diff.add_scaled(b, Complex64::new(-1.0, 0.0));
    let (vals, _) = crate::linalg::eig_hermitian(&diff)?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// (1/2) ||a - b||_F, a lower bound on the trace distance.
fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for r in 0..n {
        for c in 0..n {
            sum += (a.get(r, c) - b.get(r, c)).norm_sqr();
        }
    }
    0.5 * sum.sqrt()
}

// ---------------------------------------------------------------------------
// Statistics and Monte Carlo
// ---------------------------------------------------------------------------

/// A named scalar statistic evaluated on a reconstructed state.
#[derive(Debug, Clone)]
pub enum Statistic {
    /// Lowest PT eigenvalue with respect to one qubit (0 = A).
    Alpha(usize),
    /// Bloch-sphere-minimized conditional PT eigenvalue for one measured qubit.
    Beta(usize),
    /// Uhlmann fidelity with a fixed reference state.
    Fidelity {
        label: String,
        reference: DensityMatrix,
    },
}

impl Statistic {
    pub fn name(&self) -> String {
        const QUBITS: [&str; 3] = ["A", "B", "C"];
        match self {
            Statistic::Alpha(q) => format!("alpha_{}", QUBITS[*q]),
            Statistic::Beta(q) => format!("beta_{}", QUBITS[*q]),
            Statistic::Fidelity { label, .. } => format!("fidelity:{label}"),
        }
    }

    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<f64> {
        match self {
            Statistic::Alpha(q) => Ok(pt_certificate(rho, *q)?.min_eigenvalue),
            Statistic::Beta(q) => Ok(minimize_pt_eig(rho, *q)?.beta_min),
            Statistic::Fidelity { reference, .. } => fidelity(rho, reference),
        }
    }
}

/// Mean and sample standard deviation of a statistic over Monte Carlo
/// resamples of a count table.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloResult {
    pub statistic_name: String,
    pub mean: f64,
    pub std: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Samples whose reconstruction or statistic failed.
    pub n_failed: usize,
}

/// Poisson-resample a measured count table, reconstruct each sample and
/// evaluate the statistic. Sample i uses the i-th SplitMix64 sub-seed of
/// `seed`, so results are independent of evaluation order and thread count.
pub fn monte_carlo(
    counts: &CountTable,
    n_samples: usize,
    seed: u64,
    statistic: &Statistic,
) -> Result<MonteCarloResult> {
    let results = monte_carlo_multi(
        std::slice::from_ref(counts),
        &[1.0],
        n_samples,
        seed,
        std::slice::from_ref(statistic),
    )?;
    Ok(results.into_iter().next().expect("one statistic"))
}

/// Monte Carlo over a frequency mixture: each sample resamples every
/// component count table, re-mixes with the given weights, reconstructs
/// and evaluates all statistics on the same reconstruction.
pub fn monte_carlo_multi(
    tables: &[CountTable],
    weights: &[f64],
    n_samples: usize,
    seed: u64,
    statistics: &[Statistic],
) -> Result<Vec<MonteCarloResult>> {
    if n_samples < 2 {
        return Err(Error::ParamOutOfRange {
            name: "n_samples",
            value: n_samples as f64,
        });
    }
    if statistics.is_empty() {
        return Err(Error::CountTable("no statistics requested".into()));
    }
    for table in tables {
        if table.kind() != TableKind::Counts {
            return Err(Error::CountTable(
                "Monte Carlo resampling requires raw counts".into(),
            ));
        }
    }
    // run the mixing once up front to validate shapes and weights
    mix_frequencies(tables, weights)?;

    let seeds = sub_seeds(seed, n_samples);
    let per_sample: Vec<Option<Vec<f64>>> = seeds
        .par_iter()
        .map(|&sample_seed| {
            let mut rng = DeterministicRng::from_seed(sample_seed);
            let resampled: Vec<CountTable> = tables
                .iter()
                .map(|t| {
                    let values = t.values().iter().map(|&v| rng.poisson(v) as f64).collect();
                    CountTable::counts(values).expect("non-negative")
                })
                .collect();
            let mixed = match mix_frequencies(&resampled, weights) {
                Ok(m) => m,
                Err(_) => return None,
            };
            let rho = match maxlik_reconstruct(&mixed) {
                Ok(r) => r,
                Err(_) => return None,
            };
            let mut row = Vec::with_capacity(statistics.len());
            for stat in statistics {
                match stat.evaluate(&rho) {
                    Ok(v) => row.push(v),
                    Err(_) => return None,
                }
            }
            Some(row)
        })
        .collect();

    let n_failed = per_sample.iter().filter(|r| r.is_none()).count();
    let n_ok = n_samples - n_failed;
    if n_ok < 2 {
        return Err(Error::NonConvergence {
            iterations: n_samples,
            last_delta: f64::NAN,
        });
    }

    let results = statistics
        .iter()
        .enumerate()
        .map(|(k, stat)| {
            // fixed summation order over sample indices keeps the result
            // bit-identical for any thread count
            let mut sum = 0.0;
            for row in per_sample.iter().flatten() {
                sum += row[k];
            }
            let mean = sum / n_ok as f64;
            let mut ss = 0.0;
            for row in per_sample.iter().flatten() {
                ss += (row[k] - mean) * (row[k] - mean);
            }
            let std = (ss / (n_ok - 1) as f64).sqrt();
            MonteCarloResult {
                statistic_name: stat.name(),
                mean,
                std,
                n_samples,
                seed,
                n_failed,
            }
        })
        .collect();
    Ok(results)
}

// ---------------------------------------------------------------------------
// Local filters
// ---------------------------------------------------------------------------

/// Apply the single-qubit filter diag(1, sqrt(t_j)) to each qubit and
/// renormalize. Models polarization-dependent loss after an ideal gate.
pub fn apply_local_filter(rho: &DensityMatrix, transmittances: [f64; 3]) -> Result<DensityMatrix> {
    if rho.n_qubits() != 3 {
        return Err(Error::WrongQubitCount {
            expected: 3,
            actual: rho.n_qubits(),
        });
    }
    for (j, &t) in transmittances.iter().enumerate() {
        if !(t > 0.0 && t <= 1.0) {
            let _ = j;
            return Err(Error::ParamOutOfRange {
                name: "transmittance",
                value: t,
            });
        }
    }
    let root = transmittances.map(f64::sqrt);
    let factor = |index: usize| -> f64 {
        (0..3)
            .map(|q| {
                if (index >> (2 - q)) & 1 == 1 {
                    root[q]
                } else {
                    1.0
                }
            })
            .product()
    };
    let mut mat = ComplexMatrix::from_fn(8, |r, c| rho.mat().get(r, c) * factor(r) * factor(c));
    let tr = mat.trace().re;
    if tr < 1e-300 {
        return Err(Error::NoSupport { probability: tr });
    }
    mat.scale(1.0 / tr);
    Ok(DensityMatrix::new_unchecked(3, mat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::PureState;
    use crate::states::{ghz, rho_p_mu, FamilyParams};
    use approx::assert_relative_eq;

    #[test]
    fn setting_set_is_canonical() {
        let settings = full_setting_set();
        assert_eq!(settings.len(), 216);
        assert_eq!(settings[0].to_string(), "Z0,Z0,Z0");
        assert_eq!(settings[215].to_string(), "Y-,Y-,Y-");
        for (i, s) in settings.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
        let mut sorted = settings.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), 216, "settings must be distinct");
    }

    #[test]
    fn born_probability_examples() {
        let mixed = DensityMatrix::maximally_mixed(3);
        for s in full_setting_set() {
            assert_relative_eq!(
                born_probability(&mixed, &s).unwrap(),
                0.125,
                epsilon = 1e-12
            );
        }

        let ghz_state = DensityMatrix::from_pure(&ghz()).unwrap();
        let zzz = MeasurementSetting {
            labels: [ProjectorLabel::Z0; 3],
        };
        assert_relative_eq!(
            born_probability(&ghz_state, &zzz).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        let xxx = MeasurementSetting {
            labels: [ProjectorLabel::Xp; 3],
        };
        assert_relative_eq!(
            born_probability(&ghz_state, &xxx).unwrap(),
            0.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn born_probabilities_sum_to_basis_count() {
        // six projectors per qubit cover three complete bases, so the full
        // set integrates to 27
        let rho = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let total: f64 = full_setting_set()
            .iter()
            .map(|s| born_probability(&rho, s).unwrap())
            .sum();
        assert_relative_eq!(total, 27.0, epsilon = 1e-10);
    }

    #[test]
    fn simulate_counts_is_deterministic() {
        let rho = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let a = simulate_counts(&rho, 1e4, 7).unwrap();
        let b = simulate_counts(&rho, 1e4, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_counts(&rho, 1e4, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn simulate_counts_tracks_poisson_statistics() {
        let mixed = DensityMatrix::maximally_mixed(3);
        let table = simulate_counts(&mixed, 1e6, 12345).unwrap();
        let mean = 1.25e5_f64;
        let sigma = mean.sqrt();
        for (i, &v) in table.values().iter().enumerate() {
            assert!(
                (v - mean).abs() < 5.0 * sigma,
                "setting {i}: count {v} further than 5 sigma from {mean}"
            );
        }
    }

    #[test]
    fn frequencies_converge_to_born_probabilities() {
        let rho = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let table = simulate_counts(&rho, 1e7, 99).unwrap();
        let freqs = table.to_frequencies().unwrap();
        for (i, s) in full_setting_set().iter().enumerate() {
            let p = born_probability(&rho, s).unwrap() / 27.0;
            if p > 1e-4 {
                let f = freqs.values()[i];
                assert!(((f - p) / p).abs() < 1e-2, "setting {i}: {f} vs {p}");
            }
        }
    }

    #[test]
    fn mix_frequencies_identity_cases() {
        let rho = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let a = exact_frequencies(&rho).unwrap();
        let b = exact_frequencies(&DensityMatrix::maximally_mixed(3)).unwrap();

        let mixed = mix_frequencies(&[a.clone(), b], &[1.0, 0.0]).unwrap();
        for (x, y) in mixed.values().iter().zip(a.values()) {
            assert_relative_eq!(x, y, epsilon = 1e-15);
        }

        let same = mix_frequencies(&[a.clone(), a.clone()], &[0.5, 0.5]).unwrap();
        for (x, y) in same.values().iter().zip(a.values()) {
            assert_relative_eq!(x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn mixing_pure_components_reproduces_family_frequencies() {
        // GHZ frequencies at weight p plus each basis state at (1-p)/8 give
        // the frequencies of the p = 1/4, mu = 1 family state
        let p = 0.25;
        let mut tables =
            vec![exact_frequencies(&DensityMatrix::from_pure(&ghz()).unwrap()).unwrap()];
        let mut weights = vec![p];
        for z in 0..8 {
            tables.push(
                exact_frequencies(&DensityMatrix::from_pure(&PureState::basis(3, z)).unwrap())
                    .unwrap(),
            );
            weights.push((1.0 - p) / 8.0);
        }
        let mixed = mix_frequencies(&tables, &weights).unwrap();
        let target = exact_frequencies(&rho_p_mu(&FamilyParams::new(p, 1.0).unwrap())).unwrap();
        for (x, y) in mixed.values().iter().zip(target.values()) {
            assert!((x - y).abs() < 1e-15, "{x} vs {y}");
        }
    }

    #[test]
    fn mix_rejects_bad_weights() {
        let rho = DensityMatrix::maximally_mixed(3);
        let t = exact_frequencies(&rho).unwrap();
        assert!(mix_frequencies(&[t.clone()], &[0.9]).is_err());
        assert!(mix_frequencies(&[t.clone()], &[1.0, 0.0]).is_err());
        assert!(mix_frequencies(&[t.clone(), t.clone()], &[1.5, -0.5]).is_err());
    }

    #[test]
    fn csv_round_trip_and_rejection() {
        let rho = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let table = simulate_counts(&rho, 1e3, 5).unwrap();
        let csv = table.to_csv();
        let back = CountTable::from_csv(&csv).unwrap();
        assert_eq!(table, back);

        // duplicate row
        let mut lines: Vec<&str> = csv.lines().collect();
        let dup = lines[1];
        lines.push(dup);
        let bad = lines.join("\n");
        assert!(matches!(
            CountTable::from_csv(&bad),
            Err(Error::CountTable(_))
        ));

        // missing row
        let mut lines: Vec<&str> = csv.lines().collect();
        lines.remove(10);
        let bad = lines.join("\n");
        assert!(CountTable::from_csv(&bad).is_err());

        // negative count
        let bad = csv.replacen(",0\n", ",-3\n", 1);
        if bad != csv {
            assert!(CountTable::from_csv(&bad).is_err());
        }
    }

    #[test]
    fn maxlik_reconstructs_family_from_exact_frequencies() {
        let target = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        // scaled exact probabilities as a high-count table
        let values: Vec<f64> = full_setting_set()
            .iter()
            .map(|s| 1e6 * born_probability(&target, s).unwrap())
            .collect();
        let counts = CountTable::counts(values).unwrap();
        let (rho, stats) = maxlik_reconstruct_detailed(&counts).unwrap();
        let f = fidelity(&rho, &target).unwrap();
        assert!(
            f >= 1.0 - 1e-6,
            "fidelity {f} after {} iters",
            stats.iterations
        );
        assert!(stats.min_loglik_step >= -1e-10, "{}", stats.min_loglik_step);
    }

    #[test]
    fn maxlik_recovers_pure_basis_state() {
        let target = DensityMatrix::from_pure(&PureState::basis(3, 0)).unwrap();
        let counts = exact_frequencies(&target).unwrap();
        let rho = maxlik_reconstruct(&counts).unwrap();
        let f = fidelity(&rho, &target).unwrap();
        assert!(f >= 1.0 - 1e-8, "fidelity {f}");
    }

    #[test]
    fn maxlik_on_poisson_counts() {
        let target = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let counts = simulate_counts(&target, 1e4, 7).unwrap();
        let rho = maxlik_reconstruct(&counts).unwrap();
        let f = fidelity(&rho, &target).unwrap();
        assert!(f >= 0.99, "fidelity {f}");
    }

    #[test]
    fn maxlik_rejects_empty_table() {
        let counts = CountTable::counts(vec![0.0; N_SETTINGS]).unwrap();
        assert!(maxlik_reconstruct(&counts).is_err());
    }

    #[test]
    fn maxlik_recovers_ghz_from_high_counts() {
        let target = DensityMatrix::from_pure(&ghz()).unwrap();
        let counts = simulate_counts(&target, 1e5, 7).unwrap();
        let rho = maxlik_reconstruct(&counts).unwrap();
        let f = fidelity(&rho, &target).unwrap();
        assert!(f >= 0.999, "fidelity {f}");
    }

    #[test]
    fn maxlik_reconstruction_improves_with_counts() {
        // median fidelity over 10 seeds must not decrease as the mean
        // counts per setting grow
        let target = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let mut medians = Vec::new();
        for mean in [1e3, 1e4, 1e5] {
            let mut fids: Vec<f64> = (0..10u64)
                .map(|seed| {
                    let counts = simulate_counts(&target, mean, seed).unwrap();
                    let rho = maxlik_reconstruct(&counts).unwrap();
                    fidelity(&rho, &target).unwrap()
                })
                .collect();
            fids.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(0.5 * (fids[4] + fids[5]));
        }
        assert!(
            medians[0] <= medians[1] && medians[1] <= medians[2],
            "medians {medians:?}"
        );
    }

    #[test]
    fn reconstruction_is_informationally_complete() {
        // the 216-setting set determines arbitrary states: noiseless
        // frequencies of seeded random states reconstruct near-perfectly
        let mut rng = DeterministicRng::from_seed(50);
        let mut worst = 1.0f64;
        for _ in 0..50 {
            let target = rng.random_density_matrix(3);
            let freqs = exact_frequencies(&target).unwrap();
            let rho = maxlik_reconstruct(&freqs).unwrap();
            worst = worst.min(fidelity(&rho, &target).unwrap());
        }
        assert!(worst >= 1.0 - 1e-5, "worst fidelity {worst}");
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let target = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let counts = simulate_counts(&target, 200.0, 11).unwrap();
        let stat = Statistic::Alpha(0);
        let a = monte_carlo(&counts, 8, 21, &stat).unwrap();
        let b = monte_carlo(&counts, 8, 21, &stat).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std.to_bits(), b.std.to_bits());
        assert_eq!(a.n_failed, 0);
        assert_eq!(a.statistic_name, "alpha_A");
    }

    #[test]
    fn monte_carlo_linear_statistic_matches_point_estimate() {
        // fidelity with a pure state is linear in rho, so the MC mean must
        // sit near the point-estimate value
        let target = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let counts = simulate_counts(&target, 1e4, 3).unwrap();
        let point = maxlik_reconstruct(&counts).unwrap();
        let reference = DensityMatrix::from_pure(&ghz()).unwrap();
        let stat = Statistic::Fidelity {
            label: "ghz".into(),
            reference: reference.clone(),
        };
        let mc = monte_carlo(&counts, 24, 17, &stat).unwrap();
        let direct = fidelity(&point, &reference).unwrap();
        assert!(
            (mc.mean - direct).abs() <= 3.0 * mc.std.max(1e-6),
            "MC mean {} vs direct {direct} (std {})",
            mc.mean,
            mc.std
        );
    }

    #[test]
    fn monte_carlo_fidelity_on_high_count_input() {
        // resampling a high-count table barely moves the reconstruction
        let target = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let values: Vec<f64> = full_setting_set()
            .iter()
            .map(|s| (1e6 * born_probability(&target, s).unwrap()).round())
            .collect();
        let counts = CountTable::counts(values).unwrap();
        let stat = Statistic::Fidelity {
            label: "target".into(),
            reference: target.clone(),
        };
        let mc = monte_carlo(&counts, 8, 5, &stat).unwrap();
        assert!(mc.mean > 1.0 - 1e-3, "mean {}", mc.mean);
        assert!(mc.std < 1e-3, "std {}", mc.std);
    }

    #[test]
    fn monte_carlo_alpha_tracks_theory_anchor() {
        let target = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let counts = simulate_counts(&target, 1e4, 7).unwrap();
        let mc = monte_carlo(&counts, 24, 21, &Statistic::Alpha(0)).unwrap();
        let pull = (mc.mean + 1.0 / 32.0).abs() / mc.std;
        assert!(
            pull <= 3.0,
            "mean {} +- {} (pull {pull:.2})",
            mc.mean,
            mc.std
        );
    }

    #[test]
    fn monte_carlo_requires_counts() {
        let rho = DensityMatrix::maximally_mixed(3);
        let freqs = exact_frequencies(&rho).unwrap();
        assert!(monte_carlo(&freqs, 4, 1, &Statistic::Alpha(0)).is_err());
    }

    #[test]
    fn local_filter_identity_and_asymmetry() {
        let rho = rho_p_mu(&FamilyParams::new(0.25, 1.0).unwrap());
        let same = apply_local_filter(&rho, [1.0, 1.0, 1.0]).unwrap();
        assert!(same.mat().max_abs_diff(rho.mat()) < 1e-14);

        let filtered = apply_local_filter(&rho, [0.9, 0.6, 0.3]).unwrap();
        assert_relative_eq!(filtered.mat().trace().re, 1.0, epsilon = 1e-13);
        let alphas: Vec<f64> = (0..3)
            .map(|q| pt_certificate(&filtered, q).unwrap().min_eigenvalue)
            .collect();
        // unequal losses break the symmetry between the qubit certificates
        assert!(
            (alphas[0] - alphas[1]).abs() > 1e-6 || (alphas[1] - alphas[2]).abs() > 1e-6,
            "{alphas:?}"
        );
        assert!(apply_local_filter(&rho, [0.0, 1.0, 1.0]).is_err());
    }
}
