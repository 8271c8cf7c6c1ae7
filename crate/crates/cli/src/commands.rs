//! Subcommand definitions and dispatch.
//!
//! Exit codes: 0 on success, 2 for input problems, 3 when a numerical
//! certificate fails (non-convergence, vanishing projection support).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use nonloc_core::entanglement::{
    p_col_threshold, p_nloc_threshold, p_ppt_threshold, pt_certificate,
};
use nonloc_core::linalg::fidelity;
use nonloc_core::localization::{conditional_localize, unconditional_localize};
use nonloc_core::states::{ghz, rho_p_mu};
use nonloc_core::tomography::{
    maxlik_reconstruct_detailed, mix_frequencies, monte_carlo, monte_carlo_multi, simulate_counts,
    CountTable, MonteCarloResult, Statistic,
};
use nonloc_core::{DensityMatrix, FamilyParams, PureState};

use crate::report::{digest_bytes, fmt12, round_sig, InputDigest, ReportDocument};

const DEFAULT_SEED: u64 = 7;
const QUBIT_LABELS: [&str; 3] = ["A", "B", "C"];

#[derive(Debug)]
pub enum CliError {
    /// Malformed input, bad arguments, IO problems.
    Input(String),
    /// A numerical procedure failed to produce a certificate.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Numerical(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<nonloc_core::Error> for CliError {
    fn from(err: nonloc_core::Error) -> Self {
        match err {
            nonloc_core::Error::NonConvergence { .. } | nonloc_core::Error::NoSupport { .. } => {
                CliError::Numerical(err.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "nonloc",
    version,
    about = "Certify and localize entanglement of three-qubit GHZ mixtures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Construct family states
    State {
        #[command(subcommand)]
        cmd: StateCommand,
    },
    /// Emit the p_ppt / p_nloc / p_col threshold curves as CSV
    Thresholds {
        /// Number of mu grid points (including both endpoints)
        #[arg(long = "mu-steps")]
        mu_steps: usize,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partial-transpose and localizability certificates for a state file
    Certify {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Write a JSON report document here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Extract two-qubit entanglement by the collective CNOT procedures
    Localize {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: LocalizeMode,
        /// Write the two-qubit output state here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a JSON report document here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Tomography pipeline: simulate counts, reconstruct, error bars
    Tomo {
        #[command(subcommand)]
        cmd: TomoCommand,
    },
    /// End-to-end desk-scale run: simulate, mix, reconstruct, certify,
    /// localize and attach Monte Carlo error bars
    PipelineDemo {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        mu: f64,
        /// Mean Poisson counts per tomography setting
        #[arg(long, default_value_t = 1e4)]
        mean: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo samples
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Write a JSON report document here
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
pub enum StateCommand {
    /// Write the family state rho_{p,mu} as JSON
    Make {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum TomoCommand {
    /// Simulate Poisson counts for all 216 settings
    Simulate {
        #[arg(long)]
        state: PathBuf,
        /// Mean counts per setting at unit probability
        #[arg(long)]
        mean: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum-likelihood reconstruction from a count CSV
    Reconstruct {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo error bars for a statistic of the reconstructed state
    Mc {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// alpha_A|alpha_B|alpha_C|beta_A|beta_B|beta_C|fidelity:REF.json
        #[arg(long)]
        statistic: String,
        /// Write a JSON report document here
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LocalizeMode {
    Conditional,
    Unconditional,
}

/// --seed wins, then NONLOC_SEED, then the built-in default.
fn resolve_seed(cli_seed: Option<u64>) -> CliResult<u64> {
    if let Some(seed) = cli_seed {
        return Ok(seed);
    }
    match std::env::var("NONLOC_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| CliError::Input(format!("NONLOC_SEED={text:?} is not a u64"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn read_state(path: &Path) -> CliResult<(DensityMatrix, InputDigest)> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let state: DensityMatrix = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((
        state,
        InputDigest {
            path: path.display().to_string(),
            sha256: digest_bytes(&bytes),
        },
    ))
}

fn read_counts(path: &Path) -> CliResult<(CountTable, InputDigest)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let table = CountTable::from_csv(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((
        table,
        InputDigest {
            path: path.display().to_string(),
            sha256: digest_bytes(text.as_bytes()),
        },
    ))
}

fn write_text(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_state(path: &Path, state: &DensityMatrix) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(state).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Command::State { cmd } => match cmd {
            StateCommand::Make { p, mu, out } => cmd_state_make(p, mu, &out),
        },
        Command::Thresholds { mu_steps, out } => cmd_thresholds(mu_steps, out.as_deref()),
        Command::Certify { input, report } => cmd_certify(&input, report.as_deref()),
        Command::Localize {
            input,
            mode,
            out,
            report,
        } => cmd_localize(&input, mode, out.as_deref(), report.as_deref()),
        Command::Tomo { cmd } => match cmd {
            TomoCommand::Simulate {
                state,
                mean,
                seed,
                out,
            } => cmd_tomo_simulate(&state, mean, seed, &out),
            TomoCommand::Reconstruct { counts, out } => cmd_tomo_reconstruct(&counts, &out),
            TomoCommand::Mc {
                counts,
                samples,
                seed,
                statistic,
                report,
            } => cmd_tomo_mc(&counts, samples, seed, &statistic, report.as_deref()),
        },
        Command::PipelineDemo {
            p,
            mu,
            mean,
            seed,
            samples,
            report,
        } => cmd_pipeline_demo(p, mu, mean, seed, samples, report.as_deref()),
    }
}

fn cmd_state_make(p: f64, mu: f64, out: &Path) -> CliResult<()> {
    let params = FamilyParams::new(p, mu).map_err(CliError::from)?;
    let rho = rho_p_mu(&params);
    write_state(out, &rho)?;
    println!(
        "wrote rho_{{p={},mu={}}} to {}",
        fmt12(p),
        fmt12(mu),
        out.display()
    );
    Ok(())
}

fn cmd_thresholds(mu_steps: usize, out: Option<&Path>) -> CliResult<()> {
    if mu_steps < 2 {
        return Err(CliError::Input(format!(
            "--mu-steps must be at least 2, got {mu_steps}"
        )));
    }
    let mut csv = String::from("mu,p_ppt,p_nloc,p_col\n");
    for i in 0..mu_steps {
        let mu = i as f64 / (mu_steps - 1) as f64;
        let row = format!(
            "{},{},{},{}\n",
            fmt12(mu),
            fmt12(p_ppt_threshold(mu).map_err(CliError::from)?),
            fmt12(p_nloc_threshold(mu).map_err(CliError::from)?),
            fmt12(p_col_threshold(mu).map_err(CliError::from)?),
        );
        csv.push_str(&row);
    }
    match out {
        Some(path) => {
            write_text(path, &csv)?;
            println!("wrote {mu_steps} rows to {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct QubitCertificateJson {
    qubit: &'static str,
    min_eigenvalue: f64,
    is_npt: bool,
}

#[derive(Serialize)]
struct LocalizabilityJson {
    qubit: &'static str,
    beta_min: f64,
    theta: f64,
    phi: f64,
    nonlocalizable: bool,
}

fn cmd_certify(input: &Path, report_path: Option<&Path>) -> CliResult<()> {
    let (rho, digest) = read_state(input)?;
    let report = nonloc_core::report::certify(&rho).map_err(CliError::from)?;

    let alpha: Vec<QubitCertificateJson> = report
        .inseparability
        .certificates
        .iter()
        .map(|c| QubitCertificateJson {
            qubit: QUBIT_LABELS[c.qubit],
            min_eigenvalue: round_sig(c.min_eigenvalue),
            is_npt: c.is_npt,
        })
        .collect();
    let beta: Vec<LocalizabilityJson> = report
        .localizability
        .certificates
        .iter()
        .map(|c| LocalizabilityJson {
            qubit: QUBIT_LABELS[c.measured_qubit],
            beta_min: round_sig(c.beta_min),
            theta: round_sig(c.arg_theta),
            phi: round_sig(c.arg_phi),
            nonlocalizable: c.nonlocalizable,
        })
        .collect();

    for c in &alpha {
        println!(
            "alpha_{} = {} (npt: {})",
            c.qubit,
            fmt12(c.min_eigenvalue),
            c.is_npt
        );
    }
    println!(
        "fully inseparable: {}",
        if report.inseparability.fully_inseparable {
            "yes"
        } else {
            "no"
        }
    );
    for c in &beta {
        println!(
            "beta_{} = {} at theta = {}, phi = {}",
            c.qubit,
            fmt12(c.beta_min),
            fmt12(c.theta),
            fmt12(c.phi)
        );
    }
    println!(
        "nonlocalizable: {}",
        if report.localizability.nonlocalizable {
            "yes"
        } else {
            "no"
        }
    );

    if let Some(path) = report_path {
        let results = json!({
            "alpha": serde_json::to_value(&alpha).expect("serializable"),
            "fully_inseparable": report.inseparability.fully_inseparable,
            "beta": serde_json::to_value(&beta).expect("serializable"),
            "nonlocalizable": report.localizability.nonlocalizable,
        });
        let doc = ReportDocument::new(None, vec![digest], results);
        write_text(path, &doc.to_json())?;
    }
    Ok(())
}

fn cmd_localize(
    input: &Path,
    mode: LocalizeMode,
    out: Option<&Path>,
    report_path: Option<&Path>,
) -> CliResult<()> {
    let (rho, digest) = read_state(input)?;
    let (state_ab, results) = match mode {
        LocalizeMode::Conditional => {
            let (state_ab, p0) = conditional_localize(&rho).map_err(CliError::from)?;
            let cert = pt_certificate(&state_ab, 0).map_err(CliError::from)?;
            println!("p0 = {}", fmt12(p0));
            println!(
                "delta = {} (npt: {})",
                fmt12(cert.min_eigenvalue),
                cert.is_npt
            );
            let results = json!({
                "mode": "conditional",
                "p0": round_sig(p0),
                "delta": round_sig(cert.min_eigenvalue),
                "entangled": cert.is_npt,
            });
            (state_ab, results)
        }
        LocalizeMode::Unconditional => {
            let state_ab = unconditional_localize(&rho).map_err(CliError::from)?;
            let cert = pt_certificate(&state_ab, 0).map_err(CliError::from)?;
            println!(
                "gamma = {} (npt: {})",
                fmt12(cert.min_eigenvalue),
                cert.is_npt
            );
            let results = json!({
                "mode": "unconditional",
                "gamma": round_sig(cert.min_eigenvalue),
                "entangled": cert.is_npt,
            });
            (state_ab, results)
        }
    };
    if let Some(path) = out {
        write_state(path, &state_ab)?;
    }
    if let Some(path) = report_path {
        let doc = ReportDocument::new(None, vec![digest], results);
        write_text(path, &doc.to_json())?;
    }
    Ok(())
}

fn cmd_tomo_simulate(state: &Path, mean: f64, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let (rho, _) = read_state(state)?;
    let seed = resolve_seed(seed)?;
    let table = simulate_counts(&rho, mean, seed).map_err(CliError::from)?;
    write_text(out, &table.to_csv())?;
    println!(
        "simulated 216 settings (seed {seed}, total counts {})",
        fmt12(table.total())
    );
    Ok(())
}

fn cmd_tomo_reconstruct(counts: &Path, out: &Path) -> CliResult<()> {
    let (table, _) = read_counts(counts)?;
    let (rho, stats) = maxlik_reconstruct_detailed(&table).map_err(CliError::from)?;
    write_state(out, &rho)?;
    println!(
        "converged after {} iterations (final trace-distance step {:.3e})",
        stats.iterations, stats.final_delta
    );
    Ok(())
}

fn parse_statistic(text: &str) -> CliResult<(Statistic, Vec<InputDigest>)> {
    let qubit_of = |s: &str| QUBIT_LABELS.iter().position(|&l| l == s);
    if let Some(rest) = text.strip_prefix("alpha_") {
        if let Some(q) = qubit_of(rest) {
            return Ok((Statistic::Alpha(q), Vec::new()));
        }
    }
    if let Some(rest) = text.strip_prefix("beta_") {
        if let Some(q) = qubit_of(rest) {
            return Ok((Statistic::Beta(q), Vec::new()));
        }
    }
    if let Some(path) = text.strip_prefix("fidelity:") {
        let (reference, digest) = read_state(Path::new(path))?;
        return Ok((
            Statistic::Fidelity {
                label: path.to_string(),
                reference,
            },
            vec![digest],
        ));
    }
    Err(CliError::Input(format!(
        "unknown statistic {text:?}; expected alpha_A..C, beta_A..C or fidelity:REF.json"
    )))
}

fn mc_result_json(r: &MonteCarloResult) -> serde_json::Value {
    json!({
        "statistic": r.statistic_name,
        "mean": round_sig(r.mean),
        "std": round_sig(r.std),
        "n_samples": r.n_samples,
        "n_failed": r.n_failed,
    })
}

fn print_mc_result(r: &MonteCarloResult) {
    println!(
        "{} = {} +- {} ({} samples, {} failed)",
        r.statistic_name,
        fmt12(r.mean),
        fmt12(r.std),
        r.n_samples,
        r.n_failed
    );
}

fn cmd_tomo_mc(
    counts: &Path,
    samples: usize,
    seed: Option<u64>,
    statistic: &str,
    report_path: Option<&Path>,
) -> CliResult<()> {
    let (table, counts_digest) = read_counts(counts)?;
    let seed = resolve_seed(seed)?;
    let (stat, mut stat_digests) = parse_statistic(statistic)?;
    let mut digests = vec![counts_digest];
    digests.append(&mut stat_digests);
    let result = monte_carlo(&table, samples, seed, &stat).map_err(CliError::from)?;
    print_mc_result(&result);
    if let Some(path) = report_path {
        let doc = ReportDocument::new(Some(seed), digests, mc_result_json(&result));
        write_text(path, &doc.to_json())?;
    }
    Ok(())
}

fn cmd_pipeline_demo(
    p: f64,
    mu: f64,
    mean: f64,
    seed: Option<u64>,
    samples: usize,
    report_path: Option<&Path>,
) -> CliResult<()> {
    let params = FamilyParams::new(p, mu).map_err(CliError::from)?;
    let seed = resolve_seed(seed)?;
    let target = rho_p_mu(&params);

    // ten sub-seeds: one per simulated component, the last for Monte Carlo
    let seeds = nonloc_core::rng::sub_seeds(seed, 10);

    // measured components: the GHZ state and the eight basis states
    let ghz_state = DensityMatrix::from_pure(&ghz()).map_err(CliError::from)?;
    let mut tables = vec![simulate_counts(&ghz_state, mean, seeds[0]).map_err(CliError::from)?];
    let mut weights = vec![p * mu];
    for z in 0..8 {
        let basis = DensityMatrix::from_pure(&PureState::basis(3, z)).map_err(CliError::from)?;
        tables.push(simulate_counts(&basis, mean, seeds[1 + z]).map_err(CliError::from)?);
        let mut w = (1.0 - p) / 8.0;
        if matches!(z, 0b001 | 0b010 | 0b100) {
            w += p * (1.0 - mu) / 3.0;
        }
        weights.push(w);
    }

    let mixed = mix_frequencies(&tables, &weights).map_err(CliError::from)?;
    let (rho_hat, stats) = maxlik_reconstruct_detailed(&mixed).map_err(CliError::from)?;
    let f = fidelity(&rho_hat, &target).map_err(CliError::from)?;
    println!(
        "reconstructed state in {} iterations; fidelity with target = {}",
        stats.iterations,
        fmt12(f)
    );

    let cert = nonloc_core::report::certify(&rho_hat).map_err(CliError::from)?;
    for c in &cert.inseparability.certificates {
        println!(
            "alpha_{} = {}",
            QUBIT_LABELS[c.qubit],
            fmt12(c.min_eigenvalue)
        );
    }
    for c in &cert.localizability.certificates {
        println!(
            "beta_{} = {}",
            QUBIT_LABELS[c.measured_qubit],
            fmt12(c.beta_min)
        );
    }
    println!(
        "fully inseparable: {}; nonlocalizable: {}",
        if cert.inseparability.fully_inseparable {
            "yes"
        } else {
            "no"
        },
        if cert.localizability.nonlocalizable {
            "yes"
        } else {
            "no"
        }
    );

    let (cond_state, p0) = conditional_localize(&rho_hat).map_err(CliError::from)?;
    let delta = pt_certificate(&cond_state, 0).map_err(CliError::from)?;
    println!(
        "conditional: p0 = {}, delta = {}",
        fmt12(p0),
        fmt12(delta.min_eigenvalue)
    );
    let uncond_state = unconditional_localize(&rho_hat).map_err(CliError::from)?;
    let gamma = pt_certificate(&uncond_state, 0).map_err(CliError::from)?;
    println!("unconditional: gamma = {}", fmt12(gamma.min_eigenvalue));

    let statistics: Vec<Statistic> = (0..3)
        .map(Statistic::Alpha)
        .chain((0..3).map(Statistic::Beta))
        .chain(std::iter::once(Statistic::Fidelity {
            label: "target".into(),
            reference: target.clone(),
        }))
        .collect();
    let mc = monte_carlo_multi(&tables, &weights, samples, seeds[9], &statistics)
        .map_err(CliError::from)?;
    for r in &mc {
        print_mc_result(r);
    }

    if let Some(path) = report_path {
        let results = json!({
            "p": round_sig(p),
            "mu": round_sig(mu),
            "mean_counts": round_sig(mean),
            "maxlik_iterations": stats.iterations,
            "fidelity_with_target": round_sig(f),
            "alpha": cert
                .inseparability
                .certificates
                .iter()
                .map(|c| json!({
                    "qubit": QUBIT_LABELS[c.qubit],
                    "min_eigenvalue": round_sig(c.min_eigenvalue),
                    "is_npt": c.is_npt,
                }))
                .collect::<Vec<_>>(),
            "beta": cert
                .localizability
                .certificates
                .iter()
                .map(|c| json!({
                    "qubit": QUBIT_LABELS[c.measured_qubit],
                    "beta_min": round_sig(c.beta_min),
                    "theta": round_sig(c.arg_theta),
                    "phi": round_sig(c.arg_phi),
                }))
                .collect::<Vec<_>>(),
            "fully_inseparable": cert.inseparability.fully_inseparable,
            "nonlocalizable": cert.localizability.nonlocalizable,
            "conditional": {
                "p0": round_sig(p0),
                "delta": round_sig(delta.min_eigenvalue),
            },
            "unconditional": {
                "gamma": round_sig(gamma.min_eigenvalue),
            },
            "monte_carlo": mc.iter().map(mc_result_json).collect::<Vec<_>>(),
        });
        let doc = ReportDocument::new(Some(seed), Vec::new(), results);
        write_text(path, &doc.to_json())?;
    }
    Ok(())
}
