//! Command-line front end. Every command prints JSON on stdout (and copies it
//! to `--out` when given); one-line summaries go to stderr.
//!
//! Exit codes: 0 all checks pass, 1 some check failed, 2 usage or config error.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::algebra::{Element, StructureTable};
use crate::catalog;
use crate::derivations;
use crate::error::{Error, Result};
use crate::invariance::{self, InvarianceConfig};
use crate::physics;
use crate::report::{Status, VerificationReport};
use crate::transforms::{self, WaveConfig};

pub const DEFAULT_SEED: u64 = 0x5eed_0c7a;
pub const COMPOSITION_PAIRS: usize = 100;
pub const LEIBNIZ_SAMPLES: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "octoalg", version, about = "Octonion algebra catalog, identity suites and eigenvalue checks")]
pub struct Cli {
    /// Output directory (enumerate) or JSON file (other commands).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Override the default tolerance of every check that runs.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate the 128 parity assignments and keep the 16 valid tables.
    Enumerate {
        /// Also report every candidate with its pass/fail flag.
        #[arg(long)]
        candidates: bool,
    },
    /// Run identity suites.
    Verify {
        #[arg(long, value_enum)]
        suite: Option<Suite>,
        /// `O[N]` or `N`; default all sixteen.
        #[arg(long)]
        table: Option<String>,
    },
    /// Solve an eigenproblem described by a JSON wave config.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check eigenvalue invariance across the sixteen algebras.
    Invariance {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Pauli,
    Lorentz,
    Associator,
    FourTuple,
    Spin,
    Derivations,
    Leibniz,
    Fano,
}

impl Suite {
    const ALL: [Suite; 8] = [
        Suite::Pauli,
        Suite::Lorentz,
        Suite::Associator,
        Suite::FourTuple,
        Suite::Spin,
        Suite::Derivations,
        Suite::Leibniz,
        Suite::Fano,
    ];

    fn default_tolerance(self) -> f64 {
        match self {
            Suite::Leibniz => derivations::LEIBNIZ_TOL,
            Suite::Derivations => derivations::RANK_CUTOFF,
            _ => physics::IDENTITY_TOL,
        }
    }

    fn per_table(self) -> bool {
        !matches!(self, Suite::Pauli | Suite::Fano)
    }
}

/// What a command produced: a JSON document and whether its checks passed.
pub struct Outcome {
    pub json: serde_json::Value,
    pub passed: bool,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Enumerate { candidates } => cmd_enumerate(cli, *candidates),
        Command::Verify { suite, table } => cmd_verify(cli, *suite, table.as_deref()),
        Command::Solve { config } => cmd_solve(cli, config),
        Command::Invariance { config } => cmd_invariance(cli, config),
    }
}

/// Run and write outputs; returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    match run(cli).and_then(|o| emit(cli, &o).map(|_| o)) {
        Ok(o) => i32::from(!o.passed),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn to_pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn emit(cli: &Cli, o: &Outcome) -> Result<()> {
    let text = to_pretty(&o.json);
    print!("{text}");
    if let (Some(path), false) = (&cli.out, matches!(cli.command, Command::Enumerate { .. })) {
        write(path, &text)?;
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn cmd_enumerate(cli: &Cli, candidates: bool) -> Result<Outcome> {
    let tol = cli.tolerance.unwrap_or(physics::IDENTITY_TOL);
    let summary = catalog::summary();
    let group = catalog::automorphism_group_check();
    eprintln!("{}", group.summary_line());

    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let tables = catalog::equivalent_tables();
    let defects: Vec<f64> = tables
        .iter()
        .map(|t| catalog::norm_composition_defect(t, COMPOSITION_PAIRS, &mut rng))
        .collect();
    let composition_ok = defects.iter().all(|&d| d <= tol);

    let mut doc = json!({
        "count": summary.count,
        "parity_vectors": summary.parity_vectors,
        "chirality_classes": summary.chirality_classes,
        "group_table": summary.group_table,
        "group_check": group.status(),
        "norm_composition": {"seed": cli.seed, "pairs": COMPOSITION_PAIRS, "tolerance": tol, "max_defect": defects},
    });
    let candidate_list: Vec<_> = catalog::enumerate_candidates()
        .iter()
        .enumerate()
        .map(|(v, t)| {
            let pv = catalog::ParityVector::from_value(v as u8).expect("below 128");
            json!({"value": v, "parity": pv.to_string(), "alternative": catalog::is_alternative(t)})
        })
        .collect();
    if candidates {
        doc["candidates"] = json!(candidate_list);
    }

    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        for (n, t) in tables.iter().enumerate() {
            write(&dir.join(format!("table_{n:02}.txt")), &t.to_text())?;
        }
        write(&dir.join("summary.json"), &to_pretty(&doc))?;
        if candidates {
            write(&dir.join("candidates.json"), &to_pretty(&candidate_list))?;
        }
    }
    let passed = summary.count == catalog::EQUIVALENT_COUNT && group.ok() && composition_ok;
    Ok(Outcome { json: doc, passed })
}

fn derivation_suite(table: &Arc<StructureTable>, tol: f64) -> Result<VerificationReport> {
    let d = derivations::derivation_report(table)?;
    let mut r = VerificationReport::new("derivations", tol).for_table(table.id());
    r.check_bool(&[0], d.der_dim == 14, format!("der_dim = {}", d.der_dim));
    for (k, &s) in d.stabilizer_dims.iter().enumerate() {
        r.check_bool(&[k as i64 + 1], s == 8, format!("stabilizer dim of i{} = {s}", k + 1));
    }
    r.check(&[-1], d.closure_residual, "lie closure residual", "0");
    r.detail("report", &d);
    Ok(r)
}

fn leibniz_suite(table: &Arc<StructureTable>, seed: u64, tol: f64) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Result<Element> {
        let c: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Element::new(table, &c)
    };
    let (u, v) = (draw()?, draw()?);
    let d = derivations::derivation(&u, &v)?;
    Ok(derivations::verify_leibniz(&d, LEIBNIZ_SAMPLES, seed, tol))
}

fn run_suite(suite: Suite, table: &Arc<StructureTable>, seed: u64, tol: f64) -> Result<VerificationReport> {
    match suite {
        Suite::Pauli => Ok(physics::verify_pauli(tol)),
        Suite::Fano => {
            let mut r = catalog::automorphism_group_check();
            r.tolerance = tol;
            Ok(r)
        }
        Suite::Lorentz => Ok(physics::verify_lorentz(&physics::build_generators(table)?, tol)),
        Suite::Associator => Ok(physics::verify_r_associator(&physics::build_generators(table)?, tol)),
        Suite::Spin => Ok(physics::verify_spin_from_r(&physics::build_generators(table)?, tol)),
        Suite::FourTuple => physics::verify_four_tuple(table, tol),
        Suite::Derivations => derivation_suite(table, tol),
        Suite::Leibniz => leibniz_suite(table, seed, tol),
    }
}

fn cmd_verify(cli: &Cli, suite: Option<Suite>, table: Option<&str>) -> Result<Outcome> {
    let tables = match table {
        Some(id) => vec![catalog::table_by_id(id)?],
        None => catalog::equivalent_tables(),
    };
    let suites: Vec<Suite> = suite.map(|s| vec![s]).unwrap_or_else(|| Suite::ALL.to_vec());
    let mut reports = Vec::new();
    for s in suites {
        let tol = cli.tolerance.unwrap_or(s.default_tolerance());
        let targets: &[Arc<StructureTable>] = if s.per_table() { &tables } else { &tables[..1] };
        for t in targets {
            let r = run_suite(s, t, cli.seed, tol)?;
            eprintln!("{}", r.summary_line());
            reports.push(r);
        }
    }
    let status = if reports.iter().any(|r| r.status() == Status::Fail) {
        Status::Fail
    } else if reports.iter().any(|r| r.status() == Status::Warn) {
        Status::Warn
    } else {
        Status::Pass
    };
    Ok(Outcome {
        json: json!({"status": status, "seed": cli.seed, "reports": reports}),
        passed: status != Status::Fail,
    })
}

fn cmd_solve(cli: &Cli, config: &Path) -> Result<Outcome> {
    let cfg = WaveConfig::from_json(&read(config)?)?;
    let result = cfg.solve()?;
    let tol = cli.tolerance.unwrap_or(invariance::FD_TOL);
    let passed = result.residual_fd <= tol
        && result.residual_analytic <= tol
        && result.reconstruction_residual <= transforms::RECONSTRUCTION_TOL;
    eprintln!(
        "{} d̃ = {} fd residual {:.3e} class {:?}",
        if passed { "PASS" } else { "FAIL" },
        result.d_tilde,
        result.residual_fd,
        result.symmetry_class
    );
    Ok(Outcome { json: serde_json::to_value(&result).expect("serializable"), passed })
}

fn cmd_invariance(cli: &Cli, config: &Path) -> Result<Outcome> {
    let cfg = InvarianceConfig::from_json(&read(config)?)?;
    let report = cfg.run()?;
    let passed = report.invariant && cli.tolerance.is_none_or(|t| report.spread <= t);
    eprintln!(
        "{} invariance: spread {:.3e}, witness {:?}",
        if passed { "PASS" } else { "FAIL" },
        report.spread,
        report.witness
    );
    Ok(Outcome { json: serde_json::to_value(&report).expect("serializable"), passed })
}
