//! `cfh`: catalogue listing, validation, dualization, convergence sweeps and
//! mesh export for dual conformally flat hypersurfaces.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use cfh_core::convergence::{cusp_experiment, sweep_with_safety};
use cfh_core::discrete_dual::assemble;
use cfh_core::export::{project_polylines, slice_polylines, write_obj, write_ply};
use cfh_core::invariants::identity_residuals;
use cfh_core::reference_dual::reference_dual_lattice;
use cfh_core::samplers::{catalogue_entry, catalogue_schema, default_h_list, validate_entry, CATALOGUE_NAMES};
use cfh_core::{build_lattice, CfhError, V4};
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{resolve, DualizeKind, MeshFormat, Opts, Settings};

#[derive(Parser)]
#[command(name = "cfh", version, about = "Discrete duals of conformally flat hypersurfaces in R^4")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List catalogue entries and their parameter schemas.
    Catalogue,
    /// Check the structure equations of an entry by finite differences.
    Validate(Opts),
    /// Compute the dual on a lattice (reference quadrature or a discrete scheme).
    Dualize(Opts),
    /// Check the dual-side identities and inversion invariance.
    Verify(Opts),
    /// Convergence sweep of a discrete scheme against a reference dual.
    Sweep(Opts),
    /// Locate the direction reversal of a discrete dual curve at a σ₁ zero.
    Cusp(Opts),
    /// Export slice polylines of a discrete dual as OBJ or PLY.
    Export(Opts),
}

/// Failure of a command: a verification verdict or a usage/configuration error.
enum Failure {
    Verification(String),
    Usage(String),
}

impl From<CfhError> for Failure {
    fn from(e: CfhError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(format!("serialization error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Cap the worker pool at `CFH_THREADS` when it is set.
fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("CFH_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("CFH_THREADS must be a positive integer (got `{v}`)"))?;
    if n == 0 {
        return Err("CFH_THREADS must be a positive integer (got 0)".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure worker pool: {e}"))
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Catalogue => catalogue(),
        Command::Validate(o) => validate(&settings(&o, "pseudosphere-cylinder")?),
        Command::Dualize(o) => dualize(&settings(&o, "pseudosphere-cylinder")?),
        Command::Verify(o) => verify(&settings(&o, "pseudosphere-cylinder")?),
        Command::Sweep(o) => sweep(&settings(&o, "pseudosphere-cylinder")?),
        Command::Cusp(o) => cusp(&settings(&o, "cusp-pseudosphere")?),
        Command::Export(o) => export(&settings(&o, "pseudosphere-cylinder")?),
    }
}

fn settings(opts: &Opts, default_entry: &str) -> Result<Settings, Failure> {
    resolve(opts, default_entry).map_err(Failure::Usage)
}

/// Writer on `path`, or stdout when absent.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Outcome {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn single_n(s: &Settings) -> Result<usize, Failure> {
    match s.n_list.as_slice() {
        [] => Ok(16),
        [n] => Ok(*n),
        l => Err(Failure::Usage(format!("expected a single --n (got {l:?})"))),
    }
}

fn verdict(pass: bool, what: &str) -> Outcome {
    if pass {
        eprintln!("PASS: {what}");
        Ok(())
    } else {
        Err(Failure::Verification(format!("FAIL: {what}")))
    }
}

fn catalogue() -> Outcome {
    let entries: Vec<serde_json::Value> = CATALOGUE_NAMES
        .iter()
        .map(|name| {
            let e = catalogue_entry(name, None)?;
            Ok(serde_json::json!({
                "name": e.name,
                "structure_class": e.structure_class,
                "params": e.params,
                "validity": e.validity,
            }))
        })
        .collect::<Result<_, CfhError>>()?;
    write_json(&serde_json::json!({ "entries": entries, "schema": catalogue_schema() }), None)
}

fn validate(s: &Settings) -> Outcome {
    let report = validate_entry(&s.entry, &s.domain, &default_h_list(&s.domain), s.tol);
    write_json(&report, s.out.as_deref())?;
    verdict(report.all_pass(), &format!("structure equations of {}", s.entry.name))
}

fn dualize(s: &Settings) -> Outcome {
    let lattice = build_lattice(s.domain, single_n(s)?)?;
    match s.scheme {
        DualizeKind::Reference => write_json(&reference_dual_lattice(&s.entry, &lattice, s.m_ref)?, s.out.as_deref()),
        DualizeKind::Discrete(scheme) => {
            let hs = assemble(&s.entry, &lattice, scheme)?;
            write_json(&hs, s.out.as_deref())?;
            if let Some(dir) = &s.obj_dir {
                std::fs::create_dir_all(dir)?;
                for k in 0..=lattice.n {
                    let lines = slice_polylines(&s.entry, &hs, k, s.subsamples);
                    let projected = project_polylines(&lines, s.projection, lattice.domain.a);
                    let mut w = output(Some(&dir.join(format!("slice_{k:04}.obj"))))?;
                    write_obj(&projected, &mut w)?;
                    w.flush()?;
                }
            }
            Ok(())
        }
    }
}

fn verify(s: &Settings) -> Outcome {
    let n = if s.n_list.is_empty() { 8 } else { single_n(s)? };
    let lattice = build_lattice(s.domain, n)?;
    let field = reference_dual_lattice(&s.entry, &lattice, s.m_ref)?;
    let q = V4::from_column_slice(&s.twin_center);
    let report = identity_residuals(&s.entry, &field, &s.domain, &default_h_list(&s.domain), Some(q), s.tol)?;
    let pass = report.all_pass();
    let summary = if pass { "PASS" } else { "FAIL" };
    write_json(&serde_json::json!({ "summary": summary, "report": report }), s.out.as_deref())?;
    verdict(pass, &format!("dual identities of {}", s.entry.name))
}

fn sweep(s: &Settings) -> Outcome {
    let scheme = match s.scheme {
        DualizeKind::Discrete(sc) => sc,
        DualizeKind::Reference => return Err(Failure::Usage("sweep needs --scheme xbar or yunder".into())),
    };
    let n_list = if s.n_list.is_empty() { vec![8, 16, 32, 64] } else { s.n_list.clone() };
    let report = sweep_with_safety(&s.entry, &s.domain, scheme, &n_list, s.reference, s.safety)?;
    if !report.reference_within_budget {
        eprintln!(
            "warning: reference quadrature error estimate {:.2e} exceeds 1% of the smallest sup error; raise --m-ref",
            report.reference_error_estimate
        );
    }
    let mut w = output(s.out.as_deref())?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let json_path = s.json_out.clone().or_else(|| s.out.as_ref().map(|p| p.with_extension("json")));
    if let Some(p) = json_path {
        write_json(&report, Some(&p))?;
    }
    verdict(
        report.all_satisfied(),
        &format!("error bounds of {} ({}), fitted slope {:.3}", s.entry.name, scheme.name(), report.slope.slope),
    )
}

fn cusp(s: &Settings) -> Outcome {
    let n = if s.n_list.is_empty() { 64 } else { single_n(s)? };
    let report = cusp_experiment(&s.entry, &s.domain, n, s.scan_grid)?;
    write_json(&report, s.out.as_deref())?;
    verdict(
        report.within_2delta && report.tangent_dot < 0.0,
        &format!("direction reversal within 2δ of the σ₁ root (error {:.3e})", report.localization_error),
    )
}

fn export(s: &Settings) -> Outcome {
    let scheme = match s.scheme {
        DualizeKind::Discrete(sc) => sc,
        DualizeKind::Reference => return Err(Failure::Usage("export needs --scheme xbar or yunder".into())),
    };
    let lattice = build_lattice(s.domain, single_n(s)?)?;
    let slices = s.slices.clone().unwrap_or_else(|| (0..=lattice.n).collect());
    if let Some(&k) = slices.iter().find(|&&k| k > lattice.n) {
        return Err(Failure::Usage(format!("slice {k} outside 0..={}", lattice.n)));
    }
    let hs = assemble(&s.entry, &lattice, scheme)?;
    let lines: Vec<Vec<V4>> = slices
        .iter()
        .flat_map(|&k| slice_polylines(&s.entry, &hs, k, s.subsamples))
        .collect();
    let projected = project_polylines(&lines, s.projection, lattice.domain.a);
    let mut w = output(s.out.as_deref())?;
    match s.format {
        MeshFormat::Obj => write_obj(&projected, &mut w)?,
        MeshFormat::Ply => write_ply(&projected, &mut w)?,
    }
    w.flush()?;
    Ok(())
}
