//! Run settings: command-line flags, optionally overridden by a JSON config file.

use std::path::{Path, PathBuf};

use cfh_core::convergence::ReferenceKind;
use cfh_core::discrete_dual::Scheme;
use cfh_core::export::Projection;
use cfh_core::samplers::{catalogue_entry, default_domain, INVERSION_CENTER};
use cfh_core::{build_domain, CatalogueEntry, Domain};
use clap::Args;
use serde::Deserialize;

/// Flags shared by all subcommands.
#[derive(Args, Debug, Default, Clone)]
pub struct Opts {
    /// Catalogue entry name.
    #[arg(long)]
    pub entry: Option<String>,
    /// Entry parameters as a JSON object.
    #[arg(long)]
    pub params: Option<String>,
    /// Cube bounds `x0,xe,y0,ye,z0,ze`.
    #[arg(long)]
    pub domain: Option<String>,
    /// Lattice subdivisions; a comma-separated increasing list for `sweep`.
    #[arg(long)]
    pub n: Option<String>,
    /// `xbar` or `yunder` (`dualize` also accepts `reference`).
    #[arg(long)]
    pub scheme: Option<String>,
    /// Simpson substeps per lattice edge for reference duals.
    #[arg(long)]
    pub m_ref: Option<usize>,
    /// Inflation factor for the estimated bound constants.
    #[arg(long)]
    pub safety: Option<f64>,
    /// Residual tolerance for `validate` and `verify`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Reference for `sweep`: `exact` or `quadrature`.
    #[arg(long)]
    pub reference: Option<String>,
    /// Inversion centre `x,y,z,w` for the inversion checks of `verify`.
    #[arg(long)]
    pub twin_center: Option<String>,
    /// Lines per axis when scanning for σ₁ roots in `cusp`.
    #[arg(long)]
    pub scan_grid: Option<usize>,
    /// Samples per lattice cell for exported polylines.
    #[arg(long)]
    pub subsamples: Option<usize>,
    /// `drop_w` or `stereographic`.
    #[arg(long)]
    pub projection: Option<String>,
    /// `obj` or `ply`.
    #[arg(long)]
    pub format: Option<String>,
    /// Slice indices `k` to export: `all` or a comma-separated list.
    #[arg(long)]
    pub slices: Option<String>,
    /// Primary output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path for `sweep`.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Directory for per-slice OBJ files written by `dualize`.
    #[arg(long)]
    pub obj_dir: Option<PathBuf>,
    /// JSON config file; its keys override the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// JSON config file contents.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub entry: Option<String>,
    pub params: Option<serde_json::Value>,
    pub domain: Option<[f64; 6]>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub scheme: Option<String>,
    pub m_ref: Option<usize>,
    pub safety: Option<f64>,
    pub tol: Option<f64>,
    pub reference: Option<String>,
    pub twin_center: Option<[f64; 4]>,
    pub scan_grid: Option<usize>,
    pub subsamples: Option<usize>,
    pub projection: Option<String>,
    pub format: Option<String>,
    pub slices: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub json_out: Option<PathBuf>,
    pub obj_dir: Option<PathBuf>,
}

pub fn read_config(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

/// Which lattice scheme `dualize` should run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualizeKind {
    Discrete(Scheme),
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

/// Fully resolved settings.
pub struct Settings {
    pub entry: CatalogueEntry,
    pub domain: Domain,
    pub n_list: Vec<usize>,
    pub scheme: DualizeKind,
    pub m_ref: usize,
    pub safety: f64,
    pub tol: f64,
    pub reference: ReferenceKind,
    pub twin_center: [f64; 4],
    pub scan_grid: usize,
    pub subsamples: usize,
    pub projection: Projection,
    pub format: MeshFormat,
    pub slices: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub json_out: Option<PathBuf>,
    pub obj_dir: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| format!("invalid {what} `{s}`")))
        .collect()
}

fn fixed<const N: usize>(s: &str, what: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = parse_list(s, what)?;
    v.try_into().map_err(|_| format!("{what} needs {N} comma-separated numbers (got `{s}`)"))
}

/// Merge flags and config (config wins) and apply defaults.
pub fn resolve(opts: &Opts, default_entry: &str) -> Result<Settings, String> {
    let cfg = match &opts.config {
        Some(p) => read_config(p)?,
        None => RunConfig::default(),
    };
    let entry_name = cfg.entry.clone().or(opts.entry.clone()).unwrap_or_else(|| default_entry.to_string());
    let params = match (&cfg.params, &opts.params) {
        (Some(v), _) => Some(v.clone()),
        (None, Some(s)) => Some(serde_json::from_str(s).map_err(|e| format!("invalid --params JSON: {e}"))?),
        (None, None) => None,
    };
    let entry = catalogue_entry(&entry_name, params.as_ref()).map_err(|e| e.to_string())?;
    let domain = match (cfg.domain, &opts.domain) {
        (Some(d), _) => Some(d),
        (None, Some(s)) => Some(fixed::<6>(s, "domain")?),
        (None, None) => None,
    };
    let domain = match domain {
        Some(d) => build_domain(d[0], d[1], d[2], d[3], d[4], d[5]).map_err(|e| e.to_string())?,
        None => default_domain(),
    };
    let n_list = match (cfg.n_list, cfg.n, &opts.n) {
        (Some(l), _, _) => l,
        (None, Some(n), _) => vec![n],
        (None, None, Some(s)) => parse_list(s, "n")?,
        (None, None, None) => Vec::new(),
    };
    let scheme = match cfg.scheme.as_deref().or(opts.scheme.as_deref()).unwrap_or("xbar") {
        "reference" => DualizeKind::Reference,
        s => DualizeKind::Discrete(s.parse()?),
    };
    let reference = match cfg.reference.as_deref().or(opts.reference.as_deref()) {
        Some("exact") => ReferenceKind::Exact,
        Some("quadrature") => ReferenceKind::Quadrature { m: 0 },
        Some(other) => return Err(format!("unknown reference `{other}` (expected exact or quadrature)")),
        None if entry.exact_dual.is_some() => ReferenceKind::Exact,
        None => ReferenceKind::Quadrature { m: 0 },
    };
    let m_ref = cfg.m_ref.or(opts.m_ref).unwrap_or(16);
    let reference = match reference {
        ReferenceKind::Quadrature { .. } => ReferenceKind::Quadrature { m: m_ref },
        r => r,
    };
    let twin_center = match (cfg.twin_center, &opts.twin_center) {
        (Some(c), _) => c,
        (None, Some(s)) => fixed::<4>(s, "twin center")?,
        (None, None) => INVERSION_CENTER,
    };
    let projection = cfg.projection.as_deref().or(opts.projection.as_deref()).unwrap_or("drop_w").parse()?;
    let format = match cfg.format.as_deref().or(opts.format.as_deref()).unwrap_or("obj") {
        "obj" => MeshFormat::Obj,
        "ply" => MeshFormat::Ply,
        other => return Err(format!("unknown format `{other}` (expected obj or ply)")),
    };
    let slices = match (cfg.slices, opts.slices.as_deref()) {
        (Some(s), _) => Some(s),
        (None, Some("all")) | (None, None) => None,
        (None, Some(s)) => Some(parse_list(s, "slices")?),
    };
    Ok(Settings {
        entry,
        domain,
        n_list,
        scheme,
        m_ref,
        safety: cfg.safety.or(opts.safety).unwrap_or(cfh_core::lattice::DEFAULT_SAFETY),
        tol: cfg.tol.or(opts.tol).unwrap_or(1e-6),
        reference,
        twin_center,
        scan_grid: cfg.scan_grid.or(opts.scan_grid).unwrap_or(17),
        subsamples: cfg.subsamples.or(opts.subsamples).unwrap_or(8),
        projection,
        format,
        slices,
        out: cfg.out.or(opts.out.clone()),
        json_out: cfg.json_out.or(opts.json.clone()),
        obj_dir: cfg.obj_dir.or(opts.obj_dir.clone()),
    })
}
