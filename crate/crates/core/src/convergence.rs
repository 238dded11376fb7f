//! Convergence sweeps of the discrete dual against a reference, log-log slope
//! fits, and the cusp-localization experiment.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::discrete_dual::{assemble, connector_gap, u_curve_through, DiscreteDualHypersurface, Scheme};
use crate::error::{CfhError, Result};
use crate::invariants::{detect_degenerate, DegeneratePoint};
use crate::lattice::{build_lattice, estimate_bound_constants, Axis, BoundConstants, Domain, Lattice, V4};
use crate::reference_dual::{reference_dual_lattice, simpson_error_estimate};
use crate::samplers::CatalogueEntry;

/// What the discrete dual is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// The entry's closed-form dual.
    Exact,
    /// Composite Simpson quadrature of the dual one-form with `m` substeps per edge.
    Quadrature { m: usize },
}

/// Least-squares line through `(log n, log err)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval of the slope.
    pub ci95: [f64; 2],
    pub stderr: f64,
    /// Some errors were exactly zero and were replaced by `f64::EPSILON`.
    pub floored: bool,
}

/// Fit `log err = intercept + slope · log n`.
///
/// Needs at least three points. Exact zeros are floored to machine epsilon and
/// flagged; negative or non-finite errors are rejected.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(CfhError::InvalidParameter(format!("fit_slope needs ≥ 3 points (got {})", points.len())));
    }
    let mut floored = false;
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for (i, &(n, e)) in points.iter().enumerate() {
        if !(n > 0.0) || !(e >= 0.0) || !e.is_finite() {
            return Err(CfhError::NonPositiveError(i));
        }
        let e = if e == 0.0 {
            floored = true;
            f64::EPSILON
        } else {
            e
        };
        xs.push(n.ln());
        ys.push(e.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(CfhError::InvalidParameter("fit_slope needs at least two distinct n".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = m - 2.0;
    let stderr = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| CfhError::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(SlopeFit { slope, intercept, ci95: [slope - t * stderr, slope + t * stderr], stderr, floored })
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub delta: f64,
    /// Sup over all lattice nodes of the gauged error (whole-lattice bound applies).
    pub sup_error: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// Sup over slices of the per-slice gauged error (slice bound applies).
    pub slice_error: f64,
    pub slice_bound: f64,
    pub slice_satisfied: bool,
    /// Sup over connector edges of the distance between the node difference
    /// and the forward parallel segment.
    pub connector_residual: f64,
    /// Slope fitted through this row and all earlier ones (from the third row on).
    pub slope_running: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub entry: String,
    pub scheme: Scheme,
    pub reference: ReferenceKind,
    /// Richardson estimate of the reference quadrature error at the finest n (0 for exact references).
    pub reference_error_estimate: f64,
    /// The reference error estimate is below 1% of the smallest sup error in the sweep.
    pub reference_within_budget: bool,
    pub constants: BoundConstants,
    pub rows: Vec<SweepRow>,
    pub slope: SlopeFit,
    pub connector_slope: SlopeFit,
}

impl ConvergenceReport {
    pub fn all_satisfied(&self) -> bool {
        self.rows.iter().all(|r| r.satisfied && r.slice_satisfied)
    }

    /// CSV table with columns `n,delta,sup_error,bound,satisfied,slope_running`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "n,delta,sup_error,bound,satisfied,slope_running")?;
        for r in &self.rows {
            let running = r.slope_running.map(|s| format!("{s:e}")).unwrap_or_default();
            writeln!(w, "{},{:e},{:e},{:e},{},{}", r.n, r.delta, r.sup_error, r.bound, r.satisfied, running)?;
        }
        Ok(())
    }
}

/// Gauged reference values on every node of `lattice`, zero at the base node.
pub fn reference_values(entry: &CatalogueEntry, lattice: &Lattice, reference: ReferenceKind) -> Result<Vec<V4>> {
    match reference {
        ReferenceKind::Quadrature { m } => Ok(reference_dual_lattice(entry, lattice, m)?.values),
        ReferenceKind::Exact => {
            let exact = entry
                .exact_dual
                .clone()
                .ok_or_else(|| CfhError::Unsupported(format!("no closed-form dual for `{}`", entry.name)))?;
            let np = lattice.n + 1;
            let base = exact(lattice.node(0, 0, 0));
            let mut out = vec![V4::zeros(); lattice.node_count()];
            out.par_chunks_mut(np * np).enumerate().for_each(|(k, chunk)| {
                for j in 0..np {
                    for i in 0..np {
                        chunk[j * np + i] = exact(lattice.node(i, j, k)) - base;
                    }
                }
            });
            Ok(out)
        }
    }
}

/// Whole-lattice and per-slice sup errors of `hs` against gauged reference values.
pub fn gauged_errors(hs: &DiscreteDualHypersurface, reference: &[V4]) -> (f64, f64) {
    let lat = &hs.lattice;
    let np = lat.n + 1;
    let base = hs.get(0, 0, 0);
    (0..np)
        .into_par_iter()
        .map(|k| {
            let slice_base = hs.get(0, 0, k);
            let ref_slice_base = reference[lat.index(0, 0, k)];
            let mut whole: f64 = 0.0;
            let mut slice: f64 = 0.0;
            for j in 0..np {
                for i in 0..np {
                    let idx = lat.index(i, j, k);
                    let v = hs.values[idx];
                    whole = whole.max(((v - base) - reference[idx]).norm());
                    slice = slice.max(((v - slice_base) - (reference[idx] - ref_slice_base)).norm());
                }
            }
            (whole, slice)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

/// Connector edges of a scheme's slices: y-edges for `xbar`, x-edges for `yunder`.
pub fn slice_connector_axis(scheme: Scheme) -> Axis {
    match scheme {
        Scheme::XBar => Axis::Y,
        Scheme::YUnder => Axis::X,
    }
}

/// Fraction of the smallest construction error the reference quadrature error may reach.
pub const REFERENCE_BUDGET: f64 = 0.01;

/// Run the discrete dual for every `n` in `n_list` and compare with the reference.
pub fn sweep(
    entry: &CatalogueEntry,
    domain: &Domain,
    scheme: Scheme,
    n_list: &[usize],
    reference: ReferenceKind,
    constants: &BoundConstants,
) -> Result<ConvergenceReport> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CfhError::InvalidParameter(format!("n_list must be increasing with ≥ 3 values (got {n_list:?})")));
    }
    let rows: Vec<Result<SweepRow>> = n_list
        .par_iter()
        .map(|&n| {
            let lattice = build_lattice(*domain, n)?;
            let hs = assemble(entry, &lattice, scheme)?;
            let refv = reference_values(entry, &lattice, reference)?;
            let (sup_error, slice_error) = gauged_errors(&hs, &refv);
            let bound = constants.lattice_bound(n);
            let slice_bound = constants.slice_bound(n);
            Ok(SweepRow {
                n,
                delta: lattice.delta,
                sup_error,
                bound,
                satisfied: sup_error <= bound,
                slice_error,
                slice_bound,
                slice_satisfied: slice_error <= slice_bound,
                connector_residual: connector_gap(entry, &hs, slice_connector_axis(scheme)),
                slope_running: None,
            })
        })
        .collect();
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    for r in 2..rows.len() {
        let pts: Vec<(f64, f64)> = rows[..=r].iter().map(|row| (row.n as f64, row.sup_error)).collect();
        rows[r].slope_running = Some(fit_slope(&pts)?.slope);
    }
    let slope = fit_slope(&rows.iter().map(|r| (r.n as f64, r.sup_error)).collect::<Vec<_>>())?;
    let connector_slope = fit_slope(&rows.iter().map(|r| (r.n as f64, r.connector_residual)).collect::<Vec<_>>())?;
    let reference_error_estimate = match reference {
        ReferenceKind::Exact => 0.0,
        ReferenceKind::Quadrature { m } => {
            let finest = build_lattice(*domain, *n_list.last().unwrap())?;
            simpson_error_estimate(entry, &finest, m)
        }
    };
    let smallest = rows.iter().map(|r| r.sup_error).fold(f64::INFINITY, f64::min);
    Ok(ConvergenceReport {
        entry: entry.name.clone(),
        scheme,
        reference,
        reference_error_estimate,
        reference_within_budget: reference_error_estimate < REFERENCE_BUDGET * smallest,
        constants: *constants,
        rows,
        slope,
        connector_slope,
    })
}

/// [`sweep`] with constants estimated on `domain` at the default grid and the given safety factor.
pub fn sweep_with_safety(
    entry: &CatalogueEntry,
    domain: &Domain,
    scheme: Scheme,
    n_list: &[usize],
    reference: ReferenceKind,
    safety: f64,
) -> Result<ConvergenceReport> {
    let constants = estimate_bound_constants(entry, domain, crate::lattice::DEFAULT_GRID_M, safety)?;
    sweep(entry, domain, scheme, n_list, reference, &constants)
}

/// Outcome of the cusp-localization experiment on one x-line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspReport {
    pub entry: String,
    pub n: usize,
    pub delta: f64,
    /// Bisection root of σ₁ on the x-line.
    pub root: [f64; 3],
    pub transversal: bool,
    pub derivative: f64,
    /// Normalized dot product of the two polyline chords straddling the reversal.
    pub tangent_dot: f64,
    /// Zero of the linearly interpolated signed chord speed, chords attributed to their anchors.
    pub reversal_x: f64,
    /// Midpoint of the shortest chord.
    pub speed_min_x: f64,
    pub localization_error: f64,
    pub within_2delta: bool,
}

/// The transversal σ₁ root on an x-line of `domain` closest to the domain centre.
pub fn find_cusp_root(entry: &CatalogueEntry, domain: &Domain, grid: usize) -> Result<DegeneratePoint> {
    let centre = domain.at([0.5; 3]);
    let dist = |d: &DegeneratePoint| (0..3).map(|a| (d.point[a] - centre[a]).powi(2)).sum::<f64>();
    detect_degenerate(entry, domain, grid)
        .into_iter()
        .filter(|d| d.axis == Axis::X && d.transversal)
        .min_by(|a, b| dist(a).total_cmp(&dist(b)))
        .ok_or(CfhError::NoDegeneratePoint)
}

/// Build the discrete dual x-curve through a transversal σ₁ root and locate the
/// direction reversal of its polyline.
pub fn cusp_experiment(entry: &CatalogueEntry, domain: &Domain, n: usize, scan_grid: usize) -> Result<CuspReport> {
    let root = find_cusp_root(entry, domain, scan_grid)?;
    cusp_experiment_at(entry, domain, n, &root)
}

/// [`cusp_experiment`] on a given root.
pub fn cusp_experiment_at(entry: &CatalogueEntry, domain: &Domain, n: usize, root: &DegeneratePoint) -> Result<CuspReport> {
    let lattice = build_lattice(*domain, n)?;
    let [xr, y, z] = root.point;
    let curve = u_curve_through(entry, &lattice, y, z, 1);
    let chords: Vec<V4> = curve.values.windows(2).map(|w| w[1] - w[0]).collect();
    // Signed chord speed: the chord projected on the tangent of f, per unit length.
    let speeds: Vec<f64> = (0..n)
        .map(|c| {
            let (x0, x1) = (curve.params[c], curve.params[c + 1]);
            let fx = entry.sample_at([0.5 * (x0 + x1), y, z]).f_x();
            chords[c].dot(&fx) / (fx.norm() * (x1 - x0))
        })
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for c in 0..n.saturating_sub(1) {
        let (s0, s1) = (speeds[c], speeds[c + 1]);
        if s0 == 0.0 || s0.signum() != s1.signum() {
            let (x0, x1) = (curve.params[c], curve.params[c + 1]);
            let x = if s0 == s1 { x0 } else { x0 + (x1 - x0) * s0 / (s0 - s1) };
            let dot = chords[c].dot(&chords[c + 1]) / (chords[c].norm() * chords[c + 1].norm());
            if best.map_or(true, |(bx, _)| (x - xr).abs() < (bx - xr).abs()) {
                best = Some((x, dot));
            }
        }
    }
    let (reversal_x, tangent_dot) = best.ok_or(CfhError::NoDegeneratePoint)?;
    let cmin = (0..n)
        .min_by(|&a, &b| chords[a].norm().partial_cmp(&chords[b].norm()).unwrap())
        .unwrap_or(0);
    let speed_min_x = 0.5 * (curve.params[cmin] + curve.params[cmin + 1]);
    let localization_error = (reversal_x - xr).abs();
    Ok(CuspReport {
        entry: entry.name.clone(),
        n,
        delta: lattice.delta,
        root: root.point,
        transversal: root.transversal,
        derivative: root.derivative,
        tangent_dot,
        reversal_x,
        speed_min_x,
        localization_error,
        within_2delta: localization_error <= 2.0 * lattice.delta,
    })
}
