//! Analytic hypersurface catalogue and the residual validation that each entry
//! really satisfies the structure equations of a generic conformally flat
//! hypersurface written in canonical curvature-line coordinates.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CfhError, Result};
use crate::lattice::{shift, Axis, Domain, FrameSample, V4};
use crate::numerics::{fd1_lin, fd1_scalar, loglog_slope, simpson};

/// Pointwise analytic data of a hypersurface in curvature-line coordinates.
pub trait Sampler: Send + Sync {
    fn sample(&self, x: f64, y: f64, z: f64) -> FrameSample;

    /// Closed-form gradients of `(κ₁, κ₂, κ₃)` (rows) when the entry knows them.
    fn kappa_gradients(&self, _x: f64, _y: f64, _z: f64) -> Option<[[f64; 3]; 3]> {
        None
    }
}

pub type DualFn = Arc<dyn Fn([f64; 3]) -> V4 + Send + Sync>;

/// Normal-form classes a hypersurface can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureClass {
    #[serde(rename = "A_mu0")]
    AMu0,
    #[serde(rename = "A_muz")]
    AMuZ,
    #[serde(rename = "B")]
    B,
    #[serde(rename = "C_mu0")]
    CMu0,
    #[serde(rename = "C_muz")]
    CMuZ,
    #[serde(rename = "Generic")]
    Generic,
}

/// A named analytic hypersurface.
#[derive(Clone)]
pub struct CatalogueEntry {
    pub name: String,
    pub structure_class: StructureClass,
    pub params: serde_json::Value,
    pub sampler: Arc<dyn Sampler>,
    pub exact_dual: Option<DualFn>,
    /// Chart box `[[x_lo, x_hi], [y_lo, y_hi], [z_lo, z_hi]]` on which the sampler is smooth.
    pub validity: [[f64; 2]; 3],
}

impl std::fmt::Debug for CatalogueEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogueEntry")
            .field("name", &self.name)
            .field("structure_class", &self.structure_class)
            .field("params", &self.params)
            .field("has_exact_dual", &self.exact_dual.is_some())
            .finish()
    }
}

impl CatalogueEntry {
    pub fn sample_at(&self, p: [f64; 3]) -> FrameSample {
        self.sampler.sample(p[0], p[1], p[2])
    }

    pub fn exact_dual_at(&self, p: [f64; 3]) -> Option<V4> {
        self.exact_dual.as_ref().map(|g| g(p))
    }

    /// `m` points per side spanning the validity box.
    pub fn validity_grid(&self, m: usize) -> Vec<[f64; 3]> {
        let v = self.validity;
        let mut out = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let s = |l: usize, r: [f64; 2]| r[0] + (r[1] - r[0]) * l as f64 / (m - 1) as f64;
                    out.push([s(i, v[0]), s(j, v[1]), s(k, v[2])]);
                }
            }
        }
        out
    }

    fn validity_scale(&self) -> f64 {
        self.validity.iter().map(|r| r[1] - r[0]).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Pseudosphere cylinder
// ---------------------------------------------------------------------------

/// Tractrix pseudosphere crossed with a line, scaled by the constant `P`.
struct PseudosphereCylinder {
    p: f64,
}

impl Sampler for PseudosphereCylinder {
    fn sample(&self, u: f64, v: f64, z: f64) -> FrameSample {
        let (sech, tanh) = (1.0 / u.cosh(), u.tanh());
        let (c, s) = (v.cos(), v.sin());
        let p = self.p;
        FrameSample {
            f: V4::new(p * sech * c, p * sech * s, p * (u - tanh), p * z),
            x_alpha: V4::new(-sech * c, -sech * s, tanh, 0.0),
            x_beta: V4::new(-s, c, 0.0, 0.0),
            x_gamma: V4::new(0.0, 0.0, 0.0, 1.0),
            n: V4::new(tanh * c, tanh * s, sech, 0.0),
            p,
            phi: sech.atan2(tanh),
            kappa3: 0.0,
            phi_grad: [-sech, 0.0, 0.0],
            p_inv_grad: [0.0, 0.0, 0.0],
        }
    }

    fn kappa_gradients(&self, u: f64, _v: f64, _z: f64) -> Option<[[f64; 3]; 3]> {
        let k1_u = -1.0 / (u.sinh() * u.tanh()) / self.p;
        let k2_u = -u.cosh() / self.p;
        Some([[k1_u, 0.0, 0.0], [k2_u, 0.0, 0.0], [0.0; 3]])
    }
}

/// The tractrix pseudosphere crossed with a line,
/// `f(u,v,z) = P·(sech u cos v, sech u sin v, u − tanh u, z)`.
///
/// With `P = 1` (the catalogue default) the chart is canonical; a different
/// constant is a uniform scaling, which keeps the chart canonical.
pub fn pseudosphere_cylinder(
    p_const: f64,
    u_window: [f64; 2],
    v_window: [f64; 2],
    z_window: [f64; 2],
) -> Result<CatalogueEntry> {
    if !(p_const > 0.0) || !p_const.is_finite() {
        return Err(CfhError::InvalidParameter(format!("P_const must be positive (got {p_const})")));
    }
    if !(u_window[0] > 0.0) || !(u_window[1] > u_window[0]) {
        return Err(CfhError::InvalidWindow(format!(
            "u window {u_window:?} must lie in (0, ∞) and be nonempty"
        )));
    }
    for (name, w) in [("v", v_window), ("z", z_window)] {
        if !(w[1] > w[0]) {
            return Err(CfhError::InvalidWindow(format!("{name} window {w:?} is empty")));
        }
    }
    let p = p_const;
    let dual: DualFn = Arc::new(move |q: [f64; 3]| {
        let (u, v, z) = (q[0], q[1], q[2]);
        let sech = 1.0 / u.cosh();
        V4::new(-sech * v.cos(), -sech * v.sin(), -(u - u.tanh()), z) * (0.5 / p)
    });
    Ok(CatalogueEntry {
        name: "pseudosphere-cylinder".into(),
        structure_class: StructureClass::AMu0,
        params: json!({ "p_const": p_const, "u_window": u_window, "v_window": v_window, "z_window": z_window }),
        sampler: Arc::new(PseudosphereCylinder { p }),
        exact_dual: Some(dual),
        validity: [u_window, v_window, z_window],
    })
}

/// Pseudosphere cylinder with `P = 1` on a generous window around the test cube.
pub fn default_pseudosphere() -> CatalogueEntry {
    pseudosphere_cylinder(1.0, [0.25, 2.0], [-1.0, 2.0], [-1.0, 2.0]).expect("valid default window")
}

/// The unit test cube `[0.5, 1.5] × [0, 1] × [0, 1]` inside the default pseudosphere chart.
pub fn default_domain() -> Domain {
    crate::lattice::build_domain(0.5, 1.5, 0.0, 1.0, 0.0, 1.0).expect("unit cube")
}

/// Inversion centre of the `inverted-pseudosphere` entry; `det S` keeps one sign on the test cube.
pub const INVERSION_CENTER: [f64; 4] = [0.5, 0.5, 0.5, 3.0];

/// Chart point at which the `cusp-pseudosphere` entry has a transversal zero of σ₁.
pub const CUSP_POINT: [f64; 3] = [0.9123, 0.5, 0.5];

/// The default pseudosphere inverted in the sphere around [`INVERSION_CENTER`].
pub fn inverted_pseudosphere() -> CatalogueEntry {
    catalogue_entry("inverted-pseudosphere", None).expect("centre away from the surface")
}

/// The default pseudosphere inverted so that σ₁ vanishes at [`CUSP_POINT`].
pub fn cusp_pseudosphere() -> CatalogueEntry {
    catalogue_entry("cusp-pseudosphere", None).expect("σ₁ root exists and centre away from the surface")
}

/// Names of the built-in entries.
pub const CATALOGUE_NAMES: [&str; 3] = ["pseudosphere-cylinder", "inverted-pseudosphere", "cusp-pseudosphere"];

/// Look up a built-in entry by name; `params` may override the pseudosphere
/// parameters `p_const`, `u_window`, `v_window`, `z_window`.
pub fn catalogue_entry(name: &str, params: Option<&serde_json::Value>) -> Result<CatalogueEntry> {
    let base = match params {
        None => default_pseudosphere(),
        Some(p) => pseudosphere_from_params(p)?,
    };
    match name {
        "pseudosphere-cylinder" => Ok(base),
        "inverted-pseudosphere" => {
            let mut e = invert_entry(&base, V4::from_column_slice(&INVERSION_CENTER))?;
            e.name = name.into();
            Ok(e)
        }
        "cusp-pseudosphere" => {
            let q = crate::invariants::cusp_inversion_center(&base, CUSP_POINT, false)?;
            let mut e = invert_entry(&base, q)?;
            e.name = name.into();
            e.params = json!({ "q": [q[0], q[1], q[2], q[3]], "cusp_point": CUSP_POINT, "base": base.params });
            Ok(e)
        }
        other => Err(CfhError::InvalidParameter(format!(
            "unknown entry `{other}` (known: {})",
            CATALOGUE_NAMES.join(", ")
        ))),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PseudosphereParams {
    #[serde(default = "one")]
    p_const: f64,
    #[serde(default = "default_u")]
    u_window: [f64; 2],
    #[serde(default = "default_vz")]
    v_window: [f64; 2],
    #[serde(default = "default_vz")]
    z_window: [f64; 2],
}

fn one() -> f64 {
    1.0
}

fn default_u() -> [f64; 2] {
    [0.25, 2.0]
}

fn default_vz() -> [f64; 2] {
    [-1.0, 2.0]
}

fn pseudosphere_from_params(p: &serde_json::Value) -> Result<CatalogueEntry> {
    let p: PseudosphereParams =
        serde_json::from_value(p.clone()).map_err(|e| CfhError::InvalidParameter(e.to_string()))?;
    pseudosphere_cylinder(p.p_const, p.u_window, p.v_window, p.z_window)
}

/// Parameter schema of the built-in entries, for listings.
pub fn catalogue_schema() -> serde_json::Value {
    json!({
        "pseudosphere-cylinder": {
            "structure_class": "A_mu0",
            "params": { "p_const": "positive number, default 1", "u_window": "[lo, hi] with 0 < lo < hi, default [0.25, 2]",
                        "v_window": "[lo, hi], default [-1, 2]", "z_window": "[lo, hi], default [-1, 2]" },
            "exact_dual": true
        },
        "inverted-pseudosphere": {
            "structure_class": "Generic",
            "params": "as pseudosphere-cylinder",
            "inversion_center": INVERSION_CENTER,
            "exact_dual": false
        },
        "cusp-pseudosphere": {
            "structure_class": "Generic",
            "params": "as pseudosphere-cylinder",
            "cusp_point": CUSP_POINT,
            "exact_dual": false
        }
    })
}

// ---------------------------------------------------------------------------
// Sphere inversion  x ↦ (x − q)/|x − q|²
// ---------------------------------------------------------------------------

struct Inverted {
    base: Arc<dyn Sampler>,
    q: V4,
}

impl Sampler for Inverted {
    fn sample(&self, x: f64, y: f64, z: f64) -> FrameSample {
        let s = self.base.sample(x, y, z);
        let d = s.f - self.q;
        let r2 = d.norm_squared();
        let reflect = |w: V4| w - d * (2.0 * w.dot(&d) / r2);
        let tangents = [s.f_x(), s.f_y(), s.f_z()];
        let pinv = s.p_inv();
        let mut p_inv_grad = [0.0; 3];
        for a in 0..3 {
            p_inv_grad[a] = 2.0 * d.dot(&tangents[a]) * pinv + r2 * s.p_inv_grad[a];
        }
        FrameSample {
            f: d / r2,
            x_alpha: reflect(s.x_alpha),
            x_beta: reflect(s.x_beta),
            x_gamma: reflect(s.x_gamma),
            n: reflect(s.n),
            p: s.p / r2,
            phi: s.phi,
            kappa3: r2 * s.kappa3 + 2.0 * s.n.dot(&d),
            phi_grad: s.phi_grad,
            p_inv_grad,
        }
    }
}

/// Compose an entry with the inversion `x ↦ (x − q)/|x − q|²`.
///
/// The distance from `q` to the surface is checked on a 17³ grid of the
/// entry's validity box.
///
/// Duals are translation-blind, so the recentring `+q` of the unit-sphere
/// inversion is omitted.
pub fn invert_entry(entry: &CatalogueEntry, q: V4) -> Result<CatalogueEntry> {
    let grid = entry.validity_grid(17);
    let min_dist = grid
        .par_iter()
        .map(|&p| (entry.sample_at(p).f - q).norm())
        .reduce(|| f64::INFINITY, f64::min);
    if min_dist < 1e-3 * entry.validity_scale() {
        return Err(CfhError::CenterTooClose(min_dist));
    }
    Ok(CatalogueEntry {
        name: format!("inverted({})", entry.name),
        structure_class: StructureClass::Generic,
        params: json!({ "q": [q[0], q[1], q[2], q[3]], "base": entry.params }),
        sampler: Arc::new(Inverted { base: entry.sampler.clone(), q }),
        exact_dual: None,
        validity: entry.validity,
    })
}

// ---------------------------------------------------------------------------
// Rigid motions
// ---------------------------------------------------------------------------

struct Moved {
    base: Arc<dyn Sampler>,
    r: Matrix4<f64>,
    t: V4,
}

impl Sampler for Moved {
    fn sample(&self, x: f64, y: f64, z: f64) -> FrameSample {
        let s = self.base.sample(x, y, z);
        FrameSample {
            f: self.r * s.f + self.t,
            x_alpha: self.r * s.x_alpha,
            x_beta: self.r * s.x_beta,
            x_gamma: self.r * s.x_gamma,
            n: self.r * s.n,
            ..s
        }
    }

    fn kappa_gradients(&self, x: f64, y: f64, z: f64) -> Option<[[f64; 3]; 3]> {
        self.base.kappa_gradients(x, y, z)
    }
}

/// Apply `x ↦ R x + t` with `R ∈ SO(4)`.
pub fn rigid_motion_entry(entry: &CatalogueEntry, rotation: Matrix4<f64>, translation: V4) -> Result<CatalogueEntry> {
    let defect = (rotation.transpose() * rotation - Matrix4::identity()).abs().max();
    let det_defect = (rotation.determinant() - 1.0).abs();
    if defect > 1e-12 || det_defect > 1e-12 {
        return Err(CfhError::NotOrthogonal(defect.max(det_defect)));
    }
    let exact_dual = entry.exact_dual.clone().map(|g| -> DualFn { Arc::new(move |p| rotation * g(p)) });
    Ok(CatalogueEntry {
        name: format!("moved({})", entry.name),
        structure_class: entry.structure_class,
        params: json!({
            "rotation": rotation.transpose().as_slice(),
            "translation": translation.as_slice(),
            "base": entry.params,
        }),
        sampler: Arc::new(Moved { base: entry.sampler.clone(), r: rotation, t: translation }),
        exact_dual,
        validity: entry.validity,
    })
}

// ---------------------------------------------------------------------------
// Chart swap x ↔ y (used for the scheme-symmetry check)
// ---------------------------------------------------------------------------

struct Swapped {
    base: Arc<dyn Sampler>,
}

impl Sampler for Swapped {
    fn sample(&self, x: f64, y: f64, z: f64) -> FrameSample {
        let s = self.base.sample(y, x, z);
        let mut phi = s.phi + FRAC_PI_2;
        if phi > PI {
            phi -= 2.0 * PI;
        }
        FrameSample {
            f: s.f,
            x_alpha: -s.x_beta,
            x_beta: s.x_alpha,
            x_gamma: s.x_gamma,
            n: s.n,
            p: s.p,
            phi,
            kappa3: s.kappa3,
            phi_grad: [s.phi_grad[1], s.phi_grad[0], s.phi_grad[2]],
            p_inv_grad: [s.p_inv_grad[1], s.p_inv_grad[0], s.p_inv_grad[2]],
        }
    }

    fn kappa_gradients(&self, x: f64, y: f64, z: f64) -> Option<[[f64; 3]; 3]> {
        self.base.kappa_gradients(y, x, z).map(|g| {
            let sw = |r: [f64; 3]| [r[1], r[0], r[2]];
            [sw(g[1]), sw(g[0]), sw(g[2])]
        })
    }
}

/// The same hypersurface with the first two chart coordinates exchanged
/// (`φ ↦ φ + π/2`, so κ₁ and κ₂ trade places).
pub fn swap_xy_entry(entry: &CatalogueEntry) -> CatalogueEntry {
    let exact_dual = entry
        .exact_dual
        .clone()
        .map(|g| -> DualFn { Arc::new(move |p: [f64; 3]| g([p[1], p[0], p[2]])) });
    let v = entry.validity;
    CatalogueEntry {
        name: format!("swapped({})", entry.name),
        structure_class: entry.structure_class,
        params: json!({ "swap_xy": true, "base": entry.params }),
        sampler: Arc::new(Swapped { base: entry.sampler.clone() }),
        exact_dual,
        validity: [v[1], v[0], v[2]],
    }
}

struct OffsetKappa3 {
    base: Arc<dyn Sampler>,
    offset: f64,
}

impl Sampler for OffsetKappa3 {
    fn sample(&self, x: f64, y: f64, z: f64) -> FrameSample {
        let mut s = self.base.sample(x, y, z);
        s.kappa3 += self.offset;
        s
    }
}

/// A deliberately inconsistent entry: κ₃ shifted by a constant. Useful to check
/// that validation detects broken data.
pub fn offset_kappa3_entry(entry: &CatalogueEntry, offset: f64) -> CatalogueEntry {
    CatalogueEntry {
        name: format!("kappa3-offset({})", entry.name),
        structure_class: StructureClass::Generic,
        params: json!({ "kappa3_offset": offset, "base": entry.params }),
        sampler: Arc::new(OffsetKappa3 { base: entry.sampler.clone(), offset }),
        exact_dual: None,
        validity: entry.validity,
    }
}

// ---------------------------------------------------------------------------
// Residual validation
// ---------------------------------------------------------------------------

/// Sup residual of one identity at each finite-difference step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    pub h: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares order of `residual ~ h^order`; `None` when a residual is exactly zero.
    pub order: Option<f64>,
    pub pass: bool,
}

impl IdentityResidual {
    pub fn from_series(name: &str, h: &[f64], residuals: Vec<f64>, tol: f64) -> Self {
        let order = if h.len() >= 2 && residuals.iter().all(|r| *r > 0.0 && r.is_finite()) {
            Some(loglog_slope(h, &residuals))
        } else {
            None
        };
        let last = *residuals.last().unwrap_or(&f64::INFINITY);
        let at_floor = residuals.iter().all(|r| *r <= NOISE_FLOOR);
        let pass = last.is_finite() && last <= tol && (at_floor || order.is_some_and(|o| o >= MIN_ORDER));
        IdentityResidual { name: name.to_string(), h: h.to_vec(), residuals, order, pass }
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub entry: String,
    pub tol: f64,
    pub identities: Vec<IdentityResidual>,
}

impl ResidualReport {
    pub fn all_pass(&self) -> bool {
        self.identities.iter().all(|r| r.pass)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityResidual> {
        self.identities.iter().find(|r| r.name == name)
    }
}

/// Residual level below which a series is rounding noise and no refinement order is required.
pub const NOISE_FLOOR: f64 = 1e-11;
/// Minimum observed refinement order of a finite-difference residual series.
pub const MIN_ORDER: f64 = 1.5;

/// Default finite-difference steps, as fractions of the cube side.
pub const DEFAULT_H_FRACTIONS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

pub fn default_h_list(domain: &Domain) -> Vec<f64> {
    DEFAULT_H_FRACTIONS.iter().map(|f| f * domain.a).collect()
}

/// Scalar fields derived from one sample.
pub(crate) mod fields {
    use crate::lattice::FrameSample;

    pub fn kappas(s: &FrameSample) -> [f64; 3] {
        let pinv = s.p_inv();
        let t = s.phi.tan();
        [pinv * t + s.kappa3, -pinv / t + s.kappa3, s.kappa3]
    }

    pub fn sigmas(s: &FrameSample) -> [f64; 3] {
        let [k1, k2, k3] = kappas(s);
        [
            0.5 * (k1 * k2 - k2 * k3 + k3 * k1),
            0.5 * (k1 * k2 + k2 * k3 - k3 * k1),
            0.5 * (-k1 * k2 + k2 * k3 + k3 * k1),
        ]
    }

    /// `K = −(P⁻¹)_z + κ₃φ_z`.
    pub fn k_inv(s: &FrameSample) -> f64 {
        -s.p_inv_grad[2] + s.kappa3 * s.phi_grad[2]
    }
}

/// Local probe that differentiates sample-derived fields at a point.
pub(crate) struct Probe<'a> {
    pub(crate) entry: &'a CatalogueEntry,
    pub(crate) p: [f64; 3],
    pub(crate) h: f64,
    pub(crate) m: usize,
}


impl Probe<'_> {
    pub(crate) fn at(&self, axis: Axis, t: f64) -> FrameSample {
        self.entry.sample_at(shift(self.p, axis, t))
    }

    pub(crate) fn d(&self, axis: Axis, g: impl Fn(&FrameSample) -> f64) -> f64 {
        fd1_scalar(|t| g(&self.at(axis, t)), self.h)
    }

    pub(crate) fn dv(&self, axis: Axis, g: impl Fn(&FrameSample) -> V4) -> V4 {
        fd1_lin(|t| g(&self.at(axis, t)), self.h)
    }

    /// Increment of the dual from the probe point to `p + t e_axis`, by quadrature.
    pub(crate) fn dual_increment(&self, axis: Axis, t: f64) -> V4 {
        if t == 0.0 {
            return V4::zeros();
        }
        simpson(
            |s| {
                let smp = self.at(axis, s);
                smp.tangent(axis) * fields::sigmas(&smp)[axis.index()]
            },
            t,
            self.m,
        )
    }

    /// Derivative along `axis` of `f* + c(sample)`, where `f*` increments come from quadrature.
    pub(crate) fn d_with_dual(&self, axis: Axis, g: impl Fn(&FrameSample) -> V4) -> V4 {
        fd1_lin(|t| self.dual_increment(axis, t) + g(&self.at(axis, t)), self.h)
    }
}

type PointResidual = dyn Fn(&Probe) -> f64 + Sync;

fn structure_identities() -> Vec<(&'static str, Box<PointResidual>)> {
    use fields::*;
    let mut v: Vec<(&'static str, Box<PointResidual>)> = Vec::new();
    v.push((
        "pinv_gradient_consistency",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            Axis::ALL
                .iter()
                .map(|&a| (pr.d(a, |t| t.p_inv()) - s.p_inv_grad[a.index()]).abs())
                .fold(0.0, f64::max)
        }),
    ));
    v.push((
        "phi_gradient_consistency",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            Axis::ALL
                .iter()
                .map(|&a| (pr.d(a, |t| t.phi) - s.phi_grad[a.index()]).abs())
                .fold(0.0, f64::max)
        }),
    ));
    v.push((
        "pinv_mixed_xy",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let (g, ph, t) = (s.p_inv_grad, s.phi_grad, s.phi.tan());
            let pxy = pr.d(Axis::Y, |q| q.p_inv_grad[0]);
            (pxy - g[1] * ph[0] / t + g[0] * ph[1] * t).abs()
        }),
    ));
    v.push((
        "pinv_mixed_zx",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let (g, ph, t) = (s.p_inv_grad, s.phi_grad, s.phi.tan());
            let pzx = pr.d(Axis::X, |q| q.p_inv_grad[2]);
            let phizx = pr.d(Axis::X, |q| q.phi_grad[2]);
            (pzx + g[0] * ph[2] * t - s.p_inv() * phizx / t).abs()
        }),
    ));
    v.push((
        "pinv_mixed_zy",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let (g, ph, t) = (s.p_inv_grad, s.phi_grad, s.phi.tan());
            let pzy = pr.d(Axis::Y, |q| q.p_inv_grad[2]);
            let phizy = pr.d(Axis::Y, |q| q.phi_grad[2]);
            (pzy - g[1] * ph[2] / t + s.p_inv() * phizy * t).abs()
        }),
    ));
    // Second-order equation for P⁻¹, the κ₃ formula and ζ = κ₃².
    fn second_order(pr: &Probe) -> (FrameSample, [f64; 3], [f64; 3], f64) {
        let s = pr.at(Axis::X, 0.0);
        let pinv_dd = [
            pr.d(Axis::X, |q| q.p_inv_grad[0]),
            pr.d(Axis::Y, |q| q.p_inv_grad[1]),
            pr.d(Axis::Z, |q| q.p_inv_grad[2]),
        ];
        let phi_dd = [
            pr.d(Axis::X, |q| q.phi_grad[0]),
            pr.d(Axis::Y, |q| q.phi_grad[1]),
            pr.d(Axis::Z, |q| q.phi_grad[2]),
        ];
        let phi = s.phi;
        let psi_zz = (phi_dd[0] - phi_dd[1] - phi_dd[2] * (2.0 * phi).cos()) / (2.0 * phi).sin();
        (s, pinv_dd, phi_dd, psi_zz)
    }
    v.push((
        "pinv_second_order",
        Box::new(|pr: &Probe| {
            let (s, pdd, _, psi_zz) = second_order(pr);
            let (g, ph, t, pinv) = (s.p_inv_grad, s.phi_grad, s.phi.tan(), s.p_inv());
            let rhs = -(pdd[0] + 2.0 * ph[0] * t * g[0]) - (pdd[1] - 2.0 * ph[1] / t * g[1])
                + pdd[2]
                + 2.0 * psi_zz * pinv;
            (pinv - rhs).abs()
        }),
    ));
    v.push((
        "kappa3_from_pinv",
        Box::new(|pr: &Probe| {
            let (s, pdd, phdd, _) = second_order(pr);
            let (g, ph, pinv, phi) = (s.p_inv_grad, s.phi_grad, s.p_inv(), s.phi);
            let (c, sn, c2) = (phi.cos(), phi.sin(), (2.0 * phi).cos());
            let k3 = (phi.tan() * pdd[0] - ph[0] * c2 / (c * c) * g[0])
                - (pdd[1] / phi.tan() - ph[1] * c2 / (sn * sn) * g[1])
                + (pinv * phdd[2] - g[2] * ph[2]);
            (s.kappa3 - k3).abs()
        }),
    ));
    v.push((
        "zeta_equals_kappa3_squared",
        Box::new(|pr: &Probe| {
            let (s, pdd, _, psi_zz) = second_order(pr);
            let (g, ph, pinv, phi) = (s.p_inv_grad, s.phi_grad, s.p_inv(), s.phi);
            let (c, sn) = (phi.cos(), phi.sin());
            let zeta = pinv * (2.0 * pdd[2] + (-1.0 + ph[2] * ph[2] + 2.0 * psi_zz) * pinv)
                - (g[0] * g[0] / (c * c) + g[1] * g[1] / (sn * sn) + g[2] * g[2]);
            (zeta - s.kappa3 * s.kappa3).abs()
        }),
    ));
    v.push((
        "kappa3_gradient",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let (g, t) = (s.p_inv_grad, s.phi.tan());
            let expect = [-g[0] * t, g[1] / t, -s.p_inv() * s.phi_grad[2]];
            Axis::ALL
                .iter()
                .map(|&a| (pr.d(a, |q| q.kappa3) - expect[a.index()]).abs())
                .fold(0.0, f64::max)
        }),
    ));
    v.push((
        "k_invariant_gradient_xy",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let k = kappas(&s);
            let phizx = pr.d(Axis::X, |q| q.phi_grad[2]);
            let phizy = pr.d(Axis::Y, |q| q.phi_grad[2]);
            let rx = pr.d(Axis::X, k_inv) - k[1] * phizx;
            let ry = pr.d(Axis::Y, k_inv) - k[0] * phizy;
            rx.abs().max(ry.abs())
        }),
    ));
    v.push((
        "sigma3_gradient",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let k = kappas(&s);
            let k3x = pr.d(Axis::X, |q| q.kappa3);
            let k3y = pr.d(Axis::Y, |q| q.kappa3);
            let s3 = |q: &FrameSample| sigmas(q)[2];
            let rx = pr.d(Axis::X, s3) - k[1] * k3x;
            let ry = pr.d(Axis::Y, s3) - k[0] * k3y;
            let rz = pr.d(Axis::Z, s3) + s.p_inv() * k_inv(&s);
            rx.abs().max(ry.abs()).max(rz.abs())
        }),
    ));
    v.push((
        "sigma12_gradient",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let k = kappas(&s);
            let s1 = |q: &FrameSample| sigmas(q)[0];
            let s2 = |q: &FrameSample| sigmas(q)[1];
            let k1 = |q: &FrameSample| kappas(q)[0];
            let k2 = |q: &FrameSample| kappas(q)[1];
            let r = [
                pr.d(Axis::Y, s1) - pr.d(Axis::Y, k1) * k[2],
                pr.d(Axis::Z, s1) - pr.d(Axis::Z, k1) * k[1],
                pr.d(Axis::X, s2) - pr.d(Axis::X, k2) * k[2],
                pr.d(Axis::Z, s2) - pr.d(Axis::Z, k2) * k[0],
            ];
            r.iter().map(|v| v.abs()).fold(0.0, f64::max)
        }),
    ));
    v.push((
        "dual_invariant12_gradient",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let k = kappas(&s);
            let inv = |i: usize| move |q: &FrameSample| q.f * sigmas(q)[i] + q.n * kappas(q)[i];
            let k1 = |q: &FrameSample| kappas(q)[0];
            let k2 = |q: &FrameSample| kappas(q)[1];
            let r = [
                pr.d_with_dual(Axis::Y, inv(0)) - (s.f * k[2] + s.n) * pr.d(Axis::Y, k1),
                pr.d_with_dual(Axis::Z, inv(0)) - (s.f * k[1] + s.n) * pr.d(Axis::Z, k1),
                pr.d_with_dual(Axis::X, inv(1)) - (s.f * k[2] + s.n) * pr.d(Axis::X, k2),
                pr.d_with_dual(Axis::Z, inv(1)) - (s.f * k[0] + s.n) * pr.d(Axis::Z, k2),
            ];
            r.iter().map(|v| v.norm()).fold(0.0, f64::max)
        }),
    ));
    v.push((
        "x_gamma_transport",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let pc = |q: &FrameSample| q.p * q.phi.cos();
            let ps = |q: &FrameSample| q.p * q.phi.sin();
            let p2 = s.p * s.p;
            let ex = s.f_x() * (pr.d(Axis::Z, pc) / (p2 * s.phi.cos()));
            let ey = s.f_y() * (pr.d(Axis::Z, ps) / (p2 * s.phi.sin()));
            let rx = pr.dv(Axis::X, |q| q.x_gamma) - ex;
            let ry = pr.dv(Axis::Y, |q| q.x_gamma) - ey;
            rx.norm().max(ry.norm())
        }),
    ));
    v.push((
        "x_gamma_acceleration",
        Box::new(|pr: &Probe| {
            let s = pr.at(Axis::X, 0.0);
            let a = s.p_inv_grad[0] / s.phi.cos();
            let b = s.p_inv_grad[1] / s.phi.sin();
            let lhs = pr.dv(Axis::Z, |q| q.x_gamma) * s.p_inv();
            (lhs - (s.x_alpha * a + s.x_beta * b + s.n * s.kappa3)).norm()
        }),
    ));
    v
}

/// Names of the identities checked by [`validate_entry`], in report order.
pub fn structure_identity_names() -> Vec<&'static str> {
    structure_identities().into_iter().map(|(n, _)| n).collect()
}

/// Grid resolution (cell-centred points per axis) used by the residual checks.
pub const VALIDATION_GRID: usize = 5;

/// Sup residual over a cell-centred grid of every structure identity, at every step in `h_list`.
pub fn validate_entry(entry: &CatalogueEntry, domain: &Domain, h_list: &[f64], tol: f64) -> ResidualReport {
    let ids = structure_identities();
    let pts = domain.interior_grid(VALIDATION_GRID);
    let identities = ids
        .iter()
        .map(|(name, res)| {
            let series: Vec<f64> = h_list
                .iter()
                .map(|&h| {
                    pts.par_iter()
                        .map(|&p| res(&Probe { entry, p, h, m: 16 }))
                        .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
                })
                .collect();
            IdentityResidual::from_series(name, h_list, series, tol)
        })
        .collect();
    ResidualReport { entry: entry.name.clone(), tol, identities }
}
