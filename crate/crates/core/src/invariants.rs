//! Pointwise invariants: principal curvatures, Schouten eigenvalues, dual-side
//! quantities, the inversion invariant `Kf + A`, the dual invariants
//! `Inv^D_i = f* + σᵢf + κᵢN`, cusp detection and closed-form duals of the
//! normal forms.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CfhError, Result};
use crate::lattice::{shift, Axis, Domain, FrameSample, V4};
use crate::numerics::{fd1_lin, simpson, sin_angle};
use crate::reference_dual::DualField;
use crate::samplers::{fields, invert_entry, CatalogueEntry, DualFn, IdentityResidual, Probe, ResidualReport, StructureClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSet {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl CurvatureSet {
    pub fn as_array(&self) -> [f64; 3] {
        [self.k1, self.k2, self.k3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchoutenEigen {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub det_s: f64,
}

impl SchoutenEigen {
    pub fn as_array(&self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }
}

/// Quantities of the dual hypersurface expressed through those of `f`.
///
/// `κ*ᵢ` and `σ*ᵢ` for `i = 1, 2` are `None` where `σᵢ = 0`: those points are
/// cusp loci of the dual, not numerical failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualQuantities {
    pub p_star: f64,
    pub cos_phi_star: f64,
    pub sin_phi_star: f64,
    pub phi_star: f64,
    pub phi_star_grad: [f64; 3],
    pub kappa_star: [Option<f64>; 3],
    pub sigma_star: [Option<f64>; 3],
    pub k: f64,
    pub k_star: f64,
    pub a: V4,
    pub a_star: V4,
    pub w: f64,
    pub w_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantMaps {
    pub inv_i: V4,
    pub inv_d: [Option<V4>; 3],
}

impl InvariantMaps {
    pub fn inv_d(&self, i: usize) -> Result<V4> {
        self.inv_d[i - 1].ok_or(CfhError::UndefinedInvD(i))
    }
}

pub fn principal_curvatures(p: f64, phi: f64, kappa3: f64) -> Result<CurvatureSet> {
    let sc = phi.sin() * phi.cos();
    if sc.abs() < 1e-12 {
        return Err(CfhError::DegenerateAngle(sc.abs()));
    }
    let pinv = 1.0 / p;
    Ok(CurvatureSet { k1: pinv * phi.tan() + kappa3, k2: -pinv / phi.tan() + kappa3, k3: kappa3 })
}

pub fn schouten_eigenvalues(k: &CurvatureSet) -> SchoutenEigen {
    let (k1, k2, k3) = (k.k1, k.k2, k.k3);
    let s1 = 0.5 * (k1 * k2 - k2 * k3 + k3 * k1);
    let s2 = 0.5 * (k1 * k2 + k2 * k3 - k3 * k1);
    let s3 = 0.5 * (-k1 * k2 + k2 * k3 + k3 * k1);
    SchoutenEigen { s1, s2, s3, det_s: s1 * s2 * s3 }
}

/// Curvatures and Schouten eigenvalues of one sample.
pub fn sample_invariants(s: &FrameSample) -> Result<(CurvatureSet, SchoutenEigen)> {
    let k = principal_curvatures(s.p, s.phi, s.kappa3)?;
    Ok((k, schouten_eigenvalues(&k)))
}

/// Relative size below which a Schouten eigenvalue counts as vanishing.
pub const SIGMA_ZERO_REL: f64 = 1e-12;

fn vanishes(v: f64, sig: &SchoutenEigen) -> bool {
    let scale = sig.as_array().iter().fold(0.0f64, |m, s| m.max(s.abs()));
    v.abs() <= SIGMA_ZERO_REL * scale
}

fn nonzero(v: f64, sig: &SchoutenEigen) -> Option<f64> {
    (!vanishes(v, sig)).then_some(v)
}

pub fn dual_quantities(s: &FrameSample, sig: &SchoutenEigen, k: &CurvatureSet) -> DualQuantities {
    let (c, sn) = (s.phi.cos(), s.phi.sin());
    let cos_phi_star = sig.s1 / sig.s3 * c;
    let sin_phi_star = sig.s2 / sig.s3 * sn;
    let kk = fields::k_inv(s);
    let g = s.p_inv_grad;
    let phi_star_grad = [
        s.phi_grad[0] - k.k1 / sig.s3 * g[0],
        s.phi_grad[1] - k.k2 / sig.s3 * g[1],
        -s.phi_grad[2] + k.k3 / sig.s3 * kk,
    ];
    let a = -s.x_gamma + s.n * s.phi_grad[2];
    // The dual keeps X_γ and flips the normal.
    let a_star = -s.x_gamma - s.n * phi_star_grad[2];
    let sigmas = sig.as_array();
    let kappas = k.as_array();
    let mut kappa_star = [None; 3];
    let mut sigma_star = [None; 3];
    for i in 0..3 {
        if let Some(si) = nonzero(sigmas[i], sig) {
            kappa_star[i] = Some(-kappas[i] / si);
            sigma_star[i] = Some(1.0 / si);
        }
    }
    DualQuantities {
        p_star: sig.s3 * s.p,
        cos_phi_star,
        sin_phi_star,
        phi_star: sin_phi_star.atan2(cos_phi_star),
        phi_star_grad,
        kappa_star,
        sigma_star,
        k: kk,
        k_star: -kk / sig.s3,
        a,
        a_star,
        w: -c * c,
        w_star: -cos_phi_star * cos_phi_star,
    }
}

pub fn invariant_maps(s: &FrameSample, sig: &SchoutenEigen, k: &CurvatureSet, fstar: V4) -> InvariantMaps {
    let kk = fields::k_inv(s);
    let inv_i = s.f * kk + (-s.x_gamma + s.n * s.phi_grad[2]);
    let sigmas = sig.as_array();
    let kappas = k.as_array();
    let mut inv_d = [None; 3];
    for i in 0..3 {
        if i == 2 || !vanishes(sigmas[i], sig) {
            inv_d[i] = Some(fstar + s.f * sigmas[i] + s.n * kappas[i]);
        }
    }
    InvariantMaps { inv_i, inv_d }
}

// ---------------------------------------------------------------------------
// Identity residuals for the invariant maps
// ---------------------------------------------------------------------------

/// Vectors shorter than this carry no usable direction.
pub const PARALLEL_NORM_FLOOR: f64 = 1e-8;

fn sin_or_zero(a: &V4, b: &V4) -> f64 {
    if a.norm() < PARALLEL_NORM_FLOOR || b.norm() < PARALLEL_NORM_FLOOR {
        0.0
    } else {
        sin_angle(a, b)
    }
}

struct Ctx<'a> {
    entry: &'a CatalogueEntry,
    field: &'a DualField,
    twin: Option<(CatalogueEntry, V4)>,
    base: [f64; 3],
    m: usize,
}

fn s3(q: &FrameSample) -> f64 {
    fields::sigmas(q)[2]
}

fn inv_i_of(q: &FrameSample) -> V4 {
    q.f * fields::k_inv(q) + (-q.x_gamma + q.n * q.phi_grad[2])
}

/// `σ₃f + κ₃N`: the part of `Inv^D_3` not involving `f*`.
fn invd3_rest(q: &FrameSample) -> V4 {
    q.f * s3(q) + q.n * q.kappa3
}

fn dual_star_side(q: &FrameSample, fstar: V4) -> V4 {
    let (k, sig) = sample_invariants(q).expect("valid sample");
    let dq = dual_quantities(q, &sig, &k);
    fstar * dq.k_star + dq.a_star
}

/// Dual of the dual at `p`, by quadrature from the base point along x, then y, then z,
/// anchored so that it coincides with `f` at the base.
fn double_dual(entry: &CatalogueEntry, base: [f64; 3], p: [f64; 3], m: usize, cell: f64) -> V4 {
    let mut acc = entry.sample_at(base).f;
    let mut cur = base;
    for axis in Axis::ALL {
        let len = p[axis.index()] - cur[axis.index()];
        if len != 0.0 {
            let start = cur;
            // Same resolution per unit length as the lattice field: m substeps per cell.
            let m = m * (len.abs() / cell).ceil().max(1.0) as usize;
            acc += simpson(
                |t| {
                    let q = entry.sample_at(shift(start, axis, t));
                    let sig = fields::sigmas(&q)[axis.index()];
                    // σ*ᵢ times the tangent of f*, which is σᵢ times the tangent of f.
                    let fstar_tangent = q.tangent(axis) * sig;
                    fstar_tangent * (1.0 / sig)
                },
                len,
                m,
            );
        }
        cur[axis.index()] = p[axis.index()];
    }
    acc
}

type H = dyn Fn(&Ctx, [f64; 3], f64) -> f64 + Sync;

fn dual_identities(with_twin: bool) -> Vec<(&'static str, bool, Box<H>)> {
    // (name, depends on h, residual)
    let mut v: Vec<(&'static str, bool, Box<H>)> = Vec::new();
    v.push((
        "invd3_derivative_x",
        true,
        Box::new(|c: &Ctx, p, h| {
            let pr = Probe { entry: c.entry, p, h, m: c.m };
            let s = pr.at(Axis::X, 0.0);
            let k = fields::kappas(&s);
            let k3x = -s.p_inv_grad[0] * s.phi.tan();
            (pr.d_with_dual(Axis::X, invd3_rest) - (s.f * k[1] + s.n) * k3x).norm()
        }),
    ));
    v.push((
        "invd3_derivative_y",
        true,
        Box::new(|c: &Ctx, p, h| {
            let pr = Probe { entry: c.entry, p, h, m: c.m };
            let s = pr.at(Axis::X, 0.0);
            let k = fields::kappas(&s);
            let k3y = s.p_inv_grad[1] / s.phi.tan();
            (pr.d_with_dual(Axis::Y, invd3_rest) - (s.f * k[0] + s.n) * k3y).norm()
        }),
    ));
    v.push((
        "invd3_derivative_z",
        true,
        Box::new(|c: &Ctx, p, h| {
            let pr = Probe { entry: c.entry, p, h, m: c.m };
            let s = pr.at(Axis::X, 0.0);
            (pr.d_with_dual(Axis::Z, invd3_rest) + inv_i_of(&s) * s.p_inv()).norm()
        }),
    ));
    v.push((
        "invd3_sqrt_rescaled_z",
        true,
        Box::new(|c: &Ctx, p, h| {
            let pr = Probe { entry: c.entry, p, h, m: c.m };
            let s = pr.at(Axis::X, 0.0);
            let f0 = c.field.value_at(c.entry, p, c.m);
            let lhs = fd1_lin(
                |t| {
                    let q = pr.at(Axis::Z, t);
                    (f0 + pr.dual_increment(Axis::Z, t) + invd3_rest(&q)) / s3(&q).sqrt()
                },
                h,
            );
            let rhs = -(inv_i_of(&s) + dual_star_side(&s, f0)) / (2.0 * s.p * s3(&s).sqrt());
            (lhs - rhs).norm()
        }),
    ));
    v.push((
        "invd3_rescaled_z",
        true,
        Box::new(|c: &Ctx, p, h| {
            let pr = Probe { entry: c.entry, p, h, m: c.m };
            let s = pr.at(Axis::X, 0.0);
            let f0 = c.field.value_at(c.entry, p, c.m);
            let lhs = fd1_lin(
                |t| {
                    let q = pr.at(Axis::Z, t);
                    (f0 + pr.dual_increment(Axis::Z, t) + invd3_rest(&q)) / s3(&q)
                },
                h,
            );
            let p_star = s3(&s) * s.p;
            (lhs + dual_star_side(&s, f0) / p_star).norm()
        }),
    ));
    v.push((
        "inversion_invariant_derivative_xy",
        true,
        Box::new(|c: &Ctx, p, h| {
            let pr = Probe { entry: c.entry, p, h, m: c.m };
            let s = pr.at(Axis::X, 0.0);
            let k = fields::kappas(&s);
            let phizx = pr.d(Axis::X, |q| q.phi_grad[2]);
            let phizy = pr.d(Axis::Y, |q| q.phi_grad[2]);
            let rx = pr.dv(Axis::X, inv_i_of) - (s.f * k[1] + s.n) * phizx;
            let ry = pr.dv(Axis::Y, inv_i_of) - (s.f * k[0] + s.n) * phizy;
            rx.norm().max(ry.norm())
        }),
    ));
    v.push((
        "dual_invariant_self_duality",
        false,
        Box::new(|c: &Ctx, p, _h| {
            let s = c.entry.sample_at(p);
            let (k, sig) = sample_invariants(&s).expect("valid sample");
            let dq = dual_quantities(&s, &sig, &k);
            let fstar = c.field.value_at(c.entry, p, c.m);
            let fss = double_dual(c.entry, c.base, p, c.m, c.field.lattice.delta);
            let n_star = -s.n;
            let dual_side = fss + fstar * dq.sigma_star[2].unwrap() + n_star * dq.kappa_star[2].unwrap();
            let primal_side = (fstar + invd3_rest(&s)) / sig.s3;
            (dual_side - primal_side).norm()
        }),
    ));
    if with_twin {
        v.push((
            "inversion_invariance",
            false,
            Box::new(|c: &Ctx, p, _h| {
                let (twin, q) = c.twin.as_ref().unwrap();
                let s = c.entry.sample_at(p);
                let t = twin.sample_at(p);
                let k = fields::k_inv(&s);
                (inv_i_of(&t) - inv_i_of(&s) + q * k).norm()
            }),
        ));
        v.push((
            "inversion_frame_orthonormality",
            false,
            Box::new(|c: &Ctx, p, _h| c.twin.as_ref().unwrap().0.sample_at(p).orthonormality_defect()),
        ));
        for axis in Axis::ALL {
            let name = match axis {
                Axis::X => "invariant_parallelism_x",
                Axis::Y => "invariant_parallelism_y",
                Axis::Z => "invariant_parallelism_z",
            };
            v.push((
                name,
                true,
                Box::new(move |c: &Ctx, p, h| {
                    let (twin, q) = c.twin.as_ref().unwrap();
                    let q = *q;
                    let pr = Probe { entry: c.entry, p, h, m: c.m };
                    let pt = Probe { entry: twin, p, h, m: c.m };
                    let d_shifted = pr.d_with_dual(axis, |s| (s.f - q) * s3(s) + s.n * s.kappa3);
                    let d_twin = pt.d_with_dual(axis, invd3_rest);
                    let companion = match axis {
                        Axis::Z => {
                            let s = pr.at(axis, 0.0);
                            (s.f - q) * fields::k_inv(&s) + (-s.x_gamma + s.n * s.phi_grad[2])
                        }
                        _ => pr.dv(axis, |s| (s.f - q) * fields::k_inv(s) + (-s.x_gamma + s.n * s.phi_grad[2])),
                    };
                    sin_or_zero(&d_shifted, &d_twin).max(sin_or_zero(&d_shifted, &companion))
                }),
            ));
        }
    }
    v
}

/// Residuals of the identities relating the dual invariant, the inversion
/// invariant and their derivatives.
///
/// `field` supplies absolute values of `f*` (any translation gauge); derivatives
/// use dual increments obtained by quadrature so that no interpolation enters.
/// With `twin_center = Some(q)` the entry is also compared with its inversion
/// about `q`.
pub fn identity_residuals(
    entry: &CatalogueEntry,
    field: &DualField,
    domain: &Domain,
    h_list: &[f64],
    twin_center: Option<V4>,
    tol: f64,
) -> Result<ResidualReport> {
    let twin = match twin_center {
        Some(q) => Some((invert_entry(entry, q)?, q)),
        None => None,
    };
    let ctx = Ctx { entry, field, twin, base: domain.lower(), m: field.substeps };
    let pts = domain.interior_grid(crate::samplers::VALIDATION_GRID);
    let ids = dual_identities(twin_center.is_some());
    let identities = ids
        .iter()
        .map(|(name, uses_h, res)| {
            let sup_at = |h: f64| {
                pts.par_iter()
                    .map(|&p| res(&ctx, p, h))
                    .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
            };
            if *uses_h {
                let series: Vec<f64> = h_list.iter().map(|&h| sup_at(h)).collect();
                IdentityResidual::from_series(name, h_list, series, tol)
            } else {
                let r = sup_at(0.0);
                IdentityResidual {
                    name: name.to_string(),
                    h: vec![],
                    residuals: vec![r],
                    order: None,
                    pass: r.is_finite() && r <= tol,
                }
            }
        })
        .collect();
    Ok(ResidualReport { entry: entry.name.clone(), tol, identities })
}

/// Sup over the given points of the pointwise inversion-invariance residual
/// `|K^q(ι̂_q∘f) + A^q − (Kf + A) + Kq|`.
pub fn inversion_invariance_residual(entry: &CatalogueEntry, twin: &CatalogueEntry, q: V4, pts: &[[f64; 3]]) -> f64 {
    pts.par_iter()
        .map(|&p| {
            let s = entry.sample_at(p);
            let t = twin.sample_at(p);
            (inv_i_of(&t) - inv_i_of(&s) + q * fields::k_inv(&s)).norm()
        })
        .reduce(|| 0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Degenerate points of the dual
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneratePoint {
    pub point: [f64; 3],
    pub axis: Axis,
    pub transversal: bool,
    /// Derivative of the vanishing eigenvalue along `axis` at the root.
    pub derivative: f64,
}

/// Roots of `g` on `[lo, hi]` located from `samples` equally spaced values:
/// exact zeros at sample points, plus sign changes refined by bisection to `tol`.
pub fn scan_sign_changes(g: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize, tol: f64) -> Vec<f64> {
    let samples = samples.max(2);
    let ts: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let mut roots = Vec::new();
    for i in 0..samples {
        if vs[i] == 0.0 {
            roots.push(ts[i]);
            continue;
        }
        if i + 1 < samples && vs[i + 1] != 0.0 && vs[i].signum() != vs[i + 1].signum() {
            let (mut a, mut b, mut ga) = (ts[i], ts[i + 1], vs[i]);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                let gm = g(mid);
                if gm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if gm.signum() == ga.signum() {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    roots
}

/// Threshold on `|∂σᵢ|` below which a root counts as tangential.
pub const TRANSVERSAL_FLOOR: f64 = 1e-8;

/// Derivative of σ₁ along x (axis X) or of σ₂ along y (axis Y), in the closed
/// form `−(P cos²φ)⁻¹[(P⁻¹)_x − κ₃φ_x]` and its mirror image.
pub fn cusp_derivative(s: &FrameSample, axis: Axis) -> f64 {
    match axis {
        Axis::X => -(s.p_inv_grad[0] - s.kappa3 * s.phi_grad[0]) / (s.p * s.phi.cos().powi(2)),
        Axis::Y => -(s.p_inv_grad[1] - s.kappa3 * s.phi_grad[1]) / (s.p * s.phi.sin().powi(2)),
        Axis::Z => 0.0,
    }
}

/// Sign changes of σ₁ along x-lines and σ₂ along y-lines, on `grid` points per axis.
pub fn detect_degenerate(entry: &CatalogueEntry, domain: &Domain, grid: usize) -> Vec<DegeneratePoint> {
    let grid = grid.max(2);
    let lines: Vec<(Axis, f64, f64)> = (0..grid)
        .flat_map(|b| (0..grid).map(move |c| (b, c)))
        .flat_map(|(b, c)| {
            let s = |l: usize| l as f64 / (grid - 1) as f64;
            [(Axis::X, s(b), s(c)), (Axis::Y, s(b), s(c))]
        })
        .collect();
    let mut out: Vec<DegeneratePoint> = lines
        .par_iter()
        .flat_map_iter(|&(axis, tb, tc)| {
            let point_at = move |t: f64| match axis {
                Axis::X => domain.at([t, tb, tc]),
                _ => domain.at([tb, t, tc]),
            };
            let idx = axis.index();
            let g = |t: f64| fields::sigmas(&entry.sample_at(point_at(t)))[idx];
            let roots = scan_sign_changes(g, 0.0, 1.0, grid, 1e-10 / domain.a);
            roots.into_iter().map(move |t| {
                let p = point_at(t);
                let d = cusp_derivative(&entry.sample_at(p), axis);
                DegeneratePoint { point: p, axis, transversal: d.abs() > TRANSVERSAL_FLOOR, derivative: d }
            })
        })
        .collect();
    out.sort_by(|a, b| a.axis.cmp(&b.axis).then(a.point.partial_cmp(&b.point).unwrap()));
    out
}

/// Inversion centre `q = f(p) − d N(p)` that makes σ₁ of the inverted entry vanish at `p`.
///
/// With `f − q = dN` the inverted eigenvalue is `d²(σ₁d² + 2κ₁d + 2)`; of the two
/// roots in `d` the one of larger modulus is used when `far` is set.
pub fn cusp_inversion_center(entry: &CatalogueEntry, p: [f64; 3], far: bool) -> Result<V4> {
    let s = entry.sample_at(p);
    let (k, sig) = sample_invariants(&s)?;
    let (a, b, c) = (sig.s1, 2.0 * k.k1, 2.0);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a == 0.0 {
        return Err(CfhError::NoDegeneratePoint);
    }
    let r1 = (-b + disc.sqrt()) / (2.0 * a);
    let r2 = (-b - disc.sqrt()) / (2.0 * a);
    let d = if (r1.abs() > r2.abs()) == far { r1 } else { r2 };
    Ok(s.f - s.n * d)
}

// ---------------------------------------------------------------------------
// Closed-form duals of normal forms
// ---------------------------------------------------------------------------

fn param(entry: &CatalogueEntry, key: &str) -> Result<f64> {
    entry
        .params
        .get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| CfhError::InvalidParameter(format!("structure class needs parameter `{key}`")))
}

/// Closed-form dual of a normal-form entry, anchored to vanish at `base`.
///
/// Formulas are evaluated from samples, so they follow the entry through rigid
/// motions. The rotating-hyperplane class only determines the dual up to an
/// unresolved translation field `W(x,y)` and reports [`CfhError::PartialForm`].
pub fn exact_dual(entry: &CatalogueEntry, base: [f64; 3]) -> Result<DualFn> {
    let e = entry.clone();
    let raw: DualFn = match entry.structure_class {
        StructureClass::Generic => {
            return Err(CfhError::Unsupported(format!("no closed-form dual for generic entry {}", entry.name)))
        }
        StructureClass::B => return Err(CfhError::PartialForm("W(x,y)".into())),
        StructureClass::AMu0 => Arc::new(move |p| {
            let s = e.sample_at(p);
            let s3 = fields::sigmas(&s)[2];
            let b = s.x_gamma;
            -s.f * s3 + b * (2.0 * s3 * s.f.dot(&b))
        }),
        StructureClass::AMuZ => {
            let c = param(entry, "C")?;
            let c1 = param(entry, "c1")?;
            let z_ref = base[2];
            Arc::new(move |p| {
                let s = e.sample_at(p);
                let mu_z = s.phi_grad[2];
                let b = -(-s.x_gamma + s.n * mu_z) / (1.0 + mu_z * mu_z).sqrt();
                let q = if p[2] == z_ref {
                    0.0
                } else {
                    simpson(
                        |t| {
                            let cos_mu = e.sample_at([p[0], p[1], z_ref + t]).p_inv() / c;
                            c * c1 * cos_mu * cos_mu
                        },
                        p[2] - z_ref,
                        64,
                    )
                };
                -s.f * (0.5 * c * c) - s.n * s.kappa3 + b * q
            })
        }
        StructureClass::CMu0 => Arc::new(move |p| {
            let s = e.sample_at(p);
            -s.f * fields::sigmas(&s)[2]
        }),
        StructureClass::CMuZ => Arc::new(move |p| {
            let s = e.sample_at(p);
            -(s.f * fields::sigmas(&s)[2] + s.n * s.kappa3)
        }),
    };
    let origin = raw(base);
    Ok(Arc::new(move |p| raw(p) - origin))
}
