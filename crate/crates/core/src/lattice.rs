//! Domain, lattice and pointwise sample types shared by every other module,
//! plus the sup-estimates of the bound constants C₁ and C₂.

use nalgebra::Vector4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CfhError, Result};
use crate::numerics::fd1;
use crate::samplers::CatalogueEntry;

pub type V4 = Vector4<f64>;

/// Coordinate axis of the curvature-line chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> [f64; 3] {
        let mut e = [0.0; 3];
        e[self.index()] = 1.0;
        e
    }
}

/// Move `p` by `t` along `axis`.
pub fn shift(p: [f64; 3], axis: Axis, t: f64) -> [f64; 3] {
    let mut q = p;
    q[axis.index()] += t;
    q
}

/// A compact cube `[x0,xe]×[y0,ye]×[z0,ze]` of side `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x0: f64,
    pub xe: f64,
    pub y0: f64,
    pub ye: f64,
    pub z0: f64,
    pub ze: f64,
    pub a: f64,
}

impl Domain {
    pub fn lower(&self) -> [f64; 3] {
        [self.x0, self.y0, self.z0]
    }

    pub fn upper(&self) -> [f64; 3] {
        [self.xe, self.ye, self.ze]
    }

    /// Point at fractional position `t ∈ [0,1]³`.
    pub fn at(&self, t: [f64; 3]) -> [f64; 3] {
        [self.x0 + t[0] * self.a, self.y0 + t[1] * self.a, self.z0 + t[2] * self.a]
    }

    /// `m` equally spaced points per axis including both ends (m ≥ 2).
    pub fn grid(&self, m: usize) -> Vec<[f64; 3]> {
        let m = m.max(2);
        let mut out = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let s = |l: usize| l as f64 / (m - 1) as f64;
                    out.push(self.at([s(i), s(j), s(k)]));
                }
            }
        }
        out
    }

    /// `m` cell-centred points per axis: strictly interior, so finite-difference
    /// stencils of reach below `a/(2m)` stay inside the cube.
    pub fn interior_grid(&self, m: usize) -> Vec<[f64; 3]> {
        let m = m.max(1);
        let mut out = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let s = |l: usize| (l as f64 + 0.5) / m as f64;
                    out.push(self.at([s(i), s(j), s(k)]));
                }
            }
        }
        out
    }
}

pub fn build_domain(x0: f64, xe: f64, y0: f64, ye: f64, z0: f64, ze: f64) -> Result<Domain> {
    let sides = [xe - x0, ye - y0, ze - z0];
    if sides.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(CfhError::UnequalSides(sides));
    }
    let a = sides[0];
    if sides.iter().any(|s| (s - a).abs() > 1e-12 * a) {
        return Err(CfhError::UnequalSides(sides));
    }
    Ok(Domain { x0, xe, y0, ye, z0, ze, a })
}

/// Equally spaced lattice with `n` cells per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub domain: Domain,
    pub n: usize,
    pub delta: f64,
}

pub fn build_lattice(domain: Domain, n: usize) -> Result<Lattice> {
    if n == 0 {
        return Err(CfhError::InvalidN(n));
    }
    Ok(Lattice { domain, n, delta: domain.a / n as f64 })
}

impl Lattice {
    /// Node coordinate along `axis`; affine in the index, never accumulated.
    pub fn coord(&self, axis: Axis, i: usize) -> f64 {
        let lo = self.domain.lower()[axis.index()];
        lo + i as f64 * self.domain.a / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.coord(Axis::X, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        self.coord(Axis::Y, j)
    }

    pub fn z(&self, k: usize) -> f64 {
        self.coord(Axis::Z, k)
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.x(i), self.y(j), self.z(k)]
    }

    pub fn points_per_side(&self) -> usize {
        self.n + 1
    }

    pub fn node_count(&self) -> usize {
        let m = self.n + 1;
        m * m * m
    }

    /// Flat index with `i` fastest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let m = self.n + 1;
        (k * m + j) * m + i
    }
}

/// Everything an analytic entry reports at one chart point.
///
/// The tangent vectors are recovered as `f_x = P cosφ X_α`, `f_y = P sinφ X_β`,
/// `f_z = P X_γ`. Besides the first derivatives of φ the sample carries the
/// gradient of `P⁻¹`, which every entry in the catalogue knows in closed form
/// and which the invariant `K` needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    pub f: V4,
    pub x_alpha: V4,
    pub x_beta: V4,
    pub x_gamma: V4,
    pub n: V4,
    pub p: f64,
    pub phi: f64,
    pub kappa3: f64,
    pub phi_grad: [f64; 3],
    pub p_inv_grad: [f64; 3],
}

impl FrameSample {
    pub fn p_inv(&self) -> f64 {
        1.0 / self.p
    }

    pub fn f_x(&self) -> V4 {
        self.x_alpha * (self.p * self.phi.cos())
    }

    pub fn f_y(&self) -> V4 {
        self.x_beta * (self.p * self.phi.sin())
    }

    pub fn f_z(&self) -> V4 {
        self.x_gamma * self.p
    }

    pub fn tangent(&self, axis: Axis) -> V4 {
        match axis {
            Axis::X => self.f_x(),
            Axis::Y => self.f_y(),
            Axis::Z => self.f_z(),
        }
    }

    pub fn frame(&self) -> [V4; 4] {
        [self.x_alpha, self.x_beta, self.x_gamma, self.n]
    }

    /// Max-norm deviation of the Gram matrix of `(X_α, X_β, X_γ, N)` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let fr = self.frame();
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((fr[a].dot(&fr[b]) - target).abs());
            }
        }
        worst
    }
}

/// Sup bounds on `P`, `P⁻¹`, `κᵢ` (C₁) and on the first derivatives of `κᵢ` (C₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub c1_raw: f64,
    pub c2_raw: f64,
    pub safety: f64,
}

impl BoundConstants {
    /// Per-cell deviation bound for the derivative of a discrete dual curve: `2C₁²C₂a/n`.
    pub fn curve_derivative_bound(&self, n: usize) -> f64 {
        2.0 * self.c1 * self.c1 * self.c2 * self.a / n as f64
    }

    /// Slice-surface bound `4C₁²C₂a²/n`.
    pub fn slice_bound(&self, n: usize) -> f64 {
        4.0 * self.c1 * self.c1 * self.c2 * self.a * self.a / n as f64
    }

    /// Whole-lattice bound `6C₁²C₂a³/n`.
    pub fn lattice_bound(&self, n: usize) -> f64 {
        6.0 * self.c1 * self.c1 * self.c2 * self.a.powi(3) / n as f64
    }
}

pub const DEFAULT_SAFETY: f64 = 1.1;
pub const DEFAULT_GRID_M: usize = 65;

/// Gradients of `(κ₁, κ₂, κ₃)`, one row per curvature.
pub fn kappa_gradients(entry: &CatalogueEntry, p: [f64; 3], h: f64) -> [[f64; 3]; 3] {
    if let Some(g) = entry.sampler.kappa_gradients(p[0], p[1], p[2]) {
        return g;
    }
    let mut out = [[0.0; 3]; 3];
    for axis in Axis::ALL {
        let d = fd1(|t| kappas_at(entry, shift(p, axis, t)), h);
        for (i, row) in out.iter_mut().enumerate() {
            row[axis.index()] = d[i];
        }
    }
    out
}

fn kappas_at(entry: &CatalogueEntry, p: [f64; 3]) -> [f64; 3] {
    let s = entry.sample_at(p);
    let pinv = s.p_inv();
    let k3 = s.kappa3;
    [pinv * s.phi.tan() + k3, -pinv / s.phi.tan() + k3, k3]
}

pub fn estimate_bound_constants(
    entry: &CatalogueEntry,
    domain: &Domain,
    grid_m: usize,
    safety: f64,
) -> Result<BoundConstants> {
    if grid_m < 16 {
        return Err(CfhError::InvalidParameter(format!("grid_m must be ≥ 16 (got {grid_m})")));
    }
    if !(safety >= 1.0) {
        return Err(CfhError::InvalidParameter(format!("safety must be ≥ 1 (got {safety})")));
    }
    let h = 1e-3 * domain.a;
    let pts = domain.grid(grid_m);
    let per_point: Vec<Result<(f64, f64)>> = pts
        .par_iter()
        .map(|&p| {
            let s = entry.sample_at(p);
            let sc = (s.phi.sin() * s.phi.cos()).abs();
            if !(s.p > 0.0) || sc == 0.0 || !sc.is_finite() {
                return Err(CfhError::SingularSample(format!(
                    "P = {}, sinφcosφ = {} at {:?}",
                    s.p, sc, p
                )));
            }
            let k = kappas_at(entry, p);
            let c1 = [s.p.abs(), 1.0 / s.p.abs(), k[0].abs(), k[1].abs(), k[2].abs()]
                .into_iter()
                .fold(0.0, f64::max);
            let g = kappa_gradients(entry, p, h);
            let c2 = g.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
            Ok((c1, c2))
        })
        .collect();
    let mut c1_raw: f64 = 0.0;
    let mut c2_raw: f64 = 0.0;
    for r in per_point {
        let (c1, c2) = r?;
        c1_raw = c1_raw.max(c1);
        c2_raw = c2_raw.max(c2);
    }
    Ok(BoundConstants {
        c1: safety * c1_raw,
        c2: safety * c2_raw,
        a: domain.a,
        c1_raw,
        c2_raw,
        safety,
    })
}
