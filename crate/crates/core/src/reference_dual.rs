//! High-accuracy values of the dual by composite Simpson quadrature of the
//! closed one-form `df* = σ₁f_x dx + σ₂f_y dy + σ₃f_z dz`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CfhError, Result};
use crate::lattice::{shift, Axis, Lattice, V4};
use crate::numerics::simpson;
use crate::samplers::{fields, CatalogueEntry};

pub const DEFAULT_SUBSTEPS: usize = 16;

/// Dual values on every lattice node, zero at the base node `(0,0,0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualField {
    pub lattice: Lattice,
    pub values: Vec<V4>,
    pub base: [usize; 3],
    pub substeps: usize,
    pub integrator: String,
    /// Order in which the coordinate legs of the accumulation path were taken.
    pub path_order: [Axis; 3],
}

impl DualField {
    pub fn get(&self, i: usize, j: usize, k: usize) -> V4 {
        self.values[self.lattice.index(i, j, k)]
    }

    /// Dual at an arbitrary point of the cube: the value at the nearest lower
    /// node plus quadrature along x, then y, then z.
    pub fn value_at(&self, entry: &CatalogueEntry, p: [f64; 3], m: usize) -> V4 {
        let lat = &self.lattice;
        let lo = lat.domain.lower();
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let t = ((p[a] - lo[a]) / lat.delta).floor();
            idx[a] = (t.max(0.0) as usize).min(lat.n);
        }
        let mut acc = self.get(idx[0], idx[1], idx[2]);
        let mut cur = lat.node(idx[0], idx[1], idx[2]);
        for axis in Axis::ALL {
            let a = axis.index();
            let len = p[a] - cur[a];
            acc += integrate_dual_edge(entry, cur, axis, len, m);
            cur[a] = p[a];
        }
        acc
    }
}

/// Integrand of the dual one-form along `axis`.
pub fn dual_tangent(entry: &CatalogueEntry, p: [f64; 3], axis: Axis) -> V4 {
    let s = entry.sample_at(p);
    s.tangent(axis) * fields::sigmas(&s)[axis.index()]
}

/// `∫ df*` along the straight edge from `from` to `from + len·e_axis`.
pub fn integrate_dual_edge(entry: &CatalogueEntry, from: [f64; 3], axis: Axis, len: f64, m: usize) -> V4 {
    if len == 0.0 {
        return V4::zeros();
    }
    simpson(|t| dual_tangent(entry, shift(from, axis, t), axis), len, m)
}

/// Fail with `DegenerateRegion` if det S vanishes (or changes sign) on a grid over the cube.
pub fn check_nondegenerate(entry: &CatalogueEntry, lattice: &Lattice) -> Result<()> {
    let m = (lattice.n + 1).clamp(9, 33);
    let pts = lattice.domain.grid(m);
    let dets: Vec<([f64; 3], f64)> = pts
        .par_iter()
        .map(|&p| {
            let s = fields::sigmas(&entry.sample_at(p));
            (p, s[0] * s[1] * s[2])
        })
        .collect();
    let sign = dets[0].1.signum();
    for (p, d) in dets {
        if !(d.abs() > 1e-14) || d.signum() != sign || !d.is_finite() {
            return Err(CfhError::DegenerateRegion(p[0], p[1], p[2]));
        }
    }
    Ok(())
}

/// Accumulate an integrand over the lattice along a fixed leg order.
pub(crate) fn accumulate<F>(lattice: &Lattice, order: [Axis; 3], m: usize, integrand: F) -> Vec<V4>
where
    F: Fn([f64; 3], Axis) -> V4 + Sync,
{
    let n = lattice.n;
    let np = n + 1;
    let edge = |node: [usize; 3], axis: Axis| {
        let from = lattice.node(node[0], node[1], node[2]);
        simpson(|t| integrand(shift(from, axis, t), axis), lattice.delta, m)
    };
    let idx_with = |a0: usize, a1: usize, a2: usize| {
        let mut idx = [0usize; 3];
        idx[order[0].index()] = a0;
        idx[order[1].index()] = a1;
        idx[order[2].index()] = a2;
        idx
    };
    // Leg 1: a single line from the base.
    let mut first = vec![V4::zeros(); np];
    for a in 0..n {
        first[a + 1] = first[a] + edge(idx_with(a, 0, 0), order[0]);
    }
    // Leg 2: one line per node of leg 1.
    let second: Vec<Vec<V4>> = (0..np)
        .into_par_iter()
        .map(|a| {
            let mut line = vec![first[a]; np];
            for b in 0..n {
                line[b + 1] = line[b] + edge(idx_with(a, b, 0), order[1]);
            }
            line
        })
        .collect();
    // Leg 3: one line per node of the plane spanned by legs 1 and 2.
    let pencils: Vec<Vec<V4>> = (0..np * np)
        .into_par_iter()
        .map(|ab| {
            let (a, b) = (ab / np, ab % np);
            let mut line = vec![second[a][b]; np];
            for c in 0..n {
                line[c + 1] = line[c] + edge(idx_with(a, b, c), order[2]);
            }
            line
        })
        .collect();
    let mut values = vec![V4::zeros(); lattice.node_count()];
    for a in 0..np {
        for b in 0..np {
            for c in 0..np {
                let idx = idx_with(a, b, c);
                values[lattice.index(idx[0], idx[1], idx[2])] = pencils[a * np + b][c];
            }
        }
    }
    values
}

/// Dual on every node along the path base → x → y → z.
pub fn reference_dual_lattice(entry: &CatalogueEntry, lattice: &Lattice, m: usize) -> Result<DualField> {
    reference_dual_lattice_ordered(entry, lattice, m, [Axis::X, Axis::Y, Axis::Z])
}

/// As [`reference_dual_lattice`] with an explicit leg order (path-independence checks).
pub fn reference_dual_lattice_ordered(
    entry: &CatalogueEntry,
    lattice: &Lattice,
    m: usize,
    order: [Axis; 3],
) -> Result<DualField> {
    check_nondegenerate(entry, lattice)?;
    let values = accumulate(lattice, order, m, |p, axis| dual_tangent(entry, p, axis));
    Ok(DualField {
        lattice: *lattice,
        values,
        base: [0, 0, 0],
        substeps: m,
        integrator: "composite-simpson".into(),
        path_order: order,
    })
}

/// Norm of `∮ df*` around the square with corner `corner`, spanned by `plane`.
pub fn loop_residual(entry: &CatalogueEntry, corner: [f64; 3], plane: (Axis, Axis), side: f64, m: usize) -> f64 {
    let (a, b) = plane;
    let p1 = shift(corner, a, side);
    let p3 = shift(corner, b, side);
    let total = integrate_dual_edge(entry, corner, a, side, m) + integrate_dual_edge(entry, p1, b, side, m)
        - integrate_dual_edge(entry, p3, a, side, m)
        - integrate_dual_edge(entry, corner, b, side, m);
    total.norm()
}

/// Sup over nodes of `|(f*)* − (f − f(base))|`, where the dual of the dual is
/// integrated from `σ*ᵢ = 1/σᵢ` times the tangents `σᵢ f_i` of `f*`.
pub fn involution_check(entry: &CatalogueEntry, lattice: &Lattice, m: usize) -> Result<f64> {
    check_nondegenerate(entry, lattice)?;
    let values = accumulate(lattice, [Axis::X, Axis::Y, Axis::Z], m, |p, axis| {
        let s = entry.sample_at(p);
        let sigma = fields::sigmas(&s)[axis.index()];
        let fstar_tangent = s.tangent(axis) * sigma;
        fstar_tangent * (1.0 / sigma)
    });
    let f_base = entry.sample_at(lattice.node(0, 0, 0)).f;
    let np = lattice.n + 1;
    let mut worst: f64 = 0.0;
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                let f = entry.sample_at(lattice.node(i, j, k)).f;
                worst = worst.max((values[lattice.index(i, j, k)] - (f - f_base)).norm());
            }
        }
    }
    Ok(worst)
}

/// Richardson estimate `max |I_m − I_2m| / 15` over the edges leaving a sparse set of nodes.
pub fn simpson_error_estimate(entry: &CatalogueEntry, lattice: &Lattice, m: usize) -> f64 {
    let stride = (lattice.n / 4).max(1);
    let mut nodes = Vec::new();
    for k in (0..lattice.n).step_by(stride) {
        for j in (0..lattice.n).step_by(stride) {
            for i in (0..lattice.n).step_by(stride) {
                nodes.push(lattice.node(i, j, k));
            }
        }
    }
    nodes
        .par_iter()
        .flat_map_iter(|&p| Axis::ALL.map(|a| (p, a)))
        .map(|(p, a)| {
            let coarse = integrate_dual_edge(entry, p, a, lattice.delta, m);
            let fine = integrate_dual_edge(entry, p, a, lattice.delta, 2 * m);
            (coarse - fine).norm() / 15.0
        })
        .reduce(|| 0.0, f64::max)
}
