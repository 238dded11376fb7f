//! Discrete duals on the lattice `Lₙ`.
//!
//! Every cell of a coordinate line carries a "parallel curve" segment
//! `−σ(anchor)[f − f(anchor)] − κ(anchor)[N − N(anchor)]` whose tangent is
//! parallel to the tangent of `f`; the segments are concatenated by telescoping
//! sums. Two schemes differ in which lines define the slice surfaces:
//!
//! - `xbar`: the `y`-line through `x₀` plus every `x`-line, with `(σ₃, κ₃)` anchors,
//!   and a `z`-spine through `(x₀, y₀)` with `(σ₂, κ₂)` anchors;
//! - `yunder`: the `x`-line through `y₀` plus every `y`-line, with a `(σ₁, κ₁)` spine.
//!
//! Lattice edges outside the defining net are joined by connector curves that
//! blend a forward and a backward parallel curve so that both end nodes are hit
//! exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{Axis, FrameSample, Lattice, V4};
use crate::numerics::fd1_lin;
use crate::reference_dual::check_nondegenerate;
use crate::samplers::{fields, CatalogueEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "xbar")]
    XBar,
    #[serde(rename = "yunder")]
    YUnder,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::XBar => "xbar",
            Scheme::YUnder => "yunder",
        }
    }

    /// Index of the Schouten eigenvalue / curvature anchoring segments along `axis`.
    pub fn anchor_index(self, axis: Axis) -> usize {
        match (axis, self) {
            (Axis::Z, Scheme::XBar) => 1,
            (Axis::Z, Scheme::YUnder) => 0,
            _ => 2,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "xbar" => Ok(Scheme::XBar),
            "yunder" => Ok(Scheme::YUnder),
            other => Err(format!("unknown scheme `{other}` (expected xbar or yunder)")),
        }
    }
}

/// Position, normal and anchor coefficients at one point.
#[derive(Debug, Clone, Copy)]
struct Anchor {
    f: V4,
    n: V4,
    sigma: [f64; 3],
    kappa: [f64; 3],
}

impl Anchor {
    fn from_sample(s: &FrameSample) -> Self {
        Anchor { f: s.f, n: s.n, sigma: fields::sigmas(s), kappa: fields::kappas(s) }
    }

    /// Parallel-curve segment from this anchor to the point `(f, n)`.
    fn segment(&self, idx: usize, f: V4, n: V4) -> V4 {
        -(f - self.f) * self.sigma[idx] - (n - self.n) * self.kappa[idx]
    }

    /// Backward segment from the point `(f, n)` to `end`.
    fn hat_segment(&self, idx: usize, f: V4, n: V4, end: &Anchor) -> V4 {
        (end.f - f) * self.sigma[idx] + (end.n - n) * self.kappa[idx]
    }
}

/// A polyline sampled along one lattice line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCurve {
    pub axis: Axis,
    /// Values of the two coordinates held fixed, in x, y, z order.
    pub fixed: [f64; 2],
    pub params: Vec<f64>,
    pub values: Vec<V4>,
    /// Samples per cell; node `i` sits at `values[i * subsamples]`.
    pub subsamples: usize,
}

impl DiscreteCurve {
    pub fn node_value(&self, i: usize) -> V4 {
        self.values[i * self.subsamples]
    }

    pub fn node_count(&self) -> usize {
        (self.values.len() - 1) / self.subsamples + 1
    }

    pub fn point(&self, t: f64) -> [f64; 3] {
        point_on(self.axis, self.fixed, t)
    }
}

fn point_on(axis: Axis, fixed: [f64; 2], t: f64) -> [f64; 3] {
    match axis {
        Axis::X => [t, fixed[0], fixed[1]],
        Axis::Y => [fixed[0], t, fixed[1]],
        Axis::Z => [fixed[0], fixed[1], t],
    }
}

fn node_with(axis: Axis, other: [usize; 2], l: usize) -> [usize; 3] {
    match axis {
        Axis::X => [l, other[0], other[1]],
        Axis::Y => [other[0], l, other[1]],
        Axis::Z => [other[0], other[1], l],
    }
}

fn fixed_coords(lattice: &Lattice, axis: Axis, other: [usize; 2]) -> [f64; 2] {
    let n = node_with(axis, other, 0);
    let p = lattice.node(n[0], n[1], n[2]);
    match axis {
        Axis::X => [p[1], p[2]],
        Axis::Y => [p[0], p[2]],
        Axis::Z => [p[0], p[1]],
    }
}

fn sample_node(entry: &CatalogueEntry, lattice: &Lattice, idx: [usize; 3]) -> FrameSample {
    entry.sample_at(lattice.node(idx[0], idx[1], idx[2]))
}

/// Concatenated parallel-curve segments along the lattice line through the
/// nodes `node_with(axis, other, ·)`, starting at zero.
fn line_curve(
    entry: &CatalogueEntry,
    lattice: &Lattice,
    axis: Axis,
    other: [usize; 2],
    idx: usize,
    subsamples: usize,
) -> DiscreteCurve {
    line_curve_at(entry, lattice, axis, fixed_coords(lattice, axis, other), idx, subsamples)
}

/// As [`line_curve`] on the line with fixed coordinates `fixed`, using the
/// lattice spacing along `axis`.
fn line_curve_at(
    entry: &CatalogueEntry,
    lattice: &Lattice,
    axis: Axis,
    fixed: [f64; 2],
    idx: usize,
    subsamples: usize,
) -> DiscreteCurve {
    let sub = subsamples.max(1);
    let n = lattice.n;
    let mut params = Vec::with_capacity(n * sub + 1);
    let mut values = Vec::with_capacity(n * sub + 1);
    let at = |t: f64| entry.sample_at(point_on(axis, fixed, t));
    let mut anchor = Anchor::from_sample(&at(lattice.coord(axis, 0)));
    let mut prefix = V4::zeros();
    params.push(lattice.coord(axis, 0));
    values.push(prefix);
    for c in 0..n {
        let (t0, t1) = (lattice.coord(axis, c), lattice.coord(axis, c + 1));
        for s in 1..sub {
            let t = t0 + (t1 - t0) * s as f64 / sub as f64;
            let q = at(t);
            params.push(t);
            values.push(prefix + anchor.segment(idx, q.f, q.n));
        }
        let end = Anchor::from_sample(&at(t1));
        prefix += anchor.segment(idx, end.f, end.n);
        params.push(t1);
        values.push(prefix);
        anchor = end;
    }
    DiscreteCurve { axis, fixed, params, values, subsamples: sub }
}

/// Discrete dual x-curve on the line through `(y, z)` (not necessarily a lattice
/// line), with the lattice x-nodes as anchors; zero at `x₀`.
pub fn u_curve_through(entry: &CatalogueEntry, lattice: &Lattice, y: f64, z: f64, subsamples: usize) -> DiscreteCurve {
    line_curve_at(entry, lattice, Axis::X, [y, z], 2, subsamples)
}

/// Parallel-curve segment anchored at `anchor` with the coefficients
/// `(σ_idx, κ_idx)` (`idx` ∈ 0..3), evaluated at `at`.
pub fn parallel_segment(entry: &CatalogueEntry, anchor: [f64; 3], idx: usize, at: [f64; 3]) -> V4 {
    let a = Anchor::from_sample(&entry.sample_at(anchor));
    let q = entry.sample_at(at);
    a.segment(idx, q.f, q.n)
}

/// One x-segment on cell `[x_i, x_{i+1}]` of the line `(y_j, z_k)`, evaluated at `x`.
pub fn u_segment(entry: &CatalogueEntry, lattice: &Lattice, i: usize, j: usize, k: usize, x: f64) -> V4 {
    parallel_segment(entry, lattice.node(i, j, k), 2, [x, lattice.y(j), lattice.z(k)])
}

/// One y-segment on cell `[y_j, y_{j+1}]` of the line `(x_i, z_k)`, evaluated at `y`.
pub fn v_segment(entry: &CatalogueEntry, lattice: &Lattice, i: usize, j: usize, k: usize, y: f64) -> V4 {
    parallel_segment(entry, lattice.node(i, j, k), 2, [lattice.x(i), y, lattice.z(k)])
}

/// Discrete dual x-curve on the line `(y_j, z_k)`, zero at `x₀`.
pub fn u_curve(entry: &CatalogueEntry, lattice: &Lattice, j: usize, k: usize, subsamples: usize) -> DiscreteCurve {
    line_curve(entry, lattice, Axis::X, [j, k], 2, subsamples)
}

/// Discrete dual y-curve on the line `(x_i, z_k)`, zero at `y₀`.
pub fn v_curve(entry: &CatalogueEntry, lattice: &Lattice, i: usize, k: usize, subsamples: usize) -> DiscreteCurve {
    line_curve(entry, lattice, Axis::Y, [i, k], 2, subsamples)
}

/// The z-spine through `(x₀, y₀)`, anchored with `(σ₂, κ₂)` for `xbar` and `(σ₁, κ₁)` for `yunder`.
pub fn z_spine(entry: &CatalogueEntry, lattice: &Lattice, scheme: Scheme, subsamples: usize) -> DiscreteCurve {
    line_curve(entry, lattice, Axis::Z, [0, 0], scheme.anchor_index(Axis::Z), subsamples)
}

/// Discrete dual of the slice `z = z_k`, zero at `(x₀, y₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDualSurface {
    pub k: usize,
    pub scheme: Scheme,
    pub lattice: Lattice,
    /// Node values, index `j * (n + 1) + i`.
    pub nodes: Vec<V4>,
    /// The line through the base: `x = x₀` for `xbar`, `y = y₀` for `yunder`.
    pub spine: DiscreteCurve,
    /// The translated family: x-curves per `y_j` (`xbar`) or y-curves per `x_i` (`yunder`).
    pub lines: Vec<DiscreteCurve>,
}

impl DiscreteDualSurface {
    pub fn node(&self, i: usize, j: usize) -> V4 {
        self.nodes[j * (self.lattice.n + 1) + i]
    }
}

fn slice_surface(entry: &CatalogueEntry, lattice: &Lattice, k: usize, scheme: Scheme, subsamples: usize) -> DiscreteDualSurface {
    let np = lattice.n + 1;
    let (spine_axis, line_axis) = match scheme {
        Scheme::XBar => (Axis::Y, Axis::X),
        Scheme::YUnder => (Axis::X, Axis::Y),
    };
    let spine = line_curve(entry, lattice, spine_axis, [0, k], 2, subsamples);
    let mut lines: Vec<DiscreteCurve> = (0..np)
        .into_par_iter()
        .map(|l| line_curve(entry, lattice, line_axis, [l, k], 2, subsamples))
        .collect();
    let mut nodes = vec![V4::zeros(); np * np];
    for (l, line) in lines.iter_mut().enumerate() {
        let offset = spine.node_value(l);
        for v in line.values.iter_mut() {
            *v += offset;
        }
        for m in 0..np {
            let (i, j) = match scheme {
                Scheme::XBar => (m, l),
                Scheme::YUnder => (l, m),
            };
            nodes[j * np + i] = line.node_value(m);
        }
    }
    DiscreteDualSurface { k, scheme, lattice: *lattice, nodes, spine, lines }
}

/// Slice surface built from the `x₀` y-curve and translated x-curves.
pub fn surface_xbar(entry: &CatalogueEntry, lattice: &Lattice, k: usize, subsamples: usize) -> DiscreteDualSurface {
    slice_surface(entry, lattice, k, Scheme::XBar, subsamples)
}

/// Slice surface built from the `y₀` x-curve and translated y-curves.
pub fn surface_yunder(entry: &CatalogueEntry, lattice: &Lattice, k: usize, subsamples: usize) -> DiscreteDualSurface {
    slice_surface(entry, lattice, k, Scheme::YUnder, subsamples)
}

/// Discrete dual on every node of `Lₙ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDualHypersurface {
    pub lattice: Lattice,
    pub scheme: Scheme,
    pub values: Vec<V4>,
    pub z_spine: DiscreteCurve,
}

impl DiscreteDualHypersurface {
    pub fn get(&self, i: usize, j: usize, k: usize) -> V4 {
        self.values[self.lattice.index(i, j, k)]
    }

    /// Whether the lattice edge leaving node `(i,j,k)` along `axis` belongs to the
    /// defining net (otherwise it carries a connector).
    pub fn is_defining_edge(&self, axis: Axis, i: usize, j: usize) -> bool {
        match (self.scheme, axis) {
            (Scheme::XBar, Axis::X) | (Scheme::YUnder, Axis::Y) => true,
            (Scheme::XBar, Axis::Y) => i == 0,
            (Scheme::YUnder, Axis::X) => j == 0,
            (_, Axis::Z) => i == 0 && j == 0,
        }
    }

    /// Curve on the lattice edge leaving node `(i,j,k)` along `axis`: the
    /// translated parallel segment on defining edges, a connector elsewhere.
    pub fn edge_curve(&self, entry: &CatalogueEntry, axis: Axis, node: [usize; 3], subsamples: usize) -> DiscreteCurve {
        let idx = self.scheme.anchor_index(axis);
        let start = self.get(node[0], node[1], node[2]);
        let end_node = {
            let mut e = node;
            e[axis.index()] += 1;
            e
        };
        let end = self.get(end_node[0], end_node[1], end_node[2]);
        if self.is_defining_edge(axis, node[0], node[1]) {
            segment_curve(entry, &self.lattice, axis, idx, node, start, end, subsamples)
        } else {
            connector_curve(entry, &self.lattice, axis, idx, node, start, end, subsamples)
        }
    }
}

/// Assemble the discrete dual on `Lₙ`: z-spine first, then each slice surface
/// translated so that its base value sits on the spine.
pub fn assemble(entry: &CatalogueEntry, lattice: &Lattice, scheme: Scheme) -> Result<DiscreteDualHypersurface> {
    check_nondegenerate(entry, lattice)?;
    let spine = z_spine(entry, lattice, scheme, 1);
    let np = lattice.n + 1;
    let slices: Vec<Vec<V4>> = (0..np)
        .into_par_iter()
        .map(|k| {
            let s = slice_surface(entry, lattice, k, scheme, 1);
            let w = spine.node_value(k);
            s.nodes.into_iter().map(|v| v + w).collect()
        })
        .collect();
    let mut values = Vec::with_capacity(lattice.node_count());
    for slice in slices {
        values.extend(slice);
    }
    Ok(DiscreteDualHypersurface { lattice: *lattice, scheme, values, z_spine: spine })
}

fn edge_params(lattice: &Lattice, axis: Axis, node: [usize; 3], subsamples: usize) -> (Vec<f64>, [f64; 2]) {
    let sub = subsamples.max(1);
    let l = node[axis.index()];
    let (t0, t1) = (lattice.coord(axis, l), lattice.coord(axis, l + 1));
    let params = (0..=sub).map(|s| if s == sub { t1 } else { t0 + (t1 - t0) * s as f64 / sub as f64 }).collect();
    let other = match axis {
        Axis::X => [node[1], node[2]],
        Axis::Y => [node[0], node[2]],
        Axis::Z => [node[0], node[1]],
    };
    (params, fixed_coords(lattice, axis, other))
}

#[allow(clippy::too_many_arguments)]
fn segment_curve(
    entry: &CatalogueEntry,
    lattice: &Lattice,
    axis: Axis,
    idx: usize,
    node: [usize; 3],
    start: V4,
    end: V4,
    subsamples: usize,
) -> DiscreteCurve {
    let (params, fixed) = edge_params(lattice, axis, node, subsamples);
    let a = Anchor::from_sample(&sample_node(entry, lattice, node));
    let last = params.len() - 1;
    let values = params
        .iter()
        .enumerate()
        .map(|(s, &t)| {
            if s == 0 {
                start
            } else if s == last {
                end
            } else {
                let q = entry.sample_at(point_on(axis, fixed, t));
                start + a.segment(idx, q.f, q.n)
            }
        })
        .collect();
    DiscreteCurve { axis, fixed, params, values, subsamples: subsamples.max(1) }
}

/// Connector value at parameter `t` of an edge with anchor `a`, end data `e`,
/// start value `start` and node difference `gap = end − start`.
fn connector_value(a: &Anchor, e: &Anchor, idx: usize, q: &FrameSample, w: f64, start: V4, gap: V4) -> V4 {
    let fwd = a.segment(idx, q.f, q.n);
    let bwd = a.hat_segment(idx, q.f, q.n, e);
    start + fwd * (1.0 - w) + (gap + bwd) * w
}

#[allow(clippy::too_many_arguments)]
fn connector_curve(
    entry: &CatalogueEntry,
    lattice: &Lattice,
    axis: Axis,
    idx: usize,
    node: [usize; 3],
    start: V4,
    end: V4,
    subsamples: usize,
) -> DiscreteCurve {
    let (params, fixed) = edge_params(lattice, axis, node, subsamples);
    let a = Anchor::from_sample(&sample_node(entry, lattice, node));
    let mut end_node = node;
    end_node[axis.index()] += 1;
    let e = Anchor::from_sample(&sample_node(entry, lattice, end_node));
    let (t0, t1) = (params[0], *params.last().unwrap());
    let gap = end - start;
    let values = params
        .iter()
        .map(|&t| {
            let q = entry.sample_at(point_on(axis, fixed, t));
            connector_value(&a, &e, idx, &q, (t - t0) / (t1 - t0), start, gap)
        })
        .collect();
    DiscreteCurve { axis, fixed, params, values, subsamples: subsamples.max(1) }
}

/// Connector on the y-edge `(x_i; y_j → y_{j+1})` of an `xbar` slice surface (`i ≥ 1`).
pub fn connector_v(entry: &CatalogueEntry, surface: &DiscreteDualSurface, i: usize, j: usize, subsamples: usize) -> DiscreteCurve {
    let lat = &surface.lattice;
    connector_curve(entry, lat, Axis::Y, 2, [i, j, surface.k], surface.node(i, j), surface.node(i, j + 1), subsamples)
}

/// Connector on the x-edge `(y_j; x_i → x_{i+1})` of a `yunder` slice surface (`j ≥ 1`).
pub fn connector_u(entry: &CatalogueEntry, surface: &DiscreteDualSurface, i: usize, j: usize, subsamples: usize) -> DiscreteCurve {
    let lat = &surface.lattice;
    connector_curve(entry, lat, Axis::X, 2, [i, j, surface.k], surface.node(i, j), surface.node(i + 1, j), subsamples)
}

/// Connector between the assembled nodes `(i,j,k)` and `(i,j,k+1)`.
pub fn connector_z(
    entry: &CatalogueEntry,
    hs: &DiscreteDualHypersurface,
    i: usize,
    j: usize,
    k: usize,
    subsamples: usize,
) -> DiscreteCurve {
    let idx = hs.scheme.anchor_index(Axis::Z);
    connector_curve(entry, &hs.lattice, Axis::Z, idx, [i, j, k], hs.get(i, j, k), hs.get(i, j, k + 1), subsamples)
}

/// Sup over the subsample parameters of one edge of
/// `|−seg(t) + seg^(t) + seg(t_end)|`: the forward and backward parallel
/// segments differ by a constant vector.
pub fn connector_constant_residual(
    entry: &CatalogueEntry,
    lattice: &Lattice,
    axis: Axis,
    idx: usize,
    node: [usize; 3],
    subsamples: usize,
) -> f64 {
    let (params, fixed) = edge_params(lattice, axis, node, subsamples);
    let a = Anchor::from_sample(&sample_node(entry, lattice, node));
    let mut end_node = node;
    end_node[axis.index()] += 1;
    let e = Anchor::from_sample(&sample_node(entry, lattice, end_node));
    let full = a.segment(idx, e.f, e.n);
    params
        .iter()
        .map(|&t| {
            let q = entry.sample_at(point_on(axis, fixed, t));
            (-a.segment(idx, q.f, q.n) + a.hat_segment(idx, q.f, q.n, &e) + full).norm()
        })
        .fold(0.0, f64::max)
}

/// Connector edges of an assembled hypersurface along `axis`, as start nodes.
pub fn connector_edges(hs: &DiscreteDualHypersurface, axis: Axis) -> Vec<[usize; 3]> {
    let n = hs.lattice.n;
    let mut out = Vec::new();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                let node = [i, j, k];
                if node[axis.index()] == n || hs.is_defining_edge(axis, i, j) {
                    continue;
                }
                out.push(node);
            }
        }
    }
    out
}

/// Sup over connector edges along `axis` of `|(end − start) − seg(t_end)|`:
/// how far the node difference is from the forward parallel segment.
pub fn connector_gap(entry: &CatalogueEntry, hs: &DiscreteDualHypersurface, axis: Axis) -> f64 {
    let idx = hs.scheme.anchor_index(axis);
    let lat = hs.lattice;
    connector_edges(hs, axis)
        .par_iter()
        .map(|&node| {
            let a = Anchor::from_sample(&sample_node(entry, &lat, node));
            let mut e = node;
            e[axis.index()] += 1;
            let end = sample_node(entry, &lat, e);
            let gap = hs.get(e[0], e[1], e[2]) - hs.get(node[0], node[1], node[2]);
            (gap - a.segment(idx, end.f, end.n)).norm()
        })
        .reduce(|| 0.0, f64::max)
}

/// Sup over connector edges along `axis` (every `stride`-th edge) of the
/// deviation between the connector tangent and the dual tangent `σ f_axis`, at
/// the quarter points of each edge.
pub fn connector_tangent_deviation(entry: &CatalogueEntry, hs: &DiscreteDualHypersurface, axis: Axis, stride: usize) -> f64 {
    let idx = hs.scheme.anchor_index(axis);
    let lat = hs.lattice;
    let edges: Vec<[usize; 3]> = connector_edges(hs, axis).into_iter().step_by(stride.max(1)).collect();
    edges
        .par_iter()
        .map(|&node| {
            let a = Anchor::from_sample(&sample_node(entry, &lat, node));
            let mut en = node;
            en[axis.index()] += 1;
            let e = Anchor::from_sample(&sample_node(entry, &lat, en));
            let start = hs.get(node[0], node[1], node[2]);
            let gap = hs.get(en[0], en[1], en[2]) - start;
            let (params, fixed) = edge_params(&lat, axis, node, 4);
            let (t0, t1) = (params[0], params[4]);
            let h = (t1 - t0) / 64.0;
            params[1..4]
                .iter()
                .map(|&t| {
                    let value = |s: f64| {
                        let q = entry.sample_at(point_on(axis, fixed, t + s));
                        connector_value(&a, &e, idx, &q, (t + s - t0) / (t1 - t0), start, gap)
                    };
                    let d = fd1_lin(value, h);
                    let q = entry.sample_at(point_on(axis, fixed, t));
                    let exact = q.tangent(axis) * fields::sigmas(&q)[axis.index()];
                    (d - exact).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
