//! R⁴ → R³ projections and polyline writers (OBJ and ASCII PLY).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discrete_dual::DiscreteDualHypersurface;
use crate::lattice::{Axis, V4};
use crate::samplers::CatalogueEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Forget the fourth coordinate.
    DropW,
    /// Central projection from a pole far above the data in the `w` direction
    /// onto the hyperplane through the data's centre.
    Stereographic,
}

impl std::str::FromStr for Projection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "drop_w" => Ok(Projection::DropW),
            "stereographic" => Ok(Projection::Stereographic),
            other => Err(format!("unknown projection `{other}` (expected drop_w or stereographic)")),
        }
    }
}

/// Distance of the projection pole from the data's bounding box, in units of `scale`.
pub const POLE_DISTANCE: f64 = 10.0;

/// Project all polylines with one common map so that they stay consistent.
pub fn project_polylines(lines: &[Vec<V4>], mode: Projection, scale: f64) -> Vec<Vec<[f64; 3]>> {
    match mode {
        Projection::DropW => lines.iter().map(|l| l.iter().map(|p| [p[0], p[1], p[2]]).collect()).collect(),
        Projection::Stereographic => {
            let mut lo = [f64::INFINITY; 4];
            let mut hi = [f64::NEG_INFINITY; 4];
            for p in lines.iter().flatten() {
                for a in 0..4 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
            if !lo[0].is_finite() {
                return lines.iter().map(|_| Vec::new()).collect();
            }
            let centre: [f64; 4] = std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]));
            let pole_w = hi[3] + POLE_DISTANCE * scale.abs().max(f64::MIN_POSITIVE);
            let depth = pole_w - centre[3];
            lines
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|p| {
                            let t = depth / (pole_w - p[3]);
                            std::array::from_fn(|a| centre[a] + (p[a] - centre[a]) * t)
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Polylines of slice `k`: every x-line and every y-line of the slice, each
/// edge sampled with `subsamples` intervals (defining segments or connectors).
pub fn slice_polylines(entry: &CatalogueEntry, hs: &DiscreteDualHypersurface, k: usize, subsamples: usize) -> Vec<Vec<V4>> {
    let n = hs.lattice.n;
    let mut out = Vec::with_capacity(2 * (n + 1));
    for axis in [Axis::X, Axis::Y] {
        for l in 0..=n {
            let mut line: Vec<V4> = Vec::with_capacity(n * subsamples + 1);
            for c in 0..n {
                let node = match axis {
                    Axis::X => [c, l, k],
                    _ => [l, c, k],
                };
                let curve = hs.edge_curve(entry, axis, node, subsamples);
                let skip = usize::from(c > 0);
                line.extend(curve.values.into_iter().skip(skip));
            }
            out.push(line);
        }
    }
    out
}

/// Wavefront OBJ: all vertices, then one `l` element per polyline (1-based indices).
pub fn write_obj(lines: &[Vec<[f64; 3]>], mut w: impl Write) -> std::io::Result<()> {
    for p in lines.iter().flatten() {
        writeln!(w, "v {} {} {}", p[0], p[1], p[2])?;
    }
    let mut next = 1usize;
    for l in lines {
        if l.is_empty() {
            continue;
        }
        write!(w, "l")?;
        for i in 0..l.len() {
            write!(w, " {}", next + i)?;
        }
        writeln!(w)?;
        next += l.len();
    }
    Ok(())
}

/// ASCII PLY with a vertex element and an edge element per consecutive pair.
pub fn write_ply(lines: &[Vec<[f64; 3]>], mut w: impl Write) -> std::io::Result<()> {
    let nv: usize = lines.iter().map(Vec::len).sum();
    let ne: usize = lines.iter().map(|l| l.len().saturating_sub(1)).sum();
    writeln!(w, "ply\nformat ascii 1.0")?;
    writeln!(w, "element vertex {nv}\nproperty double x\nproperty double y\nproperty double z")?;
    writeln!(w, "element edge {ne}\nproperty int vertex1\nproperty int vertex2\nend_header")?;
    for p in lines.iter().flatten() {
        writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
    }
    let mut base = 0usize;
    for l in lines {
        for i in 1..l.len() {
            writeln!(w, "{} {}", base + i - 1, base + i)?;
        }
        base += l.len();
    }
    Ok(())
}
