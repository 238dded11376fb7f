//! Dual hypersurfaces of generic conformally flat hypersurfaces in R⁴.
//!
//! A hypersurface is described in canonical principal-curvature-line
//! coordinates `(x, y, z)` by its Guichard data: the conformal factor `P`,
//! the angle `φ` of the Guichard net `cos²φ dx² + sin²φ dy² + dz²`, the middle
//! principal curvature `κ₃` and an orthonormal frame `(X_α, X_β, X_γ, N)`.
//! Its dual `f*` is defined up to translation by `df* = df ∘ S`, with `S` the
//! Schouten tensor.
//!
//! Modules:
//! - [`lattice`]: cube domains, the lattice `Lₙ`, frame samples and the bound constants C₁, C₂;
//! - [`samplers`]: the analytic catalogue (pseudosphere cylinder, inversions, motions) and structure checks;
//! - [`invariants`]: curvatures, Schouten eigenvalues, dual quantities, invariant maps, cusp detection;
//! - [`reference_dual`]: quadrature oracle for `f*`;
//! - [`discrete_dual`]: the two discrete dual constructions and their connector curves;
//! - [`convergence`]: sweeps, slope fits and the cusp experiment;
//! - [`export`]: projections to R³ and OBJ/PLY writers.

pub mod convergence;
pub mod discrete_dual;
pub mod error;
pub mod export;
pub mod invariants;
pub mod lattice;
pub mod numerics;
pub mod reference_dual;
pub mod samplers;

pub use error::{CfhError, Result};
pub use lattice::{build_domain, build_lattice, Axis, BoundConstants, Domain, FrameSample, Lattice, V4};
pub use samplers::CatalogueEntry;
