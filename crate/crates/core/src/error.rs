use thiserror::Error;

/// Every failure the library can report. The variant name leads each message so
/// that command-line users can grep for it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfhError {
    #[error("UnequalSides: side lengths {0:?} differ; the domain must be a cube")]
    UnequalSides([f64; 3]),
    #[error("InvalidN: lattice resolution must be at least 1 (got {0})")]
    InvalidN(usize),
    #[error("SingularSample: {0}")]
    SingularSample(String),
    #[error("InvalidWindow: {0}")]
    InvalidWindow(String),
    #[error("CenterTooClose: min |f - q| = {0:e} on the grid")]
    CenterTooClose(f64),
    #[error("NotOrthogonal: rotation deviates from SO(4) by {0:e}")]
    NotOrthogonal(f64),
    #[error("DegenerateAngle: |sin(phi) cos(phi)| = {0:e}")]
    DegenerateAngle(f64),
    #[error("UndefinedInvD: sigma_{0} vanishes at the point")]
    UndefinedInvD(usize),
    #[error("Unsupported: {0}")]
    Unsupported(String),
    #[error("PartialForm: only the sigma_3 f part is available; {0} is unresolved")]
    PartialForm(String),
    #[error("DegenerateRegion: det S vanishes near ({0}, {1}, {2})")]
    DegenerateRegion(f64, f64, f64),
    #[error("NonPositiveError: {0} non-positive error value(s) in slope fit")]
    NonPositiveError(usize),
    #[error("NoDegeneratePoint: no transversal sign change of sigma_1 on the scanned x-lines")]
    NoDegeneratePoint,
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, CfhError>;
