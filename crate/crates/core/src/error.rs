use conic::SolverError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("curve needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("zero-length edge between vertices {0} and {1}")]
    DegenerateEdge(usize, usize),
    #[error("neighbours of vertex {0} coincide")]
    DegenerateChord(usize),
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
    #[error("need {needed} spectrum coefficients, have {available}")]
    ModeMismatch { needed: usize, available: usize },
    #[error("mean coefficient must be real, got imaginary part {0:e}")]
    ComplexMean(f64),
    #[error("anisotropy is not positive at nu = {0}")]
    NonpositiveSigma(f64),
    #[error("Wulff area {0:e} is not positive")]
    NonpositiveWulffArea(f64),
    #[error("scale factor {0} is not positive")]
    NonpositiveScale(f64),
    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("no positive semidefinite certificate exists (best margin {0:e})")]
    Infeasible(f64),
    #[error("spectrum is degenerate: c0 = {0}")]
    DegenerateSpectrum(f64),
    #[error("x^T P0 x vanishes at the relaxed point")]
    ZeroDenominator,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("solver failed: {0}")]
    Solver(#[from] SolverError),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Self::TooFewVertices(_) => "TooFewVertices",
            Self::DegenerateEdge(..) => "DegenerateEdge",
            Self::DegenerateChord(_) => "DegenerateChord",
            Self::NonFinite(_) => "NonFinite",
            Self::ModeMismatch { .. } => "ModeMismatch",
            Self::ComplexMean(_) => "ComplexMean",
            Self::NonpositiveSigma(_) => "NonpositiveSigma",
            Self::NonpositiveWulffArea(_) => "NegativeWulffArea",
            Self::NonpositiveScale(_) => "NonpositiveScale",
            Self::NotHermitian(_) => "NotHermitian",
            Self::Infeasible(_) => "Infeasible",
            Self::DegenerateSpectrum(_) => "DegenerateSpectrum",
            Self::ZeroDenominator => "ZeroDenominator",
            Self::InvalidProblem(_) => "InvalidProblem",
            Self::Solver(_) => "SolverFailure",
            Self::Parse(_) => "Parse",
            Self::Io(_) => "Io",
            Self::Json(_) => "Json",
            Self::Csv(_) => "Csv",
        }
    }

    /// Failures of the numerical solve, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Self::Solver(_) | Self::NonpositiveWulffArea(_) | Self::ZeroDenominator)
    }
}
