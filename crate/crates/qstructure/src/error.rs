use thiserror::Error;

/// Errors raised by the analysis routines.
///
/// Every variant belongs to exactly one module; [`Error::module`] reports it so
/// front ends can attach provenance to failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not close to an orthogonal projection (deviation {deviation:.3e})")]
    NotNearProjection { deviation: f64 },
    #[error("non-finite matrix entry in {context}")]
    NonFinite { context: String },

    #[error("empty Kraus list")]
    EmptyKraus,
    #[error("channel is not unital: |sum V*V - I| = {defect:.3e}")]
    NotUnital { defect: f64 },
    #[error("map is not completely positive: Choi eigenvalue {min_eigenvalue:.3e}")]
    NotCp { min_eigenvalue: f64 },

    #[error("subspace is not a *-algebra (closure defect {defect:.3e})")]
    NotAlgebra { defect: f64 },
    #[error("no random element with separated spectrum after {attempts} draws (seed {seed})")]
    DegenerateRandomElement { seed: u64, attempts: usize },
    #[error("block state is not faithful (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotFaithful { min_eigenvalue: f64 },

    #[error("channel has no faithful invariant state")]
    NoFaithfulInvariantState,
    #[error("no invariant state found")]
    NoInvariantState,
    #[error(
        "peripheral eigenvalue {re:.6}{im:+.6}i is defective (algebraic {algebraic}, geometric {geometric})"
    )]
    PeripheralJordanBlock { re: f64, im: f64, algebraic: usize, geometric: usize },
    #[error("Cesaro averages disagree with the spectral projection: {discrepancy:.3e} after {steps} steps")]
    CesaroNotConverged { discrepancy: f64, steps: usize },
    #[error("intersection chain did not stabilize; dimensions {dims:?}")]
    NoStabilization { dims: Vec<usize> },

    #[error("peripheral eigenvalues are not the group of roots of unity of order {order}")]
    NotRootsOfUnity { order: usize },
    #[error("peripheral eigenvalue has multiplicity {multiplicity} in an irreducible channel")]
    NotSimple { multiplicity: usize },
    #[error("channel does not permute the minimal central projections (defect {defect:.3e})")]
    OrbitNotClosed { defect: f64 },
    #[error("isomorphism solve failed with residual {residual:.3e}")]
    IsomorphismSolveFailed { residual: f64 },
    #[error("structured Kraus reconstruction mismatch {residual:.3e}")]
    ReconstructionMismatch { residual: f64 },
    #[error("central projections of the fixed-point algebra not reproduced (defect {defect:.3e})")]
    CenterMismatch { defect: f64 },

    #[error("column {column} is not normalized (defect {defect:.3e})")]
    ColumnNotNormalized { column: usize, defect: f64 },
    #[error("transition ({to}, {from}) has the wrong shape")]
    BlockDimensionMismatch { to: usize, from: usize },
    #[error("operator {index} is not unitary")]
    NotUnitary { index: usize },
    #[error("walk is not homogeneous")]
    NotHomogeneous,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            DimensionMismatch { .. } | NotNearProjection { .. } | NonFinite { .. } => "numerics",
            EmptyKraus | NotUnital { .. } | NotCp { .. } => "channel",
            NotAlgebra { .. } | DegenerateRandomElement { .. } | NotFaithful { .. } => "algebra",
            NoFaithfulInvariantState
            | NoInvariantState
            | PeripheralJordanBlock { .. }
            | CesaroNotConverged { .. }
            | NoStabilization { .. } => "structure",
            NotRootsOfUnity { .. }
            | NotSimple { .. }
            | OrbitNotClosed { .. }
            | IsomorphismSolveFailed { .. }
            | ReconstructionMismatch { .. }
            | CenterMismatch { .. } => "cycles",
            ColumnNotNormalized { .. }
            | BlockDimensionMismatch { .. }
            | NotUnitary { .. }
            | NotHomogeneous => "oqrw",
            InvalidParameter(_) => "input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
