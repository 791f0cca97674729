use thiserror::Error;

/// Errors raised by the measure, cube, decomposition and operator layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("density has {got} values but the measure has {expected} atoms")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid growth profile: {0}")]
    InvalidGrowth(String),

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("invalid cube: {0}")]
    InvalidCube(String),

    #[error("invalid doubling parameters: {0}")]
    InvalidDoublingParams(String),

    #[error("point is not an atom of the measure")]
    NotAnAtom,

    #[error("doubling search exceeded {cap} dilations; the growth bound is violated")]
    IterationCap { cap: usize },

    #[error("cubes are not concentric")]
    NotConcentric,

    #[error("lambda = {lambda} is not admissible: it must exceed {floor}")]
    InadmissibleLambda { lambda: f64, floor: f64 },

    #[error("no stopping scale exists for atom {atom}")]
    NoStoppingScale { atom: usize },

    #[error("measured overlap {measured} exceeds the configured bound {bound}")]
    OverlapExceeded { measured: usize, bound: usize },

    #[error("cube from annulus {annulus} is not confined with N = {n}, N' = {n_prime}")]
    ConfinementViolation {
        annulus: usize,
        n: usize,
        n_prime: usize,
    },

    #[error("support set of part {part} has mass {mass} < half of mu(R) = {half}")]
    SupportTooSmall { part: usize, mass: f64, half: f64 },

    #[error("truncation radius {eps} is below the resolution floor r_min = {r_min}")]
    EpsilonBelowResolution { eps: f64, r_min: f64 },

    #[error("kernel evaluated on the diagonal")]
    Diagonal,

    #[error("kernel {kernel} is not defined in dimension {dim}")]
    KernelDimension { kernel: &'static str, dim: usize },

    #[error("L1 norm must be positive, got {0}")]
    NonPositiveNorm(f64),

    #[error("invalid generator spec: {0}")]
    InvalidGenerator(String),

    #[error("growth verification failed: worst ratio {worst_ratio} exceeds C0 = {c0}")]
    GrowthViolated { worst_ratio: f64, c0: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("decomposition invariant `{condition}` failed at lambda = {lambda} (seed {seed}, {atoms} atoms)")]
    InvariantFailed {
        condition: String,
        lambda: f64,
        seed: u64,
        atoms: usize,
    },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("JSON error: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
