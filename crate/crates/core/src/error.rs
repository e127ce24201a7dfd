/// Errors raised by the space, packing, net, transfer and verification layers.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("distance table is not symmetric: d({a},{b}) = {ab} but d({b},{a}) = {ba}")]
    SymmetryViolation { a: u64, b: u64, ab: f64, ba: f64 },

    #[error("distinct points {a} and {b} are at distance zero")]
    DegeneratePair { a: u64, b: u64 },

    #[error("invalid distance entry d({a},{b}) = {value}")]
    InvalidDistance { a: u64, b: u64, value: f64 },

    #[error("contraction ratio {0} is outside (0, 1/2]")]
    InvalidRatio(f64),

    #[error("interval [{0}, {1}] is empty")]
    InvalidInterval(f64, f64),

    #[error("spaces use incompatible metric rules: {0}")]
    MetricMismatch(String),

    #[error("malformed space: {0}")]
    InvalidSpace(String),

    #[error("exact packing oracle capped at {cap} points, ball has {size}")]
    OracleTooLarge { size: usize, cap: usize },

    #[error("scan resolution must be positive, got {0}")]
    InvalidResolution(f64),

    #[error("invalid exponents: {0}")]
    InvalidExponents(String),

    #[error("invalid constant: {0}")]
    InvalidConstant(String),

    #[error("scale base {a} must exceed the quasi-triangle constant {c_d}")]
    ScaleTooSmall { a: f64, c_d: f64 },

    #[error("net point {parent} at level {level} has no children")]
    PartitionBroken { level: usize, parent: u64 },

    #[error(
        "comparability hypothesis fails at level {level}: mass {heavy_mass} at {heavy} exceeds \
         {c1} x {light_mass} at {light} (distance {distance})"
    )]
    HypothesisViolation {
        level: usize,
        heavy: u64,
        light: u64,
        heavy_mass: f64,
        light_mass: f64,
        c1: f64,
        distance: f64,
    },

    #[error("measure is not fully supported: point {0} carries no mass")]
    UnsupportedMeasure(u64),

    #[error("profile has no observations")]
    EmptyProfile,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("document error: {0}")]
    Document(String),
}

impl Error {
    /// True for failures of a mathematical precondition (as opposed to bad
    /// input or configuration).
    pub fn is_precondition_failure(&self) -> bool {
        matches!(
            self,
            Error::HypothesisViolation { .. }
                | Error::UnsupportedMeasure(_)
                | Error::PartitionBroken { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
