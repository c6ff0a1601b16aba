use core::fmt;

/// Errors raised by the positioning model.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A point sits in the camera's focal plane (`Z = 0`), or an LED shares the
    /// camera height where a positive depth is required.
    DegenerateDepth,
    /// The point projects from behind the camera.
    BehindCamera,
    EmptyScene,
    /// Every singular value fell under the rank tolerance.
    RankZero,
    NoValidPose,
    /// The closed-form metric disagrees with itself beyond round-off.
    NumericalConsistency { what: &'static str, value: f64 },
    UnsupportedKind,
    NoCapturedLeds,
    EmptyObservations,
    InvalidGrid(&'static str),
    InsufficientData { needed: usize, got: usize },
    NonPositiveX,
    SingularDesign,
    InfeasibleSpacing,
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegenerateDepth => f.write_str("degenerate depth: point lies in the camera plane"),
            Error::BehindCamera => f.write_str("point is behind the camera"),
            Error::EmptyScene => f.write_str("scene contains no LEDs"),
            Error::RankZero => f.write_str("jacobian has no singular value above tolerance"),
            Error::NoValidPose => f.write_str("no pose in the grid captures at least three LEDs"),
            Error::NumericalConsistency { what, value } => {
                write!(f, "numerical consistency check failed: {what} = {value:e}")
            }
            Error::UnsupportedKind => f.write_str("layout kind not supported by this operation"),
            Error::NoCapturedLeds => f.write_str("camera captures no LEDs"),
            Error::EmptyObservations => f.write_str("no observations"),
            Error::InvalidGrid(why) => write!(f, "invalid grid: {why}"),
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: need {needed} points, got {got}")
            }
            Error::NonPositiveX => f.write_str("regressor must be strictly positive"),
            Error::SingularDesign => f.write_str("design matrix is singular"),
            Error::InfeasibleSpacing => f.write_str("LED rows/columns do not fit at the minimum spacing"),
            Error::InvalidParameter(why) => write!(f, "invalid parameter: {why}"),
        }
    }
}

impl core::error::Error for Error {}
