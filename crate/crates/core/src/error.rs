use thiserror::Error;

/// Errors raised by the laboratory's computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point ({re}, {im}) is not strictly inside the unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("denominator too close to zero near the boundary: {context}")]
    BoundaryProximity { context: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lattice would exceed {cap} points (r = {r}, coverage radius = {coverage})")]
    LatticeTooLarge { cap: usize, r: f64, coverage: f64 },

    #[error("non-finite integrand value at node ({re}, {im})")]
    NonFiniteIntegrand { re: f64, im: f64 },

    #[error("symbol is not a self-map of the disk: |s({re}, {im})| = {modulus}")]
    NotSelfMap { re: f64, im: f64, modulus: f64 },

    #[error("derivative order {order} unsupported for {repr}")]
    OrderOverflow { order: usize, repr: &'static str },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("truncation tail {tail:e} exceeds tolerance {tol:e}")]
    TruncationTail { tail: f64, tol: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
