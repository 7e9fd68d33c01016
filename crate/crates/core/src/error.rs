use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("data length {len} does not match {width}x{height}")]
    DataLength {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("image must have non-zero dimensions, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },

    #[error("non-finite sample at ({x}, {y})")]
    NonFiniteSample { x: usize, y: usize },

    #[error("sample {value} at ({x}, {y}) is outside [0, {max}]")]
    SampleOutOfRange {
        x: usize,
        y: usize,
        value: f64,
        max: f64,
    },

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("image {width}x{height} is smaller than the {window}x{window} window")]
    ImageTooSmall {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error("window size must be odd and at least 1, got {0}")]
    InvalidWindow(usize),

    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{count} undefined pixel(s) in SSIM map, first at ({x}, {y})")]
    UndefinedPixels { count: usize, x: usize, y: usize },

    #[error("all {0} pixels of the SSIM map are undefined; nothing to pool")]
    AllUndefined(usize),

    #[error("map value {value} at ({x}, {y}) is outside [-1, 1]")]
    ValueOutOfRange { x: usize, y: usize, value: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("target {target} is unreachable: {reason}")]
    Unreachable { target: f64, reason: String },

    #[error("malformed pattern spec: {0}")]
    PatternSpec(String),
}
