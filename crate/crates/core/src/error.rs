use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid energy profile: {0}")]
    InvalidProfile(String),
    #[error("invalid feature counts: {0}")]
    InvalidCounts(String),
    #[error("need at least {params} samples for {params} free parameters, got {samples}")]
    TooFewSamples { samples: usize, params: usize },
    #[error("parameters without any non-zero feature count: {}", .params.join(", "))]
    Unidentifiable { params: Vec<String> },
    #[error("rank-deficient design (rank {rank}); not separable: {}", .params.join(", "))]
    RankDeficient { rank: usize, params: Vec<String> },
    #[error("unsupported block size {0}")]
    UnsupportedSize(usize),
    #[error("QP {0} outside [0, 51]")]
    QpOutOfRange(i64),
    #[error("bad frame dimensions {width}x{height}: {reason}")]
    Dimensions {
        width: usize,
        height: usize,
        reason: &'static str,
    },
    #[error("truncated stream at byte offset {offset}")]
    Truncated { offset: usize },
    #[error("malformed bitstream: {0}")]
    Bitstream(String),
    #[error("PSNR undefined: reconstruction is lossless")]
    Lossless,
    #[error("PSNR values are not strictly monotone along the curve")]
    NonMonotonePsnr,
    #[error("curves have no overlapping PSNR range")]
    EmptyOverlap,
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
