use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("required axis set is empty")]
    EmptyAxisSet,
    #[error("functional interval for axis `{axis}` has zero length")]
    DegenerateInterval { axis: String },
    #[error("no functional interval for required axis `{axis}`")]
    MissingInterval { axis: String },
    #[error("invalid interval [{lo}, {hi}]: lo must not exceed hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("band has no samples")]
    EmptyBand,
    #[error("band {task}/{joint} has no positive human power; all weights are zero")]
    DegenerateBand { task: String, joint: String },
    #[error("torque cannot be derived from power at omega = 0; supply torque_hum directly")]
    ZeroRate,
    #[error("grid has no bins")]
    EmptyGrid,
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error("invalid range for {what}: [{lo}, {hi}]")]
    InvalidRange { what: String, lo: f64, hi: f64 },

    #[error("no capability sample for joint `{joint}` at q = {q} deg, omega = {omega} rad/s")]
    SampleMismatch { joint: String, q: f64, omega: f64 },
    #[error("duplicate sample at q = {q} deg, omega = {omega} rad/s")]
    DuplicateSample { q: f64, omega: f64 },
    #[error("capability map for `{joint}` has no measurement conditions")]
    MissingConditions { joint: String },
    #[error("every band sample has zero {what} demand; no margin ratio is defined")]
    ZeroDemand { what: String },
    #[error("requirement must be positive, got {value}")]
    ZeroRequirement { value: f64 },
    #[error("target must be positive, got {value}")]
    ZeroTarget { value: f64 },

    #[error("only {cycles:.2} cycles at {freq_hz} Hz; at least 5 are required")]
    InsufficientCycles { freq_hz: f64, cycles: f64 },
    #[error("{freq_hz} Hz is not below a tenth of the {sample_rate_hz} Hz sample rate")]
    AliasedFrequency { freq_hz: f64, sample_rate_hz: f64 },
    #[error("sample rate {sample_rate_hz} Hz is below the 1 kHz minimum")]
    LowSampleRate { sample_rate_hz: f64 },
    #[error("friction regressors are rank deficient: {0}")]
    RankDeficient(String),
    #[error("insufficient excitation: {0}")]
    InsufficientExcitation(String),
    #[error("plateau window {window_s} s exceeds the log span {span_s} s")]
    WindowTooLong { window_s: f64, span_s: f64 },
    #[error("electrical power must be positive, got {value} W")]
    NonpositiveElectrical { value: f64 },

    #[error("{what} sums to {sum}, expected 1")]
    WeightSumViolation { what: String, sum: f64 },
    #[error("{what} is negative ({value})")]
    NegativeWeight { what: String, value: f64 },
    #[error("task `{task}` has no score for joint `{joint}`")]
    MissingJoint { task: String, joint: String },
    #[error("configuration incomplete: {0}")]
    ConfigIncomplete(String),
    #[error("critical task set is empty")]
    EmptyCriticalSet,
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("guardrail violations: {}", .0.join("; "))]
    GuardrailViolation(Vec<String>),
    #[error("missing section `{0}`")]
    MissingSection(String),
    #[error("incomplete analyses, absent artifacts: {}", .0.join(", "))]
    IncompleteAnalyses(Vec<String>),
    #[error("preregistration binding failed: {}", .0.join("; "))]
    BindingFailed(Vec<String>),
    #[error("quality check failed: {0}")]
    QcFailed(String),
    #[error("unknown joint `{0}`")]
    UnknownJoint(String),
    #[error("golden mismatch in {} cell(s): {}", .0.len(), .0.join("; "))]
    GoldenMismatch(Vec<String>),

    #[error("invalid value for {name}: {value} ({rule})")]
    InvalidParameter { name: String, value: f64, rule: String },
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{0}")]
    Io(String),
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: Box<Error> },
}

impl Error {
    pub fn in_file(self, path: impl Into<PathBuf>) -> Error {
        match self {
            e @ Error::InFile { .. } => e,
            e => Error::InFile { path: path.into(), source: Box::new(e) },
        }
    }

    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 2 validation, 3 data, 4 golden mismatch.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::GoldenMismatch(_) => 4,
            Error::WeightSumViolation { .. }
            | Error::NegativeWeight { .. }
            | Error::MissingSection(_)
            | Error::ConfigIncomplete(_)
            | Error::EmptyCriticalSet
            | Error::UnknownTask(_)
            | Error::GuardrailViolation(_)
            | Error::BindingFailed(_)
            | Error::UnknownJoint(_)
            | Error::InvalidParameter { .. }
            | Error::ZeroTarget { .. }
            | Error::ZeroRequirement { .. } => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
