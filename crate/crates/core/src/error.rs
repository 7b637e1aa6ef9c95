use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A map or curve lookup fell outside the tabulated envelope.
    #[error("{quantity} = {value} outside envelope [{min}, {max}]")]
    Envelope {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Engine torque request above the external characteristic curve.
    #[error("engine torque {torque} N·m exceeds max torque {limit} N·m at {speed} rpm")]
    AboveTorqueCurve { speed: f64, torque: f64, limit: f64 },

    /// Battery asked to deliver more than the internal-resistance model allows.
    #[error("battery power {power_kw} kW infeasible: negative discriminant")]
    InfeasiblePower { power_kw: f64 },

    /// Invalid model or solver configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Judgment-matrix validation failure at 0-based position `(row, col)`.
    #[error("judgment matrix invalid at ({row}, {col}): {reason}")]
    Judgment {
        row: usize,
        col: usize,
        reason: &'static str,
    },

    #[error("random index table only covers orders 1..=15, got {0}")]
    UnsupportedOrder(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("negative speed {0} km/h")]
    NegativeSpeed(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// Exhaustive reference refused because the search space is too large.
    #[error("instance too large for exhaustive search ({paths} paths > {limit})")]
    TooLarge { paths: f64, limit: f64 },

    /// Forward rollout reached a state without any feasible action.
    #[error("dead end at stage {stage}, soc {soc}")]
    DeadEnd { stage: usize, soc: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
