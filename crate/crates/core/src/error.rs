use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An aging function was evaluated before its reference slot.
    #[error("slot {t} precedes reference slot {reference}")]
    SlotBeforeReference { t: f64, reference: f64 },

    #[error("device {0} has no pending message")]
    InactiveDevice(usize),

    #[error("{name} = {value} is not a probability")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("message needs {requested} resource blocks but only 1..={max} are allowed")]
    InvalidRbCount { requested: usize, max: usize },

    #[error("malformed resource-block assignment: {0}")]
    MalformedAssignment(String),

    /// Operation is only defined when every device sees every active device.
    #[error("{0} requires full information")]
    PartialInformation(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
}
