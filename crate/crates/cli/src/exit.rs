use std::process::ExitCode;

use actuator_thermal::Error;

/// How a run ended; each variant has its own process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Unexpected failure.
    Internal,
    /// Bad arguments, unreadable or malformed files, unusable data.
    Input,
    /// Recovery did not finish within its time budget.
    Timeout,
    /// No contact-consistent or actuatable solution exists.
    Infeasible,
}

impl Outcome {
    pub fn status(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Internal => 1,
            Outcome::Input => 2,
            Outcome::Timeout => 3,
            Outcome::Infeasible => 4,
        }
    }

    pub fn code(self) -> ExitCode {
        ExitCode::from(self.status())
    }
}

pub fn classify_core(e: &Error) -> Outcome {
    match e {
        Error::InvalidStart { .. }
        | Error::InfeasibleCommand { .. }
        | Error::NoStrategy(_)
        | Error::ActuationDeficiency { .. }
        | Error::Singularity { .. } => Outcome::Infeasible,
        Error::InvalidInput(_)
        | Error::DegenerateData { .. }
        | Error::StepSize { .. }
        | Error::FitRejected(_)
        | Error::Schema { .. }
        | Error::Topology(_)
        | Error::UnknownFrame(_)
        | Error::UnknownNode { .. }
        | Error::Io { .. }
        | Error::Csv(_)
        | Error::Parse { .. } => Outcome::Input,
    }
}

pub fn classify(err: &anyhow::Error) -> Outcome {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return classify_core(e);
        }
        if cause.is::<std::io::Error>() || cause.is::<toml::de::Error>() {
            return Outcome::Input;
        }
    }
    Outcome::Internal
}
