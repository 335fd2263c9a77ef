use thiserror::Error;

/// I or Q half of a complex correlator vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Component {
    InPhase,
    Quadrature,
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Component::InPhase => f.write_str("I"),
            Component::Quadrature => f.write_str("Q"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(
        "solver did not converge after {sweeps} sweeps (KKT residual {residual:e}){}",
        location_suffix(*component, *sub_dictionary)
    )]
    NonConvergence {
        sweeps: usize,
        residual: f64,
        last_iterate: Vec<f64>,
        component: Option<Component>,
        /// 1-based index K of the de-interleaved sub-dictionary.
        sub_dictionary: Option<usize>,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn location_suffix(component: Option<Component>, k: Option<usize>) -> String {
    match (component, k) {
        (Some(c), Some(k)) => format!(" in component {c} of sub-dictionary K={k}"),
        (Some(c), None) => format!(" in component {c}"),
        (None, Some(k)) => format!(" in sub-dictionary K={k}"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// Tags a solver failure with the I/Q component it came from.
    pub fn in_component(self, c: Component) -> Self {
        match self {
            Error::NonConvergence {
                sweeps,
                residual,
                last_iterate,
                sub_dictionary,
                ..
            } => Error::NonConvergence {
                sweeps,
                residual,
                last_iterate,
                component: Some(c),
                sub_dictionary,
            },
            other => other,
        }
    }

    /// Tags a solver failure with the sub-dictionary index K (1-based).
    pub fn in_sub_dictionary(self, k: usize) -> Self {
        match self {
            Error::NonConvergence {
                sweeps,
                residual,
                last_iterate,
                component,
                ..
            } => Error::NonConvergence {
                sweeps,
                residual,
                last_iterate,
                component,
                sub_dictionary: Some(k),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
