use thiserror::Error;

/// Errors raised by the library. Variants group by the kind of caller mistake
/// so the command-line front end can map them onto exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid construction of a geometric or functional object.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Space parameters (p, q, s, M) outside their admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Discretisation settings that cannot resolve the requested object.
    #[error("configuration error: {0}")]
    Config(String),

    /// The operator is not known to be a contraction.
    #[error("contraction hypothesis violated: max sup|S_i| = {max_sup} >= 1")]
    Contraction { max_sup: f64 },

    /// An address chain left every subdomain before the requested depth.
    #[error("address composition left the domain of map {piece} after a valid prefix of length {valid_prefix}")]
    AddressExit { piece: usize, valid_prefix: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
