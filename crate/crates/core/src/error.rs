use thiserror::Error;

use crate::element::Element;
use crate::equivariance::NonexistenceCertificate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a bijection: {0}")]
    NotABijection(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("size mismatch: |A| = {left}, |B| = {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("fiber over {base} has {found} elements, expected {expected}")]
    FiberSizeError {
        base: Element,
        expected: usize,
        found: usize,
    },
    #[error("fibers overlap at {0}")]
    FibersOverlap(Element),
    #[error("duplicate element {0}")]
    DuplicateElement(Element),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("arity must be positive")]
    ZeroArity,

    /// The divider ended with unmatched elements. Never repaired silently.
    #[error("incomplete matching: unmatched {unmatched:?}")]
    IncompleteMatching { unmatched: Vec<Element> },

    #[error("oracle violated its contract: {0}")]
    OracleViolation(String),
    /// The oracle proved that no symmetric answer exists.
    #[error("no equivariant divider exists for this instance")]
    NoEquivariantDivider(Box<NonexistenceCertificate>),

    #[error("size bound exceeded: {size} > {bound}")]
    SizeBoundExceeded { size: usize, bound: usize },
    #[error("enumeration budget exceeded: {needed} instances > budget {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
}

impl Error {
    /// Malformed input, as opposed to a contract failure of an operation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotABijection(_)
                | Error::ArityMismatch(_)
                | Error::SizeMismatch { .. }
                | Error::FiberSizeError { .. }
                | Error::FibersOverlap(_)
                | Error::DuplicateElement(_)
                | Error::DomainMismatch(_)
                | Error::ZeroArity
        )
    }
}
