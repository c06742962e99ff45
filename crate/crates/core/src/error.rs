use alloc::string::String;
use core::fmt;

use crate::model::{ActionId, AttrId};

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// An attribute index outside the state vector.
    UnknownAttribute(AttrId),
    /// An expression still refers to a named constant that was never bound.
    UnboundConstant(usize),
    UnknownAction(ActionId),
    /// The probability box admits no distribution summing to one.
    Infeasible { lo_sum: f64, hi_sum: f64 },
    /// No guard of a utility list applies to a chronicle's final state.
    NoApplicableGuard { list: &'static str, state: String },
    /// A sequential composition whose regressed condition cannot be
    /// expressed in the condition language.
    Unsupported(String),
    InvalidGrouping(String),
    /// Caller broke a documented precondition.
    Contract(&'static str),
    /// The domain violates a structural invariant.
    Domain(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownAttribute(a) => write!(f, "unknown attribute #{a}"),
            Error::UnboundConstant(c) => write!(f, "constant #{c} is not bound"),
            Error::UnknownAction(a) => write!(f, "unknown action #{a}"),
            Error::Infeasible { lo_sum, hi_sum } => write!(
                f,
                "infeasible probability box: lower bounds sum to {lo_sum}, upper bounds to {hi_sum}"
            ),
            Error::NoApplicableGuard { list, state } => {
                write!(f, "no {list} guard applies to state {state}")
            }
            Error::Unsupported(msg) => write!(f, "unsupported construct: {msg}"),
            Error::InvalidGrouping(msg) => write!(f, "invalid branch grouping: {msg}"),
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
