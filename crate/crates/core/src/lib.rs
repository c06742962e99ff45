//! Decision-theoretic refinement planning over interval abstractions.
//!
//! Domains describe probabilistic actions whose branches carry interval
//! probabilities and affine effects. Abstract plans are projected to
//! expected-utility intervals; plans whose upper bound falls below another
//! plan's lower bound are pruned and the survivors refined until only the
//! optimal primitive plans remain.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod abstraction;
pub mod baselines;
pub mod domain;
pub mod error;
pub mod interval;
pub mod model;
pub mod planner;
pub mod projection;
pub mod sensitivity;

pub use abstraction::{BranchGrouping, BranchRef, Model};
pub use domain::{validate_domain, ActionDef, ActionKind, Branch, Domain, Guarded, UtilityModel};
pub use error::{Error, Result};
pub use interval::Interval;
pub use model::{AffineExpr, Atom, AttributeDecl, Condition, Effect, Relation, Truth, WorldState};

pub use projection::{bound_weighted_sum, evaluate_plan, project, ChronicleSet};
pub use planner::{drips_plan, Outcome, Plan, Planner, Stats, Strategy};
