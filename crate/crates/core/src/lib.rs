//! Explicit-state checking of mutual exclusion algorithms over safe, regular
//! and atomic shared registers, with justness as the liveness assumption.

pub mod action;
pub mod check;
pub mod error;
pub mod explore;
pub mod justness;
pub mod lang;
pub mod lts;
pub mod model;
pub mod oracle;
pub mod registers;
pub mod scenario;
pub mod trace;
pub mod zoo;

pub use action::{Action, ActionKind, RegId, ThreadId, Value};
pub use error::{Error, ParseError};
