//! Backward reachability for parameterized array-based systems running on
//! a TSO-like weak memory.
//!
//! A system description is parsed by [`frontend`], translated into an
//! explicit event-based form by [`translation`], and explored backwards from
//! the unsafe states by [`engine::bwd`]. [`oracle`] gives an independent
//! operational answer for a fixed number of processes.

pub mod engine;
pub mod frontend;
pub mod logic;
pub mod model;
pub mod oracle;
pub mod relations;
pub mod solver;
pub mod translation;

pub use frontend::{parse_system, FrontendError, TransitionSystem};
pub use logic::{Cube, Eid, Literal, ProcVar, Term, Value};
pub use relations::{RelationError, RelationStore};
