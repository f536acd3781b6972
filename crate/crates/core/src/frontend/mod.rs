//! Textual system descriptions.
//!
//! ```text
//! type state = Idle | Want | Crit
//! array PC[proc] : state
//! weak array X[proc] : bool
//! init (j) { PC[j] = Idle && X[j] = False }
//! unsafe (i j) { PC[i] = Crit && PC[j] = Crit }
//! transition t_req (i) requires { PC[i] = Idle } { PC[i] := Want; X[i] := True }
//! ```

mod parse;
mod print;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::logic::{Literal, Name, ProcVar, Signature, Sort, Term};

pub use parse::parse_unvalidated;
pub use print::print_system;
pub use validate::validate_system;

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{loc}: syntax error: {msg}")]
    Syntax { loc: Loc, msg: String },
    #[error("{loc}: duplicate name `{name}`")]
    DuplicateName { loc: Loc, name: String },
    #[error("{loc}: unknown sort `{name}`")]
    UnknownSort { loc: Loc, name: String },
    #[error("{loc}: unknown name `{name}`")]
    UnknownName { loc: Loc, name: String },
    #[error("{loc}: fence() is not allowed in the initial state")]
    FenceInInit { loc: Loc },
    #[error("{loc}: fence() is not allowed in an unsafe formula")]
    FenceInUnsafe { loc: Loc },
    #[error("{loc}: fence() may only appear in a transition guard")]
    FenceInAction { loc: Loc },
    #[error("{loc}: access `{term}` has the wrong form in {context}")]
    WrongAccessForm {
        loc: Loc,
        context: String,
        term: String,
    },
    #[error("{loc}: regular array `{name}` may only be accessed at the acting process")]
    RegularAccessNotAtActor { loc: Loc, name: String },
    #[error("{loc}: sort mismatch: {msg}")]
    SortMismatch { loc: Loc, msg: String },
    #[error("{loc}: {msg}")]
    Invalid { loc: Loc, msg: String },
}

impl FrontendError {
    pub fn loc(&self) -> Loc {
        match self {
            FrontendError::Syntax { loc, .. }
            | FrontendError::DuplicateName { loc, .. }
            | FrontendError::UnknownSort { loc, .. }
            | FrontendError::UnknownName { loc, .. }
            | FrontendError::FenceInInit { loc }
            | FrontendError::FenceInUnsafe { loc }
            | FrontendError::FenceInAction { loc }
            | FrontendError::WrongAccessForm { loc, .. }
            | FrontendError::RegularAccessNotAtActor { loc, .. }
            | FrontendError::SortMismatch { loc, .. }
            | FrontendError::Invalid { loc, .. } => *loc,
        }
    }

    /// The message without the leading position.
    pub fn message(&self) -> String {
        let full = self.to_string();
        let prefix = format!("{}: ", self.loc());
        full.strip_prefix(&prefix)
            .map(str::to_string)
            .unwrap_or(full)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: Name,
    pub sort: Sort,
    pub loc: Loc,
}

/// `init (j) { ... }`; `j` is [`InitSpec::VAR`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitSpec {
    pub var: Name,
    pub body: Vec<Literal>,
    pub loc: Loc,
}

impl InitSpec {
    pub const VAR: ProcVar = ProcVar(0);
}

/// `unsafe (i j ...) { ... }`; parameter `n` is `ProcVar(n + 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnsafeSpec {
    pub params: Vec<Name>,
    pub body: Vec<Literal>,
    pub loc: Loc,
}

impl UnsafeSpec {
    pub fn procs(&self) -> Vec<ProcVar> {
        (1..=self.params.len() as u32).map(ProcVar).collect()
    }
}

/// `forall k. k = i || body`. The body holds whenever `k` differs from every
/// process in `except`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForallGuard {
    pub var_name: Name,
    pub var: ProcVar,
    pub except: Vec<ProcVar>,
    pub body: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Regular { name: Name, index: Option<ProcVar> },
    Weak { name: Name, index: Option<ProcVar> },
}

impl Target {
    pub fn name(&self) -> &Name {
        match self {
            Target::Regular { name, .. } | Target::Weak { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Update {
    pub target: Target,
    pub value: Term,
}

/// A guarded transition. Parameter `n` is `ProcVar(n)`: the acting process
/// is `ProcVar(0)`, auxiliary processes follow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSpec {
    pub name: Name,
    pub params: Vec<Name>,
    pub guard: Vec<Literal>,
    pub foralls: Vec<ForallGuard>,
    pub updates: Vec<Update>,
    pub loc: Loc,
    /// Weak variables written (A⁰_t).
    pub weak_vars_written: BTreeSet<Name>,
    /// Weak arrays written (A¹_t).
    pub weak_arrays_written: BTreeSet<Name>,
}

impl TransitionSpec {
    pub const ACTOR: ProcVar = ProcVar(0);

    pub fn aux(&self) -> impl Iterator<Item = ProcVar> {
        (1..self.params.len() as u32).map(ProcVar)
    }

    pub fn has_fence(&self) -> bool {
        self.guard.contains(&Literal::FenceGuard)
    }

    fn all_terms(&self) -> impl Iterator<Item = &Term> {
        self.guard
            .iter()
            .chain(self.foralls.iter().flat_map(|f| f.body.iter()))
            .flat_map(|l| l.terms())
            .chain(self.updates.iter().map(|u| &u.value))
    }

    /// Whether the guard or an update reads weak memory.
    pub fn reads_weak(&self) -> bool {
        self.all_terms().any(|t| matches!(t, Term::Weak { .. }))
    }

    pub fn writes_weak(&self) -> bool {
        self.updates
            .iter()
            .any(|u| matches!(u.target, Target::Weak { .. }))
    }

    pub fn proc_name(&self, p: ProcVar) -> Name {
        if let Some(n) = self.params.get(p.0 as usize) {
            return n.clone();
        }
        self.foralls
            .iter()
            .find(|f| f.var == p)
            .map(|f| f.var_name.clone())
            .unwrap_or_else(|| p.to_string().into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    pub sorts: Vec<Sort>,
    pub globals: Vec<Decl>,
    pub arrays: Vec<Decl>,
    pub weak_vars: Vec<Decl>,
    pub weak_arrays: Vec<Decl>,
    pub init: InitSpec,
    pub unsafe_specs: Vec<UnsafeSpec>,
    pub transitions: Vec<TransitionSpec>,
}

impl TransitionSystem {
    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        for s in &self.sorts {
            sig.add_sort(s.clone());
        }
        for d in &self.globals {
            sig.add_array(&d.name, d.sort.clone(), false);
        }
        for d in &self.arrays {
            sig.add_array(&d.name, d.sort.clone(), true);
        }
        for d in &self.weak_vars {
            sig.add_weak(&d.name, d.sort.clone(), false);
        }
        for d in &self.weak_arrays {
            sig.add_weak(&d.name, d.sort.clone(), true);
        }
        sig
    }

    pub fn transition(&self, name: &str) -> Option<&TransitionSpec> {
        self.transitions.iter().find(|t| &*t.name == name)
    }
}

/// Parses and validates a system description.
pub fn parse_system(text: &str) -> Result<TransitionSystem, FrontendError> {
    validate_system(parse_unvalidated(text)?)
}
