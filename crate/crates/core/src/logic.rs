//! Terms, literals and cubes shared by the base, description and explicit
//! languages.
//!
//! One tagged AST covers all three layers. Description-only constructs are
//! the weak accesses `α`, `α[j]`, `i @ α`, `i @ α[j]` and the `fence()` guard;
//! explicit-only constructs are `Val` terms, event atoms and the ghb
//! relations. [`language_of`] classifies a conjunction by which of those it
//! uses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub type Name = Arc<str>;

/// A process variable. Cubes print these as `#n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcVar(pub u32);

/// An event identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Eid(pub u32);

impl fmt::Display for ProcVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for Eid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Enum(Name),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Enum(c) => f.write_str(c),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SortKind {
    Proc,
    Eid,
    Enum(Vec<Name>),
    Bool,
    Int,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sort {
    pub name: Name,
    pub kind: SortKind,
}

impl Sort {
    pub fn bool() -> Self {
        Sort {
            name: "bool".into(),
            kind: SortKind::Bool,
        }
    }

    pub fn int() -> Self {
        Sort {
            name: "int".into(),
            kind: SortKind::Int,
        }
    }

    pub fn proc() -> Self {
        Sort {
            name: "proc".into(),
            kind: SortKind::Proc,
        }
    }

    pub fn enumeration(name: &str, ctors: &[&str]) -> Result<Self, LogicError> {
        let mut seen = BTreeSet::new();
        if ctors.is_empty() {
            return Err(LogicError::BadSort(name.to_string()));
        }
        for c in ctors {
            if !seen.insert(*c) {
                return Err(LogicError::BadSort(name.to_string()));
            }
        }
        Ok(Sort {
            name: name.into(),
            kind: SortKind::Enum(ctors.iter().map(|c| Name::from(*c)).collect()),
        })
    }

    /// Finite value domain, `None` for unbounded sorts.
    pub fn domain(&self) -> Option<Vec<Value>> {
        match &self.kind {
            SortKind::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
            SortKind::Enum(cs) => Some(cs.iter().cloned().map(Value::Enum).collect()),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Proc(ProcVar),
    /// Regular array cell `x[j]`, or a regular global when `index` is `None`.
    Array {
        name: Name,
        index: Option<ProcVar>,
    },
    /// `α` / `α[j]`, the implicit-process weak access.
    Weak {
        name: Name,
        index: Option<ProcVar>,
    },
    /// `i @ α` / `i @ α[j]`.
    View {
        proc: ProcVar,
        name: Name,
        index: Option<ProcVar>,
    },
    /// `Val_α(e)` / `Val_α(e, j)`.
    Val {
        name: Name,
        eid: Eid,
        index: Option<ProcVar>,
    },
    // last, so that equations read `x = c`
    Const(Value),
}

impl Term {
    pub fn array(name: &str, index: ProcVar) -> Self {
        Term::Array {
            name: name.into(),
            index: Some(index),
        }
    }

    pub fn val(name: &str, eid: Eid, index: Option<ProcVar>) -> Self {
        Term::Val {
            name: name.into(),
            eid,
            index,
        }
    }

    pub fn enum_const(c: &str) -> Self {
        Term::Const(Value::Enum(c.into()))
    }

    pub fn bool_const(b: bool) -> Self {
        Term::Const(Value::Bool(b))
    }

    pub fn procs(&self) -> impl Iterator<Item = ProcVar> + '_ {
        let (a, b) = match self {
            Term::Const(_) => (None, None),
            Term::Proc(p) => (Some(*p), None),
            Term::Array { index, .. } | Term::Weak { index, .. } | Term::Val { index, .. } => {
                (*index, None)
            }
            Term::View { proc, index, .. } => (Some(*proc), *index),
        };
        a.into_iter().chain(b)
    }

    pub fn eid(&self) -> Option<Eid> {
        match self {
            Term::Val { eid, .. } => Some(*eid),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn rename(&self, s: &Substitution) -> Term {
        let p = |v: &ProcVar| s.proc(*v);
        let ix = |i: &Option<ProcVar>| i.map(|v| s.proc(v));
        match self {
            Term::Const(_) => self.clone(),
            Term::Proc(v) => Term::Proc(p(v)),
            Term::Array { name, index } => Term::Array {
                name: name.clone(),
                index: ix(index),
            },
            Term::Weak { name, index } => Term::Weak {
                name: name.clone(),
                index: ix(index),
            },
            Term::View { proc, name, index } => Term::View {
                proc: p(proc),
                name: name.clone(),
                index: ix(index),
            },
            Term::Val { name, eid, index } => Term::Val {
                name: name.clone(),
                eid: s.eid(*eid),
                index: ix(index),
            },
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx = |i: &Option<ProcVar>| i.map(|p| format!("[{p}]")).unwrap_or_default();
        match self {
            Term::Const(v) => write!(f, "{v}"),
            Term::Proc(p) => write!(f, "{p}"),
            Term::Array { name, index } | Term::Weak { name, index } => {
                write!(f, "{name}{}", idx(index))
            }
            Term::View { proc, name, index } => write!(f, "{proc} @ {name}{}", idx(index)),
            Term::Val {
                name,
                eid,
                index: None,
            } => write!(f, "Val_{name}({eid})"),
            Term::Val {
                name,
                eid,
                index: Some(j),
            } => write!(f, "Val_{name}({eid},{j})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    Read,
    Write,
}

/// Payload of `Rd_α(e, i[, j])` and `Wr_α(e, i[, j])`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventAtom {
    pub eid: Eid,
    pub var: Name,
    pub owner: ProcVar,
    pub index: Option<ProcVar>,
}

impl EventAtom {
    pub fn new(eid: Eid, var: &str, owner: ProcVar, index: Option<ProcVar>) -> Self {
        EventAtom {
            eid,
            var: var.into(),
            owner,
            index,
        }
    }

    /// Same variable and, for arrays, the same cell.
    pub fn same_location(&self, other: &EventAtom) -> bool {
        self.var == other.var && self.index == other.index
    }

    pub fn rename(&self, s: &Substitution) -> EventAtom {
        EventAtom {
            eid: s.eid(self.eid),
            var: self.var.clone(),
            owner: s.proc(self.owner),
            index: self.index.map(|p| s.proc(p)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    True,
    False,
    Cmp(CmpOp, Term, Term),
    /// The description-language `fence()` guard.
    FenceGuard,
    Rd(EventAtom),
    Wr(EventAtom),
    /// `fence(e, i)`: a fence precedes event `e` of process `i`.
    Fence(Eid, ProcVar),
    Ghb(Eid, Eid),
    GhbEqual(Eid, Eid),
}

impl Literal {
    /// Builds a comparison. `=` and `<>` operands are put in a canonical order
    /// and comparisons between constants are folded.
    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Literal {
        if let (Term::Const(x), Term::Const(y)) = (&a, &b) {
            let holds = match op {
                CmpOp::Eq => x == y,
                CmpOp::Ne => x != y,
                CmpOp::Lt | CmpOp::Le => match (x, y) {
                    (Value::Int(m), Value::Int(n)) => {
                        if op == CmpOp::Lt {
                            m < n
                        } else {
                            m <= n
                        }
                    }
                    _ => return Literal::Cmp(op, a, b),
                },
            };
            return if holds { Literal::True } else { Literal::False };
        }
        if a == b {
            return match op {
                CmpOp::Eq | CmpOp::Le => Literal::True,
                CmpOp::Ne | CmpOp::Lt => Literal::False,
            };
        }
        match op {
            CmpOp::Eq | CmpOp::Ne if b < a => Literal::Cmp(op, b, a),
            _ => Literal::Cmp(op, a, b),
        }
    }

    pub fn eq(a: Term, b: Term) -> Literal {
        Literal::cmp(CmpOp::Eq, a, b)
    }

    pub fn ne(a: Term, b: Term) -> Literal {
        Literal::cmp(CmpOp::Ne, a, b)
    }

    pub fn ghb_equal(a: Eid, b: Eid) -> Literal {
        if a <= b {
            Literal::GhbEqual(a, b)
        } else {
            Literal::GhbEqual(b, a)
        }
    }

    /// Negates an atom, folding the result back into the closed literal set:
    /// `¬(a = b)` is `a <> b`, `¬(a < b)` is `b <= a`, `¬(a <= b)` is `b < a`.
    pub fn negate(self) -> Result<Literal, LogicError> {
        Ok(match self {
            Literal::True => Literal::False,
            Literal::False => Literal::True,
            Literal::Cmp(CmpOp::Eq, a, b) => Literal::cmp(CmpOp::Ne, a, b),
            Literal::Cmp(CmpOp::Ne, a, b) => Literal::cmp(CmpOp::Eq, a, b),
            Literal::Cmp(CmpOp::Lt, a, b) => Literal::cmp(CmpOp::Le, b, a),
            Literal::Cmp(CmpOp::Le, a, b) => Literal::cmp(CmpOp::Lt, b, a),
            other => return Err(LogicError::NegatedAtom(other.to_string())),
        })
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Literal::Cmp(_, a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    pub fn eids(&self) -> Vec<Eid> {
        match self {
            Literal::Cmp(_, a, b) => a.eid().into_iter().chain(b.eid()).collect(),
            Literal::Rd(ev) | Literal::Wr(ev) => vec![ev.eid],
            Literal::Fence(e, _) => vec![*e],
            Literal::Ghb(a, b) | Literal::GhbEqual(a, b) => vec![*a, *b],
            _ => Vec::new(),
        }
    }

    pub fn procs(&self) -> Vec<ProcVar> {
        match self {
            Literal::Cmp(_, a, b) => a.procs().chain(b.procs()).collect(),
            Literal::Rd(ev) | Literal::Wr(ev) => {
                std::iter::once(ev.owner).chain(ev.index).collect()
            }
            Literal::Fence(_, p) => vec![*p],
            _ => Vec::new(),
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Literal::True | Literal::False | Literal::Cmp(..))
    }

    pub fn rename(&self, s: &Substitution) -> Literal {
        match self {
            Literal::True | Literal::False | Literal::FenceGuard => self.clone(),
            Literal::Cmp(op, a, b) => Literal::cmp(*op, a.rename(s), b.rename(s)),
            Literal::Rd(ev) => Literal::Rd(ev.rename(s)),
            Literal::Wr(ev) => Literal::Wr(ev.rename(s)),
            Literal::Fence(e, p) => Literal::Fence(s.eid(*e), s.proc(*p)),
            Literal::Ghb(a, b) => Literal::Ghb(s.eid(*a), s.eid(*b)),
            Literal::GhbEqual(a, b) => Literal::ghb_equal(s.eid(*a), s.eid(*b)),
        }
    }

    /// Replaces every occurrence of `from` (as a whole term) by `to`.
    pub fn replace_term(&self, from: &Term, to: &Term) -> Literal {
        match self {
            Literal::Cmp(op, a, b) => {
                let r = |t: &Term| if t == from { to.clone() } else { t.clone() };
                Literal::cmp(*op, r(a), r(b))
            }
            _ => self.clone(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ix = |i: &Option<ProcVar>| i.map(|p| format!(",{p}")).unwrap_or_default();
        match self {
            Literal::True => f.write_str("true"),
            Literal::False => f.write_str("false"),
            Literal::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Literal::FenceGuard => f.write_str("fence()"),
            Literal::Rd(ev) => write!(f, "Rd_{}({},{}{})", ev.var, ev.eid, ev.owner, ix(&ev.index)),
            Literal::Wr(ev) => write!(f, "Wr_{}({},{}{})", ev.var, ev.eid, ev.owner, ix(&ev.index)),
            Literal::Fence(e, p) => write!(f, "fence({e},{p})"),
            Literal::Ghb(a, b) => write!(f, "ghb({a},{b})"),
            Literal::GhbEqual(a, b) => write!(f, "ghb-equal({a},{b})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Language {
    Base,
    Description,
    Explicit,
    Invalid,
}

/// Classifies a conjunction by the smallest language containing it.
pub fn language_of(lits: &[Literal]) -> Language {
    let mut desc = false;
    let mut expl = false;
    for l in lits {
        match l {
            Literal::True | Literal::False => {}
            Literal::FenceGuard => desc = true,
            Literal::Rd(_)
            | Literal::Wr(_)
            | Literal::Fence(..)
            | Literal::Ghb(..)
            | Literal::GhbEqual(..) => expl = true,
            Literal::Cmp(_, a, b) => {
                for t in [a, b] {
                    match t {
                        Term::Weak { .. } | Term::View { .. } => desc = true,
                        Term::Val { .. } => expl = true,
                        _ => {}
                    }
                }
            }
        }
    }
    match (desc, expl) {
        (false, false) => Language::Base,
        (true, false) => Language::Description,
        (false, true) => Language::Explicit,
        (true, true) => Language::Invalid,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Proc(ProcVar),
    Eid(Eid),
}

/// Simultaneous, sort-preserving renaming of process and event variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    procs: BTreeMap<ProcVar, ProcVar>,
    eids: BTreeMap<Eid, Eid>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: Var, to: Var) -> Result<(), LogicError> {
        match (from, to) {
            (Var::Proc(a), Var::Proc(b)) => {
                self.procs.insert(a, b);
            }
            (Var::Eid(a), Var::Eid(b)) => {
                self.eids.insert(a, b);
            }
            _ => return Err(LogicError::SortMismatch(format!("{from:?} -> {to:?}"))),
        }
        Ok(())
    }

    pub fn with_proc(mut self, from: ProcVar, to: ProcVar) -> Self {
        self.procs.insert(from, to);
        self
    }

    pub fn with_eid(mut self, from: Eid, to: Eid) -> Self {
        self.eids.insert(from, to);
        self
    }

    pub fn proc(&self, p: ProcVar) -> ProcVar {
        self.procs.get(&p).copied().unwrap_or(p)
    }

    pub fn eid(&self, e: Eid) -> Eid {
        self.eids.get(&e).copied().unwrap_or(e)
    }

    pub fn procs(&self) -> &BTreeMap<ProcVar, ProcVar> {
        &self.procs
    }

    pub fn eids(&self) -> &BTreeMap<Eid, Eid> {
        &self.eids
    }
}

pub fn substitute(lits: &[Literal], s: &Substitution) -> Vec<Literal> {
    lits.iter().map(|l| l.rename(s)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("only comparisons and true/false can be negated, got `{0}`")]
    NegatedAtom(String),
    #[error("ill-formed sort `{0}`")]
    BadSort(String),
    #[error("literal `{0}` does not belong to the explicit language")]
    NotExplicit(String),
    #[error("event `{0}` conflicts with another event on the same identifier")]
    EventConflict(String),
}

/// An event as stored in a cube: the atom, its direction and, for reads,
/// whether a write has already been chosen as its source.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub atom: EventAtom,
    pub dir: Dir,
    pub satisfied: bool,
}

impl Event {
    pub fn read(atom: EventAtom) -> Self {
        Event {
            atom,
            dir: Dir::Read,
            satisfied: false,
        }
    }

    pub fn write(atom: EventAtom) -> Self {
        Event {
            atom,
            dir: Dir::Write,
            satisfied: false,
        }
    }

    pub fn eid(&self) -> Eid {
        self.atom.eid
    }

    pub fn literal(&self) -> Literal {
        match self.dir {
            Dir::Read => Literal::Rd(self.atom.clone()),
            Dir::Write => Literal::Wr(self.atom.clone()),
        }
    }

    /// The term holding this event's value.
    pub fn value_term(&self) -> Term {
        Term::Val {
            name: self.atom.var.clone(),
            eid: self.atom.eid,
            index: self.atom.index,
        }
    }
}

/// An explicit-language cube `∃ē. Δ(ē) ∧ ∃j⃗. Δ(j⃗) ∧ φ`.
///
/// Δ is implicit in the representation: all listed eids are pairwise
/// distinct, and so are all listed procs. Event atoms, fences and the two
/// relations are kept apart from the value literals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Cube {
    pub eids: BTreeSet<Eid>,
    pub procs: BTreeSet<ProcVar>,
    pub events: Vec<Event>,
    pub values: Vec<Literal>,
    pub ghb: BTreeSet<(Eid, Eid)>,
    pub equal: BTreeSet<(Eid, Eid)>,
    pub fences: BTreeSet<(Eid, ProcVar)>,
    /// Reads taken in the unsafe state itself, after every transition.
    pub finals: BTreeSet<Eid>,
}

impl Cube {
    /// Every literal of the cube, relations included, in a stable order.
    pub fn literals(&self) -> Vec<Literal> {
        let mut out: Vec<Literal> = self.events.iter().map(Event::literal).collect();
        out.extend(self.fences.iter().map(|&(e, p)| Literal::Fence(e, p)));
        out.extend(self.equal.iter().map(|&(a, b)| Literal::GhbEqual(a, b)));
        out.extend(self.ghb.iter().map(|&(a, b)| Literal::Ghb(a, b)));
        out.extend(self.values.iter().cloned());
        out
    }

    pub fn size(&self) -> usize {
        self.events.len() + self.values.len() + self.ghb.len() + self.procs.len()
    }

    pub fn events_of(&self, e: Eid) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |ev| ev.eid() == e)
    }

    pub fn add_value(&mut self, lit: Literal) {
        if lit == Literal::True {
            return;
        }
        if let Err(pos) = self.values.binary_search(&lit) {
            self.values.insert(pos, lit);
        }
    }

    pub fn add_event(&mut self, ev: Event) {
        self.eids.insert(ev.eid());
        if let Some(old) = self
            .events
            .iter_mut()
            .find(|o| o.atom == ev.atom && o.dir == ev.dir)
        {
            old.satisfied |= ev.satisfied;
            return;
        }
        let pos = self.events.binary_search(&ev).unwrap_or_else(|p| p);
        self.events.insert(pos, ev);
    }

    pub fn add_ghb(&mut self, a: Eid, b: Eid) {
        self.ghb.insert((a, b));
    }

    pub fn add_equal(&mut self, a: Eid, b: Eid) {
        if a != b {
            self.equal.insert((a.min(b), a.max(b)));
        }
    }

    /// Applies a renaming to every component.
    pub fn rename(&self, s: &Substitution) -> Cube {
        let mut out = Cube {
            eids: self.eids.iter().map(|e| s.eid(*e)).collect(),
            procs: self.procs.iter().map(|p| s.proc(*p)).collect(),
            ..Cube::default()
        };
        for ev in &self.events {
            out.add_event(Event {
                atom: ev.atom.rename(s),
                ..ev.clone()
            });
        }
        for l in &self.values {
            out.add_value(l.rename(s));
        }
        for &(a, b) in &self.ghb {
            out.add_ghb(s.eid(a), s.eid(b));
        }
        for &(a, b) in &self.equal {
            out.add_equal(s.eid(a), s.eid(b));
        }
        for &(e, p) in &self.fences {
            out.fences.insert((s.eid(e), s.proc(p)));
        }
        out.finals = self.finals.iter().map(|e| s.eid(*e)).collect();
        out
    }

    /// Drops eids that carry no event, together with their fence markers and
    /// ghb-equal pairs.
    pub fn collect_unused_eids(&mut self) {
        let used: BTreeSet<Eid> = self.events.iter().map(Event::eid).collect();
        let mentioned: BTreeSet<Eid> = self
            .ghb
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(self.values.iter().flat_map(Literal::eids))
            .collect();
        let keep = |e: &Eid| used.contains(e) || mentioned.contains(e);
        self.eids.retain(keep);
        self.equal.retain(|(a, b)| keep(a) && keep(b));
        let reads: BTreeSet<Eid> = self
            .events
            .iter()
            .filter(|ev| ev.dir == Dir::Read)
            .map(Event::eid)
            .collect();
        self.fences.retain(|(e, _)| reads.contains(e));
        self.finals.retain(|e| reads.contains(e));
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lits = self.literals();
        if lits.is_empty() {
            return f.write_str("true");
        }
        for (n, l) in lits.iter().enumerate() {
            if n > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{l}")?;
            if let Literal::Rd(a) = l {
                if self
                    .events
                    .iter()
                    .any(|ev| ev.dir == Dir::Read && ev.atom == *a && ev.satisfied)
                {
                    f.write_str("*")?;
                }
            }
        }
        Ok(())
    }
}

/// Builds a cube from explicit-language literals. Δ over `eids` and `procs`
/// is implied; every variable occurring in `literals` must be listed.
pub fn mk_cube(
    eids: impl IntoIterator<Item = Eid>,
    procs: impl IntoIterator<Item = ProcVar>,
    literals: impl IntoIterator<Item = Literal>,
) -> Result<Cube, LogicError> {
    let mut cube = Cube {
        eids: eids.into_iter().collect(),
        procs: procs.into_iter().collect(),
        ..Cube::default()
    };
    for lit in literals {
        for e in lit.eids() {
            if !cube.eids.contains(&e) {
                return Err(LogicError::UnboundVariable(e.to_string()));
            }
        }
        for p in lit.procs() {
            if !cube.procs.contains(&p) {
                return Err(LogicError::UnboundVariable(p.to_string()));
            }
        }
        match lit {
            Literal::True => {}
            Literal::False | Literal::Cmp(..) => {
                if lit
                    .terms()
                    .iter()
                    .any(|t| matches!(t, Term::Weak { .. } | Term::View { .. }))
                {
                    return Err(LogicError::NotExplicit(lit.to_string()));
                }
                cube.add_value(lit)
            }
            Literal::FenceGuard => return Err(LogicError::NotExplicit(lit.to_string())),
            Literal::Rd(a) => cube.add_event(Event::read(a)),
            Literal::Wr(a) => cube.add_event(Event::write(a)),
            Literal::Fence(e, p) => {
                cube.fences.insert((e, p));
            }
            Literal::Ghb(a, b) => cube.add_ghb(a, b),
            Literal::GhbEqual(a, b) => cube.add_equal(a, b),
        }
    }
    Ok(cube)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Symbol {
    Array { sort: Sort, indexed: bool },
    Weak { sort: Sort, indexed: bool },
}

/// Declared sorts and state symbols, the context needed to type terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub sorts: BTreeMap<Name, Sort>,
    pub symbols: BTreeMap<Name, Symbol>,
    pub ctors: BTreeMap<Name, Name>,
}

impl Signature {
    pub fn new() -> Self {
        let mut sig = Signature::default();
        for s in [Sort::bool(), Sort::int(), Sort::proc()] {
            sig.sorts.insert(s.name.clone(), s);
        }
        sig
    }

    pub fn add_sort(&mut self, sort: Sort) {
        if let SortKind::Enum(cs) = &sort.kind {
            for c in cs {
                self.ctors.insert(c.clone(), sort.name.clone());
            }
        }
        self.sorts.insert(sort.name.clone(), sort);
    }

    pub fn add_array(&mut self, name: &str, sort: Sort, indexed: bool) {
        self.symbols
            .insert(name.into(), Symbol::Array { sort, indexed });
    }

    pub fn add_weak(&mut self, name: &str, sort: Sort, indexed: bool) {
        self.symbols
            .insert(name.into(), Symbol::Weak { sort, indexed });
    }

    pub fn symbol_sort(&self, name: &str) -> Option<&Sort> {
        match self.symbols.get(name)? {
            Symbol::Array { sort, .. } | Symbol::Weak { sort, .. } => Some(sort),
        }
    }

    pub fn is_weak(&self, name: &str) -> bool {
        matches!(self.symbols.get(name), Some(Symbol::Weak { .. }))
    }

    pub fn is_indexed(&self, name: &str) -> bool {
        matches!(
            self.symbols.get(name),
            Some(Symbol::Weak { indexed: true, .. } | Symbol::Array { indexed: true, .. })
        )
    }

    pub fn weak_names(&self) -> impl Iterator<Item = (&Name, bool)> {
        self.symbols.iter().filter_map(|(n, s)| match s {
            Symbol::Weak { indexed, .. } => Some((n, *indexed)),
            _ => None,
        })
    }

    pub fn term_sort(&self, t: &Term) -> Option<Sort> {
        match t {
            Term::Const(Value::Bool(_)) => Some(Sort::bool()),
            Term::Const(Value::Int(_)) => Some(Sort::int()),
            Term::Const(Value::Enum(c)) => self.sorts.get(self.ctors.get(c)?).cloned(),
            Term::Proc(_) => Some(Sort::proc()),
            Term::Array { name, .. }
            | Term::Weak { name, .. }
            | Term::View { name, .. }
            | Term::Val { name, .. } => self.symbol_sort(name).cloned(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32) -> ProcVar {
        ProcVar(n)
    }

    #[test]
    fn theta_cube_of_mutex() {
        let lits = vec![
            Literal::ne(Term::Proc(p(1)), Term::Proc(p(2))),
            Literal::eq(Term::array("PC", p(1)), Term::enum_const("Crit")),
            Literal::eq(Term::array("PC", p(2)), Term::enum_const("Crit")),
        ];
        let c = mk_cube([], [p(1), p(2)], lits).unwrap();
        assert_eq!(c.values.len(), 3);
        assert_eq!(c.procs.len(), 2);
    }

    #[test]
    fn trivial_cube() {
        let c = mk_cube([], [], [Literal::True]).unwrap();
        assert!(c.literals().is_empty());
        assert_eq!(c.to_string(), "true");
    }

    #[test]
    fn unlisted_eid_is_unbound() {
        let ev = EventAtom::new(Eid(2), "X", p(1), Some(p(1)));
        let err = mk_cube([Eid(1)], [p(1)], [Literal::Rd(ev)]).unwrap_err();
        assert_eq!(err, LogicError::UnboundVariable("e2".into()));
    }

    #[test]
    fn classification() {
        let base = [Literal::eq(Term::array("x", p(1)), Term::enum_const("c"))];
        assert_eq!(language_of(&base), Language::Base);
        let view = Term::View {
            proc: p(1),
            name: "a".into(),
            index: None,
        };
        let desc = [Literal::eq(view.clone(), Term::enum_const("c"))];
        assert_eq!(language_of(&desc), Language::Description);
        let mixed = [
            Literal::eq(Term::val("a", Eid(1), None), Term::enum_const("c")),
            Literal::eq(view, Term::enum_const("c")),
        ];
        assert_eq!(language_of(&mixed), Language::Invalid);
        assert_eq!(
            language_of(&[Literal::Ghb(Eid(1), Eid(2))]),
            Language::Explicit
        );
    }

    #[test]
    fn substitution_cases() {
        let l = Literal::eq(Term::array("PC", p(0)), Term::enum_const("Idle"));
        let s = Substitution::new().with_proc(p(0), p(1));
        assert_eq!(
            l.rename(&s),
            Literal::eq(Term::array("PC", p(1)), Term::enum_const("Idle"))
        );
        let g = Literal::Ghb(Eid(1), Eid(2));
        let s = Substitution::new().with_eid(Eid(1), Eid(3));
        assert_eq!(g.rename(&s), Literal::Ghb(Eid(3), Eid(2)));
        assert_eq!(l.rename(&Substitution::new()), l);
        let mut bad = Substitution::new();
        assert!(matches!(
            bad.insert(Var::Proc(p(1)), Var::Eid(Eid(1))),
            Err(LogicError::SortMismatch(_))
        ));
    }

    #[test]
    fn simultaneous_swap() {
        let l = Literal::Ghb(Eid(1), Eid(2));
        let s = Substitution::new()
            .with_eid(Eid(1), Eid(2))
            .with_eid(Eid(2), Eid(1));
        assert_eq!(l.rename(&s), Literal::Ghb(Eid(2), Eid(1)));
    }

    #[test]
    fn negation_normalizes() {
        let a = Term::array("n", p(1));
        let b = Term::Const(Value::Int(3));
        let lt = Literal::cmp(CmpOp::Lt, a.clone(), b.clone());
        assert_eq!(
            lt.negate().unwrap(),
            Literal::cmp(CmpOp::Le, b.clone(), a.clone())
        );
        let eq = Literal::eq(a.clone(), b.clone());
        assert_eq!(eq.negate().unwrap(), Literal::ne(a, b));
        assert!(Literal::Ghb(Eid(1), Eid(2)).negate().is_err());
    }

    #[test]
    fn constant_folding() {
        assert_eq!(
            Literal::eq(Term::bool_const(true), Term::bool_const(false)),
            Literal::False
        );
        let t = Term::array("x", p(1));
        assert_eq!(Literal::ne(t.clone(), t), Literal::False);
    }

    #[test]
    fn gc_drops_eventless_eids() {
        let rd = EventAtom::new(Eid(1), "X", p(1), Some(p(2)));
        let mut c = mk_cube(
            [Eid(1), Eid(2)],
            [p(1), p(2)],
            [
                Literal::Rd(rd),
                Literal::GhbEqual(Eid(1), Eid(2)),
                Literal::Fence(Eid(2), p(1)),
            ],
        )
        .unwrap();
        c.collect_unused_eids();
        assert_eq!(c.eids.len(), 1);
        assert!(c.equal.is_empty());
        assert!(c.fences.is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn lit() -> impl Strategy<Value = Literal> {
            prop_oneof![
                (0u32..4, 0u32..4).prop_map(|(a, b)| Literal::Ghb(Eid(a), Eid(b))),
                (0u32..4, 0u32..3).prop_map(|(e, q)| Literal::eq(
                    Term::val("X", Eid(e), Some(ProcVar(q))),
                    Term::array("PC", ProcVar(q))
                )),
                (0u32..4, 0u32..3).prop_map(|(e, q)| Literal::Rd(EventAtom::new(
                    Eid(e),
                    "X",
                    ProcVar(q),
                    None
                ))),
            ]
        }

        proptest! {
            #[test]
            fn inverse_renaming_is_identity(lits in proptest::collection::vec(lit(), 0..8), shift in 1u32..5) {
                let mut fwd = Substitution::new();
                let mut back = Substitution::new();
                for n in 0..4 {
                    fwd = fwd.with_eid(Eid(n), Eid(n + 10 * shift));
                    back = back.with_eid(Eid(n + 10 * shift), Eid(n));
                }
                for n in 0..3 {
                    fwd = fwd.with_proc(ProcVar(n), ProcVar(n + 10 * shift));
                    back = back.with_proc(ProcVar(n + 10 * shift), ProcVar(n));
                }
                let round = substitute(&substitute(&lits, &fwd), &back);
                prop_assert_eq!(round, lits);
            }
        }
    }
}
