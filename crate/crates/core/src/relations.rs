//! Event atoms, the ghb relation and ghb-equal classes.
//!
//! ghb-equal is a partition maintained by merge-find. ghb edges are kept as
//! the generator pairs only; acyclicity is checked on the quotient graph
//! whose nodes are the equal-classes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::logic::{Cube, Dir, Eid, Event, Literal, Name, ProcVar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("unknown event identifier {0}")]
    UnknownEid(Eid),
    #[error("ghb becomes cyclic when adding `{0}`")]
    Inconsistent(Literal),
}

/// One answer of [`RelationStore::classify`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Fact {
    ReadBy(ProcVar),
    WriteBy(ProcVar),
    ReadOn(Name, Option<ProcVar>),
    WriteOn(Name, Option<ProcVar>),
}

#[derive(Clone, Debug, Default)]
pub struct RelationStore {
    parent: BTreeMap<Eid, Eid>,
    edges: Vec<(Eid, Eid)>,
    events: Vec<Event>,
    fences: BTreeSet<(Eid, ProcVar)>,
}

impl RelationStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the store for a cube, failing on the first relation literal
    /// that makes it inconsistent.
    pub fn from_cube(cube: &Cube) -> Result<Self, RelationError> {
        let mut st = RelationStore::new();
        for &e in &cube.eids {
            st.register(e);
        }
        for ev in &cube.events {
            st.add_event(ev.clone())?;
        }
        for &(e, p) in &cube.fences {
            st.add_fence(e, p)?;
        }
        for &(a, b) in &cube.equal {
            st.add_ghb_equal(a, b)?;
        }
        for &(a, b) in &cube.ghb {
            st.add_ghb(a, b)?;
        }
        Ok(st)
    }

    pub fn register(&mut self, e: Eid) {
        self.parent.entry(e).or_insert(e);
    }

    pub fn contains(&self, e: Eid) -> bool {
        self.parent.contains_key(&e)
    }

    pub fn eids(&self) -> impl Iterator<Item = Eid> + '_ {
        self.parent.keys().copied()
    }

    fn check(&self, e: Eid) -> Result<(), RelationError> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(RelationError::UnknownEid(e))
        }
    }

    pub fn add_event(&mut self, ev: Event) -> Result<(), RelationError> {
        self.check(ev.eid())?;
        if !self.events.contains(&ev) {
            self.events.push(ev);
        }
        Ok(())
    }

    pub fn add_fence(&mut self, e: Eid, p: ProcVar) -> Result<(), RelationError> {
        self.check(e)?;
        self.fences.insert((e, p));
        Ok(())
    }

    pub fn has_fence(&self, e: Eid, p: ProcVar) -> bool {
        self.fences.contains(&(e, p))
    }

    /// Class representative. Paths are short; no compression needed.
    pub fn class_of(&self, e: Eid) -> Eid {
        let mut cur = e;
        while let Some(&p) = self.parent.get(&cur) {
            if p == cur {
                break;
            }
            cur = p;
        }
        cur
    }

    pub fn same_class(&self, a: Eid, b: Eid) -> bool {
        self.class_of(a) == self.class_of(b)
    }

    pub fn edges(&self) -> &[(Eid, Eid)] {
        &self.edges
    }

    fn quotient_succ(&self) -> BTreeMap<Eid, BTreeSet<Eid>> {
        let mut succ: BTreeMap<Eid, BTreeSet<Eid>> = BTreeMap::new();
        for &(a, b) in &self.edges {
            succ.entry(self.class_of(a))
                .or_default()
                .insert(self.class_of(b));
        }
        succ
    }

    /// Depth-first search on the quotient graph.
    fn class_reaches(succ: &BTreeMap<Eid, BTreeSet<Eid>>, from: Eid, to: Eid) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(c) = stack.pop() {
            if c == to {
                return true;
            }
            if !seen.insert(c) {
                continue;
            }
            if let Some(next) = succ.get(&c) {
                stack.extend(next.iter().copied());
            }
        }
        false
    }

    /// Whether `ghb(a, b)` is entailed: the classes differ and a ghb path
    /// joins them.
    pub fn ordered(&self, a: Eid, b: Eid) -> bool {
        let (ca, cb) = (self.class_of(a), self.class_of(b));
        ca != cb && Self::class_reaches(&self.quotient_succ(), ca, cb)
    }

    /// Inserts `ghb(a, b)`. On inconsistency the store is left unchanged.
    pub fn add_ghb(&mut self, a: Eid, b: Eid) -> Result<(), RelationError> {
        self.check(a)?;
        self.check(b)?;
        let (ca, cb) = (self.class_of(a), self.class_of(b));
        if ca == cb || Self::class_reaches(&self.quotient_succ(), cb, ca) {
            return Err(RelationError::Inconsistent(Literal::Ghb(a, b)));
        }
        if !self.edges.contains(&(a, b)) {
            self.edges.push((a, b));
        }
        Ok(())
    }

    /// Merges the classes of `a` and `b`. Fails when a ghb path already
    /// connects the two classes, since the merged class would lie on a cycle.
    pub fn add_ghb_equal(&mut self, a: Eid, b: Eid) -> Result<(), RelationError> {
        self.check(a)?;
        self.check(b)?;
        let (ca, cb) = (self.class_of(a), self.class_of(b));
        if ca == cb {
            return Ok(());
        }
        let succ = self.quotient_succ();
        if Self::class_reaches(&succ, ca, cb) || Self::class_reaches(&succ, cb, ca) {
            return Err(RelationError::Inconsistent(Literal::ghb_equal(a, b)));
        }
        let (keep, drop) = if ca < cb { (ca, cb) } else { (cb, ca) };
        self.parent.insert(drop, keep);
        Ok(())
    }

    /// Whether the quotient graph is acyclic and no edge is intra-class.
    pub fn is_consistent(&self) -> bool {
        let succ = self.quotient_succ();
        for (&c, next) in &succ {
            for &n in next {
                if n == c || Self::class_reaches(&succ, n, c) {
                    return false;
                }
            }
        }
        true
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Direction/location/owner facts for every event on `e`.
    pub fn classify(&self, e: Eid) -> Result<BTreeSet<Fact>, RelationError> {
        self.check(e)?;
        let mut out = BTreeSet::new();
        for ev in self.events.iter().filter(|ev| ev.eid() == e) {
            let a = &ev.atom;
            match ev.dir {
                Dir::Read => {
                    out.insert(Fact::ReadBy(a.owner));
                    out.insert(Fact::ReadOn(a.var.clone(), a.index));
                }
                Dir::Write => {
                    out.insert(Fact::WriteBy(a.owner));
                    out.insert(Fact::WriteOn(a.var.clone(), a.index));
                }
            }
        }
        Ok(out)
    }

    /// DOT rendering of the quotient graph: one cluster per equal-class.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ghb {\n  rankdir=LR;\n");
        let mut classes: BTreeMap<Eid, Vec<Eid>> = BTreeMap::new();
        for e in self.eids() {
            classes.entry(self.class_of(e)).or_default().push(e);
        }
        for (rep, members) in &classes {
            let _ = writeln!(out, "  subgraph cluster_{} {{\n    style=box;", rep.0);
            for e in members {
                let mut label = Vec::new();
                for ev in self.events.iter().filter(|ev| ev.eid() == *e) {
                    let dir = match ev.dir {
                        Dir::Read => "Rd",
                        Dir::Write => "Wr",
                    };
                    let cell = match ev.atom.index {
                        Some(j) => format!("{},{}", ev.atom.owner, j),
                        None => ev.atom.owner.to_string(),
                    };
                    label.push(format!("{e}:{dir} {}[{cell}]", ev.atom.var));
                }
                if label.is_empty() {
                    label.push(e.to_string());
                }
                let _ = writeln!(out, "    n{} [label=\"{}\"];", e.0, label.join("\\n"));
            }
            out.push_str("  }\n");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  n{} -> n{} [label=\"ghb\"];", a.0, b.0);
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::EventAtom;

    fn store(n: u32) -> RelationStore {
        let mut s = RelationStore::new();
        for e in 1..=n {
            s.register(Eid(e));
        }
        s
    }

    #[test]
    fn four_cycle_of_mutex_example() {
        let mut s = store(4);
        s.add_ghb(Eid(2), Eid(3)).unwrap();
        s.add_ghb(Eid(3), Eid(1)).unwrap();
        s.add_ghb(Eid(1), Eid(4)).unwrap();
        assert_eq!(
            s.add_ghb(Eid(4), Eid(2)),
            Err(RelationError::Inconsistent(Literal::Ghb(Eid(4), Eid(2))))
        );
        assert!(s.is_consistent());
        assert_eq!(s.edges().len(), 3);
    }

    #[test]
    fn self_loop_and_fresh_edge() {
        let mut s = store(2);
        assert!(s.add_ghb(Eid(1), Eid(1)).is_err());
        assert!(s.add_ghb(Eid(1), Eid(2)).is_ok());
        assert_eq!(
            s.add_ghb(Eid(1), Eid(9)),
            Err(RelationError::UnknownEid(Eid(9)))
        );
    }

    #[test]
    fn equal_merges() {
        let mut s = store(2);
        s.add_ghb_equal(Eid(1), Eid(2)).unwrap();
        assert!(s.same_class(Eid(1), Eid(2)));
        s.add_ghb_equal(Eid(1), Eid(1)).unwrap();
        // ordering and simultaneity contradict each other
        let mut s = store(2);
        s.add_ghb(Eid(1), Eid(2)).unwrap();
        assert!(s.add_ghb_equal(Eid(1), Eid(2)).is_err());
        // and merging across a longer path closes a cycle as well
        let mut s = store(3);
        s.add_ghb(Eid(1), Eid(2)).unwrap();
        s.add_ghb(Eid(2), Eid(3)).unwrap();
        assert!(s.add_ghb_equal(Eid(3), Eid(1)).is_err());
    }

    #[test]
    fn edges_through_classes() {
        let mut s = store(4);
        s.add_ghb_equal(Eid(1), Eid(2)).unwrap();
        s.add_ghb(Eid(2), Eid(3)).unwrap();
        s.add_ghb(Eid(3), Eid(4)).unwrap();
        assert!(s.ordered(Eid(1), Eid(4)));
        assert!(!s.ordered(Eid(1), Eid(2)));
        assert!(s.add_ghb(Eid(4), Eid(1)).is_err());
    }

    #[test]
    fn classify_write() {
        let mut s = store(3);
        let p2 = ProcVar(2);
        s.add_event(Event::write(EventAtom::new(Eid(3), "X", p2, Some(p2))))
            .unwrap();
        let facts = s.classify(Eid(3)).unwrap();
        assert!(facts.contains(&Fact::WriteBy(p2)));
        assert!(facts.contains(&Fact::WriteOn("X".into(), Some(p2))));
        assert_eq!(facts.len(), 2);
        assert_eq!(s.classify(Eid(7)), Err(RelationError::UnknownEid(Eid(7))));
    }

    #[test]
    fn classify_shared_eid() {
        let mut s = store(1);
        let i = ProcVar(1);
        s.add_event(Event::write(EventAtom::new(Eid(1), "a", i, None)))
            .unwrap();
        s.add_event(Event::write(EventAtom::new(Eid(1), "b", i, None)))
            .unwrap();
        let facts = s.classify(Eid(1)).unwrap();
        assert!(facts.contains(&Fact::WriteOn("a".into(), None)));
        assert!(facts.contains(&Fact::WriteOn("b".into(), None)));
    }

    #[test]
    fn dot_has_clusters() {
        let mut s = store(2);
        s.add_event(Event::read(EventAtom::new(
            Eid(1),
            "X",
            ProcVar(1),
            Some(ProcVar(2)),
        )))
        .unwrap();
        s.add_ghb(Eid(1), Eid(2)).unwrap();
        let dot = s.to_dot();
        assert!(dot.contains("e1:Rd X[#1,#2]"));
        assert!(dot.contains("n1 -> n2 [label=\"ghb\"]"));
    }
}
