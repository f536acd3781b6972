//! Memory-model specific parts of the pre-image: which program-order pairs
//! stay ordered in ghb, and how a new write relates to the pending reads of a
//! cube.

use crate::logic::{Cube, Dir, Eid, Event, Literal, ProcVar};
use crate::relations::RelationStore;

/// A memory model, described by the preserved program order.
pub trait MemoryModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether an access of kind `earlier` stays ghb-before a later access of
    /// kind `later` by the same process.
    fn preserves(&self, earlier: Dir, later: Dir) -> bool;
}

/// Total store order: a write may be overtaken by a later read.
#[derive(Clone, Copy, Debug, Default)]
pub struct Tso;

impl MemoryModel for Tso {
    fn name(&self) -> &'static str {
        "tso"
    }

    fn preserves(&self, earlier: Dir, later: Dir) -> bool {
        !(earlier == Dir::Write && later == Dir::Read)
    }
}

/// Sequential consistency, every program-order pair preserved.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sc;

impl MemoryModel for Sc {
    fn name(&self) -> &'static str {
        "sc"
    }

    fn preserves(&self, _: Dir, _: Dir) -> bool {
        true
    }
}

pub fn model_by_name(name: &str) -> Option<Box<dyn MemoryModel>> {
    match name {
        "tso" => Some(Box::new(Tso)),
        "sc" => Some(Box::new(Sc)),
        _ => None,
    }
}

/// Reads still waiting for a source.
pub fn unsat_reads(cube: &Cube) -> impl Iterator<Item = &Event> {
    cube.events
        .iter()
        .filter(|e| e.dir == Dir::Read && !e.satisfied)
}

/// The ghb edges a group of new events of process `actor` gets against the
/// events already in `cube`. New events precede all old ones in program
/// order, since the search runs backwards.
pub fn extend_ghb(
    model: &dyn MemoryModel,
    cube: &Cube,
    new: &[Event],
    actor: ProcVar,
) -> Vec<(Eid, Eid)> {
    let mut out = Vec::new();
    let mut push = |a: Eid, b: Eid| {
        if !out.contains(&(a, b)) {
            out.push((a, b));
        }
    };
    for n in new {
        for o in &cube.events {
            if o.eid() == n.eid() {
                continue;
            }
            // preserved program order
            if o.atom.owner == actor && model.preserves(n.dir, o.dir) {
                push(n.eid(), o.eid());
            }
            if n.dir == Dir::Write {
                // a fenced later read waits for the write to reach memory
                if o.dir == Dir::Read
                    && o.atom.owner == actor
                    && cube.fences.contains(&(o.eid(), actor))
                {
                    push(n.eid(), o.eid());
                }
                // coherence
                if o.dir == Dir::Write && o.atom.same_location(&n.atom) {
                    push(n.eid(), o.eid());
                }
            }
            // from-read: the new read saw a value older than every later write
            if n.dir == Dir::Read && o.dir == Dir::Write && o.atom.same_location(&n.atom) {
                push(n.eid(), o.eid());
            }
            // a read inside a transition happens before the unsafe state is observed
            if n.dir == Dir::Read && o.dir == Dir::Read && cube.finals.contains(&o.eid()) {
                push(n.eid(), o.eid());
            }
        }
    }
    out
}

/// How a pending read relates to a new write on its location.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReadChoice {
    /// Same process: the read takes the write's value from the store buffer
    /// or memory, no ghb edge.
    Internal,
    /// Another process: the read observes the write.
    ReadsFrom,
    /// Another process: the read happens before the write.
    Before,
}

/// Result of [`rffr`]: consistent branches with their stores, and the
/// branches cut off, each holding the ghb edge that closed a cycle.
#[derive(Debug, Default)]
pub struct Branches {
    pub kept: Vec<(Cube, RelationStore)>,
    pub pruned: Vec<Cube>,
}

/// Splits `(cube, store)` over the choices for every pending read whose
/// location is written by one of `writes`, cutting branches whose relations
/// become inconsistent. `fresh` lists the eids of the new events, which are
/// never pending reads of the old cube.
pub fn rffr(cube: Cube, store: RelationStore, writes: &[Event], fresh: &[Eid]) -> Branches {
    let pending: Vec<(usize, usize)> = cube
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.dir == Dir::Read && !e.satisfied && !fresh.contains(&e.eid()))
        .filter_map(|(n, r)| {
            writes
                .iter()
                .position(|w| w.atom.same_location(&r.atom))
                .map(|w| (n, w))
        })
        .collect();
    let mut branches = vec![(cube, store)];
    let mut pruned = Vec::new();
    for (ri, wi) in pending {
        let w = &writes[wi];
        let mut next = Vec::new();
        for (cube, store) in branches {
            let r = cube.events[ri].clone();
            let choices: &[ReadChoice] = if r.atom.owner == w.atom.owner {
                &[ReadChoice::Internal]
            } else {
                &[ReadChoice::ReadsFrom, ReadChoice::Before]
            };
            for &choice in choices {
                let mut c = cube.clone();
                let mut s = store.clone();
                match choice {
                    ReadChoice::Internal | ReadChoice::ReadsFrom => {
                        if choice == ReadChoice::ReadsFrom {
                            c.add_ghb(w.eid(), r.eid());
                            if s.add_ghb(w.eid(), r.eid()).is_err() {
                                pruned.push(c);
                                continue;
                            }
                        }
                        c.events[ri].satisfied = true;
                        c.add_value(Literal::eq(r.value_term(), w.value_term()));
                    }
                    ReadChoice::Before => {
                        c.add_ghb(r.eid(), w.eid());
                        if s.add_ghb(r.eid(), w.eid()).is_err() {
                            pruned.push(c);
                            continue;
                        }
                    }
                }
                next.push((c, s));
            }
        }
        branches = next;
    }
    Branches {
        kept: branches,
        pruned,
    }
}
