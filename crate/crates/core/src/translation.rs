//! Translation from the description language into the explicit event
//! language.
//!
//! Weak accesses become reads with a fresh event identifier: `i @ α[j]` in an
//! unsafe formula is `Rd_α(e, i, j) ∧ Val_α(e, j)`, and a transition reads
//! every weak location through one shared identifier `e_r` and writes through
//! `e_w`.

use std::collections::BTreeMap;
use std::fmt;

use crate::frontend::{InitSpec, Target, TransitionSpec, TransitionSystem, UnsafeSpec};
use crate::logic::{Cube, Eid, Event, EventAtom, Literal, Name, ProcVar, Substitution, Term};

/// `∀j. I(j)` with one placeholder event identifier per weak symbol, standing
/// for the initial content of that symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitInit {
    pub body: Vec<Literal>,
    pub placeholders: BTreeMap<Name, Eid>,
}

impl ExplicitInit {
    /// `I(p)` with the placeholders moved to `base, base + 1, ...`.
    pub fn instance(&self, p: ProcVar, base: u32) -> Vec<Literal> {
        let mut s = Substitution::new().with_proc(InitSpec::VAR, p);
        for e in self.placeholders.values() {
            s = s.with_eid(*e, Eid(base + e.0));
        }
        self.body.iter().map(|l| l.rename(&s)).collect()
    }

    pub fn placeholder(&self, name: &str, base: u32) -> Option<Eid> {
        self.placeholders.get(name).map(|e| Eid(base + e.0))
    }
}

pub fn translate_init(sys: &TransitionSystem) -> ExplicitInit {
    let placeholders: BTreeMap<Name, Eid> = sys
        .weak_vars
        .iter()
        .chain(&sys.weak_arrays)
        .enumerate()
        .map(|(n, d)| (d.name.clone(), Eid(n as u32)))
        .collect();
    let body = sys
        .init
        .body
        .iter()
        .map(|l| {
            map_terms(l, &mut |t| match t {
                Term::Weak { name, index } => Term::Val {
                    name: name.clone(),
                    eid: placeholders[name],
                    index: *index,
                },
                other => other.clone(),
            })
        })
        .collect();
    ExplicitInit { body, placeholders }
}

fn map_terms(l: &Literal, f: &mut impl FnMut(&Term) -> Term) -> Literal {
    match l {
        Literal::Cmp(op, a, b) => Literal::cmp(*op, f(a), f(b)),
        other => other.clone(),
    }
}

/// Translates an unsafe formula into a cube whose event identifiers start at
/// `first`. Identical view terms share one read.
pub fn translate_unsafe(spec: &UnsafeSpec, first: u32) -> Cube {
    let mut cube = Cube {
        procs: spec.procs().into_iter().collect(),
        ..Cube::default()
    };
    let mut reads: BTreeMap<(ProcVar, Name, Option<ProcVar>), Eid> = BTreeMap::new();
    let mut next = first;
    for l in &spec.body {
        let lit = map_terms(l, &mut |t| match t {
            Term::View { proc, name, index } => {
                let e = *reads
                    .entry((*proc, name.clone(), *index))
                    .or_insert_with(|| {
                        next += 1;
                        Eid(next - 1)
                    });
                Term::Val {
                    name: name.clone(),
                    eid: e,
                    index: *index,
                }
            }
            other => other.clone(),
        });
        cube.add_value(lit);
    }
    for ((owner, name, index), e) in reads {
        cube.add_event(Event::read(EventAtom {
            eid: e,
            var: name,
            owner,
            index,
        }));
        cube.finals.insert(e);
    }
    cube
}

/// One `∀k` guard in explicit form; `reads` mention `var` and are emitted
/// once per instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitForall {
    pub var: ProcVar,
    pub except: Vec<ProcVar>,
    pub body: Vec<Literal>,
    pub reads: Vec<EventAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakWrite {
    pub atom: EventAtom,
    pub value: Term,
}

/// A transition over the process variables `#0` (actor) to `#n`, reading
/// through `e_r` and writing through `e_w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitTransition {
    pub name: Name,
    pub arity: usize,
    pub e_r: Eid,
    pub e_w: Eid,
    pub guard: Vec<Literal>,
    pub reads: Vec<EventAtom>,
    pub foralls: Vec<ExplicitForall>,
    pub fence: bool,
    /// `x[i] := v` for regular symbols, already in explicit form.
    pub regular: Vec<(Term, Term)>,
    pub writes: Vec<WeakWrite>,
}

impl ExplicitTransition {
    /// Whether the transition both reads and writes weak memory, so that its
    /// read and write happen atomically.
    pub fn is_rmw(&self) -> bool {
        !self.writes.is_empty()
            && (!self.reads.is_empty() || self.foralls.iter().any(|f| !f.reads.is_empty()))
    }

    pub fn reads_weak(&self) -> bool {
        !self.reads.is_empty() || self.foralls.iter().any(|f| !f.reads.is_empty())
    }
}

pub fn translate_transition(spec: &TransitionSpec, e_r: Eid, e_w: Eid) -> ExplicitTransition {
    let actor = TransitionSpec::ACTOR;
    fn weak_to_val(t: &Term, e_r: Eid, reads: &mut Vec<EventAtom>) -> Term {
        match t {
            Term::Weak { name, index } => {
                let atom = EventAtom {
                    eid: e_r,
                    var: name.clone(),
                    owner: TransitionSpec::ACTOR,
                    index: *index,
                };
                if !reads.contains(&atom) {
                    reads.push(atom);
                }
                Term::Val {
                    name: name.clone(),
                    eid: e_r,
                    index: *index,
                }
            }
            other => other.clone(),
        }
    }
    let mut reads = Vec::new();
    let mut guard = Vec::new();
    let mut fence = false;
    for l in &spec.guard {
        if *l == Literal::FenceGuard {
            fence = true;
            continue;
        }
        guard.push(map_terms(l, &mut |t| weak_to_val(t, e_r, &mut reads)));
    }
    let foralls = spec
        .foralls
        .iter()
        .map(|f| {
            let mut freads = Vec::new();
            let body = f
                .body
                .iter()
                .map(|l| map_terms(l, &mut |t| weak_to_val(t, e_r, &mut freads)))
                .collect();
            // reads that do not mention the bound variable are ordinary reads
            let (own, shared): (Vec<_>, Vec<_>) = freads
                .into_iter()
                .partition(|a: &EventAtom| a.index == Some(f.var));
            for a in shared {
                if !reads.contains(&a) {
                    reads.push(a);
                }
            }
            ExplicitForall {
                var: f.var,
                except: f.except.clone(),
                body,
                reads: own,
            }
        })
        .collect();
    let mut regular = Vec::new();
    let mut writes = Vec::new();
    for u in &spec.updates {
        let value = weak_to_val(&u.value, e_r, &mut reads);
        match &u.target {
            Target::Regular { name, index } => regular.push((
                Term::Array {
                    name: name.clone(),
                    index: *index,
                },
                value,
            )),
            Target::Weak { name, index } => writes.push(WeakWrite {
                atom: EventAtom {
                    eid: e_w,
                    var: name.clone(),
                    owner: actor,
                    index: *index,
                },
                value,
            }),
        }
    }
    ExplicitTransition {
        name: spec.name.clone(),
        arity: spec.params.len(),
        e_r,
        e_w,
        guard,
        reads,
        foralls,
        fence,
        regular,
        writes,
    }
}

impl fmt::Display for ExplicitTransition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = (0..self.arity)
            .map(|n| ProcVar(n as u32).to_string())
            .collect();
        writeln!(
            f,
            "transition {}({}) reads {} writes {}",
            self.name,
            params.join(","),
            self.e_r,
            self.e_w
        )?;
        let mut g: Vec<String> = self
            .reads
            .iter()
            .map(|a| Literal::Rd(a.clone()).to_string())
            .collect();
        if self.fence {
            g.push(Literal::Fence(self.e_r, ProcVar(0)).to_string());
        }
        g.extend(self.guard.iter().map(|l| l.to_string()));
        for fa in &self.foralls {
            let mut inner: Vec<String> = fa
                .reads
                .iter()
                .map(|a| Literal::Rd(a.clone()).to_string())
                .collect();
            inner.extend(fa.body.iter().map(|l| l.to_string()));
            let ex: Vec<String> = fa
                .except
                .iter()
                .map(|p| format!("{} = {p} || ", fa.var))
                .collect();
            g.push(format!(
                "forall {}. {}({})",
                fa.var,
                ex.concat(),
                inner.join(" && ")
            ));
        }
        if self.is_rmw() {
            g.push(Literal::ghb_equal(self.e_r, self.e_w).to_string());
        }
        writeln!(
            f,
            "  guard  {}",
            if g.is_empty() {
                "true".into()
            } else {
                g.join(" && ")
            }
        )?;
        for (x, v) in &self.regular {
            writeln!(f, "  update {x}' = {v}")?;
        }
        for w in &self.writes {
            let val = Term::Val {
                name: w.atom.var.clone(),
                eid: w.atom.eid,
                index: w.atom.index,
            };
            writeln!(
                f,
                "  write  {} && {val} = {}",
                Literal::Wr(w.atom.clone()),
                w.value
            )?;
        }
        Ok(())
    }
}

/// The whole system in explicit form, as printed by `weakmc dump --explicit`.
pub fn dump_explicit(sys: &TransitionSystem) -> String {
    let init = translate_init(sys);
    let mut out = String::new();
    let body: Vec<String> = init.body.iter().map(|l| l.to_string()).collect();
    out.push_str(&format!(
        "init {}. {}\n",
        InitSpec::VAR,
        if body.is_empty() {
            "true".into()
        } else {
            body.join(" && ")
        }
    ));
    let mut next = 1;
    for u in &sys.unsafe_specs {
        let c = translate_unsafe(u, next);
        next += c.eids.len() as u32;
        let procs: Vec<String> = c.procs.iter().map(|p| p.to_string()).collect();
        out.push_str(&format!("unsafe ({}) {c}\n", procs.join(",")));
    }
    for t in &sys.transitions {
        out.push('\n');
        out.push_str(&translate_transition(t, Eid(1), Eid(2)).to_string());
    }
    out
}
