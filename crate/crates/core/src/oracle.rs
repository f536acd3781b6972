//! Explicit-state exploration of a system for a fixed number of processes,
//! on an operational TSO machine with per-process FIFO store buffers.
//!
//! A transition that writes weak memory without reading it appends its
//! writes as one batch to the actor's buffer; a flush step moves the oldest
//! batch to memory. A transition that both reads and writes weak memory runs
//! locked: it needs an empty buffer and writes memory directly. Weak reads
//! see the newest buffered write of the reader, else memory.
//!
//! [`enumerate`] caps every buffer at a fixed number of batches, so an
//! unsafe verdict is always a real run while a safe one holds up to the cap.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::engine::Trace;
use crate::frontend::{Target, TransitionSpec, TransitionSystem};
use crate::logic::{CmpOp, Literal, Name, ProcVar, SortKind, Term, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state space exceeds {0} states")]
    StateSpaceLimit(usize),
    #[error("the trace uses {needed} processes but only {n} are instantiated")]
    TraceProcOverflow { needed: usize, n: usize },
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("process count must be between 1 and 8, got {0}")]
    BadProcessCount(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Safe { states: usize },
    Unsafe { depth: usize },
}

impl OracleVerdict {
    pub fn is_safe(&self) -> bool {
        matches!(self, OracleVerdict::Safe { .. })
    }
}

type Batch = Vec<(usize, Value)>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct State {
    regular: Vec<Value>,
    memory: Vec<Value>,
    buffers: Vec<VecDeque<Batch>>,
}

/// Cell layout: each symbol owns one cell, or one per process.
struct Layout {
    n: usize,
    regular: HashMap<Name, (usize, bool)>,
    weak: HashMap<Name, (usize, bool)>,
    regular_len: usize,
    weak_len: usize,
    regular_domains: Vec<Vec<Value>>,
    weak_domains: Vec<Vec<Value>>,
}

impl Layout {
    fn new(sys: &TransitionSystem, n: usize) -> Self {
        let ints = int_domain(sys);
        let dom = |k: &SortKind| match k {
            SortKind::Bool => vec![Value::Bool(false), Value::Bool(true)],
            SortKind::Enum(cs) => cs.iter().cloned().map(Value::Enum).collect(),
            _ => ints.clone(),
        };
        let mut l = Layout {
            n,
            regular: HashMap::new(),
            weak: HashMap::new(),
            regular_len: 0,
            weak_len: 0,
            regular_domains: Vec::new(),
            weak_domains: Vec::new(),
        };
        for (d, idx) in sys
            .globals
            .iter()
            .map(|d| (d, false))
            .chain(sys.arrays.iter().map(|d| (d, true)))
        {
            l.regular.insert(d.name.clone(), (l.regular_len, idx));
            let cells = if idx { n } else { 1 };
            l.regular_len += cells;
            l.regular_domains
                .extend(std::iter::repeat_n(dom(&d.sort.kind), cells));
        }
        for (d, idx) in sys
            .weak_vars
            .iter()
            .map(|d| (d, false))
            .chain(sys.weak_arrays.iter().map(|d| (d, true)))
        {
            l.weak.insert(d.name.clone(), (l.weak_len, idx));
            let cells = if idx { n } else { 1 };
            l.weak_len += cells;
            l.weak_domains
                .extend(std::iter::repeat_n(dom(&d.sort.kind), cells));
        }
        l
    }

    fn cell(map: &HashMap<Name, (usize, bool)>, name: &str, index: Option<usize>) -> usize {
        let (base, indexed) = map[name];
        if indexed {
            base + index.expect("indexed symbol needs an index")
        } else {
            base
        }
    }

    /// The cell permutation induced by a process permutation.
    fn permute_cells(
        map: &HashMap<Name, (usize, bool)>,
        len: usize,
        n: usize,
        perm: &[usize],
    ) -> Vec<usize> {
        let mut out: Vec<usize> = (0..len).collect();
        for &(base, indexed) in map.values() {
            if indexed {
                for p in 0..n {
                    out[base + p] = base + perm[p];
                }
            }
        }
        out
    }
}

/// Integer constants of the system plus one value below all of them.
fn int_domain(sys: &TransitionSystem) -> Vec<Value> {
    let mut ks: BTreeSet<i64> = BTreeSet::new();
    let mut visit = |l: &Literal| {
        for t in l.terms() {
            if let Term::Const(Value::Int(k)) = t {
                ks.insert(*k);
            }
        }
    };
    sys.init.body.iter().for_each(&mut visit);
    sys.unsafe_specs
        .iter()
        .flat_map(|u| &u.body)
        .for_each(&mut visit);
    for t in &sys.transitions {
        t.guard.iter().for_each(&mut visit);
        t.foralls.iter().flat_map(|f| &f.body).for_each(&mut visit);
        for u in &t.updates {
            visit(&Literal::Cmp(CmpOp::Eq, u.value.clone(), u.value.clone()));
        }
    }
    let low = ks.iter().next().map_or(0, |k| k - 1);
    ks.insert(low);
    ks.into_iter().map(Value::Int).collect()
}

struct Machine<'a> {
    sys: &'a TransitionSystem,
    layout: Layout,
    perms: Vec<Vec<usize>>,
    reg_perms: Vec<Vec<usize>>,
    weak_perms: Vec<Vec<usize>>,
    capacity: Option<usize>,
}

/// Variable bindings while evaluating a formula.
type Env = Vec<(ProcVar, usize)>;

fn lookup(env: &Env, p: ProcVar) -> usize {
    env.iter()
        .rev()
        .find(|(q, _)| *q == p)
        .map(|(_, v)| *v)
        .expect("bound process variable")
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Val {
    V(Value),
    P(usize),
}

impl<'a> Machine<'a> {
    fn new(sys: &'a TransitionSystem, n: usize, capacity: Option<usize>) -> Self {
        let layout = Layout::new(sys, n);
        let mut perms = Vec::new();
        permutations(&mut (0..n).collect::<Vec<_>>(), 0, &mut perms);
        let reg_perms = perms
            .iter()
            .map(|p| Layout::permute_cells(&layout.regular, layout.regular_len, n, p))
            .collect();
        let weak_perms = perms
            .iter()
            .map(|p| Layout::permute_cells(&layout.weak, layout.weak_len, n, p))
            .collect();
        Machine {
            sys,
            layout,
            perms,
            reg_perms,
            weak_perms,
            capacity,
        }
    }

    fn view(&self, s: &State, p: usize, cell: usize) -> Value {
        for batch in s.buffers[p].iter().rev() {
            if let Some((_, v)) = batch.iter().rev().find(|(c, _)| *c == cell) {
                return v.clone();
            }
        }
        s.memory[cell].clone()
    }

    fn term(&self, s: &State, t: &Term, env: &Env, actor: Option<usize>) -> Val {
        let ix = |i: &Option<ProcVar>| i.map(|p| lookup(env, p));
        match t {
            Term::Const(v) => Val::V(v.clone()),
            Term::Proc(p) => Val::P(lookup(env, *p)),
            Term::Array { name, index } => {
                Val::V(s.regular[Layout::cell(&self.layout.regular, name, ix(index))].clone())
            }
            Term::Weak { name, index } => {
                let cell = Layout::cell(&self.layout.weak, name, ix(index));
                Val::V(self.view(s, actor.expect("weak access needs an acting process"), cell))
            }
            Term::View { proc, name, index } => {
                let cell = Layout::cell(&self.layout.weak, name, ix(index));
                Val::V(self.view(s, lookup(env, *proc), cell))
            }
            Term::Val { .. } => unreachable!("explicit terms do not occur in descriptions"),
        }
    }

    fn lit(&self, s: &State, l: &Literal, env: &Env, actor: Option<usize>) -> bool {
        match l {
            Literal::True => true,
            Literal::False => false,
            Literal::FenceGuard => {
                s.buffers[actor.expect("fence needs an acting process")].is_empty()
            }
            Literal::Cmp(op, a, b) => {
                let (x, y) = (self.term(s, a, env, actor), self.term(s, b, env, actor));
                match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt | CmpOp::Le => match (x, y) {
                        (Val::V(Value::Int(m)), Val::V(Value::Int(k))) => {
                            if *op == CmpOp::Lt {
                                m < k
                            } else {
                                m <= k
                            }
                        }
                        _ => false,
                    },
                }
            }
            _ => unreachable!("explicit literals do not occur in descriptions"),
        }
    }

    fn enabled(&self, s: &State, t: &TransitionSpec, env: &Env) -> bool {
        let actor = env[0].1;
        if locked(t) && !s.buffers[actor].is_empty() {
            return false;
        }
        if !t.guard.iter().all(|l| self.lit(s, l, env, Some(actor))) {
            return false;
        }
        t.foralls.iter().all(|f| {
            let except: Vec<usize> = f.except.iter().map(|p| lookup(env, *p)).collect();
            (0..self.layout.n).filter(|k| !except.contains(k)).all(|k| {
                let mut e = env.clone();
                e.push((f.var, k));
                f.body.iter().all(|l| self.lit(s, l, &e, Some(actor)))
            })
        })
    }

    fn apply(&self, s: &State, t: &TransitionSpec, env: &Env) -> State {
        let actor = env[0].1;
        let mut next = s.clone();
        let mut batch: Batch = Vec::new();
        for u in &t.updates {
            let Val::V(v) = self.term(s, &u.value, env, Some(actor)) else {
                unreachable!("validated updates assign values")
            };
            match &u.target {
                Target::Regular { name, index } => {
                    next.regular
                        [Layout::cell(&self.layout.regular, name, index.map(|p| lookup(env, p)))] =
                        v;
                }
                Target::Weak { name, index } => {
                    batch.push((
                        Layout::cell(&self.layout.weak, name, index.map(|p| lookup(env, p))),
                        v,
                    ));
                }
            }
        }
        if !batch.is_empty() {
            if locked(t) {
                for (c, v) in batch {
                    next.memory[c] = v;
                }
            } else {
                next.buffers[actor].push_back(batch);
            }
        }
        next
    }

    fn flush(&self, s: &State, p: usize) -> Option<State> {
        let mut next = s.clone();
        let batch = next.buffers[p].pop_front()?;
        for (c, v) in batch {
            next.memory[c] = v;
        }
        Some(next)
    }

    /// Parameter bindings: distinct processes for all parameters.
    fn bindings(&self, arity: usize) -> Vec<Env> {
        let mut out = Vec::new();
        fn go(k: usize, arity: usize, n: usize, cur: &mut Env, out: &mut Vec<Env>) {
            if k == arity {
                out.push(cur.clone());
                return;
            }
            for p in 0..n {
                if cur.iter().all(|(_, q)| *q != p) {
                    cur.push((ProcVar(k as u32), p));
                    go(k + 1, arity, n, cur, out);
                    cur.pop();
                }
            }
        }
        go(0, arity, self.layout.n, &mut Vec::new(), &mut out);
        out
    }

    fn successors(&self, s: &State) -> Vec<State> {
        let mut out = Vec::new();
        for t in &self.sys.transitions {
            for env in self.bindings(t.params.len()) {
                let full = self
                    .capacity
                    .is_some_and(|c| s.buffers[env[0].1].len() >= c);
                if full && t.writes_weak() && !locked(t) {
                    continue;
                }
                if self.enabled(s, t, &env) {
                    out.push(self.apply(s, t, &env));
                }
            }
        }
        for p in 0..self.layout.n {
            if let Some(n) = self.flush(s, p) {
                out.push(n);
            }
        }
        out
    }

    fn unsafe_instance(&self, s: &State, ui: usize, procs: &[usize]) -> bool {
        let u = &self.sys.unsafe_specs[ui];
        let env: Env = u.procs().into_iter().zip(procs.iter().copied()).collect();
        u.body.iter().all(|l| self.lit(s, l, &env, None))
    }

    fn is_unsafe(&self, s: &State) -> bool {
        (0..self.sys.unsafe_specs.len()).any(|ui| {
            let arity = self.sys.unsafe_specs[ui].params.len();
            self.bindings(arity).iter().any(|env| {
                let procs: Vec<usize> = env.iter().map(|(_, p)| *p).collect();
                self.unsafe_instance(s, ui, &procs)
            })
        })
    }

    fn initial_states(&self) -> Vec<State> {
        let l = &self.layout;
        let mut out = Vec::new();
        let doms: Vec<&Vec<Value>> = l.regular_domains.iter().chain(&l.weak_domains).collect();
        let mut cur: Vec<Value> = Vec::with_capacity(doms.len());
        fn go(k: usize, doms: &[&Vec<Value>], cur: &mut Vec<Value>, f: &mut dyn FnMut(&[Value])) {
            if k == doms.len() {
                f(cur);
                return;
            }
            for v in doms[k] {
                cur.push(v.clone());
                go(k + 1, doms, cur, f);
                cur.pop();
            }
        }
        let mut seen = HashSet::new();
        go(0, &doms, &mut cur, &mut |vals| {
            let s = State {
                regular: vals[..l.regular_len].to_vec(),
                memory: vals[l.regular_len..].to_vec(),
                buffers: vec![VecDeque::new(); l.n],
            };
            let ok = (0..l.n).all(|j| {
                let env = vec![(crate::frontend::InitSpec::VAR, j)];
                self.sys
                    .init
                    .body
                    .iter()
                    .all(|lit| self.lit(&s, lit, &env, Some(j)))
            });
            if ok && seen.insert(self.canonical(&s)) {
                out.push(s);
            }
        });
        out
    }

    fn canonical(&self, s: &State) -> State {
        let mut best: Option<State> = None;
        for (k, perm) in self.perms.iter().enumerate() {
            let (rp, wp) = (&self.reg_perms[k], &self.weak_perms[k]);
            let mut regular = s.regular.clone();
            for (c, v) in s.regular.iter().enumerate() {
                regular[rp[c]] = v.clone();
            }
            let mut memory = s.memory.clone();
            for (c, v) in s.memory.iter().enumerate() {
                memory[wp[c]] = v.clone();
            }
            let mut buffers = vec![VecDeque::new(); self.layout.n];
            for (p, b) in s.buffers.iter().enumerate() {
                buffers[perm[p]] = b
                    .iter()
                    .map(|batch| batch.iter().map(|(c, v)| (wp[*c], v.clone())).collect())
                    .collect();
            }
            let cand = State {
                regular,
                memory,
                buffers,
            };
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
        best.expect("at least the identity permutation")
    }
}

fn locked(t: &TransitionSpec) -> bool {
    t.reads_weak() && t.writes_weak()
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Batches a store buffer holds during [`enumerate`].
pub const DEFAULT_BUFFER_CAPACITY: usize = 3;

/// Breadth-first exploration of all reachable states for `n` processes, with
/// buffers capped at [`DEFAULT_BUFFER_CAPACITY`].
pub fn enumerate(
    sys: &TransitionSystem,
    n: usize,
    max_states: usize,
) -> Result<OracleVerdict, OracleError> {
    enumerate_bounded(sys, n, max_states, DEFAULT_BUFFER_CAPACITY)
}

/// Like [`enumerate`], with a chosen buffer capacity. A process whose buffer
/// is full must flush before its next buffered write.
pub fn enumerate_bounded(
    sys: &TransitionSystem,
    n: usize,
    max_states: usize,
    capacity: usize,
) -> Result<OracleVerdict, OracleError> {
    if n == 0 || n > 8 {
        return Err(OracleError::BadProcessCount(n));
    }
    let m = Machine::new(sys, n, Some(capacity.max(1)));
    let mut seen: HashSet<State> = HashSet::new();
    let mut queue: VecDeque<(State, usize)> = VecDeque::new();
    for s in m.initial_states() {
        let c = m.canonical(&s);
        if seen.insert(c.clone()) {
            queue.push_back((c, 0));
        }
    }
    while let Some((s, depth)) = queue.pop_front() {
        if m.is_unsafe(&s) {
            return Ok(OracleVerdict::Unsafe { depth });
        }
        for next in m.successors(&s) {
            let c = m.canonical(&next);
            if !seen.contains(&c) {
                if seen.len() >= max_states {
                    return Err(OracleError::StateSpaceLimit(max_states));
                }
                seen.insert(c.clone());
                queue.push_back((c, depth + 1));
            }
        }
    }
    Ok(OracleVerdict::Safe { states: seen.len() })
}

/// Whether the steps of `trace`, in order and with store-buffer flushes
/// placed anywhere, lead from some initial state with `n` processes to a
/// state where the trace's unsafe instance holds.
pub fn replay(sys: &TransitionSystem, trace: &Trace, n: usize) -> Result<bool, OracleError> {
    if n == 0 || n > 8 {
        return Err(OracleError::BadProcessCount(n));
    }
    let mut names: BTreeSet<ProcVar> = trace.procs.clone();
    names.extend(trace.unsafe_procs.iter().copied());
    for s in &trace.steps {
        names.extend(s.procs.iter().copied());
    }
    if names.len() > n {
        return Err(OracleError::TraceProcOverflow {
            needed: names.len(),
            n,
        });
    }
    let index = |p: &ProcVar| names.iter().position(|q| q == p).expect("collected above");
    let mut steps = Vec::new();
    for st in &trace.steps {
        let t = sys
            .transition(&st.transition)
            .ok_or_else(|| OracleError::UnknownTransition(st.transition.to_string()))?;
        let env: Env = st
            .procs
            .iter()
            .enumerate()
            .map(|(k, p)| (ProcVar(k as u32), index(p)))
            .collect();
        steps.push((t, env));
    }
    let target: Vec<usize> = trace.unsafe_procs.iter().map(index).collect();
    let m = Machine::new(sys, n, None);
    let mut seen: HashSet<(usize, State)> = HashSet::new();
    let mut queue: VecDeque<(usize, State)> =
        m.initial_states_all().into_iter().map(|s| (0, s)).collect();
    while let Some((k, s)) = queue.pop_front() {
        if !seen.insert((k, s.clone())) {
            continue;
        }
        if k == steps.len() && m.unsafe_instance(&s, trace.unsafe_index, &target) {
            return Ok(true);
        }
        if k < steps.len() {
            let (t, env) = &steps[k];
            if m.enabled(&s, t, env) {
                queue.push_back((k + 1, m.apply(&s, t, env)));
            }
        }
        for p in 0..n {
            if let Some(next) = m.flush(&s, p) {
                queue.push_back((k, next));
            }
        }
    }
    Ok(false)
}

impl Machine<'_> {
    /// Initial states without symmetry reduction, for replaying named runs.
    fn initial_states_all(&self) -> Vec<State> {
        let mut out = Vec::new();
        for s in self.initial_states() {
            for (k, _) in self.perms.iter().enumerate() {
                let (rp, wp) = (&self.reg_perms[k], &self.weak_perms[k]);
                let mut regular = s.regular.clone();
                for (c, v) in s.regular.iter().enumerate() {
                    regular[rp[c]] = v.clone();
                }
                let mut memory = s.memory.clone();
                for (c, v) in s.memory.iter().enumerate() {
                    memory[wp[c]] = v.clone();
                }
                let st = State {
                    regular,
                    memory,
                    buffers: s.buffers.clone(),
                };
                if !out.contains(&st) {
                    out.push(st);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_system;

    const SB: &str = "
type role = A | B
type st = S | W | D
array Role[proc] : role
array PC[proc] : st
array R[proc] : bool
weak var x : bool
weak var y : bool
init (j) { PC[j] = S && R[j] = False && x = False && y = False }
unsafe (i j) { Role[i] = A && Role[j] = B && PC[i] = D && PC[j] = D && R[i] = False && R[j] = False }
transition wa (i) requires { PC[i] = S && Role[i] = A } { x := True; PC[i] := W }
transition ra (i) requires { PC[i] = W && Role[i] = A FENCE } { R[i] := y; PC[i] := D }
transition wb (i) requires { PC[i] = S && Role[i] = B } { y := True; PC[i] := W }
transition rb (i) requires { PC[i] = W && Role[i] = B FENCE } { R[i] := x; PC[i] := D }
";

    #[test]
    fn store_buffering_needs_the_buffer() {
        let plain = parse_system(&SB.replace(" FENCE", "")).unwrap();
        assert!(!enumerate(&plain, 2, 100_000).unwrap().is_safe());
        let fenced = parse_system(&SB.replace(" FENCE", " && fence()")).unwrap();
        assert!(enumerate(&fenced, 2, 100_000).unwrap().is_safe());
        assert!(enumerate(&fenced, 3, 100_000).unwrap().is_safe());
    }

    #[test]
    fn buffers_are_capped() {
        // a process may keep writing forever; only the cap keeps this finite
        let sys = parse_system(
            "type st = A | B
array PC[proc] : st
weak var x : bool
init (j) { PC[j] = A && x = False }
unsafe (i) { PC[i] = B }
transition w (i) requires { PC[i] = A } { x := False }",
        )
        .unwrap();
        let states = |cap| match enumerate_bounded(&sys, 1, 1_000, cap).unwrap() {
            OracleVerdict::Safe { states } => states,
            other => panic!("{other:?}"),
        };
        // an empty buffer plus one state per buffer length
        assert_eq!(states(1), 2);
        assert_eq!(states(4), 5);
    }

    #[test]
    fn limits_and_bad_counts() {
        let plain = parse_system(&SB.replace(" FENCE", "")).unwrap();
        assert_eq!(
            enumerate(&plain, 0, 10),
            Err(OracleError::BadProcessCount(0))
        );
        let fenced = parse_system(&SB.replace(" FENCE", " && fence()")).unwrap();
        assert_eq!(
            enumerate(&fenced, 3, 5),
            Err(OracleError::StateSpaceLimit(5))
        );
    }

    #[test]
    fn int_domain_adds_a_smaller_value() {
        let sys = parse_system("var g : int\ninit (j) { g = 3 }\nunsafe (i) { g < 1 }\n").unwrap();
        assert_eq!(
            int_domain(&sys),
            vec![Value::Int(0), Value::Int(1), Value::Int(3)]
        );
        assert!(enumerate(&sys, 1, 100).unwrap().is_safe());
    }

    #[test]
    fn canonical_form_is_permutation_invariant() {
        let sys = parse_system(&SB.replace(" FENCE", "")).unwrap();
        let m = Machine::new(&sys, 3, None);
        let inits = m.initial_states_all();
        let canon: HashSet<State> = inits.iter().map(|s| m.canonical(s)).collect();
        assert!(canon.len() < inits.len());
        for s in &inits {
            let c = m.canonical(s);
            assert_eq!(m.canonical(&c), c);
        }
    }
}
