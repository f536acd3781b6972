//! Satisfiability of cubes, entailment and subsumption.
//!
//! Value literals are decided by congruence over ground terms, a finite
//! domain search for enumerated sorts and difference constraints for
//! integers. The relational part is delegated to [`RelationStore`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::logic::{
    mk_cube, CmpOp, Cube, Dir, Eid, Literal, ProcVar, Signature, SortKind, Substitution, Term,
    Value,
};
use crate::relations::RelationStore;
use crate::translation::ExplicitInit;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("unsupported literal `{0}`")]
    UnsupportedLiteral(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
}

/// Renamings witnessing that a visited cube covers a new one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubsumptionCertificate {
    pub procs: BTreeMap<ProcVar, ProcVar>,
    pub eids: BTreeMap<Eid, Eid>,
}

impl SubsumptionCertificate {
    pub fn substitution(&self) -> Substitution {
        let mut s = Substitution::new();
        for (&a, &b) in &self.procs {
            s = s.with_proc(a, b);
        }
        for (&a, &b) in &self.eids {
            s = s.with_eid(a, b);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Int,
    Finite(usize),
    Open,
}

/// Decision procedures, parameterized by the system signature.
#[derive(Clone, Debug, Default)]
pub struct Solver {
    sig: Signature,
}

impl Solver {
    pub fn new(sig: Signature) -> Self {
        Solver { sig }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    /// Full check: relations first, then values.
    pub fn check_sat(&self, cube: &Cube) -> Result<SatResult, SolverError> {
        if RelationStore::from_cube(cube).is_err() {
            return Ok(SatResult::Unsat);
        }
        Ok(if self.values_sat(&cube.values)? {
            SatResult::Sat
        } else {
            SatResult::Unsat
        })
    }

    /// Whether a conjunction of value literals has a model.
    pub fn values_sat(&self, lits: &[Literal]) -> Result<bool, SolverError> {
        let mut terms: BTreeMap<Term, usize> = BTreeMap::new();
        let mut list: Vec<Term> = Vec::new();
        let mut id = |t: &Term, list: &mut Vec<Term>| {
            *terms.entry(t.clone()).or_insert_with(|| {
                list.push(t.clone());
                list.len() - 1
            })
        };
        let mut eqs = Vec::new();
        let mut nes = Vec::new();
        let mut ords = Vec::new();
        for l in lits {
            match l {
                Literal::True => {}
                Literal::False => return Ok(false),
                Literal::Cmp(op, a, b) => {
                    if let (Term::Proc(p), Term::Proc(q)) = (a, b) {
                        match op {
                            CmpOp::Eq if p != q => return Ok(false),
                            CmpOp::Ne if p == q => return Ok(false),
                            CmpOp::Eq | CmpOp::Ne => continue,
                            _ => return Err(SolverError::UnsupportedLiteral(l.to_string())),
                        }
                    }
                    if matches!(a, Term::Proc(_)) || matches!(b, Term::Proc(_)) {
                        return Err(SolverError::UnsupportedLiteral(l.to_string()));
                    }
                    let (x, y) = (id(a, &mut list), id(b, &mut list));
                    match op {
                        CmpOp::Eq => eqs.push((x, y)),
                        CmpOp::Ne => nes.push((x, y)),
                        CmpOp::Lt => ords.push((x, y, -1i64)),
                        CmpOp::Le => ords.push((x, y, 0)),
                    }
                }
                other => return Err(SolverError::UnsupportedLiteral(other.to_string())),
            }
        }
        let n = list.len();
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut c = x;
            while uf[c] != r {
                let next = uf[c];
                uf[c] = r;
                c = next;
            }
            r
        }
        for &(x, y) in &eqs {
            let (a, b) = (find(&mut uf, x), find(&mut uf, y));
            uf[a] = b;
        }
        // per-class constant and kind
        let mut constant: BTreeMap<usize, Value> = BTreeMap::new();
        let mut kind: BTreeMap<usize, Kind> = BTreeMap::new();
        for (i, t) in list.iter().enumerate() {
            let r = find(&mut uf, i);
            if let Term::Const(v) = t {
                if let Some(old) = constant.get(&r) {
                    if old != v {
                        return Ok(false);
                    }
                }
                constant.insert(r, v.clone());
            }
            let k = match self.sig.term_sort(t).map(|s| s.kind) {
                Some(SortKind::Int) => Some(Kind::Int),
                Some(SortKind::Bool) => Some(Kind::Finite(2)),
                Some(SortKind::Enum(cs)) => Some(Kind::Finite(cs.len())),
                _ => None,
            };
            if let Some(k) = k {
                kind.insert(r, k);
            }
        }
        for &(x, y, _) in &ords {
            for z in [x, y] {
                let r = find(&mut uf, z);
                match kind.get(&r) {
                    Some(Kind::Finite(_)) => {
                        return Err(SolverError::UnsupportedLiteral(format!(
                            "ordering on `{}`",
                            list[z]
                        )))
                    }
                    _ => {
                        kind.insert(r, Kind::Int);
                    }
                }
            }
        }
        let mut ne_classes = Vec::new();
        for &(x, y) in &nes {
            let (a, b) = (find(&mut uf, x), find(&mut uf, y));
            if a == b {
                return Ok(false);
            }
            if let (Some(u), Some(v)) = (constant.get(&a), constant.get(&b)) {
                if u != v {
                    continue;
                }
            }
            ne_classes.push((a.min(b), a.max(b)));
        }
        // sort information flows along disequalities
        loop {
            let mut changed = false;
            for &(a, b) in &ne_classes {
                match (kind.get(&a).copied(), kind.get(&b).copied()) {
                    (Some(k), None) => {
                        kind.insert(b, k);
                        changed = true;
                    }
                    (None, Some(k)) => {
                        kind.insert(a, k);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        let kind_of = |c: usize| kind.get(&c).copied().unwrap_or(Kind::Open);

        // finite domains
        let finite_nes: Vec<(usize, usize)> = ne_classes
            .iter()
            .copied()
            .filter(|&(a, _)| matches!(kind_of(a), Kind::Finite(_)))
            .collect();
        if !finite_nes.is_empty() && !self.color(&finite_nes, &constant, &list, &mut uf)? {
            return Ok(false);
        }

        // integers
        let int_nes: Vec<(usize, usize)> = ne_classes
            .iter()
            .copied()
            .filter(|&(a, _)| kind_of(a) == Kind::Int)
            .collect();
        let mut diff: Vec<(usize, usize, i64)> = Vec::new();
        for &(x, y, w) in &ords {
            diff.push((find(&mut uf, x), find(&mut uf, y), w));
        }
        if diff.is_empty() && int_nes.is_empty() {
            return Ok(true);
        }
        let int_consts: Vec<(usize, i64)> = constant
            .iter()
            .filter_map(|(&c, v)| match v {
                Value::Int(k) => Some((c, *k)),
                _ => None,
            })
            .collect();
        Ok(int_search(n, &diff, &int_consts, &int_nes))
    }

    fn color(
        &self,
        nes: &[(usize, usize)],
        constant: &BTreeMap<usize, Value>,
        list: &[Term],
        uf: &mut [usize],
    ) -> Result<bool, SolverError> {
        // domain per class: the sort's constants, taken from any member
        let mut domains: BTreeMap<usize, Vec<Value>> = BTreeMap::new();
        for (i, t) in list.iter().enumerate() {
            let mut r = i;
            while uf[r] != r {
                r = uf[r];
            }
            if let Some(d) = self.sig.term_sort(t).and_then(|s| s.domain()) {
                domains.entry(r).or_insert(d);
            }
        }
        let nodes: BTreeSet<usize> = nes.iter().flat_map(|&(a, b)| [a, b]).collect();
        // classes reached only through disequalities borrow a neighbour's domain
        loop {
            let mut changed = false;
            for &(a, b) in nes {
                if !domains.contains_key(&a) {
                    if let Some(d) = domains.get(&b).cloned() {
                        domains.insert(a, d);
                        changed = true;
                    }
                } else if !domains.contains_key(&b) {
                    if let Some(d) = domains.get(&a).cloned() {
                        domains.insert(b, d);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let order: Vec<usize> = nodes.into_iter().collect();
        let mut assign: BTreeMap<usize, Value> = BTreeMap::new();
        let mut choices: Vec<Vec<Value>> = Vec::new();
        for &c in &order {
            let opts = match constant.get(&c) {
                Some(v) => vec![v.clone()],
                None => match domains.get(&c) {
                    Some(d) => d.clone(),
                    None => {
                        // without a known domain there is always a fresh value
                        return Ok(true);
                    }
                },
            };
            choices.push(opts);
        }
        let adj: Vec<Vec<usize>> = order
            .iter()
            .map(|&c| {
                nes.iter()
                    .filter_map(|&(a, b)| {
                        if a == c {
                            Some(b)
                        } else if b == c {
                            Some(a)
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        fn go(
            k: usize,
            order: &[usize],
            choices: &[Vec<Value>],
            adj: &[Vec<usize>],
            assign: &mut BTreeMap<usize, Value>,
        ) -> bool {
            if k == order.len() {
                return true;
            }
            for v in &choices[k] {
                if adj[k].iter().any(|n| assign.get(n) == Some(v)) {
                    continue;
                }
                assign.insert(order[k], v.clone());
                if go(k + 1, order, choices, adj, assign) {
                    return true;
                }
                assign.remove(&order[k]);
            }
            false
        }
        Ok(go(0, &order, &choices, &adj, &mut assign))
    }

    /// Whether the value literals of `cube` entail `lit`.
    pub fn entails(&self, cube: &Cube, lit: &Literal) -> Result<bool, SolverError> {
        if *lit == Literal::True || cube.values.contains(lit) {
            return Ok(true);
        }
        let neg = lit
            .clone()
            .negate()
            .map_err(|_| SolverError::UnsupportedLiteral(lit.to_string()))?;
        let mut lits = cube.values.clone();
        lits.push(neg);
        Ok(!self.values_sat(&lits)?)
    }

    /// A subset-minimal unsatisfiable subset of the cube's literals, or
    /// `None` when the cube is satisfiable.
    pub fn unsat_core(&self, cube: &Cube) -> Result<Option<Vec<Literal>>, SolverError> {
        if self.check_sat(cube)? == SatResult::Sat {
            return Ok(None);
        }
        let mut core = cube.literals();
        let mut i = core.len();
        while i > 0 {
            i -= 1;
            let mut trial = core.clone();
            trial.remove(i);
            let c = mk_cube(
                cube.eids.iter().copied(),
                cube.procs.iter().copied(),
                trial.clone(),
            )
            .expect("subset of a well-formed cube");
            if self.check_sat(&c)? == SatResult::Unsat {
                core = trial;
            }
        }
        Ok(Some(core))
    }

    /// Whether some state of `cube` is initial: every pending read takes the
    /// initial content of its location.
    pub fn intersects_init(&self, cube: &Cube, init: &ExplicitInit) -> Result<bool, SolverError> {
        let base = cube.eids.iter().next_back().map_or(0, |e| e.0 + 1);
        let fresh = ProcVar(cube.procs.iter().next_back().map_or(0, |p| p.0 + 1));
        let mut lits = cube.values.clone();
        for &p in cube.procs.iter().chain(std::iter::once(&fresh)) {
            lits.extend(init.instance(p, base));
        }
        for r in cube
            .events
            .iter()
            .filter(|e| e.dir == Dir::Read && !e.satisfied)
        {
            let ph = init
                .placeholder(&r.atom.var, base)
                .expect("every weak symbol has a placeholder");
            lits.push(Literal::eq(
                r.value_term(),
                Term::Val {
                    name: r.atom.var.clone(),
                    eid: ph,
                    index: r.atom.index,
                },
            ));
        }
        self.values_sat(&lits)
    }

    /// Looks for renamings under which every literal of `v` is entailed by
    /// `c`, that is, `c` describes no state outside `v`.
    pub fn subsumes(
        &self,
        v: &Cube,
        c: &Cube,
        c_store: &RelationStore,
    ) -> Result<Option<SubsumptionCertificate>, SolverError> {
        if v.procs.len() > c.procs.len() || v.events.len() > c.events.len() {
            return Ok(None);
        }
        let v_eids: Vec<Eid> = v.eids.iter().copied().collect();
        if v_eids.iter().any(|e| v.events_of(*e).next().is_none()) {
            return Ok(None);
        }
        // every event needs a distinct image of the same kind
        let (vc, cc) = (event_counts(v), event_counts(c));
        if vc.iter().any(|(k, n)| cc.get(k).copied().unwrap_or(0) < *n) {
            return Ok(None);
        }
        let c_consts = constant_bindings(c);
        let v_consts = constant_bindings(v);
        let c_eids: Vec<Eid> = c.eids.iter().copied().collect();
        let mut cands: BTreeMap<Eid, Vec<Eid>> = BTreeMap::new();
        for &e in &v_eids {
            let fs: Vec<Eid> = c_eids
                .iter()
                .copied()
                .filter(|&f| eid_compatible(v, e, c, f, &v_consts, &c_consts))
                .collect();
            if fs.is_empty() {
                return Ok(None);
            }
            cands.insert(e, fs);
        }
        let v_eids = search_order(v, v_eids, &cands);
        let mut search = Search {
            solver: self,
            v,
            c,
            store: c_store,
            v_eids,
            cands,
            procs: BTreeMap::new(),
            eids: BTreeMap::new(),
            c_consts,
            result: None,
        };
        search.eid_step(0)?;
        Ok(search.result)
    }

    /// SMT-LIB 2 rendering of a cube, for external cross-checking.
    pub fn to_smtlib(&self, cube: &Cube) -> String {
        let mut out = String::from("(set-logic ALL)\n");
        for s in self.sig.sorts.values() {
            if let SortKind::Enum(cs) = &s.kind {
                let cs: Vec<String> = cs.iter().map(|c| format!("({c})")).collect();
                let _ = writeln!(
                    out,
                    "(declare-datatypes ((s_{} 0)) (({})))",
                    s.name,
                    cs.join(" ")
                );
            }
        }
        let mut consts: BTreeMap<String, String> = BTreeMap::new();
        let mut value_terms = Vec::new();
        for l in &cube.values {
            for t in l.terms() {
                if let Some(name) = smt_name(t) {
                    let sort = match self.sig.term_sort(t).map(|s| s.kind) {
                        Some(SortKind::Int) | None => "Int".to_string(),
                        Some(SortKind::Bool) => "Bool".to_string(),
                        Some(_) => format!("s_{}", self.sig.term_sort(t).unwrap().name),
                    };
                    consts.insert(name, sort);
                }
            }
            value_terms.push(l);
        }
        for e in &cube.eids {
            consts.insert(format!("t_e{}", e.0), "Int".into());
        }
        for (n, s) in &consts {
            let _ = writeln!(out, "(declare-const {n} {s})");
        }
        for ev in &cube.events {
            let _ = writeln!(
                out,
                "; {}{}",
                ev.literal(),
                if ev.satisfied { " (satisfied)" } else { "" }
            );
        }
        for (e, p) in &cube.fences {
            let _ = writeln!(out, "; fence({e},{p})");
        }
        for (a, b) in &cube.equal {
            let _ = writeln!(out, "(assert (= t_e{} t_e{}))", a.0, b.0);
        }
        for (a, b) in &cube.ghb {
            let _ = writeln!(out, "(assert (< t_e{} t_e{}))", a.0, b.0);
        }
        for l in value_terms {
            let _ = writeln!(out, "(assert {})", smt_lit(l));
        }
        out.push_str("(check-sat)\n");
        out
    }
}

fn smt_name(t: &Term) -> Option<String> {
    let ix = |i: &Option<ProcVar>| i.map(|p| format!("_p{}", p.0)).unwrap_or_default();
    match t {
        Term::Const(_) | Term::Proc(_) => None,
        Term::Array { name, index } | Term::Weak { name, index } => {
            Some(format!("{name}{}", ix(index)))
        }
        Term::View { proc, name, index } => Some(format!("view_p{}_{name}{}", proc.0, ix(index))),
        Term::Val { name, eid, index } => Some(format!("Val_{name}_e{}{}", eid.0, ix(index))),
    }
}

fn smt_term(t: &Term) -> String {
    match t {
        Term::Const(Value::Bool(b)) => b.to_string(),
        Term::Const(Value::Int(n)) if *n < 0 => format!("(- {})", -(*n as i128)),
        Term::Const(v) => v.to_string(),
        Term::Proc(p) => format!("p{}", p.0),
        other => smt_name(other).expect("non-constant term"),
    }
}

fn smt_lit(l: &Literal) -> String {
    match l {
        Literal::True => "true".into(),
        Literal::False => "false".into(),
        Literal::Cmp(op, a, b) => {
            let (a, b) = (smt_term(a), smt_term(b));
            match op {
                CmpOp::Eq => format!("(= {a} {b})"),
                CmpOp::Ne => format!("(not (= {a} {b}))"),
                CmpOp::Lt => format!("(< {a} {b})"),
                CmpOp::Le => format!("(<= {a} {b})"),
            }
        }
        other => format!("true ; {other}"),
    }
}

/// Difference constraints `x - y <= w` over classes, integer constants pinned
/// through a zero node, with lazy splitting of disequalities.
fn int_search(
    n: usize,
    diff: &[(usize, usize, i64)],
    consts: &[(usize, i64)],
    nes: &[(usize, usize)],
) -> bool {
    let zero = n;
    let mut edges: Vec<(usize, usize, i64)> = diff.to_vec();
    for &(c, k) in consts {
        edges.push((c, zero, k));
        edges.push((zero, c, -k));
    }
    fn solve(n: usize, edges: &[(usize, usize, i64)]) -> Option<Vec<i64>> {
        // x - y <= w  is the edge y -> x with weight w
        let mut dist = vec![0i64; n + 1];
        for round in 0..=n + 1 {
            let mut changed = false;
            for &(x, y, w) in edges {
                if dist[y].saturating_add(w) < dist[x] {
                    dist[x] = dist[y] + w;
                    changed = true;
                }
            }
            if !changed {
                return Some(dist);
            }
            if round == n + 1 {
                return None;
            }
        }
        None
    }
    fn go(
        n: usize,
        edges: &mut Vec<(usize, usize, i64)>,
        nes: &[(usize, usize)],
        depth: usize,
    ) -> bool {
        let Some(dist) = solve(n, edges) else {
            return false;
        };
        let Some(&(a, b)) = nes
            .iter()
            .find(|&&(a, b)| dist[a] - dist[n] == dist[b] - dist[n])
        else {
            return true;
        };
        if depth > nes.len() {
            return false;
        }
        for (x, y) in [(a, b), (b, a)] {
            edges.push((x, y, -1));
            let ok = go(n, edges, nes, depth + 1);
            edges.pop();
            if ok {
                return true;
            }
        }
        false
    }
    go(n, &mut edges, nes, 0)
}

struct Search<'a> {
    solver: &'a Solver,
    v: &'a Cube,
    c: &'a Cube,
    store: &'a RelationStore,
    v_eids: Vec<Eid>,
    cands: BTreeMap<Eid, Vec<Eid>>,
    procs: BTreeMap<ProcVar, ProcVar>,
    eids: BTreeMap<Eid, Eid>,
    c_consts: HashMap<Term, Value>,
    result: Option<SubsumptionCertificate>,
}

/// Events per (direction, variable), plus pending reads per variable: a
/// pending read only maps to a pending read.
fn event_counts(c: &Cube) -> HashMap<(Dir, &str, bool), usize> {
    let mut out = HashMap::new();
    for e in &c.events {
        *out.entry((e.dir, e.atom.var.as_ref(), false)).or_insert(0) += 1;
        if e.dir == Dir::Read && !e.satisfied {
            *out.entry((e.dir, e.atom.var.as_ref(), true)).or_insert(0) += 1;
        }
    }
    out
}

/// Fewest candidates first, then preferring eids linked to the ones already
/// placed by a relation or a shared process, so that failures show early.
fn search_order(v: &Cube, mut rest: Vec<Eid>, cands: &BTreeMap<Eid, Vec<Eid>>) -> Vec<Eid> {
    let procs_of = |e: Eid| -> BTreeSet<ProcVar> {
        v.events_of(e)
            .flat_map(|ev| std::iter::once(ev.atom.owner).chain(ev.atom.index))
            .collect()
    };
    let mut out: Vec<Eid> = Vec::with_capacity(rest.len());
    let mut seen_procs: BTreeSet<ProcVar> = BTreeSet::new();
    while !rest.is_empty() {
        let linked = |e: Eid| {
            v.ghb
                .iter()
                .chain(&v.equal)
                .any(|&(a, b)| (a == e && out.contains(&b)) || (b == e && out.contains(&a)))
                || procs_of(e).iter().any(|p| seen_procs.contains(p))
        };
        let pick = (0..rest.len())
            .min_by_key(|&i| (!linked(rest[i]), cands[&rest[i]].len()))
            .expect("non-empty");
        let e = rest.remove(pick);
        seen_procs.extend(procs_of(e));
        out.push(e);
    }
    out
}

/// Whether every event at `e` in `v` has a same-kind event at `f` in `c`, and
/// no unindexed value at `e` is pinned to a different constant at `f`.
fn eid_compatible(
    v: &Cube,
    e: Eid,
    c: &Cube,
    f: Eid,
    v_consts: &HashMap<Term, Value>,
    c_consts: &HashMap<Term, Value>,
) -> bool {
    if v.finals.contains(&e) && !c.finals.contains(&f) {
        return false;
    }
    v.events_of(e).all(|ve| {
        let kind_ok = c.events_of(f).any(|ce| {
            ce.dir == ve.dir
                && ce.atom.var == ve.atom.var
                && ce.atom.index.is_some() == ve.atom.index.is_some()
                && !(ve.dir == Dir::Read && !ve.satisfied && ce.satisfied)
        });
        let value_ok = ve.atom.index.is_some() || {
            let vt = Term::Val {
                name: ve.atom.var.clone(),
                eid: e,
                index: None,
            };
            let ct = Term::Val {
                name: ve.atom.var.clone(),
                eid: f,
                index: None,
            };
            match (v_consts.get(&vt), c_consts.get(&ct)) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
        };
        kind_ok && value_ok
    })
}

/// Terms a cube pins to a constant.
fn constant_bindings(c: &Cube) -> HashMap<Term, Value> {
    let mut out = HashMap::new();
    for l in &c.values {
        if let Literal::Cmp(CmpOp::Eq, a, b) = l {
            match (a, b) {
                (t, Term::Const(v)) | (Term::Const(v), t) if !matches!(t, Term::Const(_)) => {
                    out.insert(t.clone(), v.clone());
                }
                _ => {}
            }
        }
    }
    out
}

impl Search<'_> {
    fn bind(&mut self, from: ProcVar, to: ProcVar, added: &mut Vec<ProcVar>) -> bool {
        match self.procs.get(&from) {
            Some(&t) => t == to,
            None => {
                if self.procs.values().any(|&t| t == to) {
                    return false;
                }
                self.procs.insert(from, to);
                added.push(from);
                true
            }
        }
    }

    /// The image of `t` under the partial map, if every variable is mapped.
    fn image(&self, t: &Term) -> Option<Term> {
        let p = |q: &ProcVar| self.procs.get(q).copied();
        let ix = |i: &Option<ProcVar>| match i {
            Some(q) => p(q).map(Some),
            None => Some(None),
        };
        Some(match t {
            Term::Const(_) => t.clone(),
            Term::Proc(q) => Term::Proc(p(q)?),
            Term::Array { name, index } => Term::Array {
                name: name.clone(),
                index: ix(index)?,
            },
            Term::Weak { name, index } => Term::Weak {
                name: name.clone(),
                index: ix(index)?,
            },
            Term::View { proc, name, index } => Term::View {
                proc: p(proc)?,
                name: name.clone(),
                index: ix(index)?,
            },
            Term::Val { name, eid, index } => Term::Val {
                name: name.clone(),
                eid: *self.eids.get(eid)?,
                index: ix(index)?,
            },
        })
    }

    fn value_of(&self, t: &Term) -> Option<Value> {
        match t {
            Term::Const(v) => Some(v.clone()),
            _ => self.image(t).and_then(|i| self.c_consts.get(&i).cloned()),
        }
    }

    /// Cheap necessary conditions on the partial map: relations among mapped
    /// eids, and no literal clashing with a constant the target pins.
    fn partial_ok(&self) -> bool {
        let eid = |e: &Eid| self.eids.get(e).copied();
        let proc = |p: &ProcVar| self.procs.get(p).copied();
        if self
            .v
            .finals
            .iter()
            .any(|e| eid(e).is_some_and(|f| !self.c.finals.contains(&f)))
        {
            return false;
        }
        for (e, p) in &self.v.fences {
            if let (Some(f), Some(q)) = (eid(e), proc(p)) {
                if !self.c.fences.contains(&(f, q)) {
                    return false;
                }
            }
        }
        for (a, b) in &self.v.equal {
            if let (Some(x), Some(y)) = (eid(a), eid(b)) {
                if !self.store.same_class(x, y) {
                    return false;
                }
            }
        }
        for (a, b) in &self.v.ghb {
            if let (Some(x), Some(y)) = (eid(a), eid(b)) {
                if !self.store.ordered(x, y) {
                    return false;
                }
            }
        }
        self.v.values.iter().all(|l| match l {
            Literal::Cmp(op @ (CmpOp::Eq | CmpOp::Ne), a, b) => {
                match (self.value_of(a), self.value_of(b)) {
                    (Some(x), Some(y)) => (x == y) == (*op == CmpOp::Eq),
                    _ => true,
                }
            }
            _ => true,
        })
    }

    fn eid_step(&mut self, k: usize) -> Result<(), SolverError> {
        if self.result.is_some() || !self.partial_ok() {
            return Ok(());
        }
        if k == self.v_eids.len() {
            return self.proc_step();
        }
        let e = self.v_eids[k];
        let c_eids = self.cands[&e].clone();
        for f in c_eids {
            if self.eids.values().any(|&g| g == f) {
                continue;
            }
            self.eids.insert(e, f);
            let v_events: Vec<_> = self.v.events_of(e).cloned().collect();
            self.event_step(&v_events, 0, f, k)?;
            self.eids.remove(&e);
            if self.result.is_some() {
                return Ok(());
            }
        }
        Ok(())
    }

    fn event_step(
        &mut self,
        evs: &[crate::logic::Event],
        i: usize,
        f: Eid,
        k: usize,
    ) -> Result<(), SolverError> {
        if i == evs.len() {
            return self.eid_step(k + 1);
        }
        let ve = &evs[i];
        let cands: Vec<_> = self
            .c
            .events_of(f)
            .filter(|ce| {
                ce.dir == ve.dir
                    && ce.atom.var == ve.atom.var
                    && ce.atom.index.is_some() == ve.atom.index.is_some()
                    && !(ve.dir == Dir::Read && !ve.satisfied && ce.satisfied)
            })
            .cloned()
            .collect();
        for ce in cands {
            let mut added = Vec::new();
            let ok = self.bind(ve.atom.owner, ce.atom.owner, &mut added)
                && match (ve.atom.index, ce.atom.index) {
                    (Some(a), Some(b)) => self.bind(a, b, &mut added),
                    _ => true,
                };
            if ok {
                self.event_step(evs, i + 1, f, k)?;
            }
            for p in added {
                self.procs.remove(&p);
            }
            if self.result.is_some() {
                return Ok(());
            }
        }
        Ok(())
    }

    fn proc_step(&mut self) -> Result<(), SolverError> {
        let free: Vec<ProcVar> = self
            .v
            .procs
            .iter()
            .copied()
            .filter(|p| !self.procs.contains_key(p))
            .collect();
        self.assign_free(&free, 0)
    }

    fn assign_free(&mut self, free: &[ProcVar], i: usize) -> Result<(), SolverError> {
        if self.result.is_some() || (i > 0 && !self.partial_ok()) {
            return Ok(());
        }
        if i == free.len() {
            return self.final_check();
        }
        let targets: Vec<ProcVar> = self.c.procs.iter().copied().collect();
        for t in targets {
            let mut added = Vec::new();
            if self.bind(free[i], t, &mut added) {
                self.assign_free(free, i + 1)?;
            }
            for p in added {
                self.procs.remove(&p);
            }
            if self.result.is_some() {
                break;
            }
        }
        Ok(())
    }

    fn final_check(&mut self) -> Result<(), SolverError> {
        let cert = SubsumptionCertificate {
            procs: self.procs.clone(),
            eids: self.eids.clone(),
        };
        let s = cert.substitution();
        for &(e, p) in &self.v.fences {
            if !self.c.fences.contains(&(s.eid(e), s.proc(p))) {
                return Ok(());
            }
        }
        if self
            .v
            .finals
            .iter()
            .any(|e| !self.c.finals.contains(&s.eid(*e)))
        {
            return Ok(());
        }
        for &(a, b) in &self.v.equal {
            if !self.store.same_class(s.eid(a), s.eid(b)) {
                return Ok(());
            }
        }
        for &(a, b) in &self.v.ghb {
            if !self.store.ordered(s.eid(a), s.eid(b)) {
                return Ok(());
            }
        }
        let mut rest = Vec::new();
        for l in &self.v.values {
            let m = l.rename(&s);
            if !self.c.values.contains(&m) {
                rest.push(m);
            }
        }
        for m in rest {
            if !self.solver.entails(self.c, &m)? {
                return Ok(());
            }
        }
        self.result = Some(cert);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{EventAtom, Sort};

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.add_sort(Sort::enumeration("st", &["A", "B"]).unwrap());
        s.add_array("PC", s.sorts["st"].clone(), true);
        s.add_array("n", Sort::int(), false);
        s.add_weak("X", Sort::bool(), true);
        s
    }

    fn pc(p: u32) -> Term {
        Term::array("PC", ProcVar(p))
    }

    fn n() -> Term {
        Term::Array {
            name: "n".into(),
            index: None,
        }
    }

    fn int(k: i64) -> Term {
        Term::Const(Value::Int(k))
    }

    #[test]
    fn finite_domain_pigeonhole() {
        let s = Solver::new(sig());
        let lits = vec![
            Literal::ne(pc(1), pc(2)),
            Literal::ne(pc(2), pc(3)),
            Literal::ne(pc(1), pc(3)),
        ];
        assert!(!s.values_sat(&lits).unwrap());
        assert!(s.values_sat(&lits[..2]).unwrap());
        let lits = vec![
            Literal::ne(pc(1), Term::enum_const("A")),
            Literal::ne(pc(1), Term::enum_const("B")),
        ];
        assert!(!s.values_sat(&lits).unwrap());
    }

    #[test]
    fn congruence_and_constants() {
        let s = Solver::new(sig());
        let lits = vec![
            Literal::eq(pc(1), pc(2)),
            Literal::eq(pc(2), Term::enum_const("A")),
            Literal::eq(pc(1), Term::enum_const("B")),
        ];
        assert!(!s.values_sat(&lits).unwrap());
        assert!(!s
            .values_sat(&[Literal::eq(Term::Proc(ProcVar(1)), Term::Proc(ProcVar(2)))])
            .unwrap());
    }

    #[test]
    fn integer_constraints() {
        let s = Solver::new(sig());
        let lits = vec![
            Literal::cmp(CmpOp::Lt, int(0), n()),
            Literal::cmp(CmpOp::Lt, n(), int(2)),
        ];
        assert!(s.values_sat(&lits).unwrap());
        let mut more = lits.clone();
        more.push(Literal::ne(n(), int(1)));
        assert!(!s.values_sat(&more).unwrap());
        let x = Term::val("c", Eid(1), None);
        let y = Term::val("c", Eid(2), None);
        let lits = vec![
            Literal::cmp(CmpOp::Le, int(0), x.clone()),
            Literal::cmp(CmpOp::Le, x.clone(), int(1)),
            Literal::cmp(CmpOp::Le, int(0), y.clone()),
            Literal::cmp(CmpOp::Le, y.clone(), int(1)),
            Literal::ne(x.clone(), y.clone()),
            Literal::ne(x, int(0)),
        ];
        assert!(s.values_sat(&lits).unwrap());
        let mut more = lits.clone();
        more.push(Literal::ne(y, int(0)));
        assert!(!s.values_sat(&more).unwrap());
    }

    #[test]
    fn order_on_enum_is_rejected() {
        let s = Solver::new(sig());
        let l = Literal::cmp(CmpOp::Lt, pc(1), pc(2));
        assert!(matches!(
            s.values_sat(&[l]),
            Err(SolverError::UnsupportedLiteral(_))
        ));
    }

    #[test]
    fn ghb_cycle_core() {
        let s = Solver::new(sig());
        let mut lits = vec![Literal::eq(pc(1), Term::enum_const("A"))];
        for (a, b) in [(1, 2), (2, 3), (3, 4), (4, 1)] {
            lits.push(Literal::Ghb(Eid(a), Eid(b)));
        }
        lits.push(Literal::Rd(EventAtom::new(
            Eid(1),
            "X",
            ProcVar(1),
            Some(ProcVar(1)),
        )));
        let cube = mk_cube((1..=4).map(Eid), [ProcVar(1)], lits).unwrap();
        assert_eq!(s.check_sat(&cube).unwrap(), SatResult::Unsat);
        let core = s.unsat_core(&cube).unwrap().unwrap();
        assert_eq!(core.len(), 4);
        assert!(core.iter().all(|l| matches!(l, Literal::Ghb(..))));
    }

    #[test]
    fn subsumption_with_renaming() {
        let s = Solver::new(sig());
        let x = |e: u32, p: u32| EventAtom::new(Eid(e), "X", ProcVar(p), Some(ProcVar(p)));
        let mut v = mk_cube(
            [Eid(1)],
            [ProcVar(1)],
            [
                Literal::Rd(x(1, 1)),
                Literal::eq(pc(1), Term::enum_const("A")),
            ],
        )
        .unwrap();
        v.values.push(Literal::eq(
            Term::val("X", Eid(1), Some(ProcVar(1))),
            Term::bool_const(true),
        ));
        let c = mk_cube(
            [Eid(5), Eid(6)],
            [ProcVar(3), ProcVar(4)],
            [
                Literal::Rd(x(5, 4)),
                Literal::Rd(x(6, 3)),
                Literal::Ghb(Eid(6), Eid(5)),
                Literal::eq(pc(4), Term::enum_const("A")),
                Literal::ne(
                    Term::val("X", Eid(5), Some(ProcVar(4))),
                    Term::bool_const(false),
                ),
            ],
        )
        .unwrap();
        let st = RelationStore::from_cube(&c).unwrap();
        let cert = s.subsumes(&v, &c, &st).unwrap().unwrap();
        assert_eq!(cert.procs[&ProcVar(1)], ProcVar(4));
        assert_eq!(cert.eids[&Eid(1)], Eid(5));
        // the other direction fails: c has more events
        let vs = RelationStore::from_cube(&v).unwrap();
        assert!(s.subsumes(&c, &v, &vs).unwrap().is_none());
        // a satisfied read in c is not covered by a pending read in v
        let mut c2 = c.clone();
        for ev in &mut c2.events {
            ev.satisfied = true;
        }
        assert!(s.subsumes(&v, &c2, &st).unwrap().is_none());
    }

    #[test]
    fn init_intersection_equates_initial_reads() {
        let sys = crate::frontend::parse_system(
            "weak var a : int\ninit (j) { a = 0 }\nunsafe (i j) { i @ a = 1 }\n",
        )
        .unwrap();
        let s = Solver::new(sys.signature());
        let init = crate::translation::translate_init(&sys);
        let c = crate::translation::translate_unsafe(&sys.unsafe_specs[0], 1);
        assert!(!s.intersects_init(&c, &init).unwrap());
        let mut c0 = c.clone();
        c0.values = vec![Literal::eq(Term::val("a", Eid(1), None), int(0))];
        assert!(s.intersects_init(&c0, &init).unwrap());
        c0.events[0].satisfied = true;
        c0.values = vec![Literal::eq(Term::val("a", Eid(1), None), int(1))];
        assert!(s.intersects_init(&c0, &init).unwrap());
    }

    #[test]
    fn smt_export_mentions_everything() {
        let s = Solver::new(sig());
        let c = mk_cube(
            [Eid(1), Eid(2)],
            [ProcVar(1)],
            [
                Literal::Ghb(Eid(1), Eid(2)),
                Literal::eq(pc(1), Term::enum_const("A")),
                Literal::cmp(CmpOp::Lt, n(), int(-3)),
            ],
        )
        .unwrap();
        let text = s.to_smtlib(&c);
        assert!(text.contains("(declare-datatypes ((s_st 0)) (((A) (B))))"));
        assert!(text.contains("(assert (< t_e1 t_e2))"));
        assert!(text.contains("(assert (= A PC_p1))") || text.contains("(assert (= PC_p1 A))"));
        assert!(text.contains("(assert (< n (- 3)))"));
        assert!(text.ends_with("(check-sat)\n"));
    }
}
