//! Backward reachability.
//!
//! Starting from the translated unsafe cubes, the engine repeatedly computes
//! pre-images, drops cubes subsumed by an already visited one and stops as
//! soon as a cube meets the initial states.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;
use tracing::{debug, trace};

use crate::frontend::{TransitionSpec, TransitionSystem};
use crate::logic::{Cube, Eid, Event, Literal, Name, ProcVar, Substitution, Term};
use crate::model::{extend_ghb, rffr, MemoryModel};
use crate::relations::RelationStore;
use crate::solver::{SatResult, Solver, SolverError, SubsumptionCertificate};
use crate::translation::{
    translate_init, translate_transition, translate_unsafe, ExplicitInit, ExplicitTransition,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("could not start worker threads: {0}")]
    Threads(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SearchOrder {
    #[default]
    Bfs,
    Dfs,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub order: SearchOrder,
    pub max_depth: Option<usize>,
    pub max_nodes: usize,
    pub timeout: Option<Duration>,
    pub jobs: usize,
    /// Keep unsat cores of up to this many pruned pre-images.
    pub keep_cores: usize,
    /// Keep up to this many subsumption certificates.
    pub keep_certificates: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            order: SearchOrder::Bfs,
            max_depth: None,
            max_nodes: 1_000_000,
            timeout: None,
            jobs: 1,
            keep_cores: 0,
            keep_certificates: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub visited: usize,
    pub subsumed: usize,
    pub pruned: usize,
    pub generated: usize,
    pub max_depth: usize,
    pub elapsed_ms: u128,
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# visited={}", self.visited)?;
        writeln!(f, "# subsumed={}", self.subsumed)?;
        writeln!(f, "# pruned={}", self.pruned)?;
        writeln!(f, "# generated={}", self.generated)?;
        writeln!(f, "# depth={}", self.max_depth)?;
        write!(f, "# time_ms={}", self.elapsed_ms)
    }
}

/// Transition instance that produced a node from its parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Via {
    pub transition: Name,
    /// Image of each transition parameter, actor first.
    pub procs: Vec<ProcVar>,
}

impl fmt::Display for Via {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.procs.iter().map(|p| p.to_string()).collect();
        write!(f, "{}({})", self.transition, ps.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    pub id: usize,
    pub cube: Cube,
    pub parent: Option<usize>,
    pub via: Option<Via>,
    pub depth: usize,
}

/// A forward run from an initial state to an unsafe one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Via>,
    /// Processes taking part, named as in the steps.
    pub procs: BTreeSet<ProcVar>,
    /// The unsafe formula's parameters.
    pub unsafe_procs: Vec<ProcVar>,
    pub unsafe_index: usize,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.procs.iter().map(|p| p.to_string()).collect();
        writeln!(f, "init with processes {}", ps.join(" "))?;
        for (n, s) in self.steps.iter().enumerate() {
            writeln!(f, "{:>3}. {s}", n + 1)?;
        }
        let us: Vec<String> = self.unsafe_procs.iter().map(|p| p.to_string()).collect();
        write!(f, "unsafe({})", us.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    Depth,
    Nodes,
    Time,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limit::Depth => "depth",
            Limit::Nodes => "nodes",
            Limit::Time => "time",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    Unsafe(Trace),
    ResourceLimit(Limit),
}

/// A pruned pre-image and a minimal inconsistent part of it.
#[derive(Clone, Debug)]
pub struct PrunedCore {
    pub via: Via,
    pub core: Vec<Literal>,
}

/// A dropped cube with the visited cube and renaming that cover it.
#[derive(Clone, Debug)]
pub struct CertificateRecord {
    pub visited: Cube,
    pub covered: Cube,
    pub certificate: SubsumptionCertificate,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub verdict: Verdict,
    pub stats: Stats,
    pub nodes: Vec<SearchNode>,
    pub cores: Vec<PrunedCore>,
    pub certificates: Vec<CertificateRecord>,
}

impl Report {
    /// Visited nodes and their parent links in DOT.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph search {\n  node [shape=box, fontname=monospace];\n");
        for n in &self.nodes {
            let label = n.cube.to_string().replace('"', "'").replace(" && ", "\\n");
            out.push_str(&format!("  n{} [label=\"{label}\"];\n", n.id));
            if let (Some(p), Some(v)) = (n.parent, &n.via) {
                out.push_str(&format!("  n{} -> n{p} [label=\"{v}\"];\n", n.id));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Everything needed to take pre-images of one system.
pub struct Context<'a> {
    pub sys: &'a TransitionSystem,
    pub model: &'a dyn MemoryModel,
    pub solver: Solver,
    pub init: ExplicitInit,
    transitions: Vec<ExplicitTransition>,
}

/// Template identifiers used by the translated transitions; always renamed
/// before use.
const TEMPLATE_R: Eid = Eid(u32::MAX - 1);
const TEMPLATE_W: Eid = Eid(u32::MAX);

/// One pre-image result, or the reason it was dropped.
pub enum Step {
    Kept(Cube),
    Pruned(Cube),
}

impl<'a> Context<'a> {
    pub fn new(sys: &'a TransitionSystem, model: &'a dyn MemoryModel) -> Self {
        Context {
            sys,
            model,
            solver: Solver::new(sys.signature()),
            init: translate_init(sys),
            transitions: sys
                .transitions
                .iter()
                .map(|t| translate_transition(t, TEMPLATE_R, TEMPLATE_W))
                .collect(),
        }
    }

    /// Satisfiable, garbage-collected roots, paired with their unsafe index.
    pub fn roots(&self) -> Result<Vec<(usize, Cube)>, SolverError> {
        let mut out = Vec::new();
        for (n, u) in self.sys.unsafe_specs.iter().enumerate() {
            let mut c = translate_unsafe(u, 1);
            c.collect_unused_eids();
            if self.solver.check_sat(&c)? == SatResult::Sat {
                out.push((n, c));
            }
        }
        Ok(out)
    }

    /// All instantiations of `t` against `cube`: parameters go to distinct
    /// processes, known ones or fresh ones taken in order.
    pub fn instantiations(&self, t: &TransitionSpec, cube: &Cube) -> Vec<Vec<ProcVar>> {
        let known: Vec<ProcVar> = cube.procs.iter().copied().collect();
        let first_fresh = known.last().map_or(1, |p| p.0 + 1);
        let mut out = Vec::new();
        fn go(
            k: usize,
            n: usize,
            known: &[ProcVar],
            next_fresh: u32,
            cur: &mut Vec<ProcVar>,
            out: &mut Vec<Vec<ProcVar>>,
        ) {
            if k == n {
                out.push(cur.clone());
                return;
            }
            for &p in known {
                if !cur.contains(&p) {
                    cur.push(p);
                    go(k + 1, n, known, next_fresh, cur, out);
                    cur.pop();
                }
            }
            cur.push(ProcVar(next_fresh));
            go(k + 1, n, known, next_fresh + 1, cur, out);
            cur.pop();
        }
        go(
            0,
            t.params.len(),
            &known,
            first_fresh,
            &mut Vec::new(),
            &mut out,
        );
        out
    }

    /// Pre-images of `cube` by transition `ti` under the parameter images
    /// `procs`.
    pub fn pre_image(
        &self,
        cube: &Cube,
        ti: usize,
        procs: &[ProcVar],
    ) -> Result<Vec<Step>, SolverError> {
        let t = &self.transitions[ti];
        let actor = procs[0];
        let top = cube.eids.iter().next_back().map_or(0, |e| e.0);
        let (e_r, e_w) = (Eid(top + 1), Eid(top + 2));
        let mut s = Substitution::new()
            .with_eid(TEMPLATE_R, e_r)
            .with_eid(TEMPLATE_W, e_w);
        for (n, &p) in procs.iter().enumerate() {
            s = s.with_proc(ProcVar(n as u32), p);
        }

        let mut c = cube.clone();
        c.procs.extend(procs.iter().copied());

        // regular updates, applied simultaneously to the old value literals
        let mut subst: BTreeMap<Term, Term> = BTreeMap::new();
        for (x, v) in &t.regular {
            subst.insert(x.rename(&s), v.rename(&s));
        }
        if !subst.is_empty() {
            let old = std::mem::take(&mut c.values);
            for l in old {
                let l = match l {
                    Literal::Cmp(op, a, b) => {
                        let r = |t: Term| subst.get(&t).cloned().unwrap_or(t);
                        Literal::cmp(op, r(a), r(b))
                    }
                    other => other,
                };
                c.add_value(l);
            }
        }

        let mut new_events: Vec<Event> = Vec::new();
        let add_read = |c: &mut Cube, ev: Event, new_events: &mut Vec<Event>| {
            if !new_events.contains(&ev) {
                new_events.push(ev.clone());
                c.add_event(ev);
            }
        };
        for l in &t.guard {
            c.add_value(l.rename(&s));
        }
        for a in &t.reads {
            let ev = Event::read(a.rename(&s));
            add_read(&mut c, ev, &mut new_events);
        }
        let range: Vec<ProcVar> = c.procs.iter().copied().collect();
        for f in &t.foralls {
            let except: Vec<ProcVar> = f.except.iter().map(|p| s.proc(*p)).collect();
            for &q in &range {
                if except.contains(&q) {
                    continue;
                }
                let fs = s.clone().with_proc(f.var, q);
                for l in &f.body {
                    c.add_value(l.rename(&fs));
                }
                for a in &f.reads {
                    let ev = Event::read(a.rename(&fs));
                    add_read(&mut c, ev, &mut new_events);
                }
            }
        }
        if t.fence {
            c.fences.insert((e_r, actor));
        }
        let mut writes = Vec::new();
        for w in &t.writes {
            let ev = Event::write(w.atom.rename(&s));
            c.add_value(Literal::eq(ev.value_term(), w.value.rename(&s)));
            c.add_event(ev.clone());
            new_events.push(ev.clone());
            writes.push(ev);
        }
        if t.is_rmw() {
            c.add_equal(e_r, e_w);
        }
        c.eids.insert(e_r);
        c.eids.insert(e_w);
        for (a, b) in extend_ghb(self.model, cube, &new_events, actor) {
            c.add_ghb(a, b);
        }
        if c.values.contains(&Literal::False) {
            return Ok(vec![Step::Pruned(c)]);
        }
        let store = match RelationStore::from_cube(&c) {
            Ok(st) => st,
            Err(_) => return Ok(vec![Step::Pruned(c)]),
        };
        let mut out = Vec::new();
        let branches = rffr(c, store, &writes, &[e_r, e_w]);
        out.extend(branches.pruned.into_iter().map(Step::Pruned));
        for (mut b, _) in branches.kept {
            b.collect_unused_eids();
            if self.solver.values_sat(&b.values)? {
                out.push(Step::Kept(b));
            } else {
                out.push(Step::Pruned(b));
            }
        }
        Ok(out)
    }

    /// All pre-images of `cube`, over every transition and instantiation.
    pub fn pre_images(&self, cube: &Cube) -> Result<Vec<(Via, Step)>, SolverError> {
        let mut out = Vec::new();
        for (ti, spec) in self.sys.transitions.iter().enumerate() {
            for procs in self.instantiations(spec, cube) {
                let via = Via {
                    transition: spec.name.clone(),
                    procs: procs.clone(),
                };
                for step in self.pre_image(cube, ti, &procs)? {
                    out.push((via.clone(), step));
                }
            }
        }
        Ok(out)
    }

    fn pre_images_parallel(&self, cube: &Cube) -> Result<Vec<(Via, Step)>, SolverError> {
        let per: Vec<Result<Vec<(Via, Step)>, SolverError>> = self
            .sys
            .transitions
            .par_iter()
            .enumerate()
            .map(|(ti, spec)| {
                let mut out = Vec::new();
                for procs in self.instantiations(spec, cube) {
                    let via = Via {
                        transition: spec.name.clone(),
                        procs: procs.clone(),
                    };
                    for step in self.pre_image(cube, ti, &procs)? {
                        out.push((via.clone(), step));
                    }
                }
                Ok(out)
            })
            .collect();
        let mut out = Vec::new();
        for r in per {
            out.extend(r?);
        }
        Ok(out)
    }
}

/// Runs backward reachability on `sys` under `model`.
pub fn bwd(
    sys: &TransitionSystem,
    model: &dyn MemoryModel,
    opts: &Options,
) -> Result<Report, EngineError> {
    let pool = if opts.jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.jobs)
                .build()
                .map_err(|e| EngineError::Threads(e.to_string()))?,
        )
    } else {
        None
    };
    let ctx = Context::new(sys, model);
    let start = Instant::now();
    let mut stats = Stats::default();
    let mut nodes: Vec<SearchNode> = Vec::new();
    let mut visited: Vec<usize> = Vec::new();
    let mut cores = Vec::new();
    let mut certificates = Vec::new();
    let mut root_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut heap: BinaryHeap<Reverse<(usize, usize, usize)>> = BinaryHeap::new();
    let mut stack: Vec<usize> = Vec::new();
    let push =
        |id: usize, depth: usize, size: usize, heap: &mut BinaryHeap<_>, stack: &mut Vec<usize>| {
            match opts.order {
                SearchOrder::Bfs => heap.push(Reverse((depth, size, id))),
                SearchOrder::Dfs => stack.push(id),
            }
        };
    for (ui, cube) in ctx.roots()? {
        let id = nodes.len();
        root_of.insert(id, ui);
        push(id, 0, cube.size(), &mut heap, &mut stack);
        nodes.push(SearchNode {
            id,
            cube,
            parent: None,
            via: None,
            depth: 0,
        });
        stats.generated += 1;
    }
    let mut cut_by_depth = false;
    let finish = |verdict: Verdict,
                  mut stats: Stats,
                  nodes: Vec<SearchNode>,
                  visited: &[usize],
                  cores,
                  certificates| {
        stats.elapsed_ms = start.elapsed().as_millis();
        let keep: BTreeSet<usize> = visited.iter().copied().collect();
        let mut nodes = nodes;
        nodes.retain(|n| keep.contains(&n.id) || matches!(verdict, Verdict::Unsafe(_)));
        Report {
            verdict,
            stats,
            nodes,
            cores,
            certificates,
        }
    };
    loop {
        let id = match opts.order {
            SearchOrder::Bfs => heap.pop().map(|Reverse((_, _, id))| id),
            SearchOrder::Dfs => stack.pop(),
        };
        let Some(id) = id else { break };
        if let Some(limit) = opts.timeout {
            if start.elapsed() >= limit {
                return Ok(finish(
                    Verdict::ResourceLimit(Limit::Time),
                    stats,
                    nodes,
                    &visited,
                    cores,
                    certificates,
                ));
            }
        }
        if stats.visited >= opts.max_nodes {
            return Ok(finish(
                Verdict::ResourceLimit(Limit::Nodes),
                stats,
                nodes,
                &visited,
                cores,
                certificates,
            ));
        }
        let node = nodes[id].clone();
        if ctx.solver.intersects_init(&node.cube, &ctx.init)? {
            let tr = reconstruct_trace(&nodes, id, &root_of, sys);
            debug!(node = id, depth = node.depth, "initial states reached");
            visited.push(id);
            stats.visited += 1;
            return Ok(finish(
                Verdict::Unsafe(tr),
                stats,
                nodes,
                &visited,
                cores,
                certificates,
            ));
        }
        let store = RelationStore::from_cube(&node.cube).expect("queued cubes are consistent");
        let mut covered = None;
        for &vid in &visited {
            if let Some(cert) = ctx.solver.subsumes(&nodes[vid].cube, &node.cube, &store)? {
                covered = Some((vid, cert));
                break;
            }
        }
        if let Some((vid, cert)) = covered {
            stats.subsumed += 1;
            trace!(node = id, by = vid, "subsumed");
            if certificates.len() < opts.keep_certificates {
                certificates.push(CertificateRecord {
                    visited: nodes[vid].cube.clone(),
                    covered: node.cube.clone(),
                    certificate: cert,
                });
            }
            continue;
        }
        visited.push(id);
        stats.visited += 1;
        stats.max_depth = stats.max_depth.max(node.depth);
        if opts.max_depth.is_some_and(|d| node.depth >= d) {
            cut_by_depth = true;
            continue;
        }
        let steps = match &pool {
            Some(p) => p.install(|| ctx.pre_images_parallel(&node.cube))?,
            None => ctx.pre_images(&node.cube)?,
        };
        for (via, step) in steps {
            match step {
                Step::Kept(cube) => {
                    let cid = nodes.len();
                    stats.generated += 1;
                    push(cid, node.depth + 1, cube.size(), &mut heap, &mut stack);
                    nodes.push(SearchNode {
                        id: cid,
                        cube,
                        parent: Some(id),
                        via: Some(via),
                        depth: node.depth + 1,
                    });
                }
                Step::Pruned(cube) => {
                    stats.pruned += 1;
                    if cores.len() < opts.keep_cores {
                        if let Some(core) = ctx.solver.unsat_core(&cube)? {
                            let text: Vec<String> = core.iter().map(|l| l.to_string()).collect();
                            debug!(via = %via, core = %text.join(" && "), "pruned");
                            cores.push(PrunedCore { via, core });
                        }
                    }
                }
            }
        }
    }
    let verdict = if cut_by_depth {
        Verdict::ResourceLimit(Limit::Depth)
    } else {
        Verdict::Safe
    };
    Ok(finish(verdict, stats, nodes, &visited, cores, certificates))
}

/// The forward run ending in the unsafe root above node `id`.
pub fn reconstruct_trace(
    nodes: &[SearchNode],
    id: usize,
    root_of: &BTreeMap<usize, usize>,
    sys: &TransitionSystem,
) -> Trace {
    let mut steps = Vec::new();
    let mut cur = id;
    while let Some(v) = &nodes[cur].via {
        steps.push(v.clone());
        cur = nodes[cur].parent.expect("a node with a via has a parent");
    }
    let unsafe_index = root_of.get(&cur).copied().unwrap_or(0);
    Trace {
        steps,
        procs: nodes[id].cube.procs.clone(),
        unsafe_procs: sys.unsafe_specs[unsafe_index].procs(),
        unsafe_index,
    }
}
