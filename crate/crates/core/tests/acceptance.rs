//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{agree, load, random_system, Agreement, CORPUS};
use weakmc::engine::{bwd, Options, Verdict};
use weakmc::logic::{CmpOp, Dir, Event, EventAtom, Signature, Sort};
use weakmc::model::{Sc, Tso};
use weakmc::solver::{SatResult, Solver};
use weakmc::{Cube, Eid, Literal, ProcVar, RelationStore, Term, Value};

/// Wall-clock budget for each golden run.
const GOLDEN_BUDGET: Duration = Duration::from_secs(5);
/// Random systems in the differential run, and how many may exhaust the
/// engine budget without counting as a failure.
const RANDOM_SYSTEMS: usize = 200;
const MAX_INCONCLUSIVE: usize = 10;
const SAT_CUBES: usize = 10_000;
const STORE_CASES: usize = 100_000;
const MIN_CERTIFICATES: usize = 50;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: &[Criterion] = &[
        ("mutex golden verdicts", mutex_golden),
        ("pruned pre-image core is a ghb cycle", pruned_core_cycle),
        ("benchmark table verdicts", table_verdicts),
        ("differential against explicit exploration", differential),
        ("store buffering litmus", store_buffering),
        ("value solver against brute force", sat_brute_force),
        ("relation store against topological sort", store_brute_force),
        (
            "subsumption certificates against finite models",
            certificates,
        ),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {ms} ms)", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}; {ms} ms)", n + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn run(name: &str, opts: &Options, sc: bool) -> Result<(Verdict, Duration), String> {
    let sys = load(name);
    let start = Instant::now();
    let report = if sc {
        bwd(&sys, &Sc, opts)
    } else {
        bwd(&sys, &Tso, opts)
    }
    .map_err(|e| format!("{name}: {e}"))?;
    Ok((report.verdict, start.elapsed()))
}

fn word(v: &Verdict) -> &'static str {
    match v {
        Verdict::Safe => "S",
        Verdict::Unsafe(_) => "US",
        Verdict::ResourceLimit(_) => "limit",
    }
}

fn mutex_golden() -> Outcome {
    let opts = Options {
        timeout: Some(GOLDEN_BUDGET),
        ..Options::default()
    };
    let (unfenced, t1) = run("mutex_unfenced.wmc", &opts, false)?;
    let (fenced, t2) = run("mutex_fenced.wmc", &opts, false)?;
    let Verdict::Unsafe(trace) = &unfenced else {
        return Err(format!(
            "unfenced mutex: expected US, got {}",
            word(&unfenced)
        ));
    };
    if !matches!(fenced, Verdict::Safe) {
        return Err(format!("fenced mutex: expected S, got {}", word(&fenced)));
    }
    for t in ["t_req", "t_enter"] {
        let actors: BTreeSet<ProcVar> = trace
            .steps
            .iter()
            .filter(|s| s.transition.as_ref() == t)
            .map(|s| s.procs[0])
            .collect();
        if actors.len() < 2 {
            return Err(format!("trace lacks {t} by two processes:\n{trace}"));
        }
    }
    if t1.max(t2) > GOLDEN_BUDGET {
        return Err(format!("took {t1:?} and {t2:?}"));
    }
    Ok(format!(
        "US in {} ms, S in {} ms, {} steps",
        t1.as_millis(),
        t2.as_millis(),
        trace.steps.len()
    ))
}

/// Whether `edges` form one directed cycle through all their endpoints.
fn is_cycle(edges: &[(Eid, Eid)]) -> bool {
    let succ: BTreeMap<Eid, Eid> = edges.iter().copied().collect();
    if succ.len() != edges.len() {
        return false;
    }
    let targets: BTreeSet<Eid> = edges.iter().map(|e| e.1).collect();
    if targets.len() != edges.len() || targets != succ.keys().copied().collect() {
        return false;
    }
    let start = edges[0].0;
    let mut cur = start;
    for step in 1..=edges.len() {
        cur = succ[&cur];
        if cur == start {
            return step == edges.len();
        }
    }
    false
}

fn pruned_core_cycle() -> Outcome {
    let sys = load("mutex_fenced.wmc");
    let opts = Options {
        keep_cores: 1_000,
        ..Options::default()
    };
    let report = bwd(&sys, &Tso, &opts).map_err(|e| e.to_string())?;
    let cycles: Vec<_> = report
        .cores
        .iter()
        .filter(|c| c.core.len() == 4)
        .filter_map(|c| {
            let edges: Option<Vec<(Eid, Eid)>> = c
                .core
                .iter()
                .map(|l| match l {
                    Literal::Ghb(a, b) => Some((*a, *b)),
                    _ => None,
                })
                .collect();
            edges.filter(|e| is_cycle(e)).map(|_| c)
        })
        .collect();
    match cycles.first() {
        Some(c) => {
            let text: Vec<String> = c.core.iter().map(|l| l.to_string()).collect();
            Ok(format!(
                "{} of {} cores, e.g. via {}: {}",
                cycles.len(),
                report.cores.len(),
                c.via,
                text.join(" && ")
            ))
        }
        None => Err(format!(
            "no 4-edge ghb cycle among {} cores",
            report.cores.len()
        )),
    }
}

fn table_verdicts() -> Outcome {
    let expected = [
        ("mutex_unfenced.wmc", "US"),
        ("mutex_fenced.wmc", "S"),
        ("spinlock.wmc", "S"),
        ("barrier.wmc", "S"),
    ];
    let opts = Options {
        timeout: Some(Duration::from_secs(60)),
        ..Options::default()
    };
    let mut got = Vec::new();
    for (name, want) in expected {
        let (v, t) = run(name, &opts, false)?;
        if word(&v) != want {
            return Err(format!("{name}: expected {want}, got {}", word(&v)));
        }
        got.push(format!(
            "{} {want} {} ms",
            name.trim_end_matches(".wmc"),
            t.as_millis()
        ));
    }
    Ok(got.join(", "))
}

fn differential() -> Outcome {
    for name in CORPUS {
        match agree(&load(name), &[2, 3]) {
            Agreement::Agree => {}
            other => return Err(format!("{name}: {other:?}")),
        }
    }
    let mut rng = StdRng::seed_from_u64(0xacce97);
    let mut inconclusive = 0;
    for k in 0..RANDOM_SYSTEMS {
        let text = random_system(&mut rng);
        let sys = weakmc::parse_system(&text).map_err(|e| format!("generated system {k}: {e}"))?;
        match agree(&sys, &[2, 3]) {
            Agreement::Agree => {}
            Agreement::Inconclusive => inconclusive += 1,
            Agreement::Disagree(why) => return Err(format!("random system {k}: {why}\n{text}")),
        }
    }
    if inconclusive > MAX_INCONCLUSIVE {
        return Err(format!(
            "{inconclusive} random systems exhausted the engine budget"
        ));
    }
    Ok(format!(
        "{} corpus files, {RANDOM_SYSTEMS} random systems, {inconclusive} inconclusive",
        CORPUS.len()
    ))
}

fn store_buffering() -> Outcome {
    let opts = Options::default();
    let checks = [
        ("sb.wmc", false, "US"),
        ("sb_fenced.wmc", false, "S"),
        ("sb.wmc", true, "S"),
    ];
    for (name, sc, want) in checks {
        let (v, _) = run(name, &opts, sc)?;
        if word(&v) != want {
            let model = if sc { "sc" } else { "tso" };
            return Err(format!(
                "{name} under {model}: expected {want}, got {}",
                word(&v)
            ));
        }
    }
    Ok("sb US under tso, sb_fenced S, sb S under sc".into())
}

/// Evaluates a value literal under a total assignment; `None` for literals
/// outside the finite fragment.
fn eval(l: &Literal, val: &dyn Fn(&Term) -> Option<Value>) -> Option<bool> {
    match l {
        Literal::True => Some(true),
        Literal::False => Some(false),
        Literal::Cmp(op, a, b) => {
            let (x, y) = (val(a)?, val(b)?);
            match op {
                CmpOp::Eq => Some(x == y),
                CmpOp::Ne => Some(x != y),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Depth-first search for an assignment of `terms` over `domains` that
/// satisfies every literal, checking each literal once its terms are fixed.
fn find_model(terms: &[Term], domains: &[Vec<Value>], lits: &[Literal]) -> Option<Vec<Value>> {
    fn go(
        k: usize,
        terms: &[Term],
        domains: &[Vec<Value>],
        lits: &[Literal],
        cur: &mut Vec<Value>,
    ) -> bool {
        let lookup = |t: &Term| match t {
            Term::Const(v) => Some(v.clone()),
            _ => terms
                .iter()
                .position(|u| u == t)
                .and_then(|i| cur.get(i).cloned()),
        };
        if lits.iter().any(|l| eval(l, &lookup) == Some(false)) {
            return false;
        }
        if k == terms.len() {
            return true;
        }
        for v in &domains[k] {
            cur.push(v.clone());
            if go(k + 1, terms, domains, lits, cur) {
                return true;
            }
            cur.pop();
        }
        false
    }
    let mut cur = Vec::new();
    go(0, terms, domains, lits, &mut cur).then_some(cur)
}

fn value_terms(lits: &[Literal]) -> Vec<Term> {
    let set: BTreeSet<Term> = lits
        .iter()
        .flat_map(|l| l.terms().into_iter().cloned())
        .filter(|t| !matches!(t, Term::Const(_)))
        .collect();
    set.into_iter().collect()
}

/// Whether some ranking of `nodes` puts every `ghb` pair strictly in order
/// and every `equal` pair at the same rank.
fn rank_model_exists(nodes: &[Eid], ghb: &[(Eid, Eid)], equal: &[(Eid, Eid)]) -> bool {
    let n = nodes.len();
    let idx = |e: Eid| nodes.iter().position(|&x| x == e).expect("listed node");
    let mut rank = vec![0usize; n];
    loop {
        let ok = ghb.iter().all(|&(a, b)| rank[idx(a)] < rank[idx(b)])
            && equal.iter().all(|&(a, b)| rank[idx(a)] == rank[idx(b)]);
        if ok {
            return true;
        }
        let mut i = 0;
        while i < n && rank[i] + 1 == n {
            rank[i] = 0;
            i += 1;
        }
        if i == n {
            return false;
        }
        rank[i] += 1;
    }
}

fn sat_brute_force() -> Outcome {
    let mut sig = Signature::new();
    let st = Sort::enumeration("st", &["A", "B"]).map_err(|e| e.to_string())?;
    sig.add_sort(st.clone());
    sig.add_array("PC", st.clone(), true);
    sig.add_weak("X", st, false);
    let solver = Solver::new(sig);
    let consts = [
        Term::Const(Value::Enum("A".into())),
        Term::Const(Value::Enum("B".into())),
    ];
    let mut rng = StdRng::seed_from_u64(0x5a7);
    let (mut sat, mut unsat) = (0, 0);
    for k in 0..SAT_CUBES {
        let procs: Vec<ProcVar> = (1..=rng.gen_range(1..=3)).map(ProcVar).collect();
        let eids: Vec<Eid> = (1..=rng.gen_range(1..=4)).map(Eid).collect();
        let mut terms: Vec<Term> = procs.iter().map(|&p| Term::array("PC", p)).collect();
        terms.extend(eids.iter().map(|&e| Term::val("X", e, None)));
        let mut lits = Vec::new();
        for &e in &eids {
            let atom = EventAtom::new(e, "X", procs[rng.gen_range(0..procs.len())], None);
            lits.push(if rng.gen_bool(0.5) {
                Literal::Rd(atom)
            } else {
                Literal::Wr(atom)
            });
        }
        let mut values = Vec::new();
        for _ in 0..rng.gen_range(1..=6) {
            let a = terms[rng.gen_range(0..terms.len())].clone();
            let b = if rng.gen_bool(0.5) {
                consts[rng.gen_range(0..2)].clone()
            } else {
                terms[rng.gen_range(0..terms.len())].clone()
            };
            let op = if rng.gen_bool(0.6) {
                CmpOp::Eq
            } else {
                CmpOp::Ne
            };
            values.push(Literal::cmp(op, a, b));
        }
        let (mut ghb, mut equal) = (Vec::new(), Vec::new());
        for _ in 0..rng.gen_range(0..=4) {
            let (a, b) = (
                eids[rng.gen_range(0..eids.len())],
                eids[rng.gen_range(0..eids.len())],
            );
            if a == b {
                continue;
            }
            if rng.gen_bool(0.25) {
                equal.push((a, b));
                lits.push(Literal::ghb_equal(a, b));
            } else {
                ghb.push((a, b));
                lits.push(Literal::Ghb(a, b));
            }
        }
        lits.extend(values.iter().cloned());
        let cube =
            weakmc::logic::mk_cube(eids.clone(), procs.clone(), lits).map_err(|e| e.to_string())?;
        let domains = vec![
            consts
                .iter()
                .map(|c| match c {
                    Term::Const(v) => v.clone(),
                    _ => unreachable!(),
                })
                .collect::<Vec<_>>();
            terms.len()
        ];
        // value and order literals share no variables, so a model splits
        let expected = find_model(&terms, &domains, &values).is_some()
            && rank_model_exists(&eids, &ghb, &equal);
        let got = solver.check_sat(&cube).map_err(|e| e.to_string())? == SatResult::Sat;
        if got != expected {
            return Err(format!(
                "cube {k}: solver says {got}, enumeration says {expected}: {cube}"
            ));
        }
        if expected {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    Ok(format!("{SAT_CUBES} cubes, {sat} sat, {unsat} unsat"))
}

/// Consistency by merging equal pairs and topologically sorting the quotient.
fn topo_consistent(n: usize, ghb: &[(usize, usize)], equal: &[(usize, usize)]) -> bool {
    let mut class: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for &(a, b) in equal {
            let (x, y) = (class[a], class[b]);
            if x != y {
                let (keep, drop) = (x.min(y), x.max(y));
                class
                    .iter_mut()
                    .filter(|c| **c == drop)
                    .for_each(|c| *c = keep);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut indeg = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in ghb {
        let (x, y) = (class[a], class[b]);
        if x == y {
            return false;
        }
        succ[x].push(y);
        indeg[y] += 1;
    }
    let live: BTreeSet<usize> = class.iter().copied().collect();
    let mut ready: Vec<usize> = live.iter().copied().filter(|&c| indeg[c] == 0).collect();
    let mut done = 0;
    while let Some(c) = ready.pop() {
        done += 1;
        for &d in &succ[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                ready.push(d);
            }
        }
    }
    done == live.len()
}

fn store_brute_force() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x7090);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    for k in 0..STORE_CASES {
        let n = rng.gen_range(2..=6);
        let mut store = RelationStore::new();
        for i in 0..n {
            store.register(Eid(i as u32));
        }
        let (mut ghb, mut equal) = (Vec::new(), Vec::new());
        for _ in 0..rng.gen_range(1..=8) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a == b {
                continue;
            }
            let merge = rng.gen_bool(0.3);
            let (mut g, mut e) = (ghb.clone(), equal.clone());
            if merge {
                e.push((a, b));
            } else {
                g.push((a, b));
            }
            let expected = topo_consistent(n, &g, &e);
            let got = if merge {
                store.add_ghb_equal(Eid(a as u32), Eid(b as u32)).is_ok()
            } else {
                store.add_ghb(Eid(a as u32), Eid(b as u32)).is_ok()
            };
            if got != expected {
                return Err(format!(
                    "case {k}: adding {a}{}{b} after ghb {ghb:?} equal {equal:?}",
                    if merge { "=" } else { "<" }
                ));
            }
            if got {
                accepted += 1;
                (ghb, equal) = (g, e);
            } else {
                rejected += 1;
            }
        }
        if !store.is_consistent() {
            return Err(format!("case {k}: store reports itself inconsistent"));
        }
        for _ in 0..3 {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let with = |g: (usize, usize), merge: bool| {
                let (mut gg, mut ee) = (ghb.clone(), equal.clone());
                if merge {
                    ee.push(g);
                } else {
                    gg.push(g);
                }
                topo_consistent(n, &gg, &ee)
            };
            let forced_before = a != b && !with((b, a), false) && !with((a, b), true);
            let forced_equal = a == b || (!with((a, b), false) && !with((b, a), false));
            let (ea, eb) = (Eid(a as u32), Eid(b as u32));
            if store.ordered(ea, eb) != forced_before || store.same_class(ea, eb) != forced_equal {
                return Err(format!(
                    "case {k}: entailment of {a},{b} after ghb {ghb:?} equal {equal:?}"
                ));
            }
        }
    }
    Ok(format!(
        "{STORE_CASES} cases, {accepted} insertions accepted, {rejected} rejected"
    ))
}

/// Reachability over ghb edges with ghb-equal classes merged.
fn closure(c: &Cube) -> (HashMap<Eid, usize>, Vec<Vec<bool>>) {
    let eids: Vec<Eid> = c.eids.iter().copied().collect();
    let mut class: HashMap<Eid, usize> = eids.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    loop {
        let mut changed = false;
        for &(a, b) in &c.equal {
            let (x, y) = (class[&a], class[&b]);
            if x != y {
                let (keep, drop) = (x.min(y), x.max(y));
                class
                    .values_mut()
                    .filter(|v| **v == drop)
                    .for_each(|v| *v = keep);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let n = eids.len();
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in &c.ghb {
        reach[class[&a]][class[&b]] = true;
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][m] && reach[m][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (class, reach)
}

fn certificates() -> Outcome {
    let mut checked = 0;
    let mut skipped = 0;
    for name in CORPUS {
        let sys = load(name);
        let sig = sys.signature();
        let opts = Options {
            keep_certificates: 10_000,
            ..Options::default()
        };
        let report = bwd(&sys, &Tso, &opts).map_err(|e| e.to_string())?;
        for rec in &report.certificates {
            let v = rec.visited.rename(&rec.certificate.substitution());
            let c = &rec.covered;
            let fail = |why: String| Err(format!("{name}: {why}\nV: {}\nC: {c}", rec.visited));
            for ev in &v.events {
                let ok = c.events.iter().any(|ce: &Event| {
                    ce.dir == ev.dir
                        && ce.atom == ev.atom
                        && !(ev.dir == Dir::Read && !ev.satisfied && ce.satisfied)
                });
                if !ok {
                    return fail(format!("event {} has no image", ev.literal()));
                }
            }
            if !v.fences.is_subset(&c.fences) || !v.finals.is_subset(&c.finals) {
                return fail("fence or final-read markers missing".into());
            }
            let (class, reach) = closure(c);
            for &(a, b) in &v.equal {
                if class[&a] != class[&b] {
                    return fail(format!("ghb-equal({a},{b}) not entailed"));
                }
            }
            for &(a, b) in &v.ghb {
                if class[&a] == class[&b] || !reach[class[&a]][class[&b]] {
                    return fail(format!("ghb({a},{b}) not entailed"));
                }
            }
            let mut all = c.values.clone();
            all.extend(v.values.iter().cloned());
            let terms = value_terms(&all);
            let domains: Option<Vec<Vec<Value>>> = terms
                .iter()
                .map(|t| sig.term_sort(t).and_then(|s| s.domain()))
                .collect();
            let Some(domains) = domains else {
                skipped += 1;
                continue;
            };
            for l in &v.values {
                if c.values.contains(l) {
                    continue;
                }
                let negated = match l {
                    Literal::Cmp(CmpOp::Eq, a, b) => Literal::cmp(CmpOp::Ne, a.clone(), b.clone()),
                    Literal::Cmp(CmpOp::Ne, a, b) => Literal::cmp(CmpOp::Eq, a.clone(), b.clone()),
                    other => return fail(format!("unexpected literal {other}")),
                };
                let mut lits = c.values.clone();
                lits.push(negated);
                if let Some(m) = find_model(&terms, &domains, &lits) {
                    return fail(format!("{l} fails in the model {m:?} of C"));
                }
            }
            checked += 1;
        }
    }
    if checked < MIN_CERTIFICATES {
        return Err(format!(
            "only {checked} certificates checked ({skipped} outside the finite fragment)"
        ));
    }
    Ok(format!(
        "{checked} certificates confirmed, {skipped} outside the finite fragment"
    ))
}
