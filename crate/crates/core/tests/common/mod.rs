#![allow(dead_code)]

use std::path::PathBuf;
use std::time::Duration;

use rand::rngs::StdRng;
use rand::Rng;

use weakmc::engine::{bwd, Options, Verdict};
use weakmc::model::Tso;
use weakmc::oracle::{self, OracleVerdict};
use weakmc::TransitionSystem;

pub fn benchmark_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../benchmarks")
        .join(name)
}

pub fn load(name: &str) -> TransitionSystem {
    let text = std::fs::read_to_string(benchmark_path(name)).expect("benchmark file");
    weakmc::parse_system(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const CORPUS: &[&str] = &[
    "mutex_unfenced.wmc",
    "mutex_fenced.wmc",
    "spinlock.wmc",
    "barrier.wmc",
    "sb.wmc",
    "sb_fenced.wmc",
    "mp.wmc",
];

/// A random system text in the fragment where backward reachability and the
/// store-buffer machine describe the same runs: regular state only at the
/// acting process, no quantified guards, fences only next to weak reads, and
/// every unsafe process observing weak memory.
pub fn random_system(rng: &mut StdRng) -> String {
    let mut out =
        String::from("type st = S0 | S1 | S2\narray PC[proc] : st\narray R[proc] : bool\n");
    let n_weak = rng.gen_range(1..=2);
    let mut weak: Vec<(String, bool)> = Vec::new();
    for k in 0..n_weak {
        if rng.gen_bool(0.5) {
            out.push_str(&format!("weak var w{k} : bool\n"));
            weak.push((format!("w{k}"), false));
        } else {
            out.push_str(&format!("weak array W{k}[proc] : bool\n"));
            weak.push((format!("W{k}"), true));
        }
    }
    let mut init = vec!["PC[j] = S0".to_string(), "R[j] = False".to_string()];
    for (name, indexed) in &weak {
        init.push(if *indexed {
            format!("{name}[j] = False")
        } else {
            format!("{name} = False")
        });
    }
    out.push_str(&format!("init (j) {{ {} }}\n", init.join(" && ")));

    let n_unsafe = rng.gen_range(1..=2);
    let params: Vec<&str> = ["i", "j"][..n_unsafe].to_vec();
    let mut body = Vec::new();
    for p in &params {
        body.push(format!("PC[{p}] = {}", state(rng)));
        let (name, indexed) = &weak[rng.gen_range(0..weak.len())];
        let access = if *indexed {
            format!("{p} @ {name}[{}]", params[rng.gen_range(0..params.len())])
        } else {
            format!("{p} @ {name}")
        };
        body.push(format!("{access} = {}", boolean(rng)));
        if rng.gen_bool(0.3) {
            body.push(format!("R[{p}] = {}", boolean(rng)));
        }
    }
    out.push_str(&format!(
        "unsafe ({}) {{ {} }}\n",
        params.join(" "),
        body.join(" && ")
    ));

    let n_trans = rng.gen_range(1..=3);
    for t in 0..n_trans {
        let aux = rng.gen_bool(0.3) && weak.iter().any(|w| w.1);
        let ps = if aux { "i k" } else { "i" };
        let idx = |rng: &mut StdRng| if aux && rng.gen_bool(0.5) { "k" } else { "i" };
        let weak_term = |rng: &mut StdRng| {
            let (name, indexed) = &weak[rng.gen_range(0..weak.len())];
            if *indexed {
                format!("{name}[{}]", idx(rng))
            } else {
                name.clone()
            }
        };
        let mut guard = vec![format!("PC[i] = {}", state(rng))];
        let mut reads = false;
        if rng.gen_bool(0.5) {
            guard.push(format!("{} = {}", weak_term(rng), boolean(rng)));
            reads = true;
        }
        let mut updates = vec![format!("PC[i] := {}", state(rng))];
        if rng.gen_bool(0.4) {
            updates.push(format!("R[i] := {}", weak_term(rng)));
            reads = true;
        }
        if rng.gen_bool(0.6) {
            let target = weak_term(rng);
            updates.push(format!("{target} := {}", boolean(rng)));
        }
        if reads && rng.gen_bool(0.4) {
            guard.push("fence()".into());
        }
        out.push_str(&format!(
            "transition t{t} ({ps}) requires {{ {} }} {{ {} }}\n",
            guard.join(" && "),
            updates.join("; ")
        ));
    }
    out
}

fn state(rng: &mut StdRng) -> &'static str {
    ["S0", "S1", "S2"][rng.gen_range(0..3)]
}

fn boolean(rng: &mut StdRng) -> &'static str {
    if rng.gen_bool(0.5) {
        "True"
    } else {
        "False"
    }
}

/// Outcome of comparing the engine with the explicit-state machine.
#[derive(Debug)]
pub enum Agreement {
    Agree,
    /// The engine ran out of budget; nothing to compare.
    Inconclusive,
    Disagree(String),
}

/// Engine "safe" must hold at every size checked, an explicit "unsafe" must
/// be found by the engine, and an engine counterexample must replay.
pub fn agree(sys: &TransitionSystem, sizes: &[usize]) -> Agreement {
    let opts = Options {
        max_depth: Some(10),
        max_nodes: 150,
        timeout: Some(Duration::from_secs(30)),
        ..Options::default()
    };
    let report = match bwd(sys, &Tso, &opts) {
        Ok(r) => r,
        Err(e) => return Agreement::Disagree(format!("engine error: {e}")),
    };
    if matches!(report.verdict, Verdict::ResourceLimit(_)) {
        return Agreement::Inconclusive;
    }
    for &n in sizes {
        let o = match oracle::enumerate(sys, n, 2_000_000) {
            Ok(o) => o,
            Err(e) => return Agreement::Disagree(format!("oracle error at n={n}: {e}")),
        };
        if let (Verdict::Safe, OracleVerdict::Unsafe { .. }) = (&report.verdict, o) {
            return Agreement::Disagree(format!("engine safe, oracle unsafe at n={n}"));
        }
    }
    if let Verdict::Unsafe(t) = &report.verdict {
        let n = t.procs.len().max(sizes.iter().copied().max().unwrap_or(1));
        match oracle::replay(sys, t, n) {
            Ok(true) => {}
            Ok(false) => return Agreement::Disagree(format!("trace does not replay:\n{t}")),
            Err(e) => return Agreement::Disagree(format!("replay error: {e}")),
        }
    }
    Agreement::Agree
}
