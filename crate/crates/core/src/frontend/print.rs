use std::fmt::Write;

use super::{Target, TransitionSystem};
use crate::logic::{CmpOp, Literal, Name, ProcVar, SortKind, Term};

struct Names<'a>(Vec<(ProcVar, &'a Name)>);

impl Names<'_> {
    fn get(&self, p: ProcVar) -> String {
        self.0
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, n)| n.to_string())
            .unwrap_or_else(|| format!("p{}", p.0))
    }

    fn term(&self, t: &Term) -> String {
        let ix = |i: &Option<ProcVar>| i.map(|p| format!("[{}]", self.get(p))).unwrap_or_default();
        match t {
            Term::Const(v) => v.to_string(),
            Term::Proc(p) => self.get(*p),
            Term::Array { name, index } | Term::Weak { name, index } => {
                format!("{name}{}", ix(index))
            }
            Term::View { proc, name, index } => {
                format!("{} @ {name}{}", self.get(*proc), ix(index))
            }
            Term::Val { .. } => t.to_string(),
        }
    }

    fn lit(&self, l: &Literal) -> String {
        match l {
            Literal::Cmp(op, a, b) => {
                let sym = match op {
                    CmpOp::Ne => "<>",
                    _ => op.symbol(),
                };
                format!("{} {sym} {}", self.term(a), self.term(b))
            }
            other => other.to_string(),
        }
    }

    fn conj(&self, lits: &[Literal]) -> String {
        lits.iter()
            .map(|l| self.lit(l))
            .collect::<Vec<_>>()
            .join(" && ")
    }
}

/// Renders a system in the input syntax; the output parses back to an equal
/// system, up to source positions.
pub fn print_system(sys: &TransitionSystem) -> String {
    let mut out = String::new();
    for s in &sys.sorts {
        if let SortKind::Enum(cs) = &s.kind {
            let cs: Vec<&str> = cs.iter().map(|c| &**c).collect();
            let _ = writeln!(out, "type {} = {}", s.name, cs.join(" | "));
        }
    }
    for d in &sys.globals {
        let _ = writeln!(out, "var {} : {}", d.name, d.sort.name);
    }
    for d in &sys.arrays {
        let _ = writeln!(out, "array {}[proc] : {}", d.name, d.sort.name);
    }
    for d in &sys.weak_vars {
        let _ = writeln!(out, "weak var {} : {}", d.name, d.sort.name);
    }
    for d in &sys.weak_arrays {
        let _ = writeln!(out, "weak array {}[proc] : {}", d.name, d.sort.name);
    }
    out.push('\n');

    let init = &sys.init;
    let names = Names(vec![(super::InitSpec::VAR, &init.var)]);
    let _ = writeln!(out, "init ({}) {{ {} }}", init.var, names.conj(&init.body));
    for u in &sys.unsafe_specs {
        let names = Names(u.procs().into_iter().zip(u.params.iter()).collect());
        let params: Vec<&str> = u.params.iter().map(|p| &**p).collect();
        let _ = writeln!(
            out,
            "unsafe ({}) {{ {} }}",
            params.join(" "),
            names.conj(&u.body)
        );
    }
    for t in &sys.transitions {
        let mut names: Vec<(ProcVar, &Name)> = t
            .params
            .iter()
            .enumerate()
            .map(|(n, s)| (ProcVar(n as u32), s))
            .collect();
        names.extend(t.foralls.iter().map(|f| (f.var, &f.var_name)));
        let names = Names(names);
        let params: Vec<&str> = t.params.iter().map(|p| &**p).collect();
        let _ = write!(out, "\ntransition {} ({})", t.name, params.join(" "));
        let mut guard: Vec<String> = t.guard.iter().map(|l| names.lit(l)).collect();
        for f in &t.foralls {
            let mut s = format!("forall {}.", f.var_name);
            for e in &f.except {
                let _ = write!(s, " {} = {} ||", f.var_name, names.get(*e));
            }
            if f.body.len() == 1 {
                let _ = write!(s, " {}", names.lit(&f.body[0]));
            } else {
                let _ = write!(s, " ({})", names.conj(&f.body));
            }
            guard.push(s);
        }
        if !guard.is_empty() {
            let _ = write!(out, "\n  requires {{ {} }}", guard.join(" && "));
        }
        let ups: Vec<String> = t
            .updates
            .iter()
            .map(|u| {
                let target = match &u.target {
                    Target::Regular { name, index } => Term::Array {
                        name: name.clone(),
                        index: *index,
                    },
                    Target::Weak { name, index } => Term::Weak {
                        name: name.clone(),
                        index: *index,
                    },
                };
                format!("{} := {}", names.term(&target), names.term(&u.value))
            })
            .collect();
        let _ = writeln!(out, "\n  {{ {} }}", ups.join("; "));
    }
    out
}
