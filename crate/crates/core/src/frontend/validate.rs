use std::collections::BTreeSet;

use super::{FrontendError, Loc, Target, TransitionSpec, TransitionSystem};
use crate::logic::{CmpOp, Literal, Signature, SortKind, Term};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Context {
    Init,
    Unsafe,
    Guard,
    Action,
}

impl Context {
    fn describe(self) -> &'static str {
        match self {
            Context::Init => "the initial state",
            Context::Unsafe => "an unsafe formula",
            Context::Guard => "a transition guard",
            Context::Action => "a transition action",
        }
    }
}

struct Checker<'a> {
    sig: &'a Signature,
}

impl Checker<'_> {
    fn term(&self, t: &Term, ctx: Context, loc: Loc) -> Result<(), FrontendError> {
        let wrong = || FrontendError::WrongAccessForm {
            loc,
            context: ctx.describe().into(),
            term: t.to_string(),
        };
        match t {
            Term::Const(_) | Term::Proc(_) => {}
            Term::Val { .. } => return Err(wrong()),
            Term::Array { name, index }
            | Term::Weak { name, index }
            | Term::View { name, index, .. } => {
                if self.sig.is_indexed(name) != index.is_some() {
                    return Err(FrontendError::Invalid {
                        loc,
                        msg: if index.is_some() {
                            format!("`{name}` is not an array")
                        } else {
                            format!("array `{name}` needs an index")
                        },
                    });
                }
                match (t, ctx) {
                    (Term::View { .. }, Context::Guard | Context::Action | Context::Init) => {
                        return Err(wrong())
                    }
                    (Term::Weak { .. }, Context::Unsafe) => return Err(wrong()),
                    (
                        Term::Array {
                            name,
                            index: Some(j),
                        },
                        Context::Guard | Context::Action,
                    ) if *j != TransitionSpec::ACTOR => {
                        return Err(FrontendError::RegularAccessNotAtActor {
                            loc,
                            name: name.to_string(),
                        });
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn literal(&self, l: &Literal, ctx: Context, loc: Loc) -> Result<(), FrontendError> {
        match l {
            Literal::True | Literal::False => Ok(()),
            Literal::FenceGuard => match ctx {
                Context::Init => Err(FrontendError::FenceInInit { loc }),
                Context::Unsafe => Err(FrontendError::FenceInUnsafe { loc }),
                Context::Action => Err(FrontendError::FenceInAction { loc }),
                Context::Guard => Ok(()),
            },
            Literal::Cmp(op, a, b) => {
                self.term(a, ctx, loc)?;
                self.term(b, ctx, loc)?;
                self.same_sort(a, b, loc)?;
                let sa = self.sig.term_sort(a).expect("checked by same_sort");
                if matches!(op, CmpOp::Lt | CmpOp::Le) && sa.kind != SortKind::Int {
                    return Err(FrontendError::SortMismatch {
                        loc,
                        msg: format!("ordering `{l}` on non-integer sort `{}`", sa.name),
                    });
                }
                Ok(())
            }
            other => Err(FrontendError::Invalid {
                loc,
                msg: format!("`{other}` is not allowed in {}", ctx.describe()),
            }),
        }
    }

    fn same_sort(&self, a: &Term, b: &Term, loc: Loc) -> Result<(), FrontendError> {
        let sort = |t: &Term| {
            self.sig
                .term_sort(t)
                .ok_or_else(|| FrontendError::SortMismatch {
                    loc,
                    msg: format!("cannot determine the sort of `{t}`"),
                })
        };
        let (sa, sb) = (sort(a)?, sort(b)?);
        if sa.name != sb.name {
            return Err(FrontendError::SortMismatch {
                loc,
                msg: format!(
                    "`{a}` has sort `{}` but `{b}` has sort `{}`",
                    sa.name, sb.name
                ),
            });
        }
        Ok(())
    }
}

/// Checks the restrictions that name resolution alone does not enforce and
/// fills in the per-transition write sets.
pub fn validate_system(mut sys: TransitionSystem) -> Result<TransitionSystem, FrontendError> {
    let sig = sys.signature();
    let ck = Checker { sig: &sig };

    for l in &sys.init.body {
        ck.literal(l, Context::Init, sys.init.loc)?;
    }
    for u in &sys.unsafe_specs {
        for l in &u.body {
            ck.literal(l, Context::Unsafe, u.loc)?;
        }
    }
    for t in &mut sys.transitions {
        let loc = t.loc;
        for l in &t.guard {
            ck.literal(l, Context::Guard, loc)?;
        }
        for f in &t.foralls {
            for l in &f.body {
                if *l == Literal::FenceGuard {
                    return Err(FrontendError::Invalid {
                        loc,
                        msg: "fence() cannot appear under forall".into(),
                    });
                }
                ck.literal(l, Context::Guard, loc)?;
            }
        }
        let mut assigned = BTreeSet::new();
        let (mut wv, mut wa) = (BTreeSet::new(), BTreeSet::new());
        for u in &t.updates {
            let (target_term, name) = match &u.target {
                Target::Regular { name, index } => (
                    Term::Array {
                        name: name.clone(),
                        index: *index,
                    },
                    name,
                ),
                Target::Weak { name, index } => {
                    if index.is_some() {
                        wa.insert(name.clone());
                    } else {
                        wv.insert(name.clone());
                    }
                    (
                        Term::Weak {
                            name: name.clone(),
                            index: *index,
                        },
                        name,
                    )
                }
            };
            if !assigned.insert(name.clone()) {
                return Err(FrontendError::Invalid {
                    loc,
                    msg: format!("`{name}` is assigned more than once"),
                });
            }
            ck.term(&target_term, Context::Action, loc)?;
            ck.term(&u.value, Context::Action, loc)?;
            if matches!(u.value, Term::Proc(_)) {
                return Err(FrontendError::SortMismatch {
                    loc,
                    msg: format!("cannot assign a process to `{name}`"),
                });
            }
            ck.same_sort(&target_term, &u.value, loc)?;
        }
        t.weak_vars_written = wv;
        t.weak_arrays_written = wa;
    }
    Ok(sys)
}
