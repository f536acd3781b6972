use std::collections::BTreeMap;

use super::{
    Decl, ForallGuard, FrontendError, InitSpec, Loc, Target, TransitionSpec, TransitionSystem,
    UnsafeSpec, Update,
};
use crate::logic::{CmpOp, Literal, Name, ProcVar, Sort, Term, Value};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    loc: Loc,
}

const SYMBOLS: &[&str] = &[
    ":=", "&&", "||", "<>", "!=", "<=", ">=", "(", ")", "{", "}", "[", "]", "=", "<", ">", "|",
    ":", ";", ",", ".", "@", "!",
];

fn lex(text: &str) -> Result<Vec<Token>, FrontendError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let loc = Loc { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') || c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(s),
                loc,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let n = s.parse::<i64>().map_err(|_| FrontendError::Syntax {
                loc,
                msg: format!("integer literal `{s}` out of range"),
            })?;
            out.push(Token {
                tok: Tok::Int(n),
                loc,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token {
                    tok: Tok::Sym(s),
                    loc,
                });
            }
            None => {
                return Err(FrontendError::Syntax {
                    loc,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        loc: Loc { line, col },
    });
    Ok(out)
}

#[derive(Clone, Debug)]
enum RawTerm {
    Ident(String, Loc),
    Index(String, String, Loc),
    At(String, String, Option<String>, Loc),
    Int(i64),
}

#[derive(Clone, Debug)]
enum RawLit {
    True,
    False,
    Fence(Loc),
    Cmp {
        op: &'static str,
        lhs: RawTerm,
        rhs: RawTerm,
        negated: bool,
        loc: Loc,
    },
    Forall {
        var: String,
        except: Vec<String>,
        body: Vec<RawLit>,
        loc: Loc,
    },
}

struct RawTransition {
    name: String,
    params: Vec<String>,
    guard: Vec<RawLit>,
    updates: Vec<(RawTerm, RawTerm, Loc)>,
    loc: Loc,
}

#[derive(Default)]
struct Raw {
    sorts: Vec<(String, Vec<String>, Loc)>,
    decls: Vec<(DeclKind, String, String, Loc)>,
    init: Option<(String, Vec<RawLit>, Loc)>,
    unsafe_specs: Vec<(Vec<String>, Vec<RawLit>, Loc)>,
    transitions: Vec<RawTransition>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum DeclKind {
    Global,
    Array,
    WeakVar,
    WeakArray,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, FrontendError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(FrontendError::Syntax {
            loc: self.loc(),
            msg: msg.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn file(&mut self) -> PResult<Raw> {
        let mut raw = Raw::default();
        loop {
            let loc = self.loc();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) => match kw.as_str() {
                    "type" => {
                        self.bump();
                        let name = self.ident()?;
                        self.expect_sym("=")?;
                        let mut ctors = vec![self.ident()?];
                        while self.eat_sym("|") {
                            ctors.push(self.ident()?);
                        }
                        raw.sorts.push((name, ctors, loc));
                    }
                    "var" => {
                        self.bump();
                        let (n, s) = self.var_decl()?;
                        raw.decls.push((DeclKind::Global, n, s, loc));
                    }
                    "array" => {
                        self.bump();
                        let (n, s) = self.array_decl()?;
                        raw.decls.push((DeclKind::Array, n, s, loc));
                    }
                    "weak" => {
                        self.bump();
                        if self.is_kw("var") {
                            self.bump();
                            let (n, s) = self.var_decl()?;
                            raw.decls.push((DeclKind::WeakVar, n, s, loc));
                        } else if self.is_kw("array") {
                            self.bump();
                            let (n, s) = self.array_decl()?;
                            raw.decls.push((DeclKind::WeakArray, n, s, loc));
                        } else {
                            return self.err("expected `var` or `array` after `weak`");
                        }
                    }
                    "init" => {
                        self.bump();
                        let params = self.params()?;
                        if params.len() != 1 {
                            return Err(FrontendError::Syntax {
                                loc,
                                msg: "init takes exactly one process variable".into(),
                            });
                        }
                        let body = self.block_lits()?;
                        if raw.init.is_some() {
                            return Err(FrontendError::Syntax {
                                loc,
                                msg: "duplicate init".into(),
                            });
                        }
                        raw.init = Some((params[0].clone(), body, loc));
                    }
                    "unsafe" => {
                        self.bump();
                        let params = self.params()?;
                        let body = self.block_lits()?;
                        raw.unsafe_specs.push((params, body, loc));
                    }
                    "transition" => {
                        self.bump();
                        let name = self.ident()?;
                        let params = self.params()?;
                        let guard = if self.is_kw("requires") {
                            self.bump();
                            self.block_lits()?
                        } else {
                            Vec::new()
                        };
                        let updates = self.block_updates()?;
                        raw.transitions.push(RawTransition {
                            name,
                            params,
                            guard,
                            updates,
                            loc,
                        });
                    }
                    other => return self.err(format!("unexpected `{other}` at top level")),
                },
                other => return self.err(format!("unexpected {} at top level", describe(&other))),
            }
        }
        Ok(raw)
    }

    fn var_decl(&mut self) -> PResult<(String, String)> {
        let n = self.ident()?;
        self.expect_sym(":")?;
        Ok((n, self.ident()?))
    }

    fn array_decl(&mut self) -> PResult<(String, String)> {
        let n = self.ident()?;
        self.expect_sym("[")?;
        self.expect_kw("proc")?;
        self.expect_sym("]")?;
        self.expect_sym(":")?;
        Ok((n, self.ident()?))
    }

    fn params(&mut self) -> PResult<Vec<String>> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        while !self.is_sym(")") {
            out.push(self.ident()?);
            self.eat_sym(",");
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn block_lits(&mut self) -> PResult<Vec<RawLit>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        if !self.is_sym("}") {
            out.push(self.literal()?);
            while self.eat_sym("&&") {
                out.push(self.literal()?);
            }
        }
        self.expect_sym("}")?;
        Ok(out)
    }

    fn literal(&mut self) -> PResult<RawLit> {
        let loc = self.loc();
        if self.is_kw("true") {
            self.bump();
            return Ok(RawLit::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(RawLit::False);
        }
        if self.is_kw("fence") {
            self.bump();
            self.expect_sym("(")?;
            self.expect_sym(")")?;
            return Ok(RawLit::Fence(loc));
        }
        if self.is_kw("forall") {
            self.bump();
            let var = self.ident()?;
            self.expect_sym(".")?;
            let mut except = Vec::new();
            // leading `k = p ||` disjuncts
            while matches!(self.peek(), Tok::Ident(x) if *x == var)
                && matches!(self.peek_at(1), Tok::Sym("="))
                && matches!(self.peek_at(3), Tok::Sym("||"))
            {
                self.bump();
                self.bump();
                except.push(self.ident()?);
                self.expect_sym("||")?;
            }
            let body = if self.eat_sym("(") {
                let mut b = vec![self.literal()?];
                while self.eat_sym("&&") {
                    b.push(self.literal()?);
                }
                self.expect_sym(")")?;
                b
            } else {
                vec![self.literal()?]
            };
            return Ok(RawLit::Forall {
                var,
                except,
                body,
                loc,
            });
        }
        if self.eat_sym("!") {
            let paren = self.eat_sym("(");
            let inner = self.literal()?;
            if paren {
                self.expect_sym(")")?;
            }
            return Ok(match inner {
                RawLit::True => RawLit::False,
                RawLit::False => RawLit::True,
                RawLit::Cmp {
                    op,
                    lhs,
                    rhs,
                    negated,
                    loc,
                } => RawLit::Cmp {
                    op,
                    lhs,
                    rhs,
                    negated: !negated,
                    loc,
                },
                RawLit::Fence(l) | RawLit::Forall { loc: l, .. } => {
                    return Err(FrontendError::Syntax {
                        loc: l,
                        msg: "only comparisons can be negated".into(),
                    })
                }
            });
        }
        if self.is_sym("(") {
            self.bump();
            let l = self.literal()?;
            self.expect_sym(")")?;
            return Ok(l);
        }
        let lhs = self.term()?;
        let op = match self.peek() {
            Tok::Sym(s @ ("=" | "<>" | "!=" | "<" | "<=" | ">" | ">=")) => *s,
            other => return self.err(format!("expected comparison, found {}", describe(other))),
        };
        self.bump();
        let rhs = self.term()?;
        Ok(RawLit::Cmp {
            op,
            lhs,
            rhs,
            negated: false,
            loc,
        })
    }

    fn term(&mut self) -> PResult<RawTerm> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(RawTerm::Int(n))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat_sym("[") {
                    let idx = self.ident()?;
                    self.expect_sym("]")?;
                    Ok(RawTerm::Index(name, idx, loc))
                } else if self.eat_sym("@") {
                    let var = self.ident()?;
                    let idx = if self.eat_sym("[") {
                        let i = self.ident()?;
                        self.expect_sym("]")?;
                        Some(i)
                    } else {
                        None
                    };
                    Ok(RawTerm::At(name, var, idx, loc))
                } else {
                    Ok(RawTerm::Ident(name, loc))
                }
            }
            other => self.err(format!("expected term, found {}", describe(&other))),
        }
    }

    fn block_updates(&mut self) -> PResult<Vec<(RawTerm, RawTerm, Loc)>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.is_sym("}") {
            let loc = self.loc();
            if self.is_kw("fence") {
                return Err(FrontendError::FenceInAction { loc });
            }
            let target = self.term()?;
            self.expect_sym(":=")?;
            let value = self.term()?;
            out.push((target, value, loc));
            if !self.eat_sym(";") {
                break;
            }
        }
        self.expect_sym("}")?;
        Ok(out)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Name tables used while resolving raw syntax.
struct Env {
    sorts: BTreeMap<String, Sort>,
    ctors: BTreeMap<String, Name>,
    symbols: BTreeMap<String, DeclKind>,
}

/// What a term may refer to in the current clause.
struct Scope<'a> {
    procs: Vec<(&'a str, ProcVar)>,
}

impl Scope<'_> {
    fn proc(&self, n: &str) -> Option<ProcVar> {
        self.procs
            .iter()
            .rev()
            .find(|(m, _)| *m == n)
            .map(|(_, p)| *p)
    }
}

impl Env {
    fn resolve_term(&self, t: &RawTerm, scope: &Scope) -> PResult<Term> {
        let idx = |name: &str, loc: Loc| {
            scope.proc(name).ok_or_else(|| FrontendError::UnknownName {
                loc,
                name: name.into(),
            })
        };
        Ok(match t {
            RawTerm::Int(n) => Term::Const(Value::Int(*n)),
            RawTerm::Ident(n, loc) => {
                if let Some(p) = scope.proc(n) {
                    Term::Proc(p)
                } else if n == "True" {
                    Term::Const(Value::Bool(true))
                } else if n == "False" {
                    Term::Const(Value::Bool(false))
                } else if self.ctors.contains_key(n.as_str()) {
                    Term::Const(Value::Enum(n.as_str().into()))
                } else {
                    match self.symbols.get(n.as_str()) {
                        Some(DeclKind::Global | DeclKind::Array) => Term::Array {
                            name: n.as_str().into(),
                            index: None,
                        },
                        Some(DeclKind::WeakVar | DeclKind::WeakArray) => Term::Weak {
                            name: n.as_str().into(),
                            index: None,
                        },
                        None => {
                            return Err(FrontendError::UnknownName {
                                loc: *loc,
                                name: n.clone(),
                            })
                        }
                    }
                }
            }
            RawTerm::Index(n, i, loc) => match self.symbols.get(n.as_str()) {
                Some(DeclKind::Global | DeclKind::Array) => Term::Array {
                    name: n.as_str().into(),
                    index: Some(idx(i, *loc)?),
                },
                Some(DeclKind::WeakVar | DeclKind::WeakArray) => Term::Weak {
                    name: n.as_str().into(),
                    index: Some(idx(i, *loc)?),
                },
                None => {
                    return Err(FrontendError::UnknownName {
                        loc: *loc,
                        name: n.clone(),
                    })
                }
            },
            RawTerm::At(p, n, i, loc) => {
                let proc = idx(p, *loc)?;
                if !matches!(
                    self.symbols.get(n.as_str()),
                    Some(DeclKind::WeakVar | DeclKind::WeakArray)
                ) {
                    return Err(FrontendError::WrongAccessForm {
                        loc: *loc,
                        context: "a view access".into(),
                        term: format!("{p} @ {n}"),
                    });
                }
                let index = match i {
                    Some(i) => Some(idx(i, *loc)?),
                    None => None,
                };
                Term::View {
                    proc,
                    name: n.as_str().into(),
                    index,
                }
            }
        })
    }

    fn resolve_lit(&self, l: &RawLit, scope: &Scope) -> PResult<Literal> {
        Ok(match l {
            RawLit::True => Literal::True,
            RawLit::False => Literal::False,
            RawLit::Fence(_) => Literal::FenceGuard,
            RawLit::Cmp {
                op,
                lhs,
                rhs,
                negated,
                ..
            } => {
                let a = self.resolve_term(lhs, scope)?;
                let b = self.resolve_term(rhs, scope)?;
                let lit = match *op {
                    "=" => Literal::cmp(CmpOp::Eq, a, b),
                    "<>" | "!=" => Literal::cmp(CmpOp::Ne, a, b),
                    "<" => Literal::cmp(CmpOp::Lt, a, b),
                    "<=" => Literal::cmp(CmpOp::Le, a, b),
                    ">" => Literal::cmp(CmpOp::Lt, b, a),
                    ">=" => Literal::cmp(CmpOp::Le, b, a),
                    _ => unreachable!("lexer only produces comparison symbols here"),
                };
                if *negated {
                    lit.negate().expect("comparisons can always be negated")
                } else {
                    lit
                }
            }
            RawLit::Forall { loc, .. } => {
                return Err(FrontendError::Invalid {
                    loc: *loc,
                    msg: "forall is only allowed at the top level of a transition guard".into(),
                })
            }
        })
    }
}

fn sort_of(env: &Env, name: &str, loc: Loc) -> PResult<Sort> {
    match name {
        "bool" => Ok(Sort::bool()),
        "int" => Ok(Sort::int()),
        "proc" => Err(FrontendError::Invalid {
            loc,
            msg: "process-valued state is not supported".into(),
        }),
        _ => env
            .sorts
            .get(name)
            .cloned()
            .ok_or_else(|| FrontendError::UnknownSort {
                loc,
                name: name.into(),
            }),
    }
}

/// Parses the text and resolves names, without the semantic restrictions
/// enforced by [`super::validate_system`].
pub fn parse_unvalidated(text: &str) -> Result<TransitionSystem, FrontendError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let raw = p.file()?;
    let eof = p.loc();

    let mut env = Env {
        sorts: BTreeMap::new(),
        ctors: BTreeMap::new(),
        symbols: BTreeMap::new(),
    };
    let mut taken: BTreeMap<String, ()> = BTreeMap::new();
    let mut claim = |n: &str, loc: Loc| -> PResult<()> {
        if ["bool", "int", "proc", "True", "False"].contains(&n)
            || taken.insert(n.into(), ()).is_some()
        {
            return Err(FrontendError::DuplicateName {
                loc,
                name: n.into(),
            });
        }
        Ok(())
    };
    let mut sorts = Vec::new();
    for (name, ctors, loc) in &raw.sorts {
        claim(name, *loc)?;
        for c in ctors {
            claim(c, *loc)?;
        }
        let refs: Vec<&str> = ctors.iter().map(String::as_str).collect();
        let s = Sort::enumeration(name, &refs).map_err(|_| FrontendError::DuplicateName {
            loc: *loc,
            name: name.clone(),
        })?;
        for c in ctors {
            env.ctors.insert(c.clone(), name.as_str().into());
        }
        env.sorts.insert(name.clone(), s.clone());
        sorts.push(s);
    }
    let (mut globals, mut arrays, mut weak_vars, mut weak_arrays) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (kind, name, sort, loc) in &raw.decls {
        claim(name, *loc)?;
        let d = Decl {
            name: name.as_str().into(),
            sort: sort_of(&env, sort, *loc)?,
            loc: *loc,
        };
        env.symbols.insert(name.clone(), *kind);
        match kind {
            DeclKind::Global => globals.push(d),
            DeclKind::Array => arrays.push(d),
            DeclKind::WeakVar => weak_vars.push(d),
            DeclKind::WeakArray => weak_arrays.push(d),
        }
    }

    let Some((jname, ibody, iloc)) = &raw.init else {
        return Err(FrontendError::Syntax {
            loc: eof,
            msg: "missing init clause".into(),
        });
    };
    if raw.unsafe_specs.is_empty() {
        return Err(FrontendError::Syntax {
            loc: eof,
            msg: "missing unsafe clause".into(),
        });
    }
    let scope = Scope {
        procs: vec![(jname.as_str(), InitSpec::VAR)],
    };
    let init = InitSpec {
        var: jname.as_str().into(),
        body: ibody
            .iter()
            .map(|l| env.resolve_lit(l, &scope))
            .collect::<PResult<_>>()?,
        loc: *iloc,
    };

    let mut unsafe_specs = Vec::new();
    for (params, body, loc) in &raw.unsafe_specs {
        check_distinct(params, *loc)?;
        let scope = Scope {
            procs: params
                .iter()
                .enumerate()
                .map(|(n, s)| (s.as_str(), ProcVar(n as u32 + 1)))
                .collect(),
        };
        unsafe_specs.push(UnsafeSpec {
            params: params.iter().map(|s| Name::from(s.as_str())).collect(),
            body: body
                .iter()
                .map(|l| env.resolve_lit(l, &scope))
                .collect::<PResult<_>>()?,
            loc: *loc,
        });
    }

    let mut transitions: Vec<TransitionSpec> = Vec::new();
    for rt in &raw.transitions {
        if transitions.iter().any(|t| *t.name == *rt.name) {
            return Err(FrontendError::DuplicateName {
                loc: rt.loc,
                name: rt.name.clone(),
            });
        }
        if rt.params.is_empty() {
            return Err(FrontendError::Syntax {
                loc: rt.loc,
                msg: "a transition needs an acting process".into(),
            });
        }
        check_distinct(&rt.params, rt.loc)?;
        let mut scope = Scope {
            procs: rt
                .params
                .iter()
                .enumerate()
                .map(|(n, s)| (s.as_str(), ProcVar(n as u32)))
                .collect(),
        };
        let mut guard = Vec::new();
        let mut foralls = Vec::new();
        for l in &rt.guard {
            match l {
                RawLit::Forall {
                    var,
                    except,
                    body,
                    loc,
                } => {
                    let pv = ProcVar((rt.params.len() + foralls.len()) as u32);
                    let except = except
                        .iter()
                        .map(|e| {
                            scope.proc(e).ok_or_else(|| FrontendError::UnknownName {
                                loc: *loc,
                                name: e.clone(),
                            })
                        })
                        .collect::<PResult<Vec<_>>>()?;
                    scope.procs.push((var.as_str(), pv));
                    let body = body
                        .iter()
                        .map(|b| env.resolve_lit(b, &scope))
                        .collect::<PResult<_>>();
                    scope.procs.pop();
                    foralls.push(ForallGuard {
                        var_name: var.as_str().into(),
                        var: pv,
                        except,
                        body: body?,
                    });
                }
                other => guard.push(env.resolve_lit(other, &scope)?),
            }
        }
        let mut updates = Vec::new();
        for (target, value, loc) in &rt.updates {
            let target = match env.resolve_term(target, &scope)? {
                Term::Array { name, index } => Target::Regular { name, index },
                Term::Weak { name, index } => Target::Weak { name, index },
                other => {
                    return Err(FrontendError::Invalid {
                        loc: *loc,
                        msg: format!("`{other}` cannot be assigned"),
                    })
                }
            };
            updates.push(Update {
                target,
                value: env.resolve_term(value, &scope)?,
            });
        }
        transitions.push(TransitionSpec {
            name: rt.name.as_str().into(),
            params: rt.params.iter().map(|s| Name::from(s.as_str())).collect(),
            guard,
            foralls,
            updates,
            loc: rt.loc,
            weak_vars_written: Default::default(),
            weak_arrays_written: Default::default(),
        });
    }

    Ok(TransitionSystem {
        sorts,
        globals,
        arrays,
        weak_vars,
        weak_arrays,
        init,
        unsafe_specs,
        transitions,
    })
}

fn check_distinct(params: &[String], loc: Loc) -> PResult<()> {
    for (n, p) in params.iter().enumerate() {
        if params[..n].contains(p) {
            return Err(FrontendError::DuplicateName {
                loc,
                name: p.clone(),
            });
        }
    }
    Ok(())
}
