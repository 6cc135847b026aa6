//! Human-readable emission of the generated model, in a small dependently
//! typed notation, plus a parser for the same notation so emitted modules
//! round-trip. Constructors print qualified (`Ind.Ctor`) since names repeat
//! across levels.

use std::fmt::Write as _;
use std::rc::Rc;

use crate::term::{Level, Name};

use super::term::{Clause, Pat, Prelude, StirCtor, StirDef, StirInductive, StirTerm};

// ---------- printing ----------

struct Pr {
    names: Vec<String>,
}

impl Pr {
    fn fresh(&self, hint: &Name) -> String {
        let base = match &hint.0 {
            Some(s) => s.to_string(),
            None => "x".into(),
        };
        if !self.names.contains(&base) {
            return base;
        }
        let mut i = 1;
        loop {
            let c = format!("{base}{i}");
            if !self.names.contains(&c) {
                return c;
            }
            i += 1;
        }
    }

    fn term(&mut self, out: &mut String, t: &StirTerm, prec: u8) {
        match t {
            StirTerm::Sort(l) => {
                let _ = write!(out, "Type{}", l.0);
            }
            StirTerm::Var(i) => {
                if *i < self.names.len() {
                    out.push_str(&self.names[self.names.len() - 1 - i]);
                } else {
                    let _ = write!(out, "!{i}");
                }
            }
            StirTerm::Const(n) => out.push_str(n),
            StirTerm::Pi(n, a, b) => {
                if prec > 0 {
                    out.push('(');
                }
                let name = self.fresh(n);
                out.push('(');
                out.push_str(&name);
                out.push_str(" : ");
                self.term(out, a, 0);
                out.push_str(") -> ");
                self.names.push(name);
                self.term(out, b, 0);
                self.names.pop();
                if prec > 0 {
                    out.push(')');
                }
            }
            StirTerm::Lam(n, ann, b) => {
                if prec > 0 {
                    out.push('(');
                }
                let name = self.fresh(n);
                out.push('\\');
                out.push_str(&name);
                if let Some(a) = ann {
                    out.push_str(" : ");
                    self.term(out, a, 1);
                }
                out.push_str(". ");
                self.names.push(name);
                self.term(out, b, 0);
                self.names.pop();
                if prec > 0 {
                    out.push(')');
                }
            }
            StirTerm::App(f, a) => {
                if prec > 1 {
                    out.push('(');
                }
                self.term(out, f, 1);
                out.push(' ');
                self.term(out, a, 2);
                if prec > 1 {
                    out.push(')');
                }
            }
            StirTerm::Ctor { ind, ctor, args } => {
                if prec > 1 && !args.is_empty() {
                    out.push('(');
                }
                let _ = write!(out, "{ind}.{ctor}");
                for a in args {
                    out.push(' ');
                    self.term(out, a, 2);
                }
                if prec > 1 && !args.is_empty() {
                    out.push(')');
                }
            }
            StirTerm::IndType { ind, args } => {
                if prec > 1 && !args.is_empty() {
                    out.push('(');
                }
                out.push_str(ind);
                for a in args {
                    out.push(' ');
                    self.term(out, a, 2);
                }
                if prec > 1 && !args.is_empty() {
                    out.push(')');
                }
            }
        }
    }

    fn pat(&mut self, out: &mut String, p: &Pat) -> Vec<String> {
        match p {
            Pat::Var(n) => {
                let name = self.fresh(n);
                out.push_str(&name);
                self.names.push(name.clone());
                vec![name]
            }
            Pat::Ctor { ind, ctor, args } => {
                let mut bound = Vec::new();
                if args.is_empty() {
                    let _ = write!(out, "{ind}.{ctor}");
                } else {
                    let _ = write!(out, "({ind}.{ctor}");
                    for a in args {
                        out.push(' ');
                        bound.extend(self.pat(out, a));
                    }
                    out.push(')');
                }
                bound
            }
        }
    }
}

/// Deterministic textual form of the whole model plus an optional term.
pub fn emit_readable(prelude: &Prelude, main: Option<&StirTerm>) -> String {
    let mut out = String::new();
    for ind in &prelude.inductives {
        let mut p = Pr { names: vec![] };
        let _ = write!(out, "data {} : Type{}", ind.name, ind.level.0);
        for (n, ty) in &ind.params {
            let name = p.fresh(n);
            out.push_str(" (");
            out.push_str(&name);
            out.push_str(" : ");
            p.term(&mut out, ty, 0);
            out.push(')');
            p.names.push(name);
        }
        out.push_str(" where\n");
        for (ci, c) in ind.ctors.iter().enumerate() {
            let mut p2 = Pr {
                names: p.names.clone(),
            };
            let _ = write!(out, "| {}.{ci} {} :", ind.name, c.name);
            let mut sep = String::new();
            for (n, ty) in &c.fields {
                let name = p2.fresh(n);
                let _ = write!(sep, " ({name} : ");
                p2.term(&mut sep, ty, 0);
                sep.push(')');
                p2.names.push(name);
            }
            out.push_str(&sep);
            out.push('\n');
        }
    }
    for def in &prelude.defs {
        let mut p = Pr { names: vec![] };
        let _ = write!(out, "def {} [{}", def.name, def.arity);
        for r in &def.rec_args {
            let _ = write!(out, " {r}");
        }
        out.push_str("] : ");
        p.term(&mut out, &def.ty, 0);
        out.push_str(" where\n");
        for clause in &def.clauses {
            let mut p2 = Pr { names: vec![] };
            out.push_str("| ");
            out.push_str(&def.name);
            for pat in &clause.pats {
                out.push(' ');
                p2.pat(&mut out, pat);
            }
            if let Some(g) = &clause.guard {
                out.push_str(" when ");
                p2.term(&mut out, g, 2);
            }
            out.push_str(" = ");
            p2.term(&mut out, &clause.rhs, 0);
            out.push('\n');
        }
    }
    if let Some(t) = main {
        let mut p = Pr { names: vec![] };
        out.push_str("term ");
        p.term(&mut out, t, 0);
        out.push('\n');
    }
    out
}

// ---------- parsing ----------

#[derive(Debug, Clone, PartialEq)]
pub struct EmitParseError {
    pub msg: String,
    pub at: usize,
}

struct Toks {
    toks: Vec<String>,
    pos: usize,
}

fn tokenize(src: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            '(' | ')' | '\\' | '|' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            ':' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(":".to_string());
            }
            '-' if chars.peek() == Some(&'>') => {
                chars.next();
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push("->".to_string());
            }
            '=' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push("=".to_string());
            }
            '.' => {
                // Qualified constructor names keep the dot inside the token
                // when it glues two identifier parts; a lone dot (lambda)
                // separates.
                if cur.is_empty() {
                    out.push(".".to_string());
                } else if chars.peek().map(|c| c.is_alphanumeric()) == Some(true) {
                    cur.push('.');
                } else {
                    out.push(std::mem::take(&mut cur));
                    out.push(".".to_string());
                }
            }
            '[' | ']' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            other => cur.push(other),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

impl Toks {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|s| s.as_str())
    }
    fn next(&mut self) -> Option<String> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }
    fn expect(&mut self, s: &str) -> Result<(), EmitParseError> {
        match self.next() {
            Some(t) if t == s => Ok(()),
            other => Err(EmitParseError {
                msg: format!("expected `{s}`, found {other:?}"),
                at: self.pos,
            }),
        }
    }
}

struct EParser<'p> {
    toks: Toks,
    scope: Vec<String>,
    prelude: &'p Prelude,
    shells: &'p [Rc<str>],
}

impl<'p> EParser<'p> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, EmitParseError> {
        Err(EmitParseError {
            msg: msg.into(),
            at: self.toks.pos,
        })
    }

    fn resolve_ctor(&self, word: &str) -> Option<(Rc<str>, usize)> {
        let (ind, rest) = word.split_once('.')?;
        let ci: usize = rest.parse().ok().or_else(|| {
            self.prelude
                .inductive(ind)
                .and_then(|i| i.ctors.iter().position(|c| &*c.name == rest))
        })?;
        Some((Rc::from(ind), ci))
    }

    fn atom(&mut self) -> Result<StirTerm, EmitParseError> {
        let tok = match self.toks.next() {
            Some(t) => t,
            None => return self.err("unexpected end of input"),
        };
        match tok.as_str() {
            "(" => {
                let t = self.term()?;
                self.toks.expect(")")?;
                Ok(t)
            }
            "\\" => {
                let name = self
                    .toks
                    .next()
                    .ok_or_else(|| EmitParseError {
                        msg: "lambda binder".into(),
                        at: self.toks.pos,
                    })?;
                let ann = if self.toks.peek() == Some(":") {
                    self.toks.next();
                    Some(self.app_term()?.rc())
                } else {
                    None
                };
                self.toks.expect(".")?;
                self.scope.push(name.clone());
                let b = self.term()?;
                self.scope.pop();
                Ok(StirTerm::Lam(Name::named(name.as_str()), ann, b.rc()))
            }
            w if w.starts_with("Type")
                && w[4..].chars().all(|c| c.is_ascii_digit())
                && w.len() > 4 =>
            {
                Ok(StirTerm::Sort(Level(w[4..].parse().unwrap())))
            }
            w => {
                if let Some(i) = self.scope.iter().rev().position(|b| b == w) {
                    return Ok(StirTerm::Var(i));
                }
                if w.contains('.') {
                    if let Some((ind, ci)) = self.resolve_ctor(w) {
                        return Ok(StirTerm::Ctor {
                            ind,
                            ctor: ci,
                            args: vec![],
                        });
                    }
                }
                if self.prelude.inductive(w).is_some() || self.shells.iter().any(|s| &**s == w)
                {
                    return Ok(StirTerm::IndType {
                        ind: Rc::from(w),
                        args: vec![],
                    });
                }
                Ok(StirTerm::Const(Rc::from(w)))
            }
        }
    }

    fn app_term(&mut self) -> Result<StirTerm, EmitParseError> {
        let mut t = self.atom()?;
        loop {
            match self.toks.peek() {
                Some("(") | Some("\\") => {}
                Some(w)
                    if w != ")"
                        && w != "->"
                        && w != "="
                        && w != ":"
                        && w != "."
                        && w != "|"
                        && w != "when"
                        && w != "data"
                        && w != "def"
                        && w != "where"
                        && w != "term"
                        && w != "]" => {}
                _ => break,
            }
            let a = self.atom()?;
            t = match t {
                StirTerm::Ctor { ind, ctor, mut args } => {
                    args.push(a);
                    StirTerm::Ctor { ind, ctor, args }
                }
                StirTerm::IndType { ind, mut args } => {
                    args.push(a);
                    StirTerm::IndType { ind, args }
                }
                f => StirTerm::app(f, a),
            };
        }
        Ok(t)
    }

    fn term(&mut self) -> Result<StirTerm, EmitParseError> {
        // Dependent Pi: "(" NAME ":" ... ")" "->"
        if self.toks.peek() == Some("(") {
            let save = self.toks.pos;
            self.toks.next();
            let name = self.toks.next();
            let colon = self.toks.peek() == Some(":");
            if let (Some(n), true) = (name, colon) {
                self.toks.next();
                let dom = self.term()?;
                self.toks.expect(")")?;
                if self.toks.peek() == Some("->") {
                    self.toks.next();
                    self.scope.push(n.clone());
                    let cod = self.term()?;
                    self.scope.pop();
                    return Ok(StirTerm::Pi(
                        Name::named(n.as_str()),
                        dom.rc(),
                        cod.rc(),
                    ));
                }
                // Parenthesized annotated thing that is not a Pi: treat the
                // contents as an application of a variable (rare); rewind.
                self.toks.pos = save;
            } else {
                self.toks.pos = save;
            }
        }
        let lhs = self.app_term()?;
        if self.toks.peek() == Some("->") {
            self.toks.next();
            self.scope.push("\u{0}anon".into());
            let cod = self.term()?;
            self.scope.pop();
            return Ok(StirTerm::Pi(Name(None), lhs.rc(), cod.rc()));
        }
        Ok(lhs)
    }

    fn pattern(&mut self) -> Result<Pat, EmitParseError> {
        match self.toks.next() {
            Some(t) if t == "(" => {
                let head = self
                    .toks
                    .next()
                    .ok_or_else(|| EmitParseError {
                        msg: "pattern head".into(),
                        at: self.toks.pos,
                    })?;
                let (ind, ci) = self
                    .resolve_ctor(&head)
                    .ok_or_else(|| EmitParseError {
                        msg: format!("unknown constructor pattern {head}"),
                        at: self.toks.pos,
                    })?;
                let mut args = Vec::new();
                while self.toks.peek() != Some(")") {
                    args.push(self.pattern()?);
                }
                self.toks.expect(")")?;
                Ok(Pat::Ctor { ind, ctor: ci, args })
            }
            Some(w) if w.contains('.') => {
                let (ind, ci) = self.resolve_ctor(&w).ok_or_else(|| EmitParseError {
                    msg: format!("unknown constructor pattern {w}"),
                    at: self.toks.pos,
                })?;
                Ok(Pat::Ctor {
                    ind,
                    ctor: ci,
                    args: vec![],
                })
            }
            Some(w) => {
                self.scope.push(w.clone());
                Ok(Pat::Var(Name::named(w.as_str())))
            }
            None => self.err("pattern expected"),
        }
    }
}

/// Parse the emitted notation back into a prelude plus optional term.
pub fn parse_readable(src: &str) -> Result<(Prelude, Option<StirTerm>), EmitParseError> {
    let mut prelude = Prelude::default();
    let mut main = None;
    let all_toks = tokenize(src);
    // Pre-register inductive names so self- и forward references resolve.
    for w in all_toks.windows(2) {
        if w[0] == "data" {
            prelude.inductives.push(StirInductive {
                name: Rc::from(w[1].as_str()),
                level: Level(0),
                params: vec![],
                ctors: vec![],
            });
        }
    }
    let mut shell_names: Vec<Rc<str>> =
        prelude.inductives.iter().map(|i| i.name.clone()).collect();
    prelude.inductives.clear();
    let mut toks = Toks {
        toks: all_toks,
        pos: 0,
    };
    loop {
        let head = match toks.peek() {
            None => break,
            Some(h) => h.to_string(),
        };
        match head.as_str() {
            "data" => {
                toks.next();
                let name = toks.next().unwrap_or_default();
                toks.expect(":")?;
                let sort = toks.next().unwrap_or_default();
                let level = sort
                    .strip_prefix("Type")
                    .and_then(|s| s.parse().ok())
                    .ok_or(EmitParseError {
                        msg: "data sort".into(),
                        at: toks.pos,
                    })?;
                let mut params = Vec::new();
                {
                    let mut p = EParser {
                        toks,
                        scope: vec![],
                        prelude: &prelude,
                        shells: &shell_names,
                    };
                    while p.toks.peek() == Some("(") {
                        p.toks.next();
                        let n = p.toks.next().unwrap_or_default();
                        p.toks.expect(":")?;
                        let ty = p.term()?;
                        p.toks.expect(")")?;
                        p.scope.push(n.clone());
                        params.push((Name::named(n.as_str()), ty));
                    }
                    p.toks.expect("where")?;
                    let param_scope = p.scope.clone();
                    let mut ctors: Vec<StirCtor> = Vec::new();
                    while p.toks.peek() == Some("|") {
                        p.toks.next();
                        let label = p.toks.next().unwrap_or_default();
                        let cname = label
                            .split_once('.')
                            .map(|(_, r)| r)
                            .unwrap_or(&label);
                        // Skip the display index token and the colon.
                        let cname = cname.to_string();
                        let real_name = p.toks.next().unwrap_or_default();
                        p.toks.expect(":")?;
                        let _ = cname;
                        p.scope = param_scope.clone();
                        let mut fields = Vec::new();
                        while p.toks.peek() == Some("(") {
                            p.toks.next();
                            let n = p.toks.next().unwrap_or_default();
                            p.toks.expect(":")?;
                            let ty = p.term()?;
                            p.toks.expect(")")?;
                            p.scope.push(n.clone());
                            fields.push((Name::named(n.as_str()), ty));
                        }
                        ctors.push(StirCtor {
                            name: Rc::from(real_name.as_str()),
                            fields,
                        });
                    }
                    toks = p.toks;
                    shell_names.retain(|n| &**n != name.as_str());
                    prelude.inductives.push(StirInductive {
                        name: Rc::from(name.as_str()),
                        level: Level(level),
                        params,
                        ctors,
                    });
                }
            }
            "def" => {
                toks.next();
                let name = toks.next().unwrap_or_default();
                toks.expect("[")?;
                let arity: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or(EmitParseError {
                        msg: "def arity".into(),
                        at: toks.pos,
                    })?;
                let mut rec_args = Vec::new();
                while toks.peek() != Some("]") {
                    let r: usize = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or(EmitParseError {
                            msg: "rec arg".into(),
                            at: toks.pos,
                        })?;
                    rec_args.push(r);
                }
                toks.expect("]")?;
                toks.expect(":")?;
                let (ty, mut toks2) = {
                    let mut p = EParser {
                        toks,
                        scope: vec![],
                        prelude: &prelude,
                        shells: &shell_names,
                    };
                    let ty = p.term()?;
                    p.toks.expect("where")?;
                    (ty, p.toks)
                };
                let mut clauses = Vec::new();
                while toks2.peek() == Some("|") {
                    toks2.next();
                    // clause head repeats the def name
                    let _ = toks2.next();
                    let mut p = EParser {
                        toks: toks2,
                        scope: vec![],
                        prelude: &prelude,
                        shells: &shell_names,
                    };
                    let mut pats = Vec::new();
                    for _ in 0..arity {
                        pats.push(p.pattern()?);
                    }
                    let guard = if p.toks.peek() == Some("when") {
                        p.toks.next();
                        Some(p.app_term()?)
                    } else {
                        None
                    };
                    p.toks.expect("=")?;
                    let rhs = p.term()?;
                    toks2 = p.toks;
                    clauses.push(Clause { pats, guard, rhs });
                }
                toks = toks2;
                prelude.defs.push(StirDef {
                    name: Rc::from(name.as_str()),
                    ty,
                    arity,
                    clauses,
                    rec_args,
                    trusted_termination: false,
                });
            }
            "term" => {
                toks.next();
                let mut p = EParser {
                    toks,
                    scope: vec![],
                    prelude: &prelude,
                    shells: &shell_names,
                };
                main = Some(p.term()?);
                toks = p.toks;
            }
            other => {
                return Err(EmitParseError {
                    msg: format!("unexpected top-level token `{other}`"),
                    at: toks.pos,
                })
            }
        }
    }
    Ok((prelude, main))
}
