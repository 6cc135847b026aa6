//! Recursive-descent parser for the surface language.
//!
//! Grammar sketch (see the README for the full table):
//!   module := { decl }
//!   decl   := "data" NAME ":" expr "where" { "|" NAME ":" expr }
//!           | NAME ":" expr          (signature)
//!           | NAME "=" expr          (body; must follow its signature)
//!   expr   := "\" binder+ "." expr | arrow ("::" expr)*
//!   arrow  := "(" NAME ":" expr ")" "->" arrow | eq ("->" arrow)?
//!   eq     := app ("~=[" expr "]" app)?
//!   app    := atom+   (with `subst` taking exactly six atoms)
//!   atom   := NAME | literals | "?"[level] | "(" expr ")"
//!           | "if" expr "then" expr "else" expr
//!           | "ind" NAME "." expr "{" { "|" NAME binder* "=>" expr } "}"
//!
//! Numeric literals are sugar: `3` is `suc (suc (suc zero))`, and a decimal
//! like `3.25` is `mkF 325 2` (mantissa and scale). They refer to whatever
//! `zero`/`suc`/`mkF` names are in scope.

use std::rc::Rc;

use grind_core::surface::{DataDecl, Decl, DefDecl, Span, Surface, SurfaceBranch, SurfaceKind};
use grind_core::term::{Level, Name};

use crate::lexer::{lex, LexError, Tok, Token};

#[derive(Debug, Clone)]
pub struct ParseError {
    pub msg: String,
    pub at: usize,
    pub expected: Vec<String>,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "parse error at byte {}: {}", self.at, self.msg)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> ParseError {
        ParseError {
            msg: e.msg,
            at: e.at,
            expected: vec![],
        }
    }
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    scope: Vec<String>,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            scope: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> usize {
        self.toks[self.pos].start
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<Token, ParseError> {
        if self.peek() == tok {
            Ok(self.next())
        } else {
            Err(self.err(format!("found `{}`", self.peek()), vec![what.to_string()]))
        }
    }

    fn err(&self, msg: String, expected: Vec<String>) -> ParseError {
        ParseError {
            msg,
            at: self.here(),
            expected,
        }
    }

    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Name(s) if s != "=" => {
                self.next();
                Ok(s)
            }
            other => Err(self.err(format!("found `{other}`"), vec!["identifier".into()])),
        }
    }

    fn resolve(&self, name: &str, start: usize, end: usize) -> Surface {
        let kind = match self.scope.iter().rev().position(|b| b == name) {
            Some(i) => SurfaceKind::Var(i),
            None => SurfaceKind::Global(Rc::from(name)),
        };
        Surface::new(kind, Span::new(start, end))
    }

    // ---------- expressions ----------

    pub fn expr(&mut self) -> Result<Surface, ParseError> {
        let start = self.here();
        if *self.peek() == Tok::Lambda {
            self.next();
            let mut binders = Vec::new();
            while let Tok::Name(_) = self.peek() {
                binders.push(self.name()?);
            }
            if binders.is_empty() {
                return Err(self.err("lambda needs at least one binder".into(), vec![]));
            }
            self.expect(&Tok::Dot, "`.`")?;
            for b in &binders {
                self.scope.push(b.clone());
            }
            let body = self.expr()?;
            let end = body.span.end;
            let mut out = body;
            for b in binders.iter().rev() {
                self.scope.pop();
                out = Surface::new(
                    SurfaceKind::Lam(Name::named(b.as_str()), Box::new(out)),
                    Span::new(start, end),
                );
            }
            return Ok(out);
        }
        let mut lhs = self.arrow()?;
        while *self.peek() == Tok::DoubleColon {
            self.next();
            let ty = self.arrow()?;
            let span = Span::new(lhs.span.start, ty.span.end);
            lhs = Surface::new(SurfaceKind::Ascr(Box::new(lhs), Box::new(ty)), span);
        }
        Ok(lhs)
    }

    fn arrow(&mut self) -> Result<Surface, ParseError> {
        let start = self.here();
        // Dependent domain: "(" NAME ":" ...
        if *self.peek() == Tok::LParen {
            if let (Tok::Name(_), true) = (self.peek2(), self.is_dep_domain()) {
                self.next(); // (
                let binder = self.name()?;
                self.expect(&Tok::Colon, "`:`")?;
                let dom = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                self.expect(&Tok::Arrow, "`->`")?;
                self.scope.push(binder.clone());
                let cod = self.arrow()?;
                self.scope.pop();
                let span = Span::new(start, cod.span.end);
                return Ok(Surface::new(
                    SurfaceKind::Pi(Name::named(binder.as_str()), Box::new(dom), Box::new(cod)),
                    span,
                ));
            }
        }
        let lhs = self.eq_expr()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            // Non-dependent arrow: shift-free codomain needs a dummy binder.
            self.scope.push(String::from("\u{0}anon"));
            let cod = self.arrow()?;
            self.scope.pop();
            let span = Span::new(start, cod.span.end);
            return Ok(Surface::new(
                SurfaceKind::Pi(Name(None), Box::new(lhs), Box::new(cod)),
                span,
            ));
        }
        Ok(lhs)
    }

    /// Two-token lookahead: `(` NAME `:` starts a dependent domain.
    fn is_dep_domain(&self) -> bool {
        matches!(self.peek(), Tok::LParen)
            && matches!(self.peek2(), Tok::Name(_))
            && matches!(
                self.toks.get(self.pos + 2).map(|t| &t.tok),
                Some(Tok::Colon)
            )
    }

    fn eq_expr(&mut self) -> Result<Surface, ParseError> {
        let lhs = self.app_expr()?;
        if *self.peek() == Tok::EqIn {
            self.next();
            let ty = self.expr()?;
            self.expect(&Tok::RBracket, "`]`")?;
            let rhs = self.app_expr()?;
            let span = Span::new(lhs.span.start, rhs.span.end);
            return Ok(Surface::new(
                SurfaceKind::Eq(Box::new(lhs), Box::new(ty), Box::new(rhs)),
                span,
            ));
        }
        Ok(lhs)
    }

    fn app_expr(&mut self) -> Result<Surface, ParseError> {
        if *self.peek() == Tok::KwSubst {
            let start = self.here();
            self.next();
            let mut parts = Vec::with_capacity(6);
            for _ in 0..6 {
                parts.push(self.atom()?);
            }
            let end = parts[5].span.end;
            let boxed: [Surface; 6] = [
                parts[0].clone(),
                parts[1].clone(),
                parts[2].clone(),
                parts[3].clone(),
                parts[4].clone(),
                parts[5].clone(),
            ];
            return Ok(Surface::new(
                SurfaceKind::Subst(Box::new(boxed)),
                Span::new(start, end),
            ));
        }
        let mut lhs = self.atom()?;
        loop {
            match self.peek() {
                Tok::Name(n) if n == "=" => break,
                // A name followed by `:` or `=` starts the next declaration,
                // not an application argument.
                Tok::Name(_)
                    if matches!(self.peek2(), Tok::Colon)
                        || matches!(self.peek2(), Tok::Name(n2) if n2 == "=") =>
                {
                    break
                }
                Tok::Name(_)
                | Tok::TypeLit(_)
                | Tok::Nat(_)
                | Tok::Dec(..)
                | Tok::Unknown(_)
                | Tok::LParen
                | Tok::KwBool
                | Tok::KwTrue
                | Tok::KwFalse
                | Tok::KwRefl => {
                    let arg = self.atom()?;
                    let span = Span::new(lhs.span.start, arg.span.end);
                    lhs = Surface::new(
                        SurfaceKind::App(Box::new(lhs), Box::new(arg)),
                        span,
                    );
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn nat_literal(&self, n: u64, span: Span) -> Surface {
        let mut t = self.resolve("zero", span.start, span.end);
        for _ in 0..n {
            let suc = self.resolve("suc", span.start, span.end);
            t = Surface::new(SurfaceKind::App(Box::new(suc), Box::new(t)), span);
        }
        t
    }

    fn atom(&mut self) -> Result<Surface, ParseError> {
        let Token { tok, start, end } = self.next();
        let span = Span::new(start, end);
        match tok {
            Tok::Name(n) if n != "=" => Ok(self.resolve(&n, start, end)),
            Tok::TypeLit(l) => Ok(Surface::new(SurfaceKind::Type(Level(l)), span)),
            Tok::KwBool => Ok(Surface::new(SurfaceKind::Bool, span)),
            Tok::KwTrue => Ok(Surface::new(SurfaceKind::True, span)),
            Tok::KwFalse => Ok(Surface::new(SurfaceKind::False, span)),
            Tok::KwRefl => Ok(Surface::new(SurfaceKind::Refl, span)),
            Tok::Unknown(l) => Ok(Surface::new(
                SurfaceKind::Unknown(l.map(Level)),
                span,
            )),
            Tok::Nat(n) => Ok(self.nat_literal(n, span)),
            Tok::Dec(m, s) => {
                // mantissa/scale encoding through the in-scope mkF.
                let mk = self.resolve("mkF", start, end);
                let mant = self.nat_literal(m, span);
                let scale = self.nat_literal(s as u64, span);
                let a = Surface::new(SurfaceKind::App(Box::new(mk), Box::new(mant)), span);
                Ok(Surface::new(
                    SurfaceKind::App(Box::new(a), Box::new(scale)),
                    span,
                ))
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::KwIf => {
                let c = self.expr()?;
                self.expect(&Tok::KwThen, "`then`")?;
                let t = self.expr()?;
                self.expect(&Tok::KwElse, "`else`")?;
                let e = self.expr()?;
                let span = Span::new(start, e.span.end);
                Ok(Surface::new(
                    SurfaceKind::If(Box::new(c), Box::new(t), Box::new(e)),
                    span,
                ))
            }
            Tok::KwInd => {
                let self_name = self.name()?;
                self.expect(&Tok::Dot, "`.`")?;
                let scrut = self.expr()?;
                self.expect(&Tok::LBrace, "`{`")?;
                let mut branches = Vec::new();
                while *self.peek() == Tok::Pipe {
                    self.next();
                    let ctor = self.name()?;
                    let mut binders = Vec::new();
                    while let Tok::Name(n) = self.peek() {
                        if n == "=" {
                            break;
                        }
                        binders.push(self.name()?);
                    }
                    self.expect(&Tok::FatArrow, "`=>`")?;
                    self.scope.push(self_name.clone());
                    for b in &binders {
                        self.scope.push(b.clone());
                    }
                    let body = self.expr()?;
                    for _ in 0..binders.len() + 1 {
                        self.scope.pop();
                    }
                    branches.push(SurfaceBranch {
                        ctor: Rc::from(ctor.as_str()),
                        binders: binders
                            .iter()
                            .map(|b| Name::named(b.as_str()))
                            .collect(),
                        body,
                    });
                }
                let close = self.expect(&Tok::RBrace, "`}`")?;
                Ok(Surface::new(
                    SurfaceKind::Ind {
                        self_name: Name::named(self_name.as_str()),
                        scrut: Box::new(scrut),
                        branches,
                    },
                    Span::new(start, close.end),
                ))
            }
            other => Err(ParseError {
                msg: format!("unexpected `{other}`"),
                at: start,
                expected: vec!["an expression".into()],
            }),
        }
    }

    // ---------- declarations ----------

    pub fn module(&mut self) -> Result<Vec<Decl>, ParseError> {
        let mut out: Vec<Decl> = Vec::new();
        let mut pending_sig: Option<(String, Surface, usize)> = None;
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::KwData => {
                    if let Some((n, _, at)) = &pending_sig {
                        return Err(ParseError {
                            msg: format!("signature for `{n}` has no body"),
                            at: *at,
                            expected: vec![],
                        });
                    }
                    out.push(Decl::Data(self.data_decl()?));
                }
                Tok::Name(_) => {
                    let start = self.here();
                    let name = self.name()?;
                    match self.peek().clone() {
                        Tok::Colon => {
                            if let Some((n, _, at)) = &pending_sig {
                                return Err(ParseError {
                                    msg: format!("signature for `{n}` has no body"),
                                    at: *at,
                                    expected: vec![],
                                });
                            }
                            self.next();
                            let sig = self.expr()?;
                            pending_sig = Some((name, sig, start));
                        }
                        Tok::Name(eq) if eq == "=" => {
                            self.next();
                            let body = self.expr()?;
                            match pending_sig.take() {
                                Some((n, sig, at)) if n == name => {
                                    let end = body.span.end;
                                    out.push(Decl::Def(DefDecl {
                                        name: Rc::from(name.as_str()),
                                        sig,
                                        body,
                                        span: Span::new(at, end),
                                    }));
                                }
                                Some((n, _, _)) => {
                                    return Err(ParseError {
                                        msg: format!(
                                            "body for `{name}` but pending signature is `{n}`"
                                        ),
                                        at: start,
                                        expected: vec![],
                                    })
                                }
                                None => {
                                    return Err(ParseError {
                                        msg: format!("`{name} = ...` has no signature"),
                                        at: start,
                                        expected: vec![],
                                    })
                                }
                            }
                        }
                        other => {
                            return Err(ParseError {
                                msg: format!("unexpected `{other}` after `{name}`"),
                                at: self.here(),
                                expected: vec!["`:`".into(), "`=`".into()],
                            })
                        }
                    }
                }
                other => {
                    return Err(ParseError {
                        msg: format!("unexpected `{other}` at top level"),
                        at: self.here(),
                        expected: vec!["a declaration".into()],
                    })
                }
            }
        }
        if let Some((n, _, at)) = pending_sig {
            return Err(ParseError {
                msg: format!("signature for `{n}` has no body"),
                at,
                expected: vec![],
            });
        }
        Ok(out)
    }

    fn data_decl(&mut self) -> Result<DataDecl, ParseError> {
        let start = self.here();
        self.expect(&Tok::KwData, "`data`")?;
        let name = self.name()?;
        self.expect(&Tok::Colon, "`:`")?;
        let arity = self.expr()?;
        self.expect(&Tok::KwWhere, "`where`")?;
        // Split the arity into a telescope and the final universe.
        let mut telescope: Vec<(Name, Surface)> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        let mut cur = arity;
        let level = loop {
            match cur.kind {
                SurfaceKind::Pi(n, dom, cod) => {
                    names.push(n.text().to_string());
                    telescope.push((n, *dom));
                    cur = *cod;
                }
                SurfaceKind::Type(l) => break l,
                _ => {
                    return Err(ParseError {
                        msg: "a data arity must be a telescope ending in a universe".into(),
                        at: cur.span.start,
                        expected: vec![],
                    })
                }
            }
        };
        // Constructor types see the telescope binders by name.
        let mut ctors = Vec::new();
        while *self.peek() == Tok::Pipe {
            self.next();
            let cname = self.name()?;
            self.expect(&Tok::Colon, "`:`")?;
            for n in &names {
                self.scope.push(n.clone());
            }
            let cty = self.expr()?;
            for _ in &names {
                self.scope.pop();
            }
            ctors.push((Rc::from(cname.as_str()), cty));
        }
        let end = self.toks[self.pos.saturating_sub(1)].end;
        Ok(DataDecl {
            name: Rc::from(name.as_str()),
            telescope,
            level,
            ctors,
            span: Span::new(start, end),
        })
    }
}

/// Parse a whole module.
pub fn parse_module(src: &str) -> Result<Vec<Decl>, ParseError> {
    let mut p = Parser::new(src)?;
    p.module()
}

/// Parse a single expression.
pub fn parse_expr(src: &str) -> Result<Surface, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(ParseError {
            msg: format!("trailing input starting with `{}`", p.peek()),
            at: p.here(),
            expected: vec!["end of input".into()],
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pi_chain() {
        // "id : (X : Type0) -> X -> X" parses as an ascribed Pi chain.
        let decls = parse_module("id : (X : Type0) -> X -> X\nid = \\X x. x").unwrap();
        assert_eq!(decls.len(), 1);
        match &decls[0] {
            Decl::Def(d) => {
                assert_eq!(&*d.name, "id");
                assert!(matches!(d.sig.kind, SurfaceKind::Pi(..)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn parses_unknown_levels() {
        let e = parse_expr("?1").unwrap();
        assert_eq!(e.kind, SurfaceKind::Unknown(Some(Level(1))));
        let e = parse_expr("?").unwrap();
        assert_eq!(e.kind, SurfaceKind::Unknown(None));
    }

    #[test]
    fn parses_vec_declaration() {
        let src = "data Nat : Type0 where | zero : Nat | suc : Nat -> Nat\n\
                   data Vec : (X : Type0) -> (n : Nat) -> Type0 where\n\
                   | Nil : Vec X zero\n\
                   | Cons : (m : Nat) -> X -> Vec X m -> Vec X (suc m)";
        let decls = parse_module(src).unwrap();
        assert_eq!(decls.len(), 2);
        match &decls[1] {
            Decl::Data(d) => {
                assert_eq!(&*d.name, "Vec");
                assert_eq!(d.telescope.len(), 2);
                assert_eq!(d.ctors.len(), 2);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn numeric_sugar() {
        let e = parse_expr("2").unwrap();
        // suc (suc zero)
        match &e.kind {
            SurfaceKind::App(f, _) => match &f.kind {
                SurfaceKind::Global(n) => assert_eq!(&**n, "suc"),
                _ => panic!(),
            },
            _ => panic!(),
        }
    }
}
