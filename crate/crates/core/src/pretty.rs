//! Plain-text printer for cast-calculus terms. Binder name hints are reused
//! when present and freshened on collision.

use std::fmt::Write;

use crate::term::{Name, Tag, Term, TypeTag};

struct Printer {
    names: Vec<String>,
}

impl Printer {
    fn fresh(&self, hint: &Name) -> String {
        let base = match &hint.0 {
            Some(s) => s.to_string(),
            None => "x".to_string(),
        };
        if base == "_" || !self.names.contains(&base) {
            return base;
        }
        let mut i = 1;
        loop {
            let cand = format!("{base}{i}");
            if !self.names.contains(&cand) {
                return cand;
            }
            i += 1;
        }
    }

    fn var(&self, i: usize) -> String {
        if i < self.names.len() {
            self.names[self.names.len() - 1 - i].clone()
        } else {
            format!("!{}", i - self.names.len())
        }
    }

    fn with<R>(&mut self, name: String, f: impl FnOnce(&mut Self) -> R) -> R {
        self.names.push(name);
        let r = f(self);
        self.names.pop();
        r
    }

    // prec: 0 = lowest (arrow/lambda), 1 = eq, 2 = application, 3 = atom
    fn term(&mut self, out: &mut String, t: &Term, prec: u8) {
        match t {
            Term::Type(l) => {
                let _ = write!(out, "Type{}", l.0);
            }
            Term::Var(i) => out.push_str(&self.var(*i)),
            Term::Bool => out.push_str("Bool"),
            Term::True => out.push_str("true"),
            Term::False => out.push_str("false"),
            Term::Pi(n, dom, cod) => {
                self.paren(out, prec > 0, |p, out| {
                    let name = p.fresh(n);
                    if n.0.is_some() {
                        out.push('(');
                        out.push_str(&name);
                        out.push_str(" : ");
                        p.term(out, dom, 0);
                        out.push_str(") -> ");
                    } else {
                        p.term(out, dom, 1);
                        out.push_str(" -> ");
                    }
                    p.with(name, |p| p.term(out, cod, 0));
                });
            }
            Term::Lam(n, ann, body) => {
                self.paren(out, prec > 0, |p, out| {
                    let name = p.fresh(n);
                    let _ = write!(out, "\\({name} : ");
                    p.term(out, ann, 0);
                    out.push_str("). ");
                    p.with(name, |p| p.term(out, body, 0));
                });
            }
            Term::App(f, a) => {
                self.paren(out, prec > 2, |p, out| {
                    p.term(out, f, 2);
                    out.push(' ');
                    p.term(out, a, 3);
                });
            }
            Term::If {
                ann,
                scrut,
                then_br,
                else_br,
            } => {
                self.paren(out, prec > 0, |p, out| {
                    out.push_str("if[");
                    p.term(out, ann, 0);
                    out.push_str("] ");
                    p.term(out, scrut, 3);
                    out.push_str(" then ");
                    p.term(out, then_br, 3);
                    out.push_str(" else ");
                    p.term(out, else_br, 3);
                });
            }
            Term::Unk(ty) => {
                out.push_str("?{");
                self.term(out, ty, 0);
                out.push('}');
            }
            Term::Err(ty) => {
                out.push_str("!err{");
                self.term(out, ty, 0);
                out.push('}');
            }
            Term::Cast { src, dst, body } => {
                out.push('<');
                self.term(out, dst, 0);
                out.push_str(" <= ");
                self.term(out, src, 0);
                out.push('>');
                self.term(out, body, 3);
            }
            Term::Tagged { tag, level, body } => {
                let _ = write!(out, "tag[{tag}@{}]", level.0);
                self.term(out, body, 3);
            }
            Term::Eq { lhs, ty, rhs } => {
                self.paren(out, prec > 1, |p, out| {
                    p.term(out, lhs, 2);
                    out.push_str(" ~=[");
                    p.term(out, ty, 0);
                    out.push_str("] ");
                    p.term(out, rhs, 2);
                });
            }
            Term::Refl { ev, lhs, rhs } => {
                out.push_str("refl{");
                self.term(out, ev, 0);
                out.push_str("}<");
                self.term(out, lhs, 0);
                out.push_str(", ");
                self.term(out, rhs, 0);
                out.push('>');
            }
            Term::Subst {
                ty,
                motive,
                from,
                to,
                body,
                eq,
            } => {
                self.paren(out, prec > 2, |p, out| {
                    out.push_str("subst");
                    for part in [ty, motive, from, to, body, eq] {
                        out.push(' ');
                        p.term(out, part, 3);
                    }
                });
            }
            Term::Meet { lhs, rhs, ty } => {
                self.paren(out, prec > 1, |p, out| {
                    p.term(out, lhs, 2);
                    out.push_str(" /\\[");
                    p.term(out, ty, 0);
                    out.push_str("] ");
                    p.term(out, rhs, 2);
                });
            }
            Term::TyCon { ind, args } => {
                if args.is_empty() {
                    out.push_str(ind);
                } else {
                    self.paren(out, prec > 2, |p, out| {
                        out.push_str(ind);
                        for a in args {
                            out.push(' ');
                            p.term(out, a, 3);
                        }
                    });
                }
            }
            Term::Ctor {
                ind,
                ctor,
                params,
                fields,
            } => {
                let label = format!("{ind}#{ctor}");
                if params.is_empty() && fields.is_empty() {
                    out.push_str(&label);
                } else {
                    self.paren(out, prec > 2, |p, out| {
                        out.push_str(&label);
                        out.push('[');
                        for (i, a) in params.iter().enumerate() {
                            if i > 0 {
                                out.push_str(", ");
                            }
                            p.term(out, a, 0);
                        }
                        out.push(']');
                        for a in fields {
                            out.push(' ');
                            p.term(out, a, 3);
                        }
                    });
                }
            }
            Term::Ind {
                ind,
                n_idx,
                motive,
                scrut,
                branches,
            } => {
                self.paren(out, prec > 0, |p, out| {
                    let _ = write!(out, "ind[{ind}] rec. ");
                    p.term(out, scrut, 3);
                    out.push_str(" {");
                    let mut motive_names: Vec<String> = Vec::new();
                    for i in 0..*n_idx {
                        motive_names.push(format!("i{i}"));
                    }
                    motive_names.push("z".to_string());
                    out.push_str(" motive ");
                    for n in &motive_names {
                        let _ = write!(out, "{n} ");
                    }
                    out.push_str("=> ");
                    for n in motive_names.clone() {
                        p.names.push(n);
                    }
                    p.term(out, motive, 0);
                    for _ in 0..motive_names.len() {
                        p.names.pop();
                    }
                    for (bi, b) in branches.iter().enumerate() {
                        let _ = write!(out, "; #{bi} rec ");
                        let mut bn = vec!["rec".to_string()];
                        for i in 0..b.n_fields {
                            let nm = format!("y{i}");
                            let _ = write!(out, "{nm} ");
                            bn.push(nm);
                        }
                        out.push_str("=> ");
                        for n in bn.iter() {
                            p.names.push(n.clone());
                        }
                        p.term(out, &b.body, 0);
                        for _ in 0..bn.len() {
                            p.names.pop();
                        }
                    }
                    out.push_str(" }");
                });
            }
        }
    }

    fn paren(&mut self, out: &mut String, wrap: bool, f: impl FnOnce(&mut Self, &mut String)) {
        if wrap {
            out.push('(');
            f(self, out);
            out.push(')');
        } else {
            f(self, out);
        }
    }
}

/// Render a closed term (or one whose free variables are reported as `!n`).
pub fn pretty(t: &Term) -> String {
    pretty_in(&[], t)
}

/// Render a term whose free variables take names from `scope`
/// (outermost first).
pub fn pretty_in(scope: &[String], t: &Term) -> String {
    let mut p = Printer {
        names: scope.to_vec(),
    };
    let mut out = String::new();
    p.term(&mut out, t, 0);
    out
}

/// A truncated single-line rendering for traces.
pub fn snippet(t: &Term, max: usize) -> String {
    let mut s = pretty(t);
    if s.len() > max {
        s.truncate(max.saturating_sub(1));
        s.push('…');
    }
    s
}

pub fn tag_name(t: &Tag) -> String {
    t.to_string()
}

pub fn type_tag_name(t: &TypeTag) -> String {
    t.to_string()
}
