//! Surface-language abstract syntax. Local binders are de Bruijn indices
//! (resolved by the parser); globals — definitions, type constructors, data
//! constructors — stay named until elaboration.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::term::{Level, Name};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub kind: SurfaceKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceBranch {
    pub ctor: Rc<str>,
    pub binders: Vec<Name>,
    pub body: Surface,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SurfaceKind {
    Type(Level),
    Var(usize),
    Global(Rc<str>),
    Ascr(Box<Surface>, Box<Surface>),
    Pi(Name, Box<Surface>, Box<Surface>),
    Lam(Name, Box<Surface>),
    App(Box<Surface>, Box<Surface>),
    Bool,
    True,
    False,
    If(Box<Surface>, Box<Surface>, Box<Surface>),
    /// `?` with an optional level ascription. The level is required only
    /// where it cannot be read off the checking type.
    Unknown(Option<Level>),
    /// `lhs ~=[ty] rhs`
    Eq(Box<Surface>, Box<Surface>, Box<Surface>),
    Refl,
    /// Saturated `subst ty motive from to body eq`.
    Subst(Box<[Surface; 6]>),
    /// `ind self. scrut { | Ctor binders => body ... }`
    Ind {
        self_name: Name,
        scrut: Box<Surface>,
        branches: Vec<SurfaceBranch>,
    },
}

impl Surface {
    pub fn new(kind: SurfaceKind, span: Span) -> Surface {
        Surface { kind, span }
    }

    pub fn bare(kind: SurfaceKind) -> Surface {
        Surface {
            kind,
            span: Span::default(),
        }
    }

    /// The sub-node at child index `i`, mirroring the order used by
    /// elaboration paths.
    pub fn child(&self, i: usize) -> Option<&Surface> {
        match (&self.kind, i) {
            (SurfaceKind::Ascr(a, _), 0) => Some(a),
            (SurfaceKind::Ascr(_, b), 1) => Some(b),
            (SurfaceKind::Pi(_, a, _), 0) => Some(a),
            (SurfaceKind::Pi(_, _, b), 1) => Some(b),
            (SurfaceKind::Lam(_, b), 0) => Some(b),
            (SurfaceKind::App(a, _), 0) => Some(a),
            (SurfaceKind::App(_, b), 1) => Some(b),
            (SurfaceKind::If(a, _, _), 0) => Some(a),
            (SurfaceKind::If(_, b, _), 1) => Some(b),
            (SurfaceKind::If(_, _, c), 2) => Some(c),
            (SurfaceKind::Eq(a, _, _), 0) => Some(a),
            (SurfaceKind::Eq(_, t, _), 1) => Some(t),
            (SurfaceKind::Eq(_, _, b), 2) => Some(b),
            (SurfaceKind::Subst(parts), i) if i < 6 => Some(&parts[i]),
            (SurfaceKind::Ind { scrut, .. }, 0) => Some(scrut),
            (SurfaceKind::Ind { branches, .. }, i) if i >= 1 && i - 1 < branches.len() => {
                Some(&branches[i - 1].body)
            }
            _ => None,
        }
    }

    /// Replace the sub-node at `path` using `f`.
    pub fn map_at(&self, path: &[usize], f: &impl Fn(&Surface) -> Surface) -> Option<Surface> {
        if path.is_empty() {
            return Some(f(self));
        }
        let (i, rest) = (path[0], &path[1..]);
        let mut out = self.clone();
        match (&mut out.kind, i) {
            (SurfaceKind::Ascr(a, _), 0) => **a = a.map_at(rest, f)?,
            (SurfaceKind::Ascr(_, b), 1) => **b = b.map_at(rest, f)?,
            (SurfaceKind::Pi(_, a, _), 0) => **a = a.map_at(rest, f)?,
            (SurfaceKind::Pi(_, _, b), 1) => **b = b.map_at(rest, f)?,
            (SurfaceKind::Lam(_, b), 0) => **b = b.map_at(rest, f)?,
            (SurfaceKind::App(a, _), 0) => **a = a.map_at(rest, f)?,
            (SurfaceKind::App(_, b), 1) => **b = b.map_at(rest, f)?,
            (SurfaceKind::If(a, _, _), 0) => **a = a.map_at(rest, f)?,
            (SurfaceKind::If(_, b, _), 1) => **b = b.map_at(rest, f)?,
            (SurfaceKind::If(_, _, c), 2) => **c = c.map_at(rest, f)?,
            (SurfaceKind::Eq(a, _, _), 0) => **a = a.map_at(rest, f)?,
            (SurfaceKind::Eq(_, t, _), 1) => **t = t.map_at(rest, f)?,
            (SurfaceKind::Eq(_, _, b), 2) => **b = b.map_at(rest, f)?,
            (SurfaceKind::Subst(parts), i) if i < 6 => {
                parts[i] = parts[i].map_at(rest, f)?;
            }
            (SurfaceKind::Ind { scrut, .. }, 0) => **scrut = scrut.map_at(rest, f)?,
            (SurfaceKind::Ind { branches, .. }, i) if i >= 1 && i - 1 < branches.len() => {
                branches[i - 1].body = branches[i - 1].body.map_at(rest, f)?;
            }
            _ => return None,
        }
        Some(out)
    }
}

/// Shift free de Bruijn variables of a surface term by `amount`.
pub fn shift_surface(s: &Surface, cutoff: usize, amount: usize) -> Surface {
    let kind = match &s.kind {
        SurfaceKind::Var(i) => {
            if *i >= cutoff {
                SurfaceKind::Var(i + amount)
            } else {
                SurfaceKind::Var(*i)
            }
        }
        SurfaceKind::Type(_)
        | SurfaceKind::Global(_)
        | SurfaceKind::Bool
        | SurfaceKind::True
        | SurfaceKind::False
        | SurfaceKind::Unknown(_)
        | SurfaceKind::Refl => s.kind.clone(),
        SurfaceKind::Ascr(a, b) => SurfaceKind::Ascr(
            Box::new(shift_surface(a, cutoff, amount)),
            Box::new(shift_surface(b, cutoff, amount)),
        ),
        SurfaceKind::Pi(n, a, b) => SurfaceKind::Pi(
            n.clone(),
            Box::new(shift_surface(a, cutoff, amount)),
            Box::new(shift_surface(b, cutoff + 1, amount)),
        ),
        SurfaceKind::Lam(n, b) => {
            SurfaceKind::Lam(n.clone(), Box::new(shift_surface(b, cutoff + 1, amount)))
        }
        SurfaceKind::App(a, b) => SurfaceKind::App(
            Box::new(shift_surface(a, cutoff, amount)),
            Box::new(shift_surface(b, cutoff, amount)),
        ),
        SurfaceKind::If(a, b, c) => SurfaceKind::If(
            Box::new(shift_surface(a, cutoff, amount)),
            Box::new(shift_surface(b, cutoff, amount)),
            Box::new(shift_surface(c, cutoff, amount)),
        ),
        SurfaceKind::Eq(a, t, b) => SurfaceKind::Eq(
            Box::new(shift_surface(a, cutoff, amount)),
            Box::new(shift_surface(t, cutoff, amount)),
            Box::new(shift_surface(b, cutoff, amount)),
        ),
        SurfaceKind::Subst(parts) => {
            let shifted: Vec<Surface> = parts
                .iter()
                .map(|p| shift_surface(p, cutoff, amount))
                .collect();
            SurfaceKind::Subst(Box::new([
                shifted[0].clone(),
                shifted[1].clone(),
                shifted[2].clone(),
                shifted[3].clone(),
                shifted[4].clone(),
                shifted[5].clone(),
            ]))
        }
        SurfaceKind::Ind {
            self_name,
            scrut,
            branches,
        } => SurfaceKind::Ind {
            self_name: self_name.clone(),
            scrut: Box::new(shift_surface(scrut, cutoff, amount)),
            branches: branches
                .iter()
                .map(|b| SurfaceBranch {
                    ctor: b.ctor.clone(),
                    binders: b.binders.clone(),
                    body: shift_surface(&b.body, cutoff + 1 + b.binders.len(), amount),
                })
                .collect(),
        },
    };
    Surface {
        kind,
        span: s.span,
    }
}

/// A parsed data declaration (pre-desugaring).
#[derive(Debug, Clone, PartialEq)]
pub struct DataDecl {
    pub name: Rc<str>,
    /// Combined parameter+index telescope as written.
    pub telescope: Vec<(Name, Surface)>,
    pub level: Level,
    /// Constructor name plus its type as written (a Pi chain ending in an
    /// application of the declared type).
    pub ctors: Vec<(Rc<str>, Surface)>,
    pub span: Span,
}

/// A parsed term definition: `name : sig` followed by `name = body`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefDecl {
    pub name: Rc<str>,
    pub sig: Surface,
    pub body: Surface,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Data(DataDecl),
    Def(DefDecl),
}
