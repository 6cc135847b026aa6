//! Term representations for the surface language and the cast calculus.
//!
//! Both languages use de Bruijn indices for bound variables; binder names are
//! kept only as printing hints and are ignored by equality, so the derived
//! `PartialEq` on terms *is* alpha-equivalence.

use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

/// Universe index. `Type(l) : Type(l+1)`, strictly — there is no cumulativity.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct Level(pub u32);

impl Level {
    pub fn succ(self) -> Level {
        Level(self.0 + 1)
    }
    pub fn pred(self) -> Option<Level> {
        self.0.checked_sub(1).map(Level)
    }
    pub fn max(self, other: Level) -> Level {
        Level(self.0.max(other.0))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A binder name hint. Compares equal to every other hint, so terms that
/// differ only in binder names are structurally equal.
#[derive(Clone, Default, Serialize, Deserialize)]
pub struct Name(pub Option<Rc<str>>);

impl Name {
    pub fn named(s: impl Into<Rc<str>>) -> Name {
        Name(Some(s.into()))
    }
    pub fn text(&self) -> &str {
        self.0.as_deref().unwrap_or("_")
    }
}

impl PartialEq for Name {
    fn eq(&self, _: &Name) -> bool {
        true
    }
}
impl Eq for Name {}

impl std::hash::Hash for Name {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text())
    }
}

/// Identifier of a declared inductive type (interned name).
pub type IndName = Rc<str>;

/// Head-constructor tags. Type tags classify type formers; the full tag set
/// adds the value formers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeTag {
    Pi,
    Bool,
    Type,
    Eq,
    Ind(IndName),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Of(TypeTag),
    Lam,
    True,
    False,
    Refl,
    Ctor(IndName, usize),
}

impl From<TypeTag> for Tag {
    fn from(t: TypeTag) -> Tag {
        Tag::Of(t)
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTag::Pi => write!(f, "Pi"),
            TypeTag::Bool => write!(f, "Bool"),
            TypeTag::Type => write!(f, "Type"),
            TypeTag::Eq => write!(f, "Eq"),
            TypeTag::Ind(n) => write!(f, "{n}"),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Of(t) => write!(f, "{t}"),
            Tag::Lam => write!(f, "lambda"),
            Tag::True => write!(f, "true"),
            Tag::False => write!(f, "false"),
            Tag::Refl => write!(f, "refl"),
            Tag::Ctor(n, i) => write!(f, "{n}.{i}"),
        }
    }
}

/// One branch of an `ind` elimination. The body is scoped under
/// `1 + n_fields` extra binders: the self-reference function (outermost),
/// then the constructor fields in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub n_fields: usize,
    pub body: Rc<Term>,
}

/// Cast-calculus terms. Terms and types share this representation.
///
/// `If`, `Lam`, `Unk`, `Err`, `Meet` and `Ind` carry the type annotations the
/// reduction rules need at run time. `Subst` is kept saturated (all six
/// arguments present) so its universe levels are always recoverable from the
/// arguments themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Term {
    Type(Level),
    Var(usize),
    Pi(Name, Rc<Term>, Rc<Term>),
    Lam(Name, Rc<Term>, Rc<Term>),
    App(Rc<Term>, Rc<Term>),
    Bool,
    True,
    False,
    If {
        ann: Rc<Term>,
        scrut: Rc<Term>,
        then_br: Rc<Term>,
        else_br: Rc<Term>,
    },
    /// `?_T`: the unknown term of type `T`.
    Unk(Rc<Term>),
    /// `err_T`: the dynamic error at type `T`.
    Err(Rc<Term>),
    /// `<dst <= src> body`.
    Cast {
        src: Rc<Term>,
        dst: Rc<Term>,
        body: Rc<Term>,
    },
    /// `h@t`: an injection into `?_(Type level)`, tagged with the type head.
    Tagged {
        tag: TypeTag,
        level: Level,
        body: Rc<Term>,
    },
    /// Propositional consistency type `lhs ~=_ty rhs`.
    Eq {
        lhs: Rc<Term>,
        ty: Rc<Term>,
        rhs: Rc<Term>,
    },
    /// `refl_ev<lhs, rhs>`: evidence-carrying proof of `lhs ~= rhs`.
    Refl {
        ev: Rc<Term>,
        lhs: Rc<Term>,
        rhs: Rc<Term>,
    },
    /// Saturated J eliminator: `subst ty motive from to body eq`.
    Subst {
        ty: Rc<Term>,
        motive: Rc<Term>,
        from: Rc<Term>,
        to: Rc<Term>,
        body: Rc<Term>,
        eq: Rc<Term>,
    },
    /// Evidence composition `lhs /\_ty rhs` (precision meet).
    Meet {
        lhs: Rc<Term>,
        rhs: Rc<Term>,
        ty: Rc<Term>,
    },
    /// Fully applied type constructor `C args` (parameters only; families are
    /// desugared before reaching this representation).
    TyCon { ind: IndName, args: Vec<Term> },
    /// Fully applied data constructor `D params fields`.
    Ctor {
        ind: IndName,
        ctor: usize,
        params: Vec<Term>,
        fields: Vec<Term>,
    },
    /// Eliminator `ind_C self. scrut { branches }`. The motive is scoped
    /// under the inductive's index parameters plus one binder for the
    /// scrutinee; `n_idx` records how many index binders it takes.
    Ind {
        ind: IndName,
        n_idx: usize,
        motive: Rc<Term>,
        scrut: Rc<Term>,
        branches: Vec<Branch>,
    },
}

pub type RcTerm = Rc<Term>;

impl Term {
    pub fn rc(self) -> RcTerm {
        Rc::new(self)
    }

    pub fn var(i: usize) -> Term {
        Term::Var(i)
    }

    pub fn ty(l: u32) -> Term {
        Term::Type(Level(l))
    }

    pub fn unk(t: Term) -> Term {
        Term::Unk(t.rc())
    }

    pub fn err(t: Term) -> Term {
        Term::Err(t.rc())
    }

    pub fn pi(name: &str, dom: Term, cod: Term) -> Term {
        Term::Pi(Name::named(name), dom.rc(), cod.rc())
    }

    pub fn arrow(dom: Term, cod: Term) -> Term {
        Term::Pi(Name(None), dom.rc(), cod.rc())
    }

    pub fn lam(name: &str, ann: Term, body: Term) -> Term {
        Term::Lam(Name::named(name), ann.rc(), body.rc())
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(f.rc(), a.rc())
    }

    pub fn cast(src: Term, dst: Term, body: Term) -> Term {
        Term::Cast {
            src: src.rc(),
            dst: dst.rc(),
            body: body.rc(),
        }
    }

    pub fn ite(ann: Term, scrut: Term, then_br: Term, else_br: Term) -> Term {
        Term::If {
            ann: ann.rc(),
            scrut: scrut.rc(),
            then_br: then_br.rc(),
            else_br: else_br.rc(),
        }
    }

    pub fn eq(lhs: Term, ty: Term, rhs: Term) -> Term {
        Term::Eq {
            lhs: lhs.rc(),
            ty: ty.rc(),
            rhs: rhs.rc(),
        }
    }

    pub fn refl(ev: Term, lhs: Term, rhs: Term) -> Term {
        Term::Refl {
            ev: ev.rc(),
            lhs: lhs.rc(),
            rhs: rhs.rc(),
        }
    }

    pub fn meet(lhs: Term, rhs: Term, ty: Term) -> Term {
        Term::Meet {
            lhs: lhs.rc(),
            rhs: rhs.rc(),
            ty: ty.rc(),
        }
    }

    /// `?_(Type l)` — the unknown type at universe `l`.
    pub fn unk_type(l: Level) -> Term {
        Term::Unk(Term::Type(l).rc())
    }

    pub fn is_err(&self) -> bool {
        matches!(self, Term::Err(_))
    }

    pub fn is_unk(&self) -> bool {
        matches!(self, Term::Unk(_))
    }

    /// `?_(Type l)` pattern match: returns the level when the term is the
    /// unknown *type*.
    pub fn as_unk_type(&self) -> Option<Level> {
        match self {
            Term::Unk(t) => match &**t {
                Term::Type(l) => Some(*l),
                _ => None,
            },
            _ => None,
        }
    }

    /// `err_(Type l)` pattern match.
    pub fn as_err_type(&self) -> Option<Level> {
        match self {
            Term::Err(t) => match &**t {
                Term::Type(l) => Some(*l),
                _ => None,
            },
            _ => None,
        }
    }
}

/// The head-constructor tag of a term, when it is an introduction form.
/// Variables, neutrals, `?`, `err` and casts have no tag.
pub fn tag_of(t: &Term) -> Option<Tag> {
    match t {
        Term::True => Some(Tag::True),
        Term::False => Some(Tag::False),
        Term::Lam(..) => Some(Tag::Lam),
        Term::Pi(..) => Some(Tag::Of(TypeTag::Pi)),
        Term::Bool => Some(Tag::Of(TypeTag::Bool)),
        Term::Type(_) => Some(Tag::Of(TypeTag::Type)),
        Term::Eq { .. } => Some(Tag::Of(TypeTag::Eq)),
        Term::Refl { .. } => Some(Tag::Refl),
        Term::TyCon { ind, .. } => Some(Tag::Of(TypeTag::Ind(ind.clone()))),
        Term::Ctor { ind, ctor, .. } => Some(Tag::Ctor(ind.clone(), *ctor)),
        _ => None,
    }
}

/// The tag of the term's *type*: `true |-> Bool`, `\ |-> Pi`, types `|-> Type`,
/// `refl |-> Eq`, constructor applications `|-> Ind(C)`.
pub fn type_tag_of(t: &Term) -> Option<TypeTag> {
    match t {
        Term::True | Term::False => Some(TypeTag::Bool),
        Term::Lam(..) => Some(TypeTag::Pi),
        Term::Pi(..) | Term::Bool | Term::Type(_) | Term::Eq { .. } | Term::TyCon { .. } => {
            Some(TypeTag::Type)
        }
        Term::Refl { .. } => Some(TypeTag::Eq),
        Term::Ctor { ind, .. } => Some(TypeTag::Ind(ind.clone())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_do_not_affect_equality() {
        let a = Term::lam("x", Term::Bool, Term::var(0));
        let b = Term::lam("y", Term::Bool, Term::var(0));
        assert_eq!(a, b);
        let c = Term::lam("x", Term::Bool, Term::True);
        assert_ne!(a, c);
    }

    #[test]
    fn tag_of_paper_table() {
        assert_eq!(tag_of(&Term::True), Some(Tag::True));
        assert_eq!(
            tag_of(&Term::arrow(Term::Bool, Term::Bool)),
            Some(Tag::Of(TypeTag::Pi))
        );
        assert_eq!(tag_of(&Term::var(0)), None);
        assert_eq!(tag_of(&Term::unk(Term::Bool)), None);
        assert_eq!(
            tag_of(&Term::cast(Term::Bool, Term::Bool, Term::True)),
            None
        );
    }

    #[test]
    fn type_tag_of_paper_table() {
        assert_eq!(type_tag_of(&Term::True), Some(TypeTag::Bool));
        assert_eq!(type_tag_of(&Term::Bool), Some(TypeTag::Type));
        assert_eq!(type_tag_of(&Term::ty(0)), Some(TypeTag::Type));
        assert_eq!(
            type_tag_of(&Term::lam("x", Term::Bool, Term::var(0))),
            Some(TypeTag::Pi)
        );
        // refl carries the Eq tag; forced by the tag extension for equality.
        assert_eq!(
            type_tag_of(&Term::refl(Term::True, Term::True, Term::True)),
            Some(TypeTag::Eq)
        );
        assert_eq!(type_tag_of(&Term::var(3)), None);
    }
}
