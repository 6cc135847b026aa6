//! The static inductive-recursive target language: a small CIC with
//! inductive declarations and clausal (pattern-matching) definitions.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::term::{Level, Name};

pub type DefName = Rc<str>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StirTerm {
    Sort(Level),
    Var(usize),
    Pi(Name, Rc<StirTerm>, Rc<StirTerm>),
    /// The annotation is kept when the translation knows it (so redexes
    /// synthesize); generated prelude lambdas are bare.
    Lam(Name, Option<Rc<StirTerm>>, Rc<StirTerm>),
    App(Rc<StirTerm>, Rc<StirTerm>),
    /// Reference to a prelude definition.
    Const(DefName),
    /// Saturated data-constructor application (parameters then fields).
    Ctor {
        ind: DefName,
        ctor: usize,
        args: Vec<StirTerm>,
    },
    /// Saturated inductive-type application.
    IndType { ind: DefName, args: Vec<StirTerm> },
}

impl StirTerm {
    pub fn rc(self) -> Rc<StirTerm> {
        Rc::new(self)
    }

    pub fn app(f: StirTerm, a: StirTerm) -> StirTerm {
        StirTerm::App(f.rc(), a.rc())
    }

    pub fn apps(f: StirTerm, args: impl IntoIterator<Item = StirTerm>) -> StirTerm {
        args.into_iter().fold(f, StirTerm::app)
    }

    pub fn lam(n: &str, body: StirTerm) -> StirTerm {
        StirTerm::Lam(Name::named(n), None, body.rc())
    }

    /// Unfold an application spine.
    pub fn spine(&self) -> (&StirTerm, Vec<&StirTerm>) {
        let mut args = Vec::new();
        let mut head = self;
        while let StirTerm::App(f, a) = head {
            args.push(&**a);
            head = f;
        }
        args.reverse();
        (head, args)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StirCtor {
    pub name: DefName,
    /// Field telescope, scoped under [inductive params..., earlier fields].
    pub fields: Vec<(Name, StirTerm)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StirInductive {
    pub name: DefName,
    pub level: Level,
    pub params: Vec<(Name, StirTerm)>,
    pub ctors: Vec<StirCtor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Pat {
    Var(Name),
    Ctor {
        ind: DefName,
        ctor: usize,
        args: Vec<Pat>,
    },
}

impl Pat {
    pub fn n_binders(&self) -> usize {
        match self {
            Pat::Var(_) => 1,
            Pat::Ctor { args, .. } => args.iter().map(Pat::n_binders).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub pats: Vec<Pat>,
    /// Optional guard, scoped under the pattern binders; the clause fires
    /// when it evaluates to the first constructor of `SBool`.
    pub guard: Option<StirTerm>,
    pub rhs: StirTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StirDef {
    pub name: DefName,
    /// Closed type (a Pi telescope).
    pub ty: StirTerm,
    /// Number of arguments the clauses dispatch on.
    pub arity: usize,
    pub clauses: Vec<Clause>,
    /// Indices of arguments any one of which must structurally decrease in
    /// every recursive call (empty = non-recursive).
    pub rec_args: Vec<usize>,
    /// Recursion certified externally (eliminators generated from kernel
    /// `ind` forms whose guard check already ran).
    pub trusted_termination: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Prelude {
    pub inductives: Vec<StirInductive>,
    pub defs: Vec<StirDef>,
}

impl Prelude {
    pub fn inductive(&self, name: &str) -> Option<&StirInductive> {
        self.inductives.iter().find(|i| &*i.name == name)
    }
    pub fn def(&self, name: &str) -> Option<&StirDef> {
        self.defs.iter().find(|d| &*d.name == name)
    }
}

// ---------- de Bruijn machinery ----------

fn go(t: &Rc<StirTerm>, d: usize, f: &mut dyn FnMut(usize, usize) -> StirTerm) -> Rc<StirTerm> {
    Rc::new(map_vars(t, d, f))
}

pub fn map_vars(
    t: &StirTerm,
    depth: usize,
    f: &mut dyn FnMut(usize, usize) -> StirTerm,
) -> StirTerm {
    match t {
        StirTerm::Var(i) => f(depth, *i),
        StirTerm::Sort(_) | StirTerm::Const(_) => t.clone(),
        StirTerm::Pi(n, a, b) => StirTerm::Pi(n.clone(), go(a, depth, f), go(b, depth + 1, f)),
        StirTerm::Lam(n, ann, b) => StirTerm::Lam(
            n.clone(),
            ann.as_ref().map(|a| go(a, depth, f)),
            go(b, depth + 1, f),
        ),
        StirTerm::App(a, b) => StirTerm::App(go(a, depth, f), go(b, depth, f)),
        StirTerm::Ctor { ind, ctor, args } => StirTerm::Ctor {
            ind: ind.clone(),
            ctor: *ctor,
            args: args.iter().map(|a| map_vars(a, depth, f)).collect(),
        },
        StirTerm::IndType { ind, args } => StirTerm::IndType {
            ind: ind.clone(),
            args: args.iter().map(|a| map_vars(a, depth, f)).collect(),
        },
    }
}

pub fn shift(t: &StirTerm, amount: isize) -> StirTerm {
    if amount == 0 {
        return t.clone();
    }
    map_vars(t, 0, &mut |d, i| {
        if i >= d {
            StirTerm::Var((i as isize + amount) as usize)
        } else {
            StirTerm::Var(i)
        }
    })
}

pub fn subst0(body: &StirTerm, repl: &StirTerm) -> StirTerm {
    substitute(body, 0, repl)
}

pub fn substitute(body: &StirTerm, target: usize, repl: &StirTerm) -> StirTerm {
    map_vars(body, 0, &mut |d, i| {
        use std::cmp::Ordering::*;
        if i < d {
            StirTerm::Var(i)
        } else {
            match (i - d).cmp(&target) {
                Less => StirTerm::Var(i),
                Equal => shift(repl, d as isize),
                Greater => StirTerm::Var(i - 1),
            }
        }
    })
}

/// Substitute `k` leading binders at once (`args[0]` outermost).
pub fn subst_many(body: &StirTerm, args: &[&StirTerm]) -> StirTerm {
    let k = args.len();
    map_vars(body, 0, &mut |d, i| {
        if i < d {
            StirTerm::Var(i)
        } else {
            let free = i - d;
            if free < k {
                shift(args[k - 1 - free], d as isize)
            } else {
                StirTerm::Var(i - k)
            }
        }
    })
}
