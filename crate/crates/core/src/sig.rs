//! Inductive type signatures and the global declaration environment.
//!
//! Signatures exist in two forms: as declared (with an index telescope and
//! per-constructor return index expressions) and desugared (index telescope
//! folded into the parameters, each constructor carrying one consistency
//! constraint field per index). The kernel only ever sees the desugared form.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::subst::{shift, subst_many};
use crate::term::{IndName, Level, Name, Term};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtorSig {
    pub name: Rc<str>,
    /// Field telescope. Field `i`'s type is scoped under
    /// `[params..., fields[..i]...]` (innermost binder = previous field).
    pub fields: Vec<(Name, Term)>,
    /// Return-type index expressions, scoped under `[params..., fields...]`.
    /// Empty once desugared.
    pub ret_indices: Vec<Term>,
    /// Number of trailing constraint fields added by desugaring.
    pub n_constraints: usize,
}

impl CtorSig {
    /// Fields the programmer writes (desugared constraints excluded).
    pub fn n_user_fields(&self) -> usize {
        self.fields.len() - self.n_constraints
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductiveSig {
    pub name: IndName,
    pub level: Level,
    /// Parameter telescope; each type scoped under the previous parameters.
    pub params: Vec<(Name, Term)>,
    /// Index telescope (scoped under the parameters). Empty once desugared.
    pub indices: Vec<(Name, Term)>,
    /// Number of trailing parameters that originated as indices.
    pub n_idx_params: usize,
    pub ctors: Vec<CtorSig>,
}

impl InductiveSig {
    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn is_desugared(&self) -> bool {
        self.indices.is_empty() && self.ctors.iter().all(|c| c.ret_indices.is_empty())
    }

    /// The type of the type constructor as a Pi telescope ending in its sort.
    pub fn tycon_type(&self) -> Term {
        let mut ty = Term::Type(self.level);
        for (name, dom) in self.params.iter().rev() {
            ty = Term::Pi(name.clone(), dom.clone().rc(), ty.rc());
        }
        ty
    }

    /// Instantiate the parameter telescope types with concrete arguments:
    /// returns the expected type of each argument in order. With a partial
    /// argument prefix, only the reachable entries (one past the prefix) are
    /// produced.
    pub fn param_types_at(&self, args: &[Term]) -> Vec<Term> {
        let upto = self.params.len().min(args.len() + 1);
        (0..upto)
            .map(|i| {
                let prior: Vec<&Term> = args[..i].iter().collect();
                subst_many(&self.params[i].1, &prior)
            })
            .collect()
    }

    /// Instantiate constructor `c`'s field types with parameter values and
    /// the values of previous fields (again, one entry past the prefix).
    pub fn field_types_at(&self, c: usize, params: &[Term], fields: &[Term]) -> Vec<Term> {
        let ctor = &self.ctors[c];
        let upto = ctor.fields.len().min(fields.len() + 1);
        (0..upto)
            .map(|i| {
                let mut env: Vec<&Term> = params.iter().collect();
                env.extend(fields[..i].iter());
                subst_many(&ctor.fields[i].1, &env)
            })
            .collect()
    }

    /// `C p1 .. pn` with the given parameter values.
    pub fn tycon_app(&self, params: Vec<Term>) -> Term {
        Term::TyCon {
            ind: self.name.clone(),
            args: params,
        }
    }

    /// `C x1 .. xn` referring to parameters bound in the current scope,
    /// where the innermost binder (`Var 0`) is the last parameter and
    /// `extra` more binders have been pushed since.
    pub fn tycon_app_vars(&self, extra: usize) -> Term {
        let n = self.params.len();
        Term::TyCon {
            ind: self.name.clone(),
            args: (0..n).map(|i| Term::Var(n - 1 - i + extra)).collect(),
        }
    }

    /// True when constructor field `f` is a recursive occurrence: its type is
    /// `C args` or a function type ending in `C args`.
    pub fn field_is_recursive(&self, c: usize, f: usize) -> bool {
        fn ends_in(ind: &IndName, ty: &Term) -> bool {
            match ty {
                Term::TyCon { ind: i2, .. } => i2 == ind,
                Term::Pi(_, _, cod) => ends_in(ind, cod),
                _ => false,
            }
        }
        ends_in(&self.name, &self.ctors[c].fields[f].1)
    }
}

/// The global environment: all declared (desugared) inductive types, in
/// declaration order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Env {
    pub inductives: Vec<InductiveSig>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn lookup(&self, name: &str) -> Option<&InductiveSig> {
        self.inductives.iter().find(|s| &*s.name == name)
    }

    pub fn declare(&mut self, sig: InductiveSig) {
        debug_assert!(self.lookup(&sig.name).is_none(), "duplicate inductive");
        self.inductives.push(sig);
    }

    pub fn ctor_index(&self, ind: &str, ctor_name: &str) -> Option<usize> {
        self.lookup(ind)?
            .ctors
            .iter()
            .position(|c| &*c.name == ctor_name)
    }

    /// Find the inductive owning a constructor name (constructor names are
    /// required to be globally unique).
    pub fn find_ctor(&self, ctor_name: &str) -> Option<(&InductiveSig, usize)> {
        for sig in &self.inductives {
            if let Some(i) = sig.ctors.iter().position(|c| &*c.name == ctor_name) {
                return Some((sig, i));
            }
        }
        None
    }
}

/// Strict positivity for a desugared signature: the inductive may appear in
/// its own constructor fields only as the field's head (possibly under the
/// codomain of function fields), never in a domain, an argument of another
/// type constructor, or any other position.
pub fn check_strict_positivity(sig: &InductiveSig) -> Result<(), String> {
    fn occurs(name: &IndName, t: &Term) -> bool {
        let mut found = false;
        visit(t, &mut |s| {
            if let Term::TyCon { ind, .. } = s {
                if ind == name {
                    found = true;
                }
            }
            if let Term::Ctor { ind, .. } = s {
                if ind == name {
                    found = true;
                }
            }
        });
        found
    }

    fn visit(t: &Term, f: &mut impl FnMut(&Term)) {
        f(t);
        match t {
            Term::Pi(_, a, b) | Term::Lam(_, a, b) | Term::App(a, b) => {
                visit(a, f);
                visit(b, f);
            }
            Term::If {
                ann,
                scrut,
                then_br,
                else_br,
            } => {
                visit(ann, f);
                visit(scrut, f);
                visit(then_br, f);
                visit(else_br, f);
            }
            Term::Unk(a) | Term::Err(a) => visit(a, f),
            Term::Cast { src, dst, body } => {
                visit(src, f);
                visit(dst, f);
                visit(body, f);
            }
            Term::Tagged { body, .. } => visit(body, f),
            Term::Eq { lhs, ty, rhs } => {
                visit(lhs, f);
                visit(ty, f);
                visit(rhs, f);
            }
            Term::Refl { ev, lhs, rhs } => {
                visit(ev, f);
                visit(lhs, f);
                visit(rhs, f);
            }
            Term::Subst {
                ty,
                motive,
                from,
                to,
                body,
                eq,
            } => {
                for x in [ty, motive, from, to, body, eq] {
                    visit(x, f);
                }
            }
            Term::Meet { lhs, rhs, ty } => {
                visit(lhs, f);
                visit(rhs, f);
                visit(ty, f);
            }
            Term::TyCon { args, .. } => args.iter().for_each(|a| visit(a, f)),
            Term::Ctor { params, fields, .. } => {
                params.iter().for_each(|a| visit(a, f));
                fields.iter().for_each(|a| visit(a, f));
            }
            Term::Ind {
                motive,
                scrut,
                branches,
                ..
            } => {
                visit(motive, f);
                visit(scrut, f);
                branches.iter().for_each(|b| visit(&b.body, f));
            }
            _ => {}
        }
    }

    // A field type is positive when it is `C args` with C-free args, or a Pi
    // chain with C-free domains ending in such an application, or C-free.
    fn field_positive(name: &IndName, ty: &Term) -> bool {
        match ty {
            Term::TyCon { ind, args } if ind == name => !args.iter().any(|a| occurs(name, a)),
            Term::Pi(_, dom, cod) => !occurs(name, dom) && field_positive(name, cod),
            other => !occurs(name, other),
        }
    }

    for c in &sig.ctors {
        for (fname, fty) in &c.fields {
            if !field_positive(&sig.name, fty) {
                return Err(format!(
                    "inductive {} is not strictly positive: constructor {} field {}",
                    sig.name,
                    c.name,
                    fname.text()
                ));
            }
        }
    }
    Ok(())
}

/// Shift a term out of the parameter scope by `amount` (helper used when
/// moving constructor data between scopes).
pub fn shift_term(t: &Term, amount: isize) -> Term {
    shift(t, amount)
}
