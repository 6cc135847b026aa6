//! Germ (level-1) types: the least precise type with a given head tag.
//! Casts to and from `?_(Type l)` route through these.

use crate::sig::Env;
use crate::subst::subst_many;
use crate::term::{Level, Name, Term, TypeTag};

/// The germ of tag `h` at `?_(Type l)`.
///
/// * `Pi`: `(x : ?_(Type l)) -> ?_(Type l)`
/// * `Bool`: `Bool`
/// * `Type`: `Type (l-1)` — absent at level 0, since `?_(Type 0)` cannot
///   store a type. (The payload of a `Type`-tagged value one level down is
///   exactly what the unknown type at level `l` can embed.)
/// * `Eq`: `?_(?_(Type l)) ~=_(?_(Type l)) ?_(?_(Type l))`
/// * `Ind C`: `C` applied to `?` at every parameter.
pub fn germ(env: &Env, h: &TypeTag, l: Level) -> Option<Term> {
    match h {
        TypeTag::Pi => Some(Term::Pi(
            Name(None),
            Term::unk_type(l).rc(),
            Term::unk_type(l).rc(),
        )),
        TypeTag::Bool => Some(Term::Bool),
        TypeTag::Type => l.pred().map(Term::Type),
        TypeTag::Eq => {
            let unk_ty = Term::unk_type(l);
            Some(Term::eq(
                Term::unk(unk_ty.clone()),
                unk_ty.clone(),
                Term::unk(unk_ty),
            ))
        }
        TypeTag::Ind(name) => {
            let sig = env.lookup(name)?;
            let mut args: Vec<Term> = Vec::with_capacity(sig.params.len());
            for (_, pty) in &sig.params {
                let prior: Vec<&Term> = args.iter().collect();
                let inst = subst_many(pty, &prior);
                args.push(Term::unk(inst));
            }
            Some(sig.tycon_app(args))
        }
    }
}

/// Like [`germ`] but undefined on `Pi`: functions must go through the
/// approximation rule instead of a plain tag injection.
pub fn germ_no_pi(env: &Env, h: &TypeTag, l: Level) -> Option<Term> {
    match h {
        TypeTag::Pi => None,
        _ => germ(env, h, l),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn germ_table() {
        let env = Env::new();
        assert_eq!(germ(&env, &TypeTag::Bool, Level(3)), Some(Term::Bool));
        assert_eq!(
            germ(&env, &TypeTag::Pi, Level(0)),
            Some(Term::arrow(Term::unk_type(Level(0)), Term::unk_type(Level(0))))
        );
        assert_eq!(germ_no_pi(&env, &TypeTag::Pi, Level(0)), None);
        assert_eq!(germ(&env, &TypeTag::Type, Level(1)), Some(Term::ty(0)));
        assert_eq!(germ(&env, &TypeTag::Type, Level(0)), None);
    }
}
