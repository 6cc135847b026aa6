//! Classification of terms into the normal / neutral / reducible trichotomy,
//! written against the value and neutral grammars directly. A property test
//! checks that `Reducible` coincides with `reduce_step` making progress in
//! approximate mode.

use crate::germ::{germ, germ_no_pi};
use crate::sig::Env;
use crate::term::{Term, TypeTag, tag_of, type_tag_of};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueForm {
    Normal,
    Neutral,
    Reducible,
}

use ValueForm::*;

impl ValueForm {
    pub fn is_value(self) -> bool {
        !matches!(self, Reducible)
    }
}

fn type_head(t: &Term) -> Option<TypeTag> {
    match tag_of(t)? {
        crate::term::Tag::Of(tt) => Some(tt),
        _ => None,
    }
}

pub fn classify(env: &Env, t: &Term) -> ValueForm {
    match t {
        Term::Var(_) => Neutral,
        Term::Type(_) | Term::Bool | Term::True | Term::False => Normal,
        Term::Pi(_, a, b) | Term::Lam(_, a, b) => {
            if classify(env, a).is_value() && classify(env, b).is_value() {
                Normal
            } else {
                Reducible
            }
        }
        Term::App(f, a) => {
            // Head rules fire regardless of the argument.
            match &**f {
                Term::Lam(..) => return Reducible,
                Term::Unk(ty) | Term::Err(ty) if matches!(&**ty, Term::Pi(..)) => {
                    return Reducible
                }
                _ => {}
            }
            match (classify(env, f), classify(env, a)) {
                (Neutral, c) if c.is_value() => Neutral,
                (cf, ca) if cf.is_value() && ca.is_value() => Normal,
                _ => Reducible,
            }
        }
        Term::If {
            ann,
            scrut,
            then_br,
            else_br,
        } => {
            if matches!(
                &**scrut,
                Term::True | Term::False | Term::Unk(_) | Term::Err(_)
            ) {
                return Reducible;
            }
            let parts_ok = classify(env, ann).is_value()
                && classify(env, then_br).is_value()
                && classify(env, else_br).is_value();
            match classify(env, scrut) {
                Neutral if parts_ok => Neutral,
                c if c.is_value() && parts_ok => Normal,
                _ => Reducible,
            }
        }
        Term::Unk(ty) | Term::Err(ty) => {
            if classify(env, ty).is_value() {
                Normal
            } else {
                Reducible
            }
        }
        Term::Tagged { body, .. } => {
            if classify(env, body).is_value() {
                Normal
            } else {
                Reducible
            }
        }
        Term::Eq { lhs, ty, rhs } => {
            if [lhs, ty, rhs].iter().all(|x| classify(env, x).is_value()) {
                Normal
            } else {
                Reducible
            }
        }
        Term::Refl { ev, lhs, rhs } => {
            if [ev, lhs, rhs].iter().all(|x| classify(env, x).is_value()) {
                Normal
            } else {
                Reducible
            }
        }
        Term::Cast { src, dst, body } => classify_cast(env, src, dst, body),
        Term::Subst {
            ty,
            motive,
            from,
            to,
            body,
            eq,
        } => {
            match &**eq {
                Term::Refl { .. } | Term::Unk(_) | Term::Err(_) => return Reducible,
                _ => {}
            }
            let parts_ok = [ty, motive, from, to, body]
                .iter()
                .all(|x| classify(env, x).is_value());
            match classify(env, eq) {
                Neutral if parts_ok => Neutral,
                c if c.is_value() && parts_ok => Normal,
                _ => Reducible,
            }
        }
        Term::Meet { lhs, rhs, ty } => classify_meet(env, lhs, rhs, ty),
        Term::TyCon { args, .. } => {
            if args.iter().all(|a| classify(env, a).is_value()) {
                Normal
            } else {
                Reducible
            }
        }
        Term::Ctor { params, fields, .. } => {
            if params
                .iter()
                .chain(fields.iter())
                .all(|a| classify(env, a).is_value())
            {
                Normal
            } else {
                Reducible
            }
        }
        Term::Ind {
            ind,
            motive,
            scrut,
            branches,
            ..
        } => {
            match &**scrut {
                Term::Unk(ty) | Term::Err(ty) => {
                    if let Term::TyCon { args, .. } = &**ty {
                        if args.len() >= ind_n_idx(env, ind) {
                            return Reducible;
                        }
                    }
                }
                Term::Ctor {
                    ind: i2,
                    ctor,
                    fields,
                    ..
                } if i2 == ind => {
                    if branches
                        .get(*ctor)
                        .is_some_and(|b| b.n_fields == fields.len())
                    {
                        return Reducible;
                    }
                }
                _ => {}
            }
            let parts_ok = classify(env, motive).is_value()
                && branches.iter().all(|b| classify(env, &b.body).is_value());
            match classify(env, scrut) {
                Neutral if parts_ok => Neutral,
                c if c.is_value() && parts_ok => Normal,
                _ => Reducible,
            }
        }
    }
}

fn ind_n_idx(env: &Env, ind: &str) -> usize {
    env.lookup(ind).map(|s| s.n_idx_params).unwrap_or(0)
}

fn classify_cast(env: &Env, src: &Term, dst: &Term, body: &Term) -> ValueForm {
    // Rules that fire regardless of the other parts.
    if src.is_err() || dst.is_err() || body.is_err() {
        return Reducible;
    }
    if let (Some(l1), Some(l2)) = (src.as_unk_type(), dst.as_unk_type()) {
        if l1 == l2 {
            return Reducible;
        }
    }
    if let (Some(t1), Some(t2)) = (tag_of(src), tag_of(dst)) {
        if t1 != t2 {
            return Reducible;
        }
    }
    if let Some(l) = dst.as_unk_type() {
        if let Some(tt) = type_head(src) {
            if tt == TypeTag::Pi {
                // ?Π always applies in approximate mode.
                return Reducible;
            }
            if germ_no_pi(env, &tt, l).is_some() {
                return Reducible;
            }
        }
    }
    if let Some(l) = src.as_unk_type() {
        match body {
            Term::Tagged { tag, .. } => {
                if let Some(dt) = type_head(dst) {
                    if *tag != dt || germ(env, tag, l).is_some() {
                        return Reducible;
                    }
                }
            }
            Term::Unk(_) => {
                if type_head(dst).is_some() {
                    return Reducible;
                }
            }
            _ => {}
        }
    }
    match (src, dst) {
        (Term::Pi(..), Term::Pi(..)) => return Reducible,
        (Term::Eq { .. }, Term::Eq { .. }) => {
            if matches!(body, Term::Refl { .. } | Term::Unk(_)) {
                return Reducible;
            }
        }
        (Term::Bool, Term::Bool) => {
            if matches!(body, Term::True | Term::False | Term::Unk(_)) {
                return Reducible;
            }
        }
        (Term::Type(l1), Term::Type(l2)) if l1 == l2 => {
            if type_tag_of(body) == Some(TypeTag::Type) || body.is_unk() {
                return Reducible;
            }
        }
        (Term::TyCon { ind: i1, .. }, Term::TyCon { ind: i2, .. }) if i1 == i2 => match body {
            Term::Ctor { ind, .. } if ind == i1 => return Reducible,
            Term::Unk(_) => return Reducible,
            _ => {}
        },
        _ => {}
    }
    // No head rule: contextual or stuck.
    let cs = classify(env, src);
    let cd = classify(env, dst);
    let cb = classify(env, body);
    if !(cs.is_value() && cd.is_value() && cb.is_value()) {
        return Reducible;
    }
    // Neutral cast shapes from the grammar.
    if (cs == Neutral || cd == Neutral) && !body.is_err() {
        return Neutral;
    }
    if cb == Neutral && !src.is_err() && !dst.is_err() && !src.is_unk() && !dst.is_unk() {
        return Neutral;
    }
    if cb == Neutral && src.as_unk_type().is_some() {
        return Neutral;
    }
    Normal
}

fn classify_meet(env: &Env, lhs: &Term, rhs: &Term, ty: &Term) -> ValueForm {
    if lhs.is_unk() || rhs.is_unk() || lhs.is_err() || rhs.is_err() {
        return Reducible;
    }
    if let (Term::Tagged { tag: h1, .. }, Term::Tagged { tag: h2, .. }) = (lhs, rhs) {
        if h1 != h2 {
            return Reducible;
        }
        let level = match lhs {
            Term::Tagged { level, .. } => *level,
            _ => unreachable!(),
        };
        if germ(env, h1, level).is_some() {
            return Reducible;
        }
    }
    if let (Some(t1), Some(t2)) = (tag_of(lhs), tag_of(rhs)) {
        if t1 != t2 {
            return Reducible;
        }
        match (lhs, rhs) {
            (Term::True, Term::True) | (Term::False, Term::False) | (Term::Bool, Term::Bool) => {
                return Reducible
            }
            (Term::Type(_), Term::Type(_)) => return Reducible,
            (Term::Lam(..), Term::Lam(..)) => {
                if matches!(ty, Term::Pi(..)) {
                    return Reducible;
                }
            }
            (Term::Pi(..), Term::Pi(..)) | (Term::Eq { .. }, Term::Eq { .. }) => {
                if matches!(ty, Term::Type(_)) {
                    return Reducible;
                }
            }
            (Term::Refl { .. }, Term::Refl { .. }) => {
                if matches!(ty, Term::Eq { .. }) {
                    return Reducible;
                }
            }
            (Term::TyCon { .. }, Term::TyCon { .. }) => return Reducible,
            (Term::Ctor { .. }, Term::Ctor { .. }) => {
                if matches!(ty, Term::TyCon { .. }) {
                    return Reducible;
                }
            }
            _ => {}
        }
    }
    let cl = classify(env, lhs);
    let cr = classify(env, rhs);
    let ct = classify(env, ty);
    if !(cl.is_value() && cr.is_value() && ct.is_value()) {
        return Reducible;
    }
    if cl == Neutral || cr == Neutral {
        return Neutral;
    }
    Normal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    #[test]
    fn grammar_examples() {
        let env = Env::new();
        // \x:Bool. x is normal
        assert_eq!(
            classify(&env, &Term::lam("x", Term::Bool, Term::var(0))),
            Normal
        );
        // <Bool <= x> true with x a variable is neutral
        assert_eq!(
            classify(
                &env,
                &Term::cast(Term::var(0), Term::Bool, Term::True)
            ),
            Neutral
        );
        // if_Bool true t u is reducible
        assert_eq!(
            classify(
                &env,
                &Term::ite(Term::Bool, Term::True, Term::True, Term::False)
            ),
            Reducible
        );
    }
}
