//! Shifting and capture-avoiding substitution over de Bruijn terms.

use std::rc::Rc;

use crate::term::{Branch, RcTerm, Term};

fn go(t: &RcTerm, depth: usize, f: &mut dyn FnMut(usize, usize) -> Term) -> RcTerm {
    Rc::new(map_vars(t, depth, f))
}

/// Apply `f` to every variable occurrence, tracking how many binders have
/// been crossed. `f(depth, index)` produces the replacement term.
fn map_vars(t: &Term, depth: usize, f: &mut dyn FnMut(usize, usize) -> Term) -> Term {
    match t {
        Term::Var(i) => f(depth, *i),
        Term::Type(_) | Term::Bool | Term::True | Term::False => t.clone(),
        Term::Pi(n, dom, cod) => Term::Pi(n.clone(), go(dom, depth, f), go(cod, depth + 1, f)),
        Term::Lam(n, ann, body) => Term::Lam(n.clone(), go(ann, depth, f), go(body, depth + 1, f)),
        Term::App(a, b) => Term::App(go(a, depth, f), go(b, depth, f)),
        Term::If {
            ann,
            scrut,
            then_br,
            else_br,
        } => Term::If {
            ann: go(ann, depth, f),
            scrut: go(scrut, depth, f),
            then_br: go(then_br, depth, f),
            else_br: go(else_br, depth, f),
        },
        Term::Unk(ty) => Term::Unk(go(ty, depth, f)),
        Term::Err(ty) => Term::Err(go(ty, depth, f)),
        Term::Cast { src, dst, body } => Term::Cast {
            src: go(src, depth, f),
            dst: go(dst, depth, f),
            body: go(body, depth, f),
        },
        Term::Tagged { tag, level, body } => Term::Tagged {
            tag: tag.clone(),
            level: *level,
            body: go(body, depth, f),
        },
        Term::Eq { lhs, ty, rhs } => Term::Eq {
            lhs: go(lhs, depth, f),
            ty: go(ty, depth, f),
            rhs: go(rhs, depth, f),
        },
        Term::Refl { ev, lhs, rhs } => Term::Refl {
            ev: go(ev, depth, f),
            lhs: go(lhs, depth, f),
            rhs: go(rhs, depth, f),
        },
        Term::Subst {
            ty,
            motive,
            from,
            to,
            body,
            eq,
        } => Term::Subst {
            ty: go(ty, depth, f),
            motive: go(motive, depth, f),
            from: go(from, depth, f),
            to: go(to, depth, f),
            body: go(body, depth, f),
            eq: go(eq, depth, f),
        },
        Term::Meet { lhs, rhs, ty } => Term::Meet {
            lhs: go(lhs, depth, f),
            rhs: go(rhs, depth, f),
            ty: go(ty, depth, f),
        },
        Term::TyCon { ind, args } => Term::TyCon {
            ind: ind.clone(),
            args: args.iter().map(|a| map_vars(a, depth, f)).collect(),
        },
        Term::Ctor {
            ind,
            ctor,
            params,
            fields,
        } => Term::Ctor {
            ind: ind.clone(),
            ctor: *ctor,
            params: params.iter().map(|a| map_vars(a, depth, f)).collect(),
            fields: fields.iter().map(|a| map_vars(a, depth, f)).collect(),
        },
        Term::Ind {
            ind,
            n_idx,
            motive,
            scrut,
            branches,
        } => Term::Ind {
            ind: ind.clone(),
            n_idx: *n_idx,
            motive: go(motive, depth + n_idx + 1, f),
            scrut: go(scrut, depth, f),
            branches: branches
                .iter()
                .map(|b| Branch {
                    n_fields: b.n_fields,
                    body: go(&b.body, depth + 1 + b.n_fields, f),
                })
                .collect(),
        },
    }
}

/// Shift free variables `>= cutoff` by `amount`.
pub fn shift_above(t: &Term, cutoff: usize, amount: isize) -> Term {
    map_vars(t, cutoff, &mut |depth, i| {
        if i >= depth {
            let j = i as isize + amount;
            debug_assert!(j >= depth as isize, "shift produced a captured variable");
            Term::Var(j as usize)
        } else {
            Term::Var(i)
        }
    })
}

pub fn shift(t: &Term, amount: isize) -> Term {
    if amount == 0 {
        return t.clone();
    }
    shift_above(t, 0, amount)
}

/// Capture-avoiding substitution: replace variable `target` (counted in the
/// scope of `body`) with `replacement`, decrementing the variables above it.
pub fn substitute(body: &Term, target: usize, replacement: &Term) -> Term {
    map_vars(body, 0, &mut |depth, i| {
        use std::cmp::Ordering::*;
        if i < depth {
            Term::Var(i)
        } else {
            match (i - depth).cmp(&target) {
                Less => Term::Var(i),
                Equal => shift(replacement, depth as isize),
                Greater => Term::Var(i - 1),
            }
        }
    })
}

/// `[replacement / 0] body` — the beta-reduction form.
pub fn subst0(body: &Term, replacement: &Term) -> Term {
    substitute(body, 0, replacement)
}

/// Instantiate a term with `k` leading binders by substituting all of them
/// at once (`args[0]` for the outermost binder).
pub fn subst_many(body: &Term, args: &[&Term]) -> Term {
    let k = args.len();
    map_vars(body, 0, &mut |depth, i| {
        if i < depth {
            Term::Var(i)
        } else {
            let free = i - depth;
            if free < k {
                // Innermost binder is index 0, which maps to the *last* arg.
                shift(args[k - 1 - free], depth as isize)
            } else {
                Term::Var(i - k)
            }
        }
    })
}

/// Replace every occurrence of free variable `target` with `with`, without
/// renumbering anything else (`with` is shifted under binders).
pub fn replace_free(t: &Term, target: usize, with: &Term) -> Term {
    map_vars(t, 0, &mut |depth, i| {
        if i >= depth && i - depth == target {
            shift(with, depth as isize)
        } else {
            Term::Var(i)
        }
    })
}

/// Abstract free variable `target` into a fresh innermost binder: every
/// other free variable shifts up by one, and occurrences of `target` become
/// the new binder.
pub fn abstract_free(t: &Term, target: usize) -> Term {
    map_vars(t, 0, &mut |depth, i| {
        if i < depth {
            Term::Var(i)
        } else if i - depth == target {
            Term::Var(depth)
        } else {
            Term::Var(i + 1)
        }
    })
}

/// True when variable `target` occurs free in `t`.
pub fn occurs_free(t: &Term, target: usize) -> bool {
    let mut found = false;
    map_vars(t, 0, &mut |depth, i| {
        if i >= depth && i - depth == target {
            found = true;
        }
        Term::Var(i)
    });
    found
}

/// Rewrite every free variable through `f(depth, free_index)`.
pub fn replace_all_vars(t: &Term, depth: usize, f: &dyn Fn(usize, usize) -> Term) -> Term {
    map_vars(t, depth, &mut |d, i| {
        if i < d {
            Term::Var(i)
        } else {
            f(d, i - d)
        }
    })
}

/// Alpha-equivalence. With de Bruijn indices and equality-transparent name
/// hints this is structural equality.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    #[test]
    fn identity_substitution() {
        // [x/x]x = x
        let x = Term::var(0);
        assert_eq!(subst0(&Term::var(0), &x), x);
    }

    #[test]
    fn non_occurrence() {
        // [t/x]y = y for y != x
        let t = Term::True;
        assert_eq!(substitute(&Term::var(1), 0, &t), Term::var(0));
    }

    #[test]
    fn bound_variable_untouched_under_binder() {
        // [true/x]((y:Bool) -> if_Type y Bool Bool): the bound y stays.
        let body = Term::pi(
            "y",
            Term::Bool,
            Term::ite(Term::ty(0), Term::var(0), Term::Bool, Term::Bool),
        );
        let substituted = substitute(&body, 0, &Term::True);
        assert_eq!(substituted, body);

        // But a free occurrence under the binder is replaced (index 1 inside).
        let body2 = Term::pi(
            "y",
            Term::Bool,
            Term::ite(Term::ty(0), Term::var(1), Term::Bool, Term::Bool),
        );
        let expected = Term::pi(
            "y",
            Term::Bool,
            Term::ite(Term::ty(0), Term::True, Term::Bool, Term::Bool),
        );
        assert_eq!(substitute(&body2, 0, &Term::True), expected);
    }

    #[test]
    fn subst_shifts_replacement_under_binders() {
        // [ (z) / x ] (\y. x) must shift z past the lambda binder.
        let body = Term::lam("y", Term::Bool, Term::var(1));
        let replacement = Term::var(3);
        let out = subst0(&body, &replacement);
        assert_eq!(out, Term::lam("y", Term::Bool, Term::var(4)));
    }

    #[test]
    fn subst_many_orders_args_correctly() {
        // body under binders a (outer), b (inner): App(a, b)
        let body = Term::app(Term::var(1), Term::var(0));
        let got = subst_many(&body, &[&Term::True, &Term::False]);
        assert_eq!(got, Term::app(Term::True, Term::False));
    }

    #[test]
    fn occurs_free_respects_binders() {
        let t = Term::lam("x", Term::Bool, Term::var(0));
        assert!(!occurs_free(&t, 0));
        let t2 = Term::lam("x", Term::Bool, Term::var(1));
        assert!(occurs_free(&t2, 0));
    }

    #[test]
    fn alpha_eq_examples() {
        let a = Term::lam("x", Term::Bool, Term::var(0));
        let b = Term::lam("y", Term::Bool, Term::var(0));
        assert!(alpha_eq(&a, &b));
        assert!(!alpha_eq(&a, &Term::lam("x", Term::Bool, Term::True)));
        assert!(alpha_eq(
            &Term::pi("x", Term::Bool, Term::Bool),
            &Term::pi("y", Term::Bool, Term::Bool)
        ));
    }
}
