//! Consistency on values, the decidable directed precision checker, and the
//! bounded-search algebraic-precision oracle (used only by tests and the
//! gradual-guarantee harness).

use crate::context::Context;
use crate::normalize::{self, EvalMode, Machine, DEFAULT_CEILING};
use crate::sig::Env;
use crate::subst::{alpha_eq, shift};
use crate::term::{Term};
use crate::typing::Checker;

/// Value consistency: equality up to occurrences of `?`, transparent to
/// casts and tags. `err` is consistent with nothing, including itself;
/// distinct variables are inconsistent.
pub fn consistent(env: &Env, a: &Term, b: &Term) -> bool {
    // Casts and tags are transparent on both sides.
    match a {
        Term::Cast { body, .. } | Term::Tagged { body, .. } => return consistent(env, body, b),
        _ => {}
    }
    match b {
        Term::Cast { body, .. } | Term::Tagged { body, .. } => return consistent(env, a, body),
        _ => {}
    }
    if a.is_err() || b.is_err() {
        return false;
    }
    if a.is_unk() {
        return unk_consistent(env, b);
    }
    if b.is_unk() {
        return unk_consistent(env, a);
    }
    // A meet is consistent only with terms consistent with both halves.
    if let Term::Meet { lhs, rhs, .. } = a {
        return consistent(env, lhs, b) && consistent(env, rhs, b);
    }
    if let Term::Meet { lhs, rhs, .. } = b {
        return consistent(env, a, lhs) && consistent(env, a, rhs);
    }
    match (a, b) {
        (Term::Var(i), Term::Var(j)) => i == j,
        (Term::Type(l), Term::Type(m)) => l == m,
        (Term::Bool, Term::Bool)
        | (Term::True, Term::True)
        | (Term::False, Term::False) => true,
        (Term::Pi(_, d, c), Term::Pi(_, d2, c2)) => {
            consistent(env, d, d2) && consistent(env, c, c2)
        }
        // Lambda annotations are not compared.
        (Term::Lam(_, _, b1), Term::Lam(_, _, b2)) => consistent(env, b1, b2),
        (Term::App(f, x), Term::App(g, y)) => consistent(env, f, g) && consistent(env, x, y),
        (
            Term::If {
                scrut: s1,
                then_br: t1,
                else_br: e1,
                ..
            },
            Term::If {
                scrut: s2,
                then_br: t2,
                else_br: e2,
                ..
            },
        ) => consistent(env, s1, s2) && consistent(env, t1, t2) && consistent(env, e1, e2),
        // The carrier type is not compared, only the endpoints.
        (
            Term::Eq { lhs: l1, rhs: r1, .. },
            Term::Eq { lhs: l2, rhs: r2, .. },
        ) => consistent(env, l1, l2) && consistent(env, r1, r2),
        // refl compares by evidence.
        (Term::Refl { ev: e1, .. }, Term::Refl { ev: e2, .. }) => consistent(env, e1, e2),
        (
            Term::Subst {
                ty: a1,
                motive: a2,
                from: a3,
                to: a4,
                body: a5,
                eq: a6,
            },
            Term::Subst {
                ty: b1,
                motive: b2,
                from: b3,
                to: b4,
                body: b5,
                eq: b6,
            },
        ) => {
            consistent(env, a1, b1)
                && consistent(env, a2, b2)
                && consistent(env, a3, b3)
                && consistent(env, a4, b4)
                && consistent(env, a5, b5)
                && consistent(env, a6, b6)
        }
        (Term::TyCon { ind: i1, args: x }, Term::TyCon { ind: i2, args: y }) => {
            i1 == i2 && x.len() == y.len() && x.iter().zip(y).all(|(a, b)| consistent(env, a, b))
        }
        (
            Term::Ctor {
                ind: i1,
                ctor: c1,
                params: p1,
                fields: f1,
            },
            Term::Ctor {
                ind: i2,
                ctor: c2,
                params: p2,
                fields: f2,
            },
        ) => {
            i1 == i2
                && c1 == c2
                && p1.len() == p2.len()
                && f1.len() == f2.len()
                && p1.iter().zip(p2).all(|(a, b)| consistent(env, a, b))
                && f1.iter().zip(f2).all(|(a, b)| consistent(env, a, b))
        }
        (
            Term::Ind {
                ind: i1,
                scrut: s1,
                branches: b1,
                ..
            },
            Term::Ind {
                ind: i2,
                scrut: s2,
                branches: b2,
                ..
            },
        ) => {
            i1 == i2
                && b1.len() == b2.len()
                && consistent(env, s1, s2)
                && b1
                    .iter()
                    .zip(b2)
                    .all(|(x, y)| consistent(env, &x.body, &y.body))
        }
        _ => false,
    }
}

/// Is `?` consistent with `v`? Each part of `v` must itself be consistent
/// with `?` — so anything containing `err` is not.
fn unk_consistent(env: &Env, v: &Term) -> bool {
    match v {
        Term::Unk(_) | Term::Var(_) | Term::Type(_) | Term::Bool | Term::True | Term::False => {
            true
        }
        Term::Err(_) => false,
        Term::Pi(_, d, c) => unk_consistent(env, d) && unk_consistent(env, c),
        Term::Lam(_, _, body) => unk_consistent(env, body),
        Term::App(f, a) => unk_consistent(env, f) && unk_consistent(env, a),
        Term::If {
            scrut,
            then_br,
            else_br,
            ..
        } => {
            unk_consistent(env, scrut)
                && unk_consistent(env, then_br)
                && unk_consistent(env, else_br)
        }
        Term::Cast { body, .. } | Term::Tagged { body, .. } => unk_consistent(env, body),
        Term::Eq { lhs, rhs, .. } => unk_consistent(env, lhs) && unk_consistent(env, rhs),
        Term::Refl { ev, .. } => unk_consistent(env, ev),
        Term::Subst {
            ty,
            motive,
            from,
            to,
            body,
            eq,
        } => [ty, motive, from, to, body, eq]
            .iter()
            .all(|x| unk_consistent(env, x)),
        Term::Meet { lhs, rhs, .. } => unk_consistent(env, lhs) && unk_consistent(env, rhs),
        Term::TyCon { args, .. } => args.iter().all(|a| unk_consistent(env, a)),
        Term::Ctor { params, fields, .. } => params
            .iter()
            .chain(fields.iter())
            .all(|a| unk_consistent(env, a)),
        Term::Ind {
            scrut, branches, ..
        } => {
            unk_consistent(env, scrut)
                && branches.iter().all(|b| unk_consistent(env, &b.body))
        }
    }
}

/// Synthesize a type for `t` and normalize it; `None` when `t` is ill-typed.
fn synth_normal(env: &Env, ctx: &Context, t: &Term) -> Option<Term> {
    let checker = Checker::new(env);
    let ty = checker.synth(ctx, t).ok()?;
    normalize::norm_type(env, ctx, &ty).ok()
}

fn reduce(env: &Env, t: &Term) -> Term {
    let mut m = Machine::new(env, EvalMode::Approximate, DEFAULT_CEILING);
    m.norm_full(t).unwrap_or_else(|_| t.clone())
}

/// Decidable, sound-but-incomplete directed precision: syntactic structural
/// congruences, the generating rules for `?` and `err`, and the meet bound
/// axioms. No transitivity search, no cast-law search. When the syntactic
/// rules fail, both sides are normalized once and retried (PrecNorm), which
/// keeps the check stable under reduction of subterms.
pub fn precision_check(env: &Env, ctx: &Context, t1: &Term, t2: &Term) -> bool {
    if precision_check_syntactic(env, ctx, t1, t2) {
        return true;
    }
    let n1 = reduce(env, t1);
    let n2 = reduce(env, t2);
    if n1 == *t1 && n2 == *t2 {
        return false;
    }
    precision_check_syntactic(env, ctx, &n1, &n2)
}

fn precision_check_syntactic(env: &Env, ctx: &Context, t1: &Term, t2: &Term) -> bool {
    let precision_check = precision_check_syntactic;
    // PrecAxRefl
    if alpha_eq(t1, t2) {
        return true;
    }
    // PrecGenErr: err at the type t2 synthesizes.
    if let Term::Err(ty) = t1 {
        if let Some(v) = synth_normal(env, ctx, t2) {
            if let Ok(tn) = normalize::norm_type(env, ctx, ty) {
                if alpha_eq(&tn, &v) {
                    return true;
                }
            }
        }
    }
    // PrecGenUnk: anything below `?` at its synthesized type.
    if let Term::Unk(ty) = t2 {
        if let Some(v) = synth_normal(env, ctx, t1) {
            if let Ok(tn) = normalize::norm_type(env, ctx, ty) {
                if alpha_eq(&tn, &v) {
                    return true;
                }
            }
        }
    }
    // PrecAxCastBot: a cast of err is below err at the target type.
    if let (
        Term::Cast {
            dst, body, ..
        },
        Term::Err(t2ty),
    ) = (t1, t2)
    {
        if body.is_err() && alpha_eq(dst, t2ty) {
            return true;
        }
    }
    // PrecAxBound: a meet is below each of its halves.
    if let Term::Meet { lhs, rhs, .. } = t1 {
        if alpha_eq(lhs, t2) || alpha_eq(rhs, t2) {
            return true;
        }
    }
    // PrecAxGreatest: below both halves means below the meet.
    if let Term::Meet { lhs, rhs, .. } = t2 {
        if precision_check(env, ctx, t1, lhs) && precision_check(env, ctx, t1, rhs) {
            return true;
        }
    }
    // Structural congruences.
    match (t1, t2) {
        (Term::Lam(n, a1, b1), Term::Lam(_, a2, b2)) if a1 == a2 => {
            let ctx2 = ctx.extended(n.clone(), (**a1).clone());
            precision_check(env, &ctx2, b1, b2)
        }
        (
            Term::Tagged {
                tag: h1,
                level: l1,
                body: b1,
            },
            Term::Tagged {
                tag: h2,
                level: l2,
                body: b2,
            },
        ) if h1 == h2 && l1 == l2 => precision_check(env, ctx, b1, b2),
        (
            Term::If {
                ann: an1,
                scrut: s1,
                then_br: x1,
                else_br: y1,
            },
            Term::If {
                ann: an2,
                scrut: s2,
                then_br: x2,
                else_br: y2,
            },
        ) if an1 == an2 => {
            precision_check(env, ctx, s1, s2)
                && precision_check(env, ctx, x1, x2)
                && precision_check(env, ctx, y1, y2)
        }
        (
            Term::Cast {
                src: s1,
                dst: d1,
                body: b1,
            },
            Term::Cast {
                src: s2,
                dst: d2,
                body: b2,
            },
        ) if s1 == s2 && d1 == d2 => precision_check(env, ctx, b1, b2),
        (Term::Pi(n, d1, c1), Term::Pi(_, d2, c2)) => {
            if !precision_check(env, ctx, d1, d2) {
                return false;
            }
            // Compare codomains with the bound variable cast to the more
            // precise domain.
            let argcast = Term::Cast {
                src: shift(d2, 1).rc(),
                dst: shift(d1, 1).rc(),
                body: Term::Var(0).rc(),
            };
            let c1s = crate::subst::subst0(c1, &argcast);
            // c1s lives under the d2 binder now.
            let ctx2 = ctx.extended(n.clone(), (**d2).clone());
            precision_check(env, &ctx2, &c1s, c2)
        }
        (
            Term::Eq {
                lhs: a1,
                ty: q1,
                rhs: b1,
            },
            Term::Eq {
                lhs: a2,
                ty: q2,
                rhs: b2,
            },
        ) => {
            if !precision_check(env, ctx, q1, q2) {
                return false;
            }
            let castl = Term::Cast {
                src: q1.clone(),
                dst: q2.clone(),
                body: a1.clone(),
            };
            let castr = Term::Cast {
                src: q1.clone(),
                dst: q2.clone(),
                body: b1.clone(),
            };
            let cl = reduce(env, &castl);
            let cr = reduce(env, &castr);
            let a2r = reduce(env, a2);
            let b2r = reduce(env, b2);
            precision_check(env, ctx, &cl, &a2r) && precision_check(env, ctx, &cr, &b2r)
        }
        (
            Term::Refl {
                ev: e1,
                lhs: l1,
                rhs: r1,
            },
            Term::Refl {
                ev: e2,
                lhs: l2,
                rhs: r2,
            },
        ) if l1 == l2 && r1 == r2 => precision_check(env, ctx, e1, e2),
        (Term::App(f1, a1), Term::App(f2, a2)) => {
            // Admissible simple-application congruence (PrecAdSimpleApp).
            precision_check(env, ctx, f1, f2) && precision_check(env, ctx, a1, a2)
        }
        (
            Term::Meet {
                lhs: a1,
                rhs: b1,
                ty: q1,
            },
            Term::Meet {
                lhs: a2,
                rhs: b2,
                ty: q2,
            },
        ) if q1 == q2 => {
            precision_check(env, ctx, a1, a2) && precision_check(env, ctx, b1, b2)
        }
        (Term::Unk(x), Term::Unk(y)) | (Term::Err(x), Term::Err(y)) => {
            precision_check(env, ctx, x, y)
        }
        (Term::TyCon { ind: i1, args: x }, Term::TyCon { ind: i2, args: y }) => {
            i1 == i2
                && x.len() == y.len()
                && x
                    .iter()
                    .zip(y)
                    .all(|(a, b)| precision_check(env, ctx, a, b))
        }
        (
            Term::Ctor {
                ind: i1,
                ctor: c1,
                params: p1,
                fields: f1,
            },
            Term::Ctor {
                ind: i2,
                ctor: c2,
                params: p2,
                fields: f2,
            },
        ) => {
            i1 == i2
                && c1 == c2
                && p1.len() == p2.len()
                && f1.len() == f2.len()
                && p1
                    .iter()
                    .zip(p2)
                    .all(|(a, b)| precision_check(env, ctx, a, b))
                && f1
                    .iter()
                    .zip(f2)
                    .all(|(a, b)| precision_check(env, ctx, a, b))
        }
        (
            Term::Subst {
                ty: a1,
                motive: a2,
                from: a3,
                to: a4,
                body: a5,
                eq: a6,
            },
            Term::Subst {
                ty: b1,
                motive: b2,
                from: b3,
                to: b4,
                body: b5,
                eq: b6,
            },
        ) => {
            precision_check(env, ctx, a1, b1)
                && precision_check(env, ctx, a2, b2)
                && precision_check(env, ctx, a3, b3)
                && precision_check(env, ctx, a4, b4)
                && precision_check(env, ctx, a5, b5)
                && precision_check(env, ctx, a6, b6)
        }
        _ => false,
    }
}

/// Three-valued oracle verdict. `Unknown` means the search hit its depth
/// bound somewhere; it is never reported as a definite refusal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Derivable,
    NotDerivable,
    Unknown,
}

/// Bounded proof search over the full algebraic-precision rule set,
/// including the transitivity and cast axioms. Test-only strength: the
/// search is goal-directed, with transitivity pivots drawn from the subterm
/// closure of the goal plus `?`/`err` at the synthesized type.
pub fn precision_oracle(
    env: &Env,
    ctx: &Context,
    t1: &Term,
    t2: &Term,
    depth: usize,
) -> OracleVerdict {
    let mut search = OracleSearch {
        env,
        cut: false,
    };
    let hit = search.prove(ctx, t1, t2, depth);
    if hit {
        OracleVerdict::Derivable
    } else if search.cut {
        OracleVerdict::Unknown
    } else {
        OracleVerdict::NotDerivable
    }
}

struct OracleSearch<'e> {
    env: &'e Env,
    cut: bool,
}

impl<'e> OracleSearch<'e> {
    fn prove(&mut self, ctx: &Context, t1: &Term, t2: &Term, depth: usize) -> bool {
        if precision_check(self.env, ctx, t1, t2) {
            return true;
        }
        if depth == 0 {
            self.cut = true;
            return false;
        }
        let d = depth - 1;
        // PrecNorm: compare normal forms.
        let n1 = reduce(self.env, t1);
        let n2 = reduce(self.env, t2);
        if (n1 != *t1 || n2 != *t2) && self.prove(ctx, &n1, &n2, d) {
            return true;
        }
        // PrecAxUpDown: t ⊑ <T1 <= T2><T2 <= T1>t when T1 ⊑* T2.
        if let Term::Cast {
            src: t2s,
            dst: t1d,
            body,
        } = t2
        {
            if let Term::Cast {
                src: inner_src,
                dst: inner_dst,
                body: inner_body,
            } = &**body
            {
                if inner_dst == t2s
                    && inner_src == t1d
                    && self.prove(ctx, t1, inner_body, d)
                    && self.prove_star(ctx, inner_src, inner_dst, d)
                {
                    return true;
                }
            }
        }
        // PrecAxDownUp: <T1 <= T2><T2 <= T1>t ⊑ t when T1 ⊑* T2.
        if let Term::Cast {
            src: t1s,
            dst: t1d,
            body,
        } = t1
        {
            if let Term::Cast {
                src: inner_src,
                dst: inner_dst,
                body: inner_body,
            } = &**body
            {
                if inner_dst == t1s
                    && inner_src == t1d
                    && self.prove(ctx, inner_body, t2, d)
                    && self.prove_star(ctx, inner_dst, inner_src, d)
                {
                    return true;
                }
            }
            // PrecAxComposeUp (collapse direction):
            // <T3 <= T2><T2 <= T1>t ⊒⊑ <T3 <= T1>t with T1 ⊑* T2 ⊑* T3.
            if let (
                Term::Cast {
                    src: i_src,
                    dst: i_dst,
                    body: i_body,
                },
                Term::Cast {
                    src: o_src,
                    dst: o_dst,
                    body: o_body,
                },
            ) = (&**body, t2)
            {
                if i_dst == t1s
                    && alpha_eq(i_src, o_src)
                    && alpha_eq(t1d, o_dst)
                    && alpha_eq(i_body, o_body)
                    && self.prove_star(ctx, i_src, i_dst, d)
                    && self.prove_star(ctx, i_dst, t1d, d)
                {
                    return true;
                }
            }
        }
        // PrecAxComposeUp (expansion direction).
        if let (
            Term::Cast {
                src: s1,
                dst: d1,
                body: b1,
            },
            Term::Cast {
                src: s2,
                dst: d2,
                body: b2,
            },
        ) = (t1, t2)
        {
            if let Term::Cast {
                src: i_src,
                dst: i_dst,
                body: i_body,
            } = &**b2
            {
                if alpha_eq(s1, i_src)
                    && alpha_eq(d1, d2)
                    && i_dst == s2
                    && alpha_eq(b1, i_body)
                    && self.prove_star(ctx, i_src, i_dst, d)
                    && self.prove_star(ctx, i_dst, d1, d)
                {
                    return true;
                }
            }
            // PrecAxIntermed / PrecAxThrough: casting through a more precise
            // intermediate is below casting through a less precise one.
            if let (
                Term::Cast {
                    src: a_src,
                    dst: a_mid,
                    body: a_body,
                },
                Term::Cast {
                    src: b_src,
                    dst: b_mid,
                    body: b_body,
                },
            ) = (&**b1, &**b2)
            {
                if alpha_eq(a_src, b_src)
                    && alpha_eq(d1, d2)
                    && alpha_eq(a_body, b_body)
                    && a_mid == s1
                    && b_mid == s2
                    && self.prove_star(ctx, s1, s2, d)
                {
                    return true;
                }
            }
        }
        // PrecAxEta: a function cast is below its eta-expansion.
        if let (
            Term::Cast {
                src: ps,
                dst: pd,
                body: f,
            },
            Term::Lam(_, _, lam_body),
        ) = (t1, t2)
        {
            if let (Term::Pi(_, d1t, c1t), Term::Pi(_, d2t, c2t)) = (&**ps, &**pd) {
                let argcast = Term::Cast {
                    src: shift(d2t, 1).rc(),
                    dst: shift(d1t, 1).rc(),
                    body: Term::Var(0).rc(),
                };
                let expanded = Term::Cast {
                    src: crate::subst::subst0(c1t, &argcast).rc(),
                    dst: c2t.clone(),
                    body: Term::App(shift(f, 1).rc(), argcast.rc()).rc(),
                };
                if self.prove(
                    &ctx.extended(crate::term::Name(None), (**d2t).clone()),
                    &expanded,
                    lam_body,
                    d,
                ) {
                    return true;
                }
            }
        }
        // Congruence through mismatched outer casts, via transitivity with
        // the cast-stripped inner bodies as pivots.
        let mut pivots: Vec<Term> = Vec::new();
        if let Term::Cast { body, .. } = t1 {
            pivots.push((**body).clone());
        }
        if let Term::Cast { body, .. } = t2 {
            pivots.push((**body).clone());
        }
        if let Some(v) = synth_normal(self.env, ctx, t2) {
            pivots.push(Term::Unk(v.rc()));
        }
        pivots.push(n1.clone());
        pivots.push(n2.clone());
        for mid in pivots {
            if alpha_eq(&mid, t1) || alpha_eq(&mid, t2) {
                continue;
            }
            if self.prove(ctx, t1, &mid, d) && self.prove(ctx, &mid, t2, d) {
                return true;
            }
        }
        false
    }

    /// ⊑C* — precision modulo normalization.
    fn prove_star(&mut self, ctx: &Context, t1: &Term, t2: &Term, depth: usize) -> bool {
        let n1 = reduce(self.env, t1);
        let n2 = reduce(self.env, t2);
        self.prove(ctx, &n1, &n2, depth)
    }
}
