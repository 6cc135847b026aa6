//! Bidirectional typechecker for the cast calculus. Synthesis covers every
//! form (the calculus carries enough annotations); conversion is the only
//! checking rule, comparing normal forms up to alpha.

use thiserror::Error;

use crate::context::Context;
use crate::germ::germ_no_pi;
use crate::normalize::norm_type;
use crate::relations::precision_check;
use crate::sig::Env;
use crate::subst::{alpha_eq, occurs_free, subst0, subst_many};
use crate::term::{Level, Name, Term, TypeTag};

#[derive(Debug, Error)]
pub enum TypeError {
    #[error("[{rule}] {msg}")]
    Rule { rule: &'static str, msg: String },
    #[error("[CConv] type mismatch:\n  expected: {expected}\n  found:    {found}")]
    Mismatch { expected: String, found: String },
    #[error("normalization failed during type checking: {0}")]
    Norm(#[from] crate::normalize::EngineError),
}

fn fail<T>(rule: &'static str, msg: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError::Rule {
        rule,
        msg: msg.into(),
    })
}

/// Synthesized type plus the trace of rules applied, in application order.
#[derive(Debug, Clone)]
pub struct TypingReport {
    pub ty: Term,
    pub rules: Vec<&'static str>,
}

pub struct Checker<'e> {
    pub env: &'e Env,
    /// Exact-mode terms may tag functions that use their argument.
    pub allow_tagfun_args: bool,
    rules: std::cell::RefCell<Vec<&'static str>>,
}

impl<'e> Checker<'e> {
    pub fn new(env: &'e Env) -> Checker<'e> {
        Checker {
            env,
            allow_tagfun_args: false,
            rules: std::cell::RefCell::new(Vec::new()),
        }
    }

    pub fn lenient_tags(mut self) -> Self {
        self.allow_tagfun_args = true;
        self
    }

    fn rule(&self, name: &'static str) {
        self.rules.borrow_mut().push(name);
    }

    pub fn report(&self, ty: Term) -> TypingReport {
        TypingReport {
            ty,
            rules: self.rules.borrow().clone(),
        }
    }

    fn norm(&self, ctx: &Context, t: &Term) -> Result<Term, TypeError> {
        Ok(norm_type(self.env, ctx, t)?)
    }

    /// The universe a type lives in: synthesize and reduce to `Type l`.
    pub fn universe_of(&self, ctx: &Context, ty: &Term) -> Result<Level, TypeError> {
        let k = self.synth(ctx, ty)?;
        match self.norm(ctx, &k)? {
            Term::Type(l) => Ok(l),
            other => fail(
                "CConv",
                format!(
                    "expected a type, but it synthesizes {}",
                    crate::pretty::pretty(&other)
                ),
            ),
        }
    }

    pub fn synth(&self, ctx: &Context, t: &Term) -> Result<Term, TypeError> {
        match t {
            Term::Var(i) => {
                self.rule("CVar");
                ctx.lookup(*i)
                    .ok_or_else(|| TypeError::Rule {
                        rule: "CVar",
                        msg: format!("unbound variable {i}"),
                    })
            }
            Term::Type(l) => {
                self.rule("CType");
                Ok(Term::Type(l.succ()))
            }
            Term::Bool => {
                self.rule("CBool");
                Ok(Term::ty(0))
            }
            Term::True | Term::False => {
                self.rule("CTF");
                Ok(Term::Bool)
            }
            Term::Pi(n, dom, cod) => {
                self.rule("CPi");
                let l1 = self.universe_of(ctx, dom)?;
                let ctx2 = ctx.extended(n.clone(), (**dom).clone());
                let l2 = self.universe_of(&ctx2, cod)?;
                Ok(Term::Type(l1.max(l2)))
            }
            Term::Lam(n, ann, body) => {
                self.rule("CLam");
                self.universe_of(ctx, ann)?;
                let ctx2 = ctx.extended(n.clone(), (**ann).clone());
                let t2 = self.synth(&ctx2, body)?;
                Ok(Term::Pi(n.clone(), ann.clone(), t2.rc()))
            }
            Term::App(f, a) => {
                self.rule("CApp");
                let fty = self.synth(ctx, f)?;
                match self.norm(ctx, &fty)? {
                    Term::Pi(_, dom, cod) => {
                        self.check(ctx, a, &dom)?;
                        Ok(subst0(&cod, a))
                    }
                    other => fail(
                        "CApp",
                        format!(
                            "application head has non-function type {}",
                            crate::pretty::pretty(&other)
                        ),
                    ),
                }
            }
            Term::If {
                ann,
                scrut,
                then_br,
                else_br,
            } => {
                self.rule("CIf");
                self.check(ctx, scrut, &Term::Bool)?;
                self.universe_of(ctx, ann)?;
                self.check(ctx, then_br, ann)?;
                self.check(ctx, else_br, ann)?;
                Ok((**ann).clone())
            }
            Term::Unk(ty) => {
                self.rule("CUnk");
                self.universe_of(ctx, ty)?;
                Ok((**ty).clone())
            }
            Term::Err(ty) => {
                self.rule("CErr");
                self.universe_of(ctx, ty)?;
                Ok((**ty).clone())
            }
            Term::Cast { src, dst, body } => {
                self.rule("CCast");
                let l = self.universe_of(ctx, src)?;
                self.check(ctx, body, src)?;
                self.check(ctx, dst, &Term::Type(l))?;
                Ok((**dst).clone())
            }
            Term::Tagged { tag, level, body } => {
                if *tag == TypeTag::Pi {
                    self.rule("CTagFun");
                    match &**body {
                        Term::Lam(_, ann, inner) => {
                            if ann.as_unk_type() != Some(*level) {
                                return fail(
                                    "CTagFun",
                                    "tagged function domain must be the unknown type",
                                );
                            }
                            if !self.allow_tagfun_args && occurs_free(inner, 0) {
                                return fail(
                                    "CTagFun",
                                    "tagged function must not refer to its argument",
                                );
                            }
                            let ctx2 = ctx.extended(Name(None), Term::unk_type(*level));
                            self.check(&ctx2, inner, &Term::unk_type(*level))?;
                            Ok(Term::unk_type(*level))
                        }
                        _ => fail("CTagFun", "Pi-tagged payload must be a function"),
                    }
                } else {
                    self.rule("CTag");
                    let g = germ_no_pi(self.env, tag, *level).ok_or_else(|| TypeError::Rule {
                        rule: "CTag",
                        msg: format!("tag {tag} has no germ at level {}", level.0),
                    })?;
                    self.check(ctx, body, &g)?;
                    Ok(Term::unk_type(*level))
                }
            }
            Term::Eq { lhs, ty, rhs } => {
                self.rule("CEq");
                let l = self.universe_of(ctx, ty)?;
                self.check(ctx, lhs, ty)?;
                self.check(ctx, rhs, ty)?;
                Ok(Term::Type(l))
            }
            Term::Refl { ev, lhs, rhs } => {
                self.rule("CRefl");
                let t = self.synth(ctx, ev)?;
                self.check(ctx, lhs, &t)?;
                self.check(ctx, rhs, &t)?;
                if !precision_check(self.env, ctx, ev, lhs) {
                    return fail(
                        "CRefl",
                        format!(
                            "evidence {} is not at least as precise as {}",
                            crate::pretty::pretty(ev),
                            crate::pretty::pretty(lhs)
                        ),
                    );
                }
                if !precision_check(self.env, ctx, ev, rhs) {
                    return fail(
                        "CRefl",
                        format!(
                            "evidence {} is not at least as precise as {}",
                            crate::pretty::pretty(ev),
                            crate::pretty::pretty(rhs)
                        ),
                    );
                }
                Ok(Term::Eq {
                    lhs: lhs.clone(),
                    ty: t.rc(),
                    rhs: rhs.clone(),
                })
            }
            Term::Subst {
                ty,
                motive,
                from,
                to,
                body,
                eq,
            } => {
                self.rule("CSubst");
                self.universe_of(ctx, ty)?;
                let tyn = self.norm(ctx, ty)?;
                let mty = self.synth(ctx, motive)?;
                match self.norm(ctx, &mty)? {
                    Term::Pi(_, dom, cod) => {
                        if !alpha_eq(&dom, &tyn.clone().rc()) {
                            return fail("CSubst", "motive domain does not match the subject type");
                        }
                        match &*cod {
                            Term::Type(_) => {}
                            _ => return fail("CSubst", "motive must produce a type"),
                        }
                    }
                    _ => return fail("CSubst", "motive must be a function into a universe"),
                }
                self.check(ctx, from, &tyn)?;
                self.check(ctx, to, &tyn)?;
                self.check(ctx, body, &Term::App(motive.clone(), from.clone()))?;
                self.check(
                    ctx,
                    eq,
                    &Term::Eq {
                        lhs: from.clone(),
                        ty: tyn.rc(),
                        rhs: to.clone(),
                    },
                )?;
                Ok(Term::App(motive.clone(), to.clone()))
            }
            Term::Meet { lhs, rhs, ty } => {
                self.rule("CComp");
                self.universe_of(ctx, ty)?;
                self.check(ctx, lhs, ty)?;
                self.check(ctx, rhs, ty)?;
                Ok((**ty).clone())
            }
            Term::TyCon { ind, args } => {
                self.rule("CTyCon");
                let sig = self
                    .env
                    .lookup(ind)
                    .ok_or_else(|| TypeError::Rule {
                        rule: "CTyCon",
                        msg: format!("unknown inductive {ind}"),
                    })?
                    .clone();
                if args.len() != sig.params.len() {
                    return fail(
                        "CTyCon",
                        format!(
                            "{ind} expects {} parameters, got {}",
                            sig.params.len(),
                            args.len()
                        ),
                    );
                }
                let ptys = sig.param_types_at(args);
                for (a, pty) in args.iter().zip(ptys.iter()) {
                    self.check(ctx, a, pty)?;
                }
                Ok(Term::Type(sig.level))
            }
            Term::Ctor {
                ind,
                ctor,
                params,
                fields,
            } => {
                self.rule("CCtor");
                let sig = self
                    .env
                    .lookup(ind)
                    .ok_or_else(|| TypeError::Rule {
                        rule: "CCtor",
                        msg: format!("unknown inductive {ind}"),
                    })?
                    .clone();
                if *ctor >= sig.ctors.len() {
                    return fail("CCtor", "unknown constructor");
                }
                if params.len() != sig.params.len() {
                    return fail("CCtor", "wrong number of parameters");
                }
                if fields.len() != sig.ctors[*ctor].fields.len() {
                    return fail(
                        "CCtor",
                        format!(
                            "constructor {} expects {} arguments, got {}",
                            sig.ctors[*ctor].name,
                            sig.ctors[*ctor].fields.len(),
                            fields.len()
                        ),
                    );
                }
                let ptys = sig.param_types_at(params);
                for (a, pty) in params.iter().zip(ptys.iter()) {
                    self.check(ctx, a, pty)?;
                }
                let ftys = sig.field_types_at(*ctor, params, fields);
                for (f, fty) in fields.iter().zip(ftys.iter()) {
                    self.check(ctx, f, fty)?;
                }
                Ok(Term::TyCon {
                    ind: ind.clone(),
                    args: params.clone(),
                })
            }
            Term::Ind {
                ind,
                n_idx,
                motive,
                scrut,
                branches,
            } => {
                self.rule("CInd");
                let sig = self
                    .env
                    .lookup(ind)
                    .ok_or_else(|| TypeError::Rule {
                        rule: "CInd",
                        msg: format!("unknown inductive {ind}"),
                    })?
                    .clone();
                if *n_idx != sig.n_idx_params {
                    return fail("CInd", "ind form disagrees with the inductive's index arity");
                }
                let sty = self.synth(ctx, scrut)?;
                let args = match self.norm(ctx, &sty)? {
                    Term::TyCon { ind: i2, args } if i2 == *ind => args,
                    other => {
                        return fail(
                            "CInd",
                            format!(
                                "scrutinee has type {}, not an application of {ind}",
                                crate::pretty::pretty(&other)
                            ),
                        )
                    }
                };
                let n_orig = sig.params.len() - sig.n_idx_params;
                let orig = &args[..n_orig];
                let idx_actual = &args[n_orig..];
                // Motive is scoped under the index telescope plus the
                // scrutinee; check it produces a type.
                let mut mctx = ctx.clone();
                for i in 0..*n_idx {
                    let (nm, pty) = &sig.params[n_orig + i];
                    let mut inst: Vec<Term> =
                        orig.iter().map(|p| crate::subst::shift(p, i as isize)).collect();
                    for j in 0..i {
                        inst.push(Term::Var(i - 1 - j));
                    }
                    let refs: Vec<&Term> = inst.iter().collect();
                    mctx.push(nm.clone(), subst_many(pty, &refs));
                }
                let scrut_ty_here = {
                    let mut a: Vec<Term> = orig
                        .iter()
                        .map(|p| crate::subst::shift(p, *n_idx as isize))
                        .collect();
                    for i in 0..*n_idx {
                        a.push(Term::Var(*n_idx - 1 - i));
                    }
                    Term::TyCon {
                        ind: ind.clone(),
                        args: a,
                    }
                };
                mctx.push(Name::named("z"), scrut_ty_here);
                self.universe_of(&mctx, motive)?;

                if branches.len() != sig.ctors.len() {
                    return fail("CInd", "wrong number of branches");
                }
                let motive_at = |idx: &[Term], z: &Term| -> Term {
                    let mut a: Vec<&Term> = idx.iter().collect();
                    a.push(z);
                    subst_many(motive, &a)
                };
                // Self-reference type: (i.. : Idx) -> (z : C orig i..) -> motive i.. z
                let self_ty = {
                    let mut ty = {
                        let mut a: Vec<Term> = orig
                            .iter()
                            .map(|p| crate::subst::shift(p, *n_idx as isize))
                            .collect();
                        for i in 0..*n_idx {
                            a.push(Term::Var(*n_idx - 1 - i));
                        }
                        let scrut_ty = Term::TyCon {
                            ind: ind.clone(),
                            args: a,
                        };
                        // The motive's binders line up with the Pi telescope
                        // being built, so its body is the codomain directly.
                        Term::Pi(Name::named("z"), scrut_ty.rc(), motive.clone())
                    };
                    for i in (0..*n_idx).rev() {
                        let (nm, pty) = &sig.params[n_orig + i];
                        let mut inst: Vec<Term> = orig
                            .iter()
                            .map(|p| crate::subst::shift(p, i as isize))
                            .collect();
                        for j in 0..i {
                            inst.push(Term::Var(i - 1 - j));
                        }
                        let refs: Vec<&Term> = inst.iter().collect();
                        ty = Term::Pi(nm.clone(), subst_many(pty, &refs).rc(), ty.rc());
                    }
                    ty
                };
                for (c, branch) in branches.iter().enumerate() {
                    let csig = &sig.ctors[c];
                    if branch.n_fields != csig.fields.len() {
                        return fail(
                            "CInd",
                            format!("branch for {} has wrong arity", csig.name),
                        );
                    }
                    let mut bctx = ctx.extended(Name::named("rec"), self_ty.clone());
                    // Field types instantiated at the scrutinee's parameters,
                    // with earlier fields as variables.
                    for (fi, (fname, fty)) in csig.fields.iter().enumerate() {
                        // scope of fty: [params..., fields[..fi]]
                        let mut inst: Vec<Term> = args
                            .iter()
                            .map(|p| crate::subst::shift(p, (fi + 1) as isize))
                            .collect();
                        for j in 0..fi {
                            inst.push(Term::Var(fi - 1 - j));
                        }
                        let refs: Vec<&Term> = inst.iter().collect();
                        bctx.push(fname.clone(), subst_many(fty, &refs));
                    }
                    // Goal: motive at the constructed value.
                    let shift_by = (1 + branch.n_fields) as isize;
                    let ctor_val = Term::Ctor {
                        ind: ind.clone(),
                        ctor: c,
                        params: args
                            .iter()
                            .map(|p| crate::subst::shift(p, shift_by))
                            .collect(),
                        fields: (0..branch.n_fields)
                            .map(|i| Term::Var(branch.n_fields - 1 - i))
                            .collect(),
                    };
                    let idx_shifted: Vec<Term> = idx_actual
                        .iter()
                        .map(|p| crate::subst::shift(p, shift_by))
                        .collect();
                    // Shift the motive's free variables into the branch scope
                    // before instantiating its binders.
                    let motive_here = crate::subst::shift_above(motive, *n_idx + 1, shift_by);
                    let goal = {
                        let mut a: Vec<&Term> = idx_shifted.iter().collect();
                        a.push(&ctor_val);
                        subst_many(&motive_here, &a)
                    };
                    self.check(&bctx, &branch.body, &goal)?;
                    self.guard_check(branch.n_fields, &branch.body, &sig, c)?;
                }
                Ok(motive_at(idx_actual, scrut))
            }
        }
    }

    /// Structural-recursion guard: the self-reference may only be applied,
    /// through the index arguments, to a recursive field of the matched
    /// constructor.
    fn guard_check(
        &self,
        n_fields: usize,
        body: &Term,
        sig: &crate::sig::InductiveSig,
        ctor: usize,
    ) -> Result<(), TypeError> {
        let n_idx = sig.n_idx_params;
        // In the branch body, de Bruijn index of `self` is n_fields; fields
        // occupy 0..n_fields (innermost = last field).
        let self_idx = n_fields;
        let recursive_fields: Vec<usize> = (0..n_fields)
            .filter(|f| sig.field_is_recursive(ctor, *f))
            .collect();
        fn scan(
            t: &Term,
            depth: usize,
            self_idx: usize,
            n_fields: usize,
            n_idx: usize,
            rec_fields: &[usize],
            ok: &mut bool,
        ) {
            // Does this application spine validly use self?
            if let Term::App(_, _) = t {
                let mut spine = Vec::new();
                let mut head = t;
                while let Term::App(f, a) = head {
                    spine.push(a);
                    head = f;
                }
                spine.reverse();
                if let Term::Var(i) = head {
                    if *i >= depth && i - depth == self_idx {
                        // self applied: needs >= n_idx + 1 args and the
                        // (n_idx)-th must be a recursive field variable.
                        if spine.len() >= n_idx + 1 {
                            if let Term::Var(j) = &**spine[n_idx] {
                                if *j >= depth {
                                    let field_pos_from_inner = j - depth;
                                    if field_pos_from_inner < n_fields {
                                        let field = n_fields - 1 - field_pos_from_inner;
                                        if rec_fields.contains(&field) {
                                            // Arguments themselves may not
                                            // mention self.
                                            for a in &spine {
                                                scan_no_self(
                                                    a, depth, self_idx, ok,
                                                );
                                            }
                                            return;
                                        }
                                    }
                                }
                            }
                        }
                        *ok = false;
                        return;
                    }
                }
                // Not a self spine: scan parts.
                scan(
                    head, depth, self_idx, n_fields, n_idx, rec_fields, ok,
                );
                for a in spine {
                    scan(a, depth, self_idx, n_fields, n_idx, rec_fields, ok);
                }
                return;
            }
            if let Term::Var(i) = t {
                if *i >= depth && i - depth == self_idx {
                    // Bare (unapplied) self-reference: reject.
                    *ok = false;
                }
                return;
            }
            each_child(t, depth, &mut |c, d| {
                scan(c, d, self_idx, n_fields, n_idx, rec_fields, ok)
            });
        }
        fn scan_no_self(t: &Term, depth: usize, self_idx: usize, ok: &mut bool) {
            if let Term::Var(i) = t {
                if *i >= depth && i - depth == self_idx {
                    *ok = false;
                }
                return;
            }
            each_child(t, depth, &mut |c, d| scan_no_self(c, d, self_idx, ok));
        }
        fn each_child(t: &Term, depth: usize, f: &mut impl FnMut(&Term, usize)) {
            match t {
                Term::Pi(_, a, b) | Term::Lam(_, a, b) => {
                    f(a, depth);
                    f(b, depth + 1);
                }
                Term::App(a, b) => {
                    f(a, depth);
                    f(b, depth);
                }
                Term::If {
                    ann,
                    scrut,
                    then_br,
                    else_br,
                } => {
                    f(ann, depth);
                    f(scrut, depth);
                    f(then_br, depth);
                    f(else_br, depth);
                }
                Term::Unk(a) | Term::Err(a) => f(a, depth),
                Term::Cast { src, dst, body } => {
                    f(src, depth);
                    f(dst, depth);
                    f(body, depth);
                }
                Term::Tagged { body, .. } => f(body, depth),
                Term::Eq { lhs, ty, rhs } => {
                    f(lhs, depth);
                    f(ty, depth);
                    f(rhs, depth);
                }
                Term::Refl { ev, lhs, rhs } => {
                    f(ev, depth);
                    f(lhs, depth);
                    f(rhs, depth);
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
                        f(x, depth);
                    }
                }
                Term::Meet { lhs, rhs, ty } => {
                    f(lhs, depth);
                    f(rhs, depth);
                    f(ty, depth);
                }
                Term::TyCon { args, .. } => args.iter().for_each(|a| f(a, depth)),
                Term::Ctor { params, fields, .. } => {
                    params.iter().for_each(|a| f(a, depth));
                    fields.iter().for_each(|a| f(a, depth));
                }
                Term::Ind {
                    motive,
                    scrut,
                    branches,
                    n_idx,
                    ..
                } => {
                    f(motive, depth + n_idx + 1);
                    f(scrut, depth);
                    for b in branches {
                        f(&b.body, depth + 1 + b.n_fields);
                    }
                }
                _ => {}
            }
        }
        let mut ok = true;
        scan(
            body,
            0,
            self_idx,
            n_fields,
            n_idx,
            &recursive_fields,
            &mut ok,
        );
        if ok {
            Ok(())
        } else {
            fail(
                "CInd",
                "self-reference must be applied to a recursive field of the matched constructor",
            )
        }
    }

    /// Checking mode: conversion (normalize both types and compare).
    pub fn check(&self, ctx: &Context, t: &Term, ty: &Term) -> Result<(), TypeError> {
        let synthesized = self.synth(ctx, t)?;
        self.rule("CConv");
        let v1 = self.norm(ctx, &synthesized)?;
        let v2 = self.norm(ctx, ty)?;
        if alpha_eq(&v1, &v2) {
            Ok(())
        } else {
            Err(TypeError::Mismatch {
                expected: crate::pretty::pretty(&v2),
                found: crate::pretty::pretty(&v1),
            })
        }
    }
}

/// Synthesize the unique type of `t`.
pub fn cast_synth(env: &Env, ctx: &Context, t: &Term) -> Result<Term, TypeError> {
    Checker::new(env).synth(ctx, t)
}

/// Synthesis with the rule trace retained.
pub fn cast_synth_report(env: &Env, ctx: &Context, t: &Term) -> Result<TypingReport, TypeError> {
    let c = Checker::new(env);
    let ty = c.synth(ctx, t)?;
    Ok(c.report(ty))
}

/// Check `t` against `ty` (which must itself be well-typed at some universe).
pub fn cast_check(env: &Env, ctx: &Context, t: &Term, ty: &Term) -> Result<(), TypeError> {
    Checker::new(env).check(ctx, t, ty)
}
