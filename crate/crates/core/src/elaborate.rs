//! Elaboration from the gradual surface language into the cast calculus:
//! bidirectional type-directed translation, level synthesis for types,
//! inductive-family desugaring, and eager evidence composition for data
//! constructors.

use std::cell::RefCell;
use std::rc::Rc;

use thiserror::Error;

use crate::context::Context;
use crate::normalize::norm_type;
use crate::relations::consistent;
use crate::sig::{check_strict_positivity, CtorSig, Env, InductiveSig};
use crate::subst::{shift, shift_above, subst_many, substitute};
use crate::surface::{shift_surface, DataDecl, Decl, DefDecl, Span, Surface, SurfaceKind};
use crate::term::{Branch, IndName, Level, Name, Term, TypeTag};
use crate::typing::Checker;

#[derive(Debug, Error)]
pub enum ElabError {
    #[error("[{rule}] {msg} (at {start}..{end})", start = span.start, end = span.end)]
    Rule {
        rule: &'static str,
        msg: String,
        span: Span,
    },
    #[error(
        "[EConsistent] inconsistent types (at {start}..{end}):\n  expected: {expected}\n  synthesized: {found}",
        start = span.start, end = span.end
    )]
    Inconsistent {
        expected: String,
        found: String,
        span: Span,
    },
    #[error("type error in elaborated core: {0}")]
    Core(#[from] crate::typing::TypeError),
    #[error("normalization failed during elaboration: {0}")]
    Norm(#[from] crate::normalize::EngineError),
}

fn fail<T>(rule: &'static str, span: Span, msg: impl Into<String>) -> Result<T, ElabError> {
    Err(ElabError::Rule {
        rule,
        msg: msg.into(),
        span,
    })
}

/// All global state the elaborator consults: declared inductives plus
/// elaborated definitions (inlined at use sites).
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub env: Env,
    pub defs: Vec<(Rc<str>, Term, Term)>,
}

impl Globals {
    pub fn lookup_def(&self, name: &str) -> Option<(&Term, &Term)> {
        self.defs
            .iter()
            .find(|(n, _, _)| &**n == name)
            .map(|(_, t, ty)| (t, ty))
    }
}

#[derive(Debug, Clone)]
pub struct ElabResult {
    pub term: Term,
    pub ty: Term,
    pub casts_inserted: usize,
    pub rules: Vec<&'static str>,
}

/// Count cast nodes in an elaborated term (the conservativity metric).
pub fn count_casts(t: &Term) -> usize {
    let mut n = 0;
    fn walk(t: &Term, n: &mut usize) {
        if let Term::Cast { .. } = t {
            *n += 1;
        }
        match t {
            Term::Pi(_, a, b) | Term::Lam(_, a, b) | Term::App(a, b) => {
                walk(a, n);
                walk(b, n);
            }
            Term::If {
                ann,
                scrut,
                then_br,
                else_br,
            } => {
                walk(ann, n);
                walk(scrut, n);
                walk(then_br, n);
                walk(else_br, n);
            }
            Term::Unk(a) | Term::Err(a) => walk(a, n),
            Term::Cast { src, dst, body } => {
                walk(src, n);
                walk(dst, n);
                walk(body, n);
            }
            Term::Tagged { body, .. } => walk(body, n),
            Term::Eq { lhs, ty, rhs } => {
                walk(lhs, n);
                walk(ty, n);
                walk(rhs, n);
            }
            Term::Refl { ev, lhs, rhs } => {
                walk(ev, n);
                walk(lhs, n);
                walk(rhs, n);
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
                    walk(x, n);
                }
            }
            Term::Meet { lhs, rhs, ty } => {
                walk(lhs, n);
                walk(rhs, n);
                walk(ty, n);
            }
            Term::TyCon { args, .. } => args.iter().for_each(|a| walk(a, n)),
            Term::Ctor { params, fields, .. } => {
                params.iter().for_each(|a| walk(a, n));
                fields.iter().for_each(|a| walk(a, n));
            }
            Term::Ind {
                motive,
                scrut,
                branches,
                ..
            } => {
                walk(motive, n);
                walk(scrut, n);
                branches.iter().for_each(|b| walk(&b.body, n));
            }
            _ => {}
        }
    }
    walk(t, &mut n);
    n
}

/// A recorded elaboration position: surface path plus the level of the type
/// the subterm was checked or synthesized at (when determinable).
#[derive(Debug, Clone)]
pub struct PositionRecord {
    pub path: Vec<usize>,
    pub level: Option<Level>,
}

pub struct Elaborator<'g> {
    pub globals: &'g Globals,
    rules: RefCell<Vec<&'static str>>,
    record: Option<RefCell<Vec<PositionRecord>>>,
    path: RefCell<Vec<usize>>,
}

impl<'g> Elaborator<'g> {
    pub fn new(globals: &'g Globals) -> Elaborator<'g> {
        Elaborator {
            globals,
            rules: RefCell::new(Vec::new()),
            record: None,
            path: RefCell::new(Vec::new()),
        }
    }

    pub fn recording(globals: &'g Globals) -> Elaborator<'g> {
        Elaborator {
            record: Some(RefCell::new(Vec::new())),
            ..Elaborator::new(globals)
        }
    }

    pub fn take_records(&self) -> Vec<PositionRecord> {
        self.record
            .as_ref()
            .map(|r| r.borrow().clone())
            .unwrap_or_default()
    }

    pub fn rules(&self) -> Vec<&'static str> {
        self.rules.borrow().clone()
    }

    fn rule(&self, name: &'static str) {
        self.rules.borrow_mut().push(name);
    }

    fn env(&self) -> &Env {
        &self.globals.env
    }

    fn checker(&self) -> Checker<'_> {
        Checker::new(self.env())
    }

    fn norm(&self, ctx: &Context, t: &Term) -> Result<Term, ElabError> {
        Ok(norm_type(self.env(), ctx, t)?)
    }

    fn record_level(&self, level: Option<Level>) {
        if let Some(rec) = &self.record {
            rec.borrow_mut().push(PositionRecord {
                path: self.path.borrow().clone(),
                level,
            });
        }
    }

    fn at<T>(
        &self,
        idx: usize,
        f: impl FnOnce(&Self) -> Result<T, ElabError>,
    ) -> Result<T, ElabError> {
        self.path.borrow_mut().push(idx);
        let r = f(self);
        self.path.borrow_mut().pop();
        r
    }

    fn at_path<T>(
        &self,
        idxs: &[usize],
        f: impl FnOnce(&Self) -> Result<T, ElabError>,
    ) -> Result<T, ElabError> {
        for i in idxs {
            self.path.borrow_mut().push(*i);
        }
        let r = f(self);
        for _ in idxs {
            self.path.borrow_mut().pop();
        }
        r
    }

    /// The universe a normal type lives at.
    fn level_of_type(&self, ctx: &Context, v: &Term) -> Result<Level, ElabError> {
        let k = self.checker().synth(ctx, v)?;
        match self.norm(ctx, &k)? {
            Term::Type(l) => Ok(l),
            other => fail(
                "ELevel",
                Span::default(),
                format!("not a type: {}", crate::pretty::pretty(&other)),
            ),
        }
    }

    /// Synthesis: `ctx |- s ~> (t, T)`.
    pub fn synth(&self, ctx: &Context, s: &Surface) -> Result<(Term, Term), ElabError> {
        let out = self.synth_inner(ctx, s)?;
        if self.record.is_some() {
            let lvl = self
                .norm(ctx, &out.1)
                .ok()
                .and_then(|v| self.level_of_type(ctx, &v).ok());
            self.record_level(lvl);
        }
        Ok(out)
    }

    fn synth_inner(&self, ctx: &Context, s: &Surface) -> Result<(Term, Term), ElabError> {
        match &s.kind {
            SurfaceKind::Type(l) => {
                self.rule("EType");
                Ok((Term::Type(*l), Term::Type(l.succ())))
            }
            SurfaceKind::Bool => {
                self.rule("EBool");
                Ok((Term::Bool, Term::ty(0)))
            }
            SurfaceKind::True => {
                self.rule("ETF");
                Ok((Term::True, Term::Bool))
            }
            SurfaceKind::False => {
                self.rule("ETF");
                Ok((Term::False, Term::Bool))
            }
            SurfaceKind::Var(i) => {
                self.rule("EVar");
                match ctx.lookup(*i) {
                    Some(ty) => Ok((Term::Var(*i), ty)),
                    None => fail("EVar", s.span, format!("unbound variable {i}")),
                }
            }
            SurfaceKind::Global(name) => self.global(ctx, s.span, name, &[]),
            SurfaceKind::Ascr(body, ty) => {
                self.rule("EAscr");
                let (t_ty, _lvl) = self.at(1, |e| e.elab_type(ctx, ty))?;
                let v = self.norm(ctx, &t_ty)?;
                let t = self.at(0, |e| e.check(ctx, body, &v))?;
                Ok((t, t_ty))
            }
            SurfaceKind::Pi(n, dom, cod) => {
                self.rule("EPi");
                let (d, l1) = self.at(0, |e| e.elab_type(ctx, dom))?;
                let ctx2 = ctx.extended(n.clone(), d.clone());
                let (c, l2) = self.at(1, |e| e.elab_type(&ctx2, cod))?;
                Ok((
                    Term::Pi(n.clone(), d.rc(), c.rc()),
                    Term::Type(l1.max(l2)),
                ))
            }
            SurfaceKind::App(..) => {
                let (head, args) = spine(s);
                if let SurfaceKind::Global(name) = &head.kind {
                    return self.global(ctx, s.span, name, &args);
                }
                let n = args.len();
                let head_path = vec![0usize; n];
                let (mut t, mut ty) = self.at_path(&head_path, |e| e.synth(ctx, head))?;
                for (i, arg) in args.iter().enumerate() {
                    let mut p = vec![0usize; n - 1 - i];
                    p.push(1);
                    let v = self.norm(ctx, &ty)?;
                    match v {
                        Term::Pi(_, dom, cod) => {
                            self.rule("EApp");
                            let a = self.at_path(&p, |e| e.check(ctx, arg, &dom))?;
                            ty = crate::subst::subst0(&cod, &a);
                            t = Term::App(t.rc(), a.rc());
                        }
                        unk if unk.as_unk_type().is_some() => {
                            self.rule("EAppUnk");
                            let l = unk.as_unk_type().unwrap();
                            let unk_ty = Term::unk_type(l);
                            let arrow = Term::arrow(unk_ty.clone(), unk_ty.clone());
                            let cast = Term::Cast {
                                src: unk_ty.clone().rc(),
                                dst: arrow.rc(),
                                body: t.rc(),
                            };
                            let a = self.at_path(&p, |e| e.check(ctx, arg, &unk_ty))?;
                            t = Term::App(cast.rc(), a.rc());
                            ty = unk_ty;
                        }
                        other => {
                            return fail(
                                "EApp",
                                s.span,
                                format!(
                                    "application head has non-function type {}",
                                    crate::pretty::pretty(&other)
                                ),
                            )
                        }
                    }
                }
                Ok((t, ty))
            }
            SurfaceKind::Lam(..) => fail(
                "ELam",
                s.span,
                "cannot synthesize a type for an unannotated function; add an ascription",
            ),
            SurfaceKind::If(..) => fail(
                "EIf",
                s.span,
                "if-expressions only check against a known type; add an ascription",
            ),
            SurfaceKind::Unknown(l) => {
                // Synthesis positions require the level annotation; the term
                // is then the unknown at the unknown type.
                self.rule("EUnk");
                match l {
                    Some(l) => Ok((
                        Term::Unk(Term::unk_type(*l).rc()),
                        Term::unk_type(*l),
                    )),
                    None => fail(
                        "EUnk",
                        s.span,
                        "`?` needs a level annotation in a synthesis position",
                    ),
                }
            }
            SurfaceKind::Eq(lhs, ty, rhs) => {
                self.rule("EEq");
                let (t_ty, lvl) = self.at(1, |e| e.elab_type(ctx, ty))?;
                let v = self.norm(ctx, &t_ty)?;
                let l = self.at(0, |e| e.check(ctx, lhs, &v))?;
                let r = self.at(2, |e| e.check(ctx, rhs, &v))?;
                Ok((
                    Term::Eq {
                        lhs: l.rc(),
                        ty: t_ty.rc(),
                        rhs: r.rc(),
                    },
                    Term::Type(lvl),
                ))
            }
            SurfaceKind::Refl => fail(
                "ERefl",
                s.span,
                "refl only checks against an equality type",
            ),
            SurfaceKind::Subst(parts) => {
                self.rule("ESubst");
                let [sty, smotive, sfrom, sto, sbody, seq] = &**parts;
                let (ty, _l) = self.at(0, |e| e.elab_type(ctx, sty))?;
                let tyn = self.norm(ctx, &ty)?;
                // The motive is usually a lambda; elaborate its body as a
                // type so the codomain universe is synthesized.
                let motive = self.at(1, |e| {
                    e.elab_motive(ctx, smotive, &tyn)
                })?;
                let from = self.at(2, |e| e.check(ctx, sfrom, &tyn))?;
                let to = self.at(3, |e| e.check(ctx, sto, &tyn))?;
                let p_from = self.norm(ctx, &Term::App(motive.clone().rc(), from.clone().rc()))?;
                let body = self.at(4, |e| e.check(ctx, sbody, &p_from))?;
                let eq_ty = self.norm(
                    ctx,
                    &Term::Eq {
                        lhs: from.clone().rc(),
                        ty: tyn.clone().rc(),
                        rhs: to.clone().rc(),
                    },
                )?;
                let eq = self.at(5, |e| e.check(ctx, seq, &eq_ty))?;
                let result_ty = Term::App(motive.clone().rc(), to.clone().rc());
                Ok((
                    Term::Subst {
                        ty: tyn.rc(),
                        motive: motive.rc(),
                        from: from.rc(),
                        to: to.rc(),
                        body: body.rc(),
                        eq: eq.rc(),
                    },
                    result_ty,
                ))
            }
            SurfaceKind::Ind { .. } => fail(
                "EInd",
                s.span,
                "ind only checks against a known type; add an ascription",
            ),
        }
    }

    fn elab_motive(&self, ctx: &Context, s: &Surface, dom: &Term) -> Result<Term, ElabError> {
        match &s.kind {
            SurfaceKind::Lam(n, body) => {
                let ctx2 = ctx.extended(n.clone(), dom.clone());
                let (b, _l) = self.elab_type(&ctx2, body)?;
                Ok(Term::Lam(n.clone(), dom.clone().rc(), b.rc()))
            }
            _ => {
                let (t, ty) = self.synth(ctx, s)?;
                match self.norm(ctx, &ty)? {
                    Term::Pi(_, d, cod) => {
                        if !crate::subst::alpha_eq(&d, &dom.clone().rc()) {
                            return fail(
                                "ESubst",
                                s.span,
                                "motive domain does not match the subject type",
                            );
                        }
                        match &*cod {
                            Term::Type(_) => Ok(t),
                            _ => fail("ESubst", s.span, "motive must produce a type"),
                        }
                    }
                    _ => fail("ESubst", s.span, "motive must be a function into a universe"),
                }
            }
        }
    }

    /// Resolve a global head applied to arguments: a definition (inlined),
    /// a type constructor (saturated), or a data constructor.
    fn global(
        &self,
        ctx: &Context,
        span: Span,
        name: &str,
        args: &[&Surface],
    ) -> Result<(Term, Term), ElabError> {
        let arg_path = |i: usize| -> Vec<usize> {
            let mut p = vec![0usize; args.len() - 1 - i];
            p.push(1);
            p
        };
        if let Some((t, ty)) = self.globals.lookup_def(name) {
            self.rule("EVar");
            let (mut t, mut ty) = (t.clone(), ty.clone());
            for (i, arg) in args.iter().enumerate() {
                let v = self.norm(ctx, &ty)?;
                match v {
                    Term::Pi(_, dom, cod) => {
                        self.rule("EApp");
                        let a = self.at_path(&arg_path(i), |e| e.check(ctx, arg, &dom))?;
                        ty = crate::subst::subst0(&cod, &a);
                        t = Term::App(t.rc(), a.rc());
                    }
                    unk if unk.as_unk_type().is_some() => {
                        self.rule("EAppUnk");
                        let l = unk.as_unk_type().unwrap();
                        let unk_ty = Term::unk_type(l);
                        let arrow = Term::arrow(unk_ty.clone(), unk_ty.clone());
                        let cast = Term::Cast {
                            src: unk_ty.clone().rc(),
                            dst: arrow.rc(),
                            body: t.rc(),
                        };
                        let a = self.at_path(&arg_path(i), |e| e.check(ctx, arg, &unk_ty))?;
                        t = Term::App(cast.rc(), a.rc());
                        ty = unk_ty;
                    }
                    other => {
                        return fail(
                            "EApp",
                            span,
                            format!(
                                "application head has non-function type {}",
                                crate::pretty::pretty(&other)
                            ),
                        )
                    }
                }
            }
            return Ok((t, ty));
        }
        if let Some(sig) = self.env().lookup(name) {
            let sig = sig.clone();
            self.rule("ETyCon");
            if args.len() != sig.params.len() {
                return fail(
                    "ETyCon",
                    span,
                    format!(
                        "type constructor {name} expects {} arguments, got {}",
                        sig.params.len(),
                        args.len()
                    ),
                );
            }
            let mut out: Vec<Term> = Vec::with_capacity(args.len());
            for (i, arg) in args.iter().enumerate() {
                let ptys = sig.param_types_at(&out);
                let v = self.norm(ctx, &ptys[i])?;
                let a = self.at_path(&arg_path(i), |e| e.check(ctx, arg, &v))?;
                out.push(a);
            }
            return Ok((
                Term::TyCon {
                    ind: sig.name.clone(),
                    args: out,
                },
                Term::Type(sig.level),
            ));
        }
        if let Some((sig, ci)) = self.env().find_ctor(name) {
            let sig = sig.clone();
            return self.ctor_app(ctx, span, &sig, ci, args, None);
        }
        fail("EVar", span, format!("unknown name `{name}`"))
    }

    /// Checking: `ctx |- s <= V ~> t` where `V` is a normal type.
    pub fn check(&self, ctx: &Context, s: &Surface, v: &Term) -> Result<Term, ElabError> {
        if self.record.is_some() {
            let lvl = self.level_of_type(ctx, v).ok();
            self.record_level(lvl);
        }
        self.check_inner(ctx, s, v)
    }

    fn check_inner(&self, ctx: &Context, s: &Surface, v: &Term) -> Result<Term, ElabError> {
        match (&s.kind, v) {
            (SurfaceKind::Lam(n, body), Term::Pi(_, dom, cod)) => {
                self.rule("ELam");
                let ctx2 = ctx.extended(n.clone(), (**dom).clone());
                let cod_n = self.norm(&ctx2, cod)?;
                let b = self.at(0, |e| e.check(&ctx2, body, &cod_n))?;
                Ok(Term::Lam(n.clone(), dom.clone(), b.rc()))
            }
            (SurfaceKind::Lam(n, body), unk) if unk.as_unk_type().is_some() => {
                self.rule("ELamUnk");
                let l = unk.as_unk_type().unwrap();
                let unk_ty = Term::unk_type(l);
                let ctx2 = ctx.extended(n.clone(), unk_ty.clone());
                let b = self.at(0, |e| e.check(&ctx2, body, &unk_ty))?;
                let lam = Term::Lam(n.clone(), unk_ty.clone().rc(), b.rc());
                Ok(Term::Cast {
                    src: Term::arrow(unk_ty.clone(), unk_ty.clone()).rc(),
                    dst: unk_ty.rc(),
                    body: lam.rc(),
                })
            }
            (SurfaceKind::Unknown(annotated), _) => {
                self.rule("EUnk");
                let l = self.level_of_type(ctx, v)?;
                if let Some(a) = annotated {
                    if *a != l {
                        return fail(
                            "EUnk",
                            s.span,
                            format!("`?{a}` used where a level-{l} type is expected"),
                        );
                    }
                }
                Ok(Term::Unk(v.clone().rc()))
            }
            (SurfaceKind::If(c, tb, eb), _) => {
                self.rule("EIf");
                let c2 = self.at(0, |e| e.check(ctx, c, &Term::Bool))?;
                let t2 = self.at(1, |e| e.check(ctx, tb, v))?;
                let e2 = self.at(2, |e| e.check(ctx, eb, v))?;
                Ok(Term::If {
                    ann: v.clone().rc(),
                    scrut: c2.rc(),
                    then_br: t2.rc(),
                    else_br: e2.rc(),
                })
            }
            (SurfaceKind::Refl, Term::Eq { lhs, ty, rhs }) => {
                self.rule("ERefl");
                let l = self.norm(ctx, lhs)?;
                let r = self.norm(ctx, rhs)?;
                if !consistent(self.env(), &l, &r) {
                    return fail(
                        "ERefl",
                        s.span,
                        format!(
                            "cannot prove {} ~= {}: the sides are not consistent",
                            crate::pretty::pretty(&l),
                            crate::pretty::pretty(&r)
                        ),
                    );
                }
                Ok(Term::Refl {
                    ev: Term::Meet {
                        lhs: lhs.clone(),
                        rhs: rhs.clone(),
                        ty: ty.clone(),
                    }
                    .rc(),
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                })
            }
            (SurfaceKind::Refl, unk) if unk.as_unk_type().is_some() => {
                self.rule("EReflUnk");
                let l = unk.as_unk_type().unwrap();
                let u = Term::Unk(Term::unk_type(l).rc());
                Ok(Term::Tagged {
                    tag: TypeTag::Eq,
                    level: l,
                    body: Term::Refl {
                        ev: u.clone().rc(),
                        lhs: u.clone().rc(),
                        rhs: u.rc(),
                    }
                    .rc(),
                })
            }
            (SurfaceKind::Ind { .. }, _) => self.elab_ind(ctx, s, v),
            (SurfaceKind::App(..) | SurfaceKind::Global(_), _) => {
                // Constructor applications in checking position elaborate
                // against the expected parameters.
                let (head, args) = spine(s);
                if let SurfaceKind::Global(name) = &head.kind {
                    if self.globals.lookup_def(name).is_none()
                        && self.env().lookup(name).is_none()
                    {
                        if let Some((sig, ci)) = self.env().find_ctor(name) {
                            let sig = sig.clone();
                            if let Term::TyCon { ind, args: targs } = v {
                                if *ind == sig.name {
                                    let (t, _ty) = self.ctor_app(
                                        ctx,
                                        s.span,
                                        &sig,
                                        ci,
                                        &args,
                                        Some(targs.clone()),
                                    )?;
                                    return Ok(t);
                                }
                            }
                        }
                    }
                }
                self.check_via_synth(ctx, s, v)
            }
            _ => self.check_via_synth(ctx, s, v),
        }
    }

    /// EConv / EConsistent: synthesize, compare normal forms, insert a cast
    /// only when needed.
    fn check_via_synth(&self, ctx: &Context, s: &Surface, v: &Term) -> Result<Term, ElabError> {
        let (t, ty) = self.synth_inner(ctx, s)?;
        let v2 = self.norm(ctx, &ty)?;
        if crate::subst::alpha_eq(&v2, v) {
            self.rule("EConv");
            return Ok(t);
        }
        if consistent(self.env(), &v2, v) {
            self.rule("EConsistent");
            Ok(Term::Cast {
                src: v2.rc(),
                dst: v.clone().rc(),
                body: t.rc(),
            })
        } else {
            Err(ElabError::Inconsistent {
                expected: crate::pretty::pretty(v),
                found: crate::pretty::pretty(&v2),
                span: s.span,
            })
        }
    }

    /// Level synthesis for a surface type: `Type l` gives `l`; the unknown
    /// type one level up casts down (EUnkLevel).
    pub fn elab_type(&self, ctx: &Context, s: &Surface) -> Result<(Term, Level), ElabError> {
        // `?` with or without annotation in type position: resolve through
        // the general rules by synthesizing `?_(Type l)` when annotated.
        let (t, ty) = self.synth(ctx, s)?;
        let tn = self.norm(ctx, &ty)?;
        match tn {
            Term::Type(l) => {
                self.rule("ELevel");
                Ok((t, l))
            }
            ref u if u.as_unk_type().is_some() => {
                self.rule("EUnkLevel");
                let k = u.as_unk_type().unwrap();
                match k.pred() {
                    Some(l) => Ok((
                        Term::Cast {
                            src: Term::unk_type(k).rc(),
                            dst: Term::Type(l).rc(),
                            body: t.rc(),
                        },
                        l,
                    )),
                    None => fail(
                        "EUnkLevel",
                        s.span,
                        "`?0` cannot be used as a type (no universe below level 0)",
                    ),
                }
            }
            other => fail(
                "ELevel",
                s.span,
                format!("not a type: synthesized {}", crate::pretty::pretty(&other)),
            ),
        }
    }

    /// Elaborate a data-constructor application, filling in the desugared
    /// consistency-constraint fields with eagerly composed evidence.
    fn ctor_app(
        &self,
        ctx: &Context,
        span: Span,
        sig: &InductiveSig,
        ci: usize,
        user_args: &[&Surface],
        target_params: Option<Vec<Term>>,
    ) -> Result<(Term, Term), ElabError> {
        self.rule("ECtor");
        let cs = &sig.ctors[ci];
        let n_user = cs.n_user_fields();
        if user_args.len() != n_user {
            return fail(
                "ECtor",
                span,
                format!(
                    "constructor {} expects {} arguments, got {}",
                    cs.name,
                    n_user,
                    user_args.len()
                ),
            );
        }
        let n_orig = sig.params.len() - sig.n_idx_params;

        // Resolve parameters.
        let params: Vec<Term> = match target_params {
            Some(p) => p,
            None => self.infer_ctor_params(ctx, span, sig, ci, user_args)?,
        };

        // Elaborate user fields against their instantiated types.
        let mut fields: Vec<Term> = Vec::with_capacity(cs.fields.len());
        for (i, arg) in user_args.iter().enumerate() {
            let mut p = vec![0usize; user_args.len() - 1 - i];
            p.push(1);
            let ftys = sig.field_types_at(ci, &params, &fields);
            let v = self.norm(ctx, &ftys[i])?;
            let a = self.at_path(&p, |e| e.check(ctx, arg, &v))?;
            fields.push(a);
        }

        // Fill constraint fields with composed evidence.
        for j in 0..cs.n_constraints {
            let fi = n_user + j;
            let ftys = sig.field_types_at(ci, &params, &fields);
            let (a_j, t_j, b_j) = match &ftys[fi] {
                Term::Eq { lhs, ty, rhs } => {
                    ((**lhs).clone(), (**ty).clone(), (**rhs).clone())
                }
                other => {
                    return fail(
                        "ECtor",
                        span,
                        format!(
                            "desugared constraint field is not an equality type: {}",
                            crate::pretty::pretty(other)
                        ),
                    )
                }
            };
            let ev = self.constraint_evidence(
                ctx, span, sig, ci, &params, &fields, n_orig, j, &a_j, &t_j, &b_j,
            )?;
            fields.push(ev);
        }

        Ok((
            Term::Ctor {
                ind: sig.name.clone(),
                ctor: ci,
                params: params.clone(),
                fields,
            },
            Term::TyCon {
                ind: sig.name.clone(),
                args: params,
            },
        ))
    }

    /// Initial evidence for constraint `j` (`A_j ~= B_j`), composed with the
    /// lifted evidence of every recursive field that can refine it.
    #[allow(clippy::too_many_arguments)]
    fn constraint_evidence(
        &self,
        ctx: &Context,
        _span: Span,
        sig: &InductiveSig,
        ci: usize,
        params: &[Term],
        fields: &[Term],
        n_orig: usize,
        j: usize,
        a_j: &Term,
        t_j: &Term,
        b_j: &Term,
    ) -> Result<Term, ElabError> {
        let cs = &sig.ctors[ci];
        let n_user = cs.n_user_fields();
        let an = self.norm(ctx, a_j)?;
        let bn = self.norm(ctx, b_j)?;
        // Fully static constraint: the evidence is the index itself.
        if crate::subst::alpha_eq(&an, &bn) && fully_static(&an) {
            return Ok(Term::Refl {
                ev: an.clone().rc(),
                lhs: an.clone().rc(),
                rhs: bn.rc(),
            });
        }
        let eq_ty = Term::Eq {
            lhs: a_j.clone().rc(),
            ty: t_j.clone().rc(),
            rhs: b_j.clone().rc(),
        };
        let mut ev = Term::Refl {
            ev: Term::Meet {
                lhs: a_j.clone().rc(),
                rhs: b_j.clone().rc(),
                ty: t_j.clone().rc(),
            }
            .rc(),
            lhs: a_j.clone().rc(),
            rhs: b_j.clone().rc(),
        };

        // The declared constraint body, scoped under [params, fields]:
        // recover which user fields it mentions.
        let decl_rhs = match &cs.fields[n_user + j].1 {
            Term::Eq { rhs, .. } => (**rhs).clone(),
            _ => return Ok(ev),
        };
        // decl_rhs is scoped under [params.., n_user+j fields..]; user field
        // i has de Bruijn index (n_user + j - 1 - i) there.
        for k in 0..n_user {
            if !sig.field_is_recursive(ci, k) {
                continue;
            }
            // The recursive field's declared type, ending in C q..; find the
            // index-parameter assignments that are user-field variables.
            let fdecl = &cs.fields[k].1;
            let (pis, q_args) = match peel_to_tycon(fdecl, &sig.name) {
                Some(x) => x,
                None => continue,
            };
            // Apply function-typed recursive fields to `?` at each binder,
            // and compute the field's actual type-constructor parameters.
            let mut scrut = fields[k].clone();
            let scrut_params: Vec<Term> = {
                let mut inst: Vec<Term> = params.to_vec();
                inst.extend(fields[..k].iter().cloned());
                for dom in &pis {
                    let refs: Vec<&Term> = inst.iter().collect();
                    let dom_inst = subst_many(dom, &refs);
                    let unk = Term::Unk(dom_inst.rc());
                    scrut = Term::App(scrut.rc(), unk.clone().rc());
                    inst.push(unk);
                }
                let refs: Vec<&Term> = inst.iter().collect();
                q_args.iter().map(|q| subst_many(q, &refs)).collect()
            };
            // q_args are scoped under [params, fields[..k], pis..]; we need
            // the index-parameter positions of C.
            let inner_n_orig = n_orig;
            for (jj, q) in q_args.iter().enumerate().skip(inner_n_orig) {
                let idx_pos = jj - inner_n_orig;
                // Is q a user-field variable of this constructor?
                let depth = pis.len();
                let i_field = match &**q {
                    Term::Var(v) if *v >= depth => {
                        let v = v - depth;
                        // scope [params(np), fields[..k]]: field i at index k-1-i
                        if v < k {
                            k - 1 - v
                        } else {
                            continue;
                        }
                    }
                    _ => continue,
                };
                // Does that field occur in the declared constraint body?
                let decl_idx_of_field = n_user + j - 1 - i_field;
                if !crate::subst::occurs_free(&decl_rhs, decl_idx_of_field) {
                    continue;
                }
                // Build the lift. The hole is the declared occurrence of the
                // refined field inside the constraint's right side.
                let b_hole = {
                    let mut inst: Vec<Term> =
                        params.iter().map(|p| shift(p, 1)).collect();
                    for (fk, fv) in fields.iter().enumerate() {
                        if fk == i_field {
                            inst.push(Term::Var(0));
                        } else {
                            inst.push(shift(fv, 1));
                        }
                    }
                    let refs: Vec<&Term> = inst.iter().collect();
                    subst_many(&decl_rhs, &refs)
                };
                let lifted = self.lift_through(
                    sig,
                    params,
                    fields,
                    i_field,
                    idx_pos,
                    &scrut,
                    &scrut_params,
                    a_j,
                    t_j,
                    b_j,
                    &b_hole,
                    &ev,
                    &eq_ty,
                )?;
                ev = Term::Meet {
                    lhs: ev.rc(),
                    rhs: lifted.rc(),
                    ty: eq_ty.clone().rc(),
                };
            }
        }
        Ok(ev)
    }

    /// Eliminate the recursive field `scrut`, lifting its stored index
    /// evidence to a consistency on our constraint and casting back.
    #[allow(clippy::too_many_arguments)]
    fn lift_through(
        &self,
        sig: &InductiveSig,
        params: &[Term],
        fields: &[Term],
        i_field: usize,
        idx_pos: usize,
        scrut: &Term,
        scrut_params: &[Term],
        a_j: &Term,
        t_j: &Term,
        b_j: &Term,
        b_hole: &Term,
        base_ev: &Term,
        eq_ty: &Term,
    ) -> Result<Term, ElabError> {
        let n_idx = sig.n_idx_params;
        let n_orig = sig.params.len() - n_idx;
        let v_i = &fields[i_field];
        // The target index stays fixed; only the declared side is refined.
        let a_hole = shift(a_j, 1);
        // Type of C's idx parameter, instantiated at the original params.
        let idx_param_ty = {
            let (_, pty) = &sig.params[n_orig + idx_pos];
            let inst: Vec<&Term> = params[..n_orig + idx_pos].iter().collect();
            subst_many(pty, &inst)
        };
        // Motive for the lift: \k. A_j ~= B_j[k] (the hole aligns with the
        // lambda binder).
        let lift_motive = Term::Lam(
            Name::named("k"),
            idx_param_ty.clone().rc(),
            Term::Eq {
                lhs: a_hole.clone().rc(),
                ty: shift(t_j, 1).rc(),
                rhs: b_hole.clone().rc(),
            }
            .rc(),
        );
        // Eliminate the recursive field: each branch lifts its constraint
        // evidence for index `idx_pos` and casts back to our constraint.
        let mut branches: Vec<Branch> = Vec::with_capacity(sig.ctors.len());
        for (c2, cs2) in sig.ctors.iter().enumerate() {
            let nf2 = cs2.fields.len();
            let shift_by = (1 + nf2) as isize;
            let unrefined = || Branch {
                n_fields: nf2,
                body: shift(base_ev, shift_by).rc(),
            };
            let cf = match find_constraint_for_idx(sig, c2, idx_pos) {
                Some(x) => cs2.n_user_fields() + x,
                None => {
                    branches.push(unrefined());
                    continue;
                }
            };
            // The inner evidence: field cf of the matched constructor.
            let inner_pf = Term::Var(nf2 - 1 - cf);
            let s2_decl = match &cs2.fields[cf].1 {
                Term::Eq { rhs, .. } => (**rhs).clone(),
                _ => {
                    branches.push(unrefined());
                    continue;
                }
            };
            // Instantiate s2's declared expression with the *scrutinee's*
            // parameters and the branch field variables.
            let mut inst: Vec<Term> = scrut_params
                .iter()
                .map(|p| shift(p, shift_by))
                .collect();
            for fj in 0..cf {
                inst.push(Term::Var(nf2 - 1 - fj));
            }
            let refs: Vec<&Term> = inst.iter().collect();
            let s2 = subst_many(&s2_decl, &refs);

            let motive_b = shift(&lift_motive, shift_by);
            let v_i_b = shift(v_i, shift_by);
            let base_b = shift(base_ev, shift_by);
            let ty_b = shift(&idx_param_ty, shift_by);
            let lifted = Term::Subst {
                ty: ty_b.rc(),
                motive: motive_b.rc(),
                from: v_i_b.rc(),
                to: s2.clone().rc(),
                body: base_b.rc(),
                eq: inner_pf.rc(),
            };
            // Cast A ~= B[s2] back to A ~= B.
            let a_b = shift(a_j, shift_by);
            let t_jb = shift(t_j, shift_by);
            let b_hole_b = shift_above(b_hole, 1, shift_by);
            let src_eq = Term::Eq {
                lhs: a_b.clone().rc(),
                ty: t_jb.clone().rc(),
                rhs: crate::subst::subst0(&b_hole_b, &s2).rc(),
            };
            let dst_eq = Term::Eq {
                lhs: a_b.rc(),
                ty: t_jb.rc(),
                rhs: shift(b_j, shift_by).rc(),
            };
            branches.push(Branch {
                n_fields: nf2,
                body: Term::Cast {
                    src: src_eq.rc(),
                    dst: dst_eq.rc(),
                    body: lifted.rc(),
                }
                .rc(),
            });
        }
        // Motive of the outer ind: constant at our constraint type.
        let outer_motive = shift(eq_ty, (n_idx + 1) as isize);
        Ok(Term::Ind {
            ind: sig.name.clone(),
            n_idx,
            motive: outer_motive.rc(),
            scrut: scrut.clone().rc(),
            branches,
        })
    }

    fn infer_ctor_params(
        &self,
        ctx: &Context,
        span: Span,
        sig: &InductiveSig,
        ci: usize,
        user_args: &[&Surface],
    ) -> Result<Vec<Term>, ElabError> {
        let cs = &sig.ctors[ci];
        let n_user = cs.n_user_fields();
        let n_orig = sig.params.len() - sig.n_idx_params;
        let mut params: Vec<Option<Term>> = vec![None; sig.params.len()];
        let mut field_terms: Vec<Option<(Term, Term)>> = vec![None; n_user];

        // First pass: determine original parameters by matching a field
        // whose declared type is exactly the parameter variable (or a
        // type-constructor application carrying it).
        for p in 0..n_orig {
            for (fi, (_, fty)) in cs.fields.iter().take(n_user).enumerate() {
                // fty scope: [params(np), fields[..fi]]: parameter p has
                // index fi + (np - 1 - p).
                let pvar = fi + sig.params.len() - 1 - p;
                let direct = matches!(fty, Term::Var(v) if *v == pvar);
                let nested = match fty {
                    Term::TyCon { args, .. } => args
                        .iter()
                        .position(|a| matches!(a, Term::Var(v) if *v == pvar)),
                    _ => None,
                };
                if !direct && nested.is_none() {
                    continue;
                }
                if field_terms[fi].is_none() {
                    field_terms[fi] = Some(self.synth(ctx, user_args[fi])?);
                }
                let (_, fty_actual) = field_terms[fi].clone().unwrap();
                let v = self.norm(ctx, &fty_actual)?;
                if direct {
                    params[p] = Some(v);
                    break;
                }
                if let (Some(pos), Term::TyCon { args, .. }) = (nested, &v) {
                    if let Some(a) = args.get(pos) {
                        params[p] = Some(a.clone());
                        break;
                    }
                }
            }
            if params[p].is_none() {
                return fail(
                    "ECtor",
                    span,
                    format!(
                        "cannot infer parameter {} of {}; ascribe the constructor application",
                        p, sig.name
                    ),
                );
            }
        }
        // Index parameters: the declared return index, instantiated once the
        // user fields are elaborated. Elaborate fields with the original
        // parameters known (index parameters do not occur in user field
        // types after desugaring of well-formed declarations).
        let mut resolved: Vec<Term> = params
            .iter()
            .map(|p| p.clone().unwrap_or(Term::unk(Term::ty(0))))
            .collect();
        let mut fields: Vec<Term> = Vec::new();
        for (i, arg) in user_args.iter().enumerate() {
            let ftys = sig.field_types_at(ci, &resolved, &fields);
            let v = self.norm(ctx, &ftys[i])?;
            let a = self.check(ctx, arg, &v)?;
            fields.push(a);
        }
        for j in 0..sig.n_idx_params {
            let cf = match find_constraint_for_idx(sig, ci, j) {
                Some(x) => n_user + x,
                None => {
                    return fail(
                        "ECtor",
                        span,
                        "constructor lacks a constraint for an index parameter",
                    )
                }
            };
            let decl_rhs = match &cs.fields[cf].1 {
                Term::Eq { rhs, .. } => (**rhs).clone(),
                _ => return fail("ECtor", span, "malformed desugared constraint"),
            };
            // decl_rhs never references constraint fields; pad their slots.
            let mut inst: Vec<Term> = resolved.clone();
            inst.extend(fields.iter().cloned());
            while inst.len() < resolved.len() + cf {
                inst.push(Term::True);
            }
            let refs: Vec<&Term> = inst.iter().collect();
            let value = subst_many(&decl_rhs, &refs);
            resolved[n_orig + j] = self.norm(ctx, &value)?;
        }
        Ok(resolved)
    }

    /// Elaborate an `ind` expression against the expected type, abstracting
    /// the scrutinee's variable indices into the motive and rewriting branch
    /// goals through `subst` on the constraint evidence.
    fn elab_ind(&self, ctx: &Context, s: &Surface, v: &Term) -> Result<Term, ElabError> {
        let (self_name, scrut_s, branches_s) = match &s.kind {
            SurfaceKind::Ind {
                self_name,
                scrut,
                branches,
            } => (self_name, scrut, branches),
            _ => unreachable!(),
        };
        self.rule("EInd");
        let (scrut, sty) = self.at(0, |e| e.synth(ctx, scrut_s))?;
        let sv = self.norm(ctx, &sty)?;
        let (ind, args) = match &sv {
            Term::TyCon { ind, args } => (ind.clone(), args.clone()),
            other => {
                return fail(
                    "EInd",
                    s.span,
                    format!(
                        "cannot eliminate a value of type {}",
                        crate::pretty::pretty(other)
                    ),
                )
            }
        };
        let sig = self.env().lookup(&ind).unwrap().clone();
        let n_idx = sig.n_idx_params;
        let n_orig = sig.params.len() - n_idx;
        let idx_actual = &args[n_orig..];

        // Build the motive: shift V under the motive binders, then redirect
        // occurrences of variable index values (and a variable scrutinee) to
        // the binders.
        let mut motive = shift(v, (n_idx + 1) as isize);
        for (i, ia) in idx_actual.iter().enumerate() {
            if let Term::Var(outer) = ia {
                // In motive scope the outer var is outer + n_idx + 1; the
                // binder for index i is at n_idx - i.
                motive = replace_var(&motive, outer + n_idx + 1, n_idx - i);
            }
        }
        if let Term::Var(szv) = &scrut {
            motive = replace_var(&motive, szv + n_idx + 1, 0);
        }

        // Match surface branches to constructors.
        let mut bodies: Vec<Option<&crate::surface::SurfaceBranch>> =
            vec![None; sig.ctors.len()];
        for b in branches_s {
            match sig.ctors.iter().position(|c| c.name == b.ctor) {
                Some(ci) => {
                    if bodies[ci].is_some() {
                        return fail("EInd", s.span, format!("duplicate branch for {}", b.ctor));
                    }
                    bodies[ci] = Some(b);
                }
                None => {
                    return fail(
                        "EInd",
                        s.span,
                        format!("{} is not a constructor of {}", b.ctor, ind),
                    )
                }
            }
        }

        // Self-reference type for the branch contexts.
        let self_ty = {
            let mut ty = {
                let mut a: Vec<Term> = args[..n_orig]
                    .iter()
                    .map(|p| shift(p, n_idx as isize))
                    .collect();
                for i in 0..n_idx {
                    a.push(Term::Var(n_idx - 1 - i));
                }
                Term::Pi(
                    Name::named("z"),
                    Term::TyCon {
                        ind: ind.clone(),
                        args: a,
                    }
                    .rc(),
                    motive.clone().rc(),
                )
            };
            for i in (0..n_idx).rev() {
                let (nm, pty) = &sig.params[n_orig + i];
                let mut inst: Vec<Term> = args[..n_orig]
                    .iter()
                    .map(|p| shift(p, i as isize))
                    .collect();
                for jv in 0..i {
                    inst.push(Term::Var(i - 1 - jv));
                }
                let refs: Vec<&Term> = inst.iter().collect();
                ty = Term::Pi(nm.clone(), subst_many(pty, &refs).rc(), ty.rc());
            }
            ty
        };

        let mut branches: Vec<Branch> = Vec::with_capacity(sig.ctors.len());
        for (ci, cs) in sig.ctors.iter().enumerate() {
            let sb = match bodies[ci] {
                Some(b) => b,
                None => {
                    return fail(
                        "EInd",
                        s.span,
                        format!("missing branch for constructor {}", cs.name),
                    )
                }
            };
            let nf = cs.fields.len();
            let n_user = cs.n_user_fields();
            // The user may bind either the user arity or the full arity.
            let body_s = if sb.binders.len() == nf {
                sb.body.clone()
            } else if sb.binders.len() == n_user {
                shift_surface(&sb.body, 0, cs.n_constraints)
            } else {
                return fail(
                    "EInd",
                    s.span,
                    format!(
                        "branch for {} binds {} fields; expected {} (or {} with constraints)",
                        cs.name,
                        sb.binders.len(),
                        n_user,
                        nf
                    ),
                );
            };
            // Branch context: self, then fields at the scrutinee's params.
            let mut bctx = ctx.extended(self_name.clone(), self_ty.clone());
            for (fi, (fname, fty)) in cs.fields.iter().enumerate() {
                let mut inst: Vec<Term> = args
                    .iter()
                    .map(|p| shift(p, (fi + 1) as isize))
                    .collect();
                for fj in 0..fi {
                    inst.push(Term::Var(fi - 1 - fj));
                }
                let refs: Vec<&Term> = inst.iter().collect();
                bctx.push(fname.clone(), subst_many(fty, &refs));
            }
            let shift_by = (1 + nf) as isize;
            // The typing goal for this branch: motive at the rebuilt value.
            let motive_here = shift_above(&motive, n_idx + 1, shift_by);
            let ctor_val = Term::Ctor {
                ind: ind.clone(),
                ctor: ci,
                params: args.iter().map(|p| shift(p, shift_by)).collect(),
                fields: (0..nf).map(|i| Term::Var(nf - 1 - i)).collect(),
            };
            let goal = {
                let idx_shifted: Vec<Term> = idx_actual
                    .iter()
                    .map(|p| shift(p, shift_by))
                    .collect();
                let mut a: Vec<&Term> = idx_shifted.iter().collect();
                a.push(&ctor_val);
                subst_many(&motive_here, &a)
            };
            // Goal rewriting: specialize variable indices to the
            // constructor's declared index expressions, elaborate there, and
            // transport back along the constraint evidence.
            let mut specialized = goal.clone();
            let mut transports: Vec<(Term, Term, Term, usize)> = Vec::new();
            for (i, ia) in idx_actual.iter().enumerate() {
                if let Term::Var(outer) = ia {
                    let var_here = outer + nf + 1;
                    if !crate::subst::occurs_free(&specialized, var_here) {
                        continue;
                    }
                    let cf_rel = match find_constraint_for_idx(&sig, ci, i) {
                        Some(x) => x,
                        None => continue,
                    };
                    let cf = n_user + cf_rel;
                    // s_i: the declared index expression in branch scope.
                    let decl_rhs = match &cs.fields[cf].1 {
                        Term::Eq { rhs, .. } => (**rhs).clone(),
                        _ => continue,
                    };
                    let mut inst: Vec<Term> = args
                        .iter()
                        .map(|p| shift(p, shift_by))
                        .collect();
                    for fj in 0..cf {
                        inst.push(Term::Var(nf - 1 - fj));
                    }
                    let refs: Vec<&Term> = inst.iter().collect();
                    let s_i = subst_many(&decl_rhs, &refs);
                    // Index type for the transport motive.
                    let (_, pty) = &sig.params[n_orig + i];
                    let inst2: Vec<&Term> = args[..n_orig + i].iter().collect();
                    let ity = shift(&subst_many(pty, &inst2), shift_by);
                    transports.push((
                        specialized.clone(),
                        s_i.clone(),
                        ity,
                        var_here,
                    ));
                    specialized = replace_free_var_with(&specialized, var_here, &s_i);
                }
            }
            let goal_n = self.norm(&bctx, &specialized)?;
            let mut body = self.at(1 + ci, |e| e.check(&bctx, &body_s, &goal_n))?;
            // Wrap transports in reverse order: from specialized back to the
            // declared goal.
            for (goal_before, s_i, ity, var_here) in transports.into_iter().rev() {
                // pf field for this index in branch scope.
                let cf_rel = {
                    // Recover the index position from the transport setup.
                    // goal_before[var_here := s_i] was the specialization, so
                    // rebuild motive \k. goal_before[var_here := k].
                    let hole = abstract_var(&goal_before, var_here);
                    let idx_i = idx_actual.iter().position(|ia| {
                        matches!(ia, Term::Var(o) if o + nf + 1 == var_here)
                    });
                    (hole, idx_i)
                };
                let (hole, idx_i) = cf_rel;
                let idx_i = match idx_i {
                    Some(x) => x,
                    None => continue,
                };
                let cfr = match find_constraint_for_idx(&sig, ci, idx_i) {
                    Some(x) => x,
                    None => continue,
                };
                let cf = n_user + cfr;
                let pf = Term::Var(nf - 1 - cf);
                // sym(pf) : s_i ~= var
                let var_t = Term::Var(var_here);
                let sym = Term::Subst {
                    ty: ity.clone().rc(),
                    motive: Term::Lam(
                        Name::named("k"),
                        ity.clone().rc(),
                        Term::Eq {
                            lhs: Term::Var(0).rc(),
                            ty: shift(&ity, 1).rc(),
                            rhs: shift(&var_t, 1).rc(),
                        }
                        .rc(),
                    )
                    .rc(),
                    from: var_t.clone().rc(),
                    to: s_i.clone().rc(),
                    body: Term::Refl {
                        ev: var_t.clone().rc(),
                        lhs: var_t.clone().rc(),
                        rhs: var_t.clone().rc(),
                    }
                    .rc(),
                    eq: pf.rc(),
                };
                body = Term::Subst {
                    ty: ity.clone().rc(),
                    motive: Term::Lam(Name::named("k"), ity.rc(), hole.rc()).rc(),
                    from: s_i.rc(),
                    to: var_t.rc(),
                    body: body.rc(),
                    eq: sym.rc(),
                };
            }
            branches.push(Branch {
                n_fields: nf,
                body: body.rc(),
            });
        }
        Ok(Term::Ind {
            ind,
            n_idx,
            motive: motive.rc(),
            scrut: scrut.rc(),
            branches,
        })
    }
}

/// Does a term avoid `?`, `err`, casts, tags and meets entirely?
pub fn fully_static(t: &Term) -> bool {
    match t {
        Term::Unk(_) | Term::Err(_) | Term::Cast { .. } | Term::Tagged { .. } | Term::Meet { .. } => {
            false
        }
        Term::Pi(_, a, b) | Term::Lam(_, a, b) | Term::App(a, b) => {
            fully_static(a) && fully_static(b)
        }
        Term::If {
            ann,
            scrut,
            then_br,
            else_br,
        } => [ann, scrut, then_br, else_br]
            .iter()
            .all(|x| fully_static(x)),
        Term::Eq { lhs, ty, rhs } => {
            fully_static(lhs) && fully_static(ty) && fully_static(rhs)
        }
        Term::Refl { ev, lhs, rhs } => {
            fully_static(ev) && fully_static(lhs) && fully_static(rhs)
        }
        Term::Subst {
            ty,
            motive,
            from,
            to,
            body,
            eq,
        } => [ty, motive, from, to, body, eq]
            .iter()
            .all(|x| fully_static(x)),
        Term::TyCon { args, .. } => args.iter().all(fully_static),
        Term::Ctor { params, fields, .. } => {
            params.iter().all(fully_static) && fields.iter().all(fully_static)
        }
        Term::Ind {
            motive,
            scrut,
            branches,
            ..
        } => {
            fully_static(motive)
                && fully_static(scrut)
                && branches.iter().all(|b| fully_static(&b.body))
        }
        _ => true,
    }
}

/// Unfold an application spine: `f a b c` gives `(f, [a, b, c])`.
fn spine(s: &Surface) -> (&Surface, Vec<&Surface>) {
    let mut args = Vec::new();
    let mut head = s;
    while let SurfaceKind::App(f, a) = &head.kind {
        args.push(&**a);
        head = f;
    }
    args.reverse();
    (head, args)
}


/// The Pi prefix of a constructor field type ending in `C args`.
fn peel_to_tycon<'a>(ty: &'a Term, ind: &IndName) -> Option<(Vec<Term>, Vec<Rc<Term>>)> {
    let mut pis = Vec::new();
    let mut cur = ty;
    loop {
        match cur {
            Term::TyCon { ind: i2, args } if i2 == ind => {
                return Some((
                    pis,
                    args.iter().map(|a| a.clone().rc()).collect(),
                ));
            }
            Term::Pi(_, dom, cod) => {
                pis.push((**dom).clone());
                cur = cod;
            }
            _ => return None,
        }
    }
}

/// Position (among constraint fields) of the constraint for index `idx_pos`,
/// reading the desugared Eq field whose left side points at that parameter.
fn find_constraint_for_idx(sig: &InductiveSig, ci: usize, idx_pos: usize) -> Option<usize> {
    let cs = &sig.ctors[ci];
    let n_user = cs.n_user_fields();
    let n_orig = sig.params.len() - sig.n_idx_params;
    for (rel, fi) in (n_user..cs.fields.len()).enumerate() {
        if let Term::Eq { lhs, .. } = &cs.fields[fi].1 {
            if let Term::Var(v) = &**lhs {
                // scope [params, fields[..fi]]: param (n_orig + idx_pos) has
                // index fi + (n_params - 1 - (n_orig + idx_pos)).
                let expect = fi + sig.params.len() - 1 - (n_orig + idx_pos);
                if *v == expect {
                    return Some(rel);
                }
            }
        }
    }
    None
}

/// Replace free variable `target` with variable `binder_idx` (both as seen
/// from the root).
fn replace_var(t: &Term, target: usize, binder_idx: usize) -> Term {
    crate::subst::replace_free(t, target, &Term::Var(binder_idx))
}

fn replace_free_var_with(t: &Term, target: usize, with: &Term) -> Term {
    crate::subst::replace_free(t, target, with)
}

/// Make a one-binder term from `t` by abstracting all occurrences of a free
/// variable (Var 0 = the hole at the root).
fn abstract_var(t: &Term, target: usize) -> Term {
    crate::subst::abstract_free(t, target)
}

/// Desugar an inductive family: every index becomes a fresh trailing
/// parameter, and every constructor gains one consistency-constraint field
/// per index relating the new parameter to the declared index expression.
pub fn desugar_family(sig: &InductiveSig) -> InductiveSig {
    if sig.indices.is_empty() {
        let mut out = sig.clone();
        out.n_idx_params = 0;
        return out;
    }
    let ni = sig.indices.len();
    let mut params = sig.params.clone();
    params.extend(sig.indices.iter().cloned());
    let ctors = sig
        .ctors
        .iter()
        .map(|c| {
            let nf = c.fields.len();
            let mut fields: Vec<(Name, Term)> = c
                .fields
                .iter()
                .enumerate()
                .map(|(k, (n, ty))| (n.clone(), shift_above(ty, k, ni as isize)))
                .collect();
            for (j, ((_, ity), ret)) in
                sig.indices.iter().zip(c.ret_indices.iter()).enumerate()
            {
                let lhs = Term::Var(nf + ni - 1);
                let t_j = shift(ity, (ni + nf) as isize);
                let s_j = shift(&shift_above(ret, nf, ni as isize), j as isize);
                fields.push((
                    Name::named(format!("pf{j}")),
                    Term::Eq {
                        lhs: lhs.rc(),
                        ty: t_j.rc(),
                        rhs: s_j.rc(),
                    },
                ));
            }
            CtorSig {
                name: c.name.clone(),
                fields,
                ret_indices: Vec::new(),
                n_constraints: ni,
            }
        })
        .collect();
    InductiveSig {
        name: sig.name.clone(),
        level: sig.level,
        params,
        indices: Vec::new(),
        n_idx_params: ni,
        ctors,
    }
}

/// Elaborate and register a data declaration: telescope and constructor
/// types are elaborated, the parameter/index split inferred, the family
/// desugared, positivity checked, and the result added to the environment.
pub fn declare_data(globals: &mut Globals, decl: &DataDecl) -> Result<(), ElabError> {
    if globals.env.lookup(&decl.name).is_some() || globals.lookup_def(&decl.name).is_some() {
        return fail("EData", decl.span, format!("duplicate name {}", decl.name));
    }
    // Elaborate the telescope.
    let mut telescope: Vec<(Name, Term)> = Vec::new();
    {
        let el = Elaborator::new(globals);
        let mut ctx = Context::new();
        for (n, sty) in &decl.telescope {
            let (t, _l) = el.elab_type(&ctx, sty)?;
            ctx.push(n.clone(), t.clone());
            telescope.push((n.clone(), t));
        }
    }
    // Shell registration so constructor types can mention the inductive.
    let shell = InductiveSig {
        name: decl.name.clone(),
        level: decl.level,
        params: telescope.clone(),
        indices: Vec::new(),
        n_idx_params: 0,
        ctors: Vec::new(),
    };
    let mut with_shell = globals.clone();
    with_shell.env.declare(shell);

    // Elaborate constructor signatures.
    struct RawCtor {
        name: Rc<str>,
        fields: Vec<(Name, Term)>,
        ret_args: Vec<Term>,
    }
    let mut raw: Vec<RawCtor> = Vec::new();
    {
        let el = Elaborator::new(&with_shell);
        for (cname, cty) in &decl.ctors {
            let mut ctx = Context::new();
            for (n, t) in &telescope {
                ctx.push(n.clone(), t.clone());
            }
            let mut fields: Vec<(Name, Term)> = Vec::new();
            let mut cur = cty;
            loop {
                match &cur.kind {
                    SurfaceKind::Pi(n, dom, cod) => {
                        let (d, _l) = el.elab_type(&ctx, dom)?;
                        ctx.push(n.clone(), d.clone());
                        fields.push((n.clone(), d));
                        cur = cod;
                    }
                    _ => break,
                }
            }
            // The return type: C applied to the telescope.
            let (rt, _rl) = el.elab_type(&ctx, cur)?;
            let ret_args = match rt {
                Term::TyCon { ind, args } if ind == decl.name => args,
                other => {
                    return fail(
                        "EData",
                        cty.span,
                        format!(
                            "constructor {} must return {}, found {}",
                            cname,
                            decl.name,
                            crate::pretty::pretty(&other)
                        ),
                    )
                }
            };
            raw.push(RawCtor {
                name: cname.clone(),
                fields,
                ret_args,
            });
        }
    }

    // Parameter/index split: position i is a parameter when every
    // constructor returns exactly the telescope variable at i.
    let nt = telescope.len();
    let mut is_param = vec![true; nt];
    for rc in &raw {
        let nf = rc.fields.len();
        for (i, ra) in rc.ret_args.iter().enumerate() {
            let expect = nf + nt - 1 - i;
            if !matches!(ra, Term::Var(v) if *v == expect) {
                is_param[i] = false;
            }
        }
    }
    let split = is_param.iter().take_while(|p| **p).count();
    if is_param[split..].iter().any(|p| *p) {
        return fail(
            "EData",
            decl.span,
            "parameters must precede indices in the telescope",
        );
    }
    let ni = nt - split;

    // Re-scope fields and return indices from [telescope, fields] to
    // [params, fields]: references to index binders are rejected.
    let rescope = |t: &Term, n_prior_fields: usize| -> Result<Term, ElabError> {
        // Vars in [split..nt) region (relative: n_prior_fields + (nt-1-i))
        // for i >= split are index references.
        let mut bad = false;
        let out = crate::subst::shift_above(t, n_prior_fields, 0);
        let _ = out;
        fn walk(t: &Term, depth: usize, lo: usize, hi: usize, bad: &mut bool) {
            if let Term::Var(v) = t {
                if *v >= depth {
                    let free = v - depth;
                    if free >= lo && free < hi {
                        *bad = true;
                    }
                }
            }
            crate::elaborate::for_each_child(t, depth, &mut |c, d| walk(c, d, lo, hi, bad));
        }
        walk(
            t,
            0,
            n_prior_fields,
            n_prior_fields + ni,
            &mut bad,
        );
        if bad {
            return fail(
                "EData",
                decl.span,
                "constructor fields may not reference index binders",
            );
        }
        // Remove the ni index entries sitting between params and fields.
        let mut cur = t.clone();
        for _ in 0..ni {
            cur = substitute(&cur, n_prior_fields, &Term::True);
        }
        Ok(cur)
    };

    let mut ctors: Vec<CtorSig> = Vec::new();
    for rc2 in &raw {
        let mut fields: Vec<(Name, Term)> = Vec::new();
        for (k, (n, ty)) in rc2.fields.iter().enumerate() {
            fields.push((n.clone(), rescope(ty, k)?));
        }
        let nf = rc2.fields.len();
        let mut ret_indices = Vec::new();
        for ra in rc2.ret_args.iter().skip(split) {
            ret_indices.push(rescope(ra, nf)?);
        }
        ctors.push(CtorSig {
            name: rc2.name.clone(),
            fields,
            ret_indices,
            n_constraints: 0,
        });
    }

    let pre = InductiveSig {
        name: decl.name.clone(),
        level: decl.level,
        params: telescope[..split].to_vec(),
        indices: telescope[split..].to_vec(),
        n_idx_params: 0,
        ctors,
    };
    let desugared = desugar_family(&pre);
    if let Err(msg) = check_strict_positivity(&desugared) {
        return fail("EData", decl.span, msg);
    }
    globals.env.declare(desugared);
    Ok(())
}

pub fn for_each_child(t: &Term, depth: usize, f: &mut impl FnMut(&Term, usize)) {
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

/// Process a definition: elaborate the signature as a type, check the body
/// against it, verify the result re-checks under the kernel, and register.
pub fn declare_def(globals: &mut Globals, decl: &DefDecl) -> Result<ElabResult, ElabError> {
    if globals.env.lookup(&decl.name).is_some() || globals.lookup_def(&decl.name).is_some() {
        return fail("EDef", decl.span, format!("duplicate name {}", decl.name));
    }
    let el = Elaborator::new(globals);
    let ctx = Context::new();
    let (sig_t, _lvl) = el.elab_type(&ctx, &decl.sig)?;
    let sig_v = el.norm(&ctx, &sig_t)?;
    let body = el.check(&ctx, &decl.body, &sig_v)?;
    // Elaboration preserves typing: the elaborated body re-checks.
    Checker::new(&globals.env).check(&ctx, &body, &sig_v)?;
    let result = ElabResult {
        casts_inserted: count_casts(&body),
        rules: el.rules(),
        term: body.clone(),
        ty: sig_v.clone(),
    };
    globals.defs.push((decl.name.clone(), body, sig_v));
    Ok(result)
}

/// Elaborate one standalone expression against an optional expected surface
/// type.
pub fn elaborate_expr(
    globals: &Globals,
    s: &Surface,
    expected: Option<&Surface>,
) -> Result<ElabResult, ElabError> {
    let el = Elaborator::new(globals);
    let ctx = Context::new();
    let (term, ty) = match expected {
        Some(e) => {
            let (t_ty, _l) = el.elab_type(&ctx, e)?;
            let v = el.norm(&ctx, &t_ty)?;
            let t = el.check(&ctx, s, &v)?;
            (t, v)
        }
        None => el.synth(&ctx, s)?,
    };
    Checker::new(&globals.env).check(&ctx, &term, &ty)?;
    Ok(ElabResult {
        casts_inserted: count_casts(&term),
        rules: el.rules(),
        term,
        ty,
    })
}

/// Process a whole declaration stream.
pub fn declare(globals: &mut Globals, decl: &Decl) -> Result<Option<ElabResult>, ElabError> {
    match decl {
        Decl::Data(d) => {
            declare_data(globals, d)?;
            Ok(None)
        }
        Decl::Def(d) => Ok(Some(declare_def(globals, d)?)),
    }
}
