//! A standalone static checker and normalizer: the `?`-free language with
//! dependent functions, booleans, propositional equality and inductive
//! families in their original (index-carrying) form. Used as the oracle for
//! the conservative-extension tests; deliberately independent of the cast
//! calculus implementation.

use std::rc::Rc;

use thiserror::Error;

use crate::surface::{Surface, SurfaceKind};
use crate::term::{IndName, Level, Name};

#[derive(Debug, Clone, PartialEq)]
pub enum StaticTerm {
    Type(Level),
    Var(usize),
    Ascr(Rc<StaticTerm>, Rc<StaticTerm>),
    Pi(Name, Rc<StaticTerm>, Rc<StaticTerm>),
    Lam(Name, Rc<StaticTerm>),
    App(Rc<StaticTerm>, Rc<StaticTerm>),
    Bool,
    True,
    False,
    If(Rc<StaticTerm>, Rc<StaticTerm>, Rc<StaticTerm>),
    Eq {
        lhs: Rc<StaticTerm>,
        ty: Rc<StaticTerm>,
        rhs: Rc<StaticTerm>,
    },
    Refl,
    Subst {
        ty: Rc<StaticTerm>,
        motive: Rc<StaticTerm>,
        from: Rc<StaticTerm>,
        to: Rc<StaticTerm>,
        body: Rc<StaticTerm>,
        eq: Rc<StaticTerm>,
    },
    /// `C args` with args covering the full telescope (params then indices).
    TyCon { ind: IndName, args: Vec<StaticTerm> },
    /// `D args` with the constructor's declared telescope; the inductive's
    /// parameters are attached separately once known.
    Ctor {
        ind: IndName,
        ctor: usize,
        params: Vec<StaticTerm>,
        args: Vec<StaticTerm>,
    },
    Ind {
        ind: IndName,
        scrut: Rc<StaticTerm>,
        branches: Vec<StaticBranch>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticBranch {
    pub n_fields: usize,
    pub body: Rc<StaticTerm>,
}

impl StaticTerm {
    pub fn rc(self) -> Rc<StaticTerm> {
        Rc::new(self)
    }
}

#[derive(Debug, Clone)]
pub struct StaticCtor {
    pub name: Rc<str>,
    /// Field telescope scoped under [type params..., previous fields...].
    pub fields: Vec<(Name, StaticTerm)>,
    /// Return-type arguments (parameters then index expressions), scoped
    /// under [type params..., fields...].
    pub ret_args: Vec<StaticTerm>,
}

#[derive(Debug, Clone)]
pub struct StaticFamily {
    pub name: IndName,
    pub level: Level,
    /// Full telescope (parameters then indices); `n_params` marks the split.
    pub telescope: Vec<(Name, StaticTerm)>,
    pub n_params: usize,
    pub ctors: Vec<StaticCtor>,
}

#[derive(Debug, Clone, Default)]
pub struct StaticEnv {
    pub families: Vec<StaticFamily>,
    pub defs: Vec<(Rc<str>, StaticTerm, StaticTerm)>,
}

impl StaticEnv {
    pub fn family(&self, name: &str) -> Option<&StaticFamily> {
        self.families.iter().find(|f| &*f.name == name)
    }
    pub fn find_ctor(&self, name: &str) -> Option<(&StaticFamily, usize)> {
        for f in &self.families {
            if let Some(i) = f.ctors.iter().position(|c| &*c.name == name) {
                return Some((f, i));
            }
        }
        None
    }
    pub fn def(&self, name: &str) -> Option<(&StaticTerm, &StaticTerm)> {
        self.defs
            .iter()
            .find(|(n, _, _)| &**n == name)
            .map(|(_, t, ty)| (t, ty))
    }
}

#[derive(Debug, Error)]
pub enum StaticError {
    #[error("[{rule}] {msg}")]
    Rule { rule: &'static str, msg: String },
    #[error("[SConv] static type mismatch:\n  expected: {expected:?}\n  found:    {found:?}")]
    Mismatch {
        expected: Box<StaticTerm>,
        found: Box<StaticTerm>,
    },
    #[error("the program is not static: it contains `?`")]
    NotStatic,
}

fn fail<T>(rule: &'static str, msg: impl Into<String>) -> Result<T, StaticError> {
    Err(StaticError::Rule {
        rule,
        msg: msg.into(),
    })
}

// ---------- de Bruijn machinery ----------

fn map_vars(
    t: &StaticTerm,
    depth: usize,
    f: &mut dyn FnMut(usize, usize) -> StaticTerm,
) -> StaticTerm {
    let go = |t: &Rc<StaticTerm>, d: usize, f: &mut dyn FnMut(usize, usize) -> StaticTerm| {
        Rc::new(map_vars(t, d, f))
    };
    match t {
        StaticTerm::Var(i) => f(depth, *i),
        StaticTerm::Type(_) | StaticTerm::Bool | StaticTerm::True | StaticTerm::False
        | StaticTerm::Refl => t.clone(),
        StaticTerm::Ascr(a, b) => StaticTerm::Ascr(go(a, depth, f), go(b, depth, f)),
        StaticTerm::Pi(n, a, b) => {
            StaticTerm::Pi(n.clone(), go(a, depth, f), go(b, depth + 1, f))
        }
        StaticTerm::Lam(n, b) => StaticTerm::Lam(n.clone(), go(b, depth + 1, f)),
        StaticTerm::App(a, b) => StaticTerm::App(go(a, depth, f), go(b, depth, f)),
        StaticTerm::If(a, b, c) => {
            StaticTerm::If(go(a, depth, f), go(b, depth, f), go(c, depth, f))
        }
        StaticTerm::Eq { lhs, ty, rhs } => StaticTerm::Eq {
            lhs: go(lhs, depth, f),
            ty: go(ty, depth, f),
            rhs: go(rhs, depth, f),
        },
        StaticTerm::Subst {
            ty,
            motive,
            from,
            to,
            body,
            eq,
        } => StaticTerm::Subst {
            ty: go(ty, depth, f),
            motive: go(motive, depth, f),
            from: go(from, depth, f),
            to: go(to, depth, f),
            body: go(body, depth, f),
            eq: go(eq, depth, f),
        },
        StaticTerm::TyCon { ind, args } => StaticTerm::TyCon {
            ind: ind.clone(),
            args: args.iter().map(|a| map_vars(a, depth, f)).collect(),
        },
        StaticTerm::Ctor {
            ind,
            ctor,
            params,
            args,
        } => StaticTerm::Ctor {
            ind: ind.clone(),
            ctor: *ctor,
            params: params.iter().map(|a| map_vars(a, depth, f)).collect(),
            args: args.iter().map(|a| map_vars(a, depth, f)).collect(),
        },
        StaticTerm::Ind {
            ind,
            scrut,
            branches,
        } => StaticTerm::Ind {
            ind: ind.clone(),
            scrut: go(scrut, depth, f),
            branches: branches
                .iter()
                .map(|b| StaticBranch {
                    n_fields: b.n_fields,
                    body: go(&b.body, depth + 1 + b.n_fields, f),
                })
                .collect(),
        },
    }
}

pub fn sshift(t: &StaticTerm, amount: isize) -> StaticTerm {
    if amount == 0 {
        return t.clone();
    }
    map_vars(t, 0, &mut |d, i| {
        if i >= d {
            StaticTerm::Var((i as isize + amount) as usize)
        } else {
            StaticTerm::Var(i)
        }
    })
}

pub fn ssubst(body: &StaticTerm, target: usize, repl: &StaticTerm) -> StaticTerm {
    map_vars(body, 0, &mut |d, i| {
        use std::cmp::Ordering::*;
        if i < d {
            StaticTerm::Var(i)
        } else {
            match (i - d).cmp(&target) {
                Less => StaticTerm::Var(i),
                Equal => sshift(repl, d as isize),
                Greater => StaticTerm::Var(i - 1),
            }
        }
    })
}

pub fn ssubst_many(body: &StaticTerm, args: &[&StaticTerm]) -> StaticTerm {
    let k = args.len();
    map_vars(body, 0, &mut |d, i| {
        if i < d {
            StaticTerm::Var(i)
        } else {
            let free = i - d;
            if free < k {
                sshift(args[k - 1 - free], d as isize)
            } else {
                StaticTerm::Var(i - k)
            }
        }
    })
}

fn replace_free_var(t: &StaticTerm, target: usize, with: &StaticTerm) -> StaticTerm {
    map_vars(t, 0, &mut |depth, i| {
        if i >= depth && i - depth == target {
            sshift(with, depth as isize)
        } else {
            StaticTerm::Var(i)
        }
    })
}

// ---------- reduction and normalization ----------

fn top_rule(env: &StaticEnv, t: &StaticTerm) -> Option<StaticTerm> {
    match t {
        StaticTerm::App(f, a) => match &**f {
            StaticTerm::Lam(_, body) => Some(ssubst(body, 0, a)),
            StaticTerm::Ascr(inner, ty) => match (&**inner, &**ty) {
                (StaticTerm::Lam(_, body), StaticTerm::Pi(_, _, cod)) => Some(StaticTerm::Ascr(
                    ssubst(body, 0, a).rc(),
                    ssubst(cod, 0, a).rc(),
                )),
                _ => None,
            },
            _ => None,
        },
        StaticTerm::If(c, tb, eb) => match &**c {
            StaticTerm::True => Some((**tb).clone()),
            StaticTerm::False => Some((**eb).clone()),
            _ => None,
        },
        // Ascription removal; generalized from the base-value table to any
        // canonical form so values are comparable without annotations.
        StaticTerm::Ascr(inner, _) => match &**inner {
            StaticTerm::Var(_) | StaticTerm::App(..) => None,
            StaticTerm::Lam(..) => None,
            _ => Some((**inner).clone()),
        },
        StaticTerm::Subst { body, eq, .. } => match &**eq {
            StaticTerm::Refl => Some((**body).clone()),
            _ => None,
        },
        StaticTerm::Ind {
            ind,
            scrut,
            branches,
        } => match strip_ascr(scrut) {
            StaticTerm::Ctor {
                ind: i2,
                ctor,
                args,
                ..
            } if i2 == *ind => {
                let branch = branches.get(ctor)?;
                if branch.n_fields != args.len() {
                    return None;
                }
                let self_fn = {
                    // \z. ind z { .. } — index arguments are not needed for
                    // reduction; the static self takes them anyway to mirror
                    // the desugared arity.
                    let fam = env.family(ind)?;
                    let n_idx = fam.telescope.len() - fam.n_params;
                    let mut body = StaticTerm::Ind {
                        ind: ind.clone(),
                        scrut: StaticTerm::Var(0).rc(),
                        branches: branches
                            .iter()
                            .map(|b| StaticBranch {
                                n_fields: b.n_fields,
                                body: sshift_above(&b.body, 1 + b.n_fields, (n_idx + 1) as isize)
                                    .rc(),
                            })
                            .collect(),
                    };
                    body = StaticTerm::Lam(Name::named("z"), body.rc());
                    for _ in 0..n_idx {
                        body = StaticTerm::Lam(Name::named("i"), body.rc());
                    }
                    body
                };
                let mut subst_args: Vec<&StaticTerm> = vec![&self_fn];
                subst_args.extend(args.iter());
                Some(ssubst_many(&branch.body, &subst_args))
            }
            _ => None,
        },
        _ => None,
    }
}

fn sshift_above(t: &StaticTerm, cutoff: usize, amount: isize) -> StaticTerm {
    map_vars(t, cutoff, &mut |d, i| {
        if i >= d {
            StaticTerm::Var((i as isize + amount) as usize)
        } else {
            StaticTerm::Var(i)
        }
    })
}

fn strip_ascr(t: &StaticTerm) -> StaticTerm {
    match t {
        StaticTerm::Ascr(inner, _) => strip_ascr(inner),
        other => other.clone(),
    }
}

/// Full normal-order reduction (no eta).
pub fn reduce(env: &StaticEnv, t: &StaticTerm) -> StaticTerm {
    let mut steps = 0usize;
    reduce_bounded(env, t, &mut steps)
}

fn reduce_bounded(env: &StaticEnv, t: &StaticTerm, steps: &mut usize) -> StaticTerm {
    let mut cur = t.clone();
    loop {
        *steps += 1;
        assert!(*steps < 2_000_000, "static normalizer exceeded its ceiling");
        if let Some(next) = top_rule(env, &cur) {
            cur = next;
            continue;
        }
        let rebuilt = reduce_children(env, &cur, steps);
        if rebuilt == cur {
            return cur;
        }
        cur = rebuilt;
    }
}

fn reduce_children(env: &StaticEnv, t: &StaticTerm, steps: &mut usize) -> StaticTerm {
    let go = |x: &Rc<StaticTerm>, steps: &mut usize| reduce_bounded(env, x, steps).rc();
    match t {
        StaticTerm::Type(_)
        | StaticTerm::Var(_)
        | StaticTerm::Bool
        | StaticTerm::True
        | StaticTerm::False
        | StaticTerm::Refl => t.clone(),
        StaticTerm::Ascr(a, b) => StaticTerm::Ascr(go(a, steps), go(b, steps)),
        StaticTerm::Pi(n, a, b) => StaticTerm::Pi(n.clone(), go(a, steps), go(b, steps)),
        StaticTerm::Lam(n, b) => StaticTerm::Lam(n.clone(), go(b, steps)),
        StaticTerm::App(a, b) => StaticTerm::App(go(a, steps), go(b, steps)),
        StaticTerm::If(a, b, c) => StaticTerm::If(go(a, steps), go(b, steps), go(c, steps)),
        StaticTerm::Eq { lhs, ty, rhs } => StaticTerm::Eq {
            lhs: go(lhs, steps),
            ty: go(ty, steps),
            rhs: go(rhs, steps),
        },
        StaticTerm::Subst {
            ty,
            motive,
            from,
            to,
            body,
            eq,
        } => StaticTerm::Subst {
            ty: go(ty, steps),
            motive: go(motive, steps),
            from: go(from, steps),
            to: go(to, steps),
            body: go(body, steps),
            eq: go(eq, steps),
        },
        StaticTerm::TyCon { ind, args } => StaticTerm::TyCon {
            ind: ind.clone(),
            args: args.iter().map(|a| reduce_bounded(env, a, steps)).collect(),
        },
        StaticTerm::Ctor {
            ind,
            ctor,
            params,
            args,
        } => StaticTerm::Ctor {
            ind: ind.clone(),
            ctor: *ctor,
            params: params.iter().map(|a| reduce_bounded(env, a, steps)).collect(),
            args: args.iter().map(|a| reduce_bounded(env, a, steps)).collect(),
        },
        StaticTerm::Ind {
            ind,
            scrut,
            branches,
        } => StaticTerm::Ind {
            ind: ind.clone(),
            scrut: go(scrut, steps),
            branches: branches
                .iter()
                .map(|b| StaticBranch {
                    n_fields: b.n_fields,
                    body: go(&b.body, steps),
                })
                .collect(),
        },
    }
}

fn is_neutral(t: &StaticTerm) -> bool {
    match t {
        StaticTerm::Var(_) => true,
        StaticTerm::App(f, _) => is_neutral(f),
        StaticTerm::If(c, _, _) => is_neutral(c),
        StaticTerm::Subst { eq, .. } => is_neutral(eq),
        StaticTerm::Ind { scrut, .. } => is_neutral(scrut),
        StaticTerm::Ascr(inner, _) => is_neutral(inner),
        _ => false,
    }
}

pub struct StaticChecker<'e> {
    pub env: &'e StaticEnv,
}

impl<'e> StaticChecker<'e> {
    pub fn new(env: &'e StaticEnv) -> Self {
        StaticChecker { env }
    }

    /// Type-directed eta expansion of a reduced term.
    fn eta(&self, ctx: &[StaticTerm], v: &StaticTerm, ty: &StaticTerm) -> StaticTerm {
        let tyr = reduce(self.env, ty);
        match &tyr {
            StaticTerm::Pi(n, dom, cod) => match v {
                StaticTerm::Lam(ln, body) => {
                    let mut ctx2 = ctx.to_vec();
                    ctx2.push((**dom).clone());
                    StaticTerm::Lam(ln.clone(), self.eta(&ctx2, body, cod).rc())
                }
                StaticTerm::Ascr(inner, _) => self.eta(ctx, inner, &tyr),
                neutral if is_neutral(neutral) => {
                    let mut ctx2 = ctx.to_vec();
                    ctx2.push((**dom).clone());
                    let app = StaticTerm::App(sshift(neutral, 1).rc(), StaticTerm::Var(0).rc());
                    let body = self.eta(&ctx2, &reduce(self.env, &app), cod);
                    StaticTerm::Lam(n.clone(), body.rc())
                }
                other => other.clone(),
            },
            _ => match v {
                StaticTerm::Ascr(inner, _) => self.eta(ctx, inner, &tyr),
                other => other.clone(),
            },
        }
    }

    /// `static_normalize`: reduce then eta-expand at the given type.
    pub fn normalize(
        &self,
        ctx: &[StaticTerm],
        t: &StaticTerm,
        ty: &StaticTerm,
    ) -> StaticTerm {
        let r = reduce(self.env, t);
        self.eta(ctx, &r, ty)
    }

    fn norm_no_ty(&self, t: &StaticTerm) -> StaticTerm {
        reduce(self.env, t)
    }

    fn lookup(&self, ctx: &[StaticTerm], i: usize) -> Option<StaticTerm> {
        if i >= ctx.len() {
            return None;
        }
        Some(sshift(&ctx[ctx.len() - 1 - i], (i + 1) as isize))
    }

    pub fn synth(&self, ctx: &[StaticTerm], t: &StaticTerm) -> Result<StaticTerm, StaticError> {
        match t {
            StaticTerm::Var(i) => self
                .lookup(ctx, *i)
                .ok_or_else(|| StaticError::Rule {
                    rule: "SVar",
                    msg: format!("unbound variable {i}"),
                }),
            StaticTerm::Type(l) => Ok(StaticTerm::Type(l.succ())),
            StaticTerm::Bool => Ok(StaticTerm::Type(Level(0))),
            StaticTerm::True | StaticTerm::False => Ok(StaticTerm::Bool),
            StaticTerm::Ascr(body, ty) => {
                let _l = self.universe_of(ctx, ty)?;
                let v = self.norm_no_ty(ty);
                self.check(ctx, body, &v)?;
                Ok((**ty).clone())
            }
            StaticTerm::Pi(n, dom, cod) => {
                let l1 = self.universe_of(ctx, dom)?;
                let mut ctx2 = ctx.to_vec();
                let _ = n;
                ctx2.push((**dom).clone());
                let l2 = self.universe_of(&ctx2, cod)?;
                Ok(StaticTerm::Type(l1.max(l2)))
            }
            StaticTerm::App(f, a) => {
                let fty = self.synth(ctx, f)?;
                match self.norm_no_ty(&fty) {
                    StaticTerm::Pi(_, dom, cod) => {
                        self.check(ctx, a, &self.norm_no_ty(&dom))?;
                        Ok(ssubst(&cod, 0, a))
                    }
                    other => fail("SApp", format!("not a function type: {other:?}")),
                }
            }
            StaticTerm::Lam(..) => fail("SLam", "unannotated functions do not synthesize"),
            StaticTerm::If(..) => fail("SIf", "if only checks against a type"),
            StaticTerm::Eq { lhs, ty, rhs } => {
                let l = self.universe_of(ctx, ty)?;
                let v = self.norm_no_ty(ty);
                self.check(ctx, lhs, &v)?;
                self.check(ctx, rhs, &v)?;
                Ok(StaticTerm::Type(l))
            }
            StaticTerm::Refl => fail("SRefl", "refl only checks against an equality type"),
            StaticTerm::Subst {
                ty,
                motive,
                from,
                to,
                body,
                eq,
            } => {
                self.universe_of(ctx, ty)?;
                let tyn = self.norm_no_ty(ty);
                // motive: (x : ty) -> Type l
                let mty = self.synth(ctx, motive)?;
                match self.norm_no_ty(&mty) {
                    StaticTerm::Pi(_, dom, cod) => {
                        if self.norm_no_ty(&dom) != tyn {
                            return fail("SSubst", "motive domain mismatch");
                        }
                        if !matches!(&*cod, StaticTerm::Type(_)) {
                            return fail("SSubst", "motive must land in a universe");
                        }
                    }
                    _ => return fail("SSubst", "motive must be a function"),
                }
                self.check(ctx, from, &tyn)?;
                self.check(ctx, to, &tyn)?;
                self.check(
                    ctx,
                    body,
                    &self.norm_no_ty(&StaticTerm::App(motive.clone(), from.clone())),
                )?;
                self.check(
                    ctx,
                    eq,
                    &self.norm_no_ty(&StaticTerm::Eq {
                        lhs: from.clone(),
                        ty: tyn.clone().rc(),
                        rhs: to.clone(),
                    }),
                )?;
                Ok(StaticTerm::App(motive.clone(), to.clone()))
            }
            StaticTerm::TyCon { ind, args } => {
                let fam = self
                    .env
                    .family(ind)
                    .ok_or_else(|| StaticError::Rule {
                        rule: "STyCon",
                        msg: format!("unknown inductive {ind}"),
                    })?
                    .clone();
                if args.len() != fam.telescope.len() {
                    return fail("STyCon", "wrong number of type arguments");
                }
                for (i, a) in args.iter().enumerate() {
                    let prior: Vec<&StaticTerm> = args[..i].iter().collect();
                    let ety = ssubst_many(&fam.telescope[i].1, &prior);
                    self.check(ctx, a, &self.norm_no_ty(&ety))?;
                }
                Ok(StaticTerm::Type(fam.level))
            }
            StaticTerm::Ctor {
                ind,
                ctor,
                params,
                args,
            } => {
                let fam = self
                    .env
                    .family(ind)
                    .ok_or_else(|| StaticError::Rule {
                        rule: "SCtor",
                        msg: format!("unknown inductive {ind}"),
                    })?
                    .clone();
                let cs = &fam.ctors[*ctor];
                if params.len() != fam.n_params || args.len() != cs.fields.len() {
                    return fail("SCtor", "constructor arity mismatch");
                }
                for (i, p) in params.iter().enumerate() {
                    let prior: Vec<&StaticTerm> = params[..i].iter().collect();
                    let ety = ssubst_many(&fam.telescope[i].1, &prior);
                    self.check(ctx, p, &self.norm_no_ty(&ety))?;
                }
                // Field and return types are scoped under the full
                // telescope; index slots are unreferenced but need padding.
                let pad = fam.telescope.len() - fam.n_params;
                for (i, a) in args.iter().enumerate() {
                    let mut owned: Vec<StaticTerm> = params.clone();
                    owned.extend(std::iter::repeat(StaticTerm::True).take(pad));
                    owned.extend(args[..i].iter().cloned());
                    let inst: Vec<&StaticTerm> = owned.iter().collect();
                    let ety = ssubst_many(&cs.fields[i].1, &inst);
                    self.check(ctx, a, &self.norm_no_ty(&ety))?;
                }
                // Synthesize the return type from the declared ret_args.
                let mut owned: Vec<StaticTerm> = params.clone();
                owned.extend(std::iter::repeat(StaticTerm::True).take(pad));
                owned.extend(args.iter().cloned());
                let inst: Vec<&StaticTerm> = owned.iter().collect();
                let ret: Vec<StaticTerm> = cs
                    .ret_args
                    .iter()
                    .map(|r| ssubst_many(r, &inst))
                    .collect();
                Ok(StaticTerm::TyCon {
                    ind: ind.clone(),
                    args: ret,
                })
            }
            StaticTerm::Ind { .. } => fail("SInd", "ind only checks against a type"),
        }
    }

    pub fn universe_of(
        &self,
        ctx: &[StaticTerm],
        ty: &StaticTerm,
    ) -> Result<Level, StaticError> {
        let k = self.synth(ctx, ty)?;
        match self.norm_no_ty(&k) {
            StaticTerm::Type(l) => Ok(l),
            other => fail("SType", format!("not a type: {other:?}")),
        }
    }

    pub fn check(
        &self,
        ctx: &[StaticTerm],
        t: &StaticTerm,
        v: &StaticTerm,
    ) -> Result<(), StaticError> {
        match (t, v) {
            (StaticTerm::Lam(n, body), StaticTerm::Pi(_, dom, cod)) => {
                let mut ctx2 = ctx.to_vec();
                let _ = n;
                ctx2.push((**dom).clone());
                self.check(&ctx2, body, &self.norm_no_ty(cod))
            }
            (StaticTerm::If(c, tb, eb), _) => {
                self.check(ctx, c, &StaticTerm::Bool)?;
                self.check(ctx, tb, v)?;
                self.check(ctx, eb, v)
            }
            (StaticTerm::Refl, StaticTerm::Eq { lhs, rhs, .. }) => {
                let l = self.norm_no_ty(lhs);
                let r = self.norm_no_ty(rhs);
                if l == r {
                    Ok(())
                } else {
                    fail("SRefl", format!("sides are not convertible: {l:?} vs {r:?}"))
                }
            }
            (
                StaticTerm::Ind {
                    ind,
                    scrut,
                    branches,
                },
                _,
            ) => self.check_ind(ctx, ind, scrut, branches, v),
            (
                StaticTerm::Ctor {
                    ind, ctor, params, ..
                },
                StaticTerm::TyCon { ind: i2, args },
            ) if ind == i2 && params.is_empty() => {
                // Parameters come from the expected type.
                let fam = self.env.family(ind).unwrap().clone();
                let with_params = match t {
                    StaticTerm::Ctor { args: cargs, .. } => StaticTerm::Ctor {
                        ind: ind.clone(),
                        ctor: *ctor,
                        params: args[..fam.n_params].to_vec(),
                        args: cargs.clone(),
                    },
                    _ => unreachable!(),
                };
                self.conv(ctx, &with_params, v)
            }
            _ => self.conv(ctx, t, v),
        }
    }

    /// SConv: synthesize and compare normal forms (with eta).
    fn conv(&self, ctx: &[StaticTerm], t: &StaticTerm, v: &StaticTerm) -> Result<(), StaticError> {
        let ty = self.synth(ctx, t)?;
        let lhs = self.normalize(ctx, &ty, &StaticTerm::Type(Level(9)));
        let rhs = self.normalize(ctx, v, &StaticTerm::Type(Level(9)));
        if lhs == rhs {
            Ok(())
        } else {
            Err(StaticError::Mismatch {
                expected: Box::new(rhs),
                found: Box::new(lhs),
            })
        }
    }

    fn check_ind(
        &self,
        ctx: &[StaticTerm],
        ind: &IndName,
        scrut: &Rc<StaticTerm>,
        branches: &[StaticBranch],
        goal: &StaticTerm,
    ) -> Result<(), StaticError> {
        let sty = self.synth(ctx, scrut)?;
        let (fam, targs) = match self.norm_no_ty(&sty) {
            StaticTerm::TyCon { ind: i2, args } if i2 == *ind => {
                (self.env.family(ind).unwrap().clone(), args)
            }
            other => {
                return fail(
                    "SInd",
                    format!("scrutinee is not an application of {ind}: {other:?}"),
                )
            }
        };
        if branches.len() != fam.ctors.len() {
            return fail("SInd", "wrong number of branches");
        }
        let n_params = fam.n_params;
        for (ci, cs) in fam.ctors.iter().enumerate() {
            let b = &branches[ci];
            if b.n_fields != cs.fields.len() {
                return fail("SInd", format!("branch arity mismatch for {}", cs.name));
            }
            // Branch context: self then the fields at the scrutinee's params.
            let shift_by = (1 + b.n_fields) as isize;
            // Goal with the scrutinee's *variable* indices specialized to the
            // constructor's declared index expressions, and a variable
            // scrutinee replaced by the constructed value.
            let mut goal_b = sshift(goal, shift_by);
            let params_here: Vec<StaticTerm> =
                targs[..n_params].iter().map(|p| sshift(p, shift_by)).collect();
            let field_vars: Vec<StaticTerm> = (0..b.n_fields)
                .map(|i| StaticTerm::Var(b.n_fields - 1 - i))
                .collect();
            // Declared return args instantiated in branch scope (padding
            // the unused index-telescope slots).
            let pad = fam.telescope.len() - n_params;
            let mut owned: Vec<StaticTerm> = params_here.clone();
            owned.extend(std::iter::repeat(StaticTerm::True).take(pad));
            owned.extend(field_vars.iter().cloned());
            let inst: Vec<&StaticTerm> = owned.iter().collect();
            let ret_args: Vec<StaticTerm> = cs
                .ret_args
                .iter()
                .map(|r| ssubst_many(r, &inst))
                .collect();
            for (i, ta) in targs.iter().enumerate().skip(n_params) {
                if let StaticTerm::Var(outer) = ta {
                    goal_b = replace_free_var(
                        &goal_b,
                        outer + b.n_fields + 1,
                        &ret_args[i],
                    );
                }
            }
            if let StaticTerm::Var(sv) = &**scrut {
                let built = StaticTerm::Ctor {
                    ind: ind.clone(),
                    ctor: ci,
                    params: params_here.clone(),
                    args: field_vars.clone(),
                };
                goal_b = replace_free_var(&goal_b, sv + b.n_fields + 1, &built);
            }
            // Self-reference type: (idx..) -> (z : C params idx..) -> goal
            // (the goal is scrut-independent unless specialized above; we use
            // the unspecialized goal for recursion).
            let n_idx = fam.telescope.len() - n_params;
            let self_ty = {
                let mut args2: Vec<StaticTerm> = targs[..n_params]
                    .iter()
                    .map(|p| sshift(p, n_idx as isize))
                    .collect();
                for i in 0..n_idx {
                    args2.push(StaticTerm::Var(n_idx - 1 - i));
                }
                let mut ty = StaticTerm::Pi(
                    Name::named("z"),
                    StaticTerm::TyCon {
                        ind: ind.clone(),
                        args: args2,
                    }
                    .rc(),
                    sshift_above(&sshift(goal, (n_idx + 1) as isize), 0, 0).rc(),
                );
                // Replace variable indices in the goal with the binders.
                for (i, ta) in targs.iter().enumerate().skip(n_params) {
                    if let StaticTerm::Var(outer) = ta {
                        if let StaticTerm::Pi(zn, zt, body) = ty {
                            let nb = replace_free_var(
                                &body,
                                outer + n_idx + 1 + 1,
                                &StaticTerm::Var(1 + (n_idx - 1 - (i - n_params))),
                            );
                            ty = StaticTerm::Pi(zn, zt, nb.rc());
                        }
                    }
                }
                for i in (0..n_idx).rev() {
                    let mut inst2: Vec<StaticTerm> = targs[..n_params]
                        .iter()
                        .map(|p| sshift(p, i as isize))
                        .collect();
                    for j in 0..i {
                        inst2.push(StaticTerm::Var(i - 1 - j));
                    }
                    let refs: Vec<&StaticTerm> = inst2.iter().collect();
                    ty = StaticTerm::Pi(
                        Name::named("i"),
                        ssubst_many(&fam.telescope[n_params + i].1, &refs).rc(),
                        ty.rc(),
                    );
                }
                ty
            };
            let mut ctx2 = ctx.to_vec();
            ctx2.push(self_ty);
            for (fi, (_, fty)) in cs.fields.iter().enumerate() {
                // Field fi's type is scoped under [telescope, fields[..fi]];
                // instantiate the parameters (shifted into the field scope,
                // which sits 1 + fi entries deep) and the prior field vars.
                // Index telescope entries are unused in well-formed fields,
                // but must still occupy substitution slots.
                let mut inst2: Vec<StaticTerm> = targs[..n_params]
                    .iter()
                    .map(|p| sshift(p, (1 + fi) as isize))
                    .collect();
                for _ in n_params..fam.telescope.len() {
                    inst2.push(StaticTerm::True);
                }
                for fj in 0..fi {
                    inst2.push(StaticTerm::Var(fi - 1 - fj));
                }
                let refs: Vec<&StaticTerm> = inst2.iter().collect();
                ctx2.push(ssubst_many(fty, &refs));
            }
            self.check(&ctx2, &b.body, &self.norm_no_ty(&goal_b))?;
        }
        Ok(())
    }
}

// ---------- surface conversion ----------

/// Convert a surface term to the static fragment; `?` is rejected.
pub fn surface_to_static(env: &StaticEnv, s: &Surface) -> Result<StaticTerm, StaticError> {
    // Application spines need global resolution, as in the elaborator.
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
    match &s.kind {
        SurfaceKind::Type(l) => Ok(StaticTerm::Type(*l)),
        SurfaceKind::Var(i) => Ok(StaticTerm::Var(*i)),
        SurfaceKind::Bool => Ok(StaticTerm::Bool),
        SurfaceKind::True => Ok(StaticTerm::True),
        SurfaceKind::False => Ok(StaticTerm::False),
        SurfaceKind::Unknown(_) => Err(StaticError::NotStatic),
        SurfaceKind::Refl => Ok(StaticTerm::Refl),
        SurfaceKind::Ascr(a, b) => Ok(StaticTerm::Ascr(
            surface_to_static(env, a)?.rc(),
            surface_to_static(env, b)?.rc(),
        )),
        SurfaceKind::Pi(n, a, b) => Ok(StaticTerm::Pi(
            n.clone(),
            surface_to_static(env, a)?.rc(),
            surface_to_static(env, b)?.rc(),
        )),
        SurfaceKind::Lam(n, b) => Ok(StaticTerm::Lam(
            n.clone(),
            surface_to_static(env, b)?.rc(),
        )),
        SurfaceKind::If(a, b, c) => Ok(StaticTerm::If(
            surface_to_static(env, a)?.rc(),
            surface_to_static(env, b)?.rc(),
            surface_to_static(env, c)?.rc(),
        )),
        SurfaceKind::Eq(a, t, b) => Ok(StaticTerm::Eq {
            lhs: surface_to_static(env, a)?.rc(),
            ty: surface_to_static(env, t)?.rc(),
            rhs: surface_to_static(env, b)?.rc(),
        }),
        SurfaceKind::Subst(parts) => {
            let conv: Result<Vec<_>, _> =
                parts.iter().map(|p| surface_to_static(env, p)).collect();
            let mut it = conv?.into_iter();
            Ok(StaticTerm::Subst {
                ty: it.next().unwrap().rc(),
                motive: it.next().unwrap().rc(),
                from: it.next().unwrap().rc(),
                to: it.next().unwrap().rc(),
                body: it.next().unwrap().rc(),
                eq: it.next().unwrap().rc(),
            })
        }
        SurfaceKind::Global(_) | SurfaceKind::App(..) => {
            let (head, args) = spine(s);
            let conv_args: Result<Vec<_>, _> =
                args.iter().map(|a| surface_to_static(env, a)).collect();
            let conv_args = conv_args?;
            match &head.kind {
                SurfaceKind::Global(name) => {
                    if let Some((def, ty)) = env.def(name) {
                        // Ascribe the inlined body so applications of it can
                        // synthesize.
                        let mut t =
                            StaticTerm::Ascr(def.clone().rc(), ty.clone().rc());
                        for a in conv_args {
                            t = StaticTerm::App(t.rc(), a.rc());
                        }
                        Ok(t)
                    } else if env.family(name).is_some() {
                        Ok(StaticTerm::TyCon {
                            ind: name.clone().into(),
                            args: conv_args,
                        })
                    } else if let Some((fam, ci)) = env.find_ctor(name) {
                        Ok(StaticTerm::Ctor {
                            ind: fam.name.clone(),
                            ctor: ci,
                            params: vec![],
                            args: conv_args,
                        })
                    } else {
                        fail("SVar", format!("unknown name `{name}`"))
                    }
                }
                _ => {
                    let mut t = surface_to_static(env, head)?;
                    for a in conv_args {
                        t = StaticTerm::App(t.rc(), a.rc());
                    }
                    Ok(t)
                }
            }
        }
        SurfaceKind::Ind {
            scrut, branches, ..
        } => {
            let mut out: Vec<Option<StaticBranch>> = Vec::new();
            // Branch order must follow the declaration; resolve by name.
            let first = branches
                .first()
                .ok_or(StaticError::Rule {
                    rule: "SInd",
                    msg: "empty ind".into(),
                })?;
            let fam = env
                .find_ctor(&first.ctor)
                .ok_or_else(|| StaticError::Rule {
                    rule: "SInd",
                    msg: format!("unknown constructor {}", first.ctor),
                })?
                .0
                .clone();
            out.resize(fam.ctors.len(), None);
            for b in branches {
                let ci = fam
                    .ctors
                    .iter()
                    .position(|c| c.name == b.ctor)
                    .ok_or_else(|| StaticError::Rule {
                        rule: "SInd",
                        msg: format!("{} is not a constructor of {}", b.ctor, fam.name),
                    })?;
                let nf = fam.ctors[ci].fields.len();
                if b.binders.len() != nf {
                    return fail(
                        "SInd",
                        format!(
                            "branch for {} binds {} fields, expected {}",
                            b.ctor,
                            b.binders.len(),
                            nf
                        ),
                    );
                }
                out[ci] = Some(StaticBranch {
                    n_fields: nf,
                    body: surface_to_static(env, &b.body)?.rc(),
                });
            }
            let branches = out
                .into_iter()
                .enumerate()
                .map(|(i, b)| {
                    b.ok_or_else(|| StaticError::Rule {
                        rule: "SInd",
                        msg: format!("missing branch for {}", fam.ctors[i].name),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(StaticTerm::Ind {
                ind: fam.name.clone(),
                scrut: surface_to_static(env, scrut)?.rc(),
                branches,
            })
        }
    }
}

/// Process a data declaration into the static environment.
pub fn declare_static_data(
    env: &mut StaticEnv,
    decl: &crate::surface::DataDecl,
) -> Result<(), StaticError> {
    let checker_env = env.clone();
    let checker = StaticChecker::new(&checker_env);
    let mut telescope: Vec<(Name, StaticTerm)> = Vec::new();
    let mut ctx: Vec<StaticTerm> = Vec::new();
    for (n, sty) in &decl.telescope {
        let t = surface_to_static(&checker_env, sty)?;
        checker.universe_of(&ctx, &t)?;
        ctx.push(t.clone());
        telescope.push((n.clone(), t));
    }
    // Shell for recursive constructor references.
    let mut with_shell = env.clone();
    with_shell.families.push(StaticFamily {
        name: decl.name.clone(),
        level: decl.level,
        telescope: telescope.clone(),
        n_params: telescope.len(),
        ctors: vec![],
    });
    let mut ctors: Vec<StaticCtor> = Vec::new();
    for (cname, cty) in &decl.ctors {
        let st = surface_to_static(&with_shell, cty)?;
        // Split the Pi telescope from the return.
        let mut fields: Vec<(Name, StaticTerm)> = Vec::new();
        let mut cur = st;
        loop {
            match cur {
                StaticTerm::Pi(n, dom, cod) => {
                    fields.push((n.clone(), (*dom).clone()));
                    cur = (*cod).clone();
                }
                other => {
                    cur = other;
                    break;
                }
            }
        }
        let ret_args = match cur {
            StaticTerm::TyCon { ind, args } if ind == decl.name => args,
            other => {
                return fail(
                    "SData",
                    format!("constructor {cname} must return {}: {other:?}", decl.name),
                )
            }
        };
        ctors.push(StaticCtor {
            name: cname.clone(),
            fields,
            ret_args,
        });
    }
    // Parameter prefix: positions every constructor returns unchanged.
    let nt = telescope.len();
    let mut is_param = vec![true; nt];
    for c in &ctors {
        let nf = c.fields.len();
        for (i, r) in c.ret_args.iter().enumerate() {
            let expect = nf + nt - 1 - i;
            if !matches!(r, StaticTerm::Var(v) if *v == expect) {
                is_param[i] = false;
            }
        }
    }
    let n_params = is_param.iter().take_while(|b| **b).count();
    env.families.push(StaticFamily {
        name: decl.name.clone(),
        level: decl.level,
        telescope,
        n_params,
        ctors,
    });
    Ok(())
}

/// Process a definition; returns its normalized value and type.
pub fn declare_static_def(
    env: &mut StaticEnv,
    decl: &crate::surface::DefDecl,
) -> Result<(StaticTerm, StaticTerm), StaticError> {
    let sig = surface_to_static(env, &decl.sig)?;
    let body = surface_to_static(env, &decl.body)?;
    let snapshot = env.clone();
    let checker = StaticChecker::new(&snapshot);
    checker.universe_of(&[], &sig)?;
    let sig_n = reduce(&snapshot, &sig);
    checker.check(&[], &body, &sig_n)?;
    env.defs.push((decl.name.clone(), body.clone(), sig_n.clone()));
    Ok((body, sig_n))
}

/// `static_check` over a whole declaration stream: every definition must
/// check. Returns the normalized value of the last definition.
pub fn check_static_module(
    decls: &[crate::surface::Decl],
) -> Result<(StaticEnv, Option<(StaticTerm, StaticTerm)>), StaticError> {
    let mut env = StaticEnv::default();
    let mut last = None;
    for d in decls {
        match d {
            crate::surface::Decl::Data(dd) => declare_static_data(&mut env, dd)?,
            crate::surface::Decl::Def(df) => {
                let (body, ty) = declare_static_def(&mut env, df)?;
                let snapshot = env.clone();
                let checker = StaticChecker::new(&snapshot);
                let v = checker.normalize(&[], &body, &ty);
                last = Some((v, ty));
            }
        }
    }
    Ok((env, last))
}

/// Embed a static *value* into the cast calculus, dropping ascriptions and
/// filling in the annotations the cast calculus requires (type-directed).
pub fn embed_value(
    env: &StaticEnv,
    genv: &crate::sig::Env,
    v: &StaticTerm,
    ty: &crate::term::Term,
) -> crate::term::Term {
    use crate::term::Term;
    match (v, ty) {
        (StaticTerm::Ascr(inner, _), _) => embed_value(env, genv, inner, ty),
        (StaticTerm::Lam(n, body), Term::Pi(_, dom, cod)) => Term::Lam(
            n.clone(),
            dom.clone(),
            embed_value(env, genv, body, cod).rc(),
        ),
        (StaticTerm::True, _) => Term::True,
        (StaticTerm::False, _) => Term::False,
        (StaticTerm::Type(l), _) => Term::Type(*l),
        (StaticTerm::Bool, _) => Term::Bool,
        (StaticTerm::Var(i), _) => Term::Var(*i),
        (StaticTerm::Pi(n, dom, cod), _) => {
            let d = embed_value(env, genv, dom, &Term::ty(9));
            Term::Pi(
                n.clone(),
                d.rc(),
                embed_value(env, genv, cod, &Term::ty(9)).rc(),
            )
        }
        (StaticTerm::Eq { lhs, ty: t, rhs }, _) => {
            let te = embed_value(env, genv, t, &Term::ty(9));
            Term::Eq {
                lhs: embed_value(env, genv, lhs, &te).rc(),
                ty: te.clone().rc(),
                rhs: embed_value(env, genv, rhs, &te).rc(),
            }
        }
        (
            StaticTerm::Ctor {
                ind,
                ctor,
                params,
                args,
            },
            _,
        ) => {
            // The desugared constructor appends one evidence field per
            // index: refl with the index value itself as evidence.
            let sig = genv.lookup(ind).expect("inductive in kernel env");
            let fam = env.family(ind).expect("inductive in static env");
            let eparams: Vec<Term> = params
                .iter()
                .map(|p| embed_value(env, genv, p, &Term::ty(9)))
                .collect();
            let mut efields: Vec<Term> = args
                .iter()
                .map(|a| embed_value(env, genv, a, &Term::ty(9)))
                .collect();
            // Append evidence fields: full parameters are params ++ indices.
            let cs = &fam.ctors[*ctor];
            let pad = fam.telescope.len() - fam.n_params;
            let mut owned: Vec<StaticTerm> = params.clone();
            owned.extend(std::iter::repeat(StaticTerm::True).take(pad));
            owned.extend(args.iter().cloned());
            let inst: Vec<&StaticTerm> = owned.iter().collect();
            let full_params: Vec<Term> = match ty {
                Term::TyCon { args: ta, .. } => ta.clone(),
                _ => {
                    let mut out = eparams.clone();
                    for r in cs.ret_args.iter().skip(fam.n_params) {
                        out.push(embed_value(env, genv, &ssubst_many(r, &inst), &Term::ty(9)));
                    }
                    out
                }
            };
            for j in 0..sig.n_idx_params {
                let idx_term = full_params[sig.params.len() - sig.n_idx_params + j].clone();
                let declared = embed_value(
                    env,
                    genv,
                    &ssubst_many(&cs.ret_args[fam.n_params + j], &inst),
                    &Term::ty(9),
                );
                efields.push(Term::Refl {
                    ev: declared.clone().rc(),
                    lhs: idx_term.rc(),
                    rhs: declared.rc(),
                });
            }
            Term::Ctor {
                ind: ind.clone(),
                ctor: *ctor,
                params: full_params,
                fields: efields,
            }
        }
        (StaticTerm::TyCon { ind, args }, _) => Term::TyCon {
            ind: ind.clone(),
            args: args
                .iter()
                .map(|a| embed_value(env, genv, a, &Term::ty(9)))
                .collect(),
        },
        (StaticTerm::App(f, a), _) => Term::App(
            embed_value(env, genv, f, &Term::ty(9)).rc(),
            embed_value(env, genv, a, &Term::ty(9)).rc(),
        ),
        (other, _) => panic!("cannot embed static value {other:?}"),
    }
}
