//! Back-translation from target values to cast-calculus values. Partial and
//! type-directed: the caller supplies the kernel type of the value, and
//! stuck pattern matches are recognized by the definitions that generate
//! them. An unrecognized value signals a model bug and is surfaced, never
//! patched over.

use thiserror::Error;

use crate::context::Context;
use crate::normalize::{EvalMode, Machine, DEFAULT_CEILING};
use crate::sig::Env;
use crate::subst::subst_many;
use crate::term::{Level, Name, Term, TypeTag};

use super::prelude::{Gen, ModelNames, B_ERR, B_FALSE, B_TRUE, B_UNK, C_BOOL, C_EQ, C_ERR, C_PI, C_TYPE, C_UNK, U_BOOL, U_ERR, U_FUN, U_UNK};
use super::term::{Prelude, StirTerm};

#[derive(Debug, Error)]
pub enum BackError {
    #[error("unrecognized model value: {0}")]
    Unrecognized(String),
}

fn unrecognized<T>(msg: impl Into<String>) -> Result<T, BackError> {
    Err(BackError::Unrecognized(msg.into()))
}

pub struct Backer<'a> {
    pub env: &'a Env,
    pub gen: &'a Gen<'a>,
    pub prelude: &'a Prelude,
}

impl<'a> Backer<'a> {
    fn reduce(&self, t: &Term) -> Term {
        let mut m = Machine::new(self.env, EvalMode::Approximate, DEFAULT_CEILING);
        m.norm_full(t).unwrap_or_else(|_| t.clone())
    }

    /// Back-translate a value at the given kernel type (which will be
    /// reduced as needed). `ctx` holds kernel types for stir binders.
    pub fn value(&self, ctx: &[Term], v: &StirTerm, ty: &Term) -> Result<Term, BackError> {
        let tyr = self.reduce(ty);
        match &tyr {
            Term::Pi(n, dom, cod) => match v {
                StirTerm::Lam(_, _, body) => {
                    let mut ctx2 = ctx.to_vec();
                    ctx2.push((**dom).clone());
                    Ok(Term::Lam(
                        n.clone(),
                        dom.clone(),
                        self.value(&ctx2, body, cod)?.rc(),
                    ))
                }
                other => self.neutral(ctx, other).map(|(t, _)| t),
            },
            Term::Bool => match v {
                StirTerm::Ctor { ind, ctor, .. } if ind.starts_with("GBool") => Ok(match *ctor {
                    B_TRUE => Term::True,
                    B_FALSE => Term::False,
                    B_UNK => Term::unk(Term::Bool),
                    B_ERR => Term::err(Term::Bool),
                    _ => return unrecognized("bad GBool constructor"),
                }),
                other => self.neutral(ctx, other).map(|(t, _)| t),
            },
            Term::Type(l) => self.code(ctx, v, l.0),
            Term::Eq { lhs, ty: t, rhs } => match v {
                StirTerm::Ctor { ind, ctor, args }
                    if ind.starts_with("GEq") && *ctor == 0 && args.len() == 4 =>
                {
                    let ev = self.value(ctx, &args[3], t)?;
                    Ok(Term::Refl {
                        ev: ev.rc(),
                        lhs: lhs.clone(),
                        rhs: rhs.clone(),
                    })
                }
                other => self.neutral(ctx, other).map(|(t2, _)| t2),
            },
            Term::TyCon { ind, args } => {
                let gname = ModelNames::gind(ind);
                match v {
                    StirTerm::Ctor {
                        ind: gi,
                        ctor,
                        args: vargs,
                    } if **gi == *gname => {
                        let sig = self.env.lookup(ind).unwrap().clone();
                        if *ctor == sig.ctors.len() {
                            return Ok(Term::unk(tyr.clone()));
                        }
                        if *ctor == sig.ctors.len() + 1 {
                            return Ok(Term::err(tyr.clone()));
                        }
                        let np = sig.params.len();
                        let mut fields = Vec::new();
                        for (k, va) in vargs[np..].iter().enumerate() {
                            let ftys = sig.field_types_at(*ctor, args, &fields);
                            let f = self.value(ctx, va, &ftys[k])?;
                            fields.push(f);
                        }
                        Ok(Term::Ctor {
                            ind: ind.clone(),
                            ctor: *ctor,
                            params: args.clone(),
                            fields,
                        })
                    }
                    other => self.neutral(ctx, other).map(|(t, _)| t),
                }
            }
            unk if unk.as_unk_type().is_some() => {
                let l = unk.as_unk_type().unwrap();
                self.gunk_value(ctx, v, l)
            }
            _ => {
                // Neutral kernel type: the value can only be neutral.
                self.neutral(ctx, v).map(|(t, _)| t)
            }
        }
    }

    fn gunk_value(&self, ctx: &[Term], v: &StirTerm, l: Level) -> Result<Term, BackError> {
        let gname = ModelNames::gunk(l.0);
        let unk_ty = Term::unk_type(l);
        match v {
            StirTerm::Ctor { ind, ctor, args } if **ind == *gname => {
                if *ctor == U_UNK {
                    return Ok(Term::unk(unk_ty));
                }
                if *ctor == U_ERR {
                    return Ok(Term::err(unk_ty));
                }
                if *ctor == U_BOOL {
                    return Ok(Term::Tagged {
                        tag: TypeTag::Bool,
                        level: l,
                        body: self.value(ctx, &args[0], &Term::Bool)?.rc(),
                    });
                }
                if *ctor == U_FUN {
                    // The payload is a thunk; rebuild the argument-ignoring
                    // function.
                    let body = match &args[0] {
                        StirTerm::Lam(_, _, b) => {
                            let mut ctx2 = ctx.to_vec();
                            ctx2.push(Term::unk_type(l));
                            self.value(&ctx2, b, &unk_ty)?
                        }
                        other => return unrecognized(format!("UFun payload {other:?}")),
                    };
                    return Ok(Term::Tagged {
                        tag: TypeTag::Pi,
                        level: l,
                        body: Term::Lam(Name(None), unk_ty.clone().rc(), body.rc()).rc(),
                    });
                }
                if Some(*ctor) == self.gen.u_code_index(l.0) {
                    return Ok(Term::Tagged {
                        tag: TypeTag::Type,
                        level: l,
                        body: self.code(ctx, &args[0], l.0 - 1)?.rc(),
                    });
                }
                if *ctor == self.gen.u_eq_index(l.0) {
                    let germ = crate::germ::germ(self.env, &TypeTag::Eq, l).unwrap();
                    return Ok(Term::Tagged {
                        tag: TypeTag::Eq,
                        level: l,
                        body: self.value(ctx, &args[0], &germ)?.rc(),
                    });
                }
                // Per-inductive unknown constructors.
                for sig in &self.env.inductives {
                    if self.gen.uind_index(l.0, &sig.name) == Some(*ctor) {
                        let germ = crate::germ::germ(
                            self.env,
                            &TypeTag::Ind(sig.name.clone()),
                            l,
                        )
                        .unwrap();
                        return Ok(Term::Tagged {
                            tag: TypeTag::Ind(sig.name.clone()),
                            level: l,
                            body: self.value(ctx, &args[0], &germ)?.rc(),
                        });
                    }
                }
                unrecognized(format!("unknown GUnk constructor {ctor}"))
            }
            other => self.neutral(ctx, other).map(|(t, _)| t),
        }
    }

    /// Back-translate a code (a value of `Code l`) into a kernel type.
    pub fn code(&self, ctx: &[Term], v: &StirTerm, l: u32) -> Result<Term, BackError> {
        let cname = ModelNames::code(l);
        match v {
            StirTerm::Ctor { ind, ctor, args } if **ind == *cname => match *ctor {
                C_UNK => Ok(Term::unk_type(Level(l))),
                C_ERR => Ok(Term::err(Term::Type(Level(l)))),
                C_TYPE => Ok(Term::Type(Level(l - 1))),
                C_BOOL => Ok(Term::Bool),
                C_PI => {
                    let dom = self.code(ctx, &args[0], l)?;
                    match &args[1] {
                        StirTerm::Lam(n, _, body) => {
                            let mut ctx2 = ctx.to_vec();
                            ctx2.push(dom.clone());
                            let cod = self.code(&ctx2, body, l)?;
                            Ok(Term::Pi(n.clone(), dom.rc(), cod.rc()))
                        }
                        neutral => {
                            // (x : <c1>) -> <N> x
                            let mut ctx2 = ctx.to_vec();
                            ctx2.push(dom.clone());
                            let applied = StirTerm::app(
                                super::term::shift(neutral, 1),
                                StirTerm::Var(0),
                            );
                            let cod = self.code(&ctx2, &applied, l)?;
                            Ok(Term::Pi(Name(None), dom.rc(), cod.rc()))
                        }
                    }
                }
                C_EQ => {
                    let c = self.code(ctx, &args[0], l)?;
                    let x = self.value(ctx, &args[1], &c)?;
                    let y = self.value(ctx, &args[2], &c)?;
                    Ok(Term::Eq {
                        lhs: x.rc(),
                        ty: c.rc(),
                        rhs: y.rc(),
                    })
                }
                other => {
                    for sig in &self.env.inductives {
                        if self.gen.cind_index(l, &sig.name) == Some(other) {
                            let mut out = Vec::new();
                            for (k, a) in args.iter().enumerate() {
                                let ptys = sig.param_types_at(&out);
                                let p = self.value(ctx, a, &ptys[k])?;
                                out.push(p);
                            }
                            return Ok(Term::TyCon {
                                ind: sig.name.clone(),
                                args: out,
                            });
                        }
                    }
                    unrecognized(format!("unknown code constructor {other}"))
                }
            },
            other => self.neutral(ctx, other).map(|(t, _)| t),
        }
    }

    /// Recognize a stuck value: a variable, an application spine headed by a
    /// variable, or a stuck prelude-function application.
    fn neutral(&self, ctx: &[Term], v: &StirTerm) -> Result<(Term, Option<Term>), BackError> {
        let (head, args) = v.spine();
        match head {
            StirTerm::Var(i) => {
                let mut t = Term::Var(*i);
                let mut ty = if *i < ctx.len() {
                    Some(self.reduce(&crate::subst::shift(
                        &ctx[ctx.len() - 1 - i],
                        (*i + 1) as isize,
                    )))
                } else {
                    None
                };
                for a in args {
                    let (arg_t, next_ty) = match &ty {
                        Some(Term::Pi(_, dom, cod)) => {
                            let at = self.value(ctx, a, dom)?;
                            let nt = self.reduce(&crate::subst::subst0(cod, &at));
                            (at, Some(nt))
                        }
                        _ => {
                            let (nt, _) = self.neutral(ctx, a).or_else(|_| {
                                unrecognized("untyped neutral argument")
                            })?;
                            (nt, None)
                        }
                    };
                    t = Term::App(t.rc(), arg_t.rc());
                    ty = next_ty;
                }
                Ok((t, ty))
            }
            StirTerm::Const(name) => self.stuck_const(ctx, name, &args),
            other => unrecognized(format!("unrecognized value head {other:?}")),
        }
    }

    fn stuck_const(
        &self,
        ctx: &[Term],
        name: &str,
        args: &[&StirTerm],
    ) -> Result<(Term, Option<Term>), BackError> {
        // top / bot
        for l in 0..=self.gen.max_level {
            if name == ModelNames::top(l) && args.len() == 1 {
                let c = self.code(ctx, args[0], l)?;
                return Ok((Term::unk(c.clone()), Some(c)));
            }
            if name == ModelNames::bot(l) && args.len() == 1 {
                let c = self.code(ctx, args[0], l)?;
                return Ok((Term::err(c.clone()), Some(c)));
            }
            if name == ModelNames::cast(l) && args.len() == 3 {
                let c1 = self.code(ctx, args[0], l)?;
                let c2 = self.code(ctx, args[1], l)?;
                let x = self.value(ctx, args[2], &c1)?;
                return Ok((
                    Term::Cast {
                        src: c1.rc(),
                        dst: c2.clone().rc(),
                        body: x.rc(),
                    },
                    Some(c2),
                ));
            }
            if name == ModelNames::comp(l) && args.len() == 3 {
                let c = self.code(ctx, args[0], l)?;
                let x = self.value(ctx, args[1], &c)?;
                let y = self.value(ctx, args[2], &c)?;
                return Ok((
                    Term::Meet {
                        lhs: x.rc(),
                        rhs: y.rc(),
                        ty: c.clone().rc(),
                    },
                    Some(c),
                ));
            }
            if name == ModelNames::gif(l) && args.len() == 4 {
                let c = self.code(ctx, args[0], l)?;
                let s = self.value(ctx, args[1], &Term::Bool)?;
                let a = self.value(ctx, args[2], &c)?;
                let b = self.value(ctx, args[3], &c)?;
                return Ok((
                    Term::If {
                        ann: c.clone().rc(),
                        scrut: s.rc(),
                        then_br: a.rc(),
                        else_br: b.rc(),
                    },
                    Some(c),
                ));
            }
            if name == ModelNames::el(l) && args.len() == 1 {
                // A type in El form backs to its code's kernel type.
                let c = self.code(ctx, args[0], l)?;
                return Ok((c, Some(Term::Type(Level(l)))));
            }
            for l2 in 0..=self.gen.max_level {
                if name == ModelNames::gsubst(l, l2) && args.len() == 6 {
                    let c = self.code(ctx, args[0], l)?;
                    let motive_ty = Term::Pi(
                        Name(None),
                        c.clone().rc(),
                        Term::Type(Level(l2)).rc(),
                    );
                    let motive = self.value(ctx, args[1], &motive_ty)?;
                    let x = self.value(ctx, args[2], &c)?;
                    let y = self.value(ctx, args[3], &c)?;
                    let px_ty = self.reduce(&Term::App(
                        motive.clone().rc(),
                        x.clone().rc(),
                    ));
                    let px = self.value(ctx, args[4], &px_ty)?;
                    let eq_ty = Term::Eq {
                        lhs: x.clone().rc(),
                        ty: c.clone().rc(),
                        rhs: y.clone().rc(),
                    };
                    let e = self.value(ctx, args[5], &eq_ty)?;
                    let out_ty = self.reduce(&Term::App(motive.clone().rc(), y.clone().rc()));
                    return Ok((
                        Term::Subst {
                            ty: c.rc(),
                            motive: motive.rc(),
                            from: x.rc(),
                            to: y.rc(),
                            body: px.rc(),
                            eq: e.rc(),
                        },
                        Some(out_ty),
                    ));
                }
            }
        }
        // Inductive eliminators.
        for sig in &self.env.inductives {
            for l2 in 0..=self.gen.max_level {
                if name != ModelNames::grec(&sig.name, l2) {
                    continue;
                }
                let n_idx = sig.n_idx_params;
                let n_orig = sig.params.len() - n_idx;
                let nb = sig.ctors.len();
                let arity = n_orig + 1 + nb + n_idx + 1;
                if args.len() != arity {
                    return unrecognized("partially applied eliminator");
                }
                // Original parameters.
                let mut params: Vec<Term> = Vec::new();
                for (j, a) in args[..n_orig].iter().enumerate() {
                    let ptys = sig.param_types_at(&params);
                    params.push(self.value(ctx, a, &ptys[j])?);
                }
                // Index values.
                let mut full = params.clone();
                for (i, a) in args[n_orig + 1 + nb..n_orig + 1 + nb + n_idx]
                    .iter()
                    .enumerate()
                {
                    let ptys = sig.param_types_at(&full);
                    full.push(self.value(ctx, a, &ptys[n_orig + i])?);
                }
                let scrut_ty = Term::TyCon {
                    ind: sig.name.clone(),
                    args: full.clone(),
                };
                let scrut = self.value(ctx, args[arity - 1], &scrut_ty)?;
                // Motive: a lambda chain over idx + z whose body is a code.
                let motive = {
                    let mut cur = args[n_orig];
                    let mut ctx2 = ctx.to_vec();
                    for i in 0..n_idx {
                        match cur {
                            StirTerm::Lam(_, _, b) => {
                                let mut inst: Vec<Term> = params
                                    .iter()
                                    .map(|p| crate::subst::shift(p, i as isize))
                                    .collect();
                                for j in 0..i {
                                    inst.push(Term::Var(i - 1 - j));
                                }
                                let refs: Vec<&Term> = inst.iter().collect();
                                ctx2.push(subst_many(&sig.params[n_orig + i].1, &refs));
                                cur = b;
                            }
                            _ => return unrecognized("eliminator motive shape"),
                        }
                    }
                    match cur {
                        StirTerm::Lam(_, _, b) => {
                            let mut a2: Vec<Term> = params
                                .iter()
                                .map(|p| crate::subst::shift(p, n_idx as isize))
                                .collect();
                            for i in 0..n_idx {
                                a2.push(Term::Var(n_idx - 1 - i));
                            }
                            ctx2.push(Term::TyCon {
                                ind: sig.name.clone(),
                                args: a2,
                            });
                            self.code(&ctx2, b, l2)?
                        }
                        _ => return unrecognized("eliminator motive shape"),
                    }
                };
                // Branches: unwrap the lambda chains and reverse the
                // rewriting of recursive results.
                let mut branches = Vec::new();
                for (ci, cs) in sig.ctors.iter().enumerate() {
                    let nf = cs.fields.len();
                    let recs: Vec<usize> = (0..nf)
                        .filter(|f| {
                            sig.field_is_recursive(ci, *f)
                                && !matches!(cs.fields[*f].1, Term::Pi(..))
                        })
                        .collect();
                    let k = recs.len();
                    let mut cur = args[n_orig + 1 + ci];
                    let mut peeled = 0usize;
                    while peeled < n_idx + nf + k {
                        match cur {
                            StirTerm::Lam(_, _, b) => {
                                cur = b;
                                peeled += 1;
                            }
                            _ => return unrecognized("eliminator branch shape"),
                        }
                    }
                    // cur is the stir branch body in [idx, fields, recs]
                    // scope; map it back to the kernel [self, fields] scope.
                    let body = self.unrewrite_branch(
                        ctx, cur, &sig, ci, n_idx, nf, &recs, &full, &motive,
                    )?;
                    branches.push(crate::term::Branch {
                        n_fields: nf,
                        body: body.rc(),
                    });
                }
                return Ok((
                    Term::Ind {
                        ind: sig.name.clone(),
                        n_idx,
                        motive: motive.rc(),
                        scrut: scrut.rc(),
                        branches,
                    },
                    None,
                ));
            }
        }
        unrecognized(format!("stuck application of unknown definition {name}"))
    }

    /// Reverse the branch-body rewriting done by translation: model scope
    /// [idx.., fields.., recs..] back to kernel scope [self, fields..],
    /// turning recursive-result variables into self applications.
    #[allow(clippy::too_many_arguments)]
    fn unrewrite_branch(
        &self,
        ctx: &[Term],
        body: &StirTerm,
        sig: &crate::sig::InductiveSig,
        ci: usize,
        n_idx: usize,
        nf: usize,
        recs: &[usize],
        scrut_params: &[Term],
        motive: &Term,
    ) -> Result<Term, BackError> {
        let k = recs.len();
        let n_orig = sig.params.len() - n_idx;
        let cs = &sig.ctors[ci];
        let shift_by = (n_idx + nf + k) as isize;
        // Binder kernel types for the model scope.
        let mut ctx2 = ctx.to_vec();
        for i in 0..n_idx {
            let mut inst: Vec<Term> = scrut_params[..n_orig]
                .iter()
                .map(|p| crate::subst::shift(p, i as isize))
                .collect();
            for j in 0..i {
                inst.push(Term::Var(i - 1 - j));
            }
            let refs: Vec<&Term> = inst.iter().collect();
            ctx2.push(subst_many(&sig.params[n_orig + i].1, &refs));
        }
        for f in 0..nf {
            let mut inst: Vec<Term> = scrut_params
                .iter()
                .map(|p| crate::subst::shift(p, (n_idx + f) as isize))
                .collect();
            for j in 0..f {
                inst.push(Term::Var(f - 1 - j));
            }
            let refs: Vec<&Term> = inst.iter().collect();
            ctx2.push(subst_many(&cs.fields[f].1, &refs));
        }
        for _ in 0..k {
            ctx2.push(Term::Bool);
        }
        // The body's kernel type: the motive at the rebuilt constructor.
        let body_ty = {
            let motive_shifted = crate::subst::shift_above(motive, n_idx + 1, shift_by);
            let idx_vars: Vec<Term> = (0..n_idx)
                .map(|i| Term::Var(nf + k + (n_idx - 1 - i)))
                .collect();
            let ctor_val = Term::Ctor {
                ind: sig.name.clone(),
                ctor: ci,
                params: scrut_params
                    .iter()
                    .map(|p| crate::subst::shift(p, shift_by))
                    .collect(),
                fields: (0..nf).map(|f| Term::Var(k + (nf - 1 - f))).collect(),
            };
            let mut a: Vec<&Term> = idx_vars.iter().collect();
            a.push(&ctor_val);
            subst_many(&motive_shifted, &a)
        };
        let raw = self.value(&ctx2, body, &body_ty)?;
        // Self-application arguments for a recursive result: the declared
        // index expressions instantiated at the kernel branch scope.
        let q_for = |r_pos: usize, d: usize| -> Vec<Term> {
            let rf = recs[r_pos];
            let q_decl = match &cs.fields[rf].1 {
                Term::TyCon { args, .. } => args[n_orig..].to_vec(),
                _ => vec![],
            };
            q_decl
                .iter()
                .map(|q| {
                    // scope [params, fields[..rf]] -> kernel branch scope
                    // [outer, self, fields] (+ d inner binders).
                    let mut inst: Vec<Term> = scrut_params
                        .iter()
                        .map(|p| crate::subst::shift(p, (1 + nf) as isize))
                        .collect();
                    for fj in 0..rf {
                        inst.push(Term::Var(nf - 1 - fj));
                    }
                    let refs: Vec<&Term> = inst.iter().collect();
                    let base = subst_many(q, &refs);
                    crate::subst::shift(&base, d as isize)
                })
                .collect()
        };
        let remapped = remap_kernel(&raw, 0, &|d, free| {
            if free < k {
                let r_pos = k - 1 - free;
                let rf = recs[r_pos];
                let mut spine = Term::Var(d + nf);
                for q in q_for(r_pos, d) {
                    spine = Term::App(spine.rc(), q.rc());
                }
                Term::App(spine.rc(), Term::Var(d + (nf - 1 - rf)).rc())
            } else if free < k + nf {
                // field: model field f at k + (nf-1-f); kernel at nf-1-f
                Term::Var(d + (free - k))
            } else if free < k + nf + n_idx {
                Term::Var(d + free)
            } else {
                Term::Var(d + free - (n_idx + nf + k) + (nf + 1))
            }
        });
        Ok(remapped)
    }
}

fn remap_kernel(t: &Term, depth: usize, f: &dyn Fn(usize, usize) -> Term) -> Term {
    // Like subst::map_vars but with (depth, free-index) callback.
    crate::subst::replace_all_vars(t, depth, f)
}

/// Convenience wrapper for closed values.
pub fn back_translate(
    env: &Env,
    gen: &Gen,
    prelude: &Prelude,
    v: &StirTerm,
    ty: &Term,
) -> Result<Term, BackError> {
    Backer { env, gen, prelude }.value(&[], v, ty)
}

/// Back-translation plus kernel checking, used by norm-by-translation runs.
pub fn back_translate_checked(
    env: &Env,
    gen: &Gen,
    prelude: &Prelude,
    v: &StirTerm,
    ty: &Term,
) -> Result<Term, BackError> {
    let t = back_translate(env, gen, prelude, v, ty)?;
    crate::typing::cast_check(env, &Context::new(), &t, ty)
        .map_err(|e| BackError::Unrecognized(format!("back-translated term ill-typed: {e}")))?;
    Ok(t)
}
