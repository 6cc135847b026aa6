//! Translation of cast-calculus terms into the static target. Compositional
//! over the term structure; the saturated constructors of the target need
//! universe levels and evidence types, which are synthesized from the
//! ascriptions the cast calculus already carries.

use thiserror::Error;

use crate::context::Context;
use crate::normalize::{EvalMode, Machine, DEFAULT_CEILING};
use crate::sig::Env;
use crate::term::{Level, Name, Term};
use crate::typing::Checker;

use super::prelude::{Gen, ModelNames, C_BOOL, C_EQ, C_PI, C_TYPE};
use super::term::StirTerm;

#[derive(Debug, Error)]
pub enum TransError {
    #[error("translation does not support this term: {0}")]
    Unsupported(String),
}

pub struct TransCx<'e, 'g> {
    pub env: &'e Env,
    pub gen: &'g Gen<'e>,
    /// Kernel types of the enclosing binders (outermost first).
    pub ctx_types: Vec<Term>,
    /// Stir binder depth (kept equal to `ctx_types.len()` throughout; kernel
    /// variables map one-to-one onto stir variables).
    pub depth: usize,
}

impl<'e, 'g> TransCx<'e, 'g> {
    fn push(&self, ty: Term) -> TransCx<'e, 'g> {
        let mut c = TransCx {
            env: self.env,
            gen: self.gen,
            ctx_types: self.ctx_types.clone(),
            depth: self.depth + 1,
        };
        c.ctx_types.push(ty);
        c
    }

    fn kernel_ctx(&self) -> Context {
        let mut ctx = Context::new();
        for ty in &self.ctx_types {
            ctx.push(Name(None), ty.clone());
        }
        ctx
    }

    fn synth(&self, t: &Term) -> Result<Term, TransError> {
        Checker::new(self.env)
            .synth(&self.kernel_ctx(), t)
            .map_err(|e| TransError::Unsupported(format!("ill-typed term in translation: {e}")))
    }

    fn reduce(&self, t: &Term) -> Result<Term, TransError> {
        let mut m = Machine::new(self.env, EvalMode::Approximate, DEFAULT_CEILING);
        m.norm_full(t)
            .map_err(|e| TransError::Unsupported(e.to_string()))
    }

    /// The universe of a type term.
    fn level_of(&self, ty_of_t: &Term) -> Result<u32, TransError> {
        match self.reduce(ty_of_t)? {
            Term::Type(l) => Ok(l.0),
            other => Err(TransError::Unsupported(format!(
                "expected a universe, found {other:?}"
            ))),
        }
    }

    /// Level of the *type of* `t` (so `t` is a type at this level).
    fn type_level(&self, t: &Term) -> Result<u32, TransError> {
        let k = self.synth(t)?;
        self.level_of(&k)
    }
}

/// The stir classifier of a kernel binder type: `Code k` for universes,
/// `El l ⟦ty⟧` otherwise.
fn classifier_of(cx: &TransCx, ty: &Term) -> Result<StirTerm, TransError> {
    let n = cx.reduce(ty)?;
    if let Term::Type(k) = n {
        return Ok(StirTerm::IndType {
            ind: ModelNames::code(k.0).into(),
            args: vec![],
        });
    }
    let l = cx.type_level(ty)?;
    Ok(StirTerm::app(
        cc(ModelNames::el(l)),
        translate_at_level(cx, ty, l)?,
    ))
}

fn cname(l: u32, c: usize, args: Vec<StirTerm>) -> StirTerm {
    StirTerm::Ctor {
        ind: ModelNames::code(l).into(),
        ctor: c,
        args,
    }
}

fn cc(name: String) -> StirTerm {
    StirTerm::Const(name.into())
}

/// Translate a term, dispatching on whether it is a type former (giving a
/// code) or an ordinary term.
pub fn translate_in(cx: &TransCx, t: &Term) -> Result<StirTerm, TransError> {
    match t {
        // ---- type formers produce codes ----
        Term::Type(k) => Ok(cname(k.0 + 1, C_TYPE, vec![])),
        Term::Bool => Ok(cname(0, C_BOOL, vec![])),
        Term::Pi(n, dom, cod) => {
            let l = cx.type_level(t)?;
            let d = translate_at_level(cx, dom, l)?;
            let c2 = translate_at_level(&cx.push((**dom).clone()), cod, l)?;
            Ok(cname(
                l,
                C_PI,
                vec![d, StirTerm::Lam(n.clone(), None, c2.rc())],
            ))
        }
        Term::Eq { lhs, ty, rhs } => {
            let l = cx.type_level(t)?;
            let c = translate_at_level(cx, ty, l)?;
            let x = translate_in(cx, lhs)?;
            let y = translate_in(cx, rhs)?;
            Ok(cname(l, C_EQ, vec![c, x, y]))
        }
        Term::TyCon { ind, args } => {
            let sig = cx
                .env
                .lookup(ind)
                .ok_or_else(|| TransError::Unsupported(format!("unknown inductive {ind}")))?;
            let l = sig.level.0;
            let ci = cx
                .gen
                .cind_index(l, ind)
                .ok_or_else(|| TransError::Unsupported("missing code constructor".into()))?;
            let targs = args
                .iter()
                .map(|a| translate_in(cx, a))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(cname(l, ci, targs))
        }
        // ---- terms ----
        Term::Var(i) => Ok(StirTerm::Var(*i)),
        Term::True => Ok(StirTerm::Ctor {
            ind: ModelNames::gbool(0).into(),
            ctor: super::prelude::B_TRUE,
            args: vec![],
        }),
        Term::False => Ok(StirTerm::Ctor {
            ind: ModelNames::gbool(0).into(),
            ctor: super::prelude::B_FALSE,
            args: vec![],
        }),
        Term::Lam(n, ann, body) => {
            let b = translate_in(&cx.push((**ann).clone()), body)?;
            let a = classifier_of(cx, ann)?;
            Ok(StirTerm::Lam(n.clone(), Some(a.rc()), b.rc()))
        }
        Term::App(f, a) => Ok(StirTerm::app(
            translate_in(cx, f)?,
            translate_in(cx, a)?,
        )),
        Term::If {
            ann,
            scrut,
            then_br,
            else_br,
        } => {
            let l = cx.type_level(ann)?;
            Ok(StirTerm::apps(
                cc(ModelNames::gif(l)),
                [
                    translate_at_level(cx, ann, l)?,
                    translate_in(cx, scrut)?,
                    translate_in(cx, then_br)?,
                    translate_in(cx, else_br)?,
                ],
            ))
        }
        Term::Unk(ty) => {
            let l = cx.type_level(ty)?;
            Ok(StirTerm::app(
                cc(ModelNames::top(l)),
                translate_at_level(cx, ty, l)?,
            ))
        }
        Term::Err(ty) => {
            let l = cx.type_level(ty)?;
            Ok(StirTerm::app(
                cc(ModelNames::bot(l)),
                translate_at_level(cx, ty, l)?,
            ))
        }
        Term::Cast { src, dst, body } => {
            let l = cx.type_level(src)?;
            Ok(StirTerm::apps(
                cc(ModelNames::cast(l)),
                [
                    translate_at_level(cx, src, l)?,
                    translate_at_level(cx, dst, l)?,
                    translate_in(cx, body)?,
                ],
            ))
        }
        Term::Meet { lhs, rhs, ty } => {
            let l = cx.type_level(ty)?;
            Ok(StirTerm::apps(
                cc(ModelNames::comp(l)),
                [
                    translate_at_level(cx, ty, l)?,
                    translate_in(cx, lhs)?,
                    translate_in(cx, rhs)?,
                ],
            ))
        }
        Term::Tagged { tag, level, body } => {
            let l = level.0;
            let g = |ix: usize, payload: StirTerm| StirTerm::Ctor {
                ind: ModelNames::gunk(l).into(),
                ctor: ix,
                args: vec![payload],
            };
            match tag {
                crate::term::TypeTag::Bool => {
                    Ok(g(super::prelude::U_BOOL, translate_in(cx, body)?))
                }
                crate::term::TypeTag::Type => {
                    let ix = cx.gen.u_code_index(l).ok_or_else(|| {
                        TransError::Unsupported("Type tag at level 0".into())
                    })?;
                    Ok(g(ix, translate_in(cx, body)?))
                }
                crate::term::TypeTag::Eq => {
                    Ok(g(cx.gen.u_eq_index(l), translate_in(cx, body)?))
                }
                crate::term::TypeTag::Ind(name) => {
                    let ix = cx.gen.uind_index(l, name).ok_or_else(|| {
                        TransError::Unsupported("missing unknown constructor".into())
                    })?;
                    Ok(g(ix, translate_in(cx, body)?))
                }
                crate::term::TypeTag::Pi => {
                    // The payload ignores its argument; store a thunk.
                    match &**body {
                        Term::Lam(_, ann, inner) => {
                            let b = translate_in(&cx.push((**ann).clone()), inner)?;
                            // The binder is unused; retarget it to the unit
                            // argument by leaving indices unchanged (the
                            // variable 0 does not occur).
                            Ok(g(
                                super::prelude::U_FUN,
                                StirTerm::Lam(Name::named("u"), None, b.rc()),
                            ))
                        }
                        _ => Err(TransError::Unsupported(
                            "Pi-tagged payload must be a function".into(),
                        )),
                    }
                }
            }
        }
        Term::Refl { ev, lhs, rhs } => {
            let ty = cx.synth(ev)?;
            let l = cx.type_level(&ty)?;
            let c = translate_at_level(cx, &ty, l)?;
            Ok(StirTerm::Ctor {
                ind: ModelNames::geq(l).into(),
                ctor: 0,
                args: vec![
                    c,
                    translate_in(cx, lhs)?,
                    translate_in(cx, rhs)?,
                    translate_in(cx, ev)?,
                ],
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
            let l = cx.type_level(ty)?;
            // The motive's codomain universe.
            let mty = cx.synth(motive)?;
            let l2 = match cx.reduce(&mty)? {
                Term::Pi(_, _, cod) => match &*cod {
                    Term::Type(k) => k.0,
                    other => {
                        return Err(TransError::Unsupported(format!(
                            "subst motive codomain: {other:?}"
                        )))
                    }
                },
                other => {
                    return Err(TransError::Unsupported(format!(
                        "subst motive: {other:?}"
                    )))
                }
            };
            let p = translate_motive(cx, motive, ty, l2)?;
            Ok(StirTerm::apps(
                cc(ModelNames::gsubst(l, l2)),
                [
                    translate_at_level(cx, ty, l)?,
                    p,
                    translate_in(cx, from)?,
                    translate_in(cx, to)?,
                    translate_in(cx, body)?,
                    translate_in(cx, eq)?,
                ],
            ))
        }
        Term::Ctor {
            ind,
            ctor,
            params,
            fields,
        } => {
            let mut args = Vec::with_capacity(params.len() + fields.len());
            for a in params.iter().chain(fields.iter()) {
                args.push(translate_in(cx, a)?);
            }
            Ok(StirTerm::Ctor {
                ind: ModelNames::gind(ind).into(),
                ctor: *ctor,
                args,
            })
        }
        Term::Ind {
            ind,
            n_idx,
            motive,
            scrut,
            branches,
        } => {
            let sig = cx
                .env
                .lookup(ind)
                .ok_or_else(|| TransError::Unsupported(format!("unknown inductive {ind}")))?
                .clone();
            let n_orig = sig.params.len() - sig.n_idx_params;
            // Scrutinee's parameters from its type.
            let sty = cx.synth(scrut)?;
            let args = match cx.reduce(&sty)? {
                Term::TyCon { args, .. } => args,
                other => {
                    return Err(TransError::Unsupported(format!(
                        "ind scrutinee type: {other:?}"
                    )))
                }
            };
            // Motive level.
            let l2 = {
                // Under idx + z binders, the motive is a type.
                let mut ctx2 = cx.kernel_ctx();
                for i in 0..*n_idx {
                    let (_, pty) = &sig.params[n_orig + i];
                    let mut inst: Vec<Term> = args[..n_orig]
                        .iter()
                        .map(|p| crate::subst::shift(p, i as isize))
                        .collect();
                    for j in 0..i {
                        inst.push(Term::Var(i - 1 - j));
                    }
                    let refs: Vec<&Term> = inst.iter().collect();
                    ctx2.push(Name(None), crate::subst::subst_many(pty, &refs));
                }
                let scrut_ty = {
                    let mut a: Vec<Term> = args[..n_orig]
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
                ctx2.push(Name(None), scrut_ty);
                let k = Checker::new(cx.env)
                    .synth(&ctx2, motive)
                    .map_err(|e| TransError::Unsupported(e.to_string()))?;
                let mut mm = Machine::new(cx.env, EvalMode::Approximate, DEFAULT_CEILING);
                match mm
                    .norm_full(&k)
                    .map_err(|e| TransError::Unsupported(e.to_string()))?
                {
                    Term::Type(l) => l.0,
                    other => {
                        return Err(TransError::Unsupported(format!(
                            "ind motive universe: {other:?}"
                        )))
                    }
                }
            };
            // Translate the motive under its binders.
            let motive_stir = {
                let mut inner_cx = cx.clone_cx();
                for i in 0..*n_idx {
                    let (_, pty) = &sig.params[n_orig + i];
                    let mut inst: Vec<Term> = args[..n_orig]
                        .iter()
                        .map(|p| crate::subst::shift(p, i as isize))
                        .collect();
                    for j in 0..i {
                        inst.push(Term::Var(i - 1 - j));
                    }
                    let refs: Vec<&Term> = inst.iter().collect();
                    inner_cx = inner_cx.push(crate::subst::subst_many(pty, &refs));
                }
                let scrut_ty = {
                    let mut a: Vec<Term> = args[..n_orig]
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
                inner_cx = inner_cx.push(scrut_ty);
                let mut body = translate_at_level(&inner_cx, motive, l2)?;
                for _ in 0..*n_idx + 1 {
                    body = StirTerm::Lam(Name(None), None, body.rc());
                }
                body
            };
            // Branches: rewrite self-application spines into recursive
            // results, then wrap idx/field/rec binders.
            let mut branch_terms = Vec::with_capacity(branches.len());
            for (ci, b) in branches.iter().enumerate() {
                branch_terms.push(translate_branch(
                    cx, &sig, &args, ci, b, *n_idx, n_orig,
                )?);
            }
            // Assemble: rec orig.. P b.. idx.. scrut
            let mut call = cc(ModelNames::grec(ind, l2));
            for pth in &args[..n_orig] {
                call = StirTerm::app(call, translate_in(cx, pth)?);
            }
            call = StirTerm::app(call, motive_stir);
            for bt in branch_terms {
                call = StirTerm::app(call, bt);
            }
            for ia in &args[n_orig..] {
                call = StirTerm::app(call, translate_in(cx, ia)?);
            }
            Ok(StirTerm::app(call, translate_in(cx, scrut)?))
        }
    }
}

impl<'e, 'g> TransCx<'e, 'g> {
    fn clone_cx(&self) -> TransCx<'e, 'g> {
        TransCx {
            env: self.env,
            gen: self.gen,
            ctx_types: self.ctx_types.clone(),
            depth: self.depth,
        }
    }
}

/// Translate a type at a specific code level, rejecting cross-level gaps the
/// monomorphized model cannot represent.
pub fn translate_at_level(cx: &TransCx, t: &Term, l: u32) -> Result<StirTerm, TransError> {
    match t {
        Term::Type(k) => {
            if k.0 + 1 == l {
                Ok(cname(l, C_TYPE, vec![]))
            } else {
                Err(TransError::Unsupported(format!(
                    "Type{} as a code at level {l}",
                    k.0
                )))
            }
        }
        Term::Bool => Ok(cname(l, C_BOOL, vec![])),
        Term::Pi(n, dom, cod) => {
            let d = translate_at_level(cx, dom, l)?;
            let c2 = translate_at_level(&cx.push((**dom).clone()), cod, l)?;
            Ok(cname(l, C_PI, vec![d, StirTerm::Lam(n.clone(), None, c2.rc())]))
        }
        Term::Eq { lhs, ty, rhs } => {
            let c = translate_at_level(cx, ty, l)?;
            Ok(cname(
                l,
                C_EQ,
                vec![c, translate_in(cx, lhs)?, translate_in(cx, rhs)?],
            ))
        }
        Term::Unk(inner) => match &**inner {
            Term::Type(k) if k.0 == l => Ok(cname(l, super::prelude::C_UNK, vec![])),
            _ => Err(TransError::Unsupported(
                "unknown type at a non-universe annotation".into(),
            )),
        },
        Term::Err(inner) => match &**inner {
            Term::Type(k) if k.0 == l => Ok(cname(l, super::prelude::C_ERR, vec![])),
            _ => Err(TransError::Unsupported("err at non-universe".into())),
        },
        Term::TyCon { .. } => translate_in(cx, t),
        // Neutral or computed types translate as terms (they evaluate to
        // codes).
        other => translate_in(cx, other),
    }
}

fn translate_motive(
    cx: &TransCx,
    motive: &Term,
    subject_ty: &Term,
    l2: u32,
) -> Result<StirTerm, TransError> {
    match motive {
        Term::Lam(n, _, body) => {
            let b = translate_at_level(&cx.push(subject_ty.clone()), body, l2)?;
            Ok(StirTerm::Lam(n.clone(), None, b.rc()))
        }
        other => translate_in(cx, other),
    }
}

/// Translate one `ind` branch into the model's branch function
/// `\ idx.. fields.. recs.. -> body'`, rewriting uses of the self-reference
/// applied to recursive fields into the recursive-result binders.
fn translate_branch(
    cx: &TransCx,
    sig: &crate::sig::InductiveSig,
    scrut_args: &[Term],
    ci: usize,
    branch: &crate::term::Branch,
    n_idx: usize,
    n_orig: usize,
) -> Result<StirTerm, TransError> {
    let cs = &sig.ctors[ci];
    let nf = cs.fields.len();
    let rec_fields: Vec<usize> = (0..nf)
        .filter(|f| sig.field_is_recursive(ci, *f) && !matches!(cs.fields[*f].1, Term::Pi(..)))
        .collect();
    let k = rec_fields.len();
    // Kernel branch scope: [outer.., self, f0..f(nf-1)] (fields innermost).
    // Model branch scope:  [outer.., i0..i(n_idx-1), f0.., r0..r(k-1)].
    // Rewrite: Var(field f) -> Var(k + nf-1-f); self spines -> rec results;
    // outer Var(v) (v > nf) -> Var(v - (nf+1) + (n_idx+nf+k)).
    let rewritten = rewrite_branch_body(
        &branch.body,
        0,
        nf,
        n_idx,
        k,
        &rec_fields,
    )?;
    // Build the kernel context for translating the rewritten body: outer
    // ctx + idx types + field types + rec-result types (approximate kernel
    // types for the rec binders; they are only needed for level synthesis,
    // which never inspects them through variables).
    let mut inner = cx.clone_cx();
    for i in 0..n_idx {
        let (_, pty) = &sig.params[n_orig + i];
        let mut inst: Vec<Term> = scrut_args[..n_orig]
            .iter()
            .map(|p| crate::subst::shift(p, i as isize))
            .collect();
        for j in 0..i {
            inst.push(Term::Var(i - 1 - j));
        }
        let refs: Vec<&Term> = inst.iter().collect();
        inner = inner.push(crate::subst::subst_many(pty, &refs));
    }
    for f in 0..nf {
        let mut inst: Vec<Term> = scrut_args
            .iter()
            .map(|p| crate::subst::shift(p, (n_idx + f) as isize))
            .collect();
        for j in 0..f {
            inst.push(Term::Var(f - 1 - j));
        }
        let refs: Vec<&Term> = inst.iter().collect();
        inner = inner.push(crate::subst::subst_many(&cs.fields[f].1, &refs));
    }
    for _r in 0..k {
        // Recursive results: their kernel type is the motive at the field;
        // a placeholder is fine for translation purposes.
        inner = inner.push(Term::Bool);
    }
    let body = translate_in(&inner, &rewritten)?;
    let mut out = body;
    for _ in 0..(n_idx + nf + k) {
        out = StirTerm::Lam(Name(None), None, out.rc());
    }
    Ok(out)
}

/// Rewrite a kernel branch body from [self, fields..] scope into
/// [idx.., fields.., recs..] scope. Self-application spines
/// `self idx.. f` become the rec-result variable for `f`.
fn rewrite_branch_body(
    t: &Term,
    depth: usize,
    nf: usize,
    n_idx: usize,
    k: usize,
    rec_fields: &[usize],
) -> Result<Term, TransError> {
    rewrite_branch_body_inner(t, depth, nf, n_idx, k, rec_fields)
}

/// Structural map that recurses through subterms, re-running the spine
/// recognition inside.
fn map_branch(
    t: &Term,
    depth: usize,
    fvar: &mut dyn FnMut(usize, usize) -> Result<Term, TransError>,
    nf: usize,
    n_idx: usize,
    k: usize,
    rec_fields: &[usize],
) -> Result<Term, TransError> {
    use crate::term::Branch;
    let rec = |x: &Term, d: usize| rewrite_branch_body_inner(x, d, nf, n_idx, k, rec_fields);
    Ok(match t {
        Term::Var(i) => fvar(depth, *i)?,
        Term::Type(_) | Term::Bool | Term::True | Term::False => t.clone(),
        Term::Pi(n, a, b) => Term::Pi(n.clone(), rec(a, depth)?.rc(), rec(b, depth + 1)?.rc()),
        Term::Lam(n, a, b) => Term::Lam(n.clone(), rec(a, depth)?.rc(), rec(b, depth + 1)?.rc()),
        Term::App(a, b) => Term::App(rec(a, depth)?.rc(), rec(b, depth)?.rc()),
        Term::If {
            ann,
            scrut,
            then_br,
            else_br,
        } => Term::If {
            ann: rec(ann, depth)?.rc(),
            scrut: rec(scrut, depth)?.rc(),
            then_br: rec(then_br, depth)?.rc(),
            else_br: rec(else_br, depth)?.rc(),
        },
        Term::Unk(a) => Term::Unk(rec(a, depth)?.rc()),
        Term::Err(a) => Term::Err(rec(a, depth)?.rc()),
        Term::Cast { src, dst, body } => Term::Cast {
            src: rec(src, depth)?.rc(),
            dst: rec(dst, depth)?.rc(),
            body: rec(body, depth)?.rc(),
        },
        Term::Tagged { tag, level, body } => Term::Tagged {
            tag: tag.clone(),
            level: *level,
            body: rec(body, depth)?.rc(),
        },
        Term::Eq { lhs, ty, rhs } => Term::Eq {
            lhs: rec(lhs, depth)?.rc(),
            ty: rec(ty, depth)?.rc(),
            rhs: rec(rhs, depth)?.rc(),
        },
        Term::Refl { ev, lhs, rhs } => Term::Refl {
            ev: rec(ev, depth)?.rc(),
            lhs: rec(lhs, depth)?.rc(),
            rhs: rec(rhs, depth)?.rc(),
        },
        Term::Subst {
            ty,
            motive,
            from,
            to,
            body,
            eq,
        } => Term::Subst {
            ty: rec(ty, depth)?.rc(),
            motive: rec(motive, depth)?.rc(),
            from: rec(from, depth)?.rc(),
            to: rec(to, depth)?.rc(),
            body: rec(body, depth)?.rc(),
            eq: rec(eq, depth)?.rc(),
        },
        Term::Meet { lhs, rhs, ty } => Term::Meet {
            lhs: rec(lhs, depth)?.rc(),
            rhs: rec(rhs, depth)?.rc(),
            ty: rec(ty, depth)?.rc(),
        },
        Term::TyCon { ind, args } => Term::TyCon {
            ind: ind.clone(),
            args: args
                .iter()
                .map(|a| rec(a, depth))
                .collect::<Result<_, _>>()?,
        },
        Term::Ctor {
            ind,
            ctor,
            params,
            fields,
        } => Term::Ctor {
            ind: ind.clone(),
            ctor: *ctor,
            params: params
                .iter()
                .map(|a| rec(a, depth))
                .collect::<Result<_, _>>()?,
            fields: fields
                .iter()
                .map(|a| rec(a, depth))
                .collect::<Result<_, _>>()?,
        },
        Term::Ind {
            ind,
            n_idx: ni,
            motive,
            scrut,
            branches,
        } => Term::Ind {
            ind: ind.clone(),
            n_idx: *ni,
            motive: rec(motive, depth + ni + 1)?.rc(),
            scrut: rec(scrut, depth)?.rc(),
            branches: branches
                .iter()
                .map(|b| {
                    Ok(Branch {
                        n_fields: b.n_fields,
                        body: rec(&b.body, depth + 1 + b.n_fields)?.rc(),
                    })
                })
                .collect::<Result<Vec<_>, TransError>>()?,
        },
    })
}

fn rewrite_branch_body_inner(
    t: &Term,
    depth: usize,
    nf: usize,
    n_idx: usize,
    k: usize,
    rec_fields: &[usize],
) -> Result<Term, TransError> {
    // Same as rewrite_branch_body but reusable at any depth.
    let mut spine: Vec<&Term> = Vec::new();
    let mut head = t;
    while let Term::App(f, a) = head {
        spine.push(a);
        head = f;
    }
    spine.reverse();
    if let Term::Var(i) = head {
        if *i >= depth && i - depth == nf {
            if spine.len() < n_idx + 1 {
                return Err(TransError::Unsupported(
                    "self-reference applied to too few arguments".into(),
                ));
            }
            let field_arg = spine[n_idx];
            let field = match field_arg {
                Term::Var(v) if *v >= depth && v - depth < nf => nf - 1 - (v - depth),
                _ => {
                    return Err(TransError::Unsupported(
                        "self-reference must consume a recursive field".into(),
                    ))
                }
            };
            let r_pos = rec_fields
                .iter()
                .position(|f| *f == field)
                .ok_or_else(|| {
                    TransError::Unsupported("self applied to a non-recursive field".into())
                })?;
            let mut out = Term::Var(depth + (k - 1 - r_pos));
            for extra in &spine[n_idx + 1..] {
                let e = rewrite_branch_body_inner(extra, depth, nf, n_idx, k, rec_fields)?;
                out = Term::App(out.rc(), e.rc());
            }
            return Ok(out);
        }
    }
    map_branch(
        t,
        depth,
        &mut |d, i| {
            if i < d {
                Ok(Term::Var(i))
            } else {
                let free = i - d;
                if free < nf {
                    Ok(Term::Var(d + k + free))
                } else if free == nf {
                    Err(TransError::Unsupported(
                        "bare self-reference in a branch".into(),
                    ))
                } else {
                    Ok(Term::Var(d + free - (nf + 1) + (n_idx + nf + k)))
                }
            }
        },
        nf,
        n_idx,
        k,
        rec_fields,
    )
}

/// Whole-term translation with an empty context.
pub fn translate(env: &Env, gen: &Gen, t: &Term) -> Result<StirTerm, TransError> {
    let cx = TransCx {
        env,
        gen,
        ctx_types: vec![],
        depth: 0,
    };
    translate_in(&cx, t)
}

/// Maximum universe level appearing anywhere in a term (used to size the
/// generated prelude).
pub fn max_level_of(t: &Term) -> u32 {
    let mut max = 0;
    fn walk(t: &Term, max: &mut u32) {
        if let Term::Type(Level(l)) = t {
            *max = (*max).max(*l);
        }
        if let Term::Tagged { level, .. } = t {
            *max = (*max).max(level.0);
        }
        crate::elaborate::for_each_child(t, 0, &mut |c, _| walk(c, max));
    }
    walk(t, &mut max);
    max
}

