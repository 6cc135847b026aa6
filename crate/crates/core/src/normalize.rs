//! Dynamic semantics: single-step reduction, approximate normalization (the
//! terminating evaluator used by type checking), the exact run-time variant,
//! and type-directed eta-expansion.
//!
//! Dynamic failures are terms (`err_T`), never Rust errors. The only error
//! this module reports is an exhausted step budget: in approximate mode that
//! signals a soundness bug, in exact mode it is an ordinary out-of-fuel
//! outcome.

use std::rc::Rc;

use thiserror::Error;

use crate::context::Context;
use crate::germ::{germ, germ_no_pi};
use crate::relations::consistent;
use crate::sig::Env;
use crate::subst::{shift, shift_above, subst0, subst_many};
use crate::term::{Branch, Name, Term, TypeTag, tag_of, type_tag_of};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Approximate,
    Exact,
}

/// Result of a single reduction step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Next {
        term: Term,
        rule: &'static str,
        /// Child-index path from the root to the redex.
        path: Vec<usize>,
    },
    NormalForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub rule: &'static str,
    pub path: Vec<usize>,
    pub snippet: String,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("step budget exceeded after {steps} steps (ceiling {ceiling}): this is a bug in approximate mode")]
    BudgetExceeded {
        steps: usize,
        ceiling: usize,
        trace: Vec<TraceEntry>,
    },
}

#[derive(Debug)]
pub enum ExactOutcome {
    Finished {
        value: Term,
        steps: usize,
    },
    OutOfFuel {
        steps: usize,
        trace: Vec<TraceEntry>,
    },
}

pub const DEFAULT_CEILING: usize = 2_000_000;
pub const DEFAULT_FUEL: usize = 1_000_000;

pub struct Machine<'e> {
    pub env: &'e Env,
    pub mode: EvalMode,
    pub ceiling: usize,
    pub steps: usize,
    pub trace: Option<Vec<TraceEntry>>,
    path: Vec<usize>,
    /// Subterms already known to be in normal form, keyed by pointer
    /// identity. Values keep the keys alive so addresses are never reused.
    normal_memo: std::collections::HashMap<*const Term, Rc<Term>>,
}

impl<'e> Machine<'e> {
    pub fn new(env: &'e Env, mode: EvalMode, ceiling: usize) -> Machine<'e> {
        Machine {
            env,
            mode,
            ceiling,
            steps: 0,
            trace: None,
            path: Vec::new(),
            normal_memo: std::collections::HashMap::new(),
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Vec<TraceEntry> {
        self.trace.take().unwrap_or_default()
    }

    fn tick(&mut self, rule: &'static str, redex: &Term) -> Result<(), EngineError> {
        self.steps += 1;
        if let Some(tr) = &mut self.trace {
            tr.push(TraceEntry {
                rule,
                path: self.path.clone(),
                snippet: crate::pretty::snippet(redex, 80),
            });
        }
        if self.steps > self.ceiling {
            Err(EngineError::BudgetExceeded {
                steps: self.steps,
                ceiling: self.ceiling,
                trace: self.trace.clone().unwrap_or_default(),
            })
        } else {
            Ok(())
        }
    }

    /// Evidence self-consistency, deciding the J / J-err dispatch: reduce the
    /// evidence (no eta) and compare the value with itself.
    fn self_consistent(&mut self, t: &Term) -> Result<bool, EngineError> {
        let v = self.norm_full(t)?;
        Ok(consistent(self.env, &v, &v))
    }

    /// The reduction rule applicable at the root of `t`, if any.
    pub fn top_rule(&mut self, t: &Term) -> Result<Option<(Term, &'static str)>, EngineError> {
        Ok(match t {
            Term::App(f, a) => match &**f {
                Term::Lam(_, _, body) => Some((subst0(body, a), "β")),
                Term::Unk(ty) => match &**ty {
                    Term::Pi(_, _, cod) => Some((Term::Unk(subst0(cod, a).rc()), "β?")),
                    _ => None,
                },
                Term::Err(ty) => match &**ty {
                    Term::Pi(_, _, cod) => Some((Term::Err(subst0(cod, a).rc()), "β℧")),
                    _ => None,
                },
                _ => None,
            },
            Term::If {
                ann,
                scrut,
                then_br,
                else_br,
            } => match &**scrut {
                Term::True => Some(((**then_br).clone(), "IfTrue")),
                Term::False => Some(((**else_br).clone(), "IfFalse")),
                Term::Unk(_) => Some((Term::Unk(ann.clone()), "If?")),
                Term::Err(_) => Some((Term::Err(ann.clone()), "If℧")),
                _ => None,
            },
            Term::Cast { src, dst, body } => self.cast_rule(src, dst, body)?,
            Term::Subst {
                ty,
                motive,
                from,
                to,
                body,
                eq,
            } => match &**eq {
                Term::Refl { ev, .. } => {
                    if self.self_consistent(ev)? {
                        let inner = Term::Cast {
                            src: Term::App(motive.clone(), from.clone()).rc(),
                            dst: Term::App(motive.clone(), ev.clone()).rc(),
                            body: body.clone(),
                        };
                        Some((
                            Term::Cast {
                                src: Term::App(motive.clone(), ev.clone()).rc(),
                                dst: Term::App(motive.clone(), to.clone()).rc(),
                                body: inner.rc(),
                            },
                            "J",
                        ))
                    } else {
                        Some((Term::Err(Term::App(motive.clone(), to.clone()).rc()), "J℧"))
                    }
                }
                Term::Unk(_) => {
                    let mid = Term::Meet {
                        lhs: from.clone(),
                        rhs: to.clone(),
                        ty: ty.clone(),
                    };
                    let inner = Term::Cast {
                        src: Term::App(motive.clone(), from.clone()).rc(),
                        dst: Term::App(motive.clone(), mid.clone().rc()).rc(),
                        body: body.clone(),
                    };
                    Some((
                        Term::Cast {
                            src: Term::App(motive.clone(), mid.rc()).rc(),
                            dst: Term::App(motive.clone(), to.clone()).rc(),
                            body: inner.rc(),
                        },
                        "J?",
                    ))
                }
                Term::Err(_) => Some((Term::Err(Term::App(motive.clone(), to.clone()).rc()), "J℧")),
                _ => None,
            },
            Term::Meet { lhs, rhs, ty } => self.meet_rule(lhs, rhs, ty)?,
            Term::Ind {
                ind,
                n_idx,
                motive,
                scrut,
                branches,
            } => self.ind_rule(ind, *n_idx, motive, scrut, branches)?,
            _ => None,
        })
    }

    fn cast_rule(
        &mut self,
        src: &Rc<Term>,
        dst: &Rc<Term>,
        body: &Rc<Term>,
    ) -> Result<Option<(Term, &'static str)>, EngineError> {
        // Error propagation comes first, mirroring the model's clause order.
        if src.is_err() {
            return Ok(Some((Term::Err(dst.clone()), "From℧")));
        }
        if dst.is_err() {
            return Ok(Some((Term::Err(dst.clone()), "To℧")));
        }
        if body.is_err() {
            return Ok(Some((Term::Err(dst.clone()), "Cast℧")));
        }
        if let (Some(l1), Some(l2)) = (src.as_unk_type(), dst.as_unk_type()) {
            if l1 == l2 {
                return Ok(Some(((**body).clone(), "UnkUnk")));
            }
            return Ok(None);
        }
        if let (Some(t1), Some(t2)) = (tag_of(src), tag_of(dst)) {
            if t1 != t2 {
                return Ok(Some((Term::Err(dst.clone()), "tag℧")));
            }
        }
        // Casting into the unknown type.
        if let Some(l) = dst.as_unk_type() {
            if let Some(tt) = type_head(src) {
                if tt == TypeTag::Pi && self.mode == EvalMode::Approximate {
                    // Approximate a function by its image on `?`.
                    if let Term::Pi(_, dom, cod) = &**src {
                        let unk_dom = Term::Unk(dom.clone());
                        let approx_ret = subst0(cod, &unk_dom);
                        let inner = Term::Cast {
                            src: approx_ret.rc(),
                            dst: Term::unk_type(l).rc(),
                            body: Term::App(body.clone(), unk_dom.rc()).rc(),
                        };
                        let lam = Term::Lam(
                            Name(None),
                            Term::unk_type(l).rc(),
                            shift(&inner, 1).rc(),
                        );
                        return Ok(Some((
                            Term::Tagged {
                                tag: TypeTag::Pi,
                                level: l,
                                body: lam.rc(),
                            },
                            "?Π",
                        )));
                    }
                }
                let g = if self.mode == EvalMode::Exact {
                    germ(self.env, &tt, l)
                } else {
                    germ_no_pi(self.env, &tt, l)
                };
                if let Some(g) = g {
                    return Ok(Some((
                        Term::Tagged {
                            tag: tt,
                            level: l,
                            body: Term::Cast {
                                src: src.clone(),
                                dst: g.rc(),
                                body: body.clone(),
                            }
                            .rc(),
                        },
                        "To?",
                    )));
                }
                return Ok(None);
            }
            return Ok(None);
        }
        // Casting out of the unknown type.
        if let Some(l) = src.as_unk_type() {
            match &**body {
                Term::Tagged { tag, body: payload, .. } => {
                    if let Some(dt) = type_head(dst) {
                        if *tag == dt {
                            if let Some(g) = germ(self.env, tag, l) {
                                return Ok(Some((
                                    Term::Cast {
                                        src: g.rc(),
                                        dst: dst.clone(),
                                        body: payload.clone(),
                                    },
                                    "From?",
                                )));
                            }
                            return Ok(None);
                        }
                        return Ok(Some((Term::Err(dst.clone()), "?℧")));
                    }
                    return Ok(None);
                }
                // The unknown value at the unknown type casts to the unknown
                // value at the target.
                Term::Unk(_) => {
                    if type_head(dst).is_some() {
                        return Ok(Some((Term::Unk(dst.clone()), "From?")));
                    }
                    return Ok(None);
                }
                _ => return Ok(None),
            }
        }
        match (&**src, &**dst) {
            (Term::Pi(_, d1, c1), Term::Pi(n2, d2, c2)) => {
                // <(x:T1')->T2' <= (y:T1)->T2> t
                //   ~> \(x:T1'). <T2' <= [<T1 <= T1'>x / y]T2> (t (<T1 <= T1'>x))
                let argcast = Term::Cast {
                    src: shift(d2, 1).rc(),
                    dst: shift(d1, 1).rc(),
                    body: Term::Var(0).rc(),
                };
                let ret_src = subst0(c1, &argcast);
                let app = Term::App(shift(body, 1).rc(), argcast.rc());
                let result = Term::Lam(
                    n2.clone(),
                    d2.clone(),
                    Term::Cast {
                        src: ret_src.rc(),
                        dst: c2.clone(),
                        body: app.rc(),
                    }
                    .rc(),
                );
                Ok(Some((result, "ΠΠ")))
            }
            (
                Term::Eq {
                    lhs: a1,
                    ty: t1,
                    rhs: b1,
                },
                Term::Eq {
                    lhs: a2,
                    ty: t2,
                    rhs: b2,
                },
            ) => {
                let compose = |ev: Term| -> Term {
                    let cast_ev = Term::Cast {
                        src: t1.clone(),
                        dst: t2.clone(),
                        body: ev.rc(),
                    };
                    Term::Meet {
                        lhs: a2.clone(),
                        rhs: Term::Meet {
                            lhs: b2.clone(),
                            rhs: cast_ev.rc(),
                            ty: t2.clone(),
                        }
                        .rc(),
                        ty: t2.clone(),
                    }
                };
                match &**body {
                    Term::Refl { ev, .. } => Ok(Some((
                        Term::Refl {
                            ev: compose((**ev).clone()).rc(),
                            lhs: a2.clone(),
                            rhs: b2.clone(),
                        },
                        "Eq",
                    ))),
                    // `?` at an equality type behaves as refl with meet
                    // evidence; fuse the eta-expansion into the cast.
                    Term::Unk(_) => {
                        let ev = Term::Meet {
                            lhs: a1.clone(),
                            rhs: b1.clone(),
                            ty: t1.clone(),
                        };
                        Ok(Some((
                            Term::Refl {
                                ev: compose(ev).rc(),
                                lhs: a2.clone(),
                                rhs: b2.clone(),
                            },
                            "Eq",
                        )))
                    }
                    _ => Ok(None),
                }
            }
            (Term::Bool, Term::Bool) => match &**body {
                Term::True | Term::False | Term::Unk(_) => Ok(Some(((**body).clone(), "𝔹𝔹"))),
                _ => Ok(None),
            },
            (Term::Type(l1), Term::Type(l2)) if l1 == l2 => {
                if type_tag_of(body) == Some(TypeTag::Type) || body.is_unk() {
                    Ok(Some(((**body).clone(), "Type")))
                } else {
                    Ok(None)
                }
            }
            (
                Term::TyCon { ind: i1, args: a1 },
                Term::TyCon { ind: i2, args: a2 },
            ) if i1 == i2 => {
                match &**body {
                    Term::Ctor {
                        ind, ctor, fields, ..
                    } if ind == i1 => {
                        let sig = match self.env.lookup(i1) {
                            Some(s) => s.clone(),
                            None => return Ok(None),
                        };
                        let mut new_fields: Vec<Term> = Vec::with_capacity(fields.len());
                        for (k, fk) in fields.iter().enumerate() {
                            let src_tys = sig.field_types_at(*ctor, a1, fields);
                            let dst_tys = sig.field_types_at(*ctor, a2, &new_fields);
                            new_fields.push(Term::Cast {
                                src: src_tys[k].clone().rc(),
                                dst: dst_tys[k].clone().rc(),
                                body: fk.clone().rc(),
                            });
                        }
                        Ok(Some((
                            Term::Ctor {
                                ind: i1.clone(),
                                ctor: *ctor,
                                params: a2.clone(),
                                fields: new_fields,
                            },
                            "Ctor",
                        )))
                    }
                    Term::Unk(_) => Ok(Some((Term::Unk(dst.clone()), "Ctor"))),
                    _ => Ok(None),
                }
            }
            _ => Ok(None),
        }
    }

    fn meet_rule(
        &mut self,
        lhs: &Rc<Term>,
        rhs: &Rc<Term>,
        ty: &Rc<Term>,
    ) -> Result<Option<(Term, &'static str)>, EngineError> {
        if lhs.is_unk() {
            return Ok(Some(((**rhs).clone(), "⊓?L")));
        }
        if rhs.is_unk() {
            return Ok(Some(((**lhs).clone(), "⊓?R")));
        }
        if lhs.is_err() {
            return Ok(Some((Term::Err(ty.clone()), "⊓℧L")));
        }
        if rhs.is_err() {
            return Ok(Some((Term::Err(ty.clone()), "⊓℧R")));
        }
        // Tagged values meet tag-wise.
        if let (
            Term::Tagged {
                tag: h1,
                level: l1,
                body: b1,
            },
            Term::Tagged {
                tag: h2, body: b2, ..
            },
        ) = (&**lhs, &**rhs)
        {
            if h1 != h2 {
                return Ok(Some((Term::Err(ty.clone()), "⊓Head℧")));
            }
            if let Some(g) = germ(self.env, h1, *l1) {
                return Ok(Some((
                    Term::Tagged {
                        tag: h1.clone(),
                        level: *l1,
                        body: Term::Meet {
                            lhs: b1.clone(),
                            rhs: b2.clone(),
                            ty: g.rc(),
                        }
                        .rc(),
                    },
                    "⊓Tag",
                )));
            }
            return Ok(None);
        }
        let (t1, t2) = match (tag_of(lhs), tag_of(rhs)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Ok(None),
        };
        if t1 != t2 {
            return Ok(Some((Term::Err(ty.clone()), "⊓Head℧")));
        }
        match (&**lhs, &**rhs) {
            (Term::True, Term::True)
            | (Term::False, Term::False)
            | (Term::Bool, Term::Bool) => Ok(Some(((**lhs).clone(), "⊓Struct"))),
            (Term::Type(l1), Term::Type(l2)) => {
                if l1 == l2 {
                    Ok(Some(((**lhs).clone(), "⊓Struct")))
                } else {
                    Ok(Some((Term::Err(ty.clone()), "⊓Head℧")))
                }
            }
            (Term::Lam(n, ann, b1), Term::Lam(_, _, b2)) => match &**ty {
                Term::Pi(_, _, cod) => Ok(Some((
                    Term::Lam(
                        n.clone(),
                        ann.clone(),
                        Term::Meet {
                            lhs: b1.clone(),
                            rhs: b2.clone(),
                            ty: cod.clone(),
                        }
                        .rc(),
                    ),
                    "⊓λ",
                ))),
                _ => Ok(None),
            },
            (Term::Pi(n, d1, c1), Term::Pi(_, d2, c2)) => match &**ty {
                Term::Type(_) => {
                    let dom = Term::Meet {
                        lhs: d1.clone(),
                        rhs: d2.clone(),
                        ty: ty.clone(),
                    };
                    let cast1 = Term::Cast {
                        src: shift(&dom, 1).rc(),
                        dst: shift(d1, 1).rc(),
                        body: Term::Var(0).rc(),
                    };
                    let cast2 = Term::Cast {
                        src: shift(&dom, 1).rc(),
                        dst: shift(d2, 1).rc(),
                        body: Term::Var(0).rc(),
                    };
                    let c1i = subst0(c1, &cast1);
                    let c2i = subst0(c2, &cast2);
                    Ok(Some((
                        Term::Pi(
                            n.clone(),
                            dom.rc(),
                            Term::Meet {
                                lhs: c1i.rc(),
                                rhs: c2i.rc(),
                                ty: shift(ty, 1).rc(),
                            }
                            .rc(),
                        ),
                        "⊓Π",
                    )))
                }
                _ => Ok(None),
            },
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
            ) => match &**ty {
                Term::Type(_) => {
                    let tmeet = Term::Meet {
                        lhs: q1.clone(),
                        rhs: q2.clone(),
                        ty: ty.clone(),
                    };
                    let cast_into = |x: &Rc<Term>, from: &Rc<Term>| -> Term {
                        Term::Cast {
                            src: from.clone(),
                            dst: tmeet.clone().rc(),
                            body: x.clone(),
                        }
                    };
                    Ok(Some((
                        Term::Eq {
                            lhs: Term::Meet {
                                lhs: cast_into(a1, q1).rc(),
                                rhs: cast_into(a2, q2).rc(),
                                ty: tmeet.clone().rc(),
                            }
                            .rc(),
                            ty: tmeet.clone().rc(),
                            rhs: Term::Meet {
                                lhs: cast_into(b1, q1).rc(),
                                rhs: cast_into(b2, q2).rc(),
                                ty: tmeet.rc(),
                            }
                            .rc(),
                        },
                        "⊓Eq",
                    )))
                }
                _ => Ok(None),
            },
            (
                Term::Refl {
                    ev: e1, ..
                },
                Term::Refl { ev: e2, .. },
            ) => match &**ty {
                Term::Eq { lhs: a, ty: t, rhs: b } => Ok(Some((
                    Term::Refl {
                        ev: Term::Meet {
                            lhs: e1.clone(),
                            rhs: e2.clone(),
                            ty: t.clone(),
                        }
                        .rc(),
                        lhs: a.clone(),
                        rhs: b.clone(),
                    },
                    "⊓Refl",
                ))),
                _ => Ok(None),
            },
            (
                Term::TyCon { ind, args: a1 },
                Term::TyCon { args: a2, .. },
            ) => {
                let sig = match self.env.lookup(ind) {
                    Some(s) => s.clone(),
                    None => return Ok(None),
                };
                let mut out: Vec<Term> = Vec::with_capacity(a1.len());
                for k in 0..a1.len() {
                    let tys_l = sig.param_types_at(a1);
                    let tys_r = sig.param_types_at(a2);
                    let tys_m = sig.param_types_at(&out);
                    let cl = Term::Cast {
                        src: tys_l[k].clone().rc(),
                        dst: tys_m[k].clone().rc(),
                        body: a1[k].clone().rc(),
                    };
                    let cr = Term::Cast {
                        src: tys_r[k].clone().rc(),
                        dst: tys_m[k].clone().rc(),
                        body: a2[k].clone().rc(),
                    };
                    out.push(Term::Meet {
                        lhs: cl.rc(),
                        rhs: cr.rc(),
                        ty: tys_m[k].clone().rc(),
                    });
                }
                Ok(Some((
                    Term::TyCon {
                        ind: ind.clone(),
                        args: out,
                    },
                    "⊓TyCon",
                )))
            }
            (
                Term::Ctor {
                    ind,
                    ctor,
                    fields: f1,
                    ..
                },
                Term::Ctor { fields: f2, .. },
            ) => {
                // Same ctor tag guaranteed above. The common parameters come
                // from the meet's type annotation.
                let params = match &**ty {
                    Term::TyCon { args, .. } => args.clone(),
                    _ => return Ok(None),
                };
                let sig = match self.env.lookup(ind) {
                    Some(s) => s.clone(),
                    None => return Ok(None),
                };
                let mut out: Vec<Term> = Vec::with_capacity(f1.len());
                for k in 0..f1.len() {
                    let tys_l = sig.field_types_at(*ctor, &params, f1);
                    let tys_r = sig.field_types_at(*ctor, &params, f2);
                    let tys_m = sig.field_types_at(*ctor, &params, &out);
                    let cl = Term::Cast {
                        src: tys_l[k].clone().rc(),
                        dst: tys_m[k].clone().rc(),
                        body: f1[k].clone().rc(),
                    };
                    let cr = Term::Cast {
                        src: tys_r[k].clone().rc(),
                        dst: tys_m[k].clone().rc(),
                        body: f2[k].clone().rc(),
                    };
                    out.push(Term::Meet {
                        lhs: cl.rc(),
                        rhs: cr.rc(),
                        ty: tys_m[k].clone().rc(),
                    });
                }
                Ok(Some((
                    Term::Ctor {
                        ind: ind.clone(),
                        ctor: *ctor,
                        params,
                        fields: out,
                    },
                    "⊓Ctor",
                )))
            }
            _ => Ok(None),
        }
    }

    fn ind_rule(
        &mut self,
        ind: &crate::term::IndName,
        n_idx: usize,
        motive: &Rc<Term>,
        scrut: &Rc<Term>,
        branches: &[Branch],
    ) -> Result<Option<(Term, &'static str)>, EngineError> {
        let motive_at = |scrut_ty_args: &[Term], s: &Term| -> Term {
            let n = scrut_ty_args.len();
            let idx = &scrut_ty_args[n - n_idx..];
            let mut args: Vec<&Term> = idx.iter().collect();
            args.push(s);
            subst_many(motive, &args)
        };
        match &**scrut {
            Term::Unk(ty) => match &**ty {
                Term::TyCon { args, .. } if args.len() >= n_idx => {
                    Ok(Some((Term::Unk(motive_at(args, scrut).rc()), "Ind?")))
                }
                _ => Ok(None),
            },
            Term::Err(ty) => match &**ty {
                Term::TyCon { args, .. } if args.len() >= n_idx => {
                    Ok(Some((Term::Err(motive_at(args, scrut).rc()), "Ind℧")))
                }
                _ => Ok(None),
            },
            Term::Ctor {
                ind: ind2,
                ctor,
                params,
                fields,
            } if ind2 == ind => {
                let sig = match self.env.lookup(ind) {
                    Some(s) => s.clone(),
                    None => return Ok(None),
                };
                if !self.self_consistent(scrut)? {
                    return Ok(Some((Term::Err(motive_at(params, scrut).rc()), "Ind℧")));
                }
                debug_assert_eq!(sig.n_idx_params, n_idx);
                let branch = &branches[*ctor];
                if branch.n_fields != fields.len() {
                    return Ok(None);
                }
                // Recursor-style contraction: self-application spines in the
                // branch body become inner eliminations of the consumed field
                // directly (the guard check guarantees this shape), so one
                // kernel step matches one dispatch step of the model.
                let nf = branch.n_fields;
                let rewritten = replace_self_spines(
                    &branch.body,
                    0,
                    nf,
                    n_idx,
                    &|depth| Term::Ind {
                        ind: ind.clone(),
                        n_idx,
                        motive: shift_above(
                            motive,
                            n_idx + 1,
                            (1 + nf + depth) as isize,
                        )
                        .rc(),
                        scrut: Term::True.rc(), // replaced by the caller
                        branches: branches
                            .iter()
                            .map(|b| Branch {
                                n_fields: b.n_fields,
                                body: shift_above(
                                    &b.body,
                                    1 + b.n_fields,
                                    (1 + nf + depth) as isize,
                                )
                                .rc(),
                            })
                            .collect(),
                    },
                );
                let dummy = Term::True;
                let mut args: Vec<&Term> = vec![&dummy];
                args.extend(fields.iter());
                Ok(Some((subst_many(&rewritten, &args), "IndCtor")))
            }
            _ => Ok(None),
        }
    }

    // (self-spine replacement helper lives below the impl)

    /// Exact-mode collapse of error-carrying introduction forms: a
    /// constructor whose field is (eta-equivalent to) err is err.
    fn exact_err_collapse(&mut self, t: &Term) -> Option<(Term, &'static str)> {
        if self.mode != EvalMode::Exact {
            return None;
        }
        if let Term::Ctor { ind, params, fields, .. } = t {
            if fields.iter().any(is_err_value) {
                return Some((
                    Term::Err(
                        Term::TyCon {
                            ind: ind.clone(),
                            args: params.clone(),
                        }
                        .rc(),
                    ),
                    "Ctor℧",
                ));
            }
        }
        None
    }

    fn step_children(&mut self, t: &Term) -> Result<Option<(Term, &'static str)>, EngineError> {
        macro_rules! try_child {
            ($i:expr, $child:expr, $rebuild:expr) => {{
                self.path.push($i);
                let r = self.step(&*$child)?;
                self.path.pop();
                if let Some((new, rule)) = r {
                    #[allow(clippy::redundant_closure_call)]
                    return Ok(Some(($rebuild(new), rule)));
                }
            }};
        }
        match t {
            Term::Type(_) | Term::Var(_) | Term::Bool | Term::True | Term::False => Ok(None),
            Term::Pi(n, dom, cod) => {
                try_child!(0, dom, |x: Term| Term::Pi(n.clone(), x.rc(), cod.clone()));
                try_child!(1, cod, |x: Term| Term::Pi(n.clone(), dom.clone(), x.rc()));
                Ok(None)
            }
            Term::Lam(n, ann, body) => {
                try_child!(0, ann, |x: Term| Term::Lam(n.clone(), x.rc(), body.clone()));
                try_child!(1, body, |x: Term| Term::Lam(n.clone(), ann.clone(), x.rc()));
                Ok(None)
            }
            Term::App(f, a) => {
                try_child!(0, f, |x: Term| Term::App(x.rc(), a.clone()));
                try_child!(1, a, |x: Term| Term::App(f.clone(), x.rc()));
                Ok(None)
            }
            Term::If {
                ann,
                scrut,
                then_br,
                else_br,
            } => {
                try_child!(0, ann, |x: Term| Term::If {
                    ann: x.rc(),
                    scrut: scrut.clone(),
                    then_br: then_br.clone(),
                    else_br: else_br.clone()
                });
                try_child!(1, scrut, |x: Term| Term::If {
                    ann: ann.clone(),
                    scrut: x.rc(),
                    then_br: then_br.clone(),
                    else_br: else_br.clone()
                });
                try_child!(2, then_br, |x: Term| Term::If {
                    ann: ann.clone(),
                    scrut: scrut.clone(),
                    then_br: x.rc(),
                    else_br: else_br.clone()
                });
                try_child!(3, else_br, |x: Term| Term::If {
                    ann: ann.clone(),
                    scrut: scrut.clone(),
                    then_br: then_br.clone(),
                    else_br: x.rc()
                });
                Ok(None)
            }
            Term::Unk(ty) => {
                try_child!(0, ty, |x: Term| Term::Unk(x.rc()));
                Ok(None)
            }
            Term::Err(ty) => {
                try_child!(0, ty, |x: Term| Term::Err(x.rc()));
                Ok(None)
            }
            Term::Cast { src, dst, body } => {
                try_child!(0, src, |x: Term| Term::Cast {
                    src: x.rc(),
                    dst: dst.clone(),
                    body: body.clone()
                });
                try_child!(1, dst, |x: Term| Term::Cast {
                    src: src.clone(),
                    dst: x.rc(),
                    body: body.clone()
                });
                try_child!(2, body, |x: Term| Term::Cast {
                    src: src.clone(),
                    dst: dst.clone(),
                    body: x.rc()
                });
                Ok(None)
            }
            Term::Tagged { tag, level, body } => {
                try_child!(0, body, |x: Term| Term::Tagged {
                    tag: tag.clone(),
                    level: *level,
                    body: x.rc()
                });
                Ok(None)
            }
            Term::Eq { lhs, ty, rhs } => {
                try_child!(0, ty, |x: Term| Term::Eq {
                    lhs: lhs.clone(),
                    ty: x.rc(),
                    rhs: rhs.clone()
                });
                try_child!(1, lhs, |x: Term| Term::Eq {
                    lhs: x.rc(),
                    ty: ty.clone(),
                    rhs: rhs.clone()
                });
                try_child!(2, rhs, |x: Term| Term::Eq {
                    lhs: lhs.clone(),
                    ty: ty.clone(),
                    rhs: x.rc()
                });
                Ok(None)
            }
            Term::Refl { ev, lhs, rhs } => {
                try_child!(0, ev, |x: Term| Term::Refl {
                    ev: x.rc(),
                    lhs: lhs.clone(),
                    rhs: rhs.clone()
                });
                try_child!(1, lhs, |x: Term| Term::Refl {
                    ev: ev.clone(),
                    lhs: x.rc(),
                    rhs: rhs.clone()
                });
                try_child!(2, rhs, |x: Term| Term::Refl {
                    ev: ev.clone(),
                    lhs: lhs.clone(),
                    rhs: x.rc()
                });
                Ok(None)
            }
            Term::Subst {
                ty,
                motive,
                from,
                to,
                body,
                eq,
            } => {
                let rebuild = |i: usize, x: Term| {
                    let mut parts = [
                        ty.clone(),
                        motive.clone(),
                        from.clone(),
                        to.clone(),
                        body.clone(),
                        eq.clone(),
                    ];
                    parts[i] = x.rc();
                    let [ty, motive, from, to, body, eq] = parts;
                    Term::Subst {
                        ty,
                        motive,
                        from,
                        to,
                        body,
                        eq,
                    }
                };
                for (i, part) in [ty, motive, from, to, body, eq].into_iter().enumerate() {
                    self.path.push(i);
                    let r = self.step(part)?;
                    self.path.pop();
                    if let Some((new, rule)) = r {
                        return Ok(Some((rebuild(i, new), rule)));
                    }
                }
                Ok(None)
            }
            Term::Meet { lhs, rhs, ty } => {
                try_child!(0, ty, |x: Term| Term::Meet {
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                    ty: x.rc()
                });
                try_child!(1, lhs, |x: Term| Term::Meet {
                    lhs: x.rc(),
                    rhs: rhs.clone(),
                    ty: ty.clone()
                });
                try_child!(2, rhs, |x: Term| Term::Meet {
                    lhs: lhs.clone(),
                    rhs: x.rc(),
                    ty: ty.clone()
                });
                Ok(None)
            }
            Term::TyCon { ind, args } => {
                for i in 0..args.len() {
                    self.path.push(i);
                    let r = self.step(&args[i])?;
                    self.path.pop();
                    if let Some((new, rule)) = r {
                        let mut args2 = args.clone();
                        args2[i] = new;
                        return Ok(Some((
                            Term::TyCon {
                                ind: ind.clone(),
                                args: args2,
                            },
                            rule,
                        )));
                    }
                }
                Ok(None)
            }
            Term::Ctor {
                ind,
                ctor,
                params,
                fields,
            } => {
                for i in 0..params.len() {
                    self.path.push(i);
                    let r = self.step(&params[i])?;
                    self.path.pop();
                    if let Some((new, rule)) = r {
                        let mut ps = params.clone();
                        ps[i] = new;
                        return Ok(Some((
                            Term::Ctor {
                                ind: ind.clone(),
                                ctor: *ctor,
                                params: ps,
                                fields: fields.clone(),
                            },
                            rule,
                        )));
                    }
                }
                for i in 0..fields.len() {
                    self.path.push(params.len() + i);
                    let r = self.step(&fields[i])?;
                    self.path.pop();
                    if let Some((new, rule)) = r {
                        let mut fs = fields.clone();
                        fs[i] = new;
                        return Ok(Some((
                            Term::Ctor {
                                ind: ind.clone(),
                                ctor: *ctor,
                                params: params.clone(),
                                fields: fs,
                            },
                            rule,
                        )));
                    }
                }
                Ok(None)
            }
            Term::Ind {
                ind,
                n_idx,
                motive,
                scrut,
                branches,
            } => {
                try_child!(0, motive, |x: Term| Term::Ind {
                    ind: ind.clone(),
                    n_idx: *n_idx,
                    motive: x.rc(),
                    scrut: scrut.clone(),
                    branches: branches.to_vec()
                });
                try_child!(1, scrut, |x: Term| Term::Ind {
                    ind: ind.clone(),
                    n_idx: *n_idx,
                    motive: motive.clone(),
                    scrut: x.rc(),
                    branches: branches.to_vec()
                });
                for (i, b) in branches.iter().enumerate() {
                    self.path.push(2 + i);
                    let r = self.step(&b.body)?;
                    self.path.pop();
                    if let Some((new, rule)) = r {
                        let mut bs = branches.to_vec();
                        bs[i] = Branch {
                            n_fields: b.n_fields,
                            body: new.rc(),
                        };
                        return Ok(Some((
                            Term::Ind {
                                ind: ind.clone(),
                                n_idx: *n_idx,
                                motive: motive.clone(),
                                scrut: scrut.clone(),
                                branches: bs,
                            },
                            rule,
                        )));
                    }
                }
                Ok(None)
            }
        }
    }

    /// One leftmost-outermost step (without ticking the budget).
    fn step(&mut self, t: &Term) -> Result<Option<(Term, &'static str)>, EngineError> {
        if let Some(hit) = self.top_rule(t)? {
            return Ok(Some(hit));
        }
        if let Some(hit) = self.exact_err_collapse(t) {
            return Ok(Some(hit));
        }
        self.step_children(t)
    }

    /// Public single-step reduction.
    pub fn reduce_step(&mut self, t: &Term) -> Result<StepOutcome, EngineError> {
        self.path.clear();
        match self.step(t)? {
            Some((term, rule)) => {
                let path = self.path.clone();
                Ok(StepOutcome::Next { term, rule, path })
            }
            None => Ok(StepOutcome::NormalForm),
        }
    }

    /// Reduce to (reduction-)normal form with a call-by-name discipline:
    /// try the root rule, then normalize children left to right, retrying the
    /// root rule after each child settles.
    pub fn norm_full(&mut self, t: &Term) -> Result<Term, EngineError> {
        let rc = self.norm_rc(&t.clone().rc())?;
        Ok((*rc).clone())
    }

    pub fn norm_rc(&mut self, t: &Rc<Term>) -> Result<Rc<Term>, EngineError> {
        if self.normal_memo.contains_key(&Rc::as_ptr(t)) {
            return Ok(t.clone());
        }
        let mut cur: Rc<Term> = t.clone();
        loop {
            while let Some((next, rule)) = self.top_rule(&cur)? {
                self.tick(rule, &cur)?;
                cur = next.rc();
            }
            if let Some((next, rule)) = self.exact_err_collapse(&cur) {
                self.tick(rule, &cur)?;
                cur = next.rc();
                continue;
            }
            match self.norm_children_once(&cur)? {
                Some(next) => cur = next,
                None => {
                    self.normal_memo.insert(Rc::as_ptr(&cur), cur.clone());
                    return Ok(cur);
                }
            }
        }
    }

    fn norm_child(
        &mut self,
        changed: &mut bool,
        idx: usize,
        c: &Rc<Term>,
    ) -> Result<Rc<Term>, EngineError> {
        if *changed {
            return Ok(c.clone());
        }
        self.path.push(idx);
        let n = self.norm_rc(c)?;
        self.path.pop();
        if !Rc::ptr_eq(&n, c) {
            *changed = true;
        }
        Ok(n)
    }

    /// Normalize children one by one; returns `Some(rebuilt)` as soon as any
    /// child changed (so the caller can retry root rules), `None` when every
    /// child is already normal.
    fn norm_children_once(&mut self, t: &Rc<Term>) -> Result<Option<Rc<Term>>, EngineError> {
        let mut changed = false;
        macro_rules! norm {
            ($idx:expr, $c:expr) => {
                self.norm_child(&mut changed, $idx, $c)?
            };
        }
        let rebuilt = match &**t {
            Term::Type(_) | Term::Var(_) | Term::Bool | Term::True | Term::False => {
                return Ok(None)
            }
            Term::Pi(n, dom, cod) => {
                let d = norm!(0, dom);
                let c = norm!(1, cod);
                Term::Pi(n.clone(), d, c)
            }
            Term::Lam(n, ann, body) => {
                let a = norm!(0, ann);
                let b = norm!(1, body);
                Term::Lam(n.clone(), a, b)
            }
            Term::App(f, a) => {
                let f2 = norm!(0, f);
                let a2 = norm!(1, a);
                Term::App(f2, a2)
            }
            Term::If {
                ann,
                scrut,
                then_br,
                else_br,
            } => Term::If {
                ann: norm!(0, ann),
                scrut: norm!(1, scrut),
                then_br: norm!(2, then_br),
                else_br: norm!(3, else_br),
            },
            Term::Unk(ty) => Term::Unk(norm!(0, ty)),
            Term::Err(ty) => Term::Err(norm!(0, ty)),
            Term::Cast { src, dst, body } => Term::Cast {
                src: norm!(0, src),
                dst: norm!(1, dst),
                body: norm!(2, body),
            },
            Term::Tagged { tag, level, body } => Term::Tagged {
                tag: tag.clone(),
                level: *level,
                body: norm!(0, body),
            },
            Term::Eq { lhs, ty, rhs } => Term::Eq {
                ty: norm!(0, ty),
                lhs: norm!(1, lhs),
                rhs: norm!(2, rhs),
            },
            Term::Refl { ev, lhs, rhs } => Term::Refl {
                ev: norm!(0, ev),
                lhs: norm!(1, lhs),
                rhs: norm!(2, rhs),
            },
            Term::Subst {
                ty,
                motive,
                from,
                to,
                body,
                eq,
            } => Term::Subst {
                ty: norm!(0, ty),
                motive: norm!(1, motive),
                from: norm!(2, from),
                to: norm!(3, to),
                body: norm!(4, body),
                eq: norm!(5, eq),
            },
            Term::Meet { lhs, rhs, ty } => Term::Meet {
                ty: norm!(0, ty),
                lhs: norm!(1, lhs),
                rhs: norm!(2, rhs),
            },
            Term::TyCon { ind, args } => {
                let mut args2 = Vec::with_capacity(args.len());
                for (i, a) in args.iter().enumerate() {
                    let rc = a.clone().rc();
                    args2.push((*self.norm_child(&mut changed, i, &rc)?).clone());
                }
                Term::TyCon {
                    ind: ind.clone(),
                    args: args2,
                }
            }
            Term::Ctor {
                ind,
                ctor,
                params,
                fields,
            } => {
                let np = params.len();
                let mut ps = Vec::with_capacity(np);
                for (i, a) in params.iter().enumerate() {
                    let rc = a.clone().rc();
                    ps.push((*self.norm_child(&mut changed, i, &rc)?).clone());
                }
                let mut fs = Vec::with_capacity(fields.len());
                for (i, a) in fields.iter().enumerate() {
                    let rc = a.clone().rc();
                    fs.push((*self.norm_child(&mut changed, np + i, &rc)?).clone());
                }
                Term::Ctor {
                    ind: ind.clone(),
                    ctor: *ctor,
                    params: ps,
                    fields: fs,
                }
            }
            Term::Ind {
                ind,
                n_idx,
                motive,
                scrut,
                branches,
            } => {
                let m = norm!(0, motive);
                let s = norm!(1, scrut);
                let mut bs = Vec::with_capacity(branches.len());
                for (i, b) in branches.iter().enumerate() {
                    bs.push(Branch {
                        n_fields: b.n_fields,
                        body: self.norm_child(&mut changed, 2 + i, &b.body)?,
                    });
                }
                Term::Ind {
                    ind: ind.clone(),
                    n_idx: *n_idx,
                    motive: m,
                    scrut: s,
                    branches: bs,
                }
            }
        };
        if changed {
            Ok(Some(rebuilt.rc()))
        } else {
            Ok(None)
        }
    }
}

/// Replace every application spine of the self-reference (`Var nf` in the
/// branch scope) through the index arguments and a field variable with an
/// inner elimination of that field. Other subterms map structurally.
fn replace_self_spines(
    t: &Term,
    depth: usize,
    nf: usize,
    n_idx: usize,
    make_ind: &dyn Fn(usize) -> Term,
) -> Term {
    // Spine recognition at this node.
    let mut spine: Vec<&Rc<Term>> = Vec::new();
    let mut head = t;
    while let Term::App(f, a) = head {
        spine.push(a);
        head = f;
    }
    spine.reverse();
    if let Term::Var(i) = head {
        if *i >= depth && i - depth == nf && spine.len() >= n_idx + 1 {
            if let Term::Var(fv) = &**spine[n_idx] {
                if *fv >= depth && fv - depth < nf {
                    let mut ind = make_ind(depth);
                    if let Term::Ind { scrut, .. } = &mut ind {
                        *scrut = Term::Var(*fv).rc();
                    }
                    let mut out = ind;
                    for extra in &spine[n_idx + 1..] {
                        out = Term::App(
                            out.rc(),
                            replace_self_spines(extra, depth, nf, n_idx, make_ind).rc(),
                        );
                    }
                    return out;
                }
            }
        }
    }
    match t {
        Term::App(f, a) => Term::App(
            replace_self_spines(f, depth, nf, n_idx, make_ind).rc(),
            replace_self_spines(a, depth, nf, n_idx, make_ind).rc(),
        ),
        Term::Var(_) | Term::Type(_) | Term::Bool | Term::True | Term::False => t.clone(),
        Term::Pi(n, a, b) => Term::Pi(
            n.clone(),
            replace_self_spines(a, depth, nf, n_idx, make_ind).rc(),
            replace_self_spines(b, depth + 1, nf, n_idx, make_ind).rc(),
        ),
        Term::Lam(n, a, b) => Term::Lam(
            n.clone(),
            replace_self_spines(a, depth, nf, n_idx, make_ind).rc(),
            replace_self_spines(b, depth + 1, nf, n_idx, make_ind).rc(),
        ),
        Term::If {
            ann,
            scrut,
            then_br,
            else_br,
        } => Term::If {
            ann: replace_self_spines(ann, depth, nf, n_idx, make_ind).rc(),
            scrut: replace_self_spines(scrut, depth, nf, n_idx, make_ind).rc(),
            then_br: replace_self_spines(then_br, depth, nf, n_idx, make_ind).rc(),
            else_br: replace_self_spines(else_br, depth, nf, n_idx, make_ind).rc(),
        },
        Term::Unk(a) => Term::Unk(replace_self_spines(a, depth, nf, n_idx, make_ind).rc()),
        Term::Err(a) => Term::Err(replace_self_spines(a, depth, nf, n_idx, make_ind).rc()),
        Term::Cast { src, dst, body } => Term::Cast {
            src: replace_self_spines(src, depth, nf, n_idx, make_ind).rc(),
            dst: replace_self_spines(dst, depth, nf, n_idx, make_ind).rc(),
            body: replace_self_spines(body, depth, nf, n_idx, make_ind).rc(),
        },
        Term::Tagged { tag, level, body } => Term::Tagged {
            tag: tag.clone(),
            level: *level,
            body: replace_self_spines(body, depth, nf, n_idx, make_ind).rc(),
        },
        Term::Eq { lhs, ty, rhs } => Term::Eq {
            lhs: replace_self_spines(lhs, depth, nf, n_idx, make_ind).rc(),
            ty: replace_self_spines(ty, depth, nf, n_idx, make_ind).rc(),
            rhs: replace_self_spines(rhs, depth, nf, n_idx, make_ind).rc(),
        },
        Term::Refl { ev, lhs, rhs } => Term::Refl {
            ev: replace_self_spines(ev, depth, nf, n_idx, make_ind).rc(),
            lhs: replace_self_spines(lhs, depth, nf, n_idx, make_ind).rc(),
            rhs: replace_self_spines(rhs, depth, nf, n_idx, make_ind).rc(),
        },
        Term::Subst {
            ty,
            motive,
            from,
            to,
            body,
            eq,
        } => Term::Subst {
            ty: replace_self_spines(ty, depth, nf, n_idx, make_ind).rc(),
            motive: replace_self_spines(motive, depth, nf, n_idx, make_ind).rc(),
            from: replace_self_spines(from, depth, nf, n_idx, make_ind).rc(),
            to: replace_self_spines(to, depth, nf, n_idx, make_ind).rc(),
            body: replace_self_spines(body, depth, nf, n_idx, make_ind).rc(),
            eq: replace_self_spines(eq, depth, nf, n_idx, make_ind).rc(),
        },
        Term::Meet { lhs, rhs, ty } => Term::Meet {
            lhs: replace_self_spines(lhs, depth, nf, n_idx, make_ind).rc(),
            rhs: replace_self_spines(rhs, depth, nf, n_idx, make_ind).rc(),
            ty: replace_self_spines(ty, depth, nf, n_idx, make_ind).rc(),
        },
        Term::TyCon { ind, args } => Term::TyCon {
            ind: ind.clone(),
            args: args
                .iter()
                .map(|a| replace_self_spines(a, depth, nf, n_idx, make_ind))
                .collect(),
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
                .map(|a| replace_self_spines(a, depth, nf, n_idx, make_ind))
                .collect(),
            fields: fields
                .iter()
                .map(|a| replace_self_spines(a, depth, nf, n_idx, make_ind))
                .collect(),
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
            motive: replace_self_spines(motive, depth + ni + 1, nf, n_idx, make_ind).rc(),
            scrut: replace_self_spines(scrut, depth, nf, n_idx, make_ind).rc(),
            branches: branches
                .iter()
                .map(|b| Branch {
                    n_fields: b.n_fields,
                    body: replace_self_spines(&b.body, depth + 1 + b.n_fields, nf, n_idx, make_ind)
                        .rc(),
                })
                .collect(),
        },
    }
}

/// Does the term have a *type former* head (a defined `tagOf` in the
/// `TypeTag` subset)?
fn type_head(t: &Term) -> Option<TypeTag> {
    match tag_of(t)? {
        crate::term::Tag::Of(tt) => Some(tt),
        _ => None,
    }
}

/// Eta-equivalence to `err`, mirroring the model's bottom check on values:
/// err itself, a refl with err evidence, a constructor with an err-like
/// field, a function whose body is err-like, or a tagged err-like payload.
pub fn is_err_value(t: &Term) -> bool {
    match t {
        Term::Err(_) => true,
        Term::Refl { ev, .. } => is_err_value(ev),
        Term::Ctor { fields, .. } => fields.iter().any(is_err_value),
        Term::Lam(_, _, body) => is_err_value(body),
        Term::Tagged { body, .. } => is_err_value(body),
        _ => false,
    }
}

/// Single-step reduction at the given mode. Never fails on ill-typed input;
/// the budget error can only arise from the internal evidence checks.
pub fn reduce_step(env: &Env, t: &Term, mode: EvalMode) -> StepOutcome {
    let mut m = Machine::new(env, mode, DEFAULT_CEILING);
    m.reduce_step(t).unwrap_or(StepOutcome::NormalForm)
}

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Type-directed eta expansion of a (reduction-)normal term at a normal
/// type. May create new redexes (meets inside refl evidence); `normalize`
/// iterates to a fixed point.
pub fn eta_expand(env: &Env, ctx: &Context, v: &Term, ty: &Term) -> Term {
    Etaizer { env }.value(ctx, v, ty)
}

/// Structural eta for types (no ambient universe needed).
pub fn eta_type(env: &Env, ctx: &Context, t: &Term) -> Term {
    Etaizer { env }.ty(ctx, t)
}

/// Reduce a type to normal form and eta-expand it structurally.
pub fn norm_type(env: &Env, ctx: &Context, t: &Term) -> Result<Term, EngineError> {
    let mut m = Machine::new(env, EvalMode::Approximate, DEFAULT_CEILING);
    let r = m.norm_full(t)?;
    Ok(eta_type(env, ctx, &r))
}

struct Etaizer<'e> {
    env: &'e Env,
}

impl<'e> Etaizer<'e> {
    fn reduce(&self, t: &Term) -> Term {
        let mut m = Machine::new(self.env, EvalMode::Approximate, DEFAULT_CEILING);
        m.norm_full(t).unwrap_or_else(|_| t.clone())
    }

    fn value(&self, ctx: &Context, v: &Term, ty: &Term) -> Term {
        let tyr = self.reduce(ty);
        match &tyr {
            Term::Pi(n, dom, cod) => match v {
                Term::Lam(ln, ann, body) => {
                    let ann2 = self.ty(ctx, ann);
                    let ctx2 = ctx.extended(ln.clone(), (**dom).clone());
                    Term::Lam(
                        ln.clone(),
                        ann2.rc(),
                        self.value(&ctx2, body, cod).rc(),
                    )
                }
                Term::Unk(_) => {
                    let ctx2 = ctx.extended(n.clone(), (**dom).clone());
                    Term::Lam(
                        n.clone(),
                        self.ty(ctx, dom).rc(),
                        self.value(&ctx2, &Term::Unk(cod.clone()), cod).rc(),
                    )
                }
                Term::Err(_) => {
                    let ctx2 = ctx.extended(n.clone(), (**dom).clone());
                    Term::Lam(
                        n.clone(),
                        self.ty(ctx, dom).rc(),
                        self.value(&ctx2, &Term::Err(cod.clone()), cod).rc(),
                    )
                }
                neutral if is_neutral_shape(neutral) => {
                    let ctx2 = ctx.extended(n.clone(), (**dom).clone());
                    let app = Term::App(shift(neutral, 1).rc(), Term::Var(0).rc());
                    let body = self.value(&ctx2, &self.reduce(&app), cod);
                    Term::Lam(n.clone(), self.ty(ctx, dom).rc(), body.rc())
                }
                other => other.clone(),
            },
            Term::Eq { lhs, ty: t, rhs } => match v {
                Term::Unk(_) => Term::Refl {
                    ev: Term::Meet {
                        lhs: lhs.clone(),
                        rhs: rhs.clone(),
                        ty: t.clone(),
                    }
                    .rc(),
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                },
                Term::Refl { ev, lhs: el, rhs: er } => {
                    let ev2 = self.value(ctx, ev, t);
                    if is_err_value(&ev2) {
                        Term::Err(tyr.clone().rc())
                    } else {
                        Term::Refl {
                            ev: ev2.rc(),
                            lhs: el.clone(),
                            rhs: er.clone(),
                        }
                    }
                }
                other => self.generic(ctx, other),
            },
            Term::TyCon { ind, args } => match v {
                Term::Ctor {
                    ind: ci,
                    ctor,
                    params,
                    fields,
                } => {
                    let sig = match self.env.lookup(ci) {
                        Some(s) => s.clone(),
                        None => return v.clone(),
                    };
                    let ftys = sig.field_types_at(*ctor, params, fields);
                    let fields2: Vec<Term> = fields
                        .iter()
                        .zip(ftys.iter())
                        .map(|(f, t)| self.value(ctx, f, t))
                        .collect();
                    if fields2.iter().any(is_err_value) {
                        Term::Err(
                            Term::TyCon {
                                ind: ind.clone(),
                                args: args.clone(),
                            }
                            .rc(),
                        )
                    } else {
                        Term::Ctor {
                            ind: ci.clone(),
                            ctor: *ctor,
                            params: params.clone(),
                            fields: fields2,
                        }
                    }
                }
                other => self.generic(ctx, other),
            },
            _ => {
                // Unknown-type targets: expand tagged payloads at their germ.
                match v {
                    Term::Tagged { tag, level, body } => {
                        match germ(self.env, tag, *level) {
                            Some(g) => Term::Tagged {
                                tag: tag.clone(),
                                level: *level,
                                body: self.value(ctx, body, &g).rc(),
                            },
                            None => v.clone(),
                        }
                    }
                    other => self.generic(ctx, other),
                }
            }
        }
    }

    /// Fallback: eta-expand inside a value without a useful outer type:
    /// types get the structural treatment, neutrals get their parts expanded.
    fn generic(&self, ctx: &Context, v: &Term) -> Term {
        match v {
            Term::Pi(..) | Term::Bool | Term::Type(_) | Term::Eq { .. } | Term::TyCon { .. } => {
                self.ty(ctx, v)
            }
            Term::Unk(t) => Term::Unk(self.ty(ctx, t).rc()),
            Term::Err(t) => Term::Err(self.ty(ctx, t).rc()),
            neutral if is_neutral_shape(neutral) => self.neutral(ctx, neutral).0,
            other => other.clone(),
        }
    }

    /// Eta-expand the value parts of a neutral, synthesizing its type along
    /// the spine.
    fn neutral(&self, ctx: &Context, n: &Term) -> (Term, Option<Term>) {
        match n {
            Term::Var(i) => {
                let ty = ctx.lookup(*i).map(|t| self.reduce(&t));
                (n.clone(), ty)
            }
            Term::App(f, a) => {
                let (f2, fty) = self.neutral(ctx, f);
                match fty {
                    Some(Term::Pi(_, dom, cod)) => {
                        let a2 = self.value(ctx, a, &dom);
                        let rty = self.reduce(&subst0(&cod, &a2));
                        (Term::App(f2.rc(), a2.rc()), Some(rty))
                    }
                    _ => (Term::App(f2.rc(), (**a).clone().rc()), None),
                }
            }
            Term::If {
                ann,
                scrut,
                then_br,
                else_br,
            } => {
                let ann2 = self.ty(ctx, ann);
                let (s2, _) = self.neutral(ctx, scrut);
                (
                    Term::If {
                        ann: ann2.clone().rc(),
                        scrut: s2.rc(),
                        then_br: self.value(ctx, then_br, &ann2).rc(),
                        else_br: self.value(ctx, else_br, &ann2).rc(),
                    },
                    Some(ann2),
                )
            }
            Term::Cast { src, dst, body } => {
                let src2 = self.ty(ctx, src);
                let dst2 = self.ty(ctx, dst);
                let body2 = self.value(ctx, body, &src2);
                (
                    Term::Cast {
                        src: src2.rc(),
                        dst: dst2.clone().rc(),
                        body: body2.rc(),
                    },
                    Some(dst2),
                )
            }
            Term::Meet { lhs, rhs, ty } => {
                let ty2 = self.ty(ctx, ty);
                (
                    Term::Meet {
                        lhs: self.value(ctx, lhs, &ty2).rc(),
                        rhs: self.value(ctx, rhs, &ty2).rc(),
                        ty: ty2.clone().rc(),
                    },
                    Some(ty2),
                )
            }
            Term::Subst {
                ty,
                motive,
                from,
                to,
                body,
                eq,
            } => {
                let ty2 = self.ty(ctx, ty);
                let from2 = self.value(ctx, from, &ty2);
                let to2 = self.value(ctx, to, &ty2);
                let eqty = Term::Eq {
                    lhs: from2.clone().rc(),
                    ty: ty2.clone().rc(),
                    rhs: to2.clone().rc(),
                };
                let out_ty = self.reduce(&Term::App(motive.clone(), to2.clone().rc()));
                (
                    Term::Subst {
                        ty: ty2.rc(),
                        motive: (**motive).clone().rc(),
                        from: from2.rc(),
                        to: to2.rc(),
                        body: (**body).clone().rc(),
                        eq: self.value(ctx, eq, &eqty).rc(),
                    },
                    Some(out_ty),
                )
            }
            Term::Ind {
                ind,
                n_idx,
                motive,
                scrut,
                branches,
            } => {
                let (s2, _) = if is_neutral_shape(scrut) {
                    self.neutral(ctx, scrut)
                } else {
                    ((**scrut).clone(), None)
                };
                (
                    Term::Ind {
                        ind: ind.clone(),
                        n_idx: *n_idx,
                        motive: (**motive).clone().rc(),
                        scrut: s2.rc(),
                        branches: branches.to_vec(),
                    },
                    None,
                )
            }
            other => (other.clone(), None),
        }
    }

    /// Structural eta for types.
    fn ty(&self, ctx: &Context, t: &Term) -> Term {
        let tr = self.reduce(t);
        match &tr {
            Term::Pi(n, dom, cod) => {
                let d = self.ty(ctx, dom);
                let ctx2 = ctx.extended(n.clone(), d.clone());
                Term::Pi(n.clone(), d.rc(), self.ty(&ctx2, cod).rc())
            }
            Term::Eq { lhs, ty, rhs } => {
                let t2 = self.ty(ctx, ty);
                Term::Eq {
                    lhs: self.value(ctx, lhs, &t2).rc(),
                    ty: t2.clone().rc(),
                    rhs: self.value(ctx, rhs, &t2).rc(),
                }
            }
            Term::TyCon { ind, args } => {
                let sig = match self.env.lookup(ind) {
                    Some(s) => s.clone(),
                    None => return tr.clone(),
                };
                let ptys = sig.param_types_at(args);
                Term::TyCon {
                    ind: ind.clone(),
                    args: args
                        .iter()
                        .zip(ptys.iter())
                        .map(|(a, t)| self.value(ctx, a, t))
                        .collect(),
                }
            }
            Term::Unk(inner) => Term::Unk(self.ty(ctx, inner).rc()),
            Term::Err(inner) => Term::Err(self.ty(ctx, inner).rc()),
            neutral if is_neutral_shape(neutral) => self.neutral(ctx, neutral).0,
            _ => tr.clone(),
        }
    }
}

/// Rough neutral check used by eta (the precise classification lives in
/// `classify`): a term headed by a variable or a blocked elimination.
pub fn is_neutral_shape(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(f, _) => is_neutral_shape(f),
        Term::If { scrut, .. } => is_neutral_shape(scrut),
        Term::Cast { src, dst, body } => {
            is_neutral_shape(src)
                || is_neutral_shape(dst)
                || is_neutral_shape(body)
                || body.is_unk() && type_head(dst).is_none()
        }
        Term::Meet { lhs, rhs, .. } => is_neutral_shape(lhs) || is_neutral_shape(rhs),
        Term::Subst { eq, .. } => is_neutral_shape(eq),
        Term::Ind { scrut, .. } => is_neutral_shape(scrut),
        _ => false,
    }
}

/// Approximate normalization: reduce to normal form, eta-expand at the given
/// type, and iterate until stable. Terminates for well-typed input; the step
/// ceiling converts any violation into a reported bug.
pub fn normalize(env: &Env, ctx: &Context, t: &Term, ty: &Term) -> Result<Term, NormalizeError> {
    normalize_with(env, ctx, t, ty, DEFAULT_CEILING, false).map(|(v, _)| v)
}

pub fn normalize_with(
    env: &Env,
    ctx: &Context,
    t: &Term,
    ty: &Term,
    ceiling: usize,
    want_trace: bool,
) -> Result<(Term, Vec<TraceEntry>), NormalizeError> {
    let mut m = Machine::new(env, EvalMode::Approximate, ceiling);
    if want_trace {
        m = m.with_trace();
    }
    let ty_n = m.norm_full(ty)?;
    let mut cur = m.norm_full(t)?;
    // Eta can expose new redexes (meets in refl evidence); iterate.
    for _ in 0..64 {
        let e = eta_expand(env, ctx, &cur, &ty_n);
        if e == cur {
            let tr = m.take_trace();
            return Ok((cur, tr));
        }
        cur = m.norm_full(&e)?;
    }
    // Eta not converging indicates a bug; surface it via the budget error.
    Err(NormalizeError::Engine(EngineError::BudgetExceeded {
        steps: m.steps,
        ceiling,
        trace: m.take_trace(),
    }))
}

/// Exact execution of a closed term. Out of fuel is an ordinary outcome:
/// gradual programs may diverge.
pub fn run_exact(env: &Env, t: &Term, fuel: usize) -> ExactOutcome {
    run_exact_traced(env, t, fuel, false).0
}

pub fn run_exact_traced(
    env: &Env,
    t: &Term,
    fuel: usize,
    want_trace: bool,
) -> (ExactOutcome, Vec<TraceEntry>) {
    let mut m = Machine::new(env, EvalMode::Exact, fuel);
    if want_trace {
        m = m.with_trace();
    }
    match m.norm_full(t) {
        Ok(v) => {
            let tr = m.take_trace();
            (
                ExactOutcome::Finished {
                    value: v,
                    steps: m.steps,
                },
                tr,
            )
        }
        Err(EngineError::BudgetExceeded { steps, trace, .. }) => {
            let tr = trace.clone();
            (ExactOutcome::OutOfFuel { steps, trace }, tr)
        }
    }
}
