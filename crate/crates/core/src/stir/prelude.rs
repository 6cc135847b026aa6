//! Generation of the model prelude: per-level codes and interpretations,
//! gradual booleans, the unknown-type datatype, top/bottom/bottom-checking,
//! gradual conditionals, casts, evidence composition, propositional
//! consistency, and one gradual datatype plus eliminator per program
//! inductive.

use crate::normalize::{EvalMode, Machine, DEFAULT_CEILING};
use crate::sig::{Env, InductiveSig};
use crate::term::{Level, Name, Term};

use super::term::{shift, Clause, Pat, Prelude, StirCtor, StirDef, StirInductive, StirTerm};
use super::translate::{translate_in, TransCx, TransError};

pub struct ModelNames;

impl ModelNames {
    pub fn code(l: u32) -> String {
        format!("Code{l}")
    }
    pub fn el(l: u32) -> String {
        format!("El{l}")
    }
    pub fn gunk(l: u32) -> String {
        format!("GUnk{l}")
    }
    pub fn gerr(l: u32) -> String {
        format!("GErr{l}")
    }
    pub fn gbool(l: u32) -> String {
        format!("GBool{l}")
    }
    pub fn geq(l: u32) -> String {
        format!("GEq{l}")
    }
    pub fn top(l: u32) -> String {
        format!("top{l}")
    }
    pub fn bot(l: u32) -> String {
        format!("bot{l}")
    }
    pub fn isbot(l: u32) -> String {
        format!("isbot{l}")
    }
    pub fn gif(l: u32) -> String {
        format!("gif{l}")
    }
    pub fn cast(l: u32) -> String {
        format!("cast{l}")
    }
    pub fn comp(l: u32) -> String {
        format!("comp{l}")
    }
    pub fn gsubst(l: u32, l2: u32) -> String {
        format!("gsubst{l}_{l2}")
    }
    pub fn gind(ind: &str) -> String {
        format!("G{ind}")
    }
    pub fn grec(ind: &str, l2: u32) -> String {
        format!("rec{ind}_{l2}")
    }
}

// Code constructor indices.
pub const C_UNK: usize = 0;
pub const C_ERR: usize = 1;
pub const C_TYPE: usize = 2;
pub const C_PI: usize = 3;
pub const C_BOOL: usize = 4;
pub const C_EQ: usize = 5;

// GBool constructor indices (paper order).
pub const B_UNK: usize = 0;
pub const B_ERR: usize = 1;
pub const B_TRUE: usize = 2;
pub const B_FALSE: usize = 3;

// GUnk constructor indices.
pub const U_UNK: usize = 0;
pub const U_ERR: usize = 1;
pub const U_BOOL: usize = 2;
pub const U_FUN: usize = 3;
pub const U_CODE: usize = 4;
pub const U_EQ: usize = 5;

pub struct Gen<'e> {
    pub env: &'e Env,
    pub max_level: u32,
}

impl<'e> Gen<'e> {
    /// Index of the `CInd` constructor for inductive `ind` inside `Code l`
    /// (only present at the inductive's own level).
    pub fn cind_index(&self, l: u32, ind: &str) -> Option<usize> {
        let mut next = C_EQ + 1;
        for sig in &self.env.inductives {
            if sig.level.0 == l {
                if &*sig.name == ind {
                    return Some(next);
                }
                next += 1;
            }
        }
        None
    }

    /// Index of the `UInd` constructor for `ind` inside `GUnk l`.
    pub fn uind_index(&self, l: u32, ind: &str) -> Option<usize> {
        let mut next = self.u_eq_index(l) + 1;
        for sig in &self.env.inductives {
            if sig.level.0 == l {
                if &*sig.name == ind {
                    return Some(next);
                }
                next += 1;
            }
        }
        None
    }

    pub fn u_code_index(&self, l: u32) -> Option<usize> {
        if l > 0 {
            Some(U_CODE)
        } else {
            None
        }
    }

    pub fn u_eq_index(&self, l: u32) -> usize {
        if l > 0 {
            U_EQ
        } else {
            U_EQ - 1
        }
    }

    fn code_ty(&self, l: u32) -> StirTerm {
        StirTerm::IndType {
            ind: ModelNames::code(l).into(),
            args: vec![],
        }
    }

    fn el(&self, l: u32, c: StirTerm) -> StirTerm {
        StirTerm::app(StirTerm::Const(ModelNames::el(l).into()), c)
    }

    fn cvar_el(&self, l: u32, v: usize) -> StirTerm {
        self.el(l, StirTerm::Var(v))
    }

    fn sbool(&self) -> StirTerm {
        StirTerm::IndType {
            ind: "SBool".into(),
            args: vec![],
        }
    }

    fn strue(&self) -> StirTerm {
        StirTerm::Ctor {
            ind: "SBool".into(),
            ctor: 0,
            args: vec![],
        }
    }

    fn sfalse(&self) -> StirTerm {
        StirTerm::Ctor {
            ind: "SBool".into(),
            ctor: 1,
            args: vec![],
        }
    }

    fn ctor(&self, ind: String, ctor: usize, args: Vec<StirTerm>) -> StirTerm {
        StirTerm::Ctor {
            ind: ind.into(),
            ctor,
            args,
        }
    }

    fn cc(&self, name: &str) -> StirTerm {
        StirTerm::Const(name.to_string().into())
    }

    /// Kernel-side universe of a type scoped under `ctx_types`.
    pub fn kernel_level(&self, ctx_types: &[Term], t: &Term) -> Result<u32, TransError> {
        let mut ctx = crate::context::Context::new();
        for ty in ctx_types {
            ctx.push(Name(None), ty.clone());
        }
        let checker = crate::typing::Checker::new(self.env);
        let ty = checker
            .synth(&ctx, t)
            .map_err(|e| TransError::Unsupported(format!("level synthesis failed: {e}")))?;
        let mut m = Machine::new(self.env, EvalMode::Approximate, DEFAULT_CEILING);
        match m
            .norm_full(&ty)
            .map_err(|e| TransError::Unsupported(e.to_string()))?
        {
            Term::Type(l) => Ok(l.0),
            other => Err(TransError::Unsupported(format!(
                "expected a universe, found {other:?}"
            ))),
        }
    }

    /// The model-side classifier type of a kernel type `s` (scoped under
    /// `ctx_types`): `Code k` when `s` is a universe, else `El (⟦s⟧)`, with
    /// kernel variables mapped one-to-one onto the stir scope.
    fn el_form(
        &self,
        ctx_types: &[Term],
        var_map_len: usize,
        s: &Term,
    ) -> Result<StirTerm, TransError> {
        let mut m = Machine::new(self.env, EvalMode::Approximate, DEFAULT_CEILING);
        let n = m
            .norm_full(s)
            .map_err(|e| TransError::Unsupported(e.to_string()))?;
        if let Term::Type(k) = n {
            return Ok(self.code_ty(k.0));
        }
        let lvl = self.kernel_level(ctx_types, s)?;
        let cx = TransCx {
            env: self.env,
            gen: self,
            ctx_types: ctx_types.to_vec(),
            depth: var_map_len,
        };
        let code = translate_in(&cx, s)?;
        Ok(self.el(lvl, code))
    }

    // ---------- generation ----------

    pub fn generate(&self) -> Result<Prelude, TransError> {
        let mut p = Prelude::default();
        p.inductives.push(StirInductive {
            name: "Unit".into(),
            level: Level(0),
            params: vec![],
            ctors: vec![StirCtor {
                name: "tt".into(),
                fields: vec![],
            }],
        });
        p.inductives.push(StirInductive {
            name: "SBool".into(),
            level: Level(0),
            params: vec![],
            ctors: vec![
                StirCtor {
                    name: "strue".into(),
                    fields: vec![],
                },
                StirCtor {
                    name: "sfalse".into(),
                    fields: vec![],
                },
            ],
        });
        for l in 0..=self.max_level {
            self.gen_level_types(&mut p, l)?;
        }
        for sig in &self.env.inductives {
            self.gen_gc(&mut p, sig)?;
        }
        p.defs.push(StirDef {
            name: "or".into(),
            ty: StirTerm::Pi(
                Name(None),
                self.sbool().rc(),
                StirTerm::Pi(Name(None), self.sbool().rc(), self.sbool().rc()).rc(),
            ),
            arity: 2,
            clauses: vec![
                Clause {
                    pats: vec![
                        Pat::Ctor {
                            ind: "SBool".into(),
                            ctor: 0,
                            args: vec![],
                        },
                        Pat::Var(Name::named("y")),
                    ],
                    guard: None,
                    rhs: self.strue(),
                },
                Clause {
                    pats: vec![
                        Pat::Ctor {
                            ind: "SBool".into(),
                            ctor: 1,
                            args: vec![],
                        },
                        Pat::Var(Name::named("y")),
                    ],
                    guard: None,
                    rhs: StirTerm::Var(0),
                },
            ],
            rec_args: vec![],
            trusted_termination: false,
        });
        for l in 0..=self.max_level {
            self.gen_el(&mut p, l)?;
            self.gen_top_bot(&mut p, l, true)?;
            self.gen_top_bot(&mut p, l, false)?;
            self.gen_isbot(&mut p, l)?;
            self.gen_gif(&mut p, l)?;
            self.gen_cast(&mut p, l)?;
            self.gen_comp(&mut p, l)?;
            for l2 in 0..=self.max_level {
                self.gen_gsubst(&mut p, l, l2)?;
            }
        }
        for sig in &self.env.inductives {
            for l2 in 0..=self.max_level {
                self.gen_rec(&mut p, sig, l2)?;
            }
        }
        Ok(p)
    }

    fn gen_level_types(&self, p: &mut Prelude, l: u32) -> Result<(), TransError> {
        p.inductives.push(StirInductive {
            name: ModelNames::gbool(l).into(),
            level: Level(l),
            params: vec![],
            ctors: ["BUnk", "BErr", "BTrue", "BFalse"]
                .iter()
                .map(|n| StirCtor {
                    name: (*n).into(),
                    fields: vec![],
                })
                .collect(),
        });
        p.inductives.push(StirInductive {
            name: ModelNames::gerr(l).into(),
            level: Level(l),
            params: vec![],
            ctors: vec![StirCtor {
                name: "Err".into(),
                fields: vec![],
            }],
        });
        let mut ctors = vec![
            StirCtor {
                name: "CUnk".into(),
                fields: vec![],
            },
            StirCtor {
                name: "CErr".into(),
                fields: vec![],
            },
            StirCtor {
                name: "CType".into(),
                fields: vec![],
            },
            StirCtor {
                name: "CPi".into(),
                fields: vec![
                    (Name::named("dom"), self.code_ty(l)),
                    (
                        Name::named("cod"),
                        StirTerm::Pi(
                            Name::named("x"),
                            self.cvar_el(l, 0).rc(),
                            self.code_ty(l).rc(),
                        ),
                    ),
                ],
            },
            StirCtor {
                name: "CBool".into(),
                fields: vec![],
            },
            StirCtor {
                name: "CEq".into(),
                fields: vec![
                    (Name::named("c"), self.code_ty(l)),
                    (Name::named("x"), self.cvar_el(l, 0)),
                    (Name::named("y"), self.cvar_el(l, 1)),
                ],
            },
        ];
        for sig in &self.env.inductives {
            if sig.level.0 != l {
                continue;
            }
            let mut fields = Vec::new();
            let mut ctx_types: Vec<Term> = Vec::new();
            for (pn, pty) in &sig.params {
                let f = self.el_form(&ctx_types, ctx_types.len(), pty)?;
                fields.push((pn.clone(), f));
                ctx_types.push(pty.clone());
            }
            ctors.push(StirCtor {
                name: format!("C{}", sig.name).into(),
                fields,
            });
        }
        p.inductives.push(StirInductive {
            name: ModelNames::code(l).into(),
            level: Level(l + 1),
            params: vec![],
            ctors,
        });
        p.inductives.push(StirInductive {
            name: ModelNames::geq(l).into(),
            level: Level(l),
            params: vec![
                (Name::named("c"), self.code_ty(l)),
                (Name::named("x"), self.cvar_el(l, 0)),
                (Name::named("y"), self.cvar_el(l, 1)),
            ],
            ctors: vec![StirCtor {
                name: "GRefl".into(),
                fields: vec![(Name::named("z"), self.cvar_el(l, 2))],
            }],
        });
        let mut uctors = vec![
            StirCtor {
                name: "UUnk".into(),
                fields: vec![],
            },
            StirCtor {
                name: "UErr".into(),
                fields: vec![],
            },
            StirCtor {
                name: "UBool".into(),
                fields: vec![(
                    Name::named("b"),
                    StirTerm::IndType {
                        ind: ModelNames::gbool(l).into(),
                        args: vec![],
                    },
                )],
            },
            StirCtor {
                name: "UFun".into(),
                fields: vec![(
                    Name::named("f"),
                    StirTerm::Pi(
                        Name(None),
                        StirTerm::IndType {
                            ind: "Unit".into(),
                            args: vec![],
                        }
                        .rc(),
                        StirTerm::IndType {
                            ind: ModelNames::gunk(l).into(),
                            args: vec![],
                        }
                        .rc(),
                    ),
                )],
            },
        ];
        if l > 0 {
            uctors.push(StirCtor {
                name: "UCode".into(),
                fields: vec![(Name::named("c"), self.code_ty(l - 1))],
            });
        }
        let top_cunk = StirTerm::app(
            self.cc(&ModelNames::top(l)),
            self.ctor(ModelNames::code(l), C_UNK, vec![]),
        );
        uctors.push(StirCtor {
            name: "UEq".into(),
            fields: vec![(
                Name::named("e"),
                StirTerm::IndType {
                    ind: ModelNames::geq(l).into(),
                    args: vec![
                        self.ctor(ModelNames::code(l), C_UNK, vec![]),
                        top_cunk.clone(),
                        top_cunk,
                    ],
                },
            )],
        });
        for sig in &self.env.inductives {
            if sig.level.0 != l {
                continue;
            }
            let germ = crate::germ::germ(
                self.env,
                &crate::term::TypeTag::Ind(sig.name.clone()),
                Level(l),
            )
            .ok_or_else(|| TransError::Unsupported("missing inductive germ".into()))?;
            let cx = TransCx {
                env: self.env,
                gen: self,
                ctx_types: vec![],
                depth: 0,
            };
            let code = translate_in(&cx, &germ)?;
            uctors.push(StirCtor {
                name: format!("U{}", sig.name).into(),
                fields: vec![(Name::named("v"), self.el(l, code))],
            });
        }
        p.inductives.push(StirInductive {
            name: ModelNames::gunk(l).into(),
            level: Level(l),
            params: vec![],
            ctors: uctors,
        });
        Ok(())
    }

    /// The gradual datatype for a program inductive: the same constructors
    /// plus unknown and error constructors.
    fn gen_gc(&self, p: &mut Prelude, sig: &InductiveSig) -> Result<(), TransError> {
        let mut params = Vec::new();
        let mut ctx_types: Vec<Term> = Vec::new();
        for (pn, pty) in &sig.params {
            params.push((pn.clone(), self.el_form(&ctx_types, ctx_types.len(), pty)?));
            ctx_types.push(pty.clone());
        }
        let mut ctors = Vec::new();
        for cs in &sig.ctors {
            let mut fields = Vec::new();
            let mut fctx = ctx_types.clone();
            for (fname, fty) in &cs.fields {
                fields.push((fname.clone(), self.el_form(&fctx, fctx.len(), fty)?));
                fctx.push(fty.clone());
            }
            ctors.push(StirCtor {
                name: cs.name.clone(),
                fields,
            });
        }
        ctors.push(StirCtor {
            name: format!("{}Unk", sig.name).into(),
            fields: vec![],
        });
        ctors.push(StirCtor {
            name: format!("{}Err", sig.name).into(),
            fields: vec![],
        });
        p.inductives.push(StirInductive {
            name: ModelNames::gind(&sig.name).into(),
            level: sig.level,
            params,
            ctors,
        });
        Ok(())
    }

    fn cpat(&self, l: u32, ctor: usize, n_fields: usize) -> Pat {
        Pat::Ctor {
            ind: ModelNames::code(l).into(),
            ctor,
            args: (0..n_fields)
                .map(|i| Pat::Var(Name::named(format!("a{i}"))))
                .collect(),
        }
    }

    fn cind_pat(&self, l: u32, ind: &str, n_fields: usize) -> Pat {
        Pat::Ctor {
            ind: ModelNames::code(l).into(),
            ctor: self.cind_index(l, ind).expect("cind index"),
            args: (0..n_fields)
                .map(|i| Pat::Var(Name::named(format!("p{i}"))))
                .collect(),
        }
    }

    fn gc_pat(&self, ind: &InductiveSig, ctor: usize, n_fields: usize) -> Pat {
        Pat::Ctor {
            ind: ModelNames::gind(&ind.name).into(),
            ctor,
            args: (0..n_fields)
                .map(|i| Pat::Var(Name::named(format!("f{i}"))))
                .collect(),
        }
    }

    fn gen_el(&self, p: &mut Prelude, l: u32) -> Result<(), TransError> {
        let mut clauses = vec![
            Clause {
                pats: vec![self.cpat(l, C_UNK, 0)],
                guard: None,
                rhs: StirTerm::IndType {
                    ind: ModelNames::gunk(l).into(),
                    args: vec![],
                },
            },
            Clause {
                pats: vec![self.cpat(l, C_ERR, 0)],
                guard: None,
                rhs: StirTerm::IndType {
                    ind: ModelNames::gerr(l).into(),
                    args: vec![],
                },
            },
        ];
        if l > 0 {
            clauses.push(Clause {
                pats: vec![self.cpat(l, C_TYPE, 0)],
                guard: None,
                rhs: self.code_ty(l - 1),
            });
        }
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_PI, 2)],
            guard: None,
            rhs: StirTerm::Pi(
                Name::named("x"),
                self.cvar_el(l, 1).rc(),
                self.el(l, StirTerm::app(StirTerm::Var(1), StirTerm::Var(0)))
                    .rc(),
            ),
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_BOOL, 0)],
            guard: None,
            rhs: StirTerm::IndType {
                ind: ModelNames::gbool(l).into(),
                args: vec![],
            },
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_EQ, 3)],
            guard: None,
            rhs: StirTerm::IndType {
                ind: ModelNames::geq(l).into(),
                args: vec![StirTerm::Var(2), StirTerm::Var(1), StirTerm::Var(0)],
            },
        });
        for sig in &self.env.inductives {
            if sig.level.0 != l {
                continue;
            }
            let np = sig.params.len();
            clauses.push(Clause {
                pats: vec![self.cind_pat(l, &sig.name, np)],
                guard: None,
                rhs: StirTerm::IndType {
                    ind: ModelNames::gind(&sig.name).into(),
                    args: (0..np).map(|i| StirTerm::Var(np - 1 - i)).collect(),
                },
            });
        }
        p.defs.push(StirDef {
            name: ModelNames::el(l).into(),
            ty: StirTerm::Pi(
                Name::named("c"),
                self.code_ty(l).rc(),
                StirTerm::Sort(Level(l)).rc(),
            ),
            arity: 1,
            clauses,
            rec_args: vec![0],
            trusted_termination: false,
        });
        Ok(())
    }

    fn gen_top_bot(&self, p: &mut Prelude, l: u32, is_top: bool) -> Result<(), TransError> {
        let name = if is_top {
            ModelNames::top(l)
        } else {
            ModelNames::bot(l)
        };
        let myself = self.cc(&name);
        let mut clauses = Vec::new();
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_UNK, 0)],
            guard: None,
            rhs: self.ctor(
                ModelNames::gunk(l),
                if is_top { U_UNK } else { U_ERR },
                vec![],
            ),
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_ERR, 0)],
            guard: None,
            rhs: self.ctor(ModelNames::gerr(l), 0, vec![]),
        });
        if l > 0 {
            clauses.push(Clause {
                pats: vec![self.cpat(l, C_TYPE, 0)],
                guard: None,
                rhs: self.ctor(
                    ModelNames::code(l - 1),
                    if is_top { C_UNK } else { C_ERR },
                    vec![],
                ),
            });
        }
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_PI, 2)],
            guard: None,
            rhs: StirTerm::Lam(
                Name::named("x"),
                None,
                StirTerm::app(
                    shift(&myself, 1),
                    StirTerm::app(StirTerm::Var(1), StirTerm::Var(0)),
                )
                .rc(),
            ),
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_BOOL, 0)],
            guard: None,
            rhs: self.ctor(ModelNames::gbool(l), if is_top { B_UNK } else { B_ERR }, vec![]),
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_EQ, 3)],
            guard: None,
            rhs: {
                let (c, x, y) = (StirTerm::Var(2), StirTerm::Var(1), StirTerm::Var(0));
                let ev = if is_top {
                    StirTerm::apps(
                        self.cc(&ModelNames::comp(l)),
                        [c.clone(), x.clone(), y.clone()],
                    )
                } else {
                    StirTerm::app(self.cc(&ModelNames::bot(l)), c.clone())
                };
                self.ctor(ModelNames::geq(l), 0, vec![c, x, y, ev])
            },
        });
        for sig in &self.env.inductives {
            if sig.level.0 != l {
                continue;
            }
            let np = sig.params.len();
            let unk_ix = sig.ctors.len();
            let err_ix = sig.ctors.len() + 1;
            clauses.push(Clause {
                pats: vec![self.cind_pat(l, &sig.name, np)],
                guard: None,
                rhs: self.ctor(
                    ModelNames::gind(&sig.name),
                    if is_top { unk_ix } else { err_ix },
                    (0..np).map(|i| StirTerm::Var(np - 1 - i)).collect(),
                ),
            });
        }
        p.defs.push(StirDef {
            name: name.into(),
            ty: StirTerm::Pi(
                Name::named("c"),
                self.code_ty(l).rc(),
                self.cvar_el(l, 0).rc(),
            ),
            arity: 1,
            clauses,
            rec_args: vec![0],
            trusted_termination: false,
        });
        Ok(())
    }

    fn gen_isbot(&self, p: &mut Prelude, l: u32) -> Result<(), TransError> {
        let name = ModelNames::isbot(l);
        let myself = self.cc(&name);
        let mut clauses = Vec::new();
        clauses.push(Clause {
            pats: vec![
                self.cpat(l, C_UNK, 0),
                Pat::Ctor {
                    ind: ModelNames::gunk(l).into(),
                    ctor: U_ERR,
                    args: vec![],
                },
            ],
            guard: None,
            rhs: self.strue(),
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_UNK, 0), Pat::Var(Name::named("x"))],
            guard: None,
            rhs: self.sfalse(),
        });
        // Every element of GErr is the error.
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_ERR, 0), Pat::Var(Name::named("x"))],
            guard: None,
            rhs: self.strue(),
        });
        if l > 0 {
            clauses.push(Clause {
                pats: vec![
                    self.cpat(l, C_TYPE, 0),
                    Pat::Ctor {
                        ind: ModelNames::code(l - 1).into(),
                        ctor: C_ERR,
                        args: vec![],
                    },
                ],
                guard: None,
                rhs: self.strue(),
            });
            clauses.push(Clause {
                pats: vec![self.cpat(l, C_TYPE, 0), Pat::Var(Name::named("c"))],
                guard: None,
                rhs: self.sfalse(),
            });
        }
        // A function is bottom iff its value at top is.
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_PI, 2), Pat::Var(Name::named("f"))],
            guard: None,
            rhs: {
                let dom = StirTerm::Var(2);
                let cod = StirTerm::Var(1);
                let f = StirTerm::Var(0);
                let top_dom = StirTerm::app(self.cc(&ModelNames::top(l)), dom);
                StirTerm::apps(
                    myself.clone(),
                    [
                        StirTerm::app(cod, top_dom.clone()),
                        StirTerm::app(f, top_dom),
                    ],
                )
            },
        });
        clauses.push(Clause {
            pats: vec![
                self.cpat(l, C_BOOL, 0),
                Pat::Ctor {
                    ind: ModelNames::gbool(l).into(),
                    ctor: B_ERR,
                    args: vec![],
                },
            ],
            guard: None,
            rhs: self.strue(),
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_BOOL, 0), Pat::Var(Name::named("b"))],
            guard: None,
            rhs: self.sfalse(),
        });
        clauses.push(Clause {
            pats: vec![
                self.cpat(l, C_EQ, 3),
                Pat::Ctor {
                    ind: ModelNames::geq(l).into(),
                    ctor: 0,
                    args: vec![Pat::Var(Name::named("z"))],
                },
            ],
            guard: None,
            rhs: StirTerm::apps(myself.clone(), [StirTerm::Var(3), StirTerm::Var(0)]),
        });
        for sig in &self.env.inductives {
            if sig.level.0 != l {
                continue;
            }
            let np = sig.params.len();
            for (ci, cs) in sig.ctors.iter().enumerate() {
                let nf = cs.fields.len();
                let mut rhs = self.sfalse();
                for (k, (_, fty)) in cs.fields.iter().enumerate().rev() {
                    let ctx_types: Vec<Term> = sig
                        .params
                        .iter()
                        .map(|(_, t)| t.clone())
                        .chain(cs.fields[..k].iter().map(|(_, t)| t.clone()))
                        .collect();
                    let cx = TransCx {
                        env: self.env,
                        gen: self,
                        ctx_types: ctx_types.clone(),
                        depth: 0,
                    };
                    let code = translate_in(&cx, fty)?;
                    let code = remap_free(&code, &|vk: usize| {
                        if vk < k {
                            nf - 1 - (k - 1 - vk)
                        } else {
                            let pj = np - 1 - (vk - k);
                            nf + (np - 1 - pj)
                        }
                    });
                    let lvl = self.kernel_level(&ctx_types, fty).unwrap_or(l);
                    let call = StirTerm::apps(
                        self.cc(&ModelNames::isbot(lvl)),
                        [code, StirTerm::Var(nf - 1 - k)],
                    );
                    rhs = StirTerm::apps(self.cc("or"), [call, rhs]);
                }
                clauses.push(Clause {
                    pats: vec![self.cind_pat(l, &sig.name, np), self.gc_pat(sig, ci, nf)],
                    guard: None,
                    rhs,
                });
            }
            clauses.push(Clause {
                pats: vec![
                    self.cind_pat(l, &sig.name, np),
                    self.gc_pat(sig, sig.ctors.len(), 0),
                ],
                guard: None,
                rhs: self.sfalse(),
            });
            clauses.push(Clause {
                pats: vec![
                    self.cind_pat(l, &sig.name, np),
                    self.gc_pat(sig, sig.ctors.len() + 1, 0),
                ],
                guard: None,
                rhs: self.strue(),
            });
        }
        clauses.push(Clause {
            pats: vec![Pat::Var(Name::named("c")), Pat::Var(Name::named("x"))],
            guard: None,
            rhs: self.sfalse(),
        });
        p.defs.push(StirDef {
            name: name.into(),
            ty: StirTerm::Pi(
                Name::named("c"),
                self.code_ty(l).rc(),
                StirTerm::Pi(Name(None), self.cvar_el(l, 0).rc(), self.sbool().rc()).rc(),
            ),
            arity: 2,
            clauses,
            rec_args: vec![0, 1],
            trusted_termination: false,
        });
        Ok(())
    }

    fn gen_gif(&self, p: &mut Prelude, l: u32) -> Result<(), TransError> {
        let gb = |c: usize| Pat::Ctor {
            ind: ModelNames::gbool(0).into(),
            ctor: c,
            args: vec![],
        };
        let cvar = Pat::Var(Name::named("c"));
        let t = Pat::Var(Name::named("t"));
        let e = Pat::Var(Name::named("e"));
        let clauses = vec![
            Clause {
                pats: vec![cvar.clone(), gb(B_TRUE), t.clone(), e.clone()],
                guard: None,
                rhs: StirTerm::Var(1),
            },
            Clause {
                pats: vec![cvar.clone(), gb(B_FALSE), t.clone(), e.clone()],
                guard: None,
                rhs: StirTerm::Var(0),
            },
            Clause {
                pats: vec![cvar.clone(), gb(B_UNK), t.clone(), e.clone()],
                guard: None,
                rhs: StirTerm::app(self.cc(&ModelNames::top(l)), StirTerm::Var(2)),
            },
            Clause {
                pats: vec![cvar, gb(B_ERR), t, e],
                guard: None,
                rhs: StirTerm::app(self.cc(&ModelNames::bot(l)), StirTerm::Var(2)),
            },
        ];
        p.defs.push(StirDef {
            name: ModelNames::gif(l).into(),
            ty: StirTerm::Pi(
                Name::named("c"),
                self.code_ty(l).rc(),
                StirTerm::Pi(
                    Name(None),
                    StirTerm::IndType {
                        ind: ModelNames::gbool(0).into(),
                        args: vec![],
                    }
                    .rc(),
                    StirTerm::Pi(
                        Name(None),
                        self.cvar_el(l, 1).rc(),
                        StirTerm::Pi(
                            Name(None),
                            self.cvar_el(l, 2).rc(),
                            self.cvar_el(l, 3).rc(),
                        )
                        .rc(),
                    )
                    .rc(),
                )
                .rc(),
            ),
            arity: 4,
            clauses,
            rec_args: vec![],
            trusted_termination: false,
        });
        Ok(())
    }

    fn gen_gsubst(&self, p: &mut Prelude, l: u32, l2: u32) -> Result<(), TransError> {
        let el2 = |t: StirTerm| StirTerm::app(self.cc(&ModelNames::el(l2)), t);
        let ty = StirTerm::Pi(
            Name::named("c"),
            self.code_ty(l).rc(),
            StirTerm::Pi(
                Name::named("P"),
                StirTerm::Pi(Name(None), self.cvar_el(l, 0).rc(), self.code_ty(l2).rc()).rc(),
                StirTerm::Pi(
                    Name::named("x"),
                    self.cvar_el(l, 1).rc(),
                    StirTerm::Pi(
                        Name::named("y"),
                        self.cvar_el(l, 2).rc(),
                        StirTerm::Pi(
                            Name(None),
                            el2(StirTerm::app(StirTerm::Var(2), StirTerm::Var(1))).rc(),
                            StirTerm::Pi(
                                Name(None),
                                StirTerm::IndType {
                                    ind: ModelNames::geq(l).into(),
                                    args: vec![
                                        StirTerm::Var(4),
                                        StirTerm::Var(2),
                                        StirTerm::Var(1),
                                    ],
                                }
                                .rc(),
                                el2(StirTerm::app(StirTerm::Var(4), StirTerm::Var(2))).rc(),
                            )
                            .rc(),
                        )
                        .rc(),
                    )
                    .rc(),
                )
                .rc(),
            )
            .rc(),
        );
        let pats = vec![
            Pat::Var(Name::named("c")),
            Pat::Var(Name::named("P")),
            Pat::Var(Name::named("x")),
            Pat::Var(Name::named("y")),
            Pat::Var(Name::named("px")),
            Pat::Ctor {
                ind: ModelNames::geq(l).into(),
                ctor: 0,
                args: vec![Pat::Var(Name::named("z"))],
            },
        ];
        let c = || StirTerm::Var(5);
        let pm = || StirTerm::Var(4);
        let x = || StirTerm::Var(3);
        let y = || StirTerm::Var(2);
        let px = || StirTerm::Var(1);
        let z = || StirTerm::Var(0);
        let clauses = vec![
            Clause {
                pats: pats.clone(),
                guard: Some(StirTerm::apps(
                    self.cc(&ModelNames::isbot(l)),
                    [c(), z()],
                )),
                rhs: StirTerm::app(self.cc(&ModelNames::bot(l2)), StirTerm::app(pm(), y())),
            },
            Clause {
                pats,
                guard: None,
                rhs: StirTerm::apps(
                    self.cc(&ModelNames::cast(l2)),
                    [
                        StirTerm::app(pm(), z()),
                        StirTerm::app(pm(), y()),
                        StirTerm::apps(
                            self.cc(&ModelNames::cast(l2)),
                            [StirTerm::app(pm(), x()), StirTerm::app(pm(), z()), px()],
                        ),
                    ],
                ),
            },
        ];
        p.defs.push(StirDef {
            name: ModelNames::gsubst(l, l2).into(),
            ty,
            arity: 6,
            clauses,
            rec_args: vec![],
            trusted_termination: false,
        });
        Ok(())
    }

    fn gen_cast(&self, p: &mut Prelude, l: u32) -> Result<(), TransError> {
        let name = ModelNames::cast(l);
        let myself = || self.cc(&name);
        let comp = || self.cc(&ModelNames::comp(l));
        let topf = || self.cc(&ModelNames::top(l));
        let botf = || self.cc(&ModelNames::bot(l));
        let code = |c: usize, args: Vec<StirTerm>| self.ctor(ModelNames::code(l), c, args);
        let v = |n: &str| Pat::Var(Name::named(n));
        let mut clauses: Vec<Clause> = Vec::new();
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_ERR, 0), v("c2"), v("x")],
            guard: None,
            rhs: StirTerm::app(botf(), StirTerm::Var(1)),
        });
        clauses.push(Clause {
            pats: vec![v("c1"), self.cpat(l, C_ERR, 0), v("x")],
            guard: None,
            rhs: self.ctor(ModelNames::gerr(l), 0, vec![]),
        });
        clauses.push(Clause {
            pats: vec![v("c1"), v("c2"), v("x")],
            guard: Some(StirTerm::apps(
                self.cc(&ModelNames::isbot(l)),
                [StirTerm::Var(2), StirTerm::Var(0)],
            )),
            rhs: StirTerm::app(botf(), StirTerm::Var(1)),
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_UNK, 0), self.cpat(l, C_UNK, 0), v("d")],
            guard: None,
            rhs: StirTerm::Var(0),
        });
        // ?Π: functions approximate through their image on top.
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_PI, 2), self.cpat(l, C_UNK, 0), v("f")],
            guard: None,
            rhs: {
                let dom = StirTerm::Var(2);
                let cod = StirTerm::Var(1);
                let f = StirTerm::Var(0);
                let top_dom = StirTerm::app(topf(), dom);
                self.ctor(
                    ModelNames::gunk(l),
                    U_FUN,
                    vec![StirTerm::Lam(
                Name::named("u"),
                None,
                        StirTerm::apps(
                            shift(&myself(), 1),
                            [
                                StirTerm::app(shift(&cod, 1), shift(&top_dom, 1)),
                                code(C_UNK, vec![]),
                                StirTerm::app(shift(&f, 1), shift(&top_dom, 1)),
                            ],
                        )
                        .rc(),
                    )],
                )
            },
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_BOOL, 0), self.cpat(l, C_UNK, 0), v("b")],
            guard: None,
            rhs: self.ctor(ModelNames::gunk(l), U_BOOL, vec![StirTerm::Var(0)]),
        });
        if l > 0 {
            clauses.push(Clause {
                pats: vec![self.cpat(l, C_TYPE, 0), self.cpat(l, C_UNK, 0), v("c")],
                guard: None,
                rhs: self.ctor(ModelNames::gunk(l), U_CODE, vec![StirTerm::Var(0)]),
            });
        }
        // To? for equality: inline the germ cast on the refl payload.
        clauses.push(Clause {
            pats: vec![
                self.cpat(l, C_EQ, 3),
                self.cpat(l, C_UNK, 0),
                Pat::Ctor {
                    ind: ModelNames::geq(l).into(),
                    ctor: 0,
                    args: vec![v("z")],
                },
            ],
            guard: None,
            rhs: {
                let c = StirTerm::Var(3);
                let z = StirTerm::Var(0);
                let cunk = code(C_UNK, vec![]);
                let topu = StirTerm::app(topf(), cunk.clone());
                let cast_z = StirTerm::apps(myself(), [c, cunk.clone(), z]);
                let ev = StirTerm::apps(
                    comp(),
                    [
                        cunk.clone(),
                        topu.clone(),
                        StirTerm::apps(comp(), [cunk.clone(), topu.clone(), cast_z]),
                    ],
                );
                self.ctor(
                    ModelNames::gunk(l),
                    self.u_eq_index(l),
                    vec![self.ctor(ModelNames::geq(l), 0, vec![cunk, topu.clone(), topu, ev])],
                )
            },
        });
        clauses.push(Clause {
            pats: vec![
                self.cpat(l, C_UNK, 0),
                self.cpat(l, C_PI, 2),
                Pat::Ctor {
                    ind: ModelNames::gunk(l).into(),
                    ctor: U_FUN,
                    args: vec![v("f")],
                },
            ],
            guard: None,
            rhs: StirTerm::Lam(
                Name::named("x"),
                None,
                StirTerm::apps(
                    shift(&myself(), 1),
                    [
                        code(C_UNK, vec![]),
                        StirTerm::app(StirTerm::Var(2), StirTerm::Var(0)),
                        StirTerm::app(StirTerm::Var(1), self.ctor("Unit".into(), 0, vec![])),
                    ],
                )
                .rc(),
            ),
        });
        clauses.push(Clause {
            pats: vec![
                self.cpat(l, C_UNK, 0),
                self.cpat(l, C_BOOL, 0),
                Pat::Ctor {
                    ind: ModelNames::gunk(l).into(),
                    ctor: U_BOOL,
                    args: vec![v("b")],
                },
            ],
            guard: None,
            rhs: StirTerm::Var(0),
        });
        if l > 0 {
            clauses.push(Clause {
                pats: vec![
                    self.cpat(l, C_UNK, 0),
                    self.cpat(l, C_TYPE, 0),
                    Pat::Ctor {
                        ind: ModelNames::gunk(l).into(),
                        ctor: U_CODE,
                        args: vec![v("c")],
                    },
                ],
                guard: None,
                rhs: StirTerm::Var(0),
            });
        }
        clauses.push(Clause {
            pats: vec![
                self.cpat(l, C_UNK, 0),
                self.cpat(l, C_EQ, 3),
                Pat::Ctor {
                    ind: ModelNames::gunk(l).into(),
                    ctor: self.u_eq_index(l),
                    args: vec![Pat::Ctor {
                        ind: ModelNames::geq(l).into(),
                        ctor: 0,
                        args: vec![v("z")],
                    }],
                },
            ],
            guard: None,
            rhs: {
                let c = || StirTerm::Var(3);
                let x = StirTerm::Var(2);
                let y = StirTerm::Var(1);
                let z = StirTerm::Var(0);
                let cast_z = StirTerm::apps(myself(), [code(C_UNK, vec![]), c(), z]);
                let ev = StirTerm::apps(
                    comp(),
                    [
                        c(),
                        x.clone(),
                        StirTerm::apps(comp(), [c(), y.clone(), cast_z]),
                    ],
                );
                self.ctor(ModelNames::geq(l), 0, vec![c(), x, y, ev])
            },
        });
        clauses.push(Clause {
            pats: vec![
                self.cpat(l, C_UNK, 0),
                v("c2"),
                Pat::Ctor {
                    ind: ModelNames::gunk(l).into(),
                    ctor: U_UNK,
                    args: vec![],
                },
            ],
            guard: None,
            rhs: StirTerm::app(topf(), StirTerm::Var(0)),
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_PI, 2), self.cpat(l, C_PI, 2), v("f")],
            guard: None,
            rhs: {
                // binders under the lambda: d1=5 c1=4 d2=3 c2=2 f=1 x=0
                let xcast = StirTerm::apps(
                    shift(&myself(), 1),
                    [StirTerm::Var(3), StirTerm::Var(5), StirTerm::Var(0)],
                );
                StirTerm::Lam(
                    Name::named("x"),
                    None,
                    StirTerm::apps(
                        shift(&myself(), 1),
                        [
                            StirTerm::app(StirTerm::Var(4), xcast.clone()),
                            StirTerm::app(StirTerm::Var(2), StirTerm::Var(0)),
                            StirTerm::app(StirTerm::Var(1), xcast),
                        ],
                    )
                    .rc(),
                )
            },
        });
        clauses.push(Clause {
            pats: vec![
                self.cpat(l, C_EQ, 3),
                self.cpat(l, C_EQ, 3),
                Pat::Ctor {
                    ind: ModelNames::geq(l).into(),
                    ctor: 0,
                    args: vec![v("z")],
                },
            ],
            guard: None,
            rhs: {
                let c = StirTerm::Var(6);
                let c2 = || StirTerm::Var(3);
                let x2 = StirTerm::Var(2);
                let y2 = StirTerm::Var(1);
                let z = StirTerm::Var(0);
                let cast_z = StirTerm::apps(myself(), [c, c2(), z]);
                let ev = StirTerm::apps(
                    comp(),
                    [
                        c2(),
                        x2.clone(),
                        StirTerm::apps(comp(), [c2(), y2.clone(), cast_z]),
                    ],
                );
                self.ctor(ModelNames::geq(l), 0, vec![c2(), x2, y2, ev])
            },
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_TYPE, 0), self.cpat(l, C_TYPE, 0), v("c")],
            guard: None,
            rhs: StirTerm::Var(0),
        });
        clauses.push(Clause {
            pats: vec![self.cpat(l, C_BOOL, 0), self.cpat(l, C_BOOL, 0), v("b")],
            guard: None,
            rhs: StirTerm::Var(0),
        });
        for sig in &self.env.inductives {
            if sig.level.0 != l {
                continue;
            }
            let np = sig.params.len();
            let uind = self.uind_index(l, &sig.name).expect("uind");
            let cind = self.cind_index(l, &sig.name).expect("cind");
            let germ = crate::germ::germ(
                self.env,
                &crate::term::TypeTag::Ind(sig.name.clone()),
                Level(l),
            )
            .unwrap();
            let cx = TransCx {
                env: self.env,
                gen: self,
                ctx_types: vec![],
                depth: 0,
            };
            let germ_code = translate_in(&cx, &germ)?;
            // To?: cast (CInd p̄) CUnk v = UInd (cast (CInd p̄) germ v)
            clauses.push(Clause {
                pats: vec![
                    self.cind_pat(l, &sig.name, np),
                    self.cpat(l, C_UNK, 0),
                    v("x"),
                ],
                guard: None,
                rhs: {
                    let src = self.ctor(
                        ModelNames::code(l),
                        cind,
                        (0..np).map(|i| StirTerm::Var(np - i)).collect(),
                    );
                    self.ctor(
                        ModelNames::gunk(l),
                        uind,
                        vec![StirTerm::apps(
                            myself(),
                            [src, shift(&germ_code, (np + 1) as isize), StirTerm::Var(0)],
                        )],
                    )
                },
            });
            // From?: cast CUnk (CInd p̄) (UInd v) = cast germ (CInd p̄) v
            clauses.push(Clause {
                pats: vec![
                    self.cpat(l, C_UNK, 0),
                    self.cind_pat(l, &sig.name, np),
                    Pat::Ctor {
                        ind: ModelNames::gunk(l).into(),
                        ctor: uind,
                        args: vec![v("x")],
                    },
                ],
                guard: None,
                rhs: {
                    let dst = self.ctor(
                        ModelNames::code(l),
                        cind,
                        (0..np).map(|i| StirTerm::Var(np - i)).collect(),
                    );
                    StirTerm::apps(
                        myself(),
                        [shift(&germ_code, (np + 1) as isize), dst, StirTerm::Var(0)],
                    )
                },
            });
            // Ctor: cast (CInd p̄1) (CInd p̄2) (D f̄) = D p̄2 (cast fields).
            for (ci, cs) in sig.ctors.iter().enumerate() {
                let nf = cs.fields.len();
                // binders: p̄1 (np), p̄2 (np), f̄ (nf)
                let fvar = |k: usize| StirTerm::Var(nf - 1 - k);
                let mut new_fields: Vec<StirTerm> = Vec::new();
                for k in 0..nf {
                    let ctx_types: Vec<Term> = sig
                        .params
                        .iter()
                        .map(|(_, t)| t.clone())
                        .chain(cs.fields[..k].iter().map(|(_, t)| t.clone()))
                        .collect();
                    let cx = TransCx {
                        env: self.env,
                        gen: self,
                        ctx_types: ctx_types.clone(),
                        depth: 0,
                    };
                    let fty_code = translate_in(&cx, &cs.fields[k].1)?;
                    let lvl = self.kernel_level(&ctx_types, &cs.fields[k].1).unwrap_or(l);
                    let src_code = remap_free(&fty_code, &|vk: usize| {
                        if vk < k {
                            nf - 1 - (k - 1 - vk)
                        } else {
                            let pj = np - 1 - (vk - k);
                            nf + np + (np - 1 - pj)
                        }
                    });
                    let dst_tpl = remap_free(&fty_code, &|vk: usize| {
                        if vk < k {
                            vk
                        } else {
                            let pj = np - 1 - (vk - k);
                            nf + (np - 1 - pj) + k
                        }
                    });
                    let dst_code = plug_lowest(&dst_tpl, k, &new_fields);
                    let casted = StirTerm::apps(
                        self.cc(&ModelNames::cast(lvl)),
                        [src_code, dst_code, fvar(k)],
                    );
                    new_fields.push(casted);
                }
                let mut args: Vec<StirTerm> =
                    (0..np).map(|j| StirTerm::Var(nf + (np - 1 - j))).collect();
                args.extend(new_fields);
                clauses.push(Clause {
                    pats: vec![
                        self.cind_pat(l, &sig.name, np),
                        self.cind_pat(l, &sig.name, np),
                        self.gc_pat(sig, ci, nf),
                    ],
                    guard: None,
                    rhs: self.ctor(ModelNames::gind(&sig.name), ci, args),
                });
            }
            // The unknown constructor re-parameterizes.
            clauses.push(Clause {
                pats: vec![
                    self.cind_pat(l, &sig.name, np),
                    self.cind_pat(l, &sig.name, np),
                    self.gc_pat(sig, sig.ctors.len(), 0),
                ],
                guard: None,
                rhs: self.ctor(
                    ModelNames::gind(&sig.name),
                    sig.ctors.len(),
                    (0..np).map(|j| StirTerm::Var(np - 1 - j)).collect(),
                ),
            });
        }
        clauses.push(Clause {
            pats: vec![v("c1"), v("c2"), v("x")],
            guard: None,
            rhs: StirTerm::app(botf(), StirTerm::Var(1)),
        });
        p.defs.push(StirDef {
            name: name.into(),
            ty: StirTerm::Pi(
                Name::named("c1"),
                self.code_ty(l).rc(),
                StirTerm::Pi(
                    Name::named("c2"),
                    self.code_ty(l).rc(),
                    StirTerm::Pi(Name(None), self.cvar_el(l, 1).rc(), self.cvar_el(l, 1).rc())
                        .rc(),
                )
                .rc(),
            ),
            arity: 3,
            clauses,
            rec_args: vec![0, 2],
            trusted_termination: true,
        });
        Ok(())
    }

    fn gen_comp(&self, p: &mut Prelude, l: u32) -> Result<(), TransError> {
        let name = ModelNames::comp(l);
        let myself = || self.cc(&name);
        let botf = || self.cc(&ModelNames::bot(l));
        let v = |n: &str| Pat::Var(Name::named(n));
        let gu = |c: usize, args: Vec<Pat>| Pat::Ctor {
            ind: ModelNames::gunk(l).into(),
            ctor: c,
            args,
        };
        let gb = |c: usize| Pat::Ctor {
            ind: ModelNames::gbool(l).into(),
            ctor: c,
            args: vec![],
        };
        let code_pat = |c: usize, n: usize| self.cpat(l, c, n);
        let code_ctor = |c: usize, args: Vec<StirTerm>| self.ctor(ModelNames::code(l), c, args);
        let mut clauses: Vec<Clause> = Vec::new();

        // At CBool.
        clauses.push(Clause {
            pats: vec![code_pat(C_BOOL, 0), gb(B_UNK), v("y")],
            guard: None,
            rhs: StirTerm::Var(0),
        });
        clauses.push(Clause {
            pats: vec![code_pat(C_BOOL, 0), v("x"), gb(B_UNK)],
            guard: None,
            rhs: StirTerm::Var(0),
        });
        clauses.push(Clause {
            pats: vec![code_pat(C_BOOL, 0), gb(B_ERR), v("y")],
            guard: None,
            rhs: self.ctor(ModelNames::gbool(l), B_ERR, vec![]),
        });
        clauses.push(Clause {
            pats: vec![code_pat(C_BOOL, 0), v("x"), gb(B_ERR)],
            guard: None,
            rhs: self.ctor(ModelNames::gbool(l), B_ERR, vec![]),
        });
        clauses.push(Clause {
            pats: vec![code_pat(C_BOOL, 0), gb(B_TRUE), gb(B_TRUE)],
            guard: None,
            rhs: self.ctor(ModelNames::gbool(l), B_TRUE, vec![]),
        });
        clauses.push(Clause {
            pats: vec![code_pat(C_BOOL, 0), gb(B_FALSE), gb(B_FALSE)],
            guard: None,
            rhs: self.ctor(ModelNames::gbool(l), B_FALSE, vec![]),
        });
        clauses.push(Clause {
            pats: vec![code_pat(C_BOOL, 0), v("x"), v("y")],
            guard: None,
            rhs: self.ctor(ModelNames::gbool(l), B_ERR, vec![]),
        });

        // At CUnk.
        clauses.push(Clause {
            pats: vec![code_pat(C_UNK, 0), gu(U_UNK, vec![]), v("y")],
            guard: None,
            rhs: StirTerm::Var(0),
        });
        clauses.push(Clause {
            pats: vec![code_pat(C_UNK, 0), v("x"), gu(U_UNK, vec![])],
            guard: None,
            rhs: StirTerm::Var(0),
        });
        clauses.push(Clause {
            pats: vec![code_pat(C_UNK, 0), gu(U_ERR, vec![]), v("y")],
            guard: None,
            rhs: self.ctor(ModelNames::gunk(l), U_ERR, vec![]),
        });
        clauses.push(Clause {
            pats: vec![code_pat(C_UNK, 0), v("x"), gu(U_ERR, vec![])],
            guard: None,
            rhs: self.ctor(ModelNames::gunk(l), U_ERR, vec![]),
        });
        clauses.push(Clause {
            pats: vec![
                code_pat(C_UNK, 0),
                gu(U_BOOL, vec![v("a")]),
                gu(U_BOOL, vec![v("b")]),
            ],
            guard: None,
            rhs: self.ctor(
                ModelNames::gunk(l),
                U_BOOL,
                vec![StirTerm::apps(
                    myself(),
                    [
                        code_ctor(C_BOOL, vec![]),
                        StirTerm::Var(1),
                        StirTerm::Var(0),
                    ],
                )],
            ),
        });
        clauses.push(Clause {
            pats: vec![
                code_pat(C_UNK, 0),
                gu(U_FUN, vec![v("f")]),
                gu(U_FUN, vec![v("g")]),
            ],
            guard: None,
            rhs: self.ctor(
                ModelNames::gunk(l),
                U_FUN,
                vec![StirTerm::Lam(
                Name::named("u"),
                None,
                    StirTerm::apps(
                        shift(&myself(), 1),
                        [
                            code_ctor(C_UNK, vec![]),
                            StirTerm::app(
                                StirTerm::Var(2),
                                self.ctor("Unit".into(), 0, vec![]),
                            ),
                            StirTerm::app(
                                StirTerm::Var(1),
                                self.ctor("Unit".into(), 0, vec![]),
                            ),
                        ],
                    )
                    .rc(),
                )],
            ),
        });
        if l > 0 {
            clauses.push(Clause {
                pats: vec![
                    code_pat(C_UNK, 0),
                    gu(U_CODE, vec![v("a")]),
                    gu(U_CODE, vec![v("b")]),
                ],
                guard: None,
                rhs: self.ctor(
                    ModelNames::gunk(l),
                    U_CODE,
                    vec![StirTerm::apps(
                        myself(),
                        [
                            code_ctor(C_TYPE, vec![]),
                            StirTerm::Var(1),
                            StirTerm::Var(0),
                        ],
                    )],
                ),
            });
        }

        // At CErr.
        clauses.push(Clause {
            pats: vec![code_pat(C_ERR, 0), v("x"), v("y")],
            guard: None,
            rhs: self.ctor(ModelNames::gerr(l), 0, vec![]),
        });

        // At CType (meets of codes, one level down).
        if l > 0 {
            let lm = l - 1;
            let cpatm = |c: usize, n: usize| Pat::Ctor {
                ind: ModelNames::code(lm).into(),
                ctor: c,
                args: (0..n)
                    .map(|i| Pat::Var(Name::named(format!("a{i}"))))
                    .collect(),
            };
            let codem = |c: usize, args: Vec<StirTerm>| self.ctor(ModelNames::code(lm), c, args);
            clauses.push(Clause {
                pats: vec![code_pat(C_TYPE, 0), cpatm(C_UNK, 0), v("y")],
                guard: None,
                rhs: StirTerm::Var(0),
            });
            clauses.push(Clause {
                pats: vec![code_pat(C_TYPE, 0), v("x"), cpatm(C_UNK, 0)],
                guard: None,
                rhs: StirTerm::Var(0),
            });
            clauses.push(Clause {
                pats: vec![code_pat(C_TYPE, 0), cpatm(C_ERR, 0), v("y")],
                guard: None,
                rhs: codem(C_ERR, vec![]),
            });
            clauses.push(Clause {
                pats: vec![code_pat(C_TYPE, 0), v("x"), cpatm(C_ERR, 0)],
                guard: None,
                rhs: codem(C_ERR, vec![]),
            });
            clauses.push(Clause {
                pats: vec![code_pat(C_TYPE, 0), cpatm(C_BOOL, 0), cpatm(C_BOOL, 0)],
                guard: None,
                rhs: codem(C_BOOL, vec![]),
            });
            clauses.push(Clause {
                pats: vec![code_pat(C_TYPE, 0), cpatm(C_TYPE, 0), cpatm(C_TYPE, 0)],
                guard: None,
                rhs: codem(C_TYPE, vec![]),
            });
            clauses.push(Clause {
                pats: vec![code_pat(C_TYPE, 0), cpatm(C_PI, 2), cpatm(C_PI, 2)],
                guard: None,
                rhs: {
                    let d1 = || StirTerm::Var(3);
                    let c1 = || StirTerm::Var(2);
                    let d2 = || StirTerm::Var(1);
                    let c2 = || StirTerm::Var(0);
                    let dm = StirTerm::apps(
                        myself(),
                        [self.ctor(ModelNames::code(l), C_TYPE, vec![]), d1(), d2()],
                    );
                    let castm = self.cc(&ModelNames::cast(lm));
                    let body = {
                        let x = StirTerm::Var(0);
                        let dm1 = shift(&dm, 1);
                        let a1 = StirTerm::apps(
                            shift(&castm, 1),
                            [dm1.clone(), shift(&d1(), 1), x.clone()],
                        );
                        let a2 = StirTerm::apps(shift(&castm, 1), [dm1, shift(&d2(), 1), x]);
                        StirTerm::apps(
                            shift(&myself(), 1),
                            [
                                self.ctor(ModelNames::code(l), C_TYPE, vec![]),
                                StirTerm::app(shift(&c1(), 1), a1),
                                StirTerm::app(shift(&c2(), 1), a2),
                            ],
                        )
                    };
                    codem(C_PI, vec![dm, StirTerm::Lam(Name::named("x"), None, body.rc())])
                },
            });
            clauses.push(Clause {
                pats: vec![code_pat(C_TYPE, 0), cpatm(C_EQ, 3), cpatm(C_EQ, 3)],
                guard: None,
                rhs: {
                    let c = || StirTerm::Var(5);
                    let x = || StirTerm::Var(4);
                    let y = || StirTerm::Var(3);
                    let c2 = || StirTerm::Var(2);
                    let x2 = || StirTerm::Var(1);
                    let y2 = || StirTerm::Var(0);
                    let cm = StirTerm::apps(
                        myself(),
                        [self.ctor(ModelNames::code(l), C_TYPE, vec![]), c(), c2()],
                    );
                    let castm = self.cc(&ModelNames::cast(lm));
                    let compm = self.cc(&ModelNames::comp(lm));
                    let xm = StirTerm::apps(
                        compm.clone(),
                        [
                            cm.clone(),
                            StirTerm::apps(castm.clone(), [c(), cm.clone(), x()]),
                            StirTerm::apps(castm.clone(), [c2(), cm.clone(), x2()]),
                        ],
                    );
                    let ym = StirTerm::apps(
                        compm,
                        [
                            cm.clone(),
                            StirTerm::apps(castm.clone(), [c(), cm.clone(), y()]),
                            StirTerm::apps(castm, [c2(), cm.clone(), y2()]),
                        ],
                    );
                    codem(C_EQ, vec![cm, xm, ym])
                },
            });
            for sig in &self.env.inductives {
                if sig.level.0 != lm {
                    continue;
                }
                let np = sig.params.len();
                let cind = self.cind_index(lm, &sig.name).unwrap();
                let cindpat = |names: &str| Pat::Ctor {
                    ind: ModelNames::code(lm).into(),
                    ctor: cind,
                    args: (0..np)
                        .map(|i| Pat::Var(Name::named(format!("{names}{i}"))))
                        .collect(),
                };
                let mut out_args: Vec<StirTerm> = Vec::new();
                for k in 0..np {
                    let ctx_types: Vec<Term> =
                        sig.params[..k].iter().map(|(_, t)| t.clone()).collect();
                    let cx = TransCx {
                        env: self.env,
                        gen: self,
                        ctx_types: ctx_types.clone(),
                        depth: 0,
                    };
                    let pcode = translate_in(&cx, &sig.params[k].1)?;
                    let lvl = self
                        .kernel_level(&ctx_types, &sig.params[k].1)
                        .unwrap_or(lm);
                    let q = |j: usize| StirTerm::Var(np + (np - 1 - j));
                    let r = |j: usize| StirTerm::Var(np - 1 - j);
                    let code_q = remap_free(&pcode, &|vk| np + (np - 1 - (k - 1 - vk)));
                    let code_r = remap_free(&pcode, &|vk| np - 1 - (k - 1 - vk));
                    let code_m_tpl = remap_free(&pcode, &|vk| vk);
                    let code_m = plug_lowest(&code_m_tpl, k, &out_args);
                    let castl = self.cc(&ModelNames::cast(lvl));
                    let compl = self.cc(&ModelNames::comp(lvl));
                    out_args.push(StirTerm::apps(
                        compl,
                        [
                            code_m.clone(),
                            StirTerm::apps(castl.clone(), [code_q, code_m.clone(), q(k)]),
                            StirTerm::apps(castl, [code_r, code_m, r(k)]),
                        ],
                    ));
                }
                clauses.push(Clause {
                    pats: vec![code_pat(C_TYPE, 0), cindpat("q"), cindpat("r")],
                    guard: None,
                    rhs: self.ctor(ModelNames::code(lm), cind, out_args),
                });
            }
            clauses.push(Clause {
                pats: vec![code_pat(C_TYPE, 0), v("x"), v("y")],
                guard: None,
                rhs: codem(C_ERR, vec![]),
            });
        }

        // At CPi: compose pointwise.
        clauses.push(Clause {
            pats: vec![code_pat(C_PI, 2), v("f"), v("g")],
            guard: None,
            rhs: StirTerm::Lam(
                Name::named("x"),
                None,
                StirTerm::apps(
                    shift(&myself(), 1),
                    [
                        StirTerm::app(StirTerm::Var(3), StirTerm::Var(0)),
                        StirTerm::app(StirTerm::Var(2), StirTerm::Var(0)),
                        StirTerm::app(StirTerm::Var(1), StirTerm::Var(0)),
                    ],
                )
                .rc(),
            ),
        });
        // At CEq: compose the evidence.
        clauses.push(Clause {
            pats: vec![
                code_pat(C_EQ, 3),
                Pat::Ctor {
                    ind: ModelNames::geq(l).into(),
                    ctor: 0,
                    args: vec![v("a")],
                },
                Pat::Ctor {
                    ind: ModelNames::geq(l).into(),
                    ctor: 0,
                    args: vec![v("b")],
                },
            ],
            guard: None,
            rhs: {
                let c = StirTerm::Var(4);
                let x = StirTerm::Var(3);
                let y = StirTerm::Var(2);
                let a = StirTerm::Var(1);
                let b = StirTerm::Var(0);
                let ev = StirTerm::apps(myself(), [c.clone(), a, b]);
                self.ctor(ModelNames::geq(l), 0, vec![c, x, y, ev])
            },
        });
        // At inductive codes.
        for sig in &self.env.inductives {
            if sig.level.0 != l {
                continue;
            }
            let np = sig.params.len();
            let unk_ix = sig.ctors.len();
            let err_ix = sig.ctors.len() + 1;
            let gc = |c: usize, n: usize| self.gc_pat(sig, c, n);
            clauses.push(Clause {
                pats: vec![self.cind_pat(l, &sig.name, np), gc(unk_ix, 0), v("y")],
                guard: None,
                rhs: StirTerm::Var(0),
            });
            clauses.push(Clause {
                pats: vec![self.cind_pat(l, &sig.name, np), v("x"), gc(unk_ix, 0)],
                guard: None,
                rhs: StirTerm::Var(0),
            });
            for first in [true, false] {
                let mut pats = vec![self.cind_pat(l, &sig.name, np)];
                if first {
                    pats.push(gc(err_ix, 0));
                    pats.push(v("y"));
                } else {
                    pats.push(v("x"));
                    pats.push(gc(err_ix, 0));
                }
                clauses.push(Clause {
                    pats,
                    guard: None,
                    rhs: self.ctor(
                        ModelNames::gind(&sig.name),
                        err_ix,
                        (0..np).map(|j| StirTerm::Var(1 + (np - 1 - j))).collect(),
                    ),
                });
            }
            for (ci, cs) in sig.ctors.iter().enumerate() {
                let nf = cs.fields.len();
                // binders: p̄ (np), f̄ (nf), ḡ (nf)
                let mut out_fields: Vec<StirTerm> = Vec::new();
                for k in 0..nf {
                    let ctx_types: Vec<Term> = sig
                        .params
                        .iter()
                        .map(|(_, t)| t.clone())
                        .chain(cs.fields[..k].iter().map(|(_, t)| t.clone()))
                        .collect();
                    let cx = TransCx {
                        env: self.env,
                        gen: self,
                        ctx_types: ctx_types.clone(),
                        depth: 0,
                    };
                    let fcode = translate_in(&cx, &cs.fields[k].1)?;
                    let lvl = self.kernel_level(&ctx_types, &cs.fields[k].1).unwrap_or(l);
                    let fvar = |j: usize| StirTerm::Var(nf + (nf - 1 - j));
                    let gvar = |j: usize| StirTerm::Var(nf - 1 - j);
                    let code_f = remap_free(&fcode, &|vk| {
                        if vk < k {
                            nf + (nf - 1 - (k - 1 - vk))
                        } else {
                            let pj = np - 1 - (vk - k);
                            2 * nf + (np - 1 - pj)
                        }
                    });
                    let code_g = remap_free(&fcode, &|vk| {
                        if vk < k {
                            nf - 1 - (k - 1 - vk)
                        } else {
                            let pj = np - 1 - (vk - k);
                            2 * nf + (np - 1 - pj)
                        }
                    });
                    let code_m_tpl = remap_free(&fcode, &|vk| {
                        if vk < k {
                            vk
                        } else {
                            let pj = np - 1 - (vk - k);
                            2 * nf + (np - 1 - pj) + k
                        }
                    });
                    let code_m = plug_lowest(&code_m_tpl, k, &out_fields);
                    let castl = self.cc(&ModelNames::cast(lvl));
                    let compl = self.cc(&ModelNames::comp(lvl));
                    out_fields.push(StirTerm::apps(
                        compl,
                        [
                            code_m.clone(),
                            StirTerm::apps(castl.clone(), [code_f, code_m.clone(), fvar(k)]),
                            StirTerm::apps(castl, [code_g, code_m, gvar(k)]),
                        ],
                    ));
                }
                let mut args: Vec<StirTerm> = (0..np)
                    .map(|j| StirTerm::Var(2 * nf + (np - 1 - j)))
                    .collect();
                args.extend(out_fields);
                clauses.push(Clause {
                    pats: vec![self.cind_pat(l, &sig.name, np), gc(ci, nf), gc(ci, nf)],
                    guard: None,
                    rhs: self.ctor(ModelNames::gind(&sig.name), ci, args),
                });
            }
            clauses.push(Clause {
                pats: vec![self.cind_pat(l, &sig.name, np), v("x"), v("y")],
                guard: None,
                rhs: self.ctor(
                    ModelNames::gind(&sig.name),
                    err_ix,
                    (0..np).map(|j| StirTerm::Var(2 + (np - 1 - j))).collect(),
                ),
            });
        }
        clauses.push(Clause {
            pats: vec![v("c"), v("x"), v("y")],
            guard: None,
            rhs: StirTerm::app(botf(), StirTerm::Var(2)),
        });
        p.defs.push(StirDef {
            name: name.into(),
            ty: StirTerm::Pi(
                Name::named("c"),
                self.code_ty(l).rc(),
                StirTerm::Pi(
                    Name(None),
                    self.cvar_el(l, 0).rc(),
                    StirTerm::Pi(Name(None), self.cvar_el(l, 1).rc(), self.cvar_el(l, 2).rc())
                        .rc(),
                )
                .rc(),
            ),
            arity: 3,
            clauses,
            rec_args: vec![0, 1, 2],
            trusted_termination: true,
        });
        Ok(())
    }

    fn gen_rec(&self, p: &mut Prelude, sig: &InductiveSig, l2: u32) -> Result<(), TransError> {
        let l = sig.level.0;
        let n_idx = sig.n_idx_params;
        let n_orig = sig.params.len() - n_idx;
        let nb = sig.ctors.len();
        let gname = ModelNames::gind(&sig.name);
        let el2 = |t: StirTerm| StirTerm::app(self.cc(&ModelNames::el(l2)), t);
        let unk_ix = nb;
        let err_ix = nb + 1;

        let param_el = |pj: usize, var: &dyn Fn(usize) -> usize| -> StirTerm {
            let ctx_types: Vec<Term> =
                sig.params[..pj].iter().map(|(_, t2)| t2.clone()).collect();
            let fe = self
                .el_form(&ctx_types, ctx_types.len(), &sig.params[pj].1)
                .expect("parameter classifier");
            remap_free(&fe, &|vk| var(pj - 1 - vk))
        };
        let field_el = |ci: usize,
                        f: usize,
                        pvar: &dyn Fn(usize) -> usize,
                        fvar: &dyn Fn(usize) -> usize|
         -> StirTerm {
            let cs = &sig.ctors[ci];
            let ctx_types: Vec<Term> = sig
                .params
                .iter()
                .map(|(_, t2)| t2.clone())
                .chain(cs.fields[..f].iter().map(|(_, t2)| t2.clone()))
                .collect();
            let fe = self
                .el_form(&ctx_types, ctx_types.len(), &cs.fields[f].1)
                .expect("field classifier");
            remap_free(&fe, &|vk| {
                if vk < f {
                    fvar(f - 1 - vk)
                } else {
                    pvar(sig.params.len() - 1 - (vk - f))
                }
            })
        };

        // P : (idx..) -> GC orig idx -> Code_l2, scoped under [orig..].
        let p_ty = {
            let mut t = StirTerm::Pi(
                Name::named("v"),
                {
                    let mut args: Vec<StirTerm> = (0..n_orig)
                        .map(|j| StirTerm::Var(n_idx + (n_orig - 1 - j)))
                        .collect();
                    args.extend((0..n_idx).map(|i| StirTerm::Var(n_idx - 1 - i)));
                    StirTerm::IndType {
                        ind: gname.clone().into(),
                        args,
                    }
                }
                .rc(),
                self.code_ty(l2).rc(),
            );
            for i in (0..n_idx).rev() {
                let ity = param_el(n_orig + i, &|pj| {
                    if pj < n_orig {
                        i + (n_orig - 1 - pj)
                    } else {
                        i - 1 - (pj - n_orig)
                    }
                });
                t = StirTerm::Pi(Name::named("i"), ity.rc(), t.rc());
            }
            t
        };

        let rec_fields = |ci: usize| -> Vec<usize> {
            (0..sig.ctors[ci].fields.len())
                .filter(|f| {
                    sig.field_is_recursive(ci, *f)
                        && !matches!(sig.ctors[ci].fields[*f].1, Term::Pi(..))
                })
                .collect()
        };

        // Branch type for ctor ci, scoped under [orig, P]:
        //   (i..) -> (f..) -> (r..) -> El2 (P i.. (D orig i.. f..))
        let branch_ty = |ci: usize| -> StirTerm {
            let cs = &sig.ctors[ci];
            let nf = cs.fields.len();
            let recs = rec_fields(ci);
            let total = n_idx + nf + recs.len();
            let orig_at = |d: usize, j: usize| StirTerm::Var(d + 1 + (n_orig - 1 - j));
            let idx_at = |d: usize, i: usize| StirTerm::Var(d - 1 - i);
            let field_at = |d: usize, f: usize| StirTerm::Var(d - 1 - (n_idx + f));
            let mut t = {
                let d = total;
                let idxs: Vec<StirTerm> = (0..n_idx).map(|i| idx_at(d, i)).collect();
                let mut dargs: Vec<StirTerm> = (0..n_orig).map(|j| orig_at(d, j)).collect();
                dargs.extend(idxs.iter().cloned());
                dargs.extend((0..nf).map(|f| field_at(d, f)));
                let dval = StirTerm::Ctor {
                    ind: gname.clone().into(),
                    ctor: ci,
                    args: dargs,
                };
                el2(StirTerm::apps(
                    StirTerm::Var(d),
                    idxs.into_iter().chain(std::iter::once(dval)),
                ))
            };
            for (pos, rf) in recs.iter().enumerate().rev() {
                let d = n_idx + nf + pos;
                let q_decl = match &cs.fields[*rf].1 {
                    Term::TyCon { args, .. } => args[n_orig..].to_vec(),
                    _ => vec![],
                };
                let q_stir: Vec<StirTerm> = q_decl
                    .iter()
                    .map(|q| {
                        kernel_expr_to_stir(q, &|vk| {
                            if vk < *rf {
                                let f2 = rf - 1 - vk;
                                d - 1 - (n_idx + f2)
                            } else {
                                let pj = sig.params.len() - 1 - (vk - rf);
                                if pj < n_orig {
                                    d + 1 + (n_orig - 1 - pj)
                                } else {
                                    d - 1 - (pj - n_orig)
                                }
                            }
                        })
                    })
                    .collect();
                let papp = StirTerm::apps(
                    StirTerm::Var(d),
                    q_stir.into_iter().chain(std::iter::once(field_at(d, *rf))),
                );
                t = StirTerm::Pi(Name::named("r"), el2(papp).rc(), t.rc());
            }
            for f in (0..nf).rev() {
                let d = n_idx + f;
                let fe = field_el(
                    ci,
                    f,
                    &|pj| {
                        if pj < n_orig {
                            d + 1 + (n_orig - 1 - pj)
                        } else {
                            d - 1 - (pj - n_orig)
                        }
                    },
                    &|f2| d - 1 - (n_idx + f2),
                );
                t = StirTerm::Pi(Name::named("f"), fe.rc(), t.rc());
            }
            for i in (0..n_idx).rev() {
                let d = i;
                let ity = param_el(n_orig + i, &|pj| {
                    if pj < n_orig {
                        d + 1 + (n_orig - 1 - pj)
                    } else {
                        d - 1 - (pj - n_orig)
                    }
                });
                t = StirTerm::Pi(Name::named("i"), ity.rc(), t.rc());
            }
            t
        };

        let ty = {
            let mut t = {
                let idxs: Vec<StirTerm> = (0..n_idx)
                    .map(|i| StirTerm::Var(1 + (n_idx - 1 - i)))
                    .collect();
                let pvar = StirTerm::Var(n_idx + 1 + nb);
                el2(StirTerm::apps(
                    pvar,
                    idxs.into_iter().chain(std::iter::once(StirTerm::Var(0))),
                ))
            };
            t = StirTerm::Pi(
                Name::named("v"),
                {
                    let mut args: Vec<StirTerm> = (0..n_orig)
                        .map(|j| StirTerm::Var(n_idx + nb + 1 + (n_orig - 1 - j)))
                        .collect();
                    args.extend((0..n_idx).map(|i| StirTerm::Var(n_idx - 1 - i)));
                    StirTerm::IndType {
                        ind: gname.clone().into(),
                        args,
                    }
                }
                .rc(),
                t.rc(),
            );
            for i in (0..n_idx).rev() {
                let ity = param_el(n_orig + i, &|pj| {
                    if pj < n_orig {
                        i + nb + 1 + (n_orig - 1 - pj)
                    } else {
                        i - 1 - (pj - n_orig)
                    }
                });
                t = StirTerm::Pi(Name::named("i"), ity.rc(), t.rc());
            }
            for ci in (0..nb).rev() {
                let bt = shift(&branch_ty(ci), ci as isize);
                t = StirTerm::Pi(Name::named("b"), bt.rc(), t.rc());
            }
            t = StirTerm::Pi(Name::named("P"), p_ty.rc(), t.rc());
            for j in (0..n_orig).rev() {
                let oty = param_el(j, &|pj| j - 1 - pj);
                t = StirTerm::Pi(Name::named("o"), oty.rc(), t.rc());
            }
            t
        };

        let arity = n_orig + 1 + nb + n_idx + 1;
        let scrut_pos = arity - 1;
        let mut clauses: Vec<Clause> = Vec::new();
        let var_pats = |extra: Pat| -> Vec<Pat> {
            let mut ps: Vec<Pat> = Vec::new();
            for j in 0..n_orig {
                ps.push(Pat::Var(Name::named(format!("o{j}"))));
            }
            ps.push(Pat::Var(Name::named("P")));
            for b in 0..nb {
                ps.push(Pat::Var(Name::named(format!("b{b}"))));
            }
            for i in 0..n_idx {
                ps.push(Pat::Var(Name::named(format!("i{i}"))));
            }
            ps.push(extra);
            ps
        };
        {
            // Guard clause: a self-inconsistent scrutinee behaves as err.
            let binders = arity;
            let vv = StirTerm::Var(0);
            let pv = StirTerm::Var(binders - 1 - n_orig);
            let idxs: Vec<StirTerm> = (0..n_idx)
                .map(|i| StirTerm::Var(1 + (n_idx - 1 - i)))
                .collect();
            let code = {
                let mut args: Vec<StirTerm> = (0..n_orig)
                    .map(|j| StirTerm::Var(binders - 1 - j))
                    .collect();
                args.extend(idxs.iter().cloned());
                self.ctor(
                    ModelNames::code(l),
                    self.cind_index(l, &sig.name).unwrap(),
                    args,
                )
            };
            clauses.push(Clause {
                pats: var_pats(Pat::Var(Name::named("v"))),
                guard: Some(StirTerm::apps(
                    self.cc(&ModelNames::isbot(l)),
                    [code, vv.clone()],
                )),
                rhs: StirTerm::app(
                    self.cc(&ModelNames::bot(l2)),
                    StirTerm::apps(pv, idxs.into_iter().chain(std::iter::once(vv))),
                ),
            });
        }
        for (ix, is_unk) in [(unk_ix, true), (err_ix, false)] {
            let binders = arity - 1;
            let pv = StirTerm::Var(binders - 1 - n_orig);
            let idxs: Vec<StirTerm> = (0..n_idx)
                .map(|i| StirTerm::Var(n_idx - 1 - i))
                .collect();
            let dval = {
                let mut args: Vec<StirTerm> = (0..n_orig)
                    .map(|j| StirTerm::Var(binders - 1 - j))
                    .collect();
                args.extend(idxs.iter().cloned());
                StirTerm::Ctor {
                    ind: gname.clone().into(),
                    ctor: ix,
                    args,
                }
            };
            let papp = StirTerm::apps(pv, idxs.into_iter().chain(std::iter::once(dval)));
            clauses.push(Clause {
                pats: var_pats(Pat::Ctor {
                    ind: gname.clone().into(),
                    ctor: ix,
                    args: vec![],
                }),
                guard: None,
                rhs: {
                    let f = if is_unk {
                        ModelNames::top(l2)
                    } else {
                        ModelNames::bot(l2)
                    };
                    StirTerm::app(self.cc(&f), papp)
                },
            });
        }
        for (ci, cs) in sig.ctors.iter().enumerate() {
            let nf = cs.fields.len();
            let binders = n_orig + 1 + nb + n_idx + nf;
            let ovar = |j: usize| StirTerm::Var(binders - 1 - j);
            let pvar = StirTerm::Var(binders - 1 - n_orig);
            let bvar = |b: usize| StirTerm::Var(binders - 1 - n_orig - 1 - b);
            let ivar = |i: usize| StirTerm::Var(nf + (n_idx - 1 - i));
            let fvar = |f: usize| StirTerm::Var(nf - 1 - f);
            let mut rhs =
                StirTerm::apps(bvar(ci), (0..n_idx).map(ivar).chain((0..nf).map(fvar)));
            for rf in rec_fields(ci) {
                let q_decl = match &cs.fields[rf].1 {
                    Term::TyCon { args, .. } => args[n_orig..].to_vec(),
                    _ => vec![],
                };
                let q_stir: Vec<StirTerm> = q_decl
                    .iter()
                    .map(|q| {
                        kernel_expr_to_stir(q, &|vk| {
                            if vk < rf {
                                nf - 1 - (rf - 1 - vk)
                            } else {
                                let pj = sig.params.len() - 1 - (vk - rf);
                                if pj < n_orig {
                                    binders - 1 - pj
                                } else {
                                    nf + (n_idx - 1 - (pj - n_orig))
                                }
                            }
                        })
                    })
                    .collect();
                let rec_call = StirTerm::apps(
                    self.cc(&ModelNames::grec(&sig.name, l2)),
                    (0..n_orig)
                        .map(ovar)
                        .chain(std::iter::once(pvar.clone()))
                        .chain((0..nb).map(bvar))
                        .chain(q_stir)
                        .chain(std::iter::once(fvar(rf))),
                );
                rhs = StirTerm::app(rhs, rec_call);
            }
            clauses.push(Clause {
                pats: var_pats(self.gc_pat(sig, ci, nf)),
                guard: None,
                rhs,
            });
        }
        p.defs.push(StirDef {
            name: ModelNames::grec(&sig.name, l2).into(),
            ty,
            arity,
            clauses,
            rec_args: vec![scrut_pos],
            trusted_termination: false,
        });
        Ok(())
    }
}

/// Remap free variables of a generated stir term.
pub fn remap_free(t: &StirTerm, f: &dyn Fn(usize) -> usize) -> StirTerm {
    super::term::map_vars(&t.clone(), 0, &mut |depth, i| {
        if i >= depth {
            StirTerm::Var(f(i - depth) + depth)
        } else {
            StirTerm::Var(i)
        }
    })
}

/// Replace the lowest `k` free variables with the given expressions
/// (`exprs[k-1]` plugs variable 0, the innermost placeholder); remaining
/// free variables drop past the vacated slots.
fn plug_lowest(t: &StirTerm, k: usize, exprs: &[StirTerm]) -> StirTerm {
    super::term::map_vars(&t.clone(), 0, &mut |depth, i| {
        if i >= depth {
            let free = i - depth;
            if free < k {
                let expr = &exprs[k - 1 - free];
                return super::term::shift(expr, depth as isize);
            }
            return StirTerm::Var(i - k);
        }
        StirTerm::Var(i)
    })
}

/// Minimal structural mapping of kernel index expressions (variables and
/// constructor applications) into stir terms.
pub fn kernel_expr_to_stir(q: &Term, var: &dyn Fn(usize) -> usize) -> StirTerm {
    match q {
        Term::Var(v) => StirTerm::Var(var(*v)),
        Term::Ctor {
            ind,
            ctor,
            params,
            fields,
        } => StirTerm::Ctor {
            ind: ModelNames::gind(ind).into(),
            ctor: *ctor,
            args: params
                .iter()
                .chain(fields.iter())
                .map(|a| kernel_expr_to_stir(a, var))
                .collect(),
        },
        other => {
            let _ = other;
            StirTerm::Var(var(0))
        }
    }
}
