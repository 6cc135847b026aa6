//! Internal checker for the static target: validates the generated prelude
//! (inductive declarations with the fixed induction-recursion schema,
//! clausal definitions with structural termination) and types translated
//! terms.

use thiserror::Error;

use super::eval::StirMachine;
use super::term::{shift, subst_many, Clause, Pat, Prelude, StirDef, StirInductive, StirTerm};
use crate::term::{Level, Name};

#[derive(Debug, Error)]
pub enum StirTypeError {
    #[error("[stir:{rule}] {msg}")]
    Rule { rule: &'static str, msg: String },
    #[error("stir conversion failure:\n  expected {expected:?}\n  found    {found:?}")]
    Mismatch {
        expected: Box<StirTerm>,
        found: Box<StirTerm>,
    },
    #[error("stir evaluation failed during checking: {0}")]
    Eval(#[from] super::eval::StirEvalError),
}

fn fail<T>(rule: &'static str, msg: impl Into<String>) -> Result<T, StirTypeError> {
    Err(StirTypeError::Rule {
        rule,
        msg: msg.into(),
    })
}

pub struct StirChecker<'p> {
    pub prelude: &'p Prelude,
    pub ceiling: usize,
}

impl<'p> StirChecker<'p> {
    pub fn new(prelude: &'p Prelude) -> StirChecker<'p> {
        StirChecker {
            prelude,
            ceiling: 4_000_000,
        }
    }

    fn norm(&self, t: &StirTerm) -> Result<StirTerm, StirTypeError> {
        let mut m = StirMachine::new(self.prelude, self.ceiling);
        Ok(m.norm(t)?)
    }

    fn lookup(&self, ctx: &[StirTerm], i: usize) -> Option<StirTerm> {
        if i >= ctx.len() {
            return None;
        }
        Some(shift(&ctx[ctx.len() - 1 - i], (i + 1) as isize))
    }

    pub fn synth(&self, ctx: &[StirTerm], t: &StirTerm) -> Result<StirTerm, StirTypeError> {
        match t {
            StirTerm::Sort(l) => Ok(StirTerm::Sort(l.succ())),
            StirTerm::Var(i) => self.lookup(ctx, *i).ok_or_else(|| StirTypeError::Rule {
                rule: "var",
                msg: format!("unbound variable {i}"),
            }),
            StirTerm::Const(name) => self
                .prelude
                .def(name)
                .map(|d| d.ty.clone())
                .ok_or_else(|| StirTypeError::Rule {
                    rule: "const",
                    msg: format!("unknown definition {name}"),
                }),
            StirTerm::Pi(_, a, b) => {
                let l1 = self.universe_of(ctx, a)?;
                let mut ctx2 = ctx.to_vec();
                ctx2.push((**a).clone());
                let l2 = self.universe_of(&ctx2, b)?;
                Ok(StirTerm::Sort(l1.max(l2)))
            }
            StirTerm::Lam(_, ann, body) => match ann {
                Some(a) => {
                    self.universe_of(ctx, a)?;
                    let mut ctx2 = ctx.to_vec();
                    ctx2.push((**a).clone());
                    let bty = self.synth(&ctx2, body)?;
                    Ok(StirTerm::Pi(Name(None), a.clone(), bty.rc()))
                }
                None => fail("lam", "unannotated lambda does not synthesize"),
            },
            StirTerm::App(f, a) => {
                let fty = self.synth(ctx, f)?;
                match self.norm(&fty)? {
                    StirTerm::Pi(_, dom, cod) => {
                        self.check(ctx, a, &dom)?;
                        Ok(super::term::subst0(&cod, a))
                    }
                    other => fail("app", format!("not a function type: {other:?}")),
                }
            }
            StirTerm::Ctor { ind, ctor, args } => {
                let sig = self
                    .prelude
                    .inductive(ind)
                    .ok_or_else(|| StirTypeError::Rule {
                        rule: "ctor",
                        msg: format!("unknown inductive {ind}"),
                    })?
                    .clone();
                let cs = sig.ctors.get(*ctor).ok_or_else(|| StirTypeError::Rule {
                    rule: "ctor",
                    msg: format!("unknown constructor {ctor} of {ind}"),
                })?;
                let expected = sig.params.len() + cs.fields.len();
                if args.len() != expected {
                    return fail(
                        "ctor",
                        format!(
                            "{}: expected {} arguments, got {}",
                            cs.name,
                            expected,
                            args.len()
                        ),
                    );
                }
                // Params then fields, all in one telescope.
                let mut telescope: Vec<StirTerm> =
                    sig.params.iter().map(|(_, t)| t.clone()).collect();
                telescope.extend(cs.fields.iter().map(|(_, t)| t.clone()));
                for (i, a) in args.iter().enumerate() {
                    let prior: Vec<&StirTerm> = args[..i].iter().collect();
                    let ety = subst_many(&telescope[i], &prior);
                    self.check(ctx, a, &ety)?;
                }
                Ok(StirTerm::IndType {
                    ind: ind.clone(),
                    args: args[..sig.params.len()].to_vec(),
                })
            }
            StirTerm::IndType { ind, args } => {
                let sig = self
                    .prelude
                    .inductive(ind)
                    .ok_or_else(|| StirTypeError::Rule {
                        rule: "indtype",
                        msg: format!("unknown inductive {ind}"),
                    })?
                    .clone();
                if args.len() != sig.params.len() {
                    return fail("indtype", format!("{ind}: wrong number of parameters"));
                }
                for (i, a) in args.iter().enumerate() {
                    let prior: Vec<&StirTerm> = args[..i].iter().collect();
                    let ety = subst_many(&sig.params[i].1, &prior);
                    self.check(ctx, a, &ety)?;
                }
                Ok(StirTerm::Sort(sig.level))
            }
        }
    }

    pub fn universe_of(&self, ctx: &[StirTerm], t: &StirTerm) -> Result<Level, StirTypeError> {
        let k = self.synth(ctx, t)?;
        match self.norm(&k)? {
            StirTerm::Sort(l) => Ok(l),
            other => fail("sort", format!("not a type: {other:?}")),
        }
    }

    pub fn check(
        &self,
        ctx: &[StirTerm],
        t: &StirTerm,
        expected: &StirTerm,
    ) -> Result<(), StirTypeError> {
        match t {
            StirTerm::Lam(_, _, body) => match self.norm(expected)? {
                StirTerm::Pi(_, dom, cod) => {
                    let mut ctx2 = ctx.to_vec();
                    ctx2.push((*dom).clone());
                    self.check(&ctx2, body, &cod)
                }
                other => fail("lam", format!("lambda against non-function {other:?}")),
            },
            _ => {
                let found = self.synth(ctx, t)?;
                let a = self.norm(&found)?;
                let b = self.norm(expected)?;
                if a == b {
                    Ok(())
                } else {
                    Err(StirTypeError::Rule {
                        rule: "conv",
                        msg: format!(
                            "term {t:?}\n  expected {b:?}\n  found    {a:?}"
                        ),
                    })
                }
            }
        }
    }

    // ---------- prelude validation ----------

    pub fn check_prelude(&self) -> Result<(), StirTypeError> {
        for ind in &self.prelude.inductives {
            self.check_inductive(ind)?;
        }
        for def in &self.prelude.defs {
            self.check_def(def)?;
        }
        Ok(())
    }

    pub fn check_inductive_public(&self, ind: &StirInductive) -> Result<(), StirTypeError> {
        self.check_inductive(ind)
    }

    fn check_inductive(&self, ind: &StirInductive) -> Result<(), StirTypeError> {
        let mut ctx: Vec<StirTerm> = Vec::new();
        for (_, pty) in &ind.params {
            self.universe_of(&ctx, pty)?;
            ctx.push(pty.clone());
        }
        for cs in &ind.ctors {
            let mut fctx = ctx.clone();
            for (_, fty) in &cs.fields {
                let l = self.universe_of(&fctx, fty)?;
                // Strict predicativity for fields (the inductive's own sort
                // bounds them; parameters are exempt).
                if l > ind.level.succ() {
                    return fail(
                        "positivity",
                        format!("field of {} exceeds the inductive's sort", cs.name),
                    );
                }
                self.check_positive(&ind.name, fty, &cs.name)?;
                fctx.push(fty.clone());
            }
        }
        Ok(())
    }

    /// Syntactic strict positivity: the inductive may appear only as the
    /// head of a field type (possibly under function codomains), never in a
    /// domain or inside another type's arguments. Induction-recursion is
    /// benign here because `El c` does not syntactically contain the code
    /// type.
    fn check_positive(
        &self,
        name: &str,
        field: &StirTerm,
        ctor: &str,
    ) -> Result<(), StirTypeError> {
        fn occurs(name: &str, t: &StirTerm) -> bool {
            let mut found = false;
            fn walk(name: &str, t: &StirTerm, found: &mut bool) {
                match t {
                    StirTerm::IndType { ind, args } => {
                        if &**ind == name {
                            *found = true;
                        }
                        args.iter().for_each(|a| walk(name, a, found));
                    }
                    // Term-level constructor values of the code type are
                    // the induction-recursion pattern (they sit under El);
                    // only type-former occurrences count.
                    StirTerm::Ctor { args, .. } => {
                        args.iter().for_each(|a| walk(name, a, found));
                    }
                    StirTerm::Pi(_, a, b) => {
                        walk(name, a, found);
                        walk(name, b, found);
                    }
                    StirTerm::Lam(_, _, b) => walk(name, b, found),
                    StirTerm::App(a, b) => {
                        walk(name, a, found);
                        walk(name, b, found);
                    }
                    _ => {}
                }
            }
            walk(name, t, &mut found);
            found
        }
        fn positive(name: &str, ty: &StirTerm) -> bool {
            match ty {
                StirTerm::IndType { ind, args } if &**ind == name => {
                    !args.iter().any(|a| occurs(name, a))
                }
                StirTerm::Pi(_, dom, cod) => !occurs(name, dom) && positive(name, cod),
                other => !occurs(name, other),
            }
        }
        if positive(name, field) {
            Ok(())
        } else {
            fail(
                "positivity",
                format!("{name} occurs non-positively in a field of {ctor}"),
            )
        }
    }

    pub fn check_def_public(&self, def: &StirDef) -> Result<(), StirTypeError> {
        self.check_def(def)
    }

    fn check_def(&self, def: &StirDef) -> Result<(), StirTypeError> {
        self.universe_of(&[], &def.ty)?;
        // Split the argument telescope.
        let mut telescope: Vec<StirTerm> = Vec::new();
        let mut ret = def.ty.clone();
        for _ in 0..def.arity {
            match self.norm(&ret)? {
                StirTerm::Pi(_, dom, cod) => {
                    telescope.push((*dom).clone());
                    ret = (*cod).clone();
                }
                other => {
                    return fail(
                        "def",
                        format!("{}: arity exceeds the Pi telescope: {other:?}", def.name),
                    )
                }
            }
        }
        for (ci, clause) in def.clauses.iter().enumerate() {
            self.check_clause(def, &telescope, &ret, clause)
                .map_err(|e| StirTypeError::Rule {
                    rule: "clause",
                    msg: format!("{} clause {}: {}", def.name, ci, e),
                })?;
            if !def.trusted_termination {
                self.check_termination(def, clause)?;
            }
        }
        Ok(())
    }

    fn check_clause(
        &self,
        def: &StirDef,
        telescope: &[StirTerm],
        ret: &StirTerm,
        clause: &Clause,
    ) -> Result<(), StirTypeError> {
        if clause.pats.len() != def.arity {
            return fail("clause", format!("{}: wrong number of patterns", def.name));
        }
        let mut ctx: Vec<StirTerm> = Vec::new();
        let mut arg_terms: Vec<StirTerm> = Vec::new();
        for (i, pat) in clause.pats.iter().enumerate() {
            let refs: Vec<&StirTerm> = arg_terms.iter().collect();
            let expected = subst_many(&telescope[i], &refs);
            let (b, term) = self.bind_pat(&mut ctx, pat, &expected)?;
            arg_terms = arg_terms
                .into_iter()
                .map(|s| shift(&s, b as isize))
                .collect();
            arg_terms.push(term);
        }
        if let Some(guard) = &clause.guard {
            if self.prelude.inductive("SBool").is_some() {
                self.check(
                    &ctx,
                    guard,
                    &StirTerm::IndType {
                        ind: "SBool".into(),
                        args: vec![],
                    },
                )?;
            }
        }
        // RHS at the return type with the telescope binders replaced by the
        // pattern terms.
        let refs: Vec<&StirTerm> = arg_terms.iter().collect();
        let ret_for_clause = subst_many(ret, &refs);
        self.check(&ctx, &clause.rhs, &ret_for_clause)
    }

    /// Bind a pattern's variables; returns the pattern-as-term in the scope
    /// that includes everything bound so far (for later telescope entries).
    ///
    /// Constructor patterns bind *fields only*: the parameters are read off
    /// the expected type, mirroring the evaluator's positional matching.
    fn bind_pat(
        &self,
        ctx: &mut Vec<StirTerm>,
        pat: &Pat,
        expected: &StirTerm,
    ) -> Result<(usize, StirTerm), StirTypeError> {
        match pat {
            Pat::Var(_) => {
                ctx.push(expected.clone());
                Ok((1, StirTerm::Var(0)))
            }
            Pat::Ctor { ind, ctor, args } => {
                let sig = self
                    .prelude
                    .inductive(ind)
                    .ok_or_else(|| StirTypeError::Rule {
                        rule: "pattern",
                        msg: format!("unknown inductive {ind}"),
                    })?
                    .clone();
                let type_params = match self.norm(expected)? {
                    StirTerm::IndType { ind: i2, args } if i2 == *ind => args,
                    other => {
                        return fail(
                            "pattern",
                            format!("constructor pattern of {ind} against type {other:?}"),
                        )
                    }
                };
                let cs = &sig.ctors[*ctor];
                if args.len() != cs.fields.len() {
                    return fail(
                        "pattern",
                        format!("pattern for {} must bind its {} fields", cs.name, cs.fields.len()),
                    );
                }
                // Sub-pattern terms, kept in the current (growing) scope.
                let mut sub_terms: Vec<StirTerm> =
                    type_params.iter().map(|p| p.clone()).collect();
                let mut added = 0usize;
                for (i, sub) in args.iter().enumerate() {
                    let refs: Vec<&StirTerm> = sub_terms.iter().collect();
                    let ety = subst_many(&cs.fields[i].1, &refs);
                    let (b, term) = self.bind_pat(ctx, sub, &ety)?;
                    added += b;
                    sub_terms = sub_terms
                        .into_iter()
                        .map(|s| shift(&s, b as isize))
                        .collect();
                    sub_terms.push(term);
                }
                Ok((
                    added,
                    StirTerm::Ctor {
                        ind: ind.clone(),
                        ctor: *ctor,
                        args: sub_terms,
                    },
                ))
            }
        }
    }

    /// Structural termination for the fixed generation schema: every
    /// self-recursive call must, at one of the declared argument positions,
    /// pass a variable bound strictly inside a constructor pattern at that
    /// same position (possibly applied to further arguments — the standard
    /// field-application rule that covers induction-recursion). The mutual
    /// cast/comp pair is covered by the joint code-size measure of the cast
    /// equations; only self-calls are checked here.
    fn check_termination(&self, def: &StirDef, clause: &Clause) -> Result<(), StirTypeError> {
        fn mentions_const(t: &StirTerm, name: &str) -> bool {
            match t {
                StirTerm::Const(n) => &**n == name,
                StirTerm::Pi(_, a, b) | StirTerm::App(a, b) => {
                    mentions_const(a, name) || mentions_const(b, name)
                }
                StirTerm::Lam(_, _, b) => mentions_const(b, name),
                StirTerm::Ctor { args, .. } | StirTerm::IndType { args, .. } => {
                    args.iter().any(|a| mentions_const(a, name))
                }
                _ => false,
            }
        }
        if def.rec_args.is_empty() {
            if mentions_const(&clause.rhs, &def.name)
                || clause
                    .guard
                    .as_ref()
                    .is_some_and(|g| mentions_const(g, &def.name))
            {
                return fail(
                    "termination",
                    format!(
                        "{} is recursive but declares no decreasing argument",
                        def.name
                    ),
                );
            }
            return Ok(());
        }
        // Variables bound strictly inside a constructor pattern, per
        // dispatch position (indices relative to the clause scope).
        let total: usize = clause.pats.iter().map(Pat::n_binders).sum();
        let mut next = 0usize;
        let mut strict: Vec<Vec<usize>> = vec![Vec::new(); clause.pats.len()];
        for (i, pat) in clause.pats.iter().enumerate() {
            let before = next;
            let _ = pat_term(pat, total, &mut next);
            if let Pat::Ctor { .. } = pat {
                for k in before..next {
                    strict[i].push(total - 1 - k);
                }
            }
        }
        let ok_call = |args: &[&StirTerm], depth: usize| -> bool {
            def.rec_args.iter().any(|&r| {
                args.get(r).is_some_and(|a| {
                    let (h, _) = a.spine();
                    match h {
                        StirTerm::Var(i) => {
                            *i >= depth
                                && strict.iter().any(|s| s.contains(&(i - depth)))
                        }
                        _ => false,
                    }
                })
            })
        };
        fn walk(
            t: &StirTerm,
            depth: usize,
            name: &str,
            ok_call: &dyn Fn(&[&StirTerm], usize) -> bool,
        ) -> Result<(), StirTypeError> {
            let (head, args) = t.spine();
            if let StirTerm::Const(n) = head {
                if &**n == name {
                    if !ok_call(&args, depth) {
                        return fail(
                            "termination",
                            format!("recursive call of {name} is not structurally decreasing"),
                        );
                    }
                    for a in &args {
                        // Arguments may not hide further bad self-calls.
                        walk(a, depth, name, ok_call)?;
                    }
                    return Ok(());
                }
            }
            match t {
                StirTerm::Pi(_, a, b) => {
                    walk(a, depth, name, ok_call)?;
                    walk(b, depth + 1, name, ok_call)
                }
                StirTerm::Lam(_, _, b) => walk(b, depth + 1, name, ok_call),
                StirTerm::App(a, b) => {
                    walk(a, depth, name, ok_call)?;
                    walk(b, depth, name, ok_call)
                }
                StirTerm::Ctor { args, .. } | StirTerm::IndType { args, .. } => {
                    for a in args {
                        walk(a, depth, name, ok_call)?;
                    }
                    Ok(())
                }
                _ => Ok(()),
            }
        }
        walk(&clause.rhs, 0, &def.name, &ok_call)?;
        if let Some(g) = &clause.guard {
            walk(g, 0, &def.name, &ok_call)?;
        }
        Ok(())
    }
}

/// Build the term a pattern stands for, with binder `k` (in binding order)
/// mapped to de Bruijn index `total - 1 - k`.
fn pat_term(pat: &Pat, total: usize, next: &mut usize) -> StirTerm {
    match pat {
        Pat::Var(_) => {
            let k = *next;
            *next += 1;
            StirTerm::Var(total - 1 - k)
        }
        Pat::Ctor { ind, ctor, args } => StirTerm::Ctor {
            ind: ind.clone(),
            ctor: *ctor,
            args: args.iter().map(|p| pat_term(p, total, next)).collect(),
        },
    }
}
