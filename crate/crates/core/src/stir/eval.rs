//! Untyped normal-order evaluation for the static target. Definitions
//! reduce by first-match clause dispatch; a blocked clause (a constructor
//! pattern facing a neutral argument, or a neutral guard) leaves the whole
//! application stuck as a `Const` spine, which is what the back-translation
//! recognizes.

use thiserror::Error;

use super::term::{shift, subst_many, Clause, Pat, Prelude, StirTerm};

#[derive(Debug, Error)]
pub enum StirEvalError {
    #[error("stir evaluator exceeded its step ceiling ({0} steps): the target must be strongly normalizing")]
    Budget(usize),
}

pub struct StirMachine<'p> {
    pub prelude: &'p Prelude,
    pub steps: usize,
    pub ceiling: usize,
}

enum MatchOutcome {
    /// Bindings in pattern order (outermost binder first).
    Matched(Vec<StirTerm>),
    Mismatch,
    Blocked,
}

impl<'p> StirMachine<'p> {
    pub fn new(prelude: &'p Prelude, ceiling: usize) -> StirMachine<'p> {
        StirMachine {
            prelude,
            steps: 0,
            ceiling,
        }
    }

    fn tick(&mut self) -> Result<(), StirEvalError> {
        self.steps += 1;
        if self.steps > self.ceiling {
            Err(StirEvalError::Budget(self.steps))
        } else {
            Ok(())
        }
    }

    /// Reduce the head until no head rule applies (weak head normal form).
    pub fn whnf(&mut self, t: &StirTerm) -> Result<StirTerm, StirEvalError> {
        let mut cur = t.clone();
        loop {
            match self.head_step(&cur)? {
                Some(next) => {
                    self.tick()?;
                    cur = next;
                }
                None => return Ok(cur),
            }
        }
    }

    fn head_step(&mut self, t: &StirTerm) -> Result<Option<StirTerm>, StirEvalError> {
        // Beta at the head.
        if let StirTerm::App(f, a) = t {
            let fw = self.whnf_head_only(f)?;
            if let StirTerm::Lam(_, _, body) = &fw {
                return Ok(Some(super::term::subst0(body, a)));
            }
            // Delta: a Const spine at full arity.
            let (head, args) = t.spine();
            if let StirTerm::Const(name) = head {
                if let Some(def) = self.prelude.def(name) {
                    if args.len() >= def.arity {
                        let (dispatch, rest) = args.split_at(def.arity);
                        match self.dispatch(&def.clauses.clone(), dispatch)? {
                            Some(rhs) => {
                                let out = rest
                                    .iter()
                                    .fold(rhs, |acc, a| StirTerm::app(acc, (*a).clone()));
                                return Ok(Some(out));
                            }
                            None => return Ok(None),
                        }
                    }
                }
            }
            // If the function head itself stepped, rebuild.
            if fw != **f {
                return Ok(Some(StirTerm::App(fw.rc(), a.clone())));
            }
            return Ok(None);
        }
        Ok(None)
    }

    /// A cheaper whnf that does not recurse into dispatch (used to expose
    /// lambda heads).
    fn whnf_head_only(&mut self, t: &StirTerm) -> Result<StirTerm, StirEvalError> {
        self.whnf(t)
    }

    fn dispatch(
        &mut self,
        clauses: &[Clause],
        args: &[&StirTerm],
    ) -> Result<Option<StirTerm>, StirEvalError> {
        // Evaluate argument heads lazily and share the results.
        let mut arg_whnf: Vec<Option<StirTerm>> = vec![None; args.len()];
        'clauses: for clause in clauses {
            let mut binds: Vec<StirTerm> = Vec::new();
            for (i, pat) in clause.pats.iter().enumerate() {
                if arg_whnf[i].is_none() && matches!(pat, Pat::Ctor { .. }) {
                    arg_whnf[i] = Some(self.whnf(args[i])?);
                }
                let scrut = arg_whnf[i].as_ref().map(|t| t.clone());
                let against = scrut.unwrap_or_else(|| args[i].clone());
                match self.match_pat(pat, &against)? {
                    MatchOutcome::Matched(mut b) => binds.append(&mut b),
                    MatchOutcome::Mismatch => continue 'clauses,
                    MatchOutcome::Blocked => return Ok(None),
                }
            }
            if let Some(guard) = &clause.guard {
                let refs: Vec<&StirTerm> = binds.iter().collect();
                let g = subst_many(guard, &refs);
                let gv = self.whnf(&g)?;
                match &gv {
                    StirTerm::Ctor { ind, ctor, .. } if &**ind == "SBool" => {
                        if *ctor != 0 {
                            continue 'clauses;
                        }
                    }
                    _ => return Ok(None), // neutral guard: stuck
                }
            }
            let refs: Vec<&StirTerm> = binds.iter().collect();
            return Ok(Some(subst_many(&clause.rhs, &refs)));
        }
        Ok(None)
    }

    fn match_pat(
        &mut self,
        pat: &Pat,
        arg: &StirTerm,
    ) -> Result<MatchOutcome, StirEvalError> {
        match pat {
            Pat::Var(_) => Ok(MatchOutcome::Matched(vec![arg.clone()])),
            Pat::Ctor { ind, ctor, args } => {
                let v = self.whnf(arg)?;
                match &v {
                    StirTerm::Ctor {
                        ind: i2,
                        ctor: c2,
                        args: vargs,
                    } => {
                        if i2 != ind || c2 != ctor {
                            return Ok(MatchOutcome::Mismatch);
                        }
                        // Constructor patterns bind the ctor's trailing
                        // arguments (fields); leading parameter slots in the
                        // value are matched positionally from the end.
                        if args.len() > vargs.len() {
                            return Ok(MatchOutcome::Blocked);
                        }
                        let offset = vargs.len() - args.len();
                        let mut binds = Vec::new();
                        for (p, a) in args.iter().zip(vargs[offset..].iter()) {
                            match self.match_pat(p, a)? {
                                MatchOutcome::Matched(mut b) => binds.append(&mut b),
                                other => return Ok(other),
                            }
                        }
                        Ok(MatchOutcome::Matched(binds))
                    }
                    _ => Ok(MatchOutcome::Blocked),
                }
            }
        }
    }

    /// Full normal-order normalization.
    pub fn norm(&mut self, t: &StirTerm) -> Result<StirTerm, StirEvalError> {
        let w = self.whnf(t)?;
        Ok(match w {
            StirTerm::Sort(_) | StirTerm::Var(_) | StirTerm::Const(_) => w,
            StirTerm::Pi(n, a, b) => {
                StirTerm::Pi(n, self.norm(&a)?.rc(), self.norm(&b)?.rc())
            }
            StirTerm::Lam(n, ann, b) => {
                let ann2 = match ann {
                    Some(a) => Some(self.norm(&a)?.rc()),
                    None => None,
                };
                StirTerm::Lam(n, ann2, self.norm(&b)?.rc())
            }
            StirTerm::App(f, a) => {
                // Stuck application: normalize the parts.
                StirTerm::App(self.norm(&f)?.rc(), self.norm(&a)?.rc())
            }
            StirTerm::Ctor { ind, ctor, args } => StirTerm::Ctor {
                ind,
                ctor,
                args: args
                    .iter()
                    .map(|a| self.norm(a))
                    .collect::<Result<_, _>>()?,
            },
            StirTerm::IndType { ind, args } => StirTerm::IndType {
                ind,
                args: args
                    .iter()
                    .map(|a| self.norm(a))
                    .collect::<Result<_, _>>()?,
            },
        })
    }

    /// One leftmost-outermost step, if any (drives the simulation checker).
    pub fn step(&mut self, t: &StirTerm) -> Result<Option<StirTerm>, StirEvalError> {
        if let Some(next) = self.head_step(t)? {
            return Ok(Some(next));
        }
        match t {
            StirTerm::Sort(_) | StirTerm::Var(_) | StirTerm::Const(_) => Ok(None),
            StirTerm::Pi(n, a, b) => {
                if let Some(a2) = self.step(a)? {
                    return Ok(Some(StirTerm::Pi(n.clone(), a2.rc(), b.clone())));
                }
                if let Some(b2) = self.step(b)? {
                    return Ok(Some(StirTerm::Pi(n.clone(), a.clone(), b2.rc())));
                }
                Ok(None)
            }
            StirTerm::Lam(n, ann, b) => {
                if let Some(a) = ann {
                    if let Some(a2) = self.step(a)? {
                        return Ok(Some(StirTerm::Lam(n.clone(), Some(a2.rc()), b.clone())));
                    }
                }
                Ok(self
                    .step(b)?
                    .map(|b2| StirTerm::Lam(n.clone(), ann.clone(), b2.rc())))
            }
            StirTerm::App(f, a) => {
                if let Some(f2) = self.step(f)? {
                    return Ok(Some(StirTerm::App(f2.rc(), a.clone())));
                }
                if let Some(a2) = self.step(a)? {
                    return Ok(Some(StirTerm::App(f.clone(), a2.rc())));
                }
                Ok(None)
            }
            StirTerm::Ctor { ind, ctor, args } => {
                for (i, arg) in args.iter().enumerate() {
                    if let Some(a2) = self.step(arg)? {
                        let mut args2 = args.clone();
                        args2[i] = a2;
                        return Ok(Some(StirTerm::Ctor {
                            ind: ind.clone(),
                            ctor: *ctor,
                            args: args2,
                        }));
                    }
                }
                Ok(None)
            }
            StirTerm::IndType { ind, args } => {
                for (i, arg) in args.iter().enumerate() {
                    if let Some(a2) = self.step(arg)? {
                        let mut args2 = args.clone();
                        args2[i] = a2;
                        return Ok(Some(StirTerm::IndType {
                            ind: ind.clone(),
                            args: args2,
                        }));
                    }
                }
                Ok(None)
            }
        }
    }

    /// Count the deterministic steps to normal form.
    pub fn distance_to_normal(&mut self, t: &StirTerm) -> Result<(usize, StirTerm), StirEvalError> {
        let before = self.steps;
        let _ = shift(t, 0);
        let n = self.norm(t)?;
        Ok((self.steps - before, n))
    }
}
