//! Lockstep simulation checking. For each kernel step `t -> t'`, the checker
//! verifies that the translations stay coherent (their target normal forms
//! agree, by confluence of the deterministic evaluator) and that the target's
//! distance-to-normal-form shrinks at least as fast as the kernel advances —
//! the strictly decreasing measure behind strong approximate normalization.
//! Steps whose successor is the error term are exempt, as in the simulation
//! statement.

use serde::Serialize;

use crate::normalize::{reduce_step, EvalMode, StepOutcome};
use crate::sig::Env;
use crate::term::Term;

use super::eval::StirMachine;
use super::prelude::Gen;
use super::term::{Prelude, StirTerm};
use super::translate::{translate, TransError};

#[derive(Debug, Clone, Serialize)]
pub struct SimStep {
    pub index: usize,
    pub rule: String,
    pub target_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub kernel_steps: usize,
    pub target_steps: usize,
    pub steps: Vec<SimStep>,
    /// The kernel value reached (pretty-printed).
    pub kernel_value: String,
}

#[derive(Debug)]
pub enum SimError {
    Translation(TransError),
    Broken {
        step: usize,
        rule: &'static str,
        kernel_trace: Vec<String>,
        detail: String,
    },
}

impl std::fmt::Display for SimError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimError::Translation(e) => write!(f, "translation failed: {e}"),
            SimError::Broken {
                step,
                rule,
                detail,
                ..
            } => write!(f, "simulation broken at step {step} ({rule}): {detail}"),
        }
    }
}

const TARGET_BOUND: usize = 20_000_000;
const KERNEL_BOUND: usize = 20_000;

fn distance(prelude: &Prelude, t: &StirTerm) -> Result<(usize, StirTerm), String> {
    let mut m = StirMachine::new(prelude, TARGET_BOUND);
    let nf = m.norm(t).map_err(|e| e.to_string())?;
    Ok((m.steps, nf))
}

/// Run the kernel and the target in lockstep on a closed, well-typed term.
pub fn check_simulation(
    env: &Env,
    gen: &Gen,
    prelude: &Prelude,
    t: &Term,
) -> Result<SimulationReport, SimError> {
    let mut steps: Vec<SimStep> = Vec::new();
    let mut kernel_cur = t.clone();
    let t0 = translate(env, gen, t).map_err(SimError::Translation)?;
    let (mut d_cur, mut nf_cur) = distance(prelude, &t0).map_err(|detail| SimError::Broken {
        step: 0,
        rule: "start",
        kernel_trace: vec![],
        detail,
    })?;
    let d0 = d_cur;
    let mut kernel_count = 0usize;
    let mut exempt = 0usize;

    loop {
        let outcome = reduce_step(env, &kernel_cur, EvalMode::Approximate);
        let (next, rule) = match outcome {
            StepOutcome::NormalForm => break,
            StepOutcome::Next { term, rule, .. } => (term, rule),
        };
        kernel_count += 1;
        if kernel_count > KERNEL_BOUND {
            return Err(SimError::Broken {
                step: kernel_count,
                rule,
                kernel_trace: vec![],
                detail: "kernel did not normalize within the simulation bound".into(),
            });
        }
        if next.is_err() {
            // The error successor is exempt per the simulation statement.
            exempt += 1;
            steps.push(SimStep {
                index: kernel_count,
                rule: rule.to_string(),
                target_steps: 0,
            });
            kernel_cur = next;
            // Re-anchor the measure at the translated error.
            let tr = translate(env, gen, &kernel_cur).map_err(SimError::Translation)?;
            let (d, nf) = distance(prelude, &tr).map_err(|detail| SimError::Broken {
                step: kernel_count,
                rule,
                kernel_trace: vec![],
                detail,
            })?;
            d_cur = d;
            nf_cur = nf;
            continue;
        }
        let tr = translate(env, gen, &next).map_err(SimError::Translation)?;
        let (d_next, nf_next) = distance(prelude, &tr).map_err(|detail| SimError::Broken {
            step: kernel_count,
            rule,
            kernel_trace: vec![crate::pretty::snippet(&kernel_cur, 120)],
            detail,
        })?;
        if nf_next != nf_cur {
            return Err(SimError::Broken {
                step: kernel_count,
                rule,
                kernel_trace: vec![crate::pretty::snippet(&kernel_cur, 120)],
                detail: "the target normal form changed across a kernel step".into(),
            });
        }
        let work = d_cur.saturating_sub(d_next);
        steps.push(SimStep {
            index: kernel_count,
            rule: rule.to_string(),
            target_steps: work,
        });
        // Cumulative dominance: the target must have spent at least one step
        // per (non-exempt) kernel step so far.
        let spent = d0 - d_next.min(d0);
        if spent + exempt < kernel_count {
            return Err(SimError::Broken {
                step: kernel_count,
                rule,
                kernel_trace: vec![crate::pretty::snippet(&kernel_cur, 120)],
                detail: format!(
                    "target work ({spent}) fell behind kernel steps ({kernel_count})"
                ),
            });
        }
        d_cur = d_next;
        kernel_cur = next;
    }
    Ok(SimulationReport {
        kernel_steps: kernel_count,
        target_steps: d0.saturating_sub(d_cur) + exempt,
        steps,
        kernel_value: crate::pretty::pretty(&kernel_cur),
    })
}
