//! Command implementations. Every command returns one of the documented
//! exit codes:
//!
//! * 0 — success
//! * 1 — static or gradual type error (including parse errors)
//! * 2 — the program evaluated to a run-time `err` value
//! * 3 — fuel exhausted under exact semantics
//! * 4 — internal invariant violation

use std::rc::Rc;

use grind_core::context::Context;
use grind_core::elaborate::{declare, elaborate_expr, ElabResult, Globals};
use grind_core::normalize::{
    self, run_exact_traced, EvalMode, ExactOutcome, Machine, TraceEntry, DEFAULT_CEILING,
    DEFAULT_FUEL,
};
use grind_core::pretty::pretty;
use grind_core::static_ref;
use grind_core::surface::Decl;
use grind_core::term::Term;

use crate::diag::{from_elab, Diagnostic};
use crate::json::{CoreDef, CoreDump, CORE_DUMP_VERSION};
use crate::parser::{parse_expr, parse_module};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TYPE_ERROR: i32 = 1;
pub const EXIT_RUNTIME_ERR: i32 = 2;
pub const EXIT_FUEL: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

pub struct CheckedModule {
    pub globals: Globals,
    pub defs: Vec<(Rc<str>, ElabResult)>,
}

/// Elaborate and kernel-check every declaration in a module.
pub fn process_module(decls: &[Decl]) -> Result<CheckedModule, Diagnostic> {
    let mut globals = Globals::default();
    let mut defs = Vec::new();
    for d in decls {
        match declare(&mut globals, d) {
            Ok(Some(res)) => {
                if let Decl::Def(def) = d {
                    defs.push((def.name.clone(), res));
                }
            }
            Ok(None) => {}
            Err(e) => return Err(from_elab(&e)),
        }
    }
    Ok(CheckedModule { globals, defs })
}

pub fn fuel_from_env(cli_fuel: Option<usize>) -> usize {
    if let Some(f) = cli_fuel {
        return f;
    }
    std::env::var("GRIND_FUEL")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_FUEL)
}

pub fn cmd_check(src: &str, static_mode: bool, json: bool, dump_core: Option<&str>) -> i32 {
    let decls = match parse_module(src) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{}", Diagnostic::error(e.to_string()).render(json));
            return EXIT_TYPE_ERROR;
        }
    };
    if static_mode {
        return match static_ref::check_static_module(&decls) {
            Ok((_env, _)) => {
                println!("ok (static)");
                EXIT_OK
            }
            Err(e) => {
                eprintln!("{}", Diagnostic::error(e.to_string()).render(json));
                EXIT_TYPE_ERROR
            }
        };
    }
    match process_module(&decls) {
        Ok(module) => {
            let total_casts: usize = module.defs.iter().map(|(_, r)| r.casts_inserted).sum();
            println!(
                "ok: {} definitions, {} casts inserted",
                module.defs.len(),
                total_casts
            );
            if let Some(path) = dump_core {
                let dump = CoreDump {
                    version: CORE_DUMP_VERSION,
                    env: module.globals.env.clone(),
                    defs: module
                        .defs
                        .iter()
                        .map(|(n, r)| CoreDef {
                            name: n.to_string(),
                            term: r.term.clone(),
                            ty: r.ty.clone(),
                        })
                        .collect(),
                };
                match crate::json::encode(&dump) {
                    Ok(text) => {
                        if let Err(e) = std::fs::write(path, text) {
                            eprintln!("{}", Diagnostic::error(e.to_string()).render(json));
                            return EXIT_INTERNAL;
                        }
                    }
                    Err(e) => {
                        eprintln!("{}", Diagnostic::error(e.to_string()).render(json));
                        return EXIT_INTERNAL;
                    }
                }
            }
            EXIT_OK
        }
        Err(d) => {
            eprintln!("{}", d.render(json));
            EXIT_TYPE_ERROR
        }
    }
}

fn render_trace(trace: &[TraceEntry]) -> String {
    trace
        .iter()
        .map(|e| {
            let path = e
                .path
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(".");
            format!("{} | {} | {}", e.rule, path, e.snippet)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// The diagnostic for a run that produced `err`: name the failing rule and
/// the type at which the error lives (the target of the failed cast).
fn err_diagnostic(value: &Term, trace: &[TraceEntry]) -> Diagnostic {
    let ty = match value {
        Term::Err(t) => pretty(t),
        _ => "?".to_string(),
    };
    let last_err_rule = trace
        .iter()
        .rev()
        .find(|e| e.rule.contains('℧') || e.rule == "Eq")
        .map(|e| e.rule.to_string());
    let mut d = Diagnostic::error(format!("the program evaluated to err at type {ty}"));
    if let Some(r) = last_err_rule {
        d = d.with_rule(r);
    }
    d
}

pub fn cmd_run(
    src: &str,
    exact: bool,
    fuel: Option<usize>,
    trace: bool,
    json: bool,
) -> i32 {
    let decls = match parse_module(src) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{}", Diagnostic::error(e.to_string()).render(json));
            return EXIT_TYPE_ERROR;
        }
    };
    let module = match process_module(&decls) {
        Ok(m) => m,
        Err(d) => {
            eprintln!("{}", d.render(json));
            return EXIT_TYPE_ERROR;
        }
    };
    let (name, main) = match module.defs.iter().find(|(n, _)| &**n == "main") {
        Some((n, r)) => (n.clone(), r.clone()),
        None => match module.defs.last() {
            Some((n, r)) => (n.clone(), r.clone()),
            None => {
                eprintln!(
                    "{}",
                    Diagnostic::error("module has no definitions to run").render(json)
                );
                return EXIT_TYPE_ERROR;
            }
        },
    };
    let env = &module.globals.env;
    if exact {
        let fuel = fuel_from_env(fuel);
        let (outcome, tr) = run_exact_traced(env, &main.term, fuel, trace);
        match outcome {
            ExactOutcome::Finished { value, steps } => {
                if trace {
                    println!("{}", render_trace(&tr));
                }
                println!("{name} = {}", pretty(&value));
                println!("({steps} steps)");
                if value.is_err() {
                    eprintln!("{}", err_diagnostic(&value, &tr).render(json));
                    EXIT_RUNTIME_ERR
                } else {
                    EXIT_OK
                }
            }
            ExactOutcome::OutOfFuel { steps, .. } => {
                eprintln!(
                    "{}",
                    Diagnostic::error(format!("out of fuel after {steps} steps")).render(json)
                );
                EXIT_FUEL
            }
        }
    } else {
        let ctx = Context::new();
        match normalize::normalize_with(env, &ctx, &main.term, &main.ty, DEFAULT_CEILING, trace)
        {
            Ok((value, tr)) => {
                if trace {
                    println!("{}", render_trace(&tr));
                }
                println!("{name} = {}", pretty(&value));
                if value.is_err() {
                    eprintln!("{}", err_diagnostic(&value, &tr).render(json));
                    EXIT_RUNTIME_ERR
                } else {
                    EXIT_OK
                }
            }
            Err(e) => {
                eprintln!("{}", Diagnostic::error(e.to_string()).render(json));
                EXIT_INTERNAL
            }
        }
    }
}

pub fn cmd_normalize(module_src: Option<&str>, expr: &str, json: bool) -> i32 {
    let globals = match module_src {
        Some(src) => {
            let decls = match parse_module(src) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("{}", Diagnostic::error(e.to_string()).render(json));
                    return EXIT_TYPE_ERROR;
                }
            };
            match process_module(&decls) {
                Ok(m) => m.globals,
                Err(d) => {
                    eprintln!("{}", d.render(json));
                    return EXIT_TYPE_ERROR;
                }
            }
        }
        None => Globals::default(),
    };
    let surface = match parse_expr(expr) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}", Diagnostic::error(e.to_string()).render(json));
            return EXIT_TYPE_ERROR;
        }
    };
    let elaborated = match elaborate_expr(&globals, &surface, None) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}", from_elab(&e).render(json));
            return EXIT_TYPE_ERROR;
        }
    };
    let ctx = Context::new();
    match normalize::normalize(&globals.env, &ctx, &elaborated.term, &elaborated.ty) {
        Ok(v) => {
            println!("{}", pretty(&v));
            if v.is_err() {
                EXIT_RUNTIME_ERR
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("{}", Diagnostic::error(e.to_string()).render(json));
            EXIT_INTERNAL
        }
    }
}

/// Normalize one elaborated term (library entry used by the REPL).
pub fn normalize_term(globals: &Globals, t: &Term, ty: &Term) -> Result<Term, String> {
    let ctx = Context::new();
    normalize::normalize(&globals.env, &ctx, t, ty).map_err(|e| e.to_string())
}

/// Reduce a term exactly (library entry used by the REPL).
pub fn run_term(globals: &Globals, t: &Term, fuel: usize) -> ExactOutcome {
    let mut m = Machine::new(&globals.env, EvalMode::Exact, fuel);
    match m.norm_full(t) {
        Ok(value) => ExactOutcome::Finished {
            value,
            steps: m.steps,
        },
        Err(_) => ExactOutcome::OutOfFuel {
            steps: m.steps,
            trace: vec![],
        },
    }
}
