//! End-to-end pipeline tests through the parser, elaborator and evaluators.

use grind::driver::{process_module, run_term};
use grind::parser::{parse_expr, parse_module};
use grind_core::context::Context;
use grind_core::elaborate::{count_casts, elaborate_expr, Globals};
use grind_core::normalize::{normalize, ExactOutcome};
use grind_core::term::Term;

fn load(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR")))
        .expect("fixture")
}

fn check_module(src: &str) -> grind::driver::CheckedModule {
    let decls = parse_module(src).expect("parse");
    process_module(&decls).unwrap_or_else(|d| panic!("module rejected: {}", d.render(false)))
}

fn eval_expr(globals: &Globals, src: &str) -> Term {
    let s = parse_expr(src).expect("parse expr");
    let r = elaborate_expr(globals, &s, None)
        .unwrap_or_else(|e| panic!("elaboration failed for `{src}`: {e}"));
    match run_term(globals, &r.term, 1_000_000) {
        ExactOutcome::Finished { value, .. } => value,
        ExactOutcome::OutOfFuel { steps, .. } => panic!("`{src}` out of fuel after {steps}"),
    }
}

fn nat_of(t: &Term) -> Option<u64> {
    match t {
        Term::Ctor { ind, ctor, fields, .. } if &**ind == "Nat" => match ctor {
            0 => Some(0),
            1 => nat_of(&fields[0]).map(|n| n + 1),
            _ => None,
        },
        _ => None,
    }
}

/// Decode a closed Vec Float value into its mantissas.
fn vec_of(t: &Term) -> Option<Vec<u64>> {
    match t {
        Term::Ctor { ind, ctor, fields, .. } if &**ind == "Vec" => match ctor {
            0 => Some(vec![]),
            1 => {
                let mut rest = vec_of(&fields[2])?;
                let m = match &fields[1] {
                    Term::Ctor { ind, fields, .. } if &**ind == "Float" => nat_of(&fields[0])?,
                    _ => return None,
                };
                let mut out = vec![m];
                out.append(&mut rest);
                Some(out)
            }
            _ => None,
        },
        _ => None,
    }
}

#[test]
fn prelude_checks_and_computes() {
    let module = check_module(&load("prelude.grind"));
    let g = &module.globals;
    assert_eq!(nat_of(&eval_expr(g, "plus 2 3")), Some(5));
    assert_eq!(eval_expr(g, "lt 2 3"), Term::True);
    assert_eq!(eval_expr(g, "lt 3 3"), Term::False);
    assert_eq!(eval_expr(g, "lt 4 3"), Term::False);
    assert_eq!(eval_expr(g, "ltF 1.5 3.5"), Term::True);
    assert_eq!(eval_expr(g, "gtF 1.5 3.5"), Term::False);
}

#[test]
fn prelude_is_cast_free() {
    // Conservativity on the statically typed prelude: zero casts inserted.
    let module = check_module(&load("prelude.grind"));
    for (name, res) in &module.defs {
        assert_eq!(
            res.casts_inserted,
            0,
            "static definition {name} elaborated with casts"
        );
    }
}

#[test]
fn vectors_carry_evidence() {
    let module = check_module(&load("prelude.grind"));
    let g = &module.globals;
    // A precise vector: Cons 1 1.5 (Cons 0 2.5 Nil) : Vec Float 2
    let v = eval_expr(g, "(Cons 1 1.5 (Cons 0 2.5 Nil)) :: Vec Float 2");
    assert_eq!(vec_of(&v), Some(vec![15, 25]));
}

#[test]
fn nil_at_unknown_length_keeps_evidence() {
    // `Nil : Vec Float ?` carries evidence refl_0⟨?, 0⟩.
    let module = check_module(&load("prelude.grind"));
    let g = &module.globals;
    let s = parse_expr("Nil :: Vec Float ?").unwrap();
    let r = elaborate_expr(g, &s, None).unwrap();
    let ctx = Context::new();
    let v = normalize(&g.env, &ctx, &r.term, &r.ty).unwrap();
    match &v {
        Term::Ctor { ind, ctor, fields, .. } => {
            assert_eq!(&**ind, "Vec");
            assert_eq!(*ctor, 0);
            match &fields[0] {
                Term::Refl { ev, .. } => {
                    assert_eq!(nat_of(ev), Some(0), "evidence should be 0, got {ev:?}");
                }
                other => panic!("expected refl evidence, got {other:?}"),
            }
        }
        other => panic!("expected a Nil value, got {other:?}"),
    }
}

#[test]
fn sort_typechecks() {
    let module = check_module(&load("sort.grind"));
    assert!(module.defs.iter().any(|(n, _)| &**n == "sort"));
}

#[test]
fn sort_sorts_duplicate_free_inputs() {
    let module = check_module(&load("sort.grind"));
    let g = &module.globals;
    let v = eval_expr(
        g,
        "sort 4 (Cons 3 3.5 (Cons 2 1.5 (Cons 1 9.0 (Cons 0 2.5 Nil))))",
    );
    let got = vec_of(&v).unwrap_or_else(|| panic!("not a vector: {v:?}"));
    assert_eq!(got, vec![15, 25, 35, 90]);
}

#[test]
fn sort_raises_err_on_duplicates() {
    let module = check_module(&load("sort.grind"));
    let g = &module.globals;
    let s = parse_expr("sort 2 (Cons 1 3.3 (Cons 0 3.3 Nil))").unwrap();
    let r = elaborate_expr(g, &s, None).unwrap();
    match run_term(g, &r.term, 1_000_000) {
        ExactOutcome::Finished { value, .. } => match &value {
            Term::Err(ty) => {
                let printed = grind_core::pretty::pretty(ty);
                assert!(
                    printed.contains("Vec") && printed.contains("Float"),
                    "err type should name the vector type, got {printed}"
                );
            }
            other => panic!("expected err, got {other:?}"),
        },
        ExactOutcome::OutOfFuel { steps, .. } => panic!("out of fuel after {steps}"),
    }
}

#[test]
fn eager_index_evidence_composes() {
    // Cons ? 3.3 (Nil :: Vec Float ?) carries evidence suc 0 (= 1) between
    // suc ? and suc ?.
    let module = check_module(&load("prelude.grind"));
    let g = &module.globals;
    let s = parse_expr("(Cons ? 3.3 (Nil :: Vec Float ?)) :: Vec Float (suc ?)").unwrap();
    let r = elaborate_expr(g, &s, None).unwrap();
    let ctx = Context::new();
    let v = normalize(&g.env, &ctx, &r.term, &r.ty).unwrap();
    match &v {
        Term::Ctor { ind, ctor, fields, .. } => {
            assert_eq!(&**ind, "Vec");
            assert_eq!(*ctor, 1, "expected a Cons value");
            match fields.last().unwrap() {
                Term::Refl { ev, .. } => {
                    assert_eq!(
                        nat_of(ev),
                        Some(1),
                        "composed evidence should be 1, got {ev:?}"
                    );
                }
                other => panic!("expected refl evidence, got {other:?}"),
            }
        }
        other => panic!("expected a Cons value, got {other:?}"),
    }
}

#[test]
fn casting_composed_vector_to_length_two_errs() {
    let module = check_module(&load("prelude.grind"));
    let g = &module.globals;
    let s =
        parse_expr("((Cons ? 3.3 (Nil :: Vec Float ?)) :: Vec Float (suc ?)) :: Vec Float 2")
            .unwrap();
    let r = elaborate_expr(g, &s, None).unwrap();
    let ctx = Context::new();
    let v = normalize(&g.env, &ctx, &r.term, &r.ty).unwrap();
    assert!(v.is_err(), "expected err, got {v:?}");
}

#[test]
fn static_reference_accepts_prelude() {
    let decls = parse_module(&load("prelude.grind")).unwrap();
    grind_core::static_ref::check_static_module(&decls).expect("static checker accepts");
}

#[test]
fn cast_count_metric() {
    let module = check_module(&load("sort.grind"));
    // The gradual sort itself inserts casts.
    let sort = module.defs.iter().find(|(n, _)| &**n == "sort").unwrap();
    assert!(count_casts(&sort.1.term) > 0);
}
