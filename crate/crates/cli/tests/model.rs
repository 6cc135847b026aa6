//! Model-side tests: the generated prelude passes the internal checker,
//! translated terms are well-typed in the target, and target evaluation
//! agrees with the kernel.

use grind::driver::process_module;
use grind::parser::{parse_expr, parse_module};
use grind_core::context::Context;
use grind_core::elaborate::{elaborate_expr, Globals};
use grind_core::normalize::normalize;
use grind_core::sig::Env;
use grind_core::stir::check::StirChecker;
use grind_core::stir::eval::StirMachine;
use grind_core::stir::prelude::Gen;
use grind_core::stir::term::Prelude;
use grind_core::stir::translate::{max_level_of, translate};
use grind_core::term::Term;
use grind_core::typing::cast_synth;

fn load_globals() -> Globals {
    let src = std::fs::read_to_string(format!(
        "{}/tests/fixtures/prelude.grind",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    let decls = parse_module(&src).unwrap();
    process_module(&decls).unwrap().globals
}

fn gen_for(env: &Env) -> Gen<'_> {
    Gen { env, max_level: 2 }
}

fn prelude_for(env: &Env) -> Prelude {
    gen_for(env).generate().expect("prelude generation")
}

#[test]
fn empty_env_prelude_checks() {
    let env = Env::new();
    let gen = Gen {
        env: &env,
        max_level: 2,
    };
    let p = gen.generate().unwrap();
    StirChecker::new(&p).check_prelude().unwrap_or_else(|e| {
        panic!("prelude failed the internal checker: {e}");
    });
}

#[test]
fn program_prelude_checks() {
    let globals = load_globals();
    let p = prelude_for(&globals.env);
    StirChecker::new(&p).check_prelude().unwrap_or_else(|e| {
        panic!("prelude failed the internal checker: {e}");
    });
}

fn roundtrip_value(globals: &Globals, src: &str) {
    let env = &globals.env;
    let s = parse_expr(src).unwrap();
    let r = elaborate_expr(globals, &s, None).unwrap();
    let gen = gen_for(env);
    let _ = max_level_of(&r.term);
    let p = gen.generate().unwrap();
    // Translated type preservation: the translation checks at El ⟦T⟧.
    let checker = StirChecker::new(&p);
    let tr = translate(env, &gen, &r.term)
        .unwrap_or_else(|e| panic!("translation failed for `{src}`: {e}"));
    let ty = cast_synth(env, &Context::new(), &r.term).unwrap();
    let ty_tr = translate(env, &gen, &ty)
        .unwrap_or_else(|e| panic!("type translation failed for `{src}`: {e}"));
    let lvl = {
        // universe of ty
        let k = cast_synth(env, &Context::new(), &ty).unwrap();
        match normalize(env, &Context::new(), &k, &Term::ty(9)).unwrap() {
            Term::Type(l) => l.0,
            other => panic!("not a type: {other:?}"),
        }
    };
    checker
        .check(
            &[],
            &tr,
            &grind_core::stir::term::StirTerm::app(
                grind_core::stir::term::StirTerm::Const(
                    grind_core::stir::prelude::ModelNames::el(lvl).into(),
                ),
                ty_tr,
            ),
        )
        .unwrap_or_else(|e| panic!("translated term ill-typed for `{src}`: {e}"));
    // Normalization through the model matches the kernel (value-level).
    let mut m = StirMachine::new(&p, 4_000_000);
    let nf = m.norm(&tr).unwrap();
    let kernel_nf = normalize(env, &Context::new(), &r.term, &r.ty).unwrap();
    let back = grind_core::stir::back::back_translate(env, &gen, &p, &nf, &kernel_ty_of(env, &r.ty))
        .unwrap_or_else(|e| panic!("back-translation failed for `{src}`: {e:?}"));
    assert_eq!(
        back, kernel_nf,
        "norm-by-translation mismatch for `{src}`"
    );
}

fn kernel_ty_of(env: &Env, ty: &Term) -> Term {
    normalize(env, &Context::new(), ty, &Term::ty(9)).unwrap()
}

#[test]
fn translation_roundtrips_basic_values() {
    let globals = load_globals();
    for src in [
        "true",
        "false",
        "plus 2 3",
        "lt 2 3",
        "(\\x. x) :: Bool -> Bool",
        "(if (lt 1 2) then 4 else 5) :: Nat",
    ] {
        roundtrip_value(&globals, src);
    }
}

#[test]
fn simulation_on_basic_programs() {
    let globals = load_globals();
    let env = &globals.env;
    let gen = gen_for(env);
    let p = gen.generate().unwrap();
    for src in [
        "plus 1 2",
        "lt 2 3",
        "(if (lt 0 1) then 1 else 0) :: Nat",
        "(Cons 1 1.5 (Cons 0 2.5 Nil)) :: Vec Float 2",
        "(Cons ? 3.3 (Nil :: Vec Float ?)) :: Vec Float (suc ?)",
        "((Cons ? 3.3 (Nil :: Vec Float ?)) :: Vec Float (suc ?)) :: Vec Float 2",
        "(true :: ?1) :: Bool",
    ] {
        let s = parse_expr(src).unwrap();
        let r = elaborate_expr(&globals, &s, None).unwrap();
        let report = grind_core::stir::sim::check_simulation(env, &gen, &p, &r.term)
            .unwrap_or_else(|e| panic!("simulation failed for `{src}`: {e}"));
        assert!(report.target_steps >= report.kernel_steps || report.kernel_steps == 0,
            "step dominance failed for `{src}`: {} vs {}", report.target_steps, report.kernel_steps);
    }
}

#[test]
fn emit_parse_fixpoint() {
    let globals = load_globals();
    let gen = gen_for(&globals.env);
    let p = gen.generate().unwrap();
    let text = grind_core::stir::emit::emit_readable(&p, None);
    let (p2, main) = grind_core::stir::emit::parse_readable(&text)
        .unwrap_or_else(|e| panic!("emitted model failed to re-parse: {e:?}"));
    assert!(main.is_none());
    assert_eq!(p.inductives.len(), p2.inductives.len());
    assert_eq!(p.defs.len(), p2.defs.len());
    for (a, b) in p.inductives.iter().zip(&p2.inductives) {
        assert_eq!(a, b, "inductive {} does not round-trip", a.name);
    }
    for (a, b) in p.defs.iter().zip(&p2.defs) {
        let mut b2 = b.clone();
        b2.trusted_termination = a.trusted_termination;
        assert_eq!(*a, b2, "definition {} does not round-trip", a.name);
    }
    // Deterministic output.
    let text2 = grind_core::stir::emit::emit_readable(&p, None);
    assert_eq!(text, text2);
}
