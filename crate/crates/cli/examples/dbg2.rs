use grind::driver::{process_module, run_term};
use grind::parser::{parse_expr, parse_module};
use grind_core::elaborate::elaborate_expr;
use grind_core::normalize::ExactOutcome;
use grind_core::pretty::pretty;

fn main() {
    let src = std::fs::read_to_string("crates/cli/tests/fixtures/sort.grind").unwrap();
    let decls = parse_module(&src).unwrap();
    let m = process_module(&decls).unwrap();
    let g = &m.globals;
    for expr in [
        "filter (\\x. ltF x 3.5) 1 (Cons 0 1.5 Nil)",
        "sort 0 Nil",
        "sort 1 (Cons 0 1.5 Nil)",
        "sort 2 (Cons 1 1.5 (Cons 0 3.5 Nil))",
        "sort 2 (Cons 1 3.5 (Cons 0 1.5 Nil))",
    ] {
        let s = parse_expr(expr).unwrap();
        let r = match elaborate_expr(g, &s, None) {
            Ok(r) => r,
            Err(e) => { println!("{expr}\n  ELAB ERR {e}"); continue; }
        };
        match run_term(g, &r.term, 2_000_000) {
            ExactOutcome::Finished { value, steps } => {
                println!("{expr}\n  = {} ({steps} steps)", pretty(&value));
            }
            ExactOutcome::OutOfFuel { steps, .. } => println!("{expr}\n  FUEL {steps}"),
        }
    }
}
