use grind::driver::process_module;
use grind::parser::{parse_expr, parse_module};
use grind_core::elaborate::elaborate_expr;
use grind_core::stir::prelude::Gen;

fn main() {
    let src = std::fs::read_to_string("crates/cli/tests/fixtures/prelude.grind").unwrap();
    let decls = parse_module(&src).unwrap();
    let globals = process_module(&decls).unwrap().globals;
    let env = &globals.env;
    let gen = Gen { env, max_level: 2 };
    let p = gen.generate().unwrap();
    let s = parse_expr("plus 1 2").unwrap();
    let r = elaborate_expr(&globals, &s, None).unwrap();
    match grind_core::stir::sim::check_simulation(env, &gen, &p, &r.term) {
        Ok(rep) => {
            println!("kernel={} target={}", rep.kernel_steps, rep.target_steps);
            for st in &rep.steps {
                println!("  {} {} -> {}", st.index, st.rule, st.target_steps);
            }
        }
        Err(e) => println!("ERR {e}"),
    }
}
