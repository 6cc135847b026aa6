use grind::driver::process_module;
use grind::parser::parse_module;
use grind_core::stir::prelude::Gen;

fn main() {
    let src = std::fs::read_to_string("crates/cli/tests/fixtures/prelude.grind").unwrap();
    let decls = parse_module(&src).unwrap();
    let globals = process_module(&decls).unwrap().globals;
    let gen = Gen { env: &globals.env, max_level: 2 };
    let p = gen.generate().unwrap();
    let cast0 = p.def("cast0").unwrap();
    for (i, c) in cast0.clauses.iter().enumerate() {
        if i == 27 {
            println!("pats: {:?}", c.pats);
            println!("rhs: {:?}", c.rhs);
        }
    }
}
