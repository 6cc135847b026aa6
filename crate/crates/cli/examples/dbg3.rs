use grind_core::sig::Env;
use grind_core::stir::check::StirChecker;
use grind_core::stir::prelude::Gen;

fn main() {
    let env = Env::new();
    let gen = Gen { env: &env, max_level: 2 };
    let p = gen.generate().unwrap();
    let checker = StirChecker::new(&p);
    for ind in &p.inductives {
        if let Err(e) = checker_check_ind(&checker, ind) {
            println!("INDUCTIVE {} FAILS: {e}", ind.name);
        }
    }
    for def in &p.defs {
        if let Err(e) = checker.check_def_public(def) {
            println!("DEF {} FAILS: {e}", def.name);
        }
    }
    println!("done");
}

fn checker_check_ind(
    c: &StirChecker,
    ind: &grind_core::stir::term::StirInductive,
) -> Result<(), grind_core::stir::check::StirTypeError> {
    c.check_inductive_public(ind)
}
