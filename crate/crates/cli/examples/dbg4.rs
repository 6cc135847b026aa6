use grind_core::sig::Env;
use grind_core::stir::prelude::Gen;

fn main() {
    let env = Env::new();
    let gen = Gen { env: &env, max_level: 2 };
    let p = gen.generate().unwrap();
    let comp1 = p.def("comp1").unwrap();
    println!("comp1 clause 21 pats: {:?}", comp1.clauses[21].pats);
    println!("comp1 clause 21 rhs:  {:?}", comp1.clauses[21].rhs);
    let cast2 = p.def("cast2").unwrap();
    println!("cast2 clause 13 pats: {:?}", cast2.clauses[13].pats);
    println!("cast2 clause 13 rhs:  {:?}", cast2.clauses[13].rhs);
}
