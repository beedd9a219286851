//! Reports over seeded random instances.

use groupoid_vna::cocycle::normalize_cocycle;
use groupoid_vna::constructors::{random_twisted, RandomParams};
use groupoid_vna::{factoriality_report, Tolerances};

fn main() {
    let params = RandomParams::default();
    let tol = Tolerances::default();
    let (mut factors, mut icc, mut consistent) = (0, 0, 0);
    for seed in 0..40 {
        let t = random_twisted(&params, seed);
        let w = normalize_cocycle(&t.groupoid, &t.cocycle);
        let r = factoriality_report(&t.groupoid, &w, &tol).expect("report");
        factors += r.factor as usize;
        icc += r.twisted_icc as usize;
        consistent += r.consistent() as usize;
        println!("{seed:>3} units {:>2} arrows {:>3} center {:>2} {}", r.units, r.arrows, r.center_dim, r.verdict);
    }
    println!("factors {factors}, twisted icc {icc}, consistent {consistent} / 40");
}
