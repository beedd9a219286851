//! The pair groupoid on n points gives the n x n matrices: a factor.

use groupoid_vna::constructors::full_relation;
use groupoid_vna::{factoriality_report, Cocycle, Tolerances, TwistedVna};

fn main() {
    for n in 1..=4 {
        let g = full_relation(n);
        let v = TwistedVna::untwisted(&g).expect("nonsingular");
        let r = factoriality_report(&g, &Cocycle::trivial(&g), &Tolerances::default()).expect("report");
        println!(
            "n = {n}: dim L(G) = {}, dim center = {}, icc = {}, factor = {}, {}",
            v.left_algebra().dim(),
            v.center().dim(),
            r.icc,
            r.factor,
            r.verdict
        );
    }
}
