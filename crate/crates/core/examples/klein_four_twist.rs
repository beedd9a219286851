//! A 2-cocycle on Z/2 x Z/2 turns a commutative algebra into M_2.

use groupoid_vna::cocycle::{central_set_search, kleppner_holds, normalize_cocycle, twisted_icc};
use groupoid_vna::constructors::{group_groupoid, klein_four_cocycle, FiniteGroupTable};
use groupoid_vna::{Cocycle, TwistedVna};

fn main() {
    let g = group_groupoid(&FiniteGroupTable::klein_four());
    let omega = normalize_cocycle(&g, &klein_four_cocycle(&g));
    for (label, w) in [("trivial", Cocycle::trivial(&g)), ("twisted", omega)] {
        let v = TwistedVna::new(&g, &w).expect("normalized");
        println!(
            "{label}: center dim {}, twisted icc {}, Kleppner {}, central set {:?}",
            v.center().dim(),
            twisted_icc(&g, &w).icc,
            kleppner_holds(&g, &w).holds,
            central_set_search(&g, &w).map(|c| c.support.names(&g)),
        );
    }
}
