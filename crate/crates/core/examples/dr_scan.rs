//! Isotropy of the Deaconu-Renault groupoid of a self-map.

use groupoid_vna::constructors::{deaconu_renault, essentially_free, DeaconuRenaultSystem};
use groupoid_vna::groupoid::UnitSpace;

fn main() {
    // 0 -> 1 -> 2 -> 1, so 1 and 2 are 2-periodic and 0 is a tail
    let d = DeaconuRenaultSystem { space: UnitSpace::uniform(3), sigma: vec![1, 2, 1], bound: 4 };
    let v = deaconu_renault(&d).expect("valid system");
    println!("{} arrows, periods {:?}, tails {:?}", v.arrows.len(), v.periods, v.tails);
    for (k, xs) in &v.b_n {
        println!("B_{k} = {xs:?}, measure {}", v.b_n_measure[k]);
    }
    let f = essentially_free(&d).expect("valid system");
    println!("essentially free: {} ({})", f.essentially_free, f.note);
}
