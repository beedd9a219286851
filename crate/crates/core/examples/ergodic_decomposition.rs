//! Split a conjugacy class of an ergodic groupoid into bisections.

use groupoid_vna::conjugacy::{conjugacy_class, ergodic_class_decomposition, fiber_count};
use groupoid_vna::constructors::{transformation_groupoid, FiniteGroupTable};
use groupoid_vna::groupoid::UnitSpace;
use groupoid_vna::ArrowSet;

fn main() {
    // S_3 permuting three points; elements are named by their images
    let s3 = FiniteGroupTable::symmetric(3);
    let perm: Vec<Vec<usize>> = s3.names.iter().map(|n| n.bytes().map(|b| (b - b'0') as usize).collect()).collect();
    let g = transformation_groupoid(&s3, &|a, x| perm[a][x], UnitSpace::uniform(3)).expect("action");
    let t = g.find_arrow("102@x2").expect("transposition fixing x2");
    let seed = ArrowSet::from_iter([t]);
    let class = conjugacy_class(&g, &seed).expect("class");
    println!("class of {}: {:?}", g.arrow_name(t), class.omega.names(&g));
    for x in 0..g.n_units() {
        println!("{}: {} arrows of the class", g.unit_name(x), fiber_count(&g, &class, x));
    }
    println!("mu_s = {}", class.mu_s);
    for (i, b) in ergodic_class_decomposition(&g, &seed).expect("ergodic").iter().enumerate() {
        println!("V_{i} = {:?}", b.arrows().names(&g));
    }
}
