//! The center of a group bundle algebra counts conjugacy classes fiberwise.

use groupoid_vna::constructors::{group_bundle, FiniteGroupTable};
use groupoid_vna::groupoid::UnitSpace;
use groupoid_vna::TwistedVna;

fn main() {
    let fibers = vec![FiniteGroupTable::cyclic(4), FiniteGroupTable::symmetric(3), FiniteGroupTable::dihedral(4)];
    let g = group_bundle(&fibers, UnitSpace::uniform(fibers.len()));
    let v = TwistedVna::untwisted(&g).expect("nonsingular");
    let classes: Vec<usize> = fibers.iter().map(|f| f.conjugacy_classes().len()).collect();
    println!("class counts {classes:?}, total {}", classes.iter().sum::<usize>());
    println!("center dim {}", v.center().dim());
}
