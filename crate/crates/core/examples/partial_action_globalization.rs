//! Globalize a partial action and compare the two groupoids.

use std::collections::BTreeSet;

use groupoid_vna::constructors::{globalize, partial_action_groupoid, random_partial_action, FiniteGroupTable, PartialActionSystem};
use groupoid_vna::groupoid::UnitSpace;

fn main() {
    // Z/2 acting on {0, 1} where the flip is only defined on {0}
    let maps = vec![[(0, 0), (1, 1)].into_iter().collect(), [(0, 0)].into_iter().collect()];
    let p = PartialActionSystem { group: FiniteGroupTable::cyclic(2), space: UnitSpace::uniform(2), maps };
    let g = partial_action_groupoid(&p).expect("partial action");
    let glob = globalize(&p).expect("globalization");
    println!("partial groupoid arrows: {:?}", g.arrows().iter().map(|a| a.name.as_str()).collect::<Vec<_>>());
    println!("global space has {} points, embedding {:?}", glob.global.space.len(), glob.embedding);
    println!("restriction isomorphic: {}", glob.isomorphism.is_ok());

    for seed in 0..5 {
        let p = random_partial_action(seed);
        let glob = globalize(&p).expect("globalization");
        let image: BTreeSet<_> = glob.embedding.iter().collect();
        println!(
            "seed {seed}: |G| = {}, {} -> {} points, image {} points, isomorphic {}",
            p.group.order(),
            p.space.len(),
            glob.global.space.len(),
            image.len(),
            glob.isomorphism.is_ok()
        );
    }
}
