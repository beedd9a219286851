//! Seeded random instances.
//!
//! A random groupoid is a disjoint union of transformation groupoids
//! `Γ ⋉ X`, each drawn from one of four families:
//!
//! * a single point with a group fiber (group bundle piece),
//! * a coset space `Γ/H` (stabilizers conjugate to `H`),
//! * `Z/n × K` acting on `Z/n` by translation (pair groupoid times a group),
//! * a free translation action (principal).
//!
//! Each component is null with some probability, otherwise it gets integer
//! unit weights in `1..=3`, so instances are nonsingular but usually not
//! measure preserving. The union is optionally restricted to a random unit
//! subset carrying positive mass.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::actions::{restrict_partial, transformation_groupoid, PartialActionSystem};
use super::dr::DeaconuRenaultSystem;
use super::groups::FiniteGroupTable;
use super::{disjoint_union, gcd, group_bundle, renormalize};
use crate::cocycle::{apply_coboundary, Cocycle};
use crate::groupoid::{is_ergodic, orbits, restrict, Mass, MeasuredGroupoid, UnitId, UnitSpace};
use crate::phase::Phase;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RandomParams {
    pub max_units: usize,
    pub max_arrows: usize,
    /// Only free actions: `Iso(G) = G0`.
    pub principal_only: bool,
    /// Allow whole components of zero mass.
    pub allow_null: bool,
    /// Probability of restricting to a random unit subset.
    pub restrict_prob: f64,
    /// Probability of a single component (ergodic whenever no null part is added).
    pub single_component_prob: f64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_units: 12,
            max_arrows: 60,
            principal_only: false,
            allow_null: true,
            restrict_prob: 0.25,
            single_component_prob: 0.45,
        }
    }
}

/// One transformation-groupoid component with the data needed to twist it.
#[derive(Debug, Clone)]
struct Component {
    groupoid: MeasuredGroupoid,
    /// `(n, m)` when the group is `Z/n × Z/m` with element `a*m + b`.
    abelian_rank2: Option<(usize, usize)>,
    /// Group element carried by each arrow.
    labels: Vec<usize>,
}

fn small_groups(rng: &mut ChaCha8Rng, max_order: usize) -> (FiniteGroupTable, Option<(usize, usize)>) {
    let mut options: Vec<(FiniteGroupTable, Option<(usize, usize)>)> = vec![
        (FiniteGroupTable::cyclic(2), Some((2, 1))),
        (FiniteGroupTable::cyclic(3), Some((3, 1))),
        (FiniteGroupTable::cyclic(4), Some((4, 1))),
        (FiniteGroupTable::klein_four(), Some((2, 2))),
        (FiniteGroupTable::symmetric(3), None),
        (FiniteGroupTable::cyclic(5), Some((5, 1))),
        (FiniteGroupTable::dihedral(4), None),
        (FiniteGroupTable::product(&FiniteGroupTable::cyclic(2), &FiniteGroupTable::cyclic(4)), Some((2, 4))),
        (FiniteGroupTable::product(&FiniteGroupTable::cyclic(3), &FiniteGroupTable::cyclic(3)), Some((3, 3))),
        (FiniteGroupTable::cyclic(6), Some((6, 1))),
    ];
    options.retain(|(g, _)| g.order() <= max_order);
    if options.is_empty() {
        return (FiniteGroupTable::trivial(), Some((1, 1)));
    }
    options.swap_remove(rng.gen_range(0..options.len()))
}

fn twistable_groups(rng: &mut ChaCha8Rng, max_order: usize) -> (FiniteGroupTable, Option<(usize, usize)>) {
    let mut options: Vec<(usize, usize)> = vec![(2, 2), (2, 2), (2, 4), (3, 3), (4, 2), (2, 6), (4, 4)];
    options.retain(|(n, m)| n * m <= max_order);
    if options.is_empty() || rng.gen_bool(0.15) {
        return small_groups(rng, max_order);
    }
    let (n, m) = options[rng.gen_range(0..options.len())];
    (FiniteGroupTable::product(&FiniteGroupTable::cyclic(n), &FiniteGroupTable::cyclic(m)), Some((n, m)))
}

fn component(
    rng: &mut ChaCha8Rng,
    params: &RandomParams,
    units_left: usize,
    arrows_left: usize,
    twistable: bool,
) -> Option<Component> {
    for _ in 0..20 {
        let kind = if params.principal_only { 3 } else { rng.gen_range(0..4) };
        let built = match kind {
            // point with a group fiber
            0 => {
                let (g, ab) = if twistable { twistable_groups(rng, arrows_left) } else { small_groups(rng, arrows_left) };
                let gr = group_bundle(std::slice::from_ref(&g), UnitSpace::uniform(1));
                Some((gr, ab, (0..g.order()).collect::<Vec<_>>()))
            }
            // coset space
            1 => {
                let (g, ab) = if twistable { twistable_groups(rng, arrows_left) } else { small_groups(rng, arrows_left) };
                let subs = g.subgroups();
                let h = subs[rng.gen_range(0..subs.len())].clone();
                let labels = g.left_cosets(&h);
                let n = g.order() / h.len();
                if n > units_left || n * g.order() > arrows_left {
                    None
                } else {
                    let reps: Vec<usize> = (0..n).map(|c| labels.iter().position(|&l| l == c).unwrap()).collect();
                    let act = |a: usize, x: UnitId| labels[g.op(a, reps[x])];
                    transformation_groupoid(&g, &act, UnitSpace::uniform(n)).ok().map(|gr| {
                        let lab = arrow_group_labels(&g, n);
                        (gr, ab, lab)
                    })
                }
            }
            // Z/n × K on Z/n
            2 => {
                let n = rng.gen_range(2..=4usize);
                let budget = arrows_left / (n * n);
                if n > units_left || budget == 0 {
                    None
                } else {
                    let (k, kab) = if twistable { twistable_groups(rng, budget) } else { small_groups(rng, budget) };
                    let g = FiniteGroupTable::product(&FiniteGroupTable::cyclic(n), &k);
                    let ko = k.order();
                    let act = |a: usize, x: UnitId| (a / ko + x) % n;
                    // bicharacter lives on K when K is Z/p × Z/q; the translation part is untwisted
                    let ab = kab.map(|(p, q)| (p, q));
                    transformation_groupoid(&g, &act, UnitSpace::uniform(n)).ok().map(|gr| {
                        let lab = arrow_group_labels(&g, n).into_iter().map(|a| a % ko).collect();
                        (gr, ab, lab)
                    })
                }
            }
            // free translation
            _ => {
                let n = rng.gen_range(1..=units_left.min(6));
                if n * n > arrows_left {
                    None
                } else {
                    let g = FiniteGroupTable::cyclic(n);
                    transformation_groupoid(&g, &|a, x| (a + x) % n, UnitSpace::uniform(n))
                        .ok()
                        .map(|gr| (gr, None, vec![0; n * n]))
                }
            }
        };
        if let Some((groupoid, abelian_rank2, labels)) = built {
            if groupoid.n_units() <= units_left && groupoid.n_arrows() <= arrows_left {
                return Some(Component { groupoid, abelian_rank2, labels });
            }
        }
    }
    None
}

/// Group element of each arrow of a transformation groupoid (arrows are `g`-major).
fn arrow_group_labels(g: &FiniteGroupTable, n_units: usize) -> Vec<usize> {
    (0..g.order()).flat_map(|a| std::iter::repeat_n(a, n_units)).collect()
}

struct Assembled {
    groupoid: MeasuredGroupoid,
    /// Per arrow: component index, group label.
    arrow_info: Vec<(usize, usize)>,
    comps: Vec<Component>,
}

fn assemble(rng: &mut ChaCha8Rng, params: &RandomParams, twistable: bool) -> Assembled {
    let n_comp = if rng.gen_bool(params.single_component_prob) { 1 } else { rng.gen_range(2..=3) };
    let mut comps = Vec::new();
    let (mut units_left, mut arrows_left) = (params.max_units, params.max_arrows);
    for _ in 0..n_comp {
        match component(rng, params, units_left, arrows_left, twistable) {
            Some(c) => {
                units_left -= c.groupoid.n_units();
                arrows_left -= c.groupoid.n_arrows();
                comps.push(c);
            }
            None => break,
        }
        if units_left == 0 || arrows_left == 0 {
            break;
        }
    }
    if comps.is_empty() {
        let g = FiniteGroupTable::trivial();
        comps.push(Component {
            groupoid: group_bundle(&[g], UnitSpace::uniform(1)),
            abelian_rank2: None,
            labels: vec![0],
        });
    }
    // weights: one component always positive
    let positive_comp = rng.gen_range(0..comps.len());
    let mut weights = Vec::new();
    for (i, c) in comps.iter().enumerate() {
        let null = params.allow_null && i != positive_comp && rng.gen_bool(0.3);
        let uniform = rng.gen_bool(0.4);
        let w0 = rng.gen_range(1..=3u64);
        for _ in 0..c.groupoid.n_units() {
            let w = if null {
                0
            } else if uniform {
                w0
            } else {
                rng.gen_range(1..=3u64)
            };
            weights.push(Mass::from_ratio(w, 1));
        }
    }
    let masses = renormalize(&weights).expect("one component is positive");
    let parts: Vec<MeasuredGroupoid> = comps.iter().map(|c| c.groupoid.clone()).collect();
    let groupoid = disjoint_union(&parts, masses);
    let arrow_info = comps
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.labels.iter().map(move |&l| (i, l)))
        .collect();
    Assembled { groupoid, arrow_info, comps }
}

fn maybe_restrict(rng: &mut ChaCha8Rng, params: &RandomParams, g: MeasuredGroupoid) -> (MeasuredGroupoid, Vec<usize>) {
    let identity: Vec<usize> = (0..g.n_arrows()).collect();
    if !rng.gen_bool(params.restrict_prob) {
        return (g, identity);
    }
    let keep: BTreeSet<UnitId> = (0..g.n_units()).filter(|_| rng.gen_bool(0.7)).collect();
    match restrict(&g, &keep) {
        Ok(r) => (r.groupoid, r.arrows),
        Err(_) => (g, identity),
    }
}

/// Deterministic random groupoid for a seed.
pub fn random_groupoid(params: &RandomParams, seed: u64) -> MeasuredGroupoid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = assemble(&mut rng, params, false);
    maybe_restrict(&mut rng, params, a.groupoid).0
}

#[derive(Debug, Clone)]
pub struct TwistedInstance {
    pub groupoid: MeasuredGroupoid,
    /// Roots-of-unity cocycle, generally not normalized.
    pub cocycle: Cocycle,
}

/// Random groupoid with a bicharacter twist on its abelian components times a random coboundary.
pub fn random_twisted(params: &RandomParams, seed: u64) -> TwistedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let a = assemble(&mut rng, params, true);
    let ks: Vec<usize> = a
        .comps
        .iter()
        .map(|c| match c.abelian_rank2 {
            Some((n, m)) if gcd(n, m) > 1 => rng.gen_range(0..gcd(n, m)),
            _ => 0,
        })
        .collect();
    let comps = &a.comps;
    let info = &a.arrow_info;
    let full = Cocycle::from_fn(&a.groupoid, |x, y| {
        let (c, gx) = info[x];
        let (_, gy) = info[y];
        match comps[c].abelian_rank2 {
            Some((n, m)) if ks[c] > 0 => {
                let d = gcd(n, m);
                let b = gx % m;
                let cc = gy / m;
                Phase::root(((ks[c] * b * cc) % d) as i64, d as i64)
            }
            _ => Phase::ONE,
        }
    })
    .expect("bicharacter pullbacks are cocycles");
    let (groupoid, arrow_map) = maybe_restrict(&mut rng, params, a.groupoid);
    let restricted = full.pull_back(&groupoid, &arrow_map);
    let rho: Vec<Phase> = (0..groupoid.n_arrows())
        .map(|_| {
            let q = [1i64, 2, 4][rng.gen_range(0..3)];
            Phase::root(rng.gen_range(0..q), q)
        })
        .collect();
    let cocycle = apply_coboundary(&groupoid, &restricted, &rho);
    TwistedInstance { groupoid, cocycle }
}

/// Random group bundle with fibers among `Z/2, Z/3, Z/4, S_3, D_4`; returns the fibers too.
pub fn random_bundle(seed: u64) -> (MeasuredGroupoid, Vec<FiniteGroupTable>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151_5151);
    let pool = [
        FiniteGroupTable::cyclic(2),
        FiniteGroupTable::cyclic(3),
        FiniteGroupTable::cyclic(4),
        FiniteGroupTable::symmetric(3),
        FiniteGroupTable::dihedral(4),
    ];
    let mut fibers = Vec::new();
    let mut arrows = 0;
    let target = rng.gen_range(1..=6);
    while fibers.len() < target {
        let f = pool.choose(&mut rng).expect("nonempty").clone();
        if arrows + f.order() > 60 {
            break;
        }
        arrows += f.order();
        fibers.push(f);
    }
    let mut weights: Vec<Mass> = fibers
        .iter()
        .map(|_| Mass::from_ratio(if rng.gen_bool(0.2) { 0 } else { rng.gen_range(1..=4) }, 1))
        .collect();
    if weights.iter().all(Mass::is_zero) {
        weights[0] = Mass::from_ratio(1, 1);
    }
    let masses = renormalize(&weights).expect("positive");
    let names = (0..fibers.len()).map(|i| format!("x{i}")).collect();
    (group_bundle(&fibers, UnitSpace::new(names, masses)), fibers)
}

/// A `μ`-full unit set: a nonempty random part of every positive orbit, plus random null units.
pub fn random_full_subset(g: &MeasuredGroupoid, seed: u64) -> BTreeSet<UnitId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf011);
    let mut keep = BTreeSet::new();
    for orbit in orbits(g) {
        let positive: Vec<UnitId> = orbit.iter().copied().filter(|&x| g.is_positive(x)).collect();
        if positive.is_empty() {
            keep.extend(orbit.into_iter().filter(|_| rng.gen_bool(0.5)));
            continue;
        }
        let mut chosen: Vec<UnitId> = positive.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if chosen.is_empty() {
            chosen.push(*positive.choose(&mut rng).expect("nonempty"));
        }
        keep.extend(chosen);
        keep.extend(orbit.iter().copied().filter(|x| !g.is_positive(*x) && rng.gen_bool(0.5)));
    }
    debug_assert!(is_ergodic(g).ergodic || keep.len() > 1 || g.n_units() == 1);
    keep
}

/// Random partial action: a global action on a union of coset spaces restricted to a random subset.
pub fn random_partial_action(seed: u64) -> PartialActionSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let pool = [
        FiniteGroupTable::cyclic(2),
        FiniteGroupTable::cyclic(3),
        FiniteGroupTable::cyclic(4),
        FiniteGroupTable::klein_four(),
        FiniteGroupTable::symmetric(3),
    ];
    let g = pool.choose(&mut rng).expect("nonempty").clone();
    let subs = g.subgroups();
    // union of 1..=3 coset spaces
    let mut pieces: Vec<(Vec<usize>, Vec<usize>, usize)> = Vec::new();
    let mut total = 0;
    for _ in 0..rng.gen_range(1..=3) {
        let h = subs.choose(&mut rng).expect("nonempty").clone();
        let labels = g.left_cosets(&h);
        let n = g.order() / h.len();
        if total + n > 10 {
            break;
        }
        let reps: Vec<usize> = (0..n).map(|c| labels.iter().position(|&l| l == c).unwrap()).collect();
        pieces.push((labels, reps, total));
        total += n;
    }
    if pieces.is_empty() {
        let labels = vec![0; g.order()];
        pieces.push((labels, vec![g.identity], 0));
        total = 1;
    }
    let piece_of: Vec<usize> = pieces
        .iter()
        .enumerate()
        .flat_map(|(i, (_, reps, _))| std::iter::repeat_n(i, reps.len()))
        .collect();
    let gt = g.clone();
    let act = move |a: usize, x: UnitId| {
        let (labels, reps, off) = &pieces[piece_of[x]];
        off + labels[gt.op(a, reps[x - off])]
    };
    let weights: Vec<Mass> = (0..total).map(|_| Mass::from_ratio(rng.gen_range(1..=3), 1)).collect();
    let names = (0..total).map(|i| format!("z{i}")).collect();
    let space = UnitSpace::new(names, renormalize(&weights).expect("positive"));
    let global = PartialActionSystem::global(g, space, &act).expect("coset actions are actions");
    let mut y: BTreeSet<UnitId> = (0..total).filter(|_| rng.gen_bool(0.6)).collect();
    if y.is_empty() {
        y.insert(rng.gen_range(0..total));
    }
    restrict_partial(&global, &y).expect("positive masses")
}

/// Random self-map of `2..=10` points with full-support weights and `bound = |X|`.
pub fn random_dr(seed: u64) -> DeaconuRenaultSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd3d3);
    let n = rng.gen_range(2..=10);
    let sigma = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let weights: Vec<Mass> = (0..n).map(|_| Mass::from_ratio(rng.gen_range(1..=3), 1)).collect();
    let names = (0..n).map(|i| format!("p{i}")).collect();
    DeaconuRenaultSystem { space: UnitSpace::new(names, renormalize(&weights).expect("positive")), sigma, bound: n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::normalize_cocycle;
    use crate::constructors::partial_action_groupoid;
    use crate::groupoid::iso_subgroupoid;

    #[test]
    fn deterministic() {
        let p = RandomParams::default();
        for seed in 0..20 {
            let a = random_groupoid(&p, seed);
            let b = random_groupoid(&p, seed);
            assert_eq!(a.to_raw(), b.to_raw());
        }
    }

    #[test]
    fn respects_limits_and_is_nonsingular() {
        let p = RandomParams::default();
        for seed in 0..200 {
            let g = random_groupoid(&p, seed);
            assert!(g.n_units() <= 12 && g.n_arrows() <= 60, "seed {seed}");
            assert!(g.flags().nonsingular);
        }
    }

    #[test]
    fn principal_params() {
        let p = RandomParams { principal_only: true, ..RandomParams::default() };
        for seed in 0..30 {
            let g = random_groupoid(&p, seed);
            assert_eq!(iso_subgroupoid(&g), g.unit_arrows());
        }
    }

    #[test]
    fn twisted_instances_validate() {
        let p = RandomParams::default();
        for seed in 0..40 {
            let t = random_twisted(&p, seed);
            let n = normalize_cocycle(&t.groupoid, &t.cocycle);
            assert!(n.is_normalized());
        }
    }

    #[test]
    fn partial_actions_validate() {
        for seed in 0..40 {
            let p = random_partial_action(seed);
            partial_action_groupoid(&p).unwrap();
        }
    }
}
