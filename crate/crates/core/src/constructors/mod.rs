//! Groupoids from standard data.

mod actions;
mod dr;
mod groups;
mod random;

pub use actions::{
    globalize, partial_action_groupoid, restrict_partial, transformation_groupoid, stabilizer_diagnostic, ActionError,
    Globalization, PartialActionSystem, StabilizerDiagnostic,
};
pub use dr::{brute_force_arrow, deaconu_renault, essentially_free, DeaconuRenaultSystem, DrArrow, DrView, EssentialFreeness};
pub use groups::{FiniteGroupTable, GroupError};
pub use random::{
    random_bundle, random_dr, random_full_subset, random_groupoid, random_partial_action, random_twisted, RandomParams,
    TwistedInstance,
};

use num_rational::Ratio;

use crate::cocycle::Cocycle;
use crate::groupoid::{Arrow, ArrowSet, Mass, MeasuredGroupoid, RawGroupoid, UnitSpace};
use crate::phase::Phase;

/// Scale masses to total one; `None` when they sum to zero.
pub(crate) fn renormalize(masses: &[Mass]) -> Option<Vec<Mass>> {
    let exact: Option<Ratio<u64>> = masses.iter().try_fold(Ratio::new(0, 1), |acc, m| m.exact().map(|r| acc + r));
    let float: f64 = masses.iter().map(Mass::value).sum();
    match exact {
        Some(t) if *t.numer() == 0 => None,
        Some(t) => Some(masses.iter().map(|m| m.scaled(Some(t.recip()), 1.0 / float)).collect()),
        None if float > 0.0 => Some(masses.iter().map(|m| m.scaled(None, 1.0 / float)).collect()),
        None => None,
    }
}

/// Pair groupoid on `n` uniform units; `e{i}{j}` goes from `x{j}` to `x{i}`.
pub fn full_relation(n: usize) -> MeasuredGroupoid {
    pair_groupoid(UnitSpace::uniform(n))
}

pub fn pair_groupoid(units: UnitSpace) -> MeasuredGroupoid {
    let n = units.len();
    let sep = if n > 10 { "_" } else { "" };
    let idx = |i: usize, j: usize| i * n + j;
    let arrows = (0..n)
        .flat_map(|i| (0..n).map(move |j| Arrow { name: format!("e{i}{sep}{j}"), src: j, tgt: i }))
        .collect();
    let mut compose = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                compose.push((idx(i, j), idx(j, k), idx(i, k)));
            }
        }
    }
    RawGroupoid {
        units,
        arrows,
        compose,
        inverse: (0..n).flat_map(|i| (0..n).map(move |j| (idx(i, j), idx(j, i)))).collect(),
        unit_arrows: (0..n).map(|i| (i, idx(i, i))).collect(),
    }
    .validate()
    .expect("pair groupoid tables are valid")
}

/// Disjoint union of groups over the units, `g@x` for `g` in the fiber over `x`.
pub fn group_bundle(fibers: &[FiniteGroupTable], units: UnitSpace) -> MeasuredGroupoid {
    assert_eq!(fibers.len(), units.len(), "one fiber per unit");
    let mut arrows = Vec::new();
    let mut offset = Vec::new();
    for (x, f) in fibers.iter().enumerate() {
        offset.push(arrows.len());
        for name in &f.names {
            arrows.push(Arrow { name: format!("{name}@{}", units.names[x]), src: x, tgt: x });
        }
    }
    let mut compose = Vec::new();
    let mut inverse = Vec::new();
    let mut unit_arrows = Vec::new();
    for (x, f) in fibers.iter().enumerate() {
        let o = offset[x];
        for a in 0..f.order() {
            inverse.push((o + a, o + f.inv[a]));
            for b in 0..f.order() {
                compose.push((o + a, o + b, o + f.op(a, b)));
            }
        }
        unit_arrows.push((x, o + f.identity));
    }
    RawGroupoid { units, arrows, compose, inverse, unit_arrows }
        .validate()
        .expect("group bundle tables are valid")
}

/// One-unit groupoid of a group; arrow `i` is group element `i`.
pub fn group_groupoid(group: &FiniteGroupTable) -> MeasuredGroupoid {
    group_bundle(std::slice::from_ref(group), UnitSpace::uniform(1))
}

/// Disjoint union; names are prefixed `c{i}/`, masses taken from `masses` in unit order.
pub fn disjoint_union(parts: &[MeasuredGroupoid], masses: Vec<Mass>) -> MeasuredGroupoid {
    let mut names = Vec::new();
    let mut arrows = Vec::new();
    let mut compose = Vec::new();
    let mut inverse = Vec::new();
    let mut unit_arrows = Vec::new();
    for (c, p) in parts.iter().enumerate() {
        let (uo, ao) = (names.len(), arrows.len());
        names.extend((0..p.n_units()).map(|x| format!("c{c}/{}", p.unit_name(x))));
        arrows.extend(p.arrows().iter().map(|a| Arrow {
            name: format!("c{c}/{}", a.name),
            src: a.src + uo,
            tgt: a.tgt + uo,
        }));
        for a in 0..p.n_arrows() {
            inverse.push((a + ao, p.inverse(a) + ao));
            for &b in p.arrows_to(p.src(a)) {
                compose.push((a + ao, b + ao, p.compose(a, b).expect("composable") + ao));
            }
        }
        unit_arrows.extend((0..p.n_units()).map(|x| (x + uo, p.unit_arrow(x) + ao)));
    }
    RawGroupoid { units: UnitSpace::new(names, masses), arrows, compose, inverse, unit_arrows }
        .validate()
        .expect("disjoint union of valid groupoids is valid")
}

/// `ω((a,b),(c,d)) = ζ^{k b c}` on `Z/n x Z/m`, `ζ = e^{2πi/gcd(n,m)}`, pulled back along `labels`.
///
/// `labels[arrow]` is the element `(a, b)` carried by the arrow; the pullback
/// along a homomorphism `G -> Z/n x Z/m` is again a cocycle.
pub fn bicharacter_cocycle(g: &MeasuredGroupoid, labels: &[(usize, usize)], n: usize, m: usize, k: usize) -> Cocycle {
    let d = gcd(n, m) as i64;
    Cocycle::from_fn(g, |x, y| {
        let (_, b) = labels[x];
        let (c, _) = labels[y];
        Phase::root((k * b * c) as i64 % d.max(1), d.max(1))
    })
    .expect("bicharacters are cocycles")
}

/// The Klein four twist `ω((a,b),(c,d)) = (-1)^{bc}` on the one-unit groupoid of [`FiniteGroupTable::klein_four`].
pub fn klein_four_cocycle(g: &MeasuredGroupoid) -> Cocycle {
    let labels: Vec<(usize, usize)> = (0..4).map(|i| (i / 2, i % 2)).collect();
    bicharacter_cocycle(g, &labels, 2, 2, 1)
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Truncated bundle of symmetric groups.
#[derive(Debug, Clone)]
pub struct SnBundle {
    pub groupoid: MeasuredGroupoid,
    /// `{(n, (1 2))}` over all units.
    pub transpositions: ArrowSet,
    /// `C(n, 2)` per unit: the size of the transposition class.
    pub class_sizes: Vec<usize>,
    /// Fewest bisections covering `Ω_A`, the largest class size.
    pub min_cover: usize,
}

/// Largest supported `N`; `S_6` alone would contribute 720 arrows.
pub const SN_BUNDLE_MAX: usize = 5;

/// Units `n = 2..=N` with fiber `S_n` and mass proportional to `2^-n / C(n,2)`.
pub fn sn_bundle(n_max: usize) -> MeasuredGroupoid {
    sn_bundle_data(n_max).groupoid
}

pub fn sn_bundle_data(n_max: usize) -> SnBundle {
    assert!((2..=SN_BUNDLE_MAX).contains(&n_max), "N must lie in 2..={SN_BUNDLE_MAX}");
    let ns: Vec<usize> = (2..=n_max).collect();
    let choose2 = |n: usize| n * (n - 1) / 2;
    // 2^-n / C(n,2) over a common denominator
    let denom: u64 = ns.iter().map(|&n| (1u64 << n) * choose2(n) as u64).product();
    let weights: Vec<Mass> = ns
        .iter()
        .map(|&n| Mass::from_ratio(denom / ((1u64 << n) * choose2(n) as u64), 1))
        .collect();
    let masses = renormalize(&weights).expect("positive weights");
    let names = ns.iter().map(|n| format!("n{n}")).collect();
    let fibers: Vec<FiniteGroupTable> = ns.iter().map(|&n| FiniteGroupTable::symmetric(n)).collect();
    let groupoid = group_bundle(&fibers, UnitSpace::new(names, masses));
    let transpositions: ArrowSet = ns
        .iter()
        .map(|&n| {
            let mut p: Vec<usize> = (0..n).collect();
            p.swap(0, 1);
            let name: String = p.iter().map(|v| v.to_string()).collect();
            groupoid.find_arrow(&format!("{name}@n{n}")).expect("transposition present")
        })
        .collect();
    let class_sizes: Vec<usize> = ns.iter().map(|&n| choose2(n)).collect();
    let min_cover = *class_sizes.iter().max().expect("nonempty");
    SnBundle { groupoid, transpositions, class_sizes, min_cover }
}
