//! Conjugacy classes of isotropy sets, fiber counts, icc and the ergodic decomposition.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::basis::{build_basis, build_iso_basis, Basis};
use crate::groupoid::{
    arrow_measure, is_ergodic, iso_subgroupoid, ArrowSet, Bisection, MeasuredGroupoid, Side, UnitId,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConjugacyError {
    #[error("arrows outside Iso(G): {0:?}")]
    NotIsotropy(Vec<String>),
    #[error("groupoid is not ergodic")]
    NotErgodic,
    #[error("fiber counts differ across positive-mass units: {0:?}")]
    NonUniformFiber(BTreeMap<UnitId, usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyClass {
    pub base: ArrowSet,
    pub omega: ArrowSet,
    pub mu_s: f64,
}

fn require_isotropy(g: &MeasuredGroupoid, a: &ArrowSet) -> Result<(), ConjugacyError> {
    let bad: Vec<String> = a.iter().filter(|&h| !g.is_isotropy(h)).map(|h| g.arrow_name(h).to_string()).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(ConjugacyError::NotIsotropy(bad))
    }
}

/// Fixed point of `h -> g h g^-1` over all arrows `g` with `s(g) = t(h)`.
pub fn conjugation_closure(g: &MeasuredGroupoid, a: &ArrowSet) -> ArrowSet {
    let mut omega = a.clone();
    let mut queue: VecDeque<_> = a.iter().collect();
    while let Some(h) = queue.pop_front() {
        for &k in g.arrows_from(g.tgt(h)) {
            let c = g.conjugate(k, h).expect("composable");
            if omega.insert(c) {
                queue.push_back(c);
            }
        }
    }
    omega
}

/// `U_B B A B^-1` over the blocks of a basis.
pub fn basis_closure(g: &MeasuredGroupoid, a: &ArrowSet, basis: &Basis) -> ArrowSet {
    let mut out = ArrowSet::new();
    for b in &basis.blocks {
        let bab = b.arrows().product(a, g).product(b.inverse(g).arrows(), g);
        out = out.union(&bab);
    }
    out
}

pub fn conjugacy_class(g: &MeasuredGroupoid, a: &ArrowSet) -> Result<ConjugacyClass, ConjugacyError> {
    require_isotropy(g, a)?;
    let omega = conjugation_closure(g, a);
    debug_assert_eq!(omega, basis_closure(g, a, &build_basis(g, true)));
    let mu_s = arrow_measure(g, &omega, Side::Source);
    Ok(ConjugacyClass { base: a.clone(), omega, mu_s })
}

/// `|s^-1(x) ∩ Ω_A|`.
pub fn fiber_count(g: &MeasuredGroupoid, class: &ConjugacyClass, x: UnitId) -> usize {
    g.arrows_from(x).iter().filter(|&&h| class.omega.contains(h)).count()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IccVerdict {
    pub icc: bool,
    /// Positive-mass arrows of `Iso(G) \ G0`.
    pub witness: Option<Vec<String>>,
    /// `|s^-1(x) ∩ (Iso(G) \ G0)|` at positive-mass units.
    pub fiber_counts: BTreeMap<String, usize>,
    /// Verdict of the definitional check over the blocks of an `Iso(G)` basis.
    pub definitional_icc: bool,
}

impl IccVerdict {
    pub fn witness_set(&self, g: &MeasuredGroupoid) -> Option<ArrowSet> {
        self.witness.as_ref().map(|w| w.iter().filter_map(|n| g.find_arrow(n)).collect())
    }
}

/// Definitional icc: every non-null `A ⊆ Iso(G)` with finite-measure class lies in `G0`.
///
/// Checked on the non-unit blocks of an `Iso(G)` basis and on all singletons
/// of `Iso(G) \ G0`; classes are always finite here.
pub fn definitional_icc(g: &MeasuredGroupoid) -> bool {
    let basis = build_iso_basis(g);
    let mut families: Vec<ArrowSet> = basis
        .blocks
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != basis.units_block)
        .map(|(_, b)| b.arrows().clone())
        .collect();
    families.extend(iso_subgroupoid(g).iter().filter(|&h| !g.is_unit_arrow(h)).map(|h| ArrowSet::from_iter([h])));
    families.iter().all(|a| {
        let class = conjugacy_class(g, a).expect("isotropy");
        let non_null = arrow_measure(g, a, Side::Source) > 0.0;
        let finite = class.mu_s.is_finite();
        let in_units = a.iter().all(|h| g.is_unit_arrow(h));
        !(non_null && finite) || in_units
    })
}

/// Finite-scale icc: every arrow of `Iso(G) \ G0` sits over a null unit.
pub fn is_icc(g: &MeasuredGroupoid) -> IccVerdict {
    let mut witness = Vec::new();
    let mut fiber_counts = BTreeMap::new();
    for x in (0..g.n_units()).filter(|&x| g.is_positive(x)) {
        let off: Vec<_> = g.arrows_from(x).iter().filter(|&&h| g.is_isotropy(h) && !g.is_unit_arrow(h)).collect();
        fiber_counts.insert(g.unit_name(x).to_string(), off.len());
        witness.extend(off.into_iter().map(|&h| g.arrow_name(h).to_string()));
    }
    let icc = witness.is_empty();
    IccVerdict { icc, witness: (!icc).then_some(witness), fiber_counts, definitional_icc: definitional_icc(g) }
}

/// Disjoint bisections `V_1..V_k` covering `Ω_A` over positive-mass units.
///
/// `V_i` takes the `i`-th arrow of `s^-1(x) ∩ Ω_A` at every positive unit `x`.
pub fn ergodic_class_decomposition(g: &MeasuredGroupoid, a: &ArrowSet) -> Result<Vec<Bisection>, ConjugacyError> {
    if !is_ergodic(g).ergodic {
        return Err(ConjugacyError::NotErgodic);
    }
    let class = conjugacy_class(g, a)?;
    let mut fibers: BTreeMap<UnitId, Vec<usize>> = BTreeMap::new();
    for x in (0..g.n_units()).filter(|&x| g.is_positive(x)) {
        let f: Vec<_> = g.arrows_from(x).iter().copied().filter(|&h| class.omega.contains(h)).collect();
        if !f.is_empty() {
            fibers.insert(x, f);
        }
    }
    let counts: BTreeMap<UnitId, usize> = fibers.iter().map(|(&x, f)| (x, f.len())).collect();
    let k = counts.values().next().copied().unwrap_or(0);
    if counts.values().any(|&c| c != k) {
        return Err(ConjugacyError::NonUniformFiber(counts));
    }
    Ok((0..k)
        .map(|i| Bisection::new_unchecked(fibers.values().map(|f| f[i]).collect()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::{full_relation, group_bundle, group_groupoid, transformation_groupoid, FiniteGroupTable};
    use crate::groupoid::UnitSpace;

    fn s3() -> MeasuredGroupoid {
        group_groupoid(&FiniteGroupTable::symmetric(3))
    }

    fn transposition(g: &MeasuredGroupoid) -> usize {
        // one-line notation; swap the first two letters
        g.find_arrow("102@x0").unwrap()
    }

    #[test]
    fn unit_class_is_orbit_units() {
        let g = full_relation(3);
        let c = conjugacy_class(&g, &ArrowSet::from_iter([g.unit_arrow(0)])).unwrap();
        assert_eq!(c.omega, g.unit_arrows());
        for x in 0..3 {
            assert_eq!(fiber_count(&g, &c, x), 1);
        }
    }

    #[test]
    fn s3_transposition_class() {
        let g = s3();
        let a = ArrowSet::from_iter([transposition(&g)]);
        let c = conjugacy_class(&g, &a).unwrap();
        assert_eq!(c.omega.len(), 3);
        assert!((c.mu_s - 3.0).abs() < 1e-15);
        assert_eq!(fiber_count(&g, &c, 0), 3);
        assert_eq!(basis_closure(&g, &a, &build_basis(&g, false)), c.omega);
        let v = ergodic_class_decomposition(&g, &a).unwrap();
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn not_isotropy_rejected() {
        let g = full_relation(2);
        let e01 = g.find_arrow("e01").unwrap();
        assert!(matches!(conjugacy_class(&g, &ArrowSet::from_iter([e01])), Err(ConjugacyError::NotIsotropy(_))));
    }

    #[test]
    fn icc_verdicts() {
        assert!(is_icc(&full_relation(3)).icc);
        let z2 = group_groupoid(&FiniteGroupTable::cyclic(2));
        let v = is_icc(&z2);
        assert!(!v.icc && !v.definitional_icc);
        assert_eq!(v.witness.unwrap().len(), 1);
        let swap = transformation_groupoid(&FiniteGroupTable::cyclic(2), &|g, x| (g + x) % 2, UnitSpace::uniform(2)).unwrap();
        assert!(is_icc(&swap).icc);
    }

    #[test]
    fn non_ergodic_decomposition_rejected() {
        let z2 = FiniteGroupTable::cyclic(2);
        let g = group_bundle(&[z2.clone(), z2], UnitSpace::uniform(2));
        assert_eq!(ergodic_class_decomposition(&g, &g.unit_arrows()), Err(ConjugacyError::NotErgodic));
    }

    #[test]
    fn unit_decomposition_of_ergodic() {
        let g = full_relation(3);
        let v = ergodic_class_decomposition(&g, &g.unit_arrows()).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(*v[0].arrows(), g.unit_arrows());
    }
}
