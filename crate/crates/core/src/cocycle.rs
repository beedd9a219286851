//! 2-cocycles on finite groupoids, normalization and the twisted deciders.
//!
//! A cocycle stores one [`Phase`] per composable pair. Central sets are found
//! by phase holonomy: conjugation moves `h -> g h g^-1` inside `Iso(G) \ G0`
//! carry the phase `conj(ω(ghg^-1, g)) ω(g, h)`, and a conjugation orbit
//! supports a central function exactly when every loop has trivial holonomy.

use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;
use thiserror::Error;

use crate::groupoid::{ArrowId, ArrowSet, MeasuredGroupoid};
use crate::phase::Phase;

pub const MODULUS_TOLERANCE: f64 = 1e-12;
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
pub const HOLONOMY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CocycleError {
    #[error("cocycle value given for non-composable pair ({0}, {1})")]
    NotComposable(String, String),
    #[error("cocycle value at ({0}, {1}) has modulus {2}")]
    NotUnitModulus(String, String, f64),
    #[error("cocycle identity fails on ({0}, {1}, {2}) with residual {3:e}")]
    CocycleIdentityViolated(String, String, String, f64),
    #[error("arrows outside Iso(G): {0:?}")]
    NotIsotropy(Vec<String>),
    #[error("cocycle table size {0} does not match groupoid with {1} arrows")]
    SizeMismatch(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Cocycle {
    n: usize,
    values: Vec<Phase>,
    normalized: bool,
}

impl Cocycle {
    pub fn trivial(g: &MeasuredGroupoid) -> Cocycle {
        let n = g.n_arrows();
        Cocycle { n, values: vec![Phase::ONE; n * n], normalized: true }
    }

    /// Evaluate `f` on every composable pair and validate the result.
    pub fn from_fn(
        g: &MeasuredGroupoid,
        f: impl Fn(ArrowId, ArrowId) -> Phase,
    ) -> Result<Cocycle, CocycleError> {
        let n = g.n_arrows();
        let mut values = vec![Phase::ONE; n * n];
        for a in 0..n {
            for &b in g.arrows_to(g.src(a)) {
                values[a * n + b] = f(a, b);
            }
        }
        validate_table(g, values, MODULUS_TOLERANCE, IDENTITY_TOLERANCE)
    }

    /// `ω(x, y)`; `1` on non-composable pairs.
    #[inline]
    pub fn get(&self, x: ArrowId, y: ArrowId) -> Phase {
        self.values[x * self.n + y]
    }

    #[inline]
    pub fn value(&self, x: ArrowId, y: ArrowId) -> Complex64 {
        self.get(x, y).to_complex()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn n_arrows(&self) -> usize {
        self.n
    }

    /// True when every value equals `1`.
    pub fn is_trivial(&self, tol: f64) -> bool {
        self.values.iter().all(|p| p.is_one(tol))
    }

    /// Every composable pair with its phase.
    pub fn entries<'a>(&'a self, g: &'a MeasuredGroupoid) -> impl Iterator<Item = (ArrowId, ArrowId, Phase)> + 'a {
        (0..self.n).flat_map(move |a| g.arrows_to(g.src(a)).iter().map(move |&b| (a, b, self.get(a, b))))
    }

    /// `ω̄`.
    pub fn conj(&self) -> Cocycle {
        Cocycle { n: self.n, values: self.values.iter().map(|p| p.conj()).collect(), normalized: self.normalized }
    }

    /// Pointwise product, a cocycle again.
    pub fn mul(&self, other: &Cocycle) -> Cocycle {
        let values: Vec<Phase> = self.values.iter().zip(&other.values).map(|(a, b)| *a * *b).collect();
        Cocycle { n: self.n, values, normalized: self.normalized && other.normalized }
    }

    /// Restriction along an arrow id map `new -> old`.
    pub fn pull_back(&self, g_new: &MeasuredGroupoid, arrow_map: &[ArrowId]) -> Cocycle {
        let n = g_new.n_arrows();
        let mut values = vec![Phase::ONE; n * n];
        for a in 0..n {
            for &b in g_new.arrows_to(g_new.src(a)) {
                values[a * n + b] = self.get(arrow_map[a], arrow_map[b]);
            }
        }
        let normalized = normalized_flag(g_new, &values, n, IDENTITY_TOLERANCE);
        Cocycle { n, values, normalized }
    }
}

fn normalized_flag(g: &MeasuredGroupoid, values: &[Phase], n: usize, tol: f64) -> bool {
    (0..n).all(|x| {
        let e_s = g.unit_arrow(g.src(x));
        let e_t = g.unit_arrow(g.tgt(x));
        values[x * n + e_s].is_one(tol)
            && values[e_t * n + x].is_one(tol)
            && values[x * n + g.inverse(x)].is_one(tol)
    })
}

fn validate_table(
    g: &MeasuredGroupoid,
    values: Vec<Phase>,
    modulus_tol: f64,
    identity_tol: f64,
) -> Result<Cocycle, CocycleError> {
    let n = g.n_arrows();
    if values.len() != n * n {
        return Err(CocycleError::SizeMismatch(values.len(), n));
    }
    for x in 0..n {
        for &y in g.arrows_to(g.src(x)) {
            let m = values[x * n + y].modulus();
            if (m - 1.0).abs() > modulus_tol {
                return Err(CocycleError::NotUnitModulus(
                    g.arrow_name(x).into(),
                    g.arrow_name(y).into(),
                    m,
                ));
            }
        }
    }
    // ω(x, yz) ω(y, z) = ω(xy, z) ω(x, y)
    for x in 0..n {
        for &y in g.arrows_to(g.src(x)) {
            let xy = g.compose(x, y).expect("composable");
            for &z in g.arrows_to(g.src(y)) {
                let yz = g.compose(y, z).expect("composable");
                let lhs = values[x * n + yz] * values[y * n + z];
                let rhs = values[xy * n + z] * values[x * n + y];
                if !lhs.approx_eq(rhs, identity_tol) {
                    let r = (lhs.to_complex() - rhs.to_complex()).norm();
                    return Err(CocycleError::CocycleIdentityViolated(
                        g.arrow_name(x).into(),
                        g.arrow_name(y).into(),
                        g.arrow_name(z).into(),
                        r,
                    ));
                }
            }
        }
    }
    let normalized = normalized_flag(g, &values, n, identity_tol);
    Ok(Cocycle { n, values, normalized })
}

/// Validate raw `(g, h, value)` entries; omitted composable pairs default to `1`.
pub fn validate_cocycle(g: &MeasuredGroupoid, raw: &[(ArrowId, ArrowId, Phase)]) -> Result<Cocycle, CocycleError> {
    validate_cocycle_with(g, raw, MODULUS_TOLERANCE, IDENTITY_TOLERANCE)
}

pub fn validate_cocycle_with(
    g: &MeasuredGroupoid,
    raw: &[(ArrowId, ArrowId, Phase)],
    modulus_tol: f64,
    identity_tol: f64,
) -> Result<Cocycle, CocycleError> {
    let n = g.n_arrows();
    let mut values = vec![Phase::ONE; n * n];
    for &(a, b, p) in raw {
        if a >= n || b >= n || g.compose(a, b).is_none() {
            let name = |i: usize| if i < n { g.arrow_name(i).to_string() } else { format!("#{i}") };
            return Err(CocycleError::NotComposable(name(a), name(b)));
        }
        values[a * n + b] = p;
    }
    validate_table(g, values, modulus_tol, identity_tol)
}

/// `ω'(x, y) = ρ(x) ρ(y) conj(ρ(xy)) ω(x, y)`.
pub fn apply_coboundary(g: &MeasuredGroupoid, omega: &Cocycle, rho: &[Phase]) -> Cocycle {
    let n = omega.n;
    let mut values = omega.values.clone();
    for x in 0..n {
        for &y in g.arrows_to(g.src(x)) {
            let xy = g.compose(x, y).expect("composable");
            values[x * n + y] = rho[x] * rho[y] * rho[xy].conj() * omega.get(x, y);
        }
    }
    let normalized = normalized_flag(g, &values, n, IDENTITY_TOLERANCE);
    Cocycle { n, values, normalized }
}

/// Cohomologous normalized cocycle with `ω(x, x^-1) = 1`.
///
/// First `ρ(x) = conj ω(x, s(x))` clears the unit slots, then
/// `ρ(x) = sqrt(conj ω(x, x^-1))` (principal branch, one value per pair
/// `{x, x^-1}`) clears the inverse slots.
pub fn normalize_cocycle(g: &MeasuredGroupoid, omega: &Cocycle) -> Cocycle {
    let n = g.n_arrows();
    let rho1: Vec<Phase> = (0..n).map(|x| omega.get(x, g.unit_arrow(g.src(x))).conj()).collect();
    let w1 = apply_coboundary(g, omega, &rho1);
    let mut rho2 = vec![Phase::ONE; n];
    for x in 0..n {
        let xi = g.inverse(x);
        if xi < x {
            continue;
        }
        let r = w1.get(x, xi).conj().principal_sqrt();
        rho2[x] = r;
        rho2[xi] = r;
    }
    let mut w2 = apply_coboundary(g, &w1, &rho2);
    w2.normalized = normalized_flag(g, &w2.values, n, IDENTITY_TOLERANCE);
    w2
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityVerdict {
    pub regular: bool,
    /// `(g, x, y)` with `g x g^-1 = y` and `ω(y, g) != ω(g, x)`.
    pub witness: Option<(ArrowId, ArrowId, ArrowId)>,
}

/// `ω(y, g) = ω(g, x)` whenever `g x g^-1 = y` for `x, y ∈ A` over positive mass.
pub fn is_omega_regular(
    g: &MeasuredGroupoid,
    omega: &Cocycle,
    a: &ArrowSet,
) -> Result<RegularityVerdict, CocycleError> {
    let bad: Vec<String> = a.iter().filter(|&h| !g.is_isotropy(h)).map(|h| g.arrow_name(h).into()).collect();
    if !bad.is_empty() {
        return Err(CocycleError::NotIsotropy(bad));
    }
    for x in a.iter().filter(|&x| g.is_positive_arrow(x)) {
        for &k in g.arrows_from(g.tgt(x)) {
            let y = g.conjugate(k, x).expect("composable");
            if a.contains(y) && !omega.get(y, k).approx_eq(omega.get(k, x), HOLONOMY_TOLERANCE) {
                return Ok(RegularityVerdict { regular: false, witness: Some((k, x, y)) });
            }
        }
    }
    Ok(RegularityVerdict { regular: true, witness: None })
}

/// Phase carried by the conjugation move `h -> g h g^-1`.
#[inline]
pub fn conjugation_phase(g: &MeasuredGroupoid, omega: &Cocycle, k: ArrowId, h: ArrowId) -> Option<(ArrowId, Complex64)> {
    let c = g.conjugate(k, h)?;
    Some((c, omega.value(c, k).conj() * omega.value(k, h)))
}

/// Holonomy analysis of one conjugation orbit.
#[derive(Debug, Clone)]
pub struct OrbitHolonomy {
    pub nodes: Vec<ArrowId>,
    pub consistent: bool,
    /// Tree-propagated values, `f(root) = 1`.
    pub f: BTreeMap<ArrowId, Complex64>,
    /// Largest off-tree mismatch `|f(ghg^-1) - phase f(h)|`.
    pub worst_residual: f64,
    pub units: bool,
}

/// Conjugation orbits of `Iso(G)` over positive-mass units, in order of their smallest arrow.
pub fn holonomy_orbits(g: &MeasuredGroupoid, omega: &Cocycle, tol: f64, include_units: bool) -> Vec<OrbitHolonomy> {
    let n = g.n_arrows();
    let mut visited = vec![false; n];
    let mut out = Vec::new();
    for root in 0..n {
        if visited[root] || !g.is_isotropy(root) || !g.is_positive_arrow(root) {
            continue;
        }
        let units = g.is_unit_arrow(root);
        if units && !include_units {
            continue;
        }
        let mut f = BTreeMap::new();
        let mut nodes = vec![root];
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        f.insert(root, Complex64::new(1.0, 0.0));
        let mut worst: f64 = 0.0;
        while let Some(h) = queue.pop_front() {
            let fh = f[&h];
            for &k in g.arrows_from(g.tgt(h)) {
                let (c, ph) = conjugation_phase(g, omega, k, h).expect("composable");
                let want = ph * fh;
                match f.get(&c) {
                    Some(&fc) => worst = worst.max((fc - want).norm()),
                    None => {
                        f.insert(c, want);
                        visited[c] = true;
                        nodes.push(c);
                        queue.push_back(c);
                    }
                }
            }
        }
        nodes.sort_unstable();
        out.push(OrbitHolonomy { nodes, consistent: worst <= tol, f, worst_residual: worst, units });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralSetCertificate {
    pub support: ArrowSet,
    pub f: BTreeMap<ArrowId, Complex64>,
}

impl CentralSetCertificate {
    /// Largest violation of `f(ghg^-1) = conj(ω(ghg^-1, g)) ω(g, h) f(h)` over the support.
    pub fn residual(&self, g: &MeasuredGroupoid, omega: &Cocycle) -> f64 {
        let mut worst: f64 = 0.0;
        for h in self.support.iter() {
            for &k in g.arrows_from(g.tgt(h)) {
                let (c, ph) = conjugation_phase(g, omega, k, h).expect("composable");
                let fc = self.f.get(&c).copied().unwrap_or_default();
                worst = worst.max((fc - ph * self.f[&h]).norm());
            }
        }
        worst
    }
}

/// First conjugation orbit in `Iso(G) \ G0` (positive mass) with trivial holonomy.
pub fn central_set_search(g: &MeasuredGroupoid, omega: &Cocycle) -> Option<CentralSetCertificate> {
    central_set_search_with(g, omega, HOLONOMY_TOLERANCE)
}

pub fn central_set_search_with(g: &MeasuredGroupoid, omega: &Cocycle, tol: f64) -> Option<CentralSetCertificate> {
    holonomy_orbits(g, omega, tol, false)
        .into_iter()
        .find(|o| o.consistent)
        .map(|o| CentralSetCertificate { support: o.nodes.iter().copied().collect(), f: o.f })
}

/// Number of conjugation orbits of `Iso(G)` over positive mass with trivial holonomy.
///
/// Each such orbit carries one central function, so this is the dimension of
/// the center of the twisted algebra.
pub fn predicted_center_dim(g: &MeasuredGroupoid, omega: &Cocycle, tol: f64) -> usize {
    holonomy_orbits(g, omega, tol, true).iter().filter(|o| o.consistent).count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KleppnerVerdict {
    pub holds: bool,
    pub witness: Option<ArrowId>,
}

/// Kleppner's condition through singletons.
///
/// It fails iff some positive-mass `h ∈ Iso(G) \ G0` has `ω(h, g) = ω(g, h)`
/// for every `g` commuting with `h`.
pub fn kleppner_holds(g: &MeasuredGroupoid, omega: &Cocycle) -> KleppnerVerdict {
    kleppner_holds_with(g, omega, HOLONOMY_TOLERANCE)
}

pub fn kleppner_holds_with(g: &MeasuredGroupoid, omega: &Cocycle, tol: f64) -> KleppnerVerdict {
    for h in 0..g.n_arrows() {
        if !g.is_isotropy(h) || g.is_unit_arrow(h) || !g.is_positive_arrow(h) {
            continue;
        }
        let regular = g.arrows_from(g.src(h)).iter().all(|&k| {
            g.conjugate(k, h) != Some(h) || omega.get(h, k).approx_eq(omega.get(k, h), tol)
        });
        if regular {
            return KleppnerVerdict { holds: false, witness: Some(h) };
        }
    }
    KleppnerVerdict { holds: true, witness: None }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistedIccVerdict {
    pub icc: bool,
    pub certificate: Option<CentralSetCertificate>,
}

pub fn twisted_icc(g: &MeasuredGroupoid, omega: &Cocycle) -> TwistedIccVerdict {
    twisted_icc_with(g, omega, HOLONOMY_TOLERANCE)
}

pub fn twisted_icc_with(g: &MeasuredGroupoid, omega: &Cocycle, tol: f64) -> TwistedIccVerdict {
    let certificate = central_set_search_with(g, omega, tol);
    TwistedIccVerdict { icc: certificate.is_none(), certificate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::{full_relation, group_groupoid, klein_four_cocycle, FiniteGroupTable};
    use crate::conjugacy::is_icc;

    fn klein() -> (MeasuredGroupoid, Cocycle) {
        let g = group_groupoid(&FiniteGroupTable::klein_four());
        let w = klein_four_cocycle(&g);
        (g, w)
    }

    #[test]
    fn trivial_is_normalized() {
        let g = full_relation(2);
        let w = Cocycle::trivial(&g);
        assert!(w.is_normalized());
        let n = normalize_cocycle(&g, &w);
        assert!(n.is_trivial(0.0));
    }

    #[test]
    fn klein_cocycle_validates_and_normalizes() {
        let (g, w) = klein();
        assert!(!w.is_normalized());
        let n = normalize_cocycle(&g, &w);
        assert!(n.is_normalized());
        for x in 0..4 {
            assert!(n.get(x, g.inverse(x)).is_one(0.0));
        }
        let nn = normalize_cocycle(&g, &n);
        for (a, b, p) in n.entries(&g) {
            assert!(p.approx_eq(nn.get(a, b), 1e-15));
        }
    }

    #[test]
    fn random_phases_fail_identity() {
        let g = group_groupoid(&FiniteGroupTable::cyclic(3));
        let raw = vec![(1, 1, Phase::root(1, 5))];
        assert!(matches!(validate_cocycle(&g, &raw), Err(CocycleError::CocycleIdentityViolated(..))));
    }

    #[test]
    fn non_unit_modulus_rejected() {
        let g = group_groupoid(&FiniteGroupTable::cyclic(2));
        let raw = vec![(1, 1, Phase::from_complex(Complex64::new(0.5, 0.0)))];
        assert!(matches!(validate_cocycle(&g, &raw), Err(CocycleError::NotUnitModulus(..))));
    }

    #[test]
    fn coboundary_round_trip() {
        let (g, w) = klein();
        let rho: Vec<Phase> = (0..4).map(|i| Phase::root(i as i64, 7)).collect();
        let w1 = apply_coboundary(&g, &w, &rho);
        let conj: Vec<Phase> = rho.iter().map(|p| p.conj()).collect();
        let w2 = apply_coboundary(&g, &w1, &conj);
        for (a, b, p) in w.entries(&g) {
            assert_eq!(p, w2.get(a, b));
        }
    }

    #[test]
    fn klein_regularity_and_kleppner() {
        let (g, w) = klein();
        let w = normalize_cocycle(&g, &w);
        let h = g.find_arrow("(0,1)@x0").unwrap();
        let v = is_omega_regular(&g, &w, &ArrowSet::from_iter([h])).unwrap();
        assert!(!v.regular);
        assert_eq!(g.arrow_name(v.witness.unwrap().0), "(1,0)@x0");
        assert!(kleppner_holds(&g, &w).holds);
        assert!(central_set_search(&g, &w).is_none());
        assert!(twisted_icc(&g, &w).icc);
        assert_eq!(predicted_center_dim(&g, &w, 1e-9), 1);
        let t = Cocycle::trivial(&g);
        assert!(!twisted_icc(&g, &t).icc);
        assert!(!kleppner_holds(&g, &t).holds);
        assert_eq!(predicted_center_dim(&g, &t, 1e-9), 4);
    }

    #[test]
    fn untwisted_matches_icc() {
        for g in [
            full_relation(3),
            group_groupoid(&FiniteGroupTable::cyclic(2)),
            group_groupoid(&FiniteGroupTable::symmetric(3)),
        ] {
            let t = Cocycle::trivial(&g);
            assert_eq!(twisted_icc(&g, &t).icc, is_icc(&g).icc);
        }
        let z2 = group_groupoid(&FiniteGroupTable::cyclic(2));
        let k = kleppner_holds(&z2, &Cocycle::trivial(&z2));
        assert_eq!(k.witness, Some(1));
        let p = full_relation(2);
        assert!(kleppner_holds(&p, &Cocycle::trivial(&p)).holds);
        assert!(central_set_search(&p, &Cocycle::trivial(&p)).is_none());
    }

    #[test]
    fn certificate_satisfies_transformation_rule() {
        let g = group_groupoid(&FiniteGroupTable::symmetric(3));
        let t = Cocycle::trivial(&g);
        let c = central_set_search(&g, &t).unwrap();
        assert!(c.residual(&g, &t) < 1e-12);
        assert!(c.f.values().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }
}
