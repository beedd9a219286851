//! Worked examples checked against independent computations.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;

use groupoid_vna::basis::{build_basis, build_iso_basis, conjugate_basis, extend_iso_basis};
use groupoid_vna::cocycle::{
    central_set_search, is_omega_regular, kleppner_holds, normalize_cocycle, twisted_icc, validate_cocycle,
};
use groupoid_vna::conjugacy::{conjugacy_class, ergodic_class_decomposition, fiber_count, is_icc};
use groupoid_vna::constructors::{
    deaconu_renault, disjoint_union, essentially_free, full_relation, globalize, group_bundle, group_groupoid,
    klein_four_cocycle, partial_action_groupoid, restrict_partial, sn_bundle_data, transformation_groupoid,
    DeaconuRenaultSystem, FiniteGroupTable, PartialActionSystem,
};
use groupoid_vna::groupoid::{
    arrow_measure, check_isomorphism_by_names, compose_many, is_ergodic, is_full, iso_subgroupoid, orbits, restrict,
    Mass, UnitSpace,
};
use groupoid_vna::vna::{factoriality_report, Rep, Tolerances};
use groupoid_vna::{ArrowSet, Bisection, Cocycle, MeasuredGroupoid, Operator, Phase, Side, TwistedVna};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn klein() -> MeasuredGroupoid {
    group_groupoid(&FiniteGroupTable::klein_four())
}

/// `(a, b)` from a Klein-four arrow name `(a,b)@x0`.
fn klein_pair(g: &MeasuredGroupoid, h: usize) -> (u32, u32) {
    let name = g.arrow_name(h);
    let b = name.as_bytes();
    ((b[1] - b'0') as u32, (b[3] - b'0') as u32)
}

#[test]
fn full_relation_two_units_measures() {
    let g = full_relation(2);
    assert_eq!(g.n_arrows(), 4);
    assert!(g.flags().nonsingular && g.flags().pmp);
    // two arrows leave each unit of mass 1/2
    assert_eq!(arrow_measure(&g, &g.all_arrows(), Side::Source), 2.0);
    assert_eq!(arrow_measure(&g, &g.all_arrows(), Side::Target), 2.0);
    assert_eq!(arrow_measure(&g, &g.unit_arrows(), Side::Source), 1.0);
}

#[test]
fn z2_square_is_unit() {
    let g = group_groupoid(&FiniteGroupTable::cyclic(2));
    let a = g.find_arrow("1@x0").unwrap();
    assert_eq!(compose_many(&g, &[a, a]), Some(g.unit_arrow(0)));
}

#[test]
fn trivial_action_isotropy_is_everything() {
    let z2 = FiniteGroupTable::cyclic(2);
    let g = transformation_groupoid(&z2, &|_, x| x, UnitSpace::uniform(2)).unwrap();
    assert_eq!(iso_subgroupoid(&g).len(), 4);
}

#[test]
fn z4_on_itself() {
    let z4 = FiniteGroupTable::cyclic(4);
    let g = transformation_groupoid(&z4, &|a, x| (a + x) % 4, UnitSpace::uniform(4)).unwrap();
    assert_eq!(g.n_arrows(), 16);
    assert_eq!(orbits(&g).len(), 1);
    assert!(is_ergodic(&g).ergodic);
    assert!(is_icc(&g).icc);
}

#[test]
fn null_orbits_are_ignored_for_ergodicity() {
    let pair = full_relation(2);
    let point = group_groupoid(&FiniteGroupTable::trivial());
    let g = disjoint_union(&[point, pair], vec![Mass::from_ratio(1, 1), Mass::zero(), Mass::zero()]);
    assert_eq!(orbits(&g).len(), 2);
    assert!(is_ergodic(&g).ergodic);
}

#[test]
fn restriction_of_full_relation() {
    let g = full_relation(3);
    let r = restrict(&g, &BTreeSet::from([0, 2])).unwrap();
    assert_eq!(r.groupoid.n_arrows(), 4);
    assert_eq!(r.renormalization, 1.5);
    check_isomorphism_by_names(&restrict(&full_relation(2), &BTreeSet::from([0, 1])).unwrap().groupoid, &full_relation(2))
        .unwrap();
    assert!(r.groupoid.flags().pmp);
}

#[test]
fn fullness_of_one_unit() {
    let g = full_relation(2);
    let f = is_full(&g, &BTreeSet::from([0]));
    assert!(f.borel_full && f.mu_full);
}

#[test]
fn basis_of_full_relation() {
    let g = full_relation(2);
    for symmetric in [false, true] {
        let b = build_basis(&g, symmetric);
        let union: usize = b.blocks.iter().map(|x| x.arrows().len()).sum();
        assert_eq!(union, 4);
        assert_eq!(b.union(), g.all_arrows());
        assert_eq!(b.unit_block().arrows(), &g.unit_arrows());
    }
}

#[test]
fn conjugating_a_basis_restricts_it() {
    let g = full_relation(2);
    let b = build_basis(&g, true);
    let e01 = g.find_arrow("e01").unwrap();
    let cb = conjugate_basis(&g, &b, &Bisection::singleton(e01));
    // e01 B e10 lives over the single unit x0
    let arrows: BTreeSet<String> = cb.blocks.iter().flat_map(|x| x.arrows().names(&g)).collect();
    assert_eq!(arrows, BTreeSet::from(["e00".to_string()]));
}

#[test]
fn swap_basis_extends_iso_basis_by_one_block() {
    let z2 = FiniteGroupTable::cyclic(2);
    let g = transformation_groupoid(&z2, &|a, x| (a + x) % 2, UnitSpace::uniform(2)).unwrap();
    let iso = build_iso_basis(&g);
    assert_eq!(iso.len(), 1);
    let full = extend_iso_basis(&g, &iso);
    assert_eq!(full.len(), 2);
    assert_eq!(full.blocks[1].arrows().len(), 2);
}

/// Conjugacy class of a permutation by brute force over all of `S_3`.
fn s3_class_size(p: [usize; 3]) -> usize {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let compose = |a: [usize; 3], b: [usize; 3]| [a[b[0]], a[b[1]], a[b[2]]];
    let inverse = |a: [usize; 3]| {
        let mut r = [0; 3];
        for i in 0..3 {
            r[a[i]] = i;
        }
        r
    };
    perms.iter().map(|&g| compose(compose(g, p), inverse(g))).collect::<BTreeSet<_>>().len()
}

#[test]
fn s3_transposition_class() {
    let g = group_groupoid(&FiniteGroupTable::symmetric(3));
    let t = g.find_arrow("102@x0").unwrap();
    let class = conjugacy_class(&g, &ArrowSet::from_iter([t])).unwrap();
    let want = s3_class_size([1, 0, 2]);
    assert_eq!(want, 3);
    assert_eq!(class.omega.len(), want);
    assert_eq!(class.mu_s, want as f64);
    assert_eq!(fiber_count(&g, &class, 0), want);
    let vs = ergodic_class_decomposition(&g, &ArrowSet::from_iter([t])).unwrap();
    assert_eq!(vs.len(), 3);
}

#[test]
fn free_swap_is_icc() {
    let z2 = FiniteGroupTable::cyclic(2);
    let g = transformation_groupoid(&z2, &|a, x| (a + x) % 2, UnitSpace::uniform(2)).unwrap();
    assert_eq!(iso_subgroupoid(&g), g.unit_arrows());
    assert!(is_icc(&g).icc);
}

#[test]
fn klein_cocycle_identity_by_hand() {
    let g = klein();
    let w = klein_four_cocycle(&g);
    let omega = |x: usize, y: usize| {
        let ((_, b), (cc, _)) = (klein_pair(&g, x), klein_pair(&g, y));
        if (b * cc) % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    };
    for x in 0..4 {
        for y in 0..4 {
            assert_eq!(w.value(x, y), c(omega(x, y)));
            for z in 0..4 {
                let xy = g.compose(x, y).unwrap();
                let yz = g.compose(y, z).unwrap();
                assert_eq!(omega(x, yz) * omega(y, z), omega(xy, z) * omega(x, y));
            }
        }
    }
    let raw: Vec<_> = (0..4).flat_map(|x| (0..4).map(move |y| (x, y))).map(|(x, y)| (x, y, Phase::from_complex(c(omega(x, y))))).collect();
    assert!(validate_cocycle(&g, &raw).is_ok());
}

#[test]
fn klein_normalization() {
    let g = klein();
    let w = normalize_cocycle(&g, &klein_four_cocycle(&g));
    assert!(w.is_normalized());
    for x in 0..4 {
        assert!(w.get(x, g.inverse(x)).is_one(1e-12));
    }
    let twice = normalize_cocycle(&g, &w);
    for x in 0..4 {
        for y in 0..4 {
            assert!(twice.get(x, y).approx_eq(w.get(x, y), 1e-12));
        }
    }
}

#[test]
fn coboundary_of_trivial_keeps_central_sets() {
    let g = group_groupoid(&FiniteGroupTable::symmetric(3));
    let rho: Vec<Phase> = (0..g.n_arrows()).map(|i| Phase::root(i as i64, 6)).collect();
    let w = groupoid_vna::cocycle::apply_coboundary(&g, &Cocycle::trivial(&g), &rho);
    let w = normalize_cocycle(&g, &w);
    let a = central_set_search(&g, &Cocycle::trivial(&g)).map(|c| c.support);
    let b = central_set_search(&g, &w).map(|c| c.support);
    assert_eq!(a, b);
    assert!(a.is_some());
}

#[test]
fn klein_regularity_kleppner_and_holonomy() {
    let g = klein();
    let w = normalize_cocycle(&g, &klein_four_cocycle(&g));
    let h = g.find_arrow("(0,1)@x0").unwrap();
    let partner = g.find_arrow("(1,0)@x0").unwrap();
    let v = is_omega_regular(&g, &klein_four_cocycle(&g), &ArrowSet::from_iter([h])).unwrap();
    assert!(!v.regular);
    assert_eq!(v.witness.map(|(k, _, _)| k), Some(partner));
    // loop at h through the partner: phase ω(h,k)^-1 ω(k,h) = -1
    let raw = klein_four_cocycle(&g);
    assert_eq!(raw.value(partner, h) * raw.value(h, partner).conj(), c(-1.0));
    assert!(central_set_search(&g, &w).is_none());
    assert!(kleppner_holds(&g, &w).holds);
    assert!(twisted_icc(&g, &w).icc);
    assert!(!twisted_icc(&g, &Cocycle::trivial(&g)).icc);
}

/// Matrix of `λ_a` on `ℓ²` of a one-unit groupoid, built from the composition table.
fn left_matrix(g: &MeasuredGroupoid, w: &Cocycle, a: usize) -> DMatrix<Complex64> {
    let n = g.n_arrows();
    DMatrix::from_fn(n, n, |i, j| if g.compose(a, j) == Some(i) { w.value(a, j) } else { c(0.0) })
}

#[test]
fn klein_twisted_singleton_matrix() {
    let g = klein();
    let w = normalize_cocycle(&g, &klein_four_cocycle(&g));
    let v = TwistedVna::new(&g, &w).unwrap();
    let h = g.find_arrow("(0,1)@x0").unwrap();
    let m = v.singleton(h, Rep::Left).matrix;
    assert!((m.clone() - left_matrix(&g, &w, h)).norm() < 1e-15);
    for i in 0..4 {
        let nonzero: Vec<_> = (0..4).filter(|&j| m[(i, j)].norm() > 0.5).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((m[(i, nonzero[0])].norm() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn convolution_matches_operator_products_on_bisections() {
    let g = klein();
    let w = normalize_cocycle(&g, &klein_four_cocycle(&g));
    let v = TwistedVna::new(&g, &w).unwrap();
    let basis = build_basis(&g, true);
    for a in &basis.blocks {
        for b in &basis.blocks {
            let ind = |s: &ArrowSet| (0..4).map(|x| if s.contains(x) { c(1.0) } else { c(0.0) }).collect::<Vec<_>>();
            let conv = v.twisted_convolve(&ind(a.arrows()), &ind(b.arrows()));
            let prod = v.rep_operator(a.arrows(), Rep::Left).mul(&v.rep_operator(b.arrows(), Rep::Left));
            let j = v.j_function(&prod);
            for x in 0..4 {
                assert!((conv[x] - j[x]).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn full_relation_is_two_by_two_matrices() {
    let g = full_relation(2);
    let v = TwistedVna::untwisted(&g).unwrap();
    // the four singletons are the matrix units e_ij acting on each source fiber
    assert_eq!(v.left_algebra().dim(), 4);
    let comm = v.commutant_of_left();
    assert_eq!(comm.dim(), 4);
    let right = v.algebra(Rep::Right);
    assert!(comm.contains_residual(&right) < 1e-12 && right.contains_residual(&comm) < 1e-12);
    assert_eq!(v.center().dim(), 1);
}

#[test]
fn z2_center_is_two_dimensional() {
    let g = group_groupoid(&FiniteGroupTable::cyclic(2));
    let v = TwistedVna::untwisted(&g).unwrap();
    let comm = v.commutant_of_left();
    assert!(comm.contains_residual(v.left_algebra()) < 1e-12);
    assert_eq!(v.center().dim(), 2);
}

#[test]
fn klein_centers() {
    let g = klein();
    let w = normalize_cocycle(&g, &klein_four_cocycle(&g));
    assert_eq!(TwistedVna::new(&g, &w).unwrap().center().dim(), 1);
    assert_eq!(TwistedVna::untwisted(&g).unwrap().center().dim(), 4);
}

#[test]
fn invariant_subalgebra_with_null_orbit() {
    let g = group_bundle(
        &vec![FiniteGroupTable::trivial(); 3],
        UnitSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![Mass::from_ratio(1, 3), Mass::from_ratio(2, 3), Mass::zero()],
        ),
    );
    assert_eq!(TwistedVna::untwisted(&g).unwrap().invariant_subalgebra().dim(), 2);
}

#[test]
fn expectation_of_range_projection() {
    let g = full_relation(3);
    let v = TwistedVna::untwisted(&g).unwrap();
    let a = ArrowSet::from_iter([g.find_arrow("e01").unwrap(), g.find_arrow("e12").unwrap()]);
    let la = v.rep_operator(&a, Rep::Left);
    let e = v.conditional_expectation(&la.mul(&la.adjoint())).unwrap();
    let targets = a.targets(&g);
    for x in 0..3 {
        let want = if targets.contains(&x) { 1.0 } else { 0.0 };
        assert!((e[x] - c(want)).norm() < 1e-14);
    }
}

#[test]
fn state_and_sharp_norm() {
    let g = full_relation(3);
    let v = TwistedVna::untwisted(&g).unwrap();
    let a = ArrowSet::from_iter([g.find_arrow("e01").unwrap(), g.find_arrow("e21").unwrap()]);
    // not a bisection, still a bounded element of the algebra
    let la = v.rep_operator(&a, Rep::Left);
    let m = arrow_measure(&g, &a, Side::Source);
    let (phi, sharp) = v.phi_and_sharp(&la).unwrap();
    assert!(phi.norm() < 1e-15);
    // φ(λ_A^* λ_A) = μ_s(A) when A has distinct targets
    let want = (m + arrow_measure(&g, &a, Side::Target)).sqrt();
    assert!((sharp - want).abs() < 1e-14, "{sharp} vs {want}");
}

#[test]
fn central_elements_of_twisted_klein_are_scalars() {
    let g = klein();
    let w = normalize_cocycle(&g, &klein_four_cocycle(&g));
    let v = TwistedVna::new(&g, &w).unwrap();
    for a in v.center().basis_ops() {
        let j = v.j_function(&a);
        for h in 0..4 {
            if !g.is_unit_arrow(h) {
                assert!(j[h].norm() < 1e-12);
            }
        }
    }
}

#[test]
fn fourier_of_basis_elements() {
    let g = full_relation(3);
    let v = TwistedVna::untwisted(&g).unwrap();
    let basis = build_basis(&g, true);
    for (i, b) in basis.blocks.iter().enumerate() {
        let f = v.fourier(&v.rep_operator(b.arrows(), Rep::Left), &basis).unwrap();
        for (k, coef) in f.coefficients.iter().enumerate() {
            let want = if k == i { 1.0 } else { 0.0 };
            assert!(coef.iter().all(|z| (z - c(want)).norm() < 1e-14));
        }
    }
    let diag = v.multiplication(&[c(1.0), c(2.0), c(-1.0)]);
    let f = v.fourier(&diag, &basis).unwrap();
    assert!(f.coefficients.iter().skip(1).all(|cf| cf.iter().all(|z| z.norm() < 1e-14)));
    assert!(f.residual < 1e-14);
    let zero = Operator::zero(9);
    assert!(v.fourier(&zero, &basis).unwrap().coefficient_norm_sq == 0.0);
}

#[test]
fn reports_on_standard_fixtures() {
    let tol = Tolerances::default();
    let m2 = full_relation(2);
    let r = factoriality_report(&m2, &Cocycle::trivial(&m2), &tol).unwrap();
    assert!(r.factor && r.icc && r.ergodic && r.consistent());
    let z2 = group_groupoid(&FiniteGroupTable::cyclic(2));
    let r = factoriality_report(&z2, &Cocycle::trivial(&z2), &tol).unwrap();
    assert!(!r.factor && !r.icc && r.consistent());
    let k = klein();
    let r = factoriality_report(&k, &klein_four_cocycle(&k), &tol).unwrap();
    assert!(r.factor && r.twisted_icc && r.kleppner && r.consistent());
}

#[test]
fn bundle_centers_are_class_counts() {
    let z2 = FiniteGroupTable::cyclic(2);
    let g = group_bundle(&[z2.clone(), z2], UnitSpace::uniform(2));
    assert_eq!(g.n_arrows(), 4);
    assert_eq!(TwistedVna::untwisted(&g).unwrap().center().dim(), 4);
    let s3 = group_groupoid(&FiniteGroupTable::symmetric(3));
    assert_eq!(TwistedVna::untwisted(&s3).unwrap().center().dim(), 3);
}

#[test]
fn swap_is_the_full_relation() {
    let z2 = FiniteGroupTable::cyclic(2);
    let g = transformation_groupoid(&z2, &|a, x| (a + x) % 2, UnitSpace::uniform(2)).unwrap();
    let m2 = full_relation(2);
    // relabel (a, x) -> e_{t s}
    let arrow_map: Vec<usize> = (0..4)
        .map(|i| m2.find_arrow(&format!("e{}{}", g.tgt(i), g.src(i))).unwrap())
        .collect();
    groupoid_vna::groupoid::check_isomorphism(&g, &m2, &[0, 1], &arrow_map).unwrap();
}

fn z2_half_partial() -> PartialActionSystem {
    let z2 = FiniteGroupTable::cyclic(2);
    let maps = vec![[(0, 0), (1, 1)].into_iter().collect(), [(0, 0)].into_iter().collect()];
    PartialActionSystem { group: z2, space: UnitSpace::uniform(2), maps }
}

#[test]
fn partial_action_with_one_fixed_point() {
    let p = z2_half_partial();
    let g = partial_action_groupoid(&p).unwrap();
    let names: BTreeSet<_> = g.arrows().iter().map(|a| a.name.clone()).collect();
    assert_eq!(names, BTreeSet::from(["0@x0".into(), "0@x1".into(), "1@x0".into()]));
}

#[test]
fn restricting_the_swap_to_one_point() {
    let z2 = FiniteGroupTable::cyclic(2);
    let p = PartialActionSystem::global(z2, UnitSpace::uniform(2), &|a, x| (a + x) % 2).unwrap();
    let r = restrict_partial(&p, &BTreeSet::from([0])).unwrap();
    assert!(r.maps[1].is_empty());
    let g = partial_action_groupoid(&r).unwrap();
    assert_eq!(g.n_arrows(), 1);
    // the same groupoid as restricting the transformation groupoid
    let big = partial_action_groupoid(&p).unwrap();
    let small = restrict(&big, &BTreeSet::from([0])).unwrap().groupoid;
    check_isomorphism_by_names(&small, &g).unwrap();
}

#[test]
fn globalization_of_half_partial_action() {
    let p = z2_half_partial();
    let glob = globalize(&p).unwrap();
    // pairs (e,0) ~ (a,0) since σ_a(0) = 0; (e,1) and (a,1) stay apart
    assert_eq!(glob.global.space.len(), 3);
    let fixed = glob.embedding[0];
    let moved: Vec<usize> = (0..3).filter(|&x| x != fixed).collect();
    assert_eq!(glob.global.apply(1, fixed), Some(fixed));
    assert_eq!(glob.global.apply(1, moved[0]), Some(moved[1]));
    assert!(glob.isomorphism.is_ok());
}

#[test]
fn globalization_with_empty_domains() {
    let z3 = FiniteGroupTable::cyclic(3);
    let mut maps = vec![Default::default(); 3];
    maps[0] = [(0, 0), (1, 1)].into_iter().collect();
    let p = PartialActionSystem { group: z3, space: UnitSpace::uniform(2), maps };
    assert_eq!(globalize(&p).unwrap().global.space.len(), 6);
}

#[test]
fn dr_tail_into_fixed_point() {
    let d = DeaconuRenaultSystem { space: UnitSpace::uniform(2), sigma: vec![1, 1], bound: 5 };
    let v = deaconu_renault(&d).unwrap();
    for k in -5..=5 {
        assert!(v.b_n[&k].contains(&0));
    }
    let f = essentially_free(&d).unwrap();
    assert!(!f.essentially_free);
    assert!(v.b_n_measure.iter().any(|(&k, &m)| k != 0 && m > 0.0));
    let mut null = d.clone();
    null.space = UnitSpace { names: d.space.names.clone(), masses: vec![Mass::zero(), Mass::zero()], unnormalized: true };
    let f = essentially_free(&null).unwrap();
    assert!(f.essentially_free);
    assert!(deaconu_renault(&null).unwrap().b_n_measure.iter().all(|(_, &m)| m == 0.0));
}

#[test]
fn symmetric_bundle_truncation() {
    let s = sn_bundle_data(3);
    let class = conjugacy_class(&s.groupoid, &s.transpositions).unwrap();
    let counts: Vec<usize> = (0..2).map(|x| fiber_count(&s.groupoid, &class, x)).collect();
    assert_eq!(counts, vec![1, 3]);
    let want: f64 = [(2usize, 1.0), (3, 3.0)]
        .iter()
        .enumerate()
        .map(|(x, &(_, size))| s.groupoid.mass(x) * size)
        .sum();
    assert!((class.mu_s - want).abs() < 1e-15);
}
