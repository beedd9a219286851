//! Twisted groupoid von Neumann algebras as concrete matrix *-algebras.
//!
//! Operators act on `ℓ²(G, μ_s)` restricted to arrows over positive-mass
//! units, in the orthonormal coordinates `e_g = δ_g / sqrt(mass(s(g)))`, so
//! the matrix adjoint is the operator adjoint.
//!
//! * left: `λ_a e_h = ω(a, h) e_{ah}`
//! * right: `ρ_a δ_h = ω(h, a^-1) δ_{h a^-1} = conj(ω(h a^-1, a)) δ_{h a^-1}`,
//!   the right regular `ω̄`-representation; in orthonormal coordinates it
//!   picks up `sqrt(mass(t(a)) / mass(s(a)))`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::basis::{build_basis, Basis};
use crate::cocycle::{
    holonomy_orbits, kleppner_holds_with, normalize_cocycle, twisted_icc_with, Cocycle, HOLONOMY_TOLERANCE,
    IDENTITY_TOLERANCE, MODULUS_TOLERANCE,
};
use crate::conjugacy::is_icc;
use crate::groupoid::{is_ergodic, orbits, ArrowId, ArrowSet, MeasuredGroupoid, UnitId, MASS_TOLERANCE};
use crate::sparse::{commutant_within, orthonormalize, SpMat};
pub use crate::sparse::SpectralInfo;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VnaError {
    #[error("the measure is not nonsingular")]
    NotNonsingular,
    #[error("the cocycle is not normalized")]
    NotNormalized,
    #[error("operator is not in the algebra (residual {0:e})")]
    NotInAlgebra(f64),
    #[error("Fourier decomposition needs a symmetric basis")]
    AsymmetricBasis,
    #[error("operator has dimension {0}, expected {1}")]
    DimensionMismatch(usize, usize),
}

/// Numerical tolerances; the defaults are the ones used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rank: f64,
    pub containment: f64,
    pub holonomy: f64,
    pub modulus: f64,
    pub identity: f64,
    pub mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-9,
            containment: 1e-8,
            holonomy: HOLONOMY_TOLERANCE,
            modulus: MODULUS_TOLERANCE,
            identity: IDENTITY_TOLERANCE,
            mass: MASS_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rep {
    Left,
    Right,
}

/// Arrows over positive-mass units with their weights `mass(s(g))`.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Space {
    pub index: Vec<ArrowId>,
    pub weight: Vec<f64>,
    position: Vec<Option<usize>>,
}

impl L2Space {
    pub fn new(g: &MeasuredGroupoid) -> Self {
        let index: Vec<ArrowId> = (0..g.n_arrows()).filter(|&a| g.is_positive_arrow(a)).collect();
        let mut position = vec![None; g.n_arrows()];
        for (i, &a) in index.iter().enumerate() {
            position[a] = Some(i);
        }
        let weight = index.iter().map(|&a| g.mass(g.src(a))).collect();
        L2Space { index, weight, position }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn position(&self, a: ArrowId) -> Option<usize> {
        self.position[a]
    }

    /// Orthonormal coordinates of a function on arrows (`v_g = f(g) sqrt(w_g)`).
    pub fn to_coords(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.index.iter().zip(&self.weight).map(|(&a, &w)| f[a] * w.sqrt()).collect()
    }

    /// Function values on the index from orthonormal coordinates.
    pub fn from_coords(&self, v: &[Complex64]) -> Vec<Complex64> {
        v.iter().zip(&self.weight).map(|(x, w)| x / w.sqrt()).collect()
    }
}

/// A bounded operator on the `ℓ²` space, as a dense matrix in orthonormal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub matrix: DMatrix<Complex64>,
}

impl Operator {
    pub fn new(matrix: DMatrix<Complex64>) -> Self {
        Operator { matrix }
    }

    pub fn identity(n: usize) -> Self {
        Operator { matrix: DMatrix::identity(n, n) }
    }

    pub fn zero(n: usize) -> Self {
        Operator { matrix: DMatrix::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Operator { matrix: self.matrix.adjoint() }
    }

    pub fn mul(&self, other: &Operator) -> Self {
        Operator { matrix: &self.matrix * &other.matrix }
    }

    pub fn add(&self, other: &Operator) -> Self {
        Operator { matrix: &self.matrix + &other.matrix }
    }

    pub fn sub(&self, other: &Operator) -> Self {
        Operator { matrix: &self.matrix - &other.matrix }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Operator { matrix: &self.matrix * c }
    }

    /// Hilbert–Schmidt norm.
    pub fn hs_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.matrix.clone().singular_values().iter().cloned().fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.matrix[(i, j)] * v[j]).sum()).collect()
    }

    pub(crate) fn sparse(&self) -> SpMat {
        SpMat::from_dense(&self.matrix)
    }
}

/// A *-algebra of matrices, kept as a Hilbert–Schmidt orthonormal spanning frame.
#[derive(Debug, Clone)]
pub struct MatrixStarAlgebra {
    n: usize,
    frame: Vec<SpMat>,
    pub spectral: SpectralInfo,
    /// Largest residual found when checking closure under products and adjoints.
    pub closure_residual: Option<f64>,
}

impl MatrixStarAlgebra {
    pub(crate) fn from_frame(n: usize, frame: Vec<SpMat>, spectral: SpectralInfo) -> Self {
        MatrixStarAlgebra { n, frame, spectral, closure_residual: None }
    }

    /// Linear span of `ops` (not closed up; see [`MatrixStarAlgebra::check_closure`]).
    pub fn span(n: usize, ops: &[Operator], tol: f64) -> Self {
        let sp: Vec<SpMat> = ops.iter().map(Operator::sparse).collect();
        let (frame, spectral) = orthonormalize(&sp, tol);
        Self::from_frame(n, frame, spectral)
    }

    pub fn full(n: usize) -> Self {
        let frame = (0..n)
            .flat_map(|i| (0..n).map(move |j| SpMat::from_triples(n, [(i, j, ONE)])))
            .collect();
        Self::from_frame(n, frame, SpectralInfo::default())
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn space_dim(&self) -> usize {
        self.n
    }

    /// Orthonormal basis operators.
    pub fn basis_ops(&self) -> Vec<Operator> {
        self.frame.iter().map(|f| Operator::new(f.to_dense())).collect()
    }

    fn residual_sparse(&self, x: &SpMat) -> f64 {
        let terms: Vec<(Complex64, &SpMat)> = self.frame.iter().map(|f| (-f.inner(x), f)).collect();
        let mut all = vec![(ONE, x)];
        all.extend(terms);
        SpMat::combine(self.n, &all).norm()
    }

    /// `‖x - P x‖_HS` for the orthogonal projection `P` onto the algebra.
    pub fn residual(&self, x: &Operator) -> f64 {
        self.residual_sparse(&x.sparse())
    }

    /// Orthogonal projection onto the algebra.
    pub fn project(&self, x: &Operator) -> Operator {
        let xs = x.sparse();
        let terms: Vec<(Complex64, &SpMat)> = self.frame.iter().map(|f| (f.inner(&xs), f)).collect();
        Operator::new(SpMat::combine(self.n, &terms).to_dense())
    }

    /// Largest residual of the other algebra's frame against this one.
    pub fn contains_residual(&self, other: &MatrixStarAlgebra) -> f64 {
        other.frame.iter().map(|f| self.residual_sparse(f)).fold(0.0, f64::max) + 0.0
    }

    /// Largest residual of `f g` and `f^*` over frame elements.
    pub fn check_closure(&mut self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.frame {
            worst = worst.max(self.residual_sparse(&a.adjoint()));
            for b in &self.frame {
                worst = worst.max(self.residual_sparse(&a.mul(b)));
            }
        }
        worst += 0.0;
        self.closure_residual = Some(worst);
        worst
    }

    pub(crate) fn frame(&self) -> &[SpMat] {
        &self.frame
    }
}

/// Commutant of `ops`, intersected with `within` when given.
pub fn commutant(ops: &[Operator], within: Option<&MatrixStarAlgebra>, tol: f64) -> MatrixStarAlgebra {
    let n = ops.first().map(Operator::dim).or(within.map(|w| w.n)).unwrap_or(0);
    let gens: Vec<SpMat> = ops.iter().map(Operator::sparse).collect();
    let frame = match within {
        Some(w) => w.frame.clone(),
        None => MatrixStarAlgebra::full(n).frame,
    };
    let (frame, spectral) = commutant_within(&gens, frame, tol);
    MatrixStarAlgebra::from_frame(n, frame, spectral)
}

/// Result of a Fourier decomposition along a symmetric basis.
#[derive(Debug, Clone)]
pub struct FourierData {
    /// `a^B = E(a λ_B^*)` per block, as a function on units (zero on null units).
    pub coefficients: Vec<Vec<Complex64>>,
    /// `‖a - Σ_B a^B λ_B‖` in operator norm.
    pub residual: f64,
    /// `Σ_B ‖a^B‖²` in `L²(G0, μ)`.
    pub coefficient_norm_sq: f64,
    pub phi_a_star_a: f64,
    pub phi_a_a_star: f64,
}

/// `L_ω(G)` and friends for a nonsingular groupoid and a normalized cocycle.
#[derive(Debug)]
pub struct TwistedVna {
    g: MeasuredGroupoid,
    omega: Cocycle,
    space: L2Space,
    tol: Tolerances,
    left: OnceLock<MatrixStarAlgebra>,
}

impl TwistedVna {
    pub fn new(g: &MeasuredGroupoid, omega: &Cocycle) -> Result<Self, VnaError> {
        Self::with_tolerances(g, omega, Tolerances::default())
    }

    pub fn with_tolerances(g: &MeasuredGroupoid, omega: &Cocycle, tol: Tolerances) -> Result<Self, VnaError> {
        if !g.flags().nonsingular {
            return Err(VnaError::NotNonsingular);
        }
        if !omega.is_normalized() {
            return Err(VnaError::NotNormalized);
        }
        Ok(TwistedVna { g: g.clone(), omega: omega.clone(), space: L2Space::new(g), tol, left: OnceLock::new() })
    }

    pub fn untwisted(g: &MeasuredGroupoid) -> Result<Self, VnaError> {
        Self::new(g, &Cocycle::trivial(g))
    }

    /// The same groupoid with `ω̄`.
    pub fn conjugate(&self) -> TwistedVna {
        TwistedVna {
            g: self.g.clone(),
            omega: self.omega.conj(),
            space: self.space.clone(),
            tol: self.tol,
            left: OnceLock::new(),
        }
    }

    pub fn groupoid(&self) -> &MeasuredGroupoid {
        &self.g
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.omega
    }

    pub fn space(&self) -> &L2Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub(crate) fn singleton_sparse(&self, a: ArrowId, side: Rep) -> SpMat {
        let g = &self.g;
        let n = self.dim();
        if !g.is_positive_arrow(a) {
            return SpMat::zero(n);
        }
        let mut triples = Vec::new();
        match side {
            Rep::Left => {
                for &h in g.arrows_to(g.src(a)) {
                    if let (Some(j), Some(i)) = (self.space.position(h), g.compose(a, h).and_then(|ah| self.space.position(ah))) {
                        triples.push((i, j, self.omega.value(a, h)));
                    }
                }
            }
            Rep::Right => {
                let ai = g.inverse(a);
                let factor = (g.mass(g.tgt(a)) / g.mass(g.src(a))).sqrt();
                for &h in g.arrows_from(g.src(a)) {
                    let hai = g.compose(h, ai).expect("composable");
                    if let (Some(j), Some(i)) = (self.space.position(h), self.space.position(hai)) {
                        triples.push((i, j, self.omega.value(h, ai) * factor));
                    }
                }
            }
        }
        SpMat::from_triples(n, triples)
    }

    /// `λ^ω_A` or `ρ^ω_A` as the sum of its singleton operators.
    pub fn rep_operator(&self, a: &ArrowSet, side: Rep) -> Operator {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for x in a.iter() {
            for &(i, j, v) in &self.singleton_sparse(x, side).entries {
                m[(i, j)] += v;
            }
        }
        Operator::new(m)
    }

    pub fn singleton(&self, a: ArrowId, side: Rep) -> Operator {
        Operator::new(self.singleton_sparse(a, side).to_dense())
    }

    /// Multiplication by a function on units: `e_h -> f(t(h)) e_h`.
    pub fn multiplication(&self, f: &[Complex64]) -> Operator {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, &h) in self.space.index.iter().enumerate() {
            m[(i, i)] = f[self.g.tgt(h)];
        }
        Operator::new(m)
    }

    /// `(f ∗_ω h)(x) = Σ_{ab = x} ω(a, b) f(a) h(b)` for functions on all arrows.
    pub fn twisted_convolve(&self, f: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
        let g = &self.g;
        let mut out = vec![ZERO; g.n_arrows()];
        for a in 0..g.n_arrows() {
            if f[a] == ZERO {
                continue;
            }
            for &b in g.arrows_to(g.src(a)) {
                let ab = g.compose(a, b).expect("composable");
                out[ab] += self.omega.value(a, b) * f[a] * h[b];
            }
        }
        out
    }

    fn singleton_ops(&self, side: Rep) -> Vec<SpMat> {
        self.space.index.iter().map(|&a| self.singleton_sparse(a, side)).collect()
    }

    /// Span of the singleton operators of one side, with closure verified.
    pub fn algebra(&self, side: Rep) -> MatrixStarAlgebra {
        match side {
            Rep::Left => self.left_algebra().clone(),
            Rep::Right => self.build_algebra(Rep::Right),
        }
    }

    fn build_algebra(&self, side: Rep) -> MatrixStarAlgebra {
        let (frame, spectral) = orthonormalize(&self.singleton_ops(side), self.tol.rank);
        let mut alg = MatrixStarAlgebra::from_frame(self.dim(), frame, spectral);
        alg.check_closure();
        alg
    }

    pub fn left_algebra(&self) -> &MatrixStarAlgebra {
        self.left.get_or_init(|| self.build_algebra(Rep::Left))
    }

    /// `λ_{e_x}` for positive units and `λ_B` for the non-unit blocks of a symmetric basis.
    ///
    /// These generate the left algebra: `λ_{e_y} λ_B λ_{e_x}` is the singleton
    /// of the arrow of `B` from `x` to `y`.
    pub(crate) fn generators_sparse(&self, side: Rep) -> Vec<SpMat> {
        let g = &self.g;
        let mut gens: Vec<SpMat> = (0..g.n_units())
            .filter(|&x| g.is_positive(x))
            .map(|x| self.singleton_sparse(g.unit_arrow(x), side))
            .collect();
        let basis = build_basis(g, true);
        for (i, b) in basis.blocks.iter().enumerate() {
            if i == basis.units_block {
                continue;
            }
            let ops: Vec<SpMat> = b.arrows().iter().map(|a| self.singleton_sparse(a, side)).collect();
            let terms: Vec<(Complex64, &SpMat)> = ops.iter().map(|o| (ONE, o)).collect();
            let op = SpMat::combine(self.dim(), &terms);
            if op.nnz() > 0 {
                gens.push(op);
            }
        }
        gens
    }

    pub fn generators(&self, side: Rep) -> Vec<Operator> {
        self.generators_sparse(side).iter().map(|s| Operator::new(s.to_dense())).collect()
    }

    /// `L_ω(G)'`.
    pub fn commutant_of_left(&self) -> MatrixStarAlgebra {
        let (frame, spectral) = commutant_within(
            &self.generators_sparse(Rep::Left),
            MatrixStarAlgebra::full(self.dim()).frame,
            self.tol.rank,
        );
        MatrixStarAlgebra::from_frame(self.dim(), frame, spectral)
    }

    /// `Z(L_ω(G)) = L_ω(G) ∩ L_ω(G)'`.
    pub fn center(&self) -> MatrixStarAlgebra {
        let left = self.left_algebra();
        let (frame, mut spectral) =
            commutant_within(&self.generators_sparse(Rep::Left), left.frame().to_vec(), self.tol.rank);
        spectral.merge(left.spectral);
        MatrixStarAlgebra::from_frame(self.dim(), frame, spectral)
    }

    /// Center computed against every singleton instead of the generating set.
    pub fn center_from_singletons(&self) -> MatrixStarAlgebra {
        let left = self.left_algebra();
        let (frame, spectral) = commutant_within(&self.singleton_ops(Rep::Left), left.frame().to_vec(), self.tol.rank);
        MatrixStarAlgebra::from_frame(self.dim(), frame, spectral)
    }

    /// `L∞(G0, μ)^G`: indicators of positive-mass orbits.
    pub fn invariant_subalgebra(&self) -> MatrixStarAlgebra {
        let g = &self.g;
        let ops: Vec<Operator> = orbits(g)
            .into_iter()
            .filter(|o| o.iter().any(|&x| g.is_positive(x)))
            .map(|o| {
                let mut f = vec![ZERO; g.n_units()];
                for x in o {
                    f[x] = ONE;
                }
                self.multiplication(&f)
            })
            .collect();
        MatrixStarAlgebra::span(self.dim(), &ops, self.tol.rank)
    }

    fn require_in_algebra(&self, a: &Operator) -> Result<(), VnaError> {
        if a.dim() != self.dim() {
            return Err(VnaError::DimensionMismatch(a.dim(), self.dim()));
        }
        let r = self.left_algebra().residual(a);
        if r > self.tol.containment * a.hs_norm().max(1.0) {
            return Err(VnaError::NotInAlgebra(r));
        }
        Ok(())
    }

    /// `j(a) = a 1_{G0}` as function values on the index.
    pub fn j_map(&self, a: &Operator) -> Vec<Complex64> {
        let g = &self.g;
        let mut one = vec![ZERO; g.n_arrows()];
        for x in 0..g.n_units() {
            one[g.unit_arrow(x)] = ONE;
        }
        let v = a.apply(&self.space.to_coords(&one));
        self.space.from_coords(&v)
    }

    /// `j(a)` extended by zero to all arrows.
    pub fn j_function(&self, a: &Operator) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.g.n_arrows()];
        for (i, v) in self.j_map(a).into_iter().enumerate() {
            out[self.space.index[i]] = v;
        }
        out
    }

    fn expectation_unchecked(&self, a: &Operator) -> Vec<Complex64> {
        let j = self.j_function(a);
        (0..self.g.n_units()).map(|x| j[self.g.unit_arrow(x)]).collect()
    }

    /// `E(a) = j(a)|_{G0}`; zero on null units.
    pub fn conditional_expectation(&self, a: &Operator) -> Result<Vec<Complex64>, VnaError> {
        self.require_in_algebra(a)?;
        Ok(self.expectation_unchecked(a))
    }

    fn phi_unchecked(&self, a: &Operator) -> Complex64 {
        self.expectation_unchecked(a).iter().enumerate().map(|(x, v)| v * self.g.mass(x)).sum()
    }

    /// `φ_μ(a)` and `‖a‖♯ = sqrt(φ(a^*a) + φ(aa^*))`.
    pub fn phi_and_sharp(&self, a: &Operator) -> Result<(Complex64, f64), VnaError> {
        self.require_in_algebra(a)?;
        let phi = self.phi_unchecked(a);
        let sa = self.phi_unchecked(&a.adjoint().mul(a)).re;
        let as_ = self.phi_unchecked(&a.mul(&a.adjoint())).re;
        Ok((phi, (sa + as_).max(0.0).sqrt()))
    }

    /// `⟨j(a), j(a)⟩` in `ℓ²(G, μ_s)`.
    pub fn j_norm_sq(&self, a: &Operator) -> f64 {
        self.j_map(a).iter().zip(&self.space.weight).map(|(v, w)| v.norm_sqr() * w).sum()
    }

    /// `a = Σ_B E(a λ_B^*) λ_B` along a symmetric basis.
    pub fn fourier(&self, a: &Operator, basis: &Basis) -> Result<FourierData, VnaError> {
        if !basis.symmetric {
            return Err(VnaError::AsymmetricBasis);
        }
        self.require_in_algebra(a)?;
        let mut recon = Operator::zero(self.dim());
        let mut coefficients = Vec::with_capacity(basis.len());
        let mut norm_sq = 0.0;
        for b in &basis.blocks {
            let lb = self.rep_operator(b.arrows(), Rep::Left);
            let coef = self.expectation_unchecked(&a.mul(&lb.adjoint()));
            norm_sq += coef.iter().enumerate().map(|(x, c)| c.norm_sqr() * self.g.mass(x)).sum::<f64>();
            recon = recon.add(&self.multiplication(&coef).mul(&lb));
            coefficients.push(coef);
        }
        Ok(FourierData {
            coefficients,
            residual: a.sub(&recon).op_norm(),
            coefficient_norm_sq: norm_sq,
            phi_a_star_a: self.phi_unchecked(&a.adjoint().mul(a)).re,
            phi_a_a_star: self.phi_unchecked(&a.mul(&a.adjoint())).re,
        })
    }

    /// Random element `Σ c_g λ_g` of the left algebra.
    pub fn random_element(&self, rng: &mut impl rand::Rng) -> Operator {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for &a in &self.space.index {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            for &(i, j, v) in &self.singleton_sparse(a, Rep::Left).entries {
                m[(i, j)] += c * v;
            }
        }
        Operator::new(m)
    }
}

/// Everything the structural deciders and the numerics say about factoriality.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FactorialityReport {
    pub units: usize,
    pub arrows: usize,
    pub l2_dim: usize,
    pub nonsingular: bool,
    pub pmp: bool,
    pub twisted: bool,
    pub ergodic: bool,
    pub positive_orbits: usize,
    pub icc: bool,
    pub definitional_icc: bool,
    pub twisted_icc: bool,
    pub kleppner: bool,
    pub icc_witness: Option<Vec<String>>,
    pub central_set: Option<Vec<String>>,
    pub kleppner_witness: Option<String>,
    pub algebra_dim: usize,
    pub algebra_closure_residual: f64,
    pub center_dim: usize,
    pub predicted_center_dim: usize,
    pub invariant_dim: usize,
    pub center_in_invariant_residual: f64,
    pub invariant_in_center_residual: f64,
    pub center_equals_invariant: bool,
    pub spectral: SpectralInfo,
    pub factor: bool,
    pub verdict: String,
    pub violations: Vec<String>,
    pub tolerances: Tolerances,
}

impl FactorialityReport {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const CONSISTENT: &str = "THEOREM-A-CONSISTENT";
pub const INCONSISTENT: &str = "INCONSISTENT";

/// Run every decider and the numerical center computation; `ω` is normalized first.
pub fn factoriality_report(
    g: &MeasuredGroupoid,
    omega: &Cocycle,
    tol: &Tolerances,
) -> Result<FactorialityReport, VnaError> {
    let omega = if omega.is_normalized() { omega.clone() } else { normalize_cocycle(g, omega) };
    let vna = TwistedVna::with_tolerances(g, &omega, *tol)?;
    let twisted = !omega.is_trivial(tol.identity);
    let erg = is_ergodic(g);
    let positive_orbits = orbits(g).iter().filter(|o| o.iter().any(|&x| g.is_positive(x))).count();
    let icc = is_icc(g);
    let ticc = twisted_icc_with(g, &omega, tol.holonomy);
    let klep = kleppner_holds_with(g, &omega, tol.holonomy);
    let predicted = holonomy_orbits(g, &omega, tol.holonomy, true).iter().filter(|o| o.consistent).count();

    let left = vna.left_algebra();
    let center = vna.center();
    let inv = vna.invariant_subalgebra();
    let r1 = inv.contains_residual(&center);
    let r2 = center.contains_residual(&inv);
    let equal = r1 <= tol.containment && r2 <= tol.containment && center.dim() == inv.dim();
    let mut spectral = center.spectral;
    spectral.merge(inv.spectral);

    let mut violations = Vec::new();
    if ticc.icc != equal {
        violations.push(format!("twisted icc = {} but center = L∞^G is {}", ticc.icc, equal));
    }
    let factor = center.dim() == 1;
    if factor != (erg.ergodic && ticc.icc) {
        violations.push(format!(
            "center dim {} but ergodic = {}, twisted icc = {}",
            center.dim(),
            erg.ergodic,
            ticc.icc
        ));
    }
    if factor && !klep.holds {
        violations.push("factor but Kleppner's condition fails".into());
    }
    if !twisted && icc.icc != ticc.icc {
        violations.push(format!("untwisted: icc = {} but central-set search gives {}", icc.icc, ticc.icc));
    }
    if icc.icc != icc.definitional_icc {
        violations.push("reduced and definitional icc disagree".into());
    }
    if center.dim() != predicted {
        violations.push(format!("center dim {} but holonomy predicts {}", center.dim(), predicted));
    }
    if inv.dim() != positive_orbits {
        violations.push(format!("L∞^G has dim {} for {} positive orbits", inv.dim(), positive_orbits));
    }
    let closure = left.closure_residual.unwrap_or(0.0);
    if closure > tol.containment {
        violations.push(format!("left algebra not closed (residual {closure:e})"));
    }
    if left.dim() != vna.dim() {
        violations.push(format!("left algebra has dim {} on {} arrows", left.dim(), vna.dim()));
    }

    Ok(FactorialityReport {
        units: g.n_units(),
        arrows: g.n_arrows(),
        l2_dim: vna.dim(),
        nonsingular: g.flags().nonsingular,
        pmp: g.flags().pmp,
        twisted,
        ergodic: erg.ergodic,
        positive_orbits,
        icc: icc.icc,
        definitional_icc: icc.definitional_icc,
        twisted_icc: ticc.icc,
        kleppner: klep.holds,
        icc_witness: icc.witness.clone(),
        central_set: ticc.certificate.as_ref().map(|c| c.support.names(g)),
        kleppner_witness: klep.witness.map(|h| g.arrow_name(h).to_string()),
        algebra_dim: left.dim(),
        algebra_closure_residual: closure,
        center_dim: center.dim(),
        predicted_center_dim: predicted,
        invariant_dim: inv.dim(),
        center_in_invariant_residual: r1,
        invariant_in_center_residual: r2,
        center_equals_invariant: equal,
        spectral,
        factor,
        verdict: if violations.is_empty() { CONSISTENT } else { INCONSISTENT }.to_string(),
        violations,
        tolerances: *tol,
    })
}

/// Unit ids of positive mass.
pub fn positive_units(g: &MeasuredGroupoid) -> Vec<UnitId> {
    (0..g.n_units()).filter(|&x| g.is_positive(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::{full_relation, group_groupoid, klein_four_cocycle, FiniteGroupTable};
    use crate::groupoid::{Mass, UnitSpace};
    use rand::SeedableRng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn klein_twisted() -> TwistedVna {
        let g = group_groupoid(&FiniteGroupTable::klein_four());
        let w = normalize_cocycle(&g, &klein_four_cocycle(&g));
        TwistedVna::new(&g, &w).unwrap()
    }

    #[test]
    fn units_give_identity() {
        let g = full_relation(2);
        let v = TwistedVna::untwisted(&g).unwrap();
        assert_eq!(v.rep_operator(&g.unit_arrows(), Rep::Left), Operator::identity(4));
    }

    #[test]
    fn z2_swap() {
        let g = group_groupoid(&FiniteGroupTable::cyclic(2));
        let v = TwistedVna::untwisted(&g).unwrap();
        let m = v.singleton(1, Rep::Left).matrix;
        assert_eq!(m[(0, 1)], c(1.0));
        assert_eq!(m[(1, 0)], c(1.0));
        assert_eq!(m[(0, 0)], c(0.0));
        assert_eq!(v.center().dim(), 2);
        assert_eq!(v.left_algebra().dim(), 2);
    }

    #[test]
    fn klein_twisted_entries_and_center() {
        let v = klein_twisted();
        let h = v.groupoid().find_arrow("(0,1)@x0").unwrap();
        let m = v.singleton(h, Rep::Left).matrix;
        for z in m.iter() {
            assert!(z.norm() < 1e-15 || (z.norm() - 1.0).abs() < 1e-15);
        }
        assert_eq!(v.center().dim(), 1);
        let g = v.groupoid().clone();
        assert_eq!(TwistedVna::untwisted(&g).unwrap().center().dim(), 4);
    }

    #[test]
    fn adjoint_is_inverse_singleton() {
        let v = klein_twisted();
        let g = v.groupoid();
        for a in 0..g.n_arrows() {
            let lhs = v.singleton(a, Rep::Left).adjoint();
            let rhs = v.singleton(g.inverse(a), Rep::Left);
            assert!(lhs.sub(&rhs).hs_norm() < 1e-14);
        }
    }

    #[test]
    fn full_relation_is_m2() {
        let g = full_relation(2);
        let v = TwistedVna::untwisted(&g).unwrap();
        assert_eq!(v.left_algebra().dim(), 4);
        let comm = v.commutant_of_left();
        assert_eq!(comm.dim(), 4);
        assert_eq!(v.center().dim(), 1);
        let r = v.algebra(Rep::Right);
        assert!(comm.contains_residual(&r) < 1e-10 && r.contains_residual(&comm) < 1e-10);
    }

    #[test]
    fn left_and_right_commute_when_twisted() {
        let v = klein_twisted();
        let g = v.groupoid();
        for a in 0..g.n_arrows() {
            for b in 0..g.n_arrows() {
                assert!(v.singleton(a, Rep::Left).commutator(&v.singleton(b, Rep::Right)).hs_norm() < 1e-14);
            }
        }
        let comm = v.commutant_of_left();
        let r = v.algebra(Rep::Right);
        assert_eq!(comm.dim(), r.dim());
        assert!(comm.contains_residual(&r) < 1e-10);
    }

    #[test]
    fn invariant_subalgebra_drops_null_orbit() {
        let g = crate::constructors::group_bundle(
            &[FiniteGroupTable::trivial(), FiniteGroupTable::trivial(), FiniteGroupTable::trivial()],
            UnitSpace::new(
                vec!["a".into(), "b".into(), "c".into()],
                vec![Mass::from_ratio(1, 2), Mass::from_ratio(1, 2), Mass::zero()],
            ),
        );
        let v = TwistedVna::untwisted(&g).unwrap();
        assert_eq!(v.invariant_subalgebra().dim(), 2);
        assert_eq!(v.left_algebra().dim(), 2);
    }

    #[test]
    fn expectation_and_state() {
        let g = full_relation(2);
        let v = TwistedVna::untwisted(&g).unwrap();
        let id = Operator::identity(4);
        assert_eq!(v.conditional_expectation(&id).unwrap(), vec![c(1.0), c(1.0)]);
        let (phi, sharp) = v.phi_and_sharp(&id).unwrap();
        assert!((phi - c(1.0)).norm() < 1e-15 && (sharp - 2f64.sqrt()).abs() < 1e-15);
        let e01 = g.find_arrow("e01").unwrap();
        let a = ArrowSet::from_iter([e01]);
        let la = v.rep_operator(&a, Rep::Left);
        let (phi, sharp) = v.phi_and_sharp(&la).unwrap();
        assert!(phi.norm() < 1e-15);
        // μ_s({e01}) = 1/2
        assert!((sharp - 1.0).abs() < 1e-14);
        let e = v.conditional_expectation(&la.mul(&la.adjoint())).unwrap();
        assert_eq!(e, vec![c(1.0), c(0.0)]);
        let bogus = Operator::new(DMatrix::from_fn(4, 4, |i, j| if i == 0 && j == 3 { c(1.0) } else { c(0.0) }));
        assert!(matches!(v.conditional_expectation(&bogus), Err(VnaError::NotInAlgebra(_))));
    }

    #[test]
    fn j_of_lambda_is_indicator() {
        let v = klein_twisted();
        let g = v.groupoid();
        for a in 0..g.n_arrows() {
            let j = v.j_function(&v.singleton(a, Rep::Left));
            for b in 0..g.n_arrows() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((j[b] - c(want)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn convolution_matches_products() {
        let v = klein_twisted();
        let g = v.groupoid();
        for a in 0..4 {
            for b in 0..4 {
                let mut fa = vec![c(0.0); 4];
                let mut fb = vec![c(0.0); 4];
                fa[a] = c(1.0);
                fb[b] = c(1.0);
                let conv = v.twisted_convolve(&fa, &fb);
                let j = v.j_function(&v.singleton(a, Rep::Left).mul(&v.singleton(b, Rep::Left)));
                for x in 0..g.n_arrows() {
                    assert!((conv[x] - j[x]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn fourier_reconstructs() {
        let g = full_relation(3);
        let v = TwistedVna::untwisted(&g).unwrap();
        let basis = build_basis(&g, true);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = v.random_element(&mut rng);
        let f = v.fourier(&a, &basis).unwrap();
        assert!(f.residual < 1e-10);
        assert!((f.coefficient_norm_sq - f.phi_a_star_a).abs() < 1e-9);
        let asym = build_basis(&g, false);
        if !asym.symmetric {
            assert!(matches!(v.fourier(&a, &asym), Err(VnaError::AsymmetricBasis)));
        }
    }

    #[test]
    fn reports() {
        let r = factoriality_report(&full_relation(2), &Cocycle::trivial(&full_relation(2)), &Tolerances::default()).unwrap();
        assert!(r.factor && r.icc && r.ergodic && r.consistent());
        let z2 = group_groupoid(&FiniteGroupTable::cyclic(2));
        let r = factoriality_report(&z2, &Cocycle::trivial(&z2), &Tolerances::default()).unwrap();
        assert!(!r.factor && !r.icc && r.consistent());
        let k = group_groupoid(&FiniteGroupTable::klein_four());
        let r = factoriality_report(&k, &klein_four_cocycle(&k), &Tolerances::default()).unwrap();
        assert!(r.factor && r.twisted_icc && r.kleppner && r.consistent());
    }
}
