//! Finite discrete measured groupoids.
//!
//! A [`MeasuredGroupoid`] is produced only by [`RawGroupoid::validate`], so every
//! instance in circulation satisfies the groupoid axioms: composition is defined
//! exactly on pairs with `t(h) = s(g)`, it is associative, unit arrows are
//! neutral and every arrow has a two-sided inverse.
//!
//! Units carry nonnegative masses. Arrows based at zero-mass units are kept in
//! the tables but are ignored by every measure-theoretic decider.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use thiserror::Error;

pub type UnitId = usize;
pub type ArrowId = usize;

const NONE: u32 = u32::MAX;

/// Tolerance for float mass normalization checks.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupoidError {
    #[error("dangling reference in {context}: {ids:?}")]
    DanglingReference { context: String, ids: Vec<String> },
    #[error("bad unit structure ({detail}): {ids:?}")]
    BadUnit { detail: String, ids: Vec<String> },
    #[error("bad inverse ({detail}): {ids:?}")]
    BadInverse { detail: String, ids: Vec<String> },
    #[error("composition is not associative on ({0}, {1}, {2})")]
    NonAssociative(String, String, String),
    #[error("composition missing for composable pair ({0}, {1})")]
    MissingComposition(String, String),
    #[error("conflicting composition entries for ({0}, {1})")]
    ConflictingComposition(String, String),
    #[error("duplicate identifier {0:?}")]
    DuplicateId(String),
    #[error("bad mass: {0}")]
    BadMass(String),
    #[error("restriction to a set of zero mass")]
    EmptyRestriction,
}

/// A nonnegative unit weight.
///
/// Masses remember an exact rational value whenever one is available (decimal
/// literals and `p/q` literals both qualify) so that normalization can be
/// checked exactly; the literal text is kept for round-trip serialization.
#[derive(Debug, Clone)]
pub struct Mass {
    value: f64,
    exact: Option<Ratio<u64>>,
    literal: Option<String>,
}

/// Equality of the measured values; the spelling of the literal is ignored.
impl PartialEq for Mass {
    fn eq(&self, other: &Self) -> bool {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.value == other.value,
        }
    }
}

impl Mass {
    pub fn from_f64(value: f64) -> Self {
        Mass { value, exact: None, literal: None }
    }

    pub fn from_ratio(numer: u64, denom: u64) -> Self {
        let r = Ratio::new(numer, denom);
        Mass { value: *r.numer() as f64 / *r.denom() as f64, exact: Some(r), literal: None }
    }

    pub fn zero() -> Self {
        Mass::from_ratio(0, 1)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<Ratio<u64>> {
        self.exact
    }

    pub fn is_zero(&self) -> bool {
        match self.exact {
            Some(r) => *r.numer() == 0,
            None => self.value == 0.0,
        }
    }

    /// Multiply by an exact or float factor; the literal is dropped.
    pub(crate) fn scaled(&self, exact: Option<Ratio<u64>>, float: f64) -> Mass {
        match (self.exact, exact) {
            (Some(a), Some(b)) => {
                let r = a * b;
                Mass { value: *r.numer() as f64 / *r.denom() as f64, exact: Some(r), literal: None }
            }
            _ => Mass::from_f64(self.value * float),
        }
    }
}

fn parse_decimal_exact(s: &str) -> Option<Ratio<u64>> {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if int.len() + frac.len() > 18 {
        return None;
    }
    let digits = format!("{int}{frac}");
    let numer: u64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let denom = 10u64.checked_pow(frac.len() as u32)?;
    Some(Ratio::new(numer, denom))
}

impl FromStr for Mass {
    type Err = GroupoidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GroupoidError::BadMass(format!("cannot parse mass {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let q: u64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            let mut m = Mass::from_ratio(p, q);
            m.literal = Some(s.to_string());
            return Ok(m);
        }
        let value: f64 = s.parse().map_err(|_| bad())?;
        if !value.is_finite() || value < 0.0 {
            return Err(GroupoidError::BadMass(format!("mass {s:?} is negative or not finite")));
        }
        let exact = parse_decimal_exact(s);
        Ok(Mass { value, exact, literal: Some(s.to_string()) })
    }
}

impl fmt::Display for Mass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(lit) = &self.literal {
            return f.write_str(lit);
        }
        match self.exact {
            Some(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

/// Weighted unit space `G0` with the measure `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSpace {
    pub names: Vec<String>,
    pub masses: Vec<Mass>,
    /// Skip the "masses sum to one" check.
    pub unnormalized: bool,
}

impl UnitSpace {
    pub fn new(names: Vec<String>, masses: Vec<Mass>) -> Self {
        UnitSpace { names, masses, unnormalized: false }
    }

    /// `n` units named `x0..`, all with mass `1/n`.
    pub fn uniform(n: usize) -> Self {
        let names = (0..n).map(|i| format!("x{i}")).collect();
        let masses = (0..n).map(|_| Mass::from_ratio(1, n as u64)).collect();
        UnitSpace::new(names, masses)
    }

    /// Units named `x0..` with masses proportional to the given integer weights.
    pub fn weighted(weights: &[u64]) -> Self {
        let total: u64 = weights.iter().sum();
        let names = (0..weights.len()).map(|i| format!("x{i}")).collect();
        let masses = weights.iter().map(|&w| Mass::from_ratio(w, total.max(1))).collect();
        UnitSpace::new(names, masses)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn mass(&self, x: UnitId) -> f64 {
        self.masses[x].value()
    }

    pub fn is_positive(&self, x: UnitId) -> bool {
        !self.masses[x].is_zero()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().map(Mass::value).sum()
    }

    pub fn exact_total(&self) -> Option<Ratio<u64>> {
        self.masses.iter().try_fold(Ratio::new(0u64, 1), |acc, m| m.exact().map(|r| acc + r))
    }

    /// Renormalize the masses of `keep` (in order) to a probability.
    ///
    /// Returns the new space and the multiplicative factor applied.
    pub(crate) fn restricted(&self, keep: &[UnitId]) -> Result<(UnitSpace, f64), GroupoidError> {
        let exact_sum = keep
            .iter()
            .try_fold(Ratio::new(0u64, 1), |acc, &x| self.masses[x].exact().map(|r| acc + r));
        let float_sum: f64 = keep.iter().map(|&x| self.mass(x)).sum();
        let positive = match exact_sum {
            Some(r) => *r.numer() > 0,
            None => float_sum > 0.0,
        };
        if !positive {
            return Err(GroupoidError::EmptyRestriction);
        }
        let exact_factor = exact_sum.map(|r| r.recip());
        let factor = 1.0 / float_sum;
        let names = keep.iter().map(|&x| self.names[x].clone()).collect();
        let masses = keep.iter().map(|&x| self.masses[x].scaled(exact_factor, factor)).collect();
        let report = exact_factor.map(|r| *r.numer() as f64 / *r.denom() as f64).unwrap_or(factor);
        Ok((UnitSpace { names, masses, unnormalized: false }, report))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub name: String,
    pub src: UnitId,
    pub tgt: UnitId,
}

/// Unvalidated groupoid tables.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGroupoid {
    pub units: UnitSpace,
    pub arrows: Vec<Arrow>,
    /// Triples `(g, h, gh)`.
    pub compose: Vec<(ArrowId, ArrowId, ArrowId)>,
    /// Pairs `(g, g^-1)`.
    pub inverse: Vec<(ArrowId, ArrowId)>,
    /// Pairs `(x, unit arrow of x)`.
    pub unit_arrows: Vec<(UnitId, ArrowId)>,
}

/// Which endpoint of an arrow a computation looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct MeasureFlags {
    /// Zero-mass units are never joined to positive-mass units by an arrow.
    pub nonsingular: bool,
    /// `mu_s = mu_t`.
    pub pmp: bool,
}

/// A validated finite measured groupoid. Immutable.
#[derive(Debug, Clone)]
pub struct MeasuredGroupoid {
    units: UnitSpace,
    arrows: Vec<Arrow>,
    compose: Vec<u32>,
    inverse: Vec<ArrowId>,
    unit_arrow: Vec<ArrowId>,
    arrow_unit: Vec<Option<UnitId>>,
    by_source: Vec<Vec<ArrowId>>,
    by_target: Vec<Vec<ArrowId>>,
    flags: MeasureFlags,
}

impl RawGroupoid {
    /// Check every groupoid axiom and compute the measure flags.
    pub fn validate(self) -> Result<MeasuredGroupoid, GroupoidError> {
        let RawGroupoid { units, arrows, compose: compose_list, inverse: inverse_list, unit_arrows } = self;
        let nu = units.len();
        let na = arrows.len();
        if units.masses.len() != nu {
            return Err(GroupoidError::BadMass("mass list length differs from unit list".into()));
        }

        let mut seen = HashSet::new();
        for name in &units.names {
            if !seen.insert(name.as_str()) {
                return Err(GroupoidError::DuplicateId(name.clone()));
            }
        }
        let mut seen = HashSet::new();
        for a in &arrows {
            if !seen.insert(a.name.as_str()) {
                return Err(GroupoidError::DuplicateId(a.name.clone()));
            }
        }
        for a in &arrows {
            if a.src >= nu || a.tgt >= nu {
                return Err(GroupoidError::DanglingReference {
                    context: "arrow endpoints".into(),
                    ids: vec![a.name.clone()],
                });
            }
        }
        let aname = |g: ArrowId| -> String {
            arrows.get(g).map(|a| a.name.clone()).unwrap_or_else(|| format!("#{g}"))
        };

        for m in &units.masses {
            if !(m.value() >= 0.0) || !m.value().is_finite() {
                return Err(GroupoidError::BadMass(format!("mass {m} is negative or not finite")));
            }
        }
        if !units.unnormalized {
            match units.exact_total() {
                Some(t) if t != Ratio::new(1, 1) => {
                    return Err(GroupoidError::BadMass(format!("masses sum to {t}, expected 1")));
                }
                Some(_) => {}
                None => {
                    let t = units.total();
                    if (t - 1.0).abs() > MASS_TOLERANCE {
                        return Err(GroupoidError::BadMass(format!("masses sum to {t}, expected 1")));
                    }
                }
            }
        }

        // unit arrows
        let mut unit_arrow = vec![usize::MAX; nu];
        let mut arrow_unit = vec![None; na];
        for &(x, e) in &unit_arrows {
            if x >= nu || e >= na {
                return Err(GroupoidError::DanglingReference {
                    context: "unit_arrows".into(),
                    ids: vec![units.names.get(x).cloned().unwrap_or_else(|| format!("#{x}")), aname(e)],
                });
            }
            if unit_arrow[x] != usize::MAX && unit_arrow[x] != e {
                return Err(GroupoidError::BadUnit {
                    detail: "unit has two unit arrows".into(),
                    ids: vec![units.names[x].clone(), aname(unit_arrow[x]), aname(e)],
                });
            }
            if arrow_unit[e].is_some_and(|y| y != x) {
                return Err(GroupoidError::BadUnit {
                    detail: "arrow is the unit arrow of two units".into(),
                    ids: vec![aname(e)],
                });
            }
            if arrows[e].src != x || arrows[e].tgt != x {
                return Err(GroupoidError::BadUnit {
                    detail: "unit arrow must have source and target equal to its unit".into(),
                    ids: vec![aname(e), units.names[x].clone()],
                });
            }
            unit_arrow[x] = e;
            arrow_unit[e] = Some(x);
        }
        if let Some(x) = unit_arrow.iter().position(|&e| e == usize::MAX) {
            return Err(GroupoidError::BadUnit {
                detail: "unit without a unit arrow".into(),
                ids: vec![units.names[x].clone()],
            });
        }

        // composition table
        let mut table = vec![NONE; na * na];
        for &(g, h, gh) in &compose_list {
            if g >= na || h >= na || gh >= na {
                return Err(GroupoidError::DanglingReference {
                    context: "compose".into(),
                    ids: vec![aname(g), aname(h), aname(gh)],
                });
            }
            if arrows[h].tgt != arrows[g].src {
                return Err(GroupoidError::BadUnit {
                    detail: "composition defined on a pair with t(h) != s(g)".into(),
                    ids: vec![aname(g), aname(h)],
                });
            }
            if arrows[gh].src != arrows[h].src || arrows[gh].tgt != arrows[g].tgt {
                return Err(GroupoidError::BadUnit {
                    detail: "product must satisfy s(gh) = s(h) and t(gh) = t(g)".into(),
                    ids: vec![aname(g), aname(h), aname(gh)],
                });
            }
            let slot = &mut table[g * na + h];
            if *slot != NONE && *slot as usize != gh {
                return Err(GroupoidError::ConflictingComposition(aname(g), aname(h)));
            }
            *slot = gh as u32;
        }
        let mut by_source = vec![Vec::new(); nu];
        let mut by_target = vec![Vec::new(); nu];
        for (g, a) in arrows.iter().enumerate() {
            by_source[a.src].push(g);
            by_target[a.tgt].push(g);
        }
        for g in 0..na {
            for &h in &by_target[arrows[g].src] {
                if table[g * na + h] == NONE {
                    return Err(GroupoidError::MissingComposition(aname(g), aname(h)));
                }
            }
        }
        for g in 0..na {
            let left = table[unit_arrow[arrows[g].tgt] * na + g] as usize;
            let right = table[g * na + unit_arrow[arrows[g].src]] as usize;
            if left != g || right != g {
                return Err(GroupoidError::BadUnit {
                    detail: "unit arrows must be neutral".into(),
                    ids: vec![aname(g)],
                });
            }
        }

        // inverses
        let mut inverse = vec![usize::MAX; na];
        for &(g, gi) in &inverse_list {
            if g >= na || gi >= na {
                return Err(GroupoidError::DanglingReference {
                    context: "inverse".into(),
                    ids: vec![aname(g), aname(gi)],
                });
            }
            if inverse[g] != usize::MAX && inverse[g] != gi {
                return Err(GroupoidError::BadInverse {
                    detail: "two inverses listed".into(),
                    ids: vec![aname(g)],
                });
            }
            inverse[g] = gi;
        }
        for g in 0..na {
            let gi = inverse[g];
            if gi == usize::MAX {
                return Err(GroupoidError::BadInverse { detail: "missing inverse".into(), ids: vec![aname(g)] });
            }
            if arrows[gi].src != arrows[g].tgt || arrows[gi].tgt != arrows[g].src {
                return Err(GroupoidError::BadInverse {
                    detail: "inverse must swap source and target".into(),
                    ids: vec![aname(g), aname(gi)],
                });
            }
            if inverse[gi] != g {
                return Err(GroupoidError::BadInverse {
                    detail: "inverse is not an involution".into(),
                    ids: vec![aname(g), aname(gi)],
                });
            }
            if table[g * na + gi] as usize != unit_arrow[arrows[g].tgt]
                || table[gi * na + g] as usize != unit_arrow[arrows[g].src]
            {
                return Err(GroupoidError::BadInverse {
                    detail: "g g^-1 and g^-1 g must be unit arrows".into(),
                    ids: vec![aname(g), aname(gi)],
                });
            }
        }

        // associativity over composable triples (g, h, k) with t(k) = s(h), t(h) = s(g)
        for g in 0..na {
            for &h in &by_target[arrows[g].src] {
                let gh = table[g * na + h] as usize;
                for &k in &by_target[arrows[h].src] {
                    let hk = table[h * na + k] as usize;
                    if table[gh * na + k] != table[g * na + hk] {
                        return Err(GroupoidError::NonAssociative(aname(g), aname(h), aname(k)));
                    }
                }
            }
        }

        let flags = measure_flags(&units, &arrows);
        Ok(MeasuredGroupoid {
            units,
            arrows,
            compose: table,
            inverse,
            unit_arrow,
            arrow_unit,
            by_source,
            by_target,
            flags,
        })
    }
}

fn measure_flags(units: &UnitSpace, arrows: &[Arrow]) -> MeasureFlags {
    let mut nonsingular = true;
    let mut pmp = true;
    for a in arrows {
        if units.is_positive(a.src) != units.is_positive(a.tgt) {
            nonsingular = false;
        }
        let (ms, mt) = (&units.masses[a.src], &units.masses[a.tgt]);
        let equal = match (ms.exact(), mt.exact()) {
            (Some(p), Some(q)) => p == q,
            _ => (ms.value() - mt.value()).abs() <= MASS_TOLERANCE,
        };
        if !equal {
            pmp = false;
        }
    }
    MeasureFlags { nonsingular, pmp: pmp && nonsingular }
}

impl MeasuredGroupoid {
    pub fn units(&self) -> &UnitSpace {
        &self.units
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn n_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn flags(&self) -> MeasureFlags {
        self.flags
    }

    #[inline]
    pub fn src(&self, g: ArrowId) -> UnitId {
        self.arrows[g].src
    }

    #[inline]
    pub fn tgt(&self, g: ArrowId) -> UnitId {
        self.arrows[g].tgt
    }

    #[inline]
    pub fn compose(&self, g: ArrowId, h: ArrowId) -> Option<ArrowId> {
        let v = self.compose[g * self.arrows.len() + h];
        (v != NONE).then_some(v as usize)
    }

    #[inline]
    pub fn inverse(&self, g: ArrowId) -> ArrowId {
        self.inverse[g]
    }

    #[inline]
    pub fn unit_arrow(&self, x: UnitId) -> ArrowId {
        self.unit_arrow[x]
    }

    #[inline]
    pub fn is_unit_arrow(&self, g: ArrowId) -> bool {
        self.arrow_unit[g].is_some()
    }

    pub fn arrow_unit(&self, g: ArrowId) -> Option<UnitId> {
        self.arrow_unit[g]
    }

    #[inline]
    pub fn is_isotropy(&self, g: ArrowId) -> bool {
        self.src(g) == self.tgt(g)
    }

    pub fn mass(&self, x: UnitId) -> f64 {
        self.units.mass(x)
    }

    pub fn is_positive(&self, x: UnitId) -> bool {
        self.units.is_positive(x)
    }

    /// Arrows whose source unit carries positive mass.
    pub fn is_positive_arrow(&self, g: ArrowId) -> bool {
        self.is_positive(self.src(g))
    }

    /// `s^-1(x)`.
    pub fn arrows_from(&self, x: UnitId) -> &[ArrowId] {
        &self.by_source[x]
    }

    /// `t^-1(x)`.
    pub fn arrows_to(&self, x: UnitId) -> &[ArrowId] {
        &self.by_target[x]
    }

    pub fn arrow_name(&self, g: ArrowId) -> &str {
        &self.arrows[g].name
    }

    pub fn unit_name(&self, x: UnitId) -> &str {
        &self.units.names[x]
    }

    pub fn find_arrow(&self, name: &str) -> Option<ArrowId> {
        self.arrows.iter().position(|a| a.name == name)
    }

    pub fn find_unit(&self, name: &str) -> Option<UnitId> {
        self.units.names.iter().position(|n| n == name)
    }

    /// `g h g^-1` when defined.
    pub fn conjugate(&self, g: ArrowId, h: ArrowId) -> Option<ArrowId> {
        let gh = self.compose(g, h)?;
        self.compose(gh, self.inverse(g))
    }

    /// Back to raw tables (ids preserved).
    pub fn to_raw(&self) -> RawGroupoid {
        let na = self.n_arrows();
        let mut compose = Vec::new();
        for g in 0..na {
            for &h in self.arrows_to(self.src(g)) {
                compose.push((g, h, self.compose(g, h).expect("composable")));
            }
        }
        RawGroupoid {
            units: self.units.clone(),
            arrows: self.arrows.clone(),
            compose,
            inverse: (0..na).map(|g| (g, self.inverse[g])).collect(),
            unit_arrows: (0..self.n_units()).map(|x| (x, self.unit_arrow[x])).collect(),
        }
    }

    /// Same tables, new unit masses (validated afresh).
    pub fn with_masses(&self, masses: Vec<Mass>) -> Result<MeasuredGroupoid, GroupoidError> {
        let mut raw = self.to_raw();
        raw.units.masses = masses;
        raw.validate()
    }

    pub fn all_arrows(&self) -> ArrowSet {
        ArrowSet((0..self.n_arrows()).collect())
    }

    pub fn unit_arrows(&self) -> ArrowSet {
        ArrowSet(self.unit_arrow.iter().copied().collect())
    }
}

/// A set of arrows with no structural requirement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct ArrowSet(pub BTreeSet<ArrowId>);

impl ArrowSet {
    pub fn new() -> Self {
        ArrowSet(BTreeSet::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, g: ArrowId) -> bool {
        self.0.contains(&g)
    }

    pub fn iter(&self) -> impl Iterator<Item = ArrowId> + '_ {
        self.0.iter().copied()
    }

    pub fn insert(&mut self, g: ArrowId) -> bool {
        self.0.insert(g)
    }

    pub fn is_subset(&self, other: &ArrowSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &ArrowSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn union(&self, other: &ArrowSet) -> ArrowSet {
        ArrowSet(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &ArrowSet) -> ArrowSet {
        ArrowSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn inverse(&self, g: &MeasuredGroupoid) -> ArrowSet {
        self.iter().map(|a| g.inverse(a)).collect()
    }

    /// `A . B = {ab | a in A, b in B, s(a) = t(b)}`.
    pub fn product(&self, other: &ArrowSet, g: &MeasuredGroupoid) -> ArrowSet {
        let mut out = ArrowSet::new();
        for a in self.iter() {
            for b in other.iter() {
                if let Some(ab) = g.compose(a, b) {
                    out.insert(ab);
                }
            }
        }
        out
    }

    pub fn sources(&self, g: &MeasuredGroupoid) -> BTreeSet<UnitId> {
        self.iter().map(|a| g.src(a)).collect()
    }

    pub fn targets(&self, g: &MeasuredGroupoid) -> BTreeSet<UnitId> {
        self.iter().map(|a| g.tgt(a)).collect()
    }

    pub fn is_bisection(&self, g: &MeasuredGroupoid) -> bool {
        let mut s = HashSet::new();
        let mut t = HashSet::new();
        self.iter().all(|a| s.insert(g.src(a)) && t.insert(g.tgt(a)))
    }

    pub fn names(&self, g: &MeasuredGroupoid) -> Vec<String> {
        self.iter().map(|a| g.arrow_name(a).to_string()).collect()
    }
}

impl FromIterator<ArrowId> for ArrowSet {
    fn from_iter<I: IntoIterator<Item = ArrowId>>(iter: I) -> Self {
        ArrowSet(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("arrow set is not a bisection: {0:?}")]
pub struct NotBisection(pub Vec<String>);

/// An arrow set on which both `s` and `t` are injective.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bisection(ArrowSet);

impl Bisection {
    pub fn new(g: &MeasuredGroupoid, set: ArrowSet) -> Result<Self, NotBisection> {
        if set.is_bisection(g) {
            Ok(Bisection(set))
        } else {
            Err(NotBisection(set.names(g)))
        }
    }

    pub(crate) fn new_unchecked(set: ArrowSet) -> Self {
        Bisection(set)
    }

    pub fn singleton(g: ArrowId) -> Self {
        Bisection(ArrowSet([g].into_iter().collect()))
    }

    pub fn arrows(&self) -> &ArrowSet {
        &self.0
    }

    pub fn into_arrows(self) -> ArrowSet {
        self.0
    }

    pub fn inverse(&self, g: &MeasuredGroupoid) -> Bisection {
        Bisection(self.0.inverse(g))
    }

    /// Full bisection: `s(A) = t(A) = G0`.
    pub fn is_full(&self, g: &MeasuredGroupoid) -> bool {
        self.0.len() == g.n_units()
    }

    /// `sigma_A : s(A) -> t(A)`.
    pub fn partial_map(&self, g: &MeasuredGroupoid) -> HashMap<UnitId, UnitId> {
        self.0.iter().map(|a| (g.src(a), g.tgt(a))).collect()
    }
}

/// Left-to-right fold of composition; `None` as soon as a pair is not composable.
pub fn compose_many(g: &MeasuredGroupoid, ids: &[ArrowId]) -> Option<ArrowId> {
    let (&first, rest) = ids.split_first()?;
    rest.iter().try_fold(first, |acc, &h| g.compose(acc, h))
}

/// `Iso(G) = {g | s(g) = t(g)}`.
pub fn iso_subgroupoid(g: &MeasuredGroupoid) -> ArrowSet {
    (0..g.n_arrows()).filter(|&a| g.is_isotropy(a)).collect()
}

/// Orbits of the relation `{(t(g), s(g))}`; sorted by their smallest unit.
pub fn orbits(g: &MeasuredGroupoid) -> Vec<Vec<UnitId>> {
    let n = g.n_units();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in g.arrows() {
        let (ra, rb) = (find(&mut parent, a.src), find(&mut parent, a.tgt));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<UnitId>> = Default::default();
    for x in 0..n {
        let r = find(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    let mut out: Vec<Vec<UnitId>> = groups.into_values().collect();
    out.sort_by_key(|o| o[0]);
    out
}

/// Orbit index of each unit, consistent with [`orbits`].
pub fn orbit_labels(g: &MeasuredGroupoid) -> Vec<usize> {
    let mut label = vec![0; g.n_units()];
    for (i, o) in orbits(g).iter().enumerate() {
        for &x in o {
            label[x] = i;
        }
    }
    label
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ergodicity {
    pub ergodic: bool,
    /// Two orbits that both carry positive mass.
    pub witness: Option<(Vec<UnitId>, Vec<UnitId>)>,
}

/// Ergodic iff the positive-mass units all lie in a single orbit.
pub fn is_ergodic(g: &MeasuredGroupoid) -> Ergodicity {
    let heavy: Vec<Vec<UnitId>> =
        orbits(g).into_iter().filter(|o| o.iter().any(|&x| g.is_positive(x))).collect();
    if heavy.len() <= 1 {
        Ergodicity { ergodic: true, witness: None }
    } else {
        Ergodicity { ergodic: false, witness: Some((heavy[0].clone(), heavy[1].clone())) }
    }
}

/// `mu_s(A)` or `mu_t(A)`: sum of the masses of the chosen endpoint over `A`.
pub fn arrow_measure(g: &MeasuredGroupoid, set: &ArrowSet, side: Side) -> f64 {
    set.iter()
        .map(|a| match side {
            Side::Source => g.mass(g.src(a)),
            Side::Target => g.mass(g.tgt(a)),
        })
        .sum::<f64>()
        + 0.0
}

/// The groupoid `K G K` with renormalized measure, plus the id maps.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub groupoid: MeasuredGroupoid,
    /// Factor by which masses were multiplied.
    pub renormalization: f64,
    /// New unit id to old unit id.
    pub units: Vec<UnitId>,
    /// New arrow id to old arrow id.
    pub arrows: Vec<ArrowId>,
}

impl Restriction {
    /// Old arrow id to new arrow id.
    pub fn arrow_lookup(&self, n_old: usize) -> Vec<Option<ArrowId>> {
        let mut m = vec![None; n_old];
        for (new, &old) in self.arrows.iter().enumerate() {
            m[old] = Some(new);
        }
        m
    }
}

pub fn restrict(g: &MeasuredGroupoid, keep: &BTreeSet<UnitId>) -> Result<Restriction, GroupoidError> {
    let unit_list: Vec<UnitId> = keep.iter().copied().filter(|&x| x < g.n_units()).collect();
    let (units, renormalization) = g.units.restricted(&unit_list)?;
    let mut unit_new = vec![None; g.n_units()];
    for (i, &x) in unit_list.iter().enumerate() {
        unit_new[x] = Some(i);
    }
    let arrow_list: Vec<ArrowId> = (0..g.n_arrows())
        .filter(|&a| unit_new[g.src(a)].is_some() && unit_new[g.tgt(a)].is_some())
        .collect();
    let mut arrow_new = vec![None; g.n_arrows()];
    for (i, &a) in arrow_list.iter().enumerate() {
        arrow_new[a] = Some(i);
    }
    let arrows = arrow_list
        .iter()
        .map(|&a| Arrow {
            name: g.arrow_name(a).to_string(),
            src: unit_new[g.src(a)].expect("kept"),
            tgt: unit_new[g.tgt(a)].expect("kept"),
        })
        .collect();
    let mut compose = Vec::new();
    for &a in &arrow_list {
        for &b in g.arrows_to(g.src(a)) {
            if let (Some(na), Some(nb)) = (arrow_new[a], arrow_new[b]) {
                let ab = g.compose(a, b).expect("composable");
                compose.push((na, nb, arrow_new[ab].expect("closed under products")));
            }
        }
    }
    let inverse = arrow_list.iter().map(|&a| (arrow_new[a].unwrap(), arrow_new[g.inverse(a)].unwrap())).collect();
    let unit_arrows = unit_list
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, arrow_new[g.unit_arrow(x)].unwrap()))
        .collect();
    let raw = RawGroupoid { units, arrows, compose, inverse, unit_arrows };
    Ok(Restriction { groupoid: raw.validate()?, renormalization, units: unit_list, arrows: arrow_list })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Fullness {
    pub borel_full: bool,
    pub mu_full: bool,
}

/// Whether `t(G . K)` is all units (`borel_full`) or all positive-mass units (`mu_full`).
pub fn is_full(g: &MeasuredGroupoid, keep: &BTreeSet<UnitId>) -> Fullness {
    let mut reached = vec![false; g.n_units()];
    for &x in keep {
        for &a in g.arrows_from(x) {
            reached[g.tgt(a)] = true;
        }
    }
    let borel_full = reached.iter().all(|&r| r);
    let mu_full = (0..g.n_units()).all(|x| reached[x] || !g.is_positive(x));
    Fullness { borel_full, mu_full }
}

/// Structural isomorphism check for an explicit pair of id maps.
///
/// `unit_map[x]` and `arrow_map[g]` send ids of `a` to ids of `b`. Masses are
/// not compared.
pub fn check_isomorphism(
    a: &MeasuredGroupoid,
    b: &MeasuredGroupoid,
    unit_map: &[UnitId],
    arrow_map: &[ArrowId],
) -> Result<(), String> {
    if a.n_units() != b.n_units() || a.n_arrows() != b.n_arrows() {
        return Err(format!(
            "sizes differ: {}/{} units, {}/{} arrows",
            a.n_units(),
            b.n_units(),
            a.n_arrows(),
            b.n_arrows()
        ));
    }
    if unit_map.len() != a.n_units() || arrow_map.len() != a.n_arrows() {
        return Err("map lengths do not match".into());
    }
    let image: HashSet<_> = arrow_map.iter().collect();
    if image.len() != a.n_arrows() || arrow_map.iter().any(|&x| x >= b.n_arrows()) {
        return Err("arrow map is not a bijection".into());
    }
    let uimage: HashSet<_> = unit_map.iter().collect();
    if uimage.len() != a.n_units() || unit_map.iter().any(|&x| x >= b.n_units()) {
        return Err("unit map is not a bijection".into());
    }
    for g in 0..a.n_arrows() {
        let fg = arrow_map[g];
        if unit_map[a.src(g)] != b.src(fg) || unit_map[a.tgt(g)] != b.tgt(fg) {
            return Err(format!("endpoints of {} not preserved", a.arrow_name(g)));
        }
        if arrow_map[a.inverse(g)] != b.inverse(fg) {
            return Err(format!("inverse of {} not preserved", a.arrow_name(g)));
        }
        for &h in a.arrows_to(a.src(g)) {
            let gh = a.compose(g, h).expect("composable");
            if b.compose(fg, arrow_map[h]) != Some(arrow_map[gh]) {
                return Err(format!("product ({}, {}) not preserved", a.arrow_name(g), a.arrow_name(h)));
            }
        }
    }
    for x in 0..a.n_units() {
        if arrow_map[a.unit_arrow(x)] != b.unit_arrow(unit_map[x]) {
            return Err(format!("unit arrow of {} not preserved", a.unit_name(x)));
        }
    }
    Ok(())
}

/// Match two groupoids by arrow and unit names and check the result is an isomorphism.
pub fn check_isomorphism_by_names(a: &MeasuredGroupoid, b: &MeasuredGroupoid) -> Result<(), String> {
    let unit_map = (0..a.n_units())
        .map(|x| b.find_unit(a.unit_name(x)).ok_or_else(|| format!("unit {} missing", a.unit_name(x))))
        .collect::<Result<Vec<_>, _>>()?;
    let arrow_map = (0..a.n_arrows())
        .map(|g| b.find_arrow(a.arrow_name(g)).ok_or_else(|| format!("arrow {} missing", a.arrow_name(g))))
        .collect::<Result<Vec<_>, _>>()?;
    check_isomorphism(a, b, &unit_map, &arrow_map)
}
