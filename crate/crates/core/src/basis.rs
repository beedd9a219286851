//! Bases of bisections: disjoint bisection covers of a groupoid containing `G0`.

use std::collections::HashSet;

use thiserror::Error;

use crate::groupoid::{iso_subgroupoid, ArrowId, ArrowSet, Bisection, MeasuredGroupoid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BasisError {
    #[error("block {0} is not a bisection")]
    NotBisection(usize),
    #[error("blocks {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("arrows not covered by the basis: {0:?}")]
    Uncovered(Vec<String>),
    #[error("arrows outside the covered subgroupoid: {0:?}")]
    Extraneous(Vec<String>),
    #[error("the unit block does not consist of the unit arrows")]
    UnitBlock,
    #[error("inverse of block {0} is not a block")]
    NotSymmetric(usize),
    #[error("blocks {0} and {1} are not orthogonal")]
    NotOrthogonal(usize, usize),
}

/// A partition of (a subgroupoid of) `G` into bisections, one of which is the unit block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub blocks: Vec<Bisection>,
    pub symmetric: bool,
    pub units_block: usize,
}

impl Basis {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn union(&self) -> ArrowSet {
        self.blocks.iter().flat_map(|b| b.arrows().iter()).collect()
    }

    pub fn unit_block(&self) -> &Bisection {
        &self.blocks[self.units_block]
    }

    /// Index of the block containing `g`.
    pub fn block_of(&self, g: ArrowId) -> Option<usize> {
        self.blocks.iter().position(|b| b.arrows().contains(g))
    }

    /// Index of the block equal to the inverse of block `i`.
    pub fn inverse_block(&self, g: &MeasuredGroupoid, i: usize) -> Option<usize> {
        let inv = self.blocks[i].inverse(g);
        self.blocks.iter().position(|b| *b == inv)
    }

    /// Check the basis axioms against the arrow set it is meant to cover.
    ///
    /// `units` is the unit block expected (the unit arrows of the covered subgroupoid).
    pub fn check(&self, g: &MeasuredGroupoid, cover: &ArrowSet, units: &ArrowSet) -> Result<(), BasisError> {
        for (i, b) in self.blocks.iter().enumerate() {
            if !b.arrows().is_bisection(g) {
                return Err(BasisError::NotBisection(i));
            }
        }
        let mut seen: Vec<Option<usize>> = vec![None; g.n_arrows()];
        for (i, b) in self.blocks.iter().enumerate() {
            for a in b.arrows().iter() {
                if let Some(j) = seen[a] {
                    return Err(BasisError::Overlap(j, i));
                }
                seen[a] = Some(i);
            }
        }
        let all = self.union();
        let missing = cover.difference(&all);
        if !missing.is_empty() {
            return Err(BasisError::Uncovered(missing.names(g)));
        }
        let extra = all.difference(cover);
        if !extra.is_empty() {
            return Err(BasisError::Extraneous(extra.names(g)));
        }
        if self.blocks.get(self.units_block).map(|b| b.arrows()) != Some(units) {
            return Err(BasisError::UnitBlock);
        }
        if self.symmetric {
            for i in 0..self.blocks.len() {
                if self.inverse_block(g, i).is_none() {
                    return Err(BasisError::NotSymmetric(i));
                }
            }
        }
        for i in 0..self.blocks.len() {
            let ci = self.blocks[i].inverse(g);
            for j in 0..self.blocks.len() {
                if i == j {
                    continue;
                }
                let prod = ci.arrows().product(self.blocks[j].arrows(), g);
                if prod.iter().any(|a| g.is_unit_arrow(a)) {
                    return Err(BasisError::NotOrthogonal(i, j));
                }
            }
        }
        Ok(())
    }

    fn detect_symmetry(g: &MeasuredGroupoid, blocks: &[Bisection]) -> bool {
        let set: HashSet<&Bisection> = blocks.iter().collect();
        blocks.iter().all(|b| set.contains(&b.inverse(g)))
    }
}

fn fits(g: &MeasuredGroupoid, used_s: &HashSet<usize>, used_t: &HashSet<usize>, a: ArrowId) -> bool {
    !used_s.contains(&g.src(a)) && !used_t.contains(&g.tgt(a))
}

/// Greedy maximal bisections over `arrows` in the given order.
fn greedy_blocks(g: &MeasuredGroupoid, arrows: &[ArrowId]) -> Vec<Bisection> {
    let mut remaining: Vec<ArrowId> = arrows.to_vec();
    let mut blocks = Vec::new();
    while !remaining.is_empty() {
        let (mut s, mut t) = (HashSet::new(), HashSet::new());
        let mut block = ArrowSet::new();
        let mut rest = Vec::new();
        for &a in &remaining {
            if fits(g, &s, &t, a) {
                s.insert(g.src(a));
                t.insert(g.tgt(a));
                block.insert(a);
            } else {
                rest.push(a);
            }
        }
        blocks.push(Bisection::new_unchecked(block));
        remaining = rest;
    }
    blocks
}

/// Greedy symmetric blocks: each block is its own inverse or is followed by its inverse.
fn greedy_symmetric_blocks(g: &MeasuredGroupoid, arrows: &[ArrowId]) -> Vec<Bisection> {
    let mut remaining: Vec<ArrowId> = arrows.to_vec();
    let mut blocks = Vec::new();
    while let Some(&first) = remaining.first() {
        let (mut s, mut t) = (HashSet::new(), HashSet::new());
        let mut block = ArrowSet::new();
        if g.inverse(first) == first {
            // self-inverse block: add whole pairs {h, h^-1}
            for &h in &remaining {
                if block.contains(h) {
                    continue;
                }
                let hi = g.inverse(h);
                let ok = if hi == h {
                    fits(g, &s, &t, h)
                } else {
                    fits(g, &s, &t, h)
                        && fits(g, &s, &t, hi)
                        && g.src(h) != g.src(hi)
                        && g.tgt(h) != g.tgt(hi)
                };
                if ok {
                    for a in [h, hi] {
                        s.insert(g.src(a));
                        t.insert(g.tgt(a));
                        block.insert(a);
                    }
                }
            }
            blocks.push(Bisection::new_unchecked(block.clone()));
        } else {
            for &h in &remaining {
                let hi = g.inverse(h);
                if hi == h || block.contains(hi) {
                    continue;
                }
                if fits(g, &s, &t, h) {
                    s.insert(g.src(h));
                    t.insert(g.tgt(h));
                    block.insert(h);
                }
            }
            let inv = block.inverse(g);
            blocks.push(Bisection::new_unchecked(block.clone()));
            blocks.push(Bisection::new_unchecked(inv.clone()));
            block = block.union(&inv);
        }
        remaining.retain(|a| !block.contains(*a));
    }
    blocks
}

/// Basis of `G` with `G0` as block 0.
pub fn build_basis(g: &MeasuredGroupoid, symmetric: bool) -> Basis {
    let units = g.unit_arrows();
    let rest: Vec<ArrowId> = (0..g.n_arrows()).filter(|&a| !g.is_unit_arrow(a)).collect();
    let mut blocks = vec![Bisection::new_unchecked(units)];
    blocks.extend(if symmetric { greedy_symmetric_blocks(g, &rest) } else { greedy_blocks(g, &rest) });
    let symmetric = Basis::detect_symmetry(g, &blocks);
    Basis { blocks, symmetric, units_block: 0 }
}

/// Symmetric basis of the isotropy subgroupoid `Iso(G)`.
pub fn build_iso_basis(g: &MeasuredGroupoid) -> Basis {
    let iso = iso_subgroupoid(g);
    let rest: Vec<ArrowId> = iso.iter().filter(|&a| !g.is_unit_arrow(a)).collect();
    let mut blocks = vec![Bisection::new_unchecked(g.unit_arrows())];
    blocks.extend(greedy_symmetric_blocks(g, &rest));
    let symmetric = Basis::detect_symmetry(g, &blocks);
    Basis { blocks, symmetric, units_block: 0 }
}

/// The blocks `C B C^-1`, dropping empty ones: a basis of `C G C^-1 = G|t(C)`.
pub fn conjugate_basis(g: &MeasuredGroupoid, basis: &Basis, c: &Bisection) -> Basis {
    let ci = c.inverse(g);
    let mut blocks = Vec::new();
    let mut units_block = 0;
    for (i, b) in basis.blocks.iter().enumerate() {
        let conj = c.arrows().product(b.arrows(), g).product(ci.arrows(), g);
        if conj.is_empty() {
            continue;
        }
        if i == basis.units_block {
            units_block = blocks.len();
        }
        blocks.push(Bisection::new_unchecked(conj));
    }
    let symmetric = Basis::detect_symmetry(g, &blocks);
    Basis { blocks, symmetric, units_block }
}

/// The arrow set `C G C^-1` covered by [`conjugate_basis`], and its unit arrows.
pub fn conjugate_cover(g: &MeasuredGroupoid, c: &Bisection) -> (ArrowSet, ArrowSet) {
    let targets = c.arrows().targets(g);
    let cover = (0..g.n_arrows())
        .filter(|&a| targets.contains(&g.src(a)) && targets.contains(&g.tgt(a)))
        .collect();
    let units = targets.iter().map(|&x| g.unit_arrow(x)).collect();
    (cover, units)
}

/// Extend a basis of `Iso(G)` by a greedy bisection partition of `G \ Iso(G)`.
pub fn extend_iso_basis(g: &MeasuredGroupoid, iso_basis: &Basis) -> Basis {
    let rest: Vec<ArrowId> = (0..g.n_arrows()).filter(|&a| !g.is_isotropy(a)).collect();
    let mut blocks = iso_basis.blocks.clone();
    blocks.extend(greedy_blocks(g, &rest));
    let symmetric = Basis::detect_symmetry(g, &blocks);
    Basis { blocks, symmetric, units_block: iso_basis.units_block }
}
