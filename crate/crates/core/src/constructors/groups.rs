//! Finite group multiplication tables.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("group axiom fails: {0}")]
    Axiom(String),
    #[error("unknown group spec {0:?}")]
    UnknownSpec(String),
}

/// A finite group given by its Cayley table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroupTable {
    pub names: Vec<String>,
    pub mul: Vec<Vec<usize>>,
    pub inv: Vec<usize>,
    pub identity: usize,
}

impl FiniteGroupTable {
    /// Check the group axioms and derive inverses.
    pub fn new(names: Vec<String>, mul: Vec<Vec<usize>>) -> Result<Self, GroupError> {
        let n = names.len();
        if n == 0 || mul.len() != n || mul.iter().any(|r| r.len() != n || r.iter().any(|&v| v >= n)) {
            return Err(GroupError::Axiom("table shape".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| mul[e][g] == g && mul[g][e] == g))
            .ok_or_else(|| GroupError::Axiom("no identity".into()))?;
        let mut inv = vec![0; n];
        for g in 0..n {
            inv[g] = (0..n)
                .find(|&h| mul[g][h] == identity && mul[h][g] == identity)
                .ok_or_else(|| GroupError::Axiom(format!("{} has no inverse", names[g])))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return Err(GroupError::Axiom(format!(
                            "not associative on ({}, {}, {})",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        Ok(FiniteGroupTable { names, mul, inv, identity })
    }

    pub fn order(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn op(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// `Z/n` with elements `0..n`.
    pub fn cyclic(n: usize) -> Self {
        let names = (0..n).map(|i| i.to_string()).collect();
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        FiniteGroupTable { names, mul, inv: (0..n).map(|a| (n - a) % n).collect(), identity: 0 }
    }

    /// Direct product; elements named `(a,b)`, ordered lexicographically.
    pub fn product(a: &Self, b: &Self) -> Self {
        let (na, nb) = (a.order(), b.order());
        let idx = |i: usize, j: usize| i * nb + j;
        let mut names = Vec::with_capacity(na * nb);
        for i in 0..na {
            for j in 0..nb {
                names.push(format!("({},{})", a.names[i], b.names[j]));
            }
        }
        let mut mul = vec![vec![0; na * nb]; na * nb];
        for i in 0..na {
            for j in 0..nb {
                for k in 0..na {
                    for l in 0..nb {
                        mul[idx(i, j)][idx(k, l)] = idx(a.mul[i][k], b.mul[j][l]);
                    }
                }
            }
        }
        let inv = (0..na * nb).map(|x| idx(a.inv[x / nb], b.inv[x % nb])).collect();
        FiniteGroupTable { names, mul, inv, identity: idx(a.identity, b.identity) }
    }

    /// `Z/2 x Z/2`.
    pub fn klein_four() -> Self {
        Self::product(&Self::cyclic(2), &Self::cyclic(2))
    }

    /// Permutation group generated by the given permutations of `0..d`.
    ///
    /// Elements are named in one-line notation (`"102"` swaps the first two
    /// letters) and sorted, so the identity comes first.
    pub fn from_permutations(gens: &[Vec<usize>]) -> Self {
        let d = gens.first().map_or(1, |g| g.len());
        let id: Vec<usize> = (0..d).collect();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::from([id.clone()]);
        let mut queue = VecDeque::from([id]);
        while let Some(p) = queue.pop_front() {
            for g in gens {
                let q: Vec<usize> = (0..d).map(|i| g[p[i]]).collect();
                if seen.insert(q.clone()) {
                    queue.push_back(q);
                }
            }
        }
        let elems: Vec<Vec<usize>> = seen.into_iter().collect();
        let index: HashMap<&Vec<usize>, usize> = elems.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let name = |p: &Vec<usize>| {
            if d <= 10 {
                p.iter().map(|v| v.to_string()).collect::<String>()
            } else {
                p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(".")
            }
        };
        let names = elems.iter().map(name).collect();
        // (a b)(i) = a(b(i))
        let mul: Vec<Vec<usize>> = elems
            .iter()
            .map(|a| {
                elems
                    .iter()
                    .map(|b| {
                        let c: Vec<usize> = (0..d).map(|i| a[b[i]]).collect();
                        index[&c]
                    })
                    .collect()
            })
            .collect();
        let inv = elems
            .iter()
            .map(|a| {
                let mut r = vec![0; d];
                for (i, &v) in a.iter().enumerate() {
                    r[v] = i;
                }
                index[&r]
            })
            .collect();
        FiniteGroupTable { names, mul, inv, identity: 0 }
    }

    /// `S_n` for `n >= 1`.
    pub fn symmetric(n: usize) -> Self {
        if n <= 1 {
            return Self::from_permutations(&[vec![0]]);
        }
        let mut swap: Vec<usize> = (0..n).collect();
        swap.swap(0, 1);
        let cycle: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        Self::from_permutations(&[swap, cycle])
    }

    /// Dihedral group of order `2n` acting on the `n`-gon.
    pub fn dihedral(n: usize) -> Self {
        let rot: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let refl: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
        Self::from_permutations(&[rot, refl])
    }

    /// Parse `cyclic N`, `klein`, `dihedral N` (order `2N`), `symmetric N`, `product A ; B`.
    pub fn from_spec(spec: &str) -> Result<Self, GroupError> {
        let spec = spec.trim();
        if let Some((a, b)) = spec.split_once(';') {
            let a = a.trim().strip_prefix("product").map(str::trim).unwrap_or(a.trim());
            return Ok(Self::product(&Self::from_spec(a)?, &Self::from_spec(b)?));
        }
        let bad = || GroupError::UnknownSpec(spec.to_string());
        let mut parts = spec.split_whitespace();
        let kind = parts.next().ok_or_else(bad)?;
        let arg = parts.next().map(|s| s.parse::<usize>().map_err(|_| bad())).transpose()?;
        if parts.next().is_some() {
            return Err(bad());
        }
        match (kind, arg) {
            ("trivial", None) => Ok(Self::trivial()),
            ("klein", None) => Ok(Self::klein_four()),
            ("cyclic" | "Z", Some(n)) if n >= 1 => Ok(Self::cyclic(n)),
            ("dihedral" | "D", Some(n)) if n >= 3 => Ok(Self::dihedral(n)),
            ("symmetric" | "S", Some(n)) if n >= 1 => Ok(Self::symmetric(n)),
            _ => Err(bad()),
        }
    }

    /// Conjugacy classes ordered by smallest element.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let n = self.order();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for h in 0..n {
            if seen[h] {
                continue;
            }
            let class: BTreeSet<usize> = (0..n).map(|g| self.op(self.op(g, h), self.inv[g])).collect();
            for &c in &class {
                seen[c] = true;
            }
            out.push(class.into_iter().collect());
        }
        out
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.op(a, b) == self.op(b, a)))
    }

    /// Subgroup generated by `gens`, sorted.
    pub fn generated(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = BTreeSet::from([self.identity]);
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.op(x, g);
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// All subgroups generated by at most two elements, deduplicated and sorted.
    pub fn subgroups(&self) -> Vec<Vec<usize>> {
        let n = self.order();
        let mut set = BTreeSet::new();
        for a in 0..n {
            for b in a..n {
                set.insert(self.generated(&[a, b]));
            }
        }
        set.into_iter().collect()
    }

    /// Left cosets `gH`, ordered by smallest element; returns the coset index of every element.
    pub fn left_cosets(&self, subgroup: &[usize]) -> Vec<usize> {
        let n = self.order();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for g in 0..n {
            if label[g] != usize::MAX {
                continue;
            }
            for &h in subgroup {
                label[self.op(g, h)] = next;
            }
            next += 1;
        }
        label
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_and_classes() {
        let cases = [
            (FiniteGroupTable::cyclic(4), 4, 4),
            (FiniteGroupTable::klein_four(), 4, 4),
            (FiniteGroupTable::symmetric(3), 6, 3),
            (FiniteGroupTable::dihedral(4), 8, 5),
            (FiniteGroupTable::symmetric(4), 24, 5),
        ];
        for (g, order, classes) in cases {
            FiniteGroupTable::new(g.names.clone(), g.mul.clone()).unwrap();
            assert_eq!(g.order(), order);
            assert_eq!(g.conjugacy_classes().len(), classes);
            assert_eq!(g.identity, g.find(&g.names[g.identity]).unwrap());
        }
    }

    #[test]
    fn symmetric_identity_first() {
        let s3 = FiniteGroupTable::symmetric(3);
        assert_eq!(s3.names[0], "012");
        assert_eq!(s3.identity, 0);
        assert!(!s3.is_abelian());
    }

    #[test]
    fn cosets() {
        let s3 = FiniteGroupTable::symmetric(3);
        let h = s3.generated(&[s3.find("102").unwrap()]);
        assert_eq!(h.len(), 2);
        let labels = s3.left_cosets(&h);
        assert_eq!(*labels.iter().max().unwrap(), 2);
        assert!(s3.subgroups().len() >= 6);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(FiniteGroupTable::from_spec("cyclic 3").unwrap().order(), 3);
        assert_eq!(FiniteGroupTable::from_spec("product cyclic 2 ; cyclic 3").unwrap().order(), 6);
        assert!(FiniteGroupTable::from_spec("bogus").is_err());
    }

    #[test]
    fn broken_table_rejected() {
        let mut g = FiniteGroupTable::cyclic(3);
        g.mul[1][1] = 1;
        assert!(FiniteGroupTable::new(g.names, g.mul).is_err());
    }
}
