//! Deaconu–Renault groupoids of a self-map of a finite set.
//!
//! `(x, k, y)` is an arrow iff `σ^n(x) = σ^m(y)` for some `n, m >= 0` with
//! `k = n - m`. On a finite set every orbit falls into a cycle; with `p` the
//! cycle length, the arrow exists iff `x` and `y` reach the same cycle and
//! `k ≡ φ(y) - φ(x) (mod p)`, where `φ(x)` is the cycle position of
//! `σ^{τ(x)}(x)` minus the tail length `τ(x)`.

use std::collections::BTreeMap;

use crate::groupoid::{UnitId, UnitSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct DeaconuRenaultSystem {
    pub space: UnitSpace,
    pub sigma: Vec<UnitId>,
    pub bound: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub struct DrArrow {
    pub x: UnitId,
    pub k: i64,
    pub y: UnitId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Eventual {
    cycle: usize,
    period: usize,
    phase: i64,
}

/// Arrows with `|k| <= bound` and the isotropy sets `B_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrView {
    /// Sorted.
    pub arrows: Vec<DrArrow>,
    /// `B_n = {x | (x, n, x) ∈ G(σ)}` for `|n| <= bound`.
    pub b_n: BTreeMap<i64, Vec<UnitId>>,
    /// `μ_s(B_n)`.
    pub b_n_measure: BTreeMap<i64, f64>,
    /// Eventual period of every point.
    pub periods: Vec<usize>,
    pub tails: Vec<usize>,
}

impl DeaconuRenaultSystem {
    pub fn validate(&self) -> Result<(), String> {
        if self.sigma.len() != self.space.len() {
            return Err(format!("sigma has {} entries for {} points", self.sigma.len(), self.space.len()));
        }
        if let Some(x) = self.sigma.iter().position(|&y| y >= self.space.len()) {
            return Err(format!("sigma sends {} outside X", self.space.names[x]));
        }
        if self.bound == 0 {
            return Err("bound must be at least 1".into());
        }
        Ok(())
    }

    fn analyse(&self) -> (Vec<Eventual>, Vec<usize>) {
        let n = self.sigma.len();
        // cycle membership: points x with σ^k(x) = x for some k <= n
        let mut cycle_id = vec![usize::MAX; n];
        let mut cycle_pos = vec![0usize; n];
        let mut cycle_len = Vec::new();
        for start in 0..n {
            let mut x = start;
            for _ in 0..n {
                x = self.sigma[x];
            }
            // x is now on a cycle
            if cycle_id[x] != usize::MAX {
                continue;
            }
            let id = cycle_len.len();
            let mut y = x;
            let mut pos = 0;
            loop {
                cycle_id[y] = id;
                cycle_pos[y] = pos;
                pos += 1;
                y = self.sigma[y];
                if y == x {
                    break;
                }
            }
            cycle_len.push(pos);
        }
        let mut out = Vec::with_capacity(n);
        let mut tails = Vec::with_capacity(n);
        for start in 0..n {
            let mut x = start;
            let mut tau = 0;
            while cycle_id[x] == usize::MAX {
                x = self.sigma[x];
                tau += 1;
            }
            let p = cycle_len[cycle_id[x]];
            let phase = (cycle_pos[x] as i64 - tau as i64).rem_euclid(p as i64);
            out.push(Eventual { cycle: cycle_id[x], period: p, phase });
            tails.push(tau);
        }
        (out, tails)
    }
}

/// Enumerate arrows with `|k| <= bound` by exact eventual-cycle membership.
pub fn deaconu_renault(d: &DeaconuRenaultSystem) -> Result<DrView, String> {
    d.validate()?;
    let (ev, tails) = d.analyse();
    let n = d.sigma.len();
    let b = d.bound as i64;
    let mut arrows = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if ev[x].cycle != ev[y].cycle {
                continue;
            }
            let p = ev[x].period as i64;
            for k in -b..=b {
                if (k - (ev[y].phase - ev[x].phase)).rem_euclid(p) == 0 {
                    arrows.push(DrArrow { x, k, y });
                }
            }
        }
    }
    arrows.sort();
    let mut b_n = BTreeMap::new();
    let mut b_n_measure = BTreeMap::new();
    for k in -b..=b {
        let set: Vec<UnitId> = (0..n).filter(|&x| k.rem_euclid(ev[x].period as i64) == 0).collect();
        b_n_measure.insert(k, set.iter().map(|&x| d.space.mass(x)).sum::<f64>() + 0.0);
        b_n.insert(k, set);
    }
    Ok(DrView { arrows, b_n, b_n_measure, periods: ev.iter().map(|e| e.period).collect(), tails })
}

/// Independent check: search `n, m` up to `|k| + 2|X| + bound` for `σ^n(x) = σ^m(y)`, `n - m = k`.
pub fn brute_force_arrow(d: &DeaconuRenaultSystem, x: UnitId, k: i64, y: UnitId) -> bool {
    let limit = k.unsigned_abs() as usize + 2 * d.sigma.len() + d.bound;
    let iterate = |mut z: UnitId, t: usize| {
        for _ in 0..t {
            z = d.sigma[z];
        }
        z
    };
    (0..=limit).any(|m| {
        let n = m as i64 + k;
        n >= 0 && (n as usize) <= limit && iterate(x, n as usize) == iterate(y, m)
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EssentialFreeness {
    pub essentially_free: bool,
    /// Some enumerated `n != 0` has `μ_s(B_n) > 0`.
    pub some_b_n_positive: bool,
    /// The scan bound reaches the smallest period of a positive-mass point.
    pub scan_conclusive: bool,
    pub note: String,
}

/// Every point of a finite set is eventually periodic, so `σ` is essentially
/// free exactly when the measure vanishes.
pub fn essentially_free(d: &DeaconuRenaultSystem) -> Result<EssentialFreeness, String> {
    let view = deaconu_renault(d)?;
    let positive: Vec<UnitId> = (0..d.space.len()).filter(|&x| d.space.is_positive(x)).collect();
    let free = positive.is_empty();
    let some_b_n_positive = view.b_n_measure.iter().any(|(&k, &m)| k != 0 && m > 0.0);
    let min_period = positive.iter().map(|&x| view.periods[x]).min();
    let scan_conclusive = min_period.is_none_or(|p| p <= d.bound);
    let note = if free {
        "measure is zero: every point is eventually periodic, so freeness holds only vacuously".to_string()
    } else {
        format!(
            "{} positive-mass points, smallest eventual period {}",
            positive.len(),
            min_period.unwrap_or(0)
        )
    };
    Ok(EssentialFreeness { essentially_free: free, some_b_n_positive, scan_conclusive, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::Mass;

    fn sys(sigma: Vec<usize>, bound: usize) -> DeaconuRenaultSystem {
        DeaconuRenaultSystem { space: UnitSpace::uniform(sigma.len()), sigma, bound }
    }

    #[test]
    fn identity_on_one_point() {
        let d = sys(vec![0], 3);
        let v = deaconu_renault(&d).unwrap();
        assert!(v.b_n.values().all(|s| s == &vec![0]));
    }

    #[test]
    fn tail_into_fixed_point() {
        let d = sys(vec![1, 1], 4);
        let v = deaconu_renault(&d).unwrap();
        for k in -4..=4 {
            assert!(v.arrows.contains(&DrArrow { x: 0, k, y: 0 }));
            assert!(v.arrows.contains(&DrArrow { x: 0, k, y: 1 }));
            assert!(!v.b_n[&k].is_empty());
        }
        assert_eq!(v.tails, vec![1, 0]);
    }

    #[test]
    fn units_always_in_b0() {
        let d = sys(vec![1, 2, 0, 0], 2);
        let v = deaconu_renault(&d).unwrap();
        assert_eq!(v.b_n[&0], vec![0, 1, 2, 3]);
        assert_eq!(v.b_n[&1], Vec::<usize>::new());
    }

    #[test]
    fn matches_brute_force() {
        let d = sys(vec![1, 2, 0, 0, 3, 6, 5], 5);
        let v = deaconu_renault(&d).unwrap();
        for x in 0..7 {
            for y in 0..7 {
                for k in -5..=5 {
                    assert_eq!(v.arrows.contains(&DrArrow { x, k, y }), brute_force_arrow(&d, x, k, y), "({x},{k},{y})");
                }
            }
        }
    }

    #[test]
    fn freeness() {
        let d = sys(vec![1, 2, 0], 3);
        let f = essentially_free(&d).unwrap();
        assert!(!f.essentially_free && f.some_b_n_positive && f.scan_conclusive);
        let mut null = sys(vec![1, 0], 3);
        null.space.masses = vec![Mass::zero(), Mass::zero()];
        null.space.unnormalized = true;
        let f = essentially_free(&null).unwrap();
        assert!(f.essentially_free && !f.some_b_n_positive);
    }
}
