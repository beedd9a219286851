//! Transformation groupoids, partial actions, restriction and globalization.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::groups::FiniteGroupTable;
use super::renormalize;
use crate::conjugacy::{conjugacy_class, is_icc};
use crate::groupoid::{
    check_isomorphism, is_full, restrict, Arrow, ArrowSet, Fullness, GroupoidError, Mass, MeasuredGroupoid,
    RawGroupoid, UnitId, UnitSpace,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error("not an action: {0}")]
    NotAnAction(String),
    #[error("invalid partial action: {0}")]
    InvalidPartialAction(String),
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
}

/// A partial action of a finite group on a finite weighted set.
///
/// `maps[g]` is `σ_g : X_{g^-1} -> X_g`, keyed by its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialActionSystem {
    pub group: FiniteGroupTable,
    pub space: UnitSpace,
    pub maps: Vec<BTreeMap<UnitId, UnitId>>,
}

impl PartialActionSystem {
    /// Global action from a total map `(g, x) -> g.x`.
    pub fn global(
        group: FiniteGroupTable,
        space: UnitSpace,
        action: &dyn Fn(usize, UnitId) -> UnitId,
    ) -> Result<Self, ActionError> {
        let n = space.len();
        for x in 0..n {
            if action(group.identity, x) != x {
                return Err(ActionError::NotAnAction(format!("identity moves {}", space.names[x])));
            }
        }
        for g in 0..group.order() {
            for x in 0..n {
                let gx = action(g, x);
                if gx >= n {
                    return Err(ActionError::NotAnAction(format!("{} sends {} outside X", group.names[g], space.names[x])));
                }
                for h in 0..group.order() {
                    if action(h, gx) != action(group.op(h, g), x) {
                        return Err(ActionError::NotAnAction(format!(
                            "h.(g.x) != (hg).x for g = {}, h = {}, x = {}",
                            group.names[g], group.names[h], space.names[x]
                        )));
                    }
                }
            }
        }
        let maps = (0..group.order()).map(|g| (0..n).map(|x| (x, action(g, x))).collect()).collect();
        Ok(PartialActionSystem { group, space, maps })
    }

    /// `X_g`, the range of `σ_g`.
    pub fn domain(&self, g: usize) -> BTreeSet<UnitId> {
        self.maps[g].values().copied().collect()
    }

    pub fn apply(&self, g: usize, x: UnitId) -> Option<UnitId> {
        self.maps[g].get(&x).copied()
    }

    pub fn is_global(&self) -> bool {
        self.maps.iter().all(|m| m.len() == self.space.len())
    }

    /// `Fix(g) = {x ∈ X_g ∩ X_{g^-1} | σ_g(x) = x}`.
    pub fn fixed_points(&self, g: usize) -> BTreeSet<UnitId> {
        self.maps[g].iter().filter(|(x, y)| x == y).map(|(x, _)| *x).collect()
    }

    pub fn validate(&self) -> Result<(), ActionError> {
        let bad = |s: String| Err(ActionError::InvalidPartialAction(s));
        let gr = &self.group;
        let n = self.space.len();
        if self.maps.len() != gr.order() {
            return bad(format!("{} maps for a group of order {}", self.maps.len(), gr.order()));
        }
        let e = &self.maps[gr.identity];
        if e.len() != n || e.iter().any(|(x, y)| x != y) {
            return bad("σ_e is not the identity on X".into());
        }
        for g in 0..gr.order() {
            let m = &self.maps[g];
            if m.iter().any(|(&x, &y)| x >= n || y >= n) {
                return bad(format!("σ_{} leaves X", gr.names[g]));
            }
            if m.values().collect::<BTreeSet<_>>().len() != m.len() {
                return bad(format!("σ_{} is not injective", gr.names[g]));
            }
            let inv = &self.maps[gr.inv[g]];
            for (&x, &y) in m {
                if inv.get(&y) != Some(&x) {
                    return bad(format!("σ_{} is not the inverse of σ_{}", gr.names[gr.inv[g]], gr.names[g]));
                }
            }
            if inv.len() != m.len() {
                return bad(format!("σ_{} is not the inverse of σ_{}", gr.names[gr.inv[g]], gr.names[g]));
            }
        }
        for g in 0..gr.order() {
            for h in 0..gr.order() {
                let gh = gr.op(g, h);
                for (&x, &hx) in &self.maps[h] {
                    if let Some(&ghx) = self.maps[g].get(&hx) {
                        if self.maps[gh].get(&x) != Some(&ghx) {
                            return bad(format!(
                                "σ_{} ∘ σ_{} ⊄ σ_{} at {}",
                                gr.names[g], gr.names[h], gr.names[gh], self.space.names[x]
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Arrows `(g, x)` with `x ∈ X_{g^-1}`, in groupoid arrow order.
    pub fn arrow_labels(&self) -> Vec<(usize, UnitId)> {
        (0..self.group.order()).flat_map(|g| self.maps[g].keys().map(move |&x| (g, x))).collect()
    }
}

/// `G ⋉_σ X`: arrows `(g, x)`, `s = x`, `t = σ_g(x)`, `(g, σ_h x)(h, x) = (gh, x)`.
pub fn partial_action_groupoid(p: &PartialActionSystem) -> Result<MeasuredGroupoid, ActionError> {
    p.validate()?;
    let labels = p.arrow_labels();
    let index: BTreeMap<(usize, UnitId), usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let arrows = labels
        .iter()
        .map(|&(g, x)| Arrow {
            name: format!("{}@{}", p.group.names[g], p.space.names[x]),
            src: x,
            tgt: p.maps[g][&x],
        })
        .collect();
    let mut by_source: BTreeMap<UnitId, Vec<usize>> = BTreeMap::new();
    for (i, &(_, x)) in labels.iter().enumerate() {
        by_source.entry(x).or_default().push(i);
    }
    let mut compose = Vec::new();
    for (b, &(h, x)) in labels.iter().enumerate() {
        let y = p.maps[h][&x];
        for &a in by_source.get(&y).into_iter().flatten() {
            let g = labels[a].0;
            compose.push((a, b, index[&(p.group.op(g, h), x)]));
        }
    }
    let inverse = labels
        .iter()
        .enumerate()
        .map(|(i, &(g, x))| (i, index[&(p.group.inv[g], p.maps[g][&x])]))
        .collect();
    let unit_arrows = (0..p.space.len()).map(|x| (x, index[&(p.group.identity, x)])).collect();
    Ok(RawGroupoid { units: p.space.clone(), arrows, compose, inverse, unit_arrows }.validate()?)
}

/// `Γ ⋉ X` for a global action.
pub fn transformation_groupoid(
    group: &FiniteGroupTable,
    action: &dyn Fn(usize, UnitId) -> UnitId,
    space: UnitSpace,
) -> Result<MeasuredGroupoid, ActionError> {
    partial_action_groupoid(&PartialActionSystem::global(group.clone(), space, action)?)
}

/// `Y_g = {x ∈ X_g ∩ Y | σ_{g^-1}(x) ∈ Y}`, with `Y` renumbered in order and renormalized.
pub fn restrict_partial(p: &PartialActionSystem, y: &BTreeSet<UnitId>) -> Result<PartialActionSystem, ActionError> {
    p.validate()?;
    let keep: Vec<UnitId> = y.iter().copied().filter(|&x| x < p.space.len()).collect();
    let (space, _) = p.space.restricted(&keep)?;
    let new: BTreeMap<UnitId, UnitId> = keep.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let maps = p
        .maps
        .iter()
        .map(|m| {
            m.iter()
                .filter_map(|(x, gx)| Some((*new.get(x)?, *new.get(gx)?)))
                .collect()
        })
        .collect();
    Ok(PartialActionSystem { group: p.group.clone(), space, maps })
}

/// Enveloping action of a partial action.
#[derive(Debug, Clone)]
pub struct Globalization {
    pub global: PartialActionSystem,
    pub groupoid: MeasuredGroupoid,
    /// `ι(y) = [e, y]`.
    pub embedding: Vec<UnitId>,
    /// Fundamental domain: the representative `(g, y)` of every point of `X`.
    pub domain: Vec<(usize, UnitId)>,
    /// Every `R`-class meets the fundamental domain exactly once.
    pub domain_is_transversal: bool,
    pub fullness: Fullness,
    /// Arrow bijection `(G ⋉ X)|_Y -> G ⋉ Y` (restricted id, input id).
    pub arrow_bijection: Vec<(usize, usize)>,
    /// Outcome of the isomorphism check of that bijection.
    pub isomorphism: Result<(), String>,
}

/// Build `X = (G × Y)/R` with `θ_g[h, x] = [gh, x]`.
///
/// `(g, x) R (h, y)` iff `x ∈ Y_{g^-1 h}` and `σ_{h^-1 g}(x) = y`.
pub fn globalize(p: &PartialActionSystem) -> Result<Globalization, ActionError> {
    p.validate()?;
    let gr = &p.group;
    let (ng, ny) = (gr.order(), p.space.len());
    let pair = |g: usize, y: UnitId| g * ny + y;
    let mut parent: Vec<usize> = (0..ng * ny).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for g in 0..ng {
        for h in 0..ng {
            let k = gr.op(gr.inv[h], g);
            for (&x, &y) in &p.maps[k] {
                let (a, b) = (find(&mut parent, pair(g, x)), find(&mut parent, pair(h, y)));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let class: Vec<usize> = (0..ng * ny).map(|i| find(&mut parent, i)).collect();

    // g_0 = e, then the remaining elements in table order
    let order: Vec<usize> = std::iter::once(gr.identity).chain((0..ng).filter(|&g| g != gr.identity)).collect();
    let mut domain = Vec::new();
    for (n, &gn) in order.iter().enumerate() {
        let mut excluded = BTreeSet::new();
        for &gk in &order[..n] {
            excluded.extend(p.domain(gr.op(gr.inv[gn], gk)));
        }
        for y in 0..ny {
            if !excluded.contains(&y) {
                domain.push((gn, y));
            }
        }
    }
    let mut point_of_class: BTreeMap<usize, UnitId> = BTreeMap::new();
    let mut transversal = true;
    for (i, &(g, y)) in domain.iter().enumerate() {
        if point_of_class.insert(class[pair(g, y)], i).is_some() {
            transversal = false;
        }
    }
    let n_classes = class.iter().collect::<BTreeSet<_>>().len();
    transversal &= point_of_class.len() == n_classes;
    if !transversal {
        return Err(ActionError::InvalidPartialAction("fundamental domain is not a transversal".into()));
    }

    let names: Vec<String> = domain
        .iter()
        .map(|&(g, y)| {
            if g == gr.identity {
                p.space.names[y].clone()
            } else {
                format!("{}*{}", gr.names[g], p.space.names[y])
            }
        })
        .collect();
    let raw_masses: Vec<Mass> = domain.iter().map(|&(_, y)| p.space.masses[y].clone()).collect();
    let masses = renormalize(&raw_masses).unwrap_or(raw_masses);
    let mut space = UnitSpace::new(names, masses);
    space.unnormalized = p.space.unnormalized;
    let act = |g: usize, pt: UnitId| {
        let (h, y) = domain[pt];
        point_of_class[&class[pair(gr.op(g, h), y)]]
    };
    let global = PartialActionSystem::global(gr.clone(), space, &act)?;
    let groupoid = partial_action_groupoid(&global)?;
    let embedding: Vec<UnitId> = (0..ny).map(|y| point_of_class[&class[pair(gr.identity, y)]]).collect();

    let image: BTreeSet<UnitId> = embedding.iter().copied().collect();
    let fullness = is_full(&groupoid, &image);

    let original = partial_action_groupoid(p)?;
    let (arrow_bijection, isomorphism) = match restrict(&groupoid, &image) {
        Ok(r) => {
            let unit_back: BTreeMap<UnitId, UnitId> = embedding.iter().enumerate().map(|(y, &u)| (u, y)).collect();
            let unit_map: Vec<UnitId> = r.units.iter().map(|u| unit_back[u]).collect();
            let labels = global.arrow_labels();
            let orig_index: BTreeMap<(usize, UnitId), usize> =
                p.arrow_labels().into_iter().enumerate().map(|(i, l)| (l, i)).collect();
            let mut bij = Vec::new();
            let mut missing = None;
            for (i, &old) in r.arrows.iter().enumerate() {
                let (g, pt) = labels[old];
                match orig_index.get(&(g, unit_back[&pt])) {
                    Some(&j) => bij.push((i, j)),
                    None => missing = Some(r.groupoid.arrow_name(i).to_string()),
                }
            }
            let check = match missing {
                Some(m) => Err(format!("arrow {m} has no counterpart")),
                None => {
                    let arrow_map: Vec<usize> = bij.iter().map(|&(_, j)| j).collect();
                    check_isomorphism(&r.groupoid, &original, &unit_map, &arrow_map)
                }
            };
            (bij, check)
        }
        Err(e) => (Vec::new(), Err(e.to_string())),
    };

    Ok(Globalization {
        global,
        groupoid,
        embedding,
        domain,
        domain_is_transversal: transversal,
        fullness,
        arrow_bijection,
        isomorphism,
    })
}

/// Witness structure for a non-icc transformation groupoid.
///
/// For the first positive isotropy arrow `(γ, x) ∉ G0`, `C = F(x)` collects the
/// group elements `g` with `(g, x)` in the conjugacy class, `H` is the subgroup
/// they generate and `Y` is the set of units where the class lives.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StabilizerDiagnostic {
    pub base_point: String,
    pub h: Vec<String>,
    pub y: Vec<String>,
    pub c: Vec<String>,
}

pub fn stabilizer_diagnostic(p: &PartialActionSystem, g: &MeasuredGroupoid) -> Option<StabilizerDiagnostic> {
    let verdict = is_icc(g);
    let witness = verdict.witness_set(g)?;
    let h0 = witness.iter().next()?;
    let class = conjugacy_class(g, &ArrowSet::from_iter([h0])).ok()?;
    let labels = p.arrow_labels();
    let x = g.src(h0);
    let fx: Vec<usize> = class.omega.iter().filter(|&a| g.src(a) == x).map(|a| labels[a].0).collect();
    let h = p.group.generated(&fx);
    let y: BTreeSet<UnitId> = class.omega.iter().map(|a| g.src(a)).collect();
    Some(StabilizerDiagnostic {
        base_point: g.unit_name(x).to_string(),
        h: h.iter().map(|&k| p.group.names[k].clone()).collect(),
        y: y.iter().map(|&u| g.unit_name(u).to_string()).collect(),
        c: fx.iter().map(|&k| p.group.names[k].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugacy::is_icc;
    use crate::groupoid::{check_isomorphism_by_names, is_ergodic, iso_subgroupoid, orbits};

    fn z2_partial() -> PartialActionSystem {
        // X_a = {0}, σ_a(0) = 0
        let group = FiniteGroupTable::cyclic(2);
        let maps = vec![[(0, 0), (1, 1)].into_iter().collect(), [(0, 0)].into_iter().collect()];
        PartialActionSystem { group, space: UnitSpace::uniform(2), maps }
    }

    #[test]
    fn swap_is_full_relation() {
        let g = transformation_groupoid(&FiniteGroupTable::cyclic(2), &|g, x| (g + x) % 2, UnitSpace::uniform(2)).unwrap();
        assert_eq!(g.n_arrows(), 4);
        assert_eq!(iso_subgroupoid(&g), g.unit_arrows());
        assert_eq!(orbits(&g).len(), 1);
    }

    #[test]
    fn trivial_action_is_group() {
        let g = transformation_groupoid(&FiniteGroupTable::cyclic(2), &|_, x| x, UnitSpace::uniform(1)).unwrap();
        assert_eq!(g.n_arrows(), 2);
        assert_eq!(iso_subgroupoid(&g).len(), 2);
        let g2 = transformation_groupoid(&FiniteGroupTable::cyclic(2), &|_, x| x, UnitSpace::uniform(2)).unwrap();
        assert_eq!(iso_subgroupoid(&g2).len(), 4);
    }

    #[test]
    fn z4_on_itself() {
        let g = transformation_groupoid(&FiniteGroupTable::cyclic(4), &|g, x| (g + x) % 4, UnitSpace::uniform(4)).unwrap();
        assert_eq!(g.n_arrows(), 16);
        assert!(is_ergodic(&g).ergodic);
        assert!(is_icc(&g).icc);
        assert_eq!(orbits(&g).len(), 1);
    }

    #[test]
    fn not_an_action() {
        let r = transformation_groupoid(&FiniteGroupTable::cyclic(3), &|g, x| if g == 0 { x } else { 1 - x }, UnitSpace::uniform(2));
        assert!(matches!(r, Err(ActionError::NotAnAction(_))));
    }

    #[test]
    fn partial_three_arrows() {
        let p = z2_partial();
        let g = partial_action_groupoid(&p).unwrap();
        assert_eq!(g.n_arrows(), 3);
        assert_eq!(p.fixed_points(1), BTreeSet::from([0]));
        assert!(g.find_arrow("1@x0").is_some());
    }

    #[test]
    fn empty_domains_give_trivial_groupoid() {
        let group = FiniteGroupTable::cyclic(3);
        let mut maps = vec![BTreeMap::new(); 3];
        maps[0] = (0..2).map(|x| (x, x)).collect();
        let p = PartialActionSystem { group, space: UnitSpace::uniform(2), maps };
        let g = partial_action_groupoid(&p).unwrap();
        assert_eq!(g.n_arrows(), 2);
        let glob = globalize(&p).unwrap();
        assert_eq!(glob.global.space.len(), 6);
        glob.isomorphism.unwrap();
    }

    #[test]
    fn broken_containment_rejected() {
        let mut p = z2_partial();
        p.maps[1] = [(0, 1), (1, 0)].into_iter().collect();
        p.maps[1].remove(&1);
        assert!(matches!(p.validate(), Err(ActionError::InvalidPartialAction(_))));
    }

    #[test]
    fn restriction_matches_groupoid_restriction() {
        let swap = PartialActionSystem::global(FiniteGroupTable::cyclic(2), UnitSpace::uniform(2), &|g, x| (g + x) % 2).unwrap();
        let y = BTreeSet::from([0]);
        let r = restrict_partial(&swap, &y).unwrap();
        assert!(r.maps[1].is_empty());
        let lhs = restrict(&partial_action_groupoid(&swap).unwrap(), &y).unwrap().groupoid;
        let rhs = partial_action_groupoid(&r).unwrap();
        check_isomorphism_by_names(&lhs, &rhs).unwrap();
        let all = BTreeSet::from([0, 1]);
        assert_eq!(restrict_partial(&swap, &all).unwrap(), swap);
    }

    #[test]
    fn globalization_of_z2_example() {
        let glob = globalize(&z2_partial()).unwrap();
        assert_eq!(glob.global.space.len(), 3);
        assert!(glob.fullness.borel_full);
        glob.isomorphism.clone().unwrap();
        // a swaps the two points outside the fixed one
        let a = 1;
        let moved: Vec<_> = (0..3).filter(|&x| glob.global.apply(a, x) != Some(x)).collect();
        assert_eq!(moved.len(), 2);
        assert_eq!(glob.global.apply(a, glob.embedding[0]), Some(glob.embedding[0]));
    }

    #[test]
    fn globalization_of_global_action() {
        let swap = PartialActionSystem::global(FiniteGroupTable::cyclic(2), UnitSpace::uniform(2), &|g, x| (g + x) % 2).unwrap();
        let glob = globalize(&swap).unwrap();
        assert_eq!(glob.global.space.len(), 2);
        glob.isomorphism.unwrap();
    }

    #[test]
    fn stabilizer_diagnostic_reports_class() {
        let s3 = FiniteGroupTable::symmetric(3);
        let p = PartialActionSystem::global(s3.clone(), UnitSpace::uniform(1), &|_, x| x).unwrap();
        let g = partial_action_groupoid(&p).unwrap();
        let d = stabilizer_diagnostic(&p, &g).unwrap();
        assert_eq!(d.c.len(), 3);
        assert_eq!(d.h.len(), 6);
        let free = PartialActionSystem::global(FiniteGroupTable::cyclic(3), UnitSpace::uniform(3), &|g, x| (g + x) % 3).unwrap();
        assert!(stabilizer_diagnostic(&free, &partial_action_groupoid(&free).unwrap()).is_none());
    }
}
