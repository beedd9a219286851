//! Sparse complex matrices and the block-decomposed commutant solver.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

const DROP: f64 = 1e-15;

/// Square sparse matrix as a coordinate list sorted by `(row, col)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct SpMat {
    pub n: usize,
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl SpMat {
    pub fn zero(n: usize) -> Self {
        SpMat { n, entries: Vec::new() }
    }

    pub fn from_map(n: usize, map: HashMap<(usize, usize), Complex64>) -> Self {
        let mut entries: Vec<_> = map.into_iter().filter(|(_, v)| v.norm() > DROP).map(|((i, j), v)| (i, j, v)).collect();
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        SpMat { n, entries }
    }

    pub fn from_triples(n: usize, triples: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut map = HashMap::new();
        for (i, j, v) in triples {
            *map.entry((i, j)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        Self::from_map(n, map)
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.norm() > DROP {
                    entries.push((i, j, v));
                }
            }
        }
        SpMat { n, entries }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|&(i, j, _)| i == j)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> SpMat {
        SpMat { n: self.n, entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * c)).collect() }
    }

    pub fn adjoint(&self) -> SpMat {
        let mut entries: Vec<_> = self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect();
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        SpMat { n: self.n, entries }
    }

    fn rows(&self) -> Vec<Vec<(usize, Complex64)>> {
        let mut rows = vec![Vec::new(); self.n];
        for &(i, j, v) in &self.entries {
            rows[i].push((j, v));
        }
        rows
    }

    pub fn mul(&self, other: &SpMat) -> SpMat {
        let rows = other.rows();
        let mut map = HashMap::new();
        for &(i, k, v) in &self.entries {
            for &(j, w) in &rows[k] {
                *map.entry((i, j)).or_insert(Complex64::new(0.0, 0.0)) += v * w;
            }
        }
        SpMat::from_map(self.n, map)
    }

    /// `self + c other`.
    pub fn axpy(&self, c: Complex64, other: &SpMat) -> SpMat {
        let mut map: HashMap<(usize, usize), Complex64> = self.entries.iter().map(|&(i, j, v)| ((i, j), v)).collect();
        for &(i, j, v) in &other.entries {
            *map.entry((i, j)).or_insert(Complex64::new(0.0, 0.0)) += c * v;
        }
        SpMat::from_map(self.n, map)
    }

    pub fn commutator(&self, other: &SpMat) -> SpMat {
        self.mul(other).axpy(Complex64::new(-1.0, 0.0), &other.mul(self))
    }

    /// Hilbert–Schmidt inner product `tr(self^* other)`.
    pub fn inner(&self, other: &SpMat) -> Complex64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = Complex64::new(0.0, 0.0);
        while a < self.entries.len() && b < other.entries.len() {
            let (ia, ja, va) = self.entries[a];
            let (ib, jb, vb) = other.entries[b];
            match (ia, ja).cmp(&(ib, jb)) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += va.conj() * vb;
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn combine(n: usize, terms: &[(Complex64, &SpMat)]) -> SpMat {
        let mut map = HashMap::new();
        for (c, m) in terms {
            for &(i, j, v) in &m.entries {
                *map.entry((i, j)).or_insert(Complex64::new(0.0, 0.0)) += c * v;
            }
        }
        SpMat::from_map(n, map)
    }
}

/// Observed singular values on either side of the rank cut.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpectralInfo {
    /// Largest singular value classified as zero.
    pub max_null_sigma: f64,
    /// Smallest singular value classified as nonzero (`inf` when none).
    pub min_kept_sigma: f64,
}

impl Default for SpectralInfo {
    fn default() -> Self {
        SpectralInfo { max_null_sigma: 0.0, min_kept_sigma: f64::INFINITY }
    }
}

impl SpectralInfo {
    pub fn merge(&mut self, other: SpectralInfo) {
        self.max_null_sigma = self.max_null_sigma.max(other.max_null_sigma);
        self.min_kept_sigma = self.min_kept_sigma.min(other.min_kept_sigma);
    }
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

/// Orthonormal basis of `{ Σ c_k F_k : [Σ c_k F_k, T] = 0 for all T }`.
///
/// `frame` must be Hilbert–Schmidt orthonormal; the result is again
/// orthonormal. Generators are processed sparsest (and diagonal) first; for
/// each one the commutator columns split into independent blocks that share
/// no rows, and each block is solved by a dense SVD.
pub(crate) fn commutant_within(gens: &[SpMat], mut frame: Vec<SpMat>, tol: f64) -> (Vec<SpMat>, SpectralInfo) {
    let mut spectral = SpectralInfo::default();
    let mut order: Vec<&SpMat> = gens.iter().collect();
    order.sort_by_key(|t| (!t.is_diagonal(), t.nnz()));
    for t in order {
        if frame.is_empty() {
            break;
        }
        let n = t.n;
        let cols: Vec<SpMat> = frame.iter().map(|f| f.commutator(t)).collect();
        let mut row_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut row_first_col: Vec<usize> = Vec::new();
        let mut parent: Vec<usize> = (0..cols.len()).collect();
        for (c, col) in cols.iter().enumerate() {
            for &(i, j, _) in &col.entries {
                let next = row_index.len();
                let r = *row_index.entry((i, j)).or_insert(next);
                if r == row_first_col.len() {
                    row_first_col.push(c);
                } else {
                    let (a, b) = (find(&mut parent, row_first_col[r]), find(&mut parent, c));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut comp_of_root: HashMap<usize, usize> = HashMap::new();
        for c in 0..cols.len() {
            let r = find(&mut parent, c);
            let idx = *comp_of_root.entry(r).or_insert_with(|| {
                components.push(Vec::new());
                components.len() - 1
            });
            components[idx].push(c);
        }
        let mut next_frame = Vec::new();
        for comp in components {
            if comp.len() == 1 && cols[comp[0]].nnz() == 0 {
                next_frame.push(std::mem::take(&mut frame[comp[0]]));
                continue;
            }
            let mut local_rows: HashMap<(usize, usize), usize> = HashMap::new();
            for &c in &comp {
                for &(i, j, _) in &cols[c].entries {
                    let next = local_rows.len();
                    local_rows.entry((i, j)).or_insert(next);
                }
            }
            let nrows = local_rows.len().max(comp.len());
            let mut m = DMatrix::<Complex64>::zeros(nrows, comp.len());
            for (k, &c) in comp.iter().enumerate() {
                for &(i, j, v) in &cols[c].entries {
                    m[(local_rows[&(i, j)], k)] += v;
                }
            }
            let svd = m.svd(false, true);
            let v_t = svd.v_t.expect("requested V^T");
            for (s, &sigma) in svd.singular_values.iter().enumerate() {
                if sigma <= tol {
                    spectral.max_null_sigma = spectral.max_null_sigma.max(sigma);
                    let terms: Vec<(Complex64, &SpMat)> =
                        comp.iter().enumerate().map(|(k, &c)| (v_t[(s, k)].conj(), &frame[c])).collect();
                    next_frame.push(SpMat::combine(n, &terms));
                } else {
                    spectral.min_kept_sigma = spectral.min_kept_sigma.min(sigma);
                }
            }
        }
        frame = next_frame;
    }
    (frame, spectral)
}

/// Orthonormalize by modified Gram–Schmidt, run twice; vectors below `tol` after projection are dropped.
pub(crate) fn orthonormalize(ops: &[SpMat], tol: f64) -> (Vec<SpMat>, SpectralInfo) {
    let mut spectral = SpectralInfo::default();
    if pairwise_disjoint(ops) {
        let mut out = Vec::new();
        for op in ops {
            let nrm = op.norm();
            if nrm > tol {
                spectral.min_kept_sigma = spectral.min_kept_sigma.min(nrm);
                out.push(op.scale(Complex64::new(1.0 / nrm, 0.0)));
            } else {
                spectral.max_null_sigma = spectral.max_null_sigma.max(nrm);
            }
        }
        return (out, spectral);
    }
    let mut out: Vec<SpMat> = Vec::new();
    for op in ops {
        let mut v = op.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.inner(&v);
                v = v.axpy(-c, q);
            }
        }
        let nrm = v.norm();
        if nrm > tol {
            spectral.min_kept_sigma = spectral.min_kept_sigma.min(nrm);
            out.push(v.scale(Complex64::new(1.0 / nrm, 0.0)));
        } else {
            spectral.max_null_sigma = spectral.max_null_sigma.max(nrm);
        }
    }
    (out, spectral)
}

fn pairwise_disjoint(ops: &[SpMat]) -> bool {
    let mut seen = std::collections::HashSet::new();
    ops.iter().all(|op| op.entries.iter().all(|&(i, j, _)| seen.insert((i, j))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn units(n: usize) -> Vec<SpMat> {
        (0..n).flat_map(|i| (0..n).map(move |j| SpMat::from_triples(n, [(i, j, c(1.0))]))).collect()
    }

    #[test]
    fn commutant_of_identity_is_everything() {
        let id = SpMat::from_triples(3, (0..3).map(|i| (i, i, c(1.0))));
        let (f, _) = commutant_within(&[id], units(3), 1e-9);
        assert_eq!(f.len(), 9);
    }

    #[test]
    fn commutant_of_swap() {
        let swap = SpMat::from_triples(2, [(0, 1, c(1.0)), (1, 0, c(1.0))]);
        let (f, s) = commutant_within(&[swap], units(2), 1e-9);
        assert_eq!(f.len(), 2);
        assert!(s.min_kept_sigma > 0.1);
    }

    #[test]
    fn commutant_of_diagonal() {
        let d = SpMat::from_triples(3, [(0, 0, c(1.0)), (1, 1, c(2.0)), (2, 2, c(2.0))]);
        let (f, _) = commutant_within(&[d], units(3), 1e-9);
        assert_eq!(f.len(), 5);
    }

    #[test]
    fn mgs_drops_dependent() {
        let a = SpMat::from_triples(2, [(0, 0, c(1.0)), (0, 1, c(1.0))]);
        let b = SpMat::from_triples(2, [(0, 0, c(1.0))]);
        let ab = a.axpy(c(2.0), &b);
        let (o, _) = orthonormalize(&[a, b, ab], 1e-9);
        assert_eq!(o.len(), 2);
        assert!(o[0].inner(&o[1]).norm() < 1e-14);
    }
}
