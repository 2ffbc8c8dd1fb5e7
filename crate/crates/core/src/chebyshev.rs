//! Tensor-product Chebyshev atoms, graded index sets and design matrices.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::UncertainBox;

/// Slack allowed when checking that a point lies inside a box.
pub const BOX_TOLERANCE: f64 = 1e-12;

/// Per-dimension polynomial degrees of one tensor atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(dimension: usize) -> Self {
        MultiIndex(vec![0; dimension])
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max_degree(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// Affine map of `x` from `bx` onto `[-1, 1]^d`.
pub fn map_to_canonical(x: &[f64], bx: &UncertainBox) -> Result<Vec<f64>> {
    if x.len() != bx.dimension() {
        return Err(Error::DimensionMismatch { expected: bx.dimension(), got: x.len() });
    }
    x.iter()
        .zip(bx.intervals())
        .enumerate()
        .map(|(dim, (&v, iv))| {
            if iv.is_degenerate() {
                return Err(Error::DegenerateDimension { dim });
            }
            if v < iv.lo() - BOX_TOLERANCE || v > iv.hi() + BOX_TOLERANCE || v.is_nan() {
                return Err(Error::OutOfBox { dim, value: v, lo: iv.lo(), hi: iv.hi() });
            }
            let u = (2.0 * v - iv.lo() - iv.hi()) / (iv.hi() - iv.lo());
            Ok(u.clamp(-1.0, 1.0))
        })
        .collect()
}

/// `T_k(u) = cos(k * arccos(u))` for `u` in `[-1, 1]`.
#[inline]
pub fn chebyshev_t(k: u32, u: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => u,
        _ => (k as f64 * u.clamp(-1.0, 1.0).acos()).cos(),
    }
}

/// Product of one-dimensional Chebyshev polynomials.
pub fn atom_value(idx: &MultiIndex, u: &[f64]) -> f64 {
    idx.0.iter().zip(u).map(|(&k, &v)| chebyshev_t(k, v)).product()
}

/// All multi-indices of total degree `degree` in `dimension` variables, in
/// descending lexicographic order.
fn indices_of_degree(dimension: usize, degree: u32, out: &mut Vec<MultiIndex>, limit: usize) {
    fn rec(prefix: &mut Vec<u32>, dims_left: usize, remaining: u32, out: &mut Vec<MultiIndex>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if dims_left == 1 {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            rec(prefix, dims_left - 1, remaining - k, out, limit);
            prefix.pop();
            if out.len() >= limit {
                return;
            }
        }
    }
    rec(&mut Vec::with_capacity(dimension), dimension, degree, out, limit);
}

/// First `n_atoms` multi-indices in graded order (total degree ascending,
/// ties in reverse-lexicographic order of the degree vector).
pub fn build_index_set(dimension: usize, n_atoms: usize) -> Vec<MultiIndex> {
    assert!(dimension >= 1, "dimension must be positive");
    let mut out = Vec::with_capacity(n_atoms);
    let mut degree = 0;
    while out.len() < n_atoms {
        indices_of_degree(dimension, degree, &mut out, n_atoms);
        degree += 1;
    }
    out
}

/// Ordered atoms over a box. The first atom is always the constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    bx: UncertainBox,
    index_set: Vec<MultiIndex>,
}

impl Dictionary {
    /// Graded dictionary of `n_atoms` atoms over `bx`.
    pub fn graded(bx: UncertainBox, n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidArgument("dictionary needs at least one atom".into()));
        }
        let index_set = build_index_set(bx.dimension(), n_atoms);
        Ok(Self { bx, index_set })
    }

    /// Dictionary with an explicit index set. Indices must be unique, match
    /// the box dimension and start with the constant atom.
    pub fn with_index_set(bx: UncertainBox, index_set: Vec<MultiIndex>) -> Result<Self> {
        let d = bx.dimension();
        if index_set.first().map_or(true, |i| !i.is_constant()) {
            return Err(Error::InvalidArgument("index set must start with the constant atom".into()));
        }
        if let Some(bad) = index_set.iter().find(|i| i.dimension() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.dimension() });
        }
        let mut sorted = index_set.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != index_set.len() {
            return Err(Error::InvalidArgument("duplicate multi-index in index set".into()));
        }
        Ok(Self { bx, index_set })
    }

    pub fn dimension(&self) -> usize {
        self.bx.dimension()
    }

    pub fn n_atoms(&self) -> usize {
        self.index_set.len()
    }

    pub fn index_set(&self) -> &[MultiIndex] {
        &self.index_set
    }

    pub fn bounding_box(&self) -> &UncertainBox {
        &self.bx
    }

    /// Row of atom values at a canonical point.
    pub fn row_canonical(&self, u: &[f64], row: &mut [f64]) {
        // Per-dimension tables of T_k(u_j) avoid recomputing cosines.
        let max_deg = self.index_set.iter().map(MultiIndex::max_degree).max().unwrap_or(0) as usize;
        let tables: Vec<Vec<f64>> = u
            .iter()
            .map(|&v| (0..=max_deg as u32).map(|k| chebyshev_t(k, v)).collect())
            .collect();
        for (slot, idx) in row.iter_mut().zip(&self.index_set) {
            *slot = idx.0.iter().zip(&tables).map(|(&k, t)| t[k as usize]).product();
        }
    }

    pub fn design_matrix_canonical(&self, points: &[Vec<f64>]) -> Array2<f64> {
        let mut phi = Array2::zeros((points.len(), self.n_atoms()));
        for (mut row, u) in phi.rows_mut().into_iter().zip(points) {
            self.row_canonical(u, row.as_slice_mut().expect("standard layout"));
        }
        phi
    }
}

/// Matrix of atom values: rows are samples, columns are atoms.
pub fn design_matrix(samples: &[Vec<f64>], dict: &Dictionary) -> Result<Array2<f64>> {
    let canon = samples
        .iter()
        .map(|x| map_to_canonical(x, dict.bounding_box()))
        .collect::<Result<Vec<_>>>()?;
    Ok(dict.design_matrix_canonical(&canon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{chebyshev_coefficient_bound, Interval};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn recurrence(k: u32, u: f64) -> f64 {
        let (mut t0, mut t1) = (1.0, u);
        if k == 0 {
            return t0;
        }
        for _ in 1..k {
            let t2 = 2.0 * u * t1 - t0;
            t0 = t1;
            t1 = t2;
        }
        t1
    }

    #[test]
    fn canonical_map() {
        let bx = UncertainBox::new(vec![Interval::new(2.0, 4.0).unwrap(), Interval::new(-3.0, 5.0).unwrap()]).unwrap();
        assert_eq!(map_to_canonical(&bx.midpoint(), &bx).unwrap(), vec![0.0, 0.0]);
        let c = UncertainBox::canonical(3);
        let u = map_to_canonical(&[0.3, -0.7, 1.0], &c).unwrap();
        for (a, b) in u.iter().zip([0.3, -0.7, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let pi_box = UncertainBox::new(vec![Interval::new(0.0, std::f64::consts::PI).unwrap()]).unwrap();
        assert_eq!(map_to_canonical(&[std::f64::consts::PI], &pi_box).unwrap(), vec![1.0]);
        assert_eq!(map_to_canonical(&[0.0], &pi_box).unwrap(), vec![-1.0]);
    }

    #[test]
    fn canonical_map_errors() {
        let bx = UncertainBox::from_center_width(&[1.0, 2.0], &[0.5, 0.0]).unwrap();
        assert_eq!(map_to_canonical(&[1.0, 2.0], &bx), Err(Error::DegenerateDimension { dim: 1 }));
        let bx = UncertainBox::canonical(1);
        assert!(matches!(map_to_canonical(&[1.5], &bx), Err(Error::OutOfBox { .. })));
        assert!(map_to_canonical(&[1.0 + 1e-13], &bx).is_ok());
    }

    #[test]
    fn atom_values() {
        assert_eq!(atom_value(&mi(&[0, 0, 0]), &[0.3, -0.2, 0.9]), 1.0);
        assert!((atom_value(&mi(&[1]), &[0.5]) - 0.5).abs() < 1e-15);
        assert!((atom_value(&mi(&[3]), &[0.5]) + 1.0).abs() < 1e-12);
        assert!((atom_value(&mi(&[1, 1]), &[1.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recurrence_agreement() {
        for k in 0..=30 {
            for i in 0..=200 {
                let u = -1.0 + i as f64 / 100.0;
                assert!((chebyshev_t(k, u) - recurrence(k, u)).abs() < 1e-10, "k={k} u={u}");
            }
        }
    }

    #[test]
    fn index_sets() {
        assert_eq!(build_index_set(1, 4), vec![mi(&[0]), mi(&[1]), mi(&[2]), mi(&[3])]);
        assert_eq!(build_index_set(2, 3), vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]);
        assert_eq!(
            build_index_set(2, 6),
            vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1]), mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]
        );
        assert_eq!(
            build_index_set(3, 7)[4..],
            [mi(&[2, 0, 0]), mi(&[1, 1, 0]), mi(&[1, 0, 1])]
        );
    }

    #[test]
    fn index_set_counts_match_complete_degrees() {
        // 91 atoms = all of total degree <= 12 in two variables.
        let s = build_index_set(2, 91);
        assert_eq!(s.last().unwrap().total_degree(), 12);
        assert_eq!(build_index_set(2, 92).last().unwrap().total_degree(), 13);
        // 330 atoms = total degree <= 7 in four variables.
        assert_eq!(build_index_set(4, 330).last().unwrap().total_degree(), 7);
    }

    #[test]
    fn design_matrix_closed_forms() {
        let dict = Dictionary::graded(UncertainBox::canonical(1), 5).unwrap();
        let phi = design_matrix(&[vec![0.0]], &dict).unwrap();
        let expected = [1.0, 0.0, -1.0, 0.0, 1.0];
        for (a, b) in phi.row(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        // Chebyshev nodes of T_3 against the three-term recurrence.
        let dict = Dictionary::graded(UncertainBox::canonical(1), 3).unwrap();
        let nodes: Vec<Vec<f64>> = (1..=3)
            .map(|j| vec![((2 * j - 1) as f64 * std::f64::consts::PI / 6.0).cos()])
            .collect();
        let phi = design_matrix(&nodes, &dict).unwrap();
        for (i, x) in nodes.iter().enumerate() {
            assert_eq!(phi[[i, 0]], 1.0);
            for k in 0..3 {
                assert!((phi[[i, k]] - recurrence(k as u32, x[0])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn design_matrix_on_scaled_box() {
        let bx = UncertainBox::from_center_width(&[10.0, -4.0], &[2.0, 0.5]).unwrap();
        let dict = Dictionary::graded(bx, 10).unwrap();
        let samples = vec![vec![9.0, -4.25], vec![12.0, -3.5], vec![10.0, -4.0]];
        let phi = design_matrix(&samples, &dict).unwrap();
        assert!(phi.column(0).iter().all(|&v| v == 1.0));
        assert!(phi.iter().all(|v| v.abs() <= 1.0 + 1e-15));
        assert!(design_matrix(&[vec![13.0, -4.0]], &dict).is_err());
    }

    #[test]
    fn explicit_index_set_validation() {
        let bx = UncertainBox::canonical(2);
        assert!(Dictionary::with_index_set(bx.clone(), vec![mi(&[1, 0])]).is_err());
        assert!(Dictionary::with_index_set(bx.clone(), vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[1, 0])]).is_err());
        assert!(Dictionary::with_index_set(bx.clone(), vec![mi(&[0, 0]), mi(&[1])]).is_err());
        assert!(Dictionary::with_index_set(bx, vec![mi(&[0, 0]), mi(&[0, 3])]).is_ok());
    }

    /// Random sparse coefficient vectors evaluated on a dense grid never
    /// escape the coefficient-magnitude bound.
    #[test]
    fn bound_soundness_grid_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let d = 1 + trial % 2;
            let n = 12;
            let set = build_index_set(d, n);
            let beta: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.5) { rng.random_range(-3.0..3.0) } else { 0.0 })
                .collect();
            let bound = chebyshev_coefficient_bound(beta[0], &beta[1..]);
            let per: usize = if d == 1 { 2001 } else { 201 };
            let grid: Vec<f64> = (0..per).map(|i| -1.0 + 2.0 * i as f64 / (per - 1) as f64).collect();
            let mut point = vec![0.0; d];
            let total = per.pow(d as u32);
            for flat in 0..total {
                let mut r = flat;
                for p in point.iter_mut() {
                    *p = grid[r % per];
                    r /= per;
                }
                let v: f64 = set.iter().zip(&beta).map(|(i, b)| b * atom_value(i, &point)).sum();
                assert!(v >= bound.lo() - 1e-12 && v <= bound.hi() + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn atoms_bounded(degs in proptest::collection::vec(0u32..25, 3),
                         u in proptest::collection::vec(-1.0..=1.0f64, 3)) {
            prop_assert!(atom_value(&MultiIndex(degs), &u).abs() <= 1.0 + 1e-15);
        }

        #[test]
        fn parity_1d(k in 0u32..40, u in -1.0..=1.0f64) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((chebyshev_t(k, -u) - sign * chebyshev_t(k, u)).abs() < 1e-10);
        }

        #[test]
        fn nested_prefix(d in 1usize..5, n in 1usize..120, extra in 0usize..60) {
            let small = build_index_set(d, n);
            let big = build_index_set(d, n + extra);
            prop_assert_eq!(&big[..n], &small[..]);
            prop_assert!(small[0].is_constant());
            prop_assert!(small.windows(2).all(|w| w[0].total_degree() <= w[1].total_degree()));
            let mut dedup = small.clone();
            dedup.sort();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), small.len());
        }
    }
}
