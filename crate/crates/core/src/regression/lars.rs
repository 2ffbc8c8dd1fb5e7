//! Least-angle regression with the LASSO modification, on Gram statistics.

use ndarray::Array2;

use crate::error::{Error, Result};

use super::{GramSystem, RegressionProblem};

/// Squared-residual ratio below which a candidate column is treated as a
/// linear combination of the active set.
const RANK_TOL: f64 = 1e-10;
/// Relative max-correlation at which the path is considered complete.
const CORR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LarsStep {
    /// Active columns after this step, in order of entry.
    pub active: Vec<usize>,
    /// Standardized coefficients at this breakpoint.
    pub beta: Vec<f64>,
    pub l1_norm: f64,
    /// Penalty at which this breakpoint is the LASSO solution
    /// (twice the common absolute correlation).
    pub lambda1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LarsPath {
    pub steps: Vec<LarsStep>,
    pub complete: bool,
    pub warnings: Vec<String>,
}

impl LarsPath {
    pub fn last(&self) -> &LarsStep {
        self.steps.last().expect("path always has the origin")
    }

    pub fn final_l1(&self) -> f64 {
        self.last().l1_norm
    }

    /// Coefficients at L1 norm `target`, interpolating linearly inside the
    /// segment that reaches it. Targets past the end return the endpoint.
    pub fn beta_at_l1(&self, target: f64) -> Vec<f64> {
        for w in self.steps.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if target <= b.l1_norm && b.l1_norm > a.l1_norm {
                if target <= a.l1_norm {
                    return a.beta.clone();
                }
                let t = (target - a.l1_norm) / (b.l1_norm - a.l1_norm);
                return a.beta.iter().zip(&b.beta).map(|(x, y)| x + t * (y - x)).collect();
            }
        }
        self.last().beta.clone()
    }

    /// Coefficients at fraction `s` of the final L1 norm.
    pub fn beta_at_fraction(&self, s: f64) -> Vec<f64> {
        if s >= 1.0 {
            return self.last().beta.clone();
        }
        self.beta_at_l1(s * self.final_l1())
    }

    /// Last breakpoint with at most `k` active columns.
    pub fn beta_with_max_atoms(&self, k: usize) -> Vec<f64> {
        self.steps
            .iter()
            .take_while(|s| s.active.len() <= k)
            .last()
            .unwrap_or(&self.steps[0])
            .beta
            .clone()
    }
}

/// Lower-triangular Cholesky factor of the active Gram block, grown one row
/// at a time.
struct Cholesky {
    stride: usize,
    size: usize,
    data: Vec<f64>,
}

impl Cholesky {
    fn new(capacity: usize) -> Self {
        Self { stride: capacity, size: 0, data: vec![0.0; capacity * capacity] }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.stride + j]
    }

    /// Solve `L z = b` in place.
    fn forward(&self, b: &mut [f64]) {
        for i in 0..self.size {
            let row = &self.data[i * self.stride..i * self.stride + i];
            let s = dot(row, &b[..i]);
            b[i] = (b[i] - s) / self.at(i, i);
        }
    }

    /// Solve `L^T z = b` in place.
    fn backward(&self, b: &mut [f64]) {
        for i in (0..self.size).rev() {
            b[i] /= self.at(i, i);
            let bi = b[i];
            let row = &self.data[i * self.stride..i * self.stride + i];
            for (z, l) in b[..i].iter_mut().zip(row) {
                *z -= l * bi;
            }
        }
    }

    /// Append a column with Gram entries `g` (against the current active set)
    /// and diagonal `gjj`. Returns false when numerically dependent.
    fn push(&mut self, g: &[f64], gjj: f64) -> bool {
        let k = self.size;
        let mut z = g.to_vec();
        self.forward(&mut z);
        let d2 = gjj - dot(&z, &z);
        if !(d2 > RANK_TOL * gjj) {
            return false;
        }
        let row = k * self.stride;
        self.data[row..row + k].copy_from_slice(&z);
        self.data[row + k] = d2.sqrt();
        self.size += 1;
        true
    }

    /// Remove the column at position `p`, restoring triangular form with
    /// Givens rotations.
    fn remove(&mut self, p: usize) {
        let k = self.size;
        let st = self.stride;
        for i in p..k - 1 {
            let (dst, src) = (i * st, (i + 1) * st);
            self.data.copy_within(src..src + i + 2, dst);
        }
        for r in p..k - 1 {
            let a = self.data[r * st + r];
            let b = self.data[r * st + r + 1];
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            for i in r..k - 1 {
                let x = self.data[i * st + r];
                let y = self.data[i * st + r + 1];
                self.data[i * st + r] = c * x + s * y;
                self.data[i * st + r + 1] = c * y - s * x;
            }
            self.data[r * st + r + 1] = 0.0;
        }
        self.size = k - 1;
    }
}

/// Dot product with independent partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// LASSO path of a standardized problem.
pub fn lars_lasso_path(prob: &RegressionProblem) -> Result<LarsPath> {
    lars_path_gram(&prob.gram_system())
}

/// LASSO path from Gram statistics, from `beta = 0` to the least-squares end
/// (or until every correlation vanishes).
pub fn lars_path_gram(sys: &GramSystem) -> Result<LarsPath> {
    lars_core(GramAccess::plain(&sys.gram), &sys.xty, &sys.excluded)
}

/// Read-only view of `scale * G + shift * I` (shift on non-excluded columns).
#[derive(Clone, Copy)]
pub(crate) struct GramAccess<'a> {
    data: &'a [f64],
    n: usize,
    scale: f64,
    shift: f64,
}

impl<'a> GramAccess<'a> {
    pub(crate) fn plain(gram: &'a Array2<f64>) -> Self {
        Self::scaled(gram, 1.0, 0.0)
    }

    pub(crate) fn scaled(gram: &'a Array2<f64>, scale: f64, shift: f64) -> Self {
        let n = gram.nrows();
        let data = gram.as_slice().expect("gram matrix in standard layout");
        Self { data, n, scale, shift }
    }

    /// Augmented Gram `(G + l2 I) / (1 + l2)`.
    pub(crate) fn augmented(gram: &'a Array2<f64>, lambda2: f64) -> Self {
        if lambda2 == 0.0 {
            return Self::plain(gram);
        }
        Self::scaled(gram, 1.0 / (1.0 + lambda2), lambda2 / (1.0 + lambda2))
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        let v = self.data[i * self.n + j];
        if self.scale == 1.0 && self.shift == 0.0 {
            v
        } else if i == j {
            v * self.scale + self.shift
        } else {
            v * self.scale
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

pub(crate) fn lars_core(gram: GramAccess<'_>, xty: &[f64], excluded: &[bool]) -> Result<LarsPath> {
    let n = xty.len();
    if let Some((i, v)) = xty.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { what: "correlations".into(), index: i, value: *v });
    }
    if gram.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "gram matrix".into(), index: 0, value: f64::NAN });
    }
    let mut forbidden = excluded.to_vec();
    let mut in_active = vec![false; n];
    let mut active: Vec<usize> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut beta = vec![0.0; n];
    let mut corr = xty.to_vec();
    let mut chol = Cholesky::new(n);
    let mut warnings = Vec::new();

    let max_corr = |corr: &[f64], forbidden: &[bool]| {
        corr.iter()
            .zip(forbidden)
            .filter(|(_, &f)| !f)
            .fold(0.0f64, |m, (c, _)| m.max(c.abs()))
    };
    let c0 = max_corr(&corr, &forbidden);
    let mut steps = vec![LarsStep { active: vec![], beta: beta.clone(), l1_norm: 0.0, lambda1: 2.0 * c0 }];
    if !(c0 > f64::MIN_POSITIVE) {
        return Ok(LarsPath { steps, complete: true, warnings });
    }
    let tol = CORR_TOL * c0;

    let mut dropped_last = false;
    let mut just_dropped: Option<usize> = None;
    let mut complete = false;
    let max_iter = 8 * n + 16;
    let mut a = vec![0.0; n];
    let mut g = Vec::with_capacity(n);
    for _ in 0..max_iter {
        let c = max_corr(&corr, &forbidden);
        if c <= tol {
            complete = true;
            break;
        }
        if !dropped_last {
            let pick = (0..n)
                .filter(|&j| !in_active[j] && !forbidden[j])
                .max_by(|&i, &j| corr[i].abs().total_cmp(&corr[j].abs()));
            if let Some(j) = pick {
                g.clear();
                g.extend(active.iter().map(|&i| gram.get(i, j)));
                if chol.push(&g, gram.get(j, j)) {
                    active.push(j);
                    signs.push(if corr[j] >= 0.0 { 1.0 } else { -1.0 });
                    in_active[j] = true;
                } else {
                    forbidden[j] = true;
                    warnings.push(format!("column {j} is collinear with the active set; dropped"));
                    continue;
                }
            }
        }
        if active.is_empty() {
            complete = true;
            break;
        }
        // Equiangular direction in coefficient space.
        let mut w = signs.clone();
        chol.forward(&mut w);
        chol.backward(&mut w);
        let sw: f64 = signs.iter().zip(&w).map(|(s, v)| s * v).sum();
        if !(sw > 0.0) {
            warnings.push("degenerate equiangular direction; path truncated".into());
            break;
        }
        let aa = 1.0 / sw.sqrt();
        w.iter_mut().for_each(|v| *v *= aa);

        // G is symmetric, so accumulate active rows.
        a.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &wi) in active.iter().zip(&w) {
            for (slot, g) in a.iter_mut().zip(gram.row(i)) {
                *slot += wi * g;
            }
        }
        if gram.scale != 1.0 {
            a.iter_mut().for_each(|v| *v *= gram.scale);
        }
        for (slot, &f) in a.iter_mut().zip(&forbidden) {
            if f {
                *slot = 0.0;
            }
        }
        if gram.shift != 0.0 {
            for (&i, wi) in active.iter().zip(&w) {
                a[i] += gram.shift * wi;
            }
        }

        let gamma_end = c / aa;
        let floor = 1e-12 * gamma_end;
        let mut gamma = gamma_end;
        // A column already level with the active set enters through a
        // zero-length step, keeping one change per breakpoint.
        let mut tie = false;
        for j in 0..n {
            if in_active[j] || forbidden[j] {
                continue;
            }
            for (num, den) in [(c - corr[j], aa - a[j]), (c + corr[j], aa + a[j])] {
                if den > 0.0 {
                    let g = num / den;
                    if g <= floor {
                        // the column dropped last step sits level with the
                        // active set without re-entering
                        tie |= just_dropped != Some(j);
                    } else if g < gamma {
                        gamma = g;
                    }
                }
            }
        }
        if tie {
            gamma = 0.0;
        }

        let mut drop: Option<usize> = None;
        for (pos, (&j, &wj)) in active.iter().zip(&w).enumerate() {
            if wj != 0.0 && !tie {
                let g = -beta[j] / wj;
                if g > floor && g < gamma {
                    gamma = g;
                    drop = Some(pos);
                }
            }
        }

        for (&j, &wj) in active.iter().zip(&w) {
            beta[j] += gamma * wj;
        }
        for j in 0..n {
            corr[j] -= gamma * a[j];
        }
        dropped_last = false;
        just_dropped = None;
        if let Some(pos) = drop {
            let j = active.remove(pos);
            just_dropped = Some(j);
            signs.remove(pos);
            in_active[j] = false;
            beta[j] = 0.0;
            dropped_last = true;
            chol.remove(pos);
        }
        let new_c = (c - gamma * aa).max(0.0);
        steps.push(LarsStep {
            active: active.clone(),
            beta: beta.clone(),
            l1_norm: beta.iter().map(|b| b.abs()).sum(),
            lambda1: 2.0 * new_c,
        });
    }
    Ok(LarsPath { steps, complete, warnings })
}
