//! Sparse regression: LASSO paths by least-angle regression, elastic net by
//! augmented-data reduction, and k-fold selection of the ridge weight.
//!
//! All solvers work on a standardized problem: the response is centered and
//! every non-constant column is centered and scaled to unit Euclidean norm.
//! Constant columns are excluded from penalization and absorbed into the
//! intercept. Objectives use the unnormalized convention
//! `||y - X b||^2 + lambda1 ||b||_1 (+ lambda2 ||b||^2)`, so at a LASSO
//! breakpoint every active column has `|X^T r| = lambda1 / 2`.

mod cv;
mod elastic_net;
mod lars;

pub use cv::{cross_validate_lambda2, CvPlan, CvResult, CvRow, FRACTION_GRID};
pub(crate) use elastic_net::elastic_net_beta;
pub use elastic_net::{augmented_design, DEFAULT_LAMBDA2_GRID, elastic_net_fit, elastic_net_path, ElasticNetConfig, ElasticNetFit, PathSelection};
pub use lars::{lars_lasso_path, lars_path_gram, LarsPath, LarsStep};

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Centered column norm below which a column is treated as constant.
const CONSTANT_COLUMN_TOL: f64 = 1e-12;

/// A regression problem together with the preprocessing that standardizes it.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    design: Array2<f64>,
    response: Vec<f64>,
    normalized: Array2<f64>,
    centered_response: Vec<f64>,
    column_means: Vec<f64>,
    column_scales: Vec<f64>,
    response_offset: f64,
}

impl RegressionProblem {
    pub fn new(design: Array2<f64>, response: Vec<f64>) -> Result<Self> {
        let (m, n) = design.dim();
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("empty regression problem".into()));
        }
        if response.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: response.len() });
        }
        if let Some((i, v)) = response.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { what: "response".into(), index: i, value: *v });
        }
        if let Some(((i, _), v)) = design.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { what: "design matrix".into(), index: i, value: *v });
        }
        let (normalized, column_means, column_scales) = standardize(design.view());
        let response_offset = response.iter().sum::<f64>() / m as f64;
        let centered_response = response.iter().map(|y| y - response_offset).collect();
        Ok(Self { design, response, normalized, centered_response, column_means, column_scales, response_offset })
    }

    pub fn n_samples(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.design
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Standardized design; excluded (constant) columns are zero.
    pub fn normalized_design(&self) -> &Array2<f64> {
        &self.normalized
    }

    pub fn centered_response(&self) -> &[f64] {
        &self.centered_response
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    /// Euclidean norm of each centered column; zero marks an excluded column.
    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    pub fn response_offset(&self) -> f64 {
        self.response_offset
    }

    pub fn gram_system(&self) -> GramSystem {
        GramSystem::from_standardized(self.normalized.view(), &self.centered_response, &self.column_scales)
    }

    /// Map standardized coefficients back to the raw basis.
    /// Returns `(raw coefficients, intercept)`.
    pub fn unstandardize(&self, beta: &[f64]) -> (Vec<f64>, f64) {
        unstandardize(beta, &self.column_means, &self.column_scales, self.response_offset)
    }
}

pub(crate) fn standardize(design: ArrayView2<'_, f64>) -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let (m, n) = design.dim();
    let means: Vec<f64> = design.mean_axis(Axis(0)).expect("non-empty").to_vec();
    let mut normalized = Array2::zeros((m, n));
    let mut scales = vec![0.0; n];
    for j in 0..n {
        let col = design.column(j);
        let norm = col.iter().map(|v| (v - means[j]).powi(2)).sum::<f64>().sqrt();
        let magnitude = col.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        if norm > CONSTANT_COLUMN_TOL * magnitude * (m as f64).sqrt() {
            scales[j] = norm;
            for i in 0..m {
                normalized[[i, j]] = (design[[i, j]] - means[j]) / norm;
            }
        }
    }
    (normalized, means, scales)
}

pub(crate) fn unstandardize(beta: &[f64], means: &[f64], scales: &[f64], offset: f64) -> (Vec<f64>, f64) {
    let mut raw = vec![0.0; beta.len()];
    let mut intercept = offset;
    for j in 0..beta.len() {
        if scales[j] > 0.0 && beta[j] != 0.0 {
            raw[j] = beta[j] / scales[j];
            intercept -= raw[j] * means[j];
        }
    }
    (raw, intercept)
}

/// Sufficient statistics of a standardized least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSystem {
    /// `X^T X`, n x n.
    pub gram: Array2<f64>,
    /// `X^T y`.
    pub xty: Vec<f64>,
    /// Columns that never enter the model.
    pub excluded: Vec<bool>,
}

impl GramSystem {
    pub(crate) fn from_standardized(x: ArrayView2<'_, f64>, y: &[f64], scales: &[f64]) -> Self {
        let gram = x.t().dot(&x);
        let yv = ndarray::ArrayView1::from(y);
        let xty = x.t().dot(&yv).to_vec();
        let excluded = scales.iter().map(|&s| s == 0.0).collect();
        Self { gram, xty, excluded }
    }

    pub fn n(&self) -> usize {
        self.xty.len()
    }

    /// Gram system of the augmented problem
    /// `X* = (1 + l2)^(-1/2) [X; sqrt(l2) I]`, `y* = [y; 0]`:
    /// `X*^T X* = (X^T X + l2 I) / (1 + l2)` and `X*^T y* = X^T y / sqrt(1 + l2)`.
    pub fn augmented(&self, lambda2: f64) -> GramSystem {
        let n = self.n();
        let denom = 1.0 + lambda2;
        let root = denom.sqrt();
        let mut gram = self.gram.clone();
        for i in 0..n {
            for j in 0..n {
                let add = if i == j && !self.excluded[i] { lambda2 } else { 0.0 };
                gram[[i, j]] = (gram[[i, j]] + add) / denom;
            }
        }
        let xty = self.xty.iter().map(|v| v / root).collect();
        GramSystem { gram, xty, excluded: self.excluded.clone() }
    }
}
