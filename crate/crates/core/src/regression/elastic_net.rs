use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::lars::{lars_core, GramAccess};
use super::{GramSystem, LarsPath, RegressionProblem};

/// Ridge weights tried by cross-validation.
pub const DEFAULT_LAMBDA2_GRID: [f64; 7] = [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0];

/// Where on the path the final model sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSelection {
    /// Fraction `s` in `(0, 1]` of the final L1 norm.
    L1Fraction(f64),
    /// Last breakpoint with at most this many active atoms.
    MaxAtoms(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetConfig {
    pub lambda2: f64,
    pub path_selection: PathSelection,
    pub cv_folds: usize,
    pub lambda2_grid: Vec<f64>,
    /// Shuffle the fold assignment with this seed; contiguous blocks otherwise.
    pub fold_seed: Option<u64>,
    /// Skip the remaining ridge weights once `lambda2 = 0` already reaches the
    /// numerical noise floor (no other weight can then be selected).
    pub early_exit: bool,
}

impl Default for ElasticNetConfig {
    fn default() -> Self {
        Self {
            lambda2: 0.0,
            path_selection: PathSelection::L1Fraction(1.0),
            cv_folds: 10,
            lambda2_grid: DEFAULT_LAMBDA2_GRID.to_vec(),
            fold_seed: None,
            early_exit: true,
        }
    }
}

impl ElasticNetConfig {
    /// Ten folds, or leave-one-out when fewer than ten samples exist.
    pub fn default_folds(m: usize) -> usize {
        if m >= 10 {
            10
        } else {
            m
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda2 >= 0.0) || !self.lambda2.is_finite() {
            return Err(Error::Config { field: "lambda2".into(), msg: "must be finite and nonnegative".into() });
        }
        if self.lambda2_grid.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || self.lambda2_grid.is_empty() {
            return Err(Error::Config {
                field: "lambda2_grid".into(),
                msg: "must be a nonempty list of nonnegative reals".into(),
            });
        }
        match self.path_selection {
            PathSelection::L1Fraction(s) if !(s > 0.0 && s <= 1.0) => {
                Err(Error::Config { field: "path_selection".into(), msg: format!("fraction {s} not in (0, 1]") })
            }
            _ => Ok(()),
        }
    }
}

/// Explicit augmented data `(X*, y*)` for the standardized problem.
pub fn augmented_design(prob: &RegressionProblem, lambda2: f64) -> (Array2<f64>, Vec<f64>) {
    let x = prob.normalized_design();
    let (m, n) = x.dim();
    let scale = 1.0 / (1.0 + lambda2).sqrt();
    let root = lambda2.sqrt();
    let mut xs = Array2::zeros((m + n, n));
    for i in 0..m {
        for j in 0..n {
            xs[[i, j]] = scale * x[[i, j]];
        }
    }
    for j in 0..n {
        if prob.column_scales()[j] > 0.0 {
            xs[[m + j, j]] = scale * root;
        }
    }
    let mut ys = prob.centered_response().to_vec();
    ys.resize(m + n, 0.0);
    (xs, ys)
}

/// LASSO path of the augmented problem for a fixed ridge weight. Breakpoint
/// coefficients are in the augmented scale; multiply by `sqrt(1 + lambda2)`
/// for elastic-net coefficients.
pub fn elastic_net_path(base: &GramSystem, lambda2: f64) -> Result<LarsPath> {
    let xty: Vec<f64> = if lambda2 == 0.0 {
        base.xty.clone()
    } else {
        let root = (1.0 + lambda2).sqrt();
        base.xty.iter().map(|v| v / root).collect()
    };
    lars_core(GramAccess::augmented(&base.gram, lambda2), &xty, &base.excluded)
}

/// Standardized elastic-net coefficients from a precomputed Gram matrix and
/// unscaled `X^T y`. Returns the coefficients and the path warnings.
pub(crate) fn elastic_net_beta(
    gram: &Array2<f64>,
    excluded: &[bool],
    xty: &[f64],
    lambda2: f64,
    selection: PathSelection,
) -> Result<(Vec<f64>, Vec<String>)> {
    let root = (1.0 + lambda2).sqrt();
    let scaled: Vec<f64> = if lambda2 == 0.0 { xty.to_vec() } else { xty.iter().map(|v| v / root).collect() };
    let path = lars_core(GramAccess::augmented(gram, lambda2), &scaled, excluded)?;
    let mut beta = select(&path, selection);
    if lambda2 != 0.0 {
        beta.iter_mut().for_each(|b| *b *= root);
    }
    Ok((beta, path.warnings))
}

pub(crate) fn select(path: &LarsPath, selection: PathSelection) -> Vec<f64> {
    match selection {
        PathSelection::L1Fraction(s) => path.beta_at_fraction(s),
        PathSelection::MaxAtoms(k) => path.beta_with_max_atoms(k),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetFit {
    /// Raw-basis coefficients; excluded columns are zero.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Standardized elastic-net coefficients.
    pub standardized: Vec<f64>,
    pub lambda2: f64,
    pub path_selection: PathSelection,
    pub warnings: Vec<String>,
}

impl ElasticNetFit {
    pub fn selected_atoms(&self) -> usize {
        self.coefficients.iter().filter(|&&b| b != 0.0).count()
    }
}

/// Elastic net at `cfg.lambda2` and `cfg.path_selection`, through the
/// augmented LASSO and the `sqrt(1 + lambda2)` rescaling.
pub fn elastic_net_fit(prob: &RegressionProblem, cfg: &ElasticNetConfig) -> Result<ElasticNetFit> {
    cfg.validate()?;
    let path = elastic_net_path(&prob.gram_system(), cfg.lambda2)?;
    Ok(fit_from_path(prob, &path, cfg.lambda2, cfg.path_selection))
}

pub(crate) fn fit_from_path(
    prob: &RegressionProblem,
    path: &LarsPath,
    lambda2: f64,
    selection: PathSelection,
) -> ElasticNetFit {
    let mut beta = select(path, selection);
    if lambda2 != 0.0 {
        let r = (1.0 + lambda2).sqrt();
        beta.iter_mut().for_each(|b| *b *= r);
    }
    let (coefficients, intercept) = prob.unstandardize(&beta);
    ElasticNetFit {
        coefficients,
        intercept,
        standardized: beta,
        lambda2,
        path_selection: selection,
        warnings: path.warnings.clone(),
    }
}
