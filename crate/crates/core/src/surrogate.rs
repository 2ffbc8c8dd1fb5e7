//! Quasi-sparse response surfaces: uniform-design samples, a graded
//! Chebyshev dictionary with three atoms per sample, an elastic-net fit
//! selected by cross-validation, and the analytic range bound.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::chebyshev::{build_index_set, map_to_canonical, Dictionary, MultiIndex};
use crate::design::cached_plan;
use crate::error::{Error, Result};
use crate::interval::{chebyshev_coefficient_bound, Interval, UncertainBox};
use crate::problems::UncertainProblem;
use crate::regression::{elastic_net_beta, standardize, unstandardize, CvPlan, ElasticNetConfig, PathSelection};

/// Dictionary size per sample point.
pub const ATOMS_PER_SAMPLE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    /// Samples per surrogate.
    pub m: usize,
    /// Dictionary size; `ATOMS_PER_SAMPLE * m` when absent.
    pub n_atoms: Option<usize>,
    pub regression: ElasticNetConfig,
}

impl SurrogateConfig {
    pub fn new(m: usize) -> Self {
        let regression = ElasticNetConfig { cv_folds: ElasticNetConfig::default_folds(m), ..Default::default() };
        Self { m, n_atoms: None, regression }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms.unwrap_or(ATOMS_PER_SAMPLE * self.m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Config { field: "m".into(), msg: format!("need at least 2 samples, got {}", self.m) });
        }
        if self.n_atoms() == 0 {
            return Err(Error::Config { field: "n_atoms".into(), msg: "must be positive".into() });
        }
        if self.regression.cv_folds < 2 || self.regression.cv_folds > self.m {
            return Err(Error::Config {
                field: "cv_folds".into(),
                msg: format!("must lie in 2..={}, got {}", self.m, self.regression.cv_folds),
            });
        }
        self.regression.validate()
    }
}

/// How a surrogate was fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub lambda2: f64,
    /// Selected L1 fraction `s`.
    pub fraction: f64,
    /// Non-constant atoms with a nonzero coefficient.
    pub selected_atoms: usize,
    /// `||Phi beta - y||` over the training samples.
    pub training_residual: f64,
    pub cv_error: f64,
    pub samples: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Chebyshev surrogate over a box. `coefficients[0]` multiplies the constant
/// atom and is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevModel {
    dictionary: Dictionary,
    coefficients: Vec<f64>,
    fit_report: FitReport,
}

impl ChebyshevModel {
    pub fn new(dictionary: Dictionary, coefficients: Vec<f64>, fit_report: FitReport) -> Result<Self> {
        if coefficients.len() != dictionary.n_atoms() {
            return Err(Error::DimensionMismatch { expected: dictionary.n_atoms(), got: coefficients.len() });
        }
        Ok(Self { dictionary, coefficients, fit_report })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn fit_report(&self) -> &FitReport {
        &self.fit_report
    }

    pub fn bounding_box(&self) -> &UncertainBox {
        self.dictionary.bounding_box()
    }

    /// Coefficient of the atom with the given degrees, zero if absent.
    pub fn coefficient_of(&self, degrees: &[u32]) -> f64 {
        self.dictionary
            .index_set()
            .iter()
            .position(|i| i.degrees() == degrees)
            .map_or(0.0, |k| self.coefficients[k])
    }

    /// Atoms with nonzero coefficients, in dictionary order.
    pub fn support(&self) -> Vec<(MultiIndex, f64)> {
        self.dictionary
            .index_set()
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (i.clone(), c))
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dictionary.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dictionary.dimension(), got: x.len() });
        }
        let u = map_to_canonical(x, self.dictionary.bounding_box())?;
        Ok(self.predict_canonical(&u))
    }

    /// Value at a point of `[-1, 1]^d`.
    pub fn predict_canonical(&self, u: &[f64]) -> f64 {
        let mut row = vec![0.0; self.dictionary.n_atoms()];
        self.dictionary.row_canonical(u, &mut row);
        row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }

    /// `[beta0 - sum |beta_i|, beta0 + sum |beta_i|]` over the whole box.
    pub fn interval_bound(&self) -> Interval {
        chebyshev_coefficient_bound(self.coefficients[0], &self.coefficients[1..])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and re-validate a serialized model.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ChebyshevModel = serde_json::from_str(text)?;
        let bx = UncertainBox::new(
            raw.dictionary
                .bounding_box()
                .intervals()
                .iter()
                .map(|i| Interval::new(i.lo(), i.hi()))
                .collect::<Result<_>>()?,
        )?;
        let dictionary = Dictionary::with_index_set(bx, raw.dictionary.index_set().to_vec())?;
        Self::new(dictionary, raw.coefficients, raw.fit_report)
    }
}

/// Everything about a fit that depends only on the sample count, the
/// dimension, the dictionary size and the fold layout.
#[derive(Debug)]
struct FitContext {
    index_set: Vec<MultiIndex>,
    canonical: Vec<Vec<f64>>,
    design: Array2<f64>,
    normalized: Array2<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    gram: Array2<f64>,
    excluded: Vec<bool>,
    cv: CvPlan,
}

type ContextKey = (usize, usize, usize, usize, Option<u64>);

fn context(d: usize, cfg: &SurrogateConfig) -> Result<Arc<FitContext>> {
    static CACHE: OnceLock<Mutex<HashMap<ContextKey, Arc<FitContext>>>> = OnceLock::new();
    let key = (cfg.m, d, cfg.n_atoms(), cfg.regression.cv_folds, cfg.regression.fold_seed);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(ctx) = cache.lock().expect("context cache poisoned").get(&key) {
        return Ok(ctx.clone());
    }
    let plan = cached_plan(cfg.m, d)?;
    let canonical: Vec<Vec<f64>> =
        plan.points().iter().map(|p| p.iter().map(|&v| 2.0 * v - 1.0).collect()).collect();
    let index_set = build_index_set(d, cfg.n_atoms());
    let dict = Dictionary::with_index_set(UncertainBox::canonical(d), index_set.clone())?;
    let design = dict.design_matrix_canonical(&canonical);
    let (normalized, means, scales) = standardize(design.view());
    let gram = normalized.t().dot(&normalized);
    let excluded = scales.iter().map(|&s| s == 0.0).collect();
    let cv = CvPlan::new(&design, cfg.regression.cv_folds, cfg.regression.fold_seed)?;
    let ctx = Arc::new(FitContext { index_set, canonical, design, normalized, means, scales, gram, excluded, cv });
    cache.lock().expect("context cache poisoned").insert(key, ctx.clone());
    Ok(ctx)
}

impl FitContext {
    /// Sample locations inside `bx`.
    fn samples(&self, bx: &UncertainBox) -> Vec<Vec<f64>> {
        self.canonical
            .iter()
            .map(|u| u.iter().zip(bx.intervals()).map(|(&v, iv)| iv.midpoint() + v * iv.half_width()).collect())
            .collect()
    }

    fn fit(&self, bx: &UncertainBox, y: &[f64], cfg: &SurrogateConfig) -> Result<ChebyshevModel> {
        if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { what: "evaluator".into(), index: i, value: *v });
        }
        let cv = self.cv.run(y, &cfg.regression)?;
        let offset = y.iter().sum::<f64>() / y.len() as f64;
        let centered: Vec<f64> = y.iter().map(|v| v - offset).collect();
        let xty = self.normalized.t().dot(&ArrayView1::from(&centered)).to_vec();
        let (beta, warnings) =
            elastic_net_beta(&self.gram, &self.excluded, &xty, cv.lambda2, PathSelection::L1Fraction(cv.fraction))?;
        let (mut coefficients, intercept) = unstandardize(&beta, &self.means, &self.scales, offset);
        coefficients[0] += intercept;
        let fitted = self.design.dot(&ArrayView1::from(&coefficients));
        let training_residual = fitted.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let fit_report = FitReport {
            lambda2: cv.lambda2,
            fraction: cv.fraction,
            selected_atoms: coefficients[1..].iter().filter(|&&c| c != 0.0).count(),
            training_residual,
            cv_error: cv.mean_error,
            samples: y.len(),
            warnings,
        };
        let dictionary = Dictionary::with_index_set(bx.clone(), self.index_set.clone())?;
        ChebyshevModel::new(dictionary, coefficients, fit_report)
    }
}

/// Surrogate of `evaluator` over `bx` from `m` uniform-design samples and
/// `3m` atoms.
pub fn build_qsrs<F: Fn(&[f64]) -> f64>(evaluator: F, bx: &UncertainBox, m: usize) -> Result<ChebyshevModel> {
    build_qsrs_with(evaluator, bx, &SurrogateConfig::new(m))
}

pub fn build_qsrs_with<F: Fn(&[f64]) -> f64>(
    evaluator: F,
    bx: &UncertainBox,
    cfg: &SurrogateConfig,
) -> Result<ChebyshevModel> {
    cfg.validate()?;
    if let Some(dim) = bx.intervals().iter().position(Interval::is_degenerate) {
        return Err(Error::DegenerateDimension { dim });
    }
    let ctx = context(bx.dimension(), cfg)?;
    let y: Vec<f64> = ctx.samples(bx).iter().map(|x| evaluator(x)).collect();
    ctx.fit(bx, &y, cfg)
}

/// The uniform-design sample locations `build_qsrs` would use on `bx`.
pub fn sample_points(bx: &UncertainBox, cfg: &SurrogateConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    Ok(context(bx.dimension(), cfg)?.samples(bx))
}

/// Upper bounds of the objective and every constraint over the uncertainty
/// box of one design midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub f_upper: f64,
    pub g_upper: Vec<f64>,
}

/// Surrogates of every response of a problem over one joint box
/// `[x_c - xi, x_c + xi] x [y]`. Zero-width dimensions are frozen at their
/// midpoint and left out of the dictionaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSet {
    pub joint_box: UncertainBox,
    /// Joint-box dimensions covered by the dictionaries.
    pub active: Vec<usize>,
    pub names: Vec<String>,
    /// One model per response; empty when every dimension is frozen.
    pub models: Vec<ChebyshevModel>,
    /// Bound per response (objective first).
    pub bounds: Vec<Interval>,
    /// Fresh response evaluations spent.
    pub samples: usize,
}

impl SurrogateSet {
    pub fn worst_case(&self) -> WorstCase {
        WorstCase { f_upper: self.bounds[0].hi(), g_upper: self.bounds[1..].iter().map(Interval::hi).collect() }
    }

    /// Surrogate value of response `k` at a point of the joint box.
    pub fn predict(&self, k: usize, z: &[f64]) -> Result<f64> {
        if self.models.is_empty() {
            return Ok(self.bounds[k].lo());
        }
        let sub: Vec<f64> = self.active.iter().map(|&i| z[i]).collect();
        self.models[k].predict(&sub)
    }
}

/// Builds one surrogate per response over the joint box at `x_c`, sharing a
/// single sample set.
pub fn worst_case_surrogates(problem: &UncertainProblem, x_c: &[f64], cfg: &SurrogateConfig) -> Result<SurrogateSet> {
    cfg.validate()?;
    let joint_box = problem.joint_box(x_c)?;
    let d = problem.dimension();
    let names = problem.response_names();
    let anchor = joint_box.midpoint();
    let active: Vec<usize> = (0..joint_box.dimension()).filter(|&i| !joint_box.get(i).is_degenerate()).collect();
    if active.is_empty() {
        let bounds = (0..names.len())
            .map(|k| {
                let v = problem.response_unchecked(k, &anchor[..d], &anchor[d..]);
                if v.is_finite() {
                    Ok(Interval::point(v))
                } else {
                    Err(response_error(&names[k], 0, v))
                }
            })
            .collect::<Result<_>>()?;
        return Ok(SurrogateSet { joint_box, active, names, models: vec![], bounds, samples: 1 });
    }
    let sub_box = UncertainBox::new(active.iter().map(|&i| joint_box.get(i)).collect())?;
    let ctx = context(active.len(), cfg)?;
    let points = ctx.samples(&sub_box);
    let mut values = vec![Vec::with_capacity(points.len()); names.len()];
    let mut z = anchor.clone();
    for p in &points {
        for (&i, &v) in active.iter().zip(p) {
            z[i] = v;
        }
        for (k, col) in values.iter_mut().enumerate() {
            col.push(problem.response_unchecked(k, &z[..d], &z[d..]));
        }
    }
    let mut models = Vec::with_capacity(names.len());
    for (name, y) in names.iter().zip(&values) {
        if let Some((j, v)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(response_error(name, j, *v));
        }
        let model = ctx
            .fit(&sub_box, y, cfg)
            .map_err(|e| Error::Response { response: name.clone(), source: Box::new(e) })?;
        models.push(model);
    }
    let bounds = models.iter().map(ChebyshevModel::interval_bound).collect();
    Ok(SurrogateSet { joint_box, active, names, models, bounds, samples: points.len() })
}

fn response_error(name: &str, index: usize, value: f64) -> Error {
    Error::Response { response: name.into(), source: Box::new(Error::NonFinite { what: name.into(), index, value }) }
}

/// `(f_upper, g_upper)` at `x_c` with `m` samples per surrogate.
pub fn worst_case_evaluation(problem: &UncertainProblem, x_c: &[f64], m: usize) -> Result<WorstCase> {
    Ok(worst_case_surrogates(problem, x_c, &SurrogateConfig::new(m))?.worst_case())
}
