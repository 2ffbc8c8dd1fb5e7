use std::io::Write;

use ndarray::{s, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::elastic_net::{ElasticNetConfig, PathSelection};
use super::lars::{lars_core, GramAccess};
use super::{standardize, GramSystem};

/// Path fractions tried by cross-validation: 0.05, 0.10, ..., 1.0.
pub const FRACTION_GRID: [f64; 20] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90,
    0.95, 1.00,
];

/// CV errors within this fraction of the response variance count as zero.
const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub lambda2: f64,
    pub fraction: f64,
    /// Mean over folds of the fold mean squared prediction error.
    pub mean_error: f64,
    pub fold_errors: Vec<f64>,
    /// False when skipped by early exit.
    pub evaluated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda2: f64,
    pub fraction: f64,
    pub mean_error: f64,
    pub noise_floor: f64,
    pub table: Vec<CvRow>,
}

impl CvResult {
    /// `base` with the selected ridge weight and path fraction.
    pub fn apply(&self, base: &ElasticNetConfig) -> ElasticNetConfig {
        ElasticNetConfig {
            lambda2: self.lambda2,
            path_selection: PathSelection::L1Fraction(self.fraction),
            ..base.clone()
        }
    }

    /// Columns: lambda2, s, mean_error, then one column per fold.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let folds = self.table.first().map_or(0, |r| r.fold_errors.len());
        let mut header = vec!["lambda2".to_string(), "s".to_string(), "mean_error".to_string()];
        header.extend((1..=folds).map(|k| format!("fold{k}")));
        w.write_record(&header)?;
        for row in &self.table {
            let mut rec = vec![format!("{}", row.lambda2), format!("{:.2}", row.fraction)];
            if row.evaluated {
                rec.push(format!("{:e}", row.mean_error));
                rec.extend(row.fold_errors.iter().map(|e| format!("{e:e}")));
            } else {
                rec.extend(std::iter::repeat_n(String::new(), folds + 1));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Fold {
    train: Vec<usize>,
    test: Vec<usize>,
    normalized: Array2<f64>,
    gram: GramSystem,
    test_rows: Array2<f64>,
}

/// Fold structure and per-fold standardized statistics for a fixed design
/// matrix; reusable across responses.
#[derive(Debug, Clone)]
pub struct CvPlan {
    m: usize,
    n: usize,
    folds: Vec<Fold>,
}

impl CvPlan {
    pub fn new(design: &Array2<f64>, folds: usize, seed: Option<u64>) -> Result<Self> {
        let (m, n) = design.dim();
        if folds < 2 {
            return Err(Error::InvalidArgument(format!("cross-validation needs at least 2 folds, got {folds}")));
        }
        if m < folds {
            return Err(Error::InsufficientSamples { samples: m, folds });
        }
        let mut order: Vec<usize> = (0..m).collect();
        if let Some(seed) = seed {
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        }
        let mut out = Vec::with_capacity(folds);
        for k in 0..folds {
            let (a, b) = (k * m / folds, (k + 1) * m / folds);
            let test: Vec<usize> = order[a..b].to_vec();
            let train: Vec<usize> = order[..a].iter().chain(&order[b..]).copied().collect();
            let train_design = design.select(ndarray::Axis(0), &train);
            let (normalized, means, scales) = standardize(train_design.view());
            let gram = GramSystem::from_standardized(normalized.view(), &vec![0.0; train.len()], &scales);
            let mut test_rows = Array2::zeros((test.len(), n));
            for (r, &i) in test.iter().enumerate() {
                for j in 0..n {
                    if scales[j] > 0.0 {
                        test_rows[[r, j]] = (design[[i, j]] - means[j]) / scales[j];
                    }
                }
            }
            out.push(Fold { train, test, normalized, gram, test_rows });
        }
        Ok(Self { m, n, folds: out })
    }

    pub fn n_samples(&self) -> usize {
        self.m
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    /// Errors for every (lambda2, fraction) pair and the selected pair:
    /// the minimum mean error, ties going to the smaller ridge weight and
    /// then the smaller fraction.
    pub fn run(&self, response: &[f64], cfg: &ElasticNetConfig) -> Result<CvResult> {
        if response.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: response.len() });
        }
        if let Some((i, v)) = response.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { what: "response".into(), index: i, value: *v });
        }
        cfg.validate()?;
        let mut grid = cfg.lambda2_grid.clone();
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let mean = response.iter().sum::<f64>() / self.m as f64;
        let variance = response.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / self.m as f64;
        let floor = NOISE_FLOOR * variance;
        let effective = |e: f64| if e <= floor { 0.0 } else { e };

        let mut table = Vec::with_capacity(grid.len() * FRACTION_GRID.len());
        let mut best: Option<(f64, usize)> = None;
        let mut stop = false;
        for &lambda2 in &grid {
            if stop {
                table.extend(FRACTION_GRID.iter().map(|&fraction| CvRow {
                    lambda2,
                    fraction,
                    mean_error: f64::NAN,
                    fold_errors: vec![],
                    evaluated: false,
                }));
                continue;
            }
            let mut fold_errors = vec![vec![0.0; self.folds.len()]; FRACTION_GRID.len()];
            let rescale = (1.0 + lambda2).sqrt();
            for (k, fold) in self.folds.iter().enumerate() {
                let y_train: Vec<f64> = fold.train.iter().map(|&i| response[i]).collect();
                let offset = y_train.iter().sum::<f64>() / y_train.len() as f64;
                let centered: Vec<f64> = y_train.iter().map(|y| y - offset).collect();
                let xty = fold.normalized.t().dot(&ArrayView1::from(&centered)).to_vec();
                let xty: Vec<f64> = if lambda2 == 0.0 { xty } else { xty.iter().map(|v| v / rescale).collect() };
                let path = lars_core(GramAccess::augmented(&fold.gram.gram, lambda2), &xty, &fold.gram.excluded)?;
                for (fi, &s) in FRACTION_GRID.iter().enumerate() {
                    let beta = path.beta_at_fraction(s);
                    let nz: Vec<(usize, f64)> =
                        beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, b)| (j, b * rescale)).collect();
                    let mut sse = 0.0;
                    for (r, &i) in fold.test.iter().enumerate() {
                        let row = fold.test_rows.slice(s![r, ..]);
                        let pred = offset + nz.iter().map(|&(j, b)| b * row[j]).sum::<f64>();
                        sse += (response[i] - pred).powi(2);
                    }
                    fold_errors[fi][k] = sse / fold.test.len() as f64;
                }
            }
            for (fi, errs) in fold_errors.into_iter().enumerate() {
                let mean_error = errs.iter().sum::<f64>() / errs.len() as f64;
                let idx = table.len();
                if best.map_or(true, |(b, _)| effective(mean_error) < b) {
                    best = Some((effective(mean_error), idx));
                }
                table.push(CvRow { lambda2, fraction: FRACTION_GRID[fi], mean_error, fold_errors: errs, evaluated: true });
            }
            if cfg.early_exit && best.is_some_and(|(b, _)| b == 0.0) {
                stop = true;
            }
        }
        let (_, idx) = best.expect("grid is nonempty");
        let chosen = &table[idx];
        Ok(CvResult {
            lambda2: chosen.lambda2,
            fraction: chosen.fraction,
            mean_error: chosen.mean_error,
            noise_floor: floor,
            table,
        })
    }
}

/// Joint k-fold selection of the ridge weight and the path fraction.
pub fn cross_validate_lambda2(prob: &super::RegressionProblem, cfg: &ElasticNetConfig) -> Result<CvResult> {
    CvPlan::new(prob.design(), cfg.cv_folds, cfg.fold_seed)?.run(prob.response(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::RegressionProblem;
    use rand::Rng;

    #[test]
    fn insufficient_samples() {
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i * 3 + j) as f64);
        let p = RegressionProblem::new(x, vec![1.0; 5]).unwrap();
        let cfg = ElasticNetConfig { cv_folds: 10, ..Default::default() };
        assert_eq!(cross_validate_lambda2(&p, &cfg), Err(Error::InsufficientSamples { samples: 5, folds: 10 }));
    }

    #[test]
    fn constant_response_ties_to_zero_ridge() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((20, 6), |_| rng.random_range(-1.0..1.0));
        let p = RegressionProblem::new(x, vec![3.5; 20]).unwrap();
        let cfg = ElasticNetConfig { early_exit: false, ..Default::default() };
        let cv = cross_validate_lambda2(&p, &cfg).unwrap();
        assert_eq!(cv.lambda2, 0.0);
        assert_eq!(cv.fraction, 0.05);
        let first = cv.table[0].mean_error;
        assert!(cv.table.iter().all(|r| r.evaluated && r.mean_error == first));
    }

    #[test]
    fn early_exit_marks_skipped_rows() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = Array2::from_shape_fn((30, 5), |_| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = x.rows().into_iter().map(|r| 2.0 * r[1] - r[3]).collect();
        let p = RegressionProblem::new(x, y).unwrap();
        let cv = cross_validate_lambda2(&p, &ElasticNetConfig::default()).unwrap();
        assert_eq!(cv.lambda2, 0.0);
        assert_eq!(cv.fraction, 1.0);
        assert!(cv.table.iter().filter(|r| r.lambda2 > 0.0).all(|r| !r.evaluated));
        let full = cross_validate_lambda2(&p, &ElasticNetConfig { early_exit: false, ..Default::default() }).unwrap();
        assert_eq!((full.lambda2, full.fraction), (cv.lambda2, cv.fraction));
        assert!(full.table.iter().all(|r| r.evaluated));
    }

    #[test]
    fn deterministic_folds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((23, 4), |_| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..23).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = RegressionProblem::new(x, y).unwrap();
        let cfg = ElasticNetConfig { cv_folds: 5, fold_seed: Some(4), early_exit: false, ..Default::default() };
        let a = cross_validate_lambda2(&p, &cfg).unwrap();
        let b = cross_validate_lambda2(&p, &cfg).unwrap();
        assert_eq!(a, b);
        let plan = CvPlan::new(p.design(), 5, Some(4)).unwrap();
        let mut seen: Vec<usize> = plan.folds.iter().flat_map(|f| f.test.clone()).collect();
        seen.sort();
        assert_eq!(seen, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn csv_table() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((20, 4), |_| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = RegressionProblem::new(x, y).unwrap();
        let cv = cross_validate_lambda2(&p, &ElasticNetConfig::default()).unwrap();
        let mut buf = Vec::new();
        cv.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lambda2,s,mean_error,fold1,"));
        assert_eq!(text.lines().count(), 1 + 7 * 20);
    }
}
