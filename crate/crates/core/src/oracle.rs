//! Ground truth independent of the surrogates: grid scans of box maxima, a
//! double-loop reference optimizer, Gauss-Chebyshev coefficients and a
//! coordinate-descent elastic net.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chebyshev::MultiIndex;
use crate::error::{Error, Result};
use crate::ga::{optimize, DesignEvaluator, GaConfig, OptimizationRun};
use crate::interval::UncertainBox;
use crate::problems::UncertainProblem;
use crate::surrogate::WorstCase;

/// Largest problem dimension accepted by the double loop.
pub const DOUBLE_LOOP_MAX_DIMENSION: usize = 4;
/// Default limit on true-function evaluations of one double-loop run.
pub const DOUBLE_LOOP_LIMIT: f64 = 2e11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Grid points per scanned dimension; 201 for up to two scanned
    /// dimensions and 21 beyond when absent.
    pub points_per_dimension: Option<usize>,
    /// Worker threads.
    pub parallel: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { points_per_dimension: None, parallel: 1 }
    }
}

impl ScanConfig {
    pub fn with_points(points: usize) -> Self {
        Self { points_per_dimension: Some(points), ..Default::default() }
    }

    pub fn points_for(&self, scanned_dims: usize) -> usize {
        self.points_per_dimension.unwrap_or(if scanned_dims <= 2 { 201 } else { 21 })
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_dimension.is_some_and(|p| p < 2) {
            return Err(Error::Config { field: "points_per_dimension".into(), msg: "must be at least 2".into() });
        }
        if self.parallel == 0 {
            return Err(Error::Config { field: "parallel".into(), msg: "must be positive".into() });
        }
        Ok(())
    }
}

/// Tensor grid over a box: `p` equispaced points (both ends included) in
/// every nondegenerate dimension, the midpoint in degenerate ones.
struct Grid {
    axes: Vec<Vec<f64>>,
    total: usize,
}

impl Grid {
    fn new(bx: &UncertainBox, p: usize) -> Self {
        let axes: Vec<Vec<f64>> = bx
            .intervals()
            .iter()
            .map(|iv| {
                if iv.is_degenerate() {
                    vec![iv.midpoint()]
                } else {
                    (0..p)
                        .map(|j| if j + 1 == p { iv.hi() } else { iv.lo() + iv.width() * j as f64 / (p - 1) as f64 })
                        .collect()
                }
            })
            .collect();
        let total = axes.iter().map(Vec::len).product();
        Self { axes, total }
    }

    fn point(&self, mut flat: usize, out: &mut [f64]) {
        for (v, axis) in out.iter_mut().zip(&self.axes).rev() {
            *v = axis[flat % axis.len()];
            flat /= axis.len();
        }
    }
}

fn scanned_dims(bx: &UncertainBox) -> usize {
    bx.intervals().iter().filter(|iv| !iv.is_degenerate()).count()
}

/// Maxima of several functions over one grid; the first maximizer wins ties.
fn scan_many<F>(k: usize, bx: &UncertainBox, cfg: &ScanConfig, f: F) -> Result<Vec<(f64, Vec<f64>)>>
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let grid = Grid::new(bx, cfg.points_for(scanned_dims(bx)));
    let d = bx.dimension();
    let run = |range: std::ops::Range<usize>| -> Result<Vec<(f64, usize)>> {
        let mut best = vec![(f64::NEG_INFINITY, usize::MAX); k];
        let mut z = vec![0.0; d];
        for flat in range {
            grid.point(flat, &mut z);
            for (r, b) in best.iter_mut().enumerate() {
                let v = f(r, &z);
                if !v.is_finite() {
                    return Err(Error::NonFiniteAt { what: format!("response {r}"), value: v, point: z.clone() });
                }
                if v > b.0 {
                    *b = (v, flat);
                }
            }
        }
        Ok(best)
    };
    let workers = cfg.parallel.min(grid.total).max(1);
    let parts: Vec<Result<Vec<(f64, usize)>>> = if workers == 1 {
        vec![run(0..grid.total)]
    } else {
        let chunk = grid.total.div_ceil(workers);
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let run = &run;
                    s.spawn(move || run(w * chunk..((w + 1) * chunk).min(grid.total)))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
        })
    };
    let mut best = vec![(f64::NEG_INFINITY, usize::MAX); k];
    for part in parts {
        for (b, p) in best.iter_mut().zip(part?) {
            if p.0 > b.0 {
                *b = p;
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|(v, flat)| {
            let mut z = vec![0.0; d];
            grid.point(flat, &mut z);
            (v, z)
        })
        .collect())
}

/// Maximum of `func` over the grid of `bx` and where it is attained.
pub fn scan_box_max<F: Fn(&[f64]) -> f64 + Sync>(func: F, bx: &UncertainBox, cfg: &ScanConfig) -> Result<(f64, Vec<f64>)> {
    Ok(scan_many(1, bx, cfg, |_, z| func(z))?.remove(0))
}

/// Scanned maxima of every response of a problem over the joint box at
/// `x_c`, objective first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub names: Vec<String>,
    pub maxima: Vec<f64>,
    pub argmax: Vec<Vec<f64>>,
    pub points_per_dimension: usize,
}

impl ScanResult {
    pub fn worst_case(&self) -> WorstCase {
        WorstCase { f_upper: self.maxima[0], g_upper: self.maxima[1..].to_vec() }
    }
}

pub fn scan_problem(problem: &UncertainProblem, x_c: &[f64], cfg: &ScanConfig) -> Result<ScanResult> {
    let bx = problem.joint_box(x_c)?;
    let d = problem.dimension();
    let names = problem.response_names();
    let found = scan_many(names.len(), &bx, cfg, |k, z| problem.response_unchecked(k, &z[..d], &z[d..]))?;
    let (maxima, argmax) = found.into_iter().unzip();
    Ok(ScanResult { names, maxima, argmax, points_per_dimension: cfg.points_for(scanned_dims(&bx)) })
}

/// Scanned minimum and maximum of every response, objective first.
pub fn scan_problem_range(problem: &UncertainProblem, x_c: &[f64], cfg: &ScanConfig) -> Result<Vec<(f64, f64)>> {
    let bx = problem.joint_box(x_c)?;
    let d = problem.dimension();
    let k = 1 + problem.n_constraints();
    let found = scan_many(2 * k, &bx, cfg, |r, z| {
        if r < k {
            problem.response_unchecked(r, &z[..d], &z[d..])
        } else {
            -problem.response_unchecked(r - k, &z[..d], &z[d..])
        }
    })?;
    Ok((0..k).map(|r| (-found[r + k].0, found[r].0)).collect())
}

/// Worst cases by scanning the true responses.
pub struct ScanEvaluator<'a> {
    pub problem: &'a UncertainProblem,
    pub config: ScanConfig,
}

impl DesignEvaluator for ScanEvaluator<'_> {
    fn evaluate(&self, x_c: &[f64]) -> Result<WorstCase> {
        Ok(scan_problem(self.problem, x_c, &self.config)?.worst_case())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptimum {
    pub x_c: Vec<f64>,
    pub f_max: f64,
    pub g_max: Vec<f64>,
    pub feasible: bool,
    pub run: OptimizationRun,
}

/// True-function evaluations a double-loop run may need.
pub fn double_loop_cost(problem: &UncertainProblem, outer: &GaConfig, inner: &ScanConfig) -> f64 {
    let x_c: Vec<f64> = problem.shrunk_bounds().iter().map(|b| b.midpoint()).collect();
    let grid = match problem.joint_box(&x_c) {
        Ok(bx) => {
            let s = scanned_dims(&bx);
            (inner.points_for(s) as f64).powi(s as i32)
        }
        Err(_) => f64::INFINITY,
    };
    outer.evaluations_per_generation() as f64 * outer.generations as f64 * grid * (1 + problem.n_constraints()) as f64
}

/// The min-max problem solved directly: the island GA over midpoints with
/// every worst case taken from a grid scan of the true responses.
pub fn double_loop_reference(problem: &UncertainProblem, outer: &GaConfig, inner: &ScanConfig) -> Result<ReferenceOptimum> {
    double_loop_reference_with_limit(problem, outer, inner, DOUBLE_LOOP_LIMIT)
}

pub fn double_loop_reference_with_limit(
    problem: &UncertainProblem,
    outer: &GaConfig,
    inner: &ScanConfig,
    limit: f64,
) -> Result<ReferenceOptimum> {
    if problem.dimension() > DOUBLE_LOOP_MAX_DIMENSION {
        return Err(Error::InvalidArgument(format!(
            "double loop limited to {DOUBLE_LOOP_MAX_DIMENSION} design variables, got {}",
            problem.dimension()
        )));
    }
    let estimated = double_loop_cost(problem, outer, inner);
    if estimated > limit {
        return Err(Error::Budget { estimated, limit });
    }
    let ev = ScanEvaluator { problem, config: inner.clone() };
    let run = optimize(&problem.shrunk_bounds(), outer, &ev).map_err(|f| f.error)?;
    let best = run.best.clone().expect("at least one evaluation");
    Ok(ReferenceOptimum { x_c: best.x_c, f_max: best.f_upper, g_max: best.g_upper, feasible: best.feasible, run })
}

/// Tensor Gauss-Chebyshev estimate of the Chebyshev coefficients of `func`
/// over `bx`, one per index. Per dimension the weight is `1/N` for degree
/// zero and `2/N` otherwise, with nodes `cos((2j - 1) pi / (2N))`.
pub fn chebyshev_coefficients_quadrature<F: Fn(&[f64]) -> f64>(
    func: F,
    bx: &UncertainBox,
    index_set: &[MultiIndex],
    nodes: usize,
) -> Result<Vec<f64>> {
    let d = bx.dimension();
    if let Some(idx) = index_set.iter().find(|i| i.dimension() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: idx.dimension() });
    }
    let max_degree = index_set.iter().map(MultiIndex::max_degree).max().unwrap_or(0) as usize;
    if nodes <= max_degree {
        return Err(Error::InsufficientNodes { nodes, degree: max_degree });
    }
    let theta: Vec<f64> =
        (1..=nodes).map(|j| (2 * j - 1) as f64 * std::f64::consts::PI / (2 * nodes) as f64).collect();
    // cos(k theta_j) for every degree in use
    let cos_table: Vec<Vec<f64>> =
        (0..=max_degree).map(|k| theta.iter().map(|t| (k as f64 * t).cos()).collect()).collect();
    let total = nodes.pow(d as u32);
    let mut coeffs = vec![0.0; index_set.len()];
    let mut node = vec![0usize; d];
    let mut x = vec![0.0; d];
    for flat in 0..total {
        let mut rest = flat;
        for k in (0..d).rev() {
            node[k] = rest % nodes;
            rest /= nodes;
        }
        for k in 0..d {
            let iv = bx.get(k);
            x[k] = iv.midpoint() + iv.half_width() * theta[node[k]].cos();
        }
        let g = func(&x);
        if !g.is_finite() {
            return Err(Error::NonFiniteAt { what: "quadrature integrand".into(), value: g, point: x.clone() });
        }
        for (c, idx) in coeffs.iter_mut().zip(index_set) {
            let w: f64 = idx.degrees().iter().zip(&node).map(|(&k, &j)| cos_table[k as usize][j]).product();
            *c += g * w;
        }
    }
    for (c, idx) in coeffs.iter_mut().zip(index_set) {
        let norm: f64 = idx.degrees().iter().map(|&k| if k == 0 { 1.0 } else { 2.0 } / nodes as f64).product();
        *c *= norm;
    }
    Ok(coeffs)
}

/// Indices of coefficients above `rel * max|c|`.
pub fn significant(coeffs: &[f64], rel: f64) -> Vec<usize> {
    let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if max == 0.0 {
        return vec![];
    }
    (0..coeffs.len()).filter(|&i| coeffs[i].abs() > rel * max).collect()
}

/// Minimizer of `||y - X b||^2 + lambda1 ||b||_1 + lambda2 ||b||^2` by
/// cyclic coordinate descent (no intercept).
pub fn elastic_net_cd(
    x: &ndarray::Array2<f64>,
    y: &[f64],
    lambda1: f64,
    lambda2: f64,
    tol: f64,
    max_sweeps: usize,
) -> Vec<f64> {
    let (m, n) = x.dim();
    let mut b = vec![0.0; n];
    let mut r = y.to_vec();
    let norms: Vec<f64> = (0..n).map(|j| x.column(j).dot(&x.column(j))).collect();
    for _ in 0..max_sweeps {
        let mut change = 0.0f64;
        for j in 0..n {
            let denom = norms[j] + lambda2;
            if denom == 0.0 {
                continue;
            }
            let col = x.column(j);
            let rho: f64 = (0..m).map(|i| col[i] * r[i]).sum::<f64>() + norms[j] * b[j];
            let new = soft_threshold(rho, lambda1 / 2.0) / denom;
            let delta = new - b[j];
            if delta != 0.0 {
                for i in 0..m {
                    r[i] -= col[i] * delta;
                }
                b[j] = new;
                change = change.max(delta.abs());
            }
        }
        if change < tol {
            break;
        }
    }
    b
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Columns: response, max, then the argmax coordinates `z1..`.
pub fn write_scan_csv<W: Write>(result: &ScanResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = result.argmax.first().map_or(0, Vec::len);
    let mut header = vec!["response".to_string(), "max".to_string()];
    header.extend((1..=d).map(|i| format!("z{i}")));
    w.write_record(&header)?;
    for ((name, v), z) in result.names.iter().zip(&result.maxima).zip(&result.argmax) {
        let mut rec = vec![name.clone(), format!("{v:e}")];
        rec.extend(z.iter().map(|c| format!("{c}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// The frozen reference optimum of the as-printed Three-Hump problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenReference {
    pub problem: String,
    pub x_c: Vec<f64>,
    pub f_max: f64,
    pub outer: GaConfig,
    pub inner: ScanConfig,
    pub points_per_dimension: usize,
    pub generated_by: String,
}

pub fn three_hump_reference() -> FrozenReference {
    serde_json::from_str(include_str!("../data/three_hump_reference.json")).expect("bundled reference parses")
}
