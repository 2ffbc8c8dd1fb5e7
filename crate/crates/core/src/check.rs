//! Acceptance checks, one function per criterion. Shared by the acceptance
//! test target and the `check` command.

use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{build_index_set, Dictionary};
use crate::ga::{optimize_monitored, GaConfig, Progress, SurrogateEvaluator};
use crate::interval::{Interval, UncertainBox};
use crate::oracle::{
    chebyshev_coefficients_quadrature, elastic_net_cd, scan_box_max, scan_problem, significant, three_hump_reference,
    ScanConfig,
};
use crate::problems::{pressure_vessel_problem, three_hump_problem, UncertainProblem};
use crate::regression::{augmented_design, elastic_net_path, lars_lasso_path, RegressionProblem, DEFAULT_LAMBDA2_GRID};
use crate::report::{cmd_optimize, RunConfig, SIGNIFICANCE};
use crate::surrogate::{build_qsrs, worst_case_surrogates, ChebyshevModel, FitReport, SurrogateConfig};
use crate::Result;

/// Published pressure-vessel worst-case cost.
pub const VESSEL_TARGET: f64 = 4.6315e4;
/// Published pressure-vessel midpoint.
pub const VESSEL_MIDPOINT: [f64; 4] = [2.2254, 1.2458, 93.4970, 100.2317];
/// Published worst-case constraint values at [`VESSEL_MIDPOINT`].
pub const VESSEL_CONSTRAINTS: [f64; 4] = [-0.3190, -0.2529, -4.8606e6, -139.6683];
/// Relative slack for comparisons that are exact in real arithmetic.
pub const ROUNDING: f64 = 1e-12;
/// Seeds of the optimization criteria.
pub const SEEDS: [u64; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
/// Passing seeds required out of [`SEEDS`].
pub const REQUIRED_PASSES: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {}: {} ({:.2} s) {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

fn timed(id: u8, limit: Option<Duration>, body: impl FnOnce() -> Result<(bool, String)>) -> CriterionOutcome {
    let start = Instant::now();
    let (ok, mut detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    let elapsed = start.elapsed();
    let mut passed = ok;
    if let Some(l) = limit {
        if elapsed > l {
            passed = false;
            detail += &format!("; runtime over {} s", l.as_secs());
        }
    }
    CriterionOutcome { id, passed, detail, elapsed }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Cubic `x^3 + 2x` on `[-1, 1]` with 30 samples.
pub fn criterion_1() -> CriterionOutcome {
    timed(1, Some(Duration::from_secs(1)), || {
        let bx = UncertainBox::canonical(1);
        let f = |x: &[f64]| x[0].powi(3) + 2.0 * x[0];
        let model = build_qsrs(f, &bx, 30)?;
        let beta = [model.coefficient_of(&[0]), model.coefficient_of(&[1]), model.coefficient_of(&[3])];
        let bound = model.interval_bound();
        let scan = ScanConfig::with_points(201);
        let hi = scan_box_max(f, &bx, &scan)?.0;
        let lo = -scan_box_max(|x: &[f64]| -f(x), &bx, &scan)?.0;
        let ok = close(beta[0], 0.0, 1e-6)
            && close(beta[1], 2.75, 1e-6)
            && close(beta[2], 0.25, 1e-6)
            && close(bound.lo(), -3.0, 1e-6)
            && close(bound.hi(), 3.0, 1e-6)
            && close(lo, -3.0, 1e-6)
            && close(hi, 3.0, 1e-6);
        Ok((ok, format!("beta = {beta:?}, bound = {bound}, scanned range = [{lo}, {hi}]")))
    })
}

fn booth(x: &[f64]) -> f64 {
    (x[0] + 2.0 * x[1] - 7.0).powi(2) + (2.0 * x[0] + x[1] - 5.0).powi(2)
}

/// Sparsity of the quadratic demo: quadrature and fitted supports.
pub fn criterion_2() -> CriterionOutcome {
    timed(2, Some(Duration::from_secs(5)), || {
        let bx = UncertainBox::new(vec![Interval::new(-10.0, 10.0)?; 2])?;
        let index_set = build_index_set(2, 30);
        let quad = chebyshev_coefficients_quadrature(booth, &bx, &index_set, 16)?;
        let mut q_support: Vec<Vec<u32>> =
            significant(&quad, SIGNIFICANCE).into_iter().map(|i| index_set[i].degrees().to_vec()).collect();
        q_support.sort();
        let expected: Vec<Vec<u32>> = vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![2, 0]];

        let model = build_qsrs(booth, &bx, 30)?;
        let coeffs = model.coefficients();
        let mut f_support: Vec<Vec<u32>> = significant(coeffs, SIGNIFICANCE)
            .into_iter()
            .map(|i| model.dictionary().index_set()[i].degrees().to_vec())
            .collect();
        f_support.sort();
        let mut worst = 0.0f64;
        for (atom, q) in index_set.iter().zip(&quad) {
            worst = worst.max((model.coefficient_of(atom.degrees()) - q).abs());
        }
        // atoms outside the quadrature set must vanish as well
        for (atom, c) in model.dictionary().index_set().iter().zip(coeffs) {
            if !index_set.contains(atom) {
                worst = worst.max(c.abs());
            }
        }
        let ok = q_support == expected && f_support == expected && worst <= 1e-5;
        Ok((ok, format!("{} significant coefficients, fitted support {:?}, max coefficient gap {worst:.3e}", q_support.len(), f_support)))
    })
}

/// Pressure-vessel constraint bounds at the published midpoint.
pub fn criterion_3() -> CriterionOutcome {
    timed(3, Some(Duration::from_secs(30)), || {
        let p = pressure_vessel_problem();
        let scan = scan_problem(&p, &VESSEL_MIDPOINT, &ScanConfig::default())?;
        let set = worst_case_surrogates(&p, &VESSEL_MIDPOINT, &SurrogateConfig::new(100))?;
        let mut ok = true;
        let mut parts = vec![];
        for k in 0..4 {
            let s = scan.maxima[k + 1];
            let q = set.bounds[k + 1].hi();
            let e = VESSEL_CONSTRAINTS[k];
            let rel_scan = ((s - e) / e).abs();
            let rel_q = (q - s) / s.abs();
            // no directed rounding: exact bounds may land a few ulps under the scan
            ok &= rel_scan <= 1e-3 && q >= s - ROUNDING * s.abs() && rel_q <= 0.01;
            parts.push(format!("g{}: scan {s:.6e} (rel {rel_scan:.1e}), qsrs {q:.6e} (rel {rel_q:.1e})", k + 1));
        }
        Ok((ok, parts.join(", ")))
    })
}

/// Outcome of one seed of an optimization criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub passed: bool,
    pub f_upper: Option<f64>,
    pub feasible: bool,
    pub elapsed: Duration,
    pub note: String,
}

/// Runs the preset GA of `cfg` for one seed. `decided` sees the best design
/// after each batch and returns true once the seed can no longer pass; the
/// run also stops when `limit` is exceeded.
fn run_seed(
    cfg: &RunConfig,
    problem: &UncertainProblem,
    seed: u64,
    limit: Duration,
    decided: &dyn Fn(&Progress<'_>) -> bool,
) -> (Option<crate::ga::Individual>, Duration, String) {
    let ga = GaConfig { seed, ..cfg.ga.clone() };
    let ev = SurrogateEvaluator { problem, config: cfg.surrogate() };
    let start = Instant::now();
    let mut note = String::new();
    let mut monitor = |p: &Progress<'_>| {
        if start.elapsed() > limit {
            note = format!("stopped at {} s after {} calls", limit.as_secs(), p.evaluator_calls);
            true
        } else if decided(p) {
            note = format!("decided after {} calls", p.evaluator_calls);
            true
        } else {
            false
        }
    };
    let run = optimize_monitored(&problem.shrunk_bounds(), &ga, &ev, &mut monitor);
    let elapsed = start.elapsed();
    match run {
        Ok(r) => (r.best, elapsed, note),
        Err(f) => (f.partial.best, elapsed, format!("error: {}", f.error)),
    }
}

fn seeds_outcome(id: u8, seeds: &[SeedOutcome], total: Duration) -> CriterionOutcome {
    let passes = seeds.iter().filter(|s| s.passed).count();
    let per_seed: Vec<String> = seeds
        .iter()
        .map(|s| {
            let f = s.f_upper.map_or("none".to_string(), |f| format!("{f:.6e}"));
            let note = if s.note.is_empty() { String::new() } else { format!(", {}", s.note) };
            format!("seed {} {} f_upper {f} feasible {} {:.1} s{note}", s.seed, if s.passed { "ok" } else { "no" }, s.feasible, s.elapsed.as_secs_f64())
        })
        .collect();
    CriterionOutcome {
        id,
        passed: passes >= REQUIRED_PASSES,
        detail: format!("{passes} of {} seeds run passed, {} needed [{}]", seeds.len(), REQUIRED_PASSES, per_seed.join("; ")),
        elapsed: total,
    }
}

/// Runs seeds in order until the required passes are reached or can no
/// longer be reached.
fn seed_sweep(mut one: impl FnMut(u64) -> SeedOutcome) -> Vec<SeedOutcome> {
    let mut out: Vec<SeedOutcome> = vec![];
    for &seed in &SEEDS {
        let passes = out.iter().filter(|s| s.passed).count();
        let fails = out.len() - passes;
        if passes >= REQUIRED_PASSES || fails > SEEDS.len() - REQUIRED_PASSES {
            break;
        }
        out.push(one(seed));
    }
    out
}

/// Pressure-vessel optimization with the preset budget against the
/// published cost, within 1% and feasible, under 10 minutes per seed.
pub fn criterion_4() -> CriterionOutcome {
    let start = Instant::now();
    let cfg = RunConfig::preset("pressure-vessel");
    let problem = pressure_vessel_problem();
    let limit = Duration::from_secs(600);
    let floor = VESSEL_TARGET * 0.99;
    let seeds = seed_sweep(|seed| {
        // the best-ever design only improves, so a feasible design below the
        // 1% band settles the seed
        let decided = |p: &Progress<'_>| p.best.feasible && p.best.f_upper < floor;
        let (best, elapsed, note) = run_seed(&cfg, &problem, seed, limit, &decided);
        let f = best.as_ref().map(|b| b.f_upper);
        let feasible = best.as_ref().is_some_and(|b| b.feasible && b.g_upper.iter().all(|g| *g <= 0.0));
        let within = f.is_some_and(|f| ((f - VESSEL_TARGET) / VESSEL_TARGET).abs() <= 0.01);
        let passed = within && feasible && elapsed <= limit && !note.starts_with("error");
        SeedOutcome { seed, passed, f_upper: f, feasible, elapsed, note }
    });
    seeds_outcome(4, &seeds, start.elapsed())
}

/// As-printed Three-Hump with the preset budget against the frozen
/// reference optimum, within 1%, under 2 minutes per seed.
pub fn criterion_5() -> CriterionOutcome {
    let start = Instant::now();
    let cfg = RunConfig::preset("three-hump");
    let problem = three_hump_problem(false);
    let reference = three_hump_reference();
    let limit = Duration::from_secs(120);
    let seeds = seed_sweep(|seed| {
        let (best, elapsed, note) = run_seed(&cfg, &problem, seed, limit, &|_| false);
        let f = best.as_ref().map(|b| b.f_upper);
        let within = f.is_some_and(|f| (f - reference.f_max).abs() <= 0.01 * reference.f_max.abs());
        let passed = within && elapsed <= limit && note.is_empty();
        SeedOutcome { seed, passed, f_upper: f, feasible: best.is_some_and(|b| b.feasible), elapsed, note }
    });
    let mut o = seeds_outcome(5, &seeds, start.elapsed());
    o.detail = format!("reference f_max {:.6e}; {}", reference.f_max, o.detail);
    o
}

/// Budget statements and evaluator-call accounting of optimize reports.
pub fn criterion_6() -> CriterionOutcome {
    timed(6, None, || {
        let mut ok = true;
        let mut parts = vec![];
        for (name, line) in [
            ("three-hump", "sampling points per iteration: 30, basis functions: 90"),
            ("pressure-vessel", "sampling points per iteration: 100, basis functions: 300"),
        ] {
            // preset surrogate budget; a small GA keeps the accounting run short
            let mut cfg = RunConfig::preset(name);
            cfg.ga.subpopulation_size = 4;
            cfg.ga.generations = 2;
            cfg.seeds = vec![3];
            let report = cmd_optimize(&cfg).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
            let text = report.render();
            let s = &report.seeds[0];
            let budget = cfg.ga.islands * cfg.ga.subpopulation_size * s.run.generations_run;
            let last = s.run.trace.last().map_or(0, |t| t.evaluator_calls);
            let balanced = s.run.evaluator_calls == budget - s.run.cache_hits && last == s.run.evaluator_calls;
            ok &= text.contains(line) && balanced;
            parts.push(format!(
                "{name}: '{}', calls {} = {} - {} hits",
                report.budget_line(),
                s.run.evaluator_calls,
                budget,
                s.run.cache_hits
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

fn random_regression(rng: &mut ChaCha8Rng) -> Result<RegressionProblem> {
    let m = rng.random_range(4..=20);
    let n = rng.random_range(2..=15);
    let x = Array2::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0));
    let y = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    RegressionProblem::new(x, y)
}

/// Elastic net through the augmented LASSO against coordinate descent,
/// the augmented Gram identity, and the ridge-free path.
pub fn criterion_7() -> CriterionOutcome {
    timed(7, Some(Duration::from_secs(30)), || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut cd_gap, mut gram_gap, mut compared) = (0.0f64, 0.0f64, 0);
        let mut lasso_equal = true;
        for inst in 0..50 {
            let prob = random_regression(&mut rng)?;
            let lambda2: f64 = DEFAULT_LAMBDA2_GRID[inst % DEFAULT_LAMBDA2_GRID.len()];
            let phi = prob.normalized_design();
            let n = prob.n_atoms();

            let (xs, _) = augmented_design(&prob, lambda2);
            let explicit = xs.t().dot(&xs);
            let gs = prob.gram_system();
            let stored = gs.augmented(lambda2).gram;
            let formula = (phi.t().dot(phi) + Array2::<f64>::eye(n) * lambda2) / (1.0 + lambda2);
            for ((a, b), c) in explicit.iter().zip(stored.iter()).zip(formula.iter()) {
                gram_gap = gram_gap.max((a - c).abs()).max((b - c).abs());
            }

            let path = elastic_net_path(&gs, lambda2)?;
            if lambda2 == 0.0 {
                lasso_equal &= path == lars_lasso_path(&prob)?;
            }
            let root = (1.0 + lambda2).sqrt();
            let top = path.steps.first().map_or(0.0, |s| s.lambda1);
            let k = path.steps.len();
            let mut picks = vec![k / 4, k / 2, (3 * k) / 4];
            picks.dedup();
            for &i in &picks {
                let step = &path.steps[i];
                if step.lambda1 <= 1e-3 * top {
                    continue;
                }
                let naive =
                    elastic_net_cd(phi, prob.centered_response(), step.lambda1 * root, lambda2, 1e-15, 1_000_000);
                for (b, c) in step.beta.iter().zip(&naive) {
                    cd_gap = cd_gap.max((b - root * c).abs());
                }
                compared += 1;
            }
        }
        let ok = cd_gap <= 1e-6 && gram_gap <= 1e-10 && lasso_equal && compared > 0;
        Ok((
            ok,
            format!(
                "50 instances, {compared} breakpoints: max CD gap {cd_gap:.3e}, max Gram gap {gram_gap:.3e}, zero-ridge path identical: {lasso_equal}"
            ),
        ))
    })
}

fn grid_points(d: usize) -> Vec<Vec<f64>> {
    let per = match d {
        1 => 1001,
        2 => 101,
        _ => 31,
    };
    let axis: Vec<f64> = (0..per).map(|i| -1.0 + 2.0 * i as f64 / (per - 1) as f64).collect();
    let mut pts = vec![vec![]];
    for _ in 0..d {
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    pts
}

/// A random sparse model over a random box.
pub fn random_model(rng: &mut ChaCha8Rng) -> Result<ChebyshevModel> {
    let d = rng.random_range(1..=3);
    let intervals = (0..d)
        .map(|_| {
            let lo = rng.random_range(-10.0..10.0);
            Interval::new(lo, lo + rng.random_range(0.1..5.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rng.random_range(2..=40);
    let dict = Dictionary::graded(UncertainBox::new(intervals)?, n)?;
    let coeffs: Vec<f64> = (0..n)
        .map(|i| if i == 0 || rng.random_bool(0.3) { rng.random_range(-5.0..5.0) } else { 0.0 })
        .collect();
    let report = FitReport {
        lambda2: 0.0,
        fraction: 1.0,
        selected_atoms: coeffs[1..].iter().filter(|c| **c != 0.0).count(),
        training_residual: 0.0,
        cv_error: 0.0,
        samples: 0,
        warnings: vec![],
    };
    ChebyshevModel::new(dict, coeffs, report)
}

/// Interval bounds of random models contain every grid value.
pub fn criterion_8() -> CriterionOutcome {
    timed(8, Some(Duration::from_secs(30)), || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut violations, mut points) = (0usize, 0usize);
        for _ in 0..100 {
            let model = random_model(&mut rng)?;
            let bound = model.interval_bound();
            let bx = model.bounding_box();
            for u in grid_points(bx.dimension()) {
                let x: Vec<f64> = u.iter().zip(bx.intervals()).map(|(u, iv)| iv.midpoint() + u * iv.half_width()).collect();
                let v = model.predict(&x)?;
                points += 1;
                if v < bound.lo() - 1e-9 || v > bound.hi() + 1e-9 {
                    violations += 1;
                }
            }
        }
        Ok((violations == 0, format!("100 models, {points} grid values, {violations} violations")))
    })
}

/// Criteria 1-3 and 6-8; `full` adds the optimization runs 4 and 5.
pub fn run_all(full: bool, report: &mut dyn FnMut(&CriterionOutcome)) -> Vec<CriterionOutcome> {
    let mut checks: Vec<fn() -> CriterionOutcome> = vec![criterion_1, criterion_2, criterion_3];
    if full {
        checks.push(criterion_4);
        checks.push(criterion_5);
    }
    checks.extend([criterion_6 as fn() -> CriterionOutcome, criterion_7, criterion_8]);
    checks
        .into_iter()
        .map(|c| {
            let o = c();
            report(&o);
            o
        })
        .collect()
}
