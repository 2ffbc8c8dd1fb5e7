//! Island-model genetic algorithm over design midpoints.
//!
//! Each island evolves its own subpopulation with binary tournaments under
//! feasibility rules, blend (SBX) crossover and polynomial mutation, and
//! keeps its best individual. Every `migration_interval` generations the
//! islands exchange their best individuals around a ring.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::problems::UncertainProblem;
use crate::surrogate::{worst_case_surrogates, SurrogateConfig, WorstCase};

/// Distribution index of the crossover.
const ETA_CROSSOVER: f64 = 15.0;
/// Distribution index of the mutation.
const ETA_MUTATION: f64 = 20.0;
/// Smallest best-ever improvement that resets the stall counter.
pub const STALL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub islands: usize,
    /// Individuals per island.
    pub subpopulation_size: usize,
    pub generations: usize,
    pub migration_interval: usize,
    /// Fraction of an island sent to its neighbour at each migration.
    pub migration_rate: f64,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub seed: u64,
    /// Stop after this many generations without improvement; `0` disables.
    pub stall_generations: usize,
    /// Worker threads for evaluation.
    pub parallel: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            islands: 4,
            subpopulation_size: 50,
            generations: 100,
            migration_interval: 5,
            migration_rate: 0.1,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            seed: 0,
            stall_generations: 50,
            parallel: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config { field: field.into(), msg });
        if self.islands == 0 {
            return bad("islands", "must be positive".into());
        }
        if self.subpopulation_size < 4 {
            return bad("subpopulation_size", format!("must be at least 4, got {}", self.subpopulation_size));
        }
        if self.generations == 0 {
            return bad("generations", "must be positive".into());
        }
        if self.migration_interval == 0 {
            return bad("migration_interval", "must be positive".into());
        }
        for (field, v) in [
            ("migration_rate", self.migration_rate),
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(field, format!("{v} not in [0, 1]"));
            }
        }
        if self.parallel == 0 {
            return bad("parallel", "must be positive".into());
        }
        Ok(())
    }

    pub fn evaluations_per_generation(&self) -> usize {
        self.islands * self.subpopulation_size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x_c: Vec<f64>,
    pub f_upper: f64,
    pub g_upper: Vec<f64>,
    pub feasible: bool,
    /// Sum of the positive constraint parts.
    pub violation: f64,
}

impl Individual {
    pub fn new(x_c: Vec<f64>, wc: WorstCase) -> Self {
        let violation = wc.g_upper.iter().map(|g| g.max(0.0)).sum();
        let feasible = wc.g_upper.iter().all(|&g| g <= 0.0);
        Self { x_c, f_upper: wc.f_upper, g_upper: wc.g_upper, feasible, violation }
    }
}

/// Feasibility rules: feasible beats infeasible, then smaller `f_upper`
/// (feasible) or smaller violation (infeasible). `Less` means `a` is better.
pub fn compare(a: &Individual, b: &Individual) -> Ordering {
    match (a.feasible, b.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => a.f_upper.total_cmp(&b.f_upper),
        (false, false) => a.violation.total_cmp(&b.violation),
    }
}

/// Binary tournament under the feasibility rules.
pub fn select_parent<'a, R: Rng>(pop: &'a [Individual], rng: &mut R) -> &'a Individual {
    assert!(!pop.is_empty(), "tournament on an empty population");
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    if compare(&pop[b], &pop[a]) == Ordering::Less {
        &pop[b]
    } else {
        &pop[a]
    }
}

/// Ring migration: island `i` sends its best `ceil(rate * size)` individuals
/// to island `i + 1`, where they replace the worst.
pub fn migrate(islands: &mut [Vec<Individual>], rate: f64) {
    let n = islands.len();
    if n < 2 {
        return;
    }
    let emigrants: Vec<Vec<Individual>> = islands
        .iter()
        .map(|pop| {
            let k = ((rate * pop.len() as f64).ceil() as usize).min(pop.len());
            let mut sorted: Vec<&Individual> = pop.iter().collect();
            sorted.sort_by(|a, b| compare(a, b));
            sorted[..k].iter().map(|&i| i.clone()).collect()
        })
        .collect();
    for (i, group) in emigrants.into_iter().enumerate() {
        let target = &mut islands[(i + 1) % n];
        let mut order: Vec<usize> = (0..target.len()).collect();
        order.sort_by(|&a, &b| compare(&target[b], &target[a]));
        for (slot, ind) in order.into_iter().zip(group) {
            target[slot] = ind;
        }
    }
}

/// Anything that maps a design midpoint to its worst case.
pub trait DesignEvaluator: Sync {
    fn evaluate(&self, x_c: &[f64]) -> Result<WorstCase>;
}

impl<F: Fn(&[f64]) -> Result<WorstCase> + Sync> DesignEvaluator for F {
    fn evaluate(&self, x_c: &[f64]) -> Result<WorstCase> {
        self(x_c)
    }
}

/// Worst cases from surrogates of a problem.
pub struct SurrogateEvaluator<'a> {
    pub problem: &'a UncertainProblem,
    pub config: SurrogateConfig,
}

impl DesignEvaluator for SurrogateEvaluator<'_> {
    fn evaluate(&self, x_c: &[f64]) -> Result<WorstCase> {
        Ok(worst_case_surrogates(self.problem, x_c, &self.config)?.worst_case())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best-ever `f_upper` (best-ever least-violating when none is feasible).
    pub best_f_upper: f64,
    pub best_feasible: bool,
    pub mean_f_upper: f64,
    pub feasible_fraction: f64,
    /// Cumulative evaluator calls.
    pub evaluator_calls: usize,
    pub cache_hits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Generations,
    Stall,
    Monitor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRun {
    pub config: GaConfig,
    pub best: Option<Individual>,
    pub trace: Vec<GenerationRecord>,
    pub evaluator_calls: usize,
    pub cache_hits: usize,
    pub generations_run: usize,
    pub stop: StopReason,
}

impl OptimizationRun {
    /// Columns: generation, best_f_upper, mean_f_upper, feasible_fraction,
    /// evaluator_calls.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["generation", "best_f_upper", "mean_f_upper", "feasible_fraction", "evaluator_calls"])?;
        for r in &self.trace {
            w.write_record([
                r.generation.to_string(),
                format!("{:e}", r.best_f_upper),
                format!("{:e}", r.mean_f_upper),
                format!("{}", r.feasible_fraction),
                r.evaluator_calls.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// An evaluator failure together with the run up to that point.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub partial: OptimizationRun,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} evaluator calls)", self.error, self.partial.evaluator_calls)
    }
}

impl std::error::Error for RunFailure {}

/// What a monitor sees after each batch of evaluations.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    pub generation: usize,
    pub best: &'a Individual,
    pub evaluator_calls: usize,
}

/// Minimize `f_upper` subject to `g_upper <= 0` over the box `bounds`.
pub fn optimize(
    bounds: &[Interval],
    cfg: &GaConfig,
    evaluator: &dyn DesignEvaluator,
) -> std::result::Result<OptimizationRun, Box<RunFailure>> {
    optimize_monitored(bounds, cfg, evaluator, &mut |_| false)
}

/// As [`optimize`]; the run stops as soon as `monitor` returns true.
pub fn optimize_monitored(
    bounds: &[Interval],
    cfg: &GaConfig,
    evaluator: &dyn DesignEvaluator,
    monitor: &mut dyn FnMut(&Progress<'_>) -> bool,
) -> std::result::Result<OptimizationRun, Box<RunFailure>> {
    let mut state = State {
        cfg: cfg.clone(),
        cache: HashMap::new(),
        best: None,
        trace: vec![],
        calls: 0,
        hits: 0,
    };
    let fail = |state: &State, error: Error, stop| {
        Box::new(RunFailure { error, partial: state.finish(state.trace.len(), stop) })
    };
    if let Err(e) = cfg.validate() {
        return Err(fail(&state, e, StopReason::Generations));
    }
    if bounds.is_empty() {
        return Err(fail(&state, Error::InvalidArgument("empty design box".into()), StopReason::Generations));
    }
    let mut rngs: Vec<ChaCha8Rng> = (0..cfg.islands)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(i as u64);
            r
        })
        .collect();

    let mut candidates: Vec<Vec<Vec<f64>>> = rngs
        .iter_mut()
        .map(|rng| {
            (0..cfg.subpopulation_size)
                .map(|_| bounds.iter().map(|b| sample(b, rng)).collect())
                .collect()
        })
        .collect();
    let mut islands: Vec<Vec<Individual>> = Vec::new();
    let mut stall = 0;
    for generation in 1..=cfg.generations {
        let before = state.best.as_ref().map(|b| (b.feasible, b.f_upper, b.violation));
        let stopped = match state.evaluate(generation, &candidates, evaluator, monitor) {
            Ok(Some(pops)) => {
                islands = pops;
                false
            }
            Ok(None) => true,
            Err(e) => return Err(fail(&state, e, StopReason::Generations)),
        };
        if stopped {
            return Ok(state.finish(generation - 1, StopReason::Monitor));
        }
        if generation % cfg.migration_interval == 0 {
            migrate(&mut islands, cfg.migration_rate);
        }
        state.record(generation, &islands);
        let improved = match (before, state.best.as_ref()) {
            (None, Some(_)) => true,
            (Some((bf, f, v)), Some(b)) => {
                (b.feasible && !bf) || (b.feasible && b.f_upper < f - STALL_TOLERANCE)
                    || (!b.feasible && b.violation < v - STALL_TOLERANCE)
            }
            _ => false,
        };
        stall = if improved { 0 } else { stall + 1 };
        if cfg.stall_generations > 0 && stall >= cfg.stall_generations {
            return Ok(state.finish(generation, StopReason::Stall));
        }
        if generation == cfg.generations {
            break;
        }
        candidates = islands
            .iter()
            .zip(rngs.iter_mut())
            .map(|(pop, rng)| breed(pop, bounds, cfg, rng))
            .collect();
    }
    Ok(state.finish(cfg.generations, StopReason::Generations))
}

struct State {
    cfg: GaConfig,
    cache: HashMap<Vec<u64>, WorstCase>,
    best: Option<Individual>,
    trace: Vec<GenerationRecord>,
    calls: usize,
    hits: usize,
}

impl State {
    /// Evaluates every candidate through the cache. `None` when the monitor
    /// stopped the run.
    fn evaluate(
        &mut self,
        generation: usize,
        candidates: &[Vec<Vec<f64>>],
        evaluator: &dyn DesignEvaluator,
        monitor: &mut dyn FnMut(&Progress<'_>) -> bool,
    ) -> Result<Option<Vec<Vec<Individual>>>> {
        let key = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
        let mut pending: Vec<&[f64]> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for x in candidates.iter().flatten() {
            let k = key(x);
            if self.cache.contains_key(&k) || !queued.insert(k) {
                self.hits += 1;
            } else {
                pending.push(x);
            }
        }
        for chunk in pending.chunks(self.cfg.parallel) {
            let results = evaluate_chunk(chunk, evaluator);
            for (x, r) in chunk.iter().zip(results) {
                self.calls += 1;
                let wc = r?;
                let ind = Individual::new(x.to_vec(), wc.clone());
                self.offer(&ind);
                self.cache.insert(key(x), wc);
            }
            if let Some(best) = &self.best {
                let p = Progress { generation, best, evaluator_calls: self.calls };
                if monitor(&p) {
                    return Ok(None);
                }
            }
        }
        Ok(Some(
            candidates
                .iter()
                .map(|pop| pop.iter().map(|x| Individual::new(x.clone(), self.cache[&key(x)].clone())).collect())
                .collect(),
        ))
    }

    fn offer(&mut self, ind: &Individual) {
        if self.best.as_ref().is_none_or(|b| compare(ind, b) == Ordering::Less) {
            self.best = Some(ind.clone());
        }
    }

    fn record(&mut self, generation: usize, islands: &[Vec<Individual>]) {
        let all: Vec<&Individual> = islands.iter().flatten().collect();
        let n = all.len() as f64;
        let best = self.best.as_ref().expect("evaluated");
        self.trace.push(GenerationRecord {
            generation,
            best_f_upper: best.f_upper,
            best_feasible: best.feasible,
            mean_f_upper: all.iter().map(|i| i.f_upper).sum::<f64>() / n,
            feasible_fraction: all.iter().filter(|i| i.feasible).count() as f64 / n,
            evaluator_calls: self.calls,
            cache_hits: self.hits,
        });
    }

    fn finish(&self, generations_run: usize, stop: StopReason) -> OptimizationRun {
        OptimizationRun {
            config: self.cfg.clone(),
            best: self.best.clone(),
            trace: self.trace.clone(),
            evaluator_calls: self.calls,
            cache_hits: self.hits,
            generations_run,
            stop,
        }
    }
}

fn evaluate_chunk(chunk: &[&[f64]], evaluator: &dyn DesignEvaluator) -> Vec<Result<WorstCase>> {
    if chunk.len() == 1 {
        return vec![evaluator.evaluate(chunk[0])];
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = chunk.iter().map(|x| s.spawn(move || evaluator.evaluate(x))).collect();
        handles.into_iter().map(|h| h.join().expect("evaluator panicked")).collect()
    })
}

fn sample<R: Rng>(b: &Interval, rng: &mut R) -> f64 {
    if b.is_degenerate() {
        b.lo()
    } else {
        b.lo() + rng.random::<f64>() * b.width()
    }
}

/// Next generation of one island: its best individual plus offspring.
fn breed<R: Rng>(pop: &[Individual], bounds: &[Interval], cfg: &GaConfig, rng: &mut R) -> Vec<Vec<f64>> {
    let elite = pop.iter().min_by(|a, b| compare(a, b)).expect("nonempty");
    let mut next = vec![elite.x_c.clone()];
    while next.len() < pop.len() {
        let p1 = select_parent(pop, rng).x_c.clone();
        let p2 = select_parent(pop, rng).x_c.clone();
        let (mut c1, mut c2) = if rng.random::<f64>() < cfg.crossover_rate {
            crossover(&p1, &p2, bounds, rng)
        } else {
            (p1, p2)
        };
        mutate(&mut c1, bounds, cfg.mutation_rate, rng);
        mutate(&mut c2, bounds, cfg.mutation_rate, rng);
        next.push(c1);
        if next.len() < pop.len() {
            next.push(c2);
        }
    }
    next
}

/// Simulated binary crossover, gene-wise with probability 1/2, clamped.
fn crossover<R: Rng>(a: &[f64], b: &[f64], bounds: &[Interval], rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    for i in 0..a.len() {
        if rng.random::<f64>() >= 0.5 || bounds[i].is_degenerate() {
            continue;
        }
        let u: f64 = rng.random();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (ETA_CROSSOVER + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (ETA_CROSSOVER + 1.0))
        };
        let (x, y) = (a[i], b[i]);
        c1[i] = clamp(0.5 * ((1.0 + beta) * x + (1.0 - beta) * y), &bounds[i]);
        c2[i] = clamp(0.5 * ((1.0 - beta) * x + (1.0 + beta) * y), &bounds[i]);
    }
    (c1, c2)
}

/// Bounded polynomial mutation.
fn mutate<R: Rng>(x: &mut [f64], bounds: &[Interval], rate: f64, rng: &mut R) {
    for (v, b) in x.iter_mut().zip(bounds) {
        if b.is_degenerate() || rng.random::<f64>() >= rate {
            continue;
        }
        let (lo, hi) = (b.lo(), b.hi());
        let w = hi - lo;
        let d1 = (*v - lo) / w;
        let d2 = (hi - *v) / w;
        let u: f64 = rng.random();
        let p = 1.0 / (ETA_MUTATION + 1.0);
        let dq = if u < 0.5 {
            let t = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(ETA_MUTATION + 1.0);
            t.powf(p) - 1.0
        } else {
            let t = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(ETA_MUTATION + 1.0);
            1.0 - t.powf(p)
        };
        *v = clamp(*v + dq * w, b);
    }
}

fn clamp(v: f64, b: &Interval) -> f64 {
    v.clamp(b.lo(), b.hi())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::sphere_problem;

    fn ind(f: f64, g: &[f64]) -> Individual {
        Individual::new(vec![f], WorstCase { f_upper: f, g_upper: g.to_vec() })
    }

    #[test]
    fn individual_flags() {
        let a = ind(1.0, &[-1.0, 0.0]);
        assert!(a.feasible);
        assert_eq!(a.violation, 0.0);
        let b = ind(1.0, &[0.5, -2.0, 0.25]);
        assert!(!b.feasible);
        assert_eq!(b.violation, 0.75);
    }

    #[test]
    fn tournament_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let feasible_vs_not = [ind(10.0, &[-1.0]), ind(1.0, &[1.0])];
        assert_eq!(compare(&feasible_vs_not[0], &feasible_vs_not[1]), Ordering::Less);
        let both = [ind(3.0, &[]), ind(5.0, &[])];
        assert_eq!(compare(&both[0], &both[1]), Ordering::Less);
        let infeasible = [ind(0.0, &[0.1]), ind(0.0, &[0.7])];
        assert_eq!(compare(&infeasible[0], &infeasible[1]), Ordering::Less);
        // a tournament between distinct draws returns the better one
        let mut wins = 0;
        for _ in 0..200 {
            let w = select_parent(&both, &mut rng);
            if w.f_upper == 3.0 {
                wins += 1;
            }
        }
        assert!(wins > 120, "{wins}");
    }

    #[test]
    fn migration_examples() {
        let a: Vec<Individual> = (0..4).map(|i| ind(i as f64, &[])).collect();
        let b: Vec<Individual> = (10..14).map(|i| ind(i as f64, &[])).collect();
        let mut islands = vec![a.clone(), b.clone()];
        migrate(&mut islands, 0.0);
        assert_eq!(islands, vec![a.clone(), b.clone()]);
        let mut single = vec![a.clone()];
        migrate(&mut single, 1.0);
        assert_eq!(single, vec![a.clone()]);
        let mut islands = vec![a.clone(), b.clone()];
        migrate(&mut islands, 0.25);
        // best of A (0) replaces worst of B (13); best of B (10) replaces worst of A (3)
        assert_eq!(islands[1].iter().map(|i| i.f_upper).collect::<Vec<_>>(), vec![10.0, 11.0, 12.0, 0.0]);
        assert_eq!(islands[0].iter().map(|i| i.f_upper).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0, 10.0]);
    }

    fn sphere_eval(x: &[f64]) -> Result<WorstCase> {
        Ok(WorstCase { f_upper: x.iter().map(|v| v * v).sum(), g_upper: vec![] })
    }

    #[test]
    fn sphere_converges() {
        let p = sphere_problem();
        let cfg = GaConfig { islands: 4, subpopulation_size: 50, generations: 100, seed: 3, ..Default::default() };
        let ev = SurrogateEvaluator { problem: &p, config: SurrogateConfig::new(10) };
        let run = optimize(&p.shrunk_bounds(), &cfg, &ev).unwrap();
        let best = run.best.unwrap();
        assert!(best.f_upper <= 1e-3, "{best:?}");
        assert_eq!(run.evaluator_calls + run.cache_hits, 200 * run.generations_run);
    }

    #[test]
    fn deterministic_and_elitist() {
        let bounds = vec![Interval::new(-5.0, 5.0).unwrap(); 3];
        let cfg = GaConfig { subpopulation_size: 10, generations: 30, seed: 9, ..Default::default() };
        let a = optimize(&bounds, &cfg, &sphere_eval).unwrap();
        let b = optimize(&bounds, &cfg, &sphere_eval).unwrap();
        assert_eq!(a, b);
        let par = optimize(&bounds, &GaConfig { parallel: 3, ..cfg.clone() }, &sphere_eval).unwrap();
        assert_eq!(a.trace, par.trace);
        for w in a.trace.windows(2) {
            assert!(w[1].best_f_upper <= w[0].best_f_upper);
        }
        assert_eq!(a.evaluator_calls + a.cache_hits, 40 * a.generations_run);
        assert!(a.cache_hits > 0);
        let mut buf = Vec::new();
        a.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("generation,best_f_upper,mean_f_upper,feasible_fraction,evaluator_calls\n"));
        assert_eq!(text.lines().count(), 1 + a.trace.len());
    }

    #[test]
    fn constrained_prefers_feasible() {
        // minimize x subject to 1 - x <= 0 on [-3, 3]
        let bounds = vec![Interval::new(-3.0, 3.0).unwrap()];
        let ev = |x: &[f64]| Ok(WorstCase { f_upper: x[0], g_upper: vec![1.0 - x[0]] });
        let cfg = GaConfig { subpopulation_size: 20, generations: 40, seed: 1, ..Default::default() };
        let best = optimize(&bounds, &cfg, &ev).unwrap().best.unwrap();
        assert!(best.feasible);
        assert!((best.x_c[0] - 1.0).abs() < 1e-2, "{best:?}");
    }

    #[test]
    fn failure_keeps_partial_trace() {
        let bounds = vec![Interval::new(0.0, 1.0).unwrap()];
        let count = std::sync::atomic::AtomicUsize::new(0);
        let ev = |x: &[f64]| {
            if count.fetch_add(1, std::sync::atomic::Ordering::SeqCst) >= 25 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(WorstCase { f_upper: x[0], g_upper: vec![] })
            }
        };
        let cfg = GaConfig { islands: 1, subpopulation_size: 10, generations: 10, seed: 2, ..Default::default() };
        let err = optimize(&bounds, &cfg, &ev).unwrap_err();
        assert_eq!(err.error, Error::InvalidArgument("boom".into()));
        assert!(!err.partial.trace.is_empty());
        assert!(err.partial.trace.last().unwrap().evaluator_calls <= 25);
        // the failing call is counted
        assert_eq!(err.partial.evaluator_calls, 26);
    }

    #[test]
    fn monitor_stops_early() {
        let bounds = vec![Interval::new(-5.0, 5.0).unwrap(); 2];
        let cfg = GaConfig { subpopulation_size: 10, generations: 50, seed: 4, ..Default::default() };
        let run = optimize_monitored(&bounds, &cfg, &sphere_eval, &mut |p| p.evaluator_calls >= 7).unwrap();
        assert_eq!(run.stop, StopReason::Monitor);
        assert_eq!(run.evaluator_calls, 7);
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        assert!(GaConfig { subpopulation_size: 3, ..Default::default() }.validate().is_err());
        assert!(GaConfig { mutation_rate: 1.5, ..Default::default() }.validate().is_err());
        assert!(GaConfig { islands: 0, ..Default::default() }.validate().is_err());
        assert_eq!(GaConfig { islands: 4, subpopulation_size: 300, ..Default::default() }.evaluations_per_generation(), 1200);
    }

    #[test]
    fn children_stay_in_bounds() {
        let bounds = vec![Interval::new(1.0, 2.0).unwrap(), Interval::point(7.0), Interval::new(-1.0, 0.0).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let a: Vec<f64> = bounds.iter().map(|b| sample(b, &mut rng)).collect();
            let b: Vec<f64> = bounds.iter().map(|b| sample(b, &mut rng)).collect();
            let (mut c1, mut c2) = crossover(&a, &b, &bounds, &mut rng);
            mutate(&mut c1, &bounds, 1.0, &mut rng);
            mutate(&mut c2, &bounds, 0.5, &mut rng);
            for c in [&c1, &c2] {
                for (v, iv) in c.iter().zip(&bounds) {
                    assert!(iv.contains(*v), "{v} {iv}");
                }
            }
        }
    }
}
