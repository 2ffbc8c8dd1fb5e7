//! Run configuration and the optimize, validate and demo-sparsity reports.
//!
//! A run config is TOML with top-level keys and two tables:
//!
//! ```toml
//! problem = "pressure-vessel"   # built-in name or definition file
//! m = 100                       # samples per surrogate
//! seeds = [1, 2, 3]
//! widths = [0.1, 0.1, 0.1, 0.1] # optional override of the half-widths
//! output_dir = "out"            # optional
//!
//! [ga]
//! subpopulation_size = 300
//! generations = 10
//!
//! [oracle]
//! points_per_dimension = 21
//! ```
//!
//! Missing keys take the preset of the chosen problem.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chebyshev::{build_index_set, MultiIndex};
use crate::error::{Error, Result};
use crate::ga::{optimize_monitored, Individual, OptimizationRun, Progress, RunFailure, SurrogateEvaluator};
use crate::interval::{Interval, UncertainBox};
use crate::oracle::{chebyshev_coefficients_quadrature, scan_problem, scan_problem_range, significant, ScanConfig, ScanResult};
use crate::problems::{resolve, UncertainProblem};
use crate::surrogate::{worst_case_surrogates, SurrogateConfig};

/// Relative threshold for a significant coefficient.
pub const SIGNIFICANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub m: usize,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub ga: crate::ga::GaConfig,
    pub oracle: ScanConfig,
}

impl RunConfig {
    /// Defaults for a problem: three-hump runs m = 30 with 200 per island,
    /// the pressure vessel m = 100 with 300 per island.
    pub fn preset(problem: &str) -> Self {
        let (m, subpopulation_size, generations) = match problem {
            "three-hump" | "three-hump-corrected" => (30, 200, 3),
            "pressure-vessel" => (100, 300, 10),
            "sphere" => (10, 50, 100),
            _ => (30, 100, 20),
        };
        Self {
            problem: problem.to_string(),
            m,
            seeds: vec![1],
            widths: None,
            output_dir: None,
            ga: crate::ga::GaConfig { subpopulation_size, generations, ..Default::default() },
            oracle: ScanConfig::default(),
        }
    }

    /// Parses TOML over the preset of its problem (`problem` falls back to
    /// `default_problem`).
    pub fn from_toml_str(text: &str, default_problem: Option<&str>) -> Result<Self> {
        let cfg_err = |msg: String| Error::Config { field: "config".into(), msg };
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| cfg_err(e.to_string()))?;
        let problem = match table.get("problem") {
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::Config { field: "problem".into(), msg: "must be a string".into() }),
            None => default_problem
                .map(str::to_string)
                .ok_or_else(|| Error::Config { field: "problem".into(), msg: "missing".into() })?,
        };
        let preset = Self::preset(&problem);
        let mut base = toml::Table::try_from(&preset).map_err(|e| cfg_err(e.to_string()))?;
        for (k, v) in table {
            match (base.get_mut(&k), v) {
                (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => dst.extend(src),
                (_, v) => {
                    base.insert(k, v);
                }
            }
        }
        let cfg: Self = toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| {
            let msg = e.message().to_string();
            let field = msg.split('`').nth(1).unwrap_or("config").to_string();
            Error::Config { field, msg }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path, default_problem: Option<&str>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, default_problem)
    }

    /// Config file (if any) over the preset of `problem`, which also
    /// replaces the file's own `problem` key.
    pub fn resolve(path: Option<&Path>, problem: Option<&str>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Config { field: "config".into(), msg: format!("{}: {e}", p.display()) })?,
            None => String::new(),
        };
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config { field: "config".into(), msg: e.to_string() })?;
        if let Some(p) = problem {
            table.insert("problem".into(), toml::Value::String(p.to_string()));
        }
        Self::from_toml_str(&table.to_string(), None)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config { field: "config".into(), msg: e.to_string() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Config { field: "m".into(), msg: format!("need at least 2 samples, got {}", self.m) });
        }
        if self.seeds.is_empty() {
            return Err(Error::Config { field: "seeds".into(), msg: "need at least one seed".into() });
        }
        self.ga.validate()?;
        self.oracle.validate()?;
        self.surrogate().validate()?;
        self.build_problem().map(|_| ())
    }

    pub fn surrogate(&self) -> SurrogateConfig {
        SurrogateConfig::new(self.m)
    }

    /// The problem with any width override applied.
    pub fn build_problem(&self) -> Result<UncertainProblem> {
        let p = resolve(&self.problem)?;
        match &self.widths {
            Some(w) => p.with_widths(w.clone()).map_err(|e| Error::Config { field: "widths".into(), msg: e.to_string() }),
            None => Ok(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub best: Individual,
    /// Scanned maxima at the best midpoint.
    pub validated: ScanResult,
    pub run: OptimizationRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub config: RunConfig,
    pub deterministic: bool,
    pub sampling_points: usize,
    pub basis_functions: usize,
    pub seeds: Vec<SeedReport>,
}

impl OptimizeReport {
    pub fn budget_line(&self) -> String {
        format!("sampling points per iteration: {}, basis functions: {}", self.sampling_points, self.basis_functions)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out += &format!("problem: {}\n", self.config.problem);
        if self.deterministic {
            out += "deterministic mode: zero widths, responses evaluated directly\n";
        } else {
            out += &self.budget_line();
            out += "\n";
        }
        let ga = &self.config.ga;
        for s in &self.seeds {
            let (f, g) = if self.deterministic { ("f", "g") } else { ("f_upper", "g_upper") };
            out += &format!(
                "seed {}: x_c = {:?}, {f} = {:.6e}, {g} = {:?}, feasible = {}\n",
                s.seed, s.best.x_c, s.best.f_upper, s.best.g_upper, s.best.feasible
            );
            if !self.deterministic {
                out += &format!("  scan check: f_max = {:.6e}, g_max = {:?}\n", s.validated.maxima[0], &s.validated.maxima[1..]);
            }
            out += &format!(
                "  evaluator calls: {} = {} islands x {} x {} generations - {} cache hits; sample evaluations: {}\n",
                s.run.evaluator_calls,
                ga.islands,
                ga.subpopulation_size,
                s.run.generations_run,
                s.run.cache_hits,
                s.run.evaluator_calls * self.sampling_points,
            );
        }
        out
    }

    /// One row per seed: seed, f_upper, g1.., x1.., feasible, evaluator_calls, cache_hits.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let (ng, nx) = self.seeds.first().map_or((0, 0), |s| (s.best.g_upper.len(), s.best.x_c.len()));
        let mut header = vec!["seed".to_string(), "f_upper".to_string()];
        header.extend((1..=ng).map(|i| format!("g{i}_upper")));
        header.extend((1..=nx).map(|i| format!("x{i}")));
        header.extend(["feasible", "evaluator_calls", "cache_hits"].map(String::from));
        w.write_record(&header)?;
        for s in &self.seeds {
            let mut rec = vec![s.seed.to_string(), format!("{:e}", s.best.f_upper)];
            rec.extend(s.best.g_upper.iter().map(|g| format!("{g:e}")));
            rec.extend(s.best.x_c.iter().map(|x| format!("{x}")));
            rec.extend([s.best.feasible.to_string(), s.run.evaluator_calls.to_string(), s.run.cache_hits.to_string()]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `report.json`, `summary.csv` and one `trace_seed<N>.csv` per seed.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        self.write_summary_csv(std::fs::File::create(dir.join("summary.csv"))?)?;
        for s in &self.seeds {
            s.run.write_trace_csv(std::fs::File::create(dir.join(format!("trace_seed{}.csv", s.seed)))?)?;
        }
        Ok(())
    }
}

/// Failure of a command: bad configuration or a runtime error.
#[derive(Debug)]
pub enum CommandError {
    Config(Error),
    Runtime { seed: Option<u64>, error: Error, partial: Option<Box<OptimizationRun>> },
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 1,
            CommandError::Runtime { .. } => 2,
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(e) => write!(f, "{e}"),
            CommandError::Runtime { seed, error, partial } => {
                write!(f, "{error}")?;
                if let Some(s) = seed {
                    write!(f, " (seed {s})")?;
                }
                if let Some(p) = partial {
                    write!(f, " after {} generations and {} evaluator calls", p.trace.len(), p.evaluator_calls)?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for CommandError {}

fn runtime(e: Error) -> CommandError {
    CommandError::Runtime { seed: None, error: e, partial: None }
}

/// One seed of [`cmd_optimize`]; `monitor` may stop the GA early.
pub fn optimize_seed(
    cfg: &RunConfig,
    problem: &UncertainProblem,
    seed: u64,
    monitor: &mut dyn FnMut(&Progress<'_>) -> bool,
) -> std::result::Result<SeedReport, CommandError> {
    let ga = crate::ga::GaConfig { seed, ..cfg.ga.clone() };
    let ev = SurrogateEvaluator { problem, config: cfg.surrogate() };
    let run = optimize_monitored(&problem.shrunk_bounds(), &ga, &ev, monitor).map_err(|f: Box<RunFailure>| {
        CommandError::Runtime { seed: Some(seed), error: f.error, partial: Some(Box::new(f.partial)) }
    })?;
    let best = run.best.clone().ok_or_else(|| runtime(Error::InvalidArgument("no individual evaluated".into())))?;
    let validated = scan_problem(problem, &best.x_c, &cfg.oracle).map_err(runtime)?;
    Ok(SeedReport { seed, best, validated, run })
}

/// The island GA over surrogate worst cases, once per seed.
pub fn cmd_optimize(cfg: &RunConfig) -> std::result::Result<OptimizeReport, CommandError> {
    cfg.validate().map_err(CommandError::Config)?;
    let problem = cfg.build_problem().map_err(CommandError::Config)?;
    let deterministic = problem.is_deterministic();
    let seeds = cfg
        .seeds
        .iter()
        .map(|&s| optimize_seed(cfg, &problem, s, &mut |_| false))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let sc = cfg.surrogate();
    let (sampling_points, basis_functions) = if deterministic { (1, 0) } else { (sc.m, sc.n_atoms()) };
    let report = OptimizeReport { config: cfg.clone(), deterministic, sampling_points, basis_functions, seeds };
    if let Some(dir) = &cfg.output_dir {
        report.write_outputs(dir).map_err(runtime)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub response: String,
    pub qsrs_lo: f64,
    pub qsrs_hi: f64,
    pub scan_lo: f64,
    pub scan_hi: f64,
    /// `qsrs_hi - scan_hi`.
    pub abs_gap: f64,
    /// `abs_gap / |scan_hi|`, or `abs_gap` when `scan_hi = 0`.
    pub rel_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub config: RunConfig,
    pub x_c: Vec<f64>,
    pub points_per_dimension: usize,
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn render(&self) -> String {
        let mut out = format!("problem: {}, x_c = {:?}, scan points per dimension: {}\n", self.config.problem, self.x_c, self.points_per_dimension);
        out += &format!("{:<6} {:>28} {:>28} {:>12} {:>12}\n", "resp", "qsrs bound", "scan range", "abs gap", "rel gap");
        for r in &self.rows {
            out += &format!(
                "{:<6} {:>28} {:>28} {:>12.4e} {:>12.4e}\n",
                r.response,
                format!("[{:.6e}, {:.6e}]", r.qsrs_lo, r.qsrs_hi),
                format!("[{:.6e}, {:.6e}]", r.scan_lo, r.scan_hi),
                r.abs_gap,
                r.rel_gap
            );
        }
        out
    }

    /// Columns: response, qsrs_lo, qsrs_hi, scan_lo, scan_hi, abs_gap, rel_gap.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["response", "qsrs_lo", "qsrs_hi", "scan_lo", "scan_hi", "abs_gap", "rel_gap"])?;
        for r in &self.rows {
            w.write_record([
                r.response.clone(),
                format!("{:e}", r.qsrs_lo),
                format!("{:e}", r.qsrs_hi),
                format!("{:e}", r.scan_lo),
                format!("{:e}", r.scan_hi),
                format!("{:e}", r.abs_gap),
                format!("{:e}", r.rel_gap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Surrogate bounds against scanned ranges at one design midpoint.
pub fn cmd_validate(cfg: &RunConfig, x_c: &[f64]) -> std::result::Result<ValidationReport, CommandError> {
    cfg.validate().map_err(CommandError::Config)?;
    let problem = cfg.build_problem().map_err(CommandError::Config)?;
    problem.check_midpoint(x_c).map_err(CommandError::Config)?;
    let set = worst_case_surrogates(&problem, x_c, &cfg.surrogate()).map_err(runtime)?;
    let ranges = scan_problem_range(&problem, x_c, &cfg.oracle).map_err(runtime)?;
    let rows = set
        .names
        .iter()
        .zip(&set.bounds)
        .zip(ranges)
        .map(|((name, b), (lo, hi))| {
            let abs_gap = b.hi() - hi;
            let rel_gap = if hi == 0.0 { abs_gap } else { abs_gap / hi.abs() };
            ValidationRow { response: name.clone(), qsrs_lo: b.lo(), qsrs_hi: b.hi(), scan_lo: lo, scan_hi: hi, abs_gap, rel_gap }
        })
        .collect();
    let bx = problem.joint_box(x_c).map_err(runtime)?;
    let scanned = bx.intervals().iter().filter(|iv| !iv.is_degenerate()).count();
    let report =
        ValidationReport { config: cfg.clone(), x_c: x_c.to_vec(), points_per_dimension: cfg.oracle.points_for(scanned), rows };
    if let Some(dir) = &cfg.output_dir {
        let write = || -> Result<()> {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("validation.json"), serde_json::to_string_pretty(&report)?)?;
            report.write_csv(std::fs::File::create(dir.join("validation.csv"))?)
        };
        write().map_err(runtime)?;
    }
    Ok(report)
}

/// Built-in targets of the sparsity demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoTarget {
    /// `(x1 + 2 x2 - 7)^2 + (2 x1 + x2 - 5)^2` on `[-10, 10]^2`.
    Booth,
    /// `T_5(x)` on `[-1, 1]`.
    ChebyshevT5,
    /// The zero function on `[-1, 1]^2`.
    Zero,
}

impl DemoTarget {
    pub const NAMES: [&'static str; 3] = ["booth", "chebyshev-t5", "zero"];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "booth" => Ok(DemoTarget::Booth),
            "chebyshev-t5" => Ok(DemoTarget::ChebyshevT5),
            "zero" => Ok(DemoTarget::Zero),
            _ => Err(Error::Config {
                field: "target".into(),
                msg: format!("unknown demo '{name}', expected one of {}", Self::NAMES.join(", ")),
            }),
        }
    }

    pub fn bounding_box(self) -> UncertainBox {
        match self {
            DemoTarget::Booth => UncertainBox::new(vec![Interval::new(-10.0, 10.0).unwrap(); 2]).unwrap(),
            DemoTarget::ChebyshevT5 => UncertainBox::canonical(1),
            DemoTarget::Zero => UncertainBox::canonical(2),
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            DemoTarget::Booth => (x[0] + 2.0 * x[1] - 7.0).powi(2) + (2.0 * x[0] + x[1] - 5.0).powi(2),
            DemoTarget::ChebyshevT5 => crate::chebyshev::chebyshev_t(5, x[0]),
            DemoTarget::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub atom: MultiIndex,
    pub coefficient: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub target: DemoTarget,
    pub n_atoms: usize,
    pub quadrature_order: usize,
    pub significant_count: usize,
    /// Sorted by decreasing magnitude.
    pub coefficients: Vec<CoefficientRow>,
}

impl SparsityReport {
    pub fn render(&self) -> String {
        let mut out = format!("{} significant coefficients\n", self.significant_count);
        for r in self.coefficients.iter().filter(|r| r.significant) {
            out += &format!("  {:<12} {:.6e}\n", r.atom.to_string(), r.coefficient);
        }
        out
    }

    /// Columns: rank, atom, coefficient, significant.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rank", "atom", "coefficient", "significant"])?;
        for (i, r) in self.coefficients.iter().enumerate() {
            w.write_record([(i + 1).to_string(), r.atom.to_string(), format!("{:e}", r.coefficient), r.significant.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Quadrature coefficients of a demo target over a graded dictionary.
pub fn cmd_demo_sparsity(target: DemoTarget, n_atoms: usize, order: usize) -> Result<SparsityReport> {
    let bx = target.bounding_box();
    let index_set = build_index_set(bx.dimension(), n_atoms);
    let coeffs = chebyshev_coefficients_quadrature(|x| target.eval(x), &bx, &index_set, order)?;
    let sig = significant(&coeffs, SIGNIFICANCE);
    let mut rows: Vec<CoefficientRow> = index_set
        .into_iter()
        .zip(&coeffs)
        .enumerate()
        .map(|(i, (atom, &c))| CoefficientRow { atom, coefficient: c, significant: sig.contains(&i) })
        .collect();
    rows.sort_by(|a, b| b.coefficient.abs().total_cmp(&a.coefficient.abs()));
    Ok(SparsityReport { target, n_atoms, quadrature_order: order, significant_count: sig.len(), coefficients: rows })
}
