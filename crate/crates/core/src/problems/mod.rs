//! Uncertain design problems, the two benchmarks, and the declarative
//! problem-definition format.

mod expr;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use expr::Expression;

use crate::error::{Error, Result};
use crate::interval::{Interval, UncertainBox};

/// A response `r(x, y)` of design variables `x` and uncertain parameters `y`.
pub type ResponseFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 5] = ["three-hump", "three-hump-corrected", "pressure-vessel", "cubic", "sphere"];

/// Objective plus constraints `g_i(x, y) <= 0`, design bounds, per-variable
/// half-widths and interval parameters.
#[derive(Clone)]
pub struct UncertainProblem {
    name: String,
    variables: Vec<String>,
    design_bounds: Vec<Interval>,
    widths: Vec<f64>,
    parameter_names: Vec<String>,
    parameters: Vec<Interval>,
    objective: ResponseFn,
    constraints: Vec<ResponseFn>,
    definition: Option<ProblemDefinition>,
}

impl fmt::Debug for UncertainProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UncertainProblem")
            .field("name", &self.name)
            .field("variables", &self.variables)
            .field("design_bounds", &self.design_bounds)
            .field("widths", &self.widths)
            .field("parameters", &self.parameters)
            .field("constraints", &self.constraints.len())
            .finish()
    }
}

impl UncertainProblem {
    /// Problem without constraints or uncertain parameters. Variables are
    /// named `x1, x2, ...`.
    pub fn new(name: &str, design_bounds: Vec<Interval>, widths: Vec<f64>, objective: ResponseFn) -> Result<Self> {
        let variables = (1..=design_bounds.len()).map(|i| format!("x{i}")).collect();
        let p = Self {
            name: name.to_string(),
            variables,
            design_bounds,
            widths,
            parameter_names: vec![],
            parameters: vec![],
            objective,
            constraints: vec![],
            definition: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_constraint(mut self, g: ResponseFn) -> Self {
        self.constraints.push(g);
        self.definition = None;
        self
    }

    pub fn with_parameters(mut self, names: Vec<String>, intervals: Vec<Interval>) -> Result<Self> {
        if names.len() != intervals.len() {
            return Err(Error::DimensionMismatch { expected: intervals.len(), got: names.len() });
        }
        self.parameter_names = names;
        self.parameters = intervals;
        self.definition = None;
        Ok(self)
    }

    pub fn with_variable_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: names.len() });
        }
        self.variables = names;
        Ok(self)
    }

    /// Same problem with new half-widths.
    pub fn with_widths(mut self, widths: Vec<f64>) -> Result<Self> {
        self.widths = widths;
        if let Some(def) = &mut self.definition {
            def.widths = self.widths.clone();
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let d = self.design_bounds.len();
        if d == 0 {
            return Err(Error::InvalidArgument("problem needs at least one design variable".into()));
        }
        if self.widths.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.widths.len() });
        }
        for (i, (&w, b)) in self.widths.iter().zip(&self.design_bounds).enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!("width of design variable {} must be >= 0, got {w}", i + 1)));
            }
            if b.lo() + w > b.hi() - w {
                return Err(Error::InvalidArgument(format!(
                    "design variable {} has an empty range after shrinking {b} by {w}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.design_bounds.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn n_parameters(&self) -> usize {
        self.parameters.len()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variables
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameter_names
    }

    pub fn design_bounds(&self) -> &[Interval] {
        &self.design_bounds
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn parameters(&self) -> &[Interval] {
        &self.parameters
    }

    /// Response names: `f`, then `g1, g2, ...`.
    pub fn response_names(&self) -> Vec<String> {
        std::iter::once("f".to_string()).chain((1..=self.n_constraints()).map(|i| format!("g{i}"))).collect()
    }

    /// The definition this problem was built from, if any.
    pub fn definition(&self) -> Option<&ProblemDefinition> {
        self.definition.as_ref()
    }

    /// Range of admissible midpoints: `[x^L + xi, x^R - xi]`.
    pub fn shrunk_bounds(&self) -> Vec<Interval> {
        self.design_bounds
            .iter()
            .zip(&self.widths)
            .map(|(b, &w)| Interval::new(b.lo() + w, b.hi() - w).expect("validated on construction"))
            .collect()
    }

    /// True when every width is zero and every parameter is a point.
    pub fn is_deterministic(&self) -> bool {
        self.widths.iter().all(|&w| w == 0.0) && self.parameters.iter().all(Interval::is_degenerate)
    }

    /// `[x_c - xi, x_c + xi] x [y]`; design variables first.
    pub fn joint_box(&self, x_c: &[f64]) -> Result<UncertainBox> {
        self.check_midpoint(x_c)?;
        let mut iv: Vec<Interval> = x_c
            .iter()
            .zip(&self.widths)
            .map(|(&c, &w)| Interval::from_center_width(c, w))
            .collect::<Result<_>>()?;
        iv.extend_from_slice(&self.parameters);
        UncertainBox::new(iv)
    }

    /// Checks `x_c` against the shrunk design box.
    pub fn check_midpoint(&self, x_c: &[f64]) -> Result<()> {
        if x_c.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: x_c.len() });
        }
        check_inside(x_c, &self.shrunk_bounds())
    }

    /// Objective and constraints at `(x, y)`.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: x.len() });
        }
        if y.len() != self.n_parameters() {
            return Err(Error::DimensionMismatch { expected: self.n_parameters(), got: y.len() });
        }
        check_inside(x, &self.design_bounds)?;
        check_inside(y, &self.parameters).map_err(|e| match e {
            Error::OutOfBox { dim, value, lo, hi } => Error::OutOfBox { dim: dim + x.len(), value, lo, hi },
            e => e,
        })?;
        Ok((self.objective_unchecked(x, y), self.constraints_unchecked(x, y)))
    }

    /// Response `k` (0 = objective) without bounds checks.
    pub fn response_unchecked(&self, k: usize, x: &[f64], y: &[f64]) -> f64 {
        if k == 0 {
            (self.objective)(x, y)
        } else {
            (self.constraints[k - 1])(x, y)
        }
    }

    pub fn objective_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.objective)(x, y)
    }

    pub fn constraints_unchecked(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|g| g(x, y)).collect()
    }
}

fn check_inside(x: &[f64], bounds: &[Interval]) -> Result<()> {
    for (dim, (&v, b)) in x.iter().zip(bounds).enumerate() {
        let tol = 1e-12 * (1.0 + b.lo().abs().max(b.hi().abs()));
        if !(v >= b.lo() - tol && v <= b.hi() + tol) {
            return Err(Error::OutOfBox { dim, value: v, lo: b.lo(), hi: b.hi() });
        }
    }
    Ok(())
}

/// Uncertain parameter in a definition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterDefinition {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

/// Declarative problem definition (TOML):
///
/// ```toml
/// name = "example"
/// variables = ["x1", "x2"]
/// lower = [-5.0, -5.0]
/// upper = [5.0, 5.0]
/// widths = [0.1, 0.1]
/// objective = "x1^2 + k*x2^2"
/// constraints = ["x1 + x2 - 1"]
///
/// [[parameters]]
/// name = "k"
/// lo = 0.9
/// hi = 1.1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDefinition {
    pub name: String,
    pub variables: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub widths: Vec<f64>,
    pub objective: String,
    #[serde(default)]
    pub constraints: Vec<String>,
    #[serde(default)]
    pub parameters: Vec<ParameterDefinition>,
}

impl ProblemDefinition {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config { field: "problem".into(), msg: e.to_string() })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config { field: "problem".into(), msg: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Compile the expressions into a problem.
    pub fn build(&self) -> Result<UncertainProblem> {
        let d = self.variables.len();
        for (field, len) in [("lower", self.lower.len()), ("upper", self.upper.len()), ("widths", self.widths.len())] {
            if len != d {
                return Err(Error::Config { field: field.into(), msg: format!("expected {d} entries, got {len}") });
            }
        }
        let mut names: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        names.extend(self.parameters.iter().map(|p| p.name.as_str()));
        let mut sorted = names.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config { field: "variables".into(), msg: format!("duplicate name '{}'", w[0]) });
        }
        let compile = |field: &str, src: &str| -> Result<ResponseFn> {
            let e = Expression::parse(src, &names)
                .map_err(|err| Error::Config { field: field.into(), msg: err.to_string() })?;
            Ok(Arc::new(move |x: &[f64], y: &[f64]| {
                if y.is_empty() {
                    e.eval(x)
                } else {
                    let v: Vec<f64> = x.iter().chain(y).copied().collect();
                    e.eval(&v)
                }
            }))
        };
        let bounds = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| Interval::new(l, u))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config { field: "lower/upper".into(), msg: e.to_string() })?;
        let mut p = UncertainProblem::new(&self.name, bounds, self.widths.clone(), compile("objective", &self.objective)?)
            .map_err(|e| Error::Config { field: "widths".into(), msg: e.to_string() })?
            .with_variable_names(self.variables.clone())?;
        for (i, g) in self.constraints.iter().enumerate() {
            p = p.with_constraint(compile(&format!("constraints[{i}]"), g)?);
        }
        let params = self
            .parameters
            .iter()
            .map(|q| Interval::new(q.lo, q.hi))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config { field: "parameters".into(), msg: e.to_string() })?;
        p = p.with_parameters(self.parameters.iter().map(|q| q.name.clone()).collect(), params)?;
        p.definition = Some(self.clone());
        Ok(p)
    }
}

fn attach(mut p: UncertainProblem, def: ProblemDefinition) -> UncertainProblem {
    p.definition = Some(def);
    p
}

/// Three-Hump camel problem on `[-5, 5]^2` with half-widths 0.1. With
/// `corrected = false` the sixth-power term reads `x1^2 / 6`; with
/// `corrected = true` it is the usual `x1^6 / 6`.
pub fn three_hump_problem(corrected: bool) -> UncertainProblem {
    let (name, objective) = if corrected {
        ("three-hump-corrected", "2*x1^2 - 1.05*x1^4 + x1^6/6 + x1*x2 + x2^2")
    } else {
        ("three-hump", "2*x1^2 - 1.05*x1^4 + x1^2/6 + x1*x2 + x2^2")
    };
    let f: ResponseFn = if corrected {
        Arc::new(|x: &[f64], _: &[f64]| {
            let (a, b) = (x[0], x[1]);
            2.0 * a.powi(2) - 1.05 * a.powi(4) + a.powi(6) / 6.0 + a * b + b.powi(2)
        })
    } else {
        Arc::new(|x: &[f64], _: &[f64]| {
            let (a, b) = (x[0], x[1]);
            2.0 * a.powi(2) - 1.05 * a.powi(4) + a.powi(2) / 6.0 + a * b + b.powi(2)
        })
    };
    let bounds = vec![Interval::new(-5.0, 5.0).unwrap(); 2];
    let def = ProblemDefinition {
        name: name.into(),
        variables: vec!["x1".into(), "x2".into()],
        lower: vec![-5.0; 2],
        upper: vec![5.0; 2],
        widths: vec![0.1; 2],
        objective: objective.into(),
        constraints: vec![],
        parameters: vec![],
    };
    attach(UncertainProblem::new(name, bounds, vec![0.1; 2], f).unwrap(), def)
}

/// Cylindrical pressure vessel with hemispherical heads: shell and head
/// thicknesses `x1, x2`, inner radius `x3`, length `x4`; half-widths 0.1.
pub fn pressure_vessel_problem() -> UncertainProblem {
    use std::f64::consts::PI;
    let f: ResponseFn = Arc::new(|x: &[f64], _: &[f64]| {
        0.6224 * x[0] * x[2] * x[3]
            + 1.7781 * x[1] * x[2].powi(2)
            + 3.1661 * x[0].powi(2) * x[3]
            + 19.84 * x[0].powi(2) * x[2]
    });
    let g1: ResponseFn = Arc::new(|x: &[f64], _: &[f64]| -x[0] + 0.0193 * x[2]);
    let g2: ResponseFn = Arc::new(|x: &[f64], _: &[f64]| -x[1] + 0.00954 * x[2]);
    let g3: ResponseFn =
        Arc::new(|x: &[f64], _: &[f64]| -PI * x[2].powi(2) * x[3] - 4.0 / 3.0 * PI * x[2].powi(3) + 1296000.0);
    let g4: ResponseFn = Arc::new(|x: &[f64], _: &[f64]| x[3] - 240.0);
    let bounds = vec![
        Interval::new(1.0, 99.0).unwrap(),
        Interval::new(1.0, 99.0).unwrap(),
        Interval::new(10.0, 200.0).unwrap(),
        Interval::new(10.0, 200.0).unwrap(),
    ];
    let def = ProblemDefinition {
        name: "pressure-vessel".into(),
        variables: (1..=4).map(|i| format!("x{i}")).collect(),
        lower: vec![1.0, 1.0, 10.0, 10.0],
        upper: vec![99.0, 99.0, 200.0, 200.0],
        widths: vec![0.1; 4],
        objective: "0.6224*x1*x3*x4 + 1.7781*x2*x3^2 + 3.1661*x1^2*x4 + 19.84*x1^2*x3".into(),
        constraints: vec![
            "-x1 + 0.0193*x3".into(),
            "-x2 + 0.00954*x3".into(),
            "-pi*x3^2*x4 - 4/3*pi*x3^3 + 1296000".into(),
            "x4 - 240".into(),
        ],
        parameters: vec![],
    };
    let p = UncertainProblem::new("pressure-vessel", bounds, vec![0.1; 4], f)
        .unwrap()
        .with_constraint(g1)
        .with_constraint(g2)
        .with_constraint(g3)
        .with_constraint(g4);
    attach(p, def)
}

/// `x^3 + 2x` on `[-2, 2]` with half-width 1, so the box at `x_c = 0` is `[-1, 1]`.
pub fn cubic_problem() -> UncertainProblem {
    let f: ResponseFn = Arc::new(|x: &[f64], _: &[f64]| x[0].powi(3) + 2.0 * x[0]);
    let def = ProblemDefinition {
        name: "cubic".into(),
        variables: vec!["x1".into()],
        lower: vec![-2.0],
        upper: vec![2.0],
        widths: vec![1.0],
        objective: "x1^3 + 2*x1".into(),
        constraints: vec![],
        parameters: vec![],
    };
    attach(UncertainProblem::new("cubic", vec![Interval::new(-2.0, 2.0).unwrap()], vec![1.0], f).unwrap(), def)
}

/// `x1^2 + x2^2` on `[-5, 5]^2`, zero widths.
pub fn sphere_problem() -> UncertainProblem {
    let f: ResponseFn = Arc::new(|x: &[f64], _: &[f64]| x.iter().map(|v| v * v).sum());
    let def = ProblemDefinition {
        name: "sphere".into(),
        variables: vec!["x1".into(), "x2".into()],
        lower: vec![-5.0; 2],
        upper: vec![5.0; 2],
        widths: vec![0.0; 2],
        objective: "x1^2 + x2^2".into(),
        constraints: vec![],
        parameters: vec![],
    };
    attach(UncertainProblem::new("sphere", vec![Interval::new(-5.0, 5.0).unwrap(); 2], vec![0.0; 2], f).unwrap(), def)
}

pub fn builtin(name: &str) -> Option<UncertainProblem> {
    match name {
        "three-hump" => Some(three_hump_problem(false)),
        "three-hump-corrected" => Some(three_hump_problem(true)),
        "pressure-vessel" => Some(pressure_vessel_problem()),
        "cubic" => Some(cubic_problem()),
        "sphere" => Some(sphere_problem()),
        _ => None,
    }
}

/// A built-in name or a path to a definition file.
pub fn resolve(name_or_path: &str) -> Result<UncertainProblem> {
    if let Some(p) = builtin(name_or_path) {
        return Ok(p);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        return ProblemDefinition::load(path)?.build();
    }
    Err(Error::Config {
        field: "problem".into(),
        msg: format!("'{name_or_path}' is neither a built-in ({}) nor a file", BUILTIN_NAMES.join(", ")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TABLE5: [f64; 4] = [2.2254, 1.2458, 93.4970, 100.2317];

    #[test]
    fn three_hump_values() {
        for corrected in [false, true] {
            let p = three_hump_problem(corrected);
            assert_eq!(p.evaluate(&[0.0, 0.0], &[]).unwrap().0, 0.0);
            let v = p.evaluate(&[1.0, 1.0], &[]).unwrap().0;
            assert!((v - (2.0 - 1.05 + 1.0 / 6.0 + 2.0)).abs() < 1e-12);
            assert_eq!(p.n_constraints(), 0);
            assert_eq!(p.widths(), &[0.1, 0.1]);
        }
        assert_eq!(three_hump_problem(false).name(), "three-hump");
        assert_eq!(three_hump_problem(true).name(), "three-hump-corrected");
    }

    #[test]
    fn three_hump_corrected_far_point() {
        let (a, b): (f64, f64) = (1.7832, -5.0);
        let expected = 2.0 * a * a - 1.05 * a.powi(4) + a.powi(6) / 6.0 + a * b + b * b;
        let v = three_hump_problem(true).evaluate(&[a, b], &[]).unwrap().0;
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 17.19).abs() < 0.01, "{v}");
    }

    #[test]
    fn pressure_vessel_values() {
        let p = pressure_vessel_problem();
        let (f, g) = p.evaluate(&TABLE5, &[]).unwrap();
        assert!((4.28e4..=4.34e4).contains(&f), "{f}");
        assert!(f <= 4.6315e4);
        assert!((g[1] - (-1.2458 + 0.00954 * 93.4970)).abs() < 1e-12);
        assert!((g[1] + 0.35384).abs() < 1e-5);
        assert!(g[2] < 0.0);
        assert!(((g[2] - -4.8606e6) / 4.8606e6).abs() < 0.02, "{}", g[2]);
        let mut x = TABLE5;
        x[3] = 240.0;
        assert_eq!(p.response_unchecked(4, &x, &[]), 0.0);
        assert!(p.evaluate(&x, &[]).is_err());
    }

    #[test]
    fn pressure_vessel_corner_maximum_of_g1() {
        let p = pressure_vessel_problem();
        let corner = [TABLE5[0] - 0.1, TABLE5[1], TABLE5[2] + 0.1, TABLE5[3]];
        let g1 = p.evaluate(&corner, &[]).unwrap().1[0];
        assert!((g1 - (-(2.2254 - 0.1) + 0.0193 * (93.4970 + 0.1))).abs() < 1e-12);
        assert!((g1 + 0.3190).abs() < 1e-4);
    }

    #[test]
    fn bounds_and_shrinking() {
        let p = pressure_vessel_problem();
        let s = p.shrunk_bounds();
        assert!((s[0].lo() - 1.1).abs() < 1e-12 && (s[3].hi() - 199.9).abs() < 1e-12);
        assert!(matches!(p.evaluate(&[0.5, 1.0, 20.0, 20.0], &[]), Err(Error::OutOfBox { dim: 0, .. })));
        assert!(matches!(p.evaluate(&[1.0, 1.0], &[]), Err(Error::DimensionMismatch { .. })));
        assert!(p.check_midpoint(&[1.05, 2.0, 20.0, 20.0]).is_err());
        let bx = p.joint_box(&TABLE5).unwrap();
        assert!((bx.get(3).hi() - 100.3317).abs() < 1e-12);
        assert!(p.clone().with_widths(vec![50.0; 4]).is_err());
        assert!(p.clone().with_widths(vec![-1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(p.with_widths(vec![0.0; 4]).unwrap().is_deterministic());
    }

    #[test]
    fn parameters_join_the_box() {
        let def = ProblemDefinition {
            name: "p".into(),
            variables: vec!["a".into()],
            lower: vec![0.0],
            upper: vec![4.0],
            widths: vec![0.5],
            objective: "a*k".into(),
            constraints: vec!["a - k".into()],
            parameters: vec![ParameterDefinition { name: "k".into(), lo: 1.0, hi: 2.0 }],
        };
        let p = def.build().unwrap();
        assert_eq!(p.evaluate(&[3.0], &[2.0]).unwrap(), (6.0, vec![1.0]));
        assert!(matches!(p.evaluate(&[3.0], &[2.5]), Err(Error::OutOfBox { dim: 1, .. })));
        let bx = p.joint_box(&[1.0]).unwrap();
        assert_eq!(bx.dimension(), 2);
        assert_eq!((bx.get(1).lo(), bx.get(1).hi()), (1.0, 2.0));
        assert_eq!(p.response_names(), vec!["f", "g1"]);
    }

    #[test]
    fn definition_errors_name_fields() {
        let mut def = cubic_problem().definition().unwrap().clone();
        def.objective = "x1 +".into();
        assert!(matches!(def.build(), Err(Error::Config { field, .. }) if field == "objective"));
        let mut def = cubic_problem().definition().unwrap().clone();
        def.lower.push(0.0);
        assert!(matches!(def.build(), Err(Error::Config { field, .. }) if field == "lower"));
        assert!(ProblemDefinition::from_toml_str("name = 1").is_err());
        assert!(resolve("no-such-problem").is_err());
    }

    #[test]
    fn builtins_round_trip_through_toml() {
        for name in BUILTIN_NAMES {
            let p = builtin(name).unwrap();
            let text = p.definition().unwrap().to_toml_string().unwrap();
            let def = ProblemDefinition::from_toml_str(&text).unwrap();
            assert_eq!(&def, p.definition().unwrap());
            let q = def.build().unwrap();
            assert_eq!(q.name(), p.name());
            assert_eq!(q.widths(), p.widths());
            assert_eq!(q.design_bounds(), p.design_bounds());
            let mid: Vec<f64> = p.design_bounds().iter().map(|b| b.lo() + 0.37 * b.width()).collect();
            let (fa, ga) = p.evaluate(&mid, &[]).unwrap();
            let (fb, gb) = q.evaluate(&mid, &[]).unwrap();
            assert!((fa - fb).abs() <= 1e-12 * fa.abs().max(1.0), "{name}");
            for (a, b) in ga.iter().zip(&gb) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{name}");
            }
        }
    }

    #[test]
    fn resolve_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vessel.toml");
        std::fs::write(&path, pressure_vessel_problem().definition().unwrap().to_toml_string().unwrap()).unwrap();
        let p = resolve(path.to_str().unwrap()).unwrap();
        assert_eq!(p.n_constraints(), 4);
    }

    proptest! {
        #[test]
        fn builtin_evaluators_are_pure(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            for corrected in [false, true] {
                let p = three_hump_problem(corrected);
                prop_assert_eq!(p.evaluate(&[a, b], &[]).unwrap(), p.evaluate(&[a, b], &[]).unwrap());
            }
        }

        #[test]
        fn vessel_matches_its_definition(
            x1 in 1.0f64..99.0, x2 in 1.0f64..99.0, x3 in 10.0f64..200.0, x4 in 10.0f64..200.0,
        ) {
            let p = pressure_vessel_problem();
            let q = p.definition().unwrap().build().unwrap();
            let x = [x1, x2, x3, x4];
            let (fa, ga) = p.evaluate(&x, &[]).unwrap();
            let (fb, gb) = q.evaluate(&x, &[]).unwrap();
            prop_assert!((fa - fb).abs() <= 1e-12 * fa.abs());
            for (a, b) in ga.iter().zip(&gb) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }

        #[test]
        fn vessel_constraints_peak_at_monotone_corners(
            x1 in 1.2f64..98.0, x2 in 1.2f64..98.0, x3 in 10.2f64..199.0, x4 in 10.2f64..199.0,
            t in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            let p = pressure_vessel_problem();
            let c = [x1, x2, x3, x4];
            let inner: Vec<f64> = c.iter().zip(&t).map(|(c, t)| c + 0.1 * t).collect();
            let g = p.evaluate(&inner, &[]).unwrap().1;
            // monotone-worst corners: g1 (-x1, +x3), g2 (-x2, +x3), g3 (-x3, -x4), g4 (+x4)
            let corners = [
                [c[0] - 0.1, c[1], c[2] + 0.1, c[3]],
                [c[0], c[1] - 0.1, c[2] + 0.1, c[3]],
                [c[0], c[1], c[2] - 0.1, c[3] - 0.1],
                [c[0], c[1], c[2], c[3] + 0.1],
            ];
            for k in 0..4 {
                let top = p.evaluate(&corners[k], &[]).unwrap().1[k];
                prop_assert!(g[k] <= top + 1e-9 * top.abs().max(1.0));
            }
        }
    }
}
