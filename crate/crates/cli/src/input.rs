//! Problem and gain files, and the built-in instances.

use std::path::Path;

use odlqr::builtin::{self, Correlation};
use odlqr::problem::{
    validate, CostWeights, GainPair, InitialCorrelation, Plant, ProblemInstance, ValidationReport,
};
use odlqr::Matrix;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const PROBLEM_VERSION: &str = "odlqr-problem-v1";

/// Names accepted by `--problem` in place of a file path.
pub const BUILTIN_NAMES: [&str; 4] = ["doyle-1d", "doyle-1d-ys", "doyle-2d", "doyle-2d-ys"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Doyle1d,
    Doyle2d,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Doyle1d => "doyle-1d",
            Experiment::Doyle2d => "doyle-2d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Builtin {
    pub experiment: Experiment,
    pub correlation: Correlation,
}

impl Builtin {
    pub fn parse(name: &str) -> Option<Self> {
        let (experiment, correlation) = match name {
            "doyle-1d" => (Experiment::Doyle1d, Correlation::General),
            "doyle-1d-ys" => (Experiment::Doyle1d, Correlation::Special),
            "doyle-2d" => (Experiment::Doyle2d, Correlation::General),
            "doyle-2d-ys" => (Experiment::Doyle2d, Correlation::Special),
            _ => return None,
        };
        Some(Self {
            experiment,
            correlation,
        })
    }

    pub fn name(self) -> String {
        match self.correlation {
            Correlation::General => self.experiment.name().to_string(),
            Correlation::Special => format!("{}-ys", self.experiment.name()),
        }
    }
}

/// `Q = q·I`, `R = r·I` for the two-input built-in plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightScales {
    pub q: f64,
    pub r: f64,
}

impl WeightScales {
    pub const DEFAULT: WeightScales = WeightScales { q: 0.25, r: 0.2 };

    pub fn describe(self) -> String {
        format!(
            "doyle-2d weights are not given with the plant; using Q = {}*I2, R = {}*I2",
            self.q, self.r
        )
    }
}

pub fn parse_weight_scales(s: &str) -> Result<WeightScales, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [q, r] = parts.as_slice() else {
        return Err(format!("expected Q_SCALE,R_SCALE, got '{s}'"));
    };
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite() && *x > 0.0)
            .ok_or_else(|| format!("weight scale '{v}' is not a positive number"))
    };
    Ok(WeightScales {
        q: parse(q)?,
        r: parse(r)?,
    })
}

#[derive(Debug, Clone)]
pub struct LoadedProblem {
    /// Built-in name or file path.
    pub name: String,
    pub instance: ProblemInstance,
    pub builtin: Option<Builtin>,
    /// Assumptions the user should see, such as assumed weights.
    pub assumptions: Vec<String>,
    /// File contents, kept to anchor validation failures to lines.
    pub source: Option<String>,
}

/// Matrix key a validation check is about.
fn check_key(check: &str) -> &'static str {
    match check {
        "controllable(A,B)" => "B",
        "observable(C,A)" | "C full row rank" => "C",
        "observable(Q^1/2,A)" | "Q PSD" => "Q",
        "R PD" => "R",
        "E0 PD" => "E0",
        _ => "Y",
    }
}

impl LoadedProblem {
    /// Validates the instance; failed checks become one input error, each
    /// line anchored when the problem came from a file.
    pub fn require_valid(&self) -> CliResult<ValidationReport> {
        let report = validate(&self.instance)?;
        if report.all_passed() {
            return Ok(report);
        }
        let lines: Vec<String> = report
            .failures()
            .map(|c| match &self.source {
                Some(text) => format!(
                    "{}:{}: check '{}' failed ({})",
                    self.name,
                    key_line(text, check_key(c.name)),
                    c.name,
                    c.detail
                ),
                None => format!("{}: check '{}' failed ({})", self.name, c.name, c.detail),
            })
            .collect();
        Err(CliError::input(lines.join("\n")))
    }
}

pub fn builtin_problem(b: Builtin, weights: Option<WeightScales>) -> CliResult<LoadedProblem> {
    let (instance, assumptions) = match b.experiment {
        Experiment::Doyle1d => {
            if weights.is_some() {
                return Err(CliError::input(
                    "--weights only applies to the doyle-2d built-ins",
                ));
            }
            (builtin::doyle_1d(b.correlation), Vec::new())
        }
        Experiment::Doyle2d => {
            let w = weights.unwrap_or(WeightScales::DEFAULT);
            let weights =
                CostWeights::new(Matrix::identity(2, 2) * w.q, Matrix::identity(2, 2) * w.r)?;
            (
                builtin::doyle_2d_with_weights(b.correlation, weights)?,
                vec![w.describe()],
            )
        }
    };
    Ok(LoadedProblem {
        name: b.name(),
        instance,
        builtin: Some(b),
        assumptions,
        source: None,
    })
}

/// Resolves `--problem`: a built-in name, otherwise a problem file.
pub fn load_problem(spec: &str, weights: Option<WeightScales>) -> CliResult<LoadedProblem> {
    if let Some(b) = Builtin::parse(spec) {
        return builtin_problem(b, weights);
    }
    if weights.is_some() {
        return Err(CliError::input(
            "--weights only applies to the doyle-2d built-ins",
        ));
    }
    let text = read(spec)?;
    let instance = parse_problem(&text).map_err(|e| CliError::input(format!("{spec}:{e}")))?;
    Ok(LoadedProblem {
        name: spec.to_string(),
        instance,
        builtin: None,
        assumptions: Vec::new(),
        source: Some(text),
    })
}

fn read(path: &str) -> CliResult<String> {
    std::fs::read_to_string(Path::new(path)).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

type Rows = Vec<Vec<f64>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    version: String,
    #[serde(default)]
    #[allow(dead_code)]
    name: Option<String>,
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "Q")]
    q: Rows,
    #[serde(rename = "R")]
    r: Rows,
    #[serde(rename = "Y")]
    y: Rows,
    #[serde(rename = "E0", default)]
    e0: Option<Rows>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GainFile {
    #[serde(rename = "K")]
    k: Rows,
    #[serde(rename = "L")]
    l: Rows,
}

/// 1-based line of the first `"key":` in `text`, or 1.
pub fn key_line(text: &str, key: &str) -> usize {
    let quoted = format!("\"{key}\"");
    for (pos, _) in text.match_indices(&quoted) {
        let rest = text[pos + quoted.len()..].trim_start();
        if rest.starts_with(':') {
            return text[..pos].matches('\n').count() + 1;
        }
    }
    1
}

fn anchored(text: &str, key: &str, msg: impl std::fmt::Display) -> String {
    format!("{}: {key}: {msg}", key_line(text, key))
}

fn json_error(e: serde_json::Error) -> String {
    format!("{}:{}: {e}", e.line(), e.column())
}

fn to_matrix(text: &str, key: &str, rows: &Rows) -> Result<Matrix, String> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(anchored(
            text,
            key,
            "matrix must have at least one row and one column",
        ));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(anchored(
            text,
            key,
            format!("row {} has {} entries, expected {cols}", i + 1, r.len()),
        ));
    }
    Ok(Matrix::from_row_iterator(
        rows.len(),
        cols,
        rows.iter().flatten().copied(),
    ))
}

fn expect_shape(text: &str, key: &str, m: &Matrix, rows: usize, cols: usize) -> Result<(), String> {
    if m.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(anchored(
            text,
            key,
            format!("expected {rows}x{cols}, found {}x{}", m.nrows(), m.ncols()),
        ))
    }
}

/// Parses an `odlqr-problem-v1` document. Errors are prefixed with the line
/// they refer to.
pub fn parse_problem(text: &str) -> Result<ProblemInstance, String> {
    let f: ProblemFile = serde_json::from_str(text).map_err(json_error)?;
    if f.version != PROBLEM_VERSION {
        return Err(anchored(
            text,
            "version",
            format!(
                "unsupported version '{}', expected '{PROBLEM_VERSION}'",
                f.version
            ),
        ));
    }
    let a = to_matrix(text, "A", &f.a)?;
    let n = a.nrows();
    expect_shape(text, "A", &a, n, n)?;
    let b = to_matrix(text, "B", &f.b)?;
    expect_shape(text, "B", &b, n, b.ncols())?;
    let c = to_matrix(text, "C", &f.c)?;
    expect_shape(text, "C", &c, c.nrows(), n)?;
    let q = to_matrix(text, "Q", &f.q)?;
    expect_shape(text, "Q", &q, n, n)?;
    let r = to_matrix(text, "R", &f.r)?;
    expect_shape(text, "R", &r, b.ncols(), b.ncols())?;
    let y = to_matrix(text, "Y", &f.y)?;
    expect_shape(text, "Y", &y, 2 * n, 2 * n)?;
    let e0 =
        f.e0.as_ref()
            .map(|rows| {
                let e0 = to_matrix(text, "E0", rows)?;
                expect_shape(text, "E0", &e0, n, n)?;
                Ok::<_, String>(e0)
            })
            .transpose()?;

    let plant = Plant::new(a, b, c).map_err(|e| anchored(text, "A", e))?;
    let weights = CostWeights::new(q, r).map_err(|e| anchored(text, "Q", e))?;
    let correlation = InitialCorrelation::new(y).map_err(|e| anchored(text, "Y", e))?;
    let p =
        ProblemInstance::new(plant, weights, correlation).map_err(|e| anchored(text, "A", e))?;
    match e0 {
        Some(e0) => p.with_e0(e0).map_err(|e| anchored(text, "E0", e)),
        None => Ok(p),
    }
}

/// Parses a gain file `{"K": [[...]], "L": [[...]]}` for `plant`.
pub fn parse_gains(text: &str, plant: &Plant) -> Result<GainPair, String> {
    let f: GainFile = serde_json::from_str(text).map_err(json_error)?;
    let k = to_matrix(text, "K", &f.k)?;
    expect_shape(text, "K", &k, plant.m(), plant.n())?;
    let l = to_matrix(text, "L", &f.l)?;
    expect_shape(text, "L", &l, plant.n(), plant.d())?;
    Ok(GainPair::new(k, l))
}

pub fn load_gains(path: &str, plant: &Plant) -> CliResult<GainPair> {
    let text = read(path)?;
    parse_gains(&text, plant).map_err(|e| CliError::input(format!("{path}:{e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOYLE: &str = r#"{
  "version": "odlqr-problem-v1",
  "A": [[1, 1], [0, 1]],
  "B": [[0], [1]],
  "C": [[1, 0]],
  "Q": [[0.25, 0], [0, 0.25]],
  "R": [[0.2]],
  "Y": [[6, 2, 1, 0.2], [2, 6, 0.2, 1], [1, 0.2, 1, 0], [0.2, 1, 0, 1]]
}"#;

    #[test]
    fn parses_a_well_formed_file() {
        let p = parse_problem(DOYLE).unwrap();
        assert_eq!((p.plant.n(), p.plant.m(), p.plant.d()), (2, 1, 1));
        assert!(p.e0_override().is_none());
    }

    #[test]
    fn e0_override_is_applied() {
        let text = DOYLE.replace(
            "\"R\": [[0.2]],",
            "\"R\": [[0.2]],\n  \"E0\": [[2, 0], [0, 3]],",
        );
        let p = parse_problem(&text).unwrap();
        assert_eq!(p.e0()[(1, 1)], 3.0);
    }

    #[test]
    fn shape_errors_name_the_line() {
        let text = DOYLE.replace("\"B\": [[0], [1]]", "\"B\": [[0], [1], [2]]");
        let err = parse_problem(&text).unwrap_err();
        assert!(err.starts_with("4: B: expected 2x1"), "{err}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let text = DOYLE.replace("\"C\": [[1, 0]]", "\"C\": [[1, 0], [1]]");
        let err = parse_problem(&text).unwrap_err();
        assert!(err.starts_with("5: C: row 2 has 1 entries"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let text = DOYLE.replace("\"R\": [[0.2]],", "\"R\": [[0.2]]");
        let err = parse_problem(&text).unwrap_err();
        assert!(err.starts_with("8:"), "{err}");
    }

    #[test]
    fn missing_keys_and_bad_version_are_reported() {
        let err =
            parse_problem(&DOYLE.replace("  \"Q\": [[0.25, 0], [0, 0.25]],\n", "")).unwrap_err();
        assert!(err.contains("missing field `Q`"), "{err}");
        let err = parse_problem(&DOYLE.replace("v1", "v9")).unwrap_err();
        assert!(err.starts_with("2: version"), "{err}");
    }

    #[test]
    fn failed_checks_point_at_the_offending_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        std::fs::write(&path, DOYLE.replace("[[0.2]]", "[[-0.2]]")).unwrap();
        let p = load_problem(path.to_str().unwrap(), None).unwrap();
        let err = p.require_valid().unwrap_err().to_string();
        assert!(err.contains("p.json:7: check 'R PD' failed"), "{err}");
    }

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_NAMES {
            let p = load_problem(name, None).unwrap();
            assert_eq!(p.name, name);
        }
        assert_eq!(load_problem("doyle-2d", None).unwrap().assumptions.len(), 1);
        assert!(load_problem("doyle-1d", Some(WeightScales::DEFAULT)).is_err());
    }

    #[test]
    fn weight_scales_parse() {
        assert_eq!(
            parse_weight_scales("0.25,0.2").unwrap(),
            WeightScales::DEFAULT
        );
        assert!(parse_weight_scales("1").is_err());
        assert!(parse_weight_scales("1,-2").is_err());
    }

    #[test]
    fn gain_files_are_checked_against_the_plant() {
        let plant = builtin::doyle_1d_plant();
        let g = parse_gains(r#"{"K": [[1, 2]], "L": [[3], [4]]}"#, &plant).unwrap();
        assert_eq!(g.l[(1, 0)], 4.0);
        assert!(parse_gains(r#"{"K": [[1], [2]], "L": [[3], [4]]}"#, &plant).is_err());
    }
}
