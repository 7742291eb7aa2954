//! Problem files and emitted records.
//!
//! Matrices are arrays of rows whose entries are `[re, im]` pairs (a bare
//! number is read as a real entry). Densities may instead be written as
//! `{"diag": [..]}` and are normalized on load. A problem file is a JSON
//! object with `"kind": "algebra"` or `"kind": "bundle"`.

use std::io;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::bundle::{FiberedDensity, FiniteBase, VerticalGradient};
use crate::derivation::Derivation;
use crate::matrix::{c, CMatrix, DensityMatrix, HermitianMatrix};
use crate::transport::SolverConfig;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("missing field `{0}`")]
    Missing(String),

    #[error("invalid field `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("cannot read problem file: {0}")]
    Io(#[from] io::Error),
}

fn invalid(field: &str, message: impl Into<String>) -> ProblemError {
    ProblemError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, ProblemError> {
    obj.get(key).ok_or_else(|| ProblemError::Missing(join(path, key)))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_object<'a>(v: &'a Value, field: &str) -> Result<&'a Map<String, Value>, ProblemError> {
    v.as_object().ok_or_else(|| invalid(field, "expected an object"))
}

fn as_array<'a>(v: &'a Value, field: &str) -> Result<&'a Vec<Value>, ProblemError> {
    v.as_array().ok_or_else(|| invalid(field, "expected an array"))
}

fn as_f64(v: &Value, field: &str) -> Result<f64, ProblemError> {
    v.as_f64().ok_or_else(|| invalid(field, "expected a number"))
}

fn parse_f64_list(v: &Value, field: &str) -> Result<Vec<f64>, ProblemError> {
    as_array(v, field)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_f64(x, &format!("{field}[{i}]")))
        .collect()
}

/// Parses the matrix literal format.
pub fn parse_matrix(v: &Value, field: &str) -> Result<CMatrix, ProblemError> {
    let rows = as_array(v, field)?;
    let n = rows.len();
    if n == 0 {
        return Err(invalid(field, "matrix has no rows"));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let rf = format!("{field}[{i}]");
        let row = as_array(row, &rf)?;
        if row.len() != n {
            return Err(invalid(&rf, format!("expected {n} entries, found {}", row.len())));
        }
        for (j, e) in row.iter().enumerate() {
            let ef = format!("{rf}[{j}]");
            m[(i, j)] = match e {
                Value::Number(_) => c(as_f64(e, &ef)?, 0.0),
                Value::Array(pair) if pair.len() == 2 => c(as_f64(&pair[0], &ef)?, as_f64(&pair[1], &ef)?),
                _ => return Err(invalid(&ef, "expected [re, im]")),
            };
        }
    }
    Ok(m)
}

pub fn parse_hermitian(v: &Value, field: &str) -> Result<HermitianMatrix, ProblemError> {
    HermitianMatrix::new(parse_matrix(v, field)?).map_err(|e| invalid(field, e.to_string()))
}

pub fn parse_density(v: &Value, field: &str) -> Result<DensityMatrix, ProblemError> {
    if let Some(obj) = v.as_object() {
        let diag = parse_f64_list(get(obj, "diag", field)?, &join(field, "diag"))?;
        return DensityMatrix::from_diagonal(&diag).map_err(|e| invalid(field, e.to_string()));
    }
    DensityMatrix::from_matrix(parse_matrix(v, field)?).map_err(|e| invalid(field, e.to_string()))
}

/// `{"generators": [matrix, ...]}`; `n` is needed only for an empty list.
pub fn parse_derivation(v: &Value, field: &str, n: Option<usize>) -> Result<Derivation, ProblemError> {
    let obj = as_object(v, field)?;
    let gf = join(field, "generators");
    let gens = as_array(get(obj, "generators", field)?, &gf)?
        .iter()
        .enumerate()
        .map(|(i, g)| parse_hermitian(g, &format!("{gf}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let dim = match (gens.first(), n) {
        (Some(g), _) => g.dim(),
        (None, Some(n)) => n,
        (None, None) => return Err(invalid(&gf, "empty generator list needs a density to fix the dimension")),
    };
    Derivation::new(dim, gens).map_err(|e| invalid(&gf, e.to_string()))
}

pub fn parse_solver(v: Option<&Value>) -> Result<SolverConfig, ProblemError> {
    match v {
        None => Ok(SolverConfig::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| invalid("solver", e.to_string())),
    }
}

#[derive(Debug, Clone)]
pub struct AlgebraProblem {
    pub derivation: Derivation,
    pub p: Option<DensityMatrix>,
    pub q: Option<DensityMatrix>,
    pub solver: SolverConfig,
    pub heat_times: Option<Vec<f64>>,
    pub curvature_samples: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct BundleProblem {
    pub gradient: VerticalGradient,
    pub p: FiberedDensity,
    pub q: FiberedDensity,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone)]
pub enum Problem {
    Algebra(AlgebraProblem),
    Bundle(BundleProblem),
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Algebra(_) => "algebra",
            Problem::Bundle(_) => "bundle",
        }
    }
}

pub fn parse_problem_str(text: &str) -> Result<Problem, ProblemError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ProblemError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    parse_problem(&v)
}

pub fn read_problem(path: &std::path::Path) -> Result<Problem, ProblemError> {
    parse_problem_str(&std::fs::read_to_string(path)?)
}

pub fn parse_problem(v: &Value) -> Result<Problem, ProblemError> {
    let obj = as_object(v, "<root>")?;
    let kind = get(obj, "kind", "")?.as_str().ok_or_else(|| invalid("kind", "expected a string"))?;
    let solver = parse_solver(obj.get("solver"))?;
    match kind {
        "algebra" => {
            let p = obj.get("p").map(|v| parse_density(v, "p")).transpose()?;
            let q = obj.get("q").map(|v| parse_density(v, "q")).transpose()?;
            let n = p.as_ref().or(q.as_ref()).map(DensityMatrix::dim);
            let derivation = parse_derivation(get(obj, "derivation", "")?, "derivation", n)?;
            for (name, d) in [("p", &p), ("q", &q)] {
                if let Some(d) = d {
                    if d.dim() != derivation.dim() {
                        return Err(invalid(name, format!("dimension {} does not match generators ({})", d.dim(), derivation.dim())));
                    }
                }
            }
            let heat_times = obj.get("heat").map(|h| -> Result<_, ProblemError> {
                let h = as_object(h, "heat")?;
                parse_f64_list(get(h, "times", "heat")?, "heat.times")
            });
            let curvature_samples = obj.get("curvature").map(|c| -> Result<_, ProblemError> {
                let c = as_object(c, "curvature")?;
                get(c, "samples", "curvature")?
                    .as_u64()
                    .map(|s| s as usize)
                    .ok_or_else(|| invalid("curvature.samples", "expected a nonnegative integer"))
            });
            Ok(Problem::Algebra(AlgebraProblem {
                derivation,
                p,
                q,
                solver,
                heat_times: heat_times.transpose()?,
                curvature_samples: curvature_samples.transpose()?,
            }))
        }
        "bundle" => {
            let base_obj = as_object(get(obj, "base", "")?, "base")?;
            let weights = parse_f64_list(get(base_obj, "weights", "base")?, "base.weights")?;
            let base = match base_obj.get("labels") {
                Some(l) => {
                    let labels = as_array(l, "base.labels")?
                        .iter()
                        .map(|x| x.as_str().map(str::to_string).ok_or_else(|| invalid("base.labels", "expected strings")))
                        .collect::<Result<Vec<_>, _>>()?;
                    FiniteBase::with_labels(labels, weights)
                }
                None => FiniteBase::new(weights),
            }
            .map_err(|e| invalid("base", e.to_string()))?;
            let fibers = as_array(get(obj, "fibers", "")?, "fibers")?;
            let sections = |key: &str| -> Result<Vec<HermitianMatrix>, ProblemError> {
                as_array(get(obj, key, "")?, key)?
                    .iter()
                    .enumerate()
                    .map(|(i, m)| parse_hermitian(m, &format!("{key}[{i}]")))
                    .collect()
            };
            let (ps, qs) = (sections("P")?, sections("Q")?);
            let n = ps.first().map(HermitianMatrix::dim);
            let per_fiber = fibers
                .iter()
                .enumerate()
                .map(|(i, f)| parse_derivation(f, &format!("fibers[{i}]"), n))
                .collect::<Result<Vec<_>, _>>()?;
            let gradient = VerticalGradient::new(base.clone(), per_fiber).map_err(|e| invalid("fibers", e.to_string()))?;
            let p = FiberedDensity::new(base.clone(), ps).map_err(|e| invalid("P", e.to_string()))?;
            let q = FiberedDensity::new(base, qs).map_err(|e| invalid("Q", e.to_string()))?;
            Ok(Problem::Bundle(BundleProblem { gradient, p, q, solver }))
        }
        other => Err(invalid("kind", format!("expected \"algebra\" or \"bundle\", got {other:?}"))),
    }
}

/// Matrix literal for emission.
pub fn matrix_value(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

/// Writes floats with 17 significant digits so output is reproducible
/// bit for bit.
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Compact JSON with 17-significant-digit floats. Non-finite floats become
/// `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    String::from_utf8(out).expect("JSON output is UTF-8")
}
