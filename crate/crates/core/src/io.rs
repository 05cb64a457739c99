//! Problem JSON and the versioned report documents.
//!
//! A problem is `{"field","n","m","A","v","f0"}` with row-major matrices and
//! complex entries written `[re, im]`. Reports are emitted with a fixed key
//! order so that equal inputs give byte-identical output.

use serde_json::{json, Map, Value};

use crate::convexity::{CertificateStatus, ConvexityCertificate, ExtendedReal, ScanCoverage, SingularDirection};
use crate::error::{Error, Result};
use crate::estimates::{EstimateConfig, EstimateReport};
use crate::jnr::{GutkinReport, JnrCertificate, JnrStatus, JnrTuple};
use crate::numkernel::{CMatrix, CVector, Cx, Field, SymMatrix};
use crate::oracle::{ProbeReport, Region};
use crate::quadmap::QuadraticMap;

pub const SCHEMA: &str = "quadrascope/1";

/// Input matrices whose hermitian defect exceeds this are reported.
pub const SYMMETRIZE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Map(QuadraticMap),
    /// No `v` or `f0` given: a tuple of forms.
    Tuple(JnrTuple),
}

impl Problem {
    /// The problem as a map; a bare tuple becomes the homogeneous map.
    pub fn to_map(&self) -> QuadraticMap {
        match self {
            Self::Map(m) => m.clone(),
            Self::Tuple(t) => t.as_map(),
        }
    }

    pub fn to_tuple(&self) -> Result<JnrTuple> {
        match self {
            Self::Tuple(t) => Ok(t.clone()),
            Self::Map(m) => JnrTuple::new(m.field(), m.a().to_vec()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParsedProblem {
    pub problem: Problem,
    pub warnings: Vec<String>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("{field}: {msg}"))
}

fn parse_entry(v: &Value, path: &str, field: Field) -> Result<Cx> {
    match v {
        Value::Number(x) => Ok(Cx::new(x.as_f64().ok_or_else(|| invalid(path, "not a finite number"))?, 0.0)),
        Value::Array(p) if p.len() == 2 => {
            let re = p[0].as_f64().ok_or_else(|| invalid(path, "real part is not a number"))?;
            let im = p[1].as_f64().ok_or_else(|| invalid(path, "imaginary part is not a number"))?;
            if field == Field::Real && im != 0.0 {
                return Err(invalid(path, "imaginary part in a real problem"));
            }
            Ok(Cx::new(re, im))
        }
        _ => Err(invalid(path, "expected a number or [re, im]")),
    }
}

fn parse_vector(v: &Value, path: &str, n: usize, field: Field) -> Result<CVector> {
    let items = v.as_array().ok_or_else(|| invalid(path, "expected an array"))?;
    if items.len() != n {
        return Err(invalid(path, format!("has length {}, expected {n}", items.len())));
    }
    let entries = items.iter().enumerate().map(|(k, e)| parse_entry(e, &format!("{path}[{k}]"), field)).collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(entries))
}

fn parse_matrix(v: &Value, path: &str, n: usize, field: Field) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| invalid(path, "expected a list of rows"))?;
    if rows.len() != n {
        return Err(invalid(path, format!("has {} rows, expected {n} (matrix must be {n}x{n})", rows.len())));
    }
    let mut m = CMatrix::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| invalid(&format!("{path}[{r}]"), "expected a row"))?;
        if row.len() != n {
            return Err(invalid(path, format!("row {r} has {} entries, expected {n} (matrix must be square)", row.len())));
        }
        for (c, e) in row.iter().enumerate() {
            m[(r, c)] = parse_entry(e, &format!("{path}[{r}][{c}]"), field)?;
        }
    }
    Ok(m)
}

fn parse_count(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    let v = obj.get(key).ok_or_else(|| invalid(key, "missing"))?;
    v.as_u64().filter(|&k| k >= 1).map(|k| k as usize).ok_or_else(|| invalid(key, "expected a positive integer"))
}

pub fn parse_problem(text: &str) -> Result<ParsedProblem> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::MalformedJson { line: e.line(), column: e.column(), message: e.to_string().split(" at line ").next().unwrap_or_default().to_string() })?;
    let obj = root.as_object().ok_or_else(|| invalid("problem", "expected a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !["field", "n", "m", "A", "v", "f0"].contains(&k.as_str())) {
        return Err(invalid(k, "unknown field"));
    }
    let field = match obj.get("field").and_then(Value::as_str) {
        Some("real") => Field::Real,
        Some("complex") => Field::Complex,
        _ => return Err(invalid("field", "expected \"real\" or \"complex\"")),
    };
    let n = parse_count(obj, "n")?;
    let m = parse_count(obj, "m")?;
    let a_list = obj.get("A").and_then(Value::as_array).ok_or_else(|| invalid("A", "expected a list of matrices"))?;
    if a_list.len() != m {
        return Err(invalid("A", format!("has {} matrices, expected m = {m}", a_list.len())));
    }
    let mut warnings = Vec::new();
    let mut a = Vec::with_capacity(m);
    for (i, ai) in a_list.iter().enumerate() {
        let path = format!("A[{i}]");
        let raw = parse_matrix(ai, &path, n, field)?;
        let (sym, defect) = SymMatrix::with_asymmetry(field, raw).map_err(|e| invalid(&path, e))?;
        if defect > SYMMETRIZE_TOL {
            warnings.push(format!("{path} was symmetrized (largest defect {defect:e})"));
        }
        a.push(sym);
    }
    let (v, f0) = (obj.get("v"), obj.get("f0"));
    if v.is_none() && f0.is_none() {
        let tuple = JnrTuple::new(field, a)?;
        return Ok(ParsedProblem { problem: Problem::Tuple(tuple), warnings });
    }
    let v = match v {
        Some(v) => {
            let list = v.as_array().ok_or_else(|| invalid("v", "expected a list of vectors"))?;
            if list.len() != m {
                return Err(invalid("v", format!("has {} vectors, expected m = {m}", list.len())));
            }
            list.iter().enumerate().map(|(i, vi)| parse_vector(vi, &format!("v[{i}]"), n, field)).collect::<Result<Vec<_>>>()?
        }
        None => vec![CVector::zeros(n); m],
    };
    let f0 = match f0 {
        Some(f) => {
            let list = f.as_array().ok_or_else(|| invalid("f0", "expected a list of numbers"))?;
            if list.len() != m {
                return Err(invalid("f0", format!("has {} entries, expected m = {m}", list.len())));
            }
            list.iter().enumerate().map(|(i, x)| x.as_f64().ok_or_else(|| invalid(&format!("f0[{i}]"), "not a number"))).collect::<Result<Vec<_>>>()?
        }
        None => vec![0.0; m],
    };
    let map = QuadraticMap::new(field, a, v, f0)?;
    Ok(ParsedProblem { problem: Problem::Map(map), warnings })
}

fn entry_json(z: Cx, field: Field) -> Value {
    match field {
        Field::Real => json!(z.re),
        Field::Complex => json!([z.re, z.im]),
    }
}

pub fn vector_json(v: &CVector, field: Field) -> Value {
    Value::Array(v.iter().map(|z| entry_json(*z, field)).collect())
}

fn matrix_json(a: &SymMatrix) -> Value {
    let m = a.matrix();
    Value::Array((0..a.n()).map(|r| Value::Array((0..a.n()).map(|c| entry_json(m[(r, c)], a.field())).collect())).collect())
}

fn field_name(field: Field) -> &'static str {
    match field {
        Field::Real => "real",
        Field::Complex => "complex",
    }
}

pub fn problem_json(problem: &Problem) -> Value {
    let (field, mats) = match problem {
        Problem::Map(m) => (m.field(), m.a()),
        Problem::Tuple(t) => (t.field(), t.matrices()),
    };
    let mut out = Map::new();
    out.insert("field".into(), json!(field_name(field)));
    out.insert("n".into(), json!(mats[0].n()));
    out.insert("m".into(), json!(mats.len()));
    out.insert("A".into(), Value::Array(mats.iter().map(matrix_json).collect()));
    if let Problem::Map(map) = problem {
        out.insert("v".into(), Value::Array(map.v().iter().map(|v| vector_json(v, field)).collect()));
        out.insert("f0".into(), json!(map.f0()));
    }
    Value::Object(out)
}

/// Finite numbers as JSON numbers, everything else as a tag string.
pub fn number(x: f64) -> Value {
    if x.is_finite() {
        json!(x + 0.0)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// A list of numbers with the same tagging as [`number`].
pub fn numbers(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| number(*x)).collect())
}

pub fn extended(x: &ExtendedReal) -> Value {
    number(x.value())
}

fn coverage_json(c: &ScanCoverage) -> Value {
    json!({
        "method": c.method,
        "dimension": c.dimension,
        "starts": c.starts,
        "grid": c.grid,
        "local_searches": c.local_searches,
        "evaluations": c.evaluations,
        "min_relative_residual": number(c.min_relative_residual),
    })
}

fn witness_json(w: &SingularDirection, field: Field) -> Value {
    let mut out = Map::new();
    out.insert("c".into(), numbers(&w.c));
    out.insert("z".into(), number(w.z));
    out.insert("lambda_plus_min".into(), number(w.lambda_plus_min));
    out.insert("kernel_residual".into(), number(w.kernel_residual));
    out.insert("offset".into(), vector_json(&w.offset, field));
    if let Some(l) = &w.limit {
        out.insert(
            "limit_check".into(),
            json!({
                "epsilons": l.epsilons,
                "values": l.values.iter().map(|x| number(*x)).collect::<Vec<_>>(),
                "extrapolated": number(l.extrapolated),
                "agrees": l.agrees,
            }),
        );
    }
    Value::Object(out)
}

fn header(command: &str) -> Map<String, Value> {
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    out.insert("command".into(), json!(command));
    out
}

fn tolerances_json(entries: &[(&str, f64)]) -> Value {
    let mut sorted: Vec<_> = entries.to_vec();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    sorted.dedup_by(|a, b| a.0 == b.0);
    Value::Object(sorted.into_iter().map(|(k, v)| (k.to_string(), number(v))).collect())
}

pub fn certificate_json(map: &QuadraticMap, cert: &ConvexityCertificate, seed: u64, warnings: &[String]) -> Value {
    let field = map.field();
    let mut out = header("analyze");
    out.insert("status".into(), json!(cert.status.name()));
    match &cert.status {
        CertificateStatus::SlabConvex { z_max } => {
            out.insert("z_max".into(), number(*z_max));
        }
        CertificateStatus::FullImageConvex => {
            out.insert("z_max".into(), json!("inf"));
        }
        CertificateStatus::Inconclusive { reason } => {
            out.insert("z_max".into(), cert.z_max.as_ref().map_or(Value::Null, extended));
            out.insert("reason".into(), json!(reason));
        }
    }
    out.insert("field".into(), json!(field_name(field)));
    out.insert("n".into(), json!(map.n()));
    out.insert("m".into(), json!(map.m()));
    out.insert("c_plus".into(), numbers(&cert.definiteness.c_plus));
    if let Some(frame) = &cert.frame {
        out.insert("x0".into(), vector_json(&frame.x0, field));
        out.insert("z0".into(), number(frame.z0));
        if let Some((lo, hi)) = cert.slab_bounds(map) {
            out.insert("slab".into(), json!({ "lower": number(lo), "upper": number(hi) }));
        }
    }
    if let Some(e) = &cert.epsilon_max {
        out.insert("epsilon_max".into(), extended(e));
    }
    out.insert(
        "definiteness".into(),
        json!({
            "found": cert.definiteness.found,
            "lambda_min_at_c": number(cert.definiteness.lambda_min_at_c),
            "iterations": cert.definiteness.iterations,
        }),
    );
    out.insert("witnesses".into(), Value::Array(cert.witnesses.iter().map(|w| witness_json(w, field)).collect()));
    out.insert("coverage".into(), cert.coverage.as_ref().map_or(Value::Null, coverage_json));
    let mut tols: Vec<(&str, f64)> = cert.tolerances.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    tols.push(("symmetrize_tol", SYMMETRIZE_TOL));
    out.insert("tolerances".into(), tolerances_json(&tols));
    out.insert("caveats".into(), json!(cert.caveats));
    out.insert("warnings".into(), json!(warnings));
    out.insert("seed".into(), json!(seed));
    Value::Object(out)
}

/// Rank cut used by the Gram normalization, relative to `tr g`.
pub const GRAM_RANK_TOL: f64 = 1e-10;

pub fn estimate_json(map: &QuadraticMap, c_plus: &[f64], report: &EstimateReport, config: &EstimateConfig, z_max: Option<&ExtendedReal>, tols: &[(&str, f64)], warnings: &[String]) -> Value {
    let mut out = header("estimate");
    out.insert("z_est".into(), number(report.z_est));
    out.insert("z_spectral".into(), number(report.z_spectral));
    out.insert("z_shifted".into(), number(report.z_shifted));
    out.insert("z_trace".into(), number(report.z_trace));
    if let Some(z) = z_max {
        out.insert("z_max".into(), extended(z));
    }
    out.insert("ordered".into(), json!(report.is_ordered(1e-7)));
    out.insert("mode".into(), serde_json::to_value(report.mode).expect("plain enum"));
    out.insert("divisor".into(), serde_json::to_value(config.divisor).expect("plain enum"));
    out.insert("divisor_used".into(), number(report.divisor_used));
    out.insert("mu_used".into(), numbers(&report.mu_used));
    out.insert("degenerate".into(), json!(report.degenerate));
    let mm = &report.m_matrix;
    out.insert("m_matrix".into(), Value::Array((0..mm.nrows()).map(|r| json!((0..mm.ncols()).map(|c| mm[(r, c)]).collect::<Vec<_>>())).collect()));
    out.insert("field".into(), json!(field_name(map.field())));
    out.insert("n".into(), json!(map.n()));
    out.insert("m".into(), json!(map.m()));
    out.insert("c_plus".into(), numbers(c_plus));
    let mut all: Vec<(&str, f64)> = tols.to_vec();
    all.push(("gram_rank_tol", GRAM_RANK_TOL));
    all.push(("symmetrize_tol", SYMMETRIZE_TOL));
    out.insert("tolerances".into(), tolerances_json(&all));
    out.insert("warnings".into(), json!(warnings));
    out.insert("seed".into(), json!(config.seed));
    Value::Object(out)
}

fn gutkin_json(r: &GutkinReport) -> Value {
    json!({
        "samples": r.multiplicity_profile.len(),
        "min_gap": number(r.min_gap),
        "modal_multiplicity": r.modal_multiplicity,
        "constant_multiplicity": r.constant_multiplicity,
        "exceptional_directions": r.exceptional_directions.iter().map(|(c, k)| json!({ "direction": numbers(c), "multiplicity": k })).collect::<Vec<_>>(),
    })
}

pub fn jnr_json(tuple: &JnrTuple, cert: &JnrCertificate, seed: u64, tols: &[(&str, f64)], warnings: &[String]) -> Value {
    let mut out = header("jnr-certify");
    out.insert("status".into(), json!(cert.status.name()));
    match &cert.status {
        JnrStatus::ConvexByGutkinScan => {}
        JnrStatus::ConvexByReduction { e, auxiliary, z_max } => {
            out.insert("z_max".into(), extended(z_max));
            out.insert("e".into(), numbers(e));
            out.insert("auxiliary".into(), problem_json(&Problem::Map(auxiliary.clone())));
        }
        JnrStatus::SampledEvidence { lifts_checked, all_infinite, failures } => {
            out.insert("lifts_checked".into(), json!(lifts_checked));
            out.insert("all_infinite".into(), json!(all_infinite));
            out.insert(
                "failures".into(),
                Value::Array(failures.iter().map(|(k, z)| json!({ "lift": k, "z_max": number(*z) })).collect()),
            );
        }
        JnrStatus::Inconclusive { reason } => {
            out.insert("reason".into(), json!(reason));
        }
    }
    out.insert("field".into(), json!(field_name(tuple.field())));
    out.insert("n".into(), json!(tuple.n()));
    out.insert("m".into(), json!(tuple.m()));
    if let Some(g) = &cert.gutkin {
        out.insert("eigengap_scan".into(), gutkin_json(g));
    }
    let mut all: Vec<(&str, f64)> = tols.to_vec();
    all.push(("symmetrize_tol", SYMMETRIZE_TOL));
    out.insert("tolerances".into(), tolerances_json(&all));
    out.insert("caveats".into(), json!(cert.caveats));
    out.insert("warnings".into(), json!(warnings));
    out.insert("seed".into(), json!(seed));
    Value::Object(out)
}

pub fn probe_json(report: &ProbeReport, region: &Region, region_param: f64, seed: u64, tols: &[(&str, f64)], warnings: &[String]) -> Value {
    let mut out = header("oracle-check");
    out.insert("verdict".into(), serde_json::to_value(report.verdict).expect("plain enum"));
    out.insert("region".into(), json!(region.name()));
    out.insert("region_parameter".into(), number(region_param));
    out.insert("pairs_tested".into(), json!(report.pairs_tested));
    out.insert("combinations_tested".into(), json!(report.combinations_tested));
    out.insert("max_midpoint_residual".into(), number(report.max_midpoint_residual));
    if let Some(w) = report.failures.first() {
        out.insert(
            "witness".into(),
            json!({
                "y1": numbers(&w.y1),
                "y2": numbers(&w.y2),
                "weight": number(w.weight),
                "point": numbers(&w.point),
                "residual": number(w.residual),
            }),
        );
    }
    out.insert("failures".into(), json!(report.failures.len()));
    let mut all: Vec<(&str, f64)> = tols.to_vec();
    all.push(("tau", report.tau));
    all.push(("symmetrize_tol", SYMMETRIZE_TOL));
    out.insert("tolerances".into(), tolerances_json(&all));
    out.insert("warnings".into(), json!(warnings));
    out.insert("seed".into(), json!(seed));
    Value::Object(out)
}
