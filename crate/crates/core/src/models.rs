//! Built-in model corpus with expected analysis results, and static model
//! validation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::canonical::{build_hjpde_set, CanonicalError, ModelDefinition};
use crate::integrability::{constraint_closure, ClosureStatus};
use crate::symcore::{identifiers, parse_expr, RatFun, SymbolKind, SymbolTable};

pub const BUILTIN_NAMES: [&str; 5] = ["oscillator2d", "shifted_velocity", "coupled_parameter", "frw", "frw_lambda"];

/// Unparsed model: the content of a `.hjm` file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSource {
    pub name: String,
    pub coordinates: Vec<String>,
    pub constants: Vec<String>,
    pub lagrangian: String,
}

impl ModelSource {
    pub fn new(name: &str, coordinates: &[&str], constants: &[&str], lagrangian: &str) -> Self {
        ModelSource {
            name: name.to_string(),
            coordinates: coordinates.iter().map(|s| s.to_string()).collect(),
            constants: constants.iter().map(|s| s.to_string()).collect(),
            lagrangian: lagrangian.to_string(),
        }
    }

    pub fn definition(&self) -> Result<ModelDefinition, CanonicalError> {
        let coords: Vec<&str> = self.coordinates.iter().map(String::as_str).collect();
        let consts: Vec<&str> = self.constants.iter().map(String::as_str).collect();
        ModelDefinition::new(&self.name, &coords, &consts, &self.lagrangian)
    }
}

/// Hand-derived analysis results. Expressions use the expression grammar;
/// constraints compare modulo sign, everything else exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectedResults {
    pub rank: usize,
    /// `H'_mu` in coordinate order.
    pub primary: &'static [&'static str],
    pub h0: &'static str,
    pub generations: &'static [&'static [&'static str]],
    pub parameters: &'static [&'static str],
    pub status: ClosureStatus,
    pub fixed: &'static [&'static str],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuiltinModel {
    pub source: ModelSource,
    pub expected: ExpectedResults,
}

impl BuiltinModel {
    pub fn definition(&self) -> ModelDefinition {
        self.source.definition().expect("builtin models are well formed")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown model `{0}`; available: oscillator2d, shifted_velocity, coupled_parameter, frw, frw_lambda")]
    Unknown(String),
}

pub fn builtin(name: &str) -> Result<BuiltinModel, ModelError> {
    let (source, expected) = match name {
        "oscillator2d" => (
            ModelSource::new(name, &["x", "y"], &[], "1/2*(dx^2 + dy^2) - 1/2*(x^2 + y^2)"),
            ExpectedResults {
                rank: 2,
                primary: &[],
                h0: "1/2*(p_x^2 + p_y^2) + 1/2*(x^2 + y^2)",
                generations: &[],
                parameters: &["tau"],
                status: ClosureStatus::Integrable,
                fixed: &[],
            },
        ),
        "shifted_velocity" => (
            ModelSource::new(name, &["x", "y"], &[], "1/2*(dx - y)^2"),
            ExpectedResults {
                rank: 1,
                primary: &["p_y"],
                h0: "1/2*p_x^2 + y*p_x",
                generations: &[&["p_x"]],
                parameters: &["tau", "y"],
                status: ClosureStatus::Integrable,
                fixed: &[],
            },
        ),
        "coupled_parameter" => (
            ModelSource::new(name, &["x", "y"], &[], "1/2*dx^2 + x*dy"),
            ExpectedResults {
                rank: 1,
                primary: &["p_y - x"],
                h0: "1/2*p_x^2",
                generations: &[&["p_x"]],
                parameters: &["tau"],
                status: ClosureStatus::ParameterFixing,
                fixed: &["y"],
            },
        ),
        "frw" => (
            ModelSource::new(name, &["N", "a"], &[], "-3*a*da^2/N"),
            ExpectedResults {
                rank: 1,
                primary: &["p_N"],
                h0: "-N*p_a^2/(12*a)",
                generations: &[&["-(p_a^2)/(12*a)"]],
                parameters: &["tau", "N"],
                status: ClosureStatus::Integrable,
                fixed: &[],
            },
        ),
        "frw_lambda" => (
            ModelSource::new(name, &["N", "a"], &["Lambda"], "-3*a*da^2/N - N*Lambda*a^3"),
            ExpectedResults {
                rank: 1,
                primary: &["p_N"],
                h0: "N*(-(p_a^2)/(12*a) + Lambda*a^3)",
                generations: &[&["-(p_a^2)/(12*a) + Lambda*a^3"]],
                parameters: &["tau", "N"],
                status: ClosureStatus::Integrable,
                fixed: &[],
            },
        ),
        _ => return Err(ModelError::Unknown(name.to_string())),
    };
    Ok(BuiltinModel { source, expected })
}

pub fn builtins() -> Vec<BuiltinModel> {
    BUILTIN_NAMES.iter().map(|n| builtin(n).expect("listed")).collect()
}

/// First disagreement between a pipeline run and an expected record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub model: String,
    pub field: String,
    pub expected: String,
    pub actual: String,
}

impl core::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}: {} expected `{}`, got `{}`", self.model, self.field, self.expected, self.actual)
    }
}

/// Runs the pipeline on `source` and compares against `expected`.
pub fn check_expected(source: &ModelSource, expected: &ExpectedResults) -> Result<(), Mismatch> {
    let miss = |field: &str, e: String, a: String| Mismatch {
        model: source.name.clone(),
        field: field.to_string(),
        expected: e,
        actual: a,
    };
    let model = source.definition().map_err(|e| miss("model", "valid model".into(), e.to_string()))?;
    let cs = build_hjpde_set(&model).map_err(|e| miss("pipeline", "success".into(), e.to_string()))?;
    let parse = |text: &str| model.parse(text).expect("expected records parse");
    let show = |r: &RatFun| crate::symcore::Expr::from(r).to_string();
    let same_up_to_sign = |a: &RatFun, b: &RatFun| a == b || *a == b.neg();

    if cs.hessian.rank != expected.rank {
        return Err(miss("rank", expected.rank.to_string(), cs.hessian.rank.to_string()));
    }
    let primary: Vec<&RatFun> = cs.generators.iter().skip(1).map(|g| &g.full).collect();
    if primary.len() != expected.primary.len() {
        return Err(miss("primary constraint count", expected.primary.len().to_string(), primary.len().to_string()));
    }
    for (a, e) in primary.iter().zip(expected.primary) {
        if !same_up_to_sign(a, &parse(e)) {
            return Err(miss("primary constraint", e.to_string(), show(a)));
        }
    }
    if cs.h0 != parse(expected.h0) {
        return Err(miss("H_0", expected.h0.to_string(), show(&cs.h0)));
    }
    let report = constraint_closure(&cs).map_err(|e| miss("closure", "success".into(), e.to_string()))?;
    if report.generations.len() != expected.generations.len() {
        return Err(miss(
            "generation count",
            expected.generations.len().to_string(),
            report.generations.len().to_string(),
        ));
    }
    for (k, (gen, exp)) in report.generations.iter().zip(expected.generations).enumerate() {
        let field = format!("generation {}", k + 1);
        if gen.len() != exp.len() {
            return Err(miss(&field, exp.join(", "), gen.iter().map(|c| show(&c.expression)).collect::<Vec<_>>().join(", ")));
        }
        for (c, e) in gen.iter().zip(exp.iter()) {
            if !same_up_to_sign(&c.expression, &parse(e)) {
                return Err(miss(&field, e.to_string(), show(&c.expression)));
            }
        }
    }
    let params: Vec<&str> = report.independent_parameters.iter().map(|s| s.name()).collect();
    if params != expected.parameters {
        return Err(miss("parameters", expected.parameters.join(", "), params.join(", ")));
    }
    if report.status != expected.status {
        return Err(miss("status", expected.status.to_string(), report.status.to_string()));
    }
    let fixed: Vec<&str> = report.fixings.iter().map(|f| f.parameter.name()).collect();
    if fixed != expected.fixed {
        return Err(miss("fixed parameters", expected.fixed.join(", "), fixed.join(", ")));
    }
    Ok(())
}

/// Checks every builtin against its expected record.
pub fn corpus() -> Vec<(&'static str, Result<(), Mismatch>)> {
    BUILTIN_NAMES
        .iter()
        .map(|n| {
            let m = builtin(n).expect("listed");
            (*n, check_expected(&m.source, &m.expected))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl Finding {
    fn error(message: String) -> Self {
        Finding { severity: Severity::Error, message }
    }

    fn warning(message: String) -> Self {
        Finding { severity: Severity::Warning, message }
    }
}

impl core::fmt::Display for Finding {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}: {}", self.severity.as_str(), self.message)
    }
}

pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}

/// Static checks: symbol declarations and resolution, autonomy, and
/// linearity of the momentum relations in the velocities.
pub fn validate_model(m: &ModelSource) -> Vec<Finding> {
    let mut out = Vec::new();
    if m.coordinates.is_empty() {
        out.push(Finding::error("no coordinates declared".into()));
        return out;
    }
    let coords: Vec<&str> = m.coordinates.iter().map(String::as_str).collect();
    let consts: Vec<&str> = m.constants.iter().map(String::as_str).collect();
    let table = match SymbolTable::for_model(&coords, &consts) {
        Ok(t) => t,
        Err(e) => {
            out.push(Finding::error(e.to_string()));
            return out;
        }
    };
    match identifiers(&m.lagrangian) {
        Ok(ids) => {
            for (name, offset) in ids {
                if table.lookup(&name).is_none() {
                    out.push(Finding::error(format!("undeclared identifier `{name}` at offset {offset}")));
                }
            }
        }
        Err(e) => {
            out.push(Finding::error(e.to_string()));
            return out;
        }
    }
    if !out.is_empty() {
        return out;
    }
    let l = match parse_expr(&m.lagrangian, &table).and_then(|e| e.to_ratfun()) {
        Ok(l) => l,
        Err(e) => {
            out.push(Finding::error(e.to_string()));
            return out;
        }
    };
    let symbols = l.symbols();
    for s in &symbols {
        match s.kind() {
            SymbolKind::ParameterTime => {
                out.push(Finding::error(format!("Lagrangian depends explicitly on `{s}`; only autonomous models are supported")))
            }
            _ if s.is_momentum() => out.push(Finding::error(format!("momentum `{s}` cannot appear in a Lagrangian"))),
            _ => {}
        }
    }
    for c in table.constants() {
        if !symbols.contains(c) {
            out.push(Finding::warning(format!("constant `{c}` is declared but unused")));
        }
    }
    let n = table.coordinate_count();
    for i in 0..n {
        let p = l.derivative(table.velocity(i));
        for j in 0..n {
            let a = p.derivative(table.velocity(j));
            if a.symbols().iter().any(|s| s.is_velocity()) {
                out.push(Finding::error(format!(
                    "nonlinear momentum relation: p_{} is not linear in `{}`; unsupported class",
                    table.coordinate(i),
                    table.velocity(j)
                )));
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_reproduces_its_record() {
        for (name, r) in corpus() {
            assert_eq!(r, Ok(()), "{name}");
        }
    }

    #[test]
    fn builtin_examples() {
        assert_eq!(builtin("oscillator2d").unwrap().expected.rank, 2);
        assert!(builtin("oscillator2d").unwrap().expected.generations.is_empty());
        assert_eq!(builtin("coupled_parameter").unwrap().expected.status, ClosureStatus::ParameterFixing);
        let f = builtin("frw_lambda").unwrap();
        let m = f.definition();
        let c = m.parse(f.expected.generations[0][0]).unwrap();
        assert_eq!(c, m.parse("Lambda*a^3 - p_a^2/(12*a)").unwrap());
        assert_eq!(builtin("bianchi"), Err(ModelError::Unknown("bianchi".into())));
    }

    #[test]
    fn tampered_record_is_reported() {
        let m = builtin("frw_lambda").unwrap();
        let mut e = m.expected.clone();
        e.generations = &[&["-(p_a^2)/(12*a) + 2*Lambda*a^3"]];
        let err = check_expected(&m.source, &e).unwrap_err();
        assert_eq!(err.field, "generation 1");
        assert_eq!(err.expected, "-(p_a^2)/(12*a) + 2*Lambda*a^3");
        let mut e = m.expected.clone();
        e.parameters = &["tau"];
        assert_eq!(check_expected(&m.source, &e).unwrap_err().field, "parameters");
    }

    #[test]
    fn sign_flipped_constraint_still_matches() {
        let m = builtin("frw_lambda").unwrap();
        let mut e = m.expected.clone();
        e.generations = &[&["p_a^2/(12*a) - Lambda*a^3"]];
        assert_eq!(check_expected(&m.source, &e), Ok(()));
    }

    #[test]
    fn builtins_validate_cleanly() {
        for m in builtins() {
            assert_eq!(validate_model(&m.source), [], "{}", m.source.name);
        }
    }

    #[test]
    fn validation_findings() {
        let rel = ModelSource::new("rel", &["x"], &["m"], "-m*sqrt(1 - dx^2)");
        let f = validate_model(&rel);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].severity, Severity::Error);
        assert!(f[0].message.contains("nonlinear momentum relation"), "{}", f[0]);

        let undeclared = validate_model(&ModelSource::new("u", &["x"], &[], "1/2*dx^2 - z*x"));
        assert_eq!(undeclared.len(), 1);
        assert!(undeclared[0].message.contains("`z`"));

        let timed = validate_model(&ModelSource::new("t", &["x"], &[], "1/2*dx^2 - tau*x"));
        assert!(timed[0].message.contains("autonomous"));
        let mom = validate_model(&ModelSource::new("p", &["x"], &[], "1/2*dx^2 - p_x"));
        assert!(mom[0].message.contains("p_x"));
        let unused = validate_model(&ModelSource::new("w", &["x"], &["k"], "1/2*dx^2"));
        assert_eq!(unused, [Finding::warning("constant `k` is declared but unused".into())]);
        assert!(!has_errors(&unused));
        assert!(has_errors(&validate_model(&ModelSource::new("e", &[], &[], "0"))));
        assert!(has_errors(&validate_model(&ModelSource::new("d", &["x", "x"], &[], "dx"))));
        assert!(has_errors(&validate_model(&ModelSource::new("s", &["x"], &[], "dx +"))));
    }
}
