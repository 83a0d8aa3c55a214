//! Command-line path and initial-value arguments, and flow output files.

use std::io::Write;

use hjq_core::numflow::{FlowResult, ParameterPath};
use hjq_core::symcore::{Symbol, SymbolTable};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("expected `name=value`, got `{0}`")]
    Assignment(String),
    #[error("`{0}` is not a number")]
    Number(String),
    #[error("unknown symbol `{0}`")]
    Unknown(String),
    #[error("`{0}` assigned twice")]
    Duplicate(String),
    #[error("{0}")]
    Path(String),
}

/// A number, optionally written as a multiple of `pi` (`pi`, `2*pi`, `0.5pi`).
pub fn parse_value(text: &str) -> Result<f64, SpecError> {
    let t = text.trim();
    let number = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let v = if let Some(k) = t.strip_suffix("pi") {
        let k = k.trim().trim_end_matches('*');
        match k.trim() {
            "" => Some(std::f64::consts::PI),
            "-" => Some(-std::f64::consts::PI),
            k => number(k).map(|k| k * std::f64::consts::PI),
        }
    } else {
        number(t)
    };
    v.ok_or_else(|| SpecError::Number(t.to_string()))
}

/// Parses `name=value, name=value` against `table`.
pub fn parse_assignments(text: &str, table: &SymbolTable) -> Result<Vec<(Symbol, f64)>, SpecError> {
    let mut out: Vec<(Symbol, f64)> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part.split_once('=').ok_or_else(|| SpecError::Assignment(part.to_string()))?;
        let name = name.trim();
        let sym = table.lookup(name).ok_or_else(|| SpecError::Unknown(name.to_string()))?;
        if out.iter().any(|(s, _)| s == sym) {
            return Err(SpecError::Duplicate(name.to_string()));
        }
        out.push((sym.clone(), parse_value(value)?));
    }
    Ok(out)
}

/// Parses `tau=0,N=1 ; tau=1,N=1`.
pub fn parse_path(text: &str, table: &SymbolTable) -> Result<ParameterPath, SpecError> {
    let waypoints = text
        .split(';')
        .map(|w| parse_assignments(w, table))
        .collect::<Result<Vec<_>, _>>()?;
    ParameterPath::from_named(&waypoints).map_err(|e| SpecError::Path(e.to_string()))
}

/// CSV columns: `s`, `tau`, coordinates, momenta, `Z`, constraint residuals.
pub fn write_csv<W: Write>(result: &FlowResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["s".to_string()];
    header.extend(result.state_names.iter().cloned());
    header.push("Z".into());
    header.extend(result.constraint_labels.iter().cloned());
    w.write_record(&header)?;
    for s in &result.samples {
        let mut row = vec![fmt(s.s)];
        row.extend(s.state.iter().map(|v| fmt(*v)));
        row.push(fmt(s.z));
        row.extend(s.residuals.iter().map(|v| fmt(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowSummary {
    pub tool: String,
    pub version: String,
    pub input_sha256: String,
    pub model: String,
    pub parameters: Vec<String>,
    pub waypoints: Vec<Vec<f64>>,
    pub path_length: f64,
    pub step: f64,
    pub tolerance: f64,
    pub steps: usize,
    pub initial_state: Vec<NamedValue>,
    pub final_state: Vec<NamedValue>,
    pub action: f64,
    pub max_constraint_residual: f64,
    pub within_tolerance: bool,
    pub csv: String,
}

impl FlowSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

pub fn named(names: &[String], values: &[f64]) -> Vec<NamedValue> {
    names.iter().zip(values).map(|(n, v)| NamedValue { name: n.clone(), value: *v }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frw() -> SymbolTable {
        SymbolTable::for_model(&["N", "a"], &["Lambda"]).unwrap()
    }

    #[test]
    fn values() {
        assert_eq!(parse_value(" 1.5 ").unwrap(), 1.5);
        assert_eq!(parse_value("2*pi").unwrap(), 2.0 * std::f64::consts::PI);
        assert_eq!(parse_value("pi").unwrap(), std::f64::consts::PI);
        assert_eq!(parse_value("-pi").unwrap(), -std::f64::consts::PI);
        assert_eq!(parse_value("1e-3").unwrap(), 1e-3);
        assert!(parse_value("two").is_err());
        assert!(parse_value("inf").is_err());
    }

    #[test]
    fn paths_and_assignments() {
        let t = frw();
        let p = parse_path("tau=0,N=1 ; tau=1,N=1", &t).unwrap();
        let names: Vec<&str> = p.parameters().iter().map(|s| s.name()).collect();
        assert_eq!(names, ["tau", "N"]);
        assert_eq!(p.waypoints(), [vec![0.0, 1.0], vec![1.0, 1.0]]);
        let q = parse_path("N=1, tau=0; tau=1, N=2", &t).unwrap();
        assert_eq!(q.waypoints(), [vec![1.0, 0.0], vec![2.0, 1.0]]);
        assert!(parse_path("tau=0", &t).is_err());
        assert!(parse_path("tau=0; N=1", &t).is_err());
        let a = parse_assignments("a=1, p_a=0", &t).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(parse_assignments("b=1", &t), Err(SpecError::Unknown("b".into())));
        assert_eq!(parse_assignments("a=1,a=2", &t), Err(SpecError::Duplicate("a".into())));
        assert_eq!(parse_assignments("a", &t), Err(SpecError::Assignment("a".into())));
    }
}
