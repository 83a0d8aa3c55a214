//! Canonical path-integral representation of an integrable system and the
//! measure comparison records.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::canonical::CanonicalSystem;
use crate::integrability::{action_one_form, ClosureReport, ClosureStatus, OneForm};
use crate::symcore::{Expr, RatFun, Symbol};

pub const FLAT_MEASURE: &str = "flat over listed canonical pairs";

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PathIntegralError {
    #[error("closure status is {0}; a path integral needs an integrable system")]
    NotIntegrable(ClosureStatus),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathIntegralSpec {
    /// Expressible pairs `(q_a, p_a)`.
    pub integration_variables: Vec<(Symbol, Symbol)>,
    /// Independent parameter times.
    pub parameter_variables: Vec<Symbol>,
    /// `-H_alpha + sum_a p_a dH'_alpha/dp_a` per parameter.
    pub integrand: OneForm,
    pub measure: String,
    /// Constraints that hold on the surface where the integral lives.
    pub side_conditions: Vec<RatFun>,
}

impl PathIntegralSpec {
    /// One-line formula in the expression grammar, e.g.
    /// `Integral[d(a) d(p_a)] exp(i*Integral[(...)*dtau + (...)*dN])`.
    pub fn formula(&self) -> String {
        let vars: Vec<String> =
            self.integration_variables.iter().map(|(q, p)| format!("d({q}) d({p})")).collect();
        format!("Integral[{}] exp(i*Integral[{}])", vars.join(" "), self.integrand)
    }
}

/// Assembles the path integral from an integrable closure.
pub fn emit_path_integral(cs: &CanonicalSystem, report: &ClosureReport) -> Result<PathIntegralSpec, PathIntegralError> {
    if report.status != ClosureStatus::Integrable {
        return Err(PathIntegralError::NotIntegrable(report.status));
    }
    let full = action_one_form(cs);
    let integrand = OneForm {
        terms: full.terms.into_iter().filter(|(t, _)| report.independent_parameters.contains(t)).collect(),
    };
    Ok(PathIntegralSpec {
        integration_variables: cs.expressible_pairs(),
        parameter_variables: report.independent_parameters.clone(),
        integrand,
        measure: FLAT_MEASURE.to_string(),
        side_conditions: report.constraints().map(|c| c.expression.clone()).collect(),
    })
}

/// Renders side conditions as `<expr> = 0`.
pub fn side_condition_strings(spec: &PathIntegralSpec) -> Vec<String> {
    spec.side_conditions.iter().map(|c| format!("{} = 0", Expr::from(c))).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureEntry {
    pub method: &'static str,
    pub formula: &'static str,
    pub note: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureComparison {
    pub model: String,
    pub canonical_entry: MeasureEntry,
    pub faddeev_popov_entry: MeasureEntry,
    pub fradkin_vilkovisky_entry: MeasureEntry,
}

/// Fixed documentation records contrasting the canonical measure with the
/// local measures of the gauge-fixed treatments of gravity.
pub fn measure_report(model_name: &str) -> MeasureComparison {
    MeasureComparison {
        model: model_name.to_string(),
        canonical_entry: MeasureEntry {
            method: "canonical Hamilton-Jacobi",
            formula: "prod_t prod_a dq_a dp_a",
            note: "flat measure over the canonical pairs (q_a, p_a); no determinant factors; \
                   no delta functions, no gauge fixing",
        },
        faddeev_popov_entry: MeasureEntry {
            method: "Faddeev-Popov",
            formula: "dM = prod_x (-g)^(5/2) prod_{mu<=nu} dg^{mu nu}",
            note: "local measure of the gauge-fixed metric path integral",
        },
        fradkin_vilkovisky_entry: MeasureEntry {
            method: "Fradkin-Vilkovisky",
            formula: "dM = prod_x (-g)^(7/2)·g^00 prod_{mu<=nu} dg^{mu nu}",
            note: "local measure of the gauge-fixed metric path integral",
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{build_hjpde_set, ModelDefinition};
    use crate::integrability::constraint_closure;

    fn emit(coords: &[&str], consts: &[&str], l: &str) -> (CanonicalSystem, Result<PathIntegralSpec, PathIntegralError>) {
        let cs = build_hjpde_set(&ModelDefinition::new("m", coords, consts, l).unwrap()).unwrap();
        let r = constraint_closure(&cs).unwrap();
        let spec = emit_path_integral(&cs, &r);
        (cs, spec)
    }

    fn names(v: &[Symbol]) -> Vec<&str> {
        v.iter().map(|s| s.name()).collect()
    }

    #[test]
    fn oscillator_integrates_over_both_pairs() {
        let (cs, spec) = emit(&["x", "y"], &[], "1/2*(dx^2+dy^2) - 1/2*(x^2+y^2)");
        let spec = spec.unwrap();
        let pairs: Vec<(&str, &str)> = spec.integration_variables.iter().map(|(q, p)| (q.name(), p.name())).collect();
        assert_eq!(pairs, [("x", "p_x"), ("y", "p_y")]);
        assert_eq!(names(&spec.parameter_variables), ["tau"]);
        assert_eq!(spec.integrand.coefficient(cs.table().tau()), cs.model.parse("1/2*(p_x^2+p_y^2) - 1/2*(x^2+y^2)").unwrap());
        assert_eq!(spec.measure, FLAT_MEASURE);
    }

    #[test]
    fn frw_integrates_over_scale_factor() {
        let (cs, spec) = emit(&["N", "a"], &["Lambda"], "-3*a*da^2/N - N*Lambda*a^3");
        let spec = spec.unwrap();
        let pairs: Vec<(&str, &str)> = spec.integration_variables.iter().map(|(q, p)| (q.name(), p.name())).collect();
        assert_eq!(pairs, [("a", "p_a")]);
        assert_eq!(names(&spec.parameter_variables), ["tau", "N"]);
        let tau = cs.table().tau();
        assert_eq!(spec.integrand.coefficient(tau), cs.model.parse("-N*p_a^2/(12*a) - N*Lambda*a^3").unwrap());
        assert_eq!(spec.side_conditions.len(), 1);
        let f = spec.formula();
        assert!(f.starts_with("Integral[d(a) d(p_a)]"), "{f}");
        assert!(!f.contains("delta"));
    }

    #[test]
    fn shifted_velocity_and_refusal() {
        let (_, spec) = emit(&["x", "y"], &[], "1/2*(dx-y)^2");
        let spec = spec.unwrap();
        assert_eq!(spec.integration_variables.len(), 1);
        assert_eq!(names(&spec.parameter_variables), ["tau", "y"]);
        let (_, refused) = emit(&["x", "y"], &[], "1/2*dx^2 + x*dy");
        assert_eq!(refused, Err(PathIntegralError::NotIntegrable(ClosureStatus::ParameterFixing)));
    }

    #[test]
    fn measure_strings() {
        let m = measure_report("frw");
        assert!(m.faddeev_popov_entry.formula.contains("(-g)^(5/2)"));
        assert!(m.fradkin_vilkovisky_entry.formula.contains("(-g)^(7/2)·g^00"));
        assert!(m.canonical_entry.note.contains("no delta functions, no gauge fixing"));
    }
}
