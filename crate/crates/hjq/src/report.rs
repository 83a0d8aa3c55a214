//! Analysis report: construction, JSON and text rendering.

use std::fmt::Write as _;

use hjq_core::canonical::{nonvanishing, CanonicalSystem};
use hjq_core::integrability::{second_class_probe, ClosureReport, ClosureStatus};
use hjq_core::models::ModelSource;
use hjq_core::pathint::{emit_path_integral, measure_report, side_condition_strings, MeasureEntry};
use hjq_core::symcore::{Expr, RatFun};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "hjq";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn show(r: &RatFun) -> String {
    Expr::from(r).to_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub input_sha256: String,
    pub model: ModelEcho,
    pub hessian: HessianSummary,
    pub hamiltonian: HamiltonianSummary,
    pub generators: Vec<GeneratorEntry>,
    pub closure: ClosureSummary,
    pub path_integral: Option<PathIntegralSummary>,
    pub measures: MeasureSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelEcho {
    pub name: String,
    pub coordinates: Vec<String>,
    pub constants: Vec<String>,
    pub lagrangian: String,
    pub lagrangian_canonical: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct HessianSummary {
    pub rank: usize,
    pub matrix: Vec<Vec<String>>,
    pub expressible: Vec<String>,
    pub unexpressible: Vec<String>,
    pub side_conditions: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Assignment {
    pub symbol: String,
    pub expression: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianSummary {
    pub momenta: Vec<Assignment>,
    pub solved_velocities: Vec<Assignment>,
    pub h0: String,
    pub h_mu: Vec<Assignment>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorEntry {
    pub label: String,
    pub parameter: String,
    pub expression: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintEntry {
    pub label: String,
    pub expression: String,
    pub origin: [String; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct FixingEntry {
    pub parameter: String,
    pub bracket: [String; 2],
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketEntry {
    pub bracket: [String; 2],
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosureSummary {
    pub status: String,
    pub generations: Vec<Vec<ConstraintEntry>>,
    pub independent_parameters: Vec<String>,
    pub fixed_parameters: Vec<FixingEntry>,
    pub conflicts: Vec<BracketEntry>,
    pub probabilistic: bool,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegrandTerm {
    pub parameter: String,
    pub coefficient: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PathIntegralSummary {
    pub integration_variables: Vec<[String; 2]>,
    pub parameter_variables: Vec<String>,
    pub integrand: Vec<IntegrandTerm>,
    pub measure: String,
    pub side_conditions: Vec<String>,
    pub formula: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureText {
    pub method: String,
    pub formula: String,
    pub note: String,
}

impl From<&MeasureEntry> for MeasureText {
    fn from(e: &MeasureEntry) -> Self {
        MeasureText { method: e.method.into(), formula: e.formula.into(), note: e.note.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureSummary {
    pub canonical: MeasureText,
    pub faddeev_popov: MeasureText,
    pub fradkin_vilkovisky: MeasureText,
}

fn assignments<'a>(it: impl Iterator<Item = (&'a hjq_core::symcore::Symbol, &'a RatFun)>) -> Vec<Assignment> {
    it.map(|(s, e)| Assignment { symbol: s.name().into(), expression: show(e) }).collect()
}

impl ReportDocument {
    pub fn build(source: &ModelSource, input: &[u8], cs: &CanonicalSystem, closure: &ClosureReport) -> Self {
        let t = cs.table();
        let h = &cs.hessian;
        let names = |idx: &[usize]| idx.iter().map(|&i| t.coordinate(i).name().to_string()).collect();
        let hessian = HessianSummary {
            rank: h.rank,
            matrix: (0..h.matrix.rows()).map(|i| h.matrix.row(i).iter().map(show).collect()).collect(),
            expressible: names(&h.expressible),
            unexpressible: names(&h.unexpressible),
            side_conditions: h.side_conditions.iter().map(nonvanishing).collect(),
        };
        let momenta = assignments(
            (0..t.coordinate_count()).map(|i| (t.momentum(i), &cs.momenta[t.coordinate(i)])),
        );
        let hamiltonian = HamiltonianSummary {
            momenta,
            solved_velocities: assignments(cs.solved_velocities.iter()),
            h0: show(&cs.h0),
            h_mu: assignments(cs.h_mu.iter().map(|(s, e)| (s, e))),
        };
        let generators = cs
            .generators
            .iter()
            .map(|g| GeneratorEntry { label: g.label.clone(), parameter: g.time.name().into(), expression: show(&g.full) })
            .collect();
        let diagnostic = (closure.status == ClosureStatus::ParameterFixing)
            .then(|| second_class_probe(cs, closure).ok())
            .flatten();
        let closure_summary = ClosureSummary {
            status: closure.status.as_str().into(),
            generations: closure
                .generations
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|c| ConstraintEntry {
                            label: c.label.clone(),
                            expression: show(&c.expression),
                            origin: [c.origin.0.clone(), c.origin.1.clone()],
                        })
                        .collect()
                })
                .collect(),
            independent_parameters: closure.independent_parameters.iter().map(|s| s.name().into()).collect(),
            fixed_parameters: closure
                .fixings
                .iter()
                .map(|f| FixingEntry {
                    parameter: f.parameter.name().into(),
                    bracket: [f.bracket.left.clone(), f.bracket.right.clone()],
                    value: show(&f.bracket.value),
                })
                .collect(),
            conflicts: closure
                .conflicts
                .iter()
                .map(|b| BracketEntry { bracket: [b.left.clone(), b.right.clone()], value: show(&b.value) })
                .collect(),
            probabilistic: closure.probabilistic,
            diagnostic,
        };
        let path_integral = emit_path_integral(cs, closure).ok().map(|spec| PathIntegralSummary {
            integration_variables: spec
                .integration_variables
                .iter()
                .map(|(q, p)| [q.name().to_string(), p.name().to_string()])
                .collect(),
            parameter_variables: spec.parameter_variables.iter().map(|s| s.name().into()).collect(),
            integrand: spec
                .integrand
                .terms
                .iter()
                .map(|(t, c)| IntegrandTerm { parameter: t.name().into(), coefficient: show(c) })
                .collect(),
            measure: spec.measure.clone(),
            side_conditions: side_condition_strings(&spec),
            formula: spec.formula(),
        });
        let m = measure_report(&source.name);
        ReportDocument {
            tool: TOOL.into(),
            version: VERSION.into(),
            input_sha256: sha256_hex(input),
            model: ModelEcho {
                name: source.name.clone(),
                coordinates: source.coordinates.clone(),
                constants: source.constants.clone(),
                lagrangian: source.lagrangian.clone(),
                lagrangian_canonical: show(cs.model.lagrangian_ratfun()),
            },
            hessian,
            hamiltonian,
            generators,
            closure: closure_summary,
            path_integral,
            measures: MeasureSummary {
                canonical: (&m.canonical_entry).into(),
                faddeev_popov: (&m.faddeev_popov_entry).into(),
                fradkin_vilkovisky: (&m.fradkin_vilkovisky_entry).into(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let m = &self.model;
        let _ = writeln!(o, "model {}", m.name);
        let _ = writeln!(o, "  coordinates: {}", m.coordinates.join(", "));
        if !m.constants.is_empty() {
            let _ = writeln!(o, "  constants:   {}", m.constants.join(", "));
        }
        let _ = writeln!(o, "  L = {}", m.lagrangian_canonical);
        let _ = writeln!(o, "  input sha256 {}", self.input_sha256);

        let h = &self.hessian;
        let _ = writeln!(o, "\nhessian (rank {})", h.rank);
        for row in &h.matrix {
            let _ = writeln!(o, "  [{}]", row.join(", "));
        }
        let _ = writeln!(o, "  expressible:   {}", list(&h.expressible));
        let _ = writeln!(o, "  unexpressible: {}", list(&h.unexpressible));
        for c in &h.side_conditions {
            let _ = writeln!(o, "  assuming {c}");
        }

        let hm = &self.hamiltonian;
        let _ = writeln!(o, "\nhamiltonian");
        for a in &hm.momenta {
            let _ = writeln!(o, "  {} = {}", a.symbol, a.expression);
        }
        for a in &hm.solved_velocities {
            let _ = writeln!(o, "  {} = {}", a.symbol, a.expression);
        }
        let _ = writeln!(o, "  H_0 = {}", hm.h0);
        for a in &hm.h_mu {
            let _ = writeln!(o, "  H_{} = {}", a.symbol, a.expression);
        }

        let _ = writeln!(o, "\ngenerators");
        for g in &self.generators {
            let _ = writeln!(o, "  {} = {}    (d{})", g.label, g.expression, g.parameter);
        }

        let c = &self.closure;
        let _ = writeln!(o, "\nclosure: {}", c.status);
        for (k, g) in c.generations.iter().enumerate() {
            let _ = writeln!(o, "  generation {}", k + 1);
            for e in g {
                let _ = writeln!(o, "    {} = {}    from [{}, {}]", e.label, e.expression, e.origin[0], e.origin[1]);
            }
        }
        let _ = writeln!(o, "  independent parameters: {}", list(&c.independent_parameters));
        for f in &c.fixed_parameters {
            let _ = writeln!(o, "  fixed: {} by [{}, {}] = {}", f.parameter, f.bracket[0], f.bracket[1], f.value);
        }
        for b in &c.conflicts {
            let _ = writeln!(o, "  conflict: [{}, {}] = {}", b.bracket[0], b.bracket[1], b.value);
        }
        if c.probabilistic {
            let _ = writeln!(o, "  note: some zero tests were decided by numeric probing");
        }
        if let Some(d) = &c.diagnostic {
            for line in d.lines() {
                let _ = writeln!(o, "  {line}");
            }
        }

        let _ = writeln!(o, "\npath integral");
        match &self.path_integral {
            None => {
                let _ = writeln!(o, "  not emitted: closure status is {}", c.status);
            }
            Some(p) => {
                let vars: Vec<String> = p.integration_variables.iter().map(|[q, p]| format!("({q}, {p})")).collect();
                let _ = writeln!(o, "  over:       {}", list(&vars));
                let _ = writeln!(o, "  parameters: {}", list(&p.parameter_variables));
                let _ = writeln!(o, "  measure:    {}", p.measure);
                let _ = writeln!(o, "  {}", p.formula);
                for s in &p.side_conditions {
                    let _ = writeln!(o, "  on {s}");
                }
            }
        }

        let _ = writeln!(o, "\nmeasures");
        for e in [&self.measures.canonical, &self.measures.faddeev_popov, &self.measures.fradkin_vilkovisky] {
            let _ = writeln!(o, "  {}: {}", e.method, e.formula);
            let _ = writeln!(o, "    {}", e.note);
        }
        let _ = writeln!(o, "\n{} {}", self.tool, self.version);
        o
    }
}

fn list(v: &[String]) -> String {
    if v.is_empty() {
        "(none)".into()
    } else {
        v.join(", ")
    }
}
