//! Numerical integration of the total differential equations along a
//! piecewise-linear path in parameter space.
//!
//! Symbolic coefficients are compiled once into stack programs. Stepping is
//! classical fixed-step RK4 in the arc length `s` of the path.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::canonical::CanonicalSystem;
use crate::integrability::{action_one_form, bracket_in, ClosureReport, IntegrabilityError};
use crate::symcore::{rational_to_f64, Atom, Expr, Func, Poly, RatFun, Symbol, SymbolKind};

/// On-surface tolerance for initial data.
pub const INITIAL_TOLERANCE: f64 = 1e-10;
/// Central-difference step of [`finite_difference_check`].
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Bracket(#[from] IntegrabilityError),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("no value given for `{0}`")]
    MissingValue(String),
    #[error("`{0}` cannot be assigned here")]
    UnexpectedValue(String),
    #[error("singular evaluation of {what} at s = {s}")]
    Singular { what: String, s: f64 },
    #[error("initial data is off the constraint surface: {constraint} = {residual:e}")]
    InitialData { constraint: String, residual: f64 },
    #[error("paths must share their first and last waypoints")]
    EndpointMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Add,
    Mul,
    Div,
    Pow(i32),
    Apply(Func),
}

/// Stack program for one polynomial, with function arguments inlined.
#[derive(Clone, Debug, PartialEq)]
struct Program(Vec<Op>);

impl Program {
    fn compile(p: &Poly) -> Program {
        let mut ops = Vec::new();
        emit_poly(p, &mut ops);
        Program(ops)
    }

    fn run(&self, env: &[f64], stack: &mut Vec<f64>) -> f64 {
        stack.clear();
        for op in &self.0 {
            match *op {
                Op::Const(c) => stack.push(c),
                Op::Var(i) => stack.push(env[i]),
                Op::Pow(e) => {
                    let x = stack.pop().expect("operand");
                    stack.push(crate::symcore::powi(x, e));
                }
                Op::Apply(f) => {
                    let x = stack.pop().expect("operand");
                    stack.push(f.apply_f64(x));
                }
                Op::Add | Op::Mul | Op::Div => {
                    let b = stack.pop().expect("operand");
                    let a = stack.pop().expect("operand");
                    stack.push(match op {
                        Op::Add => a + b,
                        Op::Mul => a * b,
                        _ => a / b,
                    });
                }
            }
        }
        stack.pop().expect("result")
    }
}

fn emit_poly(p: &Poly, ops: &mut Vec<Op>) {
    let mut first = true;
    for (m, c) in p.terms() {
        ops.push(Op::Const(rational_to_f64(c)));
        for (a, e) in m.factors() {
            match a {
                Atom::Sym(s) => ops.push(Op::Var(s.id() as usize)),
                Atom::Func(f, arg) => {
                    emit_poly(arg.numer(), ops);
                    if !arg.denom().is_one() {
                        emit_poly(arg.denom(), ops);
                        ops.push(Op::Div);
                    }
                    ops.push(Op::Apply(*f));
                }
            }
            if *e > 1 {
                ops.push(Op::Pow(*e as i32));
            }
            ops.push(Op::Mul);
        }
        if !first {
            ops.push(Op::Add);
        }
        first = false;
    }
    if first {
        ops.push(Op::Const(0.0));
    }
}

/// A rational function compiled for repeated numeric evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Compiled {
    label: String,
    num: Program,
    den: Option<Program>,
}

impl Compiled {
    pub fn new(label: impl Into<String>, f: &RatFun) -> Self {
        let den = if f.denom().is_one() { None } else { Some(Program::compile(f.denom())) };
        Compiled { label: label.into(), num: Program::compile(f.numer()), den }
    }

    /// Value at `env` (indexed by symbol id); `None` on a vanishing
    /// denominator or a non-finite result.
    pub fn eval(&self, env: &[f64], stack: &mut Vec<f64>) -> Option<f64> {
        let n = self.num.run(env, stack);
        let v = match &self.den {
            None => n,
            Some(d) => {
                let d = d.run(env, stack);
                if d == 0.0 {
                    return None;
                }
                n / d
            }
        };
        v.is_finite().then_some(v)
    }

    fn eval_at(&self, env: &[f64], stack: &mut Vec<f64>, s: f64) -> Result<f64, FlowError> {
        self.eval(env, stack).ok_or_else(|| FlowError::Singular { what: self.label.clone(), s })
    }
}

/// Piecewise-linear path through parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPath {
    parameters: Vec<Symbol>,
    waypoints: Vec<Vec<f64>>,
}

impl ParameterPath {
    pub fn new(parameters: Vec<Symbol>, waypoints: Vec<Vec<f64>>) -> Result<Self, FlowError> {
        if waypoints.len() < 2 {
            return Err(FlowError::InvalidPath("at least two waypoints are required".into()));
        }
        if let Some(w) = waypoints.iter().find(|w| w.len() != parameters.len()) {
            return Err(FlowError::InvalidPath(format!(
                "waypoint has {} values for {} parameters",
                w.len(),
                parameters.len()
            )));
        }
        if waypoints.iter().flatten().any(|x| !x.is_finite()) {
            return Err(FlowError::InvalidPath("non-finite waypoint coordinate".into()));
        }
        for (i, p) in parameters.iter().enumerate() {
            if parameters[..i].contains(p) {
                return Err(FlowError::InvalidPath(format!("`{p}` listed twice")));
            }
        }
        Ok(ParameterPath { parameters, waypoints })
    }

    /// Builds a path from named waypoints; every waypoint must name the
    /// same parameters.
    pub fn from_named(waypoints: &[Vec<(Symbol, f64)>]) -> Result<Self, FlowError> {
        let first = waypoints.first().ok_or_else(|| FlowError::InvalidPath("empty path".into()))?;
        let parameters: Vec<Symbol> = first.iter().map(|(s, _)| s.clone()).collect();
        let mut rows = Vec::with_capacity(waypoints.len());
        for w in waypoints {
            let mut row = Vec::with_capacity(parameters.len());
            for p in &parameters {
                let v = w
                    .iter()
                    .find(|(s, _)| s == p)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| FlowError::InvalidPath(format!("waypoint is missing `{p}`")))?;
                row.push(v);
            }
            if w.len() != parameters.len() {
                return Err(FlowError::InvalidPath("waypoints name different parameters".into()));
            }
            rows.push(row);
        }
        Self::new(parameters, rows)
    }

    pub fn parameters(&self) -> &[Symbol] {
        &self.parameters
    }

    pub fn waypoints(&self) -> &[Vec<f64>] {
        &self.waypoints
    }

    pub fn start(&self) -> &[f64] {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &[f64] {
        &self.waypoints[self.waypoints.len() - 1]
    }

    /// Value of parameter `p` at the first waypoint.
    pub fn start_value(&self, p: &Symbol) -> Option<f64> {
        self.parameters.iter().position(|x| x == p).map(|i| self.waypoints[0][i])
    }

    /// Euclidean arc length.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| distance(&w[0], &w[1])).sum()
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSample {
    pub s: f64,
    pub state: Vec<f64>,
    pub z: f64,
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult {
    /// `tau`, the coordinates, then their momenta.
    pub state_names: Vec<String>,
    pub constraint_labels: Vec<String>,
    pub samples: Vec<FlowSample>,
    pub max_constraint_residual: f64,
    pub final_state: Vec<f64>,
}

impl FlowResult {
    pub fn final_z(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.z)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.state_names.iter().position(|n| n == name).map(|i| self.final_state[i])
    }
}

/// Compiled right-hand side for one path.
struct FlowSystem {
    state: Vec<Symbol>,
    /// `rhs[k][j] = [state_k, H'_j]` for the path parameters `j`.
    rhs: Vec<Vec<Compiled>>,
    action: Vec<Compiled>,
    constraints: Vec<Compiled>,
    env: Vec<f64>,
    stack: Vec<f64>,
}

impl FlowSystem {
    fn build(
        cs: &CanonicalSystem,
        report: &ClosureReport,
        path: &ParameterPath,
        initial: &BTreeMap<Symbol, f64>,
    ) -> Result<(Self, Vec<f64>), FlowError> {
        let t = cs.table();
        let params = path.parameters();
        for p in params {
            if !report.independent_parameters.contains(p) {
                return Err(FlowError::InvalidPath(format!("`{p}` is not an independent parameter")));
            }
        }
        if let Some(p) = report.independent_parameters.iter().find(|p| !params.contains(p)) {
            return Err(FlowError::InvalidPath(format!("path does not cover parameter `{p}`")));
        }
        let mut state = vec![t.tau().clone()];
        state.extend(t.coordinates().cloned());
        state.extend((0..t.coordinate_count()).map(|i| t.momentum(i).clone()));

        for s in initial.keys() {
            let allowed = matches!(s.kind(), SymbolKind::Coordinate | SymbolKind::Constant)
                || (s.is_momentum() && s != t.p_tau());
            if !allowed || params.contains(s) {
                return Err(FlowError::UnexpectedValue(s.name().to_string()));
            }
        }
        let mut env = vec![0.0; t.len()];
        for c in t.constants() {
            env[c.id() as usize] = *initial.get(c).ok_or_else(|| FlowError::MissingValue(c.name().to_string()))?;
        }
        let mut y0 = Vec::with_capacity(state.len());
        for s in &state {
            let v = if let Some(v) = path.start_value(s) {
                v
            } else if let Some(v) = initial.get(s) {
                *v
            } else if s.is_momentum() {
                0.0
            } else {
                return Err(FlowError::MissingValue(s.name().to_string()));
            };
            y0.push(v);
        }

        let generators: Vec<_> = params
            .iter()
            .map(|p| cs.generator(p).expect("independent parameter has a generator"))
            .collect();
        let mut rhs = Vec::with_capacity(state.len());
        for s in &state {
            let sf = RatFun::symbol(s);
            let row = generators
                .iter()
                .map(|g| Ok(Compiled::new(format!("[{s}, {}]", g.label), &bracket_in(t, &sf, &g.full)?)))
                .collect::<Result<Vec<_>, FlowError>>()?;
            rhs.push(row);
        }
        let form = action_one_form(cs);
        let action = params.iter().map(|p| Compiled::new(format!("dZ/d{p}"), &form.coefficient(p))).collect();
        let constraints = constraint_set(cs, report).iter().map(|(l, c)| Compiled::new(l.clone(), c)).collect();
        Ok((FlowSystem { state, rhs, action, constraints, env, stack: Vec::new() }, y0))
    }

    fn load(&mut self, y: &[f64]) {
        for (s, v) in self.state.iter().zip(y) {
            self.env[s.id() as usize] = *v;
        }
    }

    /// `dy/ds` and `dZ/ds` for direction `dir = dt/ds`.
    fn derivative(&mut self, y: &[f64], dir: &[f64], s: f64, out: &mut [f64]) -> Result<f64, FlowError> {
        self.load(y);
        for (k, row) in self.rhs.iter().enumerate() {
            let mut acc = 0.0;
            for (c, d) in row.iter().zip(dir) {
                if *d != 0.0 {
                    acc += c.eval_at(&self.env, &mut self.stack, s)? * d;
                }
            }
            out[k] = acc;
        }
        let mut dz = 0.0;
        for (c, d) in self.action.iter().zip(dir) {
            if *d != 0.0 {
                dz += c.eval_at(&self.env, &mut self.stack, s)? * d;
            }
        }
        Ok(dz)
    }

    fn residuals(&mut self, y: &[f64], s: f64) -> Result<Vec<f64>, FlowError> {
        self.load(y);
        self.constraints.iter().map(|c| c.eval_at(&self.env, &mut self.stack, s)).collect()
    }
}

/// Constraints checked along a flow: every `H'_mu` and every closure
/// constraint. `H'_0` is excluded since `p_tau` is not tracked.
pub fn constraint_set(cs: &CanonicalSystem, report: &ClosureReport) -> Vec<(String, RatFun)> {
    let mut out: Vec<(String, RatFun)> =
        cs.generators.iter().skip(1).map(|g| (g.label.clone(), g.full.clone())).collect();
    out.extend(report.constraints().map(|c| (c.label.clone(), c.expression.clone())));
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
}

/// Integrates from on-surface initial data. `initial` assigns coordinates
/// not on the path, momenta (default 0) and every constant.
pub fn integrate_flow(
    cs: &CanonicalSystem,
    report: &ClosureReport,
    path: &ParameterPath,
    initial: &BTreeMap<Symbol, f64>,
    step: f64,
) -> Result<FlowResult, FlowError> {
    run(cs, report, path, initial, step, true)
}

/// As [`integrate_flow`] but without the on-surface precondition, for
/// studying drift of perturbed data.
pub fn integrate_flow_unchecked(
    cs: &CanonicalSystem,
    report: &ClosureReport,
    path: &ParameterPath,
    initial: &BTreeMap<Symbol, f64>,
    step: f64,
) -> Result<FlowResult, FlowError> {
    run(cs, report, path, initial, step, false)
}

fn run(
    cs: &CanonicalSystem,
    report: &ClosureReport,
    path: &ParameterPath,
    initial: &BTreeMap<Symbol, f64>,
    step: f64,
    check_initial: bool,
) -> Result<FlowResult, FlowError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(FlowError::InvalidStep(step));
    }
    let (mut sys, mut y) = FlowSystem::build(cs, report, path, initial)?;
    let labels: Vec<String> = constraint_set(cs, report).into_iter().map(|(l, _)| l).collect();
    let r0 = sys.residuals(&y, 0.0)?;
    if check_initial {
        if let Some((i, r)) = r0.iter().enumerate().find(|(_, r)| r.is_nan() || libm::fabs(**r) >= INITIAL_TOLERANCE) {
            return Err(FlowError::InitialData { constraint: labels[i].clone(), residual: *r });
        }
    }
    let dim = y.len();
    let mut max_residual = max_abs(&r0);
    let mut samples = vec![FlowSample { s: 0.0, state: y.clone(), z: 0.0, residuals: r0 }];
    let (mut s, mut z) = (0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    for w in path.waypoints().windows(2) {
        let len = distance(&w[0], &w[1]);
        if len == 0.0 {
            continue;
        }
        let dir: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| (b - a) / len).collect();
        let n = libm::ceil(len / step).max(1.0) as usize;
        let h = len / n as f64;
        for _ in 0..n {
            let z1 = sys.derivative(&y, &dir, s, &mut k1)?;
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            let z2 = sys.derivative(&tmp, &dir, s + 0.5 * h, &mut k2)?;
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            let z3 = sys.derivative(&tmp, &dir, s + 0.5 * h, &mut k3)?;
            for i in 0..dim {
                tmp[i] = y[i] + h * k3[i];
            }
            let z4 = sys.derivative(&tmp, &dir, s + h, &mut k4)?;
            for i in 0..dim {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            z += h / 6.0 * (z1 + 2.0 * z2 + 2.0 * z3 + z4);
            s += h;
            let r = sys.residuals(&y, s)?;
            max_residual = max_residual.max(max_abs(&r));
            samples.push(FlowSample { s, state: y.clone(), z, residuals: r });
        }
    }
    Ok(FlowResult {
        state_names: sys.state.iter().map(|s| s.name().to_string()).collect(),
        constraint_labels: labels,
        samples,
        max_constraint_residual: max_residual,
        final_state: y,
    })
}

pub fn constraint_drift(result: &FlowResult) -> f64 {
    result.max_constraint_residual
}

pub fn action_along_flow(result: &FlowResult) -> f64 {
    result.final_z()
}

/// Largest componentwise difference of the final states reached along two
/// paths with shared endpoints.
pub fn path_independence_check(
    cs: &CanonicalSystem,
    report: &ClosureReport,
    path_a: &ParameterPath,
    path_b: &ParameterPath,
    initial: &BTreeMap<Symbol, f64>,
    step: f64,
) -> Result<f64, FlowError> {
    let reorder = |p: &ParameterPath, w: &[f64]| -> Option<Vec<f64>> {
        path_a.parameters().iter().map(|s| p.parameters().iter().position(|x| x == s).map(|i| w[i])).collect()
    };
    if path_a.parameters().len() != path_b.parameters().len()
        || reorder(path_b, path_b.start()).as_deref() != Some(path_a.start())
        || reorder(path_b, path_b.end()).as_deref() != Some(path_a.end())
    {
        return Err(FlowError::EndpointMismatch);
    }
    let a = integrate_flow(cs, report, path_a, initial, step)?;
    let b = integrate_flow(cs, report, path_b, initial, step)?;
    Ok(a.final_state.iter().zip(&b.final_state).fold(0.0, |m, (x, y)| m.max(libm::fabs(x - y))))
}

/// Relative error `|sym - fd| / max(1, |sym|)` between the symbolic
/// derivative of `e` in `s` and a central difference with step
/// [`FD_STEP`]. Symbols missing from `point` evaluate to zero.
pub fn finite_difference_check(e: &Expr, s: &Symbol, point: &BTreeMap<Symbol, f64>) -> Result<f64, FlowError> {
    let f = e.to_ratfun().map_err(IntegrabilityError::from)?;
    let df = f.derivative(s);
    let syms = f.symbols();
    let size = point.keys().chain(syms.iter()).chain(core::iter::once(s)).map(|x| x.id() as usize + 1).max().unwrap_or(0);
    let mut env = vec![0.0; size];
    for (k, v) in point {
        env[k.id() as usize] = *v;
    }
    let singular = |what: &str| FlowError::Singular { what: what.to_string(), s: 0.0 };
    let mut stack = Vec::new();
    let fc = Compiled::new(Expr::from(&f).to_string(), &f);
    let exact = Compiled::new("derivative", &df).eval(&env, &mut stack).ok_or_else(|| singular("derivative"))?;
    let x0 = env[s.id() as usize];
    env[s.id() as usize] = x0 + FD_STEP;
    let plus = fc.eval(&env, &mut stack).ok_or_else(|| singular(&fc.label))?;
    env[s.id() as usize] = x0 - FD_STEP;
    let minus = fc.eval(&env, &mut stack).ok_or_else(|| singular(&fc.label))?;
    let fd = (plus - minus) / (2.0 * FD_STEP);
    Ok(libm::fabs(exact - fd) / libm::fabs(exact).max(1.0))
}
