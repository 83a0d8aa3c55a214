//! Command dispatch. Every command returns its process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use hjq_core::canonical::{build_hjpde_set, CanonicalSystem};
use hjq_core::integrability::{constraint_closure, ClosureReport, ClosureStatus};
use hjq_core::models::{corpus, has_errors, validate_model, Mismatch, ModelSource, Severity};
use hjq_core::numflow::{integrate_flow, FlowError};

use crate::dsl::parse_model;
use crate::flow::{named, parse_assignments, parse_path, write_csv, FlowSummary};
use crate::report::{sha256_hex, ReportDocument, TOOL, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARAMETER_FIXING: i32 = 2;
pub const EXIT_BUDGET_EXCEEDED: i32 = 3;
/// `flow`: integration finished but the residual reached the tolerance.
pub const EXIT_DRIFT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hjq", about = "Hamilton-Jacobi constraint analysis of singular Lagrangians", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze a model file; exit 0 integrable, 2 parameter-fixing, 3 budget exceeded, 1 error.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Integrate the total differential equations along a parameter path.
    Flow {
        file: PathBuf,
        /// Waypoints, e.g. `tau=0,N=1 ; tau=1,N=1`.
        #[arg(long)]
        path: String,
        /// Initial values, e.g. `a=1,p_a=0`; momenta default to 0.
        #[arg(long, default_value = "")]
        initial: String,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Largest acceptable constraint residual.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Output prefix for `<prefix>.csv` and `<prefix>.json`; defaults to `<model>_flow`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every built-in model against its expected results.
    Corpus,
    /// Print the version.
    Version,
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match cli.command {
        Command::Analyze { file, format } => cmd_analyze(&file, format, out, err),
        Command::Flow { file, path, initial, step, tol, out: prefix } => {
            cmd_flow(&file, &path, &initial, step, tol, prefix.as_deref(), out, err)
        }
        Command::Corpus => report_corpus(&corpus(), out, err),
        Command::Version => {
            let _ = writeln!(out, "{TOOL} {VERSION}");
            EXIT_OK
        }
    }
}

pub struct Loaded {
    pub source: ModelSource,
    pub bytes: Vec<u8>,
    pub system: CanonicalSystem,
    pub closure: ClosureReport,
}

/// Reads, validates and analyzes a model file. Warnings go to `err`.
pub fn load(file: &Path, err: &mut dyn Write) -> Result<Loaded, String> {
    let bytes = std::fs::read(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| format!("{}: not valid UTF-8", file.display()))?;
    let source = parse_model(text).map_err(|e| format!("{}:{e}", file.display()))?;
    let findings = validate_model(&source);
    for f in findings.iter().filter(|f| f.severity == Severity::Warning) {
        let _ = writeln!(err, "{}: {f}", file.display());
    }
    if has_errors(&findings) {
        let msgs: Vec<String> = findings.iter().filter(|f| f.severity == Severity::Error).map(|f| f.to_string()).collect();
        return Err(format!("{}: {}", file.display(), msgs.join("; ")));
    }
    let model = source.definition().map_err(|e| format!("{}: {e}", file.display()))?;
    let system = build_hjpde_set(&model).map_err(|e| format!("{}: {e}", file.display()))?;
    let closure = constraint_closure(&system).map_err(|e| format!("{}: {e}", file.display()))?;
    Ok(Loaded { source, bytes, system, closure })
}

pub fn exit_code(status: ClosureStatus) -> i32 {
    match status {
        ClosureStatus::Integrable => EXIT_OK,
        ClosureStatus::ParameterFixing => EXIT_PARAMETER_FIXING,
        ClosureStatus::BudgetExceeded => EXIT_BUDGET_EXCEEDED,
    }
}

pub fn cmd_analyze(file: &Path, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let l = match load(file, err) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let doc = ReportDocument::build(&l.source, &l.bytes, &l.system, &l.closure);
    let text = match format {
        Format::Text => doc.to_text(),
        Format::Json => doc.to_json(),
    };
    let _ = out.write_all(text.as_bytes());
    exit_code(l.closure.status)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_flow(
    file: &Path,
    path: &str,
    initial: &str,
    step: f64,
    tol: f64,
    prefix: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    match flow_inner(file, path, initial, step, tol, prefix, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn flow_inner(
    file: &Path,
    path: &str,
    initial: &str,
    step: f64,
    tol: f64,
    prefix: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, String> {
    let l = load(file, err)?;
    if l.closure.status != ClosureStatus::Integrable {
        return Err(format!("flow needs an integrable model; closure status is {}", l.closure.status));
    }
    let table = l.system.table();
    let path = parse_path(path, table).map_err(|e| format!("--path: {e}"))?;
    let init = parse_assignments(initial, table).map_err(|e| format!("--initial: {e}"))?.into_iter().collect();
    let result = match integrate_flow(&l.system, &l.closure, &path, &init, step) {
        Ok(r) => r,
        Err(FlowError::InitialData { constraint, residual }) => {
            return Err(format!("initial data is off the constraint surface: {constraint} = {residual:e}"))
        }
        Err(e) => return Err(e.to_string()),
    };
    let prefix = prefix.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(format!("{}_flow", l.source.name)));
    let csv_path = prefix.with_extension("csv");
    let json_path = prefix.with_extension("json");
    let csv_file = std::fs::File::create(&csv_path).map_err(|e| format!("{}: {e}", csv_path.display()))?;
    write_csv(&result, std::io::BufWriter::new(csv_file)).map_err(|e| format!("{}: {e}", csv_path.display()))?;
    let residual = result.max_constraint_residual;
    let within = residual < tol;
    let summary = FlowSummary {
        tool: TOOL.into(),
        version: VERSION.into(),
        input_sha256: sha256_hex(&l.bytes),
        model: l.source.name.clone(),
        parameters: path.parameters().iter().map(|s| s.name().to_string()).collect(),
        waypoints: path.waypoints().to_vec(),
        path_length: path.length(),
        step,
        tolerance: tol,
        steps: result.samples.len() - 1,
        initial_state: named(&result.state_names, &result.samples[0].state),
        final_state: named(&result.state_names, &result.final_state),
        action: result.final_z(),
        max_constraint_residual: residual,
        within_tolerance: within,
        csv: csv_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    std::fs::write(&json_path, summary.to_json()).map_err(|e| format!("{}: {e}", json_path.display()))?;
    let _ = writeln!(out, "{} steps along a path of length {:.6}", summary.steps, summary.path_length);
    for v in &summary.final_state {
        let _ = writeln!(out, "  {} = {:.12e}", v.name, v.value);
    }
    let _ = writeln!(out, "  Z = {:.12e}", summary.action);
    let _ = writeln!(out, "max constraint residual {residual:e} (tolerance {tol:e})");
    let _ = writeln!(out, "wrote {} and {}", csv_path.display(), json_path.display());
    if !within {
        let _ = writeln!(err, "constraint residual {residual:e} exceeds tolerance {tol:e}");
        return Ok(EXIT_DRIFT);
    }
    Ok(EXIT_OK)
}

/// Prints one line per model and the first mismatch of each failing one.
pub fn report_corpus(results: &[(&str, Result<(), Mismatch>)], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut failed = false;
    for (name, r) in results {
        match r {
            Ok(()) => {
                let _ = writeln!(out, "ok   {name}");
            }
            Err(m) => {
                failed = true;
                let _ = writeln!(out, "FAIL {name}");
                let _ = writeln!(err, "{m}");
            }
        }
    }
    if failed {
        EXIT_ERROR
    } else {
        EXIT_OK
    }
}
