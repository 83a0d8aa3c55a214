use std::path::PathBuf;
use std::process::{Command, Output};

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn model(name: &str) -> PathBuf {
    models_dir().join(format!("{name}.hjm"))
}

fn hjq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjq")).args(args).output().unwrap()
}

fn analyze_json(name: &str) -> (i32, serde_json::Value, String) {
    let out = hjq(&["analyze", model(name).to_str().unwrap(), "--format", "json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    (out.status.code().unwrap(), serde_json::from_str(&text).unwrap(), text)
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema").join(name);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

#[test]
fn analyze_exit_codes() {
    assert_eq!(hjq(&["analyze", model("frw").to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(hjq(&["analyze", model("coupled_parameter").to_str().unwrap()]).status.code(), Some(2));
    let missing = hjq(&["analyze", model("missing").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.hjm"));
    assert_eq!(hjq(&["analyze"]).status.code(), Some(1));
    assert_eq!(hjq(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn frw_report_lists_parameters() {
    let (code, v, _) = analyze_json("frw");
    assert_eq!(code, 0);
    assert_eq!(v["closure"]["independent_parameters"], serde_json::json!(["tau", "N"]));
    assert_eq!(v["path_integral"]["integration_variables"], serde_json::json!([["a", "p_a"]]));
}

#[test]
fn reports_validate_against_schema_and_are_deterministic() {
    let validator = schema("report.schema.json");
    for name in ["oscillator2d", "shifted_velocity", "coupled_parameter", "frw", "frw_lambda"] {
        let (_, v, text) = analyze_json(name);
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
        let (_, _, again) = analyze_json(name);
        assert_eq!(text, again);
        let t1 = hjq(&["analyze", model(name).to_str().unwrap()]).stdout;
        let t2 = hjq(&["analyze", model(name).to_str().unwrap()]).stdout;
        assert_eq!(t1, t2);
    }
    let (_, v, _) = analyze_json("coupled_parameter");
    assert!(v["path_integral"].is_null());
    assert_eq!(v["closure"]["fixed_parameters"][0]["parameter"], "y");
}

#[test]
fn invalid_models_exit_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("undeclared.hjm", "model u { coords: x; lagrangian: \"1/2*dx^2 - z*x\"; }", "`z`"),
        ("syntax.hjm", "model s { coords: x lagrangian: \"dx\"; }", "expected `;`"),
        ("rel.hjm", "model r { coords: x; consts: m; lagrangian: \"-m*sqrt(1 - dx^2)\"; }", "nonlinear"),
    ];
    for (file, text, needle) in cases {
        let p = dir.path().join(file);
        std::fs::write(&p, text).unwrap();
        let out = hjq(&["analyze", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{file}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{file}: {err}");
    }
    let p = dir.path().join("warn.hjm");
    std::fs::write(&p, "model w { coords: x; consts: k; lagrangian: \"1/2*dx^2\"; }").unwrap();
    let out = hjq(&["analyze", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: constant `k` is declared but unused"));
}

#[test]
fn flow_runs_write_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("osc");
    let out = hjq(&[
        "flow",
        model("oscillator2d").to_str().unwrap(),
        "--path",
        "tau=0 ; tau=2*pi",
        "--initial",
        "x=1,y=0",
        "--step",
        "1e-3",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "s,tau,x,y,p_x,p_y,Z");
    assert_eq!(lines.count(), 6285);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
    assert!(schema("flow.schema.json").is_valid(&summary));
    let x = summary["final_state"].as_array().unwrap().iter().find(|v| v["name"] == "x").unwrap()["value"].as_f64().unwrap();
    assert!((x - 1.0).abs() < 1e-9);
}

#[test]
fn flow_frw_static_and_off_surface() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("frw");
    let args = |initial: &'static str| {
        vec![
            "flow".to_string(),
            model("frw").to_str().unwrap().to_string(),
            "--path".into(),
            "tau=0,N=1 ; tau=1,N=1".into(),
            "--initial".into(),
            initial.into(),
            "--out".into(),
            prefix.to_str().unwrap().to_string(),
        ]
    };
    let a = args("a=1,p_a=0");
    let out = hjq(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
    assert_eq!(summary["action"].as_f64(), Some(0.0));
    let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "s,tau,N,a,p_N,p_a,Z,H'_N,C1.1");

    let b = args("a=1,p_a=0.1");
    let out = hjq(&b.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("off the constraint surface: C1.1 = 8.3"), "{err}");
}

#[test]
fn flow_rejects_parameter_fixing_models_and_bad_specs() {
    let out = hjq(&["flow", model("coupled_parameter").to_str().unwrap(), "--path", "tau=0;tau=1", "--initial", "x=0,y=0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameter-fixing"));
    let out = hjq(&["flow", model("frw").to_str().unwrap(), "--path", "tau=0;tau=1", "--initial", "a=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`N`"));
}

#[test]
fn corpus_and_version() {
    let out = hjq(&["corpus"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ok   frw_lambda"));
    assert_eq!(text.lines().count(), 5);
    let v = hjq(&["version"]);
    assert_eq!(String::from_utf8(v.stdout).unwrap(), format!("hjq {}\n", env!("CARGO_PKG_VERSION")));
}

#[test]
fn corpus_reports_tampered_record() {
    let m = hjq_core::models::builtin("frw_lambda").unwrap();
    let mut e = m.expected.clone();
    e.generations = &[&["p_a^2/(12*a)"]];
    let results = [("frw_lambda", hjq_core::models::check_expected(&m.source, &e))];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(hjq::cli::report_corpus(&results, &mut out, &mut err), 1);
    let err = String::from_utf8(err).unwrap();
    assert!(err.contains("expected `p_a^2/(12*a)`"), "{err}");
    assert!(err.contains("Lambda"), "{err}");
}

#[test]
fn shipped_files_match_builtins() {
    for m in hjq_core::models::builtins() {
        let text = std::fs::read_to_string(model(&m.source.name)).unwrap();
        assert_eq!(hjq::dsl::parse_model(&text).unwrap(), m.source);
    }
}
