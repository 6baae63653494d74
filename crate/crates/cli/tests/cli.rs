use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mflab::config::{parse_config, ExperimentKind, Format};
use mflab::run::default_test_function;
use mflab::{run_experiment, ResultTable};
use mflab_core::liouville::{self, TimeWindow};

const KERR1: &str = r#"
[model]
preset = "kerr1"

[prep]
kind = "hermite"
z = [[0.6, 0.8]]

[sweep]
n_list = [2, 4, 8]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mflab"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stderr_records(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stderr)
        .lines()
        .map(|l| serde_json::from_str(l).expect("stderr line is a JSON record"))
        .collect()
}

#[test]
fn minimal_kerr1_is_valid() {
    let cfg = parse_config(KERR1).unwrap();
    assert_eq!(cfg.sweep.n_list, vec![2, 4, 8]);
    assert_eq!(cfg.output.format, Format::Csv);
}

#[test]
fn non_hermitian_inline_kernel_is_rejected_with_path() {
    let text = r#"
[model]
preset = "inline"
d = 1
a = [[1.0]]
q = [[[1.0, 0.5]]]

[prep]
kind = "hermite"
z = [1.0]

[sweep]
n_list = [2]
"#;
    let errs = parse_config(text).unwrap_err();
    assert!(errs.iter().any(|e| e.path == "model.q"), "{errs:?}");
}

#[test]
fn all_errors_are_reported() {
    let text = r#"
[model]
preset = "kerr1"
omgea = 1.0

[prep]
kind = "hermite"
z = [1.0, 2.0]

[sweep]
n_list = [4, 2]

[numerics]
simpson_nodes = 64
form_bound_a = [0.5, 1.2]

[extra]
"#;
    let errs = parse_config(text).unwrap_err();
    let paths: Vec<&str> = errs.iter().map(|e| e.path.as_str()).collect();
    for want in ["model.omgea", "prep.z", "sweep.n_list", "numerics.simpson_nodes", "extra"] {
        assert!(paths.contains(&want), "missing {want} in {paths:?}");
    }
    assert!(paths.iter().any(|p| p.starts_with("numerics.form_bound_a")), "{paths:?}");
}

#[test]
fn convergence_grid_product() {
    let text = r#"
[model]
preset = "kerr1"

[prep]
kind = "hermite"
z = [1.0]

[sweep]
n_list = [2, 4, 8, 16]
times = [0.0, 0.25, 0.5, 0.75, 1.0]
probe_count = 3
"#;
    let cfg = parse_config(text).unwrap();
    let tables = run_experiment(&cfg, ExperimentKind::Convergence).unwrap();
    assert_eq!(tables[0].schema(), "convergence");
    assert_eq!(tables[0].len(), 20);
    assert_eq!(tables[1].len(), 60);
    let t = tables[0].reals("t").unwrap();
    let n = tables[0].reals("n").unwrap();
    assert_eq!((t[0], n[0], t[1], n[1]), (0.0, 2.0, 0.0, 4.0));
}

#[test]
fn metric_rows_carry_grid_coordinates() {
    for (kind, text) in [
        (ExperimentKind::Convergence, KERR1.to_string()),
        (ExperimentKind::Duhamel, format!("{KERR1}times = [0.5]\nprobe_count = 2\n[numerics]\nsimpson_nodes = 9\n")),
        (ExperimentKind::AlgebraAudit, format!("{KERR1}probe_count = 2\n[numerics]\naudit_cases = 4\n")),
    ] {
        let cfg = parse_config(&text).unwrap();
        for table in run_experiment(&cfg, kind).unwrap() {
            if table.schema() == "audit_summary" {
                continue;
            }
            for col in ["t", "n", "probe_id"] {
                assert!(table.column(col).is_some(), "{} lacks {col}", table.schema());
            }
        }
    }
}

#[test]
fn algebra_audit_on_lattice_delta_passes() {
    let text = r#"
[model]
preset = "lattice-delta"
d = 2

[prep]
kind = "hermite"
z = [0.8, [0.0, 0.6]]

[sweep]
n_list = [3, 4]
times = [0.0, 0.3]
probe_count = 3
probe_max_norm = 1.0

[numerics]
audit_cases = 10
n_max = 16
"#;
    let cfg = parse_config(text).unwrap();
    let tables = run_experiment(&cfg, ExperimentKind::AlgebraAudit).unwrap();
    let summary = tables.iter().find(|t| t.schema() == "audit_summary").unwrap();
    assert_eq!(summary.len(), 8);
    assert!(summary.reals("pass").unwrap().iter().all(|&p| p == 1.0));
}

#[test]
fn liouville_delegates_to_transport_module() {
    let text = r#"
[model]
preset = "lattice-hartree"
d = 3
kappa = 2.0

[prep]
kind = "atomic"
atoms = [{ weight = 1.0, z = [0.6, [0.0, 0.5], [0.3, 0.2]] }]

[sweep]
n_list = [1]
times = [0.0, 1.0]

[numerics]
liouville_steps = 16
liouville_radius = 0.4
liouville_window = [0.1, 0.9]
"#;
    let cfg = parse_config(text).unwrap();
    let tables = run_experiment(&cfg, ExperimentKind::Liouville).unwrap();
    let got = tables[0].reals("transported").unwrap()[0];
    let mu = liouville::sample_measure(&cfg.prep.measure().unwrap(), 0, true).unwrap();
    let window = TimeWindow { t0: 0.1, t1: 0.9 };
    let f = default_test_function(&cfg.model, &mu, 0.4, 0.15, window).unwrap();
    let want = liouville::liouville_check(&cfg.model, &mu, &f, 1.0, 16, &cfg.numerics.flow)
        .unwrap()
        .transported;
    assert_eq!(got.to_bits(), want.to_bits());
}

#[test]
fn json_lines_round_trip_of_run_output() {
    let cfg = parse_config(KERR1).unwrap();
    for table in run_experiment(&cfg, ExperimentKind::Convergence).unwrap() {
        let bytes = table.encode(Format::JsonLines);
        let back = ResultTable::read_json_lines(bytes.as_slice()).unwrap();
        assert_eq!(back, table);
    }
}

#[test]
fn binary_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{KERR1}times = [0.0, 0.5]\nprobe_count = 3\n"));
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = bin()
            .args(["convergence", "--config", &cfg, "--seed", "9", "--threads", "2", "--out-dir"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((
            fs::read(out_dir.join("convergence.csv")).unwrap(),
            fs::read(out_dir.join("characteristic.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{KERR1}probe_count = 2\n[numerics]\nseed = 1\n"));
    let read = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = bin()
            .args(["convergence", "--config", &cfg, "--seed", seed, "--format", "json-lines", "--out-dir"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(out_dir.join("characteristic.jsonl")).unwrap()
    };
    assert_ne!(read("1", "x"), read("2", "y"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.toml", KERR1);
    let bad = write(dir.path(), "bad.toml", &KERR1.replace("[2, 4, 8]", "[4, 2]"));
    let drift = write(
        dir.path(),
        "drift.toml",
        r#"
[model]
preset = "lattice-hartree"

[prep]
kind = "atomic"
atoms = [{ weight = 1.0, z = [0.6, [0.0, 0.5], [0.3, 0.2]] }]

[sweep]
n_list = [1]
times = [0.0, 1.0]

[numerics]
step = 0.5
conservation_tol = 1e-15
max_halvings = 0
"#,
    );
    let out_dir = dir.path().join("out");

    let dry = bin().args(["convergence", "--dry-run", "--config", &good]).output().unwrap();
    assert_eq!(dry.status.code(), Some(0));
    assert!(!out_dir.exists());

    let invalid = bin().args(["convergence", "--config", &bad]).output().unwrap();
    assert_eq!(invalid.status.code(), Some(2));
    let recs = stderr_records(&invalid);
    assert_eq!(recs[0]["kind"], "validation");
    assert_eq!(recs[0]["path"], "sweep.n_list");

    // Measure preparations have no many-body state.
    let wrong_kind = bin().args(["convergence", "--dry-run", "--config", &drift]).output().unwrap();
    assert_eq!(wrong_kind.status.code(), Some(2));

    let numerical = bin()
        .args(["liouville", "--config", &drift, "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(numerical.status.code(), Some(3), "{}", String::from_utf8_lossy(&numerical.stderr));
    let recs = stderr_records(&numerical);
    assert_eq!(recs[0]["kind"], "numerical");
    assert_eq!(recs[0]["module"], "liouville-transport");

    let missing = bin()
        .args(["convergence", "--config"])
        .arg(dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(stderr_records(&missing)[0]["kind"], "io");

    let flag = bin().args(["convergence", "--config", &good, "--threads", "0"]).output().unwrap();
    assert_eq!(flag.status.code(), Some(2));
}
