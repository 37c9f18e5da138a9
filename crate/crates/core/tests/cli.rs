use std::path::Path;
use std::process::{Command, Output};

use cznd::harness::{
    self, gamma_sweep, read_trajectory, simulate, write_trajectory, ExperimentSpec, HarnessError,
};
use cznd::models::{Gain, ModelKind};
use cznd::ode::IntegratorConfig;
use cznd::problem::example3;

fn cznd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cznd")).args(args).output().expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn same_seed_gives_byte_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for prefix in [&a, &b] {
        let out = cznd(&["run", "--seed", "42", "--runs", "3", "--samples", "200", "--out", arg(prefix)]);
        assert!(out.status.success(), "{}", text(&out.stderr));
    }
    for suffix in ["_run0.csv", "_run1.csv", "_run2.csv", "_aggregate.csv"] {
        let x = std::fs::read(dir.path().join(format!("a{suffix}"))).unwrap();
        let y = std::fs::read(dir.path().join(format!("b{suffix}"))).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{suffix} differs");
    }
    let first = std::fs::read_to_string(dir.path().join("a_run0.csv")).unwrap();
    assert!(!first.contains('\r'));
    let header = first.lines().next().unwrap();
    assert!(header.starts_with("tau,residual,cond_estimate,x_r_11,x_r_21,x_r_12,x_r_22,x_i_11"), "{header}");
}

#[test]
fn complex_gain_for_the_real_model_is_a_usage_error() {
    let out = cznd(&["run", "--model", "con-cznd2", "--gamma", "10+20i", "--runs", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("real gains"), "{}", text(&out.stderr));
}

#[test]
fn missing_problem_file_exits_with_load_code() {
    let out = cznd(&["run", "--problem", "/nonexistent/x.tvp", "--runs", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
}

#[test]
fn sweep_without_gains_is_a_usage_error() {
    let out = cznd(&["sweep-gamma", "--runs", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let spec = ExperimentSpec::new(ModelKind::ConCznd1Conj, Gain::real(10.0).unwrap());
    assert!(matches!(gamma_sweep(&spec, &[]), Err(HarnessError::Usage(_))));
}

#[test]
fn uniqueness_verdicts_from_the_command_line() {
    let out = cznd(&["check-uniqueness", "--grid", "101"]);
    assert!(out.status.success());
    assert!(text(&out.stdout).contains("unique (pointwise on grid): true"), "{}", text(&out.stdout));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("same.tvp");
    std::fs::write(&path, "dims 2 2\n[F]\n2;0\n1;0\n0;0\n3;0\n[A]\n2;0\n1;0\n0;0\n3;0\n[C]\n1\n0\n0\n1\n").unwrap();
    let csv = dir.path().join("u");
    let out = cznd(&["check-uniqueness", "--problem", arg(&path), "--grid", "11", "--out", arg(&csv)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("unique (pointwise on grid): false"), "{}", text(&out.stdout));
    let table = std::fs::read_to_string(dir.path().join("u_uniqueness.csv")).unwrap();
    assert_eq!(table.lines().count(), 12);

    let out = cznd(&["check-uniqueness", "--grid", "1"]);
    assert!(out.status.success());
    assert!(text(&out.stderr).contains("warning"), "{}", text(&out.stderr));
}

#[test]
fn print_problem_round_trips_through_the_loader() {
    let out = cznd(&["print-problem"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.tvp");
    std::fs::write(&path, &out.stdout).unwrap();
    let again = cznd(&["print-problem", "--problem", arg(&path)]);
    assert!(again.status.success(), "{}", text(&again.stderr));
    let p = cznd::problem::load_problem(&path).unwrap();
    let q = example3();
    for tau in [0.0, 1.3, 7.7] {
        let (a, b) = (p.snapshot(tau).unwrap(), q.snapshot(tau).unwrap());
        assert!(a.c.sub(&b.c).unwrap().max_abs() <= 1e-13);
    }
}

#[test]
fn compare_writes_difference_columns() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("cmp");
    let out = cznd(&[
        "compare", "--model", "con-cznd1", "--model", "con-cznd1-conj", "--gamma", "10+20i", "--runs", "2",
        "--samples", "50", "--out", arg(&prefix),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("cmp_compare.csv")).unwrap();
    let header = table.lines().next().unwrap();
    assert!(header.contains("diff_"), "{header}");
    assert!(header.contains("tolerance_band"), "{header}");
    assert_eq!(table.lines().count(), 51);
}

#[test]
fn csv_round_trip_is_exact() {
    let p = example3();
    let mut spec = ExperimentSpec::new(ModelKind::ConCznd1, Gain::new(10.0, -20.0).unwrap());
    spec.runs = 2;
    spec.seed = 9;
    spec.integrator.sample_count = 123;
    let outcomes = simulate(&p, &spec, spec.model, spec.gamma).unwrap();
    for o in outcomes {
        let tr = o.result.unwrap();
        let meta = vec![("model".to_string(), "con-cznd1".to_string())];
        let mut buf = Vec::new();
        write_trajectory(&mut buf, 2, 2, &tr, &meta).unwrap();
        let (back, back_meta) = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(back, tr);
        assert_eq!(back_meta, meta);
    }
}

#[test]
fn a_failing_run_leaves_the_others_untouched() {
    let p = example3();
    let spec = ExperimentSpec { seed: 42, ..ExperimentSpec::new(ModelKind::ConCznd1Conj, Gain::real(10.0).unwrap()) };
    let free = simulate(&p, &spec, spec.model, spec.gamma).unwrap();
    let attempts: Vec<usize> = free
        .iter()
        .map(|o| {
            let s = o.result.as_ref().unwrap().stats;
            s.accepted_steps + s.rejected_steps
        })
        .collect();
    let budget = *attempts.iter().min().unwrap();
    assert!(attempts.iter().any(|&a| a > budget), "all runs took {budget} attempts");

    let limited = ExperimentSpec { integrator: IntegratorConfig { max_steps: budget, ..spec.integrator.clone() }, ..spec.clone() };
    let outcomes = simulate(&p, &limited, spec.model, spec.gamma).unwrap();
    let mut failed = 0;
    for (o, f) in outcomes.iter().zip(&free) {
        assert_eq!(o.x0, f.x0);
        match &o.result {
            Ok(tr) => assert_eq!(tr, f.result.as_ref().unwrap()),
            Err(_) => failed += 1,
        }
    }
    assert!(failed > 0 && failed < outcomes.len());
    let report = harness::run_on(&p, &limited).unwrap();
    assert_eq!(report.runs.iter().filter(|r| r.error.is_some()).count(), failed);
}

#[test]
fn initial_states_do_not_depend_on_batch_size() {
    let p = example3();
    let mut small = ExperimentSpec::new(ModelKind::ConCznd2, Gain::real(5.0).unwrap());
    small.runs = 2;
    small.seed = 3;
    let large = ExperimentSpec { runs: 6, model: ModelKind::ConCznd1Conj, ..small.clone() };
    let a = simulate(&p, &small, small.model, small.gamma).unwrap();
    let b = simulate(&p, &large, large.model, large.gamma).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.x0, y.x0);
        assert!(x.x0.iter().all(|v| v.abs() <= 5.0));
    }
}
