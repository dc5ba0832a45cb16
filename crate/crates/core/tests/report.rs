use std::path::Path;
use std::process::{Command, Output};

use warpsched::experiment::{
    self, geomean, read_runs_csv, run, write_runs_csv, ExperimentConfig, RANKS_FILE, RUNS_FILE, RUNS_HEADER,
    SPEEDUPS_DAT_FILE, SPEEDUPS_FILE,
};
use warpsched::sim::GpuConfig;
use warpsched::workload::KernelRef;
use warpsched::Error;

fn small(policies: &[&str], kernels: &[&str]) -> ExperimentConfig {
    let kernels = kernels.iter().map(|k| KernelRef::template(k)).collect();
    ExperimentConfig::new(GpuConfig::desk(), kernels, policies, vec![3])
}

#[test]
fn one_row_per_cell_and_reruns_are_byte_identical() {
    let cfg = small(&["lrr", "gto"], &["desk_reuse4"]);
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    experiment::run_and_compare(&cfg, Path::new("."), &a).unwrap();
    experiment::run_and_compare(&cfg, Path::new("."), &b).unwrap();

    let rows = read_runs_csv(&a.join(RUNS_FILE)).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(
        rows.iter().map(|r| r.policy.as_str()).collect::<Vec<_>>(),
        ["lrr", "gto"]
    );
    for name in [RUNS_FILE, SPEEDUPS_FILE, RANKS_FILE, SPEEDUPS_DAT_FILE] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let speedups = std::fs::read_to_string(a.join(SPEEDUPS_FILE)).unwrap();
    assert!(speedups.starts_with("kernel,lrr,gto\ndesk_reuse4,1.000000,"));
}

#[test]
fn unknown_policy_lists_valid_keys() {
    let err = ExperimentConfig::from_toml(
        r#"
seeds = [0]
kernels = [{ template = "desk_reuse4" }]
policies = ["gt0"]
"#,
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::UnknownPolicy { .. }));
    for key in ["lrr", "gto", "tl", "random", "rlws", "rlws_ms"] {
        assert!(msg.contains(key), "{msg}");
    }
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn runs_csv_header_is_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(RUNS_FILE);
    write_runs_csv(&path, &[]).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "kernel,policy,seed,cycles,instructions,ipc,stall_dependency,stall_barrier,stall_structural,\
stall_idle,stall_no_instr,l1_hit_rate,l2_hit_rate,explore_fraction,group_switches\n"
    );
    assert!(read_runs_csv(&path).unwrap().is_empty());
    assert_eq!(RUNS_HEADER.len(), 15);
}

#[test]
fn geomean_matches_log_mean() {
    let values = [0.5, 1.25, 3.0, 0.9, 2.2];
    let expected = (values.iter().map(|v: &f64| v.ln()).sum::<f64>() / values.len() as f64).exp();
    assert!((geomean(&values) - expected).abs() < 1e-12);
    assert!((geomean(&[4.0, 0.25]) - 1.0).abs() < 1e-12);
    assert!(geomean(&[]).is_nan());
}

#[test]
fn learned_runs_write_decision_logs_and_weights() {
    let mut cfg = small(&["lrr", "rlws"], &["desk_reuse4"]);
    cfg.decision_logs = true;
    cfg.export_theta = true;
    let dir = tempfile::tempdir().unwrap();
    let report = experiment::run_and_compare(&cfg, Path::new("."), dir.path()).unwrap();
    let log = dir.path().join("decisions/desk_reuse4__rlws__seed3.log");
    let theta = dir.path().join("theta/desk_reuse4__rlws__seed3.theta");
    assert!(report.files.contains(&log) && report.files.contains(&theta));
    assert!(!dir.path().join("decisions/desk_reuse4__lrr__seed3.log").exists());

    let records = experiment::read_decisions(std::fs::read(&log).unwrap().as_slice(), "log").unwrap();
    assert_eq!(records, report.cells[1].decisions);
    let text = std::fs::read_to_string(&theta).unwrap();
    assert_eq!(text.matches("# sm ").count(), GpuConfig::desk().num_sms);

    let summary = experiment::inspect_log(&log).unwrap();
    assert!(summary.contains(&format!("decisions: {}", records.len())), "{summary}");
    assert!(summary.contains("repeated NO_INSTR with alternatives: 0"), "{summary}");
}

#[test]
fn persisted_weights_carry_into_the_next_kernel() {
    let mut cfg = small(&["rlws"], &["desk_reuse4", "desk_stream32"]);
    cfg.export_theta = true;
    let fresh = run(&cfg, Path::new(".")).unwrap();
    cfg.persist_theta = true;
    let carried = run(&cfg, Path::new(".")).unwrap();
    assert_eq!(fresh.len(), 2);
    assert_eq!(fresh[0].stats, carried[0].stats, "the first kernel starts from the same weights");
    let theta = |c: &experiment::CellResult| c.theta.clone().unwrap().1;
    assert_eq!(theta(&fresh[0]), theta(&carried[0]));
    assert_ne!(theta(&fresh[1]), theta(&carried[1]));
}

fn cli(args: &[&str], cwd: &Path, out_env: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_warpsched"));
    c.args(args).current_dir(cwd).env_remove("WARPSCHED_OUT");
    if let Some(o) = out_env {
        c.env("WARPSCHED_OUT", o);
    }
    c.output().unwrap()
}

fn write_config(dir: &Path, name: &str, extra: &str) -> String {
    let text = format!(
        "seeds = [1]\noutput_dir = \"configured\"\nkernels = [{{ template = \"desk_stream32\" }}]\n\
policies = [\"lrr\", \"tl\"]\n\n[gpu]\nnum_sms = 2\n{extra}"
    );
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn command_line_exit_codes_and_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let list = cli(&["gen", "--list"], d, None);
    assert_eq!(list.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&list.stdout).lines().any(|l| l == "desk_reuse4"));

    let ok = write_config(d, "ok.toml", "");
    let r = cli(&["run", "--config", &ok], d, None);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read_runs_csv(&d.join("configured").join(RUNS_FILE)).unwrap().len(), 2);

    let env_out = d.join("from_env");
    let r = cli(&["compare", "--config", &ok], d, Some(&env_out));
    assert_eq!(r.status.code(), Some(0));
    assert!(env_out.join(SPEEDUPS_FILE).exists());
    assert!(String::from_utf8_lossy(&r.stdout).contains("speedup over lrr"));

    let r = cli(&["compare", "--runs", "configured/runs.csv", "--baseline", "tl"], d, None);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stdout).contains("speedup over tl"));

    std::fs::write(d.join("bad.toml"), "seeds = [1]\nkernels = []\npolicies = [\"lrr\"]\n").unwrap();
    assert_eq!(cli(&["run", "--config", "bad.toml"], d, None).status.code(), Some(2));
    assert_eq!(cli(&["gen", "--template", "nope", "--out", "k"], d, None).status.code(), Some(2));
    assert_eq!(cli(&["run", "--config", "missing.toml"], d, None).status.code(), Some(2));

    let faulty = write_config(d, "faulty.toml", "max_cycles = 50\n");
    let r = cli(&["run", "--config", &faulty], d, None);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stderr).contains("simulation fault"));
}

#[test]
fn generated_kernels_and_logs_round_trip_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = cli(&["gen", "--template", "few_tb", "--out", "k"], d, None);
    assert_eq!(r.status.code(), Some(0));
    let k = warpsched::workload::load(&d.join("k/few_tb.kernel")).unwrap();
    assert_eq!(k.name, "few_tb");

    let text = "seeds = [0]\ndecision_logs = true\nkernels = [{ path = \"k/few_tb.kernel\" }]\n\
policies = [\"rlws_ms\"]\n\n[gpu]\nnum_sms = 2\n";
    std::fs::write(d.join("log.toml"), text).unwrap();
    let r = cli(&["run", "--config", "log.toml", "--out", "o"], d, None);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let r = cli(&["inspect-log", "o/decisions/few_tb__rlws_ms__seed0.log"], d, None);
    assert_eq!(r.status.code(), Some(0));
    let s = String::from_utf8_lossy(&r.stdout);
    assert!(s.starts_with("decision log") && s.contains("phase 1:"), "{s}");
}

#[test]
fn genetic_search_runs_and_resumes_from_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = "population_size = 6\nchildren_per_gen = 4\nrandoms_per_gen = 2\nelite_count = 2\n\
elite_reinjection_period = 2\ngenerations = 3\nkernels = [{ template = \"desk_reuse4\" }]\n";
    std::fs::write(d.join("ga.toml"), cfg).unwrap();
    let r = cli(&["ga", "run", "--config", "ga.toml", "--out", "ga"], d, None);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(d.join("ga").join(warpsched::ga::CHECKPOINT_FILE).exists());
    assert!(d.join("ga").join(warpsched::ga::generation_file(2)).exists());
    let first = String::from_utf8_lossy(&r.stdout).into_owned();

    let r = cli(&["ga", "run", "--config", "ga.toml", "--resume"], d, Some(&d.join("ga")));
    assert_eq!(r.status.code(), Some(0));
    let resumed = String::from_utf8_lossy(&r.stdout);
    assert!(!resumed.contains("generation   0"));
    let best = |s: &str| s.lines().find(|l| l.starts_with("best genome")).map(str::to_string);
    assert_eq!(best(&first), best(&resumed));

    std::fs::write(d.join("bad_ga.toml"), "population_size = 7\n").unwrap();
    let r = cli(&["ga", "run", "--config", "bad_ga.toml", "--out", "x"], d, None);
    assert_eq!(r.status.code(), Some(2));
}
