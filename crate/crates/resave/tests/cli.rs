use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use resave::core::models::{generate, Model};
use resave::core::rng::Rng;
use resave::harness::{run_replications, Estimator, ExperimentConfig};
use resave::report::{read_accuracy, read_bench, read_replications};

fn resave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resave")).args(args).env_remove("RESAVE_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/diabetes_like.csv")
}

fn write_model_csv(path: &Path, n: usize, seed: u64) {
    let mut text = String::from("y,x1,x2,x3,x4,x5\n");
    for o in generate(Model::Two, n, &mut Rng::new(seed)) {
        let cells: Vec<String> = std::iter::once(o.y).chain(o.x).map(|v| format!("{v:.17e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn numbers(line: &str) -> Vec<f64> {
    line.split(',').map(|s| s.parse().unwrap()).collect()
}

fn last_line(text: &str) -> &str {
    text.lines().last().unwrap()
}

#[test]
fn invalid_model_is_a_usage_error() {
    let o = resave(&["simulate", "--model", "3", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model"));
    assert_eq!(resave(&["bench", "--model", "x"]).status.code(), Some(2));
}

#[test]
fn invalid_plan_is_a_usage_error() {
    let o = resave(&["simulate", "--reps", "1", "--c1", "0.2", "--strict-assumptions"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--reps", "1", "--seed", "7"];
    let a = resave(&args);
    let b = resave(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let rows = read_accuracy(a.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(stdout(&a).starts_with("model,estimator,p,r2_mean,r2_std,reps,seed\n"));
}

#[test]
fn simulate_report_matches_library_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let reps_out = dir.path().join("reps.csv");
    let o = resave(&[
        "simulate",
        "--model",
        "2",
        "--estimator",
        "save-r",
        "--p",
        "30",
        "--reps",
        "6",
        "--seed",
        "11",
        "--out",
        out.to_str().unwrap(),
        "--replications-out",
        reps_out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_accuracy(fs::File::open(&out).unwrap()).unwrap();
    let lib = run_replications(Model::Two, 100, 30, 6, Estimator::SaveR, 11, &ExperimentConfig::default()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].r2_mean.to_bits(), lib.r2.mean.to_bits());
    assert_eq!(rows[0].r2_std.to_bits(), lib.r2.std.to_bits());
    let reps = read_replications(fs::File::open(&reps_out).unwrap()).unwrap();
    assert_eq!(reps.len(), 6);
    for (row, rec) in reps.iter().zip(&lib.records) {
        assert_eq!(row.r2.to_bits(), rec.r2.to_bits());
        assert_eq!(row.direction, rec.direction);
    }
}

#[test]
fn thread_cap_does_not_change_results() {
    let args = ["simulate", "--model", "1", "--p", "20", "--reps", "8", "--seed", "3"];
    let free = resave(&args);
    let capped = Command::new(env!("CARGO_BIN_EXE_resave")).args(args).env("RESAVE_THREADS", "1").output().unwrap();
    assert!(capped.status.success());
    assert_eq!(free.stdout, capped.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_resave")).args(args).env("RESAVE_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# small run\nmodel = 1\nestimator = save-nr\np = 10\nreps = 2\nseed = 5\n").unwrap();
    let o = resave(&["--config", cfg.to_str().unwrap(), "simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_accuracy(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].p, rows[0].reps, rows[0].seed, rows[0].estimator), (10, 2, 5, Estimator::SaveNr));

    let o = resave(&["simulate", "--config", cfg.to_str().unwrap(), "--p", "12", "--seed", "6"]);
    let rows = read_accuracy(o.stdout.as_slice()).unwrap();
    assert_eq!((rows[0].p, rows[0].seed), (12, 6));

    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(resave(&["--config", cfg.to_str().unwrap(), "simulate"]).status.code(), Some(2));
}

#[test]
fn selfcheck_passes_and_detects_faults() {
    let o = resave(&["selfcheck"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 4);

    let o = resave(&["selfcheck", "--fault-kernel-scale", "1.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL recursion-closed-form")));
}

#[test]
fn help_documents_defaults() {
    let help = stdout(&resave(&["bench", "--help"]));
    assert!(help.contains("[default: 3]"), "{help}");
    assert!(stdout(&resave(&["simulate", "--help"])).contains("[default: 200]"));
}

#[test]
fn bench_report_parses() {
    let o = resave(&["bench", "--p", "0,20", "--reps", "2", "--n0", "60"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_bench(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.mean_s > 0.0 && r.ratio > 0.0));
    // p = 0: one initial fit each
    assert!(rows[0].ratio > 0.5 && rows[0].ratio < 2.0, "{}", rows[0].ratio);
}

#[test]
fn stream_equals_one_shot_fit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("model2.csv");
    write_model_csv(&data, 160, 21);
    let d = data.to_str().unwrap();

    let streamed = resave(&["stream", "--input", d, "--n0", "60", "--retained", "2"]);
    assert!(streamed.status.success(), "{}", stderr(&streamed));
    let text = stdout(&streamed);
    assert_eq!(text.lines().count(), 1 + 100);
    assert!(text.starts_with("n,lambda_1,"));

    let fit = resave(&["fit", "--input", d, "--n0", "60", "--retained", "2"]);
    assert!(fit.status.success(), "{}", stderr(&fit));
    let a = numbers(last_line(&text));
    let b = numbers(last_line(&stdout(&fit)));
    assert_eq!(a.len(), b.len());
    assert_eq!(a[0], 160.0);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-10, "{x} vs {y}");
    }
}

#[test]
fn checkpoint_resume_matches_uninterrupted_stream() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    write_model_csv(&full, 150, 8);
    let text = fs::read_to_string(&full).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let first = dir.path().join("first.csv");
    let rest = dir.path().join("rest.csv");
    fs::write(&first, lines[..91].join("\n") + "\n").unwrap();
    fs::write(&rest, [&lines[..1], &lines[91..]].concat().join("\n") + "\n").unwrap();
    let ckpt = dir.path().join("state.ckpt");

    let whole = resave(&["stream", "--input", full.to_str().unwrap(), "--n0", "50"]);
    let part1 = resave(&[
        "stream",
        "--input",
        first.to_str().unwrap(),
        "--n0",
        "50",
        "--checkpoint-out",
        ckpt.to_str().unwrap(),
    ]);
    assert!(part1.status.success(), "{}", stderr(&part1));
    let part2 = resave(&["stream", "--input", rest.to_str().unwrap(), "--resume", ckpt.to_str().unwrap()]);
    assert!(part2.status.success(), "{}", stderr(&part2));

    let whole_lines: Vec<String> = stdout(&whole).lines().skip(1).map(str::to_string).collect();
    let resumed: Vec<String> =
        stdout(&part1).lines().skip(1).chain(stdout(&part2).lines().skip(1)).map(str::to_string).collect();
    assert_eq!(whole_lines.len(), 100);
    assert_eq!(resumed, whole_lines);
}

#[test]
fn empty_stream_after_init_prints_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("init.csv");
    write_model_csv(&data, 40, 2);
    let o = resave(&["stream", "--input", data.to_str().unwrap(), "--n0", "40"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_stream_lines_are_skipped_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.csv");
    write_model_csv(&clean, 80, 4);
    let text = fs::read_to_string(&clean).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines.insert(60, "1.0,NA,0,0,0,0".into());
    lines.insert(70, "garbage".into());
    let dirty = dir.path().join("dirty.csv");
    fs::write(&dirty, lines.join("\n") + "\n").unwrap();

    let a = resave(&["stream", "--input", clean.to_str().unwrap(), "--n0", "50"]);
    let b = resave(&["stream", "--input", dirty.to_str().unwrap(), "--n0", "50"]);
    assert_eq!(b.status.code(), Some(0));
    assert!(stderr(&b).contains("skipped 2 malformed lines: 61,71"), "{}", stderr(&b));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn stream_reads_stdin_and_honours_every() {
    use std::io::Write;
    use std::process::Stdio;
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_model_csv(&data, 70, 6);
    let mut child = Command::new(env!("CARGO_BIN_EXE_resave"))
        .args(["stream", "--n0", "30", "--every", "10"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&fs::read(&data).unwrap()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let ns: Vec<f64> = stdout(&o).lines().skip(1).map(|l| numbers(l)[0]).collect();
    assert_eq!(ns, vec![40.0, 50.0, 60.0, 70.0]);
}

#[test]
fn eval_real_on_fixture() {
    let f = fixture();
    let o = resave(&[
        "eval-real",
        "--input",
        f.to_str().unwrap(),
        "--response",
        "Glucose",
        "--predictors",
        "BMI,Pregnancies,DPF,Age,Insulin,BP",
        "--p",
        "100,400",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("skipped 7 rows"));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "estimator,n0,p,r2_mean,r2_std,evaluated,skipped,beta_1,beta_2,beta_3,beta_4,beta_5,beta_6"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let r2: f64 = row[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&r2));
        let beta: Vec<f64> = row[7..].iter().map(|s| s.parse().unwrap()).collect();
        let norm: f64 = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
    assert_eq!(rows[2][5], "1493");

    let o = resave(&["eval-real", "--input", f.to_str().unwrap(), "--n0", "1900", "--p", "200"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_on_gzip_input_matches_plain() {
    use flate2::write::GzEncoder;
    use std::io::Write;
    let dir = tempfile::tempdir().unwrap();
    let gz = dir.path().join("fixture.csv.gz");
    let mut enc = GzEncoder::new(fs::File::create(&gz).unwrap(), flate2::Compression::default());
    enc.write_all(&fs::read(fixture()).unwrap()).unwrap();
    enc.finish().unwrap();
    let plain = resave(&["fit", "--input", fixture().to_str().unwrap(), "--estimator", "save-nr"]);
    let packed = resave(&["fit", "--input", gz.to_str().unwrap(), "--estimator", "save-nr"]);
    assert!(plain.status.success(), "{}", stderr(&plain));
    assert_eq!(plain.stdout, packed.stdout);
}
