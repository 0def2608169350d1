use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MINIMAL: &str = r#"
[params]
decryptors = 3
neighbors = 4

[workload]
clients = 8
vector_len = 64
mask_rate = 0.5
sparsity = 0.5

[seeds]
master = 7

[execution]
group = "modp64"
"#;

fn persec(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_persec"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PERSEC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Compares against `tests/golden/<name>`; `PERSEC_UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("PERSEC_UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "{name} drifted from its golden copy");
}

#[test]
fn minimal_run_writes_summary_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let o = persec(&["run", cfg.to_str().unwrap(), "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary-0.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "completed");
    assert_eq!(summary["oracle_match"], true);
    assert_eq!(summary["spec"]["master_seed"], 7);
    assert_eq!(summary["params"]["clients"], 8);
    assert!(!dir.path().join("out/transcript-0.bin").exists());
    golden("metrics.csv", &fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap());
}

#[test]
fn corruption_bound_is_reported_with_its_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{MINIMAL}\n"));
    let o = persec(&["run", cfg.to_str().unwrap(), "--delta-d", "0.2", "--eta-d", "0.2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("params.delta_d + params.eta_d"), "{err}");
    assert!(err.contains("below 1/3"), "{err}");
    assert!(!dir.path().join("persec-out").exists());

    let bad = MINIMAL.replace("mask_rate = 0.5", "mask_rate = 0.0");
    let cfg = write_config(dir.path(), &bad);
    let o = persec(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("workload.mask_rate"));
}

#[test]
fn transcript_flag_writes_a_replayable_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let o = persec(&["run", cfg.to_str().unwrap(), "--transcript", "--runs", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("persec-out");
    for run in 0..2 {
        let t = out.join(format!("transcript-{run}.bin"));
        let o = persec(&["replay", t.to_str().unwrap(), "--schedule", "shuffled:3"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let s = out.join(format!("summary-{run}.json"));
        assert!(persec(&["replay", s.to_str().unwrap(), "--schedule", "parallel"], dir.path()).status.success());
    }

    // A flipped payload byte no longer matches the re-execution.
    let t = out.join("transcript-0.bin");
    let mut bytes = fs::read(&t).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    fs::write(&t, bytes).unwrap();
    let o = persec(&["replay", t.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("diverge"), "{}", stderr(&o));
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let o = Command::new(env!("CARGO_BIN_EXE_persec"))
        .args(["run", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .env("PERSEC_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from-env/summary-0.json").exists());
}

#[test]
fn aborted_round_exits_nonzero_with_the_cause() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[params]
decryptors = 12
eta_d = 0.25

[workload]
clients = 16
vector_len = 128

[adversary]
colluding_decryptors = [0, 1, 2]

[adversary.behavior]
kind = "disguise_dropouts"
victims = [3, 4, 5, 6, 7, 8]

[execution]
group = "modp64"
"#,
    );
    let o = persec(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("aborted in"), "{err}");
    let summary = fs::read_to_string(dir.path().join("persec-out/summary-0.json")).unwrap();
    assert!(summary.contains("\"status\": \"aborted\""));
}

#[test]
fn sweep_records_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{MINIMAL}\n[sweep]\naxis = \"t\"\nvalues = [2, 3, 1]\n"));
    let o = persec(&["sweep", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("persec-out/sweep-t.csv")).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().clone();
    assert_eq!(header.len(), 10 + 3 * 4 * 8);
    let rows: Vec<csv::StringRecord> = r.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][3], "completed");
    assert_eq!(&rows[2][3], "invalid");
    assert!(rows[2][5].contains("params.t"));
    golden("sweep_header.csv", &format!("{}\n", header.iter().collect::<Vec<_>>().join(",")));
}

#[test]
fn dropout_sweep_counters() {
    let dir = tempfile::tempdir().unwrap();
    let o = persec(
        &["sweep", "--axis", "dropout_rate", "--values", "0,0.1", "--clients", "16", "--vector-len", "256", "--group", "modp64"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("persec-out/sweep-dropout_rate.csv")).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = r.records().map(|r| r.unwrap()).collect();
    let droprcv: Vec<usize> =
        header.iter().enumerate().filter(|(_, h)| h.contains(".droprcv.")).map(|(i, _)| i).collect();
    assert!(!droprcv.is_empty());
    assert!(droprcv.iter().all(|&i| &rows[0][i] == "0"));
    assert!(droprcv.iter().any(|&i| &rows[1][i] != "0"));
}

#[test]
fn theorem_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = persec(&["theorem-sweep", "--d-min", "3", "--d-max", "5", "--step", "0.1", "--output", "-"], dir.path());
    assert!(o.status.success());
    golden("theorem.csv", &String::from_utf8(o.stdout).unwrap());

    let o = persec(&["theorem-sweep", "--d-min", "40", "--d-max", "40", "--output", "-"], dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("40,0,0,27,14,"), "{first}");

    let o = persec(&["theorem-sweep", "--d-min", "10", "--d-max", "9"], dir.path());
    assert!(o.status.success());
    let table = fs::read_to_string(dir.path().join("persec-out/theorem.csv")).unwrap();
    assert_eq!(table, "d,delta_d,eta_d,ell,delta_max,recovery_feasible,security_holds\n");
}
