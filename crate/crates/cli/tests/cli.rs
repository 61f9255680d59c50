use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const FAST: &[&str] = &["--rbm-epochs", "1", "--reg-epochs", "50", "--fine-tune-rounds", "1"];

fn bdrbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdrbm")).args(args).env("BDRBM_THREADS", "1").output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = bdrbm(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self { dir: TempDir::new().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn state(&self, sites: usize) -> PathBuf {
        let p = self.path("state.json");
        ok(&["gen-state", "--sites", &sites.to_string(), "--jx", "1", "--out", s(&p)]);
        p
    }

    fn data(&self, sites: usize, bases: usize, shots: u64) -> PathBuf {
        let st = self.state(sites);
        let p = self.path("data.json");
        ok(&["measure", "--state", s(&st), "--bases", &bases.to_string(), "--shots", &shots.to_string(), "--seed", "4", "--out", s(&p)]);
        p
    }

    fn model(&self, extra: &[&str]) -> PathBuf {
        let data = self.data(2, 10, 200);
        let p = self.path("model.json");
        let mut args = vec!["train", "--data", s(&data), "--out-model", s(&p)];
        args.extend_from_slice(FAST);
        args.extend_from_slice(extra);
        ok(&args);
        p
    }
}

#[test]
fn gen_state_prints_two_site_energy() {
    let f = Fixture::new();
    let p = f.path("s.json");
    let out = ok(&["gen-state", "--sites", "2", "--jx", "0", "--out", s(&p)]);
    let e: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((e + 0.25).abs() < 1e-8, "{e}");
    let v = json(&p);
    assert_eq!(v["n_qubits"], 2);
    assert_eq!(v["amplitudes"].as_array().unwrap().len(), 4);
}

#[test]
fn gen_state_without_out_is_usage_error() {
    assert_eq!(bdrbm(&["gen-state", "--sites", "3"]).status.code(), Some(2));
}

#[test]
fn measure_is_deterministic_and_counts_sum_to_shots() {
    let f = Fixture::new();
    let st = f.state(3);
    let (a, b) = (f.path("a.json"), f.path("b.json"));
    for p in [&a, &b] {
        ok(&["measure", "--state", s(&st), "--bases", "5", "--shots", "300", "--seed", "9", "--out", s(p)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    for r in json(&a)["records"].as_array().unwrap() {
        let total: u64 = r["counts"].as_object().unwrap().values().map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(total, 300);
        assert!(r["counts"].as_object().unwrap().keys().all(|k| k.len() == 3));
    }
}

#[test]
fn single_shot_records_hold_one_outcome() {
    let f = Fixture::new();
    let data = f.data(2, 4, 1);
    for r in json(&data)["records"].as_array().unwrap() {
        assert_eq!(r["counts"].as_object().unwrap().len(), 1);
    }
}

#[test]
fn train_without_fine_tuning_says_so() {
    let f = Fixture::new();
    let data = f.data(2, 10, 200);
    let (model, report) = (f.path("m.json"), f.path("r.json"));
    let out = ok(&[
        "train", "--data", s(&data), "--rbm-epochs", "1", "--reg-epochs", "50", "--fine-tune-rounds", "0",
        "--out-model", s(&model), "--report", s(&report),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("fine-tuning skipped"));
    let r = json(&report);
    assert_eq!(r["metrics"]["fine_tuned"], false);
    assert_eq!(r["metrics"]["n_train"].as_u64().unwrap() + r["metrics"]["n_validation"].as_u64().unwrap(), 10);
    assert_eq!(json(&model)["n_hidden"], 2);
}

#[test]
fn train_on_corrupted_file_is_runtime_error() {
    let f = Fixture::new();
    let data = f.path("bad.json");
    std::fs::write(&data, "{\"schema_version\": 1, \"records\": [").unwrap();
    let out = bdrbm(&["train", "--data", s(&data), "--out-model", s(&f.path("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn predict_returns_normalized_distribution_and_samples() {
    let f = Fixture::new();
    let model = f.model(&[]);
    let out = ok(&["predict", "--model", s(&model), "--basis", "0,0,1;1,0,0", "--samples", "20", "--seed", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = &v[0];
    let total: f64 = p["distribution"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(p["samples"].as_array().unwrap().len(), 20);

    let csv = f.path("p.csv");
    ok(&["predict", "--model", s(&model), "--basis", "0,0,1;1,0,0", "--format", "csv", "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "basis_index,kind,outcome,value");
    assert_eq!(text.lines().count(), 1 + 4);
}

#[test]
fn predict_with_malformed_basis_is_usage_error() {
    let f = Fixture::new();
    let model = f.model(&[]);
    for basis in ["0,0,1", "0,0,1;1,0", "0,0,2;1,0,0", "a,b,c;0,0,1"] {
        let out = bdrbm(&["predict", "--model", s(&model), "--basis", basis]);
        assert_eq!(out.status.code(), Some(2), "{basis}");
    }
}

#[test]
fn filters_on_linear_model_write_matrix_and_summary() {
    let f = Fixture::new();
    let model = f.model(&[]);
    let (m, sum) = (f.path("f.csv"), f.path("s.csv"));
    ok(&["filters", "--model", s(&model), "--out-csv", s(&m), "--summary-csv", s(&sum)]);
    let text = std::fs::read_to_string(&m).unwrap();
    // 2 visible + 2 hidden + 4 weights
    assert_eq!(text.lines().count(), 1 + 8);
    assert_eq!(text.lines().next().unwrap(), "index,block,param,x0,y0,z0,x1,y1,z1");
    assert_eq!(std::fs::read_to_string(&sum).unwrap().lines().count(), 4);
}

#[test]
fn filters_on_hidden_layer_model_is_capability_error() {
    let f = Fixture::new();
    let model = f.model(&["--hidden-layers", "4"]);
    let out = bdrbm(&["filters", "--model", s(&model), "--out-csv", s(&f.path("f.csv"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fidelity_sweep_writes_four_series_per_cell() {
    let f = Fixture::new();
    let out = f.path("sweep.csv");
    let mut args = vec![
        "sweep-fidelity", "--sites", "2", "--jx-list", "0,1", "--bases", "10", "--shots", "200", "--seeds", "0,1",
        "--out-csv", s(&out),
    ];
    args.extend_from_slice(FAST);
    ok(&args);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "jx,seed,split,kind,mean_fc,std_fc");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 2 * 4);
    assert!(rows[0].starts_with("0.0,0,train,vs_empirical,"));
    assert!(rows[15].starts_with("1.0,1,validation,vs_exact_target,"));
}

#[test]
fn scaling_sweep_writes_one_row_per_cell() {
    let f = Fixture::new();
    let out = f.path("scaling.csv");
    let mut args = vec![
        "sweep-scaling", "--sites-list", "2", "--bases-list", "5,10", "--shots", "200", "--seeds", "3",
        "--eval-bases", "7", "--out-csv", s(&out),
    ];
    args.extend_from_slice(FAST);
    ok(&args);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sites,n_bases,seed,predictive_fc,predictive_std,reconstructive_fc,reconstructive_std,gap");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,5,3,"));
    assert!(lines[2].starts_with("2,10,3,"));
}

#[test]
fn bad_thread_count_is_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_bdrbm"))
        .args(["gen-state", "--sites", "2", "--out", "/dev/null"])
        .env("BDRBM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
