//! End-to-end acceptance checks. Every test prints one `PASS`/`FAIL` line,
//! written straight to stdout so it shows without `--nocapture`.

#[path = "../../core/tests/oracles.rs"]
mod oracles;

use bdrbm::eval::filter_report;
use bdrbm::ffnn::FfnnModel;
use bdrbm::pipeline::{predict_distribution, BdrbmModel};
use bdrbm::quantum::{random_basis_with, Boundary, SpinConvention};
use bdrbm::rbm::RbmParams;
use bdrbm::rng::seeded_rng;
use bdrbm_cli::{fidelity_cell, scaling_cell, FidelityCell, FidelitySweep, ScalingSweep, TrainOptions};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

const SEEDS: [u64; 3] = [0, 1, 2];
const JX_LIST: [f64; 6] = [0.0, 0.4, 0.8, 1.0, 1.5, 3.0];

fn report(criterion: u32, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {criterion}: {} {detail}", if pass { "PASS" } else { "FAIL" }).unwrap();
}

fn profile() -> TrainOptions {
    TrainOptions { rbm_epochs: Some(20), fine_tune_epochs: Some(20), rbm_lr: Some(0.1), ..TrainOptions::default() }
}

fn fidelity_sweep(n_bases: usize, jx_list: Vec<f64>, boundary: Boundary) -> FidelitySweep {
    FidelitySweep {
        sites: 6,
        jz: 1.0,
        jx_list,
        n_bases,
        shots: 8192,
        seeds: SEEDS.to_vec(),
        boundary,
        spin: SpinConvention::Pauli,
        options: TrainOptions { hidden: Some(6), ..profile() },
    }
}

fn scaling_sweep(sites: usize) -> ScalingSweep {
    ScalingSweep {
        sites_list: vec![sites],
        bases_list: vec![],
        jz: 1.0,
        jx: 1.0,
        shots: 8192,
        seeds: SEEDS.to_vec(),
        eval_bases: 100,
        boundary: Boundary::Open,
        spin: SpinConvention::Pauli,
        options: TrainOptions { hidden: Some(sites), ..profile() },
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

struct TfimSweep {
    cells: Vec<(f64, u64, FidelityCell)>,
    elapsed: Duration,
}

impl TfimSweep {
    fn at(&self, jx: f64) -> impl Iterator<Item = &FidelityCell> {
        self.cells.iter().filter(move |c| c.0 == jx).map(|c| &c.2)
    }

    fn mean_fc(&self, jx: f64, split: &str, kind: &str) -> f64 {
        mean(self.at(jx).flat_map(|c| c.rows.iter()).filter(|r| r.split == split && r.kind == kind).map(|r| r.mean_fc))
    }
}

/// The 6-site sweep shared by the dip and filter criteria. A ring keeps the
/// finite-size pseudo-critical point near J_x = J_z; open ends pull it to
/// about 0.6.
fn tfim_sweep() -> &'static TfimSweep {
    static SWEEP: OnceLock<TfimSweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let t = Instant::now();
        let sweep = fidelity_sweep(200, JX_LIST.to_vec(), Boundary::Periodic);
        let cells = JX_LIST
            .iter()
            .flat_map(|&jx| SEEDS.iter().map(move |&s| (jx, s)))
            .map(|(jx, s)| (jx, s, fidelity_cell(&sweep, jx, s).unwrap()))
            .collect();
        TfimSweep { cells, elapsed: t.elapsed() }
    })
}

#[test]
fn criterion_1_fidelity_dip_at_criticality() {
    let sweep = tfim_sweep();
    let f: Vec<f64> = JX_LIST.iter().map(|&jx| sweep.mean_fc(jx, "validation", "vs_exact_target")).collect();
    let at = |jx: f64| f[JX_LIST.iter().position(|&x| x == jx).unwrap()];
    let strict_min = JX_LIST.iter().zip(&f).all(|(&jx, &v)| jx == 1.0 || v > at(1.0));
    let checks = [
        at(1.0) >= 0.93,
        at(0.0) >= 0.96,
        at(3.0) >= 0.96,
        strict_min,
        sweep.elapsed <= Duration::from_secs(20 * 60),
    ];
    let series: Vec<String> = JX_LIST.iter().zip(&f).map(|(jx, v)| format!("{jx}:{v:.4}")).collect();
    let pass = checks.iter().all(|&c| c);
    report(
        1,
        pass,
        &format!(
            "val-vs-target mean F_c [{}] (>=0.93 at 1, >=0.96 at 0 and 3, strict min at 1: {strict_min}) in {:.0}s",
            series.join(" "),
            sweep.elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_ten_qubit_predictive_fidelity() {
    let t = Instant::now();
    let sweep = scaling_sweep(10);
    let rows: Vec<_> = SEEDS.iter().map(|&s| scaling_cell(&sweep, 10, 200, s).unwrap()).collect();
    let elapsed = t.elapsed();
    let fc = mean(rows.iter().map(|r| r.predictive_fc));
    let pass = (fc - 0.93).abs() <= 0.03 && elapsed <= Duration::from_secs(3600);
    let per_seed: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.predictive_fc)).collect();
    report(2, pass, &format!("predictive F_c {fc:.4} (0.93±0.03), seeds [{}] in {:.0}s", per_seed.join(" "), elapsed.as_secs_f64()));
    assert!(pass);
}

#[test]
fn criterion_3_hundred_bases_suffice_at_strong_field() {
    let t = Instant::now();
    // 125 measured bases with a 0.2 validation split leaves 100 for training
    let sweep = fidelity_sweep(125, vec![3.0], Boundary::Open);
    let cells: Vec<FidelityCell> = SEEDS.iter().map(|&s| fidelity_cell(&sweep, 3.0, s).unwrap()).collect();
    let elapsed = t.elapsed();
    assert!(cells.iter().all(|c| c.run.dataset.indices(bdrbm::pipeline::Split::Train).len() == 100));
    let fc = mean(cells.iter().flat_map(|c| c.rows.iter()).filter(|r| r.split == "validation" && r.kind == "vs_empirical").map(|r| r.mean_fc));
    let pass = fc >= 0.95 && elapsed <= Duration::from_secs(600);
    report(3, pass, &format!("val-vs-empirical F_c {fc:.4} (>=0.95) in {:.0}s", elapsed.as_secs_f64()));
    assert!(pass);
}

#[test]
fn criterion_4_oracle_equivalences() {
    let t = Instant::now();
    let checks: [(&str, fn()); 6] = [
        ("outcome distribution vs dense rotation", oracles::outcome_distribution_matches_dense_rotation),
        ("RBM distribution vs joint enumeration", oracles::exact_distribution_matches_joint_enumeration),
        ("Gibbs sampling TV", oracles::gibbs_samples_match_enumeration),
        ("FFNN gradients vs finite differences", oracles::gradients_match_finite_differences),
        ("ADAM step-through", oracles::adam_matches_step_through),
        ("CD-1 step-through", oracles::cd1_matches_step_through),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        if std::panic::catch_unwind(check).is_err() {
            failed.push(name);
        }
    }
    let elapsed = t.elapsed();
    let pass = failed.is_empty() && elapsed <= Duration::from_secs(300);
    report(4, pass, &format!("6 oracle checks, failed {failed:?} in {:.1}s", elapsed.as_secs_f64()));
    assert!(pass);
}

#[test]
fn criterion_5_predictions_are_normalized() {
    let mut rng = seeded_rng(5);
    let mut worst = 0.0f64;
    let mut bad = 0;
    for case in 0..1000 {
        let n = rng.random_range(1..=5);
        let n_h = rng.random_range(1..=5);
        let p = RbmParams::<f64>::n_params(n, n_h);
        let scale = 10f64.powf(rng.random_range(-2.0..1.3));
        let gauss = |rng: &mut _| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        let net = match case % 3 {
            0 => FfnnModel::linear(3 * n, p),
            1 => {
                let offset = Array1::from_shape_fn(p, |_| gauss(&mut rng));
                let filter = Array2::from_shape_fn((p, 3 * n), |_| gauss(&mut rng));
                FfnnModel::from_linear(offset, filter).unwrap()
            }
            _ => {
                let mut m = FfnnModel::mlp(3 * n, &[rng.random_range(1..=8)], p, &mut rng);
                let flat: Vec<f64> = (0..m.n_params()).map(|_| gauss(&mut rng)).collect();
                m.set_flat(&flat).unwrap();
                m
            }
        };
        let model = BdrbmModel::new(net, None, n, n_h).unwrap();
        let basis = random_basis_with(n, &mut rng);
        let d = predict_distribution(&model, &basis).unwrap();
        let sum: f64 = d.probs().iter().sum();
        worst = worst.max((sum - 1.0).abs());
        if d.probs().iter().any(|&q| !(q >= 0.0)) || !((sum - 1.0).abs() <= 1e-9) {
            bad += 1;
        }
    }
    let pass = bad == 0;
    report(5, pass, &format!("1000 random models, {bad} invalid, max |sum-1| = {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_6_filter_blocks_follow_the_field() {
    let sweep = tfim_sweep();
    let blocks = |jx: f64| {
        let reports: Vec<_> = sweep.at(jx).map(|c| filter_report(&c.run.model).unwrap()).collect();
        let coupling = mean(reports.iter().map(|r| r.hidden_bias.total + r.weights.total));
        let visible_x = mean(reports.iter().map(|r| r.visible_bias.per_axis[0]));
        (coupling, visible_x)
    };
    let ((c0, x0), (c3, x3)) = (blocks(0.0), blocks(3.0));
    let pass = c0 > c3 && x3 > x0;
    report(
        6,
        pass,
        &format!("hidden-bias+weight mass {c0:.3} at Jx=0 vs {c3:.3} at Jx=3; visible-bias x mass {x0:.3} at Jx=0 vs {x3:.3} at Jx=3"),
    );
    assert!(pass);
}

#[test]
fn criterion_7_double_descent() {
    let t = Instant::now();
    let bases = [25, 50, 75, 100, 150, 200, 300, 400];
    let sweep = scaling_sweep(6);
    let mut curves = Vec::new();
    for &s in &SEEDS {
        let gaps: Vec<f64> = bases.iter().map(|&b| scaling_cell(&sweep, 6, b, s).unwrap().gap).collect();
        curves.push(gaps);
    }
    let interior_peak = |g: &[f64]| (1..g.len() - 1).any(|i| g[i] > g[i - 1] && g[i] > g[i + 1]);
    let pass = curves.iter().any(|g| interior_peak(g));
    let text: Vec<String> = curves
        .iter()
        .zip(SEEDS)
        .map(|(g, s)| format!("seed {s} [{}]", g.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")))
        .collect();
    // qualitative only: reported, never asserted
    report(7, pass, &format!("overfit gap over {bases:?}: {} in {:.0}s", text.join("; "), t.elapsed().as_secs_f64()));
}

#[test]
fn criterion_8_training_is_deterministic() {
    let dir = tempfile::TempDir::new().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let bin = env!("CARGO_BIN_EXE_bdrbm");
    let run = |args: &[&str], threads: &str| {
        let out = Command::new(bin).args(args).env("BDRBM_THREADS", threads).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let (state, data) = (path("state.json"), path("data.json"));
    run(&["gen-state", "--sites", "4", "--out", &state], "1");
    run(&["measure", "--state", &state, "--bases", "20", "--shots", "1000", "--seed", "3", "--out", &data], "1");
    let mut files = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let model = path(&format!("model{i}.json"));
        run(&["train", "--data", &data, "--seed", "7", "--rbm-epochs", "2", "--reg-epochs", "200", "--out-model", &model], threads);
        files.push(std::fs::read(&model).unwrap());
    }
    let pass = files[0] == files[1];
    report(8, pass, &format!("two train runs, model files {} bytes, identical: {pass}", files[0].len()));
    assert!(pass);
}
