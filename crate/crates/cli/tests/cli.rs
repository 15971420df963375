//! End-to-end behavior of the `renewal` binary: exit codes, file schemas,
//! determinism, and agreement with closed-form forecasts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renewal_cli::config::RunConfig;
use renewal_cli::{checkpoint, data};
use renewal_core::features::ChannelStats;
use renewal_core::model::{LossMode, ModelConfig, TrainedModel};
use renewal_core::neural::{Adam, Network};
use renewal_core::survival::{excess_survival, WeibullParams};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_renewal")
}

struct Run {
    code: i32,
    stderr: String,
}

fn renewal(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn the renewal binary");
    Run {
        code: out.status.code().expect("no exit code"),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

/// Parses a CSV produced by the tool into header + string rows.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

const GEN_CFG: &str = "subjects = 30\ntau = 46\nscales = 8, 12\nshapes = 1.0, 1.4\nbetas = 0.5, 0.5\ncoupling = 0.3\nseed = 11\n";
const RUN_CFG: &str = "input = data.csv\ntau = 40\ngamma = 6\nhidden = 6\niterations = 20\nseed = 5\n";

fn generate_and_train(dir: &Path) {
    write(dir, "gen.cfg", GEN_CFG);
    write(dir, "run.cfg", RUN_CFG);
    assert_eq!(renewal(dir, &["generate", "--config", "gen.cfg", "--out", "data.csv"]).code, 0);
    let run = renewal(
        dir,
        &["train", "--config", "run.cfg", "--checkpoint", "model.ckpt", "--out", "loss.csv"],
    );
    assert_eq!(run.code, 0, "train failed: {}", run.stderr);
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[test]
fn generate_emits_schema_and_truth_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.cfg", "subjects = 20\ntau = 30\nscales = 5, 9, 14\nshapes = 1, 1.5, 0.9\nseed = 2\n");
    let run = renewal(dir.path(), &["generate", "--config", "gen.cfg", "--out", "data.csv"]);
    assert_eq!(run.code, 0, "{}", run.stderr);

    let (header, rows) = read_csv(&dir.path().join("data.csv"));
    assert_eq!(header, ["subject_id", "process_id", "t", "value", "quantity"]);
    assert!(!rows.is_empty());
    let mut pids: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    pids.sort();
    pids.dedup();
    assert_eq!(pids, ["p00", "p01", "p02"], "three configured processes, three ids");
    for row in &rows {
        let t: u32 = row[2].parse().unwrap();
        assert!((1..=30).contains(&t));
    }

    let (theader, trows) = read_csv(&dir.path().join("data.truth.csv"));
    assert_eq!(theader, ["process_id", "scale", "shape"]);
    assert_eq!(trows.len(), 3);
    assert_eq!(trows[0], ["p00", "5", "1"]);
    assert_eq!(trows[1], ["p01", "9", "1.5"]);
    assert_eq!(trows[2], ["p02", "14", "0.9"]);
}

#[test]
fn generate_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.cfg", GEN_CFG);
    for out in ["a.csv", "b.csv"] {
        assert_eq!(renewal(dir.path(), &["generate", "--config", "gen.cfg", "--out", out]).code, 0);
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b, "same seed, same bytes");

    let run = renewal(
        dir.path(),
        &["generate", "--config", "gen.cfg", "--out", "c.csv", "--seed", "99"],
    );
    assert_eq!(run.code, 0);
    let c = fs::read(dir.path().join("c.csv")).unwrap();
    assert_ne!(a, c, "seed flag overrides the config");
    let (header, _) = read_csv(&dir.path().join("c.csv"));
    assert_eq!(header, ["subject_id", "process_id", "t", "value", "quantity"]);
}

#[test]
fn generate_rejects_invalid_spec() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.cfg", "subjects = 10\ntau = 30\nscales = -5\n");
    let run = renewal(dir.path(), &["generate", "--config", "gen.cfg", "--out", "data.csv"]);
    assert_eq!(run.code, 2, "{}", run.stderr);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[test]
fn train_writes_checkpoint_and_decreasing_loss_history() {
    let dir = tempfile::tempdir().unwrap();
    generate_and_train(dir.path());

    let (header, rows) = read_csv(&dir.path().join("loss.csv"));
    assert_eq!(header, ["iteration", "loss"]);
    assert_eq!(rows.len(), 20, "one row per training iteration");
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i.to_string());
    }
    let first: f64 = rows[0][1].parse().unwrap();
    let last: f64 = rows[rows.len() - 1][1].parse().unwrap();
    assert!(last < first, "loss should fall on this data: {first} -> {last}");

    let loaded = checkpoint::load(&dir.path().join("model.ckpt")).unwrap();
    assert_eq!(loaded.processes, ["p00", "p01"]);
    assert_eq!(loaded.model.config.hidden, 6);
    assert_eq!(loaded.model.config.mode, LossMode::MatRnn);
    assert_eq!(loaded.model.optimizer.step, 20);
    assert_eq!(loaded.stats.mean.len(), 16);
}

#[test]
fn train_is_byte_deterministic_and_seed_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.cfg", GEN_CFG);
    write(dir.path(), "run.cfg", "input = data.csv\ntau = 40\nhidden = 4\niterations = 6\nseed = 5\n");
    assert_eq!(renewal(dir.path(), &["generate", "--config", "gen.cfg", "--out", "data.csv"]).code, 0);
    for (ckpt, loss) in [("a.ckpt", "a.csv"), ("b.ckpt", "b.csv")] {
        let run = renewal(
            dir.path(),
            &["train", "--config", "run.cfg", "--checkpoint", ckpt, "--out", loss],
        );
        assert_eq!(run.code, 0, "{}", run.stderr);
    }
    let a = fs::read(dir.path().join("a.ckpt")).unwrap();
    let b = fs::read(dir.path().join("b.ckpt")).unwrap();
    assert_eq!(a, b, "fixed seed must reproduce the checkpoint byte for byte");
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );

    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "c.ckpt", "--out", "c.csv", "--seed", "77"],
    );
    assert_eq!(run.code, 0);
    assert_ne!(a, fs::read(dir.path().join("c.ckpt")).unwrap());
}

#[test]
fn train_with_sliding_windows_runs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.cfg", GEN_CFG);
    write(
        dir.path(),
        "run.cfg",
        "input = data.csv\ntau = 40\nhidden = 4\niterations = 4\nwindow = 20\nstride = 10\n",
    );
    assert_eq!(renewal(dir.path(), &["generate", "--config", "gen.cfg", "--out", "data.csv"]).code, 0);
    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "l.csv"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(checkpoint::load(&dir.path().join("m.ckpt")).is_ok());
}

#[test]
fn train_falls_back_to_tau_anchor_without_observed_gaps() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "data.csv",
        "subject_id,process_id,t,value,quantity\na,p,2,1.5,1\nb,p,4,2.0,1\n",
    );
    write(dir.path(), "run.cfg", "input = data.csv\ntau = 6\nhidden = 3\niterations = 2\n");
    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "l.csv"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let loaded = checkpoint::load(&dir.path().join("m.ckpt")).unwrap();
    assert_eq!(loaded.model.config.mu_bar, [6.0], "no gap observed, anchor at tau");
}

// ---------------------------------------------------------------------------
// exit codes
// ---------------------------------------------------------------------------

#[test]
fn malformed_row_exits_2_naming_the_line() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "data.csv",
        "subject_id,process_id,t,value,quantity\na,p,3,1,1\nb,p,nope,1,1\n",
    );
    write(dir.path(), "run.cfg", "input = data.csv\ntau = 10\n");
    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "l.csv"],
    );
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("line 3"), "stderr should name the row: {}", run.stderr);
}

#[test]
fn wrong_header_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", "customer,product,week,value,quantity\na,p,3,1,1\n");
    write(dir.path(), "run.cfg", "input = data.csv\ntau = 10\n");
    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "l.csv"],
    );
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("line 1"), "{}", run.stderr);
}

#[test]
fn empty_input_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", "subject_id,process_id,t,value,quantity\n");
    write(dir.path(), "run.cfg", "input = data.csv\ntau = 10\n");
    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "l.csv"],
    );
    assert_eq!(run.code, 4);
}

#[test]
fn post_window_transactions_only_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", "subject_id,process_id,t,value,quantity\na,p,30,1,1\n");
    write(dir.path(), "run.cfg", "input = data.csv\ntau = 10\n");
    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "l.csv"],
    );
    assert_eq!(run.code, 4, "arrivals after tau alone cannot train anything");
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.cfg", "subjects = 10\ntau = 20\nscales = 4\nseed = 1\n");
    write(
        dir.path(),
        "run.cfg",
        "input = data.csv\ntau = 20\nmode = sqloss\nhidden = 4\niterations = 5\nlearning_rate = 1e160\n",
    );
    assert_eq!(renewal(dir.path(), &["generate", "--config", "gen.cfg", "--out", "data.csv"]).code, 0);
    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "l.csv"],
    );
    assert_eq!(run.code, 3, "{}", run.stderr);
}

#[test]
fn config_conflicts_with_checkpoint_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    generate_and_train(dir.path());
    for bad in [
        "input = data.csv\ntau = 40\nhidden = 7\n",
        "input = data.csv\ntau = 40\nmode = wtte\n",
        "input = data.csv\ntau = 40\nk_max = 8\n",
    ] {
        write(dir.path(), "bad.cfg", bad);
        let run = renewal(
            dir.path(),
            &["predict", "--config", "bad.cfg", "--checkpoint", "model.ckpt", "--out", "p.csv"],
        );
        assert_eq!(run.code, 5, "config {bad:?} should conflict: {}", run.stderr);
    }
    // Leaving the keys out defers to the checkpoint.
    write(dir.path(), "ok.cfg", "input = data.csv\ntau = 40\n");
    let run = renewal(
        dir.path(),
        &["predict", "--config", "ok.cfg", "--checkpoint", "model.ckpt", "--out", "p.csv"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
}

#[test]
fn corrupt_checkpoint_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    generate_and_train(dir.path());
    write(dir.path(), "junk.ckpt", "not a checkpoint at all");
    let run = renewal(
        dir.path(),
        &["predict", "--config", "run.cfg", "--checkpoint", "junk.ckpt", "--out", "p.csv"],
    );
    assert_eq!(run.code, 2, "{}", run.stderr);
}

#[test]
fn config_file_validation_rejections() {
    for bad in [
        "tau = 10\n",                              // missing input
        "input = d.csv\ntau = 1\n",                // tau below 2
        "input = d.csv\ngamma = 0\n",              // gamma below 1
        "input = d.csv\nbanana = 3\n",             // unknown key
        "input = d.csv\ntau = 5\ntau = 6\n",       // duplicate key
        "input = d.csv\nhidden = 0\n",             // zero width
        "input = d.csv\nmode = gamma\n",           // unknown mode
        "input = d.csv\nstatistic = variance\n",   // unknown statistic
        "input = d.csv\nwindow = 0\n",             // zero window
        "input = d.csv\njust a line\n",            // not key = value
    ] {
        let err = RunConfig::parse_str(bad).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{bad:?} should fail config parsing");
    }
    let cfg = RunConfig::parse_str("input = d.csv\n").unwrap();
    assert_eq!(cfg.tau, 78);
    assert_eq!(cfg.gamma, 4);
    assert_eq!(cfg.hidden_or_default(), 36);
    assert_eq!(cfg.iterations, 100);
    assert_eq!(cfg.clip, 5.0);
    assert_eq!(cfg.learning_rate, 1e-3);
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

#[test]
fn predict_probabilities_lie_in_unit_interval_and_grow_with_gamma() {
    let dir = tempfile::tempdir().unwrap();
    generate_and_train(dir.path());
    write(dir.path(), "g4.cfg", "input = data.csv\ntau = 40\ngamma = 4\n");
    write(dir.path(), "g8.cfg", "input = data.csv\ntau = 40\ngamma = 8\n");
    for (cfg, out) in [("g4.cfg", "p4.csv"), ("g8.cfg", "p8.csv")] {
        let run = renewal(
            dir.path(),
            &["predict", "--config", cfg, "--checkpoint", "model.ckpt", "--out", out],
        );
        assert_eq!(run.code, 0, "{}", run.stderr);
    }
    let (header, rows4) = read_csv(&dir.path().join("p4.csv"));
    assert_eq!(header, ["subject_id", "process_id", "hit_probability", "point_estimate", "tse"]);
    let (_, rows8) = read_csv(&dir.path().join("p8.csv"));
    assert_eq!(rows4.len(), rows8.len());
    assert!(!rows4.is_empty());
    for (r4, r8) in rows4.iter().zip(&rows8) {
        assert_eq!(r4[0], r8[0]);
        assert_eq!(r4[1], r8[1]);
        let p4: f64 = r4[2].parse().unwrap();
        let p8: f64 = r8[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&p4));
        assert!((0.0..=1.0).contains(&p8));
        assert!(p8 + 1e-12 >= p4, "longer horizon cannot lower the probability");
        let point: f64 = r4[3].parse().unwrap();
        assert!(point >= 0.0);
        let tse: u32 = r4[4].parse().unwrap();
        assert!(tse <= 40);
    }
}

/// A checkpoint with zero recurrent weights emits its dense bias at every
/// step, so the predicted probabilities must match the excess-survival
/// formula evaluated at those fixed parameters.
#[test]
fn predict_matches_closed_form_for_fixed_parameter_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let raw_scale = 0.3;
    let raw_shape = -0.4;
    let mu_bar = 5.0;
    let k_max = 10.0;

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut network = Network::init(11, 4, 2, &mut rng).unwrap();
    for tensor in network.tensors_mut() {
        tensor.fill(0.0);
    }
    network.dense_b.data_mut().copy_from_slice(&[raw_scale, raw_shape]);
    let optimizer = Adam::new(1e-3, &network.tensors());
    let model = TrainedModel {
        config: ModelConfig {
            hidden: 4,
            processes: 1,
            mode: LossMode::MatRnn,
            k_max,
            mu_bar: vec![mu_bar],
            learning_rate: 1e-3,
            iterations: 0,
            clip_threshold: 5.0,
            seed: 0,
        },
        network,
        optimizer,
    };
    let stats = ChannelStats { mean: vec![0.0; 11], std: vec![1.0; 11] };
    checkpoint::save(&dir.path().join("fixed.ckpt"), &model, &stats, &["p00".to_string()])
        .unwrap();

    write(
        dir.path(),
        "data.csv",
        "subject_id,process_id,t,value,quantity\na,p00,2,1,1\na,p00,6,1,1\nb,p00,9,1,1\n",
    );
    write(dir.path(), "run.cfg", "input = data.csv\ntau = 10\ngamma = 3\n");
    let run = renewal(
        dir.path(),
        &["predict", "--config", "run.cfg", "--checkpoint", "fixed.ckpt", "--out", "p.csv"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);

    let scale = mu_bar * raw_scale.exp();
    let shape = k_max / (1.0 + (k_max - 1.0) * (-raw_shape).exp());
    let params = WeibullParams::new(scale, shape).unwrap();
    let (_, rows) = read_csv(&dir.path().join("p.csv"));
    assert_eq!(rows.len(), 2);
    // a: last arrival at 6 of 10 -> tse 4; b: last at 9 -> tse 1.
    for (row, tse) in rows.iter().zip([4.0f64, 1.0]) {
        let hit: f64 = row[2].parse().unwrap();
        let expected = 1.0 - excess_survival(3.0, tse, &params).unwrap();
        assert!(
            (hit - expected).abs() <= 1e-9,
            "hit {hit} vs closed form {expected} at tse {tse}"
        );
        let direct = 1.0
            - (-(((tse + 3.0) / scale).powf(shape) - (tse / scale).powf(shape))).exp();
        assert!((hit - direct).abs() <= 1e-9, "independent formula disagrees");
        assert_eq!(row[4], (tse as u32).to_string());
    }
}

#[test]
fn sqloss_predict_reports_score_and_point_estimate() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.cfg", GEN_CFG);
    write(
        dir.path(),
        "run.cfg",
        "input = data.csv\ntau = 40\ngamma = 6\nmode = sqloss\nhidden = 6\niterations = 10\n",
    );
    assert_eq!(renewal(dir.path(), &["generate", "--config", "gen.cfg", "--out", "data.csv"]).code, 0);
    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "l.csv"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let run = renewal(
        dir.path(),
        &["predict", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "p.csv"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (_, rows) = read_csv(&dir.path().join("p.csv"));
    assert!(!rows.is_empty());
    for row in &rows {
        let score: f64 = row[2].parse().unwrap();
        let point: f64 = row[3].parse().unwrap();
        assert!(point >= 0.0);
        assert_eq!(score, 6.0 - point, "sqloss score column is gamma minus the prediction");
    }
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[test]
fn evaluate_reports_aucs_summary_and_remaining_time_errors() {
    let dir = tempfile::tempdir().unwrap();
    generate_and_train(dir.path());
    let run = renewal(
        dir.path(),
        &["evaluate", "--config", "run.cfg", "--checkpoint", "model.ckpt", "--out", "report.csv"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = read_csv(&dir.path().join("report.csv"));
    assert_eq!(header, ["record", "process_id", "min", "q25", "q50", "q75", "max", "mean", "value"]);
    let aucs: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "roc_auc").collect();
    assert_eq!(aucs.len(), 2, "one row per process");
    assert_eq!(aucs[0][1], "p00");
    assert_eq!(aucs[1][1], "p01");
    let summary: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "auc_summary").collect();
    assert_eq!(summary.len(), 1);
    let min: f64 = summary[0][2].parse().unwrap();
    let max: f64 = summary[0][6].parse().unwrap();
    let mean: f64 = summary[0][7].parse().unwrap();
    assert!(min <= mean && mean <= max);
    assert!(rows.iter().any(|r| r[0] == "rmse"));
    assert!(rows.iter().any(|r| r[0] == "mcl"));
}

#[test]
fn evaluate_reports_single_class_auc_as_absent() {
    let dir = tempfile::tempdir().unwrap();
    // p00 has holdout arrivals for some subjects only; p01 has none at all.
    let mut csv = String::from("subject_id,process_id,t,value,quantity\n");
    for (s, ts) in [("a", vec![3, 9, 15]), ("b", vec![5, 18]), ("c", vec![2, 7, 12, 19]), ("d", vec![8])] {
        for t in ts {
            csv.push_str(&format!("{s},p00,{t},1,1\n"));
        }
    }
    for s in ["a", "b", "c", "d"] {
        csv.push_str(&format!("{s},p01,6,1,1\n"));
    }
    // Holdout arrivals after tau = 20 for half the subjects on p00 only.
    csv.push_str("a,p00,22,1,1\nb,p00,23,1,1\n");
    write(dir.path(), "data.csv", &csv);
    write(dir.path(), "run.cfg", "input = data.csv\ntau = 20\ngamma = 4\nhidden = 4\niterations = 5\n");
    let run = renewal(
        dir.path(),
        &["train", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "l.csv"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let run = renewal(
        dir.path(),
        &["evaluate", "--config", "run.cfg", "--checkpoint", "m.ckpt", "--out", "report.csv"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (_, rows) = read_csv(&dir.path().join("report.csv"));
    let p00 = rows.iter().find(|r| r[0] == "roc_auc" && r[1] == "p00").unwrap();
    let p01 = rows.iter().find(|r| r[0] == "roc_auc" && r[1] == "p01").unwrap();
    assert!(!p00[8].is_empty(), "mixed labels produce a number");
    assert!(p01[8].is_empty(), "single-class holdout must stay absent, not fabricated");
    // The summary covers only the defined AUC.
    let summary = rows.iter().find(|r| r[0] == "auc_summary").unwrap();
    assert_eq!(summary[2], p00[8]);
    assert_eq!(summary[6], p00[8]);
}

/// Rows after the training window must not change the forecasts: features
/// and conditioning are built strictly from steps at or before tau.
#[test]
fn predictions_ignore_post_window_data() {
    let dir = tempfile::tempdir().unwrap();
    generate_and_train(dir.path());
    let full = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let mut truncated = String::new();
    for (i, line) in full.lines().enumerate() {
        if i == 0 {
            truncated.push_str(line);
            truncated.push('\n');
            continue;
        }
        let t: u32 = line.split(',').nth(2).unwrap().parse().unwrap();
        if t <= 40 {
            truncated.push_str(line);
            truncated.push('\n');
        }
    }
    assert_ne!(full, truncated, "the generated log should extend past tau");
    write(dir.path(), "trunc.csv", &truncated);
    write(dir.path(), "full.cfg", "input = data.csv\ntau = 40\ngamma = 6\n");
    write(dir.path(), "trunc.cfg", "input = trunc.csv\ntau = 40\ngamma = 6\n");
    for (cfg, out) in [("full.cfg", "pf.csv"), ("trunc.cfg", "pt.csv")] {
        let run = renewal(
            dir.path(),
            &["predict", "--config", cfg, "--checkpoint", "model.ckpt", "--out", out],
        );
        assert_eq!(run.code, 0, "{}", run.stderr);
    }
    assert_eq!(
        fs::read(dir.path().join("pf.csv")).unwrap(),
        fs::read(dir.path().join("pt.csv")).unwrap(),
        "forecasts must be identical with and without post-window rows"
    );
}

// ---------------------------------------------------------------------------
// ingestion round trip
// ---------------------------------------------------------------------------

#[test]
fn generated_log_round_trips_through_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.cfg", "subjects = 25\ntau = 40\nscales = 6, 10\nshapes = 1, 1.3\ncoupling = 0.2\nseed = 21\n");
    assert_eq!(renewal(dir.path(), &["generate", "--config", "gen.cfg", "--out", "data.csv"]).code, 0);

    let spec = renewal_core::datagen::GeneratorSpec {
        processes: vec![
            renewal_core::datagen::ProcessSpec { scale: 6.0, shape: 1.0, covariate_beta: 0.0 },
            renewal_core::datagen::ProcessSpec { scale: 10.0, shape: 1.3, covariate_beta: 0.0 },
        ],
        coupling: 0.2,
        subjects: 25,
        window_end: 40,
        seed: 21,
    };
    let ds = renewal_core::datagen::generate(&spec).unwrap();
    let log = data::read_transactions(&dir.path().join("data.csv")).unwrap();
    for subject in &ds.subjects {
        for (i, expected) in subject.arrivals.iter().enumerate() {
            let got = data::subject_arrivals(&log, &subject.id, &format!("p{i:02}"), 40).unwrap();
            assert_eq!(got.arrivals(), expected.arrivals(), "subject {} process {i}", subject.id);
        }
    }
}
