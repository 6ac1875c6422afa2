//! Acceptance checks, one PASS/FAIL line each.
//!
//! `cargo test --release --test acceptance` runs all of them; trailing
//! numbers (`-- 1 4 7`) restrict the run. The report is the result: the
//! process exits non-zero on a FAIL only when `HCG_ACCEPT_STRICT` is set, so
//! the remaining test targets still run under `cargo test`.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{brute_metrics, random_counts};
use hcg::data::{synth_generate, SynthConfig};
use hcg::eval::{compute_metrics, ConfusionMatrix};
use hcg::layers::{conv1d_forward, gru_cell, softmax, Conv1dLayer, GruLayer, SeqBatch};
use hcg::model::{checkpoint_from_str, checkpoint_to_string, Arch, Metadata, Model, ModelConfig};
use hcg::numerics::Matrix;
use hcg::training::{prepare_dataset, run_experiment, TrainConfig};
use hcg::verify::{gradient_suite, DEFAULT_TOLERANCE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let outcomes = gradient_suite(0, 20).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let worst = outcomes
        .iter()
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .unwrap();
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed(DEFAULT_TOLERANCE))
        .map(|o| o.name)
        .collect();
    Ok((
        failed.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{} checks x 20 seeds, worst {:.2e} ({}), failed {:?}, {}",
            outcomes.len(),
            worst.max_rel_error,
            worst.name,
            failed,
            secs(elapsed)
        ),
    ))
}

fn forward_oracles() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let mut conv = Conv1dLayer::new("c", 2, 1, 2, false).map_err(|e| e.to_string())?;
    conv.set_kernel(0, &Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap())
        .map_err(|e| e.to_string())?;
    let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
    let pre = conv
        .pre_activation(&SeqBatch::from_sample(&x))
        .map_err(|e| e.to_string())?;
    let conv_ok = pre.data().as_slice().iter().zip([1.0, 5.0, 9.0]).all(|(&a, b)| close(a, b));

    let mut gru = GruLayer::new("g", 1, 1).map_err(|e| e.to_string())?;
    for w in [&mut gru.w_r, &mut gru.w_u, &mut gru.w_c] {
        w.value = Matrix::new(2, 1, vec![1.0, 1.0]).unwrap();
    }
    let (h, g) = gru_cell(&[1.0], &[0.0], &gru).map_err(|e| e.to_string())?;
    // tests/oracles/fixtures.py: gru cell
    let gru_ok = close(g.r[0], 0.7310585786300049)
        && close(g.u[0], 0.7310585786300049)
        && close(g.c[0], 0.7615941559557649)
        && close(h[0], 0.20482421480982513);
    Ok((
        conv_ok && gru_ok,
        format!("conv [1,5,9] {conv_ok}, gru cell h={:.12} {gru_ok}", h[0]),
    ))
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = 0.0f64;
    let mut accuracy_exact = true;
    for _ in 0..100 {
        let classes = rng.gen_range(2..=6);
        let counts = random_counts(&mut rng, classes, 12);
        let cm = ConfusionMatrix::from_counts(&counts).map_err(|e| e.to_string())?;
        let report = compute_metrics(&cm).map_err(|e| e.to_string())?;
        let brute = brute_metrics(&counts);
        accuracy_exact &= report.accuracy == brute.accuracy;
        for (c, m) in report.per_class.iter().enumerate() {
            worst = worst
                .max((m.precision - brute.precision[c]).abs())
                .max((m.recall - brute.recall[c]).abs())
                .max((m.f1 - brute.f1[c]).abs());
        }
    }
    Ok((
        accuracy_exact && worst < 1e-12,
        format!("100 matrices, accuracy exact {accuracy_exact}, worst P/R/F1 gap {worst:.1e}"),
    ))
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut lengths_ok = true;
    for t in [1usize, 2, 5, 16, 128] {
        for k in [1usize, 2, 3, 5, 8] {
            let mut layer = Conv1dLayer::new("c", 3, 4, k, true).map_err(|e| e.to_string())?;
            layer.init_glorot(&mut rng);
            let x = Matrix::new(t, 3, (0..3 * t).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap();
            lengths_ok &= conv1d_forward(&x, &layer).map_err(|e| e.to_string())?.rows() == t;
        }
    }
    let mut worst_sum = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..10);
        let scale = 10f64.powi(rng.gen_range(-3..4));
        let logits: Vec<f64> = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        worst_sum = worst_sum.max((softmax(&logits).iter().sum::<f64>() - 1.0).abs());
    }
    let mut bitwise = true;
    for arch in Arch::ALL {
        let mut cfg = ModelConfig::new(arch, 4, 16, 3).scaled(0.25);
        cfg.seed = 9;
        let model = Model::new(cfg).map_err(|e| e.to_string())?;
        let text = checkpoint_to_string(&model, &Metadata::default());
        let (back, _) = checkpoint_from_str(&text).map_err(|e| e.to_string())?;
        bitwise &= back == model && checkpoint_to_string(&back, &Metadata::default()) == text;
    }
    Ok((
        lengths_ok && worst_sum < 1e-12 && bitwise,
        format!(
            "conv length == T over 25 (T,k) {lengths_ok}, softmax sum gap {worst_sum:.1e}, checkpoint bitwise {bitwise}"
        ),
    ))
}

fn learning() -> Outcome {
    let start = Instant::now();
    let raw = synth_generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let (ds, _) = prepare_dataset(&raw, 0).map_err(|e| e.to_string())?;
    let cfg = ModelConfig::new(Arch::Hcg, 8, 128, 4);
    let exp = run_experiment(&ds, cfg, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let acc = exp.test.accuracy;
    Ok((
        acc >= 0.95 && elapsed < Duration::from_secs(300),
        format!("default HCG, 30 epochs, seed 0: test accuracy {acc:.4} in {}", secs(elapsed)),
    ))
}

/// The HCG used for the parity comparison.
fn compact_hcg() -> ModelConfig {
    let mut cfg = ModelConfig::new(Arch::Hcg, 8, 128, 4);
    cfg.conv = vec![32, 32];
    cfg.recurrent = vec![64, 64];
    cfg.dense = vec![64];
    cfg
}

fn ordering() -> Outcome {
    let start = Instant::now();
    let raw = synth_generate(&SynthConfig::harder()).map_err(|e| e.to_string())?;
    let (ds, _) = prepare_dataset(&raw, 0).map_err(|e| e.to_string())?;
    let reference = compact_hcg();
    let target = reference.param_count() as f64;
    let mut means = Vec::new();
    for arch in Arch::ALL {
        let base = ModelConfig::parity(arch, &reference).map_err(|e| e.to_string())?;
        let gap = (base.param_count() as f64 - target).abs() / target;
        if gap > 0.10 {
            return Ok((false, format!("{} is {:.1}% off parity", arch.label(), 100.0 * gap)));
        }
        let mut total = 0.0;
        for seed in 0..5 {
            let model_cfg = ModelConfig { seed, ..base.clone() };
            let train_cfg = TrainConfig { seed, ..TrainConfig::default() };
            total += run_experiment(&ds, model_cfg, &train_cfg)
                .map_err(|e| e.to_string())?
                .test
                .accuracy;
        }
        means.push((arch, total / 5.0));
    }
    let hcg = means.iter().find(|(a, _)| *a == Arch::Hcg).unwrap().1;
    let ok = means.iter().all(|&(_, m)| hcg >= m);
    let table: Vec<String> = means.iter().map(|(a, m)| format!("{} {m:.3}", a.label())).collect();
    Ok((ok, format!("harder preset, 5 seeds: {} ({})", table.join(", "), secs(start.elapsed()))))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let synth = SynthConfig {
        samples_per_class: 20,
        window: 32,
        sensors: 4,
        seed: 3,
        ..SynthConfig::default()
    };
    let run = |tag: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let (ds, _) = prepare_dataset(&synth_generate(&synth).map_err(|e| e.to_string())?, 3)
            .map_err(|e| e.to_string())?;
        let model_cfg = ModelConfig { seed: 5, ..ModelConfig::new(Arch::Hcg, 4, 32, 4).scaled(0.25) };
        let train_cfg = TrainConfig { epochs: 3, batch_size: 16, seed: 7, ..TrainConfig::default() };
        let exp = run_experiment(&ds, model_cfg, &train_cfg).map_err(|e| e.to_string())?;
        let history = dir.path().join(format!("{tag}.csv"));
        let ckpt = dir.path().join(format!("{tag}.ckpt"));
        std::fs::write(&history, exp.history.to_csv()).map_err(|e| e.to_string())?;
        hcg::model::save_checkpoint(&exp.model, &ckpt).map_err(|e| e.to_string())?;
        let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
        Ok((read(&history)?, read(&ckpt)?))
    };
    let (h1, c1) = run("a")?;
    let (h2, c2) = run("b")?;
    Ok((
        h1 == h2 && c1 == c2,
        format!("history identical {}, checkpoint identical {} ({} bytes)", h1 == h2, c1 == c2, c1.len()),
    ))
}

fn sweep() -> Outcome {
    let start = Instant::now();
    let grid = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sweep_small.grid");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = dir.path().join("sweep.csv");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = hcg::cli::run_with(
        [
            "hcg".as_ref(),
            "sweep".as_ref(),
            "--grid".as_ref(),
            grid.as_os_str(),
            "--repeats".as_ref(),
            "3".as_ref(),
            "--out".as_ref(),
            csv.as_os_str(),
        ],
        &mut out,
        &mut err,
    );
    let elapsed = start.elapsed();
    if code != 0 {
        return Ok((false, format!("exit {code}: {}", String::from_utf8_lossy(&err).trim())));
    }
    let text = String::from_utf8_lossy(&out).to_string();
    let lines: Vec<&str> = text.lines().collect();
    let header_ok = lines.first().is_some_and(|h| {
        ["2-layer", "3-layer", "4-layer", "5-layer"].iter().all(|s| h.contains(s))
    });
    let rows_ok = lines.len() == 6
        && lines[1..].iter().all(|l| l.matches('±').count() == 4 && !l.contains("n/a"));
    let csv_rows = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?.lines().count() - 1;
    println!("{}", text.trim_end());
    Ok((
        header_ok && rows_ok && csv_rows == 20 && elapsed < Duration::from_secs(1800),
        format!("5 x 4 cells x 3 repeats, {csv_rows} csv rows, {}", secs(elapsed)),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("gradient suite", gradients),
        ("forward oracles", forward_oracles),
        ("metric oracle", metric_oracle),
        ("shape and normalization invariants", invariants),
        ("learning check", learning),
        ("ordering at parameter parity", ordering),
        ("determinism", determinism),
        ("sweep harness", sweep),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let strict = std::env::var_os("HCG_ACCEPT_STRICT").is_some();
    let (mut run, mut failures) = (0, 0);
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        run += 1;
        if !pass {
            failures += 1;
        }
        println!("{} {n}. {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {run} passed", run - failures);
    if strict && failures > 0 {
        std::process::exit(1);
    }
}
