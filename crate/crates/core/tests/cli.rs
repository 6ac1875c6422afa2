use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hcg(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hcg"));
    cmd.args(args).env_remove("HCG_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hcg(args, &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    fs::write(&path, "samples_per_class = 6\nwindow = 32\nsensors = 3\n").unwrap();
    path.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_every_flag() {
    let top = ok(&["--help"]);
    for sub in ["generate", "train", "eval", "sweep", "gradcheck"] {
        assert!(top.contains(sub), "{sub} missing from\n{top}");
    }
    let expect: [(&str, &[&str]); 5] = [
        ("generate", &["--config", "--preset", "--out", "--seed"]),
        (
            "train",
            &[
                "--arch", "--data", "--out", "--epochs", "--seed", "--lr", "--batch", "--window",
                "--stride", "--split-seed", "--history",
            ],
        ),
        ("eval", &["--ckpt", "--data", "--split", "--out"]),
        ("sweep", &["--grid", "--repeats", "--out", "--threads"]),
        ("gradcheck", &["--seed", "--seeds"]),
    ];
    for (sub, flags) in expect {
        let help = ok(&[sub, "--help"]);
        for flag in flags {
            assert!(help.contains(flag), "{sub} help lacks {flag}\n{help}");
        }
    }
}

#[test]
fn usage_and_runtime_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hcg(&[], &[]).status.code(), Some(2));
    assert_eq!(hcg(&["frobnicate"], &[]).status.code(), Some(2));
    let bad_arch = hcg(&["train", "--arch", "rnn", "--data", "d", "--out", "o"], &[]);
    assert_eq!(bad_arch.status.code(), Some(2));
    let missing = hcg(
        &["eval", "--ckpt", s(&dir.path().join("none.ckpt")), "--data", s(dir.path())],
        &[],
    );
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
    let preset = hcg(&["generate", "--preset", "nope", "--out", s(dir.path())], &[]);
    assert_eq!(preset.status.code(), Some(1));
}

#[test]
fn generate_train_eval_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |tag: &str| {
        let data = dir.path().join(format!("data{tag}"));
        let ckpt = dir.path().join(format!("gru{tag}.ckpt"));
        ok(&["generate", "--config", &cfg, "--out", s(&data)]);
        ok(&[
            "train", "--arch", "gru", "--data", s(&data), "--out", s(&ckpt), "--epochs", "2",
            "--window", "32", "--stride", "32", "--batch", "8",
        ]);
        let report = ok(&["eval", "--ckpt", s(&ckpt), "--data", s(&data)]);
        assert!(report.contains("accuracy"), "{report}");
        let read = |p: std::path::PathBuf| fs::read(p).unwrap();
        (
            read(data.join("manifest.csv")),
            read(ckpt.clone()),
            read(ckpt.with_extension("history.csv")),
            read(ckpt.with_extension("confusion.csv")),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn seed_flag_overrides_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let gen = |name: &str, args: &[&str], envs: &[(&str, &str)]| {
        let out = dir.path().join(name);
        let mut full = vec!["generate", "--config", &cfg, "--out", s(&out)];
        full.extend_from_slice(args);
        assert_eq!(hcg(&full, envs).status.code(), Some(0));
        fs::read_to_string(out.join("synth.cfg")).unwrap()
    };
    let by_env = gen("env", &[], &[("HCG_SEED", "5")]);
    let by_flag = gen("flag", &["--seed", "5"], &[]);
    let both = gen("both", &["--seed", "7"], &[("HCG_SEED", "5")]);
    let plain = gen("plain", &[], &[]);
    assert_eq!(by_env, by_flag);
    assert!(both.contains("seed = 7"), "{both}");
    assert_ne!(plain, by_env);
}

#[test]
fn gradcheck_passes() {
    let out = ok(&["gradcheck", "--seeds", "3"]);
    assert!(!out.contains("FAIL"), "{out}");
}

#[test]
fn sweep_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.txt");
    fs::write(
        &grid,
        "archs = dnn, gru\nlayers = 3 | 3,3\nepochs = 1\nbatch = 8\n\
         synth.samples_per_class = 5\nsynth.window = 16\nsynth.sensors = 2\n",
    )
    .unwrap();
    let csv = dir.path().join("sweep.csv");
    let text = ok(&["sweep", "--grid", s(&grid), "--repeats", "2", "--out", s(&csv), "--threads", "1"]);
    assert!(text.contains("DNN") && text.contains("GRU"), "{text}");
    let written = fs::read_to_string(&csv).unwrap();
    assert!(written.lines().count() >= 3, "{written}");
}
