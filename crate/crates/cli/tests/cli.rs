use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mist(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mist"))
        .args(args)
        .current_dir(dir)
        .env_remove("MIST_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: [&str; 14] = [
    "--code",
    "conv:5,7",
    "--n",
    "16",
    "--iters",
    "3",
    "--batch-size",
    "8",
    "--kernel-size",
    "3",
    "--widths",
    "2,3,3",
    "--seed",
    "7",
];

fn train_tiny(dir: &Path, out: &str) -> Output {
    let mut args = vec!["train"];
    args.extend(TINY);
    args.extend(["--snr-set", "0:8", "--out", out]);
    mist(&args, dir)
}

fn digest_line(o: &Output) -> String {
    stdout(o).lines().find(|l| l.starts_with("checkpoint")).unwrap().split_whitespace().last().unwrap().to_string()
}

#[test]
fn show_config_prints_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = mist(&["show-config"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["[training]", "batch_size = 256", "iterations = 20000", "kernel_size = 24", "[eval.run.stop]", "[bench.run]"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
}

#[test]
fn train_without_out_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mist(&["train", "--iters", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--out"));
}

#[test]
fn bad_flags_exit_with_usage_status() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mist(&["train", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(mist(&["train", "--batch-size", "1", "--out", "x"], dir.path()).status.code(), Some(2));
    assert_eq!(mist(&["eval", "--snr", "3:1"], dir.path()).status.code(), Some(2));
    assert_eq!(mist(&[], dir.path()).status.code(), Some(2));
}

#[test]
fn training_is_reproducible_and_writes_loss_curve() {
    let dir = tempfile::tempdir().unwrap();
    let a = train_tiny(dir.path(), "a/ck.mist");
    assert!(a.status.success(), "{}", stderr(&a));
    let b = train_tiny(dir.path(), "b/ck.mist");
    assert_eq!(digest_line(&a), digest_line(&b));
    assert_eq!(
        fs::read(dir.path().join("a/ck.mist")).unwrap(),
        fs::read(dir.path().join("b/ck.mist")).unwrap()
    );
    let loss = fs::read_to_string(dir.path().join("a/loss.csv")).unwrap();
    assert_eq!(loss, fs::read_to_string(dir.path().join("b/loss.csv")).unwrap());
    let rows: Vec<&str> = loss.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "iteration,loss");
    assert_eq!(rows.len(), 4);
    assert!(loss.starts_with("# mist train"));
}

#[test]
fn eval_runs_all_decoders_on_one_grid() {
    let dir = tempfile::tempdir().unwrap();
    assert!(train_tiny(dir.path(), "ck.mist").status.success());
    let o = mist(
        &[
            "eval",
            "--decoders",
            "viterbi-hard,viterbi-soft,cnn",
            "--ckpt",
            "ck.mist",
            "--snr",
            "0:6:1",
            "--max-blocks",
            "200",
            "--min-blocks",
            "100",
            "--out",
            "r.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        rows[0],
        "decoder,code,n,l,snr_db,alpha,blocks,bit_errors,block_errors,ber,bler,ber_ci95,bler_ci95,seed"
    );
    assert_eq!(rows.len(), 1 + 3 * 7);
    assert!(text.contains("# checkpoint sha256"));
    for name in ["viterbi-hard", "viterbi-soft", "cnn"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{name},"))).count(), 7);
    }
    // same seed, same bytes
    let again = mist(
        &[
            "eval", "--decoders", "viterbi-hard,viterbi-soft,cnn", "--ckpt", "ck.mist", "--snr", "0:6:1",
            "--max-blocks", "200", "--min-blocks", "100", "--out", "r2.csv", "--workers", "2",
        ],
        dir.path(),
    );
    assert!(again.status.success());
    let strip = |t: &str| t.lines().filter(|l| !l.contains("workers") && !l.starts_with("# out =")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&text), strip(&fs::read_to_string(dir.path().join("r2.csv")).unwrap()));
}

#[test]
fn outage_channel_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = mist(
        &[
            "eval", "--decoders", "viterbi-soft", "--channel", "outage", "--alpha", "0.5", "--snr", "4",
            "--max-blocks", "100", "--min-blocks", "100", "--out", "o.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("o.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("viterbi-soft,") && l.contains(",4.0,0.5,")), "{text}");
}

#[test]
fn unknown_decoder_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = mist(&["eval", "--decoders", "turbo"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("turbo") && err.contains("viterbi-hard") && err.contains("bit-flip"), "{err}");
}

#[test]
fn checkpoint_for_another_blocklength_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    assert!(train_tiny(dir.path(), "ck.mist").status.success());
    let o = mist(&["eval", "--decoders", "cnn", "--ckpt", "ck.mist", "--n", "20"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("shape"), "{}", stderr(&o));
}

#[test]
fn corrupted_checkpoint_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(train_tiny(dir.path(), "ck.mist").status.success());
    let path = dir.path().join("ck.mist");
    let mut bytes = fs::read(&path).unwrap();
    let i = bytes.len() / 2;
    bytes[i] ^= 1;
    fs::write(&path, bytes).unwrap();
    let o = mist(&["eval", "--decoders", "cnn", "--ckpt", "ck.mist"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("digest"));
}

#[test]
fn sweep_writes_one_curve_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep"];
    args.extend(TINY);
    args.extend(["--kernel-sizes", "3,5", "--width-sets", "2,2,2;3-3-3", "--out", "s.csv"]);
    let o = mist(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "config_id,iteration,loss");
    assert_eq!(rows.len(), 1 + 4 * 3);
    assert!(rows.iter().any(|r| r.starts_with("k5-3-3-3,3,")));

    let empty = mist(&["sweep", "--kernel-sizes", ""], dir.path());
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn bench_writes_latency_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = mist(
        &[
            "bench", "--n", "20,40", "--batch", "1,8", "--kernel-size", "3", "--widths", "2,2,2", "--reps", "3",
            "--warmup", "1", "--out", "lat.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("lat.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "decoder,n,batch,mean_ms,median_ms,p99_ms");
    assert_eq!(rows.len(), 5);
    assert_eq!(mist(&["bench", "--n", ""], dir.path()).status.code(), Some(2));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.toml"),
        "[training]\niterations = 5\nseed = 3\nbatch_size = 16\n\n[train]\nout = \"from-file.mist\"\n",
    )
    .unwrap();
    let o = mist(&["train", "--config", "exp.toml", "--seed", "9", "--show-config"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("iterations = 5") && text.contains("seed = 9") && text.contains("batch_size = 16"));
    assert!(text.contains("from-file.mist"));

    fs::write(dir.path().join("bad.toml"), "[training]\nbatch = 3\n").unwrap();
    let o = mist(&["train", "--config", "bad.toml", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("batch"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["train"];
    args.extend(TINY);
    args.extend(["--out", "ck.mist"]);
    let o = Command::new(env!("CARGO_BIN_EXE_mist"))
        .args(&args)
        .current_dir(dir.path())
        .env("MIST_OUT_DIR", dir.path().join("runs"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("runs/ck.mist").exists());
    assert!(dir.path().join("runs/loss.csv").exists());
}
