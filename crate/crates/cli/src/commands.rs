use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use mist_core::eval::{
    bench_latency, decoder_by_name, evaluate, sweep_with, write_loss_csv, Decoder, SweepPoint,
};
use mist_core::mist::{load_checkpoint, save_checkpoint, train_with, Checkpoint, TrainingConfig, TrainingMetadata};
use mist_core::Error;
use serde::Serialize;

use crate::args::{BenchArgs, Cli, Command, EvalArgs, SweepArgs, TrainArgs};
use crate::config::{
    apply_channel, apply_training, load, output_path, parse_code, parse_grid, parse_list, to_toml, ExperimentConfig,
};
use crate::{usage, Failure};

pub fn run(cli: Cli) -> Result<(), Failure> {
    let show = cli.show_config;
    match cli.command {
        Command::Train(a) => train(a, show),
        Command::Eval(a) => eval(a, show),
        Command::Sweep(a) => sweep(a, show),
        Command::Bench(a) => bench(a, show),
        Command::ShowConfig => {
            print!("{}", to_toml(&ExperimentConfig::default()));
            Ok(())
        }
    }
}

/// Prints `value` as a TOML table named `name`.
fn show_table<T: Serialize>(name: &str, value: &T) {
    #[derive(Serialize)]
    struct One<'a, T> {
        #[serde(flatten)]
        inner: std::collections::BTreeMap<&'a str, &'a T>,
    }
    let mut inner = std::collections::BTreeMap::new();
    inner.insert(name, value);
    print!("{}", to_toml(&One { inner }));
}

fn ensure_parent(path: &Path) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    ensure_parent(path)?;
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn provenance<T: Serialize>(command: &str, value: &T) -> Vec<String> {
    vec![format!("mist {command} {}", env!("CARGO_PKG_VERSION")), to_toml(value)]
}

fn train_config(flags: &crate::args::TrainingFlags) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load(flags.config.as_deref())?;
    apply_training(flags, &mut cfg.training)?;
    Ok(cfg)
}

fn train(a: TrainArgs, show: bool) -> Result<(), Failure> {
    let mut cfg = train_config(&a.training)?;
    if a.out.is_some() {
        cfg.train.out = a.out;
    }
    if a.loss_csv.is_some() {
        cfg.train.loss_csv = a.loss_csv;
    }
    if show {
        show_table("training", &cfg.training);
        show_table("train", &cfg.train);
        return Ok(());
    }
    let out = output_path(cfg.train.out.as_deref().ok_or_else(|| usage("missing --out for the checkpoint"))?);
    let loss_path = match &cfg.train.loss_csv {
        Some(p) => output_path(p),
        None => out.with_file_name("loss.csv"),
    };
    ensure_parent(&out)?;
    let t = &cfg.training;
    let code = t.code.build()?;
    let model = t.initial_model(&code)?;
    let meta = TrainingMetadata::from(t);
    let report_every = (t.iterations / 20).max(1);
    let result = train_with(model, t, |it, loss| {
        if it % report_every == 0 || it == t.iterations {
            eprintln!("iteration {it}/{}  loss {loss:.5}", t.iterations);
        }
    });
    let (model, history) = match result {
        Ok(r) => r,
        Err(Error::TrainingAborted {
            iteration,
            reason,
            last_good,
        }) => {
            let partial = PathBuf::from(format!("{}.partial", out.display()));
            save_checkpoint(&*last_good, &meta, &partial)?;
            return Err(Failure::Runtime(format!(
                "training aborted at iteration {iteration}: {reason}; last good model saved to {}",
                partial.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let digest = save_checkpoint(&model, &meta, &out)?;
    history.write_csv(create(&loss_path)?, &provenance("train", t))?;
    if let Some(&(_, last)) = history.points.last() {
        println!("final loss {last}");
    }
    println!("checkpoint {} sha256 {digest}", out.display());
    println!("loss curve {}", loss_path.display());
    Ok(())
}

fn decoder_error(e: Error) -> Failure {
    match e {
        Error::UnknownDecoder { .. } | Error::InvalidArgument(_) => usage(e.to_string()),
        other => other.into(),
    }
}

fn eval(a: EvalArgs, show: bool) -> Result<(), Failure> {
    let mut sec = load(a.config.as_deref())?.eval;
    if let Some(d) = &a.decoders {
        sec.decoders = d.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if a.ckpt.is_some() {
        sec.checkpoint = a.ckpt.clone();
    }
    if let Some(c) = &a.code {
        sec.code = Some(parse_code(c)?);
    }
    if let Some(s) = &a.snr {
        sec.run.snr_grid = parse_grid(s)?;
    }
    apply_channel(&a.channel, &mut sec.run.channel)?;
    let stop = &mut sec.run.stop;
    stop.min_blocks = a.min_blocks.unwrap_or(stop.min_blocks);
    stop.min_block_errors = a.min_block_errors.unwrap_or(stop.min_block_errors);
    stop.max_blocks = a.max_blocks.unwrap_or(stop.max_blocks);
    sec.run.seed = a.seed.unwrap_or(sec.run.seed);
    sec.run.workers = a.workers.unwrap_or(sec.run.workers);
    if let Some(o) = &a.out {
        sec.out = o.clone();
    }
    if sec.decoders.is_empty() {
        return Err(usage("no decoders requested"));
    }
    sec.run.validate().map_err(|e| usage(e.to_string()))?;
    let checkpoint: Option<Checkpoint> = sec.checkpoint.as_deref().map(load_checkpoint).transpose()?;
    let mut code_cfg = sec
        .code
        .clone()
        .or_else(|| checkpoint.as_ref().map(|c| c.metadata.code.clone()))
        .unwrap_or_default();
    if let Some(n) = a.n {
        code_cfg = code_cfg.with_n(n);
    }
    sec.code = Some(code_cfg.clone());
    if show {
        show_table("eval", &sec);
        return Ok(());
    }
    let code = code_cfg.build()?;
    let decoders: Vec<Box<dyn Decoder>> = sec
        .decoders
        .iter()
        .map(|name| decoder_by_name(name, &code, checkpoint.as_ref().map(|c| &c.model)))
        .collect::<Result<_, _>>()
        .map_err(decoder_error)?;
    let refs: Vec<&dyn Decoder> = decoders.iter().map(|d| d.as_ref()).collect();
    let report = evaluate(&refs, &code, &sec.run)?;

    let out = output_path(&sec.out);
    let mut comments = provenance("eval", &sec);
    if let Some(c) = &checkpoint {
        comments.push(format!("checkpoint sha256 {}", c.digest));
    }
    report.write_csv(create(&out)?, &comments)?;
    println!("{:<14} {:>7} {:>10} {:>11} {:>11}", "decoder", "snr_db", "blocks", "ber", "bler");
    for p in &report.points {
        println!(
            "{:<14} {:>7} {:>10} {:>11.4e} {:>11.4e}",
            p.decoder,
            p.snr_db,
            p.blocks,
            p.ber(),
            p.bler()
        );
    }
    println!("results {}", out.display());
    Ok(())
}

fn sweep(a: SweepArgs, show: bool) -> Result<(), Failure> {
    let mut cfg = train_config(&a.training)?;
    let widths_sets: Option<Vec<Vec<usize>>> = a
        .width_sets
        .as_deref()
        .map(|s| s.split(';').map(parse_list).collect::<Result<_, _>>())
        .transpose()?;
    if a.kernel_sizes.is_some() || widths_sets.is_some() {
        let kernels = match &a.kernel_sizes {
            Some(k) => parse_list(k)?,
            None => vec![cfg.training.kernel_size],
        };
        let widths = widths_sets.unwrap_or_else(|| vec![cfg.training.widths.clone()]);
        cfg.sweep.grid = kernels
            .iter()
            .flat_map(|&k| {
                widths.iter().map(move |w| SweepPoint {
                    kernel_size: k,
                    widths: w.clone(),
                })
            })
            .collect();
    }
    if let Some(o) = &a.out {
        cfg.sweep.out = o.clone();
    }
    if cfg.sweep.grid.is_empty() {
        return Err(usage("hyperparameter grid is empty"));
    }
    for p in &cfg.sweep.grid {
        TrainingConfig {
            kernel_size: p.kernel_size,
            widths: p.widths.clone(),
            ..cfg.training.clone()
        }
        .validate()
        .map_err(|e| usage(format!("{}: {e}", p.config_id())))?;
    }
    if show {
        show_table("training", &cfg.training);
        show_table("sweep", &cfg.sweep);
        return Ok(());
    }
    let t = &cfg.training;
    let report_every = (t.iterations / 10).max(1);
    let results = sweep_with(t, &cfg.sweep.grid, |id, it, loss| {
        if it % report_every == 0 {
            eprintln!("{id} iteration {it}/{}  loss {loss:.5}", t.iterations);
        }
    })?;
    let out = output_path(&cfg.sweep.out);
    #[derive(Serialize)]
    struct Provenance<'a> {
        training: &'a TrainingConfig,
        sweep: &'a crate::config::SweepSection,
    }
    let comments = provenance(
        "sweep",
        &Provenance {
            training: t,
            sweep: &cfg.sweep,
        },
    );
    write_loss_csv(create(&out)?, &results, &comments)?;
    for r in &results {
        println!("{:<20} final-window loss {:.5}", r.config_id, r.history.tail_mean(50));
    }
    println!("loss curves {}", out.display());
    Ok(())
}

fn bench(a: BenchArgs, show: bool) -> Result<(), Failure> {
    let mut sec = load(a.config.as_deref())?.bench;
    let run = &mut sec.run;
    if let Some(c) = &a.code {
        run.code = parse_code(c)?;
    }
    if let Some(n) = &a.n {
        run.n_list = parse_list(n)?;
    }
    if let Some(b) = &a.batch {
        run.batch_sizes = parse_list(b)?;
    }
    run.kernel_size = a.kernel_size.unwrap_or(run.kernel_size);
    if let Some(w) = &a.widths {
        run.widths = parse_list(w)?;
    }
    run.warmup = a.warmup.unwrap_or(run.warmup);
    run.repetitions = a.reps.unwrap_or(run.repetitions);
    run.seed = a.seed.unwrap_or(run.seed);
    if let Some(o) = &a.out {
        sec.out = o.clone();
    }
    if run.n_list.is_empty() || run.batch_sizes.is_empty() || run.repetitions == 0 {
        return Err(usage("bench needs blocklengths, batch sizes and repetitions"));
    }
    if show {
        show_table("bench", &sec);
        return Ok(());
    }
    let report = bench_latency(&sec.run)?;
    let out = output_path(&sec.out);
    report.write_csv(create(&out)?, &provenance("bench", &sec))?;
    println!("{:>6} {:>6} {:>12} {:>12} {:>12}", "n", "batch", "mean_ms", "median_ms", "p99_ms");
    for r in &report.rows {
        println!(
            "{:>6} {:>6} {:>12.5} {:>12.5} {:>12.5}",
            r.n, r.batch, r.mean_ms, r.median_ms, r.p99_ms
        );
    }
    println!("latency {}", out.display());
    Ok(())
}
