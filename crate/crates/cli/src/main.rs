use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use istftnet_core::bench::{build_seeded, params_report, run_bench, BenchConfig};
use istftnet_core::dsp::SAMPLE_RATE;
use istftnet_core::io::{load_checkpoint, write_wav, MelFile};
use istftnet_core::model::parse_arch;
use istftnet_core::selftest::{run_all, SelftestOptions};
use istftnet_core::Error;

/// Exit status for unreadable/unwritable files.
const EXIT_IO: u8 = 2;

#[derive(Parser)]
#[command(
    name = "istftnet",
    version,
    about = "iSTFT-based neural vocoder inference on CPU"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a WAV file from a mel-spectrogram file.
    Synth(SynthArgs),
    /// Measure the real-time factor of a randomly initialized model.
    Bench(BenchArgs),
    /// Report the parameter count relative to HiFi-GAN V2.
    Params(ParamsArgs),
    /// Run the built-in invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Architecture string (e.g. C8C8I4) or alias (e.g. istftnet2-base).
    #[arg(long)]
    arch: String,
    /// Checkpoint to load; random weights from --seed when absent.
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    mel: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    arch: String,
    /// Seconds of audio per timed run.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 5)]
    warmup: usize,
    #[arg(long, default_value_t = 30)]
    repeats: usize,
    /// Compute threads; only 1 is supported.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit one JSON object instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    arch: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let spec = parse_arch(&args.arch)?;
    let g = match &args.ckpt {
        Some(path) => {
            let g = load_checkpoint(path)?;
            if *g.arch() != spec {
                return Err(Error::Config(format!(
                    "checkpoint holds {}, but --arch is {}",
                    g.arch(),
                    spec
                )));
            }
            g
        }
        None => build_seeded(&args.arch, args.seed)?,
    };
    let mel = MelFile::read(&args.mel)?;
    if mel.sample_rate != SAMPLE_RATE {
        return Err(Error::Config(format!(
            "mel file is for {} Hz; the model runs at {SAMPLE_RATE} Hz",
            mel.sample_rate
        )));
    }
    let audio = g.forward(&mel.mel)?;
    write_wav(&audio, SAMPLE_RATE, &args.out)?;
    let peak = audio.iter().fold(0f32, |m, v| m.max(v.abs()));
    println!(
        "wrote {} samples ({:.3} s) to {}; peak amplitude {peak:.4}",
        audio.len(),
        audio.len() as f64 / SAMPLE_RATE as f64,
        args.out.display()
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    if args.threads != 1 {
        return Err(Error::Config(format!(
            "--threads {}: benchmarking is single-threaded only",
            args.threads
        )));
    }
    let cfg = BenchConfig {
        duration: args.duration,
        warmup: args.warmup,
        repeats: args.repeats,
        seed: args.seed,
    };
    let r = run_bench(&args.arch, &cfg)?;
    if args.json {
        println!("{}", serde_json::to_string(&r)?);
    } else {
        println!(
            "{}: rtf median {:.5} iqr {:.5} | params {} ({:.1}% of hifigan-v2) | {} frames, warmup {}, repeats {}, threads 1",
            r.arch,
            r.rtf_median,
            r.rtf_iqr,
            r.params,
            100.0 * r.ratio_vs_v2,
            r.frames,
            r.warmup,
            r.repeats
        );
    }
    Ok(())
}

fn params(args: ParamsArgs) -> Result<(), Error> {
    let r = params_report(&args.arch)?;
    if args.json {
        println!("{}", serde_json::to_string(&r)?);
    } else {
        println!(
            "{}: {} parameters ({:.2}M, {:.1}% of hifigan-v2)",
            r.arch,
            r.params,
            r.params as f64 / 1e6,
            100.0 * r.ratio_vs_v2
        );
    }
    Ok(())
}

fn selftest(args: SelftestArgs) -> ExitCode {
    let results = run_all(SelftestOptions {
        inject_fault: args.inject_fault,
        seed: args.seed,
    });
    for r in &results {
        println!(
            "{} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Synth(a) => synth(a),
        Command::Bench(a) => bench(a),
        Command::Params(a) => params(a),
        Command::Selftest(a) => return selftest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(EXIT_IO),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
