//! Command-line interface.
//!
//! Configuration resolves in order: built-in defaults, then the file named
//! by `$VOXLOOM_CONFIG`, then `--config`, then repeatable `--set key=value`
//! overrides, then subcommand flags.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bench::{bench, BenchConfig};
use crate::config::{SessionConfig, CONFIG_PATH_ENV};
use crate::filter::{run_pipeline, PipelineConfig, SampleMeta};
use crate::lm::session_rng;
use crate::markup;
use crate::rewards::{score_records, RewardWeights, ScoreRecord, DEFAULT_WER_SENSITIVITY};
use crate::server::{serve, synthesize_text};
use crate::store::{pack, TokenStore};
use crate::timebase::{TokenId, TokenSequence};
use crate::wav::{read_wav, write_wav};

#[derive(Parser)]
#[command(name = "voxloom", version, about = "Speech-token streaming engine")]
struct Cli {
    /// Config file of key=value lines; defaults to $VOXLOOM_CONFIG.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Single config override, e.g. --set seed=7. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the streaming TCP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7707")]
        bind: String,
    },
    /// Measure first-chunk latency against a running service.
    Bench(BenchArgs),
    /// Offline synthesis: text to a WAV file through the mock pipeline.
    Synthesize {
        #[arg(long)]
        text: String,
        #[arg(long, value_name = "WAV")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sample_rate: Option<u32>,
    },
    /// Packed-token store operations.
    #[command(subcommand)]
    Store(StoreCommand),
    /// Corpus filtering.
    #[command(subcommand)]
    Filter(FilterCommand),
    /// Reward scoring.
    #[command(subcommand)]
    Rewards(RewardsCommand),
    /// Markup parsing and pairing.
    #[command(subcommand)]
    Markup(MarkupCommand),
}

#[derive(Args)]
struct BenchArgs {
    /// Address of a running service.
    #[arg(long)]
    addr: String,
    /// Number of requests.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Audio seconds defining the first chunk.
    #[arg(long, default_value_t = 2.0)]
    target_seconds: f64,
    /// Text sent with each request.
    #[arg(long, default_value = "benchmark utterance")]
    text: String,
}

#[derive(Subcommand)]
enum StoreCommand {
    /// Pack token files listed in a manifest into one store.
    Pack {
        /// JSONL manifest: {"id", "tokens" (u16-LE file path), "sample_rate"}.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract one record.
    Unpack {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        id: String,
        /// Output token file (u16 LE); stdout summary when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a compression report as JSON.
    Stats {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 48_000)]
        baseline_rate: u32,
        #[arg(long, default_value_t = 16)]
        baseline_bits: u32,
    },
}

#[derive(Subcommand)]
enum FilterCommand {
    /// Run the three-stage filtering pipeline over a JSONL sample file.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Optional JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 0.20)]
        dnsmos_fraction: f64,
        #[arg(long, default_value_t = 0.05)]
        cps_low: f64,
        #[arg(long, default_value_t = 0.05)]
        cps_high: f64,
    },
}

#[derive(Subcommand)]
enum RewardsCommand {
    /// Score a JSONL records file and write breakdowns plus advantages.
    Score {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Group size for records without an explicit group key.
        #[arg(long, default_value_t = 8)]
        group_size: usize,
        #[arg(long, default_value_t = DEFAULT_WER_SENSITIVITY)]
        wer_sensitivity: f64,
        /// Component weight, e.g. --weight wer=1.0. Repeatable; unset
        /// components keep weight 1.
        #[arg(long = "weight", value_name = "NAME=W")]
        weights: Vec<String>,
        /// Language codes scored by character error rate. Repeatable.
        #[arg(long = "cer-language", value_name = "LANG")]
        cer_languages: Vec<String>,
    },
}

#[derive(Subcommand)]
enum MarkupCommand {
    /// Parse text into a line-delimited structured dump.
    Parse {
        /// Input file; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Build paired examples from a manifest of neutral/styled utterances.
    Pair {
        /// JSONL manifest: {"neutral_text", "neutral_wav", "styled_text",
        /// "styled_wav", "tag"}.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run() -> ExitCode {
    run_with_args(std::env::args_os())
}

/// Entry point that never exits the process, so it is directly testable.
pub fn run_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn resolve_config(cli: &Cli) -> anyhow::Result<SessionConfig> {
    let mut cfg = SessionConfig::default();
    if let Ok(path) = std::env::var(CONFIG_PATH_ENV) {
        cfg.apply_file(Path::new(&path))
            .with_context(|| format!("config from ${CONFIG_PATH_ENV} ({path})"))?;
    }
    if let Some(path) = &cli.config {
        cfg.apply_file(path)
            .with_context(|| format!("config file {}", path.display()))?;
    }
    for pair in &cli.set {
        cfg.apply_block(pair).with_context(|| format!("--set {pair}"))?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Serve { bind } => {
            let handle = serve(&bind, cfg)?;
            println!("listening on {}", handle.local_addr());
            loop {
                std::thread::sleep(std::time::Duration::from_secs(3600));
            }
        }
        Command::Bench(args) => {
            let addr = args
                .addr
                .parse()
                .with_context(|| format!("bad address {}", args.addr))?;
            let mut config_block = String::new();
            if let Ok(path) = std::env::var(CONFIG_PATH_ENV) {
                config_block.push_str(&std::fs::read_to_string(path)?);
                config_block.push('\n');
            }
            if let Some(path) = &cli.config {
                config_block.push_str(&std::fs::read_to_string(path)?);
                config_block.push('\n');
            }
            for pair in &cli.set {
                config_block.push_str(pair);
                config_block.push('\n');
            }
            let report = bench(
                addr,
                &BenchConfig {
                    requests: args.n,
                    target_seconds: args.target_seconds,
                    text: args.text,
                    config_block,
                },
            )?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Synthesize {
            text,
            out,
            seed,
            sample_rate,
        } => {
            let mut cfg = cfg;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(rate) = sample_rate {
                cfg.sample_rate = rate;
            }
            let wave = synthesize_text(&text, &cfg)?;
            write_wav(&out, &wave)?;
            println!(
                "wrote {} ({} samples at {} Hz)",
                out.display(),
                wave.len(),
                wave.sample_rate()
            );
            Ok(())
        }
        Command::Store(cmd) => run_store(cmd),
        Command::Filter(cmd) => run_filter(cmd),
        Command::Rewards(cmd) => run_rewards(cmd),
        Command::Markup(cmd) => run_markup(cmd),
    }
}

#[derive(Deserialize)]
struct StoreManifestEntry {
    id: String,
    tokens: PathBuf,
    sample_rate: u32,
}

fn read_token_file(path: &Path) -> anyhow::Result<TokenSequence> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % 2 != 0 {
        bail!("{} is not a u16 token file (odd length)", path.display());
    }
    Ok(TokenSequence::new(
        bytes
            .chunks_exact(2)
            .map(|p| TokenId(u16::from_le_bytes([p[0], p[1]])))
            .collect(),
    ))
}

fn write_token_file(path: &Path, tokens: &TokenSequence) -> anyhow::Result<()> {
    let mut bytes = Vec::with_capacity(tokens.len() * 2);
    for t in tokens.tokens() {
        bytes.extend_from_slice(&t.value().to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let content = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    content
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(n, line)| {
            serde_json::from_str(line)
                .with_context(|| format!("{}:{}", path.display(), n + 1))
        })
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn run_store(cmd: StoreCommand) -> anyhow::Result<()> {
    match cmd {
        StoreCommand::Pack { manifest, out } => {
            let entries: Vec<StoreManifestEntry> = read_jsonl(&manifest)?;
            let mut utterances = Vec::with_capacity(entries.len());
            for entry in entries {
                let tokens = read_token_file(&entry.tokens)?;
                utterances.push((entry.id, tokens, entry.sample_rate));
            }
            let bytes = pack(&utterances)?;
            std::fs::write(&out, &bytes)?;
            println!("packed {} records into {}", utterances.len(), out.display());
            Ok(())
        }
        StoreCommand::Unpack { store, id, out } => {
            let store = TokenStore::open(std::fs::read(&store)?)?;
            let (tokens, rate) = store.unpack(&id)?;
            match out {
                Some(path) => {
                    write_token_file(&path, &tokens)?;
                    println!("wrote {} tokens at {rate} Hz to {}", tokens.len(), path.display());
                }
                None => println!("{id}: {} tokens at {rate} Hz", tokens.len()),
            }
            Ok(())
        }
        StoreCommand::Stats {
            store,
            baseline_rate,
            baseline_bits,
        } => {
            let store = TokenStore::open(std::fs::read(&store)?)?;
            let report = store.stats(baseline_rate, baseline_bits);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn run_filter(cmd: FilterCommand) -> anyhow::Result<()> {
    match cmd {
        FilterCommand::Run {
            input,
            output,
            report,
            dnsmos_fraction,
            cps_low,
            cps_high,
        } => {
            let samples: Vec<SampleMeta> = read_jsonl(&input)?;
            let (kept, stats) = run_pipeline(
                &samples,
                &PipelineConfig {
                    dnsmos_fraction,
                    cps_low,
                    cps_high,
                },
            )?;
            write_jsonl(&output, &kept)?;
            let rendered = serde_json::to_string_pretty(&stats)?;
            if let Some(path) = report {
                std::fs::write(path, &rendered)?;
            }
            println!("{rendered}");
            Ok(())
        }
    }
}

fn run_rewards(cmd: RewardsCommand) -> anyhow::Result<()> {
    match cmd {
        RewardsCommand::Score {
            input,
            output,
            group_size,
            wer_sensitivity,
            weights,
            cer_languages,
        } => {
            let records: Vec<ScoreRecord> = read_jsonl(&input)?;
            let mut reward_weights = RewardWeights::equal();
            for pair in &weights {
                let (name, value) = pair
                    .split_once('=')
                    .with_context(|| format!("--weight {pair}: expected NAME=W"))?;
                let value: f64 = value
                    .parse()
                    .with_context(|| format!("--weight {pair}: bad number"))?;
                reward_weights.set(name.trim(), value)?;
            }
            let scored = score_records(
                &records,
                &reward_weights,
                group_size,
                wer_sensitivity,
                &cer_languages,
            )?;
            write_jsonl(&output, &scored)?;
            println!("scored {} records into {}", scored.len(), output.display());
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct MarkupDumpRow<'a> {
    #[serde(rename = "type")]
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    category: Option<&'a str>,
}

#[derive(Deserialize)]
struct PairManifestEntry {
    neutral_text: String,
    neutral_wav: PathBuf,
    styled_text: String,
    styled_wav: PathBuf,
    tag: String,
}

#[derive(Serialize)]
struct PairedOutputEntry {
    transcript: String,
    audio: PathBuf,
    silence_seconds: f64,
}

fn run_markup(cmd: MarkupCommand) -> anyhow::Result<()> {
    match cmd {
        MarkupCommand::Parse { input } => {
            let text = match input {
                Some(path) => std::fs::read_to_string(&path)?,
                None => {
                    let mut buffer = String::new();
                    std::io::stdin().read_to_string(&mut buffer)?;
                    buffer
                }
            };
            let parsed = markup::parse(&text);
            for diagnostic in &parsed.diagnostics {
                eprintln!("warning: {diagnostic}");
            }
            for item in parsed.document.items() {
                let row = match item {
                    markup::MarkupItem::Text(value) => MarkupDumpRow {
                        kind: "text",
                        value: Some(value),
                        name: None,
                        category: None,
                    },
                    markup::MarkupItem::Tag(tag) => MarkupDumpRow {
                        kind: "tag",
                        value: None,
                        name: Some(tag.name()),
                        category: Some(match tag.category() {
                            markup::TagCategory::Style => "style",
                            markup::TagCategory::NonVerbal => "nonverbal",
                        }),
                    },
                };
                println!("{}", serde_json::to_string(&row)?);
            }
            Ok(())
        }
        MarkupCommand::Pair {
            manifest,
            out_dir,
            seed,
        } => {
            let entries: Vec<PairManifestEntry> = read_jsonl(&manifest)?;
            std::fs::create_dir_all(&out_dir)?;
            let mut rng = session_rng(seed);
            let mut outputs = Vec::with_capacity(entries.len());
            for (i, entry) in entries.iter().enumerate() {
                let tag = markup::Tag::from_name(&entry.tag)
                    .with_context(|| format!("unknown tag `{}`", entry.tag))?;
                let neutral = read_wav(&entry.neutral_wav)?;
                let styled = read_wav(&entry.styled_wav)?;
                let pair = markup::build_pair(
                    (&entry.neutral_text, &neutral),
                    (&entry.styled_text, &styled),
                    tag,
                    &mut rng,
                )?;
                let audio_path = out_dir.join(format!("pair_{i:04}.wav"));
                write_wav(&audio_path, &pair.audio)?;
                outputs.push(PairedOutputEntry {
                    transcript: pair.transcript,
                    audio: audio_path,
                    silence_seconds: pair.silence_seconds,
                });
            }
            let manifest_path = out_dir.join("pairs.jsonl");
            write_jsonl(&manifest_path, &outputs)?;
            println!(
                "wrote {} paired examples under {}",
                outputs.len(),
                out_dir.display()
            );
            Ok(())
        }
    }
}
