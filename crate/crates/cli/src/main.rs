use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dsf_core::annotator::LabeledExample;
use dsf_core::dedup::{dedup, Blocking, DedupConfig, DedupScope};
use dsf_core::metrics::{confusion_from_files, score};
use dsf_core::pipeline::{self, Resources, RunConfig, SentenceRecord};
use dsf_core::sampler::{make_plan, BalanceMode, BalanceSpec, PlanPaths, PlanVariant};
use dsf_core::{Error, Label, Result};

#[derive(Parser)]
#[command(name = "dsf", version, about = "Build targeted-sentiment training sets by distant supervision")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (.toml or .json).
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set dedup.threshold=0.9`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let cfg = RunConfig::load(&self.config, &self.overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BlockingArg {
    None,
    LengthBands,
    PrefixFilter,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Global,
    PerLabel,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Uniform,
    Distribution,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage from the config and write the output tree.
    Run(ConfigArgs),
    /// Split and filter the configured corpus into sentence JSONL.
    Ingest {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Annotate sentence JSONL into example JSONL.
    Annotate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Remove near-duplicate examples.
    Dedup {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "prefix-filter")]
        blocking: BlockingArg,
        #[arg(long, value_enum, default_value = "global")]
        scope: ScopeArg,
        /// Also compare examples cut from the same sentence.
        #[arg(long)]
        across_same_source: bool,
    },
    /// Draw a class-balanced sample.
    Balance {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        total: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "uniform")]
        mode: ModeArg,
        /// `positive=0.148,negative=0.336,neutral=0.516`; defaults to the
        /// benchmark means in distribution mode.
        #[arg(long)]
        proportions: Option<String>,
        /// Cap examples per trigger term before sampling.
        #[arg(long)]
        flatten: bool,
        #[arg(long, requires = "flatten")]
        per_trigger_cap: Option<usize>,
    },
    /// Emit a stage plan over existing dataset files.
    Plan {
        #[arg(long)]
        variant: String,
        /// Directory the dataset paths are relative to.
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long)]
        additional: Option<PathBuf>,
        #[arg(long)]
        general: Option<PathBuf>,
        #[arg(long)]
        thematic: Option<PathBuf>,
        #[arg(long)]
        benchmark_train: Option<PathBuf>,
        #[arg(long)]
        mixed: Option<PathBuf>,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score predictions against gold labels.
    Metrics {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_proportions(raw: &str) -> Result<BTreeMap<Label, f64>> {
    raw.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad proportion {kv:?}")))?;
            let label: Label = k.trim().parse().map_err(Error::Config)?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad proportion value {v:?}")))?;
            Ok((label, value))
        })
        .collect()
}

fn emit_json<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => pipeline::write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<()> {
    pipeline::configure_threads()?;
    match command {
        Command::Run(args) => {
            let manifest = pipeline::run(&args.load()?)?;
            emit_json(&manifest, None)
        }
        Command::Ingest { config, output } => {
            let cfg = config.load()?;
            let res = Resources::load(&cfg)?;
            let mut records = Vec::new();
            let stats = pipeline::stream_sentences(&cfg.corpus, cfg.ingest.batch_size, &res, |batch| {
                records.extend(batch.iter().map(SentenceRecord::from_sentence));
                Ok(())
            })?;
            if stats.sentences == 0 {
                return Err(Error::Data("no sentences after ingest".into()));
            }
            pipeline::write_jsonl(&output, &records)?;
            eprintln!(
                "{} documents, {} sentences, {} kept",
                stats.documents, stats.sentences, stats.sentences_kept
            );
            Ok(())
        }
        Command::Annotate { config, input, output } => {
            let cfg = config.load()?;
            let res = Resources::load(&cfg)?;
            let sentences: Vec<_> = pipeline::read_jsonl::<SentenceRecord>(&input)?
                .into_iter()
                .map(|r| r.into_sentence(&res.ingestor))
                .collect();
            let examples = res.annotate_batch(&sentences)?;
            pipeline::write_jsonl(&output, &examples)
        }
        Command::Dedup {
            input,
            output,
            seed,
            threshold,
            blocking,
            scope,
            across_same_source,
        } => {
            let config = DedupConfig {
                threshold,
                rng_seed: seed,
                blocking: match blocking {
                    BlockingArg::None => Blocking::None,
                    BlockingArg::LengthBands => Blocking::LengthBands,
                    BlockingArg::PrefixFilter => Blocking::PrefixFilter,
                },
                scope: match scope {
                    ScopeArg::Global => DedupScope::Global,
                    ScopeArg::PerLabel => DedupScope::PerLabel,
                },
                keep_same_source: !across_same_source,
            };
            let examples: Vec<LabeledExample> = pipeline::read_jsonl(&input)?;
            let out = dedup(examples, &config)?;
            pipeline::write_jsonl(&output, &out.survivors)?;
            eprintln!("removed {}", out.removed.len());
            Ok(())
        }
        Command::Balance {
            input,
            output,
            total,
            seed,
            mode,
            proportions,
            flatten,
            per_trigger_cap,
        } => {
            let spec = match mode {
                ModeArg::Uniform => {
                    if proportions.is_some() {
                        return Err(Error::Config("--proportions needs --mode distribution".into()));
                    }
                    BalanceSpec::uniform(total, seed)
                }
                ModeArg::Distribution => BalanceSpec {
                    mode: BalanceMode::Distribution,
                    proportions: Some(match proportions {
                        Some(raw) => parse_proportions(&raw)?,
                        None => dsf_core::sampler::benchmark_mean_proportions(),
                    }),
                    total,
                    rng_seed: seed,
                },
            };
            let pool: Vec<LabeledExample> = pipeline::read_jsonl(&input)?;
            let sample = pipeline::sample_output(
                pool,
                &spec,
                flatten,
                per_trigger_cap,
                pipeline::derive_seed(seed, "flatten"),
            )?;
            pipeline::write_jsonl(&output, &sample)
        }
        Command::Plan {
            variant,
            dir,
            additional,
            general,
            thematic,
            benchmark_train,
            mixed,
            output,
        } => {
            let variant: PlanVariant = variant.parse()?;
            let paths = PlanPaths {
                additional,
                general,
                thematic,
                benchmark_train,
                mixed,
            };
            let plan = make_plan(variant, &paths, &dir)?;
            emit_json(&plan, output.as_deref())
        }
        Command::Metrics { gold, pred, output } => {
            let report = score(&confusion_from_files(&gold, &pred)?)?;
            emit_json(&report, output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dsf: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
