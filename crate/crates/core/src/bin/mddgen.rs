use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use mddgen::corpus::{read_ngrams_tsv, write_ngrams_tsv};
use mddgen::curation::ranked_tsv;
use mddgen::pipeline::{self, ModelSource, PipelineConfig, ScorerSpec};
use mddgen::{CompileOptions, Error, Result};

#[derive(Parser)]
#[command(name = "mddgen", version, about = "Compile sentence constraint models to MDDs, enumerate and rank")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract and filter n-grams from a corpus
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[command(flatten)]
        lexicon: LexiconArgs,
        /// Output TSV
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Compile a model against n-grams and enumerate its solutions
    Solve {
        #[arg(long)]
        ngrams: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        lexicon: LexiconArgs,
        /// Directory for solutions.txt, stats.tsv and widths.tsv
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        max_states: Option<usize>,
        /// Also write the reduced diagram
        #[arg(long)]
        dump_mdd: bool,
    },
    /// Score and rank a solutions file
    Rank {
        #[arg(long)]
        solutions: PathBuf,
        /// N-gram TSV for the built-in scorer
        #[arg(long)]
        ngrams: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        k_add: f64,
        /// External scorer program and arguments; consumes the rest of the line
        #[arg(long, num_args = 1.., allow_hyphen_values = true, conflicts_with = "scorer_tcp")]
        scorer_cmd: Option<Vec<String>>,
        /// External scorer at host:port
        #[arg(long)]
        scorer_tcp: Option<String>,
        /// TCP read timeout in seconds
        #[arg(long)]
        scorer_timeout: Option<f64>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run extract, solve and rank from a JSON config
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check every sentence of a solutions file against the model
    Verify {
        #[arg(long)]
        solutions: PathBuf,
        #[arg(long)]
        ngrams: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        lexicon: LexiconArgs,
        /// Print every check, not only failures
        #[arg(long)]
        all: bool,
    },
}

#[derive(Args)]
struct LexiconArgs {
    /// Allowed-word list, one per line
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Syllable override TSV (repeatable)
    #[arg(long = "overrides")]
    overrides: Vec<PathBuf>,
}

impl LexiconArgs {
    fn load(&self) -> Result<mddgen::Lexicon> {
        pipeline::load_lexicon(self.lexicon.as_deref(), &self.overrides)
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Model JSON
    #[arg(long, conflicts_with = "preset")]
    model: Option<PathBuf>,
    /// Built-in preset (radner)
    #[arg(long)]
    preset: Option<String>,
    /// Preset variant: core, german, spanish, portuguese
    #[arg(long, requires = "preset")]
    variant: Option<String>,
}

impl ModelArgs {
    fn source(&self) -> Result<ModelSource> {
        ModelSource::select(self.model.as_deref(), self.preset.as_deref(), self.variant.as_deref())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("mddgen: {e}");
            if let Error::StateLimit { partial, .. } = &e {
                eprint!("{}", partial.to_tsv());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Extract { corpus, order, lexicon, out } => {
            let lex = lexicon.load()?;
            let (records, report) = pipeline::extract(&corpus, order, &lex)?;
            pipeline::write_file(&out, &write_ngrams_tsv(&records))?;
            println!(
                "sentences {}\tskipped {}\twindows {}\trecords {}",
                report.sentences,
                report.skipped_short,
                report.windows,
                records.len()
            );
        }
        Command::Solve { ngrams, model, lexicon, out_dir, max_states, dump_mdd } => {
            let source = model.source()?;
            let lex = lexicon.load()?;
            let records = read_ngrams_tsv(&ngrams)?;
            let options = CompileOptions {
                max_states,
                ..Default::default()
            };
            let solved = match pipeline::solve(&source, &records, &lex, &options) {
                Err(Error::StateLimit { limit, layer, states, partial }) => {
                    std::fs::create_dir_all(&out_dir).map_err(|e| Error::FileIo { path: out_dir.clone(), source: e })?;
                    pipeline::write_file(&out_dir.join(pipeline::STATS_FILE), &partial.to_tsv())?;
                    return Err(Error::StateLimit { limit, layer, states, partial });
                }
                other => other?,
            };
            pipeline::write_solved(&out_dir, &solved, dump_mdd)?;
            print!("{}", solved.stats.to_tsv());
        }
        Command::Rank {
            solutions,
            ngrams,
            k_add,
            scorer_cmd,
            scorer_tcp,
            scorer_timeout,
            top_k,
            out,
        } => {
            let sentences = pipeline::read_solutions(&solutions)?;
            let choice = match (scorer_cmd, scorer_tcp) {
                (Some(argv), _) => ScorerSpec::Command(argv),
                (None, Some(addr)) => ScorerSpec::Tcp(addr),
                (None, None) => ScorerSpec::Builtin,
            };
            let records = match (&choice, ngrams) {
                (ScorerSpec::Builtin, None) => {
                    return Err(Error::Config("the built-in scorer needs --ngrams".into()))
                }
                (_, Some(p)) => read_ngrams_tsv(&p)?,
                (_, None) => Vec::new(),
            };
            let outcome = if sentences.is_empty() {
                pipeline::RankOutcome {
                    ranked: Vec::new(),
                    failed: Vec::new(),
                }
            } else {
                let timeout = scorer_timeout.map(Duration::from_secs_f64);
                let mut scorer = pipeline::open_scorer(&choice, &records, k_add, timeout)?;
                pipeline::rank_solutions(&sentences, scorer.as_mut(), top_k)?
            };
            pipeline::write_file(&out, &ranked_tsv(&outcome.ranked))?;
            println!("ranked {}\tfailed {}", outcome.ranked.len(), outcome.failed.len());
        }
        Command::Run { config } => {
            let cfg = PipelineConfig::load(&config)?;
            let summary = pipeline::run(&cfg)?;
            println!(
                "records {}\tsols {}\tranked {}\tfailed {}\toutput {}",
                summary.records,
                summary.stats.solutions,
                summary.ranked,
                summary.failed,
                summary.output.display()
            );
        }
        Command::Verify { solutions, ngrams, model, lexicon, all } => {
            let source = model.source()?;
            let lex = lexicon.load()?;
            let records = read_ngrams_tsv(&ngrams)?;
            let order = records.first().map_or(mddgen::model::RADNER_CHAINING_ORDER, |r| r.order());
            let full = source.full_model(order)?;
            let sentences = pipeline::read_solutions(&solutions)?;
            let reports = pipeline::verify(&full, &records, &lex, &sentences)?;
            let mut failing = 0;
            for (text, report) in &reports {
                if !report.overall {
                    failing += 1;
                }
                if all || !report.overall {
                    println!("{text}");
                    for c in report.checks.iter().filter(|c| all || !c.passed) {
                        println!("\t{}\t{}\t{}", c.name, if c.passed { "pass" } else { "fail" }, c.measured);
                    }
                }
            }
            println!("verified {}\tfailing {}", reports.len(), failing);
            if failing > 0 {
                return Ok(1);
            }
        }
    }
    Ok(0)
}
