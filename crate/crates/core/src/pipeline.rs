//! Stage drivers shared by the command-line tool and the Python bindings.
//!
//! Every stage reads and writes plain files so that `extract`, `solve` and
//! `rank` run separately compose to the same artifacts as `run`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::compile::{compile_with, refine, CompileOptions, CompileStats};
use crate::corpus::{
    extract_ngrams, filter_ngrams, read_corpus, read_ngrams_tsv, split_rendered,
    write_ngrams_tsv, ExtractReport, NgramRecord,
};
use crate::curation::{
    rank, ranked_tsv, score_sentences, BuiltinScorer, NgramLanguageModel, ProcessScorer,
    ScoredSentence, ScorerClient, TcpScorer,
};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::mdd::Mdd;
use crate::model::{join_tokens, validate_sentence, ConstraintModel, RadnerVariant, UnaryConstraint, ValidationReport};
use crate::ngram_index::NgramIndex;

pub const NGRAMS_FILE: &str = "ngrams.tsv";
pub const SOLUTIONS_FILE: &str = "solutions.txt";
pub const STATS_FILE: &str = "stats.tsv";
pub const WIDTHS_FILE: &str = "widths.tsv";
pub const RANKED_FILE: &str = "ranked.tsv";
pub const MDD_FILE: &str = "solutions.mdd";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScorerSpec {
    #[default]
    Builtin,
    /// Program and arguments of a scorer speaking the line protocol on its
    /// standard streams.
    Command(Vec<String>),
    /// `host:port` of a scorer speaking the line protocol over TCP.
    Tcp(String),
}

fn default_order() -> usize {
    3
}

fn default_k_add() -> f64 {
    1.0
}

/// End-to-end run description, read from JSON. Relative paths resolve
/// against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    #[serde(default = "default_order")]
    pub order: usize,
    /// Word list; absent means every token is allowed.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// Syllable override tables.
    #[serde(default)]
    pub overrides: Vec<PathBuf>,
    /// Model JSON; exclusive with `preset`.
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub variant: Option<String>,
    pub output: PathBuf,
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub scorer: ScorerSpec,
    #[serde(default = "default_k_add")]
    pub k_add: f64,
    #[serde(default)]
    pub max_states: Option<usize>,
    #[serde(default)]
    pub dump_mdd: bool,
    /// Read timeout for TCP scorers, in seconds.
    #[serde(default)]
    pub scorer_timeout: Option<f64>,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads, resolves relative paths and checks that inputs exist.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.output);
        self.lexicon.as_mut().map(fix);
        self.model.as_mut().map(fix);
        self.overrides.iter_mut().for_each(fix);
    }

    pub fn check(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidOrder(self.order));
        }
        let inputs = std::iter::once(&self.corpus)
            .chain(&self.lexicon)
            .chain(&self.model)
            .chain(&self.overrides);
        for p in inputs {
            if !p.is_file() {
                return Err(Error::file(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        self.model_source()?;
        Ok(())
    }

    pub fn model_source(&self) -> Result<ModelSource> {
        ModelSource::select(self.model.as_deref(), self.preset.as_deref(), self.variant.as_deref())
    }

    pub fn lexicon(&self) -> Result<Lexicon> {
        load_lexicon(self.lexicon.as_deref(), &self.overrides)
    }

    pub fn compile_options(&self) -> CompileOptions {
        CompileOptions {
            max_states: self.max_states,
            ..Default::default()
        }
    }
}

pub fn load_lexicon(wordlist: Option<&Path>, overrides: &[PathBuf]) -> Result<Lexicon> {
    let mut lex = match wordlist {
        Some(p) => Lexicon::load_wordlist(p)?,
        None => Lexicon::permissive("permissive"),
    };
    for p in overrides {
        lex = lex.load_overrides(p)?;
    }
    Ok(lex)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    File(PathBuf),
    Radner(RadnerVariant),
}

impl ModelSource {
    pub fn select(model: Option<&Path>, preset: Option<&str>, variant: Option<&str>) -> Result<Self> {
        match (model, preset) {
            (Some(_), Some(_)) => Err(Error::Config("`model` and `preset` are exclusive".into())),
            (None, None) => Err(Error::Config("one of `model` or `preset` is required".into())),
            (Some(p), None) => {
                if variant.is_some() {
                    return Err(Error::Config("`variant` only applies to presets".into()));
                }
                Ok(ModelSource::File(p.to_owned()))
            }
            (None, Some(name)) if name.eq_ignore_ascii_case("radner") => {
                let v = variant.map_or(Ok(RadnerVariant::Core), str::parse)?;
                Ok(ModelSource::Radner(v))
            }
            (None, Some(name)) => Err(Error::Config(format!("unknown preset `{name}`"))),
        }
    }

    /// The model every solution must satisfy. Presets chain with `order`.
    pub fn full_model(&self, order: usize) -> Result<ConstraintModel> {
        match self {
            ModelSource::File(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::file(p, e))?;
                ConstraintModel::parse(&text)
            }
            ModelSource::Radner(v) => Ok(ConstraintModel::radner(*v).with_chaining_order(order)),
        }
    }

    /// The model to compile and the unary constraints applied afterwards by
    /// refinement. Language variants compile the core preset and refine.
    pub fn compile_plan(&self, order: usize) -> Result<(ConstraintModel, Vec<UnaryConstraint>)> {
        match self {
            ModelSource::Radner(v) if *v != RadnerVariant::Core => Ok((
                ConstraintModel::radner(RadnerVariant::Core).with_chaining_order(order),
                vec![v.first_word()],
            )),
            _ => Ok((self.full_model(order)?, Vec::new())),
        }
    }
}

/// Reads, tokenizes, extracts and filters.
pub fn extract(corpus: &Path, order: usize, lexicon: &Lexicon) -> Result<(Vec<NgramRecord>, ExtractReport)> {
    if order < 2 {
        return Err(Error::InvalidOrder(order));
    }
    let sentences = read_corpus(corpus)?;
    let (records, report) = extract_ngrams(&sentences, order)?;
    Ok((filter_ngrams(&records, lexicon), report))
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub mdd: Mdd,
    pub stats: CompileStats,
    pub sentences: Vec<Vec<String>>,
}

impl Solved {
    /// One rendered sentence per line.
    pub fn solutions_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(&join_tokens(s));
            out.push('\n');
        }
        out
    }
}

/// Compiles, refines when the plan asks for it, and enumerates.
pub fn solve(
    source: &ModelSource,
    records: &[NgramRecord],
    lexicon: &Lexicon,
    options: &CompileOptions,
) -> Result<Solved> {
    let order = records.first().map_or(crate::model::RADNER_CHAINING_ORDER, NgramRecord::order);
    let (model, extra) = source.compile_plan(order)?;
    let index = NgramIndex::build_with_order(records, model.chaining_order)?;
    let (mut mdd, mut stats) = compile_with(&model, &index, lexicon, options)?;
    if !extra.is_empty() {
        let started = std::time::Instant::now();
        mdd = refine(&mdd, &extra, lexicon)?;
        let refined = CompileStats::from_mdd(&mdd);
        stats = CompileStats {
            raw_states: stats.raw_states,
            peak_states: stats.peak_states,
            seconds: stats.seconds + started.elapsed().as_secs_f64(),
            ..refined
        };
    }
    let sentences = mdd.paths().map(|(ids, _)| mdd.surfaces(&ids)).collect();
    Ok(Solved { mdd, stats, sentences })
}

/// Writes the solve artifacts into `dir`.
pub fn write_solved(dir: &Path, solved: &Solved, dump_mdd: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    write_file(&dir.join(SOLUTIONS_FILE), &solved.solutions_text())?;
    write_file(&dir.join(STATS_FILE), &solved.stats.to_tsv())?;
    write_file(&dir.join(WIDTHS_FILE), &solved.stats.widths_tsv())?;
    if dump_mdd {
        write_file(&dir.join(MDD_FILE), &solved.mdd.dump())?;
    }
    Ok(())
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::file(path, e))
}

pub fn read_solutions(path: &Path) -> Result<Vec<(Vec<String>, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| (split_rendered(l), l.to_owned()))
        .collect())
}

pub fn open_scorer(
    choice: &ScorerSpec,
    records: &[NgramRecord],
    k_add: f64,
    timeout: Option<Duration>,
) -> Result<Box<dyn ScorerClient>> {
    Ok(match choice {
        ScorerSpec::Builtin => Box::new(BuiltinScorer {
            lm: NgramLanguageModel::train(records, k_add)?,
        }),
        ScorerSpec::Command(argv) => {
            let (prog, args) = argv
                .split_first()
                .ok_or_else(|| Error::Config("empty scorer command".into()))?;
            Box::new(ProcessScorer::spawn(prog, args)?)
        }
        ScorerSpec::Tcp(addr) => Box::new(TcpScorer::connect(addr.as_str(), timeout)?),
    })
}

#[derive(Debug, Clone)]
pub struct RankOutcome {
    pub ranked: Vec<ScoredSentence>,
    /// Sentences the scorer could not score, with the reason.
    pub failed: Vec<(String, String)>,
}

/// Scores and ranks sentences. With no sentences the scorer is never
/// contacted.
pub fn rank_solutions(
    sentences: &[(Vec<String>, String)],
    scorer: &mut dyn ScorerClient,
    top_k: Option<usize>,
) -> Result<RankOutcome> {
    if sentences.is_empty() {
        return Ok(RankOutcome {
            ranked: Vec::new(),
            failed: Vec::new(),
        });
    }
    let (scored, failed) = score_sentences(scorer, sentences)?;
    for (s, e) in &failed {
        log::warn!("not ranked: `{s}`: {e}");
    }
    Ok(RankOutcome {
        ranked: rank(scored, top_k),
        failed: failed.into_iter().map(|(s, e)| (s, e.to_string())).collect(),
    })
}

/// Audits sentences against the full model.
pub fn verify(
    model: &ConstraintModel,
    records: &[NgramRecord],
    lexicon: &Lexicon,
    sentences: &[(Vec<String>, String)],
) -> Result<Vec<(String, ValidationReport)>> {
    let index = NgramIndex::build_with_order(records, model.chaining_order)?;
    Ok(sentences
        .iter()
        .map(|(tokens, text)| (text.clone(), validate_sentence(model, tokens, &index, lexicon)))
        .collect())
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: ExtractReport,
    pub records: usize,
    pub stats: CompileStats,
    pub ranked: usize,
    pub failed: usize,
    pub output: PathBuf,
}

/// `extract`, `solve` and `rank` in one go, writing every artifact.
pub fn run(cfg: &PipelineConfig) -> Result<RunSummary> {
    let lexicon = cfg.lexicon()?;
    let source = cfg.model_source()?;
    let (records, report) = extract(&cfg.corpus, cfg.order, &lexicon)?;
    let out = &cfg.output;
    fs::create_dir_all(out).map_err(|e| Error::file(out, e))?;
    write_file(&out.join(NGRAMS_FILE), &write_ngrams_tsv(&records))?;

    let solved = match solve(&source, &records, &lexicon, &cfg.compile_options()) {
        Err(Error::StateLimit { limit, layer, states, partial }) => {
            write_file(&out.join(STATS_FILE), &partial.to_tsv())?;
            return Err(Error::StateLimit { limit, layer, states, partial });
        }
        other => other?,
    };
    write_solved(out, &solved, cfg.dump_mdd)?;

    let sentences: Vec<(Vec<String>, String)> = solved
        .sentences
        .iter()
        .map(|t| (t.clone(), join_tokens(t)))
        .collect();
    let timeout = cfg.scorer_timeout.map(Duration::from_secs_f64);
    let outcome = if sentences.is_empty() {
        RankOutcome {
            ranked: Vec::new(),
            failed: Vec::new(),
        }
    } else {
        let mut scorer = open_scorer(&cfg.scorer, &records, cfg.k_add, timeout)?;
        rank_solutions(&sentences, scorer.as_mut(), cfg.top_k)?
    };
    write_file(&out.join(RANKED_FILE), &ranked_tsv(&outcome.ranked))?;
    Ok(RunSummary {
        report,
        records: records.len(),
        stats: solved.stats,
        ranked: outcome.ranked.len(),
        failed: outcome.failed.len(),
        output: out.clone(),
    })
}

/// Loads n-gram records written by `extract`.
pub fn load_records(path: &Path) -> Result<Vec<NgramRecord>> {
    read_ngrams_tsv(path)
}
