//! Perplexity scoring and ranking of enumerated sentences.
//!
//! Two scorers are available: the built-in add-k smoothed n-gram model and an
//! external process or TCP service speaking a line protocol (one sentence per
//! line in, one decimal perplexity per line out, `##END##` to shut down).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::time::Duration;

use crate::corpus::NgramRecord;
use crate::error::{Error, Result};

/// Shutdown request of the scorer protocol.
pub const END_OF_SESSION: &str = "##END##";

/// `(1 / P)^(1 / n)`, computed in log space. A zero probability yields
/// infinity.
pub fn ppl_from_probability(probability: f64, n: usize) -> f64 {
    if probability <= 0.0 {
        log::warn!("zero probability: perplexity is infinite");
        return f64::INFINITY;
    }
    ppl_from_log_prob(probability.ln(), n)
}

/// Perplexity from a natural-log sequence probability.
pub fn ppl_from_log_prob(log_prob: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if log_prob == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    (-log_prob / n as f64).exp()
}

/// Perplexity of a sequence under an arbitrary probability function.
pub fn ppl<T, F>(seq: &[T], probability: F) -> f64
where
    F: Fn(&[T]) -> f64,
{
    ppl_from_probability(probability(seq), seq.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSentence {
    pub tokens: Vec<String>,
    pub rendered: String,
    pub ppl: f64,
    pub scorer_id: String,
}

/// Ascending perplexity, ties by rendered text; first `top_k` when set.
pub fn rank(mut scored: Vec<ScoredSentence>, top_k: Option<usize>) -> Vec<ScoredSentence> {
    scored.sort_by(|a, b| a.ppl.total_cmp(&b.ppl).then_with(|| a.rendered.cmp(&b.rendered)));
    if let Some(k) = top_k {
        scored.truncate(k);
    }
    scored
}

/// `rank<TAB>ppl<TAB>sentence` rows, rank starting at 1.
pub fn ranked_tsv(ranked: &[ScoredSentence]) -> String {
    let mut out = String::new();
    for (i, s) in ranked.iter().enumerate() {
        let _ = writeln!(out, "{}\t{:.6}\t{}", i + 1, s.ppl, s.rendered);
    }
    out
}

/// Add-k smoothed n-gram model trained on n-gram records.
///
/// Positions past the first `n - 1` use the usual conditional
/// `(c(ctx, w) + k) / (c(ctx) + k V)`. The opening tokens are scored against
/// the start-flagged records only: token `j < n` is conditioned on the
/// sentence start and the `j - 1` tokens before it.
#[derive(Debug, Clone)]
pub struct NgramLanguageModel {
    order: usize,
    k_add: f64,
    vocab_size: usize,
    /// context (n-1 tokens) -> (next token -> count)
    next: HashMap<Vec<String>, HashMap<String, u64>>,
    context_totals: HashMap<Vec<String>, u64>,
    /// start prefix (0..n-1 tokens) -> (next token -> count)
    start_next: HashMap<Vec<String>, HashMap<String, u64>>,
    start_totals: HashMap<Vec<String>, u64>,
}

impl NgramLanguageModel {
    pub fn train(records: &[NgramRecord], k_add: f64) -> Result<Self> {
        let Some(first) = records.first() else {
            return Err(Error::EmptyRecords);
        };
        if !(k_add > 0.0) {
            return Err(Error::Config(format!("kAdd must be positive, got {k_add}")));
        }
        let order = first.order();
        if records.iter().any(|r| r.order() != order) {
            return Err(Error::Shape("records of mixed order".into()));
        }
        let mut lm = NgramLanguageModel {
            order,
            k_add,
            vocab_size: 0,
            next: HashMap::new(),
            context_totals: HashMap::new(),
            start_next: HashMap::new(),
            start_totals: HashMap::new(),
        };
        let mut vocab = std::collections::HashSet::new();
        for r in records {
            vocab.extend(r.tokens.iter().cloned());
            let (ctx, last) = r.tokens.split_at(order - 1);
            *lm.next
                .entry(ctx.to_vec())
                .or_default()
                .entry(last[0].clone())
                .or_default() += r.count;
            *lm.context_totals.entry(ctx.to_vec()).or_default() += r.count;
            if r.is_start {
                for j in 0..order - 1 {
                    let prefix = r.tokens[..j].to_vec();
                    *lm.start_next
                        .entry(prefix.clone())
                        .or_default()
                        .entry(r.tokens[j].clone())
                        .or_default() += r.count;
                    *lm.start_totals.entry(prefix).or_default() += r.count;
                }
            }
        }
        lm.vocab_size = vocab.len();
        Ok(lm)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Smoothed `P(word | context)` for a context of `n - 1` tokens.
    pub fn conditional<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        let ctx: Vec<String> = context.iter().map(|s| s.as_ref().to_owned()).collect();
        Self::smoothed(&self.next, &self.context_totals, &ctx, word, self.k_add, self.vocab_size)
    }

    fn start_conditional(&self, prefix: &[String], word: &str) -> f64 {
        Self::smoothed(
            &self.start_next,
            &self.start_totals,
            prefix,
            word,
            self.k_add,
            self.vocab_size,
        )
    }

    fn smoothed(
        table: &HashMap<Vec<String>, HashMap<String, u64>>,
        totals: &HashMap<Vec<String>, u64>,
        ctx: &[String],
        word: &str,
        k: f64,
        v: usize,
    ) -> f64 {
        let c = table
            .get(ctx)
            .and_then(|m| m.get(word))
            .copied()
            .unwrap_or(0) as f64;
        let total = totals.get(ctx).copied().unwrap_or(0) as f64;
        (c + k) / (total + k * v as f64)
    }

    /// Natural-log probability of a whole sentence.
    pub fn log_prob<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let tokens: Vec<String> = tokens.iter().map(|s| s.as_ref().to_owned()).collect();
        let mut lp = 0.0;
        for (j, w) in tokens.iter().enumerate() {
            let p = if j < self.order - 1 {
                self.start_conditional(&tokens[..j], w)
            } else {
                Self::smoothed(
                    &self.next,
                    &self.context_totals,
                    &tokens[j + 1 - self.order..j],
                    w,
                    self.k_add,
                    self.vocab_size,
                )
            };
            lp += p.ln();
        }
        lp
    }

    pub fn perplexity<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        ppl_from_log_prob(self.log_prob(tokens), tokens.len())
    }

    pub fn scorer_id(&self) -> String {
        format!("ngram-lm(n={},k={})", self.order, self.k_add)
    }
}

/// Anything that turns sentences into perplexities. The outer error aborts
/// the batch; inner errors are per sentence.
pub trait ScorerClient {
    fn id(&self) -> String;
    fn score_batch(&mut self, sentences: &[String]) -> Result<Vec<Result<f64>>>;
}

/// Client half of the scorer line protocol over any reader/writer pair.
pub struct LineClient<R, W> {
    reader: R,
    writer: W,
    id: String,
    finished: bool,
}

impl<R: BufRead, W: Write> LineClient<R, W> {
    pub fn new(reader: R, writer: W, id: impl Into<String>) -> Self {
        LineClient {
            reader,
            writer,
            id: id.into(),
            finished: false,
        }
    }

    fn exchange(&mut self, sentence: &str) -> Result<Result<f64>> {
        if sentence.contains('\n') {
            return Ok(Err(Error::Scorer("sentence contains a newline".into())));
        }
        writeln!(self.writer, "{sentence}")
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::Scorer(format!("cannot reach scorer: {e}")))?;
        let mut reply = String::new();
        match self.reader.read_line(&mut reply) {
            Ok(0) => Err(Error::Scorer("scorer closed the connection".into())),
            Ok(_) => Ok(parse_reply(reply.trim_end_matches(['\n', '\r']))),
            Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                Ok(Err(Error::Scorer(format!("timed out scoring `{sentence}`"))))
            }
            Err(e) => Err(Error::Scorer(format!("scorer read failed: {e}"))),
        }
    }

    /// Sends the shutdown line.
    pub fn finish(&mut self) -> Result<()> {
        if !self.finished {
            self.finished = true;
            writeln!(self.writer, "{END_OF_SESSION}")?;
            self.writer.flush()?;
        }
        Ok(())
    }
}

fn parse_reply(line: &str) -> Result<f64> {
    match line.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(Error::Scorer(format!("scorer replied non-positive value {v}"))),
        Err(_) => Err(Error::Scorer(format!("scorer replied `{line}`"))),
    }
}

impl<R: BufRead, W: Write> ScorerClient for LineClient<R, W> {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn score_batch(&mut self, sentences: &[String]) -> Result<Vec<Result<f64>>> {
        sentences.iter().map(|s| self.exchange(s)).collect()
    }
}

/// A scorer running as a child process, talking over its standard streams.
pub struct ProcessScorer {
    client: LineClient<BufReader<ChildStdout>, ChildStdin>,
    child: Child,
}

impl ProcessScorer {
    /// Spawns `program args...`.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Scorer(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let id = std::iter::once(program.to_owned())
            .chain(args.iter().cloned())
            .collect::<Vec<_>>()
            .join(" ");
        Ok(ProcessScorer {
            client: LineClient::new(BufReader::new(stdout), stdin, id),
            child,
        })
    }

    /// Sends the shutdown line and waits for the process to exit.
    pub fn shutdown(mut self) -> Result<std::process::ExitStatus> {
        self.client.finish()?;
        Ok(self.child.wait()?)
    }
}

impl ScorerClient for ProcessScorer {
    fn id(&self) -> String {
        self.client.id()
    }

    fn score_batch(&mut self, sentences: &[String]) -> Result<Vec<Result<f64>>> {
        self.client.score_batch(sentences)
    }
}

impl Drop for ProcessScorer {
    fn drop(&mut self) {
        let _ = self.client.finish();
        let _ = self.child.wait();
    }
}

/// A scorer reached over TCP.
pub struct TcpScorer {
    client: LineClient<BufReader<TcpStream>, TcpStream>,
}

impl TcpScorer {
    pub fn connect(addr: impl ToSocketAddrs + std::fmt::Display, timeout: Option<Duration>) -> Result<Self> {
        let id = format!("tcp:{addr}");
        let stream =
            TcpStream::connect(&addr).map_err(|e| Error::Scorer(format!("cannot connect to {addr}: {e}")))?;
        stream.set_read_timeout(timeout)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(TcpScorer {
            client: LineClient::new(reader, stream, id),
        })
    }

    pub fn finish(&mut self) -> Result<()> {
        self.client.finish()
    }
}

impl ScorerClient for TcpScorer {
    fn id(&self) -> String {
        self.client.id()
    }

    fn score_batch(&mut self, sentences: &[String]) -> Result<Vec<Result<f64>>> {
        self.client.score_batch(sentences)
    }
}

impl Drop for TcpScorer {
    fn drop(&mut self) {
        let _ = self.client.finish();
    }
}

/// The built-in language model as a [`ScorerClient`]; sentences are split
/// back into tokens with comma detachment.
pub struct BuiltinScorer {
    pub lm: NgramLanguageModel,
}

impl ScorerClient for BuiltinScorer {
    fn id(&self) -> String {
        self.lm.scorer_id()
    }

    fn score_batch(&mut self, sentences: &[String]) -> Result<Vec<Result<f64>>> {
        Ok(sentences
            .iter()
            .map(|s| Ok(self.lm.perplexity(&crate::corpus::split_rendered(s))))
            .collect())
    }
}

/// Server half of the line protocol: answers each line with `score(line)`
/// until `##END##` or end of input.
pub fn serve_lines<R, W, F>(reader: R, mut writer: W, mut score: F) -> Result<usize>
where
    R: BufRead,
    W: Write,
    F: FnMut(&str) -> Option<f64>,
{
    let mut served = 0;
    for line in reader.lines() {
        let line = line?;
        if line == END_OF_SESSION {
            break;
        }
        match score(&line) {
            Some(v) => writeln!(writer, "{v:.6}")?,
            None => writeln!(writer, "ERR")?,
        }
        writer.flush()?;
        served += 1;
    }
    Ok(served)
}

/// Scores sentences with a client, keeping input order. Sentences whose
/// score failed are reported and left out.
pub fn score_sentences(
    client: &mut dyn ScorerClient,
    sentences: &[(Vec<String>, String)],
) -> Result<(Vec<ScoredSentence>, Vec<(String, Error)>)> {
    let texts: Vec<String> = sentences.iter().map(|(_, r)| r.clone()).collect();
    let replies = client.score_batch(&texts)?;
    let id = client.id();
    let mut scored = Vec::with_capacity(replies.len());
    let mut failed = Vec::new();
    for ((tokens, rendered), reply) in sentences.iter().zip(replies) {
        match reply {
            Ok(ppl) => scored.push(ScoredSentence {
                tokens: tokens.clone(),
                rendered: rendered.clone(),
                ppl,
                scorer_id: id.clone(),
            }),
            Err(e) => failed.push((rendered.clone(), e)),
        }
    }
    Ok((scored, failed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{extract_ngrams, tokenize_sentence};
    use proptest::prelude::*;
    use std::io::Cursor;

    fn s(text: &str, ppl: f64) -> ScoredSentence {
        ScoredSentence {
            tokens: vec![],
            rendered: text.into(),
            ppl,
            scorer_id: "t".into(),
        }
    }

    #[test]
    fn ppl_identities() {
        assert_eq!(ppl_from_probability(1.0, 7), 1.0);
        assert!((ppl_from_probability(0.25, 2) - 2.0).abs() < 1e-12);
        assert!((ppl_from_probability(1.0 / 16.0, 4) - 2.0).abs() < 1e-12);
        assert_eq!(ppl_from_probability(0.0, 3), f64::INFINITY);
        let seq = ["a", "b"];
        assert!((ppl(&seq, |_| 0.25) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_orders_and_truncates() {
        let ranked = rank(vec![s("s1", 32.0), s("s2", 28.0), s("s3", 749.0)], None);
        let order: Vec<&str> = ranked.iter().map(|x| x.rendered.as_str()).collect();
        assert_eq!(order, vec!["s2", "s1", "s3"]);
        let ranked = rank(vec![s("b", 1.0), s("a", 1.0)], None);
        assert_eq!(ranked[0].rendered, "a");
        assert!(rank(vec![s("a", 1.0)], Some(0)).is_empty());
        assert_eq!(ranked_tsv(&ranked), "1\t1.000000\ta\n2\t1.000000\tb\n");
    }

    fn lm_of(lines: &[&str], n: usize, k: f64) -> NgramLanguageModel {
        let sents: Vec<Vec<String>> = lines.iter().map(|l| tokenize_sentence(l).unwrap()).collect();
        let (recs, _) = extract_ngrams(&sents, n).unwrap();
        NgramLanguageModel::train(&recs, k).unwrap()
    }

    #[test]
    fn repeated_sentence_beats_its_shuffles() {
        let line = "the cat sat on the mat";
        let lm = lm_of(&[line; 5], 3, 0.01);
        let tokens = tokenize_sentence(line).unwrap();
        assert!(lm.conditional(&["the", "cat"], "sat") > 0.95);
        let base = lm.perplexity(&tokens);
        let shuffles = [
            "cat the sat on the mat",
            "the mat sat on the cat",
            "on the cat sat the mat",
            "mat the on sat cat the",
        ];
        for sh in shuffles {
            assert!(base < lm.perplexity(&tokenize_sentence(sh).unwrap()), "{sh}");
        }
    }

    #[test]
    fn unseen_context_is_uniform() {
        let lm = lm_of(&["a b c d", "b c a d"], 2, 1.0);
        let v = lm.vocab_size() as f64;
        for w in ["a", "b", "c", "d"] {
            assert!((lm.conditional(&["zzz"], w) - 1.0 / v).abs() < 1e-12);
        }
    }

    #[test]
    fn training_errors() {
        assert!(matches!(NgramLanguageModel::train(&[], 1.0), Err(Error::EmptyRecords)));
        let (recs, _) = extract_ngrams(&[tokenize_sentence("a b c").unwrap()], 2).unwrap();
        assert!(NgramLanguageModel::train(&recs, 0.0).is_err());
    }

    #[test]
    fn conditionals_sum_to_one() {
        let lm = lm_of(
            &["a b c d e", "b c a d e", "e d c b a", "a a b b c"],
            3,
            0.3,
        );
        let vocab = ["a", "b", "c", "d", "e"];
        for x in vocab {
            for y in vocab {
                let total: f64 = vocab.iter().map(|w| lm.conditional(&[x, y], w)).sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn line_client_against_in_memory_server() {
        let mut out = Vec::new();
        let served = serve_lines(Cursor::new("a\nb\n##END##\nc\n"), &mut out, |l| (l == "a").then_some(2.5)).unwrap();
        assert_eq!(served, 2);
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "2.500000\nERR\n");

        let mut client = LineClient::new(Cursor::new(out), Vec::new(), "mem");
        let replies = client.score_batch(&["a".into(), "b".into()]).unwrap();
        assert_eq!(*replies[0].as_ref().unwrap(), 2.5);
        assert!(replies[1].is_err());
        // no more replies: the batch fails as a whole
        assert!(client.score_batch(&["c".into()]).is_err());
        client.finish().unwrap();
        assert_eq!(String::from_utf8(client.writer.clone()).unwrap(), "a\nb\nc\n##END##\n");
    }

    proptest! {
        #[test]
        fn log_ppl_identity(p in 1e-300f64..=1.0, n in 1usize..200) {
            let v = ppl_from_probability(p, n);
            let expected = -p.ln() / n as f64;
            let got = v.ln();
            prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1e-300) + 1e-15);
        }

        #[test]
        fn ppl_is_monotone(a in 1e-200f64..1.0, b in 1e-200f64..1.0, n in 1usize..50) {
            prop_assume!(a != b);
            let (hi, lo) = if a > b { (a, b) } else { (b, a) };
            prop_assert!(ppl_from_probability(hi, n) <= ppl_from_probability(lo, n));
        }
    }
}
