//! Sentence tokenization, n-gram extraction and lexicon filtering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

/// Surface of the comma token.
pub const COMMA: &str = ",";

/// One n-gram with its corpus count and sentence-boundary flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NgramRecord {
    pub tokens: Vec<String>,
    pub count: u64,
    pub is_start: bool,
    pub is_end: bool,
}

impl NgramRecord {
    pub fn order(&self) -> usize {
        self.tokens.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractReport {
    pub sentences: usize,
    pub skipped_short: usize,
    pub windows: u64,
}

/// Splits a sentence on whitespace. A trailing comma becomes its own token
/// and the final period is dropped.
pub fn tokenize_sentence(text: &str) -> Result<Vec<String>> {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    let last = words.len() - 1;
    let mut tokens = Vec::with_capacity(words.len() + 2);
    for (i, word) in words.into_iter().enumerate() {
        let word = if i == last {
            word.strip_suffix('.').unwrap_or(word)
        } else {
            word
        };
        push_word(&mut tokens, word);
    }
    if tokens.is_empty() {
        return Err(Error::EmptySentence);
    }
    Ok(tokens)
}

/// Splits an already-rendered sentence back into tokens: whitespace plus
/// comma detachment, without touching periods.
pub fn split_rendered(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        push_word(&mut tokens, word);
    }
    tokens
}

fn push_word(tokens: &mut Vec<String>, word: &str) {
    if word == COMMA {
        tokens.push(COMMA.to_owned());
    } else if let Some(stem) = word.strip_suffix(',') {
        if !stem.is_empty() {
            tokens.push(stem.to_owned());
        }
        tokens.push(COMMA.to_owned());
    } else if !word.is_empty() {
        tokens.push(word.to_owned());
    }
}

/// Tokenizes every non-blank line of a corpus.
pub fn tokenize_corpus(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter_map(|line| tokenize_sentence(line).ok())
        .collect()
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Ok(tokenize_corpus(&text))
}

/// Extracts every contiguous window of `n` tokens. Duplicate windows are
/// merged with summed counts; the output is sorted by token surfaces.
pub fn extract_ngrams(
    sentences: &[Vec<String>],
    n: usize,
) -> Result<(Vec<NgramRecord>, ExtractReport)> {
    if n < 2 {
        return Err(Error::InvalidOrder(n));
    }
    let mut report = ExtractReport::default();
    let mut table: BTreeMap<&[String], (u64, bool, bool)> = BTreeMap::new();
    for sentence in sentences {
        if sentence.len() < n {
            report.skipped_short += 1;
            continue;
        }
        report.sentences += 1;
        let last = sentence.len() - n;
        for (pos, window) in sentence.windows(n).enumerate() {
            let entry = table.entry(window).or_insert((0, false, false));
            entry.0 += 1;
            entry.1 |= pos == 0;
            entry.2 |= pos == last;
            report.windows += 1;
        }
    }
    if report.skipped_short > 0 {
        log::info!(
            "skipped {} sentence(s) shorter than {n} tokens",
            report.skipped_short
        );
    }
    let records = table
        .into_iter()
        .map(|(tokens, (count, is_start, is_end))| NgramRecord {
            tokens: tokens.to_vec(),
            count,
            is_start,
            is_end,
        })
        .collect();
    Ok((records, report))
}

/// Keeps the records whose tokens are all allowed by the lexicon.
pub fn filter_ngrams(records: &[NgramRecord], lexicon: &Lexicon) -> Vec<NgramRecord> {
    let mut kept: Vec<NgramRecord> = records
        .iter()
        .filter(|r| r.tokens.iter().all(|t| lexicon.is_allowed(t)))
        .cloned()
        .collect();
    kept.sort();
    kept
}

pub fn write_ngrams_tsv(records: &[NgramRecord]) -> String {
    let mut out = String::new();
    for r in records {
        for t in &r.tokens {
            out.push_str(t);
            out.push('\t');
        }
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            r.count,
            u8::from(r.is_start),
            u8::from(r.is_end)
        );
    }
    out
}

pub fn parse_ngrams_tsv(text: &str, origin: &str) -> Result<Vec<NgramRecord>> {
    let mut records = Vec::new();
    let mut order = None;
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: origin.to_owned(),
            line: i + 1,
            msg,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 5 {
            return Err(err(format!("expected at least 5 columns, got {}", cols.len())));
        }
        let n = cols.len() - 3;
        match order {
            None => order = Some(n),
            Some(o) if o != n => {
                return Err(err(format!("mixed n-gram orders {o} and {n}")));
            }
            _ => {}
        }
        let flag = |s: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(err(format!("flag must be 0 or 1, got `{other}`"))),
        };
        let count = cols[n]
            .parse()
            .map_err(|_| err(format!("bad count `{}`", cols[n])))?;
        records.push(NgramRecord {
            tokens: cols[..n].iter().map(|s| s.to_string()).collect(),
            count,
            is_start: flag(cols[n + 1])?,
            is_end: flag(cols[n + 2])?,
        });
    }
    Ok(records)
}

pub fn read_ngrams_tsv(path: impl AsRef<Path>) -> Result<Vec<NgramRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_ngrams_tsv(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_owned).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize_sentence("The princess wears a red dress.").unwrap(),
            toks("The princess wears a red dress")
        );
        assert_eq!(
            tokenize_sentence("With only, three").unwrap(),
            toks("With only , three")
        );
        assert!(matches!(tokenize_sentence("   "), Err(Error::EmptySentence)));
        assert!(matches!(tokenize_sentence(" . "), Err(Error::EmptySentence)));
        assert_eq!(tokenize_sentence("a , b").unwrap(), toks("a , b"));
        assert_eq!(tokenize_sentence("U.S. troops left.").unwrap(), toks("U.S. troops left"));
    }

    #[test]
    fn split_rendered_keeps_periods() {
        assert_eq!(split_rendered("of it, the end."), toks("of it , the end."));
    }

    #[test]
    fn extract_princess_trigrams() {
        let s = vec![toks("The princess wears a red dress")];
        let (recs, report) = extract_ngrams(&s, 3).unwrap();
        assert_eq!(report.windows, 4);
        let find = |t: &str| recs.iter().find(|r| r.tokens == toks(t)).unwrap();
        let first = find("The princess wears");
        assert!(first.is_start && !first.is_end && first.count == 1);
        assert!(!find("princess wears a").is_start);
        assert!(!find("wears a red").is_end);
        let last = find("a red dress");
        assert!(last.is_end && !last.is_start);
        assert_eq!(recs.len(), 4);
    }

    #[test]
    fn extract_aggregates_and_flags() {
        let s = vec![toks("a b c d"), toks("a b c d")];
        let (recs, _) = extract_ngrams(&s, 3).unwrap();
        assert!(recs.iter().all(|r| r.count == 2));

        let (recs, _) = extract_ngrams(&[toks("x y z")], 3).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].is_start && recs[0].is_end);

        let (recs, report) = extract_ngrams(&[toks("x y")], 3).unwrap();
        assert!(recs.is_empty());
        assert_eq!(report.skipped_short, 1);

        assert!(matches!(extract_ngrams(&s, 1), Err(Error::InvalidOrder(1))));
    }

    #[test]
    fn filter_drops_unknown_words() {
        let (recs, _) = extract_ngrams(&[toks("see http link now"), toks("see the , link")], 2).unwrap();
        let lex = Lexicon::from_words("w", ["see", "link", "now", "the"]);
        let kept = filter_ngrams(&recs, &lex);
        assert!(kept.iter().all(|r| !r.tokens.contains(&"http".to_owned())));
        assert_eq!(kept.len(), 4);
        assert_eq!(filter_ngrams(&kept, &lex), kept);
    }

    #[test]
    fn tsv_roundtrip() {
        let (recs, _) = extract_ngrams(&[toks("a b , c d"), toks("b , c a")], 3).unwrap();
        let text = write_ngrams_tsv(&recs);
        assert_eq!(parse_ngrams_tsv(&text, "mem").unwrap(), recs);
        assert!(parse_ngrams_tsv("a\tb\t1\t1\t2\n", "mem").is_err());
        assert!(parse_ngrams_tsv("a\tb\t1\t1\t0\na\tb\tc\t1\t1\t0\n", "mem").is_err());
    }

    proptest::proptest! {
        #[test]
        fn window_counts_are_conserved(
            sentences in proptest::collection::vec(
                proptest::collection::vec("[abc,]", 0..8), 0..10),
            n in 2usize..4,
        ) {
            let (recs, report) = extract_ngrams(&sentences, n).unwrap();
            let expected: usize = sentences
                .iter()
                .filter(|s| s.len() >= n)
                .map(|s| s.len() - n + 1)
                .sum();
            let total: u64 = recs.iter().map(|r| r.count).sum();
            proptest::prop_assert_eq!(total, expected as u64);
            proptest::prop_assert_eq!(report.windows, expected as u64);
        }
    }
}
