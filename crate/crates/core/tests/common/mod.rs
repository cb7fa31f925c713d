//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use rand::Rng;

use mddgen::corpus::{extract_ngrams, read_corpus, COMMA};
use mddgen::model::validate_sentence;
use mddgen::{ConstraintModel, Lexicon, Mdd, NgramIndex, NgramRecord, PathCost};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn toy_lexicon() -> Lexicon {
    Lexicon::load_wordlist(data("toy_lexicon.txt")).unwrap()
}

pub fn radner_lexicon() -> Lexicon {
    Lexicon::permissive("radner")
        .load_overrides(data("syllables.tsv"))
        .unwrap()
}

pub fn toy_model() -> ConstraintModel {
    ConstraintModel::parse(&std::fs::read_to_string(data("toy_model.json")).unwrap()).unwrap()
}

pub fn records(corpus: &str, n: usize, lexicon: &Lexicon) -> Vec<NgramRecord> {
    let sentences = read_corpus(data(corpus)).unwrap();
    let (recs, _) = extract_ngrams(&sentences, n).unwrap();
    mddgen::filter_ngrams(&recs, lexicon)
}

/// Every sentence of exactly `len` tokens reachable by successor expansion
/// over the records: a start-flagged n-gram opens it, every window is a
/// record and the last window is end-flagged. Works on plain records, not on
/// the trie.
pub fn successor_expansion(recs: &[NgramRecord], len: usize) -> BTreeSet<Vec<String>> {
    let n = recs[0].tokens.len();
    let mut next: HashMap<&[String], Vec<&String>> = HashMap::new();
    let mut flags: HashMap<&[String], bool> = HashMap::new();
    for r in recs {
        next.entry(&r.tokens[..n - 1]).or_default().push(&r.tokens[n - 1]);
        *flags.entry(&r.tokens[..]).or_default() |= r.is_end;
    }
    let mut out = BTreeSet::new();
    if len < n {
        return out;
    }
    for r in recs.iter().filter(|r| r.is_start) {
        let mut stack = vec![r.tokens.clone()];
        while let Some(seq) = stack.pop() {
            if seq.len() == len {
                if flags[&seq[len - n..]] {
                    out.insert(seq);
                }
                continue;
            }
            if let Some(succ) = next.get(&seq[seq.len() - n + 1..]) {
                for w in succ {
                    let mut s = seq.clone();
                    s.push((*w).clone());
                    stack.push(s);
                }
            }
        }
    }
    out
}

/// Brute-force solution set: successor expansion filtered by the
/// sentence validator.
pub fn oracle_solutions(
    model: &ConstraintModel,
    recs: &[NgramRecord],
    lexicon: &Lexicon,
) -> BTreeSet<Vec<String>> {
    let index = NgramIndex::build(recs).unwrap();
    successor_expansion(recs, model.variables)
        .into_iter()
        .filter(|s| validate_sentence(model, s, &index, lexicon).overall)
        .collect()
}

pub fn sentences(mdd: &Mdd) -> BTreeSet<Vec<String>> {
    mdd.paths().map(|(ids, _)| mdd.surfaces(&ids)).collect()
}

pub fn path_set(mdd: &Mdd) -> BTreeSet<(Vec<String>, Vec<i64>)> {
    mdd.paths()
        .map(|(ids, c)| (mdd.surfaces(&ids), c.components().to_vec()))
        .collect()
}

/// Random tuples of `layers` labels drawn from `domain` symbols, each label
/// carrying a cost derived from it so that equal prefixes never conflict.
pub fn random_tuples<R: Rng>(
    rng: &mut R,
    layers: usize,
    domain: usize,
    count: usize,
) -> Vec<Vec<(String, PathCost)>> {
    (0..count)
        .map(|_| {
            (0..layers)
                .map(|layer| {
                    let v = rng.gen_range(0..domain);
                    (format!("s{v}"), PathCost::from(vec![(v * (layer + 1)) as i64]))
                })
                .collect()
        })
        .collect()
}

/// True when no layer holds two nodes with the same outgoing arcs.
pub fn has_unique_signatures(mdd: &Mdd) -> bool {
    (0..mdd.layer_count()).all(|l| {
        let nodes = mdd.layer(l);
        let sigs: BTreeSet<Vec<(u32, Vec<i64>, u32)>> = nodes
            .iter()
            .map(|n| {
                n.arcs
                    .iter()
                    .map(|a| (a.label, a.cost.components().to_vec(), a.target))
                    .collect()
            })
            .collect();
        sigs.len() == nodes.len()
    })
}

/// The sum example: three variables over small integer domains, kept when
/// their sum falls in `[lo, hi]`.
pub const FIG1_DOMAINS: [[i64; 3]; 3] = [[1, 3, 7], [0, 2, 4], [2, 3, 4]];

pub fn fig1_tuples(lo: i64, hi: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for a in FIG1_DOMAINS[0] {
        for b in FIG1_DOMAINS[1] {
            for c in FIG1_DOMAINS[2] {
                if (lo..=hi).contains(&(a + b + c)) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

pub fn comma_positions(tokens: &[String]) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| *t == COMMA)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Word shuffle that differs from the input when possible.
pub fn shuffled<R: Rng>(rng: &mut R, tokens: &[String]) -> Vec<String> {
    use rand::seq::SliceRandom;
    let mut s = tokens.to_vec();
    for _ in 0..20 {
        s.shuffle(rng);
        if s != tokens {
            break;
        }
    }
    s
}
