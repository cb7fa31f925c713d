//! Declarative sentence model, the RADNER-like presets and an independent
//! sentence validator.
//!
//! Positions are 1-based throughout, matching the model config files.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::COMMA;
use crate::error::{Error, Result};
use crate::lexicon::{char_count, heuristic_syllables, Lexicon};
use crate::ngram_index::NgramIndex;

/// Character-count bound over the window `start..=end`.
///
/// Each token is charged its length within the rendered layout: one more for
/// the preceding space unless it opens a line, and 1 for a comma. A window
/// that coincides with a line therefore measures the line length, and one
/// spanning several lines measures the sum of their lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharKnapsack {
    pub start: usize,
    pub end: usize,
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct UnaryConstraint {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syll_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syll_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_token: Option<String>,
}

impl UnaryConstraint {
    pub fn new(index: usize) -> Self {
        UnaryConstraint {
            index,
            ..Default::default()
        }
    }

    pub fn chars(mut self, min: Option<u32>, max: Option<u32>) -> Self {
        self.char_min = min;
        self.char_max = max;
        self
    }

    pub fn syllables(mut self, min: Option<u32>, max: Option<u32>) -> Self {
        self.syll_min = min;
        self.syll_max = max;
        self
    }

    pub fn fixed(mut self, token: &str) -> Self {
        self.fixed_token = Some(token.to_owned());
        self
    }

    pub fn admits(&self, token: &str, lexicon: &Lexicon) -> bool {
        self.admits_counts(token, char_count(token), lexicon.syllable_count(token))
    }

    pub(crate) fn admits_counts(&self, token: &str, chars: u32, sylls: u32) -> bool {
        if let Some(f) = &self.fixed_token {
            if f != token {
                return false;
            }
        }
        within(chars, self.char_min, self.char_max) && within(sylls, self.syll_min, self.syll_max)
    }
}

fn within(v: u32, min: Option<u32>, max: Option<u32>) -> bool {
    min.is_none_or(|m| v >= m) && max.is_none_or(|m| v <= m)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConstraintModel {
    pub variables: usize,
    pub chaining_order: usize,
    #[serde(default)]
    pub char_knapsacks: Vec<CharKnapsack>,
    #[serde(default)]
    pub syllable_sum: Option<u32>,
    #[serde(default)]
    pub unary: Vec<UnaryConstraint>,
    pub line_breaks: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadnerVariant {
    Core,
    German,
    Spanish,
    Portuguese,
}

impl RadnerVariant {
    pub const ALL: [RadnerVariant; 4] = [
        RadnerVariant::Core,
        RadnerVariant::German,
        RadnerVariant::Spanish,
        RadnerVariant::Portuguese,
    ];

    /// Constraint on the first word; the core rule is a relaxation of the
    /// language-specific ones.
    pub fn first_word(self) -> UnaryConstraint {
        let u = UnaryConstraint::new(1).syllables(Some(1), Some(1));
        match self {
            RadnerVariant::Core => u.chars(None, Some(4)),
            RadnerVariant::German => u.chars(Some(3), Some(3)),
            RadnerVariant::Spanish => u.chars(Some(2), Some(3)),
            RadnerVariant::Portuguese => u.chars(Some(1), Some(3)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RadnerVariant::Core => "core",
            RadnerVariant::German => "german",
            RadnerVariant::Spanish => "spanish",
            RadnerVariant::Portuguese => "portuguese",
        }
    }
}

impl FromStr for RadnerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "core" => Ok(RadnerVariant::Core),
            "german" => Ok(RadnerVariant::German),
            "spanish" => Ok(RadnerVariant::Spanish),
            "portuguese" => Ok(RadnerVariant::Portuguese),
            _ => Err(Error::UnknownVariant(s.to_owned())),
        }
    }
}

impl fmt::Display for RadnerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Default n-gram order of the RADNER-like presets.
pub const RADNER_CHAINING_ORDER: usize = 4;

impl ConstraintModel {
    /// Fifteen variables over three lines (5 words, 5 words plus the comma,
    /// 4 words), 27..=29 characters per line, 82..=84 for the sentence and
    /// 23 syllables in total.
    pub fn radner(variant: RadnerVariant) -> Self {
        let one = Some(1);
        let two = Some(2);
        let unary = vec![
            variant.first_word(),
            UnaryConstraint::new(2).chars(None, Some(6)).syllables(two, two),
            UnaryConstraint::new(3).chars(None, Some(7)).syllables(two, two),
            UnaryConstraint::new(6).chars(None, Some(4)).syllables(one, one),
            UnaryConstraint::new(7)
                .chars(Some(10), Some(10))
                .syllables(Some(4), Some(4)),
            UnaryConstraint::new(8).fixed(COMMA),
            UnaryConstraint::new(9).syllables(one, one),
            UnaryConstraint::new(10).syllables(one, one),
            UnaryConstraint::new(11).syllables(one, one),
            UnaryConstraint::new(12).syllables(two, two),
            UnaryConstraint::new(13).syllables(two, two),
            UnaryConstraint::new(14).syllables(two, Some(3)),
            UnaryConstraint::new(15).syllables(two, Some(3)),
        ];
        let line = |start, end| CharKnapsack {
            start,
            end,
            min: 27,
            max: 29,
        };
        ConstraintModel {
            variables: 15,
            chaining_order: RADNER_CHAINING_ORDER,
            char_knapsacks: vec![
                line(1, 5),
                line(6, 11),
                line(12, 15),
                CharKnapsack {
                    start: 1,
                    end: 15,
                    min: 82,
                    max: 84,
                },
            ],
            syllable_sum: Some(23),
            unary,
            line_breaks: vec![5, 11, 15],
        }
    }

    pub fn with_chaining_order(mut self, k: usize) -> Self {
        self.chaining_order = k;
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let model: ConstraintModel =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let errors = model.validate();
        if !errors.is_empty() {
            return Err(Error::Model(errors.join("; ")));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Schema errors; empty when every invariant holds.
    pub fn validate(&self) -> Vec<String> {
        let n = self.variables;
        let mut errors = Vec::new();
        if n == 0 {
            errors.push("variables must be at least 1".to_owned());
        }
        if self.chaining_order < 2 {
            errors.push(format!("chainingOrder {} must be at least 2", self.chaining_order));
        } else if self.chaining_order > n {
            errors.push(format!(
                "chainingOrder {} exceeds the {n} variables",
                self.chaining_order
            ));
        }
        for k in &self.char_knapsacks {
            if k.start < 1 || k.start > k.end || k.end > n {
                errors.push(format!(
                    "char knapsack {}..{} is out of the index range 1..{n}",
                    k.start, k.end
                ));
            }
            if k.min > k.max {
                errors.push(format!(
                    "char knapsack {}..{} has min {} > max {}",
                    k.start, k.end, k.min, k.max
                ));
            }
        }
        match self.line_breaks.last() {
            None => errors.push("lineBreaks must not be empty".to_owned()),
            Some(&last) if last != n => errors.push(format!(
                "last line break is {last}, expected the final index {n}"
            )),
            _ => {}
        }
        if self.line_breaks.windows(2).any(|w| w[0] >= w[1]) {
            errors.push("lineBreaks must be strictly increasing".to_owned());
        }
        if self.line_breaks.first().is_some_and(|&b| b == 0) {
            errors.push("line breaks are 1-based".to_owned());
        }
        let mut seen = vec![false; n + 1];
        for u in &self.unary {
            if u.index < 1 || u.index > n {
                errors.push(format!("unary index {} is out of range 1..{n}", u.index));
                continue;
            }
            if std::mem::replace(&mut seen[u.index], true) {
                errors.push(format!("duplicate unary constraint at index {}", u.index));
            }
            for (what, min, max) in [("char", u.char_min, u.char_max), ("syll", u.syll_min, u.syll_max)] {
                if let (Some(a), Some(b)) = (min, max) {
                    if a > b {
                        errors.push(format!("unary {}: {what} min {a} > max {b}", u.index));
                    }
                }
            }
            if let Some(tok) = &u.fixed_token {
                if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                    errors.push(format!("unary {}: fixed token must be a single word", u.index));
                } else if !u.admits_counts(tok, char_count(tok), heuristic_syllables(tok)) {
                    errors.push(format!(
                        "unary {}: fixed token `{tok}` violates its own bounds",
                        u.index
                    ));
                }
            }
        }
        errors
    }

    pub fn unary_at(&self, index: usize) -> Option<&UnaryConstraint> {
        self.unary.iter().find(|u| u.index == index)
    }

    /// Replaces (or adds) the unary constraint at the same index.
    pub fn set_unary(&mut self, constraint: UnaryConstraint) {
        self.unary.retain(|u| u.index != constraint.index);
        self.unary.push(constraint);
        self.unary.sort_by_key(|u| u.index);
    }

    /// Is `index` the first position of a rendered line?
    pub fn starts_line(&self, index: usize) -> bool {
        index == 1 || self.line_breaks.contains(&(index - 1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub lines: Vec<String>,
    pub line_char_counts: Vec<usize>,
    pub total_char_count: usize,
}

/// Joins tokens with single spaces, except before a comma.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        let t = t.as_ref();
        if i > 0 && t != COMMA {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

/// Character cost of a token inside a line: its length, plus one for the
/// separating space unless it opens the line or is a comma.
pub fn line_char_cost(token: &str, opens_line: bool) -> u32 {
    if token == COMMA {
        1
    } else if opens_line {
        char_count(token)
    } else {
        char_count(token) + 1
    }
}

pub fn render_sentence<S: AsRef<str>>(tokens: &[S], line_breaks: &[usize]) -> Result<Rendered> {
    let expected = line_breaks.last().copied().unwrap_or(0);
    if tokens.len() != expected {
        return Err(Error::Shape(format!(
            "sentence has {} tokens, the layout expects {expected}",
            tokens.len()
        )));
    }
    let mut lines = Vec::with_capacity(line_breaks.len());
    let mut start = 0;
    for &end in line_breaks {
        lines.push(join_tokens(&tokens[start..end]));
        start = end;
    }
    let line_char_counts: Vec<usize> = lines.iter().map(|l| l.chars().count()).collect();
    let total_char_count = line_char_counts.iter().sum();
    Ok(Rendered {
        lines,
        line_char_counts,
        total_char_count,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintCheck {
    pub name: String,
    pub passed: bool,
    pub measured: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub checks: Vec<ConstraintCheck>,
    pub overall: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One `name<TAB>pass|fail<TAB>measured` line per constraint.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                c.name,
                if c.passed { "pass" } else { "fail" },
                c.measured
            );
        }
        out
    }
}

/// Checks every constraint of the model directly on a token sequence,
/// without going through the compiler.
pub fn validate_sentence<S: AsRef<str>>(
    model: &ConstraintModel,
    tokens: &[S],
    index: &NgramIndex,
    lexicon: &Lexicon,
) -> ValidationReport {
    let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let mut checks = Vec::new();
    let mut check = |name: String, passed: bool, measured: String| {
        checks.push(ConstraintCheck {
            name,
            passed,
            measured,
        })
    };
    let n = model.variables;
    if tokens.len() != n {
        check(
            "length".into(),
            false,
            format!("{} tokens, expected {n}", tokens.len()),
        );
        return finish(checks);
    }
    let k = model.chaining_order;
    if k > n || index.order() != k {
        check(
            "chain.order".into(),
            false,
            format!("index order {}, model order {k}", index.order()),
        );
    } else {
        let first = index.lookup(&tokens[..k]);
        check(
            "chain.start".into(),
            first.is_some_and(|l| l.is_start),
            join_tokens(&tokens[..k]),
        );
        for i in 0..=n - k {
            let window = &tokens[i..i + k];
            check(
                format!("chain.window@{}", i + 1),
                index.contains(window),
                join_tokens(window),
            );
        }
        let last = index.lookup(&tokens[n - k..]);
        check(
            "chain.end".into(),
            last.is_some_and(|l| l.is_end),
            join_tokens(&tokens[n - k..]),
        );
    }
    for ks in &model.char_knapsacks {
        let measured: u32 = (ks.start..=ks.end)
            .map(|pos| line_char_cost(tokens[pos - 1], model.starts_line(pos)))
            .sum();
        check(
            format!("chars[{}..{}]", ks.start, ks.end),
            measured >= ks.min && measured <= ks.max,
            format!("{measured} in [{}, {}]", ks.min, ks.max),
        );
    }
    if let Some(target) = model.syllable_sum {
        let total: u32 = tokens.iter().map(|t| lexicon.syllable_count(t)).sum();
        check(
            "syllables".into(),
            total == target,
            format!("{total} = {target}"),
        );
    }
    for u in &model.unary {
        let tok = tokens[u.index - 1];
        check(
            format!("unary[{}]", u.index),
            u.admits(tok, lexicon),
            format!(
                "`{tok}` chars {} syllables {}",
                char_count(tok),
                lexicon.syllable_count(tok)
            ),
        );
    }
    finish(checks)
}

fn finish(checks: Vec<ConstraintCheck>) -> ValidationReport {
    let overall = checks.iter().all(|c| c.passed);
    ValidationReport { checks, overall }
}
