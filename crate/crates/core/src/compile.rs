//! Compilation of a [`ConstraintModel`] into its solution MDD.
//!
//! The production path ([`compile`]) intersects all constraints on the fly:
//! layers are expanded one variable at a time from states keyed by the
//! n-gram context and the running knapsack sums, and equal states are merged
//! as they are created. [`compile_explicit`] builds one diagram per
//! constraint and intersects them; it only scales to toy inputs and exists as
//! an independent route for testing. [`refine`] hardens an already compiled
//! diagram with extra unary constraints.

use std::fmt::Write as _;
use std::hash::Hash;
use std::time::Instant;

use num_bigint::BigUint;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::corpus::COMMA;
use crate::error::{Error, Result};
use crate::lexicon::{char_count, Lexicon};
use crate::mdd::{Mdd, MddBuilder, PathCost};
use crate::model::{line_char_cost, ConstraintModel, UnaryConstraint};
use crate::ngram_index::{NgramIndex, TokenId};

/// Arc cost components of compiled diagrams.
pub const COST_CHARS: usize = 0;
pub const COST_SYLLABLES: usize = 1;
pub const COST_ARITY: usize = 2;

#[derive(Debug, Clone)]
pub struct CompileOptions {
    /// Abort when a layer holds more states than this.
    pub max_states: Option<usize>,
    /// Prune states that cannot reach a knapsack window's range.
    pub prune_with_bounds: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            max_states: None,
            prune_with_bounds: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CompileStats {
    /// Node count per layer of the reduced diagram (terminal excluded).
    pub layer_nodes: Vec<usize>,
    pub layer_arcs: Vec<usize>,
    /// States created per layer before trimming and reduction.
    pub raw_states: Vec<usize>,
    pub peak_states: usize,
    /// Nodes including the terminal.
    pub nodes: usize,
    pub arcs: usize,
    pub solutions: BigUint,
    pub seconds: f64,
}

impl CompileStats {
    pub fn from_mdd(mdd: &Mdd) -> Self {
        CompileStats {
            layer_nodes: mdd.layer_widths(),
            layer_arcs: mdd.layer_arc_counts(),
            nodes: mdd.node_count(),
            arcs: mdd.arc_count(),
            solutions: mdd.count_solutions(),
            ..Default::default()
        }
    }

    /// Per-layer `layer nodes arcs` rows followed by a summary row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# layer\tnodes\tarcs\n");
        for (i, (n, a)) in self.layer_nodes.iter().zip(&self.layer_arcs).enumerate() {
            let _ = writeln!(out, "{i}\t{n}\t{a}");
        }
        out.push_str("# nodes\tarcs\tsols\tseconds\tpeak_states\n");
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.3}\t{}",
            self.nodes, self.arcs, self.solutions, self.seconds, self.peak_states
        );
        out
    }

    /// Reads back what [`CompileStats::to_tsv`] wrote. Raw state counts are
    /// not part of the file.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Parse {
            path: "<stats>".into(),
            line: line + 1,
            msg: msg.to_owned(),
        };
        let mut stats = CompileStats::default();
        let mut section = 0;
        for (i, line) in text.lines().enumerate() {
            if line.starts_with('#') {
                section += 1;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match (section, cols.len()) {
                (1, 3) => {
                    stats.layer_nodes.push(cols[1].parse().map_err(|_| err(i, "bad node count"))?);
                    stats.layer_arcs.push(cols[2].parse().map_err(|_| err(i, "bad arc count"))?);
                }
                (2, 5) => {
                    stats.nodes = cols[0].parse().map_err(|_| err(i, "bad nodes"))?;
                    stats.arcs = cols[1].parse().map_err(|_| err(i, "bad arcs"))?;
                    stats.solutions = cols[2].parse().map_err(|_| err(i, "bad sols"))?;
                    stats.seconds = cols[3].parse().map_err(|_| err(i, "bad seconds"))?;
                    stats.peak_states = cols[4].parse().map_err(|_| err(i, "bad peak"))?;
                }
                _ => return Err(err(i, "unexpected row")),
            }
        }
        Ok(stats)
    }

    /// `layer width` rows for plotting.
    pub fn widths_tsv(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.layer_nodes.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{w}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumKind {
    Chars,
    Syllables,
}

/// One knapsack-style bound over a window of positions (1-based, inclusive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumBound {
    pub name: String,
    pub kind: SumKind,
    pub start: usize,
    pub end: usize,
    pub min: i64,
    pub max: i64,
}

impl SumBound {
    pub fn covers(&self, pos: usize) -> bool {
        self.start <= pos && pos <= self.end
    }
}

/// The model's character knapsacks plus the syllable total, as sums.
pub fn sum_bounds(model: &ConstraintModel) -> Vec<SumBound> {
    let mut sums: Vec<SumBound> = model
        .char_knapsacks
        .iter()
        .map(|k| SumBound {
            name: format!("chars[{}..{}]", k.start, k.end),
            kind: SumKind::Chars,
            start: k.start,
            end: k.end,
            min: k.min as i64,
            max: k.max as i64,
        })
        .collect();
    if let Some(t) = model.syllable_sum {
        sums.push(SumBound {
            name: "syllables".into(),
            kind: SumKind::Syllables,
            start: 1,
            end: model.variables,
            min: t as i64,
            max: t as i64,
        });
    }
    sums
}

/// Per-token attributes and per-position admissibility over an index
/// vocabulary.
struct Tables {
    chars: Vec<u32>,
    sylls: Vec<u32>,
    comma: Vec<bool>,
    /// opens_line[pos - 1]
    opens_line: Vec<bool>,
    /// allowed[pos - 1][token]
    allowed: Vec<Vec<bool>>,
}

impl Tables {
    fn new(model: &ConstraintModel, index: &NgramIndex, lexicon: &Lexicon) -> Self {
        let vocab = index.vocab();
        let chars: Vec<u32> = vocab.iter().map(|t| char_count(t)).collect();
        let sylls: Vec<u32> = vocab.iter().map(|t| lexicon.syllable_count(t)).collect();
        let comma = vocab.iter().map(|t| t == COMMA).collect();
        let allowed = (1..=model.variables)
            .map(|pos| match model.unary_at(pos) {
                None => vec![true; vocab.len()],
                Some(u) => vocab
                    .iter()
                    .enumerate()
                    .map(|(i, t)| u.admits_counts(t, chars[i], sylls[i]))
                    .collect(),
            })
            .collect();
        let opens_line = (1..=model.variables).map(|pos| model.starts_line(pos)).collect();
        Tables {
            chars,
            sylls,
            comma,
            opens_line,
            allowed,
        }
    }

    /// Contribution of a token at `pos` to a sum: syllables, or its
    /// character cost within its line.
    fn contribution(&self, tok: TokenId, pos: usize, sum: &SumBound) -> i64 {
        let t = tok as usize;
        match sum.kind {
            SumKind::Syllables => self.sylls[t] as i64,
            SumKind::Chars if self.comma[t] => 1,
            SumKind::Chars if self.opens_line[pos - 1] => self.chars[t] as i64,
            SumKind::Chars => self.chars[t] as i64 + 1,
        }
    }
}

/// Admissible bounds on what each sum can still collect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemainingBounds {
    pub sums: Vec<SumBound>,
    /// `per_layer[i][s]`: (min, max) still collectable by sum `s` once `i`
    /// variables are assigned, for `i` in `0..=variables`. `None` when some
    /// position of the window admits no token at all.
    pub per_layer: Vec<Vec<Option<(i64, i64)>>>,
}

/// Bounds computed from the per-position unary domains, ignoring chaining,
/// so they never cut a feasible completion.
pub fn remaining_cost_bounds(
    model: &ConstraintModel,
    lexicon: &Lexicon,
    index: &NgramIndex,
) -> RemainingBounds {
    let tables = Tables::new(model, index, lexicon);
    remaining_from_tables(model, &tables)
}

fn remaining_from_tables(model: &ConstraintModel, tables: &Tables) -> RemainingBounds {
    let sums = sum_bounds(model);
    let n = model.variables;
    // per-position (min, max) contribution for each sum
    let per_pos: Vec<Vec<Option<(i64, i64)>>> = (1..=n)
        .map(|pos| {
            sums.iter()
                .map(|s| {
                    if !s.covers(pos) {
                        return Some((0, 0));
                    }
                    tables.allowed[pos - 1]
                        .iter()
                        .enumerate()
                        .filter(|(_, &ok)| ok)
                        .map(|(t, _)| tables.contribution(t as TokenId, pos, s))
                        .fold(None, |acc: Option<(i64, i64)>, c| {
                            Some(acc.map_or((c, c), |(lo, hi)| (lo.min(c), hi.max(c))))
                        })
                })
                .collect()
        })
        .collect();
    let mut per_layer = vec![vec![Some((0, 0)); sums.len()]; n + 1];
    for i in (0..n).rev() {
        for s in 0..sums.len() {
            per_layer[i][s] = match (per_layer[i + 1][s], per_pos[i][s]) {
                (Some((a, b)), Some((c, d))) => Some((a + c, b + d)),
                _ => None,
            };
        }
    }
    RemainingBounds { sums, per_layer }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct StateKey {
    suffix: SmallVec<[TokenId; 4]>,
    sums: SmallVec<[i64; 6]>,
}

/// Builds the reduced diagram of all sentences satisfying `model`.
pub fn compile(
    model: &ConstraintModel,
    index: &NgramIndex,
    lexicon: &Lexicon,
) -> Result<(Mdd, CompileStats)> {
    compile_with(model, index, lexicon, &CompileOptions::default())
}

pub fn compile_with(
    model: &ConstraintModel,
    index: &NgramIndex,
    lexicon: &Lexicon,
    options: &CompileOptions,
) -> Result<(Mdd, CompileStats)> {
    let started = Instant::now();
    let errors = model.validate();
    if !errors.is_empty() {
        return Err(Error::Model(errors.join("; ")));
    }
    let k = model.chaining_order;
    if index.order() != k {
        return Err(Error::Shape(format!(
            "n-gram index has order {}, the model chains with order {k}",
            index.order()
        )));
    }
    let n = model.variables;
    let tables = Tables::new(model, index, lexicon);
    let bounds = remaining_from_tables(model, &tables);
    let sums = &bounds.sums;

    let mut builder = MddBuilder::new(n, COST_ARITY)?;
    let label_of: Vec<u32> = index.vocab().iter().map(|t| builder.intern(t)).collect();

    let mut raw_states = vec![1usize];
    let unreachable_window = bounds.per_layer[0]
        .iter()
        .zip(sums)
        .any(|(b, s)| b.is_none_or(|(lo, hi)| lo > s.max || hi < s.min));
    let mut layer: Vec<StateKey> = if unreachable_window {
        Vec::new()
    } else {
        vec![StateKey {
            suffix: SmallVec::new(),
            sums: SmallVec::from_elem(0, sums.len()),
        }]
    };

    for i in 0..n {
        let pos = i + 1;
        let last = pos == n;
        let opens_line = model.starts_line(pos);
        let mut next_ids: FxHashMap<StateKey, u32> = FxHashMap::default();
        let mut next: Vec<StateKey> = Vec::new();
        let mut candidates: Vec<(TokenId, u32)> = Vec::new();

        for (src, state) in layer.iter().enumerate() {
            candidates.clear();
            let leaf_level = pos >= k;
            if pos <= k {
                candidates.extend(index.start_children_ids(&state.suffix));
            } else {
                candidates.extend_from_slice(index.children_ids(&state.suffix));
            }
            for &(tok, child) in &candidates {
                if !tables.allowed[i][tok as usize] {
                    continue;
                }
                if last && leaf_level && !index.leaf(child).is_end {
                    continue;
                }
                let Some(acc) = advance(&state.sums, tok, pos, sums, &bounds, &tables, options) else {
                    continue;
                };
                let cost = PathCost::from([
                    line_char_cost(index.token(tok), opens_line) as i64,
                    tables.sylls[tok as usize] as i64,
                ]);
                let target = if last {
                    0
                } else {
                    let mut suffix = state.suffix.clone();
                    suffix.push(tok);
                    if suffix.len() > k - 1 {
                        suffix.remove(0);
                    }
                    let key = StateKey { suffix, sums: acc };
                    match next_ids.get(&key) {
                        Some(&id) => id,
                        None => {
                            let id = builder.add_node(pos);
                            next_ids.insert(key.clone(), id);
                            next.push(key);
                            id
                        }
                    }
                };
                builder.add_arc(i, src as u32, label_of[tok as usize], cost, target);
            }
        }
        if !last {
            raw_states.push(next.len());
            if let Some(limit) = options.max_states {
                if next.len() > limit {
                    let partial = CompileStats {
                        peak_states: raw_states.iter().copied().max().unwrap_or(0),
                        raw_states,
                        seconds: started.elapsed().as_secs_f64(),
                        ..Default::default()
                    };
                    return Err(Error::StateLimit {
                        limit,
                        layer: pos,
                        states: next.len(),
                        partial: Box::new(partial),
                    });
                }
            }
        }
        layer = next;
    }

    let mdd = builder.finish()?;
    let mut stats = CompileStats::from_mdd(&mdd);
    stats.peak_states = raw_states.iter().copied().max().unwrap_or(0);
    stats.raw_states = raw_states;
    stats.seconds = started.elapsed().as_secs_f64();
    log::debug!(
        "compiled {} layers: {} nodes, {} arcs, {} solutions",
        n,
        stats.nodes,
        stats.arcs,
        stats.solutions
    );
    Ok((mdd, stats))
}

/// Adds a token's contributions to the running sums. Returns `None` when a
/// window closes out of range or (with pruning) can no longer reach it.
fn advance(
    current: &[i64],
    tok: TokenId,
    pos: usize,
    sums: &[SumBound],
    bounds: &RemainingBounds,
    tables: &Tables,
    options: &CompileOptions,
) -> Option<SmallVec<[i64; 6]>> {
    let mut acc: SmallVec<[i64; 6]> = SmallVec::from_slice(current);
    for (s, sum) in sums.iter().enumerate() {
        if !sum.covers(pos) {
            continue;
        }
        acc[s] += tables.contribution(tok, pos, sum);
        if pos == sum.end {
            if acc[s] < sum.min || acc[s] > sum.max {
                return None;
            }
            acc[s] = 0;
        } else if options.prune_with_bounds {
            let (lo, hi) = bounds.per_layer[pos][s]?;
            if acc[s] + lo > sum.max || acc[s] + hi < sum.min {
                return None;
            }
        }
    }
    Some(acc)
}

/// Keeps the paths that also satisfy `extra` unary constraints, by
/// intersecting with a width-one filter diagram.
pub fn refine(mdd: &Mdd, extra: &[UnaryConstraint], lexicon: &Lexicon) -> Result<Mdd> {
    let n = mdd.layer_count();
    if let Some(u) = extra.iter().find(|u| u.index < 1 || u.index > n) {
        return Err(Error::Model(format!(
            "refinement index {} is out of range 1..{n}",
            u.index
        )));
    }
    let domains: Vec<Vec<(&str, PathCost)>> = (0..n)
        .map(|layer| {
            mdd.layer_labels(layer)
                .into_iter()
                .filter(|t| {
                    extra
                        .iter()
                        .filter(|u| u.index == layer + 1)
                        .all(|u| u.admits(t, lexicon))
                })
                .map(|t| (t, PathCost::zeros(0)))
                .collect()
        })
        .collect();
    let filter = Mdd::universal(0, &domains)?;
    mdd.intersect(&filter)
}

/// Layered expansion over the whole index vocabulary with a user state.
fn layered<S, F, A>(
    n: usize,
    index: &NgramIndex,
    costs: &[Vec<PathCost>],
    arity: usize,
    init: S,
    step: F,
    accept: A,
) -> Result<Mdd>
where
    S: Clone + Eq + Hash,
    F: Fn(usize, &S, TokenId) -> Option<S>,
    A: Fn(&S) -> bool,
{
    let mut b = MddBuilder::new(n, arity)?;
    let labels: Vec<u32> = index.vocab().iter().map(|t| b.intern(t)).collect();
    let mut layer = vec![init];
    for i in 0..n {
        let last = i + 1 == n;
        let mut ids: FxHashMap<S, u32> = FxHashMap::default();
        let mut next = Vec::new();
        for (src, state) in layer.iter().enumerate() {
            for tok in 0..labels.len() as TokenId {
                let Some(s) = step(i + 1, state, tok) else {
                    continue;
                };
                let cost = if arity == 0 {
                    PathCost::zeros(0)
                } else {
                    costs[i][tok as usize].clone()
                };
                let target = if last {
                    if !accept(&s) {
                        continue;
                    }
                    0
                } else {
                    *ids.entry(s.clone()).or_insert_with(|| {
                        next.push(s);
                        b.add_node(i + 1)
                    })
                };
                b.add_arc(i, src as u32, labels[tok as usize], cost, target);
            }
        }
        layer = next;
    }
    b.finish()
}

/// One diagram per constraint family, intersected. Exponentially more
/// memory-hungry than [`compile`]; intended for toy instances.
pub fn compile_explicit(model: &ConstraintModel, index: &NgramIndex, lexicon: &Lexicon) -> Result<Mdd> {
    let errors = model.validate();
    if !errors.is_empty() {
        return Err(Error::Model(errors.join("; ")));
    }
    let k = model.chaining_order;
    if index.order() != k {
        return Err(Error::Shape("index and model orders differ".into()));
    }
    let n = model.variables;
    let tables = Tables::new(model, index, lexicon);
    let costs: Vec<Vec<PathCost>> = (1..=n)
        .map(|pos| {
            index
                .vocab()
                .iter()
                .enumerate()
                .map(|(t, w)| {
                    PathCost::from([
                        line_char_cost(w, model.starts_line(pos)) as i64,
                        tables.sylls[t] as i64,
                    ])
                })
                .collect()
        })
        .collect();

    // n-gram chaining, carrying the arc costs
    let mut result = layered(
        n,
        index,
        &costs,
        COST_ARITY,
        Vec::<TokenId>::new(),
        |pos, seen, tok| {
            let mut s = seen.clone();
            s.push(tok);
            if pos >= k {
                let leaf = index.lookup_ids(&s[s.len() - k..])?;
                if pos == k && !leaf.is_start {
                    return None;
                }
                if pos == n && !leaf.is_end {
                    return None;
                }
                s.remove(0);
            } else if index.start_children_ids(seen).all(|(t, _)| t != tok) {
                return None;
            }
            Some(s)
        },
        |_| true,
    )?;

    for u in &model.unary {
        let unary = layered(
            n,
            index,
            &costs,
            0,
            (),
            |pos, _, tok| (pos != u.index || tables.allowed[pos - 1][tok as usize]).then_some(()),
            |_| true,
        )?;
        result = result.intersect(&unary)?;
    }
    for sum in sum_bounds(model) {
        let knapsack = layered(
            n,
            index,
            &costs,
            0,
            0i64,
            |pos, acc, tok| {
                if !sum.covers(pos) {
                    return Some(*acc);
                }
                let v = acc + tables.contribution(tok, pos, &sum);
                // exact window check; partial sums only grow
                (v <= sum.max && (pos != sum.end || v >= sum.min)).then_some(v)
            },
            |_| true,
        )?;
        result = result.intersect(&knapsack)?;
    }
    Ok(result)
}
