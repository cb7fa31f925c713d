//! Depth-n trie over filtered n-grams, answering successor queries.
//!
//! Tokens are interned into a sorted vocabulary so that token ids follow
//! surface order; children of every trie node are kept sorted by id.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use crate::corpus::NgramRecord;
use crate::error::{Error, Result};

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leaf {
    pub count: u64,
    pub is_start: bool,
    pub is_end: bool,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    /// (token, child index) sorted by token; at depth n-1 the child index
    /// points into `leaves` instead.
    children: Vec<(TokenId, u32)>,
    /// Some start-flagged n-gram lies below this node.
    leads_to_start: bool,
}

#[derive(Debug, Clone)]
pub struct NgramIndex {
    order: usize,
    vocab: Vec<String>,
    ids: FxHashMap<String, TokenId>,
    nodes: Vec<TrieNode>,
    leaves: Vec<Leaf>,
}

impl NgramIndex {
    pub fn build(records: &[NgramRecord]) -> Result<Self> {
        let order = records.first().map_or(2, NgramRecord::order);
        Self::build_with_order(records, order)
    }

    /// Builds an index of the given order; `records` may be empty.
    pub fn build_with_order(records: &[NgramRecord], order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidOrder(order));
        }
        if let Some(r) = records.iter().find(|r| r.order() != order) {
            return Err(Error::Shape(format!(
                "mixed n-gram orders: expected {order}, found {}",
                r.order()
            )));
        }
        let vocab: Vec<String> = records
            .iter()
            .flat_map(|r| r.tokens.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let ids: FxHashMap<String, TokenId> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();

        let mut sorted: Vec<(Vec<TokenId>, Leaf)> = Vec::with_capacity(records.len());
        for r in records {
            let key: Vec<TokenId> = r.tokens.iter().map(|t| ids[t.as_str()]).collect();
            sorted.push((
                key,
                Leaf {
                    count: r.count,
                    is_start: r.is_start,
                    is_end: r.is_end,
                },
            ));
        }
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        // duplicate records are merged
        let mut merged: Vec<(Vec<TokenId>, Leaf)> = Vec::with_capacity(sorted.len());
        for (key, leaf) in sorted {
            match merged.last_mut() {
                Some((k, l)) if *k == key => {
                    l.count += leaf.count;
                    l.is_start |= leaf.is_start;
                    l.is_end |= leaf.is_end;
                }
                _ => merged.push((key, leaf)),
            }
        }

        let mut index = NgramIndex {
            order,
            vocab,
            ids,
            nodes: vec![TrieNode::default()],
            leaves: Vec::with_capacity(merged.len()),
        };
        // keys arrive sorted, so children are appended in order
        for (key, leaf) in merged {
            let mut node = 0usize;
            for (depth, &tok) in key.iter().enumerate() {
                if leaf.is_start {
                    index.nodes[node].leads_to_start = true;
                }
                if depth + 1 == order {
                    let leaf_id = index.leaves.len() as u32;
                    index.leaves.push(leaf);
                    index.nodes[node].children.push((tok, leaf_id));
                    break;
                }
                let next = match index.nodes[node].children.last() {
                    Some(&(t, child)) if t == tok => child as usize,
                    _ => {
                        let child = index.nodes.len();
                        index.nodes.push(TrieNode::default());
                        index.nodes[node].children.push((tok, child as u32));
                        child
                    }
                };
                node = next;
            }
        }
        Ok(index)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// Sorted vocabulary; position = token id.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.vocab[id as usize]
    }

    fn walk(&self, prefix: &[TokenId]) -> Option<usize> {
        let mut node = 0usize;
        for &tok in prefix {
            let children = &self.nodes[node].children;
            let i = children.binary_search_by_key(&tok, |c| c.0).ok()?;
            node = children[i].1 as usize;
        }
        Some(node)
    }

    /// Children below a prefix of length < n, as (token, child) pairs. At
    /// depth n-1 the child value is a leaf id.
    pub fn children_ids(&self, prefix: &[TokenId]) -> &[(TokenId, u32)] {
        debug_assert!(prefix.len() < self.order);
        match self.walk(prefix) {
            Some(node) => &self.nodes[node].children,
            None => &[],
        }
    }

    /// Like [`NgramIndex::children_ids`] but only when a start-flagged
    /// n-gram continues the prefix.
    pub fn start_children_ids(&self, prefix: &[TokenId]) -> impl Iterator<Item = (TokenId, u32)> + '_ {
        let depth = prefix.len();
        let last = depth + 1 == self.order;
        self.children_ids(prefix)
            .iter()
            .copied()
            .filter(move |&(_, child)| {
                if last {
                    self.leaves[child as usize].is_start
                } else {
                    self.nodes[child as usize].leads_to_start
                }
            })
    }

    pub fn leaf(&self, id: u32) -> Leaf {
        self.leaves[id as usize]
    }

    pub fn lookup_ids(&self, ngram: &[TokenId]) -> Option<Leaf> {
        if ngram.len() != self.order {
            return None;
        }
        let node = self.walk(&ngram[..self.order - 1])?;
        let children = &self.nodes[node].children;
        let i = children
            .binary_search_by_key(&ngram[self.order - 1], |c| c.0)
            .ok()?;
        Some(self.leaves[children[i].1 as usize])
    }

    pub fn lookup<S: AsRef<str>>(&self, ngram: &[S]) -> Option<Leaf> {
        let ids: Option<Vec<TokenId>> = ngram.iter().map(|t| self.token_id(t.as_ref())).collect();
        self.lookup_ids(&ids?)
    }

    pub fn contains<S: AsRef<str>>(&self, ngram: &[S]) -> bool {
        self.lookup(ngram).is_some()
    }

    /// Tokens `w` such that `context + w` is a stored n-gram.
    pub fn successors<S: AsRef<str>>(&self, context: &[S]) -> Result<BTreeSet<String>> {
        if context.len() != self.order - 1 {
            return Err(Error::Arity {
                expected: self.order - 1,
                got: context.len(),
            });
        }
        let ids: Option<Vec<TokenId>> = context.iter().map(|t| self.token_id(t.as_ref())).collect();
        let Some(ids) = ids else {
            return Ok(BTreeSet::new());
        };
        Ok(self
            .children_ids(&ids)
            .iter()
            .map(|&(t, _)| self.token(t).to_owned())
            .collect())
    }

    /// All stored n-grams in lexicographic order with their leaf data.
    pub fn ngrams(&self) -> Vec<(Vec<String>, Leaf)> {
        let mut out = Vec::with_capacity(self.leaves.len());
        let mut prefix = Vec::with_capacity(self.order);
        self.collect(0, &mut prefix, &mut out);
        out
    }

    fn collect(&self, node: usize, prefix: &mut Vec<TokenId>, out: &mut Vec<(Vec<String>, Leaf)>) {
        for &(tok, child) in &self.nodes[node].children {
            prefix.push(tok);
            if prefix.len() == self.order {
                let words = prefix.iter().map(|&t| self.token(t).to_owned()).collect();
                out.push((words, self.leaves[child as usize]));
            } else {
                self.collect(child as usize, prefix, out);
            }
            prefix.pop();
        }
    }

    pub fn start_ngrams(&self) -> BTreeSet<Vec<String>> {
        self.ngrams()
            .into_iter()
            .filter(|(_, l)| l.is_start)
            .map(|(g, _)| g)
            .collect()
    }

    pub fn end_ngrams(&self) -> BTreeSet<Vec<String>> {
        self.ngrams()
            .into_iter()
            .filter(|(_, l)| l.is_end)
            .map(|(g, _)| g)
            .collect()
    }

    /// Back to records, sorted lexicographically.
    pub fn to_records(&self) -> Vec<NgramRecord> {
        self.ngrams()
            .into_iter()
            .map(|(tokens, l)| NgramRecord {
                tokens,
                count: l.count,
                is_start: l.is_start,
                is_end: l.is_end,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::extract_ngrams;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_owned).collect()
    }

    // 3-grams from the trie figure's sentences
    fn figure_index() -> NgramIndex {
        let sentences = [
            "The black dog likes bones",
            "The white dog likes cats",
            "A red pot is hot",
            "The white cat sleeps",
        ];
        let s: Vec<Vec<String>> = sentences.iter().map(|s| toks(s)).collect();
        let (recs, _) = extract_ngrams(&s, 3).unwrap();
        NgramIndex::build(&recs).unwrap()
    }

    #[test]
    fn figure_successors() {
        let idx = figure_index();
        let succ = idx.successors(&["white", "dog"]).unwrap();
        assert_eq!(succ.into_iter().collect::<Vec<_>>(), vec!["likes"]);
        assert!(idx.successors(&["green", "dog"]).unwrap().is_empty());
        assert!(matches!(
            idx.successors(&["dog"]),
            Err(Error::Arity { expected: 2, got: 1 })
        ));
        assert!(idx.start_ngrams().contains(&toks("The black dog")));
        assert!(idx.start_ngrams().contains(&toks("A red pot")));
        assert!(idx.end_ngrams().contains(&toks("pot is hot")));
    }

    #[test]
    fn empty_index() {
        let idx = NgramIndex::build_with_order(&[], 3).unwrap();
        assert!(idx.is_empty());
        assert!(idx.successors(&["a", "b"]).unwrap().is_empty());
        assert!(idx.start_ngrams().is_empty());
        assert!(!idx.contains(&["a", "b", "c"]));
    }

    #[test]
    fn mixed_orders_rejected() {
        let a = NgramRecord {
            tokens: toks("a b"),
            count: 1,
            is_start: false,
            is_end: false,
        };
        let b = NgramRecord {
            tokens: toks("a b c"),
            ..a.clone()
        };
        assert!(matches!(NgramIndex::build(&[a, b]), Err(Error::Shape(_))));
    }

    #[test]
    fn start_children_follow_flags() {
        let idx = figure_index();
        let the = idx.token_id("The").unwrap();
        let firsts: Vec<&str> = idx
            .start_children_ids(&[])
            .map(|(t, _)| idx.token(t))
            .collect();
        assert_eq!(firsts, vec!["A", "The"]);
        let seconds: Vec<&str> = idx
            .start_children_ids(&[the])
            .map(|(t, _)| idx.token(t))
            .collect();
        assert_eq!(seconds, vec!["black", "white"]);
    }

    #[test]
    fn records_roundtrip_independent_of_input_order() {
        let idx = figure_index();
        let mut recs = idx.to_records();
        recs.reverse();
        let again = NgramIndex::build(&recs).unwrap();
        assert_eq!(again.to_records(), idx.to_records());
    }
}
