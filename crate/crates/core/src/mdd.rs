//! Layered, ordered, deterministic cost-MDDs.
//!
//! An [`Mdd`] with `L` layers has one node set per variable; arcs leave layer
//! `i` and enter layer `i + 1`, and the arcs of the last layer all point at the
//! single (implicit) terminal. Every arc carries a label and a cost tuple of
//! fixed arity, and a path's cost is the componentwise sum of its arcs.
//!
//! Every constructor returns the diagram in normal form: trimmed (every node is
//! on a root-to-terminal path), reduced (no two nodes of a layer share the same
//! outgoing arc signature) and canonically numbered, so two diagrams holding the
//! same labelled, costed paths compare equal with `==`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::ops::AddAssign;

use num_bigint::BigUint;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type LabelId = u32;

const DEAD: u32 = u32::MAX;
const FORMAT_HEADER: &str = "mddgen-mdd 1";

/// Integer cost tuple carried by arcs and accumulated along paths.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathCost(pub SmallVec<[i64; 4]>);

impl PathCost {
    pub fn zeros(arity: usize) -> Self {
        PathCost(SmallVec::from_elem(0, arity))
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for PathCost {
    fn from(v: Vec<i64>) -> Self {
        PathCost(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[i64; N]> for PathCost {
    fn from(v: [i64; N]) -> Self {
        PathCost(v.iter().copied().collect())
    }
}

impl AddAssign<&PathCost> for PathCost {
    fn add_assign(&mut self, rhs: &PathCost) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a += *b;
        }
    }
}

impl fmt::Display for PathCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Arc {
    pub label: LabelId,
    pub cost: PathCost,
    /// Index into the next layer, or the terminal (always 0) from the last layer.
    pub target: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Node {
    /// Sorted by label.
    pub arcs: Vec<Arc>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mdd {
    labels: Vec<String>,
    arity: usize,
    layers: Vec<Vec<Node>>,
}

/// Incremental construction of a layered diagram. Layer `layer_count` holds
/// the terminal as node 0; [`MddBuilder::finish`] normalizes the result.
#[derive(Debug)]
pub struct MddBuilder {
    labels: Vec<String>,
    label_ids: HashMap<String, LabelId>,
    arity: usize,
    layers: Vec<Vec<Vec<Arc>>>,
}

impl MddBuilder {
    pub fn new(layer_count: usize, arity: usize) -> Result<Self> {
        if layer_count == 0 {
            return Err(Error::Shape("an MDD needs at least one layer".into()));
        }
        let mut layers = vec![Vec::new(); layer_count + 1];
        layers[0].push(Vec::new());
        layers[layer_count].push(Vec::new());
        Ok(MddBuilder {
            labels: Vec::new(),
            label_ids: HashMap::new(),
            arity,
            layers,
        })
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn intern(&mut self, label: &str) -> LabelId {
        if let Some(&id) = self.label_ids.get(label) {
            return id;
        }
        let id = self.labels.len() as LabelId;
        self.labels.push(label.to_owned());
        self.label_ids.insert(label.to_owned(), id);
        id
    }

    pub fn add_node(&mut self, layer: usize) -> u32 {
        let nodes = &mut self.layers[layer];
        nodes.push(Vec::new());
        (nodes.len() - 1) as u32
    }

    pub fn width(&self, layer: usize) -> usize {
        self.layers[layer].len()
    }

    pub fn add_arc(&mut self, layer: usize, source: u32, label: LabelId, cost: PathCost, target: u32) {
        debug_assert_eq!(cost.arity(), self.arity);
        debug_assert!((target as usize) < self.layers[layer + 1].len());
        self.layers[layer][source as usize].push(Arc {
            label,
            cost,
            target,
        });
    }

    /// Outgoing arc with this label, if any.
    pub fn find_arc(&self, layer: usize, source: u32, label: LabelId) -> Option<&Arc> {
        self.layers[layer][source as usize]
            .iter()
            .find(|a| a.label == label)
    }

    pub fn finish(self) -> Result<Mdd> {
        let layer_count = self.layer_count();
        // relabel so that label ids follow surface order
        let mut order: Vec<LabelId> = (0..self.labels.len() as LabelId).collect();
        order.sort_by(|&a, &b| self.labels[a as usize].cmp(&self.labels[b as usize]));
        let mut remap = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as LabelId;
        }
        let labels: Vec<String> = order
            .iter()
            .map(|&old| self.labels[old as usize].clone())
            .collect();
        let mut layers: Vec<Vec<Node>> = Vec::with_capacity(layer_count);
        for (depth, raw) in self.layers.into_iter().take(layer_count).enumerate() {
            let mut nodes = Vec::with_capacity(raw.len());
            for mut arcs in raw {
                for a in arcs.iter_mut() {
                    a.label = remap[a.label as usize];
                }
                arcs.sort_by_key(|a| a.label);
                if let Some(w) = arcs.windows(2).find(|w| w[0].label == w[1].label) {
                    if w[0] != w[1] {
                        return Err(Error::Shape(format!(
                            "non-deterministic node at layer {depth}: label `{}` used twice",
                            labels[w[0].label as usize]
                        )));
                    }
                }
                arcs.dedup();
                nodes.push(Node { arcs });
            }
            layers.push(nodes);
        }
        let mut mdd = Mdd {
            labels,
            arity: self.arity,
            layers,
        };
        mdd.normalize();
        Ok(mdd)
    }
}

impl Mdd {
    /// Diagram with no solutions: a root without arcs.
    pub fn empty(layer_count: usize, arity: usize) -> Result<Self> {
        MddBuilder::new(layer_count, arity)?.finish()
    }

    /// Builds the diagram whose paths are exactly the given tuples.
    pub fn from_tuples<S: AsRef<str>>(
        layer_count: usize,
        arity: usize,
        tuples: &[Vec<(S, PathCost)>],
    ) -> Result<Self> {
        let mut b = MddBuilder::new(layer_count, arity)?;
        let mut children: FxHashMap<(usize, u32, LabelId), u32> = FxHashMap::default();
        for (t, tuple) in tuples.iter().enumerate() {
            if tuple.len() != layer_count {
                return Err(Error::Shape(format!(
                    "tuple {t} has length {}, expected {layer_count}",
                    tuple.len()
                )));
            }
            let mut node = 0u32;
            for (layer, (label, cost)) in tuple.iter().enumerate() {
                if cost.arity() != arity {
                    return Err(Error::Shape(format!(
                        "tuple {t} has a cost of arity {}, expected {arity}",
                        cost.arity()
                    )));
                }
                let id = b.intern(label.as_ref());
                if let Some(&next) = children.get(&(layer, node, id)) {
                    let existing = b.find_arc(layer, node, id).map(|a| &a.cost);
                    if existing != Some(cost) {
                        return Err(Error::Shape(format!(
                            "tuple {t}: conflicting costs for label `{}` at layer {layer}",
                            label.as_ref()
                        )));
                    }
                    node = next;
                    continue;
                }
                let next = if layer + 1 == layer_count {
                    0
                } else {
                    b.add_node(layer + 1)
                };
                b.add_arc(layer, node, id, cost.clone(), next);
                children.insert((layer, node, id), next);
                node = next;
            }
        }
        b.finish()
    }

    /// Cost-free convenience form of [`Mdd::from_tuples`].
    pub fn from_label_tuples<S: AsRef<str>>(layer_count: usize, tuples: &[Vec<S>]) -> Result<Self> {
        let costed: Vec<Vec<(&str, PathCost)>> = tuples
            .iter()
            .map(|t| t.iter().map(|l| (l.as_ref(), PathCost::zeros(0))).collect())
            .collect();
        Self::from_tuples(layer_count, 0, &costed)
    }

    /// Width-one diagram accepting every combination of the per-layer domains.
    pub fn universal<S: AsRef<str>>(arity: usize, domains: &[Vec<(S, PathCost)>]) -> Result<Self> {
        let mut b = MddBuilder::new(domains.len(), arity)?;
        for (layer, domain) in domains.iter().enumerate() {
            let target = if layer + 1 == domains.len() {
                0
            } else {
                b.add_node(layer + 1)
            };
            for (label, cost) in domain {
                let id = b.intern(label.as_ref());
                b.add_arc(layer, 0, id, cost.clone(), target);
            }
        }
        b.finish()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: LabelId) -> &str {
        &self.labels[id as usize]
    }

    pub fn layer(&self, i: usize) -> &[Node] {
        &self.layers[i]
    }

    pub fn is_empty(&self) -> bool {
        self.layers[0][0].arcs.is_empty()
    }

    /// Node count per variable layer, root layer first. The terminal is not
    /// included.
    pub fn layer_widths(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn layer_arc_counts(&self) -> Vec<usize> {
        self.layers
            .iter()
            .map(|l| l.iter().map(|n| n.arcs.len()).sum())
            .collect()
    }

    /// Nodes including the terminal (when reachable).
    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum::<usize>() + usize::from(!self.is_empty())
    }

    pub fn arc_count(&self) -> usize {
        self.layer_arc_counts().iter().sum()
    }

    /// Distinct labels used on the arcs of one layer.
    pub fn layer_labels(&self, layer: usize) -> Vec<&str> {
        let mut ids: Vec<LabelId> = self.layers[layer]
            .iter()
            .flat_map(|n| n.arcs.iter().map(|a| a.label))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter().map(|id| self.label(id)).collect()
    }

    /// Exact number of root-to-terminal paths.
    pub fn count_solutions(&self) -> BigUint {
        if self.is_empty() {
            return BigUint::from(0u32);
        }
        let mut below = vec![BigUint::from(1u32)];
        for layer in self.layers.iter().rev() {
            below = layer
                .iter()
                .map(|n| {
                    n.arcs
                        .iter()
                        .fold(BigUint::from(0u32), |acc, a| acc + &below[a.target as usize])
                })
                .collect();
        }
        below.swap_remove(0)
    }

    /// Depth-first path iterator in lexicographic label order.
    pub fn paths(&self) -> Paths<'_> {
        Paths::new(self)
    }

    /// First `limit` paths (all when `None`), as label surfaces with costs.
    pub fn enumerate_paths(&self, limit: Option<usize>) -> Vec<(Vec<String>, PathCost)> {
        self.paths()
            .take(limit.unwrap_or(usize::MAX))
            .map(|(ids, cost)| (self.surfaces(&ids), cost))
            .collect()
    }

    pub fn surfaces(&self, ids: &[LabelId]) -> Vec<String> {
        ids.iter().map(|&id| self.label(id).to_owned()).collect()
    }

    /// Does the diagram accept this label sequence?
    pub fn contains<S: AsRef<str>>(&self, tuple: &[S]) -> bool {
        if tuple.len() != self.layer_count() || self.is_empty() {
            return false;
        }
        let mut node = 0usize;
        for (layer, label) in tuple.iter().enumerate() {
            let Ok(id) = self.labels.binary_search_by(|l| l.as_str().cmp(label.as_ref())) else {
                return false;
            };
            let arcs = &self.layers[layer][node].arcs;
            match arcs.binary_search_by_key(&(id as LabelId), |a| a.label) {
                Ok(i) => node = arcs[i].target as usize,
                Err(_) => return false,
            }
        }
        true
    }

    /// Paths present in both diagrams. Arc costs are taken from `self`.
    pub fn intersect(&self, other: &Mdd) -> Result<Mdd> {
        if self.layer_count() != other.layer_count() {
            return Err(Error::Shape(format!(
                "cannot intersect MDDs with {} and {} layers",
                self.layer_count(),
                other.layer_count()
            )));
        }
        let layer_count = self.layer_count();
        let to_other: Vec<Option<LabelId>> = self
            .labels
            .iter()
            .map(|l| {
                other
                    .labels
                    .binary_search(l)
                    .ok()
                    .map(|i| i as LabelId)
            })
            .collect();

        let mut b = MddBuilder::new(layer_count, self.arity)?;
        for l in &self.labels {
            b.intern(l);
        }
        let mut current: Vec<(u32, u32)> = vec![(0, 0)];
        for layer in 0..layer_count {
            let last = layer + 1 == layer_count;
            let mut next_ids: FxHashMap<(u32, u32), u32> = FxHashMap::default();
            let mut next: Vec<(u32, u32)> = Vec::new();
            for (src, &(na, nb)) in current.iter().enumerate() {
                let arcs_b = &other.layers[layer][nb as usize].arcs;
                for arc in &self.layers[layer][na as usize].arcs {
                    let Some(lb) = to_other[arc.label as usize] else {
                        continue;
                    };
                    let Ok(j) = arcs_b.binary_search_by_key(&lb, |a| a.label) else {
                        continue;
                    };
                    let pair = (arc.target, arcs_b[j].target);
                    let target = if last {
                        0
                    } else {
                        *next_ids.entry(pair).or_insert_with(|| {
                            next.push(pair);
                            b.add_node(layer + 1)
                        })
                    };
                    b.add_arc(layer, src as u32, arc.label, arc.cost.clone(), target);
                }
            }
            current = next;
        }
        b.finish()
    }

    /// Re-establishes normal form. Constructors already return normalized
    /// diagrams, so this is idempotent on any `Mdd` value.
    pub fn reduce(&self) -> Mdd {
        let mut m = self.clone();
        m.normalize();
        m
    }

    /// Backward trim and signature merging bottom-up, then forward trim and
    /// canonical numbering top-down.
    fn normalize(&mut self) {
        let layer_count = self.layers.len();
        // bottom-up: map[node] = canonical id or DEAD
        let mut below: Vec<u32> = vec![0];
        let mut merged: Vec<Vec<Node>> = vec![Vec::new(); layer_count];
        for layer in (0..layer_count).rev() {
            let mut seen: HashMap<Vec<Arc>, u32> = HashMap::new();
            let mut map = Vec::with_capacity(self.layers[layer].len());
            let mut unique = Vec::new();
            for node in &self.layers[layer] {
                let sig: Vec<Arc> = node
                    .arcs
                    .iter()
                    .filter_map(|a| {
                        let t = below[a.target as usize];
                        (t != DEAD).then(|| Arc {
                            label: a.label,
                            cost: a.cost.clone(),
                            target: t,
                        })
                    })
                    .collect();
                if sig.is_empty() {
                    map.push(DEAD);
                    continue;
                }
                let id = *seen.entry(sig.clone()).or_insert_with(|| {
                    unique.push(Node { arcs: sig });
                    (unique.len() - 1) as u32
                });
                map.push(id);
            }
            merged[layer] = unique;
            below = map;
        }
        let root_alive = below.first().is_some_and(|&r| r != DEAD);

        // top-down renumbering from the root
        let mut layers: Vec<Vec<Node>> = vec![Vec::new(); layer_count];
        if root_alive {
            let mut order: Vec<u32> = vec![below[0]];
            for layer in 0..layer_count {
                let last = layer + 1 == layer_count;
                let mut next_map: FxHashMap<u32, u32> = FxHashMap::default();
                let mut next_order = Vec::new();
                let mut out = Vec::with_capacity(order.len());
                for &old in &order {
                    let mut node = merged[layer][old as usize].clone();
                    if !last {
                        for a in node.arcs.iter_mut() {
                            a.target = *next_map.entry(a.target).or_insert_with(|| {
                                next_order.push(a.target);
                                (next_order.len() - 1) as u32
                            });
                        }
                    }
                    out.push(node);
                }
                layers[layer] = out;
                order = next_order;
            }
        } else {
            layers[0].push(Node::default());
        }

        // compact the label table to used labels, keeping surface order
        let mut used = vec![false; self.labels.len()];
        for a in layers.iter().flatten().flat_map(|n| n.arcs.iter()) {
            used[a.label as usize] = true;
        }
        let mut remap = vec![0 as LabelId; self.labels.len()];
        let mut labels = Vec::new();
        for (old, label) in self.labels.iter().enumerate() {
            if used[old] {
                remap[old] = labels.len() as LabelId;
                labels.push(label.clone());
            }
        }
        for a in layers.iter_mut().flatten().flat_map(|n| n.arcs.iter_mut()) {
            a.label = remap[a.label as usize];
        }
        self.labels = labels;
        self.layers = layers;
    }

    /// Checks the structural invariants: ordered arcs, deterministic nodes,
    /// no dangling nodes and no two equivalent nodes in a layer.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let l = self.layer_count();
        if self.layers[0].len() != 1 {
            return Err("root layer must hold exactly one node".into());
        }
        if self.is_empty() {
            return if self.layers.iter().skip(1).all(Vec::is_empty) {
                Ok(())
            } else {
                Err("empty diagram with non-root nodes".into())
            };
        }
        let mut has_parent: Vec<Vec<bool>> = self.layers.iter().map(|l| vec![false; l.len()]).collect();
        has_parent[0][0] = true;
        for (i, layer) in self.layers.iter().enumerate() {
            let next_width = if i + 1 == l { 1 } else { self.layers[i + 1].len() };
            let mut sigs = std::collections::HashSet::new();
            for (j, node) in layer.iter().enumerate() {
                if node.arcs.is_empty() {
                    return Err(format!("node {j} of layer {i} has no outgoing arcs"));
                }
                if node.arcs.windows(2).any(|w| w[0].label >= w[1].label) {
                    return Err(format!("node {j} of layer {i} is not deterministic/sorted"));
                }
                for a in &node.arcs {
                    if a.target as usize >= next_width {
                        return Err(format!("arc of node {j} layer {i} skips a layer"));
                    }
                    if a.cost.arity() != self.arity {
                        return Err(format!("arc of node {j} layer {i} has wrong cost arity"));
                    }
                    if i + 1 < l {
                        has_parent[i + 1][a.target as usize] = true;
                    }
                }
                if !sigs.insert(&node.arcs) {
                    return Err(format!("layer {i} holds two equivalent nodes"));
                }
            }
        }
        if let Some((i, _)) = has_parent
            .iter()
            .enumerate()
            .find(|(_, p)| p.iter().any(|&x| !x))
        {
            return Err(format!("layer {i} has an unreachable node"));
        }
        Ok(())
    }

    /// Versioned text dump: header, label table, then per-layer arc lists.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_HEADER}");
        let _ = writeln!(
            out,
            "layers {} arity {} labels {}",
            self.layer_count(),
            self.arity,
            self.labels.len()
        );
        for l in &self.labels {
            let _ = writeln!(out, "{l}");
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let arcs: usize = layer.iter().map(|n| n.arcs.len()).sum();
            let _ = writeln!(out, "layer {i} nodes {} arcs {arcs}", layer.len());
            for (src, node) in layer.iter().enumerate() {
                for a in &node.arcs {
                    let _ = write!(out, "{src} {} {}", a.label, a.target);
                    for c in a.cost.components() {
                        let _ = write!(out, " {c}");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn load(text: &str) -> Result<Mdd> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, msg: &str| Error::Parse {
            path: "<mdd dump>".into(),
            line: line + 1,
            msg: msg.to_owned(),
        };
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| err(usize::MAX - 1, &format!("unexpected end of dump, expected {what}")))
        };
        let (i, header) = next("header")?;
        if header != FORMAT_HEADER {
            return Err(err(i, "unsupported dump format"));
        }
        let (i, dims) = next("dimensions")?;
        let nums = keyed_numbers(dims, &["layers", "arity", "labels"]).ok_or_else(|| err(i, "bad dimension line"))?;
        let (layer_count, arity, label_count) = (nums[0], nums[1], nums[2]);
        if layer_count == 0 {
            return Err(err(i, "zero layers"));
        }
        let mut labels = Vec::with_capacity(label_count);
        for _ in 0..label_count {
            labels.push(next("label")?.1.to_owned());
        }
        let mut layers = Vec::with_capacity(layer_count);
        for layer in 0..layer_count {
            let (i, head) = next("layer header")?;
            let nums = keyed_numbers(head, &["layer", "nodes", "arcs"]).ok_or_else(|| err(i, "bad layer header"))?;
            if nums[0] != layer {
                return Err(err(i, "layers out of order"));
            }
            let mut nodes = vec![Node::default(); nums[1]];
            for _ in 0..nums[2] {
                let (i, line) = next("arc")?;
                let vals: Vec<i64> = line
                    .split(' ')
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(i, "arc fields must be integers"))?;
                if vals.len() != 3 + arity || vals[..3].iter().any(|&v| v < 0) {
                    return Err(err(i, "malformed arc"));
                }
                let (src, label) = (vals[0] as usize, vals[1] as usize);
                if src >= nodes.len() || label >= labels.len() {
                    return Err(err(i, "arc references an unknown node or label"));
                }
                nodes[src].arcs.push(Arc {
                    label: label as LabelId,
                    target: vals[2] as u32,
                    cost: PathCost(vals[3..].iter().copied().collect()),
                });
            }
            layers.push(nodes);
        }
        let mdd = Mdd {
            labels,
            arity,
            layers,
        };
        mdd.check_invariants()
            .map_err(|m| Error::Shape(format!("invalid MDD dump: {m}")))?;
        Ok(mdd)
    }
}

fn keyed_numbers(line: &str, keys: &[&str]) -> Option<Vec<usize>> {
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.len() != keys.len() * 2 {
        return None;
    }
    keys.iter()
        .enumerate()
        .map(|(i, k)| {
            (parts[2 * i] == *k)
                .then(|| parts[2 * i + 1].parse().ok())
                .flatten()
        })
        .collect()
}

/// Iterator over the paths of an [`Mdd`], yielding label ids and path cost.
pub struct Paths<'a> {
    mdd: &'a Mdd,
    /// (node, next arc index) per depth
    stack: Vec<(u32, usize)>,
    labels: Vec<LabelId>,
    costs: Vec<PathCost>,
}

impl<'a> Paths<'a> {
    fn new(mdd: &'a Mdd) -> Self {
        let stack = if mdd.is_empty() { Vec::new() } else { vec![(0, 0)] };
        Paths {
            mdd,
            stack,
            labels: Vec::new(),
            costs: vec![PathCost::zeros(mdd.arity)],
        }
    }
}

impl Iterator for Paths<'_> {
    type Item = (Vec<LabelId>, PathCost);

    fn next(&mut self) -> Option<Self::Item> {
        let depth_max = self.mdd.layer_count();
        loop {
            let depth = self.stack.len().checked_sub(1)?;
            let (node, idx) = *self.stack.last()?;
            let arcs = &self.mdd.layers[depth][node as usize].arcs;
            if idx >= arcs.len() {
                self.stack.pop();
                if !self.labels.is_empty() {
                    self.labels.pop();
                    self.costs.pop();
                }
                continue;
            }
            self.stack.last_mut().unwrap().1 += 1;
            let arc = &arcs[idx];
            let mut cost = self.costs.last().unwrap().clone();
            cost += &arc.cost;
            if depth + 1 == depth_max {
                let mut path = self.labels.clone();
                path.push(arc.label);
                return Some((path, cost));
            }
            self.labels.push(arc.label);
            self.costs.push(cost);
            self.stack.push((arc.target, 0));
        }
    }
}
