//! Arc-eager transition system with a joint POS-tagging action.
//!
//! The buffer front must be tagged (`TAG(p)`) before any other transition
//! can apply to it. Tokens left headless on the stack when the buffer runs
//! out are attached to the artificial root by [`finalize`].

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{DepTree, Utterance};
use crate::error::{Error, Result};

/// Label assigned to stack residue at finalization.
pub const ROOT_LABEL: &str = "root";

/// Largest number of remaining tokens the exhaustive search accepts.
pub const MAX_SEARCH_TOKENS: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Tag(u16),
    Shift,
    LeftArc(u16),
    RightArc(u16),
    Reduce,
}

/// POS and label inventories; actions carry indices into them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inventory {
    pub pos: Vec<String>,
    pub labels: Vec<String>,
}

impl Inventory {
    pub fn new(pos: Vec<String>, labels: Vec<String>) -> Result<Self> {
        if pos.is_empty() || labels.is_empty() {
            return Err(Error::InvalidArgument(
                "empty POS or label inventory".into(),
            ));
        }
        if pos.len() > u16::MAX as usize || labels.len() > u16::MAX as usize {
            return Err(Error::InvalidArgument("inventory too large".into()));
        }
        Ok(Inventory { pos, labels })
    }

    /// Inventories observed in `trees`, sorted; the root label is always
    /// included so finalization can use it.
    pub fn from_trees(trees: &[DepTree]) -> Result<Self> {
        let mut set = crate::corpus::TagSet::from_trees(trees);
        if !set.labels.iter().any(|l| l == ROOT_LABEL) {
            set.labels.push(ROOT_LABEL.to_string());
            set.labels.sort();
        }
        Self::new(set.pos, set.labels)
    }

    pub fn n_pos(&self) -> usize {
        self.pos.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn pos_id(&self, tag: &str) -> Option<u16> {
        self.pos.iter().position(|p| p == tag).map(|i| i as u16)
    }

    pub fn label_id(&self, label: &str) -> Option<u16> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u16)
    }

    fn root_label(&self) -> Result<u16> {
        self.label_id(ROOT_LABEL)
            .ok_or_else(|| Error::InvalidArgument(format!("label inventory lacks {ROOT_LABEL:?}")))
    }

    /// Size of the transition head: SHIFT, REDUCE, then LA(l), RA(l).
    pub fn n_transitions(&self) -> usize {
        2 + 2 * self.labels.len()
    }

    pub fn transition_index(&self, a: Action) -> Option<usize> {
        let l = self.labels.len();
        match a {
            Action::Shift => Some(0),
            Action::Reduce => Some(1),
            Action::LeftArc(x) => Some(2 + x as usize),
            Action::RightArc(x) => Some(2 + l + x as usize),
            Action::Tag(_) => None,
        }
    }

    pub fn transition_at(&self, idx: usize) -> Action {
        let l = self.labels.len();
        match idx {
            0 => Action::Shift,
            1 => Action::Reduce,
            i if i < 2 + l => Action::LeftArc((i - 2) as u16),
            i => Action::RightArc((i - 2 - l) as u16),
        }
    }

    /// Position of an action in the full inventory (tags first).
    pub fn action_index(&self, a: Action) -> usize {
        match a {
            Action::Tag(p) => p as usize,
            other => self.pos.len() + self.transition_index(other).expect("non-tag action"),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.pos.len() + self.n_transitions()
    }

    /// Every action, in inventory order.
    pub fn actions(&self) -> Vec<Action> {
        (0..self.pos.len())
            .map(|p| Action::Tag(p as u16))
            .chain((0..self.n_transitions()).map(|i| self.transition_at(i)))
            .collect()
    }

    pub fn action_name(&self, a: Action) -> String {
        match a {
            Action::Tag(p) => format!("TAG:{}", self.pos[p as usize]),
            Action::Shift => "SHIFT".into(),
            Action::Reduce => "REDUCE".into(),
            Action::LeftArc(l) => format!("LA:{}", self.labels[l as usize]),
            Action::RightArc(l) => format!("RA:{}", self.labels[l as usize]),
        }
    }

    pub fn parse_action(&self, name: &str) -> Result<Action> {
        let bad = || Error::InvalidArgument(format!("unknown action {name:?}"));
        match name {
            "SHIFT" => return Ok(Action::Shift),
            "REDUCE" => return Ok(Action::Reduce),
            _ => {}
        }
        let (kind, arg) = name.split_once(':').ok_or_else(bad)?;
        match kind {
            "TAG" => self.pos_id(arg).map(Action::Tag).ok_or_else(bad),
            "LA" => self.label_id(arg).map(Action::LeftArc).ok_or_else(bad),
            "RA" => self.label_id(arg).map(Action::RightArc).ok_or_else(bad),
            _ => Err(bad()),
        }
    }

    /// Serialized action inventory, e.g. `["TAG:NOUN", ..., "SHIFT", "LA:det", ...]`.
    pub fn action_names(&self) -> Vec<String> {
        self.actions()
            .into_iter()
            .map(|a| self.action_name(a))
            .collect()
    }
}

/// Gold heads, labels and POS of one sentence, as inventory indices.
/// Vectors are indexed by token position minus one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gold {
    pub heads: Vec<usize>,
    pub labels: Vec<u16>,
    pub pos: Vec<u16>,
}

impl Gold {
    pub fn from_tree(tree: &DepTree, inv: &Inventory) -> Result<Self> {
        let labels = tree
            .labels
            .iter()
            .map(|l| {
                inv.label_id(l)
                    .ok_or_else(|| Error::InvalidTree(format!("label {l} not in inventory")))
            })
            .collect::<Result<_>>()?;
        let pos = tree
            .pos
            .iter()
            .map(|p| {
                inv.pos_id(p)
                    .ok_or_else(|| Error::InvalidTree(format!("POS {p} not in inventory")))
            })
            .collect::<Result<_>>()?;
        Ok(Gold {
            heads: tree.heads.clone(),
            labels,
            pos,
        })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Gold head of 1-based token `t`.
    #[inline]
    pub fn head(&self, t: usize) -> usize {
        self.heads[t - 1]
    }

    pub fn is_projective(&self) -> bool {
        is_projective(&self.heads)
    }
}

/// True if every arc's span contains only descendants of its head.
pub fn is_projective(heads: &[usize]) -> bool {
    (1..=heads.len()).all(|d| arc_is_projective(heads, d))
}

fn dominates(heads: &[usize], h: usize, mut t: usize) -> bool {
    // follows heads from t; assumes acyclic
    loop {
        if t == h {
            return true;
        }
        if t == 0 {
            return false;
        }
        t = heads[t - 1];
    }
}

fn arc_is_projective(heads: &[usize], d: usize) -> bool {
    let h = heads[d - 1];
    let (lo, hi) = if h < d { (h, d) } else { (d, h) };
    (lo + 1..hi).all(|k| dominates(heads, h, k))
}

/// Lifts non-projective arcs (dependent reattached to its head's head)
/// until the tree is projective. The shortest offending arc is lifted first,
/// leftmost on ties. Labels and POS are kept.
pub fn projectivize(gold: &Gold) -> Gold {
    let mut heads = gold.heads.clone();
    loop {
        let offending = (1..=heads.len())
            .filter(|&d| !arc_is_projective(&heads, d))
            .min_by_key(|&d| (heads[d - 1].abs_diff(d), d));
        match offending {
            Some(d) => {
                let h = heads[d - 1];
                heads[d - 1] = heads[h - 1];
            }
            None => break,
        }
    }
    Gold {
        heads,
        labels: gold.labels.clone(),
        pos: gold.pos.clone(),
    }
}

/// Parser state. The stack holds token indices (0 is the root, always at
/// the bottom); the buffer is the contiguous suffix `front..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    n: usize,
    stack: Vec<usize>,
    front: usize,
    heads: Vec<Option<(usize, u16)>>,
    tags: Vec<Option<u16>>,
    history: Vec<Action>,
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stack={:?} buffer={:?} arcs=[",
            self.stack,
            self.buffer().collect::<Vec<_>>()
        )?;
        for (d, h) in self.heads.iter().enumerate().skip(1) {
            if let Some((h, l)) = h {
                write!(f, " {h}-{l}->{d}")?;
            }
        }
        write!(f, " ] tags={:?}", &self.tags[1..])
    }
}

impl Config {
    pub fn initial(n: usize) -> Self {
        Config {
            n,
            stack: vec![0],
            front: 1,
            heads: vec![None; n + 1],
            tags: vec![None; n + 1],
            history: Vec::new(),
        }
    }

    pub fn n_tokens(&self) -> usize {
        self.n
    }

    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    pub fn top(&self) -> usize {
        *self.stack.last().expect("stack holds the root")
    }

    /// Buffer front, if the buffer is nonempty.
    pub fn front(&self) -> Option<usize> {
        (self.front <= self.n).then_some(self.front)
    }

    pub fn buffer(&self) -> impl Iterator<Item = usize> + '_ {
        self.front..=self.n
    }

    pub fn buffer_len(&self) -> usize {
        self.n + 1 - self.front
    }

    #[inline]
    pub fn in_buffer(&self, t: usize) -> bool {
        t >= self.front && t <= self.n
    }

    pub fn in_stack(&self, t: usize) -> bool {
        self.stack.contains(&t)
    }

    /// Head and label of token `t`, if attached.
    pub fn head_of(&self, t: usize) -> Option<(usize, u16)> {
        self.heads[t]
    }

    pub fn tag_of(&self, t: usize) -> Option<u16> {
        self.tags[t]
    }

    pub fn history(&self) -> &[Action] {
        &self.history
    }

    pub fn is_terminal(&self) -> bool {
        self.front > self.n
    }

    /// Legal actions in inventory order.
    pub fn legal_actions(&self, inv: &Inventory) -> Vec<Action> {
        let mut out = Vec::new();
        let Some(b) = self.front() else {
            if self.heads[self.top()].is_some() {
                out.push(Action::Reduce);
            }
            return out;
        };
        if self.tags[b].is_none() {
            out.extend((0..inv.n_pos()).map(|p| Action::Tag(p as u16)));
            return out;
        }
        let s = self.top();
        out.push(Action::Shift);
        if self.heads[s].is_some() {
            out.push(Action::Reduce);
        }
        if s != 0 && self.heads[s].is_none() {
            out.extend((0..inv.n_labels()).map(|l| Action::LeftArc(l as u16)));
        }
        out.extend((0..inv.n_labels()).map(|l| Action::RightArc(l as u16)));
        out
    }

    pub fn is_legal(&self, a: Action, inv: &Inventory) -> bool {
        let in_range = match a {
            Action::Tag(p) => (p as usize) < inv.n_pos(),
            Action::LeftArc(l) | Action::RightArc(l) => (l as usize) < inv.n_labels(),
            _ => true,
        };
        in_range && self.is_legal_kind(a)
    }

    fn is_legal_kind(&self, a: Action) -> bool {
        let s = self.top();
        match self.front() {
            None => matches!(a, Action::Reduce) && self.heads[s].is_some(),
            Some(b) if self.tags[b].is_none() => matches!(a, Action::Tag(_)),
            Some(_) => match a {
                Action::Tag(_) => false,
                Action::Shift | Action::RightArc(_) => true,
                Action::Reduce => self.heads[s].is_some(),
                Action::LeftArc(_) => s != 0 && self.heads[s].is_none(),
            },
        }
    }

    /// Applies a legal action, returning the successor.
    pub fn apply(&self, a: Action, inv: &Inventory) -> Result<Config> {
        let mut c = self.clone();
        c.apply_in_place(a, inv)?;
        Ok(c)
    }

    pub fn apply_in_place(&mut self, a: Action, inv: &Inventory) -> Result<()> {
        if !self.is_legal(a, inv) {
            return Err(Error::IllegalAction {
                action: inv.action_name_checked(a),
            });
        }
        match a {
            Action::Tag(p) => self.tags[self.front] = Some(p),
            Action::Shift => {
                self.stack.push(self.front);
                self.front += 1;
            }
            Action::LeftArc(l) => {
                let s = self.stack.pop().expect("nonempty stack");
                self.heads[s] = Some((self.front, l));
            }
            Action::RightArc(l) => {
                self.heads[self.front] = Some((self.top(), l));
                self.stack.push(self.front);
                self.front += 1;
            }
            Action::Reduce => {
                self.stack.pop();
            }
        }
        self.history.push(a);
        Ok(())
    }

    /// Replays `actions` from the initial configuration of an `n`-token
    /// sentence.
    pub fn replay(n: usize, actions: &[Action], inv: &Inventory) -> Result<Config> {
        let mut c = Config::initial(n);
        for &a in actions {
            c.apply_in_place(a, inv)?;
        }
        Ok(c)
    }

    /// Checks the structural invariants of a configuration.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidData(m));
        if self.stack.first() != Some(&0) {
            return bad("root not at stack bottom".into());
        }
        if self.stack.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("stack not increasing: {:?}", self.stack));
        }
        if self.stack.iter().any(|&t| self.in_buffer(t)) {
            return bad("stack and buffer overlap".into());
        }
        if self.front > self.n + 1 {
            return bad("front past end".into());
        }
        for t in 1..=self.n {
            let left_buffer = t < self.front;
            if left_buffer && self.tags[t].is_none() {
                return bad(format!("token {t} left the buffer untagged"));
            }
            if t > self.front && self.tags[t].is_some() {
                return bad(format!("token {t} tagged before reaching the front"));
            }
            if let Some((h, _)) = self.heads[t] {
                if !left_buffer || h > self.n || h == t {
                    return bad(format!("bad arc {h}->{t}"));
                }
            }
            let popped = left_buffer && !self.in_stack(t);
            if popped && self.heads[t].is_none() {
                return bad(format!("token {t} popped without a head"));
            }
        }
        Ok(())
    }
}

impl Inventory {
    fn action_name_checked(&self, a: Action) -> String {
        match a {
            Action::Tag(p) if (p as usize) >= self.pos.len() => format!("TAG:#{p}"),
            Action::LeftArc(l) if (l as usize) >= self.labels.len() => format!("LA:#{l}"),
            Action::RightArc(l) if (l as usize) >= self.labels.len() => format!("RA:#{l}"),
            _ => self.action_name(a),
        }
    }
}

/// Predicted heads, label ids and POS ids after finalization (indexed by
/// position minus one).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Analysis {
    pub heads: Vec<usize>,
    pub labels: Vec<u16>,
    pub pos: Vec<u16>,
}

impl Analysis {
    pub fn into_tree(self, utterance: Utterance, inv: &Inventory) -> Result<DepTree> {
        DepTree::new(
            utterance,
            self.heads,
            self.labels
                .iter()
                .map(|&l| inv.labels[l as usize].clone())
                .collect(),
            self.pos
                .iter()
                .map(|&p| inv.pos[p as usize].clone())
                .collect(),
        )
    }

    /// Unlabeled attachment errors plus tagging errors against `gold`.
    pub fn loss(&self, gold: &Gold) -> usize {
        let arcs = self
            .heads
            .iter()
            .zip(&gold.heads)
            .filter(|(a, b)| a != b)
            .count();
        let tags = self
            .pos
            .iter()
            .zip(&gold.pos)
            .filter(|(a, b)| a != b)
            .count();
        arcs + tags
    }
}

/// Attaches headless tokens to the root with the root label.
pub fn finalize(c: &Config, inv: &Inventory) -> Result<Analysis> {
    if !c.is_terminal() {
        return Err(Error::InvalidData(
            "finalize before the buffer is empty".into(),
        ));
    }
    let root = inv.root_label()?;
    finalize_with(c, root)
}

fn finalize_with(c: &Config, root_label: u16) -> Result<Analysis> {
    let mut heads = Vec::with_capacity(c.n);
    let mut labels = Vec::with_capacity(c.n);
    let mut pos = Vec::with_capacity(c.n);
    for t in 1..=c.n {
        let (h, l) = c.heads[t].unwrap_or((0, root_label));
        heads.push(h);
        labels.push(l);
        pos.push(
            c.tags[t]
                .ok_or_else(|| Error::InvalidData(format!("token {t} untagged at terminal")))?,
        );
    }
    Ok(Analysis { heads, labels, pos })
}

/// Static oracle for a projective gold tree on the gold path.
pub fn static_oracle(c: &Config, g: &Gold) -> Action {
    let Some(b) = c.front() else {
        return Action::Reduce;
    };
    if c.tags[b].is_none() {
        return Action::Tag(g.pos[b - 1]);
    }
    let s = c.top();
    if s != 0 && g.head(s) == b {
        return Action::LeftArc(g.labels[s - 1]);
    }
    if g.head(b) == s {
        return Action::RightArc(g.labels[b - 1]);
    }
    if c.heads[s].is_some() && !c.buffer().any(|k| g.head(k) == s) {
        return Action::Reduce;
    }
    Action::Shift
}

/// Number of gold arcs (plus tag errors) that `a` makes unreachable from
/// `c`. Labels never add cost.
///
/// A headless stack token whose gold head is the root stays reachable: it
/// is attached to the root at finalization unless a LEFT_ARC takes it.
pub fn dynamic_cost(c: &Config, a: Action, g: &Gold, inv: &Inventory) -> Result<usize> {
    if !c.is_legal(a, inv) {
        return Err(Error::IllegalAction {
            action: inv.action_name_checked(a),
        });
    }
    let s = c.top();
    let Some(b) = c.front() else {
        return Ok(0);
    };
    let headless_stack_deps = |of: usize| {
        c.stack
            .iter()
            .filter(|&&k| k != 0 && c.heads[k].is_none() && g.head(k) == of)
            .count()
    };
    let buffer_deps = |of: usize| c.buffer().filter(|&k| g.head(k) == of).count();
    let cost = match a {
        Action::Tag(p) => usize::from(p != g.pos[b - 1]),
        Action::Shift => {
            let gh = g.head(b);
            usize::from(gh != 0 && c.in_stack(gh)) + headless_stack_deps(b)
        }
        Action::Reduce => buffer_deps(s),
        Action::LeftArc(_) => {
            let gh = g.head(s);
            let loses_head = gh != b && (c.in_buffer(gh) || gh == 0);
            buffer_deps(s) + usize::from(loses_head)
        }
        Action::RightArc(_) => {
            let gh = g.head(b);
            usize::from(c.in_stack(gh) && gh != s)
                + usize::from(c.in_buffer(gh))
                + headless_stack_deps(b)
        }
    };
    Ok(cost)
}

/// Legal actions with zero dynamic cost; labelled arcs use the gold label
/// when the arc is gold, every label otherwise.
pub fn zero_cost_actions(c: &Config, g: &Gold, inv: &Inventory) -> Vec<Action> {
    c.legal_actions(inv)
        .into_iter()
        .filter(|&a| {
            let label_ok = match a {
                Action::LeftArc(l) => {
                    let s = c.top();
                    let b = c.front().expect("arc needs a front");
                    g.head(s) != b || l == g.labels[s - 1]
                }
                Action::RightArc(l) => {
                    let b = c.front().expect("arc needs a front");
                    g.head(b) != c.top() || l == g.labels[b - 1]
                }
                _ => true,
            };
            label_ok && dynamic_cost(c, a, g, inv).is_ok_and(|cost| cost == 0)
        })
        .collect()
}

/// Compact key for memoizing configurations in exhaustive search.
#[derive(Clone, PartialEq, Eq, Hash)]
struct SearchKey {
    stack: Vec<usize>,
    front: usize,
    heads: Vec<Option<(usize, u16)>>,
    tags: Vec<Option<u16>>,
}

impl From<&Config> for SearchKey {
    fn from(c: &Config) -> Self {
        SearchKey {
            stack: c.stack.clone(),
            front: c.front,
            heads: c.heads.clone(),
            tags: c.tags.clone(),
        }
    }
}

/// Exhaustive minimum-loss search over every legal completion, memoized on
/// the configuration (history excluded). Independent of [`dynamic_cost`].
pub struct MinLossSearch<'a> {
    gold: &'a Gold,
    inv: &'a Inventory,
    root_label: u16,
    memo: HashMap<SearchKey, usize>,
}

impl<'a> MinLossSearch<'a> {
    pub fn new(gold: &'a Gold, inv: &'a Inventory) -> Result<Self> {
        Ok(MinLossSearch {
            gold,
            inv,
            root_label: inv.root_label()?,
            memo: HashMap::new(),
        })
    }

    pub fn min_loss(&mut self, c: &Config) -> Result<usize> {
        if c.buffer_len() > MAX_SEARCH_TOKENS {
            return Err(Error::SearchBound {
                remaining: c.buffer_len(),
                max: MAX_SEARCH_TOKENS,
            });
        }
        if c.n != self.gold.len() {
            return Err(Error::Dimension {
                expected: self.gold.len(),
                got: c.n,
            });
        }
        Ok(self.search(c))
    }

    fn search(&mut self, c: &Config) -> usize {
        let key = SearchKey::from(c);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let value = if c.is_terminal() {
            finalize_with(c, self.root_label)
                .expect("legal derivations tag every token")
                .loss(self.gold)
        } else {
            let mut best = usize::MAX;
            let mut next = c.clone();
            for a in c.legal_actions(self.inv) {
                next.clone_from(c);
                next.apply_in_place(a, self.inv).expect("legal action");
                best = best.min(self.search(&next));
            }
            best
        };
        self.memo.insert(key, value);
        value
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }
}

/// Minimum achievable loss from `c` by exhaustive search.
pub fn brute_force_minloss(c: &Config, g: &Gold, inv: &Inventory) -> Result<usize> {
    MinLossSearch::new(g, inv)?.min_loss(c)
}

/// Every configuration reachable from the initial state of an `n`-token
/// sentence, with successor edges. Histories are dropped; nodes are numbered
/// in derivation-length order so successors always come later.
pub struct ConfigGraph {
    pub configs: Vec<Config>,
    n: usize,
    // compressed adjacency: edges of node i are edge_start[i]..edge_start[i + 1]
    edge_start: Vec<u32>,
    edge_action: Vec<Action>,
    edge_target: Vec<u32>,
    terminal: Vec<bool>,
    // finalized heads and tags, n entries per node (zero for non-terminals)
    final_heads: Vec<u8>,
    final_tags: Vec<u16>,
}

impl ConfigGraph {
    pub fn build(n: usize, inv: &Inventory) -> Self {
        assert!(
            n < u8::MAX as usize,
            "graph enumeration is for short sentences"
        );
        let mut index: HashMap<SearchKey, u32> = HashMap::new();
        let mut configs = vec![Config::initial(n)];
        index.insert(SearchKey::from(&configs[0]), 0);
        let mut edge_start = vec![0u32];
        let mut edge_action = Vec::new();
        let mut edge_target = Vec::new();
        let mut i = 0;
        // breadth-first: every action adds one derivation step, so BFS order
        // is derivation-length order
        while i < configs.len() {
            let c = configs[i].clone();
            for a in c.legal_actions(inv) {
                let mut next = c.apply(a, inv).expect("legal action");
                next.history.clear();
                let id = *index.entry(SearchKey::from(&next)).or_insert_with(|| {
                    configs.push(next);
                    (configs.len() - 1) as u32
                });
                edge_action.push(a);
                edge_target.push(id);
            }
            edge_start.push(edge_action.len() as u32);
            i += 1;
        }
        let mut terminal = Vec::with_capacity(configs.len());
        let mut final_heads = vec![0u8; configs.len() * n];
        let mut final_tags = vec![0u16; configs.len() * n];
        for (k, c) in configs.iter().enumerate() {
            terminal.push(c.is_terminal());
            if c.is_terminal() {
                let a = finalize_with(c, 0).expect("terminal nodes are fully tagged");
                for t in 0..n {
                    final_heads[k * n + t] = a.heads[t] as u8;
                    final_tags[k * n + t] = a.pos[t];
                }
            }
        }
        ConfigGraph {
            configs,
            n,
            edge_start,
            edge_action,
            edge_target,
            terminal,
            final_heads,
            final_tags,
        }
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_action.len()
    }

    /// `(action, successor)` pairs of node `i`, one per legal action.
    pub fn edges(&self, i: usize) -> impl Iterator<Item = (Action, usize)> + '_ {
        let range = self.edge_start[i] as usize..self.edge_start[i + 1] as usize;
        range.map(|e| (self.edge_action[e], self.edge_target[e] as usize))
    }

    /// Exhaustive minimum loss of every node against `gold`.
    pub fn min_losses(&self, gold: &Gold) -> Vec<usize> {
        let n = self.n;
        assert_eq!(gold.len(), n, "gold length");
        let mut best = vec![usize::MAX; self.configs.len()];
        for i in (0..self.configs.len()).rev() {
            let succ = self.edge_start[i] as usize..self.edge_start[i + 1] as usize;
            let mut v = succ
                .map(|e| best[self.edge_target[e] as usize])
                .min()
                .unwrap_or(usize::MAX);
            if self.terminal[i] {
                let heads = &self.final_heads[i * n..(i + 1) * n];
                let tags = &self.final_tags[i * n..(i + 1) * n];
                let mut here = 0;
                for t in 0..n {
                    here += usize::from(heads[t] as usize != gold.heads[t]);
                    here += usize::from(tags[t] != gold.pos[t]);
                }
                v = v.min(here);
            }
            assert!(
                v != usize::MAX,
                "non-terminal configuration without legal actions"
            );
            best[i] = v;
        }
        best
    }
}

/// Runs the static oracle to completion.
pub fn oracle_derivation(g: &Gold, inv: &Inventory) -> Result<Config> {
    let mut c = Config::initial(g.len());
    while !c.is_terminal() {
        c.apply_in_place(static_oracle(&c, g), inv)?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv() -> Inventory {
        Inventory::new(
            vec!["DET".into(), "NOUN".into(), "VERB".into()],
            vec!["det".into(), "root".into(), "subj".into()],
        )
        .unwrap()
    }

    #[test]
    fn initial_config_only_tags() {
        let c = Config::initial(3);
        let legal = c.legal_actions(&inv());
        assert_eq!(legal, vec![Action::Tag(0), Action::Tag(1), Action::Tag(2)]);
    }

    #[test]
    fn root_on_stack_tagged_front() {
        let inv = inv();
        let c = Config::initial(2).apply(Action::Tag(0), &inv).unwrap();
        let legal = c.legal_actions(&inv);
        let mut expected = vec![Action::Shift];
        expected.extend((0..3).map(Action::RightArc));
        assert_eq!(legal, expected);
    }

    #[test]
    fn le_chat_dort_derivation() {
        // le <-det- chat <-subj- dort <-root- 0
        let inv = inv();
        let actions = [
            Action::Tag(0),
            Action::Shift,
            Action::Tag(1),
            Action::LeftArc(0),
            Action::Shift,
            Action::Tag(2),
            Action::LeftArc(2),
            Action::RightArc(1),
        ];
        let c = Config::replay(3, &actions, &inv).unwrap();
        assert!(c.is_terminal());
        let a = finalize(&c, &inv).unwrap();
        assert_eq!(a.heads, vec![2, 3, 0]);
        assert_eq!(a.labels, vec![0, 2, 1]);
        assert_eq!(a.pos, vec![0, 1, 2]);
        let gold = Gold {
            heads: vec![2, 3, 0],
            labels: vec![0, 2, 1],
            pos: vec![0, 1, 2],
        };
        let oracle = oracle_derivation(&gold, &inv).unwrap();
        assert_eq!(oracle.history(), &actions);
    }

    #[test]
    fn shift_moves_front() {
        let inv = inv();
        let c = Config::initial(2).apply(Action::Tag(1), &inv).unwrap();
        let d = c.apply(Action::Shift, &inv).unwrap();
        assert_eq!(d.buffer_len(), c.buffer_len() - 1);
        assert_eq!(d.stack().len(), c.stack().len() + 1);
    }

    #[test]
    fn illegal_action_is_error() {
        let inv = inv();
        let c = Config::initial(2);
        assert!(matches!(
            c.apply(Action::Shift, &inv),
            Err(Error::IllegalAction { .. })
        ));
        assert!(c.apply(Action::Tag(9), &inv).is_err());
    }

    #[test]
    fn finalize_attaches_residue_to_root() {
        let inv = inv();
        let acts = [Action::Tag(0), Action::Shift, Action::Tag(1), Action::Shift];
        let c = Config::replay(2, &acts, &inv).unwrap();
        let a = finalize(&c, &inv).unwrap();
        assert_eq!(a.heads, vec![0, 0]);
        assert_eq!(a.labels, vec![1, 1]);
        assert!(finalize(&Config::initial(1), &inv).is_err());
    }

    #[test]
    fn projectivize_crossing() {
        // 3 -> 1 crosses the span of 2, whose head is 0
        let g = Gold {
            heads: vec![3, 0, 2, 2],
            labels: vec![0; 4],
            pos: vec![0; 4],
        };
        assert!(!g.is_projective());
        let p = projectivize(&g);
        assert!(p.is_projective());
        assert_eq!(p.heads, vec![2, 0, 2, 2]);
        let proj = Gold {
            heads: vec![2, 0, 2],
            labels: vec![0; 3],
            pos: vec![0; 3],
        };
        assert_eq!(projectivize(&proj), proj);
    }

    #[test]
    fn left_arc_gold_is_chosen() {
        let inv = inv();
        let g = Gold {
            heads: vec![2, 0],
            labels: vec![0, 1],
            pos: vec![0, 1],
        };
        let c = Config::replay(2, &[Action::Tag(0), Action::Shift, Action::Tag(1)], &inv).unwrap();
        assert_eq!(static_oracle(&c, &g), Action::LeftArc(0));
    }

    #[test]
    fn root_with_pending_dependents_shifts() {
        let inv = inv();
        let g = Gold {
            heads: vec![2, 0],
            labels: vec![0, 1],
            pos: vec![0, 1],
        };
        let c = Config::initial(2).apply(Action::Tag(0), &inv).unwrap();
        assert_eq!(static_oracle(&c, &g), Action::Shift);
    }

    #[test]
    fn shift_past_gold_head_costs() {
        // gold head of 3 is 1, which sits below 2 on the stack
        let inv = inv();
        let g = Gold {
            heads: vec![0, 1, 1],
            labels: vec![1, 0, 0],
            pos: vec![0, 0, 0],
        };
        let acts = [
            Action::Tag(0),
            Action::Shift,
            Action::Tag(0),
            Action::Shift,
            Action::Tag(0),
        ];
        let c = Config::replay(3, &acts, &inv).unwrap();
        assert!(dynamic_cost(&c, Action::Shift, &g, &inv).unwrap() >= 1);
    }

    #[test]
    fn wrong_left_arc_has_positive_minloss() {
        let inv = inv();
        let g = Gold {
            heads: vec![2, 0, 2],
            labels: vec![0, 1, 2],
            pos: vec![0, 1, 2],
        };
        assert_eq!(
            brute_force_minloss(&Config::initial(3), &g, &inv).unwrap(),
            0
        );
        // 2 <- 3 is wrong and takes 2 away from its gold dependent 3
        let acts = [
            Action::Tag(0),
            Action::Shift,
            Action::Tag(1),
            Action::LeftArc(0),
            Action::Shift,
            Action::Tag(2),
            Action::LeftArc(0),
        ];
        let c = Config::replay(3, &acts, &inv).unwrap();
        assert!(brute_force_minloss(&c, &g, &inv).unwrap() >= 1);
    }

    #[test]
    fn search_bound() {
        let inv = inv();
        let g = Gold {
            heads: vec![0; 8],
            labels: vec![1; 8],
            pos: vec![0; 8],
        };
        assert!(matches!(
            brute_force_minloss(&Config::initial(8), &g, &inv),
            Err(Error::SearchBound { .. })
        ));
    }

    #[test]
    fn action_names_round_trip() {
        let inv = inv();
        for a in inv.actions() {
            assert_eq!(inv.parse_action(&inv.action_name(a)).unwrap(), a);
            assert_eq!(inv.actions()[inv.action_index(a)], a);
        }
        assert!(inv.parse_action("LA:nope").is_err());
    }
}
