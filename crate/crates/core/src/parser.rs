//! Joint tagger-parser: feature extraction over arc-eager configurations,
//! dynamic-oracle training with exploration, greedy decoding and
//! dev-selected checkpoints.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DepTree, Utterance};
use crate::embed::{EmbeddingProvider, ExternalVectors, ProviderState, Providers, TokenInput};
use crate::error::{Error, Result};
use crate::metrics::{attachment_scores, Scores};
use crate::neural::{Adam, AdamConfig, HeadSpec, Mlp, MlpSpec, Mode, Target, Tensor, DESK_HIDDEN};
use crate::normalize::strip_synthetic;
use crate::transition::{
    finalize, projectivize, zero_cost_actions, Action, Analysis, Config, Gold, Inventory,
};

pub const TAG_HEAD: usize = 0;
pub const TRANSITION_HEAD: usize = 1;
pub const PARSER_FORMAT: &str = "oralkit-parser";
pub const PARSER_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub stack_slots: usize,
    /// Inclusive offsets around the buffer front.
    pub window: (isize, isize),
    pub history: usize,
    pub word_dim: usize,
    pub tag_dim: usize,
    pub action_dim: usize,
}

impl FeatureSpec {
    pub fn new(word_dim: usize) -> Self {
        FeatureSpec {
            stack_slots: 3,
            window: (-3, 2),
            history: 6,
            word_dim,
            tag_dim: 16,
            action_dim: 16,
        }
    }

    pub fn window_len(&self) -> usize {
        (self.window.1 - self.window.0 + 1) as usize
    }

    pub fn word_slots(&self) -> usize {
        self.stack_slots + self.window_len()
    }

    pub fn input_dim(&self) -> usize {
        self.word_slots() * (self.word_dim + self.tag_dim) + self.history * self.action_dim
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRegime {
    pub epochs: usize,
    /// First (1-based) epoch in which the model's own predictions are followed.
    pub explore_start_epoch: usize,
    pub explore_prob: f64,
    pub batch: usize,
    pub lr: f64,
    pub hidden: Vec<usize>,
    pub input_dropout: f64,
    pub hidden_dropout: f64,
    pub seed: u64,
}

impl Default for TrainRegime {
    fn default() -> Self {
        TrainRegime {
            epochs: 40,
            explore_start_epoch: 2,
            explore_prob: 0.9,
            batch: 32,
            lr: 1e-3,
            hidden: DESK_HIDDEN.to_vec(),
            input_dropout: 0.5,
            hidden_dropout: 0.4,
            seed: 1,
        }
    }
}

impl TrainRegime {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || !(0.0..=1.0).contains(&self.explore_prob) || self.batch == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid training regime {self:?}"
            )));
        }
        Ok(())
    }
}

/// Where a word slot's vector comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordSlot {
    Pad,
    Root,
    /// 0-based position in the utterance.
    Token(usize),
}

/// Row indices selected for one configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotIds {
    pub words: Vec<WordSlot>,
    pub tags: Vec<usize>,
    pub actions: Vec<usize>,
}

/// Learned feature embeddings, in order: special word rows (pad, root),
/// tag rows (tags, pad, root), action rows (actions, pad).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTables {
    pub tensors: Vec<Tensor>,
}

impl FeatureTables {
    pub fn new(spec: &FeatureSpec, inv: &Inventory, rng: &mut ChaCha8Rng) -> Self {
        let bound = |d: usize| 1.0 / (d as f64).sqrt();
        FeatureTables {
            tensors: vec![
                Tensor::uniform("special", 2, spec.word_dim, bound(spec.word_dim), rng),
                Tensor::uniform(
                    "tags",
                    inv.n_pos() + 2,
                    spec.tag_dim,
                    bound(spec.tag_dim),
                    rng,
                ),
                Tensor::uniform(
                    "actions",
                    inv.n_actions() + 1,
                    spec.action_dim,
                    bound(spec.action_dim),
                    rng,
                ),
            ],
        }
    }

    pub fn special(&self) -> &Tensor {
        &self.tensors[0]
    }

    pub fn tags(&self) -> &Tensor {
        &self.tensors[1]
    }

    pub fn actions(&self) -> &Tensor {
        &self.tensors[2]
    }
}

/// Rows feeding each slot: s0..s2, then w-3..w+2, then a-6..a-1.
pub fn slot_ids(c: &Config, spec: &FeatureSpec, inv: &Inventory) -> SlotIds {
    let tag_pad = inv.n_pos();
    let tag_root = inv.n_pos() + 1;
    let mut words = Vec::with_capacity(spec.word_slots());
    let mut tags = Vec::with_capacity(spec.word_slots());
    let token = |t: usize| -> (WordSlot, usize) {
        (
            WordSlot::Token(t - 1),
            c.tag_of(t).map_or(tag_pad, usize::from),
        )
    };
    let stack = c.stack();
    for k in 0..spec.stack_slots {
        let (w, t) = match stack.len().checked_sub(k + 1).map(|i| stack[i]) {
            None => (WordSlot::Pad, tag_pad),
            Some(0) => (WordSlot::Root, tag_root),
            Some(t) => token(t),
        };
        words.push(w);
        tags.push(t);
    }
    let n = c.n_tokens() as isize;
    let b = c.front().unwrap_or(c.n_tokens() + 1) as isize;
    for off in spec.window.0..=spec.window.1 {
        let p = b + off;
        let (w, t) = if (1..=n).contains(&p) {
            token(p as usize)
        } else {
            (WordSlot::Pad, tag_pad)
        };
        words.push(w);
        tags.push(t);
    }
    let hist = c.history();
    let action_pad = inv.n_actions();
    let actions = (0..spec.history)
        .map(|k| {
            (hist.len() + k)
                .checked_sub(spec.history)
                .map_or(action_pad, |i| inv.action_index(hist[i]))
        })
        .collect();
    SlotIds {
        words,
        tags,
        actions,
    }
}

/// Concatenates the slot embeddings into `x`.
pub fn extract_features(
    ids: &SlotIds,
    input: &TokenInput,
    words: &Tensor,
    tables: &FeatureTables,
    spec: &FeatureSpec,
    x: &mut Vec<f64>,
) -> Result<()> {
    x.clear();
    for (w, &t) in ids.words.iter().zip(&ids.tags) {
        let v = match *w {
            WordSlot::Pad => tables.special().row(0),
            WordSlot::Root => tables.special().row(1),
            WordSlot::Token(i) => input.vector(i, words),
        };
        if v.len() != spec.word_dim {
            return Err(Error::Dimension {
                expected: spec.word_dim,
                got: v.len(),
            });
        }
        x.extend_from_slice(v);
        x.extend_from_slice(tables.tags().row(t));
    }
    for &a in &ids.actions {
        x.extend_from_slice(tables.actions().row(a));
    }
    if x.len() != spec.input_dim() {
        return Err(Error::Dimension {
            expected: spec.input_dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Active head and the legality mask over its classes.
fn head_and_mask(c: &Config, legal: &[Action], inv: &Inventory) -> (usize, Vec<bool>) {
    let tagging = c.front().is_some_and(|b| c.tag_of(b).is_none());
    if tagging {
        (TAG_HEAD, vec![true; inv.n_pos()])
    } else {
        let mut mask = vec![false; inv.n_transitions()];
        for &a in legal {
            mask[class_of(a, inv)] = true;
        }
        (TRANSITION_HEAD, mask)
    }
}

fn class_of(a: Action, inv: &Inventory) -> usize {
    match a {
        Action::Tag(p) => p as usize,
        other => inv.transition_index(other).expect("transition"),
    }
}

/// Highest-scoring action among `candidates` (first on ties).
fn best_of(logits: &[f64], candidates: &[Action], inv: &Inventory) -> Action {
    let mut best = candidates[0];
    for &a in &candidates[1..] {
        if logits[class_of(a, inv)] > logits[class_of(best, inv)] {
            best = a;
        }
    }
    best
}

/// Greedy transition loop. `choose` picks among the legal actions whenever
/// there is more than one.
pub fn greedy_parse(
    n: usize,
    inv: &Inventory,
    mut choose: impl FnMut(&Config, &[Action]) -> Result<Action>,
) -> Result<(Analysis, Vec<Action>)> {
    let mut c = Config::initial(n);
    let limit = 3 * n + 1;
    loop {
        let legal = c.legal_actions(inv);
        if legal.is_empty() {
            break;
        }
        let a = if legal.len() == 1 {
            legal[0]
        } else {
            choose(&c, &legal)?
        };
        c.apply_in_place(a, inv)?;
        if c.history().len() > limit {
            return Err(Error::InvalidData(format!(
                "no termination after {limit} actions"
            )));
        }
    }
    assert!(
        c.is_terminal(),
        "greedy parse stopped before the buffer was empty"
    );
    Ok((finalize(&c, inv)?, c.history().to_vec()))
}

struct Weights<'a> {
    mlp: &'a Mlp,
    tables: &'a FeatureTables,
    words: &'a Tensor,
    spec: &'a FeatureSpec,
    inv: &'a Inventory,
}

impl Weights<'_> {
    fn parse(&self, input: &TokenInput) -> Result<Analysis> {
        let mut x = Vec::with_capacity(self.spec.input_dim());
        let (analysis, _) = greedy_parse(input.len(), self.inv, |c, legal| {
            let ids = slot_ids(c, self.spec, self.inv);
            extract_features(&ids, input, self.words, self.tables, self.spec, &mut x)?;
            let (head, _) = head_and_mask(c, legal, self.inv);
            let pass = self.mlp.forward(&x, Mode::Eval)?;
            Ok(best_of(&pass.logits[head], legal, self.inv))
        })?;
        Ok(analysis)
    }

    /// Parses the non-synthetic tokens of each utterance.
    fn decode(&self, utts: &[Utterance], inputs: &[TokenInput]) -> Result<Vec<DepTree>> {
        let stripped = strip_synthetic(utts);
        utts.par_iter()
            .zip(inputs)
            .zip(stripped)
            .map(|((u, input), plain)| {
                let keep: Vec<usize> = (0..u.len()).filter(|&i| !u.tokens[i].synthetic).collect();
                if keep.is_empty() {
                    return Err(Error::InvalidData(format!(
                        "utterance {} has no tokens to parse",
                        u.recording_id
                    )));
                }
                let input = if keep.len() == u.len() {
                    input.clone()
                } else {
                    input.select(&keep)
                };
                self.parse(&input)?.into_tree(plain, self.inv)
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub states: usize,
    pub explored: usize,
    pub dev: Scores,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParserModel {
    pub format: String,
    pub version: u32,
    pub inventory: Inventory,
    pub action_names: Vec<String>,
    pub features: FeatureSpec,
    pub provider: ProviderState,
    pub tables: FeatureTables,
    pub mlp: Mlp,
    pub best_epoch: usize,
}

/// Index of the maximum dev LAS; earliest epoch on ties.
pub fn select_checkpoint(dev_las: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in dev_las.iter().enumerate() {
        if best.is_none_or(|b| v > dev_las[b]) {
            best = Some(i);
        }
    }
    best
}

/// Trains on `train` with a dynamic oracle; the returned model holds the
/// parameters of the epoch with the best dev LAS.
pub fn train_parser<'p>(
    train: &[DepTree],
    dev: &[DepTree],
    inv: &Inventory,
    providers: impl Into<Providers<'p>>,
    regime: &TrainRegime,
    spec: &FeatureSpec,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<(ParserModel, Vec<EpochLog>)> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    regime.validate()?;
    let providers = providers.into();
    providers.check()?;
    let provider = providers.train;
    if spec.word_dim != provider.dim() {
        return Err(Error::Dimension {
            expected: spec.word_dim,
            got: provider.dim(),
        });
    }
    let golds: Vec<Gold> = train
        .iter()
        .map(|t| Gold::from_tree(t, inv).map(|g| projectivize(&g)))
        .collect::<Result<_>>()?;
    for t in dev {
        Gold::from_tree(t, inv)?;
    }
    let train_utts: Vec<Utterance> = train.iter().map(|t| t.utterance.clone()).collect();
    let dev_utts: Vec<Utterance> = dev.iter().map(|t| t.utterance.clone()).collect();
    let train_in = provider.prepare_corpus(&train_utts)?;
    let dev_in = providers.dev.prepare_corpus(&dev_utts)?;

    let mlp_spec = MlpSpec::new(
        spec.input_dim(),
        vec![
            HeadSpec::new("tag", inv.n_pos()),
            HeadSpec::new("transition", inv.n_transitions()),
        ],
    )
    .with_hidden(&regime.hidden)
    .with_dropout(regime.input_dropout, regime.hidden_dropout);
    let mut mlp = Mlp::new(mlp_spec, regime.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(regime.seed ^ 0x9a75_e4d1);
    let mut tables = FeatureTables::new(spec, inv, &mut rng);
    let trainable = provider.table().is_some();
    let words = provider
        .table()
        .cloned()
        .unwrap_or_else(|| Tensor::zeros("none", 0, spec.word_dim));

    let mut words = vec![words];
    let adam_cfg = AdamConfig::with_lr(regime.lr);
    let mut opt = Optimizer {
        mlp: Adam::new(adam_cfg, &mlp.params),
        tables: Adam::new(adam_cfg, &tables.tensors),
        words: Adam::new(adam_cfg, &words),
        mlp_grads: mlp.zero_grads(),
        table_grads: tables.tensors.iter().map(Tensor::zeros_like).collect(),
        word_grads: vec![words[0].zeros_like()],
    };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::with_capacity(regime.epochs);
    let mut best: Option<(f64, usize, Mlp, FeatureTables, Tensor)> = None;
    let mut x = Vec::with_capacity(spec.input_dim());
    let wd = spec.word_dim;
    let wt = wd + spec.tag_dim;
    for epoch in 1..=regime.epochs {
        order.shuffle(&mut rng);
        let explore = epoch >= regime.explore_start_epoch;
        let (mut loss_sum, mut states, mut explored, mut pending) = (0.0, 0usize, 0usize, 0usize);
        for &s in &order {
            let gold = &golds[s];
            let input = &train_in[s];
            let mut c = Config::initial(gold.len());
            loop {
                let legal = c.legal_actions(inv);
                if legal.is_empty() {
                    break;
                }
                if legal.len() == 1 {
                    c.apply_in_place(legal[0], inv)?;
                    continue;
                }
                let zero = zero_cost_actions(&c, gold, inv);
                if zero.is_empty() {
                    return Err(Error::InvalidData(format!(
                        "no zero-cost action in sentence {} at {c}",
                        train[s].utterance.recording_id
                    )));
                }
                let ids = slot_ids(&c, spec, inv);
                extract_features(&ids, input, &words[0], &tables, spec, &mut x)?;
                let (head, mask) = head_and_mask(&c, &legal, inv);
                let pass = mlp.forward(&x, Mode::Train(&mut rng))?;
                let target = best_of(&pass.logits[head], &zero, inv);
                let class = Target::Class(class_of(target, inv));
                let (loss, gx) =
                    mlp.backward(&pass, head, &class, Some(&mask), &mut opt.mlp_grads)?;
                loss_sum += loss;
                states += 1;
                pending += 1;
                // scatter the input gradient back to the embedding rows
                for (k, (w, &t)) in ids.words.iter().zip(&ids.tags).enumerate() {
                    let gw = &gx[k * wt..k * wt + wd];
                    let gt = &gx[k * wt + wd..(k + 1) * wt];
                    match *w {
                        WordSlot::Pad => add_row(&mut opt.table_grads[0], 0, gw),
                        WordSlot::Root => add_row(&mut opt.table_grads[0], 1, gw),
                        WordSlot::Token(i) => {
                            if let Some(r) = input.row(i).filter(|_| trainable) {
                                add_row(&mut opt.word_grads[0], r, gw);
                            }
                        }
                    }
                    add_row(&mut opt.table_grads[1], t, gt);
                }
                let base = spec.word_slots() * wt;
                for (k, &a) in ids.actions.iter().enumerate() {
                    let ga = &gx[base + k * spec.action_dim..base + (k + 1) * spec.action_dim];
                    add_row(&mut opt.table_grads[2], a, ga);
                }
                if pending == regime.batch {
                    opt.step(&mut mlp, &mut tables, &mut words, pending)?;
                    pending = 0;
                }
                let next = if explore && rng.gen::<f64>() < regime.explore_prob {
                    let model_choice = best_of(&pass.logits[head], &legal, inv);
                    explored += usize::from(model_choice != target);
                    model_choice
                } else {
                    target
                };
                c.apply_in_place(next, inv)?;
            }
        }
        if pending > 0 {
            opt.step(&mut mlp, &mut tables, &mut words, pending)?;
        }
        let weights = Weights {
            mlp: &mlp,
            tables: &tables,
            words: &words[0],
            spec,
            inv,
        };
        let dev_scores = if dev.is_empty() {
            Scores::default()
        } else {
            attachment_scores(dev, &weights.decode(&dev_utts, &dev_in)?, None)?.all
        };
        let entry = EpochLog {
            epoch,
            train_loss: loss_sum / states.max(1) as f64,
            states,
            explored,
            dev: dev_scores,
        };
        on_epoch(&entry);
        log.push(entry);
        let improves = best
            .as_ref()
            .is_none_or(|(las, ..)| dev_scores.las > *las || dev.is_empty());
        if improves {
            best = Some((
                dev_scores.las,
                epoch,
                mlp.clone(),
                tables.clone(),
                words[0].clone(),
            ));
        }
    }
    let (_, best_epoch, mlp, tables, words) = best.expect("at least one epoch");
    let provider = match provider.state() {
        ProviderState::Lookup { table: mut t } => {
            t.table = words;
            ProviderState::Lookup { table: t }
        }
        other => other,
    };
    Ok((
        ParserModel {
            format: PARSER_FORMAT.into(),
            version: PARSER_VERSION,
            inventory: inv.clone(),
            action_names: inv.action_names(),
            features: *spec,
            provider,
            tables,
            mlp,
            best_epoch,
        },
        log,
    ))
}

fn add_row(t: &mut Tensor, row: usize, g: &[f64]) {
    t.row_mut(row).iter_mut().zip(g).for_each(|(a, b)| *a += b);
}

struct Optimizer {
    mlp: Adam,
    tables: Adam,
    words: Adam,
    mlp_grads: Vec<Tensor>,
    table_grads: Vec<Tensor>,
    word_grads: Vec<Tensor>,
}

impl Optimizer {
    /// Averages the accumulated gradients over `batch` states and applies
    /// one Adam step to every parameter group.
    fn step(
        &mut self,
        mlp: &mut Mlp,
        tables: &mut FeatureTables,
        words: &mut [Tensor],
        batch: usize,
    ) -> Result<()> {
        let scale = 1.0 / batch as f64;
        let all = self
            .mlp_grads
            .iter_mut()
            .chain(&mut self.table_grads)
            .chain(&mut self.word_grads);
        for g in all {
            g.data.iter_mut().for_each(|v| *v *= scale);
        }
        self.mlp.update(&mut mlp.params, &self.mlp_grads)?;
        self.tables.update(&mut tables.tensors, &self.table_grads)?;
        self.words.update(words, &self.word_grads)?;
        let all = self
            .mlp_grads
            .iter_mut()
            .chain(&mut self.table_grads)
            .chain(&mut self.word_grads);
        all.for_each(Tensor::fill_zero);
        Ok(())
    }
}

impl ParserModel {
    /// Greedy decoding. Synthetic tokens contribute to provider vectors but
    /// are left out of the parse and of the output trees.
    pub fn decode(
        &self,
        utts: &[Utterance],
        external: Option<ExternalVectors>,
    ) -> Result<Vec<DepTree>> {
        let provider = EmbeddingProvider::from_state(&self.provider, external)?;
        let inputs = provider.prepare_corpus(utts)?;
        let empty = Tensor::zeros("none", 0, self.features.word_dim);
        Weights {
            mlp: &self.mlp,
            tables: &self.tables,
            words: provider.table().unwrap_or(&empty),
            spec: &self.features,
            inv: &self.inventory,
        }
        .decode(utts, &inputs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: ParserModel = serde_json::from_str(&text)?;
        if model.format != PARSER_FORMAT || model.version != PARSER_VERSION {
            return Err(Error::InvalidData(format!(
                "{} is not a version {PARSER_VERSION} parser checkpoint",
                path.display()
            )));
        }
        if model.action_names != model.inventory.action_names() {
            return Err(Error::InvalidData(
                "checkpoint action inventory is inconsistent".into(),
            ));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::LookupTable;
    use crate::transition::oracle_derivation;

    fn inv() -> Inventory {
        Inventory::new(
            vec!["DET".into(), "NOUN".into(), "VERB".into()],
            vec!["det".into(), "obj".into(), "root".into(), "subj".into()],
        )
        .unwrap()
    }

    #[test]
    fn single_token_padding() {
        let spec = FeatureSpec::new(4);
        let inv = inv();
        let ids = slot_ids(&Config::initial(1), &spec, &inv);
        assert_eq!(ids.words[0], WordSlot::Root);
        assert_eq!(&ids.words[1..3], &[WordSlot::Pad, WordSlot::Pad]);
        assert_eq!(ids.words[3..6], [WordSlot::Pad; 3]);
        assert_eq!(ids.words[6], WordSlot::Token(0));
        assert_eq!(ids.words[7..9], [WordSlot::Pad; 2]);
        assert!(ids.actions.iter().all(|&a| a == inv.n_actions()));
        assert_eq!(ids.tags[6], inv.n_pos());
    }

    #[test]
    fn input_dim_formula() {
        let spec = FeatureSpec::new(64);
        assert_eq!(spec.input_dim(), 9 * (64 + 16) + 96);
    }

    #[test]
    fn history_slots_are_most_recent_last() {
        let spec = FeatureSpec::new(4);
        let inv = inv();
        let c = Config::replay(2, &[Action::Tag(0), Action::Shift], &inv).unwrap();
        let ids = slot_ids(&c, &spec, &inv);
        assert_eq!(ids.actions[4], inv.action_index(Action::Tag(0)));
        assert_eq!(ids.actions[5], inv.action_index(Action::Shift));
        assert_eq!(ids.actions[3], inv.n_actions());
    }

    #[test]
    fn oracle_scorer_reproduces_gold() {
        let inv = inv();
        let tree = DepTree::new(
            Utterance::from_words("r", &["le", "chat", "voit", "le", "chien"]).unwrap(),
            vec![2, 3, 0, 5, 3],
            ["det", "subj", "root", "det", "obj"]
                .map(String::from)
                .to_vec(),
            ["DET", "NOUN", "VERB", "DET", "NOUN"]
                .map(String::from)
                .to_vec(),
        )
        .unwrap();
        let gold = Gold::from_tree(&tree, &inv).unwrap();
        let (analysis, actions) =
            greedy_parse(5, &inv, |c, _| Ok(zero_cost_actions(c, &gold, &inv)[0])).unwrap();
        assert_eq!(analysis.heads, gold.heads);
        assert_eq!(analysis.labels, gold.labels);
        assert_eq!(analysis.pos, gold.pos);
        assert_eq!(
            actions
                .iter()
                .filter(|a| matches!(a, Action::Tag(_)))
                .count(),
            5
        );
        assert!(actions.len() <= 16);
        assert!(oracle_derivation(&gold, &inv).is_ok());
    }

    #[test]
    fn checkpoint_ties_earliest() {
        assert_eq!(select_checkpoint(&[80.0, 90.0, 90.0, 85.0]), Some(1));
        assert_eq!(select_checkpoint(&[]), None);
    }

    #[test]
    fn lr_zero_without_exploration_keeps_params() {
        let inv = inv();
        let trees = crate::toy::parser_corpus(5, 2).unwrap();
        let utts: Vec<Utterance> = trees.iter().map(|t| t.utterance.clone()).collect();
        let provider = EmbeddingProvider::Lookup(LookupTable::from_corpus(&utts, 8, 1));
        let regime = TrainRegime {
            epochs: 1,
            explore_prob: 0.0,
            lr: 0.0,
            hidden: vec![8],
            ..Default::default()
        };
        let spec = FeatureSpec::new(8);
        let (model, _) =
            train_parser(&trees, &trees, &inv, &provider, &regime, &spec, |_| {}).unwrap();
        let fresh = Mlp::new(model.mlp.spec.clone(), regime.seed).unwrap();
        assert_eq!(model.mlp.params, fresh.params);
        assert_eq!(model.provider, provider.state());
    }
}
