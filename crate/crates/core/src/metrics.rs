//! Scoring: attachment scores with subset breakdowns, edit-distance
//! alignment counts for concept error rates, weighted F1, and Student-t
//! confidence intervals.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::corpus::{DepTree, Token};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Scores {
    pub las: f64,
    pub uas: f64,
    pub upos: f64,
    pub tokens: usize,
}

/// Attachment scores, optionally with a report restricted to a token subset
/// and its difference to the global report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttachmentReport {
    pub all: Scores,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<Scores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Scores>,
}

#[derive(Default)]
struct Counts {
    tokens: usize,
    head: usize,
    labeled: usize,
    pos: usize,
}

impl Counts {
    fn scores(&self) -> Scores {
        let pct = |k: usize| {
            if self.tokens == 0 {
                0.0
            } else {
                100.0 * k as f64 / self.tokens as f64
            }
        };
        Scores {
            las: pct(self.labeled),
            uas: pct(self.head),
            upos: pct(self.pos),
            tokens: self.tokens,
        }
    }
}

/// LAS, UAS and UPOS over every token. `subset` selects tokens for the
/// restricted report (e.g. OOV words).
pub fn attachment_scores(
    gold: &[DepTree],
    pred: &[DepTree],
    subset: Option<&dyn Fn(&Token) -> bool>,
) -> Result<AttachmentReport> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidData(format!(
            "gold has {} sentences, prediction {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut all = Counts::default();
    let mut sub = Counts::default();
    for (k, (g, p)) in gold.iter().zip(pred).enumerate() {
        let same_forms = g.len() == p.len()
            && g.utterance
                .tokens
                .iter()
                .zip(&p.utterance.tokens)
                .all(|(a, b)| a.surface == b.surface);
        if !same_forms {
            return Err(Error::InvalidData(format!(
                "sentence {} ({}) differs between gold and prediction",
                k + 1,
                g.utterance.recording_id
            )));
        }
        for i in 0..g.len() {
            let head_ok = g.heads[i] == p.heads[i];
            let label_ok = head_ok && g.labels[i] == p.labels[i];
            let pos_ok = g.pos[i] == p.pos[i];
            let add = |c: &mut Counts| {
                c.tokens += 1;
                c.head += usize::from(head_ok);
                c.labeled += usize::from(label_ok);
                c.pos += usize::from(pos_ok);
            };
            add(&mut all);
            if subset.is_some_and(|f| f(&g.utterance.tokens[i])) {
                add(&mut sub);
            }
        }
    }
    let all = all.scores();
    let (subset, delta) = match subset {
        Some(_) => {
            let s = sub.scores();
            let d = Scores {
                las: s.las - all.las,
                uas: s.uas - all.uas,
                upos: s.upos - all.upos,
                tokens: s.tokens,
            };
            (Some(s), Some(d))
        }
        None => (None, None),
    };
    Ok(AttachmentReport { all, subset, delta })
}

/// Sets `oov` on every token: true when the surface is not in `lexicon`.
pub fn mark_oov(tokens: &mut [Token], lexicon: &HashSet<String>) -> Result<()> {
    if lexicon.is_empty() {
        return Err(Error::InvalidArgument("empty lexicon".into()));
    }
    for t in tokens {
        t.oov = Some(!lexicon.contains(&t.surface));
    }
    Ok(())
}

/// Substitution, deletion and insertion counts of one optimal alignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AlignmentCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_len: usize,
}

impl AlignmentCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// Error rate; `None` for an empty reference.
    pub fn rate(&self) -> Option<f64> {
        (self.reference_len > 0).then(|| self.errors() as f64 / self.reference_len as f64)
    }
}

impl std::ops::Add for AlignmentCounts {
    type Output = AlignmentCounts;

    fn add(self, o: Self) -> Self {
        AlignmentCounts {
            substitutions: self.substitutions + o.substitutions,
            deletions: self.deletions + o.deletions,
            insertions: self.insertions + o.insertions,
            reference_len: self.reference_len + o.reference_len,
        }
    }
}

impl std::iter::Sum for AlignmentCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(AlignmentCounts::default(), |a, b| a + b)
    }
}

/// Unit-cost edit-distance alignment of `hyp` against `reference`. On ties
/// the backtrace prefers a match or substitution, then a deletion, then an
/// insertion.
pub fn align_error_rate<T: PartialEq>(reference: &[T], hyp: &[T]) -> AlignmentCounts {
    let (n, m) = (reference.len(), hyp.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(reference[i - 1] != hyp[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut counts = AlignmentCounts {
        reference_len: n,
        ..Default::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hyp[j - 1];
            if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
                counts.substitutions += usize::from(!same);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    counts
}

/// Support-weighted mean of per-class F1 over the gold classes.
pub fn weighted_f1<L: Ord + Clone>(gold: &[L], pred: &[L]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::InvalidArgument(
            "weighted F1 of an empty sample".into(),
        ));
    }
    if gold.len() != pred.len() {
        return Err(Error::Dimension {
            expected: gold.len(),
            got: pred.len(),
        });
    }
    #[derive(Default)]
    struct C {
        tp: usize,
        gold: usize,
        pred: usize,
    }
    let mut per: BTreeMap<&L, C> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        per.entry(g).or_default().gold += 1;
        per.entry(p).or_default().pred += 1;
        if g == p {
            per.entry(g).or_default().tp += 1;
        }
    }
    let total = gold.len() as f64;
    let score = per
        .values()
        .filter(|c| c.gold > 0)
        .map(|c| {
            let f1 = if c.tp == 0 {
                0.0
            } else {
                let p = c.tp as f64 / c.pred as f64;
                let r = c.tp as f64 / c.gold as f64;
                2.0 * p * r / (p + r)
            };
            f1 * c.gold as f64 / total
        })
        .sum();
    Ok(score)
}

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + aa * d;
        d = if d.abs() < TINY { TINY } else { d };
        c = 1.0 + aa / c;
        c = if c.abs() < TINY { TINY } else { c };
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + aa * d;
        d = if d.abs() < TINY { TINY } else { d };
        c = 1.0 + aa / c;
        c = if c.abs() < TINY { TINY } else { c };
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// CDF of Student's t distribution with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Quantile of Student's t by bisection on the CDF.
pub fn student_t_quantile(p: f64, df: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) || !(df > 0.0) {
        return Err(Error::InvalidArgument(format!("quantile {p} with df {df}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while student_t_cdf(lo, df) > p {
        lo *= 2.0;
    }
    while student_t_cdf(hi, df) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub half_width: f64,
    pub level: f64,
    pub n: usize,
}

/// Mean ± t_{(1+level)/2, n-1} · s / √n.
pub fn t_confidence_interval(values: &[f64], level: f64) -> Result<ConfidenceInterval> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "confidence interval needs at least 2 values, got {n}"
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level}")));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = student_t_quantile((1.0 + level) / 2.0, nf - 1.0)?;
    Ok(ConfidenceInterval {
        mean,
        half_width: t * var.sqrt() / nf.sqrt(),
        level,
        n,
    })
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Renders rows as an aligned text table.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let fmt_row = |cells: Vec<&str>| {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<w$}", w = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = fmt_row(header.to_vec());
    out.push('\n');
    out.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  "),
    );
    out.push('\n');
    for r in rows {
        let cells: Vec<&str> = (0..cols)
            .map(|i| r.get(i).map_or("", String::as_str))
            .collect();
        out.push_str(&fmt_row(cells));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Utterance;

    fn tree(words: &[&str], heads: &[usize], labels: &[&str]) -> DepTree {
        DepTree::new(
            Utterance::from_words("r", words).unwrap(),
            heads.to_vec(),
            labels.iter().map(|s| s.to_string()).collect(),
            vec!["X".to_string(); words.len()],
        )
        .unwrap()
    }

    #[test]
    fn perfect_scores() {
        let g = tree(&["a", "b"], &[2, 0], &["det", "root"]);
        let r = attachment_scores(&[g.clone()], &[g], None).unwrap();
        assert_eq!((r.all.las, r.all.uas, r.all.upos), (100.0, 100.0, 100.0));
    }

    #[test]
    fn hand_counted_scores() {
        let words = ["a", "b", "c", "d"];
        let g = tree(&words, &[2, 0, 2, 3], &["det", "root", "obj", "mod"]);
        // token 1: wrong head, right label; token 3: right head, wrong label
        let p = tree(&words, &[3, 0, 2, 3], &["det", "root", "subj", "mod"]);
        let r = attachment_scores(&[g], &[p], None).unwrap();
        assert_eq!(r.all.uas, 75.0);
        assert_eq!(r.all.las, 50.0);
    }

    #[test]
    fn subset_delta() {
        let words = ["a", "b"];
        let g = tree(&words, &[2, 0], &["det", "root"]);
        let p = tree(&words, &[0, 0], &["det", "root"]);
        let only_a = |t: &Token| t.surface == "a";
        let r = attachment_scores(&[g], &[p], Some(&only_a)).unwrap();
        assert_eq!(r.subset.unwrap().uas, 0.0);
        assert_eq!(r.delta.unwrap().uas, -50.0);
    }

    #[test]
    fn misaligned_is_error() {
        let g = tree(&["a", "b"], &[2, 0], &["x", "y"]);
        let p = tree(&["a", "c"], &[2, 0], &["x", "y"]);
        assert!(attachment_scores(&[g], &[p], None).is_err());
    }

    #[test]
    fn oov_marking() {
        let mut toks = Utterance::from_words("r", &["a", "b"]).unwrap().tokens;
        let lex: HashSet<String> = ["a".to_string()].into();
        mark_oov(&mut toks, &lex).unwrap();
        assert_eq!(
            toks.iter().map(|t| t.oov).collect::<Vec<_>>(),
            vec![Some(false), Some(true)]
        );
        assert!(mark_oov(&mut toks, &HashSet::new()).is_err());
    }

    #[test]
    fn media_example_deletion() {
        let reference = ["cmd-task", "nb-room", "room-type", "loc-city"];
        let hyp = ["cmd-task", "room-type", "loc-city"];
        let c = align_error_rate(&reference, &hyp);
        assert_eq!((c.substitutions, c.deletions, c.insertions), (0, 1, 0));
        assert_eq!(c.rate(), Some(0.25));
        assert_eq!(align_error_rate(&reference, &reference).errors(), 0);
    }

    #[test]
    fn empty_reference() {
        let c = align_error_rate::<&str>(&[], &["a", "b"]);
        assert_eq!(
            (c.substitutions, c.deletions, c.insertions, c.reference_len),
            (0, 0, 2, 0)
        );
        assert_eq!(c.rate(), None);
    }

    #[test]
    fn weighted_f1_examples() {
        assert_eq!(
            weighted_f1(&["a", "b", "a"], &["a", "b", "a"]).unwrap(),
            1.0
        );
        let f = weighted_f1(&["a", "a", "b", "c"], &["a", "a", "d", "c"]).unwrap();
        assert!((f - 0.75).abs() < 1e-12);
        assert!(weighted_f1::<&str>(&[], &[]).is_err());
    }

    #[test]
    fn t_quantile_df9() {
        let t = student_t_quantile(0.975, 9.0).unwrap();
        assert!((t - 2.2622).abs() < 1e-3, "t = {t}");
    }

    #[test]
    fn constant_values_zero_width() {
        let ci = t_confidence_interval(&[3.0; 5], 0.95).unwrap();
        assert_eq!(ci.mean, 3.0);
        assert_eq!(ci.half_width, 0.0);
        assert!(t_confidence_interval(&[1.0], 0.95).is_err());
    }

    #[test]
    fn table_layout() {
        let t = text_table(
            &["model", "LAS"],
            &[vec!["oral".into(), "87.65 ± 0.11".into()]],
        );
        assert!(t.starts_with("model  LAS\n"));
        assert!(t.contains("oral   87.65 ± 0.11"));
    }
}
