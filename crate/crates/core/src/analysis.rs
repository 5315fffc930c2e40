//! Probes of the representation space and bracketing evaluation.
//!
//! All neighbor searches are exact scans; ties are broken by candidate order
//! (word id, or lexicographic id sequence for phrases).

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::corpus::{Vocab, NUM_SPECIALS, UNK_TOKEN};
use crate::error::{Error, Result};
use crate::model::{Model, Repr};
use crate::parser::{greedy_parse, Adjacency, Bracketing, ParseTree, UnfoldNode};

/// Longest sequence length [`phrase_table`] accepts.
pub const MAX_PHRASE_LEN: usize = 3;
/// Default limit on the number of phrase candidates.
pub const DEFAULT_CANDIDATE_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl Metric {
    /// Euclidean distance, or `1 - cos` (zero vectors are at distance 1 from
    /// everything but themselves).
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                if na == 0.0 || nb == 0.0 {
                    return if a == b { 0.0 } else { 1.0 };
                }
                1.0 - dot / (na.sqrt() * nb.sqrt())
            }
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Config(format!(
                "unknown metric {other:?} (expected euclidean or cosine)"
            ))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub tokens: Vec<String>,
    pub distance: f64,
}

/// A query with its ranked neighbors, closest first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborTable {
    pub query: Vec<String>,
    /// Frequency rank of a single-word query.
    pub rank: Option<usize>,
    pub neighbors: Vec<Neighbor>,
}

/// Bounded best-k list ordered by (distance, candidate index).
struct TopK {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn offer(&mut self, dist: f64, idx: usize) {
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.items.len() == self.k {
            match self.items.last() {
                Some(last) if cmp(&(dist, idx), last) == Ordering::Less => {}
                _ => return,
            }
        }
        let pos = self
            .items
            .partition_point(|it| cmp(it, &(dist, idx)) == Ordering::Less);
        self.items.insert(pos, (dist, idx));
        self.items.truncate(self.k);
    }
}

fn lookup(vocab: &Vocab, token: &str) -> Result<usize> {
    vocab.id(token).ok_or_else(|| {
        Error::Lookup(format!(
            "{token:?} is not in the vocabulary; unknown words map to {UNK_TOKEN}, query {UNK_TOKEN:?} to inspect that fallback"
        ))
    })
}

/// The `k` words closest to `query` over every embedding row, the query
/// itself excluded.
pub fn nearest_words(
    model: &Model,
    vocab: &Vocab,
    query: &str,
    k: usize,
    metric: Metric,
) -> Result<NeighborTable> {
    check_sizes(model, vocab)?;
    let qid = lookup(vocab, query)?;
    if k >= vocab.len() {
        return Err(Error::Parameter(format!(
            "k = {k} must be smaller than the vocabulary size {}",
            vocab.len()
        )));
    }
    let q = model.embedding(qid)?;
    let mut top = TopK::new(k);
    for id in (0..vocab.len()).filter(|&id| id != qid) {
        top.offer(metric.distance(q, model.embedding(id)?), id);
    }
    Ok(NeighborTable {
        query: vec![query.to_string()],
        rank: vocab.rank(qid),
        neighbors: top
            .items
            .into_iter()
            .map(|(distance, id)| Neighbor {
                tokens: vec![vocab.tokens()[id].clone()],
                distance,
            })
            .collect(),
    })
}

/// Closest word to an arbitrary vector (nothing excluded).
pub fn nearest_word_to(model: &Model, x: &[f64], metric: Metric) -> (usize, f64) {
    let mut top = TopK::new(1);
    for id in 0..model.vocab_size() {
        top.offer(metric.distance(x, model.embedding(id).expect("in range")), id);
    }
    let (d, id) = top.items[0];
    (id, d)
}

fn check_sizes(model: &Model, vocab: &Vocab) -> Result<()> {
    if model.vocab_size() != vocab.len() {
        return Err(Error::Structure(format!(
            "model covers {} words, vocabulary has {}",
            model.vocab_size(),
            vocab.len()
        )));
    }
    Ok(())
}

/// Representation of a word sequence: the root of its greedy parse.
pub fn phrase_embedding(model: &Model, ids: &[usize]) -> Result<Repr> {
    let tree = greedy_parse(model, ids, Adjacency::AdjacentOnly)?.tree;
    Ok(tree.root().repr.clone())
}

/// `top_m ^ k_len`, or `None` on overflow.
pub fn phrase_candidate_count(top_m: usize, k_len: usize) -> Option<u64> {
    (top_m as u64).checked_pow(u32::try_from(k_len).ok()?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhraseOptions {
    pub k_len: usize,
    pub top_m: usize,
    pub k: usize,
    pub metric: Metric,
    pub budget: u64,
}

impl PhraseOptions {
    pub fn new(k_len: usize, top_m: usize, k: usize) -> Self {
        PhraseOptions {
            k_len,
            top_m,
            k,
            metric: Metric::Euclidean,
            budget: DEFAULT_CANDIDATE_BUDGET,
        }
    }
}

/// Neighbor tables among all `k_len`-word sequences over the `top_m` most
/// frequent words. Each query is a sequence of `k_len` tokens; its own
/// sequence is excluded from its neighbors.
pub fn phrase_table<S: AsRef<str>>(
    model: &Model,
    vocab: &Vocab,
    opts: &PhraseOptions,
    queries: &[Vec<S>],
) -> Result<Vec<NeighborTable>> {
    check_sizes(model, vocab)?;
    let PhraseOptions {
        k_len,
        top_m,
        k,
        metric,
        budget,
    } = *opts;
    if k_len == 0 || k_len > MAX_PHRASE_LEN {
        return Err(Error::Size(format!(
            "phrase length {k_len} outside 1..={MAX_PHRASE_LEN}"
        )));
    }
    if top_m == 0 || top_m > vocab.num_words() {
        return Err(Error::Parameter(format!(
            "top_m = {top_m} must be in 1..={}",
            vocab.num_words()
        )));
    }
    let count = phrase_candidate_count(top_m, k_len).unwrap_or(u64::MAX);
    if count > budget {
        return Err(Error::Size(format!(
            "{count} candidates exceed the budget of {budget}; use a smaller top_m"
        )));
    }
    let mut encoded = Vec::with_capacity(queries.len());
    for q in queries {
        if q.len() != k_len {
            return Err(Error::Parameter(format!(
                "query of {} tokens, expected {k_len}",
                q.len()
            )));
        }
        let ids = q
            .iter()
            .map(|t| lookup(vocab, t.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let repr = phrase_embedding(model, &ids)?;
        encoded.push((ids, repr));
    }

    let mut tops: Vec<TopK> = queries.iter().map(|_| TopK::new(k)).collect();
    let mut digits = vec![0usize; k_len];
    let mut ids = vec![NUM_SPECIALS; k_len];
    for idx in 0..count as usize {
        for (slot, &d) in ids.iter_mut().zip(&digits) {
            *slot = NUM_SPECIALS + d;
        }
        let repr = phrase_embedding(model, &ids)?;
        for ((qids, qrepr), top) in encoded.iter().zip(&mut tops) {
            if *qids != ids {
                top.offer(metric.distance(qrepr, &repr), idx);
            }
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < top_m {
                break;
            }
            *d = 0;
        }
    }

    let decode = |mut idx: usize| {
        let mut out = vec![String::new(); k_len];
        for slot in out.iter_mut().rev() {
            *slot = vocab.tokens()[NUM_SPECIALS + idx % top_m].clone();
            idx /= top_m;
        }
        out
    };
    Ok(queries
        .iter()
        .zip(encoded)
        .zip(tops)
        .map(|((q, (ids, _)), top)| NeighborTable {
            query: q.iter().map(|t| t.as_ref().to_string()).collect(),
            rank: if k_len == 1 { vocab.rank(ids[0]) } else { None },
            neighbors: top
                .items
                .into_iter()
                .map(|(distance, idx)| Neighbor {
                    tokens: decode(idx),
                    distance,
                })
                .collect(),
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unlabeled bracketing score over internal spans, excluding the span of
/// the whole segment. Trees without countable spans score 1.
pub fn bracket_f1(pred: &ParseTree, gold: &ParseTree) -> Result<BracketScore> {
    bracket_f1_shapes(&pred.bracketing(), &gold.bracketing())
}

/// [`bracket_f1`] on bare bracketings.
pub fn bracket_f1_shapes(pred: &Bracketing, gold: &Bracketing) -> Result<BracketScore> {
    if pred.n_leaves() != gold.n_leaves() {
        return Err(Error::Structure(format!(
            "predicted tree has {} leaves, gold tree has {}",
            pred.n_leaves(),
            gold.n_leaves()
        )));
    }
    let countable = |b: &Bracketing| {
        let spans = b.node_spans();
        let n = b.n_leaves();
        let root = b.root();
        spans
            .into_iter()
            .enumerate()
            .filter(|&(i, _)| i >= n && i != root)
            .map(|(_, s)| s)
            .collect::<std::collections::BTreeSet<_>>()
    };
    let (p, g) = (countable(pred), countable(gold));
    let shared = p.intersection(&g).count() as f64;
    let ratio = |num: f64, den: usize| if den == 0 { 1.0 } else { num / den as f64 };
    let precision = ratio(shared, p.len());
    let recall = ratio(shared, g.len());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BracketScore {
        precision,
        recall,
        f1,
    })
}

/// Mean F1 over (predicted, gold) pairs; 0 for no pairs.
pub fn mean_bracket_f1<'a, I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a Bracketing, &'a Bracketing)>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, g) in pairs {
        total += bracket_f1_shapes(p, g)?.f1;
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// How well embeddings group by a known word class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassStructure {
    pub mean_intra: f64,
    pub mean_inter: f64,
    /// Fraction of words whose nearest labelled word shares their class.
    pub nn_same_class: f64,
}

/// Pairwise statistics over the labelled words `(id, class)`.
pub fn class_structure<L: PartialEq>(
    model: &Model,
    labelled: &[(usize, L)],
    metric: Metric,
) -> Result<ClassStructure> {
    if labelled.len() < 2 {
        return Err(Error::Parameter("class structure needs at least two words".into()));
    }
    let rows = labelled
        .iter()
        .map(|(id, _)| model.embedding(*id))
        .collect::<Result<Vec<_>>>()?;
    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0usize, 0.0, 0usize);
    let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); labelled.len()];
    for i in 0..labelled.len() {
        for j in i + 1..labelled.len() {
            let d = metric.distance(rows[i], rows[j]);
            if labelled[i].1 == labelled[j].1 {
                intra += d;
                n_intra += 1;
            } else {
                inter += d;
                n_inter += 1;
            }
            if d < best[i].0 {
                best[i] = (d, j);
            }
            if d < best[j].0 {
                best[j] = (d, i);
            }
        }
    }
    let same = best
        .iter()
        .enumerate()
        .filter(|&(i, &(_, j))| labelled[i].1 == labelled[j].1)
        .count();
    let mean = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
    Ok(ClassStructure {
        mean_intra: mean(intra, n_intra),
        mean_inter: mean(inter, n_inter),
        nn_same_class: same as f64 / labelled.len() as f64,
    })
}

/// Render an unfolded tree with every leaf replaced by its nearest word.
pub fn label_unfolded(node: &UnfoldNode, model: &Model, vocab: &Vocab, metric: Metric) -> String {
    node.render(&mut |r| {
        let (id, _) = nearest_word_to(model, r, metric);
        vocab.tokens()[id].clone()
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TableFormat {
    /// One column per query: the query, its rank, then its neighbors.
    #[default]
    Text,
    /// One line per neighbor: query, rank, position, neighbor, distance.
    Tsv,
}

pub fn render_tables(tables: &[NeighborTable], format: TableFormat) -> String {
    match format {
        TableFormat::Text => render_text(tables),
        TableFormat::Tsv => render_tsv(tables),
    }
}

fn render_text(tables: &[NeighborTable]) -> String {
    let columns: Vec<Vec<String>> = tables
        .iter()
        .map(|t| {
            let mut col = vec![
                t.query.join(" "),
                t.rank.map_or_else(String::new, |r| format!("({r})")),
            ];
            col.extend(t.neighbors.iter().map(|n| n.tokens.join(" ")));
            col
        })
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .map(|c| c.iter().map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    for r in 0..rows {
        let mut line = String::new();
        for (c, col) in columns.iter().enumerate() {
            let cell = col.get(r).map_or("", String::as_str);
            if c > 0 {
                line.push_str("  ");
            }
            let _ = write!(line, "{cell:<w$}", w = widths[c]);
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn render_tsv(tables: &[NeighborTable]) -> String {
    let mut out = String::from("query\trank\tposition\tneighbor\tdistance\n");
    for t in tables {
        let rank = t.rank.map_or_else(String::new, |r| r.to_string());
        for (i, n) in t.neighbors.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{rank}\t{}\t{}\t{}",
                t.query.join(" "),
                i + 1,
                n.tokens.join(" "),
                n.distance
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Block, InitOptions};

    fn vocab(words: &[&str]) -> Vocab {
        Vocab::from_words(words).unwrap()
    }

    #[test]
    fn twin_embedding_is_top_neighbor() {
        let v = vocab(&["a", "b", "c", "d"]);
        let mut m = Model::init(v.len(), &InitOptions::new(3, 2).with_bounds(1..=8)).unwrap();
        let a = m.embedding(v.id("a").unwrap()).unwrap().to_vec();
        m.embedding_mut(v.id("c").unwrap()).unwrap().copy_from_slice(&a);
        let t = nearest_words(&m, &v, "a", 1, Metric::Euclidean).unwrap();
        assert_eq!(t.neighbors[0].tokens, ["c"]);
        assert_eq!(t.neighbors[0].distance, 0.0);
        assert_eq!(t.rank, Some(1));
    }

    #[test]
    fn ties_go_to_lower_ids_and_query_is_excluded() {
        let v = vocab(&["a", "b", "c"]);
        let m = Model::zeros(2, v.len());
        let t = nearest_words(&m, &v, "b", 4, Metric::Euclidean).unwrap();
        let names: Vec<_> = t.neighbors.iter().map(|n| n.tokens[0].as_str()).collect();
        assert_eq!(names, ["<unk>", "<num>", "a", "c"]);
        assert!(matches!(
            nearest_words(&m, &v, "b", 5, Metric::Euclidean),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn oov_query_mentions_unk() {
        let v = vocab(&["a", "b"]);
        let m = Model::zeros(2, v.len());
        match nearest_words(&m, &v, "zebra", 1, Metric::Cosine) {
            Err(Error::Lookup(msg)) => assert!(msg.contains("<unk>")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cosine_distance() {
        assert!((Metric::Cosine.distance(&[1.0, 0.0], &[0.0, 2.0]) - 1.0).abs() < 1e-15);
        assert!(Metric::Cosine.distance(&[1.0, 1.0], &[2.0, 2.0]).abs() < 1e-15);
        assert_eq!(Metric::Cosine.distance(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!("cosine".parse::<Metric>().unwrap(), Metric::Cosine);
    }

    #[test]
    fn single_word_phrases_match_nearest_words() {
        let v = vocab(&["a", "b", "c", "d", "e"]);
        let m = Model::init(v.len(), &InitOptions::new(4, 9).with_bounds(1..=8)).unwrap();
        let opts = PhraseOptions::new(1, v.num_words(), 3);
        let p = phrase_table(&m, &v, &opts, &[vec!["c"]]).unwrap();
        let mut w = nearest_words(&m, &v, "c", v.len() - 1, Metric::Euclidean).unwrap();
        w.neighbors.retain(|n| v.id(&n.tokens[0]).unwrap() >= NUM_SPECIALS);
        w.neighbors.truncate(3);
        assert_eq!(p[0], w);
    }

    #[test]
    fn phrase_guards() {
        assert_eq!(phrase_candidate_count(500, 2), Some(250_000));
        let v = vocab(&["a", "b", "c"]);
        let m = Model::zeros(2, v.len());
        let q: [Vec<&str>; 0] = [];
        assert!(matches!(
            phrase_table(&m, &v, &PhraseOptions::new(4, 2, 1), &q),
            Err(Error::Size(_))
        ));
        let mut opts = PhraseOptions::new(2, 3, 1);
        opts.budget = 8;
        match phrase_table(&m, &v, &opts, &q) {
            Err(Error::Size(msg)) => assert!(msg.contains("top_m")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn f1_fixtures() {
        let left = Bracketing::left_branching(3);
        let right = Bracketing::right_branching(3);
        let s = bracket_f1_shapes(&left, &right).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = bracket_f1_shapes(&left, &left).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let two = Bracketing::left_branching(2);
        assert_eq!(bracket_f1_shapes(&two, &two).unwrap().f1, 1.0);
        assert!(matches!(
            bracket_f1_shapes(&left, &Bracketing::left_branching(4)),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn labelled_unfold_uses_nearest_words() {
        let v = vocab(&["a", "b"]);
        let mut m = Model::zeros(1, v.len());
        m.embedding_mut(2).unwrap()[0] = 1.0;
        m.embedding_mut(3).unwrap()[0] = -1.0;
        m.block_mut(Block::DissocW).copy_from_slice(&[0.9, -0.9]);
        m.block_mut(Block::SalW)[0] = 1.0;
        let t = crate::parser::unfold(&[1.0], &m, 0.95, 3);
        assert_eq!(label_unfolded(&t, &m, &v, Metric::Euclidean), "(a b)");
    }

    #[test]
    fn text_and_tsv_tables() {
        let t = NeighborTable {
            query: vec!["cat".into()],
            rank: Some(7),
            neighbors: vec![
                Neighbor { tokens: vec!["dog".into()], distance: 0.5 },
                Neighbor { tokens: vec!["bird".into()], distance: 0.75 },
            ],
        };
        let u = NeighborTable {
            query: vec!["red".into(), "house".into()],
            rank: None,
            neighbors: vec![Neighbor { tokens: vec!["blue".into(), "house".into()], distance: 1.0 }],
        };
        let text = render_tables(&[t.clone(), u], TableFormat::Text);
        assert_eq!(text, "cat   red house\n(7)\ndog   blue house\nbird\n");
        let tsv = render_tables(&[t], TableFormat::Tsv);
        assert_eq!(
            tsv,
            "query\trank\tposition\tneighbor\tdistance\ncat\t7\t1\tdog\t0.5\ncat\t7\t2\tbird\t0.75\n"
        );
    }
}
