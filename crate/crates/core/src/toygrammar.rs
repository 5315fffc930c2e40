//! Weighted grammar over word classes, used to generate corpora whose gold
//! binary trees are known.
//!
//! Grammar files hold two kinds of lines (`#` starts a comment):
//!
//! ```text
//! class NOUN: cat dog bird
//! rule NP -> DET NOUN @3
//! ```
//!
//! Right-hand sides have one or two symbols; the weight defaults to 1. Class
//! names are terminals, rule left-hand sides are nonterminals, and the first
//! rule's left-hand side is the start symbol. Unary rules do not add a node
//! to the gold tree.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::tokenize;
use crate::error::{Error, Result};
use crate::parser::{parse_bracketed, Bracketing};

/// The bundled grammar: 50 words in 7 classes.
pub const TOY50: &str = include_str!("../data/toy50.grammar");

/// Attempts per sentence before a length range is declared unreachable.
const MAX_ATTEMPTS: usize = 10_000;
/// Expansion depth beyond which a derivation is abandoned and redrawn.
const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<String>,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sym {
    Class(usize),
    Nonterminal(usize),
}

#[derive(Clone, Debug)]
pub struct ToyGrammar {
    classes: Vec<(String, Vec<String>)>,
    rules: Vec<Rule>,
    nonterminals: Vec<String>,
    /// Per nonterminal: (rule index, cumulative weight).
    choices: Vec<Vec<(usize, f64)>>,
    compiled: Vec<Vec<Sym>>,
}

/// A generated sentence and its derivation.
#[derive(Clone, Debug, PartialEq)]
pub struct GoldTree {
    pub words: Vec<String>,
    pub tree: Bracketing,
}

impl GoldTree {
    pub fn render(&self) -> String {
        self.tree.render(&self.words)
    }
}

enum Node {
    Leaf(String),
    Pair(Box<Node>, Box<Node>),
}

impl ToyGrammar {
    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Format {
            field: format!("grammar line {line}"),
            message: msg,
        };
        let mut classes: Vec<(String, Vec<String>)> = Vec::new();
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("class ") {
                let (name, toks) = rest
                    .split_once(':')
                    .ok_or_else(|| err(lineno, "expected `class NAME: tok ...`".into()))?;
                let name = name.trim().to_string();
                let toks: Vec<String> = toks.split_whitespace().map(str::to_string).collect();
                if name.is_empty() || toks.is_empty() {
                    return Err(err(lineno, "class needs a name and at least one token".into()));
                }
                for t in &toks {
                    if tokenize(t) != [t.as_str()] {
                        return Err(err(lineno, format!("{t:?} is not a single lowercase token")));
                    }
                }
                classes.push((name, toks));
            } else if let Some(rest) = line.strip_prefix("rule ") {
                let (lhs, rhs) = rest
                    .split_once("->")
                    .ok_or_else(|| err(lineno, "expected `rule LHS -> A B @weight`".into()))?;
                let (rhs, weight) = match rhs.split_once('@') {
                    Some((r, w)) => (
                        r,
                        w.trim()
                            .parse::<f64>()
                            .map_err(|_| err(lineno, format!("invalid weight {:?}", w.trim())))?,
                    ),
                    None => (rhs, 1.0),
                };
                if !(weight > 0.0 && weight.is_finite()) {
                    return Err(err(lineno, format!("weight must be positive, got {weight}")));
                }
                let rhs: Vec<String> = rhs.split_whitespace().map(str::to_string).collect();
                if !(1..=2).contains(&rhs.len()) {
                    return Err(err(lineno, "right-hand side needs one or two symbols".into()));
                }
                rules.push(Rule {
                    lhs: lhs.trim().to_string(),
                    rhs,
                    weight,
                });
            } else {
                return Err(err(lineno, format!("unrecognized line {line:?}")));
            }
        }
        ToyGrammar::new(classes, rules)
    }

    pub fn new(classes: Vec<(String, Vec<String>)>, rules: Vec<Rule>) -> Result<Self> {
        let bad = |msg: String| Error::Format {
            field: "grammar".into(),
            message: msg,
        };
        if rules.is_empty() {
            return Err(bad("no rules".into()));
        }
        let mut class_ix = HashMap::new();
        let mut seen_words = HashMap::new();
        for (i, (name, toks)) in classes.iter().enumerate() {
            if class_ix.insert(name.clone(), i).is_some() {
                return Err(bad(format!("class {name} defined twice")));
            }
            for t in toks {
                if let Some(other) = seen_words.insert(t.clone(), name.clone()) {
                    return Err(bad(format!("{t:?} belongs to both {other} and {name}")));
                }
            }
        }
        let mut nonterminals: Vec<String> = Vec::new();
        let mut nt_ix = HashMap::new();
        for r in &rules {
            if class_ix.contains_key(&r.lhs) {
                return Err(bad(format!("{} is both a class and a rule head", r.lhs)));
            }
            if !nt_ix.contains_key(&r.lhs) {
                nt_ix.insert(r.lhs.clone(), nonterminals.len());
                nonterminals.push(r.lhs.clone());
            }
        }
        let mut choices = vec![Vec::new(); nonterminals.len()];
        let mut compiled = Vec::with_capacity(rules.len());
        for (ri, r) in rules.iter().enumerate() {
            let syms = r
                .rhs
                .iter()
                .map(|s| {
                    class_ix
                        .get(s)
                        .map(|&c| Sym::Class(c))
                        .or_else(|| nt_ix.get(s).map(|&n| Sym::Nonterminal(n)))
                        .ok_or_else(|| bad(format!("undefined symbol {s} in rule for {}", r.lhs)))
                })
                .collect::<Result<Vec<_>>>()?;
            compiled.push(syms);
            let list = &mut choices[nt_ix[&r.lhs]];
            let total = list.last().map_or(0.0, |&(_, w)| w) + r.weight;
            list.push((ri, total));
        }
        Ok(ToyGrammar {
            classes,
            rules,
            nonterminals,
            choices,
            compiled,
        })
    }

    /// The bundled 50-word grammar.
    pub fn toy50() -> Self {
        ToyGrammar::parse(TOY50).expect("bundled grammar is valid")
    }

    pub fn classes(&self) -> &[(String, Vec<String>)] {
        &self.classes
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn start(&self) -> &str {
        &self.nonterminals[0]
    }

    /// Class name of every word.
    pub fn word_classes(&self) -> HashMap<&str, &str> {
        self.classes
            .iter()
            .flat_map(|(c, toks)| toks.iter().map(move |t| (t.as_str(), c.as_str())))
            .collect()
    }

    pub fn num_words(&self) -> usize {
        self.classes.iter().map(|(_, t)| t.len()).sum()
    }

    fn expand<R: Rng + ?Sized>(&self, sym: Sym, depth: usize, rng: &mut R) -> Option<Node> {
        if depth > MAX_DEPTH {
            return None;
        }
        match sym {
            Sym::Class(c) => {
                let toks = &self.classes[c].1;
                Some(Node::Leaf(toks[rng.gen_range(0..toks.len())].clone()))
            }
            Sym::Nonterminal(n) => {
                let list = &self.choices[n];
                let total = list.last().expect("every nonterminal has a rule").1;
                let x = rng.gen::<f64>() * total;
                let pick = list.iter().position(|&(_, w)| x < w).unwrap_or(list.len() - 1);
                let syms = &self.compiled[list[pick].0];
                let first = self.expand(syms[0], depth + 1, rng)?;
                match syms.get(1) {
                    None => Some(first),
                    Some(&s) => {
                        let second = self.expand(s, depth + 1, rng)?;
                        Some(Node::Pair(Box::new(first), Box::new(second)))
                    }
                }
            }
        }
    }

    /// One sentence whose length lies in `min_len..=max_len`, resampling
    /// derivations until one fits.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        min_len: usize,
        max_len: usize,
    ) -> Result<GoldTree> {
        if min_len == 0 || min_len > max_len {
            return Err(Error::Parameter(format!(
                "invalid length range {min_len}..={max_len}"
            )));
        }
        for _ in 0..MAX_ATTEMPTS {
            let Some(root) = self.expand(Sym::Nonterminal(0), 0, rng) else {
                continue;
            };
            let mut words = Vec::new();
            let mut merges = Vec::new();
            let n = count_leaves(&root);
            if n < min_len || n > max_len {
                continue;
            }
            flatten(&root, n, &mut words, &mut merges);
            let tree = Bracketing::new(n, merges)?;
            return Ok(GoldTree { words, tree });
        }
        Err(Error::Config(format!(
            "no sentence of length {min_len}..={max_len} after {MAX_ATTEMPTS} attempts"
        )))
    }

    /// `count` sentences from a generator seeded with `seed`.
    pub fn generate_corpus(
        &self,
        count: usize,
        seed: u64,
        min_len: usize,
        max_len: usize,
    ) -> Result<Vec<GoldTree>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| self.generate(&mut rng, min_len, max_len))
            .collect()
    }
}

fn count_leaves(node: &Node) -> usize {
    match node {
        Node::Leaf(_) => 1,
        Node::Pair(l, r) => count_leaves(l) + count_leaves(r),
    }
}

/// Assigns leaf ids left to right and merge ids `n + k` in post-order.
fn flatten(node: &Node, n: usize, words: &mut Vec<String>, merges: &mut Vec<(usize, usize)>) -> usize {
    match node {
        Node::Leaf(w) => {
            words.push(w.clone());
            words.len() - 1
        }
        Node::Pair(l, r) => {
            let a = flatten(l, n, words, merges);
            let b = flatten(r, n, words, merges);
            merges.push((a, b));
            n + merges.len() - 1
        }
    }
}

/// Corpus text (one sentence per line) and gold-tree text (one bracketed
/// tree per line), each opening with `#` comment lines from `header`.
pub fn render_corpus(sentences: &[GoldTree], header: &[String]) -> (String, String) {
    let mut corpus = String::new();
    let mut gold = String::new();
    for h in header {
        let _ = writeln!(corpus, "# {h}");
        let _ = writeln!(gold, "# {h}");
    }
    for s in sentences {
        let _ = writeln!(corpus, "{}", s.words.join(" "));
        let _ = writeln!(gold, "{}", s.render());
    }
    (corpus, gold)
}

/// Read a gold-tree file: one bracketed tree per line; blank lines and lines
/// starting with `#` are skipped.
pub fn parse_gold_trees(text: &str) -> Result<Vec<GoldTree>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            parse_bracketed(l)
                .map(|(words, tree)| GoldTree { words, tree })
                .map_err(|e| Error::Format {
                    field: format!("gold tree line {}", i + 1),
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Drop `#` comment lines from corpus text.
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_grammar_shape() {
        let g = ToyGrammar::toy50();
        assert_eq!(g.num_words(), 50);
        assert_eq!(g.start(), "S");
        assert_eq!(g.word_classes()["cat"], "NOUN");
    }

    #[test]
    fn generation_is_deterministic_and_trees_round_trip() {
        let g = ToyGrammar::toy50();
        let a = g.generate_corpus(200, 5, 4, 7).unwrap();
        let b = g.generate_corpus(200, 5, 4, 7).unwrap();
        assert_eq!(a, b);
        let (_, gold) = render_corpus(&a, &["seed = 5".into()]);
        let back = parse_gold_trees(&gold).unwrap();
        assert_eq!(back.len(), a.len());
        for (x, y) in a.iter().zip(&back) {
            assert!((4..=7).contains(&x.words.len()));
            assert_eq!(x.words, y.words);
            assert!(x.tree.same_tree(&y.tree));
        }
    }

    #[test]
    fn unary_rules_collapse() {
        let g = ToyGrammar::parse(
            "class D: the\nclass N: cat\nclass V: runs\nrule S -> NP V\nrule NP -> D N\nrule V2 -> V\n",
        )
        .unwrap();
        let s = g.generate_corpus(1, 0, 1, 10).unwrap().remove(0);
        assert_eq!(s.render(), "((the cat) runs)");
        let g = ToyGrammar::parse("class N: cat\nrule S -> X\nrule X -> N\n").unwrap();
        assert_eq!(g.generate_corpus(1, 0, 1, 1).unwrap()[0].render(), "cat");
    }

    #[test]
    fn bad_grammars() {
        for text in [
            "class N: cat\nrule S -> N M\n",
            "class N: cat\nclass V: cat\nrule S -> N V\n",
            "class N: Cat\nrule S -> N N\n",
            "class N: cat\nrule S -> N N N\n",
            "class N: cat\nrule S -> N N @0\n",
            "class N: cat\nrule N -> N N\n",
            "class N: cat\n",
            "nonsense\n",
        ] {
            assert!(ToyGrammar::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn unreachable_lengths() {
        let g = ToyGrammar::parse("class N: cat\nrule S -> N N\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(g.generate(&mut rng, 3, 5), Err(Error::Config(_))));
    }
}
