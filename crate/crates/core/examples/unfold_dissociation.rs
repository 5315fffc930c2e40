//! Encode phrases into one vector, then split that vector back into its two
//! children by dissociation, labelling each half with its nearest word.

use raam::analysis::{label_unfolded, Metric};
use raam::corpus::{build_vocab, segments_from_ids, OovPolicy};
use raam::model::{InitOptions, Model};
use raam::parser::{unfold, Strategy};
use raam::toygrammar::ToyGrammar;
use raam::training::{train, TrainConfig, TrainData};

fn main() -> raam::Result<()> {
    let grammar = ToyGrammar::toy50();
    let text = grammar.generate_corpus(2000, 1, 1, 100)?;
    let tokens: Vec<&String> = text.iter().flat_map(|s| &s.words).collect();
    let vocab = build_vocab(tokens.iter().copied(), 1000, 1)?;
    let ids: Vec<Option<usize>> = tokens.iter().map(|t| vocab.id(t)).collect();
    println!("training on {} windows", segments_from_ids(&ids, 5, OovPolicy::Drop)?.len());

    let cfg = TrainConfig::toy();
    let mut model = Model::init(vocab.len(), &InitOptions::new(cfg.dim, cfg.seed))?;
    let data = TrainData { unsupervised: Some(&ids), ..Default::default() };
    train(&mut model, &vocab, data, &cfg, |_, _| Ok(()))?;

    for phrase in ["the cat", "a big dog", "the farmer sees a horse", "every child sleeps today"] {
        let words: Vec<&str> = phrase.split(' ').collect();
        let parsed = Strategy::default().parse(&model, &vocab.encode(&words))?;
        let tree = &parsed.tree;
        let root = tree.root();
        let (l, r) = root.children().expect("phrases have two or more words");
        let unfolded = unfold(&root.repr, &model, f64::NEG_INFINITY, 1);
        let halves = unfolded.leaves();
        let dl = Metric::Euclidean.distance(halves[0], &tree.node(l).repr);
        let dr = Metric::Euclidean.distance(halves[1], &tree.node(r).repr);
        println!(
            "{:<32} unfolds to {:<18} child errors {dl:.3} {dr:.3}",
            tree.render(&words),
            label_unfolded(&unfolded, &model, &vocab, Metric::Euclidean)
        );
    }
    Ok(())
}
