//! Learn to bracket from gold trees, then score greedy parses on held-out
//! sentences with unlabeled bracketing F1.

use raam::analysis::mean_bracket_f1;
use raam::corpus::build_vocab;
use raam::model::{InitOptions, Model};
use raam::parser::{Bracketing, Strategy};
use raam::toygrammar::{GoldTree, ToyGrammar};
use raam::training::{train, GoldSentence, TrainConfig, TrainData};

fn main() -> raam::Result<()> {
    let grammar = ToyGrammar::toy50();
    let train_trees = grammar.generate_corpus(10_000, 3, 4, 7)?;
    let held_trees = grammar.generate_corpus(1_000, 4, 4, 7)?;
    let vocab = build_vocab(train_trees.iter().flat_map(|s| &s.words), 1000, 1)?;
    let encode = |trees: &[GoldTree]| -> Vec<GoldSentence> {
        trees
            .iter()
            .map(|g| GoldSentence { words: vocab.encode(&g.words), tree: g.tree.clone() })
            .collect()
    };
    let (train_gold, held) = (encode(&train_trees), encode(&held_trees));

    let f1 = |m: &Model| -> raam::Result<f64> {
        let preds = held
            .iter()
            .map(|s| Ok(Strategy::default().parse(m, &s.words)?.tree.bracketing()))
            .collect::<raam::Result<Vec<Bracketing>>>()?;
        mean_bracket_f1(preds.iter().zip(held.iter().map(|s| &s.tree)))
    };

    for cost_augmented in [false, true] {
        let cfg = TrainConfig { dim: 20, epochs: 3, cost_augmented, ..TrainConfig::default() };
        let mut model = Model::init(vocab.len(), &InitOptions::new(cfg.dim, cfg.seed))?;
        println!("cost_augmented = {cost_augmented}");
        println!("  untrained F1 {:.4}", f1(&model)?);
        let data = TrainData { supervised: Some(&train_gold), ..Default::default() };
        train(&mut model, &vocab, data, &cfg, |e, m| {
            println!(
                "  epoch {}  hinge {:.4}  held-out F1 {:.4}",
                e.epoch,
                e.mean_supervised_loss.unwrap_or(0.0),
                f1(m)?
            );
            Ok(())
        })?;
    }

    let sample = &held_trees[0];
    println!("\ngold: {}", sample.render());
    Ok(())
}
