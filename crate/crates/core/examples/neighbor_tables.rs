//! Nearest-neighbor tables for single words and for two-word phrases.

use raam::analysis::{nearest_words, phrase_table, render_tables, Metric, PhraseOptions, TableFormat};
use raam::corpus::build_vocab;
use raam::model::{InitOptions, Model};
use raam::toygrammar::ToyGrammar;
use raam::training::{train, TrainConfig, TrainData};

fn main() -> raam::Result<()> {
    let grammar = ToyGrammar::toy50();
    let text = grammar.generate_corpus(2000, 1, 1, 100)?;
    let tokens: Vec<&String> = text.iter().flat_map(|s| &s.words).collect();
    let vocab = build_vocab(tokens.iter().copied(), 1000, 1)?;
    let ids: Vec<Option<usize>> = tokens.iter().map(|t| vocab.id(t)).collect();

    let cfg = TrainConfig { epochs: 3, ..TrainConfig::toy() };
    let mut model = Model::init(vocab.len(), &InitOptions::new(cfg.dim, cfg.seed))?;
    let data = TrainData { unsupervised: Some(&ids), ..Default::default() };
    train(&mut model, &vocab, data, &cfg, |_, _| Ok(()))?;

    let words = ["cat", "red", "sees", "slowly"]
        .iter()
        .map(|q| nearest_words(&model, &vocab, q, 5, Metric::Euclidean))
        .collect::<raam::Result<Vec<_>>>()?;
    println!("{}", render_tables(&words, TableFormat::Text));

    let opts = PhraseOptions::new(2, 30, 5);
    let queries = [vec!["the", "dog"], vec!["sees", "a"]];
    let phrases = phrase_table(&model, &vocab, &opts, &queries)?;
    println!("{}", render_tables(&phrases, TableFormat::Text));
    Ok(())
}
