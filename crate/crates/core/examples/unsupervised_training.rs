//! The toy run: rank genuine windows above corrupted ones while learning to
//! reconstruct children, with the bundled config.
//!
//! ```text
//! cargo run --release --example unsupervised_training [EPOCHS_PER_STAGE] [MODEL_OUT]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use raam::analysis::{class_structure, Metric};
use raam::corpus::{build_vocab, segments_from_ids, OovPolicy};
use raam::model::{save_model, InitOptions, Model};
use raam::parser::Strategy;
use raam::toygrammar::ToyGrammar;
use raam::training::{mean_reconstruction_error, ranking_accuracy, train, TrainConfig, TrainData};

fn main() -> raam::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = TrainConfig::toy();
    if let Some(e) = args.next() {
        cfg.epochs = e.parse().expect("EPOCHS_PER_STAGE must be an integer");
    }
    let out = args.next();

    let grammar = ToyGrammar::toy50();
    let train_text = grammar.generate_corpus(5000, 1, 1, 100)?;
    let held_text = grammar.generate_corpus(600, 2, 1, 100)?;
    let tokens: Vec<&String> = train_text.iter().flat_map(|s| &s.words).collect();
    let vocab = build_vocab(tokens.iter().copied(), 1000, 1)?;
    let ids: Vec<Option<usize>> = tokens.iter().take(20_004).map(|t| vocab.id(t)).collect();
    let held_ids: Vec<Option<usize>> =
        held_text.iter().flat_map(|s| &s.words).take(2_004).map(|t| vocab.id(t)).collect();
    let heldout = segments_from_ids(&held_ids, 5, OovPolicy::Drop)?;

    let mut model = Model::init(vocab.len(), &InitOptions::new(cfg.dim, cfg.seed))?;
    let acc = |m: &Model| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        ranking_accuracy(m, &heldout, &vocab, None, Strategy::default(), &mut rng)
    };
    let (acc0, rec0) = (acc(&model)?, mean_reconstruction_error(&model, &heldout, Strategy::default())?);
    println!("untrained: accuracy {acc0:.3}, reconstruction {rec0:.4}");

    let data = TrainData { unsupervised: Some(&ids), supervised: None, heldout: Some(&heldout) };
    train(&mut model, &vocab, data, &cfg, |e, _| {
        println!(
            "epoch {:2} stage {}  ranking {:.4}  recon {:.4}  held-out acc {:.3}  {:.0}s",
            e.epoch,
            e.stage,
            e.mean_ranking_loss.unwrap_or(0.0),
            e.mean_reconstruction_loss.unwrap_or(0.0),
            e.heldout_ranking_accuracy.unwrap_or(0.0),
            e.wall_time_secs
        );
        Ok(())
    })?;

    let rec = mean_reconstruction_error(&model, &heldout, Strategy::default())?;
    println!("trained: accuracy {:.3}, reconstruction {rec:.4} ({:.3} of initial)", acc(&model)?, rec / rec0);

    let classes = grammar.word_classes();
    let labels: Vec<(usize, &str)> =
        (2..vocab.len()).map(|id| (id, classes[vocab.tokens()[id].as_str()])).collect();
    let s = class_structure(&model, &labels, Metric::Euclidean)?;
    println!(
        "class structure: intra {:.3}, inter {:.3}, 1-NN same class {:.0}%",
        s.mean_intra,
        s.mean_inter,
        100.0 * s.nn_same_class
    );

    if let Some(path) = out {
        save_model(&model, &path)?;
        vocab.save(format!("{path}.vocab"))?;
        println!("saved {path} and {path}.vocab");
    }
    Ok(())
}
