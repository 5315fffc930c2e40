//! Bracket one segment with every strategy and compare total saliency.

use raam::corpus::Vocab;
use raam::model::init_model;
use raam::parser::{exhaustive_search, Strategy};

fn main() -> raam::Result<()> {
    let words = ["the", "big", "dog", "sees", "a", "cat"];
    let vocab = Vocab::from_words(&words)?;
    let model = init_model(20, &vocab, 3, None)?;
    let ids = vocab.encode(&words);

    for spec in ["greedy", "greedy:any", "beam:1", "beam:4", "beam:42", "exhaustive"] {
        let strategy: Strategy = spec.parse()?;
        let result = strategy.parse(&model, &ids)?;
        println!("{spec:<11} {:+.5}  {}", result.total_score, result.tree.render(&words));
    }
    let (_, count) = exhaustive_search(&model, &ids)?;
    println!("exhaustive search scored {count} trees");
    Ok(())
}
