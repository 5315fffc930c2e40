//! Forward passes through the three modules: association, saliency and
//! dissociation, composed over a small phrase.

use raam::corpus::Vocab;
use raam::model::init_model;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn main() -> raam::Result<()> {
    let vocab = Vocab::from_words(&["the", "old", "cat"])?;
    let model = init_model(20, &vocab, 7, None)?;
    let ids = vocab.encode(&["the", "old", "cat"]);

    let old_cat = model.associate(model.embedding(ids[1])?, model.embedding(ids[2])?)?;
    let phrase = model.associate(model.embedding(ids[0])?, &old_cat)?;
    println!("d = {}, |W| rows = {}", model.dim(), model.vocab_size());
    println!("saliency(old cat)       = {:+.5}", model.saliency(&old_cat)?);
    println!("saliency(the (old cat)) = {:+.5}", model.saliency(&phrase)?);

    let (left, right) = model.dissociate(&phrase)?;
    let target_l = model.embedding(ids[0])?;
    let err_l: Vec<f64> = left.iter().zip(target_l).map(|(a, b)| a - b).collect();
    let err_r: Vec<f64> = right.iter().zip(old_cat.iter()).map(|(a, b)| a - b).collect();
    println!(
        "untrained reconstruction error: left {:.4}, right {:.4}",
        norm(&err_l),
        norm(&err_r)
    );
    Ok(())
}
