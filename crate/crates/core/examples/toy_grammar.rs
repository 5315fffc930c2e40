//! Generate sentences with gold trees from the bundled 50-word grammar.

use raam::toygrammar::{render_corpus, ToyGrammar};

fn main() -> raam::Result<()> {
    let grammar = ToyGrammar::toy50();
    println!("start symbol {}, {} words", grammar.start(), grammar.num_words());
    for (class, words) in grammar.classes() {
        println!("  {class:<6} {}", words.join(" "));
    }

    let sentences = grammar.generate_corpus(5, 2024, 3, 12)?;
    let (corpus, gold) = render_corpus(&sentences, &["seed = 2024".to_string()]);
    print!("\ncorpus:\n{corpus}\ngold trees:\n{gold}");
    Ok(())
}
