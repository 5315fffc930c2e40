//! Tokenize text, build a frequency-ranked vocabulary and cut training windows.

use raam::corpus::{build_vocab, segments, tokenize, OovPolicy};

const TEXT: &str = "The cat sat on the mat. The dog sat on the log in 1998. \
                    A cat and a dog met on the mat!";

fn main() -> raam::Result<()> {
    let tokens = tokenize(TEXT);
    println!("{} tokens: {}", tokens.len(), tokens.join(" "));

    let vocab = build_vocab(tokens.iter(), 8, 1)?;
    println!("\nvocabulary ({} entries, {} words):", vocab.len(), vocab.num_words());
    for (id, tok) in vocab.tokens().iter().enumerate() {
        println!("  {id:2}  {tok:<6} {}", vocab.freq(id).unwrap_or(0));
    }

    // Words outside the 8 kept entries break windows under the drop policy.
    let windows = segments(&tokens, &vocab, 3, OovPolicy::Drop)?;
    println!("\n{} windows of length 3, first five:", windows.len());
    for w in windows.iter().take(5) {
        println!("  {:?}", vocab.decode(&w.ids)?);
    }

    print!("\nvocabulary file:\n{}", vocab.to_file_string_with(&["built by the build_vocab example"]));
    Ok(())
}
