//! Degenerate and hand-checkable cases, shared by the `degenerate` test target
//! and the acceptance runner.

use std::process::Command;

use raam::analysis::{bracket_f1_shapes, nearest_words, phrase_table, Metric, PhraseOptions};
use raam::corpus::{build_vocab, segments, tokenize, OovPolicy, Segment, Vocab};
use raam::model::{
    backward, export_embeddings, init_model, load_pretrained, read_header, save_model, Block,
    GradientSet, InitOptions, Model, Repr, Tape,
};
use raam::parser::{
    enumerate_bracketings, exhaustive_parse, greedy_parse, shift_reduce_beam, unfold, Adjacency,
    Bracketing, Span, Stm,
};
use raam::training::{
    corrupt, ranking_loss, recon_loss, sgd_apply, structured_hinge, train, CorruptedPair,
    TrainConfig, TrainData,
};
use raam::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

pub type Case = (&'static str, fn() -> Result<(), String>);

macro_rules! ensure {
    ($cond:expr) => {
        if !$cond {
            return Err(format!("{} (line {})", stringify!($cond), line!()));
        }
    };
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn toks(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

fn seeded(vocab: usize, dim: usize, seed: u64) -> Model {
    Model::init(vocab, &InitOptions::new(dim, seed).with_bounds(1..=512)).unwrap()
}

pub fn all() -> Vec<Case> {
    vec![
        ("tokenize empty input", || {
            ensure!(tokenize("").is_empty());
            Ok(())
        }),
        ("tokenize lowercases and splits punctuation", || {
            ensure!(tokenize("The cat sat.") == toks(&["the", "cat", "sat", "."]));
            ensure!(tokenize("1998 ps2") == toks(&["<num>", "ps2"]));
            Ok(())
        }),
        ("vocab counts", || {
            let v = build_vocab(["a", "a", "b"].iter(), 10, 1).map_err(e)?;
            ensure!(v.len() == 4 && v.id("a") == Some(2) && v.id("b") == Some(3));
            ensure!(v.freq(2) == Some(2) && v.freq(3) == Some(1));
            Ok(())
        }),
        ("vocab frequency ties break lexicographically", || {
            let v = build_vocab(["y", "x"].iter(), 1, 1).map_err(e)?;
            ensure!(v.num_words() == 1 && v.id("x").is_some());
            Ok(())
        }),
        ("windows of length n", || {
            let v = build_vocab(["a", "b", "c", "d"].iter(), 10, 1).map_err(e)?;
            let s = segments(&["a", "b", "c"], &v, 3, OovPolicy::Drop).map_err(e)?;
            ensure!(s.len() == 1 && s[0].ids.len() == 3);
            let s = segments(&["a", "b", "c", "d"], &v, 3, OovPolicy::Drop).map_err(e)?;
            ensure!(s.len() == 2 && s[1].ids == v.encode(&["b", "c", "d"]));
            Ok(())
        }),
        ("init bounds at d=50", || {
            let v = Vocab::from_words(&["a", "b", "c"]).map_err(e)?;
            let m = init_model(50, &v, 3, None).map_err(e)?;
            ensure!(m.block(Block::Embed).iter().all(|x| x.abs() < 1.0 / 50f64.sqrt()));
            Ok(())
        }),
        ("same seed gives identical models", || {
            ensure!(seeded(7, 5, 9).to_bytes() == seeded(7, 5, 9).to_bytes());
            Ok(())
        }),
        ("pretrained dimension mismatch", || {
            let dir = TempDir::new().map_err(e)?;
            let v = Vocab::from_words(&["a", "b"]).map_err(e)?;
            let src = init_model(50, &v, 1, None).map_err(e)?;
            let path = dir.path().join("emb.tsv");
            std::fs::write(&path, export_embeddings(&src, &v).map_err(e)?).map_err(e)?;
            let mut dst = init_model(60, &v, 1, None).map_err(e)?;
            ensure!(load_pretrained(&mut dst, &v, &path).is_err());
            Ok(())
        }),
        ("embedding lookup is the stored row and pure", || {
            let m = seeded(4, 3, 2);
            ensure!(&*m.embed(0).map_err(e)? == &m.block(Block::Embed)[..3]);
            ensure!(m.embed(2).map_err(e)? == m.embed(2).map_err(e)?);
            Ok(())
        }),
        ("zero association", || {
            let m = Model::zeros(3, 2);
            ensure!(m.associate(&[1.0, 2.0, 3.0], &[-4.0, 0.5, 9.0]).map_err(e)?.iter().all(|&x| x == 0.0));
            Ok(())
        }),
        ("association symmetry cancels", || {
            let mut m = Model::zeros(1, 1);
            m.block_mut(Block::AssocW).copy_from_slice(&[1.0, 1.0]);
            ensure!(&*m.associate(&[0.5], &[-0.5]).map_err(e)? == &[0.0]);
            Ok(())
        }),
        ("zero and projection saliency", || {
            let mut m = Model::zeros(3, 1);
            ensure!(m.saliency(&[4.0, 5.0, 6.0]).map_err(e)? == 0.0);
            m.block_mut(Block::SalW)[0] = 1.0;
            ensure!(m.saliency(&[0.3, 7.0, -2.0]).map_err(e)? == 0.3);
            Ok(())
        }),
        ("zero and stacked-identity dissociation", || {
            let mut m = Model::zeros(2, 1);
            let (a, b) = m.dissociate(&[1.0, 2.0]).map_err(e)?;
            ensure!(a.iter().chain(b.iter()).all(|&x| x == 0.0));
            m.block_mut(Block::DissocW).copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
            let (a, b) = m.dissociate(&[0.7, -1.5]).map_err(e)?;
            ensure!(&*a == &[0.7, -1.5] && &*b == &[0.7, -1.5]);
            Ok(())
        }),
        ("saliency of an embedding has linear gradients", || {
            let m = seeded(3, 4, 5);
            let mut tape = Tape::new(4);
            let x = tape.embed(&m, 1).map_err(e)?;
            let s = tape.saliency(&m, x).map_err(e)?;
            let g = backward(&m, &tape, &[(s, vec![1.0])]).map_err(e)?;
            for j in 0..4 {
                ensure!(g.get(Block::SalW, j) == m.embedding(1).map_err(e)?[j]);
            }
            ensure!(g.get(Block::SalB, 0) == 1.0);
            Ok(())
        }),
        ("constant loss has no gradient", || {
            let m = seeded(3, 2, 5);
            let mut tape = Tape::new(2);
            let x = tape.input(&[1.0, 2.0]).map_err(e)?;
            let g = backward(&m, &tape, &[(x, vec![1.0, 1.0])]).map_err(e)?;
            ensure!(g.is_empty());
            Ok(())
        }),
        ("model file round trip, truncation and header", || {
            let dir = TempDir::new().map_err(e)?;
            let path = dir.path().join("m.bin");
            let m = seeded(5, 50, 4);
            save_model(&m, &path).map_err(e)?;
            let back = raam::model::load_model(&path).map_err(e)?;
            ensure!(back.to_bytes() == m.to_bytes());
            ensure!(read_header(&path).map_err(e)?.dim == 50);
            let bytes = m.to_bytes();
            ensure!(matches!(Model::from_bytes(&bytes[..bytes.len() / 2]), Err(Error::Format { .. })));
            Ok(())
        }),
        ("memory insert ordering and overlap", || {
            let mut stm = Stm::new(Adjacency::AdjacentOnly);
            stm.insert(Repr::zeros(2), Span::unit(1), 1).map_err(e)?;
            ensure!(stm.len() == 1);
            stm.insert(Repr::zeros(2), Span::unit(0), 0).map_err(e)?;
            ensure!(stm.items()[0].span == Span::unit(0) && stm.items()[1].span == Span::unit(1));
            let mut stm = Stm::new(Adjacency::AdjacentOnly);
            stm.insert(Repr::zeros(2), Span::interval(1, 3), 0).map_err(e)?;
            ensure!(matches!(stm.insert(Repr::zeros(2), Span::interval(0, 2), 1), Err(Error::Span(_))));
            Ok(())
        }),
        ("memory reduce", || {
            let m = Model::zeros(2, 3);
            let mut stm = Stm::new(Adjacency::AdjacentOnly);
            stm.insert(Repr::zeros(2), Span::unit(0), 0).map_err(e)?;
            ensure!(stm.reduce(0, 0, &m, 2).is_err());
            stm.insert(Repr::zeros(2), Span::unit(1), 1).map_err(e)?;
            stm.reduce(0, 1, &m, 2).map_err(e)?;
            ensure!(stm.len() == 1 && stm.items()[0].span == Span::interval(0, 2));
            ensure!(stm.reduce(0, 1, &m, 3).is_err());
            Ok(())
        }),
        ("two words have one tree", || {
            let m = seeded(4, 3, 6);
            let g = greedy_parse(&m, &[2, 3], Adjacency::AdjacentOnly).map_err(e)?;
            let s = m.saliency(&m.associate(m.embedding(2).map_err(e)?, m.embedding(3).map_err(e)?).map_err(e)?).map_err(e)?;
            ensure!(g.total_score == s);
            for w in [1, 2, 5] {
                ensure!(shift_reduce_beam(&m, &[2, 3], w).map_err(e)?.tree == g.tree);
            }
            Ok(())
        }),
        ("single word is a leaf", || {
            let m = seeded(4, 3, 6);
            let g = greedy_parse(&m, &[2], Adjacency::AdjacentOnly).map_err(e)?;
            ensure!(g.tree.n_leaves() == 1 && g.total_score == 0.0);
            Ok(())
        }),
        ("zero model ties break left", || {
            let m = Model::zeros(2, 5);
            let g = greedy_parse(&m, &[1, 2, 3], Adjacency::AdjacentOnly).map_err(e)?;
            ensure!(g.tree.bracketing().same_tree(&Bracketing::left_branching(3)));
            for n in 2..=6 {
                let words: Vec<usize> = (0..n).map(|i| i % 5).collect();
                let r = exhaustive_parse(&m, &words).map_err(e)?;
                ensure!(r.total_score == 0.0);
                ensure!(r.tree.bracketing().same_tree(&enumerate_bracketings(n).map_err(e)?[0]));
            }
            Ok(())
        }),
        ("five leaves have fourteen trees", || {
            ensure!(enumerate_bracketings(5).map_err(e)?.len() == 14);
            Ok(())
        }),
        ("unfold at depth zero or infinite threshold", || {
            let m = seeded(3, 4, 1);
            ensure!(unfold(&[0.1, 0.2, 0.3, 0.4], &m, 0.0, 0).depth() == 0);
            ensure!(unfold(&[0.1, 0.2, 0.3, 0.4], &m, f64::INFINITY, 5).depth() == 0);
            Ok(())
        }),
        ("only one replacement word available", || {
            let v = Vocab::from_words(&["a", "b"]).map_err(e)?;
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..50 {
                let p = corrupt(&Segment::new(vec![2, 2, 2]), &v, None, &mut rng).map_err(e)?;
                ensure!(p.replacement == 3);
                ensure!((0..3).filter(|&i| p.corrupted.ids[i] != p.genuine.ids[i]).count() == 1);
            }
            Ok(())
        }),
        ("ranking hinge region and two-word loss", || {
            let mut m = Model::zeros(1, 4);
            m.embedding_mut(2).map_err(e)?[0] = 1.0;
            m.block_mut(Block::AssocW).copy_from_slice(&[1.0, 1.0]);
            m.block_mut(Block::SalW)[0] = 10.0;
            let pair = CorruptedPair {
                genuine: Segment::new(vec![2, 2]),
                corrupted: Segment::new(vec![2, 3]),
                position: 1,
                replacement: 3,
            };
            let shape = Bracketing::left_branching(2);
            let out = ranking_loss(&m, &pair, &shape, 1.0).map_err(e)?;
            ensure!(out.loss == 0.0 && out.grads.is_empty());
            let out = ranking_loss(&m, &pair, &shape, 20.0).map_err(e)?;
            let want = 20.0 - 10.0 * 2f64.tanh() + 10.0 * 1f64.tanh();
            ensure!((out.loss - want).abs() < 1e-12);
            Ok(())
        }),
        ("reconstruction with zero weight or a leaf", || {
            let m = seeded(4, 3, 2);
            let out = recon_loss(&m, &[2, 3, 1], &Bracketing::left_branching(3), 0.0).map_err(e)?;
            ensure!(out.loss == 0.0 && out.grads.is_empty());
            let out = recon_loss(&m, &[2], &Bracketing::left_branching(1), 1.0).map_err(e)?;
            ensure!(out.loss == 0.0);
            Ok(())
        }),
        ("reconstruction is zero for an exact inverse", || {
            let mut m = Model::zeros(1, 3);
            m.embedding_mut(1).map_err(e)?[0] = 0.3;
            m.embedding_mut(2).map_err(e)?[0] = 0.3;
            m.block_mut(Block::AssocW).copy_from_slice(&[1.0, 0.0]);
            let p = 0.3f64.tanh();
            m.block_mut(Block::DissocW).copy_from_slice(&[0.3 / p, 0.3 / p]);
            let out = recon_loss(&m, &[1, 2], &Bracketing::left_branching(2), 1.0).map_err(e)?;
            ensure!(out.loss < 1e-24);
            Ok(())
        }),
        ("supervised hinge at identity and in the hinge region", || {
            let m = seeded(5, 3, 4);
            let gold = Bracketing::left_branching(3);
            let out = structured_hinge(&m, &[2, 3, 4], &gold, &gold, 1.0).map_err(e)?;
            ensure!(out.loss == 1.0 && out.grads.is_empty());
            let mut m = Model::zeros(1, 5);
            m.embedding_mut(2).map_err(e)?[0] = 2.0;
            m.embedding_mut(3).map_err(e)?[0] = 2.0;
            m.embedding_mut(4).map_err(e)?[0] = -2.0;
            m.block_mut(Block::AssocW).copy_from_slice(&[1.0, 1.0]);
            m.block_mut(Block::SalW)[0] = 4.0;
            // Right-branching scores about 3.86, left-branching about 0.95.
            let right = Bracketing::right_branching(3);
            let out = structured_hinge(&m, &[2, 3, 4], &right, &gold, 1.0).map_err(e)?;
            ensure!(out.loss == 0.0 && out.grads.is_empty());
            Ok(())
        }),
        ("sgd with empty gradients, zero rate and by hand", || {
            let m0 = seeded(4, 3, 8);
            let mut m = m0.clone();
            sgd_apply(&mut m, &GradientSet::for_model(&m0), 0.5).map_err(e)?;
            ensure!(m.to_bytes() == m0.to_bytes());
            let out = recon_loss(&m0, &[1, 2, 3], &Bracketing::left_branching(3), 1.0).map_err(e)?;
            sgd_apply(&mut m, &out.grads, 0.0).map_err(e)?;
            ensure!(m.to_bytes() == m0.to_bytes());
            let mut one = Model::zeros(1, 1);
            one.block_mut(Block::SalB)[0] = 1.0;
            let mut tape = Tape::new(1);
            let x = tape.input(&[0.0]).map_err(e)?;
            let s = tape.saliency(&one, x).map_err(e)?;
            let g = backward(&one, &tape, &[(s, vec![0.5])]).map_err(e)?;
            sgd_apply(&mut one, &g, 0.1).map_err(e)?;
            ensure!(one.block(Block::SalB)[0] == 0.95);
            Ok(())
        }),
        ("zero epochs and repeated runs", || {
            let v = Vocab::from_words(&["a", "b", "c", "d"]).map_err(e)?;
            let ids: Vec<Option<usize>> = [2, 3, 4, 5, 2, 3, 4, 5].iter().map(|&i| Some(i)).collect();
            let data = TrainData { unsupervised: Some(&ids), ..Default::default() };
            let m0 = seeded(v.len(), 4, 1);
            let mut m = m0.clone();
            let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
            let r = train(&mut m, &v, data, &cfg, |_, _| Ok(())).map_err(e)?;
            ensure!(r.epochs.is_empty() && m.to_bytes() == m0.to_bytes());
            let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
            let run = || {
                let mut m = m0.clone();
                let r = train(&mut m, &v, data, &cfg, |_, _| Ok(())).unwrap();
                r.epochs.iter().map(|x| x.mean_ranking_loss).collect::<Vec<_>>()
            };
            ensure!(run() == run());
            Ok(())
        }),
        ("twin embeddings are nearest at distance zero", || {
            let v = Vocab::from_words(&["a", "b", "c"]).map_err(e)?;
            let mut m = seeded(v.len(), 3, 2);
            let row = m.embedding(2).map_err(e)?.to_vec();
            m.embedding_mut(4).map_err(e)?.copy_from_slice(&row);
            let t = nearest_words(&m, &v, "a", 1, Metric::Euclidean).map_err(e)?;
            ensure!(t.neighbors[0].tokens == ["c"] && t.neighbors[0].distance == 0.0);
            Ok(())
        }),
        ("one-word phrases are word neighbors among the top words", || {
            let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
            let v = Vocab::from_words(&words).map_err(e)?;
            let m = seeded(v.len(), 4, 3);
            let t = phrase_table(&m, &v, &PhraseOptions::new(1, 12, 3), &[vec!["w5"]]).map_err(e)?;
            let w = nearest_words(&m, &v, "w5", 13, Metric::Euclidean).map_err(e)?;
            let restricted: Vec<_> = w.neighbors.into_iter().filter(|n| n.tokens[0].starts_with('w')).take(3).collect();
            ensure!(t[0].neighbors == restricted);
            Ok(())
        }),
        ("bracket F1 identity and disjoint", || {
            let l = Bracketing::left_branching(3);
            let r = Bracketing::right_branching(3);
            let s = bracket_f1_shapes(&l, &l).map_err(e)?;
            ensure!((s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0));
            let s = bracket_f1_shapes(&l, &r).map_err(e)?;
            ensure!((s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0));
            Ok(())
        }),
        ("cli degenerate cases", cli_cases),
    ]
}

fn cli_cases() -> Result<(), String> {
    let dir = TempDir::new().map_err(e)?;
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let run = |args: &[&str]| Command::new(env!("CARGO_BIN_EXE_raam")).args(args).output().unwrap();

    let missing = run(&["vocab", &p("absent.txt"), "-o", &p("v.txt")]);
    ensure!(missing.status.code() == Some(3));
    ensure!(String::from_utf8_lossy(&missing.stderr).contains("absent.txt"));

    for tag in ["1", "2"] {
        let out = run(&["toygen", "--sentences", "200", "--seed", "4", "--corpus", &p(&format!("c{tag}")), "--gold", &p(&format!("g{tag}"))]);
        ensure!(out.status.success());
    }
    ensure!(std::fs::read(p("c1")).map_err(e)? == std::fs::read(p("c2")).map_err(e)?);
    let gold = std::fs::read_to_string(p("g1")).map_err(e)?;
    let trees = raam::toygrammar::parse_gold_trees(&gold).map_err(e)?;
    let m0 = Model::zeros(2, 100);
    for t in &trees {
        let ids: Vec<usize> = (0..t.words.len()).map(|i| i % 100).collect();
        raam::parser::ParseTree::build(&m0, &ids, &t.tree).map_err(e)?.validate(&m0).map_err(e)?;
    }

    ensure!(run(&["vocab", &p("c1"), "-o", &p("v.txt"), "--max-size", "2"]).status.success());
    ensure!(Vocab::load(p("v.txt")).map_err(e)?.num_words() == 2);
    ensure!(run(&["vocab", &p("c1"), "-o", &p("v.txt")]).status.success());
    let vocab = Vocab::load(p("v.txt")).map_err(e)?;

    let train = |out: &str| run(&["train", "--vocab", &p("v.txt"), "--corpus", &p("c1"), "-o", &p(out), "--dim", "20", "--seed", "3", "--epochs", "0"]);
    ensure!(train("z.bin").status.success());
    ensure!(std::fs::read(p("z.bin")).map_err(e)? == init_model(20, &vocab, 3, None).map_err(e)?.to_bytes());
    ensure!(std::fs::read_to_string(p("z.bin.report.jsonl")).map_err(e)?.is_empty());
    let two = |out: &str| run(&["train", "--vocab", &p("v.txt"), "--corpus", &p("c1"), "-o", &p(out), "--dim", "20", "--seed", "3", "--epochs", "1"]);
    ensure!(two("a.bin").status.success() && two("b.bin").status.success());
    ensure!(std::fs::read(p("a.bin")).map_err(e)? == std::fs::read(p("b.bin")).map_err(e)?);

    std::fs::write(p("in.txt"), "the cat\nthe cat sees a dog in the old house today slowly\n").map_err(e)?;
    let out = run(&["parse", "--model", &p("a.bin"), "--vocab", &p("v.txt"), "--input", &p("in.txt")]);
    ensure!(String::from_utf8_lossy(&out.stdout).lines().next() == Some("(the cat)"));
    let out = run(&["parse", "--model", &p("a.bin"), "--vocab", &p("v.txt"), "--input", &p("in.txt"), "--strategy", "exhaustive"]);
    ensure!(out.status.code() == Some(2));

    let out = run(&["neighbors", "--model", &p("a.bin"), "--vocab", &p("v.txt"), "zebra"]);
    ensure!(!out.status.success());

    let out = run(&["eval", "--model", &p("a.bin"), "--vocab", &p("v.txt"), "--gold", &p("g1"), "--predicted", &p("g1")]);
    ensure!(String::from_utf8_lossy(&out.stdout).contains("bracket_f1\t1.000000"));
    Ok(())
}

/// Runs every case, returning the names and messages of failures.
pub fn failures() -> Vec<(String, String)> {
    all()
        .into_iter()
        .filter_map(|(name, f)| f().err().map(|msg| (name.to_string(), msg)))
        .collect()
}
