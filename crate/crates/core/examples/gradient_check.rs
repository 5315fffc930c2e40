//! Compare the analytic gradient of the ranking loss with central finite
//! differences on every parameter of a small model.

use raam::corpus::Segment;
use raam::model::{Block, InitOptions, Model};
use raam::parser::Bracketing;
use raam::training::{ranking_loss, CorruptedPair};

fn main() -> raam::Result<()> {
    let model = Model::init(6, &InitOptions::new(3, 42).with_bounds(1..=8))?;
    let pair = CorruptedPair {
        genuine: Segment::new(vec![2, 3, 4]),
        corrupted: Segment::new(vec![2, 5, 4]),
        position: 1,
        replacement: 5,
    };
    let shape = Bracketing::right_branching(3);
    let out = ranking_loss(&model, &pair, &shape, 1.0)?;
    println!("ranking loss {:.6}", out.loss);

    let h = 1e-5;
    let (mut worst_abs, mut worst_rel, mut checked) = (0.0f64, 0.0f64, 0);
    let mut probe = model.clone();
    for block in Block::ALL {
        for i in 0..block.len(model.dim(), model.vocab_size()) {
            let orig = probe.block(block)[i];
            probe.block_mut(block)[i] = orig + h;
            let up = ranking_loss(&probe, &pair, &shape, 1.0)?.loss;
            probe.block_mut(block)[i] = orig - h;
            let down = ranking_loss(&probe, &pair, &shape, 1.0)?.loss;
            probe.block_mut(block)[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = out.grads.get(block, i);
            let diff = (analytic - numeric).abs();
            worst_abs = worst_abs.max(diff);
            if diff > 1e-7 {
                worst_rel = worst_rel.max(diff / analytic.abs().max(numeric.abs()));
            }
            checked += 1;
        }
    }
    println!("{checked} partials checked");
    println!("largest absolute difference {worst_abs:.2e}");
    println!("largest relative error above the 1e-7 floor {worst_rel:.2e}");
    Ok(())
}
