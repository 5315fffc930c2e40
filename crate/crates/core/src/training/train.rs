use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::TrainConfig;
use super::eval::{mean_reconstruction_error, ranking_accuracy};
use super::steps::{corrupt, random_bracketing, ranking_loss, recon_loss, sgd_apply, sup_step};
use crate::corpus::{segments_from_ids, Segment, Vocab, NUM_SPECIALS};
use crate::error::{Error, Result};
use crate::model::{GradientSet, Model};
use crate::parser::Bracketing;

/// A sentence with its gold bracketing.
#[derive(Clone, Debug, PartialEq)]
pub struct GoldSentence {
    pub words: Vec<usize>,
    pub tree: Bracketing,
}

/// Inputs to [`train`]. At least one of the two training streams must be
/// present.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrainData<'a> {
    /// Encoded running text; `None` marks out-of-vocabulary tokens.
    pub unsupervised: Option<&'a [Option<usize>]>,
    pub supervised: Option<&'a [GoldSentence]>,
    /// Held-out windows for the per-epoch ranking accuracy and reconstruction
    /// error.
    pub heldout: Option<&'a [Segment]>,
}

/// Per-epoch summary, written as one JSON line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub stage: usize,
    pub seg_len: usize,
    pub mean_ranking_loss: Option<f64>,
    pub mean_reconstruction_loss: Option<f64>,
    pub mean_supervised_loss: Option<f64>,
    pub heldout_ranking_accuracy: Option<f64>,
    pub heldout_reconstruction_error: Option<f64>,
    pub wall_time_secs: f64,
    pub seed: u64,
}

impl EpochReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
}

enum Item {
    Unsup(usize),
    Sup(usize),
}

/// Seed offset for held-out corruption draws, so evaluation never consumes
/// the training stream's randomness.
const EVAL_SEED_OFFSET: u64 = 0x5eed_e7a1;

/// Stochastic gradient descent over the curriculum.
///
/// Each unsupervised item brackets a window, draws `cfg.corruptions`
/// corrupted copies, and takes one SGD step on the sum of their ranking
/// losses plus the reconstruction loss of the genuine tree. Each supervised
/// item takes one step on the structured hinge. Items of both kinds are
/// shuffled together every epoch. `on_epoch` runs after every epoch with the
/// updated model.
pub fn train(
    model: &mut Model,
    vocab: &Vocab,
    data: TrainData<'_>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochReport, &Model) -> Result<()>,
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.unsupervised.is_none() && data.supervised.is_none() {
        return Err(Error::Config(
            "training needs an unsupervised corpus, a supervised corpus, or both".into(),
        ));
    }
    if model.vocab_size() != vocab.len() {
        return Err(Error::Structure(format!(
            "model covers {} words, vocabulary has {}",
            model.vocab_size(),
            vocab.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = TrainReport::default();
    if cfg.epochs == 0 {
        return Ok(report);
    }
    let start = Instant::now();
    let mut epoch = 0;

    for (stage_idx, stage) in cfg.curriculum.iter().enumerate() {
        let limit = stage.id_limit(vocab.len());
        let lr = stage.learning_rate.unwrap_or(cfg.learning_rate);
        let cap = Some(limit - NUM_SPECIALS);
        let unsup: Vec<Segment> = match data.unsupervised {
            Some(ids) => {
                let segs: Vec<Segment> = segments_from_ids(ids, stage.seg_len, cfg.oov_policy)?
                    .into_iter()
                    .filter(|s| s.within(limit))
                    .collect();
                if segs.is_empty() {
                    return Err(Error::Config(format!(
                        "curriculum stage {stage_idx} (length {}, cap {:?}) has no unsupervised segments",
                        stage.seg_len, stage.vocab_cap
                    )));
                }
                segs
            }
            None => Vec::new(),
        };
        let sup: Vec<&GoldSentence> = match data.supervised {
            Some(sents) => {
                let kept: Vec<&GoldSentence> = sents
                    .iter()
                    .filter(|s| s.words.iter().all(|&w| w < limit))
                    .collect();
                if kept.is_empty() {
                    return Err(Error::Config(format!(
                        "curriculum stage {stage_idx} (cap {:?}) has no supervised sentences",
                        stage.vocab_cap
                    )));
                }
                kept
            }
            None => Vec::new(),
        };
        let heldout: Option<Vec<Segment>> = data.heldout.map(|h| {
            h.iter()
                .filter(|s| s.within(limit))
                .cloned()
                .collect()
        });

        let mut items: Vec<Item> = (0..unsup.len())
            .map(Item::Unsup)
            .chain((0..sup.len()).map(Item::Sup))
            .collect();

        for _ in 0..cfg.epochs {
            items.shuffle(&mut rng);
            let (mut rank_sum, mut rec_sum, mut sup_sum) = (0.0, 0.0, 0.0);
            for item in &items {
                match *item {
                    Item::Unsup(i) => {
                        let seg = &unsup[i];
                        let shape = if cfg.random_initial_brackets && stage_idx == 0 {
                            random_bracketing(seg.len(), &mut rng)
                        } else {
                            cfg.strategy.parse(model, &seg.ids)?.tree.bracketing()
                        };
                        let mut grads = GradientSet::for_model(model);
                        let mut rank = 0.0;
                        for _ in 0..cfg.corruptions {
                            let pair = corrupt(seg, vocab, cap, &mut rng)?;
                            let out = ranking_loss(model, &pair, &shape, cfg.margin)?;
                            rank += out.loss;
                            grads.add_scaled(&out.grads, 1.0)?;
                        }
                        let rec = recon_loss(model, &seg.ids, &shape, cfg.recon_weight)?;
                        grads.add_scaled(&rec.grads, 1.0)?;
                        check_finite(rank + rec.loss, &grads, epoch)?;
                        sgd_apply(model, &grads, lr)?;
                        rank_sum += rank / cfg.corruptions as f64;
                        rec_sum += rec.loss;
                    }
                    Item::Sup(j) => {
                        let s = sup[j];
                        let out = sup_step(model, &s.words, &s.tree, cfg.strategy, cfg.margin, cfg.cost_augmented)?;
                        check_finite(out.loss, &out.grads, epoch)?;
                        sgd_apply(model, &out.grads, lr)?;
                        sup_sum += out.loss;
                    }
                }
            }

            let mean = |sum: f64, count: usize| (count > 0).then(|| sum / count as f64);
            let (acc, rec_err) = match heldout.as_deref() {
                Some(h) if !h.is_empty() => {
                    let mut eval_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ EVAL_SEED_OFFSET);
                    (
                        Some(ranking_accuracy(model, h, vocab, cap, cfg.strategy, &mut eval_rng)?),
                        Some(mean_reconstruction_error(model, h, cfg.strategy)?),
                    )
                }
                _ => (None, None),
            };
            let entry = EpochReport {
                epoch,
                stage: stage_idx,
                seg_len: stage.seg_len,
                mean_ranking_loss: mean(rank_sum, unsup.len()),
                mean_reconstruction_loss: mean(rec_sum, unsup.len()),
                mean_supervised_loss: mean(sup_sum, sup.len()),
                heldout_ranking_accuracy: acc,
                heldout_reconstruction_error: rec_err,
                wall_time_secs: start.elapsed().as_secs_f64(),
                seed: cfg.seed,
            };
            on_epoch(&entry, model)?;
            report.epochs.push(entry);
            epoch += 1;
        }
    }
    Ok(report)
}

fn check_finite(loss: f64, grads: &GradientSet, epoch: usize) -> Result<()> {
    if !loss.is_finite() || !grads.is_finite() {
        return Err(Error::NumericFailure(format!(
            "loss {loss} in epoch {epoch}; try a smaller learning rate"
        )));
    }
    Ok(())
}
