use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{OovPolicy, NUM_SPECIALS};
use crate::error::{Error, Result};
use crate::model::DEFAULT_DIM;
use crate::parser::Strategy;

/// One curriculum stage: window length and how many of the most frequent
/// words are admitted (`None` admits the whole vocabulary).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage {
    pub seg_len: usize,
    pub vocab_cap: Option<usize>,
    /// Overrides the global learning rate for this stage.
    pub learning_rate: Option<f64>,
}

impl Stage {
    pub fn new(seg_len: usize, vocab_cap: Option<usize>) -> Self {
        Stage { seg_len, vocab_cap, learning_rate: None }
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.learning_rate = Some(lr);
        self
    }

    /// Exclusive upper bound on admitted word ids for a vocabulary of
    /// `vocab_len` entries.
    pub fn id_limit(&self, vocab_len: usize) -> usize {
        match self.vocab_cap {
            Some(cap) => (NUM_SPECIALS + cap).min(vocab_len),
            None => vocab_len,
        }
    }
}

/// Bundled configuration for the toy-grammar run.
pub const TOY_CONFIG: &str = include_str!("../../data/toy.cfg");

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub margin: f64,
    pub recon_weight: f64,
    /// Epochs run in each curriculum stage.
    pub epochs: usize,
    pub seed: u64,
    pub curriculum: Vec<Stage>,
    /// Bracketing used for genuine segments and supervised predictions.
    pub strategy: Strategy,
    /// Bracket genuine segments uniformly at random during the first stage.
    pub random_initial_brackets: bool,
    pub corruptions: usize,
    /// Cost-augmented search for supervised predictions (see
    /// [`crate::training::sup_step`]).
    pub cost_augmented: bool,
    /// Dimension of freshly initialized models.
    pub dim: usize,
    pub oov_policy: OovPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            margin: 1.0,
            recon_weight: 1.0,
            epochs: 10,
            seed: 0,
            curriculum: vec![Stage::new(5, None)],
            strategy: Strategy::default(),
            random_initial_brackets: false,
            corruptions: 1,
            cost_augmented: false,
            dim: DEFAULT_DIM,
            oov_policy: OovPolicy::Drop,
        }
    }
}

impl TrainConfig {
    pub fn toy() -> Self {
        Self::parse(TOY_CONFIG).expect("bundled config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad(format!("margin must be positive, got {}", self.margin));
        }
        if !(self.recon_weight >= 0.0 && self.recon_weight.is_finite()) {
            return bad(format!("recon_weight must be >= 0, got {}", self.recon_weight));
        }
        if self.corruptions == 0 {
            return bad("corruptions must be at least 1".into());
        }
        if self.curriculum.is_empty() {
            return bad("curriculum needs at least one stage".into());
        }
        for (i, pair) in self.curriculum.windows(2).enumerate() {
            let cap = |s: &Stage| s.vocab_cap.unwrap_or(usize::MAX);
            if pair[1].seg_len < pair[0].seg_len || cap(&pair[1]) < cap(&pair[0]) {
                return bad(format!(
                    "curriculum stage {} shrinks segment length or vocabulary",
                    i + 1
                ));
            }
        }
        for s in &self.curriculum {
            if let Some(lr) = s.learning_rate {
                if !(lr > 0.0 && lr.is_finite()) {
                    return bad(format!("stage learning rate must be positive, got {lr}"));
                }
            }
        }
        if let Some(s) = self.curriculum.iter().find(|s| s.seg_len < 2) {
            return bad(format!("segment length must be >= 2, got {}", s.seg_len));
        }
        if let Strategy::Beam(0) = self.strategy {
            return bad("beam width must be at least 1".into());
        }
        Ok(())
    }

    /// Parse a flat `key = value` file. Unknown keys are errors; `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainConfig::parse(&text)
    }

    /// Set one field from its textual form, using the config-file key names.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse::<T>().map_err(|_| format!("invalid value {v:?} for {key}"))
        }
        match key {
            "learning_rate" => self.learning_rate = num(key, value)?,
            "margin" => self.margin = num(key, value)?,
            "recon_weight" => self.recon_weight = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "corruptions" => self.corruptions = num(key, value)?,
            "dim" => self.dim = num(key, value)?,
            "random_initial_brackets" => self.random_initial_brackets = num(key, value)?,
            "cost_augmented" => self.cost_augmented = num(key, value)?,
            "strategy" => self.strategy = value.parse().map_err(|e: Error| e.to_string())?,
            "oov_policy" => self.oov_policy = value.parse().map_err(|e: Error| e.to_string())?,
            "curriculum" => self.curriculum = parse_curriculum(value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Render in the config-file format; `parse` reads it back unchanged.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(s, "margin = {}", self.margin);
        let _ = writeln!(s, "recon_weight = {}", self.recon_weight);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "curriculum = {}", render_curriculum(&self.curriculum));
        let _ = writeln!(s, "strategy = {}", self.strategy);
        let _ = writeln!(s, "random_initial_brackets = {}", self.random_initial_brackets);
        let _ = writeln!(s, "corruptions = {}", self.corruptions);
        let _ = writeln!(s, "cost_augmented = {}", self.cost_augmented);
        let _ = writeln!(s, "dim = {}", self.dim);
        let policy = match self.oov_policy {
            OovPolicy::Drop => "drop",
            OovPolicy::Unk => "unk",
        };
        let _ = writeln!(s, "oov_policy = {policy}");
        s
    }
}

/// `"3:20, 4:35, 5:all@0.001"` -> stages of (length, vocabulary cap,
/// optional learning rate).
fn parse_curriculum(value: &str) -> std::result::Result<Vec<Stage>, String> {
    value
        .split(',')
        .map(|part| {
            let part = part.trim();
            let (part, learning_rate) = match part.split_once('@') {
                Some((p, lr)) => (
                    p.trim(),
                    Some(
                        lr.trim()
                            .parse::<f64>()
                            .map_err(|_| format!("invalid learning rate in {part:?}"))?,
                    ),
                ),
                None => (part, None),
            };
            let (n, cap) = part
                .split_once(':')
                .ok_or_else(|| format!("curriculum stage {part:?} must be LEN:CAP"))?;
            let seg_len = n
                .trim()
                .parse()
                .map_err(|_| format!("invalid segment length in {part:?}"))?;
            let vocab_cap = match cap.trim() {
                "all" => None,
                c => Some(
                    c.parse()
                        .map_err(|_| format!("invalid vocabulary cap in {part:?}"))?,
                ),
            };
            Ok(Stage { seg_len, vocab_cap, learning_rate })
        })
        .collect()
}

fn render_curriculum(stages: &[Stage]) -> String {
    stages
        .iter()
        .map(|s| {
            let cap = match s.vocab_cap {
                Some(c) => format!("{}:{c}", s.seg_len),
                None => format!("{}:all", s.seg_len),
            };
            match s.learning_rate {
                Some(lr) => format!("{cap}@{lr}"),
                None => cap,
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}
