//! Text ingestion: tokenization, frequency-ranked vocabularies and fixed-length
//! training windows.
//!
//! Word ids are dense. The two special tokens always occupy ids 0 and 1, and the
//! remaining tokens follow in order of descending corpus frequency, so "the top
//! `m` words" is simply the id range `NUM_SPECIALS..NUM_SPECIALS + m`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UNK_TOKEN: &str = "<unk>";
pub const NUM_TOKEN: &str = "<num>";
pub const UNK_ID: usize = 0;
pub const NUM_ID: usize = 1;
pub const NUM_SPECIALS: usize = 2;

const VOCAB_MAGIC: &str = "#raam-vocab v1";
const VOCAB_SPECIALS: &str = "#specials UNK NUM";

/// Split text into lowercased tokens.
///
/// Runs of alphanumeric characters form words; every other non-whitespace
/// character is a token of its own. Tokens made only of digits become
/// [`NUM_TOKEN`].
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            word.extend(c.to_lowercase());
            continue;
        }
        flush_word(&mut word, &mut out);
        if !c.is_whitespace() {
            out.push(c.to_lowercase().collect());
        }
    }
    flush_word(&mut word, &mut out);
    out
}

/// Like [`tokenize`], replacing invalid UTF-8 sequences instead of failing.
pub fn tokenize_bytes(bytes: &[u8]) -> Vec<String> {
    tokenize(&String::from_utf8_lossy(bytes))
}

fn flush_word(word: &mut String, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    if word.chars().all(|c| c.is_numeric()) {
        out.push(NUM_TOKEN.to_string());
        word.clear();
    } else {
        out.push(std::mem::take(word));
    }
}

/// Read and tokenize a UTF-8 text file.
pub fn tokenize_file(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(tokenize_bytes(&bytes))
}

/// Token/id mapping with corpus counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    freq: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from tokens already in id order. The first two
    /// entries must be the special tokens.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self> {
        if entries.len() < NUM_SPECIALS
            || entries[UNK_ID].0 != UNK_TOKEN
            || entries[NUM_ID].0 != NUM_TOKEN
        {
            return Err(Error::format(
                "specials",
                format!("ids 0 and 1 must be {UNK_TOKEN} and {NUM_TOKEN}"),
            ));
        }
        let mut index = HashMap::with_capacity(entries.len());
        let mut tokens = Vec::with_capacity(entries.len());
        let mut freq = Vec::with_capacity(entries.len());
        for (id, (tok, count)) in entries.into_iter().enumerate() {
            if index.insert(tok.clone(), id).is_some() {
                return Err(Error::format("tokens", format!("duplicate token {tok:?}")));
            }
            tokens.push(tok);
            freq.push(count);
        }
        Ok(Vocab {
            tokens,
            freq,
            index,
        })
    }

    /// A vocabulary over the given words (in rank order), all with count 0.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        let mut entries = vec![(UNK_TOKEN.to_string(), 0), (NUM_TOKEN.to_string(), 0)];
        entries.extend(words.iter().map(|w| (w.as_ref().to_string(), 0)));
        Vocab::from_entries(entries)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of non-special tokens.
    pub fn num_words(&self) -> usize {
        self.tokens.len() - NUM_SPECIALS
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn freq(&self, id: usize) -> Option<u64> {
        self.freq.get(id).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// 1-based frequency rank of a non-special word.
    pub fn rank(&self, id: usize) -> Option<usize> {
        (id >= NUM_SPECIALS && id < self.len()).then(|| id - NUM_SPECIALS + 1)
    }

    pub fn is_special(id: usize) -> bool {
        id < NUM_SPECIALS
    }

    /// Map tokens to ids, sending unknown tokens to UNK.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.id(t.as_ref()).unwrap_or(UNK_ID))
            .collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Result<Vec<&str>> {
        ids.iter()
            .map(|&id| {
                self.token(id).ok_or(Error::Index {
                    id,
                    size: self.len(),
                })
            })
            .collect()
    }

    pub fn to_file_string(&self) -> String {
        self.to_file_string_with::<&str>(&[])
    }

    /// File text with `# ` comment lines after the header. Tokens never
    /// contain spaces, so such lines cannot clash with entries.
    pub fn to_file_string_with<S: AsRef<str>>(&self, comments: &[S]) -> String {
        let mut s = String::new();
        s.push_str(VOCAB_MAGIC);
        s.push('\n');
        s.push_str(VOCAB_SPECIALS);
        s.push('\n');
        for c in comments {
            let _ = writeln!(s, "# {}", c.as_ref());
        }
        for (tok, count) in self.tokens.iter().zip(&self.freq) {
            let _ = writeln!(s, "{tok}\t{count}");
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let mut next = |what: &str| -> Result<Option<String>> {
            lines
                .next()
                .transpose()
                .map_err(|e| Error::format(what.to_string(), e.to_string()))
        };
        match next("header")? {
            Some(l) if l == VOCAB_MAGIC => {}
            other => {
                return Err(Error::format(
                    "header",
                    format!("expected {VOCAB_MAGIC:?}, found {other:?}"),
                ))
            }
        }
        match next("header")? {
            Some(l) if l == VOCAB_SPECIALS => {}
            other => {
                return Err(Error::format(
                    "specials",
                    format!("expected {VOCAB_SPECIALS:?}, found {other:?}"),
                ))
            }
        }
        let mut entries = Vec::new();
        while let Some(line) = next("entry")? {
            if line.starts_with("# ") {
                continue;
            }
            let (tok, count) = line.split_once('\t').ok_or_else(|| {
                Error::format(
                    format!("line {}", entries.len() + 3),
                    "expected token<TAB>frequency",
                )
            })?;
            let count = count.trim().parse::<u64>().map_err(|e| {
                Error::format(format!("line {}", entries.len() + 3), e.to_string())
            })?;
            entries.push((tok.to_string(), count));
        }
        Vocab::from_entries(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Vocab::parse(std::io::BufReader::new(file))
    }
}

/// Count tokens and keep the `max_size` most frequent with at least `min_freq`
/// occurrences. Ties in frequency go to the lexicographically smaller token.
///
/// `max_size` counts ordinary words; the two specials are always added.
pub fn build_vocab<I, S>(tokens: I, max_size: usize, min_freq: u64) -> Result<Vocab>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if max_size == 0 {
        return Err(Error::Config("vocabulary max_size must be at least 1".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut total = 0u64;
    for tok in tokens {
        let tok = tok.as_ref();
        total += 1;
        match counts.get_mut(tok) {
            Some(c) => *c += 1,
            None => {
                counts.insert(tok.to_string(), 1);
            }
        }
    }
    let num_count = counts.remove(NUM_TOKEN).unwrap_or(0);
    counts.remove(UNK_TOKEN);

    let mut ranked: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_freq)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size);

    let kept: u64 = ranked.iter().map(|(_, c)| c).sum::<u64>() + num_count;
    let mut entries = vec![
        (UNK_TOKEN.to_string(), total - kept),
        (NUM_TOKEN.to_string(), num_count),
    ];
    entries.extend(ranked);
    Vocab::from_entries(entries)
}

/// What to do with windows that contain out-of-vocabulary tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    /// Skip any window containing an unknown token.
    #[default]
    Drop,
    /// Replace unknown tokens with UNK.
    Unk,
}

impl std::str::FromStr for OovPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(OovPolicy::Drop),
            "unk" => Ok(OovPolicy::Unk),
            _ => Err(Error::Config(format!("unknown oov policy {s:?}"))),
        }
    }
}

/// A fixed-length window of word ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Segment {
    pub ids: Vec<usize>,
    /// Token offset of the window's first word in its source stream.
    pub offset: usize,
}

impl Segment {
    pub fn new(ids: Vec<usize>) -> Self {
        Segment { ids, offset: 0 }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// True when every id lies below `cap` (a curriculum vocabulary limit
    /// expressed in ids, specials included).
    pub fn within(&self, cap: usize) -> bool {
        self.ids.iter().all(|&id| id < cap)
    }
}

/// Stride-1 windows of length `n` over a token stream.
pub fn segments<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocab,
    n: usize,
    policy: OovPolicy,
) -> Result<Vec<Segment>> {
    let ids: Vec<Option<usize>> = tokens.iter().map(|t| vocab.id(t.as_ref())).collect();
    segments_from_ids(&ids, n, policy)
}

/// Windows over pre-encoded ids, where `None` marks an unknown token.
pub fn segments_from_ids(ids: &[Option<usize>], n: usize, policy: OovPolicy) -> Result<Vec<Segment>> {
    if n < 2 {
        return Err(Error::Parameter(format!("segment length must be >= 2, got {n}")));
    }
    if ids.len() < n {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(ids.len() - n + 1);
    // Index of the most recent OOV token, for O(1) window checks under Drop.
    let mut last_oov: Option<usize> = None;
    for (i, id) in ids.iter().enumerate().take(n - 1) {
        if id.is_none() {
            last_oov = Some(i);
        }
    }
    for start in 0..=ids.len() - n {
        let end = start + n;
        if ids[end - 1].is_none() {
            last_oov = Some(end - 1);
        }
        let window = &ids[start..end];
        match policy {
            OovPolicy::Drop => {
                if matches!(last_oov, Some(p) if p >= start) {
                    continue;
                }
                out.push(Segment {
                    ids: window.iter().map(|id| id.unwrap()).collect(),
                    offset: start,
                });
            }
            OovPolicy::Unk => out.push(Segment {
                ids: window.iter().map(|id| id.unwrap_or(UNK_ID)).collect(),
                offset: start,
            }),
        }
    }
    Ok(out)
}
