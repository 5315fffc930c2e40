//! Binary model files and TSV embedding import/export.
//!
//! Layout (little-endian): `b"RAAM"`, `u32` version, `u32` d, `u32` V, then
//! `W`, `A_w`, `A_b`, `D_w`, `D_b`, `R_w`, `R_b` as row-major `f64`.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{Block, Model};
use crate::corpus::Vocab;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RAAM";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelHeader {
    pub version: u32,
    pub dim: usize,
    pub vocab_size: usize,
}

impl Model {
    pub fn to_bytes(&self) -> Vec<u8> {
        let n: usize = Block::ALL
            .iter()
            .map(|b| b.len(self.dim, self.vocab_size))
            .sum();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.vocab_size as u32).to_le_bytes());
        for block in Block::ALL {
            for v in self.block(block) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = parse_header(bytes)?;
        let mut model = Model::zeros(header.dim, header.vocab_size);
        let mut pos = HEADER_LEN;
        for block in Block::ALL {
            let len = block.len(header.dim, header.vocab_size);
            let end = pos + 8 * len;
            if bytes.len() < end {
                return Err(Error::format(
                    block_name(block),
                    format!(
                        "file truncated: need {end} bytes for d={}, V={}, found {}",
                        header.dim,
                        header.vocab_size,
                        bytes.len()
                    ),
                ));
            }
            for (dst, chunk) in model
                .block_mut(block)
                .iter_mut()
                .zip(bytes[pos..end].chunks_exact(8))
            {
                *dst = f64::from_le_bytes(chunk.try_into().unwrap());
            }
            pos = end;
        }
        if pos != bytes.len() {
            return Err(Error::format(
                "length",
                format!(
                    "{} trailing bytes after parameters for d={}, V={}",
                    bytes.len() - pos,
                    header.dim,
                    header.vocab_size
                ),
            ));
        }
        Ok(model)
    }
}

fn block_name(block: Block) -> &'static str {
    match block {
        Block::Embed => "W",
        Block::AssocW => "A_w",
        Block::AssocB => "A_b",
        Block::DissocW => "D_w",
        Block::DissocB => "D_b",
        Block::SalW => "R_w",
        Block::SalB => "R_b",
    }
}

fn parse_header(bytes: &[u8]) -> Result<ModelHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            "header",
            format!("file truncated: {} bytes, header needs {HEADER_LEN}", bytes.len()),
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(
            "magic",
            format!("expected \"RAAM\", found {:?}", &bytes[..4]),
        ));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != FORMAT_VERSION {
        return Err(Error::format(
            "version",
            format!("unsupported version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    let dim = word(8) as usize;
    if dim == 0 {
        return Err(Error::format("d", "dimension must be positive"));
    }
    Ok(ModelHeader {
        version,
        dim,
        vocab_size: word(12) as usize,
    })
}

/// Writes atomically: the bytes go to a sibling temporary file that is then
/// renamed over `path`.
pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, model.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Model::from_bytes(&bytes)
}

/// Reads only the fixed-size header.
pub fn read_header(path: impl AsRef<Path>) -> Result<ModelHeader> {
    use std::io::Read;
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(HEADER_LEN);
    std::fs::File::open(path)
        .and_then(|f| f.take(HEADER_LEN as u64).read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    parse_header(&buf)
}

/// Embedding table as `token<TAB>v1<TAB>...<TAB>vd` lines in id order.
pub fn export_embeddings(model: &Model, vocab: &Vocab) -> Result<String> {
    if vocab.len() != model.vocab_size() {
        return Err(Error::Structure(format!(
            "vocabulary has {} entries, model has {}",
            vocab.len(),
            model.vocab_size()
        )));
    }
    let mut s = String::new();
    for (id, tok) in vocab.tokens().iter().enumerate() {
        s.push_str(tok);
        for v in model.embedding(id)? {
            let _ = write!(s, "\t{v}");
        }
        s.push('\n');
    }
    Ok(s)
}

/// Overwrite embedding rows with vectors read from a TSV embedding file.
/// Tokens absent from the vocabulary are ignored; vocabulary words absent from
/// the file keep their current rows. Returns the number of rows replaced.
pub fn load_pretrained(model: &mut Model, vocab: &Vocab, path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut replaced = 0;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let token = fields.next().unwrap_or_default();
        let values = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::format(format!("line {}", lineno + 1), e.to_string()))?;
        if values.len() != model.dim() {
            return Err(Error::format(
                "d",
                format!(
                    "pretrained embeddings have dimension {}, model has dimension {}",
                    values.len(),
                    model.dim()
                ),
            ));
        }
        if let Some(id) = vocab.id(token) {
            model.embedding_mut(id)?.copy_from_slice(&values);
            replaced += 1;
        }
    }
    Ok(replaced)
}
