//! On-disk formats.
//!
//! Embeddings (`EMB1`), all integers and floats little-endian:
//!
//! ```text
//! offset 0   b"EMB1"
//! offset 4   u32 rows (N)
//! offset 8   u32 cols (d)
//! offset 12  N * d f32, row-major
//! ```
//!
//! Scores are plain text with one decimal value per line, line `i` belonging
//! to sample `i`. Evaluation records are CSV with the header
//! `label,toxicity,ppl_wiki,ppl_lambada`.

use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::EvalRecord;

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
pub const EMB_HEADER_LEN: usize = 12;
pub const EVAL_HEADER: [&str; 4] = ["label", "toxicity", "ppl_wiki", "ppl_lambada"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbHeader {
    pub rows: u32,
    pub cols: u32,
}

impl EmbHeader {
    pub fn payload_len(&self) -> u64 {
        self.rows as u64 * self.cols as u64 * 4
    }
}

/// Wraps a reader and counts the bytes pulled through it.
pub struct CountingReader<R> {
    inner: R,
    count: u64,
}

impl<R: Read> CountingReader<R> {
    pub fn new(inner: R) -> Self {
        CountingReader { inner, count: 0 }
    }

    pub fn bytes_read(&self) -> u64 {
        self.count
    }
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.count += n as u64;
        Ok(n)
    }
}

/// Reads as many bytes as are available up to `buf.len()`.
fn read_up_to<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Reads and validates the 12-byte header, consuming nothing beyond it.
pub fn read_emb_header<R: Read>(r: &mut R) -> Result<EmbHeader> {
    let mut buf = [0u8; EMB_HEADER_LEN];
    let got = read_up_to(r, &mut buf)?;
    if got < 4 || &buf[..4] != EMB_MAGIC {
        if got >= 4 {
            return Err(Error::FormatAt {
                offset: 0,
                message: format!("bad magic {:?}, expected \"EMB1\"", &buf[..4]),
            });
        }
        return Err(Error::FormatAt {
            offset: got as u64,
            message: "file ends inside the magic bytes".into(),
        });
    }
    if got < EMB_HEADER_LEN {
        return Err(Error::FormatAt {
            offset: got as u64,
            message: format!("header truncated: expected {EMB_HEADER_LEN} bytes, found {got}"),
        });
    }
    let rows = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    let cols = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    if rows == 0 {
        return Err(Error::FormatAt {
            offset: 4,
            message: "row count is zero".into(),
        });
    }
    if cols == 0 {
        return Err(Error::FormatAt {
            offset: 8,
            message: "column count is zero".into(),
        });
    }
    Ok(EmbHeader { rows, cols })
}

/// Parses a complete `EMB1` stream, widening the payload to `f64`.
pub fn read_embeddings<R: Read>(r: &mut R) -> Result<Matrix> {
    let header = read_emb_header(r)?;
    let expected = header.payload_len();
    let mut payload = Vec::new();
    r.take(expected).read_to_end(&mut payload)?;
    if (payload.len() as u64) < expected {
        return Err(Error::FormatAt {
            offset: EMB_HEADER_LEN as u64 + payload.len() as u64,
            message: format!(
                "payload truncated: expected {expected} bytes for {}x{} floats, found {}",
                header.rows,
                header.cols,
                payload.len()
            ),
        });
    }
    let mut probe = [0u8; 1];
    if read_up_to(r, &mut probe)? > 0 {
        return Err(Error::FormatAt {
            offset: EMB_HEADER_LEN as u64 + expected,
            message: "trailing bytes after payload".into(),
        });
    }
    let cols = header.cols as usize;
    let mut data = Vec::with_capacity(payload.len() / 4);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::FormatAt {
                offset: (EMB_HEADER_LEN + i * 4) as u64,
                message: format!("non-finite value {v} at row {}, col {}", i / cols, i % cols),
            });
        }
        data.push(v as f64);
    }
    Matrix::new(header.rows as usize, cols, data)
}

/// Encodes `m` as `EMB1`, narrowing every entry to `f32`.
pub fn encode_embeddings(m: &Matrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::input("too many rows for EMB1"))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::input("too many columns for EMB1"))?;
    let mut out = Vec::with_capacity(EMB_HEADER_LEN + m.as_slice().len() * 4);
    out.extend_from_slice(EMB_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for (i, &v) in m.as_slice().iter().enumerate() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::input(format!(
                "value {v} at row {}, col {} overflows f32",
                i / m.cols(),
                i % m.cols()
            )));
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

pub fn load_embeddings(path: &Path) -> Result<Matrix> {
    let mut r = BufReader::new(File::open(path)?);
    read_embeddings(&mut r)
}

pub fn save_embeddings(path: &Path, m: &Matrix) -> Result<()> {
    write_atomic(path, &encode_embeddings(m)?)
}

/// Parses one score per line; blank lines are only allowed at the end.
pub fn parse_scores(text: &str) -> Result<Vec<f64>> {
    let body = text.trim_end();
    if body.is_empty() {
        return Err(Error::FormatLine {
            line: 1,
            message: "score file is empty".into(),
        });
    }
    body.lines()
        .enumerate()
        .map(|(i, line)| {
            let t = line.trim();
            let v: f64 = t.parse().map_err(|_| Error::FormatLine {
                line: i + 1,
                message: format!("cannot parse {t:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::FormatLine {
                    line: i + 1,
                    message: format!("score {t} is not finite"),
                });
            }
            Ok(v)
        })
        .collect()
}

pub fn load_scores(path: &Path) -> Result<Vec<f64>> {
    parse_scores(&fs::read_to_string(path)?)
}

/// Loads scores and checks there is exactly one per sample.
pub fn load_scores_for(path: &Path, n: usize) -> Result<Vec<f64>> {
    let scores = load_scores(path)?;
    if scores.len() != n {
        return Err(Error::input(format!(
            "{} has {} scores but the embeddings have {n} samples",
            path.display(),
            scores.len()
        )));
    }
    Ok(scores)
}

pub fn parse_evals<R: Read>(r: R) -> Result<Vec<EvalRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let header = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header.iter().collect::<Vec<_>>() != EVAL_HEADER {
        return Err(Error::FormatLine {
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                EVAL_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != 4 {
            return Err(Error::FormatLine {
                line,
                message: format!("expected 4 fields, found {}", row.len()),
            });
        }
        let num = |k: usize| -> Result<f64> {
            row[k].parse::<f64>().map_err(|_| Error::FormatLine {
                line,
                message: format!("{} value {:?} is not a number", EVAL_HEADER[k], &row[k]),
            })
        };
        let record = EvalRecord {
            label: row[0].to_string(),
            toxicity: num(1)?,
            ppl_wiki: num(2)?,
            ppl_lambada: num(3)?,
        };
        record.validate().map_err(|e| Error::FormatLine {
            line,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    Error::FormatLine {
        line,
        message: e.to_string(),
    }
}

pub fn load_evals(path: &Path) -> Result<Vec<EvalRecord>> {
    parse_evals(File::open(path)?)
}

/// Loads an evaluation file that must hold exactly one record.
pub fn load_single_eval(path: &Path) -> Result<EvalRecord> {
    let mut records = load_evals(path)?;
    if records.len() != 1 {
        return Err(Error::input(format!(
            "{} must contain exactly one evaluation record, found {}",
            path.display(),
            records.len()
        )));
    }
    Ok(records.remove(0))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
