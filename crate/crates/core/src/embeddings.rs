//! Word-vector models in the word2vec text and binary formats, with exact
//! cosine nearest-neighbour search.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("file is not valid UTF-8")]
    NotUtf8,
    #[error("model has no vectors")]
    Empty,
    #[error("file ends before all vectors were read")]
    TruncatedFile,
    #[error("cannot parse binary header: {0}")]
    HeaderParseError(String),
    #[error("vector dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vec<String>,
    rows: HashMap<String, usize>,
    matrix: Vec<f32>,
    norms: Vec<f64>,
    dim: usize,
    duplicates_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NeighborList {
    pub entries: Vec<(String, f64)>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(w, _)| w.as_str())
    }
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

/// Cosine similarity, `0.0` when either vector has zero norm, clamped to
/// `[-1, 1]`.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimMismatch(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

impl EmbeddingModel {
    /// Builds a model from `(word, vector)` pairs. Later duplicates of a word
    /// are skipped and counted.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        let mut builder = Builder::default();
        for (i, (word, vec)) in pairs.into_iter().enumerate() {
            builder.push(word, &vec, i + 1)?;
        }
        builder.finish()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn duplicates_skipped(&self) -> usize {
        self.duplicates_skipped
    }

    pub fn contains(&self, word: &str) -> bool {
        self.rows.contains_key(word)
    }

    pub fn row_of(&self, word: &str) -> Option<usize> {
        self.rows.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.row_of(word).map(|r| self.row(r))
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.matrix[r * self.dim..(r + 1) * self.dim]
    }

    /// The `k` most cosine-similar vocabulary words to `word`, excluding the
    /// word itself. Ties keep vocabulary order. Unknown words give an empty
    /// list.
    pub fn top_k_neighbors(&self, word: &str, k: usize) -> NeighborList {
        let Some(q) = self.row_of(word) else {
            return NeighborList::default();
        };
        let qv = self.row(q);
        let qn = self.norms[q];
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .filter(|&r| r != q)
            .map(|r| {
                let denom = qn * self.norms[r];
                let sim = if denom == 0.0 {
                    0.0
                } else {
                    (dot(qv, self.row(r)) / denom).clamp(-1.0, 1.0)
                };
                (sim, r)
            })
            .collect();
        let k = k.min(scored.len());
        if k == 0 {
            return NeighborList::default();
        }
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_rank);
            scored.truncate(k);
        }
        scored.sort_unstable_by(by_rank);
        NeighborList {
            entries: scored
                .into_iter()
                .map(|(s, r)| (self.vocab[r].clone(), s))
                .collect(),
        }
    }

    pub fn write_text_format(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (r, word) in self.vocab.iter().enumerate() {
            out.write_all(word.as_bytes())?;
            for x in self.row(r) {
                // `{}` on f32 prints the shortest string that round-trips.
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_binary_format(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (r, word) in self.vocab.iter().enumerate() {
            out.write_all(word.as_bytes())?;
            out.write_all(b" ")?;
            for x in self.row(r) {
                out.write_all(&x.to_le_bytes())?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Default)]
struct Builder {
    vocab: Vec<String>,
    rows: HashMap<String, usize>,
    matrix: Vec<f32>,
    dim: Option<usize>,
    duplicates: usize,
}

impl Builder {
    fn push(&mut self, word: String, vec: &[f32], line: usize) -> Result<(), EmbeddingError> {
        match self.dim {
            None => {
                if vec.is_empty() {
                    return Err(EmbeddingError::DimensionMismatch { line, expected: 1, found: 0 });
                }
                self.dim = Some(vec.len());
            }
            Some(d) if d != vec.len() => {
                return Err(EmbeddingError::DimensionMismatch { line, expected: d, found: vec.len() });
            }
            _ => {}
        }
        if self.rows.contains_key(&word) {
            self.duplicates += 1;
            return Ok(());
        }
        self.rows.insert(word.clone(), self.vocab.len());
        self.vocab.push(word);
        self.matrix.extend_from_slice(vec);
        Ok(())
    }

    fn finish(self) -> Result<EmbeddingModel, EmbeddingError> {
        let dim = match self.dim {
            Some(d) if !self.vocab.is_empty() => d,
            _ => return Err(EmbeddingError::Empty),
        };
        if self.duplicates > 0 {
            log::warn!("skipped {} duplicate word vectors", self.duplicates);
        }
        let norms = self.matrix.chunks_exact(dim).map(norm).collect();
        Ok(EmbeddingModel {
            vocab: self.vocab,
            rows: self.rows,
            matrix: self.matrix,
            norms,
            dim,
            duplicates_skipped: self.duplicates,
        })
    }
}

/// Loads the word2vec text format. The `vocab_size dim` header is optional;
/// without it the dimension comes from the first vector.
pub fn load_text_format(path: impl AsRef<Path>) -> Result<EmbeddingModel, EmbeddingError> {
    let reader = BufReader::new(File::open(path)?);
    let mut builder = Builder::default();
    let mut header_vocab: Option<usize> = None;
    for (i, line) in reader.split(b'\n').enumerate() {
        let line_no = i + 1;
        let bytes = line?;
        let line = std::str::from_utf8(&bytes).map_err(|_| EmbeddingError::NotUtf8)?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap_or_default();
        let rest: Vec<&str> = fields.collect();
        if i == 0 && rest.len() == 1 {
            if let (Ok(n), Ok(d)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                if n == 0 {
                    return Err(EmbeddingError::Empty);
                }
                header_vocab = Some(n);
                builder.dim = Some(d);
                continue;
            }
        }
        let vec = rest
            .iter()
            .map(|f| f.parse::<f32>())
            .collect::<Result<Vec<f32>, _>>()
            .map_err(|e| EmbeddingError::Parse { line: line_no, reason: e.to_string() })?;
        builder.push(word.to_string(), &vec, line_no)?;
    }
    if let Some(n) = header_vocab {
        let seen = builder.vocab.len() + builder.duplicates;
        if n != seen {
            log::warn!("header announces {n} vectors, file holds {seen}");
        }
    }
    builder.finish()
}

fn read_exact_or_truncated(reader: &mut impl Read, buf: &mut [u8]) -> Result<(), EmbeddingError> {
    reader.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => EmbeddingError::TruncatedFile,
        _ => EmbeddingError::Io(e),
    })
}

/// Loads the word2vec binary format: an ASCII `vocab_size dim\n` header, then
/// for each word its UTF-8 bytes, a space and `dim` little-endian `f32`s.
/// Whitespace between records (the reference tool writes `\n`) is skipped.
pub fn load_binary_format(path: impl AsRef<Path>) -> Result<EmbeddingModel, EmbeddingError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header)?;
    if header.last() != Some(&b'\n') {
        return Err(EmbeddingError::HeaderParseError("missing newline".into()));
    }
    let header = std::str::from_utf8(&header)
        .map_err(|_| EmbeddingError::HeaderParseError("not ASCII".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let [n, d] = parts[..] else {
        return Err(EmbeddingError::HeaderParseError(header.trim().to_string()));
    };
    let n: usize = n.parse().map_err(|_| EmbeddingError::HeaderParseError(header.trim().to_string()))?;
    let d: usize = d.parse().map_err(|_| EmbeddingError::HeaderParseError(header.trim().to_string()))?;
    if n == 0 {
        return Err(EmbeddingError::Empty);
    }
    if d == 0 {
        return Err(EmbeddingError::HeaderParseError("zero dimension".into()));
    }
    let mut builder = Builder { dim: Some(d), ..Default::default() };
    let mut payload = vec![0u8; 4 * d];
    let mut vec = vec![0f32; d];
    for i in 0..n {
        let mut word = Vec::new();
        loop {
            let mut b = [0u8; 1];
            read_exact_or_truncated(&mut reader, &mut b)?;
            match b[0] {
                b' ' if !word.is_empty() => break,
                b'\n' | b'\r' | b' ' if word.is_empty() => continue,
                c => word.push(c),
            }
        }
        let word = String::from_utf8(word).map_err(|_| EmbeddingError::NotUtf8)?;
        read_exact_or_truncated(&mut reader, &mut payload)?;
        for (x, chunk) in vec.iter_mut().zip(payload.chunks_exact(4)) {
            *x = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        builder.push(word, &vec, i + 2)?;
    }
    builder.finish()
}

/// Picks the loader from the extension: `.bin` is binary, anything else text.
pub fn load_auto(path: impl AsRef<Path>) -> Result<EmbeddingModel, EmbeddingError> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "bin") {
        load_binary_format(path)
    } else {
        load_text_format(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(content: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content).unwrap();
        f
    }

    #[test]
    fn text_with_header() {
        let f = write(b"3 4\na 1 0 0 0\nb 0 1 0 0\nc 0 0 1 0.5\n");
        let m = load_text_format(f.path()).unwrap();
        assert_eq!((m.len(), m.dim()), (3, 4));
        assert_eq!(m.vector("c").unwrap(), &[0.0, 0.0, 1.0, 0.5]);
    }

    #[test]
    fn text_without_header_and_duplicates() {
        let f = write(b"a 1 2\nb 3 4\na 9 9\n");
        let m = load_text_format(f.path()).unwrap();
        assert_eq!((m.len(), m.dim()), (2, 2));
        assert_eq!(m.vector("a").unwrap(), &[1.0, 2.0]);
        assert_eq!(m.duplicates_skipped(), 1);
    }

    #[test]
    fn text_errors() {
        let f = write(b"2 4\na 1 0 0 0\nb 0 1 0\n");
        assert!(matches!(
            load_text_format(f.path()),
            Err(EmbeddingError::DimensionMismatch { line: 3, expected: 4, found: 3 })
        ));
        assert!(matches!(load_text_format(write(b"").path()), Err(EmbeddingError::Empty)));
        assert!(matches!(load_text_format(write(b"a \xff\xfe 1\n").path()), Err(EmbeddingError::NotUtf8)));
    }

    #[test]
    fn binary_errors() {
        assert!(matches!(load_binary_format(write(b"2 3\n").path()), Err(EmbeddingError::TruncatedFile)));
        assert!(matches!(load_binary_format(write(b"0 3\n").path()), Err(EmbeddingError::Empty)));
        assert!(matches!(
            load_binary_format(write(b"two 3\n").path()),
            Err(EmbeddingError::HeaderParseError(_))
        ));
        let mut partial = b"1 2\nab ".to_vec();
        partial.extend_from_slice(&1f32.to_le_bytes());
        assert!(matches!(load_binary_format(write(&partial).path()), Err(EmbeddingError::TruncatedFile)));
    }

    #[test]
    fn binary_without_record_separator() {
        let mut body = b"2 1\nx ".to_vec();
        body.extend_from_slice(&2.5f32.to_le_bytes());
        body.extend_from_slice(b"y ");
        body.extend_from_slice(&(-1f32).to_le_bytes());
        let m = load_binary_format(write(&body).path()).unwrap();
        assert_eq!(m.vector("y").unwrap(), &[-1.0]);
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3f32, -1.2, 4.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 11 / (sqrt(5) * 5)
        let expected = 11.0 / (5f64.sqrt() * 5.0);
        assert!((cosine(&[1.0, 2.0], &[3.0, 4.0]).unwrap() - expected).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert!(matches!(cosine(&[1.0], &[1.0, 2.0]), Err(EmbeddingError::DimMismatch(1, 2))));
    }

    #[test]
    fn neighbors_oov_and_saturation() {
        let m = EmbeddingModel::from_pairs(vec![
            ("a".to_string(), vec![1.0, 0.0]),
            ("b".to_string(), vec![0.9, 0.1]),
            ("c".to_string(), vec![-1.0, 0.0]),
            ("d".to_string(), vec![0.0, 1.0]),
        ])
        .unwrap();
        assert!(m.top_k_neighbors("zz", 3).is_empty());
        let all = m.top_k_neighbors("a", 50);
        assert_eq!(all.words().collect::<Vec<_>>(), vec!["b", "d", "c"]);
        assert!((all.entries[2].1 + 1.0).abs() < 1e-12);
        assert_eq!(m.top_k_neighbors("a", 1).words().collect::<Vec<_>>(), vec!["b"]);
    }

    #[test]
    fn neighbor_ties_keep_vocab_order() {
        let m = EmbeddingModel::from_pairs(vec![
            ("q".to_string(), vec![1.0, 0.0]),
            ("z".to_string(), vec![0.0, 1.0]),
            ("y".to_string(), vec![0.0, -1.0]),
            ("x".to_string(), vec![0.0, 2.0]),
        ])
        .unwrap();
        let words: Vec<_> = m.top_k_neighbors("q", 2).words().map(str::to_string).collect();
        assert_eq!(words, vec!["z", "y"]);
    }
}
