//! Reader for the Princeton WordNet database (WNDB) files.
//!
//! Only nouns and verbs are loaded. From `index.{noun,verb}` we keep each
//! lemma's synset offsets in file order (which is sense-frequency order); from
//! `data.{noun,verb}` we keep each synset's lemmas. Pointers, frames and glosses
//! are skipped.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TokenizedDoc;

#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("missing WordNet file {0}")]
    MissingFile(String),
    #[error("{file}:{line}: {reason}")]
    ParseError { file: String, line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
}

impl Pos {
    pub const ALL: [Pos; 2] = [Pos::Noun, Pos::Verb];

    pub fn file_suffix(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
        }
    }

    pub fn tag(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_suffix())
    }
}

impl std::str::FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "n" | "noun" => Ok(Pos::Noun),
            "v" | "verb" => Ok(Pos::Verb),
            other => Err(format!("unsupported part of speech {other:?} (expected noun or verb)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synset {
    pub offset: u64,
    pub pos: Pos,
    /// Lowercase lemmas in data-file order; multiword lemmas keep underscores.
    pub lemmas: Vec<String>,
}

#[derive(Debug, Default, Clone)]
struct Senses {
    by_pos: [Vec<usize>; 2],
}

/// Immutable word → synset index for nouns and verbs.
#[derive(Debug, Clone, Default)]
pub struct SynonymLexicon {
    synsets: Vec<Synset>,
    by_offset: HashMap<(Pos, u64), usize>,
    index: HashMap<String, Senses>,
    lemma_counts: [usize; 2],
}

fn is_license_line(line: &str) -> bool {
    line.starts_with("  ")
}

fn parse_err(file: &str, line: usize, reason: impl Into<String>) -> WordNetError {
    WordNetError::ParseError {
        file: file.to_string(),
        line,
        reason: reason.into(),
    }
}

fn read_wndb_file(dir: &Path, name: &str) -> Result<String, WordNetError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(WordNetError::MissingFile(name.to_string()));
    }
    let bytes = fs::read(&path)?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn normalize_lemma(word: &str) -> String {
    word.trim().to_lowercase().replace(' ', "_")
}

/// Parses one `data.*` line into (offset, lemmas).
fn parse_data_line(line: &str, pos: Pos, file: &str, line_no: usize) -> Result<Synset, WordNetError> {
    let mut fields = line.split_ascii_whitespace();
    let mut next = |what: &str| {
        fields
            .next()
            .ok_or_else(|| parse_err(file, line_no, format!("truncated line: missing {what}")))
    };
    let offset: u64 = next("synset_offset")?
        .parse()
        .map_err(|_| parse_err(file, line_no, "bad synset_offset"))?;
    next("lex_filenum")?;
    let ss_type = next("ss_type")?;
    let type_ok = match pos {
        Pos::Noun => ss_type == "n",
        Pos::Verb => ss_type == "v",
    };
    if !type_ok {
        return Err(parse_err(file, line_no, format!("unexpected ss_type {ss_type:?}")));
    }
    let w_cnt = usize::from_str_radix(next("w_cnt")?, 16)
        .map_err(|_| parse_err(file, line_no, "bad w_cnt"))?;
    if w_cnt == 0 {
        return Err(parse_err(file, line_no, "synset without words"));
    }
    let mut lemmas: Vec<String> = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let word = normalize_lemma(next("word")?);
        next("lex_id")?;
        if !lemmas.contains(&word) {
            lemmas.push(word);
        }
    }
    // The pointer count must follow the word list; a line cut short inside
    // the word list is caught above, one cut right after it here.
    next("p_cnt")?;
    Ok(Synset { offset, pos, lemmas })
}

struct IndexLine {
    lemma: String,
    offsets: Vec<u64>,
}

fn parse_index_line(line: &str, pos: Pos, file: &str, line_no: usize) -> Result<IndexLine, WordNetError> {
    let fields: Vec<&str> = line.split_ascii_whitespace().collect();
    let bad = |reason: &str| parse_err(file, line_no, reason);
    if fields.len() < 6 {
        return Err(bad("truncated index line"));
    }
    if fields[1] != pos.tag().to_string() {
        return Err(bad("part of speech does not match file"));
    }
    let synset_cnt: usize = fields[2].parse().map_err(|_| bad("bad synset_cnt"))?;
    let p_cnt: usize = fields[3].parse().map_err(|_| bad("bad p_cnt"))?;
    // lemma pos synset_cnt p_cnt [ptr...] sense_cnt tagsense_cnt offsets...
    let first_offset = 4 + p_cnt + 2;
    if fields.len() != first_offset + synset_cnt {
        return Err(bad("field count does not match synset_cnt/p_cnt"));
    }
    let offsets = fields[first_offset..]
        .iter()
        .map(|f| f.parse::<u64>().map_err(|_| bad("bad synset_offset")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IndexLine {
        lemma: normalize_lemma(fields[0]),
        offsets,
    })
}

/// Loads `index.noun`, `data.noun`, `index.verb` and `data.verb` from `dir`.
pub fn parse_wndb(dir: impl AsRef<Path>) -> Result<SynonymLexicon, WordNetError> {
    SynonymLexicon::parse(dir.as_ref())
}

impl SynonymLexicon {
    pub fn parse(dir: &Path) -> Result<Self, WordNetError> {
        let mut lex = SynonymLexicon::default();
        for pos in Pos::ALL {
            let data_name = format!("data.{}", pos.file_suffix());
            let index_name = format!("index.{}", pos.file_suffix());
            let data = read_wndb_file(dir, &data_name)?;
            let index = read_wndb_file(dir, &index_name)?;

            for (i, line) in data.lines().enumerate() {
                if line.is_empty() || is_license_line(line) {
                    continue;
                }
                let synset = parse_data_line(line, pos, &data_name, i + 1)?;
                lex.by_offset.insert((pos, synset.offset), lex.synsets.len());
                lex.synsets.push(synset);
            }

            for (i, line) in index.lines().enumerate() {
                if line.is_empty() || is_license_line(line) {
                    continue;
                }
                let entry = parse_index_line(line, pos, &index_name, i + 1)?;
                let refs = entry
                    .offsets
                    .iter()
                    .map(|off| {
                        lex.by_offset.get(&(pos, *off)).copied().ok_or_else(|| {
                            parse_err(&index_name, i + 1, format!("offset {off:08} not in {data_name}"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let senses = lex.index.entry(entry.lemma).or_default();
                if senses.by_pos[pos.slot()].is_empty() {
                    lex.lemma_counts[pos.slot()] += 1;
                }
                senses.by_pos[pos.slot()].extend(refs);
            }
        }
        Ok(lex)
    }

    /// Builds a lexicon directly from synsets; each synset is listed for each of
    /// its lemmas in the order the synsets are given.
    pub fn from_synsets(synsets: Vec<Synset>) -> Self {
        let mut lex = SynonymLexicon::default();
        for synset in synsets {
            let idx = lex.synsets.len();
            lex.by_offset.insert((synset.pos, synset.offset), idx);
            for lemma in &synset.lemmas {
                let senses = lex.index.entry(lemma.clone()).or_default();
                if senses.by_pos[synset.pos.slot()].is_empty() {
                    lex.lemma_counts[synset.pos.slot()] += 1;
                }
                senses.by_pos[synset.pos.slot()].push(idx);
            }
            lex.synsets.push(synset);
        }
        lex
    }

    /// Number of distinct index lemmas for `pos`.
    pub fn lemma_count(&self, pos: Pos) -> usize {
        self.lemma_counts[pos.slot()]
    }

    pub fn synset_count(&self, pos: Pos) -> usize {
        self.synsets.iter().filter(|s| s.pos == pos).count()
    }

    pub fn synset(&self, pos: Pos, offset: u64) -> Option<&Synset> {
        self.by_offset.get(&(pos, offset)).map(|&i| &self.synsets[i])
    }

    pub fn synsets(&self) -> &[Synset] {
        &self.synsets
    }

    /// Synsets of `word` under `pos`, in sense order.
    pub fn synsets_for<'a>(&'a self, word: &str, pos: Pos) -> impl Iterator<Item = &'a Synset> + 'a {
        let refs: &[usize] = self
            .index
            .get(&normalize_lemma(word))
            .map(|s| s.by_pos[pos.slot()].as_slice())
            .unwrap_or(&[]);
        refs.iter().map(move |&i| &self.synsets[i])
    }

    pub fn sense_count(&self, word: &str, pos: Pos) -> usize {
        self.index
            .get(&normalize_lemma(word))
            .map_or(0, |s| s.by_pos[pos.slot()].len())
    }

    /// Synset offsets of `word` under `pos`, in index order.
    pub fn offsets(&self, word: &str, pos: Pos) -> Vec<u64> {
        self.synsets_for(word, pos).map(|s| s.offset).collect()
    }

    /// Index lemmas for `pos`, sorted.
    pub fn lemmas(&self, pos: Pos) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .index
            .iter()
            .filter(|(_, s)| !s.by_pos[pos.slot()].is_empty())
            .map(|(w, _)| w.as_str())
            .collect();
        out.sort_unstable();
        out
    }

    /// Lemmas of every synset of `word` under `pos`, sense order then lemma
    /// order, deduplicated, never including `word` itself.
    pub fn synonyms(&self, word: &str, pos: Pos) -> Vec<String> {
        let query = normalize_lemma(word);
        let mut out: Vec<String> = Vec::new();
        for synset in self.synsets_for(&query, pos) {
            for lemma in &synset.lemmas {
                if *lemma != query && !out.contains(lemma) {
                    out.push(lemma.clone());
                }
            }
        }
        out
    }

    fn has_synonym(&self, word: &str, pos: Pos) -> bool {
        self.synsets_for(word, pos)
            .any(|s| s.lemmas.iter().any(|l| l != word))
    }

    /// Token positions that have at least one synonym under a POS in
    /// `pos_filter`. When both nouns and verbs qualify, the POS with more
    /// senses wins, ties going to nouns.
    pub fn replaceable_positions(&self, doc: &TokenizedDoc, pos_filter: &[Pos]) -> Vec<(usize, Pos)> {
        let mut out = Vec::new();
        for (i, token) in doc.tokens.iter().enumerate() {
            let mut best: Option<(Pos, usize)> = None;
            for pos in Pos::ALL {
                if !pos_filter.contains(&pos) || !self.has_synonym(token, pos) {
                    continue;
                }
                let n = self.sense_count(token, pos);
                if best.is_none_or(|(_, m)| n > m) {
                    best = Some((pos, n));
                }
            }
            if let Some((pos, _)) = best {
                out.push((i, pos));
            }
        }
        out
    }

    /// Writes the loaded subset back out as a minimal WNDB directory: index
    /// lines carry no pointer symbols and data lines no pointers or gloss.
    pub fn write_wndb(&self, dir: &Path) -> Result<(), WordNetError> {
        fs::create_dir_all(dir)?;
        for pos in Pos::ALL {
            let mut data = std::io::BufWriter::new(fs::File::create(dir.join(format!("data.{}", pos.file_suffix())))?);
            for s in self.synsets.iter().filter(|s| s.pos == pos) {
                write!(data, "{:08} 00 {} {:02x}", s.offset, pos.tag(), s.lemmas.len())?;
                for l in &s.lemmas {
                    write!(data, " {l} 0")?;
                }
                writeln!(data, " 000 | ")?;
            }
            data.flush()?;

            let mut index = std::io::BufWriter::new(fs::File::create(dir.join(format!("index.{}", pos.file_suffix())))?);
            for lemma in self.lemmas(pos) {
                let offsets = self.offsets(lemma, pos);
                write!(index, "{lemma} {} {} 0 {} 0", pos.tag(), offsets.len(), offsets.len())?;
                for off in offsets {
                    write!(index, " {off:08}")?;
                }
                writeln!(index, "  ")?;
            }
            index.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    const INDEX_NOUN: &str = "  1 license header line\n\
dog n 2 1 @ 2 1 00000100 00000200  \n\
domestic_dog n 1 0 1 0 00000100  \n\
canis_familiaris n 1 0 1 0 00000100  \n\
frump n 1 0 1 0 00000200  \n\
bark n 1 0 1 0 00000300  \n\
cat n 1 0 1 0 00000400  \n";
    const DATA_NOUN: &str = "  1 license header line\n\
00000100 05 n 03 dog 0 domestic_dog 0 Canis_familiaris 0 000 | a domestic dog\n\
00000200 05 n 02 frump 0 dog 0 000 | a dull unattractive woman\n\
00000300 05 n 01 bark 0 000 | tough protective covering\n\
00000400 05 n 01 cat 0 000 | feline\n";
    const INDEX_VERB: &str = "bark v 1 0 1 0 00000500  \n\
dog v 1 0 1 0 00000600  \n\
chase v 1 0 1 0 00000600  \n";
    const DATA_VERB: &str = "00000500 32 v 02 bark 0 bay 0 000 01 + 08 00 | make barking sounds\n\
00000600 38 v 02 chase 0 dog 0 000 | go after\n";

    fn write_dir(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (name, body) in files {
            fs::write(dir.path().join(name), body).unwrap();
        }
        dir
    }

    fn toy() -> (tempfile::TempDir, SynonymLexicon) {
        let dir = write_dir(&[
            ("index.noun", INDEX_NOUN),
            ("data.noun", DATA_NOUN),
            ("index.verb", INDEX_VERB),
            ("data.verb", DATA_VERB),
        ]);
        let lex = parse_wndb(dir.path()).unwrap();
        (dir, lex)
    }

    #[test]
    fn parses_counts_and_offsets() {
        let (_d, lex) = toy();
        assert_eq!(lex.lemma_count(Pos::Noun), 6);
        assert_eq!(lex.lemma_count(Pos::Verb), 3);
        assert_eq!(lex.offsets("dog", Pos::Noun), vec![100, 200]);
        assert_eq!(lex.synset(Pos::Noun, 100).unwrap().lemmas[2], "canis_familiaris");
    }

    #[test]
    fn synonyms_follow_sense_then_lemma_order() {
        let (_d, lex) = toy();
        assert_eq!(lex.synonyms("dog", Pos::Noun), vec!["domestic_dog", "canis_familiaris", "frump"]);
        assert_eq!(lex.synonyms("DOG", Pos::Verb), vec!["chase"]);
        assert!(lex.synonyms("zzxq", Pos::Noun).is_empty());
        // single-lemma synset only
        assert!(lex.synonyms("cat", Pos::Noun).is_empty());
    }

    #[test]
    fn replaceable_positions_prefers_more_senses() {
        let (_d, lex) = toy();
        let doc = tokenize("the dog barks");
        assert_eq!(lex.replaceable_positions(&doc, &[Pos::Noun]), vec![(1, Pos::Noun)]);
        // dog: 2 noun senses vs 1 verb sense
        assert_eq!(
            lex.replaceable_positions(&doc, &[Pos::Noun, Pos::Verb]),
            vec![(1, Pos::Noun)]
        );
        let doc = tokenize("bark");
        // bark has no noun synonym, one verb synonym
        assert_eq!(lex.replaceable_positions(&doc, &[Pos::Noun, Pos::Verb]), vec![(0, Pos::Verb)]);
        assert!(lex.replaceable_positions(&TokenizedDoc::default(), &[Pos::Noun]).is_empty());
        assert!(lex.replaceable_positions(&tokenize("the dog"), &[]).is_empty());
    }

    #[test]
    fn empty_directory_is_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(parse_wndb(dir.path()), Err(WordNetError::MissingFile(f)) if f == "data.noun"));
    }

    #[test]
    fn truncated_data_line_reports_line_number() {
        let truncated = DATA_NOUN.replace("00000300 05 n 01 bark 0 000 | tough protective covering", "00000300 05 n 01");
        let dir = write_dir(&[
            ("index.noun", INDEX_NOUN),
            ("data.noun", &truncated),
            ("index.verb", INDEX_VERB),
            ("data.verb", DATA_VERB),
        ]);
        match parse_wndb(dir.path()) {
            Err(WordNetError::ParseError { file, line, .. }) => {
                assert_eq!(file, "data.noun");
                assert_eq!(line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_index_offset_is_an_error() {
        let dir = write_dir(&[
            ("index.noun", "ghost n 1 0 1 0 00009999  \n"),
            ("data.noun", DATA_NOUN),
            ("index.verb", INDEX_VERB),
            ("data.verb", DATA_VERB),
        ]);
        assert!(matches!(parse_wndb(dir.path()), Err(WordNetError::ParseError { line: 1, .. })));
    }

    #[test]
    fn write_then_parse_round_trips() {
        let (_d, lex) = toy();
        let out = tempfile::tempdir().unwrap();
        lex.write_wndb(out.path()).unwrap();
        let back = parse_wndb(out.path()).unwrap();
        for pos in Pos::ALL {
            assert_eq!(back.lemmas(pos), lex.lemmas(pos));
            for w in lex.lemmas(pos) {
                assert_eq!(back.offsets(w, pos), lex.offsets(w, pos));
                assert_eq!(back.synonyms(w, pos), lex.synonyms(w, pos));
            }
        }
    }
}
