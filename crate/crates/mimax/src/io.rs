//! Text formats: plain corpora (one sentence per line, single-space separated
//! tokens), tagged corpora (`token<TAB>tag` lines, blank line between
//! sentences), vocabularies, cluster files and induced labels.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mimax_core::brown::Clustering;
use mimax_core::corpus::{TaggedCorpus, Vocab};

use crate::{Error, Result};

pub const VOCAB_HEADER: &str = "mimax-vocab v1";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

/// Blank lines are skipped; an empty token (two spaces in a row, or a
/// leading or trailing space) is an error.
pub fn parse_plain(text: &str, path: &Path) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for (no, line) in lines(text) {
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<String> = line.split(' ').map(str::to_owned).collect();
        if tokens.iter().any(String::is_empty) {
            return Err(Error::Parse {
                path: path.into(),
                line: no,
                message: "empty token; tokens must be separated by single spaces".into(),
            });
        }
        out.push(tokens);
    }
    Ok(out)
}

pub fn read_plain(path: &Path) -> Result<Vec<Vec<String>>> {
    parse_plain(&read_text(path)?, path)
}

pub fn format_plain<S: AsRef<str>>(sentences: &[Vec<S>]) -> String {
    let mut out = String::new();
    for s in sentences {
        let line: Vec<&str> = s.iter().map(AsRef::as_ref).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_tagged(text: &str, path: &Path) -> Result<TaggedCorpus> {
    let mut sentences = Vec::new();
    let mut tags = Vec::new();
    let (mut words, mut labels) = (Vec::new(), Vec::new());
    for (no, line) in lines(text) {
        if line.is_empty() {
            if !words.is_empty() {
                sentences.push(std::mem::take(&mut words));
                tags.push(std::mem::take(&mut labels));
            }
            continue;
        }
        let bad = |message: &str| Error::Parse { path: path.into(), line: no, message: message.into() };
        let (word, tag) = line.split_once('\t').ok_or_else(|| bad("expected token<TAB>tag"))?;
        if word.is_empty() || tag.is_empty() || tag.contains('\t') {
            return Err(bad("expected exactly two nonempty tab-separated columns"));
        }
        words.push(word.to_owned());
        labels.push(tag.to_owned());
    }
    if !words.is_empty() {
        sentences.push(words);
        tags.push(labels);
    }
    if sentences.is_empty() {
        return Err(Error::Parse { path: path.into(), line: 0, message: "no tagged tokens".into() });
    }
    Ok(TaggedCorpus::from_string_tags(sentences, tags)?)
}

pub fn read_tagged(path: &Path) -> Result<TaggedCorpus> {
    parse_tagged(&read_text(path)?, path)
}

pub fn format_tagged(corpus: &TaggedCorpus) -> String {
    let mut out = String::new();
    for (i, (s, t)) in corpus.sentences.iter().zip(&corpus.tags).enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (w, &tag) in s.iter().zip(t) {
            let _ = writeln!(out, "{w}\t{}", corpus.tag_names[tag as usize]);
        }
    }
    out
}

pub fn format_vocab(vocab: &Vocab) -> String {
    let mut out = String::from(VOCAB_HEADER);
    out.push('\n');
    for (w, c) in vocab.words().iter().zip(vocab.counts()) {
        let _ = writeln!(out, "{w}\t{c}");
    }
    out
}

/// Parses a vocabulary; errors carry 1-based line numbers.
pub fn parse_vocab(text: &str) -> std::result::Result<Vocab, (usize, String)> {
    let mut it = lines(text);
    match it.next() {
        Some((_, VOCAB_HEADER)) => {}
        Some((no, other)) => return Err((no, format!("expected header {VOCAB_HEADER:?}, found {other:?}"))),
        None => return Err((1, "missing header".into())),
    }
    let mut words = Vec::new();
    for (no, line) in it {
        let (w, c) = line.rsplit_once('\t').ok_or((no, "expected word<TAB>count".to_owned()))?;
        let c: u64 = c.parse().map_err(|_| (no, format!("bad count {c:?}")))?;
        words.push((w.to_owned(), c));
    }
    Vocab::from_word_counts(words).map_err(|e| (1, e.to_string()))
}

/// One `word<TAB>cluster` line per vocabulary word, in id order.
pub fn format_clusters(vocab: &Vocab, clustering: &Clustering) -> String {
    let mut out = String::new();
    for (w, &c) in vocab.words().iter().zip(clustering.assign()) {
        let _ = writeln!(out, "{w}\t{c}");
    }
    out
}

/// `token<TAB>label` lines with a blank line between sentences.
pub fn format_induced<S: AsRef<str>>(sentences: &[Vec<S>], labels: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for (i, (s, l)) in sentences.iter().zip(labels).enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (w, z) in s.iter().zip(l) {
            let _ = writeln!(out, "{}\t{z}", w.as_ref());
        }
    }
    out
}
