//! News corpus ingestion, text normalization, sentence splitting and
//! reproducible train/validation/test partitioning.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// One news document with its reference headline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub title: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_tag: Option<String>,
}

impl Article {
    /// Returns a copy with title and text passed through [`normalize`].
    pub fn normalized(&self) -> Article {
        Article {
            id: self.id.clone(),
            title: normalize(&self.title),
            text: normalize(&self.text),
            source_tag: self.source_tag.clone(),
        }
    }
}

/// Articles read from a corpus file plus the number of records that were dropped.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub articles: Vec<Article>,
    pub skipped: usize,
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<serde_json::Value>,
    title: Option<String>,
    text: Option<String>,
}

/// Reads a line-delimited JSON corpus in the RIA layout.
///
/// Each line must carry string `title` and `text` fields; `id` is optional and
/// defaults to the 1-based line number. HTML markup in the body is stripped and
/// entities are decoded. Malformed lines, records missing a field, records whose
/// title or text is empty after cleanup, and duplicate ids are skipped and counted.
pub fn load_ria(path: impl AsRef<Path>) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let Ok(raw) = serde_json::from_str::<RawRecord>(&line) else {
            out.skipped += 1;
            continue;
        };
        let (Some(title), Some(text)) = (raw.title, raw.text) else {
            out.skipped += 1;
            continue;
        };
        let id = match raw.id {
            Some(serde_json::Value::String(s)) => s,
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => format!("ria-{}", idx + 1),
        };
        let title = clean_markup(&title);
        let text = clean_markup(&text);
        if id.is_empty() || title.is_empty() || text.is_empty() || !seen.insert(id.clone()) {
            out.skipped += 1;
            continue;
        }
        out.articles.push(Article {
            id,
            title,
            text,
            source_tag: Some("ria".into()),
        });
    }
    Ok(out)
}

/// Reads the Lenta CSV export (header `url,title,text,topic,tags`).
///
/// Rows with an empty title or text are skipped and counted. The id is the url
/// when non-empty, otherwise `lenta-<row>` with a 1-based data row index.
pub fn load_lenta(path: impl AsRef<Path>) -> Result<Ingested> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                _ => unreachable!(),
            },
            _ => csv_err(e),
        })?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (url_col, title_col, text_col) = (column("url")?, column("title")?, column("text")?);

    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    for (row, record) in reader.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) => {
                out.skipped += 1;
                continue;
            }
            Err(e) => return Err(csv_err(e)),
        };
        let field = |i: usize| record.get(i).unwrap_or("");
        let title = clean_markup(field(title_col));
        let text = clean_markup(field(text_col));
        let url = field(url_col).trim();
        let id = if url.is_empty() {
            format!("lenta-{}", row + 1)
        } else {
            url.to_string()
        };
        if title.is_empty() || text.is_empty() || !seen.insert(id.clone()) {
            out.skipped += 1;
            continue;
        }
        out.articles.push(Article {
            id,
            title,
            text,
            source_tag: Some("lenta".into()),
        });
    }
    Ok(out)
}

/// Reads an articles file (one JSON object per line). Unlike [`load_ria`] this
/// is strict: every non-blank line must parse and carry an id.
pub fn read_articles(path: impl AsRef<Path>) -> Result<Vec<Article>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut articles = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let article: Article = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        articles.push(article);
    }
    Ok(articles)
}

pub fn write_articles(path: impl AsRef<Path>, articles: &[Article]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for article in articles {
        let line = serde_json::to_string(article).expect("article serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const BLOCK_TAGS: &[&str] = &[
    "p", "br", "div", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "td", "th",
    "table", "blockquote", "section", "article", "hr",
];

/// Removes HTML tags and decodes entities. Block-level tags become a space so
/// paragraphs do not run together; inline tags vanish. The result is trimmed.
pub fn clean_markup(raw: &str) -> String {
    let mut stripped = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(open) = rest.find('<') {
        stripped.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let Some(close) = after.find('>') else {
            stripped.push_str(&rest[open..]);
            rest = "";
            break;
        };
        let inner = &after[..close];
        let name: String = inner
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        if name.is_empty() && !inner.starts_with('!') && !inner.starts_with('/') {
            // a bare '<' that is not a tag, e.g. "a < b"
            stripped.push('<');
            rest = after;
            continue;
        }
        if BLOCK_TAGS.contains(&name.as_str()) && !stripped.ends_with(' ') {
            stripped.push(' ');
        }
        rest = &after[close + 1..];
    }
    stripped.push_str(rest);
    let decoded = html_escape::decode_html_entities(&stripped);
    decoded.replace('\u{a0}', " ").trim().to_string()
}

/// Canonical text form used everywhere downstream: NFC, lowercase, single
/// spaces, trimmed.
pub fn normalize(text: &str) -> String {
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    let composed: String = lowered.nfc().collect();
    composed.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Val, Partition::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Val => "val",
            Partition::Test => "test",
        }
    }
}

/// Persisted record of a corpus split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub counts: [usize; 3],
    pub assignment: BTreeMap<String, Partition>,
}

impl SplitManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&data).map_err(|e| Error::Malformed {
            line: e.line(),
            reason: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Articles assigned to `partition`, in corpus order.
    pub fn select<'a>(&self, articles: &'a [Article], partition: Partition) -> Vec<&'a Article> {
        articles
            .iter()
            .filter(|a| self.assignment.get(&a.id) == Some(&partition))
            .collect()
    }
}

/// Partition sizes for `n` items under integer percentages. Floors first, then
/// hands leftover items to the largest fractional remainders (earlier partition
/// wins ties), then makes sure no partition is empty.
pub fn partition_counts(n: usize, ratios: [u32; 3]) -> Result<[usize; 3]> {
    if ratios.contains(&0) || ratios.iter().sum::<u32>() != 100 {
        return Err(Error::InvalidRatios(ratios));
    }
    if n < ratios.len() {
        return Err(Error::TooFewArticles {
            available: n,
            partitions: ratios.len(),
        });
    }
    let mut counts = [0usize; 3];
    let mut remainders = [(0usize, 0usize); 3];
    for (i, &r) in ratios.iter().enumerate() {
        let scaled = n * r as usize;
        counts[i] = scaled / 100;
        remainders[i] = (scaled % 100, i);
    }
    let mut left = n - counts.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    for i in 0..counts.len() {
        if counts[i] == 0 {
            let donor = (0..counts.len()).max_by_key(|&j| (counts[j], usize::MAX - j)).unwrap();
            counts[donor] -= 1;
            counts[i] = 1;
        }
    }
    Ok(counts)
}

/// Seeded shuffle followed by contiguous assignment to train, val and test.
pub fn split_dataset(articles: &[Article], ratios: [u32; 3], seed: u64) -> Result<SplitManifest> {
    let counts = partition_counts(articles.len(), ratios)?;
    let mut order: Vec<usize> = (0..articles.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut assignment = BTreeMap::new();
    let mut cursor = 0;
    for (partition, &count) in Partition::ALL.iter().zip(counts.iter()) {
        for &idx in &order[cursor..cursor + count] {
            assignment.insert(articles[idx].id.clone(), *partition);
        }
        cursor += count;
    }
    Ok(SplitManifest {
        seed,
        counts,
        assignment,
    })
}

/// Byte range of one sentence inside a normalized text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
}

impl SentenceSpan {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations_ru.txt");

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, '»' | '"' | ')' | '\'' | '”')
}

/// Rule-based sentence splitter for normalized Russian news text.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl SentenceSplitter {
    /// Builds a splitter from a list with one abbreviation per line; `#` starts a comment.
    pub fn from_list(list: &str) -> Self {
        let abbreviations = list
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.trim_end_matches('.').to_lowercase())
            .collect();
        SentenceSplitter { abbreviations }
    }

    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SentenceSplitter {
            abbreviations: abbreviations.into_iter().map(Into::into).collect(),
        }
    }

    fn is_abbreviation(&self, word: &str) -> bool {
        let word = word.trim_start_matches(['(', '«', '"', '\'', '“']);
        let mut chars = word.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_alphabetic() => true,
            _ => self.abbreviations.contains(word),
        }
    }

    pub fn split(&self, text: &str) -> Vec<SentenceSpan> {
        let mut spans = Vec::new();
        let Some(mut start) = text.find(|c: char| !c.is_whitespace()) else {
            return spans;
        };
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if pos < start || !is_terminator(c) {
                i += 1;
                continue;
            }
            let mut j = i;
            while j < chars.len() && is_terminator(chars[j].1) {
                j += 1;
            }
            while j < chars.len() && is_closer(chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = k > j && k < chars.len() && chars[k].1.is_alphabetic();
            let single_period = c == '.' && j - i == 1;
            let suppressed = single_period && {
                let word_start = text[start..pos]
                    .rfind(char::is_whitespace)
                    .map_or(start, |p| start + p + 1);
                self.is_abbreviation(&text[word_start..pos])
            };
            if boundary && !suppressed {
                spans.push(SentenceSpan { start, end });
                start = chars[k].0;
                i = k;
            } else {
                i = j.max(i + 1);
            }
        }
        let end = start + text[start..].trim_end().len();
        if end > start {
            spans.push(SentenceSpan { start, end });
        }
        spans
    }
}

/// Splits with the default abbreviation list.
pub fn split_sentences(text: &str) -> Vec<SentenceSpan> {
    SentenceSplitter::default().split(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn art(id: &str) -> Article {
        Article {
            id: id.into(),
            title: "t".into(),
            text: "x".into(),
            source_tag: None,
        }
    }

    #[test]
    fn normalize_rules() {
        assert_eq!(normalize("Курс  Доллара "), "курс доллара");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("\tА\n\nб "), "а б");
    }

    #[test]
    fn normalize_composes_short_i() {
        let decomposed = "и\u{0306}";
        let out = normalize(decomposed);
        assert_eq!(out, "й");
        assert_eq!(out.chars().count(), 1);
    }

    #[test]
    fn markup_cleanup() {
        assert_eq!(clean_markup("<p>а б</p>"), "а б");
        assert_eq!(clean_markup("конец.</p><p>Начало"), "конец. Начало");
        assert_eq!(clean_markup("&laquo;РИА&raquo; &amp; Co"), "«РИА» & Co");
        assert_eq!(clean_markup("a < b"), "a < b");
        assert_eq!(clean_markup("<b>жир</b>ный"), "жирный");
    }

    #[test]
    fn counts_for_standard_ratios() {
        assert_eq!(partition_counts(100, [90, 5, 5]).unwrap(), [90, 5, 5]);
        assert_eq!(
            partition_counts(1_000_000, [90, 5, 5]).unwrap(),
            [900_000, 50_000, 50_000]
        );
        assert_eq!(partition_counts(3, [90, 5, 5]).unwrap(), [1, 1, 1]);
        assert!(partition_counts(2, [90, 5, 5]).is_err());
        assert!(partition_counts(10, [90, 5, 4]).is_err());
        assert!(partition_counts(10, [95, 5, 0]).is_err());
    }

    #[test]
    fn split_is_seed_dependent_but_count_stable() {
        let articles: Vec<_> = (0..100).map(|i| art(&format!("a{i}"))).collect();
        let m1 = split_dataset(&articles, [90, 5, 5], 1).unwrap();
        let m1b = split_dataset(&articles, [90, 5, 5], 1).unwrap();
        let m2 = split_dataset(&articles, [90, 5, 5], 2).unwrap();
        assert_eq!(m1, m1b);
        assert_eq!(m1.counts, m2.counts);
        assert_ne!(m1.assignment, m2.assignment);
        assert_eq!(m1.select(&articles, Partition::Test).len(), 5);
    }

    #[test]
    fn sentence_examples() {
        let t = "первое предложение. второе.";
        let spans = split_sentences(t);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].slice(t), "первое предложение.");
        assert_eq!(spans[1].slice(t), "второе.");

        assert_eq!(split_sentences("заголовок без точки").len(), 1);
        assert_eq!(split_sentences("музей им. пушкина открыт.").len(), 1);
        assert_eq!(split_sentences("").len(), 0);
    }

    #[test]
    fn sentence_edge_cases() {
        // initials, "т.е." and numbers after a period
        assert_eq!(split_sentences("а. с. пушкин родился. потом вырос.").len(), 2);
        assert_eq!(split_sentences("то есть, т.е. так.").len(), 1);
        assert_eq!(split_sentences("в 2010 г. 5 человек. всё.").len(), 2);
        let t = "что? да! «нет». ладно…";
        let spans = split_sentences(t);
        let parts: Vec<_> = spans.iter().map(|s| s.slice(t)).collect();
        assert_eq!(parts, vec!["что?", "да! «нет».", "ладно…"]);
    }

    #[test]
    fn custom_abbreviations() {
        let splitter = SentenceSplitter::with_abbreviations(["спб"]);
        assert_eq!(splitter.split("в спб. открыли мост.").len(), 1);
        assert_eq!(splitter.split("в г. москве.").len(), 1); // initial rule still applies
        assert_eq!(splitter.split("сказал он. затем ушёл.").len(), 2);
    }
}
