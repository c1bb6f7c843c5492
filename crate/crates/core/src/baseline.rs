//! Headline generators that need no training.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{Article, SentenceSplitter};
use crate::error::{Error, Result};
use crate::tokenize::{word_token_spans, word_tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    FirstSentence,
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_sentence" | "first-sentence" => Ok(Generator::FirstSentence),
            other => Err(Error::Config(format!("unknown generator `{other}`"))),
        }
    }
}

/// Takes the lead sentence of an article as its headline.
#[derive(Debug, Clone, Default)]
pub struct FirstSentence {
    pub splitter: SentenceSplitter,
    /// Keep at most this many word tokens.
    pub max_tokens: Option<usize>,
}

impl FirstSentence {
    pub fn headline(&self, text: &str) -> String {
        let Some(span) = self.splitter.split(text).into_iter().next() else {
            return String::new();
        };
        let sentence = span.slice(text);
        match self.max_tokens {
            Some(limit) if word_tokenize(sentence).len() > limit => truncate_tokens(sentence, limit),
            _ => sentence.to_string(),
        }
    }
}

/// Longest prefix of `text` that holds at most `limit` word tokens.
fn truncate_tokens(text: &str, limit: usize) -> String {
    match limit.checked_sub(1).and_then(|i| word_token_spans(text).nth(i)) {
        Some((_, end)) => text[..end].to_string(),
        None if limit == 0 => String::new(),
        None => text.to_string(),
    }
}

/// First sentence of normalized text, no truncation.
pub fn first_sentence(text: &str) -> String {
    FirstSentence::default().headline(text)
}

/// Generates one headline per article in input order.
pub fn generate(articles: &[Article], generator: &FirstSentence) -> Vec<String> {
    articles.iter().map(|a| generator.headline(&a.text)).collect()
}

/// Writes one headline per line. Newlines inside a headline are flattened to spaces.
pub fn write_predictions(path: impl AsRef<Path>, headlines: &[String]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for h in headlines {
        let line = h.replace(['\n', '\r'], " ");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(data.lines().map(String::from).collect())
}

/// Runs `generator` over `articles` and writes the predictions file.
pub fn run_baseline(
    articles: &[Article],
    generator: &FirstSentence,
    out: impl AsRef<Path>,
) -> Result<Vec<String>> {
    let headlines = generate(articles, generator);
    write_predictions(out, &headlines)?;
    Ok(headlines)
}
