//! Word tokenization and byte-pair encoding.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const RESERVED: [&str; 4] = [PAD, UNK, BOS, EOS];
pub const END_OF_WORD: &str = "</w>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Word,
    Bpe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub scheme: Scheme,
}

impl TokenSeq {
    pub fn words<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq {
            tokens: tokens.into_iter().map(Into::into).collect(),
            scheme: Scheme::Word,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

impl AsRef<[String]> for TokenSeq {
    fn as_ref(&self) -> &[String] {
        &self.tokens
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

fn word_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"\d+(?:[.,]\d+)+|[.,:;!?«»"()—\-–…]|[^\s.,:;!?«»"()—\-–…]+"#)
            .expect("valid token pattern")
    })
}

/// Whitespace split with punctuation marks as separate tokens. Numbers with
/// internal commas or periods ("28,04", "1.5") stay whole.
pub fn word_tokenize(text: &str) -> TokenSeq {
    TokenSeq::words(word_pattern().find_iter(text).map(|m| m.as_str()))
}

/// Byte ranges of the tokens [`word_tokenize`] would produce.
pub fn word_token_spans(text: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    word_pattern().find_iter(text).map(|m| (m.start(), m.end()))
}

/// Bijective token/id table. Reserved tokens take ids 0..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    id_of: HashMap<String, u32>,
    token_of: Vec<String>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocab {
    pub const PAD_ID: u32 = 0;
    pub const UNK_ID: u32 = 1;
    pub const BOS_ID: u32 = 2;
    pub const EOS_ID: u32 = 3;

    /// A vocabulary holding only the reserved tokens.
    pub fn new() -> Self {
        let mut v = Vocab {
            id_of: HashMap::new(),
            token_of: Vec::new(),
        };
        for t in RESERVED {
            v.insert(t);
        }
        v
    }

    /// Reserved tokens followed by `tokens` in order; duplicates are ignored.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Self::new();
        for t in tokens {
            v.insert(t.as_ref());
        }
        v
    }

    /// Builds a word vocabulary from token frequencies: most frequent first,
    /// ties broken alphabetically, tokens below `min_count` dropped.
    pub fn from_counts(counts: &HashMap<String, usize>, max_size: usize, min_count: usize) -> Self {
        let mut ranked: Vec<(&String, &usize)> =
            counts.iter().filter(|(_, &c)| c >= min_count).collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let keep = max_size.saturating_sub(RESERVED.len());
        Self::from_tokens(ranked.into_iter().take(keep).map(|(t, _)| t))
    }

    /// Adds `token` if absent and returns its id.
    pub fn insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.id_of.get(token) {
            return id;
        }
        let id = self.token_of.len() as u32;
        self.id_of.insert(token.to_string(), id);
        self.token_of.push(token.to_string());
        id
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.id_of.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.token_of.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.id_of.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.token_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_of.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.token_of
    }

    pub fn is_reserved(id: u32) -> bool {
        (id as usize) < RESERVED.len()
    }
}

/// A trained byte-pair encoding model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
    alphabet: Vec<String>,
    vocab: Vocab,
}

#[derive(Serialize, Deserialize)]
struct BpeSidecar {
    end_of_word_marker: String,
    reserved: Vec<String>,
    alphabet: Vec<String>,
}

impl BpeModel {
    fn from_parts(alphabet: Vec<String>, merges: Vec<(String, String)>) -> Self {
        let mut vocab = Vocab::from_tokens(&alphabet);
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (l, r)) in merges.iter().enumerate() {
            vocab.insert(&format!("{l}{r}"));
            ranks.entry((l.clone(), r.clone())).or_insert(rank);
        }
        BpeModel {
            merges,
            ranks,
            alphabet,
            vocab,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn end_of_word_marker(&self) -> &str {
        END_OF_WORD
    }

    /// Merges that introduced a symbol not already in the vocabulary.
    pub fn effective_merges(&self) -> usize {
        self.vocab.len() - RESERVED.len() - self.alphabet.len()
    }

    /// Writes `path` (merge list) and `path.json` (alphabet and reserved tokens).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut body = String::from("#version 1\n");
        for (l, r) in &self.merges {
            body.push_str(l);
            body.push(' ');
            body.push_str(r);
            body.push('\n');
        }
        std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
        let sidecar = BpeSidecar {
            end_of_word_marker: END_OF_WORD.into(),
            reserved: RESERVED.iter().map(|s| s.to_string()).collect(),
            alphabet: self.alphabet.clone(),
        };
        let side_path = sidecar_path(path);
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(&side_path, json).map_err(|e| Error::io(&side_path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = body.lines();
        if lines.next() != Some("#version 1") {
            return Err(Error::ModelFormat("expected `#version 1` header".into()));
        }
        let mut merges = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()))
                }
                _ => {
                    return Err(Error::ModelFormat(format!(
                        "merge line {} is not `left right`",
                        n + 2
                    )))
                }
            }
        }
        let side_path = sidecar_path(path);
        let side = std::fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
        let sidecar: BpeSidecar =
            serde_json::from_str(&side).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if sidecar.end_of_word_marker != END_OF_WORD {
            return Err(Error::ModelFormat(format!(
                "unsupported end-of-word marker `{}`",
                sidecar.end_of_word_marker
            )));
        }
        if sidecar.reserved != RESERVED {
            return Err(Error::ModelFormat("reserved token list differs".into()));
        }
        Ok(Self::from_parts(sidecar.alphabet, merges))
    }

    fn segment(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word
            .chars()
            .map(|c| {
                let s = c.to_string();
                if self.vocab.contains(&s) && !RESERVED.contains(&s.as_str()) {
                    s
                } else {
                    UNK.to_string()
                }
            })
            .collect();
        symbols.push(END_OF_WORD.to_string());

        // Replays merges in training order: always take the lowest-ranked pair
        // that is present and not earlier than the last merge applied.
        let mut floor = 0usize;
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .filter(|&r| r >= floor)
                .min();
            let Some(rank) = best else { break };
            let (l, r) = &self.merges[rank];
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && &symbols[i] == l && &symbols[i + 1] == r {
                    merged.push(format!("{l}{r}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = merged;
            floor = rank + 1;
        }
        symbols
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> TokenSeq {
        TokenSeq {
            tokens: words.iter().flat_map(|w| self.segment(w.as_ref())).collect(),
            scheme: Scheme::Bpe,
        }
    }

    /// Inverse of [`BpeModel::encode`]. Every word must end in a token carrying
    /// the end-of-word marker, and the marker may only appear as a suffix.
    pub fn decode(&self, seq: &TokenSeq) -> Result<Vec<String>> {
        let mut words = Vec::new();
        let mut current = String::new();
        for token in &seq.tokens {
            let (body, ends_word) = match token.strip_suffix(END_OF_WORD) {
                Some(body) => (body, true),
                None => (token.as_str(), false),
            };
            if body.contains(END_OF_WORD) {
                return Err(Error::MalformedBpe(format!(
                    "end-of-word marker inside token `{token}`"
                )));
            }
            current.push_str(body);
            if ends_word {
                words.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            return Err(Error::MalformedBpe(format!(
                "trailing subword `{current}` has no end-of-word marker"
            )));
        }
        Ok(words)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    p.into()
}

/// Learns up to `num_merges` merges from word-tokenized text.
///
/// Words start as characters followed by the end-of-word marker. Each round
/// merges the most frequent adjacent pair (lexicographically smallest on ties)
/// and stops early once no pair occurs at least twice.
pub fn bpe_train(corpus: &[TokenSeq], num_merges: usize) -> Result<BpeModel> {
    let mut word_counts: HashMap<&str, usize> = HashMap::new();
    for seq in corpus {
        for tok in &seq.tokens {
            *word_counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    if word_counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut alphabet: Vec<String> = word_counts
        .keys()
        .flat_map(|w| w.chars().map(String::from))
        .filter(|c| !RESERVED.contains(&c.as_str()))
        .collect();
    alphabet.push(END_OF_WORD.into());
    alphabet.sort();
    alphabet.dedup();

    // Sorted so that iteration order (and thus the result) is deterministic.
    let mut entries: Vec<(&str, usize)> = word_counts.into_iter().collect();
    entries.sort();
    let mut words: Vec<(Vec<String>, usize)> = entries
        .into_iter()
        .map(|(w, c)| {
            let mut symbols: Vec<String> = w.chars().map(String::from).collect();
            symbols.push(END_OF_WORD.into());
            (symbols, c)
        })
        .collect();

    let mut pair_counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (symbols, count) in &words {
        for w in symbols.windows(2) {
            *pair_counts.entry((w[0].clone(), w[1].clone())).or_default() += count;
        }
    }

    let mut merges = Vec::new();
    for _ in 0..num_merges {
        let best = pair_counts
            .iter()
            .filter(|(_, &c)| c >= 2)
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(p, _)| p.clone());
        let Some((left, right)) = best else { break };
        let joined = format!("{left}{right}");
        for (symbols, count) in words.iter_mut() {
            if !symbols.windows(2).any(|w| w[0] == left && w[1] == right) {
                continue;
            }
            for w in symbols.windows(2) {
                decrement(&mut pair_counts, (&w[0], &w[1]), *count);
            }
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
                    merged.push(joined.clone());
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            *symbols = merged;
            for w in symbols.windows(2) {
                *pair_counts.entry((w[0].clone(), w[1].clone())).or_default() += *count;
            }
        }
        merges.push((left, right));
    }
    Ok(BpeModel::from_parts(alphabet, merges))
}

fn decrement(counts: &mut BTreeMap<(String, String), usize>, pair: (&String, &String), by: usize) {
    let key = (pair.0.clone(), pair.1.clone());
    if let Some(c) = counts.get_mut(&key) {
        *c -= by;
        if *c == 0 {
            counts.remove(&key);
        }
    }
}
