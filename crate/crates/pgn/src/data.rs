//! Token sequences to id-space examples and back.

use headline_core::tokenize::Vocab;

use crate::model::Example;

/// Source words outside the vocabulary, numbered from `vocab.len()` in order of
/// first appearance. Always empty in closed-vocabulary (BPE) mode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtendedVocabMap {
    words: Vec<String>,
}

impl ExtendedVocabMap {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    fn id(&self, word: &str, base: usize) -> Option<u32> {
        self.words.iter().position(|w| w == word).map(|i| (base + i) as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExampleLimits {
    pub max_src_len: usize,
    /// Target length including EOS.
    pub max_tgt_len: usize,
    /// Give source OOV words temporary ids so the copy term can emit them.
    pub extended: bool,
}

/// Maps a source (and optional target) to ids. Sources are truncated to
/// `max_src_len`; targets to `max_tgt_len − 1` tokens plus EOS.
pub fn build_example<S: AsRef<str>>(
    src: &[S],
    tgt: Option<&[S]>,
    vocab: &Vocab,
    limits: ExampleLimits,
) -> (Example, ExtendedVocabMap) {
    let base = vocab.len();
    let mut oov = ExtendedVocabMap::default();
    let src = &src[..src.len().min(limits.max_src_len)];
    let mut src_ids = Vec::with_capacity(src.len());
    let mut src_ext = Vec::with_capacity(src.len());
    for w in src {
        let w = w.as_ref();
        let id = vocab.id_or_unk(w);
        src_ids.push(id);
        if id == Vocab::UNK_ID && limits.extended && !vocab.contains(w) {
            let ext = match oov.id(w, base) {
                Some(e) => e,
                None => {
                    oov.words.push(w.to_string());
                    (base + oov.words.len() - 1) as u32
                }
            };
            src_ext.push(ext);
        } else {
            src_ext.push(id);
        }
    }
    let mut tgt_ids: Vec<u32> = tgt
        .unwrap_or(&[])
        .iter()
        .take(limits.max_tgt_len.saturating_sub(1))
        .map(|w| {
            let w = w.as_ref();
            vocab
                .id(w)
                .or_else(|| oov.id(w, base))
                .unwrap_or(Vocab::UNK_ID)
        })
        .collect();
    tgt_ids.push(Vocab::EOS_ID);
    let n_oov = oov.len();
    (
        Example {
            src: src_ids,
            src_ext,
            tgt: tgt_ids,
            n_oov,
        },
        oov,
    )
}

/// Extended-space ids back to tokens; unknown ids render as UNK.
pub fn decode_ids(ids: &[u32], vocab: &Vocab, oov: &ExtendedVocabMap) -> Vec<String> {
    let base = vocab.len();
    ids.iter()
        .map(|&id| {
            let i = id as usize;
            if i < base {
                vocab.token(id).unwrap_or(headline_core::tokenize::UNK).to_string()
            } else {
                oov.words
                    .get(i - base)
                    .cloned()
                    .unwrap_or_else(|| headline_core::tokenize::UNK.to_string())
            }
        })
        .collect()
}
