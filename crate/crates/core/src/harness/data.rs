//! Whitespace tokenizer, vocabulary and TSV ingestion.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{QatError, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

/// Lowercases, splits on whitespace and strips ASCII punctuation.
pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| !c.is_ascii_punctuation())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Ids are assigned by descending frequency, then lexical order, after
    /// the reserved pad (0) and unknown (1) ids. `max_size` caps the total
    /// size including the reserved ids.
    pub fn build<'a>(corpus: impl IntoIterator<Item = &'a str>, max_size: Option<usize>) -> Result<Self> {
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut n_texts = 0;
        for text in corpus {
            n_texts += 1;
            for w in words(text) {
                *counts.entry(w).or_default() += 1;
            }
        }
        if n_texts == 0 {
            return Err(QatError::Empty("corpus"));
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let keep = max_size.map_or(ranked.len(), |m| m.saturating_sub(2));
        let tokens = [PAD_TOKEN.to_string(), UNK_TOKEN.to_string()]
            .into_iter()
            .chain(ranked.into_iter().take(keep).map(|(w, _)| w))
            .collect();
        Ok(Self::from_tokens(tokens))
    }

    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Ids of `text`, truncated or padded with [`PAD_ID`] to `len`.
    pub fn tokenize(&self, text: &str, len: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = words(text).iter().take(len).map(|w| self.id(w)).collect();
        ids.resize(len, PAD_ID);
        ids
    }

    /// One token per line in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = self.tokens.join("\n");
        out.push('\n');
        std::fs::write(path, out).map_err(|e| QatError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QatError::io(path, e))?;
        let tokens: Vec<String> = text.lines().map(str::to_string).collect();
        if tokens.len() < 2 || tokens[PAD_ID] != PAD_TOKEN || tokens[UNK_ID] != UNK_TOKEN {
            return Err(QatError::Parse {
                path: path.display().to_string(),
                line: 1,
                msg: "vocabulary must start with <pad> and <unk>".into(),
            });
        }
        Ok(Self::from_tokens(tokens))
    }
}

/// One `label<TAB>text` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledText {
    /// 1-based source line.
    pub line: usize,
    pub label: usize,
    pub text: String,
}

/// A tokenized example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub label: usize,
    pub tokens: Vec<usize>,
}

pub fn parse_tsv(content: &str, source: &str) -> Result<Vec<LabeledText>> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let err = |msg: String| QatError::Parse {
            path: source.to_string(),
            line,
            msg,
        };
        let (label, text) = raw
            .split_once('\t')
            .ok_or_else(|| err("missing tab separator".into()))?;
        let label = label
            .trim()
            .parse::<usize>()
            .map_err(|_| err(format!("label `{label}` is not a non-negative integer")))?;
        out.push(LabeledText {
            line,
            label,
            text: text.to_string(),
        });
    }
    Ok(out)
}

pub fn load_tsv(path: &Path) -> Result<Vec<LabeledText>> {
    let content = std::fs::read_to_string(path).map_err(|e| QatError::io(path, e))?;
    parse_tsv(&content, &path.display().to_string())
}

/// Tokenizes rows, checking every label against `n_classes`.
pub fn encode(
    rows: &[LabeledText],
    vocab: &Vocab,
    seq_len: usize,
    n_classes: usize,
    source: &str,
) -> Result<Vec<Example>> {
    rows.iter()
        .map(|r| {
            if r.label >= n_classes {
                return Err(QatError::Parse {
                    path: source.to_string(),
                    line: r.line,
                    msg: format!("label {} out of range for {n_classes} classes", r.label),
                });
            }
            Ok(Example {
                label: r.label,
                tokens: vocab.tokenize(&r.text, seq_len),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_folding_and_punctuation() {
        let v = Vocab::build(["The the THE", "the, end."], None).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.id("the"), 2);
        assert_eq!(v.id("end"), 3);
        assert_eq!(v.tokenize("THE! End", 2), vec![2, 3]);
    }

    #[test]
    fn ordering_frequency_then_lexical() {
        let v = Vocab::build(["b a c c c", "a b"], None).unwrap();
        assert_eq!((v.id("c"), v.id("a"), v.id("b")), (2, 3, 4));
        let capped = Vocab::build(["b a c c c", "a b"], Some(4)).unwrap();
        assert_eq!(capped.len(), 4);
        assert_eq!(capped.id("b"), UNK_ID);
    }

    #[test]
    fn unknown_truncate_pad() {
        let v = Vocab::build(["good movie"], None).unwrap();
        assert_eq!(v.tokenize("terrible", 3), vec![UNK_ID, PAD_ID, PAD_ID]);
        assert_eq!(v.tokenize("good good good movie", 2), vec![v.id("good"); 2]);
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(matches!(
            Vocab::build(std::iter::empty(), None),
            Err(QatError::Empty(_))
        ));
    }

    #[test]
    fn tsv_rows_and_errors() {
        let rows = parse_tsv("1\tgood movie\n", "t").unwrap();
        assert_eq!(
            rows,
            vec![LabeledText {
                line: 1,
                label: 1,
                text: "good movie".into()
            }]
        );
        assert!(parse_tsv("", "t").unwrap().is_empty());
        assert!(matches!(
            parse_tsv("x\ttext", "t"),
            Err(QatError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_tsv("0\tok\n1 no tab", "t"),
            Err(QatError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn encode_checks_labels() {
        let v = Vocab::build(["a"], None).unwrap();
        let rows = parse_tsv("0\ta\n5\ta\n", "t").unwrap();
        assert!(matches!(
            encode(&rows, &v, 2, 2, "t"),
            Err(QatError::Parse { line: 2, .. })
        ));
    }
}
