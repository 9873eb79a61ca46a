//! Pre-segmented, language-tagged texts and the sentence-pair slots they expose.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One sentence of a [`TextDocument`]. `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: u32,
    pub surface: String,
    pub language: String,
}

/// An ordered list of sentences in one language.
///
/// Serialized as `{"id","language","alignment_group"?,"sentences":[string,...]}`;
/// the index of a sentence is its array position plus one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "DocumentFile", from = "DocumentFile")]
pub struct TextDocument {
    pub id: String,
    pub language: String,
    pub sentences: Vec<Sentence>,
    pub alignment_group: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct DocumentFile {
    id: String,
    language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alignment_group: Option<String>,
    sentences: Vec<String>,
}

impl From<DocumentFile> for TextDocument {
    fn from(file: DocumentFile) -> Self {
        TextDocument::new(file.id, file.language, file.sentences, file.alignment_group)
    }
}

impl From<TextDocument> for DocumentFile {
    fn from(doc: TextDocument) -> Self {
        DocumentFile {
            id: doc.id,
            language: doc.language,
            alignment_group: doc.alignment_group,
            sentences: doc.sentences.into_iter().map(|s| s.surface).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("document-too-short: document '{id}' has {sentences} sentence(s), at least 2 are required")]
    TooShort { id: String, sentences: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentViolation {
    #[error("empty id")]
    EmptyId,
    #[error("sentence index gap: position {position} carries index {index}")]
    IndexGap { position: usize, index: u32 },
    #[error("empty sentence at index {index}")]
    EmptySentence { index: u32 },
    #[error("sentence {index} is tagged '{found}' but the document language is '{expected}'")]
    LanguageMismatch {
        index: u32,
        expected: String,
        found: String,
    },
    #[error("document-too-short: {0} sentence(s), at least 2 are required")]
    TooShort(usize),
}

impl TextDocument {
    pub fn new<S: Into<String>>(
        id: impl Into<String>,
        language: impl Into<String>,
        sentences: impl IntoIterator<Item = S>,
        alignment_group: Option<String>,
    ) -> Self {
        let language = language.into();
        let sentences = sentences
            .into_iter()
            .enumerate()
            .map(|(i, surface)| Sentence {
                index: i as u32 + 1,
                surface: surface.into(),
                language: language.clone(),
            })
            .collect();
        TextDocument {
            id: id.into(),
            language,
            sentences,
            alignment_group,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Sentence at 1-based `index`.
    pub fn sentence(&self, index: u32) -> Option<&Sentence> {
        index
            .checked_sub(1)
            .and_then(|i| self.sentences.get(i as usize))
    }

    /// Structural checks for a document that is about to be evaluated.
    pub fn validate(&self) -> Vec<DocumentViolation> {
        let mut out = Vec::new();
        if self.id.trim().is_empty() {
            out.push(DocumentViolation::EmptyId);
        }
        for (position, s) in self.sentences.iter().enumerate() {
            if s.index as usize != position + 1 {
                out.push(DocumentViolation::IndexGap {
                    position: position + 1,
                    index: s.index,
                });
            }
            if s.surface.trim().is_empty() {
                out.push(DocumentViolation::EmptySentence { index: s.index });
            }
            if s.language != self.language {
                out.push(DocumentViolation::LanguageMismatch {
                    index: s.index,
                    expected: self.language.clone(),
                    found: s.language.clone(),
                });
            }
        }
        if self.sentences.len() < 2 {
            out.push(DocumentViolation::TooShort(self.sentences.len()));
        }
        out
    }
}

/// Pair indices `2..=n`: slot `i` holds the relation between sentence `i` and `i - 1`.
pub fn profile_slots(doc: &TextDocument) -> Result<Vec<u32>, DocumentError> {
    let n = doc.len();
    if n < 2 {
        return Err(DocumentError::TooShort {
            id: doc.id.clone(),
            sentences: n,
        });
    }
    Ok((2..=n as u32).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub left_id: String,
    pub right_id: String,
    pub left_sentences: usize,
    pub right_sentences: usize,
    pub count_match: bool,
    pub group_match: bool,
}

impl AlignmentReport {
    /// Only aligned documents may have their profiles pooled.
    pub fn is_aligned(&self) -> bool {
        self.count_match && self.group_match
    }
}

/// Sentence counts must match and both documents must name the same alignment group.
pub fn check_alignment(a: &TextDocument, b: &TextDocument) -> AlignmentReport {
    let group_match = matches!(
        (&a.alignment_group, &b.alignment_group),
        (Some(x), Some(y)) if x == y
    );
    AlignmentReport {
        left_id: a.id.clone(),
        right_id: b.id.clone(),
        left_sentences: a.len(),
        right_sentences: b.len(),
        count_match: a.len() == b.len(),
        group_match,
    }
}
