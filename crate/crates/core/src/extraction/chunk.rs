//! Noun-phrase chunking over tagged token streams.

use super::lemma::Lemmatizer;
use super::tagger::{PosTag, TaggedToken};
use super::term::Term;

/// Extracts maximal noun-phrase chunks: runs of adjectives and nouns,
/// trimmed so each chunk ends at its last noun. Runs that contain no noun
/// are dropped. Tokens are singularized before assembly.
pub fn chunk_noun_phrases(tokens: &[TaggedToken], lemmatizer: &Lemmatizer) -> Vec<Term> {
    let mut chunks = Vec::new();
    let mut run: Vec<&TaggedToken> = Vec::new();
    for token in tokens.iter().chain(std::iter::once(&SENTINEL)) {
        if token.tag.chunkable() {
            run.push(token);
            continue;
        }
        if let Some(end) = run.iter().rposition(|t| t.tag == PosTag::Noun) {
            let lemmas: Vec<String> = run[..=end]
                .iter()
                .map(|t| lemmatizer.singularize(&t.text))
                .collect();
            // Tokens are normalized and non-empty, so the join is a valid term.
            chunks.push(Term::from_tokens(&lemmas).expect("chunk tokens form a term"));
        }
        run.clear();
    }
    chunks
}

/// Flushes the final run without duplicating the trim logic.
static SENTINEL: TaggedToken = TaggedToken {
    text: String::new(),
    tag: PosTag::Other,
};
