//! Glue between files and the training / retrieval code.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::io::item_key;
use crate::neuralnet::TrainingPair;
use crate::retrieval::VisualFeature;
use crate::textvec::{Sentence, TrigramIndex, Vectorizer, VectorizerKind, Vocabulary, WordEmbeddingTable};

/// Builds the vectorizer backend from the training sentences, or wraps the
/// given embedding table for `word2vec`.
pub fn build_vectorizer(
    kind: VectorizerKind,
    sentences: &[Sentence],
    embeddings: Option<WordEmbeddingTable>,
) -> Result<Vectorizer> {
    match kind {
        VectorizerKind::Bow => Vocabulary::build(sentences).map(Vectorizer::Bow),
        VectorizerKind::Hashing => TrigramIndex::build(sentences).map(Vectorizer::Hashing),
        VectorizerKind::Word2Vec => embeddings
            .map(Vectorizer::Word2Vec)
            .ok_or_else(|| Error::Config("word2vec needs an embedding table".into())),
    }
}

/// How sentences find their target item.
#[derive(Debug, Clone)]
pub enum Pairing {
    /// Sentence `<item>#<n>` belongs to `<item>`.
    Prefix,
    /// Explicit sentence id → item id map.
    Explicit(HashMap<String, String>),
}

impl Pairing {
    pub fn from_pairs(pairs: Vec<(String, String)>) -> Result<Self> {
        let mut map = HashMap::with_capacity(pairs.len());
        for (sentence, item) in pairs {
            if let Some(prev) = map.insert(sentence.clone(), item.clone()) {
                if prev != item {
                    return Err(Error::Config(format!(
                        "sentence {sentence:?} paired with both {prev:?} and {item:?}"
                    )));
                }
            }
        }
        Ok(Pairing::Explicit(map))
    }

    pub fn item_of<'a>(&'a self, sentence_id: &'a str) -> Option<&'a str> {
        match self {
            Pairing::Prefix => Some(item_key(sentence_id)),
            Pairing::Explicit(map) => map.get(sentence_id).map(String::as_str),
        }
    }
}

/// Training pairs plus the ids of sentences the vectorizer could not encode.
#[derive(Debug, Clone)]
pub struct PairedSet {
    pub pairs: Vec<TrainingPair>,
    pub sentence_ids: Vec<String>,
    pub skipped: Vec<String>,
}

/// Joins sentences with the features of their items. A sentence whose item
/// has no feature row is an error; an unencodable sentence is skipped.
pub fn pair_sentences(
    sentences: &[Sentence],
    features: &[VisualFeature],
    pairing: &Pairing,
    vectorizer: &Vectorizer,
) -> Result<PairedSet> {
    let by_id: HashMap<&str, &VisualFeature> = features.iter().map(|f| (f.id.as_str(), f)).collect();
    let mut set = PairedSet {
        pairs: Vec::with_capacity(sentences.len()),
        sentence_ids: Vec::with_capacity(sentences.len()),
        skipped: Vec::new(),
    };
    for s in sentences {
        let item = pairing
            .item_of(&s.id)
            .ok_or_else(|| Error::Missing(format!("sentence {:?} has no paired item", s.id)))?;
        let feature = by_id
            .get(item)
            .ok_or_else(|| Error::Missing(format!("item {item:?} of sentence {:?} has no feature row", s.id)))?;
        match vectorizer.vectorize(s) {
            Ok(sv) => {
                set.pairs.push(TrainingPair::new(sv.values, feature.values.clone()));
                set.sentence_ids.push(s.id.clone());
            }
            Err(Error::Unencodable(id)) => set.skipped.push(id),
            Err(e) => return Err(e),
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(id: &str, text: &str) -> Sentence {
        Sentence::new(id, text).unwrap()
    }

    #[test]
    fn prefix_and_explicit_pairing_agree() {
        let sentences = vec![s("img1#0", "a dog"), s("img2#0", "a cat"), s("img2#1", "zebra")];
        let features = vec![
            VisualFeature::new("img1", vec![1.0, 0.0]),
            VisualFeature::new("img2", vec![0.0, 1.0]),
        ];
        let v = build_vectorizer(VectorizerKind::Bow, &sentences[..2], None).unwrap();
        let prefix = pair_sentences(&sentences, &features, &Pairing::Prefix, &v).unwrap();
        let explicit = Pairing::from_pairs(vec![
            ("img1#0".into(), "img1".into()),
            ("img2#0".into(), "img2".into()),
            ("img2#1".into(), "img2".into()),
        ])
        .unwrap();
        let exp = pair_sentences(&sentences, &features, &explicit, &v).unwrap();
        assert_eq!(prefix.pairs, exp.pairs);
        assert_eq!(prefix.skipped, ["img2#1"]);
        assert_eq!(prefix.pairs[1].target, [0.0, 1.0]);
    }

    #[test]
    fn missing_feature_row_is_an_error() {
        let sentences = vec![s("img9#0", "a dog")];
        let v = build_vectorizer(VectorizerKind::Bow, &sentences, None).unwrap();
        let err = pair_sentences(&sentences, &[], &Pairing::Prefix, &v).unwrap_err();
        assert!(err.to_string().contains("img9"));
        let none = Pairing::from_pairs(vec![]).unwrap();
        assert!(pair_sentences(&sentences, &[], &none, &v).is_err());
    }

    #[test]
    fn conflicting_pairs_rejected() {
        assert!(Pairing::from_pairs(vec![("s".into(), "a".into()), ("s".into(), "b".into())]).is_err());
        assert!(build_vectorizer(VectorizerKind::Word2Vec, &[s("a", "x")], None).is_err());
    }
}
