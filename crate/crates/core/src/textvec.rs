//! Sentence vectorization.
//!
//! Three backends turn a sentence into a fixed-length vector:
//!
//! - [`Vocabulary`]: bag-of-words counts over every word seen in training.
//! - [`TrigramIndex`]: counts of `#`-padded letter trigrams ("word hashing").
//! - [`WordEmbeddingTable`]: mean of pretrained word embeddings.
//!
//! All backends share [`tokenize`] and are immutable once built, so they can be
//! shared across threads freely.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Boundary marker used when padding words for trigram extraction.
pub const WORD_BOUNDARY: char = '#';

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub text: String,
}

impl Sentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.contains(['\t', '\n', '\r']) {
            return Err(Error::Config(format!("invalid sentence id {id:?}")));
        }
        Ok(Sentence { id, text: text.into() })
    }
}

/// Lowercases `text` and splits it on every character that is not a letter or digit.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Every 3-character window of `#word#`, in order, duplicates kept.
///
/// Returns an empty list for an empty word.
pub fn letter_trigrams(word: &str) -> Vec<String> {
    if word.is_empty() {
        return Vec::new();
    }
    let padded: Vec<char> = std::iter::once(WORD_BOUNDARY)
        .chain(word.chars())
        .chain(std::iter::once(WORD_BOUNDARY))
        .collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VectorizerKind {
    Bow,
    Hashing,
    Word2Vec,
}

impl VectorizerKind {
    pub fn tag(self) -> u8 {
        match self {
            VectorizerKind::Bow => 0,
            VectorizerKind::Hashing => 1,
            VectorizerKind::Word2Vec => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(VectorizerKind::Bow),
            1 => Some(VectorizerKind::Hashing),
            2 => Some(VectorizerKind::Word2Vec),
            _ => None,
        }
    }
}

impl fmt::Display for VectorizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VectorizerKind::Bow => "bow",
            VectorizerKind::Hashing => "hashing",
            VectorizerKind::Word2Vec => "word2vec",
        })
    }
}

impl FromStr for VectorizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bow" => Ok(VectorizerKind::Bow),
            "hashing" | "trigram" => Ok(VectorizerKind::Hashing),
            "word2vec" | "w2v" => Ok(VectorizerKind::Word2Vec),
            other => Err(Error::Config(format!("unknown vectorizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub values: Vec<f64>,
    pub kind: VectorizerKind,
}

impl SentenceVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// A sorted, deduplicated list of strings with its inverse index.
///
/// Shared by [`Vocabulary`] and [`TrigramIndex`].
#[derive(Debug, Clone, PartialEq, Eq)]
struct SortedIndex {
    entries: Vec<String>,
    positions: HashMap<String, usize>,
}

impl SortedIndex {
    fn from_set(set: BTreeSet<String>) -> Self {
        let entries: Vec<String> = set.into_iter().collect();
        let positions = entries.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        SortedIndex { entries, positions }
    }

    fn from_sorted(entries: Vec<String>, what: &str) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty(format!("{what} has no entries")));
        }
        for pair in entries.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::Config(format!(
                    "{what} entries must be strictly sorted: {:?} before {:?}",
                    pair[0], pair[1]
                )));
            }
        }
        let positions = entries.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Ok(SortedIndex { entries, positions })
    }

    fn count<'a>(&self, keys: impl IntoIterator<Item = &'a str>) -> (Vec<f64>, usize) {
        let mut values = vec![0.0; self.entries.len()];
        let mut hits = 0;
        for key in keys {
            if let Some(&i) = self.positions.get(key) {
                values[i] += 1.0;
                hits += 1;
            }
        }
        (values, hits)
    }
}

/// Bag-of-words vocabulary: every token seen in the training corpus, no frequency cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary(SortedIndex);

impl Vocabulary {
    pub fn build(sentences: &[Sentence]) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::Empty("no sentences to build a vocabulary from".into()));
        }
        let words: BTreeSet<String> = sentences.iter().flat_map(|s| tokenize(&s.text)).collect();
        if words.is_empty() {
            return Err(Error::Empty("corpus contains no tokens".into()));
        }
        Ok(Vocabulary(SortedIndex::from_set(words)))
    }

    /// Rebuilds a vocabulary from its serialized, already sorted word list.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        SortedIndex::from_sorted(words, "vocabulary").map(Vocabulary)
    }

    pub fn words(&self) -> &[String] {
        &self.0.entries
    }

    pub fn len(&self) -> usize {
        self.0.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.entries.is_empty()
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.0.positions.get(word).copied()
    }

    pub fn vectorize(&self, sentence: &Sentence) -> Result<SentenceVector> {
        let tokens = tokenize(&sentence.text);
        let (values, hits) = self.0.count(tokens.iter().map(String::as_str));
        if hits == 0 {
            return Err(Error::Unencodable(sentence.id.clone()));
        }
        Ok(SentenceVector {
            values,
            kind: VectorizerKind::Bow,
        })
    }
}

/// Index over all letter trigrams of the training tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigramIndex(SortedIndex);

impl TrigramIndex {
    pub fn build(sentences: &[Sentence]) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::Empty("no sentences to build a trigram index from".into()));
        }
        let trigrams: BTreeSet<String> = sentences
            .iter()
            .flat_map(|s| tokenize(&s.text))
            .flat_map(|t| letter_trigrams(&t))
            .collect();
        if trigrams.is_empty() {
            return Err(Error::Empty("corpus contains no tokens".into()));
        }
        Ok(TrigramIndex(SortedIndex::from_set(trigrams)))
    }

    pub fn from_trigrams(trigrams: Vec<String>) -> Result<Self> {
        if let Some(bad) = trigrams.iter().find(|t| t.chars().count() != 3) {
            return Err(Error::Config(format!("{bad:?} is not a trigram")));
        }
        SortedIndex::from_sorted(trigrams, "trigram index").map(TrigramIndex)
    }

    pub fn trigrams(&self) -> &[String] {
        &self.0.entries
    }

    pub fn len(&self) -> usize {
        self.0.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.entries.is_empty()
    }

    pub fn vectorize(&self, sentence: &Sentence) -> Result<SentenceVector> {
        let trigrams: Vec<String> = tokenize(&sentence.text)
            .iter()
            .flat_map(|t| letter_trigrams(t))
            .collect();
        let (values, hits) = self.0.count(trigrams.iter().map(String::as_str));
        if hits == 0 {
            return Err(Error::Unencodable(sentence.id.clone()));
        }
        Ok(SentenceVector {
            values,
            kind: VectorizerKind::Hashing,
        })
    }
}

/// Pretrained word vectors, keyed by word. Lookups use lowercased tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddingTable {
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl WordEmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        Ok(WordEmbeddingTable {
            dim,
            entries: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(Error::dims(format!("embedding of {word:?}"), self.dim, vector.len()));
        }
        if self.entries.contains_key(&word) {
            return Err(Error::Duplicate(word));
        }
        self.entries.insert(word, vector);
        Ok(())
    }

    /// Parses the word2vec text format: a `<count> <dim>` header, then one
    /// `<word> v1 … v_dim` line per entry.
    pub fn load<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (count, dim) = match lines.next() {
            Some((_, line)) => {
                let line = line?;
                let mut parts = line.split_whitespace();
                let count = parts.next().and_then(|p| p.parse::<usize>().ok());
                let dim = parts.next().and_then(|p| p.parse::<usize>().ok());
                match (count, dim, parts.next()) {
                    (Some(c), Some(d), None) if d > 0 => (c, d),
                    _ => return Err(Error::parse(source_name, 1, "expected header \"<count> <dim>\"")),
                }
            }
            None => return Err(Error::parse(source_name, 1, "missing header")),
        };
        let mut table = WordEmbeddingTable::new(dim)?;
        for (i, line) in lines {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap_or_default().to_string();
            let vector = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::parse(source_name, lineno, format!("bad value: {e}")))?;
            if vector.len() != dim {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("{word:?} has {} values, header declares {dim}", vector.len()),
                ));
            }
            if table.entries.contains_key(&word) {
                return Err(Error::parse(source_name, lineno, format!("duplicate word {word:?}")));
            }
            table.entries.insert(word, vector);
        }
        if table.entries.len() != count {
            return Err(Error::parse(
                source_name,
                1,
                format!("header declares {count} entries, found {}", table.entries.len()),
            ));
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    /// Entries in byte order of the word.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    /// Mean of the embeddings of the in-table tokens. Out-of-table tokens are
    /// excluded from both the sum and the count.
    pub fn vectorize(&self, sentence: &Sentence) -> Result<SentenceVector> {
        let mut values = vec![0.0; self.dim];
        let mut used = 0usize;
        for token in tokenize(&sentence.text) {
            if let Some(v) = self.entries.get(&token) {
                values.iter_mut().zip(v).for_each(|(acc, x)| *acc += x);
                used += 1;
            }
        }
        if used == 0 {
            return Err(Error::Unencodable(sentence.id.clone()));
        }
        let n = used as f64;
        values.iter_mut().for_each(|x| *x /= n);
        Ok(SentenceVector {
            values,
            kind: VectorizerKind::Word2Vec,
        })
    }
}

/// One of the three vectorizer backends.
#[derive(Debug, Clone, PartialEq)]
pub enum Vectorizer {
    Bow(Vocabulary),
    Hashing(TrigramIndex),
    Word2Vec(WordEmbeddingTable),
}

impl Vectorizer {
    pub fn kind(&self) -> VectorizerKind {
        match self {
            Vectorizer::Bow(_) => VectorizerKind::Bow,
            Vectorizer::Hashing(_) => VectorizerKind::Hashing,
            Vectorizer::Word2Vec(_) => VectorizerKind::Word2Vec,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Vectorizer::Bow(v) => v.len(),
            Vectorizer::Hashing(t) => t.len(),
            Vectorizer::Word2Vec(e) => e.dim(),
        }
    }

    pub fn vectorize(&self, sentence: &Sentence) -> Result<SentenceVector> {
        match self {
            Vectorizer::Bow(v) => v.vectorize(sentence),
            Vectorizer::Hashing(t) => t.vectorize(sentence),
            Vectorizer::Word2Vec(e) => e.vectorize(sentence),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sentences(texts: &[&str]) -> Vec<Sentence> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Sentence::new(format!("s{i}"), *t).unwrap())
            .collect()
    }

    fn s(text: &str) -> Sentence {
        Sentence::new("q", text).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("A dog leaps over a log."),
            ["a", "dog", "leaps", "over", "a", "log"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Sea-wave!"), ["sea", "wave"]);
    }

    #[test]
    fn sentence_id_rules() {
        assert!(Sentence::new("", "x").is_err());
        assert!(Sentence::new("a\tb", "x").is_err());
        assert!(Sentence::new("a", "").is_ok());
    }

    #[test]
    fn vocabulary_union_and_dedup() {
        let v = Vocabulary::build(&sentences(&["a dog", "a cat"])).unwrap();
        assert_eq!(v.words(), ["a", "cat", "dog"]);
        assert_eq!(v.position("dog"), Some(2));

        let v = Vocabulary::build(&sentences(&["dog dog dog"])).unwrap();
        assert_eq!(v.words(), ["dog"]);

        assert!(Vocabulary::build(&sentences(&["...", "!?"])).is_err());
        assert!(Vocabulary::build(&[]).is_err());
    }

    #[test]
    fn vocabulary_from_words_requires_sorted_unique() {
        assert!(Vocabulary::from_words(vec!["b".into(), "a".into()]).is_err());
        assert!(Vocabulary::from_words(vec!["a".into(), "a".into()]).is_err());
        assert!(Vocabulary::from_words(vec![]).is_err());
    }

    #[test]
    fn bow_counts() {
        let v = Vocabulary::from_words(["a", "dog", "leaps", "log", "over"].map(String::from).to_vec()).unwrap();
        let out = v.vectorize(&s("a dog leaps over a log")).unwrap();
        assert_eq!(out.values, [2.0, 1.0, 1.0, 1.0, 1.0]);

        let v = Vocabulary::from_words(vec!["a".into(), "dog".into()]).unwrap();
        assert_eq!(v.vectorize(&s("a zebra")).unwrap().values, [1.0, 0.0]);
        assert!(matches!(v.vectorize(&s("zebra lion")), Err(Error::Unencodable(_))));
    }

    #[test]
    fn trigram_examples() {
        assert_eq!(letter_trigrams("cat"), ["#ca", "cat", "at#"]);
        assert_eq!(letter_trigrams("dog"), ["#do", "dog", "og#"]);
        assert_eq!(letter_trigrams("a"), ["#a#"]);
        assert!(letter_trigrams("").is_empty());
    }

    #[test]
    fn trigram_index_examples() {
        let t = TrigramIndex::build(&sentences(&["cat"])).unwrap();
        assert_eq!(t.trigrams(), ["#ca", "at#", "cat"]);
        let t2 = TrigramIndex::build(&sentences(&["cat", "cat"])).unwrap();
        assert_eq!(t, t2);

        // Windows of "a", "dog", "cat": #a# | #do dog og# | #ca cat at#
        let t = TrigramIndex::build(&sentences(&["a dog", "a cat"])).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.trigrams(), ["#a#", "#ca", "#do", "at#", "cat", "dog", "og#"]);
    }

    #[test]
    fn hashing_counts() {
        let t = TrigramIndex::build(&sentences(&["cat"])).unwrap();
        assert_eq!(t.vectorize(&s("cat")).unwrap().values, [1.0, 1.0, 1.0]);
        assert_eq!(t.vectorize(&s("cat cat")).unwrap().values, [2.0, 2.0, 2.0]);
        assert!(matches!(t.vectorize(&s("dog")), Err(Error::Unencodable(_))));
    }

    #[test]
    fn trigram_list_validation() {
        assert!(TrigramIndex::from_trigrams(vec!["#ca".into(), "ca".into()]).is_err());
        assert!(TrigramIndex::from_trigrams(vec!["#ca".into(), "at#".into()]).is_ok());
    }

    #[test]
    fn embedding_file_parsing() {
        let t = WordEmbeddingTable::load("2 2\ndog 1 0\ncat 0 1".as_bytes(), "emb").unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("cat"), Some(&[0.0, 1.0][..]));

        assert!(WordEmbeddingTable::load("1 3\ndog 1 0".as_bytes(), "emb").is_err());
        assert!(WordEmbeddingTable::load("2 2\ndog 1 0\ndog 0 1".as_bytes(), "emb").is_err());
        assert!(WordEmbeddingTable::load("two 2\ndog 1 0".as_bytes(), "emb").is_err());
        assert!(WordEmbeddingTable::load("1 0\n".as_bytes(), "emb").is_err());
        assert!(WordEmbeddingTable::load("3 2\ndog 1 0".as_bytes(), "emb").is_err());
        assert!(WordEmbeddingTable::load("".as_bytes(), "emb").is_err());
    }

    #[test]
    fn w2v_mean_pooling() {
        let t = WordEmbeddingTable::load("2 2\ndog 1 0\ncat 0 1".as_bytes(), "emb").unwrap();
        assert_eq!(t.vectorize(&s("dog cat")).unwrap().values, [0.5, 0.5]);

        let t = WordEmbeddingTable::load("1 2\ndog 1 0".as_bytes(), "emb").unwrap();
        assert_eq!(t.vectorize(&s("dog dog")).unwrap().values, [1.0, 0.0]);
        assert_eq!(t.vectorize(&s("dog zebra")).unwrap().values, [1.0, 0.0]);
        assert!(t.vectorize(&s("zebra")).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in [VectorizerKind::Bow, VectorizerKind::Hashing, VectorizerKind::Word2Vec] {
            assert_eq!(kind.to_string().parse::<VectorizerKind>().unwrap(), kind);
            assert_eq!(VectorizerKind::from_tag(kind.tag()), Some(kind));
        }
        assert_eq!("trigram".parse::<VectorizerKind>().unwrap(), VectorizerKind::Hashing);
        assert!("tfidf".parse::<VectorizerKind>().is_err());
    }

    /// Generates `count` distinct lowercase words of length >= 6.
    fn long_words(count: usize) -> Vec<String> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let syllables = ["ka", "ro", "mi", "te", "su", "la", "no", "pe", "vi", "da"];
        let mut seen = BTreeSet::new();
        while seen.len() < count {
            let n = rng.gen_range(3..=5);
            let word: String = (0..n).map(|_| syllables[rng.gen_range(0..syllables.len())]).collect();
            seen.insert(word);
        }
        seen.into_iter().collect()
    }

    #[test]
    fn trigram_index_smaller_than_vocabulary_on_long_words() {
        let words = long_words(1200);
        let corpus: Vec<Sentence> = words
            .chunks(8)
            .enumerate()
            .map(|(i, c)| Sentence::new(format!("s{i}"), c.join(" ")).unwrap())
            .collect();
        let vocab = Vocabulary::build(&corpus).unwrap();
        let index = TrigramIndex::build(&corpus).unwrap();
        assert_eq!(vocab.len(), 1200);
        assert!(index.len() < vocab.len(), "{} trigrams", index.len());
        let max_padded = words.iter().map(|w| w.len() + 2).max().unwrap();
        assert!(index.len() <= vocab.len() * max_padded);
    }

    fn word_strategy() -> impl Strategy<Value = String> {
        "[a-z0-9]{1,10}"
    }

    proptest! {
        #[test]
        fn trigram_count_equals_word_length(word in word_strategy()) {
            prop_assert_eq!(letter_trigrams(&word).len(), word.chars().count());
        }

        #[test]
        fn count_vectors_have_expected_l1_norm(
            train in prop::collection::vec(prop::collection::vec(word_strategy(), 1..6), 1..6),
            query in prop::collection::vec(word_strategy(), 1..8),
        ) {
            let corpus: Vec<Sentence> = train
                .iter()
                .enumerate()
                .map(|(i, w)| Sentence::new(format!("t{i}"), w.join(" ")).unwrap())
                .collect();
            let vocab = Vocabulary::build(&corpus).unwrap();
            let index = TrigramIndex::build(&corpus).unwrap();
            let q = Sentence::new("q", query.join(" ")).unwrap();

            let in_vocab = query.iter().filter(|w| vocab.position(w).is_some()).count();
            match vocab.vectorize(&q) {
                Ok(v) => {
                    prop_assert!(v.values.iter().all(|x| *x >= 0.0 && x.fract() == 0.0));
                    prop_assert_eq!(v.values.iter().sum::<f64>(), in_vocab as f64);
                }
                Err(_) => prop_assert_eq!(in_vocab, 0),
            }

            let known: usize = query
                .iter()
                .flat_map(|w| letter_trigrams(w))
                .filter(|t| index.trigrams().binary_search(t).is_ok())
                .count();
            match index.vectorize(&q) {
                Ok(v) => {
                    prop_assert!(v.values.iter().all(|x| *x >= 0.0 && x.fract() == 0.0));
                    prop_assert_eq!(v.values.iter().sum::<f64>(), known as f64);
                    prop_assert_eq!(v.clone(), index.vectorize(&q).unwrap());
                }
                Err(_) => prop_assert_eq!(known, 0),
            }
        }

        #[test]
        fn w2v_output_in_convex_hull(
            vectors in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..6),
            picks in prop::collection::vec(0usize..6, 1..8),
        ) {
            let mut table = WordEmbeddingTable::new(3).unwrap();
            for (i, v) in vectors.iter().enumerate() {
                table.insert(format!("w{i}"), v.clone()).unwrap();
            }
            let used: Vec<usize> = picks.iter().map(|p| p % vectors.len()).collect();
            let text: Vec<String> = used.iter().map(|i| format!("w{i}")).collect();
            let out = table.vectorize(&Sentence::new("q", text.join(" ")).unwrap()).unwrap();
            for (d, &v) in out.values.iter().enumerate() {
                let lo = used.iter().map(|&i| vectors[i][d]).fold(f64::INFINITY, f64::min);
                let hi = used.iter().map(|&i| vectors[i][d]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
            let single = table.vectorize(&Sentence::new("q", "w0").unwrap()).unwrap();
            prop_assert_eq!(single.values, vectors[0].clone());
        }
    }
}
