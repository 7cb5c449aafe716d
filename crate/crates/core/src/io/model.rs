//! Binary model file, little-endian throughout:
//!
//! ```text
//! "W2VV" version:u8 kind:u8 backend
//!   bow / hashing:  n:u64 { len:u64 utf8 }*n
//!   word2vec:       dim:u64 n:u64 { len:u64 utf8 }*n  f64*(n*dim)
//! layers:u64 { rows:u64 cols:u64 W:f64*(rows*cols) b:f64*rows }*layers
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::neuralnet::{encode, Layer, NetworkParams};
use crate::textvec::{Sentence, TrigramIndex, Vectorizer, VectorizerKind, Vocabulary, WordEmbeddingTable};

pub const MODEL_MAGIC: &[u8; 4] = b"W2VV";
pub const MODEL_VERSION: u8 = 1;

/// A trained network bundled with the vectorizer that feeds it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub vectorizer: Vectorizer,
    pub params: NetworkParams,
}

impl Model {
    pub fn new(vectorizer: Vectorizer, params: NetworkParams) -> Result<Self> {
        if vectorizer.dim() != params.input_dim() {
            return Err(Error::dims(
                "network input vs vectorizer",
                vectorizer.dim(),
                params.input_dim(),
            ));
        }
        Ok(Model { vectorizer, params })
    }

    pub fn output_dim(&self) -> usize {
        self.params.output_dim()
    }

    /// Vectorizes and projects a sentence into the visual space.
    pub fn encode(&self, sentence: &Sentence) -> Result<Vec<f64>> {
        let sv = self.vectorizer.vectorize(sentence)?;
        encode(&self.params, &sv)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.push(MODEL_VERSION);
        out.push(self.vectorizer.kind().tag());
        match &self.vectorizer {
            Vectorizer::Bow(v) => put_strings(&mut out, v.words()),
            Vectorizer::Hashing(t) => put_strings(&mut out, t.trigrams()),
            Vectorizer::Word2Vec(e) => {
                put_u64(&mut out, e.dim() as u64);
                let words: Vec<String> = e.iter().map(|(w, _)| w.to_string()).collect();
                put_strings(&mut out, &words);
                for (_, v) in e.iter() {
                    v.iter().for_each(|x| put_f64(&mut out, *x));
                }
            }
        }
        put_u64(&mut out, self.params.layers().len() as u64);
        for layer in self.params.layers() {
            put_u64(&mut out, layer.rows as u64);
            put_u64(&mut out, layer.cols as u64);
            layer.weights.iter().for_each(|x| put_f64(&mut out, *x));
            layer.bias.iter().for_each(|x| put_f64(&mut out, *x));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::Model("bad magic".into()));
        }
        let version = r.u8()?;
        if version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported version {version}")));
        }
        let tag = r.u8()?;
        let kind =
            VectorizerKind::from_tag(tag).ok_or_else(|| Error::Model(format!("unknown vectorizer tag {tag}")))?;
        let vectorizer = match kind {
            VectorizerKind::Bow => {
                Vectorizer::Bow(Vocabulary::from_words(r.strings()?).map_err(|e| Error::Model(e.to_string()))?)
            }
            VectorizerKind::Hashing => {
                Vectorizer::Hashing(TrigramIndex::from_trigrams(r.strings()?).map_err(|e| Error::Model(e.to_string()))?)
            }
            VectorizerKind::Word2Vec => {
                let dim = r.len()?;
                let words = r.strings()?;
                let mut table = WordEmbeddingTable::new(dim).map_err(|e| Error::Model(e.to_string()))?;
                for w in words {
                    let v = r.f64s(dim)?;
                    table.insert(w, v).map_err(|e| Error::Model(e.to_string()))?;
                }
                Vectorizer::Word2Vec(table)
            }
        };
        let count = r.len()?;
        let mut layers = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let rows = r.len()?;
            let cols = r.len()?;
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::Model("layer too large".into()))?;
            let weights = r.f64s(n)?;
            let bias = r.f64s(rows)?;
            layers.push(Layer::new(rows, cols, weights, bias).map_err(|e| Error::Model(e.to_string()))?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Model(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let params = NetworkParams::from_layers(layers).map_err(|e| Error::Model(e.to_string()))?;
        Model::new(vectorizer, params).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Model::from_bytes(&bytes)
    }
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_strings(out: &mut Vec<u8>, items: &[String]) {
    put_u64(out, items.len() as u64);
    for s in items {
        put_u64(out, s.len() as u64);
        out.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Model("unexpected end of file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Model("length overflows usize".into()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Model("length overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.len()?;
        let mut out = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let len = self.len()?;
            let s = std::str::from_utf8(self.take(len)?).map_err(|_| Error::Model("entry is not UTF-8".into()))?;
            out.push(s.to_string());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::NetworkConfig;

    fn corpus() -> Vec<Sentence> {
        vec![
            Sentence::new("a#0", "a dog runs").unwrap(),
            Sentence::new("b#0", "a cat sleeps").unwrap(),
        ]
    }

    fn models() -> Vec<Model> {
        let bow = Vectorizer::Bow(Vocabulary::build(&corpus()).unwrap());
        let hashing = Vectorizer::Hashing(TrigramIndex::build(&corpus()).unwrap());
        let w2v =
            Vectorizer::Word2Vec(WordEmbeddingTable::load("2 3\ndog 1 0 0.5\ncat 0 1 -0.25".as_bytes(), "e").unwrap());
        [bow, hashing, w2v]
            .into_iter()
            .map(|v| {
                let cfg = NetworkConfig::new(vec![v.dim(), 4, 3]).unwrap();
                Model::new(v, NetworkParams::init(&cfg, 5).unwrap()).unwrap()
            })
            .collect()
    }

    #[test]
    fn round_trips_every_backend() {
        for m in models() {
            let bytes = m.to_bytes();
            assert_eq!(&bytes[..4], b"W2VV");
            assert_eq!(bytes[4], MODEL_VERSION);
            assert_eq!(bytes[5], m.vectorizer.kind().tag());
            let back = Model::from_bytes(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn bow_layout_is_exact() {
        let v = Vectorizer::Bow(Vocabulary::from_words(vec!["ab".into()]).unwrap());
        let layer = Layer::new(1, 1, vec![1.5], vec![-2.0]).unwrap();
        let m = Model::new(v, NetworkParams::from_layers(vec![layer]).unwrap()).unwrap();
        let mut expected = b"W2VV\x01\x00".to_vec();
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&2u64.to_le_bytes());
        expected.extend_from_slice(b"ab");
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&1.5f64.to_le_bytes());
        expected.extend_from_slice(&(-2.0f64).to_le_bytes());
        assert_eq!(m.to_bytes(), expected);
    }

    #[test]
    fn rejects_corrupt_files() {
        let bytes = models().remove(0).to_bytes();
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(Model::from_bytes(&bad_magic), Err(Error::Model(_))));
        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(matches!(Model::from_bytes(&bad_version), Err(Error::Model(_))));
        let mut bad_kind = bytes.clone();
        bad_kind[5] = 7;
        assert!(Model::from_bytes(&bad_kind).is_err());
        assert!(Model::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(Model::from_bytes(&trailing).is_err());
        assert!(Model::from_bytes(b"").is_err());
    }

    #[test]
    fn encode_uses_embedded_vectorizer() {
        let m = models().remove(0);
        let r = m.encode(&Sentence::new("q", "a dog").unwrap()).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|&v| v >= 0.0));
        assert!(matches!(
            m.encode(&Sentence::new("q", "zebra").unwrap()),
            Err(Error::Unencodable(_))
        ));
    }

    #[test]
    fn mismatched_vectorizer_rejected() {
        let v = Vectorizer::Bow(Vocabulary::build(&corpus()).unwrap());
        let cfg = NetworkConfig::new(vec![v.dim() + 1, 2]).unwrap();
        assert!(Model::new(v, NetworkParams::init(&cfg, 0).unwrap()).is_err());
    }
}
