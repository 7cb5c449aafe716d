//! Seeded synthetic caption corpus with known structure.
//!
//! A set of concepts each owns a disjoint vocabulary and a non-negative
//! unit-norm centroid in the feature space. Every item combines two concepts:
//! its target is the normalized sum of their centroids and its sentences
//! draw words from the union of their vocabularies. Held-out items use
//! concept pairs never seen together in training, so retrieval on them
//! requires generalizing word-level evidence.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::retrieval::VisualFeature;
use crate::textvec::Sentence;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub concepts: usize,
    pub words_per_concept: usize,
    pub dim: usize,
    /// Active coordinates per concept centroid.
    pub active_dims: usize,
    pub train_items: usize,
    pub val_items: usize,
    pub test_items: usize,
    pub sentences_per_item: usize,
    pub distractors: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            concepts: 12,
            words_per_concept: 20,
            dim: 32,
            active_dims: 8,
            train_items: 40,
            val_items: 5,
            test_items: 5,
            sentences_per_item: 5,
            distractors: 250,
            min_words: 6,
            max_words: 10,
            seed: 2017,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    pub words: Vec<String>,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: String,
    pub concepts: (usize, usize),
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub concepts: Vec<Concept>,
    pub train_items: Vec<Item>,
    pub val_items: Vec<Item>,
    pub test_items: Vec<Item>,
    pub train_sentences: Vec<Sentence>,
    pub val_sentences: Vec<Sentence>,
    pub test_sentences: Vec<Sentence>,
    /// Extra sentences describing training items, mixed into test pools.
    pub distractors: Vec<Sentence>,
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

impl SyntheticCorpus {
    pub fn generate(cfg: &SyntheticConfig) -> Result<Self> {
        let n_items = cfg.train_items + cfg.val_items + cfg.test_items;
        let n_pairs = cfg.concepts * cfg.concepts.saturating_sub(1) / 2;
        if n_items > n_pairs {
            return Err(Error::Config(format!(
                "{n_items} items need more than {n_pairs} concept pairs"
            )));
        }
        if cfg.active_dims == 0 || cfg.active_dims > cfg.dim || cfg.min_words < 2 || cfg.min_words > cfg.max_words {
            return Err(Error::Config("inconsistent synthetic corpus settings".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

        let dims: Vec<usize> = (0..cfg.dim).collect();
        let concepts: Vec<Concept> = (0..cfg.concepts)
            .map(|c| {
                let mut centroid = vec![0.0; cfg.dim];
                for &d in dims.choose_multiple(&mut rng, cfg.active_dims) {
                    centroid[d] = rng.gen_range(0.2..1.0);
                }
                normalize(&mut centroid);
                let words = (0..cfg.words_per_concept).map(|w| format!("c{c:02}w{w:02}")).collect();
                Concept { words, centroid }
            })
            .collect();

        let mut pairs: Vec<(usize, usize)> = (0..cfg.concepts)
            .flat_map(|a| (a + 1..cfg.concepts).map(move |b| (a, b)))
            .collect();
        // Reshuffle until every held-out concept also occurs in training.
        loop {
            pairs.shuffle(&mut rng);
            let seen: BTreeSet<usize> = pairs[..cfg.train_items].iter().flat_map(|&(a, b)| [a, b]).collect();
            if pairs[cfg.train_items..n_items]
                .iter()
                .all(|(a, b)| seen.contains(a) && seen.contains(b))
            {
                break;
            }
        }

        let items: Vec<Item> = pairs[..n_items]
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let mut target: Vec<f64> = concepts[a]
                    .centroid
                    .iter()
                    .zip(&concepts[b].centroid)
                    .map(|(x, y)| x + y)
                    .collect();
                normalize(&mut target);
                Item {
                    id: format!("item{i:02}"),
                    concepts: (a, b),
                    target,
                }
            })
            .collect();

        let sentence = |rng: &mut ChaCha8Rng, id: String, item: &Item| {
            let (a, b) = item.concepts;
            let len = rng.gen_range(cfg.min_words..=cfg.max_words);
            let mut words: Vec<&str> = vec![
                concepts[a].words.choose(rng).unwrap(),
                concepts[b].words.choose(rng).unwrap(),
            ];
            while words.len() < len {
                let c = if rng.gen::<bool>() { a } else { b };
                words.push(concepts[c].words.choose(rng).unwrap());
            }
            words.shuffle(rng);
            Sentence::new(id, words.join(" "))
        };

        let describe = |rng: &mut ChaCha8Rng, items: &[Item]| -> Result<Vec<Sentence>> {
            let mut out = Vec::new();
            for item in items {
                for k in 0..cfg.sentences_per_item {
                    out.push(sentence(rng, format!("{}#{k}", item.id), item)?);
                }
            }
            Ok(out)
        };

        let train_items = items[..cfg.train_items].to_vec();
        let val_items = items[cfg.train_items..cfg.train_items + cfg.val_items].to_vec();
        let test_items = items[cfg.train_items + cfg.val_items..].to_vec();
        let train_sentences = describe(&mut rng, &train_items)?;
        let val_sentences = describe(&mut rng, &val_items)?;
        let test_sentences = describe(&mut rng, &test_items)?;
        let mut distractors = Vec::with_capacity(cfg.distractors);
        for k in 0..cfg.distractors {
            let item = &train_items[rng.gen_range(0..train_items.len())];
            distractors.push(sentence(&mut rng, format!("{}#d{k:03}", item.id), item)?);
        }

        Ok(SyntheticCorpus {
            concepts,
            train_items,
            val_items,
            test_items,
            train_sentences,
            val_sentences,
            test_sentences,
            distractors,
        })
    }

    /// Feature rows for every item.
    pub fn features(&self) -> Vec<VisualFeature> {
        self.train_items
            .iter()
            .chain(&self.val_items)
            .chain(&self.test_items)
            .map(|i| VisualFeature::new(i.id.clone(), i.target.clone()))
            .collect()
    }

    pub fn item_features(items: &[Item]) -> Vec<VisualFeature> {
        items
            .iter()
            .map(|i| VisualFeature::new(i.id.clone(), i.target.clone()))
            .collect()
    }

    /// Concept that owns `word`, if any.
    pub fn concept_of(&self, word: &str) -> Option<usize> {
        self.concepts.iter().position(|c| c.words.iter().any(|w| w == word))
    }
}
