//! Hashed bag-of-character-n-grams logistic regression.
//!
//! The fastText recipe without the embedding layer: character n-grams
//! are hashed into a fixed number of buckets, counted, L2-normalized
//! and fed to a logistic model trained by seeded SGD. Everything is
//! deterministic for a fixed (data, hyperparameters, seed) triple.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::hashing::hash64;

/// Feature extraction parameters, shared by training and scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureParams {
    /// Number of hash buckets; must be a power of two, at least 2^10.
    pub dim: usize,
    /// Character n-gram orders, e.g. {1,2}.
    pub ngram_orders: Vec<usize>,
    pub hash_seed: u64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams { dim: 1 << 18, ngram_orders: vec![1, 2], hash_seed: 0x6667_7261_6d68 }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<(), Error> {
        if self.dim < (1 << 10) || !self.dim.is_power_of_two() {
            return Err(Error::Config("dim must be a power of two >= 2^10".into()));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.contains(&0) {
            return Err(Error::Config("ngram_orders must be non-empty, all >= 1".into()));
        }
        Ok(())
    }
}

/// L2-normalized sparse count vector of hashed character n-grams.
/// Indices are sorted and unique; empty text gives an empty vector.
pub fn featurize(text: &str, params: &FeatureParams) -> Vec<(u32, f64)> {
    let chars: Vec<char> = text.chars().collect();
    let mask = (params.dim - 1) as u64;
    let mut counts: std::collections::HashMap<u32, f64> = std::collections::HashMap::new();
    let mut buf = String::new();
    for &order in &params.ngram_orders {
        if chars.len() < order {
            continue;
        }
        for window in chars.windows(order) {
            buf.clear();
            buf.extend(window.iter());
            let idx = (hash64(buf.as_bytes(), params.hash_seed ^ order as u64) & mask) as u32;
            *counts.entry(idx).or_insert(0.0) += 1.0;
        }
    }
    let norm: f64 = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    let mut features: Vec<(u32, f64)> = if norm > 0.0 {
        counts.into_iter().map(|(i, v)| (i, v / norm)).collect()
    } else {
        Vec::new()
    };
    features.sort_unstable_by_key(|&(i, _)| i);
    features
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Trained linear model over hashed n-gram features. Immutable after
/// training.
#[derive(Debug, Clone)]
pub struct LinearTextClassifier {
    pub params: FeatureParams,
    weights: Vec<f64>,
    bias: f64,
    /// Free-form provenance string (corpus sizes, hyperparameters).
    pub trained_on: String,
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub features: FeatureParams,
    pub seed: u64,
    /// Fraction of each class held out for accuracy reporting; 0 disables.
    pub validation_fraction: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 5,
            learning_rate: 0.5,
            features: FeatureParams::default(),
            seed: 1,
            validation_fraction: 0.1,
        }
    }
}

/// Model plus held-out accuracy when a validation split was configured.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearTextClassifier,
    pub held_out_accuracy: Option<f64>,
}

impl LinearTextClassifier {
    /// Fit by logistic-loss SGD over seeded-shuffled examples.
    /// Positive examples get label 1.
    pub fn train(pos: &[String], neg: &[String], hyper: &TrainParams) -> Result<TrainOutcome, Error> {
        hyper.features.validate()?;
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::Model("training requires both classes to be non-empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);

        let split = |docs: &[String], rng: &mut ChaCha8Rng| -> (Vec<usize>, Vec<usize>) {
            let mut idx: Vec<usize> = (0..docs.len()).collect();
            idx.shuffle(rng);
            let n_val = if hyper.validation_fraction > 0.0 {
                ((docs.len() as f64) * hyper.validation_fraction).floor() as usize
            } else {
                0
            };
            let val = idx[..n_val].to_vec();
            let train = idx[n_val..].to_vec();
            (train, val)
        };
        let (pos_train, pos_val) = split(pos, &mut rng);
        let (neg_train, neg_val) = split(neg, &mut rng);
        if pos_train.is_empty() || neg_train.is_empty() {
            return Err(Error::Model("validation split leaves an empty class".into()));
        }

        // Pre-featurize once; examples are (features, label).
        let mut examples: Vec<(Vec<(u32, f64)>, f64)> = Vec::new();
        for &i in &pos_train {
            examples.push((featurize(&pos[i], &hyper.features), 1.0));
        }
        for &i in &neg_train {
            examples.push((featurize(&neg[i], &hyper.features), 0.0));
        }

        let mut weights = vec![0.0f64; hyper.features.dim];
        let mut bias = 0.0f64;
        let mut order: Vec<usize> = (0..examples.len()).collect();
        for _ in 0..hyper.epochs {
            order.shuffle(&mut rng);
            for &e in &order {
                let (features, label) = &examples[e];
                let mut z = bias;
                for &(i, v) in features {
                    z += weights[i as usize] * v;
                }
                let err = sigmoid(z) - label;
                let step = hyper.learning_rate * err;
                bias -= step;
                for &(i, v) in features {
                    weights[i as usize] -= step * v;
                }
            }
        }

        let model = LinearTextClassifier {
            params: hyper.features.clone(),
            weights,
            bias,
            trained_on: format!(
                "pos={} neg={} epochs={} lr={} seed={}",
                pos.len(),
                neg.len(),
                hyper.epochs,
                hyper.learning_rate,
                hyper.seed
            ),
        };

        let held_out_accuracy = if pos_val.is_empty() && neg_val.is_empty() {
            None
        } else {
            let mut correct = 0usize;
            let mut total = 0usize;
            for &i in &pos_val {
                total += 1;
                if model.score(&pos[i]) >= 0.5 {
                    correct += 1;
                }
            }
            for &i in &neg_val {
                total += 1;
                if model.score(&neg[i]) < 0.5 {
                    correct += 1;
                }
            }
            Some(correct as f64 / total as f64)
        };

        Ok(TrainOutcome { model, held_out_accuracy })
    }

    /// sigmoid(weights . featurize(text) + bias), always in (0,1).
    pub fn score(&self, text: &str) -> f64 {
        let features = featurize(text, &self.params);
        let mut z = self.bias;
        for (i, v) in features {
            z += self.weights[i as usize] * v;
        }
        sigmoid(z)
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Test-support constructor for hand-built models.
    pub fn from_parts(params: FeatureParams, weights: Vec<f64>, bias: f64) -> Self {
        assert_eq!(weights.len(), params.dim);
        LinearTextClassifier { params, weights, bias, trained_on: "hand-built".into() }
    }

    // -- model file format ------------------------------------------------
    //
    // Versioned little-endian binary blob:
    //   magic "ZPLC" | version u32 | dim u64 | n_orders u64 | orders u64*
    //   | hash_seed u64 | bias f64 | weights f64[dim] | checksum u64
    // The checksum is hash64 over every preceding byte.

    const MAGIC: &'static [u8; 4] = b"ZPLC";
    const VERSION: u32 = 1;
    const CHECKSUM_SEED: u64 = 0x636c_6673_756d;

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let mut buf: Vec<u8> = Vec::with_capacity(32 + self.weights.len() * 8);
        buf.extend_from_slice(Self::MAGIC);
        buf.extend_from_slice(&Self::VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.params.dim as u64).to_le_bytes());
        buf.extend_from_slice(&(self.params.ngram_orders.len() as u64).to_le_bytes());
        for &o in &self.params.ngram_orders {
            buf.extend_from_slice(&(o as u64).to_le_bytes());
        }
        buf.extend_from_slice(&self.params.hash_seed.to_le_bytes());
        buf.extend_from_slice(&self.bias.to_le_bytes());
        for &w in &self.weights {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        let checksum = hash64(&buf, Self::CHECKSUM_SEED);
        buf.extend_from_slice(&checksum.to_le_bytes());
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&buf).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| Error::io(path, e))?
            .read_to_end(&mut buf)
            .map_err(|e| Error::io(path, e))?;
        if buf.len() < 8 {
            return Err(Error::Model(format!("{}: truncated model file", path.display())));
        }
        let (body, tail) = buf.split_at(buf.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().unwrap());
        if hash64(body, Self::CHECKSUM_SEED) != stored {
            return Err(Error::Model(format!("{}: model checksum mismatch", path.display())));
        }

        let mut offset = 0usize;
        let mut take = |n: usize| -> Result<&[u8], Error> {
            let end = offset + n;
            if end > body.len() {
                return Err(Error::Model(format!("{}: truncated model file", path.display())));
            }
            let head = &body[offset..end];
            offset = end;
            Ok(head)
        };
        let magic = take(4)?;
        if magic != Self::MAGIC {
            return Err(Error::Model(format!("{}: not a classifier model file", path.display())));
        }
        let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
        if version != Self::VERSION {
            return Err(Error::Model(format!("{}: unsupported model version {version}", path.display())));
        }
        let dim = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let n_orders = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let mut ngram_orders = Vec::with_capacity(n_orders);
        for _ in 0..n_orders {
            ngram_orders.push(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize);
        }
        let hash_seed = u64::from_le_bytes(take(8)?.try_into().unwrap());
        let bias = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let mut weights = Vec::with_capacity(dim);
        for _ in 0..dim {
            weights.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        let params = FeatureParams { dim, ngram_orders, hash_seed };
        params.validate()?;
        Ok(LinearTextClassifier { params, weights, bias, trained_on: String::new() })
    }
}

/// Synthetic corpora over disjoint character pools, linearly separable
/// by construction. Test support.
#[cfg(test)]
pub(crate) fn disjoint_vocab_corpora(n: usize, seed: u64) -> (Vec<String>, Vec<String>) {
    use rand::Rng;
    let pos_pool: Vec<char> = "电脑软件程序数据网络科学技术研究发展".chars().collect();
    let neg_pool: Vec<char> = "苹果香蕉橙子葡萄西瓜草莓柠檬樱桃菠萝".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = |pool: &[char]| -> String {
        let len = rng.random_range(20..60);
        (0..len).map(|_| pool[rng.random_range(0..pool.len())]).collect()
    };
    let pos = (0..n).map(|_| sample(&pos_pool)).collect();
    let neg = (0..n).map(|_| sample(&neg_pool)).collect();
    (pos, neg)
}
