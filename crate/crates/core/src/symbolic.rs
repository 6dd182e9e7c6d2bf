//! Words over a finite alphabet, cylinder weights, and entropy functionals of
//! finite-level measures. All logarithms are natural; entropies are in nats.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Tolerance on the total mass of a probability vector or level measure.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Finite word `i_1 i_2 … i_n`, letters zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Build from one-based letters, as words are usually written.
    pub fn from_one_based(letters: &[usize]) -> Self {
        Word(letters.iter().map(|&l| l - 1).collect())
    }

    pub fn repeated(letter: usize, len: usize) -> Self {
        Word(vec![letter; len])
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l >= alphabet) {
            Some(&letter) => Err(Error::LetterOutOfRange { letter, alphabet }),
            None => Ok(()),
        }
    }

    /// Position of the word in the lexicographic order of `Σ_n`.
    pub fn lex_index(&self, alphabet: usize) -> usize {
        lex_index(&self.0, alphabet)
    }

    /// Inverse of [`Word::lex_index`].
    pub fn from_lex_index(mut index: usize, alphabet: usize, len: usize) -> Word {
        let mut v = vec![0; len];
        for slot in v.iter_mut().rev() {
            *slot = index % alphabet;
            index /= alphabet;
        }
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", l + 1)?;
        }
        write!(f, ")")
    }
}

pub fn lex_index(letters: &[usize], alphabet: usize) -> usize {
    letters.iter().fold(0, |acc, &l| acc * alphabet + l)
}

/// `N^n`, or `None` on overflow.
pub fn level_size(alphabet: usize, depth: usize) -> Option<usize> {
    alphabet.checked_pow(u32::try_from(depth).ok()?)
}

/// Weights `μ([𝚒])` of cylinder sets.
///
/// Implementations must be probability-consistent (the weights of `Σ_n` sum
/// to one for every `n`) and quasi-Bernoulli with constant
/// [`qb_constant`](CylinderWeightModel::qb_constant).
pub trait CylinderWeightModel: Send + Sync {
    fn alphabet_size(&self) -> usize;

    /// `log μ([word])`; `-inf` for a null cylinder.
    fn log_weight(&self, word: &[usize]) -> f64;

    fn weight(&self, word: &[usize]) -> f64 {
        self.log_weight(word).exp()
    }

    /// `log μ([word])` given the value for `word` minus its last letter.
    /// Models with product structure override this for O(1) updates.
    fn log_weight_step(&self, word: &[usize], _parent_log: f64) -> f64 {
        self.log_weight(word)
    }

    fn qb_constant(&self) -> f64;

    fn as_bernoulli(&self) -> Option<&Bernoulli> {
        None
    }

    fn describe(&self) -> String;
}

/// Bernoulli measure of a strictly positive probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bernoulli {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl Bernoulli {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Config("empty probability vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::Config(format!(
                "probabilities must be strictly positive (got {p})"
            )));
        }
        let total = pairwise_sum(&probs);
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::Config(format!(
                "probabilities must sum to 1 (got {total})"
            )));
        }
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Ok(Bernoulli { probs, log_probs })
    }

    pub fn uniform(n: usize) -> Self {
        Bernoulli::new(vec![1.0 / n as f64; n]).expect("uniform vector is valid")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// Shannon entropy `−Σ p_i log p_i`.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .zip(&self.log_probs)
            .map(|(p, l)| p * l)
            .sum::<f64>()
    }
}

impl CylinderWeightModel for Bernoulli {
    fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    fn log_weight(&self, word: &[usize]) -> f64 {
        word.iter().map(|&l| self.log_probs[l]).sum()
    }

    #[inline]
    fn log_weight_step(&self, word: &[usize], parent_log: f64) -> f64 {
        parent_log + self.log_probs[*word.last().expect("non-empty word")]
    }

    fn qb_constant(&self) -> f64 {
        1.0
    }

    fn as_bernoulli(&self) -> Option<&Bernoulli> {
        Some(self)
    }

    fn describe(&self) -> String {
        format!("bernoulli{:?}", self.probs)
    }
}

/// `μ([word])` for a Bernoulli vector `p`.
pub fn bernoulli_weight(p: &[f64], word: &Word) -> Result<f64> {
    let model = Bernoulli::new(p.to_vec())?;
    word.check_alphabet(model.alphabet_size())?;
    Ok(model.weight(word.letters()))
}

/// Probability vector on `Σ_n`, indexed lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMeasure {
    alphabet: usize,
    depth: usize,
    weights: Vec<f64>,
}

impl LevelMeasure {
    pub fn new(alphabet: usize, depth: usize, weights: Vec<f64>) -> Result<Self> {
        if Some(weights.len()) != level_size(alphabet, depth) {
            return Err(Error::InvalidArgument(format!(
                "expected {alphabet}^{depth} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "negative or non-finite weight".into(),
            ));
        }
        let total = pairwise_sum(&weights);
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "level weights sum to {total}, expected 1"
            )));
        }
        Ok(LevelMeasure {
            alphabet,
            depth,
            weights,
        })
    }

    /// Normalize nonnegative weights given in log form.
    pub fn from_log_weights(alphabet: usize, depth: usize, logs: &[f64]) -> Result<Self> {
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument("all weights vanish".into()));
        }
        let raw: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total = pairwise_sum(&raw);
        let weights = raw.into_iter().map(|w| w / total).collect();
        LevelMeasure::new(alphabet, depth, weights)
    }

    pub fn uniform(alphabet: usize, depth: usize) -> Self {
        let size = level_size(alphabet, depth).expect("level size fits in usize");
        LevelMeasure {
            alphabet,
            depth,
            weights: vec![1.0 / size as f64; size],
        }
    }

    pub fn point_mass(alphabet: usize, word: &Word) -> Result<Self> {
        word.check_alphabet(alphabet)?;
        let size = level_size(alphabet, word.len())
            .ok_or_else(|| Error::InvalidArgument("level too large".into()))?;
        let mut weights = vec![0.0; size];
        weights[word.lex_index(alphabet)] = 1.0;
        LevelMeasure::new(alphabet, word.len(), weights)
    }

    /// Level-`depth` marginal of a cylinder model.
    pub fn from_model(model: &dyn CylinderWeightModel, depth: usize) -> Result<Self> {
        let alphabet = model.alphabet_size();
        let size = level_size(alphabet, depth)
            .ok_or_else(|| Error::InvalidArgument("level too large".into()))?;
        let weights = (0..size)
            .map(|k| model.weight(Word::from_lex_index(k, alphabet, depth).letters()))
            .collect();
        LevelMeasure::new(alphabet, depth, weights)
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn word(&self, index: usize) -> Word {
        Word::from_lex_index(index, self.alphabet, self.depth)
    }
}

/// `−(1/n) Σ ν_n(𝚒) log ν_n(𝚒)`.
pub fn entropy_of_level(level: &LevelMeasure) -> f64 {
    if level.depth == 0 {
        return 0.0;
    }
    let terms: Vec<f64> = level
        .weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .collect();
    -pairwise_sum(&terms) / level.depth as f64
}

/// `−(1/n) Σ ν_n(𝚒) log μ([𝚒])`.
pub fn cross_entropy_of_level(mu: &dyn CylinderWeightModel, level: &LevelMeasure) -> Result<f64> {
    if mu.alphabet_size() != level.alphabet {
        return Err(Error::InvalidArgument("alphabet sizes differ".into()));
    }
    if level.depth == 0 {
        return Ok(0.0);
    }
    let mut terms = Vec::with_capacity(level.weights.len());
    for (k, &w) in level.weights.iter().enumerate() {
        if w > 0.0 {
            let lw = mu.log_weight(level.word(k).letters());
            if lw == f64::NEG_INFINITY {
                return Err(Error::SupportMismatch);
            }
            terms.push(w * lw);
        }
    }
    Ok(-pairwise_sum(&terms) / level.depth as f64)
}

/// Quasi-Bernoulli model obtained by concatenating independent blocks drawn
/// from a level-`m` measure. Cylinders shorter than a block use the marginal.
#[derive(Debug, Clone)]
pub struct BlockModel {
    alphabet: usize,
    block: usize,
    /// `log_marginals[k]` holds the log weights of `Σ_k`, `k = 0..=block`.
    log_marginals: Vec<Vec<f64>>,
    qb_constant: f64,
}

impl BlockModel {
    pub fn new(level: &LevelMeasure) -> Result<Self> {
        if level.depth == 0 {
            return Err(Error::InvalidArgument(
                "block length must be positive".into(),
            ));
        }
        if level.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::Config(
                "block measure must be fully supported".into(),
            ));
        }
        let n = level.alphabet;
        let mut marginals = vec![level.weights.clone()];
        for _ in 0..level.depth {
            let finer = marginals.last().unwrap();
            let coarser: Vec<f64> = finer.chunks(n).map(pairwise_sum).collect();
            marginals.push(coarser);
        }
        marginals.reverse();
        let log_marginals = marginals
            .into_iter()
            .map(|m| m.into_iter().map(f64::ln).collect())
            .collect();
        let mut model = BlockModel {
            alphabet: n,
            block: level.depth,
            log_marginals,
            qb_constant: 1.0,
        };
        model.qb_constant = estimate_qb_constant(&model, 4 * level.depth, 4000, 0x5eed);
        Ok(model)
    }

    pub fn block_length(&self) -> usize {
        self.block
    }

    pub fn block_level(&self) -> &[f64] {
        &self.log_marginals[self.block]
    }
}

impl CylinderWeightModel for BlockModel {
    fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    fn log_weight(&self, word: &[usize]) -> f64 {
        word.chunks(self.block)
            .map(|chunk| self.log_marginals[chunk.len()][lex_index(chunk, self.alphabet)])
            .sum()
    }

    fn qb_constant(&self) -> f64 {
        self.qb_constant
    }

    fn describe(&self) -> String {
        format!("block(m={})", self.block)
    }
}

/// Largest observed `max(w(𝚒)w(𝚓)/w(𝚒𝚓), w(𝚒𝚓)/(w(𝚒)w(𝚓)))` over random splits
/// with both parts of length `1..=max_len`.
pub fn estimate_qb_constant(
    model: &dyn CylinderWeightModel,
    max_len: usize,
    samples: usize,
    seed: u64,
) -> f64 {
    let n = model.alphabet_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (left, right) = random_split(&mut rng, n, max_len);
        let joined = [left.as_slice(), right.as_slice()].concat();
        let gap = model.log_weight(&joined) - model.log_weight(&left) - model.log_weight(&right);
        worst = worst.max(gap.abs());
    }
    worst.exp()
}

/// Two uniformly random words with lengths uniform in `1..=max_len`.
pub(crate) fn random_split(
    rng: &mut impl Rng,
    alphabet: usize,
    max_len: usize,
) -> (Vec<usize>, Vec<usize>) {
    let left = random_word(rng, alphabet, max_len);
    let right = random_word(rng, alphabet, max_len);
    (left, right)
}

fn random_word(rng: &mut impl Rng, alphabet: usize, max_len: usize) -> Vec<usize> {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| rng.gen_range(0..alphabet)).collect()
}
