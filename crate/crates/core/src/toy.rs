//! Seeded synthetic corpus for demos, fixtures and end-to-end tests.
//!
//! Sentences come from a tiny grammar over a subword vocabulary; features are
//! noisy one-hot frames of a random CTC alignment, scored by a
//! [`ToyConvModel`] of the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acoustic::ToyConvModel;
use crate::decoder::CorpusUtterance;
use crate::matrix::FeatureSequence;
use crate::vocab::Vocabulary;

pub const BLANK: &str = "<blank>";
pub const WORD_MARKER: &str = "\u{2581}";
pub const CONTEXT_RADIUS: usize = 2;

const TOKENS: [&str; 12] = [
    BLANK, "\u{2581}the", "\u{2581}a", "\u{2581}big", "\u{2581}red", "\u{2581}cat", "\u{2581}dog",
    "\u{2581}sat", "\u{2581}ran", "\u{2581}on", "\u{2581}mat", "s",
];

/// Words the toy acoustic model was "trained" on; plurals are out of vocabulary.
pub const TRAINING_WORDS: [&str; 10] = ["the", "a", "big", "red", "cat", "dog", "sat", "ran", "on", "mat"];

const NOISE: f32 = 0.4;

pub fn toy_vocabulary() -> Vocabulary {
    Vocabulary::new(
        TOKENS.iter().map(|s| s.to_string()).collect(),
        0,
        Some(WORD_MARKER.to_string()),
    )
    .expect("static toy vocabulary is valid")
}

/// Text domain of sampled sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyDomain {
    /// Singular nouns only.
    Source,
    /// Frequent plurals.
    Target,
}

impl ToyDomain {
    fn plural_rate(self) -> f64 {
        match self {
            ToyDomain::Source => 0.0,
            ToyDomain::Target => 0.5,
        }
    }
}

/// Token ids of one grammatical sentence.
fn sample_tokens(rng: &mut ChaCha8Rng, domain: ToyDomain) -> Vec<usize> {
    let mut out = vec![rng.gen_range(1..=2)];
    if rng.gen_bool(0.3) {
        out.push(rng.gen_range(3..=4));
    }
    out.push(rng.gen_range(5..=6));
    if rng.gen_bool(domain.plural_rate()) {
        out.push(11);
    }
    out.push(rng.gen_range(7..=8));
    if rng.gen_bool(0.5) {
        out.extend([9, 1, 10]);
    }
    out
}

/// Token-id sentences, e.g. for LM training text.
pub fn sample_token_sentences(seed: u64, count: usize, domain: ToyDomain) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample_tokens(&mut rng, domain)).collect()
}

/// Detokenized sentences.
pub fn sample_sentences(seed: u64, count: usize, domain: ToyDomain) -> Vec<String> {
    let vocab = toy_vocabulary();
    sample_token_sentences(seed, count, domain)
        .iter()
        .map(|t| vocab.detokenize(t))
        .collect()
}

fn noisy_frames(rng: &mut ChaCha8Rng, align: &[usize], dim: usize) -> FeatureSequence {
    let mut data = Vec::with_capacity(align.len() * dim);
    for &a in align {
        for d in 0..dim {
            let hot = if d == a { 1.0 } else { 0.0 };
            data.push(hot + rng.gen_range(-NOISE..NOISE));
        }
    }
    FeatureSequence::new(align.len(), dim, data).expect("toy features are finite")
}

/// Exactly `frames` noisy one-hot frames: random classes held for 2 to 4
/// frames, class 0 playing the blank.
pub fn synthetic_features(seed: u64, frames: usize, dim: usize) -> FeatureSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut align = Vec::with_capacity(frames + 4);
    while align.len() < frames {
        let class = rng.gen_range(0..dim);
        align.extend(std::iter::repeat_n(class, rng.gen_range(2..=4)));
    }
    align.truncate(frames);
    noisy_frames(&mut rng, &align, dim)
}

#[derive(Debug, Clone)]
pub struct ToyUtterance {
    pub id: String,
    pub tokens: Vec<usize>,
    pub text: String,
    pub features: FeatureSequence,
}

#[derive(Debug, Clone)]
pub struct ToyCorpus {
    pub vocab: Vocabulary,
    pub model: ToyConvModel,
    pub utterances: Vec<ToyUtterance>,
}

impl ToyCorpus {
    /// `count` target-domain utterances with ids `utt000`, `utt001`, ...
    pub fn generate(seed: u64, count: usize) -> Self {
        let vocab = toy_vocabulary();
        let n = vocab.len();
        let model = ToyConvModel::new(seed, n, n, CONTEXT_RADIUS);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
        let utterances = (0..count)
            .map(|i| {
                let tokens = sample_tokens(&mut rng, ToyDomain::Target);
                let mut align = vec![0usize; rng.gen_range(1..=3)];
                for (j, &tok) in tokens.iter().enumerate() {
                    if j > 0 && (tokens[j - 1] == tok || rng.gen_bool(0.5)) {
                        align.extend(std::iter::repeat_n(0, rng.gen_range(1..=2)));
                    }
                    align.extend(std::iter::repeat_n(tok, rng.gen_range(2..=4)));
                }
                align.extend(std::iter::repeat_n(0, rng.gen_range(1..=3)));
                let features = noisy_frames(&mut rng, &align, n);
                ToyUtterance {
                    id: format!("utt{i:03}"),
                    text: vocab.detokenize(&tokens),
                    tokens,
                    features,
                }
            })
            .collect();
        Self {
            vocab,
            model,
            utterances,
        }
    }

    pub fn corpus_utterances(&self) -> Vec<CorpusUtterance> {
        self.utterances
            .iter()
            .map(|u| CorpusUtterance {
                id: u.id.clone(),
                frames: u.features.frames(),
                features: Some(u.features.clone()),
            })
            .collect()
    }
}
