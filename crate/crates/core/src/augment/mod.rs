//! Source-text augmenters behind one [`Augmenter`] contract.
//!
//! * [`SynonymAugmenter`]: WordNet synonym replacement with geometric draws
//!   for how many words to replace and which synonym rank to use.
//! * [`EmbeddingAugmenter`]: repeated nearest-neighbour substitution weighted
//!   by cosine similarity.
//! * [`RttAugmenter`]: round-trip translation through a pivot language.
//! * [`IdentityAugmenter`]: the control arm; returns its input.

mod neighbor;
mod rtt;
mod synonym;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Stream;
use crate::wordnet::Pos;

pub use neighbor::{embedding_augment, embedding_augment_traced, EmbeddingAugmenter, Replacement};
pub use rtt::{
    rtt_augment, HttpBackend, HttpBackendConfig, IdentityBackend, Leg, MockBackend, RetryPolicy,
    RttAugmenter, RttRecord, TranslateError, TranslationBackend, API_KEY_ENV,
};
pub use synonym::{synonym_augment, SynonymAugmenter};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("{leg} translation failed: {cause}")]
    BackendError { leg: Leg, cause: String },
    #[error("{leg} translation still rate limited after {attempts} attempts")]
    RateLimited { leg: Leg, attempts: u32 },
    #[error("{leg} translation returned empty text")]
    EmptyTranslation { leg: Leg },
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
}

/// Sampling parameters shared by the text augmenters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Success probability of the geometric draws.
    pub p: f64,
    pub pos_filter: Vec<Pos>,
    /// Neighbour pool size for embedding replacement.
    pub top_k: usize,
    /// Replacement rounds per sentence for embedding replacement.
    pub runs: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            p: 0.5,
            pos_filter: vec![Pos::Noun, Pos::Verb],
            top_k: 10,
            runs: 1,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(AugmentError::InvalidConfig(format!("p must be in (0, 1], got {}", self.p)));
        }
        if self.runs == 0 {
            return Err(AugmentError::InvalidConfig("runs must be at least 1".into()));
        }
        if self.top_k == 0 {
            return Err(AugmentError::InvalidConfig("top_k must be at least 1".into()));
        }
        Ok(())
    }
}

pub trait Augmenter: Send + Sync {
    fn name(&self) -> &str;

    fn augment(&self, text: &str, rng: &mut Stream) -> Result<String, AugmentError>;

    /// Produces the `copy`-th augmented version of `text`. Augmenters whose
    /// copies differ by something other than the random stream (e.g. pivot
    /// language) override this.
    fn augment_copy(&self, text: &str, copy: usize, rng: &mut Stream) -> Result<String, AugmentError> {
        let _ = copy;
        self.augment(text, rng)
    }

    /// Largest number of distinct copies this augmenter can produce per
    /// record, if bounded.
    fn max_copies(&self) -> Option<usize> {
        None
    }
}

/// Returns its input; the no-augmentation control.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityAugmenter;

pub fn make_identity_augmenter() -> IdentityAugmenter {
    IdentityAugmenter
}

impl Augmenter for IdentityAugmenter {
    fn name(&self) -> &str {
        "identity"
    }

    fn augment(&self, text: &str, _rng: &mut Stream) -> Result<String, AugmentError> {
        Ok(text.to_string())
    }
}

/// Number of Bernoulli(`p`) trials up to and including the first success:
/// `P[r = n] = (1 - p)^(n - 1) p` for `n >= 1`.
///
/// Sampled by inversion: `r = 1 + floor(ln U / ln(1 - p))` with `U` uniform
/// on `(0, 1]`.
pub fn sample_geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> usize {
    debug_assert!(p > 0.0 && p <= 1.0);
    if p >= 1.0 {
        return 1;
    }
    let u = 1.0 - rng.random::<f64>();
    let failures = (u.ln() / (-p).ln_1p()).floor();
    if failures >= u32::MAX as f64 {
        u32::MAX as usize
    } else {
        1 + failures as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_degenerate_at_one() {
        let mut rng = crate::rng::stream(1);
        assert!((0..1000).all(|_| sample_geometric(1.0, &mut rng) == 1));
    }

    #[test]
    fn geometric_half_mass_and_mean() {
        let mut rng = crate::rng::stream(2);
        let n = 100_000;
        let draws: Vec<usize> = (0..n).map(|_| sample_geometric(0.5, &mut rng)).collect();
        let p1 = draws.iter().filter(|&&r| r == 1).count() as f64 / n as f64;
        let p2 = draws.iter().filter(|&&r| r == 2).count() as f64 / n as f64;
        let mean = draws.iter().sum::<usize>() as f64 / n as f64;
        assert!((0.49..=0.51).contains(&p1), "{p1}");
        assert!((0.24..=0.26).contains(&p2), "{p2}");
        assert!((1.97..=2.03).contains(&mean), "{mean}");
        assert!(draws.iter().all(|&r| r >= 1));
    }

    #[test]
    fn identity_round_trips() {
        let mut rng = crate::rng::stream(0);
        let aug = make_identity_augmenter();
        assert_eq!(aug.augment("abc", &mut rng).unwrap(), "abc");
        assert_eq!(aug.augment("", &mut rng).unwrap(), "");
    }

    #[test]
    fn config_validation() {
        assert!(AugmentConfig::default().validate().is_ok());
        for bad in [
            AugmentConfig { p: 0.0, ..Default::default() },
            AugmentConfig { p: 1.5, ..Default::default() },
            AugmentConfig { runs: 0, ..Default::default() },
            AugmentConfig { top_k: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
