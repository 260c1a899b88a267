use std::sync::Arc;

use rand::seq::index;

use super::{sample_geometric, AugmentConfig, AugmentError, Augmenter};
use crate::corpus::tokenize;
use crate::rng::Stream;
use crate::wordnet::SynonymLexicon;

/// Replaces `r ~ Geometric(p)` distinct replaceable words with their `s`-th
/// synonym, `s ~ Geometric(p)`. Both draws are clamped to what is available.
///
/// Replaceable positions are computed once on the input. The output is the
/// tokenized sentence rejoined with single spaces, multiword lemmas spelled
/// with spaces. With nothing to replace the input comes back untouched.
pub fn synonym_augment(lexicon: &SynonymLexicon, text: &str, cfg: &AugmentConfig, rng: &mut Stream) -> String {
    let mut doc = tokenize(text);
    let positions = lexicon.replaceable_positions(&doc, &cfg.pos_filter);
    if positions.is_empty() {
        return text.to_string();
    }
    let r = sample_geometric(cfg.p, rng).min(positions.len());
    for chosen in index::sample(rng, positions.len(), r).into_iter() {
        let (i, pos) = positions[chosen];
        let synonyms = lexicon.synonyms(&doc.tokens[i], pos);
        let s = sample_geometric(cfg.p, rng).min(synonyms.len());
        doc.tokens[i] = synonyms[s - 1].replace('_', " ");
    }
    doc.join()
}

pub struct SynonymAugmenter {
    lexicon: Arc<SynonymLexicon>,
    cfg: AugmentConfig,
}

impl SynonymAugmenter {
    pub fn new(lexicon: Arc<SynonymLexicon>, cfg: AugmentConfig) -> Result<Self, AugmentError> {
        cfg.validate()?;
        if cfg.pos_filter.is_empty() {
            log::warn!("synonym augmenter has an empty POS filter and will not change any text");
        }
        Ok(SynonymAugmenter { lexicon, cfg })
    }
}

impl Augmenter for SynonymAugmenter {
    fn name(&self) -> &str {
        "synonym"
    }

    fn augment(&self, text: &str, rng: &mut Stream) -> Result<String, AugmentError> {
        Ok(synonym_augment(&self.lexicon, text, &self.cfg, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::wordnet::{Pos, Synset};

    fn lexicon() -> SynonymLexicon {
        SynonymLexicon::from_synsets(vec![
            Synset { offset: 1, pos: Pos::Noun, lemmas: vec!["dog".into(), "domestic_dog".into(), "pooch".into()] },
            Synset { offset: 2, pos: Pos::Noun, lemmas: vec!["dog".into(), "frump".into()] },
            Synset { offset: 3, pos: Pos::Verb, lemmas: vec!["bark".into(), "bay".into()] },
            Synset { offset: 4, pos: Pos::Noun, lemmas: vec!["cat".into(), "true_cat".into()] },
        ])
    }

    fn cfg(p: f64, pos: Vec<Pos>) -> AugmentConfig {
        AugmentConfig { p, pos_filter: pos, ..Default::default() }
    }

    #[test]
    fn no_replaceable_word_is_a_no_op() {
        let mut r = rng::stream(1);
        let text = "The quick, brown fox!";
        assert_eq!(synonym_augment(&lexicon(), text, &cfg(0.5, vec![Pos::Noun]), &mut r), text);
    }

    #[test]
    fn forced_first_draws_use_first_sense_synonym() {
        let mut r = rng::stream(1);
        let out = synonym_augment(&lexicon(), "the dog barks", &cfg(1.0, vec![Pos::Noun]), &mut r);
        assert_eq!(out, "the domestic dog barks");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let lex = lexicon();
        let c = cfg(0.5, vec![Pos::Noun, Pos::Verb]);
        let text = "dog and cat bark at the other dog";
        let a: Vec<String> = {
            let mut r = rng::stream(42);
            (0..20).map(|_| synonym_augment(&lex, text, &c, &mut r)).collect()
        };
        let b: Vec<String> = {
            let mut r = rng::stream(42);
            (0..20).map(|_| synonym_augment(&lex, text, &c, &mut r)).collect()
        };
        assert_eq!(a, b);
        assert!(a.iter().any(|s| s != text));
    }

    #[test]
    fn single_word_synonyms_preserve_token_count() {
        let lex = SynonymLexicon::from_synsets(vec![
            Synset { offset: 1, pos: Pos::Noun, lemmas: vec!["dog".into(), "pooch".into(), "hound".into()] },
            Synset { offset: 2, pos: Pos::Noun, lemmas: vec!["cat".into(), "moggy".into()] },
        ]);
        let c = cfg(0.2, vec![Pos::Noun]);
        let mut r = rng::stream(3);
        for _ in 0..200 {
            let out = synonym_augment(&lex, "dog cat dog", &c, &mut r);
            let toks: Vec<&str> = out.split(' ').collect();
            assert_eq!(toks.len(), 3);
            for (orig, new) in ["dog", "cat", "dog"].iter().zip(&toks) {
                assert!(new == orig || lex.synonyms(orig, Pos::Noun).iter().any(|s| s == new));
            }
        }
    }
}
