use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Label, Language, SourceSample};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSplit {
    pub train: Vec<String>,
    pub inference: Vec<String>,
}

/// Disjoint, label-balanced probe-training and inference id sets per
/// language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub languages: BTreeMap<Language, LanguageSplit>,
}

impl SplitPlan {
    pub fn train_ids(&self) -> impl Iterator<Item = &str> {
        self.languages
            .values()
            .flat_map(|s| s.train.iter().map(String::as_str))
    }

    pub fn inference_ids(&self) -> impl Iterator<Item = &str> {
        self.languages
            .values()
            .flat_map(|s| s.inference.iter().map(String::as_str))
    }
}

/// Draws `per_language_n` samples per language, half members and half
/// non-members, then splits each class `train_fraction` / rest.
///
/// Candidates are ordered by id before the seeded shuffle, so the plan does
/// not depend on manifest order. Languages absent from the manifest are
/// skipped.
pub fn make_splits(
    manifest: &[SourceSample],
    seed: u64,
    per_language_n: usize,
    train_fraction: f64,
) -> Result<SplitPlan> {
    if per_language_n < 2 || !per_language_n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "per-language sample count must be even and at least 2, got {per_language_n}"
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train fraction must lie in (0, 1)"));
    }
    let per_class = per_language_n / 2;
    let mut languages = BTreeMap::new();

    for (li, lang) in Language::ALL.into_iter().enumerate() {
        if !manifest.iter().any(|s| s.language == lang) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(li as u64));
        let mut split = LanguageSplit {
            train: Vec::new(),
            inference: Vec::new(),
        };
        for label in [Label::Member, Label::NonMember] {
            let mut ids: Vec<&str> = manifest
                .iter()
                .filter(|s| s.language == lang && s.label == Some(label))
                .map(|s| s.id.as_str())
                .collect();
            if ids.len() < per_class {
                return Err(Error::InsufficientSamples {
                    language: lang.to_string(),
                    label: label.into(),
                    needed: per_class,
                    found: ids.len(),
                });
            }
            ids.sort_unstable();
            ids.shuffle(&mut rng);
            let n_train = (train_fraction * per_class as f64).round() as usize;
            split
                .train
                .extend(ids[..n_train].iter().map(|s| s.to_string()));
            split
                .inference
                .extend(ids[n_train..per_class].iter().map(|s| s.to_string()));
        }
        languages.insert(lang, split);
    }
    Ok(SplitPlan { seed, languages })
}
