use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{valence, EmotionLabel, Valence};
use crate::error::{Error, Result};
use crate::features::{pca_fit, FeatureVector, PcaModel};

/// A registered user's PCA space and per-emotion template means.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub user_id: String,
    pub pca: PcaModel,
    /// Layout of the feature vectors the profile was trained on.
    pub layout: (usize, usize, usize),
    pub templates: BTreeMap<EmotionLabel, Vec<f64>>,
    pub sample_counts: BTreeMap<EmotionLabel, usize>,
}

impl UserProfile {
    pub(crate) fn validate(&self) -> Result<()> {
        let missing: Vec<EmotionLabel> = EmotionLabel::ALL
            .into_iter()
            .filter(|l| !self.templates.contains_key(l) || self.sample_counts.get(l).copied().unwrap_or(0) == 0)
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingLabels(missing));
        }
        if let Some(t) = self.templates.values().find(|t| t.len() != self.pca.k()) {
            return Err(Error::DimensionMismatch {
                expected: self.pca.k(),
                found: t.len(),
            });
        }
        let (r, c, b) = self.layout;
        if r * c * b != self.pca.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.pca.dim(),
                found: r * c * b,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionEstimate {
    pub label: EmotionLabel,
    pub distance: f64,
    /// Runner-up distance minus best distance.
    pub margin: f64,
    pub valence: Valence,
}

/// Fits the user's PCA model on all samples and averages each label's
/// projections into a template.
///
/// `k` is clamped to what the sample set supports (`n - 1` and the feature
/// dimension).
pub fn register_user(user_id: &str, samples: &[(EmotionLabel, FeatureVector)], k: usize) -> Result<UserProfile> {
    let missing: Vec<EmotionLabel> = EmotionLabel::ALL
        .into_iter()
        .filter(|l| !samples.iter().any(|(s, _)| s == l))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingLabels(missing));
    }
    let layout = samples[0].1.layout();
    let dim = samples[0].1.len();
    if let Some((_, v)) = samples.iter().find(|(_, v)| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    let k = k.min(samples.len() - 1).min(dim).max(1);
    let vectors: Vec<FeatureVector> = samples.iter().map(|(_, v)| v.clone()).collect();
    let pca = pca_fit(&vectors, k)?;

    let mut sums: BTreeMap<EmotionLabel, Vec<f64>> = BTreeMap::new();
    let mut counts: BTreeMap<EmotionLabel, usize> = BTreeMap::new();
    for (label, v) in samples {
        let p = pca.project(v)?;
        let acc = sums.entry(*label).or_insert_with(|| vec![0.0; k]);
        for (a, x) in acc.iter_mut().zip(&p) {
            *a += x;
        }
        *counts.entry(*label).or_default() += 1;
    }
    let templates = sums
        .into_iter()
        .map(|(label, sum)| {
            let n = counts[&label] as f64;
            (label, sum.into_iter().map(|s| s / n).collect())
        })
        .collect();

    Ok(UserProfile {
        user_id: user_id.to_string(),
        pca,
        layout,
        templates,
        sample_counts: counts,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Nearest template in the profile's projected space.
pub fn classify_emotion(profile: &UserProfile, v: &FeatureVector) -> Result<EmotionEstimate> {
    let projected = profile.pca.project(v)?;
    let mut best: Option<(EmotionLabel, f64)> = None;
    let mut runner_up = f64::INFINITY;
    // BTreeMap iterates in tie-break order; strict `<` keeps the earlier label.
    for (&label, template) in &profile.templates {
        let d = distance(&projected, template);
        match best {
            Some((_, bd)) if d < bd => {
                runner_up = bd;
                best = Some((label, d));
            }
            Some(_) => runner_up = runner_up.min(d),
            None => best = Some((label, d)),
        }
    }
    let (label, distance) = best.ok_or(Error::MissingLabels(EmotionLabel::ALL.to_vec()))?;
    let margin = if runner_up.is_finite() { runner_up - distance } else { 0.0 };
    Ok(EmotionEstimate {
        label,
        distance,
        margin,
        valence: valence(label),
    })
}
