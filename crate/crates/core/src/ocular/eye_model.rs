use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EyeState {
    Open,
    Closed,
}

impl EyeState {
    fn sign(self) -> f64 {
        match self {
            EyeState::Open => 1.0,
            EyeState::Closed => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EyeState::Open => "open",
            EyeState::Closed => "closed",
        }
    }
}

impl fmt::Display for EyeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EyeState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(EyeState::Open),
            "closed" => Ok(EyeState::Closed),
            _ => Err(format!("unknown eye state `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeClassification {
    pub state: EyeState,
    /// Signed margin `w·x + b`; positive means open.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub final_hinge_loss: f64,
}

/// Linear max-margin open/closed classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEyeModel {
    weights: Vec<f64>,
    bias: f64,
    meta: TrainingMeta,
}

impl LinearEyeModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self {
            weights,
            bias,
            meta: TrainingMeta {
                iterations: 0,
                final_hinge_loss: f64::NAN,
            },
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn meta(&self) -> TrainingMeta {
        self.meta
    }

    pub fn decision(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: v.len(),
            });
        }
        Ok(dot(&self.weights, v) + self.bias)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Open iff the score is strictly positive.
pub fn classify_eye_state(model: &LinearEyeModel, v: &FeatureVector) -> Result<EyeClassification> {
    let score = model.decision(v.values())?;
    let state = if score > 0.0 { EyeState::Open } else { EyeState::Closed };
    Ok(EyeClassification { state, score })
}

/// Mean hinge loss, L2-regularised objective and training error count.
fn evaluate(data: &[(f64, &[f64])], w: &[f64], b: f64, lambda: f64) -> (f64, f64, usize) {
    let mut hinge = 0.0;
    let mut errors = 0;
    for &(y, x) in data {
        let m = y * (dot(w, x) + b);
        hinge += (1.0 - m).max(0.0);
        if m <= 0.0 {
            errors += 1;
        }
    }
    hinge /= data.len() as f64;
    let objective = 0.5 * lambda * dot(w, w) + hinge;
    (hinge, objective, errors)
}

/// Full-batch subgradient descent on `λ/2·|w|² + mean(hinge)` with the
/// `1/(λt)` step schedule. The bias is left unregularised.
///
/// Returns the iterate with the fewest training errors, ties broken by the
/// lower objective.
pub fn train_eye_model(labeled: &[(EyeState, FeatureVector)], lambda: f64, epochs: usize) -> Result<LinearEyeModel> {
    if !(lambda > 0.0) || epochs == 0 {
        return Err(Error::InvalidParameter(format!(
            "lambda must be > 0 and epochs >= 1 (lambda={lambda}, epochs={epochs})"
        )));
    }
    let has = |s| labeled.iter().any(|(l, _)| *l == s);
    if !has(EyeState::Open) || !has(EyeState::Closed) {
        return Err(Error::SingleClass);
    }
    let dim = labeled[0].1.len();
    if let Some((_, v)) = labeled.iter().find(|(_, v)| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    let data: Vec<(f64, &[f64])> = labeled.iter().map(|(s, v)| (s.sign(), v.values())).collect();
    let n = data.len() as f64;

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad = vec![0.0; dim];
    let (hinge0, obj0, err0) = evaluate(&data, &w, b, lambda);
    let mut best = (err0, obj0, w.clone(), b, hinge0, 0usize);

    for t in 1..=epochs {
        let eta = 1.0 / (lambda * (t as f64 + 1.0));
        grad.iter_mut().zip(&w).for_each(|(g, wi)| *g = lambda * wi);
        let mut grad_b = 0.0;
        for &(y, x) in &data {
            if y * (dot(&w, x) + b) < 1.0 {
                for (g, xi) in grad.iter_mut().zip(x) {
                    *g -= y * xi / n;
                }
                grad_b -= y / n;
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= eta * g;
        }
        b -= eta * grad_b;
        // Optimal w lies in the ball of radius 1/sqrt(λ).
        let norm = dot(&w, &w).sqrt();
        let radius = 1.0 / lambda.sqrt();
        if norm > radius {
            w.iter_mut().for_each(|wi| *wi *= radius / norm);
        }

        let (hinge, obj, errors) = evaluate(&data, &w, b, lambda);
        if (errors, obj) < (best.0, best.1) {
            best = (errors, obj, w.clone(), b, hinge, t);
        }
    }

    let (_, _, weights, bias, final_hinge_loss, iterations) = best;
    Ok(LinearEyeModel {
        weights,
        bias,
        meta: TrainingMeta {
            iterations,
            final_hinge_loss,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::from_values(v.to_vec())
    }

    fn one_d(flip: bool) -> Vec<(EyeState, FeatureVector)> {
        let (pos, neg) = if flip {
            (EyeState::Closed, EyeState::Open)
        } else {
            (EyeState::Open, EyeState::Closed)
        };
        vec![(pos, fv(&[1.0])), (pos, fv(&[1.5])), (neg, fv(&[-1.0])), (neg, fv(&[-1.5]))]
    }

    #[test]
    fn separable_one_d() {
        let data = one_d(false);
        let m = train_eye_model(&data, 1e-2, 200).unwrap();
        assert!(m.weights()[0] > 0.0);
        for (s, v) in &data {
            assert_eq!(classify_eye_state(&m, v).unwrap().state, *s);
        }
    }

    #[test]
    fn flipped_labels_flip_the_sign() {
        let a = train_eye_model(&one_d(false), 1e-2, 200).unwrap();
        let b = train_eye_model(&one_d(true), 1e-2, 200).unwrap();
        assert!(b.weights()[0] < 0.0);
        for x in [-2.0, -0.7, 0.4, 3.0] {
            let da = a.decision(&[x]).unwrap();
            let db = b.decision(&[x]).unwrap();
            assert!((da + db).abs() < 1e-9, "{da} {db}");
        }
    }

    #[test]
    fn zero_score_is_closed() {
        let m = LinearEyeModel::new(vec![1.0, -1.0], 0.0);
        let c = classify_eye_state(&m, &fv(&[2.0, 2.0])).unwrap();
        assert_eq!(c.state, EyeState::Closed);
        assert_eq!(c.score, 0.0);
        let c = classify_eye_state(&m, &fv(&[4.2, 1.0])).unwrap();
        assert_eq!(c.state, EyeState::Open);
        assert!((c.score - 3.2).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let only_open = vec![(EyeState::Open, fv(&[1.0])), (EyeState::Open, fv(&[2.0]))];
        assert!(matches!(train_eye_model(&only_open, 0.1, 10), Err(Error::SingleClass)));
        let mixed = vec![(EyeState::Open, fv(&[1.0])), (EyeState::Closed, fv(&[2.0, 1.0]))];
        assert!(matches!(train_eye_model(&mixed, 0.1, 10), Err(Error::DimensionMismatch { .. })));
        let m = LinearEyeModel::new(vec![1.0], 0.0);
        assert!(classify_eye_state(&m, &fv(&[1.0, 2.0])).is_err());
        assert!(train_eye_model(&one_d(false), 0.0, 10).is_err());
    }
}
