use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{Error, Result};

const ORTHO_TOL: f64 = 1e-9;

/// Linear projection onto the leading principal directions of a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

impl PcaModel {
    /// Rebuilds a model from stored parts, checking its invariants.
    pub fn from_parts(mean: Vec<f64>, components: Vec<Vec<f64>>, variances: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if components.len() != variances.len() {
            return Err(Error::Degenerate(format!(
                "{} components but {} variances",
                components.len(),
                variances.len()
            )));
        }
        if components.len() > d {
            return Err(Error::Degenerate("more components than dimensions".into()));
        }
        if let Some(c) = components.iter().find(|c| c.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: c.len(),
            });
        }
        if variances.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Degenerate("variances not sorted non-increasing".into()));
        }
        let all = mean
            .iter()
            .chain(components.iter().flatten())
            .chain(variances.iter());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite model value".into()));
        }
        for (i, a) in components.iter().enumerate() {
            for (j, b) in components.iter().enumerate().skip(i) {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot(a, b) - expect).abs() > ORTHO_TOL {
                    return Err(Error::Degenerate(format!("components {i},{j} not orthonormal")));
                }
            }
        }
        Ok(Self {
            mean,
            components,
            variances,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Number of retained components.
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn project(&self, v: &FeatureVector) -> Result<Vec<f64>> {
        self.project_slice(v.values())
    }

    pub fn project_slice(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.components.iter().map(|c| dot(c, &centered)).collect())
    }

    /// `mean + Σ coeffs[i] * components[i]`; `coeffs` may be shorter than k.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, comp) in coeffs.iter().zip(&self.components) {
            for (o, x) in out.iter_mut().zip(comp) {
                *o += c * x;
            }
        }
        out
    }

    /// Same model restricted to its leading `k` components.
    pub fn truncated(&self, k: usize) -> PcaModel {
        let k = k.min(self.k());
        PcaModel {
            mean: self.mean.clone(),
            components: self.components[..k].to_vec(),
            variances: self.variances[..k].to_vec(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits a `k`-component PCA model. Covariance is normalised by `n - 1`.
///
/// Works on the `d x d` covariance when `d <= n` and on the `n x n` Gram
/// matrix otherwise, so high-dimensional histograms with few samples stay
/// cheap.
pub fn pca_fit(samples: &[FeatureVector], k: usize) -> Result<PcaModel> {
    let slices: Vec<&[f64]> = samples.iter().map(|s| s.values()).collect();
    pca_fit_slices(&slices, k)
}

pub(crate) fn pca_fit_slices(samples: &[&[f64]], k: usize) -> Result<PcaModel> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("PCA needs at least 2 samples, got {n}")));
    }
    let d = samples[0].len();
    if let Some(s) = samples.iter().find(|s| s.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: s.len(),
        });
    }
    if k == 0 || k > (n - 1).min(d) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be in 1..={}",
            (n - 1).min(d)
        )));
    }
    if samples.iter().all(|s| *s == samples[0]) {
        return Err(Error::Degenerate("all samples are identical".into()));
    }

    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| samples[i][j] - mean[j]);
    let denom = (n - 1) as f64;

    let (eigvals, mut components): (Vec<f64>, Vec<Vec<f64>>) = if d <= n {
        let cov = centered.transpose() * &centered / denom;
        let eig = SymmetricEigen::new(cov);
        let order = descending(&eig.eigenvalues);
        let vals = order.iter().take(k).map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let vecs = order
            .iter()
            .take(k)
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (vals, vecs)
    } else {
        let gram = &centered * centered.transpose() / denom;
        let eig = SymmetricEigen::new(gram);
        let order = descending(&eig.eigenvalues);
        let top = eig.eigenvalues[order[0]].max(0.0);
        let mut vals = Vec::with_capacity(k);
        let mut vecs = Vec::with_capacity(k);
        for &i in order.iter().take(k) {
            let lambda = eig.eigenvalues[i].max(0.0);
            vals.push(lambda);
            if lambda > top * 1e-12 {
                let u: DVector<f64> = eig.eigenvectors.column(i).into_owned();
                let v = centered.transpose() * u;
                vecs.push(v.iter().copied().collect());
            } else {
                // Null direction: filled in by completion below.
                vecs.push(vec![0.0; d]);
            }
        }
        (vals, vecs)
    };

    orthonormalize(&mut components)?;
    PcaModel::from_parts(mean, components, sort_non_increasing(eigvals))
}

fn descending(values: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Guards against last-ulp disorder between near-equal eigenvalues.
fn sort_non_increasing(mut v: Vec<f64>) -> Vec<f64> {
    for i in 1..v.len() {
        if v[i] > v[i - 1] {
            v[i] = v[i - 1];
        }
    }
    v
}

fn project_out(basis: &[Vec<f64>], v: &mut [f64]) {
    for _ in 0..2 {
        for u in basis {
            let p = dot(u, v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
    }
}

/// Two-pass modified Gram-Schmidt. A vector that vanishes is replaced by the
/// standard basis vector with the largest residual against the kept set.
fn orthonormalize(vectors: &mut [Vec<f64>]) -> Result<()> {
    let d = vectors.first().map_or(0, Vec::len);
    for i in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(i);
        let v = &mut rest[0];
        let original = dot(v, v).sqrt();
        project_out(done, v);
        let mut norm = dot(v, v).sqrt();
        if !(norm > original * 1e-8) {
            let best = (0..d)
                .map(|j| {
                    let mut e = vec![0.0; d];
                    e[j] = 1.0;
                    project_out(done, &mut e);
                    e
                })
                .max_by(|a, b| dot(a, a).total_cmp(&dot(b, b)))
                .ok_or_else(|| Error::Degenerate("empty component".into()))?;
            *v = best;
            norm = dot(v, v).sqrt();
            if norm < 1e-6 {
                return Err(Error::Degenerate("cannot complete orthonormal basis".into()));
            }
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(())
}
