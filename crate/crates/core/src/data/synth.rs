use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::tensor::Tensor;

/// Gaussian clusters, one per class, with centres drawn uniformly from the
/// unit cube and isotropic standard deviation `spread`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub num_classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub spread: f64,
    #[serde(default)]
    pub seed: u64,
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.per_class == 0 || self.dim == 0 {
            return Err(Error::Config("blob counts must be positive".into()));
        }
        if !(self.spread.is_finite() && self.spread >= 0.0) {
            return Err(Error::Config(format!("blob spread {} is not a finite non-negative number", self.spread)));
        }
        Ok(())
    }

    /// `per_class` samples per class, features min-max scaled to `[0, 1]`.
    pub fn generate(&self) -> Result<Dataset> {
        Ok(self.generate_with_holdout(0)?.0)
    }

    /// Training samples plus `test_per_class` held-out samples per class drawn
    /// from the same clusters. Both parts share one min-max scaling.
    pub fn generate_with_holdout(&self, test_per_class: usize) -> Result<(Dataset, Dataset)> {
        self.validate()?;
        let mut mean_rng = rng::stream(self.seed, Purpose::SynthMeans);
        let means: Vec<Vec<f64>> = (0..self.num_classes)
            .map(|_| (0..self.dim).map(|_| mean_rng.random::<f64>()).collect())
            .collect();

        let mut point_rng = rng::stream(self.seed, Purpose::SynthPoints);
        let total = self.per_class + test_per_class;
        let n = total * self.num_classes;
        let mut values = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        // class-major, training draws first within each class
        for (c, mean) in means.iter().enumerate() {
            for _ in 0..total {
                for &m in mean {
                    let z: f64 = point_rng.sample(StandardNormal);
                    values.push(m + self.spread * z);
                }
                labels.push(c);
            }
        }
        let mut all = Tensor::from_vec(n, self.dim, values)?;
        min_max_columns(&mut all);

        let mut train_idx = Vec::with_capacity(self.per_class * self.num_classes);
        let mut test_idx = Vec::with_capacity(test_per_class * self.num_classes);
        for c in 0..self.num_classes {
            let base = c * total;
            train_idx.extend(base..base + self.per_class);
            test_idx.extend(base + self.per_class..base + total);
        }
        let all = Dataset::new(all, labels, self.num_classes)?;
        Ok((all.subset(&train_idx), all.subset(&test_idx)))
    }
}

/// Shorthand for [`BlobSpec::generate`].
pub fn synth_blobs(
    num_classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    BlobSpec {
        num_classes,
        per_class,
        dim,
        spread,
        seed,
    }
    .generate()
}

/// Scales every column to `[0, 1]`; constant columns become 0.
fn min_max_columns(t: &mut Tensor) {
    let (rows, cols) = t.shape();
    for j in 0..cols {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..rows {
            let v = t.get(i, j);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let range = hi - lo;
        for i in 0..rows {
            let v = if range > 0.0 {
                ((t.get(i, j) - lo) / range).clamp(0.0, 1.0)
            } else {
                0.0
            };
            t.set(i, j, v);
        }
    }
}
