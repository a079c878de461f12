//! Counterfactual tuples.
//!
//! For each forgetting sample `(x_f, y_f)` a tuple pairs it with a remaining
//! sample `(x_r, y_r)` drawn uniformly with replacement, and a counterfactual
//! `(x_r + ε, y*)` where every entry of `ε` is uniform on `[0, 1]` and `y*` is
//! uniform over the classes other than `y_f`. Counterfactual features are not
//! clamped, so they can reach 2 on normalized data.

use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::tensor::Tensor;

/// Borrowed view of one tuple of a [`JointDataset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TupleExample<'a> {
    pub forget: (&'a [f64], usize),
    pub remain: (&'a [f64], usize),
    pub counterfactual: (&'a [f64], usize),
    pub mask: &'a [f64],
}

/// Tuples stored column-wise so batches are row gathers.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDataset {
    pub forget_x: Tensor,
    pub forget_y: Vec<usize>,
    pub remain_x: Tensor,
    pub remain_y: Vec<usize>,
    pub counterfactual_x: Tensor,
    pub counterfactual_y: Vec<usize>,
    pub mask: Tensor,
    /// Row of the forgetting set each tuple was built from.
    pub forget_source: Vec<usize>,
    /// Row of the remaining set each tuple was paired with.
    pub remain_source: Vec<usize>,
    num_classes: usize,
}

impl JointDataset {
    pub fn len(&self) -> usize {
        self.forget_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forget_y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.forget_x.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn tuple(&self, i: usize) -> TupleExample<'_> {
        TupleExample {
            forget: (self.forget_x.row(i), self.forget_y[i]),
            remain: (self.remain_x.row(i), self.remain_y[i]),
            counterfactual: (self.counterfactual_x.row(i), self.counterfactual_y[i]),
            mask: self.mask.row(i),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = TupleExample<'_>> {
        (0..self.len()).map(|i| self.tuple(i))
    }
}

/// Builds one tuple per forgetting sample, or `oversample_to` tuples cycling
/// through the forgetting set in order when given.
///
/// Partner choice, masks and labels come from three separate streams of
/// `seed`, so the whole set is a pure function of its inputs.
pub fn prepare_joint(
    forget: &Dataset,
    remain: &Dataset,
    seed: u64,
    oversample_to: Option<usize>,
) -> Result<JointDataset> {
    if remain.is_empty() {
        return Err(Error::Precondition("remaining data is empty".into()));
    }
    let num_classes = forget.num_classes().max(remain.num_classes());
    if num_classes < 2 {
        return Err(Error::Domain(
            "counterfactual labels need at least two classes".into(),
        ));
    }
    if forget.dim() != remain.dim() {
        return Err(Error::shape("prepare_joint feature width", forget.dim(), remain.dim()));
    }
    let count = match oversample_to {
        Some(m) if m > 0 && forget.is_empty() => {
            return Err(Error::Precondition("cannot oversample an empty forgetting set".into()))
        }
        Some(m) => m,
        None => forget.len(),
    };
    let forget_source: Vec<usize> = (0..count).map(|i| i % forget.len().max(1)).collect();

    let mut partner_rng = rng::stream(seed, Purpose::Partner);
    let mut mask_rng = rng::stream(seed, Purpose::Mask);
    let mut label_rng = rng::stream(seed, Purpose::Label);

    let d = remain.dim();
    let remain_source: Vec<usize> = (0..count)
        .map(|_| partner_rng.random_range(0..remain.len()))
        .collect();
    let mask_values: Vec<f64> = (0..count * d).map(|_| mask_rng.random::<f64>()).collect();
    let mask = Tensor::from_vec(count, d, mask_values)?;

    let forget_x = forget.features().select_rows(&forget_source);
    let forget_y: Vec<usize> = forget_source.iter().map(|&i| forget.labels()[i]).collect();
    let remain_x = remain.features().select_rows(&remain_source);
    let remain_y: Vec<usize> = remain_source.iter().map(|&i| remain.labels()[i]).collect();

    let mut counterfactual_x = remain_x.clone();
    counterfactual_x.add_assign(&mask)?;
    let counterfactual_y = forget_y
        .iter()
        .map(|&y| {
            let u = label_rng.random_range(0..num_classes - 1);
            if u >= y {
                u + 1
            } else {
                u
            }
        })
        .collect();

    Ok(JointDataset {
        forget_x,
        forget_y,
        remain_x,
        remain_y,
        counterfactual_x,
        counterfactual_y,
        mask,
        forget_source,
        remain_source,
        num_classes,
    })
}
