//! Loss-threshold membership inference.
//!
//! Each candidate set is shuffled with the `Mia` stream and cut in half. On
//! the calibration halves the attack picks the threshold `t` ("member" when
//! the per-sample loss is `<= t`) with the best balanced accuracy, trying
//! every calibration loss and `-inf`; ties keep the smallest threshold. The
//! reported score is that threshold's balanced accuracy on the held-out
//! halves, as a percentage. Scores below 50 are returned unchanged.

use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{per_sample_cross_entropy, Model};
use crate::rng::{self, Purpose};

/// Attack success rate against `model` for the given member and nonmember sets.
pub fn mia_success_rate(
    model: &Model,
    members: &Dataset,
    nonmembers: &Dataset,
    seed: u64,
) -> Result<f64> {
    let member_losses = per_sample_cross_entropy(&model.predict(members.features())?, members.labels())?;
    let nonmember_losses =
        per_sample_cross_entropy(&model.predict(nonmembers.features())?, nonmembers.labels())?;
    mia_from_losses(&member_losses, &nonmember_losses, seed)
}

/// The attack on precomputed per-sample losses.
pub fn mia_from_losses(member_losses: &[f64], nonmember_losses: &[f64], seed: u64) -> Result<f64> {
    if member_losses.len() < 2 || nonmember_losses.len() < 2 {
        return Err(Error::Domain(
            "membership inference needs at least two members and two nonmembers".into(),
        ));
    }
    if member_losses.iter().chain(nonmember_losses).any(|l| l.is_nan()) {
        return Err(Error::Divergence("membership inference losses".into()));
    }
    let mut rng = rng::stream(seed, Purpose::Mia);
    let mut halves = |losses: &[f64]| {
        let mut shuffled = losses.to_vec();
        shuffled.shuffle(&mut rng);
        let eval = shuffled.split_off(shuffled.len() / 2);
        (shuffled, eval)
    };
    let (mut cal_in, eval_in) = halves(member_losses);
    let (mut cal_out, eval_out) = halves(nonmember_losses);
    cal_in.sort_by(f64::total_cmp);
    cal_out.sort_by(f64::total_cmp);

    let mut candidates: Vec<f64> = cal_in.iter().chain(&cal_out).copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    candidates.insert(0, f64::NEG_INFINITY);

    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &t in &candidates {
        let ba = sorted_balanced_accuracy(&cal_in, &cal_out, t);
        if ba > best.0 {
            best = (ba, t);
        }
    }
    Ok(100.0 * balanced_accuracy(&eval_in, &eval_out, best.1))
}

fn sorted_balanced_accuracy(members: &[f64], nonmembers: &[f64], t: f64) -> f64 {
    let tp = members.partition_point(|&l| l <= t) as f64;
    let fp = nonmembers.partition_point(|&l| l <= t) as f64;
    let tpr = tp / members.len() as f64;
    let tnr = 1.0 - fp / nonmembers.len() as f64;
    0.5 * (tpr + tnr)
}

fn balanced_accuracy(members: &[f64], nonmembers: &[f64], t: f64) -> f64 {
    let tpr = members.iter().filter(|&&l| l <= t).count() as f64 / members.len() as f64;
    let tnr = nonmembers.iter().filter(|&&l| l > t).count() as f64 / nonmembers.len() as f64;
    0.5 * (tpr + tnr)
}
