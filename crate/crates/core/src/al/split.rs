use rand::seq::SliceRandom;

use crate::{rng, Error, Result, Window};

/// `floor(x + 0.5)`, tolerant of representation error just below a half.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Number of windows an η budget allows from a pool of `pool_size`.
pub fn budget_for(eta: f64, pool_size: usize) -> usize {
    round_half_up(eta * pool_size as f64).min(pool_size)
}

/// Random `(train, pool)` partition with `round(ratio * n)` training windows.
/// Both halves keep the input order.
pub fn split_dataset(data: &[Window], ratio: f64, seed: u64) -> Result<(Vec<Window>, Vec<Window>)> {
    if data.len() < 2 {
        return Err(Error::precondition(format!(
            "need at least 2 windows to split, got {}",
            data.len()
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::config(format!("split ratio {ratio} outside (0, 1)")));
    }
    let n_train = round_half_up(ratio * data.len() as f64);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng::chacha(seed));
    let mut in_train = vec![false; data.len()];
    order[..n_train].iter().for_each(|&i| in_train[i] = true);
    let (train, pool): (Vec<_>, Vec<_>) = data.iter().zip(&in_train).partition(|(_, &t)| t);
    Ok((
        train.into_iter().map(|(w, _)| w.clone()).collect(),
        pool.into_iter().map(|(w, _)| w.clone()).collect(),
    ))
}
