//! Random selection of students for post-deadline demonstration sessions.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Draws `k` distinct students uniformly with a seeded partial Fisher-Yates
/// shuffle. The roster is sorted and de-duplicated first, so the result does
/// not depend on the order of the input file.
pub fn select_demonstration_sample<S: AsRef<str>>(
    students: &[S],
    k: usize,
    seed: u64,
) -> Result<Vec<String>> {
    let mut pool: Vec<String> = students
        .iter()
        .map(|s| s.as_ref().trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if k > pool.len() {
        return Err(Error::validation(format!(
            "cannot select {k} students from a roster of {}",
            pool.len()
        )));
    }
    let mut rng = SplitMix64::new(seed);
    for i in 0..k {
        let j = i + rng.below_usize(pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    Ok(pool)
}
