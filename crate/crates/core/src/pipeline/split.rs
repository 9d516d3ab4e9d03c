use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};

use super::BuildingSample;
use crate::error::{Error, Result};
use crate::rng::substream;

fn group_by_city(samples: &[BuildingSample]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        groups.entry(s.city_id.as_str()).or_default().push(i);
    }
    groups
}

fn keep_indices(samples: Vec<BuildingSample>, mut keep: Vec<usize>) -> Vec<BuildingSample> {
    keep.sort_unstable();
    let mut keep = keep.into_iter().peekable();
    samples
        .into_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            if keep.peek() == Some(&i) {
                keep.next();
                Some(s)
            } else {
                None
            }
        })
        .collect()
}

/// Uniform random subset of at most `n` samples per city, without
/// replacement. Input order is preserved among the kept samples.
pub fn subsample_city(samples: Vec<BuildingSample>, n: usize, seed: u64) -> Vec<BuildingSample> {
    let mut keep = Vec::new();
    for (city, idx) in group_by_city(&samples) {
        if idx.len() <= n {
            keep.extend(idx);
            continue;
        }
        let mut rng = substream(seed, &format!("subsample/{city}"), 0);
        keep.extend(index::sample(&mut rng, idx.len(), n).into_iter().map(|k| idx[k]));
    }
    keep_indices(samples, keep)
}

/// Like [`subsample_city`], but allocates the per-city budget across height
/// bins of width `bin_m` in proportion to their size (largest remainders
/// break ties), so the kept height distribution matches the city's.
pub fn subsample_city_stratified(
    samples: Vec<BuildingSample>,
    n: usize,
    seed: u64,
    bin_m: f64,
) -> Result<Vec<BuildingSample>> {
    if !(bin_m.is_finite() && bin_m > 0.0) {
        return Err(Error::InvalidInput(format!("bin width {bin_m} must be positive")));
    }
    let mut keep = Vec::new();
    for (city, idx) in group_by_city(&samples) {
        if idx.len() <= n {
            keep.extend(idx);
            continue;
        }
        let mut bins: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for &i in &idx {
            bins.entry((samples[i].ref_height_m / bin_m).floor() as i64)
                .or_default()
                .push(i);
        }
        let total = idx.len() as f64;
        let mut quota: Vec<(i64, usize, f64)> = bins
            .iter()
            .map(|(&b, members)| {
                let exact = n as f64 * members.len() as f64 / total;
                (b, exact.floor() as usize, exact - exact.floor())
            })
            .collect();
        let mut remaining = n - quota.iter().map(|q| q.1).sum::<usize>();
        let mut order: Vec<usize> = (0..quota.len()).collect();
        order.sort_by(|&a, &b| quota[b].2.total_cmp(&quota[a].2).then(a.cmp(&b)));
        for k in order {
            if remaining == 0 {
                break;
            }
            if quota[k].1 < bins[&quota[k].0].len() {
                quota[k].1 += 1;
                remaining -= 1;
            }
        }
        for (b, take, _) in quota {
            let members = &bins[&b];
            let mut rng = substream(seed, &format!("subsample/{city}"), b as u64);
            keep.extend(
                index::sample(&mut rng, members.len(), take)
                    .into_iter()
                    .map(|k| members[k]),
            );
        }
    }
    Ok(keep_indices(samples, keep))
}

/// Leave-one-city-out split: `(train, test)` with the held-out city as test.
pub fn split_loco<'a>(
    samples: &'a [BuildingSample],
    held_out_city: &str,
) -> Result<(Vec<&'a BuildingSample>, Vec<&'a BuildingSample>)> {
    let (test, train): (Vec<_>, Vec<_>) = samples.iter().partition(|s| s.city_id == held_out_city);
    if test.is_empty() {
        return Err(Error::UnknownCity(held_out_city.to_owned()));
    }
    Ok((train, test))
}

/// Seeded shuffle, then the first `round(train_frac · n)` samples train.
/// Both halves keep input order.
pub fn split_ratio(
    samples: &[BuildingSample],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<&BuildingSample>, Vec<&BuildingSample>)> {
    if !(train_frac.is_finite() && train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction {train_frac} must lie strictly inside (0, 1)"
        )));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut substream(seed, "split", 0));
    let k = (train_frac * samples.len() as f64).round() as usize;
    let mut in_train = vec![false; samples.len()];
    for &i in &order[..k] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = samples
        .iter()
        .zip(&in_train)
        .partition(|(_, &t)| t);
    Ok((
        train.into_iter().map(|(s, _)| s).collect(),
        test.into_iter().map(|(s, _)| s).collect(),
    ))
}
