use rand::seq::SliceRandom;

use super::Sample;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Seeded per-class train/test partition.
///
/// The total train size is `floor(train_fraction · N)`, shared out between
/// classes by largest remainder so every class keeps its proportion to within
/// one sample. Every class keeps at least one sample on each side, which can
/// leave the train side short for tiny classes. Within a class the members are shuffled by a stream derived
/// from `(seed, class)`. Both halves are returned sorted by sample id.
pub fn stratified_split(
    samples: &[Sample],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n_classes = samples.iter().map(|s| s.label + 1).max().unwrap_or(0);
    let mut by_class: Vec<Vec<&Sample>> = vec![Vec::new(); n_classes];
    for s in samples {
        by_class[s.label].push(s);
    }
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() == 1 {
            return Err(Error::Data(format!(
                "class {c} has a single sample and cannot appear on both sides of a split"
            )));
        }
        members.sort_by_key(|s| s.id);
    }

    let total = (train_fraction * samples.len() as f64).floor() as usize;
    let exact: Vec<f64> = by_class.iter().map(|m| train_fraction * m.len() as f64).collect();
    let mut quota: Vec<usize> = exact
        .iter()
        .zip(&by_class)
        .map(|(&e, m)| (e.floor() as usize).clamp(m.len().min(1), m.len().saturating_sub(1)))
        .collect();
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut assigned: usize = quota.iter().sum();
    for &c in &order {
        if assigned >= total {
            break;
        }
        if quota[c] + 1 < by_class[c].len() {
            quota[c] += 1;
            assigned += 1;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, members) in by_class.into_iter().enumerate() {
        let mut members = members;
        members.shuffle(&mut stream(seed, Purpose::Split, c as u64));
        let (a, b) = members.split_at(quota[c]);
        train.extend(a.iter().map(|s| (*s).clone()));
        test.extend(b.iter().map(|s| (*s).clone()));
    }
    train.sort_by_key(|s| s.id);
    test.sort_by_key(|s| s.id);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::TimeSeries;
    use proptest::prelude::*;

    fn samples(counts: &[usize]) -> Vec<Sample> {
        let mut out = Vec::new();
        for (label, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                let id = out.len() as u64;
                out.push(Sample::univariate(id, label, TimeSeries::new("v", vec![id as f64, 0.0])));
            }
        }
        out
    }

    fn ids(s: &[Sample]) -> Vec<u64> {
        s.iter().map(|s| s.id).collect()
    }

    #[test]
    fn balanced_hundred() {
        let (tr, te) = stratified_split(&samples(&[50, 50]), 0.8, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (80, 20));
        assert_eq!(tr.iter().filter(|s| s.label == 0).count(), 40);
        assert_eq!(te.iter().filter(|s| s.label == 1).count(), 10);
        let (tr2, _) = stratified_split(&samples(&[50, 50]), 0.8, 3).unwrap();
        assert_eq!(ids(&tr), ids(&tr2));
    }

    #[test]
    fn single_member_class_is_rejected() {
        assert!(stratified_split(&samples(&[5, 1]), 0.8, 1).is_err());
    }

    proptest! {
        #[test]
        fn partition_properties(counts in prop::collection::vec(2usize..40, 1..6), seed in 0u64..1000) {
            let all = samples(&counts);
            let (tr, te) = stratified_split(&all, 0.8, seed).unwrap();
            let room: usize = counts.iter().map(|n| n - 1).sum();
            prop_assert_eq!(tr.len(), ((0.8 * all.len() as f64).floor() as usize).min(room));
            let mut joined = ids(&tr);
            joined.extend(ids(&te));
            joined.sort();
            prop_assert_eq!(joined, ids(&all));
            for (c, &n) in counts.iter().enumerate() {
                let got = tr.iter().filter(|s| s.label == c).count() as f64;
                prop_assert!((got - 0.8 * n as f64).abs() <= 1.0 + 1e-9);
                prop_assert!(got >= 1.0 && (got as usize) < n);
            }
        }
    }
}
