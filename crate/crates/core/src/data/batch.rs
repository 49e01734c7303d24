use alloc::vec::Vec;
use core::marker::PhantomData;
use core::ops::Range;

use rand::seq::SliceRandom;

use super::FlowDataset;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng;
use crate::tensor::Tensor;

/// Consecutive `batch_size` ranges over `0..n`; the last may be short.
/// With `merge_single`, a trailing one-row batch is folded into the previous
/// one (train-mode batch norm cannot normalize a single row).
pub(crate) fn batch_ranges(n: usize, batch_size: usize, merge_single: bool) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = (0..n).step_by(batch_size).map(|s| s..(s + batch_size).min(n)).collect();
    if merge_single && out.len() > 1 && out.last().is_some_and(|r| r.len() == 1) {
        out.pop();
        out.last_mut().expect("len > 1").end = n;
    }
    out
}

/// Features `[rows, F]` and one-hot labels `[rows, 2]` for the given rows.
pub(crate) fn gather<T: Real>(ds: &FlowDataset, rows: &[usize]) -> (Tensor<T>, Tensor<T>) {
    let f = ds.n_features();
    let mut x = Vec::with_capacity(rows.len() * f);
    let mut y = Vec::with_capacity(rows.len() * 2);
    for &r in rows {
        x.extend(ds.row(r).iter().map(|&v| T::from_f64(v)));
        let l = ds.labels()[r] as usize;
        y.extend([(l == 0) as u8, (l == 1) as u8].map(|b| T::from_f64(b as f64)));
    }
    (
        Tensor::new(&[rows.len(), f], x).expect("row-major gather"),
        Tensor::new(&[rows.len(), 2], y).expect("one-hot gather"),
    )
}

/// Iterator over `(features, one_hot)` mini-batches.
#[derive(Debug)]
pub struct Batches<'a, T> {
    ds: &'a FlowDataset,
    order: Vec<usize>,
    ranges: alloc::vec::IntoIter<Range<usize>>,
    _real: PhantomData<T>,
}

impl<T: Real> Iterator for Batches<'_, T> {
    type Item = (Tensor<T>, Tensor<T>);

    fn next(&mut self) -> Option<Self::Item> {
        let r = self.ranges.next()?;
        Some(gather(self.ds, &self.order[r]))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.ranges.size_hint()
    }
}

impl<T: Real> ExactSizeIterator for Batches<'_, T> {}

/// Mini-batches covering every row once. Without a seed rows keep dataset
/// order; with one the order is a fixed shuffle of that seed.
pub fn batches<T: Real>(ds: &FlowDataset, batch_size: usize, shuffle_seed: Option<u64>) -> Result<Batches<'_, T>> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
    }
    if ds.is_empty() {
        return Err(Error::EmptyInput("no rows to batch".into()));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut rng::seeded(seed));
    }
    let ranges = batch_ranges(ds.len(), batch_size, false).into_iter();
    Ok(Batches { ds, order, ranges, _real: PhantomData })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(n: usize) -> FlowDataset {
        FlowDataset::new((0..n * 2).map(|i| i as f64).collect(), 2, (0..n).map(|i| (i % 2) as u8).collect(), "t")
            .unwrap()
    }

    #[test]
    fn sizes_four_four_two() {
        let d = ds(10);
        let sizes: Vec<usize> = batches::<f32>(&d, 4, None).unwrap().map(|(x, _)| x.shape()[0]).collect();
        assert_eq!(sizes, [4, 4, 2]);
    }

    #[test]
    fn one_hot_rows() {
        let d = ds(3);
        let (x, y) = batches::<f64>(&d, 3, None).unwrap().next().unwrap();
        assert_eq!(x.data(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(y.data(), &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn shuffled_order_is_fixed_by_seed() {
        let d = ds(37);
        let collect = |seed| -> Vec<f64> { batches::<f64>(&d, 5, seed).unwrap().flat_map(|(x, _)| x.into_data()).collect() };
        assert_eq!(collect(Some(4)), collect(Some(4)));
        assert_ne!(collect(Some(4)), collect(Some(5)));
        let mut seen = collect(Some(4));
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, collect(None));
    }

    #[test]
    fn trailing_single_row_merges_when_asked() {
        assert_eq!(batch_ranges(9, 4, false), [0..4, 4..8, 8..9]);
        assert_eq!(batch_ranges(9, 4, true), [0..4, 4..9]);
        assert_eq!(batch_ranges(1, 4, true), [0..1]);
        assert_eq!(batch_ranges(8, 4, true), [0..4, 4..8]);
    }

    #[test]
    fn zero_batch_size() {
        assert_eq!(batches::<f32>(&ds(2), 0, None).unwrap_err().name(), "InvalidConfig");
    }
}
