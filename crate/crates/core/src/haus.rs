//! Exact Hausdorff distance between compact subsets of the real line given
//! as finite unions of closed intervals or finite point sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectrum::BandSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffResult<T> {
    pub value: T,
    /// `sup_{x in X} d(x, Y)`.
    pub directed_xy: T,
    pub directed_yx: T,
    /// Point of `X` realizing `directed_xy` and its nearest point in `Y`.
    pub witness_xy: (T, T),
    pub witness_yx: (T, T),
}

/// Nearest point of a sorted disjoint interval list.
fn nearest<T: Real>(ivs: &[(T, T)], x: T) -> T {
    // first interval whose upper end is >= x
    let k = ivs.partition_point(|iv| iv.1 < x);
    let mut best = None::<T>;
    let mut consider = |p: T| {
        best = Some(match best {
            Some(b) if (b - x).abs() <= (p - x).abs() => b,
            _ => p,
        });
    };
    if k < ivs.len() {
        let (a, b) = ivs[k];
        consider(if x < a { a } else { x.min(b) });
    }
    if k > 0 {
        consider(ivs[k - 1].1);
    }
    best.expect("non-empty interval list")
}

fn contains<T: Real>(ivs: &[(T, T)], x: T) -> bool {
    let k = ivs.partition_point(|iv| iv.1 < x);
    k < ivs.len() && ivs[k].0 <= x
}

/// `sup_{x in X} d(x, Y)`: on each interval of `X` the distance to `Y` is
/// piecewise linear, peaking at an endpoint or at the midpoint of a gap of `Y`.
fn directed<T: Real>(xs: &[(T, T)], ys: &[(T, T)]) -> (T, (T, T)) {
    let two = T::lit(2.0);
    let mut best = (T::neg_infinity(), (T::zero(), T::zero()));
    let mut probe = |x: T| {
        let y = nearest(ys, x);
        let d = (x - y).abs();
        if d > best.0 {
            best = (d, (x, y));
        }
    };
    for &(a, b) in xs {
        probe(a);
        probe(b);
    }
    for w in ys.windows(2) {
        let mid = (w[0].1 + w[1].0) / two;
        if contains(xs, mid) {
            probe(mid);
        }
    }
    best
}

fn check_sorted<T: Real>(ivs: &[(T, T)]) -> Result<()> {
    if ivs.is_empty() {
        return Err(Error::EmptySet);
    }
    let ok = ivs.iter().all(|(a, b)| a <= b && a.is_finite() && b.is_finite())
        && ivs.windows(2).all(|w| w[0].1 < w[1].0);
    if !ok {
        return Err(Error::InvalidArgument(
            "intervals must be finite, sorted and disjoint".into(),
        ));
    }
    Ok(())
}

/// Hausdorff distance between two sorted, disjoint closed interval lists.
pub fn hausdorff_intervals<T: Real>(xs: &[(T, T)], ys: &[(T, T)]) -> Result<HausdorffResult<T>> {
    check_sorted(xs)?;
    check_sorted(ys)?;
    let (dxy, wxy) = directed(xs, ys);
    let (dyx, wyx) = directed(ys, xs);
    Ok(HausdorffResult {
        value: dxy.max(dyx),
        directed_xy: dxy,
        directed_yx: dyx,
        witness_xy: wxy,
        witness_yx: wyx,
    })
}

pub fn hausdorff_bands<T: Real>(x: &BandSet<T>, y: &BandSet<T>) -> Result<HausdorffResult<T>> {
    hausdorff_intervals(&x.intervals, &y.intervals)
}

/// One-directional two-pointer sweep over sorted point lists.
fn directed_points<T: Real>(xs: &[T], ys: &[T]) -> (T, (T, T)) {
    let mut best = (T::neg_infinity(), (T::zero(), T::zero()));
    let mut k = 0;
    for &x in xs {
        while k + 1 < ys.len() && ys[k + 1] <= x {
            k += 1;
        }
        let mut y = ys[k];
        if k + 1 < ys.len() && (ys[k + 1] - x).abs() < (y - x).abs() {
            y = ys[k + 1];
        }
        let d = (x - y).abs();
        if d > best.0 {
            best = (d, (x, y));
        }
    }
    best
}

/// Hausdorff distance between two sorted finite point sets.
pub fn hausdorff_points<T: Real>(xs: &[T], ys: &[T]) -> Result<HausdorffResult<T>> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySet);
    }
    if xs.windows(2).any(|w| w[0] > w[1]) || ys.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("point lists must be sorted".into()));
    }
    let (dxy, wxy) = directed_points(xs, ys);
    let (dyx, wyx) = directed_points(ys, xs);
    Ok(HausdorffResult {
        value: dxy.max(dyx),
        directed_xy: dxy,
        directed_yx: dyx,
        witness_xy: wxy,
        witness_yx: wyx,
    })
}
