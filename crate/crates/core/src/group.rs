//! The acting group `Z^d` with counting measure: norms, balls, polynomial
//! growth constants and tent cutoffs.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// A lattice point of `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn zero(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Number of unit steps in the L1 sense.
    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn linf(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

impl From<Vec<i64>> for Site {
    fn from(v: Vec<i64>) -> Self {
        Site(v)
    }
}

impl From<i64> for Site {
    fn from(v: i64) -> Self {
        Site(vec![v])
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl<'a> Add<&'a Site> for &'a Site {
    type Output = Site;
    fn add(self, rhs: &Site) -> Site {
        debug_assert_eq!(self.dim(), rhs.dim());
        Site(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl<'a> Sub<&'a Site> for &'a Site {
    type Output = Site;
    fn sub(self, rhs: &Site) -> Site {
        debug_assert_eq!(self.dim(), rhs.dim());
        Site(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site(self.0.iter().map(|a| -a).collect())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    #[default]
    Linf,
}

impl std::str::FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "linf" | "sup" | "max" => Ok(NormKind::Linf),
            other => invalid(format!("unknown norm `{other}`")),
        }
    }
}

/// `Z^d` with a left-invariant integer-valued norm and counting measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeGroup {
    pub dim: usize,
    pub norm: NormKind,
}

impl LatticeGroup {
    pub fn new(dim: usize, norm: NormKind) -> Result<Self> {
        if dim == 0 {
            return invalid("lattice dimension must be positive");
        }
        Ok(LatticeGroup { dim, norm })
    }

    pub fn with_linf(dim: usize) -> Result<Self> {
        Self::new(dim, NormKind::Linf)
    }

    pub fn norm(&self, g: &Site) -> i64 {
        match self.norm {
            NormKind::L1 => g.l1(),
            NormKind::Linf => g.linf(),
        }
    }

    pub fn check(&self, g: &Site) -> Result<()> {
        if g.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: g.dim(),
            });
        }
        Ok(())
    }

    /// Largest integer radius `R` with `{|g| <= R} = B(r)`, or `None` when
    /// the open ball is empty.
    pub fn closed_radius<T: Real>(r: T) -> Option<i64> {
        if !(r > T::zero()) {
            return None;
        }
        let c = r.ceil().to_i64().expect("finite radius");
        Some(c - 1)
    }

    /// Sites with `|g| <= radius`, lexicographic order.
    pub fn closed_ball(&self, radius: i64) -> Vec<Site> {
        if radius < 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut cur = vec![-radius; self.dim];
        loop {
            let s = Site(cur.clone());
            if self.norm(&s) <= radius {
                out.push(s);
            }
            // odometer increment, last coordinate fastest
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if cur[k] < radius {
                    cur[k] += 1;
                    for c in cur.iter_mut().skip(k + 1) {
                        *c = -radius;
                    }
                    break;
                }
            }
        }
    }

    /// The open ball `B(r) = {g : |g| < r}` in lexicographic order.
    pub fn ball<T: Real>(&self, r: T) -> Vec<Site> {
        match Self::closed_radius(r) {
            Some(radius) => self.closed_ball(radius),
            None => Vec::new(),
        }
    }

    /// Sites with `|g| = n`, lexicographic order.
    pub fn sphere(&self, n: i64) -> Vec<Site> {
        if self.dim == 1 {
            return match n {
                n if n < 0 => Vec::new(),
                0 => vec![Site(vec![0])],
                n => vec![Site(vec![-n]), Site(vec![n])],
            };
        }
        self.closed_ball(n)
            .into_iter()
            .filter(|g| self.norm(g) == n)
            .collect()
    }

    /// `#{g : |g| <= radius}` in closed form.
    pub fn closed_ball_count(&self, radius: i64) -> u64 {
        if radius < 0 {
            return 0;
        }
        let r = radius as u64;
        let d = self.dim as u64;
        match self.norm {
            NormKind::Linf => (2 * r + 1).pow(d as u32),
            // sum_k 2^k C(d,k) C(r,k)
            NormKind::L1 => (0..=d.min(r))
                .map(|k| (1u64 << k) * binomial(d, k) * binomial(r, k))
                .sum(),
        }
    }

    /// Counting measure of the open ball `B(r)`.
    pub fn ball_volume<T: Real>(&self, r: T) -> u64 {
        Self::closed_radius(r).map_or(0, |radius| self.closed_ball_count(radius))
    }

    /// The first `count` sites ordered by norm, then lexicographically.
    /// Prefixes are nested, which makes orbit samples monotone in size.
    pub fn sites_by_norm(&self, count: usize) -> Vec<Site> {
        let mut out = Vec::with_capacity(count);
        let mut n = 0;
        while out.len() < count {
            for s in self.sphere(n) {
                if out.len() == count {
                    break;
                }
                out.push(s);
            }
            n += 1;
        }
        out
    }

    /// Certified growth constants `c0 r^b <= |B(r)| <= c1 r^b` on `[1, r_max]`.
    ///
    /// `|B(r)|` is a left-continuous step function jumping right after each
    /// integer, so the infimum of `|B(r)|/r^b` sits at integers and the
    /// supremum is the right limit at integers. Both are evaluated exactly
    /// from the closed-form ball counts.
    pub fn growth_constants<T: Real>(&self, r_max: T) -> Result<GrowthConstants<T>> {
        if !(r_max >= T::lit(2.0)) || !r_max.is_finite() {
            return invalid("growth constants need r_max >= 2");
        }
        let b = self.dim as i32;
        let last = r_max.floor().to_i64().expect("finite r_max");
        let ratio = |count: u64, r: T| T::from_u64(count).unwrap() / r.powi(b);

        let mut c0 = T::infinity();
        let mut c1 = T::zero();
        for n in 1..=last {
            let rn = T::from_int(n);
            // value at r = n: ball holds |g| <= n - 1
            c0 = c0.min(ratio(self.closed_ball_count(n - 1), rn));
            c1 = c1.max(ratio(self.closed_ball_count(n - 1), rn));
            // right limit at n: ball holds |g| <= n
            c1 = c1.max(ratio(self.closed_ball_count(n), rn));
        }
        if r_max > T::from_int(last) {
            let count = self.ball_volume(r_max);
            c0 = c0.min(ratio(count, r_max));
        }
        GrowthConstants::new(T::from_int(b as i64), c0, c1, r_max)
    }

    /// Tent cutoff supported on `B(r)`.
    pub fn tent<T: Real>(&self, r: T) -> Result<CutoffFunction<T>> {
        if !(r >= T::one()) {
            return invalid(format!("tent cutoff needs r >= 1, got {r}"));
        }
        let sites = self.ball(r);
        let values = sites.iter().map(|g| tent_value(r, self.norm(g))).collect();
        Ok(CutoffFunction { r, sites, values })
    }

    /// `||chi^h - chi|| / ||chi||` for the tent cutoff at radius `r`, where
    /// `chi^h(g) = chi(g + h)`.
    pub fn folner_defect<T: Real>(&self, r: T, h: &Site) -> Result<T> {
        if !(r >= T::one()) {
            return invalid(format!("folner defect needs r >= 1, got {r}"));
        }
        self.check(h)?;
        let radius = Self::closed_radius(r).expect("r >= 1");
        let ball = self.closed_ball(radius);
        let mut diff = T::zero();
        let mut norm2 = T::zero();
        for g in &ball {
            let here = tent_value(r, self.norm(g));
            norm2 = norm2 + here * here;
            let there = tent_value(r, self.norm(&(g + h)));
            diff = diff + (there - here) * (there - here);
            // g lies in B(r) - h but g - h (the preimage) may fall outside B(r)
            let pre = g - h;
            if self.norm(&pre) > radius {
                diff = diff + here * here;
            }
        }
        Ok((diff / norm2).sqrt())
    }

    /// `folner_defect(r, h)` for every `|h| <= floor(r)`, in `closed_ball`
    /// order, from one dense table of tent values.
    pub fn folner_profile<T: Real>(&self, r: T) -> Result<Vec<(Site, T)>> {
        if !(r >= T::one()) {
            return invalid(format!("folner defect needs r >= 1, got {r}"));
        }
        let support = Self::closed_radius(r).expect("r >= 1");
        let hmax = r.floor().to_i64().expect("finite radius");
        let half = support + hmax;
        let w = (2 * half + 1) as usize;
        let d = self.dim;
        let strides: Vec<i64> = (0..d).map(|i| w.pow((d - 1 - i) as u32) as i64).collect();
        let index = |c: &[i64]| -> i64 { c.iter().zip(&strides).map(|(x, s)| (x + half) * s).sum() };

        let mut chi = vec![T::zero(); w.pow(d as u32)];
        let mut norm2 = T::zero();
        for g in self.closed_ball(support) {
            let v = tent_value(r, self.norm(&g));
            chi[index(&g.0) as usize] = v;
            norm2 = norm2 + v * v;
        }

        let defect = |h: &Site| -> T {
            // g runs over supp(chi) and supp(chi) - h, both inside the table
            let lo: Vec<i64> = h.0.iter().map(|x| -support - x.max(&0)).collect();
            let hi: Vec<i64> = h.0.iter().map(|x| support - x.min(&0)).collect();
            let shift: i64 = h.0.iter().zip(&strides).map(|(x, s)| x * s).sum();
            let mut cur = lo.clone();
            let mut diff = T::zero();
            loop {
                let start = index(&cur);
                let run = (hi[d - 1] - lo[d - 1] + 1) as usize;
                let a = &chi[start as usize..start as usize + run];
                let b = &chi[(start + shift) as usize..(start + shift) as usize + run];
                for (x, y) in a.iter().zip(b) {
                    diff = diff + (*y - *x) * (*y - *x);
                }
                let mut k = d - 1;
                loop {
                    if k == 0 {
                        return (diff / norm2).sqrt();
                    }
                    k -= 1;
                    if cur[k] < hi[k] {
                        cur[k] += 1;
                        break;
                    }
                    cur[k] = lo[k];
                }
            }
        };
        let hs = self.closed_ball(hmax);
        Ok(hs
            .par_iter()
            .map(|h| (h.clone(), defect(h)))
            .collect())
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `max(0, (r - |g|)/r)`.
pub fn tent_value<T: Real>(r: T, norm: i64) -> T {
    let n = T::from_int(norm);
    if n < r {
        (r - n) / r
    } else {
        T::zero()
    }
}

/// `((2+b)^(2+b) c1 / (2 b^b c0))^(1/2)`.
pub fn tent_constant<T: Real>(b: T, c0: T, c1: T) -> T {
    let two = T::lit(2.0);
    ((two + b).powf(two + b) * c1 / (two * b.powf(b) * c0)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants<T> {
    pub b: T,
    pub c0: T,
    pub c1: T,
    pub t: T,
    /// Upper end of the radius range the bounds were certified on.
    pub r_max: T,
}

impl<T: Real> GrowthConstants<T> {
    pub fn new(b: T, c0: T, c1: T, r_max: T) -> Result<Self> {
        if !(b >= T::one()) {
            return invalid(format!("growth exponent must be >= 1, got {b}"));
        }
        if !(c0 > T::zero()) || !(c1 > c0) {
            return invalid(format!("need c1 > c0 > 0, got c0={c0}, c1={c1}"));
        }
        Ok(GrowthConstants {
            b,
            c0,
            c1,
            t: tent_constant(b, c0, c1),
            r_max,
        })
    }

    /// Whether a cutoff radius stays inside the certified range.
    pub fn covers(&self, r: T) -> bool {
        r >= T::one() && r <= self.r_max
    }
}

/// Tent function `chi(g) = (r - |g|)/r` on `B(r)`.
#[derive(Clone, Debug)]
pub struct CutoffFunction<T> {
    pub r: T,
    pub sites: Vec<Site>,
    pub values: Vec<T>,
}

impl<T: Real> CutoffFunction<T> {
    pub fn l2_norm(&self) -> T {
        self.values.iter().map(|v| *v * *v).sum::<T>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn g(d: usize, n: NormKind) -> LatticeGroup {
        LatticeGroup::new(d, n).unwrap()
    }

    #[test]
    fn ball_examples() {
        let z1 = g(1, NormKind::Linf);
        assert_eq!(z1.ball(1.0), vec![Site(vec![0])]);
        assert_eq!(z1.ball(5.5).len(), 11);
        assert_eq!(z1.ball(5.5)[0], Site(vec![-5]));
        let z2 = g(2, NormKind::Linf);
        let b = z2.ball(2.0);
        assert_eq!(b.len(), 9);
        assert!(b.iter().all(|s| s.linf() <= 1));
        assert!(z1.ball(0.0).is_empty());
        assert!(z1.ball(-1.0).is_empty());
        assert_eq!(z1.ball(1e-9).len(), 1);
    }

    #[test]
    fn ball_count_matches_box_scan() {
        for norm in [NormKind::L1, NormKind::Linf] {
            for d in 1..=3 {
                let grp = g(d, norm);
                let mut prev = 0;
                for r in 0..=20 {
                    let rr = r as f64 + 0.5;
                    let ball = grp.ball(rr);
                    // brute force over the enclosing box
                    let r_int = r as i64;
                    let side = 2 * r_int + 3;
                    let total = side.pow(d as u32);
                    let mut count = 0;
                    for idx in 0..total {
                        let mut rem = idx;
                        let mut c = vec![0; d];
                        for k in 0..d {
                            c[k] = rem % side - (r_int + 1);
                            rem /= side;
                        }
                        if (grp.norm(&Site(c)) as f64) < rr {
                            count += 1;
                        }
                    }
                    assert_eq!(ball.len(), count);
                    assert_eq!(grp.ball_volume(rr) as usize, count);
                    assert!(ball.len() >= prev);
                    prev = ball.len();
                }
            }
        }
    }

    #[test]
    fn ball_is_sorted_and_nested() {
        let grp = g(2, NormKind::L1);
        let small = grp.ball(3.0);
        let big = grp.ball(4.5);
        assert!(small.windows(2).all(|w| w[0] < w[1]));
        assert!(small.iter().all(|s| big.contains(s)));
    }

    #[test]
    fn growth_constants_d1() {
        let gc = g(1, NormKind::Linf).growth_constants(64.0).unwrap();
        assert_eq!(gc.b, 1.0);
        assert_eq!(gc.c0, 1.0);
        assert_eq!(gc.c1, 3.0);
        assert!((gc.t - 40.5f64.sqrt()).abs() < 1e-12);
        // exact rational: t^2 = 3^3 * 3 / (2 * 1 * 1)
        let t2 = Ratio::new(27 * 3, 2);
        assert_eq!(t2, Ratio::new(81, 2));
        assert!((gc.t * gc.t - 40.5).abs() < 1e-12);
    }

    #[test]
    fn growth_constants_d2() {
        let gc = g(2, NormKind::Linf).growth_constants(64.0).unwrap();
        assert_eq!((gc.b, gc.c0, gc.c1), (2.0, 1.0, 9.0));
        // t^2 = 4^4 * 9 / (2 * 2^2 * 1) = 288
        let t2 = Ratio::new(4i64.pow(4) * 9, 2 * 4);
        assert_eq!(t2, Ratio::from_integer(288));
        assert!((gc.t - 288f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn growth_constants_hold_on_integer_radii() {
        for norm in [NormKind::L1, NormKind::Linf] {
            for d in 1..=3 {
                let grp = g(d, norm);
                let gc = grp.growth_constants(40.0).unwrap();
                for r in 1..=40 {
                    for rr in [r as f64, r as f64 + 1e-9, r as f64 - 1e-9] {
                        if rr < 1.0 || rr > 40.0 {
                            continue;
                        }
                        let vol = grp.ball_volume(rr) as f64;
                        let p = rr.powi(d as i32);
                        assert!(gc.c0 * p <= vol * (1.0 + 1e-12), "{d} {norm:?} {rr}");
                        assert!(vol <= gc.c1 * p * (1.0 + 1e-12), "{d} {norm:?} {rr}");
                    }
                }
            }
        }
    }

    #[test]
    fn growth_constants_reject_bad_input() {
        let grp = g(1, NormKind::Linf);
        assert!(grp.growth_constants(1.5).is_err());
        assert!(GrowthConstants::new(1.0, 2.0, 2.0, 2.0).is_err());
        assert!(GrowthConstants::new(0.5, 1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn tent_shape() {
        let grp = g(1, NormKind::Linf);
        let chi = grp.tent(4.0).unwrap();
        assert_eq!(chi.sites.len(), 7);
        let origin = chi.sites.iter().position(|s| s.is_zero()).unwrap();
        assert_eq!(chi.values[origin], 1.0);
        assert!(chi.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(chi.l2_norm() > 0.0);
        assert!(grp.tent(0.5).is_err());
    }

    /// Oracle: explicit vectors over a box covering both supports.
    fn folner_brute(grp: &LatticeGroup, r: f64, h: &Site) -> f64 {
        let span = r.ceil() as i64 + h.linf() + h.l1() + 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for s in grp.closed_ball(span) {
            let chi = |x: &Site| tent_value(r, grp.norm(x));
            let a = chi(&(&s + h));
            let b = chi(&s);
            num += (a - b) * (a - b);
            den += b * b;
        }
        (num / den).sqrt()
    }

    #[test]
    fn folner_defect_examples() {
        let z1 = g(1, NormKind::Linf);
        assert_eq!(z1.folner_defect(4.0, &Site(vec![0])).unwrap(), 0.0);
        let v = z1.folner_defect(4.0, &Site(vec![1])).unwrap();
        assert!((v - folner_brute(&z1, 4.0, &Site(vec![1]))).abs() < 1e-14);
        assert!(v <= 40.5f64.sqrt() / 4.0);
        let z2 = g(2, NormKind::Linf);
        let h = Site(vec![1, 1]);
        let v = z2.folner_defect(8.0, &h).unwrap();
        assert!((v - folner_brute(&z2, 8.0, &h)).abs() < 1e-14);
        assert!(v <= 288f64.sqrt() / 8.0);
        assert!(z1.folner_defect(0.9, &Site(vec![1])).is_err());
        assert!(z1.folner_defect(2.0, &Site(vec![1, 0])).is_err());
    }

    #[test]
    fn folner_matches_brute_force_l1() {
        let grp = g(2, NormKind::L1);
        for r in [1.0, 2.5, 5.0] {
            for h in grp.closed_ball(4) {
                let a = grp.folner_defect(r, &h).unwrap();
                let b = folner_brute(&grp, r, &h);
                assert!((a - b).abs() < 1e-13, "r={r} h={h}");
            }
        }
    }

    #[test]
    fn profile_matches_pointwise_defects() {
        for (d, norm) in [(1, NormKind::Linf), (2, NormKind::Linf), (2, NormKind::L1), (3, NormKind::L1)] {
            let grp = g(d, norm);
            for r in [1.0, 2.5, 4.0, 6.0] {
                let profile = grp.folner_profile::<f64>(r).unwrap();
                let hs: Vec<Site> = profile.iter().map(|(h, _)| h.clone()).collect();
                assert_eq!(hs, grp.closed_ball(r as i64));
                for (h, v) in profile {
                    let w = grp.folner_defect(r, &h).unwrap();
                    assert!((v - w).abs() < 1e-14, "d={d} r={r} h={h}");
                }
            }
        }
        assert!(g(1, NormKind::Linf).folner_profile(0.5f64).is_err());
    }

    #[test]
    fn amenability_witness() {
        for d in [1, 2] {
            let grp = g(d, NormKind::Linf);
            let gc = grp.growth_constants(512.0).unwrap();
            let f = grp.ball(3.0);
            let hmax = f.iter().map(|h| grp.norm(h)).max().unwrap() as f64;
            for eta in [0.5, 0.1] {
                let r = gc.t * hmax / eta;
                assert!(gc.covers(r));
                for h in &f {
                    assert!(grp.folner_defect(r, h).unwrap() <= eta + 1e-12);
                }
            }
        }
    }

    #[test]
    fn sites_by_norm_nested() {
        let grp = g(2, NormKind::Linf);
        let a = grp.sites_by_norm(5);
        let b = grp.sites_by_norm(20);
        assert_eq!(&b[..5], &a[..]);
        assert!(a[0].is_zero());
    }

    #[test]
    fn generic_over_f32() {
        let gc = g(1, NormKind::Linf).growth_constants(16.0f32).unwrap();
        assert!((gc.t - 40.5f32.sqrt()).abs() < 1e-5);
        let v = g(1, NormKind::Linf)
            .folner_defect(4.0f32, &Site(vec![1]))
            .unwrap();
        assert!(v <= gc.t / 4.0);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn norm_is_a_norm(a in proptest::collection::vec(-50i64..50, 3),
                          b in proptest::collection::vec(-50i64..50, 3),
                          l1 in any::<bool>()) {
            let grp = g(3, if l1 { NormKind::L1 } else { NormKind::Linf });
            let (a, b) = (Site(a), Site(b));
            prop_assert_eq!(grp.norm(&Site::zero(3)), 0);
            prop_assert_eq!(grp.norm(&a), grp.norm(&-&a));
            prop_assert!(grp.norm(&(&a + &b)) <= grp.norm(&a) + grp.norm(&b));
        }
    }
}
