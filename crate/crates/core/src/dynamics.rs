//! Dynamical hulls `(Z, Z^d)`: frequency tori for quasiperiodic models and
//! subshifts over finite alphabets for symbolic models.
//!
//! Subshift points are never stored as arrays. A point is a shared
//! [`Configuration`] (periodic pattern, finite patch of another
//! configuration, or two-sided substitution fixed point) together with an
//! offset, so the shift action is exact integer arithmetic and every metric
//! query reduces to a finite window scan.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Debug;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{LatticeGroup, NormKind, Site};
use crate::scalar::Real;

/// Default inspection radius for subshift distances.
pub const DEFAULT_WINDOW: i64 = 256;

/// Points representing an invariant set up to the group action.
#[derive(Clone, Debug)]
pub struct Representatives<P, T> {
    /// Each representative with a period vector it is invariant under.
    pub points: Vec<(P, Vec<i64>)>,
    /// Every point of the set lies within this hull distance of the orbit
    /// of some representative.
    pub covering: T,
}

/// A compact metric space with a `Z^d` action.
pub trait Hull<T: Real>: Send + Sync {
    type Point: Clone + Debug + Send + Sync;
    /// Description of an invariant closed subset.
    type Set: Clone + Debug + Send + Sync;

    /// The acting group, including the norm `|g|` used in Lipschitz bounds.
    fn group(&self) -> LatticeGroup;

    fn act(&self, g: &Site, p: &Self::Point) -> Result<Self::Point>;

    fn metric(&self, p: &Self::Point, q: &Self::Point) -> T;

    fn is_periodic(&self, p: &Self::Point, period: &[i64]) -> bool;

    fn random_point<R: Rng>(&self, rng: &mut R) -> Self::Point;

    /// A random point near `p`; `closeness` in `[0, 1]`, larger is closer.
    fn random_neighbor<R: Rng>(&self, p: &Self::Point, closeness: f64, rng: &mut R)
        -> Self::Point;

    /// Finitely many periodic points whose orbits approximate `set`.
    fn representatives(&self, set: &Self::Set, mesh: T)
        -> Result<Representatives<Self::Point, T>>;
}

/// Reduce to `[0, 1)` by nearest-integer subtraction.
pub fn wrap_unit<T: Real>(x: T) -> T {
    let mut y = x - x.round();
    if y < T::zero() {
        y = y + T::one();
    }
    if y >= T::one() {
        y = T::zero();
    }
    y
}

/// `theta - n alpha mod 1`, reducing `n alpha` before it meets `theta`.
/// The product is split exactly with a fused multiply-add, so the result is
/// within a few ulps of 1 no matter how large `n` is.
pub fn rotate<T: Real>(theta: T, alpha: T, n: i64) -> T {
    let n = T::from_int(n);
    let p = n * alpha;
    let err = n.mul_add(alpha, -p);
    let frac = (p - p.round()) + err;
    wrap_unit(theta - frac)
}

/// Wrap-around distance on `R/Z`.
pub fn torus_dist<T: Real>(a: T, b: T) -> T {
    let d = (a - b).abs();
    let d = d - d.floor();
    d.min(T::one() - d)
}

// ---------------------------------------------------------------------------
// Frequency torus

/// `R^nu x T^nu` with `Z` acting by rotation `n(alpha, theta) = (alpha, theta - n alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusHull {
    pub nu: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint<T> {
    pub alpha: Vec<T>,
    pub theta: Vec<T>,
}

impl<T: Real> TorusPoint<T> {
    pub fn new(alpha: Vec<T>, theta: Vec<T>) -> Self {
        let theta = theta.into_iter().map(wrap_unit).collect();
        TorusPoint { alpha, theta }
    }

    pub fn single(alpha: T, theta: T) -> Self {
        Self::new(vec![alpha], vec![theta])
    }
}

/// The invariant slice `{alpha} x T^nu` at a rational frequency vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusSlice {
    pub alpha: Vec<Ratio<i64>>,
}

impl TorusSlice {
    pub fn new(alpha: Vec<Ratio<i64>>) -> Self {
        TorusSlice { alpha }
    }

    pub fn single(alpha: Ratio<i64>) -> Self {
        TorusSlice { alpha: vec![alpha] }
    }

    /// Least common period of the rotation.
    pub fn period(&self) -> i64 {
        self.alpha.iter().fold(1, |acc, a| acc.lcm(a.denom()))
    }

    pub fn alpha_real<T: Real>(&self) -> Vec<T> {
        self.alpha
            .iter()
            .map(|a| T::from_int(*a.numer()) / T::from_int(*a.denom()))
            .collect()
    }
}

impl TorusHull {
    pub fn new(nu: usize) -> Result<Self> {
        if nu == 0 {
            return invalid("torus needs at least one frequency");
        }
        Ok(TorusHull { nu })
    }

    fn check<T>(&self, p: &TorusPoint<T>) -> Result<()> {
        if p.alpha.len() != self.nu || p.theta.len() != self.nu {
            return Err(Error::DimensionMismatch {
                expected: self.nu,
                got: p.alpha.len().min(p.theta.len()),
            });
        }
        Ok(())
    }
}

impl<T: Real> Hull<T> for TorusHull {
    type Point = TorusPoint<T>;
    type Set = TorusSlice;

    fn group(&self) -> LatticeGroup {
        LatticeGroup {
            dim: 1,
            norm: NormKind::Linf,
        }
    }

    fn act(&self, g: &Site, p: &TorusPoint<T>) -> Result<TorusPoint<T>> {
        self.check(p)?;
        if g.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: g.dim(),
            });
        }
        let n = g.0[0];
        // one reduction per call, never iterated
        let theta = p
            .alpha
            .iter()
            .zip(&p.theta)
            .map(|(a, t)| rotate(*t, *a, n))
            .collect();
        Ok(TorusPoint {
            alpha: p.alpha.clone(),
            theta,
        })
    }

    fn metric(&self, p: &TorusPoint<T>, q: &TorusPoint<T>) -> T {
        let da = p
            .alpha
            .iter()
            .zip(&q.alpha)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max);
        let dt = p
            .theta
            .iter()
            .zip(&q.theta)
            .map(|(a, b)| torus_dist(*a, *b))
            .fold(T::zero(), T::max);
        da.max(dt)
    }

    fn is_periodic(&self, p: &TorusPoint<T>, period: &[i64]) -> bool {
        if period.len() != 1 || period[0] <= 0 {
            return false;
        }
        let q = T::from_int(period[0]);
        let tol = T::epsilon() * T::lit(64.0) * q.max(T::one());
        p.alpha.iter().all(|a| {
            let qa = q * *a;
            (qa - qa.round()).abs() <= tol
        })
    }

    fn random_point<R: Rng>(&self, rng: &mut R) -> TorusPoint<T> {
        let mut draw = || T::lit(rng.gen::<f64>());
        let alpha = (0..self.nu).map(|_| draw()).collect();
        let theta = (0..self.nu).map(|_| draw()).collect();
        TorusPoint { alpha, theta }
    }

    fn random_neighbor<R: Rng>(&self, p: &TorusPoint<T>, closeness: f64, rng: &mut R)
        -> TorusPoint<T> {
        let scale = 0.5 * (1.0 - closeness.clamp(0.0, 1.0)).max(1e-9);
        let mut jitter = || T::lit(rng.gen_range(-scale..=scale));
        let alpha = p.alpha.iter().map(|a| *a + jitter()).collect();
        let theta = p.theta.iter().map(|t| wrap_unit(*t + jitter())).collect();
        TorusPoint { alpha, theta }
    }

    /// Uniform theta grid. For one frequency with denominator `q` the orbit
    /// already moves theta through all multiples of `1/q`, so the grid only
    /// covers `[0, 1/q)`.
    fn representatives(&self, set: &TorusSlice, mesh: T)
        -> Result<Representatives<TorusPoint<T>, T>> {
        if set.alpha.len() != self.nu {
            return Err(Error::DimensionMismatch {
                expected: self.nu,
                got: set.alpha.len(),
            });
        }
        if !(mesh > T::zero()) {
            return invalid("theta mesh must be positive");
        }
        let q = set.period();
        let alpha = set.alpha_real::<T>();
        let span = if self.nu == 1 {
            T::one() / T::from_int(q)
        } else {
            T::one()
        };
        let steps = (span / mesh).ceil().to_usize().unwrap_or(1).max(1);
        let step = span / T::from_usize(steps).unwrap();
        let mut points = Vec::new();
        let total = steps.pow(self.nu as u32);
        for idx in 0..total {
            let mut rem = idx;
            let theta = (0..self.nu)
                .map(|_| {
                    let k = rem % steps;
                    rem /= steps;
                    T::from_usize(k).unwrap() * step
                })
                .collect();
            points.push((
                TorusPoint {
                    alpha: alpha.clone(),
                    theta,
                },
                vec![q],
            ));
        }
        Ok(Representatives {
            points,
            covering: step,
        })
    }
}

// ---------------------------------------------------------------------------
// Subshifts

/// A configuration periodic under the box `periods`, given on one
/// fundamental box in lexicographic order (last coordinate fastest).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodicPattern {
    pub periods: Vec<i64>,
    pub pattern: Vec<i64>,
}

impl PeriodicPattern {
    pub fn new(periods: Vec<i64>, pattern: Vec<i64>) -> Result<Self> {
        if periods.is_empty() || periods.iter().any(|&p| p <= 0) {
            return invalid("periods must be positive");
        }
        let size: i64 = periods.iter().product();
        if size as usize != pattern.len() {
            return invalid(format!(
                "pattern has {} symbols but the period box holds {size}",
                pattern.len()
            ));
        }
        Ok(PeriodicPattern { periods, pattern })
    }

    fn index(&self, site: &[i64]) -> usize {
        let mut idx = 0i64;
        for (c, p) in site.iter().zip(&self.periods) {
            idx = idx * p + c.rem_euclid(*p);
        }
        idx as usize
    }

    pub fn at(&self, site: &[i64]) -> i64 {
        self.pattern[self.index(site)]
    }

    /// All offsets in the fundamental box.
    pub fn box_sites(&self) -> Vec<Site> {
        let total: i64 = self.periods.iter().product();
        (0..total)
            .map(|mut idx| {
                let mut c = vec![0; self.periods.len()];
                for k in (0..self.periods.len()).rev() {
                    c[k] = idx % self.periods[k];
                    idx /= self.periods[k];
                }
                Site(c)
            })
            .collect()
    }
}

/// Substitution rule on a finite alphabet (one-dimensional).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Substitution {
    pub rules: BTreeMap<i64, Vec<i64>>,
    pub seed: i64,
}

impl Substitution {
    pub fn apply(&self, word: &[i64]) -> Vec<i64> {
        word.iter()
            .flat_map(|c| self.rules[c].iter().copied())
            .collect()
    }

    pub fn iterate(&self, word: &[i64], times: usize) -> Vec<i64> {
        (0..times).fold(word.to_vec(), |w, _| self.apply(&w))
    }

    /// Legal two-letter words: factors of iterates of the seed.
    fn legal_pairs(&self) -> BTreeSet<(i64, i64)> {
        let mut pairs = BTreeSet::new();
        let mut w = vec![self.seed];
        for _ in 0..(2 * self.rules.len() + 4) {
            for win in w.windows(2) {
                pairs.insert((win[0], win[1]));
            }
            w = self.apply(&w);
            if w.len() > 1 << 16 {
                break;
            }
        }
        pairs
    }

    /// All legal words of length `len`.
    pub fn language(&self, len: usize) -> HashSet<Vec<i64>> {
        let mut out = HashSet::new();
        if len == 0 {
            out.insert(Vec::new());
            return out;
        }
        // once every k-th image has length >= len, a legal word of that
        // length straddles at most two images of a legal pair
        let mut k = 0;
        while self.min_letter_growth(k) < len && k < 64 {
            k += 1;
        }
        for (a, b) in self.legal_pairs() {
            let w = self.iterate(&[a, b], k);
            for win in w.windows(len) {
                out.insert(win.to_vec());
            }
        }
        out
    }

    /// `min_c |sigma^k(c)|`.
    fn min_letter_growth(&self, k: usize) -> usize {
        self.rules
            .keys()
            .map(|c| self.iterate(&[*c], k).len())
            .min()
            .unwrap_or(0)
    }

    /// Two-sided fixed point `... L . R ...` of a power of the substitution,
    /// generated to at least `reach` symbols on each side.
    fn fixed_point(&self, reach: usize) -> Result<FixedPoint> {
        let pairs = self.legal_pairs();
        for p in 1..=(2 * self.rules.len()).max(2) {
            for &(l, r) in &pairs {
                let ir = self.iterate(&[r], p);
                let il = self.iterate(&[l], p);
                if ir.first() == Some(&r) && il.last() == Some(&l) && (ir.len() > 1 || il.len() > 1)
                {
                    let mut right = vec![r];
                    let mut left = vec![l];
                    let mut guard = 0;
                    while (right.len() < reach || left.len() < reach) && guard < 200 {
                        right = self.iterate(&right, p);
                        left = self.iterate(&left, p);
                        guard += 1;
                    }
                    if right.len() < reach || left.len() < reach {
                        continue;
                    }
                    left.reverse();
                    return Ok(FixedPoint { left, right });
                }
            }
        }
        invalid("substitution has no two-sided fixed point of a small power")
    }
}

/// `x(n) = right[n]` for `n >= 0`, `x(-1-m) = left[m]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    pub left: Vec<i64>,
    pub right: Vec<i64>,
}

impl FixedPoint {
    fn at(&self, n: i64) -> Option<i64> {
        if n >= 0 {
            self.right.get(n as usize).copied()
        } else {
            self.left.get((-1 - n) as usize).copied()
        }
    }

    fn reach(&self) -> i64 {
        self.left.len().min(self.right.len()) as i64
    }
}

/// A concrete element of `A^{Z^d}` described finitely.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Configuration {
    Periodic(PeriodicPattern),
    /// `base` with finitely many sites overwritten.
    Patched {
        base: Arc<Configuration>,
        patches: BTreeMap<Site, i64>,
    },
    FixedPoint(FixedPoint),
}

impl Configuration {
    /// Symbol at `site`, or `None` outside the generated range.
    pub fn symbol(&self, site: &Site) -> Option<i64> {
        match self {
            Configuration::Periodic(p) => Some(p.at(&site.0)),
            Configuration::Patched { base, patches } => {
                patches.get(site).copied().or_else(|| base.symbol(site))
            }
            Configuration::FixedPoint(f) => f.at(site.0[0]),
        }
    }

    /// Radius up to which every symbol is defined.
    pub fn reach(&self) -> i64 {
        match self {
            Configuration::Periodic(_) => i64::MAX,
            Configuration::Patched { base, .. } => base.reach(),
            Configuration::FixedPoint(f) => f.reach(),
        }
    }

    fn periods(&self) -> Option<&[i64]> {
        match self {
            Configuration::Periodic(p) => Some(&p.periods),
            _ => None,
        }
    }
}

/// `x(m) = config(m + offset)`; the shift by `g` subtracts `g` from the offset.
#[derive(Clone, Debug)]
pub struct SubshiftPoint {
    pub config: Arc<Configuration>,
    pub offset: Site,
}

impl SubshiftPoint {
    pub fn new(config: Configuration, dim: usize) -> Self {
        SubshiftPoint {
            config: Arc::new(config),
            offset: Site::zero(dim),
        }
    }

    pub fn at(&self, m: &Site) -> Option<i64> {
        self.config.symbol(&(m + &self.offset))
    }

    /// Symbol at the origin.
    pub fn origin(&self) -> i64 {
        self.config
            .symbol(&self.offset)
            .expect("origin is always generated")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    Periodic(PeriodicPattern),
    Substitution(Substitution),
}

/// Outcome of scanning two configurations shell by shell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Agreement {
    /// Smallest norm of a site where the points differ.
    FirstDifference(i64),
    Equal,
    /// No difference on `|g| <= n`; scanning stopped there.
    Through(i64),
}

/// Orbit closure of a generator in `A^{Z^d}`.
#[derive(Clone, Debug)]
pub struct SubshiftHull {
    pub group: LatticeGroup,
    pub alphabet: BTreeSet<i64>,
    pub generator: Generator,
    point: Arc<Configuration>,
}

impl PartialEq for SubshiftHull {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group
            && self.alphabet == other.alphabet
            && self.generator == other.generator
    }
}

impl SubshiftHull {
    pub fn periodic(
        group: LatticeGroup,
        alphabet: impl IntoIterator<Item = i64>,
        pattern: PeriodicPattern,
    ) -> Result<Self> {
        let alphabet: BTreeSet<i64> = alphabet.into_iter().collect();
        if pattern.periods.len() != group.dim {
            return Err(Error::DimensionMismatch {
                expected: group.dim,
                got: pattern.periods.len(),
            });
        }
        if let Some(bad) = pattern.pattern.iter().find(|s| !alphabet.contains(s)) {
            return Err(Error::SymbolOutOfAlphabet(*bad));
        }
        let point = Arc::new(Configuration::Periodic(pattern.clone()));
        Ok(SubshiftHull {
            group,
            alphabet,
            generator: Generator::Periodic(pattern),
            point,
        })
    }

    /// Hull of a one-dimensional primitive substitution; `reach` bounds the
    /// generated part of its two-sided fixed point.
    pub fn substitution(
        alphabet: impl IntoIterator<Item = i64>,
        rules: BTreeMap<i64, Vec<i64>>,
        seed: i64,
        reach: usize,
    ) -> Result<Self> {
        let alphabet: BTreeSet<i64> = alphabet.into_iter().collect();
        for (k, w) in &rules {
            for s in std::iter::once(k).chain(w.iter()) {
                if !alphabet.contains(s) {
                    return Err(Error::SymbolOutOfAlphabet(*s));
                }
            }
            if w.is_empty() {
                return invalid("substitution images must be non-empty");
            }
        }
        if alphabet.iter().any(|a| !rules.contains_key(a)) || !alphabet.contains(&seed) {
            return invalid("substitution must be defined on the whole alphabet");
        }
        let sub = Substitution { rules, seed };
        let fp = sub.fixed_point(reach)?;
        Ok(SubshiftHull {
            group: LatticeGroup {
                dim: 1,
                norm: NormKind::Linf,
            },
            alphabet,
            generator: Generator::Substitution(sub),
            point: Arc::new(Configuration::FixedPoint(fp)),
        })
    }

    pub fn dim(&self) -> usize {
        self.group.dim
    }

    /// The generating configuration at offset zero.
    pub fn generator_point(&self) -> SubshiftPoint {
        SubshiftPoint {
            config: self.point.clone(),
            offset: Site::zero(self.dim()),
        }
    }

    pub fn periodic_pattern(&self) -> Option<&PeriodicPattern> {
        match &self.generator {
            Generator::Periodic(p) => Some(p),
            Generator::Substitution(_) => None,
        }
    }

    /// All points of a periodic subshift (one per offset in the period box).
    pub fn points(&self) -> Option<Vec<SubshiftPoint>> {
        let pat = self.periodic_pattern()?;
        Some(
            pat.box_sites()
                .into_iter()
                .map(|o| SubshiftPoint {
                    config: self.point.clone(),
                    offset: o,
                })
                .collect(),
        )
    }

    pub fn check_point(&self, p: &SubshiftPoint) -> Result<()> {
        if p.offset.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.offset.dim(),
            });
        }
        let s = p.config.symbol(&p.offset).ok_or_else(|| {
            Error::WindowTooSmall(format!("offset {:?} is beyond the generated patch", p.offset.0))
        })?;
        if !self.alphabet.contains(&s) {
            return Err(Error::SymbolOutOfAlphabet(s));
        }
        Ok(())
    }

    /// Patterns of hull points on the open ball `B(n)`, listed in ball order.
    pub fn patterns(&self, n: i64) -> HashSet<Vec<i64>> {
        let ball = self.group.closed_ball(n - 1);
        match &self.generator {
            Generator::Periodic(pat) => pat
                .box_sites()
                .iter()
                .map(|o| ball.iter().map(|g| pat.at(&(g + o).0)).collect())
                .collect(),
            Generator::Substitution(sub) => {
                if n <= 0 {
                    let mut s = HashSet::new();
                    s.insert(Vec::new());
                    s
                } else {
                    sub.language((2 * n - 1) as usize)
                }
            }
        }
    }

    /// First disagreement of `x` and `y`, scanning shells up to `limit`.
    pub fn agreement(&self, x: &SubshiftPoint, y: &SubshiftPoint, limit: i64) -> Agreement {
        if Arc::ptr_eq(&x.config, &y.config) && x.offset == y.offset {
            return Agreement::Equal;
        }
        if let (Some(px), Some(py)) = (x.config.periods(), y.config.periods()) {
            // both periodic: equal iff equal on one common period box
            let common: Vec<i64> = px.iter().zip(py).map(|(a, b)| a.lcm(b)).collect();
            let boxed = PeriodicPattern {
                periods: common.clone(),
                pattern: vec![0; common.iter().product::<i64>() as usize],
            };
            if boxed.box_sites().iter().all(|s| x.at(s) == y.at(s)) {
                return Agreement::Equal;
            }
            let mut n = 0;
            loop {
                if self.group.sphere(n).iter().any(|s| x.at(s) != y.at(s)) {
                    return Agreement::FirstDifference(n);
                }
                n += 1;
            }
        }
        let cap = limit
            .min(x.config.reach().saturating_sub(x.offset.linf() + 1))
            .min(y.config.reach().saturating_sub(y.offset.linf() + 1));
        for n in 0..=cap {
            if self.group.sphere(n).iter().any(|s| x.at(s) != y.at(s)) {
                return Agreement::FirstDifference(n);
            }
        }
        Agreement::Through(cap)
    }

    /// Distance from the agreement radius; an upper bound when the scan
    /// stopped without finding a difference.
    pub fn metric_with_limit<T: Real>(
        &self,
        x: &SubshiftPoint,
        y: &SubshiftPoint,
        limit: i64,
    ) -> (T, Agreement) {
        let a = self.agreement(x, y, limit);
        let v = match a {
            Agreement::Equal => T::zero(),
            // x, y agree on B(n) = {|g| <= n-1} and on no larger ball
            Agreement::FirstDifference(n) => T::one() / T::from_int(n + 1),
            Agreement::Through(n) => T::one() / T::from_int(n + 2),
        };
        (v, a)
    }
}

impl<T: Real> Hull<T> for SubshiftHull {
    type Point = SubshiftPoint;
    type Set = SubshiftHull;

    fn group(&self) -> LatticeGroup {
        self.group
    }

    fn act(&self, g: &Site, p: &SubshiftPoint) -> Result<SubshiftPoint> {
        self.group.check(g)?;
        self.check_point(p)?;
        let moved = SubshiftPoint {
            config: p.config.clone(),
            offset: &p.offset - g,
        };
        self.check_point(&moved)?;
        Ok(moved)
    }

    fn metric(&self, p: &SubshiftPoint, q: &SubshiftPoint) -> T {
        self.metric_with_limit(p, q, 4 * DEFAULT_WINDOW).0
    }

    fn is_periodic(&self, p: &SubshiftPoint, period: &[i64]) -> bool {
        match p.config.periods() {
            Some(own) => {
                own.len() == period.len()
                    && own.iter().zip(period).all(|(o, q)| *q > 0 && q % o == 0)
            }
            None => false,
        }
    }

    fn random_point<R: Rng>(&self, rng: &mut R) -> SubshiftPoint {
        let span = match &self.generator {
            Generator::Periodic(p) => p.periods.clone(),
            Generator::Substitution(_) => vec![(self.point.reach() / 4).clamp(1, 64)],
        };
        let offset = Site(span.iter().map(|s| rng.gen_range(0..*s)).collect());
        SubshiftPoint {
            config: self.point.clone(),
            offset,
        }
    }

    /// Overwrites a few random sites at norm at least `R`, where `R` grows
    /// with `closeness`; occasionally returns an unrelated hull point.
    fn random_neighbor<R: Rng>(&self, p: &SubshiftPoint, closeness: f64, rng: &mut R)
        -> SubshiftPoint {
        if rng.gen_bool(0.1) {
            return <Self as Hull<T>>::random_point(self, rng);
        }
        let radius = (closeness.clamp(0.0, 1.0) * 12.0).round() as i64;
        let symbols: Vec<i64> = self.alphabet.iter().copied().collect();
        let mut patches = BTreeMap::new();
        for _ in 0..rng.gen_range(1..4) {
            let n = radius + rng.gen_range(0..3);
            let shell = self.group.sphere(n);
            let s = &shell[rng.gen_range(0..shell.len())];
            patches.insert(s + &p.offset, symbols[rng.gen_range(0..symbols.len())]);
        }
        SubshiftPoint {
            config: Arc::new(Configuration::Patched {
                base: p.config.clone(),
                patches,
            }),
            offset: p.offset.clone(),
        }
    }

    /// Periodic points are unitarily related through the shift, so the
    /// generator alone represents the whole (finite) orbit.
    fn representatives(&self, set: &SubshiftHull, _mesh: T)
        -> Result<Representatives<SubshiftPoint, T>> {
        let pat = set
            .periodic_pattern()
            .ok_or_else(|| Error::InvalidArgument("subshift is not periodic".into()))?;
        Ok(Representatives {
            points: vec![(set.generator_point(), pat.periods.clone())],
            covering: T::zero(),
        })
    }
}

// ---------------------------------------------------------------------------
// Hausdorff distance between invariant sets

/// An invariant closed subset of a hull.
#[derive(Clone, Debug)]
pub enum HullSet {
    Slice(TorusSlice),
    Subshift(SubshiftHull),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullPair<T> {
    pub dh: T,
    /// `sup_{x in X} d(x, Y)` and `sup_{y in Y} d(y, X)`.
    pub directed: (T, T),
    /// False when the value is only an upper bound.
    pub certified: bool,
    pub window: i64,
}

/// Largest `n <= window` with `P_X(n) ⊆ P_Y(n)`.
fn inclusion_radius(x: &SubshiftHull, y: &SubshiftHull, window: i64) -> i64 {
    let holds = |n: i64| {
        let px = x.patterns(n);
        let py = y.patterns(n);
        px.is_subset(&py)
    };
    // inclusion at n implies inclusion at every smaller radius
    let (mut lo, mut hi) = (0, window);
    if holds(hi) {
        return hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Hausdorff distance between two invariant sets of the same hull type.
///
/// For subshifts the directed distance from `X` to `Y` is `1/(n+1)` with
/// `n` the largest radius whose centred patterns of `X` all occur in `Y`.
pub fn hull_hausdorff<T: Real>(x: &HullSet, y: &HullSet, window: i64) -> Result<HullPair<T>> {
    match (x, y) {
        (HullSet::Slice(a), HullSet::Slice(b)) => {
            if a.alpha.len() != b.alpha.len() {
                return Err(Error::DimensionMismatch {
                    expected: a.alpha.len(),
                    got: b.alpha.len(),
                });
            }
            let exact = a
                .alpha
                .iter()
                .zip(&b.alpha)
                .map(|(p, q)| (p - q).abs())
                .max()
                .unwrap_or_else(|| Ratio::from_integer(0));
            let v = T::from_f64(exact.to_f64().unwrap()).unwrap();
            Ok(HullPair {
                dh: v,
                directed: (v, v),
                certified: true,
                window,
            })
        }
        (HullSet::Subshift(a), HullSet::Subshift(b)) => {
            if window < 1 {
                return invalid("window must be at least 1");
            }
            if a.group != b.group {
                return Err(Error::DimensionMismatch {
                    expected: a.dim(),
                    got: b.dim(),
                });
            }
            if a == b {
                return Ok(HullPair {
                    dh: T::zero(),
                    directed: (T::zero(), T::zero()),
                    certified: true,
                    window,
                });
            }
            let nxy = inclusion_radius(a, b, window);
            let nyx = inclusion_radius(b, a, window);
            let dist = |n: i64| T::one() / T::from_int(n + 1);
            let directed = (dist(nxy), dist(nyx));
            Ok(HullPair {
                dh: directed.0.max(directed.1),
                directed,
                certified: nxy.min(nyx) < window,
                window,
            })
        }
        _ => Err(Error::MixedHulls),
    }
}

/// Worst value of `d(gx, gy) - (m|g| + 1) d(x, y)` over random samples;
/// non-positive certifies the Lipschitz bound on the sample.
#[derive(Clone, Copy, Debug)]
pub struct LipschitzSample {
    pub pairs: usize,
    pub max_shift: i64,
    pub seed: u64,
}

pub fn action_lipschitz_defect<T: Real, H: Hull<T>>(hull: &H, m: T, spec: LipschitzSample) -> Result<T> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let group = hull.group();
    let shifts = group.closed_ball(spec.max_shift);
    let mut worst = T::neg_infinity();
    for _ in 0..spec.pairs {
        let x = hull.random_point(&mut rng);
        let y = hull.random_neighbor(&x, rng.gen::<f64>(), &mut rng);
        let dxy = hull.metric(&x, &y);
        let g = &shifts[rng.gen_range(0..shifts.len())];
        let gx = hull.act(g, &x)?;
        let gy = hull.act(g, &y)?;
        let lhs = hull.metric(&gx, &gy);
        let rhs = (m * T::from_int(group.norm(g)) + T::one()) * dxy;
        worst = worst.max(lhs - rhs);
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Fibonacci approximants

/// Substitution word `a -> ab, b -> a` iterated `level - 1` times from `a`,
/// with `a = 0`, `b = 1`.
pub fn fibonacci_word(level: usize) -> Result<Vec<i64>> {
    if level < 1 {
        return invalid("Fibonacci level must be at least 1");
    }
    Ok(fibonacci_substitution().iterate(&[0], level - 1))
}

pub fn fibonacci_substitution() -> Substitution {
    let mut rules = BTreeMap::new();
    rules.insert(0, vec![0, 1]);
    rules.insert(1, vec![0]);
    Substitution { rules, seed: 0 }
}

/// Periodic subshift generated by the level-`k` Fibonacci word.
pub fn fibonacci_subshift(level: usize) -> Result<SubshiftHull> {
    let w = fibonacci_word(level)?;
    let pat = PeriodicPattern::new(vec![w.len() as i64], w)?;
    SubshiftHull::periodic(LatticeGroup::with_linf(1)?, [0, 1], pat)
}

/// The aperiodic Fibonacci hull itself.
pub fn fibonacci_hull(reach: usize) -> Result<SubshiftHull> {
    let s = fibonacci_substitution();
    SubshiftHull::substitution([0, 1], s.rules, s.seed, reach)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zeros_with_one() -> SubshiftPoint {
        let base = Arc::new(Configuration::Periodic(
            PeriodicPattern::new(vec![1], vec![0]).unwrap(),
        ));
        let mut patches = BTreeMap::new();
        patches.insert(Site(vec![0]), 1);
        SubshiftPoint {
            config: Arc::new(Configuration::Patched { base, patches }),
            offset: Site(vec![0]),
        }
    }

    fn zero_hull() -> SubshiftHull {
        SubshiftHull::periodic(
            LatticeGroup::with_linf(1).unwrap(),
            [0, 1],
            PeriodicPattern::new(vec![1], vec![0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn torus_action_examples() {
        let h = TorusHull::new(1).unwrap();
        let p = TorusPoint::single(0.3, 0.1);
        let q: TorusPoint<f64> = h.act(&Site(vec![1]), &p).unwrap();
        assert!((q.theta[0] - 0.8).abs() < 1e-15);
        assert_eq!(q.alpha, p.alpha);
        let e: TorusPoint<f64> = h.act(&Site(vec![0]), &p).unwrap();
        assert_eq!(e, p);
        assert!(Hull::<f64>::act(&h, &Site(vec![1, 0]), &p).is_err());
    }

    #[test]
    fn torus_metric_examples() {
        let h = TorusHull::new(1).unwrap();
        let a = TorusPoint::single(0.0, 0.9);
        let b = TorusPoint::single(0.0, 0.1);
        let d: f64 = h.metric(&a, &b);
        assert!((d - 0.2).abs() < 1e-15);
        assert_eq!(Hull::<f64>::metric(&h, &a, &a), 0.0);
    }

    #[test]
    fn long_orbit_in_one_step() {
        let h = TorusHull::new(1).unwrap();
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let p = TorusPoint::single(alpha, 0.25);
        let far: TorusPoint<f64> = h.act(&Site(vec![1_000_000]), &p).unwrap();
        let expect = wrap_unit(0.25 - 1e6 * alpha);
        assert!(torus_dist(far.theta[0], expect) < 1e-9);
        assert!((0.0..1.0).contains(&far.theta[0]));
    }

    #[test]
    fn shift_action_examples() {
        let hull = zero_hull();
        let x = zeros_with_one();
        let same = Hull::<f64>::act(&hull, &Site(vec![0]), &x).unwrap();
        assert_eq!(same.at(&Site(vec![0])), Some(1));
        let moved = Hull::<f64>::act(&hull, &Site(vec![2]), &x).unwrap();
        assert_eq!(moved.at(&Site(vec![2])), Some(1));
        assert_eq!(moved.at(&Site(vec![0])), Some(0));
    }

    #[test]
    fn out_of_alphabet_rejected() {
        let hull = SubshiftHull::periodic(
            LatticeGroup::with_linf(1).unwrap(),
            [0],
            PeriodicPattern::new(vec![1], vec![0]).unwrap(),
        )
        .unwrap();
        let x = zeros_with_one();
        assert_eq!(
            Hull::<f64>::act(&hull, &Site(vec![1]), &x).unwrap_err(),
            Error::SymbolOutOfAlphabet(1)
        );
        assert!(SubshiftHull::periodic(
            LatticeGroup::with_linf(1).unwrap(),
            [0],
            PeriodicPattern::new(vec![2], vec![0, 3]).unwrap()
        )
        .is_err());
    }

    #[test]
    fn subshift_metric_examples() {
        let hull = zero_hull();
        let zero = hull.generator_point();
        // differs first at |n| = 2
        let base = zero.config.clone();
        let mut patches = BTreeMap::new();
        patches.insert(Site(vec![-2]), 1);
        let y = SubshiftPoint {
            config: Arc::new(Configuration::Patched { base, patches }),
            offset: Site(vec![0]),
        };
        let d: f64 = hull.metric(&zero, &y);
        // brute force over radii: agreement on B(r) iff r <= 2
        let brute = (0..=400)
            .map(|k| k as f64 / 100.0)
            .filter(|&r| hull.group.ball(r).iter().all(|s| zero.at(s) == y.at(s)))
            .map(|r| 1.0 / (r + 1.0))
            .fold(f64::INFINITY, f64::min);
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        assert!((brute - d).abs() < 1e-15);
        assert_eq!(Hull::<f64>::metric(&hull, &zero, &zero.clone()), 0.0);
        let one = zeros_with_one();
        assert_eq!(Hull::<f64>::metric(&hull, &zero, &one), 1.0);
    }

    #[test]
    fn patched_points_flag_uncertified_agreement() {
        let hull = zero_hull();
        let zero = hull.generator_point();
        let mut patches = BTreeMap::new();
        patches.insert(Site(vec![500]), 1);
        let y = SubshiftPoint {
            config: Arc::new(Configuration::Patched {
                base: zero.config.clone(),
                patches,
            }),
            offset: Site(vec![0]),
        };
        let (v, a) = hull.metric_with_limit::<f64>(&zero, &y, 100);
        assert_eq!(a, Agreement::Through(100));
        assert!((v - 1.0 / 102.0).abs() < 1e-15);
        let (v, a) = hull.metric_with_limit::<f64>(&zero, &y, 1000);
        assert_eq!(a, Agreement::FirstDifference(500));
        assert!((v - 1.0 / 501.0).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_defect_torus_and_shift() {
        let spec = LipschitzSample {
            pairs: 2000,
            max_shift: 50,
            seed: 7,
        };
        let torus = TorusHull::new(2).unwrap();
        let d = action_lipschitz_defect::<f64, _>(&torus, 1.0, spec).unwrap();
        assert!(d <= 1e-12, "torus defect {d}");
        let fib = fibonacci_subshift(9).unwrap();
        let d = action_lipschitz_defect::<f64, _>(&fib, 1.0, spec).unwrap();
        assert!(d <= 0.0, "shift defect {d}");
        let spec0 = LipschitzSample {
            max_shift: 0,
            ..spec
        };
        let d = action_lipschitz_defect::<f64, _>(&fib, 1.0, spec0).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn group_action_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let torus = TorusHull::new(1).unwrap();
        let fib = fibonacci_subshift(7).unwrap();
        let z2 = SubshiftHull::periodic(
            LatticeGroup::with_linf(2).unwrap(),
            [0, 1, 2],
            PeriodicPattern::new(vec![2, 3], vec![0, 1, 2, 2, 1, 0]).unwrap(),
        )
        .unwrap();
        for _ in 0..1000 {
            let g = Site(vec![rng.gen_range(-1000..1000)]);
            let h = Site(vec![rng.gen_range(-1000..1000)]);
            let p: TorusPoint<f64> = torus.random_point(&mut rng);
            let a = torus.act(&g, &torus.act(&h, &p).unwrap()).unwrap();
            let b = torus.act(&(&g + &h), &p).unwrap();
            assert!(Hull::<f64>::metric(&torus, &a, &b) < 1e-12);

            let x = Hull::<f64>::random_point(&fib, &mut rng);
            let a = Hull::<f64>::act(&fib, &g, &Hull::<f64>::act(&fib, &h, &x).unwrap()).unwrap();
            let b = Hull::<f64>::act(&fib, &(&g + &h), &x).unwrap();
            assert_eq!(fib.agreement(&a, &b, 10), Agreement::Equal);

            let g2 = Site(vec![rng.gen_range(-50..50), rng.gen_range(-50..50)]);
            let h2 = Site(vec![rng.gen_range(-50..50), rng.gen_range(-50..50)]);
            let x = Hull::<f64>::random_point(&z2, &mut rng);
            let a = Hull::<f64>::act(&z2, &g2, &Hull::<f64>::act(&z2, &h2, &x).unwrap()).unwrap();
            let b = Hull::<f64>::act(&z2, &(&g2 + &h2), &x).unwrap();
            assert_eq!(z2.agreement(&a, &b, 10), Agreement::Equal);
        }
    }

    #[test]
    fn fibonacci_words() {
        assert_eq!(fibonacci_word(1).unwrap(), vec![0]);
        assert_eq!(fibonacci_word(4).unwrap(), vec![0, 1, 0, 0, 1]);
        assert!(fibonacci_word(0).is_err());
        // independent recursion F(1) = 1, F(2) = 2
        let mut fib = vec![0usize, 1, 2];
        for k in 3..=20 {
            fib.push(fib[k - 1] + fib[k - 2]);
        }
        for k in 1..=20 {
            assert_eq!(fibonacci_word(k).unwrap().len(), fib[k], "level {k}");
        }
        let h = fibonacci_subshift(1).unwrap();
        assert_eq!(h.periodic_pattern().unwrap().periods, vec![1]);
    }

    #[test]
    fn slice_distance_is_frequency_gap() {
        let a = HullSet::Slice(TorusSlice::single(Ratio::new(5, 8)));
        let b = HullSet::Slice(TorusSlice::single(Ratio::new(8, 13)));
        let p: HullPair<f64> = hull_hausdorff(&a, &b, 1).unwrap();
        assert_eq!(p.dh, 1.0 / 104.0);
        assert!(p.certified);
        let mixed = HullSet::Subshift(zero_hull());
        assert_eq!(
            hull_hausdorff::<f64>(&a, &mixed, 10).unwrap_err(),
            Error::MixedHulls
        );
    }

    #[test]
    fn zeros_versus_period_two() {
        let zeros = zero_hull();
        let alt = SubshiftHull::periodic(
            LatticeGroup::with_linf(1).unwrap(),
            [0, 1],
            PeriodicPattern::new(vec![2], vec![0, 1]).unwrap(),
        )
        .unwrap();
        let p: HullPair<f64> =
            hull_hausdorff(&HullSet::Subshift(zeros.clone()), &HullSet::Subshift(alt.clone()), 50)
                .unwrap();
        // the zero point sits within 1/2 of Y, but the point of Y with a 1 at
        // the origin is at distance 1 from the zero point
        assert_eq!(p.directed, (0.5, 1.0));
        assert_eq!(p.dh, 1.0);
        assert_eq!(p.dh, brute_hausdorff(&zeros, &alt));
    }

    fn brute_hausdorff(x: &SubshiftHull, y: &SubshiftHull) -> f64 {
        let px = x.points().unwrap();
        let py = y.points().unwrap();
        let directed = |a: &[SubshiftPoint], b: &[SubshiftPoint], h: &SubshiftHull| {
            a.iter()
                .map(|p| {
                    b.iter()
                        .map(|q| Hull::<f64>::metric(h, p, q))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        directed(&px, &py, x).max(directed(&py, &px, x))
    }

    #[test]
    fn fibonacci_hausdorff_matches_pointwise_oracle() {
        for k in 1..=6 {
            for l in 1..=6 {
                let a = fibonacci_subshift(k).unwrap();
                let b = fibonacci_subshift(l).unwrap();
                let p: HullPair<f64> =
                    hull_hausdorff(&HullSet::Subshift(a.clone()), &HullSet::Subshift(b.clone()), 100)
                        .unwrap();
                assert_eq!(p.dh, brute_hausdorff(&a, &b), "levels {k} {l}");
                assert!(p.certified || k == l);
            }
        }
    }

    #[test]
    fn same_generator_is_zero() {
        let a = HullSet::Subshift(fibonacci_subshift(5).unwrap());
        let p: HullPair<f64> = hull_hausdorff(&a, &a.clone(), 256).unwrap();
        assert_eq!(p.dh, 0.0);
    }

    #[test]
    fn triangle_inequality_on_fibonacci_triples() {
        for k in 2..=8 {
            let h: Vec<HullSet> = (k..k + 3)
                .map(|l| HullSet::Subshift(fibonacci_subshift(l).unwrap()))
                .collect();
            let d = |i: usize, j: usize| hull_hausdorff::<f64>(&h[i], &h[j], 100).unwrap().dh;
            assert_eq!(d(0, 1), d(1, 0));
            assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-15);
            assert!(d(0, 1) <= d(0, 2) + d(2, 1) + 1e-15);
        }
    }

    #[test]
    fn approximants_converge_to_the_fibonacci_hull() {
        let limit = HullSet::Subshift(fibonacci_hull(4096).unwrap());
        let mut prev = f64::INFINITY;
        for k in 3..=10 {
            let a = HullSet::Subshift(fibonacci_subshift(k).unwrap());
            let p: HullPair<f64> = hull_hausdorff(&a, &limit, 200).unwrap();
            assert!(p.dh <= prev);
            prev = p.dh;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn substitution_fixed_point_is_legal() {
        let hull = fibonacci_hull(1000).unwrap();
        let x = hull.generator_point();
        let words = fibonacci_substitution().language(7);
        for start in -50..50 {
            let w: Vec<i64> = (start..start + 7)
                .map(|n| x.at(&Site(vec![n])).unwrap())
                .collect();
            assert!(words.contains(&w));
        }
        // Fibonacci factor complexity is n + 1
        for n in 1..20 {
            assert_eq!(fibonacci_substitution().language(n).len(), n + 1);
        }
    }

    #[test]
    fn representatives_cover_the_slice() {
        let torus = TorusHull::new(1).unwrap();
        let reps: Representatives<TorusPoint<f64>, f64> = torus
            .representatives(&TorusSlice::single(Ratio::new(2, 5)), 0.01)
            .unwrap();
        assert_eq!(reps.points.len(), 20);
        assert!(reps.covering <= 0.01);
        assert!(reps.points.iter().all(|(p, q)| q == &vec![5] && torus.is_periodic(p, q)));
    }

    #[test]
    fn acting_past_the_generated_patch_is_an_error() {
        let hull = fibonacci_hull(32).unwrap();
        let x = hull.generator_point();
        let near: Result<SubshiftPoint> = Hull::<f64>::act(&hull, &Site(vec![5]), &x);
        assert!(near.is_ok());
        let far: Result<SubshiftPoint> = Hull::<f64>::act(&hull, &Site(vec![10_000]), &x);
        assert!(matches!(far, Err(Error::WindowTooSmall(_))));
    }
}
