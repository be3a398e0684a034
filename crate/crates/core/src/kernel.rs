//! Finite-range kernels `k(x, h)` over a hull, their sup norms and
//! regularity moduli.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Hull, SubshiftHull, SubshiftPoint, TorusHull, TorusPoint};
use crate::error::{invalid, Error, Result};
use crate::group::{LatticeGroup, NormKind, Site};
use crate::scalar::Real;

/// Declared regularity of `x -> k(x, h)`, one modulus per range element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Regularity<T> {
    /// `|k(x,h) - k(y,h)| <= M(h) d(x,y)`; `M = 0` off the range.
    Lipschitz(BTreeMap<Site, T>),
    /// `d(x,y) <= 1/M(h)` forces `k(x,h) = k(y,h)`; `M = 1` off the range.
    LocallyConstant(BTreeMap<Site, T>),
}

/// `sum_h M(h)` for Lipschitz kernels, `max_h M(h)` for locally constant ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModulusNorm<T> {
    L1(T),
    Sup(T),
}

impl<T: Real> ModulusNorm<T> {
    pub fn value(&self) -> T {
        match self {
            ModulusNorm::L1(v) | ModulusNorm::Sup(v) => *v,
        }
    }
}

impl<T: Real> Regularity<T> {
    pub fn modulus(&self, h: &Site) -> T {
        match self {
            Regularity::Lipschitz(m) => m.get(h).copied().unwrap_or_else(T::zero),
            Regularity::LocallyConstant(m) => m.get(h).copied().unwrap_or_else(T::one),
        }
    }

    pub fn summary(&self) -> ModulusNorm<T> {
        match self {
            Regularity::Lipschitz(m) => ModulusNorm::L1(m.values().copied().sum()),
            Regularity::LocallyConstant(m) => {
                ModulusNorm::Sup(m.values().copied().fold(T::one(), T::max))
            }
        }
    }
}

/// A kernel `Z x Z^d -> C` with finite range.
pub trait Kernel<T: Real>: Send + Sync {
    type Hull: Hull<T>;

    /// Finite set containing every `h` with `k(., h) != 0`, sorted.
    fn range(&self) -> &[Site];

    fn entry(&self, x: &PointOf<T, Self>, h: &Site) -> Complex<T>;

    fn regularity(&self) -> &Regularity<T>;

    /// Certified `sup_x |k(x, h)|`, when the model knows it.
    fn analytic_sup(&self, h: &Site) -> Option<T>;

    /// Largest `|h|` over the range in the group norm.
    fn range_radius(&self, group: &LatticeGroup) -> i64 {
        self.range().iter().map(|h| group.norm(h)).max().unwrap_or(0)
    }
}

pub type PointOf<T, K> = <<K as Kernel<T>>::Hull as Hull<T>>::Point;

/// `sup_x sum_h |k|` and `sup_x sum_h |k| |h|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelNorms<T> {
    pub sup_sum: T,
    pub moment: T,
    pub method: NormMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Analytic,
    /// Orbit-sampled maxima; lower bounds on the true sups.
    Sampled { samples: usize },
}

impl<T: Real> KernelNorms<T> {
    pub fn certified(&self) -> bool {
        self.method == NormMethod::Analytic
    }
}

/// How per-`h` sups are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormRequest {
    /// Analytic sups, sampling only where a model has none.
    Analytic { fallback_samples: usize, seed: u64 },
    /// Sample every sup along an orbit, ignoring analytic values.
    Sampled { samples: usize, seed: u64 },
}

impl Default for NormRequest {
    fn default() -> Self {
        NormRequest::Analytic {
            fallback_samples: 4096,
            seed: 0,
        }
    }
}

fn orbit_sample<T: Real, H: Hull<T>>(hull: &H, samples: usize, seed: u64) -> Result<Vec<H::Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = hull.random_point(&mut rng);
    hull.group()
        .sites_by_norm(samples)
        .iter()
        .map(|g| hull.act(g, &start))
        .collect()
}

pub fn norms<T: Real, K: Kernel<T>>(kernel: &K, hull: &K::Hull, request: NormRequest) -> Result<KernelNorms<T>> {
    let group = hull.group();
    let (samples, seed, force) = match request {
        NormRequest::Analytic {
            fallback_samples,
            seed,
        } => (fallback_samples, seed, false),
        NormRequest::Sampled { samples, seed } => (samples, seed, true),
    };
    let mut sample: Option<Vec<PointOf<T, K>>> = None;
    let mut method = NormMethod::Analytic;
    let (mut sup_sum, mut moment) = (T::zero(), T::zero());
    for h in kernel.range() {
        let s = match (force, kernel.analytic_sup(h)) {
            (false, Some(v)) => v,
            _ => {
                if sample.is_none() {
                    sample = Some(orbit_sample(hull, samples.max(1), seed)?);
                }
                method = NormMethod::Sampled { samples };
                sample
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|x| kernel.entry(x, h).norm())
                    .fold(T::zero(), T::max)
            }
        };
        sup_sum = sup_sum + s;
        moment = moment + s * T::from_int(group.norm(h));
    }
    Ok(KernelNorms {
        sup_sum,
        moment,
        method,
    })
}

pub fn moduli_summary<T: Real, K: Kernel<T>>(kernel: &K) -> ModulusNorm<T> {
    kernel.regularity().summary()
}

/// Maximum of `|a_x(g,h) - conj(a_x(h,g))|` over sampled `x` and
/// `g, h` in the closed ball of radius `radius`, with `a_x(g,h) = k((-g)x, h-g)`.
pub fn selfadjointness_defect<T: Real, K: Kernel<T>>(
    kernel: &K,
    hull: &K::Hull,
    samples: usize,
    radius: i64,
    seed: u64,
) -> Result<T> {
    let group = hull.group();
    let ball = group.closed_ball(radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for _ in 0..samples {
        let x = hull.random_point(&mut rng);
        for g in &ball {
            let gx = hull.act(&-g, &x)?;
            for delta in kernel.range() {
                let h = g + delta;
                if group.norm(&h) > radius {
                    continue;
                }
                let fwd = kernel.entry(&gx, delta);
                let hx = hull.act(&-&h, &x)?;
                let back = kernel.entry(&hx, &-delta);
                worst = worst.max((fwd - back.conj()).norm());
            }
        }
    }
    Ok(worst)
}

/// Number of sampled `(x, y, h)` triples violating the declared regularity.
pub fn regularity_violations<T: Real, K: Kernel<T>>(
    kernel: &K,
    hull: &K::Hull,
    pairs: usize,
    seed: u64,
) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    let slack = T::epsilon() * T::lit(64.0);
    for _ in 0..pairs {
        let x = hull.random_point(&mut rng);
        let y = hull.random_neighbor(&x, rng.gen::<f64>(), &mut rng);
        let d = hull.metric(&x, &y);
        for h in kernel.range() {
            let gap = (kernel.entry(&x, h) - kernel.entry(&y, h)).norm();
            let ok = match kernel.regularity() {
                Regularity::Lipschitz(_) => {
                    gap <= kernel.regularity().modulus(h) * d + slack * (T::one() + gap)
                }
                Regularity::LocallyConstant(_) => {
                    d > T::one() / kernel.regularity().modulus(h) || gap == T::zero()
                }
            };
            if !ok {
                bad += 1;
            }
        }
    }
    bad
}

fn sorted_range<C>(hops: &BTreeMap<Site, C>, dim: usize) -> Vec<Site> {
    let mut r: Vec<Site> = hops.keys().cloned().collect();
    let zero = Site::zero(dim);
    if !hops.contains_key(&zero) {
        r.push(zero);
    }
    r.sort();
    r
}

// ---------------------------------------------------------------------------
// Torus kernels

/// `a cos(2 pi k.theta) + b sin(2 pi k.theta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm<T> {
    pub freq: Vec<i64>,
    pub cos: T,
    pub sin: T,
}

/// Trigonometric polynomial potential on `T^nu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPotential<T> {
    pub constant: T,
    pub terms: Vec<TrigTerm<T>>,
}

impl<T: Real> TrigPotential<T> {
    pub fn constant(c: T) -> Self {
        TrigPotential {
            constant: c,
            terms: Vec::new(),
        }
    }

    /// `2 lambda cos(2 pi theta)`.
    pub fn cosine(lambda: T) -> Self {
        TrigPotential {
            constant: T::zero(),
            terms: vec![TrigTerm {
                freq: vec![1],
                cos: T::lit(2.0) * lambda,
                sin: T::zero(),
            }],
        }
    }

    pub fn eval(&self, theta: &[T]) -> T {
        let tau = T::TAU();
        self.terms.iter().fold(self.constant, |acc, t| {
            let phase = tau
                * t.freq
                    .iter()
                    .zip(theta)
                    .map(|(k, th)| T::from_int(*k) * *th)
                    .sum::<T>();
            acc + t.cos * phase.cos() + t.sin * phase.sin()
        })
    }

    pub fn sup_bound(&self) -> T {
        self.terms
            .iter()
            .map(|t| t.cos.hypot(t.sin))
            .fold(self.constant.abs(), |a, b| a + b)
    }

    /// Lipschitz constant for the sup metric on the torus.
    pub fn lipschitz(&self) -> T {
        self.terms
            .iter()
            .map(|t| {
                let l1: i64 = t.freq.iter().map(|k| k.abs()).sum();
                T::TAU() * T::from_int(l1) * t.cos.hypot(t.sin)
            })
            .sum()
    }
}

/// Constant hoppings plus a trigonometric on-site potential, over a
/// frequency torus.
#[derive(Clone, Debug, PartialEq)]
pub struct TightBinding<T> {
    pub nu: usize,
    hoppings: BTreeMap<Site, Complex<T>>,
    potential: TrigPotential<T>,
    range: Vec<Site>,
    regularity: Regularity<T>,
}

pub type AmoKernel<T> = TightBinding<T>;

impl<T: Real> TightBinding<T> {
    pub fn new(nu: usize, hoppings: BTreeMap<Site, Complex<T>>, potential: TrigPotential<T>) -> Result<Self> {
        if nu == 0 {
            return invalid("torus needs at least one frequency");
        }
        if let Some(h) = hoppings.keys().find(|h| h.dim() != 1) {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: h.dim(),
            });
        }
        if let Some(t) = potential.terms.iter().find(|t| t.freq.len() != nu) {
            return Err(Error::DimensionMismatch {
                expected: nu,
                got: t.freq.len(),
            });
        }
        let range = sorted_range(&hoppings, 1);
        let mut m = BTreeMap::new();
        for h in &range {
            let v = if h.is_zero() {
                potential.lipschitz()
            } else {
                T::zero()
            };
            m.insert(h.clone(), v);
        }
        Ok(TightBinding {
            nu,
            hoppings,
            potential,
            range,
            regularity: Regularity::Lipschitz(m),
        })
    }

    /// Almost Mathieu kernel: unit hopping to both neighbours and
    /// `2 lambda cos(2 pi theta)` on site.
    pub fn amo(lambda: T) -> Self {
        let mut hops = BTreeMap::new();
        hops.insert(Site(vec![-1]), Complex::new(T::one(), T::zero()));
        hops.insert(Site(vec![1]), Complex::new(T::one(), T::zero()));
        Self::new(1, hops, TrigPotential::cosine(lambda)).expect("valid almost Mathieu kernel")
    }

    pub fn hoppings(&self) -> &BTreeMap<Site, Complex<T>> {
        &self.hoppings
    }

    pub fn potential(&self) -> &TrigPotential<T> {
        &self.potential
    }

    pub fn hull(&self) -> TorusHull {
        TorusHull { nu: self.nu }
    }
}

impl<T: Real> Kernel<T> for TightBinding<T> {
    type Hull = TorusHull;

    fn range(&self) -> &[Site] {
        &self.range
    }

    fn entry(&self, x: &TorusPoint<T>, h: &Site) -> Complex<T> {
        let hop = self.hoppings.get(h).copied().unwrap_or_else(Complex::default);
        if h.is_zero() {
            hop + Complex::new(self.potential.eval(&x.theta), T::zero())
        } else {
            hop
        }
    }

    fn regularity(&self) -> &Regularity<T> {
        &self.regularity
    }

    fn analytic_sup(&self, h: &Site) -> Option<T> {
        let hop = self.hoppings.get(h).map(|c| c.norm()).unwrap_or_else(T::zero);
        if h.is_zero() {
            Some(hop + self.potential.sup_bound())
        } else if self.range.contains(h) {
            Some(hop)
        } else {
            Some(T::zero())
        }
    }
}

// ---------------------------------------------------------------------------
// Subshift kernels

/// On-site potential depending on finitely many symbols around the origin.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalRule<T> {
    /// `lambda * x(0)`.
    Linear { lambda: T },
    /// Lookup of the pattern on the closed ball of `radius`, in ball order.
    Table {
        radius: i64,
        values: HashMap<Vec<i64>, T>,
        default: T,
    },
}

impl<T: Real> LocalRule<T> {
    pub fn radius(&self) -> i64 {
        match self {
            LocalRule::Linear { .. } => 0,
            LocalRule::Table { radius, .. } => *radius,
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            LocalRule::Linear { lambda } => *lambda == T::zero(),
            LocalRule::Table { values, default, .. } => values.values().all(|v| v == default),
        }
    }
}

/// Constant hoppings plus a local-rule potential, over a subshift.
#[derive(Clone, Debug)]
pub struct LocalKernel<T> {
    group: LatticeGroup,
    hoppings: BTreeMap<Site, Complex<T>>,
    potential: LocalRule<T>,
    alphabet: Vec<i64>,
    window: Vec<Site>,
    range: Vec<Site>,
    regularity: Regularity<T>,
}

pub type FibonacciKernel<T> = LocalKernel<T>;

impl<T: Real> LocalKernel<T> {
    pub fn new(
        group: LatticeGroup,
        alphabet: impl IntoIterator<Item = i64>,
        hoppings: BTreeMap<Site, Complex<T>>,
        potential: LocalRule<T>,
    ) -> Result<Self> {
        if let Some(h) = hoppings.keys().find(|h| h.dim() != group.dim) {
            return Err(Error::DimensionMismatch {
                expected: group.dim,
                got: h.dim(),
            });
        }
        if potential.radius() < 0 {
            return invalid("local rule radius must be non-negative");
        }
        let mut alphabet: Vec<i64> = alphabet.into_iter().collect();
        alphabet.sort();
        alphabet.dedup();
        if alphabet.is_empty() {
            return invalid("alphabet must be non-empty");
        }
        let range = sorted_range(&hoppings, group.dim);
        // agreement on the closed ball of radius rho is forced once
        // d(x,y) <= 1/(rho + 2)
        let onsite = if potential.is_constant() {
            T::one()
        } else {
            T::from_int(potential.radius() + 2)
        };
        let m = range
            .iter()
            .map(|h| (h.clone(), if h.is_zero() { onsite } else { T::one() }))
            .collect();
        let window = group.closed_ball(potential.radius());
        Ok(LocalKernel {
            group,
            hoppings,
            potential,
            alphabet,
            window,
            range,
            regularity: Regularity::LocallyConstant(m),
        })
    }

    /// Fibonacci-type kernel: unit hopping to the `l1`-unit neighbours and
    /// `lambda * x(0)` on site.
    pub fn fibonacci(lambda: T, group: LatticeGroup, alphabet: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut hops = BTreeMap::new();
        for axis in 0..group.dim {
            for s in [-1, 1] {
                let mut c = vec![0; group.dim];
                c[axis] = s;
                hops.insert(Site(c), Complex::new(T::one(), T::zero()));
            }
        }
        Self::new(group, alphabet, hops, LocalRule::Linear { lambda })
    }

    pub fn group(&self) -> LatticeGroup {
        self.group
    }

    pub fn hoppings(&self) -> &BTreeMap<Site, Complex<T>> {
        &self.hoppings
    }

    pub fn potential_at(&self, x: &SubshiftPoint) -> T {
        match &self.potential {
            LocalRule::Linear { lambda } => *lambda * T::from_int(x.origin()),
            LocalRule::Table {
                values, default, ..
            } => {
                let pattern: Option<Vec<i64>> = self.window.iter().map(|s| x.at(s)).collect();
                pattern
                    .and_then(|p| values.get(&p).copied())
                    .unwrap_or(*default)
            }
        }
    }

    fn potential_sup(&self) -> T {
        match &self.potential {
            LocalRule::Linear { lambda } => {
                let amax = self.alphabet.iter().map(|a| a.abs()).max().unwrap_or(0);
                lambda.abs() * T::from_int(amax)
            }
            LocalRule::Table {
                values, default, ..
            } => values.values().fold(default.abs(), |a, v| a.max(v.abs())),
        }
    }
}

impl<T: Real> Kernel<T> for LocalKernel<T> {
    type Hull = SubshiftHull;

    fn range(&self) -> &[Site] {
        &self.range
    }

    fn entry(&self, x: &SubshiftPoint, h: &Site) -> Complex<T> {
        let hop = self.hoppings.get(h).copied().unwrap_or_else(Complex::default);
        if h.is_zero() {
            hop + Complex::new(self.potential_at(x), T::zero())
        } else {
            hop
        }
    }

    fn regularity(&self) -> &Regularity<T> {
        &self.regularity
    }

    fn analytic_sup(&self, h: &Site) -> Option<T> {
        let hop = self.hoppings.get(h).map(|c| c.norm()).unwrap_or_else(T::zero);
        Some(if h.is_zero() {
            hop + self.potential_sup()
        } else {
            hop
        })
    }
}

/// Kernel whose sups must be sampled; wraps another kernel and hides its
/// analytic values.
#[derive(Clone, Debug)]
pub struct Opaque<K>(pub K);

impl<T: Real, K: Kernel<T>> Kernel<T> for Opaque<K> {
    type Hull = K::Hull;

    fn range(&self) -> &[Site] {
        self.0.range()
    }

    fn entry(&self, x: &PointOf<T, Self>, h: &Site) -> Complex<T> {
        self.0.entry(x, h)
    }

    fn regularity(&self) -> &Regularity<T> {
        self.0.regularity()
    }

    fn analytic_sup(&self, _h: &Site) -> Option<T> {
        None
    }
}

/// The norm used for `|h|` weights, recorded alongside kernel norms.
pub fn weight_norm(group: &LatticeGroup) -> NormKind {
    group.norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{fibonacci_subshift, Configuration, PeriodicPattern};
    use std::sync::Arc;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn amo_entries() {
        let k = AmoKernel::<f64>::amo(1.0);
        let x = TorusPoint::single(0.3, 0.0);
        assert_eq!(k.entry(&x, &Site(vec![1])), c(1.0));
        assert_eq!(k.entry(&x, &Site(vec![-1])), c(1.0));
        assert!((k.entry(&x, &Site(vec![0])) - c(2.0)).norm() < 1e-15);
        assert_eq!(k.entry(&x, &Site(vec![2])), c(0.0));
        assert_eq!(k.range(), &[Site(vec![-1]), Site(vec![0]), Site(vec![1])]);
    }

    #[test]
    fn amo_norms_and_moduli() {
        let k = AmoKernel::<f64>::amo(1.0);
        let n = norms(&k, &k.hull(), NormRequest::default()).unwrap();
        assert_eq!((n.sup_sum, n.moment), (4.0, 2.0));
        assert!(n.certified());
        let free = AmoKernel::<f64>::amo(0.0);
        let n = norms(&free, &free.hull(), NormRequest::default()).unwrap();
        assert_eq!((n.sup_sum, n.moment), (2.0, 2.0));
        let m = moduli_summary(&k);
        assert!((m.value() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(matches!(m, ModulusNorm::L1(_)));
        let flat = TightBinding::<f64>::new(1, BTreeMap::new(), TrigPotential::constant(3.0)).unwrap();
        assert_eq!(moduli_summary(&flat), ModulusNorm::L1(0.0));
    }

    #[test]
    fn sampled_norms_approach_analytic_from_below() {
        let k = AmoKernel::<f64>::amo(1.0);
        let mut prev = 0.0;
        for samples in [10, 100, 1000, 10_000, 100_000] {
            let n = norms(&k, &k.hull(), NormRequest::Sampled { samples, seed: 1 }).unwrap();
            assert!(n.sup_sum <= 4.0 + 1e-12);
            assert!(n.sup_sum >= prev);
            assert_eq!(n.method, NormMethod::Sampled { samples });
            prev = n.sup_sum;
        }
        assert!(4.0 - prev < 1e-6, "sampled {prev}");
    }

    #[test]
    fn fibonacci_entries_and_norms() {
        let g1 = LatticeGroup::with_linf(1).unwrap();
        let k = FibonacciKernel::<f64>::fibonacci(2.0, g1, [0, 1]).unwrap();
        let hull = fibonacci_subshift(5).unwrap();
        let one = SubshiftPoint {
            config: Arc::new(Configuration::Periodic(PeriodicPattern::new(vec![1], vec![1]).unwrap())),
            offset: Site(vec![0]),
        };
        assert_eq!(k.entry(&one, &Site(vec![0])), c(2.0));
        let k1 = FibonacciKernel::<f64>::fibonacci(1.0, g1, [0, 1]).unwrap();
        let n = norms(&k1, &hull, NormRequest::default()).unwrap();
        assert_eq!((n.sup_sum, n.moment), (3.0, 2.0));
        assert_eq!(moduli_summary(&k1), ModulusNorm::Sup(2.0));

        let g2 = LatticeGroup::with_linf(2).unwrap();
        let k2 = FibonacciKernel::<f64>::fibonacci(1.0, g2, [0, 1]).unwrap();
        let z = SubshiftPoint {
            config: Arc::new(Configuration::Periodic(
                PeriodicPattern::new(vec![1, 1], vec![0]).unwrap(),
            )),
            offset: Site(vec![0, 0]),
        };
        assert_eq!(k2.entry(&z, &Site(vec![1, 0])), c(1.0));
        assert_eq!(k2.entry(&z, &Site(vec![1, 1])), c(0.0));
    }

    #[test]
    fn local_potential_ignores_distant_symbols() {
        let g1 = LatticeGroup::with_linf(1).unwrap();
        let k = FibonacciKernel::<f64>::fibonacci(1.5, g1, [0, 1]).unwrap();
        let hull = fibonacci_subshift(6).unwrap();
        let x = hull.generator_point();
        let mut patches = BTreeMap::new();
        patches.insert(Site(vec![3]), 1 - x.at(&Site(vec![3])).unwrap());
        let y = SubshiftPoint {
            config: Arc::new(Configuration::Patched {
                base: x.config.clone(),
                patches,
            }),
            offset: x.offset.clone(),
        };
        assert_eq!(k.entry(&x, &Site(vec![0])), k.entry(&y, &Site(vec![0])));
    }

    #[test]
    fn declared_regularity_holds() {
        let amo = AmoKernel::<f64>::amo(1.3);
        assert_eq!(regularity_violations(&amo, &amo.hull(), 10_000, 5), 0);
        let multi = TightBinding::<f64>::new(
            2,
            amo.hoppings().clone(),
            TrigPotential {
                constant: 0.1,
                terms: vec![
                    TrigTerm {
                        freq: vec![1, 0],
                        cos: 1.0,
                        sin: 0.5,
                    },
                    TrigTerm {
                        freq: vec![2, -1],
                        cos: 0.0,
                        sin: 0.7,
                    },
                ],
            },
        )
        .unwrap();
        assert_eq!(regularity_violations(&multi, &multi.hull(), 10_000, 6), 0);
        let g1 = LatticeGroup::with_linf(1).unwrap();
        let fh = FibonacciKernel::<f64>::fibonacci(1.0, g1, [0, 1]).unwrap();
        let hull = fibonacci_subshift(9).unwrap();
        assert_eq!(regularity_violations(&fh, &hull, 10_000, 7), 0);
        let mut table = HashMap::new();
        table.insert(vec![0, 1, 0], 2.0);
        table.insert(vec![1, 0, 0], -1.0);
        let rule = FibonacciKernel::<f64>::new(
            g1,
            [0, 1],
            fh.hoppings().clone(),
            LocalRule::Table {
                radius: 1,
                values: table,
                default: 0.0,
            },
        )
        .unwrap();
        assert_eq!(moduli_summary(&rule), ModulusNorm::Sup(3.0));
        assert_eq!(regularity_violations(&rule, &hull, 10_000, 8), 0);
    }

    #[test]
    fn schur_norm_relations() {
        let k = AmoKernel::<f64>::amo(0.7);
        let hull = k.hull();
        let n = norms(&k, &hull, NormRequest::default()).unwrap();
        let r0 = k.range_radius(&Hull::<f64>::group(&hull));
        assert!(n.moment <= r0 as f64 * n.sup_sum);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: TorusPoint<f64> = hull.random_point(&mut rng);
            for h in k.range() {
                assert!(k.entry(&x, h).norm() <= n.sup_sum);
            }
        }
    }

    #[test]
    fn selfadjointness() {
        let amo = AmoKernel::<f64>::amo(1.0);
        let d = selfadjointness_defect(&amo, &amo.hull(), 100, 8, 3).unwrap();
        assert_eq!(d, 0.0);
        let mut hops = BTreeMap::new();
        hops.insert(Site(vec![1]), c(1.0));
        let one_sided = TightBinding::new(1, hops, TrigPotential::constant(0.0)).unwrap();
        let d = selfadjointness_defect(&one_sided, &one_sided.hull(), 10, 8, 3).unwrap();
        assert_eq!(d, 1.0);
        let zero = TightBinding::<f64>::new(1, BTreeMap::new(), TrigPotential::constant(0.0)).unwrap();
        assert_eq!(selfadjointness_defect(&zero, &zero.hull(), 10, 8, 3).unwrap(), 0.0);
        // magnetic-style complex hopping, conjugate pair
        let mut hops = BTreeMap::new();
        hops.insert(Site(vec![1]), Complex::new(0.6, 0.8));
        hops.insert(Site(vec![-1]), Complex::new(0.6, -0.8));
        let mag = TightBinding::new(1, hops, TrigPotential::cosine(0.5)).unwrap();
        assert_eq!(selfadjointness_defect(&mag, &mag.hull(), 10, 8, 3).unwrap(), 0.0);
    }

    #[test]
    fn opaque_kernels_report_sampled_norms() {
        let k = Opaque(AmoKernel::<f64>::amo(1.0));
        let n = norms(&k, &k.0.hull(), NormRequest::default()).unwrap();
        assert!(!n.certified());
        assert!(n.sup_sum <= 4.0);
    }
}
