//! Explicit Hölder and Lipschitz constants for the spectrum map and
//! per-pair verdicts on measured scaling series.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::approx::ScalingSeries;
use crate::dynamics::Hull;
use crate::error::{Error, Result};
use crate::kernel::{norms, Kernel, ModulusNorm, NormRequest};
use crate::scalar::Real;

/// Which closed form applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Lipschitz kernels, exponent 1/2, modulus `||M||_1`.
    Holder,
    /// Locally constant kernels, exponent 1, modulus `||M||_inf`.
    Lipschitz,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderBoundParams<T> {
    /// Tent constant of the group.
    pub t: T,
    /// `sup_x sum_h |k(x,h)| |h|`.
    pub moment: T,
    /// Lipschitz constant `m` of the action, `d(gx,gy) <= (m|g|+1) d(x,y)`.
    pub m: T,
    pub modulus: ModulusNorm<T>,
    /// False when some input is only a sampled lower bound.
    pub certified: bool,
}

impl<T: Real> HolderBoundParams<T> {
    /// Inputs taken from a kernel: its moment norm and declared moduli.
    pub fn from_kernel<K: Kernel<T>>(kernel: &K, hull: &K::Hull, t: T, m: T, request: NormRequest) -> Result<Self> {
        let n = norms(kernel, hull, request)?;
        Ok(HolderBoundParams {
            t,
            moment: n.moment,
            m,
            modulus: kernel.regularity().summary(),
            certified: n.certified(),
        })
    }

    pub fn kind(&self) -> BoundKind {
        match self.modulus {
            ModulusNorm::L1(_) => BoundKind::Holder,
            ModulusNorm::Sup(_) => BoundKind::Lipschitz,
        }
    }
}

/// `delta <= threshold` implies `dist <= c * delta^exponent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants<T> {
    pub kind: BoundKind,
    pub threshold: T,
    pub c: T,
    pub exponent: T,
    pub warnings: Vec<String>,
}

fn positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Hölder case: threshold `min(t kS / (m M1), 1)`,
/// `C = 2 (t kS m M1)^(1/2) + M1`.
pub fn holder_constants<T: Real>(p: &HolderBoundParams<T>) -> Result<BoundConstants<T>> {
    let ModulusNorm::L1(m1) = p.modulus else {
        return Err(Error::Hypothesis("Hölder bound needs an L1 Lipschitz modulus".into()));
    };
    positive("t", p.t)?;
    positive("moment norm", p.moment)?;
    positive("action constant m", p.m)?;
    positive("modulus norm", m1)?;
    let threshold = (p.t * p.moment / (p.m * m1)).min(T::one());
    let c = T::lit(2.0) * (p.t * p.moment * p.m * m1).sqrt() + m1;
    Ok(BoundConstants {
        kind: BoundKind::Holder,
        threshold,
        c,
        exponent: T::lit(0.5),
        warnings: Vec::new(),
    })
}

/// Lipschitz case: threshold `1 / ((m+1) Minf)`, `C = t kS (m+1) Minf`.
/// `m = 0` is evaluated but flagged, the proof needs `m > 0`.
pub fn lipschitz_constants<T: Real>(p: &HolderBoundParams<T>) -> Result<BoundConstants<T>> {
    let ModulusNorm::Sup(minf) = p.modulus else {
        return Err(Error::Hypothesis("Lipschitz bound needs a sup modulus".into()));
    };
    positive("t", p.t)?;
    positive("moment norm", p.moment)?;
    if !(minf >= T::one()) || !minf.is_finite() {
        return Err(Error::Hypothesis(format!("sup modulus must be >= 1, got {minf}")));
    }
    let mut warnings = Vec::new();
    if p.m == T::zero() {
        warnings.push("action constant m = 0 lies outside the proved range m > 0".to_string());
    } else {
        positive("action constant m", p.m)?;
    }
    let m1 = p.m + T::one();
    Ok(BoundConstants {
        kind: BoundKind::Lipschitz,
        threshold: T::one() / (m1 * minf),
        c: p.t * p.moment * m1 * minf,
        exponent: T::one(),
        warnings,
    })
}

pub fn constants<T: Real>(p: &HolderBoundParams<T>, kind: BoundKind) -> Result<BoundConstants<T>> {
    match kind {
        BoundKind::Holder => holder_constants(p),
        BoundKind::Lipschitz => lipschitz_constants(p),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict<T> {
    pub label: String,
    pub delta: T,
    pub dist: T,
    pub err: T,
    /// `c * delta^exponent + err`.
    pub bound: T,
    pub in_regime: bool,
    /// Only evaluated in regime.
    pub satisfied: Option<bool>,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub constants: BoundConstants<T>,
    pub params: HolderBoundParams<T>,
    pub pairs: Vec<BoundVerdict<T>>,
    pub violations: usize,
    /// Some input was sampled rather than proved.
    pub advisory: bool,
}

impl<T: Real> BoundReport<T> {
    /// Violations that rest on certified inputs only.
    pub fn certified_violations(&self) -> usize {
        if self.advisory {
            return 0;
        }
        self.pairs
            .iter()
            .filter(|p| p.certified && p.satisfied == Some(false))
            .count()
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let k = &self.constants;
        let _ = writeln!(
            s,
            "{:?} bound: C = {:.6}, exponent = {}, threshold = {:.6}{}",
            k.kind,
            k.c,
            k.exponent,
            k.threshold,
            if self.advisory { " (advisory)" } else { "" }
        );
        let _ = writeln!(
            s,
            "{:<24} {:>12} {:>12} {:>12} {:>12} {:>9} {:>9}",
            "pair", "delta", "dist", "err", "bound", "regime", "verdict"
        );
        for p in &self.pairs {
            let verdict = match p.satisfied {
                Some(true) => "ok",
                Some(false) => "VIOLATED",
                None => "-",
            };
            let _ = writeln!(
                s,
                "{:<24} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>9} {:>9}",
                p.label,
                p.delta.as_f64(),
                p.dist.as_f64(),
                p.err.as_f64(),
                p.bound.as_f64(),
                if p.in_regime { "in" } else { "out" },
                verdict
            );
        }
        for w in &k.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "violations: {}", self.violations);
        s
    }
}

impl<T: Real + Serialize> BoundReport<T> {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Check `dist <= C delta^exponent + err` for each in-regime pair.
pub fn verify_bound<T: Real>(
    series: &ScalingSeries<T>,
    params: &HolderBoundParams<T>,
    kind: BoundKind,
) -> Result<BoundReport<T>> {
    if series.pairs.is_empty() {
        return Err(Error::InsufficientData("empty scaling series".into()));
    }
    let constants = constants(params, kind)?;
    let pairs: Vec<BoundVerdict<T>> = series
        .pairs
        .iter()
        .map(|p| {
            let bound = constants.c * p.delta.powf(constants.exponent) + p.err;
            let in_regime = p.delta <= constants.threshold;
            BoundVerdict {
                label: p.label.clone(),
                delta: p.delta,
                dist: p.dist,
                err: p.err,
                bound,
                in_regime,
                satisfied: in_regime.then_some(p.dist <= bound),
                certified: p.certified,
            }
        })
        .collect();
    let violations = pairs.iter().filter(|p| p.satisfied == Some(false)).count();
    Ok(BoundReport {
        constants,
        params: *params,
        pairs,
        violations,
        advisory: !params.certified,
    })
}

/// Tent constant and moment for a kernel, with `m` the action constant.
pub fn params_for<T: Real, K: Kernel<T>>(kernel: &K, hull: &K::Hull, m: T, r_max: T) -> Result<HolderBoundParams<T>> {
    let g = hull.group().growth_constants(r_max)?;
    HolderBoundParams::from_kernel(kernel, hull, g.t, m, NormRequest::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::ScalingSeries;
    use crate::group::LatticeGroup;
    use crate::kernel::{AmoKernel, FibonacciKernel, Opaque};

    fn amo_params() -> HolderBoundParams<f64> {
        HolderBoundParams {
            t: 40.5f64.sqrt(),
            moment: 2.0,
            m: 1.0,
            modulus: ModulusNorm::L1(4.0 * std::f64::consts::PI),
            certified: true,
        }
    }

    fn fh_params() -> HolderBoundParams<f64> {
        HolderBoundParams {
            modulus: ModulusNorm::Sup(2.0),
            ..amo_params()
        }
    }

    #[test]
    fn amo_constants() {
        let k = holder_constants(&amo_params()).unwrap();
        assert_eq!(k.threshold, 1.0);
        // closed form evaluated independently
        let t = 40.5f64.sqrt();
        let m1 = 4.0 * std::f64::consts::PI;
        let c = 2.0 * (t * 2.0 * m1).sqrt() + m1;
        assert!((k.c - c).abs() < 1e-12);
        assert!((k.c - 37.86).abs() < 5e-3);
        assert!(2.0 * t / m1 > 1.0);
    }

    #[test]
    fn fh_constants() {
        let k = lipschitz_constants(&fh_params()).unwrap();
        assert_eq!(k.threshold, 0.25);
        assert!((k.c - 8.0 * 40.5f64.sqrt()).abs() < 1e-12);
        assert!((k.c - 50.91).abs() < 5e-3);
        let degenerate = lipschitz_constants(&HolderBoundParams { m: 0.0, ..fh_params() }).unwrap();
        assert_eq!(degenerate.threshold, 0.5);
        assert!((degenerate.c - 40.5f64.sqrt() * 2.0 * 2.0).abs() < 1e-12);
        assert_eq!(degenerate.warnings.len(), 1);
        let flat = lipschitz_constants(&HolderBoundParams {
            modulus: ModulusNorm::Sup(1.0),
            ..fh_params()
        })
        .unwrap();
        assert!((flat.c - 40.5f64.sqrt() * 2.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let zero = HolderBoundParams {
            modulus: ModulusNorm::L1(0.0),
            ..amo_params()
        };
        assert!(matches!(holder_constants(&zero), Err(Error::Hypothesis(_))));
        assert!(holder_constants(&HolderBoundParams { m: 0.0, ..amo_params() }).is_err());
        assert!(holder_constants(&fh_params()).is_err());
        assert!(lipschitz_constants(&amo_params()).is_err());
        assert!(lipschitz_constants(&HolderBoundParams {
            modulus: ModulusNorm::Sup(0.5),
            ..fh_params()
        })
        .is_err());
        assert!(lipschitz_constants(&HolderBoundParams { m: -1.0, ..fh_params() }).is_err());
    }

    #[test]
    fn doubling_the_modulus() {
        let p = amo_params();
        let ModulusNorm::L1(m1) = p.modulus else { unreachable!() };
        let c1 = holder_constants(&p).unwrap().c;
        let c2 = holder_constants(&HolderBoundParams {
            modulus: ModulusNorm::L1(2.0 * m1),
            ..p
        })
        .unwrap()
        .c;
        assert!((c2 - (2f64.sqrt() * (c1 - m1) + 2.0 * m1)).abs() < 1e-12);
    }

    #[test]
    fn constants_are_monotone() {
        let h = 1e-6;
        for base in [amo_params(), fh_params()] {
            let kind = base.kind();
            let c0 = constants(&base, kind).unwrap().c;
            let bump = |f: &dyn Fn(&mut HolderBoundParams<f64>)| {
                let mut p = base;
                f(&mut p);
                constants(&p, kind).unwrap().c
            };
            assert!(bump(&|p| p.moment += h) > c0);
            assert!(bump(&|p| p.m += h) > c0);
            assert!(
                bump(&|p| {
                    p.modulus = match p.modulus {
                        ModulusNorm::L1(v) => ModulusNorm::L1(v + h),
                        ModulusNorm::Sup(v) => ModulusNorm::Sup(v + h),
                    }
                }) > c0
            );
        }
    }

    #[test]
    fn params_from_models() {
        let amo = AmoKernel::<f64>::amo(1.0);
        let p = params_for(&amo, &amo.hull(), 1.0, 512.0).unwrap();
        assert!((p.t - 40.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(p.moment, 2.0);
        assert!((p.modulus.value() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(p.certified);
        let fh = FibonacciKernel::<f64>::fibonacci(1.0, LatticeGroup::with_linf(1).unwrap(), [0, 1]).unwrap();
        let hull = crate::dynamics::fibonacci_hull(64).unwrap();
        let p = params_for(&fh, &hull, 1.0, 512.0).unwrap();
        assert_eq!(p.modulus, ModulusNorm::Sup(2.0));
        assert_eq!(p.moment, 2.0);
        let opaque = Opaque(amo);
        let p = params_for(&opaque, &opaque.0.hull(), 1.0, 512.0).unwrap();
        assert!(!p.certified);
    }

    #[test]
    fn regime_gate() {
        let series = ScalingSeries::from_pairs(vec![("far".into(), 0.5, 100.0, 0.0), ("near".into(), 0.1, 0.01, 0.0)]);
        let r = verify_bound(&series, &fh_params(), BoundKind::Lipschitz).unwrap();
        assert!(!r.pairs[0].in_regime);
        assert_eq!(r.pairs[0].satisfied, None);
        assert_eq!(r.pairs[1].satisfied, Some(true));
        assert_eq!(r.violations, 0);
        let bad = ScalingSeries::from_pairs(vec![("bad".into(), 0.1, 100.0, 0.0)]);
        let r = verify_bound(&bad, &fh_params(), BoundKind::Lipschitz).unwrap();
        assert_eq!(r.certified_violations(), 1);
        let advisory = verify_bound(
            &bad,
            &HolderBoundParams {
                certified: false,
                ..fh_params()
            },
            BoundKind::Lipschitz,
        )
        .unwrap();
        assert_eq!(advisory.violations, 1);
        assert_eq!(advisory.certified_violations(), 0);
        assert!(advisory.table().contains("advisory"));
        let empty = ScalingSeries::<f64> { pairs: vec![] };
        assert!(verify_bound(&empty, &fh_params(), BoundKind::Lipschitz).is_err());
    }
}
