//! Approximation sequences (continued-fraction convergents, substitution
//! levels) and log-log scaling of spectral distance against hull distance.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{hull_hausdorff, HullSet, SubshiftHull, TorusHull, TorusSlice, DEFAULT_WINDOW};
use crate::error::{invalid, Error, Result};
use crate::haus::hausdorff_bands;
use crate::kernel::Kernel;
use crate::scalar::Real;
use crate::spectrum::{hull_union_spectrum, BandSet, SpectrumOptions};

/// A frequency in `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    /// `(sqrt 5 - 1) / 2`, partial quotients all 1.
    Golden,
    /// `sqrt 2 - 1`, partial quotients all 2.
    Silver,
    Exact(Ratio<i64>),
    Float(f64),
}

impl Frequency {
    pub fn value(&self) -> f64 {
        match self {
            Frequency::Golden => (5f64.sqrt() - 1.0) / 2.0,
            Frequency::Silver => 2f64.sqrt() - 1.0,
            Frequency::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Frequency::Float(x) => *x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergents {
    pub fractions: Vec<Ratio<i64>>,
    /// The expansion ended before `count` convergents were produced.
    pub terminated: bool,
}

/// Convergents `p_k / q_k` of `alpha`, starting after the trivial `0/1`.
pub fn convergents(alpha: Frequency, count: usize) -> Result<Convergents> {
    if count == 0 {
        return invalid("need at least one convergent");
    }
    let v = alpha.value();
    if !(v > 0.0 && v < 1.0) {
        return invalid("frequency must lie in (0, 1)");
    }
    // partial quotients after the leading zero
    let mut quotients: Vec<i64> = Vec::new();
    let mut terminated = false;
    match alpha {
        Frequency::Golden => quotients = vec![1; count + 1],
        Frequency::Silver => quotients = vec![2; count],
        Frequency::Exact(r) => {
            let (mut num, mut den) = (*r.denom(), *r.numer());
            while den != 0 && quotients.len() < count + 1 {
                quotients.push(num / den);
                (num, den) = (den, num % den);
            }
            terminated = den == 0;
        }
        Frequency::Float(x) => {
            let mut y = 1.0 / x;
            while quotients.len() < count + 1 {
                let a = y.floor();
                quotients.push(a as i64);
                let frac = y - a;
                if frac < 1e-9 || a > 1e9 {
                    terminated = true;
                    break;
                }
                y = 1.0 / frac;
            }
        }
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, 0i64, 1i64);
    let mut out: Vec<Ratio<i64>> = Vec::new();
    for a in quotients {
        let next = (
            a.checked_mul(p1).and_then(|x| x.checked_add(p0)),
            a.checked_mul(q1).and_then(|x| x.checked_add(q0)),
        );
        let (Some(p), Some(q)) = next else {
            return invalid("convergent denominators overflow i64");
        };
        (p0, q0, p1, q1) = (p1, q1, p, q);
        // golden starts [0; 1, 1, ...] whose first convergent repeats 1/1
        if out.last() != Some(&Ratio::new(p, q)) {
            out.push(Ratio::new(p, q));
        }
        if out.len() == count {
            break;
        }
    }
    if out.len() < count {
        terminated = true;
    }
    Ok(Convergents {
        fractions: out,
        terminated,
    })
}

/// One step `(X_k, X_{k+1})` of an approximation sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPair<T> {
    pub label: String,
    /// Hausdorff distance of the two invariant sets.
    pub delta: T,
    /// Hausdorff distance of their spectra.
    pub dist: T,
    /// Sum of the two spectra error radii.
    pub err: T,
    /// Used by the fit: `delta > 0` and `err < dist`.
    pub admitted: bool,
    /// Both the hull distance and the spectra are certified.
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries<T> {
    pub pairs: Vec<ScalingPair<T>>,
}

impl<T: Real> ScalingSeries<T> {
    pub fn from_pairs(raw: Vec<(String, T, T, T)>) -> Self {
        let pairs = raw
            .into_iter()
            .map(|(label, delta, dist, err)| ScalingPair {
                admitted: delta > T::zero() && err < dist,
                certified: true,
                label,
                delta,
                dist,
                err,
            })
            .collect();
        ScalingSeries { pairs }
    }

    pub fn admitted(&self) -> impl Iterator<Item = &ScalingPair<T>> {
        self.pairs.iter().filter(|p| p.admitted)
    }

    pub fn deltas_decreasing(&self) -> bool {
        self.pairs.windows(2).all(|w| w[1].delta < w[0].delta)
    }

    pub fn deltas_nonincreasing(&self) -> bool {
        self.pairs.windows(2).all(|w| w[1].delta <= w[0].delta)
    }

    /// `label,delta,dist,err,admitted`.
    pub fn to_csv(&self) -> Result<String> {
        let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["label", "delta", "dist", "err", "admitted"]).map_err(io)?;
        for p in &self.pairs {
            w.write_record([
                p.label.clone(),
                format!("{}", p.delta),
                format!("{}", p.dist),
                format!("{}", p.err),
                p.admitted.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf8"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    pub n_points: usize,
}

/// Least squares of `log dist` against `log delta` over admitted pairs.
pub fn holder_fit<T: Real>(series: &ScalingSeries<T>) -> Result<HolderFit<T>> {
    let pts: Vec<(T, T)> = series
        .admitted()
        .map(|p| (p.delta.ln(), p.dist.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} admitted pairs, need at least 2"
        )));
    }
    let nt = T::from_usize(n).unwrap();
    let mx = pts.iter().map(|p| p.0).sum::<T>() / nt;
    let my = pts.iter().map(|p| p.1).sum::<T>() / nt;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: T = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == T::zero() {
        return Err(Error::InsufficientData("all deltas coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: T = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let r_squared = if syy == T::zero() {
        T::one()
    } else {
        T::one() - ss_res / syy
    };
    Ok(HolderFit {
        slope,
        intercept,
        r_squared,
        n_points: n,
    })
}

/// A family of operators indexed by invariant sets of one hull type.
pub trait Family<T: Real>: Sync {
    type Item: Send + Sync;

    fn label(&self, item: &Self::Item) -> String;
    fn hull_set(&self, item: &Self::Item) -> HullSet;
    fn spectrum(&self, item: &Self::Item, options: &SpectrumOptions<T>) -> Result<BandSet<T>>;
    /// True when the spectra radii rest on analytic bounds.
    fn certified(&self) -> bool {
        true
    }
}

/// Kernels over the frequency torus, approximated by rational slices.
pub struct TorusFamily<K> {
    pub kernel: K,
}

impl<T: Real, K: Kernel<T, Hull = TorusHull>> Family<T> for TorusFamily<K> {
    type Item = TorusSlice;

    fn label(&self, item: &TorusSlice) -> String {
        let parts: Vec<String> = item.alpha.iter().map(|a| a.to_string()).collect();
        parts.join(" ")
    }

    fn hull_set(&self, item: &TorusSlice) -> HullSet {
        HullSet::Slice(item.clone())
    }

    fn spectrum(&self, item: &TorusSlice, options: &SpectrumOptions<T>) -> Result<BandSet<T>> {
        let hull = TorusHull::new(item.alpha.len())?;
        hull_union_spectrum(&self.kernel, &hull, item, options)
    }
}

/// Kernels over subshifts, approximated by periodic subshifts.
pub struct SubshiftFamily<K> {
    pub kernel: K,
    pub names: Vec<String>,
}

impl<T: Real, K: Kernel<T, Hull = SubshiftHull>> Family<T> for SubshiftFamily<K> {
    type Item = (usize, SubshiftHull);

    fn label(&self, item: &Self::Item) -> String {
        self.names
            .get(item.0)
            .cloned()
            .unwrap_or_else(|| item.0.to_string())
    }

    fn hull_set(&self, item: &Self::Item) -> HullSet {
        HullSet::Subshift(item.1.clone())
    }

    fn spectrum(&self, item: &Self::Item, options: &SpectrumOptions<T>) -> Result<BandSet<T>> {
        hull_union_spectrum(&self.kernel, &item.1, &item.1, options)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions<T> {
    pub spectrum: SpectrumOptions<T>,
    /// Inspection radius for subshift distances.
    pub window: i64,
    /// Refine until this many pairs are admitted ...
    pub min_admitted: usize,
    /// ... or this many refinement rounds have run.
    pub max_refinements: usize,
}

impl<T: Real> Default for SeriesOptions<T> {
    fn default() -> Self {
        SeriesOptions {
            spectrum: SpectrumOptions::default(),
            window: DEFAULT_WINDOW,
            min_admitted: 6,
            max_refinements: 2,
        }
    }
}

/// Finer version of `options`: quarter theta mesh, double phase grid.
fn refine<T: Real>(options: &SpectrumOptions<T>, current_mesh: Option<T>) -> SpectrumOptions<T> {
    let mut out = *options;
    out.phase_grid = options.phase_grid * 2;
    out.theta_mesh = current_mesh.map(|m| m / T::lit(4.0));
    out
}

/// Spectra and hull distances for consecutive approximants, together with
/// the spectra themselves.
pub fn scaling_series_with_spectra<T: Real, F: Family<T>>(
    family: &F,
    approximants: &[F::Item],
    options: &SeriesOptions<T>,
) -> Result<(ScalingSeries<T>, Vec<BandSet<T>>)> {
    if approximants.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 approximants".into()));
    }
    let hull_pairs: Vec<_> = approximants
        .par_windows(2)
        .map(|w| hull_hausdorff::<T>(&family.hull_set(&w[0]), &family.hull_set(&w[1]), options.window))
        .collect::<Result<_>>()?;
    let mut opts: Vec<SpectrumOptions<T>> = vec![options.spectrum; approximants.len()];
    let mut spectra: Vec<BandSet<T>> = approximants
        .par_iter()
        .map(|a| family.spectrum(a, &options.spectrum))
        .collect::<Result<_>>()?;
    let mut round = 0;
    loop {
        let series = assemble(family, approximants, &hull_pairs, &spectra);
        let admitted = series.admitted().count();
        if admitted >= options.min_admitted.min(series.pairs.len()) || round == options.max_refinements {
            return Ok((series, spectra));
        }
        round += 1;
        // refine only spectra touching a pair lost to its error radii
        let mut stale = vec![false; approximants.len()];
        for (k, p) in series.pairs.iter().enumerate() {
            if !p.admitted && p.delta > T::zero() {
                stale[k] = true;
                stale[k + 1] = true;
            }
        }
        let updates: Vec<(usize, SpectrumOptions<T>, BandSet<T>)> = (0..approximants.len())
            .into_par_iter()
            .filter(|k| stale[*k])
            .map(|k| {
                let mesh = opts[k].theta_mesh.or_else(|| {
                    spectra[k]
                        .provenance
                        .theta_points
                        .map(|n| T::one() / T::from_usize(n.max(1)).unwrap())
                });
                let finer = refine(&opts[k], mesh);
                family.spectrum(&approximants[k], &finer).map(|s| (k, finer, s))
            })
            .collect::<Result<_>>()?;
        if updates.is_empty() {
            return Ok((series, spectra));
        }
        for (k, o, s) in updates {
            opts[k] = o;
            spectra[k] = s;
        }
    }
}

fn assemble<T: Real, F: Family<T>>(
    family: &F,
    approximants: &[F::Item],
    hull_pairs: &[crate::dynamics::HullPair<T>],
    spectra: &[BandSet<T>],
) -> ScalingSeries<T> {
    let pairs = (0..hull_pairs.len())
        .map(|k| {
            let dist = hausdorff_bands(&spectra[k], &spectra[k + 1])
                .expect("band sets are normalized")
                .value;
            let err = spectra[k].error_radius + spectra[k + 1].error_radius;
            let delta = hull_pairs[k].dh;
            ScalingPair {
                label: format!(
                    "{} -> {}",
                    family.label(&approximants[k]),
                    family.label(&approximants[k + 1])
                ),
                delta,
                dist,
                err,
                admitted: delta > T::zero() && err < dist,
                certified: hull_pairs[k].certified && family.certified(),
            }
        })
        .collect();
    ScalingSeries { pairs }
}

/// Scaling series for consecutive approximants.
pub fn scaling_series<T: Real, F: Family<T>>(
    family: &F,
    approximants: &[F::Item],
    options: &SeriesOptions<T>,
) -> Result<ScalingSeries<T>> {
    scaling_series_with_spectra(family, approximants, options).map(|(s, _)| s)
}

/// Rational slices `{p_k / q_k}` for convergents `first..=last` (1-based).
pub fn convergent_slices(alpha: Frequency, first: usize, last: usize) -> Result<Vec<TorusSlice>> {
    if first < 1 || last < first {
        return invalid("convergent range must satisfy 1 <= first <= last");
    }
    let c = convergents(alpha, last)?;
    if c.fractions.len() < last {
        return Err(Error::InsufficientData(format!(
            "only {} convergents exist",
            c.fractions.len()
        )));
    }
    Ok(c.fractions[first - 1..last]
        .iter()
        .map(|r| TorusSlice::single(*r))
        .collect())
}

/// Periodic Fibonacci subshifts for levels `first..=last`.
pub fn fibonacci_levels(first: usize, last: usize) -> Result<(Vec<String>, Vec<(usize, SubshiftHull)>)> {
    if first < 1 || last < first {
        return invalid("level range must satisfy 1 <= first <= last");
    }
    let mut names = Vec::new();
    let mut items = Vec::new();
    for (i, level) in (first..=last).enumerate() {
        names.push(format!("level {level}"));
        items.push((i, crate::dynamics::fibonacci_subshift(level)?));
    }
    Ok((names, items))
}
