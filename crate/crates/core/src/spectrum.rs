//! Spectra of finite sections, of periodic operators (Floquet-Bloch) and of
//! whole invariant sets, stored as band sets with a certified error radius.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Hull;
use crate::error::{invalid, Error, Result};
use crate::group::Site;
use crate::kernel::{Kernel, PointOf, Regularity};
use crate::linalg::{eigenvalues, eigenvalues_ql, CMatrix, CyclicJacobi};
use crate::operator::{finite_section, Boundary};
use crate::scalar::Real;

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eig_hermitian<T: Real>(matrix: &CMatrix<T>) -> Result<Vec<T>> {
    eigenvalues(matrix)
}

/// Same as [`eig_hermitian`] through implicit QL, for cross-checks.
pub fn eig_hermitian_ql<T: Real>(matrix: &CMatrix<T>) -> Result<Vec<T>> {
    eigenvalues_ql(matrix)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance<T> {
    pub method: String,
    pub phase_grid: Option<usize>,
    pub theta_points: Option<usize>,
    /// Gaps up to this width are closed during normalization.
    pub merge_tolerance: T,
    /// Gaps closed during normalization; each is an unresolved gap of the
    /// true spectrum of width at most the gap plus twice the error radius.
    pub merged_gaps: Vec<(T, T)>,
    pub notes: Vec<String>,
}

impl<T: Real> Provenance<T> {
    pub fn new(method: impl Into<String>) -> Self {
        Provenance {
            method: method.into(),
            phase_grid: None,
            theta_points: None,
            merge_tolerance: T::zero(),
            merged_gaps: Vec::new(),
            notes: Vec::new(),
        }
    }
}

/// Compact subset of the line as sorted disjoint closed intervals; the true
/// set lies within Hausdorff distance `error_radius` of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSet<T> {
    pub intervals: Vec<(T, T)>,
    pub error_radius: T,
    pub provenance: Provenance<T>,
}

impl<T: Real> BandSet<T> {
    /// Build and normalize; the merge tolerance defaults to the error radius.
    pub fn new(intervals: Vec<(T, T)>, error_radius: T, mut provenance: Provenance<T>) -> Result<Self> {
        if !(error_radius >= T::zero()) || !error_radius.is_finite() {
            return invalid("error radius must be finite and non-negative");
        }
        if intervals.is_empty() {
            return Err(Error::EmptySet);
        }
        if intervals
            .iter()
            .any(|(a, b)| !a.is_finite() || !b.is_finite() || a > b)
        {
            return invalid("intervals must be finite with lower <= upper");
        }
        provenance.merge_tolerance = provenance.merge_tolerance.max(error_radius);
        Ok(BandSet {
            intervals,
            error_radius,
            provenance,
        }
        .normalized())
    }

    /// Sort, merge overlaps and gaps up to the merge tolerance. Closing a
    /// gap of width `w` moves the set by `w / 2`, which is added to the
    /// radius. Idempotent.
    pub fn normalized(mut self) -> Self {
        self.intervals
            .sort_by(|a, b| a.partial_cmp(b).expect("finite endpoints"));
        let tol = self.provenance.merge_tolerance;
        let mut out: Vec<(T, T)> = Vec::with_capacity(self.intervals.len());
        let mut widest = T::zero();
        for (a, b) in self.intervals.drain(..) {
            match out.last_mut() {
                Some(last) if a - last.1 <= tol => {
                    if a > last.1 {
                        self.provenance.merged_gaps.push((last.1, a));
                        widest = widest.max(a - last.1);
                    }
                    last.1 = last.1.max(b);
                }
                _ => out.push((a, b)),
            }
        }
        self.intervals = out;
        self.error_radius = self.error_radius + widest / T::lit(2.0);
        self
    }

    pub fn total_bandwidth(&self) -> T {
        self.intervals.iter().map(|(a, b)| *b - *a).sum()
    }

    pub fn min(&self) -> T {
        self.intervals[0].0
    }

    pub fn max(&self) -> T {
        self.intervals[self.intervals.len() - 1].1
    }

    /// Check the representation invariants.
    pub fn validate(&self) -> Result<()> {
        let sorted = self.intervals.windows(2).all(|w| w[0].1 < w[1].0);
        let ordered = self.intervals.iter().all(|(a, b)| a <= b && a.is_finite() && b.is_finite());
        if !sorted || !ordered || !(self.error_radius >= T::zero()) {
            return invalid("band set violates its invariants");
        }
        Ok(())
    }

    pub fn shifted(&self, c: T) -> Self {
        let mut out = self.clone();
        for iv in out.intervals.iter_mut() {
            *iv = (iv.0 + c, iv.1 + c);
        }
        out
    }
}

impl<T: Real + Serialize> BandSet<T> {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// One interval per row: `lower,upper`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(["lower", "upper"]).map_err(io)?;
        for (a, b) in &self.intervals {
            w.write_record([format!("{a}"), format!("{b}")]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("ascii"))
    }
}

impl<T: Real + for<'de> Deserialize<'de>> BandSet<T> {
    pub fn from_json(s: &str) -> Result<Self> {
        let bs: BandSet<T> = serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        bs.validate()?;
        Ok(bs)
    }
}

/// Union of several band sets; the radius is the largest input radius.
pub fn union<T: Real>(parts: &[BandSet<T>], method: &str) -> Result<BandSet<T>> {
    let radius = parts.iter().map(|b| b.error_radius).fold(T::zero(), T::max);
    let intervals: Vec<(T, T)> = parts.iter().flat_map(|b| b.intervals.iter().copied()).collect();
    BandSet::new(intervals, radius, Provenance::new(method))
}

/// How Bloch phases are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// Band edges at phases 0 and 1/2 when the operator is a periodic
    /// nearest-neighbour chain, otherwise a uniform grid.
    Auto,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions<T> {
    pub phase_grid: usize,
    pub mode: PhaseMode,
    /// Theta mesh for torus slices; `None` picks `1e-4 / ||M||_1`.
    pub theta_mesh: Option<T>,
    /// Reject results whose radius exceeds this.
    pub max_error: Option<T>,
}

impl<T: Real> Default for SpectrumOptions<T> {
    fn default() -> Self {
        SpectrumOptions {
            phase_grid: 64,
            mode: PhaseMode::Auto,
            theta_mesh: None,
            max_error: None,
        }
    }
}

fn solver_tolerance<T: Real>(m: &CMatrix<T>) -> T {
    T::epsilon() * T::lit(64.0) * T::from_usize(m.size().max(1)).unwrap() * m.max_row_sum().max(T::one())
}

fn nearest_neighbour_chain<T: Real, K: Kernel<T>>(kernel: &K, dim: usize) -> bool {
    dim == 1 && kernel.range().iter().all(|h| h.0[0].abs() <= 1)
}

/// Exact band edges of a periodic nearest-neighbour chain: the `k`-th band
/// is swept monotonically between phases 0 and 1/2. Hoppings are replaced
/// by their moduli, a gauge change that only relabels the phase.
fn chain_band_edges<T: Real, K: Kernel<T>>(
    kernel: &K,
    hull: &K::Hull,
    x: &PointOf<T, K>,
    q: usize,
) -> Result<(Vec<(T, T)>, T)> {
    let mut diag = vec![T::zero(); q];
    let mut link = vec![T::zero(); q];
    let plus = Site(vec![1]);
    let zero = Site(vec![0]);
    for g in 0..q {
        let gx = hull.act(&Site(vec![-(g as i64)]), x)?;
        diag[g] = kernel.entry(&gx, &zero).re;
        link[g] = kernel.entry(&gx, &plus).norm();
    }
    let edges = |sign: T| -> Result<(Vec<T>, T)> {
        if q >= 3 {
            let c = CyclicJacobi::new(diag.clone(), link[..q - 1].to_vec(), sign * link[q - 1])?;
            let (lo, hi) = c.bounds();
            let n = T::from_usize(q).unwrap();
            let tol = T::epsilon() * T::lit(64.0) * n * lo.abs().max(hi.abs()).max(T::one());
            return Ok((c.eigenvalues()?, tol));
        }
        let mut m = CMatrix::from_diagonal(&diag);
        for g in 0..q {
            let (i, j) = (g, (g + 1) % q);
            let w = if g + 1 == q { sign * link[g] } else { link[g] };
            let c = Complex::new(w, T::zero());
            // for q = 1 both directions land on the diagonal: 2 |t| cos(2 pi phase)
            m[(i, j)] = m[(i, j)] + c;
            m[(j, i)] = m[(j, i)] + c;
        }
        Ok((eigenvalues(&m)?, solver_tolerance(&m)))
    };
    let (e0, t0) = edges(T::one())?;
    let (e1, t1) = edges(-T::one())?;
    let tol = t0.max(t1);
    let bands = e0
        .iter()
        .zip(&e1)
        .map(|(a, b)| (a.min(*b), a.max(*b)))
        .collect();
    Ok((bands, tol))
}

/// Spectrum of a periodic operator as the union over Bloch phases.
pub fn periodic_spectrum<T: Real, K: Kernel<T>>(
    kernel: &K,
    hull: &K::Hull,
    x: &PointOf<T, K>,
    period: &[i64],
    options: &SpectrumOptions<T>,
) -> Result<BandSet<T>> {
    let group = hull.group();
    if period.len() != group.dim || period.iter().any(|&p| p <= 0) || !hull.is_periodic(x, period) {
        return Err(Error::NotPeriodic(period.to_vec()));
    }
    if options.mode == PhaseMode::Auto && nearest_neighbour_chain(kernel, group.dim) {
        let (bands, tol) = chain_band_edges(kernel, hull, x, period[0] as usize)?;
        let mut prov = Provenance::new("bloch-band-edges");
        prov.phase_grid = Some(2);
        return BandSet::new(bands, tol, prov);
    }
    if options.phase_grid < 2 {
        return invalid("phase grid needs at least 2 points per axis");
    }
    let n = options.phase_grid;
    let dim = group.dim;
    let total = n.pow(dim as u32);
    let spectra: Vec<Result<(Vec<T>, T)>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rem = idx;
            let phase: Vec<T> = (0..dim)
                .map(|_| {
                    let k = rem % n;
                    rem /= n;
                    T::from_usize(k).unwrap() / T::from_usize(n).unwrap()
                })
                .collect();
            let s = finite_section(
                kernel,
                hull,
                x,
                T::one(),
                Boundary::Periodic {
                    period: period.to_vec(),
                    phase,
                },
            )?;
            let tol = solver_tolerance(&s.matrix);
            Ok((s.eigenvalues()?, tol))
        })
        .collect();
    let mut lo: Vec<T> = Vec::new();
    let mut hi: Vec<T> = Vec::new();
    let mut tol = T::zero();
    for r in spectra {
        let (ev, t) = r?;
        tol = tol.max(t);
        if lo.is_empty() {
            lo = ev.clone();
            hi = ev;
        } else {
            for (k, v) in ev.into_iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
    }
    // each sorted eigenvalue moves at most lip * |d phase|_inf
    let lip: T = kernel
        .range()
        .iter()
        .map(|h| {
            let s = kernel.analytic_sup(h).unwrap_or_else(T::zero);
            T::lit(2.0) * T::from_int(h.l1()) * s * T::TAU()
        })
        .sum();
    let mesh = T::one() / T::from_usize(n).unwrap();
    let radius = lip * mesh / T::lit(2.0) + tol;
    let mut prov = Provenance::new("bloch-phase-grid");
    prov.phase_grid = Some(n);
    prov.notes.push(format!("phase lipschitz bound {lip}"));
    BandSet::new(lo.into_iter().zip(hi).collect(), radius, prov)
}

/// Closure of the union of spectra over an invariant set of the hull.
pub fn hull_union_spectrum<T: Real, K: Kernel<T>>(
    kernel: &K,
    hull: &K::Hull,
    set: &<K::Hull as Hull<T>>::Set,
    options: &SpectrumOptions<T>,
) -> Result<BandSet<T>> {
    let regularity = kernel.regularity();
    let modulus = regularity.summary().value();
    let mesh = match (options.theta_mesh, regularity) {
        (Some(m), _) => m,
        (None, Regularity::Lipschitz(_)) if modulus > T::zero() => T::lit(1e-4) / modulus,
        _ => T::one(),
    };
    let reps = hull.representatives(set, mesh)?;
    let parts: Vec<Result<BandSet<T>>> = reps
        .points
        .par_iter()
        .map(|(p, period)| periodic_spectrum(kernel, hull, p, period, options))
        .collect();
    let parts: Vec<BandSet<T>> = parts.into_iter().collect::<Result<_>>()?;
    let sampling = match regularity {
        Regularity::Lipschitz(_) => modulus * reps.covering,
        Regularity::LocallyConstant(_) => {
            if reps.covering == T::zero() || reps.covering <= T::one() / modulus {
                T::zero()
            } else {
                return invalid("representatives too coarse for a locally constant kernel");
            }
        }
    };
    let radius = parts.iter().map(|b| b.error_radius).fold(T::zero(), T::max) + sampling;
    let mut prov = Provenance::new(format!("hull-union/{}", parts[0].provenance.method));
    prov.phase_grid = parts[0].provenance.phase_grid;
    prov.theta_points = Some(reps.points.len());
    let intervals = parts.iter().flat_map(|b| b.intervals.iter().copied()).collect();
    let out = BandSet::new(intervals, radius, prov)?;
    if let Some(limit) = options.max_error {
        if out.error_radius > limit {
            return invalid(format!(
                "error radius {} exceeds requested {}",
                out.error_radius, limit
            ));
        }
    }
    Ok(out)
}
