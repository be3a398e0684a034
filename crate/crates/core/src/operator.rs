//! Finite sections of covariant operators `A_x`, with the covariance,
//! Schur and adjoint bounds, and the cutoff-transfer of approximate
//! eigenfunctions between nearby hull points.

use std::collections::HashMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Hull;
use crate::error::{invalid, Error, Result};
use crate::group::{tent_value, LatticeGroup, Site};
use crate::kernel::{Kernel, KernelNorms, PointOf};
use crate::linalg::{eigenvalues, spectral_norm, vec_norm, CMatrix};
use crate::scalar::Real;

/// Boundary condition of a finite section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Boundary<T> {
    /// Compression to a ball.
    Open,
    /// One period box; hopping across the box boundary picks up
    /// `exp(2 pi i phase . w)` for the wrap vector `w`.
    Periodic { period: Vec<i64>, phase: Vec<T> },
}

/// Matrix of `A_x` on a finite set of sites, `entry[g][h] = k((-g)x, h - g)`.
#[derive(Clone, Debug)]
pub struct FiniteSection<T, P> {
    pub base_point: P,
    pub group: LatticeGroup,
    pub sites: Vec<Site>,
    index: HashMap<Site, usize>,
    pub boundary: Boundary<T>,
    pub matrix: CMatrix<T>,
    /// Closed radius of the window for open sections.
    pub radius: i64,
}

impl<T: Real, P> FiniteSection<T, P> {
    pub fn size(&self) -> usize {
        self.sites.len()
    }

    pub fn index_of(&self, g: &Site) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn entry(&self, g: &Site, h: &Site) -> Option<Complex<T>> {
        Some(self.matrix[(self.index_of(g)?, self.index_of(h)?)])
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        eigenvalues(&self.matrix)
    }

    /// `A v` on the window.
    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        self.matrix.mul_vec(v)
    }

    /// `||(A - E) v||`.
    pub fn residual(&self, energy: T, v: &[Complex<T>]) -> T {
        let av = self.apply(v);
        let r: Vec<Complex<T>> = av
            .iter()
            .zip(v)
            .map(|(a, b)| *a - *b * energy)
            .collect();
        vec_norm(&r)
    }
}

fn phase_factor<T: Real>(phase: &[T], wrap: &[i64]) -> Complex<T> {
    let turn: T = phase
        .iter()
        .zip(wrap)
        .map(|(p, w)| *p * T::from_int(*w))
        .sum();
    Complex::from_polar(T::one(), T::TAU() * turn)
}

/// Assemble the finite section of `A_x` on the open ball `B(window)` or on
/// one period box.
pub fn finite_section<T: Real, K: Kernel<T>>(
    kernel: &K,
    hull: &K::Hull,
    x: &PointOf<T, K>,
    window: T,
    boundary: Boundary<T>,
) -> Result<FiniteSection<T, PointOf<T, K>>> {
    let group = hull.group();
    let reach = kernel.range_radius(&group);
    let (sites, radius) = match &boundary {
        Boundary::Open => {
            if window < T::from_int(reach) || window < T::one() {
                return Err(Error::WindowTooSmall(format!(
                    "window {window} below kernel range radius {reach}"
                )));
            }
            let radius = LatticeGroup::closed_radius(window).unwrap_or(0);
            (group.closed_ball(radius), radius)
        }
        Boundary::Periodic { period, phase } => {
            if period.len() != group.dim || phase.len() != group.dim {
                return Err(Error::DimensionMismatch {
                    expected: group.dim,
                    got: period.len().min(phase.len()),
                });
            }
            if period.iter().any(|&p| p <= 0) || !hull.is_periodic(x, period) {
                return Err(Error::NotPeriodic(period.clone()));
            }
            let pat = crate::dynamics::PeriodicPattern {
                periods: period.clone(),
                pattern: Vec::new(),
            };
            (pat.box_sites(), 0)
        }
    };
    let index: HashMap<Site, usize> = sites.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let n = sites.len();
    let rows: Vec<Result<Vec<(usize, Complex<T>)>>> = sites
        .par_iter()
        .map(|g| {
            let gx = hull.act(&-g, x)?;
            let mut row = Vec::with_capacity(kernel.range().len());
            for delta in kernel.range() {
                let value = kernel.entry(&gx, delta);
                let h = g + delta;
                match &boundary {
                    Boundary::Open => {
                        if let Some(&j) = index.get(&h) {
                            row.push((j, value));
                        }
                    }
                    Boundary::Periodic { period, phase } => {
                        let reduced: Vec<i64> =
                            h.0.iter().zip(period).map(|(c, p)| c.rem_euclid(*p)).collect();
                        let wrap: Vec<i64> = h
                            .0
                            .iter()
                            .zip(&reduced)
                            .zip(period)
                            .map(|((c, r), p)| (c - r) / p)
                            .collect();
                        let j = index[&Site(reduced)];
                        row.push((j, value * phase_factor(phase, &wrap)));
                    }
                }
            }
            Ok(row)
        })
        .collect();
    let mut matrix = CMatrix::zeros(n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row? {
            matrix[(i, j)] = matrix[(i, j)] + v;
        }
    }
    Ok(FiniteSection {
        base_point: x.clone(),
        group,
        sites,
        index,
        boundary,
        matrix,
        radius,
    })
}

/// Largest entrywise gap between the section of `A_{jx}` and the section of
/// `A_x` translated by `j`, on the inner window where both are exact.
pub fn covariance_defect<T: Real, K: Kernel<T>>(
    kernel: &K,
    hull: &K::Hull,
    x: &PointOf<T, K>,
    j: &Site,
    window: T,
) -> Result<T> {
    let group = hull.group();
    let reach = kernel.range_radius(&group);
    let radius = LatticeGroup::closed_radius(window).unwrap_or(-1);
    let inner = radius - group.norm(j) - reach;
    if inner < 0 {
        return Err(Error::WindowTooSmall(format!(
            "window {window} cannot hold translate {j} plus range {reach}"
        )));
    }
    let sx = finite_section(kernel, hull, x, window, Boundary::Open)?;
    let jx = hull.act(j, x)?;
    let sj = finite_section(kernel, hull, &jx, window, Boundary::Open)?;
    let mut worst = T::zero();
    for g in group.closed_ball(inner) {
        for h in group.closed_ball(inner) {
            let a = sj.entry(&g, &h).expect("inner site");
            let b = sx.entry(&(&g - j), &(&h - j)).expect("translated site");
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurCheck<T> {
    pub opnorm: T,
    pub bound: T,
    pub ok: bool,
}

/// Operator norm of a section against the `sup_x sum_h |k|` bound.
pub fn schur_bound_check<T: Real, P>(section: &FiniteSection<T, P>, norms: &KernelNorms<T>) -> Result<SchurCheck<T>> {
    let hermitian = section.matrix.hermitian_defect() <= crate::linalg::hermitian_tolerance(&section.matrix);
    let opnorm = if hermitian {
        let ev = section.eigenvalues()?;
        ev.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    } else {
        spectral_norm(&section.matrix)?
    };
    let bound = norms.sup_sum;
    Ok(SchurCheck {
        opnorm,
        bound,
        ok: opnorm <= bound + T::lit(1e-10),
    })
}

/// `(||A^* phi||, (sum_h sup_{g in supp phi} |k((-g)x, h)|) ||phi||)` for a
/// vector supported well inside an open section.
pub fn adjoint_bound<T: Real, K: Kernel<T>>(
    kernel: &K,
    hull: &K::Hull,
    section: &FiniteSection<T, PointOf<T, K>>,
    phi: &[Complex<T>],
) -> Result<(T, T)> {
    let group = section.group;
    let reach = kernel.range_radius(&group);
    let support: Vec<usize> = (0..phi.len()).filter(|&i| phi[i] != Complex::default()).collect();
    if support
        .iter()
        .any(|&i| group.norm(&section.sites[i]) + reach > section.radius)
    {
        return Err(Error::WindowTooSmall("vector support too close to the window edge".into()));
    }
    let lhs = vec_norm(&section.matrix.adjoint_mul_vec(phi));
    let mut coeff = T::zero();
    for h in kernel.range() {
        let mut s = T::zero();
        for &i in &support {
            let gx = hull.act(&-&section.sites[i], &section.base_point)?;
            s = s.max(kernel.entry(&gx, h).norm());
        }
        coeff = coeff + s;
    }
    Ok((lhs, coeff * vec_norm(phi)))
}

/// Which cost term the localization bound uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Kernel norm `sup_sum` times the largest Følner defect over the range.
    CompactRange,
    /// Kernel moment times `t / r`.
    Growth,
}

/// Inputs to the localization bound that do not depend on the sections.
#[derive(Clone, Debug)]
pub struct LocalizeInputs<T> {
    pub norms: KernelNorms<T>,
    pub tent_constant: T,
    pub range: Vec<Site>,
    pub range_radius: i64,
}

impl<T: Real> LocalizeInputs<T> {
    pub fn from_kernel<K: Kernel<T>>(kernel: &K, group: &LatticeGroup, norms: KernelNorms<T>, tent_constant: T) -> Self {
        LocalizeInputs {
            norms,
            tent_constant,
            range: kernel.range().to_vec(),
            range_radius: kernel.range_radius(group),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport<T> {
    pub energy: T,
    /// `||(A_x - E) phi|| / ||phi||`.
    pub eps: T,
    pub r: T,
    pub j: Site,
    pub eta: T,
    /// `||(A_y - E) phi_j|| / ||phi_j||`.
    pub residual_out: T,
    pub rhs_bound: T,
    pub regime: Regime,
    pub candidates: usize,
}

impl<T: Real> LocalizationReport<T> {
    pub fn holds(&self, slack: T) -> bool {
        self.residual_out <= self.rhs_bound + slack
    }
}

/// Translates `j` whose cutoff support, widened by the kernel range, stays
/// inside the window.
fn admissible_translates(group: &LatticeGroup, window_radius: i64, r: i64, reach: i64) -> Vec<Site> {
    let room = window_radius - (r - 1) - reach;
    group.closed_ball(room)
}

fn cutoff_vector<T: Real, P>(section: &FiniteSection<T, P>, r: T, j: &Site, phi: &[Complex<T>]) -> Vec<Complex<T>> {
    section
        .sites
        .iter()
        .zip(phi)
        .map(|(g, v)| *v * tent_value(r, section.group.norm(&(g - j))))
        .collect()
}

/// The admissible translate maximizing `||chi_j phi||`; ties go to the
/// lexicographically smallest `j`.
pub fn select_translate<T: Real, P: Sync>(
    section: &FiniteSection<T, P>,
    phi: &[Complex<T>],
    r: T,
    range_radius: i64,
) -> Result<(Site, usize)> {
    if r < T::one() {
        return invalid("cutoff radius must be at least 1");
    }
    let rc = LatticeGroup::closed_radius(r).unwrap_or(0) + 1;
    let cands = admissible_translates(&section.group, section.radius, rc, range_radius);
    if cands.is_empty() {
        return Err(Error::WindowTooSmall(format!(
            "no translate keeps the radius-{r} cutoff inside the window"
        )));
    }
    let best = cands
        .par_iter()
        .map(|j| (vec_norm(&cutoff_vector(section, r, j, phi)), j))
        .reduce_with(|a, b| match a.0.partial_cmp(&b.0) {
            Some(std::cmp::Ordering::Greater) => a,
            Some(std::cmp::Ordering::Less) => b,
            _ => {
                if a.1 <= b.1 {
                    a
                } else {
                    b
                }
            }
        })
        .expect("non-empty");
    if !(best.0 > T::zero()) {
        return invalid("cutoff kills the vector for every admissible translate");
    }
    Ok((best.1.clone(), cands.len()))
}

/// Transfer an approximate eigenfunction of `A_x` to `A_y` by a translated
/// tent cutoff, reporting the achieved residual and the bound it must obey.
pub fn localize<T: Real, P: Sync>(
    section_x: &FiniteSection<T, P>,
    section_y: &FiniteSection<T, P>,
    energy: T,
    phi: &[Complex<T>],
    r: T,
    regime: Regime,
    inputs: &LocalizeInputs<T>,
) -> Result<LocalizationReport<T>> {
    if section_x.sites != section_y.sites || section_x.boundary != Boundary::Open {
        return invalid("localization needs two open sections on the same window");
    }
    if phi.len() != section_x.size() {
        return Err(Error::DimensionMismatch {
            expected: section_x.size(),
            got: phi.len(),
        });
    }
    let phi_norm = vec_norm(phi);
    if !(phi_norm > T::zero()) {
        return invalid("vector must be non-zero");
    }
    let eps = section_x.residual(energy, phi) / phi_norm;
    let (j, candidates) = select_translate(section_x, phi, r, inputs.range_radius)?;
    let phi_j = cutoff_vector(section_x, r, &j, phi);
    let norm_j = vec_norm(&phi_j);
    let residual_out = section_y.residual(energy, &phi_j) / norm_j;
    let diff = section_y.matrix.sub(&section_x.matrix).mul_vec(&phi_j);
    let diff = vec_norm(&diff) / norm_j;
    let group = section_x.group;
    let (eta, cost) = match regime {
        Regime::Growth => {
            let eta = inputs.tent_constant / r;
            (eta, inputs.norms.moment * eta)
        }
        Regime::CompactRange => {
            let mut eta = group.folner_defect(r, &Site::zero(group.dim))?;
            for h in &inputs.range {
                eta = eta.max(group.folner_defect(r, h)?);
            }
            (eta, inputs.norms.sup_sum * eta)
        }
    };
    Ok(LocalizationReport {
        energy,
        eps,
        r,
        j,
        eta,
        residual_out,
        rhs_bound: diff + cost + T::lit(2.0) * eps,
        regime,
        candidates,
    })
}
