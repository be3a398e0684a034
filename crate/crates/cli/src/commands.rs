use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use dynspec::approx::{
    convergent_slices, fibonacci_levels, holder_fit, scaling_series_with_spectra, Family, Frequency,
    SeriesOptions, SubshiftFamily, TorusFamily,
};
use dynspec::dynamics::{fibonacci_hull, fibonacci_subshift, hull_hausdorff, Hull, HullSet, TorusHull, TorusPoint, TorusSlice};
use dynspec::estimates::{params_for, verify_bound};
use dynspec::kernel::{norms, selfadjointness_defect, Kernel, ModulusNorm, NormRequest, TightBinding, TrigPotential, TrigTerm};
use dynspec::operator::{finite_section, schur_bound_check, Boundary};
use dynspec::spectrum::{hull_union_spectrum, periodic_spectrum, SpectrumOptions};
use dynspec::{AmoKernel64, BandSet64, Error, FibonacciKernel64, LatticeGroup, Site};
use num_complex::Complex;
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::cache::{key, Cache};
use crate::config::{AlphaSpec, ConfigError, ExperimentConfig, ModelKind};

/// Finished without certified violations, or with some.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Violation,
}

/// Keys that determine a spectrum.
const MODEL_KEYS: &[&str] = &[
    "model", "lambda", "hoppings", "potential", "phase_grid", "phase_mode", "theta_mesh", "max_error",
];

fn missing(field: &str, why: &str) -> anyhow::Error {
    ConfigError {
        field: field.to_string(),
        message: why.to_string(),
    }
    .into()
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn open_cache(cfg: &ExperimentConfig) -> Result<Option<Cache>> {
    cfg.cache_dir
        .as_ref()
        .map(|d| Cache::new(d).with_context(|| format!("opening cache {}", d.display())))
        .transpose()
}

fn spectrum_options(cfg: &ExperimentConfig) -> SpectrumOptions<f64> {
    SpectrumOptions {
        phase_grid: cfg.phase_grid,
        mode: cfg.phase_mode,
        theta_mesh: cfg.theta_mesh,
        max_error: cfg.max_error,
    }
}

fn torus_kernel(cfg: &ExperimentConfig) -> Result<TightBinding<f64>> {
    if cfg.model == ModelKind::Amo {
        return Ok(AmoKernel64::amo(cfg.lambda));
    }
    let mut hops = BTreeMap::new();
    for (h, re, im) in &cfg.hoppings {
        hops.insert(Site(vec![*h]), Complex::new(*re, *im));
    }
    let potential = match &cfg.potential {
        None => TrigPotential::cosine(cfg.lambda),
        Some((c, terms)) => TrigPotential {
            constant: *c,
            terms: terms
                .iter()
                .map(|(k, a, b)| TrigTerm {
                    freq: vec![*k],
                    cos: *a,
                    sin: *b,
                })
                .collect(),
        },
    };
    Ok(TightBinding::new(1, hops, potential)?)
}

fn fibonacci_kernel(cfg: &ExperimentConfig) -> Result<FibonacciKernel64> {
    Ok(FibonacciKernel64::fibonacci(
        cfg.lambda,
        LatticeGroup::with_linf(1)?,
        [0, 1],
    )?)
}

/// A rational frequency small enough to diagonalize over one period.
fn rational_alpha(cfg: &ExperimentConfig, field: &str, value: Option<AlphaSpec>) -> Result<Ratio<i64>> {
    match value {
        None => Err(missing(field, "required for this model")),
        Some(AlphaSpec::Irrational(_)) => Err(Error::IrrationalFrequency.into()),
        Some(AlphaSpec::Rational(r)) if *r.denom() > cfg.max_period => Err(Error::IrrationalFrequency)
            .with_context(|| format!("period {} exceeds max_period {}", r.denom(), cfg.max_period)),
        Some(AlphaSpec::Rational(r)) => Ok(r),
    }
}

fn cached(cache: Option<&Cache>, section: &str, compute: impl FnOnce() -> dynspec::Result<BandSet64>) -> Result<BandSet64> {
    match cache {
        None => Ok(compute()?),
        Some(c) => Ok(c.get_or_compute(&key(section), compute)?.0),
    }
}

pub fn spectrum(cfg: &ExperimentConfig) -> Result<Outcome> {
    let cache = open_cache(cfg)?;
    let options = spectrum_options(cfg);
    let section = format!("command=spectrum\n{}", cfg.section(MODEL_KEYS));
    let bands = match cfg.model {
        ModelKind::Amo | ModelKind::Custom => {
            let alpha = rational_alpha(cfg, "alpha", cfg.alpha)?;
            let kernel = torus_kernel(cfg)?;
            let hull = TorusHull::new(1)?;
            let section = format!("{section}alpha={alpha}\ntheta={:?}\n", cfg.theta);
            cached(cache.as_ref(), &section, || match cfg.theta {
                Some(theta) => {
                    let a = *alpha.numer() as f64 / *alpha.denom() as f64;
                    let x = TorusPoint::single(a, theta);
                    periodic_spectrum(&kernel, &hull, &x, &[*alpha.denom()], &options)
                }
                None => hull_union_spectrum(&kernel, &hull, &TorusSlice::single(alpha), &options),
            })?
        }
        ModelKind::Fibonacci => {
            let level = cfg.level.ok_or_else(|| missing("level", "required for model fibonacci"))?;
            let kernel = fibonacci_kernel(cfg)?;
            let hull = fibonacci_subshift(level)?;
            let section = format!("{section}level={level}\n");
            cached(cache.as_ref(), &section, || hull_union_spectrum(&kernel, &hull, &hull, &options))?
        }
    };
    write_out(&cfg.out, "spectrum.json", &bands.to_json()?)?;
    write_out(&cfg.out, "spectrum.csv", &bands.to_csv()?)?;
    write_out(&cfg.out, "config.txt", &cfg.emit())?;
    println!("intervals: {}", bands.intervals.len());
    println!("total_bandwidth: {}", bands.total_bandwidth());
    println!("error_radius: {}", bands.error_radius);
    Ok(Outcome::Clean)
}

/// Memoizes each approximant spectrum in the cache.
struct Cached<'a, F> {
    inner: F,
    cache: Option<&'a Cache>,
    section: String,
}

impl<F: Family<f64>> Family<f64> for Cached<'_, F> {
    type Item = F::Item;

    fn label(&self, item: &Self::Item) -> String {
        self.inner.label(item)
    }

    fn hull_set(&self, item: &Self::Item) -> HullSet {
        self.inner.hull_set(item)
    }

    fn spectrum(&self, item: &Self::Item, options: &SpectrumOptions<f64>) -> dynspec::Result<BandSet64> {
        let Some(cache) = self.cache else {
            return self.inner.spectrum(item, options);
        };
        let section = format!("command=holder\n{}item={}\noptions={:?}\n", self.section, self.label(item), options);
        cache
            .get_or_compute(&key(&section), || self.inner.spectrum(item, options))
            .map(|(b, _)| b)
    }

    fn certified(&self) -> bool {
        self.inner.certified()
    }
}

pub fn holder(cfg: &ExperimentConfig) -> Result<Outcome> {
    let cache = open_cache(cfg)?;
    let options = SeriesOptions {
        spectrum: spectrum_options(cfg),
        window: cfg.window,
        min_admitted: cfg.min_admitted,
        max_refinements: cfg.max_refinements,
    };
    let section = cfg.section(MODEL_KEYS);
    let (series, params) = match cfg.model {
        ModelKind::Amo | ModelKind::Custom => {
            let alpha = cfg.alpha.map(|a| a.frequency()).unwrap_or(Frequency::Golden);
            let (a, b) = cfg.levels.unwrap_or((3, 10));
            if b <= a {
                return Err(missing("levels", "need at least 2 approximants"));
            }
            let slices = convergent_slices(alpha, a, b)?;
            let kernel = torus_kernel(cfg)?;
            let hull = TorusHull::new(1)?;
            let params = params_for(&kernel, &hull, cfg.action_constant, cfg.r_max)?;
            let family = Cached {
                inner: TorusFamily { kernel },
                cache: cache.as_ref(),
                section,
            };
            (scaling_series_with_spectra(&family, &slices, &options)?.0, params)
        }
        ModelKind::Fibonacci => {
            let (a, b) = cfg.levels.unwrap_or((2, 12));
            if b <= a {
                return Err(missing("levels", "need at least 2 approximants"));
            }
            let (names, items) = fibonacci_levels(a, b)?;
            let kernel = fibonacci_kernel(cfg)?;
            let params = params_for(&kernel, &fibonacci_hull(64)?, cfg.action_constant, cfg.r_max)?;
            let family = Cached {
                inner: SubshiftFamily { kernel, names },
                cache: cache.as_ref(),
                section,
            };
            (scaling_series_with_spectra(&family, &items, &options)?.0, params)
        }
    };
    let report = verify_bound(&series, &params, params.kind())?;
    let fit = holder_fit(&series);
    let fit_json = match &fit {
        Ok(f) => serde_json::to_string_pretty(f)?,
        Err(e) => serde_json::to_string_pretty(&json!({ "error": e.to_string() }))?,
    };
    write_out(&cfg.out, "series.csv", &series.to_csv()?)?;
    write_out(&cfg.out, "fit.json", &fit_json)?;
    write_out(&cfg.out, "bound.json", &report.to_json()?)?;
    write_out(&cfg.out, "config.txt", &cfg.emit())?;
    print!("{}", report.table());
    match fit {
        Ok(f) => println!("slope: {} (r^2 = {}, {} points)", f.slope, f.r_squared, f.n_points),
        Err(e) => println!("slope: unavailable ({e})"),
    }
    Ok(if report.certified_violations() > 0 {
        Outcome::Violation
    } else {
        Outcome::Clean
    })
}

pub fn folner(cfg: &ExperimentConfig) -> Result<Outcome> {
    let group = LatticeGroup::new(cfg.dimension, cfg.norm)?;
    let growth = group.growth_constants(cfg.r_max)?;
    let mut out = String::from("dimension,r,h,norm_h,defect,bound,ok\n");
    let mut violations = 0;
    let mut rows = 0;
    for &r in &cfg.radii {
        if !growth.covers(r) {
            return Err(missing("radii", &format!("radius {r} lies outside [1, r_max]")));
        }
        for (h, defect) in group.folner_profile(r)? {
            let n = group.norm(&h);
            let bound = growth.t / r * n as f64;
            let ok = defect <= bound + 1e-12;
            violations += usize::from(!ok);
            rows += 1;
            let coords: Vec<String> = h.0.iter().map(i64::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                cfg.dimension,
                r,
                coords.join(" "),
                n,
                defect,
                bound,
                ok
            ));
        }
    }
    write_out(&cfg.out, "folner.csv", &out)?;
    write_out(&cfg.out, "config.txt", &cfg.emit())?;
    println!("t: {}", growth.t);
    println!("rows: {rows}");
    println!("violations: {violations}");
    Ok(if violations > 0 {
        Outcome::Violation
    } else {
        Outcome::Clean
    })
}

pub fn hulldist(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (x, y) = match cfg.model {
        ModelKind::Amo | ModelKind::Custom => {
            let a = rational_alpha(cfg, "alpha", cfg.alpha)?;
            let b = rational_alpha(cfg, "alpha2", cfg.alpha2)?;
            (HullSet::Slice(TorusSlice::single(a)), HullSet::Slice(TorusSlice::single(b)))
        }
        ModelKind::Fibonacci => {
            let a = cfg.level.ok_or_else(|| missing("level", "required for model fibonacci"))?;
            let b = cfg.level2.ok_or_else(|| missing("level2", "required for model fibonacci"))?;
            (
                HullSet::Subshift(fibonacci_subshift(a)?),
                HullSet::Subshift(fibonacci_subshift(b)?),
            )
        }
    };
    let pair = hull_hausdorff::<f64>(&x, &y, cfg.window)?;
    write_out(&cfg.out, "hulldist.json", &serde_json::to_string_pretty(&pair)?)?;
    write_out(&cfg.out, "config.txt", &cfg.emit())?;
    println!("dh: {}", pair.dh);
    println!("directed: {} {}", pair.directed.0, pair.directed.1);
    println!("certified: {}", pair.certified);
    Ok(Outcome::Clean)
}

fn normcheck_for<K: Kernel<f64>>(kernel: &K, hull: &K::Hull, radius: f64) -> Result<(serde_json::Value, bool)> {
    let analytic = norms(kernel, hull, NormRequest::default())?;
    let sampled = norms(kernel, hull, NormRequest::Sampled { samples: 4096, seed: 0 })?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = hull.random_point(&mut rng);
    let section = finite_section(kernel, hull, &x, radius, Boundary::Open)?;
    let schur = schur_bound_check(&section, &analytic)?;
    let defect: f64 = selfadjointness_defect(kernel, hull, 64, 3, 0)?;
    let modulus = match kernel.regularity().summary() {
        ModulusNorm::L1(v) => json!({ "kind": "lipschitz_l1", "value": v }),
        ModulusNorm::Sup(v) => json!({ "kind": "locally_constant_sup", "value": v }),
    };
    let report = json!({
        "sup_sum": analytic.sup_sum,
        "moment": analytic.moment,
        "certified": analytic.certified(),
        "sampled_sup_sum": sampled.sup_sum,
        "sampled_moment": sampled.moment,
        "modulus": modulus,
        "section_size": section.size(),
        "schur": { "opnorm": schur.opnorm, "bound": schur.bound, "ok": schur.ok },
        "selfadjointness_defect": defect,
    });
    Ok((report, analytic.certified() && !schur.ok))
}

pub fn normcheck(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (report, violated) = match cfg.model {
        ModelKind::Amo | ModelKind::Custom => {
            let kernel = torus_kernel(cfg)?;
            normcheck_for(&kernel, &TorusHull::new(1)?, cfg.section_radius)?
        }
        ModelKind::Fibonacci => {
            let kernel = fibonacci_kernel(cfg)?;
            normcheck_for(&kernel, &fibonacci_hull(4096)?, cfg.section_radius)?
        }
    };
    let text = serde_json::to_string_pretty(&report)?;
    write_out(&cfg.out, "normcheck.json", &text)?;
    write_out(&cfg.out, "config.txt", &cfg.emit())?;
    println!("{text}");
    Ok(if violated { Outcome::Violation } else { Outcome::Clean })
}
