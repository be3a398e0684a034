//! Flat `key = value` experiment configuration.
//!
//! Values come from defaults, then the config file, then command-line
//! flags. Every run writes the fully resolved set back out.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use dynspec::approx::Frequency;
use dynspec::spectrum::PhaseMode;
use num_rational::Ratio;

/// Every recognised key with its default, in output order.
pub const KEYS: &[(&str, &str)] = &[
    ("model", "amo"),
    ("lambda", "1"),
    ("hoppings", "1:1,-1:1"),
    ("potential", ""),
    ("alpha", ""),
    ("alpha2", ""),
    ("theta", ""),
    ("level", ""),
    ("level2", ""),
    ("levels", ""),
    ("dimension", "1"),
    ("norm", "linf"),
    ("radii", "1,2,4,8,16,32,64"),
    ("phase_grid", "64"),
    ("phase_mode", "auto"),
    ("theta_mesh", ""),
    ("max_error", ""),
    ("window", "256"),
    ("min_admitted", "6"),
    ("max_refinements", "2"),
    ("max_period", "4096"),
    ("action_constant", "1"),
    ("r_max", "512"),
    ("section_radius", "20"),
    ("out", "dynspec-out"),
    ("cache_dir", ""),
];

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid value for `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Raw key-value layer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig(pub BTreeMap<String, String>);

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(bad(&format!("line {}", n + 1), "expected `key = value`"));
            };
            let k = k.trim().replace('-', "_");
            check_key(&k)?;
            map.insert(k, v.trim().to_string());
        }
        Ok(RawConfig(map))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.replace('-', "_");
        check_key(&key)?;
        self.0.insert(key, value.trim().to_string());
        Ok(())
    }

    fn get(&self, key: &str) -> &str {
        self.0
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).unwrap_or(""))
    }
}

fn check_key(k: &str) -> Result<(), ConfigError> {
    if KEYS.iter().any(|(key, _)| *key == k) {
        Ok(())
    } else {
        Err(bad(k, "unknown configuration key"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Amo,
    Fibonacci,
    Custom,
}

/// Frequency as written: exact fraction, exact decimal, or a named
/// irrational.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSpec {
    Rational(Ratio<i64>),
    Irrational(Frequency),
}

impl AlphaSpec {
    pub fn frequency(&self) -> Frequency {
        match self {
            AlphaSpec::Rational(r) => Frequency::Exact(*r),
            AlphaSpec::Irrational(f) => *f,
        }
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::Rational(r) => write!(f, "{r}"),
            AlphaSpec::Irrational(Frequency::Golden) => write!(f, "golden"),
            AlphaSpec::Irrational(Frequency::Silver) => write!(f, "silver"),
            AlphaSpec::Irrational(x) => write!(f, "{}", x.value()),
        }
    }
}

pub fn parse_alpha(field: &str, s: &str) -> Result<AlphaSpec, ConfigError> {
    let s = s.trim();
    match s {
        "golden" => return Ok(AlphaSpec::Irrational(Frequency::Golden)),
        "silver" => return Ok(AlphaSpec::Irrational(Frequency::Silver)),
        _ => {}
    }
    let r = parse_ratio(field, s)?;
    Ok(AlphaSpec::Rational(r))
}

/// `p/q`, an integer, or a terminating decimal, all taken exactly.
pub fn parse_ratio(field: &str, s: &str) -> Result<Ratio<i64>, ConfigError> {
    let err = || bad(field, format!("`{s}` is not a fraction or decimal"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| err())?;
        let q: i64 = q.trim().parse().map_err(|_| err())?;
        if q == 0 {
            return Err(bad(field, "zero denominator"));
        }
        return Ok(Ratio::new(p, q));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    if frac.len() > 15 {
        return Err(bad(field, "too many decimal digits for an exact fraction"));
    }
    let den = 10i64.pow(frac.len() as u32);
    let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
    let frac_v: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| err())? };
    let num = int
        .checked_mul(den)
        .and_then(|v| v.checked_add(frac_v))
        .ok_or_else(err)?;
    Ok(Ratio::new(sign * num, den))
}

fn num<T: FromStr>(raw: &RawConfig, field: &str) -> Result<T, ConfigError> {
    let v = raw.get(field);
    v.parse()
        .map_err(|_| bad(field, format!("`{v}` is not a valid number")))
}

fn opt_num<T: FromStr>(raw: &RawConfig, field: &str) -> Result<Option<T>, ConfigError> {
    if raw.get(field).is_empty() {
        Ok(None)
    } else {
        num(raw, field).map(Some)
    }
}

/// `a..b` (inclusive) or a single value.
fn parse_range(field: &str, s: &str) -> Result<(usize, usize), ConfigError> {
    let err = || bad(field, format!("`{s}` is not a range `a..b`"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| err())?, b.trim().parse().map_err(|_| err())?),
        None => {
            let v = s.trim().parse().map_err(|_| err())?;
            (v, v)
        }
    };
    if a < 1 || b < a {
        return Err(bad(field, "need 1 <= a <= b"));
    }
    Ok((a, b))
}

/// One `h:re[:im]` entry per comma.
fn parse_hoppings(s: &str) -> Result<Vec<(i64, f64, f64)>, ConfigError> {
    let field = "hoppings";
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let parts: Vec<&str> = p.split(':').map(str::trim).collect();
            let err = || bad(field, format!("`{p}` is not `h:re[:im]`"));
            if parts.len() < 2 || parts.len() > 3 {
                return Err(err());
            }
            let h = parts[0].parse().map_err(|_| err())?;
            let re = parts[1].parse().map_err(|_| err())?;
            let im = if parts.len() == 3 {
                parts[2].parse().map_err(|_| err())?
            } else {
                0.0
            };
            Ok((h, re, im))
        })
        .collect()
}

/// `c; k:a:b; ...` for `c + sum a cos(2 pi k theta) + b sin(2 pi k theta)`.
fn parse_potential(s: &str) -> Result<(f64, Vec<(i64, f64, f64)>), ConfigError> {
    let field = "potential";
    let mut parts = s.split(';').map(str::trim);
    let c = match parts.next() {
        Some("") | None => 0.0,
        Some(v) => v
            .parse()
            .map_err(|_| bad(field, format!("`{v}` is not a constant term")))?,
    };
    let mut terms = Vec::new();
    for p in parts.filter(|p| !p.is_empty()) {
        let v: Vec<&str> = p.split(':').map(str::trim).collect();
        let err = || bad(field, format!("`{p}` is not `k:a:b`"));
        if v.len() != 3 {
            return Err(err());
        }
        terms.push((
            v[0].parse().map_err(|_| err())?,
            v[1].parse().map_err(|_| err())?,
            v[2].parse().map_err(|_| err())?,
        ));
    }
    Ok((c, terms))
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub lambda: f64,
    pub hoppings: Vec<(i64, f64, f64)>,
    pub potential: Option<(f64, Vec<(i64, f64, f64)>)>,
    pub alpha: Option<AlphaSpec>,
    pub alpha2: Option<AlphaSpec>,
    pub theta: Option<f64>,
    pub level: Option<usize>,
    pub level2: Option<usize>,
    pub levels: Option<(usize, usize)>,
    pub dimension: usize,
    pub norm: dynspec::NormKind,
    pub radii: Vec<f64>,
    pub phase_grid: usize,
    pub phase_mode: PhaseMode,
    pub theta_mesh: Option<f64>,
    pub max_error: Option<f64>,
    pub window: i64,
    pub min_admitted: usize,
    pub max_refinements: usize,
    pub max_period: i64,
    pub action_constant: f64,
    pub r_max: f64,
    pub section_radius: f64,
    pub out: PathBuf,
    pub cache_dir: Option<PathBuf>,
    /// The raw layer with defaults filled, for emission.
    pub resolved: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn resolve(raw: &RawConfig) -> Result<Self, ConfigError> {
        let model = match raw.get("model") {
            "amo" => ModelKind::Amo,
            "fibonacci" => ModelKind::Fibonacci,
            "custom" => ModelKind::Custom,
            other => return Err(bad("model", format!("`{other}` is not amo, fibonacci or custom"))),
        };
        let lambda: f64 = num(raw, "lambda")?;
        if !lambda.is_finite() {
            return Err(bad("lambda", "must be finite"));
        }
        let alpha = match raw.get("alpha") {
            "" => None,
            s => Some(parse_alpha("alpha", s)?),
        };
        let alpha2 = match raw.get("alpha2") {
            "" => None,
            s => Some(parse_alpha("alpha2", s)?),
        };
        for (name, a) in [("alpha", &alpha), ("alpha2", &alpha2)] {
            if let Some(AlphaSpec::Rational(r)) = a {
                if *r < Ratio::from_integer(0) || *r >= Ratio::from_integer(1) {
                    return Err(bad(name, "must lie in [0, 1)"));
                }
            }
        }
        let theta: Option<f64> = opt_num(raw, "theta")?;
        let levels = match raw.get("levels") {
            "" => None,
            s => Some(parse_range("levels", s)?),
        };
        let positive_level = |field: &str| -> Result<Option<usize>, ConfigError> {
            let v: Option<usize> = opt_num(raw, field)?;
            if v == Some(0) {
                return Err(bad(field, "levels start at 1"));
            }
            Ok(v)
        };
        let level = positive_level("level")?;
        let level2 = positive_level("level2")?;
        let dimension: usize = num(raw, "dimension")?;
        if !(1..=3).contains(&dimension) {
            return Err(bad("dimension", "must be 1, 2 or 3"));
        }
        let norm = match raw.get("norm") {
            "linf" => dynspec::NormKind::Linf,
            "l1" => dynspec::NormKind::L1,
            other => return Err(bad("norm", format!("`{other}` is not linf or l1"))),
        };
        let radii = raw
            .get("radii")
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|r| *r >= 1.0 && r.is_finite())
                    .ok_or_else(|| bad("radii", format!("`{s}` is not a radius >= 1")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let phase_grid: usize = num(raw, "phase_grid")?;
        if phase_grid < 2 {
            return Err(bad("phase_grid", "must be at least 2"));
        }
        let phase_mode = match raw.get("phase_mode") {
            "auto" => PhaseMode::Auto,
            "grid" => PhaseMode::Grid,
            other => return Err(bad("phase_mode", format!("`{other}` is not auto or grid"))),
        };
        let theta_mesh: Option<f64> = opt_num(raw, "theta_mesh")?;
        if theta_mesh.is_some_and(|m| !(m > 0.0 && m <= 1.0)) {
            return Err(bad("theta_mesh", "must lie in (0, 1]"));
        }
        let max_error: Option<f64> = opt_num(raw, "max_error")?;
        if max_error.is_some_and(|m| !(m > 0.0)) {
            return Err(bad("max_error", "must be positive"));
        }
        let window: i64 = num(raw, "window")?;
        if window < 1 {
            return Err(bad("window", "must be at least 1"));
        }
        let max_period: i64 = num(raw, "max_period")?;
        let action_constant: f64 = num(raw, "action_constant")?;
        if !(action_constant >= 0.0) {
            return Err(bad("action_constant", "must be non-negative"));
        }
        let r_max: f64 = num(raw, "r_max")?;
        if !(r_max >= 2.0) {
            return Err(bad("r_max", "must be at least 2"));
        }
        let section_radius: f64 = num(raw, "section_radius")?;
        if !(section_radius >= 1.0) {
            return Err(bad("section_radius", "must be at least 1"));
        }
        let hoppings = parse_hoppings(raw.get("hoppings"))?;
        let potential = match raw.get("potential") {
            "" => None,
            s => Some(parse_potential(s)?),
        };
        let cache_dir = match raw.get("cache_dir") {
            "" => std::env::var_os("DYNSPEC_CACHE_DIR").map(PathBuf::from),
            s => Some(PathBuf::from(s)),
        };
        let mut resolved: BTreeMap<String, String> = KEYS
            .iter()
            .map(|(k, _)| (k.to_string(), raw.get(k).to_string()))
            .collect();
        // the cache location does not change results
        resolved.remove("cache_dir");
        Ok(ExperimentConfig {
            model,
            lambda,
            hoppings,
            potential,
            alpha,
            alpha2,
            theta,
            level,
            level2,
            levels,
            dimension,
            norm,
            radii,
            phase_grid,
            phase_mode,
            theta_mesh,
            max_error,
            window,
            min_admitted: num(raw, "min_admitted")?,
            max_refinements: num(raw, "max_refinements")?,
            max_period,
            action_constant,
            r_max,
            section_radius,
            out: PathBuf::from(raw.get("out")),
            cache_dir,
            resolved,
        })
    }

    /// `key = value` lines in key order.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.resolved {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Resolved entries restricted to `keys`, for cache keys.
    pub fn section(&self, keys: &[&str]) -> String {
        keys.iter()
            .map(|k| format!("{k}={}\n", self.resolved.get(*k).map(String::as_str).unwrap_or("")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_decimals_are_exact() {
        assert_eq!(parse_ratio("alpha", "377/610").unwrap(), Ratio::new(377, 610));
        assert_eq!(parse_ratio("alpha", "0.25").unwrap(), Ratio::new(1, 4));
        assert_eq!(parse_ratio("alpha", "-1.5").unwrap(), Ratio::new(-3, 2));
        assert!(parse_ratio("alpha", "1/0").is_err());
        assert!(parse_ratio("alpha", "abc").is_err());
        assert!(matches!(parse_alpha("alpha", "golden").unwrap(), AlphaSpec::Irrational(_)));
    }

    #[test]
    fn file_then_flags() {
        let mut raw = RawConfig::parse("# comment\nmodel = fibonacci\nlambda = 2 # trailing\n").unwrap();
        raw.set("lambda", "3").unwrap();
        let c = ExperimentConfig::resolve(&raw).unwrap();
        assert_eq!(c.model, ModelKind::Fibonacci);
        assert_eq!(c.lambda, 3.0);
        assert!(c.emit().contains("lambda = 3\n"));
        assert!(c.emit().contains("phase_grid = 64\n"));
    }

    #[test]
    fn errors_name_the_field() {
        let e = RawConfig::parse("bogus = 1").unwrap_err();
        assert_eq!(e.field, "bogus");
        let raw = RawConfig::parse("phase_grid = 1").unwrap();
        assert_eq!(ExperimentConfig::resolve(&raw).unwrap_err().field, "phase_grid");
        let raw = RawConfig::parse("levels = 5..3").unwrap();
        assert_eq!(ExperimentConfig::resolve(&raw).unwrap_err().field, "levels");
        let raw = RawConfig::parse("alpha = 3/2").unwrap();
        assert_eq!(ExperimentConfig::resolve(&raw).unwrap_err().field, "alpha");
    }

    #[test]
    fn model_strings() {
        let (c, t) = parse_potential("0.5; 1:2:0").unwrap();
        assert_eq!((c, t), (0.5, vec![(1, 2.0, 0.0)]));
        assert_eq!(parse_hoppings("1:1,-1:1:0.5").unwrap(), vec![(1, 1.0, 0.0), (-1, 1.0, 0.5)]);
    }
}
