//! Scenario configuration: flat `key = value` text with dotted prefixes.
//!
//! ```text
//! # comment
//! name = decay-demo
//! model.kind = oscillator
//! model.levels = 8
//! lindblad.kind = function
//! lindblad.functions = 0, 1
//! initial.kind = coherent
//! initial.indices = 0, 1
//! initial.amplitudes = 0.7071067811865476, 0.7071067811865476
//! time.t1 = 5
//! time.steps = 5000
//! ```
//!
//! Every problem in a file is collected and reported together.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use susy_fgkls::{DerivativeScheme, ExampleLindbladSpec, Polynomial, Profile, TimeGrid};

/// Normalization tolerance for weights and amplitudes.
const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum UnitaryConfig {
    Identity,
    /// Product of neighbouring Givens rotations by the angle.
    Rotation(f64),
    /// Haar-random from the seed.
    Random(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelConfig {
    Oscillator { levels: usize },
    Spectral { energies: Vec<f64>, unitary: UnitaryConfig, zero_level: bool },
    Grid { half_width: f64, points: usize, superpotential: Vec<f64>, scheme: DerivativeScheme },
}

impl ModelConfig {
    pub fn dim(&self) -> usize {
        match self {
            ModelConfig::Oscillator { levels } => *levels,
            ModelConfig::Spectral { energies, zero_level, .. } => energies.len() + usize::from(*zero_level),
            ModelConfig::Grid { points, .. } => *points,
        }
    }
}

/// Initial partner-1 state, indices into the level basis (zero modes first,
/// then positive levels in ascending energy).
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Pure(usize),
    Mixture(Vec<f64>),
    Coherent { indices: Vec<usize>, amplitudes: Vec<Complex64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolveWhich {
    Partner1,
    Partner2,
    Both,
}

impl EvolveWhich {
    pub fn partner1(self) -> bool {
        matches!(self, EvolveWhich::Partner1 | EvolveWhich::Both)
    }

    pub fn partner2(self) -> bool {
        matches!(self, EvolveWhich::Partner2 | EvolveWhich::Both)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub model: ModelConfig,
    /// `None` for a closed system.
    pub lindblad: Option<ExampleLindbladSpec>,
    pub initial: InitialState,
    pub time: TimeGrid,
    pub evolve: EvolveWhich,
    pub output_dir: Option<PathBuf>,
    /// `(m, n)` coefficient columns of the trajectory files.
    pub coefficients: Vec<(usize, usize)>,
    pub tolerances: BTreeMap<String, f64>,
}

impl ScenarioConfig {
    pub fn dim(&self) -> usize {
        self.model.dim()
    }
}

/// Default coefficient columns: all `m ≤ n ≤ 3` that fit the dimension.
pub fn default_coefficients(dim: usize) -> Vec<(usize, usize)> {
    let top = dim.min(4);
    (0..top).flat_map(|m| (m..top).map(move |n| (m, n))).collect()
}

/// Every problem found while parsing one file.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration error(s)", self.0.len())?;
        for e in &self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const KNOWN_KEYS: &[&str] = &[
    "name",
    "model.kind",
    "model.levels",
    "model.energies",
    "model.unitary",
    "model.theta",
    "model.seed",
    "model.zero_level",
    "model.half_width",
    "model.points",
    "model.superpotential",
    "model.scheme",
    "lindblad.kind",
    "lindblad.functions",
    "lindblad.gamma1",
    "lindblad.gamma2",
    "lindblad.levels",
    "lindblad.delta",
    "initial.kind",
    "initial.index",
    "initial.weights",
    "initial.indices",
    "initial.amplitudes",
    "time.t0",
    "time.t1",
    "time.steps",
    "time.sample_every",
    "evolve",
    "output.dir",
    "output.coefficients",
];

/// Names accepted by `tolerance.<name>`.
pub const TOLERANCE_NAMES: &[&str] = &[
    "intertwining",
    "zero_mode_annihilation",
    "isospectrality",
    "superalgebra_conservation",
    "superalgebra_factorization",
    "normalized_anticommutator",
    "density_round_trip",
    "trace_identity",
    "density_intertwining",
    "super_density",
    "lindblad_intertwining",
    "lindblad_dissipation_intertwining",
    "super_lindblad_intertwining",
    "super_lindblad_normalized",
    "super_lindblad_hermitian",
    "trace_conservation",
    "positivity",
    "lindbladian_trace",
    "entropy_bounds",
    "exact_propagator",
    "analytic_coefficients",
    "coefficient_equation",
    "projector_lindbladian",
    "partner_evolution_discrepancy",
];

struct Fields {
    values: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.values.remove(key)
    }

    fn parsed<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (line, raw) = self.take(key)?;
        match parse(&raw) {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("line {line}: `{key}`: {e}"));
                None
            }
        }
    }

    fn required<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        if !self.values.contains_key(key) {
            self.errors.push(format!("missing required key `{key}`"));
            return None;
        }
        self.parsed(key, parse)
    }

    fn error(&mut self, message: String) {
        self.errors.push(message);
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not a non-negative integer", s.trim()))
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not a non-negative integer", s.trim()))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    split_top_level(s).iter().map(|p| item(p)).collect()
}

/// Splits on commas outside parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(current.trim().to_string());
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(ch);
    }
    parts.push(current.trim().to_string());
    parts
}

/// Complex literal: `1.5`, `-2i`, `i`, `0.3-0.4i`, `1e-3+2e-1i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("`{}` is not a complex number", s.trim());
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return parse_f64(&t).map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |p: &str| -> Result<f64, String> {
        match p {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => parse_f64(p).map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => {
            let re = parse_f64(&body[..k]).map_err(|_| bad())?;
            Ok(Complex64::new(re, imag(&body[k..])?))
        }
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// `<complex>`, `ramp(start, end, rate)` or `sin(offset, amplitude, frequency, phase)`.
pub fn parse_profile(s: &str) -> Result<Profile, String> {
    let t = s.trim();
    let args = |prefix: &str| -> Option<Vec<String>> {
        let inner = t.strip_prefix(prefix)?.trim_start().strip_prefix('(')?.strip_suffix(')')?;
        Some(split_top_level(inner))
    };
    if let Some(a) = args("ramp") {
        if a.len() != 3 {
            return Err("ramp takes (start, end, rate)".into());
        }
        return Ok(Profile::ExponentialRamp {
            start: parse_complex(&a[0])?,
            end: parse_complex(&a[1])?,
            rate: parse_f64(&a[2])?,
        });
    }
    if let Some(a) = args("sin") {
        if a.len() != 4 {
            return Err("sin takes (offset, amplitude, frequency, phase)".into());
        }
        return Ok(Profile::Sinusoid {
            offset: parse_complex(&a[0])?,
            amplitude: parse_complex(&a[1])?,
            frequency: parse_f64(&a[2])?,
            phase: parse_f64(&a[3])?,
        });
    }
    parse_complex(t).map(Profile::Constant)
}

/// `c0, c1, ...; d0, d1, ...`: ascending coefficients, one polynomial per
/// `;`-separated group.
fn parse_polynomials(s: &str) -> Result<Vec<Polynomial>, String> {
    let polys: Vec<Polynomial> =
        s.split(';').map(|group| parse_list(group, parse_f64).map(Polynomial::new)).collect::<Result<_, _>>()?;
    if polys.iter().any(|p| p.coefficients().is_empty()) {
        return Err("empty polynomial".into());
    }
    Ok(polys)
}

/// `m:n` pairs separated by commas.
fn parse_pairs(s: &str) -> Result<Vec<(usize, usize)>, String> {
    parse_list(s, |p| {
        let (m, n) = p.split_once(':').ok_or_else(|| format!("`{p}` is not an `m:n` pair"))?;
        Ok((parse_usize(m)?, parse_usize(n)?))
    })
}

fn lines(text: &str, errors: &mut Vec<String>) -> BTreeMap<String, (usize, String)> {
    let mut values = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(format!("line {line}: expected `key = value`"));
            continue;
        };
        let key = key.trim().to_string();
        if values.insert(key.clone(), (line, value.trim().to_string())).is_some() {
            errors.push(format!("line {line}: duplicate key `{key}`"));
        }
    }
    values
}

/// Parses and validates a scenario, returning every problem at once.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let values = lines(text, &mut errors);
    let mut f = Fields { values, errors };

    let mut tolerances = BTreeMap::new();
    let tolerance_keys: Vec<String> = f.values.keys().filter(|k| k.starts_with("tolerance.")).cloned().collect();
    for key in tolerance_keys {
        let name = key["tolerance.".len()..].to_string();
        if !TOLERANCE_NAMES.contains(&name.as_str()) {
            let (line, _) = f.take(&key).unwrap();
            f.error(format!("line {line}: unknown tolerance `{name}`"));
            continue;
        }
        if let Some(v) = f.parsed(&key, parse_f64) {
            if v < 0.0 {
                f.error(format!("`{key}` must be non-negative (got {v})"));
            }
            tolerances.insert(name, v);
        }
    }
    let unknown: Vec<(String, usize)> = f
        .values
        .iter()
        .filter(|(k, _)| !KNOWN_KEYS.contains(&k.as_str()))
        .map(|(k, (line, _))| (k.clone(), *line))
        .collect();
    for (key, line) in unknown {
        f.take(&key);
        f.error(format!("line {line}: unknown key `{key}`"));
    }

    let name = f.take("name").map(|(_, v)| v);
    let model = parse_model(&mut f);
    let dim = model.as_ref().map(ModelConfig::dim);
    let lindblad = parse_lindblad(&mut f, dim);
    let initial = parse_initial(&mut f, dim);
    let time = parse_time(&mut f);
    let evolve = f
        .parsed("evolve", |s| match s {
            "partner1" => Ok(EvolveWhich::Partner1),
            "partner2" => Ok(EvolveWhich::Partner2),
            "both" => Ok(EvolveWhich::Both),
            other => Err(format!("`{other}` is not one of partner1, partner2, both")),
        })
        .unwrap_or(EvolveWhich::Partner1);
    let output_dir = f.take("output.dir").map(|(_, v)| PathBuf::from(v));
    let coefficients = f.parsed("output.coefficients", parse_pairs);
    if let (Some(pairs), Some(dim)) = (&coefficients, dim) {
        if let Some(&(m, n)) = pairs.iter().find(|&&(m, n)| m >= dim || n >= dim) {
            f.error(format!("`output.coefficients`: index pair {m}:{n} outside dimension {dim}"));
        }
    }

    for (key, (line, _)) in std::mem::take(&mut f.values) {
        f.error(format!("line {line}: key `{key}` does not apply to this scenario"));
    }

    match (f.errors.is_empty(), model, lindblad, initial, time) {
        (true, Some(model), Some(lindblad), Some(initial), Some(time)) => {
            let coefficients = coefficients.unwrap_or_else(|| default_coefficients(model.dim()));
            Ok(ScenarioConfig { name, model, lindblad, initial, time, evolve, output_dir, coefficients, tolerances })
        }
        _ => Err(ConfigErrors(f.errors)),
    }
}

fn parse_model(f: &mut Fields) -> Option<ModelConfig> {
    let kind = f.required("model.kind", |s| Ok(s.to_string()))?;
    match kind.as_str() {
        "oscillator" => {
            let levels = f.required("model.levels", parse_usize)?;
            if levels < 2 {
                f.error(format!("`model.levels` must be at least 2 (got {levels})"));
                return None;
            }
            Some(ModelConfig::Oscillator { levels })
        }
        "spectral" => {
            let energies = f.required("model.energies", |s| parse_list(s, parse_f64));
            let zero_level = f.parsed("model.zero_level", parse_bool).unwrap_or(false);
            let unitary_kind = f.parsed("model.unitary", |s| Ok(s.to_string())).unwrap_or_else(|| "identity".into());
            let unitary = match unitary_kind.as_str() {
                "identity" => Some(UnitaryConfig::Identity),
                "rotation" => f.required("model.theta", parse_f64).map(UnitaryConfig::Rotation),
                "random" => Some(UnitaryConfig::Random(f.parsed("model.seed", parse_u64).unwrap_or(0))),
                other => {
                    f.error(format!("`model.unitary`: `{other}` is not one of identity, rotation, random"));
                    None
                }
            };
            let energies = energies?;
            if energies.is_empty() {
                f.error("`model.energies` must list at least one energy".into());
                return None;
            }
            if energies.iter().any(|&e| e <= 0.0) {
                f.error("`model.energies` must be strictly positive".into());
                return None;
            }
            if energies.windows(2).any(|w| w[1] <= w[0]) {
                f.error("`model.energies` must be strictly increasing".into());
                return None;
            }
            Some(ModelConfig::Spectral { energies, unitary: unitary?, zero_level })
        }
        "grid" => {
            let half_width = f.required("model.half_width", parse_f64);
            let points = f.required("model.points", parse_usize);
            let superpotential = f.required("model.superpotential", |s| parse_list(s, parse_f64));
            let scheme = f
                .parsed("model.scheme", |s| match s {
                    "sinc" => Ok(DerivativeScheme::Sinc),
                    "central" => Ok(DerivativeScheme::Central),
                    other => Err(format!("`{other}` is not one of sinc, central")),
                })
                .unwrap_or_default();
            let (half_width, points, superpotential) = (half_width?, points?, superpotential?);
            let mut ok = true;
            if half_width <= 0.0 {
                f.error(format!("`model.half_width` must be positive (got {half_width})"));
                ok = false;
            }
            if points < 3 {
                f.error(format!("`model.points` must be at least 3 (got {points})"));
                ok = false;
            }
            if superpotential.is_empty() {
                f.error("`model.superpotential` needs at least one coefficient".into());
                ok = false;
            }
            ok.then_some(ModelConfig::Grid { half_width, points, superpotential, scheme })
        }
        other => {
            f.error(format!("`model.kind`: `{other}` is not one of oscillator, spectral, grid"));
            None
        }
    }
}

fn parse_lindblad(f: &mut Fields, dim: Option<usize>) -> Option<Option<ExampleLindbladSpec>> {
    let kind = f.parsed("lindblad.kind", |s| Ok(s.to_string())).unwrap_or_else(|| "none".into());
    match kind.as_str() {
        "none" => Some(None),
        "function" => {
            let fs = f.required("lindblad.functions", parse_polynomials)?;
            Some(Some(ExampleLindbladSpec::FunctionOfH(fs)))
        }
        "projector" => {
            let g1 = f.required("lindblad.gamma1", parse_profile);
            let g2 = f.required("lindblad.gamma2", parse_profile);
            let levels = f.parsed("lindblad.levels", |s| parse_list(s, parse_usize)).unwrap_or_else(|| vec![1, 2]);
            if levels.len() != 2 {
                f.error(format!("`lindblad.levels` needs exactly two indices (got {})", levels.len()));
                return None;
            }
            if let Some(dim) = dim {
                if let Some(&bad) = levels.iter().find(|&&l| l >= dim) {
                    f.error(format!("`lindblad.levels`: level {bad} outside dimension {dim}"));
                    return None;
                }
            }
            Some(Some(ExampleLindbladSpec::ProjectorPair { gammas: [g1?, g2?], levels: [levels[0], levels[1]] }))
        }
        "supercharge" | "supercharge_zero_mode" => {
            let delta = f.required("lindblad.delta", parse_f64)?;
            Some(Some(if kind == "supercharge" {
                ExampleLindbladSpec::SuperchargeBuilt { delta }
            } else {
                ExampleLindbladSpec::SuperchargeBuiltZeroMode { delta }
            }))
        }
        other => {
            f.error(format!(
                "`lindblad.kind`: `{other}` is not one of none, function, projector, supercharge, supercharge_zero_mode"
            ));
            None
        }
    }
}

fn parse_initial(f: &mut Fields, dim: Option<usize>) -> Option<InitialState> {
    let kind = f.required("initial.kind", |s| Ok(s.to_string()))?;
    let check_index = |f: &mut Fields, key: &str, i: usize| -> bool {
        match dim {
            Some(d) if i >= d => {
                f.error(format!("`{key}`: index {i} outside dimension {d}"));
                false
            }
            _ => true,
        }
    };
    match kind.as_str() {
        "pure" => {
            let index = f.required("initial.index", parse_usize)?;
            check_index(f, "initial.index", index).then_some(InitialState::Pure(index))
        }
        "mixture" => {
            let weights = f.required("initial.weights", |s| parse_list(s, parse_f64))?;
            let mut ok = true;
            if weights.iter().any(|&w| w < 0.0) {
                f.error("`initial.weights` must be non-negative".into());
                ok = false;
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                f.error(format!("`initial.weights`: weights must sum to 1 (got {total})"));
                ok = false;
            }
            if let Some(d) = dim {
                if weights.len() > d {
                    f.error(format!("`initial.weights`: {} weights for dimension {d}", weights.len()));
                    ok = false;
                }
            }
            ok.then_some(InitialState::Mixture(weights))
        }
        "coherent" => {
            let indices = f.required("initial.indices", |s| parse_list(s, parse_usize));
            let amplitudes = f.required("initial.amplitudes", |s| parse_list(s, parse_complex));
            let (indices, amplitudes) = (indices?, amplitudes?);
            let mut ok = true;
            if indices.len() != amplitudes.len() || indices.is_empty() {
                f.error(format!(
                    "`initial.indices` and `initial.amplitudes` must have the same non-zero length (got {} and {})",
                    indices.len(),
                    amplitudes.len()
                ));
                ok = false;
            }
            let mut sorted = indices.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != indices.len() {
                f.error("`initial.indices` must be distinct".into());
                ok = false;
            }
            for &i in &indices {
                ok &= check_index(f, "initial.indices", i);
            }
            let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > NORMALIZATION_TOL {
                f.error(format!("`initial.amplitudes`: amplitudes must be normalized (squared norm {norm})"));
                ok = false;
            }
            ok.then_some(InitialState::Coherent { indices, amplitudes })
        }
        other => {
            f.error(format!("`initial.kind`: `{other}` is not one of pure, mixture, coherent"));
            None
        }
    }
}

fn parse_time(f: &mut Fields) -> Option<TimeGrid> {
    let t0 = f.parsed("time.t0", parse_f64).unwrap_or(0.0);
    let t1 = f.required("time.t1", parse_f64);
    let steps = f.required("time.steps", parse_usize);
    let sample_every = f.parsed("time.sample_every", parse_usize).unwrap_or(1);
    let (t1, steps) = (t1?, steps?);
    let mut ok = true;
    if t1 <= t0 {
        f.error(format!("`time.t1` must exceed `time.t0` (got {t0} and {t1})"));
        ok = false;
    }
    if steps < 1 {
        f.error("`time.steps` must be at least 1".into());
        ok = false;
    }
    if sample_every < 1 {
        f.error("`time.sample_every` must be at least 1".into());
        ok = false;
    }
    if !ok {
        return None;
    }
    TimeGrid::new(t0, t1, steps, sample_every).map_err(|e| f.error(e.to_string())).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "model.kind = oscillator\nmodel.levels = 4\ninitial.kind = pure\ninitial.index = 1\ntime.t1 = 1\ntime.steps = 10\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.model, ModelConfig::Oscillator { levels: 4 });
        assert_eq!(c.time.sample_every, 1);
        assert_eq!(c.time.t0, 0.0);
        assert_eq!(c.evolve, EvolveWhich::Partner1);
        assert!(c.tolerances.is_empty());
        assert!(c.lindblad.is_none());
        assert_eq!(c.coefficients, default_coefficients(4));
        assert_eq!(c.coefficients.len(), 10);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let text = MINIMAL
            .replace("initial.kind = pure\ninitial.index = 1", "initial.kind = mixture\ninitial.weights = 0.5, 0.6");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("weights must sum to 1")), "{err}");
    }

    #[test]
    fn both_partner_supercharge_config() {
        let text = "model.kind = spectral\nmodel.energies = 1, 2, 3, 4\nmodel.unitary = rotation\nmodel.theta = 0.3\n\
                    lindblad.kind = supercharge\nlindblad.delta = 0.5\nevolve = both\n\
                    initial.kind = coherent\ninitial.indices = 0, 2\ninitial.amplitudes = 0.6, 0.8i\n\
                    time.t1 = 5\ntime.steps = 5000\ntime.sample_every = 100\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.evolve, EvolveWhich::Both);
        assert_eq!(c.lindblad, Some(ExampleLindbladSpec::SuperchargeBuilt { delta: 0.5 }));
        assert_eq!(
            c.initial,
            InitialState::Coherent {
                indices: vec![0, 2],
                amplitudes: vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]
            }
        );
    }

    #[test]
    fn collects_every_error() {
        let text = "model.kind = oscillator\nmodel.levels = 1\nbogus = 3\ninitial.kind = pure\n\
                    time.t1 = -1\ntime.steps = 10\ntolerance.nothing = 1\nmodel.points = 5\n";
        let err = parse_config(text).unwrap_err();
        let all = err.to_string();
        assert!(all.contains("unknown key `bogus`"), "{all}");
        assert!(all.contains("unknown tolerance `nothing`"), "{all}");
        assert!(all.contains("at least 2"), "{all}");
        assert!(all.contains("missing required key `initial.index`"), "{all}");
        assert!(all.contains("`time.t1` must exceed"), "{all}");
        assert!(all.contains("`model.points` does not apply"), "{all}");
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1.5").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(parse_complex("i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("0.5i").unwrap(), Complex64::new(0.0, 0.5));
        assert_eq!(parse_complex("0.3 - 0.4i").unwrap(), Complex64::new(0.3, -0.4));
        assert_eq!(parse_complex("1e-3+2e-1i").unwrap(), Complex64::new(1e-3, 0.2));
        assert_eq!(parse_complex("-2e-3i").unwrap(), Complex64::new(0.0, -2e-3));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn profiles() {
        assert_eq!(parse_profile("0.5i").unwrap(), Profile::Constant(Complex64::new(0.0, 0.5)));
        assert_eq!(
            parse_profile("ramp(0, 1, 2)").unwrap(),
            Profile::ExponentialRamp { start: Complex64::new(0.0, 0.0), end: Complex64::new(1.0, 0.0), rate: 2.0 }
        );
        assert!(matches!(parse_profile("sin(1, 0.5i, 2, 0)").unwrap(), Profile::Sinusoid { .. }));
        assert!(parse_profile("ramp(1, 2)").is_err());
    }

    #[test]
    fn polynomials_and_pairs() {
        let p = parse_polynomials("0, 1; 1, 0, -0.5").unwrap();
        assert_eq!(p[1].coefficients(), &[1.0, 0.0, -0.5]);
        assert_eq!(parse_pairs("0:1, 2:3").unwrap(), vec![(0, 1), (2, 3)]);
        assert!(parse_pairs("0-1").is_err());
    }

    #[test]
    fn duplicate_keys_and_bad_lines() {
        let text = format!("{MINIMAL}model.levels = 5\njust words\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("duplicate key `model.levels`")));
        assert!(err.0.iter().any(|e| e.contains("expected `key = value`")));
    }

    #[test]
    fn indices_checked_against_dimension() {
        let text = MINIMAL.replace("initial.index = 1", "initial.index = 4");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("outside dimension 4")));
    }
}
