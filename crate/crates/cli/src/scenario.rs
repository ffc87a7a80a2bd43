//! Scenario execution: build the pair and dissipators, evolve, write the
//! trajectory files and evaluate every invariant.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use susy_fgkls::linalg::{self, max_abs, max_abs_diff, CMatrix, CVector};
use susy_fgkls::models::projector_pair_lindbladian;
use susy_fgkls::random::{random_unitary, seeded};
use susy_fgkls::susy::{density_intertwining_residuals, trace_identity_residual};
use susy_fgkls::{
    build_example_lindblads, build_grid_darboux, build_oscillator, build_spectral_model, build_super_operators,
    check_lindblad_intertwining, check_super_density, check_super_lindblad, evolve_exact, evolve_rk4,
    example1_analytic_coefficients, integrate_coefficients, lindbladian, map_density_backward, map_density_forward,
    overlap_coefficient_rhs, rotation_unitary, CoefficientMatrix, DensityMatrix, EvolutionResult, ExampleLindbladSpec,
    FgklsSystem, GridModelSpec, LindbladSet, Operator, SpectralModelSpec, SusyPair,
};

use crate::config::{InitialState, ModelConfig, ScenarioConfig, UnitaryConfig};
use crate::report::{Entry, RunReport};

/// Exact-propagator cross-check is limited to this dimension.
const EXACT_CHECK_MAX_DIM: usize = 16;
/// Number of sample times compared against the exact propagator.
const EXACT_CHECK_SAMPLES: usize = 16;

/// Headline note written when both partners are evolved.
pub const DISCREPANCY_NOTE: &str = "SUSY partner-evolution discrepancy";

pub fn default_tolerance(name: &str) -> f64 {
    match name {
        "intertwining" | "zero_mode_annihilation" | "superalgebra_conservation" | "superalgebra_factorization" => 1e-10,
        "normalized_anticommutator" | "trace_identity" => 1e-9,
        "isospectrality"
        | "density_round_trip"
        | "density_intertwining"
        | "super_density"
        | "lindblad_intertwining"
        | "lindblad_dissipation_intertwining"
        | "super_lindblad_intertwining"
        | "super_lindblad_normalized"
        | "super_lindblad_hermitian"
        | "trace_conservation"
        | "positivity" => 1e-8,
        "lindbladian_trace" | "projector_lindbladian" => 1e-12,
        "entropy_bounds" => 1e-10,
        "exact_propagator" | "analytic_coefficients" | "coefficient_equation" | "partner_evolution_discrepancy" => 1e-6,
        _ => 0.0,
    }
}

/// One sampled row of a trajectory file.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub trace: f64,
    pub min_eig: f64,
    pub entropy: f64,
    pub coefficients: Vec<Complex64>,
}

/// Per-partner trajectory: scalar diagnostics plus selected coefficients
/// `r_mn = ⟨m|ρ|n⟩` in the partner's level basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub columns: Vec<(usize, usize)>,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    fn header(columns: &[(usize, usize)]) -> String {
        let mut h = String::from("t,trace,min_eig,entropy");
        for (m, n) in columns {
            write!(h, ",re_r_{m}_{n},im_r_{m}_{n}").unwrap();
        }
        h
    }

    /// CSV with 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = Self::header(&self.columns);
        out.push('\n');
        for row in &self.rows {
            write!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", row.t, row.trace, row.min_eig, row.entropy).unwrap();
            for z in &row.coefficients {
                write!(out, ",{:.16e},{:.16e}", z.re, z.im).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| anyhow!("empty trajectory file"))?;
        let fields: Vec<&str> = header.split(',').collect();
        if fields.len() < 4 || fields[..4] != ["t", "trace", "min_eig", "entropy"] || !fields.len().is_multiple_of(2) {
            bail!("unexpected trajectory header `{header}`");
        }
        let mut columns = Vec::new();
        for pair in fields[4..].chunks(2) {
            let index = |f: &str, prefix: &str| -> Option<(usize, usize)> {
                let (m, n) = f.strip_prefix(prefix)?.split_once('_')?;
                Some((m.parse().ok()?, n.parse().ok()?))
            };
            let re = index(pair[0], "re_r_");
            if re.is_none() || re != index(pair[1], "im_r_") {
                bail!("unexpected coefficient columns `{},{}`", pair[0], pair[1]);
            }
            columns.push(re.unwrap());
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let values: Vec<f64> = line
                .split(',')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .with_context(|| format!("row {}: not a number", k + 1))?;
            if values.len() != fields.len() {
                bail!("row {}: {} fields, expected {}", k + 1, values.len(), fields.len());
            }
            rows.push(TrajectoryRow {
                t: values[0],
                trace: values[1],
                min_eig: values[2],
                entropy: values[3],
                coefficients: values[4..].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(),
            });
        }
        Ok(Self { columns, rows })
    }
}

/// Everything a scenario produced, before anything is written.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub report: RunReport,
    /// Indexed by partner: `[partner 1, partner 2]`.
    pub trajectories: [Option<Trajectory>; 2],
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }

    /// Writes `partner{1,2}.csv`, `report.txt` and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (k, traj) in self.trajectories.iter().enumerate() {
            if let Some(traj) = traj {
                let path = dir.join(format!("partner{}.csv", k + 1));
                fs::write(&path, traj.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        for (file, text) in [("report.txt", self.report.render()), ("summary.txt", self.report.summary())] {
            let path = dir.join(file);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

/// Runs a scenario and writes its files into `out_dir`.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let outcome = execute(config)?;
    outcome.write(out_dir)?;
    Ok(outcome)
}

fn scenario_label(config: &ScenarioConfig) -> String {
    config.name.clone().unwrap_or_else(|| "scenario".into())
}

pub fn build_pair(model: &ModelConfig) -> Result<SusyPair> {
    let pair = match model {
        ModelConfig::Oscillator { levels } => build_oscillator(*levels)?,
        ModelConfig::Spectral { energies, unitary, zero_level } => {
            let n = energies.len();
            let u = match unitary {
                UnitaryConfig::Identity => linalg::identity(n),
                UnitaryConfig::Rotation(theta) => rotation_unitary(n, *theta),
                UnitaryConfig::Random(seed) => random_unitary(n, &mut seeded(*seed)),
            };
            build_spectral_model(&SpectralModelSpec::new(energies.clone(), *zero_level, u)?)?
        }
        ModelConfig::Grid { half_width, points, superpotential, scheme } => {
            let spec = GridModelSpec::from_polynomial(*half_width, *points, superpotential)?.with_scheme(*scheme);
            build_grid_darboux(&spec)?.pair
        }
    };
    Ok(pair)
}

/// Initial partner-1 state in the level basis `[ψ₋ | E]`.
pub fn initial_density(pair: &SusyPair, initial: &InitialState) -> Result<DensityMatrix> {
    let basis = pair.level_basis1();
    let n = pair.dim();
    let rho = match initial {
        InitialState::Pure(k) => {
            let v: CVector = basis.column(*k).into_owned();
            DensityMatrix::pure(&v)?
        }
        InitialState::Mixture(weights) => {
            let mut r = CMatrix::zeros(n, n);
            for (k, &w) in weights.iter().enumerate() {
                r[(k, k)] = Complex64::new(w, 0.0);
            }
            DensityMatrix::normalized(linalg::hermitian_part(&linalg::mul3(&basis, &r, &basis.adjoint())))?
        }
        InitialState::Coherent { indices, amplitudes } => {
            let mut v = CVector::zeros(n);
            for (&k, &a) in indices.iter().zip(amplitudes) {
                v += basis.column(k) * a;
            }
            DensityMatrix::pure(&v)?
        }
    };
    Ok(rho)
}

fn coefficient_row(state: &CMatrix, basis: &CMatrix, columns: &[(usize, usize)]) -> Vec<Complex64> {
    let r = linalg::mul3(&basis.adjoint(), state, basis);
    columns.iter().map(|&(m, n)| r[(m, n)]).collect()
}

fn trajectory(result: &EvolutionResult, basis: &CMatrix, columns: &[(usize, usize)]) -> Trajectory {
    let rows = result
        .states
        .iter()
        .enumerate()
        .map(|(k, s)| TrajectoryRow {
            t: result.times[k],
            trace: linalg::trace(s.matrix()).re,
            min_eig: result.min_eig[k],
            entropy: result.entropy[k],
            coefficients: coefficient_row(s.matrix(), basis, columns),
        })
        .collect();
    Trajectory { columns: columns.to_vec(), rows }
}

struct Checker<'a> {
    config: &'a ScenarioConfig,
    report: RunReport,
}

impl Checker<'_> {
    fn tolerance(&self, base: &str) -> f64 {
        self.config.tolerances.get(base).copied().unwrap_or_else(|| default_tolerance(base))
    }

    fn upper(&mut self, base: &str, suffix: &str, value: f64) {
        let threshold = self.tolerance(base);
        self.report.push(Entry::upper(format!("{base}{suffix}"), value, threshold));
    }
}

struct Partner {
    label: &'static str,
    system: FgklsSystem,
    basis: CMatrix,
    level_energies: Vec<f64>,
    result: Option<EvolutionResult>,
}

/// Builds, evolves and checks a scenario without touching the filesystem.
pub fn execute(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let label = scenario_label(config);
    let ctx = |what: &str| format!("scenario `{label}`: {what}");
    let pair = build_pair(&config.model).with_context(|| ctx("building the supersymmetric pair"))?;
    let (set1, set2) = match &config.lindblad {
        Some(spec) => build_example_lindblads(&pair, spec).with_context(|| ctx("building FGKLS operators"))?,
        None => (LindbladSet::empty(), LindbladSet::empty()),
    };
    let rho1 = initial_density(&pair, &config.initial).with_context(|| ctx("building the initial state"))?;
    let rho2 = if config.evolve.partner2() {
        Some(map_density_forward(&pair, &rho1, None).with_context(|| ctx("mapping the initial state to partner 2"))?)
    } else {
        map_density_forward(&pair, &rho1, None).ok()
    };

    let mut checker = Checker { config, report: RunReport::new(label.clone()) };
    describe(&mut checker.report, config, &pair);
    structure_checks(&mut checker, &pair);
    match &rho2 {
        Some(rho2) => density_checks(&mut checker, &pair, &rho1, rho2).with_context(|| ctx("density-map checks"))?,
        None => {
            checker.report.note("density maps", "skipped, the initial state couples zero modes to the positive sector")
        }
    }
    if !set1.is_empty() {
        lindblad_checks(&mut checker, &pair, &set1, &set2).with_context(|| ctx("FGKLS operator checks"))?;
    }

    let mut partners = [
        Partner {
            label: "_p1",
            system: FgklsSystem::new(pair.h1().clone(), set1)?,
            basis: pair.level_basis1(),
            level_energies: pair.level_energies1(),
            result: None,
        },
        Partner {
            label: "_p2",
            system: FgklsSystem::new(pair.h2().clone(), set2)?,
            basis: pair.level_basis2(),
            level_energies: pair.level_energies2(),
            result: None,
        },
    ];
    let initial = [Some(&rho1), rho2.as_ref()];
    let wanted = [config.evolve.partner1(), config.evolve.partner2()];
    let mut trajectories: [Option<Trajectory>; 2] = [None, None];
    for k in 0..2 {
        if !wanted[k] {
            continue;
        }
        let rho0 = initial[k].expect("partner-2 state exists when partner 2 is evolved");
        let p = &mut partners[k];
        let result =
            evolve_rk4(&p.system, rho0, &config.time).with_context(|| ctx(&format!("evolving partner {}", k + 1)))?;
        trajectories[k] = Some(trajectory(&result, &p.basis, &config.coefficients));
        p.result = Some(result);
    }
    for k in 0..2 {
        if partners[k].result.is_some() {
            evolution_checks(&mut checker, &pair, &partners[k], k, initial[k].unwrap())
                .with_context(|| ctx(&format!("partner {} trajectory checks", k + 1)))?;
        }
    }
    if let (Some(r1), Some(r2)) = (&partners[0].result, &partners[1].result) {
        let value = partner_discrepancy(&pair, r1, r2, &partners[0].basis, &partners[1].basis);
        checker.report.note(DISCREPANCY_NOTE, format!("{value:.6e}"));
        checker.upper("partner_evolution_discrepancy", "", value);
    }
    Ok(ScenarioOutcome { report: checker.report, trajectories })
}

fn describe(report: &mut RunReport, config: &ScenarioConfig, pair: &SusyPair) {
    let model = match &config.model {
        ModelConfig::Oscillator { levels } => format!("oscillator, {levels} levels"),
        ModelConfig::Spectral { energies, .. } => format!("spectral, energies {energies:?}"),
        ModelConfig::Grid { half_width, points, .. } => {
            format!("grid, {points} points on [-{half_width}, {half_width}]")
        }
    };
    report.note("model", model);
    report.note("dimension", pair.dim().to_string());
    report.note(
        "zero modes",
        format!("{} of q-, {} of q+", pair.zero_modes_minus().ncols(), pair.zero_modes_plus().ncols()),
    );
    let lindblad = match &config.lindblad {
        None => "none".to_string(),
        Some(ExampleLindbladSpec::FunctionOfH(fs)) => format!("{} function(s) of H", fs.len()),
        Some(ExampleLindbladSpec::ProjectorPair { levels, .. }) => {
            format!("projector pair on levels {levels:?}")
        }
        Some(ExampleLindbladSpec::SuperchargeBuilt { delta }) => {
            format!("supercharge, delta {delta}")
        }
        Some(ExampleLindbladSpec::SuperchargeBuiltZeroMode { delta }) => {
            format!("projected supercharge, delta {delta}")
        }
    };
    report.note("dissipators", lindblad);
}

/// Structural invariants of the pair; shared with the check suite.
pub fn structure_entries(pair: &SusyPair, tol: impl Fn(&str) -> f64) -> Vec<Entry> {
    let scale = pair.intertwining_scale();
    let q_scale = 1.0 + max_abs(pair.q_minus());
    let ops = build_super_operators(pair);
    let sa = ops.residuals();
    let balance = pair.zero_modes_minus().ncols().abs_diff(pair.zero_modes_plus().ncols()) as f64;
    vec![
        Entry::upper("intertwining", pair.check_intertwining().max() / scale, tol("intertwining")),
        Entry::upper("zero_mode_annihilation", pair.zero_mode_residual() / q_scale, tol("zero_mode_annihilation")),
        Entry::upper("zero_mode_count_balance", balance, 0.0),
        Entry::upper("isospectrality", pair.isospectrality_residual(), tol("isospectrality")),
        Entry::upper("superalgebra_nilpotency", sa.nilpotency / sa.scale, 0.0),
        Entry::upper("superalgebra_conservation", sa.conservation / sa.scale, tol("superalgebra_conservation")),
        Entry::upper("superalgebra_factorization", sa.factorization / sa.scale, tol("superalgebra_factorization")),
        Entry::upper("normalized_anticommutator", sa.normalized, tol("normalized_anticommutator")),
    ]
}

fn structure_checks(checker: &mut Checker, pair: &SusyPair) {
    let entries = structure_entries(pair, |name| checker.tolerance(name));
    for e in entries {
        checker.report.push(e);
    }
}

/// Density-map invariants for a partner-1 state and its image.
pub fn density_entries(
    pair: &SusyPair,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    tol: impl Fn(&str) -> f64,
) -> Result<Vec<Entry>> {
    let scale = pair.intertwining_scale();
    let beta1 = pair.beta_minus(rho1.matrix());
    let back = map_density_backward(pair, rho2, Some(&beta1))?;
    let [a, b] = density_intertwining_residuals(pair, rho1.matrix(), rho2.matrix());
    let sd = check_super_density(pair, rho1.matrix(), rho2.matrix())?;
    Ok(vec![
        Entry::upper("density_round_trip", max_abs_diff(back.matrix(), rho1.matrix()), tol("density_round_trip")),
        Entry::upper(
            "trace_identity",
            trace_identity_residual(pair, rho1.matrix(), rho2.matrix()),
            tol("trace_identity"),
        ),
        Entry::upper("density_intertwining", a.max(b) / scale, tol("density_intertwining")),
        Entry::upper("super_density", sd.max() / scale, tol("super_density")),
    ])
}

fn density_checks(checker: &mut Checker, pair: &SusyPair, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<()> {
    let entries = density_entries(pair, rho1, rho2, |name| checker.tolerance(name))?;
    for e in entries {
        checker.report.push(e);
    }
    Ok(())
}

fn operators_at(set: &LindbladSet, t: f64) -> Result<Vec<Operator>> {
    Ok(set.operators_at(t).into_iter().map(Operator::new).collect::<susy_fgkls::Result<_>>()?)
}

/// Intertwining of the actual partner operator sets and the doubled-space
/// relations for the mapped set, at a few times across the window.
pub fn lindblad_entries(
    pair: &SusyPair,
    set1: &LindbladSet,
    set2: &LindbladSet,
    times: &[f64],
    tol: impl Fn(&str) -> f64,
) -> Result<Vec<Entry>> {
    let (mut operator, mut dissipation) = (0.0f64, 0.0f64);
    let (mut sl_int, mut sl_norm) = (0.0f64, 0.0f64);
    let mut sl_herm: Option<f64> = Some(0.0);
    for &t in times {
        let (a1, a2) = (operators_at(set1, t)?, operators_at(set2, t)?);
        let li = check_lindblad_intertwining(pair, &a1, &a2)?;
        operator = operator.max(li.operator);
        dissipation = dissipation.max(li.dissipation);
        let a_norm = a1.iter().map(|a| max_abs(a.matrix())).fold(0.0, f64::max);
        let scale = pair.intertwining_scale() * (1.0 + a_norm) * (1.0 + a_norm);
        let sl = check_super_lindblad(pair, &a1)?;
        sl_int = sl_int.max(sl.intertwining / scale);
        sl_norm = sl_norm.max(sl.normalized / (1.0 + a_norm) / (1.0 + a_norm));
        sl_herm = match (sl_herm, sl.hermitian) {
            (Some(acc), Some(v)) => Some(acc.max(v / scale)),
            _ => None,
        };
    }
    let mut entries = vec![
        Entry::upper("lindblad_intertwining", operator, tol("lindblad_intertwining")),
        Entry::upper("lindblad_dissipation_intertwining", dissipation, tol("lindblad_dissipation_intertwining")),
        Entry::upper("super_lindblad_intertwining", sl_int, tol("super_lindblad_intertwining")),
        Entry::upper("super_lindblad_normalized", sl_norm, tol("super_lindblad_normalized")),
    ];
    if let Some(v) = sl_herm {
        entries.push(Entry::upper("super_lindblad_hermitian", v, tol("super_lindblad_hermitian")));
    }
    Ok(entries)
}

fn lindblad_checks(checker: &mut Checker, pair: &SusyPair, set1: &LindbladSet, set2: &LindbladSet) -> Result<()> {
    let grid = &checker.config.time;
    let times =
        if set1.is_time_independent() { vec![grid.t0] } else { vec![grid.t0, 0.5 * (grid.t0 + grid.t1), grid.t1] };
    let entries = lindblad_entries(pair, set1, set2, &times, |name| checker.tolerance(name))?;
    for e in entries {
        checker.report.push(e);
    }
    Ok(())
}

/// `max_t |Tr L[ρ(t)]|`, relative to the size of the cancelling terms
/// `Σⱼ Tr(AʲρAʲ†)`.
pub fn lindbladian_trace_residual(result: &EvolutionResult, set: &LindbladSet) -> Result<f64> {
    let mut worst = 0.0f64;
    for (t, state) in result.times.iter().zip(&result.states) {
        let rho = state.matrix();
        let l = lindbladian(rho, set, *t)?;
        let magnitude: f64 =
            set.operators_at(*t).iter().map(|a| linalg::trace(&linalg::mul3(a, rho, &a.adjoint())).norm()).sum();
        worst = worst.max(linalg::trace(&l).norm() / (1.0 + magnitude));
    }
    Ok(worst)
}

/// Largest excursion of the entropy outside `[0, ln dim]`.
pub fn entropy_excursion(result: &EvolutionResult, dim: usize) -> f64 {
    let top = (dim as f64).ln();
    result.entropy.iter().fold(0.0, |acc, &s| acc.max(-s).max(s - top))
}

fn evolution_checks(
    checker: &mut Checker,
    pair: &SusyPair,
    partner: &Partner,
    index: usize,
    rho0: &DensityMatrix,
) -> Result<()> {
    let result = partner.result.as_ref().unwrap();
    let sfx = partner.label;
    let set = partner.system.dissipators();
    checker.upper("trace_conservation", sfx, result.max_trace_drift());
    checker.upper("positivity", sfx, (-result.min_eigenvalue()).max(0.0));
    checker.upper("lindbladian_trace", sfx, lindbladian_trace_residual(result, set)?);
    checker.upper("entropy_bounds", sfx, entropy_excursion(result, pair.dim()));

    if pair.dim() <= EXACT_CHECK_MAX_DIM && set.is_time_independent() {
        let stride = result.len().div_ceil(EXACT_CHECK_SAMPLES).max(1);
        let picks: Vec<usize> = (0..result.len()).filter(|&k| k % stride == 0 || k + 1 == result.len()).collect();
        let elapsed: Vec<f64> = picks.iter().map(|&k| result.times[k] - result.times[0]).collect();
        let exact = evolve_exact(&partner.system, rho0, &elapsed)?;
        let value = picks
            .iter()
            .zip(&exact.states)
            .map(|(&k, e)| max_abs_diff(result.states[k].matrix(), e.matrix()))
            .fold(0.0, f64::max);
        checker.upper("exact_propagator", sfx, value);
    }

    match &checker.config.lindblad {
        Some(ExampleLindbladSpec::FunctionOfH(fs)) => {
            let closures: Vec<Box<dyn Fn(f64) -> f64 + '_>> =
                fs.iter().map(|f| Box::new(move |x| f.eval(x)) as Box<dyn Fn(f64) -> f64>).collect();
            let refs: Vec<&dyn Fn(f64) -> f64> = closures.iter().map(|b| b.as_ref()).collect();
            let basis = &partner.basis;
            let r0 = CoefficientMatrix::new(linalg::mul3(&basis.adjoint(), rho0.matrix(), basis))?;
            let mut worst = 0.0f64;
            for (t, state) in result.times.iter().zip(&result.states) {
                let analytic =
                    example1_analytic_coefficients(&r0, &partner.level_energies, &refs, t - result.times[0])?;
                let r = linalg::mul3(&basis.adjoint(), state.matrix(), basis);
                worst = worst.max(max_abs_diff(&r, analytic.matrix()));
            }
            checker.upper("analytic_coefficients", sfx, worst);
        }
        Some(
            ExampleLindbladSpec::SuperchargeBuilt { delta } | ExampleLindbladSpec::SuperchargeBuiltZeroMode { delta },
        ) => {
            let positive = positive_block_basis(pair, index);
            let energies = pair.energies();
            let overlaps = pair.overlaps();
            let block = |m: &CMatrix| linalg::mul3(&positive.adjoint(), m, &positive);
            let r0 = block(rho0.matrix());
            let delta = *delta;
            let coefficients = integrate_coefficients(&r0, &checker.config.time, |r| {
                overlap_coefficient_rhs(r, &energies, &overlaps, delta)
            })?;
            let value = coefficients
                .iter()
                .zip(&result.states)
                .map(|((_, r), s)| max_abs_diff(r, &block(s.matrix())))
                .fold(0.0, f64::max);
            checker.upper("coefficient_equation", sfx, value);
        }
        Some(ExampleLindbladSpec::ProjectorPair { gammas, levels }) => {
            let basis = &partner.basis;
            let positions = projector_positions(pair, *levels)?;
            let mut worst = 0.0f64;
            for (t, state) in result.times.iter().zip(&result.states) {
                let direct = linalg::mul3(&basis.adjoint(), &lindbladian(state.matrix(), set, *t)?, basis);
                let r = linalg::mul3(&basis.adjoint(), state.matrix(), basis);
                let g = [gammas[0].value(*t), gammas[1].value(*t)];
                worst = worst.max(max_abs_diff(&direct, &projector_pair_lindbladian(&r, g, positions)));
            }
            checker.upper("projector_lindbladian", sfx, worst);
        }
        None => {}
    }
    Ok(())
}

/// Positive-sector columns of the partner's level basis.
fn positive_block_basis(pair: &SusyPair, partner: usize) -> CMatrix {
    if partner == 0 {
        pair.energy_basis()
    } else {
        pair.partner_basis()
    }
}

/// Positions in the level basis of the projected `h₁` eigenvectors.
fn projector_positions(pair: &SusyPair, levels: [usize; 2]) -> Result<[usize; 2]> {
    let basis = pair.level_basis1();
    let mut out = [0; 2];
    for (slot, &level) in out.iter_mut().zip(&levels) {
        let v = pair.spectrum1().eigenvector(level);
        let overlaps = basis.adjoint() * v;
        let (k, best) =
            overlaps
                .iter()
                .enumerate()
                .map(|(k, z)| (k, z.norm()))
                .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < 1.0 - 1e-8 {
            bail!("level {level} is not a column of the level basis");
        }
        *slot = k;
    }
    Ok(out)
}

/// `max_t max_mn |r¹_mn(t) − r²_mn(t)|` over the positive-sector levels.
pub fn partner_discrepancy(
    pair: &SusyPair,
    r1: &EvolutionResult,
    r2: &EvolutionResult,
    basis1: &CMatrix,
    basis2: &CMatrix,
) -> f64 {
    let zc = pair.zero_modes_minus().ncols();
    let n = pair.dim();
    let b1 = basis1.columns(zc, n - zc).into_owned();
    let b2 = basis2.columns(pair.zero_modes_plus().ncols(), n - zc).into_owned();
    r1.states
        .iter()
        .zip(&r2.states)
        .map(|(s1, s2)| {
            let c1 = linalg::mul3(&b1.adjoint(), s1.matrix(), &b1);
            let c2 = linalg::mul3(&b2.adjoint(), s2.matrix(), &b2);
            max_abs_diff(&c1, &c2)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn run(text: &str) -> ScenarioOutcome {
        execute(&parse_config(text).unwrap()).unwrap()
    }

    #[test]
    fn function_of_h_decays_coherence() {
        let out = run("name = decay\nmodel.kind = oscillator\nmodel.levels = 8\n\
                       lindblad.kind = function\nlindblad.functions = 0, 1\n\
                       initial.kind = coherent\ninitial.indices = 0, 1\n\
                       initial.amplitudes = 0.7071067811865476, 0.7071067811865476\n\
                       time.t1 = 4\ntime.steps = 4000\ntime.sample_every = 200\n");
        assert!(out.passed(), "{}", out.report.render());
        let traj = out.trajectories[0].as_ref().unwrap();
        let col = traj.columns.iter().position(|&c| c == (0, 1)).unwrap();
        let diag = traj.columns.iter().position(|&c| c == (1, 1)).unwrap();
        for row in &traj.rows {
            let expected = 0.5 * (-row.t / 2.0).exp();
            assert!((row.coefficients[col].norm() - expected).abs() < 1e-9);
            assert!((row.coefficients[diag].re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn supercharge_partners_agree() {
        let out = run("model.kind = spectral\nmodel.energies = 1, 2, 3, 4\nmodel.unitary = rotation\n\
                       model.theta = 0.3\nlindblad.kind = supercharge\nlindblad.delta = 0.5\nevolve = both\n\
                       initial.kind = coherent\ninitial.indices = 0, 2\ninitial.amplitudes = 0.6, 0.8i\n\
                       time.t1 = 5\ntime.steps = 5000\ntime.sample_every = 100\n");
        assert!(out.passed(), "{}", out.report.render());
        let d = out.report.get("partner_evolution_discrepancy").unwrap();
        assert!(d.value <= 1e-6);
        assert!(out.report.notes.iter().any(|(k, _)| k == DISCREPANCY_NOTE));
        assert!(out.report.get("coefficient_equation_p1").is_some());
        assert!(out.report.get("coefficient_equation_p2").is_some());
    }

    #[test]
    fn closed_system_eigenstate_is_flat() {
        let out = run("model.kind = oscillator\nmodel.levels = 5\ninitial.kind = pure\ninitial.index = 3\n\
                       time.t1 = 2\ntime.steps = 200\ntime.sample_every = 20\nevolve = both\n");
        assert!(out.passed(), "{}", out.report.render());
        for traj in out.trajectories.iter().flatten() {
            let first = &traj.rows[0];
            for row in &traj.rows {
                assert!((row.trace - first.trace).abs() < 1e-14);
                for (a, b) in row.coefficients.iter().zip(&first.coefficients) {
                    assert!((a.norm() - b.norm()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn projector_and_zero_mode_kinds_pass() {
        let projector = run("model.kind = oscillator\nmodel.levels = 6\nlindblad.kind = projector\n\
                             lindblad.gamma1 = 1\nlindblad.gamma2 = 0.5i\nevolve = both\n\
                             initial.kind = coherent\ninitial.indices = 1, 2, 3\n\
                             initial.amplitudes = 0.6, 0.64, 0.48i\n\
                             time.t1 = 2\ntime.steps = 2000\ntime.sample_every = 100\n");
        assert!(projector.passed(), "{}", projector.report.render());
        assert!(projector.report.get("projector_lindbladian_p2").is_some());
        let zero = run("model.kind = oscillator\nmodel.levels = 6\nlindblad.kind = supercharge_zero_mode\n\
                        lindblad.delta = 0.7\nevolve = both\ninitial.kind = mixture\n\
                        initial.weights = 0.2, 0.3, 0.5\ntime.t1 = 2\ntime.steps = 2000\ntime.sample_every = 100\n");
        assert!(zero.passed(), "{}", zero.report.render());
    }

    #[test]
    fn mixing_initial_state_fails_for_partner_two_with_context() {
        let cfg = parse_config(
            "name = mix\nmodel.kind = oscillator\nmodel.levels = 4\nevolve = partner2\n\
             initial.kind = coherent\ninitial.indices = 0, 1\ninitial.amplitudes = 0.6, 0.8\n\
             time.t1 = 1\ntime.steps = 10\n",
        )
        .unwrap();
        let err = execute(&cfg).unwrap_err();
        let text = format!("{err:#}");
        assert!(text.contains("scenario `mix`"), "{text}");
        assert!(text.contains("zero modes"), "{text}");
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let traj = Trajectory {
            columns: vec![(0, 1), (2, 2)],
            rows: vec![TrajectoryRow {
                t: 0.1,
                trace: 1.0 - 1e-16,
                min_eig: -3.3e-300,
                entropy: std::f64::consts::LN_2,
                coefficients: vec![Complex64::new(1.0 / 3.0, -0.0), Complex64::new(f64::MIN_POSITIVE, 1e300)],
            }],
        };
        let back = Trajectory::from_csv(&traj.to_csv()).unwrap();
        assert_eq!(back.columns, traj.columns);
        let (a, b) = (&back.rows[0], &traj.rows[0]);
        assert_eq!(a.t.to_bits(), b.t.to_bits());
        assert_eq!(a.trace.to_bits(), b.trace.to_bits());
        assert_eq!(a.min_eig.to_bits(), b.min_eig.to_bits());
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }

    #[test]
    fn report_names_are_unique() {
        let out = run("model.kind = spectral\nmodel.energies = 1, 3\nmodel.zero_level = true\n\
                       lindblad.kind = function\nlindblad.functions = 0, 1; 1, 0, -0.1\nevolve = both\n\
                       initial.kind = pure\ninitial.index = 2\ntime.t1 = 1\ntime.steps = 100\n");
        let mut names: Vec<&str> = out.report.entries.iter().map(|e| e.name.as_str()).collect();
        let total = names.len();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), total);
        assert!(out.passed(), "{}", out.report.render());
    }
}
