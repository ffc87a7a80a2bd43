//! Built-in invariant battery on canned models. Every random case uses a
//! fixed seed, so the report is identical from run to run.

use num_complex::Complex64;
use susy_fgkls::linalg::{self, max_abs_diff, CMatrix, CVector};
use susy_fgkls::random::{
    random_density, random_density_in, random_hermitian, random_operator, random_unitary, seeded,
};
use susy_fgkls::{
    build_example_lindblads, build_grid_darboux, build_oscillator, build_spectral_model, evolve_exact, evolve_rk4,
    example3_coefficient_rhs, map_density_forward, rotation_unitary, DensityMatrix, DerivativeScheme,
    ExampleLindbladSpec, FgklsSystem, GridModelSpec, LindbladSet, Operator, Polynomial, Profile, SpectralModelSpec,
    SusyPair, TimeGrid,
};

use crate::config::parse_config;
use crate::report::{Entry, RunReport};
use crate::scenario::{default_tolerance, density_entries, execute, lindblad_entries, structure_entries};

/// Size of `q⁺` corruption applied by fault injection.
const FAULT_SIZE: f64 = 1e-3;
const DENSITY_SAMPLES: usize = 10;

type CaseFn = fn(bool) -> Result<Vec<Entry>, String>;

struct Case {
    name: String,
    run: Box<dyn Fn(bool) -> Result<Vec<Entry>, String>>,
}

fn case(name: impl Into<String>, run: impl Fn(bool) -> Result<Vec<Entry>, String> + 'static) -> Case {
    Case { name: name.into(), run: Box::new(run) }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Names of every case, in execution order.
pub fn case_names() -> Vec<String> {
    cases().into_iter().map(|c| c.name).collect()
}

/// Runs every case whose name contains `filter`. With `inject_fault` the
/// oscillator pairs get a corrupted `q⁺`, which must show up as failures.
pub fn run_check_suite(filter: Option<&str>, inject_fault: bool) -> RunReport {
    let mut report = RunReport::new("check suite");
    let mut ran = 0;
    for c in cases() {
        if filter.is_some_and(|f| !c.name.contains(f)) {
            continue;
        }
        ran += 1;
        match (c.run)(inject_fault) {
            Ok(entries) => {
                for e in entries {
                    report.push(Entry { name: format!("{}.{}", c.name, e.name), ..e });
                }
            }
            Err(message) => {
                report.note(format!("{} error", c.name), message);
                report.push(Entry::upper(format!("{}.completed", c.name), 1.0, 0.0));
            }
        }
    }
    report.note("cases", ran.to_string());
    if inject_fault {
        report.note("fault injection", format!("q+ corrupted by {FAULT_SIZE:e} in the oscillator cases"));
    }
    report
}

fn cases() -> Vec<Case> {
    let mut out = Vec::new();
    for n in 2..=12 {
        out.push(case(format!("oscillator_n{n}"), move |fault| oscillator_case(n, fault)));
    }
    for n in 2..=8 {
        out.push(case(format!("spectral_random_n{n}"), move |_| spectral_case(n)));
    }
    out.push(case("grid_darboux", |_| grid_case()));
    let density: [(&str, CaseFn); 3] = [
        ("density_maps_oscillator", |_| density_case(build_oscillator(6).map_err(err)?, 101)),
        ("density_maps_spectral", |_| density_case(random_spectral(5, true)?, 102)),
        ("density_maps_grid", |_| density_case(grid_model()?, 103)),
    ];
    for (name, f) in density {
        out.push(case(name, f));
    }
    let ramp = Profile::ExponentialRamp { start: Complex64::new(0.2, 0.0), end: Complex64::new(1.0, 0.3), rate: 1.5 };
    let lindblad = [
        (
            "function",
            ExampleLindbladSpec::FunctionOfH(vec![
                Polynomial::new(vec![0.0, 1.0]),
                Polynomial::new(vec![1.0, 0.0, -0.1]),
            ]),
        ),
        (
            "projector",
            ExampleLindbladSpec::ProjectorPair {
                gammas: [ramp, Profile::Constant(Complex64::new(0.0, 0.5))],
                levels: [1, 2],
            },
        ),
        ("supercharge_zero_mode", ExampleLindbladSpec::SuperchargeBuiltZeroMode { delta: 0.7 }),
    ];
    for (name, spec) in lindblad {
        out.push(case(format!("lindblad_maps_{name}"), move |_| {
            lindblad_case(&build_oscillator(6).map_err(err)?, &spec)
        }));
    }
    out.push(case("lindblad_maps_supercharge", |_| {
        let spec = SpectralModelSpec::new(vec![1.0, 2.0, 3.0, 4.0], false, rotation_unitary(4, 0.3)).map_err(err)?;
        let pair = build_spectral_model(&spec).map_err(err)?;
        lindblad_case(&pair, &ExampleLindbladSpec::SuperchargeBuilt { delta: 0.5 })
    }));
    out.push(case("integrator_random4", |_| integrator_case()));
    for (name, text) in EXAMPLES {
        out.push(case(*name, move |_| example_case(text)));
    }
    out.push(case("example3_identity_overlap", |_| identity_overlap_case()));
    out
}

fn tol(name: &str) -> f64 {
    default_tolerance(name)
}

fn count_entries(pair: &SusyPair, expected: usize) -> Vec<Entry> {
    vec![
        Entry::upper("zero_modes_minus", pair.zero_modes_minus().ncols().abs_diff(expected) as f64, 0.0),
        Entry::upper("zero_modes_plus", pair.zero_modes_plus().ncols().abs_diff(expected) as f64, 0.0),
    ]
}

fn oscillator_case(n: usize, fault: bool) -> Result<Vec<Entry>, String> {
    let mut pair = build_oscillator(n).map_err(err)?;
    if fault {
        pair = pair.with_corrupted_q_plus(FAULT_SIZE);
    }
    let mut entries = structure_entries(&pair, tol);
    entries.extend(count_entries(&pair, 1));
    Ok(entries)
}

fn random_spectral(n: usize, zero_level: bool) -> Result<SusyPair, String> {
    let energies: Vec<f64> = (1..=n).map(|k| k as f64 + 0.25 * (k * k) as f64).collect();
    let u = random_unitary(n, &mut seeded(7000 + n as u64));
    build_spectral_model(&SpectralModelSpec::new(energies, zero_level, u).map_err(err)?).map_err(err)
}

fn spectral_case(n: usize) -> Result<Vec<Entry>, String> {
    let zero_level = n % 2 == 1;
    let pair = random_spectral(n, zero_level)?;
    let mut entries = structure_entries(&pair, tol);
    entries.extend(count_entries(&pair, usize::from(zero_level)));
    Ok(entries)
}

const GRID_HALF_WIDTH: f64 = 8.0;
const GRID_POINTS: usize = 201;

fn grid_spec() -> Result<GridModelSpec, String> {
    Ok(GridModelSpec::from_polynomial(GRID_HALF_WIDTH, GRID_POINTS, &[0.0, 1.0])
        .map_err(err)?
        .with_scheme(DerivativeScheme::Sinc))
}

fn grid_model() -> Result<SusyPair, String> {
    Ok(build_grid_darboux(&grid_spec()?).map_err(err)?.pair)
}

fn grid_case() -> Result<Vec<Entry>, String> {
    let model = build_grid_darboux(&grid_spec()?).map_err(err)?;
    let pair = &model.pair;
    let mut entries = structure_entries(pair, tol);
    entries.extend(count_entries(pair, 1));
    let e = pair.spectrum1().eigenvalues();
    entries.push(Entry::upper("ground_energy", e[0].abs(), 1e-6));
    for (n, &level) in e.iter().enumerate().take(5).skip(1) {
        let target = 2.0 * n as f64;
        entries.push(Entry::upper(format!("ladder_level_{n}"), (level - target).abs() / target, 1e-2));
    }
    let mut gauss =
        CVector::from_iterator(model.x.len(), model.x.iter().map(|x| Complex64::new((-0.5 * x * x).exp(), 0.0)));
    gauss.unscale_mut(gauss.norm());
    let overlap = (pair.zero_modes_minus().adjoint() * &gauss)[(0, 0)].norm();
    entries.push(Entry::lower("ground_state_overlap", overlap, 0.999));
    Ok(entries)
}

/// Random state with independent zero-mode and positive-sector blocks.
fn block_density(pair: &SusyPair, weight: f64, seed: u64) -> Result<DensityMatrix, String> {
    let mut rng = seeded(seed);
    let positive = random_density_in(&pair.energy_basis(), &mut rng).into_matrix();
    let m = if pair.zero_mode_count() > 0 {
        let zero = random_density_in(pair.zero_modes_minus(), &mut rng).into_matrix();
        positive.scale(1.0 - weight) + zero.scale(weight)
    } else {
        positive
    };
    DensityMatrix::normalized(linalg::hermitian_part(&m)).map_err(err)
}

fn density_case(pair: SusyPair, seed: u64) -> Result<Vec<Entry>, String> {
    let samples = if pair.dim() > 50 { 3 } else { DENSITY_SAMPLES };
    let mut worst: Vec<Entry> = Vec::new();
    for k in 0..samples {
        let weight = 0.1 + 0.8 * k as f64 / samples as f64;
        let rho1 = block_density(&pair, weight, seed * 1000 + k as u64)?;
        let rho2 = map_density_forward(&pair, &rho1, None).map_err(err)?;
        let entries = density_entries(&pair, &rho1, &rho2, tol).map_err(err)?;
        if worst.is_empty() {
            worst = entries;
        } else {
            for (w, e) in worst.iter_mut().zip(entries) {
                w.value = w.value.max(e.value);
            }
        }
    }
    Ok(worst)
}

fn lindblad_case(pair: &SusyPair, spec: &ExampleLindbladSpec) -> Result<Vec<Entry>, String> {
    let (set1, set2) = build_example_lindblads(pair, spec).map_err(err)?;
    lindblad_entries(pair, &set1, &set2, &[0.0, 0.7, 3.0], tol).map_err(err)
}

fn random_system(n: usize, seed: u64) -> Result<FgklsSystem, String> {
    let mut rng = seeded(seed);
    let h = random_hermitian(n, 1.0, &mut rng);
    let ops = (0..2).map(|_| Operator::new(random_operator(n, 0.5, &mut rng))).collect::<Result<Vec<_>, _>>();
    FgklsSystem::new(h, LindbladSet::new(ops.map_err(err)?).map_err(err)?).map_err(err)
}

fn final_error(system: &FgklsSystem, rho0: &DensityMatrix, t1: f64, steps: usize) -> Result<f64, String> {
    let exact = evolve_exact(system, rho0, &[t1]).map_err(err)?;
    let grid = TimeGrid::new(0.0, t1, steps, steps).map_err(err)?;
    let rk = evolve_rk4(system, rho0, &grid).map_err(err)?;
    Ok(max_abs_diff(rk.final_state().unwrap().matrix(), exact.final_state().unwrap().matrix()))
}

fn integrator_case() -> Result<Vec<Entry>, String> {
    let system = random_system(4, 41)?;
    let rho0 = random_density(4, &mut seeded(42));
    let grid = TimeGrid::new(0.0, 5.0, 5000, 500).map_err(err)?;
    let rk = evolve_rk4(&system, &rho0, &grid).map_err(err)?;
    let exact = evolve_exact(&system, &rho0, &rk.times).map_err(err)?;
    let agreement =
        rk.states.iter().zip(&exact.states).map(|(a, b)| max_abs_diff(a.matrix(), b.matrix())).fold(0.0, f64::max);
    let ratio = final_error(&system, &rho0, 2.0, 50)? / final_error(&system, &rho0, 2.0, 100)?;
    Ok(vec![
        Entry::upper("rk4_vs_exact", agreement, 1e-6),
        Entry::upper("order_ratio_deviation", (ratio - 16.0).abs(), 4.0),
        Entry::upper("trace_conservation", rk.max_trace_drift(), 1e-10),
    ])
}

const EXAMPLES: &[(&str, &str)] = &[
    (
        "example1_function_of_h",
        "name = example1\nmodel.kind = spectral\nmodel.energies = 1, 2.5, 4\nmodel.unitary = rotation\n\
         model.theta = 0.3\nlindblad.kind = function\nlindblad.functions = 0, 1\nevolve = both\n\
         initial.kind = coherent\ninitial.indices = 0, 1, 2\ninitial.amplitudes = 0.6, 0.48i, 0.64\n\
         time.t1 = 5\ntime.steps = 5000\ntime.sample_every = 100\n",
    ),
    (
        "example2_projector_pair",
        "name = example2\nmodel.kind = oscillator\nmodel.levels = 6\nlindblad.kind = projector\n\
         lindblad.gamma1 = 1\nlindblad.gamma2 = 0.5i\nlindblad.levels = 1, 2\nevolve = both\n\
         initial.kind = coherent\ninitial.indices = 1, 2, 3\ninitial.amplitudes = 0.6, 0.64, 0.48i\n\
         time.t1 = 5\ntime.steps = 5000\ntime.sample_every = 100\n",
    ),
    (
        "example3_supercharge",
        "name = example3\nmodel.kind = spectral\nmodel.energies = 1, 2, 3, 4\nmodel.unitary = rotation\n\
         model.theta = 0.3\nlindblad.kind = supercharge\nlindblad.delta = 0.5\nevolve = both\n\
         initial.kind = coherent\ninitial.indices = 0, 2\ninitial.amplitudes = 0.6, 0.8i\n\
         time.t1 = 5\ntime.steps = 5000\ntime.sample_every = 100\n",
    ),
    (
        "example4_zero_mode",
        "name = example4\nmodel.kind = oscillator\nmodel.levels = 12\nlindblad.kind = supercharge_zero_mode\n\
         lindblad.delta = 0.7\nevolve = both\ninitial.kind = coherent\ninitial.indices = 1, 2, 3\n\
         initial.amplitudes = 0.6, 0.64, 0.48i\ntime.t1 = 5\ntime.steps = 5000\ntime.sample_every = 100\n",
    ),
];

fn example_case(text: &str) -> Result<Vec<Entry>, String> {
    let config = parse_config(text).map_err(err)?;
    let outcome = execute(&config).map_err(|e| format!("{e:#}"))?;
    Ok(outcome.report.entries)
}

/// With `O = 1` the dissipative part of the coefficient equation vanishes.
fn identity_overlap_case() -> Result<Vec<Entry>, String> {
    let energies = [1.0, 2.0, 3.0, 4.0];
    let r = random_density(4, &mut seeded(77)).into_matrix();
    let rhs = example3_coefficient_rhs(&r, &energies, &linalg::identity(4), 0.5).map_err(err)?;
    let coherent = CMatrix::from_fn(4, 4, |m, n| Complex64::new(0.0, -(energies[m] - energies[n])) * r[(m, n)]);
    Ok(vec![Entry::upper("dissipator_cancellation", max_abs_diff(&rhs, &coherent), 1e-10)])
}
