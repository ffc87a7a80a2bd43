//! Fixtures shared by the kernel benchmarks.

use susy_fgkls::random::{random_density_in, seeded};
use susy_fgkls::{
    build_example_lindblads, build_oscillator, DensityMatrix, ExampleLindbladSpec, FgklsSystem, SusyPair,
};

/// Oscillator pair with the projected supercharge dissipator on partner 1.
pub fn oscillator_system(levels: usize, delta: f64) -> (SusyPair, FgklsSystem) {
    let pair = build_oscillator(levels).expect("oscillator pair");
    let (set1, _) =
        build_example_lindblads(&pair, &ExampleLindbladSpec::SuperchargeBuiltZeroMode { delta }).expect("dissipators");
    let system = FgklsSystem::new(pair.h1().clone(), set1).expect("system");
    (pair, system)
}

/// Random state on the positive sector of partner 1.
pub fn positive_state(pair: &SusyPair, seed: u64) -> DensityMatrix {
    random_density_in(&pair.energy_basis(), &mut seeded(seed))
}
