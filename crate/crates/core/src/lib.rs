//! Spectral analysis of energy-dependent Sturm-Liouville pencils
//! T(lambda) = lambda^2 - lambda B - A on (0, 1) with distributional q = r'.
//!
//! Modules build on each other: `potentials` defines problems, `shooting`
//! integrates the quasi-derivative system, `spectrum` locates and enumerates
//! eigenvalues, `norming` computes norming constants and related sequences,
//! `pontryagin` provides the finite-dimensional indefinite-metric model, and
//! `verify` bundles cross-checks shared by the test suite and the CLI.

pub mod error;
pub mod norming;
pub mod pontryagin;
pub mod potentials;
pub mod random;
pub mod shooting;
pub mod report;
pub mod spectrum;
pub mod verify;

pub use error::{NormingError, PontryaginError, ProblemError, ShootingError, SpectrumError};
pub use pontryagin::{
    discretize, eigenvector, gram_value, interlace_check, linearization_build,
    linearization_spectrum, tm_negativity_check, DiscretizedPencil, InterlaceReport, Linearization,
};
pub use potentials::{
    load_problem, BoundaryCondition, InterpOrder, PotentialFn, ProblemSpec, SampledPotential,
};
pub use random::{
    random_definite_problem, random_indefinite_problem, random_mild_problem, random_problem,
};
pub use report::{render_json, CheckRecord, EigenvalueRecord, NormingRecord, Report};
pub use shooting::{
    characteristic_values, characteristic_values_tol, eigenfunction_chain, integrate_shooting,
    wronskian_check, CharacteristicPair, EigenfunctionChain, Grid, ShootingSolution,
};
pub use norming::{
    alpha_direct, alpha_direct_refined, alpha_from_characteristic, alpha_from_two_spectra,
    attach_norming, beta_from_alpha, build_gram, delta_relation_check, eta_sequence,
    gram_from_chain, hankel_matrix, BlockKind, DeltaReading, DeltaReport, GramBlock, GramMatrix,
    HankelBlock, NormingConstant, Orientation, Route,
};
pub use spectrum::{
    auto_shift, complex_spectrum, count_negative_a, count_negative_a_robin, enumerate_spectrum,
    multiplicity,
    real_spectrum, reduced_char, spectral_data, winding_number, Eigenvalue, Pencil, Rect,
    SpectralData, SpectralFlags,
};
