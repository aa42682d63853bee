//! Numerical toolkit for property (τ) of measure–cost pairs.

pub mod claims;
pub mod concentration;
pub mod costs;
pub mod error;
pub mod grid;
pub mod infconv;
pub mod measures;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod tau;
pub mod testfn;

pub use costs::{
    cost_origin_indicator, cost_quadratic, cost_u, cost_w, infconv_costs, tensorize, CostFunction,
    SeparableCost,
};
pub use error::{Result, TauError};
pub use grid::{GridFunction, GridSpec};
pub use infconv::{
    infconv_bruteforce, infconv_fast_convex, infconv_lattice, infconv_pointwise, LatticeFunction,
    PointwiseOptions, PointwiseResult, SearchStrategy,
};
pub use measures::{
    convolve, measure_bernoulli_half, measure_exponential, measure_gaussian, measure_laplace,
    measure_reflected_exponential, measure_uniform01, pushforward, DiscreteMeasure, Measure1D,
    ProductMeasure, Pushforward,
};
pub use tau::{
    prekopa_leindler_check, tau_eval_1d, tau_eval_discrete, tau_eval_nd_mc, McOptions,
    PsiEvaluator, TauCouple, TauCoupleReport, Verdict,
};
pub use testfn::{random_test_functions, TestFamily, TestFnParams, TestFunction};
pub use claims::ClaimReport;
pub use concentration::{
    convex_hull_distance, corollary1_experiment, corollary5_experiment, enlargement_tail,
    inclusion_check_un, lipschitz_mgf, poincare_check, talagrand_enlargement_member,
    DeviationExperiment, DeviationResults, HullMode, SetFamily,
};
