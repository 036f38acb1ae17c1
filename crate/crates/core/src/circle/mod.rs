//! The major/minor arc dissection and the analytic objects built on it.

pub mod dissection;
pub mod integrals;
pub mod singular;

pub use dissection::{
    arc_half_width, classify_alpha, dissect, least_dirichlet_denominator, major_approx_V, Arc,
    Classification, Dissection,
};
pub use integrals::{
    circle_check, full_circle_integral, hua_moment_quadrature, major_arc_integral, minor_arc_integral,
    weyl_sums_equispaced, CircleCheck, MajorArcIntegral,
};
pub use singular::{
    beta_tail_bound, dirichlet_closed_form, singular_integral_beta, singular_integral_conv, singular_series,
    singular_series_terms, SeriesTerm, SingularIntegral, SingularIntegralMethod, SingularSeries,
    DEFAULT_CONV_CELLS,
};
