//! Shape-derivative based uncertainty quantification of the mean scattered field.

pub mod correlation;
pub mod pipeline;
pub mod wave;

pub use correlation::CorrelationMatrix;
pub use pipeline::{
    corrected_mean_field, deterministic_second_datum, first_order_datum, normal_component, solve_correction, solve_exterior,
    solve_reference, CorrectionDatum, CorrelationPipelineState, ExteriorSolution, Perturbation, ReferenceSolution,
};
pub use wave::IncidentWave;
