//! Closed-form and numerical companions to the simulator.

mod bounds;
mod cavity;
mod lambert;
mod pk;

pub use bounds::{
    chunk_scaling_bound, expected_max_exponential, harmonic_bound, log_bound, md1_tail_exponent,
    md1_tail_exponent_bisection, BoundRegime, BoundReport, ChunkScalingBound,
};
pub use cavity::{
    cavity_delay_samples, cavity_pmf, simulate_cavity_queue, simulate_cavity_queue_thinned, simulate_modified_cavity_queue,
    simulate_modified_cavity_queue_thinned, CavityPmf,
};
pub use lambert::{lambert_w_lower, lambert_w_principal, BRANCH_POINT};
pub use pk::{deterministic_lst, exponential_lst, pk_mean_workload, pk_workload_transform};
