//! The comparison walk: kernels, exact hitting probabilities, simulation and
//! the inequalities used to control it.

pub mod analysis;
pub mod hitting;
pub mod kernel;

pub use analysis::{
    dump_kernel, excursion_tail_mass, row_dominance, supersolution_check, supersolution_scan,
    verify_rwest, DominanceReport, KernelDump, RwestReport, SupersolutionReport, SupersolutionScan,
    TailMass,
};
pub use hitting::{
    compare_hitting, hitting_chunks, hitting_frequency, hitting_probabilities, hitting_probability,
    simulate_chain, ChainSampler, HittingChunk, HittingComparison, TableKernel, HITTING_CHUNK,
};
pub use kernel::{h_scale, lambda_bar, ChainKernel, Kernel, Variant};
