//! Determinantal point process machinery: kernel assembly, eigendecomposition,
//! elementary symmetric polynomials, k-DPP sampling and the space squeeze.

mod eigen;
mod esp;
mod kdpp;
mod kernel;
mod sampler;
mod squeeze;

pub use eigen::{eig_sym, jacobi_eigen, EigenBasis};
pub use esp::{esp, EspTable};
pub use kdpp::{sample_kdpp, sample_kdpp_rows};
pub use kernel::{build_kernel, cosine, diversity_term, quality_term, Kernel, KernelContext};
pub use sampler::{
    default_sample_size, layer_diverse_sample, sample_independent, SampleOutcome, SampleStore,
    SamplerKind,
};
pub use squeeze::{dominant_column, squeeze};
