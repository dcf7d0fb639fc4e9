//! Statistics that summarize a pattern: wavelet phase harmonic covariances
//! of its rasterization, and nearest-neighbour distance distributions.

pub mod gamma;
pub mod harmonic;
pub mod nnd;
pub mod wph;

pub use gamma::{GammaEntry, GammaSet, GammaVariant, HarmonicField};
pub use nnd::{nnd_descriptor, NndConfig, NndEnergy};
pub use wph::{wph_descriptor, wph_descriptor_adjoint, wph_forward, DescriptorVector, WphForward};
