//! Quality metrics for point patterns.

pub mod bootstrap;
pub mod mds;
pub mod persistence;
pub mod report;
pub mod scdf;
pub mod spectrum;
pub mod wasserstein;

pub use bootstrap::{bootstrap_ci, BootstrapMethod, BootstrapOptions, ConfidenceInterval};
pub use mds::{mds_csv, mds_embed, DistanceMatrix};
pub use persistence::{euler_characteristic, persistence, PersistenceDiagram, PersistenceOptions, PersistencePair};
pub use report::{curve_csv, diagram_distance, diagrams, distance_matrix, euler_curve, mean_block, mean_spectrum, scdf_curve, CurveRow};
pub use scdf::{empty_space_distances, scdf};
pub use spectrum::{fourier_coefficient, radial_spectrum, RadialSpectrum};
pub use wasserstein::{mean_cross_distance, pd_wasserstein, wasserstein_points};
