//! Shunt-electrode EIT simulation and monotonicity-based inclusion
//! detection from ultrasound-modulated DC and ratio-weighted AC
//! measurements.
//!
//! All numerical code is generic over a [`Real`] scalar (`f64` or `f32`);
//! the aliases below fix the usual `f64` instantiation.

pub mod dense;
pub mod eigen;
pub mod error;
pub mod export;
pub mod fem;
pub mod geometry;
pub mod measurements;
pub mod monotonicity;
pub mod phantom;
pub mod scalar;
pub mod scan;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;

pub type Mesh = geometry::Mesh<f64>;
pub type ElectrodeLayout = geometry::ElectrodeLayout<f64>;
pub type RegionSpec = geometry::RegionSpec<f64>;
pub type Phantom = phantom::Phantom<f64>;
pub type Inclusion = phantom::Inclusion<f64>;
pub type Modulation = phantom::Modulation<f64>;
pub type ContrastConstants = phantom::ContrastConstants<f64>;
pub type ShuntSystem = fem::ShuntSystem<f64>;
pub type FieldSolution = fem::FieldSolution<f64>;
pub type MeasurementMatrix = measurements::MeasurementMatrix<f64>;
pub type DefinitenessReport = monotonicity::DefinitenessReport<f64>;
pub type ScanConfig = scan::ScanConfig<f64>;
pub type ScanResult = scan::ScanResult<f64>;

pub type MeshF32 = geometry::Mesh<f32>;
pub type PhantomF32 = phantom::Phantom<f32>;
pub type ShuntSystemF32 = fem::ShuntSystem<f32>;
pub type MeasurementMatrixF32 = measurements::MeasurementMatrix<f32>;

pub use fem::{assemble, interior_energy};
pub use geometry::{build_disk_mesh, refine_mesh};
pub use measurements::{adjacent_dipole_patterns, measurement_matrix, DrivePatternSet};
pub use monotonicity::{difference_matrix, eigen_spectrum, estimate_delta, regularized_test};
pub use phantom::{pointwise_identities, FreqMode, ModulationSign, TestCase};
