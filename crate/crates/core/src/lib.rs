//! Measurement back-action lab: transition amplitudes along the back-action
//! orbit `exp(-iφA/ħ)|ψ⟩`, their action and weak values, discrete von Neumann
//! meters with Fourier pointer readout, and the resolution versus
//! back-action trade-off.

pub mod backaction;
pub mod error;
pub mod meter;
pub mod quantum;
pub mod scenarios;
pub mod uncertainty;
pub mod verify;

pub use backaction::{ActionCurve, BackActionContext};
pub use error::{LabError, Result};
pub use meter::{GaussianMeter, MeterModel, ReadoutBasis, ReadoutDistribution};
pub use quantum::{ComplexMatrix, ComplexVector, Observable, StateVector, C64};
