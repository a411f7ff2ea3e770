//! Window verification of power-instability certificates for discrete-time
//! linear systems `x(m+1) = A(m) x(m)`.
//!
//! All magnitudes are kept as natural logarithms so that transition norms
//! growing like `e^{m²}` stay representable.

pub mod catalog;
pub mod certificate;
pub mod decimal;
pub mod error;
pub mod estimation;
pub mod logmag;
pub mod lyapunov;
pub mod report;
pub mod sequence;
pub mod system;
pub mod verify;

pub use catalog::{make_example, ExampleId};
pub use certificate::{Certificate, LyapunovCertificate, LyapunovSource, SumBound, SumCriterion};
pub use error::{Error, Result};
pub use logmag::LogMagnitude;
pub use report::{Verdict, VerificationReport, Witness, EPSILON};
pub use sequence::{SequenceForm, SequenceRole, SequenceSpec};
pub use system::{build_system, Norm, System, SystemSpec};
pub use estimation::{GrowthProfile, ScanKind, UpisEstimate};
pub use lyapunov::{LyapunovSequence, LyapunovTable};
