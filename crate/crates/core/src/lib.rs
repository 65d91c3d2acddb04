//! Transport through one-dimensional tight-binding samples coupled to two
//! electronic reservoirs.
//!
//! The crate covers band spectra of periodized samples, finite-`N` and
//! crystalline-limit transmittances, Landauer-Büttiker and Thouless currents,
//! and a resolvent oracle that cross-checks every closed-form quantity.
//!
//! ```
//! use thouless_lab::{LeadModel, SampleSpec, transmittance_inf};
//!
//! let sample = SampleSpec::homogeneous(1, 1.0, 0.0).unwrap();
//! let lead = LeadModel::half_line_chain(1.0, 0.0).unwrap();
//! let t = transmittance_inf(&sample, &lead, &lead, 2f64.sqrt(), 0.0).unwrap();
//! assert!((t - 0.8).abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod currents;
pub mod error;
pub mod green;
pub mod jacobi;
pub mod leads;
pub mod oracle;
pub mod quadrature;
pub mod transport;

pub use currents::{
    convergence_study, crystalline_currents, fermi_dirac, lb_currents, sign_change_point,
    thouless_currents, weights, zero_temperature_conductance, Conductance, ConvergenceRow,
    ConvergenceTable, CurrentReport, ThermoState, WeightFunction, Weights,
};
pub use error::{Error, Result};
pub use green::GreenMatrix2;
pub use jacobi::{Band, BandSpectrum, SampleSpec, TransferMatrix2, EDGE_WINDOW};
pub use leads::{BoundaryValue, LeadModel, Side, TabulatedLead};
pub use oracle::{oracle_transmittance, resolvent_green};
pub use quadrature::{integrate_bands, integrate_bands_vec, QuadratureConfig, QuadratureEstimate};
pub use transport::{
    r_theta_diagnostic, sample_green, transfer_eigendata, transmittance_inf, transmittance_n,
    RThetaDiagnostic, TransferEigenData,
};
