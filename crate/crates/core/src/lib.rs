//! Restoration of directional images degraded by blur and Poisson noise with
//! the KL-DTGV² model, solved by ADMM with DFT-diagonalized subproblems.
//!
//! ```no_run
//! use kldtgv::prelude::*;
//!
//! let u_true = make_stripe_phantom(128, 128, 0.5, StripeProfile::Constant, 14, 7)?;
//! let psf = PsfChoice::OutOfFocus { radius: 5.0 };
//! let blur = psf.operator(128, 128)?;
//! let degraded = degrade(&u_true, &DegradationConfig::new(psf, 43.0, 7), &blur)?;
//!
//! let estimate = estimate_direction(&degraded.b)?;
//! let config = SolverConfig { lambda: 3000.0, theta: estimate.theta, ..Default::default() };
//! let ops = config.operators(blur)?;
//! let (u, report) = run_admm(&degraded.b, &config, &ops)?;
//! println!("{} iterations, RMSE {:.4e}", report.iterations(), rmse(&u, &u_true)?);
//! # Ok::<(), kldtgv::Error>(())
//! ```

pub mod admm;
pub mod cli;
pub mod degrade;
pub mod direction;
pub mod error;
pub mod fft;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod operators;

pub use error::{Error, Result};

/// The types and functions most programs need.
pub mod prelude {
    pub use crate::admm::{run_admm, Background, Regularizer, SolveReport, SolverConfig, StopReason};
    pub use crate::degrade::{degrade, make_stripe_phantom, DegradationConfig, Degraded, PsfChoice, StripeProfile};
    pub use crate::direction::{estimate_direction, DirectionEstimate};
    pub use crate::error::{Error, Result};
    pub use crate::grid::{ImageGrid, StackedField2, StackedField4};
    pub use crate::metrics::{isnr, mssim, rmse, QualityRecord};
    pub use crate::operators::{DirectionalSpec, Operators};
}
