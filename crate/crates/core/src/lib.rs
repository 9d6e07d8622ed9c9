//! Detail-injection pansharpening.
//!
//! Classical component-substitution and multiresolution injectors, four
//! three-layer CNNs (PNN, DRPNN and the detail-learning DiCNN1/DiCNN2) trained
//! from scratch with exact backprop, Wald-protocol degradation, and the
//! Q2ⁿ/SAM/ERGAS/SCC reduced-resolution assessment.
//!
//! ```no_run
//! use dipan::{resample::WaldConfig, synthetic, metrics};
//!
//! let wald = WaldConfig::default();
//! let triple = synthetic::synthetic_triple(&synthetic::default_scene(), &wald).unwrap();
//! let report = metrics::evaluate(&triple.lrms_interp, &triple.reference,
//!                                &metrics::QualityConfig::new(wald.ratio)).unwrap();
//! println!("{}", report.csv_row("EXP"));
//! ```

pub mod arch;
pub mod classical;
pub mod harness;
pub mod error;
pub mod io;
pub mod metrics;
pub mod nn;
pub mod raster;
pub mod resample;
pub mod synthetic;
pub mod theory;

pub use error::{Error, Result};
pub use raster::{DetailImage, MsImage, PanImage, RasterBand, Role};
