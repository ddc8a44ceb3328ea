//! Random walks on `Z_p / p^m Z_p`, the heat kernel of Brownian motion on `Z_p`,
//! and numerical diagnostics for the convergence of the former to the latter.

pub mod convergence;
pub mod error;
pub mod history;
pub mod kernel;
pub mod oracle;
pub mod padic;
pub mod params;
pub mod rng;
pub mod walk;

pub use error::{Error, Result};
pub use history::History;
pub use kernel::{LimitKernel, SymbolConvention};
pub use padic::{Ball, Digits, DualElement, Group, GroupElement, RadialProfile, Side, Valuation};
pub use params::Params;
pub use walk::{StepLaw, TimeScale};
