//! Equity default swap pricing under a hyperexponential approximation to the
//! CGMY Lévy process.
//!
//! Pipeline: fit an exponential mixture to the CGMY power kernel
//! ([`hyperexp`]), assemble the approximating jump-diffusion ([`levymodel`]),
//! factor it in closed form ([`wienerhopf`]), invert the first-passage
//! transforms ([`inversion`]) and price the swap ([`eds`]).

pub mod calibration;
pub mod eds;
pub mod error;
pub mod hyperexp;
pub mod inversion;
pub mod levymodel;
pub mod mcoracle;
pub mod optim;
pub mod pipeline;
pub mod poly;
pub mod quadrature;
pub mod validate;
pub mod wienerhopf;

pub use error::{Error, Result};
pub use num_complex::Complex64;
