//! Joint design of transmit waveform, active-RIS reflections and space-time
//! receive filter for multi-RIS integrated sensing and communication.

pub mod error;
pub mod linalg;
pub mod scenario;
pub mod stap;
pub mod comm;
pub mod qp;
pub mod filter;
pub mod waveform;
pub mod ris;
pub mod init;
pub mod driver;

pub use error::{Error, Result};
