pub mod accuracy;
pub mod analytic;
pub mod circuit;
pub mod discrete;
pub mod equalization;
pub mod error;
pub mod laplace;
pub mod modulation;
pub mod scenario;
pub mod spectrum;
pub mod waveform;
