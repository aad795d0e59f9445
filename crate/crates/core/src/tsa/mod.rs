//! Nonlinear time-series analysis: spectrum, delay embedding, Lyapunov
//! exponent, and the regular/chaotic verdict built on them.

pub mod embed;
pub mod lyapunov;
pub mod spectrum;

pub use embed::{ami_delay, fnn_embedding_dim, DelayChoice, Embedding, FnnOptions, FnnResult};
pub use lyapunov::{
    curve_for_plot, rosenstein_lambda, FitContext, FitOutcome, FitRange, LyapunovCurve, RosensteinOptions,
};
pub use spectrum::{power_spectrum, LagWindow, PowerSpectrum};
