//! Echolocation training toolkit: wave simulation of a listener's head near a
//! planar target, binaural impulse-response banks, stimulus rendering, trial
//! sessions and shape-drawing analytics.

pub mod geometry;
pub mod fdtd;
pub mod irbank;
pub mod synth;
pub mod analytics;
pub mod session;
pub mod cli;
