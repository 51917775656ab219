//! Experiment harness around `asaga-core`: dataset IO and caches, timed
//! serial and multi-threaded runs, trace persistence, speedup and overlap
//! reports, and the built-in property suite behind `asaga verify`.

pub mod checks;
pub mod gridsearch;
pub mod io;
pub mod run;
pub mod speedup;
pub mod synth;
pub mod trace;
pub mod xstar;

pub use run::{run_experiment, RunError, RunOptions, RunOutput};
pub use trace::{Trace, TraceRecord};
