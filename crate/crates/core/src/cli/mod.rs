//! Config-driven runs, output files and plots behind the `bandchain` binary.

pub mod config;
pub mod diagnostics;
pub mod output;
pub mod plot;
pub mod presets;
pub mod run;

pub use config::{random_spec, CompareConfig, HamiltonianForm, Method, Mode, ResolvedConfig, RunConfig, SpecSource, SubRun};
pub use output::{emit_csv, emit_matrix_csv, read_csv, Manifest, Trajectory};
pub use plot::{emit_plot, Figure, Heatmap, LinePlot, Series, SeriesStyle};
pub use run::{compare_trajectories, run, ComparisonReport, RunOutcome};
pub use presets::{run_reproduction_suite, Overrides, Preset, ReproReport};
