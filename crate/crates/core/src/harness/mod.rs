//! Configuration, scenario runners, presets and result files.

pub mod config;
pub mod output;
pub mod presets;
pub mod scenario;

pub use config::{parse_config, parse_layers, ConfigError, ScenarioConfig, ScenarioKind, SweepAxis};
pub use output::{write_outputs, Column, ManifestInfo, RunOutput, Status, Table};
pub use presets::{Preset, PRESETS};
pub use scenario::{run_scenario, run_sweep};

/// Worker cap from `RYDXPM_THREADS`, if set to a positive integer.
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var("RYDXPM_THREADS")
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|n: &usize| *n > 0)
}
