//! Experiment harness around `girsanov-core`: flat config files, dispatch to
//! the diagnostics, JSON reports written atomically, and CSV or text tables.
//!
//! ```no_run
//! use girsanov_gate::{parse_config_str, run_experiment};
//!
//! let cfg = parse_config_str("scenario=trivial-unit\nmc.seed=1\n").unwrap();
//! let report = run_experiment(&cfg).unwrap();
//! println!("{}", report.to_json());
//! ```

pub mod config;
pub mod convergence;
pub mod error;
pub mod render;
pub mod report;

pub use config::{apply_env, parse_config, parse_config_str, render_config, ExperimentConfig, Operation, OutputFormat};
pub use convergence::{convergence_study, ConvergenceReport};
pub use error::{exit, CliError};
pub use render::{render, render_catalog, render_csv, render_text};
pub use report::{run_experiment, write_atomic, Report};

use girsanov_core::scenarios::{build_scenario, override_keys, Overrides};

/// The `explain` subcommand: catalog metadata and resolved defaults.
pub fn explain(name: &str) -> Result<String, CliError> {
    let s = build_scenario::<f64>(name, &Overrides::new())?;
    let m = &s.metadata;
    let mut out = String::new();
    let mut line = |k: &str, v: &str| {
        out.push_str(&format!("{k:<12} {v}\n"));
    };
    line("scenario", &s.name);
    line("description", &s.description);
    line("expected", m.expected.as_str());
    line("analytic UI", m.analytic_ui.as_str());
    line("branch", &m.branch);
    line("feller", m.feller.map_or("-", |p| p.as_str()));
    let times: Vec<String> = s.times.iter().map(ToString::to_string).collect();
    line("times", &times.join(","));
    let mut body = String::new();
    render::wrap_into(&mut body, &m.notes, 13);
    out.push_str(&format!("{:<12} {}", "notes", body.trim_start()));
    out.push_str("parameters:\n");
    for k in override_keys(name) {
        let v = s.parameters.get(k).map(String::as_str).unwrap_or("-");
        let key = if ["h", "n", "k_max", "n_max"].contains(&k) {
            format!("mc.{k}")
        } else {
            format!("scenario.{k}")
        };
        out.push_str(&format!("  {key:<18} {v}\n"));
    }
    out.push_str(&format!("  {:<18} required\n", "mc.seed"));
    Ok(out)
}
