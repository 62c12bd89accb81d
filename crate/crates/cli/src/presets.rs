//! Built-in experiment presets.

use crate::{CliError, CliResult};

pub const PRESETS: [(&str, &str); 2] = [
    ("rosset-comment-fig1", include_str!("../presets/rosset-comment-fig1.toml")),
    ("prop-suite", include_str!("../presets/prop-suite.toml")),
];

pub fn get(name: &str) -> CliResult<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::usage(format!("unknown preset `{name}` (available: {})", names.join(", ")))
        })
}
