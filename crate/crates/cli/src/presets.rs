//! Built-in experiment presets, embedded at compile time. `list` prints
//! the catalog; `run <name>` accepts a preset name anywhere a config path
//! is accepted.

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "honig",
        summary: "two-point multiplicative counterexample: a.s. coupling with divergent means",
        toml: include_str!("../presets/honig.toml"),
    },
    Preset {
        name: "affine-var",
        summary: "stationary variance of a contracting scalar affine recursion",
        toml: include_str!("../presets/affine-var.toml"),
    },
    Preset {
        name: "lindley-mm1",
        summary: "M/M/1 waiting times: suffix-max identity and mean 0.5",
        toml: include_str!("../presets/lindley-mm1.toml"),
    },
    Preset {
        name: "gwi-drift",
        summary: "subcritical branching with immigration under the drift condition",
        toml: include_str!("../presets/gwi-drift.toml"),
    },
    Preset {
        name: "langevin-quadratic",
        summary: "strong-convexity envelope contraction for the Langevin iteration",
        toml: include_str!("../presets/langevin-quadratic.toml"),
    },
    Preset {
        name: "sg-bias",
        summary: "averaging bias of constant-gain stochastic gradient under dependent noise",
        toml: include_str!("../presets/sg-bias.toml"),
    },
    Preset {
        name: "forward-backward",
        summary: "forward/backward distributional equality under i.i.d. noise",
        toml: include_str!("../presets/forward-backward.toml"),
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn load(name: &str) -> CliResult<ExperimentConfig> {
    let preset = find(name)
        .ok_or_else(|| CliError::Config(format!("unknown preset \"{name}\"; try `list`")))?;
    ExperimentConfig::from_toml(preset.toml)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_contains_the_expected_names() {
        for name in [
            "honig",
            "affine-var",
            "lindley-mm1",
            "gwi-drift",
            "langevin-quadratic",
            "sg-bias",
            "forward-backward",
        ] {
            assert!(find(name).is_some(), "missing preset {name}");
        }
    }

    #[test]
    fn every_preset_validates() {
        for preset in PRESETS {
            load(preset.name).unwrap_or_else(|e| panic!("preset {} invalid: {e}", preset.name));
        }
    }
}
