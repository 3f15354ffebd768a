//! Run configuration: one JSON document covering every tunable knob, with
//! explicit defaults and strict (unknown-key-rejecting) parsing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_params, EblParams, OlParams, ShotBounds};
use crate::opt::OptConfig;

/// Input/output locations. Command-line flags override any of these.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoPaths {
    /// Shot-list CSV to start from; commands that can self-initialize
    /// (fracture-based) treat absence as "derive from the target".
    pub shots_in: Option<String>,
    /// Target raster (PFM). Mask-level for `mdp`, wafer-level for `ilt`.
    pub target_in: Option<String>,
    /// Directory where all outputs land.
    pub out_dir: String,
}

/// The fully-resolved run configuration. Every field has a default, so an
/// empty document `{}` is valid; `config-dump` prints the resolved form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Mask grid resolution M (the simulation raster is M x M).
    pub grid_size: usize,
    pub ebl: EblParams,
    pub optical: OlParams,
    pub bounds: ShotBounds,
    pub opt: OptConfig,
    pub paths: IoPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid_size: 512,
            ebl: EblParams::default(),
            optical: OlParams::default(),
            bounds: ShotBounds::default(),
            opt: OptConfig::default(),
            paths: IoPaths {
                shots_in: None,
                target_in: None,
                out_dir: "out".to_string(),
            },
        }
    }
}

impl RunConfig {
    /// Parses a configuration file. Unknown keys and type mismatches are
    /// parse errors (exit code 2); range violations surface later through
    /// [`RunConfig::validate`] (exit code 3).
    pub fn load(path: &Path) -> Result<RunConfig> {
        let name = path.display().to_string();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(name.clone(), e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(name, e.to_string()))
    }

    /// Checks every cross-field invariant the numeric layers rely on.
    pub fn validate(&self) -> Result<()> {
        validate_params(&self.ebl, &self.bounds, self.grid_size)?;
        self.optical.validate()?;
        self.opt.validate()?;
        Ok(())
    }

    /// The resolved configuration as pretty JSON, as printed by
    /// `config-dump`. Feeding the output back in reproduces the run.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LossWeights;
    use crate::opt::{ForwardModel, UpdateFrom};

    fn write_tmp(body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, body).unwrap();
        (dir, path)
    }

    #[test]
    fn empty_document_resolves_to_defaults() {
        let (_dir, path) = write_tmp("{}");
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
        // The advertised placeholder defaults.
        assert_eq!(cfg.grid_size, 512);
        assert_eq!(cfg.ebl.sigma_f, 3.0);
        assert_eq!(cfg.ebl.sigma_b, 30.0);
        assert_eq!(cfg.ebl.eta, 0.8);
        assert_eq!(cfg.ebl.theta_z, 50.0);
        assert_eq!(cfg.ebl.e_th, 0.5);
        assert_eq!(cfg.opt.sigma_prime, 0.5);
        assert_eq!((cfg.bounds.w_min, cfg.bounds.w_max), (1, 64));
        assert_eq!((cfg.bounds.h_min, cfg.bounds.h_max), (1, 64));
        assert_eq!((cfg.bounds.d_min, cfg.bounds.d_max), (0.5, 2.0));
        assert_eq!(cfg.opt.weights, LossWeights::default());
        assert_eq!(cfg.opt.epochs, 200);
    }

    #[test]
    fn partial_sections_override_only_named_keys() {
        let (_dir, path) = write_tmp(
            r#"{
                "grid_size": 128,
                "ebl": { "sigma_f": 2.0 },
                "opt": { "epochs": 7, "update_from": "raw", "forward": "exact" },
                "paths": { "out_dir": "results" }
            }"#,
        );
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.grid_size, 128);
        assert_eq!(cfg.ebl.sigma_f, 2.0);
        assert_eq!(cfg.ebl.sigma_b, 30.0); // untouched default
        assert_eq!(cfg.opt.epochs, 7);
        assert_eq!(cfg.opt.update_from, UpdateFrom::Raw);
        assert_eq!(cfg.opt.forward, ForwardModel::Exact);
        assert_eq!(cfg.opt.lr, OptConfig::default().lr);
        assert_eq!(cfg.paths.out_dir, "results");
        assert_eq!(cfg.paths.shots_in, None);
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        for body in [
            r#"{ "grid": 128 }"#,
            r#"{ "ebl": { "sigma": 1.0 } }"#,
            r#"{ "opt": { "weights": { "zeta": 1.0 } } }"#,
            r#"{ "paths": { "outdir": "x" } }"#,
        ] {
            let (_dir, path) = write_tmp(body);
            let err = RunConfig::load(&path).unwrap_err();
            assert!(matches!(err, Error::Parse { .. }), "{body}: {err:?}");
            assert_eq!(err.exit_code(), 2, "{body}");
        }
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        let (_dir, path) = write_tmp("{ not json");
        let err = RunConfig::load(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn out_of_range_values_fail_validation_not_parsing() {
        let (_dir, path) = write_tmp(r#"{ "ebl": { "sigma_f": -1.0 } }"#);
        let cfg = RunConfig::load(&path).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, Error::InvalidParam(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn dump_round_trips_through_the_parser() {
        let cfg = RunConfig {
            grid_size: 256,
            opt: OptConfig {
                lr: 0.005,
                ..OptConfig::default()
            },
            paths: IoPaths {
                shots_in: Some("shots.csv".into()),
                ..IoPaths::default()
            },
            ..RunConfig::default()
        };
        let (_dir, path) = write_tmp(&cfg.to_json_pretty());
        assert_eq!(RunConfig::load(&path).unwrap(), cfg);
    }

    #[test]
    fn dump_names_every_knob_explicitly() {
        let dump = RunConfig::default().to_json_pretty();
        for key in [
            "grid_size", "sigma_f", "sigma_b", "eta", "theta_z", "e_th", "sigma_o",
            "theta_p", "i_th", "dose_delta", "reduction", "w_min", "w_max", "h_min",
            "h_max", "d_min", "d_max", "alpha", "beta", "gamma", "delta", "epsilon",
            "epochs", "lr", "update_from", "seed", "forward", "sigma_prime",
            "sigma_cdr", "shots_in", "target_in", "out_dir",
        ] {
            assert!(dump.contains(&format!("\"{key}\"")), "missing {key} in dump");
        }
    }
}
