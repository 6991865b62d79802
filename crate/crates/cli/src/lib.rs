//! Scenario files for the `coop-auth` command.
//!
//! A scenario file is a list of `key = value` lines. `#` starts a comment,
//! blank lines are ignored and any key left out keeps its default. Keys are
//! the [`ScenarioConfig`] field names; time-valued keys end in `_ms` or
//! `_s`. `protocol`, `election` and `crypto` take registry names.
//!
//! ```text
//! # denser traffic, paper-rule election
//! vehicle_count = 200
//! election = paper-rule
//! delta_t_ms = 30
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use coop_auth::crypto::SUITES;
use coop_auth::obu::STRATEGIES;
use coop_auth::registry::UnknownName;
use coop_auth::sim::{ConfigError, ScenarioConfig, PROTOCOLS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("invalid `{key}`: expected {expected}, got `{value}`")]
    NotNumeric {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("invalid `{key}`: {source}")]
    UnknownName { key: String, source: UnknownName },
    #[error("line {line}: {source}")]
    AtLine { line: usize, source: Box<ParseError> },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

impl ParseError {
    /// The config key the error is about, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ParseError::Syntax { .. } => None,
            ParseError::UnknownKey { key } | ParseError::NotNumeric { key, .. } | ParseError::UnknownName { key, .. } => {
                Some(key)
            }
            ParseError::AtLine { source, .. } => source.key(),
            ParseError::Invalid(e) => Some(e.field),
        }
    }
}

/// Every key a scenario file may set, in rendering order.
pub const KEYS: &[&str] = &[
    "area_width_m",
    "area_height_m",
    "grid_spacing_m",
    "vehicle_count",
    "speed_min_kmh",
    "speed_max_kmh",
    "coverage_radius_m",
    "bandwidth_mbps",
    "beacon_period_ms",
    "duration_s",
    "warmup_s",
    "seed",
    "protocol",
    "p",
    "delta_t_ms",
    "theta_ms",
    "neighbor_timeout_ms",
    "election",
    "verify_cost_ms",
    "sign_cost_ms",
    "rx_buffer_capacity",
    "delta_max_ms",
    "cert_lifetime_s",
    "rsu_zones_per_side",
    "forged_fraction",
    "crypto",
    "mobility_step_ms",
    "revoke_count",
    "revoke_at_s",
];

fn number<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T, ParseError> {
    value.parse().map_err(|_| ParseError::NotNumeric {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn real(key: &str, value: &str) -> Result<f64, ParseError> {
    let v: f64 = number(key, value, "a number")?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::NotNumeric {
            key: key.to_string(),
            value: value.to_string(),
            expected: "a finite number",
        })
    }
}

fn count(key: &str, value: &str) -> Result<usize, ParseError> {
    number(key, value, "a non-negative integer")
}

fn named<T>(key: &str, r: Result<T, UnknownName>) -> Result<T, ParseError> {
    r.map_err(|source| ParseError::UnknownName {
        key: key.to_string(),
        source,
    })
}

/// Sets one key without validating the config as a whole.
pub fn apply_setting(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), ParseError> {
    let value = value.trim();
    match key {
        "area_width_m" => cfg.area_width_m = real(key, value)?,
        "area_height_m" => cfg.area_height_m = real(key, value)?,
        "grid_spacing_m" => cfg.grid_spacing_m = real(key, value)?,
        "vehicle_count" => cfg.vehicle_count = count(key, value)?,
        "speed_min_kmh" => cfg.speed_min_kmh = real(key, value)?,
        "speed_max_kmh" => cfg.speed_max_kmh = real(key, value)?,
        "coverage_radius_m" => cfg.coverage_radius_m = real(key, value)?,
        "bandwidth_mbps" => cfg.bandwidth_mbps = real(key, value)?,
        "beacon_period_ms" => cfg.beacon_period_ms = real(key, value)?,
        "duration_s" => cfg.duration_s = real(key, value)?,
        "warmup_s" => cfg.warmup_s = real(key, value)?,
        "seed" => cfg.seed = number(key, value, "an unsigned 64-bit integer")?,
        "protocol" => cfg.protocol = named(key, PROTOCOLS.get(value))?,
        "p" => cfg.p = count(key, value)?,
        "delta_t_ms" => cfg.delta_t_ms = real(key, value)?,
        "theta_ms" => cfg.theta_ms = real(key, value)?,
        "neighbor_timeout_ms" => cfg.neighbor_timeout_ms = real(key, value)?,
        "election" => cfg.election = named(key, STRATEGIES.get(value))?,
        "verify_cost_ms" => cfg.verify_cost_ms = real(key, value)?,
        "sign_cost_ms" => cfg.sign_cost_ms = real(key, value)?,
        "rx_buffer_capacity" => cfg.rx_buffer_capacity = count(key, value)?,
        "delta_max_ms" => cfg.delta_max_ms = real(key, value)?,
        "cert_lifetime_s" => cfg.cert_lifetime_s = real(key, value)?,
        "rsu_zones_per_side" => cfg.rsu_zones_per_side = count(key, value)?,
        "forged_fraction" => cfg.forged_fraction = real(key, value)?,
        "crypto" => cfg.crypto = named(key, SUITES.get(value))?,
        "mobility_step_ms" => cfg.mobility_step_ms = real(key, value)?,
        "revoke_count" => cfg.revoke_count = count(key, value)?,
        "revoke_at_s" => cfg.revoke_at_s = real(key, value)?,
        _ => return Err(ParseError::UnknownKey { key: key.to_string() }),
    }
    Ok(())
}

/// Parses `key=value`, as given to `--set`.
pub fn apply_override(cfg: &mut ScenarioConfig, text: &str) -> Result<(), ParseError> {
    let (key, value) = text.split_once('=').ok_or_else(|| ParseError::Syntax {
        line: 0,
        text: text.to_string(),
    })?;
    apply_setting(cfg, key.trim(), value)
}

/// Reads a scenario file on top of the defaults, without the final
/// validation. Use this when overrides follow.
pub fn parse_settings(text: &str) -> Result<ScenarioConfig, ParseError> {
    let mut cfg = ScenarioConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ParseError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        apply_setting(&mut cfg, key.trim(), value).map_err(|e| ParseError::AtLine {
            line: i + 1,
            source: Box::new(e),
        })?;
    }
    Ok(cfg)
}

/// Reads and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ParseError> {
    let cfg = parse_settings(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every key, one per line, in a form [`parse_config`] reads back
/// to the same config.
pub fn render_config(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: &dyn std::fmt::Display| writeln!(out, "{k} = {v}").unwrap();
    line("area_width_m", &cfg.area_width_m);
    line("area_height_m", &cfg.area_height_m);
    line("grid_spacing_m", &cfg.grid_spacing_m);
    line("vehicle_count", &cfg.vehicle_count);
    line("speed_min_kmh", &cfg.speed_min_kmh);
    line("speed_max_kmh", &cfg.speed_max_kmh);
    line("coverage_radius_m", &cfg.coverage_radius_m);
    line("bandwidth_mbps", &cfg.bandwidth_mbps);
    line("beacon_period_ms", &cfg.beacon_period_ms);
    line("duration_s", &cfg.duration_s);
    line("warmup_s", &cfg.warmup_s);
    line("seed", &cfg.seed);
    line("protocol", &cfg.protocol.name());
    line("p", &cfg.p);
    line("delta_t_ms", &cfg.delta_t_ms);
    line("theta_ms", &cfg.theta_ms);
    line("neighbor_timeout_ms", &cfg.neighbor_timeout_ms);
    line("election", &cfg.election.name());
    line("verify_cost_ms", &cfg.verify_cost_ms);
    line("sign_cost_ms", &cfg.sign_cost_ms);
    line("rx_buffer_capacity", &cfg.rx_buffer_capacity);
    line("delta_max_ms", &cfg.delta_max_ms);
    line("cert_lifetime_s", &cfg.cert_lifetime_s);
    line("rsu_zones_per_side", &cfg.rsu_zones_per_side);
    line("forged_fraction", &cfg.forged_fraction);
    line("crypto", &cfg.crypto.name());
    line("mobility_step_ms", &cfg.mobility_step_ms);
    line("revoke_count", &cfg.revoke_count);
    line("revoke_at_s", &cfg.revoke_at_s);
    out
}
