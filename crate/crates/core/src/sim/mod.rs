//! Deterministic discrete-event simulation of a vehicle population on an
//! urban grid.
//!
//! Model in brief:
//!
//! * vehicles follow [`mobility`] on a torus grid, positions updated every
//!   `mobility_step_ms`;
//! * the radio is a closed unit disk of `coverage_radius_m`; a frame of `b`
//!   bytes occupies the sender's radio for `8b / bandwidth` and reaches
//!   every vehicle in range (at the start of transmission) when it ends;
//! * each vehicle has one processor serving sign and verify jobs first in,
//!   first out. Verify jobs arriving while `rx_buffer_capacity` jobs wait
//!   are dropped; sign jobs are never dropped;
//! * V2I traffic (certificate requests and responses) is loss-free and only
//!   pays its transmission time;
//! * all randomness comes from one ChaCha stream seeded with `seed`.
//!
//! The optional trace has one line per processed event:
//! `<time_ns> <seq> <kind> <endpoint> <frame>`, where `kind` is one of
//! `tx rx rx-rsu timer proc move rl`, `endpoint` is a vehicle or zone index
//! and `frame` names the frame type for `tx`/`rx` lines (`-` otherwise).

mod config;
mod engine;
mod events;
pub mod metrics;
pub mod mobility;
mod node;

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::authority::AuthorityError;
use crate::crypto::CryptoError;
use crate::obu::ObuError;
use crate::time::Duration;
use mobility::Grid;

pub use config::{ConfigError, ScenarioConfig, DEFAULT_VERIFY_COST_MS};
pub use engine::vehicle_identity;
pub use events::EventQueue;
pub use metrics::{csv, Counters, MetricsReport, CSV_HEADER};
pub use node::{
    protocol, Baseline, BaselineFactory, Command, Cooperative, CooperativeFactory, Ctx, Job, NodeProtocol,
    Protocol, ProtocolFactory, PROTOCOLS,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no loads given")]
    NoLoads,
    #[error("setup failed: {0}")]
    Authority(#[from] AuthorityError),
    #[error("setup failed: {0}")]
    Obu(#[from] ObuError),
    #[error("setup failed: {0}")]
    Crypto(#[from] CryptoError),
    #[error("writing trace: {0}")]
    Io(#[from] std::io::Error),
}

/// Time a frame of `bytes` octets occupies the channel.
pub fn transmission_delay(bytes: usize, bandwidth_bps: f64) -> Duration {
    Duration::from_nanos(((bytes * 8) as f64 / bandwidth_bps * 1e9).round() as u64)
}

/// Closed unit disk on the torus: exactly `radius` away is still heard.
pub fn in_range(grid: &Grid, a: (f64, f64), b: (f64, f64), radius: f64) -> bool {
    grid.dist2(a, b) <= radius * radius
}

pub fn run(config: &ScenarioConfig) -> Result<MetricsReport, SimError> {
    engine::Simulation::new(*config, None)?.run()
}

/// Like [`run`], writing one line per event to `trace`.
pub fn run_traced(config: &ScenarioConfig, trace: &mut dyn Write) -> Result<MetricsReport, SimError> {
    engine::Simulation::new(*config, Some(trace))?.run()
}

/// Seed for the run at `load`: the first eight bytes of
/// SHA-256(seed ‖ load), both big-endian u64.
pub fn sweep_seed(seed: u64, load: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update((load as u64).to_be_bytes());
    let d = h.finalize();
    u64::from_be_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

/// One independent run per load, in the order given. Runs execute on up
/// to `available_parallelism` threads.
pub fn sweep(base: &ScenarioConfig, loads: &[usize]) -> Result<Vec<(usize, MetricsReport)>, SimError> {
    if loads.is_empty() {
        return Err(SimError::NoLoads);
    }
    let configs: Vec<ScenarioConfig> = loads
        .iter()
        .map(|&load| ScenarioConfig {
            vehicle_count: load,
            seed: sweep_seed(base.seed, load),
            ..*base
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len());
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<MetricsReport, SimError>>>> =
        configs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(c) = configs.get(i) else { break };
                *results[i].lock().expect("no panics while held") = Some(run(c));
            });
        }
    });
    let results = results
        .into_iter()
        .map(|m| m.into_inner().expect("no panics while held"));
    loads
        .iter()
        .zip(results)
        .map(|(&load, r)| r.expect("every slot filled").map(|rep| (load, rep)))
        .collect()
}
