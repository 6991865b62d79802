//! Counters collected during a run and the report derived from them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Raw counts over the measurement window. "Pairs" are (honest beacon,
/// receiver in range when it went on the air).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counters {
    pub beacons_sent: u64,
    pub honest_pairs: u64,
    pub delivered: u64,
    pub overflow_lost: u64,
    pub disapproval_dropped: u64,
    pub forged_sent: u64,
    pub forged_pairs: u64,
    pub forged_delivered: u64,
    /// Beacons received, by generation time.
    pub beacons_received: u64,
    /// Checks of those beacons, whenever they finished.
    pub beacon_verifications: u64,
    /// Beacon checks finished inside the window, whatever their age.
    pub verifications_completed: u64,
    /// Jobs of any kind turned away by a full receive buffer.
    pub jobs_dropped: u64,
    pub events: u64,
    /// Sum of delivery delays of honest pairs, nanoseconds.
    pub delay_sum_ns: u128,
}

impl Counters {
    /// Honest pairs without a terminal outcome when the run stopped.
    pub fn in_flight(&self) -> u64 {
        self.honest_pairs - self.delivered - self.overflow_lost - self.disapproval_dropped
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Vehicle count.
    pub load: usize,
    /// Seconds from beacon generation to delivery, over honest pairs.
    pub mean_e2e_delay: f64,
    pub loss_ratio: f64,
    /// Beacon verifications per beacon received.
    pub approval_ratio: f64,
    /// Beacon checks finished per vehicle per 300 ms.
    pub verified_per_300ms: f64,
    /// Receivers that checked a beacon themselves → number of beacons.
    pub verifier_count_histogram: BTreeMap<usize, u64>,
    pub counters: Counters,
    /// SHA-256 over the popped event sequence, hex.
    pub trace_hash: String,
}

impl MetricsReport {
    pub fn from_counters(
        load: usize,
        counters: Counters,
        histogram: BTreeMap<usize, u64>,
        window_s: f64,
        trace_hash: String,
    ) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let windows = window_s / 0.3;
        Self {
            load,
            mean_e2e_delay: if counters.delivered == 0 {
                0.0
            } else {
                counters.delay_sum_ns as f64 / counters.delivered as f64 / 1e9
            },
            loss_ratio: ratio(counters.overflow_lost, counters.honest_pairs),
            approval_ratio: ratio(counters.beacon_verifications, counters.beacons_received),
            verified_per_300ms: counters.verifications_completed as f64 / (load as f64 * windows),
            verifier_count_histogram: histogram,
            counters,
            trace_hash,
        }
    }

    pub fn mean_delay_ms(&self) -> f64 {
        self.mean_e2e_delay * 1e3
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.4},{:.6},{:.6},{:.4}",
            self.load,
            self.mean_delay_ms(),
            self.loss_ratio,
            self.approval_ratio,
            self.verified_per_300ms
        )
    }

    /// Mean of the verifier-count histogram.
    pub fn mean_verifiers(&self) -> f64 {
        let (n, sum) = self
            .verifier_count_histogram
            .iter()
            .fold((0u64, 0u64), |(n, s), (&c, &k)| (n + k, s + c as u64 * k));
        if n == 0 {
            0.0
        } else {
            sum as f64 / n as f64
        }
    }
}

pub const CSV_HEADER: &str = "load,mean_delay_ms,loss_ratio,approval_ratio,verified_per_300ms";

pub fn csv(reports: &[MetricsReport]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}
