//! Run statistics: retransmission classification, per-path byte accounting,
//! event-log digests, RTT spread CDFs, and the final per-run report.

use crate::engine::SimTime;
use crate::linkmodel::{DeliveryOutcome, LossCause, PathKind};
use serde::Serialize;

/// Why a retransmission happened, from link ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RetransCause {
    Handover,
    Random,
    /// The timer fired but the original transmission was actually delivered.
    Spurious,
}

/// Maps the link-truth outcome of the transmission that triggered a
/// retransmission onto its cause. The simulator records ground truth at
/// transmit time, so no endpoint inference is involved.
pub fn classify_retransmission(truth: DeliveryOutcome) -> RetransCause {
    match truth {
        DeliveryOutcome::Lost {
            cause: LossCause::Handover,
        } => RetransCause::Handover,
        DeliveryOutcome::Lost {
            cause: LossCause::Random,
        } => RetransCause::Random,
        DeliveryOutcome::Delivered { .. } => RetransCause::Spurious,
    }
}

/// FNV-1a 64-bit, the event-log digest hash. Offset basis and prime are the
/// standard Fowler-Noll-Vo constants.
#[derive(Debug, Clone, Copy)]
pub struct Fnv64(u64);

impl Default for Fnv64 {
    fn default() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv64 {
    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathMetrics {
    pub path_id: usize,
    pub kind: PathKind,
    pub tx_bytes: u64,
    pub tx_segments: u64,
    /// Share of all transmitted (not delivered) bytes.
    pub tx_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubflowMetrics {
    pub subflow_id: usize,
    pub path_id: usize,
    pub sent_segments: u64,
    pub final_srtt_ms: f64,
    pub final_cwnd: u32,
    pub final_sigma: f64,
}

/// Everything a single run reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub scheduler: String,
    pub seed: u64,
    pub completed: bool,
    pub completion_time_s: f64,
    /// MB/s with MB = 2^20 bytes; file_size / completion_time.
    pub avg_throughput_mb_s: f64,
    pub file_size_bytes: u64,
    pub bytes_delivered: u64,
    pub total_segments: u64,
    pub retrans_total: u64,
    pub retrans_handover: u64,
    pub retrans_random: u64,
    pub retrans_spurious: u64,
    pub per_path: Vec<PathMetrics>,
    pub per_subflow: Vec<SubflowMetrics>,
    pub send_decisions: u64,
    pub defer_decisions: u64,
    pub dup_arrivals: u64,
    pub reorder_max_occupancy: u64,
    /// Share of transmitted bytes that went over satellite paths.
    pub satellite_tx_fraction: f64,
    pub event_count: u64,
    /// FNV-1a 64 over every dispatched event (kind, time, ids), hex-encoded.
    pub event_log_digest: String,
    pub window_violations: u64,
    pub fifo_violations: u64,
}

/// Throughput definition used across the artifact: file size over completion
/// time, MB = 2^20 bytes.
pub fn throughput_mb_s(file_size_bytes: u64, completion_time_s: f64) -> f64 {
    if completion_time_s <= 0.0 {
        return 0.0;
    }
    file_size_bytes as f64 / (1u64 << 20) as f64 / completion_time_s
}

/// One point of a named time series.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<SeriesPoint>,
}

/// Time-bucketed series store: at most one point per bucket per series keeps
/// exports small without extra simulation events.
#[derive(Debug)]
pub struct SeriesStore {
    enabled: bool,
    interval_us: u64,
    series: Vec<(Series, Option<u64>)>,
}

impl SeriesStore {
    pub fn new(enabled: bool, interval_us: u64) -> Self {
        SeriesStore {
            enabled,
            interval_us: interval_us.max(1),
            series: Vec::new(),
        }
    }

    pub fn register(&mut self, name: String) -> usize {
        self.series.push((
            Series {
                name,
                points: Vec::new(),
            },
            None,
        ));
        self.series.len() - 1
    }

    pub fn record(&mut self, idx: usize, t: SimTime, value: f64) {
        if !self.enabled {
            return;
        }
        let bucket = t.as_micros() / self.interval_us;
        let (series, last) = &mut self.series[idx];
        if last.map_or(true, |b| bucket > b) {
            series.points.push(SeriesPoint {
                t: t.as_secs_f64(),
                value,
            });
            *last = Some(bucket);
        }
    }

    pub fn into_series(self) -> Vec<Series> {
        self.series.into_iter().map(|(s, _)| s).collect()
    }
}

/// Per-run accumulator fed by the simulation as it dispatches events.
#[derive(Debug)]
pub struct MetricsCollector {
    digest: Fnv64,
    event_count: u64,
    retrans_handover: u64,
    retrans_random: u64,
    retrans_spurious: u64,
    per_path_bytes: Vec<u64>,
    per_path_segments: Vec<u64>,
    path_kinds: Vec<PathKind>,
    per_subflow_sent: Vec<u64>,
    send_decisions: u64,
    defer_decisions: u64,
    dup_arrivals: u64,
    reorder_max: u64,
    window_violations: u64,
    fifo_violations: u64,
    pub series: SeriesStore,
}

impl MetricsCollector {
    pub fn new(path_kinds: Vec<PathKind>, subflows: usize, series: SeriesStore) -> Self {
        MetricsCollector {
            digest: Fnv64::default(),
            event_count: 0,
            retrans_handover: 0,
            retrans_random: 0,
            retrans_spurious: 0,
            per_path_bytes: vec![0; path_kinds.len()],
            per_path_segments: vec![0; path_kinds.len()],
            path_kinds,
            per_subflow_sent: vec![0; subflows],
            send_decisions: 0,
            defer_decisions: 0,
            dup_arrivals: 0,
            reorder_max: 0,
            window_violations: 0,
            fifo_violations: 0,
            series,
        }
    }

    /// Folds one dispatched event into the log digest.
    pub fn on_event(&mut self, kind: u8, t: SimTime, a: u64, b: u64) {
        self.digest.write(&[kind]);
        self.digest.write_u64(t.as_micros());
        self.digest.write_u64(a);
        self.digest.write_u64(b);
        self.event_count += 1;
    }

    pub fn on_dispatch(&mut self, subflow: usize, path: usize, bytes: u64) {
        self.per_path_bytes[path] += bytes;
        self.per_path_segments[path] += 1;
        self.per_subflow_sent[subflow] += 1;
        self.send_decisions += 1;
    }

    pub fn on_defer(&mut self) {
        self.defer_decisions += 1;
    }

    pub fn on_retransmission(&mut self, cause: RetransCause) {
        match cause {
            RetransCause::Handover => self.retrans_handover += 1,
            RetransCause::Random => self.retrans_random += 1,
            RetransCause::Spurious => self.retrans_spurious += 1,
        }
    }

    pub fn on_duplicate_arrival(&mut self) {
        self.dup_arrivals += 1;
    }

    pub fn on_reorder_occupancy(&mut self, occupancy: u64) {
        self.reorder_max = self.reorder_max.max(occupancy);
    }

    pub fn on_window_violation(&mut self) {
        self.window_violations += 1;
    }

    pub fn on_fifo_violation(&mut self) {
        self.fifo_violations += 1;
    }

    pub fn digest(&self) -> u64 {
        self.digest.finish()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn finalize(
        self,
        scheduler: &str,
        seed: u64,
        completed: bool,
        end_time: SimTime,
        file_size_bytes: u64,
        bytes_delivered: u64,
        total_segments: u64,
        per_subflow: Vec<SubflowMetrics>,
    ) -> (RunMetrics, Vec<Series>) {
        let total_tx: u64 = self.per_path_bytes.iter().sum();
        let per_path: Vec<PathMetrics> = self
            .path_kinds
            .iter()
            .enumerate()
            .map(|(i, kind)| PathMetrics {
                path_id: i,
                kind: *kind,
                tx_bytes: self.per_path_bytes[i],
                tx_segments: self.per_path_segments[i],
                tx_fraction: if total_tx == 0 {
                    0.0
                } else {
                    self.per_path_bytes[i] as f64 / total_tx as f64
                },
            })
            .collect();
        let satellite_tx_fraction = per_path
            .iter()
            .filter(|p| p.kind == PathKind::Satellite)
            .map(|p| p.tx_fraction)
            .sum();
        let completion_time_s = end_time.as_secs_f64();
        let avg_throughput_mb_s = if completed {
            throughput_mb_s(file_size_bytes, completion_time_s)
        } else {
            throughput_mb_s(bytes_delivered, completion_time_s)
        };
        let metrics = RunMetrics {
            scheduler: scheduler.to_string(),
            seed,
            completed,
            completion_time_s,
            avg_throughput_mb_s,
            file_size_bytes,
            bytes_delivered,
            total_segments,
            retrans_total: self.retrans_handover + self.retrans_random + self.retrans_spurious,
            retrans_handover: self.retrans_handover,
            retrans_random: self.retrans_random,
            retrans_spurious: self.retrans_spurious,
            per_path,
            per_subflow,
            send_decisions: self.send_decisions,
            defer_decisions: self.defer_decisions,
            dup_arrivals: self.dup_arrivals,
            reorder_max_occupancy: self.reorder_max,
            satellite_tx_fraction,
            event_count: self.event_count,
            event_log_digest: format!("{:016x}", self.digest.finish()),
            window_violations: self.window_violations,
            fifo_violations: self.fifo_violations,
        };
        (metrics, self.series.into_series())
    }
}

/// Windowed max-minus-min spreads of a time series, as an empirical CDF.
/// Input samples are (time_seconds, value) pairs; output is (spread,
/// cumulative_probability) sorted by spread.
pub fn rtt_spread_cdf(samples: &[(f64, f64)], window_s: f64) -> Vec<(f64, f64)> {
    assert!(window_s > 0.0);
    let mut spreads: Vec<f64> = Vec::new();
    let mut idx = 0usize;
    while idx < samples.len() {
        let window = (samples[idx].0 / window_s).floor();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        while idx < samples.len() && (samples[idx].0 / window_s).floor() == window {
            lo = lo.min(samples[idx].1);
            hi = hi.max(samples[idx].1);
            idx += 1;
        }
        spreads.push(hi - lo);
    }
    spreads.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = spreads.len() as f64;
    spreads
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, (i + 1) as f64 / n))
        .collect()
}

/// Quantile with linear interpolation over a sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile(&sorted, 0.5)
}

pub fn iqr(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile(&sorted, 0.75) - quantile(&sorted, 0.25)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_passes_link_truth_through() {
        assert_eq!(
            classify_retransmission(DeliveryOutcome::Lost {
                cause: LossCause::Handover
            }),
            RetransCause::Handover
        );
        assert_eq!(
            classify_retransmission(DeliveryOutcome::Lost {
                cause: LossCause::Random
            }),
            RetransCause::Random
        );
        assert_eq!(
            classify_retransmission(DeliveryOutcome::Delivered { at: SimTime::ZERO }),
            RetransCause::Spurious
        );
    }

    #[test]
    fn throughput_uses_binary_megabytes() {
        // 40 MB over 6.257 s is 6.39 MB/s under this artifact's definition.
        let t = throughput_mb_s(40 * (1 << 20), 6.257);
        assert!((t - 6.3928).abs() < 0.001, "got {t}");
    }

    #[test]
    fn fnv_digest_is_stable() {
        let mut a = Fnv64::default();
        a.write(b"hello");
        // Reference FNV-1a 64 of "hello".
        assert_eq!(a.finish(), 0xa430_d846_80aa_bd0b);
    }

    #[test]
    fn constant_series_has_zero_spread_cdf() {
        let samples: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 * 0.1, 60.0)).collect();
        let cdf = rtt_spread_cdf(&samples, 2.0);
        assert!(cdf.iter().all(|(s, _)| *s == 0.0));
        assert_eq!(cdf.last().unwrap().1, 1.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2.0);
    }
}
