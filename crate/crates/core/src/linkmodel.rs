//! Time-varying truth for each network path: propagation delay, bandwidth
//! serialization, random loss, and handover events, plus a queryable oracle
//! over the handover schedule.
//!
//! Profiles are immutable after construction. The mutable bits of a link
//! (serialization queue occupancy, FIFO clamp) live in [`LinkTxState`],
//! owned by the simulation that drives transmissions.

use crate::engine::{RngStream, SimTime};
use serde::{Deserialize, Serialize};

pub type PathId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Satellite,
    Terrestrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandoverKind {
    /// Lossy blackout: every segment whose delivery interval intersects the
    /// window is dropped.
    Disconnect,
    /// Step change in one-way delay; loses nothing.
    RttShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HandoverEvent {
    pub start: SimTime,
    pub duration_us: u64,
    pub kind: HandoverKind,
    /// One-way delay enforced during an rtt_shift window.
    pub post_shift_owd_us: Option<u64>,
}

impl HandoverEvent {
    pub fn end(&self) -> SimTime {
        self.start.plus_micros(self.duration_us)
    }

    fn contains(&self, t: SimTime) -> bool {
        t >= self.start && t < self.end()
    }
}

/// Round-trip-time-vs-time shape for a path. One-way delay is half the
/// shape value.
#[derive(Debug, Clone, PartialEq)]
pub enum RttShape {
    Constant {
        rtt_us: u64,
    },
    /// Linear ramp from min to max over each period, then reset.
    Sawtooth {
        min_rtt_us: u64,
        max_rtt_us: u64,
        period_us: u64,
    },
    /// Smooth oscillation between min and max, starting at min.
    Sinusoid {
        min_rtt_us: u64,
        max_rtt_us: u64,
        period_us: u64,
    },
    /// Piecewise-linear interpolation of (time, rtt) samples.
    Trace {
        samples: Vec<(u64, u64)>,
    },
}

impl RttShape {
    fn rtt_us(&self, t: SimTime) -> u64 {
        let t_us = t.as_micros();
        match self {
            RttShape::Constant { rtt_us } => *rtt_us,
            RttShape::Sawtooth {
                min_rtt_us,
                max_rtt_us,
                period_us,
            } => {
                let phase = t_us % period_us;
                let delta = (max_rtt_us - min_rtt_us) as u128;
                min_rtt_us + (delta * phase as u128 / *period_us as u128) as u64
            }
            RttShape::Sinusoid {
                min_rtt_us,
                max_rtt_us,
                period_us,
            } => {
                let phase = (t_us % period_us) as f64 / *period_us as f64;
                let amp = (max_rtt_us - min_rtt_us) as f64 / 2.0;
                let mid = (max_rtt_us + min_rtt_us) as f64 / 2.0;
                // cos(2*pi*u) = sin(2*pi*(u + 1/4))
                let mut u = phase + 0.25;
                if u >= 1.0 {
                    u -= 1.0;
                }
                (mid - amp * sin_turns(u)).round() as u64
            }
            RttShape::Trace { samples } => {
                match samples.binary_search_by_key(&t_us, |(st, _)| *st) {
                    Ok(i) => samples[i].1,
                    Err(0) => samples[0].1,
                    Err(i) if i == samples.len() => samples[samples.len() - 1].1,
                    Err(i) => {
                        let (t0, v0) = samples[i - 1];
                        let (t1, v1) = samples[i];
                        lerp_u64(t0, v0, t1, v1, t_us)
                    }
                }
            }
        }
    }
}

/// sin(2*pi*u) for u in [0, 1), via the Bhaskara I rational approximation.
/// Uses only +,-,*,/ so results are identical on every IEEE-754 platform;
/// max error ~0.0016, irrelevant at delay-model fidelity.
fn sin_turns(u: f64) -> f64 {
    use std::f64::consts::PI;
    let (half, sign) = if u < 0.5 { (u, 1.0) } else { (u - 0.5, -1.0) };
    let x = half * 2.0 * PI;
    sign * 16.0 * x * (PI - x) / (5.0 * PI * PI - 4.0 * x * (PI - x))
}

fn lerp_u64(t0: u64, v0: u64, t1: u64, v1: u64, t: u64) -> u64 {
    debug_assert!(t0 < t1 && (t0..=t1).contains(&t));
    let span = (t1 - t0) as i128;
    let frac = (t - t0) as i128;
    (v0 as i128 + (v1 as i128 - v0 as i128) * frac / span) as u64
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ProfileError {
    #[error("trace line {line}: {reason}")]
    Trace { line: usize, reason: String },
    #[error("handover schedule line {line}: {reason}")]
    Schedule { line: usize, reason: String },
    #[error("invalid profile: {0}")]
    Invalid(String),
}

/// Querying a path inside a disconnect window: there is no delay to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("path unreachable: inside a disconnect window")]
pub struct Unreachable;

/// Immutable truth for one path.
#[derive(Debug, Clone)]
pub struct PathProfile {
    pub path_id: PathId,
    pub kind: PathKind,
    pub shape: RttShape,
    pub bandwidth_bps: u64,
    pub loss_rate: f64,
    pub jitter_stddev_us: u64,
    /// Time-ordered, non-overlapping.
    pub handovers: Vec<HandoverEvent>,
}

impl PathProfile {
    /// Validates invariants and materializes a profile. `horizon` bounds the
    /// simulated time trace shapes must cover.
    pub fn generate(
        path_id: PathId,
        kind: PathKind,
        shape: RttShape,
        bandwidth_bps: u64,
        loss_rate: f64,
        jitter_stddev_us: u64,
        handovers: Vec<HandoverEvent>,
        horizon: SimTime,
    ) -> Result<Self, ProfileError> {
        if bandwidth_bps == 0 {
            return Err(ProfileError::Invalid("bandwidth must be positive".into()));
        }
        if !(0.0..1.0).contains(&loss_rate) {
            return Err(ProfileError::Invalid(format!(
                "loss_rate {loss_rate} outside [0, 1)"
            )));
        }
        match &shape {
            RttShape::Constant { rtt_us } => {
                if *rtt_us == 0 {
                    return Err(ProfileError::Invalid("rtt must be positive".into()));
                }
            }
            RttShape::Sawtooth {
                min_rtt_us,
                max_rtt_us,
                period_us,
            }
            | RttShape::Sinusoid {
                min_rtt_us,
                max_rtt_us,
                period_us,
            } => {
                if min_rtt_us > max_rtt_us {
                    return Err(ProfileError::Invalid(format!(
                        "min_rtt {min_rtt_us} exceeds max_rtt {max_rtt_us}"
                    )));
                }
                if *min_rtt_us == 0 {
                    return Err(ProfileError::Invalid("min_rtt must be positive".into()));
                }
                if *period_us == 0 {
                    return Err(ProfileError::Invalid("period must be positive".into()));
                }
            }
            RttShape::Trace { samples } => {
                if samples.is_empty() {
                    return Err(ProfileError::Invalid("trace has no samples".into()));
                }
                if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(ProfileError::Invalid(
                        "trace samples must be strictly time-ordered".into(),
                    ));
                }
                if samples.iter().any(|(_, rtt)| *rtt == 0) {
                    return Err(ProfileError::Invalid("trace rtt must be positive".into()));
                }
                let last = samples[samples.len() - 1].0;
                if last < horizon.as_micros() {
                    return Err(ProfileError::Invalid(format!(
                        "trace ends at {last}us, short of the {horizon} horizon"
                    )));
                }
            }
        }
        let mut prev_end = 0u64;
        for (i, h) in handovers.iter().enumerate() {
            if h.duration_us == 0 {
                return Err(ProfileError::Invalid(format!(
                    "handover {i} has zero duration"
                )));
            }
            if h.start.as_micros() < prev_end {
                return Err(ProfileError::Invalid(format!(
                    "handover {i} overlaps or precedes its predecessor"
                )));
            }
            if h.kind == HandoverKind::RttShift && h.post_shift_owd_us.is_none() {
                return Err(ProfileError::Invalid(format!(
                    "rtt_shift handover {i} lacks a post-shift delay"
                )));
            }
            prev_end = h.end().as_micros();
        }
        Ok(PathProfile {
            path_id,
            kind,
            shape,
            bandwidth_bps,
            loss_rate,
            jitter_stddev_us,
            handovers,
        })
    }

    /// One-way delay ignoring disconnect windows; rtt_shift overrides apply.
    pub fn raw_owd_us(&self, t: SimTime) -> u64 {
        for h in &self.handovers {
            if h.kind == HandoverKind::RttShift && h.contains(t) {
                return h.post_shift_owd_us.expect("validated at construction");
            }
            if h.start > t {
                break;
            }
        }
        (self.shape.rtt_us(t) / 2).max(1)
    }

    /// One-way delay at `t`, or [`Unreachable`] inside a disconnect window.
    pub fn owd_at(&self, t: SimTime) -> Result<u64, Unreachable> {
        if self.in_disconnect(t) {
            Err(Unreachable)
        } else {
            Ok(self.raw_owd_us(t))
        }
    }

    pub fn in_disconnect(&self, t: SimTime) -> bool {
        self.handovers
            .iter()
            .any(|h| h.kind == HandoverKind::Disconnect && h.contains(t))
    }

    fn disconnect_intersects(&self, from: SimTime, to: SimTime) -> bool {
        self.handovers
            .iter()
            .filter(|h| h.kind == HandoverKind::Disconnect)
            .any(|h| from < h.end() && h.start <= to)
    }

    /// Earliest handover with start >= t; the oracle behind proactive
    /// handover management.
    pub fn next_handover(&self, t: SimTime) -> Option<&HandoverEvent> {
        self.handovers.iter().find(|h| h.start >= t)
    }

    /// Like [`Self::next_handover`] but also reports an event already in
    /// progress, and only disconnects. Drives availability windows.
    pub fn next_or_active_disconnect(&self, t: SimTime) -> Option<&HandoverEvent> {
        self.handovers
            .iter()
            .filter(|h| h.kind == HandoverKind::Disconnect)
            .find(|h| h.end() > t)
    }
}

/// Mutable sender-side link state: single-server serialization FIFO plus the
/// last delivery time used to keep per-path FIFO under jitter.
#[derive(Debug, Clone, Default)]
pub struct LinkTxState {
    pub busy_until: SimTime,
    last_delivery: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossCause {
    Random,
    Handover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Delivered { at: SimTime },
    Lost { cause: LossCause },
}

pub fn serialization_delay_us(size_bytes: u64, bandwidth_bps: u64) -> u64 {
    ((size_bytes as u128 * 8 * 1_000_000) / bandwidth_bps as u128) as u64
}

/// Sends one segment over a path at `t_send`. Delivery time is serialization
/// (behind whatever already occupies the link FIFO) plus one-way delay plus
/// clamped Gaussian jitter. A segment is handover-lost iff its delivery
/// interval intersects a disconnect window; otherwise it is subject to
/// Bernoulli random loss.
///
/// Both rng streams are advanced exactly once per call regardless of the
/// outcome, so replay alignment never depends on loss patterns.
pub fn transmit(
    profile: &PathProfile,
    tx: &mut LinkTxState,
    size_bytes: u64,
    t_send: SimTime,
    jitter_rng: &mut RngStream,
    loss_rng: &mut RngStream,
) -> DeliveryOutcome {
    debug_assert!(size_bytes > 0);
    let start = t_send.max(tx.busy_until);
    let done_tx = start.plus_micros(serialization_delay_us(size_bytes, profile.bandwidth_bps));
    tx.busy_until = done_tx;

    let owd = profile.raw_owd_us(done_tx);
    let sigma = profile.jitter_stddev_us as f64;
    let jitter = (jitter_rng.gaussian() * sigma).clamp(-3.0 * sigma, 3.0 * sigma);
    let nominal = done_tx.as_micros() as i128 + owd as i128 + jitter.round() as i128;
    let candidate = SimTime::from_micros(nominal.max(done_tx.as_micros() as i128 + 1) as u64);
    // FIFO clamp: a delivery never overtakes the previous one on this path.
    let delivered = candidate.max(tx.last_delivery.plus_micros(1));

    let random_loss = loss_rng.bernoulli(profile.loss_rate);

    if profile.disconnect_intersects(t_send, delivered) {
        return DeliveryOutcome::Lost {
            cause: LossCause::Handover,
        };
    }
    if random_loss {
        return DeliveryOutcome::Lost {
            cause: LossCause::Random,
        };
    }
    tx.last_delivery = delivered;
    DeliveryOutcome::Delivered { at: delivered }
}

/// Parses an RTT trace: one `time_seconds,rtt_milliseconds` sample per line,
/// both decimal; `#` lines are comments. Returns (time_us, rtt_us) pairs.
pub fn parse_rtt_trace(text: &str) -> Result<Vec<(u64, u64)>, ProfileError> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split(',');
        let t: f64 = parse_field(parts.next(), "time_seconds", line)?;
        let rtt: f64 = parse_field(parts.next(), "rtt_milliseconds", line)?;
        if parts.next().is_some() {
            return Err(ProfileError::Trace {
                line,
                reason: "expected exactly two fields".into(),
            });
        }
        if t < 0.0 || rtt <= 0.0 {
            return Err(ProfileError::Trace {
                line,
                reason: "time must be non-negative and rtt positive".into(),
            });
        }
        samples.push(((t * 1e6).round() as u64, (rtt * 1e3).round() as u64));
    }
    if samples.is_empty() {
        return Err(ProfileError::Trace {
            line: 0,
            reason: "trace contains no samples".into(),
        });
    }
    if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(ProfileError::Trace {
            line: 0,
            reason: "samples must be strictly time-ordered".into(),
        });
    }
    Ok(samples)
}

/// Parses a handover schedule: `start_seconds,duration_seconds,kind[,post_rtt_ms]`
/// per line with kind in {disconnect, shift}.
pub fn parse_handover_schedule(text: &str) -> Result<Vec<HandoverEvent>, ProfileError> {
    let mut events = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(ProfileError::Schedule {
                line,
                reason: "expected start,duration,kind".into(),
            });
        }
        let start: f64 = fields[0].parse().map_err(|_| ProfileError::Schedule {
            line,
            reason: format!("bad start_seconds {:?}", fields[0]),
        })?;
        let duration: f64 = fields[1].parse().map_err(|_| ProfileError::Schedule {
            line,
            reason: format!("bad duration_seconds {:?}", fields[1]),
        })?;
        let (kind, post) = match fields[2] {
            "disconnect" => (HandoverKind::Disconnect, None),
            "shift" => {
                let ms: f64 = fields
                    .get(3)
                    .ok_or_else(|| ProfileError::Schedule {
                        line,
                        reason: "shift requires post_rtt_ms".into(),
                    })?
                    .parse()
                    .map_err(|_| ProfileError::Schedule {
                        line,
                        reason: "bad post_rtt_ms".into(),
                    })?;
                // post value is an RTT; the stored override is one-way.
                (HandoverKind::RttShift, Some(((ms * 1e3) / 2.0).round() as u64))
            }
            other => {
                return Err(ProfileError::Schedule {
                    line,
                    reason: format!("unknown kind {other:?}"),
                })
            }
        };
        if duration <= 0.0 || start < 0.0 {
            return Err(ProfileError::Schedule {
                line,
                reason: "start must be non-negative and duration positive".into(),
            });
        }
        events.push(HandoverEvent {
            start: SimTime::from_secs_f64(start),
            duration_us: (duration * 1e6).round() as u64,
            kind,
            post_shift_owd_us: post,
        });
    }
    Ok(events)
}

fn parse_field(field: Option<&str>, name: &str, line: usize) -> Result<f64, ProfileError> {
    field
        .map(str::trim)
        .ok_or_else(|| ProfileError::Trace {
            line,
            reason: format!("missing {name}"),
        })?
        .parse()
        .map_err(|_| ProfileError::Trace {
            line,
            reason: format!("unparseable {name}"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_profile(rtt_ms: u64, handovers: Vec<HandoverEvent>) -> PathProfile {
        PathProfile::generate(
            0,
            PathKind::Terrestrial,
            RttShape::Constant {
                rtt_us: rtt_ms * 1000,
            },
            100_000_000,
            0.0,
            0,
            handovers,
            SimTime::from_secs(1000),
        )
        .unwrap()
    }

    fn disconnect(start_s: u64, duration_ms: u64) -> HandoverEvent {
        HandoverEvent {
            start: SimTime::from_secs(start_s),
            duration_us: duration_ms * 1000,
            kind: HandoverKind::Disconnect,
            post_shift_owd_us: None,
        }
    }

    #[test]
    fn constant_profile_has_flat_owd() {
        let p = constant_profile(108, vec![]);
        for t in [0u64, 3, 500, 999] {
            assert_eq!(p.owd_at(SimTime::from_secs(t)).unwrap(), 54_000);
        }
    }

    #[test]
    fn sawtooth_interpolates_linearly() {
        let period = 15_000_000u64;
        let p = PathProfile::generate(
            1,
            PathKind::Satellite,
            RttShape::Sawtooth {
                min_rtt_us: 52_000,
                max_rtt_us: 68_000,
                period_us: period,
            },
            50_000_000,
            0.0,
            0,
            vec![],
            SimTime::from_secs(100),
        )
        .unwrap();
        assert_eq!(p.owd_at(SimTime::ZERO).unwrap(), 26_000);
        assert_eq!(p.owd_at(SimTime::from_micros(period / 2)).unwrap(), 30_000);
        // periodic repetition is exact
        assert_eq!(
            p.owd_at(SimTime::from_micros(period * 3 + period / 2)).unwrap(),
            30_000
        );
    }

    #[test]
    fn sinusoid_spans_min_to_max() {
        let p = PathProfile::generate(
            1,
            PathKind::Satellite,
            RttShape::Sinusoid {
                min_rtt_us: 52_000,
                max_rtt_us: 68_000,
                period_us: 10_000_000,
            },
            50_000_000,
            0.0,
            0,
            vec![],
            SimTime::from_secs(100),
        )
        .unwrap();
        let mut lo = u64::MAX;
        let mut hi = 0;
        for i in 0..1000 {
            let rtt = 2 * p.raw_owd_us(SimTime::from_micros(i * 10_000));
            lo = lo.min(rtt);
            hi = hi.max(rtt);
        }
        assert!(lo >= 51_800 && lo <= 52_400, "min rtt {lo}");
        assert!(hi >= 67_600 && hi <= 68_200, "max rtt {hi}");
    }

    #[test]
    fn disconnect_window_is_unreachable() {
        let p = constant_profile(108, vec![disconnect(10, 800)]);
        assert!(p.owd_at(SimTime::from_millis(10_400)).is_err());
        assert_eq!(p.owd_at(SimTime::from_millis(10_800)).unwrap(), 54_000);
        assert_eq!(p.owd_at(SimTime::from_secs(9)).unwrap(), 54_000);
    }

    #[test]
    fn transmit_adds_serialization_and_owd() {
        let p = constant_profile(108, vec![]);
        let mut tx = LinkTxState::default();
        let mut jitter = RngStream::new(1, 0);
        let mut loss = RngStream::new(1, 1);
        let out = transmit(&p, &mut tx, 1500, SimTime::ZERO, &mut jitter, &mut loss);
        // 1500 B at 100 Mbps = 120us on the wire, then 54ms of propagation.
        assert_eq!(
            out,
            DeliveryOutcome::Delivered {
                at: SimTime::from_micros(120 + 54_000)
            }
        );
    }

    #[test]
    fn serialization_queue_backs_up() {
        let p = constant_profile(108, vec![]);
        let mut tx = LinkTxState::default();
        let mut jitter = RngStream::new(1, 0);
        let mut loss = RngStream::new(1, 1);
        let first = transmit(&p, &mut tx, 1500, SimTime::ZERO, &mut jitter, &mut loss);
        let second = transmit(&p, &mut tx, 1500, SimTime::ZERO, &mut jitter, &mut loss);
        let (DeliveryOutcome::Delivered { at: t1 }, DeliveryOutcome::Delivered { at: t2 }) =
            (first, second)
        else {
            panic!("both should deliver");
        };
        assert_eq!(t2.micros_since(t1), 120);
    }

    #[test]
    fn segment_arriving_inside_window_is_handover_lost() {
        // OWD 30ms; sent 1ms before the window opens, so its delivery
        // interval reaches into the blackout.
        let p = PathProfile::generate(
            0,
            PathKind::Satellite,
            RttShape::Constant { rtt_us: 60_000 },
            50_000_000,
            0.0,
            0,
            vec![disconnect(10, 800)],
            SimTime::from_secs(100),
        )
        .unwrap();
        let mut tx = LinkTxState::default();
        let mut jitter = RngStream::new(1, 0);
        let mut loss = RngStream::new(1, 1);
        let out = transmit(
            &p,
            &mut tx,
            1448,
            SimTime::from_millis(9_999),
            &mut jitter,
            &mut loss,
        );
        assert_eq!(
            out,
            DeliveryOutcome::Lost {
                cause: LossCause::Handover
            }
        );
    }

    #[test]
    fn no_loss_rate_and_no_handover_always_delivers() {
        let p = constant_profile(108, vec![]);
        let mut tx = LinkTxState::default();
        let mut jitter = RngStream::new(7, 0);
        let mut loss = RngStream::new(7, 1);
        for i in 0..1000u64 {
            let out = transmit(
                &p,
                &mut tx,
                1448,
                SimTime::from_millis(i * 2),
                &mut jitter,
                &mut loss,
            );
            assert!(matches!(out, DeliveryOutcome::Delivered { .. }));
        }
    }

    #[test]
    fn rtt_shift_overrides_delay_and_loses_nothing() {
        let shift = HandoverEvent {
            start: SimTime::from_secs(5),
            duration_us: 2_000_000,
            kind: HandoverKind::RttShift,
            post_shift_owd_us: Some(20_000),
        };
        let p = PathProfile::generate(
            0,
            PathKind::Satellite,
            RttShape::Constant { rtt_us: 60_000 },
            50_000_000,
            0.0,
            0,
            vec![shift],
            SimTime::from_secs(100),
        )
        .unwrap();
        assert_eq!(p.owd_at(SimTime::from_secs(6)).unwrap(), 20_000);
        assert_eq!(p.owd_at(SimTime::from_secs(8)).unwrap(), 30_000);
        let mut tx = LinkTxState::default();
        let mut jitter = RngStream::new(3, 0);
        let mut loss = RngStream::new(3, 1);
        for i in 0..200u64 {
            let out = transmit(
                &p,
                &mut tx,
                1448,
                SimTime::from_millis(4_900 + i * 10),
                &mut jitter,
                &mut loss,
            );
            assert!(
                matches!(out, DeliveryOutcome::Delivered { .. }),
                "shift windows lose nothing"
            );
        }
    }

    #[test]
    fn oracle_returns_earliest_upcoming_event() {
        let p = constant_profile(108, vec![disconnect(10, 800), disconnect(20, 800)]);
        assert!(constant_profile(108, vec![]).next_handover(SimTime::ZERO).is_none());
        let next = p.next_handover(SimTime::from_secs(15)).unwrap();
        assert_eq!(next.start, SimTime::from_secs(20));
        // boundary inclusive
        let at = p.next_handover(SimTime::from_secs(10)).unwrap();
        assert_eq!(at.start, SimTime::from_secs(10));
    }

    #[test]
    fn sawtooth_rtt_spread_matches_range() {
        let p = PathProfile::generate(
            0,
            PathKind::Satellite,
            RttShape::Sawtooth {
                min_rtt_us: 52_000,
                max_rtt_us: 68_000,
                period_us: 15_000_000,
            },
            50_000_000,
            0.0,
            0,
            vec![],
            SimTime::from_secs(300),
        )
        .unwrap();
        let mut lo = u64::MAX;
        let mut hi = 0;
        for i in 0..30_000u64 {
            let rtt = 2 * p.raw_owd_us(SimTime::from_millis(i * 10));
            lo = lo.min(rtt);
            hi = hi.max(rtt);
        }
        assert_eq!(hi - lo, 16_000, "cdf spread max-min should be 16ms");
    }

    #[test]
    fn trace_profile_reproduces_samples_exactly() {
        let text = "# t_s,rtt_ms\n0.0,52\n1.0,60\n2.5,68\n10.0,52\n";
        let samples = parse_rtt_trace(text).unwrap();
        let p = PathProfile::generate(
            0,
            PathKind::Satellite,
            RttShape::Trace { samples: samples.clone() },
            50_000_000,
            0.0,
            0,
            vec![],
            SimTime::from_secs(10),
        )
        .unwrap();
        for (t_us, rtt_us) in samples {
            assert_eq!(p.raw_owd_us(SimTime::from_micros(t_us)), rtt_us / 2);
        }
        // midpoint of the first span interpolates linearly
        assert_eq!(p.raw_owd_us(SimTime::from_millis(500)), 56_000 / 2);
    }

    #[test]
    fn malformed_trace_names_the_line() {
        let text = "0.0,52\n1.0,banana\n";
        let err = parse_rtt_trace(text).unwrap_err();
        assert_eq!(
            err,
            ProfileError::Trace {
                line: 2,
                reason: "unparseable rtt_milliseconds".into()
            }
        );
    }

    #[test]
    fn short_trace_fails_horizon_validation() {
        let samples = parse_rtt_trace("0.0,52\n1.0,60\n").unwrap();
        let err = PathProfile::generate(
            0,
            PathKind::Satellite,
            RttShape::Trace { samples },
            50_000_000,
            0.0,
            0,
            vec![],
            SimTime::from_secs(10),
        )
        .unwrap_err();
        assert!(matches!(err, ProfileError::Invalid(_)));
    }

    #[test]
    fn handover_schedule_parses_and_rejects_bad_lines() {
        let ok = parse_handover_schedule("10,0.8,disconnect\n30,2,shift,40\n").unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[0].kind, HandoverKind::Disconnect);
        assert_eq!(ok[1].post_shift_owd_us, Some(20_000));
        let err = parse_handover_schedule("10,0.8,teleport\n").unwrap_err();
        assert_eq!(
            err,
            ProfileError::Schedule {
                line: 1,
                reason: "unknown kind \"teleport\"".into()
            }
        );
    }

    #[test]
    fn empirical_loss_rate_tracks_configured_rate() {
        let p = PathProfile::generate(
            0,
            PathKind::Satellite,
            RttShape::Constant { rtt_us: 60_000 },
            50_000_000,
            0.005,
            0,
            vec![],
            SimTime::from_secs(100_000),
        )
        .unwrap();
        let mut tx = LinkTxState::default();
        let mut jitter = RngStream::new(11, 0);
        let mut loss = RngStream::new(11, 1);
        const N: u64 = 100_000;
        let mut lost = 0u64;
        for i in 0..N {
            let out = transmit(
                &p,
                &mut tx,
                1448,
                SimTime::from_millis(i),
                &mut jitter,
                &mut loss,
            );
            if matches!(out, DeliveryOutcome::Lost { .. }) {
                lost += 1;
            }
        }
        let phat = lost as f64 / N as f64;
        let sigma = (0.005f64 * 0.995 / N as f64).sqrt();
        assert!(
            (phat - 0.005).abs() < 3.0 * sigma,
            "loss fraction {phat} misses 0.005 +/- {}",
            3.0 * sigma
        );
    }

    #[test]
    fn deliveries_stay_fifo_under_heavy_jitter() {
        let p = PathProfile::generate(
            0,
            PathKind::Satellite,
            RttShape::Sawtooth {
                min_rtt_us: 52_000,
                max_rtt_us: 68_000,
                period_us: 1_000_000,
            },
            50_000_000,
            0.0,
            5_000,
            vec![],
            SimTime::from_secs(1000),
        )
        .unwrap();
        let mut tx = LinkTxState::default();
        let mut jitter = RngStream::new(5, 0);
        let mut loss = RngStream::new(5, 1);
        let mut last = SimTime::ZERO;
        for i in 0..20_000u64 {
            let out = transmit(
                &p,
                &mut tx,
                1448,
                SimTime::from_micros(i * 137),
                &mut jitter,
                &mut loss,
            );
            if let DeliveryOutcome::Delivered { at } = out {
                assert!(at > last, "delivery order violated at send {i}");
                last = at;
            }
        }
    }
}
