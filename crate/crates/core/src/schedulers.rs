//! The scheduler interface and five implementations.
//!
//! `alcs` estimates per-subflow transmission latency from backlog, inflight
//! and queued counts, window size and smoothed RTT, corrects the estimate
//! with an adaptive compensation factor, and proactively deactivates
//! satellite subflows ahead of scheduled disconnect handovers. `minrtt`,
//! `rr`, `ecf` and `blest` are the comparison baselines; ECF and BLEST are
//! reconstructions at the fidelity of their one-line descriptions, with
//! constants exposed in [`SchedulerParams`].
//!
//! Every `decide` is a pure function of the view it is handed; mutation
//! happens only in the explicit feedback hooks (`on_dispatch`, `on_ack`,
//! `on_hol_block`, `compensation_tick`).

use crate::engine::SimTime;
use crate::linkmodel::{HandoverEvent, HandoverKind, PathProfile};

pub type SubflowId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerDecision {
    SendOn(SubflowId),
    Defer,
}

/// Read-only per-subflow state handed to `decide`.
#[derive(Debug, Clone, Copy)]
pub struct SubflowSnapshot {
    pub id: SubflowId,
    pub srtt_us: u64,
    pub rttvar_us: u64,
    pub cwnd: u32,
    pub inflight: u32,
    /// Segments parked in this subflow's local queue, awaiting headroom.
    pub queued: u32,
    pub sigma: f64,
    pub available: bool,
}

impl SubflowSnapshot {
    pub fn headroom(&self) -> bool {
        self.available && self.inflight < self.cwnd
    }
}

/// Connection-level view at decision time.
#[derive(Debug, Clone)]
pub struct SchedView<'a> {
    pub now: SimTime,
    /// Unscheduled segments in the connection send buffer (k).
    pub backlog: usize,
    pub subflows: &'a [SubflowSnapshot],
    /// Free MPTCP-level send window, in segments (BLEST's blocking budget).
    pub send_window_free_segments: u64,
    pub mss: u32,
}

/// Estimated transmission latency in microseconds for scheduling `k`
/// backlogged segments onto a subflow with `inflight` unacked and `queued`
/// assigned-but-unsent segments:
///
/// `((k + inflight + queued) / cwnd) * (srtt + delta) * sigma`
///
/// Callers evaluating a non-full alternative pass `queued = 0`. A subflow
/// with `cwnd == 0` must be treated as unusable, never estimated.
pub fn estimate_latency(
    k: u64,
    inflight: u64,
    queued: u64,
    cwnd: u32,
    srtt_us: u64,
    rttvar_us: u64,
    sigma: f64,
) -> f64 {
    debug_assert!(cwnd >= 1, "latency estimate requires a usable window");
    debug_assert!(sigma > 0.0);
    ((k + inflight + queued) as f64 / cwnd as f64) * ((srtt_us + rttvar_us) as f64) * sigma
}

/// Knobs for the adaptive compensation loop and the baseline
/// reconstructions. Defaults match the scenario presets.
#[derive(Debug, Clone)]
pub struct SchedulerParams {
    /// Attenuation factor applied to sigma on over/under-estimation.
    pub alpha: f64,
    /// Compensation update interval, microseconds.
    pub t_u_us: u64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// ECF's waiting-bias constant.
    pub ecf_beta: f64,
    /// BLEST lambda increment on observed head-of-line blocking.
    pub blest_lambda_step: f64,
    /// BLEST lambda decay toward 1.0, per second.
    pub blest_lambda_decay_per_s: f64,
    pub mss: u32,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        SchedulerParams {
            alpha: 0.9,
            t_u_us: 500_000,
            sigma_min: 0.25,
            sigma_max: 4.0,
            ecf_beta: 0.25,
            blest_lambda_step: 0.05,
            blest_lambda_decay_per_s: 0.01,
            mss: 1448,
        }
    }
}

/// Per-subflow compensation bookkeeping: packets acked this interval (atp)
/// against the count the latency model itself predicted (etp).
#[derive(Debug, Clone, Default)]
pub struct CompensationEntry {
    pub atp: u64,
    pub etp: u64,
}

#[derive(Debug, Clone)]
pub struct CompensationState {
    pub entries: Vec<CompensationEntry>,
    pub alpha: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub t_u_us: u64,
}

impl CompensationState {
    pub fn new(subflows: usize, params: &SchedulerParams) -> Self {
        CompensationState {
            entries: vec![CompensationEntry::default(); subflows],
            alpha: params.alpha,
            sigma_min: params.sigma_min,
            sigma_max: params.sigma_max,
            t_u_us: params.t_u_us,
        }
    }

    pub fn on_ack(&mut self, subflow: SubflowId) {
        self.entries[subflow].atp += 1;
    }

    /// One update-interval boundary: adjusts each sigma by the attenuation
    /// law (shrink when the path outperformed the estimate, grow when it
    /// underperformed, hold on exact match), clamps it, then re-snapshots
    /// etp from the post-update state and resets atp.
    pub fn tick(&mut self, states: &[SubflowSnapshot]) -> Vec<f64> {
        let mut sigmas = Vec::with_capacity(states.len());
        for (entry, s) in self.entries.iter_mut().zip(states) {
            let mut sigma = s.sigma;
            if entry.atp > entry.etp {
                sigma *= self.alpha;
            } else if entry.atp < entry.etp {
                sigma /= self.alpha;
            }
            sigma = sigma.clamp(self.sigma_min, self.sigma_max);
            entry.atp = 0;
            entry.etp = expected_packets(self.t_u_us, s.cwnd, s.srtt_us, s.rttvar_us, sigma);
            sigmas.push(sigma);
        }
        sigmas
    }

    /// Initial etp snapshot, taken once the subflows have their first RTT
    /// estimate.
    pub fn resnapshot(&mut self, states: &[SubflowSnapshot]) {
        for (entry, s) in self.entries.iter_mut().zip(states) {
            entry.atp = 0;
            entry.etp = expected_packets(self.t_u_us, s.cwnd, s.srtt_us, s.rttvar_us, s.sigma);
        }
    }
}

/// Packets the latency model predicts a subflow moves in one interval:
/// floor(T_u * cwnd / ((srtt + delta) * sigma)). Zero before the first RTT
/// sample.
pub fn expected_packets(t_u_us: u64, cwnd: u32, srtt_us: u64, rttvar_us: u64, sigma: f64) -> u64 {
    let denom = (srtt_us + rttvar_us) as f64 * sigma;
    if denom <= 0.0 {
        return 0;
    }
    (t_u_us as f64 * cwnd as f64 / denom).floor() as u64
}

/// Blackout interval for a disconnect handover: the link is treated as
/// unavailable from one smoothed RTT before the event until it ends, giving
/// in-flight data time to land before the link drops.
pub fn blackout_interval(event: &HandoverEvent, srtt_us: u64) -> (SimTime, SimTime) {
    (event.start.saturating_sub_micros(srtt_us), event.end())
}

/// Availability under proactive handover management. Only disconnect
/// handovers deactivate the path; delay shifts lose nothing and are left to
/// the estimator.
pub fn path_available(profile: &PathProfile, srtt_us: u64, now: SimTime) -> bool {
    match profile.next_or_active_disconnect(now) {
        None => true,
        Some(event) => {
            debug_assert_eq!(event.kind, HandoverKind::Disconnect);
            let (from, to) = blackout_interval(event, srtt_us);
            !(now >= from && now < to)
        }
    }
}

/// A multipath scheduler. `decide` must be pure; all adaptation goes through
/// the feedback hooks.
pub trait Scheduler {
    fn name(&self) -> &'static str;

    fn decide(&self, view: &SchedView) -> SchedulerDecision;

    /// On Defer: the subflow the head segment should be parked on (assigned
    /// to its local queue to await headroom), if the scheduler is committing
    /// to a path rather than merely backing off.
    fn defer_assignment(&self, _view: &SchedView) -> Option<SubflowId> {
        None
    }

    fn on_dispatch(&mut self, _subflow: SubflowId) {}

    fn on_ack(&mut self, _subflow: SubflowId, _now: SimTime) {}

    /// Receiver-side head-of-line stall attributed to a slow subflow.
    fn on_hol_block(&mut self, _blocked_on: SubflowId, _now: SimTime) {}

    /// Called once at simulation start with seeded subflow state.
    fn on_start(&mut self, _states: &[SubflowSnapshot]) {}

    /// Interval for periodic compensation ticks, when the scheduler uses
    /// them.
    fn compensation_interval_us(&self) -> Option<u64> {
        None
    }

    /// One compensation boundary; returns the new per-subflow sigmas.
    fn compensation_tick(&mut self, _states: &[SubflowSnapshot]) -> Option<Vec<f64>> {
        None
    }

    /// Whether satellite subflows are deactivated around scheduled
    /// disconnect handovers.
    fn uses_handover_guard(&self) -> bool {
        false
    }
}

fn fastest_available(subflows: &[SubflowSnapshot]) -> Option<&SubflowSnapshot> {
    subflows
        .iter()
        .filter(|s| s.available)
        .min_by_key(|s| (s.srtt_us, s.id))
}

fn fastest_with_headroom<'a>(
    subflows: &'a [SubflowSnapshot],
    excluding: Option<SubflowId>,
) -> Option<&'a SubflowSnapshot> {
    subflows
        .iter()
        .filter(|s| s.headroom() && Some(s.id) != excluding)
        .min_by_key(|s| (s.srtt_us, s.id))
}

/// Adaptive latency compensation scheduler.
///
/// Decision rule: restrict to available subflows; if the fastest (minimum
/// srtt) one has window headroom, use it. Otherwise estimate transmission
/// latency for every available subflow -- full subflows with their queued
/// count included, non-full alternatives with queued = 0 -- and use the
/// argmin (ties to the lower subflow id) if it has headroom, else defer and
/// park the head segment on the argmin subflow.
pub struct Alcs {
    comp: CompensationState,
    t_u_us: u64,
}

impl Alcs {
    pub fn new(subflows: usize, params: &SchedulerParams) -> Self {
        Alcs {
            comp: CompensationState::new(subflows, params),
            t_u_us: params.t_u_us,
        }
    }

    /// The argmin of the latency estimates over available subflows.
    fn best_estimate<'a>(&self, view: &'a SchedView) -> Option<&'a SubflowSnapshot> {
        let k = view.backlog as u64;
        let mut best: Option<(f64, &SubflowSnapshot)> = None;
        for s in view.subflows.iter().filter(|s| s.available) {
            if s.cwnd == 0 {
                continue;
            }
            let queued = if s.headroom() { 0 } else { s.queued as u64 };
            let tl = estimate_latency(
                k,
                s.inflight as u64,
                queued,
                s.cwnd,
                s.srtt_us,
                s.rttvar_us,
                s.sigma,
            );
            let better = match best {
                None => true,
                Some((btl, bs)) => tl < btl || (tl == btl && s.id < bs.id),
            };
            if better {
                best = Some((tl, s));
            }
        }
        best.map(|(_, s)| s)
    }
}

impl Scheduler for Alcs {
    fn name(&self) -> &'static str {
        "alcs"
    }

    fn decide(&self, view: &SchedView) -> SchedulerDecision {
        let Some(fast) = fastest_available(view.subflows) else {
            return SchedulerDecision::Defer;
        };
        if fast.headroom() {
            return SchedulerDecision::SendOn(fast.id);
        }
        match self.best_estimate(view) {
            Some(s) if s.headroom() => SchedulerDecision::SendOn(s.id),
            _ => SchedulerDecision::Defer,
        }
    }

    fn defer_assignment(&self, view: &SchedView) -> Option<SubflowId> {
        // Committing to wait for a full subflow only makes sense while an
        // alternative exists to compare against and its queue is not already
        // a full window deep.
        let available = view.subflows.iter().filter(|s| s.available).count();
        if available < 2 {
            return None;
        }
        let best = self.best_estimate(view)?;
        if !best.headroom() && best.queued < best.cwnd {
            Some(best.id)
        } else {
            None
        }
    }

    fn on_ack(&mut self, subflow: SubflowId, _now: SimTime) {
        self.comp.on_ack(subflow);
    }

    fn on_start(&mut self, states: &[SubflowSnapshot]) {
        self.comp.resnapshot(states);
    }

    fn compensation_interval_us(&self) -> Option<u64> {
        Some(self.t_u_us)
    }

    fn compensation_tick(&mut self, states: &[SubflowSnapshot]) -> Option<Vec<f64>> {
        Some(self.comp.tick(states))
    }

    fn uses_handover_guard(&self) -> bool {
        true
    }
}

/// Default scheduler: lowest smoothed RTT with window headroom.
pub struct MinRtt;

impl Scheduler for MinRtt {
    fn name(&self) -> &'static str {
        "minrtt"
    }

    fn decide(&self, view: &SchedView) -> SchedulerDecision {
        match fastest_with_headroom(view.subflows, None) {
            Some(s) => SchedulerDecision::SendOn(s.id),
            None => SchedulerDecision::Defer,
        }
    }
}

/// Cycles over subflows, skipping those without headroom.
pub struct RoundRobin {
    cursor: usize,
}

impl RoundRobin {
    pub fn new() -> Self {
        RoundRobin { cursor: 0 }
    }
}

impl Default for RoundRobin {
    fn default() -> Self {
        Self::new()
    }
}

impl Scheduler for RoundRobin {
    fn name(&self) -> &'static str {
        "rr"
    }

    fn decide(&self, view: &SchedView) -> SchedulerDecision {
        let n = view.subflows.len();
        for offset in 0..n {
            let s = &view.subflows[(self.cursor + offset) % n];
            if s.headroom() {
                return SchedulerDecision::SendOn(s.id);
            }
        }
        SchedulerDecision::Defer
    }

    fn on_dispatch(&mut self, subflow: SubflowId) {
        self.cursor = subflow + 1;
    }
}

/// Earliest-completion-first reconstruction: prefer the fastest subflow;
/// when it is full, send on the next-fastest open subflow only if waiting
/// out the fast path's backlog would finish later.
pub struct Ecf {
    beta: f64,
}

impl Ecf {
    pub fn new(params: &SchedulerParams) -> Self {
        Ecf { beta: params.ecf_beta }
    }
}

impl Scheduler for Ecf {
    fn name(&self) -> &'static str {
        "ecf"
    }

    fn decide(&self, view: &SchedView) -> SchedulerDecision {
        let Some(fast) = fastest_available(view.subflows) else {
            return SchedulerDecision::Defer;
        };
        if fast.headroom() {
            return SchedulerDecision::SendOn(fast.id);
        }
        let Some(slow) = fastest_with_headroom(view.subflows, Some(fast.id)) else {
            return SchedulerDecision::Defer;
        };
        let n = (view.backlog + fast.inflight as usize) as f64;
        let srtt_f = fast.srtt_us as f64;
        let srtt_s = slow.srtt_us as f64;
        let delta = fast.rttvar_us.max(slow.rttvar_us) as f64;
        let wait_fast = (n / fast.cwnd as f64) * srtt_f + srtt_f * (1.0 + self.beta) + delta;
        let use_slow = 2.0 * srtt_s + srtt_s * (1.0 + self.beta);
        if wait_fast < use_slow {
            SchedulerDecision::Defer
        } else {
            SchedulerDecision::SendOn(slow.id)
        }
    }
}

/// Blocking-estimation reconstruction: when the fast subflow is full,
/// estimate how many bytes it could move during one slow-path round trip
/// and defer if pushing the head onto the slow path would eat the send
/// window that traffic needs.
pub struct Blest {
    lambda: f64,
    lambda_step: f64,
    lambda_decay_per_s: f64,
    last_decay: SimTime,
}

impl Blest {
    pub fn new(params: &SchedulerParams) -> Self {
        Blest {
            lambda: 1.0,
            lambda_step: params.blest_lambda_step,
            lambda_decay_per_s: params.blest_lambda_decay_per_s,
            last_decay: SimTime::ZERO,
        }
    }
}

impl Scheduler for Blest {
    fn name(&self) -> &'static str {
        "blest"
    }

    fn decide(&self, view: &SchedView) -> SchedulerDecision {
        let Some(fast) = fastest_available(view.subflows) else {
            return SchedulerDecision::Defer;
        };
        if fast.headroom() {
            return SchedulerDecision::SendOn(fast.id);
        }
        let Some(slow) = fastest_with_headroom(view.subflows, Some(fast.id)) else {
            return SchedulerDecision::Defer;
        };
        let mss = view.mss as f64;
        let rtt_ratio = slow.srtt_us as f64 / fast.srtt_us.max(1) as f64;
        let fast_bytes =
            mss * (fast.cwnd as f64 + (rtt_ratio - 1.0) / 2.0) * rtt_ratio * self.lambda;
        let free_bytes = view.send_window_free_segments as f64 * mss;
        if fast_bytes > free_bytes - (slow.inflight as f64 + 1.0) * mss {
            SchedulerDecision::Defer
        } else {
            SchedulerDecision::SendOn(slow.id)
        }
    }

    fn on_ack(&mut self, _subflow: SubflowId, now: SimTime) {
        if self.lambda > 1.0 {
            let elapsed_s = now.micros_since(self.last_decay) as f64 / 1e6;
            self.lambda = (self.lambda - self.lambda_decay_per_s * elapsed_s).max(1.0);
        }
        self.last_decay = now;
    }

    fn on_hol_block(&mut self, _blocked_on: SubflowId, now: SimTime) {
        self.lambda += self.lambda_step;
        self.last_decay = now;
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown scheduler {0:?}; expected one of alcs|minrtt|rr|ecf|blest")]
pub struct UnknownScheduler(pub String);

/// Scheduler registry keyed by the names scenario configs use.
pub fn build_scheduler(
    name: &str,
    subflows: usize,
    params: &SchedulerParams,
) -> Result<Box<dyn Scheduler>, UnknownScheduler> {
    match name {
        "alcs" => Ok(Box::new(Alcs::new(subflows, params))),
        "minrtt" => Ok(Box::new(MinRtt)),
        "rr" => Ok(Box::new(RoundRobin::new())),
        "ecf" => Ok(Box::new(Ecf::new(params))),
        "blest" => Ok(Box::new(Blest::new(params))),
        other => Err(UnknownScheduler(other.to_string())),
    }
}

pub const SCHEDULER_NAMES: [&str; 5] = ["alcs", "minrtt", "rr", "ecf", "blest"];
