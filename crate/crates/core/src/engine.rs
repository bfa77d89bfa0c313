//! Deterministic discrete-event core: simulation clock, ordered event queue
//! with cancellable entries, and seeded per-stream pseudo-randomness.
//!
//! Time is integer microseconds. All stochastic draws come from named
//! [`RngStream`]s so that a (seed, stream-id) pair yields the same sequence
//! on every platform; system randomness and floating-point transcendentals
//! are deliberately avoided.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::ops::ControlFlow;

/// Microseconds since simulation start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        debug_assert!(s >= 0.0);
        SimTime((s * 1e6).round() as u64)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub const fn plus_micros(self, us: u64) -> Self {
        SimTime(self.0 + us)
    }

    pub const fn saturating_sub_micros(self, us: u64) -> Self {
        SimTime(self.0.saturating_sub(us))
    }

    pub const fn micros_since(self, earlier: SimTime) -> u64 {
        self.0 - earlier.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs_f64())
    }
}

/// Handle to a scheduled event, usable for cancellation (retransmission
/// timers are the main customer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

/// Scheduling into the past is a simulator logic bug, not a recoverable
/// condition for callers; it is surfaced rather than silently clamped.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("event scheduled at {fire_at} which is before the current clock {now}")]
pub struct PastEventError {
    pub fire_at: SimTime,
    pub now: SimTime,
}

/// Outcome of [`EventQueue::run_until`]: either the dispatch callback asked
/// to stop, or the queue ran dry first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// The stop condition was met at this time.
    Stopped(SimTime),
    /// The queue was exhausted before the stop condition held.
    Exhausted(SimTime),
}

impl RunOutcome {
    pub fn time(self) -> SimTime {
        match self {
            RunOutcome::Stopped(t) | RunOutcome::Exhausted(t) => t,
        }
    }

    pub fn is_exhausted(self) -> bool {
        matches!(self, RunOutcome::Exhausted(_))
    }
}

/// Time-ordered event queue. Events with equal fire time are delivered in
/// insertion order; the clock never moves backwards.
#[derive(Debug)]
pub struct EventQueue<T> {
    heap: BinaryHeap<Reverse<(SimTime, u64)>>,
    // Payloads live here; cancellation removes the payload and leaves a
    // stale heap entry that pop() skips.
    pending: HashMap<u64, T>,
    next_seq: u64,
    clock: SimTime,
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            pending: HashMap::new(),
            next_seq: 0,
            clock: SimTime::ZERO,
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Enqueues `payload` to fire at `fire_at`. Rejects times before the
    /// current clock.
    pub fn schedule(&mut self, fire_at: SimTime, payload: T) -> Result<EventHandle, PastEventError> {
        if fire_at < self.clock {
            return Err(PastEventError {
                fire_at,
                now: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse((fire_at, seq)));
        self.pending.insert(seq, payload);
        Ok(EventHandle(seq))
    }

    /// Removes a scheduled event. Returns false if it already fired or was
    /// cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.pending.remove(&handle.0).is_some()
    }

    /// Pops the next live event in (fire_at, insertion) order, advancing the
    /// clock to its fire time.
    pub fn pop(&mut self) -> Option<(SimTime, T)> {
        while let Some(Reverse((fire_at, seq))) = self.heap.pop() {
            if let Some(payload) = self.pending.remove(&seq) {
                debug_assert!(fire_at >= self.clock, "event queue clock went backwards");
                self.clock = fire_at;
                return Some((fire_at, payload));
            }
        }
        None
    }

    /// Dispatches events in order until the callback breaks or the queue is
    /// exhausted, returning the final clock either way.
    pub fn run_until(
        &mut self,
        mut dispatch: impl FnMut(&mut Self, SimTime, T) -> ControlFlow<()>,
    ) -> RunOutcome {
        while let Some((t, payload)) = self.pop() {
            if dispatch(self, t, payload).is_break() {
                return RunOutcome::Stopped(self.clock);
            }
        }
        RunOutcome::Exhausted(self.clock)
    }
}

/// SplitMix64 constants from the reference implementation (Steele, Lea and
/// Flood, "Fast splittable pseudorandom number generators").
const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One independent, reproducible random stream. Each stochastic source in a
/// run (loss per path, jitter per path) gets its own stream so that adding
/// draws to one source never perturbs another.
#[derive(Debug, Clone)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    /// Stream origin is a hash of (seed, stream_id); distinct ids start at
    /// unrelated points of the SplitMix64 orbit.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream {
            state: mix64(seed) ^ mix64(stream_id ^ 0x6A09_E667_F3BC_C909),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(SPLITMIX_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Approximate standard normal via the sum of 12 uniforms (Irwin-Hall).
    /// Uses only IEEE additions, so results are bit-identical across
    /// platforms, unlike transcendental-based samplers.
    pub fn gaussian(&mut self) -> f64 {
        let mut acc = 0.0;
        for _ in 0..12 {
            acc += self.uniform();
        }
        acc - 6.0
    }
}
