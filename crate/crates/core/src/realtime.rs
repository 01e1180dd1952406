//! Real-time consumption within each slot.
//!
//! Foreground requests are admitted while the app has allocation left.
//! Background requests are admitted with probability
//! `ρ = base^(m1·t + m2)`, where `base = min(1, 1 − (g/x − κ)/(1 − κ))`.
//! When a foreground app runs dry the slot's unused volume is reassigned
//! (bound resetting followed by a greedy reallocation), and only when nothing
//! is left does consumption spill into overage billed at the real-time price.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dayahead::{payment_of, PriceCurve};
use crate::demand::{benefit_of, check_len, AppId, BenefitWeights, DemandError, TrafficProfile};

/// Minutes used in place of `t = 0` when extrapolating a consumption rate.
pub const MIN_ELAPSED: f64 = 1.0;

const TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealtimeError {
    #[error("allocation is zero")]
    ZeroAllocation,
    #[error("no unused volume left in the slot")]
    NoVolume,
    #[error("bounds cannot be reset at zero elapsed minutes")]
    UndefinedAtZeroElapsed,
    #[error("reallocation bounds infeasible: {0}")]
    InfeasibleRebounds(String),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("invalid admission parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Demand(#[from] DemandError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissionParams {
    pub m1: f64,
    pub m2: f64,
    /// Slack threshold in `[0, 1)`; 0 is the strict form.
    pub kappa: f64,
}

impl AdmissionParams {
    pub fn with_kappa(self, kappa: f64) -> Result<Self, RealtimeError> {
        let p = AdmissionParams { kappa, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RealtimeError> {
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(RealtimeError::InvalidParams(format!(
                "kappa must lie in [0, 1), got {}",
                self.kappa
            )));
        }
        // the exponent is affine in t, so checking the endpoints suffices
        if !(self.m2 > 0.0 && self.m1 * 60.0 + self.m2 > 0.0) {
            return Err(RealtimeError::InvalidParams(format!(
                "exponent m1·t + m2 must be positive on [0, 60] (m1 = {}, m2 = {})",
                self.m1, self.m2
            )));
        }
        Ok(())
    }

    pub fn exponent(&self, t: f64) -> f64 {
        self.m1 * t + self.m2
    }
}

impl Default for AdmissionParams {
    fn default() -> Self {
        calibrate_admission()
    }
}

/// Exponent fitted so that `ρ(0.5x, 0) = 0.05` and `ρ(0.9x, 60) = 0.95`.
pub fn calibrate_admission() -> AdmissionParams {
    let m2 = 0.05f64.ln() / 0.5f64.ln();
    let m1 = (0.95f64.ln() / 0.1f64.ln() - m2) / 60.0;
    AdmissionParams { m1, m2, kappa: 0.0 }
}

/// Probability of admitting a background request after `g` of `x` MB have
/// been consumed `t` minutes into the slot.
pub fn accept_probability(g: f64, x: f64, t: f64, params: &AdmissionParams) -> Result<f64, RealtimeError> {
    if x <= 0.0 {
        return Err(RealtimeError::ZeroAllocation);
    }
    let used = (g / x).max(0.0);
    let base = (1.0 - (used - params.kappa) / (1.0 - params.kappa)).clamp(0.0, 1.0);
    if base == 1.0 {
        return Ok(1.0);
    }
    Ok(base.powf(params.exponent(t.clamp(0.0, 60.0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Foreground,
    Background,
}

impl RequestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::Foreground => "foreground",
            RequestKind::Background => "background",
        }
    }
}

impl std::str::FromStr for RequestKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "foreground" | "fg" => Ok(RequestKind::Foreground),
            "background" | "bg" => Ok(RequestKind::Background),
            other => Err(format!("unknown request kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestEvent {
    /// Minutes since the start of the slot, in `[0, 60)`.
    pub minute: f64,
    pub slot: usize,
    pub app: AppId,
    /// MB.
    pub volume: f64,
    pub kind: RequestKind,
}

impl RequestEvent {
    pub fn validate(&self) -> Result<(), RealtimeError> {
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            return Err(RealtimeError::InvalidEvent(format!(
                "volume must be positive, got {}",
                self.volume
            )));
        }
        if !(0.0..60.0).contains(&self.minute) {
            return Err(RealtimeError::InvalidEvent(format!(
                "minute must lie in [0, 60), got {}",
                self.minute
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotState {
    pub slot: usize,
    /// Current allocation per app; changes when volume is reallocated.
    pub allocated: Vec<f64>,
    /// Volume bought day-ahead for this slot, per app.
    pub prebought: Vec<f64>,
    pub consumed: Vec<f64>,
    pub elapsed_min: f64,
    /// Cents per MB.
    pub realtime_price: f64,
    /// Consumption beyond the current allocation, per app.
    pub overage: Vec<f64>,
}

impl SlotState {
    pub fn new(slot: usize, allocation: Vec<f64>, realtime_price: f64) -> Self {
        let n = allocation.len();
        SlotState {
            slot,
            prebought: allocation.clone(),
            allocated: allocation,
            consumed: vec![0.0; n],
            elapsed_min: 0.0,
            realtime_price,
            overage: vec![0.0; n],
        }
    }

    pub fn remaining(&self, app: usize) -> f64 {
        self.allocated[app] - self.consumed[app]
    }

    /// Unused volume across all apps.
    pub fn unused(&self) -> f64 {
        self.allocated
            .iter()
            .zip(&self.consumed)
            .map(|(x, g)| (x - g).max(0.0))
            .sum()
    }

    fn consume(&mut self, app: usize, volume: f64) {
        self.consumed[app] += volume;
        self.overage[app] = (self.consumed[app] - self.allocated[app]).max(0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Admitted,
    /// Admitted after unused volume was moved to the requesting app.
    Reallocated,
    /// Admitted beyond the allocation, billed at the real-time price.
    Overage,
    Denied,
}

impl Decision {
    pub fn admitted(self) -> bool {
        self != Decision::Denied
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Admitted => "admitted",
            Decision::Reallocated => "reallocated",
            Decision::Overage => "overage",
            Decision::Denied => "denied",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealtimePolicy {
    pub admission: AdmissionParams,
    /// The user agrees to pay for foreground traffic beyond the schedule.
    pub overage_permitted: bool,
}

impl Default for RealtimePolicy {
    fn default() -> Self {
        RealtimePolicy {
            admission: calibrate_admission(),
            overage_permitted: true,
        }
    }
}

/// Processes one request against the slot state. `omega` holds the current
/// slot's benefit weights.
pub fn handle_request<R: Rng + ?Sized>(
    state: &mut SlotState,
    ev: &RequestEvent,
    rng: &mut R,
    policy: &RealtimePolicy,
    omega: &[f64],
) -> Result<Decision, RealtimeError> {
    ev.validate()?;
    let a = ev.app.0;
    if a >= state.allocated.len() {
        return Err(RealtimeError::InvalidEvent(format!("unknown app {a}")));
    }
    if ev.minute < state.elapsed_min {
        return Err(RealtimeError::InvalidEvent(format!(
            "minute {} precedes elapsed time {}",
            ev.minute, state.elapsed_min
        )));
    }
    state.elapsed_min = ev.minute;

    match ev.kind {
        RequestKind::Background => {
            if state.remaining(a) + TOL < ev.volume {
                return Ok(Decision::Denied);
            }
            let rho = accept_probability(state.consumed[a], state.allocated[a], ev.minute, &policy.admission)?;
            let u: f64 = rng.random();
            if u < rho {
                state.consume(a, ev.volume);
                Ok(Decision::Admitted)
            } else {
                Ok(Decision::Denied)
            }
        }
        RequestKind::Foreground => {
            if state.remaining(a) + TOL >= ev.volume {
                state.consume(a, ev.volume);
                return Ok(Decision::Admitted);
            }
            let mut decision = Decision::Overage;
            let t = ev.minute.max(MIN_ELAPSED);
            match reset_bounds_for(state, AppId(a), t, omega) {
                Ok((lo, hi)) => {
                    state.allocated = reallocate(&state.allocated, &lo, &hi, omega)?;
                    if state.remaining(a) + TOL >= ev.volume {
                        decision = Decision::Reallocated;
                    }
                }
                Err(RealtimeError::NoVolume) => {}
                Err(e) => return Err(e),
            }
            if decision == Decision::Overage && !policy.overage_permitted {
                return Ok(Decision::Denied);
            }
            state.consume(a, ev.volume);
            Ok(decision)
        }
    }
}

/// New per-app bounds `(b′, B′)` for reallocating the slot's unused volume to
/// the exhausted app `a1`.
///
/// Every app keeps at least its extrapolated hourly need `60g/t`, capped at
/// its allocation. `a1` receives the freed volume. If nothing is freed but
/// some app still has unused volume, the lowest-ω such app is cut back to
/// what it has consumed.
pub fn reset_bounds(
    state: &SlotState,
    a1: AppId,
    omega: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), RealtimeError> {
    if state.elapsed_min <= 0.0 {
        return Err(RealtimeError::UndefinedAtZeroElapsed);
    }
    reset_bounds_for(state, a1, state.elapsed_min, omega)
}

fn reset_bounds_for(
    state: &SlotState,
    a1: AppId,
    t: f64,
    omega: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), RealtimeError> {
    let x = &state.allocated;
    let n = x.len();
    check_len("omega", omega, n)?;
    let a1 = a1.0;
    // a request that does not fit counts as exhausting its app; earlier
    // overage of a1 still feeds its consumption rate
    let rate = 60.0 * state.consumed[a1].max(x[a1]) / t;
    let mut g = state.consumed.clone();
    g[a1] = x[a1];

    let unused: f64 = x.iter().zip(&g).map(|(x, g)| (x - g).max(0.0)).sum();
    if unused <= TOL {
        return Err(RealtimeError::NoVolume);
    }

    let mut lo: Vec<f64> = x.iter().zip(&g).map(|(&x, &g)| (60.0 * g / t).min(x)).collect();
    let hi = x.clone();
    let mut slack: f64 = (0..n).filter(|&a| a != a1).map(|a| x[a] - lo[a]).sum();

    if slack <= TOL {
        let candidate = (0..n)
            .filter(|&a| a != a1 && g[a] < x[a])
            .min_by(|&p, &q| omega[p].total_cmp(&omega[q]).then(p.cmp(&q)));
        if let Some(a) = candidate {
            lo[a] = g[a];
            slack = x[a] - g[a];
        }
    }

    let mut hi = hi;
    hi[a1] = rate.max(g[a1] + slack);
    lo[a1] = rate.min(g[a1] + slack);
    Ok((lo, hi))
}

/// Redistributes `Σx` within `[lo, hi]` maximising `Σ ω·x′`: start from the
/// lower bounds and top up apps in order of decreasing ω (lower index first
/// on ties).
pub fn reallocate(x: &[f64], lo: &[f64], hi: &[f64], omega: &[f64]) -> Result<Vec<f64>, RealtimeError> {
    let n = x.len();
    check_len("lower bounds", lo, n)?;
    check_len("upper bounds", hi, n)?;
    check_len("omega", omega, n)?;
    let total: f64 = x.iter().sum();
    let floor: f64 = lo.iter().sum();
    let ceiling: f64 = hi.iter().sum();
    let scale = 1.0 + total.abs();
    if floor > total + TOL * scale || ceiling < total - TOL * scale {
        return Err(RealtimeError::InfeasibleRebounds(format!(
            "need Σlo ({floor}) <= Σx ({total}) <= Σhi ({ceiling})"
        )));
    }
    if let Some(a) = (0..n).find(|&a| lo[a] > hi[a] + TOL) {
        return Err(RealtimeError::InfeasibleRebounds(format!(
            "app {a}: lower bound {} exceeds upper bound {}",
            lo[a], hi[a]
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| omega[q].total_cmp(&omega[p]).then(p.cmp(&q)));

    let mut out = lo.to_vec();
    let mut left = total - floor;
    for &a in &order {
        if left <= 0.0 {
            break;
        }
        let add = (hi[a] - lo[a]).max(0.0).min(left);
        out[a] += add;
        left -= add;
    }
    // absorb rounding so the sum matches exactly where possible
    if let Some(&a) = order.first() {
        let drift = total - out.iter().sum::<f64>();
        out[a] += drift;
    }
    Ok(out)
}

/// Additional payment for one slot: real-time price times the consumption in
/// excess of the day-ahead purchase.
pub fn bill_slot(state: &SlotState, p_real: f64) -> f64 {
    let consumed: f64 = state.consumed.iter().sum();
    let bought: f64 = state.prebought.iter().sum();
    p_real * (consumed - bought).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub slot: usize,
    pub minute: f64,
    pub app: usize,
    pub volume: f64,
    pub kind: RequestKind,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayOutcome {
    pub consumed: TrafficProfile,
    pub final_allocation: TrafficProfile,
    pub overage: TrafficProfile,
    pub benefit: f64,
    /// Day-ahead payment for the scheduled profile, cents.
    pub prebought_payment: f64,
    /// Real-time payments per slot, cents.
    pub additional_payment: Vec<f64>,
    pub cost_efficiency: f64,
    pub admitted: usize,
    pub denied: usize,
    pub log: Vec<DecisionRecord>,
}

impl DayOutcome {
    pub fn total_payment(&self) -> f64 {
        self.prebought_payment + self.additional_payment.iter().sum::<f64>()
    }
}

/// Inputs shared by the managed and unmanaged simulations of one day.
#[derive(Debug, Clone, Copy)]
pub struct DayInputs<'a> {
    pub schedule: &'a TrafficProfile,
    pub weights: &'a BenefitWeights,
    pub day_ahead: &'a PriceCurve,
    pub realtime_prices: &'a [f64],
    pub events: &'a [RequestEvent],
}

impl DayInputs<'_> {
    fn validate(&self) -> Result<(), RealtimeError> {
        let k = self.schedule.num_slots();
        let n = self.schedule.num_apps();
        check_len("realtime prices", self.realtime_prices, k)?;
        check_len("day-ahead prices", &self.day_ahead.p, k)?;
        if self.weights.num_slots() != k || self.weights.num_apps() != n {
            return Err(DemandError::DimensionMismatch {
                what: "weights",
                expected: k * n,
                found: self.weights.num_slots() * self.weights.num_apps(),
            }
            .into());
        }
        for ev in self.events {
            ev.validate()?;
            if ev.slot >= k || ev.app.0 >= n {
                return Err(RealtimeError::InvalidEvent(format!(
                    "slot {} app {} outside the {k}×{n} schedule",
                    ev.slot, ev.app.0
                )));
            }
        }
        Ok(())
    }

    /// Events grouped by slot, each group ordered by minute. The sort is
    /// stable so simultaneous events keep their input order.
    fn by_slot(&self) -> Vec<Vec<&RequestEvent>> {
        let mut slots = vec![Vec::new(); self.schedule.num_slots()];
        for ev in self.events {
            slots[ev.slot].push(ev);
        }
        for s in &mut slots {
            s.sort_by(|p, q| p.minute.total_cmp(&q.minute));
        }
        slots
    }
}

/// Runs one day under management. Admission draws come from a generator
/// seeded with `seed`.
pub fn simulate_day(
    inputs: &DayInputs<'_>,
    policy: &RealtimePolicy,
    seed: u64,
    keep_log: bool,
) -> Result<DayOutcome, RealtimeError> {
    inputs.validate()?;
    policy.admission.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_day(inputs, keep_log, |state, ev, omega| {
        handle_request(state, ev, &mut rng, policy, omega)
    })
}

/// Runs one day admitting every request, on top of the same day-ahead
/// purchase.
pub fn simulate_unmanaged(inputs: &DayInputs<'_>, keep_log: bool) -> Result<DayOutcome, RealtimeError> {
    inputs.validate()?;
    run_day(inputs, keep_log, |state, ev, _| {
        state.elapsed_min = ev.minute;
        state.consume(ev.app.0, ev.volume);
        Ok(if state.overage[ev.app.0] > 0.0 {
            Decision::Overage
        } else {
            Decision::Admitted
        })
    })
}

fn run_day<F>(inputs: &DayInputs<'_>, keep_log: bool, mut step: F) -> Result<DayOutcome, RealtimeError>
where
    F: FnMut(&mut SlotState, &RequestEvent, &[f64]) -> Result<Decision, RealtimeError>,
{
    let k = inputs.schedule.num_slots();
    let n = inputs.schedule.num_apps();
    let mut consumed = TrafficProfile::zeros(k, n);
    let mut final_allocation = TrafficProfile::zeros(k, n);
    let mut overage = TrafficProfile::zeros(k, n);
    let mut additional_payment = vec![0.0; k];
    let mut admitted = 0;
    let mut denied = 0;
    let mut log = Vec::new();

    for (slot, events) in inputs.by_slot().into_iter().enumerate() {
        let p_real = inputs.realtime_prices[slot];
        let omega = &inputs.weights.omega[slot];
        let mut state = SlotState::new(slot, inputs.schedule.x[slot].clone(), p_real);
        for ev in events {
            let decision = step(&mut state, ev, omega)?;
            if decision.admitted() {
                admitted += 1;
            } else {
                denied += 1;
            }
            if keep_log {
                log.push(DecisionRecord {
                    slot,
                    minute: ev.minute,
                    app: ev.app.0,
                    volume: ev.volume,
                    kind: ev.kind,
                    decision,
                });
            }
        }
        additional_payment[slot] = bill_slot(&state, p_real);
        consumed.x[slot] = state.consumed;
        final_allocation.x[slot] = state.allocated;
        overage.x[slot] = state.overage;
    }

    let benefit = benefit_of(&consumed, inputs.weights)?;
    let prebought_payment = payment_of(inputs.schedule, inputs.day_ahead)?;
    let total = prebought_payment + additional_payment.iter().sum::<f64>();
    let cost_efficiency = if total > 0.0 { benefit / total } else { 0.0 };
    Ok(DayOutcome {
        consumed,
        final_allocation,
        overage,
        benefit,
        prebought_payment,
        additional_payment,
        cost_efficiency,
        admitted,
        denied,
        log,
    })
}
