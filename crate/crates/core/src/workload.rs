//! Seeded synthetic workload: Poisson access counts per slot, log-normal
//! per-access volumes, uniform arrival minutes and real-time price draws.
//!
//! Every random stream comes from ChaCha8 seeded with the scenario seed and a
//! fixed stream number, so results depend only on the seed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dayahead::PriceCurve;
use crate::demand::{AccessHistory, AppId, OperationCycle, TrafficProfile};
use crate::realtime::{RequestEvent, RequestKind};

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), stream-separated";

pub const KB_PER_MB: f64 = 1024.0;

/// Stream numbers for independent draws from one seed.
pub mod stream {
    pub const RATES: u64 = 1;
    pub const REALTIME_PRICES: u64 = 2;
    pub const ADMISSION: u64 = 3;
    pub const JITTER: u64 = 4;
    pub const DAYS: u64 = 1000;
    pub const RUNS: u64 = 1 << 32;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("mean and variance must be positive (mean {mean}, variance {variance})")]
    NonpositiveMoments { mean: f64, variance: f64 },
    #[error("no application specs given")]
    NoApps,
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

/// A generator whose output depends only on `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A 64-bit seed derived from `(seed, stream)`.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    rng_for(seed, stream).next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppTrafficSpec {
    /// Range of the mean foreground accesses per slot.
    pub lambda_fg_range: (f64, f64),
    /// Range of the mean background accesses per slot.
    pub lambda_bg_range: (f64, f64),
    /// Mean volume per access, KB.
    pub mean_volume_kb: f64,
    /// Variance of the volume per access, KB².
    pub var_volume: f64,
}

impl AppTrafficSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        for (what, (lo, hi)) in [("lambda_fg_range", self.lambda_fg_range), ("lambda_bg_range", self.lambda_bg_range)] {
            if !(lo >= 0.0 && hi > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(WorkloadError::InvalidSpec(format!(
                    "{what} must satisfy 0 <= lo <= hi, hi > 0; got ({lo}, {hi})"
                )));
            }
        }
        lognormal_params(self.mean_volume_kb, self.var_volume)?;
        Ok(())
    }

    /// The five applications of the reference settings table.
    pub fn table_presets() -> Vec<AppTrafficSpec> {
        let spec = |fg: (f64, f64), bg: (f64, f64), mean: f64, var: f64| AppTrafficSpec {
            lambda_fg_range: fg,
            lambda_bg_range: bg,
            mean_volume_kb: mean,
            var_volume: var,
        };
        vec![
            spec((3.0, 9.0), (3.0, 30.0), 100.0, 1e4),
            spec((0.0, 2.0), (0.0, 8.0), 50.0, 900.0),
            spec((0.0, 1.0), (0.0, 4.0), 200.0, 1e4),
            spec((0.0, 0.15), (0.0, 0.6), 10000.0, 9e6),
            spec((0.0, 2.0), (0.0, 8.0), 200.0, 4e4),
        ]
    }
}

/// `(μ, σ²)` of the log-normal with mean `mean` and variance `variance`.
pub fn lognormal_params(mean: f64, variance: f64) -> Result<(f64, f64), WorkloadError> {
    if !(mean > 0.0 && variance > 0.0 && mean.is_finite() && variance.is_finite()) {
        return Err(WorkloadError::NonpositiveMoments { mean, variance });
    }
    let sigma2 = (variance / (mean * mean)).ln_1p();
    Ok((mean.ln() - sigma2 / 2.0, sigma2))
}

/// Per-slot arrival rates, K×N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalRates {
    pub fg: Vec<Vec<f64>>,
    pub bg: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadModel {
    pub specs: Vec<AppTrafficSpec>,
    pub cycle: OperationCycle,
    /// Background rate as a multiple of the foreground rate. `None` draws the
    /// background rate from its own range instead.
    pub bg_ratio: Option<f64>,
    /// Per-slot rate multipliers; flat when absent.
    pub shape: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedDay {
    pub history: AccessHistory,
    /// Ordered by slot, then minute.
    pub events: Vec<RequestEvent>,
    pub profile: TrafficProfile,
}

fn draw_in(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    // (lo, hi]: a zero lower bound is open so the rate stays positive
    let u = 1.0 - rng.random::<f64>();
    lo + (hi - lo) * u
}

impl WorkloadModel {
    pub fn new(specs: Vec<AppTrafficSpec>, cycle: OperationCycle) -> Self {
        WorkloadModel {
            specs,
            cycle,
            bg_ratio: Some(5.0),
            shape: None,
        }
    }

    pub fn num_apps(&self) -> usize {
        self.specs.len()
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.specs.is_empty() {
            return Err(WorkloadError::NoApps);
        }
        if self.cycle.num_slots == 0 || self.cycle.slot_minutes == 0 {
            return Err(WorkloadError::InvalidSpec("cycle must have at least one slot of positive length".into()));
        }
        for (a, s) in self.specs.iter().enumerate() {
            s.validate()
                .map_err(|e| WorkloadError::InvalidSpec(format!("app {a}: {e}")))?;
        }
        if let Some(r) = self.bg_ratio {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(WorkloadError::InvalidSpec(format!("bg_ratio must be non-negative, got {r}")));
            }
        }
        if let Some(shape) = &self.shape {
            if shape.len() != self.cycle.num_slots {
                return Err(WorkloadError::InvalidSpec(format!(
                    "shape has {} entries for {} slots",
                    shape.len(),
                    self.cycle.num_slots
                )));
            }
            if shape.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
                return Err(WorkloadError::InvalidSpec("shape multipliers must be non-negative".into()));
            }
        }
        Ok(())
    }

    /// Draws one rate per slot and app, held fixed for the whole scenario.
    pub fn draw_rates(&self, seed: u64) -> Result<ArrivalRates, WorkloadError> {
        self.validate()?;
        let mut rng = rng_for(seed, stream::RATES);
        let k = self.cycle.num_slots;
        let n = self.num_apps();
        let mut fg = vec![vec![0.0; n]; k];
        let mut bg = vec![vec![0.0; n]; k];
        for slot in 0..k {
            let m = self.shape.as_ref().map_or(1.0, |s| s[slot]);
            for (a, spec) in self.specs.iter().enumerate() {
                let f = draw_in(&mut rng, spec.lambda_fg_range);
                let b = draw_in(&mut rng, spec.lambda_bg_range);
                fg[slot][a] = m * f;
                bg[slot][a] = m * self.bg_ratio.map_or(b, |r| r * f);
            }
        }
        Ok(ArrivalRates { fg, bg })
    }

    /// One day of traffic at the given rates.
    pub fn generate_day(&self, rates: &ArrivalRates, seed: u64) -> Result<GeneratedDay, WorkloadError> {
        self.validate()?;
        let k = self.cycle.num_slots;
        let n = self.num_apps();
        let minutes = f64::from(self.cycle.slot_minutes);
        let volumes = self
            .specs
            .iter()
            .map(|s| {
                let (mu, sigma2) = lognormal_params(s.mean_volume_kb, s.var_volume)?;
                LogNormal::new(mu, sigma2.sqrt()).map_err(|e| WorkloadError::InvalidSpec(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tau = vec![vec![0u32; n]; k];
        let mut tau_bg = vec![vec![0u32; n]; k];
        let mut events = Vec::new();
        for slot in 0..k {
            let mut slot_events = Vec::new();
            for a in 0..n {
                for (kind, lambda) in [
                    (RequestKind::Foreground, rates.fg[slot][a]),
                    (RequestKind::Background, rates.bg[slot][a]),
                ] {
                    let count = poisson(&mut rng, lambda)?;
                    match kind {
                        RequestKind::Foreground => tau[slot][a] = count,
                        RequestKind::Background => tau_bg[slot][a] = count,
                    }
                    for _ in 0..count {
                        let kb: f64 = volumes[a].sample(&mut rng);
                        slot_events.push(RequestEvent {
                            minute: rng.random_range(0.0..minutes),
                            slot,
                            app: AppId(a),
                            volume: kb / KB_PER_MB,
                            kind,
                        });
                    }
                }
            }
            slot_events.sort_by(|p, q| p.minute.total_cmp(&q.minute));
            events.extend(slot_events);
        }

        let mut profile = TrafficProfile::zeros(k, n);
        for ev in &events {
            profile.x[ev.slot][ev.app.0] += ev.volume;
        }
        Ok(GeneratedDay {
            history: AccessHistory { tau, tau_bg },
            events,
            profile,
        })
    }

    /// Seven days at the same rates with distinct derived seeds; the last
    /// element is the most recent day.
    pub fn generate_week(&self, rates: &ArrivalRates, seed: u64) -> Result<Vec<GeneratedDay>, WorkloadError> {
        self.generate_days(rates, seed, 0..7)
    }

    /// Days `range` of the scenario, each with its own derived seed.
    pub fn generate_days(
        &self,
        rates: &ArrivalRates,
        seed: u64,
        range: std::ops::Range<u64>,
    ) -> Result<Vec<GeneratedDay>, WorkloadError> {
        range
            .map(|d| self.generate_day(rates, sub_seed(seed, stream::DAYS + d)))
            .collect()
    }
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> Result<u32, WorkloadError> {
    if lambda <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(lambda).map_err(|e| WorkloadError::InvalidSpec(e.to_string()))?;
    Ok(d.sample(rng) as u32)
}

/// Convenience wrapper: draws rates and one day from a single seed.
pub fn generate_day(
    specs: &[AppTrafficSpec],
    cycle: OperationCycle,
    seed: u64,
) -> Result<GeneratedDay, WorkloadError> {
    let model = WorkloadModel::new(specs.to_vec(), cycle);
    let rates = model.draw_rates(seed)?;
    model.generate_day(&rates, sub_seed(seed, stream::DAYS))
}

/// Convenience wrapper: draws rates and seven days from a single seed.
pub fn generate_week(
    specs: &[AppTrafficSpec],
    cycle: OperationCycle,
    seed: u64,
) -> Result<Vec<GeneratedDay>, WorkloadError> {
    let model = WorkloadModel::new(specs.to_vec(), cycle);
    let rates = model.draw_rates(seed)?;
    model.generate_week(&rates, seed)
}

/// Real-time prices: each slot's day-ahead price times an independent
/// `Uniform[1.0, 1.1]` factor.
pub fn realtime_prices(day_ahead: &PriceCurve, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, stream::REALTIME_PRICES);
    day_ahead
        .p
        .iter()
        .map(|p| p * rng.random_range(1.0..=1.1))
        .collect()
}

/// `count` specs cycling through `base`, with rates and volumes scaled by
/// factors drawn from `[1 − jitter, 1 + jitter]`.
pub fn jittered_specs(base: &[AppTrafficSpec], count: usize, jitter: f64, seed: u64) -> Vec<AppTrafficSpec> {
    let mut rng = rng_for(seed, stream::JITTER);
    (0..count)
        .map(|i| {
            let mut s = base[i % base.len()].clone();
            if i >= base.len() && jitter > 0.0 {
                let mut f = || rng.random_range(1.0 - jitter..=1.0 + jitter);
                let (r1, r2, r3) = (f(), f(), f());
                s.lambda_fg_range = (s.lambda_fg_range.0 * r1, s.lambda_fg_range.1 * r1);
                s.lambda_bg_range = (s.lambda_bg_range.0 * r2, s.lambda_bg_range.1 * r2);
                s.mean_volume_kb *= r3;
                s.var_volume *= r3 * r3;
            }
            s
        })
        .collect()
}
