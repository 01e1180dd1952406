//! Day-ahead profile scheduling.
//!
//! The cost-efficiency problem `max Σωx / Σp·x` over the consumption bounds is
//! shifted by the lower bounds (`X⋆ = X − b`) into the inequality form used by
//! [`crate::fracprog`]. Variables are ordered app-major, `index = a·K + k`.
//! Constraint rows come in fixed groups:
//!
//! 1. `NK` rows `x⋆ <= B_k^a − b_k^a`
//! 2. `N` rows `−Σ_k x⋆ <= Σ_k b_k^a − b^a` (per-app minimum)
//! 3. `K` rows `Σ_a x⋆ <= B_k − Σ_a b_k^a` (device cap per slot)
//! 4. `N` rows `Σ_k x⋆ <= B^a − Σ_k b_k^a` (per-app maximum), omitted when
//!    `strict_paper_matrix` is set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{
    benefit_of, check_len, BenefitWeights, ConsumptionBounds, DemandError, TrafficProfile,
};
use crate::fracprog::{lfp_solve, lp_solve, LfpError, LfpProblem, LpError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),
    #[error("price curve: {0}")]
    InvalidPrices(String),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Solver(#[from] LfpError),
}

impl From<LpError> for ScheduleError {
    fn from(e: LpError) -> Self {
        ScheduleError::Solver(LfpError::Lp(e))
    }
}

/// Day-ahead unit prices in cents per MB, one per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceCurve {
    pub p: Vec<f64>,
}

impl PriceCurve {
    pub fn new(p: Vec<f64>) -> Result<Self, ScheduleError> {
        if p.is_empty() {
            return Err(ScheduleError::InvalidPrices("no slots".into()));
        }
        if let Some((k, v)) = p.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
            return Err(ScheduleError::InvalidPrices(format!(
                "slot {k} has non-positive price {v}"
            )));
        }
        Ok(PriceCurve { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulingProblem {
    pub weights: BenefitWeights,
    pub prices: PriceCurve,
    pub bounds: ConsumptionBounds,
    /// Drop the per-app maximum rows.
    #[serde(default)]
    pub strict_paper_matrix: bool,
}

impl SchedulingProblem {
    pub fn new(
        weights: BenefitWeights,
        prices: PriceCurve,
        bounds: ConsumptionBounds,
    ) -> Result<Self, ScheduleError> {
        let sp = SchedulingProblem {
            weights,
            prices,
            bounds,
            strict_paper_matrix: false,
        };
        sp.validate()?;
        Ok(sp)
    }

    pub fn num_slots(&self) -> usize {
        self.bounds.num_slots()
    }

    pub fn num_apps(&self) -> usize {
        self.bounds.num_apps()
    }

    /// Shape checks plus the necessary feasibility conditions, reporting the
    /// first violated one.
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let b = &self.bounds;
        b.validate()?;
        let k = b.num_slots();
        let n = b.num_apps();
        if k == 0 || n == 0 {
            return Err(DemandError::EmptyHistory.into());
        }
        if self.weights.num_slots() != k || self.weights.num_apps() != n {
            return Err(DemandError::DimensionMismatch {
                what: "weights",
                expected: k * n,
                found: self.weights.num_slots() * self.weights.num_apps(),
            }
            .into());
        }
        check_len("prices", &self.prices.p, k)?;

        let tol = 1e-9;
        for slot in 0..k {
            for a in 0..n {
                let (lo, hi) = (b.b_slot[slot][a], b.upper_slot[slot][a]);
                if lo < 0.0 || lo > hi + tol {
                    return Err(ScheduleError::InfeasibleBounds(format!(
                        "slot {slot}, app {a}: need 0 <= b ({lo}) <= B ({hi})"
                    )));
                }
            }
            let floor: f64 = b.b_slot[slot].iter().sum();
            if floor > b.upper_slot_total[slot] + tol {
                return Err(ScheduleError::InfeasibleBounds(format!(
                    "slot {slot}: sum of app minimums {floor} exceeds slot cap {}",
                    b.upper_slot_total[slot]
                )));
            }
        }
        let slot_min = b.slot_minimum_per_app();
        for a in 0..n {
            let reachable: f64 = b.upper_slot.iter().map(|row| row[a]).sum();
            if b.b_app[a] + tol < slot_min[a] {
                return Err(ScheduleError::InfeasibleBounds(format!(
                    "app {a}: cycle minimum {} is below its slot minimums {}",
                    b.b_app[a], slot_min[a]
                )));
            }
            if b.b_app[a] > b.upper_app[a] + tol {
                return Err(ScheduleError::InfeasibleBounds(format!(
                    "app {a}: cycle minimum {} exceeds cycle maximum {}",
                    b.b_app[a], b.upper_app[a]
                )));
            }
            if b.b_app[a] > reachable + tol {
                return Err(ScheduleError::InfeasibleBounds(format!(
                    "app {a}: cycle minimum {} exceeds sum of slot maximums {reachable}",
                    b.b_app[a]
                )));
            }
        }
        Ok(())
    }

    /// `V / C` for a profile under this problem's weights and prices.
    pub fn evaluate(&self, profile: &TrafficProfile) -> Result<(f64, f64, f64), ScheduleError> {
        let benefit = benefit_of(profile, &self.weights)?;
        let payment = payment_of(profile, &self.prices)?;
        Ok((benefit, payment, benefit / payment))
    }

    /// Whether `profile` satisfies every bound within `tol`.
    pub fn is_feasible(&self, profile: &TrafficProfile, tol: f64) -> bool {
        let b = &self.bounds;
        let cells_ok = profile.x.iter().enumerate().all(|(k, row)| {
            row.iter()
                .enumerate()
                .all(|(a, &v)| v >= b.b_slot[k][a] - tol && v <= b.upper_slot[k][a] + tol)
        });
        let slots_ok = profile
            .slot_totals()
            .iter()
            .zip(&b.upper_slot_total)
            .all(|(t, cap)| *t <= cap + tol);
        let apps = profile.app_totals();
        let mins_ok = apps.iter().zip(&b.b_app).all(|(t, lo)| *t >= lo - tol);
        let maxs_ok = self.strict_paper_matrix
            || apps.iter().zip(&b.upper_app).all(|(t, hi)| *t <= hi + tol);
        cells_ok && slots_ok && mins_ok && maxs_ok
    }
}

/// The shifted problem together with the shift needed to map back.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub lfp: LfpProblem,
    /// Lower bounds `b`, flattened app-major.
    pub shift: Vec<f64>,
    pub num_slots: usize,
    pub num_apps: usize,
}

impl StandardForm {
    /// `X = X⋆ + b` as a K×N profile.
    pub fn to_profile(&self, shifted: &[f64]) -> TrafficProfile {
        let k = self.num_slots;
        let mut profile = TrafficProfile::zeros(k, self.num_apps);
        for (j, (&xs, &b)) in shifted.iter().zip(&self.shift).enumerate() {
            profile.x[j % k][j / k] = xs + b;
        }
        profile
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledProfile {
    pub profile: TrafficProfile,
    pub benefit: f64,
    /// Cents.
    pub payment: f64,
    pub cost_efficiency: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

pub fn to_standard_form(sp: &SchedulingProblem) -> Result<StandardForm, ScheduleError> {
    sp.validate()?;
    let k = sp.num_slots();
    let n = sp.num_apps();
    let nk = n * k;
    let b = &sp.bounds;
    let idx = |a: usize, slot: usize| a * k + slot;

    let mut shift = vec![0.0; nk];
    let mut num = vec![0.0; nk];
    let mut den = vec![0.0; nk];
    for a in 0..n {
        for slot in 0..k {
            shift[idx(a, slot)] = b.b_slot[slot][a];
            num[idx(a, slot)] = sp.weights.omega[slot][a];
            den[idx(a, slot)] = sp.prices.p[slot];
        }
    }
    let num_offset = num.iter().zip(&shift).map(|(w, s)| w * s).sum();
    let den_offset = den.iter().zip(&shift).map(|(p, s)| p * s).sum();

    let groups = if sp.strict_paper_matrix { 3 } else { 4 };
    let rows = nk + n + k + if groups == 4 { n } else { 0 };
    let mut constraints = Vec::with_capacity(rows);
    let mut rhs = Vec::with_capacity(rows);

    for a in 0..n {
        for slot in 0..k {
            let mut row = vec![0.0; nk];
            row[idx(a, slot)] = 1.0;
            constraints.push(row);
            rhs.push(b.upper_slot[slot][a] - b.b_slot[slot][a]);
        }
    }
    let slot_min = b.slot_minimum_per_app();
    for a in 0..n {
        let mut row = vec![0.0; nk];
        for slot in 0..k {
            row[idx(a, slot)] = -1.0;
        }
        constraints.push(row);
        rhs.push(slot_min[a] - b.b_app[a]);
    }
    for slot in 0..k {
        let mut row = vec![0.0; nk];
        for a in 0..n {
            row[idx(a, slot)] = 1.0;
        }
        constraints.push(row);
        rhs.push(b.upper_slot_total[slot] - b.b_slot[slot].iter().sum::<f64>());
    }
    if groups == 4 {
        for a in 0..n {
            let mut row = vec![0.0; nk];
            for slot in 0..k {
                row[idx(a, slot)] = 1.0;
            }
            constraints.push(row);
            rhs.push(b.upper_app[a] - slot_min[a]);
        }
    }

    Ok(StandardForm {
        lfp: LfpProblem {
            num,
            num_offset,
            den,
            den_offset,
            constraints,
            rhs,
        },
        shift,
        num_slots: k,
        num_apps: n,
    })
}

/// The most cost-efficient feasible profile.
pub fn schedule(sp: &SchedulingProblem) -> Result<ScheduledProfile, ScheduleError> {
    let form = to_standard_form(sp)?;
    let sol = lfp_solve(&form.lfp)?;
    let profile = form.to_profile(&sol.x_opt);
    let (benefit, payment, cost_efficiency) = sp.evaluate(&profile)?;
    Ok(ScheduledProfile {
        profile,
        benefit,
        payment,
        cost_efficiency,
        iterations: sol.iterations,
        trace: sol.trace,
    })
}

/// Profit-maximisation baseline: `max V − η·C` over the same bounds.
pub fn schedule_pm(sp: &SchedulingProblem, eta: f64) -> Result<ScheduledProfile, ScheduleError> {
    if !(eta >= 0.0) {
        return Err(ScheduleError::InvalidPrices(format!(
            "eta must be non-negative, got {eta}"
        )));
    }
    let form = to_standard_form(sp)?;
    let objective: Vec<f64> = form
        .lfp
        .num
        .iter()
        .zip(&form.lfp.den)
        .map(|(w, p)| w - eta * p)
        .collect();
    let x = lp_solve(&form.lfp.as_lp(objective))?;
    let profile = form.to_profile(&x);
    let (benefit, payment, cost_efficiency) = sp.evaluate(&profile)?;
    Ok(ScheduledProfile {
        profile,
        benefit,
        payment,
        cost_efficiency,
        iterations: 0,
        trace: Vec::new(),
    })
}

/// `Σ_k p_k Σ_a x_k^a`, in cents.
pub fn payment_of(profile: &TrafficProfile, prices: &PriceCurve) -> Result<f64, DemandError> {
    check_len("prices", &prices.p, profile.num_slots())?;
    Ok(profile
        .slot_totals()
        .iter()
        .zip(&prices.p)
        .map(|(x, p)| x * p)
        .sum())
}

/// How per-app cycle totals are constrained relative to a reference day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DemandMode {
    /// `b^a = B^a =` the reference day's app total.
    Fixed,
    /// `b^a = (1 − margin)·x^a`, `B^a = (1 + margin)·x^a`.
    Elastic { margin: f64 },
}

/// Applies a [`DemandMode`] to default bounds. App minimums never drop below
/// the sum of slot minimums.
pub fn apply_demand_mode(
    bounds: &mut ConsumptionBounds,
    reference: &TrafficProfile,
    mode: DemandMode,
) -> Result<(), DemandError> {
    let totals = reference.app_totals();
    check_len("reference apps", &totals, bounds.num_apps())?;
    let floor = bounds.slot_minimum_per_app();
    for (a, &x) in totals.iter().enumerate() {
        let (lo, hi) = match mode {
            DemandMode::Fixed => (x, x),
            DemandMode::Elastic { margin } => ((1.0 - margin) * x, (1.0 + margin) * x),
        };
        bounds.upper_app[a] = hi.max(floor[a]);
        bounds.b_app[a] = lo.max(floor[a]).min(bounds.upper_app[a]);
    }
    Ok(())
}

/// Fixes the given apps to their reference allocation.
pub fn pin_apps(
    bounds: &mut ConsumptionBounds,
    reference: &TrafficProfile,
    apps: &[usize],
) -> Result<(), DemandError> {
    let totals = reference.app_totals();
    check_len("reference apps", &totals, bounds.num_apps())?;
    for &a in apps {
        for slot in 0..bounds.num_slots() {
            bounds.b_slot[slot][a] = reference.x[slot][a];
            bounds.upper_slot[slot][a] = reference.x[slot][a];
        }
        bounds.b_app[a] = totals[a];
        bounds.upper_app[a] = totals[a];
    }
    Ok(())
}
