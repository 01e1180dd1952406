//! Consumer model: per-app, per-slot volumes, access statistics, benefit
//! weights and default consumption bounds derived from recent history.
//!
//! All K×N matrices are stored slot-major: `m[k][a]` is slot `k`, app `a`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DemandError {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("history contains no days")]
    EmptyHistory,
    #[error("{0}")]
    InvalidParameter(String),
}

/// Zero-based application index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AppId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationCycle {
    pub num_slots: usize,
    pub slot_minutes: u32,
}

impl Default for OperationCycle {
    fn default() -> Self {
        OperationCycle {
            num_slots: 24,
            slot_minutes: 60,
        }
    }
}

/// Foreground (`tau`) and background (`tau_bg`) access counts, K×N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessHistory {
    pub tau: Vec<Vec<u32>>,
    pub tau_bg: Vec<Vec<u32>>,
}

impl AccessHistory {
    pub fn num_slots(&self) -> usize {
        self.tau.len()
    }

    pub fn num_apps(&self) -> usize {
        self.tau.first().map_or(0, Vec::len)
    }

    /// Foreground accesses of one app across the cycle, as reals.
    pub fn app_row(&self, app: usize) -> Vec<f64> {
        self.tau.iter().map(|row| f64::from(row[app])).collect()
    }

    pub fn app_totals(&self) -> Vec<f64> {
        (0..self.num_apps())
            .map(|a| self.tau.iter().map(|row| f64::from(row[a])).sum())
            .collect()
    }
}

/// Allocated or observed data volumes in MB, K×N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrafficProfile {
    pub x: Vec<Vec<f64>>,
}

impl TrafficProfile {
    pub fn zeros(num_slots: usize, num_apps: usize) -> Self {
        TrafficProfile {
            x: vec![vec![0.0; num_apps]; num_slots],
        }
    }

    pub fn num_slots(&self) -> usize {
        self.x.len()
    }

    pub fn num_apps(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn slot_totals(&self) -> Vec<f64> {
        self.x.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn app_totals(&self) -> Vec<f64> {
        (0..self.num_apps())
            .map(|a| self.x.iter().map(|row| row[a]).sum())
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.x.iter().flatten().sum()
    }

    fn check_shape(&self, k: usize, n: usize) -> Result<(), DemandError> {
        check_matrix("profile", &self.x, k, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitWeights {
    /// ω, K×N.
    pub omega: Vec<Vec<f64>>,
    pub iota_app: Vec<f64>,
    pub iota_slot: Vec<Vec<f64>>,
    pub delta: f64,
    pub delta_prime: f64,
}

impl BenefitWeights {
    /// Weights given directly, bypassing the access-frequency derivation.
    pub fn from_omega(omega: Vec<Vec<f64>>) -> Result<Self, DemandError> {
        let k = omega.len();
        let n = omega.first().map_or(0, Vec::len);
        check_matrix("omega", &omega, k, n)?;
        if omega.iter().flatten().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(DemandError::InvalidParameter(
                "omega entries must lie in (0, 1]".into(),
            ));
        }
        Ok(BenefitWeights {
            iota_app: vec![1.0; n],
            iota_slot: omega.clone(),
            omega,
            delta: 0.0,
            delta_prime: 0.0,
        })
    }

    pub fn num_slots(&self) -> usize {
        self.omega.len()
    }

    pub fn num_apps(&self) -> usize {
        self.omega.first().map_or(0, Vec::len)
    }
}

/// Lower and upper consumption limits in MB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionBounds {
    /// Per-cell minimum, K×N.
    pub b_slot: Vec<Vec<f64>>,
    /// Per-cell maximum, K×N.
    pub upper_slot: Vec<Vec<f64>>,
    /// Device total per slot, K.
    pub upper_slot_total: Vec<f64>,
    /// Per-app minimum over the cycle, N.
    pub b_app: Vec<f64>,
    /// Per-app maximum over the cycle, N.
    pub upper_app: Vec<f64>,
}

impl ConsumptionBounds {
    pub fn num_slots(&self) -> usize {
        self.b_slot.len()
    }

    pub fn num_apps(&self) -> usize {
        self.b_slot.first().map_or(0, Vec::len)
    }

    /// `Σ_k b_slot[k][a]` for each app.
    pub fn slot_minimum_per_app(&self) -> Vec<f64> {
        (0..self.num_apps())
            .map(|a| self.b_slot.iter().map(|row| row[a]).sum())
            .collect()
    }

    /// Sets the per-cycle app minimums, clamped into `[Σ_k b_k^a, B^a]`.
    pub fn set_app_minimums(&mut self, minimums: &[f64]) -> Result<(), DemandError> {
        if minimums.len() != self.num_apps() {
            return Err(DemandError::DimensionMismatch {
                what: "app minimums",
                expected: self.num_apps(),
                found: minimums.len(),
            });
        }
        let floor = self.slot_minimum_per_app();
        for (a, &m) in minimums.iter().enumerate() {
            self.b_app[a] = m.max(floor[a]).min(self.upper_app[a]);
        }
        Ok(())
    }

    /// Checks shapes and the orderings every feasible allocation needs.
    pub fn validate(&self) -> Result<(), DemandError> {
        let k = self.num_slots();
        let n = self.num_apps();
        check_matrix("b_slot", &self.b_slot, k, n)?;
        check_matrix("upper_slot", &self.upper_slot, k, n)?;
        check_len("upper_slot_total", &self.upper_slot_total, k)?;
        check_len("b_app", &self.b_app, n)?;
        check_len("upper_app", &self.upper_app, n)?;
        Ok(())
    }
}

/// ι for a row of access counts: `δ + (1−δ)(τ/τ̄)^e`, with
/// `e = ((τ̄−τ̲)²/12) / D(τ)` and `D` the population variance.
///
/// A row whose entries are all equal maps to 1 everywhere, a zero entry in
/// a non-constant row maps to the floor.
pub fn iota(values: &[f64], floor: f64) -> Vec<f64> {
    let len = values.len() as f64;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / len;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len;

    if variance == 0.0 || max == min {
        return vec![1.0; values.len()];
    }
    if max <= 0.0 {
        return vec![floor; values.len()];
    }
    let exponent = ((max - min).powi(2) / 12.0) / variance;
    values
        .iter()
        .map(|&v| iota_value(v / max, exponent, floor))
        .collect()
}

/// `floor + (1 − floor)·ratio^exponent`.
pub fn iota_value(ratio: f64, exponent: f64, floor: f64) -> f64 {
    floor + (1.0 - floor) * ratio.powf(exponent)
}

/// Per-slot ι for one app over its K access counts.
pub fn iota_slot(tau_row: &[f64], delta: f64) -> Vec<f64> {
    iota(tau_row, delta)
}

/// Per-app ι over the N cycle totals.
pub fn iota_app(tau_totals: &[f64], delta_prime: f64) -> Vec<f64> {
    iota(tau_totals, delta_prime)
}

pub fn benefit_weights(
    history: &AccessHistory,
    delta: f64,
    delta_prime: f64,
) -> Result<BenefitWeights, DemandError> {
    for (name, v) in [("delta", delta), ("delta_prime", delta_prime)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(DemandError::InvalidParameter(format!(
                "{name} must lie in (0, 1), got {v}"
            )));
        }
    }
    let k = history.num_slots();
    let n = history.num_apps();
    if k == 0 || n == 0 {
        return Err(DemandError::EmptyHistory);
    }
    check_matrix_u32("tau", &history.tau, k, n)?;

    let app = iota_app(&history.app_totals(), delta_prime);
    let per_app: Vec<Vec<f64>> = (0..n)
        .map(|a| iota_slot(&history.app_row(a), delta))
        .collect();
    let iota_slot: Vec<Vec<f64>> = (0..k)
        .map(|slot| (0..n).map(|a| per_app[a][slot]).collect())
        .collect();
    let omega = iota_slot
        .iter()
        .map(|row| row.iter().zip(&app).map(|(s, a)| s * a).collect())
        .collect();

    Ok(BenefitWeights {
        omega,
        iota_app: app,
        iota_slot,
        delta,
        delta_prime,
    })
}

/// Default bounds from recent daily profiles: cell-wise min and max, the
/// largest daily slot total and the largest daily app total. App minimums
/// start at `Σ_k b_k^a`.
pub fn default_bounds(days: &[TrafficProfile]) -> Result<ConsumptionBounds, DemandError> {
    let first = days.first().ok_or(DemandError::EmptyHistory)?;
    let k = first.num_slots();
    let n = first.num_apps();
    for day in days {
        day.check_shape(k, n)?;
    }

    let mut b_slot = first.x.clone();
    let mut upper_slot = first.x.clone();
    let mut upper_slot_total = vec![f64::NEG_INFINITY; k];
    let mut upper_app = vec![f64::NEG_INFINITY; n];
    for day in days {
        for slot in 0..k {
            for a in 0..n {
                let v = day.x[slot][a];
                b_slot[slot][a] = b_slot[slot][a].min(v);
                upper_slot[slot][a] = upper_slot[slot][a].max(v);
            }
        }
        for (u, t) in upper_slot_total.iter_mut().zip(day.slot_totals()) {
            *u = u.max(t);
        }
        for (u, t) in upper_app.iter_mut().zip(day.app_totals()) {
            *u = u.max(t);
        }
    }

    let mut bounds = ConsumptionBounds {
        b_slot,
        upper_slot,
        upper_slot_total,
        b_app: vec![0.0; n],
        upper_app,
    };
    bounds.b_app = bounds.slot_minimum_per_app();
    Ok(bounds)
}

/// `Σ_a Σ_k ω_k^a x_k^a`.
pub fn benefit_of(profile: &TrafficProfile, weights: &BenefitWeights) -> Result<f64, DemandError> {
    profile.check_shape(weights.num_slots(), weights.num_apps())?;
    Ok(profile
        .x
        .iter()
        .zip(&weights.omega)
        .flat_map(|(xs, ws)| xs.iter().zip(ws).map(|(x, w)| x * w))
        .sum())
}

pub(crate) fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<(), DemandError> {
    if v.len() != expected {
        return Err(DemandError::DimensionMismatch {
            what,
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_matrix(
    what: &'static str,
    m: &[Vec<f64>],
    rows: usize,
    cols: usize,
) -> Result<(), DemandError> {
    if m.len() != rows {
        return Err(DemandError::DimensionMismatch {
            what,
            expected: rows,
            found: m.len(),
        });
    }
    for row in m {
        if row.len() != cols {
            return Err(DemandError::DimensionMismatch {
                what,
                expected: cols,
                found: row.len(),
            });
        }
    }
    Ok(())
}

fn check_matrix_u32(
    what: &'static str,
    m: &[Vec<u32>],
    rows: usize,
    cols: usize,
) -> Result<(), DemandError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(DemandError::DimensionMismatch {
            what,
            expected: cols,
            found: m.iter().map(Vec::len).find(|&l| l != cols).unwrap_or(m.len()),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // population variance 8/6 equals (4-0)^2/12, so the exponent is exactly 1
    const UNIT_EXPONENT_ROW: [f64; 6] = [0.0, 2.0, 2.0, 2.0, 2.0, 4.0];

    #[test]
    fn iota_slot_is_one_at_the_maximum() {
        let row = [1.0, 7.0, 3.0, 0.0, 7.0];
        let out = iota_slot(&row, 0.1);
        assert_eq!(out[1], 1.0);
        assert_eq!(out[4], 1.0);
    }

    #[test]
    fn iota_of_constant_row_is_one() {
        assert_eq!(iota_slot(&[3.0; 5], 0.1), vec![1.0; 5]);
        assert_eq!(iota_slot(&[0.0; 5], 0.1), vec![1.0; 5]);
    }

    #[test]
    fn iota_with_unit_exponent_is_linear() {
        let out = iota_slot(&UNIT_EXPONENT_ROW, 0.1);
        assert!((out[1] - 0.55).abs() < 1e-12);
        assert!((out[0] - 0.1).abs() < 1e-12);
        let app = iota_app(&UNIT_EXPONENT_ROW, 0.5);
        assert!((app[2] - 0.75).abs() < 1e-12);
        assert_eq!(app[5], 1.0);
    }

    #[test]
    fn iota_app_max_and_equal_totals() {
        assert_eq!(iota_app(&[5.0, 20.0, 1.0], 0.5)[1], 1.0);
        assert_eq!(iota_app(&[4.0, 4.0], 0.5), vec![1.0, 1.0]);
    }

    fn history(tau: Vec<Vec<u32>>) -> AccessHistory {
        let tau_bg = tau.iter().map(|r| vec![0; r.len()]).collect();
        AccessHistory { tau, tau_bg }
    }

    #[test]
    fn weights_are_products_of_iota() {
        // app 0 follows the unit-exponent row, app 1 is constant
        let tau: Vec<Vec<u32>> = UNIT_EXPONENT_ROW
            .iter()
            .map(|&v| vec![v as u32, 2])
            .collect();
        let w = benefit_weights(&history(tau), 0.1, 0.5).unwrap();
        // totals 12 and 12 -> iota_app = 1 for both
        assert_eq!(w.iota_app, vec![1.0, 1.0]);
        assert!((w.omega[1][0] - 0.55).abs() < 1e-12);
        assert_eq!(w.omega[1][1], 1.0);
        for (k, row) in w.omega.iter().enumerate() {
            for (a, &v) in row.iter().enumerate() {
                assert_eq!(v, w.iota_app[a] * w.iota_slot[k][a]);
            }
        }
    }

    #[test]
    fn product_of_partial_weights() {
        // totals (0, 12, 12, 12, 12, 24) also have a unit exponent
        let row: Vec<u32> = UNIT_EXPONENT_ROW.iter().map(|&v| v as u32).collect();
        let tau: Vec<Vec<u32>> = (0..6)
            .map(|k| vec![0, row[k], row[k], row[k], row[k], 2 * row[k]])
            .collect();
        let w = benefit_weights(&history(tau), 0.1, 0.5).unwrap();
        assert!((w.iota_app[1] - 0.75).abs() < 1e-12);
        assert!((w.iota_slot[1][1] - 0.55).abs() < 1e-12);
        assert!((w.omega[1][1] - 0.4125).abs() < 1e-12);
    }

    #[test]
    fn zero_access_app_gets_delta_prime() {
        let tau = vec![vec![3, 0], vec![1, 0], vec![5, 0]];
        let w = benefit_weights(&history(tau), 0.1, 0.5).unwrap();
        assert_eq!(w.iota_app[1], 0.5);
        for row in &w.omega {
            assert_eq!(row[1], 0.5);
        }
    }

    #[test]
    fn weights_reject_bad_deltas() {
        let h = history(vec![vec![1]]);
        assert!(benefit_weights(&h, 0.0, 0.5).is_err());
        assert!(benefit_weights(&h, 0.1, 1.0).is_err());
    }

    fn profile(x: Vec<Vec<f64>>) -> TrafficProfile {
        TrafficProfile { x }
    }

    #[test]
    fn identical_days_give_tight_bounds() {
        let day = profile(vec![vec![1.0, 2.0], vec![0.5, 0.0]]);
        let b = default_bounds(&vec![day.clone(); 7]).unwrap();
        assert_eq!(b.b_slot, day.x);
        assert_eq!(b.upper_slot, day.x);
        assert_eq!(b.upper_slot_total, vec![3.0, 0.5]);
        assert_eq!(b.upper_app, vec![1.5, 2.0]);
        assert_eq!(b.b_app, vec![1.5, 2.0]);
    }

    #[test]
    fn cell_bounds_are_min_and_max() {
        let days: Vec<_> = (1..=7).map(|v| profile(vec![vec![v as f64]])).collect();
        let b = default_bounds(&days).unwrap();
        assert_eq!(b.b_slot[0][0], 1.0);
        assert_eq!(b.upper_slot[0][0], 7.0);
    }

    #[test]
    fn slot_cap_is_max_of_daily_totals() {
        let totals = [3.0, 9.0, 4.0, 4.0, 4.0, 4.0, 4.0];
        // the split between apps varies, so per-app maxima would sum to more than 9
        let days: Vec<_> = totals
            .iter()
            .enumerate()
            .map(|(d, &t)| {
                let first = if d % 2 == 0 { t } else { 0.0 };
                profile(vec![vec![first, t - first]])
            })
            .collect();
        let b = default_bounds(&days).unwrap();
        assert_eq!(b.upper_slot_total, vec![9.0]);
        assert!(b.upper_slot[0][0] + b.upper_slot[0][1] > 9.0);
    }

    #[test]
    fn short_and_empty_histories() {
        let days = vec![profile(vec![vec![1.0]]), profile(vec![vec![2.0]])];
        assert!(default_bounds(&days).is_ok());
        assert_eq!(default_bounds(&[]), Err(DemandError::EmptyHistory));
        let ragged = vec![profile(vec![vec![1.0]]), profile(vec![vec![1.0, 2.0]])];
        assert!(matches!(
            default_bounds(&ragged),
            Err(DemandError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn app_minimums_are_clamped() {
        let days = vec![
            profile(vec![vec![1.0, 0.0], vec![1.0, 1.0]]),
            profile(vec![vec![2.0, 0.0], vec![3.0, 2.0]]),
        ];
        let mut b = default_bounds(&days).unwrap();
        b.set_app_minimums(&[0.0, 100.0]).unwrap();
        assert_eq!(b.b_app, vec![2.0, 2.0]);
        assert!(b.set_app_minimums(&[1.0]).is_err());
    }

    fn unit_weights(k: usize, n: usize) -> BenefitWeights {
        BenefitWeights::from_omega(vec![vec![1.0; n]; k]).unwrap()
    }

    #[test]
    fn benefit_of_zero_profile_is_zero() {
        let w = unit_weights(3, 2);
        assert_eq!(benefit_of(&TrafficProfile::zeros(3, 2), &w).unwrap(), 0.0);
    }

    #[test]
    fn unit_weights_collapse_to_volume() {
        let p = profile(vec![vec![20.0, 5.6317], vec![10.0, 10.0]]);
        let v = benefit_of(&p, &unit_weights(2, 2)).unwrap();
        assert!((v - 45.6317).abs() < 1e-12);
    }

    #[test]
    fn benefit_dimension_mismatch() {
        let w = unit_weights(2, 2);
        assert!(benefit_of(&TrafficProfile::zeros(3, 2), &w).is_err());
    }

    proptest! {
        #[test]
        fn iota_stays_in_range(row in proptest::collection::vec(0u32..50, 1..30), delta in 0.01f64..0.99) {
            let vals: Vec<f64> = row.iter().map(|&v| f64::from(v)).collect();
            for v in iota(&vals, delta) {
                prop_assert!(v >= delta - 1e-15 && v <= 1.0 + 1e-15);
            }
        }

        #[test]
        fn iota_is_monotone_in_counts(row in proptest::collection::vec(0u32..50, 2..30), delta in 0.01f64..0.99) {
            let vals: Vec<f64> = row.iter().map(|&v| f64::from(v)).collect();
            let out = iota(&vals, delta);
            for i in 0..vals.len() {
                for j in 0..vals.len() {
                    if vals[i] > vals[j] {
                        prop_assert!(out[i] >= out[j]);
                    }
                }
            }
        }

        #[test]
        fn exponent_controls_concavity(ratio in 0.01f64..0.99, low in 0.05f64..0.95, high in 1.05f64..8.0, delta in 0.01f64..0.99) {
            let linear = iota_value(ratio, 1.0, delta);
            prop_assert!(iota_value(ratio, low, delta) > linear);
            prop_assert!(iota_value(ratio, high, delta) < linear);
        }

        #[test]
        fn benefit_is_linear(xs in proptest::collection::vec(0.0f64..100.0, 6), scale in 0.0f64..10.0) {
            let w = BenefitWeights::from_omega(vec![vec![0.3, 0.7], vec![1.0, 0.2], vec![0.5, 0.5]]).unwrap();
            let p = profile(xs.chunks(2).map(|c| c.to_vec()).collect());
            let scaled = profile(p.x.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect());
            let a = benefit_of(&p, &w).unwrap();
            let b = benefit_of(&scaled, &w).unwrap();
            prop_assert!((b - scale * a).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}
