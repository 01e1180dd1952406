//! Bundle plans: monthly cost, cost efficiency and running estimates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Days in a billing month.
pub const MONTH_DAYS: usize = 30;

/// $0.27 per 10 KB with 1 MB = 1024 KB.
pub const SINGTEL_OVERAGE_PER_MB: f64 = 0.27 * 1024.0 / 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LongtermError {
    #[error("volume must be positive")]
    ZeroVolume,
    #[error("ledger has {have} days, need {need}")]
    MissingDays { have: usize, need: usize },
    #[error("plan {0:?}: base cost is not below overage cost of the cap, CE has no peak at the cap")]
    DegeneratePlan(String),
    #[error("invalid plan or ledger: {0}")]
    Invalid(String),
    #[error("unknown plan preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundlePlan {
    pub name: String,
    /// Dollars.
    pub base_cost: f64,
    pub cap_mb: f64,
    /// Dollars per MB.
    pub overage_per_mb: f64,
}

impl BundlePlan {
    pub fn new(name: &str, base_cost: f64, cap_mb: f64, overage_per_mb: f64) -> Result<Self, LongtermError> {
        let plan = BundlePlan {
            name: name.to_string(),
            base_cost,
            cap_mb,
            overage_per_mb,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), LongtermError> {
        for (field, v) in [
            ("base_cost", self.base_cost),
            ("cap_mb", self.cap_mb),
            ("overage_per_mb", self.overage_per_mb),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LongtermError::Invalid(format!("{field} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// The three built-in plans: 200 MB for $10, 500 MB for $15, 1 GB for $20.
    pub fn presets() -> Vec<BundlePlan> {
        vec![
            BundlePlan {
                name: "200MB".into(),
                base_cost: 10.0,
                cap_mb: 200.0,
                overage_per_mb: SINGTEL_OVERAGE_PER_MB,
            },
            BundlePlan {
                name: "500MB".into(),
                base_cost: 15.0,
                cap_mb: 500.0,
                overage_per_mb: SINGTEL_OVERAGE_PER_MB,
            },
            BundlePlan {
                name: "1GB".into(),
                base_cost: 20.0,
                cap_mb: 1024.0,
                overage_per_mb: SINGTEL_OVERAGE_PER_MB,
            },
        ]
    }

    pub fn preset(name: &str) -> Result<BundlePlan, LongtermError> {
        Self::presets()
            .into_iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| LongtermError::UnknownPreset(name.to_string()))
    }
}

/// Base cost up to and including the cap, linear overage beyond it.
pub fn monthly_cost(x: f64, plan: &BundlePlan) -> f64 {
    plan.base_cost + plan.overage_per_mb * (x - plan.cap_mb).max(0.0)
}

/// `ω̄·x / cost(x)`.
pub fn monthly_ce(x: f64, plan: &BundlePlan, omega_bar: f64) -> Result<f64, LongtermError> {
    if !(x > 0.0) {
        return Err(LongtermError::ZeroVolume);
    }
    Ok(omega_bar * x / monthly_cost(x, plan))
}

/// The CE-maximising monthly volume, which is the cap whenever the base cost
/// is below what the cap would cost at the overage rate.
pub fn peak_volume(plan: &BundlePlan) -> Result<f64, LongtermError> {
    if plan.base_cost >= plan.overage_per_mb * plan.cap_mb {
        return Err(LongtermError::DegeneratePlan(plan.name.clone()));
    }
    Ok(plan.cap_mb)
}

/// Daily volumes observed so far this month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyLedger {
    pub chi: Vec<f64>,
    pub omega_bar: f64,
}

impl DailyLedger {
    pub fn new(chi: Vec<f64>, omega_bar: f64) -> Result<Self, LongtermError> {
        let ledger = DailyLedger { chi, omega_bar };
        ledger.validate()?;
        Ok(ledger)
    }

    pub fn validate(&self) -> Result<(), LongtermError> {
        if self.chi.len() > MONTH_DAYS {
            return Err(LongtermError::Invalid(format!(
                "ledger has {} days, a month has {MONTH_DAYS}",
                self.chi.len()
            )));
        }
        if let Some((d, v)) = self.chi.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(LongtermError::Invalid(format!("day {} volume {v} is negative", d + 1)));
        }
        if !(self.omega_bar > 0.0) {
            return Err(LongtermError::Invalid(format!(
                "omega_bar must be positive, got {}",
                self.omega_bar
            )));
        }
        Ok(())
    }

    /// Monthly volume extrapolated from the first `d` days: `(30/d)·Σχ`.
    pub fn projected_volume(&self, d: usize) -> Result<f64, LongtermError> {
        if d == 0 || d > MONTH_DAYS || d > self.chi.len() {
            return Err(LongtermError::MissingDays {
                have: self.chi.len(),
                need: d.max(1),
            });
        }
        let sum: f64 = self.chi[..d].iter().sum();
        Ok(MONTH_DAYS as f64 / d as f64 * sum)
    }
}

/// Estimated monthly CE after day `d` (1-based).
pub fn estimate_month(ledger: &DailyLedger, d: usize, plan: &BundlePlan) -> Result<f64, LongtermError> {
    ledger.validate()?;
    monthly_ce(ledger.projected_volume(d)?, plan, ledger.omega_bar)
}

/// `(volume, CE)` pairs for `volumes`.
pub fn ce_curve(plan: &BundlePlan, omega_bar: f64, volumes: &[f64]) -> Result<Vec<(f64, f64)>, LongtermError> {
    volumes
        .iter()
        .map(|&x| monthly_ce(x, plan, omega_bar).map(|ce| (x, ce)))
        .collect()
}

/// Estimated CE for every day present in the ledger.
pub fn estimate_series(ledger: &DailyLedger, plan: &BundlePlan) -> Result<Vec<(usize, f64)>, LongtermError> {
    (1..=ledger.chi.len())
        .map(|d| estimate_month(ledger, d, plan).map(|ce| (d, ce)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plan2() -> BundlePlan {
        BundlePlan::preset("500MB").unwrap()
    }

    #[test]
    fn overage_rate() {
        assert!((SINGTEL_OVERAGE_PER_MB - 27.648).abs() < 1e-12);
    }

    #[test]
    fn cost_examples() {
        assert_eq!(monthly_cost(400.0, &plan2()), 15.0);
        assert_eq!(monthly_cost(500.0, &plan2()), 15.0);
        assert!((monthly_cost(501.0, &plan2()) - 42.648).abs() < 1e-9);
    }

    #[test]
    fn ce_examples() {
        assert!((monthly_ce(500.0, &plan2(), 1.0).unwrap() - 33.333333).abs() < 1e-5);
        let p1 = BundlePlan::preset("200MB").unwrap();
        assert_eq!(monthly_ce(200.0, &p1, 1.0).unwrap(), 20.0);
        assert!((monthly_ce(501.0, &plan2(), 1.0).unwrap() - 501.0 / 42.648).abs() < 1e-12);
        assert_eq!(monthly_ce(0.0, &plan2(), 1.0), Err(LongtermError::ZeroVolume));
    }

    #[test]
    fn peaks() {
        assert_eq!(peak_volume(&BundlePlan::preset("200MB").unwrap()), Ok(200.0));
        assert_eq!(peak_volume(&BundlePlan::preset("1gb").unwrap()), Ok(1024.0));
        let cheap = BundlePlan::new("cheap", 10.0, 100.0, 0.001).unwrap();
        assert!(matches!(peak_volume(&cheap), Err(LongtermError::DegeneratePlan(_))));
        assert!(BundlePlan::preset("2GB").is_err());
        assert!(BundlePlan::new("bad", 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn estimates() {
        let ledger = DailyLedger::new(vec![500.0 / 30.0; 30], 1.0).unwrap();
        for d in 1..=30 {
            let ce = estimate_month(&ledger, d, &plan2()).unwrap();
            assert!((ce - 100.0 / 3.0).abs() < 1e-9);
        }
        let five = DailyLedger::new(vec![83.333 / 5.0; 5], 1.0).unwrap();
        assert!((five.projected_volume(5).unwrap() - 499.998).abs() < 1e-9);
        assert!(matches!(
            estimate_month(&five, 6, &plan2()),
            Err(LongtermError::MissingDays { have: 5, need: 6 })
        ));
        assert!(five.projected_volume(0).is_err());
    }

    #[test]
    fn early_days_weigh_more() {
        let base = DailyLedger::new(vec![10.0; 30], 1.0).unwrap();
        let mut first = base.clone();
        first.chi[0] += 1.0;
        let mut last = base.clone();
        last.chi[29] += 1.0;
        let d1 = first.projected_volume(1).unwrap() - base.projected_volume(1).unwrap();
        let d30 = last.projected_volume(30).unwrap() - base.projected_volume(30).unwrap();
        assert!((d1 - 30.0).abs() < 1e-9);
        assert!((d30 - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn curve_shape(which in 0usize..3, u in 0.001f64..1.0, v in 0.001f64..1.0, omega in 0.1f64..10.0) {
            let plan = &BundlePlan::presets()[which];
            let cap = plan.cap_mb;
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            prop_assume!(b - a > 1e-6);
            let ce = |x| monthly_ce(x, plan, omega).unwrap();
            prop_assert!(ce(a * cap) < ce(b * cap));
            prop_assert!(ce(cap * (1.0 + a)) > ce(cap * (1.0 + b)));
            prop_assert!(ce(cap) >= ce(a * cap) && ce(cap) >= ce(cap * (1.0 + a)));
        }

        #[test]
        fn full_ledger_matches_actual_total(days in proptest::collection::vec(0.0f64..50.0, 30)) {
            let ledger = DailyLedger::new(days.clone(), 1.0).unwrap();
            let total: f64 = days.iter().sum();
            prop_assume!(total > 0.0);
            let est = estimate_month(&ledger, 30, &plan2()).unwrap();
            let actual = monthly_ce(total, &plan2(), 1.0).unwrap();
            prop_assert!((est - actual).abs() <= 1e-12 * actual.abs().max(1.0));
        }
    }
}
