//! Scenario configuration, batch pipelines and report files.
//!
//! Every pipeline is a pure function of the [`Scenario`]: reports contain no
//! timestamps or host details, parallel batches are collected in run order,
//! and floats are printed in shortest round-trip form. Re-running with the
//! same config and seed therefore writes byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dayahead::{
    apply_demand_mode, pin_apps, schedule, schedule_pm, DemandMode, PriceCurve, ScheduleError,
    ScheduledProfile, SchedulingProblem,
};
use crate::demand::{benefit_weights, default_bounds, BenefitWeights, ConsumptionBounds, OperationCycle, TrafficProfile};
use crate::fracprog::LfpError;
use crate::io::{self, IoError};
use crate::longterm::{ce_curve, estimate_series, peak_volume, BundlePlan, DailyLedger, LongtermError};
use crate::realtime::{simulate_day, simulate_unmanaged, DayInputs, DayOutcome, RealtimeError, RealtimePolicy};
use crate::workload::{
    jittered_specs, realtime_prices, stream, sub_seed, AppTrafficSpec, ArrivalRates, GeneratedDay, WorkloadModel,
    RNG_ALGORITHM,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<ScheduleError> for CliError {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::Solver(s) => CliError::Solver(s.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<LfpError> for CliError {
    fn from(e: LfpError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<RealtimeError> for CliError {
    fn from(e: RealtimeError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<LongtermError> for CliError {
    fn from(e: LongtermError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

/// A plan given either by preset name or in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanChoice {
    Preset(String),
    Custom(BundlePlan),
}

impl PlanChoice {
    pub fn resolve(&self) -> Result<BundlePlan, LongtermError> {
        match self {
            PlanChoice::Preset(name) => BundlePlan::preset(name),
            PlanChoice::Custom(plan) => {
                plan.validate()?;
                Ok(plan.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    Fixed,
    Elastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionStrategy {
    /// Schedule the most frequently accessed apps.
    AccessFrequency,
    /// Schedule the apps with the largest demand.
    Demand,
}

impl ExclusionStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionStrategy::AccessFrequency => "access_frequency",
            ExclusionStrategy::Demand => "demand",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub cycle: OperationCycle,
    /// Application specs; defaults to the five reference apps.
    pub apps: Vec<AppTrafficSpec>,
    /// Installed apps. Beyond `apps.len()` the specs are repeated with jitter.
    pub num_apps: Option<usize>,
    pub app_jitter: f64,
    /// Background-to-foreground rate ratio; `null` draws from the spec range.
    pub bg_ratio: Option<f64>,
    pub shape: Option<Vec<f64>>,
    /// Day-ahead prices in cents per MB.
    pub prices: Vec<f64>,
    pub delta: f64,
    pub delta_prime: f64,
    /// User-set ω (K×N, slot-major) replacing the weights derived from history.
    pub omega: Option<Vec<Vec<f64>>>,
    pub eta: f64,
    pub kappa: f64,
    pub overage_permitted: bool,
    pub elastic_margin: f64,
    pub realtime_mode: ScheduleMode,
    pub limited_mode: ScheduleMode,
    pub plan: PlanChoice,
    pub omega_bar: f64,
    pub seed: u64,
    pub runs: usize,
    pub strict_paper_matrix: bool,
    pub out: PathBuf,
    pub history_csv: Option<PathBuf>,
    pub ledger_csv: Option<PathBuf>,
    pub decision_log: bool,
    pub histogram_bins: usize,
    pub histogram_range: (f64, f64),
    pub curve_max_mb: f64,
    pub curve_step_mb: f64,
}

/// Overnight 0.40 cents/MB; slots 9 to 22 (1-based) follow
/// `0.70 + 0.10·sin(π(k − 9)/13)`, peaking at twice the overnight price.
pub fn default_price_curve() -> Vec<f64> {
    (1..=24)
        .map(|k| {
            if (9..=22).contains(&k) {
                0.70 + 0.10 * (std::f64::consts::PI * f64::from(k - 9) / 13.0).sin()
            } else {
                0.40
            }
        })
        .collect()
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            cycle: OperationCycle::default(),
            apps: AppTrafficSpec::table_presets(),
            num_apps: None,
            app_jitter: 0.2,
            bg_ratio: Some(5.0),
            shape: None,
            prices: default_price_curve(),
            delta: 0.1,
            delta_prime: 0.5,
            omega: None,
            eta: 0.2,
            kappa: 0.0,
            overage_permitted: true,
            elastic_margin: 0.1,
            realtime_mode: ScheduleMode::Elastic,
            limited_mode: ScheduleMode::Elastic,
            plan: PlanChoice::Preset("500MB".into()),
            omega_bar: 1.0,
            seed: 1,
            runs: 1000,
            strict_paper_matrix: false,
            out: PathBuf::from("out"),
            history_csv: None,
            ledger_csv: None,
            decision_log: false,
            histogram_bins: 20,
            histogram_range: (0.5, 1.5),
            curve_max_mb: 1536.0,
            curve_step_mb: 1.0,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn installed_apps(&self) -> usize {
        self.num_apps.unwrap_or(self.apps.len())
    }

    pub fn workload(&self) -> WorkloadModel {
        let specs = jittered_specs(&self.apps, self.installed_apps(), self.app_jitter, self.seed);
        WorkloadModel {
            specs,
            cycle: self.cycle,
            bg_ratio: self.bg_ratio,
            shape: self.shape.clone(),
        }
    }

    pub fn price_curve(&self) -> Result<PriceCurve, CliError> {
        PriceCurve::new(self.prices.clone()).map_err(|e| config_err("prices", e))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.cycle.num_slots == 0 {
            return Err(config_err("cycle.num_slots", "must be at least 1"));
        }
        if self.cycle.slot_minutes != 60 {
            return Err(config_err("cycle.slot_minutes", "only 60-minute slots are supported"));
        }
        if self.apps.is_empty() {
            return Err(config_err("apps", "at least one app is required"));
        }
        if self.installed_apps() == 0 {
            return Err(config_err("num_apps", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.app_jitter) {
            return Err(config_err("app_jitter", format!("must lie in [0, 1), got {}", self.app_jitter)));
        }
        self.workload().validate().map_err(|e| config_err("apps", e))?;
        if self.prices.len() != self.cycle.num_slots {
            return Err(config_err(
                "prices",
                format!("{} values for {} slots", self.prices.len(), self.cycle.num_slots),
            ));
        }
        self.price_curve()?;
        for (field, v) in [("delta", self.delta), ("delta_prime", self.delta_prime)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(config_err(field, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(config_err("eta", format!("must be non-negative, got {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(config_err("kappa", format!("must lie in [0, 1), got {}", self.kappa)));
        }
        if !(0.0..1.0).contains(&self.elastic_margin) {
            return Err(config_err("elastic_margin", format!("must lie in [0, 1), got {}", self.elastic_margin)));
        }
        self.plan.resolve().map_err(|e| config_err("plan", e))?;
        if !(self.omega_bar > 0.0 && self.omega_bar.is_finite()) {
            return Err(config_err("omega_bar", format!("must be positive, got {}", self.omega_bar)));
        }
        if self.runs == 0 {
            return Err(config_err("runs", "must be at least 1"));
        }
        if self.histogram_bins == 0 || !(self.histogram_range.0 < self.histogram_range.1) {
            return Err(config_err("histogram_bins", "need at least one bin over a non-empty range"));
        }
        if !(self.curve_step_mb > 0.0 && self.curve_max_mb >= self.curve_step_mb) {
            return Err(config_err("curve_step_mb", "need 0 < curve_step_mb <= curve_max_mb"));
        }
        Ok(())
    }
}

/// Inputs derived once per scenario: arrival rates, the recent week, weights
/// from the latest day, and the default bounds.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: WorkloadModel,
    pub rates: ArrivalRates,
    pub week: Vec<GeneratedDay>,
    pub weights: BenefitWeights,
    pub bounds: ConsumptionBounds,
    pub prices: PriceCurve,
}

impl Prepared {
    pub fn latest(&self) -> &GeneratedDay {
        self.week.last().expect("week is never empty")
    }

    pub fn bounds_for(&self, mode: ScheduleMode, margin: f64) -> Result<ConsumptionBounds, CliError> {
        let mut b = self.bounds.clone();
        let m = match mode {
            ScheduleMode::Fixed => DemandMode::Fixed,
            ScheduleMode::Elastic => DemandMode::Elastic { margin },
        };
        apply_demand_mode(&mut b, &self.latest().profile, m).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(b)
    }

    pub fn problem(&self, bounds: ConsumptionBounds, strict: bool) -> Result<SchedulingProblem, CliError> {
        let mut sp = SchedulingProblem::new(self.weights.clone(), self.prices.clone(), bounds)?;
        sp.strict_paper_matrix = strict;
        Ok(sp)
    }
}

pub fn prepare(sc: &Scenario) -> Result<Prepared, CliError> {
    sc.validate()?;
    let model = sc.workload();
    let rates = model.draw_rates(sc.seed).map_err(|e| config_err("apps", e))?;
    let week = match &sc.history_csv {
        Some(path) => {
            let file = fs::File::open(path).map_err(|source| CliError::File {
                path: path.clone(),
                source,
            })?;
            let days = io::read_history(file)?;
            if days.is_empty() {
                return Err(config_err("history_csv", "history has no rows"));
            }
            let (k, n) = (sc.cycle.num_slots, model.num_apps());
            if days.iter().any(|(h, p)| h.num_slots() != k || p.num_apps() != n) {
                return Err(config_err("history_csv", format!("expected {k} slots and {n} apps")));
            }
            days.into_iter()
                .map(|(history, profile)| GeneratedDay {
                    history,
                    events: Vec::new(),
                    profile,
                })
                .collect()
        }
        None => model.generate_week(&rates, sc.seed).map_err(|e| config_err("apps", e))?,
    };
    let latest = week.last().expect("checked non-empty");
    let weights = match &sc.omega {
        Some(omega) => {
            let w = BenefitWeights::from_omega(omega.clone()).map_err(|e| config_err("omega", e))?;
            if w.num_slots() != latest.history.num_slots() || w.num_apps() != latest.history.num_apps() {
                return Err(config_err(
                    "omega",
                    format!("expected {} slots by {} apps", latest.history.num_slots(), latest.history.num_apps()),
                ));
            }
            w
        }
        None => benefit_weights(&latest.history, sc.delta, sc.delta_prime).map_err(|e| config_err("delta", e))?,
    };
    let profiles: Vec<TrafficProfile> = week.iter().map(|d| d.profile.clone()).collect();
    let bounds = default_bounds(&profiles).map_err(|e| config_err("history_csv", e))?;
    Ok(Prepared {
        model,
        rates,
        week,
        weights,
        bounds,
        prices: sc.price_curve()?,
    })
}

/// One line of a profile table: volume, benefit, payment and their ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub profile: String,
    pub volume_mb: f64,
    pub benefit: f64,
    pub payment_cents: f64,
    pub ce: f64,
}

impl ReportRow {
    pub fn new(profile: &str, volume_mb: f64, benefit: f64, payment_cents: f64) -> Self {
        ReportRow {
            profile: profile.to_string(),
            volume_mb,
            benefit,
            payment_cents,
            ce: benefit / payment_cents,
        }
    }

    fn from_schedule(name: &str, s: &ScheduledProfile) -> Self {
        Self::new(name, s.profile.total(), s.benefit, s.payment)
    }

    fn from_outcome(name: &str, o: &DayOutcome) -> Self {
        Self::new(name, o.consumed.total(), o.benefit, o.total_payment())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationCount {
    pub profile: String,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub ce_managed: f64,
    pub ce_unmanaged: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealtimeSummary {
    pub runs: usize,
    pub kappa: f64,
    pub fraction_ratio_above_one: f64,
    pub mean_ratio: f64,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitedRow {
    pub strategy: String,
    pub max_apps: usize,
    pub scheduled_apps: Vec<usize>,
    pub ce: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPeak {
    pub plan: String,
    pub peak_volume_mb: Option<f64>,
    pub peak_ce: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub rng: String,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub rows: Vec<ReportRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub iterations: Vec<IterationCount>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub realtime: Option<RealtimeSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub limited: Vec<LimitedRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub peaks: Vec<PlanPeak>,
}

impl RunReport {
    fn new(command: &str, sc: &Scenario) -> Self {
        RunReport {
            command: command.to_string(),
            seed: sc.seed,
            rng: RNG_ALGORITHM.to_string(),
            rows: Vec::new(),
            iterations: Vec::new(),
            realtime: None,
            limited: Vec::new(),
            peaks: Vec::new(),
        }
    }
}

/// Output of [`dayahead`] before anything is written.
#[derive(Debug, Clone)]
pub struct DayaheadResult {
    pub report: RunReport,
    pub unscheduled: TrafficProfile,
    pub ce_fixed: ScheduledProfile,
    pub ce_elastic: ScheduledProfile,
    pub pm_fixed: ScheduledProfile,
    pub pm_elastic: ScheduledProfile,
}

/// Unscheduled, CE-scheduled and PM-scheduled profiles under fixed and
/// elastic demand.
pub fn dayahead(sc: &Scenario, prep: &Prepared) -> Result<DayaheadResult, CliError> {
    let fixed = prep.problem(prep.bounds_for(ScheduleMode::Fixed, sc.elastic_margin)?, sc.strict_paper_matrix)?;
    let elastic = prep.problem(prep.bounds_for(ScheduleMode::Elastic, sc.elastic_margin)?, sc.strict_paper_matrix)?;
    let unscheduled = prep.latest().profile.clone();
    let (ub, up, _) = fixed.evaluate(&unscheduled)?;
    let ce_fixed = schedule(&fixed)?;
    let ce_elastic = schedule(&elastic)?;
    let pm_fixed = schedule_pm(&fixed, sc.eta)?;
    let pm_elastic = schedule_pm(&elastic, sc.eta)?;

    let mut report = RunReport::new("dayahead", sc);
    report.rows = vec![
        ReportRow::new("unscheduled", unscheduled.total(), ub, up),
        ReportRow::from_schedule("ce_fixed", &ce_fixed),
        ReportRow::from_schedule("ce_elastic", &ce_elastic),
        ReportRow::from_schedule("pm_fixed", &pm_fixed),
        ReportRow::from_schedule("pm_elastic", &pm_elastic),
    ];
    report.iterations = vec![
        IterationCount {
            profile: "ce_fixed".into(),
            iterations: ce_fixed.iterations,
        },
        IterationCount {
            profile: "ce_elastic".into(),
            iterations: ce_elastic.iterations,
        },
    ];
    Ok(DayaheadResult {
        report,
        unscheduled,
        ce_fixed,
        ce_elastic,
        pm_fixed,
        pm_elastic,
    })
}

pub fn run_dayahead(sc: &Scenario) -> Result<RunReport, CliError> {
    let prep = prepare(sc)?;
    let r = dayahead(sc, &prep)?;
    let out = OutDir::create(&sc.out)?;
    out.json("report.json", &r.report)?;
    out.csv("profiles.csv", |w| write_rows(w, &r.report.rows))?;
    out.csv("unscheduled.csv", |w| io::write_profile(w, &r.unscheduled))?;
    let named = [
        ("ce_fixed", &r.ce_fixed),
        ("ce_elastic", &r.ce_elastic),
        ("pm_fixed", &r.pm_fixed),
        ("pm_elastic", &r.pm_elastic),
    ];
    for (name, s) in named {
        out.csv(&format!("schedule_{name}.csv"), |w| io::write_profile(w, &s.profile))?;
    }
    for (name, s) in &named[..2] {
        let rows: Vec<Vec<String>> = s
            .trace
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), v.to_string()])
            .collect();
        out.csv(&format!("trace_{name}.csv"), |w| io::write_table(w, &["iteration", "objective"], &rows))?;
    }
    let slot_rows: Vec<Vec<String>> = (0..sc.cycle.num_slots)
        .map(|k| {
            let mut row = vec![(k + 1).to_string(), prep.prices.p[k].to_string()];
            row.push(r.unscheduled.x[k].iter().sum::<f64>().to_string());
            for (_, s) in named {
                row.push(s.profile.x[k].iter().sum::<f64>().to_string());
            }
            row
        })
        .collect();
    out.csv("slots.csv", |w| {
        io::write_table(
            w,
            &["slot", "price", "unscheduled", "ce_fixed", "ce_elastic", "pm_fixed", "pm_elastic"],
            &slot_rows,
        )
    })?;
    Ok(r.report)
}

/// The schedule used as the day-ahead purchase in real-time runs.
pub fn realtime_schedule(sc: &Scenario, prep: &Prepared) -> Result<ScheduledProfile, CliError> {
    let sp = prep.problem(prep.bounds_for(sc.realtime_mode, sc.elastic_margin)?, sc.strict_paper_matrix)?;
    Ok(schedule(&sp)?)
}

/// Simulates one seeded day under management and without it.
pub fn realtime_run(
    sc: &Scenario,
    prep: &Prepared,
    purchase: &TrafficProfile,
    kappa: f64,
    run: usize,
    keep_log: bool,
) -> Result<(u64, DayOutcome, DayOutcome), CliError> {
    let seed = sub_seed(sc.seed, stream::RUNS + run as u64);
    let day = prep
        .model
        .generate_day(&prep.rates, seed)
        .map_err(|e| config_err("apps", e))?;
    let p_real = realtime_prices(&prep.prices, seed);
    let inputs = DayInputs {
        schedule: purchase,
        weights: &prep.weights,
        day_ahead: &prep.prices,
        realtime_prices: &p_real,
        events: &day.events,
    };
    let mut policy = RealtimePolicy {
        overage_permitted: sc.overage_permitted,
        ..RealtimePolicy::default()
    };
    policy.admission = policy.admission.with_kappa(kappa)?;
    let managed = simulate_day(&inputs, &policy, sub_seed(seed, stream::ADMISSION), keep_log)?;
    let unmanaged = simulate_unmanaged(&inputs, false)?;
    Ok((seed, managed, unmanaged))
}

/// `runs` independent days, evaluated in parallel and returned in run order.
pub fn realtime_batch(
    sc: &Scenario,
    prep: &Prepared,
    purchase: &TrafficProfile,
    kappa: f64,
    runs: usize,
) -> Result<Vec<RunRecord>, CliError> {
    (0..runs)
        .into_par_iter()
        .map(|run| {
            let (seed, m, u) = realtime_run(sc, prep, purchase, kappa, run, false)?;
            Ok(RunRecord {
                run,
                seed,
                ce_managed: m.cost_efficiency,
                ce_unmanaged: u.cost_efficiency,
                ratio: m.cost_efficiency / u.cost_efficiency,
            })
        })
        .collect()
}

pub fn summarize(records: &[RunRecord], kappa: f64, bins: usize, range: (f64, f64)) -> RealtimeSummary {
    let n = records.len();
    let above = records.iter().filter(|r| r.ratio > 1.0).count();
    let width = (range.1 - range.0) / bins as f64;
    let mut histogram: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lower: range.0 + width * i as f64,
            upper: range.0 + width * (i + 1) as f64,
            count: 0,
        })
        .collect();
    for r in records {
        // values outside the range go to the end bins
        let i = ((r.ratio - range.0) / width).floor();
        let i = if i.is_nan() { 0 } else { (i.max(0.0) as usize).min(bins - 1) };
        histogram[i].count += 1;
    }
    RealtimeSummary {
        runs: n,
        kappa,
        fraction_ratio_above_one: above as f64 / n as f64,
        mean_ratio: records.iter().map(|r| r.ratio).sum::<f64>() / n as f64,
        histogram,
    }
}

pub fn run_realtime(sc: &Scenario) -> Result<RunReport, CliError> {
    let prep = prepare(sc)?;
    let purchase = realtime_schedule(sc, &prep)?;
    let records = realtime_batch(sc, &prep, &purchase.profile, sc.kappa, sc.runs)?;
    let (_, managed, unmanaged) = realtime_run(sc, &prep, &purchase.profile, sc.kappa, 0, sc.decision_log)?;

    let mut report = RunReport::new("realtime", sc);
    report.rows = vec![
        ReportRow::from_schedule("ce_scheduled", &purchase),
        ReportRow::from_outcome("realtime_managed", &managed),
        ReportRow::from_outcome("realtime_unmanaged", &unmanaged),
    ];
    report.iterations = vec![IterationCount {
        profile: "ce_scheduled".into(),
        iterations: purchase.iterations,
    }];
    report.realtime = Some(summarize(&records, sc.kappa, sc.histogram_bins, sc.histogram_range));

    let out = OutDir::create(&sc.out)?;
    out.json("report.json", &report)?;
    out.csv("profiles.csv", |w| write_rows(w, &report.rows))?;
    let run_rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.run.to_string(),
                r.seed.to_string(),
                r.ce_managed.to_string(),
                r.ce_unmanaged.to_string(),
                r.ratio.to_string(),
            ]
        })
        .collect();
    out.csv("runs.csv", |w| {
        io::write_table(w, &["run", "seed", "ce_managed", "ce_unmanaged", "ratio"], &run_rows)
    })?;
    let hist = &report.realtime.as_ref().expect("set above").histogram;
    let hist_rows: Vec<Vec<String>> = hist
        .iter()
        .map(|b| vec![b.lower.to_string(), b.upper.to_string(), b.count.to_string()])
        .collect();
    out.csv("histogram.csv", |w| io::write_table(w, &["lower", "upper", "count"], &hist_rows))?;
    out.csv("schedule.csv", |w| io::write_profile(w, &purchase.profile))?;
    out.csv("consumed_managed.csv", |w| io::write_profile(w, &managed.consumed))?;
    out.json(
        "billing.json",
        &serde_json::json!({
            "prebought_payment_cents": managed.prebought_payment,
            "additional_payment_cents": managed.additional_payment,
            "total_payment_cents": managed.total_payment(),
            "overage_mb": managed.overage.total(),
            "admitted": managed.admitted,
            "denied": managed.denied,
        }),
    )?;
    if sc.decision_log {
        let rows: Vec<Vec<String>> = managed
            .log
            .iter()
            .map(|d| {
                vec![
                    (d.slot + 1).to_string(),
                    d.minute.to_string(),
                    (d.app + 1).to_string(),
                    d.volume.to_string(),
                    d.kind.as_str().to_string(),
                    d.decision.as_str().to_string(),
                ]
            })
            .collect();
        out.csv("decisions.csv", |w| {
            io::write_table(w, &["slot", "minute", "app", "volume_mb", "kind", "decision"], &rows)
        })?;
    }
    Ok(report)
}

/// Apps chosen for scheduling when only `max_apps` may be managed.
pub fn select_apps(prep: &Prepared, strategy: ExclusionStrategy, max_apps: usize) -> Vec<usize> {
    let latest = prep.latest();
    let key: Vec<f64> = match strategy {
        ExclusionStrategy::AccessFrequency => latest.history.app_totals(),
        ExclusionStrategy::Demand => latest.profile.app_totals(),
    };
    let mut order: Vec<usize> = (0..key.len()).collect();
    order.sort_by(|&p, &q| key[q].total_cmp(&key[p]).then(p.cmp(&q)));
    let mut chosen: Vec<usize> = order.into_iter().take(max_apps).collect();
    chosen.sort_unstable();
    chosen
}

/// CE when only `max_apps` apps are scheduled and the rest keep their
/// historical profile.
pub fn limited_ce(
    sc: &Scenario,
    prep: &Prepared,
    strategy: ExclusionStrategy,
    max_apps: usize,
) -> Result<(LimitedRow, ScheduledProfile), CliError> {
    let n = prep.model.num_apps();
    if max_apps > n {
        return Err(config_err("max_apps", format!("{max_apps} exceeds the {n} installed apps")));
    }
    let chosen = select_apps(prep, strategy, max_apps);
    let excluded: Vec<usize> = (0..n).filter(|a| !chosen.contains(a)).collect();
    let mut bounds = prep.bounds_for(sc.limited_mode, sc.elastic_margin)?;
    pin_apps(&mut bounds, &prep.latest().profile, &excluded).map_err(|e| CliError::Config(e.to_string()))?;
    let s = schedule(&prep.problem(bounds, sc.strict_paper_matrix)?)?;
    Ok((
        LimitedRow {
            strategy: strategy.as_str().to_string(),
            max_apps,
            scheduled_apps: chosen.iter().map(|a| a + 1).collect(),
            ce: s.cost_efficiency,
        },
        s,
    ))
}

pub fn run_limited(sc: &Scenario, max_apps: Option<usize>) -> Result<RunReport, CliError> {
    let prep = prepare(sc)?;
    let n = prep.model.num_apps();
    let sizes: Vec<usize> = match max_apps {
        Some(m) => vec![m],
        None => (0..=n).collect(),
    };
    let mut report = RunReport::new("limited", sc);
    for strategy in [ExclusionStrategy::AccessFrequency, ExclusionStrategy::Demand] {
        for &m in &sizes {
            report.limited.push(limited_ce(sc, &prep, strategy, m)?.0);
        }
    }
    let out = OutDir::create(&sc.out)?;
    out.json("report.json", &report)?;
    let rows: Vec<Vec<String>> = report
        .limited
        .iter()
        .map(|r| {
            let apps: Vec<String> = r.scheduled_apps.iter().map(usize::to_string).collect();
            vec![r.strategy.clone(), r.max_apps.to_string(), apps.join(" "), r.ce.to_string()]
        })
        .collect();
    out.csv("limited.csv", |w| io::write_table(w, &["strategy", "max_apps", "scheduled_apps", "ce"], &rows))?;
    Ok(report)
}

/// The month's daily volumes: from the ledger file, or 30 generated days.
pub fn month_ledger(sc: &Scenario) -> Result<DailyLedger, CliError> {
    let chi = match &sc.ledger_csv {
        Some(path) => {
            let file = fs::File::open(path).map_err(|source| CliError::File {
                path: path.clone(),
                source,
            })?;
            io::read_ledger(file)?
        }
        None => {
            let model = sc.workload();
            let rates = model.draw_rates(sc.seed).map_err(|e| config_err("apps", e))?;
            model
                .generate_days(&rates, sc.seed, 0..30)
                .map_err(|e| config_err("apps", e))?
                .iter()
                .map(|d| d.profile.total())
                .collect()
        }
    };
    DailyLedger::new(chi, sc.omega_bar).map_err(|e| config_err("ledger_csv", e))
}

pub fn run_longterm(sc: &Scenario) -> Result<RunReport, CliError> {
    sc.validate()?;
    let plans = BundlePlan::presets();
    let steps = (sc.curve_max_mb / sc.curve_step_mb).floor() as usize;
    let volumes: Vec<f64> = (1..=steps).map(|i| i as f64 * sc.curve_step_mb).collect();
    let curves = plans
        .iter()
        .map(|p| ce_curve(p, sc.omega_bar, &volumes))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = RunReport::new("longterm", sc);
    for p in &plans {
        let peak = peak_volume(p).ok();
        report.peaks.push(PlanPeak {
            plan: p.name.clone(),
            peak_volume_mb: peak,
            peak_ce: peak.map(|x| sc.omega_bar * x / p.base_cost),
        });
    }

    let plan = sc.plan.resolve()?;
    let ledger = month_ledger(sc)?;
    let series = estimate_series(&ledger, &plan)?;

    let out = OutDir::create(&sc.out)?;
    out.json("report.json", &report)?;
    let mut header = vec!["volume_mb".to_string()];
    header.extend(plans.iter().map(|p| format!("ce_{}", p.name)));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = volumes
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut row = vec![v.to_string()];
            row.extend(curves.iter().map(|c| c[i].1.to_string()));
            row
        })
        .collect();
    out.csv("ce_curve.csv", |w| io::write_table(w, &header, &rows))?;
    let est_rows: Vec<Vec<String>> = series
        .iter()
        .map(|(d, ce)| {
            let projected = ledger.projected_volume(*d).expect("day is in the ledger");
            vec![d.to_string(), ledger.chi[d - 1].to_string(), projected.to_string(), ce.to_string()]
        })
        .collect();
    out.csv("estimate.csv", |w| {
        io::write_table(w, &["day", "volume_mb", "projected_volume_mb", "estimated_ce"], &est_rows)
    })?;
    Ok(report)
}

/// Writes the generated week, the following day's event stream and the rates.
pub fn run_gen(sc: &Scenario) -> Result<RunReport, CliError> {
    sc.validate()?;
    let model = sc.workload();
    let rates = model.draw_rates(sc.seed).map_err(|e| config_err("apps", e))?;
    let days = model.generate_days(&rates, sc.seed, 0..8).map_err(|e| config_err("apps", e))?;
    let (week, next) = days.split_at(7);
    let out = OutDir::create(&sc.out)?;
    let pairs: Vec<_> = week.iter().map(|d| (d.history.clone(), d.profile.clone())).collect();
    out.csv("history.csv", |w| io::write_history(w, &pairs))?;
    out.csv("events.csv", |w| io::write_events(w, &next[0].events))?;
    out.json("rates.json", &rates)?;
    out.json("scenario.json", sc)?;
    Ok(RunReport::new("gen", sc))
}

fn write_rows<W: std::io::Write>(w: W, rows: &[ReportRow]) -> Result<(), IoError> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.profile.clone(),
                r.volume_mb.to_string(),
                r.benefit.to_string(),
                r.payment_cents.to_string(),
                r.ce.to_string(),
            ]
        })
        .collect();
    io::write_table(w, &["profile", "volume_mb", "benefit", "payment_cents", "ce"], &body)
}

struct OutDir(PathBuf);

impl OutDir {
    fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|source| CliError::File {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(OutDir(path.to_path_buf()))
    }

    fn file(&self, name: &str) -> Result<fs::File, CliError> {
        let path = self.0.join(name);
        fs::File::create(&path).map_err(|source| CliError::File { path, source })
    }

    fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        let path = self.0.join(name);
        fs::write(&path, text).map_err(|source| CliError::File { path, source })
    }

    fn csv<F>(&self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(fs::File) -> Result<(), IoError>,
    {
        write(self.file(name)?)?;
        Ok(())
    }
}
