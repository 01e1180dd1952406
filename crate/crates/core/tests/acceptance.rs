//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line (written
//! straight to stdout so it shows without `--nocapture`) and then asserts.

use std::io::Write;

use cetm::cli::{self, ExclusionStrategy, Scenario};
use cetm::dayahead::{to_standard_form, PriceCurve, SchedulingProblem};
use cetm::demand::{AppId, BenefitWeights, ConsumptionBounds, OperationCycle};
use cetm::fracprog::lfp_solve;
use cetm::longterm::{monthly_ce, peak_volume, BundlePlan};
use cetm::realtime::{accept_probability, calibrate_admission, reallocate, reset_bounds, SlotState};
use cetm::workload::{lognormal_params, AppTrafficSpec, WorkloadModel};
use cetm_oracle::{max_ratio_over_vertices, max_weighted_fill};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let tag = if pass { "PASS" } else { "FAIL" };
    writeln!(out, "[acceptance {id:>2}] {tag} {name}: {detail}").unwrap();
    out.flush().unwrap();
}

/// A random instance with box and sum constraints that contains a known
/// feasible point.
fn random_problem(rng: &mut ChaCha8Rng, k: usize, n: usize) -> SchedulingProblem {
    let mut b_slot = vec![vec![0.0; n]; k];
    let mut upper = vec![vec![0.0; n]; k];
    let mut witness = vec![vec![0.0; n]; k];
    for slot in 0..k {
        for a in 0..n {
            let lo = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..2.0) };
            let hi = lo + rng.random_range(0.5..5.0);
            b_slot[slot][a] = lo;
            upper[slot][a] = hi;
            witness[slot][a] = rng.random_range(lo..hi);
        }
    }
    let upper_slot_total = (0..k)
        .map(|slot| {
            let used: f64 = witness[slot].iter().sum();
            let cap: f64 = upper[slot].iter().sum();
            rng.random_range(used..cap + 1e-9)
        })
        .collect();
    let totals: Vec<f64> = (0..n).map(|a| witness.iter().map(|r| r[a]).sum()).collect();
    let floor: Vec<f64> = (0..n).map(|a| b_slot.iter().map(|r| r[a]).sum()).collect();
    let b_app = (0..n).map(|a| rng.random_range(floor[a]..totals[a] + 1e-9)).collect();
    let upper_app = totals.iter().map(|t| t + rng.random_range(0.0..3.0)).collect();
    let omega = (0..k)
        .map(|_| (0..n).map(|_| rng.random_range(0.05..1.0)).collect())
        .collect();
    let prices = (0..k).map(|_| rng.random_range(0.2..2.0)).collect();
    SchedulingProblem::new(
        BenefitWeights::from_omega(omega).unwrap(),
        PriceCurve::new(prices).unwrap(),
        ConsumptionBounds {
            b_slot,
            upper_slot: upper,
            upper_slot_total,
            b_app,
            upper_app,
        },
    )
    .unwrap()
}

fn acceptance_instances() -> Vec<SchedulingProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    (0..200)
        .map(|_| {
            let k = rng.random_range(1..=4);
            let n = rng.random_range(1..=3);
            random_problem(&mut rng, k, n)
        })
        .collect()
}

#[test]
fn criterion_01_lfp_matches_vertex_enumeration() {
    let start = std::time::Instant::now();
    let mut worst = 0.0f64;
    for sp in acceptance_instances() {
        let form = to_standard_form(&sp).unwrap();
        let f = &form.lfp;
        let sol = lfp_solve(f).unwrap();
        let (best, _) =
            max_ratio_over_vertices(&f.num, f.num_offset, &f.den, f.den_offset, &f.constraints, &f.rhs).unwrap();
        worst = worst.max((sol.objective_value - best).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-7;
    verdict(
        1,
        "LFP oracle equivalence",
        pass,
        &format!("200 instances, max |error| {worst:.3e} (tol 1e-7), {secs:.2} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_bitran_novaes_trace() {
    let mut traces: Vec<(Vec<f64>, usize)> = acceptance_instances()
        .iter()
        .map(|sp| {
            let s = lfp_solve(&to_standard_form(sp).unwrap().lfp).unwrap();
            (s.trace, s.iterations)
        })
        .collect();
    // full-size scenarios as well
    for seed in 0..5 {
        let sc = Scenario {
            seed,
            ..Scenario::default()
        };
        let prep = cli::prepare(&sc).unwrap();
        let r = cli::dayahead(&sc, &prep).unwrap();
        traces.push((r.ce_fixed.trace, r.ce_fixed.iterations));
        traces.push((r.ce_elastic.trace, r.ce_elastic.iterations));
    }
    let max_iter = traces.iter().map(|t| t.1).max().unwrap();
    let monotone = traces
        .iter()
        .all(|(t, _)| t.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0)));
    let pass = monotone && max_iter <= 50;
    verdict(
        2,
        "Bitran-Novaes behaviour",
        pass,
        &format!("{} traces, non-decreasing: {monotone}, max iterations {max_iter} (limit 50)", traces.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_03_table_consistency() {
    // volume, benefit, payment, printed CE
    let table: [(&str, f64, f64, f64, f64); 5] = [
        ("A", 45.6317, 18.4074, 28.3546, 0.6492),
        ("B", 45.6317, 25.5956, 28.2031, 0.9075),
        ("C", 41.0685, 23.7148, 25.5149, 0.9294),
        ("D", 45.6317, 26.3196, 30.3015, 0.8686),
        ("E", 49.2778, 28.1991, 32.7412, 0.8613),
    ];
    let worst_table = table
        .iter()
        .map(|(_, _, v, c, ce)| (v / c - ce).abs())
        .fold(0.0, f64::max);

    let sc = Scenario::default();
    let prep = cli::prepare(&sc).unwrap();
    let r = cli::dayahead(&sc, &prep).unwrap();
    let own_exact = r.report.rows.iter().all(|row| row.ce == row.benefit / row.payment_cents);
    let pass = worst_table <= 1e-3 && own_exact && r.report.rows.len() == 5;
    verdict(
        3,
        "Table consistency",
        pass,
        &format!(
            "published rows max |V/C - CE| {worst_table:.2e} (tol 1e-3); {} report rows with CE == V/C exactly: {own_exact}",
            r.report.rows.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_scheduling_dominance() {
    let mut ok = 0;
    let mut improvement_unsched = 0.0;
    let mut improvement_pm = 0.0;
    let runs = 100;
    let results: Vec<_> = (0..runs as u64)
        .map(|seed| {
            let sc = Scenario {
                seed,
                ..Scenario::default()
            };
            let prep = cli::prepare(&sc).unwrap();
            let r = cli::dayahead(&sc, &prep).unwrap();
            let rows = &r.report.rows;
            let ce = |name: &str| rows.iter().find(|row| row.profile == name).unwrap().ce;
            (ce("unscheduled"), ce("ce_fixed"), ce("ce_elastic"), ce("pm_fixed"), ce("pm_elastic"))
        })
        .collect();
    for &(un, cf, ce_el, pf, pe) in &results {
        let tol = 1e-12;
        if cf >= un - tol && ce_el >= un - tol && cf >= pf - tol && ce_el >= pe - tol && ce_el >= cf - tol {
            ok += 1;
        }
        improvement_unsched += cf / un - 1.0;
        improvement_pm += cf / pf - 1.0;
    }
    let pass = ok == runs;
    verdict(
        4,
        "Scheduling dominance",
        pass,
        &format!(
            "{ok}/{runs} scenarios dominate; mean CE gain over unscheduled {:.2}%, over PM {:.2}%",
            100.0 * improvement_unsched / runs as f64,
            100.0 * improvement_pm / runs as f64
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_admission_calibration() {
    let p = calibrate_admission();
    let x = 7.5;
    let rho = |g, t| accept_probability(g, x, t, &p).unwrap();
    let mut ok = rho(0.0, 0.0) == 1.0 && rho(0.0, 37.0) == 1.0 && rho(x, 0.0) == 0.0 && rho(x, 60.0) == 0.0;
    let e1 = (rho(0.5 * x, 0.0) - 0.05).abs();
    let e2 = (rho(0.9 * x, 60.0) - 0.95).abs();
    ok &= e1 <= 1e-12 && e2 <= 1e-12;
    let mut grid_ok = true;
    for kappa in [0.0, 0.25, 0.5] {
        let p = p.with_kappa(kappa).unwrap();
        for i in 0..=40 {
            for j in 0..=60 {
                let g = x * i as f64 / 40.0;
                let t = j as f64;
                let r = accept_probability(g, x, t, &p).unwrap();
                if i < 40 && accept_probability(x * (i + 1) as f64 / 40.0, x, t, &p).unwrap() > r {
                    grid_ok = false;
                }
                if j < 60 && accept_probability(g, x, t + 1.0, &p).unwrap() < r {
                    grid_ok = false;
                }
            }
        }
    }
    let pass = ok && grid_ok;
    verdict(
        5,
        "Admission calibration",
        pass,
        &format!("|rho(0.5x,0)-0.05| {e1:.1e}, |rho(0.9x,60)-0.95| {e2:.1e}, monotone grid: {grid_ok}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_realtime_management() {
    let start = std::time::Instant::now();
    let sc = Scenario::default();
    let prep = cli::prepare(&sc).unwrap();
    let purchase = cli::realtime_schedule(&sc, &prep).unwrap();
    let strict = cli::realtime_batch(&sc, &prep, &purchase.profile, 0.0, 1000).unwrap();
    let slack = cli::realtime_batch(&sc, &prep, &purchase.profile, 0.5, 1000).unwrap();
    let f0 = cli::summarize(&strict, 0.0, 20, (0.5, 1.5)).fraction_ratio_above_one;
    let f5 = cli::summarize(&slack, 0.5, 20, (0.5, 1.5)).fraction_ratio_above_one;
    let secs = start.elapsed().as_secs_f64();
    let pass = f5 > f0;
    verdict(
        6,
        "Real-time management",
        pass,
        &format!(
            "fraction CE(managed)/CE(unmanaged) > 1: kappa=0 {:.2}%, kappa=0.5 {:.2}% over 1000 runs each, {secs:.1} s",
            100.0 * f0,
            100.0 * f5
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_reallocation_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut traces = 0;
    let mut worst_sum = 0.0f64;
    let mut worst_obj = 0.0f64;
    while traces < 1000 {
        let n = rng.random_range(1..=5);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..20.0)).collect();
        let a1 = rng.random_range(0..n);
        let mut g: Vec<f64> = x.iter().map(|&v| rng.random_range(0.0..=v)).collect();
        g[a1] = x[a1];
        let omega: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let mut state = SlotState::new(0, x.clone(), 1.0);
        state.consumed = g;
        state.elapsed_min = rng.random_range(0.5..60.0);
        let Ok((lo, hi)) = reset_bounds(&state, AppId(a1), &omega) else {
            continue;
        };
        let out = reallocate(&x, &lo, &hi, &omega).unwrap();
        let total: f64 = x.iter().sum();
        worst_sum = worst_sum.max((out.iter().sum::<f64>() - total).abs() / total.max(1.0));
        let value: f64 = out.iter().zip(&omega).map(|(a, b)| a * b).sum();
        let (best, _) = max_weighted_fill(&omega, &lo, &hi, total).unwrap();
        worst_obj = worst_obj.max((value - best).abs());
        traces += 1;
    }
    let pass = worst_sum <= 1e-12 && worst_obj <= 1e-9;
    verdict(
        7,
        "Reallocation conservation",
        pass,
        &format!("1000 traces, max relative sum drift {worst_sum:.1e}, max objective gap {worst_obj:.1e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_longterm_curve_shape() {
    let mut ok = true;
    for plan in BundlePlan::presets() {
        let cap = plan.cap_mb;
        ok &= peak_volume(&plan) == Ok(cap);
        let at_cap = monthly_ce(cap, &plan, 1.0).unwrap();
        for i in 1..=2000 {
            let below = cap * i as f64 / 2000.0;
            let above = cap * (1.0 + i as f64 / 1000.0);
            ok &= monthly_ce(below, &plan, 1.0).unwrap() <= at_cap;
            ok &= monthly_ce(above, &plan, 1.0).unwrap() < at_cap;
            let next = cap * (1.0 + (i + 1) as f64 / 1000.0);
            ok &= monthly_ce(next, &plan, 1.0).unwrap() < monthly_ce(above, &plan, 1.0).unwrap();
        }
    }
    let ce500 = monthly_ce(500.0, &BundlePlan::preset("500MB").unwrap(), 1.0).unwrap();
    let pass = ok && (ce500 - 33.33).abs() <= 0.01;
    verdict(
        8,
        "Long-term curve shape",
        pass,
        &format!("peaks at caps and strictly decreasing beyond: {ok}; CE(500 MB, 500MB plan) = {ce500:.4}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_workload_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_mean = 0.0f64;
    let mut worst_var = 0.0f64;
    for spec in AppTrafficSpec::table_presets() {
        let (mu, s2) = lognormal_params(spec.mean_volume_kb, spec.var_volume).unwrap();
        let d = LogNormal::new(mu, s2.sqrt()).unwrap();
        let draws: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        worst_mean = worst_mean.max((mean / spec.mean_volume_kb - 1.0).abs());
        worst_var = worst_var.max((var / spec.var_volume - 1.0).abs());
    }

    // the sampler at both range midpoints of every app
    let mut worst_z = 0.0f64;
    for spec in AppTrafficSpec::table_presets() {
        for (lo, hi) in [spec.lambda_fg_range, spec.lambda_bg_range] {
            let lambda = 0.5 * (lo + hi);
            let d = Poisson::new(lambda).unwrap();
            let n = 100_000;
            let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
            worst_z = worst_z.max((mean - lambda).abs() / (lambda / n as f64).sqrt());
        }
    }
    // the generator's own counts, pooled over every (slot, app) cell of 400 days
    let model = WorkloadModel::new(AppTrafficSpec::table_presets(), OperationCycle::default());
    let rates = model.draw_rates(9).unwrap();
    let days = model.generate_days(&rates, 9, 0..400).unwrap();
    let (mut observed, mut expected) = (0.0, 0.0);
    for slot in 0..24 {
        for a in 0..5 {
            expected += rates.fg[slot][a] * days.len() as f64;
            observed += days.iter().map(|d| f64::from(d.history.tau[slot][a])).sum::<f64>();
        }
    }
    let pooled_z = (observed - expected) / expected.sqrt();
    let pass = worst_mean <= 0.02 && worst_var <= 0.10 && worst_z <= 3.0 && pooled_z.abs() <= 3.0;
    verdict(
        9,
        "Workload statistics",
        pass,
        &format!(
            "max mean error {:.2}% (tol 2%), max variance error {:.2}% (tol 10%), Poisson max |z| {worst_z:.2}, generator pooled z {pooled_z:.2} (tol 3)",
            100.0 * worst_mean,
            100.0 * worst_var
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_determinism() {
    let base = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut files = 0;
    for command in ["dayahead", "realtime", "longterm", "limited", "gen"] {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let sc = Scenario {
                seed: 42,
                runs: 50,
                decision_log: true,
                out: base.path().join(format!("{command}_{rep}")),
                ..Scenario::default()
            };
            match command {
                "dayahead" => cli::run_dayahead(&sc).map(drop),
                "realtime" => cli::run_realtime(&sc).map(drop),
                "longterm" => cli::run_longterm(&sc).map(drop),
                "limited" => cli::run_limited(&sc, Some(3)).map(drop),
                _ => cli::run_gen(&sc).map(drop),
            }
            .unwrap();
            let mut entries: Vec<_> = std::fs::read_dir(&sc.out)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            entries.sort();
            let contents: Vec<(String, Vec<u8>)> = entries
                .iter()
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
                .collect();
            outputs.push(contents);
        }
        files += outputs[0].len();
        // scenario.json embeds the output path, which differs between the two runs
        let strip = |v: &Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
            v.iter().filter(|(n, _)| n != "scenario.json").cloned().collect()
        };
        identical &= strip(&outputs[0]) == strip(&outputs[1]) && !outputs[0].is_empty();
    }
    let pass = identical;
    verdict(
        10,
        "Determinism",
        pass,
        &format!("5 subcommands run twice, {files} files per pass compared byte for byte: identical {identical}"),
    );
    assert!(pass);
}

#[test]
fn limited_with_all_apps_matches_dayahead() {
    let sc = Scenario {
        limited_mode: cli::ScheduleMode::Elastic,
        ..Scenario::default()
    };
    let prep = cli::prepare(&sc).unwrap();
    let r = cli::dayahead(&sc, &prep).unwrap();
    for strategy in [ExclusionStrategy::AccessFrequency, ExclusionStrategy::Demand] {
        let (row, _) = cli::limited_ce(&sc, &prep, strategy, 5).unwrap();
        assert!((row.ce - r.ce_elastic.cost_efficiency).abs() < 1e-12);
    }
    let (_, s) = cli::limited_ce(&sc, &prep, ExclusionStrategy::Demand, 2).unwrap();
    let chosen = cli::select_apps(&prep, ExclusionStrategy::Demand, 2);
    let reference = &prep.latest().profile;
    for a in (0..5).filter(|a| !chosen.contains(a)) {
        for k in 0..24 {
            assert!((s.profile.x[k][a] - reference.x[k][a]).abs() < 1e-9);
        }
    }
}
