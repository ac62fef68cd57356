//! Acceptance checks, one test per criterion. Each prints a PASS/FAIL line.

use std::f64::consts::PI;

use fso_adapt::adaptation::{
    average_ber_adaptive, compute_boundaries, region_probabilities, snr_db_for_spectral_efficiency,
    spectral_efficiency, sweep, SchemeTemplate,
};
use fso_adapt::link::{
    ber_average, capacity_upper_closed, capacity_upper_numeric, snr_db_for_ber, LinkBudget, ModOrder,
};
use fso_adapt::numerics::{
    gauss_hermite, gauss_legendre, integrate_truncated_normal, inverse_q, q_function,
};
use fso_adapt::simulator::{run, SimConfig, SimMode, Z95};
use fso_adapt::turbulence::{sample_fading, Fading, MimoConfig, TurbulenceParams};

fn siso(s: f64) -> Fading {
    TurbulenceParams::new(s).unwrap().into()
}

fn mimo(s: f64, f: u32, l: u32) -> Fading {
    MimoConfig::new(TurbulenceParams::new(s).unwrap(), f, l).unwrap().into()
}

fn db(x: f64) -> LinkBudget {
    LinkBudget::from_db(x).unwrap()
}

fn half_steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

fn verdict(n: u32, ok: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_1_capacity_closed_form() {
    let mut worst: f64 = 0.0;
    for s in [0.1, 0.3, 0.5] {
        for x in [10.0, 15.0, 20.0, 25.0] {
            let f = siso(s);
            let num = capacity_upper_numeric(&f, &db(x), 1.0).unwrap();
            let closed = capacity_upper_closed(&f, &db(x), 1.0).unwrap();
            worst = worst.max(((num - closed) / closed).abs());
        }
    }
    verdict(1, worst <= 1e-9, &format!("max relative gap {worst:.3e}"));
}

#[test]
fn criterion_2_ber_guarantee() {
    let grid = half_steps(0.0, 30.0, 0.5);
    let mut violations = Vec::new();
    let mut checked = 0;
    for s in [0.1, 0.3, 0.5] {
        for p_o in [1e-2, 1e-3] {
            for &x in &grid {
                let scheme = compute_boundaries(5, p_o, db(x)).unwrap();
                if let Some(ber) = average_ber_adaptive(&scheme, &siso(s)).unwrap() {
                    checked += 1;
                    if ber > p_o {
                        violations.push(format!("σ={s} P_o={p_o} {x} dB: {ber:.4e}"));
                    }
                }
            }
        }
    }
    verdict(
        2,
        violations.is_empty() && checked == 3 * 2 * grid.len(),
        &format!("{checked} points checked, violations: {violations:?}"),
    );
}

#[test]
fn criterion_3_headline_gain() {
    let f = siso(0.5);
    let adaptive =
        snr_db_for_spectral_efficiency(&SchemeTemplate::new(5, 1e-3), &f, 0.5, -20.0, 80.0).unwrap();
    let fixed = snr_db_for_ber(ModOrder::BPSK, &f, 1e-3, -20.0, 80.0).unwrap();
    let gain = fixed - adaptive;
    verdict(
        3,
        (gain - 14.0).abs() <= 1.5,
        &format!("adaptive {adaptive:.3} dB, non-adaptive {fixed:.3} dB, gain {gain:.3} dB (want 14 ± 1.5)"),
    );
}

#[test]
fn criterion_4_low_turbulence_reversal() {
    let f = siso(0.1);
    let adaptive =
        snr_db_for_spectral_efficiency(&SchemeTemplate::new(5, 1e-3), &f, 0.5, -20.0, 80.0).unwrap();
    let fixed = snr_db_for_ber(ModOrder::BPSK, &f, 1e-3, -20.0, 80.0).unwrap();
    verdict(
        4,
        fixed < adaptive,
        &format!("non-adaptive {fixed:.3} dB vs adaptive {adaptive:.3} dB"),
    );
}

#[test]
fn criterion_5_monte_carlo_fixed_bpsk() {
    let symbols = 10_000_000;
    let mut failures = Vec::new();
    let mut seed = 500;
    for s in [0.1, 0.3, 0.5] {
        for x in [5.0, 10.0, 15.0, 20.0] {
            seed += 1;
            let budget = db(x);
            let f = siso(s);
            let analytic = ber_average(ModOrder::BPSK, &f, &budget);
            let report = run(&SimConfig {
                blocks: symbols,
                symbols_per_block: 1,
                seed,
                mode: SimMode::Fixed(ModOrder::BPSK),
                channel: f,
                budget,
            })
            .unwrap();
            let hw = report.ci95_at(analytic);
            let gap = (report.ber_point - analytic).abs();
            println!(
                "  σ={s} {x:>4} dB: sim {:.5e} analytic {analytic:.5e} gap/hw {:.2}",
                report.ber_point,
                gap / hw
            );
            if gap.is_nan() || gap > 3.0 * hw {
                failures.push((s, x));
            }
        }
    }
    verdict(5, failures.is_empty(), &format!("12 points at 1e7 symbols, failures {failures:?}"));
}

#[test]
fn criterion_6_monte_carlo_adaptive() {
    let f = siso(0.3);
    let mut failures = Vec::new();
    for (k, x) in [10.0, 15.0, 20.0].into_iter().enumerate() {
        let scheme = compute_boundaries(5, 1e-3, db(x)).unwrap();
        let s = spectral_efficiency(&scheme, &f);
        let report = run(&SimConfig {
            blocks: 10_000_000,
            symbols_per_block: 1,
            seed: 600 + k as u64,
            mode: SimMode::Adaptive(scheme),
            channel: f,
            budget: db(x),
        })
        .unwrap();
        let s_gap = (report.spectral_efficiency() - s) / s;
        let ber_ok = report.ber_point <= 1e-3 + report.ber_ci95;
        println!(
            "  {x} dB: S sim {:.6} analytic {s:.6} gap {s_gap:+.4}; BER {:.4e} ± {:.2e}",
            report.spectral_efficiency(),
            report.ber_point,
            report.ber_ci95
        );
        if s_gap.abs() > 0.02 || !ber_ok {
            failures.push(x);
        }
    }
    verdict(6, failures.is_empty(), &format!("failures at {failures:?} dB"));
}

#[test]
fn criterion_7_mimo_reduction_and_crossover() {
    let template = SchemeTemplate::new(5, 1e-3);
    let grid = half_steps(0.0, 30.0, 0.5);
    let single = sweep(&template, &siso(0.3), &grid).unwrap();
    let one = sweep(&template, &mimo(0.3, 1, 1), &grid).unwrap();
    let two = sweep(&template, &mimo(0.3, 2, 2), &grid).unwrap();

    let mut identical = single == one;
    for &x in &grid {
        identical &= capacity_upper_closed(&siso(0.3), &db(x), 1.0).unwrap()
            == capacity_upper_closed(&mimo(0.3, 1, 1), &db(x), 1.0).unwrap();
    }
    let scheme = compute_boundaries(5, 1e-3, db(15.0)).unwrap();
    let sim = |channel| {
        run(&SimConfig {
            blocks: 20_000,
            symbols_per_block: 4,
            seed: 7,
            mode: SimMode::Adaptive(scheme.clone()),
            channel,
            budget: db(15.0),
        })
        .unwrap()
    };
    identical &= sim(siso(0.3)) == sim(mimo(0.3, 1, 1));

    let mut crossover = true;
    for ((x, a), b) in grid.iter().zip(&one).zip(&two) {
        let (a, b) = (a.as_ref().unwrap().spectral_eff, b.as_ref().unwrap().spectral_eff);
        if *x >= 15.0 {
            crossover &= b > a;
        }
        if *x <= 6.0 {
            crossover &= b < a;
        }
    }
    verdict(
        7,
        identical && crossover,
        &format!("1x1 bit-identical: {identical}, 2x2 crossover: {crossover}"),
    );
}

#[test]
fn criterion_8_high_snr_saturation() {
    let mut gaps = Vec::new();
    for n in [3u32, 5] {
        let scheme = compute_boundaries(n, 1e-3, db(60.0)).unwrap();
        let s = spectral_efficiency(&scheme, &siso(0.3));
        gaps.push((f64::from(n) / 2.0 - s).abs());
    }
    verdict(8, gaps.iter().all(|g| *g <= 1e-6), &format!("|S - N/2| = {gaps:?}"));
}

#[test]
fn criterion_9_property_suites() {
    let mut fails = Vec::new();

    // Quadrature moments.
    let gh = gauss_hermite(128).unwrap();
    let moment = |p: i32| gh.integrate(|x| x.powi(p));
    let sp = PI.sqrt();
    for (p, want) in [(0, sp), (2, sp / 2.0), (4, 3.0 * sp / 4.0), (6, 15.0 * sp / 8.0)] {
        if ((moment(p) - want) / want).abs() > 1e-12 {
            fails.push(format!("hermite moment {p}"));
        }
    }
    let gl = gauss_legendre(16).unwrap();
    for p in (0..=30).step_by(2) {
        let want = 2.0 / f64::from(p + 1);
        if ((gl.integrate(|x| x.powi(p)) - want) / want).abs() > 1e-12 {
            fails.push(format!("legendre moment {p}"));
        }
    }

    // Q and its inverse.
    for k in 0..=300 {
        let p = 10f64.powf(-15.0 + 15.0 * f64::from(k) / 300.0) * 0.5;
        let x = inverse_q(p).unwrap();
        if ((q_function(x).unwrap() - p) / p).abs() > 1e-10 {
            fails.push(format!("inverse_q round trip at {p:e}"));
        }
    }
    // Below -3, 1 - Q(x) is too close to 1 for an f64 round trip.
    for k in -30..=80 {
        let x = f64::from(k) / 10.0;
        let back = inverse_q(q_function(x).unwrap()).unwrap();
        if (back - x).abs() > 1e-8 {
            fails.push(format!("q round trip at {x}"));
        }
    }

    // Unit mean intensity.
    for s in [0.1, 0.3, 0.5, 1.0] {
        let law = siso(s).log_normal();
        let analytic = integrate_truncated_normal(|i| i, 0.0, f64::INFINITY, law.mu, law.sigma).unwrap();
        if (analytic - 1.0).abs() > 1e-10 {
            fails.push(format!("analytic E[I] at σ={s}: {analytic}"));
        }
    }
    for f in [siso(0.1), siso(0.3), siso(0.5), mimo(0.3, 2, 2)] {
        let draws = sample_fading(&f, 9, 1_000_000).unwrap();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        if (mean - 1.0).abs() > 0.01 {
            fails.push(format!("empirical E[I] = {mean}"));
        }
    }

    // Partition of unity and threshold scaling.
    for s in [0.1, 0.3, 0.5] {
        for x in half_steps(-10.0, 40.0, 2.5) {
            for (n, p_o) in [(1, 1e-2), (3, 1e-3), (5, 1e-3), (5, 1e-6)] {
                let scheme = compute_boundaries(n, p_o, db(x)).unwrap();
                let r = region_probabilities(&scheme, &siso(s));
                let total = r.outage + r.regions.iter().sum::<f64>();
                if (total - 1.0).abs() > 1e-10 {
                    fails.push(format!("partition σ={s} {x} dB N={n}: {total}"));
                }
                let budget = LinkBudget::from_linear(4.0 * db(x).avg_snr()).unwrap();
                let quad = compute_boundaries(n, p_o, budget).unwrap();
                for (a, b) in scheme.thresholds().iter().zip(quad.thresholds()) {
                    if ((a / 2.0 - b) / b).abs() > 1e-12 {
                        fails.push(format!("threshold scaling {x} dB N={n}"));
                    }
                }
            }
        }
    }
    let z = Z95;
    if ((q_function(z).unwrap() - 0.025) / 0.025).abs() > 1e-9 {
        fails.push("Z95 quantile".into());
    }

    verdict(9, fails.is_empty(), &format!("{} sub-check failures {fails:?}", fails.len()));
}
