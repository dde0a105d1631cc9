//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::cell::Cell;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use rydberg_xpm::blockade::{
    blockade_radius, controlled_phase, density_scan, full_blockade_phase_difference,
    hard_sphere_controlled_phase, linear_fit, BlockadeParams,
};
use rydberg_xpm::constants::{angular_from_mhz as mhz, c6_from_atomic_units};
use rydberg_xpm::fitting::{fit_spectrum, predict, Bounds, FitOptions, FitParams, SpectrumData};
use rydberg_xpm::photostatistics::{
    retrieval_efficiency, simulate_totals, unconditioned_limit, ExperimentConfig, TargetResponse,
};
use rydberg_xpm::polarization::{apply_medium, stokes, wrap_angle, PolarizationState};
use rydberg_xpm::susceptibility::{chi, linear_grid, od_and_phase, EitParams, MediumGeometry};

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c6() -> f64 {
    c6_from_atomic_units(2.3e23)
}

fn blockade_radius_check() -> Result<String, String> {
    let r = blockade_radius(c6(), mhz(3.7)).map_err(|e| e.to_string())? * 1e6;
    ensure(
        (r - 14.0).abs() <= 0.5,
        format!("R_b = {r:.3} um (14 +/- 0.5)"),
    )
}

fn hard_sphere_check() -> Result<String, String> {
    let p = EitParams::reference();
    let g = MediumGeometry::reference();
    let diff = full_blockade_phase_difference(&p, &g, mhz(-10.0), false);
    if (diff / 6.6 - 1.0).abs() > 0.10 {
        return Err(format!(
            "phase difference {diff:.4} rad outside 6.6 +/- 10%"
        ));
    }
    let est = hard_sphere_controlled_phase(14e-6, &g, diff, 0.0).map_err(|e| e.to_string())?;
    ensure(
        (est.controlled_phase - 3.0).abs() <= 0.3,
        format!(
            "phase difference {diff:.4} rad, (2R_b/L) x diff = {:.4} rad (3.0 +/- 0.3)",
            est.controlled_phase
        ),
    )
}

fn integral_check() -> Result<String, String> {
    let p = EitParams::reference();
    let g = MediumGeometry::reference();
    let c = controlled_phase(&p, &g, &BlockadeParams::reference(&g), mhz(-10.0))
        .map_err(|e| e.to_string())?;
    let v = c.controlled();
    ensure(
        (2.5..=3.3).contains(&v),
        format!("phi1 - phi0 = {v:.4} rad at 1.8e12 cm^-3 (in [2.5, 3.3])"),
    )
}

fn sign_asymmetry_check() -> Result<String, String> {
    let p = EitParams::reference();
    let g = MediumGeometry::reference();
    let blk = BlockadeParams::reference(&g);
    let a = controlled_phase(&p, &g, &blk, mhz(-10.0))
        .map_err(|e| e.to_string())?
        .controlled();
    let b = controlled_phase(&p, &g, &blk.with_sign_reversed(true), mhz(-10.0))
        .map_err(|e| e.to_string())?
        .controlled();
    let ratio = a.abs() / b.abs();
    ensure(
        b.abs() < a.abs() && ratio > 1.1,
        format!("|{a:.4}| vs reversed |{b:.4}| rad, ratio {ratio:.3} (> 1.1)"),
    )
}

fn exact_eit_check() -> Result<String, String> {
    let g = MediumGeometry::reference();
    let mut runner = TestRunner::new(Config {
        cases: 2000,
        failure_persistence: None,
        ..Config::default()
    });
    let worst_t = Cell::new(1.0f64);
    let worst_phi = Cell::new(0.0f64);
    let strategy = (0.0..=50.0f64, 0.1..60.0f64, -30.0..30.0f64);
    let res = runner.run(&strategy, |(od, omega, dc)| {
        let base = EitParams {
            gamma_rg: 0.0,
            omega_c: mhz(omega),
            delta_c: mhz(dc),
            ..EitParams::reference()
        };
        let p = FitParams {
            od_peak: od,
            ..FitParams::from_eit(&base, &g)
        }
        .to_eit(&base, &g);
        let r = od_and_phase(&chi(&p, -p.delta_c), &g);
        worst_t.set(worst_t.get().min(r.transmission()));
        worst_phi.set(worst_phi.get().max(r.phase.abs()));
        prop_assert!(r.transmission() >= 0.999);
        prop_assert!(r.phase.abs() <= 1e-6);
        Ok(())
    });
    ensure(
        res.is_ok(),
        format!(
            "2000 cases, OD <= 50: min T = {}, max |phase| = {:e}",
            worst_t.get(),
            worst_phi.get()
        ),
    )
}

fn linearity_check() -> Result<String, String> {
    let p = EitParams::reference();
    let g = MediumGeometry::reference();
    let rho: Vec<f64> = (1..=8).map(|k| k as f64 * 0.25e18).collect();
    let scan = density_scan(&p, &g, &BlockadeParams::reference(&g), mhz(-10.0), &rho)
        .map_err(|e| e.to_string())?;
    let (r0, r1) = (
        scan.fit_phase0.max_rel_residual,
        scan.fit_phase1.max_rel_residual,
    );
    ensure(
        r0 < 1e-10 && r1 < 1e-10,
        format!("max relative residual phi0 {r0:.2e}, phi1 {r1:.2e} (< 1e-10)"),
    )
}

fn azimuth_identity_check() -> Result<String, String> {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let worst = Cell::new(0.0f64);
    let strategy = (0.05..1.0f64, 0.05..1.0f64, 0.0..10.0f64, -20.0..20.0f64);
    let res = runner.run(&strategy, |(a, b, od, phi)| {
        let input = PolarizationState::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0)).unwrap();
        let out = apply_medium(&input, od, phi, f64::INFINITY);
        let az = stokes(&out).unwrap().phi();
        let err = wrap_angle(az - phi).abs();
        worst.set(worst.get().max(err));
        prop_assert!(err <= 1e-9);
        Ok(())
    });
    ensure(
        res.is_ok(),
        format!(
            "1000 random states: max |azimuth - phi| = {:.2e} rad",
            worst.get()
        ),
    )
}

fn truth() -> TargetResponse {
    let p = EitParams::reference();
    let g = MediumGeometry::reference();
    let c = controlled_phase(&p, &g, &BlockadeParams::reference(&g), mhz(-10.0)).unwrap();
    TargetResponse {
        od0: c.od0,
        phi0: c.phase0,
        od1: c.od1,
        phi1: c.phase1,
    }
}

fn estimator_check() -> Result<String, String> {
    let t = truth();
    let input = PolarizationState::balanced_for(t.od1);
    let base = ExperimentConfig {
        mean_photons_control: 0.0,
        ..ExperimentConfig::default()
    };
    let (exact, _) = t.output(false, &input, &base).map_err(|e| e.to_string())?;
    let exact = [exact.s_hv, exact.s_da, exact.s_lr];
    let seeds = 16;
    let sizes = [1_000u64, 10_000, 100_000, 1_000_000];
    let mut log_n = Vec::new();
    let mut log_err = Vec::new();
    for &n in &sizes {
        let mut sq = 0.0;
        for seed in 0..seeds {
            let cfg = ExperimentConfig {
                repetitions: n,
                rng_seed: 1000 + seed,
                ..base
            };
            let s = simulate_totals(&cfg, &t, &input, false)
                .and_then(|x| x.estimate())
                .map_err(|e| e.to_string())?;
            let est = [s.stokes.s_hv, s.stokes.s_da, s.stokes.s_lr];
            sq += est
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        }
        log_n.push((n as f64).log10());
        log_err.push((sq / (3 * seeds) as f64).sqrt().log10());
    }
    let slope = linear_fit(&log_n, &log_err).slope;
    if (slope + 0.5).abs() > 0.1 {
        return Err(format!("error slope {slope:.3} (expected -0.5 +/- 0.1)"));
    }

    let post_cfg = ExperimentConfig {
        mean_photons_control: 0.05,
        repetitions: 4_000_000,
        rng_seed: 77,
        ..ExperimentConfig::default()
    };
    let post = simulate_totals(&post_cfg, &t, &input, true)
        .and_then(|x| x.estimate())
        .map_err(|e| e.to_string())?;
    let dev = wrap_angle(post.azimuth - t.phi1);
    let all = simulate_totals(&post_cfg, &t, &input, false)
        .and_then(|x| x.estimate())
        .map_err(|e| e.to_string())?;
    let limit = unconditioned_limit(&post_cfg, &t, &input).map_err(|e| e.to_string())?;
    let mix_ok = [limit.s_hv, limit.s_da, limit.s_lr]
        .iter()
        .zip([all.stokes.s_hv, all.stokes.s_da, all.stokes.s_lr])
        .zip(all.std_errors)
        .all(|((l, e), s)| (l - e).abs() < 4.0 * s);
    ensure(
        dev.abs() < 4.0 * post.azimuth_err && mix_ok,
        format!(
            "error slope {slope:.3}; postselected azimuth {:.3} +/- {:.3} vs phi1 {:.3} ({} shots kept); unconditioned matches mixture: {mix_ok}",
            post.azimuth, post.azimuth_err, t.phi1, post.repetitions
        ),
    )
}

fn retrieval_check() -> Result<String, String> {
    let c = ExperimentConfig::default();
    let e0 = retrieval_efficiency(&c, 0.0).map_err(|e| e.to_string())?;
    let e45 = retrieval_efficiency(&c, 4.5e-6).map_err(|e| e.to_string())?;
    ensure(
        e0 == 0.2 && (e45 - 0.07).abs() < 1e-12,
        format!("eta(0) = {e0}, eta(4.5 us) = {e45}"),
    )
}

fn fit_check() -> Result<String, String> {
    let g = MediumGeometry::reference();
    let truth = EitParams::reference();
    let t = FitParams::from_eit(&truth, &g);
    let grid = linear_grid(mhz(-40.0), mhz(25.0), 200);
    let start = FitParams {
        od_peak: t.od_peak * 1.15,
        omega_c: t.omega_c * 0.9,
        gamma_rg: t.gamma_rg * 1.5,
        delta_c: t.delta_c + mhz(0.8),
    };
    let opts = FitOptions::default();
    let fit =
        |data: &SpectrumData| fit_spectrum(data, &start, &Bounds::default(), &truth, &g, &opts);

    let clean =
        SpectrumData::synthetic(&truth, &g, &grid, 0.01, None).map_err(|e| e.to_string())?;
    let r = fit(&clean).map_err(|e| e.to_string())?;
    let worst_rel = r
        .params
        .to_array()
        .iter()
        .zip(t.to_array())
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);
    if worst_rel > 1e-3 {
        return Err(format!("noiseless recovery off by {worst_rel:.2e}"));
    }

    let mut covered = 0;
    for seed in 0..100 {
        let data = SpectrumData::synthetic(&truth, &g, &grid, 0.01, Some(seed))
            .map_err(|e| e.to_string())?;
        if let Ok(r) = fit(&data) {
            let ok = r
                .params
                .to_array()
                .iter()
                .zip(r.uncertainties.to_array())
                .zip(t.to_array())
                .all(|((e, s), v)| (e - v).abs() <= 3.0 * s);
            covered += ok as usize;
        }
    }
    if covered < 95 {
        return Err(format!("coverage {covered}/100"));
    }

    // Fit transmission only, then predict the phase curve.
    let generator = predict(&t, &truth, &g, &grid).map_err(|e| e.to_string())?;
    let scale = generator.iter().map(|s| s.phase.abs()).fold(0.0, f64::max);
    let phase_dev = |p: &FitParams| -> Result<Vec<f64>, String> {
        let pred = predict(p, &truth, &g, &grid).map_err(|e| e.to_string())?;
        Ok(pred
            .iter()
            .zip(&generator)
            .map(|(a, b)| a.phase - b.phase)
            .collect())
    };
    let clean_dev = phase_dev(&r.params)?
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
    if clean_dev > 0.01 * scale {
        return Err(format!(
            "predicted phase off by {:.2}% of max |phase|",
            100.0 * clean_dev / scale
        ));
    }

    // With noise the predicted phase must agree within 4 sigma of the
    // uncertainty propagated from the fit covariance, at every detuning.
    let noisy =
        SpectrumData::synthetic(&truth, &g, &grid, 0.01, Some(2024)).map_err(|e| e.to_string())?;
    let r = fit(&noisy).map_err(|e| e.to_string())?;
    let dev = phase_dev(&r.params)?;
    let p0 = r.params.to_array();
    let mut grads = vec![[0.0; 4]; grid.len()];
    for k in 0..4 {
        let h = 1e-6 * p0[k].abs();
        let (mut up, mut down) = (p0, p0);
        up[k] += h;
        down[k] -= h;
        let a =
            predict(&FitParams::from_array(up), &truth, &g, &grid).map_err(|e| e.to_string())?;
        let b =
            predict(&FitParams::from_array(down), &truth, &g, &grid).map_err(|e| e.to_string())?;
        for (i, (x, y)) in a.iter().zip(&b).enumerate() {
            grads[i][k] = (x.phase - y.phase) / (up[k] - down[k]);
        }
    }
    let worst_z = dev
        .iter()
        .zip(&grads)
        .map(|(d, gr)| {
            let var: f64 = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| gr[i] * r.covariance[i][j] * gr[j])
                .sum();
            d.abs() / var.sqrt()
        })
        .fold(0.0, f64::max);
    let worst_noisy = dev.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    ensure(
        worst_z <= 4.0,
        format!(
            "noiseless worst rel {worst_rel:.1e}; coverage {covered}/100; predicted phase dev {:.1e}% (noiseless), \
             {:.2}% with 1% noise at {worst_z:.2} sigma",
            100.0 * clean_dev / scale,
            100.0 * worst_noisy / scale
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("blockade radius", blockade_radius_check),
        ("hard-sphere controlled phase", hard_sphere_check),
        ("radius-resolved integral", integral_check),
        ("sign asymmetry", sign_asymmetry_check),
        ("exact EIT", exact_eit_check),
        ("density linearity", linearity_check),
        ("azimuth identity", azimuth_identity_check),
        ("estimator convergence", estimator_check),
        ("retrieval curve", retrieval_check),
        ("fit recovery", fit_check),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {:>2}. {name}: {detail} ({secs:.2} s)", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
