//! Acceptance protocol. Prints one PASS/FAIL line per criterion and exits nonzero if any fail.
//!
//! Long protocols run in reduced form unless NOPO_FULL_PROTOCOL=1.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nopo_core::analytic::{self, critical_xx, linear_spectra, spectrum_plusp, windowed_linear_spectra};
use nopo_core::epr::{duan_simon_flag, epr_flag, inference_variance};
use nopo_core::sde::{run_critical_ensemble, CriticalConfig};
use nopo_core::spectra::{intracavity_moments, nonlinear_residual};
use nopo_core::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn full_protocol() -> bool {
    std::env::var("NOPO_FULL_PROTOCOL").map(|v| v == "1").unwrap_or(false)
}

fn spectra_plan(t_seg: f64, shadow: bool) -> ObservablePlan {
    ObservablePlan {
        spectra: Some(SpectralSettings { t_seg, omega_max: 10.0, thetas: Vec::new(), shadow }),
        ..Default::default()
    }
}

/// Linear oracle at g² = 1e-4; the same run supplies the moments for criterion 9.
fn linear_run() -> EnsembleResult {
    let p = PhysicalParams::from_scaled(1e-4, 1.0, 0.5).unwrap();
    let cfg = IntegratorConfig { t_record: 2000.0, n_traj: 500, seed: 1, ..Default::default() };
    run_ensemble(&p, &cfg, &spectra_plan(100.0, false)).unwrap()
}

fn criterion_1(e: &EnsembleResult) -> Verdict {
    let s = e.spectra.as_ref().unwrap();
    // the oracle is linear theory as seen by the finite-segment estimator; the bare Lorentzian is reported alongside
    let (mut worst, mut at, mut over, mut over_bare, mut mean_bare) = (0.0f64, 0.0, 0, 0, 0.0);
    for (k, &w) in s.omega.iter().enumerate() {
        let target = windowed_linear_spectra(0.5, w, s.t_seg).unwrap().1;
        let z = (s.v_pi2[k] - target).abs() / s.v_pi2_se[k];
        let z_bare = (s.v_pi2[k] - linear_spectra(0.5, w).1) / s.v_pi2_se[k];
        over += (z > 3.0) as usize;
        over_bare += (z_bare.abs() > 3.0) as usize;
        mean_bare += z_bare / s.omega.len() as f64;
        if z > worst {
            worst = z;
            at = w;
        }
    }
    verdict(
        over == 0,
        format!(
            "{} bins in [0,10], max |z| = {worst:.2} at Ω = {at:.3}, {over} bins beyond 3σ \
             (Gaussian expectation {:.2}); against the infinite-segment Lorentzian {over_bare} bins beyond 3σ, \
             mean z = {mean_bare:.2}",
            s.omega.len(),
            0.0027 * s.omega.len() as f64
        ),
    )
}

fn criterion_9(e: &EnsembleResult) -> Verdict {
    let m = intracavity_moments(e);
    let checks = [("x0_2", m.x0_2, -2.0 / 3.0), ("xx1", m.xx1, 1.0), ("yy1", m.yy1, -1.0 / 3.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, est, target) in checks {
        let z = est.z(target);
        pass &= z <= 3.0;
        parts.push(format!("{name} = {:.4} ± {:.4} vs {target:.4} (z = {z:.1})", est.value, est.se));
    }
    // the pump balance ⟨x₀⁽²⁾⟩ = ⟨yy⁺⟩ − ⟨xx⁺⟩ = −2μ/(1−μ²) at first order
    parts.push(format!("drift balance gives x0_2 = {:.4}", -1.0 / 0.75));
    verdict(pass, parts.join("; "))
}

/// Relative RMS of simulated minus analytic correction over bins where the correction is at least 10% of its peak.
fn dip_rms(omega: &[f64], residual: &[f64], mu: f64, gamma_r: f64, g2: f64) -> (f64, usize) {
    let an: Vec<f64> = omega
        .iter()
        .map(|&w| spectrum_plusp(mu, gamma_r, g2, w).unwrap().1 - linear_spectra(mu, w).1)
        .collect();
    let peak = an.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut num, mut den, mut n) = (0.0, 0.0, 0);
    for (r, a) in residual.iter().zip(&an) {
        if a.abs() >= 0.1 * peak {
            num += (r - a).powi(2);
            den += a * a;
            n += 1;
        }
    }
    ((num / den).sqrt(), n)
}

fn criterion_2() -> Verdict {
    let (n_traj, t_record, tol) = if full_protocol() { (2000, 10_000.0, 0.02) } else { (500, 1000.0, 0.05) };
    let p = PhysicalParams::from_scaled(0.005, 1.0, 0.5).unwrap();
    let cfg = IntegratorConfig { t_record, n_traj, seed: 2, ..Default::default() };
    let e = run_ensemble(&p, &cfg, &spectra_plan(100.0, true)).unwrap();
    let r = nonlinear_residual(e.spectra.as_ref().unwrap(), 0.5);
    let (rms, n) = dip_rms(&r.omega, &r.residual, 0.5, 1.0, 0.005);
    verdict(
        rms <= tol,
        format!("{n_traj} trajectories × τ = {t_record}: relative RMS {:.2}% over {n} dip bins (limit {:.0}%)", 100.0 * rms, 100.0 * tol),
    )
}

fn criterion_3() -> Verdict {
    let (mu, gamma_r, g2) = (0.93, 0.01, 0.001);
    let cfg = if full_protocol() {
        IntegratorConfig { t_record: 10_000.0, n_traj: 2000, seed: 3, ..Default::default() }
    } else {
        IntegratorConfig { t_record: 5000.0, n_traj: 50, t_burn: Some(1000.0), seed: 3, ..Default::default() }
    };
    let p = PhysicalParams::from_scaled(g2, gamma_r, mu).unwrap();
    let e = run_ensemble(&p, &cfg, &spectra_plan(100.0, true)).unwrap();
    let r = nonlinear_residual(e.spectra.as_ref().unwrap(), mu);
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (k, &w) in r.omega.iter().enumerate() {
        let an = spectrum_plusp(mu, gamma_r, g2, w).unwrap().1 - linear_spectra(mu, w).1;
        let d = (r.residual[k] - an).abs();
        if d > worst {
            worst = d;
            at = w;
        }
    }
    verdict(
        worst <= 3e-4,
        format!("{} trajectories × τ = {}: max |sim − analytic| = {worst:.2e} at Ω = {at:.3}", cfg.n_traj, cfg.t_record),
    )
}

fn criterion_4() -> Verdict {
    let mu = analytic::optimal_drive(0.01, 0.001, 0.5, 0.999).unwrap();
    verdict((0.91..=0.95).contains(&mu), format!("argmin V^(π/2)(0) at μ = {mu:.5}"))
}

fn criterion_5() -> Verdict {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let mu = 0.99 * i as f64 / 99.0;
        for j in 0..100 {
            let w = 10.0 * j as f64 / 99.0;
            worst = worst.max((analytic::heisenberg_product_linear(mu, w) - 1.0).abs());
        }
    }
    let product_at = |mu: f64| {
        let (v0, vp) = spectrum_plusp(mu, 10.0, 0.001, 0.0).unwrap();
        v0 * vp
    };
    let product = product_at(0.99);
    // lower edge of the below-one region that reaches μ = 0.99
    let first_below = (0..=990).rev().map(|i| 0.001 * i as f64).take_while(|&mu| product_at(mu) < 1.0).last();
    // negative because the order-g² part of V⁰ outgrows the linear part, where the expansion stops applying
    verdict(
        worst <= 1e-12 && product < 1.0,
        format!(
            "linear grid max |V⁰V^(π/2) − 1| = {worst:.1e}; nonlinear product at μ = 0.99, γr = 10: {product:.4} \
             (below 1 for μ ≥ {})",
            first_below.map_or("none".into(), |m| format!("{m:.3}"))
        ),
    )
}

fn criterion_6() -> Verdict {
    let target = 2.0 / PI.sqrt();
    let reduced = run_critical_ensemble(0.0, &CriticalConfig { seed: 6, ..Default::default() }).unwrap();
    let rel_reduced = (reduced.r2.value - target).abs() / target;
    let oracle = (critical_xx(0.0) - target).abs();
    let p = PhysicalParams::from_scaled(1e-4, 1.0, 1.0).unwrap();
    let cfg = IntegratorConfig { dt: 0.002, t_record: 5000.0, t_burn: Some(1000.0), n_traj: 100, seed: 6, ..Default::default() };
    let plan = ObservablePlan { moment_block: 100.0, ..Default::default() };
    let full = intracavity_moments(&run_ensemble(&p, &cfg, &plan).unwrap()).critical_xx;
    let rel_full = (full.value - target).abs() / target;
    verdict(
        rel_reduced <= 0.02 && oracle <= 1e-6 && rel_full <= 0.05,
        format!(
            "reduced SDE {:.4} ± {:.4} ({:.2}%); oracle error {oracle:.1e}; positive-P at μ = 1: {:.4} ± {:.4} ({:.2}%)",
            reduced.r2.value,
            reduced.r2.se,
            100.0 * rel_reduced,
            full.value,
            full.se,
            100.0 * rel_full
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (gamma_r, g) in [(0.01, 0.001f64.sqrt()), (1.0, 0.01), (10.0, 0.1)] {
        let eta = analytic::optimal_critical_eta(gamma_r, g, -10.0, 10.0);
        pass &= eta > 0.0;
        parts.push(format!("η*(γr = {gamma_r}, g = {g:.3}) = {eta:.4}"));
    }
    // one closed form serves both representations; the perturbative corrections converge as μ → 1
    let (pp, w) = (
        analytic::total_squeeze_moment(0.99, 1.0, 0.001, Representation::PositiveP).unwrap(),
        analytic::total_squeeze_moment(0.99, 1.0, 0.001, Representation::TruncatedWigner).unwrap(),
    );
    let lin = 1.0 / 1.99;
    let rel = ((pp - lin) - (w - lin)).abs() / (pp - lin).abs();
    pass &= rel < 0.05;
    parts.push(format!("positive-P vs Wigner correction gap at μ = 0.99: {:.2}%", 100.0 * rel));
    verdict(pass, parts.join("; "))
}

fn criterion_8() -> Verdict {
    let (g2, gamma_r) = (0.005, 1.0);
    let p = PhysicalParams::from_scaled(g2, gamma_r, 0.0).unwrap();
    let plan = ObservablePlan { triple: Some(TripleSettings { t_seg: 20.0, k_max: 3 }), ..Default::default() };
    let run = |rep, n_traj| {
        let cfg = IntegratorConfig { representation: rep, t_record: 4000.0, t_burn: Some(20.0), n_traj, seed: 8, ..Default::default() };
        run_ensemble(&p, &cfg, &plan).unwrap().triple.unwrap().1
    };
    let pp = run(Representation::PositiveP, 20);
    let pp_zero = pp.values.iter().flatten().zip(pp.se_re.iter().flatten().zip(pp.se_im.iter().flatten())).all(
        |(v, (sr, si))| v.re.abs() <= 3.0 * sr && v.im.abs() <= 3.0 * si,
    );
    let w = run(Representation::TruncatedWigner, 300);
    let c = w.index_of(0.0).unwrap();
    let (v, sr, si) = (w.values[c][c], w.se_re[c][c], w.se_im[c][c]);
    let an = analytic::triple_wigner(0.0, gamma_r, 0.0, 0.0, g2.sqrt()).unwrap();
    let nonzero = v.re.abs() > 3.0 * sr;
    let matches = (v.re - an.re).abs() <= 3.0 * sr && (v.im - an.im).abs() <= 3.0 * si;
    verdict(
        pp_zero && nonzero && matches,
        format!(
            "positive-P grid zero within bands: {pp_zero}; Wigner (0,0) = {:.3e}{:+.3e}i ± ({sr:.1e}, {si:.1e}) vs analytic {:.3e}",
            v.re, v.im, an.re
        ),
    )
}

fn criterion_10() -> Verdict {
    let (gamma_r, g2) = (0.01, 0.001);
    let (v0, vp) = spectrum_plusp(0.93, gamma_r, g2, 0.0).unwrap();
    let d = inference_variance(v0, vp).unwrap();
    let strong = duan_simon_flag(vp) && epr_flag(d, d);
    let (w0, wp) = spectrum_plusp(0.05, gamma_r, g2, 0.0).unwrap();
    let dw = inference_variance(w0, wp).unwrap();
    let weak = duan_simon_flag(wp) && !epr_flag(dw, dw);
    verdict(
        strong && weak,
        format!(
            "μ = 0.93: V^(π/2) = {vp:.5}, EPR product = {:.3e}; μ = 0.05: V^(π/2) = {wp:.4}, EPR product = {:.4} (needs > 1)",
            d * d,
            dw * dw
        ),
    )
}

fn main() -> ExitCode {
    let mode = if full_protocol() { "full" } else { "reduced" };
    println!("acceptance protocol ({mode} simulation sizes)");
    let mut all = true;
    let mut report = |id: u32, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        all &= v.pass;
        println!(
            "criterion {id:>2}: {} [{:.0}s] {}",
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
    };
    let mut linear = None;
    report(1, &mut || {
        let e = linear_run();
        let v = criterion_1(&e);
        linear = Some(e);
        v
    });
    report(2, &mut criterion_2);
    report(3, &mut criterion_3);
    report(4, &mut criterion_4);
    report(5, &mut criterion_5);
    report(6, &mut criterion_6);
    report(7, &mut criterion_7);
    report(8, &mut criterion_8);
    report(9, &mut || criterion_9(linear.as_ref().unwrap()));
    report(10, &mut criterion_10);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
