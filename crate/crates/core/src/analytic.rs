//! Closed-form spectra, moments, triple correlations and critical-point results.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NopoError, Result};
use crate::model::Representation;
use crate::quad;

fn below_threshold(what: &'static str, mu: f64) -> Result<()> {
    if (0.0..1.0).contains(&mu) {
        Ok(())
    } else {
        Err(NopoError::Domain { what, mu })
    }
}

/// Linearised (V⁰, V^{π/2}). V⁰ is `+inf` at μ = 1, Ω = 0.
pub fn linear_spectra(mu: f64, omega: f64) -> (f64, f64) {
    let w2 = omega * omega;
    // written as ratios so that the product is exactly reciprocal near threshold
    let num = w2 + (1.0 - mu) * (1.0 - mu);
    let den = w2 + (1.0 + mu) * (1.0 + mu);
    let v_pi2 = num / den;
    let v_zero = if num == 0.0 { f64::INFINITY } else { den / num };
    (v_zero, v_pi2)
}

/// Expectation of the rectangular-window segment estimator under linear theory, for segment length `t_seg`.
/// Tends to [`linear_spectra`] as `t_seg` grows; the leading difference is relative O(1/((1∓μ)·t_seg)).
pub fn windowed_linear_spectra(mu: f64, omega: f64, t_seg: f64) -> Result<(f64, f64)> {
    below_threshold("windowed linear spectra", mu)?;
    if !(t_seg > 0.0) {
        return Err(crate::error::param("t_seg", format!("must be positive, got {t_seg}")));
    }
    // A/(Ω²+a²) seen through a Fejér window: (A/a)·Re[1/z − (1 − e^{−zT})/(T z²)], z = a − iΩ
    let fejer = |amp: f64, a: f64| {
        let z = Complex64::new(a, -omega);
        let tail = (1.0 - (-z * t_seg).exp()) / (t_seg * z * z);
        amp / a * (z.inv() - tail).re
    };
    Ok((1.0 + fejer(4.0 * mu, 1.0 - mu), 1.0 + fejer(-4.0 * mu, 1.0 + mu)))
}

pub fn heisenberg_product_linear(mu: f64, omega: f64) -> f64 {
    let (v0, vp) = linear_spectra(mu, omega);
    v0 * vp
}

/// Positive-P (V⁰, V^{π/2}) to order g².
pub fn spectrum_plusp(mu: f64, gamma_r: f64, g2: f64, omega: f64) -> Result<(f64, f64)> {
    below_threshold("positive-P spectrum", mu)?;
    let w2 = omega * omega;
    let lp = w2 + (1.0 + mu).powi(2);
    let lm = w2 + (1.0 - mu).powi(2);
    let p1 = w2 + (1.0 - mu + gamma_r).powi(2);
    let p2 = w2 + (1.0 + mu + gamma_r).powi(2);
    let bracket = |c: f64| {
        mu * (w2 + 1.0 - mu * mu) / (1.0 - mu * mu)
            + mu * mu
                * gamma_r
                * (((1.0 - mu + gamma_r) * c - w2) / ((1.0 - mu) * p1)
                    - ((1.0 + mu + gamma_r) * c - w2) / ((1.0 + mu) * p2))
    };
    let (v0_lin, vp_lin) = linear_spectra(mu, omega);
    let v_pi2 = vp_lin + 4.0 * g2 / (lp * lp) * bracket(1.0 + mu);
    let v_zero = v0_lin - 4.0 * g2 / (lm * lm) * bracket(1.0 - mu);
    Ok((v_zero, v_pi2))
}

/// Positive-P V^{π/2}(0), the dedicated zero-frequency form.
pub fn v_pi2_zero(mu: f64, gamma_r: f64, g2: f64) -> Result<f64> {
    below_threshold("zero-frequency spectrum", mu)?;
    let s = (1.0 + mu).powi(2);
    let corr = 1.0
        + 2.0 * mu * mu * gamma_r * (2.0 + gamma_r)
            / ((1.0 - mu) * ((1.0 + gamma_r).powi(2) - mu * mu));
    Ok(1.0 - 4.0 * mu / s + 4.0 * g2 * mu / (s * s) * corr)
}

/// Truncated-Wigner V^{π/2} to order g².
pub fn spectrum_wigner(mu: f64, gamma_r: f64, g2: f64, omega: f64) -> Result<f64> {
    below_threshold("Wigner spectrum", mu)?;
    let w2 = omega * omega;
    let lp = w2 + (1.0 + mu).powi(2);
    let p1 = w2 + (1.0 - mu + gamma_r).powi(2);
    let p2 = w2 + (1.0 + mu + gamma_r).powi(2);
    let pref = 2.0 * g2 / (lp * lp);
    let first = 2.0 * mu * (1.0 + w2 - mu * mu) / (1.0 - mu * mu);
    let a = (((1.0 - mu) * (1.0 - mu + gamma_r) - 2.0 * mu * mu) * w2
        + (1.0 - mu + gamma_r) * (1.0 + mu + mu * mu + mu.powi(3)))
        / ((1.0 - mu) * p1);
    let b = (((1.0 + mu) * (1.0 + mu + gamma_r) + 2.0 * mu * mu) * w2
        + (1.0 + mu + gamma_r) * (1.0 + 3.0 * mu + mu * mu - mu.powi(3)))
        / ((1.0 + mu) * p2);
    Ok(1.0 - 4.0 * mu / lp + pref * (first + gamma_r * (a + b)))
}

/// Perturbative positive-P moments, scaled frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSetPP {
    /// Tabulated depletion −2μ²/(1−μ²). Stationarity of the pump drift instead forces
    /// ⟨x₀⁽²⁾⟩ = ⟨y⁽¹⁾y⁺⁽¹⁾⟩ − ⟨x⁽¹⁾x⁺⁽¹⁾⟩ = −2μ/(1−μ²), which is what simulations return.
    pub x0_2: f64,
    pub yy1: f64,
    pub xx1: f64,
    pub yy3: f64,
    pub triple: f64,
}

/// Perturbative truncated-Wigner moments, scaled frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSetW {
    pub x0_2: f64,
    pub xx1: f64,
    pub yy1: f64,
    pub yy2: f64,
    pub yy3: f64,
    /// Sum of the three third-order triple terms.
    pub triple: f64,
}

pub fn moments_plusp(mu: f64, gamma_r: f64) -> Result<MomentSetPP> {
    below_threshold("positive-P moments", mu)?;
    let d = 1.0 - mu * mu;
    let gr = gamma_r;
    let yy3 = mu / (4.0 * (1.0 + mu) * d)
        * (mu * gr / (gr + 2.0)
            + (gr * (2.0 - mu + mu * mu) + 4.0 * (1.0 + mu)) / ((1.0 + mu) * (gr + 2.0 * (1.0 + mu))));
    Ok(MomentSetPP {
        x0_2: -2.0 * mu * mu / d,
        yy1: -mu / (1.0 + mu),
        xx1: mu / (1.0 - mu),
        yy3,
        triple: mu * mu / d * (gr / (gr + 2.0)),
    })
}

pub fn moments_wigner(mu: f64, gamma_r: f64) -> Result<MomentSetW> {
    below_threshold("Wigner moments", mu)?;
    let d = 1.0 - mu * mu;
    let gr = gamma_r;
    let s = 1.0 + mu;
    let r0 = gr / (gr + 2.0);
    let r1 = gr / (gr + 2.0 * s);
    Ok(MomentSetW {
        x0_2: -2.0 * mu * mu / d,
        xx1: 1.0 / (1.0 - mu),
        yy1: 1.0 / s,
        yy2: r0 / (2.0 * d) + r1 / (2.0 * s * s),
        yy3: -mu / (4.0 * (1.0 - mu) * s * s) * r0
            + mu / (2.0 * (1.0 - mu) * s.powi(3))
            + mu / (4.0 * s.powi(3)) * r1,
        triple: r0 / d,
    })
}

/// Intracavity squeezed-quadrature moment including the order-g² correction.
pub fn total_squeeze_moment(mu: f64, gamma_r: f64, g2: f64, rep: Representation) -> Result<f64> {
    below_threshold("total squeeze moment", mu)?;
    let gr = gamma_r;
    let s = 1.0 + mu;
    let d = 1.0 - mu * mu;
    let nl = match rep {
        Representation::PositiveP => {
            g2 * mu / (2.0 * s * d)
                * (mu * gr / (gr + 2.0)
                    + (gr * (2.0 - mu + mu * mu) + 4.0 * s) / (s * (gr + 2.0 * s)))
        }
        Representation::TruncatedWigner => {
            g2 / (2.0 * s * d)
                * (gr / (gr + 2.0)
                    + (gr * (1.0 + 3.0 * mu - 2.0 * mu * mu) + 4.0 * mu * s) / (s * (gr + 2.0 * s)))
        }
    };
    Ok(1.0 / s + nl)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Leading-order positive-P triple density ⟨x̃ỹ⁺ỹ₀⟩ coefficient of g⁴.
pub fn triple_plusp(mu: f64, gamma_r: f64, w1: f64, w2: f64) -> Result<Complex64> {
    below_threshold("positive-P triple correlation", mu)?;
    let w3 = -w1 - w2;
    let den = (-I * w3 + gamma_r)
        * (w1 * w1 + (1.0 - mu).powi(2))
        * (w2 * w2 + (1.0 + mu).powi(2));
    Ok(4.0 * mu * mu * gamma_r / (2.0 * PI).sqrt() / den)
}

/// Semiclassical triple density in scaled units, including its g⁴ factor.
pub fn triple_wigner(mu: f64, gamma_r: f64, w1: f64, w2: f64, g: f64) -> Result<Complex64> {
    below_threshold("Wigner triple correlation", mu)?;
    let w3 = -w1 - w2;
    let lm1 = w1 * w1 + (1.0 - mu).powi(2);
    let lp2 = w2 * w2 + (1.0 + mu).powi(2);
    let p3 = w3 * w3 + gamma_r * gamma_r;
    let t1 = -1.0 / ((-I * w3 + gamma_r) * lm1 * lp2);
    let t2 = gamma_r / ((-I * w1 + 1.0 - mu) * lp2 * p3);
    let t3 = gamma_r / ((-I * w2 + 1.0 + mu) * lm1 * p3);
    Ok(g.powi(4) * 4.0 * gamma_r / (2.0 * PI).sqrt() * (t1 + t2 + t3))
}

/// ⟨x x⁺⟩ at the critical point for drive offset η, from the stationary quartic density.
pub fn critical_xx(eta: f64) -> f64 {
    let u_max = 50f64.max(2.0 * eta + 30.0 * eta.max(1.0).sqrt());
    // shift the exponent by its maximum so large η cannot overflow
    let u_star = (2.0 * eta).max(0.0);
    let c = eta * u_star - u_star * u_star / 4.0;
    let w = |u: f64| (eta * u - u * u / 4.0 - c).exp();
    let den = quad::integrate(w, 0.0, u_max, 1e-10);
    let num = quad::integrate(|u| u * w(u), 0.0, u_max, 1e-10);
    num / den
}

/// Total intracavity squeezing moment near threshold; the same in both representations.
pub fn critical_squeeze_moment(eta: f64, gamma_r: f64, g: f64) -> f64 {
    0.5 - g * eta / 4.0 + g / 8.0 * ((2.0 + 2.0 * gamma_r) / (2.0 + gamma_r)) * critical_xx(eta)
}

/// Minimiser of `critical_squeeze_moment` over η by golden-section search on [lo, hi].
pub fn optimal_critical_eta(gamma_r: f64, g: f64, lo: f64, hi: f64) -> f64 {
    golden_min(|e| critical_squeeze_moment(e, gamma_r, g), lo, hi, 1e-9)
}

pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Drive that minimises the positive-P V^{π/2}(0) on [lo, hi].
pub fn optimal_drive(gamma_r: f64, g2: f64, lo: f64, hi: f64) -> Result<f64> {
    below_threshold("optimal drive search", hi)?;
    Ok(golden_min(|m| v_pi2_zero(m, gamma_r, g2).unwrap_or(f64::INFINITY), lo, hi, 1e-10))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windowed_spectra_approach_the_lorentzian() {
        let (v0, vp) = linear_spectra(0.5, 0.0);
        let (w0, wp) = windowed_linear_spectra(0.5, 0.0, 100.0).unwrap();
        // leading relative deficit 1/(aT) of the fluctuation part
        assert!(((w0 - 1.0) / (v0 - 1.0) - (1.0 - 1.0 / 50.0)).abs() < 1e-9);
        assert!(((wp - 1.0) / (vp - 1.0) - (1.0 - 1.0 / 150.0)).abs() < 1e-9);
        for w in [0.0, 0.7, 3.0, 9.9] {
            let (a, b) = linear_spectra(0.3, w);
            let (c, d) = windowed_linear_spectra(0.3, w, 1e7).unwrap();
            assert!((a - c).abs() < 1e-6 && (b - d).abs() < 1e-6);
        }
        assert!(windowed_linear_spectra(1.0, 0.0, 100.0).is_err());
    }

    #[test]
    fn linear_examples() {
        assert_eq!(linear_spectra(1.0, 0.0), (f64::INFINITY, 0.0));
        assert_eq!(linear_spectra(0.0, 2.0), (1.0, 1.0));
        let (v0, vp) = linear_spectra(0.5, 0.0);
        assert!((vp - 1.0 / 9.0).abs() < 1e-15);
        assert!((v0 - 9.0).abs() < 1e-14);
        assert!((heisenberg_product_linear(0.999, 5.0) - 1.0).abs() < 1e-12);
        assert_eq!(heisenberg_product_linear(0.0, 0.3), 1.0);
    }

    #[test]
    fn plusp_reduces_to_linear() {
        for &w in &[0.0, 0.4, 3.0] {
            let (a, b) = spectrum_plusp(0.7, 0.3, 0.0, w).unwrap();
            let (c, d) = linear_spectra(0.7, w);
            assert!((a - c).abs() < 1e-14 && (b - d).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_frequency_consistency() {
        for &mu in &[0.0, 0.1, 0.5, 0.9, 0.99] {
            for &gr in &[1e-3, 0.01, 0.5, 1.0, 10.0] {
                let a = spectrum_plusp(mu, gr, 0.001, 0.0).unwrap().1;
                let b = v_pi2_zero(mu, gr, 0.001).unwrap();
                assert!((a - b).abs() < 1e-12, "mu={mu} gr={gr}");
            }
        }
    }

    #[test]
    fn domain_guards() {
        assert!(spectrum_plusp(1.0, 1.0, 0.001, 0.0).is_err());
        assert!(spectrum_wigner(1.2, 1.0, 0.001, 0.0).is_err());
        assert!(moments_plusp(1.0, 1.0).is_err());
        assert!(triple_wigner(1.0, 1.0, 0.0, 0.0, 0.1).is_err());
        assert!(total_squeeze_moment(1.0, 1.0, 0.1, Representation::PositiveP).is_err());
    }

    #[test]
    fn optimum_drive_location() {
        let m = optimal_drive(0.01, 0.001, 0.5, 0.999).unwrap();
        assert!((m - 0.93856).abs() < 1e-4, "{m}");
    }

    #[test]
    fn wigner_distorted_vacuum() {
        let v = spectrum_wigner(0.0, 1.0, 0.01, 0.5).unwrap();
        assert!((v - 1.0).abs() > 1e-4);
    }

    #[test]
    fn wigner_matches_plusp_for_slow_pump() {
        let g2 = 0.001;
        for &mu in &[0.1f64, 0.5, 0.9] {
            for i in 0..50 {
                let w = i as f64 * 0.2;
                let a = spectrum_plusp(mu, 1e-6, g2, w).unwrap().1;
                let b = spectrum_wigner(mu, 1e-6, g2, w).unwrap();
                assert!((a - b).abs() <= 1e-4 * g2, "mu={mu} w={w}");
            }
        }
    }

    #[test]
    fn wigner_matches_plusp_near_threshold() {
        let (mu, g2) = (0.99, 0.001);
        for &gr in &[0.01, 0.1, 1.0, 10.0] {
            for i in 0..=50 {
                let w = i as f64 * 0.2;
                let lin = linear_spectra(mu, w).1;
                let a = spectrum_plusp(mu, gr, g2, w).unwrap().1 - lin;
                let b = spectrum_wigner(mu, gr, g2, w).unwrap() - lin;
                assert!((a - b).abs() <= 0.05 * a.abs(), "gr={gr} w={w}");
            }
        }
    }

    #[test]
    fn moment_examples() {
        let z = moments_plusp(0.0, 1.0).unwrap();
        for v in [z.x0_2, z.yy1, z.xx1, z.yy3, z.triple] {
            assert_eq!(v, 0.0);
        }
        let w = moments_wigner(0.0, 1.0).unwrap();
        assert_eq!((w.xx1, w.yy1), (1.0, 1.0));
        let m = moments_plusp(0.5, 1.0).unwrap();
        assert!((m.x0_2 + 2.0 / 3.0).abs() < 1e-15);
        assert!((m.xx1 - 1.0).abs() < 1e-15);
        assert!((m.yy1 + 1.0 / 3.0).abs() < 1e-15);
        assert!((m.triple - 1.0 / 9.0).abs() < 1e-15);
        let m = moments_plusp(0.5, 2.0).unwrap();
        assert!((m.triple - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn total_moment_examples() {
        use Representation::*;
        let pp = total_squeeze_moment(0.0, 1.0, 0.01, PositiveP).unwrap();
        let w = total_squeeze_moment(0.0, 1.0, 0.01, TruncatedWigner).unwrap();
        assert_eq!(pp, 1.0);
        assert!(w > 1.0);
        let lin = total_squeeze_moment(0.999999, 1.0, 0.0, PositiveP).unwrap();
        assert!((lin - 0.5).abs() < 1e-6);
        let a = total_squeeze_moment(0.5, 1e-6, 0.001, PositiveP).unwrap();
        let b = total_squeeze_moment(0.5, 1e-6, 0.001, TruncatedWigner).unwrap();
        assert!((a - b).abs() <= 1e-6);
    }

    #[test]
    fn total_moment_near_threshold_agreement() {
        use Representation::*;
        for &gr in &[0.01, 0.1, 0.5, 1.0, 10.0] {
            let lin = 1.0 / 1.99;
            let a = total_squeeze_moment(0.99, gr, 1.0, PositiveP).unwrap() - lin;
            let b = total_squeeze_moment(0.99, gr, 1.0, TruncatedWigner).unwrap() - lin;
            assert!((a - b).abs() < 0.05 * a.abs(), "gr={gr}");
        }
    }

    #[test]
    fn total_moment_from_moment_sets() {
        let (mu, gr, g2) = (0.6, 0.7, 0.003);
        let pp = moments_plusp(mu, gr).unwrap();
        let direct = 1.0 + pp.yy1 + 2.0 * g2 * pp.yy3;
        let t = total_squeeze_moment(mu, gr, g2, Representation::PositiveP).unwrap();
        assert!((direct - t).abs() < 1e-14);
        let w = moments_wigner(mu, gr).unwrap();
        let direct = w.yy1 + g2 * (w.yy2 + 2.0 * w.yy3);
        let t = total_squeeze_moment(mu, gr, g2, Representation::TruncatedWigner).unwrap();
        assert!((direct - t).abs() < 1e-14);
    }

    // Integrating the order-g² spectral correction over frequency recovers the
    // order-g² intracavity moment.
    #[test]
    fn spectral_correction_integrates_to_moment() {
        for &(mu, gr) in &[(0.5, 1.0), (0.3, 0.1), (0.8, 10.0)] {
            let nl = |w: f64| spectrum_plusp(mu, gr, 1.0, w).unwrap().1 - linear_spectra(mu, w).1;
            let i = quad::integrate_real_line(nl, 1.0, 1e-12) / (4.0 * PI);
            let m = total_squeeze_moment(mu, gr, 1.0, Representation::PositiveP).unwrap() - 1.0 / (1.0 + mu);
            assert!((i - m).abs() < 1e-8 * m.abs().max(1.0), "mu={mu} gr={gr}: {i} vs {m}");
        }
    }

    #[test]
    fn linear_y_parseval() {
        for &mu in &[0.1f64, 0.5, 0.9] {
            let i = quad::integrate_real_line(|w| -2.0 * mu / (w * w + (1.0 + mu).powi(2)), 1.0, 1e-12);
            assert!((i / (2.0 * PI) + mu / (1.0 + mu)).abs() < 1e-9);
        }
    }

    fn double_integral(f: impl Fn(f64, f64) -> f64) -> f64 {
        quad::integrate_real_line(|w1| quad::integrate_real_line(|w2| f(w1, w2), 1.0, 1e-11), 1.0, 1e-10)
    }

    #[test]
    fn triple_density_integrates_to_moment() {
        for &(mu, gr) in &[(0.5, 1.0), (0.3, 2.0)] {
            let i = double_integral(|a, b| triple_plusp(mu, gr, a, b).unwrap().re) / (2.0 * PI).powf(1.5);
            let m = moments_plusp(mu, gr).unwrap().triple;
            assert!((i - m).abs() < 1e-4 * m, "{i} vs {m}");
        }
        assert_eq!(triple_plusp(0.0, 1.0, 0.3, 0.2).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn wigner_triple_integrates_to_moment() {
        for &(mu, gr) in &[(0.0, 1.0), (0.5, 1.0)] {
            let i = double_integral(|a, b| triple_wigner(mu, gr, a, b, 1.0).unwrap().re) / (2.0 * PI).powf(1.5);
            let m = moments_wigner(mu, gr).unwrap().triple;
            assert!((i - m).abs() < 1e-4 * m, "mu={mu}: {i} vs {m}");
        }
        assert!(triple_wigner(0.0, 1.0, 0.0, 0.0, 0.1).unwrap().norm() > 0.0);
    }

    #[test]
    fn critical_xx_values() {
        assert!((critical_xx(0.0) - 2.0 / PI.sqrt()).abs() < 1e-6);
        assert!((critical_xx(-20.0) - 0.05).abs() < 0.01 * 0.05);
        assert!((critical_xx(20.0) - 40.0).abs() < 0.01 * 40.0);
        let mut prev = f64::NEG_INFINITY;
        for i in -40..=40 {
            let v = critical_xx(i as f64 * 0.5);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn critical_squeeze_examples() {
        assert!((critical_squeeze_moment(3.0, 1.0, 1e-12) - 0.5).abs() < 1e-10);
        let g = 0.01;
        let v = critical_squeeze_moment(0.0, 1e9, g);
        assert!((v - (0.5 + g / 4.0 * std::f64::consts::FRAC_2_SQRT_PI)).abs() < 1e-8);
        let e = optimal_critical_eta(1.0, g, -10.0, 10.0);
        assert!(e > 0.0);
    }
}
