use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{NopoError, Result};
use crate::model::{PhaseState, PhysicalParams, Representation};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    EulerMaruyama,
    #[default]
    SemiImplicitMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    PositiveP,
    TruncatedWigner,
    Critical,
}

impl From<Representation> for NoiseKind {
    fn from(r: Representation) -> Self {
        match r {
            Representation::PositiveP => Self::PositiveP,
            Representation::TruncatedWigner => Self::TruncatedWigner,
        }
    }
}

/// Wiener increments for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseBlock {
    /// (dW₁, dW₂, dW₁⁺, dW₂⁺)
    PositiveP([C; 4]),
    /// (dW₀, dW₁, dW₂)
    TruncatedWigner([C; 3]),
    /// (dw₊, dw₋)
    Critical([f64; 2]),
}

#[inline]
fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[inline]
pub(crate) fn plusp_noise<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> [C; 4] {
    let k = sd * std::f64::consts::FRAC_1_SQRT_2;
    let (u, v) = (normal(rng) * k, normal(rng) * k);
    let (up, vp) = (normal(rng) * k, normal(rng) * k);
    [C::new(u, v), C::new(u, -v), C::new(up, vp), C::new(up, -vp)]
}

#[inline]
pub(crate) fn wigner_noise<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> [C; 3] {
    let k = sd * std::f64::consts::FRAC_1_SQRT_2;
    let mut z = || C::new(normal(rng) * k, normal(rng) * k);
    [z(), z(), z()]
}

pub fn gen_noise<R: Rng + ?Sized>(kind: NoiseKind, rng: &mut R, dt: f64) -> NoiseBlock {
    let sd = dt.max(0.0).sqrt();
    match kind {
        NoiseKind::PositiveP => NoiseBlock::PositiveP(plusp_noise(rng, sd)),
        NoiseKind::TruncatedWigner => NoiseBlock::TruncatedWigner(wigner_noise(rng, sd)),
        NoiseKind::Critical => NoiseBlock::Critical([normal(rng) * sd, normal(rng) * sd]),
    }
}

/// Principal square root without the polar round trip.
#[inline]
pub(crate) fn csqrt(z: C) -> C {
    let r = z.re.hypot(z.im);
    if r == 0.0 {
        return C::new(0.0, 0.0);
    }
    if z.re >= 0.0 {
        let t = (0.5 * (r + z.re)).sqrt();
        C::new(t, z.im / (2.0 * t))
    } else {
        let t = (0.5 * (r - z.re)).sqrt();
        C::new(z.im.abs() / (2.0 * t), t.copysign(z.im))
    }
}

/// Rates entering the drift.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rates {
    pub drive: C,
    pub gamma0: f64,
    pub gamma: f64,
    pub chi: f64,
}

impl Rates {
    pub fn physical(p: &PhysicalParams) -> Self {
        Self { drive: p.drive, gamma0: p.gamma0, gamma: p.gamma, chi: p.chi }
    }

    /// Same dynamics with time measured in units of 1/γ.
    pub fn normalised(p: &PhysicalParams) -> Self {
        Self {
            drive: p.drive / p.gamma,
            gamma0: p.gamma0 / p.gamma,
            gamma: 1.0,
            chi: p.chi / p.gamma,
        }
    }

    #[inline]
    pub fn plusp_drift(&self, a: &[C; 6]) -> [C; 6] {
        let [a0, a0p, a1, a1p, a2, a2p] = *a;
        let (e, g0, g, k) = (self.drive, self.gamma0, self.gamma, self.chi);
        [
            e - g0 * a0 - k * a1 * a2,
            e.conj() - g0 * a0p - k * a1p * a2p,
            -g * a1 + k * a2p * a0,
            -g * a1p + k * a2 * a0p,
            -g * a2 + k * a1p * a0,
            -g * a2p + k * a1 * a0p,
        ]
    }

    #[inline]
    pub fn plusp_noise_terms(&self, a: &[C; 6], dw: &[C; 4]) -> [C; 6] {
        let s = csqrt(self.chi * a[0]);
        let sp = csqrt(self.chi * a[1]);
        let z = C::new(0.0, 0.0);
        [z, z, s * dw[0], sp * dw[2], s * dw[1], sp * dw[3]]
    }

    #[inline]
    pub fn wigner_drift(&self, a: &[C; 3]) -> [C; 3] {
        let [a0, a1, a2] = *a;
        let (e, g0, g, k) = (self.drive, self.gamma0, self.gamma, self.chi);
        [e - g0 * a0 - k * a1 * a2, -g * a1 + k * a2.conj() * a0, -g * a2 + k * a1.conj() * a0]
    }

    #[inline]
    pub fn wigner_noise_terms(&self, dw: &[C; 3]) -> [C; 3] {
        let s0 = self.gamma0.sqrt();
        let s = self.gamma.sqrt();
        [s0 * dw[0], s * dw[1], s * dw[2]]
    }
}

#[inline]
pub(crate) fn advance<const N: usize>(
    x: &[C; N],
    noise: &[C; N],
    dt: f64,
    scheme: Scheme,
    drift: impl Fn(&[C; N]) -> [C; N],
) -> [C; N] {
    match scheme {
        Scheme::EulerMaruyama => {
            let d = drift(x);
            std::array::from_fn(|i| x[i] + dt * d[i] + noise[i])
        }
        Scheme::SemiImplicitMidpoint => {
            let h = 0.5 * dt;
            let mut mid = *x;
            for _ in 0..3 {
                let d = drift(&mid);
                mid = std::array::from_fn(|i| x[i] + h * d[i] + 0.5 * noise[i]);
            }
            std::array::from_fn(|i| 2.0 * mid[i] - x[i])
        }
    }
}

fn check(next: PhaseState, prev: &PhaseState) -> Result<PhaseState> {
    if next.is_finite() {
        Ok(next)
    } else {
        Err(NopoError::IntegrationFault { steps: 1, last: Box::new(*prev) })
    }
}

/// One positive-P step in the frame of `p` (time in the units of its rates).
pub fn step_plusp(s: &PhaseState, p: &PhysicalParams, noise: &NoiseBlock, dt: f64, scheme: Scheme) -> Result<PhaseState> {
    let (PhaseState::PositiveP(a), NoiseBlock::PositiveP(dw)) = (s, noise) else {
        return Err(NopoError::Contract("step_plusp needs a positive-P state and noise block".into()));
    };
    let r = Rates::physical(p);
    let inc = r.plusp_noise_terms(a, dw);
    check(PhaseState::PositiveP(advance(a, &inc, dt, scheme, |x| r.plusp_drift(x))), s)
}

/// One truncated-Wigner step in the frame of `p`.
pub fn step_wigner(s: &PhaseState, p: &PhysicalParams, noise: &NoiseBlock, dt: f64, scheme: Scheme) -> Result<PhaseState> {
    let (PhaseState::TruncatedWigner(a), NoiseBlock::TruncatedWigner(dw)) = (s, noise) else {
        return Err(NopoError::Contract("step_wigner needs a Wigner state and noise block".into()));
    };
    let r = Rates::physical(p);
    let inc = r.wigner_noise_terms(dw);
    check(PhaseState::TruncatedWigner(advance(a, &inc, dt, scheme, |x| r.wigner_drift(x))), s)
}

/// Euler–Maruyama step of the reduced critical equations.
pub fn step_critical<R: Rng + ?Sized>(v: [f64; 2], eta: f64, rng: &mut R, dt: f64) -> [f64; 2] {
    let sd = dt.sqrt();
    let w = [normal(rng) * sd, normal(rng) * sd];
    step_critical_with(v, eta, w, dt)
}

#[inline]
pub fn step_critical_with(v: [f64; 2], eta: f64, w: [f64; 2], dt: f64) -> [f64; 2] {
    let f = eta - 0.5 * (v[0] * v[0] + v[1] * v[1]);
    [v[0] + f * v[0] * dt + w[0], v[1] + f * v[1] * dt + w[1]]
}
