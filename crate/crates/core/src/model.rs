//! Parameters, scalings, classical solutions and quadrature maps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, NopoError, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Cavity rates, nonlinearity and drive in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub gamma0: f64,
    pub gamma: f64,
    pub chi: f64,
    pub drive: Complex64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0) || !self.gamma0.is_finite() {
            return Err(param("gamma0", format!("must be positive, got {}", self.gamma0)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(param("gamma", format!("must be positive, got {}", self.gamma)));
        }
        if !(self.chi >= 0.0) || !self.chi.is_finite() {
            return Err(param("chi", format!("must be non-negative, got {}", self.chi)));
        }
        if !self.drive.is_finite() {
            return Err(param("drive", "must be finite"));
        }
        Ok(())
    }

    /// Build the unit-gamma parameter set that realises (g², γᵣ, μ) with a real drive.
    pub fn from_scaled(g2: f64, gamma_r: f64, mu: f64) -> Result<Self> {
        if !(g2 >= 0.0) || !g2.is_finite() {
            return Err(param("g2", format!("must be non-negative, got {g2}")));
        }
        if !(gamma_r > 0.0) || !gamma_r.is_finite() {
            return Err(param("gamma_r", format!("must be positive, got {gamma_r}")));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(param("mu", format!("must be non-negative, got {mu}")));
        }
        let g = g2.sqrt();
        let chi = g * (2.0 * gamma_r).sqrt();
        let drive = if mu == 0.0 {
            0.0
        } else if g == 0.0 {
            return Err(param("g2", "a nonzero drive needs g > 0 to define the threshold"));
        } else {
            mu * gamma_r / chi
        };
        Ok(Self {
            gamma0: gamma_r,
            gamma: 1.0,
            chi,
            drive: Complex64::new(drive, 0.0),
        })
    }

    /// Message when the coupling is too strong for the weak-nonlinearity regime.
    pub fn validity_warning(&self) -> Option<String> {
        let r = self.chi / self.gamma;
        (r > 0.1).then(|| format!("chi/gamma = {r:.3} exceeds 0.1; perturbative results may not apply"))
    }
}

/// Dimensionless parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub gamma_r: f64,
    pub mu: f64,
    pub g: f64,
    /// Threshold drive; infinite when chi = 0.
    pub e_crit: f64,
}

impl ScaledParams {
    pub fn has_threshold(&self) -> bool {
        self.e_crit.is_finite()
    }

    pub fn g2(&self) -> f64 {
        self.g * self.g
    }
}

/// Near-threshold scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalParams {
    pub eta: f64,
    /// Factor converting physical time to critical time.
    pub tau_scale: f64,
}

impl CriticalParams {
    pub fn new(sp: &ScaledParams, gamma: f64) -> Result<Self> {
        if !(sp.g > 0.0) {
            return Err(NopoError::Scaling);
        }
        Ok(Self {
            eta: 2.0 * (sp.mu - 1.0) / sp.g,
            tau_scale: gamma * sp.g,
        })
    }
}

pub fn derive_scaled(p: &PhysicalParams) -> Result<ScaledParams> {
    p.validate()?;
    if let Some(w) = p.validity_warning() {
        log::warn!("{w}");
    }
    let gamma_r = p.gamma0 / p.gamma;
    let g = p.chi / (p.gamma * (2.0 * gamma_r).sqrt());
    let e_crit = if p.chi == 0.0 {
        f64::INFINITY
    } else {
        p.gamma * p.gamma0 / p.chi
    };
    let mu = p.drive.norm() / e_crit;
    Ok(ScaledParams {
        gamma_r,
        mu,
        g,
        e_crit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    PositiveP,
    TruncatedWigner,
}

/// One trajectory's amplitudes.
///
/// Positive-P order is (α₀, α₀⁺, α₁, α₁⁺, α₂, α₂⁺); Wigner order is (α₀, α₁, α₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhaseState {
    PositiveP([Complex64; 6]),
    TruncatedWigner([Complex64; 3]),
}

impl PhaseState {
    pub fn zero(rep: Representation) -> Self {
        match rep {
            Representation::PositiveP => Self::PositiveP([Complex64::default(); 6]),
            Representation::TruncatedWigner => Self::TruncatedWigner([Complex64::default(); 3]),
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            Self::PositiveP(_) => Representation::PositiveP,
            Self::TruncatedWigner(_) => Representation::TruncatedWigner,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes().iter().all(|z| z.is_finite())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        match self {
            Self::PositiveP(a) => a,
            Self::TruncatedWigner(a) => a,
        }
    }

    /// (α₀, α₀⁺, α₁, α₁⁺, α₂, α₂⁺) with conjugates filled in for Wigner.
    pub fn expanded(&self) -> [Complex64; 6] {
        match *self {
            Self::PositiveP(a) => a,
            Self::TruncatedWigner([a0, a1, a2]) => [a0, a0.conj(), a1, a1.conj(), a2, a2.conj()],
        }
    }
}

/// Classical stationary amplitudes (α₀, α₁, α₂).
///
/// Above threshold the free phase is fixed so that α₁ = α₂ and the pump keeps the
/// drive's phase; for a real positive drive the signals are real positive.
pub fn classical_steady_state(p: &PhysicalParams) -> [Complex64; 3] {
    let z = Complex64::default();
    if p.chi == 0.0 {
        return [p.drive / p.gamma0, z, z];
    }
    let e_c = p.gamma * p.gamma0 / p.chi;
    let e = p.drive.norm();
    if e < e_c {
        return [p.drive / p.gamma0, z, z];
    }
    let phase = Complex64::from_polar(1.0, p.drive.arg());
    let half = Complex64::from_polar(1.0, 0.5 * p.drive.arg());
    let amp = ((e - e_c) / p.chi).sqrt();
    [phase * (e_c / p.gamma0), half * amp, half * amp]
}

/// Deterministic drift of the three-mode classical equations.
pub fn classical_drift(p: &PhysicalParams, a: &[Complex64; 3]) -> [Complex64; 3] {
    let [a0, a1, a2] = *a;
    [
        p.drive - p.gamma0 * a0 - p.chi * a1 * a2,
        -p.gamma * a1 + p.chi * a2.conj() * a0,
        -p.gamma * a2 + p.chi * a1.conj() * a0,
    ]
}

/// Unscaled complex quadratures of one state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Quadratures {
    pub x0: Complex64,
    pub y0: Complex64,
    pub x: Complex64,
    pub y: Complex64,
    pub xp: Complex64,
    pub yp: Complex64,
}

impl Quadratures {
    pub fn from_amplitudes(a: &[Complex64; 6], theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, -theta);
        let rc = r.conj();
        let [a0, a0p, a1, a1p, a2, a2p] = *a;
        let (a0, a0p) = (a0 * r, a0p * rc);
        let (a1, a1p) = (a1 * r, a1p * rc);
        let (a2, a2p) = (a2 * r, a2p * rc);
        Self {
            x0: a0 + a0p,
            y0: -I * (a0 - a0p),
            x: a1 + a2p,
            y: -I * (a1 - a2p),
            xp: a2 + a1p,
            yp: -I * (a2 - a1p),
        }
    }
}

/// Scaled quadratures at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub time: f64,
    pub x0: Complex64,
    pub y0: Complex64,
    pub x: Complex64,
    pub y: Complex64,
    pub xp: Complex64,
    pub yp: Complex64,
}

impl QuadratureSample {
    pub fn at(mut self, time: f64) -> Self {
        self.time = time;
        self
    }
}

pub fn quadratures_from_state(s: &PhaseState, g: f64, gamma_r: f64, theta: f64) -> QuadratureSample {
    let q = Quadratures::from_amplitudes(&s.expanded(), theta);
    let s0 = g * (2.0 * gamma_r).sqrt();
    QuadratureSample {
        time: 0.0,
        x0: q.x0 * s0,
        y0: q.y0 * s0,
        x: q.x * g,
        y: q.y * g,
        xp: q.xp * g,
        yp: q.yp * g,
    }
}

/// Quadratures in the near-threshold frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticalSample {
    pub time: f64,
    pub x0: Complex64,
    pub y0: Complex64,
    pub x: Complex64,
    pub y: Complex64,
    pub xp: Complex64,
    pub yp: Complex64,
}

pub fn critical_rescale(sp: &ScaledParams, q: &QuadratureSample) -> Result<CriticalSample> {
    let g = sp.g;
    if !(g > 0.0) {
        return Err(NopoError::Scaling);
    }
    let sg = g.sqrt();
    Ok(CriticalSample {
        time: q.time,
        // the scaled pump quadrature already equals χX₀/γ
        x0: (q.x0 - 2.0) / g,
        y0: q.y0 / (g * sg),
        x: q.x / sg,
        y: q.y / g,
        xp: q.xp / sg,
        yp: q.yp / g,
    })
}
