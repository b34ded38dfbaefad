//! Segmented spectral estimators, moments and triple correlations.
//!
//! Transforms follow ã(Ω) = Σⱼ aⱼ Δ e^{iΩtⱼ}/√(2π) on non-overlapping rectangular
//! segments of length T, and a two-point density is (2π/T)⟨ã(Ω) b̃(−Ω)⟩.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{NopoError, Result};
use crate::model::{PhysicalParams, Quadratures, Representation};
use crate::sde::{EnsembleResult, TrajectoryRecord};
use crate::stats::{Accum, EnsembleStat, Estimate};

type C = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralSettings {
    pub t_seg: f64,
    pub omega_max: f64,
    /// Extra quadrature angles beyond 0 and π/2.
    pub thetas: Vec<f64>,
    /// Integrate a linearised companion trajectory on the same noise and report differences.
    pub shadow: bool,
}

impl Default for SpectralSettings {
    fn default() -> Self {
        Self { t_seg: 100.0, omega_max: 10.0, thetas: Vec::new(), shadow: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripleSettings {
    pub t_seg: f64,
    /// Grid indices run over −k_max..=k_max in both frequencies.
    pub k_max: usize,
}

impl Default for TripleSettings {
    fn default() -> Self {
        Self { t_seg: 20.0, k_max: 3 }
    }
}

impl TripleSettings {
    pub fn validate(&self) -> Result<()> {
        if 2 * self.k_max + 1 > 16 {
            return Err(NopoError::Parameter { field: "triple.k_max", reason: "grid is limited to 16x16".into() });
        }
        if !(self.t_seg > 0.0) {
            return Err(NopoError::Parameter { field: "triple.t_seg", reason: "must be positive".into() });
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        2 * self.k_max + 1
    }
}

/// Samples per segment for a given record spacing.
pub(crate) fn segment_len(t_seg: f64, dt_rec: f64) -> Result<usize> {
    let n = (t_seg / dt_rec).round();
    if !(n >= 2.0) || ((n * dt_rec - t_seg).abs() > 1e-9 * t_seg) {
        return Err(NopoError::Estimation(format!(
            "segment length {t_seg} is not a multiple of the record spacing {dt_rec}"
        )));
    }
    Ok(n as usize)
}

fn inverse_fft(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// Cross-spectral density of two equally spaced series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSpectrum {
    /// Ω_k = 2πk/T in transform order, negative frequencies in the upper half.
    pub omega: Vec<f64>,
    pub value: Vec<C>,
    /// Standard errors of the real and imaginary parts.
    pub se_re: Vec<f64>,
    pub se_im: Vec<f64>,
    pub segments: usize,
}

impl CrossSpectrum {
    /// (1/2π) Σ S(Ω_k) ΔΩ over the full transform band.
    pub fn band_integral(&self) -> C {
        let dw = if self.omega.len() > 1 { self.omega[1] } else { 0.0 };
        self.value.iter().sum::<C>() * dw / (2.0 * PI)
    }
}

pub fn cross_spectrum(a: &[C], b: &[C], dt_rec: f64, t_seg: f64) -> Result<CrossSpectrum> {
    if a.len() != b.len() {
        return Err(NopoError::Estimation("series lengths differ".into()));
    }
    let n = segment_len(t_seg, dt_rec)?;
    let segs = a.len() / n;
    if segs == 0 {
        return Err(NopoError::Estimation(format!(
            "series of {} samples is shorter than one segment of {n}",
            a.len()
        )));
    }
    let fft = inverse_fft(n);
    let mut scratch = vec![C::default(); fft.get_inplace_scratch_len()];
    let norm = dt_rec / n as f64;
    let mut acc = Accum::new(2 * n);
    let mut row = vec![0.0; 2 * n];
    let (mut fa, mut fb) = (vec![C::default(); n], vec![C::default(); n]);
    for s in 0..segs {
        fa.copy_from_slice(&a[s * n..(s + 1) * n]);
        fb.copy_from_slice(&b[s * n..(s + 1) * n]);
        fft.process_with_scratch(&mut fa, &mut scratch);
        fft.process_with_scratch(&mut fb, &mut scratch);
        for k in 0..n {
            let v = norm * fa[k] * fb[(n - k) % n];
            row[k] = v.re;
            row[n + k] = v.im;
        }
        acc.push(&row);
    }
    let m = acc.mean();
    let se = acc.se();
    let t = n as f64 * dt_rec;
    Ok(CrossSpectrum {
        omega: (0..n)
            .map(|k| {
                let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                2.0 * PI * kk / t
            })
            .collect(),
        value: (0..n).map(|k| C::new(m[k], m[n + k])).collect(),
        se_re: se[..n].to_vec(),
        se_im: se[n..].to_vec(),
        segments: segs,
    })
}

/// Index layout of the per-bin spectral quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Layout {
    pub bins: usize,
    pub thetas: usize,
    pub shadow: bool,
}

impl Layout {
    pub const V_PI2: usize = 0;
    pub const V_ZERO: usize = 1;
    pub const V_PI2_IM: usize = 2;

    pub fn theta(&self, j: usize) -> usize {
        3 + j
    }
    pub fn lin_pi2(&self) -> usize {
        3 + self.thetas
    }
    pub fn lin_zero(&self) -> usize {
        4 + self.thetas
    }
    pub fn diff_pi2(&self) -> usize {
        5 + self.thetas
    }
    pub fn diff_zero(&self) -> usize {
        6 + self.thetas
    }
    pub fn quantities(&self) -> usize {
        3 + self.thetas + if self.shadow { 4 } else { 0 }
    }
    pub fn len(&self) -> usize {
        self.quantities() * self.bins
    }
    pub fn at(&self, q: usize, k: usize) -> usize {
        q * self.bins + k
    }
}

/// Number of input channels per sample for a representation.
pub(crate) fn spectral_channels(rep: Representation, shadow: bool) -> usize {
    let base = match rep {
        Representation::PositiveP => 4,
        Representation::TruncatedWigner => 2,
    };
    if shadow {
        2 * base
    } else {
        base
    }
}

/// Streams samples into segments and accumulates one row of spectral quantities per segment.
///
/// Positive-P channels are (X, Y, X⁺, Y⁺); Wigner channels are the two output fields.
/// The linearised companion's channels follow in the same order when enabled.
pub(crate) struct SpectralProcessor {
    rep: Representation,
    layout: Layout,
    thetas: Vec<(f64, f64, C)>,
    n: usize,
    dt_rec: f64,
    fill: usize,
    buf: Vec<Vec<C>>,
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<C>,
    row: Vec<f64>,
    pub acc: Accum,
}

impl SpectralProcessor {
    pub fn new(rep: Representation, s: &SpectralSettings, dt_rec: f64, fft: Arc<dyn Fft<f64>>) -> Result<Self> {
        let n = segment_len(s.t_seg, dt_rec)?;
        let bins = ((s.omega_max * s.t_seg / (2.0 * PI)).floor() as usize + 1).min(n / 2);
        let layout = Layout { bins, thetas: s.thetas.len(), shadow: s.shadow };
        let nch = spectral_channels(rep, s.shadow);
        let scratch = vec![C::default(); fft.get_inplace_scratch_len()];
        Ok(Self {
            rep,
            layout,
            thetas: s.thetas.iter().map(|&t| (t.cos(), t.sin(), C::from_polar(1.0, -t))).collect(),
            n,
            dt_rec,
            fill: 0,
            buf: vec![vec![C::default(); n]; nch],
            fft,
            scratch,
            row: vec![0.0; layout.len()],
            acc: Accum::new(layout.len()),
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    #[inline]
    pub fn push(&mut self, ch: &[C]) {
        for (b, v) in self.buf.iter_mut().zip(ch) {
            b[self.fill] = *v;
        }
        self.fill += 1;
        if self.fill == self.n {
            self.flush();
            self.fill = 0;
        }
    }

    fn flush(&mut self) {
        for b in &mut self.buf {
            self.fft.process_with_scratch(b, &mut self.scratch);
        }
        let l = self.layout;
        let n = self.n;
        let norm = self.dt_rec / n as f64;
        let row = &mut self.row;
        for k in 0..l.bins {
            let km = (n - k) % n;
            match self.rep {
                Representation::PositiveP => {
                    let f = &self.buf;
                    // symmetrised ⟨ã(Ω) b̃(−Ω)⟩ over ±Ω
                    let sym = |a: [C; 2], b: [C; 2]| 0.5 * norm * (a[0] * b[1] + a[1] * b[0]);
                    let pick = |c: usize| [f[c][k], f[c][km]];
                    let (x, y, xp, yp) = (pick(0), pick(1), pick(2), pick(3));
                    let yy = sym(y, yp);
                    let xx = sym(x, xp);
                    row[l.at(Layout::V_PI2, k)] = 1.0 + 2.0 * yy.re;
                    row[l.at(Layout::V_ZERO, k)] = 1.0 + 2.0 * xx.re;
                    row[l.at(Layout::V_PI2_IM, k)] = 2.0 * yy.im;
                    for (j, &(c, s, _)) in self.thetas.iter().enumerate() {
                        let a = [c * x[0] + s * y[0], c * x[1] + s * y[1]];
                        let b = [c * xp[0] + s * yp[0], c * xp[1] + s * yp[1]];
                        row[l.at(l.theta(j), k)] = 1.0 + 2.0 * sym(a, b).re;
                    }
                    if l.shadow {
                        let yl = sym(pick(5), pick(7));
                        let xl = sym(pick(4), pick(6));
                        let vp = 1.0 + 2.0 * yl.re;
                        let v0 = 1.0 + 2.0 * xl.re;
                        row[l.at(l.lin_pi2(), k)] = vp;
                        row[l.at(l.lin_zero(), k)] = v0;
                        row[l.at(l.diff_pi2(), k)] = 2.0 * (yy.re - yl.re);
                        row[l.at(l.diff_zero(), k)] = 2.0 * (xx.re - xl.re);
                    }
                }
                Representation::TruncatedWigner => {
                    let f = &self.buf;
                    let v = |o1: usize, o2: usize, r: C| {
                        let a = r * f[o1][k] + r.conj() * f[o2][km].conj();
                        let am = r * f[o1][km] + r.conj() * f[o2][k].conj();
                        0.5 * norm * (a.norm_sqr() + am.norm_sqr())
                    };
                    let rpi2 = C::new(0.0, -1.0);
                    let one = C::new(1.0, 0.0);
                    let vp = v(0, 1, rpi2);
                    let v0 = v(0, 1, one);
                    row[l.at(Layout::V_PI2, k)] = vp;
                    row[l.at(Layout::V_ZERO, k)] = v0;
                    row[l.at(Layout::V_PI2_IM, k)] = 0.0;
                    for (j, &(_, _, r)) in self.thetas.iter().enumerate() {
                        row[l.at(l.theta(j), k)] = v(0, 1, r);
                    }
                    if l.shadow {
                        let lp = v(2, 3, rpi2);
                        let l0 = v(2, 3, one);
                        row[l.at(l.lin_pi2(), k)] = lp;
                        row[l.at(l.lin_zero(), k)] = l0;
                        row[l.at(l.diff_pi2(), k)] = vp - lp;
                        row[l.at(l.diff_zero(), k)] = v0 - l0;
                    }
                }
            }
        }
        self.acc.push(&self.row);
    }
}

/// Streams (x, y⁺, y₀) samples and accumulates the triple product on a square grid.
pub(crate) struct TripleProcessor {
    k_max: usize,
    n: usize,
    norm: f64,
    fill: usize,
    buf: [Vec<C>; 3],
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<C>,
    row: Vec<f64>,
    pub acc: Accum,
}

impl TripleProcessor {
    pub fn new(s: &TripleSettings, dt_rec: f64, fft: Arc<dyn Fft<f64>>) -> Result<Self> {
        s.validate()?;
        let n = segment_len(s.t_seg, dt_rec)?;
        if 4 * s.k_max >= n {
            return Err(NopoError::Estimation("triple grid exceeds the segment bandwidth".into()));
        }
        let side = s.side();
        let t = n as f64 * dt_rec;
        Ok(Self {
            k_max: s.k_max,
            n,
            norm: dt_rec.powi(3) / (t * (2.0 * PI).sqrt()),
            fill: 0,
            buf: [vec![C::default(); n], vec![C::default(); n], vec![C::default(); n]],
            scratch: vec![C::default(); fft.get_inplace_scratch_len()],
            fft,
            row: vec![0.0; 2 * side * side],
            acc: Accum::new(2 * side * side),
        })
    }

    #[inline]
    pub fn push(&mut self, v: [C; 3]) {
        for (b, x) in self.buf.iter_mut().zip(v) {
            b[self.fill] = x;
        }
        self.fill += 1;
        if self.fill == self.n {
            for b in &mut self.buf {
                self.fft.process_with_scratch(b, &mut self.scratch);
            }
            let n = self.n as i64;
            let km = self.k_max as i64;
            let side = 2 * self.k_max + 1;
            let idx = |k: i64| k.rem_euclid(n) as usize;
            for (i, k1) in (-km..=km).enumerate() {
                for (j, k2) in (-km..=km).enumerate() {
                    let v = self.norm * self.buf[0][idx(k1)] * self.buf[1][idx(k2)] * self.buf[2][idx(-k1 - k2)];
                    self.row[i * side + j] = v.re;
                    self.row[side * side + i * side + j] = v.im;
                }
            }
            self.acc.push(&self.row);
            self.fill = 0;
        }
    }
}

pub(crate) fn plan(n: usize) -> Arc<dyn Fft<f64>> {
    inverse_fft(n)
}

/// Output-field squeezing spectra with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub representation: Option<Representation>,
    pub omega: Vec<f64>,
    pub v_zero: Vec<f64>,
    pub v_zero_se: Vec<f64>,
    pub v_pi2: Vec<f64>,
    pub v_pi2_se: Vec<f64>,
    /// Imaginary part left after ±Ω symmetrisation (positive-P sampling noise).
    pub v_pi2_imag: Vec<f64>,
    pub thetas: Vec<ThetaSpectrum>,
    pub shadow: Option<ShadowSpectrum>,
    pub t_seg: f64,
    pub segments: u64,
    pub trajectories: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSpectrum {
    pub theta: f64,
    pub v: Vec<f64>,
    pub se: Vec<f64>,
}

/// Spectra of the linearised companion and the per-segment differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowSpectrum {
    pub v_pi2: Vec<f64>,
    pub v_zero: Vec<f64>,
    pub diff_pi2: Vec<f64>,
    pub diff_pi2_se: Vec<f64>,
    pub diff_zero: Vec<f64>,
    pub diff_zero_se: Vec<f64>,
}

impl SpectrumEstimate {
    pub(crate) fn from_stat(rep: Representation, s: &SpectralSettings, layout: Layout, stat: &EnsembleStat, segments: u64) -> Self {
        let m = stat.mean();
        let se = stat.se();
        let b = layout.bins;
        let take = |v: &Vec<f64>, q: usize| v[layout.at(q, 0)..layout.at(q, 0) + b].to_vec();
        let shadow = layout.shadow.then(|| ShadowSpectrum {
            v_pi2: take(&m, layout.lin_pi2()),
            v_zero: take(&m, layout.lin_zero()),
            diff_pi2: take(&m, layout.diff_pi2()),
            diff_pi2_se: take(&se, layout.diff_pi2()),
            diff_zero: take(&m, layout.diff_zero()),
            diff_zero_se: take(&se, layout.diff_zero()),
        });
        Self {
            representation: Some(rep),
            omega: (0..b).map(|k| 2.0 * PI * k as f64 / s.t_seg).collect(),
            v_zero: take(&m, Layout::V_ZERO),
            v_zero_se: take(&se, Layout::V_ZERO),
            v_pi2: take(&m, Layout::V_PI2),
            v_pi2_se: take(&se, Layout::V_PI2),
            v_pi2_imag: take(&m, Layout::V_PI2_IM),
            thetas: s
                .thetas
                .iter()
                .enumerate()
                .map(|(j, &theta)| ThetaSpectrum { theta, v: take(&m, layout.theta(j)), se: take(&se, layout.theta(j)) })
                .collect(),
            shadow,
            t_seg: s.t_seg,
            segments,
            trajectories: stat.trajectories(),
        }
    }

    fn from_fn(omega: &[f64], f: impl Fn(f64) -> Result<(f64, f64)>) -> Result<Self> {
        let mut v0 = Vec::with_capacity(omega.len());
        let mut vp = Vec::with_capacity(omega.len());
        for &w in omega {
            let (a, b) = f(w)?;
            v0.push(a);
            vp.push(b);
        }
        let z = vec![0.0; omega.len()];
        Ok(Self {
            representation: None,
            omega: omega.to_vec(),
            v_zero: v0,
            v_zero_se: z.clone(),
            v_pi2: vp,
            v_pi2_se: z.clone(),
            v_pi2_imag: z,
            thetas: Vec::new(),
            shadow: None,
            t_seg: f64::INFINITY,
            segments: 0,
            trajectories: 0,
        })
    }

    /// Linearised closed-form spectra on a grid, with zero error bars.
    pub fn analytic_linear(mu: f64, omega: &[f64]) -> Self {
        Self::from_fn(omega, |w| Ok(analytic::linear_spectra(mu, w))).expect("linear spectra are total")
    }

    /// Order-g² positive-P spectra on a grid, with zero error bars.
    pub fn analytic_plusp(mu: f64, gamma_r: f64, g2: f64, omega: &[f64]) -> Result<Self> {
        Self::from_fn(omega, |w| analytic::spectrum_plusp(mu, gamma_r, g2, w))
    }
}

fn records_dt(records: &[TrajectoryRecord]) -> Option<f64> {
    records.iter().find_map(|r| (r.times.len() > 1).then(|| r.times[1] - r.times[0]))
}

/// Channels of one recorded sample for the spectral processor.
fn record_channels(rep: Representation, q: &Quadratures, noise: Option<&[C; 2]>, dt_rec: f64) -> Result<[C; 4]> {
    Ok(match rep {
        Representation::PositiveP => [q.x, q.y, q.xp, q.yp],
        Representation::TruncatedWigner => {
            let dw = noise.ok_or_else(|| NopoError::Contract("Wigner spectra need the recorded noise".into()))?;
            let i = C::new(0.0, 1.0);
            let a1 = 0.5 * (q.x + i * q.y);
            let a2 = (0.5 * (q.x - i * q.y)).conj();
            let o = output_fields([a1, a2], *dw, dt_rec);
            [o[0], o[1], C::default(), C::default()]
        }
    })
}

/// Output fields in units of 1/γ from interval-averaged amplitudes and summed input noise.
#[inline]
pub(crate) fn output_fields(a: [C; 2], dw: [C; 2], dt_rec: f64) -> [C; 2] {
    let s2 = std::f64::consts::SQRT_2;
    let k = 1.0 / (s2 * dt_rec);
    [s2 * a[0] - k * dw[0], s2 * a[1] - k * dw[1]]
}

/// Spectra from stored trajectory records.
pub fn spectra_from_records(rep: Representation, records: &[TrajectoryRecord], settings: &SpectralSettings) -> Result<SpectrumEstimate> {
    if settings.shadow {
        return Err(NopoError::Contract("records do not carry the linearised companion".into()));
    }
    let dt_rec = records_dt(records).ok_or_else(|| NopoError::Estimation("records are too short".into()))?;
    let n = segment_len(settings.t_seg, dt_rec)?;
    let fft = plan(n);
    let mut stat = EnsembleStat::new(0);
    let mut layout = None;
    let mut segments = 0;
    for r in records {
        let mut p = SpectralProcessor::new(rep, settings, dt_rec, fft.clone())?;
        layout = Some(p.layout());
        if stat.across.is_empty() {
            stat = EnsembleStat::new(p.layout().len());
        }
        for (i, q) in r.quadratures.iter().enumerate() {
            let ch = record_channels(rep, q, r.noise.as_ref().map(|v| &v[i]), dt_rec)?;
            p.push(&ch);
        }
        segments += p.acc.n;
        stat.absorb(p.acc);
    }
    if segments == 0 {
        return Err(NopoError::Estimation("records are shorter than one segment".into()));
    }
    Ok(SpectrumEstimate::from_stat(rep, settings, layout.unwrap(), &stat, segments))
}

/// Squeezing spectra of an ensemble, from streamed accumulators or stored records.
pub fn squeezing_spectra(ens: &EnsembleResult, _p: &PhysicalParams) -> Result<SpectrumEstimate> {
    if let Some(s) = &ens.spectra {
        return Ok(s.clone());
    }
    if ens.records.is_empty() {
        return Err(NopoError::Contract("ensemble carries neither spectra nor records".into()));
    }
    if ens.representation == Representation::TruncatedWigner && ens.records.iter().any(|r| r.noise.is_none()) {
        return Err(NopoError::Contract("Wigner spectra need the recorded noise".into()));
    }
    spectra_from_records(ens.representation, &ens.records, &SpectralSettings::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualMethod {
    /// Difference against a linearised trajectory driven by the same noise.
    Differenced,
    /// Subtraction of the closed-form linear spectrum.
    AnalyticLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSpectrum {
    pub omega: Vec<f64>,
    pub residual: Vec<f64>,
    pub se: Vec<f64>,
    pub method: ResidualMethod,
}

/// V^{π/2} minus its linearised part, per bin.
pub fn nonlinear_residual(est: &SpectrumEstimate, mu: f64) -> ResidualSpectrum {
    if let Some(s) = &est.shadow {
        return ResidualSpectrum {
            omega: est.omega.clone(),
            residual: s.diff_pi2.clone(),
            se: s.diff_pi2_se.clone(),
            method: ResidualMethod::Differenced,
        };
    }
    ResidualSpectrum {
        omega: est.omega.clone(),
        residual: est
            .omega
            .iter()
            .zip(&est.v_pi2)
            .map(|(&w, v)| v - analytic::linear_spectra(mu, w).1)
            .collect(),
        se: est.v_pi2_se.clone(),
        method: ResidualMethod::AnalyticLinear,
    }
}

/// Index layout of the per-sample moment channels.
pub(crate) mod moment_ch {
    /// Re(X₀ − X₀ classical)
    pub const DX0: usize = 0;
    /// Re(X X⁺)
    pub const XX: usize = 1;
    /// Re(Y Y⁺)
    pub const YY: usize = 2;
    /// Re(X Y⁺ Y₀)
    pub const XYY0: usize = 3;
    /// Re(α₁ α₁⁺)
    pub const N1: usize = 4;
    /// Im(Y Y⁺)
    pub const YY_IM: usize = 5;
    pub const LEN: usize = 6;
}

pub(crate) fn moment_row(q: &Quadratures, a1: C, a1p: C, x0_cl: f64) -> [f64; moment_ch::LEN] {
    let yy = q.y * q.yp;
    [(q.x0.re - x0_cl), (q.x * q.xp).re, yy.re, (q.x * q.yp * q.y0).re, (a1 * a1p).re, yy.im]
}

/// Intracavity moments in the scaled frame, with the perturbative coefficients extracted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    /// ⟨x₀⟩
    pub x0: Estimate,
    /// (⟨x₀⟩ − 2μ)/g²
    pub x0_2: Estimate,
    /// ⟨x x⁺⟩ and its g⁻² coefficient
    pub xx: Estimate,
    pub xx1: Estimate,
    /// ⟨y y⁺⟩ and its g⁻² coefficient
    pub yy: Estimate,
    pub yy1: Estimate,
    /// Im⟨Y Y⁺⟩, zero in expectation
    pub yy_imag: Estimate,
    /// Squeezed-quadrature moment ⟨Ŷ₁Ŷ₁†⟩ with the representation's ordering.
    pub y_moment: Estimate,
    /// ⟨x y⁺ y₀⟩ and its g⁻⁴ coefficient
    pub triple: Estimate,
    pub triple_coeff: Estimate,
    /// ⟨α₁α₁⁺⟩ (normally ordered for positive-P, symmetric for Wigner)
    pub n1: Estimate,
    /// g⟨XX⁺⟩, the critical-frame ⟨x x⁺⟩
    pub critical_xx: Estimate,
    pub samples: u64,
    pub trajectories: u64,
}

pub fn intracavity_moments(ens: &EnsembleResult) -> MomentEstimate {
    let m = ens.moments.mean();
    let se = ens.moments.se();
    let e = |i: usize| {
        if m.is_empty() {
            Estimate::new(f64::NAN, f64::NAN)
        } else {
            Estimate::new(m[i], se[i])
        }
    };
    let g = ens.scaled.g;
    let g2 = g * g;
    let s0 = g * (2.0 * ens.scaled.gamma_r).sqrt();
    let x0_cl = ens.x0_classical;
    let x0 = e(moment_ch::DX0).shifted(x0_cl).scaled(s0);
    // deviation taken before scaling keeps the g² extraction free of cancellation
    let x0_2 = e(moment_ch::DX0)
        .scaled(s0 / g2)
        .shifted((s0 * x0_cl - 2.0 * ens.scaled.mu) / g2);
    let yy_raw = e(moment_ch::YY);
    let y_moment = match ens.representation {
        Representation::PositiveP => yy_raw.shifted(1.0),
        Representation::TruncatedWigner => yy_raw,
    };
    MomentEstimate {
        x0,
        x0_2,
        xx: e(moment_ch::XX).scaled(g2),
        xx1: e(moment_ch::XX),
        yy: yy_raw.scaled(g2),
        yy1: yy_raw,
        yy_imag: e(moment_ch::YY_IM),
        y_moment,
        triple: e(moment_ch::XYY0).scaled(g2 * s0),
        triple_coeff: e(moment_ch::XYY0).scaled(s0 / g2),
        n1: e(moment_ch::N1),
        critical_xx: e(moment_ch::XX).scaled(g),
        samples: ens.moments.across.n * ens.moment_samples_per_traj,
        trajectories: ens.moments.trajectories(),
    }
}

/// Triple spectral correlation ⟨x̃ ỹ⁺ ỹ₀⟩ on a square grid, scaled units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleCorrEstimate {
    pub omega: Vec<f64>,
    /// values[i][j] at (omega[i], omega[j])
    pub values: Vec<Vec<C>>,
    pub se_re: Vec<Vec<f64>>,
    pub se_im: Vec<Vec<f64>>,
    pub segments: u64,
}

impl TripleCorrEstimate {
    pub fn index_of(&self, w: f64) -> Option<usize> {
        self.omega.iter().position(|&o| (o - w).abs() < 1e-9)
    }
}

/// Triple spectral correlation on the grid requested at run time.
pub fn triple_spectrum(ens: &EnsembleResult, grid: &TripleSettings) -> Result<TripleCorrEstimate> {
    let (settings, est) = ens
        .triple
        .as_ref()
        .ok_or_else(|| NopoError::Contract("ensemble was run without a triple grid".into()))?;
    if settings != grid {
        return Err(NopoError::Contract("requested triple grid differs from the recorded one".into()));
    }
    Ok(est.clone())
}

pub(crate) fn triple_from_stat(s: &TripleSettings, stat: &EnsembleStat, scale: f64, segments: u64) -> TripleCorrEstimate {
    let side = s.side();
    let m = stat.mean();
    let se = stat.se();
    let at = |v: &Vec<f64>, off: usize, i: usize, j: usize| v[off + i * side + j] * scale;
    let off = side * side;
    let km = s.k_max as i64;
    TripleCorrEstimate {
        omega: (-km..=km).map(|k| 2.0 * PI * k as f64 / s.t_seg).collect(),
        values: (0..side).map(|i| (0..side).map(|j| C::new(at(&m, 0, i, j), at(&m, off, i, j))).collect()).collect(),
        se_re: (0..side).map(|i| (0..side).map(|j| at(&se, 0, i, j).abs()).collect()).collect(),
        se_im: (0..side).map(|i| (0..side).map(|j| at(&se, off, i, j).abs()).collect()).collect(),
        segments,
    }
}
