use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::step::{advance, plusp_noise, step_critical, wigner_noise, Rates, Scheme};
use crate::error::{param, NopoError, Result};
use crate::model::{classical_steady_state, derive_scaled, PhysicalParams, Quadratures, Representation, ScaledParams};
use crate::spectra::{
    self, moment_ch, output_fields, segment_len, SpectralProcessor, SpectralSettings, SpectrumEstimate,
    TripleCorrEstimate, TripleProcessor, TripleSettings,
};
use crate::stats::{Accum, EnsembleStat, Estimate};

type C = Complex64;
const Z: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub representation: Representation,
    /// Step in units of 1/γ.
    pub dt: f64,
    /// Discarded transient; `None` picks 50 relaxation times of the slowest mode.
    pub t_burn: Option<f64>,
    pub t_record: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Spacing of recorded samples; each sample is the average over its interval.
    pub record_interval: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            representation: Representation::PositiveP,
            dt: 0.001,
            t_burn: None,
            t_record: 10_000.0,
            n_traj: 2000,
            seed: 0,
            scheme: Scheme::SemiImplicitMidpoint,
            record_interval: 0.01,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(param("dt", "must be positive"));
        }
        if !(self.t_record >= 0.0) || !self.t_record.is_finite() {
            return Err(param("t_record", "must be non-negative"));
        }
        if let Some(b) = self.t_burn {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(param("t_burn", "must be non-negative"));
            }
        }
        if self.n_traj == 0 {
            return Err(param("n_traj", "must be at least 1"));
        }
        let m = self.record_interval / self.dt;
        if !(m.round() >= 1.0) || (m - m.round()).abs() > 1e-6 {
            return Err(param("record_interval", "must be a positive multiple of dt"));
        }
        Ok(())
    }

    fn record_every(&self) -> usize {
        (self.record_interval / self.dt).round() as usize
    }
}

/// 50 relaxation times of the slowest linear mode, in units of 1/γ.
pub fn default_burn_in(sp: &ScaledParams) -> f64 {
    let signal = (1.0 - sp.mu).abs().max(sp.g);
    let slowest = signal.min(sp.gamma_r).min(1.0);
    if slowest > 0.0 {
        50.0 / slowest
    } else {
        50.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservablePlan {
    pub spectra: Option<SpectralSettings>,
    pub triple: Option<TripleSettings>,
    pub keep_records: bool,
    /// Keep the consumed signal/idler noise with positive-P records too.
    pub record_noise: bool,
    /// Block length for moment standard errors within one trajectory.
    pub moment_block: f64,
}

impl Default for ObservablePlan {
    fn default() -> Self {
        Self { spectra: None, triple: None, keep_records: false, record_noise: false, moment_block: 10.0 }
    }
}

/// Stored samples of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Unscaled quadratures averaged over each recording interval.
    pub quadratures: Vec<Quadratures>,
    /// Signal and idler Wiener increments summed over each interval.
    pub noise: Option<Vec<[C; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub representation: Representation,
    pub params: PhysicalParams,
    pub scaled: ScaledParams,
    pub config: IntegratorConfig,
    pub plan: ObservablePlan,
    pub t_burn: f64,
    pub n_ok: usize,
    pub n_faulted: usize,
    pub records: Vec<TrajectoryRecord>,
    pub spectra: Option<SpectrumEstimate>,
    pub triple: Option<(TripleSettings, TripleCorrEstimate)>,
    pub moments: EnsembleStat,
    pub moment_samples_per_traj: u64,
    /// Unscaled classical pump quadrature subtracted before averaging.
    pub x0_classical: f64,
}

/// Worker count from NOPO_THREADS, if set.
pub fn thread_cap() -> Option<usize> {
    std::env::var("NOPO_THREADS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

struct Ctx<'a> {
    rep: Representation,
    rates: Rates,
    cfg: &'a IntegratorConfig,
    plan: &'a ObservablePlan,
    burn_steps: u64,
    rec_every: usize,
    n_rec: usize,
    block: usize,
    init: [C; 3],
    x0_cl: f64,
    shadow_pump: Option<C>,
    spec_fft: Option<std::sync::Arc<dyn rustfft::Fft<f64>>>,
    triple_fft: Option<std::sync::Arc<dyn rustfft::Fft<f64>>>,
}

struct TrajOut {
    faulted: bool,
    spectra: Option<Accum>,
    triple: Option<Accum>,
    moments: Accum,
    record: Option<TrajectoryRecord>,
}

/// Per-trajectory sinks fed once per recording interval.
struct Sinks {
    spec: Option<SpectralProcessor>,
    triple: Option<TripleProcessor>,
    moments: Accum,
    block_sum: [f64; moment_ch::LEN],
    block_fill: usize,
    block: usize,
    record: Option<TrajectoryRecord>,
}

impl Sinks {
    fn new(ctx: &Ctx) -> Result<Self> {
        let dt_rec = ctx.cfg.record_interval;
        let spec = match (&ctx.plan.spectra, &ctx.spec_fft) {
            (Some(s), Some(f)) => Some(SpectralProcessor::new(ctx.rep, s, dt_rec, f.clone())?),
            _ => None,
        };
        let triple = match (&ctx.plan.triple, &ctx.triple_fft) {
            (Some(s), Some(f)) => Some(TripleProcessor::new(s, dt_rec, f.clone())?),
            _ => None,
        };
        let keep_noise = ctx.rep == Representation::TruncatedWigner || ctx.plan.record_noise;
        let record = ctx.plan.keep_records.then(|| TrajectoryRecord {
            times: Vec::with_capacity(ctx.n_rec),
            quadratures: Vec::with_capacity(ctx.n_rec),
            noise: keep_noise.then(|| Vec::with_capacity(ctx.n_rec)),
        });
        Ok(Self {
            spec,
            triple,
            moments: Accum::new(moment_ch::LEN),
            block_sum: [0.0; moment_ch::LEN],
            block_fill: 0,
            block: ctx.block,
            record,
        })
    }

    #[inline]
    fn moments(&mut self, row: [f64; moment_ch::LEN]) {
        for (s, v) in self.block_sum.iter_mut().zip(row) {
            *s += v;
        }
        self.block_fill += 1;
        if self.block_fill == self.block {
            let k = 1.0 / self.block as f64;
            let mean = self.block_sum.map(|s| s * k);
            self.moments.push(&mean);
            self.block_sum = [0.0; moment_ch::LEN];
            self.block_fill = 0;
        }
    }

    fn store(&mut self, t: f64, q: Quadratures, dw: [C; 2]) {
        if let Some(r) = &mut self.record {
            r.times.push(t);
            r.quadratures.push(q);
            if let Some(n) = &mut r.noise {
                n.push(dw);
            }
        }
    }

    fn finish(self, faulted: bool) -> TrajOut {
        TrajOut {
            faulted,
            spectra: self.spec.map(|p| p.acc),
            triple: self.triple.map(|p| p.acc),
            moments: self.moments,
            record: self.record,
        }
    }
}

fn rng_for(seed: u64, idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx as u64);
    rng
}

fn finite(a: &[C]) -> bool {
    a.iter().all(|z| z.is_finite())
}

fn run_plusp(ctx: &Ctx, idx: usize) -> Result<TrajOut> {
    let r = &ctx.rates;
    let scheme = ctx.cfg.scheme;
    let dt = ctx.cfg.dt;
    let sd = dt.sqrt();
    let mut rng = rng_for(ctx.cfg.seed, idx);
    let [i0, i1, i2] = ctx.init;
    let mut a = [i0, i0.conj(), i1, i1.conj(), i2, i2.conj()];
    let mut sinks = Sinks::new(ctx)?;

    // linearised companion: signals only, pump frozen at its classical value
    let lin = ctx.shadow_pump.map(|a0| {
        let k = r.chi;
        let (s, sp) = (super::step::csqrt(k * a0), super::step::csqrt(k * a0.conj()));
        (k * a0, k * a0.conj(), s, sp)
    });
    let lin_drift = |x: &[C; 4]| {
        let (ka, kap, _, _) = lin.unwrap();
        let g = r.gamma;
        [-g * x[0] + ka * x[3], -g * x[1] + kap * x[2], -g * x[2] + ka * x[1], -g * x[3] + kap * x[0]]
    };
    let mut sh = [a[2], a[3], a[4], a[5]];

    let step = |a: &mut [C; 6], sh: &mut [C; 4], rng: &mut ChaCha8Rng| -> ([C; 6], [C; 4]) {
        let dw = plusp_noise(rng, sd);
        let inc = r.plusp_noise_terms(a, &dw);
        let next = advance(a, &inc, dt, scheme, |x| r.plusp_drift(x));
        let mid = std::array::from_fn(|i| 0.5 * (a[i] + next[i]));
        *a = next;
        let mut mid_l = [Z; 4];
        if let Some((_, _, s, sp)) = lin {
            let inc_l = [s * dw[0], sp * dw[2], s * dw[1], sp * dw[3]];
            let nl = advance(sh, &inc_l, dt, scheme, lin_drift);
            mid_l = std::array::from_fn(|i| 0.5 * (sh[i] + nl[i]));
            *sh = nl;
        }
        (mid, mid_l)
    };

    for s in 0..ctx.burn_steps {
        step(&mut a, &mut sh, &mut rng);
        if s % 1024 == 0 && !finite(&a) {
            return Ok(sinks.finish(true));
        }
    }
    let m = ctx.rec_every;
    let inv = 1.0 / m as f64;
    let t0 = ctx.burn_steps as f64 * dt;
    let sp_re = ctx.x0_cl;
    for rec in 0..ctx.n_rec {
        let mut acc = [Z; 6];
        let mut acc_l = [Z; 4];
        for _ in 0..m {
            let (mid, mid_l) = step(&mut a, &mut sh, &mut rng);
            for i in 0..6 {
                acc[i] += mid[i];
            }
            for i in 0..4 {
                acc_l[i] += mid_l[i];
            }
        }
        if !finite(&acc) || !finite(&a) {
            return Ok(sinks.finish(true));
        }
        let avg: [C; 6] = acc.map(|z| z * inv);
        let q = Quadratures::from_amplitudes(&avg, 0.0);
        if let Some(p) = &mut sinks.spec {
            if lin.is_some() {
                let l = acc_l.map(|z| z * inv);
                let ql = Quadratures::from_amplitudes(&[Z, Z, l[0], l[1], l[2], l[3]], 0.0);
                p.push(&[q.x, q.y, q.xp, q.yp, ql.x, ql.y, ql.xp, ql.yp]);
            } else {
                p.push(&[q.x, q.y, q.xp, q.yp]);
            }
        }
        if let Some(p) = &mut sinks.triple {
            p.push([q.x, q.yp, q.y0]);
        }
        let qi = Quadratures::from_amplitudes(&a, 0.0);
        sinks.moments(spectra::moment_row(&qi, a[2], a[3], sp_re));
        sinks.store(t0 + (rec + 1) as f64 * ctx.cfg.record_interval, q, [Z, Z]);
    }
    Ok(sinks.finish(false))
}

fn run_wigner(ctx: &Ctx, idx: usize) -> Result<TrajOut> {
    let r = &ctx.rates;
    let scheme = ctx.cfg.scheme;
    let dt = ctx.cfg.dt;
    let sd = dt.sqrt();
    let mut rng = rng_for(ctx.cfg.seed, idx);
    // coherent-state sampling around the classical amplitudes
    let vac = wigner_noise(&mut rng, 1.0);
    let mut a: [C; 3] = std::array::from_fn(|i| ctx.init[i] + vac[i] * std::f64::consts::FRAC_1_SQRT_2);
    let mut sinks = Sinks::new(ctx)?;

    let lin = ctx.shadow_pump.map(|a0| r.chi * a0);
    let lin_drift = |x: &[C; 2]| {
        let ka = lin.unwrap();
        let g = r.gamma;
        [-g * x[0] + ka * x[1].conj(), -g * x[1] + ka * x[0].conj()]
    };
    let mut sh = [a[1], a[2]];
    let sg = r.gamma.sqrt();

    let step = |a: &mut [C; 3], sh: &mut [C; 2], rng: &mut ChaCha8Rng| -> ([C; 3], [C; 2], [C; 2]) {
        let dw = wigner_noise(rng, sd);
        let inc = r.wigner_noise_terms(&dw);
        let next = advance(a, &inc, dt, scheme, |x| r.wigner_drift(x));
        let mid = std::array::from_fn(|i| 0.5 * (a[i] + next[i]));
        *a = next;
        let mut mid_l = [Z; 2];
        if lin.is_some() {
            let inc_l = [sg * dw[1], sg * dw[2]];
            let nl = advance(sh, &inc_l, dt, scheme, lin_drift);
            mid_l = [0.5 * (sh[0] + nl[0]), 0.5 * (sh[1] + nl[1])];
            *sh = nl;
        }
        (mid, mid_l, [sg * dw[1], sg * dw[2]])
    };

    for s in 0..ctx.burn_steps {
        step(&mut a, &mut sh, &mut rng);
        if s % 1024 == 0 && !finite(&a) {
            return Ok(sinks.finish(true));
        }
    }
    let m = ctx.rec_every;
    let inv = 1.0 / m as f64;
    let dt_rec = ctx.cfg.record_interval;
    let t0 = ctx.burn_steps as f64 * dt;
    for rec in 0..ctx.n_rec {
        let mut acc = [Z; 3];
        let mut acc_l = [Z; 2];
        let mut noise = [Z; 2];
        for _ in 0..m {
            let (mid, mid_l, dw) = step(&mut a, &mut sh, &mut rng);
            for i in 0..3 {
                acc[i] += mid[i];
            }
            acc_l[0] += mid_l[0];
            acc_l[1] += mid_l[1];
            noise[0] += dw[0];
            noise[1] += dw[1];
        }
        if !finite(&acc) || !finite(&a) {
            return Ok(sinks.finish(true));
        }
        let avg = acc.map(|z| z * inv);
        let ex = [avg[0], avg[0].conj(), avg[1], avg[1].conj(), avg[2], avg[2].conj()];
        let q = Quadratures::from_amplitudes(&ex, 0.0);
        if let Some(p) = &mut sinks.spec {
            let o = output_fields([avg[1], avg[2]], noise, dt_rec);
            if lin.is_some() {
                let ol = output_fields([acc_l[0] * inv, acc_l[1] * inv], noise, dt_rec);
                p.push(&[o[0], o[1], ol[0], ol[1]]);
            } else {
                p.push(&o);
            }
        }
        if let Some(p) = &mut sinks.triple {
            p.push([q.x, q.yp, q.y0]);
        }
        let inst = [a[0], a[0].conj(), a[1], a[1].conj(), a[2], a[2].conj()];
        let qi = Quadratures::from_amplitudes(&inst, 0.0);
        sinks.moments(spectra::moment_row(&qi, a[1], a[1].conj(), ctx.x0_cl));
        sinks.store(t0 + (rec + 1) as f64 * dt_rec, q, noise);
    }
    Ok(sinks.finish(false))
}

/// Integrate an ensemble and reduce the requested observables in trajectory order.
pub fn run_ensemble(p: &PhysicalParams, cfg: &IntegratorConfig, plan: &ObservablePlan) -> Result<EnsembleResult> {
    cfg.validate()?;
    let sp = derive_scaled(p)?;
    let rep = cfg.representation;
    let rates = Rates::normalised(p);
    // amplitudes are frame independent; only the time unit changes
    let init = classical_steady_state(p);
    let t_burn = cfg.t_burn.unwrap_or_else(|| default_burn_in(&sp));
    let burn_steps = (t_burn / cfg.dt).round() as u64;
    let rec_every = cfg.record_every();
    let n_rec = (cfg.t_record / cfg.record_interval).round() as usize;
    let block = ((plan.moment_block / cfg.record_interval).round() as usize).clamp(1, n_rec.max(1));

    let mut plan = plan.clone();
    if let Some(s) = &mut plan.spectra {
        if s.shadow && sp.mu >= 1.0 {
            log::warn!("linearised companion disabled at or above threshold");
            s.shadow = false;
        }
    }
    let spec_fft = match &plan.spectra {
        Some(s) => Some(spectra::plan(segment_len(s.t_seg, cfg.record_interval)?)),
        None => None,
    };
    let triple_fft = match &plan.triple {
        Some(s) => {
            s.validate()?;
            Some(spectra::plan(segment_len(s.t_seg, cfg.record_interval)?))
        }
        None => None,
    };
    let shadow_pump = plan
        .spectra
        .as_ref()
        .filter(|s| s.shadow)
        .map(|_| init[0]);
    let ctx = Ctx {
        rep,
        rates,
        cfg,
        plan: &plan,
        burn_steps,
        rec_every,
        n_rec,
        block,
        init,
        x0_cl: 2.0 * init[0].re,
        shadow_pump,
        spec_fft,
        triple_fft,
    };

    let run_one = |i: usize| match rep {
        Representation::PositiveP => run_plusp(&ctx, i),
        Representation::TruncatedWigner => run_wigner(&ctx, i),
    };

    let threads = thread_cap().unwrap_or_else(rayon::current_num_threads).max(1);
    let chunk = (threads * 4).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| NopoError::Contract(format!("thread pool: {e}")))?;

    let mut spec_stat: Option<EnsembleStat> = None;
    let mut triple_stat: Option<EnsembleStat> = None;
    let mut moments = EnsembleStat::new(moment_ch::LEN);
    let mut records = Vec::new();
    let (mut n_ok, mut n_faulted) = (0, 0);
    let (mut spec_segments, mut triple_segments) = (0, 0);
    let mut start = 0;
    while start < cfg.n_traj {
        let end = (start + chunk).min(cfg.n_traj);
        let outs: Vec<Result<TrajOut>> = pool.install(|| (start..end).into_par_iter().map(run_one).collect());
        for out in outs {
            let out = out?;
            if out.faulted {
                n_faulted += 1;
                continue;
            }
            n_ok += 1;
            if let Some(a) = out.spectra {
                spec_segments += a.n;
                spec_stat.get_or_insert_with(|| EnsembleStat::new(a.len())).absorb(a);
            }
            if let Some(a) = out.triple {
                triple_segments += a.n;
                triple_stat.get_or_insert_with(|| EnsembleStat::new(a.len())).absorb(a);
            }
            moments.absorb(out.moments);
            if let Some(r) = out.record {
                records.push(r);
            }
        }
        start = end;
    }
    if n_faulted * 100 > cfg.n_traj {
        return Err(NopoError::FaultBudget { faulted: n_faulted, total: cfg.n_traj });
    }
    if n_faulted > 0 {
        log::warn!("{n_faulted} of {} trajectories faulted and were excluded", cfg.n_traj);
    }

    let spectra = match (&plan.spectra, spec_stat) {
        (Some(s), Some(stat)) if spec_segments > 0 => {
            let probe = SpectralProcessor::new(rep, s, cfg.record_interval, ctx.spec_fft.clone().unwrap())?;
            Some(SpectrumEstimate::from_stat(rep, s, probe.layout(), &stat, spec_segments))
        }
        _ => None,
    };
    let triple = match (&plan.triple, triple_stat) {
        (Some(s), Some(stat)) if triple_segments > 0 => {
            // recorded channels are unscaled X, Y⁺, Y₀
            let scale = sp.g.powi(3) * (2.0 * sp.gamma_r).sqrt();
            Some((s.clone(), spectra::triple_from_stat(s, &stat, scale, triple_segments)))
        }
        _ => None,
    };

    let x0_classical = ctx.x0_cl;
    drop(ctx);
    Ok(EnsembleResult {
        representation: rep,
        params: *p,
        scaled: sp,
        config: cfg.clone(),
        plan,
        t_burn,
        n_ok,
        n_faulted,
        records,
        spectra,
        triple,
        moments,
        moment_samples_per_traj: n_rec as u64,
        x0_classical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticalConfig {
    pub dt: f64,
    pub t_burn: f64,
    pub t_record: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Steps between samples entering the averages.
    pub sample_every: usize,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        Self { dt: 0.001, t_burn: 20.0, t_record: 200.0, n_traj: 1000, seed: 0, sample_every: 10 }
    }
}

/// Stationary moments of the reduced critical equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub eta: f64,
    /// ⟨x₊² + x₋²⟩
    pub r2: Estimate,
    pub r4: Estimate,
}

pub fn run_critical_ensemble(eta: f64, cfg: &CriticalConfig) -> Result<CriticalEstimate> {
    if !(cfg.dt > 0.0) || cfg.n_traj == 0 || cfg.sample_every == 0 || !(cfg.t_record > 0.0) {
        return Err(param("critical", "dt, t_record, n_traj and sample_every must be positive"));
    }
    let burn = (cfg.t_burn / cfg.dt).round() as u64;
    let samples = ((cfg.t_record / cfg.dt).round() as u64 / cfg.sample_every as u64).max(1);
    let r0 = (2.0 * eta).max(0.0).sqrt();
    let one = |i: usize| {
        let mut rng = rng_for(cfg.seed, i);
        let mut v = [r0, 0.0];
        for _ in 0..burn {
            v = step_critical(v, eta, &mut rng, cfg.dt);
        }
        let (mut s2, mut s4) = (0.0, 0.0);
        for _ in 0..samples {
            for _ in 0..cfg.sample_every {
                v = step_critical(v, eta, &mut rng, cfg.dt);
            }
            let r2 = v[0] * v[0] + v[1] * v[1];
            s2 += r2;
            s4 += r2 * r2;
        }
        let n = samples as f64;
        [s2 / n, s4 / n]
    };
    let threads = thread_cap().unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| NopoError::Contract(format!("thread pool: {e}")))?;
    let rows: Vec<[f64; 2]> = pool.install(|| (0..cfg.n_traj).into_par_iter().map(one).collect());
    let mut acc = Accum::new(2);
    for r in &rows {
        acc.push(r);
    }
    let (m, se) = (acc.mean(), acc.se());
    Ok(CriticalEstimate { eta, r2: Estimate::new(m[0], se[0]), r4: Estimate::new(m[1], se[1]) })
}
