//! Executes an experiment configuration and writes its artifacts.

use std::path::PathBuf;

use anyhow::{Context, Result};
use nopo_core::analytic::{
    critical_squeeze_moment, critical_xx, linear_spectra, moments_plusp, moments_wigner, spectrum_plusp,
    spectrum_wigner, total_squeeze_moment, triple_plusp, triple_wigner, v_pi2_zero,
};
use nopo_core::epr::{epr_report, inference_variance};
use nopo_core::sde::run_critical_ensemble;
use nopo_core::spectra::{intracavity_moments, nonlinear_residual, MomentEstimate};
use nopo_core::{
    run_ensemble, CriticalParams, EnsembleResult, ObservablePlan, PhysicalParams, Representation, ScaledParams,
    SpectrumEstimate,
};
use serde_json::json;

use crate::config::{AnalyticCurve, CriticalScan, CurveKind, ExperimentConfig, Mode};
use crate::output::{num, opt, write_csv, Table, SCHEMA_VERSION};

pub const TOOL: &str = concat!("nopo ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub n_ok: Option<usize>,
    pub n_faulted: Option<usize>,
}

struct Artifacts {
    meta: Vec<(String, String)>,
    tables: Vec<(&'static str, Table)>,
    results: serde_json::Value,
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn rep_name(r: Representation) -> &'static str {
    match r {
        Representation::PositiveP => "positive-p",
        Representation::TruncatedWigner => "truncated-wigner",
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let mode = cfg.mode()?;
    let mut art = match mode {
        Mode::Simulation => simulation(cfg)?,
        Mode::Curves => curves(cfg.analytic.as_ref().unwrap())?,
        Mode::Critical => critical(cfg.critical.as_ref().unwrap(), cfg.analytic_only)?,
    };
    let mut meta = vec![
        kv("schema_version", SCHEMA_VERSION),
        kv("tool", TOOL),
        kv("name", &cfg.name),
        kv("description", &cfg.description),
        kv("seed", cfg.seed()),
        kv("analytic_only", cfg.analytic_only || mode == Mode::Curves),
    ];
    meta.append(&mut art.meta);

    std::fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut files = Vec::new();
    for (file, table) in &art.tables {
        write_csv(&cfg.out_dir.join(file), &meta, table)?;
        files.push(file.to_string());
    }
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "tool": TOOL,
        "config": cfg,
        "results": art.results,
        "files": files,
    });
    let path = cfg.out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(RunSummary {
        out_dir: cfg.out_dir.clone(),
        files,
        n_ok: art.results.get("n_ok").and_then(|v| v.as_u64()).map(|v| v as usize),
        n_faulted: art.results.get("n_faulted").and_then(|v| v.as_u64()).map(|v| v as usize),
    })
}

fn below(sp: &ScaledParams) -> bool {
    sp.has_threshold() && sp.mu < 1.0
}

/// (V⁰, V^(π/2)) from the closed forms of the chosen representation.
fn analytic_v(rep: Representation, sp: &ScaledParams, w: f64) -> (Option<f64>, Option<f64>) {
    if !below(sp) {
        return (None, None);
    }
    match rep {
        Representation::PositiveP => match spectrum_plusp(sp.mu, sp.gamma_r, sp.g2(), w) {
            Ok((v0, vp)) => (Some(v0), Some(vp)),
            Err(_) => (None, None),
        },
        Representation::TruncatedWigner => (None, spectrum_wigner(sp.mu, sp.gamma_r, sp.g2(), w).ok()),
    }
}

fn linear_pi2(sp: &ScaledParams, w: f64) -> Option<f64> {
    below(sp).then(|| linear_spectra(sp.mu, w).1)
}

fn simulation(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let p = cfg.params()?;
    let sp = cfg.scaled_params()?;
    let rep = cfg.integrator.representation;
    let fscale = if cfg.physical_units { p.gamma } else { 1.0 };
    let mut meta = vec![
        kv("representation", rep_name(rep)),
        kv("physical", format!("gamma0={} gamma={} chi={} drive={}", p.gamma0, p.gamma, p.chi, p.drive)),
        kv("scaled", format!("g2={} gamma_r={} mu={}", sp.g2(), sp.gamma_r, sp.mu)),
        kv("frequency_units", if cfg.physical_units { "physical (omega * gamma)" } else { "scaled (omega / gamma)" }),
    ];
    let settings = cfg.spectra.clone().unwrap_or_default();
    if cfg.analytic_only {
        if !below(&sp) {
            return Err(nopo_core::NopoError::Domain { what: "analytic spectra", mu: sp.mu }.into());
        }
        let mut t = Table::new(["omega", "v_zero_analytic", "v_pi2_analytic", "v_pi2_linear", "v_nl_analytic"]);
        let bins = (settings.omega_max * settings.t_seg / (2.0 * std::f64::consts::PI)).floor() as usize + 1;
        for k in 0..bins {
            let w = 2.0 * std::f64::consts::PI * k as f64 / settings.t_seg;
            let (v0, vp) = analytic_v(rep, &sp, w);
            let lin = linear_spectra(sp.mu, w).1;
            t.push(vec![num(w * fscale), opt(v0), opt(vp), num(lin), opt(vp.map(|v| v - lin))]);
        }
        let moments = analytic_moments(rep, &sp)?;
        return Ok(Artifacts {
            meta,
            tables: vec![("spectra_analytic.csv", t), ("moments_analytic.csv", moments)],
            results: json!({}),
        });
    }

    let want_spectra = cfg.outputs.spectra || cfg.outputs.residual || cfg.outputs.epr;
    let plan = ObservablePlan {
        spectra: want_spectra.then(|| settings.clone()),
        triple: cfg.outputs.triple.clone(),
        ..Default::default()
    };
    let e = run_ensemble(&p, &cfg.integrator, &plan)?;
    meta.push(kv("trajectories", format!("{} ok, {} faulted", e.n_ok, e.n_faulted)));
    meta.push(kv("t_burn", e.t_burn));
    meta.push(kv("t_record", cfg.integrator.t_record));
    meta.push(kv("dt", cfg.integrator.dt));

    let mut tables = Vec::new();
    if let Some(s) = &e.spectra {
        if cfg.outputs.spectra {
            tables.push(("spectra.csv", spectra_table(s, rep, &sp, fscale)));
        }
        if cfg.outputs.residual {
            tables.push(("residual.csv", residual_table(s, rep, &sp, fscale)));
        }
        if cfg.outputs.epr {
            tables.push(("epr.csv", epr_table(s, fscale)));
        }
    }
    if cfg.outputs.moments {
        tables.push(("moments.csv", moments_table(&intracavity_moments(&e), rep, &sp)));
    }
    if let Some(t) = triple_table(&e, &sp, fscale) {
        tables.push(("triple.csv", t));
    }
    Ok(Artifacts {
        meta,
        tables,
        results: json!({ "n_ok": e.n_ok, "n_faulted": e.n_faulted, "t_burn": e.t_burn }),
    })
}

fn spectra_table(s: &SpectrumEstimate, rep: Representation, sp: &ScaledParams, fscale: f64) -> Table {
    let mut cols: Vec<String> = [
        "omega",
        "v_zero",
        "v_zero_se",
        "v_pi2",
        "v_pi2_se",
        "v_pi2_imag",
        "v_zero_analytic",
        "v_pi2_analytic",
        "v_pi2_linear",
    ]
    .map(String::from)
    .to_vec();
    for t in &s.thetas {
        cols.push(format!("v_theta_{}", t.theta));
        cols.push(format!("v_theta_{}_se", t.theta));
    }
    let mut table = Table::new(cols);
    for (k, &w) in s.omega.iter().enumerate() {
        let (a0, ap) = analytic_v(rep, sp, w);
        let mut row = vec![
            num(w * fscale),
            num(s.v_zero[k]),
            num(s.v_zero_se[k]),
            num(s.v_pi2[k]),
            num(s.v_pi2_se[k]),
            num(s.v_pi2_imag[k]),
            opt(a0),
            opt(ap),
            opt(linear_pi2(sp, w)),
        ];
        for t in &s.thetas {
            row.push(num(t.v[k]));
            row.push(num(t.se[k]));
        }
        table.push(row);
    }
    table
}

fn residual_table(s: &SpectrumEstimate, rep: Representation, sp: &ScaledParams, fscale: f64) -> Table {
    let r = nonlinear_residual(s, sp.mu);
    let mut t = Table::new(["omega", "v_nl_sim", "v_nl_sim_se", "v_nl_analytic"]);
    for (k, &w) in r.omega.iter().enumerate() {
        let an = match (analytic_v(rep, sp, w).1, linear_pi2(sp, w)) {
            (Some(v), Some(l)) => Some(v - l),
            _ => None,
        };
        t.push(vec![num(w * fscale), num(r.residual[k]), num(r.se[k]), opt(an)]);
    }
    t
}

fn epr_table(s: &SpectrumEstimate, fscale: f64) -> Table {
    let mut t = Table::new([
        "omega",
        "v_pi2",
        "inference_variance",
        "epr_product",
        "heisenberg_product",
        "c_x",
        "c_y",
        "epr_demonstrated",
        "entangled_duan_simon",
    ]);
    for r in epr_report(s).rows {
        t.push(vec![
            num(r.omega * fscale),
            num(r.v_pi2),
            num(r.inference_variance),
            num(r.epr_product),
            num(r.heisenberg_product),
            num(r.c_x),
            num(r.c_y),
            r.epr_demonstrated.to_string(),
            r.entangled_duan_simon.to_string(),
        ]);
    }
    t
}

struct MomentTargets {
    x0_2: f64,
    xx1: f64,
    yy1: f64,
    y_moment: f64,
    triple: f64,
}

fn targets(rep: Representation, sp: &ScaledParams) -> Result<MomentTargets> {
    Ok(match rep {
        Representation::PositiveP => {
            let m = moments_plusp(sp.mu, sp.gamma_r)?;
            MomentTargets {
                x0_2: m.x0_2,
                xx1: m.xx1,
                yy1: m.yy1,
                y_moment: total_squeeze_moment(sp.mu, sp.gamma_r, sp.g2(), rep)?,
                triple: m.triple,
            }
        }
        Representation::TruncatedWigner => {
            let m = moments_wigner(sp.mu, sp.gamma_r)?;
            MomentTargets {
                x0_2: m.x0_2,
                xx1: m.xx1,
                yy1: m.yy1,
                y_moment: total_squeeze_moment(sp.mu, sp.gamma_r, sp.g2(), rep)?,
                triple: m.triple,
            }
        }
    })
}

fn critical_target(sp: &ScaledParams) -> Option<f64> {
    CriticalParams::new(sp, 1.0).ok().map(|c| critical_xx(c.eta))
}

fn analytic_moments(rep: Representation, sp: &ScaledParams) -> Result<Table> {
    let a = targets(rep, sp)?;
    let mut t = Table::new(["quantity", "analytic"]);
    for (q, v) in [("x0_2", a.x0_2), ("xx1", a.xx1), ("yy1", a.yy1), ("y_moment", a.y_moment), ("triple_coeff", a.triple)] {
        t.push(vec![q.into(), num(v)]);
    }
    t.push(vec!["critical_xx".into(), opt(critical_target(sp))]);
    Ok(t)
}

fn moments_table(m: &MomentEstimate, rep: Representation, sp: &ScaledParams) -> Table {
    let a = if below(sp) { targets(rep, sp).ok() } else { None };
    let pick = |f: fn(&MomentTargets) -> f64| a.as_ref().map(f);
    let rows = [
        ("x0", m.x0, None),
        ("x0_2", m.x0_2, pick(|t| t.x0_2)),
        ("xx1", m.xx1, pick(|t| t.xx1)),
        ("yy1", m.yy1, pick(|t| t.yy1)),
        ("yy_imag", m.yy_imag, None),
        ("y_moment", m.y_moment, pick(|t| t.y_moment)),
        ("triple_coeff", m.triple_coeff, pick(|t| t.triple)),
        ("n1", m.n1, None),
        ("critical_xx", m.critical_xx, critical_target(sp)),
    ];
    let mut t = Table::new(["quantity", "value", "se", "analytic"]);
    for (q, e, an) in rows {
        t.push(vec![q.into(), num(e.value), num(e.se), opt(an)]);
    }
    t
}

fn triple_table(e: &EnsembleResult, sp: &ScaledParams, fscale: f64) -> Option<Table> {
    let (_, tr) = e.triple.as_ref()?;
    let mut t = Table::new(["omega1", "omega2", "re", "im", "se_re", "se_im", "analytic_re", "analytic_im"]);
    for (i, &w1) in tr.omega.iter().enumerate() {
        for (j, &w2) in tr.omega.iter().enumerate() {
            let an = if below(sp) {
                match e.representation {
                    Representation::PositiveP => triple_plusp(sp.mu, sp.gamma_r, w1, w2).ok().map(|z| z * sp.g2() * sp.g2()),
                    Representation::TruncatedWigner => triple_wigner(sp.mu, sp.gamma_r, w1, w2, sp.g).ok(),
                }
            } else {
                None
            };
            let v = tr.values[i][j];
            t.push(vec![
                num(w1 * fscale),
                num(w2 * fscale),
                num(v.re),
                num(v.im),
                num(tr.se_re[i][j]),
                num(tr.se_im[i][j]),
                opt(an.map(|z| z.re)),
                opt(an.map(|z| z.im)),
            ]);
        }
    }
    Some(t)
}

fn curves(a: &AnalyticCurve) -> Result<Artifacts> {
    let g = a.g2.sqrt();
    let (x_name, cols): (&str, &[&str]) = match a.curve {
        CurveKind::TotalMoment => ("mu", &["positive_p", "wigner", "linear"]),
        CurveKind::NlMoment => ("mu", &["positive_p", "wigner"]),
        CurveKind::OptSqueeze => ("mu", &["v_pi2", "v_pi2_linear"]),
        CurveKind::Unsqueezed => ("mu", &["v_zero", "v_zero_linear"]),
        CurveKind::Heisenberg => ("mu", &["product", "product_linear"]),
        CurveKind::Inference => ("mu", &["inference_variance", "inference_variance_linear"]),
        CurveKind::CriticalSqueeze => ("eta", &["yy_moment", "critical_xx"]),
    };
    let mut t = Table::new(["gamma_r", x_name].iter().chain(cols).copied());
    for &gr in &a.gamma_r {
        for x in a.grid() {
            let vals: Vec<f64> = match a.curve {
                CurveKind::TotalMoment => vec![
                    total_squeeze_moment(x, gr, a.g2, Representation::PositiveP)?,
                    total_squeeze_moment(x, gr, a.g2, Representation::TruncatedWigner)?,
                    1.0 / (1.0 + x),
                ],
                CurveKind::NlMoment => vec![
                    total_squeeze_moment(x, gr, a.g2, Representation::PositiveP)? - 1.0 / (1.0 + x),
                    total_squeeze_moment(x, gr, a.g2, Representation::TruncatedWigner)? - 1.0 / (1.0 + x),
                ],
                CurveKind::OptSqueeze => vec![v_pi2_zero(x, gr, a.g2)?, linear_or_domain(x)?.1],
                CurveKind::Unsqueezed => vec![spectrum_plusp(x, gr, a.g2, 0.0)?.0, linear_or_domain(x)?.0],
                CurveKind::Heisenberg => {
                    let (v0, vp) = spectrum_plusp(x, gr, a.g2, 0.0)?;
                    let (l0, lp) = linear_or_domain(x)?;
                    vec![v0 * vp, l0 * lp]
                }
                CurveKind::Inference => {
                    let (v0, vp) = spectrum_plusp(x, gr, a.g2, 0.0)?;
                    let (l0, lp) = linear_or_domain(x)?;
                    vec![inference_variance(v0, vp)?, inference_variance(l0, lp)?]
                }
                CurveKind::CriticalSqueeze => vec![critical_squeeze_moment(x, gr, g), critical_xx(x)],
            };
            let mut row = vec![num(gr), num(x)];
            row.extend(vals.into_iter().map(num));
            t.push(row);
        }
    }
    Ok(Artifacts {
        meta: vec![kv("curve", serde_json::to_value(a.curve)?.as_str().unwrap_or_default()), kv("g2", a.g2)],
        tables: vec![("curve.csv", t)],
        results: json!({}),
    })
}

fn linear_or_domain(mu: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&mu) {
        return Err(nopo_core::NopoError::Domain { what: "linear spectra", mu }.into());
    }
    Ok(linear_spectra(mu, 0.0))
}

fn critical(c: &CriticalScan, analytic_only: bool) -> Result<Artifacts> {
    let mut t = if analytic_only {
        Table::new(["eta", "oracle"])
    } else {
        Table::new(["eta", "r2", "r2_se", "r4", "r4_se", "oracle"])
    };
    for &eta in &c.etas {
        if analytic_only {
            t.push(vec![num(eta), num(critical_xx(eta))]);
        } else {
            let e = run_critical_ensemble(eta, &c.sde)?;
            t.push(vec![num(eta), num(e.r2.value), num(e.r2.se), num(e.r4.value), num(e.r4.se), num(critical_xx(eta))]);
        }
    }
    let meta = vec![
        kv("dt", c.sde.dt),
        kv("t_record", c.sde.t_record),
        kv("trajectories", c.sde.n_traj),
    ];
    Ok(Artifacts { meta, tables: vec![("critical.csv", t)], results: json!({}) })
}

/// Physical parameters of a simulation config, for callers that only need the echo.
pub fn describe(cfg: &ExperimentConfig) -> Result<Option<PhysicalParams>> {
    Ok(match cfg.mode()? {
        Mode::Simulation => Some(cfg.params()?),
        _ => None,
    })
}
