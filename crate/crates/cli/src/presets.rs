//! Built-in experiment catalog.

use nopo_core::sde::CriticalConfig;
use nopo_core::{IntegratorConfig, SpectralSettings};

use crate::config::{AnalyticCurve, CriticalScan, CurveKind, ExperimentConfig, Outputs, ScaledSpec};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: ExperimentConfig,
}

const GAMMA_SWEEP: [f64; 5] = [1e-3, 1e-2, 1e-1, 1.0, 10.0];

fn blank(name: &str, summary: &str) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        description: summary.into(),
        out_dir: format!("out/{name}").into(),
        physical_units: false,
        analytic_only: false,
        scaled: None,
        physical: None,
        integrator: IntegratorConfig::default(),
        spectra: None,
        outputs: Outputs::default(),
        analytic: None,
        critical: None,
    }
}

fn curve(name: &'static str, summary: &'static str, kind: CurveKind, gamma_r: &[f64], grid: (f64, f64, usize)) -> Preset {
    let mut c = blank(name, summary);
    c.analytic = Some(AnalyticCurve {
        curve: kind,
        g2: 0.001,
        gamma_r: gamma_r.to_vec(),
        from: grid.0,
        to: grid.1,
        points: grid.2,
    });
    Preset { name, summary, config: c }
}

/// Nonlinear-residual simulation with the long protocol (dτ = 0.001, τ = 10⁴, 2000 trajectories).
fn residual(name: &'static str, summary: &'static str, g2: f64, gamma_r: f64, mu: f64) -> Preset {
    let mut c = blank(name, summary);
    c.scaled = Some(ScaledSpec { g2, gamma_r, mu });
    c.spectra = Some(SpectralSettings { shadow: true, ..Default::default() });
    c.outputs = Outputs { spectra: true, residual: true, moments: true, epr: true, triple: None };
    Preset { name, summary, config: c }
}

pub fn catalog() -> Vec<Preset> {
    let drive = (0.0, 0.99, 100);
    let mut v = vec![
        curve(
            "fig_totalmoment",
            "intracavity squeezed moment vs drive, both representations, g2=0.001, gamma_r=0.5",
            CurveKind::TotalMoment,
            &[0.5],
            drive,
        ),
        curve(
            "fig_nlmom",
            "order-g2 correction to the squeezed moment vs drive, g2=0.001, gamma_r=0.1,1,10",
            CurveKind::NlMoment,
            &[0.1, 1.0, 10.0],
            drive,
        ),
        curve(
            "fig_optsqueeze",
            "zero-frequency squeezed spectrum vs drive, g2=0.001, gamma_r=1e-3..10",
            CurveKind::OptSqueeze,
            &GAMMA_SWEEP,
            drive,
        ),
        curve(
            "fig_unsqueezed",
            "zero-frequency unsqueezed spectrum vs drive, g2=0.001, gamma_r=1e-3..10",
            CurveKind::Unsqueezed,
            &GAMMA_SWEEP,
            drive,
        ),
        curve(
            "fig_heisenberg",
            "zero-frequency uncertainty product vs drive, g2=0.001, gamma_r=1e-3..10",
            CurveKind::Heisenberg,
            &GAMMA_SWEEP,
            drive,
        ),
        curve(
            "fig_inference",
            "zero-frequency inferred quadrature variance vs drive, g2=0.001, gamma_r=1e-3..10",
            CurveKind::Inference,
            &GAMMA_SWEEP,
            drive,
        ),
        residual("fig_mu05", "nonlinear squeezing spectrum, g2=0.005, gamma_r=1, mu=0.5", 0.005, 1.0, 0.5),
        residual("fig_mu09", "nonlinear squeezing spectrum, g2=0.001, gamma_r=0.5, mu=0.9", 0.001, 0.5, 0.9),
        residual(
            "fig_mu093",
            "nonlinear squeezing spectrum at the optimum drive, g2=0.001, gamma_r=0.01, mu=0.93",
            0.001,
            0.01,
            0.93,
        ),
    ];
    let mut xx = blank("crit_xx", "reduced critical equations vs the quadrature oracle over an eta grid");
    xx.critical = Some(CriticalScan {
        etas: (-8..=8).map(|i| 0.5 * i as f64).collect(),
        sde: CriticalConfig::default(),
    });
    v.push(Preset { name: "crit_xx", summary: "reduced critical equations vs the quadrature oracle over an eta grid", config: xx });
    v.push(curve(
        "crit_squeeze",
        "critical-frame squeezed moment vs eta, g2=0.001, gamma_r=0.01,0.1,1,10",
        CurveKind::CriticalSqueeze,
        &[0.01, 0.1, 1.0, 10.0],
        (-5.0, 5.0, 201),
    ));
    v
}

pub fn find(name: &str) -> Option<Preset> {
    catalog().into_iter().find(|p| p.name == name)
}
