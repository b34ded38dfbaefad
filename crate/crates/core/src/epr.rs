//! EPR inference and two-mode entanglement criteria on spectra.

use serde::{Deserialize, Serialize};

use crate::error::{NopoError, Result};
use crate::spectra::SpectrumEstimate;

/// Linear-inference variance 2V⁰V^{π/2}/(V⁰+V^{π/2}).
pub fn inference_variance(v_zero: f64, v_pi2: f64) -> Result<f64> {
    if v_zero.is_infinite() {
        return Ok(2.0 * v_pi2);
    }
    let s = v_zero + v_pi2;
    if s == 0.0 || !s.is_finite() {
        return Err(NopoError::Estimation(format!("inference variance undefined for V0={v_zero}, Vpi2={v_pi2}")));
    }
    Ok(2.0 * v_zero * v_pi2 / s)
}

/// Optimal linear gains (c_x, c_y); c_y = −c_x by the mode symmetry.
pub fn inference_gains(v_zero: f64, v_pi2: f64) -> Result<(f64, f64)> {
    if v_zero.is_infinite() {
        return Ok((1.0, -1.0));
    }
    let s = v_zero + v_pi2;
    if s == 0.0 || !s.is_finite() {
        return Err(NopoError::Estimation(format!("inference gains undefined for V0={v_zero}, Vpi2={v_pi2}")));
    }
    let c = (v_zero - v_pi2) / s;
    Ok((c, -c))
}

pub fn epr_flag(var_x: f64, var_y: f64) -> bool {
    var_x * var_y < 1.0
}

pub fn duan_simon_flag(v_pi2: f64) -> bool {
    v_pi2 < 1.0
}

/// Sum form of the inseparability bound on the two-mode variances.
pub fn duan_sum(var_dx: f64, var_dy: f64) -> bool {
    var_dx + var_dy < 4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprRow {
    pub omega: f64,
    pub inference_variance: f64,
    pub epr_product: f64,
    pub v_pi2: f64,
    pub heisenberg_product: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub epr_demonstrated: bool,
    pub entangled_duan_simon: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprReport {
    pub rows: Vec<EprRow>,
}

impl EprReport {
    pub fn at(&self, omega: f64) -> Option<&EprRow> {
        self.rows.iter().find(|r| (r.omega - omega).abs() < 1e-12)
    }
}

/// Per-bin criteria. Flags are decided on values moved one standard error towards failure.
pub fn epr_report(spec: &SpectrumEstimate) -> EprReport {
    let rows = spec
        .omega
        .iter()
        .enumerate()
        .map(|(k, &omega)| {
            let v0 = spec.v_zero[k];
            let vp = spec.v_pi2[k];
            let se0 = finite_or_zero(spec.v_zero_se[k]);
            let sep = finite_or_zero(spec.v_pi2_se[k]);
            let inf = inference_variance(v0, vp).unwrap_or(f64::NAN);
            let (c_x, c_y) = inference_gains(v0, vp).unwrap_or((f64::NAN, f64::NAN));
            // the inference variance increases in both arguments
            let inf_hi = inference_variance(v0 + se0, vp + sep).unwrap_or(f64::NAN);
            EprRow {
                omega,
                inference_variance: inf,
                epr_product: inf * inf,
                v_pi2: vp,
                heisenberg_product: v0 * vp,
                c_x,
                c_y,
                epr_demonstrated: epr_flag(inf_hi, inf_hi),
                entangled_duan_simon: duan_simon_flag(vp + sep),
            }
        })
        .collect();
    EprReport { rows }
}

fn finite_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}
