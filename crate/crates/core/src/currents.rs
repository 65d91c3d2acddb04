//! Thermodynamic weights and steady-state currents.
//!
//! Currents are reported in units of `1/ħ` (energy), `e/ħ` (charge) and
//! `k_B/ħ` (entropy), without spin degeneracy.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{BandSpectrum, SampleSpec};
use crate::leads::LeadModel;
use crate::quadrature::{integrate_bands_vec, QuadratureConfig};
use crate::transport::{transmittance_inf, transmittance_n};

/// Inverse temperatures and chemical potentials of the two reservoirs.
/// An infinite `beta` is the zero-temperature limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoState {
    pub beta_l: f64,
    pub mu_l: f64,
    pub beta_r: f64,
    pub mu_r: f64,
}

impl ThermoState {
    pub fn new(beta_l: f64, mu_l: f64, beta_r: f64, mu_r: f64) -> Result<Self> {
        let state = Self {
            beta_l,
            mu_l,
            beta_r,
            mu_r,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn zero_temperature(mu_l: f64, mu_r: f64) -> Result<Self> {
        Self::new(f64::INFINITY, mu_l, f64::INFINITY, mu_r)
    }

    pub fn validate(&self) -> Result<()> {
        for beta in [self.beta_l, self.beta_r] {
            if !(beta > 0.0) {
                return Err(Error::Domain(format!("inverse temperature {beta} must be positive")));
            }
        }
        for mu in [self.mu_l, self.mu_r] {
            if !mu.is_finite() {
                return Err(Error::Domain(format!("chemical potential {mu} must be finite")));
            }
        }
        Ok(())
    }

    pub fn is_equilibrium(&self) -> bool {
        self.beta_l == self.beta_r && self.mu_l == self.mu_r
    }

    pub fn has_zero_temperature(&self) -> bool {
        self.beta_l.is_infinite() || self.beta_r.is_infinite()
    }

    /// Energies where the weights jump.
    pub fn discontinuities(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.beta_l.is_infinite() {
            out.push(self.mu_l);
        }
        if self.beta_r.is_infinite() {
            out.push(self.mu_r);
        }
        out
    }
}

/// Fermi-Dirac occupation `1 / (1 + e^{beta (E - mu)})`.
pub fn fermi_dirac(beta: f64, mu: f64, energy: f64) -> f64 {
    logistic(zeta(beta, mu, energy))
}

/// `1 / (1 + e^x)` without overflow; `x = ±inf` gives 0 or 1.
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `beta (E - mu)`, taken as 0 at `E = mu` even for infinite `beta`.
fn zeta(beta: f64, mu: f64, energy: f64) -> f64 {
    let x = energy - mu;
    if x == 0.0 {
        0.0
    } else {
        beta * x
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub zeta_l: f64,
    pub zeta_r: f64,
    pub delta_l: f64,
    pub delta_r: f64,
    pub varsigma: f64,
}

/// `zeta`, occupation differences `Delta` and entropy weight `varsigma` at `E`.
pub fn weights(thermo: &ThermoState, energy: f64) -> Weights {
    let zeta_l = zeta(thermo.beta_l, thermo.mu_l, energy);
    let zeta_r = zeta(thermo.beta_r, thermo.mu_r, energy);
    let delta_l = if zeta_l.is_finite() && zeta_r.is_finite() {
        // rho_l - rho_r with the sign of zeta_r - zeta_l kept exactly
        if zeta_r >= zeta_l {
            -logistic(zeta_l) * logistic(-zeta_r) * (zeta_l - zeta_r).exp_m1()
        } else {
            logistic(zeta_r) * logistic(-zeta_l) * (zeta_r - zeta_l).exp_m1()
        }
    } else {
        logistic(zeta_l) - logistic(zeta_r)
    };
    let varsigma = if delta_l == 0.0 {
        0.0
    } else {
        (zeta_r - zeta_l) * delta_l
    };
    Weights {
        zeta_l,
        zeta_r,
        delta_l,
        delta_r: -delta_l,
        varsigma,
    }
}

/// Energy where `Delta_{l/r}` changes sign, `(beta_r mu_r - beta_l mu_l) / (beta_r - beta_l)`.
/// `None` for equal or infinite inverse temperatures.
pub fn sign_change_point(thermo: &ThermoState) -> Option<f64> {
    let (bl, br) = (thermo.beta_l, thermo.beta_r);
    if bl == br || !bl.is_finite() || !br.is_finite() {
        return None;
    }
    Some((br * thermo.mu_r - bl * thermo.mu_l) / (br - bl))
}

/// Averaged steady currents with their consistency residuals.
///
/// `entropy_j` is `+inf` when a reservoir is at zero temperature and charge
/// flows; the entropy balance residual is then `NaN` (both serialize as `null`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentReport {
    pub phi_l: f64,
    pub phi_r: f64,
    pub i_l: f64,
    pub i_r: f64,
    pub entropy_j: f64,
    pub conservation_residuals: [f64; 2],
    pub entropy_balance_residual: f64,
    pub error_estimate: f64,
}

impl CurrentReport {
    fn assemble(thermo: &ThermoState, raw: [f64; 6], error_estimate: f64, abs_tol: f64) -> Result<Self> {
        let [phi_l, phi_r, i_l, i_r, s, abs_delta] = raw.map(|v| v / (2.0 * PI));
        let (entropy_j, entropy_balance_residual) = if thermo.has_zero_temperature() {
            if abs_delta > 0.0 {
                (f64::INFINITY, f64::NAN)
            } else {
                (0.0, 0.0)
            }
        } else {
            let balance = s
                + thermo.beta_l * (phi_l - thermo.mu_l * i_l)
                + thermo.beta_r * (phi_r - thermo.mu_r * i_r);
            (s, balance.abs())
        };
        if entropy_j < -abs_tol {
            return Err(Error::Invariant(format!(
                "negative entropy production {entropy_j:e}"
            )));
        }
        Ok(Self {
            phi_l,
            phi_r,
            i_l,
            i_r,
            entropy_j,
            conservation_residuals: [(phi_l + phi_r).abs(), (i_l + i_r).abs()],
            entropy_balance_residual,
            error_estimate: error_estimate / (2.0 * PI),
        })
    }
}

/// Integrates `T(E)` against all current weights over `region`.
fn currents_with<F>(
    region: &BandSpectrum,
    extra_breaks: &[f64],
    thermo: &ThermoState,
    quad: &QuadratureConfig,
    transmittance: F,
) -> Result<CurrentReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    thermo.validate()?;
    let mut breaks = thermo.discontinuities();
    breaks.extend_from_slice(extra_breaks);
    let zero_t = thermo.has_zero_temperature();
    let est = integrate_bands_vec(region, &breaks, quad, |e| {
        let w = weights(thermo, e);
        if w.delta_l == 0.0 {
            return Ok([0.0; 6]);
        }
        let t = transmittance(e)?;
        let s = if zero_t { 0.0 } else { t * w.varsigma };
        Ok([
            t * e * w.delta_l,
            t * e * w.delta_r,
            t * w.delta_l,
            t * w.delta_r,
            s,
            t * w.delta_l.abs(),
        ])
    })?;
    CurrentReport::assemble(thermo, est.value, est.error_estimate, quad.abs_tol)
}

fn lead_breaks(sample: &SampleSpec, lead_l: &LeadModel, lead_r: &LeadModel) -> Result<Vec<f64>> {
    let mut out = lead_l.kinks()?;
    out.extend(lead_r.kinks()?);
    out.extend(
        sample
            .band_spectrum()?
            .bands()
            .iter()
            .flat_map(|b| [b.lo, b.hi]),
    );
    Ok(out)
}

/// Landauer-Büttiker currents of the `N`-fold sample.
pub fn lb_currents(
    sample: &SampleSpec,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    n: u64,
    thermo: &ThermoState,
    quad: &QuadratureConfig,
) -> Result<CurrentReport> {
    let region = lead_l.support()?.intersect(&lead_r.support()?);
    let breaks = lead_breaks(sample, lead_l, lead_r)?;
    currents_with(&region, &breaks, thermo, quad, |e| {
        transmittance_n(sample, lead_l, lead_r, kappa, n, e)
    })
}

/// Currents in the crystalline limit `N -> inf`.
pub fn crystalline_currents(
    sample: &SampleSpec,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    thermo: &ThermoState,
    quad: &QuadratureConfig,
) -> Result<CurrentReport> {
    let region = sample
        .band_spectrum()?
        .intersect(&lead_l.support()?)
        .intersect(&lead_r.support()?);
    let breaks = lead_breaks(sample, lead_l, lead_r)?;
    currents_with(&region, &breaks, thermo, quad, |e| {
        transmittance_inf(sample, lead_l, lead_r, kappa, e)
    })
}

/// Reflectionless (Thouless) currents: `T ≡ 1` on the crystal spectrum.
pub fn thouless_currents(
    sample: &SampleSpec,
    thermo: &ThermoState,
    quad: &QuadratureConfig,
) -> Result<CurrentReport> {
    currents_with(&sample.band_spectrum()?, &[], thermo, quad, |_| Ok(1.0))
}

/// Zero-temperature conductance over `[mu_l, mu_r]` and its Thouless bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conductance {
    pub g: f64,
    pub g_th: f64,
}

pub fn zero_temperature_conductance(
    sample: &SampleSpec,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    mu_l: f64,
    mu_r: f64,
    quad: &QuadratureConfig,
) -> Result<Conductance> {
    if !(mu_r > mu_l) {
        return Err(Error::Domain(format!(
            "conductance window [{mu_l}, {mu_r}] is empty"
        )));
    }
    let thermo = ThermoState::zero_temperature(mu_l, mu_r)?;
    let report = crystalline_currents(sample, lead_l, lead_r, kappa, &thermo, quad)?;
    let g = report.i_r / (mu_r - mu_l);
    let g_th = sample.thouless_conductance(mu_l, mu_r)?;
    if g > g_th + quad.abs_tol {
        return Err(Error::Invariant(format!(
            "conductance {g} exceeds its Thouless bound {g_th}"
        )));
    }
    Ok(Conductance { g, g_th })
}

/// Test function for the weak convergence `∫T_N f -> ∫T_inf f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightFunction {
    Indicator { lo: f64, hi: f64 },
    Gaussian { center: f64, width: f64 },
}

impl WeightFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Indicator { lo, hi } if !(hi > lo) => {
                Err(Error::Domain(format!("indicator window [{lo}, {hi}] is empty")))
            }
            Self::Gaussian { width, .. } if !(width > 0.0) => {
                Err(Error::Domain(format!("gaussian width {width} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, energy: f64) -> f64 {
        match *self {
            Self::Indicator { lo, hi } => {
                if (lo..=hi).contains(&energy) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Gaussian { center, width } => (-0.5 * ((energy - center) / width).powi(2)).exp(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Indicator { lo, hi } => vec![lo, hi],
            Self::Gaussian { .. } => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub int_tn: f64,
    pub int_tinf: f64,
    pub abs_diff: f64,
    pub error_estimate: f64,
    /// Set when the row's quadrature failed; the values are then partial.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Minimum of `abs_diff` over the last `window` rows.
    pub trailing_min: f64,
    pub window: usize,
}

/// Rows per trailing window of a convergence table.
pub const TRAILING_WINDOW: usize = 5;

/// Tolerance used by the rows of a convergence study.
pub const STUDY_ABS_TOL: f64 = 1e-6;

/// Tabulates `∫T_N f` against `∫T_inf f` for increasing `N`.
///
/// Rows use `abs_tol = 1e-6` and `panels_per_band * N` initial panels so the
/// `e^{2iNθ}` oscillation stays resolved.
pub fn convergence_study(
    sample: &SampleSpec,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    f: &WeightFunction,
    n_list: &[u64],
    quad: &QuadratureConfig,
) -> Result<ConvergenceTable> {
    f.validate()?;
    if n_list.is_empty() || n_list.contains(&0) || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("N list must be positive and strictly increasing".into()));
    }
    let base = QuadratureConfig {
        abs_tol: STUDY_ABS_TOL,
        ..*quad
    };
    base.validate()?;
    let mut breaks = lead_breaks(sample, lead_l, lead_r)?;
    breaks.extend(f.breakpoints());
    let region_n = lead_l.support()?.intersect(&lead_r.support()?);
    let region_inf = sample.band_spectrum()?.intersect(&region_n);

    let tinf = integrate_bands_vec(&region_inf, &breaks, &base, |e| {
        Ok([transmittance_inf(sample, lead_l, lead_r, kappa, e)? * f.eval(e)])
    })?;
    let int_tinf = tinf.value[0];

    let rows: Vec<Result<ConvergenceRow>> = n_list
        .par_iter()
        .map(|&n| {
            let rowquad = base.with_panel_factor(n as usize);
            let outcome = integrate_bands_vec(&region_n, &breaks, &rowquad, |e| {
                Ok([transmittance_n(sample, lead_l, lead_r, kappa, n, e)? * f.eval(e)])
            });
            match outcome {
                Ok(est) => Ok(ConvergenceRow {
                    n,
                    int_tn: est.value[0],
                    int_tinf,
                    abs_diff: (est.value[0] - int_tinf).abs(),
                    error_estimate: est.error_estimate + tinf.error_estimate,
                    failure: None,
                }),
                Err(Error::Quadrature {
                    partial,
                    error_estimate,
                }) => Ok(ConvergenceRow {
                    n,
                    int_tn: partial[0],
                    int_tinf,
                    abs_diff: (partial[0] - int_tinf).abs(),
                    error_estimate,
                    failure: Some("quadrature did not converge".into()),
                }),
                Err(other) => Err(other),
            }
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let window = TRAILING_WINDOW.min(rows.len());
    let trailing_min = rows[rows.len() - window..]
        .iter()
        .map(|r| r.abs_diff)
        .fold(f64::INFINITY, f64::min);
    Ok(ConvergenceTable {
        rows,
        trailing_min,
        window,
    })
}
