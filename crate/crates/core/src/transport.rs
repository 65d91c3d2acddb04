//! Closed-form transmittances of the N-fold repeated sample.
//!
//! The sample Green matrix is expressed through the eigendata of the
//! one-period transfer matrix `T_L(E)`, so the cost of `T_N(E)` does not grow
//! with `N`. Inside a band `alpha^N = e^{iN theta}` is exact in modulus; in a
//! gap every expression is divided by `alpha^N` first, so only `alpha^{-N}`
//! (which underflows harmlessly) is ever formed.

use num_complex::Complex64;

use crate::error::{Error, Result};
pub use crate::green::GreenMatrix2;
use crate::jacobi::{SampleSpec, TransferMatrix2, EDGE_WINDOW};
use crate::leads::{crystal_m_functions, LeadModel};

/// Values within this distance outside `[0, 1]` are rounding and get clamped.
pub const CLAMP_ALLOWANCE: f64 = 1e-9;

/// Eigendata of `T_L(E)` under the fixed normalization conventions.
///
/// In a band `alpha = e^{i theta}`, `phi_± = 1`, `psi_- = conj(psi_+)` and
/// `Im(kappa_S psi_+) > 0` (so `Im psi_+ > 0` whenever `kappa_S > 0`).
/// In a gap `alpha` is real with `|alpha| > 1` and all components are real.
/// The eigenvector for `alpha^{±1}` is `(phi_±, kappa_S psi_±)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferEigenData {
    pub energy: f64,
    pub alpha: Complex64,
    pub phi_plus: Complex64,
    pub phi_minus: Complex64,
    pub psi_plus: Complex64,
    pub psi_minus: Complex64,
    pub theta: Option<f64>,
    pub in_band: bool,
    kappa_s: f64,
    transfer: TransferMatrix2,
}

/// `alpha^N` and `alpha^{-N}`, both multiplied by a common `scale`.
#[derive(Clone, Copy, Debug)]
struct ScaledPowers {
    up: Complex64,
    down: Complex64,
    scale: Complex64,
}

impl TransferEigenData {
    pub fn new(sample: &SampleSpec, energy: f64) -> Result<Self> {
        let t = sample.one_period_transfer(energy);
        let tr = t.trace();
        if (tr.abs() - 2.0).abs() <= EDGE_WINDOW {
            return Err(Error::BandEdge { energy, trace: tr });
        }
        let kappa_s = sample.kappa_s();
        if tr.abs() < 2.0 {
            if t.b.abs() <= 1e-12 * t.norm_max() {
                return Err(Error::DegeneratePivot {
                    energy,
                    pivot: t.b,
                });
            }
            let theta = (0.5 * tr).acos().copysign(t.b);
            let alpha = Complex64::from_polar(1.0, theta);
            let psi_plus = (alpha - t.a) / (t.b * kappa_s);
            let psi_minus = (alpha.conj() - t.a) / (t.b * kappa_s);
            return Ok(Self {
                energy,
                alpha,
                phi_plus: Complex64::new(1.0, 0.0),
                phi_minus: Complex64::new(1.0, 0.0),
                psi_plus,
                psi_minus,
                theta: Some(theta),
                in_band: true,
                kappa_s,
                transfer: t,
            });
        }
        let alpha = 0.5 * (tr + tr.signum() * (tr * tr - 4.0).sqrt());
        let plus = real_eigenvector(&t, alpha);
        let minus = real_eigenvector(&t, 1.0 / alpha);
        Ok(Self {
            energy,
            alpha: Complex64::new(alpha, 0.0),
            phi_plus: Complex64::new(plus[0], 0.0),
            phi_minus: Complex64::new(minus[0], 0.0),
            psi_plus: Complex64::new(plus[1] / kappa_s, 0.0),
            psi_minus: Complex64::new(minus[1] / kappa_s, 0.0),
            theta: None,
            in_band: false,
            kappa_s,
            transfer: t,
        })
    }

    /// Eigenvector `(phi_+, kappa_S psi_+)` for `alpha`.
    pub fn eigvec_plus(&self) -> [Complex64; 2] {
        [self.phi_plus, self.kappa_s * self.psi_plus]
    }

    /// Eigenvector `(phi_-, kappa_S psi_-)` for `1/alpha`.
    pub fn eigvec_minus(&self) -> [Complex64; 2] {
        [self.phi_minus, self.kappa_s * self.psi_minus]
    }

    pub fn transfer(&self) -> &TransferMatrix2 {
        &self.transfer
    }

    /// Largest of the two eigen-residuals `|T Psi - alpha^{±1} Psi|`.
    pub fn residual(&self) -> f64 {
        let check = |v: [Complex64; 2], mu: Complex64| {
            let w = self.transfer.apply(v);
            (w[0] - mu * v[0]).norm().max((w[1] - mu * v[1]).norm())
        };
        check(self.eigvec_plus(), self.alpha).max(check(self.eigvec_minus(), 1.0 / self.alpha))
    }

    fn powers(&self, n: u64) -> ScaledPowers {
        if self.in_band {
            let phase = self.theta.unwrap() * n as f64;
            ScaledPowers {
                up: Complex64::from_polar(1.0, phase),
                down: Complex64::from_polar(1.0, -phase),
                scale: Complex64::new(1.0, 0.0),
            }
        } else {
            let log_mod = self.alpha.re.abs().ln() * n as f64;
            let sign = if self.alpha.re < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
            ScaledPowers {
                up: Complex64::new(1.0, 0.0),
                down: Complex64::new((-2.0 * log_mod).exp(), 0.0),
                scale: Complex64::new(sign * (-log_mod).exp(), 0.0),
            }
        }
    }

    /// `phi_+ psi_- - phi_- psi_+`.
    fn wronskian(&self) -> Complex64 {
        self.phi_plus * self.psi_minus - self.phi_minus * self.psi_plus
    }
}

fn real_eigenvector(t: &TransferMatrix2, mu: f64) -> [f64; 2] {
    let v1 = [t.b, mu - t.a];
    let v2 = [mu - t.d, t.c];
    let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) { v1 } else { v2 };
    let norm = v[0].hypot(v[1]);
    [v[0] / norm, v[1] / norm]
}

/// Eigendata of `T_L(E)`.
pub fn transfer_eigendata(sample: &SampleSpec, energy: f64) -> Result<TransferEigenData> {
    TransferEigenData::new(sample, energy)
}

/// Eigendata, moving `E` by `1e-9 (1 + |E|)` when the in-band pivot `b(E)` vanishes.
fn eigendata_nudged(sample: &SampleSpec, energy: f64) -> Result<TransferEigenData> {
    match TransferEigenData::new(sample, energy) {
        Err(Error::DegeneratePivot { .. }) => {
            let moved = energy + 1e-9 * (1.0 + energy.abs());
            log::debug!("degenerate pivot at E = {energy}, nudged to {moved}");
            TransferEigenData::new(sample, moved)
        }
        other => other,
    }
}

/// Dirichlet Green matrix `G_S^(N)(E)` of the N-fold sample from the eigendata
/// closed form (with a transfer-matrix power on the band-edge window).
pub fn sample_green(sample: &SampleSpec, n: u64, energy: f64) -> Result<GreenMatrix2> {
    check_repetitions(n)?;
    let data = match eigendata_nudged(sample, energy) {
        Ok(data) => data,
        Err(Error::BandEdge { .. }) => return sample_green_by_power(sample, n, energy),
        Err(e) => return Err(e),
    };
    let p = data.powers(n);
    let forward = p.up * data.phi_plus * data.psi_minus;
    let backward = p.down * data.phi_minus * data.psi_plus;
    let d_n = forward - backward;
    if d_n.norm() <= 1e-12 * (forward.norm() + backward.norm()) {
        return Err(Error::SampleEigenvalue(energy));
    }
    let pref = -1.0 / (sample.kappa_s() * d_n);
    let off = pref * data.wronskian() * p.scale;
    Ok(GreenMatrix2 {
        ll: pref * data.phi_plus * data.phi_minus * (p.up - p.down),
        lr: off,
        rl: off,
        rr: pref * data.psi_plus * data.psi_minus * (p.up - p.down),
        energy: data.energy,
        n,
    })
}

/// `G_S^(N)` read off `T_{NL} = T_L^N` through the graph relation.
fn sample_green_by_power(sample: &SampleSpec, n: u64, energy: f64) -> Result<GreenMatrix2> {
    let t = sample.one_period_transfer(energy).pow(n);
    if t.a.abs() <= 1e-14 * t.norm_max() {
        return Err(Error::SampleEigenvalue(energy));
    }
    let k = sample.kappa_s();
    let ll = t.b / t.a;
    let lr = -1.0 / (k * t.a);
    // rl comes out of a cancellation; lr is the well-conditioned copy
    let rl = (t.c * ll - t.d) / k;
    debug_assert!(
        (lr - rl).abs() <= 1e-8 * ((t.c * ll).abs() + t.d.abs()).max(1.0) / k.abs(),
        "asymmetric Green matrix: {lr} vs {rl}"
    );
    Ok(GreenMatrix2 {
        ll: Complex64::new(ll, 0.0),
        lr: Complex64::new(lr, 0.0),
        rl: Complex64::new(lr, 0.0),
        rr: Complex64::new(-t.c / (k * k * t.a), 0.0),
        energy,
        n,
    })
}

/// Off-diagonal element `G_lr^(N)(E)` of the Green matrix of the coupled system.
pub fn full_green_lr(
    sample: &SampleSpec,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    n: u64,
    energy: f64,
) -> Result<Complex64> {
    check_repetitions(n)?;
    check_kappa(kappa)?;
    let f_l = lead_l.boundary_value(energy)?.value;
    let f_r = lead_r.boundary_value(energy)?.value;
    let data = match eigendata_nudged(sample, energy) {
        Ok(data) => data,
        Err(Error::BandEdge { .. }) => {
            return coupled_green_lr(&sample_green_by_power(sample, n, energy)?, kappa, f_l, f_r)
        }
        Err(e) => return Err(e),
    };
    let k_s = sample.kappa_s();
    let eta2 = (kappa / k_s).powi(2);
    let psi_t_plus = data.psi_plus + eta2 * k_s * data.phi_plus * f_l;
    let psi_t_minus = data.psi_minus + eta2 * k_s * data.phi_minus * f_l;
    let phi_t_plus = data.phi_plus + eta2 * k_s * data.psi_plus * f_r;
    let phi_t_minus = data.phi_minus + eta2 * k_s * data.psi_minus * f_r;
    let p = data.powers(n);
    let forward = p.up * phi_t_plus * psi_t_minus;
    let backward = p.down * phi_t_minus * psi_t_plus;
    let denom = forward - backward;
    if denom.norm() <= 1e-14 * (forward.norm() + backward.norm()) || denom.norm() == 0.0 {
        return Err(Error::SingularEnergy(energy));
    }
    Ok(-data.wronskian() * p.scale / (k_s * denom))
}

/// `G_lr = G_S,lr / det(I - kappa² G_S F)`.
pub fn coupled_green_lr(
    g: &GreenMatrix2,
    kappa: f64,
    f_l: Complex64,
    f_r: Complex64,
) -> Result<Complex64> {
    let k2 = kappa * kappa;
    let det = (1.0 - k2 * g.ll * f_l) * (1.0 - k2 * g.rr * f_r) - k2 * k2 * g.lr * g.rl * f_l * f_r;
    if det.norm() == 0.0 {
        return Err(Error::SingularEnergy(g.energy));
    }
    Ok(g.lr / det)
}

/// Transmittance `T_N(E) = 4 kappa⁴ |G_lr^(N)|² Im F_l Im F_r` of the N-fold sample.
pub fn transmittance_n(
    sample: &SampleSpec,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    n: u64,
    energy: f64,
) -> Result<f64> {
    check_repetitions(n)?;
    check_kappa(kappa)?;
    if !lead_l.essential_support(energy) || !lead_r.essential_support(energy) {
        return Ok(0.0);
    }
    let im_l = lead_l.boundary_value(energy)?.value.im;
    let im_r = lead_r.boundary_value(energy)?.value.im;
    let g = full_green_lr(sample, lead_l, lead_r, kappa, n, energy)?;
    clamp_unit(4.0 * kappa.powi(4) * g.norm_sqr() * im_l * im_r, energy)
}

/// Crystalline-limit transmittance `T_inf(E)`; zero off
/// `sp(h_crystal) ∩ Σ_l ∩ Σ_r` and on the band-edge window.
pub fn transmittance_inf(
    sample: &SampleSpec,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    energy: f64,
) -> Result<f64> {
    check_kappa(kappa)?;
    if sample.discriminant(energy).abs() >= 2.0 - EDGE_WINDOW
        || !lead_l.essential_support(energy)
        || !lead_r.essential_support(energy)
    {
        return Ok(0.0);
    }
    let (m_l, m_r) = crystal_m_functions(sample, energy)?;
    let f_l = lead_l.boundary_value(energy)?.value;
    let f_r = lead_r.boundary_value(energy)?.value;
    let ks2 = sample.kappa_s().powi(2);
    let k2 = kappa * kappa;
    let mismatch = |m: Complex64, f: Complex64| {
        (ks2 * m - k2 * f).norm_sqr() / ((ks2 * m.im) * (k2 * f.im))
    };
    let t = 1.0 / (1.0 + 0.25 * (mismatch(m_r, f_r) + mismatch(m_l, f_l)));
    clamp_unit(t, energy)
}

/// Polar data `r e^{i vartheta}` controlling the oscillation of `T_N` around
/// `T_inf`, together with the Bloch phase `theta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RThetaDiagnostic {
    pub r: f64,
    pub vartheta: f64,
    pub theta: f64,
}

pub fn r_theta_diagnostic(
    sample: &SampleSpec,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    energy: f64,
) -> Result<RThetaDiagnostic> {
    check_kappa(kappa)?;
    if !lead_l.essential_support(energy) || !lead_r.essential_support(energy) {
        return Err(Error::Domain(format!(
            "E = {energy} lies outside the lead supports"
        )));
    }
    let (m_l, m_r) = crystal_m_functions(sample, energy)?;
    let data = eigendata_nudged(sample, energy)?;
    let f_l = lead_l.boundary_value(energy)?.value;
    let f_r = lead_r.boundary_value(energy)?.value;
    let eta2 = (kappa / sample.kappa_s()).powi(2);
    let ratio = |m: Complex64, f: Complex64| (m - eta2 * f) / (m.conj() - eta2 * f);
    let product = ratio(m_l, f_l) * ratio(m_r, f_r) * m_r.conj() / m_r;
    Ok(RThetaDiagnostic {
        r: product.norm(),
        vartheta: product.arg(),
        theta: data.theta.unwrap(),
    })
}

/// Reflection probability `R = 1 - T`.
pub fn reflection(transmittance: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&transmittance));
    1.0 - transmittance
}

/// Applies the clamping policy: rounding up to [`CLAMP_ALLOWANCE`] outside
/// `[0, 1]` is absorbed, anything larger is an error.
pub fn clamp_unit(value: f64, energy: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        return Ok(value);
    }
    if (-CLAMP_ALLOWANCE..0.0).contains(&value) {
        log::trace!("clamped T = {value} to 0 at E = {energy}");
        return Ok(0.0);
    }
    if value > 1.0 && value <= 1.0 + CLAMP_ALLOWANCE {
        log::trace!("clamped T = {value} to 1 at E = {energy}");
        return Ok(1.0);
    }
    Err(Error::Clamp { energy, value })
}

fn check_repetitions(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("number of repetitions N must be positive".into()));
    }
    Ok(())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::Domain(format!("coupling kappa = {kappa} must be finite and nonzero")));
    }
    Ok(())
}
