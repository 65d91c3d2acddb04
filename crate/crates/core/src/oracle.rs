//! Brute-force resolvent of the N-fold sample.
//!
//! The leads are folded into the end sites as self-energies `-kappa² F`, and
//! the two needed Green-matrix columns come from a pivoted tridiagonal solve.
//! This path never touches transfer matrices; it only reads the periodized
//! Jacobi parameters and the lead boundary values.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::green::GreenMatrix2;
use crate::jacobi::SampleSpec;
use crate::leads::LeadModel;

/// Relative bound on `|(H_eff - E) x - b| / |b|` accepted from a solve.
pub const RESIDUAL_BOUND: f64 = 1e-11;

/// `h_S^(N) - kappa² F_l |1><1| - kappa² F_r |NL><NL|` at a fixed real energy.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian {
    pub diagonal: Vec<Complex64>,
    pub offdiagonal: Vec<f64>,
    pub energy: f64,
}

impl EffectiveHamiltonian {
    /// Dirichlet restriction of the crystal to `NL` sites, no leads.
    pub fn dirichlet(sample: &SampleSpec, n: u64, energy: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("number of repetitions N must be positive".into()));
        }
        let dim = n as usize * sample.len();
        Ok(Self {
            diagonal: (1..=dim as i64)
                .map(|x| Complex64::new(sample.onsite_at(x), 0.0))
                .collect(),
            offdiagonal: (1..dim as i64).map(|x| sample.hop_at(x)).collect(),
            energy,
        })
    }

    /// Sample coupled to both leads through their self-energies.
    pub fn coupled(
        sample: &SampleSpec,
        n: u64,
        lead_l: &LeadModel,
        lead_r: &LeadModel,
        kappa: f64,
        energy: f64,
    ) -> Result<Self> {
        let mut h = Self::dirichlet(sample, n, energy)?;
        let k2 = kappa * kappa;
        let last = h.diagonal.len() - 1;
        h.diagonal[0] -= k2 * lead_l.boundary_value(energy)?.value;
        h.diagonal[last] -= k2 * lead_r.boundary_value(energy)?.value;
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Solves `(H - E) x = e_site`.
    pub fn solve_unit(&self, site: usize) -> Result<Vec<Complex64>> {
        let mut rhs = vec![Complex64::new(0.0, 0.0); self.dim()];
        rhs[site] = Complex64::new(1.0, 0.0);
        let shifted = self.shifted();
        let x = shifted.solve(&rhs).ok_or(Error::SingularEnergy(self.energy))?;
        let residual = shifted.residual(&x, &rhs);
        let bound = RESIDUAL_BOUND * norm(&rhs);
        if !(residual <= bound) {
            return Err(Error::Residual {
                energy: self.energy,
                residual,
                bound,
            });
        }
        Ok(x)
    }

    /// End-site block of `(H - E)^{-1}`.
    pub fn end_green(&self, n: u64) -> Result<GreenMatrix2> {
        let last = self.dim() - 1;
        let left = self.solve_unit(0)?;
        let right = self.solve_unit(last)?;
        Ok(GreenMatrix2 {
            ll: left[0],
            rl: left[last],
            lr: right[0],
            rr: right[last],
            energy: self.energy,
            n,
        })
    }

    fn shifted(&self) -> Tridiagonal {
        let off: Vec<Complex64> = self
            .offdiagonal
            .iter()
            .map(|&j| Complex64::new(j, 0.0))
            .collect();
        Tridiagonal {
            sub: off.clone(),
            diag: self.diagonal.iter().map(|d| d - self.energy).collect(),
            sup: off,
        }
    }
}

/// Green matrix of the coupled system from the dense resolvent.
pub fn resolvent_green(
    sample: &SampleSpec,
    n: u64,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    energy: f64,
) -> Result<GreenMatrix2> {
    EffectiveHamiltonian::coupled(sample, n, lead_l, lead_r, kappa, energy)?.end_green(n)
}

/// Green matrix of the uncoupled Dirichlet sample.
pub fn dirichlet_sample_green(sample: &SampleSpec, n: u64, energy: f64) -> Result<GreenMatrix2> {
    EffectiveHamiltonian::dirichlet(sample, n, energy)?.end_green(n)
}

/// `T_N(E)` computed from the dense resolvent.
pub fn oracle_transmittance(
    sample: &SampleSpec,
    n: u64,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    kappa: f64,
    energy: f64,
) -> Result<f64> {
    let im_l = lead_l.boundary_value(energy)?.value.im;
    let im_r = lead_r.boundary_value(energy)?.value.im;
    if im_l == 0.0 || im_r == 0.0 {
        return Ok(0.0);
    }
    let g = resolvent_green(sample, n, lead_l, lead_r, kappa, energy)?;
    Ok(4.0 * kappa.powi(4) * g.lr.norm_sqr() * im_l * im_r)
}

/// Complex tridiagonal matrix: `sub[i] = A[i+1][i]`, `sup[i] = A[i][i+1]`.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub sup: Vec<Complex64>,
}

impl Tridiagonal {
    /// Gaussian elimination with partial pivoting (row interchanges create a
    /// second superdiagonal). Returns `None` on an exactly zero pivot.
    pub fn solve(&self, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
        let n = self.diag.len();
        assert_eq!(rhs.len(), n);
        let mut d = self.diag.clone();
        let mut dl = self.sub.clone();
        let mut du = self.sup.clone();
        let mut du2 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if d[i].l1_norm() >= dl[i].l1_norm() {
                if d[i] == Complex64::new(0.0, 0.0) {
                    return None;
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] = b[i + 1] - fact * b[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du2[i];
                }
                du[i] = temp;
                let bi = b[i];
                b[i] = b[i + 1];
                b[i + 1] = bi - fact * b[i + 1];
            }
            dl[i] = Complex64::new(0.0, 0.0);
        }
        if n == 0 || d[n - 1] == Complex64::new(0.0, 0.0) {
            return None;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        x[n - 1] = b[n - 1] / d[n - 1];
        if n > 1 {
            x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return None;
        }
        Some(x)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn residual(&self, x: &[Complex64], rhs: &[Complex64]) -> f64 {
        let ax = self.matvec(x);
        norm(&ax.iter().zip(rhs).map(|(a, b)| a - b).collect::<Vec<_>>())
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
