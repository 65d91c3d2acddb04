//! Finite and periodized Jacobi matrices.
//!
//! A [`SampleSpec`] holds the `L` onsite energies, the `L - 1` internal
//! hoppings and the closing coupling `kappa_s` that glues consecutive copies
//! of the sample into the periodic crystal. Everything else (transfer
//! matrices, Bloch Hamiltonians, the band spectrum) is derived on demand.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the window around `|tr T_L(E)| = 2` treated as a band edge.
pub const EDGE_WINDOW: f64 = 1e-9;

/// Gaps narrower than this (relative to the energy scale) are merged away.
const TOUCH_TOL: f64 = 1e-12;

/// Jacobi parameters of a finite sample together with its internal coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    hop: Vec<f64>,
    onsite: Vec<f64>,
    kappa_s: f64,
}

impl SampleSpec {
    /// `hop` holds `J_1..J_{L-1}`, `onsite` holds `lambda_1..lambda_L`.
    pub fn new(hop: Vec<f64>, onsite: Vec<f64>, kappa_s: f64) -> Result<Self> {
        if onsite.is_empty() {
            return Err(Error::InvalidSample("sample needs at least one site".into()));
        }
        if hop.len() + 1 != onsite.len() {
            return Err(Error::InvalidSample(format!(
                "expected {} hoppings for {} sites, got {}",
                onsite.len() - 1,
                onsite.len(),
                hop.len()
            )));
        }
        if let Some(x) = hop.iter().position(|j| *j == 0.0 || !j.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "hopping J_{} = {} must be finite and nonzero",
                x + 1,
                hop[x]
            )));
        }
        if let Some(x) = onsite.iter().position(|l| !l.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "onsite energy lambda_{} is not finite",
                x + 1
            )));
        }
        if kappa_s == 0.0 || !kappa_s.is_finite() {
            return Err(Error::InvalidSample(format!(
                "internal coupling kappa_S = {kappa_s} must be finite and nonzero"
            )));
        }
        Ok(Self {
            hop,
            onsite,
            kappa_s,
        })
    }

    /// Homogeneous chain: every hopping and `kappa_s` equal to `hop`.
    pub fn homogeneous(len: usize, hop: f64, onsite: f64) -> Result<Self> {
        Self::new(vec![hop; len.saturating_sub(1)], vec![onsite; len], hop)
    }

    /// Number of sites `L` in one period.
    pub fn len(&self) -> usize {
        self.onsite.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kappa_s(&self) -> f64 {
        self.kappa_s
    }

    pub fn hoppings(&self) -> &[f64] {
        &self.hop
    }

    pub fn onsites(&self) -> &[f64] {
        &self.onsite
    }

    /// Periodized hopping `J_x` for any integer site, with `J_L = kappa_S`.
    pub fn hop_at(&self, x: i64) -> f64 {
        let l = self.len() as i64;
        let r = x.rem_euclid(l);
        if r == 0 {
            self.kappa_s
        } else {
            self.hop[(r - 1) as usize]
        }
    }

    /// Periodized onsite energy `lambda_x` for any integer site.
    pub fn onsite_at(&self, x: i64) -> f64 {
        let l = self.len() as i64;
        self.onsite[((x - 1).rem_euclid(l)) as usize]
    }

    /// Per-site transfer matrix `A_x(E)`.
    pub fn transfer_step(&self, x: usize, energy: f64) -> TransferMatrix2 {
        assert!(x >= 1, "transfer matrices are indexed from site 1");
        let j = self.hop_at(x as i64);
        let lambda = self.onsite_at(x as i64);
        TransferMatrix2 {
            a: (energy - lambda) / j,
            b: -1.0 / j,
            c: j,
            d: 0.0,
            energy,
        }
    }

    /// One-period transfer matrix `T_L(E) = A_L ... A_1`.
    pub fn one_period_transfer(&self, energy: f64) -> TransferMatrix2 {
        (1..=self.len()).fold(TransferMatrix2::identity(energy), |acc, x| {
            self.transfer_step(x, energy).mul(&acc)
        })
    }

    /// The discriminant `tr T_L(E)`.
    pub fn discriminant(&self, energy: f64) -> f64 {
        self.one_period_transfer(energy).trace()
    }

    /// Bloch Hamiltonian `h(k)` on one period.
    pub fn bloch_hamiltonian(&self, k: f64) -> DMatrix<Complex64> {
        let l = self.len();
        let mut h = DMatrix::<Complex64>::zeros(l, l);
        for x in 0..l {
            h[(x, x)] = Complex64::new(self.onsite[x], 0.0);
        }
        for (x, j) in self.hop.iter().enumerate() {
            h[(x, x + 1)] += Complex64::new(*j, 0.0);
            h[(x + 1, x)] += Complex64::new(*j, 0.0);
        }
        let phase = Complex64::from_polar(1.0, k * l as f64);
        // u(0) = e^{-ikL} u(L) and u(L+1) = e^{ikL} u(1)
        h[(0, l - 1)] += self.kappa_s * phase.conj();
        h[(l - 1, 0)] += self.kappa_s * phase;
        h
    }

    /// Sorted eigenvalues `eps_1(k) <= ... <= eps_L(k)` of `h(k)`.
    pub fn bloch_eigenvalues(&self, k: f64) -> Result<Vec<f64>> {
        let zone = PI / self.len() as f64;
        if !(k.abs() <= zone * (1.0 + 1e-14)) {
            return Err(Error::Domain(format!(
                "k = {k} lies outside the Brillouin zone [-{zone}, {zone}]"
            )));
        }
        let h = self.bloch_hamiltonian(k);
        let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let eig = nalgebra::SymmetricEigen::try_new(h, 1e-15 * scale, 10_000)
            .ok_or(Error::Eigensolver)?;
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    /// Band spectrum of the periodized sample.
    pub fn band_spectrum(&self) -> Result<BandSpectrum> {
        let zone = PI / self.len() as f64;
        let center = self.bloch_eigenvalues(0.0)?;
        let boundary = self.bloch_eigenvalues(zone)?;
        let bands = center
            .iter()
            .zip(&boundary)
            .map(|(&e0, &e1)| Band::new(e0.min(e1), e0.max(e1)))
            .collect();
        Ok(BandSpectrum::from_intervals(bands))
    }

    /// Thouless conductance `|sp(h_crystal) ∩ I| / (2π|I|)`.
    pub fn thouless_conductance(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(hi > lo) {
            return Err(Error::Domain(format!(
                "energy window [{lo}, {hi}] has no positive length"
            )));
        }
        Ok(self.band_spectrum()?.measure_in(lo, hi) / (2.0 * PI * (hi - lo)))
    }
}

/// Real 2x2 matrix (row-major) tagged with the energy it was evaluated at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub energy: f64,
}

impl TransferMatrix2 {
    pub fn identity(energy: f64) -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
            energy,
        }
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
            energy: self.energy,
        }
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::identity(self.energy);
        while n > 0 {
            if n & 1 == 1 {
                acc = base.mul(&acc);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn norm_max(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Apply to a complex column vector.
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.a * v[0] + self.b * v[1],
            self.c * v[0] + self.d * v[1],
        ]
    }
}

/// A closed energy interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, energy: f64) -> bool {
        self.lo <= energy && energy <= self.hi
    }
}

/// Ordered, disjoint closed intervals. Used both for `sp(h_crystal)` and for
/// the closures of lead supports.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BandSpectrum {
    bands: Vec<Band>,
}

impl BandSpectrum {
    /// Sorts the intervals and merges overlapping or touching ones.
    pub fn from_intervals(mut intervals: Vec<Band>) -> Self {
        intervals.retain(|b| b.hi >= b.lo);
        intervals.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        let mut bands: Vec<Band> = Vec::with_capacity(intervals.len());
        for band in intervals {
            match bands.last_mut() {
                Some(last) if band.lo - last.hi <= TOUCH_TOL * last.hi.abs().max(1.0) => {
                    last.hi = last.hi.max(band.hi);
                }
                _ => bands.push(band),
            }
        }
        Self { bands }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn contains(&self, energy: f64) -> bool {
        self.bands.iter().any(|b| b.contains(energy))
    }

    /// Total Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.bands.iter().map(Band::width).sum()
    }

    /// Lebesgue measure of the intersection with `[lo, hi]`.
    pub fn measure_in(&self, lo: f64, hi: f64) -> f64 {
        self.bands
            .iter()
            .map(|b| (b.hi.min(hi) - b.lo.max(lo)).max(0.0))
            .sum()
    }

    /// Pointwise intersection of two interval sets.
    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.bands.len() && j < other.bands.len() {
            let (x, y) = (self.bands[i], other.bands[j]);
            let lo = x.lo.max(y.lo);
            let hi = x.hi.min(y.hi);
            if hi > lo {
                out.push(Band::new(lo, hi));
            }
            if x.hi < y.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { bands: out }
    }

    /// Smallest interval containing every band.
    pub fn hull(&self) -> Option<Band> {
        Some(Band::new(self.bands.first()?.lo, self.bands.last()?.hi))
    }

    /// Open gaps between consecutive bands.
    pub fn gaps(&self) -> Vec<Band> {
        self.bands
            .windows(2)
            .map(|w| Band::new(w[0].hi, w[1].lo))
            .collect()
    }
}
