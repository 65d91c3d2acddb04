//! Reservoir boundary functions.
//!
//! A lead enters transport only through `F(E) = <chi, (h_lead - E - i0)^{-1} chi>`.
//! All boundary values here are evaluated in closed form (quadratic roots or
//! interpolation); no small imaginary part is ever added to `E`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{Band, BandSpectrum, SampleSpec, EDGE_WINDOW};

/// Threshold on `Im F` above which an energy lies in the essential support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Negative imaginary parts down to this floor are rounding and clamp to zero.
const IM_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// `F(E)` at a single real energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryValue {
    pub energy: f64,
    pub value: Complex64,
}

impl BoundaryValue {
    fn new(energy: f64, value: Complex64) -> Result<Self> {
        if value.im < -IM_FLOOR {
            return Err(Error::InvalidLead(format!(
                "boundary value at E = {energy} has Im F = {} < 0",
                value.im
            )));
        }
        Ok(Self {
            energy,
            value: Complex64::new(value.re, value.im.max(0.0)),
        })
    }
}

/// Tabulated boundary function, linearly interpolated between grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedLead {
    grid: Vec<f64>,
    values: Vec<Complex64>,
    normalization: f64,
}

impl TabulatedLead {
    pub fn new(grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidLead(format!(
                "tabulated lead needs at least two nodes and one value per node ({} nodes, {} values)",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidLead(format!(
                "grid is not strictly increasing at node {}",
                i + 1
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.im >= 0.0) || !v.re.is_finite()) {
            return Err(Error::InvalidLead(format!(
                "node {} (E = {}) has Im F = {} < 0",
                i,
                grid[i],
                values[i].im
            )));
        }
        // trapezoid estimate of ∫ Im F dE / π; a spectral measure has total mass one
        let normalization = grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(e, v)| 0.5 * (e[1] - e[0]) * (v[0].im + v[1].im))
            .sum::<f64>()
            / PI;
        if (normalization - 1.0).abs() > 0.05 {
            log::warn!(
                "tabulated lead: ∫Im F dE/π = {normalization:.4} deviates from 1 by more than 5%"
            );
        }
        Ok(Self {
            grid,
            values,
            normalization,
        })
    }

    /// Parses a CSV table with header `E,ReF,ImF`.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input, expected header `E,ReF,ImF`".into(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["E", "ReF", "ImF"] {
            return Err(Error::Parse {
                line,
                message: format!("expected header `E,ReF,ImF`, found `{header}`"),
            });
        }
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (line, row) in lines {
            let fields: Vec<&str> = row.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let mut parsed = [0.0; 3];
            for (k, (field, name)) in fields.iter().zip(["E", "ReF", "ImF"]).enumerate() {
                parsed[k] = field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column {} ({name}): cannot parse `{field}`", k + 1),
                })?;
                if !parsed[k].is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("column {} ({name}) is not finite", k + 1),
                    });
                }
            }
            if let Some(&prev) = grid.last() {
                if !(parsed[0] > prev) {
                    return Err(Error::Parse {
                        line,
                        message: format!("energy {} does not increase (previous {prev})", parsed[0]),
                    });
                }
            }
            if parsed[2] < 0.0 {
                return Err(Error::Parse {
                    line,
                    message: format!("ImF = {} is negative", parsed[2]),
                });
            }
            grid.push(parsed[0]);
            values.push(Complex64::new(parsed[1], parsed[2]));
        }
        Self::new(grid, values)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_csv_str(&text)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Trapezoid estimate of `∫ Im F dE / π`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    fn interpolate(&self, energy: f64) -> Result<Complex64> {
        let (first, last) = (self.grid[0], *self.grid.last().unwrap());
        if !(energy >= first && energy <= last) {
            return Err(Error::Domain(format!(
                "E = {energy} outside tabulated range [{first}, {last}]"
            )));
        }
        let i = self.grid.partition_point(|&g| g <= energy);
        if i == 0 {
            return Ok(self.values[0]);
        }
        let i = i.min(self.grid.len() - 1);
        let (e0, e1) = (self.grid[i - 1], self.grid[i]);
        if energy == e0 {
            return Ok(self.values[i - 1]);
        }
        let w = (energy - e0) / (e1 - e0);
        Ok(self.values[i - 1] * (1.0 - w) + self.values[i] * w)
    }

    fn support(&self) -> BandSpectrum {
        let segments = self
            .grid
            .windows(2)
            .zip(self.values.windows(2))
            .filter(|(_, v)| v[0].im > SUPPORT_THRESHOLD || v[1].im > SUPPORT_THRESHOLD)
            .map(|(e, _)| Band::new(e[0], e[1]))
            .collect();
        BandSpectrum::from_intervals(segments)
    }
}

/// A reservoir described through its boundary function.
#[derive(Clone, Debug, PartialEq)]
pub enum LeadModel {
    /// Half-line restriction of the periodized sample.
    Crystalline { sample: SampleSpec, side: Side },
    /// Homogeneous Jacobi half-line with hopping `t`, onsite `v0`, Dirichlet boundary.
    HalfLineChain { t: f64, v0: f64 },
    Tabulated(TabulatedLead),
}

impl LeadModel {
    pub fn half_line_chain(t: f64, v0: f64) -> Result<Self> {
        if t == 0.0 || !t.is_finite() || !v0.is_finite() {
            return Err(Error::InvalidLead(format!(
                "half-line chain needs finite nonzero hopping (t = {t}, v0 = {v0})"
            )));
        }
        Ok(Self::HalfLineChain { t, v0 })
    }

    pub fn crystalline(sample: SampleSpec, side: Side) -> Self {
        Self::Crystalline { sample, side }
    }

    /// The boundary value `F(E)`.
    pub fn boundary_value(&self, energy: f64) -> Result<BoundaryValue> {
        let value = match self {
            Self::HalfLineChain { t, v0 } => chain_m_function(*t, *v0, energy),
            Self::Crystalline { sample, side } => {
                let (m_l, m_r) = half_line_m_functions(sample, energy)?;
                match side {
                    Side::Left => m_l,
                    Side::Right => m_r,
                }
            }
            Self::Tabulated(table) => table.interpolate(energy)?,
        };
        BoundaryValue::new(energy, value)
    }

    /// Whether `Im F(E) > 0`, i.e. `E` lies in the essential support.
    pub fn essential_support(&self, energy: f64) -> bool {
        match self {
            Self::Crystalline { sample, .. } => {
                // Im F vanishes identically off the band interior
                let tr = sample.discriminant(energy);
                if tr.abs() >= 2.0 - EDGE_WINDOW {
                    return false;
                }
            }
            Self::Tabulated(table) => {
                if energy < table.grid[0] || energy > *table.grid.last().unwrap() {
                    return false;
                }
            }
            Self::HalfLineChain { .. } => {}
        }
        self.boundary_value(energy)
            .map(|bv| bv.value.im > SUPPORT_THRESHOLD)
            .unwrap_or(false)
    }

    /// Closure of the essential support as an interval set.
    pub fn support(&self) -> Result<BandSpectrum> {
        Ok(match self {
            Self::HalfLineChain { t, v0 } => {
                BandSpectrum::from_intervals(vec![Band::new(v0 - 2.0 * t.abs(), v0 + 2.0 * t.abs())])
            }
            Self::Crystalline { sample, .. } => sample.band_spectrum()?,
            Self::Tabulated(table) => table.support(),
        })
    }

    /// Energies where the boundary function is not smooth.
    pub fn kinks(&self) -> Result<Vec<f64>> {
        Ok(self
            .support()?
            .bands()
            .iter()
            .flat_map(|b| [b.lo, b.hi])
            .collect())
    }
}

/// m-function of the homogeneous half-line: the root of
/// `t² m² + (E - v0) m + 1 = 0` with `Im m > 0` inside the band and the
/// decaying (smaller) root outside.
pub fn chain_m_function(t: f64, v0: f64, energy: f64) -> Complex64 {
    let t2 = t * t;
    let x = energy - v0;
    let disc = x * x - 4.0 * t2;
    if disc < 0.0 {
        Complex64::new(-x / (2.0 * t2), (-disc).sqrt() / (2.0 * t2))
    } else if disc == 0.0 {
        Complex64::new(-x / (2.0 * t2), 0.0)
    } else {
        // product of the roots is 1/t², so the small root is 1/(t² * large root)
        let large = -x - x.signum() * disc.sqrt();
        Complex64::new(2.0 / large, 0.0)
    }
}

/// Weyl m-functions `(m_l, m_r)` of the two half-line restrictions of the
/// periodized sample at a band-interior energy.
///
/// `m_r` is the root with positive imaginary part of
/// `c z² + (a - d) z - b = 0` built from `T_L(E)`, and `1/(kappa_S² m_l)` is
/// the conjugate root.
pub fn crystal_m_functions(sample: &SampleSpec, energy: f64) -> Result<(Complex64, Complex64)> {
    let t = sample.one_period_transfer(energy);
    let tr = t.trace();
    if tr.abs() >= 2.0 - EDGE_WINDOW {
        if tr.abs() <= 2.0 + EDGE_WINDOW {
            return Err(Error::BandEdge { energy, trace: tr });
        }
        return Err(Error::Domain(format!(
            "m-functions requested off spectrum at E = {energy} (tr T_L = {tr})"
        )));
    }
    let s = (1.0 - 0.25 * tr * tr).sqrt();
    let m_r = Complex64::new(0.5 * (t.d - t.a) / t.c, s / t.c.abs());
    let k2 = sample.kappa_s() * sample.kappa_s();
    let m_l = 1.0 / (k2 * m_r.conj());
    Ok((m_l, m_r))
}

/// `(m_l, m_r)` at any real energy: band interior via [`crystal_m_functions`],
/// elsewhere through the real eigenvectors of `T_L(E)`. On the band-edge
/// window the nearly double eigenvector is used, which gives the real edge limit.
pub(crate) fn half_line_m_functions(
    sample: &SampleSpec,
    energy: f64,
) -> Result<(Complex64, Complex64)> {
    let t = sample.one_period_transfer(energy);
    let tr = t.trace();
    if tr.abs() < 2.0 - EDGE_WINDOW {
        return crystal_m_functions(sample, energy);
    }
    let k2 = sample.kappa_s() * sample.kappa_s();
    // eigenvalue of modulus >= 1 and its inverse
    let root = (tr * tr - 4.0).max(0.0).sqrt();
    let grow = 0.5 * (tr + tr.signum() * root);
    let decay = 1.0 / grow;
    let eigvec = |mu: f64| -> [f64; 2] {
        let v1 = [t.b, mu - t.a];
        let v2 = [mu - t.d, t.c];
        if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) {
            v1
        } else {
            v2
        }
    };
    // solution decaying at +inf: m_r = -u(1) / (kappa_S u(0))
    let v = eigvec(decay);
    // solution decaying at -inf: m_l = -u(0) / (kappa_S u(1))
    let w = eigvec(grow);
    if v[1] == 0.0 || w[0] == 0.0 {
        return Err(Error::SingularEnergy(energy));
    }
    let m_r = -v[0] / v[1];
    let m_l = -w[1] / (k2 * w[0]);
    Ok((Complex64::new(m_l, 0.0), Complex64::new(m_r, 0.0)))
}
