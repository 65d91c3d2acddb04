use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thouless_lab::{
    convergence_study, crystalline_currents, lb_currents, r_theta_diagnostic, thouless_currents,
    transmittance_inf, transmittance_n, ConvergenceTable, CurrentReport,
};

use crate::config::{Format, Run};
use crate::error::CliError;
use crate::output::{json, num, Table, SCHEMA_VERSION};

/// Repetition count selection shared by `transmit` and `currents`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repetitions {
    Finite(u64),
    Infinite,
}

impl Repetitions {
    pub fn from_flags(n: Option<u64>, inf: bool) -> Result<Self, CliError> {
        match (n, inf) {
            (Some(_), true) => Err(CliError::Usage("--N and --inf are mutually exclusive".into())),
            (Some(0), false) => Err(CliError::Usage("--N must be positive".into())),
            (Some(n), false) => Ok(Self::Finite(n)),
            (None, true) => Ok(Self::Infinite),
            (None, false) => Err(CliError::Usage("one of --N <int> or --inf is required".into())),
        }
    }

    fn n(self) -> Option<u64> {
        match self {
            Self::Finite(n) => Some(n),
            Self::Infinite => None,
        }
    }
}

#[derive(Serialize)]
struct BandRow {
    index: usize,
    lo: f64,
    hi: f64,
    width: f64,
}

#[derive(Serialize)]
struct Curves {
    k: Vec<f64>,
    energies: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct BandsDoc {
    schema: u32,
    bands: Vec<BandRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curves: Option<Curves>,
}

pub fn bands(run: &Run, format: Format) -> Result<String, CliError> {
    let spectrum = run.sample.band_spectrum()?;
    let rows: Vec<BandRow> = spectrum
        .bands()
        .iter()
        .enumerate()
        .map(|(i, b)| BandRow {
            index: i + 1,
            lo: b.lo,
            hi: b.hi,
            width: b.width(),
        })
        .collect();
    match format {
        Format::Csv => {
            let mut t = Table::new(vec!["index", "lo", "hi", "width"]);
            for r in &rows {
                t.push(vec![r.index.to_string(), num(r.lo), num(r.hi), num(r.width)]);
            }
            Ok(t.render())
        }
        Format::Json => {
            let curves = match run.raw.k_points {
                Some(count) if count >= 2 => {
                    let zone = PI / run.sample.len() as f64;
                    let k: Vec<f64> = (0..count)
                        .map(|i| -zone + 2.0 * zone * i as f64 / (count - 1) as f64)
                        .collect();
                    let energies = k
                        .par_iter()
                        .map(|&k| run.sample.bloch_eigenvalues(k.clamp(-zone, zone)))
                        .collect::<Result<Vec<_>, _>>()?;
                    Some(Curves { k, energies })
                }
                Some(_) => return Err(CliError::Config("k_points: need at least 2".into())),
                None => None,
            };
            json(&BandsDoc {
                schema: SCHEMA_VERSION,
                bands: rows,
                curves,
            })
        }
    }
}

#[derive(Serialize)]
struct TransmitRow {
    #[serde(rename = "E")]
    energy: f64,
    #[serde(rename = "T")]
    t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vartheta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

#[derive(Serialize)]
struct TransmitDoc {
    schema: u32,
    n: Option<u64>,
    rows: Vec<TransmitRow>,
}

pub fn transmit(
    run: &Run,
    reps: Repetitions,
    diagnostics: bool,
    format: Format,
) -> Result<String, CliError> {
    let (l, r) = run.leads()?;
    let kappa = run.kappa()?;
    let energies = run.energies()?;
    let rows = energies
        .par_iter()
        .map(|&e| {
            let t = match reps {
                Repetitions::Finite(n) => transmittance_n(&run.sample, l, r, kappa, n, e)?,
                Repetitions::Infinite => transmittance_inf(&run.sample, l, r, kappa, e)?,
            };
            let mut row = TransmitRow {
                energy: e,
                t,
                r: None,
                vartheta: None,
                theta: None,
            };
            if diagnostics {
                // undefined off the band interior and off the lead supports
                let d = r_theta_diagnostic(&run.sample, l, r, kappa, e).ok();
                row.r = Some(d.map_or(f64::NAN, |d| d.r));
                row.vartheta = Some(d.map_or(f64::NAN, |d| d.vartheta));
                row.theta = Some(d.map_or(f64::NAN, |d| d.theta));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, thouless_lab::Error>>()?;
    match format {
        Format::Csv => {
            let header = if diagnostics {
                vec!["E", "T", "r", "vartheta", "theta"]
            } else {
                vec!["E", "T"]
            };
            let mut t = Table::new(header);
            for row in &rows {
                let mut cells = vec![num(row.energy), num(row.t)];
                for v in [row.r, row.vartheta, row.theta].into_iter().flatten() {
                    cells.push(num(v));
                }
                t.push(cells);
            }
            Ok(t.render())
        }
        Format::Json => json(&TransmitDoc {
            schema: SCHEMA_VERSION,
            n: reps.n(),
            rows,
        }),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentMode {
    Finite,
    Crystalline,
    Thouless,
}

#[derive(Serialize)]
struct CurrentsDoc {
    schema: u32,
    mode: CurrentMode,
    n: Option<u64>,
    #[serde(flatten)]
    report: CurrentReport,
}

pub fn currents(run: &Run, mode: CurrentMode, n: Option<u64>, format: Format) -> Result<String, CliError> {
    let thermo = run.thermo()?;
    let quad = run.quadrature();
    let report = match mode {
        CurrentMode::Thouless => thouless_currents(&run.sample, &thermo, &quad)?,
        CurrentMode::Crystalline => {
            let (l, r) = run.leads()?;
            crystalline_currents(&run.sample, l, r, run.kappa()?, &thermo, &quad)?
        }
        CurrentMode::Finite => {
            let (l, r) = run.leads()?;
            let n = n.expect("finite mode carries N");
            lb_currents(&run.sample, l, r, run.kappa()?, n, &thermo, &quad)?
        }
    };
    match format {
        Format::Csv => {
            let mut t = Table::new(vec![
                "phi_l",
                "phi_r",
                "i_l",
                "i_r",
                "entropy_j",
                "conservation_phi",
                "conservation_i",
                "entropy_balance_residual",
                "error_estimate",
            ]);
            t.push(
                [
                    report.phi_l,
                    report.phi_r,
                    report.i_l,
                    report.i_r,
                    report.entropy_j,
                    report.conservation_residuals[0],
                    report.conservation_residuals[1],
                    report.entropy_balance_residual,
                    report.error_estimate,
                ]
                .map(num)
                .to_vec(),
            );
            Ok(t.render())
        }
        Format::Json => json(&CurrentsDoc {
            schema: SCHEMA_VERSION,
            mode,
            n,
            report,
        }),
    }
}

/// `1, 2, 4, ..., 256`.
pub fn default_n_list() -> Vec<u64> {
    (0..=8).map(|k| 1u64 << k).collect()
}

#[derive(Serialize)]
struct ConvergeDoc {
    schema: u32,
    #[serde(flatten)]
    table: ConvergenceTable,
}

pub fn converge(run: &Run, format: Format) -> Result<String, CliError> {
    let (l, r) = run.leads()?;
    let f = run.weight()?;
    let n_list = run.raw.n_list.clone().unwrap_or_else(default_n_list);
    let table = convergence_study(&run.sample, l, r, run.kappa()?, &f, &n_list, &run.quadrature())?;
    for row in table.rows.iter().filter(|r| r.failure.is_some()) {
        log::warn!("N = {}: quadrature did not converge, row holds a partial value", row.n);
    }
    match format {
        Format::Csv => {
            let mut t = Table::new(vec!["N", "int_TN", "int_Tinf", "abs_diff"]);
            for row in &table.rows {
                t.push(vec![
                    row.n.to_string(),
                    num(row.int_tn),
                    num(row.int_tinf),
                    num(row.abs_diff),
                ]);
            }
            Ok(t.render())
        }
        Format::Json => json(&ConvergeDoc {
            schema: SCHEMA_VERSION,
            table,
        }),
    }
}
