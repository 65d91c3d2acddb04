//! Property battery over a seeded random ensemble.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thouless_lab::leads::crystal_m_functions;
use thouless_lab::{
    crystalline_currents, oracle_transmittance, sample_green, thouless_currents,
    transfer_eigendata, transmittance_n, LeadModel, QuadratureConfig, SampleSpec, Side,
    ThermoState,
};

use crate::config::Run;

pub const DEFAULT_SEED: u64 = 0x0074_1055;
pub const DEFAULT_ENSEMBLE: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub worst: f64,
    pub bound: f64,
    pub pass: bool,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfcheckReport {
    pub schema: u32,
    pub seed: u64,
    pub ensemble: usize,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

/// One member of the battery: a sample with two leads, a coupling and a
/// thermodynamic state.
struct Member {
    sample: SampleSpec,
    left: LeadModel,
    right: LeadModel,
    kappa: f64,
    n: u64,
    thermo: ThermoState,
}

fn random_sample(rng: &mut ChaCha8Rng, max_len: usize) -> SampleSpec {
    let len = rng.gen_range(1..=max_len);
    let hop = (1..len).map(|_| rng.gen_range(0.5..1.5)).collect();
    let onsite = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SampleSpec::new(hop, onsite, rng.gen_range(0.5..1.5)).expect("valid random sample")
}

fn center(s: &SampleSpec) -> f64 {
    s.band_spectrum()
        .ok()
        .and_then(|b| b.hull())
        .map_or(0.0, |h| 0.5 * (h.lo + h.hi))
}

fn random_lead(rng: &mut ChaCha8Rng, side: Side, c: f64) -> LeadModel {
    if rng.gen_bool(0.7) {
        LeadModel::half_line_chain(rng.gen_range(0.6..1.6), c + rng.gen_range(-0.6..0.6))
            .expect("valid chain")
    } else {
        let s = random_sample(rng, 3);
        let shift = c - s.onsites().iter().sum::<f64>() / s.len() as f64;
        let onsite = s.onsites().iter().map(|v| v + shift).collect();
        let s = SampleSpec::new(s.hoppings().to_vec(), onsite, s.kappa_s()).expect("valid lead sample");
        LeadModel::crystalline(s, side)
    }
}

fn random_thermo(rng: &mut ChaCha8Rng, c: f64) -> ThermoState {
    ThermoState::new(
        rng.gen_range(0.5..5.0),
        c + rng.gen_range(-1.0..1.0),
        rng.gen_range(0.5..5.0),
        c + rng.gen_range(-1.0..1.0),
    )
    .expect("valid thermodynamic state")
}

fn ensemble(seed: u64, size: usize) -> Vec<(Member, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let sample = random_sample(&mut rng, 8);
            let c = center(&sample);
            let left = random_lead(&mut rng, Side::Left, c);
            let right = random_lead(&mut rng, Side::Right, c);
            let kappa = rng.gen_range(0.4..1.6);
            let n = rng.gen_range(1..=20);
            let thermo = random_thermo(&mut rng, c);
            let member_seed = rng.gen();
            (
                Member {
                    sample,
                    left,
                    right,
                    kappa,
                    n,
                    thermo,
                },
                member_seed,
            )
        })
        .collect()
}

/// Worst deviation per check for one member; `None` marks an evaluation error.
fn evaluate(m: &Member, seed: u64) -> [Option<f64>; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = QuadratureConfig::default();

    let oracle = (|| {
        let support = m.left.support().ok()?.intersect(&m.right.support().ok()?);
        let Some(hull) = support.hull() else { return Some(0.0) };
        let mut worst = 0.0f64;
        for i in 0..24 {
            let e = hull.lo + hull.width() * (i as f64 + 0.5) / 24.0;
            let a = transmittance_n(&m.sample, &m.left, &m.right, m.kappa, m.n, e).ok()?;
            let b = oracle_transmittance(&m.sample, m.n, &m.left, &m.right, m.kappa, e).ok()?;
            worst = worst.max((a - b).abs());
        }
        Some(worst)
    })();

    let graph = (|| {
        let hull = m.sample.band_spectrum().ok()?.hull()?;
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < 5 {
            let e = rng.gen_range(hull.lo - 0.5..hull.hi + 0.5);
            let n = rng.gen_range(1..=12);
            let Ok(g) = sample_green(&m.sample, n, e) else { continue };
            let t = m.sample.one_period_transfer(e).pow(n);
            let ks = m.sample.kappa_s();
            let res = [
                t.a * g.ll - t.b,
                t.c * g.ll - t.d - ks * g.rl,
                t.a * g.lr + 1.0 / ks,
                t.c * g.lr - ks * g.rr,
            ]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
            let scale = 1.0 + t.norm_max() * (g.ll.norm() + g.lr.norm() + g.rr.norm());
            worst = worst.max(res / scale);
            done += 1;
        }
        Some(worst)
    })();

    let lemma = (|| {
        let ks = m.sample.kappa_s();
        let mut worst = 0.0f64;
        for band in m.sample.band_spectrum().ok()?.bands() {
            for i in 0..10 {
                let e = band.lo + band.width() * (0.01 + 0.98 * i as f64 / 9.0);
                let (Ok(d), Ok((m_l, m_r))) =
                    (transfer_eigendata(&m.sample, e), crystal_m_functions(&m.sample, e))
                else {
                    continue;
                };
                let scale = d.psi_plus.norm().max(1.0);
                worst = worst
                    .max((d.psi_plus + 1.0 / (ks * m_r)).norm() / scale)
                    .max((d.psi_minus + ks * m_l).norm() / scale);
            }
        }
        Some(worst)
    })();

    let inf = crystalline_currents(&m.sample, &m.left, &m.right, m.kappa, &m.thermo, &q);
    let thou = thouless_currents(&m.sample, &m.thermo, &q);
    let (conservation, dominance) = match (inf, thou) {
        (Ok(a), Ok(b)) => {
            // scaled so that each invariant maps to a common bound of abs_tol
            let worst = [
                a.conservation_residuals[0] / 2.0,
                a.conservation_residuals[1] / 2.0,
                a.entropy_balance_residual / 3.0,
                -a.entropy_j,
                b.conservation_residuals[0] / 2.0,
                b.conservation_residuals[1] / 2.0,
                b.entropy_balance_residual / 3.0,
                -b.entropy_j,
            ]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
            (Some(worst), Some(a.entropy_j - b.entropy_j))
        }
        _ => (None, None),
    };
    [oracle, graph, lemma, conservation, dominance]
}

const CHECKS: [(&str, f64); 5] = [
    ("oracle equivalence |T_closed - T_oracle|", 1e-8),
    ("graph map residual", 1e-9),
    ("m-function identities", 1e-10),
    ("conservation and entropy balance (scaled)", 1e-8),
    ("entropy dominance J_inf - J_Th", 1e-8),
];

pub fn run(seed: u64, size: usize, config: Option<&Run>) -> SelfcheckReport {
    let mut members = ensemble(seed, size);
    if let Some(run) = config {
        if let (Some((l, r)), Some(kappa)) = (&run.leads, run.raw.kappa) {
            let c = center(&run.sample);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            members.push((
                Member {
                    sample: run.sample.clone(),
                    left: l.clone(),
                    right: r.clone(),
                    kappa,
                    n: 5,
                    thermo: run.thermo().unwrap_or_else(|_| random_thermo(&mut rng, c)),
                },
                rng.gen(),
            ));
        }
    }
    let results: Vec<[Option<f64>; 5]> = members.par_iter().map(|(m, s)| evaluate(m, *s)).collect();
    let checks: Vec<CheckResult> = CHECKS
        .iter()
        .enumerate()
        .map(|(k, &(name, bound))| {
            let mut worst = f64::NEG_INFINITY;
            let mut failures = 0;
            for r in &results {
                match r[k] {
                    Some(v) if v <= bound => worst = worst.max(v),
                    Some(v) => {
                        worst = worst.max(v);
                        failures += 1;
                    }
                    None => failures += 1,
                }
            }
            CheckResult {
                name,
                worst,
                bound,
                pass: failures == 0,
                failures,
            }
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    SelfcheckReport {
        schema: crate::output::SCHEMA_VERSION,
        seed,
        ensemble: members.len(),
        checks,
        pass,
    }
}

pub fn summary(report: &SelfcheckReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        out.push_str(&format!(
            "{}: {} (worst {:.3e}, bound {:.0e}, {} failing member(s))\n",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.worst,
            c.bound,
            c.failures
        ));
    }
    out.push_str(&format!(
        "selfcheck seed={} ensemble={}: {}\n",
        report.seed,
        report.ensemble,
        if report.pass { "PASS" } else { "FAIL" }
    ));
    out
}
