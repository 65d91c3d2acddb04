//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thouless_lab::leads::crystal_m_functions;
use thouless_lab::{
    convergence_study, crystalline_currents, lb_currents, oracle_transmittance, sample_green, thouless_currents,
    transfer_eigendata, transmittance_inf, transmittance_n, CurrentReport, LeadModel,
    QuadratureConfig, SampleSpec, Side, ThermoState, WeightFunction,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: usize, name: &str, limit: Option<Duration>, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = check();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = out.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / limit {:.0} s", l.as_secs_f64()));
    println!(
        "criterion {id} [{name}]: {} ({}; {:.3} s{budget})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
    );
    pass
}

fn free_chain() -> SampleSpec {
    SampleSpec::homogeneous(1, 1.0, 0.0).unwrap()
}

fn reflectionless() -> Outcome {
    let s = free_chain();
    let pairs = [
        (
            LeadModel::crystalline(s.clone(), Side::Left),
            LeadModel::crystalline(s.clone(), Side::Right),
        ),
        (
            LeadModel::half_line_chain(1.0, 0.0).unwrap(),
            LeadModel::half_line_chain(1.0, 0.0).unwrap(),
        ),
    ];
    let energies: Vec<f64> = (0..500).map(|i| -1.99 + 3.98 * i as f64 / 499.0).collect();
    let mut worst = 0.0f64;
    for (l, r) in &pairs {
        for n in [1, 5, 20, 200] {
            for &e in &energies {
                let t = transmittance_n(&s, l, r, 1.0, n, e).unwrap();
                worst = worst.max((t - 1.0).abs());
            }
        }
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("max |T_N - 1| = {worst:.3e} <= 1e-9"),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst = 0.0f64;
    let mut points = 0usize;
    let mut errors = Vec::new();
    for _ in 0..50 {
        let s = common::sample(&mut rng, 8);
        let c = common::center(&s);
        let l = common::lead(&mut rng, Side::Left, c);
        let r = common::lead(&mut rng, Side::Right, c);
        let kappa = common::mismatched_kappa(&mut rng, s.kappa_s());
        let n = rng.gen_range(1..=20u64);
        let support = l.support().unwrap().intersect(&r.support().unwrap());
        let Some(hull) = support.hull() else { continue };
        for e in common::grid(hull.lo, hull.hi, 40) {
            let closed = transmittance_n(&s, &l, &r, kappa, n, e);
            let oracle = oracle_transmittance(&s, n, &l, &r, kappa, e);
            match (closed, oracle) {
                (Ok(a), Ok(b)) => {
                    worst = worst.max((a - b).abs());
                    points += 1;
                }
                (a, b) => errors.push(format!("E = {e}: {a:?} vs {b:?}")),
            }
        }
    }
    Outcome {
        pass: worst <= 1e-8 && errors.is_empty(),
        detail: format!(
            "{points} grid points, max |closed - oracle| = {worst:.3e} <= 1e-8, {} failed evaluations{}",
            errors.len(),
            errors.first().map_or(String::new(), |e| format!(" (first: {e})"))
        ),
    }
}

fn spot_values() -> Outcome {
    let s = free_chain();
    let lead = LeadModel::half_line_chain(1.0, 0.0).unwrap();
    let t0 = transmittance_inf(&s, &lead, &lead, 2f64.sqrt(), 0.0).unwrap();
    let g = s.thouless_conductance(-2.0, 2.0).unwrap();
    let th = ThermoState::zero_temperature(-2.0, 2.0).unwrap();
    let i_r = thouless_currents(&s, &th, &QuadratureConfig::default())
        .unwrap()
        .i_r;
    let d = [
        (t0 - 0.8).abs(),
        (g - 1.0 / (2.0 * PI)).abs(),
        (i_r - 4.0 / (2.0 * PI)).abs(),
    ];
    Outcome {
        pass: d[0] <= 1e-10 && d[1] <= 1e-12 && d[2] <= 1e-4,
        detail: format!(
            "T_inf(0) = {t0:.15} (err {:.1e} <= 1e-10), g_Th = {g:.15} (err {:.1e} <= 1e-12), I_Th = {i_r:.10} (err {:.1e} <= 1e-4)",
            d[0], d[1], d[2]
        ),
    }
}

fn weak_convergence() -> Outcome {
    let s = free_chain();
    let lead = LeadModel::half_line_chain(1.0, 0.0).unwrap();
    let f = WeightFunction::Indicator { lo: -1.5, hi: 1.5 };
    let n_list: Vec<u64> = (0..=8).map(|k| 1u64 << k).collect();
    let table =
        convergence_study(&s, &lead, &lead, 2f64.sqrt(), &f, &n_list, &QuadratureConfig::default())
            .unwrap();
    let first = table.rows[0].abs_diff;
    let flagged = table.rows.iter().filter(|r| r.failure.is_some()).count();
    let int_f = 3.0;
    let tail = table.trailing_min;
    Outcome {
        pass: tail <= 0.02 * int_f && tail <= 0.2 * first && flagged == 0,
        detail: format!(
            "trailing min {tail:.3e} <= {:.3e} and <= 0.2 x {first:.3e}, {flagged} flagged rows",
            0.02 * int_f
        ),
    }
}

fn conservation_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let q = QuadratureConfig::default();
    let tol = q.abs_tol;
    let mut worst_cons = 0.0f64;
    let mut worst_bal = 0.0f64;
    let mut min_j = f64::INFINITY;
    let mut worst_dom = f64::NEG_INFINITY;
    let mut reports = 0;
    let check = |rep: &CurrentReport, wc: &mut f64, wb: &mut f64, mj: &mut f64| {
        *wc = wc.max(rep.conservation_residuals[0]).max(rep.conservation_residuals[1]);
        *wb = wb.max(rep.entropy_balance_residual);
        *mj = mj.min(rep.entropy_j);
    };
    for _ in 0..50 {
        let s = common::sample(&mut rng, 6);
        let c = common::center(&s);
        let l = common::lead(&mut rng, Side::Left, c);
        let r = common::lead(&mut rng, Side::Right, c);
        let kappa = common::mismatched_kappa(&mut rng, s.kappa_s());
        let n = rng.gen_range(1..=6u64);
        for _ in 0..5 {
            let th = common::thermo(&mut rng, c);
            let fin = lb_currents(&s, &l, &r, kappa, n, &th, &q).unwrap();
            let inf = crystalline_currents(&s, &l, &r, kappa, &th, &q).unwrap();
            let thou = thouless_currents(&s, &th, &q).unwrap();
            for rep in [&fin, &inf, &thou] {
                check(rep, &mut worst_cons, &mut worst_bal, &mut min_j);
            }
            worst_dom = worst_dom.max(inf.entropy_j - thou.entropy_j);
            reports += 3;
        }
    }

    // charge dominance: equal temperatures, mu_l < mu_r
    let mut worst_charge = f64::NEG_INFINITY;
    for _ in 0..20 {
        let s = common::sample(&mut rng, 6);
        let c = common::center(&s);
        let l = common::lead(&mut rng, Side::Left, c);
        let r = common::lead(&mut rng, Side::Right, c);
        let kappa = common::mismatched_kappa(&mut rng, s.kappa_s());
        let beta = rng.gen_range(0.5..5.0);
        let mu_l = c + rng.gen_range(-1.0..0.0);
        let th = ThermoState::new(beta, mu_l, beta, mu_l + rng.gen_range(0.1..1.5)).unwrap();
        let inf = crystalline_currents(&s, &l, &r, kappa, &th, &q).unwrap();
        let thou = thouless_currents(&s, &th, &q).unwrap();
        worst_charge = worst_charge.max(inf.i_r - thou.i_r);
    }

    // energy dominance: common mu below a nonnegative spectrum, beta_l > beta_r
    let mut worst_energy = f64::NEG_INFINITY;
    for _ in 0..20 {
        let s = common::positive_sample(&mut rng, 6);
        let c = common::center(&s);
        let l = common::lead(&mut rng, Side::Left, c);
        let r = common::lead(&mut rng, Side::Right, c);
        let kappa = common::mismatched_kappa(&mut rng, s.kappa_s());
        let inf_sp = s.band_spectrum().unwrap().hull().unwrap().lo;
        let mu = inf_sp - rng.gen_range(0.0..0.5);
        let beta_r = rng.gen_range(0.5..2.0);
        let th = ThermoState::new(beta_r + rng.gen_range(0.5..3.0), mu, beta_r, mu).unwrap();
        let inf = crystalline_currents(&s, &l, &r, kappa, &th, &q).unwrap();
        let thou = thouless_currents(&s, &th, &q).unwrap();
        worst_energy = worst_energy.max(inf.phi_r - thou.phi_r);
    }

    let pass = worst_cons <= 2.0 * tol
        && worst_bal <= 3.0 * tol
        && min_j >= -tol
        && worst_dom <= tol
        && worst_charge <= tol
        && worst_energy <= tol;
    Outcome {
        pass,
        detail: format!(
            "{reports} reports: conservation {worst_cons:.1e}, balance {worst_bal:.1e}, min J {min_j:.3e}, \
             max J_inf - J_Th {worst_dom:.3e}, max I_inf - I_Th {worst_charge:.3e}, max Phi_inf - Phi_Th {worst_energy:.3e}"
        ),
    }
}

fn structural_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);

    // relative to the size of the cancelling products a d and b c
    let mut worst_det = 0.0f64;
    let mut worst_det_abs = 0.0f64;
    for _ in 0..100 {
        let s = common::sample(&mut rng, 8);
        let e = rng.gen_range(-4.0..4.0);
        let t = s.one_period_transfer(e);
        let dev = (t.det() - 1.0).abs();
        let scale = (t.a * t.d).abs() + (t.b * t.c).abs();
        worst_det = worst_det.max(dev / scale.max(1.0));
        worst_det_abs = worst_det_abs.max(dev);
    }

    let mut worst_graph = 0.0f64;
    let mut triples = 0;
    while triples < 50 {
        let s = common::sample(&mut rng, 6);
        let n = rng.gen_range(1..=12u64);
        let hull = s.band_spectrum().unwrap().hull().unwrap();
        let e = rng.gen_range(hull.lo - 0.5..hull.hi + 0.5);
        let Ok(g) = sample_green(&s, n, e) else { continue };
        let t = s.one_period_transfer(e).pow(n);
        let ks = s.kappa_s();
        // columns (1,0) and (0,1) of the graph of G_S
        let r1 = [t.a * g.ll - t.b, t.c * g.ll - t.d - ks * g.rl];
        let r2 = [t.a * g.lr + 1.0 / ks, t.c * g.lr - ks * g.rr];
        let scale = 1.0 + t.norm_max() * (g.ll.norm() + g.lr.norm() + g.rr.norm());
        let res = r1.iter().chain(&r2).map(|z| z.norm()).fold(0.0, f64::max) / scale;
        worst_graph = worst_graph.max(res);
        triples += 1;
    }

    let mut worst_lemma = 0.0f64;
    for _ in 0..30 {
        let s = common::sample(&mut rng, 8);
        let ks = s.kappa_s();
        for band in s.band_spectrum().unwrap().bands() {
            let pad = 1e-3 * band.width();
            for e in common::grid(band.lo + pad, band.hi - pad, 25) {
                let (Ok(data), Ok((m_l, m_r))) = (transfer_eigendata(&s, e), crystal_m_functions(&s, e))
                else {
                    continue;
                };
                let d1 = (data.psi_plus + 1.0 / (ks * m_r)).norm() / data.psi_plus.norm().max(1.0);
                let d2 = (data.psi_minus + ks * m_l).norm() / data.psi_minus.norm().max(1.0);
                worst_lemma = worst_lemma.max(d1).max(d2);
            }
        }
    }

    let mut interlacing_ok = 0;
    for _ in 0..100 {
        let s = common::sample(&mut rng, 8);
        let l = s.len();
        let e0 = s.bloch_eigenvalues(0.0).unwrap();
        let e1 = s.bloch_eigenvalues(PI / l as f64).unwrap();
        if interlaces(&e0, &e1) {
            interlacing_ok += 1;
        }
    }

    Outcome {
        pass: worst_det <= 1e-12 && worst_graph <= 1e-9 && worst_lemma <= 1e-10 && interlacing_ok == 100,
        detail: format!(
            "relative |det T_L - 1| {worst_det:.1e} (absolute {worst_det_abs:.1e}), graph map {worst_graph:.1e}, m-function identities {worst_lemma:.1e}, interlacing {interlacing_ok}/100"
        ),
    }
}

/// `eps_L(0) > eps_L(π/L) >= eps_{L-1}(π/L) > eps_{L-1}(0) >= eps_{L-2}(0) > ...`
fn interlaces(at0: &[f64], at_edge: &[f64]) -> bool {
    let l = at0.len();
    let mut chain = Vec::with_capacity(2 * l);
    for (step, j) in (0..l).rev().enumerate() {
        if step % 2 == 0 {
            chain.extend([at0[j], at_edge[j]]);
        } else {
            chain.extend([at_edge[j], at0[j]]);
        }
    }
    chain.windows(2).enumerate().all(|(i, w)| {
        if i % 2 == 0 {
            w[0] > w[1]
        } else {
            w[0] >= w[1]
        }
    })
}

fn off_spectrum_decay() -> Outcome {
    // dimer bands [-1.5, -0.5] and [0.5, 1.5]; E = 0 is a gap energy inside the lead band
    let s = SampleSpec::new(vec![1.0], vec![0.0, 0.0], 0.5).unwrap();
    let lead = LeadModel::half_line_chain(1.0, 0.0).unwrap();
    let e = 0.0;
    let alpha = transfer_eigendata(&s, e).unwrap().alpha.norm();
    let ns: Vec<u64> = (5..=30).collect();
    let logs: Vec<f64> = ns
        .iter()
        .map(|&n| transmittance_n(&s, &lead, &lead, 0.8, n, e).unwrap().ln())
        .collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = logs.iter().sum::<f64>() / logs.len() as f64;
    let slope = xs.iter().zip(&logs).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let expected = -2.0 * alpha.ln();
    let rel = (slope / expected - 1.0).abs();
    Outcome {
        pass: rel <= 0.05,
        detail: format!("fitted slope {slope:.6}, -2 log|alpha| = {expected:.6}, relative deviation {rel:.2e} <= 5e-2"),
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        run(1, "reflectionless saturation", Some(secs(1)), reflectionless),
        run(2, "oracle equivalence", Some(secs(30)), oracle_equivalence),
        run(3, "analytic spot values", None, spot_values),
        run(4, "weak convergence", Some(secs(60)), weak_convergence),
        run(5, "conservation and entropy", None, conservation_suite),
        run(6, "structural identities", None, structural_identities),
        run(7, "off-spectrum decay", None, off_spectrum_decay),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
