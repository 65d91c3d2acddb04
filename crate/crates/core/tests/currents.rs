mod common;

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thouless_lab::{
    convergence_study, crystalline_currents, integrate_bands, lb_currents, r_theta_diagnostic,
    thouless_currents, transmittance_inf, zero_temperature_conductance, LeadModel,
    QuadratureConfig, SampleSpec, Side, ThermoState, WeightFunction,
};

fn free_chain() -> SampleSpec {
    SampleSpec::homogeneous(1, 1.0, 0.0).unwrap()
}

fn crystal_leads(s: &SampleSpec) -> (LeadModel, LeadModel) {
    (
        LeadModel::crystalline(s.clone(), Side::Left),
        LeadModel::crystalline(s.clone(), Side::Right),
    )
}

#[test]
fn matched_chain_saturates_finite_current() {
    let s = free_chain();
    let lead = LeadModel::half_line_chain(1.0, 0.0).unwrap();
    let th = ThermoState::zero_temperature(-2.0, 2.0).unwrap();
    let rep = lb_currents(&s, &lead, &lead, 1.0, 7, &th, &QuadratureConfig::default()).unwrap();
    assert_abs_diff_eq!(rep.i_r, 4.0 / (2.0 * PI), epsilon = 1e-4);
    assert!(rep.conservation_residuals[1] <= 2e-8);
}

#[test]
fn matched_crystal_reaches_thouless_currents() {
    let s = SampleSpec::new(vec![0.9, 1.3], vec![0.2, -0.4, 0.1], 0.7).unwrap();
    let (l, r) = crystal_leads(&s);
    let q = QuadratureConfig::default();
    for th in [
        ThermoState::new(1.0, -0.3, 2.5, 0.4).unwrap(),
        ThermoState::new(0.7, 0.5, 0.7, -0.5).unwrap(),
    ] {
        let inf = crystalline_currents(&s, &l, &r, s.kappa_s(), &th, &q).unwrap();
        let thou = thouless_currents(&s, &th, &q).unwrap();
        for (a, b) in [
            (inf.phi_l, thou.phi_l),
            (inf.i_r, thou.i_r),
            (inf.entropy_j, thou.entropy_j),
        ] {
            assert_abs_diff_eq!(a, b, epsilon = q.abs_tol);
        }
    }
}

#[test]
fn equilibrium_is_current_free() {
    let s = free_chain();
    let th = ThermoState::new(1.5, 0.2, 1.5, 0.2).unwrap();
    let rep = thouless_currents(&s, &th, &QuadratureConfig::default()).unwrap();
    assert_eq!([rep.phi_l, rep.i_r, rep.entropy_j], [0.0; 3]);
    assert_eq!(rep.entropy_balance_residual, 0.0);
}

#[test]
fn entropy_production_positive_off_equilibrium() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = QuadratureConfig::default();
    for _ in 0..10 {
        let s = common::sample(&mut rng, 5);
        let c = common::center(&s);
        let l = common::chain(&mut rng, c);
        let r = common::chain(&mut rng, c);
        let th = common::thermo(&mut rng, c);
        let rep = crystalline_currents(&s, &l, &r, 0.8, &th, &q).unwrap();
        assert!(rep.entropy_j > 0.0);
        assert!(rep.entropy_balance_residual <= 3.0 * q.abs_tol);
    }
}

#[test]
fn disjoint_supports_carry_no_current() {
    let s = free_chain();
    let l = LeadModel::half_line_chain(0.5, -3.0).unwrap();
    let r = LeadModel::half_line_chain(0.5, 3.0).unwrap();
    let th = ThermoState::new(1.0, -1.0, 2.0, 1.0).unwrap();
    let q = QuadratureConfig::default();
    let fin = lb_currents(&s, &l, &r, 1.0, 3, &th, &q).unwrap();
    let inf = crystalline_currents(&s, &l, &r, 1.0, &th, &q).unwrap();
    for rep in [fin, inf] {
        assert_eq!([rep.phi_r, rep.i_r, rep.entropy_j], [0.0; 3]);
    }
}

#[test]
fn mismatched_conductance_below_thouless() {
    let s = free_chain();
    let lead = LeadModel::half_line_chain(1.0, 0.0).unwrap();
    let q = QuadratureConfig::default();
    let c = zero_temperature_conductance(&s, &lead, &lead, 2f64.sqrt(), -1.0, 1.0, &q).unwrap();
    assert_abs_diff_eq!(c.g_th, 1.0 / (2.0 * PI), epsilon = 1e-12);
    assert!(c.g < c.g_th - 1e-3);
    // (1/2π)(1/2) ∫_{-1}^{1} (4 - E²)/(5 - E²) dE
    let a = 5f64.sqrt();
    let exact = (2.0 - ((a + 1.0) / (a - 1.0)).ln() / a) / (2.0 * 2.0 * PI);
    assert_abs_diff_eq!(c.g, exact, epsilon = 1e-8);
}

#[test]
fn matched_convergence_table_is_flat() {
    let s = SampleSpec::new(vec![1.0], vec![0.0, 0.0], 0.5).unwrap();
    let (l, r) = crystal_leads(&s);
    let f = WeightFunction::Gaussian {
        center: 1.0,
        width: 0.3,
    };
    let table =
        convergence_study(&s, &l, &r, 0.5, &f, &[1, 3, 10, 30], &QuadratureConfig::default()).unwrap();
    for row in &table.rows {
        assert!(row.failure.is_none());
        assert!(row.abs_diff <= 1e-6, "N = {}: {}", row.n, row.abs_diff);
    }
}

#[test]
fn convergence_table_matches_series_expansion() {
    let s = free_chain();
    let lead = LeadModel::half_line_chain(1.0, 0.0).unwrap();
    let kappa = 2f64.sqrt();
    let (lo, hi) = (-1.5, 1.5);
    let f = WeightFunction::Indicator { lo, hi };
    let q = QuadratureConfig::default();
    let n_list = [1, 2, 4, 8];
    let table = convergence_study(&s, &lead, &lead, kappa, &f, &n_list, &q).unwrap();
    let spec = s.band_spectrum().unwrap();
    for row in &table.rows {
        let n = row.n as f64;
        let series = integrate_bands(&spec, &[lo, hi], &q, |e| {
            if !(lo..=hi).contains(&e) {
                return Ok(0.0);
            }
            let d = r_theta_diagnostic(&s, &lead, &lead, kappa, e)?;
            assert!(d.r <= 0.9);
            let phase = 2.0 * n * d.theta + d.vartheta;
            let sum: f64 = (1..=40).map(|k| 2.0 * d.r.powi(k) * (k as f64 * phase).cos()).sum();
            Ok(transmittance_inf(&s, &lead, &lead, kappa, e)? * (1.0 + sum))
        })
        .unwrap();
        assert_abs_diff_eq!(row.int_tn, series.value[0], epsilon = 1e-6);
    }
}

#[test]
fn convergence_study_is_deterministic() {
    let s = SampleSpec::new(vec![0.8], vec![0.1, -0.2], 1.1).unwrap();
    let l = LeadModel::half_line_chain(1.0, 0.0).unwrap();
    let r = LeadModel::half_line_chain(1.3, 0.2).unwrap();
    let f = WeightFunction::Indicator { lo: -1.0, hi: 1.0 };
    let q = QuadratureConfig::default();
    let a = convergence_study(&s, &l, &r, 0.9, &f, &[1, 2, 5, 9], &q).unwrap();
    let b = convergence_study(&s, &l, &r, 0.9, &f, &[1, 2, 5, 9], &q).unwrap();
    assert_eq!(a, b);
    assert!(convergence_study(&s, &l, &r, 0.9, &f, &[2, 1], &q).is_err());
}

#[test]
fn small_closing_coupling_shrinks_conductance() {
    // the periodized spectrum collapses onto the Dirichlet eigenvalues as kappa_s -> 0
    let mut last = f64::INFINITY;
    for ks in [0.5, 0.1, 0.01, 0.001] {
        let s = SampleSpec::new(vec![1.0, 1.0], vec![0.0; 3], ks).unwrap();
        let g = s.thouless_conductance(-2.0, 2.0).unwrap();
        assert!(g < last);
        last = g;
    }
    assert!(last < 1e-3);
}
