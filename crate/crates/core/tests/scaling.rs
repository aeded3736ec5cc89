use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sense_core::fit::{fit_power_law, log_grid};
use sense_core::freefermion::{kz_ramp, RampPath};
use sense_core::model::{Boundary, CriticalExponents, SpinEnsembleSpec};
use sense_core::quad::GaussLegendre;
use sense_core::scaling::{
    bandwidth_product, correlated_sensitivity, dipole_effective_field, kibble_zurek_xi, noise_density_ratio,
    noise_density_ratio_with, optimal_stage_split, self_consistent_chi, self_consistent_chi_iterated, sensitivity,
    BandwidthRegime, DipoleNoiseGeometry, Regime, SensitivityInput, MU_0,
};

fn exponents(nu: f64, z: f64) -> CriticalExponents {
    CriticalExponents {
        nu,
        z,
        eta: None,
        mu: None,
    }
}

#[test]
fn kz_law_matches_free_fermion_ramps() {
    let spec = SpinEnsembleSpec::chain(400, 1.0, Boundary::Periodic);
    let times = log_grid(10.0, 1000.0, 7);
    let xis: Vec<f64> = times
        .iter()
        .map(|&t| kz_ramp(&spec, t, RampPath::through_critical(1.0)).unwrap().xi)
        .collect();
    let fitted = fit_power_law(&times, &xis).unwrap().exponent;
    let law: Vec<f64> = times
        .iter()
        .map(|&t| {
            kibble_zurek_xi(1.0, t, &CriticalExponents::ising_1d(), None)
                .unwrap()
                .xi
        })
        .collect();
    let closed = fit_power_law(&times, &law).unwrap().exponent;
    assert_relative_eq!(closed, 0.5, epsilon = 1e-12);
    assert!((fitted - closed).abs() < 0.05, "fitted {fitted}");
}

/// Golden-section maximum of `f` on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-12 {
        let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(a) > f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn stage_split_maximizes_the_cluster_objective() {
    let t2 = 300.0;
    for nu in [0.5, 1.0, 2.0] {
        for z in [0.5, 1.0, 2.0] {
            for d in 1..=3usize {
                let e = exponents(nu, z);
                let objective = |beta: f64| {
                    let xi = (beta * t2).powf(e.kz_exponent());
                    xi.powf(0.5 * d as f64) * (1.0 - beta) * t2
                };
                let numeric = golden_max(objective, 1e-9, 1.0 - 1e-9);
                let closed = optimal_stage_split(&e, d).unwrap();
                assert!(
                    (numeric - closed).abs() < 1e-6,
                    "ν={nu} z={z} d={d}: {numeric} vs {closed}"
                );
                for shifted in [closed * 0.9, closed * 1.1] {
                    assert!(objective(shifted) < objective(closed));
                }
            }
        }
    }
}

#[test]
fn chi_fixed_point_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let e = exponents(rng.random_range(0.3..2.5), rng.random_range(0.3..2.5));
        let d = rng.random_range(1..=3usize);
        let jt = 10f64.powf(rng.random_range(0.5..6.0));
        let closed = self_consistent_chi(1.0, jt, &e, d).unwrap();
        let iterated = self_consistent_chi_iterated(1.0, jt, &e, d).unwrap();
        assert!((iterated / closed - 1.0).abs() < 1e-8);
    }
}

#[test]
fn bandwidth_follows_from_sensitivity_and_coherence() {
    let (n, t, t2) = (400.0, 1e5, 30.0);
    let sql = sensitivity(
        Regime::Sql,
        &SensitivityInput {
            n,
            total_time: t,
            t2_eff: t2,
            coupling: 1.0,
            exponents: CriticalExponents::dipolar_2d(),
            dimension: 2,
        },
    )
    .unwrap();
    let conventional = sql.bandwidth * sql.delta_b_inv.powi(2);
    assert_relative_eq!(
        conventional,
        bandwidth_product(BandwidthRegime::Conventional, n, t, 1.0).unwrap(),
        max_relative = 1e-12
    );

    // Clusters of χ spins: T̄₂ = T₂/√χ and δB⁻¹ = √(χ N T T̄₂).
    let chi: f64 = 49.0;
    let t2_bar = t2 / chi.sqrt();
    let db_inv = correlated_sensitivity(n, chi, t2_bar, t, t2_bar).unwrap();
    assert_relative_eq!(
        db_inv.powi(2) / t2_bar,
        bandwidth_product(BandwidthRegime::Correlated, n, t, chi).unwrap(),
        max_relative = 1e-12
    );
}

/// `(1/a₀²) ∬_{ρ<ξ} B dA` for a point dipole at height `depth` above the
/// plane, by tensor-product quadrature.
fn disk_flux(g: &DipoleNoiseGeometry, xi: f64) -> [f64; 2] {
    let rule = GaussLegendre::new(24);
    let m = [g.m_q(), 0.0, g.m_z()];
    let angles = 96;
    let field = |rho: f64, phi: f64| {
        let r = [rho * phi.cos(), rho * phi.sin(), -g.depth];
        let r2 = r.iter().map(|x| x * x).sum::<f64>();
        let rn = r2.sqrt();
        let mdotr = m.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
        let c = MU_0 / (4.0 * PI);
        [0, 2].map(|k| c * (3.0 * mdotr * r[k] / (r2 * r2 * rn) - m[k] / (r2 * rn)))
    };
    let mut out = [0.0; 2];
    for (slot, k) in [(0usize, 1usize), (1, 0)] {
        // Panels graded towards the axis, where the field varies on the
        // scale of the depth.
        let edges: Vec<f64> = (0..=60).map(|i| xi * (i as f64 / 60.0).powi(2)).collect();
        out[slot] = edges
            .windows(2)
            .map(|w| {
                rule.integrate(w[0], w[1], |rho| {
                    // Trapezoid in angle is spectrally accurate for periodic integrands.
                    let sum: f64 = (0..angles)
                        .map(|j| field(rho, 2.0 * PI * j as f64 / angles as f64)[k])
                        .sum();
                    rho * sum * 2.0 * PI / angles as f64
                })
            })
            .sum::<f64>()
            / (g.a0 * g.a0);
    }
    out
}

#[test]
fn effective_field_matches_disk_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let g = DipoleNoiseGeometry {
            a0: rng.random_range(0.5..2.0),
            depth: rng.random_range(0.3..3.0),
            moment: rng.random_range(0.5..2.0),
            tilt: rng.random_range(0.0..PI),
            linear_density: 1.0,
        };
        let xi = rng.random_range(0.5..8.0);
        let closed = dipole_effective_field(&g, xi).unwrap();
        let numeric = disk_flux(&g, xi);
        let scale = closed[0].hypot(closed[1]);
        for k in 0..2 {
            assert!(
                (numeric[k] - closed[k]).abs() < 1e-6 * scale,
                "{g:?} ξ={xi}: {numeric:?} vs {closed:?}"
            );
        }
    }
}

#[test]
fn correlated_noise_advantage_grows_linearly() {
    let g = DipoleNoiseGeometry {
        a0: 1.0,
        depth: 0.0,
        moment: 1.0,
        tilt: 0.3,
        linear_density: 2.0,
    };
    let xs = log_grid(3.0, 100.0, 12);
    let ratios: Vec<f64> = xs.iter().map(|&x| noise_density_ratio(&g, x).unwrap().ratio).collect();
    let slope = fit_power_law(&xs, &ratios).unwrap().exponent;
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
    for &x in &xs {
        let coarse = noise_density_ratio_with(&g, x, 16).unwrap();
        let fine = noise_density_ratio_with(&g, x, 32).unwrap();
        assert!((coarse.ratio / fine.ratio - 1.0).abs() < 1e-6);
    }
}

proptest! {
    #[test]
    fn laws_are_invariant_under_time_rescaling(
        s in 0.01f64..100.0,
        n in 10.0f64..1e4,
        t2 in 5.0f64..500.0,
        nu in 0.5f64..2.0,
        z in 0.5f64..2.0,
        d in 1usize..=3,
    ) {
        let e = exponents(nu, z);
        let report = |coupling: f64, scale: f64, regime| {
            sensitivity(regime, &SensitivityInput {
                n,
                total_time: 1e4 * t2 / scale,
                t2_eff: t2 / scale,
                coupling,
                exponents: e,
                dimension: d,
            }).unwrap()
        };
        let base = report(1.0, 1.0, Regime::Correlated);
        let scaled = report(s, s, Regime::Correlated);
        prop_assert!((base.stage_budget.unwrap().beta - scaled.stage_budget.unwrap().beta).abs() < 1e-12);
        prop_assert!((base.xi / scaled.xi - 1.0).abs() < 1e-9);
        let gain = |c, k| report(c, k, Regime::Correlated).delta_b_inv / report(c, k, Regime::Sql).delta_b_inv;
        prop_assert!((gain(1.0, 1.0) / gain(s, s) - 1.0).abs() < 1e-9);
        prop_assert!(base.delta_b_inv >= 0.0 && base.xi >= 1.0);
        let beta = base.stage_budget.unwrap().beta;
        prop_assert!(beta > 0.0 && beta < 1.0);
    }

    #[test]
    fn chi_is_self_consistent(jt in 2.0f64..1e6, nu in 0.3f64..2.5, z in 0.3f64..2.5, d in 1usize..=3) {
        let e = exponents(nu, z);
        let chi = self_consistent_chi(1.0, jt, &e, d).unwrap();
        let rhs = (jt / chi).powf(d as f64 * nu / (1.0 + z * nu));
        prop_assert!((chi / rhs - 1.0).abs() < 1e-10);
    }
}
