use std::f64::consts::PI;

use cusp_weyl::boundary::{
    spectral_gap, zeta_boundary, zeta_boundary_detailed, zeta_partial_sum, BoundaryModel, Mode,
    SpinStructure, SyntheticSpectrum,
};
use cusp_weyl::counting::{count_states, mode_matrix, semiclassical_count, CountRequest};
use cusp_weyl::ellipticity::{assemble_family, scan_invertibility, smallest_singular_value, FourierSeries, NormalFamilySpec};
use cusp_weyl::quadrature::{integrate, integrate_to_infinity, Tolerance};
use cusp_weyl::radial::{first_order_mode_matrix, mode_problem, Component, CuspModelSpec};
use cusp_weyl::tridiag::discretize;
use cusp_weyl::weyl::{fit_asymptotics, geometric_lambdas, predict, FitOptions, LogPower};
use proptest::prelude::*;

fn circle(r: f64, spin: SpinStructure) -> BoundaryModel {
    BoundaryModel::circle(r, spin).unwrap()
}

// Dirac spectrum of the round unit 2-sphere: ±(k+1) with multiplicity 2(k+1).
fn round_sphere() -> BoundaryModel {
    let s = SyntheticSpectrum::new(2, |i| {
        let k = i / 2 + 1;
        let v = k as f64;
        Mode::new(if i % 2 == 0 { -v } else { v }, 2 * k as u32)
    })
    .unwrap()
    .with_volume(4.0 * PI)
    .unwrap()
    .with_growth_floor(0.5)
    .unwrap();
    BoundaryModel::Synthetic(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_swaps_components(p in 0.05f64..2.5, mu in 0.01f64..20.0, frac in 0.0f64..0.99) {
        let spec = CuspModelSpec::new(2, p, 1.0).unwrap();
        let end = spec.warp().domain_end().unwrap_or(40.0);
        let t = frac * end;
        let plus = mode_problem(&spec, mu);
        let minus = mode_problem(&spec, -mu);
        prop_assert_eq!(minus.q_plus(t).to_bits(), plus.q_minus(t).to_bits());
        prop_assert_eq!(minus.q_minus(t).to_bits(), plus.q_plus(t).to_bits());
    }

    #[test]
    fn arclength_round_trip(p in 0.05f64..3.0, x0 in 0.3f64..3.0, frac in 0.0f64..0.999) {
        let spec = CuspModelSpec::new(2, p, x0).unwrap();
        let w = spec.warp();
        let end = w.domain_end().unwrap_or(50.0);
        let t = frac * end;
        let back = w.arclength(w.position(t));
        prop_assert!((back - t).abs() <= 1e-12 * t.max(1.0), "{} vs {}", back, t);
    }

    #[test]
    fn volume_density_identity(p in 0.6f64..2.5) {
        let spec = CuspModelSpec::new(2, p, 1.0).unwrap();
        let w = spec.warp();
        let tol = Tolerance { absolute: 0.0, relative: 1e-11, max_intervals: 50_000 };
        let radial = match w.domain_end() {
            Some(end) => integrate(|t| w.warp(t), 0.0, end, tol).value,
            None => integrate_to_infinity(|t| w.warp(t), 0.0, tol).value,
        };
        let direct = integrate(|x| x.powf(2.0 * p - 2.0), 0.0, 1.0, tol).value;
        prop_assert!((radial - direct).abs() <= 1e-8 * direct, "{} vs {}", radial, direct);
    }

    // μ and -μ contribute identically once both components are summed.
    #[test]
    fn signed_modes_contribute_equally(p in 0.2f64..1.5, mu in 0.1f64..6.0, shift in 1.0f64..200.0) {
        let spec = CuspModelSpec::new(2, p, 1.0).unwrap();
        let h = 0.02;
        let end = spec.warp().domain_end().unwrap_or(f64::INFINITY);
        let n = 600.min((0.9 * end / h) as usize);
        let total = |m: f64| {
            let prob = mode_problem(&spec, m);
            mode_matrix(&prob, Component::Plus, h, n).unwrap().inertia_below(shift)
                + mode_matrix(&prob, Component::Minus, h, n).unwrap().inertia_below(shift)
        };
        prop_assert_eq!(total(mu), total(-mu));
    }

    #[test]
    fn zeta_scales_with_radius(r in 0.3f64..4.0, s in 2.5f64..8.0) {
        let eps = 1e-9 * r.powf(s);
        let unit = zeta_boundary(&circle(1.0, SpinStructure::Nontrivial), s, eps / r.powf(s)).unwrap();
        let scaled = zeta_boundary(&circle(r, SpinStructure::Nontrivial), s, eps).unwrap();
        prop_assert!((scaled - r.powf(s) * unit).abs() <= 2.0 * eps);
    }

    // The exact tail lies between the reported bounds.
    #[test]
    fn zeta_tail_bounds_are_sound(r in 0.5f64..3.0, idx in 0usize..3, eps_exp in 3i32..9) {
        let s = [2.0, 4.0, 6.0][idx];
        // Σ_{j>=0} 2 (r/(j+1/2))^s = 2 r^s (2^s - 1) ζ(s) for even s in closed form.
        let riemann = [PI.powi(2) / 6.0, PI.powi(4) / 90.0, PI.powi(6) / 945.0][idx];
        let exact = 2.0 * r.powf(s) * (2f64.powf(s) - 1.0) * riemann;
        let eps = 10f64.powi(-eps_exp) * exact;
        let model = circle(r, SpinStructure::Nontrivial);
        match zeta_boundary_detailed(&model, s, eps) {
            Ok(z) => {
                let partial = zeta_partial_sum(&model, s, z.terms);
                let tail = exact - partial;
                prop_assert!(tail >= z.tail_lower * (1.0 - 1e-9) - 1e-12 * exact);
                prop_assert!(tail <= z.tail_upper * (1.0 + 1e-9) + 1e-12 * exact);
                prop_assert!((z.value - exact).abs() <= eps + 1e-12 * exact);
            }
            Err(e) => {
                let budget = matches!(e, cusp_weyl::Error::TruncationBudget { .. });
                prop_assert!(budget, "unexpected error: {}", e);
            }
        }
    }

    // The regime and exponent depend on (n, p) alone.
    #[test]
    fn regime_is_a_function_of_n_and_p(p in 0.05f64..3.0, x0 in 0.5f64..2.0, r in 0.5f64..2.0) {
        let a = predict(&CuspModelSpec::new(2, p, 1.0).unwrap(), &circle(1.0, SpinStructure::Nontrivial));
        let b = predict(&CuspModelSpec::new(2, p, x0).unwrap(), &circle(r, SpinStructure::Nontrivial));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!((a.regime, a.exponent, a.log_power), (b.regime, b.exponent, b.log_power));
        }
    }

    // Closed one-forms on a circle never change invertibility of the normal family.
    #[test]
    fn normal_family_verdict_tracks_boundary_gap(
        raw in prop::collection::vec(-1.0f64..1.0, 7),
        nontrivial in any::<bool>(),
        r in 0.5f64..2.0,
    ) {
        let total: f64 = raw.iter().map(|v| v.abs()).sum();
        let scale = 0.95 / total.max(1.0);
        let alpha = FourierSeries {
            constant: raw[0] * scale,
            cosine: raw[1..4].iter().map(|v| v * scale).collect(),
            sine: raw[4..7].iter().map(|v| v * scale).collect(),
        };
        prop_assume!(alpha.sup_bound() < 1.0);
        let spin = if nontrivial { SpinStructure::Nontrivial } else { SpinStructure::Trivial };
        let spec = NormalFamilySpec::new(r, spin, alpha, 8);
        let verdict = scan_invertibility(&spec).unwrap();
        prop_assert_eq!(verdict.fully_elliptic, spectral_gap(&circle(r, spin)).invertible);
    }

    #[test]
    fn hermitian_point_recovers_gap(r in 0.3f64..3.0) {
        let alpha = FourierSeries { constant: 0.2, cosine: vec![0.3], sine: vec![0.1] };
        let spec = NormalFamilySpec::new(r, SpinStructure::Nontrivial, alpha, 16);
        let sigma = smallest_singular_value(&assemble_family(&spec, 0.0));
        let gap = spectral_gap(&circle(r, SpinStructure::Nontrivial)).gap;
        prop_assert!((sigma - gap).abs() <= 1e-10 * gap);
    }

}

proptest! {
    // Each case sums ~1e8 boundary terms at p = 1/3.
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cusp_constant_transports_with_radius(k in 3u32..6, r in 0.5f64..3.0) {
        let p = 1.0 / k as f64;
        let spec = CuspModelSpec::new(2, p, 1.0).unwrap();
        let unit = predict(&spec, &circle(1.0, SpinStructure::Nontrivial)).unwrap().constant;
        let scaled = predict(&spec, &circle(r, SpinStructure::Nontrivial)).unwrap().constant;
        let want = unit * r.powf(1.0 / p - 1.0);
        prop_assert!((scaled - want).abs() <= 1e-7 * want);
    }
}

#[test]
fn first_and_second_order_schemes_agree() {
    let spec = CuspModelSpec::new(2, 1.0, 1.0).unwrap();
    let prob = mode_problem(&spec, 0.5);
    let first = first_order_mode_matrix(&prob, 8.0, 800).unwrap();
    let lowest_first = first.gram().eigenvalues_below(50.0).unwrap()[0];
    let second = discretize(|t| prob.q_minus(t), 0.0, 8.0, 799).unwrap();
    let lowest_second = second.eigenvalues_below(50.0).unwrap()[0];
    // Frozen from a converged run of the second-order scheme.
    const FROZEN: f64 = 3.054164836055122;
    assert!((lowest_second - FROZEN).abs() <= 1e-9 * FROZEN);
    assert!((lowest_first - lowest_second).abs() <= 1e-3 * lowest_second);
}

#[test]
fn first_order_spectrum_is_symmetric() {
    let spec = CuspModelSpec::new(2, 0.5, 1.0).unwrap();
    for mu in [0.0, 0.7] {
        let m = first_order_mode_matrix(&mode_problem(&spec, mu), 3.0, 40).unwrap();
        let mut eigs: Vec<f64> = m.to_dense().symmetric_eigenvalues().iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        for (a, b) in eigs.iter().zip(eigs.iter().rev()) {
            assert!((a + b).abs() < 1e-10);
        }
    }
}

#[test]
fn tiny_first_order_matrix_matches_singular_values() {
    let spec = CuspModelSpec::new(2, 1.0, 1.0).unwrap();
    let m = first_order_mode_matrix(&mode_problem(&spec, 1.5), 2.0, 8).unwrap();
    let mut sv: Vec<f64> = m.block().singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    let mut eigs: Vec<f64> = m
        .to_dense()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .filter(|&e| e > 0.0)
        .collect();
    eigs.sort_by(f64::total_cmp);
    assert_eq!(eigs.len(), 8);
    for (a, b) in eigs.iter().zip(&sv) {
        assert!((a - b).abs() < 1e-10 * b.max(1.0));
    }
}

#[test]
fn counts_grow_with_lambda() {
    let spec = CuspModelSpec::new(2, 1.0, 1.0).unwrap();
    let model = circle(1.0, SpinStructure::Nontrivial);
    let mut previous = 0;
    for lambda in [2.0, 3.0, 4.5, 6.0, 8.0, 10.0, 13.0] {
        let n = count_states(&CountRequest::new(spec, model.clone(), lambda)).unwrap().count;
        assert!(n >= previous, "N({lambda}) = {n} < {previous}");
        previous = n;
    }
}

#[test]
fn semiclassical_volume_limit() {
    // Phase space of the p = 1 end: N ≈ r λ² ∫ w dt = λ².
    let spec = CuspModelSpec::new(2, 1.0, 1.0).unwrap();
    let model = circle(1.0, SpinStructure::Nontrivial);
    let sc = semiclassical_count(&spec, &model, 30.0).unwrap();
    assert!((sc / 900.0 - 1.0).abs() < 0.05, "{sc}");
}

// Odd dimension: each signed boundary eigenvalue contributes one radial
// component. With the round 2-sphere boundary the phase-space count
// converges to the predicted constants, which carry ε = 1.
#[test]
fn odd_dimension_bookkeeping_matches_prediction() {
    let model = round_sphere();
    for (p, lambda, tol) in [(1.0 / 6.0, 16.0, 0.01), (1.0, 16.0, 0.02)] {
        let spec = CuspModelSpec::new(3, p, 1.0).unwrap();
        let pred = predict(&spec, &model).unwrap();
        let sc = semiclassical_count(&spec, &model, lambda).unwrap() / lambda.powf(pred.exponent);
        assert!((sc / pred.constant - 1.0).abs() < tol, "p = {p}: {sc} vs {}", pred.constant);
    }
    let spec = CuspModelSpec::new(3, 1.0 / 6.0, 1.0).unwrap();
    let res = count_states(&CountRequest::new(spec, model.clone(), 8.0)).unwrap();
    assert!(((res.count as f64) / res.semiclassical - 1.0).abs() < 0.02);
}

#[test]
fn noisy_fit_recovers_constant() {
    let clean: Vec<(f64, f64)> = geometric_lambdas(8.0, 32.0, 8)
        .into_iter()
        .map(|l| (l, 2.0 * l * l))
        .collect();
    for seed in 0..20 {
        let mut noisy = clean.clone();
        cusp_weyl::cli::inject_noise(&mut noisy, 0.01, seed);
        let fit = fit_asymptotics(
            &noisy,
            FitOptions { log_power: LogPower::Zero, frozen_exponent: Some(2.0) },
        )
        .unwrap();
        assert!((fit.c_fit / 2.0 - 1.0).abs() < 0.03, "seed {seed}: {}", fit.c_fit);
    }
}
