mod common;

use common::*;
use iccap_core::channel::{build_parallel, genie_matrices, tan_rates};
use iccap_core::matrix::{numerical_radius, project_trace_psd, schur_psd_exists};
use iccap_core::optimizer::{
    maximize_minmax, maximize_tan, pgic_allocate, region_boundary, single_user_capacity, sum_capacity, OptConfig,
};
use iccap_core::regime::{noisy_at, sigma_fixed_point, structural_regime};
use iccap_core::riccati::{solvable, solve_max};
use iccap_core::{ChannelPair, CovariancePair, ParallelGains, RegimeLabel, SymMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn quick() -> OptConfig {
    OptConfig { restarts: 6, ..OptConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn radius_dominates_symmetric_part(seed in any::<u64>(), t in 1usize..5) {
        let mut rng = rng(seed);
        let b = rand_matrix(&mut rng, t, 2.0);
        let r = numerical_radius(&b, 1e-10).unwrap();
        let sym = SymMatrix::symmetrize(b.clone());
        prop_assert!(r >= sym.spectral_radius() - 1e-10);
        let rs = numerical_radius(sym.as_matrix(), 1e-10).unwrap();
        prop_assert!((rs - sym.spectral_radius()).abs() <= 1e-12 * (1.0 + rs));
    }

    #[test]
    fn radius_is_absolutely_homogeneous(seed in any::<u64>(), t in 1usize..5, c in -3.0f64..3.0) {
        let mut rng = rng(seed);
        let b = rand_matrix(&mut rng, t, 1.0);
        let r = numerical_radius(&b, 1e-10).unwrap();
        let rc = numerical_radius(&(&b * c), 1e-10).unwrap();
        prop_assert!((rc - c.abs() * r).abs() <= 1e-9 * (1.0 + rc));
    }

    #[test]
    fn projection_is_idempotent_and_variational(seed in any::<u64>(), t in 1usize..5, budget in 0.0f64..5.0) {
        let mut rng = rng(seed);
        let s = SymMatrix::symmetrize(rand_matrix(&mut rng, t, 3.0));
        let p = project_trace_psd(&s, budget);
        prop_assert!(p.min_eigenvalue() >= -1e-12 && p.trace() <= budget + 1e-12);
        let pp = project_trace_psd(&p, budget);
        prop_assert!(pp.sub(&p).frobenius() <= 1e-12);
        for _ in 0..10 {
            let y = rand_cov(&mut rng, t, budget);
            prop_assert!(s.sub(&p).dot(&y.sub(&p)) <= 1e-10);
        }
    }

    #[test]
    fn schur_test_matches_block_eigenvalue(seed in any::<u64>(), t in 1usize..5) {
        let mut rng = rng(seed);
        let a = rand_matrix(&mut rng, t, 1.0);
        let q = rand_orthogonal(&mut rng, t);
        let d: Vec<f64> = (0..t).map(|_| {
            let v: f64 = rng.gen_range(0.05..1.0);
            if rng.gen_bool(0.7) { v } else { -v }
        }).collect();
        let shift = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)) * q.transpose();
        let b = SymMatrix::symmetrize(a.transpose() * &a + shift);
        let mut block = DMatrix::<f64>::identity(2 * t, 2 * t);
        block.view_mut((0, t), (t, t)).copy_from(&a);
        block.view_mut((t, 0), (t, t)).copy_from(&a.transpose());
        block.view_mut((t, t), (t, t)).copy_from(b.as_matrix());
        let direct = SymMatrix::symmetrize(block).min_eigenvalue() >= -1e-12;
        prop_assert_eq!(schur_psd_exists(&a, &b).unwrap(), direct);
    }

    #[test]
    fn genie_residual_agrees_two_ways(seed in any::<u64>(), t in 1usize..4) {
        let mut rng = rng(seed);
        let ch = weak_channel(&mut rng, t, 0.4, 1.0, 1.0);
        let cov = rand_cov_pair(&mut rng, &ch);
        let g = genie_matrices(&ch, &cov).unwrap();
        let x = rand_pd(&mut rng, t, 0.5);
        let xinv = x.as_matrix().clone().try_inverse().unwrap();
        let direct = x.as_matrix() + g.w1.transpose() * &xinv * &g.w1 - g.m1.as_matrix();
        let eye = DMatrix::<f64>::identity(t, t);
        let sigma1 = x.as_matrix() + g.a1.transpose() * &g.a1;
        let folded = &g.a1 * sigma1.clone().try_inverse().unwrap() * g.a1.transpose();
        let sigma2 = &eye - &folded;
        let s2inv = sigma2.try_inverse().unwrap();
        let via_sigma = &sigma1 - (&eye - &g.a2 * &s2inv * g.a2.transpose());
        // Σ2 is formed by cancellation, so its inverse carries that error.
        let amplification = (1.0 + folded.norm()) * s2inv.norm();
        let magnitude = 1.0 + sigma1.norm() + g.a2.norm_squared() * s2inv.norm() + g.w1.norm_squared() * xinv.norm();
        prop_assert!((direct - via_sigma).amax() <= 1e-12 * magnitude * amplification);
    }

    #[test]
    fn tan_rate_monotone_in_own_power(seed in any::<u64>(), t in 1usize..4, c in 0.0f64..1.0) {
        let mut rng = rng(seed);
        let ch = weak_channel(&mut rng, t, 0.8, 2.0, 2.0);
        let cov = rand_cov_pair(&mut rng, &ch);
        let (r1, _) = tan_rates(&ch, &cov).unwrap();
        let (r1c, _) = tan_rates(&ch, &CovariancePair::new(cov.s1.scale(c), cov.s2.clone())).unwrap();
        prop_assert!(r1c <= r1 + 1e-14);
    }

    #[test]
    fn parallel_rates_are_subchannel_sums(seed in any::<u64>(), t in 1usize..5) {
        let mut rng = rng(seed);
        let mut draw = |lo: f64, hi: f64| -> Vec<f64> { (0..t).map(|_| rng.gen_range(lo..hi)).collect() };
        let gains = ParallelGains { h1: draw(0.2, 2.0), h2: draw(-1.0, 1.0), h3: draw(-1.0, 1.0), h4: draw(0.2, 2.0) };
        let p1 = draw(0.0, 1.0);
        let p2 = draw(0.0, 1.0);
        let ch = build_parallel(&gains, t as f64, t as f64).unwrap();
        let cov = CovariancePair::new(SymMatrix::from_diagonal(&p1), SymMatrix::from_diagonal(&p2));
        let (r1, r2) = tan_rates(&ch, &cov).unwrap();
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        for i in 0..t {
            e1 += 0.5 * (1.0 + gains.h1[i].powi(2) * p1[i] / (1.0 + gains.h2[i].powi(2) * p2[i])).ln();
            e2 += 0.5 * (1.0 + gains.h4[i].powi(2) * p2[i] / (1.0 + gains.h3[i].powi(2) * p1[i])).ln();
        }
        prop_assert!((r1 - e1).abs() <= 1e-12 && (r2 - e2).abs() <= 1e-12);
    }

    #[test]
    fn riccati_solution_certificate(seed in any::<u64>(), t in 1usize..4) {
        let mut rng = rng(seed);
        let m = rand_pd(&mut rng, t, 0.2);
        let w = rand_matrix(&mut rng, t, 0.6);
        if solvable(&m, &w, 0.0).unwrap().solvable {
            let sol = solve_max(&m, &w).unwrap();
            prop_assert!(sol.residual <= 1e-10);
            prop_assert!(sol.x.min_eigenvalue() > 0.0);
        }
    }

    #[test]
    fn genie_radius_verdicts_agree(seed in any::<u64>(), t in 1usize..4) {
        let mut rng = rng(seed);
        let cross = rng.gen_range(0.05..0.7);
        let ch = weak_channel(&mut rng, t, cross, 1.0, 1.0);
        let cov = rand_cov_pair(&mut rng, &ch);
        let (r1, r2) = noisy_at(&ch, &cov).unwrap();
        if (r1 - 0.5).abs() > 1e-9 && (r2 - 0.5).abs() > 1e-9 {
            prop_assert_eq!(r1 <= 0.5, r2 <= 0.5);
        }
        if t == 1 && r1.is_finite() {
            prop_assert!((r1 - r2).abs() <= 1e-12 * (1.0 + r1));
        }
    }

    #[test]
    fn sigma_pair_implies_small_radius(seed in any::<u64>(), t in 1usize..4) {
        let mut rng = rng(seed);
        let cross = rng.gen_range(0.05..0.7);
        let ch = weak_channel(&mut rng, t, cross, 1.0, 1.0);
        let cov = rand_cov_pair(&mut rng, &ch);
        if sigma_fixed_point(&ch, &cov).unwrap().is_some() {
            let (r1, r2) = noisy_at(&ch, &cov).unwrap();
            prop_assert!(r1.max(r2) <= 0.5 + 1e-6);
        }
    }

    #[test]
    fn strong_label_survives_scaling_up(seed in any::<u64>(), t in 1usize..4, c in 1.0f64..4.0) {
        let mut rng = rng(seed);
        let ch = strong_channel(&mut rng, t, 1.0, 1.0);
        prop_assert_eq!(structural_regime(&ch).unwrap(), Some(RegimeLabel::Strong));
        let scaled = ChannelPair::new(ch.h1().clone(), ch.h2() * c, ch.h3() * c, ch.h4().clone(), 1.0, 1.0).unwrap();
        prop_assert_eq!(structural_regime(&scaled).unwrap(), Some(RegimeLabel::Strong));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tan_result_feasible_and_budget_monotone(seed in any::<u64>(), t in 1usize..4) {
        let mut rng = rng(seed);
        let cross = rng.gen_range(0.1..1.0);
        let ch = weak_channel(&mut rng, t, cross, 1.0, 1.5);
        let cfg = quick();
        let r = maximize_tan(&ch, &cfg).unwrap();
        prop_assert!(r.achieving.s1.min_eigenvalue() >= -1e-9 && r.achieving.s2.min_eigenvalue() >= -1e-9);
        prop_assert!(r.achieving.s1.trace() <= 1.0 + 1e-9 && r.achieving.s2.trace() <= 1.5 + 1e-9);
        prop_assert!(r.sum_rate_nats >= 0.0);
        let doubled = maximize_tan(&ch.with_powers(2.0, 1.5).unwrap(), &cfg).unwrap();
        prop_assert!(doubled.sum_rate_nats >= r.sum_rate_nats - 1e-9);
    }

    #[test]
    fn capacity_below_interference_free_bound(seed in any::<u64>(), kind in 0usize..3) {
        let mut rng = rng(seed);
        let ch = match kind {
            0 => strong_channel(&mut rng, 2, 1.0, 2.0),
            1 => mixed_channel(&mut rng, 2, 1.0, 2.0),
            _ => weak_channel(&mut rng, 2, 0.1, 1.0, 2.0),
        };
        let cfg = OptConfig { search: iccap_core::SearchConfig { restarts: 4, ..Default::default() }, ..quick() };
        let r = sum_capacity(&ch, &cfg).unwrap();
        let bound = single_user_capacity(ch.h1(), 1.0) + single_user_capacity(ch.h4(), 2.0);
        prop_assert!(r.sum_rate_nats <= bound + 1e-8);
        prop_assert!(r.achieving.is_feasible(&ch));
    }

    #[test]
    fn strong_capacity_is_user_symmetric(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ch = strong_channel(&mut rng, 2, 1.5, 0.7);
        let cfg = quick();
        let a = maximize_minmax(&ch, RegimeLabel::Strong, &cfg).unwrap().sum_rate_nats;
        let b = maximize_minmax(&ch.swapped(), RegimeLabel::Strong, &cfg).unwrap().sum_rate_nats;
        prop_assert!((a - b).abs() <= 1e-8);
    }

    #[test]
    fn region_is_pareto_with_capacity_apex(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ch = strong_channel(&mut rng, 2, 1.0, 1.0);
        let cfg = quick();
        let b = region_boundary(&ch, 9, &cfg).unwrap();
        prop_assert!(b.points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
        prop_assert_eq!(b.points.len(), b.weights.len());
        let apex = b.points.iter().map(|p| p.0 + p.1).fold(f64::NEG_INFINITY, f64::max);
        let c = maximize_minmax(&ch, RegimeLabel::Strong, &cfg).unwrap().sum_rate_nats;
        prop_assert!((apex - c).abs() <= 1e-5, "apex {} vs {}", apex, c);
    }

    #[test]
    fn pgic_respects_budgets(seed in any::<u64>(), t in 1usize..4) {
        let mut rng = rng(seed);
        let mut draw = |lo: f64, hi: f64| -> Vec<f64> { (0..t).map(|_| rng.gen_range(lo..hi)).collect() };
        let gains = ParallelGains { h1: draw(0.2, 2.0), h2: draw(0.0, 1.5), h3: draw(0.0, 1.5), h4: draw(0.2, 2.0) };
        let ch = build_parallel(&gains, 1.3, 2.1).unwrap();
        let r = pgic_allocate(&ch, &quick()).unwrap();
        prop_assert!(r.p1_alloc.iter().chain(&r.p2_alloc).all(|&p| p >= 0.0));
        prop_assert!(r.p1_alloc.iter().sum::<f64>() <= 1.3 + 1e-9);
        prop_assert!(r.p2_alloc.iter().sum::<f64>() <= 2.1 + 1e-9);
        prop_assert!((r.sub_rates.iter().sum::<f64>() - r.sum_rate).abs() <= 1e-12);
    }
}
