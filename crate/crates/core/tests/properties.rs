use proptest::prelude::*;

use thinstrip::asymptotics::{aligned_distance, fit_rate, hs_rank2, sign_distance, SweepRecord};
use thinstrip::io::{read_sweep_csv, write_sweep_csv};
use thinstrip::linalg::{banded_ldlt, shift_invert_lanczos, tridiag_eigs, SymBanded, SymTridiagonal};
use thinstrip::WidthProfile;

/// Valid smooth power profile: `c |x|^m` stays below `0.9 M` on the interval.
fn smooth_profile() -> impl Strategy<Value = WidthProfile> {
    (0.5f64..3.0, 1.0f64..4.0, 0.1f64..1.0, 0.1f64..1.0, 0.3f64..2.0, 0.3f64..2.0).prop_map(
        |(mw, m, fp, fm, a, b)| {
            let c_plus = fp * 0.9 * mw / b.powf(m);
            let c_minus = fm * 0.9 * mw / a.powf(m);
            WidthProfile::smooth_poly(mw, m, c_plus, c_minus, a, b).unwrap()
        },
    )
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn unit_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|d| {
        (
            prop::collection::vec(-1.0f64..1.0, d),
            prop::collection::vec(-1.0f64..1.0, d),
        )
            .prop_filter("nonzero", |(e, f)| {
                e.iter().any(|x| x.abs() > 1e-3) && f.iter().any(|x| x.abs() > 1e-3)
            })
            .prop_map(|(e, f)| (unit(e), unit(f)))
    })
}

fn tridiagonal() -> impl Strategy<Value = SymTridiagonal> {
    (2usize..=200).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-5.0f64..5.0, n - 1),
        )
            .prop_map(|(d, e)| SymTridiagonal::new(d, e).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn limit_potential_grows_away_from_zero(p in smooth_profile(), t in 0.0f64..1.0, u in 0.0f64..1.0) {
        let (x1, x2) = (t.min(u), t.max(u));
        prop_assert_eq!(p.q_limit(0.0), 0.0);
        for s in [1.0, -1.0] {
            prop_assert!(p.q_limit(s * x1) >= 0.0);
            prop_assert!(p.q_limit(s * x1) <= p.q_limit(s * x2));
        }
    }

    #[test]
    fn reduced_potential_is_nonnegative(p in smooth_profile(), t in -0.99f64..0.99, eps in 0.01f64..1.0) {
        let x = if t < 0.0 { t * p.a() } else { t * p.b() };
        prop_assert!(p.w_potential_node(eps, x).unwrap() >= 0.0);
    }

    #[test]
    fn alpha_stays_in_range(p in smooth_profile()) {
        let a = p.alpha();
        prop_assert!(a > 0.0 && a <= 2.0 / 3.0 + 1e-15);
        prop_assert!((a - 2.0 / (p.order() + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn inertia_agrees_with_sturm_count(t in tridiagonal(), x in -20.0f64..20.0) {
        if let Ok(f) = banded_ldlt(&SymBanded::from_tridiagonal(&t), x, None) {
            prop_assert_eq!(f.inertia(), t.sturm_count(x));
        }
    }

    #[test]
    fn tridiagonal_values_are_certified(t in tridiagonal()) {
        let k = t.n().min(6);
        let s = tridiag_eigs(&t, k).unwrap();
        for j in 0..k {
            // sturm count just above lambda_j is at least j + 1
            let x = s.value(j) + 1e-9 * t.norm_inf().max(1.0);
            prop_assert!(t.sturm_count(x) > j);
            let r = t.matvec(s.vector(j));
            let res: f64 = r.iter().zip(s.vector(j)).map(|(a, v)| (a - s.value(j) * v).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-9 * t.norm_inf().max(1.0));
        }
    }

    #[test]
    fn lanczos_vectors_are_b_orthonormal(
        n in 20usize..80,
        seed in prop::collection::vec(0.0f64..1.0, 80 * 3),
    ) {
        // diagonally dominant band of width 2 and a positive tridiagonal mass
        let mut a = SymBanded::zeros(n, 2);
        let mut b = SymBanded::zeros(n, 1);
        for i in 0..n {
            a.set(i, i, 5.0 + 10.0 * seed[3 * i]);
            if i + 1 < n {
                a.set(i + 1, i, -seed[3 * i + 1]);
                b.set(i + 1, i, 0.2 * seed[3 * i + 2]);
            }
            if i + 2 < n {
                a.set(i + 2, i, -0.5 * seed[3 * i + 2]);
            }
            b.set(i, i, 1.0 + seed[3 * i + 1]);
        }
        let s = shift_invert_lanczos(&a, &b, 0.0, 3, 1e-10).unwrap();
        for i in 0..3 {
            let bv = b.matvec(s.vector(i));
            for j in 0..3 {
                let g: f64 = s.vector(j).iter().zip(&bv).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - want).abs() < 1e-10, "gram[{}][{}] = {}", i, j, g);
            }
        }
    }

    #[test]
    fn rank_two_norm_matches_materialized_matrix((e, f) in unit_pair()) {
        let d = e.len();
        let mut fro = 0.0;
        for r in 0..d {
            for c in 0..d {
                fro += (e[r] * e[c] - f[r] * f[c]).powi(2);
            }
        }
        let hs = hs_rank2(&e, &f).unwrap();
        prop_assert!((hs - fro.sqrt()).abs() <= 1e-12);
        prop_assert!(sign_distance(&e, &f) <= 2f64.sqrt() * hs + 1e-12);
    }

    #[test]
    fn power_laws_are_fitted_exactly(slope in -3.0f64..3.0, c in 0.01f64..100.0, x0 in 0.01f64..1.0, n in 3usize..8) {
        let xs: Vec<f64> = (0..n).map(|i| x0 * 0.5f64.powi(i as i32)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(slope)).collect();
        let fit = fit_rate(&xs, &ys).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-12);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-10);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distances_ignore_sign(
        u in prop::collection::vec(-1.0f64..1.0, 1..40),
        w in prop::collection::vec(-1.0f64..1.0, 40),
        dx in 0.001f64..1.0,
    ) {
        let v = &w[..u.len()];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let d = aligned_distance(&u, v, dx);
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, aligned_distance(&u, &neg, dx));
        let neg_u: Vec<f64> = u.iter().map(|x| -x).collect();
        prop_assert_eq!(d, aligned_distance(&neg_u, v, dx));
    }

    #[test]
    fn sweep_csv_round_trips(
        rows in prop::collection::vec((any::<f64>(), 1usize..20, any::<f64>(), any::<f64>(), prop::option::of(any::<f64>())), 0..10)
    ) {
        let recs: Vec<SweepRecord> = rows
            .iter()
            .filter(|r| r.0.is_finite() && r.2.is_finite() && r.3.is_finite() && r.4.is_none_or(f64::is_finite))
            .map(|&(eps, j, l2, lq, d)| SweepRecord {
                eps,
                j,
                lambda_2d: l2,
                lambda_q: lq,
                scaled_residual_2d: l2 * 0.5,
                scaled_q: lq / 3.0,
                mu_ref: eps - lq,
                eigfun_dist: d,
                lambda_2d_levels: [0.0; 2],
                lambda_q_levels: [0.0; 2],
            })
            .collect();
        let mut buf = Vec::new();
        write_sweep_csv(&recs, &mut buf).unwrap();
        let back = read_sweep_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), recs.len());
        for (a, b) in recs.iter().zip(&back) {
            prop_assert_eq!(a.j, b.j);
            for (x, y) in [
                (a.eps, b.eps),
                (a.lambda_2d, b.lambda_2d),
                (a.lambda_q, b.lambda_q),
                (a.scaled_residual_2d, b.scaled_residual_2d),
                (a.scaled_q, b.scaled_q),
                (a.mu_ref, b.mu_ref),
            ] {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            prop_assert_eq!(a.eigfun_dist.map(f64::to_bits), b.eigfun_dist.map(f64::to_bits));
        }
    }
}
