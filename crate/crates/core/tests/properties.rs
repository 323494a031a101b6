//! Randomized invariants.

use std::sync::OnceLock;

use proptest::prelude::*;
use sil_core::config::parse_config;
use sil_core::harness::{fit_rows, merge_rows, NormRow};
use sil_core::linode::solve_scalar_linode;
use sil_core::numerics::fit_order;
use sil_core::operator1d::Operator1D;
use sil_core::potentials::{make_quartic, make_twowell, parse_polynomial};
use sil_core::profile::{solve_scalar_profile, Profile1D};
use sil_core::report::{parse_table, Table};

fn quartic_profile() -> &'static Profile1D {
    static P: OnceLock<Profile1D> = OnceLock::new();
    P.get_or_init(|| solve_scalar_profile(&make_quartic(), 10.0, 1025).unwrap())
}

fn norm_row() -> impl Strategy<Value = NormRow> {
    // A small ε alphabet makes collisions between inputs likely.
    (
        prop::sample::select(vec![0.2, 0.12, 0.1, 0.085, 0.06, 0.05]),
        prop::array::uniform5(1e-8..1.0f64),
    )
        .prop_map(|(eps, v)| NormRow {
            eps,
            sup_l2: v[0],
            grad_off: v[1],
            grad_tau: v[2],
            eps_grad_n: v[3],
            runtime_s: v[4],
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_is_commutative_associative_idempotent(
        a in prop::collection::vec(norm_row(), 0..6),
        b in prop::collection::vec(norm_row(), 0..6),
        c in prop::collection::vec(norm_row(), 0..6),
    ) {
        let ab = merge_rows(&a, &b);
        prop_assert_eq!(&ab, &merge_rows(&b, &a));
        prop_assert_eq!(merge_rows(&ab, &c), merge_rows(&a, &merge_rows(&b, &c)));
        prop_assert_eq!(merge_rows(&ab, &ab), ab.clone());
        prop_assert!(ab.windows(2).all(|w| w[0].eps > w[1].eps));
        let fa = fit_rows(&merge_rows(&ab, &c));
        let fb = fit_rows(&merge_rows(&c, &ab));
        for (x, y) in fa.iter().zip(&fb) {
            prop_assert!(x.1.to_bits() == y.1.to_bits());
        }
    }

    #[test]
    fn fit_order_recovers_power_laws(p in -1.0..8.0f64, c in 1e-3..1e3f64) {
        let eps: [f64; 4] = [0.12, 0.085, 0.06, 0.03];
        let v: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
        let fit = fit_order(&eps, &v).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9);
    }

    #[test]
    fn config_canonical_form_round_trips(
        entries in prop::collection::btree_map("[a-z][a-z0-9_.]{0,8}", "[A-Za-z0-9 ,.+-]{0,12}", 0..8)
    ) {
        let text: String = entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let c = parse_config(&text).unwrap();
        for (k, v) in &entries {
            prop_assert_eq!(c.get(k), Some(v.trim()));
        }
        prop_assert_eq!(parse_config(&c.to_canonical()).unwrap(), c);
    }

    #[test]
    fn tables_round_trip_bit_exactly(rows in prop::collection::vec(prop::array::uniform3(any::<f64>().prop_filter("finite", |v| v.is_finite())), 0..10)) {
        let mut t = Table::new("t", &["a", "b", "c"]);
        for r in &rows {
            t.push(r.to_vec());
        }
        let back = parse_table("t", &t.to_csv()).unwrap();
        prop_assert_eq!(back.rows.len(), rows.len());
        for (x, y) in back.rows.iter().zip(&rows) {
            for (p, q) in x.iter().zip(y) {
                prop_assert_eq!(p.to_bits(), q.to_bits());
            }
        }
    }

    #[test]
    fn polynomial_text_round_trips(coeffs in prop::collection::vec(-1e6..1e6f64, 1..10)) {
        let text = coeffs.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(", ");
        prop_assert_eq!(parse_polynomial(&text).unwrap(), coeffs);
    }

    #[test]
    fn vector_hessian_matches_gradient_differences(x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let w = make_twowell();
        let h = 1e-5;
        let hess = w.hessian(&[x, y]);
        for j in 0..2 {
            let mut up = [x, y];
            let mut dn = [x, y];
            up[j] += h;
            dn[j] -= h;
            let (gu, gd) = (w.gradient(&up), w.gradient(&dn));
            for i in 0..2 {
                let fd = (gu[i] - gd[i]) / (2.0 * h);
                prop_assert!((fd - hess[(i, j)]).abs() <= 1e-5 * (1.0 + hess[(i, j)].abs()));
            }
        }
    }

    #[test]
    fn scalar_derivatives_match_differences(u in -2.0..2.0f64) {
        let f = make_quartic();
        let h = 1e-5;
        prop_assert!(((f.f(u + h) - f.f(u - h)) / (2.0 * h) - f.d1(u)).abs() < 1e-6 * (1.0 + f.d1(u).abs()));
        prop_assert!(((f.d1(u + h) - f.d1(u - h)) / (2.0 * h) - f.d2(u)).abs() < 1e-6 * (1.0 + f.d2(u).abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn operator_is_self_adjoint_in_its_weighted_product(
        seed in prop::collection::vec(-1.0..1.0f64, 3 * 65),
        slope in 0.0..0.5f64,
    ) {
        let n = 65;
        let z: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64).collect();
        let weight: Vec<f64> = z.iter().map(|r| 1.0 + slope * r.abs()).collect();
        let half: Vec<f64> = z.windows(2).map(|w| 1.0 + slope * (0.5 * (w[0] + w[1])).abs()).collect();
        let op = Operator1D::weighted(z, 1, seed[..n].to_vec(), weight, half);
        let (u, v) = (&seed[n..2 * n], &seed[2 * n..]);
        let lhs = op.inner(&op.apply(u), v);
        let rhs = op.inner(u, &op.apply(v));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} {rhs}");
    }

    #[test]
    fn linearized_solve_is_linear(alpha in -2.0..2.0f64, beta in -2.0..2.0f64, k in 1usize..4) {
        let p = quartic_profile();
        // Odd data is orthogonal to the even θ₀′.
        let a: Vec<f64> = p.z.iter().map(|z| (-(z * z)).exp() * (k as f64 * z).sin()).collect();
        let b: Vec<f64> = p.z.iter().map(|z| p.eval_scalar(*z)[1] * z * z * z).collect();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
        let (sa, sb) = (solve_scalar_linode(&a, p).unwrap(), solve_scalar_linode(&b, p).unwrap());
        let sc = solve_scalar_linode(&combo, p).unwrap();
        let err = sc
            .u
            .iter()
            .zip(sa.u.iter().zip(&sb.u))
            .map(|(c, (x, y))| (c - alpha * x - beta * y).abs())
            .fold(0.0, f64::max);
        prop_assert!(err < 1e-9, "{err:e}");
        prop_assert!(sc.anchor.abs() <= 1e-12);
    }
}
