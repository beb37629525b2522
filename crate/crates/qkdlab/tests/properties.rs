//! Randomized property tests over the public library API.

use num_complex::Complex64 as C;
use proptest::prelude::*;
use qkdlab::keyrate::{zeta, SecurityBudget};
use qkdlab::linalg::{
    binary_entropy, partial_trace, trace_distance, von_neumann_entropy, ComplexMatrix,
    DensityOperator,
};
use qkdlab::states::{disturbance_from_qber, qber_from_params};

/// Random two-qubit density operator rho = G G† / tr(G G†).
fn density_from_parts(parts: &[f64]) -> DensityOperator {
    let dim = 4;
    let mut g = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let k = 2 * (i * dim + j);
            g.set(i, j, C::new(parts[k], parts[k + 1]));
        }
    }
    let mut m = g.matmul(&g.adjoint()).unwrap();
    // keep it strictly positive so normalization is well conditioned
    m = m
        .add(&ComplexMatrix::identity(dim).scale(C::new(1e-3, 0.0)))
        .unwrap();
    let tr = m.trace().re;
    let rho = m.scale(C::new(1.0 / tr, 0.0));
    DensityOperator::new(rho, vec![2, 2], vec!['A', 'B']).unwrap()
}

fn parts() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, 32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_commutes_with_convex_mixing(a in parts(), b in parts(), w in 0.0f64..1.0) {
        let ra = density_from_parts(&a);
        let rb = density_from_parts(&b);
        let mixed = ra
            .matrix()
            .scale(C::new(w, 0.0))
            .add(&rb.matrix().scale(C::new(1.0 - w, 0.0)))
            .unwrap();
        let mixed = DensityOperator::new(mixed, vec![2, 2], vec!['A', 'B']).unwrap();
        let lhs = partial_trace(&mixed, &['A']).unwrap();
        let rhs_mat = partial_trace(&ra, &['A'])
            .unwrap()
            .matrix()
            .scale(C::new(w, 0.0))
            .add(&partial_trace(&rb, &['A']).unwrap().matrix().scale(C::new(1.0 - w, 0.0)))
            .unwrap();
        prop_assert!(lhs.matrix().sub(&rhs_mat).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn entropy_is_concave_under_mixing(a in parts(), b in parts(), w in 0.0f64..1.0) {
        let ra = density_from_parts(&a);
        let rb = density_from_parts(&b);
        let mixed = ra
            .matrix()
            .scale(C::new(w, 0.0))
            .add(&rb.matrix().scale(C::new(1.0 - w, 0.0)))
            .unwrap();
        let mixed = DensityOperator::new(mixed, vec![2, 2], vec!['A', 'B']).unwrap();
        let s_mix = von_neumann_entropy(&mixed).unwrap();
        let s_avg = w * von_neumann_entropy(&ra).unwrap()
            + (1.0 - w) * von_neumann_entropy(&rb).unwrap();
        prop_assert!(s_mix >= s_avg - 1e-9, "S(mix)={s_mix} < avg={s_avg}");
    }

    #[test]
    fn trace_distance_is_a_metric_sample(a in parts(), b in parts(), c in parts()) {
        let ra = density_from_parts(&a);
        let rb = density_from_parts(&b);
        let rc = density_from_parts(&c);
        let dab = trace_distance(&ra, &rb).unwrap();
        let dba = trace_distance(&rb, &ra).unwrap();
        prop_assert!((dab - dba).abs() < 1e-12);
        prop_assert!(dab >= 0.0 && dab <= 1.0 + 1e-12);
        prop_assert!((trace_distance(&ra, &ra).unwrap()).abs() < 1e-12);
        let dac = trace_distance(&ra, &rc).unwrap();
        let dcb = trace_distance(&rc, &rb).unwrap();
        prop_assert!(dab <= dac + dcb + 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace_and_psd(a in parts()) {
        let rho = density_from_parts(&a);
        for keep in [['A'], ['B']] {
            let red = partial_trace(&rho, &keep).unwrap();
            prop_assert!((red.matrix().trace().re - 1.0).abs() < 1e-12);
            prop_assert!(qkdlab::linalg::is_psd(red.matrix(), 1e-10));
        }
    }

    #[test]
    fn qber_relation_roundtrips(d in 0.0f64..0.5, p in 0.0f64..0.9) {
        let q = qber_from_params(d, p).unwrap();
        prop_assert!((0.0..=0.5).contains(&q));
        let (d_back, clamped) = disturbance_from_qber(q, p).unwrap();
        if !clamped {
            prop_assert!((d_back - d).abs() < 1e-10, "D={d} p={p} -> Q={q} -> D'={d_back}");
        }
    }

    #[test]
    fn binary_entropy_bounds_and_symmetry(q in 0.0f64..=0.5) {
        let h = binary_entropy(q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-15).contains(&h));
        let h_sym = binary_entropy(1.0 - q).unwrap();
        prop_assert!((h - h_sym).abs() < 1e-12);
    }

    #[test]
    fn budget_fractions_sum_to_total(f_bar in 1e-3f64..0.4, f_pe in 1e-3f64..0.4, f_pa in 1e-3f64..0.19) {
        let eps = 1e-9;
        let b = SecurityBudget::from_fractions(eps, f_bar, f_pe, f_pa).unwrap();
        let sum = b.eps_bar() + b.eps_pe() + b.eps_ec() + b.eps_pa();
        prop_assert!((sum - eps).abs() <= eps * 1e-12);
    }

    #[test]
    fn zeta_decreases_with_more_samples(eps_pe in 1e-12f64..1e-6, m in 1e3f64..1e9) {
        let z1 = zeta(eps_pe, 2, m).unwrap();
        let z2 = zeta(eps_pe, 2, m * 4.0).unwrap();
        prop_assert!(z2 < z1, "zeta did not shrink: {z1} -> {z2}");
    }
}
