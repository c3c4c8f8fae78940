use super::*;
use crate::engine::Limits;
use crate::model::{build_homogeneous_sum, symmetric_homogeneous_sum, FiniteDistribution, Kernel, KernelFamily, Variable};
use num_rational::BigRational as Q;

fn q(n: i64, d: i64) -> Q {
    Q::from_ratio(n, d)
}

fn s(ix: &[usize]) -> Subset {
    Subset::new(ix.to_vec())
}

fn ctx(spec: &UStatisticSpec<Q>) -> PairContext<Q> {
    PairContext::new(spec, Limits::default()).unwrap()
}

fn x1x2() -> UStatisticSpec<Q> {
    build_homogeneous_sum(vec![(s(&[0, 1]), q(1, 1))], vec![FiniteDistribution::rademacher(); 2]).unwrap()
}

fn sum4() -> UStatisticSpec<Q> {
    symmetric_homogeneous_sum(4, 1, q(1, 2), FiniteDistribution::rademacher()).unwrap()
}

fn tp3() -> UStatisticSpec<Q> {
    symmetric_homogeneous_sum(3, 2, q(1, 1), FiniteDistribution::skewed_three_point()).unwrap()
}

fn mixed() -> UStatisticSpec<Q> {
    build_homogeneous_sum(
        vec![(s(&[0, 1]), q(1, 1)), (s(&[1, 2]), q(2, 1))],
        vec![
            FiniteDistribution::rademacher(),
            FiniteDistribution::skewed_three_point(),
            FiniteDistribution::rademacher(),
        ],
    )
    .unwrap()
}

/// `X_1 + X_1 X_2` written as a single order-2 table kernel.
fn not_degenerate() -> UStatisticSpec<Q> {
    let mut kernels = KernelFamily::new(2);
    kernels
        .entries
        .insert(s(&[0, 1]), Kernel::Table(vec![q(0, 1), q(-2, 1), q(0, 1), q(2, 1)]));
    UStatisticSpec {
        n: 2,
        variables: vec![Variable::Finite(FiniteDistribution::rademacher()); 2],
        kernels,
        symmetric: false,
    }
}

struct Expected {
    e4: Q,
    msq: Q,
    var_t: Q,
    fourth: Q,
    term1: Q,
    term2: Q,
    energy: Q,
}

fn check(spec: UStatisticSpec<Q>, want: Expected) {
    let c = ctx(&spec);
    let r = PairReport::compute(&c, None);
    assert_eq!(r.fourth_moment, want.e4);
    assert_eq!(r.mean_sq_increment, want.msq);
    assert_eq!(r.mean_sq_increment, r.expected_mean_sq_increment());
    assert_eq!(r.var_cond_sq, want.var_t);
    assert_eq!(r.fourth_increment, want.fourth);
    assert_eq!(r.shzh.term1, want.term1);
    assert_eq!(r.shzh.term2, want.term2);
    assert_eq!(r.energy, want.energy);
    assert_eq!(r.regression_max_residual, q(0, 1));
    assert!(r.exchangeable);
    assert!(r.degenerate);
    assert!(r.slacks.all_nonnegative());
}

#[test]
fn x1x2_report() {
    check(
        x1x2(),
        Expected {
            e4: q(1, 1),
            msq: q(2, 1),
            var_t: q(0, 1),
            fourth: q(2, 1),
            term1: q(0, 1),
            term2: q(2, 1),
            energy: q(1, 1),
        },
    );
}

#[test]
fn sum4_report() {
    check(
        sum4(),
        Expected {
            e4: q(5, 2),
            msq: q(1, 2),
            var_t: q(0, 1),
            fourth: q(1, 2),
            term1: q(0, 1),
            term2: q(3, 4),
            energy: q(1, 1),
        },
    );
}

#[test]
fn three_point_report_is_normalized() {
    check(
        tp3(),
        Expected {
            e4: q(13, 1),
            msq: q(4, 3),
            var_t: q(17, 6),
            fourth: q(6, 1),
            term1: q(13, 18),
            term2: q(13, 9),
            energy: q(19, 3),
        },
    );
    check(
        mixed(),
        Expected {
            e4: q(123, 25),
            msq: q(4, 3),
            var_t: q(273, 200),
            fourth: q(9, 2),
            term1: q(53, 60),
            term2: q(31, 20),
            energy: q(157, 50),
        },
    );
}

#[test]
fn rescaling_leaves_report_unchanged() {
    let a = PairReport::compute(&ctx(&tp3()), Some(q(4, 1)));
    let b = PairReport::compute(&ctx(&tp3().scaled(&q(2, 1))), Some(q(4, 1)));
    assert_eq!(a.fourth_moment, b.fourth_moment);
    assert_eq!(a.slacks, b.slacks);
    assert_eq!(a.shzh, b.shzh);
    assert_eq!(b.second_moment, a.second_moment * q(4, 1));
}

#[test]
fn single_variable() {
    let spec = build_homogeneous_sum(vec![(s(&[0]), q(1, 1))], vec![FiniteDistribution::rademacher()]).unwrap();
    let r = PairReport::compute(&ctx(&spec), None);
    assert_eq!(r.fourth_increment, q(2, 1));
    assert_eq!(r.slacks.lemma3b, q(0, 1));
}

#[test]
fn regression_residual_flags_non_degenerate() {
    let c = ctx(&not_degenerate());
    assert!(regression_check(&c) > q(0, 1));
    assert!(!c.degeneracy().degenerate);
}

#[test]
fn conditioning_on_w() {
    let c = ctx(&x1x2());
    let groups = c.condition_on_w(|w, w2| (w2.clone() - w.clone()).square());
    assert_eq!(groups.len(), 2);
    assert!(groups.iter().all(|g| g.mean == q(2, 1)));
    let ones = c.condition_on_w(|_, _| q(1, 1));
    assert!(ones.iter().all(|g| g.mean == q(1, 1)));
    let th = c.condition_on_w(|w, w2| theta(&(w2.clone() - w.clone())));
    for g in th {
        assert_eq!(g.mean, q(-2, 1) * g.value);
    }
}

#[test]
fn conditional_expansion_of_square_increment() {
    for spec in [x1x2(), sum4(), tp3(), mixed()] {
        let e = hoeffding_of_conditional(&ctx(&spec)).unwrap();
        assert!(e.holds, "{:?}", e.mismatches);
    }
    let e = hoeffding_of_conditional(&ctx(&x1x2())).unwrap();
    assert_eq!(e.nonzero_components, 1);
}

#[test]
fn theta_identity_on_product() {
    let c = ctx(&x1x2());
    let t = theta_product_identity(&c, 0, 1).unwrap();
    assert_eq!(t.lhs, q(4, 1));
    assert_eq!(t.rhs, q(4, 1));
    assert!(t.holds());
    assert!(matches!(theta_product_identity(&c, 1, 1), Err(PairError::BadIndices { .. })));
}

#[test]
fn theta_identity_on_three_point() {
    for spec in [tp3(), mixed()] {
        let c = ctx(&spec);
        for i in 0..3 {
            assert_eq!(theta::theta_mean(&c, i), q(0, 1));
            for j in 0..3 {
                if i != j {
                    assert!(theta_product_identity(&c, i, j).unwrap().holds());
                }
            }
        }
    }
}

#[test]
fn difference_statistic_components() {
    let c = ctx(&x1x2());
    let d = difference_statistic(&c, 0).unwrap();
    assert_eq!(d.spec.n, 3);
    let keys: Vec<_> = d.spec.kernels.entries.keys().cloned().collect();
    assert_eq!(keys, vec![s(&[0, 1]), s(&[1, 2])]);
    assert_eq!(d.spec.kernels.entries[&s(&[0, 1])], Kernel::Product(q(-1, 1)));
    let lifted = ctx(&d.spec);
    assert!(lifted.degeneracy().degenerate);
    assert_eq!(regression_check(&lifted), q(0, 1));
    assert_eq!(lifted.lambda(), q(2, 3));
}

#[test]
fn difference_statistic_matches_replacement() {
    // Evaluate D_i on the lifted space and compare with W(x^{(i)}) - W(x).
    let base = mixed();
    let c = ctx(&base);
    for i in 0..3 {
        let d = difference_statistic(&c, i).unwrap();
        let table_spec = d.spec.map_scalars(|v| v.clone());
        let lifted = crate::engine::OutcomeSpace::for_spec(&table_spec, Limits::default()).unwrap();
        let dt = lifted.statistic_table(&table_spec);
        lifted.for_each_outcome(|idx, digits| {
            let x = &digits[..3];
            let mut y = x.to_vec();
            y[i] = digits[3];
            let want = base.evaluate(&y) - base.evaluate(x);
            assert_eq!(dt[idx], want);
        });
    }
}

#[test]
fn table_kernel_difference() {
    // Table form of 2 X_2 X_3 on the mixed spec, lifted at the middle index.
    let base = mixed();
    let mut tab = base.clone();
    for (subset, k) in tab.kernels.entries.iter_mut() {
        *k = Kernel::Table(base.kernel_table(subset, k));
    }
    let a = difference_statistic(&ctx(&base), 1).unwrap();
    let b = difference_statistic(&ctx(&tab), 1).unwrap();
    let sa = crate::engine::OutcomeSpace::for_spec(&a.spec, Limits::default()).unwrap();
    assert_eq!(sa.statistic_table(&a.spec), sa.statistic_table(&b.spec));
}

#[test]
fn proof_chain_holds() {
    for (spec, kappa) in [(x1x2(), Some(q(4, 1))), (sum4(), Some(q(2, 1))), (tp3(), Some(q(4, 1))), (mixed(), None)] {
        let checks = proof_chain(&ctx(&spec), kappa.as_ref()).unwrap();
        for c in &checks {
            assert!(c.holds(), "{}: {} vs {}", c.step, c.lhs, c.rhs);
        }
        assert_eq!(checks.iter().any(|c| c.step == "term2_sq_le_final"), kappa.is_some());
    }
}

#[test]
fn taylor_bound_grid() {
    let grid: Vec<Q> = (-32..=32).map(|k| q(k, 8)).collect();
    for x in &grid {
        for y in &grid {
            assert!(theta::taylor_quadratic_bound(x, y), "{x} {y}");
        }
    }
    assert!(theta::taylor_quadratic_bound(&q(0, 1), &q(0, 1)));
    assert!(theta::taylor_quadratic_bound(&1.0f64, &-1.0f64));
}

#[test]
fn real_mode_matches_rational() {
    let r = PairReport::compute(&ctx(&mixed()), Some(q(4, 1)));
    let spec = mixed().to_real();
    let c = PairContext::new(&spec, Limits::default()).unwrap();
    let f = PairReport::compute(&c, Some(4.0));
    assert!((f.fourth_moment - r.fourth_moment.to_f64()).abs() < 1e-12);
    assert!((f.shzh.term1 - r.shzh.term1.to_f64()).abs() < 1e-12);
    assert!((f.shzh.term2 - r.shzh.term2.to_f64()).abs() < 1e-12);
    assert!(f.exchangeable);
}

#[test]
fn zero_statistic_is_rejected() {
    let spec = build_homogeneous_sum(vec![(s(&[0, 1]), q(0, 1))], vec![FiniteDistribution::rademacher(); 2]).unwrap();
    assert!(matches!(PairContext::new(&spec, Limits::default()), Err(PairError::ZeroVariance)));
}
