use dejong::battery::{random_spec, random_symmetric_spec, KernelStyle, Support};
use dejong::bounds::{dk_dw_consistency, kolmogorov_bound, wasserstein_bound, BoundInputs};
use dejong::distances::{kolmogorov_exact, wasserstein_exact, DiscreteLaw};
use dejong::engine::{Limits, OutcomeSpace};
use dejong::hoeffding::{ExtendedTable, HoeffdingDecomposition};
use dejong::model::{build_homogeneous_sum, FiniteDistribution, Subset, UStatisticSpec};
use dejong::pair::{theta_product_identity, PairContext};
use dejong::scalar::Scalar;
use dejong::BigRational as Q;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec_from(seed: u64) -> UStatisticSpec<Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4);
    let p = rng.random_range(1..=n.min(3));
    if rng.random_bool(0.25) {
        return random_symmetric_spec(&mut rng, n, p, Support::SkewedThreePoint);
    }
    let style = if rng.random_bool(0.5) {
        KernelStyle::Product
    } else {
        KernelStyle::CanonicalTable
    };
    random_spec(&mut rng, n, p, &Support::ALL, style)
}

/// An arbitrary (not degenerate) integer table over the spec's space.
fn arbitrary_table(space: &OutcomeSpace<Q>, seed: u64) -> Vec<Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..space.len()).map(|_| Q::from_int(rng.random_range(-5i64..=5))).collect()
}

fn subsets(n: usize) -> impl Iterator<Item = Subset> {
    (0u32..(1 << n)).map(Subset::from_mask)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reconstruction_and_orthogonality(seed in any::<u64>()) {
        let spec = spec_from(seed);
        let space = OutcomeSpace::for_spec(&spec, Limits::default()).unwrap();
        let table = arbitrary_table(&space, seed ^ 1);
        let dec = HoeffdingDecomposition::compute(&space, &table).unwrap();
        prop_assert_eq!(dec.reconstruct(&space), table);
        let lifted: Vec<(Subset, Vec<Q>)> = subsets(spec.n)
            .map(|s| { let t = space.broadcast(&s, &dec.component_table(&s)); (s, t) })
            .collect();
        for (a, ta) in &lifted {
            for (b, tb) in &lifted {
                if a < b {
                    let prod: Vec<Q> = ta.iter().zip(tb).map(|(x, y)| x * y).collect();
                    prop_assert_eq!(space.expectation(&prod), Q::from_int(0), "{} {}", a, b);
                }
            }
        }
    }

    #[test]
    fn components_are_centered_off_their_subset(seed in any::<u64>()) {
        let spec = spec_from(seed);
        let space = OutcomeSpace::for_spec(&spec, Limits::default()).unwrap();
        let dec = HoeffdingDecomposition::compute(&space, &arbitrary_table(&space, seed)).unwrap();
        for j in subsets(spec.n) {
            let full = space.broadcast(&j, &dec.component_table(&j));
            for &i in j.indices() {
                let rest = Subset::new(j.indices().iter().copied().filter(|&k| k != i).collect());
                let cond = space.conditional_expectation(&full, &rest);
                prop_assert!(cond.iter().all(|v| v.is_negligible()), "{} given {}", j, rest);
            }
        }
    }

    #[test]
    fn zeta_and_mobius_are_inverse(seed in any::<u64>()) {
        let spec = spec_from(seed);
        let space = OutcomeSpace::for_spec(&spec, Limits::default()).unwrap();
        let table = arbitrary_table(&space, seed);
        let zeta = ExtendedTable::zeta(&space, &table).unwrap();
        let back = zeta.clone().mobius().inverse_mobius();
        for s in subsets(spec.n) {
            prop_assert_eq!(back.slice(&s), zeta.slice(&s));
        }
        prop_assert_eq!(zeta.full_slice(), table);
    }

    #[test]
    fn homogeneous_sum_evaluates_products(
        coeffs in proptest::collection::vec(-6i64..=6, 6),
        digits in proptest::collection::vec(0usize..3, 4),
    ) {
        let subs: Vec<Subset> = dejong::model::p_subsets(4, 2);
        let terms: Vec<(Subset, Q)> = subs.iter().cloned().zip(coeffs.iter().map(|&c| Q::from_int(c))).collect();
        let d = FiniteDistribution::<Q>::skewed_three_point();
        let spec = build_homogeneous_sum(terms.clone(), vec![d.clone(); 4]).unwrap();
        let vals = d.values();
        let mut want = Q::from_int(0);
        for (s, a) in &terms {
            want += &(a.clone() * s.indices().iter().map(|&i| vals[digits[i]].clone()).fold(Q::from_int(1), |x, y| x * y));
        }
        prop_assert_eq!(spec.evaluate(&digits), want);
    }

    #[test]
    fn bounds_are_monotone(
        e4 in 1.0f64..6.0, rho in 0.0f64..1.0, kappa in 0.1f64..20.0,
        de in 0.0f64..1.0, dr in 0.0f64..0.5, dk in 0.0f64..5.0,
    ) {
        let base = BoundInputs { fourth_moment: e4, rho, kappa, p: 2, n: 10, symmetric: false };
        let away = BoundInputs {
            fourth_moment: if e4 >= 3.0 { e4 + de } else { (e4 - de).max(1.0) },
            rho: rho + dr,
            kappa: kappa + dk,
            ..base
        };
        prop_assert!(kolmogorov_bound(&away).unwrap() >= kolmogorov_bound(&base).unwrap() - 1e-12);
        prop_assert!(wasserstein_bound(&away).unwrap() >= wasserstein_bound(&base).unwrap() - 1e-12);
    }

    #[test]
    fn wasserstein_is_shift_lipschitz(
        atoms in proptest::collection::vec((-4.0f64..4.0, 0.05f64..1.0), 1..8),
        c in -2.0f64..2.0,
    ) {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let law = DiscreteLaw::new(atoms.iter().map(|(v, p)| (*v, p / total)).collect()).unwrap();
        let d0 = wasserstein_exact(&law);
        let d1 = wasserstein_exact(&law.shifted(c));
        prop_assert!((d1 - d0).abs() <= c.abs() + 1e-12);
        prop_assert!(dk_dw_consistency(kolmogorov_exact(&law), d0));
    }

    #[test]
    fn conditioning_on_w_shrinks_variance(seed in any::<u64>()) {
        let spec = spec_from(seed);
        let Ok(ctx) = PairContext::new(&spec, Limits::default()) else { return Ok(()); };
        let space = ctx.space();
        let given_x = ctx.conditional_on_x(|a, b| (b.clone() - a.clone()).square());
        let var_x = space.expectation(&given_x.iter().map(|v| v.square()).collect::<Vec<_>>())
            - space.expectation(&given_x).square();
        let groups = ctx.group_by_w(&given_x);
        let mean: Q = groups.iter().fold(Q::from_int(0), |acc, g| acc + g.prob.clone() * g.mean.clone());
        let var_w = groups.iter().fold(Q::from_int(0), |acc, g| acc + g.prob.clone() * g.mean.square()) - mean.square();
        prop_assert!(var_w <= var_x);
    }

    #[test]
    fn theta_swap_identity(seed in any::<u64>()) {
        let spec = spec_from(seed);
        let Ok(ctx) = PairContext::new(&spec, Limits::default()) else { return Ok(()); };
        for i in 0..spec.n {
            for j in 0..spec.n {
                if i != j {
                    let t = theta_product_identity(&ctx, i, j).unwrap();
                    prop_assert!(t.holds(), "{} {}", i, j);
                }
            }
        }
    }
}
