//! Seeded generators of random completely degenerate specs over small
//! finite supports, used by the randomized identity and inequality suites.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{p_subsets, FiniteDistribution, Kernel, KernelFamily, UStatisticSpec, Variable};
use crate::BigRational;
use crate::scalar::Scalar;

type Q = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Rademacher,
    SkewedThreePoint,
    SymmetricThreePoint,
}

impl Support {
    pub const ALL: [Support; 3] = [Support::Rademacher, Support::SkewedThreePoint, Support::SymmetricThreePoint];

    pub fn distribution(self) -> FiniteDistribution<Q> {
        match self {
            Support::Rademacher => FiniteDistribution::rademacher(),
            Support::SkewedThreePoint => FiniteDistribution::skewed_three_point(),
            Support::SymmetricThreePoint => FiniteDistribution::symmetric_three_point(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelStyle {
    /// `a_J prod_{i in J} X_i` with random `a_J`.
    Product,
    /// Random integer tables projected onto the canonical (degenerate) part.
    CanonicalTable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatteryCase {
    pub label: String,
    pub spec: UStatisticSpec<Q>,
}

fn small_rational(rng: &mut ChaCha8Rng) -> Q {
    let mut num = 0;
    while num == 0 {
        num = rng.random_range(-4i64..=4);
    }
    Q::from_ratio(num, rng.random_range(1i64..=3))
}

/// Removes from a table over `J` every part that depends on fewer than `|J|`
/// coordinates: applies `I - E_j` along each axis.
pub fn canonical_projection(table: &[Q], dists: &[&FiniteDistribution<Q>]) -> Vec<Q> {
    let sizes: Vec<usize> = dists.iter().map(|d| d.len()).collect();
    let mut t = table.to_vec();
    let k = sizes.len();
    for axis in 0..k {
        let stride: usize = sizes[axis + 1..].iter().product();
        let r = sizes[axis];
        let probs = dists[axis].probs();
        for base in 0..t.len() {
            if (base / stride) % r != 0 {
                continue;
            }
            let mut mean = Q::from_int(0);
            for (a, p) in probs.iter().enumerate() {
                mean += &(p.clone() * t[base + a * stride].clone());
            }
            for a in 0..r {
                t[base + a * stride] -= &mean;
            }
        }
    }
    t
}

/// Averages a table over `r^p` under all permutations of its axes.
pub fn symmetrize(table: &[Q], r: usize, p: usize) -> Vec<Q> {
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..p {
        let mut next = Vec::new();
        for perm in &perms {
            for a in 0..p {
                if !perm.contains(&a) {
                    let mut q = perm.clone();
                    q.push(a);
                    next.push(q);
                }
            }
        }
        perms = next;
    }
    let count = Q::from_int(perms.len() as i64);
    let mut out = vec![Q::from_int(0); table.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let digits: Vec<usize> = (0..p).map(|k| (idx / r.pow((p - 1 - k) as u32)) % r).collect();
        for perm in &perms {
            let src = perm.iter().fold(0, |acc, &k| acc * r + digits[k]);
            *o += &table[src];
        }
        *o = o.clone() / count.clone();
    }
    out
}

fn random_table(rng: &mut ChaCha8Rng, dists: &[&FiniteDistribution<Q>]) -> Vec<Q> {
    let size: usize = dists.iter().map(|d| d.len()).product();
    let raw: Vec<Q> = (0..size).map(|_| Q::from_int(rng.random_range(-3i64..=3))).collect();
    canonical_projection(&raw, dists)
}

/// A random spec with independent (not necessarily identical) variables.
pub fn random_spec(rng: &mut ChaCha8Rng, n: usize, p: usize, supports: &[Support], style: KernelStyle) -> UStatisticSpec<Q> {
    let dists: Vec<FiniteDistribution<Q>> = (0..n).map(|_| supports.choose(rng).unwrap().distribution()).collect();
    let mut all = p_subsets(n, p);
    all.shuffle(rng);
    let keep = rng.random_range(1..=all.len().min(6));
    let mut kernels = KernelFamily::new(p);
    for subset in all.into_iter().take(keep) {
        let kernel = match style {
            KernelStyle::Product => Kernel::Product(small_rational(rng)),
            KernelStyle::CanonicalTable => {
                let ds: Vec<&FiniteDistribution<Q>> = subset.indices().iter().map(|&j| &dists[j]).collect();
                let t = random_table(rng, &ds);
                if t.iter().all(|v| v.is_negligible()) {
                    Kernel::Product(Q::from_int(1))
                } else {
                    Kernel::Table(t)
                }
            }
        };
        kernels.entries.insert(subset, kernel);
    }
    UStatisticSpec {
        n,
        variables: dists.into_iter().map(Variable::Finite).collect(),
        kernels,
        symmetric: false,
    }
}

/// i.i.d. variables and one symmetric canonical kernel on every `p`-subset.
pub fn random_symmetric_spec(rng: &mut ChaCha8Rng, n: usize, p: usize, support: Support) -> UStatisticSpec<Q> {
    let d = support.distribution();
    let r = d.len();
    let kernel = loop {
        let ds = vec![&d; p];
        let t = symmetrize(&random_table(rng, &ds), r, p);
        if !t.iter().all(|v| v.is_negligible()) {
            break Kernel::Table(t);
        }
    };
    let mut kernels = KernelFamily::new(p);
    for s in p_subsets(n, p) {
        kernels.entries.insert(s, kernel.clone());
    }
    UStatisticSpec {
        n,
        variables: vec![Variable::Finite(d); n],
        kernels,
        symmetric: true,
    }
}

/// The randomized battery: `count` specs with `n <= 8`, `p <= 3`, at most
/// `max_outcomes` outcomes each. Every third spec is symmetric.
pub fn battery(seed: u64, count: usize, max_outcomes: usize) -> Vec<BatteryCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let k = out.len();
        let symmetric = k % 3 == 2;
        let support = if symmetric || k % 2 == 0 {
            vec![*Support::ALL.choose(&mut rng).unwrap()]
        } else {
            Support::ALL.to_vec()
        };
        let three = support.iter().any(|s| *s != Support::Rademacher);
        let n_max = if three { 6 } else { 8 };
        let n = rng.random_range(2..=n_max);
        let p = rng.random_range(1..=3.min(n));
        let radix: usize = if three { 3 } else { 2 };
        if radix.pow(n as u32) > max_outcomes {
            continue;
        }
        let (label, spec) = if symmetric {
            (
                format!("sym-{:?}-n{n}-p{p}", support[0]),
                random_symmetric_spec(&mut rng, n, p, support[0]),
            )
        } else {
            let style = if rng.random_bool(0.5) {
                KernelStyle::Product
            } else {
                KernelStyle::CanonicalTable
            };
            (format!("{style:?}-n{n}-p{p}"), random_spec(&mut rng, n, p, &support, style))
        };
        out.push(BatteryCase {
            label: format!("{k}:{label}"),
            spec,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Limits, OutcomeSpace};
    use crate::hoeffding::check_degeneracy;
    use crate::model::{table_is_symmetric, validate_spec};

    #[test]
    fn battery_specs_are_valid_and_degenerate() {
        for case in battery(1, 30, 1 << 10) {
            assert!(validate_spec(&case.spec).is_empty(), "{}", case.label);
            let space = OutcomeSpace::for_spec(&case.spec, Limits::default()).unwrap();
            assert!(check_degeneracy(&space, &case.spec).unwrap().degenerate, "{}", case.label);
        }
    }

    #[test]
    fn symmetrized_tables_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Support::SkewedThreePoint.distribution();
        let t = symmetrize(&random_table(&mut rng, &[&d, &d, &d]), 3, 3);
        assert!(table_is_symmetric(&t, 3, 3));
    }

    #[test]
    fn deterministic() {
        assert_eq!(battery(9, 10, 1 << 10), battery(9, 10, 1 << 10));
    }
}
