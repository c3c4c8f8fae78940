//! Exhaustive enumeration of finite product spaces.
//!
//! Outcomes are indexed in mixed radix over the support sizes, row-major
//! (variable `n` varies fastest). Tables over a subset `L` of the variables use
//! the same convention restricted to the coordinates of `L`.

use std::collections::BTreeMap;

use crate::model::{FiniteDistribution, Subset, UStatisticSpec};
use crate::scalar::Scalar;
use crate::model::{validate_spec, Violation};

/// Default cap on materialized table entries.
pub const DEFAULT_MAX_OUTCOMES: usize = 1 << 24;

/// Largest variable count for which subsets are handled as bitmasks.
pub const MAX_SUBSET_VARIABLES: usize = 24;

pub const MAX_OUTCOMES_ENV: &str = "DEJONG_MAX_OUTCOMES";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("space needs {required} table entries, limit is {limit}")]
    SpaceTooLarge { required: u128, limit: usize },
    #[error("{n} variables exceed the subset budget of {MAX_SUBSET_VARIABLES}")]
    SubsetBudgetExceeded { n: usize },
    #[error("variable {} has no finite support", .var + 1)]
    NotFinite { var: usize },
    #[error("invalid spec: {}", display_violations(.0))]
    InvalidSpec(Vec<Violation>),
    #[error("moment order {0} is outside 1..=8")]
    InvalidMomentOrder(u32),
}

fn display_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_outcomes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_outcomes: DEFAULT_MAX_OUTCOMES,
        }
    }
}

impl Limits {
    /// Default limits, overridden by `DEJONG_MAX_OUTCOMES` when set.
    pub fn from_env() -> Self {
        let max_outcomes = std::env::var(MAX_OUTCOMES_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_OUTCOMES);
        Limits { max_outcomes }
    }

    pub fn check(&self, required: u128) -> Result<(), EngineError> {
        if required > self.max_outcomes as u128 {
            Err(EngineError::SpaceTooLarge {
                required,
                limit: self.max_outcomes,
            })
        } else {
            Ok(())
        }
    }
}

/// Weighted enumeration of `prod_i E_i`.
#[derive(Clone, Debug)]
pub struct OutcomeSpace<S> {
    values: Vec<Vec<S>>,
    probs: Vec<Vec<S>>,
    radices: Vec<usize>,
    strides: Vec<usize>,
    weights: Vec<S>,
    limits: Limits,
}

impl<S: Scalar> OutcomeSpace<S> {
    pub fn new(dists: &[&FiniteDistribution<S>], limits: Limits) -> Result<Self, EngineError> {
        let radices: Vec<usize> = dists.iter().map(|d| d.len()).collect();
        let required = radices.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
        limits.check(required)?;
        let n = radices.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * radices[i + 1];
        }
        let probs: Vec<Vec<S>> = dists.iter().map(|d| d.probs()).collect();
        let mut weights = vec![S::one()];
        for pr in &probs {
            let mut next = Vec::with_capacity(weights.len() * pr.len());
            for w in &weights {
                for p in pr {
                    next.push(w.clone() * p.clone());
                }
            }
            weights = next;
        }
        Ok(OutcomeSpace {
            values: dists.iter().map(|d| d.values()).collect(),
            probs,
            radices,
            strides,
            weights,
            limits,
        })
    }

    /// Space of a validated finite spec.
    pub fn for_spec(spec: &UStatisticSpec<S>, limits: Limits) -> Result<Self, EngineError> {
        let violations = validate_spec(spec);
        if !violations.is_empty() {
            return Err(EngineError::InvalidSpec(violations));
        }
        let dists = spec.finite_variables().map_err(|var| EngineError::NotFinite { var })?;
        Self::new(&dists, limits)
    }

    pub fn n(&self) -> usize {
        self.radices.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn values(&self, i: usize) -> &[S] {
        &self.values[i]
    }

    pub fn probs(&self, i: usize) -> &[S] {
        &self.probs[i]
    }

    pub fn digit(&self, idx: usize, i: usize) -> usize {
        idx / self.strides[i] % self.radices[i]
    }

    pub fn digits(&self, idx: usize) -> Vec<usize> {
        (0..self.n()).map(|i| self.digit(idx, i)).collect()
    }

    /// Index of the outcome with coordinate `i` replaced by atom `a`.
    pub fn replaced(&self, idx: usize, i: usize, a: usize) -> usize {
        idx - self.digit(idx, i) * self.strides[i] + a * self.strides[i]
    }

    /// Visits every outcome with its atom indices.
    pub fn for_each_outcome(&self, mut f: impl FnMut(usize, &[usize])) {
        let n = self.n();
        let mut digits = vec![0usize; n];
        for idx in 0..self.len() {
            f(idx, &digits);
            for k in (0..n).rev() {
                digits[k] += 1;
                if digits[k] < self.radices[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    pub fn tabulate(&self, mut f: impl FnMut(&[usize]) -> S) -> Vec<S> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_outcome(|_, d| out.push(f(d)));
        out
    }

    /// `sum_outcomes weight * table`.
    pub fn expectation(&self, table: &[S]) -> S {
        let mut acc = S::zero();
        for (w, v) in self.weights.iter().zip(table) {
            acc += &(w.clone() * v.clone());
        }
        acc
    }

    pub fn expect(&self, f: impl FnMut(&[usize]) -> S) -> S {
        self.expectation(&self.tabulate(f))
    }

    /// `E[f | X_i, i in cond]` as a row-major table over the supports of `cond`.
    pub fn conditional_expectation(&self, table: &[S], cond: &Subset) -> Vec<S> {
        let mut data = table.to_vec();
        let mut shape = self.radices.clone();
        for k in (0..self.n()).rev() {
            if cond.contains(k) {
                continue;
            }
            data = marginalize(&data, &shape, k, &self.probs[k]);
            shape.remove(k);
        }
        data
    }

    /// Lifts a table over the supports of `subset` to a table over all outcomes.
    pub fn broadcast(&self, subset: &Subset, table: &[S]) -> Vec<S> {
        let idx = subset.indices();
        let mut out = Vec::with_capacity(self.len());
        self.for_each_outcome(|_, d| {
            let mut local = 0;
            for &j in idx {
                local = local * self.radices[j] + d[j];
            }
            out.push(table[local].clone());
        });
        out
    }

    /// Table of `W` over all outcomes.
    pub fn statistic_table(&self, spec: &UStatisticSpec<S>) -> Vec<S> {
        let mut out = vec![S::zero(); self.len()];
        for (subset, kernel) in &spec.kernels.entries {
            let local = spec.kernel_table(subset, kernel);
            let idx = subset.indices();
            self.for_each_outcome(|o, d| {
                let mut k = 0;
                for &j in idx {
                    k = k * self.radices[j] + d[j];
                }
                out[o] += &local[k];
            });
        }
        out
    }

    /// Law of `table` under the product measure: sorted `(value, probability)`
    /// pairs, grouped by [`Scalar::key`].
    pub fn pushforward(&self, table: &[S]) -> Vec<(S, S)> {
        let mut groups: BTreeMap<S::Key, (S, S)> = BTreeMap::new();
        for (w, v) in self.weights.iter().zip(table) {
            let e = groups.entry(v.key()).or_insert_with(|| (v.clone(), S::zero()));
            e.1 += w;
        }
        groups.into_values().collect()
    }
}

/// Integrates out axis `k` of a row-major array.
pub(crate) fn marginalize<S: Scalar>(data: &[S], shape: &[usize], k: usize, probs: &[S]) -> Vec<S> {
    let r = shape[k];
    let inner: usize = shape[k + 1..].iter().product();
    let outer: usize = shape[..k].iter().product();
    let mut out = vec![S::zero(); outer * inner];
    for o in 0..outer {
        for (a, p) in probs.iter().enumerate().take(r) {
            let base = (o * r + a) * inner;
            for i in 0..inner {
                out[o * inner + i] += &(p.clone() * data[base + i].clone());
            }
        }
    }
    out
}

/// `E[W^k]` for `k` in `1..=8`.
pub fn moment<S: Scalar>(space: &OutcomeSpace<S>, table: &[S], k: u32) -> Result<S, EngineError> {
    if !(1..=8).contains(&k) {
        return Err(EngineError::InvalidMomentOrder(k));
    }
    let mut acc = S::zero();
    for (w, v) in space.weights().iter().zip(table) {
        acc += &(w.clone() * v.powi(k));
    }
    Ok(acc)
}

/// `E[f]` over the outcome space of `spec`'s variables.
pub fn expectation<S: Scalar>(space: &OutcomeSpace<S>, f: impl FnMut(&[usize]) -> S) -> S {
    space.expect(f)
}

/// Exact law of a first-order statistic `W = sum_i psi_i(X_i)` by
/// convolution, avoiding enumeration of the full product space.
pub fn linear_law<S: Scalar>(spec: &UStatisticSpec<S>, limits: Limits) -> Result<Vec<(S, S)>, EngineError> {
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        return Err(EngineError::InvalidSpec(violations));
    }
    let dists = spec.finite_variables().map_err(|var| EngineError::NotFinite { var })?;
    let mut per_var: Vec<Option<Vec<S>>> = vec![None; spec.n];
    for (subset, kernel) in &spec.kernels.entries {
        if subset.len() != 1 {
            return Err(EngineError::InvalidSpec(vec![Violation::SubsetSize {
                subset: subset.to_string(),
                expected: 1,
                found: subset.len(),
            }]));
        }
        let t = spec.kernel_table(subset, kernel);
        per_var[subset.indices()[0]] = Some(t);
    }
    let mut law: BTreeMap<S::Key, (S, S)> = BTreeMap::new();
    law.insert(S::zero().key(), (S::zero(), S::one()));
    for (i, d) in dists.iter().enumerate() {
        let Some(vals) = &per_var[i] else { continue };
        let mut next: BTreeMap<S::Key, (S, S)> = BTreeMap::new();
        for (v, p) in law.values() {
            for (a, atom) in d.atoms.iter().enumerate() {
                let nv = v.clone() + vals[a].clone();
                let e = next.entry(nv.key()).or_insert_with(|| (nv, S::zero()));
                e.1 += &(p.clone() * atom.prob.clone());
            }
        }
        limits.check(next.len() as u128)?;
        law = next;
    }
    Ok(law.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_homogeneous_sum, FiniteDistribution};
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn rad_space(n: usize) -> OutcomeSpace<Q> {
        let d = FiniteDistribution::rademacher();
        let ds = vec![&d; n];
        OutcomeSpace::new(&ds, Limits::default()).unwrap()
    }

    fn val(space: &OutcomeSpace<Q>, d: &[usize], i: usize) -> Q {
        space.values(i)[d[i]].clone()
    }

    #[test]
    fn expectation_examples() {
        let s2 = rad_space(2);
        assert_eq!(s2.expect(|d| val(&s2, d, 0)), q(0, 1));
        assert_eq!(s2.expect(|d| (val(&s2, d, 0) * val(&s2, d, 1)).square()), q(1, 1));
        let s4 = rad_space(4);
        let w = s4.tabulate(|d| (0..4).map(|i| val(&s4, d, i)).fold(q(0, 1), |a, b| a + b) * q(1, 2));
        assert_eq!(moment(&s4, &w, 4).unwrap(), q(5, 2));
        assert_eq!(moment(&s4, &w, 2).unwrap(), q(1, 1));
        assert!(matches!(moment(&s4, &w, 9), Err(EngineError::InvalidMomentOrder(9))));
    }

    #[test]
    fn weights_sum_to_one() {
        let a = FiniteDistribution::<Q>::skewed_three_point();
        let b = FiniteDistribution::rademacher();
        let space = OutcomeSpace::new(&[&a, &b, &a], Limits::default()).unwrap();
        assert_eq!(space.len(), 18);
        assert_eq!(space.weights().iter().fold(q(0, 1), |acc, w| acc + w), q(1, 1));
    }

    #[test]
    fn conditional_expectation_examples() {
        let s = rad_space(2);
        let f = s.tabulate(|d| val(&s, d, 0) * val(&s, d, 1));
        let c1 = s.conditional_expectation(&f, &Subset::new(vec![0]));
        assert_eq!(c1, vec![q(0, 1), q(0, 1)]);
        let c12 = s.conditional_expectation(&f, &Subset::new(vec![0, 1]));
        assert_eq!(c12, f);
        let g = s.tabulate(|d| val(&s, d, 0) + val(&s, d, 0) * val(&s, d, 1));
        let c = s.conditional_expectation(&g, &Subset::new(vec![0]));
        assert_eq!(c, vec![q(-1, 1), q(1, 1)]);
        let empty = s.conditional_expectation(&g, &Subset::default());
        assert_eq!(empty, vec![s.expectation(&g)]);
    }

    #[test]
    fn conditional_on_middle_coordinate() {
        let a = FiniteDistribution::<Q>::skewed_three_point();
        let b = FiniteDistribution::rademacher();
        let space = OutcomeSpace::new(&[&b, &a, &b], Limits::default()).unwrap();
        // f = X2 + X1 X3 + X2 X3 -> E[f | X2] = X2
        let f = space.tabulate(|d| {
            let x = |i| space.values(i)[d[i]].clone();
            x(1) + x(0) * x(2) + x(1) * x(2)
        });
        let c = space.conditional_expectation(&f, &Subset::new(vec![1]));
        assert_eq!(c, vec![q(-1, 1), q(0, 1), q(2, 1)]);
        let back = space.broadcast(&Subset::new(vec![1]), &c);
        assert_eq!(back[space.replaced(0, 1, 2)], q(2, 1));
    }

    #[test]
    fn guard_rejects_large_spaces() {
        let d = FiniteDistribution::<f64>::rademacher();
        let ds = vec![&d; 30];
        let err = OutcomeSpace::new(&ds, Limits::default()).unwrap_err();
        assert!(matches!(err, EngineError::SpaceTooLarge { .. }));
        let small = Limits { max_outcomes: 8 };
        assert!(OutcomeSpace::new(&vec![&d; 4], small).is_err());
        assert!(OutcomeSpace::new(&vec![&d; 3], small).is_ok());
    }

    #[test]
    fn sampler_variables_rejected() {
        use crate::model::{homogeneous_sum, SamplerKind, Variable};
        let spec = homogeneous_sum(
            vec![(Subset::new(vec![0]), 1.0)],
            vec![Variable::Sampler(SamplerKind::Normal)],
        )
        .unwrap();
        assert!(matches!(
            OutcomeSpace::for_spec(&spec, Limits::default()),
            Err(EngineError::NotFinite { var: 0 })
        ));
    }

    #[test]
    fn linear_law_matches_enumeration() {
        let coeffs = (0..5).map(|i| (Subset::new(vec![i]), q(i as i64 + 1, 3))).collect();
        let mut vars = vec![FiniteDistribution::rademacher(); 5];
        vars[2] = FiniteDistribution::skewed_three_point();
        let spec = build_homogeneous_sum(coeffs, vars).unwrap();
        let space = OutcomeSpace::for_spec(&spec, Limits::default()).unwrap();
        let w = space.statistic_table(&spec);
        assert_eq!(linear_law(&spec, Limits::default()).unwrap(), space.pushforward(&w));
    }
}
