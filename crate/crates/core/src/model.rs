//! Degenerate U-statistic specifications over independent variables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::{Mode, Scalar, NUM_EPS};

/// A subset of variable indices, stored 0-based and strictly ascending.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Subset(Vec<usize>);

impl Subset {
    /// Builds from arbitrary indices; sorts and deduplicates.
    pub fn new(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        Subset(idx)
    }

    /// Builds from 1-based indices as they appear in spec documents.
    pub fn from_one_based(idx: &[usize]) -> Option<Self> {
        if idx.iter().any(|&i| i == 0) {
            return None;
        }
        Some(Subset::new(idx.iter().map(|i| i - 1).collect()))
    }

    pub fn from_mask(mask: u32) -> Self {
        Subset((0..32).filter(|b| mask >> b & 1 == 1).collect())
    }

    pub fn mask(&self) -> u32 {
        self.0.iter().fold(0, |m, &i| m | 1 << i)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom<S> {
    pub value: S,
    pub prob: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution<S> {
    pub atoms: Vec<Atom<S>>,
}

impl<S: Scalar> FiniteDistribution<S> {
    pub fn new(atoms: Vec<(S, S)>) -> Self {
        FiniteDistribution {
            atoms: atoms.into_iter().map(|(value, prob)| Atom { value, prob }).collect(),
        }
    }

    /// Symmetric ±1 variable.
    pub fn rademacher() -> Self {
        let half = S::from_ratio(1, 2);
        Self::new(vec![(S::from_int(-1), half.clone()), (S::from_int(1), half)])
    }

    /// Skewed centered unit-variance law on {-1, 0, 2} with masses 1/3, 1/2, 1/6.
    pub fn skewed_three_point() -> Self {
        Self::new(vec![
            (S::from_int(-1), S::from_ratio(1, 3)),
            (S::zero(), S::from_ratio(1, 2)),
            (S::from_int(2), S::from_ratio(1, 6)),
        ])
    }

    /// Symmetric centered unit-variance law on {-2, 0, 2} with masses 1/8, 3/4, 1/8.
    pub fn symmetric_three_point() -> Self {
        Self::new(vec![
            (S::from_int(-2), S::from_ratio(1, 8)),
            (S::zero(), S::from_ratio(3, 4)),
            (S::from_int(2), S::from_ratio(1, 8)),
        ])
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn values(&self) -> Vec<S> {
        self.atoms.iter().map(|a| a.value.clone()).collect()
    }

    pub fn probs(&self) -> Vec<S> {
        self.atoms.iter().map(|a| a.prob.clone()).collect()
    }

    pub fn moment(&self, k: u32) -> S {
        let mut acc = S::zero();
        for a in &self.atoms {
            acc += &(a.prob.clone() * a.value.powi(k));
        }
        acc
    }

    pub fn mean(&self) -> S {
        self.moment(1)
    }

    pub fn variance(&self) -> S {
        let m = self.mean();
        self.moment(2) - m.square()
    }
}

/// Named samplers for variables without finite support. All are centered with
/// unit variance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// N(0, 1).
    Normal,
    /// Uniform on [-sqrt(3), sqrt(3)].
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Variable<S> {
    Finite(FiniteDistribution<S>),
    Sampler(SamplerKind),
}

impl<S> Variable<S> {
    pub fn as_finite(&self) -> Option<&FiniteDistribution<S>> {
        match self {
            Variable::Finite(d) => Some(d),
            Variable::Sampler(_) => None,
        }
    }
}

/// Kernel evaluator for one subset.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel<S> {
    /// `(x_j)_{j in J} -> a * prod x_j`.
    Product(S),
    /// Row-major value table over the supports of `J` in ascending order
    /// (the last coordinate varies fastest).
    Table(Vec<S>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelFamily<S> {
    pub order: usize,
    pub entries: BTreeMap<Subset, Kernel<S>>,
}

impl<S> KernelFamily<S> {
    pub fn new(order: usize) -> Self {
        KernelFamily {
            order,
            entries: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `W = sum_J psi_J(X_i, i in J)` over `n` independent variables.
#[derive(Clone, Debug, PartialEq)]
pub struct UStatisticSpec<S> {
    pub n: usize,
    pub variables: Vec<Variable<S>>,
    pub kernels: KernelFamily<S>,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("variable {} is not centered", .index + 1)]
    NonCentered { index: usize },
    #[error("variable {} does not have unit variance", .index + 1)]
    NonUnitVariance { index: usize },
    #[error("coefficient subsets have unequal sizes")]
    MixedOrder,
    #[error("no coefficients given")]
    Empty,
    #[error("subset {subset} refers to a variable outside 1..={n}")]
    SubsetOutOfRange { subset: String, n: usize },
}

/// Structural defect found by [`validate_spec`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("order p must be positive")]
    ZeroOrder,
    #[error("order {p} exceeds variable count {n}")]
    OrderExceedsN { p: usize, n: usize },
    #[error("expected {expected} variables, found {found}")]
    VariableCountMismatch { expected: usize, found: usize },
    #[error("variable {} has empty support", .var + 1)]
    EmptySupport { var: usize },
    #[error("variable {} atom {} has a non-positive probability", .var + 1, .atom + 1)]
    InvalidProbability { var: usize, atom: usize },
    #[error("probabilities of variable {} do not sum to one", .var + 1)]
    ProbabilitySum { var: usize },
    #[error("variable {} has repeated atom values", .var + 1)]
    DuplicateAtom { var: usize },
    #[error("kernel subset {subset} has size {found}, expected {expected}")]
    SubsetSize { subset: String, expected: usize, found: usize },
    #[error("kernel subset {subset} refers to a variable outside 1..={n}")]
    SubsetOutOfRange { subset: String, n: usize },
    #[error("kernel table for {subset} has {found} entries, expected {expected}")]
    TableSize { subset: String, expected: usize, found: usize },
    #[error("kernel table for {subset} needs a finite support for variable {}", .var + 1)]
    TableOnSampler { subset: String, var: usize },
    #[error("declared symmetric but {reason}")]
    NotSymmetric { reason: String },
}

impl<S: Scalar> UStatisticSpec<S> {
    pub fn p(&self) -> usize {
        self.kernels.order
    }

    pub fn mode(&self) -> Mode {
        S::MODE
    }

    pub fn is_finite(&self) -> bool {
        self.variables.iter().all(|v| matches!(v, Variable::Finite(_)))
    }

    /// Finite distributions of all variables, or the index of the first
    /// sampler-only variable.
    pub fn finite_variables(&self) -> Result<Vec<&FiniteDistribution<S>>, usize> {
        self.variables
            .iter()
            .enumerate()
            .map(|(i, v)| v.as_finite().ok_or(i))
            .collect()
    }

    pub fn support_sizes(&self) -> Vec<usize> {
        self.variables
            .iter()
            .map(|v| v.as_finite().map_or(0, |d| d.len()))
            .collect()
    }

    /// Evaluates `psi_J` at atom indices `digits` (one per variable, all `n`).
    pub fn kernel_at(&self, subset: &Subset, kernel: &Kernel<S>, digits: &[usize]) -> S {
        match kernel {
            Kernel::Product(a) => {
                let mut acc = a.clone();
                for &j in subset.indices() {
                    let d = self.variables[j].as_finite().expect("finite variable");
                    acc *= &d.atoms[digits[j]].value;
                }
                acc
            }
            Kernel::Table(t) => {
                let mut idx = 0;
                for &j in subset.indices() {
                    idx = idx * self.variables[j].as_finite().map_or(0, |d| d.len()) + digits[j];
                }
                t[idx].clone()
            }
        }
    }

    /// `W` at the outcome with the given atom indices.
    pub fn evaluate(&self, digits: &[usize]) -> S {
        let mut acc = S::zero();
        for (subset, kernel) in &self.kernels.entries {
            acc += &self.kernel_at(subset, kernel, digits);
        }
        acc
    }

    /// Converts every kernel to explicit table form.
    pub fn kernel_table(&self, subset: &Subset, kernel: &Kernel<S>) -> Vec<S> {
        match kernel {
            Kernel::Table(t) => t.clone(),
            Kernel::Product(_) => {
                let sizes: Vec<usize> = subset
                    .indices()
                    .iter()
                    .map(|&j| self.variables[j].as_finite().map_or(0, |d| d.len()))
                    .collect();
                let total: usize = sizes.iter().product();
                let mut digits = vec![0usize; self.n];
                let mut out = Vec::with_capacity(total);
                let mut local = vec![0usize; sizes.len()];
                for _ in 0..total {
                    for (k, &j) in subset.indices().iter().enumerate() {
                        digits[j] = local[k];
                    }
                    out.push(self.kernel_at(subset, kernel, &digits));
                    for k in (0..sizes.len()).rev() {
                        local[k] += 1;
                        if local[k] < sizes[k] {
                            break;
                        }
                        local[k] = 0;
                    }
                }
                out
            }
        }
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> UStatisticSpec<T> {
        let variables = self
            .variables
            .iter()
            .map(|v| match v {
                Variable::Finite(d) => Variable::Finite(FiniteDistribution {
                    atoms: d
                        .atoms
                        .iter()
                        .map(|a| Atom {
                            value: f(&a.value),
                            prob: f(&a.prob),
                        })
                        .collect(),
                }),
                Variable::Sampler(k) => Variable::Sampler(*k),
            })
            .collect();
        let entries = self
            .kernels
            .entries
            .iter()
            .map(|(s, k)| {
                let k = match k {
                    Kernel::Product(a) => Kernel::Product(f(a)),
                    Kernel::Table(t) => Kernel::Table(t.iter().map(&f).collect()),
                };
                (s.clone(), k)
            })
            .collect();
        UStatisticSpec {
            n: self.n,
            variables,
            kernels: KernelFamily {
                order: self.kernels.order,
                entries,
            },
            symmetric: self.symmetric,
        }
    }

    pub fn to_real(&self) -> UStatisticSpec<f64> {
        self.map_scalars(|s| s.to_f64())
    }

    /// Multiplies every kernel by `c`.
    pub fn scaled(&self, c: &S) -> Self {
        let mut out = self.clone();
        for k in out.kernels.entries.values_mut() {
            match k {
                Kernel::Product(a) => *a *= c,
                Kernel::Table(t) => t.iter_mut().for_each(|v| *v *= c),
            }
        }
        out
    }

    pub fn with_symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }
}

/// `Y = sum_J a_J prod_{i in J} Y_i` over centered unit-variance variables.
pub fn build_homogeneous_sum<S: Scalar>(
    coeffs: Vec<(Subset, S)>,
    variables: Vec<FiniteDistribution<S>>,
) -> Result<UStatisticSpec<S>, ModelError> {
    for (index, d) in variables.iter().enumerate() {
        if !d.mean().is_negligible() {
            return Err(ModelError::NonCentered { index });
        }
        if !(d.variance() - S::one()).is_negligible() {
            return Err(ModelError::NonUnitVariance { index });
        }
    }
    homogeneous_sum(coeffs, variables.into_iter().map(Variable::Finite).collect())
}

/// Homogeneous sum over arbitrary (possibly sampler-only) variables; moment
/// conditions are only checked for finite supports by [`build_homogeneous_sum`].
pub fn homogeneous_sum<S: Scalar>(
    coeffs: Vec<(Subset, S)>,
    variables: Vec<Variable<S>>,
) -> Result<UStatisticSpec<S>, ModelError> {
    let order = coeffs.first().map(|(s, _)| s.len()).ok_or(ModelError::Empty)?;
    if coeffs.iter().any(|(s, _)| s.len() != order) {
        return Err(ModelError::MixedOrder);
    }
    let n = variables.len();
    let mut kernels = KernelFamily::new(order);
    for (s, a) in coeffs {
        if s.indices().iter().any(|&i| i >= n) {
            return Err(ModelError::SubsetOutOfRange {
                subset: s.to_string(),
                n,
            });
        }
        kernels.entries.insert(s, Kernel::Product(a));
    }
    Ok(UStatisticSpec {
        n,
        variables,
        kernels,
        symmetric: false,
    })
}

/// All `p`-subsets of `0..n` in lexicographic order.
pub fn p_subsets(n: usize, p: usize) -> Vec<Subset> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(p);
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Subset>) {
        if cur.len() == p {
            out.push(Subset(cur.clone()));
            return;
        }
        for i in start..n {
            if n - i < p - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    rec(0, n, p, &mut cur, &mut out);
    out
}

/// Symmetric homogeneous sum: i.i.d. variables and coefficient `a` on every
/// `p`-subset.
pub fn symmetric_homogeneous_sum<S: Scalar>(
    n: usize,
    p: usize,
    a: S,
    dist: FiniteDistribution<S>,
) -> Result<UStatisticSpec<S>, ModelError> {
    let coeffs = p_subsets(n, p).into_iter().map(|s| (s, a.clone())).collect();
    Ok(build_homogeneous_sum(coeffs, vec![dist; n])?.with_symmetric(true))
}

/// Symmetric U-statistic with one table kernel on every `p`-subset.
pub fn symmetric_table_statistic<S: Scalar>(
    n: usize,
    p: usize,
    table: Vec<S>,
    dist: FiniteDistribution<S>,
) -> UStatisticSpec<S> {
    let mut kernels = KernelFamily::new(p);
    for s in p_subsets(n, p) {
        kernels.entries.insert(s, Kernel::Table(table.clone()));
    }
    UStatisticSpec {
        n,
        variables: vec![Variable::Finite(dist); n],
        kernels,
        symmetric: true,
    }
}

/// Structural checks; degeneracy is left to the exact engine.
pub fn validate_spec<S: Scalar>(spec: &UStatisticSpec<S>) -> Vec<Violation> {
    let mut out = Vec::new();
    let p = spec.p();
    let n = spec.n;
    if p == 0 {
        out.push(Violation::ZeroOrder);
    }
    if p > n {
        out.push(Violation::OrderExceedsN { p, n });
    }
    if spec.variables.len() != n {
        out.push(Violation::VariableCountMismatch {
            expected: n,
            found: spec.variables.len(),
        });
    }
    for (var, v) in spec.variables.iter().enumerate() {
        let Variable::Finite(d) = v else { continue };
        if d.is_empty() {
            out.push(Violation::EmptySupport { var });
            continue;
        }
        let mut total = S::zero();
        for (atom, a) in d.atoms.iter().enumerate() {
            if a.prob <= S::zero() {
                out.push(Violation::InvalidProbability { var, atom });
            }
            total += &a.prob;
        }
        let sum_ok = match S::MODE {
            Mode::Rational => total == S::one(),
            Mode::Real => (total.to_f64() - 1.0).abs() <= NUM_EPS,
        };
        if !sum_ok {
            out.push(Violation::ProbabilitySum { var });
        }
        let vals = d.values();
        let dup = (0..vals.len()).any(|i| (i + 1..vals.len()).any(|j| vals[i] == vals[j]));
        if dup {
            out.push(Violation::DuplicateAtom { var });
        }
    }
    let nvars = spec.variables.len();
    for (subset, kernel) in &spec.kernels.entries {
        if subset.len() != p {
            out.push(Violation::SubsetSize {
                subset: subset.to_string(),
                expected: p,
                found: subset.len(),
            });
        }
        if subset.indices().iter().any(|&i| i >= n || i >= nvars) {
            out.push(Violation::SubsetOutOfRange {
                subset: subset.to_string(),
                n,
            });
            continue;
        }
        if let Kernel::Table(t) = kernel {
            let mut expected = 1usize;
            for &j in subset.indices() {
                match &spec.variables[j] {
                    Variable::Finite(d) => expected = expected.saturating_mul(d.len()),
                    Variable::Sampler(_) => {
                        out.push(Violation::TableOnSampler {
                            subset: subset.to_string(),
                            var: j,
                        });
                        expected = 0;
                    }
                }
            }
            if expected != 0 && t.len() != expected {
                out.push(Violation::TableSize {
                    subset: subset.to_string(),
                    expected,
                    found: t.len(),
                });
            }
        }
    }
    if spec.symmetric && out.is_empty() {
        if let Err(reason) = check_symmetric(spec) {
            out.push(Violation::NotSymmetric { reason });
        }
    }
    out
}

fn check_symmetric<S: Scalar>(spec: &UStatisticSpec<S>) -> Result<(), String> {
    let first = spec.variables.first().ok_or("no variables")?;
    if spec.variables.iter().any(|v| v != first) {
        return Err("variables are not identically distributed".into());
    }
    let expected = p_subsets(spec.n, spec.p());
    if spec.kernels.entries.len() != expected.len()
        || !expected.iter().all(|s| spec.kernels.entries.contains_key(s))
    {
        return Err("kernels do not cover every p-subset".into());
    }
    if let Variable::Sampler(_) = first {
        let mut coeffs = spec.kernels.entries.values();
        let a0 = coeffs.next();
        return if coeffs.all(|k| Some(k) == a0) {
            Ok(())
        } else {
            Err("kernels differ between subsets".into())
        };
    }
    let (s0, k0) = spec.kernels.entries.iter().next().ok_or("no kernels")?;
    let reference = spec.kernel_table(s0, k0);
    for (s, k) in &spec.kernels.entries {
        if spec.kernel_table(s, k) != reference {
            return Err(format!("kernel on {s} differs from kernel on {s0}"));
        }
    }
    let r = first.as_finite().map_or(0, |d| d.len());
    if !table_is_symmetric(&reference, r, spec.p()) {
        return Err("kernel is not a symmetric function".into());
    }
    Ok(())
}

/// Invariance of a row-major `r^p` table under adjacent transpositions.
pub fn table_is_symmetric<S: PartialEq>(table: &[S], r: usize, p: usize) -> bool {
    if p < 2 {
        return true;
    }
    let mut digits = vec![0usize; p];
    let encode = |d: &[usize]| d.iter().fold(0, |acc, &x| acc * r + x);
    for idx in 0..table.len() {
        let mut rem = idx;
        for k in (0..p).rev() {
            digits[k] = rem % r;
            rem /= r;
        }
        for k in 0..p - 1 {
            digits.swap(k, k + 1);
            let other = encode(&digits);
            digits.swap(k, k + 1);
            if table[other] != table[idx] {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn s(ix: &[usize]) -> Subset {
        Subset::from_one_based(ix).unwrap()
    }

    #[test]
    fn single_product_term() {
        let spec = build_homogeneous_sum(vec![(s(&[1, 2]), q(1, 1))], vec![FiniteDistribution::rademacher(); 2]).unwrap();
        assert_eq!(spec.p(), 2);
        assert_eq!(spec.n, 2);
        assert_eq!(spec.evaluate(&[0, 1]), q(-1, 1));
        assert_eq!(spec.evaluate(&[1, 1]), q(1, 1));
        assert!(validate_spec(&spec).is_empty());
    }

    #[test]
    fn linear_sum_variance_by_enumeration() {
        let coeffs = (1..=4).map(|i| (s(&[i]), q(1, 2))).collect();
        let spec = build_homogeneous_sum(coeffs, vec![FiniteDistribution::rademacher(); 4]).unwrap();
        let mut var = q(0, 1);
        for idx in 0..16usize {
            let digits: Vec<usize> = (0..4).map(|k| idx >> (3 - k) & 1).collect();
            var += spec.evaluate(&digits).square() * q(1, 16);
        }
        assert_eq!(var, q(1, 1));
    }

    #[test]
    fn rejects_bad_moments_and_mixed_order() {
        let shifted = FiniteDistribution::new(vec![(q(0, 1), q(1, 2)), (q(2, 1), q(1, 2))]);
        assert_eq!(
            build_homogeneous_sum(vec![(s(&[1]), q(1, 1))], vec![shifted]),
            Err(ModelError::NonCentered { index: 0 })
        );
        let wide = FiniteDistribution::new(vec![(q(-2, 1), q(1, 2)), (q(2, 1), q(1, 2))]);
        assert_eq!(
            build_homogeneous_sum(vec![(s(&[1]), q(1, 1))], vec![wide]),
            Err(ModelError::NonUnitVariance { index: 0 })
        );
        assert_eq!(
            build_homogeneous_sum(
                vec![(s(&[1]), q(1, 1)), (s(&[1, 2]), q(1, 1))],
                vec![FiniteDistribution::rademacher(); 2]
            ),
            Err(ModelError::MixedOrder)
        );
    }

    #[test]
    fn validation_examples() {
        let mut spec = build_homogeneous_sum(vec![(s(&[1, 2]), q(1, 1))], vec![FiniteDistribution::rademacher(); 2]).unwrap();
        assert!(validate_spec(&spec).is_empty());

        let mut too_high = spec.clone();
        too_high.kernels = KernelFamily::new(3);
        assert_eq!(validate_spec(&too_high), vec![Violation::OrderExceedsN { p: 3, n: 2 }]);

        spec.variables[0] = Variable::Finite(FiniteDistribution::new(vec![(q(-1, 1), q(-1, 10)), (q(1, 1), q(11, 10))]));
        assert_eq!(validate_spec(&spec), vec![Violation::InvalidProbability { var: 0, atom: 0 }]);
    }

    #[test]
    fn symmetric_declaration_is_checked() {
        let spec = symmetric_homogeneous_sum(4, 2, q(1, 1), FiniteDistribution::rademacher()).unwrap();
        assert!(validate_spec(&spec).is_empty());
        let mut broken = spec.clone();
        broken.kernels.entries.insert(s(&[1, 2]), Kernel::Product(q(2, 1)));
        assert!(matches!(validate_spec(&broken)[..], [Violation::NotSymmetric { .. }]));
        let mut missing = spec;
        missing.kernels.entries.remove(&s(&[3, 4]));
        assert!(matches!(validate_spec(&missing)[..], [Violation::NotSymmetric { .. }]));
    }

    #[test]
    fn symmetric_table_detection() {
        // psi(x, y) on a 2-point support: symmetric iff t[0][1] == t[1][0]
        assert!(table_is_symmetric(&[1, 2, 2, 3], 2, 2));
        assert!(!table_is_symmetric(&[1, 2, 5, 3], 2, 2));
    }

    #[test]
    fn p_subsets_enumeration() {
        let subs = p_subsets(4, 2);
        assert_eq!(subs.len(), 6);
        assert_eq!(subs[0], s(&[1, 2]));
        assert_eq!(subs[5], s(&[3, 4]));
        assert_eq!(p_subsets(3, 0), vec![Subset::default()]);
    }

    #[test]
    fn product_kernel_table_matches_evaluation() {
        let spec = build_homogeneous_sum(
            vec![(s(&[1, 3]), q(3, 1))],
            vec![FiniteDistribution::skewed_three_point(), FiniteDistribution::rademacher(), FiniteDistribution::rademacher()],
        )
        .unwrap();
        let (sub, k) = spec.kernels.entries.iter().next().unwrap();
        let t = spec.kernel_table(sub, k);
        assert_eq!(t.len(), 6);
        // x1 = 2 (atom 2), x3 = -1 (atom 0) -> 3 * 2 * -1
        assert_eq!(t[4], q(-6, 1));
    }
}
