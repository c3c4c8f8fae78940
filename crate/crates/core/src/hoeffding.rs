//! Hoeffding decompositions via subset zeta/Möbius sweeps.
//!
//! The extended array has radix `r_i + 1` per coordinate; digit `r_i` (the
//! "star" slot) marks a coordinate that has been integrated out. The zeta
//! sweep fills every slot so that the entry at `s` equals
//! `E[f | X_i = s_i for the unstarred i]`. The Möbius sweep then replaces each
//! unstarred slot `a` by `slot(a) - slot(star)` coordinate by coordinate, which
//! turns the entry with stars outside `J` into
//! `W_J = sum_{L ⊆ J} (-1)^{|J|-|L|} E[W | X_i, i in L]`.

use std::collections::BTreeMap;

use crate::engine::{EngineError, OutcomeSpace, MAX_SUBSET_VARIABLES};
use crate::model::{Subset, UStatisticSpec};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct ExtendedTable<S> {
    data: Vec<S>,
    radices: Vec<usize>,
    strides: Vec<usize>,
}

impl<S: Scalar> ExtendedTable<S> {
    fn shape_for(space: &OutcomeSpace<S>) -> Result<(Vec<usize>, Vec<usize>), EngineError> {
        let n = space.n();
        if n > MAX_SUBSET_VARIABLES {
            return Err(EngineError::SubsetBudgetExceeded { n });
        }
        let radices: Vec<usize> = space.radices().iter().map(|r| r + 1).collect();
        let required = radices.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
        space.limits().check(required)?;
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * radices[i + 1];
        }
        Ok((radices, strides))
    }

    /// Forward (zeta) sweep: all conditional expectations of `table` at once.
    pub fn zeta(space: &OutcomeSpace<S>, table: &[S]) -> Result<Self, EngineError> {
        let (radices, strides) = Self::shape_for(space)?;
        let total: usize = radices.iter().product();
        let mut data = vec![S::zero(); total];
        space.for_each_outcome(|idx, d| {
            let pos: usize = d.iter().zip(&strides).map(|(a, s)| a * s).sum();
            data[pos] = table[idx].clone();
        });
        let mut ext = ExtendedTable { data, radices, strides };
        for k in 0..space.n() {
            ext.sweep(k, |slots, star| {
                let mut acc = S::zero();
                for (v, p) in slots.iter().zip(space.probs(k)) {
                    acc += &(v.clone() * p.clone());
                }
                *star = acc;
            });
        }
        Ok(ext)
    }

    /// Möbius sweep: conditional expectations to Hoeffding components.
    pub fn mobius(mut self) -> Self {
        for k in 0..self.radices.len() {
            self.sweep(k, |slots, star| {
                for v in slots.iter_mut() {
                    *v -= star;
                }
            });
        }
        self
    }

    /// Inverse of [`ExtendedTable::mobius`].
    pub fn inverse_mobius(mut self) -> Self {
        for k in 0..self.radices.len() {
            self.sweep(k, |slots, star| {
                for v in slots.iter_mut() {
                    *v += star;
                }
            });
        }
        self
    }

    /// Applies `f(value_slots, star_slot)` along axis `k` for every fibre.
    fn sweep(&mut self, k: usize, mut f: impl FnMut(&mut [S], &mut S)) {
        let r = self.radices[k];
        let inner = self.strides[k];
        let outer = self.data.len() / (r * inner);
        let mut fibre: Vec<S> = Vec::with_capacity(r - 1);
        for o in 0..outer {
            for i in 0..inner {
                let base = o * r * inner + i;
                fibre.clear();
                fibre.extend((0..r - 1).map(|a| self.data[base + a * inner].clone()));
                let mut star = self.data[base + (r - 1) * inner].clone();
                f(&mut fibre, &mut star);
                for (a, v) in fibre.drain(..).enumerate() {
                    self.data[base + a * inner] = v;
                }
                self.data[base + (r - 1) * inner] = star;
            }
        }
    }

    /// Entries with stars outside `subset`, row-major over `subset`'s supports.
    pub fn slice(&self, subset: &Subset) -> Vec<S> {
        let n = self.radices.len();
        let mut base = 0;
        for i in 0..n {
            if !subset.contains(i) {
                base += (self.radices[i] - 1) * self.strides[i];
            }
        }
        let idx = subset.indices();
        let sizes: Vec<usize> = idx.iter().map(|&j| self.radices[j] - 1).collect();
        let total: usize = sizes.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut local = vec![0usize; idx.len()];
        for _ in 0..total {
            let pos = base + idx.iter().zip(&local).map(|(&j, a)| a * self.strides[j]).sum::<usize>();
            out.push(self.data[pos].clone());
            for k in (0..idx.len()).rev() {
                local[k] += 1;
                if local[k] < sizes[k] {
                    break;
                }
                local[k] = 0;
            }
        }
        out
    }

    /// Restriction to the unstarred positions (a table over all outcomes).
    pub fn full_slice(&self) -> Vec<S> {
        self.slice(&Subset::new((0..self.radices.len()).collect()))
    }
}

/// `W_J` with its value table over `prod_{j in J} E_j` and `sigma_J^2 = E[W_J^2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HoeffdingComponent<S> {
    pub subset: Subset,
    pub table: Vec<S>,
    pub sigma2: S,
}

/// All `2^n` Hoeffding components of a table.
#[derive(Clone, Debug)]
pub struct HoeffdingDecomposition<S> {
    ext: ExtendedTable<S>,
    n: usize,
}

impl<S: Scalar> HoeffdingDecomposition<S> {
    pub fn compute(space: &OutcomeSpace<S>, table: &[S]) -> Result<Self, EngineError> {
        let ext = ExtendedTable::zeta(space, table)?.mobius();
        Ok(HoeffdingDecomposition { ext, n: space.n() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn component_table(&self, subset: &Subset) -> Vec<S> {
        self.ext.slice(subset)
    }

    pub fn component(&self, space: &OutcomeSpace<S>, subset: &Subset) -> HoeffdingComponent<S> {
        let table = self.component_table(subset);
        let sigma2 = subset_second_moment(space, subset, &table);
        HoeffdingComponent {
            subset: subset.clone(),
            table,
            sigma2,
        }
    }

    /// Every component that is not identically zero, ordered by mask.
    pub fn components(&self, space: &OutcomeSpace<S>) -> Vec<HoeffdingComponent<S>> {
        let mut out = Vec::new();
        for mask in 0u32..(1u32 << self.n) {
            let subset = Subset::from_mask(mask);
            let table = self.component_table(&subset);
            if table.iter().all(|v| v.is_negligible()) {
                continue;
            }
            let sigma2 = subset_second_moment(space, &subset, &table);
            out.push(HoeffdingComponent { subset, table, sigma2 });
        }
        out
    }

    /// `sum_J W_J` as a table over all outcomes.
    pub fn reconstruct(&self, space: &OutcomeSpace<S>) -> Vec<S> {
        let mut out = vec![S::zero(); space.len()];
        for mask in 0u32..(1u32 << self.n) {
            let subset = Subset::from_mask(mask);
            let lifted = space.broadcast(&subset, &self.component_table(&subset));
            for (o, v) in out.iter_mut().zip(&lifted) {
                *o += v;
            }
        }
        out
    }
}

fn subset_second_moment<S: Scalar>(space: &OutcomeSpace<S>, subset: &Subset, table: &[S]) -> S {
    let idx = subset.indices();
    let sizes: Vec<usize> = idx.iter().map(|&j| space.radices()[j]).collect();
    let mut local = vec![0usize; idx.len()];
    let mut acc = S::zero();
    for v in table {
        let mut w = v.square();
        for (k, &j) in idx.iter().enumerate() {
            w *= &space.probs(j)[local[k]];
        }
        acc += &w;
        for k in (0..idx.len()).rev() {
            local[k] += 1;
            if local[k] < sizes[k] {
                break;
            }
            local[k] = 0;
        }
    }
    acc
}

/// Hoeffding decomposition of an arbitrary table; zero components are pruned.
pub fn hoeffding_decompose<S: Scalar>(
    space: &OutcomeSpace<S>,
    table: &[S],
) -> Result<Vec<HoeffdingComponent<S>>, EngineError> {
    Ok(HoeffdingDecomposition::compute(space, table)?.components(space))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyReport {
    pub degenerate: bool,
    /// Non-zero components whose size differs from the declared order.
    pub offenders: Vec<Subset>,
}

pub fn check_degeneracy<S: Scalar>(
    space: &OutcomeSpace<S>,
    spec: &UStatisticSpec<S>,
) -> Result<DegeneracyReport, EngineError> {
    let w = space.statistic_table(spec);
    let comps = hoeffding_decompose(space, &w)?;
    Ok(degeneracy_of(&comps, spec.p()))
}

pub fn degeneracy_of<S: Scalar>(components: &[HoeffdingComponent<S>], p: usize) -> DegeneracyReport {
    let offenders: Vec<Subset> = components
        .iter()
        .filter(|c| c.subset.len() != p)
        .map(|c| c.subset.clone())
        .collect();
    DegeneracyReport {
        degenerate: offenders.is_empty(),
        offenders,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceSummary<S> {
    pub sigma2: BTreeMap<Subset, S>,
    /// `sum_{J nonempty} sigma_J^2 = Var(W)`.
    pub variance: S,
}

pub fn component_variances<S: Scalar>(components: &[HoeffdingComponent<S>]) -> VarianceSummary<S> {
    let mut sigma2 = BTreeMap::new();
    let mut variance = S::zero();
    for c in components {
        if !c.subset.is_empty() {
            variance += &c.sigma2;
        }
        sigma2.insert(c.subset.clone(), c.sigma2.clone());
    }
    VarianceSummary { sigma2, variance }
}

/// `max_i sum_{J ∋ i} sigma_J^2`.
pub fn rho_squared<S: Scalar>(variances: &VarianceSummary<S>, n: usize) -> S {
    let mut influence = vec![S::zero(); n];
    for (subset, s2) in &variances.sigma2 {
        for &i in subset.indices() {
            if i < n {
                influence[i] += s2;
            }
        }
    }
    influence
        .into_iter()
        .fold(S::zero(), |m, v| if v > m { v } else { m })
}

/// Component variances of a product-kernel spec over centered variables,
/// where each term is already its own Hoeffding component:
/// `sigma_J^2 = a_J^2 prod_{i in J} Var(X_i)`. Returns `None` for table
/// kernels or sampler variables of unknown variance.
pub fn product_kernel_variances<S: Scalar>(spec: &UStatisticSpec<S>) -> Option<VarianceSummary<S>> {
    use crate::model::{Kernel, Variable};
    let mut var_of = Vec::with_capacity(spec.n);
    for v in &spec.variables {
        match v {
            Variable::Finite(d) => {
                if !d.mean().is_negligible() {
                    return None;
                }
                var_of.push(d.variance());
            }
            Variable::Sampler(_) => var_of.push(S::one()),
        }
    }
    let mut sigma2 = BTreeMap::new();
    let mut variance = S::zero();
    for (subset, kernel) in &spec.kernels.entries {
        let Kernel::Product(a) = kernel else { return None };
        let mut s2 = a.square();
        for &i in subset.indices() {
            s2 *= &var_of[i];
        }
        variance += &s2;
        sigma2.insert(subset.clone(), s2);
    }
    Some(VarianceSummary { sigma2, variance })
}
