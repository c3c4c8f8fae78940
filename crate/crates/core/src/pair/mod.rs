//! The single-coordinate exchangeable pair `(W, W')`.
//!
//! `W'` replaces the coordinate `α`, drawn uniformly from `0..n`, by an
//! independent copy. Conditional expectations given `X` only need the joint
//! space of `(x, y_α)`, so `E[g(W, W') | X = x]` is evaluated as
//! `(1/n) sum_i sum_a P(Y_i = a) g(W(x), W(x with x_i := a))`.
//!
//! Reported moments and slacks refer to the normalized statistic
//! `W / sqrt(E[W^2])`. Every quantity below is homogeneous in `W`, so the
//! normalization is a division by a power of `E[W^2]` and stays rational.

mod chain;
mod difference;
mod theta;

use std::collections::BTreeMap;

use crate::engine::{moment, EngineError, Limits, OutcomeSpace};
use crate::hoeffding::{
    component_variances, degeneracy_of, rho_squared, DegeneracyReport, HoeffdingDecomposition, VarianceSummary,
};
use crate::model::{Subset, UStatisticSpec};
use crate::scalar::{theta, Scalar};

pub use chain::{all_triple_stats, proof_chain, proof_chain_with, ChainCheck, Relation};
pub use difference::{difference_statistic, DifferenceStatistic};
pub use theta::{
    taylor_quadratic_bound, taylor_quadratic_bound_all, theta_mean, theta_product_identity, triple_stats, ThetaIdentity,
    TripleStats,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PairError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("statistic has zero second moment")]
    ZeroVariance,
    #[error("indices must be distinct and below {n}, got {i} and {j}")]
    BadIndices { i: usize, j: usize, n: usize },
}

/// Exact enumeration context for the pair built from one spec.
#[derive(Clone, Debug)]
pub struct PairContext<S> {
    spec: UStatisticSpec<S>,
    space: OutcomeSpace<S>,
    w: Vec<S>,
    second_moment: S,
    variances: VarianceSummary<S>,
    degeneracy: DegeneracyReport,
}

impl<S: Scalar> PairContext<S> {
    pub fn new(spec: &UStatisticSpec<S>, limits: Limits) -> Result<Self, PairError> {
        let space = OutcomeSpace::for_spec(spec, limits)?;
        let w = space.statistic_table(spec);
        let second_moment = moment(&space, &w, 2)?;
        if second_moment.is_negligible() {
            return Err(PairError::ZeroVariance);
        }
        let dec = HoeffdingDecomposition::compute(&space, &w)?;
        let comps = dec.components(&space);
        let degeneracy = degeneracy_of(&comps, spec.p());
        let variances = component_variances(&comps);
        Ok(PairContext {
            spec: spec.clone(),
            space,
            w,
            second_moment,
            variances,
            degeneracy,
        })
    }

    pub fn spec(&self) -> &UStatisticSpec<S> {
        &self.spec
    }

    pub fn space(&self) -> &OutcomeSpace<S> {
        &self.space
    }

    /// Values of `W` over all outcomes.
    pub fn table(&self) -> &[S] {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn p(&self) -> usize {
        self.spec.p()
    }

    /// `λ = p / n`.
    pub fn lambda(&self) -> S {
        S::from_ratio(self.p() as i64, self.n() as i64)
    }

    /// `E[W^2]` of the raw statistic.
    pub fn second_moment(&self) -> &S {
        &self.second_moment
    }

    pub fn variances(&self) -> &VarianceSummary<S> {
        &self.variances
    }

    pub fn degeneracy(&self) -> &DegeneracyReport {
        &self.degeneracy
    }

    /// `E[W^4] / E[W^2]^2`.
    pub fn fourth_moment(&self) -> S {
        let m4 = moment(&self.space, &self.w, 4).expect("order 4 is valid");
        m4 / self.second_moment.square()
    }

    /// `ρ_n^2` of the normalized statistic.
    pub fn rho_squared(&self) -> S {
        rho_squared(&self.variances, self.n()) / self.second_moment.clone()
    }

    /// `E[g(W, W^{(i)}) | X = x]` for a fixed replacement index `i`.
    pub fn conditional_on_x_at(&self, i: usize, g: impl Fn(&S, &S) -> S) -> Vec<S> {
        let probs = self.space.probs(i);
        (0..self.space.len())
            .map(|idx| {
                let w = &self.w[idx];
                let mut acc = S::zero();
                for (a, p) in probs.iter().enumerate() {
                    let w2 = &self.w[self.space.replaced(idx, i, a)];
                    acc += &(p.clone() * g(w, w2));
                }
                acc
            })
            .collect()
    }

    /// `E[g(W, W') | X = x]` with the replacement index averaged out.
    pub fn conditional_on_x(&self, g: impl Fn(&S, &S) -> S) -> Vec<S> {
        let n = self.n();
        let mut out = vec![S::zero(); self.space.len()];
        for i in 0..n {
            for (o, v) in out.iter_mut().zip(self.conditional_on_x_at(i, &g)) {
                *o += &v;
            }
        }
        let inv = S::from_ratio(1, n as i64);
        out.iter_mut().for_each(|v| *v *= &inv);
        out
    }

    /// Groups a table over outcomes by the exact value of `W`.
    pub fn group_by_w(&self, table: &[S]) -> Vec<WGroup<S>> {
        let mut groups: BTreeMap<S::Key, (S, S, S)> = BTreeMap::new();
        for ((w, p), v) in self.w.iter().zip(self.space.weights()).zip(table) {
            let e = groups
                .entry(w.key())
                .or_insert_with(|| (w.clone(), S::zero(), S::zero()));
            e.1 += p;
            e.2 += &(p.clone() * v.clone());
        }
        groups
            .into_values()
            .map(|(value, prob, mass)| WGroup {
                mean: mass / prob.clone(),
                value,
                prob,
            })
            .collect()
    }

    /// `E[g(W, W') | W = w]` for every atom `w` of the law of `W`.
    pub fn condition_on_w(&self, g: impl Fn(&S, &S) -> S) -> Vec<WGroup<S>> {
        self.group_by_w(&self.conditional_on_x(g))
    }

    /// Pushforward of the pair law: `(W, W')` values with their weights.
    pub fn joint_law(&self) -> BTreeMap<(S::Key, S::Key), S> {
        let n = self.n();
        let inv = S::from_ratio(1, n as i64);
        let mut out: BTreeMap<(S::Key, S::Key), S> = BTreeMap::new();
        for idx in 0..self.space.len() {
            let base = self.space.weights()[idx].clone() * inv.clone();
            for i in 0..n {
                for (a, p) in self.space.probs(i).iter().enumerate() {
                    let w2 = &self.w[self.space.replaced(idx, i, a)];
                    let e = out.entry((self.w[idx].key(), w2.key())).or_insert_with(S::zero);
                    *e += &(base.clone() * p.clone());
                }
            }
        }
        out
    }

    fn normalize2(&self, v: S) -> S {
        v / self.second_moment.clone()
    }

    fn normalize4(&self, v: S) -> S {
        v / self.second_moment.square()
    }
}

/// One atom of the law of `W` with a conditional mean.
#[derive(Clone, Debug, PartialEq)]
pub struct WGroup<S> {
    pub value: S,
    pub prob: S,
    pub mean: S,
}

fn variance_of<S: Scalar>(space: &OutcomeSpace<S>, table: &[S]) -> S {
    let m = space.expectation(table);
    let sq: Vec<S> = table.iter().map(|v| v.square()).collect();
    space.expectation(&sq) - m.square()
}

fn group_variance<S: Scalar>(groups: &[WGroup<S>]) -> S {
    let mut m = S::zero();
    let mut m2 = S::zero();
    for g in groups {
        m += &(g.prob.clone() * g.mean.clone());
        m2 += &(g.prob.clone() * g.mean.square());
    }
    m2 - m.square()
}

/// `max_x |E[W' - W | X = x] + (p/n) W(x)|` for the raw statistic.
pub fn regression_check<S: Scalar>(ctx: &PairContext<S>) -> S {
    let lambda = ctx.lambda();
    ctx.conditional_on_x(|w, w2| w2.clone() - w.clone())
        .into_iter()
        .zip(ctx.table())
        .map(|(c, w)| (c + lambda.clone() * w.clone()).abs())
        .fold(S::zero(), |m, v| if v > m { v } else { m })
}

/// `T(x) = (n/2p) E[(W' - W)^2 | X = x]` for the normalized statistic, with
/// `E[T]` and `Var(T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalSquare<S> {
    pub table: Vec<S>,
    pub mean: S,
    pub variance: S,
}

pub fn conditional_squared_increment<S: Scalar>(ctx: &PairContext<S>) -> ConditionalSquare<S> {
    let scale = S::from_ratio(ctx.n() as i64, 2 * ctx.p() as i64) / ctx.second_moment().clone();
    let table: Vec<S> = ctx
        .conditional_on_x(|w, w2| (w2.clone() - w.clone()).square())
        .into_iter()
        .map(|v| v * scale.clone())
        .collect();
    let mean = ctx.space().expectation(&table);
    let variance = variance_of(ctx.space(), &table);
    ConditionalSquare { table, mean, variance }
}

/// Outcome of comparing the Hoeffding components of
/// `(n/2p) E[(W'-W)^2 | X]` with `((2p - |M|)/2p) U_M`, where
/// `W^2 = sum_M U_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalExpansion {
    pub holds: bool,
    pub mismatches: Vec<Subset>,
    pub nonzero_components: usize,
}

pub fn hoeffding_of_conditional<S: Scalar>(ctx: &PairContext<S>) -> Result<ConditionalExpansion, EngineError> {
    let space = ctx.space();
    let p = ctx.p();
    let scale = S::from_ratio(ctx.n() as i64, 2 * p as i64);
    let t: Vec<S> = ctx
        .conditional_on_x(|w, w2| (w2.clone() - w.clone()).square())
        .into_iter()
        .map(|v| v * scale.clone())
        .collect();
    let sq: Vec<S> = ctx.table().iter().map(|v| v.square()).collect();
    let dec_t = HoeffdingDecomposition::compute(space, &t)?;
    let dec_u = HoeffdingDecomposition::compute(space, &sq)?;
    let mut mismatches = Vec::new();
    let mut nonzero = 0;
    for mask in 0u32..(1u32 << space.n()) {
        let m = Subset::from_mask(mask);
        let size = m.len();
        let coef = if size >= 2 * p {
            S::zero()
        } else {
            S::from_ratio((2 * p - size) as i64, 2 * p as i64)
        };
        let tm = dec_t.component_table(&m);
        let um = dec_u.component_table(&m);
        if um.iter().any(|v| !v.is_negligible()) {
            nonzero += 1;
        }
        let ok = tm.iter().zip(&um).all(|(a, b)| a.eq_tol(&(coef.clone() * b.clone())));
        if !ok {
            mismatches.push(m);
        }
    }
    Ok(ConditionalExpansion {
        holds: mismatches.is_empty(),
        mismatches,
        nonzero_components: nonzero,
    })
}

/// `(n/4p) E[(W' - W)^4]` for the normalized statistic.
pub fn increment_fourth<S: Scalar>(ctx: &PairContext<S>) -> S {
    let cond = ctx.conditional_on_x(|w, w2| (w2.clone() - w.clone()).powi(4));
    let raw = ctx.space().expectation(&cond) * S::from_ratio(ctx.n() as i64, 4 * ctx.p() as i64);
    ctx.normalize4(raw)
}

/// `E[(W' - W)^2]` for the normalized statistic.
pub fn mean_square_increment<S: Scalar>(ctx: &PairContext<S>) -> S {
    let cond = ctx.conditional_on_x(|w, w2| (w2.clone() - w.clone()).square());
    ctx.normalize2(ctx.space().expectation(&cond))
}

/// `E[W^2 (n/2p) E[(W' - W)^2 | W]]` for the normalized statistic, computed
/// through the grouping on `W`.
pub fn lemma3_energy<S: Scalar>(ctx: &PairContext<S>) -> S {
    let scale = S::from_ratio(ctx.n() as i64, 2 * ctx.p() as i64);
    let groups = ctx.condition_on_w(|w, w2| (w2.clone() - w.clone()).square());
    let mut acc = S::zero();
    for g in &groups {
        acc += &(g.prob.clone() * g.value.square() * g.mean.clone());
    }
    ctx.normalize4(acc * scale)
}

/// `E[g(W, W') | W]` keyed by the atoms of `W`.
pub fn condition_on_w<S: Scalar>(ctx: &PairContext<S>, g: impl Fn(&S, &S) -> S) -> Vec<WGroup<S>> {
    ctx.condition_on_w(g)
}

/// The two terms of the exchangeable-pair Kolmogorov bound, conditioned on
/// `W` (the bound itself) and on `X` (the coarser upper estimate).
#[derive(Clone, Debug, PartialEq)]
pub struct ShZhTerms<S> {
    /// `E|1 - (n/2p) E[(W'-W)^2 | W]|`.
    pub term1: S,
    /// `(n/p) E|E[|W'-W|(W'-W) | W]|`.
    pub term2: S,
    pub term1_given_x: S,
    pub term2_given_x: S,
    /// `Var((n/2p) E[(W'-W)^2 | W])`.
    pub var_square_given_w: S,
    pub var_square_given_x: S,
    /// `Var(E[θ(W'-W) | ·])` for both conditionings.
    pub var_theta_given_w: S,
    pub var_theta_given_x: S,
}

pub fn shzh_terms<S: Scalar>(ctx: &PairContext<S>) -> ShZhTerms<S> {
    let space = ctx.space();
    let n = ctx.n() as i64;
    let p = ctx.p() as i64;
    let v = ctx.second_moment().clone();
    let half_scale = S::from_ratio(n, 2 * p) / v.clone();
    let full_scale = S::from_ratio(n, p) / v;

    let sq_x: Vec<S> = ctx
        .conditional_on_x(|w, w2| (w2.clone() - w.clone()).square())
        .into_iter()
        .map(|c| c * half_scale.clone())
        .collect();
    let th_x: Vec<S> = ctx
        .conditional_on_x(|w, w2| theta(&(w2.clone() - w.clone())))
        .into_iter()
        .map(|c| c * full_scale.clone())
        .collect();
    let sq_w = ctx.group_by_w(&sq_x);
    let th_w = ctx.group_by_w(&th_x);

    let abs_dev = |t: &[S]| -> Vec<S> { t.iter().map(|c| (S::one() - c.clone()).abs()).collect() };
    let abs = |t: &[S]| -> Vec<S> { t.iter().map(|c| c.abs()).collect() };
    let group_abs = |gs: &[WGroup<S>], shift: bool| {
        let mut acc = S::zero();
        for g in gs {
            let m = if shift { S::one() - g.mean.clone() } else { g.mean.clone() };
            acc += &(g.prob.clone() * m.abs());
        }
        acc
    };

    // θ moments scale like W^2, so `full_scale` already normalizes them; the
    // variances are reported for the unscaled `E[θ(W'-W) | ·]`.
    let unscale = S::from_ratio(p, n);
    let th_x_plain: Vec<S> = th_x.iter().map(|c| c.clone() * unscale.clone()).collect();
    let th_w_plain: Vec<WGroup<S>> = th_w
        .iter()
        .map(|g| WGroup {
            value: g.value.clone(),
            prob: g.prob.clone(),
            mean: g.mean.clone() * unscale.clone(),
        })
        .collect();

    ShZhTerms {
        term1: group_abs(&sq_w, true),
        term2: group_abs(&th_w, false),
        term1_given_x: space.expectation(&abs_dev(&sq_x)),
        term2_given_x: space.expectation(&abs(&th_x)),
        var_square_given_w: group_variance(&sq_w),
        var_square_given_x: variance_of(space, &sq_x),
        var_theta_given_w: group_variance(&th_w_plain),
        var_theta_given_x: variance_of(space, &th_x_plain),
    }
}

/// Slack `rhs - lhs` of each lemma inequality (non-negative when it holds).
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaSlacks<S> {
    /// `E[W^4] - 3 + κ ρ^2 - Var((n/2p) E[(W'-W)^2 | X])`.
    pub lemma1: Option<S>,
    /// `2(E[W^4] - 3) + 3 κ ρ^2 - (n/4p) E[(W'-W)^4]`.
    pub lemma2: Option<S>,
    /// `E[W^4] - E[W^2 (n/2p) E[(W'-W)^2 | W]]`.
    pub lemma3a: S,
    /// `2 E[W^4] - (n/4p) E[(W'-W)^4]`.
    pub lemma3b: S,
}

impl<S: Scalar> LemmaSlacks<S> {
    pub fn all_nonnegative(&self) -> bool {
        let opt = |s: &Option<S>| s.as_ref().is_none_or(|v| v.ge_zero_tol());
        opt(&self.lemma1) && opt(&self.lemma2) && self.lemma3a.ge_zero_tol() && self.lemma3b.ge_zero_tol()
    }
}

/// All exchangeable-pair statistics of one spec.
#[derive(Clone, Debug, PartialEq)]
pub struct PairReport<S> {
    pub n: usize,
    pub p: usize,
    pub lambda: S,
    /// `E[W^2]` of the raw statistic; all other moments are normalized.
    pub second_moment: S,
    pub degenerate: bool,
    pub offenders: Vec<Subset>,
    pub fourth_moment: S,
    pub rho_squared: S,
    pub kappa: Option<S>,
    pub regression_max_residual: S,
    pub mean_sq_increment: S,
    pub var_cond_sq: S,
    pub fourth_increment: S,
    pub energy: S,
    pub slacks: LemmaSlacks<S>,
    pub shzh: ShZhTerms<S>,
    pub exchangeable: bool,
}

impl<S: Scalar> PairReport<S> {
    pub fn compute(ctx: &PairContext<S>, kappa: Option<S>) -> Self {
        let e4 = ctx.fourth_moment();
        let rho2 = ctx.rho_squared();
        let cs = conditional_squared_increment(ctx);
        let fourth = increment_fourth(ctx);
        let energy = lemma3_energy(ctx);
        let three = S::from_int(3);
        let slacks = LemmaSlacks {
            lemma1: kappa
                .as_ref()
                .map(|k| e4.clone() - three.clone() + k.clone() * rho2.clone() - cs.variance.clone()),
            lemma2: kappa.as_ref().map(|k| {
                S::from_int(2) * (e4.clone() - three.clone()) + three.clone() * k.clone() * rho2.clone()
                    - fourth.clone()
            }),
            lemma3a: e4.clone() - energy.clone(),
            lemma3b: S::from_int(2) * e4.clone() - fourth.clone(),
        };
        let joint = ctx.joint_law();
        let exchangeable = joint
            .iter()
            .all(|((a, b), w)| joint.get(&(b.clone(), a.clone())).is_some_and(|v| v.eq_tol(w)));
        PairReport {
            n: ctx.n(),
            p: ctx.p(),
            lambda: ctx.lambda(),
            second_moment: ctx.second_moment().clone(),
            degenerate: ctx.degeneracy().degenerate,
            offenders: ctx.degeneracy().offenders.clone(),
            fourth_moment: e4,
            rho_squared: rho2,
            kappa,
            regression_max_residual: regression_check(ctx),
            mean_sq_increment: mean_square_increment(ctx),
            var_cond_sq: cs.variance,
            fourth_increment: fourth,
            energy,
            slacks,
            shzh: shzh_terms(ctx),
            exchangeable,
        }
    }

    /// `2p / n`, the value `E[(W'-W)^2]` must take.
    pub fn expected_mean_sq_increment(&self) -> S {
        S::from_ratio(2 * self.p as i64, self.n as i64)
    }

    /// Degeneracy, the linear regression property and `E[(W'-W)^2] = 2p/n`.
    pub fn identities_hold(&self) -> bool {
        self.degenerate
            && self.regression_max_residual.is_negligible()
            && self.mean_sq_increment.eq_tol(&self.expected_mean_sq_increment())
    }
}

/// Outcome of the exact identity checks that accompany a pair report.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityChecks<S> {
    pub expansion: ConditionalExpansion,
    /// `(i, j, identity)` for every `i < j`.
    pub theta: Vec<(usize, usize, ThetaIdentity<S>)>,
    pub theta_means: Vec<S>,
    pub chain: Vec<ChainCheck<S>>,
}

impl<S: Scalar> IdentityChecks<S> {
    pub fn all_hold(&self) -> bool {
        self.expansion.holds
            && self.theta.iter().all(|t| t.2.holds())
            && self.theta_means.iter().all(|m| m.is_negligible())
            && self.chain.iter().all(|c| c.holds())
    }
}


/// Runs every exact identity on `ctx`: the conditional expansion, the
/// θ-product identity on all ordered pairs, `E[θ(D_i)] = 0`, and the
/// inequality chain.
pub fn identity_checks<S: Scalar>(ctx: &PairContext<S>, kappa: Option<&S>) -> Result<IdentityChecks<S>, PairError> {
    let triples = all_triple_stats(ctx)?;
    let chain = proof_chain_with(ctx, kappa, &triples)?;
    Ok(IdentityChecks {
        expansion: hoeffding_of_conditional(ctx)?,
        theta: triples.into_iter().map(|(i, j, t)| (i, j, t.into())).collect(),
        theta_means: (0..ctx.n()).map(|i| theta_mean(ctx, i)).collect(),
        chain,
    })
}

#[cfg(test)]
mod tests;
