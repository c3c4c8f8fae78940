//! Step-by-step evaluation of the inequality chain that turns the
//! exchangeable-pair bound into a bound in terms of `E[W^4] - 3` and `ρ_n`.
//!
//! Every step is an exact comparison (squared where a square root would
//! appear). Quartic quantities are normalized by `E[W^2]^2`.

use super::difference::difference_statistic;
use super::theta::{theta_mean, triple_stats, TripleStats};
use super::{shzh_terms, PairContext, PairError};
use crate::engine::moment;
use crate::scalar::{theta, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainCheck<S> {
    pub step: &'static str,
    pub relation: Relation,
    pub lhs: S,
    pub rhs: S,
}

impl<S: Scalar> ChainCheck<S> {
    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::Le => self.lhs.le_tol(&self.rhs),
            Relation::Eq => self.lhs.eq_tol(&self.rhs),
        }
    }
}

fn le<S>(step: &'static str, lhs: S, rhs: S) -> ChainCheck<S> {
    ChainCheck {
        step,
        relation: Relation::Le,
        lhs,
        rhs,
    }
}

fn eq<S>(step: &'static str, lhs: S, rhs: S) -> ChainCheck<S> {
    ChainCheck {
        step,
        relation: Relation::Eq,
        lhs,
        rhs,
    }
}

/// `(E[D^4], E[(D'-D)^4], E[D^2 (D'-D)^2])` for the lifted pair of `D_i`,
/// the last two multiplied by `n + 1`.
fn lifted_moments<S: Scalar>(ctx: &PairContext<S>, i: usize) -> Result<(S, S, S), PairError> {
    let d = difference_statistic(ctx, i)?;
    let lifted = match PairContext::new(&d.spec, ctx.space().limits()) {
        Ok(c) => c,
        Err(PairError::ZeroVariance) => return Ok((S::zero(), S::zero(), S::zero())),
        Err(e) => return Err(e),
    };
    let m = S::from_int(lifted.n() as i64);
    let space = lifted.space();
    let fourth = moment(space, lifted.table(), 4)?;
    let inc4 = space.expectation(&lifted.conditional_on_x(|a, b| (b.clone() - a.clone()).powi(4)));
    let weighted = space.expectation(&lifted.conditional_on_x(|a, b| a.square() * (b.clone() - a.clone()).square()));
    Ok((fourth, inc4 * m.clone(), weighted * m))
}

/// [`triple_stats`] for every `i < j`.
pub fn all_triple_stats<S: Scalar>(ctx: &PairContext<S>) -> Result<Vec<(usize, usize, TripleStats<S>)>, PairError> {
    let n = ctx.n();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j, triple_stats(ctx, i, j)?));
        }
    }
    Ok(out)
}

/// Evaluates every step of the chain. Steps that need `κ` are skipped when
/// `kappa` is `None`.
pub fn proof_chain<S: Scalar>(ctx: &PairContext<S>, kappa: Option<&S>) -> Result<Vec<ChainCheck<S>>, PairError> {
    proof_chain_with(ctx, kappa, &all_triple_stats(ctx)?)
}

/// [`proof_chain`] with precomputed [`all_triple_stats`].
pub fn proof_chain_with<S: Scalar>(
    ctx: &PairContext<S>,
    kappa: Option<&S>,
    triples: &[(usize, usize, TripleStats<S>)],
) -> Result<Vec<ChainCheck<S>>, PairError> {
    let n = ctx.n();
    let p = S::from_int(ctx.p() as i64);
    let v = ctx.second_moment().clone();
    let v2 = v.square();
    let space = ctx.space();
    let e4 = ctx.fourth_moment();
    let rho2 = ctx.rho_squared();
    let three = S::from_int(3);
    let sh = shzh_terms(ctx);
    let mut out = Vec::new();

    let t_w = sh.var_square_given_w.clone();
    let t_x = sh.var_square_given_x.clone();
    out.push(le("term1_sq_le_var_given_w", sh.term1.square(), t_w.clone()));
    out.push(le("var_given_w_le_var_given_x", t_w, t_x.clone()));
    if let Some(k) = kappa {
        out.push(le(
            "var_given_x_le_fourth_cumulant_plus_influence",
            t_x,
            e4.clone() - three.clone() + k.clone() * rho2.clone(),
        ));
    }
    out.push(le("term2_given_w_le_given_x", sh.term2.clone(), sh.term2_given_x.clone()));

    // Per-index conditional means E[θ(D_i) | X] and their sum.
    let mut cond: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut total = vec![S::zero(); space.len()];
    let mut theta_means = S::zero();
    for i in 0..n {
        let c = ctx.conditional_on_x_at(i, |a, b| theta(&(b.clone() - a.clone())));
        for (t, x) in total.iter_mut().zip(&c) {
            *t += x;
        }
        let m = theta_mean(ctx, i).abs();
        if m > theta_means {
            theta_means = m;
        }
        cond.push(c);
    }
    out.push(eq("theta_increment_mean_zero", theta_means, S::zero()));
    let abs_total: Vec<S> = total.iter().map(|t| t.abs()).collect();
    out.push(eq(
        "term2_given_x_is_sum_of_theta_means",
        sh.term2_given_x.clone(),
        space.expectation(&abs_total) / (p.clone() * v.clone()),
    ));
    let var_total = space.expectation(&total.iter().map(|t| t.square()).collect::<Vec<_>>())
        - space.expectation(&total).square();
    out.push(le(
        "term2_given_x_sq_le_variance_of_sum",
        (p.clone() * sh.term2_given_x.clone()).square(),
        var_total.clone() / v2.clone(),
    ));

    let mut sum_var = S::zero();
    let mut sum_d4 = S::zero();
    for (i, c) in cond.iter().enumerate() {
        let m = space.expectation(c);
        sum_var += &(space.expectation(&c.iter().map(|x| x.square()).collect::<Vec<_>>()) - m.square());
        let d4 = ctx.conditional_on_x_at(i, |a, b| (b.clone() - a.clone()).powi(4));
        sum_d4 += &space.expectation(&d4);
    }

    let mut sum_cov = S::zero();
    let mut sum_theta_prod = S::zero();
    let mut max_cov_gap = S::zero();
    let mut identity_failures = 0i64;
    let mut sum_theta_gap = S::zero();
    let mut sum_weighted = S::zero();
    let mut sum_gap4 = S::zero();
    for (i, j, t) in triples {
        let (i, j, t) = (*i, *j, t.clone());
        {
            let mi = space.expectation(&cond[i]);
            let mj = space.expectation(&cond[j]);
            let prod: Vec<S> = cond[i].iter().zip(&cond[j]).map(|(a, b)| a.clone() * b.clone()).collect();
            let cov = space.expectation(&prod) - mi * mj;
            let gap = (cov.clone() - t.theta_product.clone()).abs();
            if gap > max_cov_gap {
                max_cov_gap = gap;
            }
            let quarter = S::from_ratio(1, 4);
            let ok = t.theta_product.eq_tol(&(t.cross.clone() * quarter))
                && t.swap_one.eq_tol(&-t.theta_product.clone())
                && t.swap_both.eq_tol(&t.theta_product)
                && t.max_conditional_covariance.is_negligible();
            if !ok {
                identity_failures += 1;
            }
            // Both orderings (i, j) and (j, i).
            let two = S::from_int(2);
            sum_cov += &(cov * two.clone());
            sum_theta_prod += &(t.theta_product * two);
            sum_theta_gap += &(t.theta_gap_sq.0 + t.theta_gap_sq.1);
            sum_weighted += &(t.weighted_gap_sq.0 + t.weighted_gap_sq.1);
            sum_gap4 += &(t.gap_fourth.0 + t.gap_fourth.1);
        }
    }
    out.push(eq(
        "variance_of_sum_splits",
        var_total.clone() / v2.clone(),
        (sum_var.clone() + sum_cov.clone()) / v2.clone(),
    ));
    out.push(le("variances_le_fourth_increments", sum_var.clone() / v2.clone(), sum_d4.clone() / v2.clone()));
    let inc4: Vec<S> = ctx.conditional_on_x(|a, b| (b.clone() - a.clone()).powi(4));
    let n_inc4 = space.expectation(&inc4) * S::from_int(n as i64);
    out.push(eq("fourth_increments_sum", sum_d4.clone() / v2.clone(), n_inc4.clone() / v2.clone()));
    if let Some(k) = kappa {
        out.push(le(
            "fourth_increments_le_cumulant_bound",
            n_inc4.clone() / v2.clone(),
            p.clone() * (S::from_int(8) * (e4.clone() - three.clone()) + S::from_int(12) * k.clone() * rho2.clone()),
        ));
    }
    out.push(eq("covariance_is_theta_product", max_cov_gap, S::zero()));
    out.push(eq("theta_product_identity", S::from_int(identity_failures), S::zero()));
    out.push(le(
        "theta_products_le_theta_gaps",
        sum_theta_prod / v2.clone(),
        sum_theta_gap.clone() * S::from_ratio(1, 4) / v2.clone(),
    ));
    out.push(le(
        "theta_gaps_le_taylor",
        sum_theta_gap * S::from_ratio(1, 4) / v2.clone(),
        (S::from_int(2) * sum_weighted.clone() + sum_gap4.clone() * S::from_ratio(1, 2)) / v2.clone(),
    ));

    let mut lifted_fourth = S::zero();
    let mut lifted_inc4 = S::zero();
    let mut lifted_weighted = S::zero();
    for i in 0..n {
        let (f, inc, w) = lifted_moments(ctx, i)?;
        lifted_fourth += &f;
        lifted_inc4 += &inc;
        lifted_weighted += &w;
    }
    out.push(eq("difference_fourth_moments", lifted_fourth / v2.clone(), sum_d4.clone() / v2.clone()));
    out.push(le("cross_gap_fourth_le_lifted_pair", sum_gap4 / v2.clone(), lifted_inc4.clone() / v2.clone()));
    let eight_p = S::from_int(8) * p.clone();
    let two_p = S::from_int(2) * p.clone();
    out.push(le(
        "lifted_pair_fourth_le_difference_fourth",
        lifted_inc4 / v2.clone(),
        eight_p.clone() * sum_d4.clone() / v2.clone(),
    ));
    out.push(le(
        "cross_weighted_le_lifted_pair",
        sum_weighted / v2.clone(),
        lifted_weighted.clone() / v2.clone(),
    ));
    out.push(le(
        "lifted_pair_weighted_le_difference_fourth",
        lifted_weighted / v2.clone(),
        two_p * sum_d4.clone() / v2.clone(),
    ));
    out.push(le("covariances_le_difference_fourth", sum_cov / v2.clone(), eight_p * sum_d4 / v2.clone()));
    if let Some(k) = kappa {
        let pp = p.square();
        let rhs = ((S::from_int(8) * p.clone() + S::from_int(64) * pp.clone()) * (e4 - three)
            + (S::from_int(12) * p.clone() + S::from_int(96) * pp.clone()) * k.clone() * rho2)
            / pp;
        out.push(le("term2_sq_le_final", sh.term2.square(), rhs));
    }
    Ok(out)
}
