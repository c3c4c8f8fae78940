//! Statistics over the space `(x, y_i, y_j)` of two replaced coordinates.
//!
//! With `D_i = W^{(i)} - W` and `D_i^{(j)} = W^{(ij)} - W^{(j)}`, all
//! quantities here are for the raw statistic.

use super::{PairContext, PairError};
use crate::scalar::{theta, Scalar};

/// Expectations over `(X, Y_i, Y_j)` for one ordered pair `i != j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleStats<S> {
    /// `E[θ(D_i) θ(D_j)]`.
    pub theta_product: S,
    /// `E[θ(D_i^{(j)}) θ(D_j)]`.
    pub swap_one: S,
    /// `E[θ(D_i^{(j)}) θ(D_j^{(i)})]`.
    pub swap_both: S,
    /// `E[(θ(D_i^{(j)}) - θ(D_i)) (θ(D_j^{(i)}) - θ(D_j))]`.
    pub cross: S,
    /// `E[(θ(D_i^{(j)}) - θ(D_i))^2]` and the same with `i`, `j` swapped.
    pub theta_gap_sq: (S, S),
    /// `E[D_i^2 (D_i^{(j)} - D_i)^2]`, and swapped.
    pub weighted_gap_sq: (S, S),
    /// `E[(D_i^{(j)} - D_i)^4]`, and swapped.
    pub gap_fourth: (S, S),
    /// Largest `|E[θ(D_i)θ(D_j) | X = x] - E[θ(D_i) | X = x] E[θ(D_j) | X = x]|`.
    pub max_conditional_covariance: S,
}

fn check_indices<S: Scalar>(ctx: &PairContext<S>, i: usize, j: usize) -> Result<(), PairError> {
    let n = ctx.n();
    if i == j || i >= n || j >= n {
        return Err(PairError::BadIndices { i, j, n });
    }
    Ok(())
}

pub fn triple_stats<S: Scalar>(ctx: &PairContext<S>, i: usize, j: usize) -> Result<TripleStats<S>, PairError> {
    check_indices(ctx, i, j)?;
    let space = ctx.space();
    let w = ctx.table();
    let (pi, pj) = (space.probs(i), space.probs(j));
    let z = S::zero;
    let mut acc: [S; 10] = std::array::from_fn(|_| z());
    let mut max_cov = z();
    for idx in 0..space.len() {
        let w0 = &w[idx];
        let mut inner: [S; 10] = std::array::from_fn(|_| z());
        let mut ti = z();
        let mut tj = z();
        for (a, pa) in pi.iter().enumerate() {
            let xi = space.replaced(idx, i, a);
            let di = w[xi].clone() - w0.clone();
            let th_di = theta(&di);
            ti += &(pa.clone() * th_di.clone());
            for (b, pb) in pj.iter().enumerate() {
                let xj = space.replaced(idx, j, b);
                let xij = space.replaced(xi, j, b);
                let dj = w[xj].clone() - w0.clone();
                let di_j = w[xij].clone() - w[xj].clone();
                let dj_i = w[xij].clone() - w[xi].clone();
                let (th_dj, th_di_j, th_dj_i) = (theta(&dj), theta(&di_j), theta(&dj_i));
                if a == 0 {
                    tj += &(pb.clone() * th_dj.clone());
                }
                let gi = th_di_j.clone() - th_di.clone();
                let gj = th_dj_i.clone() - th_dj.clone();
                let ei = di_j - di.clone();
                let ej = dj_i - dj.clone();
                let vals = [
                    th_di.clone() * th_dj.clone(),
                    th_di_j.clone() * th_dj,
                    th_di_j * th_dj_i,
                    gi.clone() * gj.clone(),
                    gi.square(),
                    gj.square(),
                    di.square() * ei.square(),
                    dj.square() * ej.square(),
                    ei.powi(4),
                    ej.powi(4),
                ];
                let pab = pa.clone() * pb.clone();
                for (s, v) in inner.iter_mut().zip(vals) {
                    *s += &(pab.clone() * v);
                }
            }
        }
        let cov = (inner[0].clone() - ti * tj).abs();
        if cov > max_cov {
            max_cov = cov;
        }
        let px = &space.weights()[idx];
        for (s, v) in acc.iter_mut().zip(inner) {
            *s += &(px.clone() * v);
        }
    }
    let [theta_product, swap_one, swap_both, cross, gi2, gj2, wi, wj, fi, fj] = acc;
    Ok(TripleStats {
        theta_product,
        swap_one,
        swap_both,
        cross,
        theta_gap_sq: (gi2, gj2),
        weighted_gap_sq: (wi, wj),
        gap_fourth: (fi, fj),
        max_conditional_covariance: max_cov,
    })
}

/// Both sides of `E[θ(D_i)θ(D_j)] = ¼ E[(θ(D_i^{(j)}) - θ(D_i))(θ(D_j^{(i)}) - θ(D_j))]`
/// together with the swap identities it rests on.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaIdentity<S> {
    pub lhs: S,
    pub rhs: S,
    pub swap_one: S,
    pub swap_both: S,
    pub max_conditional_covariance: S,
}

impl<S: Scalar> ThetaIdentity<S> {
    /// Main identity, `E[θ(D_i^{(j)})θ(D_j)] = -E[θ(D_i)θ(D_j)] = -E[θ(D_i^{(j)})θ(D_j^{(i)})]`,
    /// and conditional independence of `θ(D_i)`, `θ(D_j)` given `X`.
    pub fn holds(&self) -> bool {
        self.lhs.eq_tol(&self.rhs)
            && self.swap_one.eq_tol(&-self.lhs.clone())
            && self.swap_both.eq_tol(&self.lhs)
            && self.max_conditional_covariance.is_negligible()
    }
}

pub fn theta_product_identity<S: Scalar>(
    ctx: &PairContext<S>,
    i: usize,
    j: usize,
) -> Result<ThetaIdentity<S>, PairError> {
    Ok(triple_stats(ctx, i, j)?.into())
}

impl<S: Scalar> From<TripleStats<S>> for ThetaIdentity<S> {
    fn from(t: TripleStats<S>) -> Self {
        ThetaIdentity {
            lhs: t.theta_product,
            rhs: t.cross * S::from_ratio(1, 4),
            swap_one: t.swap_one,
            swap_both: t.swap_both,
            max_conditional_covariance: t.max_conditional_covariance,
        }
    }
}

/// `E[θ(D_i)]`, zero because swapping `X_i` and `Y_i` negates `D_i`.
pub fn theta_mean<S: Scalar>(ctx: &PairContext<S>, i: usize) -> S {
    let cond = ctx.conditional_on_x_at(i, |w, w2| theta(&(w2.clone() - w.clone())));
    ctx.space().expectation(&cond)
}

/// `(θ(y) - θ(x))^2 <= 8 x^2 (y - x)^2 + 2 (y - x)^4`.
pub fn taylor_quadratic_bound<S: Scalar>(x: &S, y: &S) -> bool {
    let d = y.clone() - x.clone();
    let lhs = (theta(y) - theta(x)).square();
    let rhs = S::from_int(8) * x.square() * d.square() + S::from_int(2) * d.powi(4);
    lhs.le_tol(&rhs)
}

/// Checks [`taylor_quadratic_bound`] on every pair; returns the first failure.
pub fn taylor_quadratic_bound_all<'a, S: Scalar>(pairs: impl IntoIterator<Item = (&'a S, &'a S)>) -> Option<(S, S)> {
    pairs
        .into_iter()
        .find(|(x, y)| !taylor_quadratic_bound(*x, *y))
        .map(|(x, y)| (x.clone(), y.clone()))
}
