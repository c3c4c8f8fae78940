//! `D_i = W^{(i)} - W` as a statistic over `n + 1` variables, the extra
//! variable being the independent copy `Y_i`.

use super::{PairContext, PairError};
use crate::model::{Kernel, KernelFamily, Subset, UStatisticSpec};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceStatistic<S> {
    pub index: usize,
    /// Spec over `(X_1, ..., X_n, Y_i)`.
    pub spec: UStatisticSpec<S>,
}

/// Moves the axis at local position `from` of a row-major table to the end.
fn move_axis_last<S: Clone>(table: &[S], sizes: &[usize], from: usize) -> Vec<S> {
    let mut new_sizes: Vec<usize> = sizes.to_vec();
    let r = new_sizes.remove(from);
    new_sizes.push(r);
    let k = sizes.len();
    let mut old_strides = vec![1usize; k];
    for t in (0..k.saturating_sub(1)).rev() {
        old_strides[t] = old_strides[t + 1] * sizes[t + 1];
    }
    let mut out = Vec::with_capacity(table.len());
    let mut local = vec![0usize; k];
    for _ in 0..table.len() {
        // `local` indexes the new layout; map back to the old one.
        let mut old = 0;
        for (pos, &d) in local.iter().enumerate() {
            let axis = if pos + 1 == k {
                from
            } else if pos < from {
                pos
            } else {
                pos + 1
            };
            old += d * old_strides[axis];
        }
        out.push(table[old].clone());
        for t in (0..k).rev() {
            local[t] += 1;
            if local[t] < new_sizes[t] {
                break;
            }
            local[t] = 0;
        }
    }
    out
}

pub fn difference_statistic<S: Scalar>(ctx: &PairContext<S>, i: usize) -> Result<DifferenceStatistic<S>, PairError> {
    let spec = ctx.spec();
    let n = spec.n;
    if i >= n {
        return Err(PairError::BadIndices { i, j: i, n });
    }
    let mut variables = spec.variables.clone();
    variables.push(spec.variables[i].clone());
    let sizes = spec.support_sizes();
    let mut kernels = KernelFamily::new(spec.kernels.order);
    for (subset, kernel) in &spec.kernels.entries {
        if !subset.contains(i) {
            continue;
        }
        let mut moved: Vec<usize> = subset.indices().iter().copied().filter(|&j| j != i).collect();
        moved.push(n);
        let moved = Subset::new(moved);
        let (neg, copy) = match kernel {
            Kernel::Product(a) => (Kernel::Product(-a.clone()), Kernel::Product(a.clone())),
            Kernel::Table(t) => {
                let local_sizes: Vec<usize> = subset.indices().iter().map(|&j| sizes[j]).collect();
                let from = subset.indices().iter().position(|&j| j == i).expect("i in subset");
                (
                    Kernel::Table(t.iter().map(|v| -v.clone()).collect()),
                    Kernel::Table(move_axis_last(t, &local_sizes, from)),
                )
            }
        };
        kernels.entries.insert(subset.clone(), neg);
        kernels.entries.insert(moved, copy);
    }
    Ok(DifferenceStatistic {
        index: i,
        spec: UStatisticSpec {
            n: n + 1,
            variables,
            kernels,
            symmetric: false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_move() {
        // 2 x 3 table t[a][b] = 10a + b; moving axis 0 last gives u[b][a].
        let t: Vec<i32> = vec![0, 1, 2, 10, 11, 12];
        assert_eq!(move_axis_last(&t, &[2, 3], 0), vec![0, 10, 1, 11, 2, 12]);
        assert_eq!(move_axis_last(&t, &[2, 3], 1), t);
    }
}
