//! Standard normal CDF and quantile, and exact Kolmogorov / Wasserstein
//! distances between a finitely supported law and N(0, 1).

use libm::erfc;

use crate::scalar::NUM_EPS;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Bisection interval for [`normal_quantile`].
pub const QUANTILE_RANGE: f64 = 9.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistanceError {
    #[error("quantile level {0} is outside (0, 1)")]
    OutOfRange(f64),
    #[error("law has no atoms")]
    EmptyLaw,
    #[error("law has a non-finite atom or a negative probability")]
    InvalidAtom,
    #[error("probabilities sum to {0}, not 1")]
    ProbabilitySum(f64),
    #[error("confidence level {0} is outside (0, 1)")]
    InvalidDelta(f64),
}

pub fn normal_pdf(t: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Φ(t), clamped to [0, 1].
pub fn normal_cdf(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    (0.5 * erfc(-t / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

/// Φ⁻¹(q) by bisection on [`normal_cdf`] over [-9, 9].
pub fn normal_quantile(q: f64) -> Result<f64, DistanceError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(DistanceError::OutOfRange(q));
    }
    let (mut lo, mut hi) = (-QUANTILE_RANGE, QUANTILE_RANGE);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if normal_cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Finitely supported law with strictly increasing atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLaw {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteLaw {
    /// Sorts atoms and merges equal values.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self, DistanceError> {
        if atoms.is_empty() {
            return Err(DistanceError::EmptyLaw);
        }
        if atoms.iter().any(|(v, p)| !v.is_finite() || !p.is_finite() || *p < 0.0) {
            return Err(DistanceError::InvalidAtom);
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > NUM_EPS {
            return Err(DistanceError::ProbabilitySum(total));
        }
        Ok(DiscreteLaw { atoms: merged })
    }

    /// Empirical law of a sample.
    pub fn empirical(samples: &[f64]) -> Result<Self, DistanceError> {
        if samples.is_empty() {
            return Err(DistanceError::EmptyLaw);
        }
        let mut sorted = samples.to_vec();
        if sorted.iter().any(|v| !v.is_finite()) {
            return Err(DistanceError::InvalidAtom);
        }
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut count = 0usize;
        for (k, v) in sorted.iter().enumerate() {
            count += 1;
            if k + 1 == sorted.len() || sorted[k + 1] != *v {
                atoms.push((*v, count as f64 / m));
                count = 0;
            }
        }
        Ok(DiscreteLaw { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn shifted(&self, c: f64) -> Self {
        DiscreteLaw {
            atoms: self.atoms.iter().map(|(v, p)| (v + c, *p)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    /// Left and right limits of the CDF at each atom.
    fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let mut cum = 0.0f64;
        self.atoms.iter().map(move |&(v, p)| {
            let left = cum;
            cum = (cum + p).min(1.0);
            (v, left, cum)
        })
    }
}

/// `sup_t |F(t) - Φ(t)|`.
///
/// `F` is a right-continuous step function and Φ is continuous and
/// increasing, so on each constancy interval `[a_k, a_{k+1})` the gap is
/// monotone and its supremum is attained at `a_k` or approached at
/// `a_{k+1}-`. Evaluating `|F(a-) - Φ(a)|` and `|F(a) - Φ(a)|` at every atom
/// therefore exhausts the supremum, tails included.
pub fn kolmogorov_exact(law: &DiscreteLaw) -> f64 {
    law.steps()
        .map(|(v, left, right)| {
            let phi = normal_cdf(v);
            (left - phi).abs().max((right - phi).abs())
        })
        .fold(0.0, f64::max)
}

/// Antiderivative of Φ: `G(t) = t Φ(t) + φ(t)`.
fn cdf_integral(t: f64) -> f64 {
    t * normal_cdf(t) + normal_pdf(t)
}

/// `∫_a^b |c - Φ(t)| dt` for finite `a < b`.
fn gap_integral(c: f64, a: f64, b: f64) -> f64 {
    let below = |lo: f64, hi: f64| c * (hi - lo) - (cdf_integral(hi) - cdf_integral(lo));
    let split = if c > 0.0 && c < 1.0 {
        normal_quantile(c).ok().filter(|t| *t > a && *t < b)
    } else {
        None
    };
    match split {
        Some(t) => below(a, t).abs() + below(t, b).abs(),
        None => below(a, b).abs(),
    }
}

/// `∫ |F(t) - Φ(t)| dt`, which equals the Lipschitz-dual distance in one
/// dimension. Both unbounded tails are integrated in closed form:
/// `∫_{-∞}^{a} Φ = G(a)` and `∫_{b}^{∞} (1 - Φ) = φ(b) - b Φ(-b)`.
pub fn wasserstein_exact(law: &DiscreteLaw) -> f64 {
    let atoms = law.atoms();
    let first = atoms[0].0;
    let last = atoms[atoms.len() - 1].0;
    let mut total = cdf_integral(first);
    total += normal_pdf(last) - last * normal_cdf(-last);
    let mut cum = 0.0f64;
    for w in atoms.windows(2) {
        cum = (cum + w[0].1).min(1.0);
        total += gap_integral(cum, w[0].0, w[1].0);
    }
    total
}

/// Dvoretzky–Kiefer–Wolfowitz radius `sqrt(ln(2/δ) / (2m))`.
pub fn dkw_band(m: usize, delta: f64) -> Result<f64, DistanceError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DistanceError::InvalidDelta(delta));
    }
    Ok(((2.0 / delta).ln() / (2.0 * m as f64)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalKolmogorov {
    pub estimate: f64,
    pub band: f64,
}

/// One-sample KS statistic against Φ with its DKW band.
pub fn empirical_kolmogorov(samples: &[f64], delta: f64) -> Result<EmpiricalKolmogorov, DistanceError> {
    let law = DiscreteLaw::empirical(samples)?;
    Ok(EmpiricalKolmogorov {
        estimate: kolmogorov_exact(&law),
        band: dkw_band(samples.len(), delta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(atoms: &[(f64, f64)]) -> DiscreteLaw {
        DiscreteLaw::new(atoms.to_vec()).unwrap()
    }

    #[test]
    fn cdf_symmetry() {
        let mut t = -9.0;
        while t <= 9.0 {
            assert!((normal_cdf(t) + normal_cdf(-t) - 1.0).abs() <= 1e-14, "t = {t}");
            t += 0.01;
        }
        assert_eq!(normal_cdf(0.0), 0.5);
    }

    #[test]
    fn quantile_examples() {
        assert!(normal_quantile(0.5).unwrap().abs() < 1e-15);
        assert!((normal_quantile(0.8413447461).unwrap() - 1.0).abs() < 1e-9);
        assert!((normal_quantile(0.9750021049).unwrap() - 1.96).abs() < 1e-9);
        assert!(matches!(normal_quantile(0.0), Err(DistanceError::OutOfRange(_))));
        assert!(matches!(normal_quantile(1.5), Err(DistanceError::OutOfRange(_))));
    }

    #[test]
    fn kolmogorov_point_mass() {
        assert_eq!(kolmogorov_exact(&law(&[(0.0, 1.0)])), 0.5);
    }

    #[test]
    fn kolmogorov_binomial() {
        let l = law(&[(-2.0, 1.0 / 16.0), (-1.0, 0.25), (0.0, 0.375), (1.0, 0.25), (2.0, 1.0 / 16.0)]);
        assert_eq!(kolmogorov_exact(&l), 0.1875);
    }

    #[test]
    fn wasserstein_point_mass_is_mean_abs() {
        let v = wasserstein_exact(&law(&[(0.0, 1.0)]));
        assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn law_validation() {
        assert_eq!(DiscreteLaw::new(vec![]), Err(DistanceError::EmptyLaw));
        assert!(matches!(DiscreteLaw::new(vec![(0.0, 0.5)]), Err(DistanceError::ProbabilitySum(_))));
        let merged = law(&[(1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]);
        assert_eq!(merged.atoms(), &[(0.0, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn empirical_all_zero() {
        let r = empirical_kolmogorov(&[0.0; 10], 0.01).unwrap();
        assert_eq!(r.estimate, 0.5);
    }
}
