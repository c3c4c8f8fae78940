//! Fourth moment, `ρ_n`, and distances of one spec, by the cheapest route
//! available: full enumeration, convolution for linear statistics, or
//! Monte Carlo.

use crate::bounds::{kappa_policy, BoundError, BoundInputs, BoundReport, Distances, KappaChoice};
use crate::distances::{kolmogorov_exact, wasserstein_exact, DiscreteLaw, DistanceError, EmpiricalKolmogorov};
use crate::engine::{linear_law, EngineError, Limits, OutcomeSpace, MAX_SUBSET_VARIABLES};
use crate::hoeffding::{component_variances, product_kernel_variances, rho_squared, HoeffdingDecomposition};
use crate::mc::{sample_w, summarize_samples, McError, RunConfig, SampleSummary};
use crate::model::UStatisticSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("statistic has zero second moment")]
    ZeroVariance,
    #[error("rho is only available from kernels with an exact decomposition or product form")]
    RhoUnavailable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Enumeration,
    Convolution,
    MonteCarlo,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Enumeration => "exact",
            Method::Convolution => "exact-linear",
            Method::MonteCarlo => "mc",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct StudyOptions {
    pub limits: Limits,
    /// Run Monte Carlo as well (or instead, when exact routes are too large).
    pub mc: Option<RunConfig>,
}

/// Normalized summary of a spec.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecSummary<S> {
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub symmetric: bool,
    /// `E[W^2]` of the raw statistic (estimated under Monte Carlo).
    pub second_moment: f64,
    pub fourth_moment: f64,
    /// Exact `E[W^4] / E[W^2]^2` when it was enumerated.
    pub fourth_moment_exact: Option<S>,
    pub rho_squared: f64,
    pub rho_squared_exact: Option<S>,
    /// Law of the normalized statistic, when exact.
    pub law: Option<DiscreteLaw>,
    pub exact_dk: Option<f64>,
    pub exact_dw: Option<f64>,
    pub mc: Option<SampleSummary>,
}

impl<S: Scalar> SpecSummary<S> {
    pub fn distances(&self) -> Distances {
        Distances {
            exact_dk: self.exact_dk,
            exact_dw: self.exact_dw,
            empirical_dk: self.mc.map(|m| EmpiricalKolmogorov {
                estimate: m.distances.dk,
                band: m.distances.band,
            }),
            empirical_dw: self.mc.map(|m| m.distances.dw),
        }
    }

    pub fn bound_inputs(&self, kappa: f64) -> BoundInputs {
        BoundInputs {
            fourth_moment: self.fourth_moment,
            rho: self.rho_squared.max(0.0).sqrt(),
            kappa,
            p: self.p,
            n: self.n,
            symmetric: self.symmetric,
        }
    }
}

fn space_size<S: Scalar>(spec: &UStatisticSpec<S>, plus_one: bool) -> u128 {
    spec.support_sizes()
        .iter()
        .fold(1u128, |acc, &r| acc.saturating_mul(r as u128 + plus_one as u128))
}

/// `ρ_n^2` of the raw statistic.
fn raw_rho<S: Scalar>(
    spec: &UStatisticSpec<S>,
    space: Option<(&OutcomeSpace<S>, &[S])>,
    limits: Limits,
) -> Result<S, StudyError> {
    if let Some(v) = product_kernel_variances(spec) {
        return Ok(rho_squared(&v, spec.n));
    }
    if let Some((space, w)) = space {
        if spec.n <= MAX_SUBSET_VARIABLES && limits.check(space_size(spec, true)).is_ok() {
            let dec = HoeffdingDecomposition::compute(space, w)?;
            return Ok(rho_squared(&component_variances(&dec.components(space)), spec.n));
        }
    }
    if spec.p() == 1 {
        // Each table kernel is its own centered component.
        let mut best = S::zero();
        for (subset, kernel) in &spec.kernels.entries {
            let i = subset.indices()[0];
            let Some(d) = spec.variables[i].as_finite() else {
                return Err(StudyError::RhoUnavailable);
            };
            let t = spec.kernel_table(subset, kernel);
            let mut m1 = S::zero();
            let mut m2 = S::zero();
            for (v, a) in t.iter().zip(&d.atoms) {
                m1 += &(a.prob.clone() * v.clone());
                m2 += &(a.prob.clone() * v.square());
            }
            let s2 = m2 - m1.square();
            if s2 > best {
                best = s2;
            }
        }
        return Ok(best);
    }
    Err(StudyError::RhoUnavailable)
}

fn normalized_law<S: Scalar>(atoms: &[(S, S)], scale: f64) -> Result<DiscreteLaw, DistanceError> {
    DiscreteLaw::new(atoms.iter().map(|(v, p)| (v.to_f64() / scale, p.to_f64())).collect())
}

fn law_moment<S: Scalar>(atoms: &[(S, S)], k: u32) -> S {
    let mut acc = S::zero();
    for (v, p) in atoms {
        acc += &(p.clone() * v.powi(k));
    }
    acc
}

pub fn summarize_spec<S: Scalar>(spec: &UStatisticSpec<S>, opts: &StudyOptions) -> Result<SpecSummary<S>, StudyError> {
    let limits = opts.limits;
    let finite = spec.is_finite();
    let mut law_atoms: Option<(Method, Vec<(S, S)>, Option<S>)> = None;
    if finite && limits.check(space_size(spec, false)).is_ok() {
        let space = OutcomeSpace::for_spec(spec, limits)?;
        let w = space.statistic_table(spec);
        let rho = raw_rho(spec, Some((&space, &w)), limits)?;
        law_atoms = Some((Method::Enumeration, space.pushforward(&w), Some(rho)));
    } else if finite && spec.p() == 1 {
        if let Ok(atoms) = linear_law(spec, limits) {
            law_atoms = Some((Method::Convolution, atoms, None));
        }
    }

    let mut summary = match law_atoms {
        Some((method, atoms, rho)) => {
            let rho = match rho {
                Some(r) => r,
                None => raw_rho(spec, None, limits)?,
            };
            let e2 = law_moment(&atoms, 2);
            if e2.is_negligible() {
                return Err(StudyError::ZeroVariance);
            }
            let e4 = law_moment(&atoms, 4) / e2.square();
            let rho2 = rho / e2.clone();
            let scale = e2.to_f64().sqrt();
            let law = normalized_law(&atoms, scale)?;
            SpecSummary {
                method,
                n: spec.n,
                p: spec.p(),
                symmetric: spec.symmetric,
                second_moment: e2.to_f64(),
                fourth_moment: e4.to_f64(),
                fourth_moment_exact: Some(e4),
                rho_squared: rho2.to_f64(),
                rho_squared_exact: Some(rho2),
                exact_dk: Some(kolmogorov_exact(&law)),
                exact_dw: Some(wasserstein_exact(&law)),
                law: Some(law),
                mc: None,
            }
        }
        None => {
            let Some(cfg) = opts.mc else {
                return Err(EngineError::SpaceTooLarge {
                    required: space_size(spec, false),
                    limit: limits.max_outcomes,
                }
                .into());
            };
            let rho = raw_rho(spec, None, limits)?;
            let samples = sample_w(spec, &cfg)?;
            let m = samples.len() as f64;
            let e2 = samples.iter().map(|w| w * w).sum::<f64>() / m;
            if e2 <= 0.0 {
                return Err(StudyError::ZeroVariance);
            }
            let e4 = samples.iter().map(|w| w.powi(4)).sum::<f64>() / m / (e2 * e2);
            let scale = e2.sqrt();
            let normalized: Vec<f64> = samples.iter().map(|w| w / scale).collect();
            SpecSummary {
                method: Method::MonteCarlo,
                n: spec.n,
                p: spec.p(),
                symmetric: spec.symmetric,
                second_moment: e2,
                fourth_moment: e4,
                fourth_moment_exact: None,
                // Product kernels give E[W^2] exactly; prefer it to the estimate.
                rho_squared: rho.to_f64() / product_kernel_variances(spec).map_or(e2, |v| v.variance.to_f64()),
                rho_squared_exact: None,
                law: None,
                exact_dk: None,
                exact_dw: None,
                mc: Some(summarize_samples(&normalized, &cfg)?),
            }
        }
    };
    if summary.method != Method::MonteCarlo {
        if let Some(cfg) = opts.mc {
            let scale = summary.second_moment.sqrt();
            let samples: Vec<f64> = sample_w(spec, &cfg)?.into_iter().map(|w| w / scale).collect();
            summary.mc = Some(summarize_samples(&samples, &cfg)?);
        }
    }
    Ok(summary)
}

/// Monte Carlo summary of `W / sqrt(E[W^2])`, with `E[W^2]` exact for
/// product kernels and estimated otherwise.
pub fn simulate<S: Scalar>(spec: &UStatisticSpec<S>, cfg: &RunConfig) -> Result<SampleSummary, StudyError> {
    let samples = sample_w(spec, cfg)?;
    let e2 = match product_kernel_variances(spec) {
        Some(v) => v.variance.to_f64(),
        None => samples.iter().map(|w| w * w).sum::<f64>() / samples.len().max(1) as f64,
    };
    if e2 <= 0.0 {
        return Err(StudyError::ZeroVariance);
    }
    let scale = e2.sqrt();
    let normalized: Vec<f64> = samples.into_iter().map(|w| w / scale).collect();
    Ok(summarize_samples(&normalized, cfg)?)
}

/// Bound report for a spec, with `κ` chosen by [`kappa_policy`].
pub fn bound_report<S: Scalar>(
    spec: &UStatisticSpec<S>,
    user_kappa: Option<S>,
    opts: &StudyOptions,
) -> Result<(SpecSummary<S>, KappaChoice<S>, BoundReport), StudyError> {
    let kappa = kappa_policy(spec, user_kappa)?;
    let summary = summarize_spec(spec, opts)?;
    let report = BoundReport::new(
        summary.bound_inputs(kappa.value.to_f64()),
        Some(kappa.source),
        summary.distances(),
    )?;
    Ok((summary, kappa, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_homogeneous_sum, symmetric_homogeneous_sum, FiniteDistribution, Subset};
    use num_rational::BigRational as Q;

    #[test]
    fn product_fixture() {
        let spec =
            build_homogeneous_sum(vec![(Subset::new(vec![0, 1]), Q::from_int(1))], vec![FiniteDistribution::rademacher(); 2])
                .unwrap();
        let s = summarize_spec(&spec, &StudyOptions::default()).unwrap();
        assert_eq!(s.method, Method::Enumeration);
        assert_eq!(s.fourth_moment_exact, Some(Q::from_int(1)));
        assert_eq!(s.rho_squared_exact, Some(Q::from_int(1)));
        assert!((s.exact_dk.unwrap() - 0.34134474606854294859).abs() < 1e-12, "{:?} {:?}", s.law, s.exact_dk);
        assert!(matches!(
            bound_report(&spec, None, &StudyOptions::default()),
            Err(StudyError::Bound(BoundError::KappaUnknown))
        ));
    }

    #[test]
    fn linear_route_matches_enumeration() {
        let spec = symmetric_homogeneous_sum(6, 1, 1.0 / 6f64.sqrt(), FiniteDistribution::rademacher()).unwrap();
        let a = summarize_spec(&spec, &StudyOptions::default()).unwrap();
        let small = StudyOptions {
            limits: Limits { max_outcomes: 16 },
            mc: None,
        };
        let b = summarize_spec(&spec, &small).unwrap();
        assert_eq!(b.method, Method::Convolution);
        assert!((a.fourth_moment - b.fourth_moment).abs() < 1e-12);
        assert!((a.exact_dk.unwrap() - b.exact_dk.unwrap()).abs() < 1e-12);
        assert!((b.rho_squared - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn falls_back_to_monte_carlo() {
        let spec = symmetric_homogeneous_sum(6, 2, 1.0 / 15f64.sqrt(), FiniteDistribution::rademacher()).unwrap();
        let opts = StudyOptions {
            limits: Limits { max_outcomes: 16 },
            mc: None,
        };
        assert!(matches!(summarize_spec(&spec, &opts), Err(StudyError::Engine(EngineError::SpaceTooLarge { .. }))));
        let opts = StudyOptions {
            mc: Some(RunConfig::new(1, 20_000)),
            ..opts
        };
        let s = summarize_spec(&spec, &opts).unwrap();
        assert_eq!(s.method, Method::MonteCarlo);
        assert!((s.rho_squared - 1.0 / 3.0).abs() < 0.05);
        let (_, k, r) = bound_report(&spec, None, &opts).unwrap();
        assert_eq!(k.value, 4.0);
        assert!(r.distances.empirical_dk.is_some());
    }
}
