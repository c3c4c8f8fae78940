//! Explicit Kolmogorov and Wasserstein bounds in terms of `E[W^4] - 3`,
//! `ρ_n` and `κ_p`, and the verdict comparing them with computed distances.

use crate::distances::EmpiricalKolmogorov;
use crate::model::UStatisticSpec;
use crate::scalar::{format_sig, Scalar, NUM_EPS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundError {
    #[error("kappa must be positive, got {0}")]
    InvalidKappa(f64),
    #[error("rho must be non-negative, got {0}")]
    InvalidRho(f64),
    #[error("fourth moment of a unit-variance statistic is at least 1, got {0}")]
    InvalidFourthMoment(f64),
    #[error("no kappa for a non-symmetric statistic; supply one")]
    KappaUnknown,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub fourth_moment: f64,
    pub rho: f64,
    pub kappa: f64,
    pub p: usize,
    pub n: usize,
    pub symmetric: bool,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<(), BoundError> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(BoundError::InvalidKappa(self.kappa));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(BoundError::InvalidRho(self.rho));
        }
        if !(self.fourth_moment >= 1.0 - NUM_EPS) || !self.fourth_moment.is_finite() {
            return Err(BoundError::InvalidFourthMoment(self.fourth_moment));
        }
        Ok(())
    }

    fn excess_root(&self) -> f64 {
        (self.fourth_moment - 3.0).abs().sqrt()
    }
}

/// `11.9 sqrt|E[W^4] - 3| + (3.5 + 10.8 sqrt κ) ρ`.
pub fn kolmogorov_bound(inputs: &BoundInputs) -> Result<f64, BoundError> {
    inputs.validate()?;
    Ok(11.9 * inputs.excess_root() + (3.5 + 10.8 * inputs.kappa.sqrt()) * inputs.rho)
}

/// `12 sqrt|E[W^4] - 3| + 19 p / sqrt n` for symmetric statistics.
pub fn symmetric_bound(fourth_moment: f64, p: usize, n: usize) -> f64 {
    12.0 * (fourth_moment - 3.0).abs().sqrt() + 19.0 * p as f64 / (n as f64).sqrt()
}

/// `sqrt(2/π) + 4/3`.
pub fn wasserstein_excess_coefficient() -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() + 4.0 / 3.0
}

/// `sqrt(2/π) + 2 sqrt 2 / sqrt 3`.
pub fn wasserstein_influence_coefficient() -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() + 2.0 * 2f64.sqrt() / 3f64.sqrt()
}

/// `(sqrt(2/π) + 4/3) sqrt|E[W^4] - 3| + sqrt κ (sqrt(2/π) + 2 sqrt 2 / sqrt 3) ρ`.
pub fn wasserstein_bound(inputs: &BoundInputs) -> Result<f64, BoundError> {
    inputs.validate()?;
    Ok(wasserstein_excess_coefficient() * inputs.excess_root()
        + inputs.kappa.sqrt() * wasserstein_influence_coefficient() * inputs.rho)
}

/// Kolmogorov bound with the unrounded constants of the proof, both in the
/// `p`-dependent form and with `p = 1` substituted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProofConstants {
    /// `(9 + 2 sqrt 2 / sqrt p) sqrt|E4 - 3| + (2 sqrt 3 / sqrt p + (1 + 4 sqrt 6) sqrt κ) ρ`.
    pub p_dependent: f64,
    /// `(9 + 2 sqrt 2) sqrt|E4 - 3| + (2 sqrt 3 + (1 + 4 sqrt 6) sqrt κ) ρ`.
    pub uniform: f64,
}

pub fn proof_constant_bound(inputs: &BoundInputs) -> Result<ProofConstants, BoundError> {
    inputs.validate()?;
    let (s2, s3, s6) = (2f64.sqrt(), 3f64.sqrt(), 6f64.sqrt());
    let sp = (inputs.p.max(1) as f64).sqrt();
    let e = inputs.excess_root();
    let k = inputs.kappa.sqrt();
    Ok(ProofConstants {
        p_dependent: (9.0 + 2.0 * s2 / sp) * e + (2.0 * s3 / sp + (1.0 + 4.0 * s6) * k) * inputs.rho,
        uniform: (9.0 + 2.0 * s2) * e + (2.0 * s3 + (1.0 + 4.0 * s6) * k) * inputs.rho,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaSource {
    User,
    SymmetricDefault,
}

impl KappaSource {
    pub fn tag(self) -> &'static str {
        match self {
            KappaSource::User => "user",
            KappaSource::SymmetricDefault => "paper-symmetric",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaChoice<S> {
    pub value: S,
    pub source: KappaSource,
}

/// A user value wins; otherwise symmetric statistics get `κ = 2p`.
pub fn kappa_policy<S: Scalar>(spec: &UStatisticSpec<S>, user: Option<S>) -> Result<KappaChoice<S>, BoundError> {
    match user {
        Some(k) if k > S::zero() => Ok(KappaChoice {
            value: k,
            source: KappaSource::User,
        }),
        Some(k) => Err(BoundError::InvalidKappa(k.to_f64())),
        None if spec.symmetric => Ok(KappaChoice {
            value: S::from_int(2 * spec.p() as i64),
            source: KappaSource::SymmetricDefault,
        }),
        None => Err(BoundError::KappaUnknown),
    }
}

/// `d_K <= sqrt(d_W)`, up to the numeric tolerance.
pub fn dk_dw_consistency(dk: f64, dw: f64) -> bool {
    dk <= dw.max(0.0).sqrt() + NUM_EPS
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Dominates,
    Violated,
    NoDistance,
}

impl Verdict {
    pub fn tag(self) -> &'static str {
        match self {
            Verdict::Dominates => "dominates",
            Verdict::Violated => "violated",
            Verdict::NoDistance => "no-distance",
        }
    }

    fn of(bound: f64, distance: Option<f64>, band: f64) -> Self {
        match distance {
            None => Verdict::NoDistance,
            Some(d) if bound + NUM_EPS >= d - band => Verdict::Dominates,
            Some(_) => Verdict::Violated,
        }
    }

    fn combine(items: &[Verdict]) -> Self {
        if items.contains(&Verdict::Violated) {
            Verdict::Violated
        } else if items.contains(&Verdict::Dominates) {
            Verdict::Dominates
        } else {
            Verdict::NoDistance
        }
    }
}

/// Distances of one statistic to N(0, 1), whichever are available.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Distances {
    pub exact_dk: Option<f64>,
    pub exact_dw: Option<f64>,
    pub empirical_dk: Option<EmpiricalKolmogorov>,
    pub empirical_dw: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub kappa_source: Option<KappaSource>,
    pub kolmogorov_bound: f64,
    pub symmetric_bound: Option<f64>,
    pub wasserstein_bound: f64,
    pub proof_constants: ProofConstants,
    pub distances: Distances,
    pub kolmogorov_verdict: Verdict,
    pub symmetric_verdict: Option<Verdict>,
    pub wasserstein_verdict: Verdict,
}

impl BoundReport {
    pub fn new(inputs: BoundInputs, kappa_source: Option<KappaSource>, distances: Distances) -> Result<Self, BoundError> {
        let bk = kolmogorov_bound(&inputs)?;
        let bw = wasserstein_bound(&inputs)?;
        let sym = inputs.symmetric.then(|| symmetric_bound(inputs.fourth_moment, inputs.p, inputs.n));
        let (dk, band) = match (distances.exact_dk, distances.empirical_dk) {
            (Some(d), _) => (Some(d), 0.0),
            (None, Some(e)) => (Some(e.estimate), e.band),
            (None, None) => (None, 0.0),
        };
        // The empirical d_W has no band; it is compared as is.
        let dw = distances.exact_dw.or(distances.empirical_dw);
        Ok(BoundReport {
            inputs,
            kappa_source,
            kolmogorov_bound: bk,
            symmetric_bound: sym,
            wasserstein_bound: bw,
            proof_constants: proof_constant_bound(&inputs)?,
            distances,
            kolmogorov_verdict: Verdict::of(bk, dk, band),
            symmetric_verdict: sym.map(|b| Verdict::of(b, dk, band)),
            wasserstein_verdict: Verdict::of(bw, dw, 0.0),
        })
    }

    pub fn verdict(&self) -> Verdict {
        let mut all = vec![self.kolmogorov_verdict, self.wasserstein_verdict];
        all.extend(self.symmetric_verdict);
        Verdict::combine(&all)
    }

    pub const CSV_HEADER: &'static str = "spec_id,p,n,E4,rho,kappa,bK,bW,dK_exact,dW_exact,dK_mc,band,verdict";

    pub fn csv_row(&self, spec_id: &str) -> String {
        let opt = |v: Option<f64>| v.map(format_sig).unwrap_or_default();
        let i = &self.inputs;
        [
            csv_field(spec_id),
            i.p.to_string(),
            i.n.to_string(),
            format_sig(i.fourth_moment),
            format_sig(i.rho),
            format_sig(i.kappa),
            format_sig(self.kolmogorov_bound),
            format_sig(self.wasserstein_bound),
            opt(self.distances.exact_dk),
            opt(self.distances.exact_dw),
            opt(self.distances.empirical_dk.map(|e| e.estimate)),
            opt(self.distances.empirical_dk.map(|e| e.band)),
            self.verdict().tag().to_owned(),
        ]
        .join(",")
    }
}

/// Quotes a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
