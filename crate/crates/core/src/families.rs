//! Parametrized spec families and the sweep that evaluates them member by
//! member.
//!
//! A family file is one JSON object with a `kind`:
//!
//! ```json
//! {"kind": "rademacher_linear", "sizes": [4, 8, 16, 32]}
//! {"kind": "complete_symmetric", "p": 2, "sizes": [4, 6], "support": "skewed_three_point"}
//! {"kind": "fourth_moment_counterexample", "m": [4, 8, 12, 16]}
//! {"kind": "files", "specs": ["a.json", "b.json"]}
//! ```
//!
//! Optional keys on every kind: `"kappa"` (a scalar string) and
//! `"mc": {"samples": m, "seed": s}`.

use std::path::Path;

use serde::Deserialize;

use crate::battery::Support;
use crate::bounds::{csv_field, kappa_policy, BoundError, BoundReport, Verdict};
use crate::engine::Limits;
use crate::mc::RunConfig;
use crate::model::{homogeneous_sum, symmetric_homogeneous_sum, FiniteDistribution, Subset, UStatisticSpec, Variable};
use crate::scalar::{format_sig, Scalar};
use crate::spec_json::{parse_spec, AnySpec};
use crate::study::{summarize_spec, StudyOptions};
use crate::BigRational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FamilyError {
    #[error("malformed family document: {0}")]
    Json(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyKind {
    /// `W = sum_i X_i` over i.i.d. Rademacher variables.
    RademacherLinear { sizes: Vec<usize> },
    /// Equal weights on every `p`-subset.
    CompleteSymmetric {
        p: usize,
        sizes: Vec<usize>,
        #[serde(default = "rademacher")]
        support: Support,
    },
    /// `W = α X_a X_b + β U V` with `U = (X_1 + X_2)/√2`, `V = m^{-1/2} sum_j Y_j`,
    /// `α^2 = 3 - √6`, `β^2 = √6 - 2`: `E[W^4] = 3 - 4β^4/m -> 3` while the
    /// pair `(a, b)` keeps `ρ_n^2 = α^2`.
    FourthMomentCounterexample { m: Vec<usize> },
    /// Spec files, relative to the family file.
    Files { specs: Vec<String> },
}

fn rademacher() -> Support {
    Support::Rademacher
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct McSettings {
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct Family {
    #[serde(flatten)]
    pub kind: FamilyKind,
    #[serde(default)]
    pub kappa: Option<String>,
    #[serde(default)]
    pub mc: Option<McSettings>,
}

pub fn parse_family(text: &str) -> Result<Family, FamilyError> {
    let f: Family = serde_json::from_str(text).map_err(|e| FamilyError::Json(e.to_string()))?;
    if let FamilyKind::CompleteSymmetric { p, sizes, .. } = &f.kind {
        if *p == 0 || sizes.iter().any(|n| n < p) {
            return Err(FamilyError::Invalid(format!("need 1 <= p <= n, got p = {p}")));
        }
    }
    Ok(f)
}

/// The counterexample spec for block size `m`, over `n = m + 4` Rademacher
/// variables ordered `X_a, X_b, X_1, X_2, Y_1..Y_m`.
pub fn counterexample_spec(m: usize) -> UStatisticSpec<f64> {
    let alpha = (3.0 - 6f64.sqrt()).sqrt();
    let beta = (6f64.sqrt() - 2.0).sqrt();
    let cross = beta / (2.0 * m as f64).sqrt();
    let mut coeffs = vec![(Subset::new(vec![0, 1]), alpha)];
    for u in [2, 3] {
        for j in 0..m {
            coeffs.push((Subset::new(vec![u, 4 + j]), cross));
        }
    }
    let vars = vec![Variable::Finite(FiniteDistribution::rademacher()); m + 4];
    homogeneous_sum(coeffs, vars).expect("well-formed counterexample")
}

/// One member of a family, not yet evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub label: String,
    pub spec: Result<AnySpec, String>,
}

pub fn members(family: &Family, base: &Path) -> Vec<Member> {
    match &family.kind {
        FamilyKind::RademacherLinear { sizes } => sizes
            .iter()
            .map(|&n| Member {
                label: format!("n={n}"),
                spec: symmetric_homogeneous_sum(n, 1, BigRational::from_int(1), FiniteDistribution::rademacher())
                    .map(AnySpec::Rational)
                    .map_err(|e| e.to_string()),
            })
            .collect(),
        FamilyKind::CompleteSymmetric { p, sizes, support } => sizes
            .iter()
            .map(|&n| Member {
                label: format!("n={n}"),
                spec: symmetric_homogeneous_sum(n, *p, BigRational::from_int(1), support.distribution())
                    .map(AnySpec::Rational)
                    .map_err(|e| e.to_string()),
            })
            .collect(),
        FamilyKind::FourthMomentCounterexample { m } => m
            .iter()
            .map(|&m| Member {
                label: format!("m={m}"),
                spec: if m == 0 {
                    Err("m must be positive".into())
                } else {
                    Ok(AnySpec::Real(counterexample_spec(m)))
                },
            })
            .collect(),
        FamilyKind::Files { specs } => specs
            .iter()
            .map(|f| Member {
                label: f.clone(),
                spec: std::fs::read_to_string(base.join(f))
                    .map_err(|e| e.to_string())
                    .and_then(|t| parse_spec(&t).map_err(|e| e.to_string())),
            })
            .collect(),
    }
}

/// One CSV row; absent values are empty fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRow {
    pub member: String,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub fourth_moment: Option<f64>,
    pub rho: Option<f64>,
    pub kappa: Option<f64>,
    pub kolmogorov_bound: Option<f64>,
    pub wasserstein_bound: Option<f64>,
    pub symmetric_bound: Option<f64>,
    pub dk: Option<f64>,
    pub dw: Option<f64>,
    pub dk_mc: Option<f64>,
    pub method: Option<&'static str>,
    /// `ok`, `violated`, `no-kappa`, or `error: ...`.
    pub status: String,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "member,n,p,E4,rho,kappa,bK,bW,bSym,dK,dW,dK_mc,method,status";

    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map(format_sig).unwrap_or_default();
        let u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            csv_field(&self.member),
            u(self.n),
            u(self.p),
            f(self.fourth_moment),
            f(self.rho),
            f(self.kappa),
            f(self.kolmogorov_bound),
            f(self.wasserstein_bound),
            f(self.symmetric_bound),
            f(self.dk),
            f(self.dw),
            f(self.dk_mc),
            self.method.unwrap_or_default().to_owned(),
            csv_field(&self.status),
        ]
        .join(",")
    }
}

fn evaluate<S: Scalar>(label: &str, spec: &UStatisticSpec<S>, kappa: Option<&str>, opts: &StudyOptions) -> SweepRow {
    let mut row = SweepRow {
        member: label.to_owned(),
        n: Some(spec.n),
        p: Some(spec.p()),
        ..SweepRow::default()
    };
    let summary = match summarize_spec(spec, opts) {
        Ok(s) => s,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    row.fourth_moment = Some(summary.fourth_moment);
    row.rho = Some(summary.rho_squared.max(0.0).sqrt());
    row.dk = summary.exact_dk;
    row.dw = summary.exact_dw;
    row.dk_mc = summary.mc.map(|m| m.distances.dk);
    row.method = Some(summary.method.tag());
    let user = match kappa.map(S::parse).transpose() {
        Ok(k) => k,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    let choice = match kappa_policy(spec, user) {
        Ok(c) => c,
        Err(BoundError::KappaUnknown) => {
            row.status = "no-kappa".into();
            return row;
        }
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    row.kappa = Some(choice.value.to_f64());
    match BoundReport::new(summary.bound_inputs(choice.value.to_f64()), Some(choice.source), summary.distances()) {
        Ok(r) => {
            row.kolmogorov_bound = Some(r.kolmogorov_bound);
            row.wasserstein_bound = Some(r.wasserstein_bound);
            row.symmetric_bound = r.symmetric_bound;
            row.status = match r.verdict() {
                Verdict::Violated => "violated",
                _ => "ok",
            }
            .into();
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Evaluates every member; failures are recorded in the row's status.
pub fn sweep(family: &Family, base: &Path, limits: Limits) -> Vec<SweepRow> {
    let opts = StudyOptions {
        limits,
        mc: family.mc.as_ref().map(|m| RunConfig::new(m.seed, m.samples)),
    };
    let kappa = family.kappa.as_deref();
    members(family, base)
        .into_iter()
        .map(|m| match &m.spec {
            Ok(AnySpec::Rational(s)) => evaluate(&m.label, s, kappa, &opts),
            Ok(AnySpec::Real(s)) => evaluate(&m.label, s, kappa, &opts),
            Err(e) => SweepRow {
                member: m.label.clone(),
                status: format!("error: {e}"),
                ..SweepRow::default()
            },
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SweepRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
