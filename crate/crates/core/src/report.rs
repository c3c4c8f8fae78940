//! JSON documents for decompositions, pair reports and bound reports.
//!
//! Scalars are strings: exact `num/den` in rational mode, 15 significant
//! digits otherwise.

use serde_json::{json, Map, Value};

use crate::bounds::{BoundReport, KappaSource, Verdict};
use crate::hoeffding::{rho_squared, HoeffdingComponent, VarianceSummary};
use crate::pair::{IdentityChecks, PairReport, Relation};
use crate::scalar::{format_sig, Scalar};
use crate::families::SweepRow;
use crate::mc::SampleSummary;
use crate::study::SpecSummary;

fn s<S: Scalar>(v: &S) -> Value {
    Value::String(v.to_canonical())
}

fn opt<S: Scalar>(v: &Option<S>) -> Value {
    v.as_ref().map_or(Value::Null, s)
}

fn f(v: f64) -> Value {
    Value::String(format_sig(v))
}

fn optf(v: Option<f64>) -> Value {
    v.map_or(Value::Null, f)
}

pub fn decomposition_json<S: Scalar>(components: &[HoeffdingComponent<S>], variances: &VarianceSummary<S>, n: usize) -> Value {
    let comps: Vec<Value> = components
        .iter()
        .map(|c| {
            json!({
                "subset": c.subset.one_based(),
                "sigma2": s(&c.sigma2),
                "table": c.table.iter().map(s).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "components": comps,
        "var": s(&variances.variance),
        "rho2": s(&rho_squared(variances, n)),
    })
}

pub fn pair_report_json<S: Scalar>(
    report: &PairReport<S>,
    kappa_source: Option<KappaSource>,
    checks: Option<&IdentityChecks<S>>,
) -> Value {
    let sl = &report.slacks;
    let sh = &report.shzh;
    let mut out = Map::new();
    out.insert("mode".into(), json!(S::MODE));
    out.insert("n".into(), json!(report.n));
    out.insert("p".into(), json!(report.p));
    out.insert("lambda".into(), s(&report.lambda));
    out.insert("second_moment".into(), s(&report.second_moment));
    out.insert("degenerate".into(), json!(report.degenerate));
    out.insert(
        "offenders".into(),
        json!(report.offenders.iter().map(|o| o.one_based()).collect::<Vec<_>>()),
    );
    out.insert("fourth_moment".into(), s(&report.fourth_moment));
    out.insert("rho2".into(), s(&report.rho_squared));
    out.insert("kappa".into(), opt(&report.kappa));
    out.insert(
        "kappa_source".into(),
        kappa_source.map_or(json!("unverified constant"), |k| json!(k.tag())),
    );
    out.insert("regression_max_residual".into(), s(&report.regression_max_residual));
    out.insert("mean_sq_increment".into(), s(&report.mean_sq_increment));
    out.insert("var_cond_sq".into(), s(&report.var_cond_sq));
    out.insert("fourth_increment".into(), s(&report.fourth_increment));
    out.insert("energy".into(), s(&report.energy));
    out.insert(
        "lemma_slacks".into(),
        json!({
            "lemma1": opt(&sl.lemma1),
            "lemma2": opt(&sl.lemma2),
            "lemma3a": s(&sl.lemma3a),
            "lemma3b": s(&sl.lemma3b),
        }),
    );
    out.insert(
        "shzh".into(),
        json!({
            "term1": s(&sh.term1),
            "term2": s(&sh.term2),
            "term1_given_x": s(&sh.term1_given_x),
            "term2_given_x": s(&sh.term2_given_x),
            "var_square_given_w": s(&sh.var_square_given_w),
            "var_square_given_x": s(&sh.var_square_given_x),
            "var_theta_given_w": s(&sh.var_theta_given_w),
            "var_theta_given_x": s(&sh.var_theta_given_x),
        }),
    );
    out.insert("exchangeable".into(), json!(report.exchangeable));
    if let Some(c) = checks {
        out.insert(
            "conditional_expansion".into(),
            json!({
                "holds": c.expansion.holds,
                "mismatches": c.expansion.mismatches.iter().map(|m| m.one_based()).collect::<Vec<_>>(),
            }),
        );
        out.insert(
            "theta_identity".into(),
            Value::Array(
                c.theta
                    .iter()
                    .map(|(i, j, t)| {
                        json!({
                            "i": i + 1,
                            "j": j + 1,
                            "lhs": s(&t.lhs),
                            "rhs": s(&t.rhs),
                            "holds": t.holds(),
                        })
                    })
                    .collect(),
            ),
        );
        out.insert("theta_means".into(), Value::Array(c.theta_means.iter().map(s).collect()));
        out.insert(
            "chain".into(),
            Value::Array(
                c.chain
                    .iter()
                    .map(|k| {
                        json!({
                            "step": k.step,
                            "relation": match k.relation { Relation::Le => "<=", Relation::Eq => "=" },
                            "lhs": s(&k.lhs),
                            "rhs": s(&k.rhs),
                            "holds": k.holds(),
                        })
                    })
                    .collect(),
            ),
        );
    }
    Value::Object(out)
}

fn verdict(v: Verdict) -> Value {
    json!(v.tag())
}

pub fn bound_report_json(report: &BoundReport) -> Value {
    let i = &report.inputs;
    let d = &report.distances;
    json!({
        "inputs": {
            "fourth_moment": f(i.fourth_moment),
            "rho": f(i.rho),
            "kappa": f(i.kappa),
            "p": i.p,
            "n": i.n,
            "symmetric": i.symmetric,
        },
        "kappa_source": report.kappa_source.map(|k| k.tag()),
        "kolmogorov_bound": f(report.kolmogorov_bound),
        "symmetric_bound": optf(report.symmetric_bound),
        "wasserstein_bound": f(report.wasserstein_bound),
        "proof_constants": {
            "p_dependent": f(report.proof_constants.p_dependent),
            "uniform": f(report.proof_constants.uniform),
        },
        "exact_dk": optf(d.exact_dk),
        "exact_dw": optf(d.exact_dw),
        "empirical_dk": d.empirical_dk.map(|e| json!({"estimate": f(e.estimate), "band": f(e.band)})),
        "empirical_dw": optf(d.empirical_dw),
        "verdicts": {
            "kolmogorov": verdict(report.kolmogorov_verdict),
            "symmetric": report.symmetric_verdict.map(verdict),
            "wasserstein": verdict(report.wasserstein_verdict),
            "overall": verdict(report.verdict()),
        },
    })
}

pub fn sample_summary_json(mc: &SampleSummary) -> Value {
    json!({
        "seed": mc.seed,
        "m": mc.m,
        "mean": f(mc.mean),
        "var": f(mc.var),
        "m4": f(mc.m4.estimate),
        "m4_std_error": f(mc.m4.std_error),
        "dk": f(mc.distances.dk),
        "dk_band": f(mc.distances.band),
        "dw": f(mc.distances.dw),
    })
}

/// Moments and distances of the normalized statistic.
pub fn summary_json<S: Scalar>(summary: &SpecSummary<S>) -> Value {
    json!({
        "method": summary.method.tag(),
        "n": summary.n,
        "p": summary.p,
        "symmetric": summary.symmetric,
        "second_moment": f(summary.second_moment),
        "fourth_moment": f(summary.fourth_moment),
        "fourth_moment_exact": opt(&summary.fourth_moment_exact),
        "rho2": f(summary.rho_squared),
        "rho2_exact": opt(&summary.rho_squared_exact),
        "exact_dk": optf(summary.exact_dk),
        "exact_dw": optf(summary.exact_dw),
        "mc": summary.mc.as_ref().map(sample_summary_json),
    })
}

pub fn sweep_json(rows: &[SweepRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "member": r.member,
                    "n": r.n,
                    "p": r.p,
                    "E4": optf(r.fourth_moment),
                    "rho": optf(r.rho),
                    "kappa": optf(r.kappa),
                    "bK": optf(r.kolmogorov_bound),
                    "bW": optf(r.wasserstein_bound),
                    "bSym": optf(r.symmetric_bound),
                    "dK": optf(r.dk),
                    "dW": optf(r.dw),
                    "dK_mc": optf(r.dk_mc),
                    "method": r.method,
                    "status": r.status,
                })
            })
            .collect(),
    )
}

/// Adds the spec summary (method, exact moments) to a bound report document.
pub fn bound_with_summary_json<S: Scalar>(report: &BoundReport, summary: &SpecSummary<S>) -> Value {
    let mut v = bound_report_json(report);
    if let Value::Object(m) = &mut v {
        m.insert("method".into(), json!(summary.method.tag()));
        m.insert("fourth_moment_exact".into(), opt(&summary.fourth_moment_exact));
        m.insert("rho2_exact".into(), opt(&summary.rho_squared_exact));
        if let Some(mc) = &summary.mc {
            m.insert("mc".into(), sample_summary_json(mc));
        }
    }
    v
}
