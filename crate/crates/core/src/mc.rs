//! Seeded Monte-Carlo estimates of moments and distances to N(0, 1).
//!
//! Draws are organised in fixed blocks of [`BLOCK`] samples. Block `b` is
//! generated by a ChaCha8 stream keyed by `(seed, b)`, so the sample vector
//! depends only on `(seed, m)`. Workers take contiguous ranges of blocks and
//! all reductions run sequentially over the assembled vector, which keeps
//! every estimate bit-identical across worker counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::distances::{dkw_band, empirical_kolmogorov, wasserstein_exact, DiscreteLaw, DistanceError};
use crate::model::{validate_spec, Kernel, SamplerKind, UStatisticSpec, Variable, Violation};
use crate::scalar::{format_sig, Scalar};

pub const BLOCK: usize = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McError {
    #[error("variable {var} has no way to be sampled for a table kernel")]
    NoSampler { var: usize },
    #[error("invalid spec: {0:?}")]
    InvalidSpec(Vec<Violation>),
    #[error("sample count must be positive")]
    NoSamples,
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: usize,
    pub delta: f64,
    pub workers: usize,
}

impl RunConfig {
    pub fn new(seed: u64, samples: usize) -> Self {
        RunConfig {
            seed,
            samples,
            delta: 0.01,
            workers: 1,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

/// Generator of the block with the given index.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

enum Source {
    /// Values with cumulative probabilities, sampled by inverse CDF.
    Finite { values: Vec<f64>, cum: Vec<f64> },
    Normal,
    Uniform,
}

enum Term {
    Product { coef: f64, vars: Vec<usize> },
    Table { vars: Vec<usize>, radices: Vec<usize>, table: Vec<f64> },
}

/// A spec lowered to `f64` for fast repeated evaluation.
struct Sampler {
    sources: Vec<Source>,
    terms: Vec<Term>,
}

impl Sampler {
    fn new<S: Scalar>(spec: &UStatisticSpec<S>) -> Result<Self, McError> {
        let violations = validate_spec(spec);
        if !violations.is_empty() {
            return Err(McError::InvalidSpec(violations));
        }
        let sources = spec
            .variables
            .iter()
            .map(|v| match v {
                Variable::Finite(d) => {
                    let mut acc = 0.0;
                    let cum = d
                        .atoms
                        .iter()
                        .map(|a| {
                            acc += a.prob.to_f64();
                            acc
                        })
                        .collect();
                    Source::Finite {
                        values: d.atoms.iter().map(|a| a.value.to_f64()).collect(),
                        cum,
                    }
                }
                Variable::Sampler(SamplerKind::Normal) => Source::Normal,
                Variable::Sampler(SamplerKind::Uniform) => Source::Uniform,
            })
            .collect::<Vec<_>>();
        let mut terms = Vec::with_capacity(spec.kernels.len());
        for (subset, kernel) in &spec.kernels.entries {
            let vars = subset.indices().to_vec();
            terms.push(match kernel {
                Kernel::Product(a) => Term::Product { coef: a.to_f64(), vars },
                Kernel::Table(t) => {
                    let mut radices = Vec::with_capacity(vars.len());
                    for &j in &vars {
                        match &sources[j] {
                            Source::Finite { values, .. } => radices.push(values.len()),
                            _ => return Err(McError::NoSampler { var: j }),
                        }
                    }
                    Term::Table {
                        vars,
                        radices,
                        table: t.iter().map(|v| v.to_f64()).collect(),
                    }
                }
            });
        }
        Ok(Sampler { sources, terms })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, x: &mut [f64], idx: &mut [usize]) -> f64 {
        for (k, s) in self.sources.iter().enumerate() {
            x[k] = match s {
                Source::Finite { values, cum } => {
                    let u: f64 = rng.random();
                    let a = cum.iter().position(|&c| u < c).unwrap_or(values.len() - 1);
                    idx[k] = a;
                    values[a]
                }
                Source::Normal => rng.sample(StandardNormal),
                Source::Uniform => {
                    let h = 3f64.sqrt();
                    rng.random_range(-h..h)
                }
            };
        }
        let mut w = 0.0;
        for t in &self.terms {
            w += match t {
                Term::Product { coef, vars } => vars.iter().fold(*coef, |acc, &j| acc * x[j]),
                Term::Table { vars, radices, table } => {
                    let pos = vars.iter().zip(radices).fold(0, |acc, (&j, &r)| acc * r + idx[j]);
                    table[pos]
                }
            };
        }
        w
    }

    fn fill_block(&self, seed: u64, block: usize, out: &mut [f64]) {
        let mut rng = block_rng(seed, block as u64);
        let n = self.sources.len();
        let mut x = vec![0.0; n];
        let mut idx = vec![0usize; n];
        for o in out.iter_mut() {
            *o = self.draw(&mut rng, &mut x, &mut idx);
        }
    }
}

/// `m` independent draws of `W`.
pub fn sample_w<S: Scalar>(spec: &UStatisticSpec<S>, config: &RunConfig) -> Result<Vec<f64>, McError> {
    if config.samples == 0 {
        return Err(McError::NoSamples);
    }
    let sampler = Sampler::new(spec)?;
    let mut out = vec![0.0; config.samples];
    let blocks: Vec<(usize, &mut [f64])> = out.chunks_mut(BLOCK).enumerate().collect();
    let workers = config.workers.max(1).min(blocks.len());
    if workers <= 1 {
        for (b, chunk) in blocks {
            sampler.fill_block(config.seed, b, chunk);
        }
    } else {
        let per = blocks.len().div_ceil(workers);
        let mut groups: Vec<Vec<(usize, &mut [f64])>> = Vec::new();
        let mut it = blocks.into_iter().peekable();
        while it.peek().is_some() {
            groups.push(it.by_ref().take(per).collect());
        }
        let sampler = &sampler;
        std::thread::scope(|s| {
            for group in groups {
                s.spawn(move || {
                    for (b, chunk) in group {
                        sampler.fill_block(config.seed, b, chunk);
                    }
                });
            }
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Sample mean of `g(W)` with its plug-in standard error.
fn mean_with_error(samples: &[f64], g: impl Fn(f64) -> f64) -> MomentEstimate {
    let m = samples.len() as f64;
    let mean = samples.iter().map(|&w| g(w)).sum::<f64>() / m;
    let var = samples.iter().map(|&w| (g(w) - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    MomentEstimate {
        estimate: mean,
        std_error: (var / m).sqrt(),
    }
}

pub fn estimate_moment(samples: &[f64], k: i32) -> MomentEstimate {
    mean_with_error(samples, |w| w.powi(k))
}

pub fn estimate_fourth_moment<S: Scalar>(spec: &UStatisticSpec<S>, config: &RunConfig) -> Result<MomentEstimate, McError> {
    Ok(estimate_moment(&sample_w(spec, config)?, 4))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceEstimate {
    pub dk: f64,
    pub band: f64,
    /// `∫|F_m - Φ|` of the empirical law.
    pub dw: f64,
}

pub fn distances_of(samples: &[f64], delta: f64) -> Result<DistanceEstimate, McError> {
    let ek = empirical_kolmogorov(samples, delta)?;
    let dw = wasserstein_exact(&DiscreteLaw::empirical(samples)?);
    Ok(DistanceEstimate {
        dk: ek.estimate,
        band: ek.band,
        dw,
    })
}

pub fn estimate_distances<S: Scalar>(spec: &UStatisticSpec<S>, config: &RunConfig) -> Result<DistanceEstimate, McError> {
    distances_of(&sample_w(spec, config)?, config.delta)
}

/// One row of the sample-summary CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleSummary {
    pub seed: u64,
    pub m: usize,
    pub mean: f64,
    pub var: f64,
    pub m4: MomentEstimate,
    pub distances: DistanceEstimate,
}

impl SampleSummary {
    pub const CSV_HEADER: &'static str = "seed,m,mean,var,m4,dk_est,dk_band,dw_est";

    pub fn csv_row(&self) -> String {
        [
            self.seed.to_string(),
            self.m.to_string(),
            format_sig(self.mean),
            format_sig(self.var),
            format_sig(self.m4.estimate),
            format_sig(self.distances.dk),
            format_sig(self.distances.band),
            format_sig(self.distances.dw),
        ]
        .join(",")
    }
}

pub fn summarize_samples(samples: &[f64], config: &RunConfig) -> Result<SampleSummary, McError> {
    if samples.is_empty() {
        return Err(McError::NoSamples);
    }
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    Ok(SampleSummary {
        seed: config.seed,
        m: samples.len(),
        mean,
        var,
        m4: estimate_moment(samples, 4),
        distances: distances_of(samples, config.delta)?,
    })
}

pub fn summarize<S: Scalar>(spec: &UStatisticSpec<S>, config: &RunConfig) -> Result<SampleSummary, McError> {
    summarize_samples(&sample_w(spec, config)?, config)
}

/// DKW band for the configured sample count.
pub fn band(config: &RunConfig) -> Result<f64, McError> {
    Ok(dkw_band(config.samples, config.delta)?)
}
