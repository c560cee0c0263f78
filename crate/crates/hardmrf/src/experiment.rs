//! Replicated estimation experiments over a range of sizes, with a log-log
//! fit of the median error against `n`.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context};
use hardmrf_core::coloring::mpl::mpl_estimate as coloring_estimate;
use hardmrf_core::coloring::{
    find_valid_coloring, glauber_transitions, sample_glauber as coloring_glauber, BetaVector, Coloring,
    ColoringProductSampler, ConstraintGraph, SimpleGraph,
};
use hardmrf_core::coloring::instances::gen_random_graph;
use hardmrf_core::sat::instances::{gen_gadget_union, gen_random_satisfiable, gen_unique_sat};
use hardmrf_core::sat::mpl::{hess, mpl_estimate as sat_estimate};
use hardmrf_core::sat::{sample_glauber as sat_glauber, CnfFormula, ProductSampler};
use hardmrf_core::{derive_seed, seeded_rng, ExactDistribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Sat,
    Coloring,
}

/// Where the instance of each size comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    /// Disjoint copies of one random satisfiable gadget; `n` must be a
    /// multiple of `gadget_vars`.
    GadgetUnion {
        #[serde(default = "default_gadget_vars")]
        gadget_vars: usize,
        #[serde(default = "default_three")]
        k: usize,
        #[serde(default = "default_three")]
        d: usize,
        #[serde(default = "default_gadget_vars")]
        clauses: usize,
        gadget_seed: Option<u64>,
    },
    /// The uniquely satisfiable width-`k` formula on `n` variables.
    UniqueSat { k: usize },
    /// A random graph of maximum degree `d`, properly `q`-colored.
    RandomGraph { d: usize, q: usize },
    /// A fixed DIMACS formula; `sizes` must be its variable count.
    Formula { path: PathBuf },
    /// A fixed graph and constraint graph in the JSON formats.
    Graph { graph: PathBuf, h: PathBuf },
}

fn default_gadget_vars() -> usize {
    8
}

fn default_three() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerSpec {
    Exact,
    /// Heat-bath dynamics; `steps` defaults to `⌈10 n ln n⌉`, and `burn_in`
    /// is added on top.
    Glauber {
        steps: Option<u64>,
        #[serde(default)]
        burn_in: u64,
    },
}

impl SamplerSpec {
    fn steps(&self, n: usize) -> u64 {
        match *self {
            SamplerSpec::Exact => 0,
            SamplerSpec::Glauber { steps, burn_in } => steps.unwrap_or_else(|| default_glauber_steps(n)) + burn_in,
        }
    }

    fn label(&self, n: usize) -> String {
        match self {
            SamplerSpec::Exact => "exact".into(),
            SamplerSpec::Glauber { .. } => format!("glauber:{}", self.steps(n)),
        }
    }
}

/// `⌈10 n ln n⌉`, at least 1.
pub fn default_glauber_steps(n: usize) -> u64 {
    let n = n.max(2) as f64;
    (10.0 * n * n.ln()).ceil() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub instance: InstanceSource,
    /// One entry for SAT; `q − 1` free or `q` full weights for colorings.
    pub beta_star: Vec<f64>,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub sampler: SamplerSpec,
    #[serde(default = "default_bound")]
    pub bound: f64,
    #[serde(default)]
    pub seed: u64,
    /// Target failure probability, recorded with the results.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_bound() -> f64 {
    5.0
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(!self.sizes.is_empty(), "sizes must be nonempty");
        ensure!(self.sizes.windows(2).all(|w| w[0] < w[1]), "sizes must be strictly increasing");
        ensure!(self.replicates >= 1, "replicates must be at least 1");
        ensure!(self.bound > 0.0 && self.bound <= hardmrf_core::MAX_ABS_BETA, "bound must lie in (0, 20]");
        ensure!(self.beta_star.iter().all(|b| b.abs() <= self.bound), "every |beta*| must be at most the bound");
        let sat_source = matches!(
            self.instance,
            InstanceSource::GadgetUnion { .. } | InstanceSource::UniqueSat { .. } | InstanceSource::Formula { .. }
        );
        match self.model {
            ModelKind::Sat => {
                ensure!(sat_source, "instance source does not describe a SAT formula");
                ensure!(self.beta_star.len() == 1, "SAT beta_star must have exactly one entry");
            }
            ModelKind::Coloring => ensure!(!sat_source, "instance source does not describe a coloring model"),
        }
        if let InstanceSource::GadgetUnion { gadget_vars, .. } = self.instance {
            ensure!(gadget_vars > 0, "gadget_vars must be positive");
            ensure!(self.sizes.iter().all(|n| n % gadget_vars == 0), "sizes must be multiples of gadget_vars");
        }
        Ok(())
    }
}

/// One estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub sampler: String,
    pub error: f64,
    pub clamped: bool,
    /// SAT: the pseudo-likelihood curvature at the estimate. Colorings: the
    /// rainbow lower bound on the smallest Hessian eigenvalue.
    pub certificate: f64,
    pub identifiable: bool,
    /// Free coordinates of the estimate, `;`-separated.
    pub beta_hat: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub median_error: f64,
    pub identifiable_fraction: f64,
    pub used_in_fit: bool,
}

/// Least-squares line through `(ln n, ln median error)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
}

impl RateFit {
    /// `None` with fewer than three points or a nonpositive error.
    pub fn fit(points: &[(usize, f64)]) -> Option<Self> {
        if points.len() < 3 || points.iter().any(|&(n, e)| n == 0 || e.is_nan() || e <= 0.0) {
            return None;
        }
        let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
        let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
        let k = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let slope_std_error = (rss / (k - 2.0) / sxx).sqrt();
        Some(Self { points: points.to_vec(), slope, intercept, slope_std_error })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<Row>,
    pub sizes: Vec<SizeSummary>,
    pub fit: Option<RateFit>,
    pub epsilon: Option<f64>,
}

/// Share of draws that must be identifiable for a size to enter the fit.
pub const FIT_IDENTIFIABLE_FRACTION: f64 = 0.8;

/// Worker count from `HARDMRF_THREADS`; 0 lets rayon decide.
pub fn threads_from_env() -> usize {
    std::env::var("HARDMRF_THREADS").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<ExperimentResult> {
    run_experiment_streaming(config, None::<&mut std::io::Sink>)
}

/// Runs the experiment, writing CSV rows to `sink` after each size so that
/// completed sizes survive a later failure.
pub fn run_experiment_streaming<W: Write>(
    config: &ExperimentConfig,
    mut sink: Option<&mut W>,
) -> anyhow::Result<ExperimentResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads_from_env()).build()?;
    let mut csv_out = sink.as_mut().map(csv::Writer::from_writer);
    let mut rows = Vec::new();
    let mut sizes = Vec::new();
    for &n in &config.sizes {
        let size_rows = pool.install(|| run_size(config, n));
        let size_rows = match size_rows {
            Ok(r) => r,
            Err(e) => {
                if let Some(w) = csv_out.as_mut() {
                    w.flush()?;
                }
                return Err(e.context(format!("size {n}")));
            }
        };
        if let Some(w) = csv_out.as_mut() {
            for row in &size_rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        let mut errors: Vec<f64> = size_rows.iter().map(|r| r.error).collect();
        let identifiable = size_rows.iter().filter(|r| r.identifiable).count() as f64 / size_rows.len() as f64;
        sizes.push(SizeSummary {
            n,
            median_error: median(&mut errors),
            identifiable_fraction: identifiable,
            used_in_fit: identifiable >= FIT_IDENTIFIABLE_FRACTION,
        });
        rows.extend(size_rows);
    }
    let points: Vec<(usize, f64)> = sizes.iter().filter(|s| s.used_in_fit).map(|s| (s.n, s.median_error)).collect();
    Ok(ExperimentResult { rows, sizes, fit: RateFit::fit(&points), epsilon: config.epsilon })
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

pub fn rows_to_csv(rows: &[Row]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn size_seed(config: &ExperimentConfig, n: usize) -> u64 {
    derive_seed(config.seed, n as u64)
}

fn sat_instance(config: &ExperimentConfig, n: usize) -> anyhow::Result<CnfFormula> {
    Ok(match &config.instance {
        InstanceSource::GadgetUnion { gadget_vars, k, d, clauses, gadget_seed } => {
            let seed = gadget_seed.unwrap_or_else(|| derive_seed(config.seed, u64::MAX));
            let gadget = gen_random_satisfiable(*gadget_vars, *k, *d, *clauses, seed)?;
            gen_gadget_union(&gadget, n / gadget_vars)?
        }
        InstanceSource::UniqueSat { k } => gen_unique_sat(n, *k)?,
        InstanceSource::Formula { path } => {
            let f = formats::parse_dimacs(&formats::read_text(path)?)?;
            ensure!(f.num_vars() == n, "formula has {} variables but size {n} was requested", f.num_vars());
            f
        }
        _ => bail!("not a SAT instance source"),
    })
}

fn coloring_instance(config: &ExperimentConfig, n: usize) -> anyhow::Result<(SimpleGraph, ConstraintGraph)> {
    Ok(match &config.instance {
        InstanceSource::RandomGraph { d, q } => {
            (gen_random_graph(n, *d, size_seed(config, n))?, ConstraintGraph::complete(*q)?)
        }
        InstanceSource::Graph { graph, h } => {
            let g = formats::read_json::<formats::GraphFile>(graph)?.to_graph()?;
            let h = formats::read_json::<formats::ConstraintFile>(h)?.to_constraint()?;
            ensure!(g.num_vertices() == n, "graph has {} vertices but size {n} was requested", g.num_vertices());
            (g, h)
        }
        _ => bail!("not a coloring instance source"),
    })
}

fn run_size(config: &ExperimentConfig, n: usize) -> anyhow::Result<Vec<Row>> {
    let label = config.sampler.label(n);
    let steps = config.sampler.steps(n);
    let base = size_seed(config, n);
    match config.model {
        ModelKind::Sat => {
            let f = sat_instance(config, n)?;
            let beta = config.beta_star[0];
            // Glauber chains start from a uniform satisfying assignment
            let (sampler, chain) = match config.sampler {
                SamplerSpec::Exact => (ProductSampler::new(&f, beta).context("building the exact sampler")?, false),
                SamplerSpec::Glauber { .. } => (ProductSampler::new(&f, 0.0)?, true),
            };
            (0..config.replicates)
                .into_par_iter()
                .map(|rep| {
                    let seed = derive_seed(base, rep as u64);
                    let mut rng = seeded_rng(seed);
                    let mut sigma = sampler.sample(&mut rng);
                    if chain {
                        sigma = sat_glauber(&f, beta, &sigma, steps, derive_seed(seed, 1))?;
                    }
                    let report = sat_estimate(&f, &sigma, config.bound)?;
                    Ok(Row {
                        n,
                        replicate: rep,
                        seed,
                        sampler: label.clone(),
                        error: (report.beta_hat - beta).abs(),
                        clamped: report.clamped,
                        certificate: hess(&f, &sigma, report.beta_hat)?,
                        identifiable: report.identifiable,
                        beta_hat: report.beta_hat.to_string(),
                    })
                })
                .collect()
        }
        ModelKind::Coloring => {
            let (g, h) = coloring_instance(config, n)?;
            let beta = formats::beta_from_values(&config.beta_star, h.q())?;
            let exact = match config.sampler {
                SamplerSpec::Exact => Some(ColoringProductSampler::new(&g, &h, &beta)?),
                SamplerSpec::Glauber { .. } => None,
            };
            (0..config.replicates)
                .into_par_iter()
                .map(|rep| {
                    let seed = derive_seed(base, rep as u64);
                    let sigma = match &exact {
                        Some(s) => s.sample(&mut seeded_rng(seed)),
                        None => {
                            let start = find_valid_coloring(&g, &h, seed)?;
                            coloring_glauber(&g, &h, &beta, &start, steps, derive_seed(seed, 1))?
                        }
                    };
                    let report = coloring_estimate(&g, &h, &sigma, config.bound)?;
                    let error = report
                        .beta_hat
                        .free()
                        .iter()
                        .zip(beta.free())
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    Ok(Row {
                        n,
                        replicate: rep,
                        seed,
                        sampler: label.clone(),
                        error,
                        clamped: !report.clamped_coords.is_empty(),
                        certificate: report.min_hessian_eig_bound,
                        identifiable: report.identifiable,
                        beta_hat: report.beta_hat.free().iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                    })
                })
                .collect()
        }
    }
}

/// Exact law of the heat-bath chain after `steps` updates from `start`,
/// propagated over the enumerated support, and its total variation distance
/// to the stationary law.
pub fn glauber_tv_after(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    beta: &BetaVector,
    start: &Coloring,
    steps: u64,
) -> anyhow::Result<f64> {
    let target = hardmrf_core::coloring::enumerate_distribution(g, h, beta)?;
    let n = g.num_vertices();
    let q = h.q();
    let index: HashMap<u64, usize> = target.codes().iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let moves: Vec<Vec<(usize, f64)>> = target
        .codes()
        .par_iter()
        .map(|&code| {
            let sigma = Coloring::from_code(code, n, q);
            glauber_transitions(g, h, beta, &sigma).map(|t| t.into_iter().map(|(c, p)| (index[&c], p)).collect())
        })
        .collect::<Result<_, _>>()?;
    let mut law = vec![0.0; target.len()];
    law[*index.get(&start.to_code(q)).context("start is not a valid coloring")?] = 1.0;
    let mut next = vec![0.0; law.len()];
    for _ in 0..steps {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (from, &p) in law.iter().enumerate() {
            if p != 0.0 {
                for &(to, t) in &moves[from] {
                    next[to] += p * t;
                }
            }
        }
        std::mem::swap(&mut law, &mut next);
    }
    let states: Vec<(u64, f64)> = target
        .codes()
        .iter()
        .zip(&law)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&c, &p)| (c, p.ln()))
        .collect();
    Ok(ExactDistribution::from_log_weights(states)?.total_variation(&target))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_power_law() {
        let points: Vec<(usize, f64)> = [64, 128, 256, 512].iter().map(|&n| (n, 3.0 / (n as f64).sqrt())).collect();
        let fit = RateFit::fit(&points).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!(fit.slope_std_error < 1e-10);
        assert!(RateFit::fit(&points[..2]).is_none());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = ExperimentConfig {
            model: ModelKind::Sat,
            instance: InstanceSource::UniqueSat { k: 2 },
            beta_star: vec![0.3],
            sizes: vec![4, 8],
            replicates: 1,
            sampler: SamplerSpec::Exact,
            bound: 5.0,
            seed: 0,
            epsilon: None,
            output: None,
        };
        assert!(cfg.validate().is_ok());
        cfg.sizes = vec![8, 4];
        assert!(cfg.validate().is_err());
        cfg.sizes = vec![4];
        cfg.beta_star = vec![6.0];
        assert!(cfg.validate().is_err());
        cfg.beta_star = vec![0.3];
        cfg.model = ModelKind::Coloring;
        assert!(cfg.validate().is_err());
    }
}
