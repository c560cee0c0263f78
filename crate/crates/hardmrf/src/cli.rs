//! Command-line surface: `sample`, `estimate`, `check`, `gen` and
//! `experiment`.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use hardmrf_core::coloring::instances::{
    cliques_instance, cycle_instance, gen_random_graph, gen_random_permissive, star_instance,
};
use hardmrf_core::coloring::{self, BetaVector, ConstraintGraph, SimpleGraph};
use hardmrf_core::conditions::{
    check_dobrushin, check_ds, estimate_condition_probability, free_energy, influence_matrix, kl_exact, SampleSource,
};
use hardmrf_core::sat::instances::{gen_gadget_union, gen_random_satisfiable, gen_unique_sat, verify_unique};
use hardmrf_core::sat::lll::{find_marking, flip_preconditions, solve_lambda, verify_flip_bounds};
use hardmrf_core::sat::{self, CnfFormula};
use hardmrf_core::{derive_seed, seeded_rng};
use serde_json::{json, Map, Value};

use crate::experiment::{self, default_glauber_steps, ExperimentConfig};
use crate::formats::{self, ConstraintFile, DistributionFile, GraphFile, MarkingFile};

#[derive(Debug, Parser)]
#[command(name = "hardmrf", version, about = "Pseudo-likelihood estimation for hard-constrained Gibbs models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw samples from a SAT or coloring model.
    Sample(SampleArgs),
    /// Run the maximum pseudo-likelihood estimator on one sample.
    Estimate(EstimateArgs),
    /// Evaluate counts, conditions and exact quantities of a model.
    Check(CheckArgs),
    /// Generate instances.
    Gen(GenArgs),
    /// Run a replicated rate experiment from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Sat,
    Coloring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sampler {
    Exact,
    Glauber,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// DIMACS formula (SAT).
    #[arg(long)]
    pub formula: Option<PathBuf>,
    /// Graph JSON (coloring).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Constraint graph JSON (coloring).
    #[arg(long = "H")]
    pub h: Option<PathBuf>,
    /// Comma-separated weights or a JSON array file.
    #[arg(long)]
    pub beta: Option<String>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "exact")]
    pub sampler: Sampler,
    /// Glauber updates; defaults to ⌈10 n ln n⌉.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; one sample is written bare, several as an array.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the enumerated law here.
    #[arg(long)]
    pub distribution: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub sample: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    pub bound: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of satisfying assignments (SAT) or valid colorings.
    #[arg(long)]
    pub count: bool,
    /// Whether the formula has exactly one satisfying assignment.
    #[arg(long)]
    pub unique: bool,
    #[arg(long)]
    pub dobrushin: bool,
    #[arg(long)]
    pub ds: bool,
    /// Write the influence matrix as CSV.
    #[arg(long)]
    pub influence_csv: Option<PathBuf>,
    /// Monte Carlo frequency of the two-rainbow event.
    #[arg(long)]
    pub rainbow: bool,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub sampler: Sampler,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `KL(P_beta ‖ P_gamma)` by enumeration.
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub free_energy: bool,
    /// The marking fraction λ and 2/λ.
    #[arg(long)]
    pub lambda: bool,
    /// Exact `Pr[e_i]`, `Pr[g_i]` and the preconditions for 1-based `--var`.
    #[arg(long, requires_all = ["marking", "var"])]
    pub flip_bounds: bool,
    #[arg(long)]
    pub marking: Option<PathBuf>,
    #[arg(long)]
    pub var: Option<usize>,
    /// Nominal clause width for the preconditions; defaults to the maximum
    /// width.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub theta: f64,
    /// Validate a sample file against the model.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("kind").required(true).args([
    "unique_sat", "random_sat", "gadget_union", "star", "cycle", "cliques", "random_graph", "permissive", "marking",
])))]
pub struct GenArgs {
    #[arg(long)]
    pub unique_sat: bool,
    #[arg(long)]
    pub random_sat: bool,
    /// `--copies` copies of the `--formula` gadget.
    #[arg(long)]
    pub gadget_union: bool,
    #[arg(long)]
    pub star: bool,
    #[arg(long)]
    pub cycle: bool,
    #[arg(long)]
    pub cliques: bool,
    #[arg(long)]
    pub random_graph: bool,
    /// A random constraint graph on `--q` colors with `--color` unconstrained.
    #[arg(long)]
    pub permissive: bool,
    /// A marking of `--formula`.
    #[arg(long)]
    pub marking: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub leaves: Option<usize>,
    #[arg(long)]
    pub copies: Option<usize>,
    /// 1-based color.
    #[arg(long)]
    pub color: Option<usize>,
    #[arg(long)]
    pub formula: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub max_rounds: u64,
    /// Formula, marking, graph or constraint-graph output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Constraint-graph output for graph instances.
    #[arg(long)]
    pub h_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output; overrides the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for failures: 2 for invalid input, 3 for model errors.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use hardmrf_core::Error as E;
    for cause in err.chain() {
        let model = cause
            .downcast_ref::<E>()
            .or_else(|| match cause.downcast_ref::<formats::FormatError>() {
                Some(formats::FormatError::Model(e)) => Some(e),
                _ => None,
            });
        if let Some(e) = model {
            return match e {
                E::NotSatisfying
                | E::InvalidColoring
                | E::EmptySupport
                | E::TooLarge { .. }
                | E::ComponentTooLarge { .. }
                | E::MarkingNotFound { .. }
                | E::GenerationBudgetExceeded { .. }
                | E::InconsistentConditioning => 3,
                _ => 2,
            };
        }
    }
    2
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sample(a) => cmd_sample(&a),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Gen(a) => cmd_gen(&a),
        Command::Experiment(a) => cmd_experiment(&a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => formats::write_text(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let written = stdout.write_all(text.as_bytes()).and_then(|_| {
                if text.ends_with('\n') {
                    Ok(())
                } else {
                    stdout.write_all(b"\n")
                }
            });
            match written {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

/// Comma-separated numbers, or a path to a JSON array of numbers.
pub fn parse_beta_arg(s: &str) -> anyhow::Result<Vec<f64>> {
    let parsed: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match parsed {
        Ok(v) => Ok(v),
        Err(_) => Ok(formats::read_json(Path::new(s)).with_context(|| format!("reading beta from {s}"))?),
    }
}

enum Loaded {
    Sat { formula: CnfFormula, beta: Option<f64> },
    Coloring { g: SimpleGraph, h: ConstraintGraph, beta: Option<BetaVector> },
}

fn load(m: &ModelArgs) -> anyhow::Result<Loaded> {
    let raw = m.beta.as_deref().map(parse_beta_arg).transpose()?;
    match m.model {
        Model::Sat => {
            let path = m.formula.as_ref().context("--formula is required for the SAT model")?;
            let formula = formats::parse_dimacs(&formats::read_text(path)?)?;
            let beta = match raw {
                Some(v) => {
                    ensure!(v.len() == 1, "SAT beta takes one value, got {}", v.len());
                    Some(v[0])
                }
                None => None,
            };
            Ok(Loaded::Sat { formula, beta })
        }
        Model::Coloring => {
            let g = formats::read_json::<GraphFile>(m.graph.as_ref().context("--graph is required for colorings")?)?
                .to_graph()?;
            let h = formats::read_json::<ConstraintFile>(m.h.as_ref().context("--H is required for colorings")?)?
                .to_constraint()?;
            let beta = raw.map(|v| formats::beta_from_values(&v, h.q())).transpose()?;
            Ok(Loaded::Coloring { g, h, beta })
        }
    }
}

fn cmd_sample(a: &SampleArgs) -> anyhow::Result<()> {
    ensure!(a.count >= 1, "--count must be at least 1");
    let mut rng = seeded_rng(a.seed);
    let samples: Vec<Value> = match load(&a.model)? {
        Loaded::Sat { formula, beta } => {
            let beta = beta.context("--beta is required")?;
            if let Some(path) = &a.distribution {
                let dist = sat::enumerate_distribution(&formula, beta)?;
                formats::write_text(path, &formats::to_json(&DistributionFile::from_sat(&dist, formula.num_vars()))?)?;
            }
            let steps = a.steps.unwrap_or_else(|| default_glauber_steps(formula.num_vars()));
            let exact = sat::ProductSampler::new(&formula, if a.sampler == Sampler::Exact { beta } else { 0.0 })?;
            (0..a.count)
                .map(|i| {
                    let mut sigma = exact.sample(&mut rng);
                    if a.sampler == Sampler::Glauber {
                        sigma = sat::sample_glauber(&formula, beta, &sigma, steps, derive_seed(a.seed, i as u64))?;
                    }
                    Ok(json!(formats::assignment_to_values(&sigma)))
                })
                .collect::<anyhow::Result<_>>()?
        }
        Loaded::Coloring { g, h, beta } => {
            let beta = beta.context("--beta is required")?;
            if let Some(path) = &a.distribution {
                let dist = coloring::enumerate_distribution(&g, &h, &beta)?;
                let file = DistributionFile::from_coloring(&dist, g.num_vertices(), h.q());
                formats::write_text(path, &formats::to_json(&file)?)?;
            }
            let steps = a.steps.unwrap_or_else(|| default_glauber_steps(g.num_vertices()));
            let exact = match a.sampler {
                Sampler::Exact => Some(coloring::ColoringProductSampler::new(&g, &h, &beta)?),
                Sampler::Glauber => None,
            };
            (0..a.count)
                .map(|i| {
                    let sigma = match &exact {
                        Some(s) => s.sample(&mut rng),
                        None => {
                            let seed = derive_seed(a.seed, i as u64);
                            let start = coloring::find_valid_coloring(&g, &h, seed)?;
                            coloring::sample_glauber(&g, &h, &beta, &start, steps, derive_seed(seed, 1))?
                        }
                    };
                    Ok(json!(formats::coloring_to_values(&sigma)))
                })
                .collect::<anyhow::Result<_>>()?
        }
    };
    let value = if samples.len() == 1 { samples.into_iter().next().unwrap() } else { Value::Array(samples) };
    emit(a.out.as_deref(), &serde_json::to_string(&value)?)
}

fn cmd_estimate(a: &EstimateArgs) -> anyhow::Result<()> {
    let text = match load(&a.model)? {
        Loaded::Sat { formula, .. } => {
            let sigma = formats::assignment_from_values(&formats::read_json::<Vec<u8>>(&a.sample)?)?;
            formats::to_json(&sat::mpl::mpl_estimate(&formula, &sigma, a.bound)?)?
        }
        Loaded::Coloring { g, h, .. } => {
            let values = formats::read_json::<Vec<usize>>(&a.sample)?;
            let sigma = formats::coloring_from_values(&values, h.q())?;
            formats::to_json(&coloring::mpl::mpl_estimate(&g, &h, &sigma, a.bound)?)?
        }
    };
    emit(a.out.as_deref(), &text)
}

fn sample_source(sampler: Sampler, steps: Option<u64>, n: usize) -> SampleSource {
    match sampler {
        Sampler::Exact => SampleSource::Exact,
        Sampler::Glauber => SampleSource::Glauber { steps: steps.unwrap_or_else(|| default_glauber_steps(n)) },
    }
}

fn cmd_check(a: &CheckArgs) -> anyhow::Result<()> {
    let mut report = Map::new();
    if a.lambda {
        let lambda = solve_lambda();
        report.insert("lambda".into(), json!(lambda));
        report.insert("two_over_lambda".into(), json!(2.0 / lambda));
    }
    match load(&a.model)? {
        Loaded::Sat { formula, beta } => {
            for (flag, name) in [(a.dobrushin, "--dobrushin"), (a.ds, "--ds"), (a.rainbow, "--rainbow")] {
                ensure!(!flag, "{name} applies to the coloring model");
            }
            if a.count {
                report.insert("count".into(), json!(sat::count_satisfying(&formula)?));
            }
            if a.unique {
                report.insert("unique".into(), json!(verify_unique(&formula)? == 1));
            }
            if a.free_energy {
                let beta = beta.context("--beta is required")?;
                report.insert("free_energy".into(), json!(sat::enumerate_distribution(&formula, beta)?.log_partition()));
            }
            if let Some(path) = &a.sample {
                let sigma = formats::assignment_from_values(&formats::read_json::<Vec<u8>>(path)?)?;
                report.insert("satisfying".into(), json!(formula.is_satisfying(&sigma)?));
            }
            if a.flip_bounds {
                let beta = beta.context("--beta is required")?;
                let marking = formats::read_json::<MarkingFile>(a.marking.as_ref().unwrap())?
                    .to_marking(formula.num_vars())?;
                let var = a.var.unwrap();
                ensure!(var >= 1 && var <= formula.num_vars(), "--var must lie in 1..={}", formula.num_vars());
                let k = a.k.unwrap_or(formula.stats().width_max);
                let pre = flip_preconditions(&formula, beta, var - 1, &marking, k, a.theta)?;
                let bounds = verify_flip_bounds(&formula, beta, var - 1, &marking)?;
                report.insert("preconditions".into(), serde_json::to_value(pre)?);
                report.insert("flip_bounds".into(), serde_json::to_value(bounds)?);
            }
            ensure!(a.gamma.is_none() && a.influence_csv.is_none(), "--gamma and --influence-csv apply to colorings");
        }
        Loaded::Coloring { g, h, beta } => {
            if a.count {
                let mut count = 0u64;
                coloring::for_each_valid_coloring(&g, &h, hardmrf_core::DEFAULT_MAX_ENUM_STATES, |_, _| count += 1)?;
                report.insert("count".into(), json!(count));
            }
            ensure!(!a.unique && !a.flip_bounds, "--unique and --flip-bounds apply to the SAT model");
            let need_beta = a.dobrushin || a.ds || a.influence_csv.is_some() || a.rainbow || a.gamma.is_some() || a.free_energy;
            let beta = match beta {
                Some(b) => b,
                None if need_beta => bail!("--beta is required"),
                None => BetaVector::zeros(h.q()),
            };
            if a.dobrushin || a.ds || a.influence_csv.is_some() {
                let m = influence_matrix(&g, &h, &beta)?;
                if a.dobrushin {
                    let (holds, alpha) = check_dobrushin(&m);
                    report.insert("dobrushin".into(), json!({ "holds": holds, "alpha": alpha }));
                }
                if a.ds {
                    let (holds, alpha) = check_ds(&m);
                    report.insert("dobrushin_shlosman".into(), json!({ "holds": holds, "alpha": alpha }));
                }
                if let Some(path) = &a.influence_csv {
                    formats::write_text(path, &formats::influence_to_csv(&m)?)?;
                }
            }
            if a.rainbow {
                let source = sample_source(a.sampler, a.steps, g.num_vertices());
                let r = estimate_condition_probability(&g, &h, &beta, a.delta, a.samples, a.seed, source)?;
                report.insert("condition".into(), serde_json::to_value(r)?);
            }
            if let Some(gamma) = &a.gamma {
                let gamma = formats::beta_from_values(&parse_beta_arg(gamma)?, h.q())?;
                report.insert("kl".into(), json!(kl_exact(&g, &h, &beta, &gamma)?));
            }
            if a.free_energy {
                report.insert("free_energy".into(), json!(free_energy(&g, &h, &beta)?));
            }
            if let Some(path) = &a.sample {
                let sigma = formats::coloring_from_values(&formats::read_json::<Vec<usize>>(path)?, h.q())?;
                report.insert("valid".into(), json!(coloring::is_valid_coloring(&g, &h, &sigma)?));
            }
        }
    }
    ensure!(!report.is_empty(), "no check requested");
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&Value::Object(report))?)
}

fn need<T: Copy>(value: Option<T>, name: &str) -> anyhow::Result<T> {
    value.with_context(|| format!("--{name} is required"))
}

fn write_graph_pair(a: &GenArgs, g: &SimpleGraph, h: &ConstraintGraph) -> anyhow::Result<()> {
    emit(a.out.as_deref(), &formats::to_json(&GraphFile::from_graph(g))?)?;
    let h_text = formats::to_json(&ConstraintFile::from_constraint(h))?;
    match &a.h_out {
        Some(path) => formats::write_text(path, &h_text)?,
        None => emit(None, &h_text)?,
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> anyhow::Result<()> {
    let read_formula = || -> anyhow::Result<CnfFormula> {
        let path = a.formula.as_ref().context("--formula is required")?;
        Ok(formats::parse_dimacs(&formats::read_text(path)?)?)
    };
    if a.unique_sat {
        let f = gen_unique_sat(need(a.n, "n")?, need(a.k, "k")?)?;
        emit(a.out.as_deref(), &formats::write_dimacs(&f))
    } else if a.random_sat {
        let (n, k, d) = (need(a.n, "n")?, need(a.k, "k")?, need(a.d, "d")?);
        let m = a.m.unwrap_or((n * d / k).max(1));
        emit(a.out.as_deref(), &formats::write_dimacs(&gen_random_satisfiable(n, k, d, m, a.seed)?))
    } else if a.gadget_union {
        let f = gen_gadget_union(&read_formula()?, need(a.copies, "copies")?)?;
        emit(a.out.as_deref(), &formats::write_dimacs(&f))
    } else if a.marking {
        let f = read_formula()?;
        let marking = find_marking(&f, solve_lambda(), a.max_rounds, a.seed)?;
        emit(a.out.as_deref(), &formats::to_json(&MarkingFile::from_marking(&marking))?)
    } else if a.star {
        let (g, h) = star_instance(need(a.leaves, "leaves")?, a.q.unwrap_or(3))?;
        write_graph_pair(a, &g, &h)
    } else if a.cycle {
        let (g, h) = cycle_instance(need(a.n, "n")?)?;
        write_graph_pair(a, &g, &h)
    } else if a.cliques {
        let (g, h) = cliques_instance(need(a.n, "n")?, need(a.q, "q")?)?;
        write_graph_pair(a, &g, &h)
    } else if a.random_graph {
        let g = gen_random_graph(need(a.n, "n")?, need(a.d, "d")?, a.seed)?;
        emit(a.out.as_deref(), &formats::to_json(&GraphFile::from_graph(&g))?)
    } else if a.permissive {
        let q = need(a.q, "q")?;
        let color = need(a.color, "color")?;
        ensure!(color >= 1 && color <= q, "--color must lie in 1..={q}");
        let h = gen_random_permissive(q, color - 1, a.seed)?;
        emit(a.out.as_deref(), &formats::to_json(&ConstraintFile::from_constraint(&h))?)
    } else {
        bail!("no instance kind selected")
    }
}

fn cmd_experiment(a: &ExperimentArgs) -> anyhow::Result<()> {
    let config: ExperimentConfig = formats::read_json(&a.config)?;
    let out = a.out.clone().or_else(|| config.output.clone());
    let result = match &out {
        Some(path) => {
            let mut file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            experiment::run_experiment_streaming(&config, Some(&mut file))?
        }
        None => {
            let result = experiment::run_experiment(&config)?;
            emit(None, &experiment::rows_to_csv(&result.rows)?)?;
            result
        }
    };
    let summary = json!({ "sizes": result.sizes, "fit": result.fit, "epsilon": result.epsilon });
    if out.is_some() {
        emit(None, &serde_json::to_string_pretty(&summary)?)
    } else {
        eprintln!("{}", serde_json::to_string_pretty(&summary)?);
        Ok(())
    }
}
