//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 no coalescence within `--n-max`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cftp_community::bench::{
    cc_pivot_best_of, compare_costs, gen_lfr_lite, gen_sbm, BenchModel, LfrParams, SbmParams,
};
use cftp_community::cftp::{sample_many, DEFAULT_N_MAX};
use cftp_community::detector::{detect_communities, CostKind, DetectorConfig};
use cftp_community::graph::{parse_edge_list_compact, LabelMap};
use cftp_community::{
    build_community_walk, cluster_editing_cost, parse_edge_list, Error, Graph, MarkovChain,
    Partition, WalkConfig,
};

const EXIT_INPUT: u8 = 2;
const EXIT_NOT_COALESCED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cftp-community",
    version,
    about = "Community detection with coupling from the past"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph with planted communities.
    Generate {
        #[command(subcommand)]
        model: GenerateModel,
    },
    /// Detect communities and print the result as JSON.
    Detect {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n_max: usize,
        /// Stop when the gap since the last critical time exceeds this multiple of the largest earlier gap.
        #[arg(long)]
        delta_t: Option<f64>,
        #[command(flatten)]
        seed: SeedArg,
        /// Re-index the node ids that occur in the file to 0..n and report the original labels.
        #[arg(long)]
        compact: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the cluster-editing cost of a partition.
    Cost {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        partition: PathBuf,
    },
    /// Run the CC-PIVOT baseline and print its partition as JSON.
    Pivot {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        /// Keep the cheapest of this many pivot runs.
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare detector and CC-PIVOT costs on sampled graphs.
    Bench {
        #[command(subcommand)]
        model: BenchCmd,
    },
    /// Print exact stationary samples of the walk (or of a chain file).
    Sample {
        #[arg(long, conflicts_with = "chain", required_unless_present = "chain")]
        graph: Option<PathBuf>,
        /// Chain JSON: {"states": [...], "rows": [[...], ...]}.
        #[arg(long)]
        chain: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n_max: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Args, Clone, Copy)]
struct WalkArgs {
    #[arg(long, default_value_t = 2)]
    r_exp: u32,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    laziness: f64,
}

impl From<WalkArgs> for WalkConfig {
    fn from(a: WalkArgs) -> Self {
        WalkConfig {
            r_exp: a.r_exp,
            epsilon: a.epsilon,
            laziness: a.laziness,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct SeedArg {
    #[arg(long, env = "CFTP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SbmArgs {
    /// Block sizes: "15,15,15,15" or "15x4".
    #[arg(long, value_parser = parse_sizes)]
    sizes: Sizes,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
}

#[derive(Args)]
struct LfrArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    tau1: f64,
    #[arg(long, default_value_t = 3.0)]
    tau2: f64,
    #[arg(long, default_value_t = 0.25)]
    mu: f64,
    #[arg(long, default_value_t = 30.0)]
    avg_deg: f64,
    #[arg(long, default_value_t = 20)]
    min_deg: usize,
    #[arg(long, default_value_t = 50)]
    max_deg: usize,
    #[arg(long, default_value_t = 20)]
    min_comm: usize,
    #[arg(long, default_value_t = 60)]
    max_comm: usize,
}

impl LfrArgs {
    fn params(&self, seed: u64) -> LfrParams {
        LfrParams {
            n: self.n,
            tau1: self.tau1,
            tau2: self.tau2,
            mu: self.mu,
            avg_deg: self.avg_deg,
            min_deg: self.min_deg,
            max_deg: self.max_deg,
            min_comm: self.min_comm,
            max_comm: self.max_comm,
            seed,
        }
    }
}

#[derive(Subcommand)]
enum GenerateModel {
    /// Stochastic block model; writes PREFIX.el and PREFIX.truth.json.
    Sbm {
        #[command(flatten)]
        model: SbmArgs,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simplified LFR benchmark; writes PREFIX.el and PREFIX.truth.json.
    Lfr {
        #[command(flatten)]
        model: LfrArgs,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BenchOpts {
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// CC-PIVOT restarts per graph (best of).
    #[arg(long, default_value_t = 1)]
    pivot_runs: usize,
    /// Walk exponents to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    r_exp: Vec<u32>,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    laziness: f64,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
    #[arg(long)]
    delta_t: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: ReportFormat,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// SBM rows; --sizes may repeat and --p/--q take comma lists (all combinations are run).
    Sbm {
        #[arg(long, value_parser = parse_sizes, required = true)]
        sizes: Vec<Sizes>,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        #[command(flatten)]
        opts: BenchOpts,
    },
    /// Simplified LFR graphs.
    Lfr {
        #[command(flatten)]
        model: LfrArgs,
        #[command(flatten)]
        opts: BenchOpts,
    },
}

#[derive(Clone)]
struct Sizes(Vec<usize>);

fn parse_sizes(text: &str) -> Result<Sizes, String> {
    let bad = || format!("invalid sizes {text:?}; use e.g. 15,15,15 or 15x3");
    let sizes: Vec<usize> = if let Some((size, count)) = text.split_once('x') {
        let size = size.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        vec![size; count]
    } else {
        text.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad());
    }
    Ok(Sizes(sizes))
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> anyhow::Result<Graph> {
    parse_edge_list(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn write_generated(prefix: &Path, g: &Graph, truth: &Partition) -> anyhow::Result<()> {
    let graph_path = prefix.with_extension("el");
    let truth_path = prefix.with_extension("truth.json");
    fs::write(&graph_path, g.to_edge_list())
        .with_context(|| format!("writing {}", graph_path.display()))?;
    fs::write(&truth_path, truth.to_json() + "\n")
        .with_context(|| format!("writing {}", truth_path.display()))?;
    Ok(())
}

/// Successful outcome of a subcommand: exit 0, or exit 3 after emitting output.
enum Outcome {
    Done,
    NotCoalesced,
}

fn run_bench(models: Vec<(String, BenchModel)>, opts: &BenchOpts) -> anyhow::Result<Outcome> {
    let mut csv = String::new();
    let mut reports = Vec::new();
    for (label, model) in models {
        for &r_exp in &opts.r_exp {
            let cfg = DetectorConfig {
                walk: WalkConfig {
                    r_exp,
                    epsilon: opts.epsilon,
                    laziness: opts.laziness,
                },
                cost: CostKind::ClusterEditing,
                delta_t_factor: opts.delta_t,
                n_max: opts.n_max,
                seed: opts.seed.seed,
            };
            let report = compare_costs(&model, opts.runs, &cfg, opts.pivot_runs, opts.seed.seed)?;
            csv.push_str(&format!("# {label} r_exp={r_exp}\n"));
            csv.push_str(&report.to_csv());
            reports.push(report);
        }
    }
    let text = match opts.format {
        ReportFormat::Csv => csv,
        ReportFormat::Json => serde_json::to_string_pretty(&reports)? + "\n",
    };
    emit(opts.output.as_deref(), &text)?;
    Ok(Outcome::Done)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Generate { model } => {
            match model {
                GenerateModel::Sbm { model, seed, out } => {
                    let (g, truth) = gen_sbm(&SbmParams {
                        cluster_sizes: model.sizes.0,
                        p: model.p,
                        q: model.q,
                        seed: seed.seed,
                    })?;
                    write_generated(&out, &g, &truth)?;
                }
                GenerateModel::Lfr { model, seed, out } => {
                    let (g, truth) = gen_lfr_lite(&model.params(seed.seed))?;
                    write_generated(&out, &g, &truth)?;
                }
            }
            Ok(Outcome::Done)
        }
        Command::Detect {
            graph,
            walk,
            n_max,
            delta_t,
            seed,
            compact,
            output,
        } => {
            let text = read(&graph)?;
            let (g, labels): (Graph, Option<LabelMap>) = if compact {
                let (g, map) = parse_edge_list_compact(&text)
                    .with_context(|| format!("parsing {}", graph.display()))?;
                (g, Some(map))
            } else {
                let g = parse_edge_list(&text)
                    .with_context(|| format!("parsing {}", graph.display()))?;
                (g, None)
            };
            let cfg = DetectorConfig {
                walk: walk.into(),
                cost: CostKind::ClusterEditing,
                delta_t_factor: delta_t,
                n_max,
                seed: seed.seed,
            };
            let result = detect_communities(&g, &cfg)?;
            let mut value = result.to_json_value();
            if let Some(map) = labels {
                value["labels"] = serde_json::json!(map.labels);
            }
            emit(output.as_deref(), &(serde_json::to_string(&value)? + "\n"))?;
            // A stop by the gap rule is requested, not a failure.
            let capped = result
                .components
                .iter()
                .any(|c| !c.coalesced && !c.stopped_early);
            Ok(if capped {
                Outcome::NotCoalesced
            } else {
                Outcome::Done
            })
        }
        Command::Cost { graph, partition } => {
            let g = load_graph(&graph)?;
            let p = Partition::from_json(&read(&partition)?, g.n()).with_context(|| {
                format!("partition {} does not match graph", partition.display())
            })?;
            emit(None, &format!("{}\n", cluster_editing_cost(&g, &p)?))?;
            Ok(Outcome::Done)
        }
        Command::Pivot {
            graph,
            seed,
            runs,
            output,
        } => {
            let g = load_graph(&graph)?;
            let (p, _) = cc_pivot_best_of(&g, seed.seed, runs)?;
            emit(output.as_deref(), &(p.to_json() + "\n"))?;
            Ok(Outcome::Done)
        }
        Command::Bench { model } => match model {
            BenchCmd::Sbm { sizes, p, q, opts } => {
                let mut models = Vec::new();
                for Sizes(s) in &sizes {
                    for &pp in &p {
                        for &qq in &q {
                            let label = format!(
                                "sbm sizes={} p={pp} q={qq}",
                                s.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
                            );
                            let model = BenchModel::Sbm {
                                cluster_sizes: s.clone(),
                                p: pp,
                                q: qq,
                            };
                            // Reject bad rows before any work is done.
                            model.sample(0)?;
                            models.push((label, model));
                        }
                    }
                }
                run_bench(models, &opts)
            }
            BenchCmd::Lfr { model, opts } => {
                let params = model.params(0);
                params.validate()?;
                let label = format!(
                    "lfr n={} tau1={} tau2={} mu={} avg_deg={}",
                    params.n, params.tau1, params.tau2, params.mu, params.avg_deg
                );
                run_bench(vec![(label, BenchModel::Lfr(params))], &opts)
            }
        },
        Command::Sample {
            graph,
            chain,
            count,
            walk,
            n_max,
            seed,
        } => {
            let chain = match (graph, chain) {
                (Some(path), None) => build_community_walk(&load_graph(&path)?, &walk.into())?,
                (None, Some(path)) => MarkovChain::from_json(&read(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                _ => bail!("exactly one of --graph or --chain is required"),
            };
            chain.check_irreducible()?;
            // A periodic chain never coalesces; reject it as bad input.
            let period = chain.period()?;
            if period > 1 {
                return Err(Error::Periodic { period }.into());
            }
            match sample_many(&chain, seed.seed, count, n_max) {
                Ok(samples) => {
                    let text: String = samples.iter().map(|s| format!("{s}\n")).collect();
                    emit(None, &text)?;
                    Ok(Outcome::Done)
                }
                Err(Error::NotCoalesced { n_max }) => {
                    eprintln!("error: no coalescence within {n_max} steps");
                    Ok(Outcome::NotCoalesced)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotCoalesced) => ExitCode::from(EXIT_NOT_COALESCED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
