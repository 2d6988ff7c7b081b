use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surprise_core::benchmarks::{generate_our, rc_degrade, OurConfig};
use surprise_core::embedding::{
    embed, partition_ensemble, peak_walk, write_coords_tsv, write_walk_csv, DistanceMatrix,
    EmbeddingConfig, EnsembleConfig,
};
use surprise_core::exhaustive::{best_partitions, Quality, MAX_NODES};
use surprise_core::metrics::{fragmentation, modularity, pielou, vi, FragmentationReport};
use surprise_core::randoms::{gamma_mle_continuous, gamma_mle_discrete, lnl_continuous, lnl_discrete};
use surprise_core::{partition_stats, Graph, Partition, SurpriseState};

#[derive(Parser)]
#[command(name = "surprise", version, about = "Community detection by surprise maximization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a partition maximizing surprise.
    Detect(DetectArgs),
    /// Generate or degrade benchmark networks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Evaluate metrics on partitions.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Exhaustively search all partitions of a small graph.
    Oracle(OracleArgs),
    /// Fit a power-law exponent by maximum likelihood.
    Mle(MleArgs),
    /// Partition-landscape tools.
    #[command(subcommand)]
    Landscape(LandscapeCommand),
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Temperature for annealing sweeps run after the greedy pass.
    #[arg(long, requires = "anneal_sweeps")]
    anneal_temp: Option<f64>,
    #[arg(long, requires = "anneal_temp")]
    anneal_sweeps: Option<usize>,
    /// Partition file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Degraded cliques with singletons.
    Our(OurArgs),
    /// Remove and rewire a percentage of links.
    Rc(RcArgs),
}

#[derive(Args)]
struct OurArgs {
    #[arg(long)]
    ncliques: usize,
    #[arg(long)]
    pielou: f64,
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    #[arg(long)]
    cycle: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_edges: PathBuf,
    #[arg(long)]
    out_truth: PathBuf,
}

#[derive(Args)]
struct RcArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long = "R", alias = "pct")]
    pct: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge list to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalCommand {
    Vi {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        normalized: bool,
    },
    /// Pielou index of a partition's community sizes.
    Pielou {
        #[arg(long, conflicts_with = "sizes", required_unless_present = "sizes")]
        partition: Option<PathBuf>,
        /// Comma-separated size list.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Fragmentation report as a CSV header and row.
    Frag {
        #[arg(long)]
        initial: PathBuf,
        #[arg(long)]
        found: PathBuf,
    },
    Surprise {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        partition: PathBuf,
    },
    Modularity {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        partition: PathBuf,
    },
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "surprise")]
    quality: Quality,
}

#[derive(Args)]
struct MleArgs {
    /// One sample per line.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    discrete: bool,
    #[arg(long)]
    x0: Option<f64>,
}

#[derive(Subcommand)]
enum LandscapeCommand {
    /// Planar coordinates reproducing a distance matrix.
    Embed {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        dlim: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TSV file to write; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cumulative distance over the highest-valued partitions.
    Walk {
        #[arg(long)]
        values: PathBuf,
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = 100)]
        top: usize,
        /// CSV file to write; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample partitions by annealing and write their distances and qualities.
    Ensemble {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = EnsembleConfig::default().runs)]
        runs: usize,
        #[arg(long, default_value_t = EnsembleConfig::default().sweeps)]
        sweeps: usize,
        #[arg(long, default_value_t = EnsembleConfig::default().temperature)]
        temp: f64,
        /// Directory receiving partitions.txt, dist.txt, surprise.txt and modularity.txt.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// FNV-1a, used to give each labelled consumer its own RNG stream.
fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label));
    rng
}

fn load_graph(path: &Path) -> Result<Graph> {
    Graph::load_edge_list(path).with_context(|| format!("reading graph {}", path.display()))
}

fn load_partition(path: &Path) -> Result<Partition> {
    Partition::load(path).with_context(|| format!("reading partition {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Runs `f` on a buffered file, or on stdout when no path is given.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t
            .parse()
            .with_context(|| format!("{}:{}: invalid number {t:?}", path.display(), i + 1))?;
        out.push(v);
    }
    Ok(out)
}

fn detect(args: &DetectArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let seed = stream(args.seed, "detect").random();
    let mut st = SurpriseState::new(&g, seed);
    st.stepper();
    if let (Some(t), Some(sweeps)) = (args.anneal_temp, args.anneal_sweeps) {
        for _ in 0..sweeps {
            st.anneal_step(t)?;
        }
        st.stepper();
    }
    if let Some(out) = &args.out {
        st.partition().save(out)?;
    }
    println!(
        "K={} n={} Nc={} M={} ell={} S={}",
        g.node_count(),
        g.link_count(),
        st.community_count(),
        st.intra_pairs(),
        st.intra_links(),
        st.surprise()
    );
    Ok(())
}

fn bench_our(args: &OurArgs) -> Result<()> {
    let cfg = OurConfig {
        ncliques: args.ncliques,
        pielou: args.pielou,
        nodes: args.nodes,
        r: args.r,
        p: args.p,
        q: args.q,
        cycle: args.cycle,
    };
    let mut rng = stream(args.seed, "bench-our");
    let net = generate_our(&cfg, &mut rng)?;
    net.graph.save_edge_list(&args.out_edges)?;
    net.truth.save(&args.out_truth)?;
    println!(
        "K={} n={} Nc={} in={} out={} pielou={}",
        net.graph.node_count(),
        net.graph.link_count(),
        net.truth.community_count(),
        net.inclique_count,
        net.between_count,
        pielou(&net.cliques)?
    );
    Ok(())
}

fn bench_rc(args: &RcArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let mut rng = stream(args.seed, "bench-rc");
    let out = rc_degrade(&g, args.pct, &mut rng)?;
    with_output(args.out.as_deref(), |w| Ok(out.write_edge_list(w)?))?;
    if args.out.is_some() {
        println!("K={} n={}", out.node_count(), out.link_count());
    }
    Ok(())
}

fn eval(cmd: &EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Vi { a, b, normalized } => {
            println!("{}", vi(&load_partition(a)?, &load_partition(b)?, *normalized)?);
        }
        EvalCommand::Pielou { partition, sizes } => {
            let sizes = match (partition, sizes) {
                (Some(p), _) => load_partition(p)?.sizes(),
                (None, Some(s)) => s.clone(),
                (None, None) => bail!("give --partition or --sizes"),
            };
            println!("{}", pielou(&sizes)?);
        }
        EvalCommand::Frag { initial, found } => {
            let r = fragmentation(&load_partition(initial)?, &load_partition(found)?)?;
            println!("{}", FragmentationReport::CSV_HEADER);
            println!("{}", r.csv_row());
        }
        EvalCommand::Surprise { graph, partition } => {
            let (_, _, s) = partition_stats(&load_graph(graph)?, &load_partition(partition)?)?;
            println!("{s}");
        }
        EvalCommand::Modularity { graph, partition } => {
            println!("{}", modularity(&load_graph(graph)?, &load_partition(partition)?)?);
        }
    }
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    if g.node_count() > MAX_NODES {
        bail!(
            "refusing exhaustive search on {} nodes (limit {MAX_NODES})",
            g.node_count()
        );
    }
    let r = best_partitions(&g, args.quality)?;
    println!(
        "quality={} best={} maximizers={} evaluated={}",
        args.quality,
        r.best,
        r.maximizers.len(),
        r.evaluated
    );
    for p in &r.maximizers {
        let labels: Vec<String> = p.canonical_labels().iter().map(ToString::to_string).collect();
        println!("{}", labels.join(" "));
    }
    Ok(())
}

fn mle(args: &MleArgs) -> Result<()> {
    let values = read_numbers(&args.samples)?;
    if args.discrete {
        let x0 = args.x0.unwrap_or(1.0);
        if x0 < 1.0 || x0.fract() != 0.0 {
            bail!("--x0 must be a positive integer for discrete samples");
        }
        let ks = values
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as u64)
                } else {
                    bail!("discrete samples must be non-negative integers, got {v}")
                }
            })
            .collect::<Result<Vec<u64>>>()?;
        let g = gamma_mle_discrete(&ks, x0 as u64)?;
        println!("gamma={g} lnL={}", lnl_discrete(&ks, g, x0 as u64)?);
    } else {
        let x0 = match args.x0 {
            Some(x) => x,
            None => values.iter().copied().fold(f64::INFINITY, f64::min),
        };
        let g = gamma_mle_continuous(&values, x0)?;
        println!("gamma={g} lnL={}", lnl_continuous(&values, g, x0)?);
    }
    Ok(())
}

fn load_matrix(path: &Path) -> Result<DistanceMatrix> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    DistanceMatrix::read(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

fn landscape(cmd: &LandscapeCommand) -> Result<()> {
    match cmd {
        LandscapeCommand::Embed {
            dist,
            gamma,
            dlim,
            seed,
            out,
        } => {
            let d = load_matrix(dist)?;
            let cfg = EmbeddingConfig {
                gamma_exp: *gamma,
                d_lim: *dlim,
                ..Default::default()
            };
            let e = embed(&d, &cfg, &mut stream(*seed, "embed"))?;
            with_output(out.as_deref(), |w| Ok(write_coords_tsv(&e.coords, w)?))?;
            eprintln!(
                "chi2={} grad_norm={} termination={} iterations={}",
                e.chi2, e.grad_norm, e.termination, e.iterations
            );
        }
        LandscapeCommand::Walk {
            values,
            dist,
            top,
            out,
        } => {
            let v = read_numbers(values)?;
            let d = load_matrix(dist)?;
            let walk = peak_walk(&v, &d, *top)?;
            with_output(out.as_deref(), |w| Ok(write_walk_csv(&walk, w)?))?;
        }
        LandscapeCommand::Ensemble {
            graph,
            seed,
            runs,
            sweeps,
            temp,
            out_dir,
        } => {
            let g = load_graph(graph)?;
            let cfg = EnsembleConfig {
                runs: *runs,
                sweeps: *sweeps,
                temperature: *temp,
            };
            let parts = partition_ensemble(&g, &cfg, stream(*seed, "ensemble").random())?;
            std::fs::create_dir_all(out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let mut w = create(&out_dir.join("partitions.txt"))?;
            for p in &parts {
                let labels: Vec<String> = p.labels().iter().map(ToString::to_string).collect();
                writeln!(w, "{}", labels.join(" "))?;
            }
            w.flush()?;
            let d = DistanceMatrix::from_partitions(&parts, true)?;
            let mut w = create(&out_dir.join("dist.txt"))?;
            d.write(&mut w)?;
            w.flush()?;
            let mut ws = create(&out_dir.join("surprise.txt"))?;
            let mut wq = create(&out_dir.join("modularity.txt"))?;
            for p in &parts {
                writeln!(ws, "{}", partition_stats(&g, p)?.2)?;
                writeln!(wq, "{}", modularity(&g, p)?)?;
            }
            ws.flush()?;
            wq.flush()?;
            println!("partitions={}", parts.len());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect(a) => detect(&a),
        Command::Bench(BenchCommand::Our(a)) => bench_our(&a),
        Command::Bench(BenchCommand::Rc(a)) => bench_rc(&a),
        Command::Eval(c) => eval(&c),
        Command::Oracle(a) => oracle(&a),
        Command::Mle(a) => mle(&a),
        Command::Landscape(c) => landscape(&c),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
