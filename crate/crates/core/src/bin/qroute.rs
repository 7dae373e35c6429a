//! Command-line front end. The library and its examples are the main
//! interface; this binary wraps the common experiment entry points.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qroute::bench::{
    reference_topology, run_frozen_stress_test, run_scenario, AgentKind, Policy, ScenarioSpec, StressSchedule,
};
use qroute::env::{random_states, NetworkContext, TrafficProfile};
use qroute::model::{check_model_gradients, gradcheck_model, load_checkpoint, Architecture, DgcnnConfig};
use qroute::nn::Tensor;
use qroute::topo::{dumbbell, generate_random_topology, node_importance, nsfnet, CandidatePathTable, Topology};
use qroute::Error;

/// Adaptive flow routing with deep graph-convolutional Q-learning.
#[derive(Parser)]
#[command(name = "qroute", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the agent described by a scenario file.
    Train(RunArgs),
    /// Run the scenario with the static OSPF policy.
    Baseline(RunArgs),
    /// Replay rising offered load against frozen checkpoints and OSPF.
    StressTest(StressArgs),
    /// Finite-difference check of a down-sized DGCNN.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
    },
    /// Generate or inspect topologies.
    #[command(subcommand)]
    Topo(TopoCommand),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args)]
struct StressArgs {
    /// Checkpoint to evaluate; repeat for several models.
    #[arg(long = "checkpoint", required = true)]
    checkpoints: Vec<PathBuf>,
    /// Scenario file supplying topology and base traffic; defaults to the reference network.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for `stress.csv`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TopoCommand {
    /// Write a connected random topology as an edge list.
    Gen {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        links: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print links, node importance and candidate-path counts.
    Show {
        /// `nsfnet`, `dumbbell`, `reference`, or a path to an edge-list file.
        source: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence(_) => ExitCode::from(3),
                Error::Episode { ref source, .. } if matches!(**source, Error::Divergence(_)) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn load_spec(args: &RunArgs, force_ospf: bool) -> qroute::Result<ScenarioSpec> {
    let mut spec = ScenarioSpec::load(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(dir) = &args.output {
        spec.output_dir = Some(dir.clone());
    }
    if let Some(n) = args.episodes {
        spec.episodes = n;
    }
    if force_ospf {
        spec.agent = AgentKind::Ospf;
    }
    spec.validate()?;
    Ok(spec)
}

fn run(command: Command) -> qroute::Result<()> {
    match command {
        Command::Train(args) => scenario(load_spec(&args, false)?),
        Command::Baseline(args) => scenario(load_spec(&args, true)?),
        Command::StressTest(args) => stress(args),
        Command::Gradcheck { seed, step } => gradcheck(seed, step),
        Command::Topo(TopoCommand::Gen { nodes, links, seed, out }) => {
            let text = generate_random_topology(nodes, links, seed)?.to_edge_list();
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Topo(TopoCommand::Show { source }) => show(&topology_from(&source)?),
    }
}

fn scenario(spec: ScenarioSpec) -> qroute::Result<()> {
    log::info!("running {} ({}, {} episodes, seed {})", spec.name, spec.agent.name(), spec.episodes, spec.seed);
    let result = run_scenario(&spec)?;
    let s = &result.series;
    println!("episodes          {}", s.episodes.len());
    println!("mean reward       {:.4}", s.overall(|e| e.mean_reward));
    println!("mean throughput   {:.3} Mbps", s.overall(|e| e.mean_throughput_mbps));
    println!("mean delay        {:.4} ms", s.overall(|e| e.mean_delay_ms));
    println!("congestion rate   {:.4}", s.overall(|e| e.congestion_rate));
    if !result.reexplorations.is_empty() {
        println!("re-explorations   {:?}", result.reexplorations);
    }
    if let Some(dir) = &spec.output_dir {
        println!("artifacts in      {}", dir.display());
    }
    Ok(())
}

fn stress(args: StressArgs) -> qroute::Result<()> {
    let (topology, k, base) = match &args.spec {
        Some(path) => {
            let spec = ScenarioSpec::load(path)?;
            (spec.topology.build(spec.seed)?, spec.k, spec.traffic)
        }
        None => (reference_topology(), qroute::topo::DEFAULT_K, TrafficProfile::default()),
    };
    let mut policies = Vec::new();
    for path in &args.checkpoints {
        let model = load_checkpoint(path)?;
        let name = format!("{}:{}", model.architecture().tag(), path.display());
        policies.push((name, Policy::Greedy(model)));
    }
    policies.push(("ospf".into(), Policy::Ospf));
    let table = run_frozen_stress_test(&policies, &topology, k, &base, &StressSchedule::default(), args.seed)?;
    print!("{}", table.to_csv());
    let ospf = policies.len() - 1;
    for (i, (name, _)) in policies.iter().enumerate().take(ospf) {
        let (dt, dd) = table.relative(i, ospf, 3);
        eprintln!("{name}: throughput {dt:+.2}% and delay {dd:+.2}% vs OSPF over the three highest-load blocks");
    }
    if let Some(dir) = args.output {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("stress.csv"), table.to_csv())?;
    }
    Ok(())
}

fn gradcheck(seed: u64, step: f64) -> qroute::Result<()> {
    const TOLERANCE: f64 = 1e-4;
    let ctx = NetworkContext::new(generate_random_topology(5, 7, seed)?, 3);
    let states = random_states(&ctx, &TrafficProfile::default(), 2, 15, 3, seed)?;
    let arch = Architecture::Dgcnn(DgcnnConfig { nodes: 5, gconv: vec![8, 8], conv: [4, 4], conv2_width: 5, pool_width: 2, dense: vec![8], k: 3 });
    let model = gradcheck_model(&arch, seed);
    let coeffs = Tensor::from_vec(&[2, 3], vec![0.7, -1.3, 0.4, 1.1, 0.2, -0.9]);
    let refs: Vec<_> = states.iter().collect();
    let report = check_model_gradients(&model, &refs, &coeffs, step);
    let names = model.param_names();
    println!("checked {} parameters, max relative error {:.3e} at {}[{}]", report.checked, report.max_rel_error, names[report.worst.0], report.worst.1);
    if report.max_rel_error >= TOLERANCE {
        return Err(Error::Divergence(format!("gradient check failed: {:.3e} >= {TOLERANCE:e}", report.max_rel_error)));
    }
    Ok(())
}

fn topology_from(source: &str) -> qroute::Result<Topology> {
    Ok(match source {
        "nsfnet" => nsfnet(),
        "dumbbell" => dumbbell(),
        "reference" => reference_topology(),
        path => Topology::load(std::path::Path::new(path))?,
    })
}

fn show(topo: &Topology) -> qroute::Result<()> {
    let k = qroute::topo::DEFAULT_K;
    println!("{} nodes, {} links", topo.node_count(), topo.link_count());
    for l in topo.links() {
        println!("  {:>2} - {:<2} {:>6} Mbps {:>8.1} m", l.a, l.b, l.capacity_mbps, l.distance_m);
    }
    let importance = node_importance(topo, k);
    let table = CandidatePathTable::build(topo, k);
    println!("node  degree  importance  pairs-with-{k}-paths");
    for i in 0..topo.node_count() {
        let full = (0..topo.node_count()).filter(|&d| d != i && table.valid_count(i, d) == k).count();
        println!("{i:>4}  {:>6}  {:>10.4}  {full:>5}/{}", topo.degree(i), importance.0[i], topo.node_count() - 1);
    }
    Ok(())
}
