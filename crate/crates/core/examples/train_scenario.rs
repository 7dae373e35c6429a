//! Run a TOML-described scenario, write its artifacts and reload the checkpoint.
//!
//! cargo run --release --example train_scenario -- [scenario.toml] [output dir]

use std::path::PathBuf;

use qroute::bench::{run_scenario, write_artifacts, ScenarioSpec};
use qroute::model::load_checkpoint;

fn main() -> qroute::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = PathBuf::from(args.first().map_or(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/quick.toml"), String::as_str));
    let out = PathBuf::from(args.get(1).map_or("out/train_scenario", String::as_str));

    let spec = ScenarioSpec::load(&path)?;
    println!("{} ({} agent, {} episodes)", spec.name, spec.agent.name(), spec.episodes);
    let result = run_scenario(&ScenarioSpec { output_dir: None, ..spec.clone() })?;
    write_artifacts(&spec, &result, &out)?;

    for (e, s) in result.series.episodes.iter().enumerate().step_by((spec.episodes / 8).max(1)) {
        println!("  episode {e:>5}: reward {:.3}, throughput {:.2} Mbps, delay {:.3} ms", s.mean_reward, s.mean_throughput_mbps, s.mean_delay_ms);
    }
    println!("smoothed points: {}", result.series.smoothed.len());
    if let Some(model) = &result.model {
        let reloaded = load_checkpoint(&out.join("checkpoint.txt"))?;
        println!("checkpoint reload differs by {:e}", model.max_param_diff(&reloaded));
    }
    println!("artifacts written to {}", out.display());
    Ok(())
}
