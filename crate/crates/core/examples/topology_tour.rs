//! Topologies, candidate paths and node importance.
//!
//! cargo run --example topology_tour -- [nodes] [links] [seed]

use qroute::topo::{build_normalized_adjacency, generate_random_topology, k_shortest_paths, node_importance, nsfnet, Topology, DEFAULT_K};

fn describe(name: &str, topo: &Topology) {
    let n = topo.node_count();
    println!("{name}: {n} nodes, {} links", topo.link_count());
    let importance = node_importance(topo, DEFAULT_K);
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| importance.0[b].total_cmp(&importance.0[a]));
    let top: Vec<String> = ranked.iter().take(4).map(|&i| format!("{i} ({:.2})", importance.0[i])).collect();
    println!("  most important transit nodes: {}", top.join(", "));

    let (src, dest) = (0, n - 1);
    for (i, p) in k_shortest_paths(topo, src, dest, DEFAULT_K).iter().enumerate() {
        let km: f64 = p.windows(2).map(|w| topo.links()[topo.link_between(w[0], w[1]).unwrap()].distance_m).sum::<f64>() / 1e3;
        println!("  path {i} {src}->{dest}: {p:?} ({} hops, {km:.2} km)", p.len() - 1);
    }

    let a = build_normalized_adjacency(topo);
    let row_sums: Vec<String> = (0..n.min(6)).map(|i| format!("{:.3}", (0..n).map(|j| a.get(i, j)).sum::<f64>())).collect();
    println!("  normalized adjacency row sums (first rows): {}", row_sums.join(" "));
}

fn main() -> qroute::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let (nodes, links, seed) = (*args.first().unwrap_or(&9), *args.get(1).unwrap_or(&16), *args.get(2).unwrap_or(&9) as u64);
    describe("NSFNET", &nsfnet());
    describe(&format!("random({nodes}, {links}, seed {seed})"), &generate_random_topology(nodes, links, seed)?);
    Ok(())
}
