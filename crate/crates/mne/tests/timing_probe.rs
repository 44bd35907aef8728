// Temporary probe; deleted before finalizing.
use mne::graph::{RelGraph, Triple};
use mne::trainer::{self, Model, TrainConfig};
use rand::Rng; use rand::SeedableRng; use rand_chacha::ChaCha8Rng;
fn random_graph(n_nodes: usize, n_edges: usize, n_rels: usize, seed: u64) -> RelGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples = (0..n_edges).map(|_| Triple::new(rng.gen_range(0..n_nodes), rng.gen_range(0..n_rels), rng.gen_range(0..n_nodes))).collect();
    RelGraph::build(triples, n_nodes, n_rels, None).unwrap()
}
#[test]
fn probe() {
    let warm = random_graph(1_000, 10_000, 10, 70);
    let mut c = TrainConfig::new(Model::Mne);
    c.dim = 16; c.samples = Some(20_000); c.progress = false;
    let _ = trainer::train_mne(&warm, &c).unwrap();
    for &edges in &[10_000usize, 100_000, 1_000_000] {
        let graph = random_graph(10_000, edges, 10, 71);
        for run in 0..4 {
            let mut c = TrainConfig::new(Model::Mne);
            c.dim = 16; c.samples = Some(100_000); c.seed = 1234 + run; c.progress = false;
            let r = trainer::train_mne(&graph, &c).unwrap();
            println!("edges={edges} run={run}: {:.3} us/sample", r.cpu_seconds.unwrap_or(r.seconds) * 1e6 / r.samples as f64);
        }
    }
}
