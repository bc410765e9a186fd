//! The complementary cascade behind the CIM objective.
//!
//! Two opinions spread simultaneously from their seed sets over a shared
//! live-edge sample. At t = 0 the seeds adopt deterministically. Each
//! newly adopting node gets one chance to inform each out-neighbor through
//! a live edge; the first time a node is informed of an opinion it decides
//! adoption — with probability `q_{X|none}` if it has not adopted the other
//! opinion at that moment, else `q_{X|other}` — and that decision is never
//! revisited. Within a round, A informs are processed before B informs, in
//! ascending node order, so given the per-simulation draws the cascade is a
//! deterministic function.

use rand::Rng;

use crate::bits::BitVector;
use crate::problems::CimPayload;
use crate::rng::{derive_seed, rng_from_seed};

/// Pre-drawn randomness for one simulation: shared edge liveness and one
/// adoption draw per (node, opinion).
pub struct CascadeDraws {
    pub live_edges: Vec<bool>,
    pub u_a: Vec<f64>,
    pub u_b: Vec<f64>,
}

impl CascadeDraws {
    pub fn sample(payload: &CimPayload, rng: &mut impl Rng) -> Self {
        let live_edges = payload
            .graph
            .edges
            .iter()
            .map(|&(_, _, p)| rng.gen::<f64>() < p)
            .collect();
        let u_a = (0..payload.graph.nodes).map(|_| rng.gen::<f64>()).collect();
        let u_b = (0..payload.graph.nodes).map(|_| rng.gen::<f64>()).collect();
        CascadeDraws { live_edges, u_a, u_b }
    }
}

/// Runs the deterministic cascade for given draws; returns the number of
/// B-adopters (seeds included).
pub fn cascade_b_count(payload: &CimPayload, seed_b: &[usize], draws: &CascadeDraws) -> usize {
    let n = payload.graph.nodes;
    let adj = payload.graph.out_adjacency();
    let mut adopted_a = vec![false; n];
    let mut adopted_b = vec![false; n];
    let mut decided_a = vec![false; n];
    let mut decided_b = vec![false; n];

    let mut frontier_a: Vec<usize> = Vec::new();
    for &v in &payload.seed_a {
        if !adopted_a[v] {
            adopted_a[v] = true;
            decided_a[v] = true;
            frontier_a.push(v);
        }
    }
    frontier_a.sort_unstable();
    let mut frontier_b: Vec<usize> = Vec::new();
    for &v in seed_b {
        if !adopted_b[v] {
            adopted_b[v] = true;
            decided_b[v] = true;
            frontier_b.push(v);
        }
    }
    frontier_b.sort_unstable();

    while !frontier_a.is_empty() || !frontier_b.is_empty() {
        let mut next_a = Vec::new();
        let mut next_b = Vec::new();
        for &u in &frontier_a {
            for &(edge, v, _) in &adj[u] {
                if draws.live_edges[edge] && !decided_a[v] {
                    decided_a[v] = true;
                    let threshold = if adopted_b[v] { payload.q_a_b } else { payload.q_a_none };
                    if draws.u_a[v] < threshold {
                        adopted_a[v] = true;
                        next_a.push(v);
                    }
                }
            }
        }
        for &u in &frontier_b {
            for &(edge, v, _) in &adj[u] {
                if draws.live_edges[edge] && !decided_b[v] {
                    decided_b[v] = true;
                    let threshold = if adopted_a[v] { payload.q_b_a } else { payload.q_b_none };
                    if draws.u_b[v] < threshold {
                        adopted_b[v] = true;
                        next_b.push(v);
                    }
                }
            }
        }
        next_a.sort_unstable();
        next_b.sort_unstable();
        frontier_a = next_a;
        frontier_b = next_b;
    }

    adopted_b.iter().filter(|&&a| a).count()
}

/// Mean B-adopter count over the payload's fixed-seed Monte-Carlo
/// simulations; `selected` picks `S_B` out of the candidate set.
pub fn expected_b_activations(payload: &CimPayload, selected: &BitVector) -> f64 {
    let seed_b: Vec<usize> = (0..selected.len())
        .filter(|&i| selected.get(i) == 1)
        .map(|i| payload.candidates[i])
        .collect();
    if seed_b.is_empty() {
        return 0.0;
    }
    let mut total = 0usize;
    for sim in 0..payload.simulations {
        let mut rng = rng_from_seed(derive_seed(payload.sim_seed, &["sim", &sim.to_string()]));
        let draws = CascadeDraws::sample(payload, &mut rng);
        total += cascade_b_count(payload, &seed_b, &draws);
    }
    total as f64 / payload.simulations as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::DirectedGraph;

    fn two_node_payload(simulations: usize) -> CimPayload {
        CimPayload {
            graph: DirectedGraph {
                nodes: 2,
                edges: vec![(0, 1, 1.0)],
            },
            seed_a: vec![],
            candidates: vec![0, 1],
            cap: 2,
            q_a_none: 0.5,
            q_a_b: 0.7,
            q_b_none: 0.5,
            q_b_a: 0.7,
            simulations,
            sim_seed: 99,
        }
    }

    #[test]
    fn empty_seed_set_activates_nothing() {
        let payload = two_node_payload(10);
        assert_eq!(expected_b_activations(&payload, &BitVector::zeros(2)), 0.0);
    }

    #[test]
    fn edgeless_graph_counts_only_seeds() {
        let payload = CimPayload {
            graph: DirectedGraph { nodes: 5, edges: vec![(0, 1, 0.0)] },
            seed_a: vec![],
            candidates: vec![0, 2, 4],
            cap: 3,
            q_a_none: 0.5,
            q_a_b: 0.7,
            q_b_none: 0.5,
            q_b_a: 0.7,
            simulations: 20,
            sim_seed: 3,
        };
        let x = BitVector::parse("111").unwrap();
        assert_eq!(expected_b_activations(&payload, &x), 3.0);
    }

    #[test]
    fn two_node_chain_matches_exact_value() {
        // u -> v with p = 1, S_A empty, S_B = {u}: E[count] = 1 + q_b_none = 1.5
        let simulations = 4000;
        let payload = two_node_payload(simulations);
        let x = BitVector::parse("10").unwrap();
        let got = expected_b_activations(&payload, &x);
        let se = (0.25_f64 / simulations as f64).sqrt();
        assert!((got - 1.5).abs() < 3.0 * se, "got {got}, se {se}");
    }

    #[test]
    fn deterministic_given_payload_seed() {
        let payload = two_node_payload(50);
        let x = BitVector::parse("10").unwrap();
        assert_eq!(
            expected_b_activations(&payload, &x),
            expected_b_activations(&payload, &x)
        );
    }

    // With no A seeds every B decision uses q_b_none, so raising it can only
    // turn failed adoptions into successes on the same draws.
    #[test]
    fn monotone_in_q_b_none_under_common_random_numbers() {
        let mut base = two_node_payload(200);
        base.graph = DirectedGraph {
            nodes: 6,
            edges: vec![
                (0, 1, 0.8),
                (1, 2, 0.6),
                (2, 3, 0.9),
                (0, 4, 0.5),
                (4, 5, 0.7),
                (3, 5, 0.4),
            ],
        };
        base.candidates = vec![0, 2, 4];
        base.seed_a = vec![];
        let x = BitVector::parse("100").unwrap();
        let mut last = -1.0;
        for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let mut p = base.clone();
            p.q_b_none = q;
            let value = expected_b_activations(&p, &x);
            assert!(value >= last, "q={q}: {value} < {last}");
            last = value;
        }
    }
}
