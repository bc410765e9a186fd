//! The six benchmark problem classes, their instance generators, the
//! progressive-truncation constraint wrapper, and FE accounting.
//!
//! Optimizers interact with a [`ProblemInstance`] only through
//! [`ProblemInstance::evaluate`]; every successful call costs exactly one
//! function evaluation (FE). Payloads are immutable after generation, so an
//! instance is safe to clone per trial (see [`ProblemInstance::fresh`]).

mod ca;
mod cim;
mod generate;
mod graph;
mod io;

pub use ca::{eval_ca_external, CaMode, CaMock};
pub use cim::expected_b_activations;
pub use generate::{gen_as, gen_ca_mock, gen_cim, gen_kp, gen_mc, gen_om, CimGraphSource};
pub use graph::{load_edge_list, DirectedGraph};
pub use io::{load_instance, save_instance};

use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};

/// Optimization direction of the raw objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[serde(rename = "max")]
    Maximize,
    #[serde(rename = "min")]
    Minimize,
}

impl Sense {
    /// Maps a raw objective into maximization orientation.
    pub fn orient(self, raw: f64) -> f64 {
        match self {
            Sense::Maximize => raw,
            Sense::Minimize => -raw,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Maximize => "max",
            Sense::Minimize => "min",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Sense::Maximize),
            "min" => Ok(Sense::Minimize),
            other => Err(Error::parse("sense", format!("expected max|min, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemClass {
    Om,
    Kp,
    Mc,
    Ca,
    Cim,
    As,
}

impl ProblemClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemClass::Om => "OM",
            ProblemClass::Kp => "KP",
            ProblemClass::Mc => "MC",
            ProblemClass::Ca => "CA",
            ProblemClass::Cim => "CIM",
            ProblemClass::As => "AS",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OM" => Ok(ProblemClass::Om),
            "KP" => Ok(ProblemClass::Kp),
            "MC" => Ok(ProblemClass::Mc),
            "CA" => Ok(ProblemClass::Ca),
            "CIM" => Ok(ProblemClass::Cim),
            "AS" => Ok(ProblemClass::As),
            other => Err(Error::parse("problem class", format!("unknown class {other:?}"))),
        }
    }

    pub const ALL: [ProblemClass; 6] = [
        ProblemClass::Om,
        ProblemClass::Kp,
        ProblemClass::Mc,
        ProblemClass::Ca,
        ProblemClass::Cim,
        ProblemClass::As,
    ];
}

/// One-max: reference vector, objective `d - hamming(x, reference)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmPayload {
    pub reference: BitVector,
}

/// Knapsack: co-sorted values/weights and a capacity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpPayload {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub capacity: f64,
}

/// Max cut with a cap on the size of the selected side.
///
/// `rows[i]` is row `i` of the symmetric 0/1 adjacency matrix (zero
/// diagonal); the selected side may hold at most `cap` vertices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McPayload {
    pub rows: Vec<BitVector>,
    pub cap: usize,
}

/// Complementary influence maximization.
///
/// `candidates[i]` is the node selected by bit `i`. The objective is the
/// mean number of B-activated nodes over `simulations` seeded cascades, so
/// it is a deterministic function of the payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CimPayload {
    pub graph: DirectedGraph,
    pub seed_a: Vec<usize>,
    pub candidates: Vec<usize>,
    pub cap: usize,
    pub q_a_none: f64,
    pub q_a_b: f64,
    pub q_b_none: f64,
    pub q_b_a: f64,
    pub simulations: usize,
    pub sim_seed: u64,
}

/// Anchor selection: maximize coverage of a universe by at most `cap`
/// selected sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsPayload {
    pub universe: usize,
    pub sets: Vec<Vec<u32>>,
    pub cap: usize,
}

/// Compiler-arguments optimization: minimize output size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaPayload {
    pub mode: CaMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum Payload {
    #[serde(rename = "OM")]
    Om(OmPayload),
    #[serde(rename = "KP")]
    Kp(KpPayload),
    #[serde(rename = "MC")]
    Mc(McPayload),
    #[serde(rename = "CA")]
    Ca(CaPayload),
    #[serde(rename = "CIM")]
    Cim(CimPayload),
    #[serde(rename = "AS")]
    As(AsPayload),
}

impl Payload {
    pub fn class(&self) -> ProblemClass {
        match self {
            Payload::Om(_) => ProblemClass::Om,
            Payload::Kp(_) => ProblemClass::Kp,
            Payload::Mc(_) => ProblemClass::Mc,
            Payload::Ca(_) => ProblemClass::Ca,
            Payload::Cim(_) => ProblemClass::Cim,
            Payload::As(_) => ProblemClass::As,
        }
    }
}

/// A black-box evaluator with an FE counter and optional budget.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub id: String,
    pub dim: usize,
    pub sense: Sense,
    payload: Payload,
    fe_counter: u64,
    fe_budget: Option<u64>,
}

impl ProblemInstance {
    pub fn new(id: impl Into<String>, dim: usize, payload: Payload) -> Self {
        let sense = match payload.class() {
            ProblemClass::Ca => Sense::Minimize,
            _ => Sense::Maximize,
        };
        ProblemInstance {
            id: id.into(),
            dim,
            sense,
            payload,
            fe_counter: 0,
            fe_budget: None,
        }
    }

    pub fn class(&self) -> ProblemClass {
        self.payload.class()
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn fe_count(&self) -> u64 {
        self.fe_counter
    }

    pub fn fe_budget(&self) -> Option<u64> {
        self.fe_budget
    }

    pub fn set_budget(&mut self, budget: Option<u64>) {
        self.fe_budget = budget;
    }

    pub fn remaining_budget(&self) -> Option<u64> {
        self.fe_budget.map(|b| b.saturating_sub(self.fe_counter))
    }

    /// A copy with a zeroed FE counter and no budget — one per trial.
    pub fn fresh(&self) -> ProblemInstance {
        ProblemInstance {
            id: self.id.clone(),
            dim: self.dim,
            sense: self.sense,
            payload: self.payload.clone(),
            fe_counter: 0,
            fe_budget: None,
        }
    }

    /// Evaluates a solution: applies the constraint wrapper where the class
    /// is constrained, then the class formula, and charges one FE.
    ///
    /// An evaluator failure (only possible for external CA commands) does
    /// not charge an FE.
    pub fn evaluate(&mut self, x: &BitVector) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::shape(
                format!("evaluate on {}", self.id),
                format!("{} bits", self.dim),
                format!("{} bits", x.len()),
            ));
        }
        if let Some(budget) = self.fe_budget {
            if self.fe_counter >= budget {
                return Err(Error::BudgetExhausted {
                    consumed: self.fe_counter,
                    budget,
                });
            }
        }
        let wrapped = constraint_wrapper(x, &self.payload);
        let raw = match &self.payload {
            Payload::Om(p) => (self.dim - wrapped.hamming(&p.reference)) as f64,
            Payload::Kp(p) => wrapped
                .as_slice()
                .iter()
                .zip(&p.values)
                .map(|(&bit, &v)| f64::from(bit) * v)
                .sum(),
            Payload::Mc(p) => {
                let mut cut = 0u64;
                for i in 0..self.dim {
                    if wrapped.get(i) == 1 {
                        for j in 0..self.dim {
                            if wrapped.get(j) == 0 && p.rows[i].get(j) == 1 {
                                cut += 1;
                            }
                        }
                    }
                }
                cut as f64
            }
            Payload::Cim(p) => expected_b_activations(p, &wrapped),
            Payload::As(p) => {
                let words = p.universe.div_ceil(64);
                let mut union = vec![0u64; words];
                for (i, set) in p.sets.iter().enumerate() {
                    if wrapped.get(i) == 1 {
                        for &e in set {
                            union[e as usize / 64] |= 1 << (e % 64);
                        }
                    }
                }
                union.iter().map(|w| w.count_ones() as u64).sum::<u64>() as f64
            }
            Payload::Ca(p) => match &p.mode {
                CaMode::Mock(mock) => mock.eval(&wrapped),
                CaMode::External { template, flags } => eval_ca_external(template, flags, &wrapped)?,
            },
        };
        self.fe_counter += 1;
        Ok(raw)
    }

    /// Raw objective mapped into maximization orientation.
    pub fn orient(&self, raw: f64) -> f64 {
        self.sense.orient(raw)
    }
}

/// Progressive truncation of infeasible solutions.
///
/// Scans positions left to right; at the first prefix that violates the
/// class constraint (selected weight above capacity for KP, selected count
/// above the cap for MC/CIM/AS), that position and everything after it is
/// set to 0. Feasible solutions pass through unchanged; OM and CA are
/// unconstrained.
pub fn constraint_wrapper(x: &BitVector, payload: &Payload) -> BitVector {
    match payload {
        Payload::Om(_) | Payload::Ca(_) => x.clone(),
        Payload::Kp(p) => {
            let mut weight = 0.0;
            truncate_at_violation(x, |i, bit| {
                if bit == 1 {
                    weight += p.weights[i];
                }
                weight > p.capacity
            })
        }
        Payload::Mc(p) => truncate_ones_cap(x, p.cap),
        Payload::Cim(p) => truncate_ones_cap(x, p.cap),
        Payload::As(p) => truncate_ones_cap(x, p.cap),
    }
}

fn truncate_ones_cap(x: &BitVector, cap: usize) -> BitVector {
    let mut ones = 0usize;
    truncate_at_violation(x, |_, bit| {
        if bit == 1 {
            ones += 1;
        }
        ones > cap
    })
}

fn truncate_at_violation(x: &BitVector, mut violated: impl FnMut(usize, u8) -> bool) -> BitVector {
    let mut out = x.clone();
    for i in 0..x.len() {
        if violated(i, x.get(i)) {
            for j in i..x.len() {
                out.set(j, 0);
            }
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn om_instance(reference: &str) -> ProblemInstance {
        let reference = BitVector::parse(reference).unwrap();
        let dim = reference.len();
        ProblemInstance::new("om-test", dim, Payload::Om(OmPayload { reference }))
    }

    #[test]
    fn om_hamming_extremes() {
        let mut inst = om_instance("10110");
        let x = BitVector::parse("10110").unwrap();
        assert_eq!(inst.evaluate(&x).unwrap(), 5.0);
        let complement = BitVector::parse("01001").unwrap();
        assert_eq!(inst.evaluate(&complement).unwrap(), 0.0);
        assert_eq!(inst.fe_count(), 2);
    }

    #[test]
    fn kp_wrapper_prefix_truncation() {
        let payload = Payload::Kp(KpPayload {
            values: vec![1.0, 1.0, 1.0],
            weights: vec![0.5, 0.6, 0.7],
            capacity: 1.0,
        });
        let x = BitVector::parse("111").unwrap();
        assert_eq!(constraint_wrapper(&x, &payload).to_string(), "100");
        // feasible passes through
        let x = BitVector::parse("100").unwrap();
        assert_eq!(constraint_wrapper(&x, &payload).to_string(), "100");
    }

    #[test]
    fn cap_wrapper_zero_cap_zeroes_everything() {
        let payload = Payload::As(AsPayload {
            universe: 4,
            sets: vec![vec![0], vec![1], vec![2]],
            cap: 0,
        });
        let x = BitVector::parse("011").unwrap();
        assert_eq!(constraint_wrapper(&x, &payload).to_string(), "000");
    }

    #[test]
    fn mc_triangle_cut() {
        let rows = vec![
            BitVector::parse("011").unwrap(),
            BitVector::parse("101").unwrap(),
            BitVector::parse("110").unwrap(),
        ];
        let mut inst = ProblemInstance::new("mc-test", 3, Payload::Mc(McPayload { rows, cap: 1 }));
        let x = BitVector::parse("100").unwrap();
        assert_eq!(inst.evaluate(&x).unwrap(), 2.0);
    }

    #[test]
    fn as_union_counts() {
        let payload = Payload::As(AsPayload {
            universe: 5,
            sets: vec![vec![1, 2], vec![2, 3]],
            cap: 2,
        });
        let mut inst = ProblemInstance::new("as-test", 2, payload);
        let x = BitVector::parse("11").unwrap();
        assert_eq!(inst.evaluate(&x).unwrap(), 3.0);
    }

    #[test]
    fn budget_blocks_evaluation_without_charging() {
        let mut inst = om_instance("1010");
        inst.set_budget(Some(1));
        let x = BitVector::zeros(4);
        inst.evaluate(&x).unwrap();
        let err = inst.evaluate(&x).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { consumed: 1, budget: 1 }));
        assert_eq!(inst.fe_count(), 1);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut inst = om_instance("1010");
        assert!(inst.evaluate(&BitVector::zeros(3)).is_err());
        assert_eq!(inst.fe_count(), 0);
    }

    #[test]
    fn kp_evaluator_matches_brute_force_on_random_instances() {
        let mut rng = rng_from_seed(101);
        for trial in 0..200 {
            let d = 3 + (trial % 8);
            let mut inst = gen_kp(format!("kp-{trial}"), d, &mut rng);
            let x = BitVector::random(d, &mut rng);
            let got = inst.evaluate(&x).unwrap();
            // independent route: apply B.8 by scalar loop, then sum values
            let (values, weights, capacity) = match inst.payload() {
                Payload::Kp(p) => (p.values.clone(), p.weights.clone(), p.capacity),
                _ => unreachable!(),
            };
            let mut expected = 0.0;
            let mut weight = 0.0;
            for i in 0..d {
                if x.get(i) == 1 {
                    if weight + weights[i] > capacity {
                        break;
                    }
                    weight += weights[i];
                    expected += values[i];
                }
            }
            assert!((got - expected).abs() < 1e-12, "instance {trial}");
            assert!(weight <= capacity + 1e-12);
        }
    }

    #[test]
    fn om_invariant_under_simultaneous_bit_flips() {
        let mut rng = rng_from_seed(7);
        let mut inst = gen_om("om-x", 12, &mut rng);
        let x = BitVector::random(12, &mut rng);
        let f1 = inst.evaluate(&x).unwrap();
        // flip the same position set in both x and the reference
        let (mut x2, mut reference) = match inst.payload() {
            Payload::Om(p) => (x.clone(), p.reference.clone()),
            _ => unreachable!(),
        };
        for i in [1usize, 4, 9] {
            x2.flip(i);
            reference.flip(i);
        }
        let mut inst2 = ProblemInstance::new("om-x2", 12, Payload::Om(OmPayload { reference }));
        let f2 = inst2.evaluate(&x2).unwrap();
        assert_eq!(f1, f2);
    }
}
