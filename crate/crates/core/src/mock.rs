//! Deterministic stand-in for a vision model: greedy degree/betweenness
//! answers with optional, exactly-rated fault injection.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::community::{detect_fastgreedy, CommunityStructure};
use crate::error::{Error, Result};
use crate::fitness::ObjectiveKind;
use crate::gateway::{GatewayRequest, GatewayResponse, TaskContext, VisionBackend};
use crate::graph::{betweenness, Graph, Label};
use crate::parse::format_node_list;
use crate::prompts::Role;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    InvalidNode,
    WrongSize,
    LowDegree,
    Duplicate,
    NonparentSource,
    RemoveNonseed,
    AddInvalid,
    AddRepeat,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultRates {
    pub invalid_node: f64,
    pub wrong_size: f64,
    pub low_degree: f64,
    pub duplicate: f64,
    pub nonparent_source: f64,
    pub remove_nonseed: f64,
    pub add_invalid: f64,
    pub add_repeat: f64,
}

impl FaultRates {
    pub fn uniform(rate: f64) -> Self {
        FaultRates {
            invalid_node: rate,
            wrong_size: rate,
            low_degree: rate,
            duplicate: rate,
            nonparent_source: rate,
            remove_nonseed: rate,
            add_invalid: rate,
            add_repeat: rate,
        }
    }

    pub fn only(fault: Fault, rate: f64) -> Self {
        let mut r = FaultRates::default();
        *r.rate_mut(fault) = rate;
        r
    }

    fn rate_mut(&mut self, fault: Fault) -> &mut f64 {
        match fault {
            Fault::InvalidNode => &mut self.invalid_node,
            Fault::WrongSize => &mut self.wrong_size,
            Fault::LowDegree => &mut self.low_degree,
            Fault::Duplicate => &mut self.duplicate,
            Fault::NonparentSource => &mut self.nonparent_source,
            Fault::RemoveNonseed => &mut self.remove_nonseed,
            Fault::AddInvalid => &mut self.add_invalid,
            Fault::AddRepeat => &mut self.add_repeat,
        }
    }

    /// Faults that can corrupt an answer of `role`, with their rates.
    pub fn applicable(&self, role: Role) -> Vec<(Fault, f64)> {
        match role {
            r if r.is_init() => vec![
                (Fault::InvalidNode, self.invalid_node),
                (Fault::WrongSize, self.wrong_size),
                (Fault::LowDegree, self.low_degree),
            ],
            Role::Crossover => vec![
                (Fault::WrongSize, self.wrong_size),
                (Fault::Duplicate, self.duplicate),
                (Fault::NonparentSource, self.nonparent_source),
            ],
            Role::MutationRemove => vec![(Fault::RemoveNonseed, self.remove_nonseed)],
            Role::MutationAdd => vec![
                (Fault::AddInvalid, self.add_invalid),
                (Fault::AddRepeat, self.add_repeat),
            ],
            _ => vec![
                (Fault::RemoveNonseed, self.remove_nonseed),
                (Fault::AddInvalid, self.add_invalid),
                (Fault::AddRepeat, self.add_repeat),
            ],
        }
    }

    /// Each rate must be a probability and the rates competing for one role
    /// must fit in a single draw.
    pub fn validate(&self) -> Result<()> {
        for role in [Role::InitIntelligent, Role::Crossover, Role::MutationAdd, Role::MutationOneshot] {
            let list = self.applicable(role);
            if let Some((f, r)) = list.iter().find(|(_, r)| !(0.0..=1.0).contains(r)) {
                return Err(Error::Config(format!("fault rate {f:?} = {r} outside [0, 1]")));
            }
            let total: f64 = list.iter().map(|(_, r)| r).sum();
            if total > 1.0 + 1e-12 {
                return Err(Error::Config(format!(
                    "fault rates for role {} sum to {total} > 1",
                    role.name()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockOracleConfig {
    pub rng_seed: u64,
    pub fault_rates: FaultRates,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Metric {
    Degree,
    Betweenness,
}

fn operator_metric(objective: ObjectiveKind) -> Metric {
    match objective {
        ObjectiveKind::Dismantling => Metric::Betweenness,
        ObjectiveKind::Edv | ObjectiveKind::IcSpread => Metric::Degree,
    }
}

pub struct MockOracle {
    graph: Graph,
    communities: CommunityStructure,
    degree_order: Vec<usize>,
    betweenness_order: Vec<usize>,
    rank: [Vec<usize>; 2],
    eligible: Vec<bool>,
    cfg: MockOracleConfig,
    state: Mutex<MockState>,
}

struct MockState {
    rng: ChaCha8Rng,
    calls: HashMap<Role, usize>,
    injected: Vec<(Role, Option<Fault>)>,
}

fn order_by(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn positions(order: &[usize]) -> Vec<usize> {
    let mut rank = vec![0; order.len()];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    rank
}

impl MockOracle {
    pub fn new(graph: Graph, cfg: MockOracleConfig) -> Result<Self> {
        let communities = detect_fastgreedy(&graph);
        Self::with_communities(graph, communities, cfg)
    }

    pub fn with_communities(graph: Graph, communities: CommunityStructure, cfg: MockOracleConfig) -> Result<Self> {
        cfg.fault_rates.validate()?;
        let degrees: Vec<f64> = graph.degrees().into_iter().map(|d| d as f64).collect();
        let median = graph.median_degree();
        let degree_order = order_by(&degrees);
        let betweenness_order = order_by(&betweenness(&graph));
        Ok(MockOracle {
            rank: [positions(&degree_order), positions(&betweenness_order)],
            eligible: degrees.iter().map(|&d| d >= median).collect(),
            state: Mutex::new(MockState {
                rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
                calls: HashMap::new(),
                injected: Vec::new(),
            }),
            degree_order,
            betweenness_order,
            communities,
            graph,
            cfg,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Faults injected so far, one entry per answered call.
    pub fn injected(&self) -> Vec<(Role, Option<Fault>)> {
        self.state.lock().expect("mock lock").injected.clone()
    }

    fn order(&self, m: Metric) -> &[usize] {
        match m {
            Metric::Degree => &self.degree_order,
            Metric::Betweenness => &self.betweenness_order,
        }
    }

    fn rank_of(&self, m: Metric, v: usize) -> usize {
        self.rank[(m == Metric::Betweenness) as usize][v]
    }

    /// The degree floor models the influence heuristic; dismantling answers
    /// may use any node.
    fn admits(&self, m: Metric, v: usize) -> bool {
        m == Metric::Betweenness || self.eligible[v]
    }

    /// Nodes in `order` order, interleaved across communities.
    fn round_robin(&self, order: Metric, filter: Metric) -> Vec<usize> {
        let mut queues: Vec<Vec<usize>> = vec![Vec::new(); self.communities.len()];
        for &v in self.order(order) {
            if self.admits(filter, v) {
                queues[self.communities.community_of(v)].push(v);
            }
        }
        let mut out = Vec::new();
        let mut depth = 0;
        while out.len() < queues.iter().map(Vec::len).sum::<usize>() {
            for q in &queues {
                if let Some(&v) = q.get(depth) {
                    out.push(v);
                }
            }
            depth += 1;
        }
        out
    }

    /// Preference sequence for an init agent, most preferred first.
    fn init_sequence(&self, role: Role, metric: Metric) -> Vec<usize> {
        let mut seq = match role {
            Role::InitIntelligent => self.round_robin(metric, metric),
            Role::InitBetweennessSpread => self.round_robin(Metric::Betweenness, metric),
            _ => self
                .order(metric)
                .iter()
                .copied()
                .filter(|&v| self.admits(metric, v))
                .collect(),
        };
        for &v in self.order(metric) {
            if !self.admits(metric, v) {
                seq.push(v);
            }
        }
        seq
    }

    fn indices(&self, labels: &[Label]) -> Vec<usize> {
        let mut out: Vec<usize> = labels.iter().filter_map(|l| self.graph.index_of(l)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn invalid_label(&self) -> Label {
        let max = self
            .graph
            .labels()
            .iter()
            .filter_map(|l| match l {
                Label::Int(v) => Some(*v),
                Label::Name(_) => None,
            })
            .max();
        Label::Int(max.map_or(0, |m| m + 1))
    }

    fn pick_fault(&self, role: Role, rng: &mut ChaCha8Rng) -> Option<Fault> {
        let options = self.cfg.fault_rates.applicable(role);
        if options.iter().all(|(_, r)| *r == 0.0) {
            return None;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (fault, rate) in options {
            acc += rate;
            if u < acc {
                return Some(fault);
            }
        }
        None
    }

    /// Answer text for one request context.
    pub fn respond(&self, ctx: &TaskContext) -> Result<String> {
        ctx.check()?;
        let mut state = self.state.lock().expect("mock lock");
        let MockState { rng, calls, injected } = &mut *state;
        let call = calls.entry(ctx.role).or_insert(0);
        let nth = *call;
        *call += 1;
        let fault = self.pick_fault(ctx.role, rng);
        injected.push((ctx.role, fault));
        let metric = operator_metric(ctx.objective);
        let g = &self.graph;
        let text = match ctx.role {
            r if r.is_init() => {
                let seq = self.init_sequence(r, metric);
                let k = ctx.k.min(seq.len());
                let chosen: Vec<usize> = if nth == 0 {
                    seq[..k].to_vec()
                } else {
                    let pool = (2 * k).min(seq.len());
                    let mut picks = sample(rng, pool, k).into_vec();
                    picks.sort_unstable();
                    picks.into_iter().map(|i| seq[i]).collect()
                };
                let mut labels: Vec<Label> = chosen.iter().map(|&v| g.label(v).clone()).collect();
                match fault {
                    Some(Fault::InvalidNode) => {
                        labels.pop();
                        labels.push(self.invalid_label());
                    }
                    Some(Fault::WrongSize) => {
                        if labels.len() >= 2 {
                            labels.pop();
                        } else if let Some(&v) = seq.iter().find(|&&v| !chosen.contains(&v)) {
                            labels.push(g.label(v).clone());
                        }
                    }
                    Some(Fault::LowDegree) => {
                        let low = self
                            .degree_order
                            .iter()
                            .rev()
                            .find(|&&v| !self.eligible[v] && !chosen.contains(&v));
                        if let Some(&v) = low {
                            labels.pop();
                            labels.push(g.label(v).clone());
                        }
                    }
                    _ => {}
                }
                format_node_list(&labels)
            }
            Role::Crossover => {
                let [a, b] = ctx.parents.as_ref().expect("checked");
                let mut union = self.indices(a);
                union.extend(self.indices(b));
                union.sort_by_key(|&v| self.rank_of(metric, v));
                union.dedup();
                let chosen: Vec<usize> = union.iter().copied().take(ctx.k).collect();
                let mut labels: Vec<Label> = chosen.iter().map(|&v| g.label(v).clone()).collect();
                match fault {
                    Some(Fault::WrongSize) => {
                        if labels.len() >= 2 {
                            labels.pop();
                        } else if let Some(&v) = union.iter().find(|&&v| !chosen.contains(&v)) {
                            labels.push(g.label(v).clone());
                        }
                    }
                    Some(Fault::Duplicate) => {
                        let first = labels[0].clone();
                        if labels.len() >= 2 {
                            labels.pop();
                        }
                        labels.push(first);
                    }
                    Some(Fault::NonparentSource) => {
                        let outside = self.order(metric).iter().find(|v| !union.contains(v));
                        if let Some(&v) = outside {
                            labels.pop();
                            labels.push(g.label(v).clone());
                        }
                    }
                    _ => {}
                }
                format_node_list(&labels)
            }
            role => {
                let current = self.indices(ctx.current.as_ref().expect("checked"));
                let worst_seed = *current
                    .iter()
                    .max_by_key(|&&v| (self.rank_of(metric, v), std::cmp::Reverse(v)))
                    .expect("non-empty");
                let remove = if fault == Some(Fault::RemoveNonseed) {
                    self.order(metric).iter().rev().find(|v| !current.contains(v)).copied()
                } else {
                    None
                };
                let remove = remove.map_or_else(|| g.label(worst_seed).clone(), |v| g.label(v).clone());
                let add = match fault {
                    Some(Fault::AddInvalid) => self.invalid_label(),
                    Some(Fault::AddRepeat) => {
                        let seed = current
                            .iter()
                            .copied()
                            .filter(|&v| v != worst_seed || current.len() == 1)
                            .min_by_key(|&v| self.rank_of(metric, v))
                            .expect("non-empty");
                        g.label(seed).clone()
                    }
                    _ => match self.order(metric).iter().find(|v| !current.contains(v)) {
                        Some(&v) => g.label(v).clone(),
                        None => self.invalid_label(),
                    },
                };
                match role {
                    Role::MutationRemove => remove.to_string(),
                    Role::MutationAdd => add.to_string(),
                    _ => format!("[{remove}, {add}]"),
                }
            }
        };
        Ok(text)
    }
}

impl VisionBackend for MockOracle {
    fn complete(&self, req: &GatewayRequest) -> Result<GatewayResponse> {
        Ok(GatewayResponse {
            text: self.respond(&req.context)?,
            latency: 0.0,
            token_usage: None,
            attempts: 1,
            correlation_id: req.correlation_id,
        })
    }

    fn needs_images(&self) -> bool {
        false
    }

    fn name(&self) -> &str {
        "mock"
    }
}
