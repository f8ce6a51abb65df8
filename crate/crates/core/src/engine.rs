//! The generational loop: initialization, tournament selection, crossover
//! and mutation (random or model-guided), repair and elitist replacement.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use rand::seq::index::sample;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{FitnessCache, Objective, SeedSet, DEFAULT_PROPAGATION};
use crate::gateway::{Gateway, TaskContext};
use crate::graph::{betweenness, Graph, Label};
use crate::layout::LayoutStyle;
use crate::parse::{parse_node_list, parse_swap_pair};
use crate::prompts::Role;
use crate::render::{image_path, save_png, Phase, Renderer};
use crate::sparsify::NodeMap;
use crate::validate::{validate_and_repair, Candidate, Check, Strictness, Tally, ValidationReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Random,
    #[default]
    RefinedRandom,
    HighDegree,
    HighBetweenness,
    Mllm,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReproductionMode {
    #[default]
    Normal,
    MllmOneshot,
    MllmTwophase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub k: usize,
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub generations: usize,
    pub objective: Objective,
    pub init_mode: InitMode,
    pub reproduction: ReproductionMode,
    pub layout_style: LayoutStyle,
    pub seed: u64,
    pub strictness: Strictness,
    /// Attempts to replace a solution already present in the population.
    pub dedupe_retries: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            k: 10,
            population_size: 15,
            crossover_rate: 0.2,
            mutation_rate: 0.1,
            generations: 10,
            objective: Objective::Edv { p: DEFAULT_PROPAGATION },
            init_mode: InitMode::RefinedRandom,
            reproduction: ReproductionMode::Normal,
            layout_style: LayoutStyle::KamadaKawai,
            seed: 0,
            strictness: Strictness::Strict,
            dedupe_retries: 10,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} outside [0, 1]")))
            }
        };
        prob("crossover_rate", self.crossover_rate)?;
        prob("mutation_rate", self.mutation_rate)?;
        if let Objective::Edv { p } = self.objective {
            prob("p", p)?;
        }
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn uses_model(&self) -> bool {
        self.init_mode == InitMode::Mllm || self.reproduction != ReproductionMode::Normal
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Init { source: String },
    Offspring { parents: [usize; 2], crossed: bool, mutated: bool },
    Elite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub solution: SeedSet,
    pub fitness: Option<f64>,
    pub provenance: Provenance,
}

impl Individual {
    fn new(solution: SeedSet, provenance: Provenance) -> Self {
        Individual {
            solution,
            fitness: None,
            provenance,
        }
    }

    fn score(&self) -> f64 {
        self.fitness.expect("individual evaluated")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub individuals: Vec<Individual>,
    pub generation: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub sd: f64,
    pub best_so_far: f64,
    pub validation: BTreeMap<Check, Tally>,
    pub repairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub generation: usize,
    pub operator: String,
    pub removed: Label,
    pub added: Label,
    pub removed_degree: usize,
    pub added_degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FallbackEvent {
    pub generation: usize,
    pub operator: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub objective: Objective,
    pub generations: usize,
    pub best_working: Vec<Label>,
    pub best_original: Vec<Label>,
    pub fitness_working: f64,
    pub fitness_original: f64,
    pub trace: Vec<GenerationRecord>,
    pub validation: ValidationReport,
    pub mutation_log: Vec<MutationRecord>,
    pub fallbacks: Vec<FallbackEvent>,
    pub gateway_calls: usize,
}

impl RunResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Where rendered operator images are kept, if anywhere.
#[derive(Clone, Debug)]
pub struct ImageArchive {
    pub root: PathBuf,
    pub run_id: String,
}

/// Optional collaborators of a run.
#[derive(Default, Clone, Copy)]
pub struct EngineIo<'a> {
    pub gateway: Option<&'a Gateway>,
    pub renderer: Option<&'a Renderer>,
    pub archive: Option<&'a ImageArchive>,
}

/// Picks two distinct individuals by binary tournament. Ties go to the lower
/// index; the second tournament excludes the first winner.
pub fn select_parents<R: Rng>(pop: &[Individual], rng: &mut R) -> Result<(usize, usize)> {
    if pop.len() < 2 {
        return Err(Error::invalid("selection needs at least two individuals"));
    }
    let first = tournament(pop, None, rng);
    let second = tournament(pop, Some(first), rng);
    Ok((first, second))
}

fn fitter(pop: &[Individual], a: usize, b: usize) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if pop[hi].score() > pop[lo].score() {
        hi
    } else {
        lo
    }
}

fn tournament<R: Rng>(pop: &[Individual], exclude: Option<usize>, rng: &mut R) -> usize {
    let pool: Vec<usize> = (0..pop.len()).filter(|&i| Some(i) != exclude).collect();
    if pool.len() == 1 {
        return pool[0];
    }
    let pick = sample(rng, pool.len(), 2);
    fitter(pop, pool[pick.index(0)], pool[pick.index(1)])
}

fn top_pool(scores: &[f64], size: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(size);
    order
}

struct Run<'a> {
    g: &'a Graph,
    original: &'a Graph,
    node_map: &'a NodeMap,
    cfg: &'a EngineConfig,
    io: EngineIo<'a>,
    cache: FitnessCache<'a>,
    rng: ChaCha8Rng,
    generation: usize,
    gen_report: ValidationReport,
    total_report: ValidationReport,
    mutation_log: Vec<MutationRecord>,
    fallbacks: Vec<FallbackEvent>,
    calls: usize,
}

impl<'a> Run<'a> {
    fn new(
        g: &'a Graph,
        original: &'a Graph,
        node_map: &'a NodeMap,
        cfg: &'a EngineConfig,
        io: EngineIo<'a>,
    ) -> Result<Self> {
        cfg.validate()?;
        if cfg.k > g.node_count() {
            return Err(Error::Config(format!("k = {} exceeds {} nodes", cfg.k, g.node_count())));
        }
        if cfg.uses_model() && io.gateway.is_none() {
            return Err(Error::Config("model-guided mode requires a gateway".into()));
        }
        if io.gateway.is_some_and(Gateway::needs_images) && io.renderer.is_none() {
            return Err(Error::Config("backend needs images but no renderer is configured".into()));
        }
        Ok(Run {
            g,
            original,
            node_map,
            cfg,
            io,
            cache: FitnessCache::new(g, cfg.objective),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            generation: 0,
            gen_report: ValidationReport::default(),
            total_report: ValidationReport::default(),
            mutation_log: Vec::new(),
            fallbacks: Vec::new(),
            calls: 0,
        })
    }

    fn k(&self) -> usize {
        self.cfg.k
    }

    fn absorb(&mut self, report: ValidationReport) {
        self.gen_report.merge(&report);
    }

    fn fallback(&mut self, operator: &str, err: &Error) {
        log::warn!("generation {}: {operator} fell back: {err}", self.generation);
        self.fallbacks.push(FallbackEvent {
            generation: self.generation,
            operator: operator.to_string(),
            reason: err.to_string(),
        });
    }

    fn wants_images(&self) -> bool {
        self.io.renderer.is_some()
            && (self.io.archive.is_some() || self.io.gateway.is_some_and(Gateway::needs_images))
    }

    fn image(&self, solution: &SeedSet, phase: Phase, tag: &str) -> Result<Option<Vec<u8>>> {
        if !self.wants_images() {
            return Ok(None);
        }
        let renderer = self.io.renderer.expect("checked");
        let png = renderer.render_png(self.g, solution, phase)?;
        if let Some(archive) = self.io.archive {
            save_png(&image_path(&archive.root, &archive.run_id, self.generation, tag, phase), &png)?;
        }
        Ok(Some(png))
    }

    fn ask(&mut self, ctx: TaskContext, images: Vec<Vec<u8>>) -> Result<String> {
        let gateway = self
            .io
            .gateway
            .ok_or_else(|| Error::Config("model-guided operator without a gateway".into()))?;
        self.calls += 1;
        Ok(gateway.ask(ctx, images)?.text)
    }

    fn evaluate(&self, ind: &mut Individual) -> Result<()> {
        if ind.fitness.is_none() {
            ind.fitness = Some(self.cache.evaluate(&ind.solution)?);
        }
        Ok(())
    }

    fn labels(&self, s: &SeedSet) -> Vec<Label> {
        s.labels(self.g)
    }

    // ---- initialization ----

    fn refined_random(&mut self) -> SeedSet {
        let n = self.g.node_count();
        let k = self.k();
        let members = sample(&mut self.rng, n, k).into_vec();
        SeedSet::new(self.g, members).expect("distinct in-range sample")
    }

    fn random_from_original(&mut self) -> SeedSet {
        let mut chosen: Vec<usize> = Vec::new();
        let mut tries = 0;
        while chosen.len() < self.k() && tries < 1000 * self.k() {
            tries += 1;
            let i = self.rng.random_range(0..self.original.node_count());
            let working = self
                .node_map
                .to_working(self.original.label(i))
                .and_then(|l| self.g.index_of(l));
            if let Some(v) = working {
                if !chosen.contains(&v) {
                    chosen.push(v);
                }
            }
        }
        while chosen.len() < self.k() {
            let v = self.rng.random_range(0..self.g.node_count());
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        SeedSet::new(self.g, chosen).expect("distinct in-range nodes")
    }

    fn from_pool(&mut self, pool: &[usize]) -> SeedSet {
        let k = self.k();
        let picks = sample(&mut self.rng, pool.len(), k);
        SeedSet::new(self.g, picks.iter().map(|i| pool[i]).collect()).expect("distinct pool members")
    }

    fn initialize(&mut self) -> Result<Population> {
        let n_p = self.cfg.population_size;
        let mut individuals: Vec<Individual> = Vec::with_capacity(n_p);
        let mut seen: HashSet<SeedSet> = HashSet::new();
        let mode = self.cfg.init_mode;
        let pool = match mode {
            InitMode::HighDegree => {
                let d: Vec<f64> = self.g.degrees().into_iter().map(|d| d as f64).collect();
                top_pool(&d, 2 * self.k())
            }
            InitMode::HighBetweenness => top_pool(&betweenness(self.g), 2 * self.k()),
            _ => Vec::new(),
        };
        if mode == InitMode::Mllm {
            let per_agent = n_p.div_ceil(3);
            let image = self.image(&SeedSet::empty(), Phase::Init, "init")?;
            'agents: for role in Role::INIT_AGENTS {
                for _ in 0..per_agent {
                    if individuals.len() >= n_p {
                        break 'agents;
                    }
                    let mut attempt = 0;
                    let ind = loop {
                        let ctx = TaskContext::init(role, self.k(), self.cfg.objective.kind());
                        let solution = match self.ask(ctx, image.iter().cloned().collect()) {
                            Ok(text) => {
                                let labels = parse_node_list(&text, Some(self.k())).unwrap_or_default();
                                let (s, report) = validate_and_repair(
                                    self.g,
                                    self.k(),
                                    Candidate::Init(&labels),
                                    self.cfg.strictness,
                                    &mut self.rng,
                                );
                                self.absorb(report);
                                Individual::new(s, Provenance::Init { source: role.name().into() })
                            }
                            Err(e) => {
                                self.fallback(role.name(), &e);
                                let s = self.refined_random();
                                Individual::new(s, Provenance::Init { source: "refined_random".into() })
                            }
                        };
                        attempt += 1;
                        if !seen.contains(&solution.solution) || attempt > self.cfg.dedupe_retries {
                            break solution;
                        }
                    };
                    seen.insert(ind.solution.clone());
                    individuals.push(ind);
                }
            }
        } else {
            let source = serde_json::to_value(mode)?.as_str().unwrap_or_default().to_string();
            while individuals.len() < n_p {
                let mut attempt = 0;
                let s = loop {
                    let s = match mode {
                        InitMode::Random => self.random_from_original(),
                        InitMode::RefinedRandom => self.refined_random(),
                        _ => self.from_pool(&pool.clone()),
                    };
                    attempt += 1;
                    if !seen.contains(&s) || attempt > self.cfg.dedupe_retries {
                        break s;
                    }
                };
                seen.insert(s.clone());
                individuals.push(Individual::new(s, Provenance::Init { source: source.clone() }));
            }
        }
        for ind in &mut individuals {
            self.evaluate(ind)?;
        }
        Ok(Population {
            individuals,
            generation: 0,
        })
    }

    // ---- reproduction ----

    fn normal_crossover(&mut self, a: &SeedSet, b: &SeedSet) -> SeedSet {
        let mut chosen: Vec<usize> = Vec::with_capacity(self.k());
        for (&x, &y) in a.members().iter().zip(b.members()) {
            let v = if self.rng.random_bool(0.5) { x } else { y };
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        let mut union: Vec<usize> = a.members().iter().chain(b.members()).copied().collect();
        union.sort_unstable();
        union.dedup();
        union.retain(|v| !chosen.contains(v));
        while chosen.len() < self.k() && !union.is_empty() {
            let i = self.rng.random_range(0..union.len());
            chosen.push(union.swap_remove(i));
        }
        while chosen.len() < self.k() {
            let v = self.rng.random_range(0..self.g.node_count());
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        SeedSet::new(self.g, chosen).expect("distinct in-range nodes")
    }

    fn model_crossover(&mut self, a: &SeedSet, b: &SeedSet, tag: &str) -> Result<SeedSet> {
        let mut images = Vec::new();
        for (s, side) in [(a, "a"), (b, "b")] {
            images.extend(self.image(s, Phase::Crossover, &format!("{tag}{side}"))?);
        }
        let ctx = TaskContext::crossover(self.k(), self.cfg.objective.kind(), self.labels(a), self.labels(b));
        let text = self.ask(ctx, images)?;
        let labels = parse_node_list(&text, Some(self.k())).unwrap_or_default();
        let (s, report) = validate_and_repair(
            self.g,
            self.k(),
            Candidate::Crossover { labels: &labels, parents: [a, b] },
            self.cfg.strictness,
            &mut self.rng,
        );
        self.absorb(report);
        Ok(s)
    }

    fn crossover_step(&mut self, pop: &[Individual], parents: (usize, usize), tag: &str) -> Result<(SeedSet, bool)> {
        if !self.rng.random_bool(self.cfg.crossover_rate) {
            let best = fitter(pop, parents.0, parents.1);
            return Ok((pop[best].solution.clone(), false));
        }
        let (a, b) = (&pop[parents.0].solution, &pop[parents.1].solution);
        let child = match self.cfg.reproduction {
            ReproductionMode::Normal => self.normal_crossover(a, b),
            _ => match self.model_crossover(a, b, tag) {
                Ok(s) => s,
                Err(e) => {
                    self.fallback("crossover", &e);
                    self.normal_crossover(a, b)
                }
            },
        };
        Ok((child, true))
    }

    fn normal_swap(&mut self, s: &SeedSet) -> (usize, usize) {
        let out = *s.members().choose(&mut self.rng).expect("non-empty");
        let outside: Vec<usize> = (0..self.g.node_count()).filter(|&v| !s.contains(v)).collect();
        let inn = *outside.choose(&mut self.rng).expect("non-seed exists");
        (out, inn)
    }

    fn model_mutation(&mut self, s: &SeedSet, tag: &str) -> Result<SeedSet> {
        let images: Vec<Vec<u8>> = self.image(s, Phase::Mutation, tag)?.into_iter().collect();
        let objective = self.cfg.objective.kind();
        let current = self.labels(s);
        let (remove, add) = match self.cfg.reproduction {
            ReproductionMode::MllmOneshot => {
                let ctx = TaskContext::mutation(Role::MutationOneshot, objective, current);
                let text = self.ask(ctx, images)?;
                match parse_swap_pair(&text) {
                    Ok((r, a)) => (Some(r), Some(a)),
                    Err(_) => (None, None),
                }
            }
            _ => {
                let first = |text: String| parse_node_list(&text, Some(1)).ok().and_then(|v| v.into_iter().next());
                let ctx = TaskContext::mutation(Role::MutationRemove, objective, current.clone());
                let remove = first(self.ask(ctx, images.clone())?);
                let ctx = TaskContext::mutation(Role::MutationAdd, objective, current);
                let add = first(self.ask(ctx, images)?);
                (remove, add)
            }
        };
        let (child, report) = validate_and_repair(
            self.g,
            self.k(),
            Candidate::Mutation {
                remove: remove.as_ref(),
                add: add.as_ref(),
                current: s,
            },
            self.cfg.strictness,
            &mut self.rng,
        );
        self.absorb(report);
        Ok(child)
    }

    fn log_swap(&mut self, before: &SeedSet, after: &SeedSet, operator: &str) {
        let removed = before.members().iter().find(|&&v| !after.contains(v));
        let added = after.members().iter().find(|&&v| !before.contains(v));
        if let (Some(&r), Some(&a)) = (removed, added) {
            self.mutation_log.push(MutationRecord {
                generation: self.generation,
                operator: operator.to_string(),
                removed: self.g.label(r).clone(),
                added: self.g.label(a).clone(),
                removed_degree: self.g.degree(r),
                added_degree: self.g.degree(a),
            });
        }
    }

    fn mutation_step(&mut self, s: SeedSet, tag: &str) -> Result<(SeedSet, bool)> {
        if !self.rng.random_bool(self.cfg.mutation_rate) || s.k() >= self.g.node_count() {
            return Ok((s, false));
        }
        let normal = |run: &mut Self, s: &SeedSet| {
            let (out, inn) = run.normal_swap(s);
            let members = s.members().iter().map(|&v| if v == out { inn } else { v }).collect();
            SeedSet::new(run.g, members).expect("swap keeps distinctness")
        };
        let (child, operator) = match self.cfg.reproduction {
            ReproductionMode::Normal => (normal(self, &s), "normal"),
            mode => match self.model_mutation(&s, tag) {
                Ok(c) => (c, if mode == ReproductionMode::MllmOneshot { "mllm_oneshot" } else { "mllm_twophase" }),
                Err(e) => {
                    self.fallback("mutation", &e);
                    (normal(self, &s), "normal")
                }
            },
        };
        self.log_swap(&s, &child, operator);
        Ok((child, true))
    }

    fn record(&mut self, pop: &Population, best_so_far: f64) -> GenerationRecord {
        let scores: Vec<f64> = pop.individuals.iter().map(Individual::score).collect();
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let report = std::mem::take(&mut self.gen_report);
        self.total_report.merge(&report);
        GenerationRecord {
            generation: pop.generation,
            best: scores.iter().copied().fold(f64::MIN, f64::max),
            mean,
            sd: var.sqrt(),
            best_so_far,
            validation: report.checks,
            repairs: report.repairs.len(),
        }
    }
}

fn best_index(pop: &[Individual]) -> usize {
    (1..pop.len()).fold(0, |b, i| if pop[i].score() > pop[b].score() { i } else { b })
}

/// Runs the full loop on the working graph `g`; `original` and `node_map`
/// are used for random initialization and for re-scoring the final best.
pub fn evolve(
    g: &Graph,
    original: &Graph,
    node_map: &NodeMap,
    cfg: &EngineConfig,
    io: EngineIo<'_>,
) -> Result<RunResult> {
    let mut run = Run::new(g, original, node_map, cfg, io)?;
    let mut pop = run.initialize()?;
    let mut elite = pop.individuals[best_index(&pop.individuals)].clone();
    let mut trace = vec![run.record(&pop, elite.score())];
    for generation in 1..=cfg.generations {
        run.generation = generation;
        let mut next = vec![Individual {
            provenance: Provenance::Elite,
            ..elite.clone()
        }];
        while next.len() < cfg.population_size {
            let tag = next.len().to_string();
            let parents = select_parents(&pop.individuals, &mut run.rng)?;
            let (child, crossed) = run.crossover_step(&pop.individuals, parents, &tag)?;
            let (child, mutated) = run.mutation_step(child, &tag)?;
            let mut ind = Individual::new(
                child,
                Provenance::Offspring {
                    parents: [parents.0, parents.1],
                    crossed,
                    mutated,
                },
            );
            run.evaluate(&mut ind)?;
            next.push(ind);
        }
        pop = Population {
            individuals: next,
            generation,
        };
        let best = &pop.individuals[best_index(&pop.individuals)];
        if best.score() > elite.score() {
            elite = best.clone();
        }
        trace.push(run.record(&pop, elite.score()));
    }
    let best_working = elite.solution.labels(g);
    let best_original = best_working
        .iter()
        .map(|l| {
            node_map
                .to_original(l)
                .cloned()
                .ok_or_else(|| Error::UnknownNode(l.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let fitness_original = cfg
        .objective
        .evaluate(original, &SeedSet::from_labels(original, &best_original)?)?;
    Ok(RunResult {
        seed: cfg.seed,
        objective: cfg.objective,
        generations: cfg.generations,
        best_working,
        best_original,
        fitness_working: elite.score(),
        fitness_original,
        trace,
        validation: run.total_report,
        mutation_log: run.mutation_log,
        fallbacks: run.fallbacks,
        gateway_calls: run.calls,
    })
}

/// Builds and evaluates an initial population only.
pub fn initialize_population(
    g: &Graph,
    original: &Graph,
    node_map: &NodeMap,
    cfg: &EngineConfig,
    io: EngineIo<'_>,
) -> Result<Population> {
    Run::new(g, original, node_map, cfg, io)?.initialize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{Fault, FaultRates, MockOracle, MockOracleConfig};
    use crate::synth::barabasi_albert;

    fn gateway(g: &Graph, rates: FaultRates) -> Gateway {
        let oracle = MockOracle::new(g.clone(), MockOracleConfig { rng_seed: 3, fault_rates: rates }).unwrap();
        Gateway::new(Box::new(oracle), "mock")
    }

    fn pop_with(scores: &[f64], g: &Graph) -> Vec<Individual> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &f)| Individual {
                solution: SeedSet::new(g, vec![i]).unwrap(),
                fitness: Some(f),
                provenance: Provenance::Elite,
            })
            .collect()
    }

    fn cfg(k: usize) -> EngineConfig {
        EngineConfig { k, generations: 3, ..Default::default() }
    }

    #[test]
    fn refined_random_is_reproducible() {
        let g = barabasi_albert(40, 2, 1);
        let map = NodeMap::identity(&g);
        let c = cfg(5);
        let a = initialize_population(&g, &g, &map, &c, EngineIo::default()).unwrap();
        let b = initialize_population(&g, &g, &map, &c, EngineIo::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.individuals.len(), 15);
    }

    #[test]
    fn high_degree_draws_from_top_pool() {
        let star = Graph::from_labeled(Vec::new(), (1..10u64).map(|l| (Label::Int(0), Label::Int(l))));
        let map = NodeMap::identity(&star);
        let c = EngineConfig { init_mode: InitMode::HighDegree, ..cfg(1) };
        let pop = initialize_population(&star, &star, &map, &c, EngineIo::default()).unwrap();
        for ind in &pop.individuals {
            assert!(ind.solution.members()[0] <= 1);
        }
    }

    #[test]
    fn model_init_fills_population_from_three_agents() {
        let g = barabasi_albert(50, 2, 4);
        let map = NodeMap::identity(&g);
        let gw = gateway(&g, FaultRates::default());
        let c = EngineConfig { init_mode: InitMode::Mllm, ..cfg(5) };
        let io = EngineIo { gateway: Some(&gw), ..Default::default() };
        let pop = initialize_population(&g, &g, &map, &c, io).unwrap();
        assert_eq!(pop.individuals.len(), 15);
        for role in Role::INIT_AGENTS {
            let n = pop
                .individuals
                .iter()
                .filter(|i| i.provenance == Provenance::Init { source: role.name().into() })
                .count();
            assert_eq!(n, 5, "{role:?}");
        }
    }

    #[test]
    fn two_individuals_always_pair_up() {
        let g = barabasi_albert(10, 2, 0);
        let pop = pop_with(&[1.0, 2.0], &g);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(select_parents(&pop, &mut rng).unwrap(), (1, 0));
        }
        assert!(select_parents(&pop[..1], &mut rng).is_err());
    }

    #[test]
    fn tournament_wins_follow_fitness_rank() {
        let g = barabasi_albert(10, 2, 0);
        let pop = pop_with(&[3.0, 1.0, 4.0, 0.5, 2.0], &g);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut wins = [0usize; 5];
        for _ in 0..10_000 {
            let (a, _) = select_parents(&pop, &mut rng).unwrap();
            wins[a] += 1;
        }
        let order = [3, 1, 4, 0, 2];
        for w in order.windows(2) {
            assert!(wins[w[0]] <= wins[w[1]], "{wins:?}");
        }
    }

    #[test]
    fn selection_ignores_monotone_rescaling() {
        let g = barabasi_albert(10, 2, 0);
        let raw = [3.0, 1.0, 4.0, 0.5, 2.0, 2.5];
        let a = pop_with(&raw, &g);
        let b = pop_with(&raw.map(|x: f64| x.exp() * 10.0 + 1.0), &g);
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            assert_eq!(select_parents(&a, &mut r1).unwrap(), select_parents(&b, &mut r2).unwrap());
        }
    }

    #[test]
    fn zero_rates_clone_and_pass_through() {
        let g = barabasi_albert(30, 2, 2);
        let map = NodeMap::identity(&g);
        let c = EngineConfig { crossover_rate: 0.0, mutation_rate: 0.0, ..cfg(4) };
        let mut run = Run::new(&g, &g, &map, &c, EngineIo::default()).unwrap();
        let pop = run.initialize().unwrap();
        for _ in 0..50 {
            let parents = select_parents(&pop.individuals, &mut run.rng).unwrap();
            let (child, crossed) = run.crossover_step(&pop.individuals, parents, "x").unwrap();
            assert!(!crossed);
            assert_eq!(child, pop.individuals[fitter(&pop.individuals, parents.0, parents.1)].solution);
            let (same, mutated) = run.mutation_step(child.clone(), "x").unwrap();
            assert!(!mutated);
            assert_eq!(same, child);
        }
    }

    #[test]
    fn identical_parents_give_the_parent() {
        let g = barabasi_albert(30, 2, 2);
        let map = NodeMap::identity(&g);
        let gw = gateway(&g, FaultRates::default());
        for mode in [ReproductionMode::Normal, ReproductionMode::MllmTwophase] {
            let c = EngineConfig { crossover_rate: 1.0, reproduction: mode, ..cfg(4) };
            let io = EngineIo { gateway: Some(&gw), ..Default::default() };
            let mut run = Run::new(&g, &g, &map, &c, io).unwrap();
            let mut pop = run.initialize().unwrap().individuals;
            pop[1] = pop[0].clone();
            let (child, crossed) = run.crossover_step(&pop, (0, 1), "x").unwrap();
            assert!(crossed);
            assert_eq!(child, pop[0].solution);
        }
    }

    #[test]
    fn two_phase_swaps_weakest_for_strongest() {
        let g = barabasi_albert(30, 2, 2);
        let map = NodeMap::identity(&g);
        let gw = gateway(&g, FaultRates::default());
        let c = EngineConfig {
            mutation_rate: 1.0,
            reproduction: ReproductionMode::MllmTwophase,
            ..cfg(2)
        };
        let io = EngineIo { gateway: Some(&gw), ..Default::default() };
        let mut run = Run::new(&g, &g, &map, &c, io).unwrap();
        let degrees = g.degrees();
        let hub = (0..30).max_by_key(|&v| (degrees[v], std::cmp::Reverse(v))).unwrap();
        let low = (0..30).min_by_key(|&v| (degrees[v], v)).unwrap();
        let s = SeedSet::new(&g, vec![hub, low]).unwrap();
        let (child, _) = run.mutation_step(s, "x").unwrap();
        let best_other = (0..30)
            .filter(|&v| v != hub && v != low)
            .max_by_key(|&v| (degrees[v], std::cmp::Reverse(v)))
            .unwrap();
        assert_eq!(child, SeedSet::new(&g, vec![hub, best_other]).unwrap());
    }

    #[test]
    fn repeated_addition_is_repaired() {
        let g = barabasi_albert(30, 2, 2);
        let map = NodeMap::identity(&g);
        let gw = gateway(&g, FaultRates::only(Fault::AddRepeat, 1.0));
        let c = EngineConfig {
            mutation_rate: 1.0,
            reproduction: ReproductionMode::MllmTwophase,
            ..cfg(3)
        };
        let io = EngineIo { gateway: Some(&gw), ..Default::default() };
        let mut run = Run::new(&g, &g, &map, &c, io).unwrap();
        let s = SeedSet::new(&g, vec![0, 5, 9]).unwrap();
        let (child, _) = run.mutation_step(s, "x").unwrap();
        assert_eq!(child.k(), 3);
        assert!(run.gen_report.failed(Check::MutationRepeat));
    }

    #[test]
    fn zero_generations_reports_initial_population() {
        let g = barabasi_albert(30, 2, 2);
        let map = NodeMap::identity(&g);
        let c = EngineConfig { generations: 0, ..cfg(3) };
        let r = evolve(&g, &g, &map, &c, EngineIo::default()).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].best, r.fitness_working);
    }

    #[test]
    fn runs_are_deterministic_and_elitist() {
        let g = barabasi_albert(50, 2, 8);
        let map = NodeMap::identity(&g);
        let c = EngineConfig {
            reproduction: ReproductionMode::MllmOneshot,
            mutation_rate: 0.5,
            crossover_rate: 0.5,
            ..cfg(5)
        };
        let run = || {
            let gw = gateway(&g, FaultRates::uniform(0.05));
            let io = EngineIo { gateway: Some(&gw), ..Default::default() };
            evolve(&g, &g, &map, &c, io).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(a.trace.windows(2).all(|w| w[0].best_so_far <= w[1].best_so_far));
        assert!(a.gateway_calls > 0);
    }

    #[test]
    fn oversized_k_is_a_config_error() {
        let g = barabasi_albert(5, 1, 0);
        let map = NodeMap::identity(&g);
        assert!(matches!(
            evolve(&g, &g, &map, &cfg(6), EngineIo::default()),
            Err(Error::Config(_))
        ));
    }
}
