//! Experiment configuration and the end-to-end pipeline:
//! load → communities → merge → sparsify → evolve, repeated per arm.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::community::{detect_fastgreedy, merge_small, merge_to_target, CommunityStructure};
use crate::engine::{evolve, EngineConfig, EngineIo, ImageArchive, InitMode, ReproductionMode, RunResult};
use crate::error::{Error, Result};
use crate::fitness::{Objective, DEFAULT_PROPAGATION};
use crate::gateway::{Gateway, LiveBackend, LiveConfig, VisionBackend};
use crate::graph::{load_edge_list_file, Graph};
use crate::layout::{LayoutCache, LayoutStyle};
use crate::mock::{FaultRates, MockOracle, MockOracleConfig};
use crate::render::{RenderSpec, Renderer};
use crate::report::{artifact_files, transcript_path, write_reports, StatsSummary};
use crate::sparsify::{sparsify_if_large, NodeMap, PrunePolicy, SparsifiedGraph};
use crate::synth;
use crate::validate::Strictness;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Mock,
    Live,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    #[default]
    Edv,
    Dismantling,
}

/// Which graph an arm evolves on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveOn {
    Original,
    Sparsified,
}

/// Which final fitness the statistics compare.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareOn {
    #[default]
    Original,
    Working,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmConfig {
    pub name: String,
    pub init: InitMode,
    #[serde(default)]
    pub reproduction: ReproductionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve_on: Option<EvolveOn>,
}

impl ArmConfig {
    /// The random baseline samples the original graph and so evolves on it;
    /// every other arm works on the reduced graph.
    pub fn graph_choice(&self) -> EvolveOn {
        self.evolve_on.unwrap_or(if self.init == InitMode::Random {
            EvolveOn::Original
        } else {
            EvolveOn::Sparsified
        })
    }

    pub fn preset(name: &str) -> Option<ArmConfig> {
        let (init, reproduction) = match name {
            "random" => (InitMode::Random, ReproductionMode::Normal),
            "refined_random" | "normal" => (InitMode::RefinedRandom, ReproductionMode::Normal),
            "high_degree" => (InitMode::HighDegree, ReproductionMode::Normal),
            "high_betweenness" => (InitMode::HighBetweenness, ReproductionMode::Normal),
            "mllm_init" => (InitMode::Mllm, ReproductionMode::Normal),
            "twophase" => (InitMode::RefinedRandom, ReproductionMode::MllmTwophase),
            "oneshot" => (InitMode::RefinedRandom, ReproductionMode::MllmOneshot),
            "veo" => (InitMode::Mllm, ReproductionMode::MllmTwophase),
            "veo_oneshot" => (InitMode::Mllm, ReproductionMode::MllmOneshot),
            _ => return None,
        };
        Some(ArmConfig {
            name: name.to_string(),
            init,
            reproduction,
            evolve_on: None,
        })
    }

    pub const PRESETS: [&'static str; 10] = [
        "random",
        "refined_random",
        "normal",
        "high_degree",
        "high_betweenness",
        "mllm_init",
        "twophase",
        "oneshot",
        "veo",
        "veo_oneshot",
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSection {
    pub name: String,
    /// Edge-list paths, or `synth:` generator specs.
    pub networks: Vec<String>,
    pub runs: usize,
    pub seed: u64,
    pub backend: Backend,
    pub objective: ObjectiveName,
    pub p: f64,
    pub out: PathBuf,
    pub compare_on: CompareOn,
    pub save_images: bool,
    pub alpha: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            name: "experiment".into(),
            networks: Vec::new(),
            runs: 20,
            seed: 0,
            backend: Backend::Mock,
            objective: ObjectiveName::Edv,
            p: DEFAULT_PROPAGATION,
            out: PathBuf::from("out"),
            compare_on: CompareOn::Original,
            save_images: false,
            alpha: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SparsifySection {
    pub n_v: usize,
    pub n_e: usize,
    /// Target community count after small-community merging; 0 disables.
    pub n_c: usize,
    pub small_fraction: f64,
    pub prune: PrunePolicy,
}

impl Default for SparsifySection {
    fn default() -> Self {
        SparsifySection {
            n_v: 50,
            n_e: 100,
            n_c: 0,
            small_fraction: 0.02,
            prune: PrunePolicy::Random,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineSection {
    /// Seed-set size; 0 picks 5 for networks of at most 100 nodes, else 10.
    pub k: usize,
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub generations: usize,
    pub layout_style: LayoutStyle,
    pub strictness: Strictness,
    pub dedupe_retries: usize,
}

impl Default for EngineSection {
    fn default() -> Self {
        let e = EngineConfig::default();
        EngineSection {
            k: 0,
            population_size: e.population_size,
            crossover_rate: e.crossover_rate,
            mutation_rate: e.mutation_rate,
            generations: e.generations,
            layout_style: e.layout_style,
            strictness: e.strictness,
            dedupe_retries: e.dedupe_retries,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockSection {
    pub fault_rates: FaultRates,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub sparsify: SparsifySection,
    pub engine: EngineSection,
    pub gateway: LiveConfig,
    pub mock: MockSection,
    pub arms: Vec<ArmConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies a flat `section.key=value` override. The value is read as a
    /// TOML value when it parses as one, else as a string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let mut root = toml::Value::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let keys: Vec<&str> = path.trim().split('.').collect();
        let mut node = &mut root;
        for key in &keys[..keys.len() - 1] {
            node = node
                .as_table_mut()
                .map(|t| t.entry(key.to_string()).or_insert_with(|| toml::Value::Table(Default::default())))
                .ok_or_else(|| Error::Config(format!("`{path}` does not name a table entry")))?;
        }
        node.as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{path}` does not name a table entry")))?
            .insert(keys[keys.len() - 1].to_string(), value);
        *self = root.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn objective(&self) -> Objective {
        match self.experiment.objective {
            ObjectiveName::Edv => Objective::Edv { p: self.experiment.p },
            ObjectiveName::Dismantling => Objective::Dismantling,
        }
    }

    /// Keeps only the named arms, resolving presets for names not defined
    /// in the file.
    pub fn select_arms(&mut self, names: &[String]) -> Result<()> {
        if names.is_empty() {
            return Ok(());
        }
        let mut chosen = Vec::new();
        for name in names {
            let arm = self
                .arms
                .iter()
                .find(|a| &a.name == name)
                .cloned()
                .or_else(|| ArmConfig::preset(name))
                .ok_or_else(|| {
                    Error::Config(format!(
                        "unknown arm `{name}`; presets are {}",
                        ArmConfig::PRESETS.join(", ")
                    ))
                })?;
            chosen.push(arm);
        }
        self.arms = chosen;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if e.networks.is_empty() {
            return Err(Error::Config("no networks configured".into()));
        }
        for n in &e.networks {
            NetworkSource::parse(n)?.check()?;
        }
        if self.arms.is_empty() {
            return Err(Error::Config("no arms configured".into()));
        }
        let mut names: Vec<&str> = self.arms.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("arm names must be unique".into()));
        }
        self.mock.fault_rates.validate()?;
        let mut probe = self.engine_config(&self.arms[0], 10, 0);
        probe.k = probe.k.max(1);
        probe.validate()
    }

    pub fn engine_config(&self, arm: &ArmConfig, original_nodes: usize, seed: u64) -> EngineConfig {
        let s = &self.engine;
        let k = if s.k == 0 {
            if original_nodes <= 100 {
                5
            } else {
                10
            }
        } else {
            s.k
        };
        EngineConfig {
            k,
            population_size: s.population_size,
            crossover_rate: s.crossover_rate,
            mutation_rate: s.mutation_rate,
            generations: s.generations,
            objective: self.objective(),
            init_mode: arm.init,
            reproduction: arm.reproduction,
            layout_style: s.layout_style,
            seed,
            strictness: s.strictness,
            dedupe_retries: s.dedupe_retries,
        }
    }
}

/// A network given as a file path or as a `synth:` generator spec:
/// `synth:ba:N:M:SEED`, `synth:planted:S1-S2-..:P_IN:P_OUT:SEED`,
/// `synth:bridges:CLUSTER:BRIDGES:LINKS:P_IN:SEED`.
#[derive(Clone, Debug, PartialEq)]
pub enum NetworkSource {
    File(PathBuf),
    BarabasiAlbert { n: usize, m: usize, seed: u64 },
    Planted { sizes: Vec<usize>, p_in: f64, p_out: f64, seed: u64 },
    Bridges { cluster: usize, bridges: usize, links: usize, p_in: f64, seed: u64 },
}

fn field<T: std::str::FromStr>(spec: &str, parts: &[&str], i: usize) -> Result<T> {
    parts
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Config(format!("bad network spec `{spec}` (field {i})")))
}

impl NetworkSource {
    pub fn parse(spec: &str) -> Result<Self> {
        let Some(rest) = spec.strip_prefix("synth:") else {
            return Ok(NetworkSource::File(PathBuf::from(spec)));
        };
        let parts: Vec<&str> = rest.split(':').collect();
        match parts[0] {
            "ba" if parts.len() == 4 => Ok(NetworkSource::BarabasiAlbert {
                n: field(spec, &parts, 1)?,
                m: field(spec, &parts, 2)?,
                seed: field(spec, &parts, 3)?,
            }),
            "planted" if parts.len() == 5 => Ok(NetworkSource::Planted {
                sizes: parts[1]
                    .split('-')
                    .map(|s| s.parse().map_err(|_| Error::Config(format!("bad sizes in `{spec}`"))))
                    .collect::<Result<_>>()?,
                p_in: field(spec, &parts, 2)?,
                p_out: field(spec, &parts, 3)?,
                seed: field(spec, &parts, 4)?,
            }),
            "bridges" if parts.len() == 6 => Ok(NetworkSource::Bridges {
                cluster: field(spec, &parts, 1)?,
                bridges: field(spec, &parts, 2)?,
                links: field(spec, &parts, 3)?,
                p_in: field(spec, &parts, 4)?,
                seed: field(spec, &parts, 5)?,
            }),
            _ => Err(Error::Config(format!("unknown network spec `{spec}`"))),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            NetworkSource::File(p) if !p.is_file() => Err(Error::Config(format!(
                "network file {} does not exist",
                p.display()
            ))),
            _ => Ok(()),
        }
    }

    pub fn load(&self) -> Result<Graph> {
        Ok(match self {
            NetworkSource::File(p) => load_edge_list_file(p)?.0,
            NetworkSource::BarabasiAlbert { n, m, seed } => synth::barabasi_albert(*n, *m, *seed),
            NetworkSource::Planted { sizes, p_in, p_out, seed } => {
                synth::planted_partition(sizes, *p_in, *p_out, *seed).0
            }
            NetworkSource::Bridges { cluster, bridges, links, p_in, seed } => {
                synth::two_clusters_with_bridges(*cluster, *p_in, *bridges, *links, *seed).0
            }
        })
    }
}

/// Short name used in output paths and reports.
pub fn network_name(spec: &str) -> String {
    match spec.strip_prefix("synth:") {
        Some(rest) => format!("synth_{}", rest.replace([':', '.'], "_")),
        None => Path::new(spec)
            .file_stem()
            .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned()),
    }
}

/// Seed for repetition `r`, shared by all arms so repetitions pair up.
pub fn repetition_seed(base: u64, r: usize) -> u64 {
    let mut z = base ^ (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Communities used for sparsification: FastGreedy, small-community merge,
/// then optional merging down to `n_c`.
pub fn prepare_communities(g: &Graph, s: &SparsifySection) -> Result<CommunityStructure> {
    let cs = detect_fastgreedy(g);
    let cs = merge_small(g, &cs, s.small_fraction);
    if s.n_c > 0 && cs.len() > s.n_c {
        merge_to_target(g, &cs, s.n_c)
    } else {
        Ok(cs)
    }
}

/// One finished repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub network: String,
    pub arm: String,
    pub run: usize,
    pub result: RunResult,
}

impl RunRecord {
    pub fn path(out: &Path, network: &str, arm: &str, run: usize) -> PathBuf {
        out.join("runs").join(network).join(arm).join(format!("run{run:02}.json"))
    }
}

/// Result of a failed repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub network: String,
    pub arm: String,
    pub run: usize,
    pub reason: String,
}

pub struct ExperimentOutcome {
    pub summary: StatsSummary,
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub files: Vec<PathBuf>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Prepared {
    name: String,
    original: Graph,
    communities: CommunityStructure,
}

fn make_gateway(
    cfg: &ExperimentConfig,
    working: &Graph,
    seed: u64,
    transcript: &Path,
) -> Result<Gateway> {
    let backend: Box<dyn VisionBackend> = match cfg.experiment.backend {
        Backend::Mock => Box::new(MockOracle::new(
            working.clone(),
            MockOracleConfig {
                rng_seed: seed ^ 0x5EED_0F_0AC1E,
                fault_rates: cfg.mock.fault_rates.clone(),
            },
        )?),
        Backend::Live => Box::new(LiveBackend::from_env(cfg.gateway.clone())?),
    };
    let model = match cfg.experiment.backend {
        Backend::Mock => "mock".to_string(),
        Backend::Live => cfg.gateway.model_id.clone(),
    };
    Gateway::new(backend, model).with_transcript(transcript)
}

fn run_one(
    cfg: &ExperimentConfig,
    net: &Prepared,
    sparse: &SparsifiedGraph,
    arm: &ArmConfig,
    run: usize,
    seed: u64,
) -> Result<(RunRecord, Vec<PathBuf>)> {
    let out = &cfg.experiment.out;
    let identity;
    let (working, map): (&Graph, &NodeMap) = match arm.graph_choice() {
        EvolveOn::Sparsified => (&sparse.graph, &sparse.node_map),
        EvolveOn::Original => {
            identity = NodeMap::identity(&net.original);
            (&net.original, &identity)
        }
    };
    let engine_cfg = cfg.engine_config(arm, net.original.node_count(), seed);
    let mut files = Vec::new();
    let gateway = if engine_cfg.uses_model() {
        let t = transcript_path(out, &net.name, &arm.name, run);
        let gw = make_gateway(cfg, working, seed, &t)?;
        files.push(t);
        Some(gw)
    } else {
        None
    };
    let needs_images = cfg.experiment.save_images || gateway.as_ref().is_some_and(Gateway::needs_images);
    let renderer = if needs_images {
        let spec = RenderSpec::default();
        let layout = LayoutCache::new(out.join("layouts")).get_or_compute(
            working,
            engine_cfg.layout_style,
            seed,
            &spec.canvas(),
        )?;
        Some(Renderer::new(layout, spec))
    } else {
        None
    };
    let archive = cfg.experiment.save_images.then(|| ImageArchive {
        root: out.join("images"),
        run_id: format!("{}_{}_run{run:02}", net.name, arm.name),
    });
    let io = EngineIo {
        gateway: gateway.as_ref(),
        renderer: renderer.as_ref(),
        archive: archive.as_ref(),
    };
    let result = evolve(working, &net.original, map, &engine_cfg, io)?;
    let record = RunRecord {
        network: net.name.clone(),
        arm: arm.name.clone(),
        run,
        result,
    };
    let path = RunRecord::path(out, &net.name, &arm.name, run);
    write_text(&path, &serde_json::to_string_pretty(&record)?)?;
    files.push(path);
    Ok((record, files))
}

/// Runs every (network, arm, repetition), writing per-run JSON files,
/// transcripts, sparsified graphs and the reports under the output directory.
/// Repetitions run in parallel; results are kept in a fixed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let out = &cfg.experiment.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let config_path = out.join("config.toml");
    write_text(&config_path, &cfg.to_toml()?)?;
    let mut files = vec![config_path];
    for spec in &cfg.experiment.networks {
        let original = NetworkSource::parse(spec)?.load()?;
        let name = network_name(spec);
        let communities = prepare_communities(&original, &cfg.sparsify)?;
        let net = Prepared {
            name,
            original,
            communities,
        };
        let runs: Vec<usize> = (0..cfg.experiment.runs).collect();
        let sparse: Vec<Result<SparsifiedGraph>> = runs
            .par_iter()
            .map(|&r| {
                let s = &cfg.sparsify;
                sparsify_if_large(
                    &net.original,
                    &net.communities,
                    s.n_v,
                    s.n_e,
                    s.prune,
                    repetition_seed(cfg.experiment.seed, r),
                )
            })
            .collect();
        let jobs: Vec<(usize, usize)> = (0..cfg.arms.len())
            .flat_map(|a| runs.iter().map(move |&r| (a, r)))
            .collect();
        let outcomes: Vec<Result<(RunRecord, Vec<PathBuf>)>> = jobs
            .par_iter()
            .map(|&(a, r)| {
                let sparse = sparse[r].as_ref().map_err(|e| Error::invalid(e.to_string()))?;
                run_one(cfg, &net, sparse, &cfg.arms[a], r, repetition_seed(cfg.experiment.seed, r))
            })
            .collect();
        for (r, s) in sparse.iter().enumerate() {
            if let Ok(s) = s {
                if s.sparsified {
                    files.extend(s.write_dir(&out.join("sparsified").join(&net.name), &format!("run{r:02}"))?);
                }
            }
        }
        for (&(a, r), outcome) in jobs.iter().zip(outcomes) {
            match outcome {
                Ok((record, paths)) => {
                    records.push(record);
                    files.extend(paths);
                }
                Err(e) => {
                    log::error!("{} / {} / run {r}: {e}", net.name, cfg.arms[a].name);
                    failures.push(RunFailure {
                        network: net.name.clone(),
                        arm: cfg.arms[a].name.clone(),
                        run: r,
                        reason: e.to_string(),
                    });
                }
            }
        }
        for arm in &cfg.arms {
            if !records.iter().any(|x| x.network == net.name && x.arm == arm.name) {
                let reason = failures
                    .iter()
                    .find(|f| f.network == net.name && f.arm == arm.name)
                    .map_or_else(String::new, |f| f.reason.clone());
                return Err(Error::Config(format!(
                    "every repetition of arm `{}` on `{}` failed: {reason}",
                    arm.name, net.name
                )));
            }
        }
    }
    let files = artifact_files(out)?;
    let summary = write_reports(
        out,
        &records,
        cfg.experiment.compare_on,
        cfg.experiment.alpha,
        Some(cfg.hash()?),
        &files,
    )?;
    Ok(ExperimentOutcome {
        summary,
        records,
        failures,
        files,
    })
}

/// Loads every run file below `out/runs`, ordered by network, arm, run.
pub fn load_run_records(out: &Path) -> Result<Vec<RunRecord>> {
    let root = out.join("runs");
    let mut records = Vec::new();
    let mut stack = vec![root.clone()];
    while let Some(dir) = stack.pop() {
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x == "json") {
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                records.push(serde_json::from_str::<RunRecord>(&text)?);
            }
        }
    }
    records.sort_by(|a, b| (&a.network, &a.arm, a.run).cmp(&(&b.network, &b.arm, b.run)));
    Ok(records)
}

/// Orders records by network, then by position of the arm in `arms`
/// (unknown arms last, by name), then by run.
pub fn sort_records(records: &mut [RunRecord], arms: &[String]) {
    let pos = |a: &str| arms.iter().position(|x| x == a).unwrap_or(arms.len());
    records.sort_by(|a, b| {
        (&a.network, pos(&a.arm), &a.arm, a.run).cmp(&(&b.network, pos(&b.arm), &b.arm, b.run))
    });
}

/// Arm order as first seen, grouped per network.
pub fn arm_order(records: &[RunRecord]) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in records {
        let arms = out.entry(r.network.clone()).or_default();
        if !arms.contains(&r.arm) {
            arms.push(r.arm.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.networks = vec!["synth:ba:60:2:1".into()];
        cfg.arms = vec![ArmConfig::preset("veo").unwrap()];
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "[experiment]\nnetworks = [\"synth:ba:40:2:3\"]\nruns = 3\n\n[[arms]]\nname = \"x\"\ninit = \"high_degree\"\n",
        )
        .unwrap();
        assert_eq!(cfg.sparsify.n_v, 50);
        assert_eq!(cfg.engine.crossover_rate, 0.2);
        assert_eq!(cfg.arms[0].reproduction, ReproductionMode::Normal);
        cfg.validate().unwrap();
    }

    #[test]
    fn flat_overrides() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_override("engine.k=7").unwrap();
        cfg.apply_override("experiment.objective=dismantling").unwrap();
        cfg.apply_override("sparsify.prune=degree_keep").unwrap();
        cfg.apply_override("experiment.networks=[\"a.txt\"]").unwrap();
        assert_eq!(cfg.engine.k, 7);
        assert_eq!(cfg.objective(), Objective::Dismantling);
        assert_eq!(cfg.sparsify.prune, PrunePolicy::DegreeKeep);
        assert_eq!(cfg.experiment.networks, vec!["a.txt".to_string()]);
        assert!(cfg.apply_override("engine.k=oops").is_err());
        assert!(cfg.apply_override("novalue").is_err());
    }

    #[test]
    fn network_specs() {
        assert_eq!(
            NetworkSource::parse("synth:ba:10:2:7").unwrap(),
            NetworkSource::BarabasiAlbert { n: 10, m: 2, seed: 7 }
        );
        assert!(NetworkSource::parse("synth:ba:10").is_err());
        assert_eq!(network_name("data/usair.edges"), "usair");
        assert_eq!(network_name("synth:ba:10:2:7"), "synth_ba_10_2_7");
    }

    #[test]
    fn arm_selection_resolves_presets() {
        let mut cfg = ExperimentConfig::default();
        cfg.select_arms(&["random".into(), "veo".into()]).unwrap();
        assert_eq!(cfg.arms.len(), 2);
        assert_eq!(cfg.arms[0].graph_choice(), EvolveOn::Original);
        assert_eq!(cfg.arms[1].graph_choice(), EvolveOn::Sparsified);
        assert!(cfg.select_arms(&["nope".into()]).is_err());
    }

    #[test]
    fn missing_network_file_fails_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.networks = vec!["/definitely/not/here.edges".into()];
        cfg.arms = vec![ArmConfig::preset("normal").unwrap()];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn repetition_seeds_differ() {
        let s: Vec<u64> = (0..5).map(|r| repetition_seed(1, r)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 5);
    }
}
