//! Visual evolutionary optimization of seed sets on graphs: community-aware
//! sparsification, rendered solution images, a vision-model gateway with a
//! deterministic mock, and the genetic loop that ties them together.

pub mod community;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod fitness;
pub mod gateway;
pub mod graph;
pub mod layout;
pub mod mock;
pub mod parse;
pub mod prompts;
pub mod render;
pub mod report;
pub mod sparsify;
pub mod stats;
pub mod synth;
pub mod validate;

pub use community::{detect_fastgreedy, merge_small, merge_to_target, modularity, CommunityStructure};
pub use engine::{evolve, EngineConfig, EngineIo, InitMode, ReproductionMode, RunResult};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ArmConfig, ExperimentConfig, NetworkSource};
pub use fitness::{dismantling_fitness, edv, ic_simulate, Objective, SeedSet};
pub use gateway::{Gateway, LiveBackend, LiveConfig, TaskContext, VisionBackend};
pub use graph::{betweenness, load_edge_list_file, load_edge_list_str, Graph, Label};
pub use layout::{compute_layout, Canvas, Layout, LayoutStyle};
pub use mock::{FaultRates, MockOracle, MockOracleConfig};
pub use prompts::Role;
pub use render::{render_solution_image, Phase, RenderSpec, Renderer};
pub use report::{summarize, write_reports, StatsSummary};
pub use sparsify::{sparsify, sparsify_if_large, NodeMap, PrunePolicy, SparsifiedGraph};
pub use validate::{validate_and_repair, Candidate, Check, Strictness, ValidationReport};
