use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use veo_core::community::detect_fastgreedy;
use veo_core::experiment::{
    load_run_records, network_name, prepare_communities, sort_records, Backend, ExperimentConfig, NetworkSource, ObjectiveName,
    RunRecord,
};
use veo_core::layout::LayoutCache;
use veo_core::report::{artifact_files, summarize, write_reports};
use veo_core::{modularity, sparsify_if_large, Label, LayoutStyle, Phase, RenderSpec, Renderer, SeedSet};

#[derive(Parser)]
#[command(name = "veo", version, about = "Seed-set search with image-encoded evolutionary operators")]
struct Cli {
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = ["mock", "live"])]
    backend: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Arm name or preset; repeatable.
    #[arg(long = "arm", global = true)]
    arms: Vec<String>,
    /// Edge-list path or `synth:` spec; repeatable, replaces the config list.
    #[arg(long = "network", global = true)]
    networks: Vec<String>,
    #[arg(long, global = true, value_parser = ["edv", "dismantling"])]
    objective: Option<String>,
    /// Flat `section.key=value` config override; repeatable.
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect and merge communities, writing one file per network.
    Communities,
    /// Sparsify each network and write the reduced graph and node map.
    Sparsify,
    /// Render a seed set on the (sparsified) first network.
    Render {
        /// Comma-separated node labels of the working graph.
        #[arg(long)]
        solution: String,
        #[arg(long, default_value = "mutation")]
        phase: Phase,
        #[arg(long)]
        style: Option<LayoutStyle>,
        /// PNG path; defaults to `<out>/render/<network>_<phase>.png`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the configured arms and write runs and reports.
    Run {
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Print statistics over the runs found under `--out`.
    Stats,
    /// Rebuild the report files from the runs found under `--out`.
    Report,
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn resolve_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(b) = &cli.backend {
        cfg.experiment.backend = if b == "live" { Backend::Live } else { Backend::Mock };
    }
    if let Some(out) = &cli.out {
        cfg.experiment.out = out.clone();
    }
    if !cli.networks.is_empty() {
        cfg.experiment.networks = cli.networks.clone();
    }
    if let Some(o) = &cli.objective {
        cfg.experiment.objective = if o == "dismantling" {
            ObjectiveName::Dismantling
        } else {
            ObjectiveName::Edv
        };
    }
    cfg.select_arms(&cli.arms)?;
    if cfg.arms.is_empty() {
        cfg.select_arms(&["normal".to_string(), "veo".to_string()])?;
    }
    Ok(cfg)
}

fn networks(cfg: &ExperimentConfig) -> CliResult<Vec<(String, veo_core::Graph)>> {
    if cfg.experiment.networks.is_empty() {
        return Err("no network given; use --network or a config file".into());
    }
    cfg.experiment
        .networks
        .iter()
        .map(|spec| Ok((network_name(spec), NetworkSource::parse(spec)?.load()?)))
        .collect()
}

fn communities(cfg: &ExperimentConfig) -> CliResult<()> {
    let dir = cfg.experiment.out.join("communities");
    std::fs::create_dir_all(&dir)?;
    for (name, g) in networks(cfg)? {
        let raw = detect_fastgreedy(&g);
        let cs = prepare_communities(&g, &cfg.sparsify)?;
        let path = dir.join(format!("{name}.communities"));
        let mut buf = Vec::new();
        cs.write(&g, &mut buf)?;
        std::fs::write(&path, buf)?;
        println!(
            "{name}: |V|={} |E|={} detected={} (Q={:.4}) merged={} (Q={:.4}) -> {}",
            g.node_count(),
            g.edge_count(),
            raw.len(),
            modularity(&g, &raw)?,
            cs.len(),
            modularity(&g, &cs)?,
            path.display()
        );
    }
    Ok(())
}

fn sparsify(cfg: &ExperimentConfig) -> CliResult<()> {
    let s = &cfg.sparsify;
    for (name, g) in networks(cfg)? {
        let cs = prepare_communities(&g, s)?;
        let sg = sparsify_if_large(&g, &cs, s.n_v, s.n_e, s.prune, cfg.experiment.seed)?;
        let dir = cfg.experiment.out.join("sparsified").join(&name);
        let files = sg.write_dir(&dir, &format!("seed{}", cfg.experiment.seed))?;
        println!(
            "{name}: |V|={} |E|={} -> |V'|={} |E'|={}{} ({})",
            g.node_count(),
            g.edge_count(),
            sg.graph.node_count(),
            sg.graph.edge_count(),
            if sg.sparsified { "" } else { " [unchanged]" },
            files[0].display()
        );
    }
    Ok(())
}

fn render(
    cfg: &ExperimentConfig,
    solution: &str,
    phase: Phase,
    style: Option<LayoutStyle>,
    output: Option<&Path>,
) -> CliResult<()> {
    let (name, g) = networks(cfg)?.swap_remove(0);
    let s = &cfg.sparsify;
    let cs = prepare_communities(&g, s)?;
    let working = sparsify_if_large(&g, &cs, s.n_v, s.n_e, s.prune, cfg.experiment.seed)?.graph;
    let labels: Vec<Label> = solution
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(Label::parse)
        .collect();
    let seeds = SeedSet::from_labels(&working, &labels)?;
    let spec = RenderSpec::default();
    let layout = LayoutCache::new(cfg.experiment.out.join("layouts")).get_or_compute(
        &working,
        style.unwrap_or(cfg.engine.layout_style),
        cfg.experiment.seed,
        &spec.canvas(),
    )?;
    let png = Renderer::new(layout, spec).render_png(&working, &seeds, phase)?;
    let path = output.map_or_else(
        || {
            cfg.experiment
                .out
                .join("render")
                .join(format!("{name}_{}.png", phase.name()))
        },
        Path::to_path_buf,
    );
    veo_core::render::save_png(&path, &png)?;
    println!("{}", path.display());
    Ok(())
}

fn run(cfg: &mut ExperimentConfig, runs: Option<usize>, generations: Option<usize>, k: Option<usize>) -> CliResult<()> {
    if let Some(r) = runs {
        cfg.experiment.runs = r;
    }
    if let Some(g) = generations {
        cfg.engine.generations = g;
    }
    if let Some(k) = k {
        cfg.engine.k = k;
    }
    let outcome = veo_core::run_experiment(cfg)?;
    for f in &outcome.failures {
        eprintln!("failed: {} / {} / run {}: {}", f.network, f.arm, f.run, f.reason);
    }
    print!("{}", outcome.summary.table());
    println!("reports written to {}", cfg.experiment.out.display());
    Ok(())
}

/// Runs under `out`, in the arm order of the saved config when present.
fn records(out: &Path) -> CliResult<Vec<RunRecord>> {
    let mut records = load_run_records(out)?;
    if records.is_empty() {
        return Err(format!("no runs found under {}", out.join("runs").display()).into());
    }
    if let Ok(saved) = ExperimentConfig::load(&out.join("config.toml")) {
        let arms: Vec<String> = saved.arms.into_iter().map(|a| a.name).collect();
        sort_records(&mut records, &arms);
    }
    Ok(records)
}

fn report(cfg: &ExperimentConfig) -> CliResult<()> {
    let out = &cfg.experiment.out;
    let records = records(out)?;
    let hash = match ExperimentConfig::load(&out.join("config.toml")) {
        Ok(saved) => Some(saved.hash()?),
        Err(_) => None,
    };
    let files = artifact_files(out)?;
    let summary = write_reports(out, &records, cfg.experiment.compare_on, cfg.experiment.alpha, hash, &files)?;
    print!("{}", summary.table());
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let mut cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Communities => communities(&cfg),
        Command::Sparsify => sparsify(&cfg),
        Command::Render {
            solution,
            phase,
            style,
            output,
        } => render(&cfg, &solution, phase, style, output.as_deref()),
        Command::Run { runs, generations, k } => run(&mut cfg, runs, generations, k),
        Command::Stats => {
            let records = records(&cfg.experiment.out)?;
            print!(
                "{}",
                summarize(&records, cfg.experiment.compare_on, cfg.experiment.alpha)?.table()
            );
            Ok(())
        }
        Command::Report => report(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
