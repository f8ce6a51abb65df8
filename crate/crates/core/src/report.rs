//! Statistics over finished runs and the machine-readable report files.
//! Every CSV row type round-trips: emit, parse, emit gives identical bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiment::{arm_order, CompareOn, RunRecord};
use crate::gateway::TranscriptRecord;
use crate::stats::{anova_oneway, average_rank, mean, std_dev, wilcoxon_rank_sum, Decision};
use crate::validate::Check;

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

pub fn from_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn to_jsonl<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn from_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub network: String,
    pub arm: String,
    pub runs: usize,
    pub mean: f64,
    pub sd: f64,
    pub best: f64,
    pub mean_working: f64,
    pub sd_working: f64,
    pub gateway_calls: usize,
    pub fallbacks: usize,
}

/// Rank-sum comparison of `arm` against `reference`; the decision reads
/// from the point of view of `arm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub network: String,
    pub arm: String,
    pub reference: String,
    pub u: f64,
    pub p: f64,
    pub exact: bool,
    pub decision: String,
}

/// JSON has no infinities; non-finite floats travel as strings.
mod lenient_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    struct V;

    impl Visitor<'_> for V {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or inf/NaN")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            v.parse().map_err(E::custom)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub network: String,
    pub arms: usize,
    #[serde(with = "lenient_f64")]
    pub f: f64,
    pub p: f64,
    pub different: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub arm: String,
    pub average_rank: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub compare_on: CompareOn,
    pub alpha: f64,
    pub arms: Vec<ArmSummary>,
    pub pairwise: Vec<PairwiseRow>,
    pub anova: Vec<AnovaRow>,
    pub ranks: Vec<RankRow>,
}

impl StatsSummary {
    pub fn arm(&self, network: &str, arm: &str) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.network == network && a.arm == arm)
    }

    pub fn decision(&self, network: &str, arm: &str) -> Option<Decision> {
        self.pairwise
            .iter()
            .find(|p| p.network == network && p.arm == arm)
            .and_then(|p| Decision::from_symbol(&p.decision))
    }

    /// Plain-text table for terminals.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let by_net = group(&self.arms, |a| a.network.clone());
        for (net, arms) in by_net {
            out.push_str(&format!("{net}\n"));
            out.push_str(&format!(
                "  {:<18} {:>5} {:>12} {:>10} {:>10} {:>6}\n",
                "arm", "runs", "mean", "sd", "best", "vs ref"
            ));
            for a in arms {
                let d = self.decision(&net, &a.arm).map_or("", |d| d.symbol());
                out.push_str(&format!(
                    "  {:<18} {:>5} {:>12.4} {:>10.4} {:>10.4} {:>6}\n",
                    a.arm, a.runs, a.mean, a.sd, a.best, d
                ));
            }
            if let Some(an) = self.anova.iter().find(|r| r.network == net) {
                out.push_str(&format!("  anova F = {:.4}, p = {:.4}\n", an.f, an.p));
            }
        }
        if !self.ranks.is_empty() {
            out.push_str("average rank\n");
            for r in &self.ranks {
                out.push_str(&format!("  {:<18} {:.3}\n", r.arm, r.average_rank));
            }
        }
        out
    }
}

fn group<T: Clone, K: Ord>(items: &[T], key: impl Fn(&T) -> K) -> BTreeMap<K, Vec<T>> {
    let mut out: BTreeMap<K, Vec<T>> = BTreeMap::new();
    for it in items {
        out.entry(key(it)).or_default().push(it.clone());
    }
    out
}

fn scores(records: &[RunRecord], network: &str, arm: &str, on: CompareOn) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.network == network && r.arm == arm)
        .map(|r| match on {
            CompareOn::Original => r.result.fitness_original,
            CompareOn::Working => r.result.fitness_working,
        })
        .collect()
}

/// Per-arm statistics. The last arm of each network is the reference for
/// the rank-sum column. Tests needing more data than available are skipped.
pub fn summarize(records: &[RunRecord], compare_on: CompareOn, alpha: f64) -> Result<StatsSummary> {
    let order = arm_order(records);
    let mut arms = Vec::new();
    let mut pairwise = Vec::new();
    let mut anova = Vec::new();
    let mut rank_input: Vec<Vec<f64>> = Vec::new();
    let mut rank_arms: Option<Vec<String>> = None;
    let mut rankable = true;
    for (net, names) in &order {
        let mut groups = Vec::new();
        for name in names {
            let runs: Vec<&RunRecord> = records.iter().filter(|r| &r.network == net && &r.arm == name).collect();
            let xs = scores(records, net, name, compare_on);
            let ws = scores(records, net, name, CompareOn::Working);
            arms.push(ArmSummary {
                network: net.clone(),
                arm: name.clone(),
                runs: xs.len(),
                mean: mean(&xs),
                sd: std_dev(&xs),
                best: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_working: mean(&ws),
                sd_working: std_dev(&ws),
                gateway_calls: runs.iter().map(|r| r.result.gateway_calls).sum(),
                fallbacks: runs.iter().map(|r| r.result.fallbacks.len()).sum(),
            });
            groups.push(xs);
        }
        if let Some((reference, ref_scores)) = names.last().zip(groups.last()) {
            for (name, xs) in names.iter().zip(&groups).take(names.len() - 1) {
                if let Ok(t) = wilcoxon_rank_sum(xs, ref_scores, alpha) {
                    pairwise.push(PairwiseRow {
                        network: net.clone(),
                        arm: name.clone(),
                        reference: reference.clone(),
                        u: t.statistic,
                        p: t.p,
                        exact: t.exact,
                        decision: t.decision.symbol().to_string(),
                    });
                }
            }
        }
        if let Ok(a) = anova_oneway(&groups) {
            anova.push(AnovaRow {
                network: net.clone(),
                arms: groups.len(),
                f: a.f,
                p: a.p,
                different: a.p < alpha,
            });
        }
        match &rank_arms {
            None => rank_arms = Some(names.clone()),
            Some(a) if a != names => rankable = false,
            _ => {}
        }
        rank_input.push(groups.iter().map(|g| mean(g)).collect());
    }
    let ranks = match rank_arms {
        Some(names) if rankable => names
            .into_iter()
            .zip(average_rank(&rank_input))
            .map(|(arm, average_rank)| RankRow { arm, average_rank })
            .collect(),
        _ => Vec::new(),
    };
    Ok(StatsSummary {
        compare_on,
        alpha,
        arms,
        pairwise,
        anova,
        ranks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub network: String,
    pub arm: String,
    pub run: usize,
    pub seed: u64,
    pub fitness_working: f64,
    pub fitness_original: f64,
    /// Best seed set in original labels, space separated.
    pub best_original: String,
}

/// Best-so-far fitness per generation, averaged over runs, with its
/// standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub network: String,
    pub arm: String,
    pub generation: usize,
    pub runs: usize,
    pub mean_best_so_far: f64,
    pub sem: f64,
    pub mean_population: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub network: String,
    pub arm: String,
    pub run: usize,
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub sd: f64,
    pub best_so_far: f64,
    pub repairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub network: String,
    pub arm: String,
    pub check: String,
    pub pass: u64,
    pub fail: u64,
    pub pass_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationDegreeRow {
    pub network: String,
    pub arm: String,
    pub run: usize,
    pub generation: usize,
    pub operator: String,
    pub removed: String,
    pub added: String,
    pub removed_degree: usize,
    pub added_degree: usize,
}

/// Per-call latency aggregated by model and operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub model: String,
    pub operator: String,
    pub calls: usize,
    pub failed: usize,
    pub mean_s: f64,
    pub sd_s: f64,
    pub mean_attempts: f64,
}

pub fn result_rows(records: &[RunRecord]) -> Vec<ResultRow> {
    records
        .iter()
        .map(|r| ResultRow {
            network: r.network.clone(),
            arm: r.arm.clone(),
            run: r.run,
            seed: r.result.seed,
            fitness_working: r.result.fitness_working,
            fitness_original: r.result.fitness_original,
            best_original: r
                .result
                .best_original
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect()
}

pub fn trace_lines(records: &[RunRecord]) -> Vec<TraceLine> {
    records
        .iter()
        .flat_map(|r| {
            r.result.trace.iter().map(move |g| TraceLine {
                network: r.network.clone(),
                arm: r.arm.clone(),
                run: r.run,
                generation: g.generation,
                best: g.best,
                mean: g.mean,
                sd: g.sd,
                best_so_far: g.best_so_far,
                repairs: g.repairs,
            })
        })
        .collect()
}

/// Aggregated trace for generations `1..=G`; generation 0 (the initial
/// population) appears only in the per-run lines.
pub fn trace_rows(records: &[RunRecord]) -> Vec<TraceRow> {
    let mut rows = Vec::new();
    for (net, arms) in arm_order(records) {
        for arm in arms {
            let runs: Vec<&RunRecord> = records.iter().filter(|r| r.network == net && r.arm == arm).collect();
            let gens = runs.iter().map(|r| r.result.generations).max().unwrap_or(0);
            for generation in 1..=gens {
                let at: Vec<_> = runs
                    .iter()
                    .filter_map(|r| r.result.trace.iter().find(|g| g.generation == generation))
                    .collect();
                let best: Vec<f64> = at.iter().map(|g| g.best_so_far).collect();
                let pop: Vec<f64> = at.iter().map(|g| g.mean).collect();
                let sem = if best.len() > 1 {
                    std_dev(&best) / (best.len() as f64).sqrt()
                } else {
                    0.0
                };
                rows.push(TraceRow {
                    network: net.clone(),
                    arm: arm.clone(),
                    generation,
                    runs: best.len(),
                    mean_best_so_far: mean(&best),
                    sem,
                    mean_population: mean(&pop),
                });
            }
        }
    }
    rows
}

pub fn validation_rows(records: &[RunRecord]) -> Vec<ValidationRow> {
    let mut rows = Vec::new();
    for (net, arms) in arm_order(records) {
        for arm in arms {
            for check in Check::ALL {
                let (mut pass, mut fail) = (0, 0);
                for r in records.iter().filter(|r| r.network == net && r.arm == arm) {
                    let t = r.result.validation.tally(check);
                    pass += t.pass;
                    fail += t.fail;
                }
                if pass + fail == 0 {
                    continue;
                }
                rows.push(ValidationRow {
                    network: net.clone(),
                    arm: arm.clone(),
                    check: check.code().to_string(),
                    pass,
                    fail,
                    pass_rate: Some(pass as f64 / (pass + fail) as f64),
                });
            }
        }
    }
    rows
}

pub fn mutation_degree_rows(records: &[RunRecord]) -> Vec<MutationDegreeRow> {
    records
        .iter()
        .flat_map(|r| {
            r.result.mutation_log.iter().map(move |m| MutationDegreeRow {
                network: r.network.clone(),
                arm: r.arm.clone(),
                run: r.run,
                generation: m.generation,
                operator: m.operator.clone(),
                removed: m.removed.to_string(),
                added: m.added.to_string(),
                removed_degree: m.removed_degree,
                added_degree: m.added_degree,
            })
        })
        .collect()
}

pub fn transcript_path(out: &Path, network: &str, arm: &str, run: usize) -> PathBuf {
    out.join("transcripts")
        .join(network)
        .join(arm)
        .join(format!("run{run:02}.jsonl"))
}

/// Latency summary over the transcripts of the given runs, where present.
pub fn latency_rows(out: &Path, records: &[RunRecord]) -> Result<Vec<LatencyRow>> {
    let mut calls: BTreeMap<(String, String), Vec<TranscriptRecord>> = BTreeMap::new();
    for r in records {
        let path = transcript_path(out, &r.network, &r.arm, r.run);
        let Ok(text) = std::fs::read_to_string(&path) else {
            continue;
        };
        for t in from_jsonl::<TranscriptRecord>(&text)? {
            calls
                .entry((t.model_id.clone(), t.role.operator().to_string()))
                .or_default()
                .push(t);
        }
    }
    Ok(calls
        .into_iter()
        .map(|((model, operator), ts)| {
            let lat: Vec<f64> = ts.iter().map(|t| t.latency_s).collect();
            let attempts: Vec<f64> = ts.iter().map(|t| f64::from(t.attempts)).collect();
            LatencyRow {
                model,
                operator,
                calls: ts.len(),
                failed: ts.iter().filter(|t| t.error.is_some()).count(),
                mean_s: mean(&lat),
                sd_s: if lat.len() > 1 { std_dev(&lat) } else { 0.0 },
                mean_attempts: mean(&attempts),
            }
        })
        .collect())
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(Error::io(dir, e)),
    };
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Run artifacts listed in the manifest: the saved config plus everything
/// under `runs/`, `transcripts/` and `sparsified/`, sorted.
pub fn artifact_files(out: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let config = out.join("config.toml");
    if config.is_file() {
        files.push(config);
    }
    for sub in ["runs", "transcripts", "sparsified"] {
        walk(&out.join(sub), &mut files)?;
    }
    files.sort();
    Ok(files)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: Option<String>,
    pub files: Vec<ManifestEntry>,
}

pub const REPORT_FILES: [&str; 9] = [
    "summary.json",
    "traces.jsonl",
    "trace.csv",
    "results.csv",
    "pairwise.csv",
    "anova.csv",
    "validation.csv",
    "mutation_degrees.csv",
    "latency.csv",
];

/// Writes every report file plus `manifest.json` into `out` and returns
/// the summary. `extra_files` (run JSON, transcripts, ...) are listed in
/// the manifest too.
pub fn write_reports(
    out: &Path,
    records: &[RunRecord],
    compare_on: CompareOn,
    alpha: f64,
    config_hash: Option<String>,
    extra_files: &[PathBuf],
) -> Result<StatsSummary> {
    let summary = summarize(records, compare_on, alpha)?;
    let contents = [
        serde_json::to_string_pretty(&summary)? + "\n",
        to_jsonl(&trace_lines(records))?,
        to_csv(&trace_rows(records))?,
        to_csv(&result_rows(records))?,
        to_csv(&summary.pairwise)?,
        to_csv(&summary.anova)?,
        to_csv(&validation_rows(records))?,
        to_csv(&mutation_degree_rows(records))?,
        to_csv(&latency_rows(out, records)?)?,
    ];
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = Vec::new();
    for (name, text) in REPORT_FILES.iter().zip(contents) {
        let path = out.join(name);
        std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
        files.push(ManifestEntry {
            path: (*name).to_string(),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
            bytes: text.len() as u64,
        });
    }
    for path in extra_files {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let rel = path.strip_prefix(out).unwrap_or(path);
        files.push(ManifestEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash,
        files,
    };
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// Re-reads one report file and re-emits it; used to check that reports
/// are stable under a parse round trip.
pub fn reemit(name: &str, text: &str) -> Result<String> {
    Ok(match name {
        "summary.json" => serde_json::to_string_pretty(&serde_json::from_str::<StatsSummary>(text)?)? + "\n",
        "traces.jsonl" => to_jsonl(&from_jsonl::<TraceLine>(text)?)?,
        "trace.csv" => to_csv(&from_csv::<TraceRow>(text)?)?,
        "results.csv" => to_csv(&from_csv::<ResultRow>(text)?)?,
        "pairwise.csv" => to_csv(&from_csv::<PairwiseRow>(text)?)?,
        "anova.csv" => to_csv(&from_csv::<AnovaRow>(text)?)?,
        "validation.csv" => to_csv(&from_csv::<ValidationRow>(text)?)?,
        "mutation_degrees.csv" => to_csv(&from_csv::<MutationDegreeRow>(text)?)?,
        "latency.csv" => to_csv(&from_csv::<LatencyRow>(text)?)?,
        "manifest.json" => serde_json::to_string_pretty(&serde_json::from_str::<Manifest>(text)?)? + "\n",
        other => return Err(Error::invalid(format!("unknown report file {other}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_byte_stable() {
        let rows = vec![
            TraceRow {
                network: "a,b".into(),
                arm: "veo".into(),
                generation: 1,
                runs: 3,
                mean_best_so_far: 0.1 + 0.2,
                sem: 1e-17,
                mean_population: 2.0,
            },
            TraceRow {
                network: "x".into(),
                arm: "y \"q\"".into(),
                generation: 2,
                runs: 1,
                mean_best_so_far: f64::MAX,
                sem: 0.0,
                mean_population: -3.5,
            },
        ];
        let text = to_csv(&rows).unwrap();
        assert_eq!(from_csv::<TraceRow>(&text).unwrap(), rows);
        assert_eq!(reemit("trace.csv", &text).unwrap(), text);
    }

    #[test]
    fn infinite_f_round_trips_in_json_and_csv() {
        let rows = vec![AnovaRow {
            network: "n".into(),
            arms: 2,
            f: f64::INFINITY,
            p: 0.0,
            different: true,
        }];
        let json = serde_json::to_string(&rows).unwrap();
        assert_eq!(serde_json::from_str::<Vec<AnovaRow>>(&json).unwrap(), rows);
        let text = to_csv(&rows).unwrap();
        assert_eq!(reemit("anova.csv", &text).unwrap(), text);
    }

    #[test]
    fn missing_pass_rate_round_trips() {
        let rows = vec![ValidationRow {
            network: "n".into(),
            arm: "a".into(),
            check: "T_I1".into(),
            pass: 0,
            fail: 0,
            pass_rate: None,
        }];
        let text = to_csv(&rows).unwrap();
        assert_eq!(from_csv::<ValidationRow>(&text).unwrap(), rows);
    }
}
