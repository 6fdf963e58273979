mod io;
mod manifest;
mod protocol;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use orgym_core::agent::{Agent, GreedyAgent, OracleAgent, RandomAgent};
use orgym_core::bias::{
    build_curriculum, build_splits, evaluate_bias, parse_decision, render_prompt, CurriculumPreset,
    Decision, DecisionRecord, NewsvendorScenario,
};
use orgym_core::env::{DebugEnv, EnvConfig};
use orgym_core::eval::{
    compute_metrics, render_table, run_episodes, stratified_sample, EpisodeRecord, EvalConfig,
    PAPER_TIER_COUNTS, PER_TYPE_TIER_COUNTS,
};
use orgym_core::lp::{parse_model, LpModel};
use orgym_core::saboteur::{
    generate_benchmark, generate_pool, read_benchmark, validate, write_benchmark,
    BenchmarkInstance, ErrorType, SabotageConfig,
};
use serde_json::json;

use manifest::ManifestBuilder;
use protocol::{AgentReply, EnvMessage, ExternalAgent};

#[derive(Parser)]
#[command(
    name = "orgym",
    version,
    about = "Infeasible-LP debugging and newsvendor bias benchmarks"
)]
struct Cli {
    /// Where to write the run manifest; defaults to a name derived from the main file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Debug)]
enum AgentSpec {
    Oracle,
    Greedy,
    Random,
    Cmd(String),
}

fn parse_agent(s: &str) -> Result<AgentSpec, String> {
    match s {
        "oracle" => Ok(AgentSpec::Oracle),
        "greedy" => Ok(AgentSpec::Greedy),
        "random" => Ok(AgentSpec::Random),
        _ => match s.strip_prefix("cmd:") {
            Some(c) if !c.trim().is_empty() => Ok(AgentSpec::Cmd(c.to_string())),
            _ => Err("expected oracle, greedy, random or cmd:<shell command>".into()),
        },
    }
}

fn parse_counts(s: &str) -> Result<Vec<(ErrorType, usize)>, String> {
    let mut out: Vec<(ErrorType, usize)> = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("{part:?}: expected TYPE=COUNT"))?;
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| format!("{part:?}: bad count"))?;
        if k.trim().eq_ignore_ascii_case("all") {
            out = ErrorType::ALL.iter().map(|t| (*t, n)).collect();
            continue;
        }
        let t: ErrorType = k
            .trim()
            .parse()
            .map_err(|_| format!("{part:?}: unknown error type"))?;
        match out.iter_mut().find(|(u, _)| *u == t) {
            Some(slot) => slot.1 = n,
            None => out.push((t, n)),
        }
    }
    if out.is_empty() {
        return Err("no counts given".into());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SamplePreset {
    /// 180 Easy, 158 Hard, 112 Expert.
    Paper,
    /// 200 Easy, 150 Hard, 100 Expert.
    PerType,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CurriculumArg {
    Stages,
    Levels,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BiasBaseline {
    /// Orders the closed-form optimum.
    Oracle,
    /// Orders mean demand whatever the prices.
    Mean,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a verified-infeasible debugging benchmark.
    GenDebug {
        /// Size of the generated seed-LP pool.
        #[arg(long, conflicts_with = "pool_file")]
        pool: Option<usize>,
        /// JSONL file of feasible seed models, one per line.
        #[arg(long)]
        pool_file: Option<PathBuf>,
        /// Instances per type, e.g. A=10,B=5 or all=10.
        #[arg(long, default_value = "all=10", value_parser = parse_counts)]
        counts: std::vec::Vec<(ErrorType, usize)>,
        #[arg(long, env = "ORGYM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        max_regenerations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the four validation phases on every instance.
    Validate {
        #[arg(long)]
        bench: PathBuf,
        /// Per-instance results as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an agent on a benchmark and record every episode.
    Eval {
        #[arg(long)]
        bench: PathBuf,
        #[arg(long, default_value = "oracle", value_parser = parse_agent)]
        agent: AgentSpec,
        /// Attempts per instance.
        #[arg(long, default_value_t = 5)]
        k: u32,
        #[arg(long, default_value_t = 50)]
        max_steps: u32,
        #[arg(long, env = "ORGYM_SEED", default_value_t = 0)]
        seed: u64,
        /// Evaluate a tier-stratified subset instead of every instance.
        #[arg(long, value_enum)]
        sample: Option<SamplePreset>,
        /// Seconds to wait for each external agent reply.
        #[arg(long, default_value_t = 120)]
        agent_timeout: u64,
        /// Worker threads; defaults to the CPU count.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Metrics JSON; a text table goes next to it with a .txt extension.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate newsvendor scenarios.
    GenBias {
        #[arg(long, default_value_t = 400)]
        n_id: usize,
        #[arg(long, default_value_t = 200)]
        n_ood: usize,
        /// Emit a training curriculum instead of the ID/OOD evaluation splits.
        #[arg(long, value_enum)]
        curriculum: Option<CurriculumArg>,
        #[arg(long, env = "ORGYM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write `{scenario_id, prompt}` lines here.
        #[arg(long)]
        prompts: Option<PathBuf>,
    },
    /// Score newsvendor decisions against the closed-form optimum.
    EvalBias {
        #[arg(long)]
        dataset: PathBuf,
        /// JSONL of `{scenario_id, response}`.
        #[arg(long, required_unless_present = "baseline")]
        decisions: Option<PathBuf>,
        #[arg(long, value_enum, conflicts_with = "decisions")]
        baseline: Option<BiasBaseline>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate episode records into RR, RR@k, DA, OP and step metrics.
    Report {
        records: PathBuf,
        /// Attempts per instance used for the run.
        #[arg(long, default_value_t = 5)]
        k: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute recorded episodes and check states and rewards match.
    Replay {
        records: PathBuf,
        #[arg(long)]
        bench: PathBuf,
        #[arg(long)]
        instance: Option<String>,
        #[arg(long)]
        attempt: Option<u32>,
        #[arg(long, default_value_t = 50)]
        max_steps: u32,
    },
    /// Serve a built-in agent over the stdio protocol.
    #[command(hide = true)]
    ServeAgent {
        #[arg(long, value_parser = parse_agent)]
        agent: AgentSpec,
        #[arg(long)]
        bench: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn sibling(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn manifest_path(explicit: &Option<PathBuf>, primary: &Path, cmd: &str) -> PathBuf {
    explicit
        .clone()
        .unwrap_or_else(|| sibling(primary, &format!(".{cmd}.manifest.json")))
}

fn load_bench(path: &Path) -> Result<Vec<BenchmarkInstance>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_benchmark(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn load_pool(path: &Path) -> Result<Vec<LpModel>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_model(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn make_agent(spec: &AgentSpec, seed: u64, timeout: Duration) -> Box<dyn Agent> {
    match spec {
        AgentSpec::Oracle => Box::new(OracleAgent::new()),
        AgentSpec::Greedy => Box::new(GreedyAgent::new()),
        AgentSpec::Random => Box::new(RandomAgent::new(seed)),
        AgentSpec::Cmd(c) => Box::new(ExternalAgent::new(c.clone(), timeout)),
    }
}

fn agent_label(spec: &AgentSpec) -> String {
    match spec {
        AgentSpec::Oracle => "oracle".into(),
        AgentSpec::Greedy => "greedy".into(),
        AgentSpec::Random => "random".into(),
        AgentSpec::Cmd(c) => format!("cmd:{c}"),
    }
}

fn write_report(records: &[EpisodeRecord], k: u32, out: Option<&Path>) -> Result<String> {
    let m = compute_metrics(records, k)?;
    let table = render_table(&m);
    if let Some(p) = out {
        io::write_json(p, &m)?;
        std::fs::write(p.with_extension("txt"), &table)?;
    }
    Ok(table)
}

fn run(cli: Cli) -> Result<()> {
    let mf = &cli.manifest;
    match cli.cmd {
        Cmd::GenDebug {
            pool,
            pool_file,
            counts,
            seed,
            max_regenerations,
            out,
        } => {
            let mut m = ManifestBuilder::new("gen-debug");
            let most = counts.iter().map(|c| c.1).max().unwrap_or(0);
            let models = match &pool_file {
                Some(p) => {
                    m.input(p);
                    load_pool(p)?
                }
                None => generate_pool(pool.unwrap_or((20 * most).max(200)), seed),
            };
            let cfg = SabotageConfig {
                rng_seed: seed,
                max_regenerations,
                ..SabotageConfig::default()
            };
            let bench = generate_benchmark(&models, &counts, &cfg)?;
            let mut w = BufWriter::new(
                File::create(&out).with_context(|| format!("creating {}", out.display()))?,
            );
            write_benchmark(&mut w, &bench)?;
            w.flush()?;
            let counts_json: Vec<_> = counts
                .iter()
                .map(|(t, n)| json!({"type": t.to_string(), "count": n}))
                .collect();
            m.seed("generation", seed)
                .config(json!({"pool_size": models.len(), "counts": counts_json, "sabotage": cfg}))
                .output(&out)
                .write(&manifest_path(mf, &out, "gen-debug"))?;
            println!("wrote {} instances to {}", bench.len(), out.display());
        }
        Cmd::Validate { bench, out } => {
            let insts = load_bench(&bench)?;
            let reports: Vec<_> = insts
                .iter()
                .map(|i| {
                    let r = validate(i);
                    json!({"instance_id": i.id, "pass": r.pass, "failed_phase": r.failed_phase, "detail": r.detail})
                })
                .collect();
            let passed = reports.iter().filter(|r| r["pass"] == true).count();
            let mut m = ManifestBuilder::new("validate");
            m.input(&bench).config(json!({}));
            if let Some(o) = &out {
                io::write_jsonl(o, &reports)?;
                m.output(o);
            }
            m.write(&manifest_path(
                mf,
                out.as_deref().unwrap_or(&bench),
                "validate",
            ))?;
            let pct = if insts.is_empty() {
                100.0
            } else {
                100.0 * passed as f64 / insts.len() as f64
            };
            println!("{passed}/{} instances valid ({pct:.0}% pass)", insts.len());
            for r in reports.iter().filter(|r| r["pass"] == false) {
                println!(
                    "  {} phase {}: {}",
                    r["instance_id"], r["failed_phase"], r["detail"]
                );
            }
            if passed != insts.len() {
                bail!("{} instances failed validation", insts.len() - passed);
            }
        }
        Cmd::Eval {
            bench,
            agent,
            k,
            max_steps,
            seed,
            sample,
            agent_timeout,
            jobs,
            out,
            report,
        } => {
            let mut insts = load_bench(&bench)?;
            if let Some(preset) = sample {
                let counts = match preset {
                    SamplePreset::Paper => PAPER_TIER_COUNTS,
                    SamplePreset::PerType => PER_TYPE_TIER_COUNTS,
                };
                insts = stratified_sample(&insts, &counts, seed)?;
            }
            let env = EnvConfig {
                max_steps,
                ..EnvConfig::default()
            };
            env.check()?;
            let cfg = EvalConfig { attempts: k, env };
            let timeout = Duration::from_secs(agent_timeout);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()?;
            let records =
                pool.install(|| run_episodes(|| make_agent(&agent, seed, timeout), &insts, &cfg));
            io::write_jsonl(&out, &records)?;
            let table = write_report(&records, k, report.as_deref())?;
            print!("{table}");
            let mut m = ManifestBuilder::new("eval");
            m.seed("agent", seed)
                .seed("sampling", seed)
                .config(json!({
                    "agent": agent_label(&agent),
                    "eval": cfg,
                    "sample": sample.map(|s| format!("{s:?}")),
                    "agent_timeout_s": agent_timeout,
                }))
                .input(&bench)
                .output(&out);
            if let Some(r) = &report {
                m.output(r).output(&r.with_extension("txt"));
            }
            m.write(&manifest_path(mf, &out, "eval"))?;
        }
        Cmd::GenBias {
            n_id,
            n_ood,
            curriculum,
            seed,
            out,
            prompts,
        } => {
            let mut m = ManifestBuilder::new("gen-bias");
            let scenarios: Vec<NewsvendorScenario> = match curriculum {
                Some(c) => {
                    let preset = match c {
                        CurriculumArg::Stages => CurriculumPreset::Stages,
                        CurriculumArg::Levels => CurriculumPreset::Levels,
                    };
                    m.config(json!({"curriculum": preset}));
                    build_curriculum(preset, seed)
                        .into_iter()
                        .flat_map(|s| s.scenarios)
                        .collect()
                }
                None => {
                    let ds = build_splits(n_id, n_ood, seed);
                    let meta = sibling(&out, ".meta.json");
                    io::write_json(&meta, &ds.meta)?;
                    m.config(json!({"n_id": n_id, "n_ood": n_ood, "meta": ds.meta}))
                        .output(&meta);
                    ds.scenarios
                }
            };
            io::write_jsonl(&out, &scenarios)?;
            m.seed("generation", seed).output(&out);
            if let Some(p) = &prompts {
                let lines: Vec<_> = scenarios
                    .iter()
                    .map(|s| json!({"scenario_id": s.id, "prompt": render_prompt(s)}))
                    .collect();
                io::write_jsonl(p, &lines)?;
                m.output(p);
            }
            m.write(&manifest_path(mf, &out, "gen-bias"))?;
            println!("wrote {} scenarios to {}", scenarios.len(), out.display());
        }
        Cmd::EvalBias {
            dataset,
            decisions,
            baseline,
            out,
        } => {
            let scenarios: Vec<NewsvendorScenario> = io::read_jsonl(&dataset)?;
            let mut m = ManifestBuilder::new("eval-bias");
            m.input(&dataset);
            let ds: Vec<Decision> = match (&decisions, baseline) {
                (Some(p), _) => {
                    m.input(p);
                    io::read_jsonl::<DecisionRecord>(p)?
                        .iter()
                        .map(parse_decision)
                        .collect()
                }
                (None, Some(b)) => scenarios
                    .iter()
                    .map(|s| {
                        let q = match b {
                            BiasBaseline::Oracle => s.q_opt,
                            BiasBaseline::Mean => s.demand().0,
                        };
                        parse_decision(&DecisionRecord {
                            scenario_id: s.id.clone(),
                            response: q.to_string(),
                        })
                    })
                    .collect(),
                (None, None) => bail!("either --decisions or --baseline is required"),
            };
            let rep = evaluate_bias(&ds, &scenarios)?;
            let pct = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}%"));
            println!("decisions    {}", rep.decisions);
            println!("rationality  {:.2}%", rep.rationality);
            println!("bias diff    {}", pct(rep.bias_diff));
            println!("ID bias      {}", pct(rep.id_bias));
            println!("OOD bias     {}", pct(rep.ood_bias));
            println!("drift        {}", pct(rep.drift));
            for (b, s) in &rep.per_bucket {
                let r = s.mean_ratio.map_or("-".to_string(), |x| format!("{x:.4}"));
                println!("  {b:<10} n={:<5} Q/Q* {r}", s.n);
            }
            m.config(json!({"baseline": baseline.map(|b| format!("{b:?}"))}));
            if let Some(o) = &out {
                io::write_json(o, &rep)?;
                m.output(o);
            }
            m.write(&manifest_path(
                mf,
                out.as_deref().unwrap_or(&dataset),
                "eval-bias",
            ))?;
        }
        Cmd::Report { records, k, out } => {
            let recs: Vec<EpisodeRecord> = io::read_jsonl(&records)?;
            let table = write_report(&recs, k, out.as_deref())?;
            print!("{table}");
            let mut m = ManifestBuilder::new("report");
            m.input(&records).config(json!({"k": k}));
            if let Some(o) = &out {
                m.output(o).output(&o.with_extension("txt"));
            }
            m.write(&manifest_path(
                mf,
                out.as_deref().unwrap_or(&records),
                "report",
            ))?;
        }
        Cmd::Replay {
            records,
            bench,
            instance,
            attempt,
            max_steps,
        } => {
            let recs: Vec<EpisodeRecord> = io::read_jsonl(&records)?;
            let insts: HashMap<String, BenchmarkInstance> = load_bench(&bench)?
                .into_iter()
                .map(|i| (i.id.clone(), i))
                .collect();
            let cfg = EnvConfig {
                max_steps,
                ..EnvConfig::default()
            };
            let mut mismatches = 0usize;
            let mut replayed = 0usize;
            for r in recs.iter().filter(|r| {
                instance.as_ref().is_none_or(|i| *i == r.instance_id)
                    && attempt.is_none_or(|a| a == r.attempt_index)
            }) {
                let inst = insts
                    .get(&r.instance_id)
                    .with_context(|| format!("{} not in benchmark", r.instance_id))?;
                let env = DebugEnv::new(inst.clone(), cfg.clone())?;
                let mut s = env.reset()?;
                replayed += 1;
                for (i, st) in r.trajectory.iter().enumerate() {
                    let t = env.step(&s, &st.action)?;
                    let ok = s.digest() == st.state_digest
                        && t.reward == st.reward
                        && t.state.status == st.status;
                    if instance.is_some() {
                        println!(
                            "{:>3} {:<12} {:>8.2} {:<10} {}",
                            i + 1,
                            st.action.kind.name(),
                            t.reward.total,
                            t.state.status.to_string(),
                            if ok { "ok" } else { "MISMATCH" }
                        );
                    }
                    if !ok {
                        mismatches += 1;
                        break;
                    }
                    s = t.state;
                }
            }
            let mut m = ManifestBuilder::new("replay");
            m.input(&records)
                .input(&bench)
                .config(json!({"max_steps": max_steps}));
            m.write(&manifest_path(mf, &records, "replay"))?;
            println!("replayed {replayed} episodes, {mismatches} mismatched");
            if mismatches > 0 {
                bail!("{mismatches} episodes diverged from their records");
            }
        }
        Cmd::ServeAgent { agent, bench, seed } => serve_agent(&agent, &bench, seed)?,
    }
    Ok(())
}

/// Answers protocol messages on stdin with a built-in agent. The instance is
/// looked up from the episode id, so this needs the benchmark file.
fn serve_agent(spec: &AgentSpec, bench: &Path, seed: u64) -> Result<()> {
    let insts: HashMap<String, BenchmarkInstance> = load_bench(bench)?
        .into_iter()
        .map(|i| (i.id.clone(), i))
        .collect();
    let mut agent = make_agent(spec, seed, protocol::DEFAULT_TIMEOUT);
    let mut current = String::new();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in std::io::stdin().lock().lines() {
        let msg: EnvMessage = serde_json::from_str(&line?)?;
        if msg.episode_id != current {
            let (id, attempt) = msg
                .episode_id
                .rsplit_once('/')
                .context("episode id without attempt")?;
            let inst = insts
                .get(id)
                .with_context(|| format!("unknown instance {id}"))?;
            agent.begin(inst, attempt.parse()?)?;
            current = msg.episode_id.clone();
        }
        let action = agent.act(&msg.state)?;
        let reply = AgentReply {
            episode_id: Some(msg.episode_id),
            sequence_no: Some(msg.sequence_no),
            action,
        };
        serde_json::to_writer(&mut out, &reply)?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("{}", json!({"error": chain.first(), "causes": &chain[1..]}));
            ExitCode::FAILURE
        }
    }
}
