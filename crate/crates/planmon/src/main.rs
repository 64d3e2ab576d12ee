//! Command-line harness: validate, solve, decide, oracle, evaluate,
//! compare, simulate, scale. Emits CSV/JSON artifacts plus an
//! append-only run log of JSON manifests. Exit codes: 0 success,
//! 1 input error, 2 refusal (depth guard / node budget).

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use planmon::belief::FactoredBelief;
use planmon::combine::{run_step, Combiner};
use planmon::error::{Error, Result};
use planmon::eval::{
    band_improvement, belief_grid, error_report, evaluate_policy_exact, oracle_value, simulate,
    BandSide, DEFAULT_DEPTH_GUARD, DEFAULT_NODE_BUDGET,
};
use planmon::model::{generate_scaling_family, load_instance, MonitoringInstance};
use planmon::pwlc::evaluate as pwlc_evaluate;
use planmon::solver::{load_bundle, serialize_bundle, solve_all, solve_all_with_stats};

#[derive(Parser)]
#[command(name = "planmon", version, about = "Decision-theoretic plan-precondition monitoring")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Append-only run log of JSON manifests, one line per artifact run.
    #[arg(long, global = true, default_value = "runs.jsonl")]
    run_log: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check an instance file; print warnings, fail on violations.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Solve all single-failure subproblems and write the policy dump.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// Policy dump path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Per-stage summary CSV; defaults to `<out>.summary.csv`.
        #[arg(long)]
        summary_out: Option<PathBuf>,
    },
    /// One combined decision from a policy dump at a belief point.
    Decide {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 1)]
        stage: usize,
        /// Comma-separated Pr(holds), one entry per stage.
        #[arg(long)]
        belief: String,
        #[arg(long, value_parser = parse_combiner, default_value = "npc")]
        combiner: Combiner,
        #[arg(long)]
        json: bool,
    },
    /// Exact joint expectimax value at one belief point.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        belief: String,
        #[arg(long, default_value_t = 1)]
        stage: usize,
        #[arg(long, default_value_t = DEFAULT_DEPTH_GUARD)]
        depth_guard: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Exact expected value of a combiner policy at one belief point.
    Evaluate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        belief: String,
        #[arg(long, default_value_t = 1)]
        stage: usize,
        /// Evaluate only this combiner; default evaluates both.
        #[arg(long, value_parser = parse_combiner)]
        combiner: Option<Combiner>,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Grid comparison of NPC/VAPC (optionally against the oracle), or
    /// per-band VAPC-vs-NPC improvement with --band.
    Compare {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated grid levels, e.g. 0.0,0.1,...,1.0.
        #[arg(long, conflicts_with = "band")]
        grid_levels: Option<String>,
        /// Comma-separated band centers p; each band is the grid over
        /// {p-0.1, p-0.05, p}.
        #[arg(long)]
        band: Option<String>,
        /// Include the exact oracle (subject to the depth guard).
        #[arg(long)]
        with_oracle: bool,
        /// Restrict the aggregate CSV to one side's bands.
        #[arg(long, value_parser = parse_side)]
        side: Option<BandSide>,
        #[arg(long, default_value_t = DEFAULT_DEPTH_GUARD)]
        depth_guard: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
        /// Per-point CSV (grid mode) or band CSV (band mode).
        #[arg(long)]
        out: PathBuf,
        /// Aggregate CSV (grid mode); defaults to `<out>.aggregate.csv`.
        #[arg(long)]
        aggregate_out: Option<PathBuf>,
    },
    /// Seeded Monte Carlo estimate of a combiner's value.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        belief: String,
        #[arg(long, value_parser = parse_combiner, default_value = "npc")]
        combiner: Combiner,
        #[arg(long, default_value_t = 100_000)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Solve-time scaling over generated instance sizes.
    Scale {
        /// Base instance for the scaling family.
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated stage counts, e.g. 25,50,100,200,400.
        #[arg(long)]
        sizes: String,
        #[arg(long)]
        out: PathBuf,
        /// Per-subproblem detail CSV; defaults to `<out>.detail.csv`.
        #[arg(long)]
        detail_out: Option<PathBuf>,
    },
}

fn parse_combiner(s: &str) -> std::result::Result<Combiner, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_side(s: &str) -> std::result::Result<BandSide, String> {
    match s {
        "high" => Ok(BandSide::High),
        "low" => Ok(BandSide::Low),
        other => Err(format!("unknown side `{other}` (expected high or low)")),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version exit 0; usage errors are input errors (1)
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

// ---------------------------------------------------------------------------
// Plumbing: formatting, atomic writes, manifests
// ---------------------------------------------------------------------------

/// 12 significant digits, '.' decimal separator, no locale.
fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..12).contains(&exp) {
        return format!("{v:.11e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

fn opt_sig12(v: Option<f64>) -> String {
    v.map(sig12).unwrap_or_default()
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io { path: path.display().to_string(), source };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("output path `{}` has no file name", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!("{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, contents).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    instance_digest: String,
    parameters: BTreeMap<String, String>,
    wall_micros: u64,
    artifact_paths: Vec<String>,
}

/// Appends one manifest line for a run that produced artifacts.
fn log_manifest(run_log: &Path, manifest: &RunManifest) -> Result<()> {
    if manifest.artifact_paths.is_empty() {
        return Ok(());
    }
    let io_err = |source| Error::Io { path: run_log.display().to_string(), source };
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(run_log)
        .map_err(io_err)?;
    let line = serde_json::to_string(manifest).expect("manifest serialization cannot fail");
    writeln!(f, "{line}").map_err(io_err)
}

fn derived_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn parse_levels(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("bad grid level `{s}`: {e}")))
        })
        .collect()
}

/// Loads and validates an instance, echoing warnings to stderr.
fn load_checked(path: &Path) -> Result<MonitoringInstance> {
    let inst = load_instance(&path.display().to_string())?;
    for w in inst.validate()? {
        eprintln!("warning: {w}");
    }
    Ok(inst)
}

/// The shared point-CSV header: b_1..b_n plus the five value columns.
fn point_csv_header(n: usize) -> String {
    let mut cols: Vec<String> = (1..=n).map(|k| format!("b_{k}")).collect();
    cols.extend(
        ["oracle_value", "npc_value", "vapc_value", "rel_err_npc", "rel_err_vapc"]
            .map(String::from),
    );
    cols.join(",")
}

fn point_csv_row(
    belief: &[f64],
    oracle: Option<f64>,
    npc: Option<f64>,
    vapc: Option<f64>,
    rel_npc: Option<f64>,
    rel_vapc: Option<f64>,
) -> String {
    let mut cols: Vec<String> = belief.iter().map(|&b| sig12(b)).collect();
    for v in [oracle, npc, vapc, rel_npc, rel_vapc] {
        cols.push(opt_sig12(v));
    }
    cols.join(",")
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Validate { instance, json } => cmd_validate(&instance, json),
        Cmd::Solve { instance, out, summary_out } => {
            cmd_solve(&cli.run_log, &instance, &out, summary_out)
        }
        Cmd::Decide { policy, stage, belief, combiner, json } => {
            cmd_decide(&policy, stage, &belief, combiner, json)
        }
        Cmd::Oracle { instance, belief, stage, depth_guard, out, json } => {
            cmd_oracle(&cli.run_log, &instance, &belief, stage, depth_guard, out, json)
        }
        Cmd::Evaluate { instance, belief, stage, combiner, node_budget, out, json } => {
            cmd_evaluate(&cli.run_log, &instance, &belief, stage, combiner, node_budget, out, json)
        }
        Cmd::Compare {
            instance,
            grid_levels,
            band,
            with_oracle,
            side,
            depth_guard,
            node_budget,
            out,
            aggregate_out,
        } => cmd_compare(
            &cli.run_log,
            &instance,
            grid_levels,
            band,
            with_oracle,
            side,
            depth_guard,
            node_budget,
            &out,
            aggregate_out,
        ),
        Cmd::Simulate { instance, belief, combiner, episodes, seed, out, json } => {
            cmd_simulate(&cli.run_log, &instance, &belief, combiner, episodes, seed, out, json)
        }
        Cmd::Scale { instance, sizes, out, detail_out } => {
            cmd_scale(&cli.run_log, &instance, &sizes, &out, detail_out)
        }
    }
}

fn cmd_validate(instance: &Path, json: bool) -> Result<()> {
    let inst = load_instance(&instance.display().to_string())?;
    let warnings = inst.validate()?;
    if json {
        let doc = serde_json::json!({
            "valid": true,
            "name": inst.name,
            "stages": inst.len(),
            "warnings": warnings,
        });
        println!("{doc}");
    } else {
        println!("{}: valid ({} stages)", inst.name, inst.len());
        for w in &warnings {
            println!("warning: {w}");
        }
    }
    Ok(())
}

fn cmd_solve(
    run_log: &Path,
    instance: &Path,
    out: &Path,
    summary_out: Option<PathBuf>,
) -> Result<()> {
    let start = Instant::now();
    let inst = load_checked(instance)?;
    let (bundle, stats) = solve_all_with_stats(&inst)?;
    write_atomic(out, &serialize_bundle(&bundle))?;

    let summary = summary_out.unwrap_or_else(|| derived_path(out, "summary.csv"));
    let mut csv = String::from("subproblem,stage,stage_kind,set_size,solve_micros\n");
    for s in &stats {
        csv.push_str(&format!(
            "{},{},{:?},{},{}\n",
            s.subproblem, s.stage, s.stage_kind, s.set_size, s.solve_micros
        ));
    }
    write_atomic(&summary, &csv)?;

    let total: u64 = stats.iter().map(|s| s.solve_micros).sum();
    println!(
        "solved {} subproblems ({} stage sets, {total} µs total); policy -> {}, summary -> {}",
        bundle.len(),
        stats.len(),
        out.display(),
        summary.display()
    );
    log_manifest(
        run_log,
        &RunManifest {
            command: "solve".to_string(),
            instance_digest: file_digest(instance)?,
            parameters: BTreeMap::from([(
                "instance".to_string(),
                instance.display().to_string(),
            )]),
            wall_micros: start.elapsed().as_micros() as u64,
            artifact_paths: vec![out.display().to_string(), summary.display().to_string()],
        },
    )
}

fn cmd_decide(
    policy: &Path,
    stage: usize,
    belief: &str,
    combiner: Combiner,
    json: bool,
) -> Result<()> {
    let bundle = load_bundle(&policy.display().to_string())?;
    let b = FactoredBelief::parse_csv(belief)?;
    let decision = run_step(&bundle, &b, stage, combiner)?;

    // per-subproblem values at this stage's two decision points
    let mut rows = Vec::new();
    for k in stage..=bundle.len() {
        let sp = bundle.subproblem(k);
        let (mv, marg) = pwlc_evaluate(sp.monitoring_set(stage), b.probs[k - 1])?;
        let (av, aarg) = pwlc_evaluate(sp.action_set(stage), b.probs[k - 1])?;
        rows.push((k, mv, marg.action, av, aarg.action));
    }

    if json {
        let doc = serde_json::json!({
            "stage": decision.stage,
            "combiner": combiner,
            "monitor_set": decision.monitor_set,
            "object_action": decision.object_action,
            "subproblems": rows.iter().map(|(k, mv, marg, av, aarg)| serde_json::json!({
                "precondition": k,
                "monitoring_value": mv,
                "monitoring_argmax": marg,
                "action_value": av,
                "action_argmax": aarg,
            })).collect::<Vec<_>>(),
        });
        println!("{doc}");
    } else {
        let set = if decision.monitor_set.is_empty() {
            "{}".to_string()
        } else {
            format!(
                "{{{}}}",
                decision
                    .monitor_set
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            )
        };
        println!("stage {stage} ({combiner:?}): monitor {set}, {:?}", decision.object_action);
        for (k, mv, marg, av, aarg) in rows {
            println!(
                "  precondition {k}: monitoring {} ({marg:?}), action {} ({aarg:?})",
                sig12(mv),
                sig12(av)
            );
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_oracle(
    run_log: &Path,
    instance: &Path,
    belief: &str,
    stage: usize,
    depth_guard: usize,
    out: Option<PathBuf>,
    json: bool,
) -> Result<()> {
    let start = Instant::now();
    let inst = load_checked(instance)?;
    let b = FactoredBelief::parse_csv(belief)?;
    let value = oracle_value(&inst, &b, stage, depth_guard)?;

    if json {
        println!(
            "{}",
            serde_json::json!({ "stage": stage, "belief": b.probs, "oracle_value": value })
        );
    } else {
        println!("oracle value at stage {stage}: {}", sig12(value));
    }
    if let Some(out) = out {
        let csv = format!(
            "{}\n{}\n",
            point_csv_header(inst.len()),
            point_csv_row(&b.probs, Some(value), None, None, None, None)
        );
        write_atomic(&out, &csv)?;
        log_manifest(
            run_log,
            &RunManifest {
                command: "oracle".to_string(),
                instance_digest: file_digest(instance)?,
                parameters: BTreeMap::from([
                    ("belief".to_string(), belief.to_string()),
                    ("stage".to_string(), stage.to_string()),
                    ("depth_guard".to_string(), depth_guard.to_string()),
                ]),
                wall_micros: start.elapsed().as_micros() as u64,
                artifact_paths: vec![out.display().to_string()],
            },
        )?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    run_log: &Path,
    instance: &Path,
    belief: &str,
    stage: usize,
    combiner: Option<Combiner>,
    node_budget: u64,
    out: Option<PathBuf>,
    json: bool,
) -> Result<()> {
    let start = Instant::now();
    let inst = load_checked(instance)?;
    let bundle = solve_all(&inst)?;
    let b = FactoredBelief::parse_csv(belief)?;
    let value_for = |c: Combiner| evaluate_policy_exact(&bundle, &b, stage, c, node_budget);
    let npc = match combiner {
        Some(Combiner::Vapc) => None,
        _ => Some(value_for(Combiner::Npc)?),
    };
    let vapc = match combiner {
        Some(Combiner::Npc) => None,
        _ => Some(value_for(Combiner::Vapc)?),
    };

    if json {
        println!(
            "{}",
            serde_json::json!({
                "stage": stage, "belief": b.probs,
                "npc_value": npc, "vapc_value": vapc,
            })
        );
    } else {
        if let Some(v) = npc {
            println!("npc value at stage {stage}: {}", sig12(v));
        }
        if let Some(v) = vapc {
            println!("vapc value at stage {stage}: {}", sig12(v));
        }
    }
    if let Some(out) = out {
        let csv = format!(
            "{}\n{}\n",
            point_csv_header(inst.len()),
            point_csv_row(&b.probs, None, npc, vapc, None, None)
        );
        write_atomic(&out, &csv)?;
        log_manifest(
            run_log,
            &RunManifest {
                command: "evaluate".to_string(),
                instance_digest: file_digest(instance)?,
                parameters: BTreeMap::from([
                    ("belief".to_string(), belief.to_string()),
                    ("stage".to_string(), stage.to_string()),
                    ("node_budget".to_string(), node_budget.to_string()),
                    (
                        "combiner".to_string(),
                        combiner.map(|c| format!("{c:?}")).unwrap_or_else(|| "both".to_string()),
                    ),
                ]),
                wall_micros: start.elapsed().as_micros() as u64,
                artifact_paths: vec![out.display().to_string()],
            },
        )?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    run_log: &Path,
    instance: &Path,
    grid_levels: Option<String>,
    band: Option<String>,
    with_oracle: bool,
    side: Option<BandSide>,
    depth_guard: usize,
    node_budget: u64,
    out: &Path,
    aggregate_out: Option<PathBuf>,
) -> Result<()> {
    let start = Instant::now();
    let inst = load_checked(instance)?;
    let bundle = solve_all(&inst)?;
    let mut parameters = BTreeMap::from([
        ("node_budget".to_string(), node_budget.to_string()),
        ("with_oracle".to_string(), with_oracle.to_string()),
    ]);
    let mut artifacts = vec![out.display().to_string()];

    if let Some(band) = band {
        let ps = parse_levels(&band)?;
        if ps.is_empty() {
            return Err(Error::Input("band list must be nonempty".to_string()));
        }
        parameters.insert("band".to_string(), band.clone());
        let rows = band_improvement(&bundle, &ps, node_budget)?;
        let mut csv = String::from(
            "p,count,mean_npc,mean_vapc,mean_improvement_rel,max_improvement_rel,mean_improvement_abs\n",
        );
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig12(r.p),
                r.count,
                sig12(r.mean_npc),
                sig12(r.mean_vapc),
                opt_sig12(r.mean_improvement_rel),
                opt_sig12(r.max_improvement_rel),
                sig12(r.mean_improvement_abs)
            ));
            println!(
                "band p={}: mean VAPC-over-NPC improvement {} (abs {})",
                sig12(r.p),
                opt_sig12(r.mean_improvement_rel),
                sig12(r.mean_improvement_abs)
            );
        }
        write_atomic(out, &csv)?;
    } else {
        let levels = parse_levels(&grid_levels.clone().ok_or_else(|| {
            Error::Input("compare needs --grid-levels or --band".to_string())
        })?)?;
        parameters.insert("grid_levels".to_string(), grid_levels.unwrap());
        if with_oracle {
            parameters.insert("depth_guard".to_string(), depth_guard.to_string());
        }
        let grid: Vec<Vec<f64>> = belief_grid(inst.len(), &levels)?.collect();
        let report = error_report(&bundle, grid, with_oracle, depth_guard, node_budget)?;

        let mut csv = point_csv_header(inst.len());
        csv.push('\n');
        for p in &report.points {
            csv.push_str(&point_csv_row(
                &p.belief,
                p.oracle_value,
                Some(p.npc_value),
                Some(p.vapc_value),
                p.rel_err_npc,
                p.rel_err_vapc,
            ));
            csv.push('\n');
        }
        write_atomic(out, &csv)?;

        let aggregate = aggregate_out.unwrap_or_else(|| derived_path(out, "aggregate.csv"));
        let mut agg = String::from(
            "p,side,count,mean_rel_err_npc,max_rel_err_npc,mean_rel_err_vapc,max_rel_err_vapc,mean_improvement_rel,mean_improvement_abs\n",
        );
        for b in report.bands.iter().filter(|b| side.is_none_or(|s| b.side == s)) {
            let side_name = match b.side {
                BandSide::High => "high",
                BandSide::Low => "low",
            };
            agg.push_str(&format!(
                "{},{side_name},{},{},{},{},{},{},{}\n",
                sig12(b.p),
                b.count,
                opt_sig12(b.mean_rel_err_npc),
                opt_sig12(b.max_rel_err_npc),
                opt_sig12(b.mean_rel_err_vapc),
                opt_sig12(b.max_rel_err_vapc),
                opt_sig12(b.mean_improvement_rel),
                sig12(b.mean_improvement_abs)
            ));
        }
        write_atomic(&aggregate, &agg)?;
        artifacts.push(aggregate.display().to_string());

        println!("{} points evaluated", report.points.len());
        if with_oracle {
            println!(
                "mean relative error: npc {}, vapc {} (max {}, {}; {} points with non-positive oracle value excluded)",
                opt_sig12(report.mean_rel_err_npc),
                opt_sig12(report.mean_rel_err_vapc),
                opt_sig12(report.max_rel_err_npc),
                opt_sig12(report.max_rel_err_vapc),
                report.excluded_nonpositive
            );
        }
    }

    log_manifest(
        run_log,
        &RunManifest {
            command: "compare".to_string(),
            instance_digest: file_digest(instance)?,
            parameters,
            wall_micros: start.elapsed().as_micros() as u64,
            artifact_paths: artifacts,
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    run_log: &Path,
    instance: &Path,
    belief: &str,
    combiner: Combiner,
    episodes: u64,
    seed: u64,
    out: Option<PathBuf>,
    json: bool,
) -> Result<()> {
    let start = Instant::now();
    let inst = load_checked(instance)?;
    let bundle = solve_all(&inst)?;
    let b = FactoredBelief::parse_csv(belief)?;
    let result = simulate(&bundle, &b, combiner, episodes, seed)?;

    if json {
        println!(
            "{}",
            serde_json::json!({
                "combiner": combiner, "episodes": result.episodes, "seed": seed,
                "mean": result.mean, "std_error": result.std_error,
            })
        );
    } else {
        println!(
            "{combiner:?} over {} episodes (seed {seed}): mean {} ± {} (1 SE)",
            result.episodes,
            sig12(result.mean),
            sig12(result.std_error)
        );
    }
    if let Some(out) = out {
        let (npc, vapc) = match combiner {
            Combiner::Npc => (Some(result.mean), None),
            Combiner::Vapc => (None, Some(result.mean)),
        };
        let csv = format!(
            "{}\n{}\n",
            point_csv_header(inst.len()),
            point_csv_row(&b.probs, None, npc, vapc, None, None)
        );
        write_atomic(&out, &csv)?;
        log_manifest(
            run_log,
            &RunManifest {
                command: "simulate".to_string(),
                instance_digest: file_digest(instance)?,
                parameters: BTreeMap::from([
                    ("belief".to_string(), belief.to_string()),
                    ("combiner".to_string(), format!("{combiner:?}")),
                    ("episodes".to_string(), episodes.to_string()),
                    ("seed".to_string(), seed.to_string()),
                    ("std_error".to_string(), sig12(result.std_error)),
                ]),
                wall_micros: start.elapsed().as_micros() as u64,
                artifact_paths: vec![out.display().to_string()],
            },
        )?;
    }
    Ok(())
}

fn cmd_scale(
    run_log: &Path,
    instance: &Path,
    sizes: &str,
    out: &Path,
    detail_out: Option<PathBuf>,
) -> Result<()> {
    let start = Instant::now();
    let base = load_checked(instance)?;
    let sizes: Vec<usize> = sizes
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Input(format!("bad size `{s}`: {e}")))
        })
        .collect::<Result<_>>()?;
    if sizes.is_empty() {
        return Err(Error::Input("sizes must be nonempty".to_string()));
    }

    let mut csv = String::from("n,total_solve_micros,max_set_size\n");
    let detail = detail_out.unwrap_or_else(|| derived_path(out, "detail.csv"));
    let mut detail_csv = String::from("n,subproblem,stage,stage_kind,set_size,solve_micros\n");
    let mut points = Vec::new();
    for &n in &sizes {
        let inst = generate_scaling_family(&base, n)?;
        let solve_start = Instant::now();
        let (_, stats) = solve_all_with_stats(&inst)?;
        let total = solve_start.elapsed().as_micros() as u64;
        let max_set = stats.iter().map(|s| s.set_size).max().unwrap_or(0);
        csv.push_str(&format!("{n},{total},{max_set}\n"));
        for s in &stats {
            detail_csv.push_str(&format!(
                "{n},{},{},{:?},{},{}\n",
                s.subproblem, s.stage, s.stage_kind, s.set_size, s.solve_micros
            ));
        }
        points.push((n as f64, total.max(1) as f64));
        println!("n={n}: {total} µs, max set size {max_set}");
    }
    write_atomic(out, &csv)?;
    write_atomic(&detail, &detail_csv)?;

    // least-squares slope of ln(time) vs ln(n), reported in the manifest
    let slope = if points.len() >= 2 {
        let xs: Vec<f64> = points.iter().map(|(n, _)| n.ln()).collect();
        let ys: Vec<f64> = points.iter().map(|(_, t)| t.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Some(num / den)
    } else {
        None
    };
    if let Some(s) = slope {
        println!("log-log slope of solve time vs n: {}", sig12(s));
    }

    log_manifest(
        run_log,
        &RunManifest {
            command: "scale".to_string(),
            instance_digest: file_digest(instance)?,
            parameters: BTreeMap::from([
                (
                    "sizes".to_string(),
                    sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
                ),
                ("loglog_slope".to_string(), slope.map(sig12).unwrap_or_default()),
            ]),
            wall_micros: start.elapsed().as_micros() as u64,
            artifact_paths: vec![out.display().to_string(), detail.display().to_string()],
        },
    )
}
