use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use tasp_core::plan_io::{parse_trace, trace_jsonl, InputDigests, PlanFile, PlanIoError};
use tasp_core::render::{render_svg, RenderOptions};
use tasp_core::tasp::{execute, solve, ExecError, HybridProblem, SolveError, SolveLimits};
use tasp_core::world::load_scene;

#[derive(Parser)]
#[command(name = "tasp", version, about = "Plan, execute and draw skill-based task plans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem and write the plan file.
    Plan {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        budgets: Budgets,
        #[arg(long, default_value = "plan.json")]
        out: PathBuf,
    },
    /// Replay a plan under the execution monitor and write the trace.
    Exec {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = "trace.jsonl")]
        out: PathBuf,
    },
    /// Draw a scene, optionally with a plan and a trace, as SVG.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value = "scene.svg")]
        out: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        svg_scale: f64,
        #[arg(long)]
        no_regions: bool,
        #[arg(long)]
        no_surfaces: bool,
        #[arg(long)]
        no_robot: bool,
    },
    /// Parse and validate inputs without planning.
    Check {
        #[command(flatten)]
        inputs: Inputs,
    },
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    skills: PathBuf,
}

#[derive(Args)]
struct Budgets {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    max_backtracks: Option<usize>,
    #[arg(long)]
    max_samples: Option<usize>,
    #[arg(long)]
    timeout_s: Option<f64>,
}

impl Budgets {
    fn limits(&self) -> Result<SolveLimits, Failure> {
        let mut l = SolveLimits { seed: self.seed, ..SolveLimits::default() };
        if let Some(b) = self.max_backtracks {
            l.max_backtracks = b;
        }
        if let Some(s) = self.max_samples {
            l.max_samples = s;
        }
        if let Some(t) = self.timeout_s {
            l.timeout = Duration::try_from_secs_f64(t).map_err(|e| Failure::input(format!("--timeout-s: {e}")))?;
        }
        Ok(l)
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl fmt::Display) -> Self {
        Failure { code: 1, message: message.to_string() }
    }
}

struct Loaded {
    problem: HybridProblem,
    digests: InputDigests,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load(inputs: &Inputs) -> Result<Loaded, Failure> {
    let texts = [&inputs.domain, &inputs.problem, &inputs.scene, &inputs.skills].map(|p| read(p));
    let [d, p, s, k] = texts;
    let (d, p, s, k) = (d?, p?, s?, k?);
    let problem = HybridProblem::from_texts(&d, &p, &s, &k).map_err(Failure::input)?;
    Ok(Loaded { problem, digests: InputDigests::of(&d, &p, &s, &k) })
}

fn cmd_plan(inputs: &Inputs, budgets: &Budgets, out: &Path) -> Result<(), Failure> {
    let loaded = load(inputs)?;
    let limits = budgets.limits()?;
    let started = Instant::now();
    let plan = solve(&loaded.problem, &limits).map_err(|e| match e {
        SolveError::UnboundAction(_) => Failure::input(e),
        SolveError::SymbolicInfeasible => Failure { code: 2, message: format!("symbolic-infeasible: {e}") },
        SolveError::InfeasibleWithinBudget { ref stats, .. } => {
            let mut m = format!("infeasible-within-budget: {e}");
            for f in stats.failures.iter().rev().take(5).rev() {
                m.push_str(&format!("\n  plan {} step {} {} attempt {}: {}: {}", f.plan, f.step, f.skill, f.attempt, f.stage, f.detail));
            }
            Failure { code: 2, message: m }
        }
    })?;
    let elapsed = started.elapsed();
    let file = PlanFile::new(&plan, loaded.digests, limits.seed);
    write(out, &file.to_json())?;
    println!("plan: {} steps, cost {}, seed {}", plan.steps.len(), plan.symbolic.cost, limits.seed);
    for (k, s) in plan.steps.iter().enumerate() {
        println!(
            "  {k:>2} {:<16} attempts {:>2}  head {:>3}  policy {:>3}  tail {:>3}",
            s.cip.skill.label,
            s.attempts,
            s.cip.head.waypoints.len(),
            s.cip.policy.waypoints.len(),
            s.cip.tail.waypoints.len()
        );
    }
    println!(
        "symbolic plans {}, backtracks {}, resamples {}, planning time {:.3}s",
        plan.stats.symbolic_plans,
        plan.stats.backtracks,
        plan.stats.resamples,
        elapsed.as_secs_f64()
    );
    for f in &plan.stats.failures {
        println!("  failure: plan {} step {} {} attempt {}: {}: {}", f.plan, f.step, f.skill, f.attempt, f.stage, f.detail);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_exec(inputs: &Inputs, plan: &Path, out: &Path) -> Result<(), Failure> {
    let loaded = load(inputs)?;
    let file = PlanFile::from_json(&read(plan)?).map_err(Failure::input)?;
    file.check_digests(&loaded.digests).map_err(Failure::input)?;
    let steps = file.planned_steps(&loaded.problem).map_err(|e| match e {
        PlanIoError::Unbound { .. } | PlanIoError::EmptyTrajectory { .. } => Failure { code: 3, message: e.to_string() },
        other => Failure::input(other),
    })?;
    match execute(&loaded.problem, &steps, 0.01) {
        Ok((_, trace)) => {
            write(out, &trace_jsonl(&trace))?;
            println!("executed {} steps, goal reached; {} trace events written to {}", steps.len(), trace.len(), out.display());
            Ok(())
        }
        Err((e, trace)) => {
            let message = match &e {
                ExecError::ContractViolation { .. } => format!("contract-violation: {e}"),
                ExecError::GoalNotReached => format!("goal-not-reached: {e}"),
            };
            let last = trace.last().map(|t| format!(" (after {} events, last at step {})", trace.len(), t.step)).unwrap_or_default();
            Err(Failure { code: 3, message: message + &last })
        }
    }
}

fn cmd_render(
    scene: &Path,
    plan: Option<&Path>,
    trace: Option<&Path>,
    out: &Path,
    opts: RenderOptions,
) -> Result<(), Failure> {
    let (world, stat) = load_scene(&read(scene)?).map_err(Failure::input)?;
    let plan = plan.map(|p| read(p).and_then(|t| PlanFile::from_json(&t).map_err(Failure::input))).transpose()?;
    let trace = trace.map(|p| read(p).and_then(|t| parse_trace(&t).map_err(Failure::input))).transpose()?;
    if !(opts.scale.is_finite() && opts.scale > 0.0) {
        return Err(Failure::input("--svg-scale must be positive"));
    }
    let svg = render_svg(&world, &stat, plan.as_ref(), trace.as_deref(), &opts);
    write(out, &svg)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_check(inputs: &Inputs) -> Result<(), Failure> {
    let loaded = load(inputs)?;
    let p = &loaded.problem;
    println!(
        "ok: {} schemas, {} objects, {} scene objects, {} obstacles, {} skills",
        p.domain.schemas.len(),
        p.problem.universe.len(),
        p.world.objects.len(),
        p.world.obstacles.len(),
        p.registry.skills.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan { inputs, budgets, out } => cmd_plan(inputs, budgets, out),
        Command::Exec { inputs, plan, out } => cmd_exec(inputs, plan, out),
        Command::Render { scene, plan, trace, out, svg_scale, no_regions, no_surfaces, no_robot } => {
            let opts = RenderOptions {
                scale: *svg_scale,
                regions: !no_regions,
                surfaces: !no_surfaces,
                robot: !no_robot,
                trajectories: true,
            };
            cmd_render(scene, plan.as_deref(), trace.as_deref(), out, opts)
        }
        Command::Check { inputs } => cmd_check(inputs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tasp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
