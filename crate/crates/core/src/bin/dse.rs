use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dse::metrics::MetricSpec;
use dse::runner::{self, Axis, Mode, PointResult, RunOutcome, RunSpec};
use dse::ConfigError;

#[derive(Parser)]
#[command(
    name = "dse",
    version,
    about = "Timing bounds and Monte-Carlo statistics for task graphs on multi-core platforms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a system description.
    Check { file: PathBuf },
    /// Exact makespan and latency bounds by zone reachability.
    Verify {
        file: PathBuf,
        /// Instances per generator to analyze.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 25)]
        clock_budget: usize,
        #[arg(long, default_value_t = 20_000_000)]
        state_cap: usize,
        /// Write every explored symbolic state to graph.txt.
        #[arg(long)]
        dump_graph: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Monte-Carlo simulation campaign.
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        campaign: Campaign,
        /// Write one trace file per run.
        #[arg(long)]
        traces: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Simulation campaigns over the cross product of parameter axes.
    Sweep {
        file: PathBuf,
        /// `path=v1,v2,...`; repeat for more axes.
        #[arg(long = "axis", required = true)]
        axes: Vec<Axis>,
        #[command(flatten)]
        campaign: Campaign,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Campaign {
    #[arg(long, default_value_t = 100)]
    runs: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Metric to report, e.g. `makespan` or `event_pair:arrival:J->end:J:T`; repeatable.
    #[arg(long = "metric")]
    metrics: Vec<MetricSpec>,
    #[arg(long, default_value_t = dse::metrics::DEFAULT_BINS)]
    bins: usize,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, env = "DSE_OUT", default_value = "dse-out")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (file, spec) = match cli.command {
        Command::Check { file } => return check(&file),
        Command::Verify { file, k, clock_budget, state_cap, dump_graph, common } => {
            let spec = RunSpec {
                mode: Mode::Verify,
                k,
                clock_budget,
                state_cap,
                dump_graph,
                workers: common.workers,
                ..RunSpec::new(common.out)
            };
            (file, spec)
        }
        Command::Simulate { file, campaign, traces, common } => {
            let spec = RunSpec {
                mode: Mode::Simulate,
                runs: campaign.runs,
                seed: campaign.seed,
                metrics: campaign.metrics,
                bins: campaign.bins,
                traces,
                workers: common.workers,
                ..RunSpec::new(common.out)
            };
            (file, spec)
        }
        Command::Sweep { file, axes, campaign, common } => {
            let spec = RunSpec {
                mode: Mode::Sweep,
                runs: campaign.runs,
                seed: campaign.seed,
                metrics: campaign.metrics,
                bins: campaign.bins,
                axes,
                workers: common.workers,
                ..RunSpec::new(common.out)
            };
            (file, spec)
        }
    };
    let result = dse::parse_system(&file).map_err(runner::RunError::from).and_then(|m| runner::run(&spec, &m));
    match result {
        Ok(out) => {
            print_outcome(&out);
            println!("wrote {}", spec.outdir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn check(file: &PathBuf) -> ExitCode {
    match dse::parse_system(file) {
        Ok(m) => {
            let tasks: usize = m.application.job_types.iter().map(|j| j.tasks.len()).sum();
            println!(
                "ok: {} job types, {} tasks, {} active processors, policy {}",
                m.application.job_types.len(),
                tasks,
                m.platform.active_processors().count(),
                m.deployment.policy.name()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            report_error(&runner::RunError::from(e));
            ExitCode::from(2)
        }
    }
}

fn report_error(e: &runner::RunError) {
    eprintln!("error: {e}");
    if let runner::RunError::Config(ConfigError::Semantic(vs)) = e {
        for v in vs.iter().skip(1) {
            eprintln!("       {v}");
        }
    }
}

fn print_outcome(out: &RunOutcome) {
    for p in &out.points {
        if !p.name.is_empty() {
            println!("[{}]", p.name);
        }
        match &p.result {
            PointResult::Verified(r) => {
                match r.makespan {
                    Some(ms) => println!("makespan {ms}"),
                    None => println!("makespan: no complete run"),
                }
                for l in &r.latency {
                    match l.bounds {
                        Some(b) => println!("latency {} #{} {b}", l.job, l.instance),
                        None => println!("latency {} #{}: never completes", l.job, l.instance),
                    }
                }
                println!("overflow reachable: {}", r.overflow_reachable);
                println!("states {} (pruned {}), max clocks {}", r.visited, r.pruned, r.max_clocks);
            }
            PointResult::Simulated(c) => {
                for (m, rep) in c.metrics.iter().zip(&c.reports) {
                    match rep.summary() {
                        Some(s) => println!(
                            "{m}: mean {:.6} std {:.6} min {:.6} max {:.6} p95 {:.6}",
                            s.mean, s.std, s.min, s.max, s.p95
                        ),
                        None => println!("{m}: no values"),
                    }
                }
                println!("runs with overflow: {}/{}", c.runs_with_overflow, c.runs.len());
            }
        }
    }
}
