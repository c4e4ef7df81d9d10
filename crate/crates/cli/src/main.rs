use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use claw_core::scenario::{self, cmd_bv, cmd_metrics, cmd_steer, cmd_trace, CommandOutput, Resolved, RunFlags, RunReport, Status};
use claw_core::Error;

#[derive(Parser)]
#[command(name = "claw", version, about = "Source-term steering of scalar conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flux functionals, controllability times and hypothesis verdicts.
    Metrics(Common),
    /// Synthesize the control, solve and verify.
    Steer(Common),
    /// Mollification convergence table for BV data.
    Bv(Common),
    /// Characteristic fans and boundary traces.
    Trace(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    file: PathBuf,
    /// Finite-volume cell width.
    #[arg(long)]
    dx: Option<f64>,
    /// Output directory (default: the scenario's `output`, else out/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run even when the hypotheses fail.
    #[arg(long)]
    force: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Mollification indices, e.g. 25,50,100.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
}

fn out_dir(c: &Common, r: &Resolved) -> PathBuf {
    if let Some(o) = &c.out {
        return o.clone();
    }
    let base = c.file.parent().unwrap_or(Path::new("."));
    match &r.scenario.output {
        Some(o) => base.join(o),
        None => PathBuf::from("out").join(&r.scenario.name),
    }
}

fn print_run(r: &RunReport) {
    println!("{} {}: {:?}", r.command, r.scenario, r.status);
    println!("  T = {}  T* = {}  boundary-control time = {}", r.horizon, r.t_star, r.boundary_control_time);
    for c in &r.verdict.violated_conditions {
        println!("  hypothesis violated: {}: {} {} {}", c.label, c.lhs, c.relation, c.rhs);
    }
    for b in &r.bounds {
        println!("  [{}] {}: {:.6e} <= {:.6e}", if b.pass { "ok" } else { "FAIL" }, b.name, b.measured, b.claimed);
    }
    if let Some(e) = &r.error {
        println!("  error: {e}");
    }
}

fn finish(c: &Common, r: &Resolved, out: CommandOutput<RunReport>) -> Result<Status, Error> {
    let dir = out_dir(c, r);
    let mut files = out.files;
    files.push(("report.json".into(), scenario::to_json(&out.report)?));
    scenario::write_outputs(&dir, &files)?;
    if c.json {
        print!("{}", scenario::to_json(&out.report)?);
    } else {
        print_run(&out.report);
        println!("  wrote {}", dir.display());
    }
    Ok(out.report.status)
}

fn flags(c: &Common) -> RunFlags {
    RunFlags { force: c.force, dx: c.dx, n: c.n.clone() }
}

fn run(cli: Cli) -> Result<Status, Error> {
    match cli.command {
        Command::Metrics(c) => {
            let r = Resolved::load(&c.file)?;
            let rep = cmd_metrics(&r)?;
            let text = scenario::to_json(&rep)?;
            scenario::write_outputs(&out_dir(&c, &r), &[("report.json".into(), text.clone())])?;
            if c.json {
                print!("{text}");
            } else {
                println!("metrics {} ({})", rep.scenario, rep.flux);
                for (i, m) in rep.intervals.iter().enumerate() {
                    println!("  [{i}] [|f|] on {} = {:.9}  (k = {:.6}, (b-a)/[|f|] = {:.9})", m.interval, m.bracket.value, m.bracket.argsup_k, m.time);
                }
                for p in &rep.pairs {
                    println!("  T*({} -> {}) = {:.9} = {:.9}(b-a)", p.initial, p.target, p.t_star, p.t_star_per_length);
                }
                println!("  ||f''|| = {:.9}  boundary-control time = {}", rep.norm_d2f, rep.boundary_control_time);
                println!("  {:?} hypotheses hold: {}", rep.verdict.theorem, rep.verdict.holds);
            }
            Ok(Status::Pass)
        }
        Command::Steer(c) => {
            let r = Resolved::load(&c.file)?;
            let out = cmd_steer(&r, &flags(&c))?;
            finish(&c, &r, out)
        }
        Command::Bv(c) => {
            let r = Resolved::load(&c.file)?;
            let out = cmd_bv(&r, &flags(&c))?;
            finish(&c, &r, out)
        }
        Command::Trace(c) => {
            let r = Resolved::load(&c.file)?;
            let out = cmd_trace(&r, &flags(&c))?;
            finish(&c, &r, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let status = match run(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("claw: {e}");
            Status::of_error(&e)
        }
    };
    eprintln!("elapsed {:.2} s", start.elapsed().as_secs_f64());
    ExitCode::from(status.code() as u8)
}
