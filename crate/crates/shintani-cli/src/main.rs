//! `shintani`: JSON jobs in, JSON results out.
//!
//! Exit status 0 on success, 2 on invalid input, 3 when the evaluation point
//! lies outside every numerically supported regime.

mod job;

use clap::{Parser, Subcommand};
use job::{CliError, Command, Job, JobFile, Overrides, JOB_VERSION};
use serde_json::Value;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "shintani", version, about = "Shintani and Hecke L-functions of totally real fields")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Debug)]
struct JobArgs {
    /// JSON job file; its command must match the subcommand.
    #[arg(long)]
    job: Option<PathBuf>,
    /// Named dataset, overriding the payload's preset.
    #[arg(long)]
    preset: Option<String>,
    /// Working precision in bits.
    #[arg(long, env = "SHINTANI_BITS", default_value_t = 128)]
    bits: u32,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluation point; one value is broadcast to every coordinate.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    s: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Normalized Shintani L-function of a dataset.
    EvalLsigma(JobArgs),
    /// F_(χ,f,D)(s) of a Hecke datum.
    EvalHecke(JobArgs),
    /// Both sides of the Hecke functional equation.
    FeCheck(JobArgs),
    /// A fan and its dual fan.
    DualFan(JobArgs),
    /// Regularity of the regularized standard function.
    Regularity(JobArgs),
    /// Diagonal derivative against the single-axis partials.
    ShintaniFormula(JobArgs),
    /// Cubic fundamental domain fan.
    FdFan(JobArgs),
    /// Named datasets.
    ListPresets {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a job file, taking the command from the file.
    Run(JobArgs),
}

fn read_job(path: &PathBuf) -> Result<JobFile, CliError> {
    let text = std::fs::read_to_string(path)?;
    let job: JobFile = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("job file: {e}")))?;
    if job.version != JOB_VERSION {
        return Err(CliError::Validation(format!("unsupported job version {}", job.version)));
    }
    Ok(job)
}

fn build_job(command: Option<Command>, a: &JobArgs) -> Result<Job, CliError> {
    if a.bits < 32 || a.bits > 4096 {
        return Err(CliError::Validation(format!("bits must lie in [32, 4096], got {}", a.bits)));
    }
    let (command, payload) = match &a.job {
        Some(path) => {
            let f = read_job(path)?;
            if let Some(c) = command {
                if c != f.command {
                    return Err(CliError::Validation(format!("job file holds {}, not {}", f.command.name(), c.name())));
                }
            }
            (f.command, f.payload)
        }
        None => (command.ok_or_else(|| CliError::Validation("run needs --job".into()))?, Value::Null),
    };
    Ok(Job { command, payload, bits: a.bits })
}

fn emit(v: &Value, out: &Option<PathBuf>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(args: Args) -> Result<(), CliError> {
    let (command, a) = match args.command {
        Cmd::ListPresets { out } => return emit(&job::list_presets(), &out),
        Cmd::EvalLsigma(a) => (Some(Command::EvalLsigma), a),
        Cmd::EvalHecke(a) => (Some(Command::EvalHecke), a),
        Cmd::FeCheck(a) => (Some(Command::FeCheck), a),
        Cmd::DualFan(a) => (Some(Command::DualFan), a),
        Cmd::Regularity(a) => (Some(Command::Regularity), a),
        Cmd::ShintaniFormula(a) => (Some(Command::ShintaniFormula), a),
        Cmd::FdFan(a) => (Some(Command::FdFan), a),
        Cmd::Run(a) => (None, a),
    };
    let job = build_job(command, &a)?;
    let o = Overrides { preset: a.preset.clone(), s: a.s.clone() };
    emit(&job::run(&job, &o)?, &a.out)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shintani: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
