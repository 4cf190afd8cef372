use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tpc_core::scenario::{preset, preset_names, run, ConfigError, RunError, RunOutput, Scenario};

/// Talkative power conversion: buck converter signal models.
#[derive(Parser)]
#[command(name = "tpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its tables and report.
    Run {
        config: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run a built-in scenario.
    Preset {
        name: String,
        #[arg(long, short, required_unless_present = "dump")]
        out: Option<PathBuf>,
        /// Print the scenario JSON instead of running it.
        #[arg(long)]
        dump: bool,
    },
    /// List built-in scenarios.
    ListPresets,
}

enum Failure {
    Config(String),
    Model(String),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => Failure::Config(c.to_string()),
            RunError::Model(m) => Failure::Model(m.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Model(format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ListPresets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
        Command::Run { config, out } => load(&config).and_then(|s| execute(&s, &out)),
        Command::Preset { name, out, dump } => match preset(&name) {
            None => Err(Failure::Config(format!(
                "unknown preset `{name}`; available: {}",
                preset_names().join(", ")
            ))),
            Some(s) if dump => {
                println!("{}", s.to_json());
                Ok(())
            }
            Some(s) => execute(&s, &out.expect("clap enforces --out")),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Model(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(Scenario::from_json(&text)?)
}

fn execute(s: &Scenario, out_dir: &Path) -> Result<(), Failure> {
    let output = run(s)?;
    let written = write_outputs(&output, out_dir)?;
    println!("{}: wrote {} to {}", s.id, written.join(", "), out_dir.display());
    Ok(())
}

fn write_outputs(output: &RunOutput, dir: &Path) -> anyhow::Result<Vec<String>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut names = Vec::new();
    for table in &output.tables {
        let csv = table.file_name();
        write_atomic(&dir.join(&csv), table.to_csv().as_bytes())?;
        let meta = format!("{}.meta.json", table.name);
        let body = serde_json::to_string_pretty(&output.metadata(table))?;
        write_atomic(&dir.join(&meta), body.as_bytes())?;
        names.push(csv);
    }
    let report = serde_json::to_string_pretty(&output.report)?;
    write_atomic(&dir.join("report.json"), report.as_bytes())?;
    names.push("report.json".into());
    Ok(names)
}

/// Writes to a sibling temp file, then renames over the target.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let file_name = path
        .file_name()
        .context("output path has no file name")?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{file_name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
