use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kpm_monitor::{
    cmd_compare, cmd_decode, cmd_gen_trace, cmd_run, orchestrator, CliError, DecodeKind, Profile,
};

#[derive(Parser)]
#[command(
    name = "kpm-monitor",
    about = "Desk-scale E2 stack runner: scenarios, codecs, traces, and throughput comparisons"
)]
struct Cli {
    /// Echo captured log lines to stderr while running
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full scenario (RIC + node + monitoring xApp) from a config file
    Run {
        /// Flat key=value config file
        #[arg(long)]
        config: PathBuf,
    },
    /// Decode a hex payload and print its fields
    Decode {
        /// Payload kind: event-trigger, action, ranfdef, ind-header,
        /// ind-message, or e2ap-frame
        #[arg(long = "type", value_name = "KIND")]
        kind: String,
        /// Re-encode the decoded value and require byte-identical output
        #[arg(long)]
        verify: bool,
        /// Uppercase hex, no separators
        hex: String,
    },
    /// Compare app-layer and KPM-reported throughput CSVs
    Compare {
        /// Ground-truth series (t_ms,ue_id,mbps)
        app_csv: PathBuf,
        /// KPM-observed series (t_ms,ue_id,mbps)
        kpm_csv: PathBuf,
        /// Also write the report to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a traffic trace CSV
    GenTrace {
        /// Profile: const, fig5-dl, or fig6-ul
        #[arg(long, default_value = "const")]
        profile: String,
        #[arg(long = "duration-s", default_value_t = 20)]
        duration_s: u64,
        /// App-layer rate for the const profile (Mbps)
        #[arg(long = "rate-mbps", default_value_t = 10.0)]
        rate_mbps: f64,
        #[arg(long = "payload-bytes", default_value_t = 1400)]
        payload_bytes: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            cmd_run(&config)?;
            Ok(())
        }
        Command::Decode { kind, verify, hex } => {
            let kind: DecodeKind = kind.parse()?;
            let text = cmd_decode(kind, &hex, verify)?;
            println!("{text}");
            Ok(())
        }
        Command::Compare {
            app_csv,
            kpm_csv,
            out,
        } => {
            let report = cmd_compare(&app_csv, &kpm_csv)?;
            let rendered = report.render();
            print!("{rendered}");
            if let Some(path) = out {
                std::fs::write(&path, rendered)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            Ok(())
        }
        Command::GenTrace {
            profile,
            duration_s,
            rate_mbps,
            payload_bytes,
            out,
        } => {
            let profile: Profile = profile.parse()?;
            cmd_gen_trace(profile, duration_s, rate_mbps, payload_bytes, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    orchestrator::init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
