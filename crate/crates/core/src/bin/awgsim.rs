// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenario runner.
//!
//! ```text
//! awgsim --scenario scenarios/linearity-sweep.toml --out reports
//! awgsim --scenario s.toml --transport tcp --listen 127.0.0.1:5025 --serve
//! awgsim --scenario s.toml --transport tcp --connect 127.0.0.1:5025 --out reports
//! ```
//!
//! Exit status: 0 when every check passes, 1 when a suite fails, 2 on
//! configuration or connection errors.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use awgsim::protocol::{shared, Board, TcpServer, DEFAULT_COMMAND_PORT};
use awgsim::scenario::{run_scenario, Connection, Emit, RunOptions, Scenario, ScenarioError};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TransportArg {
    Loopback,
    Tcp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmitArg {
    Csv,
    Summary,
    Both,
}

#[derive(Debug, Parser)]
#[command(
    name = "awgsim",
    version,
    about = "Run AWG measurement scenarios against a simulated board"
)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report directory.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "loopback")]
    transport: TransportArg,
    /// Address to serve the simulated board on (tcp transport).
    #[arg(long, value_name = "HOST:PORT")]
    listen: Option<String>,
    /// Address of a board served by another process (tcp transport).
    #[arg(long, value_name = "HOST:PORT", conflicts_with = "listen")]
    connect: Option<String>,
    #[arg(long, value_enum, default_value = "both")]
    emit: EmitArg,
    /// Only serve the board until killed; requires --listen.
    #[arg(long, requires = "listen")]
    serve: bool,
    /// UDP destination for periodic status packets while serving.
    #[arg(long, value_name = "HOST:PORT")]
    status_to: Option<SocketAddr>,
    /// Worker threads for in-process suites (0 = one per core).
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(e: &ScenarioError) -> ExitCode {
    eprintln!("awgsim: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn serve(args: &Args, scenario: Option<&Scenario>) -> ExitCode {
    let board = match scenario {
        Some(s) => match s.build_board(args.seed.unwrap_or(s.seed)) {
            Ok(b) => b,
            Err(e) => return fail(&e),
        },
        None => Board::new(0),
    };
    let addr = args.listen.as_deref().expect("clap enforces --listen");
    match TcpServer::spawn(shared(board), addr, args.status_to) {
        Ok(server) => {
            println!("listening on {}", server.local_addr());
            server.join();
            ExitCode::SUCCESS
        }
        Err(e) => fail(&ScenarioError::Connection(format!("{addr}: {e}"))),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let scenario = match &args.scenario {
        Some(p) => match Scenario::load(p) {
            Ok(s) => Some(s),
            Err(e) => return fail(&e),
        },
        None => None,
    };
    if args.serve {
        return serve(&args, scenario.as_ref());
    }
    let Some(scenario) = scenario else {
        return fail(&ScenarioError::Config("--scenario is required".into()));
    };
    let connection = match args.transport {
        TransportArg::Loopback => Connection::Loopback,
        TransportArg::Tcp => match (&args.listen, &args.connect) {
            (_, Some(c)) => Connection::Connect(c.clone()),
            (Some(l), None) => Connection::Listen(l.clone()),
            (None, None) => Connection::Connect(format!("127.0.0.1:{DEFAULT_COMMAND_PORT}")),
        },
    };
    let opts = RunOptions {
        seed: args.seed,
        out_dir: args.out.clone(),
        connection,
        emit: match args.emit {
            EmitArg::Csv => Emit::Csv,
            EmitArg::Summary => Emit::Summary,
            EmitArg::Both => Emit::Both,
        },
        threads: args.threads,
    };
    match run_scenario(&scenario, &opts) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(&e),
    }
}
