//! `mstpath` — compile MST flow rules, simulate packets, run controller
//! scenarios, and process IoT collection requests end to end.
//!
//! Exit codes are a stable contract: 0 success, 1 validation/parse failure,
//! 2 constraint violation (packet dropped, forwarding loop, jitter bound
//! exceeded). Diagnostics go to stderr, controlled by `MSTPATH_LOG`
//! (error|info|debug); reports and traces go to stdout and report files.

use std::collections::BTreeMap;
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use mstpath_core::controller::{run_scenario, ControllerState, Scenario};
use mstpath_core::mst::{compute_mst, orient_tree, total_weight};
use mstpath_core::pipeline::{render_trace, run_packet, PipelineError};
use mstpath_core::request::{
    parse_readings, plan_request, simulate_collection, verify_rate, CollectionReport, LatencyMap,
    UserRequest,
};
use mstpath_core::ruleplan::{serialize_runtime, synthesize_rules};
use mstpath_core::topology::{load_topology, NodeId, Topology};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_CONSTRAINT: u8 = 2;

#[derive(Parser)]
#[command(name = "mstpath", version, about = "MST-based IoT datapath programming toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the MST for a root and write per-switch runtime rule files.
    Compile {
        #[arg(long)]
        topology: PathBuf,
        /// Root node (a switch, or a collection host resolved to its switch).
        #[arg(long)]
        root: String,
        /// Output directory for <switch>-runtime.json files.
        #[arg(long)]
        out: PathBuf,
        /// Also emit the machine-readable result on stdout.
        #[arg(long)]
        stdout: bool,
    },
    /// Forward one packet through switch runtimes loaded from rule files.
    Simulate {
        #[arg(long)]
        topology: PathBuf,
        /// Directory holding one <switch>-runtime.json per switch.
        #[arg(long)]
        rules: PathBuf,
        /// Origin host.
        #[arg(long)]
        from: String,
        /// Destination IPv4 address.
        #[arg(long)]
        to: Ipv4Addr,
        #[arg(long, default_value_t = 64)]
        ttl: u8,
        #[arg(long)]
        stdout: bool,
    },
    /// Run a scripted control-plane scenario and write its report.
    Controller {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        stdout: bool,
    },
    /// Plan a collection request, simulate the streams, and write the report.
    Request {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        request: PathBuf,
        #[arg(long)]
        readings: PathBuf,
        /// Optional per-link latency file.
        #[arg(long)]
        latency: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Relative rate tolerance before a station is flagged.
        #[arg(long, default_value_t = 0.10)]
        rate_tolerance: f64,
        #[arg(long)]
        stdout: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("MSTPATH_LOG", "error"),
    )
    .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile { topology, root, out, stdout } => cmd_compile(&topology, &root, &out, stdout),
        Command::Simulate { topology, rules, from, to, ttl, stdout } => {
            cmd_simulate(&topology, &rules, &from, to, ttl, stdout)
        }
        Command::Controller { topology, scenario, report, stdout } => {
            cmd_controller(&topology, &scenario, &report, stdout)
        }
        Command::Request { topology, request, readings, latency, report, rate_tolerance, stdout } => {
            cmd_request(
                &topology,
                &request,
                &readings,
                latency.as_deref(),
                &report,
                rate_tolerance,
                stdout,
            )
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("mstpath: {err:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn load(topology: &Path) -> Result<Topology> {
    load_topology(topology).map_err(|e| anyhow!("{e}"))
}

fn cmd_compile(topology: &Path, root: &str, out: &Path, stdout: bool) -> Result<u8> {
    let t = load(topology)?;
    let root = NodeId::new(root);
    let mst = compute_mst(&t).map_err(|e| anyhow!("{e}"))?;
    let tree = orient_tree(&t, &mst, &root).map_err(|e| anyhow!("{e}"))?;
    let plan = synthesize_rules(&t, &tree).map_err(|e| anyhow!("{e}"))?;

    println!("mst: {} edges, total weight {}", mst.len(), total_weight(&mst));
    for link in mst.edges() {
        println!("  {} -- {}  weight {}", link.a, link.b, link.weight);
    }

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut emitted = serde_json::Map::new();
    for switch in plan.switches() {
        let doc = serialize_runtime(&plan, switch).map_err(|e| anyhow!("{e}"))?;
        let path = out.join(format!("{switch}-runtime.json"));
        fs::write(&path, &doc).with_context(|| format!("writing {}", path.display()))?;
        println!(
            "wrote {} ({} entries)",
            path.display(),
            plan.entries(switch).map(|e| e.len()).unwrap_or(0)
        );
        if stdout {
            emitted.insert(
                format!("{switch}-runtime.json"),
                serde_json::from_str(&doc).expect("runtime docs are valid JSON"),
            );
        }
    }
    if stdout {
        println!("{}", serde_json::to_string_pretty(&emitted)?);
    }
    Ok(EXIT_OK)
}

fn load_rule_files(t: &Topology, dir: &Path) -> Result<BTreeMap<NodeId, String>> {
    let mut files = BTreeMap::new();
    for switch in t.switches() {
        let path = dir.join(format!("{}-runtime.json", switch.id));
        let doc = fs::read_to_string(&path)
            .with_context(|| format!("reading rule file {}", path.display()))?;
        files.insert(switch.id.clone(), doc);
    }
    Ok(files)
}

fn cmd_simulate(
    topology: &Path,
    rules: &Path,
    from: &str,
    to: Ipv4Addr,
    ttl: u8,
    stdout: bool,
) -> Result<u8> {
    let t = load(topology)?;
    let files = load_rule_files(&t, rules)?;
    let state = ControllerState::static_deploy(t.clone(), &files).map_err(|e| anyhow!("{e}"))?;

    match run_packet(&t, state.runtimes(), &NodeId::new(from), to, ttl) {
        Ok(trace) => {
            print!("{}", render_trace(&trace.events));
            if stdout {
                println!("{}", serde_json::to_string_pretty(&trace)?);
            }
            if trace.delivered_at().is_some() {
                Ok(EXIT_OK)
            } else {
                Ok(EXIT_CONSTRAINT)
            }
        }
        Err(PipelineError::HopLimitExceeded { events, hops }) => {
            print!("{}", render_trace(&events));
            println!("HopLimitExceeded after {hops} hops (forwarding loop)");
            Ok(EXIT_CONSTRAINT)
        }
        Err(e) => Err(anyhow!("{e}")),
    }
}

fn cmd_controller(topology: &Path, scenario: &Path, report: &Path, stdout: bool) -> Result<u8> {
    let t = load(topology)?;
    let text = fs::read_to_string(scenario)
        .with_context(|| format!("reading scenario {}", scenario.display()))?;
    let scenario = Scenario::parse(&text).map_err(|e| anyhow!("{e}"))?;
    let result = run_scenario(&t, &scenario.events).map_err(|e| anyhow!("{e}"))?;

    fs::write(report, result.to_json())
        .with_context(|| format!("writing report {}", report.display()))?;
    print!("{}", result.render_text());
    if stdout {
        print!("{}", result.to_json());
    }
    if result.all_delivered() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_CONSTRAINT)
    }
}

fn cmd_request(
    topology: &Path,
    request: &Path,
    readings: &Path,
    latency: Option<&Path>,
    report: &Path,
    rate_tolerance: f64,
    stdout: bool,
) -> Result<u8> {
    let t = load(topology)?;
    let req = UserRequest::parse(
        &fs::read_to_string(request).with_context(|| format!("reading {}", request.display()))?,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let readings = parse_readings(
        &fs::read_to_string(readings).with_context(|| format!("reading {}", readings.display()))?,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let latencies = match latency {
        Some(path) => LatencyMap::parse(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )
        .map_err(|e| anyhow!("{e}"))?,
        None => LatencyMap::new(),
    };

    let plan = plan_request(&t, &req).map_err(|e| anyhow!("{e}"))?;
    let epochs = simulate_collection(&plan, &readings, &latencies).map_err(|e| anyhow!("{e}"))?;
    let rates = verify_rate(&plan, &readings, rate_tolerance);
    let result = CollectionReport::build(&plan, epochs, rates);

    fs::write(report, result.to_json())
        .with_context(|| format!("writing report {}", report.display()))?;
    print!("{}", result.render_text());
    if stdout {
        print!("{}", result.to_json());
    }
    if result.jitter_ok() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_CONSTRAINT)
    }
}
