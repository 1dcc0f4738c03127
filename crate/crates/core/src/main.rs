use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hybrid_market::escrow::TradeEscrow;
use hybrid_market::incentive::{PayoffMatrix, UtilityParams};
use hybrid_market::journal::{read_log, LogLine};
use hybrid_market::ledger::AccountId;
use hybrid_market::registry::Registry;
use hybrid_market::replay::{replay_bytes, ReplayStatus};
use hybrid_market::sim::{metrics_from_log, run_scenario, ScenarioConfig, EVENTS_FILE};

#[derive(Parser)]
#[command(name = "hybrid-market", about = "Run and audit the sneaker market simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the 2x2 payoff table and the honesty checks.
    PayoffTable {
        /// Scenario config or bare utility parameters; defaults if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Verify an events.jsonl file.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Show an NFT from a run's registry.json.
    InspectNft {
        id: u64,
        /// Resolve metadata as this account.
        #[arg(long = "as")]
        as_account: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Show a trade and its log lines from a run directory.
    InspectTrade {
        id: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

type CliResult = Result<bool, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let result = match Cli::parse().cmd {
        Cmd::Run { config, seed, out } => run(&config, seed, &out),
        Cmd::PayoffTable { config } => payoff_table(config.as_deref()),
        Cmd::Replay { log } => replay(&log),
        Cmd::InspectNft { id, as_account, out } => inspect_nft(id, as_account, &out),
        Cmd::InspectTrade { id, out } => inspect_trade(id, &out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(config: &Path, seed: Option<u64>, out: &Path) -> CliResult {
    let mut cfg = ScenarioConfig::from_json(&fs::read_to_string(config)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let outcome = run_scenario(&cfg)?;
    outcome.write_artifacts(out)?;
    print!("{}", outcome.metrics.to_csv());
    let r = &outcome.report;
    println!(
        "honest agents checked {} (excluded {}), violations {}",
        r.honest_agents_checked,
        r.honest_agents_excluded,
        r.honest_violations.len()
    );
    println!(
        "payoff cells checked {} (wrong verdicts {}), mismatches {}",
        r.cells_checked,
        r.cells_excluded,
        r.cell_mismatches.len()
    );
    let bytes = fs::read(out.join(EVENTS_FILE))?;
    let replayed = replay_bytes(&bytes);
    println!("{replayed}");
    let lines = read_log(bytes.as_slice())?;
    let same = metrics_from_log(&lines, &cfg.utility_params) == outcome.metrics;
    println!("metrics from log {}", if same { "match" } else { "DIFFER" });
    Ok(replayed.status == ReplayStatus::Pass && same && r.passed())
}

fn payoff_table(config: Option<&Path>) -> CliResult {
    let params = match config {
        None => UtilityParams::default(),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            match ScenarioConfig::from_json(&text) {
                Ok(cfg) => cfg.utility_params,
                Err(_) => serde_json::from_str(&text)?,
            }
        }
    };
    let m = PayoffMatrix::new(&params)?;
    println!("{}", m.render());
    for c in m.constraint_checks() {
        println!("{c}");
    }
    Ok(m.check_honesty().is_ok())
}

fn replay(log: &Path) -> CliResult {
    let report = replay_bytes(&fs::read(log)?);
    println!("{report}");
    Ok(report.status == ReplayStatus::Pass)
}

fn inspect_nft(id: u64, as_account: Option<String>, out: &Path) -> CliResult {
    let registry = Registry::from_json(&fs::read_to_string(out.join("registry.json"))?)?;
    let rec = registry.get(id)?;
    println!("{}", serde_json::to_string_pretty(&rec.public_view())?);
    let Some(who) = as_account else { return Ok(true) };
    let who = AccountId::new(who)?;
    match registry.resolve_metadata(id, &rec.latest_digest(), &who) {
        Ok(meta) => {
            println!("{}", serde_json::to_string_pretty(&meta)?);
            Ok(true)
        }
        Err(e) => {
            println!("metadata hidden from {who}: {e}");
            Ok(false)
        }
    }
}

fn inspect_trade(id: u64, out: &Path) -> CliResult {
    let trades: Vec<TradeEscrow> = serde_json::from_str(&fs::read_to_string(out.join("trades.json"))?)?;
    let Some(t) = trades.iter().find(|t| t.trade_id == id) else {
        println!("no trade {id}");
        return Ok(false);
    };
    println!("{}", serde_json::to_string_pretty(t)?);
    let lines = read_log(fs::File::open(out.join(EVENTS_FILE)).map(std::io::BufReader::new)?)?;
    for l in lines {
        if let LogLine::Market(r) = &l {
            let v = serde_json::to_value(r)?;
            if v.get("trade_id").and_then(|x| x.as_u64()) == Some(id) {
                println!("{}", l.render());
            }
        }
    }
    Ok(true)
}
