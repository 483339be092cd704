//! `laxrank`: rank seasons with PWR or NPI, compare rankings, probe NPI
//! stability, play out what-if scenarios and run the synthetic-season study.

mod exit;
mod manifest;
mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use laxrank_core::compare::{
    compare_rankings, score_predictions, whatif, Discrepancy, PredictionScore, Ranking, BUBBLE_THRESHOLD, BUBBLE_TOP,
};
use laxrank_core::npi::{dial_sweep, npi_iterate, npi_rank, NpiRanking};
use laxrank_core::power_rating::solve_power_ratings_with;
use laxrank_core::powerwise::{pwr_rank, tier_share, write_summary_csv, PwrRanking, TierShare};
use laxrank_core::schedule::{parse_games, Format, Parsed, Season, TeamRecord, ValidationConfig};
use laxrank_core::simulate::evaluate_methods;

use crate::exit::Failure;
use crate::manifest::Run;
use crate::settings::{
    load_config, MethodName, NpiArgs, PwrArgs, RankSettings, SimArgs, SimSettings, StabilitySettings,
};

pub const OUT_DIR_ENV: &str = "LAXRANK_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "laxrank-out";

#[derive(Parser)]
#[command(name = "laxrank", version, about = "Powerwise (PWR) and NCAA Power Index (NPI) rankings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GamesArgs {
    /// Game file (CSV or JSON; chosen by extension unless --format is given)
    #[arg(long)]
    games: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Accept drawn games
    #[arg(long)]
    allow_ties: bool,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output directory for machine-readable artifacts
    #[arg(long, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Rank a season with PWR or NPI
    Rank {
        #[command(flatten)]
        games: GamesArgs,
        #[arg(long, value_enum)]
        method: Option<MethodName>,
        #[command(flatten)]
        pwr: PwrArgs,
        #[command(flatten)]
        npi: NpiArgs,
        /// JSON settings (same shape as the `config` block of a manifest)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Rows of the stdout table
        #[arg(long, default_value_t = 25)]
        top: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare two ranking files
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Exit with code 7 when Spearman correlation falls below this value
        #[arg(long)]
        fail_below: Option<f64>,
        #[arg(long, default_value_t = BUBBLE_THRESHOLD)]
        bubble_threshold: f64,
        #[arg(long, default_value_t = BUBBLE_TOP)]
        bubble_top: f64,
        /// Games to score each ranking's winner predictions on
        #[arg(long)]
        heldout: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sweep the NPI dial and report convergence and ranking drift
    Stability {
        #[command(flatten)]
        games: GamesArgs,
        /// Comma-separated dial values
        #[arg(long, value_delimiter = ',')]
        dials: Vec<f64>,
        #[command(flatten)]
        npi: NpiArgs,
        /// Size of the top group tracked between dials
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Re-rank with hypothetical games added
    Whatif {
        #[command(flatten)]
        games: GamesArgs,
        /// Hypothetical games, same format as --games
        #[arg(long)]
        add: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodName>,
        #[command(flatten)]
        pwr: PwrArgs,
        #[command(flatten)]
        npi: NpiArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Synthetic-season study of how well PWR and NPI recover true strength
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        npi: NpiArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check a game file without rating it
    Validate {
        #[command(flatten)]
        games: GamesArgs,
    },
}

fn read_games(run: Option<&mut Run>, args: &GamesArgs, allow_ties: bool) -> Result<Parsed, Failure> {
    read_game_file(run, &args.games, args.format, allow_ties)
}

fn read_game_file(run: Option<&mut Run>, path: &Path, format: Option<FormatArg>, allow_ties: bool) -> Result<Parsed, Failure> {
    let bytes = match run {
        Some(run) => run.read_input(path)?,
        None => std::fs::read(path).map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", path.display())))?,
    };
    let format = match format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => Format::from_path(path),
    };
    let parsed = parse_games(&bytes[..], format, ValidationConfig { allow_ties })
        .map_err(|e| prefix(Failure::from(e), path))?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(parsed)
}

fn prefix(mut f: Failure, path: &Path) -> Failure {
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| Failure::new(exit::IO, e.to_string()))?;
    Ok(buf)
}

#[derive(Serialize)]
struct PwrDoc<'a> {
    method: &'static str,
    order: &'a [laxrank_core::powerwise::PwrEntry],
    tier_share: TierShare,
    warnings: &'a [String],
    matchups: &'a [laxrank_core::powerwise::TierOutcome],
}

#[derive(Serialize)]
struct NpiDoc<'a> {
    method: &'static str,
    #[serde(flatten)]
    ranking: &'a NpiRanking,
    records: std::collections::BTreeMap<String, String>,
}

fn print_pwr_table(ranking: &PwrRanking, top: usize) {
    println!("{:>4}  {:<28} {:>7} {:>8}  record", "rank", "team", "points", "PR");
    for e in ranking.order.iter().take(top) {
        println!(
            "{:>4}  {:<28} {:>7.1} {:>8.2}  {}",
            e.rank,
            e.team,
            e.points,
            e.power_rating + 0.0,
            e.record
        );
    }
}

fn print_npi_table(ranking: &NpiRanking, records: &[(String, TeamRecord)], top: usize) {
    println!("{:>4}  {:<28} {:>8}  record", "rank", "team", "NPI");
    for e in ranking.order.iter().take(top) {
        let rec = records
            .iter()
            .find(|(t, _)| t == e.team.as_str())
            .map(|(_, r)| r.to_string())
            .unwrap_or_default();
        println!(
            "{:>4}  {:<28} {:>8.4}  {}{}",
            e.rank,
            e.team,
            e.value,
            rec,
            if e.tied { "  (tied)" } else { "" }
        );
    }
}

fn season_records(season: &Season) -> Vec<(String, TeamRecord)> {
    season
        .teams()
        .iter()
        .map(|t| t.to_string())
        .zip(season.records())
        .collect()
}

fn cmd_rank(
    games: GamesArgs,
    method: Option<MethodName>,
    pwr: PwrArgs,
    npi: NpiArgs,
    config: Option<PathBuf>,
    top: usize,
    out: PathBuf,
) -> Result<i32, Failure> {
    let mut run = Run::new("rank", out);
    let base: RankSettings = load_config(&mut run, config.as_deref())?;
    let settings = base.merge(method, games.allow_ties, &pwr, &npi);
    run.set_config(&settings);
    let parsed = read_games(Some(&mut run), &games, settings.allow_ties)?;
    let season = parsed.season;
    let mut code = exit::OK;

    match settings.method {
        MethodName::Pwr => {
            let pr_config = settings.power_rating_config(&season)?;
            let pr = solve_power_ratings_with(&season, &pr_config)?;
            let ranking = pwr_rank(&season, &pr)?;
            for w in &pr.warnings {
                eprintln!("warning: {w}");
            }
            run.write_json(
                "ranking.json",
                &PwrDoc {
                    method: "pwr",
                    order: &ranking.order,
                    tier_share: tier_share(&ranking),
                    warnings: &pr.warnings,
                    matchups: &ranking.matchups,
                },
            )?;
            run.write_json("ratings.json", &pr.export())?;
            run.write_bytes("ranking.csv", &csv_bytes(|b| write_summary_csv(&ranking, b))?)?;
            print_pwr_table(&ranking, top);
            println!("home-field advantage: {:.3} goals ({:?})", pr.hfa.value, pr.hfa.mode);
        }
        MethodName::Npi => {
            let result = npi_iterate(&season, &settings.npi)?;
            let ranking = npi_rank(&result);
            let records = season_records(&season);
            run.write_json(
                "ranking.json",
                &NpiDoc {
                    method: "npi",
                    ranking: &ranking,
                    records: records.iter().map(|(t, r)| (t.clone(), r.to_string())).collect(),
                },
            )?;
            run.write_json("npi.json", &result.export())?;
            let csv = csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["rank", "team", "npi", "record"])?;
                for e in &ranking.order {
                    let rec = records.iter().find(|(t, _)| t == e.team.as_str()).map(|(_, r)| r.to_string());
                    w.write_record([
                        e.rank.to_string(),
                        e.team.to_string(),
                        format!("{:.10}", e.value),
                        rec.unwrap_or_default(),
                    ])?;
                }
                w.flush()?;
                Ok(())
            })?;
            run.write_bytes("ranking.csv", &csv)?;
            print_npi_table(&ranking, &records, top);
            if let Some(w) = &ranking.warning {
                eprintln!("warning: {w}");
                code = exit::NON_CONVERGENCE;
            }
        }
    }
    run.finish()?;
    Ok(code)
}

#[derive(Serialize)]
struct CompareDoc<'a> {
    #[serde(flatten)]
    report: &'a laxrank_core::compare::ComparisonReport,
    bubble_threshold: f64,
    bubble_top: f64,
    bubble: Vec<&'a Discrepancy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predictions: Option<[PredictionScore; 2]>,
    materially_disagree: bool,
}

#[derive(Serialize)]
struct CompareConfig {
    fail_below: Option<f64>,
    bubble_threshold: f64,
    bubble_top: f64,
}

fn fmt_rank(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        format!("{r:.1}")
    }
}

fn cmd_compare(
    first: PathBuf,
    second: PathBuf,
    fail_below: Option<f64>,
    bubble_threshold: f64,
    bubble_top: f64,
    heldout: Option<PathBuf>,
    out: PathBuf,
) -> Result<i32, Failure> {
    let mut run = Run::new("compare", out);
    run.set_config(&CompareConfig {
        fail_below,
        bubble_threshold,
        bubble_top,
    });
    let load = |run: &mut Run, path: &Path| -> Result<Ranking, Failure> {
        let bytes = run.read_input(path)?;
        let text = String::from_utf8(bytes).map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", path.display())))?;
        Ranking::from_json_str(&text).map_err(|e| prefix(e.into(), path))
    };
    let r1 = load(&mut run, &first)?;
    let r2 = load(&mut run, &second)?;
    let report = compare_rankings(&r1, &r2)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let predictions = match &heldout {
        Some(path) => {
            let games = read_game_file(Some(&mut run), path, None, true)?.season;
            Some([score_predictions(&r1, games.games()), score_predictions(&r2, games.games())])
        }
        None => None,
    };
    let materially_disagree = fail_below.is_some_and(|t| report.spearman.is_nan() || report.spearman < t);
    let bubble = report.bubble_disagreements(bubble_threshold, bubble_top);

    println!("shared teams: {}", report.shared);
    println!("spearman:     {:.4}", report.spearman);
    println!("kendall tau:  {:.4}", report.kendall_tau);
    for (k, v) in &report.top_k_overlap {
        println!("top-{k:<2} overlap: {v:.2}");
    }
    if let Some(p) = &predictions {
        for (label, s) in ["first", "second"].iter().zip(p) {
            let acc = s.accuracy().map(|a| format!("{a:.3}")).unwrap_or_else(|| "n/a".into());
            println!("{label} ranking predicted {}/{} held-out games ({acc})", s.correct, s.scored);
        }
    }
    if !bubble.is_empty() {
        println!();
        println!("{:<28} {:>6} {:>6} {:>6}", "bubble disagreements", "first", "second", "delta");
        for d in &bubble {
            println!(
                "{:<28} {:>6} {:>6} {:>+6}",
                d.team,
                fmt_rank(d.rank_1),
                fmt_rank(d.rank_2),
                fmt_rank(d.delta)
            );
        }
    }

    run.write_json(
        "comparison.json",
        &CompareDoc {
            report: &report,
            bubble_threshold,
            bubble_top,
            bubble,
            predictions,
            materially_disagree,
        },
    )?;
    run.finish()?;
    Ok(if materially_disagree { exit::DISAGREE } else { exit::OK })
}

fn cmd_stability(
    games: GamesArgs,
    dials: Vec<f64>,
    npi: NpiArgs,
    top_k: Option<usize>,
    config: Option<PathBuf>,
    out: PathBuf,
) -> Result<i32, Failure> {
    let mut run = Run::new("stability", out);
    let base: StabilitySettings = load_config(&mut run, config.as_deref())?;
    let settings = base.merge(games.allow_ties, dials, top_k, &npi)?;
    run.set_config(&settings);
    let season = read_games(Some(&mut run), &games, settings.allow_ties)?.season;
    let report = dial_sweep(&season, &settings.dials, &settings.npi, settings.top_k)?;
    run.write_bytes("sweep.csv", &csv_bytes(|b| report.write_csv(b))?)?;
    run.write_json("sweep.json", &report)?;

    println!("{:>6}  {:>9}  {:>10}  {:>8}  {:>6}", "dial", "converged", "iterations", "spearman", "cycle");
    for r in &report.rows {
        println!(
            "{:>6.3}  {:>9}  {:>10}  {:>8}  {:>6}",
            r.dial,
            r.converged,
            r.iterations,
            r.spearman_vs_prev.map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into()),
            r.oscillation_period.map(|p| p.to_string()).unwrap_or_else(|| "-".into()),
        );
    }
    run.finish()?;
    Ok(if report.rows.iter().all(|r| r.converged) {
        exit::OK
    } else {
        exit::NON_CONVERGENCE
    })
}

fn cmd_whatif(
    games: GamesArgs,
    add: PathBuf,
    method: Option<MethodName>,
    pwr: PwrArgs,
    npi: NpiArgs,
    config: Option<PathBuf>,
    out: PathBuf,
) -> Result<i32, Failure> {
    let mut run = Run::new("whatif", out);
    let base: RankSettings = load_config(&mut run, config.as_deref())?;
    let settings = base.merge(method, games.allow_ties, &pwr, &npi);
    run.set_config(&settings);
    let season = read_games(Some(&mut run), &games, settings.allow_ties)?.season;
    let extra = read_game_file(Some(&mut run), &add, games.format, settings.allow_ties)?.season;
    let method = settings.method_config(&season)?;
    let report = whatif(&season, extra.games(), &method)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    run.write_json("whatif.json", &report)?;
    run.write_bytes("whatif.csv", &csv_bytes(|b| report.write_csv(b))?)?;

    let moved: Vec<_> = report.moved().collect();
    println!("{} hypothetical games, {} teams moved", report.added_games, moved.len());
    for m in moved {
        println!("{:<28} {:>4} -> {:<4} ({:+})", m.team, m.rank_before, m.rank_after, m.movement);
    }
    run.finish()?;
    Ok(exit::OK)
}

fn cmd_simulate(sim: SimArgs, npi: NpiArgs, config: Option<PathBuf>, out: PathBuf) -> Result<i32, Failure> {
    let mut run = Run::new("simulate", out);
    let base: SimSettings = load_config(&mut run, config.as_deref())?;
    let settings = base.merge(&sim, &npi);
    run.set_config(&settings);
    let outcome = evaluate_methods(&settings.simulation, settings.replications, &settings.npi)?;
    run.write_bytes("simulate.csv", &csv_bytes(|b| outcome.write_csv(b))?)?;
    run.write_json("simulate.json", &outcome)?;

    let show = |s: Option<laxrank_core::simulate::Stat>| {
        s.map(|s| format!("{:.4} ± {:.4}", s.mean, s.sd)).unwrap_or_else(|| "n/a".into())
    };
    println!("{} replications ({} NPI runs did not converge)", outcome.n_replications, outcome.npi_nonconverged);
    println!("{:<22} {:>18} {:>18}", "", "PWR", "NPI");
    println!("{:<22} {:>18} {:>18}", "spearman vs latent", show(outcome.pwr.spearman), show(outcome.npi.spearman));
    println!(
        "{:<22} {:>18} {:>18}",
        "bubble spearman",
        show(outcome.pwr.bubble_spearman),
        show(outcome.npi.bubble_spearman)
    );
    println!("{:<22} {:>18} {:>18}", "held-out accuracy", show(outcome.pwr.accuracy), show(outcome.npi.accuracy));
    run.finish()?;
    Ok(exit::OK)
}

fn cmd_validate(games: GamesArgs) -> Result<i32, Failure> {
    let parsed = read_games(None, &games, games.allow_ties)?;
    let season = &parsed.season;
    let comps = season.connectivity();
    println!("{}: {} teams, {} games", games.games.display(), season.len_teams(), season.games().len());
    let neutral = season.games().iter().filter(|g| g.neutral).count();
    println!("neutral-site games: {neutral}");
    if comps.is_connected() {
        println!("schedule graph is connected");
    } else {
        println!("schedule graph has {} components:", comps.len());
        for g in &comps.groups {
            let names: Vec<String> = g.iter().map(|t| t.to_string()).collect();
            println!("  {}", names.join(", "));
        }
    }
    println!("{} warnings", parsed.warnings.len());
    Ok(exit::OK)
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Rank {
            games,
            method,
            pwr,
            npi,
            config,
            top,
            out,
        } => cmd_rank(games, method, pwr, npi, config, top, out.out),
        Command::Compare {
            first,
            second,
            fail_below,
            bubble_threshold,
            bubble_top,
            heldout,
            out,
        } => cmd_compare(first, second, fail_below, bubble_threshold, bubble_top, heldout, out.out),
        Command::Stability {
            games,
            dials,
            npi,
            top_k,
            config,
            out,
        } => cmd_stability(games, dials, npi, top_k, config, out.out),
        Command::Whatif {
            games,
            add,
            method,
            pwr,
            npi,
            config,
            out,
        } => cmd_whatif(games, add, method, pwr, npi, config, out.out),
        Command::Simulate { sim, npi, config, out } => cmd_simulate(sim, npi, config, out.out),
        Command::Validate { games } => cmd_validate(games),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
