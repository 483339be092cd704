//! Synthetic seasons and a recovery study for PWR and NPI.
//!
//! Each team gets a latent strength in goals. A game's margin is drawn around
//! `strength_home - strength_away + hfa_true` and realized as a lacrosse-like
//! integer scoreline. Both methods are then scored on how well their
//! orderings recover the latent order and predict a held-out slate.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compare::{score_predictions, spearman, Ranking};
use crate::npi::{npi_iterate, npi_rank, NpiConfig, NpiError};
use crate::power_rating::{solve_power_ratings, HfaMode, RatingError};
use crate::powerwise::{pwr_rank, tier_share, PwrError};
use crate::schedule::{Game, Season, TeamId, ValidationConfig};

/// Latent ranks treated as the selection bubble.
pub const BUBBLE_RANKS: RangeInclusive<usize> = 8..=14;

const MARGIN_REROLLS: usize = 100;
const SCHEDULE_ATTEMPTS: usize = 1_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("schedule is infeasible: {0}")]
    Infeasible(String),
    #[error("need at least one replication")]
    NoReplications,
    #[error(transparent)]
    Rating(#[from] RatingError),
    #[error(transparent)]
    Pwr(#[from] PwrError),
    #[error(transparent)]
    Npi(#[from] NpiError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleModel {
    /// Complete round robins; `games_per_team` must be a multiple of `n_teams - 1`.
    RoundRobin,
    /// Teams split into conferences; each team plays `crossover_games` against
    /// other conferences and the rest inside its own.
    Conference { n_conferences: usize, crossover_games: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_teams: usize,
    pub games_per_team: usize,
    pub strength_sd: f64,
    pub score_noise_sd: f64,
    /// Typical goals per team per game.
    pub base_goals: f64,
    pub hfa_true: f64,
    pub schedule_model: ScheduleModel,
    pub seed: u64,
    /// Size of the held-out slate used for prediction accuracy.
    pub holdout_games: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_teams: 30,
            games_per_team: 12,
            strength_sd: 3.0,
            score_noise_sd: 4.0,
            base_goals: 11.0,
            hfa_true: 1.0,
            schedule_model: ScheduleModel::Conference {
                n_conferences: 3,
                crossover_games: 3,
            },
            seed: 2025,
            holdout_games: 60,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if self.n_teams < 2 {
            return bad("n_teams must be at least 2");
        }
        if self.games_per_team < 1 {
            return bad("games_per_team must be at least 1");
        }
        for (name, v) in [("strength_sd", self.strength_sd), ("score_noise_sd", self.score_noise_sd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!("{name} must be finite and non-negative")));
            }
        }
        if !self.base_goals.is_finite() || !self.hfa_true.is_finite() {
            return bad("base_goals and hfa_true must be finite");
        }
        Ok(())
    }
}

/// A generated season with the strengths it was drawn from.
#[derive(Debug, Clone)]
pub struct SyntheticSeason {
    pub season: Season,
    /// Latent strengths, indexed like `season.teams()`.
    pub strengths: Vec<f64>,
}

impl SyntheticSeason {
    /// Teams from strongest to weakest latent strength.
    pub fn latent_order(&self) -> Vec<TeamId> {
        let mut idx: Vec<usize> = (0..self.strengths.len()).collect();
        idx.sort_by(|&a, &b| self.strengths[b].total_cmp(&self.strengths[a]).then(a.cmp(&b)));
        idx.into_iter().map(|i| self.season.teams()[i].clone()).collect()
    }

    pub fn strength_map(&self) -> BTreeMap<TeamId, f64> {
        self.season.teams().iter().cloned().zip(self.strengths.iter().copied()).collect()
    }
}

fn team_names(n: usize) -> Vec<TeamId> {
    let width = n.to_string().len();
    (1..=n).map(|i| TeamId::new(format!("T{i:0width$}"))).collect()
}

/// `degree`-regular games among `members`: whole round robins plus a
/// circulant remainder, on a shuffled member order.
fn conference_pairs(members: &[usize], degree: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, SimError> {
    let m = members.len();
    if degree == 0 {
        return Ok(Vec::new());
    }
    if m < 2 {
        return Err(SimError::Infeasible(format!(
            "a conference of {m} team cannot host {degree} games per team"
        )));
    }
    let (full, rem) = (degree / (m - 1), degree % (m - 1));
    if !(m * rem).is_multiple_of(2) {
        return Err(SimError::Infeasible(format!(
            "{m} teams cannot each play {degree} conference games (odd pairing)"
        )));
    }
    let mut order = members.to_vec();
    order.shuffle(rng);
    let mut pairs = Vec::new();
    for _ in 0..full {
        for i in 0..m {
            for j in i + 1..m {
                pairs.push((order[i], order[j]));
            }
        }
    }
    for offset in 1..=rem / 2 {
        for i in 0..m {
            pairs.push((order[i], order[(i + offset) % m]));
        }
    }
    if rem % 2 == 1 {
        for i in 0..m / 2 {
            pairs.push((order[i], order[i + m / 2]));
        }
    }
    Ok(pairs)
}

/// Randomized greedy matching giving every team `degree` games outside its
/// conference, avoiding repeat pairings where possible.
fn crossover_pairs(conf: &[usize], degree: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, SimError> {
    let n = conf.len();
    if degree == 0 {
        return Ok(Vec::new());
    }
    if !(n * degree).is_multiple_of(2) {
        return Err(SimError::Infeasible(format!(
            "{n} teams cannot each play {degree} crossover games (odd pairing)"
        )));
    }
    let mut sizes = BTreeMap::new();
    for &c in conf {
        *sizes.entry(c).or_insert(0usize) += 1;
    }
    if let Some((_, &largest)) = sizes.iter().max_by_key(|(_, &s)| s) {
        if 2 * largest > n {
            return Err(SimError::Infeasible(
                "a conference holds more than half the teams, so crossover games cannot be paired".into(),
            ));
        }
    }

    'attempt: for _ in 0..SCHEDULE_ATTEMPTS {
        let mut remaining = vec![degree; n];
        let mut played = vec![vec![false; n]; n];
        let mut pairs = Vec::with_capacity(n * degree / 2);
        while let Some(&max_rem) = remaining.iter().max().filter(|&&r| r > 0) {
            let heads: Vec<usize> = (0..n).filter(|&i| remaining[i] == max_rem).collect();
            let u = *heads.choose(rng).unwrap();
            let eligible = |v: usize| v != u && conf[v] != conf[u] && remaining[v] > 0;
            let mut candidates: Vec<usize> = (0..n).filter(|&v| eligible(v) && !played[u][v]).collect();
            if candidates.is_empty() {
                candidates = (0..n).filter(|&v| eligible(v)).collect();
            }
            let Some(best) = candidates.iter().map(|&v| remaining[v]).max() else {
                continue 'attempt;
            };
            candidates.retain(|&v| remaining[v] == best);
            let v = *candidates.choose(rng).unwrap();
            remaining[u] -= 1;
            remaining[v] -= 1;
            played[u][v] = true;
            played[v][u] = true;
            pairs.push((u, v));
        }
        return Ok(pairs);
    }
    Err(SimError::Infeasible("could not pair crossover games".into()))
}

fn schedule_pairs(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, SimError> {
    let n = config.n_teams;
    match config.schedule_model {
        ScheduleModel::RoundRobin => {
            if !config.games_per_team.is_multiple_of(n - 1) {
                return Err(SimError::Infeasible(format!(
                    "round robin of {n} teams needs games_per_team to be a multiple of {}",
                    n - 1
                )));
            }
            let mut pairs = Vec::new();
            for _ in 0..config.games_per_team / (n - 1) {
                for i in 0..n {
                    for j in i + 1..n {
                        pairs.push((i, j));
                    }
                }
            }
            Ok(pairs)
        }
        ScheduleModel::Conference {
            n_conferences,
            crossover_games,
        } => {
            if n_conferences == 0 || n_conferences > n {
                return Err(SimError::InvalidConfig(format!(
                    "n_conferences must be between 1 and {n}"
                )));
            }
            if crossover_games > config.games_per_team {
                return Err(SimError::InvalidConfig("crossover_games exceeds games_per_team".into()));
            }
            if crossover_games > 0 && n_conferences < 2 {
                return Err(SimError::Infeasible("crossover games need at least two conferences".into()));
            }
            let conf: Vec<usize> = (0..n).map(|i| i % n_conferences).collect();
            let inside = config.games_per_team - crossover_games;
            let mut pairs = Vec::new();
            for c in 0..n_conferences {
                let members: Vec<usize> = (0..n).filter(|&i| conf[i] == c).collect();
                pairs.extend(conference_pairs(&members, inside, rng)?);
            }
            pairs.extend(crossover_pairs(&conf, crossover_games, rng)?);
            Ok(pairs)
        }
    }
}

/// Draws a nonzero integer margin around `mean`. Zero draws are re-rolled; a
/// noiseless zero goes to the side the mean favours (home on an exact tie).
fn sample_margin(mean: f64, noise: Option<&Normal<f64>>, rng: &mut ChaCha8Rng) -> i64 {
    if let Some(dist) = noise {
        for _ in 0..MARGIN_REROLLS {
            let m = (mean + dist.sample(rng)).round() as i64;
            if m != 0 {
                return m;
            }
        }
    } else {
        let m = mean.round() as i64;
        if m != 0 {
            return m;
        }
    }
    if mean < 0.0 {
        -1
    } else {
        1
    }
}

fn play(
    home: usize,
    away: usize,
    strengths: &[f64],
    teams: &[TeamId],
    config: &SimConfig,
    noise: Option<&Normal<f64>>,
    rng: &mut ChaCha8Rng,
) -> Game {
    let mean = strengths[home] - strengths[away] + config.hfa_true;
    let margin = sample_margin(mean, noise, rng);
    let loser = (config.base_goals - margin.unsigned_abs() as f64 / 2.0).round().max(0.0) as u32;
    let winner = loser + margin.unsigned_abs() as u32;
    let (hs, as_) = if margin > 0 { (winner, loser) } else { (loser, winner) };
    Game::new(teams[home].clone(), teams[away].clone(), hs, as_)
}

struct Generated {
    synthetic: SyntheticSeason,
    holdout: Vec<Game>,
}

fn generate_with(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Generated, SimError> {
    config.validate()?;
    let teams = team_names(config.n_teams);
    let strengths: Vec<f64> = if config.strength_sd > 0.0 {
        let dist = Normal::new(0.0, config.strength_sd).expect("validated sd");
        (0..config.n_teams).map(|_| dist.sample(rng)).collect()
    } else {
        vec![0.0; config.n_teams]
    };
    let noise = (config.score_noise_sd > 0.0).then(|| Normal::new(0.0, config.score_noise_sd).expect("validated sd"));

    let pairs = schedule_pairs(config, rng)?;
    let games: Vec<Game> = pairs
        .into_iter()
        .map(|(a, b)| {
            let (h, w) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            play(h, w, &strengths, &teams, config, noise.as_ref(), rng)
        })
        .collect();

    let holdout = (0..config.holdout_games)
        .map(|_| {
            let h = rng.random_range(0..config.n_teams);
            let mut a = rng.random_range(0..config.n_teams - 1);
            if a >= h {
                a += 1;
            }
            play(h, a, &strengths, &teams, config, noise.as_ref(), rng)
        })
        .collect();

    let season = Season::with_teams(teams, games, ValidationConfig::default())
        .expect("generated games are valid by construction");
    Ok(Generated {
        synthetic: SyntheticSeason { season, strengths },
        holdout,
    })
}

/// Generates one season; the same config (including seed) always yields the
/// same season.
pub fn generate_season(config: &SimConfig) -> Result<SyntheticSeason, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok(generate_with(config, &mut rng)?.synthetic)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Stat {
    fn of(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, sd, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    /// Spearman correlation with the latent order over all teams.
    pub spearman: Option<Stat>,
    /// The same restricted to teams with latent ranks in [`BUBBLE_RANKS`].
    pub bubble_spearman: Option<Stat>,
    /// Winner-prediction accuracy on the held-out slate.
    pub accuracy: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationMetrics {
    pub replication: usize,
    pub pwr_spearman: f64,
    pub npi_spearman: Option<f64>,
    pub pwr_bubble: Option<f64>,
    pub npi_bubble: Option<f64>,
    pub pwr_accuracy: Option<f64>,
    pub npi_accuracy: Option<f64>,
    pub npi_converged: bool,
    /// Share of PWR matchups settled by head-to-head or common opponents.
    pub pwr_on_field_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub n_replications: usize,
    /// NPI runs that did not converge; their NPI metrics are excluded.
    pub npi_nonconverged: usize,
    pub pwr: MethodSummary,
    pub npi: MethodSummary,
    pub replications: Vec<ReplicationMetrics>,
}

impl SimOutcome {
    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "replication",
            "pwr_spearman",
            "npi_spearman",
            "pwr_bubble",
            "npi_bubble",
            "pwr_accuracy",
            "npi_accuracy",
            "npi_converged",
            "pwr_on_field_share",
        ])?;
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.replications {
            w.write_record([
                r.replication.to_string(),
                format!("{:.6}", r.pwr_spearman),
                f(r.npi_spearman),
                f(r.pwr_bubble),
                f(r.npi_bubble),
                f(r.pwr_accuracy),
                f(r.npi_accuracy),
                r.npi_converged.to_string(),
                format!("{:.6}", r.pwr_on_field_share),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Spearman correlation between a method's order and the latent order, over
/// all teams and over the bubble.
fn recovery(method_order: &[TeamId], latent: &[TeamId]) -> (f64, Option<f64>) {
    let pos: BTreeMap<&TeamId, usize> = method_order.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let method_pos: Vec<f64> = latent.iter().map(|t| pos[t] as f64).collect();
    let latent_pos: Vec<f64> = (0..latent.len()).map(|i| i as f64).collect();
    let overall = spearman(&method_pos, &latent_pos);
    let bubble = (latent.len() >= *BUBBLE_RANKS.end()).then(|| {
        let range = (BUBBLE_RANKS.start() - 1)..*BUBBLE_RANKS.end();
        spearman(&method_pos[range.clone()], &latent_pos[range])
    });
    (overall, bubble)
}

fn replicate(config: &SimConfig, npi_config: &NpiConfig, replication: usize) -> Result<ReplicationMetrics, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(replication as u64);
    let Generated { synthetic, holdout } = generate_with(config, &mut rng)?;
    let latent = synthetic.latent_order();
    let season = &synthetic.season;

    let hfa = if season.indexed_games().iter().any(|g| !g.neutral) {
        HfaMode::Fitted
    } else {
        HfaMode::None
    };
    let pr = solve_power_ratings(season, hfa)?;
    let pwr = pwr_rank(season, &pr)?;
    let pwr_order = pwr.teams_in_order();
    let (pwr_spearman, pwr_bubble) = recovery(&pwr_order, &latent);
    let accuracy = |order: &[TeamId]| {
        let ranking = Ranking::from_order(order.iter().cloned()).expect("orders have unique teams");
        score_predictions(&ranking, &holdout).accuracy()
    };

    let npi = npi_iterate(season, npi_config)?;
    let npi_order = npi_rank(&npi).teams_in_order();
    let (npi_spearman, npi_bubble, npi_accuracy) = if npi.converged {
        let (s, b) = recovery(&npi_order, &latent);
        (Some(s), b, accuracy(&npi_order))
    } else {
        (None, None, None)
    };

    Ok(ReplicationMetrics {
        replication,
        pwr_spearman,
        npi_spearman,
        pwr_bubble,
        npi_bubble,
        pwr_accuracy: accuracy(&pwr_order),
        npi_accuracy,
        npi_converged: npi.converged,
        pwr_on_field_share: tier_share(&pwr).on_field,
    })
}

/// Runs `n_replications` independent seasons and summarizes how well each
/// method recovers the latent order. Replication `r` uses ChaCha stream `r`
/// of the configured seed, so results do not depend on thread scheduling.
pub fn evaluate_methods(config: &SimConfig, n_replications: usize, npi_config: &NpiConfig) -> Result<SimOutcome, SimError> {
    if n_replications == 0 {
        return Err(SimError::NoReplications);
    }
    config.validate()?;
    npi_config.validate()?;
    let replications: Vec<ReplicationMetrics> = (0..n_replications)
        .into_par_iter()
        .map(|r| replicate(config, npi_config, r))
        .collect::<Result<_, _>>()?;

    let collect = |f: &dyn Fn(&ReplicationMetrics) -> Option<f64>| {
        Stat::of(&replications.iter().filter_map(f).collect::<Vec<_>>())
    };
    let pwr = MethodSummary {
        spearman: collect(&|r| Some(r.pwr_spearman)),
        bubble_spearman: collect(&|r| r.pwr_bubble),
        accuracy: collect(&|r| r.pwr_accuracy),
    };
    let npi = MethodSummary {
        spearman: collect(&|r| r.npi_spearman),
        bubble_spearman: collect(&|r| r.npi_bubble),
        accuracy: collect(&|r| r.npi_accuracy),
    };
    Ok(SimOutcome {
        n_replications,
        npi_nonconverged: replications.iter().filter(|r| !r.npi_converged).count(),
        pwr,
        npi,
        replications,
    })
}
