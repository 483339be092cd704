//! NCAA Power Index (NPI).
//!
//! Each team's index is a dial-weighted blend of its win percentage and the
//! average index of its opponents:
//!
//! ```text
//! NPI'(t) = dial * W/(W+L) + (1 - dial) * mean(NPI(opponent) for each game of t)
//! ```
//!
//! The index appears on both sides, so it is found by fixed-point iteration.
//! Updates are synchronous (every team moves from the same previous iterate).
//! For `dial > 0` the map is a contraction; at `dial = 0` a bipartite schedule
//! graph makes the iterates alternate forever, which is reported as a detected
//! cycle rather than a solution.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compare::spearman_by_position;
use crate::schedule::{Season, TeamId};

/// Longest cycle looked for when an iteration fails to converge.
pub const MAX_CYCLE_PERIOD: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum NpiError {
    #[error("season has no games")]
    EmptySeason,
    #[error("no team has played a game")]
    NoRatedTeams,
    #[error("dial must lie in [0, 1], got {0}")]
    DialOutOfRange(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("max_iterations must be at least 1")]
    NoIterations,
    #[error("initial value must be finite, got {0}")]
    BadInitialValue(f64),
    #[error("unknown team `{0}` in initial values")]
    UnknownTeam(TeamId),
    #[error("`{0}` is reserved and not implemented")]
    Unsupported(&'static str),
}

/// What "average NPI of a team's opponents" averages over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentAverage {
    /// One term per game played, so rematches count once per meeting.
    #[default]
    PerGame,
    /// Mean over every rated team in the division, as the formula is
    /// literally written. Kept for comparison.
    DivisionWide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NpiConfig {
    pub dial: f64,
    /// Stop when no team moves by more than this between iterates.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_value: f64,
    pub opponent_average: OpponentAverage,
    /// Starting values for specific teams, overriding `initial_value`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub initial_overrides: BTreeMap<TeamId, f64>,
    /// Reserved: home-game adjustment dial. Not implemented.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub home_dial: Option<f64>,
    /// Reserved: quality-win bonus points. Not implemented.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_win_bonus: Option<f64>,
    /// Reserved: overtime-win dial. Not implemented.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overtime_dial: Option<f64>,
}

impl Default for NpiConfig {
    fn default() -> Self {
        NpiConfig {
            dial: 0.5,
            tolerance: 1e-8,
            max_iterations: 10_000,
            initial_value: 0.5,
            opponent_average: OpponentAverage::PerGame,
            initial_overrides: BTreeMap::new(),
            home_dial: None,
            quality_win_bonus: None,
            overtime_dial: None,
        }
    }
}

impl NpiConfig {
    pub fn with_dial(dial: f64) -> Self {
        NpiConfig {
            dial,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), NpiError> {
        if !(0.0..=1.0).contains(&self.dial) {
            return Err(NpiError::DialOutOfRange(self.dial));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(NpiError::BadTolerance(self.tolerance));
        }
        if self.max_iterations == 0 {
            return Err(NpiError::NoIterations);
        }
        if !self.initial_value.is_finite() {
            return Err(NpiError::BadInitialValue(self.initial_value));
        }
        if let Some(v) = self.initial_overrides.values().find(|v| !v.is_finite()) {
            return Err(NpiError::BadInitialValue(*v));
        }
        if self.home_dial.is_some() {
            return Err(NpiError::Unsupported("home_dial"));
        }
        if self.quality_win_bonus.is_some() {
            return Err(NpiError::Unsupported("quality_win_bonus"));
        }
        if self.overtime_dial.is_some() {
            return Err(NpiError::Unsupported("overtime_dial"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpiResult {
    teams: Vec<TeamId>,
    values: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest per-team change in the final iteration.
    pub max_residual: f64,
    pub oscillation_period: Option<usize>,
    /// Teams without games, left out of the system.
    pub excluded: Vec<TeamId>,
    pub dial: f64,
    pub tolerance: f64,
}

impl NpiResult {
    pub fn teams(&self) -> &[TeamId] {
        &self.teams
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, team: &TeamId) -> Option<f64> {
        self.teams.binary_search(team).ok().map(|i| self.values[i])
    }

    pub fn export(&self) -> NpiExport {
        NpiExport {
            values: self.teams.iter().zip(&self.values).map(|(t, &v)| (t.to_string(), v)).collect(),
            dial: self.dial,
            converged: self.converged,
            iterations: self.iterations,
            max_residual: self.max_residual,
            oscillation_period: self.oscillation_period,
            excluded: self.excluded.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NpiExport {
    pub values: BTreeMap<String, f64>,
    pub dial: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation_period: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<TeamId>,
}

/// The iteration map restricted to teams with games.
struct System {
    win_pct: Vec<f64>,
    /// Opponent (compact index) of every game, per team.
    opponents: Vec<Vec<usize>>,
    dial: f64,
    average: OpponentAverage,
}

impl System {
    fn step(&self, current: &[f64], next: &mut [f64]) -> f64 {
        let division_mean = current.iter().sum::<f64>() / current.len() as f64;
        let mut max_change: f64 = 0.0;
        for (t, out) in next.iter_mut().enumerate() {
            let sos = match self.average {
                OpponentAverage::PerGame => {
                    let opp = &self.opponents[t];
                    opp.iter().map(|&o| current[o]).sum::<f64>() / opp.len() as f64
                }
                OpponentAverage::DivisionWide => division_mean,
            };
            *out = self.dial * self.win_pct[t] + (1.0 - self.dial) * sos;
            max_change = max_change.max((*out - current[t]).abs());
        }
        max_change
    }
}

/// Smallest period `p` in `2..=MAX_CYCLE_PERIOD` such that the trailing
/// history repeats with period `p` to within `tolerance`.
fn detect_cycle(history: &VecDeque<Vec<f64>>, tolerance: f64) -> Option<usize> {
    let len = history.len();
    (2..=MAX_CYCLE_PERIOD).find(|&p| {
        len >= 2 * p
            && (0..p).all(|j| {
                let (x, y) = (&history[len - 1 - j], &history[len - 1 - j - p]);
                x.iter().zip(y).all(|(a, b)| (a - b).abs() <= tolerance)
            })
    })
}

/// Runs the NPI fixed-point iteration.
pub fn npi_iterate(season: &Season, config: &NpiConfig) -> Result<NpiResult, NpiError> {
    config.validate()?;
    if season.is_empty() {
        return Err(NpiError::EmptySeason);
    }
    for team in config.initial_overrides.keys() {
        if !season.contains(team) {
            return Err(NpiError::UnknownTeam(team.clone()));
        }
    }

    let played = season.games_played();
    let mut compact = vec![usize::MAX; season.len_teams()];
    let mut teams = Vec::new();
    let mut excluded = Vec::new();
    for (i, team) in season.teams().iter().enumerate() {
        if played[i] > 0 {
            compact[i] = teams.len();
            teams.push(team.clone());
        } else {
            excluded.push(team.clone());
        }
    }
    if teams.is_empty() {
        return Err(NpiError::NoRatedTeams);
    }

    let mut opponents = vec![Vec::new(); teams.len()];
    for g in season.indexed_games() {
        opponents[compact[g.home]].push(compact[g.away]);
        opponents[compact[g.away]].push(compact[g.home]);
    }
    let records = season.records();
    let win_pct: Vec<f64> = season
        .teams()
        .iter()
        .enumerate()
        .filter(|(i, _)| played[*i] > 0)
        .map(|(i, _)| records[i].win_pct().unwrap())
        .collect();
    let system = System {
        win_pct,
        opponents,
        dial: config.dial,
        average: config.opponent_average,
    };

    let mut current: Vec<f64> = teams
        .iter()
        .map(|t| config.initial_overrides.get(t).copied().unwrap_or(config.initial_value))
        .collect();
    let mut next = vec![0.0; teams.len()];
    let keep = 2 * MAX_CYCLE_PERIOD + 1;
    let mut history: VecDeque<Vec<f64>> = VecDeque::with_capacity(keep + 1);
    history.push_back(current.clone());

    let mut converged = false;
    let mut iterations = 0;
    let mut max_residual = f64::INFINITY;
    while iterations < config.max_iterations {
        max_residual = system.step(&current, &mut next);
        iterations += 1;
        std::mem::swap(&mut current, &mut next);
        if history.len() == keep {
            history.pop_front();
        }
        history.push_back(current.clone());
        if max_residual <= config.tolerance {
            converged = true;
            break;
        }
    }

    let oscillation_period = if converged {
        None
    } else {
        detect_cycle(&history, config.tolerance)
    };

    Ok(NpiResult {
        teams,
        values: current,
        converged,
        iterations,
        max_residual,
        oscillation_period,
        excluded,
        dial: config.dial,
        tolerance: config.tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NpiEntry {
    pub rank: usize,
    pub team: TeamId,
    pub value: f64,
    /// Same value as a neighbouring entry; placed by name.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub tied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NpiRanking {
    pub order: Vec<NpiEntry>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl NpiRanking {
    pub fn teams_in_order(&self) -> Vec<TeamId> {
        self.order.iter().map(|e| e.team.clone()).collect()
    }
}

/// Orders teams by descending NPI, equal values by name.
pub fn npi_rank(result: &NpiResult) -> NpiRanking {
    let mut idx: Vec<usize> = (0..result.teams.len()).collect();
    idx.sort_by(|&a, &b| {
        result.values[b]
            .total_cmp(&result.values[a])
            .then(result.teams[a].cmp(&result.teams[b]))
    });
    let order: Vec<NpiEntry> = idx
        .iter()
        .enumerate()
        .map(|(pos, &i)| {
            let v = result.values[i];
            let same = |k: Option<&usize>| k.is_some_and(|&j| result.values[j] == v);
            NpiEntry {
                rank: pos + 1,
                team: result.teams[i].clone(),
                value: v,
                tied: same(pos.checked_sub(1).and_then(|p| idx.get(p))) || same(idx.get(pos + 1)),
            }
        })
        .collect();
    let warning = (!result.converged).then(|| {
        format!(
            "NPI did not converge after {} iterations (last change {:e}); ranking reflects the final iterate",
            result.iterations, result.max_residual
        )
    });
    NpiRanking {
        order,
        converged: result.converged,
        warning,
    }
}

/// One dial setting of a stability sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub dial: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_residual: f64,
    pub oscillation_period: Option<usize>,
    /// Rank correlation with the previous dial's ordering.
    pub spearman_vs_prev: Option<f64>,
    /// Teams in this dial's top k that were not in the previous dial's top k.
    pub top_k_changed: Option<usize>,
    pub top: Vec<TeamId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub top_k: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "dial",
            "converged",
            "iterations",
            "spearman_vs_prev",
            "max_residual",
            "oscillation_period",
            "top_k_changed",
        ])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.dial.to_string(),
                r.converged.to_string(),
                r.iterations.to_string(),
                opt(r.spearman_vs_prev.map(|s| format!("{s:.6}"))),
                format!("{:e}", r.max_residual),
                opt(r.oscillation_period.map(|p| p.to_string())),
                opt(r.top_k_changed.map(|c| c.to_string())),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs [`npi_iterate`] at each dial and reports stability and how the
/// ordering shifts between adjacent dials.
pub fn dial_sweep(season: &Season, dials: &[f64], config: &NpiConfig, top_k: usize) -> Result<SweepReport, NpiError> {
    if let Some(&d) = dials.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(NpiError::DialOutOfRange(d));
    }
    let results: Vec<NpiResult> = dials
        .par_iter()
        .map(|&dial| {
            let cfg = NpiConfig {
                dial,
                ..config.clone()
            };
            npi_iterate(season, &cfg)
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::with_capacity(results.len());
    let mut prev: Option<Vec<TeamId>> = None;
    for res in &results {
        let order = npi_rank(res).teams_in_order();
        let top: Vec<TeamId> = order.iter().take(top_k).cloned().collect();
        let (spearman_vs_prev, top_k_changed) = match &prev {
            Some(p) => {
                let prev_top: Vec<&TeamId> = p.iter().take(top_k).collect();
                let changed = top.iter().filter(|t| !prev_top.contains(t)).count();
                (spearman_by_position(p, &order), Some(changed))
            }
            None => (None, None),
        };
        rows.push(SweepRow {
            dial: res.dial,
            converged: res.converged,
            iterations: res.iterations,
            max_residual: res.max_residual,
            oscillation_period: res.oscillation_period,
            spearman_vs_prev,
            top_k_changed,
            top,
        });
        prev = Some(order);
    }
    Ok(SweepReport { top_k, rows })
}
