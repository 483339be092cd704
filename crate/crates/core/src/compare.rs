//! Agreement between rankings, and what-if recomputation.
//!
//! Rankings may contain ties; tied teams share the average of the positions
//! they span in both correlation measures. Kendall's tau is the tau-b variant.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::npi::{npi_iterate, npi_rank, NpiConfig, NpiError};
use crate::power_rating::{solve_power_ratings_with, PowerRatingConfig, RatingError};
use crate::powerwise::{pwr_rank, PwrError};
use crate::schedule::{Game, ScheduleError, Season, TeamId};

/// Top-k cut-offs reported by [`compare_rankings`].
pub const TOP_K: [usize; 3] = [5, 10, 20];

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("rankings share {0} teams; at least 2 are needed")]
    TooFewShared(usize),
    #[error("team `{0}` appears more than once in a ranking")]
    DuplicateTeam(TeamId),
    #[error("rank for `{0}` is not a finite number")]
    BadRank(TeamId),
    #[error("unrecognised ranking document: {0}")]
    BadDocument(String),
    #[error("invalid hypothetical game: {0}")]
    InvalidHypothetical(#[source] ScheduleError),
    #[error(transparent)]
    Rating(#[from] RatingError),
    #[error(transparent)]
    Pwr(#[from] PwrError),
    #[error(transparent)]
    Npi(#[from] NpiError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTeam {
    pub team: TeamId,
    pub rank: f64,
}

/// A ranked list of teams. Ranks need not be consecutive or distinct.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ranking {
    entries: Vec<RankedTeam>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EntryDoc {
    Name(TeamId),
    Ranked { team: TeamId, rank: f64 },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RankingDoc {
    List(Vec<EntryDoc>),
    Wrapped { order: Vec<EntryDoc> },
}

impl Ranking {
    /// Ranks 1, 2, 3, ... in the given order.
    pub fn from_order<I: IntoIterator<Item = TeamId>>(teams: I) -> Result<Self, CompareError> {
        Self::from_ranks(teams.into_iter().enumerate().map(|(i, t)| (t, (i + 1) as f64)))
    }

    pub fn from_ranks<I: IntoIterator<Item = (TeamId, f64)>>(pairs: I) -> Result<Self, CompareError> {
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for (team, rank) in pairs {
            if !rank.is_finite() {
                return Err(CompareError::BadRank(team));
            }
            if !seen.insert(team.clone()) {
                return Err(CompareError::DuplicateTeam(team));
            }
            entries.push(RankedTeam { team, rank });
        }
        entries.sort_by(|a, b| a.rank.total_cmp(&b.rank).then(a.team.cmp(&b.team)));
        Ok(Ranking { entries })
    }

    /// Accepts a JSON array of team names (in rank order), an array of
    /// `{team, rank}` objects, or either wrapped as `{"order": [...]}` (the
    /// shape of this crate's ranking exports).
    pub fn from_json_str(text: &str) -> Result<Self, CompareError> {
        let doc: RankingDoc = serde_json::from_str(text).map_err(|e| CompareError::BadDocument(e.to_string()))?;
        let entries = match doc {
            RankingDoc::List(e) | RankingDoc::Wrapped { order: e } => e,
        };
        let pairs: Vec<(TeamId, f64)> = entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| match e {
                EntryDoc::Name(team) => (team, (i + 1) as f64),
                EntryDoc::Ranked { team, rank } => (team, rank),
            })
            .collect();
        Self::from_ranks(pairs)
    }

    pub fn entries(&self) -> &[RankedTeam] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rank(&self, team: &TeamId) -> Option<f64> {
        self.entries.iter().find(|e| &e.team == team).map(|e| e.rank)
    }

    fn lookup(&self) -> HashMap<&TeamId, f64> {
        self.entries.iter().map(|e| (&e.team, e.rank)).collect()
    }
}

/// Ranks of `values` (1 = smallest), ties sharing their average position.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation. NaN when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall's tau-b. NaN when either input is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut untied_x, mut untied_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = (x[i] - x[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let sy = (y[i] - y[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            untied_x += i64::from(sx != 0);
            untied_y += i64::from(sy != 0);
            match sx * sy {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let denom = ((untied_x as f64) * (untied_y as f64)).sqrt();
    ((concordant - discordant) as f64 / denom).clamp(-1.0, 1.0)
}

/// Spearman correlation between two orderings of (mostly) the same teams,
/// over the teams they share. `None` with fewer than two shared teams.
pub fn spearman_by_position(a: &[TeamId], b: &[TeamId]) -> Option<f64> {
    let pos_b: HashMap<&TeamId, usize> = b.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = a
        .iter()
        .enumerate()
        .filter_map(|(i, t)| pos_b.get(t).map(|&j| (i as f64, j as f64)))
        .unzip();
    (x.len() >= 2).then(|| spearman(&x, &y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub team: TeamId,
    pub rank_1: f64,
    pub rank_2: f64,
    /// `rank_2 - rank_1`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub shared: usize,
    pub spearman: f64,
    pub kendall_tau: f64,
    pub top_k_overlap: BTreeMap<usize, f64>,
    /// Every shared team, largest `|delta|` first.
    pub discrepancies: Vec<Discrepancy>,
    pub warnings: Vec<String>,
}

impl ComparisonReport {
    /// Discrepancies with `|delta| >= threshold` for teams ranked within
    /// `top` by at least one of the rankings.
    pub fn bubble_disagreements(&self, threshold: f64, top: f64) -> Vec<&Discrepancy> {
        self.discrepancies
            .iter()
            .filter(|d| d.delta.abs() >= threshold && d.rank_1.min(d.rank_2) <= top)
            .collect()
    }
}

/// Default `|delta|` for a bubble disagreement.
pub const BUBBLE_THRESHOLD: f64 = 5.0;
/// Default rank window for bubble disagreements.
pub const BUBBLE_TOP: f64 = 25.0;

fn top_set<'a>(teams: &[&'a TeamId], ranks: &HashMap<&TeamId, f64>, k: usize) -> HashSet<&'a TeamId> {
    let mut sorted = teams.to_vec();
    sorted.sort_by(|a, b| ranks[a].total_cmp(&ranks[b]).then(a.cmp(b)));
    sorted.into_iter().take(k).collect()
}

pub fn compare_rankings(r1: &Ranking, r2: &Ranking) -> Result<ComparisonReport, CompareError> {
    let (m1, m2) = (r1.lookup(), r2.lookup());
    let mut shared: Vec<&TeamId> = r1.entries.iter().map(|e| &e.team).filter(|t| m2.contains_key(t)).collect();
    shared.sort();
    if shared.len() < 2 {
        return Err(CompareError::TooFewShared(shared.len()));
    }
    let mut warnings = Vec::new();
    let (only_1, only_2) = (r1.len() - shared.len(), r2.len() - shared.len());
    if only_1 > 0 || only_2 > 0 {
        warnings.push(format!(
            "rankings cover different teams: {only_1} only in the first, {only_2} only in the second; compared on the {} shared",
            shared.len()
        ));
    }

    let x: Vec<f64> = shared.iter().map(|t| m1[t]).collect();
    let y: Vec<f64> = shared.iter().map(|t| m2[t]).collect();

    let top_k_overlap = TOP_K
        .iter()
        .map(|&k| {
            let k_eff = k.min(shared.len());
            let (a, b) = (top_set(&shared, &m1, k_eff), top_set(&shared, &m2, k_eff));
            (k, a.intersection(&b).count() as f64 / k_eff as f64)
        })
        .collect();

    let mut discrepancies: Vec<Discrepancy> = shared
        .iter()
        .map(|t| Discrepancy {
            team: (*t).clone(),
            rank_1: m1[t],
            rank_2: m2[t],
            delta: m2[t] - m1[t],
        })
        .collect();
    discrepancies.sort_by(|a, b| {
        b.delta
            .abs()
            .total_cmp(&a.delta.abs())
            .then(a.rank_1.min(a.rank_2).total_cmp(&b.rank_1.min(b.rank_2)))
            .then(a.team.cmp(&b.team))
    });

    Ok(ComparisonReport {
        shared: shared.len(),
        spearman: spearman(&x, &y),
        kendall_tau: kendall_tau_b(&x, &y),
        top_k_overlap,
        discrepancies,
        warnings,
    })
}

/// Which ranking to recompute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Pwr(PowerRatingConfig),
    Npi(NpiConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Pwr(_) => "pwr",
            Method::Npi(_) => "npi",
        }
    }
}

/// An ordering produced by one method, plus any caveats.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRanking {
    pub order: Vec<TeamId>,
    pub warnings: Vec<String>,
}

pub fn rank_season(season: &Season, method: &Method) -> Result<MethodRanking, CompareError> {
    match method {
        Method::Pwr(cfg) => {
            let pr = solve_power_ratings_with(season, cfg)?;
            let ranking = pwr_rank(season, &pr)?;
            Ok(MethodRanking {
                order: ranking.teams_in_order(),
                warnings: pr.warnings,
            })
        }
        Method::Npi(cfg) => {
            let result = npi_iterate(season, cfg)?;
            let ranking = npi_rank(&result);
            Ok(MethodRanking {
                order: ranking.teams_in_order(),
                warnings: ranking.warning.into_iter().collect(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Movement {
    pub team: TeamId,
    pub rank_before: usize,
    pub rank_after: usize,
    /// Places gained: `rank_before - rank_after`.
    pub movement: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhatIfReport {
    pub method: &'static str,
    pub added_games: usize,
    /// In post-scenario rank order.
    pub rows: Vec<Movement>,
    pub warnings: Vec<String>,
}

impl WhatIfReport {
    pub fn moved(&self) -> impl Iterator<Item = &Movement> {
        self.rows.iter().filter(|m| m.movement != 0)
    }

    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["team", "rank_before", "rank_after", "movement"])?;
        for m in &self.rows {
            w.write_record([
                m.team.to_string(),
                m.rank_before.to_string(),
                m.rank_after.to_string(),
                m.movement.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Recomputes a ranking with hypothetical results appended and reports how
/// each team moves. Hypothetical games may only name existing teams.
pub fn whatif(season: &Season, hypothetical: &[Game], method: &Method) -> Result<WhatIfReport, CompareError> {
    let scenario = season.extended(hypothetical).map_err(CompareError::InvalidHypothetical)?;
    let before = rank_season(season, method)?;
    let after = rank_season(&scenario, method)?;
    let pos_before: HashMap<&TeamId, usize> = before.order.iter().enumerate().map(|(i, t)| (t, i + 1)).collect();
    let rows = after
        .order
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            pos_before.get(t).map(|&b| Movement {
                team: t.clone(),
                rank_before: b,
                rank_after: i + 1,
                movement: b as i64 - (i + 1) as i64,
            })
        })
        .collect();
    let mut warnings = before.warnings;
    warnings.extend(after.warnings.into_iter().map(|w| format!("with hypothetical games: {w}")));
    Ok(WhatIfReport {
        method: method.name(),
        added_games: hypothetical.len(),
        rows,
        warnings,
    })
}

/// Winner-prediction accuracy of a ranking on a set of games, picking the
/// better-ranked team. Drawn games, equal ranks and unranked teams are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionScore {
    pub correct: usize,
    pub scored: usize,
    pub skipped: usize,
}

impl PredictionScore {
    pub fn accuracy(&self) -> Option<f64> {
        (self.scored > 0).then(|| self.correct as f64 / self.scored as f64)
    }
}

pub fn score_predictions(ranking: &Ranking, games: &[Game]) -> PredictionScore {
    let lookup = ranking.lookup();
    let mut score = PredictionScore {
        correct: 0,
        scored: 0,
        skipped: 0,
    };
    for g in games {
        match (lookup.get(&g.home), lookup.get(&g.away)) {
            (Some(&rh), Some(&ra)) if rh != ra && g.home_score != g.away_score => {
                score.scored += 1;
                if (rh < ra) == (g.home_score > g.away_score) {
                    score.correct += 1;
                }
            }
            _ => score.skipped += 1,
        }
    }
    score
}
