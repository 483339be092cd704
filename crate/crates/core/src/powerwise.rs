//! Powerwise (PWR) pairwise ranking.
//!
//! Every pair of teams plays one hypothetical matchup worth one point. The
//! point goes to the team with the better
//!
//! 1. head-to-head record against the other team, else
//! 2. record against common opponents, else
//! 3. Power Rating.
//!
//! Records are compared by win percentage (ties as half wins). Common-opponent
//! records aggregate every game either team played against any opponent both
//! have faced. An exact Power Rating tie splits the point.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::power_rating::PowerRatings;
use crate::schedule::{Season, TeamId, TeamRecord};

/// Power ratings are compared after rounding to this many goals, so solver
/// noise cannot break an exact tie.
pub const RATING_RESOLUTION: f64 = 1e-9;

/// Integer key used wherever two power ratings are compared.
pub fn rating_key(value: f64) -> i64 {
    (value / RATING_RESOLUTION).round() as i64
}

#[derive(Debug, Error, PartialEq)]
pub enum PwrError {
    #[error("unknown team `{0}`")]
    UnknownTeam(TeamId),
    #[error("a team cannot be paired with itself (`{0}`)")]
    SameTeam(TeamId),
    #[error("power ratings were not solved for this season's team set")]
    RatingsMismatch,
}

/// Result of comparing two teams' records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    ABetter,
    BBetter,
    Tie,
}

impl From<Ordering> for Comparison {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Greater => Comparison::ABetter,
            Ordering::Less => Comparison::BBetter,
            Ordering::Equal => Comparison::Tie,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    HeadToHead,
    CommonOpponent,
    PowerRating,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::HeadToHead => "head_to_head",
            Tier::CommonOpponent => "common_opponent",
            Tier::PowerRating => "power_rating",
        })
    }
}

/// How one pairwise matchup was decided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TierOutcome {
    pub a: TeamId,
    pub b: TeamId,
    /// `None` only for an exact Power Rating tie.
    pub winner: Option<TeamId>,
    pub tier: Tier,
    /// Records of `a` and `b` in games against each other.
    pub head_to_head: [TeamRecord; 2],
    pub common_opponents: usize,
    /// Aggregate records of `a` and `b` against the common opponents.
    pub common_record: [TeamRecord; 2],
    /// `PR_a - PR_b`, set when the Power Rating tier decided.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rating_gap: Option<f64>,
    /// Decided by ratings from different schedule components.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub low_confidence: bool,
}

/// Per-pair records, `cell(a, b)` being `a`'s record in games against `b`.
struct Meetings {
    n: usize,
    cells: Vec<TeamRecord>,
}

impl Meetings {
    fn new(season: &Season) -> Self {
        let n = season.len_teams();
        let mut cells = vec![TeamRecord::default(); n * n];
        for g in season.indexed_games() {
            cells[g.home * n + g.away].add(g.outcome_for(g.home).unwrap());
            cells[g.away * n + g.home].add(g.outcome_for(g.away).unwrap());
        }
        Meetings { n, cells }
    }

    fn cell(&self, a: usize, b: usize) -> TeamRecord {
        self.cells[a * self.n + b]
    }

    fn head_to_head(&self, a: usize, b: usize) -> (Comparison, [TeamRecord; 2]) {
        let (ra, rb) = (self.cell(a, b), self.cell(b, a));
        (ra.cmp_pct(&rb).into(), [ra, rb])
    }

    fn common(&self, a: usize, b: usize) -> (Comparison, usize, [TeamRecord; 2]) {
        let mut count = 0;
        let (mut ra, mut rb) = (TeamRecord::default(), TeamRecord::default());
        for x in 0..self.n {
            if x == a || x == b {
                continue;
            }
            let (ca, cb) = (self.cell(a, x), self.cell(b, x));
            if ca.games() > 0 && cb.games() > 0 {
                count += 1;
                ra.wins += ca.wins;
                ra.losses += ca.losses;
                ra.ties += ca.ties;
                rb.wins += cb.wins;
                rb.losses += cb.losses;
                rb.ties += cb.ties;
            }
        }
        (ra.cmp_pct(&rb).into(), count, [ra, rb])
    }

    fn decide(&self, a: usize, b: usize, teams: &[TeamId], pr: &PowerRatings) -> TierOutcome {
        let (h2h, head_to_head) = self.head_to_head(a, b);
        let (co, common_opponents, common_record) = self.common(a, b);
        let pick = |c: Comparison| match c {
            Comparison::ABetter => Some(teams[a].clone()),
            Comparison::BBetter => Some(teams[b].clone()),
            Comparison::Tie => None,
        };
        let mut outcome = TierOutcome {
            a: teams[a].clone(),
            b: teams[b].clone(),
            winner: None,
            tier: Tier::HeadToHead,
            head_to_head,
            common_opponents,
            common_record,
            rating_gap: None,
            low_confidence: false,
        };
        if h2h != Comparison::Tie {
            outcome.winner = pick(h2h);
        } else if co != Comparison::Tie {
            outcome.tier = Tier::CommonOpponent;
            outcome.winner = pick(co);
        } else {
            let values = pr.values();
            let gap = values[a] - values[b];
            outcome.tier = Tier::PowerRating;
            outcome.rating_gap = Some(gap);
            outcome.winner = pick(rating_key(values[a]).cmp(&rating_key(values[b])).into());
            outcome.low_confidence = pr.component_index()[a] != pr.component_index()[b];
        }
        outcome
    }
}

fn pair_indices(season: &Season, a: &TeamId, b: &TeamId) -> Result<(usize, usize), PwrError> {
    let ia = season.team_index(a).ok_or_else(|| PwrError::UnknownTeam(a.clone()))?;
    let ib = season.team_index(b).ok_or_else(|| PwrError::UnknownTeam(b.clone()))?;
    if ia == ib {
        return Err(PwrError::SameTeam(a.clone()));
    }
    Ok((ia, ib))
}

fn check_ratings(season: &Season, pr: &PowerRatings) -> Result<(), PwrError> {
    if pr.teams() != season.teams() {
        return Err(PwrError::RatingsMismatch);
    }
    Ok(())
}

/// Compares win percentages in games between `a` and `b`. No meetings is a tie.
pub fn head_to_head(season: &Season, a: &TeamId, b: &TeamId) -> Result<Comparison, PwrError> {
    let (ia, ib) = pair_indices(season, a, b)?;
    Ok(Meetings::new(season).head_to_head(ia, ib).0)
}

/// Compares aggregate win percentage against opponents both teams played.
/// No common opponents is a tie.
pub fn common_opponent_record(season: &Season, a: &TeamId, b: &TeamId) -> Result<Comparison, PwrError> {
    let (ia, ib) = pair_indices(season, a, b)?;
    Ok(Meetings::new(season).common(ia, ib).0)
}

/// Decides one matchup, stopping at the first decisive tier.
pub fn pairwise_point(season: &Season, pr: &PowerRatings, a: &TeamId, b: &TeamId) -> Result<TierOutcome, PwrError> {
    let (ia, ib) = pair_indices(season, a, b)?;
    check_ratings(season, pr)?;
    Ok(Meetings::new(season).decide(ia, ib, season.teams(), pr))
}

/// One row of the final ordering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PwrEntry {
    pub rank: usize,
    pub team: TeamId,
    pub points: f64,
    pub power_rating: f64,
    pub record: TeamRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PwrRanking {
    pub order: Vec<PwrEntry>,
    /// One entry per unordered pair, `a` before `b` in team order.
    pub matchups: Vec<TierOutcome>,
}

impl PwrRanking {
    pub fn points(&self, team: &TeamId) -> Option<f64> {
        self.order.iter().find(|e| &e.team == team).map(|e| e.points)
    }

    pub fn rank(&self, team: &TeamId) -> Option<usize> {
        self.order.iter().find(|e| &e.team == team).map(|e| e.rank)
    }

    pub fn matchup(&self, a: &TeamId, b: &TeamId) -> Option<&TierOutcome> {
        self.matchups
            .iter()
            .find(|m| (&m.a == a && &m.b == b) || (&m.a == b && &m.b == a))
    }

    pub fn teams_in_order(&self) -> Vec<TeamId> {
        self.order.iter().map(|e| e.team.clone()).collect()
    }
}

/// Runs every pairwise matchup and orders teams by points, then Power Rating,
/// then name.
pub fn pwr_rank(season: &Season, pr: &PowerRatings) -> Result<PwrRanking, PwrError> {
    check_ratings(season, pr)?;
    let n = season.len_teams();
    let teams = season.teams();
    let meetings = Meetings::new(season);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let matchups: Vec<TierOutcome> = pairs
        .par_iter()
        .map(|&(a, b)| meetings.decide(a, b, teams, pr))
        .collect();

    // half points, so split matchups stay exact
    let mut halves = vec![0u64; n];
    for (m, &(a, b)) in matchups.iter().zip(&pairs) {
        match &m.winner {
            Some(w) if w == &teams[a] => halves[a] += 2,
            Some(_) => halves[b] += 2,
            None => {
                halves[a] += 1;
                halves[b] += 1;
            }
        }
    }

    let records = season.records();
    let ratings = pr.values();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| {
        halves[y]
            .cmp(&halves[x])
            .then(rating_key(ratings[y]).cmp(&rating_key(ratings[x])))
            .then(teams[x].cmp(&teams[y]))
    });
    let order = idx
        .into_iter()
        .enumerate()
        .map(|(pos, i)| PwrEntry {
            rank: pos + 1,
            team: teams[i].clone(),
            points: halves[i] as f64 / 2.0,
            power_rating: ratings[i],
            record: records[i],
        })
        .collect();
    Ok(PwrRanking { order, matchups })
}

/// Fraction of matchups decided at each tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TierShare {
    pub head_to_head: f64,
    pub common_opponent: f64,
    pub power_rating: f64,
    /// Head-to-head plus common-opponent share.
    pub on_field: f64,
}

pub fn tier_share(ranking: &PwrRanking) -> TierShare {
    let total = ranking.matchups.len();
    if total == 0 {
        return TierShare {
            head_to_head: 0.0,
            common_opponent: 0.0,
            power_rating: 0.0,
            on_field: 0.0,
        };
    }
    let count = |tier: Tier| ranking.matchups.iter().filter(|m| m.tier == tier).count() as f64 / total as f64;
    let (h, c, p) = (count(Tier::HeadToHead), count(Tier::CommonOpponent), count(Tier::PowerRating));
    TierShare {
        head_to_head: h,
        common_opponent: c,
        power_rating: p,
        on_field: h + c,
    }
}

/// Writes the `rank,team,points,power_rating,record` summary.
pub fn write_summary_csv<W: std::io::Write>(ranking: &PwrRanking, sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["rank", "team", "points", "power_rating", "record"])?;
    for e in &ranking.order {
        w.write_record([
            e.rank.to_string(),
            e.team.to_string(),
            e.points.to_string(),
            format!("{:.6}", e.power_rating),
            e.record.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power_rating::{solve_power_ratings, HfaMode};
    use crate::schedule::{Game, ValidationConfig};

    fn season(games: Vec<Game>) -> Season {
        Season::new(games, ValidationConfig::default()).unwrap()
    }

    fn t(s: &str) -> TeamId {
        TeamId::new(s)
    }

    #[test]
    fn head_to_head_cases() {
        let s = season(vec![
            Game::new("A", "B", 5, 4),
            Game::new("C", "D", 5, 4),
            Game::new("C", "E", 5, 4),
            Game::new("E", "C", 5, 4),
        ]);
        assert_eq!(head_to_head(&s, &t("A"), &t("B")).unwrap(), Comparison::ABetter);
        assert_eq!(head_to_head(&s, &t("B"), &t("A")).unwrap(), Comparison::BBetter);
        assert_eq!(head_to_head(&s, &t("A"), &t("C")).unwrap(), Comparison::Tie);
        assert_eq!(head_to_head(&s, &t("C"), &t("E")).unwrap(), Comparison::Tie);
        assert_eq!(head_to_head(&s, &t("A"), &t("A")), Err(PwrError::SameTeam(t("A"))));
        assert_eq!(head_to_head(&s, &t("A"), &t("Q")), Err(PwrError::UnknownTeam(t("Q"))));
    }

    #[test]
    fn common_opponent_cases() {
        let s = season(vec![Game::new("A", "X", 5, 4), Game::new("X", "B", 5, 4)]);
        assert_eq!(common_opponent_record(&s, &t("A"), &t("B")).unwrap(), Comparison::ABetter);

        let s = season(vec![Game::new("A", "X", 5, 4), Game::new("B", "X", 5, 4)]);
        assert_eq!(common_opponent_record(&s, &t("A"), &t("B")).unwrap(), Comparison::Tie);

        // percentages, not counts: A 2-1 vs common set, B 1-0
        let s = season(vec![
            Game::new("A", "X", 5, 4),
            Game::new("A", "Y", 5, 4),
            Game::new("A", "X", 1, 4),
            Game::new("B", "X", 5, 4),
            Game::new("B", "Y", 5, 4),
        ]);
        assert_eq!(common_opponent_record(&s, &t("A"), &t("B")).unwrap(), Comparison::BBetter);
    }

    #[test]
    fn head_to_head_beats_ratings() {
        // A upsets B narrowly, B crushes C, A barely beats C
        let s = season(vec![
            Game::new("A", "B", 5, 4).neutral(),
            Game::new("B", "D", 15, 1).neutral(),
            Game::new("A", "D", 3, 2).neutral(),
            Game::new("B", "E", 12, 2).neutral(),
        ]);
        let pr = solve_power_ratings(&s, HfaMode::None).unwrap();
        assert!(pr.rating(&t("A")).unwrap() < pr.rating(&t("B")).unwrap());
        let out = pairwise_point(&s, &pr, &t("A"), &t("B")).unwrap();
        assert_eq!(out.tier, Tier::HeadToHead);
        assert_eq!(out.winner, Some(t("A")));
    }

    #[test]
    fn ratings_decide_without_shared_games() {
        let s = season(vec![Game::new("A", "X", 9, 1).neutral(), Game::new("B", "Y", 5, 4).neutral()]);
        let pr = solve_power_ratings(&s, HfaMode::None).unwrap();
        let out = pairwise_point(&s, &pr, &t("A"), &t("B")).unwrap();
        assert_eq!(out.tier, Tier::PowerRating);
        assert_eq!(out.winner, Some(t("A")));
        assert!(out.low_confidence);
    }

    #[test]
    fn common_tie_falls_to_ratings() {
        // A and B both 1-0 vs X; A won by more, so PR_A > PR_B
        let s = season(vec![
            Game::new("A", "X", 10, 2).neutral(),
            Game::new("B", "X", 6, 5).neutral(),
            Game::new("Y", "X", 7, 6).neutral(),
        ]);
        let pr = solve_power_ratings(&s, HfaMode::None).unwrap();
        let out = pairwise_point(&s, &pr, &t("A"), &t("B")).unwrap();
        assert_eq!(out.tier, Tier::PowerRating);
        assert_eq!(out.common_opponents, 1);
        assert_eq!(out.winner, Some(t("A")));
        assert!(!out.low_confidence);
    }

    #[test]
    fn two_team_rank() {
        let s = season(vec![Game::new("A", "B", 11, 9)]);
        let pr = solve_power_ratings(&s, HfaMode::None).unwrap();
        let r = pwr_rank(&s, &pr).unwrap();
        assert_eq!(r.order[0].team, t("A"));
        assert_eq!(r.points(&t("A")), Some(1.0));
        assert_eq!(r.points(&t("B")), Some(0.0));
    }

    #[test]
    fn exact_rating_tie_splits_point() {
        let s = season(vec![Game::new("A", "X", 6, 4).neutral(), Game::new("B", "Y", 6, 4).neutral()]);
        let pr = solve_power_ratings(&s, HfaMode::None).unwrap();
        let r = pwr_rank(&s, &pr).unwrap();
        let m = r.matchup(&t("A"), &t("B")).unwrap();
        assert_eq!(m.winner, None);
        assert_eq!(r.points(&t("A")), Some(2.5));
        let total: f64 = r.order.iter().map(|e| e.points).sum();
        assert_eq!(total, 6.0);
        // equal points and ratings fall back to name order
        assert_eq!(r.order[0].team, t("A"));
        assert_eq!(r.order[1].team, t("B"));
    }

    #[test]
    fn double_round_robin_is_all_head_to_head() {
        let teams = ["A", "B", "C", "D"];
        let mut games = Vec::new();
        for (i, h) in teams.iter().enumerate() {
            for (j, a) in teams.iter().enumerate() {
                if i != j {
                    let (hs, as_) = if i < j { (5, 3) } else { (2, 4) };
                    games.push(Game::new(*h, *a, hs, as_));
                }
            }
        }
        let s = season(games);
        let pr = solve_power_ratings(&s, HfaMode::Fitted).unwrap();
        let r = pwr_rank(&s, &pr).unwrap();
        let share = tier_share(&r);
        assert_eq!(share.head_to_head, 1.0);
        assert_eq!(share.on_field, 1.0);
        assert_eq!(r.teams_in_order(), teams.map(TeamId::new).to_vec());
    }

    #[test]
    fn isolated_pairs_are_all_ratings() {
        // no two non-opponents share an opponent
        let s = season(vec![Game::new("A", "B", 5, 3).neutral(), Game::new("C", "D", 9, 3).neutral()]);
        let pr = solve_power_ratings(&s, HfaMode::None).unwrap();
        let r = pwr_rank(&s, &pr).unwrap();
        let share = tier_share(&r);
        assert!((share.head_to_head - 2.0 / 6.0).abs() < 1e-12);
        assert!((share.power_rating - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn ratings_must_match_season() {
        let s1 = season(vec![Game::new("A", "B", 5, 3)]);
        let s2 = season(vec![Game::new("A", "C", 5, 3)]);
        let pr = solve_power_ratings(&s2, HfaMode::None).unwrap();
        assert_eq!(pwr_rank(&s1, &pr), Err(PwrError::RatingsMismatch));
    }

    #[test]
    fn summary_csv() {
        let s = season(vec![Game::new("A", "B", 11, 9)]);
        let pr = solve_power_ratings(&s, HfaMode::None).unwrap();
        let r = pwr_rank(&s, &pr).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("rank,team,points,power_rating,record"));
        assert_eq!(text.lines().nth(1), Some("1,A,1,1.000000,1-0"));
    }
}
