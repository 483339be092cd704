//! Reference implementations and random season generators for tests.
//!
//! Everything here works from the raw game list and shares no code with the
//! library beyond the `Season` container.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use laxrank_core::powerwise::RATING_RESOLUTION;
use laxrank_core::schedule::{Game, Season, TeamId, ValidationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn name(i: usize) -> String {
    format!("team{i:02}")
}

/// `n_games` games between random distinct pairs drawn from `n_teams` names.
pub fn random_games(rng: &mut impl Rng, n_teams: usize, n_games: usize, neutral_p: f64, allow_ties: bool) -> Vec<Game> {
    assert!(n_teams >= 2);
    (0..n_games)
        .map(|_| {
            let h = rng.random_range(0..n_teams);
            let mut a = rng.random_range(0..n_teams - 1);
            if a >= h {
                a += 1;
            }
            let hs = rng.random_range(0..16u32);
            let mut as_ = rng.random_range(0..16u32);
            if hs == as_ && !allow_ties {
                as_ += 1;
            }
            let g = Game::new(name(h).as_str(), name(a).as_str(), hs, as_);
            if rng.random_bool(neutral_p) {
                g.neutral()
            } else {
                g
            }
        })
        .collect()
}

pub fn random_season(rng: &mut impl Rng, n_teams: usize, n_games: usize, neutral_p: f64, allow_ties: bool) -> Season {
    Season::new(random_games(rng, n_teams, n_games, neutral_p, allow_ties), ValidationConfig { allow_ties })
        .expect("generated season is valid")
}

fn indexer(season: &Season) -> HashMap<TeamId, usize> {
    season.teams().iter().cloned().enumerate().map(|(i, t)| (t, i)).collect()
}

/// Games as `(home, away, margin, neutral)` over `season.teams()` indices.
pub fn raw_games(season: &Season) -> Vec<(usize, usize, f64, bool)> {
    let idx = indexer(season);
    season
        .games()
        .iter()
        .map(|g| {
            (
                idx[&g.home],
                idx[&g.away],
                g.home_score as f64 - g.away_score as f64,
                g.neutral,
            )
        })
        .collect()
}

/// Reachability by Floyd-Warshall closure of the adjacency matrix.
pub fn reachability(season: &Season) -> Vec<Vec<bool>> {
    let n = season.teams().len();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for (h, a, _, _) in raw_games(season) {
        r[h][a] = true;
        r[a][h] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleHfa {
    None,
    Fixed(f64),
    Fitted,
}

#[derive(Debug, Clone)]
pub struct LsSolution {
    pub ratings: Vec<f64>,
    pub hfa: f64,
    pub objective: f64,
    pub sweeps: usize,
}

pub fn objective(games: &[(usize, usize, f64, bool)], ratings: &[f64], hfa: f64) -> f64 {
    games
        .iter()
        .map(|&(h, a, m, neutral)| {
            let e = ratings[h] - ratings[a] + if neutral { 0.0 } else { hfa } - m;
            e * e
        })
        .sum()
}

/// Shifts each connected component to mean zero.
pub fn gauge(season: &Season, ratings: &mut [f64]) {
    let reach = reachability(season);
    let n = ratings.len();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
        let mean = members.iter().map(|&j| ratings[j]).sum::<f64>() / members.len() as f64;
        for &j in &members {
            ratings[j] -= mean;
            done[j] = true;
        }
    }
}

/// Least squares by coordinate descent: each sweep sets every rating (and the
/// home advantage when fitted) to its exact minimiser given the others.
pub fn least_squares_oracle(season: &Season, hfa: OracleHfa, start: &[f64], start_hfa: f64) -> LsSolution {
    let games = raw_games(season);
    let n = season.teams().len();
    let mut r = start.to_vec();
    let mut h = match hfa {
        OracleHfa::None => 0.0,
        OracleHfa::Fixed(v) => v,
        OracleHfa::Fitted => start_hfa,
    };
    let mut sweeps = 0;
    for sweep in 1..=400_000 {
        sweeps = sweep;
        let mut change: f64 = 0.0;
        for i in 0..n {
            let (mut sum, mut count) = (0.0, 0.0);
            for &(gh, ga, m, neutral) in &games {
                let adv = if neutral { 0.0 } else { h };
                if gh == i {
                    sum += m + r[ga] - adv;
                    count += 1.0;
                } else if ga == i {
                    sum += r[gh] + adv - m;
                    count += 1.0;
                }
            }
            if count > 0.0 {
                let v = sum / count;
                change = change.max((v - r[i]).abs());
                r[i] = v;
            }
        }
        if hfa == OracleHfa::Fitted {
            let home: Vec<_> = games.iter().filter(|g| !g.3).collect();
            if !home.is_empty() {
                let v = home.iter().map(|&&(gh, ga, m, _)| m - r[gh] + r[ga]).sum::<f64>() / home.len() as f64;
                change = change.max((v - h).abs());
                h = v;
            }
        }
        if change < 1e-14 {
            break;
        }
    }
    gauge(season, &mut r);
    let objective = objective(&games, &r, h);
    LsSolution {
        ratings: r,
        hfa: h,
        objective,
        sweeps,
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Wins, losses and ties.
pub type Wlt = (u64, u64, u64);

fn add(r: &mut Wlt, own: u32, other: u32) {
    match own.cmp(&other) {
        std::cmp::Ordering::Greater => r.0 += 1,
        std::cmp::Ordering::Less => r.1 += 1,
        std::cmp::Ordering::Equal => r.2 += 1,
    }
}

/// `a` against `b`: +1 when `a` has the better percentage (ties as half a
/// win), -1 when worse, 0 when equal or neither has games.
pub fn pct_cmp(a: Wlt, b: Wlt) -> i32 {
    let ga = a.0 + a.1 + a.2;
    let gb = b.0 + b.1 + b.2;
    if ga == 0 || gb == 0 {
        return 0;
    }
    let lhs = (2 * a.0 + a.2) * gb;
    let rhs = (2 * b.0 + b.2) * ga;
    (lhs > rhs) as i32 - (lhs < rhs) as i32
}

/// Record of `team` in games against any of `opponents`.
pub fn record_against(season: &Season, team: &TeamId, opponents: &HashSet<TeamId>) -> Wlt {
    let mut r = (0, 0, 0);
    for g in season.games() {
        if &g.home == team && opponents.contains(&g.away) {
            add(&mut r, g.home_score, g.away_score);
        } else if &g.away == team && opponents.contains(&g.home) {
            add(&mut r, g.away_score, g.home_score);
        }
    }
    r
}

pub fn opponents(season: &Season, team: &TeamId) -> HashSet<TeamId> {
    let mut out = HashSet::new();
    for g in season.games() {
        if &g.home == team {
            out.insert(g.away.clone());
        } else if &g.away == team {
            out.insert(g.home.clone());
        }
    }
    out
}

/// Share of the point between `a` and `b` won by `a`.
pub fn pair_share(season: &Season, ratings: &HashMap<TeamId, f64>, a: &TeamId, b: &TeamId) -> f64 {
    let only_b: HashSet<TeamId> = [b.clone()].into();
    let only_a: HashSet<TeamId> = [a.clone()].into();
    let h2h = pct_cmp(record_against(season, a, &only_b), record_against(season, b, &only_a));
    if h2h != 0 {
        return if h2h > 0 { 1.0 } else { 0.0 };
    }
    let mut common: HashSet<TeamId> = opponents(season, a).intersection(&opponents(season, b)).cloned().collect();
    common.remove(a);
    common.remove(b);
    let co = pct_cmp(record_against(season, a, &common), record_against(season, b, &common));
    if co != 0 {
        return if co > 0 { 1.0 } else { 0.0 };
    }
    let (ra, rb) = (
        (ratings[a] / RATING_RESOLUTION).round(),
        (ratings[b] / RATING_RESOLUTION).round(),
    );
    if ra > rb {
        1.0
    } else if ra < rb {
        0.0
    } else {
        0.5
    }
}

/// Points per team from every pairwise matchup, computed pair by pair.
pub fn pwr_points_oracle(season: &Season, ratings: &HashMap<TeamId, f64>) -> BTreeMap<TeamId, f64> {
    let teams = season.teams();
    let mut points: BTreeMap<TeamId, f64> = teams.iter().map(|t| (t.clone(), 0.0)).collect();
    for (i, a) in teams.iter().enumerate() {
        for b in &teams[i + 1..] {
            let s = pair_share(season, ratings, a, b);
            *points.get_mut(a).unwrap() += s;
            *points.get_mut(b).unwrap() += 1.0 - s;
        }
    }
    points
}

/// Winning percentage per team (ties as half a win), in `season.teams()` order.
pub fn win_pct(season: &Season) -> Vec<f64> {
    let idx = indexer(season);
    let mut w = vec![0.0; season.teams().len()];
    let mut g = vec![0.0; season.teams().len()];
    for game in season.games() {
        let (h, a) = (idx[&game.home], idx[&game.away]);
        g[h] += 1.0;
        g[a] += 1.0;
        match game.home_score.cmp(&game.away_score) {
            std::cmp::Ordering::Greater => w[h] += 1.0,
            std::cmp::Ordering::Less => w[a] += 1.0,
            std::cmp::Ordering::Equal => {
                w[h] += 0.5;
                w[a] += 0.5;
            }
        }
    }
    w.iter().zip(&g).map(|(w, g)| w / g).collect()
}

/// One NPI update with per-game opponent averaging.
pub fn npi_step(season: &Season, values: &[f64], dial: f64) -> Vec<f64> {
    let idx = indexer(season);
    let wp = win_pct(season);
    let n = values.len();
    let (mut sum, mut count) = (vec![0.0; n], vec![0.0; n]);
    for game in season.games() {
        let (h, a) = (idx[&game.home], idx[&game.away]);
        sum[h] += values[a];
        sum[a] += values[h];
        count[h] += 1.0;
        count[a] += 1.0;
    }
    (0..n).map(|i| dial * wp[i] + (1.0 - dial) * sum[i] / count[i]).collect()
}

/// Season from `(home, away offset, home score, away score, neutral)` tuples,
/// the away index being `(home + 1 + offset) % n_teams`.
pub fn season_from_tuples(n_teams: usize, rows: &[(usize, usize, u32, u32, bool)], allow_ties: bool) -> Season {
    let games = rows
        .iter()
        .map(|&(h, off, hs, mut as_, neutral)| {
            let h = h % n_teams;
            let a = (h + 1 + off % (n_teams - 1)) % n_teams;
            if hs == as_ && !allow_ties {
                as_ += 1;
            }
            let g = Game::new(name(h).as_str(), name(a).as_str(), hs, as_);
            if neutral {
                g.neutral()
            } else {
                g
            }
        })
        .collect();
    Season::new(games, ValidationConfig { allow_ties }).expect("generated season is valid")
}
