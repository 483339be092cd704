//! Power Ratings: least-squares team strengths in goals.
//!
//! Ratings are chosen so that `PR_home - PR_away + h` best fits each game's
//! goal margin, where `h` is the home-field advantage for non-neutral games and
//! zero otherwise. Rating differences are therefore predicted neutral-field
//! margins.
//!
//! The system only determines ratings up to an additive constant per connected
//! component of the schedule graph. Every component is shifted to mean rating
//! zero after the solve. When a fitted home advantage cannot be separated from
//! the ratings, the minimum-norm least-squares solution is reported instead.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::{Season, TeamId};

/// Relative tolerance on the normal-equation residual of a solve.
pub const SOLVER_TOLERANCE: f64 = 1e-9;

/// Pivots and eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum RatingError {
    #[error("season has no games")]
    EmptySeason,
    #[error("team `{0}` has no games and cannot be rated")]
    TeamWithoutGames(TeamId),
    #[error("unknown team `{0}`")]
    UnknownTeam(TeamId),
    #[error("home-field advantage cannot be fitted: every game is neutral (use a fixed value or none)")]
    HfaUnidentifiable,
    #[error("no non-neutral games to estimate home-field advantage from")]
    NoHomeGames,
    #[error("linear solve failed: normal-equation residual {residual:e} exceeds tolerance")]
    Residual { residual: f64 },
    #[error("fixed home-field advantage must be finite, got {0}")]
    BadHfa(f64),
    #[error("expected {expected} finite ratings, got {got}")]
    BadValues { expected: usize, got: usize },
}

/// How the home-field advantage enters the fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum HfaMode {
    /// Solved jointly with the ratings.
    #[default]
    Fitted,
    /// Held at a given number of goals.
    Fixed(f64),
    /// No home-field term.
    None,
}

/// The home-field term used by a solve and its resulting value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HfaModel {
    pub mode: HfaMode,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerRatingConfig {
    #[serde(default)]
    pub hfa: HfaMode,
    /// Clamp each game's margin to `±cap` goals before fitting. Off by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_cap: Option<u32>,
}

impl PowerRatingConfig {
    pub fn with_hfa(hfa: HfaMode) -> Self {
        PowerRatingConfig { hfa, margin_cap: None }
    }
}

/// Solved ratings for one season.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRatings {
    teams: Vec<TeamId>,
    values: Vec<f64>,
    component_of: Vec<usize>,
    pub hfa: HfaModel,
    pub residual_rms: f64,
    pub components: Vec<Vec<TeamId>>,
    pub warnings: Vec<String>,
}

/// A predicted home-minus-away margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginPrediction {
    pub margin: f64,
    /// The teams sit in different schedule components, so their ratings do
    /// not share a common zero.
    pub low_confidence: bool,
    /// A team was compared with itself.
    pub same_team: bool,
}

impl PowerRatings {
    pub fn teams(&self) -> &[TeamId] {
        &self.teams
    }

    /// Ratings indexed like [`PowerRatings::teams`] (and the season's team list).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The same teams and components with replacement ratings, for ranking
    /// under ratings obtained elsewhere.
    pub fn with_values(&self, values: Vec<f64>) -> Result<PowerRatings, RatingError> {
        if values.len() != self.values.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(RatingError::BadValues {
                expected: self.values.len(),
                got: values.len(),
            });
        }
        Ok(PowerRatings {
            values,
            warnings: Vec::new(),
            ..self.clone()
        })
    }

    pub fn rating(&self, team: &TeamId) -> Option<f64> {
        self.index(team).map(|i| self.values[i])
    }

    pub fn component_of(&self, team: &TeamId) -> Option<usize> {
        self.index(team).map(|i| self.component_of[i])
    }

    pub(crate) fn component_index(&self) -> &[usize] {
        &self.component_of
    }

    fn index(&self, team: &TeamId) -> Option<usize> {
        self.teams.binary_search(team).ok()
    }

    /// Home-minus-away margin implied by the ratings.
    pub fn predicted_margin(&self, home: &TeamId, away: &TeamId, neutral: bool) -> Result<MarginPrediction, RatingError> {
        let h = self.index(home).ok_or_else(|| RatingError::UnknownTeam(home.clone()))?;
        let a = self.index(away).ok_or_else(|| RatingError::UnknownTeam(away.clone()))?;
        let same_team = h == a;
        let margin = if same_team {
            0.0
        } else {
            self.values[h] - self.values[a] + if neutral { 0.0 } else { self.hfa.value }
        };
        Ok(MarginPrediction {
            margin,
            low_confidence: self.component_of[h] != self.component_of[a],
            same_team,
        })
    }

    /// Least-squares objective (sum of squared residuals) of these ratings on `season`.
    pub fn objective(&self, season: &Season, config: &PowerRatingConfig) -> f64 {
        season
            .indexed_games()
            .iter()
            .map(|g| {
                let h = if g.neutral { 0.0 } else { self.hfa.value };
                let r = self.values[g.home] - self.values[g.away] + h - target_margin(g.margin(), config.margin_cap);
                r * r
            })
            .sum()
    }

    pub fn export(&self) -> RatingsExport {
        RatingsExport {
            ratings: self.teams.iter().zip(&self.values).map(|(t, &v)| (t.to_string(), v)).collect(),
            hfa: self.hfa,
            residual_rms: self.residual_rms,
            components: self.components.clone(),
        }
    }
}

/// JSON shape of a ratings export. Keys are sorted by team name.
#[derive(Debug, Clone, Serialize)]
pub struct RatingsExport {
    pub ratings: BTreeMap<String, f64>,
    pub hfa: HfaModel,
    pub residual_rms: f64,
    pub components: Vec<Vec<TeamId>>,
}

fn target_margin(margin: i64, cap: Option<u32>) -> f64 {
    match cap {
        Some(c) => margin.clamp(-i64::from(c), i64::from(c)) as f64,
        None => margin as f64,
    }
}

/// Mean home-minus-away margin over non-neutral games.
pub fn estimate_hfa_mean_margin(season: &Season) -> Result<f64, RatingError> {
    let (sum, count) = season
        .indexed_games()
        .iter()
        .filter(|g| !g.neutral)
        .fold((0i64, 0usize), |(s, c), g| (s + g.margin(), c + 1));
    if count == 0 {
        return Err(RatingError::NoHomeGames);
    }
    Ok(sum as f64 / count as f64)
}

pub fn solve_power_ratings(season: &Season, hfa: HfaMode) -> Result<PowerRatings, RatingError> {
    solve_power_ratings_with(season, &PowerRatingConfig::with_hfa(hfa))
}

/// Solves the normal equations of the rating system.
///
/// Unknowns are one rating per team plus, in [`HfaMode::Fitted`], the
/// home-field advantage as a final column.
pub fn solve_power_ratings_with(season: &Season, config: &PowerRatingConfig) -> Result<PowerRatings, RatingError> {
    if season.is_empty() {
        return Err(RatingError::EmptySeason);
    }
    if let Some((i, _)) = season.games_played().iter().enumerate().find(|(_, &c)| c == 0) {
        return Err(RatingError::TeamWithoutGames(season.teams()[i].clone()));
    }
    let games = season.indexed_games();
    let fitted = matches!(config.hfa, HfaMode::Fitted);
    if fitted && games.iter().all(|g| g.neutral) {
        return Err(RatingError::HfaUnidentifiable);
    }
    let fixed_hfa = match config.hfa {
        HfaMode::Fixed(v) if !v.is_finite() => return Err(RatingError::BadHfa(v)),
        HfaMode::Fixed(v) => v,
        _ => 0.0,
    };

    let n = season.len_teams();
    let k = n + usize::from(fitted);
    let mut normal = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for g in games {
        let (h, a) = (g.home, g.away);
        let mut y = target_margin(g.margin(), config.margin_cap);
        if !g.neutral {
            y -= fixed_hfa;
        }
        normal[(h, h)] += 1.0;
        normal[(a, a)] += 1.0;
        normal[(h, a)] -= 1.0;
        normal[(a, h)] -= 1.0;
        rhs[h] += y;
        rhs[a] -= y;
        if fitted && !g.neutral {
            let x = n;
            normal[(h, x)] += 1.0;
            normal[(x, h)] += 1.0;
            normal[(a, x)] -= 1.0;
            normal[(x, a)] -= 1.0;
            normal[(x, x)] += 1.0;
            rhs[x] += y;
        }
    }

    let comps = season.connectivity();
    let (mut solution, rank) = match anchored_solve(&normal, &rhs, &comps.of) {
        Some(x) => (x, k - comps.len()),
        None => pseudo_inverse_solve(&normal, &rhs),
    };

    let residual = (&normal * &solution - &rhs).amax();
    if !residual.is_finite() || residual > SOLVER_TOLERANCE * rhs.amax().max(1.0) {
        return Err(RatingError::Residual { residual });
    }

    let mut warnings = Vec::new();
    if !comps.is_connected() {
        warnings.push(format!(
            "schedule graph has {} disconnected components; ratings are only comparable within a component",
            comps.len()
        ));
    }
    if rank + comps.len() < k {
        warnings.push("home-field advantage is not separable from team ratings; minimum-norm solution reported".into());
    }

    // re-impose the gauge exactly; shifting a whole component leaves every residual unchanged
    let mut sums = vec![0.0; comps.len()];
    let mut counts = vec![0usize; comps.len()];
    for i in 0..n {
        sums[comps.of[i]] += solution[i];
        counts[comps.of[i]] += 1;
    }
    for i in 0..n {
        solution[i] -= sums[comps.of[i]] / counts[comps.of[i]] as f64;
    }

    let hfa_value = match config.hfa {
        HfaMode::Fitted => solution[n],
        HfaMode::Fixed(v) => v,
        HfaMode::None => 0.0,
    };
    let values: Vec<f64> = solution.iter().take(n).copied().collect();

    let sq: f64 = games
        .iter()
        .map(|g| {
            let h = if g.neutral { 0.0 } else { hfa_value };
            let r = values[g.home] - values[g.away] + h - target_margin(g.margin(), config.margin_cap);
            r * r
        })
        .sum();

    Ok(PowerRatings {
        teams: season.teams().to_vec(),
        values,
        component_of: comps.of,
        hfa: HfaModel {
            mode: config.hfa,
            value: hfa_value,
        },
        residual_rms: (sq / games.len() as f64).sqrt(),
        components: comps.groups,
        warnings,
    })
}

/// Fixes the first team of each component at zero and solves the remaining
/// system by Cholesky. Returns `None` when that system is singular, which
/// happens only when a fitted home advantage is confounded with the ratings.
fn anchored_solve(normal: &DMatrix<f64>, rhs: &DVector<f64>, component_of: &[usize]) -> Option<DVector<f64>> {
    let k = normal.nrows();
    let mut seen = vec![false; k];
    let free: Vec<usize> = (0..k)
        .filter(|&i| match component_of.get(i) {
            Some(&c) if !seen[c] => {
                seen[c] = true;
                false
            }
            _ => true,
        })
        .collect();
    let m = free.len();
    let reduced = DMatrix::from_fn(m, m, |r, c| normal[(free[r], free[c])]);
    let b = DVector::from_fn(m, |r, _| rhs[free[r]]);
    let scale = reduced.diagonal().amax().max(1.0);
    let chol = reduced.cholesky()?;
    if chol.l_dirty().diagonal().iter().any(|&d| d * d <= RANK_TOLERANCE * scale) {
        return None;
    }
    let x = chol.solve(&b);
    let mut solution = DVector::zeros(k);
    for (r, &i) in free.iter().enumerate() {
        solution[i] = x[r];
    }
    Some(solution)
}

/// Minimum-norm solution from the eigendecomposition of the normal matrix,
/// with its numerical rank.
fn pseudo_inverse_solve(normal: &DMatrix<f64>, rhs: &DVector<f64>) -> (DVector<f64>, usize) {
    let k = normal.nrows();
    let eigen = normal.clone().symmetric_eigen();
    let eps = RANK_TOLERANCE * eigen.eigenvalues.amax().max(1.0);
    let rank = eigen.eigenvalues.iter().filter(|&&l| l > eps).count();
    let projected = eigen.eigenvectors.transpose() * rhs;
    let scaled = DVector::from_iterator(
        k,
        projected
            .iter()
            .zip(eigen.eigenvalues.iter())
            .map(|(&p, &l)| if l > eps { p / l } else { 0.0 }),
    );
    (&eigen.eigenvectors * scaled, rank)
}
