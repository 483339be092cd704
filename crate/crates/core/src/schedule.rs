//! Season data model.
//!
//! A [`Season`] is the single input to every rater in this crate: a validated,
//! immutable list of [`Game`]s plus the set of teams they reference. Game files
//! are read from CSV or JSON with the columns
//! `date,home,away,home_score,away_score,neutral`.
//!
//! Team names are canonicalized by trimming surrounding whitespace and
//! comparing case-insensitively. No fuzzy matching is attempted.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Column order of the canonical game file.
pub const COLUMNS: [&str; 6] = ["date", "home", "away", "home_score", "away_score", "neutral"];

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("row {row}: {}", reasons.join("; "))]
    Invalid { row: usize, reasons: Vec<String> },
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("unknown team `{0}`")]
    UnknownTeam(TeamId),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ScheduleError {
    /// True when the input could not be read as the declared format, as
    /// opposed to being readable but violating a season invariant.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            ScheduleError::Malformed { .. }
                | ScheduleError::MissingColumn(_)
                | ScheduleError::Io(_)
                | ScheduleError::Csv(_)
                | ScheduleError::Json(_)
        )
    }
}

/// Team identifier.
///
/// Equality, hashing and ordering use the canonical key (trimmed, lowercased)
/// while the trimmed original spelling is kept for display.
#[derive(Clone)]
pub struct TeamId {
    name: String,
    key: String,
}

impl TeamId {
    pub fn new(name: impl AsRef<str>) -> Self {
        let name = name.as_ref().trim().to_string();
        let key = name.to_lowercase();
        TeamId { name, key }
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }

    pub fn key(&self) -> &str {
        &self.key
    }
}

impl PartialEq for TeamId {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for TeamId {}

impl Hash for TeamId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl PartialOrd for TeamId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TeamId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

impl fmt::Debug for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TeamId({:?})", self.name)
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.name)
    }
}

impl From<&str> for TeamId {
    fn from(s: &str) -> Self {
        TeamId::new(s)
    }
}

impl Serialize for TeamId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name)
    }
}

impl<'de> Deserialize<'de> for TeamId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(TeamId::new(s))
    }
}

/// One played contest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Game {
    pub date: Option<NaiveDate>,
    pub home: TeamId,
    pub away: TeamId,
    pub home_score: u32,
    pub away_score: u32,
    pub neutral: bool,
}

impl Game {
    pub fn new(home: impl Into<TeamId>, away: impl Into<TeamId>, home_score: u32, away_score: u32) -> Self {
        Game {
            date: None,
            home: home.into(),
            away: away.into(),
            home_score,
            away_score,
            neutral: false,
        }
    }

    pub fn neutral(mut self) -> Self {
        self.neutral = true;
        self
    }

    pub fn on(mut self, date: NaiveDate) -> Self {
        self.date = Some(date);
        self
    }

    /// Home score minus away score.
    pub fn margin(&self) -> i64 {
        i64::from(self.home_score) - i64::from(self.away_score)
    }

    fn violations(&self, config: &ValidationConfig) -> Vec<String> {
        let mut reasons = Vec::new();
        if self.home.key().is_empty() {
            reasons.push("home team is empty".to_string());
        }
        if self.away.key().is_empty() {
            reasons.push("away team is empty".to_string());
        }
        if self.home == self.away {
            reasons.push(format!("home and away are the same team (`{}`)", self.home));
        }
        if self.home_score == self.away_score && !config.allow_ties {
            reasons.push(format!(
                "tied score {}-{} but ties are not allowed",
                self.home_score, self.away_score
            ));
        }
        reasons
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationConfig {
    /// Accept drawn games. A tie counts as half a win and half a loss.
    #[serde(default)]
    pub allow_ties: bool,
}

/// A game with both teams resolved to indices into [`Season::teams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexedGame {
    pub home: usize,
    pub away: usize,
    pub home_score: u32,
    pub away_score: u32,
    pub neutral: bool,
}

impl IndexedGame {
    pub fn margin(&self) -> i64 {
        i64::from(self.home_score) - i64::from(self.away_score)
    }

    /// The other participant, if `team` played in this game.
    pub fn opponent_of(&self, team: usize) -> Option<usize> {
        if self.home == team {
            Some(self.away)
        } else if self.away == team {
            Some(self.home)
        } else {
            None
        }
    }

    /// Result of this game from `team`'s point of view.
    pub fn outcome_for(&self, team: usize) -> Option<Outcome> {
        let signed = if self.home == team {
            self.margin()
        } else if self.away == team {
            -self.margin()
        } else {
            return None;
        };
        Some(match signed.signum() {
            1 => Outcome::Win,
            -1 => Outcome::Loss,
            _ => Outcome::Tie,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Win,
    Loss,
    Tie,
}

/// Win/loss/tie tally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamRecord {
    pub wins: u32,
    pub losses: u32,
    pub ties: u32,
}

impl TeamRecord {
    pub fn games(&self) -> u32 {
        self.wins + self.losses + self.ties
    }

    pub fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Win => self.wins += 1,
            Outcome::Loss => self.losses += 1,
            Outcome::Tie => self.ties += 1,
        }
    }

    /// Win percentage with ties as half a win; `None` with no games.
    pub fn win_pct(&self) -> Option<f64> {
        let games = self.games();
        (games > 0).then(|| (2.0 * f64::from(self.wins) + f64::from(self.ties)) / (2.0 * f64::from(games)))
    }

    /// Compares win percentages exactly (integer cross-multiplication).
    /// A record with no games compares equal to everything.
    pub fn cmp_pct(&self, other: &TeamRecord) -> std::cmp::Ordering {
        if self.games() == 0 || other.games() == 0 {
            return std::cmp::Ordering::Equal;
        }
        let lhs = u64::from(2 * self.wins + self.ties) * u64::from(other.games());
        let rhs = u64::from(2 * other.wins + other.ties) * u64::from(self.games());
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for TeamRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ties > 0 {
            write!(f, "{}-{}-{}", self.wins, self.losses, self.ties)
        } else {
            write!(f, "{}-{}", self.wins, self.losses)
        }
    }
}

/// Partition of teams into connected components of the schedule graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Components {
    /// Component number per team index.
    #[serde(skip)]
    pub of: Vec<usize>,
    /// Members of each component, sorted; components ordered by their first member.
    pub groups: Vec<Vec<TeamId>>,
}

impl Components {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn is_connected(&self) -> bool {
        self.groups.len() <= 1
    }
}

/// Validated, immutable collection of teams and games.
#[derive(Debug, Clone)]
pub struct Season {
    teams: Vec<TeamId>,
    index: HashMap<TeamId, usize>,
    games: Vec<Game>,
    indexed: Vec<IndexedGame>,
    config: ValidationConfig,
}

impl PartialEq for Season {
    fn eq(&self, other: &Self) -> bool {
        self.teams == other.teams && self.games == other.games && self.config == other.config
    }
}

impl Season {
    /// Builds a season whose team set is exactly the teams named by `games`.
    pub fn new(games: Vec<Game>, config: ValidationConfig) -> Result<Self, ScheduleError> {
        let teams: Vec<TeamId> = games
            .iter()
            .flat_map(|g| [g.home.clone(), g.away.clone()])
            .collect();
        Self::build(teams, games, config, true)
    }

    /// Builds a season over an explicit team set. Teams without games are
    /// allowed; games naming unregistered teams are rejected.
    pub fn with_teams(
        teams: impl IntoIterator<Item = TeamId>,
        games: Vec<Game>,
        config: ValidationConfig,
    ) -> Result<Self, ScheduleError> {
        Self::build(teams.into_iter().collect(), games, config, false)
    }

    fn build(
        mut teams: Vec<TeamId>,
        games: Vec<Game>,
        config: ValidationConfig,
        implicit_teams: bool,
    ) -> Result<Self, ScheduleError> {
        // first spelling wins when the same team appears with different case
        let mut seen = HashSet::new();
        teams.retain(|t| seen.insert(t.clone()));
        teams.sort();
        let index: HashMap<TeamId, usize> = teams.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();

        let mut indexed = Vec::with_capacity(games.len());
        for (i, game) in games.iter().enumerate() {
            let reasons = game.violations(&config);
            if !reasons.is_empty() {
                return Err(ScheduleError::Invalid { row: i + 1, reasons });
            }
            let lookup = |t: &TeamId| index.get(t).copied().ok_or_else(|| ScheduleError::UnknownTeam(t.clone()));
            let (home, away) = match (lookup(&game.home), lookup(&game.away)) {
                (Ok(h), Ok(a)) => (h, a),
                (Err(e), _) | (_, Err(e)) => {
                    debug_assert!(!implicit_teams);
                    return Err(e);
                }
            };
            indexed.push(IndexedGame {
                home,
                away,
                home_score: game.home_score,
                away_score: game.away_score,
                neutral: game.neutral,
            });
        }

        Ok(Season {
            teams,
            index,
            games,
            indexed,
            config,
        })
    }

    /// Returns a new season with `extra` games appended. The team set is
    /// unchanged, so games naming unknown teams are rejected.
    pub fn extended(&self, extra: &[Game]) -> Result<Season, ScheduleError> {
        let mut games = self.games.clone();
        games.extend_from_slice(extra);
        Self::build(self.teams.clone(), games, self.config, false)
    }

    pub fn teams(&self) -> &[TeamId] {
        &self.teams
    }

    pub fn games(&self) -> &[Game] {
        &self.games
    }

    pub fn indexed_games(&self) -> &[IndexedGame] {
        &self.indexed
    }

    pub fn config(&self) -> ValidationConfig {
        self.config
    }

    pub fn team_index(&self, team: &TeamId) -> Option<usize> {
        self.index.get(team).copied()
    }

    pub fn contains(&self, team: &TeamId) -> bool {
        self.index.contains_key(team)
    }

    pub fn len_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub(crate) fn require(&self, team: &TeamId) -> Result<usize, ScheduleError> {
        self.team_index(team).ok_or_else(|| ScheduleError::UnknownTeam(team.clone()))
    }

    /// Win/loss/tie record of one team over all its games.
    pub fn record(&self, team: &TeamId) -> Result<TeamRecord, ScheduleError> {
        let idx = self.require(team)?;
        let mut rec = TeamRecord::default();
        for outcome in self.indexed.iter().filter_map(|g| g.outcome_for(idx)) {
            rec.add(outcome);
        }
        Ok(rec)
    }

    /// Records for every team, indexed like [`Season::teams`].
    pub fn records(&self) -> Vec<TeamRecord> {
        let mut recs = vec![TeamRecord::default(); self.teams.len()];
        for g in &self.indexed {
            recs[g.home].add(g.outcome_for(g.home).unwrap());
            recs[g.away].add(g.outcome_for(g.away).unwrap());
        }
        recs
    }

    /// Number of games played per team index.
    pub fn games_played(&self) -> Vec<usize> {
        let mut counts = vec![0; self.teams.len()];
        for g in &self.indexed {
            counts[g.home] += 1;
            counts[g.away] += 1;
        }
        counts
    }

    /// Connected components of the schedule graph (teams linked by games).
    pub fn connectivity(&self) -> Components {
        let n = self.teams.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for g in &self.indexed {
            let (a, b) = (find(&mut parent, g.home), find(&mut parent, g.away));
            if a != b {
                // keep the smaller index as root so numbering follows team order
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
        let mut root_to_comp = HashMap::new();
        let mut of = vec![0; n];
        let mut groups: Vec<Vec<TeamId>> = Vec::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            let comp = *root_to_comp.entry(root).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            of[i] = comp;
            groups[comp].push(self.teams[i].clone());
        }
        Components { of, groups }
    }
}

/// Input format of a game file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guess from the file extension; anything other than `.json` is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Result of reading a game file.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub season: Season,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct JsonRow {
    #[serde(default)]
    date: Option<String>,
    home: String,
    away: String,
    home_score: i64,
    away_score: i64,
    neutral: bool,
}

fn parse_date(raw: &str, row: usize) -> Result<Option<NaiveDate>, ScheduleError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map(Some)
        .map_err(|e| ScheduleError::Malformed {
            row,
            reason: format!("bad date `{raw}`: {e}"),
        })
}

fn parse_score(raw: &str, column: &str, row: usize) -> Result<i64, ScheduleError> {
    raw.trim().parse::<i64>().map_err(|_| ScheduleError::Malformed {
        row,
        reason: format!("{column} `{}` is not an integer", raw.trim()),
    })
}

fn parse_bool(raw: &str, row: usize) -> Result<bool, ScheduleError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(ScheduleError::Malformed {
            row,
            reason: format!("neutral `{other}` is not true/false"),
        }),
    }
}

/// Checks one row against the game invariants and converts it.
fn build_game(
    row: usize,
    date: Option<NaiveDate>,
    home: &str,
    away: &str,
    home_score: i64,
    away_score: i64,
    neutral: bool,
    config: &ValidationConfig,
) -> Result<Game, ScheduleError> {
    let mut reasons = Vec::new();
    let score = |s: i64, col: &str, reasons: &mut Vec<String>| {
        u32::try_from(s).unwrap_or_else(|_| {
            reasons.push(format!("{col} {s} is negative or out of range"));
            0
        })
    };
    let hs = score(home_score, "home_score", &mut reasons);
    let as_ = score(away_score, "away_score", &mut reasons);
    let game = Game {
        date,
        home: TeamId::new(home),
        away: TeamId::new(away),
        home_score: hs,
        away_score: as_,
        neutral,
    };
    if reasons.is_empty() {
        reasons = game.violations(config);
    } else {
        reasons.extend(game.violations(config).into_iter().filter(|r| !r.starts_with("tied")));
    }
    if reasons.is_empty() {
        Ok(game)
    } else {
        Err(ScheduleError::Invalid { row, reasons })
    }
}

/// Reads a game file. The team set of the returned season is exactly the
/// teams appearing in the games; game order is preserved.
pub fn parse_games<R: Read>(source: R, format: Format, config: ValidationConfig) -> Result<Parsed, ScheduleError> {
    let mut games = Vec::new();
    let mut warnings = Vec::new();
    let mut seen_rows: HashMap<String, usize> = HashMap::new();
    let mut note_duplicate = |raw: String, row: usize, warnings: &mut Vec<String>| {
        if let Some(first) = seen_rows.get(&raw) {
            warnings.push(format!("row {row}: identical to row {first}"));
        } else {
            seen_rows.insert(raw, row);
        }
    };

    match format {
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
            let headers = reader.headers()?.clone();
            let mut pos = [0usize; 6];
            for (slot, name) in pos.iter_mut().zip(COLUMNS) {
                *slot = headers
                    .iter()
                    .position(|h| h.eq_ignore_ascii_case(name))
                    .ok_or(ScheduleError::MissingColumn(name))?;
            }
            for (i, record) in reader.records().enumerate() {
                let row = i + 1;
                let record = record.map_err(|e| ScheduleError::Malformed {
                    row,
                    reason: e.to_string(),
                })?;
                let field = |k: usize| record.get(pos[k]).unwrap_or("");
                let date = parse_date(field(0), row)?;
                let home_score = parse_score(field(3), "home_score", row)?;
                let away_score = parse_score(field(4), "away_score", row)?;
                let neutral = parse_bool(field(5), row)?;
                games.push(build_game(row, date, field(1), field(2), home_score, away_score, neutral, &config)?);
                note_duplicate(record.iter().collect::<Vec<_>>().join("\u{1f}"), row, &mut warnings);
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = serde_json::from_reader(source)?;
            for (i, value) in rows.into_iter().enumerate() {
                let row = i + 1;
                let raw = value.to_string();
                let parsed: JsonRow = serde_json::from_value(value).map_err(|e| ScheduleError::Malformed {
                    row,
                    reason: e.to_string(),
                })?;
                let date = parse_date(parsed.date.as_deref().unwrap_or(""), row)?;
                games.push(build_game(
                    row,
                    date,
                    &parsed.home,
                    &parsed.away,
                    parsed.home_score,
                    parsed.away_score,
                    parsed.neutral,
                    &config,
                )?);
                note_duplicate(raw, row, &mut warnings);
            }
        }
    }

    Ok(Parsed {
        season: Season::new(games, config)?,
        warnings,
    })
}

/// Writes the season's games in the canonical column order.
pub fn write_games<W: Write>(season: &Season, format: Format, mut sink: W) -> Result<(), ScheduleError> {
    match format {
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(sink);
            writer.write_record(COLUMNS)?;
            for g in season.games() {
                writer.write_record([
                    g.date.map(|d| d.to_string()).unwrap_or_default(),
                    g.home.to_string(),
                    g.away.to_string(),
                    g.home_score.to_string(),
                    g.away_score.to_string(),
                    g.neutral.to_string(),
                ])?;
            }
            writer.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, season.games())?;
            sink.write_all(b"\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_season(body: &str) -> Result<Parsed, ScheduleError> {
        let text = format!("date,home,away,home_score,away_score,neutral\n{body}");
        parse_games(text.as_bytes(), Format::Csv, ValidationConfig::default())
    }

    #[test]
    fn minimal_csv() {
        let parsed = csv_season("2025-03-01,A,B,11,9,false\n").unwrap();
        let s = parsed.season;
        assert_eq!(s.teams(), &[TeamId::new("A"), TeamId::new("B")]);
        assert_eq!(s.games().len(), 1);
        assert_eq!(s.games()[0].date, NaiveDate::from_ymd_opt(2025, 3, 1));
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn parse_is_deterministic() {
        let body = "2025-03-01,A,B,11,9,false\n2025-03-02,C,A,4,12,true\n";
        let a = csv_season(body).unwrap().season;
        let b = csv_season(body).unwrap().season;
        let (mut out_a, mut out_b) = (Vec::new(), Vec::new());
        write_games(&a, Format::Csv, &mut out_a).unwrap();
        write_games(&b, Format::Csv, &mut out_b).unwrap();
        assert_eq!(out_a, out_b);
        assert_eq!(a, b);
    }

    #[test]
    fn self_tie_cites_both_violations() {
        let err = csv_season("2025-03-01,A,A,5,5,false\n").unwrap_err();
        match &err {
            ScheduleError::Invalid { row, reasons } => {
                assert_eq!(*row, 1);
                assert_eq!(reasons.len(), 2);
                assert!(reasons[0].contains("same team"));
                assert!(reasons[1].contains("tied"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(!err.is_parse_error());
    }

    #[test]
    fn ties_allowed_with_config() {
        let text = "date,home,away,home_score,away_score,neutral\n,A,B,5,5,false\n";
        let parsed = parse_games(text.as_bytes(), Format::Csv, ValidationConfig { allow_ties: true }).unwrap();
        let rec = parsed.season.record(&"A".into()).unwrap();
        assert_eq!(rec, TeamRecord { wins: 0, losses: 0, ties: 1 });
        assert_eq!(rec.win_pct(), Some(0.5));
    }

    #[test]
    fn malformed_rows_report_row_number() {
        let err = csv_season("2025-03-01,A,B,11,9,false\n2025-03-02,A,C,x,9,false\n").unwrap_err();
        assert!(matches!(err, ScheduleError::Malformed { row: 2, .. }), "{err}");
        assert!(err.is_parse_error());

        let err = csv_season("2025-03-01,A,B,11,9,maybe\n").unwrap_err();
        assert!(matches!(err, ScheduleError::Malformed { row: 1, .. }));

        let err = csv_season("2025-13-01,A,B,11,9,false\n").unwrap_err();
        assert!(matches!(err, ScheduleError::Malformed { row: 1, .. }));

        let err = csv_season("2025-03-01,A,B,-1,9,false\n").unwrap_err();
        assert!(matches!(err, ScheduleError::Invalid { row: 1, .. }));
    }

    #[test]
    fn missing_header_column() {
        let text = "date,home,away,home_score,away_score\n2025-03-01,A,B,1,0\n";
        let err = parse_games(text.as_bytes(), Format::Csv, ValidationConfig::default()).unwrap_err();
        assert!(matches!(err, ScheduleError::MissingColumn("neutral")));
    }

    #[test]
    fn duplicate_rows_warn_but_rematches_do_not() {
        let parsed = csv_season("2025-03-01,A,B,11,9,false\n2025-03-01,A,B,11,9,false\n2025-04-01,A,B,8,9,false\n")
            .unwrap();
        assert_eq!(parsed.season.games().len(), 3);
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("row 2"));
    }

    #[test]
    fn canonicalization() {
        let t = TeamId::new("  York (PA) ");
        assert_eq!(t.as_str(), "York (PA)");
        assert_eq!(t, TeamId::new("york (pa)"));
        assert_eq!(TeamId::new(t.as_str()), t);
        assert_eq!(TeamId::new(t.key()), t);

        let parsed = csv_season(",Tufts,Bates,10,3,false\n,tufts ,Colby,9,8,false\n").unwrap();
        assert_eq!(parsed.season.len_teams(), 3);
        assert_eq!(parsed.season.teams()[2].as_str(), "Tufts");
    }

    #[test]
    fn json_input() {
        let text = r#"[{"date":"2025-03-01","home":"A","away":"B","home_score":11,"away_score":9,"neutral":false},
                      {"home":"B","away":"C","home_score":3,"away_score":7,"neutral":true}]"#;
        let parsed = parse_games(text.as_bytes(), Format::Json, ValidationConfig::default()).unwrap();
        assert_eq!(parsed.season.games().len(), 2);
        assert!(parsed.season.games()[1].neutral);
        assert_eq!(parsed.season.games()[1].date, None);

        let bad = r#"[{"home":"A","away":"B","home_score":"x","away_score":9,"neutral":false}]"#;
        let err = parse_games(bad.as_bytes(), Format::Json, ValidationConfig::default()).unwrap_err();
        assert!(matches!(err, ScheduleError::Malformed { row: 1, .. }));
    }

    #[test]
    fn records() {
        let s = csv_season(",A,B,11,9,false\n").unwrap().season;
        assert_eq!(s.record(&"A".into()).unwrap(), TeamRecord { wins: 1, losses: 0, ties: 0 });
        assert!(matches!(s.record(&"Z".into()), Err(ScheduleError::UnknownTeam(_))));

        let idle = Season::with_teams(
            ["A", "B", "C"].map(TeamId::new),
            vec![Game::new("A", "B", 3, 2)],
            ValidationConfig::default(),
        )
        .unwrap();
        assert_eq!(idle.record(&"C".into()).unwrap(), TeamRecord::default());
    }

    #[test]
    fn four_team_round_robin_records() {
        // A beats everyone, B beats C and D, D beats C
        let body = ",A,B,5,4,false\n,C,A,2,9,false\n,A,D,7,1,true\n,B,C,6,5,false\n,D,B,8,10,false\n,C,D,3,4,false\n";
        let s = csv_season(body).unwrap().season;
        let tally: Vec<(u32, u32)> = s.records().iter().map(|r| (r.wins, r.losses)).collect();
        assert_eq!(tally, vec![(3, 0), (2, 1), (0, 3), (1, 2)]);
    }

    #[test]
    fn components() {
        let s = csv_season(",A,B,1,0,false\n").unwrap().season;
        assert_eq!(s.connectivity().groups, vec![vec![TeamId::new("A"), TeamId::new("B")]]);

        let s = csv_season(",A,B,1,0,false\n,C,D,1,0,false\n").unwrap().season;
        let comps = s.connectivity();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps.of, vec![0, 0, 1, 1]);
    }

    #[test]
    fn extended_rejects_new_teams() {
        let s = csv_season(",A,B,1,0,false\n").unwrap().season;
        let err = s.extended(&[Game::new("A", "Q", 2, 1)]).unwrap_err();
        assert!(matches!(err, ScheduleError::UnknownTeam(t) if t.as_str() == "Q"));
        let more = s.extended(&[Game::new("B", "A", 2, 1)]).unwrap();
        assert_eq!(more.games().len(), 2);
    }

    #[test]
    fn record_pct_comparison_is_exact() {
        let a = TeamRecord { wins: 2, losses: 1, ties: 0 };
        let b = TeamRecord { wins: 4, losses: 2, ties: 0 };
        assert_eq!(a.cmp_pct(&b), std::cmp::Ordering::Equal);
        let c = TeamRecord { wins: 1, losses: 0, ties: 1 };
        assert_eq!(c.cmp_pct(&TeamRecord { wins: 3, losses: 1, ties: 0 }), std::cmp::Ordering::Equal);
    }
}
