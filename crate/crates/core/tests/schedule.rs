mod support;

use chrono::NaiveDate;
use laxrank_core::schedule::{parse_games, write_games, Format, Game, ScheduleError, Season, TeamId, ValidationConfig};
use proptest::prelude::*;

const HEADER: &str = "date,home,away,home_score,away_score,neutral\n";

fn csv(body: &str) -> Result<laxrank_core::schedule::Parsed, ScheduleError> {
    parse_games(format!("{HEADER}{body}").as_bytes(), Format::Csv, ValidationConfig::default())
}

#[test]
fn columns_may_come_in_any_order() {
    let text = "neutral,away,home,away_score,home_score,date\nfalse,B,A,3,7,2025-04-01\n";
    let s = parse_games(text.as_bytes(), Format::Csv, ValidationConfig::default())
        .unwrap()
        .season;
    assert_eq!(s.games()[0], Game::new("A", "B", 7, 3).on(NaiveDate::from_ymd_opt(2025, 4, 1).unwrap()));
}

#[test]
fn date_is_optional() {
    let s = csv(",A,B,7,3,TRUE\n").unwrap().season;
    assert_eq!(s.games()[0].date, None);
    assert!(s.games()[0].neutral);
}

#[test]
fn rows_are_numbered_in_errors() {
    let err = csv("2025-04-01,A,B,7,3,false\n2025-04-02,A,C,x,3,false\n").unwrap_err();
    assert!(err.is_parse_error());
    assert!(err.to_string().starts_with("row 2:"), "{err}");

    let err = csv("2025-04-01,A,B,-1,3,false\n").unwrap_err();
    assert!(!err.is_parse_error());
    assert!(matches!(err, ScheduleError::Invalid { row: 1, .. }));

    assert!(matches!(csv("2025-13-01,A,B,1,3,false\n"), Err(ScheduleError::Malformed { row: 1, .. })));
    assert!(matches!(csv("2025-04-01,A,B,1,3,maybe\n"), Err(ScheduleError::Malformed { row: 1, .. })));
    assert!(matches!(csv("2025-04-01,A,a,1,3,false\n"), Err(ScheduleError::Invalid { .. })));
}

#[test]
fn ties_need_opting_in() {
    assert!(csv("2025-04-01,A,B,3,3,false\n").is_err());
    let text = format!("{HEADER}2025-04-01,A,B,3,3,false\n");
    let s = parse_games(text.as_bytes(), Format::Csv, ValidationConfig { allow_ties: true })
        .unwrap()
        .season;
    assert_eq!(s.record(&TeamId::new("A")).unwrap().ties, 1);
}

#[test]
fn missing_column_is_reported() {
    let err = parse_games("home,away,home_score,away_score,neutral\n".as_bytes(), Format::Csv, ValidationConfig::default())
        .unwrap_err();
    assert!(matches!(err, ScheduleError::MissingColumn("date")));
}

#[test]
fn duplicate_rows_warn() {
    let parsed = csv("2025-04-01,A,B,7,3,false\n2025-04-01,A,B,7,3,false\n").unwrap();
    assert_eq!(parsed.warnings, vec!["row 2: identical to row 1".to_string()]);
    assert_eq!(parsed.season.games().len(), 2);
}

#[test]
fn json_input() {
    let text = r#"[{"date": "2025-04-01", "home": "A", "away": "B", "home_score": 7, "away_score": 3, "neutral": false},
                   {"home": "B", "away": "C", "home_score": 1, "away_score": 3, "neutral": true}]"#;
    let s = parse_games(text.as_bytes(), Format::Json, ValidationConfig::default())
        .unwrap()
        .season;
    assert_eq!(s.len_teams(), 3);
    let bad = r#"[{"home": "A", "away": "B", "home_score": 7, "neutral": false}]"#;
    assert!(parse_games(bad.as_bytes(), Format::Json, ValidationConfig::default())
        .unwrap_err()
        .is_parse_error());
}

#[test]
fn team_names_ignore_case_and_padding() {
    let s = csv("2025-04-01,Tufts,bowdoin,7,3,false\n2025-04-02, Bowdoin ,TUFTS,5,3,false\n")
        .unwrap()
        .season;
    assert_eq!(s.len_teams(), 2);
    assert_eq!(s.teams()[0].as_str(), "bowdoin");
    let r = s.record(&TeamId::new("tufts")).unwrap();
    assert_eq!((r.wins, r.losses), (1, 1));
}

#[test]
fn extending_with_unknown_team_fails() {
    let s = csv("2025-04-01,A,B,7,3,false\n").unwrap().season;
    assert!(matches!(
        s.extended(&[Game::new("A", "Z", 1, 0)]),
        Err(ScheduleError::UnknownTeam(_))
    ));
    assert_eq!(s.extended(&[Game::new("B", "A", 1, 0)]).unwrap().games().len(), 2);
}

#[test]
fn explicit_team_list_allows_idle_teams() {
    let s = Season::with_teams(
        ["A", "B", "C"].map(TeamId::new),
        vec![Game::new("A", "B", 2, 1)],
        ValidationConfig::default(),
    )
    .unwrap();
    assert_eq!(s.games_played(), vec![1, 1, 0]);
    assert_eq!(s.connectivity().len(), 2);
}

fn name_strategy() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z .&'-]{0,12}[A-Za-z]"
}

fn game_strategy() -> impl Strategy<Value = (String, String, u32, u32, bool, Option<(i32, u32, u32)>)> {
    (
        name_strategy(),
        name_strategy(),
        0u32..40,
        0u32..40,
        any::<bool>(),
        prop::option::of((2000i32..2030, 1u32..=12, 1u32..=28)),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_round_trips(rows in prop::collection::vec(game_strategy(), 1..15), json in any::<bool>()) {
        let games: Vec<Game> = rows
            .into_iter()
            .filter(|(h, a, ..)| TeamId::new(h) != TeamId::new(a))
            .map(|(h, a, hs, as_, neutral, date)| Game {
                date: date.map(|(y, m, d)| NaiveDate::from_ymd_opt(y, m, d).unwrap()),
                home: TeamId::new(h),
                away: TeamId::new(a),
                home_score: hs,
                away_score: as_,
                neutral,
            })
            .collect();
        prop_assume!(!games.is_empty());
        let config = ValidationConfig { allow_ties: true };
        let season = Season::new(games, config).unwrap();
        let format = if json { Format::Json } else { Format::Csv };
        let mut buf = Vec::new();
        write_games(&season, format, &mut buf).unwrap();
        let back = parse_games(&buf[..], format, config).unwrap().season;
        prop_assert_eq!(&back, &season);
        for (x, y) in back.teams().iter().zip(season.teams()) {
            prop_assert_eq!(x.as_str(), y.as_str());
        }
    }

    #[test]
    fn components_match_transitive_closure(
        n in 2usize..10,
        rows in prop::collection::vec((0usize..10, 0usize..9, 0u32..5, 0u32..5, any::<bool>()), 1..12),
        rotate in 0usize..10,
    ) {
        let s = support::season_from_tuples(n, &rows, true);
        let comps = s.connectivity();
        let reach = support::reachability(&s);
        let k = s.len_teams();
        for i in 0..k {
            for j in 0..k {
                prop_assert_eq!(comps.of[i] == comps.of[j], reach[i][j]);
            }
        }
        // game order does not change the partition
        let mut games = s.games().to_vec();
        let shift = rotate % games.len();
        games.rotate_left(shift);
        games.reverse();
        let other = Season::new(games, ValidationConfig { allow_ties: true }).unwrap();
        prop_assert_eq!(other.connectivity().groups, comps.groups);
    }

    #[test]
    fn records_account_for_every_game((n, rows) in (2usize..8).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n, 0u32..5, 0u32..5, any::<bool>()), 1..20)))) {
        let s = support::season_from_tuples(n, &rows, true);
        let records = s.records();
        let wins: u32 = records.iter().map(|r| r.wins).sum();
        let losses: u32 = records.iter().map(|r| r.losses).sum();
        let ties: u32 = records.iter().map(|r| r.ties).sum();
        prop_assert_eq!(wins, losses);
        prop_assert_eq!((wins + losses + ties) as usize, 2 * s.games().len());
        let played: usize = s.games_played().iter().sum();
        prop_assert_eq!(played, 2 * s.games().len());
    }
}
