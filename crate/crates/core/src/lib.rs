//! Tournament-selection rating engines.
//!
//! Two methods are implemented over a common [`schedule::Season`]:
//!
//! * **Powerwise (PWR)**: pairwise matchups between every two teams, decided by
//!   head-to-head record, then common-opponent record, then least-squares
//!   [Power Ratings](power_rating).
//! * **NCAA Power Index (NPI)**: a dial-weighted blend of win percentage and
//!   opponents' average index, found by fixed-point iteration.
//!
//! [`compare`] measures agreement between rankings, [`simulate`] checks how
//! well each method recovers known strengths on synthetic seasons.

pub mod compare;
pub mod npi;
pub mod power_rating;
pub mod powerwise;
pub mod schedule;
pub mod simulate;

pub use compare::{compare_rankings, whatif, ComparisonReport, Method, Ranking};
pub use npi::{dial_sweep, npi_iterate, npi_rank, NpiConfig, NpiResult};
pub use power_rating::{solve_power_ratings, solve_power_ratings_with, HfaMode, PowerRatingConfig, PowerRatings};
pub use powerwise::{pwr_rank, tier_share, PwrRanking, Tier, TierOutcome};
pub use schedule::{parse_games, Format, Game, Season, TeamId, TeamRecord, ValidationConfig};
pub use simulate::{evaluate_methods, generate_season, ScheduleModel, SimConfig, SimOutcome};
