//! Command settings: what `--config` files hold and what manifests echo.
//!
//! Flags given on the command line override the file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use laxrank_core::compare::Method;
use laxrank_core::npi::{NpiConfig, OpponentAverage};
use laxrank_core::power_rating::{estimate_hfa_mean_margin, HfaMode, PowerRatingConfig};
use laxrank_core::schedule::Season;
use laxrank_core::simulate::{ScheduleModel, SimConfig};

use crate::exit::{self, Failure};
use crate::manifest::Run;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    #[default]
    Pwr,
    Npi,
}

/// Home-field handling as written on the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum HfaSetting {
    #[default]
    Fitted,
    None,
    /// Fixed at the mean home margin of non-neutral games.
    Mean,
    Goals(f64),
}

impl FromStr for HfaSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fitted" | "fit" => Ok(HfaSetting::Fitted),
            "none" | "off" => Ok(HfaSetting::None),
            "mean" => Ok(HfaSetting::Mean),
            other => match other.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(HfaSetting::Goals(v)),
                _ => Err(format!("expected fitted, none, mean or a number of goals, got {s:?}")),
            },
        }
    }
}

impl TryFrom<String> for HfaSetting {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<HfaSetting> for String {
    fn from(h: HfaSetting) -> String {
        h.to_string()
    }
}

impl fmt::Display for HfaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HfaSetting::Fitted => f.write_str("fitted"),
            HfaSetting::None => f.write_str("none"),
            HfaSetting::Mean => f.write_str("mean"),
            HfaSetting::Goals(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Args, Clone, Default)]
pub struct PwrArgs {
    /// Home-field advantage: fitted, none, mean, or a fixed number of goals
    #[arg(long)]
    pub hfa: Option<HfaSetting>,
    /// Clamp game margins to this many goals before fitting
    #[arg(long)]
    pub margin_cap: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OpponentAverageArg {
    PerGame,
    DivisionWide,
}

#[derive(Args, Clone, Default)]
pub struct NpiArgs {
    /// Weight on a team's own winning percentage (0 to 1)
    #[arg(long)]
    pub dial: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub initial_value: Option<f64>,
    #[arg(long, value_enum)]
    pub opponent_average: Option<OpponentAverageArg>,
}

impl NpiArgs {
    fn apply(&self, npi: &mut NpiConfig) {
        if let Some(v) = self.dial {
            npi.dial = v;
        }
        if let Some(v) = self.tolerance {
            npi.tolerance = v;
        }
        if let Some(v) = self.max_iterations {
            npi.max_iterations = v;
        }
        if let Some(v) = self.initial_value {
            npi.initial_value = v;
        }
        if let Some(v) = self.opponent_average {
            npi.opponent_average = match v {
                OpponentAverageArg::PerGame => OpponentAverage::PerGame,
                OpponentAverageArg::DivisionWide => OpponentAverage::DivisionWide,
            };
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankSettings {
    pub method: MethodName,
    pub allow_ties: bool,
    pub hfa: HfaSetting,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin_cap: Option<u32>,
    pub npi: NpiConfig,
}

impl RankSettings {
    pub fn merge(mut self, method: Option<MethodName>, allow_ties: bool, pwr: &PwrArgs, npi: &NpiArgs) -> Self {
        if let Some(m) = method {
            self.method = m;
        }
        self.allow_ties |= allow_ties;
        if let Some(h) = pwr.hfa {
            self.hfa = h;
        }
        if pwr.margin_cap.is_some() {
            self.margin_cap = pwr.margin_cap;
        }
        npi.apply(&mut self.npi);
        self
    }

    pub fn power_rating_config(&self, season: &Season) -> Result<PowerRatingConfig, Failure> {
        let hfa = match self.hfa {
            HfaSetting::Fitted => HfaMode::Fitted,
            HfaSetting::None => HfaMode::None,
            HfaSetting::Goals(v) => HfaMode::Fixed(v),
            HfaSetting::Mean => HfaMode::Fixed(estimate_hfa_mean_margin(season)?),
        };
        Ok(PowerRatingConfig {
            hfa,
            margin_cap: self.margin_cap,
        })
    }

    pub fn method_config(&self, season: &Season) -> Result<Method, Failure> {
        Ok(match self.method {
            MethodName::Pwr => Method::Pwr(self.power_rating_config(season)?),
            MethodName::Npi => Method::Npi(self.npi.clone()),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySettings {
    pub allow_ties: bool,
    pub dials: Vec<f64>,
    pub top_k: usize,
    pub npi: NpiConfig,
}

impl Default for StabilitySettings {
    fn default() -> Self {
        StabilitySettings {
            allow_ties: false,
            dials: Vec::new(),
            top_k: 10,
            npi: NpiConfig::default(),
        }
    }
}

impl StabilitySettings {
    pub fn merge(mut self, allow_ties: bool, dials: Vec<f64>, top_k: Option<usize>, npi: &NpiArgs) -> Result<Self, Failure> {
        self.allow_ties |= allow_ties;
        if !dials.is_empty() {
            self.dials = dials;
        }
        if let Some(k) = top_k {
            self.top_k = k;
        }
        npi.apply(&mut self.npi);
        if self.dials.is_empty() {
            return Err(Failure::new(exit::USAGE, "no dials given (use --dials or a config file)"));
        }
        Ok(self)
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    RoundRobin,
    Conference,
}

#[derive(Args, Clone, Default)]
pub struct SimArgs {
    #[arg(long)]
    pub n_teams: Option<usize>,
    #[arg(long)]
    pub games_per_team: Option<usize>,
    /// Spread of latent team strengths, in goals
    #[arg(long)]
    pub strength_sd: Option<f64>,
    /// Per-game noise on the margin, in goals
    #[arg(long)]
    pub score_noise_sd: Option<f64>,
    #[arg(long)]
    pub base_goals: Option<f64>,
    #[arg(long)]
    pub hfa_true: Option<f64>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    #[arg(long)]
    pub n_conferences: Option<usize>,
    #[arg(long)]
    pub crossover_games: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub holdout_games: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub simulation: SimConfig,
    pub replications: usize,
    pub npi: NpiConfig,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            simulation: SimConfig::default(),
            replications: 200,
            npi: NpiConfig::default(),
        }
    }
}

impl SimSettings {
    pub fn merge(mut self, a: &SimArgs, npi: &NpiArgs) -> Self {
        let s = &mut self.simulation;
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = a.$field {
                    s.$field = v;
                }
            )*};
        }
        set!(n_teams, games_per_team, strength_sd, score_noise_sd, base_goals, hfa_true, seed, holdout_games);
        let (mut k, mut x) = match s.schedule_model {
            ScheduleModel::Conference {
                n_conferences,
                crossover_games,
            } => (n_conferences, crossover_games),
            ScheduleModel::RoundRobin => (3, 3),
        };
        k = a.n_conferences.unwrap_or(k);
        x = a.crossover_games.unwrap_or(x);
        let conference = match a.schedule {
            Some(ScheduleArg::RoundRobin) => false,
            Some(ScheduleArg::Conference) => true,
            None => {
                matches!(s.schedule_model, ScheduleModel::Conference { .. })
                    || a.n_conferences.is_some()
                    || a.crossover_games.is_some()
            }
        };
        s.schedule_model = if conference {
            ScheduleModel::Conference {
                n_conferences: k,
                crossover_games: x,
            }
        } else {
            ScheduleModel::RoundRobin
        };
        if let Some(r) = a.replications {
            self.replications = r;
        }
        npi.apply(&mut self.npi);
        self
    }
}

/// Loads settings from a JSON file. Accepts a bare settings object, a
/// `manifest.json`, or any artifact with an embedded manifest, so a previous
/// run can be repeated from its outputs.
pub fn load_config<T: DeserializeOwned + Default>(run: &mut Run, path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let bad = |e: &dyn fmt::Display| Failure::new(exit::PARSE, format!("{}: {e}", path.display()));
    let bytes = run.read_input(path)?;
    let mut doc: Value = serde_json::from_slice(&bytes).map_err(|e| bad(&e))?;
    if let Some(m) = doc.get_mut("manifest") {
        doc = m.take();
    }
    if doc.get("tool").is_some() && doc.get("config").is_some() {
        doc = doc["config"].take();
    }
    serde_json::from_value(doc).map_err(|e| bad(&e))
}
