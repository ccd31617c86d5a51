//! Declarative run configuration.
//!
//! A config file is a TOML tree with `[model]`, `[schedule]`, `[policy]` and
//! `[sim]` sections plus an optional `[optimization]` section. The variant
//! sections carry a `kind` key selecting the shape; unknown keys anywhere
//! are rejected with a message naming the offender. See the repository
//! README for the full schema.

use crate::engine::SimConfig;
use crate::models::{Model, OneCompParams, TwoCompT1Params, TwoCompT2Params};
use crate::optimizer::{Constraints, Decision, OptimizationProblem, SearchSettings};
use crate::policies::{LessonSchedule, Polynomial, RequirementPolicy, Window};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("[{section}] {message}")]
    Section { section: &'static str, message: String },
    #[error("[{section}] is missing the `kind` key (expected one of: {expected})")]
    MissingKind { section: &'static str, expected: &'static str },
    #[error("[{section}] unknown kind `{kind}` (expected one of: {expected})")]
    UnknownKind { section: &'static str, kind: String, expected: &'static str },
    #[error("{0}")]
    Invalid(String),
}

const MODEL_KINDS: &str = "one_comp, two_comp_t1, two_comp_t2";
const SCHEDULE_KINDS: &str = "windows, school_years";
const POLICY_KINDS: &str = "polynomial, two_tier, year_matrix, congruent, per_lesson_levels";

/// The optional `[optimization]` section, resolved to domain types.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationSpec {
    pub decision: Decision,
    pub constraints: Constraints,
    pub search: SearchSettings,
}

/// A fully parsed run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub schedule: LessonSchedule,
    pub policy: RequirementPolicy,
    pub sim: SimConfig,
    pub optimization: Option<OptimizationSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: toml::Table,
    schedule: toml::Table,
    policy: toml::Table,
    sim: SimConfig,
    #[serde(default)]
    optimization: Option<OptSection>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptSection {
    decision: String,
    #[serde(default = "default_true")]
    shared_duration: bool,
    constraints: Constraints,
    #[serde(default)]
    search: SearchSettings,
}

fn default_true() -> bool {
    true
}

fn take_kind(table: &mut toml::Table, section: &'static str, expected: &'static str) -> Result<String, ConfigError> {
    match table.remove("kind") {
        Some(toml::Value::String(kind)) => Ok(kind),
        Some(_) => Err(ConfigError::Section { section, message: "`kind` must be a string".into() }),
        None => Err(ConfigError::MissingKind { section, expected }),
    }
}

fn from_table<T: DeserializeOwned>(table: toml::Table, section: &'static str) -> Result<T, ConfigError> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| ConfigError::Section { section, message: e.to_string() })
}

fn parse_model(mut table: toml::Table) -> Result<Model, ConfigError> {
    let kind = take_kind(&mut table, "model", MODEL_KINDS)?;
    match kind.as_str() {
        "one_comp" => Ok(Model::OneComp(from_table::<OneCompParams>(table, "model")?)),
        "two_comp_t1" => Ok(Model::TwoCompT1(from_table::<TwoCompT1Params>(table, "model")?)),
        "two_comp_t2" => Ok(Model::TwoCompT2(from_table::<TwoCompT2Params>(table, "model")?)),
        _ => Err(ConfigError::UnknownKind { section: "model", kind, expected: MODEL_KINDS }),
    }
}

fn parse_schedule(mut table: toml::Table) -> Result<LessonSchedule, ConfigError> {
    let kind = take_kind(&mut table, "schedule", SCHEDULE_KINDS)?;
    match kind.as_str() {
        "windows" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Fields {
                windows: Vec<(f64, f64)>,
            }
            let f: Fields = from_table(table, "schedule")?;
            Ok(LessonSchedule::windows(
                f.windows.into_iter().map(|(start, duration)| Window { start, duration }).collect(),
            ))
        }
        "school_years" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Fields {
                #[serde(default = "default_year_length")]
                year_length: f64,
                #[serde(default = "default_session_length")]
                session_length: f64,
                years: usize,
                #[serde(default)]
                final_cut: Option<f64>,
            }
            fn default_year_length() -> f64 {
                12.0
            }
            fn default_session_length() -> f64 {
                9.0
            }
            let f: Fields = from_table(table, "schedule")?;
            let final_cut = f.final_cut.unwrap_or_else(|| {
                f.year_length * f.years as f64 - (f.year_length - f.session_length)
            });
            Ok(LessonSchedule::SchoolYears {
                year_length: f.year_length,
                session_length: f.session_length,
                years: f.years,
                final_cut,
            })
        }
        _ => Err(ConfigError::UnknownKind { section: "schedule", kind, expected: SCHEDULE_KINDS }),
    }
}

fn parse_policy(mut table: toml::Table) -> Result<RequirementPolicy, ConfigError> {
    let kind = take_kind(&mut table, "policy", POLICY_KINDS)?;
    match kind.as_str() {
        "polynomial" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Fields {
                terms: Vec<(f64, f64)>,
            }
            let f: Fields = from_table(table, "policy")?;
            Ok(RequirementPolicy::Polynomial(Polynomial::new(f.terms)))
        }
        "two_tier" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Fields {
                u_high: Vec<(f64, f64)>,
                u_low: Vec<(f64, f64)>,
                cutoff_c: f64,
                #[serde(default = "default_true")]
                latched: bool,
            }
            let f: Fields = from_table(table, "policy")?;
            Ok(RequirementPolicy::TwoTier {
                u_high: Polynomial::new(f.u_high),
                u_low: Polynomial::new(f.u_low),
                cutoff_c: f.cutoff_c,
                latched: f.latched,
            })
        }
        "year_matrix" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Fields {
                u1: Vec<f64>,
                u2: Vec<f64>,
                alpha_scale: Vec<f64>,
            }
            let f: Fields = from_table(table, "policy")?;
            Ok(RequirementPolicy::YearMatrix { u1: f.u1, u2: f.u2, alpha_scale: f.alpha_scale })
        }
        "congruent" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Fields {
                cutoff_c: f64,
            }
            let f: Fields = from_table(table, "policy")?;
            Ok(RequirementPolicy::Congruent { cutoff_c: f.cutoff_c })
        }
        "per_lesson_levels" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Fields {
                levels: Vec<f64>,
            }
            let f: Fields = from_table(table, "policy")?;
            Ok(RequirementPolicy::PerLessonLevels { levels: f.levels })
        }
        _ => Err(ConfigError::UnknownKind { section: "policy", kind, expected: POLICY_KINDS }),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let model = parse_model(raw.model)?;
        let schedule = parse_schedule(raw.schedule)?;
        let policy = parse_policy(raw.policy)?;
        let optimization = raw
            .optimization
            .map(|o| {
                let decision = match o.decision.as_str() {
                    "durations" => Decision::Durations { shared: o.shared_duration },
                    "levels" => Decision::Levels,
                    other => {
                        return Err(ConfigError::Section {
                            section: "optimization",
                            message: format!(
                                "unknown decision `{other}` (expected `durations` or `levels`)"
                            ),
                        })
                    }
                };
                Ok(OptimizationSpec { decision, constraints: o.constraints, search: o.search })
            })
            .transpose()?;
        let config = RunConfig { model, schedule, policy, sim: raw.sim, optimization };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    /// Semantic validation across sections. Returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        self.model.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.schedule.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.policy
            .validate(&self.schedule)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.sim.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(problem) = self.optimization_problem() {
            problem.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let warnings = match &self.model {
            Model::TwoCompT2(p) => p.warnings(),
            _ => Vec::new(),
        };
        Ok(warnings)
    }

    /// The optimization task this config describes, when it has one.
    pub fn optimization_problem(&self) -> Option<OptimizationProblem> {
        self.optimization.as_ref().map(|spec| OptimizationProblem {
            model: self.model,
            schedule: self.schedule.clone(),
            policy: self.policy.clone(),
            decision: spec.decision,
            sim: self.sim.clone(),
            constraints: spec.constraints,
            search: spec.search.clone(),
        })
    }

    /// Serialize back to TOML. Parsing the result reproduces this config
    /// exactly (floats use shortest round-trip formatting).
    pub fn to_toml_string(&self) -> String {
        let mut root = toml::Table::new();
        root.insert("model".into(), toml::Value::Table(model_table(&self.model)));
        root.insert("schedule".into(), toml::Value::Table(schedule_table(&self.schedule)));
        root.insert("policy".into(), toml::Value::Table(policy_table(&self.policy)));
        root.insert("sim".into(), to_value(&self.sim));
        if let Some(spec) = &self.optimization {
            let (decision, shared) = match spec.decision {
                Decision::Durations { shared } => ("durations", shared),
                Decision::Levels => ("levels", true),
            };
            let section = OptSection {
                decision: decision.to_string(),
                shared_duration: shared,
                constraints: spec.constraints,
                search: spec.search.clone(),
            };
            root.insert("optimization".into(), to_value(&section));
        }
        toml::to_string(&root).expect("config trees always serialize")
    }
}

fn to_value<T: Serialize>(value: &T) -> toml::Value {
    toml::Value::try_from(value).expect("domain types always serialize to TOML")
}

fn kinded_table(kind: &str, body: toml::Value) -> toml::Table {
    let mut table = toml::Table::new();
    table.insert("kind".into(), toml::Value::String(kind.to_string()));
    if let toml::Value::Table(t) = body {
        table.extend(t);
    }
    table
}

fn model_table(model: &Model) -> toml::Table {
    match model {
        Model::OneComp(p) => kinded_table("one_comp", to_value(p)),
        Model::TwoCompT1(p) => kinded_table("two_comp_t1", to_value(p)),
        Model::TwoCompT2(p) => kinded_table("two_comp_t2", to_value(p)),
    }
}

fn pairs(windows: &[Window]) -> Vec<(f64, f64)> {
    windows.iter().map(|w| (w.start, w.duration)).collect()
}

fn schedule_table(schedule: &LessonSchedule) -> toml::Table {
    match schedule {
        LessonSchedule::ExplicitWindows { windows } => {
            let mut t = toml::Table::new();
            t.insert("kind".into(), "windows".into());
            t.insert("windows".into(), to_value(&pairs(windows)));
            t
        }
        LessonSchedule::SchoolYears { year_length, session_length, years, final_cut } => {
            let mut t = toml::Table::new();
            t.insert("kind".into(), "school_years".into());
            t.insert("year_length".into(), (*year_length).into());
            t.insert("session_length".into(), (*session_length).into());
            t.insert("years".into(), (*years as i64).into());
            t.insert("final_cut".into(), (*final_cut).into());
            t
        }
    }
}

fn policy_table(policy: &RequirementPolicy) -> toml::Table {
    match policy {
        RequirementPolicy::Polynomial(p) => {
            let mut t = toml::Table::new();
            t.insert("kind".into(), "polynomial".into());
            t.insert("terms".into(), to_value(&p.terms));
            t
        }
        RequirementPolicy::TwoTier { u_high, u_low, cutoff_c, latched } => {
            let mut t = toml::Table::new();
            t.insert("kind".into(), "two_tier".into());
            t.insert("u_high".into(), to_value(&u_high.terms));
            t.insert("u_low".into(), to_value(&u_low.terms));
            t.insert("cutoff_c".into(), (*cutoff_c).into());
            t.insert("latched".into(), (*latched).into());
            t
        }
        RequirementPolicy::YearMatrix { u1, u2, alpha_scale } => {
            let mut t = toml::Table::new();
            t.insert("kind".into(), "year_matrix".into());
            t.insert("u1".into(), to_value(u1));
            t.insert("u2".into(), to_value(u2));
            t.insert("alpha_scale".into(), to_value(alpha_scale));
            t
        }
        RequirementPolicy::Congruent { cutoff_c } => {
            let mut t = toml::Table::new();
            t.insert("kind".into(), "congruent".into());
            t.insert("cutoff_c".into(), (*cutoff_c).into());
            t
        }
        RequirementPolicy::PerLessonLevels { levels } => {
            let mut t = toml::Table::new();
            t.insert("kind".into(), "per_lesson_levels".into());
            t.insert("levels".into(), to_value(levels));
            t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[model]
kind = "two_comp_t2"
alpha1 = 0.01
alpha2 = 0.002
gamma1 = 0.005
gamma2 = 0.0001

[schedule]
kind = "windows"
windows = [[0.0, 250.0], [500.0, 250.0], [1000.0, 250.0]]

[policy]
kind = "congruent"
cutoff_c = 30.0

[sim]
t_end = 1600.0

[optimization]
decision = "durations"

[optimization.constraints]
t_eval = 1600.0
z_min = 60.0
strength_frac = 0.7

[optimization.search]
budget = 100
restarts = 2
seed = 7
"#;

    #[test]
    fn full_config_parses() {
        let cfg = RunConfig::from_toml_str(FULL).unwrap();
        assert!(matches!(cfg.model, Model::TwoCompT2(_)));
        assert_eq!(cfg.sim.dt, 0.01); // default applied
        let spec = cfg.optimization.as_ref().unwrap();
        assert_eq!(spec.decision, Decision::Durations { shared: true });
        assert_eq!(spec.search.rng_seed, 7);
        assert_eq!(spec.search.step_scale, 5.0); // default in a partial section
    }

    #[test]
    fn unknown_key_is_named() {
        let bad = FULL.replace("gamma1 = 0.005", "gamma1 = 0.005\ngarbage = 1.0");
        let err = RunConfig::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("garbage"), "{err}");
    }

    #[test]
    fn negative_gamma_is_named() {
        let bad = FULL.replace("gamma1 = 0.005", "gamma1 = -0.005");
        let err = RunConfig::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("gamma1"), "{err}");
    }

    #[test]
    fn unknown_kinds_list_the_alternatives() {
        let bad = FULL.replace("kind = \"congruent\"", "kind = \"mystery\"");
        let err = RunConfig::from_toml_str(&bad).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("mystery") && text.contains("per_lesson_levels"), "{text}");
    }

    #[test]
    fn missing_kind_is_reported() {
        let bad = FULL.replace("kind = \"congruent\"\n", "");
        let err = RunConfig::from_toml_str(&bad).unwrap_err();
        assert!(matches!(err, ConfigError::MissingKind { section: "policy", .. }), "{err}");
    }

    #[test]
    fn round_trip_preserves_every_value() {
        let cfg = RunConfig::from_toml_str(FULL).unwrap();
        let text = cfg.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn school_years_defaults_apply() {
        let text = r#"
[model]
kind = "two_comp_t1"
alpha1 = 0.01
alpha2 = 0.01
gamma1 = 0.002
gamma2 = 0.01

[schedule]
kind = "school_years"
years = 11

[policy]
kind = "year_matrix"
u1 = [50.0, 46.0, 42.0, 36.0, 30.0, 25.0, 20.0, 15.0, 10.0, 10.0, 10.0]
u2 = [4.0, 8.0, 14.0, 18.0, 24.0, 28.0, 33.0, 38.0, 46.0, 58.0, 62.0]
alpha_scale = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0]

[sim]
t_end = 132.0
"#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        match cfg.schedule {
            LessonSchedule::SchoolYears { year_length, session_length, final_cut, years } => {
                assert_eq!(year_length, 12.0);
                assert_eq!(session_length, 9.0);
                assert_eq!(years, 11);
                assert_eq!(final_cut, 129.0);
            }
            other => panic!("unexpected schedule {other:?}"),
        }
    }

    #[test]
    fn two_tier_policy_parses() {
        let text = r#"
[model]
kind = "one_comp"
alpha = 0.05
gamma = 0.01
cutoff_c = 15.0

[schedule]
kind = "windows"
windows = [[0.0, 700.0]]

[policy]
kind = "two_tier"
u_high = [[2.0, 0.0002]]
u_low = [[2.0, 0.00012]]
cutoff_c = 15.0

[sim]
t_end = 700.0
"#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        match &cfg.policy {
            RequirementPolicy::TwoTier { latched, .. } => assert!(latched),
            other => panic!("unexpected policy {other:?}"),
        }
    }
}
