//! Fixed-step simulation of a model under a schedule and a policy.
//!
//! The integrator is explicit Euler with post-step clamping of every
//! knowledge stock to zero, which is exactly the discretization the
//! school-years reference run uses; accuracy is controlled through `dt` and
//! checked against the closed-form solution of the congruent regime
//! ([`closed_form_t2_congruent`]). The engine also accumulates the learner's
//! work functional `P = sum k * (U - Z) * dt`, both globally and per lesson.
//!
//! `u` is always evaluated from the pre-step state, so the congruent policy
//! holds `u - z = C` exactly at every evaluation point.

mod closed_form;
mod csv;
mod pr1;

pub use closed_form::closed_form_t2_congruent;
pub use csv::{read_trajectory_csv, trajectory_to_csv, write_trajectory_csv, CsvError};
pub use pr1::simulate_pr1;

use crate::models::{Model, OneCompParams, ParamError, TwoCompT1Params, TwoCompT2Params};
use crate::policies::{LessonSchedule, PolicyError, PolicyState, Requirement, RequirementPolicy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("model `{model}` cannot be driven by policy `{policy}`")]
    Incompatible { model: &'static str, policy: &'static str },
    #[error("simulation config invalid: {0}")]
    BadConfig(String),
    #[error(
        "dt = {dt} overshoots for these parameters (fastest rate constant {lambda}); use dt <= {max_dt:.6}"
    )]
    UnstableDt { dt: f64, lambda: f64, max_dt: f64 },
    #[error("state became non-finite at t = {t}; reduce dt or check the requirement policy")]
    NonFinite { t: f64 },
}

fn default_dt() -> f64 {
    0.01
}

fn default_record_every() -> usize {
    1
}

/// Time-stepping configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Step size.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Simulation horizon; the run covers `[0, t_end]`.
    pub t_end: f64,
    /// Initial weak (or only) knowledge stock.
    #[serde(default)]
    pub z1_init: f64,
    /// Initial strong knowledge stock (ignored by the one-component model).
    #[serde(default)]
    pub z2_init: f64,
    /// When positive, every knowledge stock starts at least at this value.
    /// Needed with leverage exponents `b > 0`, where `z = 0` is a trap.
    #[serde(default)]
    pub seed_knowledge: f64,
    /// Record every Nth step (the first and last steps are always kept).
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Reproduce the school-years reference run step for step, including its
    /// calendar quirks. See [`simulate_pr1`].
    #[serde(default)]
    pub pr1_compat: bool,
    /// For multi-class runs: additionally record this class's own stocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_class: Option<usize>,
}

impl SimConfig {
    pub fn new(t_end: f64) -> Self {
        SimConfig {
            dt: 0.01,
            t_end,
            z1_init: 0.0,
            z2_init: 0.0,
            seed_knowledge: 0.0,
            record_every: 1,
            pr1_compat: false,
            focus_class: None,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(EngineError::BadConfig(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(EngineError::BadConfig(format!("t_end = {} must be > 0", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(EngineError::BadConfig("record_every must be >= 1".into()));
        }
        for (name, v) in [
            ("z1_init", self.z1_init),
            ("z2_init", self.z2_init),
            ("seed_knowledge", self.seed_knowledge),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EngineError::BadConfig(format!("{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }

    pub(crate) fn n_steps(&self) -> Result<usize, EngineError> {
        let n = (self.t_end / self.dt).round();
        if n > 2e8 {
            return Err(EngineError::BadConfig(format!(
                "t_end / dt = {n:.0} steps is beyond what this engine will attempt"
            )));
        }
        Ok(n as usize)
    }
}

/// One recorded point. `k` and `u` are the controls in force at `t` (they
/// drive the step that starts there); the state and `p_cum` are the values
/// reached at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub k: u8,
    /// Requirement level (category-1 level for dual-requirement runs).
    pub u1: f64,
    /// Category-2 requirement level; 0 for single-requirement runs.
    pub u2: f64,
    pub z1: f64,
    pub z2: f64,
    pub z: f64,
    pub p_cum: f64,
}

/// Things that happened along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// The motivation gate tripped: the requirement ran ahead of knowledge
    /// by more than the cutoff and learning shut off.
    GateTripped { t: f64 },
    /// The gap fell back within the cutoff and learning resumed.
    GateRestored { t: f64 },
    /// The two-tier policy dropped from the high to the low track.
    AspirationDropped { t: f64 },
}

/// A single class's stocks recorded alongside the totals, aligned with
/// `samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusSeries {
    pub class_index: usize,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
}

/// A simulated trajectory with per-lesson work accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// True when samples carry two requirement levels (`u1`, `u2`).
    pub dual_u: bool,
    pub samples: Vec<Sample>,
    /// Work accumulated per lesson ordinal, one entry per lesson of the
    /// schedule (zero for lessons the horizon never reached).
    pub per_lesson_work: Vec<(usize, f64)>,
    pub events: Vec<Event>,
    pub focus: Option<FocusSeries>,
    /// Multi-class runs: the running maximum of each class's stocks.
    pub class_peaks: Option<Vec<(f64, f64)>>,
    /// Multi-class runs: each class's stocks at the end of the run.
    pub final_classes: Option<Vec<(f64, f64)>>,
}

impl Trajectory {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("a trajectory always has at least the initial sample")
    }

    pub fn final_z(&self) -> f64 {
        self.final_sample().z
    }

    pub fn final_z2(&self) -> f64 {
        self.final_sample().z2
    }

    /// Total work `P` accumulated over the whole run.
    pub fn total_work(&self) -> f64 {
        self.final_sample().p_cum
    }

    pub fn lesson_work_sum(&self) -> f64 {
        self.per_lesson_work.iter().map(|(_, w)| w).sum()
    }

    /// Times at which the motivation gate tripped.
    pub fn gate_trip_times(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::GateTripped { t } => Some(*t),
                _ => None,
            })
            .collect()
    }

    /// Time of the two-tier aspiration drop, if it happened.
    pub fn aspiration_drop_time(&self) -> Option<f64> {
        self.events.iter().find_map(|e| match e {
            Event::AspirationDropped { t } => Some(*t),
            _ => None,
        })
    }
}

struct Recorder {
    every: usize,
    samples: Vec<Sample>,
    focus_class: Option<usize>,
    focus_z1: Vec<f64>,
    focus_z2: Vec<f64>,
    last: Option<usize>,
}

impl Recorder {
    fn new(every: usize, focus_class: Option<usize>) -> Self {
        Recorder { every, samples: Vec::new(), focus_class, focus_z1: Vec::new(), focus_z2: Vec::new(), last: None }
    }

    fn record(&mut self, n: usize, is_last: bool, sample: Sample, focus: Option<(f64, f64)>) {
        if n % self.every != 0 && !is_last {
            return;
        }
        if self.last == Some(n) {
            return;
        }
        self.last = Some(n);
        self.samples.push(sample);
        if let Some((f1, f2)) = focus {
            self.focus_z1.push(f1);
            self.focus_z2.push(f2);
        }
    }

    fn into_focus(self) -> (Vec<Sample>, Option<FocusSeries>) {
        let focus = self.focus_class.map(|class_index| FocusSeries {
            class_index,
            z1: self.focus_z1,
            z2: self.focus_z2,
        });
        (self.samples, focus)
    }
}

/// Conservative bound on the fastest linear rate constant of the model, used
/// for the pre-flight overshoot guard. Only meaningful for `b = 0`; with
/// leverage the runtime non-finite check is the backstop.
fn rate_constant_bound(model: &Model, policy: &RequirementPolicy) -> Option<f64> {
    match model {
        Model::OneComp(p) => {
            if p.b > 0.0 {
                None
            } else {
                Some(p.alpha + p.gamma)
            }
        }
        Model::TwoCompT1(p) => {
            if p.b > 0.0 {
                return None;
            }
            let max_scale = match policy {
                RequirementPolicy::YearMatrix { alpha_scale, .. } => {
                    alpha_scale.iter().cloned().fold(0.0, f64::max)
                }
                _ => 1.0,
            };
            Some((p.alpha1 * max_scale + p.gamma1).max(p.alpha2 * max_scale + p.gamma2))
        }
        Model::TwoCompT2(p) => Some((p.alpha1 + p.alpha2 + p.gamma1).max(p.gamma2)),
    }
}

fn check_step_size(model: &Model, policy: &RequirementPolicy, cfg: &SimConfig) -> Result<(), EngineError> {
    if let Some(lambda) = rate_constant_bound(model, policy) {
        if lambda > 0.0 && lambda * cfg.dt > 1.0 {
            return Err(EngineError::UnstableDt { dt: cfg.dt, lambda, max_dt: 1.0 / lambda });
        }
    }
    Ok(())
}

/// Simulate `model` under `schedule` and `policy` on `[0, cfg.t_end]`.
///
/// Combinations: the year-matrix policy requires the type-1 two-component
/// model on a school-years schedule (it is the only dual-requirement
/// pairing); every single-requirement policy drives the one-component or the
/// consolidating two-component model.
pub fn simulate(
    model: &Model,
    schedule: &LessonSchedule,
    policy: &RequirementPolicy,
    cfg: &SimConfig,
) -> Result<Trajectory, EngineError> {
    model.validate()?;
    schedule.validate()?;
    policy.validate(schedule)?;
    cfg.validate()?;
    check_step_size(model, policy, cfg)?;
    if cfg.pr1_compat {
        return simulate_pr1(model, schedule, policy, cfg);
    }
    match (model, policy) {
        (Model::TwoCompT1(p), RequirementPolicy::YearMatrix { .. }) => {
            run_year_matrix(p, schedule, policy, cfg)
        }
        (Model::OneComp(p), _) if !policy.is_dual() => run_single(&OneCompStepper(*p), schedule, policy, cfg),
        (Model::TwoCompT2(p), _) if !policy.is_dual() => run_single(&T2Stepper(*p), schedule, policy, cfg),
        _ => Err(EngineError::Incompatible { model: model.name(), policy: policy.name() }),
    }
}

/// A model the single-requirement driver can step: two stocks (the second
/// may be unused) against one requirement level.
trait SingleUModel {
    /// Whether the model actually uses the second stock.
    const SECOND_STOCK: bool;
    fn rates(&self, z1: f64, z2: f64, u: f64, k: bool) -> (f64, f64);
    /// `Some(open)` when the model has a motivation gate.
    fn gate_state(&self, z: f64, u: f64) -> Option<bool>;
}

struct OneCompStepper(OneCompParams);

impl SingleUModel for OneCompStepper {
    const SECOND_STOCK: bool = false;

    #[inline]
    fn rates(&self, z1: f64, _z2: f64, u: f64, k: bool) -> (f64, f64) {
        (self.0.rate(z1, u, k), 0.0)
    }

    #[inline]
    fn gate_state(&self, z: f64, u: f64) -> Option<bool> {
        Some(self.0.gate_open(z, u))
    }
}

struct T2Stepper(TwoCompT2Params);

impl SingleUModel for T2Stepper {
    const SECOND_STOCK: bool = true;

    #[inline]
    fn rates(&self, z1: f64, z2: f64, u: f64, k: bool) -> (f64, f64) {
        self.0.rates(z1, z2, u, k)
    }

    #[inline]
    fn gate_state(&self, _z: f64, _u: f64) -> Option<bool> {
        None
    }
}

fn run_single<M: SingleUModel>(
    model: &M,
    schedule: &LessonSchedule,
    policy: &RequirementPolicy,
    cfg: &SimConfig,
) -> Result<Trajectory, EngineError> {
    let dt = cfg.dt;
    let n_steps = cfg.n_steps()?;
    let mut z1 = cfg.z1_init.max(cfg.seed_knowledge);
    let mut z2 = if M::SECOND_STOCK { cfg.z2_init.max(cfg.seed_knowledge) } else { 0.0 };
    let mut p_cum = 0.0;
    let mut bins = vec![0.0; schedule.lesson_count()];
    let mut rec = Recorder::new(cfg.record_every, None);
    let mut events = Vec::new();
    let mut policy_state = PolicyState::default();
    let mut gate_open = true;
    let mut drop_seen = false;

    for n in 0..=n_steps {
        let t = n as f64 * dt;
        let (k, lesson) = schedule.activity(t);
        let z = z1 + z2;
        let u = match policy.requirement(t, z, lesson, k, &mut policy_state) {
            Requirement::Single(u) => u,
            Requirement::PerCategory(..) => unreachable!("dual policies are rejected upfront"),
        };
        if let Some(open) = model.gate_state(z, u) {
            if open != gate_open {
                events.push(if open { Event::GateRestored { t } } else { Event::GateTripped { t } });
                gate_open = open;
            }
        }
        if !drop_seen {
            if let Some(td) = policy_state.dropped_at {
                events.push(Event::AspirationDropped { t: td });
                drop_seen = true;
            }
        }
        rec.record(
            n,
            n == n_steps,
            Sample { t, k: k as u8, u1: u, u2: 0.0, z1, z2, z, p_cum },
            None,
        );
        if n == n_steps {
            break;
        }
        if k {
            let w = (u - z) * dt;
            p_cum += w;
            bins[lesson.expect("active instants always carry a lesson index")] += w;
        }
        let (r1, r2) = model.rates(z1, z2, u, k);
        z1 = (z1 + r1 * dt).max(0.0);
        z2 = (z2 + r2 * dt).max(0.0);
        if !(z1.is_finite() && z2.is_finite() && p_cum.is_finite()) {
            return Err(EngineError::NonFinite { t: t + dt });
        }
    }

    let (samples, _) = rec.into_focus();
    Ok(Trajectory {
        dual_u: false,
        samples,
        per_lesson_work: bins.into_iter().enumerate().collect(),
        events,
        focus: None,
        class_peaks: None,
        final_classes: None,
    })
}

fn run_year_matrix(
    params: &TwoCompT1Params,
    schedule: &LessonSchedule,
    policy: &RequirementPolicy,
    cfg: &SimConfig,
) -> Result<Trajectory, EngineError> {
    let (year_length, years) = match schedule {
        LessonSchedule::SchoolYears { year_length, years, .. } => (*year_length, *years),
        LessonSchedule::ExplicitWindows { .. } => {
            return Err(EngineError::Incompatible { model: "two_comp_t1", policy: policy.name() })
        }
    };
    let (mat_u1, mat_u2) = match policy {
        RequirementPolicy::YearMatrix { u1, u2, .. } => (u1.clone(), u2.clone()),
        _ => return Err(EngineError::Incompatible { model: "two_comp_t1", policy: policy.name() }),
    };
    if let Some(f) = cfg.focus_class {
        if f >= years {
            return Err(EngineError::BadConfig(format!(
                "focus_class = {f} but the schedule has only {years} years"
            )));
        }
    }
    let scaled: Vec<TwoCompT1Params> = (0..years)
        .map(|y| TwoCompT1Params {
            alpha1: params.alpha1 * policy.alpha_scale(y),
            alpha2: params.alpha2 * policy.alpha_scale(y),
            ..*params
        })
        .collect();

    let dt = cfg.dt;
    let n_steps = cfg.n_steps()?;
    let init1 = cfg.z1_init.max(cfg.seed_knowledge);
    let init2 = cfg.z2_init.max(cfg.seed_knowledge);
    let mut c1 = vec![init1; years];
    let mut c2 = vec![init2; years];
    let mut peaks = vec![(init1, init2); years];
    let mut p_cum = 0.0;
    let mut bins = vec![0.0; years];
    let mut rec = Recorder::new(cfg.record_every, cfg.focus_class);
    let mut policy_state = PolicyState::default();

    for n in 0..=n_steps {
        let t = n as f64 * dt;
        let (k, lesson) = schedule.activity(t);
        let year = ((t / year_length) as usize).min(years - 1);
        let z1_total: f64 = c1.iter().sum();
        let z2_total: f64 = c2.iter().sum();
        let (u1, u2) = match policy.requirement(t, z1_total + z2_total, Some(year), k, &mut policy_state) {
            Requirement::PerCategory(u1, u2) => (u1, u2),
            Requirement::Single(_) => unreachable!("year matrix is always dual"),
        };
        rec.record(
            n,
            n == n_steps,
            Sample {
                t,
                k: k as u8,
                u1,
                u2,
                z1: z1_total,
                z2: z2_total,
                z: z1_total + z2_total,
                p_cum,
            },
            cfg.focus_class.map(|f| (c1[f], c2[f])),
        );
        if n == n_steps {
            break;
        }
        if k {
            let w = (u1 + u2 - c1[year] - c2[year]) * dt;
            p_cum += w;
            bins[lesson.expect("active instants always carry a lesson index")] += w;
        }
        for i in 0..years {
            let taught = k && i == year;
            let (r1, r2) = scaled[i].rates(c1[i], c2[i], mat_u1[i], mat_u2[i], taught, taught);
            c1[i] = (c1[i] + r1 * dt).max(0.0);
            c2[i] = (c2[i] + r2 * dt).max(0.0);
            if !(c1[i].is_finite() && c2[i].is_finite()) {
                return Err(EngineError::NonFinite { t: t + dt });
            }
            peaks[i].0 = peaks[i].0.max(c1[i]);
            peaks[i].1 = peaks[i].1.max(c2[i]);
        }
    }

    let (samples, focus) = rec.into_focus();
    Ok(Trajectory {
        dual_u: true,
        samples,
        per_lesson_work: bins.into_iter().enumerate().collect(),
        events: Vec::new(),
        focus,
        class_peaks: Some(peaks),
        final_classes: Some(c1.into_iter().zip(c2).collect()),
    })
}

#[cfg(test)]
mod tests;
