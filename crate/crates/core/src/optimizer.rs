//! Constrained stochastic local search over lesson plans.
//!
//! The search follows the accept-if-feasible-and-cheaper rule: perturb the
//! decision vector by a small uniform random amount, re-simulate, and keep
//! the move only when every constraint holds and the learner's work strictly
//! decreased. A feasibility phase first walks an infeasible start toward the
//! feasible region by accepting any move that reduces the total constraint
//! violation. Restarts are independent (separate RNG streams) and run in
//! parallel; the aggregation picks the cheapest feasible result
//! deterministically.

use crate::engine::{self, EngineError, SimConfig, Trajectory};
use crate::models::Model;
use crate::policies::{LessonSchedule, RequirementPolicy, Window};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("optimization problem invalid: {0}")]
    Invalid(String),
    #[error("candidate has {got} coordinates, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("candidate[{index}] = {value} violates bounds [{lo}, {hi}]")]
    OutOfBounds { index: usize, value: f64, lo: f64, hi: f64 },
    #[error("no feasible plan found within budget; binding constraint: {binding} (closest deficit {deficit:.4})")]
    NoFeasible { binding: ConstraintKind, deficit: f64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// What is being optimized. The lesson window starts (and, for levels, the
/// fixed durations) come from the problem's schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    /// Lesson durations; with `shared` a single duration applies to every
    /// window and the decision vector has one coordinate.
    Durations { shared: bool },
    /// One requirement level per lesson window.
    Levels,
}

/// Terminal-knowledge, strength and per-lesson load constraints, all
/// evaluated from a simulation run to `t_eval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraints {
    pub t_eval: f64,
    /// Required total knowledge at `t_eval`.
    pub z_min: f64,
    /// Required strong knowledge at `t_eval`, as a fraction of `z_min`.
    pub strength_frac: f64,
    /// Cap on the work done within any single lesson.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max_lesson: Option<f64>,
}

/// Search tuning. The stopping rule is the per-restart evaluation budget;
/// `patience` additionally ends a climb after that many consecutive
/// rejections (0 disables it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSettings {
    pub step_scale: f64,
    pub budget: usize,
    pub restarts: usize,
    #[serde(rename = "seed")]
    pub rng_seed: u64,
    pub patience: usize,
    /// Perturb one random coordinate per iteration instead of all jointly.
    pub per_coordinate: bool,
    /// Starting vector; defaults to the durations/levels already present in
    /// the problem's schedule and policy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            step_scale: 5.0,
            budget: 20_000,
            restarts: 10,
            rng_seed: 42,
            patience: 500,
            per_coordinate: false,
            init: None,
        }
    }
}

/// A lesson-planning optimization task: minimize the learner's work subject
/// to the constraints, over durations or per-lesson levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub model: Model,
    /// Base schedule; its window starts anchor the decision.
    pub schedule: LessonSchedule,
    /// Base policy; replaced by the candidate levels for [`Decision::Levels`].
    pub policy: RequirementPolicy,
    pub decision: Decision,
    pub sim: SimConfig,
    pub constraints: Constraints,
    pub search: SearchSettings,
}

/// Which constraint failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Total knowledge at `t_eval` below `z_min`.
    KnowledgeFloor,
    /// Strong knowledge at `t_eval` below `strength_frac * z_min`.
    StrengthFloor,
    /// Work within the given lesson above `p_max_lesson`.
    LessonLoad(usize),
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::KnowledgeFloor => write!(f, "z_min"),
            ConstraintKind::StrengthFloor => write!(f, "strength_min"),
            ConstraintKind::LessonLoad(i) => write!(f, "p_max[lesson {i}]"),
        }
    }
}

/// Constraint evaluation of one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub z_final: f64,
    pub z2_final: f64,
    pub z_ok: bool,
    pub strength_ok: bool,
    pub per_lesson_work: Vec<(usize, f64)>,
    pub violated: Vec<ConstraintKind>,
}

impl FeasibilityReport {
    fn new(traj: &Trajectory, c: &Constraints) -> Self {
        let z_final = traj.final_z();
        let z2_final = traj.final_z2();
        let z_ok = z_final >= c.z_min;
        let strength_ok = z2_final >= c.strength_frac * c.z_min;
        let mut violated = Vec::new();
        if !z_ok {
            violated.push(ConstraintKind::KnowledgeFloor);
        }
        if !strength_ok {
            violated.push(ConstraintKind::StrengthFloor);
        }
        if let Some(p_max) = c.p_max_lesson {
            for (lesson, w) in &traj.per_lesson_work {
                if *w > p_max {
                    violated.push(ConstraintKind::LessonLoad(*lesson));
                }
            }
        }
        FeasibilityReport {
            feasible: violated.is_empty(),
            z_final,
            z2_final,
            z_ok,
            strength_ok,
            per_lesson_work: traj.per_lesson_work.clone(),
            violated,
        }
    }

    /// Normalized total constraint violation; 0 exactly when feasible.
    pub fn violation(&self, c: &Constraints) -> f64 {
        let mut v = 0.0;
        if c.z_min > 0.0 {
            v += ((c.z_min - self.z_final) / c.z_min).max(0.0);
        }
        let strength_floor = c.strength_frac * c.z_min;
        if strength_floor > 0.0 {
            v += ((strength_floor - self.z2_final) / strength_floor).max(0.0);
        }
        if let Some(p_max) = c.p_max_lesson {
            for (_, w) in &self.per_lesson_work {
                v += ((w - p_max) / p_max).max(0.0);
            }
        }
        v
    }

    /// The worst-violated constraint, by normalized deficit.
    pub fn binding_constraint(&self, c: &Constraints) -> Option<(ConstraintKind, f64)> {
        let mut worst: Option<(ConstraintKind, f64)> = None;
        let mut push = |kind: ConstraintKind, deficit: f64| {
            if deficit > 0.0 && worst.map_or(true, |(_, d)| deficit > d) {
                worst = Some((kind, deficit));
            }
        };
        if c.z_min > 0.0 {
            push(ConstraintKind::KnowledgeFloor, (c.z_min - self.z_final) / c.z_min);
        }
        let strength_floor = c.strength_frac * c.z_min;
        if strength_floor > 0.0 {
            push(ConstraintKind::StrengthFloor, (strength_floor - self.z2_final) / strength_floor);
        }
        if let Some(p_max) = c.p_max_lesson {
            for (lesson, w) in &self.per_lesson_work {
                push(ConstraintKind::LessonLoad(*lesson), (w - p_max) / p_max);
            }
        }
        worst
    }
}

impl OptimizationProblem {
    fn windows(&self) -> Result<&[Window], OptimizeError> {
        match &self.schedule {
            LessonSchedule::ExplicitWindows { windows } => Ok(windows),
            LessonSchedule::SchoolYears { .. } => Err(OptimizeError::Invalid(
                "lesson-plan optimization needs an explicit-windows schedule".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        let windows = self.windows()?;
        if windows.is_empty() {
            return Err(OptimizeError::Invalid("the schedule has no lesson windows".into()));
        }
        let c = &self.constraints;
        if !(c.t_eval.is_finite() && c.t_eval > 0.0) {
            return Err(OptimizeError::Invalid(format!("t_eval = {} must be > 0", c.t_eval)));
        }
        if !(c.z_min.is_finite() && c.z_min >= 0.0) {
            return Err(OptimizeError::Invalid(format!("z_min = {} must be >= 0", c.z_min)));
        }
        if !(c.strength_frac.is_finite() && c.strength_frac >= 0.0) {
            return Err(OptimizeError::Invalid(format!(
                "strength_frac = {} must be >= 0",
                c.strength_frac
            )));
        }
        if let Some(p) = c.p_max_lesson {
            if !(p.is_finite() && p > 0.0) {
                return Err(OptimizeError::Invalid(format!("p_max_lesson = {p} must be > 0")));
            }
        }
        if !(self.search.step_scale.is_finite() && self.search.step_scale > 0.0) {
            return Err(OptimizeError::Invalid("step_scale must be > 0".into()));
        }
        match self.decision {
            Decision::Levels => match &self.policy {
                RequirementPolicy::PerLessonLevels { levels } if levels.len() == windows.len() => Ok(()),
                RequirementPolicy::PerLessonLevels { levels } => Err(OptimizeError::Invalid(format!(
                    "{} levels for {} lesson windows",
                    levels.len(),
                    windows.len()
                ))),
                other => Err(OptimizeError::Invalid(format!(
                    "level optimization needs a per_lesson_levels policy, found `{}`",
                    other.name()
                ))),
            },
            Decision::Durations { .. } => {
                if self.policy.is_dual() {
                    Err(OptimizeError::Invalid(
                        "duration optimization needs a single-requirement policy".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }?;
        if let Some(init) = &self.search.init {
            if init.len() != self.dims() {
                return Err(OptimizeError::Invalid(format!(
                    "search.init has {} coordinates, the decision has {}",
                    init.len(),
                    self.dims()
                )));
            }
        }
        Ok(())
    }

    /// Number of decision coordinates.
    pub fn dims(&self) -> usize {
        let n = match &self.schedule {
            LessonSchedule::ExplicitWindows { windows } => windows.len(),
            LessonSchedule::SchoolYears { years, .. } => *years,
        };
        match self.decision {
            Decision::Durations { shared: true } => 1,
            Decision::Durations { shared: false } | Decision::Levels => n,
        }
    }

    /// Per-coordinate bounds. Durations may not overlap the next window and
    /// may not outlast the evaluation horizon; levels are only bounded below.
    pub fn bounds(&self) -> Result<Vec<(f64, f64)>, OptimizeError> {
        let windows = self.windows()?;
        match self.decision {
            Decision::Levels => Ok(vec![(0.0, f64::INFINITY); windows.len()]),
            Decision::Durations { shared } => {
                let caps: Vec<f64> = (0..windows.len())
                    .map(|i| {
                        let next = windows
                            .get(i + 1)
                            .map(|w| w.start)
                            .unwrap_or(self.constraints.t_eval);
                        (next - windows[i].start).max(0.0)
                    })
                    .collect();
                if shared {
                    let cap = caps.iter().cloned().fold(f64::INFINITY, f64::min);
                    Ok(vec![(0.0, cap)])
                } else {
                    Ok(caps.into_iter().map(|c| (0.0, c)).collect())
                }
            }
        }
    }

    /// The starting candidate: `search.init` when given, otherwise the
    /// durations or levels already present in the problem.
    pub fn initial_candidate(&self) -> Result<Vec<f64>, OptimizeError> {
        if let Some(init) = &self.search.init {
            return Ok(init.clone());
        }
        let windows = self.windows()?;
        Ok(match self.decision {
            Decision::Durations { shared: true } => vec![windows[0].duration],
            Decision::Durations { shared: false } => windows.iter().map(|w| w.duration).collect(),
            Decision::Levels => match &self.policy {
                RequirementPolicy::PerLessonLevels { levels } => levels.clone(),
                _ => unreachable!("validated above"),
            },
        })
    }

    /// Apply a candidate: build the schedule and policy it describes.
    pub fn apply_candidate(
        &self,
        candidate: &[f64],
    ) -> Result<(LessonSchedule, RequirementPolicy), OptimizeError> {
        let windows = self.windows()?;
        Ok(match self.decision {
            Decision::Durations { shared } => {
                let new_windows: Vec<Window> = windows
                    .iter()
                    .enumerate()
                    .map(|(i, w)| Window {
                        start: w.start,
                        duration: if shared { candidate[0] } else { candidate[i] },
                    })
                    .collect();
                (LessonSchedule::windows(new_windows), self.policy.clone())
            }
            Decision::Levels => (
                self.schedule.clone(),
                RequirementPolicy::PerLessonLevels { levels: candidate.to_vec() },
            ),
        })
    }
}

/// Simulate one candidate and score it: total work at `t_eval` plus the
/// constraint report. Bound-violating candidates are rejected before any
/// simulation runs.
pub fn evaluate(
    candidate: &[f64],
    problem: &OptimizationProblem,
) -> Result<(f64, FeasibilityReport), OptimizeError> {
    let expected = problem.dims();
    if candidate.len() != expected {
        return Err(OptimizeError::Dimension { got: candidate.len(), expected });
    }
    let bounds = problem.bounds()?;
    for (index, (&value, &(lo, hi))) in candidate.iter().zip(&bounds).enumerate() {
        if !(value >= lo && value <= hi) {
            return Err(OptimizeError::OutOfBounds { index, value, lo, hi });
        }
    }
    let (schedule, policy) = problem.apply_candidate(candidate)?;
    let mut cfg = problem.sim.clone();
    cfg.t_end = problem.constraints.t_eval;
    cfg.record_every = usize::MAX; // only the terminal state matters here
    cfg.focus_class = None;
    let traj = engine::simulate(&problem.model, &schedule, &policy, &cfg)?;
    let report = FeasibilityReport::new(&traj, &problem.constraints);
    Ok((traj.total_work(), report))
}

/// One accepted iterate of a climb.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub candidate: Vec<f64>,
    pub work: f64,
}

/// Per-restart outcome, for the report.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub index: usize,
    pub evaluations: usize,
    /// Best feasible candidate and its work, when the restart found one.
    pub best: Option<(Vec<f64>, f64)>,
}

/// Result of a full hill-climb run.
#[derive(Debug, Clone, PartialEq)]
pub struct HillClimbOutcome {
    pub best: Vec<f64>,
    pub work: f64,
    pub report: FeasibilityReport,
    /// Accepted iterates of the winning restart, strictly decreasing in work.
    pub trace: Vec<TracePoint>,
    pub per_restart: Vec<RestartSummary>,
}

impl HillClimbOutcome {
    /// Deterministic structured-text report (no timestamps, so identical
    /// runs render to identical bytes).
    pub fn render_report(&self) -> String {
        let fmt_vec = |v: &[f64]| {
            let inner: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
            format!("[{}]", inner.join(", "))
        };
        let mut out = String::new();
        out.push_str("optimization result\n");
        out.push_str(&format!("  best vector: {}\n", fmt_vec(&self.best)));
        out.push_str(&format!("  work: {:.3}\n", self.work));
        out.push_str(&format!(
            "  feasible: {} (z = {:.4}, z2 = {:.4})\n",
            self.report.feasible, self.report.z_final, self.report.z2_final
        ));
        out.push_str("  per-lesson work:");
        for (lesson, w) in &self.report.per_lesson_work {
            out.push_str(&format!(" [{lesson}] {w:.2}"));
        }
        out.push('\n');
        out.push_str(&format!("  accepted iterates: {}\n", self.trace.len()));
        out.push_str("  restarts:\n");
        for r in &self.per_restart {
            match &r.best {
                Some((vec, work)) => out.push_str(&format!(
                    "    #{}: work {:.3} at {} ({} evaluations)\n",
                    r.index,
                    work,
                    fmt_vec(vec),
                    r.evaluations
                )),
                None => out.push_str(&format!(
                    "    #{}: no feasible point ({} evaluations)\n",
                    r.index, r.evaluations
                )),
            }
        }
        out
    }
}

enum RestartResult {
    Feasible {
        candidate: Vec<f64>,
        work: f64,
        report: FeasibilityReport,
        trace: Vec<TracePoint>,
        evaluations: usize,
    },
    Infeasible {
        violation: f64,
        report: FeasibilityReport,
        evaluations: usize,
    },
}

fn perturbed(
    current: &[f64],
    bounds: &[(f64, f64)],
    search: &SearchSettings,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut cand = current.to_vec();
    let scale = search.step_scale;
    if search.per_coordinate {
        let j = rng.gen_range(0..cand.len());
        cand[j] = (cand[j] + rng.gen_range(-scale..=scale)).clamp(bounds[j].0, bounds[j].1);
    } else {
        for (j, x) in cand.iter_mut().enumerate() {
            *x = (*x + rng.gen_range(-scale..=scale)).clamp(bounds[j].0, bounds[j].1);
        }
    }
    cand
}

fn climb_one(
    problem: &OptimizationProblem,
    bounds: &[(f64, f64)],
    restart: usize,
) -> Result<RestartResult, OptimizeError> {
    let search = &problem.search;
    let mut rng = ChaCha8Rng::seed_from_u64(search.rng_seed);
    rng.set_stream(restart as u64);
    let mut current: Vec<f64> = problem
        .initial_candidate()?
        .iter()
        .zip(bounds)
        .map(|(&x, &(lo, hi))| x.clamp(lo, hi))
        .collect();
    let (mut work, mut report) = evaluate(&current, problem)?;
    let mut evaluations = 1usize;
    let mut remaining = search.budget;

    // Feasibility phase: walk toward the feasible region by total violation.
    let mut violation = report.violation(&problem.constraints);
    let mut stall = 0usize;
    while violation > 0.0 && remaining > 0 {
        let cand = perturbed(&current, bounds, search, &mut rng);
        let (cand_work, cand_report) = evaluate(&cand, problem)?;
        evaluations += 1;
        remaining -= 1;
        let cand_violation = cand_report.violation(&problem.constraints);
        if cand_violation < violation {
            current = cand;
            work = cand_work;
            report = cand_report;
            violation = cand_violation;
            stall = 0;
        } else {
            stall += 1;
            if search.patience > 0 && stall >= search.patience {
                break;
            }
        }
    }
    if violation > 0.0 {
        return Ok(RestartResult::Infeasible { violation, report, evaluations });
    }

    // Improvement phase: accept only feasible moves that strictly cut work.
    let mut trace = vec![TracePoint { candidate: current.clone(), work }];
    stall = 0;
    while remaining > 0 {
        let cand = perturbed(&current, bounds, search, &mut rng);
        let (cand_work, cand_report) = evaluate(&cand, problem)?;
        evaluations += 1;
        remaining -= 1;
        if cand_report.feasible && cand_work < work {
            current = cand;
            work = cand_work;
            report = cand_report;
            trace.push(TracePoint { candidate: current.clone(), work });
            stall = 0;
        } else {
            stall += 1;
            if search.patience > 0 && stall >= search.patience {
                break;
            }
        }
    }
    Ok(RestartResult::Feasible { candidate: current, work, report, trace, evaluations })
}

/// Run the full search: independent restarts, best feasible result wins
/// (ties break toward the lower restart index, so the outcome is
/// deterministic for a given seed).
pub fn hill_climb(problem: &OptimizationProblem) -> Result<HillClimbOutcome, OptimizeError> {
    problem.validate()?;
    let bounds = problem.bounds()?;
    let restarts = problem.search.restarts.max(1);
    let results: Vec<Result<RestartResult, OptimizeError>> = (0..restarts)
        .into_par_iter()
        .map(|r| climb_one(problem, &bounds, r))
        .collect();

    let mut per_restart = Vec::with_capacity(restarts);
    let mut best: Option<(Vec<f64>, f64, FeasibilityReport, Vec<TracePoint>)> = None;
    let mut closest_infeasible: Option<(f64, FeasibilityReport)> = None;
    for (index, result) in results.into_iter().enumerate() {
        match result? {
            RestartResult::Feasible { candidate, work, report, trace, evaluations } => {
                per_restart.push(RestartSummary {
                    index,
                    evaluations,
                    best: Some((candidate.clone(), work)),
                });
                if best.as_ref().map_or(true, |(_, w, _, _)| work < *w) {
                    best = Some((candidate, work, report, trace));
                }
            }
            RestartResult::Infeasible { violation, report, evaluations } => {
                per_restart.push(RestartSummary { index, evaluations, best: None });
                if closest_infeasible.as_ref().map_or(true, |(v, _)| violation < *v) {
                    closest_infeasible = Some((violation, report));
                }
            }
        }
    }

    match best {
        Some((best, work, report, trace)) => {
            Ok(HillClimbOutcome { best, work, report, trace, per_restart })
        }
        None => {
            let (_, report) = closest_infeasible.expect("at least one restart ran");
            let (binding, deficit) = report
                .binding_constraint(&problem.constraints)
                .expect("an infeasible report names a violated constraint");
            Err(OptimizeError::NoFeasible { binding, deficit })
        }
    }
}
