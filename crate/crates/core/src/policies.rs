//! Lesson schedules and teacher requirement policies.
//!
//! A [`LessonSchedule`] decides when the activity indicator `k(t)` is 1 and
//! which lesson a time instant belongs to. A [`RequirementPolicy`] produces
//! the requirement level(s) `U(t)` the teacher presents, possibly as a
//! function of the learner's current knowledge (congruent teaching) or with
//! trajectory-local state (the two-tier aspiration latch, owned by the
//! engine through [`PolicyState`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("schedule invalid: {0}")]
    BadSchedule(String),
    #[error("policy invalid: {0}")]
    BadPolicy(String),
    #[error("policy `{policy}` cannot be combined with schedule `{schedule}`: {reason}")]
    Mismatch {
        policy: &'static str,
        schedule: &'static str,
        reason: String,
    },
}

/// A single teaching window: active on `[start, start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub duration: f64,
}

impl Window {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end()
    }
}

/// When the activity indicator is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LessonSchedule {
    /// Explicit, sorted, non-overlapping teaching windows.
    ExplicitWindows { windows: Vec<Window> },
    /// A school calendar: each year is `year_length` long, teaching runs
    /// through the first `session_length` of it, and nothing is taught
    /// after `final_cut`.
    SchoolYears {
        year_length: f64,
        session_length: f64,
        years: usize,
        final_cut: f64,
    },
}

impl LessonSchedule {
    /// Explicit windows, sorted by start.
    pub fn windows(windows: Vec<Window>) -> Self {
        LessonSchedule::ExplicitWindows { windows }
    }

    /// The standard calendar: 12-unit years, 9-unit sessions, teaching ends
    /// 3 units before the last year does.
    pub fn school_years(years: usize) -> Self {
        LessonSchedule::SchoolYears {
            year_length: 12.0,
            session_length: 9.0,
            years,
            final_cut: 12.0 * years as f64 - 3.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LessonSchedule::ExplicitWindows { .. } => "windows",
            LessonSchedule::SchoolYears { .. } => "school_years",
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        match self {
            LessonSchedule::ExplicitWindows { windows } => {
                for w in windows {
                    if !(w.start.is_finite() && w.duration.is_finite()) || w.start < 0.0 || w.duration < 0.0 {
                        return Err(PolicyError::BadSchedule(format!(
                            "window at start = {} with duration = {} must have start >= 0 and duration >= 0",
                            w.start, w.duration
                        )));
                    }
                }
                for pair in windows.windows(2) {
                    if pair[1].start < pair[0].start {
                        return Err(PolicyError::BadSchedule("windows must be sorted by start".into()));
                    }
                    if pair[0].end() > pair[1].start {
                        return Err(PolicyError::BadSchedule(format!(
                            "windows overlap: [{}, {}) and [{}, {})",
                            pair[0].start,
                            pair[0].end(),
                            pair[1].start,
                            pair[1].end()
                        )));
                    }
                }
                Ok(())
            }
            LessonSchedule::SchoolYears { year_length, session_length, years, final_cut } => {
                if *year_length <= 0.0 || !year_length.is_finite() {
                    return Err(PolicyError::BadSchedule("year_length must be > 0".into()));
                }
                if *session_length < 0.0 || session_length > year_length {
                    return Err(PolicyError::BadSchedule(
                        "session_length must lie in [0, year_length]".into(),
                    ));
                }
                if *years == 0 {
                    return Err(PolicyError::BadSchedule("years must be >= 1".into()));
                }
                if !final_cut.is_finite() || *final_cut < 0.0 {
                    return Err(PolicyError::BadSchedule("final_cut must be >= 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Activity indicator at `t` plus the ordinal of the containing lesson
    /// (the window index, or the school year) for per-lesson accounting.
    pub fn activity(&self, t: f64) -> (bool, Option<usize>) {
        match self {
            LessonSchedule::ExplicitWindows { windows } => {
                for (i, w) in windows.iter().enumerate() {
                    if t < w.start {
                        break;
                    }
                    if w.contains(t) {
                        return (true, Some(i));
                    }
                }
                (false, None)
            }
            LessonSchedule::SchoolYears { year_length, session_length, years, final_cut } => {
                if t > *final_cut || t < 0.0 {
                    return (false, None);
                }
                let year = (t / year_length) as usize;
                if year >= *years {
                    return (false, None);
                }
                let pos = t - year as f64 * year_length;
                if pos < *session_length {
                    (true, Some(year))
                } else {
                    (false, None)
                }
            }
        }
    }

    /// Number of distinct lessons (windows or school years).
    pub fn lesson_count(&self) -> usize {
        match self {
            LessonSchedule::ExplicitWindows { windows } => windows.len(),
            LessonSchedule::SchoolYears { years, .. } => *years,
        }
    }

    /// Total teaching time on `[0, t_end]`, computed from the window layout
    /// (not by quadrature).
    pub fn total_teaching_time(&self, t_end: f64) -> f64 {
        match self {
            LessonSchedule::ExplicitWindows { windows } => windows
                .iter()
                .map(|w| (w.end().min(t_end) - w.start.min(t_end)).max(0.0))
                .sum(),
            LessonSchedule::SchoolYears { year_length, session_length, years, final_cut } => {
                let mut total = 0.0;
                for y in 0..*years {
                    let start = y as f64 * year_length;
                    let end = (start + session_length).min(*final_cut).min(t_end);
                    total += (end - start.min(end)).max(0.0);
                }
                total
            }
        }
    }
}

/// A polynomial in `t`, stored as `(power, coefficient)` terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<(f64, f64)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, f64)>) -> Self {
        Polynomial { terms }
    }

    /// `c * t^p` for a single term.
    pub fn single(power: f64, coefficient: f64) -> Self {
        Polynomial { terms: vec![(power, coefficient)] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|(p, c)| c * t.powf(*p)).sum()
    }
}

/// How the teacher's requirement level is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RequirementPolicy {
    /// `u(t)` as a polynomial in time.
    Polynomial(Polynomial),
    /// Aspiration switching: the learner tracks `u_high` until it runs ahead
    /// by more than `cutoff_c`, then drops to `u_low`. With `latched` the
    /// downgrade is permanent; otherwise the comparison repeats every step.
    TwoTier {
        u_high: Polynomial,
        u_low: Polynomial,
        cutoff_c: f64,
        latched: bool,
    },
    /// Per-year requirement levels for the two knowledge categories, plus a
    /// per-year scaling of the model's learning coefficients.
    YearMatrix {
        u1: Vec<f64>,
        u2: Vec<f64>,
        alpha_scale: Vec<f64>,
    },
    /// Congruent (maximally motivating) teaching: `u = z + cutoff_c`
    /// whenever a lesson is running.
    Congruent { cutoff_c: f64 },
    /// One constant level per lesson window.
    PerLessonLevels { levels: Vec<f64> },
}

/// A requirement evaluation: one level, or one per knowledge category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Requirement {
    Single(f64),
    PerCategory(f64, f64),
}

impl Requirement {
    /// The single level; panics on a per-category requirement.
    pub fn single(self) -> f64 {
        match self {
            Requirement::Single(u) => u,
            Requirement::PerCategory(..) => panic!("expected a single requirement level"),
        }
    }
}

/// Trajectory-local policy state, owned by the simulation run. Policies
/// themselves stay immutable and shareable.
#[derive(Debug, Clone, Default)]
pub struct PolicyState {
    /// Time at which the two-tier policy first dropped to the low track.
    pub dropped_at: Option<f64>,
}

impl RequirementPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            RequirementPolicy::Polynomial(_) => "polynomial",
            RequirementPolicy::TwoTier { .. } => "two_tier",
            RequirementPolicy::YearMatrix { .. } => "year_matrix",
            RequirementPolicy::Congruent { .. } => "congruent",
            RequirementPolicy::PerLessonLevels { .. } => "per_lesson_levels",
        }
    }

    /// True when the policy yields one level per knowledge category.
    pub fn is_dual(&self) -> bool {
        matches!(self, RequirementPolicy::YearMatrix { .. })
    }

    pub fn validate(&self, schedule: &LessonSchedule) -> Result<(), PolicyError> {
        match self {
            RequirementPolicy::Polynomial(_) => Ok(()),
            RequirementPolicy::TwoTier { cutoff_c, .. } => {
                if *cutoff_c > 0.0 && cutoff_c.is_finite() {
                    Ok(())
                } else {
                    Err(PolicyError::BadPolicy("two-tier cutoff_c must be > 0".into()))
                }
            }
            RequirementPolicy::YearMatrix { u1, u2, alpha_scale } => {
                let years = match schedule {
                    LessonSchedule::SchoolYears { years, .. } => *years,
                    LessonSchedule::ExplicitWindows { .. } => {
                        return Err(PolicyError::Mismatch {
                            policy: "year_matrix",
                            schedule: schedule.name(),
                            reason: "per-year matrices need a school-years schedule".into(),
                        })
                    }
                };
                for (name, list) in [("u1", u1), ("u2", u2), ("alpha_scale", alpha_scale)] {
                    if list.len() != years {
                        return Err(PolicyError::BadPolicy(format!(
                            "year_matrix `{name}` has {} entries but the schedule has {years} years",
                            list.len()
                        )));
                    }
                    if list.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(PolicyError::BadPolicy(format!(
                            "year_matrix `{name}` entries must be finite and >= 0"
                        )));
                    }
                }
                Ok(())
            }
            RequirementPolicy::Congruent { cutoff_c } => {
                if *cutoff_c > 0.0 && cutoff_c.is_finite() {
                    Ok(())
                } else {
                    Err(PolicyError::BadPolicy("congruent cutoff_c must be > 0".into()))
                }
            }
            RequirementPolicy::PerLessonLevels { levels } => {
                if levels.len() != schedule.lesson_count() {
                    return Err(PolicyError::Mismatch {
                        policy: "per_lesson_levels",
                        schedule: schedule.name(),
                        reason: format!(
                            "{} levels for {} lessons",
                            levels.len(),
                            schedule.lesson_count()
                        ),
                    });
                }
                if levels.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(PolicyError::BadPolicy("levels must be finite and >= 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Requirement level(s) at time `t` given the learner's total knowledge.
    ///
    /// `lesson` is the containing lesson ordinal (window index, or school
    /// year for the year matrix); `k` is the activity indicator at `t`. The
    /// two-tier latch lives in `state` and is advanced by this call.
    pub fn requirement(
        &self,
        t: f64,
        z_total: f64,
        lesson: Option<usize>,
        k: bool,
        state: &mut PolicyState,
    ) -> Requirement {
        match self {
            RequirementPolicy::Polynomial(p) => Requirement::Single(p.eval(t)),
            RequirementPolicy::TwoTier { u_high, u_low, cutoff_c, latched } => {
                if *latched && state.dropped_at.is_some() {
                    return Requirement::Single(u_low.eval(t));
                }
                let hi = u_high.eval(t);
                if hi - z_total > *cutoff_c {
                    if state.dropped_at.is_none() {
                        state.dropped_at = Some(t);
                    }
                    Requirement::Single(u_low.eval(t))
                } else {
                    Requirement::Single(hi)
                }
            }
            RequirementPolicy::YearMatrix { u1, u2, .. } => {
                // Callers pass the containing year; it is clamped so the
                // last year's levels persist after school ends.
                let y = lesson.unwrap_or(0).min(u1.len().saturating_sub(1));
                Requirement::PerCategory(u1[y], u2[y])
            }
            RequirementPolicy::Congruent { cutoff_c } => {
                if k {
                    Requirement::Single(z_total + cutoff_c)
                } else {
                    Requirement::Single(z_total)
                }
            }
            RequirementPolicy::PerLessonLevels { levels } => Requirement::Single(
                lesson.and_then(|i| levels.get(i).copied()).unwrap_or(0.0),
            ),
        }
    }

    /// Per-year scaling of the learning coefficients (year matrix only).
    pub fn alpha_scale(&self, year: usize) -> f64 {
        match self {
            RequirementPolicy::YearMatrix { alpha_scale, .. } => {
                alpha_scale[year.min(alpha_scale.len().saturating_sub(1))]
            }
            _ => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn three_windows() -> LessonSchedule {
        LessonSchedule::windows(vec![
            Window { start: 0.0, duration: 312.0 },
            Window { start: 500.0, duration: 312.0 },
            Window { start: 1000.0, duration: 312.0 },
        ])
    }

    #[test]
    fn activity_inside_first_window() {
        assert_eq!(three_windows().activity(250.0), (true, Some(0)));
    }

    #[test]
    fn activity_between_windows() {
        assert_eq!(three_windows().activity(450.0), (false, None));
    }

    #[test]
    fn activity_window_boundaries_are_half_open() {
        let s = three_windows();
        assert_eq!(s.activity(0.0), (true, Some(0)));
        assert_eq!(s.activity(312.0), (false, None));
        assert_eq!(s.activity(500.0), (true, Some(1)));
    }

    #[test]
    fn school_years_vacation_month_of_final_year() {
        // t = 129 is month 9 of year 11: vacation, and also the final cut
        let s = LessonSchedule::school_years(11);
        assert_eq!(s.activity(129.0), (false, None));
        assert_eq!(s.activity(128.9), (true, Some(10)));
        assert_eq!(s.activity(130.0), (false, None));
    }

    #[test]
    fn school_years_teaching_months() {
        let s = LessonSchedule::school_years(11);
        assert_eq!(s.activity(0.0), (true, Some(0)));
        assert_eq!(s.activity(8.99), (true, Some(0)));
        assert_eq!(s.activity(9.0), (false, None));
        assert_eq!(s.activity(12.0), (true, Some(1)));
        assert_eq!(s.activity(13.0), (true, Some(1)));
    }

    #[test]
    fn total_teaching_time_matches_window_sum() {
        let s = three_windows();
        assert_relative_eq!(s.total_teaching_time(2000.0), 936.0);
        assert_relative_eq!(s.total_teaching_time(250.0), 250.0);
        let y = LessonSchedule::school_years(11);
        assert_relative_eq!(y.total_teaching_time(132.0), 99.0); // 11 sessions of 9
    }

    #[test]
    fn overlapping_windows_rejected() {
        let s = LessonSchedule::windows(vec![
            Window { start: 0.0, duration: 600.0 },
            Window { start: 500.0, duration: 100.0 },
        ]);
        assert!(s.validate().is_err());
        // touching is fine
        let s = LessonSchedule::windows(vec![
            Window { start: 0.0, duration: 500.0 },
            Window { start: 500.0, duration: 100.0 },
        ]);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn polynomial_requirement_example() {
        let p = RequirementPolicy::Polynomial(Polynomial::single(2.0, 0.0002));
        let mut st = PolicyState::default();
        let u = p.requirement(100.0, 0.0, None, true, &mut st).single();
        assert_relative_eq!(u, 2.0);
    }

    #[test]
    fn congruent_requirement_keeps_constant_gap() {
        let p = RequirementPolicy::Congruent { cutoff_c: 30.0 };
        let mut st = PolicyState::default();
        assert_relative_eq!(p.requirement(0.0, 42.5, Some(0), true, &mut st).single(), 72.5);
        // outside lessons the policy just mirrors the knowledge level
        assert_relative_eq!(p.requirement(0.0, 42.5, None, false, &mut st).single(), 42.5);
    }

    #[test]
    fn year_matrix_second_year_levels() {
        let p = RequirementPolicy::YearMatrix {
            u1: vec![50.0, 46.0, 42.0],
            u2: vec![4.0, 8.0, 14.0],
            alpha_scale: vec![1.0, 1.5, 2.0],
        };
        let mut st = PolicyState::default();
        // t = 13 lies in year index 1
        match p.requirement(13.0, 0.0, Some(1), true, &mut st) {
            Requirement::PerCategory(u1, u2) => {
                assert_relative_eq!(u1, 46.0);
                assert_relative_eq!(u2, 8.0);
            }
            other => panic!("expected per-category requirement, got {other:?}"),
        }
        assert_relative_eq!(p.alpha_scale(1), 1.5);
    }

    #[test]
    fn two_tier_latch_is_permanent() {
        let p = RequirementPolicy::TwoTier {
            u_high: Polynomial::single(1.0, 1.0),  // u = t
            u_low: Polynomial::single(1.0, 0.5),   // u = t/2
            cutoff_c: 10.0,
            latched: true,
        };
        let mut st = PolicyState::default();
        // gap below cutoff: high track
        assert_relative_eq!(p.requirement(5.0, 0.0, None, true, &mut st).single(), 5.0);
        assert!(st.dropped_at.is_none());
        // gap above cutoff: drops, and the drop time is recorded
        assert_relative_eq!(p.requirement(20.0, 5.0, None, true, &mut st).single(), 10.0);
        assert_eq!(st.dropped_at, Some(20.0));
        // even if the learner later catches up, the low track persists
        assert_relative_eq!(p.requirement(30.0, 1000.0, None, true, &mut st).single(), 15.0);
        assert_eq!(st.dropped_at, Some(20.0));
    }

    #[test]
    fn two_tier_unlatched_reconsiders_every_step() {
        let p = RequirementPolicy::TwoTier {
            u_high: Polynomial::single(1.0, 1.0),
            u_low: Polynomial::single(1.0, 0.5),
            cutoff_c: 10.0,
            latched: false,
        };
        let mut st = PolicyState::default();
        assert_relative_eq!(p.requirement(20.0, 5.0, None, true, &mut st).single(), 10.0);
        // knowledge caught up: back on the high track
        assert_relative_eq!(p.requirement(30.0, 25.0, None, true, &mut st).single(), 30.0);
    }

    #[test]
    fn per_lesson_levels_outside_lessons_is_zero() {
        let p = RequirementPolicy::PerLessonLevels { levels: vec![36.0, 74.0] };
        let mut st = PolicyState::default();
        assert_eq!(p.requirement(50.0, 0.0, None, false, &mut st).single(), 0.0);
        assert_eq!(p.requirement(50.0, 0.0, Some(1), true, &mut st).single(), 74.0);
    }

    #[test]
    fn year_matrix_needs_matching_lengths() {
        let s = LessonSchedule::school_years(11);
        let p = RequirementPolicy::YearMatrix {
            u1: vec![50.0; 10],
            u2: vec![4.0; 11],
            alpha_scale: vec![1.0; 11],
        };
        assert!(p.validate(&s).is_err());
    }

    #[test]
    fn per_lesson_levels_need_one_level_per_window() {
        let p = RequirementPolicy::PerLessonLevels { levels: vec![10.0, 20.0] };
        assert!(p.validate(&three_windows()).is_err());
    }
}
