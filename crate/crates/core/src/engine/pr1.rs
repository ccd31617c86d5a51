//! Step-for-step reproduction of the school-years reference run.
//!
//! The original program has two quirks this mode preserves deliberately:
//!
//! 1. The vacation flag is computed and then overwritten by the per-class
//!    gate inside the update loop, so the current class keeps being taught
//!    through vacation months. (The corrected mode in [`super::simulate`]
//!    applies the calendar properly.)
//! 2. Calendar decisions use `round(t)` with banker's rounding and integer
//!    division, so year transitions happen at half-integer times rather
//!    than at year boundaries.
//!
//! Time is accumulated by repeated addition (`t += dt`), exactly as in the
//! original, so gating decisions land on the same steps.

use super::{EngineError, Recorder, Sample, SimConfig, Trajectory};
use crate::models::{Model, TwoCompT1Params};
use crate::policies::{LessonSchedule, RequirementPolicy};

/// Banker's rounding to an integer, as Pascal's `Round` does.
#[inline]
fn pascal_round(x: f64) -> i64 {
    x.round_ties_even() as i64
}

/// Run the compatibility-mode simulation. Requires the type-1 two-component
/// model with a year-matrix policy on a school-years schedule whose year and
/// session lengths are whole numbers.
pub fn simulate_pr1(
    model: &Model,
    schedule: &LessonSchedule,
    policy: &RequirementPolicy,
    cfg: &SimConfig,
) -> Result<Trajectory, EngineError> {
    let params = match model {
        Model::TwoCompT1(p) => p,
        _ => return Err(EngineError::Incompatible { model: model.name(), policy: policy.name() }),
    };
    let (year_length, session_length, years, final_cut) = match schedule {
        LessonSchedule::SchoolYears { year_length, session_length, years, final_cut } => {
            (*year_length, *session_length, *years, *final_cut)
        }
        _ => return Err(EngineError::Incompatible { model: model.name(), policy: policy.name() }),
    };
    let (mat_u1, mat_u2, scale) = match policy {
        RequirementPolicy::YearMatrix { u1, u2, alpha_scale } => (u1, u2, alpha_scale),
        _ => return Err(EngineError::Incompatible { model: model.name(), policy: policy.name() }),
    };
    if year_length.fract() != 0.0 || session_length.fract() != 0.0 {
        return Err(EngineError::BadConfig(
            "compatibility mode needs whole-number year_length and session_length".into(),
        ));
    }
    if let Some(f) = cfg.focus_class {
        if f >= years {
            return Err(EngineError::BadConfig(format!(
                "focus_class = {f} but the schedule has only {years} years"
            )));
        }
    }
    let yl = year_length as i64;
    let sl = session_length as i64;
    let TwoCompT1Params { alpha1, alpha2, gamma1, gamma2, .. } = *params;

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

    let record =
        |rec: &mut Recorder, n: usize, t: f64, taught: Option<usize>, c1: &[f64], c2: &[f64], p_cum: f64| {
            let year = taught.unwrap_or(years - 1).min(years - 1);
            let z1_total: f64 = c1.iter().sum();
            let z2_total: f64 = c2.iter().sum();
            rec.record(
                n,
                n == n_steps,
                Sample {
                    t,
                    k: taught.is_some() as u8,
                    u1: mat_u1[year],
                    u2: mat_u2[year],
                    z1: z1_total,
                    z2: z2_total,
                    z: z1_total + z2_total,
                    p_cum,
                },
                cfg.focus_class.map(|f| (c1[f], c2[f])),
            );
        };

    let mut t = 0.0_f64;
    record(&mut rec, 0, t, Some(0), &c1, &c2, p_cum);
    for n in 1..=n_steps {
        t += dt;
        // The original computes a vacation flag here and then overwrites it
        // below; `_vacation` stays for fidelity but has no effect.
        let _vacation = pascal_round(t) % yl >= sl || t > final_cut;
        let j = (pascal_round(t) / yl) as usize; // 0-based current class
        let taught = if j < years { Some(j) } else { None };
        if let Some(j) = taught {
            let w = (mat_u1[j] + mat_u2[j] - c1[j] - c2[j]) * dt;
            p_cum += w;
            bins[j] += w;
        }
        for i in 0..years {
            let kf = if taught == Some(i) { 1.0 } else { 0.0 };
            c1[i] = c1[i] + kf * scale[i] * alpha1 * (mat_u1[i] - c1[i]) * dt - gamma1 * c1[i] * dt;
            c2[i] = c2[i] + kf * scale[i] * alpha2 * (mat_u2[i] - c2[i]) * dt - gamma2 * c2[i] * dt;
            if c1[i] < 0.0 {
                c1[i] = 0.0;
            }
            if c2[i] < 0.0 {
                c2[i] = 0.0;
            }
            if !(c1[i].is_finite() && c2[i].is_finite()) {
                return Err(EngineError::NonFinite { t });
            }
            peaks[i].0 = peaks[i].0.max(c1[i]);
            peaks[i].1 = peaks[i].1.max(c2[i]);
        }
        record(&mut rec, n, t, taught, &c1, &c2, p_cum);
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
