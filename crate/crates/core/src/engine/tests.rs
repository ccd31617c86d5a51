use super::*;
use crate::models::{Model, OneCompParams, TwoCompT1Params, TwoCompT2Params};
use crate::policies::{LessonSchedule, Polynomial, RequirementPolicy, Window};
use approx::assert_relative_eq;

fn consolidating() -> TwoCompT2Params {
    TwoCompT2Params { alpha1: 0.01, alpha2: 0.002, gamma1: 0.005, gamma2: 0.0001 }
}

fn congruent30() -> RequirementPolicy {
    RequirementPolicy::Congruent { cutoff_c: 30.0 }
}

fn one_window(duration: f64) -> LessonSchedule {
    LessonSchedule::windows(vec![Window { start: 0.0, duration }])
}

#[test]
fn single_euler_step_matches_hand_evaluation() {
    // From (0, 0), congruent gap 30: dz1 = 0.01 * 30 * 0.01 = 0.003
    let mut cfg = SimConfig::new(0.01);
    cfg.record_every = 1;
    let traj = simulate(&Model::TwoCompT2(consolidating()), &one_window(100.0), &congruent30(), &cfg).unwrap();
    let last = traj.final_sample();
    assert_relative_eq!(last.z1, 0.003, max_relative = 1e-12);
    assert_eq!(last.z2, 0.0);
}

#[test]
fn congruent_work_is_gap_times_teaching_time() {
    // u - z == 30 at every evaluation point, so P = 30 * 100
    let cfg = SimConfig::new(100.0);
    let traj = simulate(&Model::TwoCompT2(consolidating()), &one_window(100.0), &congruent30(), &cfg).unwrap();
    assert_relative_eq!(traj.total_work(), 3000.0, max_relative = 1e-12);
    assert_relative_eq!(traj.lesson_work_sum(), 3000.0, max_relative = 1e-12);
}

#[test]
fn zero_dynamics_leave_knowledge_untouched() {
    let p = TwoCompT2Params { alpha1: 0.0, alpha2: 0.0, gamma1: 0.0, gamma2: 0.0 };
    let mut cfg = SimConfig::new(50.0);
    cfg.z1_init = 5.0;
    let traj = simulate(&Model::TwoCompT2(p), &one_window(20.0), &congruent30(), &cfg).unwrap();
    assert!(traj.samples.iter().all(|s| s.z1 == 5.0 && s.z2 == 0.0));
}

#[test]
fn congruent_long_run_reaches_the_plateau() {
    // z1 -> alpha1 * C / (alpha2 + gamma1) = 0.3 / 0.007
    let mut cfg = SimConfig::new(3000.0);
    cfg.record_every = 1000;
    let traj = simulate(&Model::TwoCompT2(consolidating()), &one_window(3000.0), &congruent30(), &cfg).unwrap();
    assert_relative_eq!(traj.final_sample().z1, 0.3 / 0.007, max_relative = 1e-3);
}

#[test]
fn euler_tracks_the_closed_form_solution() {
    let p = consolidating();
    let mut cfg = SimConfig::new(50.0);
    cfg.record_every = 100;
    let traj = simulate(&Model::TwoCompT2(p), &one_window(50.0), &congruent30(), &cfg).unwrap();
    let (e1, e2) = closed_form_t2_congruent(&p, 30.0, 0.0, 0.0, 50.0);
    let last = traj.final_sample();
    assert_relative_eq!(last.z1, e1, max_relative = 1e-3);
    assert_relative_eq!(last.z2, e2, max_relative = 1e-3);
}

#[test]
fn congruent_gap_is_exact_at_every_recorded_step() {
    let cfg = SimConfig::new(100.0);
    let traj = simulate(&Model::TwoCompT2(consolidating()), &one_window(40.0), &congruent30(), &cfg).unwrap();
    for s in &traj.samples {
        if s.k == 1 {
            assert_eq!(s.u1 - s.z, 30.0);
        } else {
            assert_eq!(s.u1, s.z);
        }
    }
}

#[test]
fn decay_is_monotone_outside_lessons() {
    let cfg = SimConfig::new(400.0);
    let traj = simulate(&Model::TwoCompT2(consolidating()), &one_window(100.0), &congruent30(), &cfg).unwrap();
    for pair in traj.samples.windows(2) {
        if pair[0].k == 0 {
            assert!(pair[1].z1 <= pair[0].z1);
            assert!(pair[1].z2 <= pair[0].z2);
        }
    }
}

#[test]
fn work_bins_add_up_to_the_total() {
    let schedule = LessonSchedule::windows(vec![
        Window { start: 0.0, duration: 100.0 },
        Window { start: 200.0, duration: 50.0 },
        Window { start: 400.0, duration: 75.0 },
    ]);
    let cfg = SimConfig::new(600.0);
    let traj = simulate(&Model::TwoCompT2(consolidating()), &schedule, &congruent30(), &cfg).unwrap();
    assert_eq!(traj.per_lesson_work.len(), 3);
    assert_relative_eq!(traj.lesson_work_sum(), traj.total_work(), max_relative = 1e-12);
    assert!(traj.per_lesson_work.iter().all(|(_, w)| *w > 0.0));
}

#[test]
fn per_lesson_bins_match_analytic_congruent_values() {
    let schedule = LessonSchedule::windows(vec![
        Window { start: 0.0, duration: 100.0 },
        Window { start: 200.0, duration: 50.0 },
    ]);
    let cfg = SimConfig::new(300.0);
    let traj = simulate(&Model::TwoCompT2(consolidating()), &schedule, &congruent30(), &cfg).unwrap();
    assert_relative_eq!(traj.per_lesson_work[0].1, 3000.0, max_relative = 1e-12);
    assert_relative_eq!(traj.per_lesson_work[1].1, 1500.0, max_relative = 1e-12);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let cfg = SimConfig::new(200.0);
    let a = simulate(&Model::TwoCompT2(consolidating()), &one_window(120.0), &congruent30(), &cfg).unwrap();
    let b = simulate(&Model::TwoCompT2(consolidating()), &one_window(120.0), &congruent30(), &cfg).unwrap();
    assert_eq!(trajectory_to_csv(&a), trajectory_to_csv(&b));
}

#[test]
fn oversized_dt_is_rejected_upfront() {
    let mut cfg = SimConfig::new(1600.0);
    cfg.dt = 100.0;
    // alpha1 + alpha2 + gamma1 = 0.017 per unit time: dt = 100 overshoots
    let err = simulate(&Model::TwoCompT2(consolidating()), &one_window(312.0), &congruent30(), &cfg).unwrap_err();
    assert!(matches!(err, EngineError::UnstableDt { .. }), "got {err:?}");
}

#[test]
fn runaway_requirement_reports_non_finite_state() {
    // the polynomial overflows to infinity well inside the horizon
    let policy = RequirementPolicy::Polynomial(Polynomial::single(10.0, 1e300));
    let model = Model::OneComp(OneCompParams { alpha: 1e-6, gamma: 0.0, b: 0.0, cutoff_c: f64::MAX });
    let mut cfg = SimConfig::new(1000.0);
    cfg.dt = 1.0;
    let err = simulate(&model, &one_window(1000.0), &policy, &cfg).unwrap_err();
    assert!(matches!(err, EngineError::NonFinite { .. }), "got {err:?}");
}

#[test]
fn incompatible_combinations_are_rejected() {
    let year_matrix = RequirementPolicy::YearMatrix {
        u1: vec![50.0; 11],
        u2: vec![4.0; 11],
        alpha_scale: vec![1.0; 11],
    };
    let cfg = SimConfig::new(10.0);
    let err = simulate(
        &Model::TwoCompT2(consolidating()),
        &LessonSchedule::school_years(11),
        &year_matrix,
        &cfg,
    )
    .unwrap_err();
    assert!(matches!(err, EngineError::Incompatible { .. }));

    let t1 = Model::TwoCompT1(TwoCompT1Params {
        alpha1: 0.01,
        alpha2: 0.01,
        gamma1: 0.002,
        gamma2: 0.01,
        b: 0.0,
    });
    let err = simulate(&t1, &one_window(10.0), &congruent30(), &cfg).unwrap_err();
    assert!(matches!(err, EngineError::Incompatible { .. }));
}

#[test]
fn record_every_keeps_first_and_last_samples() {
    let mut cfg = SimConfig::new(10.0);
    cfg.record_every = 64;
    let traj = simulate(&Model::TwoCompT2(consolidating()), &one_window(10.0), &congruent30(), &cfg).unwrap();
    assert_eq!(traj.samples.first().unwrap().t, 0.0);
    assert_relative_eq!(traj.samples.last().unwrap().t, 10.0);
    for pair in traj.samples.windows(2) {
        assert!(pair[1].t > pair[0].t);
    }
}

#[test]
fn one_comp_gate_events_are_recorded() {
    // requirement grows linearly and runs away from a non-learner
    let model = Model::OneComp(OneCompParams { alpha: 0.0, gamma: 0.0, b: 0.0, cutoff_c: 5.0 });
    let policy = RequirementPolicy::Polynomial(Polynomial::single(1.0, 1.0)); // u = t
    let cfg = SimConfig::new(20.0);
    let traj = simulate(&model, &one_window(20.0), &policy, &cfg).unwrap();
    let trips = traj.gate_trip_times();
    assert_eq!(trips.len(), 1);
    // first step with u > z + C: u = t > 5
    assert_relative_eq!(trips[0], 5.01, max_relative = 1e-9);
}

#[test]
fn gate_can_restore_when_the_gap_closes_again() {
    // u rises above the cutoff then falls back: the gate is state-free
    let model = Model::OneComp(OneCompParams { alpha: 0.0, gamma: 0.0, b: 0.0, cutoff_c: 5.0 });
    let policy = RequirementPolicy::Polynomial(Polynomial {
        terms: vec![(1.0, 2.0), (2.0, -0.1)], // u = 2t - 0.1 t^2, peak 10 at t = 10
    });
    let cfg = SimConfig::new(20.0);
    let traj = simulate(&model, &one_window(20.0), &policy, &cfg).unwrap();
    assert_eq!(traj.gate_trip_times().len(), 1);
    assert!(traj.events.iter().any(|e| matches!(e, Event::GateRestored { .. })));
}

mod year_matrix {
    use super::*;

    pub fn task3_model() -> Model {
        Model::TwoCompT1(TwoCompT1Params {
            alpha1: 0.01,
            alpha2: 0.01,
            gamma1: 0.002,
            gamma2: 0.01,
            b: 0.0,
        })
    }

    pub fn task3_policy() -> RequirementPolicy {
        RequirementPolicy::YearMatrix {
            u1: vec![50.0, 46.0, 42.0, 36.0, 30.0, 25.0, 20.0, 15.0, 10.0, 10.0, 10.0],
            u2: vec![4.0, 8.0, 14.0, 18.0, 24.0, 28.0, 33.0, 38.0, 46.0, 58.0, 62.0],
            alpha_scale: vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0],
        }
    }

    #[test]
    fn compat_first_step_matches_the_reference_update() {
        // 1 * 1 * 0.01 * 50 * 0.01 = 5e-3 and 1 * 1 * 0.01 * 4 * 0.01 = 4e-4
        let mut cfg = SimConfig::new(0.01);
        cfg.pr1_compat = true;
        cfg.focus_class = Some(0);
        let traj = simulate(&task3_model(), &LessonSchedule::school_years(11), &task3_policy(), &cfg).unwrap();
        let focus = traj.focus.as_ref().unwrap();
        assert_relative_eq!(*focus.z1.last().unwrap(), 5e-3, max_relative = 1e-12);
        assert_relative_eq!(*focus.z2.last().unwrap(), 4e-4, max_relative = 1e-12);
    }

    #[test]
    fn compat_untaught_classes_only_decay() {
        let mut cfg = SimConfig::new(20.0);
        cfg.pr1_compat = true;
        cfg.record_every = 100;
        cfg.focus_class = Some(0);
        let traj = simulate(&task3_model(), &LessonSchedule::school_years(11), &task3_policy(), &cfg).unwrap();
        let focus = traj.focus.as_ref().unwrap();
        // class 1 is current until round(t) div 12 turns 1 at t = 11.5;
        // afterwards its stock only decays
        let z1 = &focus.z1;
        let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
        for i in 1..z1.len() {
            if times[i - 1] > 11.6 {
                assert!(z1[i] < z1[i - 1], "class 1 grew after its year ended");
            }
        }
        // classes beyond the first have nothing to forget yet at t < 11.5
        let finals = traj.final_classes.as_ref().unwrap();
        assert!(finals[5].0 == 0.0 && finals[5].1 == 0.0);
    }

    #[test]
    fn compat_teaches_through_vacations_but_corrected_does_not() {
        // during months 9-11 of year 1 the corrected run must not grow
        let schedule = LessonSchedule::school_years(11);
        let mut cfg = SimConfig::new(12.0);
        cfg.record_every = 10;
        let corrected = simulate(&task3_model(), &schedule, &task3_policy(), &cfg).unwrap();
        cfg.pr1_compat = true;
        let compat = simulate(&task3_model(), &schedule, &task3_policy(), &cfg).unwrap();
        let vacation = |s: &Sample| s.t > 9.05 && s.t < 11.4;
        for pair in corrected.samples.windows(2) {
            if vacation(&pair[0]) && vacation(&pair[1]) {
                assert!(pair[1].z <= pair[0].z, "corrected run grew during vacation");
            }
        }
        let grew = compat
            .samples
            .windows(2)
            .any(|p| vacation(&p[0]) && vacation(&p[1]) && p[1].z > p[0].z);
        assert!(grew, "compat run should keep teaching through the vacation");
    }

    #[test]
    fn corrected_class_stocks_never_exceed_their_requirement() {
        let mut cfg = SimConfig::new(132.0);
        cfg.record_every = 100;
        let traj = simulate(&task3_model(), &LessonSchedule::school_years(11), &task3_policy(), &cfg).unwrap();
        let peaks = traj.class_peaks.as_ref().unwrap();
        let (u1, u2) = match task3_policy() {
            RequirementPolicy::YearMatrix { u1, u2, .. } => (u1, u2),
            _ => unreachable!(),
        };
        for (i, (p1, p2)) in peaks.iter().enumerate() {
            assert!(*p1 <= u1[i], "class {i}: z1 peak {p1} exceeds {}", u1[i]);
            assert!(*p2 <= u2[i], "class {i}: z2 peak {p2} exceeds {}", u2[i]);
        }
    }

    #[test]
    fn corrected_run_stops_at_the_final_cut() {
        let mut cfg = SimConfig::new(132.0);
        cfg.record_every = 50;
        let traj = simulate(&task3_model(), &LessonSchedule::school_years(11), &task3_policy(), &cfg).unwrap();
        for pair in traj.samples.windows(2) {
            if pair[0].t >= 129.0 {
                assert!(pair[1].z < pair[0].z, "totals must decay after the final cut");
            }
        }
    }
}
