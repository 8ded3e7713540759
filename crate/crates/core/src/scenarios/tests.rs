use super::*;

fn coarse(n_e: usize) -> ScenarioConfig {
    ScenarioConfig {
        n_e,
        dt: 0.5 / n_e as f64,
        ..Default::default()
    }
}

#[test]
fn flat_bed_is_a_fixed_point() {
    let cfg = ScenarioConfig {
        bed: BedProfile::flat(),
        ..coarse(8)
    };
    let s = run_steady(&cfg).unwrap();
    assert_eq!(s.series.len(), 1);
    assert!(s.record.tau_b.abs() < 1e-12);
    assert!((s.record.u_b - 1.0).abs() < 1e-12);
    assert_eq!(s.record.volume, 0.0);
    assert_eq!(s.record.x_detach, None);
    assert_eq!(s.roof, CavityRoof::attached(&cfg.bed, 8));
}

#[test]
fn step_without_normal_velocity_keeps_roof() {
    let cfg = ScenarioConfig {
        bed: BedProfile::flat(),
        ..coarse(8)
    };
    let mut state = State::attached(&cfg).unwrap();
    let before = state.roof.clone();
    let r = step(&mut state, &cfg, 0.3).unwrap();
    assert_eq!(r.rate, 0.0);
    assert_eq!(state.roof, before);
    assert_eq!(state.t, cfg.dt);
}

#[test]
fn steady_state_leaves_state_on_final_roof() {
    let cfg = coarse(16);
    let mut state = State::attached(&cfg).unwrap();
    let s = run_steady_from(&cfg, &mut state).unwrap();
    assert_eq!(state.roof, s.roof);
    assert_eq!(state.t, s.record.t);
    assert!(s.record.rate < cfg.steady_threshold);
    assert!(s.record.volume > 0.0);
    assert!(s.record.contact_violation <= 1e-8);
    assert!(s.record.divergence <= 1e-9);
    // resuming from a steady state converges at once
    let again = run_steady_from(&cfg, &mut state).unwrap();
    assert_eq!(again.series.len(), 1);
    assert!((again.record.tau_b - s.record.tau_b).abs() < 1e-10);
}

#[test]
fn not_steady_keeps_series() {
    let cfg = ScenarioConfig {
        t_end: 0.25,
        ..coarse(16)
    };
    let fail = run_steady(&cfg).unwrap_err();
    assert!(matches!(fail.error, Error::NotSteady { .. }));
    assert_eq!(fail.series.len(), 8);
    let t: Vec<f64> = fail.series.records.iter().map(|r| r.t).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn snapshots_are_taken() {
    let cfg = ScenarioConfig {
        t_end: 0.25,
        snapshot_every: 4,
        ..coarse(16)
    };
    let fail = run_steady(&cfg).unwrap_err();
    let times: Vec<f64> = fail.series.snapshots.iter().map(|(t, _)| *t).collect();
    assert_eq!(times, [0.0, 0.125]);
}

#[test]
fn unperturbed_unsteady_run_stays_steady() {
    // away from the maximum of τ_b/(rN), where u_b is insensitive to τ_b
    let cfg = ScenarioConfig {
        steady_threshold: 1e-6,
        ..coarse(16)
    };
    let run = run_unsteady(
        &cfg,
        &UnsteadyParams {
            n0: 0.6,
            amplitude: 0.0,
            frequency: 0.4,
            t_end: 5.0,
        },
    )
    .unwrap();
    let (ub0, v0) = (run.initial.u_b, run.initial.volume);
    for r in &run.series.records {
        assert!((r.u_b - ub0).abs() <= 1e-3 * ub0, "t = {}: u_b {} vs {ub0}", r.t, r.u_b);
        assert!((r.volume - v0).abs() <= 1e-3 * v0, "t = {}: V {} vs {v0}", r.t, r.volume);
        assert!((r.tau_b - run.tau_b0).abs() <= 1e-8);
    }
}

#[test]
fn unsteady_needs_dirichlet_start() {
    let cfg = ScenarioConfig {
        bc: BoundaryCondition::Neumann { tau_b: 0.01 },
        ..coarse(8)
    };
    let p = UnsteadyParams {
        n0: 0.3,
        amplitude: 0.1,
        frequency: 0.4,
        t_end: 1.0,
    };
    let e = run_unsteady(&cfg, &p).unwrap_err().error;
    assert!(matches!(e, Error::Config(_)));
}

#[test]
fn flat_bed_sweep_is_uncavitated() {
    let cfg = ScenarioConfig {
        bed: BedProfile::flat(),
        ..coarse(8)
    };
    let pts = sweep_sliding_law(&cfg, &[0.1, 1.0, 0.5]).unwrap();
    let ns: Vec<f64> = pts.iter().map(|p| p.n_eff).collect();
    assert_eq!(ns, [1.0, 0.5, 0.1]);
    for p in &pts {
        assert!(p.converged);
        assert_eq!(p.volume, 0.0);
        assert!((p.u_b - 1.0).abs() < 1e-12);
        assert!((p.u_b_scaled - 1.0 / (0.5 * p.n_eff)).abs() < 1e-10);
    }
    assert!(sweep_sliding_law(&cfg, &[]).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        ScenarioConfig { dt: 0.0, ..coarse(8) },
        ScenarioConfig {
            effective_pressure: -1.0,
            ..coarse(8)
        },
        ScenarioConfig {
            bed: BedProfile::sinusoid(1.5),
            ..coarse(8)
        },
        ScenarioConfig {
            bc: BoundaryCondition::Dirichlet { u_i: f64::NAN },
            ..coarse(8)
        },
    ];
    for cfg in bad {
        assert!(State::attached(&cfg).is_err(), "{cfg:?}");
    }
}

#[test]
fn multiplier_profile_lies_on_contact() {
    let cfg = coarse(16);
    let s = run_steady(&cfg).unwrap();
    let prof = multiplier_profile(&s.solution, &s.mesh);
    assert_eq!(prof.len(), s.solution.multiplier_edges.len());
    assert!(prof.iter().all(|(x, l)| (0.0..1.0).contains(x) && *l <= 1e-8));
    assert!(prof.windows(2).all(|w| w[1].0 > w[0].0));
}
