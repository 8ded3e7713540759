use super::*;
use crate::discretization::gamma_n_all;
use crate::geometry::{BedProfile, CavityRoof};

fn setup(r: f64, n_e: usize, layers: usize) -> (PeriodicMesh, FunctionSpaces, EdgePartition) {
    let reference = PeriodicMesh::reference(n_e, layers, 1.0, 1.5).unwrap();
    let bed = BedProfile::sinusoid(r);
    let mesh = reference.deform(&CavityRoof::attached(&bed, n_e)).unwrap();
    let spaces = FunctionSpaces::new(&mesh);
    (mesh, spaces, EdgePartition::all_attached(n_e))
}

fn problem<'a>(
    mesh: &'a PeriodicMesh,
    spaces: &'a FunctionSpaces,
    partition: &'a EdgePartition,
    rheo: GlenRheology,
    bc: BoundaryCondition,
    n_eff: f64,
) -> ContactProblem<'a> {
    ContactProblem {
        mesh,
        spaces,
        partition,
        rheo,
        bc,
        load: Load::Effective(n_eff),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn complementarity_examples() {
    let r = complementarity_residual(&[-0.5, 0.0, 0.2], &[0.0, -0.3, 0.0], 1.0);
    assert_eq!(r, vec![0.0, 0.0, 0.2]);
}

#[test]
fn flat_bed_rigid_translation() {
    let (mesh, spaces, part) = setup(0.0, 8, 3);
    let rheo = GlenRheology::newtonian(0.5);
    let sol = solve_contact_stokes(
        &mesh,
        &spaces,
        &part,
        &rheo,
        BoundaryCondition::Dirichlet { u_i: 1.0 },
        0.3,
        &SolverParams::default(),
        None,
    )
    .unwrap();
    for k in 0..spaces.n_nodes {
        assert!((sol.u[2 * k] - 1.0).abs() < 1e-10);
        assert!(sol.u[2 * k + 1].abs() < 1e-10);
    }
    assert!(sol.lambda.iter().all(|l| (l + 0.3).abs() < 1e-10));
    assert!(sol.active.iter().all(|a| *a));
    assert!(sol.history.iter().all(|h| h.n_active == 8 || h.iteration == 0));
    assert!(sol.basal_shear(&mesh, &spaces).abs() < 1e-14);
}

#[test]
fn flat_bed_neumann_is_rejected() {
    let (mesh, spaces, part) = setup(0.0, 8, 2);
    let err = solve_contact_stokes(
        &mesh,
        &spaces,
        &part,
        &GlenRheology::newtonian(0.5),
        BoundaryCondition::Neumann { tau_b: 0.01 },
        0.3,
        &SolverParams::default(),
        None,
    )
    .unwrap_err();
    assert!(matches!(err, Error::NullSpace(_)));

    let (mesh, spaces, _) = setup(0.01, 8, 2);
    let detached = EdgePartition { detached: vec![true; 8] };
    let err = solve_contact_stokes(
        &mesh,
        &spaces,
        &detached,
        &GlenRheology::newtonian(0.5),
        BoundaryCondition::Neumann { tau_b: 0.01 },
        0.3,
        &SolverParams::default(),
        None,
    )
    .unwrap_err();
    assert!(matches!(err, Error::NullSpace(_)));
}

#[test]
fn bumpy_bed_contact_conditions_and_c_independence() {
    let (mesh, spaces, part) = setup(0.01, 16, 3);
    let rheo = GlenRheology::newtonian(0.5);
    let mut sols = Vec::new();
    for c in [0.1, 1.0, 10.0] {
        let params = SolverParams { c, ..Default::default() };
        let sol = solve_contact_stokes(
            &mesh,
            &spaces,
            &part,
            &rheo,
            BoundaryCondition::Dirichlet { u_i: 1.0 },
            0.3,
            &params,
            None,
        )
        .unwrap();
        assert!(sol.contact_violation() <= CONTACT_TOL);
        let b = crate::discretization::assemble_divergence(&mesh, &spaces);
        let btu = b.matvec_transpose(&sol.u);
        assert!(btu.iter().all(|v| v.abs() <= 1e-9));
        // at N = 0.3 the lee side wants to separate: some edges inactive
        assert!(sol.active.iter().any(|a| !a));
        sols.push(sol);
    }
    for s in &sols[1..] {
        assert!(max_diff(&s.u, &sols[0].u) < 1e-8);
        assert!(max_diff(&s.p, &sols[0].p) < 1e-8);
        assert!(max_diff(&s.lambda, &sols[0].lambda) < 1e-8);
    }
}

#[test]
fn neumann_force_balance_and_consistency_with_dirichlet() {
    let (mesh, spaces, part) = setup(0.01, 16, 3);
    let rheo = GlenRheology::newtonian(0.5);
    let params = SolverParams::default();
    let dir = solve_contact_stokes(
        &mesh,
        &spaces,
        &part,
        &rheo,
        BoundaryCondition::Dirichlet { u_i: 1.0 },
        2.0,
        &params,
        None,
    )
    .unwrap();
    let tau = dir.basal_shear(&mesh, &spaces);
    assert!(tau > 0.0);
    let neu = solve_contact_stokes(
        &mesh,
        &spaces,
        &part,
        &rheo,
        BoundaryCondition::Neumann { tau_b: tau },
        2.0,
        &params,
        None,
    )
    .unwrap();
    assert!((neu.basal_shear(&mesh, &spaces) - tau).abs() <= 1e-8);
    // same mean traction: the free top slides at about the imposed speed
    let ub_d = crate::discretization::lower_boundary_ux_integral(&mesh, &spaces, &dir.u);
    let ub_n = crate::discretization::lower_boundary_ux_integral(&mesh, &spaces, &neu.u);
    assert!((ub_d - ub_n).abs() < 1e-2 * ub_d, "{ub_d} vs {ub_n}");
}

#[test]
fn split_load_shifts_pressure_only() {
    let (mesh, spaces, part) = setup(0.01, 16, 3);
    let rheo = GlenRheology::newtonian(0.5);
    let bc = BoundaryCondition::Dirichlet { u_i: 1.0 };
    let params = SolverParams::default();
    let mut solver = ContactSolver::new();
    let a = solver
        .solve(&problem(&mesh, &spaces, &part, rheo, bc, 0.3), &params, None)
        .unwrap();
    let split = ContactProblem {
        load: Load::Split { p_i: 1.3, p_w: 1.0 },
        ..problem(&mesh, &spaces, &part, rheo, bc, 0.3)
    };
    let b = solver.solve(&split, &params, None).unwrap();
    assert!(max_diff(&a.u, &b.u) < 1e-9);
    assert!(max_diff(&a.lambda, &b.lambda) < 1e-9);
    for (pa, pb) in a.p.iter().zip(&b.p) {
        assert!((pb - pa - 1.0).abs() < 1e-9);
    }
}

#[test]
fn linear_problem_with_fixed_active_set_takes_one_step() {
    // large N keeps the bed fully in contact
    let (mesh, spaces, part) = setup(0.01, 16, 3);
    let rheo = GlenRheology::newtonian(0.5);
    let sol = solve_contact_stokes(
        &mesh,
        &spaces,
        &part,
        &rheo,
        BoundaryCondition::Dirichlet { u_i: 1.0 },
        5.0,
        &SolverParams::default(),
        None,
    )
    .unwrap();
    assert!(sol.active.iter().all(|a| *a));
    assert_eq!(sol.iterations, 1);
    // warm start from the converged state needs no further step
    let again = solve_contact_stokes(
        &mesh,
        &spaces,
        &part,
        &rheo,
        BoundaryCondition::Dirichlet { u_i: 1.0 },
        5.0,
        &SolverParams::default(),
        Some(&sol.to_guess(16)),
    )
    .unwrap();
    assert_eq!(again.iterations, 0);
}

#[test]
fn nonlinear_solve_converges_with_continuation() {
    let (mesh, spaces, part) = setup(0.01, 16, 3);
    let rheo = GlenRheology::new(0.5, 3.0, 1e-10).unwrap();
    let sol = solve_contact_stokes(
        &mesh,
        &spaces,
        &part,
        &rheo,
        BoundaryCondition::Dirichlet { u_i: 1.0 },
        0.3,
        &SolverParams::default(),
        None,
    )
    .unwrap();
    assert!(sol.contact_violation() <= CONTACT_TOL);
    assert_eq!(sol.history.len(), sol.iterations + 1);
    let g = gamma_n_all(&mesh, &spaces, &sol.u);
    for (&i, &gj) in sol.multiplier_edges.iter().zip(&sol.gamma) {
        assert!((g[i] - gj).abs() < 1e-14);
    }
}

#[test]
fn iteration_limit_reports_history() {
    let (mesh, spaces, part) = setup(0.01, 16, 3);
    let rheo = GlenRheology::new(0.5, 3.0, 1e-10).unwrap();
    let params = SolverParams {
        max_iter: 1,
        continuation: false,
        ..Default::default()
    };
    let err = solve_contact_stokes(
        &mesh,
        &spaces,
        &part,
        &rheo,
        BoundaryCondition::Dirichlet { u_i: 1.0 },
        0.3,
        &params,
        None,
    )
    .unwrap_err();
    match err {
        Error::NonConvergence { iterations, history, .. } => {
            assert_eq!(iterations, 1);
            assert_eq!(history.len(), 2);
        }
        e => panic!("unexpected error {e}"),
    }
}

#[test]
fn log_record_is_single_line_json() {
    let r = IterationRecord {
        iteration: 2,
        residuals: ResidualNorms {
            momentum: 1e-3,
            divergence: 0.0,
            complementarity: 2.0,
        },
        n_active: 5,
        active_changed: true,
        step: 0.5,
    };
    let s = r.to_json();
    assert!(s.starts_with("{\"iter\":2,") && s.ends_with('}') && !s.contains('\n'));
}
