mod common;

use qsdc_core::linalg::{Matrix, SymmetricMatrix};
use rand::Rng;
use qsdc_core::sdp::{
    self, AffineMat, AffineMatrixExpr, BlockKind, LmiSense, SdpProblem, SdpSettings, SolveStatus,
    VarSpace,
};

fn settings() -> SdpSettings {
    SdpSettings::default()
}

#[test]
fn two_by_two_eigenvalue_condition() {
    let mut space = VarSpace::new();
    let t = space.add("t", BlockKind::Scalar).unwrap();
    let tv = space.var(t);
    let e = &tv.times_matrix(&Matrix::identity(2)).unwrap()
        + &AffineMat::constant(Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]));
    let mut p = SdpProblem::new(space);
    p.minimize(&tv).unwrap();
    p.add_psd("lmi", &e, 0.0).unwrap();
    let sol = sdp::solve(&p, &settings()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-6, "{sol:?}");
}

#[test]
fn smallest_diagonal_entry() {
    let mut space = VarSpace::new();
    let c = space.add("c", BlockKind::Scalar).unwrap();
    let cv = space.var(c);
    let e = &AffineMat::constant(Matrix::diag(&[2.0, 5.0])) - &cv.times_matrix(&Matrix::identity(2)).unwrap();
    let mut p = SdpProblem::new(space);
    p.maximize(&cv).unwrap();
    p.add_psd("lmi", &e, 0.0).unwrap();
    let sol = sdp::solve(&p, &settings()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 2.0).abs() < 1e-6, "{sol:?}");
    assert!(sol.dual_bound >= sol.objective - 1e-6);
}

#[test]
fn negative_identity_is_infeasible() {
    let mut space = VarSpace::new();
    let x = space.add("x", BlockKind::Scalar).unwrap();
    let xv = space.var(x);
    let mut p = SdpProblem::new(space);
    p.minimize(&xv).unwrap();
    p.add_lmi(
        "neg",
        AffineMatrixExpr::constant(SymmetricMatrix::scaled_identity(2, -1.0)),
        LmiSense::PositiveSemidefinite,
        0.0,
    )
    .unwrap();
    assert_eq!(sdp::solve(&p, &settings()).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn feasibility_free_scalar() {
    let mut space = VarSpace::new();
    let x = space.add("x", BlockKind::Scalar).unwrap();
    let xv = space.var(x);
    let mut p = SdpProblem::new(space);
    p.add_nsd("neg", &xv, 1e-7).unwrap();
    let sol = sdp::feasibility(&p, &settings()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.feasibility_margin.unwrap() > 0.5);
    assert!(sol.x[0] < -1e-7);
}

#[test]
fn feasibility_empty_interval() {
    let mut space = VarSpace::new();
    let x = space.add("x", BlockKind::Scalar).unwrap();
    let xv = space.var(x);
    let one = AffineMat::constant(Matrix::identity(1));
    let mut p = SdpProblem::new(space);
    p.add_scalar_ge("x>=1", &(&xv - &one)).unwrap();
    p.add_scalar_le("x<=0", &xv).unwrap();
    let sol = sdp::feasibility(&p, &settings()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    let sol = sdp::solve(&p, &settings()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn lyapunov_lmi_with_matrix_variable() {
    // max c s.t. AᵀP + PA ⪯ −I, P ⪰ cI, P ⪯ 10 I
    let a = Matrix::from_rows(&[[-1.0, 2.0], [0.0, -3.0]]);
    let mut space = VarSpace::new();
    let pid = space.add("P", BlockKind::Symmetric(2)).unwrap();
    let c = space.add("c", BlockKind::Scalar).unwrap();
    let pv = space.var(pid);
    let cv = space.var(c);
    let lyap = pv.rmul(&a).he();
    let mut prob = SdpProblem::new(space);
    prob.maximize(&cv).unwrap();
    prob.add_nsd("lyap", &lyap.add_constant(&Matrix::identity(2)), 0.0).unwrap();
    prob.add_psd("lower", &(&pv - &cv.times_matrix(&Matrix::identity(2)).unwrap()), 0.0).unwrap();
    prob.add_nsd("upper", &pv.add_constant(&Matrix::identity(2).scale(-10.0)), 0.0).unwrap();
    let sol = sdp::solve(&prob, &settings()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal, "{sol:?}");
    for (m, c) in sol.margins.iter().zip(prob.constraints()) {
        assert!(*m >= c.margin - 1e-7);
    }
    assert!((sol.objective - prob.objective_value(&sol.x)).abs() < 1e-9);
}

#[test]
fn evaluate_examples() {
    let c = SymmetricMatrix::from_diag(&[1.0, -2.0]);
    assert_eq!(sdp::evaluate(&AffineMatrixExpr::constant(c.clone()), &[]).unwrap(), c);
    let xi = AffineMatrixExpr::new(SymmetricMatrix::zeros(2), vec![(0, SymmetricMatrix::identity(2))]).unwrap();
    assert_eq!(sdp::evaluate(&xi, &[3.0]).unwrap(), SymmetricMatrix::scaled_identity(2, 3.0));
}

#[test]
fn evaluate_matches_naive_sum() {
    let mut r = common::rng(41);
    for _ in 0..20 {
        let n = r.gen_range(1..5);
        let params = r.gen_range(1..6);
        let rand_sym = |r: &mut rand_chacha::ChaCha8Rng| {
            SymmetricMatrix::from_matrix_sym(&common::random_matrix(r, n, n, 3.0)).unwrap()
        };
        let c = rand_sym(&mut r);
        let terms: Vec<(usize, SymmetricMatrix)> = (0..params).map(|i| (i, rand_sym(&mut r))).collect();
        let x: Vec<f64> = (0..params).map(|_| r.gen_range(-2.0..2.0)).collect();
        let e = AffineMatrixExpr::new(c.clone(), terms.clone()).unwrap();
        let got = sdp::evaluate(&e, &x).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = c.get(i, j) + terms.iter().map(|(k, m)| x[*k] * m.get(i, j)).sum::<f64>();
                assert!((got.get(i, j) - want).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn duplicate_names_rejected() {
    let mut space = VarSpace::new();
    space.add("P", BlockKind::Symmetric(2)).unwrap();
    assert!(space.add("P", BlockKind::Scalar).is_err());
    assert_eq!(space.len(), 3);
}

fn lyapunov_problem(weight: f64) -> (SdpProblem, qsdc_core::sdp::VarId) {
    let a = Matrix::from_rows(&[[-0.5, 1.0, 0.0], [0.0, -1.0, 2.0], [0.3, 0.0, -2.0]]);
    let mut space = VarSpace::new();
    let pid = space.add("P", BlockKind::Symmetric(3)).unwrap();
    let c = space.add("c", BlockKind::Scalar).unwrap();
    let pv = space.var(pid);
    let cv = space.var(c);
    let mut prob = SdpProblem::new(space);
    prob.maximize(&cv.scale(weight)).unwrap();
    prob.add_nsd("lyap", &pv.rmul(&a).he().add_constant(&Matrix::identity(3)), 0.0).unwrap();
    prob.add_psd("lower", &(&pv - &cv.times_matrix(&Matrix::identity(3)).unwrap()), 0.0).unwrap();
    prob.add_nsd("upper", &pv.add_constant(&Matrix::identity(3).scale(-20.0)), 0.0).unwrap();
    (prob, pid)
}

#[test]
fn optimal_solutions_are_self_consistent() {
    let (prob, _) = lyapunov_problem(1.0);
    let sol = sdp::solve(&prob, &settings()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let again = prob.margins(&sol.x).unwrap();
    let all: Vec<_> = prob.constraints().iter().chain(prob.scalar_constraints()).collect();
    assert_eq!(again.len(), all.len());
    for (m, c) in again.iter().zip(all) {
        assert!(*m >= c.margin - 1e-7, "{}: {m:e}", c.name);
    }
    // weak duality
    assert!(sol.gap >= -1e-8);
    assert!(sol.dual_bound >= sol.objective - 1e-6 * (1.0 + sol.objective.abs()));
}

fn trace_problem(weight: f64) -> (SdpProblem, qsdc_core::sdp::VarId) {
    let a = Matrix::from_rows(&[[-0.5, 1.0, 0.0], [0.0, -1.0, 2.0], [0.3, 0.0, -2.0]]);
    let mut space = VarSpace::new();
    let pid = space.add("P", BlockKind::Symmetric(3)).unwrap();
    let pv = space.var(pid);
    let mut trace = AffineMat::zeros(1, 1);
    for i in 0..3 {
        let mut e = Matrix::zeros(3, 1);
        e[(i, 0)] = 1.0;
        trace = &trace + &pv.lmul(&e.transpose()).rmul(&e);
    }
    let mut prob = SdpProblem::new(space);
    prob.minimize(&trace.scale(weight)).unwrap();
    prob.add_nsd("lyap", &pv.rmul(&a).he().add_constant(&Matrix::identity(3)), 0.0).unwrap();
    (prob, pid)
}

#[test]
fn objective_scaling_keeps_argmin() {
    let (p1, pid) = trace_problem(1.0);
    let (p2, _) = trace_problem(37.0);
    let s1 = sdp::solve(&p1, &settings()).unwrap();
    let s2 = sdp::solve(&p2, &settings()).unwrap();
    assert_eq!((s1.status, s2.status), (SolveStatus::Optimal, SolveStatus::Optimal));
    let a = p1.space().value_matrix(pid, &s1.x).unwrap();
    let b = p2.space().value_matrix(pid, &s2.x).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-5, "{}", a.max_abs_diff(&b));
    // minimal trace is attained by the Lyapunov solution, whose eigenvalues sum to 6.561287
    assert!((s1.objective - 6.561287).abs() < 1e-5, "{}", s1.objective);
    assert!((37.0 * s1.objective - s2.objective).abs() < 1e-5 * s2.objective.abs());
}
