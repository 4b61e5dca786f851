use blockprec::block::BlockSystem;
use blockprec::dense::{lu_factor, DenseMatrix};
use blockprec::krylov::Operator;
use blockprec::vef::{
    assemble_vef, eddington, transport_sweep, vef_driver, vef_preconditioner, vef_solve, vef_table, AngularQuadrature,
    EddingtonField, TransportProblem, VefDiscretization, VefKind, VefOperator, VefVariant,
};
use blockprec::Error;

fn isotropic(p: &TransportProblem) -> EddingtonField {
    EddingtonField::constant(p.n_elements, 1.0 / 3.0)
}

fn with_inflow(n: usize, sigma_a: f64, inflow: f64) -> TransportProblem {
    TransportProblem {
        inflow_left: inflow,
        inflow_right: inflow,
        ..TransportProblem::new(n, sigma_a)
    }
}

#[test]
fn single_element_mass_matrix() {
    let p = TransportProblem::new(1, 0.0);
    let d = assemble_vef(&p, &isotropic(&p), VefVariant::Nonsymmetric).unwrap();
    let want = [[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]];
    let m = d.mass_t.to_dense();
    for i in 0..3 {
        for j in 0..3 {
            assert!((m[(i, j)] - want[i][j] / 30.0).abs() < 1e-15);
        }
    }
    assert_eq!(d.nodes, vec![0.0, 0.5, 1.0]);
}

#[test]
fn block_structure_and_definiteness() {
    for sigma_a in [0.0, 0.9] {
        let p = TransportProblem::new(7, sigma_a);
        let d = assemble_vef(&p, &isotropic(&p), VefVariant::Nonsymmetric).unwrap();
        assert_eq!((d.n1(), d.n2()), (15, 14));
        if sigma_a == 0.0 {
            assert_eq!(d.mass_a.nnz(), 0);
        }
        let mt = d.mass_t.to_dense();
        assert!(mt.asymmetry() < 1e-15);
        assert!(blockprec::dense::symmetric_eigenvalues(&mt).unwrap()[0] > 0.0);
        let ma = d.mass_a.to_dense();
        assert!(ma.asymmetry() < 1e-15);
        assert!(blockprec::dense::symmetric_eigenvalues(&ma).unwrap()[0] >= -1e-15);
        // Mass matrix of the discontinuous space couples each element with itself only.
        for i in 0..d.n2() {
            assert!(d.mass_a.row_entries(i).iter().all(|&(j, _)| j / 2 == i / 2));
        }
        // Row sums of the volume mass are the Simpson weights h/6, 2h/3, h/6.
        let h = p.element_length();
        let interior_vertex = d.a11_lumped[2];
        assert!((interior_vertex - h / 3.0).abs() < 1e-15);
        assert!((d.a11_lumped[1] - 2.0 * h / 3.0).abs() < 1e-15);
    }
}

#[test]
fn symmetrized_variant_is_symmetric() {
    for n in [1, 5, 40] {
        let d = VefDiscretization::symmetric(&TransportProblem::new(n, 0.9)).unwrap();
        assert!(d.monolithic_dense().asymmetry() <= 1e-12);
    }
}

#[test]
fn diagonal_preconditioner_is_the_middle_factor_of_block_ldu() {
    let p = TransportProblem::new(1, 0.9);
    let d = assemble_vef(&p, &isotropic(&p), VefVariant::Nonsymmetric).unwrap();
    let sys: BlockSystem = d.to_block_system().unwrap();
    let (n1, n2) = (d.n1(), d.n2());
    let mut mid = DenseMatrix::zeros(n1 + n2, n1 + n2);
    mid.set_submatrix(0, 0, sys.a11());
    mid.set_submatrix(n1, n1, sys.assemble_schur());
    let mid_inv = lu_factor(&mid).unwrap().solve_matrix(&DenseMatrix::identity(n1 + n2)).unwrap();
    let ours = vef_preconditioner(&d, VefKind::D).unwrap().inverse_dense().unwrap();
    assert!(ours.sub(&mid_inv).unwrap().max_abs() <= 1e-12 * mid_inv.max_abs());
}

#[test]
fn operator_matches_dense_assembly() {
    let p = TransportProblem::new(6, 0.4);
    let d = assemble_vef(&p, &isotropic(&p), VefVariant::Nonsymmetric).unwrap();
    let op = VefOperator::new(&d);
    let dense = d.monolithic_dense();
    let x: Vec<f64> = (0..op.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
    let (a, b) = (op.apply(&x).unwrap(), dense.matvec(&x));
    assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-14));
    assert!(op.apply(&x[1..]).is_err());
}

#[test]
fn two_angle_quadrature_always_gives_one_third() {
    let p = TransportProblem {
        n_angles: 2,
        ..with_inflow(6, 0.3, 2.0)
    };
    let phi: Vec<f64> = (0..12).map(|i| 1.0 + i as f64).collect();
    let e = eddington(&transport_sweep(&p, &phi).unwrap(), &p).unwrap();
    assert!((e.min() - 1.0 / 3.0).abs() < 1e-15 && (e.max() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn deep_in_an_absorber_the_flux_becomes_beam_like() {
    let p = TransportProblem {
        n_elements: 40,
        sigma_t: 400.0,
        sigma_a: 400.0,
        source: 0.0,
        n_angles: 16,
        inflow_left: 1.0,
        ..TransportProblem::default()
    };
    let q = AngularQuadrature::gauss_legendre(16).unwrap();
    let mu_max = q.mu.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let e = eddington(&transport_sweep(&p, &vec![0.0; 80]).unwrap(), &p).unwrap();
    assert!(e.right > 0.99 * mu_max * mu_max);
    assert!(e.right <= mu_max * mu_max);
}

#[test]
fn input_errors() {
    assert!(matches!(
        assemble_vef(&TransportProblem::new(0, 0.0), &EddingtonField::constant(0, 0.3), VefVariant::Nonsymmetric),
        Err(Error::Mesh(_))
    ));
    let bad = TransportProblem {
        n_angles: 3,
        ..TransportProblem::default()
    };
    assert!(transport_sweep(&bad, &vec![0.0; 400]).is_err());
    let p = TransportProblem::new(4, 0.0);
    assert!(assemble_vef(&p, &EddingtonField::constant(3, 0.3), VefVariant::Nonsymmetric).is_err());
    let q = TransportProblem {
        sigma_a: 2.0,
        ..TransportProblem::default()
    };
    assert!(q.validate().is_err());
}

#[test]
fn exact_schur_preconditioners_on_saddle_points() {
    for n in [50, 200, 2000] {
        let p = TransportProblem::new(n, 0.0);
        let d = assemble_vef(&p, &isotropic(&p), VefVariant::Nonsymmetric).unwrap();
        for kind in [VefKind::D, VefKind::L] {
            let r = vef_solve(&d, kind, 1e-10).unwrap();
            assert!(r.converged && r.iterations <= 4, "{n} {kind:?}: {}", r.iterations);
        }
    }
}

#[test]
fn converged_solution_satisfies_discrete_balance() {
    let p = with_inflow(50, 0.9, 0.5);
    let out = vef_driver(&p, VefKind::L, 1e-12, 1e-10, 100).unwrap();
    assert!(out.converged);
    let d = assemble_vef(&p, &out.eddington, VefVariant::Nonsymmetric).unwrap();
    let bj = d.divergence.matvec(&out.current);
    let ma = d.mass_a.matvec(&out.phi);
    for i in 0..d.n2() {
        let f = d.rhs[d.n1() + i];
        assert!((bj[i] + ma[i] - f).abs() < 1e-9, "test function {i}");
    }
}

#[test]
fn driver_converges_monotonically_and_keeps_e_in_the_moment_range() {
    let q = AngularQuadrature::gauss_legendre(8).unwrap();
    let lo = q.mu.iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    let hi = q.mu.iter().fold(0.0_f64, |m, v| m.max(v * v));
    for inflow in [0.0, 1.0] {
        let p = with_inflow(100, 0.9, inflow);
        let out = vef_driver(&p, VefKind::L, 1e-12, 1e-10, 100).unwrap();
        assert!(out.converged);
        assert!(out.change_history.windows(2).all(|w| w[1] < w[0]), "{:?}", out.change_history);
        assert!(out.e_range.0 >= lo - 1e-12 && out.e_range.1 <= hi + 1e-12);
        assert!(out.phi.iter().all(|&v| v > 0.0));
    }
}

#[test]
fn without_scattering_one_update_fixes_the_eddington_factor() {
    let p = TransportProblem {
        sigma_a: 1.0,
        ..TransportProblem::new(30, 1.0)
    };
    let out = vef_driver(&p, VefKind::D, 1e-12, 1e-10, 10).unwrap();
    assert!(out.converged);
    assert_eq!(out.outer_iterations, 2);
    assert!(out.change_history[1] < 1e-10);
}

#[test]
fn lumping_costs_iterations_and_symmetrization_does_not() {
    for sigma_a in [0.0, 0.9] {
        let p = with_inflow(200, sigma_a, 1.0);
        let rows = vef_table(
            &p,
            &isotropic(&p),
            &VefKind::ALL,
            &[VefVariant::Nonsymmetric, VefVariant::Symmetrized],
            1e-10,
        )
        .unwrap();
        let count = |k: VefKind, sym: bool| {
            rows.iter().find(|r| r.kind == k && r.symmetrized == sym).unwrap().iterations
        };
        for sym in [false, true] {
            let l = count(VefKind::L, sym);
            assert!(count(VefKind::Dt, sym) >= 2 * l && count(VefKind::Lt, sym) >= 2 * l);
        }
        for k in VefKind::ALL {
            assert!(count(k, false).abs_diff(count(k, true)) <= 2);
        }
        assert!(rows.iter().all(|r| r.converged));
    }
}

#[test]
fn zero_inflow_uniform_source_makes_lumping_exact_without_absorption() {
    // J' = Q forces a linear current, and Simpson lumping integrates
    // linear functions exactly, so the lumped Schur complement agrees with
    // the exact one on the solution.
    let p = TransportProblem::new(200, 0.0);
    let d = assemble_vef(&p, &isotropic(&p), VefVariant::Nonsymmetric).unwrap();
    assert!(vef_solve(&d, VefKind::Lt, 1e-10).unwrap().iterations <= 2);
}
