use blockprec::block::{
    assemble_preconditioner, make_preconditioner, random_block_system, A22Fill, BlockSystem, PrecondTag,
    PreconditionerKind,
};
use blockprec::dense::{lu_factor, rank_and_nullspace, DenseMatrix, UniformStream};
use blockprec::krylov::{fixed_point, gmres, iteration_matrix, Breakdown, Identity};
use proptest::prelude::*;

fn scalar(a11: f64, a12: f64, a21: f64, a22: f64) -> BlockSystem {
    let m = |v| DenseMatrix::from_diagonal(&[v]);
    BlockSystem::new(m(a11), m(a12), m(a21), m(a22)).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn scalar_schur_complement_and_preconditioners() {
    let sys = scalar(1.0, 1.0, 1.0, 1.5);
    assert_eq!(sys.assemble_schur()[(0, 0)], 0.5);
    let d = make_preconditioner(&sys, &PreconditionerKind::exact(PrecondTag::DiagPlus)).unwrap();
    assert!(close(&d.apply(&[1.0, 1.0]).unwrap(), &[1.0, 2.0], 1e-15));
    let p = assemble_preconditioner(&sys, &PreconditionerKind::exact(PrecondTag::DiagHatMinus));
    assert_eq!((p[(0, 0)], p[(1, 1)], p[(0, 1)]), (1.0, -1.5, 0.0));
    assert!(close(&sys.apply_block(&[1.0, 0.0]).unwrap(), &[1.0, 1.0], 0.0));
}

#[test]
fn identity_system_makes_every_preconditioner_trivial() {
    let i = DenseMatrix::identity(3);
    let sys = BlockSystem::new(i.clone(), DenseMatrix::zeros(3, 2), DenseMatrix::zeros(2, 3), DenseMatrix::identity(2))
        .unwrap();
    assert_eq!(sys.assemble_schur(), &DenseMatrix::identity(2));
    let r = [1.0, -2.0, 3.0, 0.5, 7.0];
    for tag in PrecondTag::ALL {
        let z = make_preconditioner(&sys, &PreconditionerKind::exact(tag)).unwrap().apply(&r).unwrap();
        let want: Vec<f64> = if tag.is_minus() { vec![1.0, -2.0, 3.0, -0.5, -7.0] } else { r.to_vec() };
        assert!(close(&z, &want, 0.0), "{tag}");
    }
}

#[test]
fn saddle_point_schur_with_identity_a11() {
    let mut rng = UniformStream::new(3);
    let a12 = rng.matrix(4, 3, -1.0, 1.0).unwrap();
    let a21 = rng.matrix(3, 4, -1.0, 1.0).unwrap();
    let sys = BlockSystem::new(DenseMatrix::identity(4), a12.clone(), a21.clone(), DenseMatrix::zeros(3, 3)).unwrap();
    let want = a21.matmul(&a12).unwrap().scaled(-1.0);
    assert!(sys.assemble_schur().sub(&want).unwrap().max_abs() < 1e-15);
    assert!(sys.is_saddle_point());
}

#[test]
fn apply_block_reproduces_monolithic_columns() {
    let sys = random_block_system(5, 3, 0.0, A22Fill::Random, 11).unwrap();
    let a = sys.monolithic();
    let mut e = vec![0.0; 8];
    for j in 0..8 {
        e[j] = 1.0;
        assert_eq!(sys.apply_block(&e).unwrap(), a.column(j));
        e[j] = 0.0;
    }
}

#[test]
fn preconditioner_application_inverts_the_assembled_preconditioner() {
    for seed in 0..50u64 {
        let (n1, n2) = (3 + (seed as usize % 5), 2 + (seed as usize % 4));
        let sys = random_block_system(n1, n2, 2.0, A22Fill::Random, seed).unwrap();
        let r = UniformStream::new(seed + 77).vector(n1 + n2, -1.0, 1.0).unwrap();
        let mut kinds: Vec<PreconditionerKind> = PrecondTag::ALL.iter().map(|&t| PreconditionerKind::exact(t)).collect();
        let approx = sys.assemble_schur().add(&DenseMatrix::identity(n2).scaled(0.3)).unwrap();
        kinds.push(PreconditionerKind::provided(PrecondTag::LowerTri, approx.clone()));
        kinds.push(PreconditionerKind::provided(PrecondTag::Ldu, approx));
        for kind in &kinds {
            let z = make_preconditioner(&sys, kind).unwrap().apply(&r).unwrap();
            let back = assemble_preconditioner(&sys, kind).matvec(&z);
            let err: Vec<f64> = back.iter().zip(&r).map(|(a, b)| a - b).collect();
            assert!(norm(&err) <= 1e-10 * norm(&r), "seed {seed} {kind:?}");
        }
    }
}

#[test]
fn hat_kinds_coincide_with_schur_kinds_when_coupling_vanishes() {
    let mut rng = UniformStream::new(5);
    let mut a11 = rng.matrix(4, 4, -1.0, 1.0).unwrap();
    a11.add_diagonal(4.0);
    let mut a22 = rng.matrix(3, 3, -1.0, 1.0).unwrap();
    a22.add_diagonal(3.0);
    let a21 = rng.matrix(3, 4, -1.0, 1.0).unwrap();
    let sys = BlockSystem::new(a11, DenseMatrix::zeros(4, 3), a21, a22).unwrap();
    let r = rng.vector(7, -1.0, 1.0).unwrap();
    for (plain, hat) in [
        (PrecondTag::DiagPlus, PrecondTag::DiagHatPlus),
        (PrecondTag::DiagMinus, PrecondTag::DiagHatMinus),
    ] {
        let a = make_preconditioner(&sys, &PreconditionerKind::exact(plain)).unwrap().apply(&r).unwrap();
        let b = make_preconditioner(&sys, &PreconditionerKind::exact(hat)).unwrap().apply(&r).unwrap();
        assert!(close(&a, &b, 1e-12));
    }
}

/// A22 = A21 A11⁻¹ A12 + X Y with X Y of rank `k` makes S22 = X Y exactly
/// rank `k` up to rounding.
fn system_with_schur_rank(n1: usize, n2: usize, k: usize, seed: u64) -> BlockSystem {
    let mut rng = UniformStream::new(seed);
    let mut a11 = rng.matrix(n1, n1, -1.0, 1.0).unwrap();
    a11.add_diagonal(n1 as f64);
    let a12 = rng.matrix(n1, n2, -1.0, 1.0).unwrap();
    let a21 = rng.matrix(n2, n1, -1.0, 1.0).unwrap();
    let coupling = a21.matmul(&lu_factor(&a11).unwrap().solve_matrix(&a12).unwrap()).unwrap();
    let low = if k == 0 {
        DenseMatrix::zeros(n2, n2)
    } else {
        let x = rng.matrix(n2, k, -1.0, 1.0).unwrap();
        let y = rng.matrix(k, n2, -1.0, 1.0).unwrap();
        x.matmul(&y).unwrap()
    };
    BlockSystem::new(a11, a12, a21, coupling.add(&low).unwrap()).unwrap()
}

#[test]
fn nullity_of_the_system_equals_nullity_of_the_schur_complement() {
    for seed in 0..40u64 {
        let n1 = 2 + (seed as usize * 5) % 29;
        let n2 = 1 + (seed as usize * 3) % 30;
        let k = (seed as usize) % (n2 + 1);
        let sys = system_with_schur_rank(n1, n2, k, seed);
        let na = rank_and_nullspace(&sys.monolithic(), 1e3).nullity();
        let ns = rank_and_nullspace(sys.assemble_schur(), 1e3).nullity();
        assert_eq!(na, ns, "seed {seed} n1 {n1} n2 {n2} rank {k}");
        assert_eq!(ns, n2 - k, "seed {seed}");
    }
}

#[test]
fn gmres_with_identity_operator_takes_one_step() {
    let b = [1.0, 2.0, 3.0];
    let r = gmres(&Identity(3), &Identity(3), &b, None, 1e-14, None).unwrap();
    assert!(r.converged && r.iterations <= 1);
    assert!(close(&r.solution, &b, 1e-15));
}

#[test]
fn exact_block_preconditioners_meet_their_iteration_bounds() {
    let tol = 1e-12;
    for seed in 0..100u64 {
        let sys = random_block_system(40, 40, 0.0, A22Fill::Random, seed).unwrap();
        let b = vec![1.0; 80];
        for tag in [PrecondTag::LowerTri, PrecondTag::UpperTri, PrecondTag::Ldu] {
            let p = make_preconditioner(&sys, &PreconditionerKind::exact(tag)).unwrap();
            let r = gmres(&sys, &p, &b, None, tol, None).unwrap();
            assert!(r.converged && r.iterations <= 2, "seed {seed} {tag}: {}", r.iterations);
        }
        let saddle = random_block_system(40, 40, 0.0, A22Fill::Zero, seed).unwrap();
        for tag in [PrecondTag::DiagPlus, PrecondTag::DiagMinus] {
            let p = make_preconditioner(&saddle, &PreconditionerKind::exact(tag)).unwrap();
            let r = gmres(&saddle, &p, &b, None, tol, None).unwrap();
            assert!(r.converged && r.iterations <= 3, "seed {seed} {tag}: {}", r.iterations);
        }
    }
}

#[test]
fn fixed_point_with_d_minus_diverges_at_the_golden_ratio() {
    let sys = scalar(1.0, 1.0, 1.0, 0.0);
    let p = make_preconditioner(&sys, &PreconditionerKind::exact(PrecondTag::DiagMinus)).unwrap();
    let it = iteration_matrix(&sys, &p).unwrap();
    let rho = blockprec::dense::eigenvalues_dense(&it, blockprec::dense::DEFAULT_MAX_SWEEPS)
        .unwrap()
        .spectral_radius();
    assert!((rho - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-10);
    let r = fixed_point(&sys, &p, &[1.0, 1.0], None, 1e-12, 200).unwrap();
    assert!(!r.converged);
    assert_eq!(r.breakdown, Some(Breakdown::Divergence));
}

#[test]
fn fixed_point_with_exact_ldu_is_immediate() {
    let sys = random_block_system(6, 4, 1.0, A22Fill::Random, 2).unwrap();
    let p = make_preconditioner(&sys, &PreconditionerKind::exact(PrecondTag::Ldu)).unwrap();
    let r = fixed_point(&sys, &p, &[1.0; 10], None, 1e-12, 10).unwrap();
    assert!(r.converged && r.iterations <= 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gmres_agrees_with_direct_solve(n1 in 2usize..15, n2 in 1usize..15, seed in 0u64..10_000, tag_ix in 0usize..7) {
        let sys = random_block_system(n1, n2, 3.0, A22Fill::Random, seed).unwrap();
        let tag = PrecondTag::ALL[tag_ix];
        let p = make_preconditioner(&sys, &PreconditionerKind::exact(tag)).unwrap();
        let b = UniformStream::new(seed + 1).vector(n1 + n2, -1.0, 1.0).unwrap();
        let r = gmres(&sys, &p, &b, None, 1e-13, None).unwrap();
        let h = &r.residual_history;
        prop_assert_eq!(r.iterations, h.len() - 1);
        for w in h.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 10.0 * f64::EPSILON));
        }
        if r.converged {
            let x = lu_factor(&sys.monolithic()).unwrap().solve(&b).unwrap();
            let err: Vec<f64> = r.solution.iter().zip(&x).map(|(a, b)| a - b).collect();
            prop_assert!(norm(&err) <= 1e-8 * norm(&x));
        }
    }
}
