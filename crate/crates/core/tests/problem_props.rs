use cznd::linalg::CMatrix;
use cznd::models::{flatten_state, lift_state};
use cznd::problem::{build_wr_br, example3, load_problem, parse_problem, TimeMatrix, TvsscmeProblem, EXAMPLE3_TVP};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
}

/// A 3×2 instance with time-varying F and A, so that `m != n` exercises the Kronecker layout.
fn rectangular() -> TvsscmeProblem {
    let text = "dims 3 2
[F]
2 + sin(t) ; cos(t)
t ; 0
-1 ; 0.5*t
3 ; sin(2*t)
[A]
1 ; 0
0 ; t
cos(t) ; 0
0.5 ; 0
2 ; -1
0 ; 0
t*t ; 1
0 ; 0
-3 ; 0.1
[C]
sin(t) ; 1
2 ; 0
0 ; cos(t)
1 ; 1
t ; -t
3 ; 0
";
    parse_problem(text, "rect").unwrap()
}

fn split_error(p: &TvsscmeProblem, x: &CMatrix, tau: f64) -> Vec<f64> {
    flatten_state(&p.equation_error(x, tau).unwrap()).into_inner()
}

#[test]
fn complex_error_split_matches_real_embedding() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [example3(), rectangular()] {
        for _ in 0..200 {
            let tau = rng.gen_range(0.0..10.0);
            let x = random_complex(&mut rng, p.m(), p.n());
            let sys = build_wr_br(&p, tau).unwrap();
            let via_real = sys.w.real_mul_vec(&flatten_state(&x)).sub(&sys.b);
            let via_complex = split_error(&p, &x, tau);
            let diff = via_real.sub(&via_complex).norm2();
            assert!(diff <= 1e-10 * (1.0 + sys.b.norm2()), "{} at {tau}: {diff}", p.name());
        }
    }
}

#[test]
fn embedding_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1e-5;
    for p in [example3(), rectangular()] {
        for _ in 0..20 {
            let tau = rng.gen_range(0.1..9.9);
            let sys = build_wr_br(&p, tau).unwrap();
            let (up, down) = (build_wr_br(&p, tau + h).unwrap(), build_wr_br(&p, tau - h).unwrap());
            let fd_w = up.w.sub(&down.w).unwrap().scale_real(0.5 / h);
            let err = fd_w.sub(&sys.w_dot).unwrap().max_abs();
            assert!(err <= 1e-5 * (1.0 + sys.w_dot.max_abs()), "{err}");
            let fd_b = up.b.sub(&down.b).scale(0.5 / h);
            let err = fd_b.sub(&sys.b_dot).norm_inf();
            assert!(err <= 1e-5 * (1.0 + sys.b_dot.norm_inf()), "{err}");
        }
    }
}

#[test]
fn exact_solution_satisfies_the_equation() {
    let p = example3();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let tau = rng.gen_range(0.0..10.0);
        let x = p.exact().unwrap().eval_at(tau).unwrap();
        let r = p.equation_error(&x, tau).unwrap().frobenius_norm();
        assert!(r <= 1e-10, "{tau}: {r}");
    }
}

#[test]
fn exact_solution_satisfies_the_conjugated_equation() {
    let p = example3();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let tau = rng.gen_range(0.0..10.0);
        let s = p.snapshot(tau).unwrap();
        let x = p.exact().unwrap().eval_at(tau).unwrap();
        let lhs = x
            .conjugate()
            .matmul(&s.f.conjugate())
            .unwrap()
            .sub(&s.a.conjugate().matmul(&x).unwrap())
            .unwrap();
        let r = lhs.sub(&s.c.conjugate()).unwrap().frobenius_norm();
        assert!(r <= 1e-10, "{tau}: {r}");
    }
}

fn assert_derivatives_match(name: &str, tm: &TimeMatrix, taus: &[f64]) {
    let h = 1e-5;
    for &tau in taus {
        let d = tm.derivative_at(tau).unwrap();
        let fd = tm
            .eval_at(tau + h)
            .unwrap()
            .sub(&tm.eval_at(tau - h).unwrap())
            .unwrap()
            .scale_real(0.5 / h);
        for i in 0..tm.rows() {
            for j in 0..tm.cols() {
                let (a, b) = (d.get(i, j), fd.get(i, j));
                assert!((a - b).norm() <= 1e-5 * (1.0 + a.norm()), "{name}[{i},{j}] at {tau}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn time_matrix_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let taus: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..10.0)).collect();
    let file = parse_problem(EXAMPLE3_TVP, "file").unwrap();
    for p in [example3(), file, rectangular()] {
        assert_derivatives_match("F", p.f(), &taus);
        assert_derivatives_match("A", p.a(), &taus);
        assert_derivatives_match("C", p.c(), &taus);
        if let Some(x) = p.exact() {
            assert_derivatives_match("EXACT", x, &taus);
        }
    }
}

#[test]
fn example3_values_at_zero() {
    let p = example3();
    let s = p.snapshot(0.0).unwrap();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    assert_eq!(s.f, CMatrix::from_rows(&[vec![c(6.0, 1.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(4.0, 1.0)]]));
    assert_eq!(s.c, CMatrix::from_rows(&[vec![c(2.0, 2.0), c(2.0, 6.0)], vec![c(-4.0, -8.0), c(-2.0, -2.0)]]));
    let sys = build_wr_br(&p, 0.0).unwrap();
    let top = CMatrix::from_real_rows(&[
        vec![5.0, 0.0, 1.0, 0.0],
        vec![0.0, 5.0, 0.0, 1.0],
        vec![1.0, 0.0, 3.0, 0.0],
        vec![0.0, 1.0, 0.0, 3.0],
    ]);
    assert_eq!(sys.w.block(0, 0, 4, 4), top);
    let x = [0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0];
    assert!(sys.w.real_mul_vec(&x).sub(&sys.b).norm_inf() <= 1e-12);
}

#[test]
fn decoupled_problem_embeds_as_identity() {
    let c = CMatrix::from_real_rows(&[vec![1.0, -2.0], vec![3.5, 0.25]]);
    let p = TvsscmeProblem::new(
        "decoupled",
        TimeMatrix::constant(CMatrix::identity(2)),
        TimeMatrix::constant(CMatrix::zeros(2, 2)),
        TimeMatrix::constant(c.clone()),
        None,
    )
    .unwrap();
    let sys = build_wr_br(&p, 3.0).unwrap();
    assert_eq!(sys.w, CMatrix::identity(8));
    assert_eq!(lift_state(&sys.b, 2, 2).unwrap(), c);
    assert_eq!(p.residual(3.0, &sys.b).unwrap(), 0.0);
}

#[test]
fn shipped_file_loads_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("example3.tvp");
    std::fs::write(&path, EXAMPLE3_TVP).unwrap();
    let p = load_problem(&path).unwrap();
    assert_eq!(p.name(), "example3");
    let q = example3();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let tau = rng.gen_range(0.0..10.0);
        let (a, b) = (p.snapshot(tau).unwrap(), q.snapshot(tau).unwrap());
        for (x, y) in [(&a.f, &b.f), (&a.a, &b.a), (&a.c, &b.c)] {
            assert!(x.sub(y).unwrap().max_abs() <= 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_of_exact_state_is_zero(tau in 0.0f64..10.0) {
        let p = example3();
        let x = p.exact_state(tau).unwrap().unwrap();
        prop_assert!(p.residual(tau, &x).unwrap() == 0.0);
    }

    #[test]
    fn embedding_is_linear_in_the_state(tau in 0.0f64..10.0, seed in any::<u64>()) {
        let p = rectangular();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (random_complex(&mut rng, 3, 2), random_complex(&mut rng, 3, 2));
        let w = build_wr_br(&p, tau).unwrap().w;
        let sum = w.real_mul_vec(&flatten_state(&x.add(&y).unwrap()));
        let parts = w.real_mul_vec(&flatten_state(&x)).add(&w.real_mul_vec(&flatten_state(&y)));
        prop_assert!(sum.sub(&parts).norm_inf() <= 1e-10 * (1.0 + sum.norm_inf()));
    }
}
