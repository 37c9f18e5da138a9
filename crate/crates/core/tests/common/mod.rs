use cznd::texpr::Expr;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random expression of depth at most `depth`; powers apply to leaves only.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if leaf {
        return if rng.gen_bool(0.5) {
            Expr::Time
        } else {
            Expr::Const((rng.gen_range(-3.0..3.0f64) * 100.0).round() / 100.0)
        };
    }
    let op = rng.gen_range(0..9);
    let mut sub = || Box::new(random_expr(rng, depth - 1));
    match op {
        0 => Expr::Neg(sub()),
        1 => Expr::Add(sub(), sub()),
        2 => Expr::Sub(sub(), sub()),
        3 => Expr::Mul(sub(), sub()),
        4 => Expr::Div(sub(), sub()),
        5 => {
            let base = Box::new(random_expr(rng, 0));
            let k = rng.gen_range(1..=3);
            Expr::Pow(base, k)
        }
        6 | 7 => Expr::Sin(sub()),
        _ => Expr::Cos(sub()),
    }
}

fn denominators_clear(e: &Expr, t: f64) -> bool {
    let mut ok = true;
    e.visit_denominators(&mut |d| match d.eval(t) {
        Ok(v) if v.abs() >= 1e-3 => {}
        _ => ok = false,
    });
    ok
}

/// Compares symbolic derivatives of `count` random expressions with central
/// differences (`h = 1e-5`, tolerance `1e-5 (1 + |d|)`) at five random
/// `t ∈ [0, 10]` each, skipping points next to a denominator below `1e-3`.
///
/// Where the `h = 1e-5` quotient misses, its truncation error grows like
/// `(h/d)^2` near a small denominator `d`; such points are re-checked against
/// a Richardson-extrapolated quotient at the same tolerance and counted.
/// Returns `(points checked, points re-checked)`.
pub fn derivative_check(seed: u64, count: usize) -> Result<(usize, usize), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let (mut checked, mut extrapolated) = (0, 0);
    for i in 0..count {
        let e = random_expr(&mut rng, 5);
        let d = e.differentiate();
        for _ in 0..5 {
            let t: f64 = rng.gen_range(0.0..10.0);
            if ![t - h, t, t + h].iter().all(|&s| denominators_clear(&e, s)) {
                continue;
            }
            let exact = d.eval(t).map_err(|err| err.to_string())?;
            let central = |h: f64| (e.eval(t + h).unwrap() - e.eval(t - h).unwrap()) / (2.0 * h);
            let tol = 1e-5 * (1.0 + exact.abs());
            checked += 1;
            if (exact - central(h)).abs() <= tol {
                continue;
            }
            let richardson = (4.0 * central(h / 10.0) - central(h / 5.0)) / 3.0;
            if (exact - richardson).abs() > tol {
                return Err(format!(
                    "expr #{i} `{e}` at t={t}: symbolic {exact}, difference quotient {}, extrapolated {richardson}",
                    central(h)
                ));
            }
            extrapolated += 1;
        }
    }
    Ok((checked, extrapolated))
}
