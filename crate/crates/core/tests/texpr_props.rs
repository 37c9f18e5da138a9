mod common;

use common::{derivative_check, random_expr};
use cznd::texpr::parse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn derivative_matches_central_differences_on_random_expressions() {
    let (checked, extrapolated) = derivative_check(7, 200).unwrap();
    assert!(checked >= 500, "only {checked} points checked");
    assert!(extrapolated * 100 <= checked, "{extrapolated} of {checked} points needed extrapolation");
}

#[test]
fn printed_form_parses_back_to_an_equivalent_expression() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let e = random_expr(&mut rng, 5);
        let back = parse(&e.to_string()).unwrap_or_else(|err| panic!("`{e}` does not parse: {err}"));
        for _ in 0..100 {
            let t = rng.gen_range(0.0..10.0);
            match (e.eval(t), back.eval(t)) {
                (Ok(a), Ok(b)) => assert!(a == b || (a.is_nan() && b.is_nan()), "`{e}` at {t}: {a} vs {b}"),
                (a, b) => assert_eq!(a.is_err(), b.is_err(), "`{e}` at {t}"),
            }
        }
    }
}

#[test]
fn derivative_uses_only_grammar_nodes_and_reprints() {
    let e = parse("sin(t)^3 / (2 + cos(t*t))").unwrap();
    let d = e.differentiate();
    let reparsed = parse(&d.to_string()).unwrap();
    for t in [0.1, 1.0, 4.5] {
        assert_eq!(d.eval(t), reparsed.eval(t));
    }
}
