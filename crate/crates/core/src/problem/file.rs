//! The `.tvp` problem-file format.
//!
//! ```text
//! # comment
//! dims m n
//! [F]            n×n entries
//! [A]            m×m entries
//! [C]            m×n entries
//! [EXACT]        optional, m×n entries
//! ```
//!
//! Each entry occupies one line, row-major, as `re_expr ; im_expr`. An entry
//! without `;` is taken as purely real.

use std::fmt::Write as _;
use std::path::Path;

use super::{ProblemError, Result, TimeMatrix, TvsscmeProblem};
use crate::texpr::{parse, Expr};

/// Source of the shipped benchmark file.
pub const EXAMPLE3_TVP: &str = include_str!("../../data/example3.tvp");

const SECTIONS: [&str; 4] = ["F", "A", "C", "EXACT"];

struct Section {
    name: String,
    line: usize,
    entries: Vec<(usize, String)>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(k) => &line[..k],
        None => line,
    }
}

fn parse_dims(rest: &str, line: usize) -> Result<(usize, usize)> {
    let bad = || ProblemError::Syntax {
        line,
        message: format!("expected `dims m n` with positive integers, found `dims {}`", rest.trim()),
    };
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(bad());
    }
    let m: usize = parts[0].parse().map_err(|_| bad())?;
    let n: usize = parts[1].parse().map_err(|_| bad())?;
    if m == 0 || n == 0 {
        return Err(bad());
    }
    Ok((m, n))
}

fn build_matrix(sec: &Section, rows: usize, cols: usize) -> Result<TimeMatrix> {
    if sec.entries.len() != rows * cols {
        return Err(ProblemError::DimensionMismatch {
            section: sec.name.clone(),
            message: format!(
                "expected {rows}x{cols} = {} entries, found {} (section starts at line {})",
                rows * cols,
                sec.entries.len(),
                sec.line
            ),
        });
    }
    let mut exprs = Vec::with_capacity(rows * cols);
    for (k, (_, text)) in sec.entries.iter().enumerate() {
        let (row, col) = (k / cols + 1, k % cols + 1);
        let wrap = |source| ProblemError::Parse {
            section: sec.name.clone(),
            row,
            col,
            source,
        };
        let (re_text, im_text) = match text.split_once(';') {
            Some((r, i)) => (r.trim(), Some(i.trim())),
            None => (text.as_str(), None),
        };
        let re = parse(re_text).map_err(wrap)?;
        let im = match im_text {
            Some(i) => parse(i).map_err(wrap)?,
            None => Expr::Const(0.0),
        };
        exprs.push((re, im));
    }
    TimeMatrix::from_exprs(rows, cols, exprs)
}

/// Parses `.tvp` text into a problem named `name`.
pub fn parse_problem(text: &str, name: &str) -> Result<TvsscmeProblem> {
    let mut dims: Option<(usize, usize)> = None;
    let mut sections: Vec<Section> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .map(str::trim)
                .ok_or_else(|| ProblemError::Syntax {
                    line: line_no,
                    message: format!("unterminated section header `{line}`"),
                })?
                .to_ascii_uppercase();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(ProblemError::Syntax {
                    line: line_no,
                    message: format!("unknown section [{name}] (expected F, A, C or EXACT)"),
                });
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(ProblemError::Syntax {
                    line: line_no,
                    message: format!("duplicate section [{name}]"),
                });
            }
            sections.push(Section {
                name,
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        if let Some(rest) = line.strip_prefix("dims") {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                if dims.is_some() || !sections.is_empty() {
                    return Err(ProblemError::Syntax {
                        line: line_no,
                        message: "`dims` must appear once, before any section".into(),
                    });
                }
                dims = Some(parse_dims(rest, line_no)?);
                continue;
            }
        }
        match sections.last_mut() {
            Some(sec) => sec.entries.push((line_no, line.to_string())),
            None => {
                return Err(ProblemError::Syntax {
                    line: line_no,
                    message: "entry outside of any section".into(),
                })
            }
        }
    }

    let (m, n) = dims.ok_or_else(|| ProblemError::Syntax {
        line: 0,
        message: "missing `dims m n` header".into(),
    })?;
    let find = |name: &str| sections.iter().find(|s| s.name == name);
    let require = |name: &str| find(name).ok_or_else(|| ProblemError::MissingSection(name.into()));

    let f = build_matrix(require("F")?, n, n)?;
    let a = build_matrix(require("A")?, m, m)?;
    let c = build_matrix(require("C")?, m, n)?;
    let exact = find("EXACT").map(|s| build_matrix(s, m, n)).transpose()?;
    TvsscmeProblem::new(name, f, a, c, exact)
}

/// Reads a `.tvp` file; the problem takes the file stem as its name.
pub fn load_problem(path: impl AsRef<Path>) -> Result<TvsscmeProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".into());
    parse_problem(&text, &name)
}

/// Serializes an expression-backed problem in `.tvp` form.
///
/// Fails with [`ProblemError::NotSymbolic`] for matrices built from closures.
pub fn write_problem(p: &TvsscmeProblem) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", p.name());
    let _ = writeln!(out, "dims {} {}", p.m(), p.n());
    let mut emit = |name: &str, tm: &TimeMatrix| -> Result<()> {
        let exprs = tm.expressions().ok_or_else(|| ProblemError::NotSymbolic(name.into()))?;
        let _ = writeln!(out, "\n[{name}]");
        for (re, im) in exprs {
            let _ = writeln!(out, "{re} ; {im}");
        }
        Ok(())
    };
    emit("F", p.f())?;
    emit("A", p.a())?;
    emit("C", p.c())?;
    if let Some(x) = p.exact() {
        emit("EXACT", x)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::example3;
    use rand::{Rng, SeedableRng};

    #[test]
    fn shipped_file_matches_constructor() {
        let file = parse_problem(EXAMPLE3_TVP, "example3").unwrap();
        let code = example3();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let t = rng.gen_range(0.0..10.0);
            let pairs = [
                (file.f(), code.f()),
                (file.a(), code.a()),
                (file.c(), code.c()),
                (file.exact().unwrap(), code.exact().unwrap()),
            ];
            for (x, y) in pairs {
                let dv = x.eval_at(t).unwrap().sub(&y.eval_at(t).unwrap()).unwrap().max_abs();
                let dd = x.derivative_at(t).unwrap().sub(&y.derivative_at(t).unwrap()).unwrap().max_abs();
                assert!(dv <= 1e-13, "value gap {dv} at {t}");
                assert!(dd <= 1e-12, "derivative gap {dd} at {t}");
            }
        }
    }

    #[test]
    fn wrong_c_shape_names_c() {
        let text = "dims 2 2\n[F]\n1\n0\n0\n1\n[A]\n1\n0\n0\n1\n[C]\n1\n2\n3\n4\n5\n6\n";
        match parse_problem(text, "bad") {
            Err(ProblemError::DimensionMismatch { section, .. }) => assert_eq!(section, "C"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_entry_names_section_row_col() {
        let text = "dims 1 2\n[F]\n1\n0\n0\nsin( ; 0\n[A]\n1\n[C]\n1\n1\n";
        match parse_problem(text, "bad") {
            Err(ProblemError::Parse { section, row, col, source }) => {
                assert_eq!((section.as_str(), row, col), ("F", 2, 2));
                assert_eq!(source.offset, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        let msg = parse_problem(text, "bad").unwrap_err().to_string();
        assert!(msg.contains("[F] row 2 col 2"), "{msg}");
    }

    #[test]
    fn missing_section_and_header() {
        let err = parse_problem("dims 1 1\n[F]\n1\n[A]\n1\n", "x").unwrap_err();
        assert!(matches!(err, ProblemError::MissingSection(ref s) if s == "C"));
        let err = parse_problem("[F]\n1\n", "x").unwrap_err();
        assert!(matches!(err, ProblemError::Syntax { .. }));
        let err = parse_problem("dims 1 1\n[Q]\n", "x").unwrap_err();
        assert!(matches!(err, ProblemError::Syntax { line: 2, .. }));
    }

    #[test]
    fn write_then_parse_round_trips() {
        let p = parse_problem(EXAMPLE3_TVP, "example3").unwrap();
        let text = write_problem(&p).unwrap();
        let q = parse_problem(&text, "example3").unwrap();
        for t in [0.0, 0.37, 4.2, 9.9] {
            assert_eq!(p.c().eval_at(t).unwrap(), q.c().eval_at(t).unwrap());
            assert_eq!(p.f().derivative_at(t).unwrap(), q.f().derivative_at(t).unwrap());
        }
        assert!(matches!(write_problem(&example3()), Err(ProblemError::NotSymbolic(_))));
    }

    #[test]
    fn real_only_entries_and_comments() {
        let p = parse_problem("dims 1 1 # scalar\n[F]\n2\n[A]\n0.5 ; 1 # complex\n[C]\nt\n", "s").unwrap();
        assert_eq!(p.f().eval_at(1.0).unwrap().get(0, 0).im, 0.0);
        assert_eq!(p.a().eval_at(1.0).unwrap().get(0, 0).im, 1.0);
        assert!(p.exact().is_none());
    }
}
