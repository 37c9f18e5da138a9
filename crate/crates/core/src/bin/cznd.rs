use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cznd::harness::{self, ComparisonReport, ExperimentSpec, HarnessError, RunReport};
use cznd::models::{Gain, ModelKind};
use cznd::ode::IntegratorConfig;
use cznd::problem::{write_problem, DEFAULT_GRID_POINTS, EXAMPLE3_TVP};

#[derive(Parser)]
#[command(name = "cznd", version, about = "Zeroing-neural-dynamics experiments for X F - A conj(X) = C")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one model from seeded random initial states.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "con-cznd1-conj")]
        model: ModelKind,
        #[arg(long, default_value = "10")]
        gamma: Gain,
    },
    /// Run one model for several gains on shared initial states.
    SweepGamma {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "con-cznd1-conj")]
        model: ModelKind,
        /// Repeat for each gain, e.g. `--gamma 10 --gamma 10+20i`.
        #[arg(long)]
        gamma: Vec<Gain>,
    },
    /// Run several models with one gain on shared initial states.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Repeat for each model.
        #[arg(long)]
        model: Vec<ModelKind>,
        #[arg(long, default_value = "10")]
        gamma: Gain,
    },
    /// Check the spectral and determinant uniqueness conditions on a grid.
    CheckUniqueness {
        #[arg(long, default_value = "example3")]
        problem: String,
        #[arg(long, default_value = "0:10", value_parser = parse_span)]
        span: (f64, f64),
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a problem in `.tvp` form.
    PrintProblem {
        #[arg(long, default_value = "example3")]
        problem: String,
    },
}

#[derive(Args)]
struct Common {
    /// `example3` or a path to a `.tvp` file.
    #[arg(long, default_value = "example3")]
    problem: String,
    #[arg(long, default_value = "0:10", value_parser = parse_span)]
    span: (f64, f64),
    #[arg(long, default_value_t = 8)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Half-width of the interval initial entries are drawn from.
    #[arg(long, default_value_t = 5.0)]
    init_range: f64,
    #[arg(long, default_value_t = 1e-3)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    abs_tol: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Output path prefix for CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_span(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad span start `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad span end `{b}`"))?;
    if !(b > a) {
        return Err(format!("span end must exceed start, got {a}:{b}"));
    }
    Ok((a, b))
}

impl Common {
    fn spec(&self, model: ModelKind, gamma: Gain) -> ExperimentSpec {
        ExperimentSpec {
            problem: self.problem.clone(),
            model,
            gamma,
            span: self.span,
            runs: self.runs,
            init_range: self.init_range,
            seed: self.seed,
            integrator: IntegratorConfig {
                rel_tol: self.rel_tol,
                abs_tol: self.abs_tol,
                sample_count: self.samples,
                ..IntegratorConfig::default()
            },
            out: self.out.clone(),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3e}"))
}

fn print_run(r: &RunReport) {
    println!("model {}  gamma {}", r.model, r.gamma);
    for s in &r.runs {
        match &s.error {
            Some(e) => println!("  run {:>2}: FAILED {e}", s.index),
            None => {
                let st = s.stats.unwrap_or_default();
                println!(
                    "  run {:>2}: final {}  at tau=2 {}  cond [{}, {}]  steps {} (+{} rejected, {} fallback)",
                    s.index,
                    opt(s.final_residual),
                    opt(s.residual_at_2),
                    opt(s.cond_min),
                    opt(s.cond_max),
                    st.accepted_steps,
                    st.rejected_steps,
                    st.fallback_solves
                );
            }
        }
    }
    println!(
        "  median final residual {}  median residual at tau=2 {}",
        opt(r.median_final_residual),
        opt(r.median_residual_at_2)
    );
}

fn print_comparison(c: &ComparisonReport) {
    for s in &c.series {
        print_run(&s.report);
    }
    if c.series.len() > 1 {
        println!("agreement with {} (max |difference| / 10x tolerance band):", c.series[0].label);
        for b in 1..c.series.len() {
            println!("  {}: {:.3}", c.series[b].label, c.worst_band_ratio(0, b));
        }
        let base = c.series[0].report.median_final_residual;
        for s in &c.series[1..] {
            if let (Some(a), Some(b)) = (base, s.report.median_final_residual) {
                println!("  median final residual ratio {} / {}: {:.3}", s.label, c.series[0].label, b / a);
            }
        }
    }
    print_files(&c.files);
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { common, model, gamma } => {
            let report = harness::run(&common.spec(model, gamma))?;
            print_run(&report);
            print_files(&report.files);
        }
        Command::SweepGamma { common, model, gamma } => {
            let first = gamma.first().copied().ok_or_else(|| {
                HarnessError::Usage("sweep-gamma needs at least one --gamma".into())
            })?;
            let report = harness::gamma_sweep(&common.spec(model, first), &gamma)?;
            print_comparison(&report);
        }
        Command::Compare { common, model, gamma } => {
            let first = model.first().copied().ok_or_else(|| {
                HarnessError::Usage("compare needs at least one --model".into())
            })?;
            let report = harness::compare_models(&common.spec(first, gamma), &model)?;
            print_comparison(&report);
        }
        Command::CheckUniqueness { problem, span, grid, out } => {
            let p = harness::resolve_problem(&problem)?;
            if grid == 1 {
                eprintln!("warning: a single grid point gives minimal coverage of the span");
            }
            let r = harness::check_uniqueness(&p, span, grid, out.as_deref())?;
            println!("problem {}  grid {} points on [{}, {}]", p.name(), grid, span.0, span.1);
            println!("  min eigen gap   {}", opt(r.min_eigen_gap));
            println!("  min |det W_R|   {}", opt(r.min_abs_det));
            println!("  det sign changes {}", r.det_sign_changes);
            println!("  unique (pointwise on grid): {}", r.unique);
        }
        Command::PrintProblem { problem } => {
            if problem == "example3" {
                print!("{EXAMPLE3_TVP}");
            } else {
                let p = harness::resolve_problem(&problem)?;
                print!("{}", write_problem(&p).map_err(HarnessError::ProblemLoad)?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
