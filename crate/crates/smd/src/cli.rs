//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use smd_core::engine::{optimize_with, Clock, NoClock};
use smd_core::oracle::{brute_force, brute_force_constrained};
use smd_core::{Mode, MrfProblem, SolverConfig};

use crate::error::{Error, Result};
use crate::format::{load_problem, parse_labeling, save_problem, write_labeling};
use crate::image::{problem_from_image, seeds_from_mask, SegmentationConfig};
use crate::pnm::read_pnm;
use crate::synthetic::{generate_synthetic, SyntheticConfig};

pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "smd", version, about = "Multi-label MRF inference by submodular decomposition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random grid problem.
    Generate {
        /// Grid size as HxW.
        #[arg(long, value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long)]
        labels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add strict class-size constraints proportional to the label index.
        #[arg(long)]
        class_sizes: bool,
        #[arg(long, default_value_t = 0.5)]
        pairwise_sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize the dual and extract a labeling.
    Solve {
        problem: PathBuf,
        /// CSV trace output.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Labeling output, one label per line.
        #[arg(long)]
        labeling: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Exhaustive search on a small problem.
    Oracle {
        problem: PathBuf,
        /// Report whether this labeling file is optimal.
        #[arg(long)]
        check: Option<PathBuf>,
        /// Also run the solver and report the duality gap.
        #[arg(long)]
        against_solve: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Build a segmentation problem from an image and a seed mask.
    FromImage {
        /// PGM or PPM image.
        #[arg(long)]
        image: PathBuf,
        /// PGM mask; value k > 0 seeds class k - 1.
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        a1: f64,
        #[arg(long, default_value_t = 20.0)]
        a2: f64,
        #[arg(long = "box", default_value_t = 20)]
        box_size: usize,
        /// Star prior as LABEL:ROW,COL (repeatable).
        #[arg(long, value_parser = parse_star)]
        star: Vec<(usize, (usize, usize))>,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Equal class sizes as P,Q (repeatable).
        #[arg(long, value_parser = parse_pair)]
        equal_sizes: Vec<(usize, usize)>,
        /// Balanced signed flux between labels P,Q.
        #[arg(long, value_parser = parse_pair)]
        flux: Option<(usize, usize)>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Hybrid,
    Subgradient,
    Mma,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Hybrid)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub alpha0: f64,
    #[arg(long, default_value_t = 50.0, value_parser = positive)]
    pub tau: f64,
    #[arg(long, default_value_t = 10)]
    pub oscillation_window: usize,
    #[arg(long, default_value_t = 200)]
    pub stagnation_window: usize,
    #[arg(long, default_value_t = 1e-9, value_parser = nonnegative)]
    pub tie_tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record wall-clock seconds in the trace (otherwise 0, keeping traces
    /// reproducible).
    #[arg(long)]
    pub timing: bool,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            mode: match self.mode {
                ModeArg::Hybrid => Mode::Hybrid,
                ModeArg::Subgradient => Mode::Subgradient,
                ModeArg::Mma => Mode::MinMarginal,
            },
            max_iterations: self.max_iters as usize,
            schedule: smd_core::engine::StepSchedule {
                alpha0: self.alpha0,
                tau: self.tau,
            },
            oscillation_window: self.oscillation_window,
            stagnation_window: self.stagnation_window,
            tie_tolerance: self.tie_tolerance,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got `{s}`"))?;
    let dim = |t: &str| match t.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("invalid grid dimension `{t}`")),
    };
    Ok((dim(h)?, dim(w)?))
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected P,Q, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid index `{t}`"));
    Ok((n(a)?, n(b)?))
}

fn parse_star(s: &str) -> std::result::Result<(usize, (usize, usize)), String> {
    let (label, at) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LABEL:ROW,COL, got `{s}`"))?;
    let label = label.parse().map_err(|_| format!("invalid label `{label}`"))?;
    Ok((label, parse_pair(at)?))
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn nonnegative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a nonnegative number, got `{s}`")),
    }
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Core(smd_core::Error::TooLarge { .. }) => EXIT_CAPACITY,
        Error::Core(
            smd_core::Error::MonotonicityViolated { .. } | smd_core::Error::WeakAgreementViolated,
        ) => EXIT_ASSERTION,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command; returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn solve(problem: &MrfProblem, args: &SolverArgs) -> Result<smd_core::SolveOutcome> {
    let config = args.config();
    let outcome = if args.timing {
        optimize_with(problem, &config, &WallClock(Instant::now()), &mut ())?
    } else {
        optimize_with(problem, &config, &NoClock, &mut ())?
    };
    Ok(outcome)
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match command {
        Command::Generate {
            grid,
            labels,
            seed,
            class_sizes,
            pairwise_sigma,
            out: path,
        } => {
            let mut config = SyntheticConfig::new(grid.0, grid.1, *labels, *seed);
            config.class_sizes = *class_sizes;
            config.pairwise_sigma = *pairwise_sigma;
            let problem = generate_synthetic(&config)?;
            save_problem(&problem, path)?;
            writeln!(
                out,
                "nodes={} edges={} constraints={}",
                problem.node_count(),
                problem.edge_count(),
                problem.constraints().len()
            )
            .map_err(io)?;
        }
        Command::Solve {
            problem,
            trace,
            labeling,
            solver,
        } => {
            let problem = load_problem(problem)?;
            let outcome = solve(&problem, solver)?;
            if let Some(path) = trace {
                write_file(path, &outcome.trace.to_csv())?;
            }
            if let Some(path) = labeling {
                write_file(path, &write_labeling(&outcome.labeling))?;
            }
            writeln!(
                out,
                "bound={} energy={} violation={} agreement={}",
                outcome.bound, outcome.energy, outcome.violation, outcome.agreement
            )
            .map_err(io)?;
        }
        Command::Oracle {
            problem,
            check,
            against_solve,
            solver,
        } => {
            let problem = load_problem(problem)?;
            let result = if problem.constraints().is_empty() {
                brute_force(&problem)?
            } else {
                brute_force_constrained(&problem)?
            };
            writeln!(
                out,
                "optimum={} minimizers={}",
                result.optimum,
                result.minimizers.len()
            )
            .map_err(io)?;
            if let Some(path) = check {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let labeling = parse_labeling(&text)?;
                let energy = problem.energy(&labeling)?;
                let feasible = problem
                    .constraints()
                    .iter()
                    .all(|c| c.is_satisfied(&labeling, smd_core::oracle::TIE_TOLERANCE));
                let delta = energy - result.optimum;
                if !feasible {
                    writeln!(out, "check=infeasible energy={energy}").map_err(io)?;
                } else if delta <= smd_core::oracle::TIE_TOLERANCE {
                    writeln!(out, "check=optimal energy={energy}").map_err(io)?;
                } else {
                    writeln!(out, "check=suboptimal energy={energy} delta={delta}").map_err(io)?;
                }
            }
            if *against_solve {
                let outcome = solve(&problem, solver)?;
                let gap = result.optimum - outcome.bound;
                writeln!(out, "bound={} gap={gap}", outcome.bound).map_err(io)?;
                if gap < -1e-9 {
                    writeln!(out, "error: dual bound exceeds the optimum").map_err(io)?;
                    return Ok(EXIT_ASSERTION);
                }
            }
        }
        Command::FromImage {
            image,
            seeds,
            a1,
            a2,
            box_size,
            star,
            beta,
            equal_sizes,
            flux,
            out: path,
        } => {
            let img = read_pnm(image)?;
            let mask = read_pnm(seeds)?;
            if (mask.width, mask.height) != (img.width, img.height) {
                return Err(Error::Image("seed mask and image differ in size".into()));
            }
            let mut config = SegmentationConfig::new(img, seeds_from_mask(&mask)?);
            config.a1 = *a1;
            config.a2 = *a2;
            config.box_size = *box_size;
            config.star_beta = *beta;
            config.equal_sizes = equal_sizes.clone();
            config.flux = *flux;
            for &(label, (r, c)) in star {
                if r >= mask.height || c >= mask.width {
                    return Err(Error::Config(format!("star center ({r}, {c}) outside the image")));
                }
                config.star_centers.push((label, r * mask.width + c));
            }
            let problem = problem_from_image(&config)?;
            save_problem(&problem, path)?;
            writeln!(
                out,
                "nodes={} labels={} edges={}",
                problem.node_count(),
                problem.label_count(),
                problem.edge_count()
            )
            .map_err(io)?;
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        assert_eq!(parse_grid("50x40"), Ok((50, 40)));
        assert!(parse_grid("50").is_err());
        assert!(parse_grid("0x3").is_err());
        assert_eq!(parse_star("1:2,3"), Ok((1, (2, 3))));
    }

    #[test]
    fn bad_grid_is_usage_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            ["smd", "generate", "--grid", "3by3", "--labels", "2", "--out", "x"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, EXIT_USAGE);
    }
}
