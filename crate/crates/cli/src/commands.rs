use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hestonreg::analytic::{AnalyticField, Constant, Polynomial, Separable};
use hestonreg::discretization::{Grid, GridFunction};
use hestonreg::heston_operator::commutator_residual;
use hestonreg::regularity_harness::{
    convergence_study, fe_errors, non_increasing_within, probe_strip, run_sweep, smoothness_probe, write_csv,
    Problem, ProblemData, SweepTask,
};
use hestonreg::weighted_spaces::norm;
use hestonreg::{BallSpec, Coefficients, Error, NormRequest, Point, Region};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, ConfigError, ProblemConfig, RunConfig};

/// Why a run stopped short of success.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Model(Error),
    Io(std::io::Error),
    /// A checked property did not hold.
    Property(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Model(e) => match e {
                Error::NotConverged { .. } | Error::SingularSystem(_) | Error::ZeroData(_) | Error::EmptyResult => 2,
                _ => 1,
            },
            Failure::Property(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Model(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "io: {e}"),
            Failure::Property(s) => write!(f, "property check failed: {s}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

pub struct Options {
    pub out: PathBuf,
    pub timing: bool,
}

pub fn run(cfg: &RunConfig, opts: &Options) -> Result<(), Failure> {
    let c = cfg.coefficients()?;
    cfg.domain.validate()?;
    if !(cfg.grid.grading >= 1.0) {
        return Err(Error::InvalidGrid(format!("grading {} must be >= 1", cfg.grid.grading)).into());
    }
    if cfg.grid.ladder.is_empty() {
        return Err(Error::InvalidGrid("ladder is empty".into()).into());
    }
    cfg.weight(&c).validate()?;
    fs::create_dir_all(&opts.out)?;
    let echo = serde_json::to_string_pretty(cfg).expect("config serialises");
    fs::write(opts.out.join("config.resolved.json"), echo + "\n")?;
    match cfg.command {
        Command::Validate => validate(cfg, &c, &opts.out),
        Command::Solve => solve(cfg, &c, &opts.out),
        Command::Norms => norms(cfg, &c, &opts.out),
        Command::Commutators => commutators(cfg, &c, &opts.out),
        Command::Sweep => sweep(cfg, &c, opts),
        Command::Convergence => convergence(cfg, &c, &opts.out),
        Command::Probe => probe(cfg, &c, &opts.out),
    }
}

fn problem(cfg: &RunConfig, c: &Coefficients) -> Problem {
    let data = match &cfg.problem {
        ProblemConfig::Manufactured(f) => ProblemData::Manufactured(f.build()),
        ProblemConfig::Source(f) => ProblemData::Source(f.build()),
    };
    let mut p = Problem::new(*c, cfg.domain, data);
    p.assembly.fault = cfg.assembly_fault;
    p.tol = cfg.solver.tol;
    p.max_iter = cfg.solver.max_iter;
    p
}

fn validate(cfg: &RunConfig, c: &Coefficients, out: &Path) -> Result<(), Failure> {
    Grid::new(cfg.domain, cfg.grid.nx, cfg.grid.ny, cfg.grid.grading)?;
    for kind in &cfg.estimate.kinds {
        // Region containment is checked on a coarse grid of the domain.
        let g = Arc::new(Grid::new(cfg.domain, 4, 4, cfg.grid.grading)?);
        let z = GridFunction::zeros(g);
        match hestonreg::estimate_ratio(*kind, c, &z, &z, &cfg.regions_for(*kind), &cfg.estimate.params) {
            Ok(_) | Err(Error::EmptyMask) | Err(Error::GridTooCoarse(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let derived = serde_json::to_string_pretty(&c.derived()).expect("derived constants serialise");
    fs::write(out.join("derived.json"), derived.clone() + "\n")?;
    println!("{derived}");
    Ok(())
}

fn solve(cfg: &RunConfig, c: &Coefficients, out: &Path) -> Result<(), Failure> {
    let p = problem(cfg, c);
    let grid = p.grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.grading)?;
    let s = p.solve(&grid)?;
    fs::write(out.join("solution.grid"), s.u.to_text())?;
    fs::write(out.join("source.grid"), s.f.to_text())?;
    let mut summary = serde_json::json!({
        "nx": grid.nx(),
        "ny": grid.ny(),
        "grading": grid.grading(),
        "iterations": s.iterations,
    });
    if let ProblemData::Manufactured(field) = &p.data {
        let (l2, h1) = fe_errors(&s.u, field.as_ref(), &cfg.weight(c))?;
        summary["l2_error"] = l2.into();
        summary["h1_error"] = h1.into();
    }
    let text = serde_json::to_string_pretty(&summary).expect("summary serialises");
    fs::write(out.join("solve.json"), text.clone() + "\n")?;
    println!("{text}");
    Ok(())
}

fn norms(cfg: &RunConfig, c: &Coefficients, out: &Path) -> Result<(), Failure> {
    let u = match &cfg.norms.input {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            GridFunction::from_text(&text)?
        }
        None => {
            let p = problem(cfg, c);
            p.solve(&p.grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.grading)?)?.u
        }
    };
    let n = &cfg.norms;
    let order = n.tags.iter().map(|t| t.required_order(n.k)).max().unwrap_or(0);
    let u = u.with_derivatives(order)?;
    let w = cfg.weight(c);
    let mut csv = String::from("tag,k,p,alpha,value\n");
    for &tag in &n.tags {
        let req = NormRequest::new(tag, w).order(n.k).exponent(n.p).alpha(n.alpha);
        let v = norm(&u, &req)?;
        csv.push_str(&format!("{tag:?},{},{:e},{:e},{v:e}\n", n.k, n.p, n.alpha));
    }
    fs::write(out.join("norms.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn battery() -> Vec<(&'static str, Box<dyn AnalyticField>)> {
    vec![
        (
            "polynomial",
            Box::new(Polynomial::new(vec![(5, 0, 0.3), (2, 3, -1.0), (1, 1, 2.0), (0, 4, 0.5)])),
        ),
        ("sin_x_exp_neg_y", Box::new(Separable::sin_x_exp_neg_y())),
        ("exp_x_sin_y", Box::new(Separable::exp_x_sin_y(0.7, 1.3))),
        ("cos_x_exp_y", Box::new(Separable::cos_x_exp_y(1.1, -0.6))),
        ("x_times_power_y", Box::new(Separable::x_times_power_y(2.5))),
        ("constant", Box::new(Constant(3.0))),
    ]
}

fn commutators(cfg: &RunConfig, c: &Coefficients, out: &Path) -> Result<(), Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.domain;
    let cc = cfg.commutators;
    let mut csv = String::from("field,k,m,x,y,residual,scale\n");
    let mut failed = 0usize;
    let mut total = 0usize;
    for (name, field) in battery() {
        for _ in 0..cc.points {
            let x = rng.random_range(d.x_min..d.x_max);
            let y = rng.random_range(0.0..d.y_max).max(f64::MIN_POSITIVE);
            for k in 0..=cc.max_k {
                for m in 0..=cc.max_m {
                    let r = commutator_residual(c, field.as_ref(), k, m, x, y)?;
                    total += 1;
                    if !r.within(cc.tol) {
                        failed += 1;
                    }
                    csv.push_str(&format!("{name},{k},{m},{x:e},{y:e},{:e},{:e}\n", r.residual, r.scale));
                }
            }
        }
    }
    fs::write(out.join("commutators.csv"), csv)?;
    println!("{} of {total} commutator residuals within {:e} of scale", total - failed, cc.tol);
    if failed > 0 {
        return Err(Failure::Property(format!("{failed} commutator residuals exceed tolerance")));
    }
    Ok(())
}

fn ladder(cfg: &RunConfig) -> Vec<(usize, usize)> {
    cfg.grid.ladder.iter().map(|&n| (n, n)).collect()
}

fn sweep(cfg: &RunConfig, c: &Coefficients, opts: &Options) -> Result<(), Failure> {
    let p = problem(cfg, c);
    let tasks: Vec<SweepTask> = cfg
        .estimate
        .kinds
        .iter()
        .map(|&kind| SweepTask {
            kind,
            regions: cfg.regions_for(kind),
            params: cfg.estimate.params,
        })
        .collect();
    let grids = ladder(cfg);
    let reports = run_sweep(&p, &grids, cfg.grid.grading, &tasks)?;
    let mut file = fs::File::create(opts.out.join("sweep.csv"))?;
    write_csv(&reports, &mut file, opts.timing)?;
    file.flush()?;
    let mut growing = Vec::new();
    for task in &tasks {
        let series: Vec<f64> = reports
            .iter()
            .filter(|r| r.kind == task.kind)
            .map(|r| r.implied_constant)
            .collect();
        let ok = non_increasing_within(&series, cfg.estimate.band);
        println!("{:<16} {} {:?}", task.kind.as_str(), if ok { "stable" } else { "GROWS" }, series);
        if !ok {
            growing.push(task.kind.as_str());
        }
    }
    if !growing.is_empty() {
        return Err(Failure::Property(format!(
            "implied constants grow beyond the {} band for {}",
            cfg.estimate.band,
            growing.join(", ")
        )));
    }
    Ok(())
}

fn convergence(cfg: &RunConfig, c: &Coefficients, out: &Path) -> Result<(), Failure> {
    let ProblemConfig::Manufactured(spec) = &cfg.problem else {
        return Err(ConfigError("convergence needs a manufactured problem".into()).into());
    };
    let d = cfg.domain;
    let s = d.y_max.min(0.5 * (d.x_max - d.x_min));
    let interior = Region::Ball(BallSpec::euclidean_half(Point::new(0.5 * (d.x_min + d.x_max), 0.0), 0.5 * s)?);
    let table = convergence_study(spec.build(), c, &d, &ladder(cfg), cfg.grid.grading, &interior)?;
    let mut csv = String::from("nx,ny,l2,h1,sup,iterations\n");
    for r in &table.rows {
        csv.push_str(&format!("{},{},{:e},{:e},{:e},{}\n", r.nx, r.ny, r.l2, r.h1, r.sup, r.iterations));
    }
    fs::write(out.join("convergence.csv"), &csv)?;
    print!("{csv}");
    println!("L2 orders {:?}", table.l2_orders);
    if let (Some(min), Some(last)) = (cfg.convergence.min_l2_order, table.l2_orders.last()) {
        if *last < min {
            return Err(Failure::Property(format!("L2 order {last:.3} below {min}")));
        }
    }
    Ok(())
}

fn probe(cfg: &RunConfig, c: &Coefficients, out: &Path) -> Result<(), Failure> {
    let p = problem(cfg, c);
    let solutions = ladder(cfg)
        .into_iter()
        .map(|(nx, ny)| Ok(p.solve(&p.grid(nx, ny, cfg.grid.grading)?)?.u))
        .collect::<hestonreg::Result<Vec<_>>>()?;
    let h = cfg.domain.y_max;
    let strip = probe_strip(&cfg.domain, cfg.probe.floor * h, cfg.probe.height * h);
    let report = smoothness_probe(&solutions, cfg.probe.k, &strip)?;
    let mut csv = String::from("nx,ny,a,b,max\n");
    for row in &report.rows {
        for ((a, b), m) in report.partials.iter().zip(&row.maxima) {
            csv.push_str(&format!("{},{},{a},{b},{m:e}\n", row.nx, row.ny));
        }
    }
    fs::write(out.join("probe.csv"), csv)?;
    let unstable: Vec<String> = report
        .partials
        .iter()
        .zip(&report.stable)
        .filter(|(_, s)| !**s)
        .map(|((a, b), _)| format!("Dx^{a}Dy^{b}"))
        .collect();
    if unstable.is_empty() {
        println!("all {} partials stable", report.partials.len());
        Ok(())
    } else {
        Err(Failure::Property(format!("unstable partials: {}", unstable.join(", "))))
    }
}
