use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gaussharm::covering::{cover_admissible, CoverOptions, CoverParams};
use gaussharm::io::{covering_svg, write_field, write_json, SCHEMA_VERSION};
use gaussharm::operators::{maximal_t_field, semigroup_field, square_field, FieldResolution, Grid, OperatorParams};
use gaussharm::verify::{run_suite, Status, VerifyConfig};
use gaussharm::{Error, TestFunction};

#[derive(Parser)]
#[command(name = "gaussharm", version, about = "Gaussian harmonic analysis toolkit")]
struct Cli {
    /// JSON run configuration; defaults apply for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    /// Conical square function `S_a u`.
    S,
    /// Non-tangential maximal function `T*_{(A,a)} u`.
    T,
    /// Snapshots of `e^{-t²L}u`.
    Semigroup,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an operator field for a corpus entry and write CSV + JSON sidecar.
    Field {
        #[arg(long, value_enum)]
        operator: Operator,
        /// Corpus entry id.
        #[arg(long = "u")]
        u_id: String,
        /// Halve the grid spacing this many times.
        #[arg(long, default_value_t = 0)]
        refine: u32,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        aperture: f64,
        /// Snapshot times for the semigroup operator.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1")]
        times: Vec<f64>,
    },
    /// Admissible covering of O for a finite set F.
    Cover {
        /// Points of F: `x1,x2;y1,y2;…` or a JSON array of points.
        #[arg(long = "points", allow_hyphen_values = true)]
        points: String,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Finer cube sampling and measure grid.
        #[arg(long, default_value_t = 0)]
        refine: u32,
        /// Also write an SVG figure (planar F only).
        #[arg(long)]
        svg: bool,
    },
    /// Run the verification suite and write the report bundle.
    Verify {
        /// Restrict to these check families.
        #[arg(long, value_delimiter = ',')]
        check: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli, checks: &[String]) -> gaussharm::Result<VerifyConfig> {
    let mut v: Value = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => json!({}),
    };
    let obj = v.as_object_mut().ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
    if let Some(d) = cli.dim {
        obj.insert("dim".into(), json!(d));
    }
    if let Some(s) = cli.seed {
        obj.insert("seed".into(), json!(s));
    }
    if !checks.is_empty() {
        obj.insert("checks".into(), json!(checks));
    }
    VerifyConfig::from_json(&v.to_string())
}

fn out_dir(cli: &Cli, cfg: &VerifyConfig) -> PathBuf {
    cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("gaussharm-out"))
}

fn run(cli: &Cli) -> gaussharm::Result<ExitCode> {
    match &cli.command {
        Command::Field { operator, u_id, refine, a, aperture, times } => {
            let cfg = load_config(cli, &[])?;
            let entry = cfg
                .corpus
                .iter()
                .find(|e| &e.id == u_id)
                .ok_or_else(|| Error::UnknownCorpusEntry(u_id.clone()))?;
            let u = TestFunction::new(entry.function.clone())?;
            let grid = Grid::new(cfg.dim, cfg.grid.half_width, cfg.grid.h)?.refined(*refine)?;
            let res = FieldResolution { per_octave: cfg.grid.per_octave << refine, ..FieldResolution::default() };
            let params = OperatorParams::standard(*aperture, *a);
            let (mut field, name) = match operator {
                Operator::S => (square_field(&u, &grid, &params, &res)?, "S"),
                Operator::T => (maximal_t_field(&u, &grid, &params, &res)?, "T"),
                Operator::Semigroup => (semigroup_field(&u, &grid, times, res.quad_order)?, "semigroup"),
            };
            field.meta.source = u_id.clone();
            field.meta.params.insert("refine".into(), f64::from(*refine));
            let dir = out_dir(cli, &cfg);
            let (csv, _) = write_field(&field, &dir, &format!("{name}_{u_id}_r{refine}"), cfg.seed)?;
            println!("{}", csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Cover { points, a, b, c, refine, svg } => {
            let pts = parse_points(points)?;
            let n = pts.first().map(Vec::len).ok_or_else(|| Error::InvalidArgument("F must be non-empty".into()))?;
            let cfg = load_config(cli, &[])?;
            let mut opts = CoverOptions::for_dim(n).refined(*refine);
            opts.seed = cfg.seed;
            let result = cover_admissible(&pts, CoverParams { a: *a, b: *b, c: *c }, &opts)?;
            let dir = out_dir(cli, &cfg);
            write_json(
                &dir.join("covering.json"),
                &json!({ "schema": SCHEMA_VERSION, "points": pts, "seed": cfg.seed, "constant": result.constant(), "result": result }),
            )?;
            if *svg {
                std::fs::write(dir.join("covering.svg"), covering_svg(&result, &pts)?)?;
            }
            println!(
                "coverage_fraction {} measure_sum {} target_measure {} ratio {}",
                result.coverage_fraction,
                result.measure_sum,
                result.target_measure,
                result.constant()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { check } => {
            let cfg = load_config(cli, check)?;
            let dir = out_dir(cli, &cfg);
            let bundle = run_suite(&cfg)?;
            bundle.write(&dir)?;
            for r in &bundle.reports {
                let tag = match r.status {
                    Status::Pass => "pass",
                    Status::Fail => "FAIL",
                    Status::PassVacuous => "pass-vacuous",
                };
                println!("{tag:12} {:12} {:32} constant {:.6}", r.check_id, r.case, r.estimated_constant);
            }
            let s = &bundle.summary;
            println!("{} reports: {} pass, {} fail, {} vacuous; bundle in {}", s.total, s.passed, s.failed, s.vacuous, dir.display());
            Ok(if bundle.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn parse_points(spec: &str) -> gaussharm::Result<Vec<Vec<f64>>> {
    let spec = spec.trim();
    let pts: Vec<Vec<f64>> = if spec.starts_with('[') {
        serde_json::from_str(spec).map_err(|e| Error::InvalidArgument(format!("cannot parse F: {e}")))?
    } else if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec)?;
        return parse_points(&text);
    } else {
        spec.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|p| {
                p.split(',')
                    .map(|c| c.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("cannot parse `{c}`: {e}"))))
                    .collect()
            })
            .collect::<gaussharm::Result<_>>()?
    };
    if pts.is_empty() {
        return Err(Error::InvalidArgument("F must be non-empty".into()));
    }
    Ok(pts)
}
