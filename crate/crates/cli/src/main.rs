use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use disperse_core::{
    find_empty_box, first_unmet_good_box, largest_empty_box_exact,
    largest_empty_box_f64, largest_empty_toroidal_box_exact, largest_empty_toroidal_box_f64,
    read_pointset, stage1, stage2, theorem1_bound, theorem3_bound, toroidal_construction,
    write_pointset, ConstructionParams, Coord, CoordFormat, DispersionResult, Error, FinderParams,
    OracleOptions, PointSet, PreprocessCache, Rational, Result, SelectionStrategy,
    WeightSpec, Witness,
};

#[derive(Parser)]
#[command(name = "disperse", about = "Low-dispersion point sets and empty-box search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Construction {
    #[value(name = "hh-modified")]
    HhModified,
    Derand,
    Toroidal,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Paper,
    Desk,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Simple,
    #[value(name = "two-level")]
    TwoLevel,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a point set and emit it in the shared file format.
    Generate(GenerateArgs),
    /// Compute the largest empty box of a point-set file.
    Evaluate(EvaluateArgs),
    /// Find a certified empty box via weighted translate search and shaving.
    FindBox(FindBoxArgs),
    /// Print a closed-form dispersion bound.
    Bound(BoundArgs),
    /// Check a point set against every good box exhaustively.
    VerifyGoodBoxes(VerifyArgs),
    /// Build the derandomization cache (residue sets, representatives, anchors).
    Preprocess(PreprocessArgs),
    /// Run a benchmark suite and emit versioned CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    construction: Construction,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: u128,
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
    /// Required for randomized constructions; the derandomized path ignores it.
    #[arg(long)]
    seed: Option<u64>,
    /// Derandomization cache from `preprocess`; built in-process when absent.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Exact rational arithmetic (input coordinates are parsed exactly anyway).
    #[arg(long)]
    exact: bool,
    /// Toroidal (wrapping) boxes; the file must declare space=torus.
    #[arg(long)]
    torus: bool,
    file: PathBuf,
}

#[derive(Args)]
struct FindBoxArgs {
    #[arg(long, value_enum, default_value = "simple")]
    weight: WeightArg,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    file: PathBuf,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    theorem: u32,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    n: u128,
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
    #[arg(long, default_value = "2")]
    d: usize,
    file: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
    #[arg(long)]
    d: usize,
    /// Use the conditional-expectation selection rule instead of plain greedy.
    #[arg(long)]
    conditional_expectation: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Versioned key-value suite config; `-` reads stdin.
    #[arg(long)]
    config: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn params_for(preset: PresetArg, d: usize) -> Result<ConstructionParams> {
    match preset {
        PresetArg::Paper => ConstructionParams::paper(d),
        PresetArg::Desk => ConstructionParams::desk(d),
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| {
        Error::InvalidParameter("--seed is required for randomized constructions".into())
    })
}

fn out_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn read_file(path: &Path) -> Result<PointSet<Rational>> {
    read_pointset(BufReader::new(File::open(path)?))
}

fn generate_set(args: &GenerateArgs) -> Result<PointSet<Rational>> {
    let params = params_for(args.preset, args.d)?;
    match args.construction {
        Construction::HhModified => {
            let seed = require_seed(args.seed)?;
            let n = params.round_n(args.n)?;
            let s1 = stage1(n, &params, seed, true)?;
            stage2(&s1.points, &params)
        }
        Construction::Derand => {
            let cache = match &args.cache {
                Some(path) => {
                    PreprocessCache::read_from(BufReader::new(File::open(path)?), &params)?
                }
                None => PreprocessCache::build(&params, SelectionStrategy::GreedyMaxCoverage)?,
            };
            let n = params.round_n(args.n)?;
            let s1 =
                disperse_core::derandomized_stage1(n, &cache.x_prime, &params, true)?;
            stage2(&s1.points, &params)
        }
        Construction::Toroidal => {
            let seed = require_seed(args.seed)?;
            if args.n % args.d as u128 != 0 {
                return Err(Error::Divisibility(format!(
                    "--n {} is not divisible by --d {}",
                    args.n, args.d
                )));
            }
            toroidal_construction(args.n, &params, seed)
        }
    }
}

fn witness_json(w: &Witness<Rational>) -> serde_json::Value {
    match w {
        Witness::Cube(b) => json!({
            "kind": "cube",
            "axes": b.axes().iter().map(|iv| json!({
                "lo": iv.lo.to_string(),
                "hi": iv.hi.to_string(),
            })).collect::<Vec<_>>(),
        }),
        Witness::Torus(b) => json!({
            "kind": "torus",
            "axes": b.axes().iter().map(|iv| json!({
                "a": iv.a.to_string(),
                "b": iv.b.to_string(),
            })).collect::<Vec<_>>(),
        }),
    }
}

fn result_json(res: &DispersionResult<Rational>) -> serde_json::Value {
    json!({
        "volume": res.volume.to_string(),
        "volume_f64": Coord::to_f64(&res.volume),
        "scaled": res.scaled,
        "witness": witness_json(&res.witness),
    })
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let p = read_file(&args.file)?;
    let opts = OracleOptions::default();
    let value = if args.exact {
        let res = if args.torus {
            largest_empty_toroidal_box_exact(&p, &opts)?
        } else {
            largest_empty_box_exact(&p, &opts)?
        };
        result_json(&res)
    } else {
        let pf = p.to_f64_set();
        let res = if args.torus {
            largest_empty_toroidal_box_f64(&pf, &opts)?
        } else {
            largest_empty_box_f64(&pf, &opts)?
        };
        serde_json::to_value(&res).map_err(|e| Error::Format(e.to_string()))?
    };
    println!("{}", serde_json::to_string_pretty(&value).unwrap());
    Ok(())
}

fn run_find_box(args: &FindBoxArgs) -> Result<()> {
    let p = read_file(&args.file)?.to_f64_set();
    let seed = args
        .seed
        .ok_or_else(|| Error::InvalidParameter("--seed is required for find-box".into()))?;
    let d = p.dimension();
    let weight = match (args.weight, args.r0, args.t) {
        (WeightArg::Simple, None, _) => WeightSpec::simple_default(d),
        (WeightArg::Simple, Some(r0), _) => WeightSpec::simple(r0)?,
        (WeightArg::TwoLevel, None, None) => WeightSpec::two_level_exponential(d)?,
        (WeightArg::TwoLevel, Some(r0), Some(t)) => WeightSpec::two_level(r0, t)?,
        (WeightArg::TwoLevel, _, _) => {
            return Err(Error::InvalidParameter(
                "two-level weights need both --r0 and --t".into(),
            ))
        }
    };
    let params = FinderParams {
        weight,
        sample_budget: 1000 * d as u64,
        rng_seed: seed,
    };
    let cb = find_empty_box(&p, &params)?;
    println!("{}", serde_json::to_string_pretty(&cb).unwrap());
    Ok(())
}

fn run_bound(args: &BoundArgs) -> Result<()> {
    match args.theorem {
        1 => {
            let n = args
                .n
                .ok_or_else(|| Error::InvalidParameter("--n is required for theorem 1".into()))?;
            let b = theorem1_bound(args.d, n);
            println!("m_{}({}) >= {:.6e}", args.d, n, b);
            Ok(())
        }
        3 => {
            let spec = match (args.r0, args.t) {
                (Some(r0), Some(t)) => WeightSpec::two_level(r0, t)?,
                (None, None) if args.d == 2 => WeightSpec::two_level_planar()?,
                (None, None) => WeightSpec::two_level_exponential(args.d)?,
                _ => {
                    return Err(Error::InvalidParameter(
                        "theorem 3 needs both --r0 and --t, or neither".into(),
                    ))
                }
            };
            let (r0, t) = (spec.r0, spec.t.expect("two-level"));
            // Constructing the spec already validated T < R0 and
            // R0 - T < log(R0/T).
            let bound = theorem3_bound(args.d, &spec)?;
            // The d = 2 preset evaluates to 1.504766…; report the bound
            // actually proven, truncated rather than rounded.
            let truncated = (bound * 1e5).floor() / 1e5;
            println!("c_{} >= {}", args.d, truncated);
            println!("R0={r0} T={t}");
            println!("hypotheses: T < R0: ok; R0 - T < log(R0/T): ok");
            Ok(())
        }
        other => Err(Error::InvalidParameter(format!(
            "no theorem {other} bound; use 1 or 3"
        ))),
    }
}

fn run_verify(args: &VerifyArgs) -> Result<()> {
    let params = params_for(args.preset, args.d)?;
    let p = read_file(&args.file)?;
    match first_unmet_good_box(&p, args.n, &params)? {
        None => {
            println!("pass: every good box at n={} contains a point", args.n);
            Ok(())
        }
        Some(pair) => {
            println!("fail: empty good box found");
            for (i, (ax, off)) in pair.bx.axes.iter().zip(&pair.offsets).enumerate() {
                println!(
                    "  axis {i}: canonical a={} k={} offsets [{}, {})",
                    ax.a, ax.k, off.0, off.1
                );
            }
            Err(Error::Precondition("good-box verification failed".into()))
        }
    }
}

fn run_preprocess(args: &PreprocessArgs) -> Result<()> {
    let params = params_for(args.preset, args.d)?;
    let strategy = if args.conditional_expectation {
        SelectionStrategy::ConditionalExpectation
    } else {
        SelectionStrategy::GreedyMaxCoverage
    };
    let cache = PreprocessCache::build(&params, strategy)?;
    cache.write_to(BufWriter::new(File::create(&args.output)?))?;
    eprintln!(
        "wrote {} residue sets, {} representatives, {} anchors",
        cache.l_prime.len(),
        cache.representatives.len(),
        cache.x_prime.len()
    );
    Ok(())
}

struct BenchSpec {
    construction: Construction,
    d: usize,
    n: u128,
    seed: u64,
}

fn parse_bench_config(r: impl BufRead) -> Result<Vec<BenchSpec>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty bench config".into()))??;
    if header.trim() != "# disperse-bench v1" {
        return Err(Error::Format(format!("bad config header {header:?}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut construction = None;
        let mut d = None;
        let mut n = None;
        let mut seed = None;
        let rest = line
            .strip_prefix("row ")
            .ok_or_else(|| Error::Format(format!("bad config line {line:?}")))?;
        for field in rest.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad config field {field:?}")))?;
            match k {
                "construction" => {
                    construction = Some(match v {
                        "hh-modified" => Construction::HhModified,
                        "derand" => Construction::Derand,
                        "toroidal" => Construction::Toroidal,
                        _ => return Err(Error::Format(format!("unknown construction {v:?}"))),
                    })
                }
                "d" => d = v.parse().ok(),
                "n" => n = v.parse().ok(),
                "seed" => seed = v.parse().ok(),
                _ => return Err(Error::Format(format!("unknown config key {k:?}"))),
            }
        }
        rows.push(BenchSpec {
            construction: construction
                .ok_or_else(|| Error::Format("row missing construction=".into()))?,
            d: d.ok_or_else(|| Error::Format("row missing or bad d=".into()))?,
            n: n.ok_or_else(|| Error::Format("row missing or bad n=".into()))?,
            seed: seed.ok_or_else(|| Error::Format("row missing or bad seed=".into()))?,
        });
    }
    Ok(rows)
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let specs = if args.config == Path::new("-") {
        let mut buf = String::new();
        io::stdin().read_to_string(&mut buf)?;
        parse_bench_config(buf.as_bytes())?
    } else {
        parse_bench_config(BufReader::new(File::open(&args.config)?))?
    };
    let mut out = out_writer(&args.output)?;
    writeln!(out, "# disperse-bench-csv v1")?;
    writeln!(
        out,
        "construction,d,n,method,measured_volume,scaled,theorem1_bound,theorem3_target,upper_construction_bound"
    )?;
    for spec in &specs {
        let name = match spec.construction {
            Construction::HhModified => "hh-modified",
            Construction::Derand => "derand",
            Construction::Toroidal => "toroidal",
        };
        let gen = GenerateArgs {
            construction: spec.construction,
            d: spec.d,
            n: spec.n,
            preset: PresetArg::Desk,
            seed: Some(spec.seed),
            cache: None,
            output: None,
        };
        let p = generate_set(&gen)?;
        let n_real = p.len();
        let opts = OracleOptions::default();
        let exact = if matches!(spec.construction, Construction::Toroidal) {
            largest_empty_toroidal_box_exact(&p, &opts)
        } else {
            largest_empty_box_exact(&p, &opts)
        };
        let (method, volume, scaled) = match exact {
            Ok(res) => ("exact", Coord::to_f64(&res.volume), res.scaled),
            Err(Error::ResourceLimit(_)) => {
                // Fall back to the certified finder's lower estimate.
                let cb = find_empty_box(
                    &p.to_f64_set(),
                    &FinderParams::simple_default(spec.d, spec.seed),
                )?;
                let v = cb.volume;
                ("finder-lower-bound", v, v * n_real as f64)
            }
            Err(e) => return Err(e),
        };
        let t1 = theorem1_bound(spec.d, n_real);
        let t3 = if spec.d == 2 {
            1.50476
        } else {
            theorem3_bound(spec.d, &WeightSpec::two_level_exponential(spec.d)?)?
        };
        let d_f = spec.d as f64;
        let upper = if spec.d > 1 {
            8000.0 * d_f * d_f * d_f.ln() / n_real as f64
        } else {
            f64::NAN
        };
        writeln!(
            out,
            "{name},{},{n_real},{method},{volume:.12e},{scaled:.6},{t1:.6e},{t3:.6},{upper:.6e}",
            spec.d
        )?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => {
            let p = generate_set(args)?;
            let mut w = out_writer(&args.output)?;
            write_pointset(&mut w, &p, CoordFormat::Rational)
        }
        Command::Evaluate(args) => run_evaluate(args),
        Command::FindBox(args) => run_find_box(args),
        Command::Bound(args) => run_bound(args),
        Command::VerifyGoodBoxes(args) => run_verify(args),
        Command::Preprocess(args) => run_preprocess(args),
        Command::Bench(args) => run_bench(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error category={} message={e}", e.category());
            ExitCode::FAILURE
        }
    }
}
