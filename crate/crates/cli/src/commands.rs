//! Subcommand implementations. Each returns the exit code to use.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use dsm_core::geometry::{analytic_farfield, born_farfield, make_directions, DEFAULT_QUAD_LEVEL};
use dsm_core::indicators::{
    evaluate_grid, hausdorff_to_truth, level_set, Plane, DEFAULT_TAU_2D, DEFAULT_TAU_3D,
};
use dsm_core::noise::{corrupt, NoiseSpec};
use dsm_core::verify::{run_suite, SuiteConfig};
use dsm_core::{
    Dimension, DsmError, FarFieldMatrix, FitConfig, IndicatorData, IndicatorGrid, IndicatorKind,
    SamplingGrid, Scatterer, Shape, WaveContext,
};
use serde::Serialize;

use crate::config::RunConfig;

pub const DEFAULT_K: f64 = 10.0;
pub const DEFAULT_N: f64 = 0.5;
pub const DEFAULT_M: usize = 32;
pub const DEFAULT_GRID: &str = "-1,1,-1,1,100,100";

pub struct SynthesizeArgs {
    pub config: RunConfig,
    pub out: PathBuf,
}

pub fn synthesize(args: SynthesizeArgs) -> Result<i32> {
    let c = &args.config;
    let start = Instant::now();
    let shape: Shape = c.shape.as_deref().unwrap_or("pear").parse()?;
    let n = c.n.unwrap_or(DEFAULT_N);
    let k = c.k.unwrap_or(DEFAULT_K);
    let m = c.m.unwrap_or(DEFAULT_M);
    let dim = shape.dimension();
    let ctx = WaveContext::new(dim, k)?;
    let dirs = make_directions(dim, m)?;
    if n == 1.0 {
        eprintln!("warning: n = 1 gives zero contrast; the far field is identically zero");
    }
    let ff = if c.analytic.unwrap_or(false) {
        let radius = match shape {
            Shape::Disk { radius } | Shape::Ball { radius } => radius,
            _ => bail!("--analytic needs a disk:R or ball:R shape, got {shape}"),
        };
        analytic_farfield(radius, n, &ctx, &dirs)?
    } else {
        let scatterer = Scatterer::new(shape, n);
        born_farfield(&scatterer, &ctx, &dirs, c.quad_level.unwrap_or(DEFAULT_QUAD_LEVEL))?
    };
    write_farfield(&ff, &args.out)?;
    eprintln!(
        "synthesize: {shape} k={k} n={n} M={m} -> {} in {:.3} s",
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(0)
}

pub struct CorruptArgs {
    pub input: PathBuf,
    pub deltas: Vec<f64>,
    pub seed: u64,
    pub force: bool,
    pub out: PathBuf,
}

pub fn corrupt_cmd(args: CorruptArgs) -> Result<i32> {
    let ff = read_farfield(&args.input)?;
    if ff.provenance().is_noisy() && !args.force {
        bail!(
            "corrupt: {} already carries noise; pass --force to add more",
            args.input.display()
        );
    }
    if args.deltas.is_empty() {
        bail!("corrupt: no noise level given");
    }
    let batch = args.deltas.len() > 1;
    if batch {
        fs::create_dir_all(&args.out)
            .with_context(|| format!("creating {}", args.out.display()))?;
    }
    for &delta in &args.deltas {
        let noisy = corrupt(&ff, &NoiseSpec::new(delta, args.seed)?)?;
        let path = if batch {
            args.out.join(format!("farfield_delta{delta}.json"))
        } else {
            args.out.clone()
        };
        write_farfield(&noisy, &path)?;
        eprintln!("corrupt: delta={delta} seed={} -> {}", args.seed, path.display());
    }
    Ok(0)
}

pub struct ReconstructArgs {
    pub input: PathBuf,
    pub config: RunConfig,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct LevelSetReport {
    tau: f64,
    area_nodes: usize,
    contour_cells: usize,
    hausdorff: Option<f64>,
}

#[derive(Debug, Serialize)]
struct IndicatorReport {
    kind: String,
    wall_seconds: f64,
    raw_max: f64,
    argmax: [f64; 3],
    argmax_inside_truth: Option<bool>,
    level_set: Option<LevelSetReport>,
    csv: String,
    pgm: String,
}

#[derive(Debug, Serialize)]
struct ReconstructReport {
    name: Option<String>,
    input: String,
    dimension: usize,
    k: f64,
    #[serde(rename = "M")]
    m: usize,
    noise_delta: f64,
    noise_seed: Option<u64>,
    truth: Option<String>,
    grid: String,
    plane: String,
    alpha: f64,
    eps: f64,
    c: Vec<f64>,
    c_alpha: f64,
    s1: f64,
    p: f64,
    svd_and_fit_seconds: f64,
    indicators: Vec<IndicatorReport>,
    total_seconds: f64,
}

pub fn reconstruct(args: ReconstructArgs) -> Result<i32> {
    let c = &args.config;
    let start = Instant::now();
    let ff = read_farfield(&args.input)?;
    let dim = ff.context().dimension();
    let kinds = parse_indicators(c.indicators.as_deref().unwrap_or("dsm,fdsm,tdsm"))?;
    let plane = match c.plane.as_deref() {
        Some(tag) => Plane::parse_tag(tag)?,
        None if dim == Dimension::Three => Plane::Yz { offset: 0.0 },
        None => Plane::default(),
    };
    let grid_spec = c.grid.as_deref().unwrap_or(DEFAULT_GRID);
    let grid = SamplingGrid::parse(grid_spec, plane)?;
    let alpha = c.alpha.unwrap_or(dsm_core::filter::DEFAULT_ALPHA);
    let p = c.p.unwrap_or(1.0);
    let tau = c.tau.unwrap_or(match dim {
        Dimension::Two => DEFAULT_TAU_2D,
        Dimension::Three => DEFAULT_TAU_3D,
    });
    let truth = c
        .shape
        .as_deref()
        .map(|s| s.parse::<Shape>().map(|shape| Scatterer::new(shape, c.n.unwrap_or(DEFAULT_N))))
        .transpose()?;
    let (noise_delta, noise_seed) = match ff.provenance() {
        dsm_core::Provenance::Clean => (0.0, None),
        dsm_core::Provenance::Noisy { delta, seed } => (delta, Some(seed)),
    };
    let (k, m) = (ff.context().k(), ff.m());

    let prep = Instant::now();
    let data = IndicatorData::prepare(ff, alpha, &FitConfig::default()).map_err(|e| match e {
        DsmError::DegenerateInput(msg) => anyhow!(
            "reconstruct: degenerate far-field spectrum ({msg}); \
             resynthesize with a refractive index n != 1 or check the input file"
        ),
        other => anyhow!(other),
    })?;
    let prep_seconds = prep.elapsed().as_secs_f64();
    let decomp = data.decomp.as_ref().expect("prepared");
    let poly = data.poly.as_ref().expect("prepared");

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut reports = Vec::new();
    for kind in kinds {
        let t = Instant::now();
        let raw = evaluate_grid(kind, &data, &grid)?;
        let raw_max = raw.max();
        let mut shown = raw.normalize()?;
        if p > 1.0 {
            shown = shown.sharpen(p)?;
        }
        let wall_seconds = t.elapsed().as_secs_f64();
        let csv = args.out.join(format!("{}.csv", kind.name()));
        let pgm = args.out.join(format!("{}.pgm", kind.name()));
        write_with(&csv, |w| shown.write_csv(w))?;
        write_with(&pgm, |w| shown.write_pgm(w))?;

        let argmax = shown.argmax_point();
        let ls = level_set(&shown, tau).ok();
        let hausdorff = match (&ls, &truth) {
            (Some(ls), Some(sc)) if sc.dimension() == Dimension::Two && !ls.contour.is_empty() => {
                Some(hausdorff_to_truth(&ls.contour, sc)?)
            }
            _ => None,
        };
        reports.push(IndicatorReport {
            kind: kind.name().into(),
            wall_seconds,
            raw_max,
            argmax,
            argmax_inside_truth: truth.as_ref().map(|sc| sc.contains(&argmax)),
            level_set: ls.map(|ls| LevelSetReport {
                tau,
                area_nodes: ls.area_nodes(),
                contour_cells: ls.contour.len(),
                hausdorff,
            }),
            csv: csv.display().to_string(),
            pgm: pgm.display().to_string(),
        });
        eprintln!("reconstruct: {} in {:.3} s -> {}", kind.name(), wall_seconds, csv.display());
    }

    let report = ReconstructReport {
        name: c.name.clone(),
        input: args.input.display().to_string(),
        dimension: dim.as_usize(),
        k,
        m,
        noise_delta,
        noise_seed,
        truth: truth.map(|t| t.shape.to_string()),
        grid: grid_spec.into(),
        plane: plane.tag(),
        alpha,
        eps: poly.eps,
        c: poly.c.clone(),
        c_alpha: poly.c_alpha(),
        s1: decomp.s1(),
        p,
        svd_and_fit_seconds: prep_seconds,
        indicators: reports,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let path = args.out.join("report.json");
    write_json(&path, &report)?;
    eprintln!(
        "reconstruct: total {:.3} s, report {}",
        report.total_seconds,
        path.display()
    );
    Ok(0)
}

pub struct VerifyArgs {
    pub seeds: Vec<u64>,
    pub suite: SuiteConfig,
    pub out: PathBuf,
}

pub fn verify(args: VerifyArgs) -> Result<i32> {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut failed = Vec::new();
    for &seed in &args.seeds {
        let start = Instant::now();
        let report = run_suite(&args.suite, seed)?;
        let path = args.out.join(format!("verify_seed{seed}.json"));
        write_json(&path, &report)?;
        let status = if report.passed() { "ok" } else { "VIOLATIONS" };
        eprintln!(
            "verify: seed {seed} {status} ({} violations) in {:.3} s -> {}",
            report.violations(),
            start.elapsed().as_secs_f64(),
            path.display()
        );
        if !report.passed() {
            failed.push(path);
        }
    }
    if failed.is_empty() {
        Ok(0)
    } else {
        for path in &failed {
            println!("{}", path.display());
        }
        Ok(1)
    }
}

pub struct RenderArgs {
    pub input: PathBuf,
    pub p: f64,
    pub out: PathBuf,
}

pub fn render(args: RenderArgs) -> Result<i32> {
    let file = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let mut grid = IndicatorGrid::read_csv(BufReader::new(file))?;
    if !grid.state.is_normalized() {
        grid = grid.normalize()?;
    }
    if args.p > 1.0 {
        grid = grid.sharpen(args.p)?;
    }
    write_with(&args.out, |w| grid.write_pgm(w))?;
    eprintln!("render: {} -> {}", args.input.display(), args.out.display());
    Ok(0)
}

pub fn parse_indicators(list: &str) -> Result<Vec<IndicatorKind>> {
    let mut kinds = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind: IndicatorKind = name.parse()?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        bail!("no indicators requested");
    }
    Ok(kinds)
}

/// `a..b` (inclusive) or a comma-separated list.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().context("seed range start")?;
        let b: u64 = b.trim().parse().context("seed range end")?;
        if a > b {
            bail!("empty seed range {spec}");
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed '{s}'")))
        .collect()
}

pub fn parse_deltas(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad noise level '{s}'")))
        .collect()
}

fn read_farfield(path: &Path) -> Result<FarFieldMatrix> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    FarFieldMatrix::read_json(BufReader::new(file))
        .with_context(|| format!("reading far-field file {}", path.display()))
}

fn write_farfield(ff: &FarFieldMatrix, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    ff.write_json(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_with(path, |mut w| {
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")
    })
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    ensure_parent(path)?;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}
