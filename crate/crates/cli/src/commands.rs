use std::fmt;
use std::path::{Path, PathBuf};

use mfsub::exponents::{homogeneity_report_with, intrinsic_exponent_with, scaling_nu, Aggregation, Window};
use mfsub::generators::{
    brownian_path, selfsimilar_function_with, weierstrass_with, za_exact_pyramid, za_family_function, za_function,
    MultinomialMeasure, Phase, SelfSimilarSystem, Weierstrass,
};
use mfsub::grid::{build_pyramid_with, ZeroPolicy};
use mfsub::spectra::{coarse_spectrum, measure_spectrum, subordinated_spectrum, za_spectrum, SpectrumCurve};
use mfsub::subordination::{compose_check, decompose_with, DecompositionSchedule};
use mfsub::{io, Error, Exec, OscillationPyramid, PyramidSource, SampledFunction};
use serde::Serialize;

use crate::{
    Cli, Command, DecomposeArgs, ExponentArgs, Family, Format, GenerateArgs, HomogeneityArgs, ModeArg, PhaseArg,
    PyramidArgs, Source, SpectrumArgs, SpectrumKind, VerifyArgs,
};

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// A computed invariant did not hold.
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) => e.exit_code() as u8,
            Failure::Check(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Check(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Json(e))
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Core(Error::InvalidParameter(msg.into()))
}

pub fn run(cli: &Cli) -> Result<()> {
    let exec = setup_threads(cli.threads)?;
    let ctx = Ctx { cli, exec };
    match &cli.command {
        Command::Generate(a) => generate(&ctx, a),
        Command::Pyramid(a) => pyramid(&ctx, a),
        Command::Exponent(a) => exponent(&ctx, a),
        Command::Homogeneity(a) => homogeneity(&ctx, a),
        Command::Decompose(a) => decompose(&ctx, a),
        Command::Spectrum(a) => spectrum(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
    }
}

fn setup_threads(threads: Option<usize>) -> Result<Exec> {
    match threads {
        None => Ok(Exec::default()),
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(1) => Ok(Exec::Sequential),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| usage(format!("thread pool: {e}")))?;
            Ok(Exec::Parallel)
        }
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    exec: Exec,
}

impl Ctx<'_> {
    fn format(&self, default: Format) -> Format {
        self.cli.format.unwrap_or(default)
    }

    /// `--out` as a file; an existing directory gets `default` appended.
    fn out_file(&self, default: &str) -> PathBuf {
        match &self.cli.out {
            Some(p) if p.is_dir() => p.join(default),
            Some(p) => p.clone(),
            None => PathBuf::from(default),
        }
    }

    fn out_dir(&self, default: &str) -> PathBuf {
        self.cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn emit(path: &Path, bytes: &[u8], summary: &str) -> Result<()> {
    io::write_atomic(path, bytes)?;
    println!("wrote {}: {summary}", path.display());
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn parse_range(s: &str, what: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| usage(format!("{what} must look like lo:hi")))?;
    let lo = a.trim().parse().map_err(|_| usage(format!("bad {what} lower bound")))?;
    let hi = b.trim().parse().map_err(|_| usage(format!("bad {what} upper bound")))?;
    Ok((lo, hi))
}

fn parse_window(s: Option<&str>, depth: u32) -> Result<Window> {
    match s {
        None => Ok(Window::full(depth)),
        Some(s) => {
            let (a, b) = s.split_once(':').ok_or_else(|| usage("window must look like lo:hi"))?;
            let lo = a.trim().parse().map_err(|_| usage("bad window lower bound"))?;
            let hi = b.trim().parse().map_err(|_| usage("bad window upper bound"))?;
            Ok(Window::new(lo, hi)?)
        }
    }
}

fn generate(ctx: &Ctx, a: &GenerateArgs) -> Result<()> {
    let exec = ctx.exec;
    let f: SampledFunction = match a.family {
        Family::Weierstrass => {
            let alpha = a.alpha.ok_or_else(|| usage("--alpha is required for weierstrass"))?;
            let phase = match a.phase {
                PhaseArg::Sin => Phase::Sin,
                PhaseArg::Cos => Phase::Cos,
            };
            let w = Weierstrass { alpha, b_w: a.bw, phase, n_terms: a.n_terms };
            weierstrass_with(&w, a.base, a.depth, exec)?
        }
        Family::Brownian => brownian_path(ctx.cli.seed, a.depth)?,
        Family::Selfsimilar => {
            let path = a.system.as_ref().ok_or_else(|| usage("--system is required for selfsimilar"))?;
            let system: SelfSimilarSystem = serde_json::from_slice(&std::fs::read(path)?)?;
            system.validate()?;
            selfsimilar_function_with(&system, a.base, a.depth, ctx.cli.tol, exec)?
        }
        Family::Multinomial => {
            let w = a.weights.clone().ok_or_else(|| usage("--weights is required for multinomial"))?;
            MultinomialMeasure::new(w, a.depth)?.integral_with(exec)?
        }
        Family::Za => {
            let za = a.a.ok_or_else(|| usage("--a is required for za"))?;
            za_family_function(za, a.depth)?
        }
    };
    let summary = format!("{} (base {}, depth {}, {} samples)", f.label(), f.base(), f.depth(), f.values().len());
    match ctx.format(Format::Json) {
        Format::Json => emit(&ctx.out_file("function.json"), &io::function_json(&f)?, &summary),
        Format::Csv => emit(&ctx.out_file("function.csv"), &io::function_csv(&f)?, &summary),
    }
}

struct Loaded {
    samples: Option<SampledFunction>,
    pyramid: OscillationPyramid,
}

fn load_source(src: &Source, exec: Exec) -> Result<Loaded> {
    let samples = match &src.input {
        Some(p) => Some(io::load_function(p)?),
        None => None,
    };
    let mut loaded = if let Some(path) = &src.pyramid {
        let pyramid = io::load_pyramid(path, PyramidSource::Sampled)?;
        Loaded { samples, pyramid }
    } else if let Some(a) = src.za_exact {
        let depth = src.depth.ok_or_else(|| usage("--depth is required with --za-exact"))?;
        let pyramid = za_exact_pyramid(a, depth)?;
        let samples = match samples {
            Some(s) => Some(s),
            None => Some(za_function(a, depth)?),
        };
        Loaded { samples, pyramid }
    } else if let Some(f) = samples {
        let pyramid = build_pyramid_with(&f, exec);
        Loaded { samples: Some(f), pyramid }
    } else {
        return Err(usage("give --input, --pyramid or --za-exact"));
    };
    if let Some(floor) = src.clamp_zeros {
        loaded.pyramid = ZeroPolicy::Clamp { floor }.apply(&loaded.pyramid)?;
    }
    Ok(loaded)
}

#[derive(Serialize)]
struct PyramidJson<'a> {
    base: u32,
    depth: u32,
    source: PyramidSource,
    omega: &'a [Vec<f64>],
}

fn pyramid(ctx: &Ctx, a: &PyramidArgs) -> Result<()> {
    let l = load_source(&a.source, ctx.exec)?;
    let p = &l.pyramid;
    let summary = format!("pyramid (base {}, depth {}, root {})", p.base(), p.depth(), p.root());
    match ctx.format(Format::Csv) {
        Format::Csv => emit(&ctx.out_file("pyramid.csv"), &io::pyramid_csv(p)?, &summary),
        Format::Json => {
            let j = PyramidJson { base: p.base(), depth: p.depth(), source: p.source(), omega: p.levels() };
            emit(&ctx.out_file("pyramid.json"), &json_bytes(&j)?, &summary)
        }
    }
}

fn exponent(ctx: &Ctx, a: &ExponentArgs) -> Result<()> {
    let l = load_source(&a.source, ctx.exec)?;
    let window = parse_window(a.window.as_deref(), l.pyramid.depth())?;
    let mode = match a.mode {
        ModeArg::TailMin => Aggregation::LiminfTailMin,
        ModeArg::Mean => Aggregation::TailMean,
    };
    let e = intrinsic_exponent_with(&l.pyramid, window, mode, ctx.exec)?;
    for ((j, h), r) in e.trace.levels.iter().zip(&e.trace.h).zip(&e.trace.residuals) {
        println!("j={j} H_j={h} residual={r:e}");
    }
    println!("H = {} ({:?}, window [{}, {}])", e.h, e.mode, window.lo, window.hi);
    let nu = match &a.nu {
        Some(grid) => {
            let s = scaling_nu(&l.pyramid, grid, window)?;
            if let Some(h) = s.h_from_nu {
                println!("H from nu = {h}");
            }
            Some(s)
        }
        None => None,
    };
    let summary = format!("H = {}", e.h);
    match ctx.format(Format::Csv) {
        Format::Csv => {
            emit(&ctx.out_file("trace.csv"), &io::trace_csv(&e.trace)?, &summary)?;
            if let Some(s) = &nu {
                let path = ctx.out_file("trace.csv").with_file_name("nu.csv");
                emit(&path, &io::scaling_csv(s)?, "nu scaling function")?;
            }
            Ok(())
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                exponent: &'a mfsub::exponents::IntrinsicExponent,
                nu: Option<&'a mfsub::exponents::ScalingFunction>,
            }
            emit(&ctx.out_file("exponent.json"), &json_bytes(&Out { exponent: &e, nu: nu.as_ref() })?, &summary)
        }
    }
}

fn homogeneity(ctx: &Ctx, a: &HomogeneityArgs) -> Result<()> {
    let l = load_source(&a.source, ctx.exec)?;
    let (lo, hi) = parse_range(&a.j_range, "--j-range")?;
    let window = Window::new(lo as u32, hi as u32)?;
    let r = homogeneity_report_with(&l.pyramid, a.level, window, a.threshold, ctx.exec)?;
    let summary = format!(
        "C1 {} (deviation {}), C2 {} (alpha {}, beta {})",
        verdict(r.c1_pass),
        r.deviation.last().unwrap(),
        verdict(r.c2_pass),
        r.alpha_hat,
        r.beta_hat
    );
    match ctx.format(Format::Csv) {
        Format::Csv => emit(&ctx.out_file("homogeneity.csv"), &io::homogeneity_csv(&r)?, &summary),
        Format::Json => emit(&ctx.out_file("homogeneity.json"), &json_bytes(&r)?, &summary),
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

const PARTITION_LIMIT: f64 = 1e-12;

fn decompose(ctx: &Ctx, a: &DecomposeArgs) -> Result<()> {
    let l = load_source(&a.source, ctx.exec)?;
    let depth = l.pyramid.depth();
    let schedule = if a.schedule == "auto" {
        DecompositionSchedule::auto(depth, a.start.min(depth), a.eta)?
    } else {
        let levels = a
            .schedule
            .split(',')
            .map(|s| s.trim().parse::<u32>().map_err(|_| usage("schedule must be auto or a list of levels")))
            .collect::<Result<Vec<_>>>()?;
        DecompositionSchedule::explicit(levels)?
    };
    let d = decompose_with(&l.pyramid, &schedule, l.samples.as_ref(), ctx.exec)?;
    let residual = d.max_partition_residual();
    let recon = match &l.samples {
        Some(z) => Some(compose_check(z, &d)?),
        None => None,
    };
    println!("stages {:?}", schedule.levels);
    println!("partition residual {residual:e}");
    if let Some(r) = &recon {
        println!("reconstruction error {:e}", r.stage_error);
        if let (Some(e), Some(b)) = (r.offstage_error, r.offstage_bound) {
            println!("off-stage error {e:e} (bound {b:e})");
        }
    }
    println!(
        "audit: H {} kappa {:?} verdict {}",
        d.audit.h,
        d.audit.kappa,
        verdict(d.audit.verdict)
    );
    match ctx.format(Format::Csv) {
        Format::Csv => {
            let dir = ctx.out_dir(".");
            emit(&dir.join("f.csv"), &io::map_csv(&d)?, "time change f")?;
            if !d.g_values.is_empty() {
                emit(&dir.join("g.csv"), &io::g_csv(&d)?, "factor g")?;
            }
        }
        Format::Json => emit(&ctx.out_file("decomposition.json"), &io::decomposition_json(&d)?, "decomposition")?,
    }
    if residual > PARTITION_LIMIT {
        return Err(Failure::Check(format!("partition residual {residual:e} exceeds {PARTITION_LIMIT:e}")));
    }
    if let Some(r) = recon {
        if r.stage_error != 0.0 {
            return Err(Failure::Check(format!("reconstruction error {:e} at stage points", r.stage_error)));
        }
    }
    Ok(())
}

fn spectrum(ctx: &Ctx, a: &SpectrumArgs) -> Result<()> {
    let weights = || a.weights.clone().ok_or_else(|| usage("--weights is required"));
    let (curve, variable): (SpectrumCurve, &str) = match a.kind {
        SpectrumKind::Measure => {
            let m = MultinomialMeasure::new(weights()?, 1)?.tau_model()?;
            (measure_spectrum(&m, a.points), "alpha")
        }
        SpectrumKind::Za => {
            let za = a.a.ok_or_else(|| usage("--a is required for za"))?;
            (za_spectrum(za, a.points)?, "h")
        }
        SpectrumKind::Subordinated => {
            let h = a.h.ok_or_else(|| usage("--h is required for subordinated"))?;
            let m = MultinomialMeasure::new(weights()?, 1)?.tau_model()?;
            (subordinated_spectrum(&measure_spectrum(&m, a.points), h)?, "h")
        }
        SpectrumKind::Coarse => {
            let l = load_source(&a.source, ctx.exec)?;
            let window = parse_window(a.window.as_deref(), l.pyramid.depth())?;
            let range = match &a.range {
                Some(r) => parse_range(r, "--range")?,
                None => observed_range(&l.pyramid, window),
            };
            (coarse_spectrum(&l.pyramid, range, a.bins, window)?, "h")
        }
    };
    let summary = match curve.argmax() {
        Some((x, d)) => format!("{} spectrum, max d = {d} at {variable} = {x}", curve.provenance.as_str()),
        None => format!("{} spectrum, empty", curve.provenance.as_str()),
    };
    match ctx.format(Format::Csv) {
        Format::Csv => emit(&ctx.out_file("spectrum.csv"), &io::spectrum_csv(&curve, variable)?, &summary),
        Format::Json => emit(&ctx.out_file("spectrum.json"), &json_bytes(&curve)?, &summary),
    }
}

/// Smallest and largest level exponent `−log_b ω/j` over the window.
fn observed_range(p: &OscillationPyramid, window: Window) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let b = (p.base() as f64).ln();
    for j in window.levels() {
        for &w in p.level(j) {
            if w > 0.0 {
                let h = -(w / p.root()).ln() / b / j as f64;
                lo = lo.min(h);
                hi = hi.max(h);
            }
        }
    }
    if hi <= lo {
        (lo - 0.5, lo + 0.5)
    } else {
        (lo, hi)
    }
}

fn verify(ctx: &Ctx, a: &VerifyArgs) -> Result<()> {
    let opts = mfsub::verify::VerifyOptions { seed: ctx.cli.seed, brownian_paths: a.brownian_paths, exec: ctx.exec };
    let run = mfsub::verify::run(opts)?;
    let dir = ctx.out_dir("verify-out");
    let written = run.write(&dir)?;
    for c in &run.report.criteria {
        let time = run.timings.get(&c.id).map(|t| format!(" [{t:.3} s]")).unwrap_or_default();
        println!("{} {:>2} {}{time}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name);
    }
    println!("wrote {} files to {}", written.len(), dir.display());
    if !run.report.all_pass {
        let failed: Vec<u32> = run.report.criteria.iter().filter(|c| !c.pass).map(|c| c.id).collect();
        return Err(Failure::Check(format!("criteria failed: {failed:?}")));
    }
    Ok(())
}
