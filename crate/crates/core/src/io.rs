//! File formats. Every writer goes through a temporary file in the target
//! directory that is renamed into place.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::exponents::{HomogeneityReport, LevelExponentTrace, ScalingFunction, ScalingKind};
use crate::grid::cell_count;
use crate::spectra::SpectrumCurve;
use crate::subordination::Decomposition;
use crate::{Error, OscillationPyramid, PyramidSource, Result, SampledFunction};

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionFile {
    base: u32,
    depth: u32,
    label: String,
    values: Vec<f64>,
}

pub fn function_json(f: &SampledFunction) -> Result<Vec<u8>> {
    let file = FunctionFile {
        base: f.base(),
        depth: f.depth(),
        label: f.label().to_string(),
        values: f.values().to_vec(),
    };
    let mut out = serde_json::to_vec(&file)?;
    out.push(b'\n');
    Ok(out)
}

pub fn parse_function_json(bytes: &[u8]) -> Result<SampledFunction> {
    let file: FunctionFile = serde_json::from_slice(bytes)?;
    SampledFunction::new(file.base, file.depth, file.values, file.label)
}

pub fn save_function(f: &SampledFunction, path: &Path) -> Result<()> {
    write_atomic(path, &function_json(f)?)
}

pub fn load_function(path: &Path) -> Result<SampledFunction> {
    parse_function_json(&std::fs::read(path)?)
}

/// `t,z` rows for plotting.
pub fn function_csv(f: &SampledFunction) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["t", "z"])?;
    for (k, v) in f.values().iter().enumerate() {
        w.write_record([f.t(k).to_string(), v.to_string()])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// `j,k,omega` in lexicographic order.
pub fn pyramid_csv(p: &OscillationPyramid) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["j", "k", "omega"])?;
    for (j, row) in p.levels().iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            w.write_record([j.to_string(), k.to_string(), v.to_string()])?;
        }
    }
    finish(w)
}

pub fn save_pyramid(p: &OscillationPyramid, path: &Path) -> Result<()> {
    write_atomic(path, &pyramid_csv(p)?)
}

/// Reads a `j,k,omega` table; the base is the number of level-1 cells.
pub fn parse_pyramid_csv(bytes: &[u8], source: PyramidSource) -> Result<OscillationPyramid> {
    let mut r = csv::Reader::from_reader(bytes);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["j", "k", "omega"] {
        return Err(Error::Malformed("pyramid header must be j,k,omega".into()));
    }
    let mut table: Vec<Vec<f64>> = vec![];
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| rec.get(i).ok_or_else(|| Error::Malformed("short pyramid row".into()));
        let j: usize = parse(0)?.trim().parse().map_err(|_| Error::Malformed("bad level".into()))?;
        let k: usize = parse(1)?.trim().parse().map_err(|_| Error::Malformed("bad index".into()))?;
        let w: f64 = parse(2)?.trim().parse().map_err(|_| Error::Malformed("bad omega".into()))?;
        if j == table.len() {
            table.push(vec![]);
        }
        if j + 1 != table.len() || k != table[j].len() {
            return Err(Error::Malformed(format!("row ({j}, {k}) out of lexicographic order")));
        }
        table[j].push(w);
    }
    if table.len() < 2 {
        return Err(Error::Malformed("pyramid needs at least levels 0 and 1".into()));
    }
    let base = table[1].len() as u32;
    OscillationPyramid::from_table(base, table, source)
}

pub fn load_pyramid(path: &Path, source: PyramidSource) -> Result<OscillationPyramid> {
    parse_pyramid_csv(&std::fs::read(path)?, source)
}

/// `j,H_j,residual`.
pub fn trace_csv(t: &LevelExponentTrace) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["j", "H_j", "residual"])?;
    for i in 0..t.levels.len() {
        w.write_record([t.levels[i].to_string(), t.h[i].to_string(), t.residuals[i].to_string()])?;
    }
    finish(w)
}

/// `q,tau` or `p,nu`.
pub fn scaling_csv(s: &ScalingFunction) -> Result<Vec<u8>> {
    let header = match s.kind {
        ScalingKind::Tau => ["q", "tau"],
        ScalingKind::Nu => ["p", "nu"],
    };
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(header)?;
    for (x, y) in s.grid.iter().zip(&s.values) {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    finish(w)
}

/// `# provenance=…` then `alpha,d` (or `h,d` when `variable` is `"h"`).
pub fn spectrum_csv(s: &SpectrumCurve, variable: &str) -> Result<Vec<u8>> {
    let mut out = format!("# provenance={}\n", s.provenance.as_str()).into_bytes();
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([variable, "d"])?;
    for (x, d) in s.x.iter().zip(&s.d) {
        w.write_record([x.to_string(), d.to_string()])?;
    }
    out.extend(finish(w)?);
    Ok(out)
}

/// `J,K,j,H_jK`.
pub fn homogeneity_csv(r: &HomogeneityReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["J", "K", "j", "H_jK"])?;
    for b in &r.blocks {
        for (j, h) in r.j_levels.iter().zip(&b.h) {
            w.write_record([r.level.to_string(), b.k.to_string(), j.to_string(), h.to_string()])?;
        }
    }
    finish(w)
}

pub fn decomposition_json(d: &Decomposition) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec(d)?;
    out.push(b'\n');
    Ok(out)
}

/// `t,f` at the final-stage points.
pub fn map_csv(d: &Decomposition) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["t", "f"])?;
    let n = d.f.breakpoints().len() - 1;
    for (k, y) in d.f.breakpoints().iter().enumerate() {
        w.write_record([(k as f64 / n as f64).to_string(), y.to_string()])?;
    }
    finish(w)
}

/// `y,g` transport pairs.
pub fn g_csv(d: &Decomposition) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["y", "g"])?;
    for (y, g) in d.g_grid.iter().zip(&d.g_values) {
        w.write_record([y.to_string(), g.to_string()])?;
    }
    finish(w)
}

/// Checks a table read back from CSV against the b-adic layout.
pub fn expected_rows(base: u32, depth: u32) -> Result<usize> {
    (0..=depth).map(|j| cell_count(base, j)).sum()
}
