//! Text formats: dense CSV matrices (row-major, no header), MatrixMarket
//! coordinate files, one-integer-per-line label files, and the flat
//! `key = value` configuration format for generator and benchmark runs.
//!
//! Parsers take untrusted text: they must return errors, never panic, and
//! they refuse dimension claims too large for dense storage. Matrices are
//! written at 17 significant digits, so a write/parse round trip reproduces
//! every f64 bit-exactly.

use crate::baselines::{Init, Solver};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::synth::GeneratorSpec;
use std::io::Write;
use std::path::Path;

/// Dense storage cap: parsers reject claims beyond 2^28 entries (2 GiB of
/// f64), far above the desk scale this crate targets.
pub const MAX_DENSE_ENTRIES: usize = 1 << 28;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("'{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("'{tok}' is not a nonnegative integer")))
}

// ---------------------------------------------------------------------------
// Dense CSV

/// Parses a dense row-major CSV matrix (no header). Empty input is the
/// empty matrix.
pub fn parse_csv_matrix(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut cols = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split(',') {
            row.push(parse_f64(tok, i + 1)?);
        }
        match cols {
            None => {
                if row.len().max(1) * (rows.len() + 1) > MAX_DENSE_ENTRIES {
                    return Err(parse_err(i + 1, "matrix too large for dense storage"));
                }
                cols = Some(row.len());
            }
            Some(c) if c != row.len() => {
                return Err(parse_err(
                    i + 1,
                    format!("row has {} entries, expected {c}", row.len()),
                ));
            }
            _ => {}
        }
        if (rows.len() + 1).saturating_mul(cols.unwrap()) > MAX_DENSE_ENTRIES {
            return Err(parse_err(i + 1, "matrix too large for dense storage"));
        }
        rows.push(row);
    }
    let n_rows = rows.len();
    let n_cols = cols.unwrap_or(0);
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Matrix::from_row_major(n_rows, n_cols, &flat)
}

pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_csv_matrix(&std::fs::read_to_string(path)?)
}

/// Writes a matrix as row-major CSV at 17 significant digits. A matrix
/// with no columns writes nothing.
pub fn write_csv_matrix(out: &mut impl Write, m: &Matrix) -> Result<()> {
    if m.cols() == 0 {
        return Ok(());
    }
    let mut line = String::new();
    for i in 0..m.rows() {
        line.clear();
        for j in 0..m.cols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", m.get(i, j)));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// MatrixMarket coordinate format

/// Parses a MatrixMarket coordinate file (real or integer, general or
/// symmetric) into a dense matrix. Duplicate entries accumulate.
pub fn parse_matrix_market(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().enumerate();
    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let fields: Vec<&str> = banner.split_whitespace().collect();
    if fields.len() < 5 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(parse_err(1, "missing '%%MatrixMarket' banner"));
    }
    if !fields[1].eq_ignore_ascii_case("matrix") {
        return Err(parse_err(1, format!("unsupported object '{}'", fields[1])));
    }
    if !fields[2].eq_ignore_ascii_case("coordinate") {
        return Err(parse_err(1, format!("unsupported format '{}'", fields[2])));
    }
    match fields[3].to_ascii_lowercase().as_str() {
        "real" | "integer" => {}
        other => return Err(parse_err(1, format!("unsupported field type '{other}'"))),
    }
    let symmetric = match fields[4].to_ascii_lowercase().as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    // Size line: first non-comment line after the banner.
    let mut size = None;
    for (i, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(i + 1, "size line must be 'rows cols nnz'"));
        }
        let rows = parse_usize(toks[0], i + 1)?;
        let cols = parse_usize(toks[1], i + 1)?;
        let nnz = parse_usize(toks[2], i + 1)?;
        size = Some((rows, cols, nnz));
        break;
    }
    let Some((rows, cols, nnz)) = size else {
        return Err(parse_err(0, "missing size line"));
    };
    if rows.saturating_mul(cols) > MAX_DENSE_ENTRIES {
        return Err(parse_err(0, "matrix too large for dense storage"));
    }
    if nnz > rows.saturating_mul(cols) && !(rows == 0 || cols == 0) {
        return Err(parse_err(0, format!("{nnz} entries cannot fit a {rows}x{cols} matrix")));
    }
    if symmetric && rows != cols {
        return Err(parse_err(0, "symmetric matrices must be square"));
    }

    let mut m = Matrix::zeros(rows, cols);
    let mut seen = 0usize;
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(i + 1, "entry must be 'row col value'"));
        }
        let r = parse_usize(toks[0], i + 1)?;
        let c = parse_usize(toks[1], i + 1)?;
        let v = parse_f64(toks[2], i + 1)?;
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(parse_err(i + 1, format!("index ({r}, {c}) out of bounds")));
        }
        seen += 1;
        if seen > nnz {
            return Err(parse_err(i + 1, format!("more than the declared {nnz} entries")));
        }
        m.set(r - 1, c - 1, m.get(r - 1, c - 1) + v);
        if symmetric && r != c {
            m.set(c - 1, r - 1, m.get(c - 1, r - 1) + v);
        }
    }
    if seen != nnz {
        return Err(parse_err(0, format!("declared {nnz} entries, found {seen}")));
    }
    Ok(m)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_matrix_market(&std::fs::read_to_string(path)?)
}

/// Writes the nonzero entries in MatrixMarket coordinate/real/general form.
pub fn write_matrix_market(out: &mut impl Write, m: &Matrix) -> Result<()> {
    let nnz = m.data().iter().filter(|&&v| v != 0.0).count();
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.rows(), m.cols(), nnz)?;
    for j in 0..m.cols() {
        for (i, &v) in m.column(j).iter().enumerate() {
            if v != 0.0 {
                writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

/// Reads a matrix file, sniffing MatrixMarket by its banner and falling
/// back to dense CSV.
pub fn read_matrix_auto(path: impl AsRef<Path>) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(&text)
    } else {
        parse_csv_matrix(&text)
    }
}

// ---------------------------------------------------------------------------
// Labels

/// Parses one cluster id per line.
pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(parse_usize(line, i + 1)?);
    }
    Ok(labels)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    parse_labels(&std::fs::read_to_string(path)?)
}

pub fn write_labels(out: &mut impl Write, labels: &[usize]) -> Result<()> {
    for l in labels {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Flat key-value configs

/// Parses `key = value` lines; `#` starts a comment, later keys win.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(parse_err(i + 1, "expected 'key = value'"));
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(parse_err(i + 1, "empty key"));
        }
        pairs.push((key, value));
    }
    Ok(pairs)
}

fn parse_f64_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|t| parse_f64(t, 0))
        .collect()
}

/// Expands the `lambda` sugar: a single rate broadcast over all cones, an
/// explicit comma list, or `inv-range` for rates 1, 1/2, ..., 1/K.
fn resolve_lambdas(value: &str, k: usize) -> Result<Vec<f64>> {
    match value {
        "inv-range" => Ok((1..=k).map(|i| 1.0 / i as f64).collect()),
        v if v.contains(',') => {
            let l = parse_f64_list(v)?;
            if l.len() != k {
                return Err(parse_err(0, format!("{} rates for k = {k}", l.len())));
            }
            Ok(l)
        }
        v => Ok(vec![parse_f64(v, 0)?; k]),
    }
}

/// Builds a [`GeneratorSpec`] from key-value text. Required keys: `f`, `n`,
/// `k`, `alpha`. Optional: `beta` (or `auto`), `lambda` (rate, list, or
/// `inv-range`; default 1), `mixing` (list or `uniform`), `project`
/// (default true), `seed` (default 0), `delta` (default 0).
pub fn parse_generator_spec(text: &str) -> Result<GeneratorSpec> {
    let pairs = parse_key_values(text)?;
    generator_spec_from_pairs(&pairs)
}

pub fn generator_spec_from_pairs(pairs: &[(String, String)]) -> Result<GeneratorSpec> {
    let mut f = None;
    let mut n = None;
    let mut k = None;
    let mut alpha: Option<Vec<f64>> = None;
    let mut beta = None;
    let mut lambda_raw: Option<String> = None;
    let mut mixing = None;
    let mut project = true;
    let mut seed = 0u64;
    let mut delta = 0.0;
    for (key, value) in pairs {
        match key.as_str() {
            "f" => f = Some(parse_usize(value, 0)?),
            "n" => n = Some(parse_usize(value, 0)?),
            "k" => k = Some(parse_usize(value, 0)?),
            "alpha" => alpha = Some(parse_f64_list(value)?),
            "beta" => {
                beta = if value == "auto" { None } else { Some(parse_f64(value, 0)?) };
            }
            "lambda" => lambda_raw = Some(value.clone()),
            "mixing" => {
                mixing = if value == "uniform" { None } else { Some(parse_f64_list(value)?) };
            }
            "project" => {
                project = match value.as_str() {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    other => {
                        return Err(parse_err(0, format!("'{other}' is not a boolean")));
                    }
                };
            }
            "seed" => {
                seed = value
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(0, format!("'{value}' is not a seed")))?;
            }
            "delta" => delta = parse_f64(value, 0)?,
            other => return Err(parse_err(0, format!("unknown generator key '{other}'"))),
        }
    }
    let f = f.ok_or_else(|| parse_err(0, "missing key 'f'"))?;
    let n = n.ok_or_else(|| parse_err(0, "missing key 'n'"))?;
    let k = k.ok_or_else(|| parse_err(0, "missing key 'k'"))?;
    if k == 0 {
        return Err(parse_err(0, "k must be at least 1"));
    }
    let mut alphas = alpha.ok_or_else(|| parse_err(0, "missing key 'alpha'"))?;
    if alphas.len() == 1 && k > 1 {
        alphas = vec![alphas[0]; k];
    }
    let lambdas = resolve_lambdas(lambda_raw.as_deref().unwrap_or("1"), k)?;
    if delta < 0.0 {
        return Err(parse_err(0, "delta must be nonnegative"));
    }
    Ok(GeneratorSpec { f, n, k, alphas, beta, lambdas, mixing, project, seed, delta })
}

/// Serializes a generator spec back to the key-value format.
pub fn write_generator_spec(out: &mut impl Write, spec: &GeneratorSpec) -> Result<()> {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",");
    writeln!(out, "f = {}", spec.f)?;
    writeln!(out, "n = {}", spec.n)?;
    writeln!(out, "k = {}", spec.k)?;
    writeln!(out, "alpha = {}", join(&spec.alphas))?;
    match spec.beta {
        Some(b) => writeln!(out, "beta = {b:.16e}")?,
        None => writeln!(out, "beta = auto")?,
    }
    writeln!(out, "lambda = {}", join(&spec.lambdas))?;
    match &spec.mixing {
        Some(m) => writeln!(out, "mixing = {}", join(m))?,
        None => writeln!(out, "mixing = uniform")?,
    }
    writeln!(out, "project = {}", spec.project)?;
    writeln!(out, "seed = {}", spec.seed)?;
    writeln!(out, "delta = {:.16e}", spec.delta)?;
    Ok(())
}

/// A benchmark sweep: one data geometry swept over sample counts, solvers,
/// and initializers, each repeated over seeded runs.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub data: GeneratorSpec,
    pub ns: Vec<usize>,
    pub solvers: Vec<Solver>,
    pub inits: Vec<Init>,
    pub iters: usize,
    pub runs: usize,
}

/// Parses a benchmark sweep config. Data keys are those of
/// [`parse_generator_spec`]; sweep keys are `ns` (comma list, default the
/// data `n`), `solvers` (required, nonempty), `inits` (default `rand`),
/// `iters` (default 100), and `runs` (default 1).
pub fn parse_benchmark_spec(text: &str) -> Result<BenchmarkSpec> {
    let pairs = parse_key_values(text)?;
    let mut data_pairs = Vec::new();
    let mut ns = None;
    let mut solvers: Option<Vec<Solver>> = None;
    let mut inits: Option<Vec<Init>> = None;
    let mut iters = 100usize;
    let mut runs = 1usize;
    for (key, value) in pairs {
        match key.as_str() {
            "ns" => {
                ns = Some(
                    value
                        .split(',')
                        .map(|t| parse_usize(t, 0))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            "solvers" => {
                solvers = Some(
                    value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse())
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            "inits" => {
                inits = Some(
                    value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse())
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            "iters" => iters = parse_usize(&value, 0)?,
            "runs" => runs = parse_usize(&value, 0)?,
            _ => data_pairs.push((key, value)),
        }
    }
    let data = generator_spec_from_pairs(&data_pairs)?;
    let solvers = solvers.unwrap_or_default();
    if solvers.is_empty() {
        return Err(parse_err(0, "benchmark needs a nonempty 'solvers' list"));
    }
    if runs == 0 {
        return Err(parse_err(0, "runs must be at least 1"));
    }
    Ok(BenchmarkSpec {
        ns: ns.unwrap_or_else(|| vec![data.n]),
        data,
        solvers,
        inits: inits.unwrap_or(vec![Init::Rand]),
        iters,
        runs,
    })
}
