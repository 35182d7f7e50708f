//! Text-based file formats for matrices, tensors and factored solutions.
//!
//! All writers are canonical (a fixed layout with `{:e}`-formatted values,
//! which round-trip exactly) and atomic (write to a sibling temp file, then
//! rename). Formats:
//!
//! - **Dense matrix**: header line `rows cols`, then one line per row with
//!   the entries of that row.
//! - **Dense tensor**: header line with the per-mode extents, then one entry
//!   per line in co-lexicographic order (first index fastest).
//! - **Matrix Market**: `coordinate real general` for square CSR matrices,
//!   1-based indices, entries sorted by `(row, col)`.
//! - **Low-rank bundle**: a directory with `manifest.txt` (`rows`, `cols`,
//!   `rank`) and the factors `u.txt`, `s.txt`, `v.txt` as dense matrices.
//! - **Tucker bundle**: a directory with `manifest.txt` (`modes`, `shape`,
//!   `ranks`), `factor_<k>.txt` per mode and `core.txt` as a dense tensor.

use crate::bug::LowRankMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::operators::CsrMatrix;
use crate::scalar::Scalar;
use crate::tucker::{DenseTensor, TuckerTensor};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Writes `contents` to `path` atomically: the bytes land in a sibling
/// `.tmp` file first and are renamed into place, so readers never observe a
/// partially written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?
        .to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_value<T: Scalar>(v: T) -> Result<String> {
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("cannot serialize {v}")));
    }
    Ok(format!("{v:e}"))
}

fn parse_value<T: Scalar>(tok: &str) -> Result<T> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse(format!("bad numeric value {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("non-finite value {tok:?} in file")));
    }
    Ok(T::of(v))
}

fn parse_count(tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Parse(format!("bad count {tok:?}")))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("reading {}: {}", path.display(), e)))
}

// ---------------------------------------------------------------------------
// Dense matrices
// ---------------------------------------------------------------------------

pub fn dense_matrix_to_string<T: Scalar>(m: &DenseMatrix<T>) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&fmt_value(m[(i, j)])?);
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn dense_matrix_from_string<T: Scalar>(text: &str) -> Result<DenseMatrix<T>> {
    let mut tokens = text.split_whitespace();
    let rows = parse_count(tokens.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?)?;
    let cols = parse_count(tokens.next().ok_or_else(|| Error::Parse("missing column count".into()))?)?;
    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let tok = tokens.next().ok_or_else(|| {
                Error::Parse(format!("matrix body ended early at entry ({i}, {j})"))
            })?;
            m[(i, j)] = parse_value(tok)?;
        }
    }
    if tokens.next().is_some() {
        return Err(Error::Parse("trailing data after matrix body".into()));
    }
    Ok(m)
}

pub fn write_dense_matrix<T: Scalar>(path: &Path, m: &DenseMatrix<T>) -> Result<()> {
    write_atomic(path, &dense_matrix_to_string(m)?)
}

pub fn read_dense_matrix<T: Scalar>(path: &Path) -> Result<DenseMatrix<T>> {
    dense_matrix_from_string(&read_file(path)?)
}

// ---------------------------------------------------------------------------
// Dense tensors
// ---------------------------------------------------------------------------

pub fn dense_tensor_to_string<T: Scalar>(t: &DenseTensor<T>) -> Result<String> {
    let mut out = String::new();
    let shape: Vec<String> = t.shape().iter().map(|e| e.to_string()).collect();
    let _ = writeln!(out, "{}", shape.join(" "));
    for &v in t.data() {
        out.push_str(&fmt_value(v)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn dense_tensor_from_string<T: Scalar>(text: &str) -> Result<DenseTensor<T>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty tensor file".into()))?;
    let shape: Vec<usize> = header
        .split_whitespace()
        .map(parse_count)
        .collect::<Result<_>>()?;
    let expected: usize = shape.iter().product();
    let mut data = Vec::with_capacity(expected);
    for tok in lines.flat_map(str::split_whitespace) {
        data.push(parse_value(tok)?);
    }
    if data.len() != expected {
        return Err(Error::Parse(format!(
            "tensor body has {} entries, shape {:?} needs {}",
            data.len(),
            shape,
            expected
        )));
    }
    DenseTensor::from_vec(&shape, data)
}

pub fn write_dense_tensor<T: Scalar>(path: &Path, t: &DenseTensor<T>) -> Result<()> {
    write_atomic(path, &dense_tensor_to_string(t)?)
}

pub fn read_dense_tensor<T: Scalar>(path: &Path) -> Result<DenseTensor<T>> {
    dense_tensor_from_string(&read_file(path)?)
}

// ---------------------------------------------------------------------------
// Matrix Market (coordinate real general, square)
// ---------------------------------------------------------------------------

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn matrix_market_to_string<T: Scalar>(m: &CsrMatrix<T>) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{MM_HEADER}");
    let _ = writeln!(out, "{} {} {}", m.dim(), m.dim(), m.nnz());
    for r in 0..m.dim() {
        let (cols, vals) = m.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            let _ = writeln!(out, "{} {} {}", r + 1, c + 1, fmt_value(v)?);
        }
    }
    Ok(out)
}

pub fn matrix_market_from_string<T: Scalar>(text: &str) -> Result<CsrMatrix<T>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?;
    let normalized = header.to_ascii_lowercase();
    if !normalized.starts_with("%%matrixmarket")
        || !normalized.contains("matrix")
        || !normalized.contains("coordinate")
        || !normalized.contains("real")
        || !normalized.contains("general")
    {
        return Err(Error::Parse(format!(
            "unsupported Matrix Market header {header:?} (need matrix coordinate real general)"
        )));
    }
    let size_line = lines
        .by_ref()
        .find(|l| !l.trim_start().starts_with('%') && !l.trim().is_empty())
        .ok_or_else(|| Error::Parse("missing Matrix Market size line".into()))?;
    let mut size_tokens = size_line.split_whitespace();
    let rows = parse_count(size_tokens.next().unwrap_or(""))?;
    let cols = parse_count(
        size_tokens
            .next()
            .ok_or_else(|| Error::Parse("size line needs rows cols nnz".into()))?,
    )?;
    let nnz = parse_count(
        size_tokens
            .next()
            .ok_or_else(|| Error::Parse("size line needs rows cols nnz".into()))?,
    )?;
    if rows != cols {
        return Err(Error::DimensionMismatch(format!(
            "operator matrices must be square, file is {rows}x{cols}"
        )));
    }
    let mut triplets = Vec::with_capacity(nnz);
    for line in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let i = parse_count(toks.next().unwrap_or(""))?;
        let j = parse_count(
            toks.next()
                .ok_or_else(|| Error::Parse(format!("short entry line {trimmed:?}")))?,
        )?;
        let v: T = parse_value(
            toks.next()
                .ok_or_else(|| Error::Parse(format!("short entry line {trimmed:?}")))?,
        )?;
        if i == 0 || j == 0 {
            return Err(Error::Parse("Matrix Market indices are 1-based".into()));
        }
        triplets.push((i - 1, j - 1, v));
    }
    if triplets.len() != nnz {
        return Err(Error::Parse(format!(
            "Matrix Market file declares {} entries but contains {}",
            nnz,
            triplets.len()
        )));
    }
    CsrMatrix::from_triplets(rows, &triplets)
}

pub fn write_matrix_market<T: Scalar>(path: &Path, m: &CsrMatrix<T>) -> Result<()> {
    write_atomic(path, &matrix_market_to_string(m)?)
}

pub fn read_matrix_market<T: Scalar>(path: &Path) -> Result<CsrMatrix<T>> {
    matrix_market_from_string(&read_file(path)?)
}

// ---------------------------------------------------------------------------
// Low-rank bundles
// ---------------------------------------------------------------------------

/// Key-value manifest lines (`name v1 v2 ...`), shared by both bundle kinds.
fn manifest_values<'a>(text: &'a str, key: &str, path: &Path) -> Result<Vec<&'a str>> {
    for line in text.lines() {
        let mut toks = line.split_whitespace();
        if toks.next() == Some(key) {
            return Ok(toks.collect());
        }
    }
    Err(Error::Parse(format!(
        "manifest {} lacks key {key:?}",
        path.display()
    )))
}

fn manifest_count(text: &str, key: &str, path: &Path) -> Result<usize> {
    let vals = manifest_values(text, key, path)?;
    if vals.len() != 1 {
        return Err(Error::Parse(format!(
            "manifest key {key:?} needs exactly one value"
        )));
    }
    parse_count(vals[0])
}

pub fn write_low_rank_bundle<T: Scalar>(dir: &Path, x: &LowRankMatrix<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = format!(
        "rows {}\ncols {}\nrank {}\n",
        x.nrows(),
        x.ncols(),
        x.rank()
    );
    write_atomic(&dir.join("manifest.txt"), &manifest)?;
    write_dense_matrix(&dir.join("u.txt"), &x.u)?;
    write_dense_matrix(&dir.join("s.txt"), &x.s)?;
    write_dense_matrix(&dir.join("v.txt"), &x.v)
}

pub fn read_low_rank_bundle<T: Scalar>(dir: &Path) -> Result<LowRankMatrix<T>> {
    let manifest_path = dir.join("manifest.txt");
    let manifest = read_file(&manifest_path)?;
    let rows = manifest_count(&manifest, "rows", &manifest_path)?;
    let cols = manifest_count(&manifest, "cols", &manifest_path)?;
    let rank = manifest_count(&manifest, "rank", &manifest_path)?;
    let u = read_dense_matrix(&dir.join("u.txt"))?;
    let s = read_dense_matrix(&dir.join("s.txt"))?;
    let v = read_dense_matrix(&dir.join("v.txt"))?;
    if u.rows() != rows || v.rows() != cols || s.rows() != rank {
        return Err(Error::DimensionMismatch(format!(
            "bundle manifest says {rows}x{cols} rank {rank}, factors are U {}x{}, S {}x{}, V {}x{}",
            u.rows(),
            u.cols(),
            s.rows(),
            s.cols(),
            v.rows(),
            v.cols()
        )));
    }
    LowRankMatrix::new(u, s, v)
}

// ---------------------------------------------------------------------------
// Tucker bundles
// ---------------------------------------------------------------------------

pub fn write_tucker_bundle<T: Scalar>(dir: &Path, x: &TuckerTensor<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let join = |v: &[usize]| {
        v.iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let manifest = format!(
        "modes {}\nshape {}\nranks {}\n",
        x.ndim(),
        join(&x.dims()),
        join(&x.ranks())
    );
    write_atomic(&dir.join("manifest.txt"), &manifest)?;
    for (k, factor) in x.factors.iter().enumerate() {
        write_dense_matrix(&dir.join(format!("factor_{k}.txt")), factor)?;
    }
    write_dense_tensor(&dir.join("core.txt"), &x.core)
}

pub fn read_tucker_bundle<T: Scalar>(dir: &Path) -> Result<TuckerTensor<T>> {
    let manifest_path = dir.join("manifest.txt");
    let manifest = read_file(&manifest_path)?;
    let modes = manifest_count(&manifest, "modes", &manifest_path)?;
    let shape: Vec<usize> = manifest_values(&manifest, "shape", &manifest_path)?
        .iter()
        .map(|t| parse_count(t))
        .collect::<Result<_>>()?;
    let ranks: Vec<usize> = manifest_values(&manifest, "ranks", &manifest_path)?
        .iter()
        .map(|t| parse_count(t))
        .collect::<Result<_>>()?;
    if shape.len() != modes || ranks.len() != modes {
        return Err(Error::Parse(format!(
            "manifest declares {} modes but shape/ranks have {}/{} entries",
            modes,
            shape.len(),
            ranks.len()
        )));
    }
    let mut factors = Vec::with_capacity(modes);
    for k in 0..modes {
        let factor = read_dense_matrix(&dir.join(format!("factor_{k}.txt")))?;
        if factor.rows() != shape[k] || factor.cols() != ranks[k] {
            return Err(Error::DimensionMismatch(format!(
                "factor {} is {}x{}, manifest says {}x{}",
                k,
                factor.rows(),
                factor.cols(),
                shape[k],
                ranks[k]
            )));
        }
        factors.push(factor);
    }
    let core = read_dense_tensor(&dir.join("core.txt"))?;
    if core.shape() != ranks.as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "core shape {:?} does not match manifest ranks {:?}",
            core.shape(),
            ranks
        )));
    }
    TuckerTensor::new(core, factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn tmp_dir(tag: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("lrsylv-io-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn dense_matrix_round_trip_is_value_exact() {
        let mut rng = SeededRng::new(7);
        let m = rng.normal_matrix::<f64>(5, 3);
        let dir = tmp_dir("mat");
        let path = dir.join("m.txt");
        write_dense_matrix(&path, &m).unwrap();
        let back: DenseMatrix<f64> = read_dense_matrix(&path).unwrap();
        assert_eq!(back.rows(), 5);
        assert_eq!(back.cols(), 3);
        for i in 0..5 {
            for j in 0..3 {
                assert_eq!(back[(i, j)].to_bits(), m[(i, j)].to_bits());
            }
        }
        // Writer is canonical: read-then-write reproduces the bytes.
        let first = fs::read(&path).unwrap();
        write_dense_matrix(&path, &back).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn dense_tensor_round_trip_is_value_exact() {
        let mut rng = SeededRng::new(8);
        let t = DenseTensor::<f64>::random_normal(&[3, 2, 4], &mut rng).unwrap();
        let dir = tmp_dir("ten");
        let path = dir.join("t.txt");
        write_dense_tensor(&path, &t).unwrap();
        let back: DenseTensor<f64> = read_dense_tensor(&path).unwrap();
        assert_eq!(back.shape(), t.shape());
        for (a, b) in back.data().iter().zip(t.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn matrix_market_round_trip_preserves_structure() {
        let m = CsrMatrix::from_triplets(
            4,
            &[
                (0, 0, -2.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, -2.0),
                (3, 0, 0.125),
                (2, 3, -1.5e-7),
            ],
        )
        .unwrap();
        let dir = tmp_dir("mm");
        let path = dir.join("a.mtx");
        write_matrix_market(&path, &m).unwrap();
        let back: CsrMatrix<f64> = read_matrix_market(&path).unwrap();
        assert_eq!(back.dim(), 4);
        assert_eq!(back.nnz(), m.nnz());
        assert!(back.to_dense().max_abs_diff(&m.to_dense()) == 0.0);
        let first = fs::read(&path).unwrap();
        write_matrix_market(&path, &back).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn matrix_market_reads_foreign_fixture() {
        // Hand-written fixture with comments, blank lines and loose spacing.
        let text = "%%MatrixMarket matrix coordinate real general\n\
                    % a 3x3 tridiagonal fragment\n\
                    \n\
                    3 3 4\n\
                    1 1 2.0\n\
                    2 2  2.0\n\
                    3 3 2.0\n\
                    1 3 -0.5\n";
        let m: CsrMatrix<f64> = matrix_market_from_string(text).unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.to_dense()[(0, 2)], -0.5);
        assert_eq!(m.to_dense()[(1, 1)], 2.0);
    }

    #[test]
    fn matrix_market_rejects_wrong_headers_and_counts() {
        assert!(matrix_market_from_string::<f64>("%%MatrixMarket matrix array real general\n2 2\n").is_err());
        assert!(matrix_market_from_string::<f64>(
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n"
        )
        .is_err());
        assert!(matrix_market_from_string::<f64>(
            "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n"
        )
        .is_err());
    }

    #[test]
    fn low_rank_bundle_round_trip() {
        let mut rng = SeededRng::new(9);
        let x = LowRankMatrix::<f64>::random_with_core(6, 5, 2, &mut rng).unwrap();
        let dir = tmp_dir("lr");
        let bundle = dir.join("x");
        write_low_rank_bundle(&bundle, &x).unwrap();
        let back: LowRankMatrix<f64> = read_low_rank_bundle(&bundle).unwrap();
        assert_eq!(back.nrows(), 6);
        assert_eq!(back.ncols(), 5);
        assert_eq!(back.rank(), 2);
        assert!(back.to_dense().max_abs_diff(&x.to_dense()) == 0.0);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn tucker_bundle_round_trip() {
        let mut rng = SeededRng::new(10);
        let x = TuckerTensor::<f64>::random(&[5, 4, 6], &[2, 3, 2], &mut rng).unwrap();
        let dir = tmp_dir("tk");
        let bundle = dir.join("x");
        write_tucker_bundle(&bundle, &x).unwrap();
        let back: TuckerTensor<f64> = read_tucker_bundle(&bundle).unwrap();
        assert_eq!(back.dims(), vec![5, 4, 6]);
        assert_eq!(back.ranks(), vec![2, 3, 2]);
        assert!(back.to_dense().max_abs_diff(&x.to_dense()) == 0.0);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn non_finite_values_are_rejected_on_write() {
        let mut m = DenseMatrix::<f64>::zeros(2, 2);
        m[(1, 1)] = f64::NAN;
        assert!(dense_matrix_to_string(&m).is_err());
    }
}
