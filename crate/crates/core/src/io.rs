//! File formats: SCMF matrices, SCMP parameters, edge lists, labels,
//! partitions, splits, result tables and run manifests.
//!
//! Every writer goes through [`write_atomic`], so a reader never observes a
//! partially written file.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::data::Split;
use crate::encoder::{Activation, Arch, EncoderParams};
use crate::error::{Error, Result};
use crate::graph::{DedupPolicy, SparseGraph};
use crate::matrix::DenseMatrix;
use crate::partition::Partition;

pub const MATRIX_MAGIC: &[u8; 4] = b"SCMF";
pub const PARAMS_MAGIC: &[u8; 4] = b"SCMP";
pub const FORMAT_VERSION: u32 = 1;

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Little-endian reader that reports byte offsets on failure.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::data(
                self.path,
                format!(
                    "truncated at byte {} reading {what}: expected {n} more bytes, found {}",
                    self.pos,
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(Error::data(
                self.path,
                format!(
                    "bad magic at byte 0: expected {:?}, found {:?}",
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(got)
                ),
            ));
        }
        Ok(())
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn version(&mut self) -> Result<()> {
        let at = self.pos;
        let v = self.u32("version")?;
        if v != FORMAT_VERSION {
            return Err(Error::data(
                self.path,
                format!("unsupported version {v} at byte {at}, expected {FORMAT_VERSION}"),
            ));
        }
        Ok(())
    }

    fn dim(&mut self, what: &str) -> Result<usize> {
        let at = self.pos;
        let v = self.u64(what)?;
        usize::try_from(v)
            .map_err(|_| Error::data(self.path, format!("{what} {v} at byte {at} is too large")))
    }

    fn f64s(&mut self, rows: usize, cols: usize) -> Result<DenseMatrix> {
        let count = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::data(self.path, format!("{rows}x{cols} matrix is too large")))?;
        let start = self.pos;
        let raw = self.take(count, "matrix data")?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect::<Vec<_>>();
        DenseMatrix::from_vec(rows, cols, data).map_err(|e| {
            Error::data(
                self.path,
                format!("matrix data starting at byte {start}: {e}"),
            )
        })
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::data(
                self.path,
                format!(
                    "{} trailing bytes after byte {}",
                    self.bytes.len() - self.pos,
                    self.pos
                ),
            ));
        }
        Ok(())
    }
}

fn push_matrix_data(out: &mut Vec<u8>, m: &DenseMatrix) {
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_matrix(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * m.as_slice().len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    push_matrix_data(&mut out, m);
    out
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<DenseMatrix> {
    let mut c = Cursor {
        bytes,
        pos: 0,
        path,
    };
    c.magic(MATRIX_MAGIC)?;
    c.version()?;
    let rows = c.dim("row count")?;
    let cols = c.dim("column count")?;
    let m = c.f64s(rows, cols)?;
    c.finish()?;
    Ok(m)
}

pub fn parse_csv_matrix(text: &str, path: &Path) -> Result<DenseMatrix> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| {
                    Error::data(
                        path,
                        format!("line {}: cannot parse {:?} as a number", ln + 1, t.trim()),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::data(
                    path,
                    format!("line {}: {} values, expected {first}", ln + 1, row.len()),
                ));
            }
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows).map_err(|e| Error::data(path, e.to_string()))
}

pub fn format_csv_matrix(m: &DenseMatrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Reads SCMF, or CSV when the extension is `.csv`.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    if is_csv(path) {
        parse_csv_matrix(&read_text(path)?, path)
    } else {
        decode_matrix(&read_bytes(path)?, path)
    }
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    if is_csv(path) {
        write_atomic(path, format_csv_matrix(m).as_bytes())
    } else {
        write_atomic(path, &encode_matrix(m))
    }
}

fn arch_tag(a: Arch) -> u8 {
    match a {
        Arch::Linear => 0,
        Arch::Mlp2 => 1,
    }
}

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Identity => 0,
        Activation::Relu => 1,
    }
}

pub fn encode_params(p: &EncoderParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(PARAMS_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(arch_tag(p.arch()));
    out.extend_from_slice(&(p.layers().len() as u32).to_le_bytes());
    for (w, &a) in p.layers().iter().zip(p.activations()) {
        out.push(activation_tag(a));
        out.extend_from_slice(&(w.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(w.cols() as u64).to_le_bytes());
    }
    for w in p.layers() {
        push_matrix_data(&mut out, w);
    }
    out
}

pub fn decode_params(bytes: &[u8], path: &Path) -> Result<EncoderParams> {
    let mut c = Cursor {
        bytes,
        pos: 0,
        path,
    };
    c.magic(PARAMS_MAGIC)?;
    c.version()?;
    let at = c.pos;
    let arch = match c.u8("arch tag")? {
        0 => Arch::Linear,
        1 => Arch::Mlp2,
        t => {
            return Err(Error::data(
                path,
                format!("unknown arch tag {t} at byte {at}"),
            ))
        }
    };
    let n_layers = c.u32("layer count")? as usize;
    if n_layers != arch.n_layers() {
        return Err(Error::data(
            path,
            format!(
                "{arch:?} needs {} layers, file declares {n_layers}",
                arch.n_layers()
            ),
        ));
    }
    let mut shapes = Vec::with_capacity(n_layers);
    let mut activations = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let at = c.pos;
        activations.push(match c.u8("activation tag")? {
            0 => Activation::Identity,
            1 => Activation::Relu,
            t => {
                return Err(Error::data(
                    path,
                    format!("unknown activation tag {t} at byte {at}"),
                ))
            }
        });
        shapes.push((c.dim("row count")?, c.dim("column count")?));
    }
    let layers = shapes
        .into_iter()
        .map(|(r, k)| c.f64s(r, k))
        .collect::<Result<Vec<_>>>()?;
    c.finish()?;
    EncoderParams::new(arch, layers, activations).map_err(|e| Error::data(path, e.to_string()))
}

/// Human-readable description written next to a parameter file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsSidecar {
    pub arch: Arch,
    pub input_dim: usize,
    pub hidden_dim: Option<usize>,
    pub output_dim: usize,
    pub activations: Vec<Activation>,
    pub seed: Option<u64>,
    pub loss: Option<String>,
}

impl ParamsSidecar {
    pub fn describe(p: &EncoderParams, seed: Option<u64>, loss: Option<String>) -> Self {
        Self {
            arch: p.arch(),
            input_dim: p.input_dim(),
            hidden_dim: p.hidden_dim(),
            output_dim: p.output_dim(),
            activations: p.activations().to_vec(),
            seed,
            loss,
        }
    }
}

pub fn sidecar_path(params_path: &Path) -> PathBuf {
    let mut s = params_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_params(path: &Path, p: &EncoderParams, sidecar: &ParamsSidecar) -> Result<()> {
    write_atomic(path, &encode_params(p))?;
    write_json(&sidecar_path(path), sidecar)
}

/// Reads an SCMP file. The sidecar is not needed.
pub fn read_params(path: &Path) -> Result<EncoderParams> {
    decode_params(&read_bytes(path)?, path)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::data(path, e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| {
        Error::data(
            path,
            format!("line {} column {}: {e}", e.line(), e.column()),
        )
    })
}

/// Edge list: one `u v [w]` per line (tabs or spaces), `#` comments. A
/// `# nodes N` header fixes the node count; otherwise `n_nodes` or the
/// largest index plus one is used.
pub fn read_edges(path: &Path, n_nodes: Option<usize>) -> Result<SparseGraph> {
    let text = read_text(path)?;
    let mut header_n = None;
    let mut entries = Vec::new();
    let mut weighted = false;
    let mut line_of = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            if it.next() == Some("nodes") {
                let v = it
                    .next()
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| {
                        Error::data(path, format!("line {}: malformed nodes header", ln + 1))
                    })?;
                header_n = Some(v);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 && toks.len() != 3 {
            return Err(Error::data(
                path,
                format!(
                    "line {}: expected `u v` or `u v w`, found {} fields",
                    ln + 1,
                    toks.len()
                ),
            ));
        }
        let idx = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| Error::data(path, format!("line {}: bad node index {t:?}", ln + 1)))
        };
        let (u, v) = (idx(toks[0])?, idx(toks[1])?);
        let w = match toks.get(2) {
            Some(t) => {
                weighted = true;
                t.parse::<f64>()
                    .ok()
                    .filter(|w| w.is_finite() && *w > 0.0)
                    .ok_or_else(|| {
                        Error::data(path, format!("line {}: bad weight {t:?}", ln + 1))
                    })?
            }
            None => 1.0,
        };
        entries.push((u, v, w));
        line_of.push(ln + 1);
    }
    let max_idx = entries
        .iter()
        .map(|&(u, v, _)| u.max(v) + 1)
        .max()
        .unwrap_or(0);
    let n = n_nodes.or(header_n).unwrap_or(max_idx);
    if let Some(k) = entries.iter().position(|&(u, v, _)| u >= n || v >= n) {
        let (u, v, _) = entries[k];
        return Err(Error::data(
            path,
            format!(
                "line {}: edge ({u}, {v}) references a node >= {n}",
                line_of[k]
            ),
        ));
    }
    if weighted {
        let sym: Vec<_> = entries
            .iter()
            .filter(|&&(u, v, _)| u != v)
            .flat_map(|&(u, v, w)| [(u, v, w), (v, u, w)])
            .collect();
        SparseGraph::from_entries(n, sym, false).map_err(|e| Error::data(path, e.to_string()))
    } else {
        let pairs: Vec<_> = entries.iter().map(|&(u, v, _)| (u, v)).collect();
        SparseGraph::from_edges(n, &pairs, DedupPolicy::default())
            .map_err(|e| Error::data(path, e.to_string()))
    }
}

/// Writes each undirected edge once, `u < v`, with a `# nodes N` header.
pub fn write_edges(path: &Path, g: &SparseGraph) -> Result<()> {
    let mut s = format!("# nodes {}\n", g.n());
    for (u, v, w) in g.edges() {
        if g.is_weighted() {
            s.push_str(&format!("{u}\t{v}\t{w:?}\n"));
        } else {
            s.push_str(&format!("{u}\t{v}\n"));
        }
    }
    write_atomic(path, s.as_bytes())
}

fn read_usize_lines(path: &Path, what: &str) -> Result<Vec<usize>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(
            t.parse::<usize>()
                .map_err(|_| Error::data(path, format!("line {}: bad {what} {t:?}", ln + 1)))?,
        );
    }
    Ok(out)
}

fn write_usize_lines(path: &Path, values: &[usize]) -> Result<()> {
    let mut s = String::with_capacity(values.len() * 3);
    for v in values {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

/// One class id per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    read_usize_lines(path, "label")
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    write_usize_lines(path, labels)
}

/// One cluster id per line; ids must be contiguous from 0.
pub fn read_partition(path: &Path) -> Result<Partition> {
    let assign = read_usize_lines(path, "cluster id")?;
    let k = assign.iter().max().map_or(0, |m| m + 1);
    Partition::new(assign, k).map_err(|e| Error::data(path, e.to_string()))
}

pub fn write_partition(path: &Path, p: &Partition) -> Result<()> {
    write_usize_lines(path, p.assign())
}

pub fn read_split(path: &Path) -> Result<Split> {
    read_json(path)
}

pub fn write_split(path: &Path, split: &Split) -> Result<()> {
    write_json(path, split)
}

/// Named columns of scalar metrics. Serialized as JSON (an array of objects
/// with keys in column order) or CSV, by extension.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

struct RowRef<'a>(&'a [String], &'a [Value]);

impl Serialize for RowRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<RowRef<'_>> = self.rows.iter().map(|r| RowRef(&self.columns, r)).collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("values are plain JSON");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let cell = |v: &Value| match v {
            Value::String(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        };
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(cell).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

pub fn write_results(path: &Path, table: &ResultTable) -> Result<()> {
    let text = if is_csv(path) {
        table.to_csv()
    } else {
        table.to_json()
    };
    write_atomic(path, text.as_bytes()).map_err(|e| match e {
        Error::Io { path, source } => Error::data(path, format!("cannot write results: {source}")),
        other => other,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&read_bytes(path)?))
}

/// Provenance record written next to every command output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    /// File name → SHA-256 of the inputs.
    pub inputs: BTreeMap<String, String>,
    /// File name → SHA-256 of the outputs.
    pub outputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// SHA-256 over everything above except the timestamps.
    pub digest: String,
}

fn file_key(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn start(command: &str, config: Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0,
            digest: String::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(file_key(path), file_digest(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.insert(file_key(path), file_digest(path)?);
        Ok(())
    }

    pub fn compute_digest(&self) -> String {
        let body = serde_json::json!({
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seed": self.seed,
            "tool_version": self.tool_version,
        });
        sha256_hex(body.to_string().as_bytes())
    }

    /// Stamps the finish time and digest and writes `<primary>.manifest.json`.
    pub fn finish(mut self, primary_output: &Path) -> Result<PathBuf> {
        self.finished_unix = unix_now();
        self.digest = self.compute_digest();
        let mut s = primary_output.as_os_str().to_owned();
        s.push(".manifest.json");
        let path = PathBuf::from(s);
        write_json(&path, &self)?;
        Ok(path)
    }
}
