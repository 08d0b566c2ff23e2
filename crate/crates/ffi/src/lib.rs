//! C ABI over `structcomp`.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns an [`ScStatus`]; on failure the message is
//! kept per thread and read back with [`sc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use structcomp::encoder::EncoderParams;
use structcomp::graph::DedupPolicy;
use structcomp::io::{self, ParamsSidecar};
use structcomp::partition::{multilevel_partition, PartitionOptions};
use structcomp::training::{self, TrainConfig};
use structcomp::{DenseMatrix, Error, SparseGraph};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    NonFinite = 3,
    Degenerate = 4,
    Data = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

/// Undirected graph.
pub struct ScGraph(SparseGraph);

/// Dense row-major `f64` matrix.
pub struct ScMatrix(DenseMatrix);

/// Trained encoder weights.
pub struct ScParams(EncoderParams);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ScStatus {
    match e {
        Error::InvalidArgument(_) => ScStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => ScStatus::DimensionMismatch,
        Error::NonFinite(_) => ScStatus::NonFinite,
        Error::Degenerate(_) => ScStatus::Degenerate,
        Error::Data { .. } => ScStatus::Data,
        Error::Io { .. } => ScStatus::Io,
    }
}

struct Fail(ScStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ScStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ScStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ScStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            ScStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            ScStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length without
/// the terminator; 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds an undirected graph on `n` nodes from `m` edges `(src[i], dst[i])`.
/// Duplicates collapse and self-loops are dropped.
///
/// # Safety
/// `src` and `dst` must point to `m` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_graph_from_edges(
    n: usize,
    src: *const u32,
    dst: *const u32,
    m: usize,
    out: *mut *mut ScGraph,
) -> ScStatus {
    guard(|| {
        let edges: Vec<(usize, usize)> = if m == 0 {
            Vec::new()
        } else {
            if src.is_null() || dst.is_null() {
                return Err(null("edge array"));
            }
            let (s, d) = (
                std::slice::from_raw_parts(src, m),
                std::slice::from_raw_parts(dst, m),
            );
            s.iter()
                .zip(d)
                .map(|(&a, &b)| (a as usize, b as usize))
                .collect()
        };
        put(
            out,
            ScGraph(SparseGraph::from_edges(n, &edges, DedupPolicy::default())?),
        )
    })
}

/// Reads a whitespace-separated edge list. `n` = 0 infers the node count.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_graph_read(
    path: *const c_char,
    n: usize,
    out: *mut *mut ScGraph,
) -> ScStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        put(out, ScGraph(io::read_edges(&path, (n > 0).then_some(n))?))
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn sc_graph_num_nodes(g: *const ScGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Number of undirected edges, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn sc_graph_num_edges(g: *const ScGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_edges())
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sc_graph_free(g: *mut ScGraph) {
    free(g)
}

/// Copies `rows * cols` row-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut ScMatrix,
) -> ScStatus {
    guard(|| {
        let len = rows.checked_mul(cols).ok_or_else(|| {
            Fail(
                ScStatus::InvalidArgument,
                "matrix size overflows".to_string(),
            )
        })?;
        let values = if len == 0 {
            Vec::new()
        } else if data.is_null() {
            return Err(null("data"));
        } else {
            std::slice::from_raw_parts(data, len).to_vec()
        };
        put(out, ScMatrix(DenseMatrix::from_vec(rows, cols, values)?))
    })
}

/// Reads a matrix file (binary or CSV, chosen by extension).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_matrix_read(path: *const c_char, out: *mut *mut ScMatrix) -> ScStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        put(out, ScMatrix(io::read_matrix(&path)?))
    })
}

/// Writes a matrix file (binary or CSV, chosen by extension).
///
/// # Safety
/// `m` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sc_matrix_write(m: *const ScMatrix, path: *const c_char) -> ScStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        let path = path_arg(path, "path")?;
        Ok(io::write_matrix(&path, &m.0)?)
    })
}

/// Row count, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sc_matrix_rows(m: *const ScMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// Column count, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sc_matrix_cols(m: *const ScMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// Copies the row-major values into `buf`, which must hold exactly
/// `rows * cols` values.
///
/// # Safety
/// `m` must be a live handle; `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn sc_matrix_copy(m: *const ScMatrix, buf: *mut f64, len: usize) -> ScStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        let values = m.0.as_slice();
        if len != values.len() {
            return Err(Fail(
                ScStatus::DimensionMismatch,
                format!("buffer holds {len} values, matrix has {}", values.len()),
            ));
        }
        if len > 0 {
            if buf.is_null() {
                return Err(null("buffer"));
            }
            ptr::copy_nonoverlapping(values.as_ptr(), buf, len);
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sc_matrix_free(m: *mut ScMatrix) {
    free(m)
}

/// Multilevel balanced partition into `k` clusters. Writes one cluster id
/// per node into `assign`, which must hold exactly `n` values.
///
/// # Safety
/// `g` must be a live handle; `assign` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn sc_partition(
    g: *const ScGraph,
    k: usize,
    balance_eps: f64,
    seed: u64,
    assign: *mut u32,
    len: usize,
) -> ScStatus {
    guard(|| {
        let g = deref(g, "graph")?;
        if len != g.0.n() {
            return Err(Fail(
                ScStatus::DimensionMismatch,
                format!("buffer holds {len} values, graph has {} nodes", g.0.n()),
            ));
        }
        if assign.is_null() && len > 0 {
            return Err(null("assign"));
        }
        let opts = PartitionOptions {
            balance_eps,
            seed,
            ..PartitionOptions::default()
        };
        let outcome = multilevel_partition(&g.0, k, &opts)?;
        for (i, &c) in outcome.partition.assign().iter().enumerate() {
            *assign.add(i) = c as u32;
        }
        Ok(())
    })
}

/// Trains an encoder on the compressed graph. `config_json` holds training
/// options as a JSON object; null or empty means all defaults.
///
/// # Safety
/// `g` and `x` must be live handles; `config_json` null or NUL-terminated;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sc_train(
    g: *const ScGraph,
    x: *const ScMatrix,
    config_json: *const c_char,
    out: *mut *mut ScParams,
) -> ScStatus {
    guard(|| {
        let (g, x) = (deref(g, "graph")?, deref(x, "features")?);
        let cfg = if config_json.is_null() {
            TrainConfig::default()
        } else {
            let text = CStr::from_ptr(config_json).to_str().map_err(|_| {
                Fail(
                    ScStatus::InvalidArgument,
                    "config is not valid UTF-8".to_string(),
                )
            })?;
            if text.trim().is_empty() {
                TrainConfig::default()
            } else {
                serde_json::from_str(text)
                    .map_err(|e| Fail(ScStatus::InvalidArgument, format!("config: {e}")))?
            }
        };
        let (params, _) = training::train(&g.0, &x.0, &cfg)?;
        put(out, ScParams(params))
    })
}

/// Embeds every node of the full graph with trained weights.
///
/// # Safety
/// All input handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sc_infer(
    g: *const ScGraph,
    x: *const ScMatrix,
    params: *const ScParams,
    out: *mut *mut ScMatrix,
) -> ScStatus {
    guard(|| {
        let (g, x, p) = (
            deref(g, "graph")?,
            deref(x, "features")?,
            deref(params, "params")?,
        );
        put(out, ScMatrix(training::infer(&g.0, &x.0, &p.0)?))
    })
}

/// Reads weights written by [`sc_params_write`] or the CLI.
///
/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sc_params_read(path: *const c_char, out: *mut *mut ScParams) -> ScStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        put(out, ScParams(io::read_params(&path)?))
    })
}

/// Writes weights plus their JSON sidecar.
///
/// # Safety
/// `p` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sc_params_write(p: *const ScParams, path: *const c_char) -> ScStatus {
    guard(|| {
        let p = deref(p, "params")?;
        let path = path_arg(path, "path")?;
        Ok(io::write_params(
            &path,
            &p.0,
            &ParamsSidecar::describe(&p.0, None, None),
        )?)
    })
}

/// Embedding width produced by the weights, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sc_params_output_dim(p: *const ScParams) -> usize {
    p.as_ref().map_or(0, |p| p.0.output_dim())
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sc_params_free(p: *mut ScParams) {
    free(p)
}
