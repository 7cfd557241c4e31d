//! C ABI over the sparse retrieval engine.
//!
//! Index handles are opaque pointers created by `sprint_index_open` and
//! released with `sprint_index_close`. Functions return either a status code
//! (`SPRINT_STATUS_OK` on success) or a nullable pointer; on failure
//! `sprint_last_error` yields a message for the current thread. Strings
//! returned by the library must be released with `sprint_string_free`.
//!
//! Search results are returned as JSON text (an array of
//! `{"doc": id, "score": value}` objects) so bindings do not need to manage
//! structured buffers.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use sprint_core::analyzer::{Analyzer, AnalyzerMode};
use sprint_core::dataio;
use sprint_core::error::Error;
use sprint_core::eval;
use sprint_core::index::{self, ImpactIndex};
use sprint_core::repr::QuantizedWeights;
use sprint_core::search::{self, Bm25Params};

/// Status codes returned by fallible functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SprintStatus {
    Ok = 0,
    /// A pointer argument was null or a value argument was out of range.
    InvalidArgument = 1,
    /// The operation failed on file input/output.
    Io = 2,
    /// Input data was malformed or violated an invariant.
    Data = 3,
    /// Unexpected internal failure (including caught panics).
    Internal = 4,
}

/// Opaque handle over a loaded index segment.
pub struct SprintIndex {
    index: ImpactIndex,
    analyzer: Analyzer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<Vec<u8>>) {
    let cstring = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn status_of(err: &Error) -> SprintStatus {
    match err.exit_code() {
        2 => SprintStatus::InvalidArgument,
        3 => SprintStatus::Data,
        _ => SprintStatus::Io,
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn sprint_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}

unsafe fn str_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, SprintStatus> {
    if ptr.is_null() {
        set_last_error(format!("{what} must not be null"));
        return Err(SprintStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error(format!("{what} is not valid UTF-8"));
        SprintStatus::InvalidArgument
    })
}

fn guard<R, F: FnOnce() -> R>(default: R, f: F) -> R {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_last_error("internal panic");
        default
    })
}

fn analyzer_for(index: &ImpactIndex) -> Analyzer {
    let mode = index
        .config()
        .get("analyzer")
        .and_then(|m| m.parse::<AnalyzerMode>().ok())
        .unwrap_or(AnalyzerMode::WhitespaceLower);
    Analyzer::new(mode)
}

/// Opens a segment directory written by the engine (or by
/// `sprint_build_impact_index` / `sprint_build_lexical_index`).
/// Returns null on failure; see `sprint_last_error`.
///
/// # Safety
/// `segment_dir` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sprint_index_open(segment_dir: *const c_char) -> *mut SprintIndex {
    guard(ptr::null_mut(), || {
        let dir = match str_arg(segment_dir, "segment_dir") {
            Ok(s) => s,
            Err(_) => return ptr::null_mut(),
        };
        match index::read_segment(Path::new(dir)) {
            Ok(index) => {
                let analyzer = analyzer_for(&index);
                Box::into_raw(Box::new(SprintIndex { index, analyzer }))
            }
            Err(e) => {
                set_last_error(e.to_string());
                ptr::null_mut()
            }
        }
    })
}

/// Releases an index handle. Null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer returned by `sprint_index_open`, and
/// must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sprint_index_close(handle: *mut SprintIndex) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of documents in the index, or -1 on a null handle.
///
/// # Safety
/// `handle` must be null or a live pointer from `sprint_index_open`.
#[no_mangle]
pub unsafe extern "C" fn sprint_index_num_docs(handle: *const SprintIndex) -> i64 {
    if handle.is_null() {
        set_last_error("handle must not be null");
        return -1;
    }
    (*handle).index.num_docs() as i64
}

/// Number of distinct tokens in the index, or -1 on a null handle.
///
/// # Safety
/// `handle` must be null or a live pointer from `sprint_index_open`.
#[no_mangle]
pub unsafe extern "C" fn sprint_index_vocab_size(handle: *const SprintIndex) -> i64 {
    if handle.is_null() {
        set_last_error("handle must not be null");
        return -1;
    }
    (*handle).index.vocab().len() as i64
}

fn hits_to_json(hits: &[(String, f64)]) -> *mut c_char {
    let rows: Vec<serde_json::Value> = hits
        .iter()
        .map(|(doc, score)| serde_json::json!({"doc": doc, "score": score}))
        .collect();
    match serde_json::to_string(&rows) {
        Ok(json) => match CString::new(json) {
            Ok(cstring) => cstring.into_raw(),
            Err(_) => {
                set_last_error("result contained interior NUL");
                ptr::null_mut()
            }
        },
        Err(e) => {
            set_last_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Top-k integer impact search. `query_json` is a JSON object mapping tokens
/// to positive integer weights, e.g. `{"apple": 2, "pie": 1}`. Returns a JSON
/// array of `{"doc", "score"}` rows (free with `sprint_string_free`) or null
/// on failure.
///
/// # Safety
/// `handle` must be a live pointer from `sprint_index_open`; `query_json`
/// must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sprint_search_impact(
    handle: *const SprintIndex,
    query_json: *const c_char,
    k: u32,
) -> *mut c_char {
    guard(ptr::null_mut(), || {
        if handle.is_null() {
            set_last_error("handle must not be null");
            return ptr::null_mut();
        }
        let query = match str_arg(query_json, "query_json") {
            Ok(s) => s,
            Err(_) => return ptr::null_mut(),
        };
        let entries: BTreeMap<String, u32> = match serde_json::from_str(query) {
            Ok(m) => m,
            Err(e) => {
                set_last_error(format!("query_json: {e}"));
                return ptr::null_mut();
            }
        };
        let vector = match QuantizedWeights::from_entries(entries) {
            Ok(v) => v,
            Err(e) => {
                set_last_error(e.to_string());
                return ptr::null_mut();
            }
        };
        let ranked = search::search_impact(&vector, &(*handle).index, k as usize);
        hits_to_json(&ranked.hits)
    })
}

/// Top-k BM25 search over a lexical segment; the query text is analyzed with
/// the analyzer recorded in the segment. Returns JSON rows as
/// `sprint_search_impact`, or null on failure.
///
/// # Safety
/// `handle` must be a live pointer from `sprint_index_open`; `query_text`
/// must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sprint_search_bm25(
    handle: *const SprintIndex,
    query_text: *const c_char,
    k1: f64,
    b: f64,
    k: u32,
) -> *mut c_char {
    guard(ptr::null_mut(), || {
        if handle.is_null() {
            set_last_error("handle must not be null");
            return ptr::null_mut();
        }
        let text = match str_arg(query_text, "query_text") {
            Ok(s) => s,
            Err(_) => return ptr::null_mut(),
        };
        let params = Bm25Params { k1, b };
        if let Err(e) = params.validate() {
            set_last_error(e.to_string());
            return ptr::null_mut();
        }
        let state = &*handle;
        let ranked = search::search_bm25(text, &state.index, &state.analyzer, &params, k as usize);
        hits_to_json(&ranked.hits)
    })
}

/// Builds an impact index segment from a quantized vector file
/// (JSON Lines: `{"id": ..., "vector": {token: impact}}`).
///
/// # Safety
/// Both arguments must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sprint_build_impact_index(
    vectors_path: *const c_char,
    segment_dir: *const c_char,
) -> SprintStatus {
    guard(SprintStatus::Internal, || {
        let vectors_path = match str_arg(vectors_path, "vectors_path") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        let segment_dir = match str_arg(segment_dir, "segment_dir") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        let result = dataio::read_quantized_vectors(&vectors_path)
            .and_then(|docs| index::build_impact_index(docs, BTreeMap::new()))
            .and_then(|idx| index::write_segment(&idx, &segment_dir));
        match result {
            Ok(()) => SprintStatus::Ok,
            Err(e) => {
                set_last_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Builds a lexical (BM25) segment from a BEIR corpus file.
/// `analyzer_mode`: 0 = whitespace-lower, 1 = english-porter.
///
/// # Safety
/// Both path arguments must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sprint_build_lexical_index(
    corpus_path: *const c_char,
    analyzer_mode: i32,
    segment_dir: *const c_char,
) -> SprintStatus {
    guard(SprintStatus::Internal, || {
        let corpus_path = match str_arg(corpus_path, "corpus_path") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        let segment_dir = match str_arg(segment_dir, "segment_dir") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        let mode = match analyzer_mode {
            0 => AnalyzerMode::WhitespaceLower,
            1 => AnalyzerMode::EnglishPorter,
            other => {
                set_last_error(format!("unknown analyzer_mode {other}"));
                return SprintStatus::InvalidArgument;
            }
        };
        let analyzer = Analyzer::new(mode);
        let result = dataio::read_corpus(&corpus_path).and_then(|corpus| {
            let index = index::build_lexical_index(corpus, &analyzer, BTreeMap::new())?;
            index::write_segment(&index, &segment_dir)
        });
        match result {
            Ok(()) => SprintStatus::Ok,
            Err(e) => {
                set_last_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Scores a TREC run file against a qrels file at cutoff `k`, writing the
/// macro-averaged nDCG, MRR and Recall through the out pointers.
///
/// # Safety
/// Path arguments must be valid NUL-terminated strings; out pointers must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn sprint_evaluate_run(
    run_path: *const c_char,
    qrels_path: *const c_char,
    k: u32,
    out_ndcg: *mut f64,
    out_mrr: *mut f64,
    out_recall: *mut f64,
) -> SprintStatus {
    guard(SprintStatus::Internal, || {
        let run_path = match str_arg(run_path, "run_path") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        let qrels_path = match str_arg(qrels_path, "qrels_path") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        if k == 0 {
            set_last_error("k must be >= 1");
            return SprintStatus::InvalidArgument;
        }
        match eval::evaluate_run(&run_path, &qrels_path, &[k as usize]) {
            Ok(report) => {
                let get = |metric: &str| report.mean(&format!("{metric}@{k}")).unwrap_or(0.0);
                if !out_ndcg.is_null() {
                    *out_ndcg = get("ndcg");
                }
                if !out_mrr.is_null() {
                    *out_mrr = get("mrr");
                }
                if !out_recall.is_null() {
                    *out_recall = get("recall");
                }
                SprintStatus::Ok
            }
            Err(e) => {
                set_last_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer returned by a `sprint_*` function that
/// documents freeing with this function, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sprint_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
