//! C ABI for the lexshift engine.
//!
//! Embedding sets and stores are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`LexshiftStatus`]; on failure a message describing the error is
//! available from [`lexshift_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lexshift::corpus::{EmbeddingStore, Period, UsageEmbeddingSet};
use lexshift::{eval, hubness, metrics, Error, Matrix};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexshiftStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    DimensionMismatch = 4,
    Domain = 5,
    Io = 6,
    Format = 7,
    Config = 8,
    Panic = 9,
}

/// A validated set of embedding rows (finite values, no zero rows).
pub struct LexshiftSet {
    matrix: Matrix,
}

/// An opened embedding store.
pub struct LexshiftStore {
    store: EmbeddingStore,
    words: Vec<CString>,
}

/// Directional average minimum distances.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LexshiftDirectionalAmd {
    pub a_to_b: f64,
    pub b_to_a: f64,
}

/// Hubness statistics averaged over both directions.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LexshiftHubness {
    pub dominant_share: f64,
    pub unused_share: f64,
    pub avg_load: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

struct Failure(LexshiftStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => LexshiftStatus::Io,
            Error::Format { .. } => LexshiftStatus::Format,
            Error::Validation(_) => LexshiftStatus::Validation,
            Error::DimensionMismatch { .. } => LexshiftStatus::DimensionMismatch,
            Error::Domain(_) | Error::RankExceeded { .. } => LexshiftStatus::Domain,
            Error::Config(_) => LexshiftStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LexshiftStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(LexshiftStatus::InvalidArgument, message.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> LexshiftStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LexshiftStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            LexshiftStatus::Panic
        }
    }
}

unsafe fn set_ref<'a>(set: *const LexshiftSet, what: &str) -> Result<&'a Matrix, Failure> {
    // SAFETY: caller passes NULL or a live handle from `lexshift_set_new`.
    unsafe { set.as_ref() }.map(|s| &s.matrix).ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: checked non-null; caller guarantees it is writable.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees a NUL-terminated string.
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or NULL if it succeeded.
///
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn lexshift_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `rows × dim` row-major floats into a new set.
///
/// # Safety
/// `data` must point to `rows * dim` readable floats and `out` must be
/// writable. The handle written to `out` must be released with
/// [`lexshift_set_free`].
#[no_mangle]
pub unsafe extern "C" fn lexshift_set_new(
    data: *const f32,
    rows: usize,
    dim: usize,
    out: *mut *mut LexshiftSet,
) -> LexshiftStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if data.is_null() {
            return Err(null("data"));
        }
        let len = rows
            .checked_mul(dim)
            .ok_or_else(|| invalid("rows * dim overflows"))?;
        // SAFETY: caller guarantees `len` readable floats.
        let values = unsafe { std::slice::from_raw_parts(data, len) };
        let matrix = Matrix::new(rows, dim, values.iter().map(|&x| f64::from(x)).collect())?;
        let set = UsageEmbeddingSet::new("<ffi>", Period::First, matrix)?;
        let handle = Box::into_raw(Box::new(LexshiftSet {
            matrix: set.into_vectors(),
        }));
        // SAFETY: checked non-null above.
        unsafe { out.write(handle) };
        Ok(())
    })
}

/// Releases a set. NULL is ignored.
///
/// # Safety
/// `set` must be NULL or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lexshift_set_free(set: *mut LexshiftSet) {
    if !set.is_null() {
        // SAFETY: handle was created by `Box::into_raw`.
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Number of rows in `set`, or 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lexshift_set_rows(set: *const LexshiftSet) -> usize {
    // SAFETY: caller contract.
    unsafe { set.as_ref() }.map_or(0, |s| s.matrix.rows())
}

/// Dimension of `set`, or 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lexshift_set_dim(set: *const LexshiftSet) -> usize {
    // SAFETY: caller contract.
    unsafe { set.as_ref() }.map_or(0, |s| s.matrix.cols())
}

unsafe fn pair_score(
    a: *const LexshiftSet,
    b: *const LexshiftSet,
    out: *mut f64,
    f: impl FnOnce(&Matrix, &Matrix) -> lexshift::Result<f64>,
) -> LexshiftStatus {
    guard(|| {
        // SAFETY: caller contract of the exported wrappers.
        let (a, b) = unsafe { (set_ref(a, "a")?, set_ref(b, "b")?) };
        let score = f(a, b)?;
        // SAFETY: as above.
        unsafe { write_out(out, score) }
    })
}

/// Average pairwise cosine distance between two sets.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lexshift_apd(
    a: *const LexshiftSet,
    b: *const LexshiftSet,
    out: *mut f64,
) -> LexshiftStatus {
    // SAFETY: forwarded caller contract.
    unsafe { pair_score(a, b, out, metrics::apd) }
}

/// Cosine distance between the centroids of the unit-length rows.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lexshift_prt(
    a: *const LexshiftSet,
    b: *const LexshiftSet,
    out: *mut f64,
) -> LexshiftStatus {
    // SAFETY: forwarded caller contract.
    unsafe { pair_score(a, b, out, metrics::prt) }
}

/// Symmetric average minimum distance.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lexshift_amd(
    a: *const LexshiftSet,
    b: *const LexshiftSet,
    out: *mut f64,
) -> LexshiftStatus {
    // SAFETY: forwarded caller contract.
    unsafe { pair_score(a, b, out, metrics::amd) }
}

/// Both directional average minimum distances.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lexshift_amd_directional(
    a: *const LexshiftSet,
    b: *const LexshiftSet,
    out: *mut LexshiftDirectionalAmd,
) -> LexshiftStatus {
    guard(|| {
        // SAFETY: caller contract.
        let (a, b) = unsafe { (set_ref(a, "a")?, set_ref(b, "b")?) };
        let d = metrics::amd_directional(a, b)?;
        let value = LexshiftDirectionalAmd {
            a_to_b: d.a_to_b,
            b_to_a: d.b_to_a,
        };
        // SAFETY: caller contract.
        unsafe { write_out(out, value) }
    })
}

/// Matched minimum distance with greedy one-to-one pairing.
///
/// `seed` selects the equal-size subsample when the sets differ in size.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lexshift_samd_greedy(
    a: *const LexshiftSet,
    b: *const LexshiftSet,
    seed: u64,
    out: *mut f64,
) -> LexshiftStatus {
    // SAFETY: forwarded caller contract.
    unsafe { pair_score(a, b, out, |a, b| Ok(metrics::samd_greedy(a, b, seed)?.score)) }
}

/// Matched minimum distance with an optimal one-to-one pairing.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lexshift_samd_hungarian(
    a: *const LexshiftSet,
    b: *const LexshiftSet,
    seed: u64,
    out: *mut f64,
) -> LexshiftStatus {
    // SAFETY: forwarded caller contract.
    unsafe {
        pair_score(a, b, out, |a, b| {
            Ok(metrics::samd_hungarian(a, b, seed)?.score)
        })
    }
}

/// Nearest-neighbour hubness statistics between two sets.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lexshift_hubness(
    a: *const LexshiftSet,
    b: *const LexshiftSet,
    out: *mut LexshiftHubness,
) -> LexshiftStatus {
    guard(|| {
        // SAFETY: caller contract.
        let (a, b) = unsafe { (set_ref(a, "a")?, set_ref(b, "b")?) };
        let h = hubness::hubness_report(a, b)?;
        let value = LexshiftHubness {
            dominant_share: h.dominant_share,
            unused_share: h.unused_share,
            avg_load: h.avg_load,
        };
        // SAFETY: caller contract.
        unsafe { write_out(out, value) }
    })
}

/// Spearman rank correlation of two length-`n` arrays (ties get mean ranks).
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lexshift_spearman(
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> LexshiftStatus {
    guard(|| {
        if x.is_null() {
            return Err(null("x"));
        }
        if y.is_null() {
            return Err(null("y"));
        }
        // SAFETY: caller guarantees `n` readable values behind each pointer.
        let (xs, ys) = unsafe {
            (
                std::slice::from_raw_parts(x, n),
                std::slice::from_raw_parts(y, n),
            )
        };
        let rho = eval::spearman(xs, ys)?;
        // SAFETY: caller contract.
        unsafe { write_out(out, rho) }
    })
}

/// Opens and validates the store rooted at `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable. The handle
/// must be released with [`lexshift_store_free`].
#[no_mangle]
pub unsafe extern "C" fn lexshift_store_open(
    path: *const c_char,
    out: *mut *mut LexshiftStore,
) -> LexshiftStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller contract.
        let path = unsafe { c_str(path, "path")? };
        let store = EmbeddingStore::open(Path::new(path))?;
        let words = store
            .words()
            .map(|w| CString::new(w).map_err(|_| invalid("word contains NUL")))
            .collect::<Result<Vec<_>, _>>()?;
        let handle = Box::into_raw(Box::new(LexshiftStore { store, words }));
        // SAFETY: checked non-null above.
        unsafe { out.write(handle) };
        Ok(())
    })
}

/// Releases a store. NULL is ignored.
///
/// # Safety
/// `store` must be NULL or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lexshift_store_free(store: *mut LexshiftStore) {
    if !store.is_null() {
        // SAFETY: handle was created by `Box::into_raw`.
        drop(unsafe { Box::from_raw(store) });
    }
}

/// Number of words in the store manifest, or 0 for NULL.
///
/// # Safety
/// `store` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lexshift_store_word_count(store: *const LexshiftStore) -> usize {
    // SAFETY: caller contract.
    unsafe { store.as_ref() }.map_or(0, |s| s.words.len())
}

/// Embedding dimension of the store, or 0 for NULL.
///
/// # Safety
/// `store` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lexshift_store_dimension(store: *const LexshiftStore) -> usize {
    // SAFETY: caller contract.
    unsafe { store.as_ref() }.map_or(0, |s| s.store.dimension())
}

/// Word at `index` in manifest order, or NULL when out of range.
///
/// The string is owned by the store and lives as long as the handle.
///
/// # Safety
/// `store` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lexshift_store_word(
    store: *const LexshiftStore,
    index: usize,
) -> *const c_char {
    // SAFETY: caller contract.
    unsafe { store.as_ref() }
        .and_then(|s| s.words.get(index))
        .map_or(ptr::null(), |w| w.as_ptr())
}

/// Loads the usage set of `word` for `period` (1 or 2).
///
/// # Safety
/// `store` must be a live handle, `word` a NUL-terminated string and `out`
/// writable. The returned set must be released with [`lexshift_set_free`].
#[no_mangle]
pub unsafe extern "C" fn lexshift_store_load(
    store: *const LexshiftStore,
    word: *const c_char,
    period: u32,
    out: *mut *mut LexshiftSet,
) -> LexshiftStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller contract.
        let store = unsafe { store.as_ref() }.ok_or_else(|| null("store"))?;
        // SAFETY: caller contract.
        let word = unsafe { c_str(word, "word")? };
        let period = match period {
            1 => Period::First,
            2 => Period::Second,
            p => return Err(invalid(format!("period must be 1 or 2, got {p}"))),
        };
        if !store.store.contains(word) {
            return Err(invalid(format!("word '{word}' is not in the store")));
        }
        let set = store.store.load_set(word, period)?;
        let handle = Box::into_raw(Box::new(LexshiftSet {
            matrix: set.into_vectors(),
        }));
        // SAFETY: checked non-null above.
        unsafe { out.write(handle) };
        Ok(())
    })
}
