//! C ABI over `lossless`.
//!
//! Objects are opaque handles created by `ls_*_new` style constructors and
//! released with the matching `ls_*_free`. Every fallible call returns an
//! [`LsStatus`]; on failure [`ls_last_error_message`] describes the error for
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lossless::bounds::{bound_bounded_loss, information_gap, BoundReport};
use lossless::discrete::{
    conditional_mutual_information, excess_risk, DeterministicMap, DiscreteJoint, LossMatrix,
};
use lossless::io::{from_json_str, read_dataset_csv};
use lossless::partition::{run_test, Bandwidth, Dataset, TestConfig, TestOutcome};
use lossless::portfolio::{growth_gap_bound, GrowthReport, MarketModel};
use lossless::synth::{gen_h0, gen_h1, horse_race_market, H0Config, H1Config};
use lossless::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDistribution = 3,
    DimensionMismatch = 4,
    SupportViolation = 5,
    EmptyDataset = 6,
    Parse = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for LsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidDistribution(_) => LsStatus::InvalidDistribution,
            Error::DimensionMismatch(_) => LsStatus::DimensionMismatch,
            Error::SupportViolation { .. } => LsStatus::SupportViolation,
            Error::InvalidArgument(_) | Error::InvalidDataset(_) => LsStatus::InvalidArgument,
            Error::EmptyDataset => LsStatus::EmptyDataset,
            Error::Parse { .. } | Error::Schema { .. } | Error::Json(_) | Error::Csv(_) => LsStatus::Parse,
            Error::Io(_) => LsStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(LsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(LsStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            LsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(LsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Records `(x, y, z)` with `d` x and `d_prime` z coordinates.
pub struct LsDataset(Dataset);

/// Joint pmf of `(Y, X, Z)`.
pub struct LsJoint(DiscreteJoint);

/// Deterministic map `T` on the alphabet of `X`.
pub struct LsMap(DeterministicMap);

/// Square loss matrix.
pub struct LsLoss(LossMatrix);

/// Finite-alphabet market with side information.
pub struct LsMarket(MarketModel);

/// # Safety
/// `values` points to `len` doubles, row-major with `d + 1 + d_prime` per record.
#[no_mangle]
pub unsafe extern "C" fn ls_dataset_new(
    d: usize,
    d_prime: usize,
    values: *const f64,
    len: usize,
    out: *mut *mut LsDataset,
) -> LsStatus {
    guard(|| {
        let values = slice(values, len, "values")?.to_vec();
        put(out, LsDataset(Dataset::new(d, d_prime, values)?))
    })
}

/// Reads a CSV dataset with header `x1,..,xd,y,z1,..,zd'`.
///
/// # Safety
/// `path` is a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ls_dataset_read_csv(path: *const c_char, out: *mut *mut LsDataset) -> LsStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let file = std::fs::File::open(path).map_err(Error::from)?;
        put(out, LsDataset(read_dataset_csv(file, None)?))
    })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_gen_h0(n: usize, seed: u64, out: *mut *mut LsDataset) -> LsStatus {
    guard(|| {
        let cfg = H0Config { n, seed, ..H0Config::default() };
        put(out, LsDataset(gen_h0(&cfg)?))
    })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_gen_h1(n: usize, seed: u64, theta: f64, out: *mut *mut LsDataset) -> LsStatus {
    guard(|| {
        let cfg = H1Config { base: H0Config { n, seed, ..H0Config::default() }, theta };
        put(out, LsDataset(gen_h1(&cfg)?))
    })
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `data` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_dataset_len(data: *const LsDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n())
}

/// # Safety
/// `data` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_dataset_free(data: *mut LsDataset) {
    free(data)
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsTestOutcome {
    pub l_n: f64,
    pub t_n: f64,
    pub m: u64,
    pub m_prime: u64,
    pub m_dprime: u64,
    pub h: f64,
    pub reject: bool,
    pub type1_bound: f64,
}

impl From<TestOutcome> for LsTestOutcome {
    fn from(o: TestOutcome) -> Self {
        Self {
            l_n: o.l_n,
            t_n: o.t_n,
            m: o.m,
            m_prime: o.m_prime,
            m_dprime: o.m_dprime,
            h: o.h,
            reject: o.reject,
            type1_bound: o.type1_bound,
        }
    }
}

/// Runs the partitioning test. A positive `h` fixes the cell side; otherwise
/// `h = n^-delta`.
///
/// # Safety
/// `data` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_test_run(
    data: *const LsDataset,
    c1: f64,
    delta: f64,
    h: f64,
    out: *mut LsTestOutcome,
) -> LsStatus {
    guard(|| {
        let data = deref(data, "data")?;
        let bandwidth = if h > 0.0 { Bandwidth::Fixed(h) } else { Bandwidth::Exponent(delta) };
        let outcome = run_test(&data.0, &TestConfig::new(c1, bandwidth)?)?;
        write(out, outcome.into())
    })
}

/// `probs` holds `ny * nx * nz` entries indexed `(y * nx + x) * nz + z`.
///
/// # Safety
/// `probs` points to `ny * nx * nz` doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_joint_new(
    ny: usize,
    nx: usize,
    nz: usize,
    probs: *const f64,
    out: *mut *mut LsJoint,
) -> LsStatus {
    guard(|| {
        let len = ny
            .checked_mul(nx)
            .and_then(|v| v.checked_mul(nz))
            .ok_or_else(|| Failure(LsStatus::InvalidArgument, "shape overflows".into()))?;
        let probs = slice(probs, len, "probs")?.to_vec();
        put(out, LsJoint(DiscreteJoint::new([ny, nx, nz], probs)?))
    })
}

/// # Safety
/// `joint` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_joint_free(joint: *mut LsJoint) {
    free(joint)
}

/// `I(Y; X | Z)` in nats.
///
/// # Safety
/// `joint` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_joint_cmi(joint: *const LsJoint, out: *mut f64) -> LsStatus {
    guard(|| write(out, conditional_mutual_information(&deref(joint, "joint")?.0)))
}

/// `I(Y; X) - I(Y; Z)` in nats.
///
/// # Safety
/// `joint` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_joint_information_gap(joint: *const LsJoint, out: *mut f64) -> LsStatus {
    guard(|| write(out, information_gap(&deref(joint, "joint")?.0)))
}

/// `table[x]` is `T(x)`, which must lie in `0..n_out`.
///
/// # Safety
/// `table` points to `len` entries.
#[no_mangle]
pub unsafe extern "C" fn ls_map_new(
    table: *const usize,
    len: usize,
    n_out: usize,
    out: *mut *mut LsMap,
) -> LsStatus {
    guard(|| put(out, LsMap(DeterministicMap::new(slice(table, len, "table")?.to_vec(), n_out)?)))
}

/// # Safety
/// `map` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_map_free(map: *mut LsMap) {
    free(map)
}

/// `cost` holds `k * k` entries, row `y` then column `y'`.
///
/// # Safety
/// `cost` points to `k * k` doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_loss_new(k: usize, cost: *const f64, out: *mut *mut LsLoss) -> LsStatus {
    guard(|| {
        let len = k
            .checked_mul(k)
            .ok_or_else(|| Failure(LsStatus::InvalidArgument, "size overflows".into()))?;
        put(out, LsLoss(LossMatrix::new(k, slice(cost, len, "cost")?.to_vec())?))
    })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_loss_zero_one(k: usize, out: *mut *mut LsLoss) -> LsStatus {
    guard(|| put(out, LsLoss(LossMatrix::zero_one(k)?)))
}

/// # Safety
/// `loss` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_loss_free(loss: *mut LsLoss) {
    free(loss)
}

/// Bayes risk given `T(X)` minus Bayes risk given `X`.
///
/// # Safety
/// Handles are live and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_excess_risk(
    joint: *const LsJoint,
    map: *const LsMap,
    loss: *const LsLoss,
    out: *mut f64,
) -> LsStatus {
    guard(|| {
        let v = excess_risk(&deref(joint, "joint")?.0, &deref(map, "map")?.0, &deref(loss, "loss")?.0)?;
        write(out, v)
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsBoundReport {
    pub delta_i: f64,
    pub bound: f64,
    pub excess: f64,
    pub holds: bool,
}

impl From<BoundReport> for LsBoundReport {
    fn from(r: BoundReport) -> Self {
        Self { delta_i: r.delta_i, bound: r.bound, excess: r.excess, holds: r.holds }
    }
}

/// Excess risk against `||l||_inf / sqrt(2) * sqrt(dI)`.
///
/// # Safety
/// Handles are live and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_bound_bounded_loss(
    joint: *const LsJoint,
    map: *const LsMap,
    loss: *const LsLoss,
    out: *mut LsBoundReport,
) -> LsStatus {
    guard(|| {
        let r = bound_bounded_loss(&deref(joint, "joint")?.0, &deref(map, "map")?.0, &deref(loss, "loss")?.0)?;
        write(out, r.into())
    })
}

/// Parses `{"d_a", "returns", "joint", "map"}`.
///
/// # Safety
/// `json` is a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ls_market_from_json(json: *const c_char, out: *mut *mut LsMarket) -> LsStatus {
    guard(|| put(out, LsMarket(from_json_str(c_str(json, "json")?)?)))
}

/// The two-horse doubling race.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_market_horse_race(out: *mut *mut LsMarket) -> LsStatus {
    guard(|| put(out, LsMarket(horse_race_market())))
}

/// # Safety
/// `market` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_market_free(market: *mut LsMarket) {
    free(market)
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsGrowthReport {
    pub w_star: f64,
    pub w_star_x: f64,
    pub w_star_z: f64,
    pub i_rx: f64,
    pub i_rz: f64,
    pub gap: f64,
    pub mi_gap: f64,
    pub holds: bool,
}

impl From<GrowthReport> for LsGrowthReport {
    fn from(r: GrowthReport) -> Self {
        Self {
            w_star: r.w_star,
            w_star_x: r.w_star_x,
            w_star_z: r.w_star_z,
            i_rx: r.i_rx,
            i_rz: r.i_rz,
            gap: r.gap,
            mi_gap: r.mi_gap,
            holds: r.holds,
        }
    }
}

/// # Safety
/// `market` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ls_growth_gap_bound(market: *const LsMarket, out: *mut LsGrowthReport) -> LsStatus {
    guard(|| write(out, growth_gap_bound(&deref(market, "market")?.0)?.into()))
}
