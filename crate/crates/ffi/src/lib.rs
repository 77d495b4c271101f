//! C ABI over the qhlab core.
//!
//! Every call returns a [`QhStatus`]; results go through out-pointers. Handles
//! are opaque and owned by the caller until passed to the matching `_free`.
//! After a non-`Ok` status, [`qh_last_error`] copies the message for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qhlab::ledger::{compute_ledger, c_prime_bound, verify_chain, Ledger, LedgerInput, TowerValue};
use qhlab::mappings::{MapKind, Mapping};
use qhlab::metrics::{j_metric, k_between, k_lower_bound, GraphParams, QHGraph};
use qhlab::space::{Domain, DomainSpec, Point};
use qhlab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    DimensionMismatch = 4,
    PointNotInDomain = 5,
    InvalidDomain = 6,
    InvalidParameter = 7,
    InvalidConstant = 8,
    GraphDisconnected = 9,
    MapInvalid = 10,
    BranchViolation = 11,
    Internal = 98,
    Panic = 99,
}

impl From<&Error> for QhStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::PointNotInDomain(_) | Error::CurveNotInDomain { .. } => QhStatus::PointNotInDomain,
            Error::InvalidDomain(_) | Error::SamplingWindowRequired | Error::EmptySample => QhStatus::InvalidDomain,
            Error::InvalidParameter(_) | Error::DegeneratePair | Error::DegenerateTriple(_) => {
                QhStatus::InvalidParameter
            }
            Error::InvalidConstant(_) | Error::InversionOutOfRange(_) => QhStatus::InvalidConstant,
            Error::GraphDisconnected | Error::VerificationFailed { .. } => QhStatus::GraphDisconnected,
            Error::MapValidation(_) | Error::ImageDomainInvalid(_) => QhStatus::MapInvalid,
            Error::BranchViolation(_) => QhStatus::BranchViolation,
            Error::Json(_) | Error::ConfigInvalid(_) => QhStatus::InvalidJson,
            _ => QhStatus::Internal,
        }
    }
}

/// Domain handle.
pub struct QhDomain {
    domain: Domain,
}

/// Map handle; owns its source and image domains.
pub struct QhMapping {
    mapping: Mapping,
}

/// Computed constants with the inputs they came from.
pub struct QhLedger {
    input: LedgerInput,
    ledger: Ledger,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Fail(QhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(QhStatus::from(&e), e.to_string())
    }
}

type Out<T> = std::result::Result<T, Fail>;

fn guard(f: impl FnOnce() -> Out<()>) -> QhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QhStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside qhlab".into());
            QhStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(QhStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Out<&'a str> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Fail(QhStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn json<T: serde::de::DeserializeOwned>(s: &str, what: &str) -> Out<T> {
    serde_json::from_str(s).map_err(|e| Fail(QhStatus::InvalidJson, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Out<&'a T> {
    h.as_ref().ok_or_else(|| null(what))
}

unsafe fn point(z: *const f64, dim: usize, expect: usize) -> Out<Point> {
    if z.is_null() {
        return Err(null("point"));
    }
    if dim != expect {
        return Err(Fail(QhStatus::DimensionMismatch, format!("point has {dim} coordinates, domain has {expect}")));
    }
    Ok(Point::new(std::slice::from_raw_parts(z, dim))?)
}

unsafe fn put<T>(out: *mut T, v: T) -> Out<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_point(out: *mut f64, p: &Point) -> Out<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    ptr::copy_nonoverlapping(p.coords().as_ptr(), out, p.dim());
    Ok(())
}

/// Copies the calling thread's last error message into `buf`, NUL-terminated
/// and truncated to `len`. Returns the full message length in bytes.
///
/// # Safety
/// `buf` is null or points to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qh_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a domain from its JSON description, e.g.
/// `{"shape": {"kind": "ball", "center": [0, 0], "radius": 1}}`.
///
/// # Safety
/// `spec_json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_from_json(spec_json: *const c_char, out: *mut *mut QhDomain) -> QhStatus {
    guard(|| {
        let spec: DomainSpec = json(text(spec_json, "spec_json")?, "domain spec")?;
        let domain = spec.build()?;
        put(out, Box::into_raw(Box::new(QhDomain { domain })))
    })
}

/// # Safety
/// `domain` is null or came from `qh_domain_from_json` and is not used again.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_free(domain: *mut QhDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// # Safety
/// `domain` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_dimension(domain: *const QhDomain, out: *mut usize) -> QhStatus {
    guard(|| put(out, handle(domain, "domain")?.domain.dimension()))
}

/// # Safety
/// `domain` is a live handle; `z` holds `dim` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_contains(
    domain: *const QhDomain,
    z: *const f64,
    dim: usize,
    out: *mut bool,
) -> QhStatus {
    guard(|| {
        let d = &handle(domain, "domain")?.domain;
        put(out, d.contains(&point(z, dim, d.dimension())?))
    })
}

/// # Safety
/// `domain` is a live handle; `z` holds `dim` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_boundary_distance(
    domain: *const QhDomain,
    z: *const f64,
    dim: usize,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        let d = &handle(domain, "domain")?.domain;
        put(out, d.boundary_distance(&point(z, dim, d.dimension())?)?)
    })
}

/// Distance ratio metric `j`.
///
/// # Safety
/// `domain` is a live handle; `z1`, `z2` hold `dim` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_j_metric(
    domain: *const QhDomain,
    z1: *const f64,
    z2: *const f64,
    dim: usize,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        let d = &handle(domain, "domain")?.domain;
        let n = d.dimension();
        put(out, j_metric(d, &point(z1, dim, n)?, &point(z2, dim, n)?)?)
    })
}

/// Certified lower bound on the quasihyperbolic distance.
///
/// # Safety
/// `domain` is a live handle; `z1`, `z2` hold `dim` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_k_lower(
    domain: *const QhDomain,
    z1: *const f64,
    z2: *const f64,
    dim: usize,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        let d = &handle(domain, "domain")?.domain;
        let n = d.dimension();
        put(out, k_lower_bound(d, &point(z1, dim, n)?, &point(z2, dim, n)?)?)
    })
}

/// Quasihyperbolic distance bracket from a seeded graph at `resolution`.
///
/// # Safety
/// `domain` is a live handle; `z1`, `z2` hold `dim` doubles; `lower` and
/// `upper` are writable.
#[no_mangle]
pub unsafe extern "C" fn qh_k_between(
    domain: *const QhDomain,
    z1: *const f64,
    z2: *const f64,
    dim: usize,
    resolution: f64,
    neighbors: usize,
    seed: u64,
    lower: *mut f64,
    upper: *mut f64,
) -> QhStatus {
    guard(|| {
        let d = &handle(domain, "domain")?.domain;
        let n = d.dimension();
        let (a, b) = (point(z1, dim, n)?, point(z2, dim, n)?);
        if lower.is_null() || upper.is_null() {
            return Err(null("output pointer"));
        }
        let graph = QHGraph::build(d, &GraphParams::new(resolution, neighbors, seed))?;
        let est = k_between(d, &a, &b, &graph)?;
        put(lower, est.k_lower)?;
        put(upper, est.k_upper)
    })
}

/// Validates a map on `source`, e.g. `{"kind": "radial_power", "exponent": 2}`.
///
/// # Safety
/// `source` is a live handle; `kind_json` is a NUL-terminated string; `out`
/// is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_mapping_new(
    source: *const QhDomain,
    kind_json: *const c_char,
    out: *mut *mut QhMapping,
) -> QhStatus {
    guard(|| {
        let d = &handle(source, "source")?.domain;
        let kind: MapKind = json(text(kind_json, "kind_json")?, "map kind")?;
        let mapping = Mapping::new(kind, d)?;
        put(out, Box::into_raw(Box::new(QhMapping { mapping })))
    })
}

/// # Safety
/// `mapping` is null or came from `qh_mapping_new` and is not used again.
#[no_mangle]
pub unsafe extern "C" fn qh_mapping_free(mapping: *mut QhMapping) {
    if !mapping.is_null() {
        drop(Box::from_raw(mapping));
    }
}

/// Image domain of the map as a new domain handle.
///
/// # Safety
/// `mapping` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_mapping_target(mapping: *const QhMapping, out: *mut *mut QhDomain) -> QhStatus {
    guard(|| {
        let domain = handle(mapping, "mapping")?.mapping.target().clone();
        put(out, Box::into_raw(Box::new(QhDomain { domain })))
    })
}

/// Writes `f(z)` into `out`, which holds `dim` doubles.
///
/// # Safety
/// `mapping` is a live handle; `z` and `out` hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn qh_mapping_evaluate(
    mapping: *const QhMapping,
    z: *const f64,
    dim: usize,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        let m = &handle(mapping, "mapping")?.mapping;
        let w = m.evaluate(&point(z, dim, m.source().dimension())?)?;
        put_point(out, &w)
    })
}

/// Writes `f^-1(w)` into `out`, which holds `dim` doubles.
///
/// # Safety
/// `mapping` is a live handle; `w` and `out` hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn qh_mapping_inverse(
    mapping: *const QhMapping,
    w: *const f64,
    dim: usize,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        let m = &handle(mapping, "mapping")?.mapping;
        let z = m.inverse(&point(w, dim, m.target().dimension())?)?;
        put_point(out, &z)
    })
}

/// Computes the constants ledger from a JSON `LedgerInput`.
///
/// # Safety
/// `input_json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_ledger_from_json(input_json: *const c_char, out: *mut *mut QhLedger) -> QhStatus {
    guard(|| {
        let input: LedgerInput = json(text(input_json, "input_json")?, "ledger input")?;
        let ledger = compute_ledger(&input)?;
        put(out, Box::into_raw(Box::new(QhLedger { input, ledger })))
    })
}

/// # Safety
/// `ledger` is null or came from `qh_ledger_from_json` and is not used again.
#[no_mangle]
pub unsafe extern "C" fn qh_ledger_free(ledger: *mut QhLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

fn tower_parts(v: &TowerValue) -> (u32, f64) {
    (v.level(), v.mantissa())
}

/// Tower form of a named member (`b1`, `b2`, `b3`, `vartheta1`, `tau`, `b4`,
/// or `bound` for the uniformity bound). Plain members come back at level 0.
/// An infinite value has mantissa `INFINITY`.
///
/// # Safety
/// `ledger` is a live handle; `name` is a NUL-terminated string; `level`
/// and `mantissa` are writable.
#[no_mangle]
pub unsafe extern "C" fn qh_ledger_member(
    ledger: *const QhLedger,
    name: *const c_char,
    level: *mut u32,
    mantissa: *mut f64,
) -> QhStatus {
    guard(|| {
        let h = handle(ledger, "ledger")?;
        let l = &h.ledger;
        let (lv, m) = match text(name, "name")? {
            "a_prime" => (0, l.a_prime),
            "c_prime" => (0, l.c_prime),
            "vartheta" => (0, l.vartheta),
            "b1" => tower_parts(&l.b1),
            "b2" => tower_parts(&l.b2),
            "b3" => tower_parts(&l.b3),
            "vartheta1" => tower_parts(&l.vartheta1),
            "tau" => tower_parts(&l.tau),
            "b4" => tower_parts(&l.b4),
            "bound" => tower_parts(&c_prime_bound(&h.input)?),
            other => return Err(Fail(QhStatus::InvalidParameter, format!("unknown ledger member `{other}`"))),
        };
        put(level, lv)?;
        put(mantissa, m)
    })
}

/// Writes whether each of the three chain inequalities holds into `out[0..3]`.
///
/// # Safety
/// `ledger` is a live handle; `out` holds 3 writable bools.
#[no_mangle]
pub unsafe extern "C" fn qh_ledger_verify(ledger: *const QhLedger, out: *mut bool) -> QhStatus {
    guard(|| {
        let h = handle(ledger, "ledger")?;
        let verdicts = verify_chain(&h.ledger, &h.input)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        for (i, v) in verdicts.iter().enumerate() {
            out.add(i).write(v.holds);
        }
        Ok(())
    })
}

/// Three-way comparison of two tower values: -1, 0 or 1 in `out`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_tower_compare(
    level_a: u32,
    mantissa_a: f64,
    level_b: u32,
    mantissa_b: f64,
    out: *mut i32,
) -> QhStatus {
    guard(|| {
        let a = TowerValue::new(level_a, mantissa_a)?;
        let b = TowerValue::new(level_b, mantissa_b)?;
        let ord = a.partial_cmp(&b).ok_or_else(|| Fail(QhStatus::InvalidParameter, "unordered values".into()))?;
        put(out, ord as i32)
    })
}
