//! Closed-form lower and upper bounds on `r_k(F_p^n)`, growth rates, and
//! the lower-bound rate table.
//!
//! Irrational quantities are kept exactly as `(a ± √d) / q` and every
//! decimal rendering is rounded in the direction that keeps the bound
//! valid: upper bounds up, lower bounds and rates down.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::certify::{certify, CertifyOptions, Verdict};
use crate::constructions::{self, layered_size, sqrt_size};
use crate::error::{Error, Result};
use crate::geometry::is_prime;
use crate::search::{max_free_exact, SearchConfig};
use crate::VERSION;

/// The real number `(a + sign·√d) / q` with `q > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub a: BigInt,
    pub negative_root: bool,
    pub d: BigUint,
    pub q: BigUint,
}

impl Surd {
    fn scaled_parts(&self, scale: u64) -> (BigInt, BigUint, bool) {
        let s = BigUint::from(scale);
        let r2 = &self.d * &s * &s;
        let r = r2.sqrt();
        let exact = &r * &r == r2;
        (&self.a * BigInt::from(scale), r, exact)
    }

    /// `⌊scale · value⌋`.
    pub fn floor_scaled(&self, scale: u64) -> BigInt {
        let (sa, r, exact) = self.scaled_parts(scale);
        let q = BigInt::from(self.q.clone());
        let x = if self.negative_root {
            let x = sa - BigInt::from(r);
            if exact {
                x
            } else {
                x - 1
            }
        } else {
            sa + BigInt::from(r)
        };
        x.div_floor(&q)
    }

    /// `⌈scale · value⌉`.
    pub fn ceil_scaled(&self, scale: u64) -> BigInt {
        let neg = Surd {
            a: -self.a.clone(),
            negative_root: !self.negative_root,
            d: self.d.clone(),
            q: self.q.clone(),
        };
        -neg.floor_scaled(scale)
    }

    pub fn floor(&self) -> BigInt {
        self.floor_scaled(1)
    }

    pub fn to_f64(&self) -> f64 {
        let root = self.d.to_f64().unwrap_or(f64::INFINITY).sqrt();
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let v = if self.negative_root {
            a - root
        } else {
            a + root
        };
        v / self.q.to_f64().unwrap_or(f64::NAN)
    }

    /// Three-decimal rendering rounded down.
    pub fn decimal_down(&self) -> String {
        thousandths(&self.floor_scaled(1000))
    }

    /// Three-decimal rendering rounded up.
    pub fn decimal_up(&self) -> String {
        thousandths(&self.ceil_scaled(1000))
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.negative_root { '-' } else { '+' };
        write!(f, "({} {} sqrt({}))/{}", self.a, sign, self.d, self.q)
    }
}

fn thousandths(v: &BigInt) -> String {
    let (int, frac) = v.div_mod_floor(&BigInt::from(1000));
    format!("{int}.{:03}", frac)
}

fn check_prime(p: u32) -> Result<()> {
    if p < 3 || !is_prime(p as u64) {
        return Err(Error::input(format!("p = {p} must be an odd prime")));
    }
    Ok(())
}

fn pow(p: u32, n: u32) -> BigUint {
    BigUint::from(p).pow(n)
}

/// The line-count bound `p^n - (p^n - 1)/(p - 1)` and the blocking-set
/// bound `p^n - 2p^{n-1} + 1`.
pub fn upper_simple(p: u32, n: u32) -> Result<(BigUint, BigUint)> {
    check_prime(p)?;
    if n == 0 {
        return Err(Error::input("dimension must be at least 1"));
    }
    let pn = pow(p, n);
    let ap = &pn - (&pn - 1u32) / BigUint::from(p - 1);
    let sziklai = &pn + 1u32 - pow(p, n - 1) * 2u32;
    Ok((ap, sziklai))
}

/// Upper bound on `r_k(F_p^{n+1})` from a bound `r` on `r_k(F_p^n)`,
/// obtained by double counting point pairs on hyperplanes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursiveBound {
    pub root: Surd,
    pub floor: BigInt,
}

pub fn upper_recursive(p: u32, n: u32, k: u32, r: u64) -> Result<RecursiveBound> {
    check_prime(p)?;
    if k < 3 || k > p {
        return Err(Error::input(format!(
            "progression length k = {k} must lie in [3, {p}]"
        )));
    }
    let pn = pow(p, n);
    let r_big = BigUint::from(r);
    if r_big > pn {
        return Err(Error::input(format!("r = {r} exceeds p^n = {pn}")));
    }
    let pn1 = pow(p, n + 1) - 1u32;
    let a = BigInt::from(&pn1 * &r_big * 2u32 + &pn);
    let d = &pn1 * &r_big * (&pn - &r_big) * 4u32 + &pn * &pn;
    let root = Surd {
        a,
        negative_root: true,
        d,
        q: &pn * 2u32,
    };
    let floor = root.floor();
    if floor.is_negative() {
        return Err(Error::Internal("recursive bound is negative".into()));
    }
    Ok(RecursiveBound { root, floor })
}

/// The recursive bound with `r = (p-1)^2`, and the simplified real bound
/// `p^3 - 2p^2 - (√2 - 1)p + 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubicBound {
    pub exact: Surd,
    pub simplified: Surd,
}

pub fn upper_cubic(p: u32) -> Result<CubicBound> {
    let exact = upper_recursive(p, 2, p, ((p - 1) * (p - 1)) as u64)?.root;
    let pi = BigInt::from(p);
    let simplified = Surd {
        a: Pow::pow(&pi, 3u32) - BigInt::from(2) * Pow::pow(&pi, 2u32) + &pi + 2,
        negative_root: true,
        d: BigUint::from(2 * p as u64 * p as u64),
        q: BigUint::one(),
    };
    // exact ≤ simplified: compare on a fine grid with directed rounding.
    let scale = 1_000_000;
    if exact.ceil_scaled(scale) > simplified.floor_scaled(scale) + 1 {
        return Err(Error::Internal(format!(
            "cubic bound ordering fails at p = {p}"
        )));
    }
    Ok(CubicBound { exact, simplified })
}

/// A lower bound `base^n` on a growth rate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    /// Base truncated to three decimals.
    pub base: String,
    pub provenance: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Rate {
    pub fn thousandths(&self) -> u64 {
        self.base.replace('.', "").parse().unwrap_or(0)
    }
}

/// Largest `t` with `t^root ≤ value · 1000^root`.
fn root_thousandths(value: &BigUint, root: u32) -> BigUint {
    (value * BigUint::from(1000u32).pow(root)).nth_root(root)
}

fn render_thousandths(t: &BigUint) -> String {
    thousandths(&BigInt::from(t.clone()))
}

/// `size^{1/n}` rounded down to three decimals.
pub fn alpha_from_set(size: u64, n: u32) -> Result<Rate> {
    if size == 0 || n == 0 {
        return Err(Error::input("size and dimension must be positive"));
    }
    Ok(Rate {
        base: render_thousandths(&root_thousandths(&BigUint::from(size), n)),
        provenance: format!("set of size {size} in dimension {n}"),
        note: None,
    })
}

/// `p^{1/(2p)} (p-1)^{(2p-1)/(2p)}`, the rate of the sunflower-free
/// construction.
pub fn alpha_fgr(p: u32) -> Result<Rate> {
    check_prime(p)?;
    let value = BigUint::from(p) * BigUint::from(p - 1).pow(2 * p - 1);
    Ok(Rate {
        base: render_thousandths(&root_thousandths(&value, 2 * p)),
        provenance: format!("sunflower-free construction, p = {p}"),
        note: Some(format!("valid only in dimensions n >= {}", 2 * p)),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub p: u32,
    pub n: u32,
    pub size: String,
    pub rate: String,
    /// Some smaller dimension has a strictly larger exact rate.
    pub dominated: bool,
}

pub const TABLE_PRIMES: [u32; 5] = [5, 7, 11, 13, 17];
pub const TABLE_DIMS: [u32; 5] = [3, 4, 5, 6, 7];

/// Rates of the layered construction, truncated to three decimals.
pub fn table1() -> Vec<TableEntry> {
    let mut out = Vec::new();
    for &p in &TABLE_PRIMES {
        let sizes: Vec<BigUint> = TABLE_DIMS
            .iter()
            .map(|&n| BigUint::from(layered_size(p as u64, n)))
            .collect();
        for (i, &n) in TABLE_DIMS.iter().enumerate() {
            // size_j^{1/m} > size_i^{1/n}  <=>  size_j^n > size_i^m.
            let dominated =
                (0..i).any(|j| Pow::pow(&sizes[j], n) > Pow::pow(&sizes[i], TABLE_DIMS[j]));
            out.push(TableEntry {
                p,
                n,
                size: sizes[i].to_string(),
                rate: render_thousandths(&root_thousandths(&sizes[i], n)),
                dominated,
            });
        }
    }
    out
}

/// Lower bound entries with their provenance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerEntry {
    pub size: String,
    /// True when the size was counted on an explicitly built set.
    pub constructed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
}

/// Spaces up to this many points are built to count lower bounds.
const BUILD_LIMIT: u64 = 1 << 20;

pub fn lower_closed_forms(
    p: u32,
    n: u32,
) -> Result<(BTreeMap<String, LowerEntry>, BTreeMap<String, String>)> {
    check_prime(p)?;
    let mut lower = BTreeMap::new();
    let mut omitted = BTreeMap::new();
    let small = (p as u64).checked_pow(n).is_some_and(|v| v <= BUILD_LIMIT);
    let entry = |built: Option<usize>, size: u128, formula: Option<String>| -> Result<LowerEntry> {
        if let Some(b) = built {
            if b as u128 != size {
                return Err(Error::Internal(format!(
                    "constructed size {b} differs from {size}"
                )));
            }
        }
        Ok(LowerEntry {
            size: size.to_string(),
            constructed: built.is_some(),
            formula,
        })
    };

    let cube = (p as u128 - 1).pow(n);
    let built = if small {
        Some(constructions::hypercube(p, n)?.len())
    } else {
        None
    };
    lower.insert(
        "hypercube".into(),
        entry(built, cube, Some(format!("(p-1)^n = {cube}")))?,
    );

    if n >= 3 {
        let size = layered_size(p as u64, n);
        let built = if small {
            Some(constructions::layered(p, n)?.len())
        } else {
            None
        };
        lower.insert(
            "layered".into(),
            entry(
                built,
                size,
                Some(format!("(p-1)^n + (n-2)/2 (p-1)(p-2)^(n-3) = {size}")),
            )?,
        );
    } else {
        omitted.insert("layered".into(), "needs n >= 3".into());
    }

    if n == 3 && p >= 5 {
        let size = sqrt_size(p as u64) as u128;
        let built = if small {
            Some(constructions::sqrt_construction(p)?.len())
        } else {
            None
        };
        let formula = Surd {
            a: BigInt::from((p as i64 - 1).pow(3) + p as i64),
            negative_root: true,
            d: BigUint::from(4 * p as u64),
            q: BigUint::one(),
        };
        lower.insert(
            "sqrt".into(),
            entry(
                built,
                size,
                Some(format!(
                    "(p-1)^3 + p - 2 sqrt(p) = {}",
                    formula.decimal_down()
                )),
            )?,
        );
    } else {
        omitted.insert("sqrt".into(), "needs n = 3 and p >= 5".into());
    }

    if n == 3 && p % 24 == 7 {
        let formula = (p as u128 - 1).pow(3) + p as u128 - 1;
        let size = qr_size(p);
        let built = if small {
            Some(constructions::qr_construction(p)?.len())
        } else {
            None
        };
        lower.insert(
            "qr".into(),
            entry(built, size, Some(format!("(p-1)^3 + (p-1) = {formula}")))?,
        );
    } else {
        omitted.insert("qr".into(), "needs n = 3 and p = 7 (mod 24)".into());
    }

    if n == 3 && p == 5 {
        let size = constructions::load_reference_set("fig70")?.len();
        lower.insert(
            "reference-set".into(),
            entry(Some(size), size as u128, None)?,
        );
    } else {
        omitted.insert(
            "reference-set".into(),
            "bundled only for p = 5, n = 3".into(),
        );
    }
    Ok((lower, omitted))
}

/// Best lower bound per dimension `1..=n` using the closed forms and
/// products of sets from smaller dimensions.
fn product_table(p: u32, n: u32) -> Vec<u128> {
    let mut best = vec![1u128; n as usize + 1];
    for d in 1..=n {
        let mut v = (p as u128 - 1).pow(d);
        if d >= 3 {
            v = v.max(closed_form_size(p, d));
        }
        for a in 1..d {
            v = v.max(best[a as usize] * best[(d - a) as usize]);
        }
        best[d as usize] = v;
    }
    best
}

/// Size of the quadratic-residue set. At `p = 7` the residue layers are
/// full squares as well, which adds `(p-1)/2` points to the general count.
fn qr_size(p: u32) -> u128 {
    let base = (p as u128 - 1).pow(3) + p as u128 - 1;
    if p == 7 {
        base + 3
    } else {
        base
    }
}

/// Largest closed-form size in dimension `d ≥ 3`, without building sets.
fn closed_form_size(p: u32, d: u32) -> u128 {
    let mut v = layered_size(p as u64, d);
    if d == 3 {
        if p >= 5 {
            v = v.max(sqrt_size(p as u64) as u128);
        }
        if p % 24 == 7 {
            v = v.max(qr_size(p));
        }
        if p == 5 {
            v = v.max(70);
        }
    }
    v
}

#[derive(Clone, Debug)]
pub struct BoundsOptions {
    /// Try to tighten the n = 3 upper bound with counting certificates.
    pub certify: bool,
    pub certify_options: CertifyOptions,
    pub certify_steps: u32,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        BoundsOptions {
            certify: true,
            certify_options: CertifyOptions {
                max_vectors: Some(2_000_000),
                time_budget: Some(Duration::from_secs(120)),
                ..CertifyOptions::default()
            },
            certify_steps: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpperEntry {
    pub value: String,
    /// Exact real form, when the bound is irrational.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    /// Real value rounded up to three decimals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decimal: Option<String>,
}

impl UpperEntry {
    fn int(v: impl ToString) -> Self {
        UpperEntry {
            value: v.to_string(),
            exact: None,
            decimal: None,
        }
    }

    fn surd(s: &Surd) -> Self {
        UpperEntry {
            value: s.floor().to_string(),
            exact: Some(s.to_string()),
            decimal: Some(s.decimal_up()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub version: String,
    pub p: u32,
    pub n: u32,
    pub k: u32,
    pub lower: BTreeMap<String, LowerEntry>,
    pub upper: BTreeMap<String, UpperEntry>,
    pub rates: BTreeMap<String, Rate>,
    pub omitted: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl BoundsReport {
    pub fn best_lower(&self) -> u128 {
        self.lower
            .values()
            .filter_map(|e| e.size.parse().ok())
            .max()
            .unwrap_or(0)
    }

    pub fn best_upper(&self) -> Option<u128> {
        self.upper
            .values()
            .filter_map(|e| e.value.parse().ok())
            .min()
    }

    /// Aligned text table.
    pub fn render_text(&self) -> String {
        let mut rows: Vec<(String, String, String)> = Vec::new();
        for (name, e) in &self.lower {
            let how = if e.constructed {
                "constructed"
            } else {
                "formula"
            };
            rows.push(("lower".into(), name.clone(), format!("{} ({how})", e.size)));
        }
        for (name, e) in &self.upper {
            let extra = e
                .decimal
                .as_ref()
                .map(|d| format!(" (<= {d})"))
                .unwrap_or_default();
            rows.push(("upper".into(), name.clone(), format!("{}{extra}", e.value)));
        }
        for (name, r) in &self.rates {
            rows.push(("rate".into(), name.clone(), r.base.clone()));
        }
        let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
        let mut out = format!("bounds for r_{}(F_{}^{})\n", self.k, self.p, self.n);
        for (a, b, c) in rows {
            out.push_str(&format!("{a:<w0$}  {b:<w1$}  {c}\n"));
        }
        for (name, why) in &self.omitted {
            out.push_str(&format!("omitted {name}: {why}\n"));
        }
        for note in &self.notes {
            out.push_str(&format!("note: {note}\n"));
        }
        out
    }
}

/// Best known upper bound on `r_k(F_p^d)` for `d < n`, used to chain the
/// recursive bound.
fn chained_upper(p: u32, d: u32, k: u32) -> Result<u64> {
    if d == 1 {
        return if k == p {
            Ok(p as u64 - 1)
        } else {
            let cfg = SearchConfig {
                threads: 1,
                ..SearchConfig::default()
            };
            Ok(max_free_exact(p, 1, k, &cfg)?.size() as u64)
        };
    }
    if d == 2 && k == p {
        return Ok((p as u64 - 1).pow(2));
    }
    let prev = chained_upper(p, d - 1, k)?;
    let rec = upper_recursive(p, d - 1, k, prev)?
        .floor
        .to_u64()
        .unwrap_or(u64::MAX);
    if k == p {
        let (ap, sz) = upper_simple(p, d)?;
        let simple = ap.min(sz).to_u64().unwrap_or(u64::MAX);
        return Ok(rec.min(simple));
    }
    Ok(rec)
}

pub fn bounds_report(p: u32, n: u32, k: u32, opts: &BoundsOptions) -> Result<BoundsReport> {
    check_prime(p)?;
    if n == 0 {
        return Err(Error::input("dimension must be at least 1"));
    }
    if k < 3 || k > p {
        return Err(Error::input(format!(
            "progression length k = {k} must lie in [3, {p}]"
        )));
    }
    let mut notes = Vec::new();
    let mut upper = BTreeMap::new();
    let mut rates = BTreeMap::new();
    let (mut lower, mut omitted) = if k == p {
        lower_closed_forms(p, n)?
    } else {
        let mut lower = BTreeMap::new();
        let cube = (k as u128 - 1).pow(n);
        lower.insert(
            "hypercube".into(),
            LowerEntry {
                size: cube.to_string(),
                constructed: false,
                formula: Some(format!("(k-1)^n = {cube}")),
            },
        );
        let mut omitted = BTreeMap::new();
        omitted.insert(
            "constructions".into(),
            "the line-free constructions need k = p".into(),
        );
        (lower, omitted)
    };

    if k == p {
        let products = product_table(p, n);
        let best_direct = lower
            .values()
            .filter_map(|e| e.size.parse::<u128>().ok())
            .max()
            .unwrap_or(0);
        if products[n as usize] > best_direct {
            lower.insert(
                "product-derived".into(),
                LowerEntry {
                    size: products[n as usize].to_string(),
                    constructed: false,
                    formula: Some("product of best sets in complementary dimensions".into()),
                },
            );
        } else {
            omitted.insert(
                "product-derived".into(),
                "no product beats the direct constructions".into(),
            );
        }

        let (ap, sz) = upper_simple(p, n)?;
        upper.insert("ap".into(), UpperEntry::int(ap));
        upper.insert("sziklai".into(), UpperEntry::int(sz));
    } else {
        omitted.insert("ap".into(), "line-count bounds need k = p".into());
    }

    if n >= 2 {
        let r_prev = chained_upper(p, n - 1, k)?;
        let rec = upper_recursive(p, n - 1, k, r_prev)?;
        // Pairs on hyperplanes: every pair lies on (p^{n-1}-1)/(p-1) of them.
        notes.push(format!(
            "recursive bound from r_{k}(F_{p}^{}) <= {r_prev}; pair incidences s = (p^{}-1)/(p-1) * C(r, 2)",
            n - 1,
            n - 1
        ));
        upper.insert("recursive".into(), UpperEntry::surd(&rec.root));
    } else {
        omitted.insert("recursive".into(), "needs n >= 2".into());
    }

    if n == 3 && k == p {
        let cubic = upper_cubic(p)?;
        upper.insert("cubic".into(), UpperEntry::surd(&cubic.simplified));
        if opts.certify && (p == 5 || p == 7) {
            let start = upper_recursive(p, 2, p, (p as u64 - 1).pow(2))?
                .floor
                .to_u32()
                .unwrap_or(0);
            let mut refuted = None;
            for t in (start.saturating_sub(opts.certify_steps)..=start).rev() {
                let cert = certify(p, t, &opts.certify_options)?;
                if cert.verdict != Verdict::Infeasible {
                    break;
                }
                refuted = Some(t);
            }
            match refuted {
                Some(t) => {
                    upper.insert("certified".into(), UpperEntry::int(t - 1));
                    notes.push(format!(
                        "counting certificate: no line-free set of size {t}"
                    ));
                }
                None => {
                    omitted.insert(
                        "certified".into(),
                        "no certificate found within budget".into(),
                    );
                }
            }
        } else {
            omitted.insert(
                "certified".into(),
                "certificates are run for p in {5, 7} only".into(),
            );
        }
    } else {
        omitted.insert("cubic".into(), "needs n = 3 and k = p".into());
    }

    for (name, e) in &lower {
        let size: u64 = e.size.parse().unwrap_or(0);
        if size > 0 {
            rates.insert(name.clone(), alpha_from_set(size, n)?);
        }
    }
    if k == p {
        rates.insert("fgr".into(), alpha_fgr(p)?);
    }

    let report = BoundsReport {
        version: VERSION.to_string(),
        p,
        n,
        k,
        lower,
        upper,
        rates,
        omitted,
        notes,
    };
    if let Some(u) = report.best_upper() {
        if report.best_lower() > u {
            return Err(Error::Internal(format!(
                "lower bound {} exceeds upper bound {u}",
                report.best_lower()
            )));
        }
    }
    Ok(report)
}
