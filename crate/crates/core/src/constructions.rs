//! Explicit line-free sets.
//!
//! All sets use the first coordinate as the layer axis. The residue-based
//! construction is naturally described with layers along the third
//! coordinate and is rotated into that convention after it is built.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{is_prime, Fp, SpaceSpec};
use crate::grid::parse_grid;
use crate::pointset::PointSet;

const FIG70: &str = include_str!("../data/fig70.grid");

/// Names of the bundled reference sets.
pub const REFERENCE_SETS: &[&str] = &["fig70"];

/// The box `[0, p-2]^n`.
pub fn hypercube(p: u32, n: u32) -> Result<PointSet> {
    let space = SpaceSpec::new(p, n)?;
    let mut c = vec![0u32; n as usize];
    let pts: Vec<usize> = (0..space.num_points())
        .filter(|&i| {
            space.coords_into(i, &mut c);
            c.iter().all(|&x| x <= p - 2)
        })
        .collect();
    PointSet::from_indices(space, pts)
}

/// Layer types of [`layered`]: which 2-dimensional layer sits above a given
/// position in the first `n - 2` coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    /// `[0, p-2]^2`, placed at positions in `[0, p-3]^(n-2)`.
    Square,
    /// Square minus the diagonal and the half-rows at `p - 1`, placed at
    /// positions in `[0, p-2]^(n-2)` outside `[0, p-3]^(n-2)`.
    Punctured,
    /// The first `(p-1)/2` diagonal points, placed where exactly one
    /// position coordinate is `p - 1` and the rest lie in `[0, p-3]`.
    Diagonal,
    Empty,
}

/// Layer kind at a position of the first `n - 2` coordinates.
pub fn layer_kind(position: &[u32], p: u32) -> LayerKind {
    let low = |x: u32| x <= p - 3;
    if position.iter().all(|&x| low(x)) {
        LayerKind::Square
    } else if position.iter().all(|&x| x <= p - 2) {
        LayerKind::Punctured
    } else if position.iter().filter(|&&x| x == p - 1).count() == 1
        && position.iter().all(|&x| x == p - 1 || low(x))
    {
        LayerKind::Diagonal
    } else {
        LayerKind::Empty
    }
}

fn layer_contains(kind: LayerKind, u: u32, v: u32, p: u32) -> bool {
    let half = (p - 3) / 2;
    match kind {
        LayerKind::Square => u <= p - 2 && v <= p - 2,
        LayerKind::Punctured => u != v && !(u == p - 1 && v <= half) && !(v == p - 1 && u <= half),
        LayerKind::Diagonal => u == v && u <= half,
        LayerKind::Empty => false,
    }
}

/// The layered set of size `(p-1)^n + (n-2)/2·(p-1)(p-2)^(n-3)`, `n ≥ 3`.
pub fn layered(p: u32, n: u32) -> Result<PointSet> {
    if n < 3 {
        return Err(Error::input(format!(
            "the layered construction needs n >= 3 (got {n}); use hypercube for n <= 2"
        )));
    }
    let space = SpaceSpec::new(p, n)?;
    let m = n as usize - 2;
    let mut c = vec![0u32; n as usize];
    let pts: Vec<usize> = (0..space.num_points())
        .filter(|&i| {
            space.coords_into(i, &mut c);
            layer_contains(layer_kind(&c[..m], p), c[m], c[m + 1], p)
        })
        .collect();
    PointSet::from_indices(space, pts)
}

/// Closed-form size of [`layered`], exact in integers.
pub fn layered_size(p: u64, n: u32) -> u128 {
    assert!(n >= 3);
    let p = p as u128;
    (p - 1).pow(n) + (n as u128 - 2) * (p - 1) / 2 * (p - 2).pow(n - 3)
}

/// Parameters of [`sqrt_construction`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqrtParams {
    pub k: u32,
    pub t: u32,
    pub rows: Vec<u32>,
    pub cols: Vec<u32>,
}

impl SqrtParams {
    pub fn new(p: u32) -> Self {
        let k = isqrt(p as u64) as u32;
        let t = p / k;
        SqrtParams {
            k,
            t,
            rows: (0..k).collect(),
            cols: (1..=t).map(|j| j * k - 1).collect(),
        }
    }
}

pub(crate) fn isqrt(v: u64) -> u64 {
    let mut r = (v as f64).sqrt() as u64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Line-free set in F_p^3 of size `(p-2)(p-1)^2 + p^2 - p + 1 - k - t`,
/// with `k = ⌊√p⌋` and `t = ⌊p/k⌋`.
pub fn sqrt_construction(p: u32) -> Result<PointSet> {
    if p < 5 {
        return Err(Error::input(format!(
            "the square-root construction needs a prime p >= 5 (got {p})"
        )));
    }
    let space = SpaceSpec::new(p, 3)?;
    let params = SqrtParams::new(p);
    let in_k = |x: u32| params.rows.contains(&x);
    let in_t = |x: u32| params.cols.contains(&x);
    let mut c = [0u32; 3];
    let pts: Vec<usize> = (0..space.num_points())
        .filter(|&i| {
            space.coords_into(i, &mut c);
            let [a, u, v] = c;
            if a <= p - 3 {
                u <= p - 2 && v <= p - 2
            } else if a == p - 2 {
                u != v && !((in_k(u) || u == p - 1) && (in_t(v) || v == p - 1))
            } else {
                in_k(u) && in_t(v)
            }
        })
        .collect();
    PointSet::from_indices(space, pts)
}

/// Closed-form size of [`sqrt_construction`].
pub fn sqrt_size(p: u64) -> u64 {
    let params = SqrtParams::new(p as u32);
    (p - 2) * (p - 1) * (p - 1) + p * p - p + 1 - params.k as u64 - params.t as u64
}

/// Nonzero squares mod `p`.
pub fn quadratic_residues(p: u32) -> Result<BTreeSet<u32>> {
    if p == 2 || !is_prime(p as u64) {
        return Err(Error::input(format!("p = {p} must be an odd prime")));
    }
    let p64 = p as u64;
    Ok((1..p as u64).map(|a| (a * a % p64) as u32).collect())
}

/// Line-free set in F_p^3 for primes `p ≡ 7 (mod 24)`, built from the
/// quadratic residues mod `p`.
pub fn qr_construction(p: u32) -> Result<PointSet> {
    if !is_prime(p as u64) || p % 24 != 7 {
        return Err(Error::input(format!(
            "the residue construction needs a prime p ≡ 7 (mod 24) (got {p}, which is {} mod 24)",
            p % 24
        )));
    }
    let space = SpaceSpec::new(p, 3)?;
    let f = Fp::new(p)?;
    let residues: Vec<u32> = quadratic_residues(p)?.into_iter().collect();
    let non_residues: Vec<u32> = (1..p).filter(|x| !residues.contains(x)).collect();
    let half = |x: u32| f.div(x, 2).unwrap();
    let third = |x: u32| f.div(x, 3).unwrap();
    let times = |k: u32, x: u32| f.mul(k % p, x);
    let neg = |x: u32| f.neg(x);

    // Layers are along the last coordinate here.
    let mut set = PointSet::empty(space);
    let mut edit = |pts: &mut dyn Iterator<Item = [u32; 3]>, insert: bool| {
        for pt in pts {
            let idx = space.index_of(&pt);
            if insert {
                set.insert(idx);
            } else {
                set.remove(idx);
            }
        }
    };
    let cube = (1..p).flat_map(|x| (1..p).flat_map(move |y| (1..p).map(move |z| [x, y, z])));
    edit(&mut cube.into_iter(), true);
    let a = residues.clone();
    let b = non_residues.clone();
    edit(&mut a.iter().flat_map(|&a| [[a, 0, a], [0, a, a]]), true);
    edit(
        &mut a.iter().flat_map(|&a| [[a, a, a], [half(a), half(a), a]]),
        false,
    );
    edit(
        &mut b.iter().flat_map(|&b| {
            let t = times(3, b);
            let h = half(t);
            [[h, 0, b], [0, h, b], [t, 0, b], [0, t, b]]
        }),
        true,
    );
    edit(
        &mut b.iter().flat_map(|&b| {
            let h = half(times(3, b));
            [[b, b, b], [h, h, b], [third(b), third(b), b]]
        }),
        false,
    );
    edit(
        &mut b.iter().flat_map(|&b| {
            let t = times(3, b);
            let nh = neg(half(t));
            [[t, nh, b], [nh, t, b]]
        }),
        false,
    );
    edit(&mut b.iter().map(|&b| [b, b, 0]), true);
    edit(
        &mut a
            .iter()
            .flat_map(|&a| [[times(2, a), neg(a), 0], [neg(a), times(2, a), 0]]),
        true,
    );
    // (x, y, z) -> (z, x, y): the residue layers become first-coordinate layers.
    set.permute_coords(&[2, 0, 1])
}

/// A bundled reference set by name.
pub fn load_reference_set(name: &str) -> Result<PointSet> {
    match name {
        "fig70" => Ok(parse_grid(FIG70)?.set),
        other => Err(Error::input(format!(
            "unknown reference set `{other}` (known: {})",
            REFERENCE_SETS.join(", ")
        ))),
    }
}

/// The raw grid text of a bundled reference set.
pub fn reference_grid(name: &str) -> Option<&'static str> {
    (name == "fig70").then_some(FIG70)
}

/// Construction families selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hypercube,
    Layered,
    Sqrt,
    Qr,
    Fig70,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Hypercube,
        Family::Layered,
        Family::Sqrt,
        Family::Qr,
        Family::Fig70,
    ];

    /// Builds the family's set; `n` is ignored by the families that only
    /// exist in dimension 3.
    pub fn build(self, p: u32, n: u32) -> Result<PointSet> {
        match self {
            Family::Hypercube => hypercube(p, n),
            Family::Layered => layered(p, n),
            Family::Sqrt => sqrt_construction(p),
            Family::Qr => qr_construction(p),
            Family::Fig70 => {
                if p != 5 {
                    return Err(Error::input("fig70 lives in F_5^3"));
                }
                load_reference_set("fig70")
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Hypercube => "hypercube",
            Family::Layered => "layered",
            Family::Sqrt => "sqrt",
            Family::Qr => "qr",
            Family::Fig70 => "fig70",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::input(format!("unknown construction family `{s}`")))
    }
}
