//! Progression checks, line and plane statistics, and the counting bounds
//! on (p-1)-lines inside a line-free plane.

use num_integer::binomial;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, for_each_line, Direction, Point, SpaceSpec};
use crate::linalg::{scalar, EqualityLp, Sense};
use crate::pointset::PointSet;
use crate::{Rational, VERSION};

/// `k` points `base + i·step·dir`, `i = 0..k`, all inside the tested set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressionWitness {
    pub base: Point,
    pub dir: Direction,
    /// Multiplier of `dir` giving the common difference; 1 when `k = p`.
    pub step: u32,
    pub k: u32,
}

impl ProgressionWitness {
    pub fn points(&self, space: &SpaceSpec) -> Vec<usize> {
        let p = space.p();
        (0..self.k)
            .map(|i| {
                let c: Vec<u32> = self
                    .base
                    .coords()
                    .iter()
                    .zip(self.dir.coords())
                    .map(|(&b, &d)| {
                        ((b as u64 + i as u64 * self.step as u64 * d as u64) % p as u64) as u32
                    })
                    .collect();
                space.index_of(&c)
            })
            .collect()
    }
}

fn check_k(space: &SpaceSpec, k: u32) -> Result<()> {
    if k < 3 || k > space.p() {
        return Err(Error::input(format!(
            "progression length k = {k} must lie in [3, {}]",
            space.p()
        )));
    }
    Ok(())
}

/// The least `k`-progression inside `set`, ordered by (base index,
/// direction index, step), or `None` if the set is `k`-progression-free.
pub fn find_progression(set: &PointSet, k: u32) -> Result<Option<ProgressionWitness>> {
    let space = set.space();
    check_k(&space, k)?;
    if k == space.p() {
        return Ok(find_full_line(set));
    }
    let p = space.p() as u64;
    let dirs = space.directions();
    let n = space.n() as usize;
    let mut base = vec![0u32; n];
    let mut cur = vec![0u32; n];
    for a in set.iter() {
        space.coords_into(a, &mut base);
        for dir in &dirs {
            for step in 1..space.p() {
                let diff: Vec<u64> = dir
                    .coords()
                    .iter()
                    .map(|&d| d as u64 * step as u64 % p)
                    .collect();
                cur.copy_from_slice(&base);
                let mut ok = true;
                for _ in 1..k {
                    for (c, &d) in cur.iter_mut().zip(&diff) {
                        *c = ((*c as u64 + d) % p) as u32;
                    }
                    if !set.contains(space.index_of(&cur)) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    return Ok(Some(ProgressionWitness {
                        base: Point::new(base.clone()),
                        dir: dir.clone(),
                        step,
                        k,
                    }));
                }
            }
        }
    }
    Ok(None)
}

fn find_full_line(set: &PointSet) -> Option<ProgressionWitness> {
    let space = set.space();
    let dirs = space.directions();
    let mut best: Option<(usize, usize)> = None;
    for_each_line(&space, |dir_id, _, pts| {
        if pts.iter().all(|&x| set.contains(x)) {
            let base = *pts.iter().min().unwrap();
            if best.is_none_or(|b| (base, dir_id) < b) {
                best = Some((base, dir_id));
            }
        }
    });
    best.map(|(base, dir_id)| ProgressionWitness {
        base: space.index_point(base),
        dir: dirs[dir_id].clone(),
        step: 1,
        k: space.p(),
    })
}

/// `x[i]` = number of lines meeting the set in exactly `i` points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineProfile {
    pub x: Vec<u64>,
}

impl LineProfile {
    pub fn total(&self) -> u64 {
        self.x.iter().sum()
    }

    /// `Σ i·x_i`.
    pub fn incidences(&self) -> u64 {
        self.x.iter().enumerate().map(|(i, &c)| i as u64 * c).sum()
    }

    /// `Σ C(i,2)·x_i`.
    pub fn pairs(&self) -> u64 {
        self.x
            .iter()
            .enumerate()
            .map(|(i, &c)| binomial(i as u64, 2) * c)
            .sum()
    }
}

pub fn line_profile(set: &PointSet) -> LineProfile {
    let space = set.space();
    let mut x = vec![0u64; space.p() as usize + 1];
    for_each_line(&space, |_, _, pts| {
        x[pts.iter().filter(|&&q| set.contains(q)).count()] += 1;
    });
    LineProfile { x }
}

/// Per parallel class of planes in F_p^3, the sorted plane sizes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneProfile {
    pub classes: Vec<(Direction, Vec<usize>)>,
}

pub fn plane_profile(set: &PointSet) -> Result<PlaneProfile> {
    let space = set.space();
    if space.n() != 3 {
        return Err(Error::UnsupportedDimension {
            what: "plane_profile",
            got: space.n(),
            need: 3,
        });
    }
    let pts: Vec<Point> = set.points().collect();
    let classes = space
        .directions()
        .into_iter()
        .map(|normal| {
            let mut sizes = vec![0usize; space.p() as usize];
            for pt in &pts {
                sizes[dot(normal.coords(), pt.coords(), space.p()) as usize] += 1;
            }
            sizes.sort_unstable();
            (normal, sizes)
        })
        .collect();
    Ok(PlaneProfile { classes })
}

/// Exact range of the number of (p-1)-lines in a line-free plane of F_p^2
/// with `m` points, from the three counting identities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineBounds {
    pub p: u32,
    pub m: u64,
    /// `⌈min⌉` and `⌊max⌋` of the rational optimum.
    pub min: u64,
    pub max: u64,
    pub min_exact: String,
    pub max_exact: String,
}

/// Linear program over `x_0..x_{p-1}` (no full lines):
/// `Σ x_i = p(p+1)`, `Σ i·x_i = (p+1)m`, `Σ C(i,2)·x_i = C(m,2)`.
/// Returns `None` if no nonnegative solution exists.
pub fn lp_line_bounds(p: u32, m: u64) -> Result<Option<LineBounds>> {
    let space = SpaceSpec::new(p, 2)?;
    if m > space.num_points() as u64 {
        return Err(Error::input(format!("m = {m} exceeds p^2 = {}", p * p)));
    }
    let lp = plane_identities::<Rational>(p, m);
    let mut objective = vec![Rational::zero(); p as usize];
    objective[p as usize - 1] = Rational::from_integer(1);
    let (Some(lo), Some(hi)) = (
        lp.optimize(&objective, Sense::Minimize),
        lp.optimize(&objective, Sense::Maximize),
    ) else {
        return Ok(None);
    };
    Ok(Some(LineBounds {
        p,
        m,
        min: lo.value.ceil().to_integer().to_u64().unwrap_or(0),
        max: hi.value.floor().to_integer().to_u64().unwrap_or(0),
        min_exact: lo.value.to_string(),
        max_exact: hi.value.to_string(),
    }))
}

/// The three plane identities as an equality LP over any scalar.
pub fn plane_identities<T: crate::linalg::Scalar>(p: u32, m: u64) -> EqualityLp<T> {
    let vars = p as usize;
    let m = m as i64;
    let p = p as i64;
    EqualityLp::new(vars)
        .constraint(vec![scalar(1); vars], scalar(p * (p + 1)))
        .constraint((0..vars as i64).map(scalar).collect(), scalar((p + 1) * m))
        .constraint(
            (0..vars as i64).map(|i| scalar(i * (i - 1) / 2)).collect(),
            scalar(m * (m - 1) / 2),
        )
}

/// Cap on (p-1)-lines from point degrees: a point of the plane lies on at
/// most `min(p+1, ⌊(m-1)/(p-2)⌋)` of them and each holds `p-1` points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeBound {
    pub cap: u64,
    pub per_point: u64,
    /// False only for the `p = 5, m ∈ {14, 15}` range the argument was
    /// originally stated for.
    pub extrapolated: bool,
}

pub fn degree_line_bound(p: u32, m: u64) -> DegreeBound {
    let p64 = p as u64;
    let per_point = if m == 0 {
        0
    } else {
        ((m - 1) / (p64 - 2)).min(p64 + 1)
    };
    DegreeBound {
        cap: m * per_point / (p64 - 1),
        per_point,
        extrapolated: !(p == 5 && (m == 14 || m == 15)),
    }
}

/// Upper bound on (p-1)-lines from one nonnegative combination of the
/// plane identities: the weights `(i - j)(i - j - 1)/2 ≥ 0` give
/// `C((p-1-j), 2)·x_{p-1} ≤ C(m,2) - j(p+1)m + C(j+1,2)·p(p+1)`.
/// Requires `j ≤ p - 3`.
pub fn quadratic_line_bound(p: u32, m: u64, j: u32) -> Result<u64> {
    if j + 3 > p {
        return Err(Error::input(format!(
            "offset j = {j} must be at most p - 3"
        )));
    }
    let (p, m, j) = (p as i128, m as i128, j as i128);
    let rhs = m * (m - 1) / 2 - j * (p + 1) * m + (j + 1) * j / 2 * p * (p + 1);
    let weight = (p - 1 - j) * (p - 2 - j) / 2;
    Ok(if rhs < 0 { 0 } else { (rhs / weight) as u64 })
}

/// Both sides of the three line-counting identities for a set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `Σ x_i` and the number of lines.
    pub lines: (u64, u64),
    /// `Σ i·x_i` and `|S|·(lines per point)`.
    pub incidences: (u64, u64),
    /// `Σ C(i,2)·x_i` and `C(|S|, 2)`.
    pub pairs: (u64, u64),
}

/// Recomputes the identities from the line profile; a mismatch is an
/// internal error.
pub fn identity_check(set: &PointSet) -> Result<IdentityReport> {
    let space = set.space();
    let prof = line_profile(set);
    let m = set.len() as u64;
    let report = IdentityReport {
        lines: (prof.total(), space.num_lines() as u64),
        incidences: (prof.incidences(), m * space.lines_per_point() as u64),
        pairs: (prof.pairs(), binomial(m, 2)),
    };
    for (name, (l, r)) in [
        ("line count", report.lines),
        ("incidence", report.incidences),
        ("pair", report.pairs),
    ] {
        if l != r {
            return Err(Error::Internal(format!(
                "{name} identity fails: {l} != {r}"
            )));
        }
    }
    Ok(report)
}

/// Machine-readable verification result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    pub p: u32,
    pub n: u32,
    pub k: u32,
    pub size: usize,
    pub free: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
    pub profile: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub base: Vec<u32>,
    pub dir: Vec<u32>,
    pub step: u32,
}

pub fn verify(set: &PointSet, k: u32) -> Result<VerificationReport> {
    let space = set.space();
    let witness = find_progression(set, k)?;
    Ok(VerificationReport {
        version: VERSION.to_string(),
        p: space.p(),
        n: space.n(),
        k,
        size: set.len(),
        free: witness.is_none(),
        witness: witness.map(|w| WitnessJson {
            base: w.base.0.clone(),
            dir: w.dir.coords().to_vec(),
            step: w.step,
        }),
        profile: line_profile(set).x,
    })
}
