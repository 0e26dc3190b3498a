//! Arithmetic mod p and the affine geometry of F_p^n.
//!
//! Points are addressed by a dense index `Σ coords[i]·p^i` (coordinate 0
//! least significant). Directions are kept in canonical form, with the
//! first nonzero coordinate equal to 1, and are numbered by the index of
//! their coordinate vector. Lines are numbered by `(direction, base)`,
//! where the base is the point of least index on the line.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of points in a space.
pub const MAX_POINTS: u64 = 1 << 31;

/// Largest number of line/point incidences an [`IncidenceIndex`] may hold.
pub const MAX_INCIDENCES: u64 = 1 << 26;

/// Trial-division primality check.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The prime field F_p with a precomputed inverse table.
#[derive(Clone, Debug)]
pub struct Fp {
    p: u32,
    inv: Vec<u32>,
}

impl Fp {
    const TABLE_LIMIT: u32 = 1 << 16;

    pub fn new(p: u32) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::input(format!("{p} is not prime")));
        }
        let mut field = Fp { p, inv: Vec::new() };
        if p <= Self::TABLE_LIMIT {
            let mut inv = vec![0u32; p as usize];
            for a in 1..p {
                if inv[a as usize] == 0 {
                    let b = field.pow(a, p as u64 - 2);
                    inv[a as usize] = b;
                    inv[b as usize] = a;
                }
            }
            field.inv = inv;
        }
        Ok(field)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, a: i64) -> u32 {
        a.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.p as u64 - b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.sub(0, a)
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(&self, mut a: u32, mut e: u64) -> u32 {
        let mut acc = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u32) -> Option<u32> {
        let a = a % self.p;
        if a == 0 {
            return None;
        }
        if self.inv.is_empty() {
            Some(self.pow(a, self.p as u64 - 2))
        } else {
            Some(self.inv[a as usize])
        }
    }

    /// `a / b` in the field.
    pub fn div(&self, a: u32, b: u32) -> Option<u32> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }
}

/// The ambient space F_p^n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpaceSpec {
    p: u32,
    n: u32,
}

impl SpaceSpec {
    pub fn new(p: u32, n: u32) -> Result<Self> {
        if p < 3 || !is_prime(p as u64) {
            return Err(Error::input(format!("p = {p} must be a prime >= 3")));
        }
        if n < 1 {
            return Err(Error::input("dimension must be at least 1"));
        }
        let size = (p as u64).checked_pow(n);
        match size {
            Some(s) if s <= MAX_POINTS => Ok(SpaceSpec { p, n }),
            _ => Err(Error::Resource(format!(
                "{p}^{n} points exceeds the limit of {MAX_POINTS}"
            ))),
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn field(&self) -> Fp {
        Fp::new(self.p).expect("SpaceSpec holds a prime")
    }

    pub fn num_points(&self) -> usize {
        (self.p as usize).pow(self.n)
    }

    /// Number of canonical directions, `(p^n - 1)/(p - 1)`.
    pub fn num_directions(&self) -> usize {
        (self.num_points() - 1) / (self.p as usize - 1)
    }

    /// Number of lines, `p^(n-1)·(p^n - 1)/(p - 1)`.
    pub fn num_lines(&self) -> usize {
        self.num_points() / self.p as usize * self.num_directions()
    }

    /// Lines through any fixed point.
    pub fn lines_per_point(&self) -> usize {
        self.num_directions()
    }

    pub fn point_index(&self, pt: &Point) -> Result<usize> {
        if pt.0.len() != self.n as usize {
            return Err(Error::input(format!(
                "point has {} coordinates, expected {}",
                pt.0.len(),
                self.n
            )));
        }
        if let Some(c) = pt.0.iter().find(|&&c| c >= self.p) {
            return Err(Error::input(format!(
                "coordinate {c} out of range [0, {}]",
                self.p - 1
            )));
        }
        Ok(self.index_of(&pt.0))
    }

    pub fn index_point(&self, idx: usize) -> Point {
        let mut c = vec![0; self.n as usize];
        self.coords_into(idx, &mut c);
        Point(c)
    }

    /// Index of a reduced coordinate vector.
    #[inline]
    pub fn index_of(&self, coords: &[u32]) -> usize {
        debug_assert_eq!(coords.len(), self.n as usize);
        coords
            .iter()
            .rev()
            .fold(0usize, |acc, &c| acc * self.p as usize + c as usize)
    }

    #[inline]
    pub fn coords_into(&self, mut idx: usize, out: &mut [u32]) {
        let p = self.p as usize;
        for c in out.iter_mut() {
            *c = (idx % p) as u32;
            idx /= p;
        }
    }

    /// All canonical directions ordered by the index of their vector.
    pub fn directions(&self) -> Vec<Direction> {
        let mut out = Vec::with_capacity(self.num_directions());
        let mut c = vec![0u32; self.n as usize];
        for idx in 1..self.num_points() {
            self.coords_into(idx, &mut c);
            if c.iter().find(|&&x| x != 0) == Some(&1) {
                out.push(Direction(c.clone()));
            }
        }
        out
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.p, self.n)
    }
}

/// A point of F_p^n.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point(pub Vec<u32>);

impl Point {
    pub fn new(coords: impl Into<Vec<u32>>) -> Self {
        Point(coords.into())
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

/// A nonzero vector scaled so that its first nonzero coordinate is 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(Vec<u32>);

impl Direction {
    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    /// Position of the leading 1.
    pub fn pivot(&self) -> usize {
        self.0.iter().position(|&x| x != 0).expect("nonzero")
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

fn write_tuple(f: &mut fmt::Formatter<'_>, c: &[u32]) -> fmt::Result {
    write!(f, "(")?;
    for (i, x) in c.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

/// Scales `v` by the inverse of its first nonzero coordinate.
pub fn canonical_direction(v: &[u32], field: &Fp) -> Result<Direction> {
    let lead = v
        .iter()
        .map(|&x| x % field.p())
        .find(|&x| x != 0)
        .ok_or_else(|| Error::input("zero vector has no direction"))?;
    let scale = field.inv(lead).expect("nonzero");
    Ok(Direction(
        v.iter().map(|&x| field.mul(x % field.p(), scale)).collect(),
    ))
}

/// An affine line with canonical base and direction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Line {
    pub base: usize,
    pub dir: Direction,
    pub points: Vec<usize>,
}

/// Indices of `start + i·dir` for `i = 0..p`.
pub fn trace_line(space: &SpaceSpec, start: &[u32], dir: &[u32]) -> Vec<usize> {
    let p = space.p();
    let mut cur = start.to_vec();
    let mut out = Vec::with_capacity(p as usize);
    for _ in 0..p {
        out.push(space.index_of(&cur));
        for (c, &d) in cur.iter_mut().zip(dir) {
            *c = (*c + d) % p;
        }
    }
    out
}

/// Builds the line through `pt` with direction `dir`, normalising the base.
pub fn line_through(space: &SpaceSpec, pt: &[u32], dir: &Direction) -> Line {
    let traced = trace_line(space, pt, dir.coords());
    let shift = traced
        .iter()
        .enumerate()
        .min_by_key(|&(_, &idx)| idx)
        .map(|(i, _)| i)
        .unwrap();
    let mut points = Vec::with_capacity(traced.len());
    points.extend_from_slice(&traced[shift..]);
    points.extend_from_slice(&traced[..shift]);
    Line {
        base: points[0],
        dir: dir.clone(),
        points,
    }
}

/// Calls `f(dir_id, dir, line_points)` for every line, grouped by direction.
/// Within a direction the lines come in order of their representative
/// (the point whose pivot coordinate is zero), not by base.
pub(crate) fn for_each_line(space: &SpaceSpec, mut f: impl FnMut(usize, &Direction, &[usize])) {
    let n = space.n() as usize;
    let p = space.p() as usize;
    let mut rep = vec![0u32; n];
    let mut rest = vec![0u32; n - 1];
    let mut buf = Vec::with_capacity(p);
    for (dir_id, dir) in space.directions().iter().enumerate() {
        let pivot = dir.pivot();
        let d = dir.coords();
        for code in 0..space.num_points() / p {
            let mut c = code;
            for r in rest.iter_mut() {
                *r = (c % p) as u32;
                c /= p;
            }
            let mut k = 0;
            for (i, slot) in rep.iter_mut().enumerate() {
                if i == pivot {
                    *slot = 0;
                } else {
                    *slot = rest[k];
                    k += 1;
                }
            }
            buf.clear();
            let mut cur = rep.clone();
            for _ in 0..p {
                buf.push(space.index_of(&cur));
                for (x, &dx) in cur.iter_mut().zip(d) {
                    *x = (*x + dx) % p as u32;
                }
            }
            f(dir_id, dir, &buf);
        }
    }
}

/// Every line of the space, sorted by `(direction, base)`.
pub fn enumerate_lines(space: &SpaceSpec) -> Vec<Line> {
    let mut out = Vec::with_capacity(space.num_lines());
    let mut group: Vec<Line> = Vec::new();
    let mut current = usize::MAX;
    for_each_line(space, |dir_id, dir, pts| {
        if dir_id != current {
            group.sort_by_key(|l| l.base);
            out.append(&mut group);
            current = dir_id;
        }
        let first = space.index_point(pts[0]);
        group.push(line_through(space, first.coords(), dir));
    });
    group.sort_by_key(|l| l.base);
    out.append(&mut group);
    out
}

/// The hyperplane `{x : normal·x = constant}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Direction,
    pub constant: u32,
}

impl Hyperplane {
    pub fn contains(&self, coords: &[u32], p: u32) -> bool {
        dot(self.normal.coords(), coords, p) == self.constant
    }

    pub fn points(&self, space: &SpaceSpec) -> Vec<usize> {
        let mut c = vec![0; space.n() as usize];
        (0..space.num_points())
            .filter(|&idx| {
                space.coords_into(idx, &mut c);
                self.contains(&c, space.p())
            })
            .collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[u32], b: &[u32], p: u32) -> u32 {
    let s: u64 = a.iter().zip(b).map(|(&x, &y)| x as u64 * y as u64).sum();
    (s % p as u64) as u32
}

/// A normal direction and the `p` parallel hyperplanes sharing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParallelClass {
    pub normal: Direction,
    pub planes: Vec<Hyperplane>,
}

pub fn parallel_classes(space: &SpaceSpec) -> Result<Vec<ParallelClass>> {
    if space.n() < 2 {
        return Err(Error::input("parallel classes of hyperplanes need n >= 2"));
    }
    Ok(space
        .directions()
        .into_iter()
        .map(|normal| ParallelClass {
            planes: (0..space.p())
                .map(|constant| Hyperplane {
                    normal: normal.clone(),
                    constant,
                })
                .collect(),
            normal,
        })
        .collect())
}

/// The `p + 1` planes of F_p^3 containing `line`, ordered by normal.
pub fn planes_of_line(line: &Line, space: &SpaceSpec) -> Result<Vec<Hyperplane>> {
    if space.n() != 3 {
        return Err(Error::UnsupportedDimension {
            what: "planes_of_line",
            got: space.n(),
            need: 3,
        });
    }
    let p = space.p();
    let base = space.index_point(line.base);
    Ok(space
        .directions()
        .into_iter()
        .filter(|u| dot(u.coords(), line.dir.coords(), p) == 0)
        .map(|normal| Hyperplane {
            constant: dot(normal.coords(), base.coords(), p),
            normal,
        })
        .collect())
}

/// Lines, point/line incidences and (for n = 3) line/plane incidences.
#[derive(Debug)]
pub struct IncidenceIndex {
    space: SpaceSpec,
    directions: Vec<Direction>,
    /// Direction id of every nonzero vector index (`u32::MAX` for zero).
    dir_of_vector: Vec<u32>,
    line_dir: Vec<u32>,
    /// `p` point indices per line, starting at the base.
    line_points: Vec<u32>,
    /// `num_directions` line ids per point, indexed by direction id.
    lines_through: Vec<u32>,
    /// `p + 1` plane ids per line; plane id = `normal_id·p + constant`.
    planes_of_line: Option<Vec<u32>>,
}

impl IncidenceIndex {
    pub fn build(space: SpaceSpec) -> Result<Self> {
        let incidences = space.num_lines() as u64 * space.p() as u64;
        if incidences > MAX_INCIDENCES {
            return Err(Error::Resource(format!(
                "incidence index for {space} needs {incidences} incidences, limit is {MAX_INCIDENCES}"
            )));
        }
        let field = space.field();
        let p = space.p() as usize;
        let n_pts = space.num_points();
        let directions = space.directions();
        let nd = directions.len();

        let mut dir_of_vector = vec![u32::MAX; n_pts];
        let mut c = vec![0u32; space.n() as usize];
        let dir_ids: HashMap<&Direction, u32> = directions
            .iter()
            .enumerate()
            .map(|(i, d)| (d, i as u32))
            .collect();
        for (idx, slot) in dir_of_vector.iter_mut().enumerate().skip(1) {
            space.coords_into(idx, &mut c);
            let d = canonical_direction(&c, &field)?;
            *slot = dir_ids[&d];
        }

        let mut line_dir = Vec::with_capacity(space.num_lines());
        let mut line_points = Vec::with_capacity(space.num_lines() * p);
        let mut lines_through = vec![u32::MAX; n_pts * nd];
        for line in enumerate_lines(&space) {
            let id = line_dir.len() as u32;
            let d = dir_ids[&line.dir];
            line_dir.push(d);
            for &pt in &line.points {
                line_points.push(pt as u32);
                lines_through[pt * nd + d as usize] = id;
            }
        }

        let planes_of_line = if space.n() == 3 {
            let mut out = Vec::with_capacity(line_dir.len() * (p + 1));
            for (id, &d) in line_dir.iter().enumerate() {
                let dir = directions[d as usize].coords();
                space.coords_into(line_points[id * p] as usize, &mut c);
                for (nid, normal) in directions.iter().enumerate() {
                    if dot(normal.coords(), dir, space.p()) == 0 {
                        let constant = dot(normal.coords(), &c, space.p());
                        out.push((nid * p) as u32 + constant);
                    }
                }
            }
            Some(out)
        } else {
            None
        };

        Ok(IncidenceIndex {
            space,
            directions,
            dir_of_vector,
            line_dir,
            line_points,
            lines_through,
            planes_of_line,
        })
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn num_lines(&self) -> usize {
        self.line_dir.len()
    }

    pub fn line_points(&self, id: usize) -> &[u32] {
        let p = self.space.p() as usize;
        &self.line_points[id * p..(id + 1) * p]
    }

    pub fn line_direction(&self, id: usize) -> usize {
        self.line_dir[id] as usize
    }

    pub fn line(&self, id: usize) -> Line {
        let points: Vec<usize> = self.line_points(id).iter().map(|&x| x as usize).collect();
        Line {
            base: points[0],
            dir: self.directions[self.line_dir[id] as usize].clone(),
            points,
        }
    }

    /// Line ids through `pt`, one per direction in direction order.
    pub fn lines_through(&self, pt: usize) -> &[u32] {
        let nd = self.directions.len();
        &self.lines_through[pt * nd..(pt + 1) * nd]
    }

    /// Direction id of the canonical form of the vector with index `v`.
    pub fn direction_of_vector(&self, v: usize) -> Option<usize> {
        match self.dir_of_vector[v] {
            u32::MAX => None,
            d => Some(d as usize),
        }
    }

    /// The unique line through two distinct points.
    pub fn pair_line(&self, a: usize, b: usize) -> Option<usize> {
        if a == b {
            return None;
        }
        let n = self.space.n() as usize;
        let p = self.space.p();
        let mut ca = vec![0; n];
        let mut cb = vec![0; n];
        self.space.coords_into(a, &mut ca);
        self.space.coords_into(b, &mut cb);
        let diff: Vec<u32> = cb.iter().zip(&ca).map(|(&y, &x)| (y + p - x) % p).collect();
        let d = self.dir_of_vector[self.space.index_of(&diff)] as usize;
        Some(self.lines_through(a)[d] as usize)
    }

    /// Plane ids containing a line (n = 3 only).
    pub fn planes_of_line(&self, id: usize) -> Option<&[u32]> {
        let k = self.space.p() as usize + 1;
        self.planes_of_line
            .as_ref()
            .map(|v| &v[id * k..(id + 1) * k])
    }

    /// Decodes a plane id into its hyperplane.
    pub fn plane(&self, plane_id: u32) -> Hyperplane {
        let p = self.space.p();
        Hyperplane {
            normal: self.directions[(plane_id / p) as usize].clone(),
            constant: plane_id % p,
        }
    }
}

/// Shared, lazily built incidence index for `space`.
pub fn incidence_index(space: SpaceSpec) -> Result<Arc<IncidenceIndex>> {
    static CACHE: OnceLock<Mutex<HashMap<SpaceSpec, Arc<IncidenceIndex>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(idx) = cache.lock().unwrap().get(&space) {
        return Ok(Arc::clone(idx));
    }
    let built = Arc::new(IncidenceIndex::build(space)?);
    let mut guard = cache.lock().unwrap();
    Ok(Arc::clone(guard.entry(space).or_insert(built)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn sp(p: u32, n: u32) -> SpaceSpec {
        SpaceSpec::new(p, n).unwrap()
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(SpaceSpec::new(4, 2).is_err());
        assert!(SpaceSpec::new(2, 2).is_err());
        assert!(SpaceSpec::new(5, 0).is_err());
        assert!(matches!(SpaceSpec::new(3, 40), Err(Error::Resource(_))));
        assert!(SpaceSpec::new(2147483647, 1).is_ok());
    }

    #[test]
    fn point_index_radix() {
        let s = sp(5, 3);
        assert_eq!(s.point_index(&Point::new([0, 0, 0])).unwrap(), 0);
        assert_eq!(s.point_index(&Point::new([1, 0, 0])).unwrap(), 1);
        assert_eq!(s.point_index(&Point::new([0, 1, 0])).unwrap(), 5);
        assert!(s.point_index(&Point::new([5, 0, 0])).is_err());
        assert!(s.point_index(&Point::new([0, 0])).is_err());
        for idx in 0..s.num_points() {
            assert_eq!(s.point_index(&s.index_point(idx)).unwrap(), idx);
        }
    }

    #[test]
    fn canonical_direction_examples() {
        let f5 = Fp::new(5).unwrap();
        let f7 = Fp::new(7).unwrap();
        assert_eq!(
            canonical_direction(&[2, 4, 0], &f5).unwrap().coords(),
            &[1, 2, 0]
        );
        assert_eq!(
            canonical_direction(&[1, 3, 3], &f7).unwrap().coords(),
            &[1, 3, 3]
        );
        assert_eq!(
            canonical_direction(&[0, 0, 4], &f5).unwrap().coords(),
            &[0, 0, 1]
        );
        assert!(canonical_direction(&[0, 0, 0], &f5).is_err());
    }

    #[test]
    fn canonical_direction_fibers_have_size_p_minus_one() {
        let s = sp(5, 3);
        let f = s.field();
        let mut fibers: HashMap<Direction, usize> = HashMap::new();
        for idx in 1..s.num_points() {
            let v = s.index_point(idx);
            let d = canonical_direction(v.coords(), &f).unwrap();
            assert_eq!(canonical_direction(d.coords(), &f).unwrap(), d);
            *fibers.entry(d).or_default() += 1;
        }
        assert_eq!(fibers.len(), s.num_directions());
        assert!(fibers.values().all(|&c| c == 4));
    }

    #[test]
    fn inverse_table() {
        let f = Fp::new(31).unwrap();
        for a in 1..31 {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
        assert_eq!(f.inv(0), None);
    }

    /// Lines as point sets, obtained by closing every pair of points.
    fn pair_closure_lines(s: &SpaceSpec) -> BTreeSet<Vec<usize>> {
        let n = s.n() as usize;
        let p = s.p();
        let mut out = BTreeSet::new();
        for a in 0..s.num_points() {
            for b in a + 1..s.num_points() {
                let ca = s.index_point(a);
                let cb = s.index_point(b);
                let d: Vec<u32> = (0..n).map(|i| (cb.0[i] + p - ca.0[i]) % p).collect();
                let mut pts: Vec<usize> = (0..p)
                    .map(|t| {
                        let c: Vec<u32> = (0..n).map(|i| (ca.0[i] + t * d[i]) % p).collect();
                        s.index_of(&c)
                    })
                    .collect();
                pts.sort_unstable();
                out.insert(pts);
            }
        }
        out
    }

    #[test]
    fn line_counts_match_pair_closure() {
        for (p, n) in [
            (3, 1),
            (3, 2),
            (3, 3),
            (5, 1),
            (5, 2),
            (5, 3),
            (7, 2),
            (11, 2),
        ] {
            let s = sp(p, n);
            let lines = enumerate_lines(&s);
            assert_eq!(lines.len(), s.num_lines());
            let ours: BTreeSet<Vec<usize>> = lines
                .iter()
                .map(|l| {
                    let mut v = l.points.clone();
                    v.sort_unstable();
                    v
                })
                .collect();
            assert_eq!(ours.len(), lines.len());
            if s.num_points() <= 125 {
                assert_eq!(ours, pair_closure_lines(&s), "{s}");
            }
        }
    }

    #[test]
    fn line_count_examples() {
        assert_eq!(enumerate_lines(&sp(7, 2)).len(), 56);
        assert_eq!(enumerate_lines(&sp(5, 3)).len(), 775);
        assert_eq!(enumerate_lines(&sp(3, 2)).len(), 12);
    }

    #[test]
    fn lines_are_canonical_and_sorted() {
        let s = sp(5, 2);
        let lines = enumerate_lines(&s);
        let f = s.field();
        let key = |l: &Line| (s.index_of(l.dir.coords()), l.base);
        for w in lines.windows(2) {
            assert!(key(&w[0]) < key(&w[1]));
        }
        for l in &lines {
            assert_eq!(l.base, *l.points.iter().min().unwrap());
            assert_eq!(canonical_direction(l.dir.coords(), &f).unwrap(), l.dir);
            let c = s.index_point(l.base);
            for (i, &pt) in l.points.iter().enumerate() {
                let expect: Vec<u32> =
                    c.0.iter()
                        .zip(l.dir.coords())
                        .map(|(&x, &d)| (x + i as u32 * d) % 5)
                        .collect();
                assert_eq!(pt, s.index_of(&expect));
            }
        }
    }

    #[test]
    fn parallel_class_counts() {
        assert_eq!(parallel_classes(&sp(5, 3)).unwrap().len(), 31);
        assert_eq!(parallel_classes(&sp(7, 3)).unwrap().len(), 57);
        assert_eq!(parallel_classes(&sp(5, 2)).unwrap().len(), 6);
        assert!(parallel_classes(&sp(5, 1)).is_err());
    }

    #[test]
    fn parallel_classes_partition_space() {
        let s = sp(5, 3);
        let mut total_planes = 0;
        let mut per_point = vec![0usize; s.num_points()];
        for class in parallel_classes(&s).unwrap() {
            let mut seen = vec![false; s.num_points()];
            for h in &class.planes {
                let pts = h.points(&s);
                assert_eq!(pts.len(), 25);
                for pt in pts {
                    assert!(!seen[pt]);
                    seen[pt] = true;
                    per_point[pt] += 1;
                }
                total_planes += 1;
            }
            assert!(seen.iter().all(|&x| x));
        }
        assert_eq!(total_planes, 5 * (25 + 5 + 1));
        assert!(per_point.iter().all(|&c| c == 31));
    }

    #[test]
    fn planes_of_axis_line() {
        let s = sp(5, 3);
        let line = line_through(&s, &[0, 0, 0], &Direction(vec![1, 0, 0]));
        let planes = planes_of_line(&line, &s).unwrap();
        let normals: Vec<Vec<u32>> = planes.iter().map(|h| h.normal.coords().to_vec()).collect();
        let mut expect = vec![vec![0, 0, 1]];
        expect.extend((0..5).map(|c| vec![0, 1, c]));
        let mut got = normals.clone();
        got.sort();
        expect.sort();
        assert_eq!(got, expect);
        assert!(planes.iter().all(|h| h.constant == 0));
    }

    #[test]
    fn planes_per_line() {
        for (p, want) in [(5, 6), (7, 8)] {
            let s = sp(p, 3);
            let lines = enumerate_lines(&s);
            for l in lines.iter().step_by(37) {
                let planes = planes_of_line(l, &s).unwrap();
                assert_eq!(planes.len(), want);
                for h in &planes {
                    for &pt in &l.points {
                        assert!(h.contains(s.index_point(pt).coords(), p));
                    }
                }
            }
        }
        let l = enumerate_lines(&sp(5, 2)).remove(0);
        assert!(matches!(
            planes_of_line(&l, &sp(5, 2)),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn incidence_index_invariants() {
        for (p, n) in [(3, 2), (5, 1), (5, 2), (5, 3), (7, 2)] {
            let s = sp(p, n);
            let idx = IncidenceIndex::build(s).unwrap();
            assert_eq!(idx.num_lines(), s.num_lines());
            let mut through = vec![0usize; s.num_points()];
            for id in 0..idx.num_lines() {
                for &pt in idx.line_points(id) {
                    through[pt as usize] += 1;
                }
            }
            assert!(through.iter().all(|&c| c == s.lines_per_point()));
            for pt in 0..s.num_points() {
                for &l in idx.lines_through(pt) {
                    assert!(idx.line_points(l as usize).contains(&(pt as u32)));
                }
            }
            for a in 0..s.num_points().min(30) {
                for b in 0..s.num_points() {
                    if a == b {
                        assert_eq!(idx.pair_line(a, b), None);
                        continue;
                    }
                    let l = idx.pair_line(a, b).unwrap();
                    let pts = idx.line_points(l);
                    assert!(pts.contains(&(a as u32)) && pts.contains(&(b as u32)));
                }
            }
        }
    }

    #[test]
    fn incidence_examples() {
        let idx = IncidenceIndex::build(sp(5, 3)).unwrap();
        assert!((0..125).all(|pt| idx.lines_through(pt).len() == 31));
        let idx = IncidenceIndex::build(sp(3, 2)).unwrap();
        assert!((0..9).all(|pt| idx.lines_through(pt).len() == 4));
        let idx = IncidenceIndex::build(sp(5, 1)).unwrap();
        assert_eq!(idx.num_lines(), 1);
        assert_eq!(idx.line_points(0), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn plane_incidences_in_dimension_three() {
        let s = sp(5, 3);
        let idx = IncidenceIndex::build(s).unwrap();
        let mut lines_per_plane: HashMap<u32, usize> = HashMap::new();
        for id in 0..idx.num_lines() {
            let planes = idx.planes_of_line(id).unwrap();
            assert_eq!(planes.len(), 6);
            for &h in planes {
                *lines_per_plane.entry(h).or_default() += 1;
                let plane = idx.plane(h);
                for &pt in idx.line_points(id) {
                    assert!(plane.contains(s.index_point(pt as usize).coords(), 5));
                }
            }
        }
        // 155 planes, 30 lines each.
        assert_eq!(lines_per_plane.len(), 155);
        assert!(lines_per_plane.values().all(|&c| c == 30));
    }

    #[test]
    fn incidence_budget() {
        let big = sp(13, 5);
        match IncidenceIndex::build(big) {
            Err(Error::Resource(msg)) => assert!(msg.contains("limit")),
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn cached_index_is_shared() {
        let a = incidence_index(sp(3, 3)).unwrap();
        let b = incidence_index(sp(3, 3)).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
