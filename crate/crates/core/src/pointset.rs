//! Dense point sets over F_p^n and the affine maps acting on them.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{Fp, Point, SpaceSpec};

/// Membership bitmap over the points of a space.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PointSet {
    space: SpaceSpec,
    bits: Vec<u64>,
    size: usize,
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointSet")
            .field("space", &self.space)
            .field("size", &self.size)
            .finish()
    }
}

impl PointSet {
    pub fn empty(space: SpaceSpec) -> Self {
        PointSet {
            space,
            bits: vec![0; space.num_points().div_ceil(64)],
            size: 0,
        }
    }

    pub fn full(space: SpaceSpec) -> Self {
        let mut s = Self::empty(space);
        for idx in 0..space.num_points() {
            s.insert(idx);
        }
        s
    }

    pub fn from_indices(
        space: SpaceSpec,
        indices: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut s = Self::empty(space);
        for idx in indices {
            if idx >= space.num_points() {
                return Err(Error::input(format!("point index {idx} out of range")));
            }
            s.insert(idx);
        }
        Ok(s)
    }

    /// Builds a set from coordinate vectors, reducing each coordinate mod p.
    pub fn from_coords<I, C>(space: SpaceSpec, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[i64]>,
    {
        let field = space.field();
        let mut s = Self::empty(space);
        let mut buf = vec![0u32; space.n() as usize];
        for pt in points {
            let pt = pt.as_ref();
            if pt.len() != buf.len() {
                return Err(Error::input(format!(
                    "point has {} coordinates, expected {}",
                    pt.len(),
                    buf.len()
                )));
            }
            for (b, &x) in buf.iter_mut().zip(pt) {
                *b = field.reduce(x);
            }
            s.insert(space.index_of(&buf));
        }
        Ok(s)
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        idx < self.space.num_points() && self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn contains_point(&self, pt: &Point) -> bool {
        self.space
            .point_index(pt)
            .map(|i| self.contains(i))
            .unwrap_or(false)
    }

    /// Returns true if the point was newly added.
    pub fn insert(&mut self, idx: usize) -> bool {
        assert!(idx < self.space.num_points(), "index {idx} out of range");
        let word = &mut self.bits[idx / 64];
        let mask = 1u64 << (idx % 64);
        let fresh = *word & mask == 0;
        *word |= mask;
        self.size += fresh as usize;
        fresh
    }

    /// Returns true if the point was present.
    pub fn remove(&mut self, idx: usize) -> bool {
        if idx >= self.space.num_points() {
            return false;
        }
        let word = &mut self.bits[idx / 64];
        let mask = 1u64 << (idx % 64);
        let present = *word & mask != 0;
        *word &= !mask;
        self.size -= present as usize;
        present
    }

    /// Member indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.iter().map(|i| self.space.index_point(i))
    }

    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        self.same_space(other)?;
        let bits: Vec<u64> = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a | b)
            .collect();
        Ok(Self::from_bits(self.space, bits))
    }

    pub fn difference(&self, other: &PointSet) -> Result<PointSet> {
        self.same_space(other)?;
        let bits: Vec<u64> = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a & !b)
            .collect();
        Ok(Self::from_bits(self.space, bits))
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.space == other.space && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    fn from_bits(space: SpaceSpec, bits: Vec<u64>) -> Self {
        let size = bits.iter().map(|w| w.count_ones() as usize).sum();
        PointSet { space, bits, size }
    }

    fn same_space(&self, other: &PointSet) -> Result<()> {
        if self.space != other.space {
            return Err(Error::input(format!(
                "sets live in different spaces ({} vs {})",
                self.space, other.space
            )));
        }
        Ok(())
    }

    /// The slice at first coordinate `value`, projected onto the remaining
    /// coordinates.
    pub fn layer(&self, value: u32) -> Result<PointSet> {
        let (p, n) = (self.space.p(), self.space.n());
        if n < 2 {
            return Err(Error::input("layers need n >= 2"));
        }
        if value >= p {
            return Err(Error::input(format!("layer value {value} out of range")));
        }
        let sub = SpaceSpec::new(p, n - 1)?;
        let mut out = PointSet::empty(sub);
        for idx in self.iter() {
            if idx % p as usize == value as usize {
                out.insert(idx / p as usize);
            }
        }
        Ok(out)
    }

    /// Reassembles a set from its `p` layers (inverse of [`PointSet::layer`]).
    pub fn from_layers(layers: &[PointSet]) -> Result<PointSet> {
        let first = layers
            .first()
            .ok_or_else(|| Error::input("no layers given"))?;
        let sub = first.space;
        let p = sub.p();
        if layers.len() != p as usize {
            return Err(Error::input(format!(
                "expected {p} layers, got {}",
                layers.len()
            )));
        }
        let space = SpaceSpec::new(p, sub.n() + 1)?;
        let mut out = PointSet::empty(space);
        for (value, layer) in layers.iter().enumerate() {
            layer.same_space(first)?;
            for idx in layer.iter() {
                out.insert(idx * p as usize + value);
            }
        }
        Ok(out)
    }

    /// The Cartesian product, with the coordinates of `self` first.
    pub fn product(&self, other: &PointSet) -> Result<PointSet> {
        if self.space.p() != other.space.p() {
            return Err(Error::input(format!(
                "cannot multiply sets over F_{} and F_{}",
                self.space.p(),
                other.space.p()
            )));
        }
        let space = SpaceSpec::new(self.space.p(), self.space.n() + other.space.n())?;
        let stride = self.space.num_points();
        let mut out = PointSet::empty(space);
        for y in other.iter() {
            for x in self.iter() {
                out.insert(x + stride * y);
            }
        }
        Ok(out)
    }

    /// Image under `x ↦ Mx + v`.
    pub fn apply_affine(&self, map: &AffineMap) -> Result<PointSet> {
        if map.space != self.space {
            return Err(Error::input("affine map acts on a different space"));
        }
        let n = self.space.n() as usize;
        let mut src = vec![0u32; n];
        let mut dst = vec![0u32; n];
        let mut out = PointSet::empty(self.space);
        for idx in self.iter() {
            self.space.coords_into(idx, &mut src);
            map.apply_into(&src, &mut dst);
            out.insert(self.space.index_of(&dst));
        }
        Ok(out)
    }

    /// Relabels coordinates: coordinate `i` of the result is coordinate
    /// `perm[i]` of the source.
    pub fn permute_coords(&self, perm: &[usize]) -> Result<PointSet> {
        let n = self.space.n() as usize;
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::input(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
        let mut src = vec![0u32; n];
        let mut dst = vec![0u32; n];
        let mut out = PointSet::empty(self.space);
        for idx in self.iter() {
            self.space.coords_into(idx, &mut src);
            for (d, &j) in dst.iter_mut().zip(perm) {
                *d = src[j];
            }
            out.insert(self.space.index_of(&dst));
        }
        Ok(out)
    }
}

/// An affine bijection `x ↦ Mx + v` of F_p^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    space: SpaceSpec,
    /// Row-major `n × n`.
    matrix: Vec<u32>,
    shift: Vec<u32>,
}

impl AffineMap {
    pub fn new(space: SpaceSpec, matrix: Vec<Vec<u32>>, shift: Vec<u32>) -> Result<Self> {
        let n = space.n() as usize;
        let p = space.p();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) || shift.len() != n {
            return Err(Error::input(format!(
                "affine map must be {n}x{n} plus a shift of length {n}"
            )));
        }
        let matrix: Vec<u32> = matrix.into_iter().flatten().map(|x| x % p).collect();
        let shift: Vec<u32> = shift.into_iter().map(|x| x % p).collect();
        if determinant(&matrix, n, &space.field()) == 0 {
            return Err(Error::input("matrix is singular mod p"));
        }
        Ok(AffineMap {
            space,
            matrix,
            shift,
        })
    }

    pub fn identity(space: SpaceSpec) -> Self {
        let n = space.n() as usize;
        let mut matrix = vec![0; n * n];
        for i in 0..n {
            matrix[i * n + i] = 1;
        }
        AffineMap {
            space,
            matrix,
            shift: vec![0; n],
        }
    }

    pub fn translation(space: SpaceSpec, shift: Vec<u32>) -> Result<Self> {
        let id = Self::identity(space);
        let rows = id.rows();
        Self::new(space, rows, shift)
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.matrix
            .chunks(self.space.n() as usize)
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn shift(&self) -> &[u32] {
        &self.shift
    }

    pub fn apply_into(&self, x: &[u32], out: &mut [u32]) {
        let n = self.space.n() as usize;
        let p = self.space.p() as u64;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.matrix[i * n..(i + 1) * n];
            let s: u64 = row
                .iter()
                .zip(x)
                .map(|(&a, &b)| a as u64 * b as u64)
                .sum::<u64>()
                + self.shift[i] as u64;
            *o = (s % p) as u32;
        }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &AffineMap) -> Result<AffineMap> {
        if self.space != first.space {
            return Err(Error::input("maps act on different spaces"));
        }
        let n = self.space.n() as usize;
        let p = self.space.p() as u64;
        let mut matrix = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                let s: u64 = (0..n)
                    .map(|k| self.matrix[i * n + k] as u64 * first.matrix[k * n + j] as u64)
                    .sum();
                matrix[i * n + j] = (s % p) as u32;
            }
        }
        let mut shift = vec![0u32; n];
        self.apply_into(&first.shift, &mut shift);
        Ok(AffineMap {
            space: self.space,
            matrix,
            shift,
        })
    }
}

/// Determinant of a row-major `n × n` matrix over F_p.
pub fn determinant(matrix: &[u32], n: usize, field: &Fp) -> u32 {
    let mut m = matrix.to_vec();
    let mut det = 1u32;
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| m[r * n + col] != 0) else {
            return 0;
        };
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
            }
            det = field.neg(det);
        }
        let pv = m[col * n + col];
        det = field.mul(det, pv);
        let inv = field.inv(pv).unwrap();
        for r in col + 1..n {
            let f = field.mul(m[r * n + col], inv);
            if f == 0 {
                continue;
            }
            for j in col..n {
                let v = field.mul(f, m[col * n + j]);
                m[r * n + j] = field.sub(m[r * n + j], v);
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_set(p: u32, n: u32, side: u32) -> PointSet {
        let s = SpaceSpec::new(p, n).unwrap();
        let mut c = vec![0; n as usize];
        let idx = (0..s.num_points()).filter(|&i| {
            s.coords_into(i, &mut c);
            c.iter().all(|&x| x < side)
        });
        PointSet::from_indices(s, idx.collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn insert_remove_and_size() {
        let s = SpaceSpec::new(5, 3).unwrap();
        let mut a = PointSet::empty(s);
        assert!(a.insert(7));
        assert!(!a.insert(7));
        assert!(a.insert(124));
        assert_eq!(a.len(), 2);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![7, 124]);
        assert!(a.remove(7));
        assert!(!a.remove(7));
        assert_eq!(a.len(), 1);
        assert!(PointSet::from_indices(s, [125]).is_err());
    }

    #[test]
    fn layers_of_a_box() {
        let cube = box_set(5, 3, 4);
        assert!(cube.layer(4).unwrap().is_empty());
        assert_eq!(cube.layer(0).unwrap(), box_set(5, 2, 4));
        assert_eq!(cube.layer(0).unwrap().len(), 16);
        assert!(box_set(5, 1, 4).layer(0).is_err());
    }

    #[test]
    fn layers_reassemble() {
        let s = SpaceSpec::new(3, 3).unwrap();
        let set = PointSet::from_indices(s, (0..27).filter(|i| i % 4 != 1)).unwrap();
        let layers: Vec<_> = (0..3).map(|v| set.layer(v).unwrap()).collect();
        assert_eq!(PointSet::from_layers(&layers).unwrap(), set);
    }

    #[test]
    fn product_of_boxes() {
        let a = box_set(5, 2, 4);
        let b = box_set(5, 1, 4);
        let ab = a.product(&b).unwrap();
        assert_eq!(ab, box_set(5, 3, 4));
        assert_eq!(ab.len(), 64);
        let empty = PointSet::empty(SpaceSpec::new(5, 1).unwrap());
        assert!(a.product(&empty).unwrap().is_empty());
        assert!(a.product(&box_set(3, 1, 2)).is_err());
    }

    #[test]
    fn product_coordinates_are_concatenated() {
        let s1 = SpaceSpec::new(5, 1).unwrap();
        let s2 = SpaceSpec::new(5, 2).unwrap();
        let a = PointSet::from_coords(s1, [[2i64]]).unwrap();
        let b = PointSet::from_coords(s2, [[3i64, 4]]).unwrap();
        let ab = a.product(&b).unwrap();
        assert_eq!(ab.points().collect::<Vec<_>>(), vec![Point::new([2, 3, 4])]);
    }

    #[test]
    fn affine_identity_and_singular() {
        let s = SpaceSpec::new(5, 2).unwrap();
        let sq = box_set(5, 2, 4);
        assert_eq!(sq.apply_affine(&AffineMap::identity(s)).unwrap(), sq);
        assert!(AffineMap::new(s, vec![vec![1, 2], vec![2, 4]], vec![0, 0]).is_err());
        let twice = AffineMap::new(s, vec![vec![2, 0], vec![0, 2]], vec![0, 0]).unwrap();
        assert_eq!(sq.apply_affine(&twice).unwrap().len(), 16);
    }

    #[test]
    fn affine_composition() {
        let s = SpaceSpec::new(5, 2).unwrap();
        let f = AffineMap::new(s, vec![vec![1, 2], vec![3, 2]], vec![1, 4]).unwrap();
        let g = AffineMap::new(s, vec![vec![0, 1], vec![1, 1]], vec![2, 0]).unwrap();
        let set = PointSet::from_indices(s, [0, 3, 7, 11, 19, 24]).unwrap();
        let step = set.apply_affine(&f).unwrap().apply_affine(&g).unwrap();
        assert_eq!(set.apply_affine(&g.compose(&f).unwrap()).unwrap(), step);
    }

    #[test]
    fn determinant_small() {
        let f = Fp::new(7).unwrap();
        assert_eq!(determinant(&[1, 2, 3, 4], 2, &f), f.reduce(4 - 6));
        assert_eq!(determinant(&[0, 1, 1, 0], 2, &f), 6);
        assert_eq!(determinant(&[1, 2, 3, 2, 4, 6, 0, 0, 1], 3, &f), 0);
    }

    #[test]
    fn permutation_checks() {
        let cube = box_set(5, 3, 4);
        assert_eq!(cube.permute_coords(&[2, 0, 1]).unwrap(), cube);
        assert!(cube.permute_coords(&[0, 0, 1]).is_err());
        let s = SpaceSpec::new(5, 3).unwrap();
        let one = PointSet::from_coords(s, [[1i64, 2, 3]]).unwrap();
        let moved = one.permute_coords(&[2, 0, 1]).unwrap();
        assert_eq!(moved.points().next().unwrap(), Point::new([3, 1, 2]));
    }
}
