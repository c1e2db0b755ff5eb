//! Rectangles `R(0, c)` of lattice points and integer tables over them.

use crate::error::{Error, Result};

/// The lattice points `{l : 0 <= l <= c}`, enumerated lexicographically
/// (first coordinate most significant).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rect {
    c: Vec<i64>,
    strides: Vec<usize>,
    volume: usize,
}

impl Rect {
    pub fn new(c: Vec<i64>) -> Result<Self> {
        if let Some(x) = c.iter().find(|&&x| x < 0) {
            return Err(Error::Invalid(format!("rectangle corner has negative coordinate {x}")));
        }
        let mut strides = vec![1usize; c.len()];
        let mut volume = 1usize;
        for v in (0..c.len()).rev() {
            strides[v] = volume;
            volume = volume
                .checked_mul(c[v] as usize + 1)
                .ok_or_else(|| Error::ResourceCap("rectangle volume overflows".into()))?;
        }
        Ok(Rect { c, strides, volume })
    }

    pub fn corner(&self) -> &[i64] {
        &self.c
    }

    pub fn rank(&self) -> usize {
        self.c.len()
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn contains(&self, l: &[i64]) -> bool {
        l.len() == self.c.len() && l.iter().zip(&self.c).all(|(&x, &c)| 0 <= x && x <= c)
    }

    pub fn index(&self, l: &[i64]) -> Option<usize> {
        if !self.contains(l) {
            return None;
        }
        Some(l.iter().zip(&self.strides).map(|(&x, &s)| x as usize * s).sum())
    }

    pub fn point(&self, mut idx: usize) -> Vec<i64> {
        let mut l = vec![0; self.c.len()];
        for v in 0..self.c.len() {
            l[v] = (idx / self.strides[v]) as i64;
            idx %= self.strides[v];
        }
        l
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.volume).map(move |i| self.point(i))
    }

    /// Index of `l + E_v`, if it stays inside.
    pub fn step_up(&self, idx: usize, l: &[i64], v: usize) -> Option<usize> {
        (l[v] < self.c[v]).then(|| idx + self.strides[v])
    }

    /// `c - l`.
    pub fn reflect(&self, l: &[i64]) -> Vec<i64> {
        self.c.iter().zip(l).map(|(c, x)| c - x).collect()
    }
}

/// An integer value for every point of a rectangle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    rect: Rect,
    values: Vec<i64>,
}

impl Table {
    pub fn new(rect: Rect, values: Vec<i64>) -> Result<Self> {
        if values.len() != rect.volume() {
            return Err(Error::Invalid(format!(
                "table has {} values, rectangle has {} points",
                values.len(),
                rect.volume()
            )));
        }
        Ok(Table { rect, values })
    }

    pub fn from_fn(rect: Rect, f: impl Fn(&[i64]) -> i64) -> Self {
        let values = rect.points().map(|l| f(&l)).collect();
        Table { rect, values }
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn get(&self, l: &[i64]) -> Option<i64> {
        self.rect.index(l).map(|i| self.values[i])
    }

    /// Value at a point known to be inside; panics otherwise.
    pub fn at(&self, l: &[i64]) -> i64 {
        self.get(l).unwrap_or_else(|| panic!("point {l:?} outside table"))
    }

    pub fn at_index(&self, i: usize) -> i64 {
        self.values[i]
    }

    pub fn min(&self) -> i64 {
        *self.values.iter().min().expect("nonempty table")
    }

    pub fn max(&self) -> i64 {
        *self.values.iter().max().expect("nonempty table")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_indexing() {
        let r = Rect::new(vec![1, 2]).unwrap();
        assert_eq!(r.volume(), 6);
        let pts: Vec<Vec<i64>> = r.points().collect();
        assert_eq!(pts[0], vec![0, 0]);
        assert_eq!(pts[1], vec![0, 1]);
        assert_eq!(pts[3], vec![1, 0]);
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(r.index(p), Some(i));
        }
        assert_eq!(r.index(&[2, 0]), None);
    }

    #[test]
    fn negative_corner_rejected() {
        assert!(Rect::new(vec![1, -1]).is_err());
    }
}
