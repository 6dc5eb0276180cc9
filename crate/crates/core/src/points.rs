use std::fmt;

/// A set of points in `R^dim` stored row-major in one contiguous buffer.
#[derive(Clone, PartialEq, Default)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        Self { dim, coords: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        Self { dim, coords: Vec::with_capacity(dim * n) }
    }

    /// Builds a point set from a flat row-major buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        assert_eq!(coords.len() % dim, 0, "buffer length is not a multiple of dim");
        Self { dim, coords }
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: impl IntoIterator<Item = R>) -> Self {
        let mut set = Self::new(dim);
        for r in rows {
            set.push(r.as_ref());
        }
        set
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim, "point has wrong dimension");
        self.coords.extend_from_slice(x);
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Returns the subset of rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut out = PointSet::with_capacity(self.dim, indices.len());
        for &i in indices {
            out.push(self.row(i));
        }
        out
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

/// Bit-exact identity of a point, used for caching and de-duplication.
pub fn bit_key(x: &[f64]) -> Box<[u64]> {
    // +0.0 and -0.0 are the same location
    x.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let set = PointSet::from_rows(2, [[0.0, 1.0], [2.0, 3.0]]);
        assert_eq!(set.len(), 2);
        assert_eq!(set.row(1), &[2.0, 3.0]);
        assert_eq!(set.select(&[1, 0]).row(0), &[2.0, 3.0]);
    }

    #[test]
    fn signed_zero_shares_key() {
        assert_eq!(bit_key(&[0.0, 0.5]), bit_key(&[-0.0, 0.5]));
    }
}
