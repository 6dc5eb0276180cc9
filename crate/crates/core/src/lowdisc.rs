//! Point generators on the unit hypercube: rank-1 lattices, Sobol' points and
//! randomized Latin hypercube samples.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::design::DistanceMeasure;
use crate::error::{Error, Result};
use crate::fmt::g17;
use crate::points::{euclidean, PointSet};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Greatest prime strictly below `m`.
pub fn largest_prime_below(m: u64) -> Result<u64> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!("no prime below {m}; need m >= 3")));
    }
    let mut k = m - 1;
    while !is_prime(k) {
        k -= 1;
    }
    Ok(k)
}

/// Rank-1 lattice `{frac(j z / N) : j = 0..N-1}` with `N` prime.
#[derive(Debug, Clone)]
pub struct LatticeSet {
    n_points: u64,
    generating_vector: Vec<u64>,
    /// `(j * z_d) mod N`, row-major; point coordinates are these over `N`.
    residues: Vec<u64>,
    points: PointSet,
    min_spacing: f64,
}

impl LatticeSet {
    pub fn n_points(&self) -> u64 {
        self.n_points
    }

    pub fn dim(&self) -> usize {
        self.generating_vector.len()
    }

    pub fn generating_vector(&self) -> &[u64] {
        &self.generating_vector
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// Integer numerators of point `j`; the coordinates are `residue / N`.
    pub fn residues(&self, j: usize) -> &[u64] {
        let p = self.dim();
        &self.residues[j * p..(j + 1) * p]
    }

    /// Minimum pairwise Euclidean distance.
    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    /// Minimum pairwise distance under another measure.
    pub fn min_spacing_under(&self, measure: &DistanceMeasure) -> f64 {
        min_pairwise(&self.points, |a, b| measure.between(a, b))
    }

    /// Length of the shortest nonzero vector of the lattice under `measure`,
    /// i.e. the nearest-neighbour distance of every point when the cube is
    /// wrapped into a torus. Never larger than the open-cube spacing, and
    /// halving it bounds the spacing of midpoint refinements.
    pub fn shortest_vector_under(&self, measure: &DistanceMeasure) -> f64 {
        let n = self.n_points;
        let origin = vec![0.0; self.dim()];
        let mut v = vec![0.0; self.dim()];
        // integer translates have length >= 1 in every measure
        let mut unit = origin.clone();
        unit[0] = 1.0;
        let mut best = measure.between(&unit, &origin);
        for j in 1..n {
            for (d, r) in self.residues(j as usize).iter().enumerate() {
                v[d] = (*r).min(n - r) as f64 / n as f64;
            }
            best = best.min(measure.between(&v, &origin));
        }
        best
    }
}

/// Per-coordinate wrap-around difference `min(|a - b|, 1 - |a - b|)`.
pub fn torus_difference(a: &[f64], b: &[f64], out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        let d = (x - y).abs();
        *o = d.min(1.0 - d);
    }
}

fn min_pairwise(points: &PointSet, dist: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        let a = points.row(i);
        for j in (i + 1)..points.len() {
            let d = dist(a, points.row(j));
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// Product-weight worst-case error kernel of the Korobov space with
/// smoothness 2: `2 pi^2 B_2(x)`, `B_2(x) = x^2 - x + 1/6`.
fn korobov_kernel(x: f64) -> f64 {
    2.0 * std::f64::consts::PI * std::f64::consts::PI * (x * x - x + 1.0 / 6.0)
}

/// Component-by-component construction of the generating vector with unit
/// product weights. `z_1 = 1`; each further component minimizes the squared
/// worst-case error given the earlier ones, ties going to the smaller value.
/// Only `1..=N/2` is searched since `z` and `N - z` give mirrored lattices.
fn cbc_generating_vector(n: u64, dim: usize) -> Vec<u64> {
    let nu = n as usize;
    let kernel: Vec<f64> = (0..nu).map(|r| korobov_kernel(r as f64 / n as f64)).collect();
    let mut z = Vec::with_capacity(dim);
    z.push(1u64);
    if dim == 1 || n == 2 {
        z.resize(dim, 1);
        return z;
    }
    // running product over chosen components, one entry per lattice point
    let mut prod: Vec<f64> = (0..nu).map(|k| 1.0 + kernel[k]).collect();
    for _ in 1..dim {
        let mut best = (f64::INFINITY, 1u64);
        for c in 1..=(n / 2) {
            let mut err = 0.0;
            let mut r = 0u64;
            for p in &prod {
                err += p * (1.0 + kernel[r as usize]);
                r += c;
                if r >= n {
                    r -= n;
                }
            }
            if err < best.0 {
                best = (err, c);
            }
        }
        let c = best.1;
        let mut r = 0u64;
        for p in prod.iter_mut() {
            *p *= 1.0 + kernel[r as usize];
            r += c;
            if r >= n {
                r -= n;
            }
        }
        z.push(c);
    }
    z
}

/// Rank-1 lattice with `n_points` (prime) points in `[0,1)^dim`.
pub fn lattice(n_points: u64, dim: usize) -> Result<LatticeSet> {
    if dim == 0 {
        return Err(Error::InvalidArgument("lattice dimension must be positive".into()));
    }
    if !is_prime(n_points) {
        return Err(Error::InvalidArgument(format!("lattice size {n_points} is not prime; use largest_prime_below")));
    }
    let z = cbc_generating_vector(n_points, dim);
    let n = n_points as usize;
    let mut residues = Vec::with_capacity(n * dim);
    let mut points = PointSet::with_capacity(dim, n);
    let mut row = vec![0.0; dim];
    for j in 0..n_points {
        for (d, &zd) in z.iter().enumerate() {
            let r = (j * zd) % n_points;
            residues.push(r);
            row[d] = r as f64 / n_points as f64;
        }
        points.push(&row);
    }
    let min_spacing = min_pairwise(&points, euclidean);
    Ok(LatticeSet { n_points, generating_vector: z, residues, points, min_spacing })
}

/// Primitive-polynomial degree `s`, coefficient bits `a` and initial
/// direction integers `m_1..m_s` for dimensions 2 onwards, from the
/// `new-joe-kuo-6.21201` table of Joe & Kuo (2008). Dimension 1 is the
/// van der Corput sequence.
const DIRECTION_NUMBERS: &[(u32, u32, &[u32])] = &[
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
    (7, 7, &[1, 1, 3, 13, 7, 35, 63]),
    (7, 8, &[1, 3, 5, 9, 1, 25, 53]),
    (7, 14, &[1, 3, 1, 13, 9, 35, 107]),
    (7, 19, &[1, 3, 1, 5, 27, 61, 31]),
    (7, 21, &[1, 1, 5, 11, 19, 41, 61]),
    (7, 28, &[1, 3, 5, 3, 3, 13, 69]),
    (7, 31, &[1, 1, 7, 13, 1, 19, 1]),
    (7, 32, &[1, 3, 7, 5, 13, 19, 59]),
    (7, 37, &[1, 1, 3, 9, 25, 29, 41]),
    (7, 41, &[1, 3, 5, 13, 23, 1, 55]),
    (7, 42, &[1, 3, 7, 3, 13, 59, 17]),
    (7, 50, &[1, 3, 1, 3, 5, 53, 69]),
    (7, 55, &[1, 1, 5, 5, 23, 33, 13]),
    (7, 56, &[1, 1, 7, 7, 1, 61, 123]),
    (7, 59, &[1, 1, 7, 9, 13, 61, 49]),
    (7, 62, &[1, 3, 3, 5, 3, 55, 33]),
    (8, 14, &[1, 3, 1, 15, 31, 13, 49, 245]),
    (8, 21, &[1, 3, 5, 15, 31, 59, 63, 97]),
    (8, 22, &[1, 3, 1, 11, 11, 11, 77, 249]),
];

/// Largest dimension the embedded direction numbers support.
pub const SOBOL_MAX_DIM: usize = DIRECTION_NUMBERS.len() + 1;

const SOBOL_BITS: usize = 32;

/// Unscrambled Sobol' sequence in Gray-code order, one point at a time.
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; SOBOL_BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("Sobol' dimension must be positive".into()));
        }
        if dim > SOBOL_MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, max: SOBOL_MAX_DIM });
        }
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; SOBOL_BITS];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1 << (31 - k);
        }
        directions.push(first);
        for &(s, a, m) in &DIRECTION_NUMBERS[..dim - 1] {
            let s = s as usize;
            let mut v = [0u32; SOBOL_BITS];
            for k in 0..s {
                v[k] = m[k] << (31 - k);
            }
            for k in s..SOBOL_BITS {
                let mut x = v[k - s] ^ (v[k - s] >> s);
                for j in 1..s {
                    if (a >> (s - 1 - j)) & 1 == 1 {
                        x ^= v[k - j];
                    }
                }
                v[k] = x;
            }
            directions.push(v);
        }
        Ok(Self { directions, state: vec![0; dim], index: 0 })
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Jumps so that the next point returned has index `index`.
    pub fn seek(&mut self, index: u64) {
        let gray = index ^ (index >> 1);
        for (state, v) in self.state.iter_mut().zip(&self.directions) {
            let mut x = 0u32;
            for (bit, vb) in v.iter().enumerate() {
                if (gray >> bit) & 1 == 1 {
                    x ^= vb;
                }
            }
            *state = x;
        }
        self.index = index;
    }

    /// Writes the next point into `out`.
    pub fn next_into(&mut self, out: &mut [f64]) {
        const SCALE: f64 = 1.0 / 4_294_967_296.0;
        for (o, s) in out.iter_mut().zip(&self.state) {
            *o = *s as f64 * SCALE;
        }
        // point i+1 differs from point i by the direction of the lowest zero bit of i
        let c = self.index.trailing_ones() as usize;
        assert!(c < SOBOL_BITS, "Sobol' sequence exhausted after 2^32 points");
        for (s, v) in self.state.iter_mut().zip(&self.directions) {
            *s ^= v[c];
        }
        self.index += 1;
    }
}

/// The first `n_points` Sobol' points after skipping `skip`.
pub fn sobol(n_points: usize, dim: usize, skip: u64) -> Result<PointSet> {
    let mut seq = Sobol::new(dim)?;
    seq.seek(skip);
    let mut out = PointSet::with_capacity(dim, n_points);
    let mut row = vec![0.0; dim];
    for _ in 0..n_points {
        seq.next_into(&mut row);
        out.push(&row);
    }
    Ok(out)
}

/// Randomized Latin hypercube sample: every one-dimensional projection has
/// exactly one point per stratum `[i/n, (i+1)/n)`.
pub fn latin_hypercube(n: usize, dim: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "Latin hypercube needs n >= 1 and dim >= 1, got n = {n}, dim = {dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![0.0; n * dim];
    let mut perm: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        perm.shuffle(&mut rng);
        for (i, &stratum) in perm.iter().enumerate() {
            let u: f64 = rng.random();
            let v = (stratum as f64 + u) / n as f64;
            // rounding can reach the upper edge of the last stratum
            coords[i * dim + d] = v.min((stratum as f64 + 1.0) / n as f64 - f64::EPSILON);
        }
    }
    Ok(PointSet::from_flat(dim, coords))
}

/// Writes one point per row, coordinates in `%.17g`.
pub fn write_points_csv<W: Write>(mut out: W, points: &PointSet) -> std::io::Result<()> {
    for row in points.iter() {
        let line: Vec<String> = row.iter().map(|v| g17(*v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
