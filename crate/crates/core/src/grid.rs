//! Belief-simplex grids: fixed-resolution lattices and the size-controlled variant.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{Read, Write};

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid size overflows for {n_states} states at resolution {rho}")]
    Overflow { n_states: usize, rho: u32 },
    #[error("a grid over {n_states} states needs at least {n_states} points, got {requested}")]
    TooFewPoints { n_states: usize, requested: usize },
    #[error("only one belief exists over a single state; requested {0} points")]
    SingleState(usize),
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("grid csv: {0}")]
    Csv(String),
}

/// Lattice points larger than this are not enumerated.
pub const MAX_ENUMERATED: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridOrder {
    Lexicographic,
}

#[derive(Debug, Clone)]
pub struct GridSet {
    pub points: Vec<Vec<f64>>,
    pub resolution_used: u32,
    pub order: GridOrder,
    supports: Vec<Vec<usize>>,
    lookup: HashMap<Vec<i64>, usize>,
    fingerprint: u64,
}

/// A lattice point `num / den`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Rational {
    num: Vec<u32>,
    den: u32,
}

impl Rational {
    fn cmp_lex(&self, other: &Self) -> Ordering {
        for (a, b) in self.num.iter().zip(&other.num) {
            let l = *a as u64 * other.den as u64;
            let r = *b as u64 * self.den as u64;
            match l.cmp(&r) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    fn to_f64(&self) -> Vec<f64> {
        self.num.iter().map(|&k| k as f64 / self.den as f64).collect()
    }

    /// True when every coordinate is also a multiple of `1 / other_den`.
    fn on_lattice(&self, other_den: u32) -> bool {
        self.num.iter().all(|&k| (k as u64 * other_den as u64) % self.den as u64 == 0)
    }
}

fn key(b: &[f64]) -> Vec<i64> {
    b.iter().map(|x| (x * 1e9).round() as i64).collect()
}

/// |G_ρ| = C(n + ρ − 1, n − 1).
pub fn grid_set_size(n_states: usize, rho: u32) -> Result<u128, GridError> {
    if n_states == 0 {
        return Ok(0);
    }
    let m = n_states as u128 + rho as u128 - 1;
    let k = (n_states as u128 - 1).min(rho as u128);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul(m - k + i)
            .ok_or(GridError::Overflow { n_states, rho })?
            / i;
    }
    Ok(acc)
}

fn lattice(n_states: usize, rho: u32) -> Result<Vec<Rational>, GridError> {
    let size = grid_set_size(n_states, rho)?;
    if size > MAX_ENUMERATED {
        return Err(GridError::Overflow { n_states, rho });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut cur = vec![0u32; n_states];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, rho: u32, out: &mut Vec<Rational>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(Rational { num: cur.clone(), den: rho });
            return;
        }
        for k in 0..=left {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, rho, out);
        }
    }
    rec(0, rho, &mut cur, rho, &mut out);
    Ok(out)
}

impl GridSet {
    fn from_rationals(mut pts: Vec<Rational>, resolution_used: u32) -> Self {
        pts.sort_by(|a, b| a.cmp_lex(b));
        let points: Vec<Vec<f64>> = pts.iter().map(|p| p.to_f64()).collect();
        Self::assemble(points, resolution_used)
    }

    fn assemble(points: Vec<Vec<f64>>, resolution_used: u32) -> Self {
        let supports = points
            .iter()
            .map(|p| p.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(i, _)| i).collect())
            .collect();
        let lookup = points.iter().enumerate().map(|(k, p)| (key(p), k)).collect();
        let mut h = Sha256::new();
        for p in &points {
            for x in p {
                h.update(x.to_le_bytes());
            }
            h.update(b";");
        }
        let digest = h.finalize();
        let fingerprint = u64::from_le_bytes(digest[..8].try_into().unwrap());
        GridSet { points, resolution_used, order: GridOrder::Lexicographic, supports, lookup, fingerprint }
    }

    /// Builds a grid from explicit points, sorting them and checking invariants.
    pub fn from_points(mut points: Vec<Vec<f64>>) -> Result<Self, GridError> {
        let n = points.first().map(|p| p.len()).ok_or_else(|| GridError::Invalid("no points".into()))?;
        for p in &points {
            if p.len() != n {
                return Err(GridError::Invalid("points have different dimensions".into()));
            }
            let s: f64 = p.iter().sum();
            if p.iter().any(|&x| !(0.0..=1.0 + 1e-9).contains(&x)) || (s - 1.0).abs() > 1e-9 {
                return Err(GridError::Invalid(format!("{p:?} is not a belief")));
            }
        }
        points.sort_by(|a, b| {
            a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
        });
        let grid = Self::assemble(points, 0);
        if grid.lookup.len() != grid.points.len() {
            return Err(GridError::Invalid("duplicate points".into()));
        }
        for i in 0..n {
            let mut corner = vec![0.0; n];
            corner[i] = 1.0;
            if grid.index_of(&corner).is_none() {
                return Err(GridError::Invalid(format!("corner {i} missing")));
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.points.first().map(|p| p.len()).unwrap_or(0)
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn fingerprint_hex(&self) -> String {
        format!("{:016x}", self.fingerprint)
    }

    /// Indices of the states carrying positive mass at grid point `k`.
    pub fn support(&self, k: usize) -> &[usize] {
        &self.supports[k]
    }

    /// Exact membership test (coordinates compared at 1e-9 resolution).
    pub fn index_of(&self, b: &[f64]) -> Option<usize> {
        self.lookup.get(&key(b)).copied()
    }

    pub fn corner(&self, i: usize) -> usize {
        let mut c = vec![0.0; self.n_states()];
        c[i] = 1.0;
        self.index_of(&c).expect("grid contains every corner")
    }

    /// Grid point closest in L1 distance; ties go to the lowest index.
    pub fn nearest(&self, b: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (k, p) in self.points.iter().enumerate() {
            let d: f64 = p.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
            if d < best.1 - 1e-15 {
                best = (k, d);
            }
        }
        best.0
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), GridError> {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for p in &self.points {
            wr.write_record(p.iter().map(|x| x.to_string())).map_err(|e| GridError::Csv(e.to_string()))?;
        }
        wr.flush().map_err(|e| GridError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, GridError> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
        let mut points = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| GridError::Csv(e.to_string()))?;
            let p = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| GridError::Csv(format!("`{f}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            points.push(p);
        }
        Self::from_points(points)
    }
}

/// All beliefs whose coordinates are multiples of `1/rho`.
pub fn fixed_resolution_grid(n_states: usize, rho: u32) -> Result<GridSet, GridError> {
    Ok(GridSet::from_rationals(lattice(n_states, rho)?, rho))
}

/// Size-controlled grid with exactly `n_points` points: the largest lattice
/// that fits, topped up with evenly strided points from the next finer one.
pub fn build_grid_set(n_states: usize, n_points: usize) -> Result<GridSet, GridError> {
    if n_points < n_states {
        return Err(GridError::TooFewPoints { n_states, requested: n_points });
    }
    if n_states == 1 {
        if n_points != 1 {
            return Err(GridError::SingleState(n_points));
        }
        return fixed_resolution_grid(1, 1);
    }
    let mut iota = 1u32;
    loop {
        iota += 1;
        if grid_set_size(n_states, iota)? > n_points as u128 {
            break;
        }
    }
    let base = lattice(n_states, iota - 1)?;
    let need = n_points - base.len();
    let mut picked = base;
    if need > 0 {
        let finer: Vec<Rational> = lattice(n_states, iota)?.into_iter().filter(|p| !p.on_lattice(iota - 1)).collect();
        let mut eta = n_points / finer.len();
        if eta == 0 || 1 + (need - 1) * eta > finer.len() {
            eta = finer.len() / need;
        }
        picked.extend(finer.into_iter().step_by(eta).take(need));
    }
    Ok(GridSet::from_rationals(picked, iota))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let got: Vec<u128> = (1..=5).map(|r| grid_set_size(11, r).unwrap()).collect();
        assert_eq!(got, vec![11, 66, 286, 1001, 3003]);
        assert_eq!(grid_set_size(2, 1).unwrap(), 2);
        assert!(grid_set_size(10_000, u32::MAX).is_err());
    }

    #[test]
    fn lattice_membership() {
        let p = Rational { num: vec![0, 2, 2], den: 4 };
        assert!(p.on_lattice(2));
        assert!(!Rational { num: vec![1, 2, 0], den: 3 }.on_lattice(2));
    }

    #[test]
    fn size_controlled_three_state_example() {
        let g = build_grid_set(3, 5).unwrap();
        let want = vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 1.0, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![1.0, 0.0, 0.0],
        ];
        assert_eq!(g.points, want);
        assert_eq!(g.resolution_used, 2);
    }

    #[test]
    fn strided_fallback_spreads_points() {
        let g = build_grid_set(129, 1000).unwrap();
        assert_eq!(g.len(), 1000);
        let g = build_grid_set(11, 200).unwrap();
        assert_eq!(g.len(), 200);
    }

    #[test]
    fn csv_round_trip_keeps_fingerprint() {
        for (n, k) in [(2, 200), (7, 300), (11, 200)] {
            let g = build_grid_set(n, k).unwrap();
            let mut buf = Vec::new();
            g.write_csv(&mut buf).unwrap();
            let back = GridSet::read_csv(buf.as_slice()).unwrap();
            assert_eq!(back.fingerprint_hex(), g.fingerprint_hex());
        }
    }
}
