//! Uniform periodic structured grids (1D, 2D or 3D) shared by the director and
//! continuum modules.
//!
//! Nodes are cell centred: node `(i, j, k)` sits at `((i+½)hx, (j+½)hy, (k+½)hz)`.
//! An axis with a single node is inactive and carries no derivatives.

use crate::{Error, Mat3, Result, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

impl PeriodicGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid("grid.dims", "every extent must be at least 1"));
        }
        if spacing.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return Err(Error::invalid("grid.spacing", "spacings must be positive"));
        }
        Ok(Self { dims, spacing })
    }

    /// `n` cells along x covering `[0, length)`.
    pub fn line(n: usize, length: f64) -> Result<Self> {
        Self::new([n, 1, 1], [length / n as f64, 1.0, 1.0])
    }

    /// `nx × ny` cells covering `[0, lx) × [0, ly)`.
    pub fn plane(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new([nx, ny, 1], [lx / nx as f64, ly / ny as f64, 1.0])
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    /// Periodic neighbour of `idx` shifted by `offset` along `axis`.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let mut c = self.coords(idx);
        let n = self.dims[axis] as isize;
        c[axis] = (c[axis] as isize + offset).rem_euclid(n) as usize;
        self.index(c[0], c[1], c[2])
    }

    pub fn is_active(&self, axis: usize) -> bool {
        self.dims[axis] > 1
    }

    pub fn active_axes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(move |&a| self.is_active(a))
    }

    pub fn dimension(&self) -> usize {
        self.active_axes().count()
    }

    /// Cell-centre position of node `idx`.
    pub fn position(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        Vec3::new(
            (c[0] as f64 + 0.5) * self.spacing[0],
            (c[1] as f64 + 0.5) * self.spacing[1],
            (c[2] as f64 + 0.5) * self.spacing[2],
        )
    }

    /// Measure of one cell over the active axes.
    pub fn cell_volume(&self) -> f64 {
        self.active_axes().map(|a| self.spacing[a]).product()
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        self.active_axes()
            .map(|a| self.spacing[a])
            .fold(f64::INFINITY, f64::min)
    }

    /// Second-order central difference of a scalar field along `axis`.
    #[inline]
    pub fn d_scalar(&self, f: &[f64], idx: usize, axis: usize) -> f64 {
        if !self.is_active(axis) {
            return 0.0;
        }
        let p = self.neighbor(idx, axis, 1);
        let m = self.neighbor(idx, axis, -1);
        (f[p] - f[m]) / (2.0 * self.spacing[axis])
    }

    #[inline]
    pub fn grad_scalar(&self, f: &[f64], idx: usize) -> Vec3 {
        Vec3::new(
            self.d_scalar(f, idx, 0),
            self.d_scalar(f, idx, 1),
            self.d_scalar(f, idx, 2),
        )
    }

    /// Central-difference gradient of a vector field, `G[(p, k)] = ∂_k u_p`.
    #[inline]
    pub fn grad_vector(&self, u: &[Vec3], idx: usize) -> Mat3 {
        let mut g = Mat3::zeros();
        for axis in self.active_axes() {
            let p = self.neighbor(idx, axis, 1);
            let m = self.neighbor(idx, axis, -1);
            let d = (u[p] - u[m]) / (2.0 * self.spacing[axis]);
            g.set_column(axis, &d);
        }
        g
    }
}

/// Node-ordered table of values on a grid, stored as plain text:
///
/// ```text
/// dims 16 1 1
/// spacing 0.0625 1 1
/// i,j,k,nx,ny,nz
/// 0,0,0,1,0,0
/// ```
///
/// The first three columns are always the node coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub grid: PeriodicGrid,
    /// Names of the value columns (after `i,j,k`).
    pub columns: Vec<String>,
    /// One row of values per node in index order.
    pub rows: Vec<Vec<f64>>,
}

impl GridTable {
    pub fn write<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        writeln!(w, "dims {} {} {}", g.dims[0], g.dims[1], g.dims[2])?;
        writeln!(w, "spacing {} {} {}", g.spacing[0], g.spacing[1], g.spacing[2])?;
        writeln!(w, "i,j,k,{}", self.columns.join(","))?;
        for (idx, row) in self.rows.iter().enumerate() {
            let [i, j, k] = g.coords(idx);
            write!(w, "{i},{j},{k}")?;
            for x in row {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read<R: std::io::BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what} line")))?
                .map_err(Error::from)
        };
        let parse_three = |line: &str, key: &str| -> Result<[f64; 3]> {
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| Error::Parse(format!("expected `{key}` header, got `{line}`")))?;
            let v: Vec<f64> = rest
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{key}: {e}"))))
                .collect::<Result<_>>()?;
            v.try_into()
                .map_err(|_| Error::Parse(format!("`{key}` needs three values")))
        };
        let dims = parse_three(&next("dims")?, "dims")?;
        let spacing = parse_three(&next("spacing")?, "spacing")?;
        let grid = PeriodicGrid::new(dims.map(|d| d as usize), spacing)?;
        let header = next("column header")?;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if names.len() < 3 || names[..3] != ["i", "j", "k"] {
            return Err(Error::Parse(format!("column header must start with i,j,k: `{header}`")));
        }
        let columns = names[3..].to_vec();
        let mut rows = vec![Vec::new(); grid.len()];
        let mut seen = vec![false; grid.len()];
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != names.len() {
                return Err(Error::Parse(format!("row {}: expected {} columns", n + 1, names.len())));
            }
            let ijk: Vec<usize> = fields[..3]
                .iter()
                .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("row {}: {e}", n + 1))))
                .collect::<Result<_>>()?;
            if (0..3).any(|a| ijk[a] >= grid.dims[a]) {
                return Err(Error::Parse(format!("row {}: node outside grid", n + 1)));
            }
            let idx = grid.index(ijk[0], ijk[1], ijk[2]);
            rows[idx] = fields[3..]
                .iter()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", n + 1))))
                .collect::<Result<_>>()?;
            seen[idx] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::Parse(format!("node {missing} has no row")));
        }
        Ok(Self { grid, columns, rows })
    }

    /// Position of the named value column.
    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Parse(format!("missing column `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip_and_wrap() {
        let g = PeriodicGrid::new([4, 3, 2], [1.0; 3]).unwrap();
        for idx in 0..g.len() {
            let [i, j, k] = g.coords(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert_eq!(g.neighbor(g.index(3, 0, 0), 0, 1), g.index(0, 0, 0));
        assert_eq!(g.neighbor(g.index(0, 0, 1), 1, -1), g.index(0, 2, 1));
        assert_eq!(g.dimension(), 3);
    }

    #[test]
    fn rejects_empty_extent() {
        assert!(PeriodicGrid::new([0, 1, 1], [1.0; 3]).is_err());
        assert!(PeriodicGrid::new([2, 1, 1], [0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn central_difference_of_sine_is_second_order() {
        let err = |n: usize| {
            let g = PeriodicGrid::line(n, 1.0).unwrap();
            let k = 2.0 * std::f64::consts::PI;
            let f: Vec<f64> = (0..n).map(|i| (k * g.position(i).x).sin()).collect();
            (0..n)
                .map(|i| (g.d_scalar(&f, i, 0) - k * (k * g.position(i).x).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn table_round_trip() {
        let grid = PeriodicGrid::new([3, 2, 1], [0.5, 0.25, 1.0]).unwrap();
        let t = GridTable {
            grid,
            columns: vec!["a".into(), "b".into()],
            rows: (0..6).map(|i| vec![i as f64 / 3.0, -(i as f64)]).collect(),
        };
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dims 3 2 1\nspacing 0.5 0.25 1\ni,j,k,a,b\n0,0,0,0,-0\n"));
        let back = GridTable::read(&buf[..]).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("b").unwrap(), 1);
        assert!(GridTable::read("dims 2 1 1\nspacing 1 1 1\ni,j,k,a\n0,0,0,1\n".as_bytes()).is_err());
    }
}
