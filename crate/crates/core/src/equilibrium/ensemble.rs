use crate::rigidbody::{EulerAngles, RigidState};
use crate::{Error, Result, Vec3};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

const CSV_HEADER: [&str; 13] = [
    "id", "qx", "qy", "qz", "a1", "a2", "a3", "px", "py", "pz", "s1", "s2", "s3",
];

/// Uniform decomposition of a periodic box into cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellGrid {
    pub dims: [usize; 3],
}

impl CellGrid {
    pub fn new(dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid("cells", "every dimension needs at least one cell"));
        }
        Ok(Self { dims })
    }

    /// Largest grid whose cells are at least `min_edge` wide and hold about
    /// `target_per_cell` particles.
    pub fn automatic(box_size: &Vec3, count: usize, min_edge: f64, target_per_cell: usize) -> Self {
        let by_count = ((count as f64 / target_per_cell.max(1) as f64).cbrt().floor() as usize).max(1);
        let mut dims = [1; 3];
        for (d, &side) in dims.iter_mut().zip(box_size.iter()) {
            let by_size = if min_edge > 0.0 {
                (side / min_edge).floor() as usize
            } else {
                usize::MAX
            };
            *d = by_size.min(by_count).max(1);
        }
        Self { dims }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge(&self, box_size: &Vec3) -> Vec3 {
        Vec3::new(
            box_size.x / self.dims[0] as f64,
            box_size.y / self.dims[1] as f64,
            box_size.z / self.dims[2] as f64,
        )
    }

    pub fn cell_of(&self, q: &Vec3, box_size: &Vec3) -> usize {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let f = q[a] / box_size[a] * self.dims[a] as f64;
            c[a] = (f.floor().max(0.0) as usize).min(self.dims[a] - 1);
        }
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }
}

/// A periodic box of molecules with a cell index used for collision pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub particles: Vec<RigidState>,
    box_size: Vec3,
    cells: CellGrid,
    cell_of: Vec<usize>,
    cell_start: Vec<usize>,
    cell_items: Vec<usize>,
}

impl Ensemble {
    pub fn new(particles: Vec<RigidState>, box_size: Vec3, cells: CellGrid) -> Result<Self> {
        if box_size.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::invalid("box", "extents must be positive"));
        }
        CellGrid::new(cells.dims)?;
        let mut e = Self {
            particles,
            box_size,
            cells,
            cell_of: Vec::new(),
            cell_start: Vec::new(),
            cell_items: Vec::new(),
        };
        e.wrap_positions();
        e.rebuild_cells();
        Ok(e)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn box_size(&self) -> Vec3 {
        self.box_size
    }

    pub fn volume(&self) -> f64 {
        self.box_size.product()
    }

    pub fn number_density(&self) -> f64 {
        self.len() as f64 / self.volume()
    }

    pub fn cells(&self) -> CellGrid {
        self.cells
    }

    pub fn set_cells(&mut self, cells: CellGrid) -> Result<()> {
        self.cells = CellGrid::new(cells.dims)?;
        self.rebuild_cells();
        Ok(())
    }

    /// Maps every position back into `[0, L)` per axis.
    pub fn wrap_positions(&mut self) {
        let l = self.box_size;
        for p in &mut self.particles {
            for a in 0..3 {
                let mut x = p.q[a].rem_euclid(l[a]);
                if x >= l[a] {
                    x = 0.0;
                }
                p.q[a] = x;
            }
        }
    }

    /// Recomputes the per-particle cell index and the cell member lists.
    pub fn rebuild_cells(&mut self) {
        let n_cells = self.cells.len();
        self.cell_of = self
            .particles
            .iter()
            .map(|p| self.cells.cell_of(&p.q, &self.box_size))
            .collect();
        let mut counts = vec![0usize; n_cells + 1];
        for &c in &self.cell_of {
            counts[c + 1] += 1;
        }
        for c in 0..n_cells {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; self.particles.len()];
        for (i, &c) in self.cell_of.iter().enumerate() {
            items[fill[c]] = i;
            fill[c] += 1;
        }
        self.cell_start = counts;
        self.cell_items = items;
    }

    pub fn cell_index(&self, particle: usize) -> usize {
        self.cell_of[particle]
    }

    /// Particle indices in `cell`, in increasing order.
    pub fn cell_members(&self, cell: usize) -> &[usize] {
        &self.cell_items[self.cell_start[cell]..self.cell_start[cell + 1]]
    }

    /// True when every particle lies in the box and in the cell recorded for it.
    pub fn is_consistent(&self) -> bool {
        self.particles.iter().enumerate().all(|(i, p)| {
            (0..3).all(|a| p.q[a] >= 0.0 && p.q[a] < self.box_size[a])
                && self.cell_of[i] == self.cells.cell_of(&p.q, &self.box_size)
        })
    }

    /// Minimum-image displacement `b − a`.
    pub fn minimum_image(&self, a: &Vec3, b: &Vec3) -> Vec3 {
        let mut d = b - a;
        for k in 0..3 {
            let l = self.box_size[k];
            d[k] -= l * (d[k] / l).round();
        }
        d
    }

    /// Writes a snapshot with header `id,qx,qy,qz,a1,a2,a3,px,py,pz,s1,s2,s3`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for (i, p) in self.particles.iter().enumerate() {
            let a = p.alpha;
            let row = [
                p.q.x, p.q.y, p.q.z, a.a1, a.a2, a.a3, p.p.x, p.p.y, p.p.z, p.sigma.x,
                p.sigma.y, p.sigma.z,
            ];
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|x| x.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a snapshot written by [`Ensemble::write_csv`].
    pub fn read_csv<R: Read>(input: R, box_size: Vec3, cells: CellGrid) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        if header.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
            return Err(Error::Parse(format!(
                "unexpected ensemble header {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut particles = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let v: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))
                })
                .collect::<Result<_>>()?;
            if v.len() != 12 {
                return Err(Error::Parse(format!("row {}: expected 13 columns", line + 1)));
            }
            particles.push(RigidState {
                q: Vec3::new(v[0], v[1], v[2]),
                alpha: EulerAngles::new(v[3], v[4], v[5]),
                p: Vec3::new(v[6], v[7], v[8]),
                sigma: Vec3::new(v[9], v[10], v[11]),
            });
        }
        Self::new(particles, box_size, cells)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(q: Vec3) -> RigidState {
        RigidState {
            q,
            alpha: EulerAngles::new(0.1, 1.0, 0.2),
            p: Vec3::new(1.0, -2.0, 0.5),
            sigma: Vec3::new(0.3, 0.0, -0.1),
        }
    }

    #[test]
    fn wraps_and_indexes_cells() {
        let e = Ensemble::new(
            vec![state(Vec3::new(-0.5, 4.5, 2.0)), state(Vec3::new(3.9, 0.1, 0.1))],
            Vec3::new(4.0, 4.0, 4.0),
            CellGrid::new([2, 2, 2]).unwrap(),
        )
        .unwrap();
        assert_eq!(e.particles[0].q, Vec3::new(3.5, 0.5, 2.0));
        assert!(e.is_consistent());
        assert_eq!(e.cell_index(0), 1 + 2 * 2);
        assert_eq!(e.cell_members(1), &[1]);
        assert_eq!(e.cell_members(5), &[0]);
        let total: usize = (0..8).map(|c| e.cell_members(c).len()).sum();
        assert_eq!(total, 2);
    }

    #[test]
    fn minimum_image_is_short() {
        let e = Ensemble::new(vec![], Vec3::new(2.0, 2.0, 2.0), CellGrid::new([1, 1, 1]).unwrap())
            .unwrap();
        let d = e.minimum_image(&Vec3::new(0.1, 0.1, 0.1), &Vec3::new(1.9, 0.1, 1.0));
        assert!((d - Vec3::new(-0.2, 0.0, 0.9)).norm() < 1e-14);
    }

    #[test]
    fn automatic_cells_respect_edge() {
        let c = CellGrid::automatic(&Vec3::new(10.0, 10.0, 10.0), 1_000_000, 1.5, 20);
        assert_eq!(c.dims, [6, 6, 6]);
        let c = CellGrid::automatic(&Vec3::new(10.0, 10.0, 10.0), 160, 0.1, 20);
        assert_eq!(c.dims, [2, 2, 2]);
    }

    #[test]
    fn csv_round_trip() {
        let e = Ensemble::new(
            vec![state(Vec3::new(0.5, 0.25, 1.0 / 3.0)), state(Vec3::new(1.0, 1.5, 0.1))],
            Vec3::new(2.0, 2.0, 2.0),
            CellGrid::new([1, 1, 1]).unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,qx,qy,qz,a1,a2,a3,px,py,pz,s1,s2,s3\n"));
        let back = Ensemble::read_csv(&buf[..], e.box_size(), e.cells()).unwrap();
        assert_eq!(back.particles, e.particles);
    }

    #[test]
    fn rejects_bad_header() {
        let bad = "id,x\n0,1\n";
        assert!(Ensemble::read_csv(bad.as_bytes(), Vec3::repeat(1.0), CellGrid { dims: [1, 1, 1] })
            .is_err());
    }
}
