//! Finite-volume discretization of `∇·(κ∇V) = 0` with complex admittivity
//! `κ = σ + jωε₀ε_r`.
//!
//! Each cell exchanges current with its four neighbours through a face
//! transmissibility `ℓ / (h₁/2κ₁ + h₂/2κ₂)` (ℓ face length, hᵢ cell widths
//! normal to the face), i.e. the harmonic mean of the two admittivities over
//! the centre-to-centre distance. Fixed-potential cells stand in for
//! electrodes; a grid side is either insulating or held at prescribed
//! potentials through a half-cell link.

use num_complex::Complex64;

use super::grid::Grid2d;
use super::FemError;

/// Neighbour slots in [`LinearSystem::links`].
pub const WEST: usize = 0;
pub const EAST: usize = 1;
pub const TOP: usize = 2;
pub const BOTTOM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `x = x_min`
    West,
    /// `x = x_max`
    East,
    /// `y = y_min` (the skin surface for arm models)
    Top,
    /// `y = y_max`
    Bottom,
}

impl Side {
    fn slot(self) -> usize {
        match self {
            Side::West => WEST,
            Side::East => EAST,
            Side::Top => TOP,
            Side::Bottom => BOTTOM,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    /// Zero normal current.
    Insulating,
    /// Potential on the outer face of each boundary cell, ordered along the side.
    Potential(Vec<Complex64>),
}

/// Geometry, materials and constraints of one quasi-static solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    grid: Grid2d,
    admittivity: Vec<Complex64>,
    fixed: Vec<Option<Complex64>>,
    boundaries: [Boundary; 4],
    frequency: f64,
}

impl Problem {
    /// All sides insulating, no fixed cells. Admittivities must be finite with
    /// non-negative real and imaginary parts.
    pub fn new(grid: Grid2d, admittivity: Vec<Complex64>, frequency: f64) -> Result<Self, FemError> {
        if !(frequency.is_finite() && frequency >= 0.0) {
            return Err(FemError::InvalidFrequency(frequency));
        }
        if admittivity.len() != grid.cell_count() {
            return Err(FemError::InvalidGeometry(format!(
                "{} admittivities for {} cells",
                admittivity.len(),
                grid.cell_count()
            )));
        }
        if let Some(k) = admittivity
            .iter()
            .position(|k| !(k.re.is_finite() && k.im.is_finite() && k.re >= 0.0 && k.im >= 0.0))
        {
            return Err(FemError::InvalidGeometry(format!("invalid admittivity in cell {k}")));
        }
        let n = grid.cell_count();
        Ok(Self {
            grid,
            admittivity,
            fixed: vec![None; n],
            boundaries: [Boundary::Insulating, Boundary::Insulating, Boundary::Insulating, Boundary::Insulating],
            frequency,
        })
    }

    pub fn grid(&self) -> &Grid2d {
        &self.grid
    }

    pub fn fix_cells(&mut self, cells: &[usize], potential: Complex64) -> Result<(), FemError> {
        for &c in cells {
            if c >= self.fixed.len() {
                return Err(FemError::InvalidGeometry(format!("cell {c} outside the grid")));
            }
            self.fixed[c] = Some(potential);
        }
        Ok(())
    }

    pub fn set_boundary(&mut self, side: Side, boundary: Boundary) -> Result<(), FemError> {
        let len = match side {
            Side::West | Side::East => self.grid.ny(),
            Side::Top | Side::Bottom => self.grid.nx(),
        };
        if let Boundary::Potential(v) = &boundary {
            if v.len() != len {
                return Err(FemError::InvalidGeometry(format!(
                    "{side:?} boundary needs {len} potentials, got {}",
                    v.len()
                )));
            }
        }
        self.boundaries[side.slot()] = boundary;
        Ok(())
    }

    pub fn assemble(self) -> Result<LinearSystem, FemError> {
        let Problem { grid, admittivity, fixed, boundaries, frequency } = self;
        let (nx, ny) = (grid.nx(), grid.ny());
        let n = grid.cell_count();
        let mut links = vec![[Complex64::new(0.0, 0.0); 4]; n];
        let mut boundary_t = vec![Complex64::new(0.0, 0.0); n];
        let mut boundary_tv = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..nx {
            for j in 0..ny {
                let c = grid.index(i, j);
                let k = admittivity[c];
                let (hx, hy) = (grid.dx(i), grid.dy(j));
                let l = &mut links[c];
                if i > 0 {
                    l[WEST] = face_coefficient(k, hx, admittivity[c - ny], grid.dx(i - 1), hy);
                }
                if i + 1 < nx {
                    l[EAST] = face_coefficient(k, hx, admittivity[c + ny], grid.dx(i + 1), hy);
                }
                if j > 0 {
                    l[TOP] = face_coefficient(k, hy, admittivity[c - 1], grid.dy(j - 1), hx);
                }
                if j + 1 < ny {
                    l[BOTTOM] = face_coefficient(k, hy, admittivity[c + 1], grid.dy(j + 1), hx);
                }
                let edges = [
                    (i == 0, WEST, j, hx, hy),
                    (i + 1 == nx, EAST, j, hx, hy),
                    (j == 0, TOP, i, hy, hx),
                    (j + 1 == ny, BOTTOM, i, hy, hx),
                ];
                for (on_edge, slot, along, h, face) in edges {
                    if let (true, Boundary::Potential(v)) = (on_edge, &boundaries[slot]) {
                        let t = k * (2.0 * face / h);
                        boundary_t[c] += t;
                        boundary_tv[c] += t * v[along];
                    }
                }
            }
        }
        let anchored = fixed.iter().any(Option::is_some) || boundary_t.iter().any(|t| t.norm() > 0.0);
        if !anchored {
            return Err(FemError::InvalidGeometry(
                "no fixed potential anywhere: the problem is singular".into(),
            ));
        }
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            rhs[c] = match fixed[c] {
                Some(v) => v,
                None => {
                    let mut b = boundary_tv[c];
                    for (slot, t) in links[c].iter().enumerate() {
                        if let Some(v) = neighbour(&grid, c, slot).and_then(|m| fixed[m]) {
                            b += t * v;
                        }
                    }
                    b
                }
            };
        }
        Ok(LinearSystem { grid, admittivity, fixed, frequency, links, boundary_t, boundary_tv, rhs })
    }
}

/// Transmissibility of the face shared by two cells of widths `h1`, `h2`
/// (normal to the face) and face length `face`. For equal widths this is
/// `2κ₁κ₂/(κ₁+κ₂) · face/h`.
pub fn face_coefficient(k1: Complex64, h1: f64, k2: Complex64, h2: f64, face: f64) -> Complex64 {
    let den = k2 * h1 + k1 * h2;
    if den.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    k1 * k2 * (2.0 * face) / den
}

pub(crate) fn neighbour(grid: &Grid2d, cell: usize, slot: usize) -> Option<usize> {
    let (i, j) = grid.coords(cell);
    let ny = grid.ny();
    match slot {
        WEST if i > 0 => Some(cell - ny),
        EAST if i + 1 < grid.nx() => Some(cell + ny),
        TOP if j > 0 => Some(cell - 1),
        BOTTOM if j + 1 < ny => Some(cell + 1),
        _ => None,
    }
}

/// Assembled system: one row per cell; fixed cells are identity rows and
/// their couplings into free rows are carried on the right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    grid: Grid2d,
    admittivity: Vec<Complex64>,
    fixed: Vec<Option<Complex64>>,
    frequency: f64,
    links: Vec<[Complex64; 4]>,
    boundary_t: Vec<Complex64>,
    boundary_tv: Vec<Complex64>,
    rhs: Vec<Complex64>,
}

impl LinearSystem {
    pub fn grid(&self) -> &Grid2d {
        &self.grid
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn admittivity(&self) -> &[Complex64] {
        &self.admittivity
    }

    pub fn fixed(&self) -> &[Option<Complex64>] {
        &self.fixed
    }

    /// Face transmissibilities to the west, east, top and bottom neighbours.
    pub fn links(&self, cell: usize) -> [Complex64; 4] {
        self.links[cell]
    }

    pub fn rhs(&self) -> &[Complex64] {
        &self.rhs
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn is_fixed(&self, cell: usize) -> bool {
        self.fixed[cell].is_some()
    }

    /// Conservation stencil of a cell before fixed potentials are eliminated:
    /// `(column, coefficient)` pairs, diagonal first. The coefficients sum to
    /// the cell's link to any prescribed-potential side (zero in the interior).
    pub fn stencil(&self, cell: usize) -> Vec<(usize, Complex64)> {
        let l = self.links[cell];
        let mut row = vec![(cell, l.iter().sum::<Complex64>() + self.boundary_t[cell])];
        for (slot, t) in l.iter().enumerate() {
            if let Some(m) = neighbour(&self.grid, cell, slot) {
                row.push((m, -t));
            }
        }
        row
    }

    /// `A·x` with fixed potentials eliminated (fixed rows act as identity).
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.len())
            .map(|c| {
                if self.fixed[c].is_some() {
                    return x[c];
                }
                let l = self.links[c];
                let mut acc = (l.iter().sum::<Complex64>() + self.boundary_t[c]) * x[c];
                for (slot, t) in l.iter().enumerate() {
                    if let Some(m) = neighbour(&self.grid, c, slot) {
                        if self.fixed[m].is_none() {
                            acc -= t * x[m];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Net current (per metre of depth) leaving `cell` through its faces,
    /// given the potential field.
    pub fn outflow(&self, potential: &[Complex64], cell: usize) -> Complex64 {
        let v = potential[cell];
        let mut i = self.boundary_t[cell] * v - self.boundary_tv[cell];
        for (slot, t) in self.links[cell].iter().enumerate() {
            if let Some(m) = neighbour(&self.grid, cell, slot) {
                i += t * (v - potential[m]);
            }
        }
        i
    }

    /// Net current leaving a set of cells across its outer contour; faces
    /// internal to the set cancel and are skipped.
    pub fn net_current(&self, potential: &[Complex64], cells: &[usize]) -> Complex64 {
        let mut inside = vec![false; self.len()];
        for &c in cells {
            inside[c] = true;
        }
        let mut total = Complex64::new(0.0, 0.0);
        for &c in cells {
            let v = potential[c];
            total += self.boundary_t[c] * v - self.boundary_tv[c];
            for (slot, t) in self.links[c].iter().enumerate() {
                if let Some(m) = neighbour(&self.grid, c, slot) {
                    if !inside[m] {
                        total += t * (v - potential[m]);
                    }
                }
            }
        }
        total
    }
}
