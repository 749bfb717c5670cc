//! Closed-form reference problems for checking the solver.

use num_complex::Complex64;

use super::assembly::{Boundary, Problem, Side};
use super::grid::{uniform_edges, Grid2d};
use super::solver::solve_potential;
use super::FemError;

/// Homogeneous rectangle, 1 V on the west side and 0 V on the east: the
/// exact potential is the ramp `1 − x/L` with `|E| = 1/L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampCheck {
    /// Largest nodal potential error (relative to the 1 V drive).
    pub potential_error: f64,
    /// Largest `|E|` error relative to `1/L`.
    pub field_error: f64,
}

pub fn laplace_ramp(nx: usize, ny: usize, kappa: Complex64) -> Result<RampCheck, FemError> {
    let (length, height) = (0.1, 0.04);
    let grid = Grid2d::uniform(length, height, nx, ny)?;
    let mut p = Problem::new(grid, vec![kappa; nx * ny], 0.0)?;
    p.set_boundary(Side::West, Boundary::Potential(vec![Complex64::new(1.0, 0.0); ny]))?;
    p.set_boundary(Side::East, Boundary::Potential(vec![Complex64::new(0.0, 0.0); ny]))?;
    let sol = solve_potential(p.assemble()?)?;
    let g = sol.grid();
    let mut check = RampCheck { potential_error: 0.0, field_error: 0.0 };
    for (c, v) in sol.potential().iter().enumerate() {
        let x = g.x_centers()[g.coords(c).0];
        check.potential_error = check.potential_error.max((v - (1.0 - x / length)).norm());
        check.field_error = check.field_error.max((sol.e_field()[c] * length - 1.0).abs());
    }
    Ok(check)
}

/// Two layers stacked between plates: the top plate carries
/// `V₀·cos(πx/W)`, the bottom plate is grounded and the ends are insulating.
/// With `modulated = false` the top plate is uniform and the problem reduces
/// to the 1D series divider.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayeredPlate {
    pub width: f64,
    pub d1: f64,
    pub d2: f64,
    pub kappa1: Complex64,
    pub kappa2: Complex64,
    pub modulated: bool,
}

impl Default for LayeredPlate {
    /// Muscle-like over fat-like material at 1 MHz, centimetre scale.
    fn default() -> Self {
        Self {
            width: 0.04,
            d1: 0.01,
            d2: 0.02,
            kappa1: Complex64::new(0.50, 0.10),
            kappa2: Complex64::new(0.025, 0.0015),
            modulated: true,
        }
    }
}

impl LayeredPlate {
    fn wavenumber(&self) -> f64 {
        if self.modulated {
            std::f64::consts::PI / self.width
        } else {
            0.0
        }
    }

    /// Exact interface potential at `x` for a 1 V top-plate amplitude.
    pub fn interface_potential(&self, x: f64) -> Complex64 {
        let k = self.wavenumber();
        let ratio = self.kappa2 / self.kappa1;
        if k == 0.0 {
            return 1.0 / (1.0 + ratio * (self.d1 / self.d2));
        }
        let (ch1, sh1) = ((k * self.d1).cosh(), (k * self.d1).sinh());
        let coth2 = 1.0 / (k * self.d2).tanh();
        (k * x).cos() / (ch1 + ratio * sh1 * coth2)
    }

    /// Largest interface-potential error over the columns, relative to the
    /// largest exact interface potential. `n` cells per unit of `d1` in depth
    /// and `n·W/d1` along the plates.
    pub fn solve_error(&self, n: usize) -> Result<f64, FemError> {
        let n1 = n;
        let n2 = ((self.d2 / self.d1) * n as f64).round().max(1.0) as usize;
        let nx = ((self.width / self.d1) * n as f64).round().max(1.0) as usize;
        let mut y = uniform_edges(0.0, self.d1, n1);
        y.extend_from_slice(&uniform_edges(self.d1, self.d1 + self.d2, n2)[1..]);
        let grid = Grid2d::from_edges(uniform_edges(0.0, self.width, nx), y)?;
        let ny = n1 + n2;
        let kappa = (0..nx * ny).map(|c| if c % ny < n1 { self.kappa1 } else { self.kappa2 }).collect();
        let top: Vec<Complex64> = grid
            .x_centers()
            .iter()
            .map(|&x| Complex64::new((self.wavenumber() * x).cos(), 0.0))
            .collect();
        let mut p = Problem::new(grid, kappa, 0.0)?;
        p.set_boundary(Side::Top, Boundary::Potential(top))?;
        p.set_boundary(Side::Bottom, Boundary::Potential(vec![Complex64::new(0.0, 0.0); nx]))?;
        let sol = solve_potential(p.assemble()?)?;
        let g = sol.grid();
        // interface value from flux continuity between the two adjacent cells
        let (w1, w2) = (self.kappa1 / g.dy(n1 - 1), self.kappa2 / g.dy(n1));
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..nx {
            let v = (w1 * sol.potential_at(i, n1 - 1) + w2 * sol.potential_at(i, n1)) / (w1 + w2);
            let exact = self.interface_potential(g.x_centers()[i]);
            worst = worst.max((v - exact).norm());
            scale = scale.max(exact.norm());
        }
        Ok(worst / scale)
    }
}

/// Observed order of accuracy from errors at successive grid halvings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
