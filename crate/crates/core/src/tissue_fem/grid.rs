//! Structured tensor-product grid of rectangular cells. Unknowns live at cell
//! centres and are numbered x-major (`i * ny + j`), so the assembled matrix
//! has half-bandwidth `ny`.

use super::FemError;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2d {
    x_edges: Vec<f64>,
    y_edges: Vec<f64>,
    x_centers: Vec<f64>,
    y_centers: Vec<f64>,
}

fn centers(edges: &[f64]) -> Vec<f64> {
    edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

impl Grid2d {
    /// Grid from cell edge coordinates (metres); both lists strictly increasing
    /// with at least two entries.
    pub fn from_edges(x_edges: Vec<f64>, y_edges: Vec<f64>) -> Result<Self, FemError> {
        for (axis, e) in [("x", &x_edges), ("y", &y_edges)] {
            if e.len() < 2 || e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| w[1] <= w[0]) {
                return Err(FemError::InvalidGeometry(format!(
                    "{axis} edges must be finite, strictly increasing, at least two"
                )));
            }
        }
        Ok(Self {
            x_centers: centers(&x_edges),
            y_centers: centers(&y_edges),
            x_edges,
            y_edges,
        })
    }

    /// `nx × ny` equal cells covering `[0, width] × [0, height]`.
    pub fn uniform(width: f64, height: f64, nx: usize, ny: usize) -> Result<Self, FemError> {
        if nx == 0 || ny == 0 {
            return Err(FemError::InvalidGeometry("grid needs at least one cell per axis".into()));
        }
        Self::from_edges(uniform_edges(0.0, width, nx), uniform_edges(0.0, height, ny))
    }

    pub fn nx(&self) -> usize {
        self.x_centers.len()
    }

    pub fn ny(&self) -> usize {
        self.y_centers.len()
    }

    pub fn cell_count(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny() + j
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.ny(), cell % self.ny())
    }

    pub fn x_edges(&self) -> &[f64] {
        &self.x_edges
    }

    pub fn y_edges(&self) -> &[f64] {
        &self.y_edges
    }

    pub fn x_centers(&self) -> &[f64] {
        &self.x_centers
    }

    pub fn y_centers(&self) -> &[f64] {
        &self.y_centers
    }

    pub fn dx(&self, i: usize) -> f64 {
        self.x_edges[i + 1] - self.x_edges[i]
    }

    pub fn dy(&self, j: usize) -> f64 {
        self.y_edges[j + 1] - self.y_edges[j]
    }

    pub fn width(&self) -> f64 {
        self.x_edges[self.nx()] - self.x_edges[0]
    }

    pub fn height(&self) -> f64 {
        self.y_edges[self.ny()] - self.y_edges[0]
    }
}

pub(crate) fn uniform_edges(start: f64, stop: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            if k == n {
                stop
            } else {
                start + (stop - start) * k as f64 / n as f64
            }
        })
        .collect()
}
