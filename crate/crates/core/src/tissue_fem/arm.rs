//! Layered arm slice with implanted electrode pairs.
//!
//! The solved domain is a longitudinal slice through the arm axis: `x` runs
//! along the arm, `y` runs from the skin surface (`y = 0`) through the layers,
//! across the bone core and out through the layers on the far side. Layers
//! are given from the skin inward to the axis; the far half mirrors them.
//! A radius-only slice (insulating at the axis) is available, but it implies
//! a mirrored set of electrodes on the far side.
//!
//! Electrodes are 20 mm segments across the depth direction; their radius
//! collapses to one cell column.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assembly::{LinearSystem, Problem};
use super::dielectric::{DielectricSpectrum, TissueTable};
use super::grid::{uniform_edges, Grid2d};
use super::solver::{solve_potential, FieldSolution};
use super::FemError;
use crate::response::FrequencyResponse;

pub const MIN_LAYER_NODES: usize = 3;
pub const TX_POSITIVE_VOLTS: f64 = 0.5;
pub const TX_NEGATIVE_VOLTS: f64 = -0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElectrodeRole {
    #[serde(rename = "tx+")]
    TxPos,
    #[serde(rename = "tx-")]
    TxNeg,
    #[serde(rename = "rx+")]
    RxPos,
    #[serde(rename = "rx-")]
    RxNeg,
}

impl ElectrodeRole {
    pub const ALL: [ElectrodeRole; 4] = [Self::TxPos, Self::TxNeg, Self::RxPos, Self::RxNeg];

    /// The role an electrode takes when transmitter and receiver swap.
    pub fn swapped(self) -> Self {
        match self {
            Self::TxPos => Self::RxPos,
            Self::TxNeg => Self::RxNeg,
            Self::RxPos => Self::TxPos,
            Self::RxNeg => Self::TxNeg,
        }
    }
}

impl fmt::Display for ElectrodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TxPos => "tx+",
            Self::TxNeg => "tx-",
            Self::RxPos => "rx+",
            Self::RxNeg => "rx-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Electrode {
    pub role: ElectrodeRole,
    /// Position along the arm.
    pub x_mm: f64,
    /// Depth of the segment centre below the skin surface.
    pub depth_mm: f64,
    pub height_mm: f64,
    pub radius_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TissueLayer {
    pub name: String,
    pub thickness_mm: f64,
    pub spectrum: DielectricSpectrum,
}

/// Grid density for an arm solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridResolution {
    /// Cells across every layer, at least [`MIN_LAYER_NODES`].
    pub min_layer_nodes: usize,
    /// Target cell length along the arm.
    pub dx_mm: f64,
    /// Largest cell height within a layer.
    pub dy_max_mm: f64,
}

impl Default for GridResolution {
    fn default() -> Self {
        Self { min_layer_nodes: MIN_LAYER_NODES, dx_mm: 4.0, dy_max_mm: 1.0 }
    }
}

impl GridResolution {
    /// Same grid with every cell split `factor` times per axis.
    pub fn refined(self, factor: usize) -> Self {
        let f = factor.max(1);
        Self {
            min_layer_nodes: self.min_layer_nodes * f,
            dx_mm: self.dx_mm / f as f64,
            dy_max_mm: self.dy_max_mm / f as f64,
        }
    }
}

/// Extent of the slice across the arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceExtent {
    /// Skin to skin through the axis.
    #[default]
    Diameter,
    /// Skin to axis, with an insulating axis plane.
    Radius,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    layers: Vec<TissueLayer>,
    length_mm: f64,
    electrodes: Vec<Electrode>,
    extent: SliceExtent,
}

impl ArmModel {
    /// Layers run from the skin inward to the axis. Exactly one electrode per
    /// role, each fully inside the tissue.
    pub fn new(
        layers: Vec<TissueLayer>,
        length_mm: f64,
        electrodes: Vec<Electrode>,
        extent: SliceExtent,
    ) -> Result<Self, FemError> {
        let bad = |m: String| Err(FemError::InvalidGeometry(m));
        if layers.is_empty() {
            return bad("at least one tissue layer is required".into());
        }
        if let Some(l) = layers.iter().find(|l| !(l.thickness_mm.is_finite() && l.thickness_mm > 0.0)) {
            return bad(format!("layer {} has non-positive thickness", l.name));
        }
        if !(length_mm.is_finite() && length_mm > 0.0) {
            return bad("arm length must be positive".into());
        }
        let radius: f64 = layers.iter().map(|l| l.thickness_mm).sum();
        let depth = match extent {
            SliceExtent::Diameter => 2.0 * radius,
            SliceExtent::Radius => radius,
        };
        for role in ElectrodeRole::ALL {
            let n = electrodes.iter().filter(|e| e.role == role).count();
            if n != 1 {
                return bad(format!("expected exactly one {role} electrode, found {n}"));
            }
        }
        if electrodes.len() != 4 {
            return bad("the model takes one tx pair and one rx pair".into());
        }
        for e in &electrodes {
            let top = e.depth_mm - 0.5 * e.height_mm;
            let bottom = e.depth_mm + 0.5 * e.height_mm;
            let finite = [e.x_mm, e.depth_mm, e.height_mm, e.radius_mm].iter().all(|v| v.is_finite());
            if !finite || e.height_mm <= 0.0 || e.radius_mm <= 0.0 {
                return bad(format!("{} electrode needs positive finite dimensions", e.role));
            }
            if e.x_mm <= 0.0 || e.x_mm >= length_mm || top < 0.0 || bottom > depth {
                return bad(format!("{} electrode extends outside the tissue", e.role));
            }
        }
        Ok(Self { layers, length_mm, electrodes, extent })
    }

    /// Default arm geometry with the bundled tissue data.
    pub fn reference() -> Self {
        ArmGeometry::default().build(&TissueTable::bundled()).expect("default geometry is valid")
    }

    pub fn layers(&self) -> &[TissueLayer] {
        &self.layers
    }

    pub fn length_mm(&self) -> f64 {
        self.length_mm
    }

    pub fn extent(&self) -> SliceExtent {
        self.extent
    }

    /// Slice height from the near skin surface.
    pub fn depth_mm(&self) -> f64 {
        self.profile().iter().map(|p| p.1).sum()
    }

    /// `(layer index, thickness)` from the near skin surface across the slice;
    /// for a full diameter the innermost layer is one band of twice its
    /// thickness.
    pub fn profile(&self) -> Vec<(usize, f64)> {
        let mut p: Vec<(usize, f64)> = self.layers.iter().map(|l| l.thickness_mm).enumerate().collect();
        if self.extent == SliceExtent::Diameter {
            let n = p.len();
            p[n - 1].1 *= 2.0;
            let far: Vec<_> = p[..n - 1].iter().rev().copied().collect();
            p.extend(far);
        }
        p
    }

    pub fn electrodes(&self) -> &[Electrode] {
        &self.electrodes
    }

    pub fn electrode(&self, role: ElectrodeRole) -> &Electrode {
        self.electrodes.iter().find(|e| e.role == role).expect("validated")
    }

    /// Distance between the tx pair midpoint and the rx pair midpoint.
    pub fn tx_rx_separation_mm(&self) -> f64 {
        let mid = |a: ElectrodeRole, b: ElectrodeRole| 0.5 * (self.electrode(a).x_mm + self.electrode(b).x_mm);
        (mid(ElectrodeRole::RxPos, ElectrodeRole::RxNeg) - mid(ElectrodeRole::TxPos, ElectrodeRole::TxNeg)).abs()
    }

    pub fn intra_pair_spacing_mm(&self) -> f64 {
        (self.electrode(ElectrodeRole::TxPos).x_mm - self.electrode(ElectrodeRole::TxNeg).x_mm).abs()
    }

    /// Transmitter and receiver exchange places.
    pub fn with_roles_swapped(&self) -> Self {
        let mut m = self.clone();
        for e in &mut m.electrodes {
            e.role = e.role.swapped();
        }
        m
    }

    /// Every layer replaced by the same material (geometry unchanged).
    pub fn with_uniform_tissue(&self, spectrum: &DielectricSpectrum) -> Self {
        let mut m = self.clone();
        for l in &mut m.layers {
            l.spectrum = spectrum.clone();
        }
        m
    }

    /// Grid for the slice and the layer index of every row.
    pub fn grid(&self, res: &GridResolution) -> Result<(Grid2d, Vec<usize>), FemError> {
        let thinnest = self
            .layers
            .iter()
            .min_by(|a, b| a.thickness_mm.total_cmp(&b.thickness_mm))
            .expect("non-empty");
        if res.min_layer_nodes < MIN_LAYER_NODES {
            return Err(FemError::ResolutionTooCoarse {
                layer: thinnest.name.clone(),
                nodes: res.min_layer_nodes,
                required: MIN_LAYER_NODES,
            });
        }
        if !(res.dx_mm.is_finite() && res.dx_mm > 0.0 && res.dy_max_mm.is_finite() && res.dy_max_mm > 0.0) {
            return Err(FemError::InvalidGeometry("cell sizes must be positive".into()));
        }
        let nx = ((self.length_mm / res.dx_mm).ceil() as usize).max(1);
        let x_edges = uniform_edges(0.0, self.length_mm * 1e-3, nx);
        let mut y_edges = vec![0.0];
        let mut layer_of_row = Vec::new();
        let mut top = 0.0;
        for (k, thickness) in self.profile() {
            let n = res.min_layer_nodes.max((thickness / res.dy_max_mm).ceil() as usize);
            let bottom = top + thickness;
            let edges = uniform_edges(top * 1e-3, bottom * 1e-3, n);
            y_edges.extend_from_slice(&edges[1..]);
            layer_of_row.extend(std::iter::repeat_n(k, n));
            top = bottom;
        }
        Ok((Grid2d::from_edges(x_edges, y_edges)?, layer_of_row))
    }

    /// Cells occupied by each electrode: the column(s) nearest its position
    /// (both on an exact tie) and every row whose centre lies on the segment.
    /// Receive electrodes may share cells with the drive pair; the two drive
    /// electrodes may not overlap.
    pub fn electrode_cells(&self, grid: &Grid2d) -> Result<BTreeMap<ElectrodeRole, Vec<usize>>, FemError> {
        let mut out: BTreeMap<ElectrodeRole, Vec<usize>> = BTreeMap::new();
        for e in &self.electrodes {
            let x = e.x_mm * 1e-3;
            let tol = 1e-9 * grid.width();
            let dmin = grid.x_centers().iter().map(|c| (c - x).abs()).fold(f64::INFINITY, f64::min);
            let cols: Vec<usize> = (0..grid.nx()).filter(|&i| (grid.x_centers()[i] - x).abs() <= dmin + tol).collect();
            let y0 = (e.depth_mm - 0.5 * e.height_mm) * 1e-3 - 1e-12;
            let y1 = (e.depth_mm + 0.5 * e.height_mm) * 1e-3 + 1e-12;
            let rows: Vec<usize> = (0..grid.ny()).filter(|&j| (y0..=y1).contains(&grid.y_centers()[j])).collect();
            let cells: Vec<usize> = cols.iter().flat_map(|&i| rows.iter().map(move |&j| grid.index(i, j))).collect();
            if cells.is_empty() {
                return Err(FemError::EmptyElectrode { role: e.role });
            }
            out.insert(e.role, cells);
        }
        let neg = &out[&ElectrodeRole::TxNeg];
        if out[&ElectrodeRole::TxPos].iter().any(|c| neg.contains(c)) {
            return Err(FemError::InvalidGeometry(
                "tx+ and tx- electrodes share grid cells; refine the grid".into(),
            ));
        }
        Ok(out)
    }
}

/// Builds the quasi-static system for one frequency: per-cell admittivity
/// from the layer spectra, tx+ held at +0.5 V and tx− at −0.5 V, insulating
/// outer boundary.
pub fn assemble_system(model: &ArmModel, frequency: f64, res: &GridResolution) -> Result<LinearSystem, FemError> {
    if !(frequency.is_finite() && frequency >= 0.0) {
        return Err(FemError::InvalidFrequency(frequency));
    }
    let (grid, layer_of_row) = model.grid(res)?;
    let cells = model.electrode_cells(&grid)?;
    let row_kappa: Vec<Complex64> = layer_of_row
        .iter()
        .map(|&k| model.layers[k].spectrum.admittivity(frequency))
        .collect();
    let ny = grid.ny();
    let kappa = (0..grid.cell_count()).map(|c| row_kappa[c % ny]).collect();
    let mut p = Problem::new(grid, kappa, frequency)?;
    p.fix_cells(&cells[&ElectrodeRole::TxPos], Complex64::new(TX_POSITIVE_VOLTS, 0.0))?;
    p.fix_cells(&cells[&ElectrodeRole::TxNeg], Complex64::new(TX_NEGATIVE_VOLTS, 0.0))?;
    p.assemble()
}

fn mean_potential(sol: &FieldSolution, cells: &[usize]) -> Complex64 {
    cells.iter().map(|&c| sol.potential()[c]).sum::<Complex64>() / cells.len() as f64
}

/// `V_R`: mean potential over the rx+ cells minus mean over the rx− cells.
pub fn receive_voltage(sol: &FieldSolution, model: &ArmModel) -> Result<Complex64, FemError> {
    let cells = model.electrode_cells(sol.grid())?;
    Ok(mean_potential(sol, &cells[&ElectrodeRole::RxPos]) - mean_potential(sol, &cells[&ElectrodeRole::RxNeg]))
}

/// `V_T`: the same difference over the tx pair (1 V by construction).
pub fn transmit_voltage(sol: &FieldSolution, model: &ArmModel) -> Result<Complex64, FemError> {
    let cells = model.electrode_cells(sol.grid())?;
    Ok(mean_potential(sol, &cells[&ElectrodeRole::TxPos]) - mean_potential(sol, &cells[&ElectrodeRole::TxNeg]))
}

/// Current per metre of depth leaving the tx+ electrode.
pub fn injected_current(sol: &FieldSolution, model: &ArmModel) -> Result<Complex64, FemError> {
    let cells = model.electrode_cells(sol.grid())?;
    Ok(sol.net_current(&cells[&ElectrodeRole::TxPos]))
}

/// Assemble and solve at one frequency.
pub fn solve_arm(model: &ArmModel, frequency: f64, res: &GridResolution) -> Result<FieldSolution, FemError> {
    solve_potential(assemble_system(model, frequency, res)?)
}

/// `V_R / V_T` of a solved arm.
pub fn arm_gain(sol: &FieldSolution, model: &ArmModel) -> Result<Complex64, FemError> {
    Ok(receive_voltage(sol, model)? / transmit_voltage(sol, model)?)
}

/// Solves every frequency in parallel, keeping grid order; the first failing
/// frequency (in grid order) is reported.
pub fn solve_sweep(model: &ArmModel, freqs: &[f64], res: &GridResolution) -> Result<Vec<FieldSolution>, FemError> {
    sweep_map(freqs, |f| solve_arm(model, f, res))
}

/// Complex gain `V_R / V_T` per frequency, solved in parallel.
pub fn gain_sweep(model: &ArmModel, freqs: &[f64], res: &GridResolution) -> Result<FrequencyResponse, FemError> {
    let gains = sweep_map(freqs, |f| arm_gain(&solve_arm(model, f, res)?, model))?;
    Ok(FrequencyResponse::new(freqs.to_vec(), gains)?)
}

fn sweep_map<T: Send>(freqs: &[f64], f: impl Fn(f64) -> Result<T, FemError> + Sync) -> Result<Vec<T>, FemError> {
    let results: Vec<Result<T, FemError>> = freqs.par_iter().map(|&x| f(x)).collect();
    results
        .into_iter()
        .zip(freqs)
        .map(|(r, &frequency)| r.map_err(|e| FemError::AtFrequency { frequency, source: Box::new(e) }))
        .collect()
}

/// One layer of an [`ArmGeometry`], naming a tissue of the property table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub tissue: String,
    pub thickness_mm: f64,
}

/// Serializable arm description resolved against a tissue table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmGeometry {
    pub length_mm: f64,
    /// Skin first.
    pub layers: Vec<LayerSpec>,
    pub tx_rx_separation_mm: f64,
    pub intra_pair_spacing_mm: f64,
    pub electrode_height_mm: f64,
    pub electrode_radius_mm: f64,
    /// Electrode centre depth; defaults to the middle of the first muscle layer.
    pub electrode_depth_mm: Option<f64>,
    /// Midpoint between the pairs; defaults to the middle of the arm.
    pub center_mm: Option<f64>,
    pub extent: SliceExtent,
}

impl Default for ArmGeometry {
    fn default() -> Self {
        let layer = |t: &str, d: f64| LayerSpec { tissue: t.into(), thickness_mm: d };
        Self {
            length_mm: 600.0,
            layers: vec![
                layer("skin", 1.5),
                layer("fat", 8.5),
                layer("muscle", 27.5),
                layer("cortical_bone", 6.0),
                layer("cancellous_bone", 6.5),
            ],
            tx_rx_separation_mm: 100.0,
            intra_pair_spacing_mm: 40.0,
            electrode_height_mm: 20.0,
            electrode_radius_mm: 1.0,
            electrode_depth_mm: None,
            center_mm: None,
            extent: SliceExtent::Diameter,
        }
    }
}

impl ArmGeometry {
    pub fn build(&self, table: &TissueTable) -> Result<ArmModel, FemError> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                Ok(TissueLayer {
                    name: l.tissue.clone(),
                    thickness_mm: l.thickness_mm,
                    spectrum: table.get(&l.tissue)?.clone(),
                })
            })
            .collect::<Result<Vec<_>, FemError>>()?;
        let depth = match self.electrode_depth_mm {
            Some(d) => d,
            None => {
                let mut top = 0.0;
                let mut mid = None;
                for l in &self.layers {
                    if l.tissue == "muscle" {
                        mid = Some(top + 0.5 * l.thickness_mm);
                        break;
                    }
                    top += l.thickness_mm;
                }
                mid.ok_or_else(|| {
                    FemError::InvalidGeometry("no muscle layer: set electrode_depth_mm explicitly".into())
                })?
            }
        };
        let center = self.center_mm.unwrap_or(0.5 * self.length_mm);
        let (half_sep, half_pair) = (0.5 * self.tx_rx_separation_mm, 0.5 * self.intra_pair_spacing_mm);
        let at = |role, x_mm| Electrode {
            role,
            x_mm,
            depth_mm: depth,
            height_mm: self.electrode_height_mm,
            radius_mm: self.electrode_radius_mm,
        };
        let electrodes = vec![
            at(ElectrodeRole::TxPos, center - half_sep - half_pair),
            at(ElectrodeRole::TxNeg, center - half_sep + half_pair),
            at(ElectrodeRole::RxPos, center + half_sep - half_pair),
            at(ElectrodeRole::RxNeg, center + half_sep + half_pair),
        ];
        ArmModel::new(layers, self.length_mm, electrodes, self.extent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> GridResolution {
        GridResolution { min_layer_nodes: 3, dx_mm: 5.0, dy_max_mm: 2.5 }
    }

    fn homogeneous() -> ArmModel {
        ArmModel::reference().with_uniform_tissue(&DielectricSpectrum::constant(0.4, 2000.0).unwrap())
    }

    #[test]
    fn default_geometry() {
        let m = ArmModel::reference();
        assert_eq!(m.depth_mm(), 100.0);
        assert_eq!(m.tx_rx_separation_mm(), 100.0);
        assert_eq!(m.intra_pair_spacing_mm(), 40.0);
        let e = m.electrode(ElectrodeRole::TxPos);
        assert_eq!((e.x_mm, e.depth_mm), (230.0, 23.75));
        let (g, rows) = m.grid(&GridResolution::default()).unwrap();
        assert_eq!(g.nx(), 150);
        // skin 3 (minimum), fat 9, muscle 28, cortical 6 on each side around
        // a 13 mm cancellous core
        assert_eq!(g.ny(), 2 * (3 + 9 + 28 + 6) + 13);
        assert_eq!(rows.iter().filter(|&&k| k == 0).count(), 6);
        assert_eq!(rows[g.ny() - 1], 0);
        assert!((g.height() - 0.1).abs() < 1e-15);
        let half = ArmGeometry { extent: SliceExtent::Radius, ..Default::default() };
        let m = half.build(&TissueTable::bundled()).unwrap();
        assert_eq!(m.depth_mm(), 50.0);
        assert_eq!(m.grid(&GridResolution::default()).unwrap().0.ny(), 53);
    }

    #[test]
    fn resolution_and_electrode_errors() {
        let m = ArmModel::reference();
        let res = GridResolution { min_layer_nodes: 2, ..Default::default() };
        assert!(matches!(assemble_system(&m, 1e5, &res), Err(FemError::ResolutionTooCoarse { nodes: 2, .. })));
        // a segment thinner than one cell, falling between cell centres
        let geo = ArmGeometry { electrode_height_mm: 0.1, electrode_depth_mm: Some(24.3), ..Default::default() };
        let m = geo.build(&TissueTable::bundled()).unwrap();
        assert!(matches!(
            assemble_system(&m, 1e5, &GridResolution::default()),
            Err(FemError::EmptyElectrode { .. })
        ));
        let geo = ArmGeometry { electrode_depth_mm: Some(95.0), ..Default::default() };
        assert!(matches!(geo.build(&TissueTable::bundled()), Err(FemError::InvalidGeometry(_))));
        // pairs closer than a cell collapse onto the same column
        let geo = ArmGeometry { intra_pair_spacing_mm: 1.0, ..Default::default() };
        let m = geo.build(&TissueTable::bundled()).unwrap();
        assert!(matches!(
            assemble_system(&m, 1e5, &GridResolution::default()),
            Err(FemError::InvalidGeometry(_))
        ));
    }

    #[test]
    fn tied_columns_are_both_used() {
        let m = ArmModel::reference();
        // 5 mm cells: 230 mm sits on the edge between centres 227.5 and 232.5
        let res = GridResolution { dx_mm: 5.0, ..Default::default() };
        let (g, _) = m.grid(&res).unwrap();
        let cells = m.electrode_cells(&g).unwrap();
        let cols: std::collections::BTreeSet<usize> =
            cells[&ElectrodeRole::TxPos].iter().map(|&c| g.coords(c).0).collect();
        assert_eq!(cols.into_iter().collect::<Vec<_>>(), vec![45, 46]);
    }

    #[test]
    fn transmit_voltage_is_one() {
        let m = ArmModel::reference();
        let sol = solve_arm(&m, 1e6, &coarse()).unwrap();
        assert!((transmit_voltage(&sol, &m).unwrap() - 1.0).norm() < 1e-15);
        let vr = receive_voltage(&sol, &m).unwrap();
        assert!(vr.norm() > 0.0 && vr.norm() < 1.0);
    }

    #[test]
    fn antisymmetric_about_the_pair_midplane() {
        // rx pair on the tx mid-plane at equal offsets: symmetric geometry,
        // antisymmetric drive
        let geo = ArmGeometry { tx_rx_separation_mm: 0.0, intra_pair_spacing_mm: 40.0, ..Default::default() };
        let mut m = geo.build(&TissueTable::bundled()).unwrap();
        // put the receive pair on the mid-plane, one above the other
        m.electrodes[2] = Electrode { x_mm: 300.0, depth_mm: 15.0, height_mm: 4.0, ..m.electrodes[2] };
        m.electrodes[3] = Electrode { x_mm: 300.0, depth_mm: 30.0, height_mm: 4.0, ..m.electrodes[3] };
        let res = GridResolution { dx_mm: 4.0, ..coarse() };
        let sol = solve_arm(&m, 5e5, &res).unwrap();
        let g = sol.grid();
        let mut worst: f64 = 0.0;
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                let a = sol.potential_at(i, j);
                let b = sol.potential_at(g.nx() - 1 - i, j);
                worst = worst.max((a + b).norm());
            }
        }
        assert!(worst < 1e-6, "{worst}");
        assert!(receive_voltage(&sol, &m).unwrap().norm() < 1e-6);
    }

    #[test]
    fn collocated_receiver_sees_the_transmit_voltage() {
        let mut m = homogeneous();
        for k in [2, 3] {
            let tx = m.electrodes[k - 2];
            m.electrodes[k] = Electrode { role: m.electrodes[k].role, ..tx };
        }
        let sol = solve_arm(&m, 1e5, &coarse()).unwrap();
        assert!((receive_voltage(&sol, &m).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn sweep_is_ordered_and_tags_failures() {
        let m = ArmModel::reference();
        let freqs = [1e5, 1e6, 2.5e6];
        let r = gain_sweep(&m, &freqs, &coarse()).unwrap();
        assert_eq!(r.freqs(), &freqs);
        for (k, &f) in freqs.iter().enumerate() {
            let sol = solve_arm(&m, f, &coarse()).unwrap();
            assert_eq!(r.gains()[k], receive_voltage(&sol, &m).unwrap());
        }
        match gain_sweep(&m, &[1e5, -1.0], &coarse()) {
            Err(FemError::AtFrequency { frequency, .. }) => assert_eq!(frequency, -1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uniform_scaling_leaves_the_gain_unchanged() {
        let m = ArmModel::reference();
        let base = gain_sweep(&m, &[0.0], &coarse()).unwrap().gains()[0];
        let mut scaled = m.clone();
        for l in &mut scaled.layers {
            let (s, e) = l.spectrum.at(0.0);
            l.spectrum = DielectricSpectrum::constant(7.5 * s, e).unwrap();
        }
        let g = gain_sweep(&scaled, &[0.0], &coarse()).unwrap().gains()[0];
        // V_R is a small difference of O(1) potentials; roundoff sets the floor
        assert!((g - base).norm() / base.norm() < 1e-8, "{g} {base}");
        assert_eq!(g.im, 0.0);
    }

    #[test]
    fn geometry_roundtrips_through_toml() {
        let g = ArmGeometry { electrode_depth_mm: Some(20.0), ..Default::default() };
        let text = toml::to_string(&g).unwrap();
        assert_eq!(toml::from_str::<ArmGeometry>(&text).unwrap(), g);
        let partial: ArmGeometry = toml::from_str("tx_rx_separation_mm = 80.0").unwrap();
        assert_eq!(partial.length_mm, 600.0);
        assert_eq!(partial.tx_rx_separation_mm, 80.0);
    }
}
