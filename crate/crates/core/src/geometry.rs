//! Structured cell-centered grids and boundary face classification.
//!
//! Cells of a 2D grid are stored row-major by B then A: cell `(i, j)` lives at
//! `j * n_a + i`. A 1D grid is treated as a 2D grid with a single row of unit
//! height, which makes face measures and cell volumes uniform across
//! dimensions.
//!
//! Face storage per axis:
//!
//! * axis 0 (A): `(n_a + 1) * n_b` faces, face `(i, j)` at `j * (n_a + 1) + i`,
//!   lying between cells `(i - 1, j)` and `(i, j)`.
//! * axis 1 (B): `n_a * (n_b + 1)` faces, face `(i, j)` at `j * n_a + i`,
//!   lying between cells `(i, j - 1)` and `(i, j)`.

use crate::error::{Error, Result};

/// Tolerance used when testing cell centers against the band edge, so that
/// centers lying exactly on `|c_A - c_B| = epsilon` are always inactive.
const BAND_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::invalid("n_cells", "must be positive"));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::invalid(
                "x_max",
                format!("interval [{x_min}, {x_max}] is empty"),
            ));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            dx: (x_max - x_min) / n_cells as f64,
        })
    }

    /// `n_cells` cells on `[0, 1]`.
    pub fn unit(n_cells: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n_cells)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    /// Position of face `i`, `0 <= i <= n_cells`.
    pub fn face(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn locate(&self, x: f64) -> usize {
        let s = ((x - self.x_min) / self.dx).floor();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.n_cells - 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    a: Grid1D,
    b: Grid1D,
    mask: Vec<bool>,
    band: Option<f64>,
}

impl Grid2D {
    /// Fully active rectangle.
    pub fn full(a: Grid1D, b: Grid1D) -> Self {
        Self {
            a,
            b,
            mask: vec![true; a.n_cells() * b.n_cells()],
            band: None,
        }
    }

    pub fn with_mask(a: Grid1D, b: Grid1D, mask: Vec<bool>) -> Result<Self> {
        let expected = a.n_cells() * b.n_cells();
        if mask.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                actual: mask.len(),
            });
        }
        Ok(Self {
            a,
            b,
            mask,
            band: None,
        })
    }

    pub fn axis_a(&self) -> &Grid1D {
        &self.a
    }

    pub fn axis_b(&self) -> &Grid1D {
        &self.b
    }

    /// Half-width of the removed diagonal band, when the mask is one.
    pub fn band(&self) -> Option<f64> {
        self.band
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.a.n_cells() + i
    }

    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.mask[self.index(i, j)]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn cell_area(&self) -> f64 {
        self.a.dx() * self.b.dx()
    }
}

/// Diagonal band mask without the resolution check: cell `(i, j)` is active
/// iff `|c_A(i) - c_B(j)| > epsilon`.
pub fn band_mask(a: Grid1D, b: Grid1D, epsilon: f64) -> Grid2D {
    let mut mask = Vec::with_capacity(a.n_cells() * b.n_cells());
    for j in 0..b.n_cells() {
        let cb = b.center(j);
        for i in 0..a.n_cells() {
            mask.push((a.center(i) - cb).abs() > epsilon + BAND_TIE_TOL);
        }
    }
    Grid2D {
        a,
        b,
        mask,
        band: Some(epsilon),
    }
}

/// Mode-1 domain: the unit square with the band `|x_A - x_B| <= epsilon`
/// removed, approximated cell by cell at the cell centers.
pub fn build_mode1_mask(a: Grid1D, b: Grid1D, epsilon: f64) -> Result<Grid2D> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} is outside (0, 1)"),
        ));
    }
    let two_dx = 2.0 * a.dx().max(b.dx());
    if epsilon < two_dx {
        return Err(Error::UnderResolvedBand { epsilon, two_dx });
    }
    Ok(band_mask(a, b, epsilon))
}

/// Direction of the outward normal along the face's axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Outward normal points toward decreasing coordinate.
    Low,
    /// Outward normal points toward increasing coordinate.
    High,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Low => -1.0,
            Side::High => 1.0,
        }
    }
}

/// Which part of a guard a face belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `x_A - x_B = epsilon`; the active side has `x_A > x_B`.
    Plus,
    /// `x_A - x_B = -epsilon`; the active side has `x_A < x_B`.
    Minus,
    /// Guard at an end point of a 1D domain.
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Reflecting { outward: Side },
    Guard { outward: Side, branch: Branch },
}

impl FaceKind {
    pub fn is_guard(&self) -> bool {
        matches!(self, FaceKind::Guard { .. })
    }
}

/// Boundary treatment at an end of a 1D domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineEnd {
    Reflecting,
    Guard,
}

/// Continuous domain of one mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Mesh {
    Line {
        grid: Grid1D,
        left: LineEnd,
        right: LineEnd,
    },
    Plane(Grid2D),
}

impl Mesh {
    pub fn dim(&self) -> usize {
        match self {
            Mesh::Line { .. } => 1,
            Mesh::Plane(_) => 2,
        }
    }

    /// Cells per axis; a line has a single row along axis 1.
    pub fn shape(&self) -> [usize; 2] {
        match self {
            Mesh::Line { grid, .. } => [grid.n_cells(), 1],
            Mesh::Plane(g) => [g.a.n_cells(), g.b.n_cells()],
        }
    }

    pub fn n_cells(&self) -> usize {
        let [na, nb] = self.shape();
        na * nb
    }

    pub fn axis(&self, axis: usize) -> &Grid1D {
        match (self, axis) {
            (Mesh::Line { grid, .. }, 0) => grid,
            (Mesh::Plane(g), 0) => &g.a,
            (Mesh::Plane(g), 1) => &g.b,
            _ => panic!("axis {axis} out of range for a {}D mesh", self.dim()),
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        match (self, axis) {
            (Mesh::Line { .. }, 1) => 1.0,
            _ => self.axis(axis).dx(),
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing(0) * self.spacing(1)
    }

    /// Measure of a face normal to `axis` (1 for the end points of a line).
    pub fn face_measure(&self, axis: usize) -> f64 {
        self.spacing(1 - axis)
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.shape()[0] + i
    }

    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        let na = self.shape()[0];
        (cell % na, cell / na)
    }

    pub fn is_active(&self, cell: usize) -> bool {
        match self {
            Mesh::Line { .. } => true,
            Mesh::Plane(g) => g.mask[cell],
        }
    }

    pub fn active_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_cells()).filter(move |&c| self.is_active(c))
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let (i, j) = self.cell_ij(cell);
        match self {
            Mesh::Line { grid, .. } => [grid.center(i), 0.0],
            Mesh::Plane(g) => [g.a.center(i), g.b.center(j)],
        }
    }

    /// Number of faces normal to `axis`.
    pub fn face_count(&self, axis: usize) -> usize {
        let [na, nb] = self.shape();
        match axis {
            0 => (na + 1) * nb,
            1 if self.dim() == 2 => na * (nb + 1),
            _ => 0,
        }
    }

    pub fn face_index(&self, axis: usize, i: usize, j: usize) -> usize {
        let [na, _] = self.shape();
        match axis {
            0 => j * (na + 1) + i,
            _ => j * na + i,
        }
    }

    pub fn face_ij(&self, axis: usize, face: usize) -> (usize, usize) {
        let [na, _] = self.shape();
        match axis {
            0 => (face % (na + 1), face / (na + 1)),
            _ => (face % na, face / na),
        }
    }

    pub fn face_centroid(&self, axis: usize, face: usize) -> [f64; 2] {
        let (i, j) = self.face_ij(axis, face);
        match self {
            Mesh::Line { grid, .. } => [grid.face(i), 0.0],
            Mesh::Plane(g) => match axis {
                0 => [g.a.face(i), g.b.center(j)],
                _ => [g.a.center(i), g.b.face(j)],
            },
        }
    }

    /// Cells on the low and high side of a face (`None` outside the grid).
    pub fn face_cells(&self, axis: usize, face: usize) -> (Option<usize>, Option<usize>) {
        let (i, j) = self.face_ij(axis, face);
        let [na, nb] = self.shape();
        match axis {
            0 => (
                (i > 0).then(|| self.cell_index(i - 1, j)),
                (i < na).then(|| self.cell_index(i, j)),
            ),
            _ => (
                (j > 0).then(|| self.cell_index(i, j - 1)),
                (j < nb).then(|| self.cell_index(i, j)),
            ),
        }
    }

    /// The two faces of `cell` normal to `axis`, low then high.
    pub fn cell_faces(&self, cell: usize, axis: usize) -> (usize, usize) {
        let (i, j) = self.cell_ij(cell);
        match axis {
            0 => (self.face_index(0, i, j), self.face_index(0, i + 1, j)),
            _ => (self.face_index(1, i, j), self.face_index(1, i, j + 1)),
        }
    }

    /// Cell containing `point`, clamped to the grid. May be inactive.
    pub fn locate(&self, point: [f64; 2]) -> usize {
        match self {
            Mesh::Line { grid, .. } => grid.locate(point[0]),
            Mesh::Plane(g) => g.index(g.a.locate(point[0]), g.b.locate(point[1])),
        }
    }

    /// Whether `point` lies in the closed bounding box of the grid.
    pub fn contains(&self, point: [f64; 2]) -> bool {
        (0..self.dim()).all(|k| {
            let g = self.axis(k);
            point[k] >= g.x_min() && point[k] <= g.x_max()
        })
    }
}

/// Classification of every face touching an active cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceClassification {
    axes: [Vec<Option<FaceKind>>; 2],
    degenerate: Vec<usize>,
}

/// Face totals by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FaceCounts {
    pub interior: usize,
    pub reflecting: usize,
    pub guard: usize,
}

impl FaceClassification {
    /// Kind of face `face` normal to `axis`, or `None` when neither side is
    /// an active cell.
    pub fn kind(&self, axis: usize, face: usize) -> Option<FaceKind> {
        self.axes[axis].get(face).copied().flatten()
    }

    pub fn counts(&self) -> FaceCounts {
        let mut c = FaceCounts::default();
        for kind in self.axes.iter().flatten().flatten() {
            match kind {
                FaceKind::Interior => c.interior += 1,
                FaceKind::Reflecting { .. } => c.reflecting += 1,
                FaceKind::Guard { .. } => c.guard += 1,
            }
        }
        c
    }

    /// All guard faces as `(axis, face, outward side, branch)`.
    pub fn guard_faces(&self) -> impl Iterator<Item = (usize, usize, Side, Branch)> + '_ {
        self.axes.iter().enumerate().flat_map(|(axis, faces)| {
            faces.iter().enumerate().filter_map(move |(f, k)| match k {
                Some(FaceKind::Guard { outward, branch }) => Some((axis, f, *outward, *branch)),
                _ => None,
            })
        })
    }

    pub fn has_guards(&self) -> bool {
        self.guard_faces().next().is_some()
    }

    /// Active cells without a single interior face.
    pub fn degenerate_cells(&self) -> &[usize] {
        &self.degenerate
    }
}

/// Classifies the faces of a mesh. Line ends follow the mesh's end kinds;
/// for a plane, outer faces are reflecting and faces between an active and an
/// inactive cell are guards.
pub fn classify_faces(mesh: &Mesh) -> FaceClassification {
    match mesh {
        Mesh::Line { grid, left, right } => classify_faces_line(grid, *left, *right),
        Mesh::Plane(g) => classify_faces_mode1(g),
    }
}

pub fn classify_faces_line(grid: &Grid1D, left: LineEnd, right: LineEnd) -> FaceClassification {
    let n = grid.n_cells();
    let end = |e: LineEnd, outward: Side| match e {
        LineEnd::Reflecting => FaceKind::Reflecting { outward },
        LineEnd::Guard => FaceKind::Guard {
            outward,
            branch: Branch::End,
        },
    };
    let mut faces = vec![Some(FaceKind::Interior); n + 1];
    faces[0] = Some(end(left, Side::Low));
    faces[n] = Some(end(right, Side::High));
    let degenerate = if n == 1 { vec![0] } else { Vec::new() };
    FaceClassification {
        axes: [faces, Vec::new()],
        degenerate,
    }
}

/// Mode-2 faces: reflecting at the left end, guard at the right end.
pub fn classify_faces_mode2(grid: &Grid1D) -> FaceClassification {
    classify_faces_line(grid, LineEnd::Reflecting, LineEnd::Guard)
}

/// Mode-1 faces for a (possibly band-masked) square.
pub fn classify_faces_mode1(grid: &Grid2D) -> FaceClassification {
    let na = grid.a.n_cells();
    let nb = grid.b.n_cells();
    let active = |i: usize, j: usize| grid.is_active(i, j);
    let branch_of = |i: usize, j: usize| {
        if grid.a.center(i) > grid.b.center(j) {
            Branch::Plus
        } else {
            Branch::Minus
        }
    };
    // `lo`/`hi` are the cells on either side; `None` means outside the square.
    let classify = |lo: Option<(usize, usize)>, hi: Option<(usize, usize)>| -> Option<FaceKind> {
        let lo_active = lo.map(|(i, j)| active(i, j));
        let hi_active = hi.map(|(i, j)| active(i, j));
        match (lo_active, hi_active) {
            (Some(true), Some(true)) => Some(FaceKind::Interior),
            (Some(true), None) => Some(FaceKind::Reflecting {
                outward: Side::High,
            }),
            (None, Some(true)) => Some(FaceKind::Reflecting {
                outward: Side::Low,
            }),
            (Some(true), Some(false)) => {
                let (i, j) = lo.unwrap();
                Some(FaceKind::Guard {
                    outward: Side::High,
                    branch: branch_of(i, j),
                })
            }
            (Some(false), Some(true)) => {
                let (i, j) = hi.unwrap();
                Some(FaceKind::Guard {
                    outward: Side::Low,
                    branch: branch_of(i, j),
                })
            }
            _ => None,
        }
    };

    let mut a_faces = Vec::with_capacity((na + 1) * nb);
    for j in 0..nb {
        for i in 0..=na {
            let lo = (i > 0).then(|| (i - 1, j));
            let hi = (i < na).then_some((i, j));
            a_faces.push(classify(lo, hi));
        }
    }
    let mut b_faces = Vec::with_capacity(na * (nb + 1));
    for j in 0..=nb {
        for i in 0..na {
            let lo = (j > 0).then(|| (i, j - 1));
            let hi = (j < nb).then_some((i, j));
            b_faces.push(classify(lo, hi));
        }
    }

    let mut degenerate = Vec::new();
    for j in 0..nb {
        for i in 0..na {
            if !active(i, j) {
                continue;
            }
            let faces = [
                a_faces[j * (na + 1) + i],
                a_faces[j * (na + 1) + i + 1],
                b_faces[j * na + i],
                b_faces[(j + 1) * na + i],
            ];
            if !faces.contains(&Some(FaceKind::Interior)) {
                degenerate.push(grid.index(i, j));
            }
        }
    }
    if !degenerate.is_empty() {
        log::warn!(
            "{} active cell(s) have no interior face (degenerate band corners)",
            degenerate.len()
        );
    }

    FaceClassification {
        axes: [a_faces, b_faces],
        degenerate,
    }
}
