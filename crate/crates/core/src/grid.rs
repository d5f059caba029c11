use crate::geometry::DomainSpec;

/// Cartesian node lattice: (x, y) nodes `x0 + i·dx`, `y0 + j·dy`, and a
/// periodic z direction with `nz` nodes at `k·dz`, `dz = lz / nz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub lz: f64,
}

impl Grid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nx: usize,
        ny: usize,
        nz: usize,
        x0: f64,
        y0: f64,
        dx: f64,
        dy: f64,
        lz: f64,
    ) -> Self {
        assert!(
            nx >= 2 && ny >= 2 && nz >= 1,
            "grid needs at least 2x2x1 nodes"
        );
        assert!(
            dx > 0.0 && dy > 0.0 && lz > 0.0,
            "grid spacings must be positive"
        );
        Grid {
            nx,
            ny,
            nz,
            x0,
            y0,
            dx,
            dy,
            lz,
        }
    }

    /// Grid whose nodes span the bounding box of `domain` with two extra
    /// node layers on every side, so every ghost node is inside the array.
    pub fn covering(domain: &DomainSpec, nx: usize, ny: usize, nz: usize) -> Self {
        assert!(
            nx >= 8 && ny >= 8,
            "covering grid needs at least 8 nodes per axis"
        );
        let (lo, hi) = domain.bounding_box();
        let dx = (hi[0] - lo[0]) / (nx - 5) as f64;
        let dy = (hi[1] - lo[1]) / (ny - 5) as f64;
        Grid::new(
            nx,
            ny,
            nz,
            lo[0] - 2.0 * dx,
            lo[1] - 2.0 * dy,
            dx,
            dy,
            domain.lz,
        )
    }

    pub fn dz(&self) -> f64 {
        self.lz / self.nz as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }

    pub fn z(&self, k: usize) -> f64 {
        k as f64 * self.dz()
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x(i), self.y(j)]
    }

    /// Number of nodes in one (x, y) plane.
    pub fn plane_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx2(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn idx3(&self, i: usize, j: usize, k: usize) -> usize {
        k * self.plane_len() + j * self.nx + i
    }

    /// Inverse of [`Grid::idx2`].
    pub fn ij(&self, p: usize) -> (usize, usize) {
        (p % self.nx, p / self.nx)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz()
    }

    /// Probe spacing for boundary extrapolation.
    pub fn h(&self) -> f64 {
        self.dx.min(self.dy)
    }
}
