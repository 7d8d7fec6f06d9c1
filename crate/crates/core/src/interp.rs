//! Cubic Hermite tables on a uniform grid in `x = log w`.
//!
//! Node slopes come from exact derivative identities rather than finite
//! differences, so the interpolant is fourth-order accurate.

/// Uniform log-spaced grid of `w` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGrid {
    pub w_min: f64,
    pub w_max: f64,
    pub per_decade: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        Self {
            w_min: 1e-8,
            w_max: 1e8,
            per_decade: 32,
        }
    }
}

impl LogGrid {
    pub fn len(&self) -> usize {
        let decades = (self.w_max / self.w_min).log10();
        (decades * self.per_decade as f64).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x0(&self) -> f64 {
        self.w_min.ln()
    }

    pub fn step(&self) -> f64 {
        std::f64::consts::LN_10 / self.per_decade as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0() + j as f64 * self.step()
    }

    pub fn w(&self, j: usize) -> f64 {
        self.x(j).exp()
    }

    /// Index of the node at `w = 1`, if the grid has one.
    pub fn unit_index(&self) -> Option<usize> {
        let j = (-self.x0() / self.step()).round();
        if j >= 0.0 && (j as usize) < self.len() && self.x(j as usize).abs() < 1e-9 {
            Some(j as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, w: f64) -> bool {
        w >= self.w_min && w <= self.w_max
    }

    /// Node `j` with `x_j <= x < x_{j+1}` (clamped to the last panel).
    pub fn panel(&self, x: f64) -> usize {
        let t = ((x - self.x0()) / self.step()).floor();
        (t.max(0.0) as usize).min(self.len() - 2)
    }
}

#[derive(Debug, Clone)]
pub struct HermiteTable {
    grid: LogGrid,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl HermiteTable {
    /// `dy` holds `dy/dx` at each node.
    pub fn new(grid: LogGrid, y: Vec<f64>, dy: Vec<f64>) -> Self {
        assert_eq!(y.len(), grid.len());
        assert_eq!(dy.len(), grid.len());
        Self { grid, y, dy }
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn node(&self, j: usize) -> (f64, f64) {
        (self.y[j], self.dy[j])
    }

    /// Interpolated value at `x = log w`; `None` outside the grid.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let g = &self.grid;
        if !(x >= g.x0() - 1e-12 && x <= g.x(g.len() - 1) + 1e-12) {
            return None;
        }
        let j = g.panel(x);
        let h = g.step();
        let t = (x - g.x(j)) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(
            h00 * self.y[j] + h10 * h * self.dy[j] + h01 * self.y[j + 1] + h11 * h * self.dy[j + 1],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_unit_node() {
        let g = LogGrid::default();
        assert_eq!(g.len(), 513);
        assert_eq!(g.unit_index(), Some(256));
        assert!((g.w(g.len() - 1) / 1e8 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermite_reproduces_smooth_function() {
        let grid = LogGrid::default();
        let f = |x: f64| (0.3 * x).sin() + 0.01 * x * x;
        let df = |x: f64| 0.3 * (0.3 * x).cos() + 0.02 * x;
        let y = (0..grid.len()).map(|j| f(grid.x(j))).collect();
        let dy = (0..grid.len()).map(|j| df(grid.x(j))).collect();
        let t = HermiteTable::new(grid, y, dy);
        for x in [-18.0, -3.3, 0.0, 0.017, 12.5, 18.42] {
            assert!((t.eval(x).unwrap() - f(x)).abs() < 1e-9, "x={x}");
        }
        assert!(t.eval(-20.0).is_none());
        assert!(t.eval(19.0).is_none());
    }
}
