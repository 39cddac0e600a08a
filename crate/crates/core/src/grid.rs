//! Uniform tensor grids on [-Lx, Lx] x [-Lv, Lv] and sampled Wigner fields.
//!
//! Gridded operations are implemented for one spatial dimension (a 2-D phase
//! space), which is where all quantitative verification runs; the analytic
//! modules handle general d.

use crate::error::{QfpError, Result};
use crate::exec;

/// Node-centered uniform grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    nx: usize,
    nv: usize,
    lx: f64,
    lv: f64,
}

impl PhaseGrid {
    pub fn new(nx: usize, nv: usize, lx: f64, lv: f64) -> Result<Self> {
        if nx < 8 || nv < 8 {
            return Err(QfpError::InvalidGrid {
                reason: "need at least 8 nodes per axis",
            });
        }
        if !(lx > 0.0) || !(lv > 0.0) || !lx.is_finite() || !lv.is_finite() {
            return Err(QfpError::InvalidGrid {
                reason: "extents must be positive and finite",
            });
        }
        Ok(PhaseGrid { nx, nv, lx, lv })
    }

    pub fn square(n: usize, lx: f64, lv: f64) -> Result<Self> {
        PhaseGrid::new(n, n, lx, lv)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn lv(&self) -> f64 {
        self.lv
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.lx / (self.nx - 1) as f64
    }

    pub fn hv(&self) -> f64 {
        2.0 * self.lv / (self.nv - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.lx + self.hx() * i as f64
    }

    pub fn v(&self, j: usize) -> f64 {
        -self.lv + self.hv() * j as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.nv
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    /// Trapezoid weight of node (i, j): hx*hv with half factors on edges.
    #[inline]
    pub fn trap_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
        let wv = if j == 0 || j == self.nv - 1 { 0.5 } else { 1.0 };
        wx * wv * self.hx() * self.hv()
    }

    fn trap_wx(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx - 1 {
            0.5 * self.hx()
        } else {
            self.hx()
        }
    }

    fn trap_wv(&self, j: usize) -> f64 {
        if j == 0 || j == self.nv - 1 {
            0.5 * self.hv()
        } else {
            self.hv()
        }
    }
}

/// Samples of w(t, x, xi) with cached trapezoidal mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    grid: PhaseGrid,
    values: Vec<f64>,
    time: f64,
    mass: f64,
}

/// One Gaussian bump of a mixture: `weight` is its signed mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub weight: f64,
    pub center_x: f64,
    pub center_v: f64,
    pub sigma_x: f64,
    pub sigma_v: f64,
}

impl GaussianSpec {
    pub fn eval(&self, x: f64, v: f64) -> f64 {
        let dx = (x - self.center_x) / self.sigma_x;
        let dv = (v - self.center_v) / self.sigma_v;
        let norm = 2.0 * std::f64::consts::PI * self.sigma_x * self.sigma_v;
        self.weight * (-0.5 * (dx * dx + dv * dv)).exp() / norm
    }
}

impl WignerField {
    pub fn from_values(grid: PhaseGrid, time: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(QfpError::InvalidGrid {
                reason: "value buffer does not match grid size",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QfpError::InvalidInput("field contains non-finite samples".into()));
        }
        let mut f = WignerField {
            grid,
            values,
            time,
            mass: 0.0,
        };
        f.mass = f.integral();
        Ok(f)
    }

    /// Sample a function on the grid (parallel over rows).
    pub fn from_fn<F>(grid: PhaseGrid, time: f64, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let nv = grid.nv;
        let values = exec::fill_rows(grid.nx, nv, |i| {
            let x = grid.x(i);
            (0..nv).map(|j| f(x, grid.v(j))).collect()
        });
        let mut out = WignerField {
            grid,
            values,
            time,
            mass: 0.0,
        };
        out.mass = out.integral();
        out
    }

    pub fn gaussian_mixture(grid: PhaseGrid, time: f64, parts: &[GaussianSpec]) -> Self {
        WignerField::from_fn(grid, time, |x, v| {
            parts.iter().map(|g| g.eval(x, v)).sum()
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Cached trapezoidal integral of w.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.grid.nx {
            let wx = self.grid.trap_wx(i);
            let mut row = 0.0;
            for j in 0..self.grid.nv {
                row += self.values[self.grid.idx(i, j)] * self.grid.trap_wv(j) / self.grid.hv();
            }
            acc += row * wx * self.grid.hv();
        }
        acc
    }

    /// Rescale so the mass becomes exactly one. Applied once at ingestion;
    /// later drift stays observable.
    pub fn normalized_to_unit_mass(&self) -> Result<Self> {
        if self.mass.abs() < 1e-12 {
            return Err(QfpError::MassMismatch {
                m_f: self.mass,
                m_g: 1.0,
                tol: 1e-12,
            });
        }
        let scale = 1.0 / self.mass;
        let values = self.values.iter().map(|v| v * scale).collect();
        WignerField::from_values(self.grid, self.time, values)
    }

    /// || w ||_p by grid quadrature; `p = f64::INFINITY` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "p must lie in [1, inf]");
        if p.is_infinite() {
            return self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
        let mut acc = 0.0;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.nv {
                acc += self.values[self.grid.idx(i, j)].abs().powf(p) * self.grid.trap_weight(i, j);
            }
        }
        acc.powf(1.0 / p)
    }

    /// L^p distance to another field on the same grid.
    pub fn lp_distance(&self, other: &WignerField, p: f64) -> Result<f64> {
        if self.grid != other.grid {
            return Err(QfpError::GridMismatch);
        }
        if p.is_infinite() {
            let mut m = 0.0f64;
            for (a, b) in self.values.iter().zip(&other.values) {
                m = m.max((a - b).abs());
            }
            return Ok(m);
        }
        let mut acc = 0.0;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.nv {
                let d = self.at(i, j) - other.at(i, j);
                acc += d.abs().powf(p) * self.grid.trap_weight(i, j);
            }
        }
        Ok(acc.powf(1.0 / p))
    }

    /// Pointwise positive/negative parts, so that w = plus - minus.
    pub fn split_signed(&self) -> (WignerField, WignerField) {
        let plus: Vec<f64> = self.values.iter().map(|v| v.max(0.0)).collect();
        let minus: Vec<f64> = self.values.iter().map(|v| (-v).max(0.0)).collect();
        (
            WignerField::from_values(self.grid, self.time, plus).expect("finite"),
            WignerField::from_values(self.grid, self.time, minus).expect("finite"),
        )
    }

    /// Fraction of the total |w| mass inside the outermost `band` cells.
    pub fn boundary_band_fraction(&self, band: usize) -> f64 {
        let mut total = 0.0;
        let mut edge = 0.0;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.nv {
                let m = self.at(i, j).abs() * self.grid.trap_weight(i, j);
                total += m;
                let on_edge = i < band
                    || j < band
                    || i >= self.grid.nx - band
                    || j >= self.grid.nv - band;
                if on_edge {
                    edge += m;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            edge / total
        }
    }

    /// Mean and variance of w treated as a (possibly signed) density; used
    /// for auto-sizing grids.
    pub fn moments(&self) -> FieldMoments {
        let mut m0 = 0.0;
        let mut mx = 0.0;
        let mut mv = 0.0;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.nv {
                let w = self.at(i, j) * self.grid.trap_weight(i, j);
                m0 += w;
                mx += w * self.grid.x(i);
                mv += w * self.grid.v(j);
            }
        }
        let (cx, cv) = if m0.abs() > 1e-300 {
            (mx / m0, mv / m0)
        } else {
            (0.0, 0.0)
        };
        let mut vx = 0.0;
        let mut vv = 0.0;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.nv {
                let w = self.at(i, j) * self.grid.trap_weight(i, j);
                vx += w * (self.grid.x(i) - cx).powi(2);
                vv += w * (self.grid.v(j) - cv).powi(2);
            }
        }
        if m0.abs() > 1e-300 {
            vx /= m0;
            vv /= m0;
        }
        FieldMoments {
            mass: m0,
            mean_x: cx,
            mean_v: cv,
            var_x: vx,
            var_v: vv,
        }
    }

    /// Bicubic Catmull-Rom interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64, v: f64) -> f64 {
        let gx = (x + self.grid.lx) / self.grid.hx();
        let gv = (v + self.grid.lv) / self.grid.hv();
        if gx < 0.0 || gv < 0.0 || gx > (self.grid.nx - 1) as f64 || gv > (self.grid.nv - 1) as f64 {
            return 0.0;
        }
        let i0 = (gx.floor() as isize).min(self.grid.nx as isize - 2).max(0);
        let j0 = (gv.floor() as isize).min(self.grid.nv as isize - 2).max(0);
        let ux = gx - i0 as f64;
        let uv = gv - j0 as f64;

        let sample = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= self.grid.nx as isize || j >= self.grid.nv as isize {
                0.0
            } else {
                self.values[self.grid.idx(i as usize, j as usize)]
            }
        };

        let mut col = [0.0f64; 4];
        for (c, di) in col.iter_mut().zip(-1isize..=2) {
            let p0 = sample(i0 + di, j0 - 1);
            let p1 = sample(i0 + di, j0);
            let p2 = sample(i0 + di, j0 + 1);
            let p3 = sample(i0 + di, j0 + 2);
            *c = catmull_rom(p0, p1, p2, p3, uv);
        }
        catmull_rom(col[0], col[1], col[2], col[3], ux)
    }
}

/// Summary moments of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMoments {
    pub mass: f64,
    pub mean_x: f64,
    pub mean_v: f64,
    pub var_x: f64,
    pub var_v: f64,
}

#[inline]
fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, u: f64) -> f64 {
    let a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
    let b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
    let c = -0.5 * p0 + 0.5 * p2;
    ((a * u + b) * u + c) * u + p1
}
