use crate::imgcore::{Image, ResampleAxis};
use crate::{Error, Result};

/// Per-iteration, per-channel curve parameter grids.
///
/// `params` is laid out iteration-major, then channel, then row-major over
/// the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveMap {
    grid_w: usize,
    grid_h: usize,
    iterations: usize,
    params: Vec<f64>,
}

impl CurveMap {
    pub fn zeros(grid_w: usize, grid_h: usize, iterations: usize) -> Result<Self> {
        Self::new(grid_w, grid_h, iterations, vec![0.0; iterations * 3 * grid_w * grid_h])
    }

    pub fn new(grid_w: usize, grid_h: usize, iterations: usize, params: Vec<f64>) -> Result<Self> {
        if grid_w == 0 || grid_h == 0 || iterations == 0 {
            return Err(Error::Parameter(format!(
                "curve map needs a non-empty grid and at least one iteration, got {grid_w}x{grid_h}x{iterations}"
            )));
        }
        let expected = iterations * 3 * grid_w * grid_h;
        if params.len() != expected {
            return Err(Error::Shape(format!(
                "curve map {grid_w}x{grid_h} with {iterations} iterations needs {expected} parameters, got {}",
                params.len()
            )));
        }
        Ok(CurveMap {
            grid_w,
            grid_h,
            iterations,
            params,
        })
    }

    /// Uniform map with every parameter equal to `a`.
    pub fn constant(grid_w: usize, grid_h: usize, iterations: usize, a: f64) -> Result<Self> {
        Self::new(grid_w, grid_h, iterations, vec![a; iterations * 3 * grid_w * grid_h])
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn cells(&self) -> usize {
        self.grid_w * self.grid_h
    }

    pub fn grid(&self, iteration: usize, channel: usize) -> &[f64] {
        let n = self.cells();
        let start = (iteration * 3 + channel) * n;
        &self.params[start..start + n]
    }

    pub fn check_range(&self) -> Result<()> {
        match self.params.iter().position(|a| !(-1.0..=1.0).contains(a)) {
            Some(i) => Err(Error::Parameter(format!(
                "curve parameter {i} = {} lies outside [-1, 1]",
                self.params[i]
            ))),
            None => Ok(()),
        }
    }
}

/// Bilinear map from a curve grid onto image pixels, plus its adjoint.
pub(crate) struct GridSampler {
    grid_w: usize,
    xs: ResampleAxis,
    ys: ResampleAxis,
}

impl GridSampler {
    pub(crate) fn new(grid_w: usize, grid_h: usize, width: usize, height: usize) -> Self {
        GridSampler {
            grid_w,
            xs: ResampleAxis::new(grid_w, width),
            ys: ResampleAxis::new(grid_h, height),
        }
    }

    pub(crate) fn upsample(&self, grid: &[f64]) -> Vec<f64> {
        crate::imgcore::resample_plane(grid, self.grid_w, &self.xs, &self.ys)
    }

    /// Adjoint of [`upsample`]: pull per-pixel gradients back onto the grid.
    pub(crate) fn accumulate(&self, pixel_grad: &[f64], grid_grad: &mut [f64]) {
        let width = self.xs.len();
        let gw = self.grid_w;
        for (row, ((&y0, &y1), &fy)) in self.ys.lo.iter().zip(&self.ys.hi).zip(&self.ys.frac).enumerate() {
            for (col, ((&x0, &x1), &fx)) in self.xs.lo.iter().zip(&self.xs.hi).zip(&self.xs.frac).enumerate() {
                let g = pixel_grad[row * width + col];
                if g == 0.0 {
                    continue;
                }
                let top = g * (1.0 - fy);
                let bottom = g * fy;
                grid_grad[y0 * gw + x0] += top * (1.0 - fx);
                grid_grad[y0 * gw + x1] += top * fx;
                grid_grad[y1 * gw + x0] += bottom * (1.0 - fx);
                grid_grad[y1 * gw + x1] += bottom * fx;
            }
        }
    }
}

/// Forward pass keeping every intermediate state: `states[k][c]` is channel
/// `c` before iteration `k`, with `states[n]` the output.
pub(crate) fn curve_states(img: &Image, cm: &CurveMap, sampler: &GridSampler) -> Vec<Vec<Vec<f64>>> {
    let mut states = Vec::with_capacity(cm.iterations + 1);
    states.push(img.planes().map(<[f64]>::to_vec).collect::<Vec<_>>());
    for k in 0..cm.iterations {
        let prev = &states[k];
        let next = (0..3)
            .map(|c| {
                let a = sampler.upsample(cm.grid(k, c));
                prev[c]
                    .iter()
                    .zip(&a)
                    .map(|(&x, &a)| x + a * x * (1.0 - x))
                    .collect()
            })
            .collect();
        states.push(next);
    }
    states
}

/// Apply the iterated quadratic curve. Requires an RGB image in `[0, 1]` and
/// every curve parameter in `[−1, 1]`; the output then stays in `[0, 1]`.
pub fn apply_curve(img: &Image, cm: &CurveMap) -> Result<Image> {
    img.require_rgb("apply_curve")?;
    img.require_linear("apply_curve")?;
    cm.check_range()?;
    let sampler = GridSampler::new(cm.grid_w, cm.grid_h, img.width(), img.height());
    let mut planes: Vec<Vec<f64>> = img.planes().map(<[f64]>::to_vec).collect();
    for k in 0..cm.iterations {
        for (c, plane) in planes.iter_mut().enumerate() {
            let a = sampler.upsample(cm.grid(k, c));
            for (x, a) in plane.iter_mut().zip(a) {
                // Clamp only absorbs rounding; the curve maps [0,1] into itself.
                *x = (*x + a * *x * (1.0 - *x)).clamp(0.0, 1.0);
            }
        }
    }
    Image::from_planes(img.width(), img.height(), planes, true)
}
