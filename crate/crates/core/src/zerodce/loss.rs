//! Non-reference enhancement losses and their analytic gradient with respect
//! to the curve parameters.
//!
//! "Gray" below is the mean of the three channels. With `Y` the enhanced
//! gray image and `X` the input gray image:
//!
//! - exposure: mean over `p×p` patches of `(mean(Y_patch) − E)²`; edge
//!   patches that do not fill `p×p` average over the pixels they have.
//! - color: `Σ_{pairs (a,b)} (mean_a − mean_b)²` over the output channels.
//! - spatial: mean over full 4×4 regions of
//!   `Σ_neighbours (|Y_r − Y_n| − |X_r − X_n|)²`, using the 4-neighbourhood
//!   of regions that exist.
//! - smoothness: per parameter grid, mean squared horizontal difference plus
//!   mean squared vertical difference, averaged over all grids.

use serde::{Deserialize, Serialize};

use super::curve::{curve_states, CurveMap, GridSampler};
use crate::imgcore::Image;
use crate::{Error, Result};

const REGION: usize = 4;
const CHANNEL_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DceLossConfig {
    pub exposure_target: f64,
    pub exposure_patch: usize,
    pub w_exposure: f64,
    pub w_color: f64,
    pub w_spatial: f64,
    pub w_smooth: f64,
}

impl Default for DceLossConfig {
    fn default() -> Self {
        DceLossConfig {
            exposure_target: 0.6,
            exposure_patch: 16,
            w_exposure: 1.0,
            w_color: 0.5,
            w_spatial: 1.0,
            w_smooth: 20.0,
        }
    }
}

impl DceLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.exposure_target > 0.0 && self.exposure_target < 1.0) {
            return Err(Error::Parameter(format!(
                "exposure target must lie in (0, 1), got {}",
                self.exposure_target
            )));
        }
        if self.exposure_patch == 0 {
            return Err(Error::Parameter("exposure patch must be at least 1 pixel".into()));
        }
        for (name, w) in [
            ("w_exposure", self.w_exposure),
            ("w_color", self.w_color),
            ("w_spatial", self.w_spatial),
            ("w_smooth", self.w_smooth),
        ] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Parameter(format!("{name} must be non-negative, got {w}")));
            }
        }
        Ok(())
    }
}

/// Unweighted loss terms and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossBreakdown {
    pub exposure: f64,
    pub color: f64,
    pub spatial: f64,
    pub smooth: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub(crate) fn check_finite(&self) -> Result<()> {
        for (term, v) in [
            ("exposure loss", self.exposure),
            ("color loss", self.color),
            ("spatial loss", self.spatial),
            ("smoothness loss", self.smooth),
        ] {
            if !v.is_finite() {
                return Err(Error::Numerical { term: term.into() });
            }
        }
        Ok(())
    }
}

/// Sign with `sign(0) = 0`, the subgradient used for `|·|` at its kink.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn gray_of(planes: &[Vec<f64>]) -> Vec<f64> {
    planes[0]
        .iter()
        .zip(&planes[1])
        .zip(&planes[2])
        .map(|((r, g), b)| (r + g + b) / 3.0)
        .collect()
}

/// Image-dependent, curve-independent state shared by loss evaluations.
pub(crate) struct LossModel<'a> {
    cfg: &'a DceLossConfig,
    width: usize,
    height: usize,
    /// Patch grid for the exposure term.
    patches_x: usize,
    patches_y: usize,
    /// Region grid for the spatial term.
    regions_x: usize,
    regions_y: usize,
    input_regions: Vec<f64>,
}

impl<'a> LossModel<'a> {
    pub(crate) fn new(img_in: &Image, cfg: &'a DceLossConfig) -> Result<Self> {
        cfg.validate()?;
        img_in.require_rgb("dce loss")?;
        let (width, height) = (img_in.width(), img_in.height());
        let p = cfg.exposure_patch;
        let planes: Vec<Vec<f64>> = img_in.planes().map(<[f64]>::to_vec).collect();
        let mut model = LossModel {
            cfg,
            width,
            height,
            patches_x: width.div_ceil(p),
            patches_y: height.div_ceil(p),
            regions_x: width / REGION,
            regions_y: height / REGION,
            input_regions: Vec::new(),
        };
        model.input_regions = model.region_means(&gray_of(&planes));
        Ok(model)
    }

    fn region_means(&self, gray: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.regions_x * self.regions_y];
        for ry in 0..self.regions_y {
            for rx in 0..self.regions_x {
                let mut acc = 0.0;
                for y in ry * REGION..(ry + 1) * REGION {
                    for x in rx * REGION..(rx + 1) * REGION {
                        acc += gray[y * self.width + x];
                    }
                }
                out[ry * self.regions_x + rx] = acc / (REGION * REGION) as f64;
            }
        }
        out
    }

    fn patch_bounds(&self, px: usize, py: usize) -> (usize, usize, usize, usize) {
        let p = self.cfg.exposure_patch;
        (px * p, ((px + 1) * p).min(self.width), py * p, ((py + 1) * p).min(self.height))
    }

    fn neighbours(&self, rx: usize, ry: usize) -> impl Iterator<Item = usize> + '_ {
        let (w, h) = (self.regions_x, self.regions_y);
        [
            (rx > 0).then(|| ry * w + rx - 1),
            (rx + 1 < w).then(|| ry * w + rx + 1),
            (ry > 0).then(|| (ry - 1) * w + rx),
            (ry + 1 < h).then(|| (ry + 1) * w + rx),
        ]
        .into_iter()
        .flatten()
    }

    /// Image terms of the loss. When `grad` is given, the gradient of the
    /// weighted image terms with respect to each output channel is written
    /// into it.
    pub(crate) fn image_terms(&self, out: &[Vec<f64>], grad: Option<&mut [Vec<f64>]>) -> (f64, f64, f64) {
        let cfg = self.cfg;
        let n = (self.width * self.height) as f64;
        let gray = gray_of(out);
        let mut gray_grad = vec![0.0; gray.len()];

        // Exposure.
        let n_patches = (self.patches_x * self.patches_y) as f64;
        let mut exposure = 0.0;
        for py in 0..self.patches_y {
            for px in 0..self.patches_x {
                let (x0, x1, y0, y1) = self.patch_bounds(px, py);
                let count = ((x1 - x0) * (y1 - y0)) as f64;
                let mut acc = 0.0;
                for y in y0..y1 {
                    acc += gray[y * self.width + x0..y * self.width + x1].iter().sum::<f64>();
                }
                let d = acc / count - cfg.exposure_target;
                exposure += d * d;
                if grad.is_some() {
                    let g = cfg.w_exposure * 2.0 * d / (n_patches * count);
                    for y in y0..y1 {
                        for v in &mut gray_grad[y * self.width + x0..y * self.width + x1] {
                            *v += g;
                        }
                    }
                }
            }
        }
        exposure /= n_patches;

        // Spatial consistency.
        let mut spatial = 0.0;
        let n_regions = self.regions_x * self.regions_y;
        if n_regions > 0 {
            let out_regions = self.region_means(&gray);
            let mut region_grad = vec![0.0; n_regions];
            for ry in 0..self.regions_y {
                for rx in 0..self.regions_x {
                    let r = ry * self.regions_x + rx;
                    for nb in self.neighbours(rx, ry) {
                        let dy = out_regions[r] - out_regions[nb];
                        let dx = self.input_regions[r] - self.input_regions[nb];
                        let e = dy.abs() - dx.abs();
                        spatial += e * e;
                        let g = cfg.w_spatial * 2.0 * e * sign(dy) / n_regions as f64;
                        region_grad[r] += g;
                        region_grad[nb] -= g;
                    }
                }
            }
            spatial /= n_regions as f64;
            if grad.is_some() {
                let area = (REGION * REGION) as f64;
                for ry in 0..self.regions_y {
                    for rx in 0..self.regions_x {
                        let g = region_grad[ry * self.regions_x + rx] / area;
                        for y in ry * REGION..(ry + 1) * REGION {
                            for v in &mut gray_grad[y * self.width + rx * REGION..y * self.width + (rx + 1) * REGION] {
                                *v += g;
                            }
                        }
                    }
                }
            }
        }

        // Color constancy.
        let means: Vec<f64> = out.iter().map(|p| p.iter().sum::<f64>() / n).collect();
        let mut color = 0.0;
        let mut mean_grad = [0.0; 3];
        for (a, b) in CHANNEL_PAIRS {
            let d = means[a] - means[b];
            color += d * d;
            mean_grad[a] += cfg.w_color * 2.0 * d / n;
            mean_grad[b] -= cfg.w_color * 2.0 * d / n;
        }

        if let Some(grad) = grad {
            for (c, plane) in grad.iter_mut().enumerate() {
                for (g, &gg) in plane.iter_mut().zip(&gray_grad) {
                    *g = gg / 3.0 + mean_grad[c];
                }
            }
        }
        (exposure, color, spatial)
    }
}

/// Illumination smoothness of the parameter grids; adds
/// `weight · ∂loss/∂A` into `grad` when given.
pub(crate) fn smoothness(cm: &CurveMap, weight: f64, mut grad: Option<&mut [f64]>) -> f64 {
    let (gw, gh) = (cm.grid_w(), cm.grid_h());
    let grids = (cm.iterations() * 3) as f64;
    let n_h = (gh * (gw - 1)) as f64;
    let n_v = ((gh - 1) * gw) as f64;
    let mut total = 0.0;
    for (gi, grid) in cm.params().chunks_exact(cm.cells()).enumerate() {
        let offset = gi * cm.cells();
        let mut sum_h = 0.0;
        let mut sum_v = 0.0;
        for y in 0..gh {
            for x in 0..gw {
                let i = y * gw + x;
                if x + 1 < gw {
                    let d = grid[i + 1] - grid[i];
                    sum_h += d * d;
                    if let Some(g) = grad.as_deref_mut() {
                        let s = weight * 2.0 * d / (n_h * grids);
                        g[offset + i + 1] += s;
                        g[offset + i] -= s;
                    }
                }
                if y + 1 < gh {
                    let d = grid[i + gw] - grid[i];
                    sum_v += d * d;
                    if let Some(g) = grad.as_deref_mut() {
                        let s = weight * 2.0 * d / (n_v * grids);
                        g[offset + i + gw] += s;
                        g[offset + i] -= s;
                    }
                }
            }
        }
        if n_h > 0.0 {
            total += sum_h / n_h;
        }
        if n_v > 0.0 {
            total += sum_v / n_v;
        }
    }
    total / grids
}

fn breakdown(cfg: &DceLossConfig, (exposure, color, spatial): (f64, f64, f64), smooth: f64) -> LossBreakdown {
    LossBreakdown {
        exposure,
        color,
        spatial,
        smooth,
        total: cfg.w_exposure * exposure + cfg.w_color * color + cfg.w_spatial * spatial + cfg.w_smooth * smooth,
    }
}

/// Total loss of an enhanced image against its input and the curve that
/// produced it.
pub fn dce_loss(img_in: &Image, img_out: &Image, cm: &CurveMap, cfg: &DceLossConfig) -> Result<LossBreakdown> {
    if !img_in.same_dimensions(img_out) || img_out.channels() != 3 {
        return Err(Error::Shape(format!(
            "loss needs matching RGB images, got {}x{}x{} and {}x{}x{}",
            img_in.width(),
            img_in.height(),
            img_in.channels(),
            img_out.width(),
            img_out.height(),
            img_out.channels()
        )));
    }
    let model = LossModel::new(img_in, cfg)?;
    let out: Vec<Vec<f64>> = img_out.planes().map(<[f64]>::to_vec).collect();
    Ok(breakdown(cfg, model.image_terms(&out, None), smoothness(cm, cfg.w_smooth, None)))
}

pub(crate) fn forward_loss(model: &LossModel, img: &Image, cm: &CurveMap, sampler: &GridSampler) -> LossBreakdown {
    let states = curve_states(img, cm, sampler);
    breakdown(
        model.cfg,
        model.image_terms(states.last().unwrap(), None),
        smoothness(cm, model.cfg.w_smooth, None),
    )
}

pub(crate) fn backward(
    model: &LossModel,
    img: &Image,
    cm: &CurveMap,
    sampler: &GridSampler,
) -> (LossBreakdown, Vec<f64>) {
    let states = curve_states(img, cm, sampler);
    let pixels = img.pixel_count();
    let mut g: Vec<Vec<f64>> = vec![vec![0.0; pixels]; 3];
    let terms = model.image_terms(states.last().unwrap(), Some(&mut g));
    let mut grad = vec![0.0; cm.params().len()];
    let smooth = smoothness(cm, model.cfg.w_smooth, Some(&mut grad));
    let cells = cm.cells();
    let mut da = vec![0.0; pixels];
    for k in (0..cm.iterations()).rev() {
        for (c, gc) in g.iter_mut().enumerate() {
            let a = sampler.upsample(cm.grid(k, c));
            for (((d, gv), &x), &a) in da.iter_mut().zip(gc.iter_mut()).zip(&states[k][c]).zip(&a) {
                *d = *gv * x * (1.0 - x);
                *gv *= 1.0 + a * (1.0 - 2.0 * x);
            }
            let start = (k * 3 + c) * cells;
            sampler.accumulate(&da, &mut grad[start..start + cells]);
        }
    }
    (breakdown(model.cfg, terms, smooth), grad)
}

/// Loss of `apply_curve(img, cm)` and its gradient with respect to every
/// curve parameter, in [`CurveMap::params`] order.
pub fn loss_and_gradient(img: &Image, cm: &CurveMap, cfg: &DceLossConfig) -> Result<(LossBreakdown, Vec<f64>)> {
    img.require_linear("dce loss")?;
    let model = LossModel::new(img, cfg)?;
    let sampler = GridSampler::new(cm.grid_w(), cm.grid_h(), img.width(), img.height());
    let (loss, grad) = backward(&model, img, cm, &sampler);
    loss.check_finite()?;
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical { term: "loss gradient".into() });
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zerodce::apply_curve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_terms_vanish_at_target() {
        let cfg = DceLossConfig {
            exposure_target: 0.5,
            ..Default::default()
        };
        let img = Image::filled(16, 16, 3, 0.5).unwrap();
        let cm = CurveMap::constant(4, 4, 8, 0.3).unwrap();
        let l = dce_loss(&img, &img, &cm, &cfg).unwrap();
        assert_eq!(l, LossBreakdown::default());
    }

    #[test]
    fn exposure_of_bright_gray() {
        let img = Image::filled(32, 32, 3, 0.8).unwrap();
        let cm = CurveMap::zeros(4, 4, 8).unwrap();
        let l = dce_loss(&img, &img, &cm, &DceLossConfig::default()).unwrap();
        assert!((l.exposure - 0.04).abs() < 1e-12);
        assert_eq!(l.color, 0.0);
        assert_eq!(l.spatial, 0.0);
        assert!((l.total - 0.04).abs() < 1e-12);
    }

    /// Straight-line re-implementation of every loss term, written
    /// independently of the patch/region bookkeeping above.
    fn scalar_oracle(x: &Image, y: &Image, cm: &CurveMap, cfg: &DceLossConfig) -> f64 {
        let (w, h) = (x.width(), x.height());
        let gray = |img: &Image, px: usize, py: usize| {
            (img.get(px, py, 0) + img.get(px, py, 1) + img.get(px, py, 2)) / 3.0
        };
        let p = cfg.exposure_patch;
        let mut exp_sum = 0.0;
        let mut patches = 0.0;
        let mut py = 0;
        while py < h {
            let mut px = 0;
            while px < w {
                let mut s = 0.0;
                let mut cnt = 0.0;
                for yy in py..(py + p).min(h) {
                    for xx in px..(px + p).min(w) {
                        s += gray(y, xx, yy);
                        cnt += 1.0;
                    }
                }
                exp_sum += (s / cnt - cfg.exposure_target).powi(2);
                patches += 1.0;
                px += p;
            }
            py += p;
        }
        let exposure = exp_sum / patches;

        let mean = |c: usize| {
            let mut s = 0.0;
            for yy in 0..h {
                for xx in 0..w {
                    s += y.get(xx, yy, c);
                }
            }
            s / (w * h) as f64
        };
        let (mr, mg, mb) = (mean(0), mean(1), mean(2));
        let color = (mr - mg).powi(2) + (mr - mb).powi(2) + (mg - mb).powi(2);

        let (rw, rh) = (w / 4, h / 4);
        let region = |img: &Image, rx: i64, ry: i64| {
            let mut s = 0.0;
            for yy in 0..4 {
                for xx in 0..4 {
                    s += gray(img, rx as usize * 4 + xx, ry as usize * 4 + yy);
                }
            }
            s / 16.0
        };
        let mut spa = 0.0;
        for ry in 0..rh as i64 {
            for rx in 0..rw as i64 {
                for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                    let (nx, ny) = (rx + dx, ry + dy);
                    if nx < 0 || ny < 0 || nx >= rw as i64 || ny >= rh as i64 {
                        continue;
                    }
                    let dyv = (region(y, rx, ry) - region(y, nx, ny)).abs();
                    let dxv = (region(x, rx, ry) - region(x, nx, ny)).abs();
                    spa += (dyv - dxv).powi(2);
                }
            }
        }
        let spatial = spa / (rw * rh) as f64;

        let (gw, gh) = (cm.grid_w(), cm.grid_h());
        let mut tv = 0.0;
        for k in 0..cm.iterations() {
            for c in 0..3 {
                let g = cm.grid(k, c);
                let mut hs = 0.0;
                let mut vs = 0.0;
                for yy in 0..gh {
                    for xx in 0..gw {
                        if xx + 1 < gw {
                            hs += (g[yy * gw + xx + 1] - g[yy * gw + xx]).powi(2);
                        }
                        if yy + 1 < gh {
                            vs += (g[(yy + 1) * gw + xx] - g[yy * gw + xx]).powi(2);
                        }
                    }
                }
                tv += hs / (gh * (gw - 1)) as f64 + vs / ((gh - 1) * gw) as f64;
            }
        }
        let smooth = tv / (cm.iterations() * 3) as f64;
        cfg.w_exposure * exposure + cfg.w_color * color + cfg.w_spatial * spatial + cfg.w_smooth * smooth
    }

    fn random_case(seed: u64, w: usize, h: usize, gw: usize, gh: usize) -> (Image, CurveMap) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = Image::from_fn(w, h, 3, |_, _, _| rng.random_range(0.02..0.6)).unwrap();
        let params = (0..8 * 3 * gw * gh).map(|_| rng.random_range(-0.6..0.9)).collect();
        (img, CurveMap::new(gw, gh, 8, params).unwrap())
    }

    #[test]
    fn total_matches_scalar_oracle() {
        let cfg = DceLossConfig {
            exposure_patch: 5,
            ..Default::default()
        };
        for seed in 0..4 {
            let (img, cm) = random_case(seed, 13, 18, 5, 4);
            let out = apply_curve(&img, &cm).unwrap();
            let ours = dce_loss(&img, &out, &cm, &cfg).unwrap().total;
            let oracle = scalar_oracle(&img, &out, &cm, &cfg);
            assert!((ours - oracle).abs() < 1e-9, "{ours} vs {oracle}");
        }
    }

    #[test]
    fn gradient_loss_matches_forward_loss() {
        let cfg = DceLossConfig::default();
        let (img, cm) = random_case(5, 16, 16, 8, 8);
        let out = apply_curve(&img, &cm).unwrap();
        let (l, _) = loss_and_gradient(&img, &cm, &cfg).unwrap();
        let direct = dce_loss(&img, &out, &cm, &cfg).unwrap();
        assert!((l.total - direct.total).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let cfg = DceLossConfig::default();
        let (img, cm) = random_case(7, 16, 16, 8, 8);
        let (_, grad) = loss_and_gradient(&img, &cm, &cfg).unwrap();
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for i in (0..cm.params().len()).step_by(7) {
            let mut plus = cm.clone();
            plus.params_mut()[i] += h;
            let mut minus = cm.clone();
            minus.params_mut()[i] -= h;
            let lp = loss_and_gradient(&img, &plus, &cfg).unwrap().0.total;
            let lm = loss_and_gradient(&img, &minus, &cfg).unwrap().0.total;
            let fd = (lp - lm) / (2.0 * h);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-4, "max relative error {worst}");
    }

    #[test]
    fn invalid_config_rejected() {
        let img = Image::filled(8, 8, 3, 0.5).unwrap();
        let cm = CurveMap::zeros(2, 2, 1).unwrap();
        for cfg in [
            DceLossConfig { exposure_target: 1.0, ..Default::default() },
            DceLossConfig { exposure_patch: 0, ..Default::default() },
            DceLossConfig { w_smooth: -1.0, ..Default::default() },
        ] {
            assert!(dce_loss(&img, &img, &cm, &cfg).is_err());
        }
    }
}
