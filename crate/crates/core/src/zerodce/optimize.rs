use serde::{Deserialize, Serialize};

use super::curve::{CurveMap, GridSampler};
use super::loss::{backward, forward_loss, DceLossConfig, LossBreakdown, LossModel};
use crate::imgcore::Image;
use crate::{Error, Result};

/// Halvings tried before a step is declared stalled.
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub grid_w: usize,
    pub grid_h: usize,
    pub iterations: usize,
    pub steps: usize,
    /// Initial step length. The raw gradient is multiplied by the number of
    /// grid cells per plane before stepping, so this is measured per cell
    /// and does not depend on grid resolution.
    pub step_size: f64,
    /// Reserved for stochastic patch sampling; the current descent is fully
    /// deterministic and does not draw from it.
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            grid_w: 32,
            grid_h: 32,
            iterations: 8,
            steps: 200,
            step_size: 1.0,
            seed: 0,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Parameter("optimizer needs at least one step".into()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::Parameter(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.grid_w == 0 || self.grid_h == 0 || self.iterations == 0 {
            return Err(Error::Parameter("curve grid and iteration count must be non-zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CurveFit {
    pub curve: CurveMap,
    /// Accepted loss before the first step and after every step; never
    /// increases.
    pub trace: Vec<f64>,
    pub final_loss: LossBreakdown,
}

fn check_gradient(grad: &[f64]) -> Result<()> {
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical { term: "loss gradient".into() });
    }
    Ok(())
}

/// Fit a curve map to `img` by projected gradient descent from the identity
/// curve, halving the step whenever a trial step would raise the loss.
pub fn optimize_curve(img: &Image, loss_cfg: &DceLossConfig, opt: &OptimizeConfig) -> Result<CurveFit> {
    opt.validate()?;
    img.require_rgb("optimize_curve")?;
    img.require_linear("optimize_curve")?;
    let model = LossModel::new(img, loss_cfg)?;
    let sampler = GridSampler::new(opt.grid_w, opt.grid_h, img.width(), img.height());

    let mut curve = CurveMap::zeros(opt.grid_w, opt.grid_h, opt.iterations)?;
    let (mut loss, mut grad) = backward(&model, img, &curve, &sampler);
    loss.check_finite()?;
    check_gradient(&grad)?;

    let precondition = curve.cells() as f64;
    let mut step = opt.step_size;
    let mut trace = Vec::with_capacity(opt.steps + 1);
    trace.push(loss.total);

    for _ in 0..opt.steps {
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial = curve.clone();
            for (a, g) in trial.params_mut().iter_mut().zip(&grad) {
                *a = (*a - step * precondition * g).clamp(-1.0, 1.0);
            }
            let trial_loss = forward_loss(&model, img, &trial, &sampler);
            trial_loss.check_finite()?;
            if trial_loss.total <= loss.total {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some(next) => {
                curve = next;
                let (l, g) = backward(&model, img, &curve, &sampler);
                l.check_finite()?;
                check_gradient(&g)?;
                loss = l;
                grad = g;
            }
            // Every trial raised the loss: a numerical stationary point.
            None => {
                trace.push(loss.total);
                break;
            }
        }
        trace.push(loss.total);
    }
    Ok(CurveFit {
        curve,
        trace,
        final_loss: loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zerodce::apply_curve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_point_returns_identity_curve() {
        let cfg = DceLossConfig {
            exposure_target: 0.5,
            ..Default::default()
        };
        let img = Image::filled(16, 16, 3, 0.5).unwrap();
        let fit = optimize_curve(&img, &cfg, &OptimizeConfig { steps: 10, ..Default::default() }).unwrap();
        assert!(fit.curve.params().iter().all(|&a| a == 0.0));
        assert!(fit.trace.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn dark_constant_image_brightens_toward_target() {
        let img = Image::filled(16, 16, 3, 0.1).unwrap();
        let fit = optimize_curve(&img, &DceLossConfig::default(), &OptimizeConfig::default()).unwrap();
        let mean = apply_curve(&img, &fit.curve).unwrap().mean();
        // The exposure optimum is exactly E = 0.6; allow rounding above it.
        assert!((0.45..=0.6 + 1e-9).contains(&mean), "mean {mean}");
        assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn trace_is_monotone_on_textured_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let img = Image::from_fn(24, 20, 3, |_, _, c| rng.random_range(0.0..0.3) + 0.05 * c as f64).unwrap();
        let opt = OptimizeConfig { grid_w: 6, grid_h: 5, steps: 60, ..Default::default() };
        let fit = optimize_curve(&img, &DceLossConfig::default(), &opt).unwrap();
        assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.trace.last().unwrap() < &fit.trace[0]);
        fit.curve.check_range().unwrap();
    }

    #[test]
    fn bad_optimizer_settings() {
        let img = Image::filled(8, 8, 3, 0.2).unwrap();
        let cfg = DceLossConfig::default();
        assert!(optimize_curve(&img, &cfg, &OptimizeConfig { steps: 0, ..Default::default() }).is_err());
        assert!(optimize_curve(&img, &cfg, &OptimizeConfig { step_size: 0.0, ..Default::default() }).is_err());
    }
}
