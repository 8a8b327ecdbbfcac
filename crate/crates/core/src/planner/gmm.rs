//! Elite-reweighted 2-component Gaussian-mixture search over the 4D action
//! space: sample, evaluate, refit the mixture toward high-reward samples,
//! repeat until the budget is spent; the best evaluated sample is returned.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::action::wrap_angle;

/// Search settings. `budget` counts reward evaluations in total.
#[derive(Clone, Copy, Debug)]
pub struct GmmSettings {
    pub budget: usize,
    pub population: usize,
    pub elite_fraction: f64,
    pub seed: u64,
}

impl Default for GmmSettings {
    fn default() -> Self {
        Self { budget: 72, population: 24, elite_fraction: 0.25, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GmmComponent {
    pub mean: [f64; 4],
    pub std: [f64; 4],
    pub weight: f64,
}

/// The mixture state after optimization, for diagnostics and tests.
#[derive(Clone, Debug)]
pub struct GmmState {
    pub components: [GmmComponent; 2],
}

fn component_log_density(c: &GmmComponent, x: &[f64; 4], angular: bool) -> f64 {
    let mut acc = c.weight.max(1e-9).ln();
    for k in 0..4 {
        let mut d = x[k] - c.mean[k];
        if angular && k == 1 {
            d = wrap_angle(d);
        }
        let z = d / c.std[k];
        acc += -0.5 * z * z - c.std[k].ln();
    }
    acc
}

/// Maximizes `reward` over R^4 with a 2-component diagonal GMM search.
/// Dimension 1 is treated as an angle (wrapped differences). Returns the
/// best sample evaluated, its reward, and the final mixture.
pub fn optimize_gmm<F>(
    reward: F,
    init: [GmmComponent; 2],
    settings: &GmmSettings,
) -> ([f64; 4], f64, GmmState)
where
    F: Fn(&[f64; 4]) -> f64 + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut components = init;
    let pop = settings.population.max(2);
    let generations = (settings.budget / pop).max(1);
    let n_elite = ((pop as f64 * settings.elite_fraction).ceil() as usize).clamp(2, pop);

    let mut best: ([f64; 4], f64) = ([0.0; 4], f64::NEG_INFINITY);
    let normal = Normal::new(0.0, 1.0).unwrap();

    for _ in 0..generations {
        // sample the population (serial RNG draws keep determinism)
        let samples: Vec<[f64; 4]> = (0..pop)
            .map(|_| {
                let total_w: f64 = components.iter().map(|c| c.weight).sum();
                let pick = rng.gen_range(0.0..total_w);
                let c = if pick < components[0].weight { &components[0] } else { &components[1] };
                let mut x = [0.0; 4];
                for k in 0..4 {
                    x[k] = c.mean[k] + c.std[k] * normal.sample(&mut rng);
                }
                x[1] = wrap_angle(x[1]);
                x
            })
            .collect();

        // evaluate in parallel; order preserved for determinism
        let rewards: Vec<f64> = samples.par_iter().map(&reward).collect();

        let mut order: Vec<usize> = (0..pop).collect();
        order.sort_by(|a, b| rewards[*b].partial_cmp(&rewards[*a]).unwrap().then(a.cmp(b)));
        if rewards[order[0]] > best.1 {
            best = (samples[order[0]], rewards[order[0]]);
        }

        // hard-assign elites to their most likely component, refit
        let elites = &order[..n_elite];
        let mut groups: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for &i in elites {
            let d0 = component_log_density(&components[0], &samples[i], true);
            let d1 = component_log_density(&components[1], &samples[i], true);
            groups[usize::from(d1 > d0)].push(i);
        }
        for (ci, group) in groups.iter().enumerate() {
            if group.len() < 2 {
                continue; // keep the previous parameters alive
            }
            let mut mean = [0.0f64; 4];
            for &i in group {
                for k in 0..4 {
                    let v = if k == 1 {
                        // unwrap angles around the current mean
                        components[ci].mean[1] + wrap_angle(samples[i][1] - components[ci].mean[1])
                    } else {
                        samples[i][k]
                    };
                    mean[k] += v;
                }
            }
            for m in &mut mean {
                *m /= group.len() as f64;
            }
            let mut var = [0.0f64; 4];
            for &i in group {
                for k in 0..4 {
                    let d = if k == 1 {
                        wrap_angle(samples[i][1] - mean[1])
                    } else {
                        samples[i][k] - mean[k]
                    };
                    var[k] += d * d;
                }
            }
            for k in 0..4 {
                components[ci].mean[k] = if k == 1 { wrap_angle(mean[k]) } else { mean[k] };
                components[ci].std[k] = (var[k] / group.len() as f64).sqrt().max(1e-4);
            }
        }
        let w0 = (groups[0].len() as f64 / n_elite as f64).clamp(0.15, 0.85);
        components[0].weight = w0;
        components[1].weight = 1.0 - w0;
    }

    (best.0, best.1, GmmState { components })
}
