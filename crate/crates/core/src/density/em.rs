use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, DensityError, GaussianComponent, GaussianMixture};
use crate::normal::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmOptions {
    /// Stop when the relative change of the log-likelihood falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Lower bound applied to every component standard deviation.
    pub std_dev_floor: f64,
    /// Extra randomly initialized runs on top of the deterministic one. The
    /// run with the highest log-likelihood wins.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 20_000,
            std_dev_floor: 1e-6,
            restarts: 0,
            seed: 0,
        }
    }
}

/// Outcome of one EM fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub components: usize,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood before every M-step, then at the returned parameters.
    #[serde(skip)]
    pub trace: Vec<f64>,
    /// 0 for the deterministic start, `r` for the `r`-th random restart.
    pub start: usize,
}

impl FitSummary {
    /// Whether the log-likelihood never decreased by more than rounding noise.
    pub fn is_monotone(&self) -> bool {
        self.trace
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0))
    }
}

/// Number of free parameters of a univariate mixture: `M` means, `M` standard
/// deviations and `M - 1` independent weights.
pub fn free_parameters(components: usize) -> usize {
    3 * components - 1
}

pub fn log_likelihood(model: &GaussianMixture, data: &[f64]) -> f64 {
    data.iter().map(|&x| model.ln_pdf(x)).sum()
}

/// `(AIC, BIC)` of `model` on `data`: `2p - 2 ln L` and `p ln n - 2 ln L`.
pub fn information_criteria(
    model: &GaussianMixture,
    data: &[f64],
) -> Result<(f64, f64), DensityError> {
    let ll = log_likelihood(model, data);
    if !ll.is_finite() {
        return Err(DensityError::NonFiniteLikelihood);
    }
    Ok(criteria_from(ll, model.len(), data.len()))
}

fn criteria_from(ll: f64, components: usize, n: usize) -> (f64, f64) {
    let p = free_parameters(components) as f64;
    (2.0 * p - 2.0 * ll, p * (n as f64).ln() - 2.0 * ll)
}

/// Sorted data cut into `m` contiguous blocks of (almost) equal size; each
/// block gives one component's weight, mean and standard deviation.
fn block_initialization(data: &[f64], m: usize, floor: f64) -> Vec<GaussianComponent> {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (base, extra) = (n / m, n % m);
    let mut start = 0;
    (0..m)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let block = &sorted[start..start + len];
            start += len;
            let mean = block.iter().sum::<f64>() / len as f64;
            let var = block.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / len as f64;
            GaussianComponent {
                weight: len as f64 / n as f64,
                mean,
                std_dev: var.sqrt().max(floor),
            }
        })
        .collect()
}

fn random_initialization(
    data: &[f64],
    m: usize,
    floor: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<GaussianComponent> {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let sd = (data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
        .sqrt()
        .max(floor);
    sample(rng, data.len(), m)
        .into_iter()
        .map(|i| GaussianComponent {
            weight: 1.0 / m as f64,
            mean: data[i],
            std_dev: sd,
        })
        .collect()
}

/// E-step: fills `resp` (row-major, `n x M`) and returns the log-likelihood.
fn expectation(components: &[GaussianComponent], data: &[f64], resp: &mut [f64]) -> f64 {
    let m = components.len();
    let model = GaussianMixture::from_sorted_unchecked(components.to_vec());
    let mut ll = 0.0;
    for (t, &x) in data.iter().enumerate() {
        let logs = model.ln_weighted_densities(x);
        let total = log_sum_exp(&logs);
        ll += total;
        let row = &mut resp[t * m..(t + 1) * m];
        if total.is_finite() {
            for (r, l) in row.iter_mut().zip(&logs) {
                *r = (l - total).exp();
            }
        } else {
            for (r, c) in row.iter_mut().zip(components) {
                *r = c.weight;
            }
        }
    }
    ll
}

/// M-step: re-estimates weights, means and standard deviations from the
/// responsibilities.
fn maximization(
    components: &[GaussianComponent],
    data: &[f64],
    resp: &[f64],
    floor: f64,
) -> Vec<GaussianComponent> {
    let m = components.len();
    let n = data.len() as f64;
    let mut next = Vec::with_capacity(m);
    for (k, previous) in components.iter().enumerate() {
        let mut mass = 0.0;
        let mut first = 0.0;
        for (t, &x) in data.iter().enumerate() {
            let r = resp[t * m + k];
            mass += r;
            first += r * x;
        }
        if mass <= f64::MIN_POSITIVE {
            // component lost all support; keep its shape with negligible weight
            next.push(GaussianComponent {
                weight: f64::MIN_POSITIVE,
                ..*previous
            });
            continue;
        }
        let mean = first / mass;
        let second: f64 = data
            .iter()
            .enumerate()
            .map(|(t, &x)| resp[t * m + k] * (x - mean) * (x - mean))
            .sum();
        next.push(GaussianComponent {
            weight: mass / n,
            mean,
            std_dev: (second / mass).sqrt().max(floor),
        });
    }
    let total: f64 = next.iter().map(|c| c.weight).sum();
    for c in &mut next {
        c.weight /= total;
    }
    next
}

fn sorted_model(mut components: Vec<GaussianComponent>) -> GaussianMixture {
    components.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    GaussianMixture::from_sorted_unchecked(components)
}

struct EmRun {
    components: Vec<GaussianComponent>,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn run_em(data: &[f64], init: Vec<GaussianComponent>, opts: &EmOptions) -> EmRun {
    let m = init.len();
    let mut resp = vec![0.0; data.len() * m];
    let mut components = init;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut ll = expectation(&components, data, &mut resp);
    trace.push(ll);
    while iterations < opts.max_iterations {
        components = maximization(&components, data, &resp, opts.std_dev_floor);
        iterations += 1;
        let next = expectation(&components, data, &mut resp);
        trace.push(next);
        let change = (next - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        ll = next;
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }
    EmRun {
        components,
        log_likelihood: ll,
        iterations,
        converged,
        trace,
    }
}

/// Fits an `m`-component mixture to `data` by expectation-maximization.
///
/// The first run starts from contiguous blocks of the sorted data, so the
/// result is deterministic; `opts.restarts` adds seeded random starts.
pub fn em_fit(
    data: &[f64],
    m: usize,
    opts: &EmOptions,
) -> Result<(GaussianMixture, FitSummary), DensityError> {
    if m == 0 {
        return Err(DensityError::NoComponents);
    }
    if data.len() <= m {
        return Err(DensityError::TooFewPoints {
            components: m,
            points: data.len(),
        });
    }
    check_finite(data)?;

    let mut best: Option<(EmRun, usize)> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for start in 0..=opts.restarts {
        let init = if start == 0 {
            block_initialization(data, m, opts.std_dev_floor)
        } else {
            random_initialization(data, m, opts.std_dev_floor, &mut rng)
        };
        let run = run_em(data, init, opts);
        if best
            .as_ref()
            .is_none_or(|b| run.log_likelihood > b.0.log_likelihood)
        {
            best = Some((run, start));
        }
    }
    let (run, start) = best.expect("at least one start");
    let ll = run.log_likelihood;
    if !ll.is_finite() {
        return Err(DensityError::NonFiniteLikelihood);
    }
    let (aic, bic) = criteria_from(ll, m, data.len());
    Ok((
        sorted_model(run.components),
        FitSummary {
            components: m,
            log_likelihood: ll,
            aic,
            bic,
            iterations: run.iterations,
            converged: run.converged,
            trace: run.trace,
            start,
        },
    ))
}

/// One EM update of `model` on `data`, used to check fixed points.
pub fn em_step(model: &GaussianMixture, data: &[f64], std_dev_floor: f64) -> GaussianMixture {
    let components = model.components().to_vec();
    let mut resp = vec![0.0; data.len() * components.len()];
    expectation(&components, data, &mut resp);
    sorted_model(maximization(&components, data, &resp, std_dev_floor))
}

/// Fits for every component count up to `m_max` and ranks them by AIC and BIC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelection {
    pub candidates: Vec<FitSummary>,
    #[serde(skip)]
    pub models: Vec<GaussianMixture>,
    pub aic_choice: usize,
    pub bic_choice: usize,
    /// The returned component count (the BIC minimizer).
    pub selected: usize,
    pub criteria_disagree: bool,
}

impl ModelSelection {
    pub fn model(&self, components: usize) -> Option<&GaussianMixture> {
        self.models.get(components.checked_sub(1)?)
    }
}

fn argmin_components(candidates: &[FitSummary], key: impl Fn(&FitSummary) -> f64) -> usize {
    candidates
        .iter()
        .fold(None::<&FitSummary>, |best, c| match best {
            Some(b) if key(b) <= key(c) => Some(b),
            _ => Some(c),
        })
        .map(|c| c.components)
        .unwrap()
}

pub fn select_component_count(
    data: &[f64],
    m_max: usize,
    opts: &EmOptions,
) -> Result<ModelSelection, DensityError> {
    if m_max == 0 {
        return Err(DensityError::NoComponents);
    }
    let mut candidates = Vec::with_capacity(m_max);
    let mut models = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let (model, summary) = em_fit(data, m, opts)?;
        models.push(model);
        candidates.push(summary);
    }
    let aic_choice = argmin_components(&candidates, |c| c.aic);
    let bic_choice = argmin_components(&candidates, |c| c.bic);
    Ok(ModelSelection {
        candidates,
        models,
        aic_choice,
        bic_choice,
        selected: bic_choice,
        criteria_disagree: aic_choice != bic_choice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_component_is_the_gaussian_mle() {
        let data = [0.3, 1.2, -0.7, 2.2, 0.1, 0.9, 1.4];
        let (model, summary) = em_fit(&data, 1, &EmOptions::default()).unwrap();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let sd = (data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let c = model.components()[0];
        assert_eq!(c.weight, 1.0);
        assert!((c.mean - mean).abs() < 1e-14);
        assert!((c.std_dev - sd).abs() < 1e-14);
        assert!(summary.converged);
    }

    #[test]
    fn symmetric_two_cluster_data() {
        let data = [-0.1, 0.0, 0.1, 0.9, 1.0, 1.1];
        let (model, summary) = em_fit(&data, 2, &EmOptions::default()).unwrap();
        let [a, b] = [model.components()[0], model.components()[1]];
        assert!((a.weight - 0.5).abs() < 1e-9);
        assert!((b.weight - 0.5).abs() < 1e-9);
        assert!(a.mean.abs() < 1e-6);
        assert!((b.mean - 1.0).abs() < 1e-6);
        assert!((a.std_dev - b.std_dev).abs() < 1e-6);
        assert!(summary.is_monotone());
    }

    #[test]
    fn rejects_bad_input() {
        let opts = EmOptions::default();
        assert_eq!(
            em_fit(&[1.0, 2.0], 2, &opts).unwrap_err(),
            DensityError::TooFewPoints {
                components: 2,
                points: 2
            }
        );
        assert_eq!(em_fit(&[1.0, 2.0], 0, &opts).unwrap_err(), DensityError::NoComponents);
        assert!(matches!(
            em_fit(&[1.0, f64::NAN, 3.0], 1, &opts),
            Err(DensityError::NonFiniteData(_))
        ));
    }

    #[test]
    fn penalty_arithmetic() {
        // M = 1: p = 2, so AIC - BIC = 4 - 2 ln n
        let (aic, bic) = criteria_from(-10.0, 1, 100);
        assert!((aic - bic - (4.0 - 2.0 * 100f64.ln())).abs() < 1e-12);
        assert!((aic - bic + 5.2103).abs() < 1e-4);
        // at fixed likelihood AIC grows by 2 per parameter
        let (aic2, _) = criteria_from(-10.0, 2, 100);
        assert!((aic2 - aic - 2.0 * 3.0).abs() < 1e-12);
        assert_eq!(free_parameters(4), 11);
    }

    #[test]
    fn single_candidate_selects_one() {
        let data = [0.0, 0.5, 1.0, 1.5];
        let sel = select_component_count(&data, 1, &EmOptions::default()).unwrap();
        assert_eq!(sel.selected, 1);
        assert!(!sel.criteria_disagree);
        assert!(select_component_count(&data, 0, &EmOptions::default()).is_err());
    }

    #[test]
    fn restarts_never_lower_the_likelihood() {
        let data: Vec<f64> = (0..60).map(|i| ((i * 37) % 60) as f64 / 10.0).collect();
        let base = em_fit(&data, 3, &EmOptions::default()).unwrap().1;
        let opts = EmOptions {
            restarts: 4,
            seed: 7,
            ..EmOptions::default()
        };
        let multi = em_fit(&data, 3, &opts).unwrap().1;
        assert!(multi.log_likelihood >= base.log_likelihood);
        // same seed, same answer
        assert_eq!(em_fit(&data, 3, &opts).unwrap().1, multi);
    }
}
