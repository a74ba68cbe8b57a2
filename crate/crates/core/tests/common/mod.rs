#![allow(clippy::excessive_precision)]
//! Helpers shared by the integration tests: independent numerical and
//! combinatorial oracles, and the bundled inputs.

#![allow(dead_code)]

use std::path::Path;

use elicit_core::density::{GaussianComponent, GaussianMixture};
use elicit_core::explain::FormalContext;
use elicit_core::pipeline::{data_dir, PipelineConfig, DEFAULT_CONFIG, PUBLISHED_CONFIG};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Standard normal CDF at selected points, computed with mpmath in
/// extended precision.
pub const PHI_ORACLE: &[(f64, f64)] = &[
    (-10.0, 7.619853024160526066e-24),
    (-9.75, 9.2234135249394181485e-23),
    (-9.5, 1.0494515075362607493e-21),
    (-9.25, 1.122463359132798266e-20),
    (-9.0, 1.1285884059538406477e-19),
    (-8.75, 1.0667637375474858003e-18),
    (-8.5, 9.4795348222033183542e-18),
    (-8.25, 7.919726314642477341e-17),
    (-8.0, 6.2209605742717841235e-16),
    (-7.75, 4.5946274357785954602e-15),
    (-7.5, 3.1908916729108962278e-14),
    (-7.25, 2.0838581586720694312e-13),
    (-7.0, 1.2798125438858350044e-12),
    (-6.75, 7.3922577780178224195e-12),
    (-6.5, 4.0160005838591178083e-11),
    (-6.25, 2.0522634252189388816e-10),
    (-6.0, 9.865876450376981407e-10),
    (-5.75, 4.4621724539016118731e-9),
    (-5.5, 1.8989562465887719384e-8),
    (-5.25, 7.6049605164887142511e-8),
    (-5.0, 2.8665157187919391167e-7),
    (-4.75, 1.0170832425687031713e-6),
    (-4.5, 3.3976731247300604017e-6),
    (-4.25, 0.000010688525774934420469),
    (-4.0, 0.000031671241833119921254),
    (-3.75, 0.000088417285200803867818),
    (-3.5, 0.00023262907903552503635),
    (-3.25, 0.00057702504239076704292),
    (-3.0, 0.0013498980316300945267),
    (-2.75, 0.0029797632350545567543),
    (-2.5, 0.006209665325776135167),
    (-2.25, 0.012224472655044703153),
    (-2.0, 0.0227501319481792072),
    (-1.75, 0.040059156863817090419),
    (-1.5, 0.066807201268858066004),
    (-1.25, 0.10564977366685525769),
    (-1.0, 0.15865525393145705141),
    (-0.75, 0.22662735237686819933),
    (-0.5, 0.30853753872598689636),
    (-0.25, 0.40129367431707627576),
    (0.0, 0.5),
    (0.25, 0.59870632568292372424),
    (0.5, 0.69146246127401310364),
    (0.75, 0.77337264762313180067),
    (1.0, 0.84134474606854294859),
    (1.25, 0.89435022633314474231),
    (1.5, 0.933192798731141934),
    (1.75, 0.95994084313618290958),
    (2.0, 0.9772498680518207928),
    (2.25, 0.98777552734495529685),
    (2.5, 0.99379033467422386483),
    (2.75, 0.99702023676494544325),
    (3.0, 0.99865010196836990547),
    (3.25, 0.99942297495760923296),
    (3.5, 0.99976737092096447496),
    (3.75, 0.99991158271479919613),
    (4.0, 0.99996832875816688008),
    (4.25, 0.99998931147422506558),
    (4.5, 0.99999660232687526994),
    (4.75, 0.9999989829167574313),
    (5.0, 0.99999971334842812081),
    (5.25, 0.99999992395039483511),
    (5.5, 0.99999998101043753411),
    (5.75, 0.9999999955378275461),
    (6.0, 0.99999999901341235496),
    (6.25, 0.99999999979477365748),
    (6.5, 0.99999999995983999416),
    (6.75, 0.99999999999260774222),
    (7.0, 0.99999999999872018746),
    (7.25, 0.99999999999979161418),
    (7.5, 0.99999999999996809108),
    (7.75, 0.99999999999999540537),
    (8.0, 0.9999999999999993779),
    (8.25, 0.9999999999999999208),
    (8.5, 0.99999999999999999052),
    (8.75, 0.99999999999999999893),
    (9.0, 0.99999999999999999989),
    (9.25, 0.99999999999999999999),
    (9.5, 1.0),
    (9.75, 1.0),
    (10.0, 1.0),
    (-37.5, 4.6053530095819548438e-308),
    (-20.0, 2.7536241186062336951e-89),
    (-12.3, 4.5287069561587846514e-35),
    (-0.001, 0.49960105778608893741),
    (0.001, 0.50039894221391106259),
    (1e-08, 0.50000000398942280401),
    (3.3, 0.99951657585761622249),
    (6.66, 0.99999999998630862075),
];

/// Values computed with SciPy from the published mixture parameters and the
/// bundled weights.
pub mod scipy {
    pub const GMM_CDF_AT_0: f64 = 0.0010337908499836654;
    pub const GMM_CDF_AT_1: f64 = 0.9980110781441658;
    pub const GMM_CDF_AT_HALF: f64 = 0.518108769720056;
    pub const POSTERIOR_AT_0: f64 = 0.07846446651224243;
    pub const PUBLISHED_LOG_LIKELIHOOD: f64 = 467.2128402515971;
    pub const SILVERMAN_SAMPLE_SD: f64 = 0.03718516313634248;
    pub const SILVERMAN_POPULATION_SD: f64 = 0.037173056620268284;
}

pub const PUBLISHED: [(f64, f64, f64); 2] = [(0.364801, 0.359548, 0.128782), (0.635199, 0.572878, 0.156241)];
pub const PUBLISHED_BANDWIDTH: f64 = 0.03676;

pub fn published_mixture() -> GaussianMixture {
    GaussianMixture::new(
        PUBLISHED
            .iter()
            .map(|&(weight, mean, std_dev)| GaussianComponent {
                weight,
                mean,
                std_dev,
            })
            .collect(),
    )
    .unwrap()
}

pub fn fitted_config(output_dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::from_toml_str(DEFAULT_CONFIG, &data_dir()).unwrap();
    cfg.output_dir = output_dir.to_owned();
    cfg
}

pub fn published_config(output_dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::from_toml_str(PUBLISHED_CONFIG, &data_dir()).unwrap();
    cfg.output_dir = output_dir.to_owned();
    cfg
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    // split into panels so narrow peaks are not stepped over
    let panels = 64;
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * width, a + (i + 1) as f64 * width);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            recurse(f, lo, hi, fa, fm, fb, simpson(fa, fm, fb, lo, hi), tol / panels as f64, 40)
        })
        .sum()
}

/// Random context with `n` objects and `m` attributes, each cell set with
/// probability `density`.
pub fn random_context(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> FormalContext {
    let incidence: Vec<Vec<bool>> = (0..n)
        .map(|_| (0..m).map(|_| rng.random_bool(density)).collect())
        .collect();
    FormalContext::new(
        (0..n).map(|i| format!("o{i}")).collect(),
        (0..m).map(|j| format!("a{j}")).collect(),
        &incidence,
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every concept of a context as `(extent, intent)` index lists, found by
/// deriving every subset of objects. Written against the raw incidence only,
/// independent of the library's bitset operators. Sorted by intent.
pub fn brute_force_concepts(ctx: &FormalContext) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (n, m) = (ctx.object_count(), ctx.attribute_count());
    assert!(n <= 16, "exhaustive oracle limited to 16 objects");
    let up = |objs: &[usize]| -> Vec<usize> {
        (0..m).filter(|&a| objs.iter().all(|&o| ctx.incident(o, a))).collect()
    };
    let down = |attrs: &[usize]| -> Vec<usize> {
        (0..n).filter(|&o| attrs.iter().all(|&a| ctx.incident(o, a))).collect()
    };
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for mask in 0u32..(1 << n) {
        let objs: Vec<usize> = (0..n).filter(|&o| mask >> o & 1 == 1).collect();
        let intent = up(&objs);
        let extent = down(&intent);
        if !out.iter().any(|(_, i)| *i == intent) {
            out.push((extent, intent));
        }
    }
    out.sort_by(|a, b| a.1.cmp(&b.1));
    out
}

/// Covering pairs `(lower, upper)` of extent inclusion among `extents`, from
/// the full order relation minus every pair with an element in between.
pub fn brute_force_covers(extents: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let subset = |a: &Vec<usize>, b: &Vec<usize>| a.iter().all(|x| b.contains(x));
    let lt = |i: usize, j: usize| i != j && subset(&extents[i], &extents[j]) && extents[i] != extents[j];
    let k = extents.len();
    let mut out = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if lt(i, j) && !(0..k).any(|z| lt(i, z) && lt(z, j)) {
                out.push((i, j));
            }
        }
    }
    out.sort_unstable();
    out
}
