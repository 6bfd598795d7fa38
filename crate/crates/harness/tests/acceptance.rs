//! Acceptance suite: one pass/fail line per criterion.
//!
//! Criterion 5 trains six full GridChaos runs and dominates the runtime
//! (roughly ten minutes per run on one core). For quicker local iteration,
//! `OVDX_ACCEPTANCE_SKIP=5,8` reports the listed criteria as skipped; a
//! skipped criterion never counts as a pass.

use std::f64::consts::{E, PI};
use std::time::{Duration, Instant};

use ovdx::config::{Algorithm, ExperimentConfig};
use ovdx::runner::{metrics_path, run_experiment, run_seed};
use ovdx::summary::{frg_epoch, Frg, GOAL_RETURN};
use ovdx_core::agent::{critic_update, PolicyHead, Transition};
use ovdx_core::critic::{quantile_midpoints, CriticEnsemble, CriticLoss, QuantileDistribution};
use ovdx_core::env::{gridchaos_step, Bounds, EnvState, Environment, GridChaos, GridChaosConfig};
use ovdx_core::explorer::{
    ability_at, behavior_policy, exploration_multiplier, ExplorationConfig, GaussianSpec,
    ReturnDistribution,
};
use ovdx_core::math::std_normal_cdf;
use ovdx_core::nn::{AdamConfig, Mlp};
use ovdx_core::rng::{stream, Stream};
use ovdx_core::uncertainty::estimate_from;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

// Criterion 1
const GRAD_NETWORKS: usize = 100;
const GRAD_STEP: f64 = 1e-4;
const GRAD_MAX_REL_ERR: f64 = 1e-4;
const GRAD_TIME_LIMIT: Duration = Duration::from_secs(60);
// Criterion 2
const QR_QUANTILES: usize = 20;
const QR_UPDATES: usize = 20_000;
const QR_ABS_TOL: f64 = 0.1;
const QR_TIME_LIMIT: Duration = Duration::from_secs(120);
// Criterion 3
const CDF_PROBES: usize = 100_000;
const ABILITY_PAIRS: usize = 10_000;
const C_NORM: f64 = 0.5;
// Criterion 4
const PROP2_STATES: usize = 1_000;
// Criterion 5
const GRID_EPOCHS: usize = 1250;
const GRID_STEPS_PER_EPOCH: usize = 100;
const GRID_SEEDS: [u64; 3] = [0, 1, 2];
const GRID_MAX_FRG: usize = 800;
// Criterion 6
const UNCERTAINTY_SAMPLES: usize = 10_000;
const UNCERTAINTY_REL_TOL: f64 = 1e-9;
// Criterion 7
const ENV_STEPS: usize = 100_000;
const ENV_STD_REL_TOL: f64 = 0.02;

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- 1

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(101, Stream::Init);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut straddles = 0usize;
    for _ in 0..GRAD_NETWORKS {
        let mut sizes = vec![rng.random_range(1..=6)];
        for _ in 0..rng.random_range(1..=3) {
            sizes.push(rng.random_range(1..=8));
        }
        let net = Mlp::new(&sizes, &mut rng).unwrap();
        let input: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let cot: Vec<f64> = (0..net.output_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let loss = |n: &Mlp, x: &[f64]| -> f64 {
            n.forward(x)
                .unwrap()
                .iter()
                .zip(&cot)
                .map(|(o, c)| o * c)
                .sum()
        };
        let (_, grads) = net.gradient(&input, |_| (0.0, cot.clone())).unwrap();
        let base = loss(&net, &input);
        let mut compare = |analytic: f64, fp: f64, fm: f64| {
            // ReLU nets are piecewise linear per coordinate: a nonzero second
            // difference means a kink lies inside the stencil.
            if (fp - 2.0 * base + fm).abs() > 1e-10 * (1.0 + base.abs()) {
                straddles += 1;
                return;
            }
            let numeric = (fp - fm) / (2.0 * GRAD_STEP);
            worst =
                worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
            checked += 1;
        };
        for i in 0..net.num_params() {
            let mut p = net.clone();
            p.params_mut()[i] += GRAD_STEP;
            let mut m = net.clone();
            m.params_mut()[i] -= GRAD_STEP;
            compare(grads.params[i], loss(&p, &input), loss(&m, &input));
        }
        for j in 0..input.len() {
            let mut xp = input.clone();
            xp[j] += GRAD_STEP;
            let mut xm = input.clone();
            xm[j] -= GRAD_STEP;
            compare(grads.input.get(0, j), loss(&net, &xp), loss(&net, &xm));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < GRAD_MAX_REL_ERR && elapsed < GRAD_TIME_LIMIT,
        format!("{checked} coordinates, max rel err {worst:.2e} (< {GRAD_MAX_REL_ERR:e}), {straddles} kink straddles skipped, {:.1}s", elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- 2

fn inverse_normal_cdf(p: f64) -> f64 {
    let (mut lo, mut hi) = (-12.0, 12.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if std_normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn quantile_regression_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(202, Stream::Init);
    let mut ens = CriticEnsemble::new(
        4,
        &[64, 64],
        QR_QUANTILES,
        AdamConfig::default(),
        CriticLoss::Quantile,
        &mut rng,
    )
    .unwrap();
    let policy = PolicyHead::new(2, 2, &[8], &mut rng).unwrap();
    let state = [0.0, 0.0];
    let mut batch: Vec<Transition> = (0..256)
        .map(|_| Transition {
            state: state.to_vec(),
            action: vec![0.0; 2],
            raw_action: vec![0.0; 2],
            reward: 0.0,
            next_state: state.to_vec(),
            done: false,
        })
        .collect();
    for _ in 0..QR_UPDATES {
        for t in &mut batch {
            t.action = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            t.reward = StandardNormal.sample(&mut rng);
        }
        let refs: Vec<&Transition> = batch.iter().collect();
        critic_update(&refs, &mut ens, &policy, 0.0, 0.2, &mut rng).unwrap();
    }
    let truth: Vec<f64> = quantile_midpoints(QR_QUANTILES)
        .unwrap()
        .into_iter()
        .map(inverse_normal_cdf)
        .collect();
    let mut worst = 0.0f64;
    for action in [[0.0, 0.0], [0.5, -0.5], [-0.8, 0.3]] {
        for z in ens.evaluate(&state, &action).unwrap() {
            for (v, t) in z.iter().zip(&truth) {
                worst = worst.max((v - t).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < QR_ABS_TOL && elapsed < QR_TIME_LIMIT,
        format!(
            "max |learned − Φ⁻¹(τ̂)| = {worst:.4} (< {QR_ABS_TOL}), {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 3

fn cdf_and_ability_properties() -> Outcome {
    let mut rng = stream(303, Stream::Init);
    let mut cdf_violations = 0usize;
    for i in 0..CDF_PROBES {
        let dist = if i % 2 == 0 {
            ReturnDistribution::Gaussian(GaussianSpec::new(
                rng.random_range(-50.0..50.0),
                rng.random_range(0.0..20.0),
            ))
        } else {
            let mut v: Vec<f64> = (0..QR_QUANTILES)
                .map(|_| rng.random_range(-50.0..50.0))
                .collect();
            v.sort_by(f64::total_cmp);
            ReturnDistribution::Quantile(QuantileDistribution::new(v).unwrap())
        };
        let x = rng.random_range(-80.0..80.0);
        let y = x + rng.random_range(0.0..20.0);
        let (fx, fy) = (dist.cdf(x), dist.cdf(y));
        if fx > fy || !(0.0..=1.0).contains(&fx) || !(0.0..=1.0).contains(&fy) {
            cdf_violations += 1;
        }
    }

    let floor = C_NORM / E;
    let (mut a_violations, mut a_checked, mut b_violations, mut b_checked) = (0, 0, 0, 0);
    for _ in 0..ABILITY_PAIRS {
        // Higher optimistic mean against a fixed current distribution.
        let current = GaussianSpec::new(rng.random_range(-5.0..5.0), rng.random_range(0.05..5.0));
        let lo = rng.random_range(-10.0..10.0);
        let hi = lo + rng.random_range(1e-3..5.0);
        let std = rng.random_range(0.0..3.0);
        let (p_lo, p_hi) = (current.cdf(lo), current.cdf(hi));
        if p_lo >= floor {
            a_checked += 1;
            let f_lo = ability_at(
                &GaussianSpec::new(lo, std),
                &ReturnDistribution::Gaussian(current),
                C_NORM,
                &[],
            );
            let f_hi = ability_at(
                &GaussianSpec::new(hi, std),
                &ReturnDistribution::Gaussian(current),
                C_NORM,
                &[],
            );
            if p_hi < p_lo || f_hi < f_lo {
                a_violations += 1;
            }
        }

        // More aleatoric spread in the current distribution, optimistic sample above its mean.
        let mu = rng.random_range(-5.0..5.0);
        let narrow = rng.random_range(0.05..3.0);
        let wide = narrow + rng.random_range(1e-3..3.0);
        let z = mu + rng.random_range(1e-3..10.0);
        let ovd = GaussianSpec::new(z, rng.random_range(0.0..3.0));
        let (tight, loose) = (GaussianSpec::new(mu, narrow), GaussianSpec::new(mu, wide));
        if loose.cdf(z) >= floor {
            b_checked += 1;
            let f_tight = ability_at(&ovd, &ReturnDistribution::Gaussian(tight), C_NORM, &[]);
            let f_loose = ability_at(&ovd, &ReturnDistribution::Gaussian(loose), C_NORM, &[]);
            if loose.cdf(z) > tight.cdf(z) || f_loose > f_tight {
                b_violations += 1;
            }
        }
    }
    verdict(
        cdf_violations == 0 && a_violations == 0 && b_violations == 0,
        format!(
            "cdf monotonicity {cdf_violations}/{CDF_PROBES} violations; higher optimistic mean {a_violations}/{a_checked}; \
             higher noise {b_violations}/{b_checked} (pairs with Φ ≥ C/e)"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn zero_step_reductions() -> Outcome {
    let mut rng = stream(404, Stream::Init);
    let policy = PolicyHead::new(2, 2, &[64, 64], &mut rng).unwrap();
    let ens = CriticEnsemble::new(
        4,
        &[64, 64],
        20,
        AdamConfig::default(),
        CriticLoss::Quantile,
        &mut rng,
    )
    .unwrap();
    let twin = Mlp::new(&[4, 64, 64, 20], &mut rng).unwrap();
    let identical = CriticEnsemble::from_networks(
        [twin.clone(), twin],
        AdamConfig::default(),
        CriticLoss::Quantile,
    )
    .unwrap();
    let still = ExplorationConfig {
        alpha: 0.0,
        ..Default::default()
    };
    let moving = ExplorationConfig::default();
    let (mut mean_mismatch, mut std_mismatch, mut m_mismatch) = (0, 0, 0);
    for _ in 0..PROP2_STATES {
        let state = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let eps: Vec<f64> = (0..moving.k_samples)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let (mu, sigma) = policy.gaussian(&state).unwrap();
        let b0 = behavior_policy(&state, &mu, &sigma, &ens, &still, &eps).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&b0.mean) != bits(&mu) || bits(&b0.std) != bits(&sigma) {
            mean_mismatch += 1;
        }
        let b1 = behavior_policy(&state, &mu, &sigma, &ens, &moving, &eps).unwrap();
        if bits(&b1.std) != bits(&sigma) {
            std_mismatch += 1;
        }
        // Identical critics: no epistemic spread, so the OVD mean is the
        // current distribution's median and Φ = C exactly.
        let b2 = behavior_policy(&state, &mu, &sigma, &identical, &moving, &eps).unwrap();
        if b2.diagnostics.multiplier != 1.0 {
            m_mismatch += 1;
        }
    }
    let m_at_c = exploration_multiplier(C_NORM, C_NORM);
    verdict(
        mean_mismatch == 0 && std_mismatch == 0 && m_mismatch == 0 && m_at_c == 1.0,
        format!(
            "α=0 behavior ≠ head on {mean_mismatch}/{PROP2_STATES} states; Σ_E ≠ σ_φ on {std_mismatch}; \
             m ≠ 1 at Φ = C on {m_mismatch}; m(C) = {m_at_c}"
        ),
    )
}

// ---------------------------------------------------------------- 5, 8

fn gridchaos_config(algorithm: Algorithm) -> ExperimentConfig {
    ExperimentConfig {
        algorithm,
        seeds: GRID_SEEDS.to_vec(),
        epochs: GRID_EPOCHS,
        steps_per_epoch: GRID_STEPS_PER_EPOCH,
        ..Default::default()
    }
}

struct GridRuns {
    ovde_dir: tempfile::TempDir,
}

fn gridchaos_reproduction(runs: &mut Option<GridRuns>) -> Outcome {
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let start = Instant::now();
    let ovde_dir = tempfile::tempdir().unwrap();
    let dsac_dir = tempfile::tempdir().unwrap();
    let (ovde, ovde_runs) =
        run_experiment(&gridchaos_config(Algorithm::OvdeG), ovde_dir.path(), jobs)
            .map_err(|e| e.to_string())?;
    let (dsac, _) = run_experiment(&gridchaos_config(Algorithm::Dsac), dsac_dir.path(), jobs)
        .map_err(|e| e.to_string())?;
    *runs = Some(GridRuns { ovde_dir });

    let reached = ovde_runs
        .iter()
        .filter(
            |r| matches!(frg_epoch(&r.metrics, GOAL_RETURN), Frg::Reached(e) if e <= GRID_MAX_FRG),
        )
        .count();
    let describe = |s: &ovdx::summary::Summary| {
        s.seeds
            .iter()
            .map(|x| format!("{}/{}", x.final_return, x.frg))
            .collect::<Vec<_>>()
            .join(", ")
    };
    verdict(
        reached >= 1 && ovde.final_return_mean > dsac.final_return_mean,
        format!(
            "ovde_g final {:.2} [final/frg: {}], dsac final {:.2} [{}]; ovde seeds with FRG ≤ {GRID_MAX_FRG}: {reached}/3; {:.0} min",
            ovde.final_return_mean,
            describe(&ovde),
            dsac.final_return_mean,
            describe(&dsac),
            start.elapsed().as_secs_f64() / 60.0
        ),
    )
}

fn determinism(runs: &Option<GridRuns>) -> Outcome {
    let config = gridchaos_config(Algorithm::OvdeG);
    let seed = GRID_SEEDS[0];
    let first_dir;
    let first = match runs {
        Some(r) => metrics_path(r.ovde_dir.path(), seed),
        None => {
            first_dir = tempfile::tempdir().unwrap();
            run_seed(&config, seed, first_dir.path()).map_err(|e| e.to_string())?;
            metrics_path(first_dir.path(), seed)
        }
    };
    let second_dir = tempfile::tempdir().unwrap();
    run_seed(&config, seed, second_dir.path()).map_err(|e| e.to_string())?;
    let a = std::fs::read(&first).map_err(|e| e.to_string())?;
    let b = std::fs::read(metrics_path(second_dir.path(), seed)).map_err(|e| e.to_string())?;
    verdict(
        a == b,
        format!(
            "two {GRID_EPOCHS}-epoch ovde_g runs of seed {seed}: {} vs {} bytes, identical = {}",
            a.len(),
            b.len(),
            a == b
        ),
    )
}

// ---------------------------------------------------------------- 6

fn uncertainty_invariances() -> Outcome {
    let mut rng = stream(606, Stream::Init);
    let (mut translation, mut homogeneity, mut swap) = (0, 0, 0);
    let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= UNCERTAINTY_REL_TOL * scale;
    for _ in 0..UNCERTAINTY_SAMPLES {
        let a: Vec<f64> = (0..QR_QUANTILES)
            .map(|_| rng.random_range(-50.0..50.0))
            .collect();
        let b: Vec<f64> = (0..QR_QUANTILES)
            .map(|_| rng.random_range(-50.0..50.0))
            .collect();
        let base = estimate_from([&a, &b]);
        let shift = rng.random_range(-100.0..100.0);
        let k = rng.random_range(0.01..100.0);
        let moved = estimate_from([
            &a.iter().map(|x| x + shift).collect::<Vec<_>>(),
            &b.iter().map(|x| x + shift).collect::<Vec<_>>(),
        ]);
        let scaled = estimate_from([
            &a.iter().map(|x| x * k).collect::<Vec<_>>(),
            &b.iter().map(|x| x * k).collect::<Vec<_>>(),
        ]);
        let scale = 150.0;
        if !close(base.epistemic_std, moved.epistemic_std, scale)
            || !close(base.aleatoric_std, moved.aleatoric_std, scale)
        {
            translation += 1;
        }
        if !close(k * base.epistemic_std, scaled.epistemic_std, k * scale)
            || !close(k * base.aleatoric_std, scaled.aleatoric_std, k * scale)
        {
            homogeneity += 1;
        }
        if estimate_from([&b, &a]) != base {
            swap += 1;
        }
    }
    verdict(
        translation + homogeneity + swap == 0,
        format!(
            "violations over {UNCERTAINTY_SAMPLES}: translation {translation}, homogeneity {homogeneity}, swap {swap} (rel tol {UNCERTAINTY_REL_TOL:e})"
        ),
    )
}

// ---------------------------------------------------------------- 7

fn environment_statistics() -> Outcome {
    let noise = GridChaosConfig::default().quadrant_noise;
    let cfg = GridChaosConfig {
        quadrant_noise: noise,
        bounds: Bounds {
            min: [-1e3, -1e3],
            max: [1e3, 1e3],
        },
        ..Default::default()
    };
    let mut rng = stream(707, Stream::TrainEnv);
    let centres = [
        [500.0, 500.0],
        [-500.0, 500.0],
        [-500.0, -500.0],
        [500.0, -500.0],
    ];
    let per_quadrant = ENV_STEPS / 4;
    let mut worst = 0.0f64;
    let mut measured = Vec::new();
    for (q, c) in centres.iter().enumerate() {
        let state = EnvState {
            position: *c,
            step_count: 0,
        };
        let mut sq = 0.0;
        for _ in 0..per_quadrant {
            let next = gridchaos_step(&state, 0.0, 0.0, &cfg, &mut rng);
            sq += (next.state.position[0] - c[0]).powi(2) + (next.state.position[1] - c[1]).powi(2);
        }
        let std = (sq / (2 * per_quadrant) as f64).sqrt();
        worst = worst.max((std / noise[q] - 1.0).abs());
        measured.push(format!("{std:.4}"));
    }

    let steps_to_goal = |radius: f64| -> usize {
        let cfg = GridChaosConfig {
            quadrant_noise: [0.0; 4],
            goal_radius: radius,
            max_steps: 100_000,
            ..Default::default()
        };
        let mut env = GridChaos::new(cfg, stream(0, Stream::TrainEnv)).unwrap();
        let mut pos = env.reset();
        for step in 1.. {
            let (dx, dy) = (cfg.goal[0] - pos[0], cfg.goal[1] - pos[1]);
            let d = dx.hypot(dy).min(cfg.max_step_distance);
            let r = env
                .step(&[dy.atan2(dx) / PI, 2.0 * d / cfg.max_step_distance - 1.0])
                .unwrap();
            if r.terminated {
                return step;
            }
            pos = r.observation;
        }
        unreachable!()
    };
    let g = GridChaosConfig::default();
    let distance = (g.goal[0] - g.start[0]).hypot(g.goal[1] - g.start[1]);
    let expected = (distance / g.max_step_distance).ceil() as usize;
    let exact_goal = steps_to_goal(1e-9);
    let default_goal = steps_to_goal(g.goal_radius);
    verdict(
        worst < ENV_STD_REL_TOL && exact_goal == expected,
        format!(
            "quadrant stds {} vs {:?} (worst rel err {:.4} < {ENV_STD_REL_TOL}); straight line {exact_goal} steps, ⌈d/step⌉ = {expected} \
             ({default_goal} with the default goal radius)",
            measured.join("/"),
            noise,
            worst
        ),
    )
}

// ----------------------------------------------------------------

fn main() {
    let skip: Vec<u32> = std::env::var("OVDX_ACCEPTANCE_SKIP")
        .unwrap_or_default()
        .split(',')
        .filter_map(|s| s.trim().parse().ok())
        .collect();
    let mut failed = 0;
    let mut report = |id: u32, name: &str, check: &mut dyn FnMut() -> Outcome| {
        if skip.contains(&id) {
            println!("criterion {id} [{name}]: SKIP");
            return;
        }
        match check() {
            Ok(detail) => println!("criterion {id} [{name}]: PASS: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} [{name}]: FAIL: {detail}");
            }
        }
    };
    let mut grid_runs = None;
    report(1, "gradient correctness", &mut gradient_correctness);
    report(
        2,
        "quantile regression oracle",
        &mut quantile_regression_oracle,
    );
    report(
        3,
        "cdf and exploration ability",
        &mut cdf_and_ability_properties,
    );
    report(4, "zero-step reductions", &mut zero_step_reductions);
    report(6, "uncertainty invariances", &mut uncertainty_invariances);
    report(7, "environment statistics", &mut environment_statistics);
    report(5, "gridchaos reproduction", &mut || {
        gridchaos_reproduction(&mut grid_runs)
    });
    report(8, "determinism", &mut || determinism(&grid_runs));
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
