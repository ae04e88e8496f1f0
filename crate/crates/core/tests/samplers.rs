use comparison_sampling::stats::{chi_square_test, ks_test, ks_two_sample, measure_consumption, moments, sorted};
use comparison_sampling::{IntervalTable, Sampler, SamplerConfig, SamplerKind, Scheme};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

// Stricter than the acceptance level: these are fixed-seed regression checks.
const ALPHA: f64 = 0.001;

/// Composite Simpson rule on `[a, b]` with `2m` panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// Fresh uniforms per accepted sample for one interval: every trial draws
/// the candidate offset plus `n` run uniforms with `E[n | G] = e^G`, and
/// succeeds with probability `e^{-G}`.
fn interval_cost<G: Fn(f64) -> f64>(g: G, width: f64) -> f64 {
    let run = simpson(|t| (g(t)).exp(), 0.0, width, 2000) / width;
    let accept = simpson(|t| (-g(t)).exp(), 0.0, width, 2000) / width;
    (1.0 + run) / accept
}

#[test]
fn exp_vn_consumption_matches_quadrature() {
    // Each trial restarts on [0, 1) with G = w; the analytic value is e^2 / (e - 1).
    let want = interval_cost(|w| w, 1.0);
    assert!((want - std::f64::consts::E.powi(2) / (std::f64::consts::E - 1.0)).abs() < 1e-9);
    let r = measure_consumption(&SamplerConfig::new(SamplerKind::ExpVn).unwrap(), 1_000_000, 21).unwrap();
    assert!(
        (r.mean_per_sample - want).abs() < 4.0 * r.ci95_halfwidth / 1.96,
        "measured {} want {want}",
        r.mean_per_sample
    );
}

#[test]
fn normal_forsythe_consumption_matches_quadrature() {
    let tail = |x: f64| erfc(x / std::f64::consts::SQRT_2);
    let mut want = 1.0 + 1.0 / 53.0; // selection uniform, pooled sign bit
    let mut mass = 0.0;
    for k in 1..=53usize {
        let lo = if k == 1 { 0.0 } else { ((2 * k - 3) as f64).sqrt() };
        let hi = ((2 * k - 1) as f64).sqrt();
        let q = tail(lo) - tail(hi);
        mass += q;
        want += q * interval_cost(|t| 0.5 * t * (2.0 * lo + t), hi - lo);
    }
    assert!((mass - 1.0).abs() < 1e-12);
    let r = measure_consumption(&SamplerConfig::new(SamplerKind::NormalForsythe).unwrap(), 1_000_000, 22).unwrap();
    assert!(
        (r.mean_per_sample - want).abs() < 4.0 * r.ci95_halfwidth / 1.96,
        "measured {} want {want}",
        r.mean_per_sample
    );
}

#[test]
fn recycling_lowers_consumption_for_dyadic_samplers() {
    for kind in [SamplerKind::ExpBrent, SamplerKind::NormalGrand] {
        let with = SamplerConfig::new(kind).unwrap();
        let without = SamplerConfig::new(kind).unwrap().recycling(false);
        let a = measure_consumption(&with, 200_000, 5).unwrap();
        let b = measure_consumption(&without, 200_000, 5).unwrap();
        assert!(
            a.mean_per_sample + a.ci95_halfwidth + b.ci95_halfwidth < b.mean_per_sample,
            "{kind}: {} vs {}",
            a.mean_per_sample,
            b.mean_per_sample
        );
    }
}

#[test]
fn comparison_samplers_agree_with_baselines() {
    let pairs = [
        (SamplerKind::ExpBrent, SamplerKind::ExpLog),
        (SamplerKind::ExpVn, SamplerKind::ExpLog),
        (SamplerKind::NormalGrand, SamplerKind::NormalBoxMuller),
        (SamplerKind::NormalForsythe, SamplerKind::NormalPolar),
    ];
    for (i, (a, b)) in pairs.into_iter().enumerate() {
        let xs = Sampler::from_seed(a, 100 + i as u64).unwrap().take(200_000).unwrap();
        let ys = Sampler::from_seed(b, 200 + i as u64).unwrap().take(200_000).unwrap();
        let r = ks_two_sample(&sorted(xs), &sorted(ys), ALPHA).unwrap();
        assert!(r.passed, "{a} vs {b}: {r}");
    }
}

#[test]
fn baselines_match_their_targets() {
    for (i, kind) in
        [SamplerKind::ExpLog, SamplerKind::NormalBoxMuller, SamplerKind::NormalPolar].into_iter().enumerate()
    {
        let xs = Sampler::from_seed(kind, 300 + i as u64).unwrap().take(200_000).unwrap();
        let r = ks_test(&sorted(xs), kind.target_cdf(), ALPHA).unwrap();
        assert!(r.passed, "{kind}: {r}");
    }
}

/// Within interval `k` the normal samplers must follow the density
/// restricted to `[a_{k-1}, a_k)`.
fn conditional_check(kind: SamplerKind, seed: u64) {
    let scheme = kind.scheme().unwrap();
    let table = IntervalTable::build(scheme, 53).unwrap();
    let normal = Normal::standard();
    let mut sampler = Sampler::from_seed(kind, seed).unwrap();
    let mut by_interval: Vec<Vec<f64>> = vec![Vec::new(); 7];
    for _ in 0..400_000 {
        let s = sampler.next_sample().unwrap();
        let k = s.interval.unwrap() as usize;
        if k <= 6 {
            by_interval[k].push(s.value.abs());
        }
    }
    for (k, values) in by_interval.iter().enumerate().skip(1) {
        let (lo, hi) = table.interval(k);
        if values.len() < 200 {
            continue;
        }
        let bins = 10;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
        let total = normal.cdf(hi) - normal.cdf(lo);
        let probs: Vec<f64> = edges.windows(2).map(|e| (normal.cdf(e[1]) - normal.cdf(e[0])) / total).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            assert!((lo..hi).contains(&v), "{kind} k={k}: {v} outside [{lo}, {hi})");
            counts[(((v - lo) / (hi - lo)) * bins as f64).min(bins as f64 - 1.0) as usize] += 1;
        }
        let r = chi_square_test(&counts, &probs, ALPHA).unwrap();
        assert!(r.passed, "{kind} interval {k}: {r}");
    }
}

#[test]
fn grand_conditional_densities() {
    conditional_check(SamplerKind::NormalGrand, 41);
}

#[test]
fn forsythe_conditional_densities() {
    conditional_check(SamplerKind::NormalForsythe, 42);
}

#[test]
fn forsythe_interval_occupancy() {
    let table = IntervalTable::build(Scheme::NormalForsythe, 53).unwrap();
    let mut sampler = Sampler::from_seed(SamplerKind::NormalForsythe, 43).unwrap();
    let mut counts = vec![0u64; 53];
    for _ in 0..300_000 {
        counts[sampler.next_sample().unwrap().interval.unwrap() as usize - 1] += 1;
    }
    let mut probs = table.select_probs().unwrap().to_vec();
    let missing = 1.0 - probs.iter().sum::<f64>();
    *probs.last_mut().unwrap() += missing;
    let r = chi_square_test(&counts, &probs, ALPHA).unwrap();
    assert!(r.passed, "{r}");
}

#[test]
fn normal_outputs_are_symmetric() {
    for (i, kind) in
        [SamplerKind::NormalGrand, SamplerKind::NormalForsythe, SamplerKind::NormalWallace].into_iter().enumerate()
    {
        let xs = Sampler::from_seed(kind, 500 + i as u64).unwrap().take(200_000).unwrap();
        let m = moments(&xs).unwrap();
        let n = xs.len() as f64;
        // skewness sd ~ sqrt(6/n), excess kurtosis sd ~ sqrt(24/n)
        assert!(m.mean.abs() < 5.0 / n.sqrt(), "{kind} mean {}", m.mean);
        assert!(m.skewness.abs() < 5.0 * (6.0 / n).sqrt(), "{kind} skew {}", m.skewness);
        assert!(m.excess_kurtosis.abs() < 5.0 * (24.0 / n).sqrt(), "{kind} kurt {}", m.excess_kurtosis);
    }
}

#[test]
fn short_tables_still_sample_correctly() {
    for (kind, len) in [(SamplerKind::ExpBrent, 4), (SamplerKind::NormalGrand, 3), (SamplerKind::NormalForsythe, 5)] {
        let config = SamplerConfig::with_table_len(kind, len).unwrap();
        let mut sampler = Sampler::new(config, comparison_sampling::UniformSource::new(61)).unwrap();
        let table = IntervalTable::build(kind.scheme().unwrap(), len).unwrap();
        let last = table.boundaries()[len];
        let mut in_last = 0usize;
        for _ in 0..20_000 {
            let s = sampler.next_sample().unwrap();
            assert!(s.value.abs() < last, "{kind} K={len}: {} beyond {last}", s.value);
            in_last += usize::from(s.interval == Some(len as u32));
        }
        assert!(in_last > 0);
    }
}
