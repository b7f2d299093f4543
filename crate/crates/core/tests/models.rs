use approx::assert_abs_diff_eq;
use ordvar::kernel::{apply_n, sigma, stationary};
use ordvar::models::{
    bernoulli_coupling_sigma_bound, bernoulli_exact_distribution, bernoulli_gamma, inventory_model,
    splitting_lattice_model, Shock, DEFAULT_SHOCK_CELLS,
};
use ordvar::{gamma, Measure};

/// Largest tail gap between two laws on a common dyadic grid, found by
/// sweeping the sorted support; on a chain this is the ordered deficiency.
fn tail_gap(a: &[(u64, f64)], b: &[(u64, f64)]) -> f64 {
    let mut points: Vec<u64> = a.iter().chain(b).map(|p| p.0).collect();
    points.sort_unstable();
    points.dedup();
    points
        .iter()
        .map(|&k| {
            let ta: f64 = a.iter().filter(|p| p.0 >= k).map(|p| p.1).sum();
            let tb: f64 = b.iter().filter(|p| p.0 >= k).map(|p| p.1).sum();
            ta - tb
        })
        .fold(0.0, f64::max)
}

#[test]
fn bernoulli_gamma_matches_tail_oracle() {
    for t in 0..=12u32 {
        let law = |x| {
            let d = bernoulli_exact_distribution(x, 0, t).unwrap();
            d.offsets.into_iter().zip(d.weights).collect::<Vec<_>>()
        };
        let (p0, p1) = (law(0), law(1));
        let oracle = tail_gap(&p0, &p1) + tail_gap(&p1, &p0);
        let g = bernoulli_gamma(t).unwrap();
        assert_eq!(g, 2f64.powi(-(t as i32)), "t = {t}");
        assert_abs_diff_eq!(g, oracle, epsilon = 1e-15);
    }
    assert_eq!(bernoulli_coupling_sigma_bound(), 0.5);
}

#[test]
fn inventory_certificate() {
    let m = inventory_model(2.0, 101, Shock::default(), DEFAULT_SHOCK_CELLS).unwrap();
    let s = sigma(&m.poset, &m.kernel).unwrap();
    assert!(s >= m.sigma_lower_bound.unwrap());
    let cert = stationary(&m.poset, &m.kernel, 1).unwrap();
    assert!(cert.residual <= 1e-8);
    let start = Measure::dirac(101, m.nearest(1.0));
    let g0 = gamma(&m.poset, &start, &cert.stationary).unwrap();
    let mut mu = start;
    for t in 1..=50 {
        mu = apply_n(&mu, &m.kernel, 1).unwrap();
        let g = gamma(&m.poset, &mu, &cert.stationary).unwrap();
        assert!(g <= (1.0 - s).powi(t) * g0 + 1e-9, "t = {t}");
    }
}

#[test]
fn splitting_sigma_bound() {
    for &(n, s1, s2) in &[(8, 0.3, 0.3), (5, 0.5, 0.5), (12, 0.1, 0.6), (2, 0.2, 0.2)] {
        let m = splitting_lattice_model(n, s1, s2).unwrap();
        assert!(sigma(&m.poset, &m.kernel).unwrap() >= s1 * s2 - 1e-9);
    }
}
