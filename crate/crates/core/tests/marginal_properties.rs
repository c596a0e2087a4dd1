use copx_core::marginals::{risk_neutral_marginal, DriftMode, NormalMarginal};
use copx_core::normal;

#[test]
fn cdf_quantile_round_trip_on_log_grid() {
    let m = NormalMarginal::new(0.0025, 0.10115).unwrap();
    for k in 1..=150 {
        let p = 10f64.powf(-15.0 + 15.0 * k as f64 / 151.0);
        for q in [p, 1.0 - p] {
            if q <= 0.0 || q >= 1.0 {
                continue;
            }
            let x = m.quantile_transform(q).unwrap();
            let back = m.cdf(x);
            assert!(
                (back - q).abs() <= 1e-9 * q.min(1.0 - q).max(1e-6),
                "p = {q}: {back}"
            );
        }
    }
}

#[test]
fn quantile_transform_is_affine_in_standard_quantile() {
    let m = NormalMarginal::new(0.0075, 0.1).unwrap();
    let centre = m.quantile_transform(0.5).unwrap();
    for u in [1e-12, 0.01, 0.3, 0.5, 0.77, 0.999] {
        let lhs = m.quantile_transform(u).unwrap() - centre;
        let z = normal::quantile(u).unwrap();
        assert!((lhs - m.sd * z).abs() <= 1e-15 * (1.0 + (m.sd * z).abs()));
    }
}

#[test]
fn martingale_drift_prices_forward_at_risk_free_rate() {
    let (r, tau) = (0.03, 0.25);
    for sigma in [0.1, 0.2023, 0.5] {
        let m = risk_neutral_marginal(r, sigma, tau, DriftMode::Martingale).unwrap();
        let n = 1_000_000;
        let mean = (0..n)
            .map(|k| {
                m.quantile_transform((k as f64 + 0.5) / n as f64)
                    .unwrap()
                    .exp()
            })
            .sum::<f64>()
            / n as f64;
        let target = (r * tau).exp();
        assert!(
            (mean / target - 1.0).abs() <= 1e-3,
            "sigma {sigma}: {mean} vs {target}"
        );
    }
}
