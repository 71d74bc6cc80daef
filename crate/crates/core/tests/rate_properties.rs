use proptest::prelude::*;
use qrng_core::entropy::{g_rate, optimize_rate};
use qrng_core::{DeltaConvention, ProtocolParams, TSIRELSON_WIN};

// grid + golden-section leaves the optimum accurate to well below this
const SLACK: f64 = 1e-10;

fn params() -> impl Strategy<Value = ProtocolParams> {
    (
        1e4f64..1e12,
        0.05f64..=1.0,
        0.7501f64..TSIRELSON_WIN,
        0.0f64..0.02,
        -12.0f64..-1.0,
        -12.0f64..-1.0,
    )
        .prop_map(|(n, q, omega_exp, delta_est, ls, le)| ProtocolParams {
            n: n as u64,
            q,
            omega_exp,
            delta_est,
            eps_s: 10f64.powf(ls),
            eps_ea: 10f64.powf(le),
            t_e: 100,
            delta_convention: DeltaConvention::ScoreShift,
        })
}

fn rate(p: &ProtocolParams) -> f64 {
    optimize_rate(p).unwrap().r_opt
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_is_a_fraction_of_a_bit(p in params()) {
        let c = optimize_rate(&p).unwrap();
        prop_assert!((0.0..=1.0).contains(&c.r_opt));
        // never above the asymptotic curve at the observed winning probability
        prop_assert!(c.r_opt <= g_rate(p.score_point() / p.q) + SLACK);
        prop_assert_eq!(c.certifiable, c.raw_rate > 0.0);
    }

    #[test]
    fn wider_estimate_costs_rate(p in params(), extra in 0.0f64..0.01) {
        let wider = ProtocolParams { delta_est: p.delta_est + extra, ..p };
        prop_assert!(rate(&wider) <= rate(&p) + SLACK);
    }

    #[test]
    fn more_trials_help(p in params(), factor in 1.0f64..100.0) {
        let more = ProtocolParams { n: (p.n as f64 * factor) as u64, ..p };
        prop_assert!(rate(&more) + SLACK >= rate(&p));
    }

    #[test]
    fn looser_security_helps(p in params(), factor in 1.0f64..1e3) {
        let loose = ProtocolParams { eps_s: (p.eps_s * factor).min(0.5), eps_ea: (p.eps_ea * factor).min(0.5), ..p };
        prop_assert!(rate(&loose) + SLACK >= rate(&p));
    }

    #[test]
    fn stronger_violation_helps(p in params(), step in 0.0f64..0.01) {
        let better = ProtocolParams { omega_exp: (p.omega_exp + step).min(TSIRELSON_WIN), ..p };
        prop_assert!(rate(&better) + SLACK >= rate(&p));
    }
}
