//! Randomized invariants: file-format round trips, decay-rate recovery, the
//! Gronwall check on subsolutions, and the μ-interval arithmetic.

use std::sync::Arc;

use nudge_lab::analysis::{fit_decay_samples, gronwall_check, ErrorSeries};
use nudge_lab::assimilation::{initial_state, mu_range, History, Model, Params};
use nudge_lab::interpolants::{InterpolantKind, Observation};
use nudge_lab::io::{decode_records, encode_records, Checkpoint, ExperimentConfig};
use nudge_lab::spectral::Grid;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        (-300i32..300, -1.0..1.0f64).prop_map(|(e, m)| m * 10f64.powi(e)),
    ]
}

fn positive() -> impl Strategy<Value = f64> {
    (-6i32..3, 1.0..10.0f64).prop_map(|(e, m)| m * 10f64.powi(e))
}

fn config_text() -> impl Strategy<Value = String> {
    (
        prop::bool::ANY,
        (8usize..64, 8usize..64),
        (positive(), positive(), positive(), positive()),
        (1usize..40, 1usize..20, 1usize..20),
        any::<u64>(),
        prop::option::of(positive()),
        prop_oneof![
            Just(String::new()),
            positive().prop_map(|a| format!("perturbation = constant:{a:e}\n")),
            (positive(), positive())
                .prop_map(|(a, r)| format!("perturbation = exponential:{a:e}:{r:e}\n")),
        ],
        prop::sample::select(vec!["modal", "volume", "smoothed_volume"]),
    )
        .prop_map(
            |(nse, (nx, ny), (nu, kappa, dt, c), (modes, rec, obs), seed, mu, pert, ip)| {
                let mut s = String::new();
                s += &format!("model = {}\n", if nse { "nse" } else { "boussinesq" });
                s += &format!("resolution = {nx}, {ny}\n");
                s += &format!("nu = {nu:e}\nkappa = {kappa:e}\ndt = {dt:e}\nc_interp = {c}\n");
                s += &format!("modes = {modes}\nrecord_every = {rec}\nobserve_every = {obs}\n");
                s += &format!("seed = {seed}\ninterpolant = {ip}\n");
                if let Some(m) = mu {
                    s += &format!("mu = {m:e}\n");
                }
                s + &pert
            },
        )
}

fn observation() -> impl Strategy<Value = Observation> {
    (
        prop::sample::select(vec![
            InterpolantKind::Modal,
            InterpolantKind::Volume,
            InterpolantKind::SmoothedVolume,
        ]),
        finite(),
        1usize..4,
        prop::collection::vec(finite(), 0..40),
    )
        .prop_map(|(kind, time, components, payload)| Observation {
            kind,
            time,
            components,
            payload,
        })
}

fn series() -> impl Strategy<Value = ErrorSeries> {
    (1usize..5, 1usize..30).prop_flat_map(|(cols, rows)| {
        (
            -1e3..1e3f64,
            prop::collection::vec((positive(), prop::collection::vec(finite(), cols)), rows),
        )
            .prop_map(move |(t0, data)| {
                let names: Vec<String> = (0..cols).map(|i| format!("c{i}")).collect();
                let mut s = ErrorSeries::new(&names);
                let mut t = t0;
                for (step, row) in data {
                    s.push(t, &row).unwrap();
                    t += step;
                }
                s
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_text_round_trips(text in config_text()) {
        let cfg = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn checkpoint_round_trips(
        seed in any::<u64>(),
        n in prop::sample::select(vec![8usize, 10, 12]),
        nse in prop::bool::ANY,
        t in 0.0..1e3f64,
        dt in positive(),
        steps in any::<u64>(),
        with_history in prop::bool::ANY,
    ) {
        let g = Arc::new(Grid::torus(&[1.0, 2.0], &[n, n]).unwrap());
        let state = initial_state(&g, seed, 1.0, 0.5);
        let history = with_history.then(|| {
            let h = initial_state(&g, seed ^ 1, 0.1, 0.1);
            History { velocity: h.u, temperature: h.theta }
        });
        let c = Checkpoint {
            model: if nse { Model::NavierStokes } else { Model::Boussinesq },
            dt,
            steps,
            state: nudge_lab::assimilation::FlowState { t, ..state },
            history,
        };
        let bytes = c.encode();
        let back = Checkpoint::decode(&bytes).unwrap();
        prop_assert_eq!(back.encode(), bytes);
        prop_assert_eq!(back, c);
    }

    #[test]
    fn stream_records_round_trip(records in prop::collection::vec(observation(), 0..6)) {
        let bytes = encode_records(&records);
        prop_assert_eq!(decode_records(&bytes).unwrap(), records);
    }

    #[test]
    fn series_csv_round_trips(s in series()) {
        let text = s.to_csv_string();
        prop_assert_eq!(ErrorSeries::read_csv(text.as_bytes()).unwrap(), s);
    }

    #[test]
    fn fit_recovers_exponential_rate(
        rate in 0.05..20.0f64,
        amp in positive(),
        n in 10usize..300,
        span in 0.5..5.0f64,
    ) {
        let t: Vec<f64> = (0..n).map(|i| span / rate * i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = t.iter().map(|&s| amp * (-rate * s).exp()).collect();
        let fit = fit_decay_samples(&t, &y, 1.0).unwrap();
        prop_assert!((fit.rate - rate).abs() <= 1e-8 * rate, "{} vs {}", fit.rate, rate);
        prop_assert!(fit.residual < 1e-8);
    }

    #[test]
    fn gronwall_holds_on_subsolutions(
        mu in 0.5..4.0f64,
        y0 in positive(),
        kinks in prop::collection::vec((0.0..1.0f64, 0.0..3.0f64), 0..6),
    ) {
        // y = y0 exp(-mu t - G(t)) with G nondecreasing satisfies the
        // integral hypothesis, so both conclusions must hold.
        let t_end = 10.0 / mu;
        let t: Vec<f64> = (0..400).map(|i| t_end * i as f64 / 399.0).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&s| {
                let g: f64 = kinks
                    .iter()
                    .map(|&(k, slope)| slope * mu * (s - k * t_end).max(0.0))
                    .sum();
                y0 * (-mu * s - g).exp()
            })
            .collect();
        let r = gronwall_check(&t, &y, mu).unwrap();
        prop_assert!(r.hypothesis_holds, "{r:?}");
        prop_assert_eq!(r.conclusion_holds, Some(true));
        prop_assert_eq!(r.corollary_holds, Some(true));
    }

    #[test]
    fn mu_interval_empty_iff_condition_fails(
        m_h in positive(),
        h in positive(),
        h0 in positive(),
        nu in positive(),
        c in positive(),
    ) {
        let mut p = Params::new(nu, nu);
        p.c_interp = c;
        let r = mu_range(m_h, h, h0, &p);
        // Nonempty exactly when h <= h0 and 16cM⁴/ν³ <= ν/(4ch²).
        let lhs = 64.0 * c * c * m_h.powi(4) * h * h;
        let rhs = nu.powi(4);
        let direct = h <= h0 && lhs <= rhs;
        let near = (lhs - rhs).abs() <= 1e-12 * rhs;
        if !near {
            prop_assert_eq!(!r.is_empty(), direct, "{:?}", r);
        }
        if let Some(mu) = r.default_mu() {
            prop_assert!(r.contains(mu));
        }
    }
}
