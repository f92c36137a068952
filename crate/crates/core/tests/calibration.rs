mod common;

use cgmy_eds::calibration::{
    calibrate, check_quotes, european_price, model_prices, parse_quotes_csv, CalibrationConfig,
    FourierConfig, Market, OptionKind, OptionQuote,
};
use cgmy_eds::hyperexp::{CgmyParams, ExpMixtureFit};
use cgmy_eds::levymodel::{DiffusionConfig, HyperExpLevyModel};
use cgmy_eds::mcoracle::{simulate_terminal, Estimate, SimConfig};
use cgmy_eds::Error;
use common::black_scholes;

const MARKET: Market = Market {
    spot: 100.0,
    rate: 0.05,
    dividend: 0.01,
};

fn model(p: &CgmyParams, sigma: bool) -> HyperExpLevyModel {
    let d = DiffusionConfig {
        enabled: sigma,
        ..DiffusionConfig::default()
    };
    HyperExpLevyModel::assemble(
        p,
        &ExpMixtureFit::preset(),
        &d,
        MARKET.rate,
        MARKET.dividend,
    )
    .unwrap()
}

fn ford() -> CgmyParams {
    CgmyParams::new(0.6506, 1.9458, 11.0187, 0.5).unwrap()
}

/// Out-of-the-money quotes on a strike ladder at two maturities.
fn synthetic_quotes(p: &CgmyParams) -> Vec<OptionQuote> {
    let mut quotes = Vec::new();
    for t in [1.0, 2.0] {
        for k in [70.0, 80.0, 90.0, 100.0, 110.0, 120.0, 135.0] {
            let kind = if k < 100.0 {
                OptionKind::Put
            } else {
                OptionKind::Call
            };
            quotes.push(OptionQuote {
                strike: k,
                maturity: t,
                price: 0.0,
                kind,
            });
        }
    }
    let prices = model_prices(
        p,
        &ExpMixtureFit::preset(),
        &MARKET,
        &quotes,
        &CalibrationConfig::default(),
    )
    .unwrap();
    for (q, v) in quotes.iter_mut().zip(prices) {
        q.price = v;
    }
    quotes
}

#[test]
fn pure_diffusion_prices_match_black_scholes() {
    for vol in [0.1, 0.3, 0.6] {
        let m =
            HyperExpLevyModel::brownian(MARKET.rate - MARKET.dividend - 0.5 * vol * vol, vol * vol)
                .unwrap();
        for t in [0.25, 1.0, 3.0] {
            for k in [50.0, 95.0, 100.0, 140.0] {
                for (kind, call) in [(OptionKind::Call, true), (OptionKind::Put, false)] {
                    let got =
                        european_price(&m, &MARKET, k, t, kind, &FourierConfig::default()).unwrap();
                    let want =
                        black_scholes(MARKET.spot, k, MARKET.rate, MARKET.dividend, vol, t, call);
                    assert!(
                        (got - want).abs() < 1e-6,
                        "vol {vol} t {t} k {k}: {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn prices_are_arbitrage_free_in_strike() {
    for sigma in [true, false] {
        let m = model(&ford(), sigma);
        let strikes: Vec<f64> = (0..30).map(|i| 40.0 + 5.0 * i as f64).collect();
        let calls: Vec<f64> = strikes
            .iter()
            .map(|&k| {
                european_price(
                    &m,
                    &MARKET,
                    k,
                    1.5,
                    OptionKind::Call,
                    &FourierConfig::default(),
                )
                .unwrap()
            })
            .collect();
        for (k, c) in strikes.iter().zip(&calls) {
            let (lo, hi) = MARKET.bounds(*k, 1.5, OptionKind::Call);
            assert!(*c >= lo - 1e-9 && *c <= hi + 1e-9);
        }
        assert!(calls.windows(2).all(|w| w[1] < w[0]));
        assert!(calls.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] > -1e-9));
    }
}

#[test]
fn fourier_prices_agree_with_simulation() {
    let m = model(&ford(), true);
    let t = 1.0;
    let sim = SimConfig {
        paths: 400_000,
        ..SimConfig::default()
    };
    let xs = simulate_terminal(&m, t, &sim).unwrap();
    let df = (-MARKET.rate * t).exp();
    for k in [80.0, 100.0, 125.0] {
        let payoffs: Vec<f64> = xs
            .iter()
            .map(|x| df * (MARKET.spot * x.exp() - k).max(0.0))
            .collect();
        let est = Estimate::from_samples(&payoffs);
        let price = european_price(
            &m,
            &MARKET,
            k,
            t,
            OptionKind::Call,
            &FourierConfig::default(),
        )
        .unwrap();
        assert!(
            est.agrees_with(price, 3.0, 0.0),
            "K {k}: MC {} ± {} vs {price}",
            est.mean,
            est.std_error
        );
    }
}

#[test]
fn round_trip_from_perturbed_start() {
    let truth = ford();
    let quotes = synthetic_quotes(&truth);
    let start = CgmyParams::new(truth.c * 1.5, truth.g * 0.5, truth.m * 1.5, 0.5).unwrap();
    let rep = calibrate(
        &quotes,
        &MARKET,
        &start,
        &ExpMixtureFit::preset(),
        &CalibrationConfig::default(),
    )
    .unwrap();
    for (got, want) in [
        (rep.params.c, truth.c),
        (rep.params.g, truth.g),
        (rep.params.m, truth.m),
    ] {
        assert!((got - want).abs() < 1e-3 * want, "{:?}", rep.params);
    }
    assert!(rep.rmse < 1e-6);
    assert_eq!(rep.residuals.len(), quotes.len());
}

#[test]
fn quote_validation() {
    let quotes = synthetic_quotes(&ford());
    let cfg = CalibrationConfig::default();
    assert!(check_quotes(&quotes, &MARKET, &cfg).is_ok());

    let mut bad = quotes.clone();
    bad[3].price = 1e6;
    match check_quotes(&bad, &MARKET, &cfg) {
        Err(Error::Arbitrage { index, .. }) => assert_eq!(index, 3),
        other => panic!("{other:?}"),
    }

    let mut far = quotes.clone();
    far[0].maturity = 5.0;
    assert!(matches!(
        check_quotes(&far, &MARKET, &cfg),
        Err(Error::InvalidInput(_))
    ));

    let dup = vec![quotes[0]; 5];
    assert!(check_quotes(&dup, &MARKET, &cfg).is_err());
}

#[test]
fn quotes_csv() {
    let q =
        parse_quotes_csv("strike,maturity,price,type\n90, 1.0, 4.5, put\n110,2,7.25,C\n").unwrap();
    assert_eq!(q.len(), 2);
    assert_eq!(q[1].kind, OptionKind::Call);
    assert_eq!(q[0].strike, 90.0);
    for bad in [
        "",
        "strike,maturity,price\n90,1,4\n",
        "strike,maturity,price,type\n90,1,4,straddle\n",
        "strike,maturity,price,type\n90,x,4,put\n",
        "strike,maturity,price,type\n90,1,4\n",
    ] {
        assert!(parse_quotes_csv(bad).is_err(), "{bad:?}");
    }
}
