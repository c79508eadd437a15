//! Writes the synthetic daily pollutant fixture used by the test suite.
//!
//! ```text
//! cargo run --example make_fixture -- tests/fixtures/synthetic_city_day.csv
//! ```

use std::f64::consts::TAU;
use std::fmt::Write;

use chrono::NaiveDate;
use qklstm::preprocess::{compute_aqi, BreakpointTable, CPCB_FEATURES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const DAYS: u64 = 200;

// (base level, seasonal amplitude, trend per day, noise σ)
const SHAPES: [(f64, f64, f64, f64); 11] = [
    (38.0, 18.0, 0.04, 3.0),  // PM2.5
    (80.0, 30.0, 0.06, 6.0),  // PM10
    (9.0, 4.0, 0.0, 1.0),     // NO
    (28.0, 10.0, 0.02, 2.5),  // NO2
    (30.0, 11.0, 0.02, 2.5),  // NOx
    (22.0, 6.0, 0.0, 2.0),    // NH3
    (1.1, 0.4, 0.001, 0.1),   // CO
    (7.0, 2.0, 0.0, 0.6),     // SO2
    (32.0, 12.0, -0.02, 3.0), // O3
    (1.5, 0.6, 0.0, 0.15),    // Benzene
    (4.5, 1.8, 0.0, 0.4),     // Toluene
];

fn bucket(aqi: f64) -> &'static str {
    match aqi {
        a if a <= 50.0 => "Good",
        a if a <= 100.0 => "Satisfactory",
        a if a <= 200.0 => "Moderate",
        a if a <= 300.0 => "Poor",
        a if a <= 400.0 => "Very Poor",
        _ => "Severe",
    }
}

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "synthetic_city_day.csv".into());
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    let table = BreakpointTable::cpcb();
    let start = NaiveDate::from_ymd_opt(2019, 7, 15).unwrap();

    let mut out = String::from("City,Date");
    for f in CPCB_FEATURES {
        write!(out, ",{f}").unwrap();
    }
    out.push_str(",Xylene,AQI,AQI_Bucket\n");

    for t in 0..DAYS {
        let date = start + chrono::Days::new(t);
        let day = t as f64;
        // annual cycle peaking in winter plus a weekly cycle
        let season = (TAU * (day + 40.0) / 365.0).cos();
        let week = (TAU * day / 7.0).sin();
        let mut values = Vec::with_capacity(SHAPES.len());
        for &(base, amp, trend, sigma) in &SHAPES {
            let noise = Normal::new(0.0, sigma).unwrap().sample(&mut rng);
            let v = base + 1.6 * amp * (0.5 * season + 0.5) + 0.3 * amp * week + trend * day + 0.6 * noise;
            values.push(v.max(0.01));
        }
        let named: Vec<(&str, f64)> = CPCB_FEATURES.iter().copied().zip(values.iter().copied()).collect();
        let aqi = compute_aqi(&named, &table).unwrap().aqi.round();

        write!(out, "Bengaluru,{date}").unwrap();
        for v in &values {
            let cell = if rng.gen_bool(0.03) {
                String::new()
            } else if rng.gen_bool(0.008) {
                format!("{:.2}", v * 8.0)
            } else {
                format!("{v:.2}")
            };
            write!(out, ",{cell}").unwrap();
        }
        let xylene = rng.gen_range(0.1..2.0);
        let aqi_cell = if rng.gen_bool(0.02) {
            String::new()
        } else {
            format!("{aqi}")
        };
        writeln!(out, ",{xylene:.2},{aqi_cell},{}", bucket(aqi)).unwrap();
    }
    std::fs::write(&path, out).unwrap();
    eprintln!("wrote {DAYS} days to {path}");
}
