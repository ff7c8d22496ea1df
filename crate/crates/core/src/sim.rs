//! Synthetic panels with a known regime-switching Phillips-curve DGP.
//!
//! Inflation is generated as
//!
//! ```text
//! pi_it = b0 + w_i + b1 pe_it + b2 gap_it + D_it (b3 pe_it + b4 gap_it) + s(D_it) e_it
//! ```
//!
//! where `pe` is either an exogenous expected-inflation process (forward
//! mode) or `pi_{i,t-1}` (backward mode), `gap` is the HP log-unemployment
//! gap exactly as the pipeline computes it, `D` is the recession indicator
//! and `s(D)` optionally inflates the noise in recession quarters. The CPI
//! level is then integrated from `pi` so that `ln(cpi + 1)` differences
//! reproduce it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::ExpectationMode;
use crate::error::{Error, Result};
use crate::hp::unemployment_gap;
use crate::panel::{Grid, PanelDataset, Quarter};

/// Stationary AR(1) around `mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1 {
    pub mean: f64,
    pub phi: f64,
    /// Innovation standard deviation.
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecessionProcess {
    /// Independent recession draws with probability `p`.
    Bernoulli { p: f64 },
    /// Two-state Markov chain: enter with `enter`, stay with `stay`.
    Blocks { enter: f64, stay: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_entities: usize,
    pub n_periods: usize,
    pub start: Quarter,
    /// Intercept, expected-inflation slope, gap slope and the two recession
    /// interaction slopes.
    pub beta: [f64; 5],
    pub sigma_u: f64,
    pub sigma_e: f64,
    /// Noise standard deviation multiplier in recession quarters.
    pub recession_noise_scale: f64,
    pub recession: RecessionProcess,
    pub expectation: ExpectationMode,
    pub expected_inflation: Ar1,
    /// Log-unemployment deviation process; `mean` is the unemployment level.
    pub unemployment: Ar1,
    /// Entity means of expected inflation move by `effect_loading * w_i`.
    pub effect_loading: f64,
    pub lambda: f64,
    pub cpi_start: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    /// The bundled fixture: 41 entities over 1980Q1..2016Q1 with strong,
    /// regressor-correlated entity effects.
    fn default() -> Self {
        Self {
            n_entities: 41,
            n_periods: 145,
            start: Quarter {
                year: 1980,
                quarter: 1,
            },
            beta: [0.003, 0.5, -0.07, 0.3, -0.07],
            sigma_u: 0.004,
            sigma_e: 0.004,
            recession_noise_scale: 1.0,
            recession: RecessionProcess::Blocks {
                enter: 0.08,
                stay: 0.6,
            },
            expectation: ExpectationMode::Forward,
            expected_inflation: Ar1 {
                mean: 0.01,
                phi: 0.8,
                sd: 0.003,
            },
            unemployment: Ar1 {
                mean: 6.0,
                phi: 0.9,
                sd: 0.05,
            },
            effect_loading: 2.0,
            lambda: 1600.0,
            cpi_start: 100.0,
            seed: 42,
        }
    }
}

impl SimConfig {
    /// Tranquil gap slope -0.07, no recession shift in the slope, and ten
    /// times noisier recession quarters on a 20-entity panel.
    pub fn regime_pattern(seed: u64) -> Self {
        Self {
            n_entities: 20,
            sigma_e: 0.03,
            beta: [0.003, 0.5, -0.07, 0.0, 0.0],
            recession_noise_scale: 10.0,
            effect_loading: 0.0,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_entities == 0 || self.n_periods < 4 {
            return bad(format!(
                "need at least one entity and four periods, got {}x{}",
                self.n_entities, self.n_periods
            ));
        }
        if self.sigma_u < 0.0 || self.sigma_e < 0.0 || self.recession_noise_scale < 0.0 {
            return bad("standard deviations must be non-negative".into());
        }
        for (name, ar) in [
            ("expected_inflation", self.expected_inflation),
            ("unemployment", self.unemployment),
        ] {
            if !(ar.phi > -1.0 && ar.phi < 1.0) || ar.sd < 0.0 {
                return bad(format!("{name}: need |phi| < 1 and sd >= 0"));
            }
        }
        if self.unemployment.mean <= 0.0 {
            return bad("unemployment mean must be positive".into());
        }
        match self.recession {
            RecessionProcess::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                return bad(format!("recession probability {p} outside [0, 1]"));
            }
            RecessionProcess::Blocks { enter, stay }
                if !(0.0..=1.0).contains(&enter) || !(0.0..=1.0).contains(&stay) =>
            {
                return bad("recession transition probabilities outside [0, 1]".into());
            }
            _ => {}
        }
        if !(self.lambda > 0.0) {
            return bad("lambda must be positive".into());
        }
        Ok(())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn ar1_path(rng: &mut ChaCha8Rng, ar: Ar1, len: usize) -> Vec<f64> {
    let stationary_sd = ar.sd / (1.0 - ar.phi * ar.phi).sqrt();
    let mut x = stationary_sd * normal(rng);
    (0..len)
        .map(|_| {
            let out = x;
            x = ar.phi * x + ar.sd * normal(rng);
            out
        })
        .collect()
}

fn recession_path(rng: &mut ChaCha8Rng, process: RecessionProcess, len: usize) -> Vec<bool> {
    match process {
        RecessionProcess::Bernoulli { p } => (0..len).map(|_| rng.random::<f64>() < p).collect(),
        RecessionProcess::Blocks { enter, stay } => {
            let mut state = false;
            (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    state = if state { u < stay } else { u < enter };
                    state
                })
                .collect()
        }
    }
}

/// Draws a panel from `sim`. Identical configs (seed included) give
/// bitwise-identical panels.
pub fn simulate_panel(sim: &SimConfig) -> Result<PanelDataset> {
    sim.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let (n, t_len) = (sim.n_entities, sim.n_periods);
    let width = n.to_string().len().max(2);
    let entities: Vec<String> = (1..=n).map(|i| format!("C{i:0width$}")).collect();
    let [b0, b1, b2, b3, b4] = sim.beta;

    let mut rows: BTreeMap<&str, Vec<Vec<Option<f64>>>> = BTreeMap::new();
    for _ in 0..n {
        let omega = sim.sigma_u * normal(&mut rng);
        let recession = recession_path(&mut rng, sim.recession, t_len);
        let growth: Vec<Option<f64>> = recession
            .iter()
            .map(|&r| {
                let size = normal(&mut rng).abs();
                Some(if r {
                    -(0.1 + 0.5 * size)
                } else {
                    0.1 + 0.8 * size
                })
            })
            .collect();

        let u_dev = ar1_path(&mut rng, sim.unemployment, t_len);
        let unemployment: Vec<Option<f64>> = u_dev
            .iter()
            .map(|d| Some(sim.unemployment.mean * d.exp()))
            .collect();
        // Unemployment is positive, so the pipeline's automatic shift is 1.
        let gap = unemployment_gap(&unemployment, sim.lambda, 1.0)?;

        let entity_mean = sim.expected_inflation.mean + sim.effect_loading * omega;
        let expected: Vec<f64> = ar1_path(&mut rng, sim.expected_inflation, t_len)
            .into_iter()
            .map(|d| entity_mean + d)
            .collect();

        let mut pi = vec![0.0; t_len];
        let mut prev = entity_mean;
        for t in 0..t_len {
            let d = if recession[t] { 1.0 } else { 0.0 };
            let pe = match sim.expectation {
                ExpectationMode::Forward => expected[t],
                ExpectationMode::Backward => prev,
            };
            let g = gap[t].expect("gap covers the full span");
            let scale = if recession[t] {
                sim.recession_noise_scale
            } else {
                1.0
            };
            pi[t] = b0
                + omega
                + (b1 + b3 * d) * pe
                + (b2 + b4 * d) * g
                + scale * sim.sigma_e * normal(&mut rng);
            prev = pi[t];
        }

        // ln(cpi + 1) integrates pi from t = 1 on; the offset keeps cpi >= 1.
        let mut level = vec![0.0; t_len];
        for t in 1..t_len {
            level[t] = level[t - 1] + pi[t];
        }
        let lowest = level.iter().copied().fold(f64::INFINITY, f64::min);
        let offset = (sim.cpi_start + 1.0).ln().max(2f64.ln() - lowest);
        let cpi = level
            .iter()
            .map(|l| Some((l + offset).exp() - 1.0))
            .collect();

        rows.entry("cpi").or_default().push(cpi);
        rows.entry("expected_cpi")
            .or_default()
            .push(expected.into_iter().map(Some).collect());
        rows.entry("unemployment").or_default().push(unemployment);
        rows.entry("gdp_growth").or_default().push(growth);
    }

    let series = rows
        .into_iter()
        .map(|(k, v)| Ok((k.to_string(), Grid::from_rows(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    PanelDataset::new(entities, sim.start.range(t_len), series)
}
