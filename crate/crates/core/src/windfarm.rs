//! Jensen-wake wind farm simulation and Monte Carlo per-cell power maps.
//!
//! Coordinates are metres with `x1` pointing east and `x2` north. A wind
//! direction is the compass bearing the wind blows from, so `pi/4` is a
//! north-easterly wind travelling towards the south-west.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fit::Dataset;

/// Rated power of the plateau, kW.
pub const RATED_POWER: f64 = 629.1;
pub const CUT_IN: f64 = 2.0;
pub const RATED_SPEED: f64 = 12.8;
pub const CUT_OUT: f64 = 18.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FarmConfig {
    pub cells: usize,
    pub cell_width: f64,
    pub rotor_radius: f64,
    pub wake_decay: f64,
    pub turbines: usize,
}

impl Default for FarmConfig {
    fn default() -> Self {
        FarmConfig {
            cells: 41,
            cell_width: 308.0,
            rotor_radius: 40.0,
            wake_decay: 0.075,
            turbines: 40,
        }
    }
}

impl FarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 {
            return Err(Error::Config("farm needs at least one cell per side".into()));
        }
        if !(self.cell_width > 0.0 && self.rotor_radius > 0.0 && self.wake_decay > 0.0) {
            return Err(Error::Config("cell width, rotor radius and wake decay must be positive".into()));
        }
        if self.turbines > self.cells * self.cells {
            return Err(Error::Config(format!(
                "{} turbines do not fit in {} cells",
                self.turbines,
                self.cells * self.cells
            )));
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.cells * self.cells
    }

    /// Hub position of cell `index`, row-major from the south-west corner.
    pub fn position(&self, index: usize) -> [f64; 2] {
        let col = index % self.cells;
        let row = index / self.cells;
        [
            (col as f64 + 0.5) * self.cell_width,
            (row as f64 + 0.5) * self.cell_width,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindCase {
    pub speed: f64,
    pub direction: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindScenario {
    cases: Vec<WindCase>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    case: Vec<CaseEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseEntry {
    speed: f64,
    direction: f64,
    #[serde(default = "one")]
    weight: f64,
}

fn one() -> f64 {
    1.0
}

impl WindScenario {
    /// Normalises weights to sum to one and directions into `[0, 2 pi)`.
    pub fn new(cases: Vec<WindCase>) -> Result<Self> {
        if cases.is_empty() {
            return Err(Error::Config("scenario needs at least one wind case".into()));
        }
        let mut total = 0.0;
        for c in &cases {
            if !(c.speed >= 0.0 && c.speed.is_finite()) {
                return Err(Error::Config(format!("wind speed must be finite and >= 0, got {}", c.speed)));
            }
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(Error::Config(format!("weight must be finite and >= 0, got {}", c.weight)));
            }
            if !c.direction.is_finite() {
                return Err(Error::Config("wind direction must be finite".into()));
            }
            total += c.weight;
        }
        if !(total > 0.0) {
            return Err(Error::Config("scenario weights sum to zero".into()));
        }
        let cases = cases
            .into_iter()
            .map(|c| WindCase {
                speed: c.speed,
                direction: c.direction.rem_euclid(TAU),
                weight: c.weight / total,
            })
            .collect();
        Ok(WindScenario { cases })
    }

    /// Equally weighted cases over the product of `speeds` and `directions`.
    pub fn uniform(speeds: &[f64], directions: &[f64]) -> Result<Self> {
        let cases = speeds
            .iter()
            .flat_map(|&speed| {
                directions.iter().map(move |&direction| WindCase {
                    speed,
                    direction,
                    weight: 1.0,
                })
            })
            .collect();
        Self::new(cases)
    }

    /// Built-in scenarios `fw1` to `fw4`.
    pub fn builtin(name: &str) -> Result<Self> {
        let steps = |k: usize| (0..k).map(|i| i as f64 * TAU / k as f64).collect::<Vec<_>>();
        match name {
            "fw1" => Self::uniform(&[15.0], &[PI / 4.0]),
            "fw2" => Self::uniform(&[15.0], &steps(4)),
            "fw3" => Self::uniform(&[15.0], &steps(6)),
            "fw4" => Self::uniform(&[12.0, 10.0, 8.0], &steps(12)),
            other => Err(Error::Config(format!("unknown scenario `{other}` (expected fw1..fw4)"))),
        }
    }

    /// Parses a TOML document of `[[case]]` tables with `speed`, `direction` (radians) and optional `weight`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))?;
        Self::new(
            file.case
                .into_iter()
                .map(|c| WindCase {
                    speed: c.speed,
                    direction: c.direction,
                    weight: c.weight,
                })
                .collect(),
        )
    }

    /// A built-in name or a path to a scenario file.
    pub fn load(spec: &str) -> Result<Self> {
        if let Ok(s) = Self::builtin(spec) {
            return Ok(s);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn cases(&self) -> &[WindCase] {
        &self.cases
    }
}

/// Occupied cell indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    cells: Vec<usize>,
}

impl Layout {
    pub fn new(mut cells: Vec<usize>, farm: &FarmConfig) -> Result<Self> {
        cells.sort_unstable();
        if cells.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input("layout cells must be distinct".into()));
        }
        if let Some(&c) = cells.iter().find(|&&c| c >= farm.num_cells()) {
            return Err(Error::Input(format!("cell {c} is outside the farm")));
        }
        Ok(Layout { cells })
    }

    /// Uniform draw over `turbines`-subsets of the cells.
    pub fn random(farm: &FarmConfig, rng: &mut ChaCha8Rng) -> Self {
        let cells = rand::seq::index::sample(rng, farm.num_cells(), farm.turbines).into_vec();
        let mut cells = cells;
        cells.sort_unstable();
        Layout { cells }
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Wind speed at distance where the wake radius is `r`: `v0 (1 - (2/3) R^2 / r^2)`.
pub fn wake_speed(v0: f64, rotor_radius: f64, r: f64) -> Result<f64> {
    if !(rotor_radius > 0.0) || r < rotor_radius {
        return Err(Error::Input(format!(
            "wake radius {r} must be at least the rotor radius {rotor_radius}"
        )));
    }
    let ratio = rotor_radius / r;
    // (3 - 2q) / 3 keeps r == R exactly v0 / 3
    Ok(v0 * (3.0 - 2.0 * ratio * ratio) / 3.0)
}

/// Root-sum-square wake superposition, clamped at zero.
pub fn combined_speed(v0: f64, upstream: &[f64]) -> f64 {
    if v0 <= 0.0 {
        return 0.0;
    }
    let sum: f64 = upstream
        .iter()
        .map(|v| {
            let d = 1.0 - v / v0;
            d * d
        })
        .sum();
    (v0 * (1.0 - sum.sqrt())).max(0.0)
}

/// Piecewise power curve, kW.
pub fn turbine_power(v: f64) -> f64 {
    if v < CUT_IN {
        0.0
    } else if v < RATED_SPEED {
        0.3 * v * v * v
    } else if v <= CUT_OUT {
        RATED_POWER
    } else {
        0.0
    }
}

/// Upwind unit vector of a compass bearing.
fn upwind(direction: f64) -> [f64; 2] {
    [direction.sin(), direction.cos()]
}

/// An upwind turbine shading `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Upstream {
    /// position in the layout
    pub turbine: usize,
    /// downwind distance from it to `i`
    pub distance: f64,
    pub offset: f64,
    /// wake radius at `i`
    pub wake_radius: f64,
}

/// Turbines whose wake cone contains the hub of turbine `i`.
pub fn upstream_set(layout: &Layout, direction: f64, i: usize, farm: &FarmConfig) -> Vec<Upstream> {
    let u = upwind(direction);
    let pi = farm.position(layout.cells[i]);
    let mut out = Vec::new();
    for (j, &cell) in layout.cells.iter().enumerate() {
        if j == i {
            continue;
        }
        let pj = farm.position(cell);
        let delta = [pj[0] - pi[0], pj[1] - pi[1]];
        // positive when j sits upwind of i
        let distance = delta[0] * u[0] + delta[1] * u[1];
        let offset = (delta[0] * u[1] - delta[1] * u[0]).abs();
        let wake_radius = farm.rotor_radius + farm.wake_decay * distance;
        if distance > 1e-9 && offset <= wake_radius + 1e-9 {
            out.push(Upstream {
                turbine: j,
                distance,
                offset,
                wake_radius,
            });
        }
    }
    out
}

/// Effective speed at every turbine for one wind case.
pub fn turbine_speeds(layout: &Layout, case: &WindCase, farm: &FarmConfig) -> Vec<f64> {
    (0..layout.len())
        .map(|i| {
            let v: Vec<f64> = upstream_set(layout, case.direction, i, farm)
                .iter()
                .map(|u| {
                    wake_speed(case.speed, farm.rotor_radius, u.wake_radius)
                        .expect("wake radius grows from the rotor radius")
                })
                .collect();
            combined_speed(case.speed, &v)
        })
        .collect()
}

/// Expected power (kW) of each turbine over the scenario cases.
pub fn simulate_layout(layout: &Layout, scenario: &WindScenario, farm: &FarmConfig) -> Vec<f64> {
    let mut power = vec![0.0; layout.len()];
    for case in scenario.cases() {
        for (p, v) in power.iter_mut().zip(turbine_speeds(layout, case, farm)) {
            *p += case.weight * turbine_power(v);
        }
    }
    power
}

/// Per-cell power accumulated over simulated layouts.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerGrid {
    pub farm: FarmConfig,
    pub sum: Vec<f64>,
    pub count: Vec<u64>,
}

impl PowerGrid {
    /// Mean power per occurrence, `None` for cells never occupied.
    pub fn mean(&self, cell: usize) -> Option<f64> {
        (self.count[cell] > 0).then(|| self.sum[cell] / self.count[cell] as f64)
    }

    /// `(x1, x2) -> mean power` rows for every occupied cell.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for cell in 0..self.farm.num_cells() {
            if let Some(m) = self.mean(cell) {
                rows.push(self.farm.position(cell).to_vec());
                y.push(m);
            }
        }
        if y.len() < 2 {
            return Err(Error::Input(format!(
                "only {} occupied cells; a dataset needs at least 2",
                y.len()
            )));
        }
        Dataset::from_rows(&rows, y)
    }
}

/// Cells grouped into lines perpendicular to the wind, most upwind line first.
pub fn wind_rows(farm: &FarmConfig, direction: f64) -> Vec<Vec<usize>> {
    let u = upwind(direction);
    let tol = 1e-6 * farm.cell_width;
    let mut cells: Vec<(f64, usize)> = (0..farm.num_cells())
        .map(|c| {
            let p = farm.position(c);
            (p[0] * u[0] + p[1] * u[1], c)
        })
        .collect();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::INFINITY;
    for (proj, c) in cells {
        if last - proj > tol {
            rows.push(Vec::new());
            last = proj;
        }
        rows.last_mut().expect("a row was opened").push(c);
    }
    rows
}

/// Occupied-cell means of the `k` most upwind and the `k` most downwind wind rows.
pub fn shading_groups(grid: &PowerGrid, direction: f64, k: usize) -> (Vec<f64>, Vec<f64>) {
    let rows = wind_rows(&grid.farm, direction);
    let k = k.min(rows.len() / 2);
    let means = |rs: &[Vec<usize>]| -> Vec<f64> {
        rs.iter().flatten().filter_map(|&c| grid.mean(c)).collect()
    };
    (means(&rows[..k]), means(&rows[rows.len() - k..]))
}

/// Simulates `layouts` random layouts and averages power per occupied cell.
pub fn monte_carlo_power_grid(
    farm: &FarmConfig,
    scenario: &WindScenario,
    layouts: usize,
    seed: u64,
) -> Result<PowerGrid> {
    farm.validate()?;
    if layouts == 0 {
        return Err(Error::Config("need at least one layout".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drawn: Vec<Layout> = (0..layouts).map(|_| Layout::random(farm, &mut rng)).collect();
    let powers: Vec<Vec<f64>> = drawn
        .par_iter()
        .map(|l| simulate_layout(l, scenario, farm))
        .collect();
    let mut sum = vec![0.0; farm.num_cells()];
    let mut count = vec![0u64; farm.num_cells()];
    for (layout, power) in drawn.iter().zip(&powers) {
        for (&cell, p) in layout.cells().iter().zip(power) {
            sum[cell] += p;
            count[cell] += 1;
        }
    }
    Ok(PowerGrid {
        farm: *farm,
        sum,
        count,
    })
}
