//! Behavioral model of a 1-bit ReRAM crossbar.
//!
//! Cells hold a conductance in µS. Two nominal states (State 0 at 20 µS,
//! State 1 at 70 µS by default) each accept a ±tolerance window; anything
//! outside both windows is indeterminate. Programming is stochastic: a write
//! lands inside its target window with probability `p_cell_success`,
//! otherwise it scatters around the target nominal and ends up outside the
//! window. Write energy is the absolute change in stored energy along a
//! configurable piecewise-linear curve, scaled by lognormal noise. Reads
//! drive rows at `v_read` and sum column currents; the 2T-1R selector is
//! treated as ideal, so there are no sneak paths and no read disturb.
//!
//! Every mutation goes through [`Crossbar`] methods so the ledger is a
//! complete record of the array's energy.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("invalid device config: {0}")]
    InvalidConfig(String),
    #[error("cell ({row}, {col}) outside {rows}x{cols} array")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("cells can only be programmed to State0 or State1")]
    InvalidTarget,
    #[error("pair columns must differ (both {0})")]
    SameColumn(usize),
    #[error("drive vector has {found} entries, array has {expected} rows")]
    DriveLength { expected: usize, found: usize },
    #[error("drive values must be -1, 0 or +1, got {0}")]
    InvalidDrive(i8),
}

/// Piecewise-linear map from conductance (µS) to stored energy (nJ).
/// Evaluation outside the anchor range extends the end segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnergyCurve(Vec<[f64; 2]>);

impl EnergyCurve {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, DeviceError> {
        let curve = EnergyCurve(points);
        curve.validate()?;
        Ok(curve)
    }

    fn validate(&self) -> Result<(), DeviceError> {
        if self.0.len() < 2 {
            return Err(DeviceError::InvalidConfig(
                "energy_curve needs at least two points".into(),
            ));
        }
        if self.0.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DeviceError::InvalidConfig(
                "energy_curve has non-finite values".into(),
            ));
        }
        for w in self.0.windows(2) {
            if !(w[1][0] > w[0][0] && w[1][1] > w[0][1]) {
                return Err(DeviceError::InvalidConfig(
                    "energy_curve must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn min_conductance(&self) -> f64 {
        self.0[0][0]
    }

    pub fn max_conductance(&self) -> f64 {
        self.0[self.0.len() - 1][0]
    }

    pub fn eval(&self, g: f64) -> f64 {
        let pts = &self.0;
        let seg = match pts.iter().position(|p| p[0] >= g) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => pts.len() - 2,
        };
        let ([g0, e0], [g1, e1]) = (pts[seg], pts[seg + 1]);
        e0 + (e1 - e0) * (g - g0) / (g1 - g0)
    }

    /// Stored-energy difference between two conductances.
    pub fn transition(&self, from: f64, to: f64) -> f64 {
        (self.eval(to) - self.eval(from)).abs()
    }
}

impl Default for EnergyCurve {
    /// Calibration anchors. A nominal 20 → 70 µS swing costs 2.8 nJ and a
    /// 10 → 80 µS boundary-to-boundary swing 9.5 nJ. Most of the nominal
    /// swing sits just below 70 µS, so a write that stops near the State 1
    /// lower bound is cheap.
    fn default() -> Self {
        EnergyCurve(vec![
            [0.0, -7.0],
            [10.0, -6.5],
            [12.0, -0.45],
            [20.0, 0.0],
            [60.0, 0.05],
            [67.0, 0.3],
            [70.0, 2.8],
            [78.0, 2.95],
            [80.0, 3.0],
            [100.0, 4.0],
        ])
    }
}

/// Device parameters. Loads from flat JSON keys named after the fields;
/// missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub rows: usize,
    pub cols: usize,
    /// State 0 (HRS) nominal conductance, µS.
    pub g_state0: f64,
    /// State 1 (LRS) nominal conductance, µS.
    pub g_state1: f64,
    /// Half-width of each acceptance window, µS.
    pub tolerance: f64,
    pub p_cell_success: f64,
    /// Standard deviation of a failed write around the target nominal, µS.
    pub miss_spread: f64,
    pub energy_curve: EnergyCurve,
    /// Lognormal sigma of the multiplicative (mean 1) write-energy noise.
    pub energy_noise_sigma: f64,
    /// Read voltage, V.
    pub v_read: f64,
    /// Read pulse duration, s.
    pub t_read: f64,
    /// Successful writes stop near the window edge facing the start value
    /// when set, at the nominal centre otherwise.
    pub shortcut_bias: bool,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            rows: 32,
            cols: 16,
            g_state0: 20.0,
            g_state1: 70.0,
            tolerance: 10.0,
            p_cell_success: 0.985,
            miss_spread: 15.0,
            energy_curve: EnergyCurve::default(),
            energy_noise_sigma: 0.3,
            v_read: 0.3,
            t_read: 1e-6,
            shortcut_bias: true,
        }
    }
}

impl DeviceConfig {
    /// Noise-free device: every write lands exactly on its nominal value
    /// and costs exactly the curve difference.
    pub fn ideal() -> Self {
        DeviceConfig {
            p_cell_success: 1.0,
            energy_noise_sigma: 0.0,
            shortcut_bias: false,
            ..Self::default()
        }
    }

    pub fn with_dims(mut self, rows: usize, cols: usize) -> Self {
        self.rows = rows;
        self.cols = cols;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let fail = |msg: &str| Err(DeviceError::InvalidConfig(msg.to_string()));
        if self.rows == 0 || self.cols == 0 {
            return fail("rows and cols must be positive");
        }
        let positive = [
            ("g_state0", self.g_state0),
            ("g_state1", self.g_state1),
            ("tolerance", self.tolerance),
            ("miss_spread", self.miss_spread),
            ("v_read", self.v_read),
            ("t_read", self.t_read),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(&format!("{name} must be positive"));
            }
        }
        if self.g_state1 - self.tolerance <= self.g_state0 + self.tolerance {
            return fail("state windows overlap");
        }
        if self.g_state0 - self.tolerance < 0.0 {
            return fail("State0 window extends below 0 µS");
        }
        if !(0.0..=1.0).contains(&self.p_cell_success) {
            return fail("p_cell_success must lie in [0, 1]");
        }
        if !(self.energy_noise_sigma >= 0.0 && self.energy_noise_sigma.is_finite()) {
            return fail("energy_noise_sigma must be non-negative");
        }
        self.energy_curve.validate()?;
        if self.energy_curve.max_conductance() < self.g_state1 + self.tolerance
            || self.energy_curve.min_conductance() > 0.0
        {
            return fail("energy_curve must cover 0 µS through the State1 window");
        }
        Ok(())
    }

    pub fn nominal(&self, state: CellState) -> Option<f64> {
        match state {
            CellState::State0 => Some(self.g_state0),
            CellState::State1 => Some(self.g_state1),
            CellState::Indeterminate => None,
        }
    }

    pub fn classify(&self, g: f64) -> CellState {
        if (g - self.g_state0).abs() <= self.tolerance {
            CellState::State0
        } else if (g - self.g_state1).abs() <= self.tolerance {
            CellState::State1
        } else {
            CellState::Indeterminate
        }
    }

    /// Highest conductance a cell can reach.
    pub fn g_max(&self) -> f64 {
        self.energy_curve.max_conductance()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    State0,
    State1,
    Indeterminate,
}

impl CellState {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            CellState::State1
        } else {
            CellState::State0
        }
    }
}

/// When an energy event happened. `Init` covers the initial mapping of a
/// problem; everything after is attributed to a main-loop iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Init,
    Iteration(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Write,
    Read,
    Injected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEvent {
    pub tag: Tag,
    pub kind: EventKind,
    /// `None` for whole-array reads.
    pub cell: Option<(usize, usize)>,
    pub energy_nj: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub init_nj: f64,
    pub program_nj: f64,
    pub inference_nj: f64,
    pub events: Vec<EnergyEvent>,
}

impl EnergyLedger {
    fn record(&mut self, event: EnergyEvent) {
        match (event.kind, event.tag) {
            (EventKind::Write, Tag::Init) => self.init_nj += event.energy_nj,
            (EventKind::Write, Tag::Iteration(_)) => self.program_nj += event.energy_nj,
            (EventKind::Read, _) => self.inference_nj += event.energy_nj,
            (EventKind::Injected, _) => {}
        }
        self.events.push(event);
    }

    /// Initialization plus reprogramming energy.
    pub fn execute_nj(&self) -> f64 {
        self.init_nj + self.program_nj
    }

    pub fn total_nj(&self) -> f64 {
        self.init_nj + self.program_nj + self.inference_nj
    }

    /// Re-derives the three totals from the event log in log order.
    pub fn recompute(&self) -> (f64, f64, f64) {
        let mut fresh = EnergyLedger::default();
        for e in &self.events {
            fresh.record(*e);
        }
        (fresh.init_nj, fresh.program_nj, fresh.inference_nj)
    }

    pub fn is_consistent(&self) -> bool {
        self.recompute() == (self.init_nj, self.program_nj, self.inference_nj)
            && self.events.iter().all(|e| e.energy_nj >= 0.0)
    }

    /// Program energy attributed to one iteration.
    pub fn program_nj_for(&self, iteration: u32) -> f64 {
        self.sum_where(|e| e.kind == EventKind::Write && e.tag == Tag::Iteration(iteration))
    }

    pub fn inference_nj_for(&self, tag: Tag) -> f64 {
        self.sum_where(|e| e.kind == EventKind::Read && e.tag == tag)
    }

    fn sum_where(&self, pred: impl Fn(&EnergyEvent) -> bool) -> f64 {
        self.events
            .iter()
            .filter(|e| pred(e))
            .map(|e| e.energy_nj)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WriteOutcome {
    pub initial_g: f64,
    pub final_g: f64,
    pub landed_in_window: bool,
    pub energy_nj: f64,
    /// False when the cell already held its target and no pulse was issued.
    pub pulsed: bool,
}

/// Rows × cols grid of cell conductances with its own random stream and
/// energy ledger.
#[derive(Debug, Clone)]
pub struct Crossbar {
    config: DeviceConfig,
    conductance: Vec<f64>,
    rng: ChaCha8Rng,
    ledger: EnergyLedger,
    energy_noise: Option<LogNormal<f64>>,
    miss: Normal<f64>,
}

impl Crossbar {
    /// Fresh array with every cell at the State 0 nominal.
    pub fn new(config: DeviceConfig, seed: u64) -> Result<Self, DeviceError> {
        config.validate()?;
        let sigma = config.energy_noise_sigma;
        let energy_noise = (sigma > 0.0)
            .then(|| LogNormal::new(-sigma * sigma / 2.0, sigma).expect("sigma validated"));
        let miss = Normal::new(0.0, config.miss_spread).expect("spread validated");
        Ok(Crossbar {
            conductance: vec![config.g_state0; config.rows * config.cols],
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ledger: EnergyLedger::default(),
            energy_noise,
            miss,
        })
    }

    pub fn config(&self) -> &DeviceConfig {
        &self.config
    }

    pub fn rows(&self) -> usize {
        self.config.rows
    }

    pub fn cols(&self) -> usize {
        self.config.cols
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> EnergyLedger {
        self.ledger
    }

    fn index(&self, row: usize, col: usize) -> Result<usize, DeviceError> {
        if row >= self.config.rows || col >= self.config.cols {
            return Err(DeviceError::OutOfRange {
                row,
                col,
                rows: self.config.rows,
                cols: self.config.cols,
            });
        }
        Ok(row * self.config.cols + col)
    }

    pub fn conductance(&self, row: usize, col: usize) -> Result<f64, DeviceError> {
        Ok(self.conductance[self.index(row, col)?])
    }

    pub fn classify(&self, row: usize, col: usize) -> Result<CellState, DeviceError> {
        Ok(self.config.classify(self.conductance(row, col)?))
    }

    /// Programs one cell towards `target`. Cells already inside the target
    /// window are left alone at zero cost.
    pub fn program_cell(
        &mut self,
        row: usize,
        col: usize,
        target: CellState,
        tag: Tag,
    ) -> Result<WriteOutcome, DeviceError> {
        let idx = self.index(row, col)?;
        let nominal = self
            .config
            .nominal(target)
            .ok_or(DeviceError::InvalidTarget)?;
        let initial_g = self.conductance[idx];
        if self.config.classify(initial_g) == target {
            return Ok(WriteOutcome {
                initial_g,
                final_g: initial_g,
                landed_in_window: true,
                energy_nj: 0.0,
                pulsed: false,
            });
        }

        let success = self.rng.random::<f64>() < self.config.p_cell_success;
        let final_g = if success {
            self.landing(initial_g, nominal)
        } else {
            self.miss(nominal)
        };
        let noise = match &self.energy_noise {
            Some(d) => d.sample(&mut self.rng),
            None => 1.0,
        };
        let energy_nj = self.config.energy_curve.transition(initial_g, final_g) * noise;

        self.conductance[idx] = final_g;
        self.ledger.record(EnergyEvent {
            tag,
            kind: EventKind::Write,
            cell: Some((row, col)),
            energy_nj,
        });
        Ok(WriteOutcome {
            initial_g,
            final_g,
            landed_in_window: self.config.classify(final_g) == target,
            energy_nj,
            pulsed: true,
        })
    }

    /// In-window landing point. With the shortcut bias the density is
    /// triangular, peaking at the edge facing `from` and vanishing at the
    /// far edge.
    fn landing(&mut self, from: f64, nominal: f64) -> f64 {
        if !self.config.shortcut_bias {
            return nominal;
        }
        let tol = self.config.tolerance;
        let u: f64 = self.rng.random();
        let depth = 2.0 * tol * (1.0 - (1.0 - u).sqrt());
        if from < nominal {
            nominal - tol + depth
        } else {
            nominal + tol - depth
        }
    }

    /// Failed write: normal around the target nominal, conditioned on
    /// missing the target window and staying within the physical range.
    fn miss(&mut self, nominal: f64) -> f64 {
        let (tol, g_max) = (self.config.tolerance, self.config.g_max());
        for _ in 0..10_000 {
            let g = nominal + self.miss.sample(&mut self.rng);
            if (g - nominal).abs() > tol && (0.0..=g_max).contains(&g) {
                return g;
            }
        }
        // Only reachable when miss_spread is tiny next to the window.
        let step = self.miss.sample(&mut self.rng).abs();
        (nominal + tol + step).min(g_max)
    }

    /// Writes a signed logical weight into a differential column pair.
    /// `-1` sets `col_neg` high, `+1` sets `col_pos` high, `0` leaves both
    /// low. Returns `(pos, neg)` outcomes.
    pub fn program_pair(
        &mut self,
        row: usize,
        col_pos: usize,
        col_neg: usize,
        logical: i8,
        tag: Tag,
    ) -> Result<(WriteOutcome, WriteOutcome), DeviceError> {
        if col_pos == col_neg {
            return Err(DeviceError::SameColumn(col_pos));
        }
        let (pos, neg) = match logical {
            1 => (CellState::State1, CellState::State0),
            -1 => (CellState::State0, CellState::State1),
            0 => (CellState::State0, CellState::State0),
            other => return Err(DeviceError::InvalidDrive(other)),
        };
        // validate both coordinates before touching either cell
        self.index(row, col_pos)?;
        self.index(row, col_neg)?;
        let a = self.program_cell(row, col_pos, pos, tag)?;
        let b = self.program_cell(row, col_neg, neg, tag)?;
        Ok((a, b))
    }

    /// Column currents in µA for a signed row drive; logs the read energy
    /// `Σ v² g t` over driven cells.
    pub fn read_columns(&mut self, drive: &[i8], tag: Tag) -> Result<Vec<f64>, DeviceError> {
        let (rows, cols) = (self.config.rows, self.config.cols);
        if drive.len() != rows {
            return Err(DeviceError::DriveLength {
                expected: rows,
                found: drive.len(),
            });
        }
        if let Some(&bad) = drive.iter().find(|d| !(-1..=1).contains(*d)) {
            return Err(DeviceError::InvalidDrive(bad));
        }
        let v = self.config.v_read;
        let mut currents = vec![0.0; cols];
        let mut driven_g = 0.0;
        for (r, &d) in drive.iter().enumerate() {
            if d == 0 {
                continue;
            }
            let row = &self.conductance[r * cols..(r + 1) * cols];
            for (i, &g) in currents.iter_mut().zip(row) {
                *i += d as f64 * v * g;
            }
            driven_g += row.iter().sum::<f64>();
        }
        if drive.iter().any(|&d| d != 0) {
            // V² · µS · s = µJ; × 1e3 gives nJ
            let energy_nj = v * v * driven_g * self.config.t_read * 1e3;
            self.ledger.record(EnergyEvent {
                tag,
                kind: EventKind::Read,
                cell: None,
                energy_nj,
            });
        }
        Ok(currents)
    }

    /// Forces a cell's conductance without a write pulse. Logged as an
    /// injected event carrying no energy.
    pub fn inject_fault(
        &mut self,
        row: usize,
        col: usize,
        g: f64,
        tag: Tag,
    ) -> Result<(), DeviceError> {
        let idx = self.index(row, col)?;
        self.conductance[idx] = g.max(0.0);
        self.ledger.record(EnergyEvent {
            tag,
            kind: EventKind::Injected,
            cell: Some((row, col)),
            energy_nj: 0.0,
        });
        Ok(())
    }

    /// Row-major CSV of conductances in µS, three decimals.
    pub fn snapshot_csv(&self) -> String {
        let cols = self.config.cols;
        let mut out = String::new();
        for row in self.conductance.chunks(cols) {
            for (i, g) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{g:.3}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh(config: DeviceConfig) -> Crossbar {
        Crossbar::new(config, 11).unwrap()
    }

    #[test]
    fn default_array_starts_in_state0() {
        let xb = fresh(DeviceConfig::default());
        assert_eq!((xb.rows(), xb.cols()), (32, 16));
        for r in 0..32 {
            for c in 0..16 {
                assert_eq!(xb.classify(r, c).unwrap(), CellState::State0);
            }
        }
        assert_eq!(xb.ledger().total_nj(), 0.0);
    }

    #[test]
    fn overlapping_windows_rejected() {
        let cfg = DeviceConfig {
            tolerance: 30.0,
            ..DeviceConfig::default()
        };
        assert!(matches!(
            Crossbar::new(cfg, 0),
            Err(DeviceError::InvalidConfig(_))
        ));
        let cfg = DeviceConfig::default().with_dims(0, 4);
        assert!(Crossbar::new(cfg, 0).is_err());
    }

    #[test]
    fn same_seed_same_behavior() {
        let run = || {
            let mut xb = fresh(DeviceConfig::default());
            (0..16)
                .map(|c| xb.program_cell(0, c, CellState::State1, Tag::Init).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn nominal_swing_costs_2_8_nj() {
        let curve = EnergyCurve::default();
        assert!((curve.transition(20.0, 70.0) - 2.8).abs() < 1e-12);
        assert!((curve.transition(10.0, 80.0) - 9.5).abs() < 1e-12);
        let mut xb = fresh(DeviceConfig::ideal());
        let out = xb.program_cell(0, 0, CellState::State1, Tag::Init).unwrap();
        assert_eq!(out.final_g, 70.0);
        assert!((out.energy_nj - 2.8).abs() < 1e-12);
    }

    #[test]
    fn curve_strictly_increasing_over_range() {
        let curve = EnergyCurve::default();
        let mut prev = curve.eval(0.0);
        for i in 1..=1000 {
            let e = curve.eval(i as f64 * 0.1);
            assert!(e > prev);
            prev = e;
        }
        assert!(EnergyCurve::new(vec![[0.0, 1.0], [10.0, 1.0]]).is_err());
    }

    #[test]
    fn reprogramming_same_state_is_free() {
        let mut xb = fresh(DeviceConfig::default());
        let out = xb.program_cell(3, 3, CellState::State0, Tag::Init).unwrap();
        assert_eq!(out.energy_nj, 0.0);
        assert!(!out.pulsed);
        assert_eq!(out.final_g, 20.0);
        assert!(xb.ledger().events.is_empty());
    }

    #[test]
    fn landing_rate_matches_success_probability() {
        let cfg = DeviceConfig::default().with_dims(100, 100);
        let p = cfg.p_cell_success;
        let mut xb = fresh(cfg);
        let mut landed = 0;
        for r in 0..100 {
            for c in 0..100 {
                let out = xb.program_cell(r, c, CellState::State1, Tag::Init).unwrap();
                assert_eq!(
                    out.landed_in_window,
                    xb.classify(r, c).unwrap() == CellState::State1
                );
                landed += out.landed_in_window as usize;
            }
        }
        let frac = landed as f64 / 10_000.0;
        assert!((frac - p).abs() <= 0.01, "landed fraction {frac}");
    }

    #[test]
    fn shortcut_lands_near_facing_edge() {
        let mut xb = fresh(DeviceConfig {
            p_cell_success: 1.0,
            ..DeviceConfig::default()
        });
        let mut up = 0.0;
        for c in 0..16 {
            up += xb
                .program_cell(0, c, CellState::State1, Tag::Init)
                .unwrap()
                .final_g;
        }
        // triangular density on [60, 80] peaking at 60 has mean 66.67
        let mean = up / 16.0;
        assert!(mean > 60.0 && mean < 70.0, "{mean}");
        for c in 0..16 {
            let g = xb
                .program_cell(0, c, CellState::State0, Tag::Init)
                .unwrap()
                .final_g;
            assert!((10.0..=30.0).contains(&g));
        }
    }

    #[test]
    fn pair_encoding() {
        let mut xb = fresh(DeviceConfig::ideal());
        let (pos, neg) = xb.program_pair(0, 1, 0, -1, Tag::Init).unwrap();
        assert!(!pos.pulsed && neg.pulsed);
        assert_eq!(xb.classify(0, 0).unwrap(), CellState::State1);
        assert_eq!(xb.classify(0, 1).unwrap(), CellState::State0);

        let before = xb.ledger().total_nj();
        let (a, b) = xb.program_pair(1, 1, 0, 0, Tag::Init).unwrap();
        assert_eq!(a.energy_nj + b.energy_nj, 0.0);
        assert_eq!(xb.ledger().total_nj(), before);

        // -1 → +1 rewrites both cells
        let (pos, neg) = xb.program_pair(0, 1, 0, 1, Tag::Iteration(0)).unwrap();
        assert!(pos.pulsed && neg.pulsed);
        assert!((pos.energy_nj + neg.energy_nj - 5.6).abs() < 1e-12);
        assert!(matches!(
            xb.program_pair(0, 2, 2, 1, Tag::Init),
            Err(DeviceError::SameColumn(2))
        ));
    }

    #[test]
    fn read_currents_and_energy() {
        let mut xb = fresh(DeviceConfig::ideal());
        let zeros = xb.read_columns(&[0; 32], Tag::Init).unwrap();
        assert!(zeros.iter().all(|&i| i == 0.0));
        assert_eq!(xb.ledger().inference_nj, 0.0);

        let ideal = DeviceConfig::ideal().with_dims(1, 1);
        let mut one = Crossbar::new(ideal, 0).unwrap();
        one.program_cell(0, 0, CellState::State1, Tag::Init)
            .unwrap();
        let i = one.read_columns(&[1], Tag::Iteration(0)).unwrap();
        assert!((i[0] - 21.0).abs() < 1e-12);
        // 0.3 V, 70 µS, 1 µs → 6.3 pJ
        assert!((one.ledger().inference_nj - 6.3e-3).abs() < 1e-15);

        assert!(matches!(
            xb.read_columns(&[1; 3], Tag::Init),
            Err(DeviceError::DriveLength { .. })
        ));
    }

    #[test]
    fn classification_windows() {
        let cfg = DeviceConfig::default();
        assert_eq!(cfg.classify(25.0), CellState::State0);
        assert_eq!(cfg.classify(45.0), CellState::Indeterminate);
        assert_eq!(cfg.classify(61.0), CellState::State1);
    }

    #[test]
    fn injected_faults() {
        let mut xb = fresh(DeviceConfig::ideal());
        xb.inject_fault(0, 0, 70.0, Tag::Init).unwrap();
        xb.inject_fault(0, 1, 70.0, Tag::Init).unwrap();
        let mut drive = vec![0; 32];
        drive[0] = 1;
        let i = xb.read_columns(&drive, Tag::Init).unwrap();
        assert_eq!(i[1] - i[0], 0.0);

        xb.inject_fault(1, 0, 45.0, Tag::Init).unwrap();
        assert_eq!(xb.classify(1, 0).unwrap(), CellState::Indeterminate);
        xb.inject_fault(1, 1, 20.0, Tag::Init).unwrap();
        assert_eq!(xb.classify(1, 1).unwrap(), CellState::State0);
        assert_eq!(xb.ledger().init_nj, 0.0);
        assert!(xb
            .ledger()
            .events
            .iter()
            .all(|e| e.kind != EventKind::Write));
        assert!(xb.inject_fault(40, 0, 1.0, Tag::Init).is_err());
    }

    #[test]
    fn ledger_consistent_after_mixed_use() {
        let mut xb = fresh(DeviceConfig::default());
        for c in 0..16 {
            xb.program_cell(c, c, CellState::State1, Tag::Init).unwrap();
        }
        for c in 0..8 {
            xb.program_cell(c, c, CellState::State0, Tag::Iteration(c as u32))
                .unwrap();
            xb.read_columns(&[1; 32], Tag::Iteration(c as u32)).unwrap();
        }
        assert!(xb.ledger().is_consistent());
        assert!(xb.ledger().program_nj > 0.0 && xb.ledger().inference_nj > 0.0);
    }

    #[test]
    fn snapshot_format() {
        let xb = Crossbar::new(DeviceConfig::default().with_dims(2, 3), 0).unwrap();
        assert_eq!(
            xb.snapshot_csv(),
            "20.000,20.000,20.000\n20.000,20.000,20.000\n"
        );
    }

    #[test]
    fn config_json_flat_keys() {
        let cfg =
            DeviceConfig::from_json(r#"{"rows": 8, "cols": 24, "p_cell_success": 1.0}"#).unwrap();
        assert_eq!((cfg.rows, cfg.cols), (8, 24));
        assert_eq!(cfg.g_state1, 70.0);
        assert!(DeviceConfig::from_json(r#"{"rowz": 8}"#).is_err());
        let back: DeviceConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
