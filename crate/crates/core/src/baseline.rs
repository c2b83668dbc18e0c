//! Empirical expected-total-bases grid over exit velocity × launch angle.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::InningHalf;
use crate::ingest::BattedBall;
use crate::roster::Roster;

const MAGIC: &[u8; 8] = b"TBRGRID\0";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("ev={ev}, la={la} lies outside the grid")]
    OutOfRange { ev: f64, la: f64 },
    #[error("no batted balls to build a baseline from")]
    EmptyInput,
    #[error("ball at ev={ev}, la={la} falls in empty cell ({ev_bin}, {la_bin})")]
    EmptyCell { ev_bin: usize, la_bin: usize, ev: f64, la: f64 },
    #[error("grid has no populated cells")]
    NoPopulatedCells,
    #[error("bad baseline artifact: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Bin layout of the EV × LA grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ev_min: f64,
    pub ev_max: f64,
    pub ev_width: f64,
    pub la_min: f64,
    pub la_max: f64,
    pub la_width: f64,
}

impl Default for GridSpec {
    /// 3 mph × 3° bins over [0, 120] mph × [−90, 90]°: 40 × 60 cells.
    fn default() -> Self {
        GridSpec { ev_min: 0.0, ev_max: 120.0, ev_width: 3.0, la_min: -90.0, la_max: 90.0, la_width: 3.0 }
    }
}

fn bin_count(lo: f64, hi: f64, width: f64) -> Option<usize> {
    if !(lo.is_finite() && hi.is_finite() && width.is_finite()) || width <= 0.0 || hi <= lo {
        return None;
    }
    let bins = (hi - lo) / width;
    let rounded = bins.round();
    ((bins - rounded).abs() < 1e-9 * rounded.max(1.0)).then_some(rounded as usize)
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), BaselineError> {
        bin_count(self.ev_min, self.ev_max, self.ev_width)
            .ok_or_else(|| BaselineError::InvalidSpec(format!("EV range [{}, {}] is not a whole number of {}-mph bins", self.ev_min, self.ev_max, self.ev_width)))?;
        bin_count(self.la_min, self.la_max, self.la_width)
            .ok_or_else(|| BaselineError::InvalidSpec(format!("LA range [{}, {}] is not a whole number of {}-degree bins", self.la_min, self.la_max, self.la_width)))?;
        Ok(())
    }

    pub fn ev_bins(&self) -> usize {
        bin_count(self.ev_min, self.ev_max, self.ev_width).unwrap_or(0)
    }

    pub fn la_bins(&self) -> usize {
        bin_count(self.la_min, self.la_max, self.la_width).unwrap_or(0)
    }

    pub fn n_cells(&self) -> usize {
        self.ev_bins() * self.la_bins()
    }

    pub fn contains(&self, ev: f64, la: f64) -> bool {
        (self.ev_min..=self.ev_max).contains(&ev) && (self.la_min..=self.la_max).contains(&la)
    }

    /// Half-open bins `[lo, lo + width)`; the top edge of each axis closes the last bin.
    pub fn cell_of(&self, ev: f64, la: f64) -> Result<Cell, BaselineError> {
        if !self.contains(ev, la) {
            return Err(BaselineError::OutOfRange { ev, la });
        }
        let ev_bin = (((ev - self.ev_min) / self.ev_width).floor() as usize).min(self.ev_bins() - 1);
        let la_bin = (((la - self.la_min) / self.la_width).floor() as usize).min(self.la_bins() - 1);
        Ok(Cell { ev_bin, la_bin })
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.ev_bin * self.la_bins() + cell.la_bin
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell { ev_bin: index / self.la_bins(), la_bin: index % self.la_bins() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub ev_bin: usize,
    pub la_bin: usize,
}

/// Pooled per-cell counts and total-bases sums. Sums are kept as integers so
/// the grid is exact and independent of input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineGrid {
    pub spec: GridSpec,
    count: Vec<u64>,
    tb_sum: Vec<u64>,
    pub seasons_pooled: Vec<i32>,
}

impl BaselineGrid {
    pub fn count(&self, cell: Cell) -> u64 {
        self.count[self.spec.index(cell)]
    }

    pub fn tb_sum(&self, cell: Cell) -> u64 {
        self.tb_sum[self.spec.index(cell)]
    }

    /// Expected total bases in `cell`; `None` when the cell is empty.
    pub fn mu(&self, cell: Cell) -> Option<f64> {
        self.mu_at(self.spec.index(cell))
    }

    fn mu_at(&self, index: usize) -> Option<f64> {
        let n = self.count[index];
        (n > 0).then(|| self.tb_sum[index] as f64 / n as f64)
    }

    pub fn counts(&self) -> &[u64] {
        &self.count
    }

    pub fn total_count(&self) -> u64 {
        self.count.iter().sum()
    }

    pub fn populated_cells(&self) -> usize {
        self.count.iter().filter(|&&n| n > 0).count()
    }

    /// Mean total bases over every ball in the grid.
    pub fn global_mean(&self) -> Option<f64> {
        let n = self.total_count();
        (n > 0).then(|| self.tb_sum.iter().sum::<u64>() as f64 / n as f64)
    }

    /// Nearest populated cell by Euclidean distance in bin units; ties go to
    /// the lowest cell index.
    pub fn nearest_populated(&self, cell: Cell) -> Option<Cell> {
        let mut best: Option<(usize, usize)> = None;
        for (index, &n) in self.count.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let other = self.spec.cell_at(index);
            let d_ev = other.ev_bin.abs_diff(cell.ev_bin);
            let d_la = other.la_bin.abs_diff(cell.la_bin);
            let dist = d_ev * d_ev + d_la * d_la;
            if best.is_none_or(|(d, _)| dist < d) {
                best = Some((dist, index));
            }
        }
        best.map(|(_, index)| self.spec.cell_at(index))
    }

    /// Writes the versioned binary artifact. `meta` is an opaque string
    /// (e.g. a JSON provenance block) stored verbatim.
    pub fn write_to<W: Write>(&self, mut w: W, meta: &str) -> Result<(), BaselineError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(meta.len() as u32).to_le_bytes())?;
        w.write_all(meta.as_bytes())?;
        let s = &self.spec;
        for v in [s.ev_min, s.ev_max, s.ev_width, s.la_min, s.la_max, s.la_width] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.seasons_pooled.len() as u32).to_le_bytes())?;
        for season in &self.seasons_pooled {
            w.write_all(&season.to_le_bytes())?;
        }
        w.write_all(&(self.count.len() as u32).to_le_bytes())?;
        for (n, sum) in self.count.iter().zip(&self.tb_sum) {
            w.write_all(&n.to_le_bytes())?;
            w.write_all(&sum.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads an artifact written by [`BaselineGrid::write_to`], returning the grid and its metadata string.
    pub fn read_from<R: Read>(mut r: R) -> Result<(Self, String), BaselineError> {
        fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], BaselineError> {
            let mut buf = [0u8; N];
            r.read_exact(&mut buf).map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => BaselineError::Format("truncated artifact".into()),
                _ => BaselineError::Io(e),
            })?;
            Ok(buf)
        }
        if &take::<8, _>(&mut r)? != MAGIC {
            return Err(BaselineError::Format("missing magic header".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(BaselineError::Format(format!("unsupported format version {version}")));
        }
        let meta_len = u32::from_le_bytes(take(&mut r)?) as usize;
        let mut meta = vec![0u8; meta_len];
        r.read_exact(&mut meta)?;
        let meta = String::from_utf8(meta).map_err(|_| BaselineError::Format("metadata is not UTF-8".into()))?;
        let mut f = [0f64; 6];
        for v in &mut f {
            *v = f64::from_le_bytes(take(&mut r)?);
        }
        let spec = GridSpec { ev_min: f[0], ev_max: f[1], ev_width: f[2], la_min: f[3], la_max: f[4], la_width: f[5] };
        spec.validate()?;
        let n_seasons = u32::from_le_bytes(take(&mut r)?) as usize;
        let mut seasons_pooled = Vec::with_capacity(n_seasons);
        for _ in 0..n_seasons {
            seasons_pooled.push(i32::from_le_bytes(take(&mut r)?));
        }
        let n_cells = u32::from_le_bytes(take(&mut r)?) as usize;
        if n_cells != spec.n_cells() {
            return Err(BaselineError::Format(format!("{n_cells} cells stored, spec implies {}", spec.n_cells())));
        }
        let mut count = Vec::with_capacity(n_cells);
        let mut tb_sum = Vec::with_capacity(n_cells);
        for _ in 0..n_cells {
            let n = u64::from_le_bytes(take(&mut r)?);
            let sum = u64::from_le_bytes(take(&mut r)?);
            if sum > 4 * n {
                return Err(BaselineError::Format("total-bases sum exceeds 4 per ball".into()));
            }
            count.push(n);
            tb_sum.push(sum);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(BaselineError::Format("trailing bytes after cell table".into()));
        }
        Ok((BaselineGrid { spec, count, tb_sum, seasons_pooled }, meta))
    }

    /// Long-format CSV: one row per populated cell.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "ev_bin,la_bin,ev_lo,ev_hi,la_lo,la_hi,count,tb_sum,mu")?;
        let s = &self.spec;
        for (index, &n) in self.count.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let c = s.cell_at(index);
            let ev_lo = s.ev_min + c.ev_bin as f64 * s.ev_width;
            let la_lo = s.la_min + c.la_bin as f64 * s.la_width;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                c.ev_bin,
                c.la_bin,
                ev_lo,
                ev_lo + s.ev_width,
                la_lo,
                la_lo + s.la_width,
                n,
                self.tb_sum[index],
                self.tb_sum[index] as f64 / n as f64
            )?;
        }
        Ok(())
    }
}

/// Pools `balls` into a grid of per-cell counts and mean total bases.
pub fn build_baseline(balls: &[BattedBall], spec: GridSpec) -> Result<BaselineGrid, BaselineError> {
    spec.validate()?;
    if balls.is_empty() {
        return Err(BaselineError::EmptyInput);
    }
    let mut count = vec![0u64; spec.n_cells()];
    let mut tb_sum = vec![0u64; spec.n_cells()];
    let mut seasons = std::collections::BTreeSet::new();
    for ball in balls {
        let index = spec.index(spec.cell_of(ball.ev, ball.la)?);
        count[index] += 1;
        tb_sum[index] += u64::from(ball.tb);
        seasons.insert(ball.season);
    }
    Ok(BaselineGrid { spec, count, tb_sum, seasons_pooled: seasons.into_iter().collect() })
}

/// A batted ball together with its total-bases residual against the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub ball: BattedBall,
    pub r: f64,
}

/// What to do with a ball whose grid cell holds no baseline observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyCellPolicy {
    #[default]
    Drop,
    Nearest,
    GlobalMean,
    Abort,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub scored: u64,
    pub dropped_empty_cell: u64,
    pub nearest_fallback: u64,
    pub global_mean_fallback: u64,
}

/// Scores each ball as `tb − mu[cell]`.
pub fn residuals(
    balls: &[BattedBall],
    grid: &BaselineGrid,
    policy: EmptyCellPolicy,
) -> Result<(Vec<Residual>, ResidualReport), BaselineError> {
    let spec = &grid.spec;
    let mut report = ResidualReport::default();
    let mut out = Vec::with_capacity(balls.len());
    let mut nearest_cache: BTreeMap<usize, Option<f64>> = BTreeMap::new();
    for &ball in balls {
        let cell = spec.cell_of(ball.ev, ball.la)?;
        let mu = match grid.mu(cell) {
            Some(mu) => mu,
            None => match policy {
                EmptyCellPolicy::Drop => {
                    report.dropped_empty_cell += 1;
                    continue;
                }
                EmptyCellPolicy::Abort => {
                    return Err(BaselineError::EmptyCell {
                        ev_bin: cell.ev_bin,
                        la_bin: cell.la_bin,
                        ev: ball.ev,
                        la: ball.la,
                    })
                }
                EmptyCellPolicy::Nearest => {
                    let mu = *nearest_cache
                        .entry(spec.index(cell))
                        .or_insert_with(|| grid.nearest_populated(cell).and_then(|c| grid.mu(c)));
                    report.nearest_fallback += 1;
                    mu.ok_or(BaselineError::NoPopulatedCells)?
                }
                EmptyCellPolicy::GlobalMean => {
                    report.global_mean_fallback += 1;
                    grid.global_mean().ok_or(BaselineError::NoPopulatedCells)?
                }
            },
        };
        out.push(Residual { ball, r: f64::from(ball.tb) - mu });
        report.scored += 1;
    }
    Ok((out, report))
}

#[derive(Serialize, Deserialize)]
struct ResidualRow {
    season: i32,
    park: String,
    def_team: String,
    bat_team: String,
    inning_topbot: String,
    launch_speed: f64,
    launch_angle: f64,
    tb: u8,
    residual: f64,
}

/// One row per scored ball, with teams and parks written as roster codes.
pub fn write_residuals_csv<W: Write>(w: W, residuals: &[Residual], roster: &Roster) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(w);
    for r in residuals {
        let b = &r.ball;
        writer.serialize(ResidualRow {
            season: b.season,
            park: roster.park_code(b.park),
            def_team: roster.team_code(b.def_team),
            bat_team: roster.team_code(b.bat_team),
            inning_topbot: b.half.as_statcast().to_string(),
            launch_speed: b.ev,
            launch_angle: b.la,
            tb: b.tb,
            residual: r.r,
        })?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads what [`write_residuals_csv`] wrote. Lines starting with `#` are skipped.
pub fn read_residuals_csv<R: Read>(source: R, roster: &Roster) -> Result<Vec<Residual>, BaselineError> {
    let mut out = Vec::new();
    let reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(source);
    for (i, row) in reader.into_deserialize::<ResidualRow>().enumerate() {
        let row = row.map_err(|e| BaselineError::Format(e.to_string()))?;
        let unknown = |code: &str| BaselineError::Format(format!("residual row {}: unknown code {code:?}", i + 1));
        let team = |code: &str| roster.team_by_code(code).ok_or_else(|| unknown(code));
        let half = InningHalf::parse(&row.inning_topbot)
            .ok_or_else(|| BaselineError::Format(format!("residual row {}: bad inning half {:?}", i + 1, row.inning_topbot)))?;
        let ball = BattedBall {
            ev: row.launch_speed,
            la: row.launch_angle,
            tb: row.tb,
            park: roster.park_by_code(&row.park).ok_or_else(|| unknown(&row.park))?,
            def_team: team(&row.def_team)?,
            bat_team: team(&row.bat_team)?,
            half,
            season: row.season,
        };
        out.push(Residual { ball, r: row.residual });
    }
    Ok(out)
}
