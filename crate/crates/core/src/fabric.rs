//! Unsigned array multipliers built from one-bit adder cells.
//!
//! Partial products `pp[i][j] = a_i & b_j` (weight `i + j`) are reduced by a
//! grid of full-adder cells. Two wirings are available:
//!
//! * [`Architecture::RippleCarry`]: each row `i = 1..n-1` is a ripple-carry
//!   adder adding `pp[i][*]` to the shifted running sum; the carry out of the
//!   last cell becomes the row's top sum bit. `n(n-1)` cells, no truncation.
//! * [`Architecture::CarrySave`]: carries move down one row instead of along
//!   it, and a final ripple row over weights `n..2n-1` merges the last sums
//!   and carries. `n(n-1) + n` cells; the carry out of weight `2n-1` is
//!   dropped.
//!
//! A cell uses the configured approximate adder iff the weight of its sum
//! output is below the degree knob.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adder::{exact_full_adder, AdderLibrary, FullAdderSpec};
use crate::error::{Error, Result};

pub const MIN_WIDTH: u32 = 2;
pub const MAX_WIDTH: u32 = 16;
const MAX_CELLS: usize = (MAX_WIDTH * (MAX_WIDTH - 1) + MAX_WIDTH) as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    #[default]
    RippleCarry,
    CarrySave,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::RippleCarry => "ripple-carry",
            Architecture::CarrySave => "carry-save",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ripple-carry" | "ripple" => Ok(Architecture::RippleCarry),
            "carry-save" | "csa" => Ok(Architecture::CarrySave),
            other => Err(Error::InvalidConfig(format!(
                "unknown architecture '{other}' (expected ripple-carry or carry-save)"
            ))),
        }
    }
}

/// What a cell with a hard-wired zero input (a half-adder position) computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfAdderPolicy {
    /// Always an exact half adder.
    Exact,
    /// The same table as any other cell of its weight, with the zero applied.
    FullAdder,
}

impl Architecture {
    /// Half-adder treatment that goes with the architecture by default.
    pub fn default_half_adders(self) -> HalfAdderPolicy {
        match self {
            Architecture::RippleCarry => HalfAdderPolicy::Exact,
            Architecture::CarrySave => HalfAdderPolicy::FullAdder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiplierConfig {
    pub width: u32,
    /// Adder-type knob: a name in the adder library.
    pub adder_type: String,
    /// Degree knob: count of approximated least-significant result bits.
    pub degree: u32,
    pub architecture: Architecture,
    pub half_adders: HalfAdderPolicy,
}

impl MultiplierConfig {
    pub fn new(width: u32, adder_type: impl Into<String>, degree: u32) -> Self {
        Self::with_architecture(width, adder_type, degree, Architecture::default())
    }

    pub fn with_architecture(
        width: u32,
        adder_type: impl Into<String>,
        degree: u32,
        architecture: Architecture,
    ) -> Self {
        MultiplierConfig {
            width,
            adder_type: adder_type.into(),
            degree,
            architecture,
            half_adders: architecture.default_half_adders(),
        }
    }

    pub fn carry_save(width: u32, adder_type: impl Into<String>, degree: u32) -> Self {
        Self::with_architecture(width, adder_type, degree, Architecture::CarrySave)
    }

    pub fn half_adders(mut self, policy: HalfAdderPolicy) -> Self {
        self.half_adders = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&self.width) {
            return Err(Error::InvalidConfig(format!(
                "width {} outside {MIN_WIDTH}..={MAX_WIDTH}",
                self.width
            )));
        }
        if self.degree > 2 * self.width {
            return Err(Error::InvalidConfig(format!(
                "degree {} exceeds 2 * width = {}",
                self.degree,
                2 * self.width
            )));
        }
        Ok(())
    }
}

/// Source of one cell input or one product bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signal {
    Zero,
    /// `a_row & b_col`.
    PartialProduct { row: u8, col: u8 },
    Sum(u16),
    Carry(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellRole {
    Array { row: u32, col: u32 },
    Merge { weight: u32 },
}

impl CellRole {
    pub fn kind(&self) -> &'static str {
        match self {
            CellRole::Array { .. } => "array",
            CellRole::Merge { .. } => "merge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdderCell {
    pub role: CellRole,
    /// Significance of the sum output.
    pub weight: u32,
    /// Wired to the adder's (A, B, Cin) ports in that order.
    pub inputs: [Signal; 3],
    /// Whether the weight rule assigns the configured adder to this cell.
    pub approximate: bool,
    /// True when one input is hard-wired to zero.
    pub half_adder: bool,
}

/// A wired, evaluatable multiplier.
#[derive(Debug, Clone)]
pub struct CellGrid {
    config: MultiplierConfig,
    cells: Vec<AdderCell>,
    luts: Vec<[u8; 8]>,
    taps: Vec<Signal>,
    adder: FullAdderSpec,
}

struct Wiring {
    width: u32,
    cells: Vec<AdderCell>,
}

impl Wiring {
    fn push(&mut self, role: CellRole, weight: u32, inputs: [Signal; 3]) -> u16 {
        debug_assert!(weight < 2 * self.width);
        let idx = self.cells.len() as u16;
        self.cells.push(AdderCell {
            role,
            weight,
            inputs,
            approximate: false,
            half_adder: inputs.contains(&Signal::Zero),
        });
        idx
    }
}

fn pp(row: u32, col: u32) -> Signal {
    Signal::PartialProduct {
        row: row as u8,
        col: col as u8,
    }
}

fn wire_ripple(n: u32) -> (Vec<AdderCell>, Vec<Signal>) {
    let mut w = Wiring {
        width: n,
        cells: Vec::new(),
    };
    // sums[j] = running sum bit at weight (row + j); sums[n] is the row's top bit.
    let mut sums: Vec<Signal> = (0..n).map(|j| pp(0, j)).collect();
    sums.push(Signal::Zero);
    let mut taps = vec![sums[0]];
    for i in 1..n {
        let mut carry = Signal::Zero;
        let mut next = Vec::with_capacity(n as usize + 1);
        for j in 0..n {
            let k = w.push(
                CellRole::Array { row: i, col: j },
                i + j,
                [pp(i, j), sums[j as usize + 1], carry],
            );
            next.push(Signal::Sum(k));
            carry = Signal::Carry(k);
        }
        next.push(carry);
        sums = next;
        taps.push(sums[0]);
    }
    taps.extend_from_slice(&sums[1..]);
    (w.cells, taps)
}

fn wire_carry_save(n: u32) -> (Vec<AdderCell>, Vec<Signal>) {
    let mut w = Wiring {
        width: n,
        cells: Vec::new(),
    };
    let mut sums: Vec<Signal> = (0..n).map(|j| pp(0, j)).collect();
    sums.push(Signal::Zero);
    let mut carries = vec![Signal::Zero; n as usize];
    let mut taps = vec![sums[0]];
    for i in 1..n {
        let mut next_s = Vec::with_capacity(n as usize + 1);
        let mut next_c = Vec::with_capacity(n as usize);
        for j in 0..n {
            let k = w.push(
                CellRole::Array { row: i, col: j },
                i + j,
                [pp(i, j), sums[j as usize + 1], carries[j as usize]],
            );
            next_s.push(Signal::Sum(k));
            next_c.push(Signal::Carry(k));
        }
        next_s.push(Signal::Zero);
        sums = next_s;
        carries = next_c;
        taps.push(sums[0]);
    }
    let mut carry_in = Signal::Zero;
    for weight in n..2 * n {
        let k = w.push(
            CellRole::Merge { weight },
            weight,
            [
                sums[(weight - n + 1) as usize],
                carries[(weight - n) as usize],
                carry_in,
            ],
        );
        taps.push(Signal::Sum(k));
        carry_in = Signal::Carry(k);
    }
    (w.cells, taps)
}

/// Wires a multiplier and assigns adder tables to its cells.
pub fn build_multiplier(config: &MultiplierConfig, library: &AdderLibrary) -> Result<CellGrid> {
    config.validate()?;
    let adder = library.resolve(&config.adder_type)?.clone();
    let (mut cells, taps) = match config.architecture {
        Architecture::RippleCarry => wire_ripple(config.width),
        Architecture::CarrySave => wire_carry_save(config.width),
    };
    let exact_rows = exact_full_adder().packed_rows();
    let approx_rows = adder.packed_rows();
    let mut luts = Vec::with_capacity(cells.len());
    for cell in &mut cells {
        cell.approximate = cell.weight < config.degree;
        let forced_exact = cell.half_adder && config.half_adders == HalfAdderPolicy::Exact;
        luts.push(if cell.approximate && !forced_exact {
            approx_rows
        } else {
            exact_rows
        });
    }
    if taps.len() != 2 * config.width as usize || cells.len() > MAX_CELLS {
        return Err(Error::InvalidConfig("wiring produced an inconsistent grid".into()));
    }
    Ok(CellGrid {
        config: config.clone(),
        cells,
        luts,
        taps,
        adder,
    })
}

impl CellGrid {
    pub fn width(&self) -> u32 {
        self.config.width
    }

    pub fn config(&self) -> &MultiplierConfig {
        &self.config
    }

    pub fn cells(&self) -> &[AdderCell] {
        &self.cells
    }

    pub fn output_taps(&self) -> &[Signal] {
        &self.taps
    }

    pub fn adder(&self) -> &FullAdderSpec {
        &self.adder
    }

    /// Largest valid operand, `2^n - 1`.
    pub fn max_operand(&self) -> u64 {
        (1u64 << self.config.width) - 1
    }

    /// Evaluates the grid; operands must be below `2^n`.
    pub fn eval_multiply(&self, x: u64, y: u64) -> Result<u64> {
        let width = self.config.width;
        for value in [x, y] {
            if value > self.max_operand() {
                return Err(Error::OperandOutOfRange { value, width });
            }
        }
        Ok(self.product(x, y))
    }

    /// Unchecked evaluation used by the sweeps. Bits above the width are ignored.
    #[inline]
    pub fn product(&self, x: u64, y: u64) -> u64 {
        let mut out = [0u8; MAX_CELLS];
        let bit = |s: Signal, out: &[u8]| -> u8 {
            match s {
                Signal::Zero => 0,
                Signal::PartialProduct { row, col } => ((x >> row) & (y >> col) & 1) as u8,
                Signal::Sum(k) => out[k as usize] & 1,
                Signal::Carry(k) => out[k as usize] >> 1,
            }
        };
        for (k, (cell, lut)) in self.cells.iter().zip(&self.luts).enumerate() {
            let [a, b, c] = cell.inputs;
            let idx = (bit(a, &out) << 2) | (bit(b, &out) << 1) | bit(c, &out);
            out[k] = lut[idx as usize];
        }
        self.taps
            .iter()
            .enumerate()
            .fold(0u64, |acc, (w, &s)| acc | (u64::from(bit(s, &out)) << w))
    }

    pub fn cell_weight_map(&self) -> Vec<CellWeight> {
        let n = self.config.width;
        self.cells
            .iter()
            .map(|c| {
                let (row, col) = match c.role {
                    CellRole::Array { row, col } => (row, col),
                    CellRole::Merge { weight } => (n, weight - n),
                };
                CellWeight {
                    role: c.role.kind().to_string(),
                    row,
                    col,
                    weight: c.weight,
                    approx: c.approximate,
                }
            })
            .collect()
    }

    pub fn approximate_cell_count(&self) -> usize {
        self.cells.iter().filter(|c| c.approximate).count()
    }
}

pub fn exact_multiply(x: u64, y: u64, width: u32) -> Result<u64> {
    let max = (1u64 << width) - 1;
    for value in [x, y] {
        if value > max {
            return Err(Error::OperandOutOfRange { value, width });
        }
    }
    Ok(x * y)
}

/// One row of the grid introspection table. Merge cells report
/// `row = n`, `col = weight - n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellWeight {
    pub role: String,
    pub row: u32,
    pub col: u32,
    pub weight: u32,
    pub approx: bool,
}

pub fn cell_map_csv(entries: &[CellWeight]) -> String {
    let mut out = String::from("role,row,col,weight,approx\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.role, e.row, e.col, e.weight, e.approx as u8
        ));
    }
    out
}

pub fn parse_cell_map_csv(text: &str) -> Result<Vec<CellWeight>> {
    let mut lines = text.lines();
    if lines.next() != Some("role,row,col,weight,approx") {
        return Err(Error::Parse("cell map header mismatch".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let num = |s: &str| {
                s.parse::<u32>()
                    .map_err(|e| Error::Parse(format!("cell map row '{line}': {e}")))
            };
            if f.len() != 5 {
                return Err(Error::Parse(format!("cell map row '{line}' needs 5 fields")));
            }
            Ok(CellWeight {
                role: f[0].to_string(),
                row: num(f[1])?,
                col: num(f[2])?,
                weight: num(f[3])?,
                approx: num(f[4])? == 1,
            })
        })
        .collect()
}
