//! Raw trial records, cell counts, and plug-in probability tables.

use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::{Fig1Table, Fig2Table, ObservedTable};

/// One participant. `x` and `y` are `None` when missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TrialRecord {
    pub r: bool,
    pub o: bool,
    pub x: Option<bool>,
    pub y: Option<bool>,
}

impl TrialRecord {
    pub fn observed(r: bool, x: bool, y: bool) -> Self {
        TrialRecord {
            r,
            o: true,
            x: Some(x),
            y: Some(y),
        }
    }

    pub fn missing(r: bool) -> Self {
        TrialRecord {
            r,
            o: false,
            x: None,
            y: None,
        }
    }

    /// Checks the both-observed-or-both-missing rule and, for perfect
    /// compliance, that the received intervention equals the assignment.
    pub fn check(&self, compliance: Compliance) -> std::result::Result<(), String> {
        match (self.o, self.x, self.y) {
            (true, Some(x), Some(_)) => {
                if compliance == Compliance::Perfect && x != self.r {
                    return Err("x differs from r in a perfect-compliance dataset".into());
                }
                Ok(())
            }
            (true, _, _) => Err("o=1 but x or y is missing".into()),
            (false, None, None) => Ok(()),
            (false, _, _) => Err("o=0 but x or y is present".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Compliance {
    Perfect,
    General,
}

/// Sufficient statistics of a trial: observed cells by (x, y, r) and
/// missing counts by r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CellCounts {
    pub observed: [[[u64; 2]; 2]; 2],
    pub missing: [u64; 2],
}

/// Number of multinomial cells in [`CellCounts`].
pub const N_CELLS: usize = 10;

impl CellCounts {
    pub fn from_records(records: &[TrialRecord], compliance: Compliance) -> Result<Self> {
        let mut c = CellCounts::default();
        for (row, rec) in records.iter().enumerate() {
            rec.check(compliance)
                .map_err(|reason| Error::MalformedRecord { row, reason })?;
            let r = rec.r as usize;
            match (rec.x, rec.y) {
                (Some(x), Some(y)) => c.observed[x as usize][y as usize][r] += 1,
                _ => c.missing[r] += 1,
            }
        }
        Ok(c)
    }

    pub fn arm_total(&self, r: usize) -> u64 {
        let mut n = self.missing[r];
        for x in 0..2 {
            for y in 0..2 {
                n += self.observed[x][y][r];
            }
        }
        n
    }

    pub fn total(&self) -> u64 {
        self.arm_total(0) + self.arm_total(1)
    }

    /// Flattened cell vector in a fixed order; inverse of [`CellCounts::from_cells`].
    pub fn cells(&self) -> [u64; N_CELLS] {
        let mut out = [0; N_CELLS];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = match i {
                0..=7 => self.observed[i >> 2][(i >> 1) & 1][i & 1],
                _ => self.missing[i - 8],
            };
        }
        out
    }

    pub fn from_cells(cells: &[u64; N_CELLS]) -> Self {
        let mut c = CellCounts::default();
        for (i, &n) in cells.iter().enumerate() {
            match i {
                0..=7 => c.observed[i >> 2][(i >> 1) & 1][i & 1] = n,
                _ => c.missing[i - 8] = n,
            }
        }
        c
    }

    /// True when some observed unit received the other arm's intervention.
    pub fn has_noncompliance(&self) -> bool {
        (0..2).any(|r| (0..2).any(|y| self.observed[1 - r][y][r] > 0))
    }

    fn check_arms(&self) -> Result<[f64; 2]> {
        let n = [self.arm_total(0), self.arm_total(1)];
        for (r, &nr) in n.iter().enumerate() {
            if nr == 0 {
                return Err(Error::EmptyArm(r as u8));
            }
        }
        Ok([n[0] as f64, n[1] as f64])
    }

    /// Plug-in noncompliance table.
    pub fn fig2_table(&self) -> Result<Fig2Table> {
        let n = self.check_arms()?;
        let mut t = [[[0.0; 2]; 2]; 2];
        for (x, plane) in t.iter_mut().enumerate() {
            for (y, row) in plane.iter_mut().enumerate() {
                for (r, cell) in row.iter_mut().enumerate() {
                    *cell = self.observed[x][y][r] as f64 / n[r];
                }
            }
        }
        Fig2Table::new(n[1] / (n[0] + n[1]), t)
    }

    /// Plug-in perfect-compliance table. Fails if any observed unit did not
    /// receive its assignment.
    pub fn fig1_table(&self) -> Result<Fig1Table> {
        if self.has_noncompliance() {
            return Err(Error::MalformedRecord {
                row: 0,
                reason: "noncompliant records in a perfect-compliance dataset".into(),
            });
        }
        let n = self.check_arms()?;
        let mut t = [[0.0; 2]; 2];
        for (y, row) in t.iter_mut().enumerate() {
            for (x, cell) in row.iter_mut().enumerate() {
                *cell = self.observed[x][y][x] as f64 / n[x];
            }
        }
        Fig1Table::new(n[1] / (n[0] + n[1]), t)
    }

    pub fn table(&self, compliance: Compliance) -> Result<ObservedTable> {
        Ok(match compliance {
            Compliance::Perfect => ObservedTable::Fig1(self.fig1_table()?),
            Compliance::General => ObservedTable::Fig2(self.fig2_table()?),
        })
    }
}

/// Maximum-likelihood plug-in table from raw records.
pub fn table_from_counts(records: &[TrialRecord], compliance: Compliance) -> Result<ObservedTable> {
    if records.is_empty() {
        return Err(Error::EmptyArm(0));
    }
    CellCounts::from_records(records, compliance)?.table(compliance)
}

fn parse_bit(field: &str, name: &str, row: usize) -> Result<Option<bool>> {
    match field.trim() {
        "" | "NA" | "na" | "." => Ok(None),
        "0" => Ok(Some(false)),
        "1" => Ok(Some(true)),
        other => Err(Error::MalformedRecord {
            row,
            reason: format!("{name}='{other}' is not 0, 1, NA or empty"),
        }),
    }
}

/// Reads trial records from CSV with header `r,x,y,o` (any column order).
pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
    };
    let (ir, ix, iy, io) = (col("r")?, col("x")?, col("y")?, col("o")?);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let required = |i: usize, name: &str| {
            parse_bit(get(i), name, row)?.ok_or_else(|| Error::MalformedRecord {
                row,
                reason: format!("{name} must not be missing"),
            })
        };
        out.push(TrialRecord {
            r: required(ir, "r")?,
            o: required(io, "o")?,
            x: parse_bit(get(ix), "x", row)?,
            y: parse_bit(get(iy), "y", row)?,
        });
    }
    Ok(out)
}

pub fn write_records_csv<W: std::io::Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["r", "x", "y", "o"])?;
    let bit = |b: Option<bool>| match b {
        Some(true) => "1",
        Some(false) => "0",
        None => "NA",
    };
    for rec in records {
        w.write_record([bit(Some(rec.r)), bit(rec.x), bit(rec.y), bit(Some(rec.o))])?;
    }
    w.flush()?;
    Ok(())
}
