//! Spectrum CSV: sector columns, then rank, energy, norm_rank and flags.
//!
//! `rank` is the position of the level among rows with the same
//! (momentum, parity, delta_sz), ascending in energy.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{EdResult, FermionLevel};
use crate::tangent::LabeledSpectrum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub momentum_m1: Option<usize>,
    pub momentum_m2: Option<usize>,
    pub parity: Option<i32>,
    #[serde(rename = "spin_S")]
    pub spin_s: Option<f64>,
    pub delta_sz: Option<i32>,
    pub rank: usize,
    pub energy: f64,
    pub norm_rank: Option<usize>,
    /// Label flags joined by ';'.
    pub flags: String,
    /// Fermion occupation "n_B/n_0/n_pi" (fermion oracle only).
    pub occupation: Option<String>,
}

impl SpectrumRow {
    pub fn sector_key(&self) -> (Option<usize>, Option<usize>, Option<i32>, Option<i32>) {
        (self.momentum_m1, self.momentum_m2, self.parity, self.delta_sz)
    }

    fn blank(momentum: Option<&[usize]>, parity: Option<i32>, energy: f64) -> Self {
        SpectrumRow {
            momentum_m1: momentum.and_then(|m| m.first().copied()),
            momentum_m2: momentum.and_then(|m| m.get(1).copied()),
            parity,
            spin_s: None,
            delta_sz: None,
            rank: 0,
            energy,
            norm_rank: None,
            flags: String::new(),
            occupation: None,
        }
    }
}

/// Sorts by sector then energy and assigns per-sector ranks.
fn finish(mut rows: Vec<SpectrumRow>) -> Vec<SpectrumRow> {
    rows.sort_by(|a, b| a.sector_key().cmp(&b.sector_key()).then(a.energy.total_cmp(&b.energy)));
    let mut counts: BTreeMap<_, usize> = BTreeMap::new();
    for r in &mut rows {
        let c = counts.entry(r.sector_key()).or_default();
        r.rank = *c;
        *c += 1;
    }
    rows
}

pub fn rows_from_spectrum(spectrum: &LabeledSpectrum) -> Vec<SpectrumRow> {
    let rows = spectrum
        .levels
        .iter()
        .map(|l| SpectrumRow {
            spin_s: l.total_spin,
            delta_sz: l.delta_sz,
            norm_rank: Some(l.norm_rank),
            flags: l.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(";"),
            ..SpectrumRow::blank(l.momentum.as_deref(), l.parity, l.energy)
        })
        .collect();
    finish(rows)
}

/// ED levels; the popcount label is dropped, `delta_sz` is filled from
/// `reference_popcount - popcount` when given.
pub fn rows_from_ed(ed: &EdResult, reference_popcount: Option<usize>) -> Vec<SpectrumRow> {
    let rows = ed
        .levels()
        .into_iter()
        .map(|l| SpectrumRow {
            delta_sz: match (reference_popcount, l.popcount) {
                (Some(r), Some(p)) => Some(r as i32 - p as i32),
                _ => None,
            },
            ..SpectrumRow::blank(Some(&l.momentum), l.parity, l.energy)
        })
        .collect();
    finish(rows)
}

pub fn rows_from_fermion(levels: &[FermionLevel]) -> Vec<SpectrumRow> {
    let rows = levels
        .iter()
        .map(|l| {
            let o = l.occupation;
            SpectrumRow {
                occupation: Some(format!("{}/{}/{}", o.n_b, o.n_0, o.n_pi)),
                ..SpectrumRow::blank(Some(&[l.momentum]), Some(l.parity), l.energy)
            }
        })
        .collect();
    finish(rows)
}

pub fn write_spectrum_csv<W: Write>(rows: &[SpectrumRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_spectrum_csv<R: Read>(r: R) -> Result<Vec<SpectrumRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let row: SpectrumRow = rec.map_err(|e| Error::Format(e.to_string()))?;
        if !row.energy.is_finite() || row.spin_s.is_some_and(|s| !s.is_finite()) {
            return Err(Error::Format(format!("non-finite value in row {}", rows.len() + 1)));
        }
        if row.parity.is_some_and(|p| p != 1 && p != -1) {
            return Err(Error::Format(format!("parity must be +-1 in row {}", rows.len() + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::tfi_fermion_spectrum;

    #[test]
    fn csv_round_trip() {
        let rows = rows_from_fermion(&tfi_fermion_spectrum(6, 1.0, -1, Some(3)).unwrap());
        let mut buf = Vec::new();
        write_spectrum_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("momentum_m1,momentum_m2,parity,spin_S,delta_sz,rank,energy,norm_rank,flags,occupation"));
        assert_eq!(read_spectrum_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn ranks_restart_per_sector() {
        let rows = rows_from_fermion(&tfi_fermion_spectrum(6, 0.7, 1, None).unwrap());
        for w in rows.windows(2) {
            if w[0].sector_key() == w[1].sector_key() {
                assert_eq!(w[1].rank, w[0].rank + 1);
                assert!(w[1].energy >= w[0].energy);
            } else {
                assert_eq!(w[1].rank, 0);
            }
        }
    }
}
