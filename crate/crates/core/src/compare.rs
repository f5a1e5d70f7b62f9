//! Level matching between a reference spectrum (oracle) and a candidate
//! (variational) spectrum.
//!
//! Within each sector both lists are sorted by energy and reference levels
//! closer than the degeneracy tolerance form multiplets. Candidate levels are
//! assigned greedily in order of increasing |dE| (ties to lower ranks) while
//! |dE| <= tolerance, each multiplet taking at most its multiplicity. A
//! multiplet with at least one candidate counts as matched for all of its
//! members. Rank-wise errors (reference rank r against candidate rank r) are
//! reported alongside.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::SpectrumRow;

pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

pub type SectorKey = (Option<usize>, Option<usize>, Option<i32>, Option<i32>);

#[derive(Clone, Debug, Serialize)]
pub struct LevelMatch {
    pub momentum_m1: Option<usize>,
    pub momentum_m2: Option<usize>,
    pub parity: Option<i32>,
    pub delta_sz: Option<i32>,
    pub reference_rank: usize,
    pub reference_energy: f64,
    /// Size of the reference multiplet containing this level.
    pub multiplicity: usize,
    pub candidate_rank: Option<usize>,
    pub candidate_energy: Option<f64>,
    pub error: Option<f64>,
    pub occupation: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankError {
    pub sector: SectorKey,
    pub rank: usize,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub tolerance: f64,
    pub degeneracy_tolerance: f64,
    /// One entry per reference level of every compared sector.
    pub matches: Vec<LevelMatch>,
    pub rank_errors: Vec<RankError>,
    pub matched: usize,
    pub unmatched_reference: usize,
    pub unmatched_candidate: usize,
    /// Matched multiplets that received fewer candidates than their size.
    pub partial_multiplets: usize,
    /// Largest |dE| over matched pairs.
    pub max_error: f64,
    /// Mean rank-wise error of the lowest non-ground level of each sector.
    pub mean_first_excitation_error: Option<f64>,
    /// Reference sectors without candidate levels (not compared).
    pub missing_sectors: Vec<SectorKey>,
}

impl ComparisonReport {
    pub fn unmatched(&self) -> impl Iterator<Item = &LevelMatch> {
        self.matches.iter().filter(|m| m.error.is_none())
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for m in &self.matches {
            wr.serialize(m).map_err(|e| Error::Format(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn group(rows: &[SpectrumRow]) -> BTreeMap<SectorKey, Vec<&SpectrumRow>> {
    let mut out: BTreeMap<SectorKey, Vec<&SpectrumRow>> = BTreeMap::new();
    for r in rows {
        out.entry(r.sector_key()).or_default().push(r);
    }
    for v in out.values_mut() {
        v.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    }
    out
}

/// Matches candidate levels to reference levels sector by sector. Every
/// candidate sector must be present in the reference.
pub fn compare_spectra(reference: &[SpectrumRow], candidate: &[SpectrumRow], tolerance: f64) -> Result<ComparisonReport> {
    if !(tolerance >= 0.0) {
        return Err(Error::Format(format!("matching tolerance {tolerance}")));
    }
    let refs = group(reference);
    let cands = group(candidate);
    if let Some(k) = cands.keys().find(|k| !refs.contains_key(*k)) {
        return Err(Error::InvalidMomentum(format!("candidate sector {k:?} absent from the reference")));
    }
    let ground = reference.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
    let mut report = ComparisonReport {
        tolerance,
        degeneracy_tolerance: DEGENERACY_TOLERANCE,
        matches: Vec::new(),
        rank_errors: Vec::new(),
        matched: 0,
        unmatched_reference: 0,
        unmatched_candidate: 0,
        partial_multiplets: 0,
        max_error: 0.0,
        mean_first_excitation_error: None,
        missing_sectors: Vec::new(),
    };
    let mut first = Vec::new();
    for (key, rs) in &refs {
        let Some(cs) = cands.get(key) else {
            report.missing_sectors.push(*key);
            continue;
        };
        // multiplet index of each reference level
        let mut mult = vec![0usize; rs.len()];
        for i in 1..rs.len() {
            mult[i] = mult[i - 1] + usize::from(rs[i].energy - rs[i - 1].energy > DEGENERACY_TOLERANCE);
        }
        let nm = mult.last().map_or(0, |m| m + 1);
        let mut size = vec![0usize; nm];
        for &m in &mult {
            size[m] += 1;
        }
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (i, r) in rs.iter().enumerate() {
            if i > 0 && mult[i] == mult[i - 1] {
                continue;
            }
            // both lists are sorted, so only a window of candidates can be in range
            let lo = cs.partition_point(|c| c.energy < r.energy - tolerance);
            for (j, c) in cs.iter().enumerate().skip(lo) {
                if c.energy > r.energy + tolerance {
                    break;
                }
                pairs.push(((c.energy - r.energy).abs(), mult[i], j));
            }
        }
        // |dE| binned at the degeneracy tolerance so near-ties go to lower ranks
        pairs.sort_by_key(|&(d, m, j)| ((d / DEGENERACY_TOLERANCE) as u64, m, j));
        let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); nm];
        let mut best = vec![f64::INFINITY; nm];
        let mut cand_used = vec![false; cs.len()];
        for (d, m, j) in pairs {
            if assigned[m].len() < size[m] && !cand_used[j] {
                assigned[m].push(j);
                best[m] = best[m].min(d);
                cand_used[j] = true;
            }
        }
        for a in &mut assigned {
            a.sort_unstable();
        }
        report.partial_multiplets += (0..nm).filter(|&m| !assigned[m].is_empty() && assigned[m].len() < size[m]).count();
        let mut pos = 0;
        for (i, r) in rs.iter().enumerate() {
            let m = mult[i];
            pos = if i > 0 && mult[i - 1] == m { pos + 1 } else { 0 };
            let j = assigned[m].get(pos).copied();
            let error = (!assigned[m].is_empty()).then(|| j.map_or(best[m], |j| (cs[j].energy - r.energy).abs()));
            if let Some(e) = error {
                report.max_error = report.max_error.max(e);
                report.matched += 1;
            } else {
                report.unmatched_reference += 1;
            }
            report.matches.push(LevelMatch {
                momentum_m1: key.0,
                momentum_m2: key.1,
                parity: key.2,
                delta_sz: key.3,
                reference_rank: i,
                reference_energy: r.energy,
                multiplicity: size[m],
                candidate_rank: j,
                candidate_energy: j.map(|j| cs[j].energy),
                error,
                occupation: r.occupation.clone(),
            });
        }
        report.unmatched_candidate += cand_used.iter().filter(|u| !**u).count();
        for (rank, (r, c)) in rs.iter().zip(cs.iter()).enumerate() {
            report.rank_errors.push(RankError { sector: *key, rank, error: (c.energy - r.energy).abs() });
        }
        let f = usize::from((rs[0].energy - ground).abs() <= DEGENERACY_TOLERANCE);
        if f < rs.len().min(cs.len()) {
            first.push((cs[f].energy - rs[f].energy).abs());
        }
    }
    if !first.is_empty() {
        report.mean_first_excitation_error = Some(first.iter().sum::<f64>() / first.len() as f64);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::rows_from_fermion;
    use crate::oracles::tfi_fermion_spectrum;

    #[test]
    fn identical_inputs_match_with_zero_error() {
        let rows = rows_from_fermion(&tfi_fermion_spectrum(8, 1.0, 1, None).unwrap());
        let r = compare_spectra(&rows, &rows, 1e-8).unwrap();
        assert_eq!(r.unmatched_reference, 0);
        assert_eq!(r.unmatched_candidate, 0);
        assert_eq!(r.max_error, 0.0);
        assert!(r.rank_errors.iter().all(|e| e.error == 0.0));
    }

    #[test]
    fn missing_levels_are_reported() {
        let all = rows_from_fermion(&tfi_fermion_spectrum(8, 0.5, 1, None).unwrap());
        let two: Vec<_> = all.iter().filter(|r| r.occupation.as_deref() == Some("2/0/0")).cloned().collect();
        let r = compare_spectra(&all, &two, 1e-9).unwrap();
        let four = all.iter().filter(|r| r.occupation.as_deref() != Some("2/0/0")).count();
        assert_eq!(r.unmatched_reference, four);
        assert!(r.unmatched().all(|m| m.occupation.as_deref() != Some("2/0/0")));
    }

    #[test]
    fn degenerate_partner_counts_as_matched() {
        let row = |e: f64| SpectrumRow {
            momentum_m1: Some(0),
            momentum_m2: None,
            parity: Some(1),
            spin_s: None,
            delta_sz: None,
            rank: 0,
            energy: e,
            norm_rank: None,
            flags: String::new(),
            occupation: None,
        };
        let reference = vec![row(-3.0), row(-1.0), row(-1.0 + 1e-12), row(2.0)];
        let candidate = vec![row(-3.0 + 1e-9), row(-1.0 + 2e-9)];
        let r = compare_spectra(&reference, &candidate, 1e-6).unwrap();
        assert_eq!(r.matched, 3);
        assert_eq!(r.unmatched_reference, 1);
        assert_eq!(r.partial_multiplets, 1);
        assert_eq!(r.matches[1].multiplicity, 2);
        assert!(r.matches[2].candidate_rank.is_none() && r.matches[2].error.is_some());
        assert!(r.matches[3].error.is_none());
    }

    #[test]
    fn foreign_sector_is_an_error() {
        let even = rows_from_fermion(&tfi_fermion_spectrum(6, 1.0, 1, Some(2)).unwrap());
        let odd = rows_from_fermion(&tfi_fermion_spectrum(6, 1.0, -1, Some(1)).unwrap());
        assert!(compare_spectra(&even, &odd, 1e-6).is_err());
    }
}
