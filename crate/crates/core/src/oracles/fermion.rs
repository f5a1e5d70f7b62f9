//! Free-fermion solution of the periodic chain -sum Z_i Z_{i+1} - g sum X_i.
//!
//! Even spin parity uses the anti-periodic grid k = 2 pi (m + 1/2) / N, odd
//! parity the periodic grid k = 2 pi m / N with unpaired modes at k = 0 and
//! k = pi whose energies are xi_0 = 2g - 2 and xi_pi = 2g + 2.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Bogoliubov dispersion 2 sqrt((g - cos k)^2 + sin^2 k).
pub fn dispersion(k: f64, g: f64) -> f64 {
    2.0 * ((g - k.cos()).powi(2) + k.sin().powi(2)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Occupation {
    pub n_b: usize,
    pub n_0: usize,
    pub n_pi: usize,
}

impl Occupation {
    pub fn total(&self) -> usize {
        self.n_b + self.n_0 + self.n_pi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FermionLevel {
    pub energy: f64,
    /// Total momentum K = 2 pi m / N.
    pub momentum: usize,
    pub parity: i32,
    pub occupation: Occupation,
    /// Occupied mode momenta (radians).
    pub occupied: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeFermionType {
    TypeI,
    TypeII,
}

/// Type I: (2,1,0) and (1,1,1); type II: (2,0,1) and (3,0,0).
pub fn classify_3fermion(level: &FermionLevel) -> Result<ThreeFermionType> {
    let o = level.occupation;
    match (o.n_b, o.n_0, o.n_pi) {
        (2, 1, 0) | (1, 1, 1) => Ok(ThreeFermionType::TypeI),
        (2, 0, 1) | (3, 0, 0) => Ok(ThreeFermionType::TypeII),
        _ => Err(Error::InvalidModel(format!("occupation {o:?} is not a three-fermion level"))),
    }
}

/// Levels of one parity sector with at most `max_quasiparticles` occupied
/// modes (all levels when `None`), sorted by energy.
pub fn tfi_fermion_spectrum(n: usize, g: f64, parity: i32, max_quasiparticles: Option<usize>) -> Result<Vec<FermionLevel>> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidModel(format!("fermion oracle needs even N, got {n}")));
    }
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::InvalidModel(format!("fermion oracle needs g > 0, got {g}")));
    }
    let max_q = max_quasiparticles.unwrap_or(n).min(n);
    let step = 2.0 * PI / n as f64;
    let mut out = Vec::new();
    match parity {
        1 => {
            // twice the momentum index: 2m + 1
            let modes: Vec<(usize, f64, f64)> = (0..n)
                .map(|m| {
                    let k = step * (m as f64 + 0.5);
                    (2 * m + 1, k, dispersion(k, g))
                })
                .collect();
            let vacuum = -0.5 * modes.iter().map(|m| m.2).sum::<f64>();
            enumerate_subsets(&modes, max_q, &mut |chosen| {
                if chosen.len() % 2 != 0 {
                    return;
                }
                let twice: usize = chosen.iter().map(|&i| modes[i].0).sum();
                out.push(FermionLevel {
                    energy: vacuum + chosen.iter().map(|&i| modes[i].2).sum::<f64>(),
                    momentum: (twice / 2) % n,
                    parity: 1,
                    occupation: Occupation { n_b: chosen.len(), n_0: 0, n_pi: 0 },
                    occupied: chosen.iter().map(|&i| modes[i].1).collect(),
                });
            });
        }
        -1 => {
            let paired: Vec<(usize, f64, f64)> = (1..n)
                .filter(|&m| m != n / 2)
                .map(|m| {
                    let k = step * m as f64;
                    (m, k, dispersion(k, g))
                })
                .collect();
            let base = -2.0 * g - 0.5 * paired.iter().map(|m| m.2).sum::<f64>();
            let (xi0, xipi) = (2.0 * g - 2.0, 2.0 * g + 2.0);
            for n0 in 0..=1usize {
                for npi in 0..=1usize {
                    let extra = n0 + npi;
                    if extra > max_q {
                        continue;
                    }
                    enumerate_subsets(&paired, max_q - extra, &mut |chosen| {
                        if (chosen.len() + extra) % 2 != 1 {
                            return;
                        }
                        let m: usize = chosen.iter().map(|&i| paired[i].0).sum::<usize>() + npi * n / 2;
                        let mut occupied: Vec<f64> = chosen.iter().map(|&i| paired[i].1).collect();
                        if n0 == 1 {
                            occupied.push(0.0);
                        }
                        if npi == 1 {
                            occupied.push(PI);
                        }
                        out.push(FermionLevel {
                            energy: base
                                + n0 as f64 * xi0
                                + npi as f64 * xipi
                                + chosen.iter().map(|&i| paired[i].2).sum::<f64>(),
                            momentum: m % n,
                            parity: -1,
                            occupation: Occupation { n_b: chosen.len(), n_0: n0, n_pi: npi },
                            occupied,
                        });
                    });
                }
            }
        }
        p => return Err(Error::InvalidModel(format!("parity must be +1 or -1, got {p}"))),
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.momentum.cmp(&b.momentum)));
    Ok(out)
}

fn enumerate_subsets<T>(items: &[T], max: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, len: usize, max: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        f(cur);
        if cur.len() == max {
            return;
        }
        for i in start..len {
            cur.push(i);
            rec(i + 1, len, max, cur, f);
            cur.pop();
        }
    }
    let mut cur = Vec::new();
    rec(0, items.len(), max, &mut cur, f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelKind};
    use crate::oracles::ed::{ed_sector_spectrum, EdOptions};
    use crate::symmetry::{SectorLabel, SymmetrySpec};

    #[test]
    fn dispersion_values_at_criticality() {
        assert!((dispersion(PI, 1.0) - 4.0).abs() < 1e-14);
        assert!(dispersion(0.0, 1.0).abs() < 1e-14);
        let k = 0.37;
        assert!((dispersion(k, 0.6) - dispersion(-k, 0.6)).abs() < 1e-14);
    }

    #[test]
    fn full_count_is_two_to_the_n() {
        let even = tfi_fermion_spectrum(6, 0.7, 1, None).unwrap();
        let odd = tfi_fermion_spectrum(6, 0.7, -1, None).unwrap();
        assert_eq!(even.len() + odd.len(), 64);
        assert_eq!(even[0].momentum, 0);
        assert_eq!(odd[0].momentum, 0);
        assert_eq!(odd[0].occupation, Occupation { n_b: 0, n_0: 1, n_pi: 0 });
    }

    #[test]
    fn matches_sector_ed_on_small_chains() {
        for &(n, g) in &[(6usize, 0.7), (8, 1.0), (8, 1.9)] {
            let m = build_model(ModelKind::TfiChain, &[n], Some(g)).unwrap();
            let spec = SymmetrySpec { translations: true, parity: true, popcount: None };
            let ed = ed_sector_spectrum(&m.lattice, &m.terms, &spec, &EdOptions::default()).unwrap();
            for parity in [1, -1] {
                let levels = tfi_fermion_spectrum(n, g, parity, None).unwrap();
                for mom in 0..n {
                    let mut f: Vec<f64> = levels.iter().filter(|l| l.momentum == mom).map(|l| l.energy).collect();
                    f.sort_by(f64::total_cmp);
                    let label = SectorLabel { momentum: vec![mom], parity: Some(parity), popcount: None };
                    let e = &ed.sector(&label).unwrap().energies;
                    assert_eq!(f.len(), e.len(), "N={n} parity={parity} m={mom}");
                    for (a, b) in f.iter().zip(e) {
                        assert!((a - b).abs() < 1e-10, "N={n} g={g} parity={parity} m={mom}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn classification() {
        let lvl = |n_b, n_0, n_pi| FermionLevel {
            energy: 0.0,
            momentum: 0,
            parity: -1,
            occupation: Occupation { n_b, n_0, n_pi },
            occupied: vec![],
        };
        assert_eq!(classify_3fermion(&lvl(2, 1, 0)).unwrap(), ThreeFermionType::TypeI);
        assert_eq!(classify_3fermion(&lvl(1, 1, 1)).unwrap(), ThreeFermionType::TypeI);
        assert_eq!(classify_3fermion(&lvl(3, 0, 0)).unwrap(), ThreeFermionType::TypeII);
        assert_eq!(classify_3fermion(&lvl(2, 0, 1)).unwrap(), ThreeFermionType::TypeII);
        assert!(classify_3fermion(&lvl(1, 0, 0)).is_err());
    }

    #[test]
    fn rejects_odd_n() {
        assert!(tfi_fermion_spectrum(7, 1.0, 1, None).is_err());
    }
}
