use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::validate_permutation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Chain,
    Square,
    Kagome,
}

/// Bond direction. Square lattices use `X`/`Y`; kagome bonds are tagged by
/// their angle with a_x (0, 60 and 120 degrees).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondTag {
    Chain,
    X,
    Y,
    Deg0,
    Deg60,
    Deg120,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub tag: BondTag,
}

/// A translation generator: site permutation plus its order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Translation {
    pub name: String,
    pub permutation: Vec<usize>,
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub kind: LatticeKind,
    pub lx: usize,
    pub ly: usize,
    pub coordinates: Vec<[f64; 2]>,
    pub bonds: Vec<Bond>,
    pub translations: Vec<Translation>,
}

impl Lattice {
    pub fn chain(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidModel(format!("periodic chain needs N >= 3, got {n}")));
        }
        let coordinates = (0..n).map(|i| [i as f64, 0.0]).collect();
        let bonds = (0..n).map(|i| Bond { a: i, b: (i + 1) % n, tag: BondTag::Chain }).collect();
        let t = Translation { name: "x".into(), permutation: (0..n).map(|i| (i + 1) % n).collect(), order: n };
        Ok(Self { kind: LatticeKind::Chain, lx: n, ly: 1, coordinates, bonds, translations: vec![t] })
    }

    /// Row-major periodic square lattice, site = x + lx * y. With a side of
    /// length 2 each bond along it appears twice.
    pub fn square(lx: usize, ly: usize) -> Result<Self> {
        if lx < 2 || ly < 2 {
            return Err(Error::InvalidModel(format!("square lattice needs Lx, Ly >= 2, got {lx}x{ly}")));
        }
        let site = |x: usize, y: usize| (x % lx) + lx * (y % ly);
        let mut coordinates = Vec::with_capacity(lx * ly);
        let mut bonds = Vec::new();
        for y in 0..ly {
            for x in 0..lx {
                coordinates.push([x as f64, y as f64]);
            }
        }
        for y in 0..ly {
            for x in 0..lx {
                bonds.push(Bond { a: site(x, y), b: site(x + 1, y), tag: BondTag::X });
            }
        }
        for y in 0..ly {
            for x in 0..lx {
                bonds.push(Bond { a: site(x, y), b: site(x, y + 1), tag: BondTag::Y });
            }
        }
        let tx = (0..lx * ly).map(|s| site(s % lx + 1, s / lx)).collect();
        let ty = (0..lx * ly).map(|s| site(s % lx, s / lx + 1)).collect();
        let translations = vec![
            Translation { name: "x".into(), permutation: tx, order: lx },
            Translation { name: "y".into(), permutation: ty, order: ly },
        ];
        Ok(Self { kind: LatticeKind::Square, lx, ly, coordinates, bonds, translations })
    }

    /// The periodic 12-site kagome torus, site = 3 * (cx + 2 cy) + sublattice,
    /// sublattices A, B, C at (0,0), (1/2,0), (1/4, sqrt(3)/4).
    pub fn kagome(lx: usize, ly: usize) -> Result<Self> {
        if (lx, ly) != (2, 2) {
            return Err(Error::InvalidModel(format!("only the 2x2 kagome torus is supported, got {lx}x{ly}")));
        }
        let h = 3f64.sqrt() / 2.0;
        let cell = |cx: i64, cy: i64| (cx.rem_euclid(lx as i64) + lx as i64 * cy.rem_euclid(ly as i64)) as usize;
        let site = |cx: i64, cy: i64, s: usize| 3 * cell(cx, cy) + s;
        let offsets = [[0.0, 0.0], [0.5, 0.0], [0.25, h / 2.0]];
        let mut coordinates = Vec::new();
        for cy in 0..ly {
            for cx in 0..lx {
                for off in offsets {
                    coordinates.push([cx as f64 + 0.5 * cy as f64 + off[0], h * cy as f64 + off[1]]);
                }
            }
        }
        let mut bonds = Vec::new();
        for cy in 0..ly as i64 {
            for cx in 0..lx as i64 {
                let (a, b, c) = (site(cx, cy, 0), site(cx, cy, 1), site(cx, cy, 2));
                bonds.push(Bond { a, b, tag: BondTag::Deg0 });
                bonds.push(Bond { a, b: c, tag: BondTag::Deg60 });
                bonds.push(Bond { a: b, b: c, tag: BondTag::Deg120 });
                bonds.push(Bond { a: b, b: site(cx + 1, cy, 0), tag: BondTag::Deg0 });
                bonds.push(Bond { a: c, b: site(cx, cy + 1, 0), tag: BondTag::Deg60 });
                bonds.push(Bond { a: b, b: site(cx + 1, cy - 1, 2), tag: BondTag::Deg120 });
            }
        }
        let n = 3 * lx * ly;
        let shift = |dx: i64, dy: i64| -> Vec<usize> {
            (0..n)
                .map(|s| {
                    let c = s / 3;
                    let (cx, cy) = ((c % lx) as i64, (c / lx) as i64);
                    site(cx + dx, cy + dy, s % 3)
                })
                .collect()
        };
        let translations = vec![
            Translation { name: "x".into(), permutation: shift(1, 0), order: lx },
            Translation { name: "y".into(), permutation: shift(0, 1), order: ly },
        ];
        Ok(Self { kind: LatticeKind::Kagome, lx, ly, coordinates, bonds, translations })
    }

    pub fn num_sites(&self) -> usize {
        self.coordinates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_sites();
        for b in &self.bonds {
            if b.a >= n || b.b >= n || b.a == b.b {
                return Err(Error::InvalidModel(format!("bad bond {b:?}")));
            }
        }
        for t in &self.translations {
            validate_permutation(n, &t.permutation)?;
        }
        Ok(())
    }

    /// Composes `count` applications of translation generator `dir`.
    pub fn translation_power(&self, dir: usize, count: usize) -> Vec<usize> {
        let t = &self.translations[dir].permutation;
        let mut p: Vec<usize> = (0..self.num_sites()).collect();
        for _ in 0..count % self.translations[dir].order {
            p = p.iter().map(|&s| t[s]).collect();
        }
        p
    }

    /// Site permutation for the lattice translation with shift vector `shift`.
    pub fn translation_by(&self, shift: &[usize]) -> Vec<usize> {
        let mut p: Vec<usize> = (0..self.num_sites()).collect();
        for (dir, &c) in shift.iter().enumerate() {
            let q = self.translation_power(dir, c);
            p = p.iter().map(|&s| q[s]).collect();
        }
        p
    }

    /// All shift vectors of the translation group in lexicographic order.
    pub fn translation_shifts(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for t in &self.translations {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..t.order).map(move |c| {
                        let mut w = v.clone();
                        w.push(c);
                        w
                    })
                })
                .collect();
        }
        out
    }

    pub fn translation_group_size(&self) -> usize {
        self.translations.iter().map(|t| t.order).product()
    }

    /// Bonds containing no two bonds sharing a site and covering every site.
    pub fn is_perfect_matching(&self, pairs: &[(usize, usize)]) -> bool {
        let mut seen = vec![false; self.num_sites()];
        for &(a, b) in pairs {
            if !self.bonds.iter().any(|x| (x.a, x.b) == (a, b) || (x.b, x.a) == (a, b)) {
                return false;
            }
            for q in [a, b] {
                if q >= seen.len() || std::mem::replace(&mut seen[q], true) {
                    return false;
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn kagome_has_24_distinct_bonds_of_unit_length_half() {
        let l = Lattice::kagome(2, 2).unwrap();
        l.validate().unwrap();
        assert_eq!(l.num_sites(), 12);
        let set: HashSet<_> = l.bonds.iter().map(|b| (b.a.min(b.b), b.a.max(b.b))).collect();
        assert_eq!(set.len(), 24);
        let mut degree = [0; 12];
        for b in &l.bonds {
            degree[b.a] += 1;
            degree[b.b] += 1;
        }
        assert!(degree.iter().all(|&d| d == 4));
    }

    #[test]
    fn kagome_translations_commute() {
        let l = Lattice::kagome(2, 2).unwrap();
        let tx = &l.translations[0].permutation;
        let ty = &l.translations[1].permutation;
        let xy: Vec<_> = (0..12).map(|s| tx[ty[s]]).collect();
        let yx: Vec<_> = (0..12).map(|s| ty[tx[s]]).collect();
        assert_eq!(xy, yx);
    }

    #[test]
    fn translations_map_bonds_to_bonds() {
        for l in [Lattice::chain(6).unwrap(), Lattice::square(4, 4).unwrap(), Lattice::kagome(2, 2).unwrap()] {
            let set: HashSet<_> = l.bonds.iter().map(|b| (b.a.min(b.b), b.a.max(b.b), b.tag)).collect();
            for t in &l.translations {
                for b in &l.bonds {
                    let (a, c) = (t.permutation[b.a], t.permutation[b.b]);
                    assert!(set.contains(&(a.min(c), a.max(c), b.tag)), "{:?}", l.kind);
                }
            }
        }
    }

    #[test]
    fn chain_rejects_short() {
        assert!(Lattice::chain(2).is_err());
        assert!(Lattice::kagome(3, 2).is_err());
    }
}
