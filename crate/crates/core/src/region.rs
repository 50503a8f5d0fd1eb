//! Finite regions of the lattice `Z^d` and of the half lattice `N × Z^{d-1}`.
//!
//! A region keeps its sites in lexicographic order. Every tensor-leg
//! ordering downstream is derived from this order: the first site of a
//! region is the most significant digit of a basis index.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Site = Vec<i64>;

/// Default cap on Hilbert space dimension, i.e. 14 spin-1/2 sites.
pub const DEFAULT_MAX_DIM: usize = 1 << 14;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    sites: Vec<Site>,
}

impl Region {
    pub fn new(sites: Vec<Site>) -> Result<Self> {
        if let Some(first) = sites.first() {
            let d = first.len();
            if d == 0 {
                return Err(Error::InvalidRegion("sites must have at least one coordinate".into()));
            }
            if let Some(bad) = sites.iter().find(|s| s.len() != d) {
                return Err(Error::InvalidRegion(format!(
                    "site {bad:?} has dimension {} but expected {d}",
                    bad.len()
                )));
            }
        }
        let set: BTreeSet<Site> = sites.iter().cloned().collect();
        if set.len() != sites.len() {
            return Err(Error::InvalidRegion("duplicate sites".into()));
        }
        Ok(Self { sites: set.into_iter().collect() })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The one-dimensional interval `{start, ..., start + len - 1}`.
    pub fn interval(start: i64, len: usize) -> Self {
        Self { sites: (0..len as i64).map(|i| vec![start + i]).collect() }
    }

    /// Axis-aligned box with the given lower corner and side lengths.
    pub fn rectangle(origin: &[i64], extents: &[usize]) -> Self {
        assert_eq!(origin.len(), extents.len());
        let mut sites = vec![Vec::new()];
        for (&o, &e) in origin.iter().zip(extents) {
            sites = sites
                .into_iter()
                .flat_map(|s| {
                    (0..e as i64).map(move |k| {
                        let mut t = s.clone();
                        t.push(o + k);
                        t
                    })
                })
                .collect();
        }
        if extents.contains(&0) {
            sites.clear();
        }
        sites.sort();
        Self { sites }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.sites.first().map(|s| s.len())
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        self.sites.binary_search_by(|s| s.as_slice().cmp(site)).is_ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    /// Shift every site by `g`. Translation preserves lexicographic order.
    pub fn translate(&self, g: &[i64]) -> Region {
        let sites = self
            .sites
            .iter()
            .map(|s| {
                assert_eq!(s.len(), g.len(), "shift dimension mismatch");
                s.iter().zip(g).map(|(a, b)| a + b).collect()
            })
            .collect();
        Region { sites }
    }

    /// Positions of the sites of `self` inside `sup`, in increasing order.
    pub fn positions_in(&self, sup: &Region) -> Option<Vec<usize>> {
        self.sites
            .iter()
            .map(|s| sup.sites.binary_search(s).ok())
            .collect()
    }

    pub fn union(&self, other: &Region) -> Region {
        let set: BTreeSet<Site> = self.sites.iter().chain(&other.sites).cloned().collect();
        Region { sites: set.into_iter().collect() }
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region { sites: self.sites.iter().filter(|s| other.contains(s)).cloned().collect() }
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region { sites: self.sites.iter().filter(|s| !other.contains(s)).cloned().collect() }
    }

    /// Componentwise minimum and maximum corners.
    pub fn bounding_box(&self) -> Option<(Site, Site)> {
        let first = self.sites.first()?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for s in &self.sites {
            for (k, &x) in s.iter().enumerate() {
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        Some((lo, hi))
    }

    /// The region together with every site at sup-distance one from it.
    pub fn shell(&self) -> Region {
        let Some(d) = self.dim() else { return self.clone() };
        let offsets = Region::rectangle(&vec![-1; d], &vec![3; d]);
        let set: BTreeSet<Site> = self
            .sites
            .iter()
            .flat_map(|s| {
                offsets
                    .sites
                    .iter()
                    .map(move |o| s.iter().zip(o).map(|(a, b)| a + b).collect::<Site>())
            })
            .collect();
        Region { sites: set.into_iter().collect() }
    }

    /// Every axis-aligned box contained in the bounding box of `self`,
    /// restricted to boxes that are subsets of `self`.
    /// Whether the region fills its bounding box.
    pub fn is_box(&self) -> bool {
        self.bounding_box().is_some_and(|(lo, hi)| {
            lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).product::<usize>() == self.len()
        })
    }

    pub fn sub_boxes(&self) -> Vec<Region> {
        let Some((lo, hi)) = self.bounding_box() else { return Vec::new() };
        let mut ranges: Vec<Vec<(i64, usize)>> = Vec::new();
        for k in 0..lo.len() {
            let mut r = Vec::new();
            for a in lo[k]..=hi[k] {
                for b in a..=hi[k] {
                    r.push((a, (b - a + 1) as usize));
                }
            }
            ranges.push(r);
        }
        let mut out = vec![(Vec::new(), Vec::new())];
        for r in &ranges {
            out = out
                .into_iter()
                .flat_map(|(o, e): (Vec<i64>, Vec<usize>)| {
                    r.iter().map(move |&(a, len)| {
                        let mut o2 = o.clone();
                        let mut e2 = e.clone();
                        o2.push(a);
                        e2.push(len);
                        (o2, e2)
                    })
                })
                .collect();
        }
        let mut boxes: Vec<Region> = out
            .into_iter()
            .map(|(o, e)| Region::rectangle(&o, &e))
            .filter(|b| b.is_subset(self))
            .collect();
        boxes.sort();
        boxes
    }
}

/// All shifts `g` with `delta + g ⊆ lambda`, in lexicographic order.
pub fn enumerate_translates(delta: &Region, lambda: &Region) -> Vec<Site> {
    let Some(anchor) = delta.sites.first() else { return Vec::new() };
    let mut out: Vec<Site> = lambda
        .sites
        .iter()
        .map(|s| s.iter().zip(anchor).map(|(a, b)| a - b).collect::<Site>())
        .filter(|g| delta.translate(g).is_subset(lambda))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Dimension of `(C^site_dim)^{⊗n}`, refusing anything above `cap`.
pub fn hilbert_dim(site_dim: usize, n_sites: usize, cap: usize) -> Result<usize> {
    let mut dim: usize = 1;
    for _ in 0..n_sites {
        dim = dim
            .checked_mul(site_dim)
            .filter(|&d| d <= cap)
            .ok_or(Error::CapExceeded { dim: site_dim.saturating_pow(n_sites as u32), cap })?;
    }
    if dim > cap {
        return Err(Error::CapExceeded { dim, cap });
    }
    Ok(dim)
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (k, x) in s.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.sites.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let sites = Vec::<Site>::deserialize(deserializer)?;
        Region::new(sites).map_err(serde::de::Error::custom)
    }
}

/// A region of the half lattice: every site has nonnegative first coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HalfLatticeRegion(Region);

impl HalfLatticeRegion {
    pub fn new(region: Region) -> Result<Self> {
        if let Some(bad) = region.sites.iter().find(|s| s[0] < 0) {
            return Err(Error::InvalidRegion(format!("site {bad:?} lies outside the half lattice")));
        }
        Ok(Self(region))
    }

    pub fn region(&self) -> &Region {
        &self.0
    }

    /// Sites on the physical boundary, i.e. with first coordinate zero.
    pub fn boundary(&self) -> Region {
        Region { sites: self.0.sites.iter().filter(|s| s[0] == 0).cloned().collect() }
    }
}

impl<'de> Deserialize<'de> for HalfLatticeRegion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let region = Region::deserialize(deserializer)?;
        HalfLatticeRegion::new(region).map_err(serde::de::Error::custom)
    }
}
