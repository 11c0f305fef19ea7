use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary condition applied on every axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Open,
    Periodic,
}

fn default_one() -> f64 {
    1.0
}

fn default_max_sparsity() -> usize {
    LatticeSpec::DEFAULT_MAX_SPARSITY
}

/// Hypercubic lattice of `N = 2^n` single-orbital sites in one to three
/// dimensions.
///
/// Sites are numbered row-major: the last axis varies fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub extents: Vec<usize>,
    #[serde(default = "default_one")]
    pub lattice_constant: f64,
    pub boundary: Boundary,
    /// Hopping cutoff radius in length units.
    #[serde(default = "default_one")]
    pub cutoff: f64,
    #[serde(default = "default_max_sparsity")]
    pub max_sparsity: usize,
}

/// A lattice site with its integer coordinates and undisplaced position.
#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub index: usize,
    pub coords: Vec<usize>,
    pub position: Vec<f64>,
}

impl LatticeSpec {
    pub const DEFAULT_MAX_SPARSITY: usize = 64;

    pub fn new(extents: &[usize], boundary: Boundary) -> Self {
        LatticeSpec {
            extents: extents.to_vec(),
            lattice_constant: 1.0,
            boundary,
            cutoff: 1.0,
            max_sparsity: Self::DEFAULT_MAX_SPARSITY,
        }
    }

    pub fn chain(len: usize, boundary: Boundary) -> Self {
        Self::new(&[len], boundary)
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.extents.len();
        if !(1..=3).contains(&d) {
            return Err(Error::Config(format!(
                "lattice dimension must be 1, 2 or 3, got {d}"
            )));
        }
        for (axis, &l) in self.extents.iter().enumerate() {
            if l == 0 || !l.is_power_of_two() {
                return Err(Error::Config(format!(
                    "extent {l} on axis {axis} is not a power of two; the site count must be 2^n"
                )));
            }
        }
        if self.num_sites() > 1usize << 30 {
            return Err(Error::Config("more than 2^30 sites".into()));
        }
        if !(self.lattice_constant > 0.0 && self.lattice_constant.is_finite()) {
            return Err(Error::Config("lattice constant must be positive".into()));
        }
        if !(self.cutoff >= 0.0 && self.cutoff.is_finite()) {
            return Err(Error::Config("cutoff radius must be non-negative".into()));
        }
        let s = self.offsets().len();
        if s > self.max_sparsity {
            return Err(Error::Config(format!(
                "cutoff {} admits {s} sites per row, above the cap {}",
                self.cutoff, self.max_sparsity
            )));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn num_sites(&self) -> usize {
        self.extents.iter().product()
    }

    /// Number of qubits `n` indexing the sites.
    pub fn site_qubits(&self) -> u32 {
        self.num_sites().trailing_zeros()
    }

    /// Unit-cell volume, the product of lattice constants.
    pub fn cell_volume(&self) -> f64 {
        self.lattice_constant.powi(self.dimension() as i32)
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut rest = index;
        let mut c = vec![0; self.dimension()];
        for axis in (0..self.dimension()).rev() {
            c[axis] = rest % self.extents[axis];
            rest /= self.extents[axis];
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.extents)
            .fold(0, |acc, (&c, &l)| acc * l + c)
    }

    pub fn position(&self, index: usize) -> Vec<f64> {
        self.coords(index)
            .into_iter()
            .map(|c| c as f64 * self.lattice_constant)
            .collect()
    }

    pub fn enumerate_sites(&self) -> Result<Vec<Site>> {
        self.validate()?;
        Ok((0..self.num_sites())
            .map(|index| Site {
                index,
                coords: self.coords(index),
                position: self.position(index),
            })
            .collect())
    }

    /// Integer displacement vectors within the cutoff, self first, then by
    /// length and lexicographically. These are the sparse-access slots.
    pub fn offsets(&self) -> Vec<Vec<i64>> {
        let d = self.dimension();
        let reach = (self.cutoff / self.lattice_constant + 1e-9).floor() as i64;
        let limit = (self.cutoff / self.lattice_constant).powi(2) + 1e-9;
        let mut out = Vec::new();
        let mut current = vec![-reach; d];
        loop {
            let r2: i64 = current.iter().map(|x| x * x).sum();
            if (r2 as f64) <= limit {
                out.push(current.clone());
            }
            let mut axis = d;
            loop {
                if axis == 0 {
                    out.sort_by(|a, b| {
                        let ra: i64 = a.iter().map(|x| x * x).sum();
                        let rb: i64 = b.iter().map(|x| x * x).sum();
                        ra.cmp(&rb).then_with(|| a.cmp(b))
                    });
                    return out;
                }
                axis -= 1;
                if current[axis] < reach {
                    current[axis] += 1;
                    break;
                }
                current[axis] = -reach;
            }
        }
    }

    /// Row sparsity `s`: number of slots, self included.
    pub fn sparsity(&self) -> usize {
        self.offsets().len()
    }

    /// Slot index of the opposite displacement.
    pub fn reverse_slot(offsets: &[Vec<i64>], slot: usize) -> usize {
        let target: Vec<i64> = offsets[slot].iter().map(|x| -x).collect();
        offsets
            .iter()
            .position(|o| *o == target)
            .expect("offset set is symmetric")
    }

    /// Site reached from `site` by `offset`, or `None` if it leaves an open
    /// lattice.
    pub fn neighbor(&self, site: usize, offset: &[i64]) -> Option<usize> {
        let c = self.coords(site);
        let mut out = Vec::with_capacity(c.len());
        for ((&ci, &di), &l) in c.iter().zip(offset).zip(&self.extents) {
            let raw = ci as i64 + di;
            let l = l as i64;
            match self.boundary {
                Boundary::Periodic => out.push(raw.rem_euclid(l) as usize),
                Boundary::Open => {
                    if raw < 0 || raw >= l {
                        return None;
                    }
                    out.push(raw as usize);
                }
            }
        }
        Some(self.index(&out))
    }

    /// Site reached from `site` by `offset` with wrap-around on every axis.
    /// For fixed offset this is a permutation of the sites.
    pub fn wrapped_neighbor(&self, site: usize, offset: &[i64]) -> usize {
        let c = self.coords(site);
        let wrapped: Vec<usize> = c
            .iter()
            .zip(offset)
            .zip(&self.extents)
            .map(|((&ci, &di), &l)| (ci as i64 + di).rem_euclid(l as i64) as usize)
            .collect();
        self.index(&wrapped)
    }
}
