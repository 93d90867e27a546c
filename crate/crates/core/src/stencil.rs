//! k-neighborhoods: relative offsets each process communicates with.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three stencils used throughout the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// `±1_i` for every dimension.
    NearestNeighbor,
    /// `±1_i` for every dimension but the last.
    Component,
    /// Nearest neighbor plus `±2·1_0` and `±3·1_0`.
    NearestNeighborHops,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [
        Builtin::NearestNeighbor,
        Builtin::Component,
        Builtin::NearestNeighborHops,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::NearestNeighbor => "nn",
            Builtin::Component => "component",
            Builtin::NearestNeighborHops => "nn-hops",
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" | "nearest-neighbor" => Ok(Builtin::NearestNeighbor),
            "component" => Ok(Builtin::Component),
            "nn-hops" => Ok(Builtin::NearestNeighborHops),
            other => Err(Error::UnknownStencil(other.to_string())),
        }
    }
}

/// A validated list of non-zero, pairwise distinct offsets of equal length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Stencil {
    ndims: usize,
    offsets: Vec<Vec<i64>>,
}

impl Stencil {
    pub fn new(ndims: usize, offsets: Vec<Vec<i64>>) -> Result<Self> {
        if ndims == 0 {
            return Err(Error::EmptyStencil("zero dimensions".into()));
        }
        if offsets.is_empty() {
            return Err(Error::EmptyStencil("no offsets".into()));
        }
        let mut seen: HashMap<&[i64], usize> = HashMap::with_capacity(offsets.len());
        for (index, off) in offsets.iter().enumerate() {
            if off.len() != ndims {
                return Err(Error::OffsetLength {
                    index,
                    got: off.len(),
                    expected: ndims,
                });
            }
            if off.iter().all(|&c| c == 0) {
                return Err(Error::ZeroOffset { index });
            }
            if let Some(&first) = seen.get(off.as_slice()) {
                return Err(Error::DuplicateOffset { index, first });
            }
            seen.insert(off, index);
        }
        Ok(Self { ndims, offsets })
    }

    pub fn builtin(kind: Builtin, ndims: usize) -> Result<Self> {
        let axis = |i: usize, a: i64| {
            let mut v = vec![0; ndims];
            v[i] = a;
            v
        };
        let crossing = match kind {
            Builtin::Component => ndims.saturating_sub(1),
            _ => ndims,
        };
        let mut offsets = Vec::new();
        for i in 0..crossing {
            offsets.push(axis(i, 1));
            offsets.push(axis(i, -1));
        }
        if kind == Builtin::NearestNeighborHops && ndims > 0 {
            for a in [2, 3] {
                offsets.push(axis(0, a));
                offsets.push(axis(0, -a));
            }
        }
        if offsets.is_empty() {
            return Err(Error::EmptyStencil(format!(
                "{kind} stencil has no offsets in {ndims} dimension(s)"
            )));
        }
        Self::new(ndims, offsets)
    }

    /// Builds a stencil from `k` offsets laid out back to back.
    pub fn parse_flat(ndims: usize, k: usize, flat: &[i64]) -> Result<Self> {
        if flat.len() != k * ndims {
            return Err(Error::FlatLength {
                got: flat.len(),
                expected: k * ndims,
            });
        }
        if ndims == 0 {
            return Err(Error::EmptyStencil("zero dimensions".into()));
        }
        Self::new(ndims, flat.chunks(ndims).map(<[i64]>::to_vec).collect())
    }

    pub fn flatten(&self) -> Vec<i64> {
        self.offsets.iter().flatten().copied().collect()
    }

    pub fn ndims(&self) -> usize {
        self.ndims
    }

    /// Number of neighbors `k`.
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }

    /// Per dimension, the summed squared direction cosines of all offsets.
    ///
    /// Small values mean the dimension is nearly orthogonal to the stencil.
    pub fn cosine_preference(&self) -> Vec<f64> {
        let mut pref = vec![0.0; self.ndims];
        for off in &self.offsets {
            let norm2: i64 = off.iter().map(|c| c * c).sum();
            for (p, &c) in pref.iter_mut().zip(off) {
                *p += (c * c) as f64 / norm2 as f64;
            }
        }
        pref
    }

    /// Per dimension, how many offsets cross it (non-zero component).
    pub fn comm_weights(&self) -> Vec<usize> {
        (0..self.ndims)
            .map(|j| self.offsets.iter().filter(|o| o[j] != 0).count())
            .collect()
    }

    /// Per dimension, `max - min` of the offset components.
    pub fn extensions(&self) -> Vec<u64> {
        (0..self.ndims)
            .map(|j| {
                let (lo, hi) = self
                    .offsets
                    .iter()
                    .fold((i64::MAX, i64::MIN), |(lo, hi), o| {
                        (lo.min(o[j]), hi.max(o[j]))
                    });
                hi.abs_diff(lo)
            })
            .collect()
    }

    pub fn stats(&self) -> DimStats {
        DimStats {
            cosine_pref: self.cosine_preference(),
            comm_weight: self.comm_weights(),
            extension: self.extensions(),
        }
    }
}

/// Per-dimension statistics derived from a stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct DimStats {
    pub cosine_pref: Vec<f64>,
    pub comm_weight: Vec<usize>,
    pub extension: Vec<u64>,
}

/// On-disk stencil format: `{"ndims": 2, "offsets": [[1, 0], [-1, 0]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StencilFile {
    pub ndims: usize,
    pub offsets: Vec<Vec<i64>>,
}

impl TryFrom<StencilFile> for Stencil {
    type Error = Error;

    fn try_from(f: StencilFile) -> Result<Self> {
        Stencil::new(f.ndims, f.offsets)
    }
}

impl From<&Stencil> for StencilFile {
    fn from(s: &Stencil) -> Self {
        StencilFile {
            ndims: s.ndims,
            offsets: s.offsets.clone(),
        }
    }
}
