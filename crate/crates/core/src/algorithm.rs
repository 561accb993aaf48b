use std::fmt;
use std::str::FromStr;

/// The four LSH-based MIPS schemes that can serve as the per-partition
/// subroutine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetaAlgorithm {
    /// Asymmetric transform to Euclidean search, hashed with `floor((a·x+b)/r)`.
    L2Alsh,
    /// Asymmetric transform to angular search, hashed with sign random projection.
    SignAlsh,
    /// Symmetric transform to the unit sphere, hashed with sign random projection.
    SimpleLsh,
    /// Symmetric transform to the unit sphere, hashed with cross-polytope LSH.
    CrossLsh,
}

impl MetaAlgorithm {
    pub const ALL: [MetaAlgorithm; 4] = [
        MetaAlgorithm::L2Alsh,
        MetaAlgorithm::SignAlsh,
        MetaAlgorithm::SimpleLsh,
        MetaAlgorithm::CrossLsh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetaAlgorithm::L2Alsh => "l2-alsh",
            MetaAlgorithm::SignAlsh => "sign-alsh",
            MetaAlgorithm::SimpleLsh => "simple-lsh",
            MetaAlgorithm::CrossLsh => "cross-lsh",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            MetaAlgorithm::L2Alsh => 0,
            MetaAlgorithm::SignAlsh => 1,
            MetaAlgorithm::SimpleLsh => 2,
            MetaAlgorithm::CrossLsh => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    /// Whether buckets are ranked by match count (as opposed to the
    /// query-dependent cross-polytope residual).
    pub fn uses_match_count(self) -> bool {
        !matches!(self, MetaAlgorithm::CrossLsh)
    }

    /// Dimension after transformation of a `d`-dimensional vector.
    pub fn transformed_dim(self, d: usize, m: u32) -> usize {
        match self {
            MetaAlgorithm::L2Alsh | MetaAlgorithm::SignAlsh => d + m as usize,
            MetaAlgorithm::SimpleLsh | MetaAlgorithm::CrossLsh => d + 1,
        }
    }
}

impl fmt::Display for MetaAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetaAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|a| a.name() == key || a.name().replace('-', "") == key)
            .ok_or_else(|| {
                format!("unknown algorithm {s:?} (expected l2-alsh, sign-alsh, simple-lsh or cross-lsh)")
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in MetaAlgorithm::ALL {
            assert_eq!(a.name().parse::<MetaAlgorithm>().unwrap(), a);
            assert_eq!(MetaAlgorithm::from_tag(a.tag()), Some(a));
        }
        assert_eq!("SimpleLSH".parse::<MetaAlgorithm>().unwrap(), MetaAlgorithm::SimpleLsh);
        assert!("foo".parse::<MetaAlgorithm>().is_err());
    }
}
