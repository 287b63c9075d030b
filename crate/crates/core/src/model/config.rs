use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unlabeled occupation numbers `eta_x`, indexed by site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupationConfig(pub Vec<u32>);

impl OccupationConfig {
    pub fn new(counts: Vec<u32>) -> Self {
        OccupationConfig(counts)
    }

    pub fn zeros(sites: usize) -> Self {
        OccupationConfig(vec![0; sites])
    }

    /// Configuration with one particle at each listed site (`sum_i delta_{x_i}`).
    pub fn from_points(sites: usize, points: &[usize]) -> Result<Self> {
        let mut c = vec![0u32; sites];
        for &x in points {
            if x >= sites {
                return Err(Error::InvalidConfig(format!(
                    "site {x} out of range 0..{sites}"
                )));
            }
            c[x] += 1;
        }
        Ok(OccupationConfig(c))
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, x: usize) -> u32 {
        self.0[x]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn check_cap(&self, cap: Option<u32>) -> Result<()> {
        if let Some(n) = cap {
            if let Some((x, c)) = self.0.iter().enumerate().find(|(_, &c)| c > n) {
                return Err(Error::InvalidConfig(format!(
                    "occupancy {c} at site {x} exceeds cap {n}"
                )));
            }
        }
        Ok(())
    }

    /// Site list with multiplicity, in increasing site order.
    pub fn to_points(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(x, &c)| std::iter::repeat_n(x, c as usize))
            .collect()
    }
}

/// Ordered particle positions `(x_1, ..., x_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabeledConfig(pub Vec<usize>);

impl LabeledConfig {
    pub fn new(positions: Vec<usize>) -> Self {
        LabeledConfig(positions)
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of labeled particles sitting at `y`.
    pub fn count_at(&self, y: usize) -> usize {
        self.0.iter().filter(|&&x| x == y).count()
    }

    pub fn project(&self, sites: usize) -> Result<OccupationConfig> {
        OccupationConfig::from_points(sites, &self.0)
    }

    pub fn check_sites(&self, sites: usize) -> Result<()> {
        match self.0.iter().find(|&&x| x >= sites) {
            Some(x) => Err(Error::InvalidConfig(format!(
                "particle at {x} outside 0..{sites}"
            ))),
            None => Ok(()),
        }
    }

    /// `x^{x_i, y}`: particle `i` relocated to `y`.
    pub fn moved(&self, i: usize, y: usize) -> LabeledConfig {
        let mut p = self.0.clone();
        p[i] = y;
        LabeledConfig(p)
    }
}

/// Every configuration on `sites` sites with each occupancy in `0..=max`.
pub fn configs_with_max(sites: usize, max: u32) -> Vec<OccupationConfig> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; sites];
    loop {
        out.push(OccupationConfig(cur.clone()));
        let mut i = 0;
        loop {
            if i == sites {
                return out;
            }
            if cur[i] < max {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

/// Every configuration with exactly `total` particles, respecting an optional cap.
pub fn configs_with_total(sites: usize, total: u32, cap: Option<u32>) -> Vec<OccupationConfig> {
    fn rec(
        site: usize,
        left: u32,
        cap: Option<u32>,
        cur: &mut Vec<u32>,
        out: &mut Vec<OccupationConfig>,
    ) {
        let sites = cur.len();
        if site + 1 == sites {
            if cap.is_none_or(|c| left <= c) {
                cur[site] = left;
                out.push(OccupationConfig(cur.clone()));
            }
            return;
        }
        let hi = cap.map_or(left, |c| c.min(left));
        for k in (0..=hi).rev() {
            cur[site] = k;
            rec(site + 1, left - k, cap, cur, out);
        }
        cur[site] = 0;
    }
    let mut out = Vec::new();
    if sites == 0 {
        if total == 0 {
            out.push(OccupationConfig(Vec::new()));
        }
        return out;
    }
    rec(0, total, cap, &mut vec![0; sites], &mut out);
    out
}

/// Every configuration with at most `max_total` particles.
pub fn configs_with_total_at_most(
    sites: usize,
    max_total: u32,
    cap: Option<u32>,
) -> Vec<OccupationConfig> {
    (0..=max_total)
        .flat_map(|t| configs_with_total(sites, t, cap))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerations_have_expected_sizes() {
        assert_eq!(configs_with_max(3, 4).len(), 125);
        assert_eq!(configs_with_total(3, 2, None).len(), 6);
        assert_eq!(configs_with_total(4, 4, Some(1)).len(), 1);
        assert_eq!(configs_with_total(4, 2, Some(1)).len(), 6);
        // |xi| <= 3 on 4 sites: C(7,3)
        assert_eq!(configs_with_total_at_most(4, 3, None).len(), 35);
        assert!(configs_with_total(2, 3, Some(1)).is_empty());
    }

    #[test]
    fn projection_counts_labels() {
        let l = LabeledConfig::new(vec![2, 0, 2]);
        assert_eq!(l.project(3).unwrap(), OccupationConfig::new(vec![1, 0, 2]));
        assert_eq!(l.count_at(2), 2);
        assert!(l.project(2).is_err());
    }

    #[test]
    fn points_round_trip() {
        let eta = OccupationConfig::new(vec![0, 3, 1]);
        let pts = eta.to_points();
        assert_eq!(pts, vec![1, 1, 1, 2]);
        assert_eq!(OccupationConfig::from_points(3, &pts).unwrap(), eta);
        assert!(eta.check_cap(Some(2)).is_err());
        assert!(eta.check_cap(Some(3)).is_ok());
    }
}
