//! Naive reference: the full label array of a tower, built by literal
//! stacking. Only usable for small windows.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::construction::{heights, ConstructionParams};
use crate::error::ConstructionError;

/// Stage-`top` tower with every level tagged by its base-stage label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelArray {
    pub labels: Vec<Option<u32>>,
}

impl LabelArray {
    /// Fails with `TooManyCopies` when the tower is longer than `limit`.
    pub fn build(
        params: &ConstructionParams,
        base: usize,
        top: usize,
        limit: usize,
    ) -> Result<Self, ConstructionError> {
        let hs = heights(params)?;
        if base < 1 || base > top || top > hs.len() {
            return Err(ConstructionError::StageRange { base, top, max: hs.len() });
        }
        let too_long = |n: u128| ConstructionError::TooManyCopies(n);
        let len = hs[top - 1].to_usize().filter(|&n| n <= limit);
        len.ok_or_else(|| too_long(hs[top - 1].to_u128().unwrap_or(u128::MAX)))?;
        let base_h = hs[base - 1].to_u32().ok_or_else(|| too_long(u128::MAX))?;
        let mut tower: Vec<Option<u32>> = (0..base_h).map(Some).collect();
        for j in base..top {
            let mut next = Vec::new();
            for s in &params.stage(j).spacers {
                next.extend_from_slice(&tower);
                next.resize(next.len() + s.to_usize().unwrap_or(usize::MAX), None);
            }
            tower = next;
        }
        Ok(LabelArray { labels: tower })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positions(&self, b: u32) -> Vec<usize> {
        (0..self.len()).filter(|&p| self.labels[p] == Some(b)).collect()
    }

    /// Positions `p` with `label(p - m)` in `a` and `label(p)` in `b`.
    pub fn corr_count(&self, m: &BigInt, a: &[u64], b: &[u64]) -> u128 {
        let Some(m) = m.to_i64() else { return 0 };
        let n = self.len() as i64;
        let within = |x: Option<u32>, set: &[u64]| x.is_some_and(|v| set.contains(&(v as u64)));
        (0..n)
            .filter(|&p| {
                let q = p - m;
                (0..n).contains(&q)
                    && within(self.labels[q as usize], a)
                    && within(self.labels[p as usize], b)
            })
            .count() as u128
    }

    /// Levels of `a` whose shift by `m` leaves the labeled part.
    pub fn lost(&self, m: &BigInt, a: &[u64]) -> u128 {
        let m = m.to_i64().unwrap_or(i64::MAX);
        let n = self.len() as i64;
        (0..n)
            .filter(|&q| self.labels[q as usize].is_some_and(|v| a.contains(&(v as u64))))
            .filter(|&q| {
                let p = q.checked_add(m).unwrap_or(-1);
                !(0..n).contains(&p) || self.labels[p as usize].is_none()
            })
            .count() as u128
    }
}
