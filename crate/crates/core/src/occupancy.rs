//! Stage-`j0` levels inside the stage-`J` tower.
//!
//! Every copy of the stage-`j0` tower is a run of `h_{j0}` consecutive
//! positions, so a label `b` sits at `start + b` for each copy start. Copy
//! starts are the sums `O^{(j0)}_{i_0} + ... + O^{(J-1)}_{i_{J-1}}` where
//! `O^{(t)}_i` is the offset of column `i` inside the stage `t+1` tower. The
//! occupancy keeps those per-stage offsets instead of the (possibly huge)
//! expanded list, and counts coincidences stage by stage.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};

use crate::construction::{heights, ConstructionParams};
use crate::error::ConstructionError;

/// Windows below this size use `i128` coordinates.
const SMALL_WINDOW_BITS: u64 = 100;

#[derive(Debug, Clone)]
pub struct LevelOccupancy {
    base_stage: usize,
    top_stage: usize,
    base_height: BigUint,
    window: BigUint,
    /// `h_t` for `t = j0..J`.
    stage_heights: Vec<BigUint>,
    /// Column offsets of stage `t` inside stage `t + 1`, `t = j0..J`.
    offsets: Vec<Vec<BigUint>>,
    copies: u128,
    coords: Coords,
}

#[derive(Debug, Clone)]
enum Coords {
    Small { offsets: Vec<Vec<i128>>, heights: Vec<i128> },
    Big { offsets: Vec<Vec<BigInt>>, heights: Vec<BigInt> },
}

/// Labels the stage-`top` tower by stage-`base` levels.
pub fn expand_occupancy(
    params: &ConstructionParams,
    base: usize,
    top: usize,
) -> Result<LevelOccupancy, ConstructionError> {
    let hs = heights(params)?;
    let max = hs.len();
    if base < 1 || base > top || top > max {
        return Err(ConstructionError::StageRange { base, top, max });
    }
    let mut offsets = Vec::with_capacity(top - base);
    let mut copies: u128 = 1;
    for t in base..top {
        let stage = params.stage(t);
        let mut o = Vec::with_capacity(stage.r);
        let mut acc = BigUint::zero();
        for s in &stage.spacers {
            o.push(acc.clone());
            acc += &hs[t - 1] + s;
        }
        copies = copies
            .checked_mul(stage.r as u128)
            .ok_or(ConstructionError::TooManyCopies(u128::MAX))?;
        offsets.push(o);
    }
    let stage_heights: Vec<BigUint> = hs[base - 1..top - 1].to_vec();
    let window = hs[top - 1].clone();
    let coords = if window.bits() < SMALL_WINDOW_BITS {
        let conv = |x: &BigUint| x.to_i128().expect("small window");
        Coords::Small {
            offsets: offsets.iter().map(|o| o.iter().map(conv).collect()).collect(),
            heights: stage_heights.iter().map(conv).collect(),
        }
    } else {
        let conv = |x: &BigUint| BigInt::from(x.clone());
        Coords::Big {
            offsets: offsets.iter().map(|o| o.iter().map(conv).collect()).collect(),
            heights: stage_heights.iter().map(conv).collect(),
        }
    };
    Ok(LevelOccupancy {
        base_stage: base,
        top_stage: top,
        base_height: hs[base - 1].clone(),
        window,
        stage_heights,
        offsets,
        copies,
        coords,
    })
}

impl LevelOccupancy {
    pub fn base_stage(&self) -> usize {
        self.base_stage
    }

    pub fn top_stage(&self) -> usize {
        self.top_stage
    }

    /// `h_{j0}`: number of labels.
    pub fn base_height(&self) -> &BigUint {
        &self.base_height
    }

    /// `h_J`.
    pub fn window(&self) -> &BigUint {
        &self.window
    }

    /// Copies of the base tower, `prod r_t`; also the position count per label.
    pub fn copies(&self) -> u128 {
        self.copies
    }

    pub fn has_label(&self, b: u64) -> bool {
        BigUint::from(b) < self.base_height
    }

    /// Sorted copy starts. Fails when there are more than `limit`.
    pub fn copy_starts(&self, limit: u128) -> Result<Vec<BigUint>, ConstructionError> {
        if self.copies > limit {
            return Err(ConstructionError::TooManyCopies(limit));
        }
        let mut starts = vec![BigUint::zero()];
        // outermost stage varies slowest, so building top-down keeps order
        for o in self.offsets.iter().rev() {
            starts = starts
                .iter()
                .flat_map(|s| o.iter().map(move |x| s + x))
                .collect();
        }
        Ok(starts)
    }

    /// Strictly increasing positions of label `b`.
    pub fn positions(&self, b: u64, limit: u128) -> Result<Vec<BigUint>, ConstructionError> {
        Ok(self.copy_starts(limit)?.into_iter().map(|s| s + b).collect())
    }

    /// Base label at position `p`, `None` for spacers and positions past the
    /// window.
    pub fn label_at(&self, p: &BigUint) -> Option<BigUint> {
        if *p >= self.window {
            return None;
        }
        let mut rest = p.clone();
        for (o, h) in self.offsets.iter().zip(&self.stage_heights).rev() {
            let idx = o.partition_point(|x| *x <= rest) - 1;
            rest -= &o[idx];
            if rest >= *h {
                return None;
            }
        }
        Some(rest)
    }

    /// `#{(c, c') : c' - c = d}` over copy starts.
    pub fn autocorr(&self, d: &BigInt) -> u128 {
        if d.magnitude() >= &self.window {
            return 0;
        }
        match &self.coords {
            Coords::Small { offsets, heights } => {
                let d = d.to_i128().expect("inside window");
                autocorr_rec(offsets, heights, &d)
            }
            Coords::Big { offsets, heights } => autocorr_rec(offsets, heights, d),
        }
    }

    /// `autocorr(d)` by a plain two-pointer pass over the expanded copy
    /// starts. Only sensible for small copy counts.
    pub fn autocorr_flat(&self, d: &BigInt, limit: u128) -> Result<u128, ConstructionError> {
        let starts: Vec<BigInt> =
            self.copy_starts(limit)?.into_iter().map(BigInt::from).collect();
        let mut count = 0u128;
        let mut k = 0;
        for s in &starts {
            let target = s + d;
            while k < starts.len() && starts[k] < target {
                k += 1;
            }
            if k < starts.len() && starts[k] == target {
                count += 1;
            }
        }
        Ok(count)
    }
}

trait Coord: Clone + Ord {
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn is_origin(&self) -> bool;
}

impl Coord for i128 {
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn is_origin(&self) -> bool {
        *self == 0
    }
}

impl Coord for BigInt {
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn is_origin(&self) -> bool {
        self.sign() == Sign::NoSign
    }
}

/// Copy starts of the levels below `t` lie in `[0, h_t)`, so a difference
/// `d` splits into a column-offset difference `delta` at level `t` with
/// `|d - delta| < h_t` and a residual handled one level down. Offsets differ
/// by at least `h_t`, so each column meets at most two partners.
fn autocorr_rec<C: Coord>(offsets: &[Vec<C>], heights: &[C], d: &C) -> u128 {
    let Some((top, lower)) = offsets.split_last() else {
        return d.is_origin() as u128;
    };
    let h = &heights[offsets.len() - 1];
    let mut residuals: BTreeMap<C, u128> = BTreeMap::new();
    let mut lo = 0;
    for o in top {
        let shifted = o.plus(d);
        let low = shifted.minus(h);
        let high = shifted.plus(h);
        while lo < top.len() && top[lo] <= low {
            lo += 1;
        }
        let mut k = lo;
        while k < top.len() && top[k] < high {
            *residuals.entry(shifted.minus(&top[k])).or_insert(0) += 1;
            k += 1;
        }
    }
    residuals
        .into_iter()
        .map(|(res, n)| {
            if n == 0 {
                0
            } else {
                n * autocorr_rec(lower, heights, &res)
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{gen_example, ExampleKind, StageParams};

    fn u(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn two_columns_one_spacer() {
        let p = ConstructionParams::new(1, vec![StageParams::from_u64(&[0, 1])]);
        let occ = expand_occupancy(&p, 1, 2).unwrap();
        assert_eq!(occ.window(), &BigUint::from(3u32));
        assert_eq!(occ.positions(0, 100).unwrap(), u(&[0, 1]));
        assert_eq!(occ.label_at(&BigUint::from(2u32)), None);
    }

    #[test]
    fn three_columns() {
        let p = ConstructionParams::new(1, vec![StageParams::from_u64(&[1, 1, 1])]);
        let occ = expand_occupancy(&p, 1, 2).unwrap();
        assert_eq!(occ.window(), &BigUint::from(6u32));
        assert_eq!(occ.positions(0, 100).unwrap(), u(&[0, 2, 4]));
    }

    #[test]
    fn identity_expansion() {
        let p = gen_example(ExampleKind::TwoColumn, 4, 1, None).unwrap();
        let occ = expand_occupancy(&p, 3, 3).unwrap();
        assert_eq!(occ.window(), &BigUint::from(12u32));
        assert_eq!(occ.copies(), 1);
        for b in 0..12 {
            assert_eq!(occ.positions(b, 10).unwrap(), u(&[b]));
        }
        assert_eq!(occ.autocorr(&BigInt::from(0)), 1);
        assert_eq!(occ.autocorr(&BigInt::from(1)), 0);
    }

    #[test]
    fn stage_range_errors() {
        let p = gen_example(ExampleKind::TwoColumn, 3, 1, None).unwrap();
        assert!(expand_occupancy(&p, 0, 2).is_err());
        assert!(expand_occupancy(&p, 2, 1).is_err());
        assert!(expand_occupancy(&p, 1, 4).is_err());
    }

    #[test]
    fn occupancy_invariants() {
        let p = gen_example(ExampleKind::AllLimits, 4, 2, None).unwrap();
        let occ = expand_occupancy(&p, 1, 4).unwrap();
        assert_eq!(occ.copies(), 27);
        let h0: u64 = occ.base_height().try_into().unwrap();
        let mut all = Vec::new();
        for b in 0..h0 {
            let pos = occ.positions(b, 1000).unwrap();
            assert_eq!(pos.len(), 27);
            assert!(pos.windows(2).all(|w| w[0] < w[1]));
            assert!(pos.iter().all(|x| x < occ.window()));
            for x in &pos {
                assert_eq!(occ.label_at(x), Some(BigUint::from(b)));
            }
            all.extend(pos);
        }
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn transitivity() {
        let p = gen_example(ExampleKind::AllLimits, 5, 1, None).unwrap();
        let direct = expand_occupancy(&p, 2, 5).unwrap().copy_starts(10_000).unwrap();
        let low = expand_occupancy(&p, 2, 3).unwrap().copy_starts(10_000).unwrap();
        let high = expand_occupancy(&p, 3, 5).unwrap().copy_starts(10_000).unwrap();
        let mut composed: Vec<BigUint> =
            high.iter().flat_map(|h| low.iter().map(move |l| h + l)).collect();
        composed.sort();
        assert_eq!(composed, direct);
    }

    #[test]
    fn factorized_matches_flat() {
        let p = gen_example(ExampleKind::AllLimits, 5, 1, None).unwrap();
        let occ = expand_occupancy(&p, 2, 5).unwrap();
        let w: i64 = occ.window().try_into().unwrap();
        for d in (-w..w).step_by(7) {
            let d = BigInt::from(d);
            assert_eq!(occ.autocorr(&d), occ.autocorr_flat(&d, 10_000).unwrap(), "d = {d}");
        }
    }

    #[test]
    fn big_coordinates_match_small() {
        // Same combinatorics, one huge trailing spacer pushes the window past i128.
        let mut p = gen_example(ExampleKind::AllLimits, 4, 1, None).unwrap();
        let huge = BigUint::from(2u32).pow(130);
        let small = expand_occupancy(&p, 1, 4).unwrap();
        p.stages[2].spacers[2] += &huge;
        let big = expand_occupancy(&p, 1, 4).unwrap();
        assert!(matches!(big.coords, Coords::Big { .. }));
        for d in -40i64..40 {
            let d = BigInt::from(d);
            assert_eq!(small.autocorr(&d), big.autocorr(&d));
        }
    }
}
