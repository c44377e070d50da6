//! Partition plans for iterative input masking.

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::FeatureSequence;

/// K disjoint, ordered, non-empty half-open frame ranges covering `[0, T)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPlan {
    frames: usize,
    ranges: Vec<Range<usize>>,
}

impl MaskPlan {
    /// `K` equal partitions with floor boundaries: range k is
    /// `[floor(kT/K), floor((k+1)T/K))`.
    pub fn equal(frames: usize, partitions: usize) -> Result<Self> {
        if partitions == 0 || partitions > frames {
            return Err(Error::usage(format!(
                "need 1 <= K <= T, got K={partitions}, T={frames}"
            )));
        }
        let bound = |k: usize| k * frames / partitions;
        let ranges = (0..partitions).map(|k| bound(k)..bound(k + 1)).collect();
        Ok(Self { frames, ranges })
    }

    /// Ranges between consecutive interior boundaries.
    pub fn segments(frames: usize, boundaries: &[usize]) -> Result<Self> {
        if frames == 0 {
            return Err(Error::usage("cannot plan masks over zero frames"));
        }
        let mut prev = 0;
        for &b in boundaries {
            if b <= prev || b >= frames {
                return Err(Error::usage(format!(
                    "boundaries must be strictly increasing within (0, {frames}), got {boundaries:?}"
                )));
            }
            prev = b;
        }
        let mut ranges = Vec::with_capacity(boundaries.len() + 1);
        let mut start = 0;
        for &b in boundaries.iter().chain(std::iter::once(&frames)) {
            ranges.push(start..b);
            start = b;
        }
        Ok(Self { frames, ranges })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// Index of the partition containing frame `t`.
    pub fn partition_of(&self, t: usize) -> Option<usize> {
        self.ranges.iter().position(|r| r.contains(&t))
    }
}

/// Copy of `x` with partition `k` of `plan` zeroed.
pub fn apply_mask(x: &FeatureSequence, plan: &MaskPlan, k: usize) -> Result<FeatureSequence> {
    if plan.frames() != x.frames() {
        return Err(Error::usage(format!(
            "plan covers {} frames, features have {}",
            plan.frames(),
            x.frames()
        )));
    }
    let range = plan
        .ranges()
        .get(k)
        .ok_or_else(|| Error::usage(format!("mask index {k} out of range for K={}", plan.len())))?;
    let mut out = x.clone();
    for t in range.clone() {
        out.frame_mut(t).fill(0.0);
    }
    Ok(out)
}

/// Parses a segment-boundary file: `utterance-id<TAB>b1,b2,...` per line.
pub fn parse_segments(text: &str) -> Result<HashMap<String, Vec<usize>>> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (utt, rest) = line.split_once('\t').unwrap_or((line, ""));
        let bounds = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("invalid frame index {s:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if out.insert(utt.to_string(), bounds).is_some() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("duplicate utterance {utt:?}"),
            });
        }
    }
    Ok(out)
}

pub fn load_segments(path: impl AsRef<Path>) -> Result<HashMap<String, Vec<usize>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_segments(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(p: &MaskPlan) -> Vec<(usize, usize)> {
        p.ranges().iter().map(|r| (r.start, r.end)).collect()
    }

    #[test]
    fn equal_plans() {
        assert_eq!(
            pairs(&MaskPlan::equal(10, 5).unwrap()),
            vec![(0, 2), (2, 4), (4, 6), (6, 8), (8, 10)]
        );
        assert_eq!(
            pairs(&MaskPlan::equal(7, 5).unwrap()),
            vec![(0, 1), (1, 2), (2, 4), (4, 5), (5, 7)]
        );
        assert_eq!(pairs(&MaskPlan::equal(5, 1).unwrap()), vec![(0, 5)]);
        assert!(MaskPlan::equal(3, 4).is_err());
        assert!(MaskPlan::equal(3, 0).is_err());
    }

    #[test]
    fn segment_plans() {
        assert_eq!(
            pairs(&MaskPlan::segments(10, &[3, 7]).unwrap()),
            vec![(0, 3), (3, 7), (7, 10)]
        );
        assert_eq!(pairs(&MaskPlan::segments(10, &[]).unwrap()), vec![(0, 10)]);
        assert!(MaskPlan::segments(4, &[4]).is_err());
        assert!(MaskPlan::segments(10, &[0]).is_err());
        assert!(MaskPlan::segments(10, &[5, 3]).is_err());
        assert!(MaskPlan::segments(10, &[3, 3]).is_err());
    }

    #[test]
    fn apply_mask_zeroes_one_partition() {
        let x = FeatureSequence::new(4, 2, vec![1.0; 8]).unwrap();
        let plan = MaskPlan::equal(4, 2).unwrap();
        let m = apply_mask(&x, &plan, 0).unwrap();
        assert_eq!(m.as_slice(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(apply_mask(&m, &plan, 0).unwrap(), m);
        assert!(apply_mask(&x, &plan, 2).is_err());
        assert!(apply_mask(&x, &MaskPlan::equal(5, 2).unwrap(), 0).is_err());
    }

    #[test]
    fn zeroed_frames_sum_to_t() {
        let x = FeatureSequence::new(13, 1, vec![1.0; 13]).unwrap();
        let plan = MaskPlan::equal(13, 4).unwrap();
        let zeroed: usize = (0..plan.len())
            .map(|k| {
                let m = apply_mask(&x, &plan, k).unwrap();
                (0..13).filter(|&t| m.frame(t)[0] == 0.0).count()
            })
            .sum();
        assert_eq!(zeroed, 13);
    }

    #[test]
    fn segments_file() {
        let map = parse_segments("u1\t3,7\nu2\t\n").unwrap();
        assert_eq!(map["u1"], vec![3, 7]);
        assert!(map["u2"].is_empty());
        assert!(parse_segments("u1\t3,x\n").is_err());
    }

    proptest! {
        #[test]
        fn equal_plan_covers_exactly((t, k) in (1usize..=1000).prop_flat_map(|t| (Just(t), 1..=t))) {
            let plan = MaskPlan::equal(t, k).unwrap();
            prop_assert_eq!(plan.len(), k);
            let mut next = 0;
            for r in plan.ranges() {
                prop_assert_eq!(r.start, next);
                prop_assert!(r.end > r.start);
                next = r.end;
            }
            prop_assert_eq!(next, t);
        }

        #[test]
        fn k_equal_t_masks_single_frames(t in 1usize..200) {
            let plan = MaskPlan::equal(t, t).unwrap();
            prop_assert!(plan.ranges().iter().all(|r| r.len() == 1));
        }

        #[test]
        fn apply_mask_preserves_shape(t in 1usize..30, d in 1usize..5, k in 1usize..30) {
            let k = k.min(t);
            let x = FeatureSequence::new(t, d, vec![2.0; t * d]).unwrap();
            let plan = MaskPlan::equal(t, k).unwrap();
            for i in 0..k {
                let m = apply_mask(&x, &plan, i).unwrap();
                prop_assert_eq!((m.frames(), m.dim()), (t, d));
            }
        }
    }
}
