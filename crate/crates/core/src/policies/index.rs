use super::{ArmStats, ImedVariant, PolicyConfig};
use crate::{Error, Result};

/// Fills `gap` and `index` for every arm and returns the anchor position.
///
/// The anchor is the arm with the largest mean (variants 1, 2) or largest UCB
/// (variant 3), lowest id first. Gaps are measured against the same quantity.
/// Anchor index:
///
/// - 1: `−ln w²`
/// - 2: `min(ln T, −ln w²)`
/// - 3: `min(ln(C / max Δ̂²), −ln w²)`, or `−ln w²` when every gap is zero
///
/// Other arms get `Δ̂²/w² − ln w²`. An arm with `w² = 0` gets `+∞`.
pub fn linimed_indices(
    variant: ImedVariant,
    stats: &mut [ArmStats],
    cfg: &PolicyConfig,
) -> Result<usize> {
    if stats.is_empty() {
        return Err(Error::Usage("cannot index an empty arm set".into()));
    }
    let key = |s: &ArmStats| match variant {
        ImedVariant::One | ImedVariant::Two => s.mean,
        ImedVariant::Three => s.ucb,
    };
    let mut anchor = 0;
    for (i, s) in stats.iter().enumerate() {
        let best = &stats[anchor];
        if key(s) > key(best) || (key(s) == key(best) && s.arm_id < best.arm_id) {
            anchor = i;
        }
    }
    let top = key(&stats[anchor]);
    let mut max_gap_sq: f64 = 0.0;
    for s in stats.iter_mut() {
        s.gap = (top - key(s)).max(0.0);
        max_gap_sq = max_gap_sq.max(s.gap * s.gap);
    }
    stats[anchor].gap = 0.0;

    for (i, s) in stats.iter_mut().enumerate() {
        if s.width_sq <= 0.0 {
            s.index = f64::INFINITY;
            continue;
        }
        let explore = -s.width_sq.ln();
        s.index = if i == anchor {
            match variant {
                ImedVariant::One => explore,
                ImedVariant::Two => (cfg.horizon as f64).ln().min(explore),
                ImedVariant::Three if max_gap_sq > 0.0 => {
                    (cfg.constant_c / max_gap_sq).ln().min(explore)
                }
                ImedVariant::Three => explore,
            }
        } else {
            s.gap * s.gap / s.width_sq + explore
        };
    }
    Ok(anchor)
}

/// Position of the smallest index; equal indices go to the lowest arm id.
pub fn argmin_index(stats: &[ArmStats]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in stats.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &stats[b];
                if s.index < cur.index || (s.index == cur.index && s.arm_id < cur.arm_id) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}
