//! Voluminal IoU between trajectories.
//!
//! Two trajectories overlap in space-time. On frames both cover, the pairwise
//! box intersection and union contribute; on frames only one covers, that
//! trajectory's full box area counts toward the union. Everything is summed
//! over frames before the final division, so a trajectory pair with no common
//! frames scores exactly zero.

use crate::data_model::Trajectory;

/// Voluminal IoU of two trajectories.
///
/// Returns a value in `[0, 1]`; `0` when the frame ranges are disjoint, `1`
/// only for identical extents and identical per-frame boxes.
pub fn viou(a: &Trajectory, b: &Trajectory) -> f64 {
    let begin = a.begin_fid().max(b.begin_fid());
    let end = a.end_fid().min(b.end_fid());

    let mut intersection = 0.0;
    let mut union = 0.0;

    for fid in begin..end {
        // Both trajectories cover `fid` by construction of `begin..end`.
        let ba = a.box_at(fid).expect("frame inside a's interval");
        let bb = b.box_at(fid).expect("frame inside b's interval");
        let inter = ba.intersection_area(bb);
        intersection += inter;
        union += ba.area() + bb.area() - inter;
    }
    // Frames covered by exactly one trajectory only enlarge the union.
    for (traj, other) in [(a, b), (b, a)] {
        for fid in traj.begin_fid()..traj.end_fid() {
            if fid < other.begin_fid() || fid >= other.end_fid() {
                union += traj.box_at(fid).expect("frame inside interval").area();
            }
        }
    }

    if union > 0.0 {
        intersection / union
    } else {
        0.0
    }
}

/// Overlap between a predicted pair of trajectories and a ground-truth pair:
/// the minimum of the subject-side and object-side vIoU, so both roles must
/// localize well for the pair to count.
pub fn pair_overlap(
    pred_subject: &Trajectory,
    pred_object: &Trajectory,
    gt_subject: &Trajectory,
    gt_object: &Trajectory,
) -> f64 {
    viou(pred_subject, gt_subject).min(viou(pred_object, gt_object))
}
