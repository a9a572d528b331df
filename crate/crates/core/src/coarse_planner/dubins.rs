//! Forward-only shortest paths with bounded curvature, used to close the gap
//! between a search node and the goal pose exactly.

use std::f64::consts::PI;

use crate::geometry::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Turn {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub turn: Turn,
    /// Arc length in meters.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DubinsPath {
    pub radius: f64,
    pub segments: [Segment; 3],
}

impl DubinsPath {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn curvature_of(&self, turn: Turn) -> f64 {
        match turn {
            Turn::Left => 1.0 / self.radius,
            Turn::Straight => 0.0,
            Turn::Right => -1.0 / self.radius,
        }
    }
}

fn mod2pi(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

/// Normalized segment lengths (in radii) for one word, if it exists.
fn word(kind: [Turn; 3], d: f64, alpha: f64, beta: f64) -> Option<[f64; 3]> {
    use Turn::*;
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let cab = (alpha - beta).cos();
    match kind {
        [Left, Straight, Left] => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (cb - ca).atan2(d + sa - sb);
            Some([mod2pi(-alpha + tmp), p2.sqrt(), mod2pi(beta - tmp)])
        }
        [Right, Straight, Right] => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (ca - cb).atan2(d - sa + sb);
            Some([mod2pi(alpha - tmp), p2.sqrt(), mod2pi(-beta + tmp)])
        }
        [Left, Straight, Right] => {
            let p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([mod2pi(-alpha + tmp), p, mod2pi(-beta + tmp)])
        }
        [Right, Straight, Left] => {
            let p2 = d * d - 2.0 + 2.0 * cab - 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([mod2pi(alpha - tmp), p, mod2pi(beta - tmp)])
        }
        [Right, Left, Right] => {
            let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(2.0 * PI - tmp.acos());
            let t = mod2pi(alpha - (ca - cb).atan2(d - sa + sb) + 0.5 * p);
            Some([t, p, mod2pi(alpha - beta - t + p)])
        }
        [Left, Right, Left] => {
            let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(2.0 * PI - tmp.acos());
            let t = mod2pi(-alpha - (ca - cb).atan2(d + sa - sb) + 0.5 * p);
            Some([t, p, mod2pi(beta - alpha - t + p)])
        }
        _ => None,
    }
}

const WORDS: [[Turn; 3]; 6] = {
    use Turn::*;
    [
        [Left, Straight, Left],
        [Right, Straight, Right],
        [Left, Straight, Right],
        [Right, Straight, Left],
        [Right, Left, Right],
        [Left, Right, Left],
    ]
};

/// All feasible words from `from` to `to`, shortest first.
pub fn dubins_paths(from: Pose, to: Pose, radius: f64) -> Vec<DubinsPath> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let d = dx.hypot(dy) / radius;
    let heading = if d > 0.0 { dy.atan2(dx) } else { 0.0 };
    let alpha = mod2pi(from.theta - heading);
    let beta = mod2pi(to.theta - heading);
    let mut out: Vec<DubinsPath> = WORDS
        .iter()
        .filter_map(|kind| {
            word(*kind, d, alpha, beta).map(|lens| DubinsPath {
                radius,
                segments: [0, 1, 2].map(|i| Segment { turn: kind[i], length: lens[i] * radius }),
            })
        })
        .collect();
    out.sort_by(|a, b| a.length().total_cmp(&b.length()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::advance_pose;

    fn end_pose(from: Pose, path: &DubinsPath) -> Pose {
        path.segments
            .iter()
            .fold(from, |p, seg| advance_pose(p, path.curvature_of(seg.turn), seg.length))
    }

    fn angle_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    }

    #[test]
    fn straight_ahead_is_a_line() {
        let paths = dubins_paths(Pose::new(0.0, 0.0, 0.0), Pose::new(10.0, 0.0, 0.0), 3.0);
        assert!((paths[0].length() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn every_word_reaches_the_goal() {
        let cases = [
            (Pose::new(0.0, 0.0, 0.0), Pose::new(5.0, 4.0, 1.2)),
            (Pose::new(1.0, -2.0, 2.5), Pose::new(-3.0, 6.0, -0.4)),
            (Pose::new(0.0, 0.0, 0.0), Pose::new(1.0, 0.5, 3.0)),
            (Pose::new(0.0, 0.0, 0.3), Pose::new(20.0, -7.0, 0.3)),
        ];
        for (from, to) in cases {
            let paths = dubins_paths(from, to, 3.3);
            assert!(!paths.is_empty());
            for p in &paths {
                let e = end_pose(from, p);
                assert!((e.x - to.x).abs() < 1e-9 && (e.y - to.y).abs() < 1e-9, "{p:?} -> {e:?}");
                assert!(angle_diff(e.theta, to.theta) < 1e-9);
            }
            // Shortest is no longer than the straight-line distance lower bound.
            assert!(paths[0].length() >= from.position().distance(to.position()) - 1e-9);
        }
    }
}
