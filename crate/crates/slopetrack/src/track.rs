//! Closed polyline track: nearest-point and arc-length queries, look-ahead,
//! and reference-state generation for path tracking.
//!
//! A track is a closed loop of waypoints traversed in index order (the
//! closing segment from the last waypoint back to the first is implicit).
//! Arc positions live in `[0, total_length)` and wrap. The signed
//! cross-track distance is positive to the left of the travel direction.

use crate::dynamics::{wrap_angle, VehicleState};
use crate::error::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Track {
    waypoints: Vec<[f64; 2]>,
    /// cum_arc[i] is the arc position of waypoints[i]; cum_arc[n] closes the
    /// loop and equals the total length.
    cum_arc: Vec<f64>,
    total_length: f64,
    desired_speed: f64,
}

/// Result of a nearest-point query.
#[derive(Debug, Clone, Copy)]
pub struct PathQuery {
    /// Closest point on the track.
    pub point: [f64; 2],
    /// Arc position of that point, in `[0, total_length)`.
    pub arc_position: f64,
    /// Unsigned distance to the track.
    pub cross_track: f64,
    /// Signed distance, positive left of the travel direction. Diagnostic;
    /// cost metrics use the unsigned value.
    pub signed_cross_track: f64,
    /// Unit tangent of the segment containing the closest point.
    pub tangent: [f64; 2],
}

impl Track {
    /// Build a track from an ordered waypoint loop. A duplicated closing
    /// waypoint is dropped. Fails on fewer than three distinct points or on
    /// zero-length segments.
    pub fn new(mut waypoints: Vec<[f64; 2]>, desired_speed: f64) -> Result<Track> {
        if let (Some(first), Some(last)) = (waypoints.first(), waypoints.last()) {
            if waypoints.len() > 1 && dist(*first, *last) < 1e-12 {
                waypoints.pop();
            }
        }
        if waypoints.len() < 3 {
            return Err(Error::InvalidTrack(format!(
                "need at least 3 distinct waypoints, got {}",
                waypoints.len()
            )));
        }
        if waypoints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrack("non-finite waypoint".into()));
        }
        let n = waypoints.len();
        let mut cum_arc = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cum_arc.push(0.0);
        for i in 0..n {
            let len = dist(waypoints[i], waypoints[(i + 1) % n]);
            if len < 1e-9 {
                return Err(Error::InvalidTrack(format!("zero-length segment at waypoint {i}")));
            }
            acc += len;
            cum_arc.push(acc);
        }
        Ok(Track { waypoints, cum_arc, total_length: acc, desired_speed })
    }

    /// Default closed course: two straights joined by semicircles, fitting a
    /// `length x width` bounding box in its own axes, sampled at `spacing`
    /// and rotated by `orientation` in the slope plane. The rotation keeps
    /// both slip directions loaded on the incline's straights, which the
    /// online identification relies on.
    pub fn stadium(
        length: f64,
        width: f64,
        spacing: f64,
        orientation: f64,
        desired_speed: f64,
    ) -> Result<Track> {
        if !(length.is_finite() && width.is_finite() && spacing.is_finite()) {
            return Err(Error::InvalidTrack("non-finite stadium dimensions".into()));
        }
        if width <= 0.0 || length < width {
            return Err(Error::InvalidTrack(format!(
                "stadium needs 0 < width <= length, got {length} x {width}"
            )));
        }
        let radius = width / 2.0;
        let straight = length - width;
        let perimeter = 2.0 * straight + std::f64::consts::TAU * radius;
        if spacing <= 0.0 || spacing > perimeter / 8.0 {
            return Err(Error::InvalidTrack(format!(
                "spacing {spacing} too coarse for perimeter {perimeter}"
            )));
        }
        let count = (perimeter / spacing).round() as usize;
        let step = perimeter / count as f64;
        let half = straight / 2.0;
        let (sin_o, cos_o) = orientation.sin_cos();

        let mut pts = Vec::with_capacity(count);
        for i in 0..count {
            let s = i as f64 * step;
            let p = if s < straight {
                [-half + s, -radius]
            } else if s < straight + std::f64::consts::PI * radius {
                let theta = -std::f64::consts::FRAC_PI_2 + (s - straight) / radius;
                [half + radius * theta.cos(), radius * theta.sin()]
            } else if s < 2.0 * straight + std::f64::consts::PI * radius {
                let u = s - straight - std::f64::consts::PI * radius;
                [half - u, radius]
            } else {
                let u = s - 2.0 * straight - std::f64::consts::PI * radius;
                let theta = std::f64::consts::FRAC_PI_2 + u / radius;
                [-half + radius * theta.cos(), radius * theta.sin()]
            };
            pts.push([p[0] * cos_o - p[1] * sin_o, p[0] * sin_o + p[1] * cos_o]);
        }
        Track::new(pts, desired_speed)
    }

    /// Load waypoints from a plain text file, one `x y` pair per line.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_file(path: &Path, desired_speed: f64) -> Result<Track> {
        let text = std::fs::read_to_string(path)?;
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.ok_or_else(|| {
                    Error::InvalidTrack(format!("line {}: expected two numbers", lineno + 1))
                })?
                .parse::<f64>()
                .map_err(|e| Error::InvalidTrack(format!("line {}: {e}", lineno + 1)))
            };
            let x = parse(it.next())?;
            let y = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::InvalidTrack(format!(
                    "line {}: expected exactly two numbers",
                    lineno + 1
                )));
            }
            pts.push([x, y]);
        }
        Track::new(pts, desired_speed)
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn desired_speed(&self) -> f64 {
        self.desired_speed
    }

    pub fn waypoints(&self) -> &[[f64; 2]] {
        &self.waypoints
    }

    /// Closest point on the track to `pos`. Exact distance ties resolve to
    /// the lowest arc position because the scan keeps the first strict
    /// improvement.
    pub fn nearest(&self, pos: [f64; 2]) -> PathQuery {
        let n = self.waypoints.len();
        let mut best = PathQuery {
            point: self.waypoints[0],
            arc_position: 0.0,
            cross_track: f64::INFINITY,
            signed_cross_track: f64::INFINITY,
            tangent: [1.0, 0.0],
        };
        let mut best_d2 = f64::INFINITY;
        for i in 0..n {
            let a = self.waypoints[i];
            let b = self.waypoints[(i + 1) % n];
            let seg = [b[0] - a[0], b[1] - a[1]];
            let seg_len2 = seg[0] * seg[0] + seg[1] * seg[1];
            let t = (((pos[0] - a[0]) * seg[0] + (pos[1] - a[1]) * seg[1]) / seg_len2)
                .clamp(0.0, 1.0);
            let proj = [a[0] + t * seg[0], a[1] + t * seg[1]];
            let d = [pos[0] - proj[0], pos[1] - proj[1]];
            let d2 = d[0] * d[0] + d[1] * d[1];
            if d2 < best_d2 {
                best_d2 = d2;
                let seg_len = seg_len2.sqrt();
                let tangent = [seg[0] / seg_len, seg[1] / seg_len];
                let signed = tangent[0] * d[1] - tangent[1] * d[0];
                best = PathQuery {
                    point: proj,
                    arc_position: (self.cum_arc[i] + t * seg_len) % self.total_length,
                    cross_track: d2.sqrt(),
                    signed_cross_track: signed,
                    tangent,
                };
            }
        }
        best
    }

    /// Point at a (wrapping) arc position.
    pub fn point_at_arc(&self, arc: f64) -> [f64; 2] {
        let (i, t) = self.locate(arc);
        let a = self.waypoints[i];
        let b = self.waypoints[(i + 1) % self.waypoints.len()];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Unit tangent at a (wrapping) arc position.
    pub fn tangent_at_arc(&self, arc: f64) -> [f64; 2] {
        let (i, _) = self.locate(arc);
        let a = self.waypoints[i];
        let b = self.waypoints[(i + 1) % self.waypoints.len()];
        let len = dist(a, b);
        [(b[0] - a[0]) / len, (b[1] - a[1]) / len]
    }

    /// Point `lookahead` meters further along the track than the nearest
    /// point to `pos`, wrapping around the loop.
    pub fn lookahead(&self, pos: [f64; 2], lookahead: f64) -> [f64; 2] {
        let q = self.nearest(pos);
        self.point_at_arc(q.arc_position + lookahead)
    }

    /// `n` reference states marching along the track from the point nearest
    /// `pos`, one control period apart at the desired speed. Each reference
    /// carries the on-path position, the tangential velocity vector, and the
    /// tangent heading; the reference heading rate is zero (inert under the
    /// default tracking weights).
    pub fn reference_states(&self, pos: [f64; 2], n: usize, dt: f64) -> Vec<VehicleState> {
        let start = self.nearest(pos).arc_position;
        (1..=n)
            .map(|i| {
                let arc = start + self.desired_speed * dt * i as f64;
                let p = self.point_at_arc(arc);
                let t = self.tangent_at_arc(arc);
                VehicleState {
                    x: p[0],
                    y: p[1],
                    vx: self.desired_speed * t[0],
                    vy: self.desired_speed * t[1],
                    psi: t[1].atan2(t[0]),
                    psi_dot: 0.0,
                }
            })
            .collect()
    }

    /// Segment index and interpolation parameter for a wrapped arc position.
    fn locate(&self, arc: f64) -> (usize, f64) {
        let s = arc.rem_euclid(self.total_length);
        // partition_point returns the first index with cum_arc > s; the
        // segment is the one before it.
        let i = self.cum_arc.partition_point(|&c| c <= s).saturating_sub(1);
        let i = i.min(self.waypoints.len() - 1);
        let seg_len = self.cum_arc[i + 1] - self.cum_arc[i];
        (i, (s - self.cum_arc[i]) / seg_len)
    }
}

/// Signed angle from the body heading to the line of sight toward `target`,
/// in `(-pi, pi]`; positive when the target lies to the left.
pub fn intersection_angle(x: f64, y: f64, psi: f64, target: [f64; 2]) -> f64 {
    wrap_angle((target[1] - y).atan2(target[0] - x) - psi)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
